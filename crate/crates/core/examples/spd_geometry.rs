//! Geodesic distances, log/exp maps and the Karcher mean of random SPD matrices.

use cov3d::spd::{exp_map, geodesic_distance, karcher_mean, log_map, sample_spd, SpdMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cov3d::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = 5;
    let x = sample_spd(&mut rng, d, 0.1);
    let y = sample_spd(&mut rng, d, 0.1);

    println!("d(X, Y) = {:.6}", geodesic_distance(&x, &y)?);
    let back = exp_map(&x, &log_map(&x, &y)?)?;
    println!("|exp_X(log_X Y) - Y| = {:.2e}", (back.matrix() - y.matrix()).abs().max());

    let scaled = SpdMatrix::new(nalgebra::DMatrix::identity(d, d) * std::f64::consts::E)?;
    println!("d(I, eI) = {:.12} (sqrt d = {:.12})", geodesic_distance(&SpdMatrix::identity(d), &scaled)?, (d as f64).sqrt());

    let points: Vec<SpdMatrix> = (0..12).map(|_| sample_spd(&mut rng, d, 0.1)).collect();
    let weights = vec![1.0; points.len()];
    let mean = karcher_mean(&points, &weights)?;
    let cost = |m: &SpdMatrix| -> cov3d::Result<f64> {
        points.iter().map(|p| Ok(geodesic_distance(m, p)?.powi(2))).sum()
    };
    println!(
        "Karcher mean after {} iterations (converged: {}), cost {:.6}",
        mean.iterations,
        mean.converged,
        cost(&mean.mean)?
    );
    println!("cost at the first point       {:.6}", cost(&points[0])?);
    Ok(())
}
