//! Fits a weighted projection on two clusters of SPD matrices and projects held-out points.

use cov3d::spd::{sample_spd, SpdMatrix};
use cov3d::wrlpp::{fit_wrlpp, WrlppParams};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cluster(rng: &mut ChaCha8Rng, centre: &SpdMatrix, n: usize) -> Vec<SpdMatrix> {
    let d = centre.dim();
    (0..n)
        .map(|_| {
            let noise = sample_spd(rng, d, 0.05).into_matrix() * 0.1;
            SpdMatrix::new(centre.matrix() + noise).expect("sum of SPD matrices")
        })
        .collect()
}

fn main() -> cov3d::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = 5;
    let a = SpdMatrix::identity(d);
    let b = SpdMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |i, _| 1.0 + i as f64)))?;

    let mut points = cluster(&mut rng, &a, 15);
    points.extend(cluster(&mut rng, &b, 15));
    let labels: Vec<usize> = (0..30).map(|i| usize::from(i >= 15)).collect();
    let weights: Vec<f64> = (0..30).map(|_| rng.random_range(0.5..1.5)).collect();

    let params = WrlppParams {
        dim: Some(3),
        ..Default::default()
    };
    let model = fit_wrlpp(&points, &labels, &weights, params)?;
    println!("sigma {:.4}, eigenvalues {:?}", model.sigma, model.eigenvalues);

    for (name, centre) in [("class 0", &a), ("class 1", &b)] {
        for p in cluster(&mut rng, centre, 2) {
            let y = model.project(&p)?;
            let shown: Vec<String> = y.iter().map(|v| format!("{v:+.4}")).collect();
            println!("{name}: [{}]", shown.join(", "));
        }
    }
    Ok(())
}
