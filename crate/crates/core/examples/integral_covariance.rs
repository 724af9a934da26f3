//! Window covariances from integral tensors, checked against a direct computation.

use std::time::Instant;

use cov3d::features::FeatureVideo;
use cov3d::integral::build_integral_tensors;
use cov3d::Window;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn direct(f: &FeatureVideo, w: &Window) -> DMatrix<f64> {
    let d = f.dim();
    let mut cells = Vec::new();
    for t in w.t1..=w.t2 {
        for y in w.y1..=w.y2 {
            for x in w.x1..=w.x2 {
                cells.push(f.at(x, y, t).to_vec());
            }
        }
    }
    let n = cells.len() as f64;
    let mean: Vec<f64> = (0..d).map(|i| cells.iter().map(|c| c[i]).sum::<f64>() / n).collect();
    DMatrix::from_fn(d, d, |i, j| {
        cells.iter().map(|c| (c[i] - mean[i]) * (c[j] - mean[j])).sum::<f64>() / (n - 1.0)
    })
}

fn main() -> cov3d::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (w, h, t, d) = (32, 24, 12, 6);
    let data = (0..w * h * t * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let features = FeatureVideo::new(w, h, t, d, data)?;

    let start = Instant::now();
    let tensors = build_integral_tensors(&features)?;
    println!("integral tensors built in {:.2} ms", start.elapsed().as_secs_f64() * 1e3);

    let mut worst: f64 = 0.0;
    let start = Instant::now();
    for _ in 0..1000 {
        let (x1, x2) = sorted_pair(&mut rng, w);
        let (y1, y2) = sorted_pair(&mut rng, h);
        let (t1, t2) = sorted_pair(&mut rng, t);
        let win = Window::new(x1, y1, t1, x2, y2, t2);
        if win.volume() < 2 {
            continue;
        }
        let fast = tensors.window_covariance(&win)?;
        worst = worst.max((fast - direct(&features, &win)).abs().max());
    }
    println!("1000 windows in {:.2} ms, max abs error {worst:.2e}", start.elapsed().as_secs_f64() * 1e3);
    Ok(())
}

fn sorted_pair(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
    (a.min(b), a.max(b))
}
