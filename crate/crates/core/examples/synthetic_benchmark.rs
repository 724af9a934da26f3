//! Five-fold cross-validation on the three-class moving-bar dataset.
//!
//! Usage: `synthetic_benchmark [window_subsample] [seed]`; a subsample of 0
//! searches the full window grid.

use std::time::Instant;

use cov3d::boost::BoostConfig;
use cov3d::harness::eval::{cross_validate, prepare_videos};
use cov3d::harness::synth::{generate_videos, Motion, SyntheticSpec};

fn main() -> cov3d::Result<()> {
    let arg = |i: usize, default: u64| std::env::args().nth(i).and_then(|a| a.parse().ok()).unwrap_or(default);
    let (subsample, seed) = (arg(1, 100) as usize, arg(2, 0));
    let start = Instant::now();
    let spec = SyntheticSpec::bars(&[Motion::Left, Motion::Right, Motion::Up], 30, (32, 32, 16), seed);
    let samples = generate_videos(&spec)?;
    let frames = samples.iter().map(|s| s.to_video()).collect::<cov3d::Result<Vec<_>>>()?;
    let videos = prepare_videos(&frames)?;
    let labels: Vec<String> = samples.iter().map(|s| s.label.clone()).collect();
    println!("features: {:.1}s", start.elapsed().as_secs_f64());

    let config = BoostConfig {
        window_subsample: subsample,
        seed,
        ..Default::default()
    };
    let report = cross_validate(&videos, &labels, &config, 5, seed, None)?;
    for (label, rate) in report.labels.iter().zip(&report.class_rates) {
        println!("{label:>6}: {rate:.3}");
    }
    for f in &report.folds {
        println!("fold {} accuracy {:.3}, trained in {:.1}s", f.fold, f.accuracy, f.train_seconds);
    }
    println!("accuracy {:.4}", report.overall_accuracy);
    println!("total {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
