//! Trains a small model, saves it, reloads it and compares scores.

use cov3d::boost::{train_multiclass, BoostConfig, LabeledVideo};
use cov3d::harness::eval::prepare_video;
use cov3d::harness::persist::{load_model, save_model, summarize};
use cov3d::harness::synth::{generate_videos, Motion, SyntheticSpec};
use cov3d::windows::WindowGrid;

fn main() -> cov3d::Result<()> {
    let spec = SyntheticSpec::bars(&[Motion::Left, Motion::Right, Motion::Up], 6, (16, 16, 8), 2);
    let samples = generate_videos(&spec)?;
    let videos = samples
        .iter()
        .map(|s| prepare_video(&s.to_video()?))
        .collect::<cov3d::Result<Vec<_>>>()?;
    let training: Vec<LabeledVideo> = videos
        .iter()
        .zip(&samples)
        .map(|(video, s)| LabeledVideo { video, label: &s.label })
        .collect();
    let config = BoostConfig {
        grid: WindowGrid {
            min_frac: 0.25,
            step_frac: 0.25,
        },
        window_subsample: 50,
        ..Default::default()
    };
    let model = train_multiclass(&training, &config)?;

    let dir = std::env::temp_dir().join(format!("cov3d-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| cov3d::Error::Io {
        context: dir.display().to_string(),
        source: e,
    })?;
    let path = dir.join("model.json");
    save_model(&model, &path)?;
    let loaded = load_model(&path)?;

    let mut worst: f64 = 0.0;
    for v in &videos {
        for (a, b) in model.scores(v)?.iter().zip(loaded.scores(v)?) {
            worst = worst.max((a - b).abs());
        }
    }
    let summary = summarize(&loaded);
    println!("saved {} classifiers to {}", summary.classifiers.len(), path.display());
    for c in &summary.classifiers {
        println!("  {} vs {}: {} rounds, threshold {:+.6}", c.positive_label, c.negative_label, c.rounds, c.threshold);
    }
    println!("max score difference after reload: {worst:e}");
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
