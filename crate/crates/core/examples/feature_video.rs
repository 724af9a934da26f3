//! Builds the 15-channel feature video of a moving bar and prints per-channel means.

use cov3d::features::{build_feature_video, CHANNEL_U, CHANNEL_V};
use cov3d::harness::synth::{generate_videos, Motion, SyntheticSpec};

fn main() -> cov3d::Result<()> {
    let spec = SyntheticSpec::bars(&[Motion::Right, Motion::Down], 1, (24, 24, 8), 5);
    for sample in generate_videos(&spec)? {
        let features = build_feature_video(&sample.to_video()?);
        let (w, h, t) = features.dims();
        let cells = (w * h * t) as f64;
        let mut mean = vec![0.0; features.dim()];
        for cell in features.data().chunks(features.dim()) {
            for (m, v) in mean.iter_mut().zip(cell) {
                *m += v / cells;
            }
        }
        println!("{} ({w}x{h}x{t})", sample.label);
        println!("  mean flow u {:+.4}  v {:+.4}", mean[CHANNEL_U], mean[CHANNEL_V]);
        let rendered: Vec<String> = mean.iter().map(|m| format!("{m:+.3}")).collect();
        println!("  channel means {}", rendered.join(" "));
    }
    Ok(())
}
