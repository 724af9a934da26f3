//! Held-out DET curves of the moving-bar class pairs under two descriptor mappings.
//!
//! Usage: `det_curves [window_subsample] [seed]`.

use cov3d::boost::{det_curve, miss_rate_at, train_binary, BoostConfig, Mapper, PairData};
use cov3d::harness::eval::{prepare_video, stratified_folds};
use cov3d::harness::synth::{generate_videos, Motion, SyntheticSpec};
use cov3d::DescriptorExtractor;

fn main() -> cov3d::Result<()> {
    let arg = |i: usize, default: u64| std::env::args().nth(i).and_then(|a| a.parse().ok()).unwrap_or(default);
    let (subsample, seed) = (arg(1, 100) as usize, arg(2, 0));
    let spec = SyntheticSpec::bars(&[Motion::Left, Motion::Right, Motion::Up], 30, (32, 32, 16), seed);
    let samples = generate_videos(&spec)?;
    let videos = samples
        .iter()
        .map(|s| prepare_video(&s.to_video()?))
        .collect::<cov3d::Result<Vec<_>>>()?;
    let labels: Vec<String> = samples.iter().map(|s| s.label.clone()).collect();
    // A third of every class is held out.
    let folds = stratified_folds(&labels, 3, seed)?;
    let fprs = [0.0, 0.05, 0.1, 0.2, 0.5];

    for (pos, neg) in [("left", "right"), ("left", "up"), ("right", "up")] {
        let pick = |held_out: bool| -> (Vec<&DescriptorExtractor>, Vec<bool>) {
            (0..videos.len())
                .filter(|&i| (labels[i] == pos || labels[i] == neg) && (folds[i] == 0) == held_out)
                .map(|i| (&videos[i], labels[i] == pos))
                .unzip()
        };
        let (train_v, train_p) = pick(false);
        let (test_v, test_p) = pick(true);
        let data = PairData {
            videos: &train_v,
            positives: &train_p,
            positive_label: pos,
            negative_label: neg,
        };
        println!("{pos} vs {neg}");
        println!("  {:>5} {:>8} {:>8}", "fpr", "wrlpp", "upper");
        let mut curves = Vec::new();
        for mapper in [Mapper::Wrlpp, Mapper::UpperTriangle] {
            let config = BoostConfig {
                mapper,
                window_subsample: subsample,
                seed,
                ..Default::default()
            };
            let classifier = train_binary(&data, &config, 0)?;
            curves.push(det_curve(&classifier, &test_v, &test_p, 50)?);
        }
        for &fpr in &fprs {
            println!(
                "  {fpr:>5.2} {:>8.3} {:>8.3}",
                miss_rate_at(&curves[0], fpr),
                miss_rate_at(&curves[1], fpr)
            );
        }
    }
    Ok(())
}
