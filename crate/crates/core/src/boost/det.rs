//! Detection error trade-off curves of binary classifiers.

use serde::{Deserialize, Serialize};

use super::binary::BinaryClassifier;
use crate::error::{Error, Result};
use crate::integral::DescriptorExtractor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetPoint {
    pub threshold: f64,
    pub false_positive_rate: f64,
    pub miss_rate: f64,
}

/// DET curve of labelled scores; a sample is accepted when `score > threshold`.
///
/// Thresholds are `n_points` evenly spaced values spanning just below the
/// lowest score to the highest, merged with every distinct score so that
/// each achievable operating point appears. Output is sorted by threshold.
pub fn det_curve_from_scores(scores: &[f64], positives: &[bool], n_points: usize) -> Result<Vec<DetPoint>> {
    if scores.len() != positives.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: positives.len(),
        });
    }
    let n_pos = positives.iter().filter(|p| **p).count();
    let n_neg = positives.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidParameter("DET curve needs both classes".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("scores must be finite".into()));
    }
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let below = lo - 1e-9 * lo.abs().max(1.0);

    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.push(below);
    if n_points >= 2 {
        let step = (hi - below) / (n_points - 1) as f64;
        thresholds.extend((0..n_points).map(|i| below + step * i as f64));
    }
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    Ok(thresholds
        .into_iter()
        .map(|t| {
            let fp = scores.iter().zip(positives).filter(|(s, p)| !**p && **s > t).count();
            let miss = scores.iter().zip(positives).filter(|(s, p)| **p && **s <= t).count();
            DetPoint {
                threshold: t,
                false_positive_rate: fp as f64 / n_neg as f64,
                miss_rate: miss as f64 / n_pos as f64,
            }
        })
        .collect())
}

/// DET curve obtained by sweeping the threshold of `classifier` over the
/// additive scores `F(V)` of the given videos.
pub fn det_curve(
    classifier: &BinaryClassifier,
    videos: &[&DescriptorExtractor],
    positives: &[bool],
    n_points: usize,
) -> Result<Vec<DetPoint>> {
    let scores = videos
        .iter()
        .map(|v| classifier.raw_score(v))
        .collect::<Result<Vec<_>>>()?;
    det_curve_from_scores(&scores, positives, n_points)
}

/// Lowest miss rate reachable with a false positive rate of at most `fpr`.
pub fn miss_rate_at(curve: &[DetPoint], fpr: f64) -> f64 {
    curve
        .iter()
        .filter(|p| p.false_positive_rate <= fpr + 1e-12)
        .map(|p| p.miss_rate)
        .fold(1.0, f64::min)
}
