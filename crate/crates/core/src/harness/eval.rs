//! Stratified k-fold cross-validation of the one-vs-one classifier.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::DatasetManifest;
use crate::boost::{train_multiclass, BoostConfig, LabeledVideo};
use crate::error::{Error, Result};
use crate::features::{build_feature_video, Video};
use crate::integral::DescriptorExtractor;

/// Feature video and integral tensors of one video.
pub fn prepare_video(video: &Video) -> Result<DescriptorExtractor> {
    DescriptorExtractor::from_features(&build_feature_video(video))
}

pub fn prepare_videos(videos: &[Video]) -> Result<Vec<DescriptorExtractor>> {
    videos.par_iter().map(prepare_video).collect()
}

/// Published accuracy quoted for context only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiteratureValue {
    pub dataset: String,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
}

pub fn literature_values() -> Vec<LiteratureValue> {
    vec![
        LiteratureValue {
            dataset: "UCF sports".into(),
            accuracy: 0.9391,
            spread: None,
        },
        LiteratureValue {
            dataset: "Cambridge hand gestures".into(),
            accuracy: 0.93,
            spread: Some(0.011),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub accuracy: f64,
    /// Per-class recognition rate; `None` when the class is absent from the fold.
    pub class_rates: Vec<Option<f64>>,
    pub train_seconds: f64,
    pub test_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub features_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub labels: Vec<String>,
    /// Per-class recognition rate averaged over the folds containing the class.
    pub class_rates: Vec<f64>,
    pub overall_accuracy: f64,
    /// `confusion[true][predicted]` sample counts.
    pub confusion: Vec<Vec<usize>>,
    pub folds: Vec<FoldResult>,
    pub timings: Timings,
    pub literature: Vec<LiteratureValue>,
}

/// Fold id of every sample: each class is shuffled with `seed` and dealt
/// round-robin over the folds.
pub fn stratified_folds(labels: &[String], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidParameter("cross-validation needs at least 2 folds".into()));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    for (label, mut members) in by_class {
        if members.len() < folds {
            return Err(Error::ClassTooSmall {
                label: label.to_string(),
                count: members.len(),
                folds,
            });
        }
        members.shuffle(&mut rng);
        for (k, i) in members.into_iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    Ok(assignment)
}

/// Cross-validates on prepared videos; `fold_ids` overrides the stratified split.
pub fn cross_validate(
    videos: &[DescriptorExtractor],
    labels: &[String],
    config: &BoostConfig,
    folds: usize,
    seed: u64,
    fold_ids: Option<&[usize]>,
) -> Result<EvalReport> {
    let start = Instant::now();
    if videos.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: videos.len(),
            found: labels.len(),
        });
    }
    let assignment = match fold_ids {
        Some(ids) => {
            if ids.len() != labels.len() {
                return Err(Error::DimensionMismatch {
                    expected: labels.len(),
                    found: ids.len(),
                });
            }
            ids.to_vec()
        }
        None => stratified_folds(labels, folds, seed)?,
    };
    let mut fold_list: Vec<usize> = assignment.clone();
    fold_list.sort_unstable();
    fold_list.dedup();

    let mut names: Vec<String> = labels.to_vec();
    names.sort();
    names.dedup();
    let class_of = |l: &str| names.binary_search_by(|n| n.as_str().cmp(l)).expect("known label");
    let mut confusion = vec![vec![0usize; names.len()]; names.len()];
    let mut fold_results = Vec::new();

    for &fold in &fold_list {
        let train: Vec<LabeledVideo> = (0..videos.len())
            .filter(|&i| assignment[i] != fold)
            .map(|i| LabeledVideo {
                video: &videos[i],
                label: &labels[i],
            })
            .collect();
        let test: Vec<usize> = (0..videos.len()).filter(|&i| assignment[i] == fold).collect();

        let t0 = Instant::now();
        let model = train_multiclass(&train, config)?;
        let train_seconds = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let predictions = test
            .par_iter()
            .map(|&i| model.predict(&videos[i]).map(str::to_string))
            .collect::<Result<Vec<_>>>()?;
        let test_seconds = t1.elapsed().as_secs_f64();

        let mut hits = vec![0usize; names.len()];
        let mut counts = vec![0usize; names.len()];
        let mut correct = 0;
        for (&i, predicted) in test.iter().zip(&predictions) {
            let truth = class_of(&labels[i]);
            counts[truth] += 1;
            confusion[truth][class_of(predicted)] += 1;
            if *predicted == labels[i] {
                hits[truth] += 1;
                correct += 1;
            }
        }
        fold_results.push(FoldResult {
            fold,
            train_size: train.len(),
            test_size: test.len(),
            accuracy: correct as f64 / test.len().max(1) as f64,
            class_rates: hits
                .iter()
                .zip(&counts)
                .map(|(&h, &c)| (c > 0).then(|| h as f64 / c as f64))
                .collect(),
            train_seconds,
            test_seconds,
        });
    }

    let class_rates = (0..names.len())
        .map(|c| {
            let rates: Vec<f64> = fold_results.iter().filter_map(|f| f.class_rates[c]).collect();
            rates.iter().sum::<f64>() / rates.len().max(1) as f64
        })
        .collect();
    let total: usize = confusion.iter().flatten().sum();
    let diagonal: usize = (0..names.len()).map(|c| confusion[c][c]).sum();
    Ok(EvalReport {
        labels: names,
        class_rates,
        overall_accuracy: diagonal as f64 / total.max(1) as f64,
        confusion,
        folds: fold_results,
        timings: Timings {
            features_seconds: 0.0,
            total_seconds: start.elapsed().as_secs_f64(),
        },
        literature: literature_values(),
    })
}

/// Loads every manifest entry and cross-validates; manifest fold ids win
/// over the stratified split when present.
pub fn cross_validate_manifest(
    manifest: &DatasetManifest,
    config: &BoostConfig,
    folds: usize,
    seed: u64,
) -> Result<EvalReport> {
    let start = Instant::now();
    let videos = manifest
        .entries
        .par_iter()
        .map(|e| prepare_video(&manifest.load_entry(e)?))
        .collect::<Result<Vec<_>>>()?;
    let features_seconds = start.elapsed().as_secs_f64();
    let labels: Vec<String> = manifest.entries.iter().map(|e| e.label.clone()).collect();
    let fold_ids: Option<Vec<usize>> = manifest.entries.iter().map(|e| e.fold).collect();
    let mut report = cross_validate(&videos, &labels, config, folds, seed, fold_ids.as_deref())?;
    report.timings.features_seconds = features_seconds;
    report.timings.total_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
