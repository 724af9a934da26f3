//! One-vs-one combination of binary classifiers.

use super::binary::{train_binary, BinaryClassifier, BoostConfig, PairData};
use super::logitboost::probability;
use crate::error::{Error, Result};
use crate::integral::DescriptorExtractor;

/// A labelled training video.
#[derive(Clone, Copy)]
pub struct LabeledVideo<'a> {
    pub video: &'a DescriptorExtractor,
    pub label: &'a str,
}

/// All pairwise classifiers over a sorted label set.
#[derive(Debug, Clone)]
pub struct MulticlassModel {
    pub labels: Vec<String>,
    pub classifiers: Vec<BinaryClassifier>,
    pub config: BoostConfig,
    /// `(W, H, T)` of the training videos.
    pub dims: (usize, usize, usize),
}

impl MulticlassModel {
    pub fn new(
        labels: Vec<String>,
        classifiers: Vec<BinaryClassifier>,
        config: BoostConfig,
        dims: (usize, usize, usize),
    ) -> Result<Self> {
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != labels || labels.len() < 2 {
            return Err(Error::InvalidParameter(
                "labels must be sorted, unique and at least two".into(),
            ));
        }
        let n = labels.len();
        if classifiers.len() != n * (n - 1) / 2 {
            return Err(Error::InvalidParameter(format!(
                "{n} classes need {} pairwise classifiers, got {}",
                n * (n - 1) / 2,
                classifiers.len()
            )));
        }
        for (c, (a, b)) in classifiers.iter().zip(pairs(n)) {
            let expected = (labels[a].as_str(), labels[b].as_str());
            if (c.positive_label.as_str(), c.negative_label.as_str()) != expected {
                return Err(Error::InvalidParameter(format!(
                    "classifier for ({}, {}) is out of order",
                    c.positive_label, c.negative_label
                )));
            }
        }
        Ok(MulticlassModel {
            labels,
            classifiers,
            config,
            dims,
        })
    }

    /// Scores `C_<k,l>(V)` of every pairwise classifier, in pair order.
    pub fn scores(&self, video: &DescriptorExtractor) -> Result<Vec<f64>> {
        self.classifiers.iter().map(|c| c.score(video)).collect()
    }

    /// Per-class probability sums: every classifier adds the probability
    /// `e^C / (e^C + e^-C)` of the class it votes for to that class. A score
    /// of exactly zero votes for neither class.
    pub fn vote_totals(&self, scores: &[f64]) -> Vec<f64> {
        let mut totals = vec![0.0; self.labels.len()];
        for (&s, (a, b)) in scores.iter().zip(pairs(self.labels.len())) {
            // Class a is the positive label of its pair.
            if s > 0.0 {
                totals[a] += probability(s);
            } else if s < 0.0 {
                totals[b] += probability(-s);
            }
        }
        totals
    }

    /// Index into `labels` of the predicted class.
    pub fn predict_index(&self, video: &DescriptorExtractor) -> Result<usize> {
        Ok(argmax_lowest(&self.vote_totals(&self.scores(video)?)))
    }

    pub fn predict(&self, video: &DescriptorExtractor) -> Result<&str> {
        Ok(&self.labels[self.predict_index(video)?])
    }
}

/// Unordered pairs `(a, b)`, `a < b`, in lexicographic order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |a| (a + 1..n).map(move |b| (a, b)))
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Trains one classifier per class pair; the lexicographically smaller
/// label of each pair is its positive class.
pub fn train_multiclass(samples: &[LabeledVideo<'_>], config: &BoostConfig) -> Result<MulticlassModel> {
    let mut labels: Vec<String> = samples.iter().map(|s| s.label.to_string()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::InvalidParameter("training needs at least two classes".into()));
    }
    let dims = samples[0].video.dims();
    let mut classifiers = Vec::new();
    for (salt, (a, b)) in pairs(labels.len()).enumerate() {
        let subset: Vec<&LabeledVideo> = samples
            .iter()
            .filter(|s| s.label == labels[a] || s.label == labels[b])
            .collect();
        let videos: Vec<&DescriptorExtractor> = subset.iter().map(|s| s.video).collect();
        let positives: Vec<bool> = subset.iter().map(|s| s.label == labels[a]).collect();
        let data = PairData {
            videos: &videos,
            positives: &positives,
            positive_label: &labels[a],
            negative_label: &labels[b],
        };
        classifiers.push(train_binary(&data, config, salt as u64)?);
    }
    MulticlassModel::new(labels, classifiers, config.clone(), dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_order() {
        assert_eq!(pairs(3).collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax_lowest(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(argmax_lowest(&[0.0, 2.0, 2.0]), 1);
    }

    /// Voting only looks at the labels.
    fn model(labels: &[&str]) -> MulticlassModel {
        MulticlassModel {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            classifiers: Vec::new(),
            config: BoostConfig::default(),
            dims: (2, 2, 2),
        }
    }

    #[test]
    fn votes_add_the_probability_of_the_chosen_class() {
        let m = model(&["a", "b", "c"]);
        // (a, b) votes a, (a, c) votes c, (b, c) abstains.
        let totals = m.vote_totals(&[1.0, -0.5, 0.0]);
        assert!((totals[0] - probability(1.0)).abs() < 1e-15);
        assert_eq!(totals[1], 0.0);
        assert!((totals[2] - probability(0.5)).abs() < 1e-15);
        assert_eq!(argmax_lowest(&m.vote_totals(&[0.0, 0.0, 0.0])), 0);
    }

    #[test]
    fn two_classes_follow_the_sign() {
        let m = model(&["a", "b"]);
        assert_eq!(argmax_lowest(&m.vote_totals(&[0.3])), 0);
        assert_eq!(argmax_lowest(&m.vote_totals(&[-0.3])), 1);
    }
}
