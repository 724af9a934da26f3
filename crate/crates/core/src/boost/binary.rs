//! One-vs-one LogitBoost over spatio-temporal windows.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logitboost::{
    evaluate_linear, fit_weak_learner, logitboost_responses, negative_log_likelihood, probability,
};
use super::mapping::{fit_projection, Mapper, Projection};
use crate::error::{Error, Result};
use crate::integral::{DescriptorExtractor, Window};
use crate::spd::SpdMatrix;
use crate::windows::WindowGrid;
use crate::wrlpp::{pairwise_distances, WrlppParams, DEFAULT_NEIGHBOURS};

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    /// Target detection rate locating the boundary positive.
    pub detection_rate: f64,
    /// Target false positive rejection rate locating the boundary negative.
    pub rejection_rate: f64,
    /// Boosting stops once `p(V_p) - p(V_n)` reaches this margin.
    pub margin: f64,
    pub max_iters: usize,
    pub neighbours: usize,
    pub projection_dim: Option<usize>,
    pub sigma: Option<f64>,
    pub grid: WindowGrid,
    /// Windows drawn per iteration; 0 searches the whole grid.
    pub window_subsample: usize,
    pub seed: u64,
    pub mapper: Mapper,
    /// Maximum number of per-window distance matrices kept across iterations.
    pub distance_cache_limit: usize,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            detection_rate: 0.95,
            rejection_rate: 0.95,
            margin: 0.5,
            max_iters: 20,
            neighbours: DEFAULT_NEIGHBOURS,
            projection_dim: None,
            sigma: None,
            grid: WindowGrid::default(),
            window_subsample: 0,
            seed: 0,
            mapper: Mapper::Wrlpp,
            distance_cache_limit: 4096,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        let rate = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        rate("detection_rate", self.detection_rate)?;
        rate("rejection_rate", self.rejection_rate)?;
        if !(0.0..1.0).contains(&self.margin) {
            return Err(Error::InvalidParameter(format!(
                "margin must lie in [0, 1), got {}",
                self.margin
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if self.neighbours == 0 {
            return Err(Error::InvalidParameter("neighbours must be at least 1".into()));
        }
        Ok(())
    }

    fn wrlpp_params(&self) -> WrlppParams {
        WrlppParams {
            neighbours: self.neighbours,
            dim: self.projection_dim,
            sigma: self.sigma,
        }
    }
}

/// One boosting round: a window, its fitted mapping and a linear regressor.
#[derive(Debug, Clone)]
pub struct WeakLearner {
    pub window: Window,
    pub projection: Projection,
    /// Intercept followed by one coefficient per mapped dimension.
    pub coeffs: Vec<f64>,
}

impl WeakLearner {
    /// `g_m` evaluated on a video.
    pub fn evaluate(&self, video: &DescriptorExtractor) -> Result<f64> {
        let descriptor = video.descriptor(&self.window)?;
        self.evaluate_descriptor(&descriptor)
    }

    pub fn evaluate_descriptor(&self, descriptor: &SpdMatrix) -> Result<f64> {
        let x = self.projection.apply(descriptor)?;
        Ok(evaluate_linear(&self.coeffs, &x))
    }
}

/// A trained one-vs-one classifier.
#[derive(Debug, Clone)]
pub struct BinaryClassifier {
    pub positive_label: String,
    pub negative_label: String,
    learners: Vec<WeakLearner>,
    pub threshold: f64,
    /// False when boosting hit the iteration cap without reaching the margin.
    pub separated: bool,
    /// Training negative log-likelihood before and after every round.
    pub nll_history: Vec<f64>,
}

impl BinaryClassifier {
    pub fn new(
        positive_label: String,
        negative_label: String,
        learners: Vec<WeakLearner>,
        threshold: f64,
    ) -> Result<Self> {
        if learners.is_empty() {
            return Err(Error::InvalidParameter("a classifier needs at least one weak learner".into()));
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidParameter("threshold must be finite".into()));
        }
        Ok(BinaryClassifier {
            positive_label,
            negative_label,
            learners,
            threshold,
            separated: true,
            nll_history: Vec::new(),
        })
    }

    pub fn learners(&self) -> &[WeakLearner] {
        &self.learners
    }

    /// Additive model `F(V) = 1/2 sum_m g_m(V)`, on the scale of the
    /// threshold `tau = F(V_n)`.
    pub fn raw_score(&self, video: &DescriptorExtractor) -> Result<f64> {
        let mut f = 0.0;
        for l in &self.learners {
            f += 0.5 * l.evaluate(video)?;
        }
        Ok(f)
    }

    /// Classifier output `sum_m g_m(V) - tau`, i.e. `2 F(V) - tau`;
    /// positive scores vote for the positive label.
    pub fn score(&self, video: &DescriptorExtractor) -> Result<f64> {
        Ok(self.score_from_additive(self.raw_score(video)?))
    }

    /// [`score`](Self::score) of a video whose additive model value `F(V)` is known.
    pub fn score_from_additive(&self, f: f64) -> f64 {
        2.0 * f - self.threshold
    }
}

/// Index of the `ceil(rate * n)`-th element (1-based), clamped to `[0, n)`.
fn boundary_index(rate: f64, n: usize) -> usize {
    let k = (rate * n as f64 - 1e-9).ceil().max(1.0) as usize;
    k.min(n) - 1
}

/// Boundary samples `(V_p, V_n)`: the last accepted positive when positives
/// are ranked by descending probability, and the last rejected negative
/// when negatives are ranked by ascending probability.
pub fn boundary_samples(
    probs: &[f64],
    positives: &[bool],
    detection_rate: f64,
    rejection_rate: f64,
) -> (usize, usize) {
    let mut pos: Vec<usize> = (0..probs.len()).filter(|&i| positives[i]).collect();
    let mut neg: Vec<usize> = (0..probs.len()).filter(|&i| !positives[i]).collect();
    pos.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    neg.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    (
        pos[boundary_index(detection_rate, pos.len())],
        neg[boundary_index(rejection_rate, neg.len())],
    )
}

struct Candidate {
    window_index: usize,
    nll: f64,
    responses: Vec<f64>,
    learner: WeakLearner,
}

type DistanceCache = Mutex<HashMap<usize, Arc<DMatrix<f64>>>>;

/// Training set of one class pair.
pub struct PairData<'a> {
    pub videos: &'a [&'a DescriptorExtractor],
    pub positives: &'a [bool],
    pub positive_label: &'a str,
    pub negative_label: &'a str,
}

/// Trains one binary classifier.
///
/// `salt` decorrelates the window subsampling of different pairs that share
/// a seed.
pub fn train_binary(data: &PairData<'_>, config: &BoostConfig, salt: u64) -> Result<BinaryClassifier> {
    config.validate()?;
    let n = data.videos.len();
    if data.positives.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: data.positives.len(),
        });
    }
    let n_pos = data.positives.iter().filter(|p| **p).count();
    if n_pos < 2 || n - n_pos < 2 {
        return Err(Error::PairTooSmall {
            positive: data.positive_label.to_string(),
            negative: data.negative_label.to_string(),
        });
    }
    let dims = data.videos[0].dims();
    if data.videos.iter().any(|v| v.dims() != dims) {
        return Err(Error::InvalidParameter("all videos must share the same dimensions".into()));
    }
    let windows = config.grid.enumerate(dims)?;
    let labels: Vec<usize> = data.positives.iter().map(|&p| usize::from(p)).collect();
    let cache: DistanceCache = Mutex::new(HashMap::new());

    let mut f = vec![0.0; n];
    let mut probs = vec![0.5; n];
    let mut nll_history = vec![negative_log_likelihood(data.positives, &probs)];
    let mut learners = Vec::new();
    let mut separated = false;
    let (mut vp, mut vn) = boundary_samples(&probs, data.positives, config.detection_rate, config.rejection_rate);

    for iteration in 0..config.max_iters {
        let (z, w) = logitboost_responses(data.positives, &probs);
        let candidates = candidate_windows(windows.len(), config, salt, iteration);

        let evaluated: Vec<Result<Candidate>> = candidates
            .par_iter()
            .map(|&wi| {
                evaluate_window(wi, &windows[wi], data, &labels, &z, &w, &f, config, &cache)
            })
            .collect();

        let mut best: Option<Candidate> = None;
        let mut first_error = None;
        for c in evaluated {
            match c {
                Ok(c) => {
                    let better = match &best {
                        None => true,
                        Some(b) => c.nll < b.nll || (c.nll == b.nll && c.window_index < b.window_index),
                    };
                    if better {
                        best = Some(c);
                    }
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        let best = match (best, first_error) {
            (Some(b), _) => b,
            (None, Some(e)) => return Err(e),
            (None, None) => return Err(Error::EmptyGrid),
        };

        for j in 0..n {
            f[j] += 0.5 * best.responses[j];
            probs[j] = probability(f[j]);
        }
        nll_history.push(negative_log_likelihood(data.positives, &probs));
        learners.push(best.learner);

        (vp, vn) = boundary_samples(&probs, data.positives, config.detection_rate, config.rejection_rate);
        if probs[vp] - probs[vn] >= config.margin {
            separated = true;
            break;
        }
    }

    let mut classifier = BinaryClassifier::new(
        data.positive_label.to_string(),
        data.negative_label.to_string(),
        learners,
        f[vn],
    )?;
    classifier.separated = separated;
    classifier.nll_history = nll_history;
    debug_assert!(vp < n);
    Ok(classifier)
}

/// Window indices searched in one iteration, ascending.
fn candidate_windows(total: usize, config: &BoostConfig, salt: u64, iteration: usize) -> Vec<usize> {
    if config.window_subsample == 0 || config.window_subsample >= total {
        return (0..total).collect();
    }
    let seed = config
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(salt.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(iteration as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, total, config.window_subsample).into_vec();
    picked.sort_unstable();
    picked
}

#[allow(clippy::too_many_arguments)]
fn evaluate_window(
    window_index: usize,
    window: &Window,
    data: &PairData<'_>,
    labels: &[usize],
    z: &[f64],
    w: &[f64],
    f: &[f64],
    config: &BoostConfig,
    cache: &DistanceCache,
) -> Result<Candidate> {
    let descriptors = data
        .videos
        .iter()
        .map(|v| v.descriptor(window))
        .collect::<Result<Vec<_>>>()?;

    let distances = if config.mapper.needs_distances() {
        let cached = cache.lock().expect("cache poisoned").get(&window_index).cloned();
        Some(match cached {
            Some(d) => d,
            None => {
                let d = Arc::new(pairwise_distances(&descriptors)?);
                let mut guard = cache.lock().expect("cache poisoned");
                if guard.len() < config.distance_cache_limit {
                    guard.insert(window_index, Arc::clone(&d));
                }
                d
            }
        })
    } else {
        None
    };

    let (projection, mapped) = fit_projection(
        config.mapper,
        descriptors,
        distances.as_deref(),
        labels,
        w,
        config.wrlpp_params(),
    )?;
    let coeffs = fit_weak_learner(&mapped, z, w);
    let responses: Vec<f64> = mapped.iter().map(|x| evaluate_linear(&coeffs, x)).collect();
    let probs: Vec<f64> = f
        .iter()
        .zip(&responses)
        .map(|(fj, g)| probability(fj + 0.5 * g))
        .collect();
    let nll = negative_log_likelihood(data.positives, &probs);
    Ok(Candidate {
        window_index,
        nll: if nll.is_finite() { nll } else { f64::INFINITY },
        responses,
        learner: WeakLearner {
            window: *window,
            projection,
            coeffs,
        },
    })
}
