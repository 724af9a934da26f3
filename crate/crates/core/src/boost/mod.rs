//! One-vs-one LogitBoost with per-round descriptor mapping.

mod binary;
mod det;
mod logitboost;
mod mapping;
mod multiclass;

pub use binary::{boundary_samples, train_binary, BinaryClassifier, BoostConfig, PairData, WeakLearner};
pub use det::{det_curve, det_curve_from_scores, miss_rate_at, DetPoint};
pub use logitboost::{
    evaluate_linear, fit_weak_learner, logitboost_responses, negative_log_likelihood, probability,
    MIN_WEIGHT, P_EPS, Z_MAX,
};
pub use mapping::{fit_projection, Mapper, Projection};
pub use multiclass::{pairs, train_multiclass, LabeledVideo, MulticlassModel};
