//! Softmax-gated ensembles of pre-trained regressors for tweet affect tasks.
//!
//! The pipeline runs corpus parsing, tweet normalization and tokenization,
//! feature extraction, expert training, gate training and evaluation. The
//! gate has one weight and one bias per expert and is trained by per-sample
//! gradient descent on the experts' predictions; see [`gating`].

pub mod corpus;
pub mod error;
pub mod eval;
pub mod experts;
pub mod features;
pub mod gating;
pub mod model;
pub mod preprocess;
pub mod stats;

pub use corpus::{Dataset, Emotion, LabelSet, Sample, Split, Target, TaskFamily, TaskKind, EC_LABELS};
pub use error::{Error, Result};
pub use eval::folds::{stratified_kfold, FoldAssignment};
pub use eval::report::{emit_report, EvaluationReport};
pub use experts::{default_roster, ExpertConfig, Family, TrainedExpert};
pub use features::{FeatureGroup, FeatureResources, FeatureVector, FittedPipeline, PipelineConfig};
pub use gating::{gate_predict, softmax, train_gating, GateTraining, GatingNetwork, GradientRule, TrainedGate};
pub use model::{ExpertsModel, GatingConfig, ModelConfig};
pub use preprocess::{normalize, tokenize, NormalizationRules, TokenizedTweet};
