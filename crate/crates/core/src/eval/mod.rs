//! Metrics, cross-validation, reports, grid search and feature ablation.

pub mod folds;
pub mod metrics;
pub mod report;
pub mod search;
