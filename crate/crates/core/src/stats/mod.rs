//! Correlation screening and logistic risk models.

pub mod correlation;
pub mod logit;
pub mod report;

pub use correlation::{correlation_report, pearson, pearson_matrix, CorrelationReport, Stars};
pub use logit::{
    fit_logit, paper_model, paper_models, predict, rank_clients, sigmoid, FitOptions, LogitModel, LogitProblem,
};
