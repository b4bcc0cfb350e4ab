//! Gaussian-tail loss, exact gradients, projected-gradient ERM (direct and
//! signature-truncated) and the SVM baseline.

pub mod erm;
pub mod loss;
pub mod svm;

pub use erm::{erm_train, train_on_features, truncated_erm_train, truncated_features, TrainConfig, TrainOutcome};
pub use loss::{empirical_risk, loss, risk, risk_and_gradient, risk_gradient, Gradient, ModelParams};
pub use svm::{svm_baseline, SvmSolution};
