//! Classification of trained models, the SDE simulator, generalisation
//! bounds and the experiment harnesses.

pub mod bounds;
pub mod classify;
pub mod experiments;
pub mod sde;

pub use bounds::{pac_bound, sample_complexity, vc_bound, BoundInputs};
pub use classify::{
    accuracy, classify_noiseless, classify_stochastic, noiseless_accuracy, stochastic_accuracy, AccuracyMode,
    AccuracySummary,
};
pub use experiments::{
    accuracy_experiment, bound_check_experiment, robustness_experiment, size_grid, ExperimentReport, ExperimentSettings,
    Prepared, RunRecord, TrialRecord, write_runs_csv, write_trials_csv,
};
pub use sde::{simulate_sde, simulate_terminal_states};
