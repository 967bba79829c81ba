//! Model-quality battery: relative output errors, pole and
//! transmission-zero maps, condition-number sweeps over frequency, and
//! zero-order-hold discretization of continuous reference models.
//!
//! Trajectories follow the deviation-variable convention: simulations
//! start from `x0 = 0` and data are expected with nominal offsets removed.

mod frequency;
mod metrics;
mod report;
mod zeros;

pub use frequency::{
    condition_sweep, default_grid, discretize_zoh, log_grid, nyquist, poles, CondPoint, PoleMap,
    MARGINAL_TOL,
};
pub use metrics::{max_abs_relative_errors, relative_errors, RelativeErrors};
pub use report::{
    compare_models, model_report, rank_by_avg_error, reports_to_csv, AnalysisReport, ModelReport,
    Real,
};
pub use zeros::{transmission_zeros, ZeroSet};
