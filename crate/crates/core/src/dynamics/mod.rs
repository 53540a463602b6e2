//! Single-sample SGD against its linearizations, deviation tracking and
//! normalization audits.

pub mod audit;
pub mod calibrate;
pub mod cost;
pub mod linear;
pub mod trace;

pub use audit::{pgdml_audit, pgdml_cell, PgdmlReport, PGDML_STATISTICS};
pub use calibrate::{calibrate_c_eta, converges_monotonically, linearized_loss_curve, Calibration};
pub use cost::{convexity_audit, ConvexityAudit, Cost};
pub use linear::{f_hat_eval, sgd_step, theta_lin_step, LinTracker, PointLinearization, SgdStep};
pub use trace::{
    fit_decay, stability_threshold, train_and_trace, DecayFit, IdentityReport, RunStatus, TraceOptions, TraceRow,
    TrainingTrace, TRACE_CSV_HEADER,
};
