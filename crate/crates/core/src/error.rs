//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Kernel evaluated at a negative time.
    #[error("kernel evaluation at negative time t = {0}")]
    NegativeTime(f64),

    /// Tabulated kernel queried outside its sample range.
    #[error("tabulated kernel queried at t = {t}, table covers [0, {t_max}]")]
    TableRange { t: f64, t_max: f64 },

    /// Operation requires a specific kernel family.
    #[error("unsupported kernel for {op}: requires {required}")]
    UnsupportedKernel {
        op: &'static str,
        required: &'static str,
    },

    /// Kernel construction with out-of-range parameters.
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    /// History snapshots with inconsistent widths.
    #[error("history snapshot width {got} does not match series width {expected}")]
    HistoryWidth { expected: usize, got: usize },

    /// Too few time samples for a finite-difference evaluation.
    #[error("{op} needs at least {needed} samples, history has {got}")]
    TooFewSamples {
        op: &'static str,
        needed: usize,
        got: usize,
    },

    /// Spatial coordinate outside the configured geometry.
    #[error("x = {x} outside [0, {l3}]")]
    OutOfDomain { x: f64, l3: f64 },

    /// Configuration rejected before any numerics ran.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Initial data incompatible with the boundary/transmission conditions.
    #[error("incompatible initial data: {0}")]
    Incompatibility(String),

    /// Non-finite field values detected during time stepping.
    #[error("instability detected at step {step} (t = {t})")]
    Instability { step: usize, t: f64 },

    /// Lyapunov evaluation requested with an infeasible certificate.
    #[error("certificate is infeasible; Lyapunov combination undefined")]
    InfeasibleCertificate,

    /// Decay fit on a run whose initial energy vanishes.
    #[error("degenerate data: initial energy is zero")]
    DegenerateData,

    /// Decay fit with too few usable rows.
    #[error("insufficient data: fit needs {needed} usable rows, found {got}")]
    InsufficientData { needed: usize, got: usize },

    /// The inequality being checked only holds under hypotheses the
    /// configuration does not satisfy.
    #[error("hypotheses not satisfied: {0}")]
    HypothesesNotSatisfied(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
