//! Simulation and verification engine for a 1D transmission wave system.
//!
//! The system couples a viscoelastic, frictionally damped wave with a
//! constant velocity delay on the outer intervals `(0, L1) ∪ (L2, L3)` to an
//! undamped elastic wave on the middle interval `(L1, L2)`:
//!
//! ```text
//! u_tt - a u_xx + ∫_0^t g(t-s) u_xx(s) ds + mu1 u_t + mu2 u_t(t - tau) = 0
//! v_tt - b v_xx = 0
//! ```
//!
//! with `u(0) = u(L3) = 0`, continuity `u(Li) = v(Li)` and the flux balance
//! `(a - ∫_0^t g) u_x(Li) = b v_x(Li)` at both interfaces.
//!
//! The crate provides:
//!
//! * [`kernels`] — relaxation-kernel families, the convolution operators
//!   `g*h`, `g◇h`, `g□h`, their discrete quadratures, and the product-rule
//!   identity relating them as a testable residual;
//! * [`problem`] — configuration, hypothesis validation (kernel positivity,
//!   the delay-weight window, the geometric condition), the interface
//!   multiplier `q(x)`, and the feasibility search for the Lyapunov weights;
//! * [`solver`] — shared-interface spatial discretization, explicit
//!   second-order time stepping with a delay ring buffer and gradient-history
//!   convolution, and the run driver;
//! * [`diagnostics`] — energy components, dissipation-rate checks, the
//!   Lyapunov functionals `D`, `F1`, `F2`, `F3`, `L`, and decay-rate fitting
//!   of `ln E` against `∫ xi`;
//! * [`cli`] — the command-line driver behind the `viscowave` binary
//!   (validate / run / sweep / converge / identity-check).
//!
//! See the crate examples for runnable entry points to each capability.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod kernels;
pub mod problem;
pub mod solver;

pub use error::Error;
pub use kernels::{HistorySeries, RelaxationKernel};
pub use problem::{Certificate, ProblemConfig, ValidationReport};
pub use solver::{Mesh, RunOptions, RunRecord, SimState};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
