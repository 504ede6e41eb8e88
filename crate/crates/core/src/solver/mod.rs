//! Spatial discretization and time integration of the coupled system.
//!
//! See [`mesh`] for the shared-interface grid and [`state`] for the stepping
//! scheme. [`run`] integrates a validated configuration to its final time and
//! returns a [`RunRecord`]: per-stride diagnostic rows (energy components,
//! Lyapunov functionals, interface residuals) plus optional per-step operator
//! checks and field snapshots; [`RunRecord::write_csv`] emits the record in
//! the fixed column layout consumed by the CLI and offline tooling.

pub mod mesh;
pub mod state;

use std::io::Write;
use std::sync::Arc;

use crate::diagnostics::{self, EnergyReport};
use crate::error::Error;
use crate::kernels;
use crate::problem::{find_certificate, Certificate, ProblemConfig};
use crate::Result;

pub use mesh::{build_mesh, Mesh};
pub use state::{
    delayed_velocity, friction_power, init_state, interface_residual, staggered_energy, step,
    SimState,
};

/// Runtime controls that are not part of the problem description.
#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Steps between diagnostic rows (row 0 and the final step are always
    /// recorded).
    pub stride: usize,
    /// Evaluate the operator identities (decomposition, Cauchy-Schwarz) on
    /// the gradient history at every step and track the worst residuals.
    pub operator_checks: bool,
    /// Store field snapshots every this many steps.
    pub snapshot_every: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { stride: 20, operator_checks: false, snapshot_every: None }
    }
}

/// One diagnostic row of a run.
#[derive(Clone, Debug)]
pub struct DiagRow {
    pub step: usize,
    pub t: f64,
    pub energy: EnergyReport,
    pub d: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    /// Lyapunov combination; NaN when no feasible certificate exists.
    pub l_func: f64,
    pub jump: f64,
    pub flux_residual: f64,
    /// `∫_Ω u_t^2`.
    pub ut_sq: f64,
    /// `∫_Ω z(x,1,t)^2`.
    pub z1_sq: f64,
    /// `∫_Ω (g'□u_x)` (nonpositive for admissible kernels).
    pub gprime_square: f64,
}

/// Worst per-step operator residuals over a run.
#[derive(Clone, Copy, Debug, Default)]
pub struct OperatorStats {
    /// Max relative residual of `(g*h) + (g◇h) = (∫g) h`.
    pub max_decomposition_residual: f64,
    /// Max normalized excess of `(g◇h)^2` over `(∫g)(g□h)`; <= 0 when the
    /// bound holds everywhere.
    pub max_cauchy_schwarz_margin: f64,
}

/// Field snapshot at one step.
#[derive(Clone, Debug)]
pub struct FieldSnapshot {
    pub step: usize,
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Output of [`run`].
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub stride: usize,
    pub dt: f64,
    pub rows: Vec<DiagRow>,
    pub snapshots: Vec<FieldSnapshot>,
    pub operator_stats: Option<OperatorStats>,
    pub certificate: Option<Certificate>,
}

impl RunRecord {
    pub fn e0(&self) -> f64 {
        self.rows.first().map(|r| r.energy.total).unwrap_or(0.0)
    }

    pub fn final_energy(&self) -> f64 {
        self.rows.last().map(|r| r.energy.total).unwrap_or(0.0)
    }

    /// Write the record as CSV with the fixed column set.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "t,E_total,E_kin_u,E_elastic_u,E_memory,E_v,E_delay,D,F1,F2,F3,L_func,flux_residual"
        )?;
        for row in &self.rows {
            let e = &row.energy;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                row.t,
                e.total,
                e.kin_u,
                e.elastic_u,
                e.memory,
                e.v_part,
                e.delay,
                row.d,
                row.f1,
                row.f2,
                row.f3,
                row.l_func,
                row.flux_residual
            )?;
        }
        Ok(())
    }

    /// Write one snapshot as CSV rows `(x, value, field)`.
    pub fn write_snapshot_csv<W: Write>(snap: &FieldSnapshot, mesh: &Mesh, mut w: W) -> Result<()> {
        writeln!(w, "x,value,field")?;
        for (x, val) in mesh.xs_u.iter().zip(&snap.u) {
            writeln!(w, "{},{},u", x, val)?;
        }
        for (x, val) in mesh.xs_v.iter().zip(&snap.v) {
            writeln!(w, "{},{},v", x, val)?;
        }
        Ok(())
    }
}

fn diag_row(
    state: &SimState,
    config: &ProblemConfig,
    cert: Option<&Certificate>,
) -> Result<DiagRow> {
    let energy = diagnostics::energy(state, config)?;
    let d = diagnostics::lyapunov_d(state, config);
    let f1 = diagnostics::lyapunov_f1(state, config)?;
    let f2 = diagnostics::lyapunov_f2(state, config)?;
    let f3 = diagnostics::lyapunov_f3(state, config);
    let l_func = match cert {
        Some(cert) => diagnostics::lyapunov_l(state, config, cert)?,
        None => f64::NAN,
    };
    let (jump, flux_residual) = interface_residual(state, config)?;
    let mesh = state.mesh();
    let ut = state.u_velocity();
    let z1 = delayed_velocity(state);
    let mut ut_sq = 0.0;
    let mut z1_sq = 0.0;
    for (i, &w) in mesh.wu.iter().enumerate() {
        ut_sq += w * ut[i] * ut[i];
        z1_sq += w * z1[i] * z1[i];
    }
    let gp = kernels::conv_square_deriv(state.kernel(), state.ux_hist())?;
    let gprime_square = gp.iter().sum::<f64>() * mesh.dx;
    Ok(DiagRow {
        step: state.step_index(),
        t: state.t(),
        energy,
        d,
        f1,
        f2,
        f3,
        l_func,
        jump,
        flux_residual,
        ut_sq,
        z1_sq,
        gprime_square,
    })
}

/// Integrate the configuration to its final time.
///
/// Requires a structurally sound configuration with positive effective
/// stiffness over the whole horizon (`beta(T) > 0`); the theorem hypotheses
/// (delay window, geometry) are *not* required, so control scenarios with
/// zero damping or zero kernel run fine. Identical configurations produce
/// identical records.
pub fn run(config: &ProblemConfig, opts: &RunOptions) -> Result<RunRecord> {
    let report = config.validate();
    if !report.structural_ok {
        return Err(Error::InvalidConfig(format!(
            "configuration is not structurally sound: {:?}",
            report.warnings
        )));
    }
    let kernel = config.kernel()?;
    let t_final = config.discretization.t_final;
    let beta_end = kernels::beta(&kernel, config.coefficients.a, t_final)?;
    if beta_end <= 0.0 || beta_end.is_nan() {
        return Err(Error::InvalidConfig(format!(
            "effective stiffness beta(T) = {beta_end} <= 0 over the requested horizon"
        )));
    }

    let mesh = Arc::new(build_mesh(config)?);
    let mut state = init_state(config, Arc::clone(&mesh))?;
    let n_steps = (t_final / mesh.dt - 1e-9).ceil().max(0.0) as usize;
    let stride = opts.stride.max(1);

    let cert = find_certificate(config).ok().filter(|c| c.feasible);

    // lag tables: needed per step by the direct convolution path and by the
    // operator checks
    let needs_lags = !matches!(kernel, kernels::RelaxationKernel::Exponential { .. })
        || opts.operator_checks;
    let g_lags = if needs_lags {
        Some(kernels::lag_table(&kernel, n_steps + 1, mesh.dt, false)?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(n_steps / stride + 2);
    let mut snapshots = Vec::new();
    let mut op_stats = opts.operator_checks.then(OperatorStats::default);

    rows.push(diag_row(&state, config, cert.as_ref())?);
    if opts.snapshot_every.is_some() {
        snapshots.push(FieldSnapshot {
            step: 0,
            t: 0.0,
            u: state.u().to_vec(),
            v: state.v().to_vec(),
        });
    }

    for n in 0..n_steps {
        state::step_inner(&mut state, config, g_lags.as_deref())?;
        if let (Some(stats), Some(lags)) = (op_stats.as_mut(), g_lags.as_deref()) {
            let (decomp, cs) =
                kernels::operator_residuals_with_lags(lags, kernel.g0(), state.ux_hist());
            stats.max_decomposition_residual = stats.max_decomposition_residual.max(decomp);
            stats.max_cauchy_schwarz_margin = stats.max_cauchy_schwarz_margin.max(cs);
        }
        let done = n + 1 == n_steps;
        let row_due = (n + 1).is_multiple_of(stride) || done;
        if row_due && rows.last().map(|r| r.step) != Some(state.step_index()) {
            rows.push(diag_row(&state, config, cert.as_ref())?);
        }
        if let Some(every) = opts.snapshot_every {
            if (n + 1).is_multiple_of(every) || done {
                snapshots.push(FieldSnapshot {
                    step: state.step_index(),
                    t: state.t(),
                    u: state.u().to_vec(),
                    v: state.v().to_vec(),
                });
            }
        }
    }

    Ok(RunRecord {
        stride,
        dt: mesh.dt,
        rows,
        snapshots,
        operator_stats: op_stats,
        certificate: cert,
    })
}
