//! Energy, dissipation checks, Lyapunov functionals, and decay-rate fits.
//!
//! The energy of a state is the five-component sum
//!
//! ```text
//! E(t) = 1/2 ∫ u_t^2 + 1/2 beta(t) ∫ u_x^2 + 1/2 ∫ (g□u_x)
//!      + 1/2 ∫ (v_t^2 + b v_x^2) + zeta/2 ∫∫ z^2 drho dx
//! ```
//!
//! with trapezoid quadrature on the nodes, midpoint quadrature for the
//! gradient terms, and the ring slots as the `rho = k/m` grid of the delay
//! channel. The auxiliary functionals are
//!
//! ```text
//! D  = ∫ u u_t + mu1/2 ∫ u^2 + ∫ v v_t
//! F1 = -∫ q(x) u_t (a u_x - g*u_x)
//! F2 = -∫ q(x) v_x v_t
//! F3 = tau ∫∫ e^{-tau rho} z^2 drho dx
//! L  = N1 E + N2 D + N3 F1 + N4 F2 + F3
//! ```
//!
//! and the decay fit regresses `ln E` against `X(t) = ∫_0^t xi(s) ds` over
//! the second half of a run, so exponential and polynomial kernels are both
//! fitted by the same straight line.

use crate::error::Error;
use crate::kernels::{self, RelaxationKernel};
use crate::problem::{q_eval, Certificate, ProblemConfig};
use crate::solver::{DiagRow, RunRecord, SimState};
use crate::Result;

/// Relative (to `E(0)`) part of the per-step dissipation tolerance.
pub const TOL_E_REL: f64 = 1e-8;
/// Absolute part of the per-step dissipation tolerance.
pub const TOL_E_ABS: f64 = 1e-14;

/// The five additive energy components and their sum.
#[derive(Clone, Copy, Debug)]
pub struct EnergyReport {
    pub t: f64,
    pub kin_u: f64,
    pub elastic_u: f64,
    pub memory: f64,
    pub v_part: f64,
    pub delay: f64,
    pub total: f64,
}

/// Evaluate the energy of a state.
pub fn energy(state: &SimState, config: &ProblemConfig) -> Result<EnergyReport> {
    let mesh = state.mesh();
    let c = config.coefficients;
    let dx = mesh.dx;

    let ut = state.u_velocity();
    let mut kin_u = 0.0;
    for (i, &w) in mesh.wu.iter().enumerate() {
        kin_u += w * ut[i] * ut[i];
    }
    kin_u *= 0.5;

    let beta_t = kernels::beta(state.kernel(), c.a, state.t())?;
    let gu = state.u_grad();
    let elastic_u = 0.5 * beta_t * gu.iter().map(|g| g * g).sum::<f64>() * dx;

    let memory =
        0.5 * kernels::conv_square(state.kernel(), state.ux_hist())?.iter().sum::<f64>() * dx;

    let vt = state.v_velocity();
    let mut v_kin = 0.0;
    for (j, &w) in mesh.wv.iter().enumerate() {
        v_kin += w * vt[j] * vt[j];
    }
    let gv = state.v_grad();
    let v_part = 0.5 * (v_kin + c.b * gv.iter().map(|g| g * g).sum::<f64>() * dx);

    let delay = 0.5 * c.zeta * delay_channel_sq(state);

    let total = kin_u + elastic_u + memory + v_part + delay;
    Ok(EnergyReport { t: state.t(), kin_u, elastic_u, memory, v_part, delay, total })
}

/// `∫_Ω ∫_0^1 z^2 drho dx` over the ring slots (`rho_k = k/m`, trapezoid in
/// `rho`, trapezoid in `x`).
pub fn delay_channel_sq(state: &SimState) -> f64 {
    let mesh = state.mesh();
    let m = mesh.delay_steps;
    let mut acc = 0.0;
    for k in 0..=m {
        let cw = if k == 0 || k == m { 0.5 } else { 1.0 };
        let z = state.ring_slot(k);
        let mut xsum = 0.0;
        for (i, &w) in mesh.wu.iter().enumerate() {
            xsum += w * z[i] * z[i];
        }
        acc += cw * xsum;
    }
    acc / m as f64
}

/// `D = ∫ u u_t + mu1/2 ∫ u^2 + ∫ v v_t`.
pub fn lyapunov_d(state: &SimState, config: &ProblemConfig) -> f64 {
    let mesh = state.mesh();
    let ut = state.u_velocity();
    let u = state.u();
    let mut acc = 0.0;
    for (i, &w) in mesh.wu.iter().enumerate() {
        acc += w * (u[i] * ut[i] + 0.5 * config.coefficients.mu1 * u[i] * u[i]);
    }
    let vt = state.v_velocity();
    let v = state.v();
    for (j, &w) in mesh.wv.iter().enumerate() {
        acc += w * v[j] * vt[j];
    }
    acc
}

/// Node-average onto the u midpoints (per segment, no averaging across the
/// gap).
fn node_to_mid_u(mesh: &crate::solver::Mesh, nodal: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(mesh.mids_u.len());
    for i in 0..mesh.cells_left() {
        out.push(0.5 * (nodal[i] + nodal[i + 1]));
    }
    for l in 0..mesh.cells_right() {
        let i = mesh.n_left + l;
        out.push(0.5 * (nodal[i] + nodal[i + 1]));
    }
    out
}

/// `F1 = -∫ q(x) u_t (a u_x - g*u_x)`, midpoint quadrature.
pub fn lyapunov_f1(state: &SimState, config: &ProblemConfig) -> Result<f64> {
    let mesh = state.mesh();
    let g = config.geometry;
    let c = config.coefficients;
    let star = kernels::conv_star(state.kernel(), state.ux_hist())?;
    let gu = state.u_grad();
    let ut_mid = node_to_mid_u(mesh, state.u_velocity());
    let mut acc = 0.0;
    for (j, &x) in mesh.mids_u.iter().enumerate() {
        let q = q_eval(x, g.l1, g.l2, g.l3)?;
        acc += q * ut_mid[j] * (c.a * gu[j] - star[j]);
    }
    Ok(-acc * mesh.dx)
}

/// `F2 = -∫ q(x) v_x v_t`, midpoint quadrature over the middle interval.
pub fn lyapunov_f2(state: &SimState, config: &ProblemConfig) -> Result<f64> {
    let mesh = state.mesh();
    let g = config.geometry;
    let gv = state.v_grad();
    let vt = state.v_velocity();
    let mut acc = 0.0;
    for (j, &x) in mesh.mids_v.iter().enumerate() {
        let q = q_eval(x, g.l1, g.l2, g.l3)?;
        let vt_mid = 0.5 * (vt[j] + vt[j + 1]);
        acc += q * gv[j] * vt_mid;
    }
    Ok(-acc * mesh.dx)
}

/// `F3 = tau ∫ ∫ e^{-tau rho} z^2 drho dx` over the ring slots.
pub fn lyapunov_f3(state: &SimState, config: &ProblemConfig) -> f64 {
    let mesh = state.mesh();
    let tau = config.coefficients.tau;
    let m = mesh.delay_steps;
    let mut acc = 0.0;
    for k in 0..=m {
        let cw = if k == 0 || k == m { 0.5 } else { 1.0 };
        let rho = k as f64 / m as f64;
        let weight = cw * (-tau * rho).exp();
        let z = state.ring_slot(k);
        let mut xsum = 0.0;
        for (i, &w) in mesh.wu.iter().enumerate() {
            xsum += w * z[i] * z[i];
        }
        acc += weight * xsum;
    }
    tau * acc / m as f64
}

/// `L = N1 E + N2 D + N3 F1 + N4 F2 + F3`; refuses infeasible certificates.
pub fn lyapunov_l(state: &SimState, config: &ProblemConfig, cert: &Certificate) -> Result<f64> {
    if !cert.feasible {
        return Err(Error::InfeasibleCertificate);
    }
    let e = energy(state, config)?.total;
    let d = lyapunov_d(state, config);
    let f1 = lyapunov_f1(state, config)?;
    let f2 = lyapunov_f2(state, config)?;
    let f3 = lyapunov_f3(state, config);
    Ok(cert.n1 * e + cert.n2 * d + cert.n3 * f1 + cert.n4 * f2 + f3)
}

/// Result of the dissipation-law check over a run record.
#[derive(Clone, Copy, Debug)]
pub struct RateCheck {
    /// `E` nonincreasing between consecutive rows within `tol`.
    pub monotone: bool,
    /// Largest per-row energy increase observed (negative when strictly
    /// decreasing).
    pub worst_violation: f64,
    /// The tolerance used: `1e-8 E(0) + 1e-14`.
    pub tol: f64,
    /// `inf [ -dE/dt + 1/2 ∫(g'□u_x) ] / [ ∫u_t^2 + ∫z^2(x,1) ]` over rows
    /// with nondegenerate denominator; `None` when every row degenerates
    /// (e.g. the zero run).
    pub empirical_c4: Option<f64>,
    /// `min(mu1 - zeta/(2 tau) - mu2/2, zeta/(2 tau) - mu2/2)` — the
    /// Young-inequality candidate implied by the delay-window choice.
    pub analytic_c4: f64,
}

/// Analytic candidate for the dissipation constant.
pub fn analytic_c4(config: &ProblemConfig) -> f64 {
    let c = config.coefficients;
    let half_ratio = 0.5 * c.zeta / c.tau;
    (c.mu1 - half_ratio - 0.5 * c.mu2).min(half_ratio - 0.5 * c.mu2)
}

/// Check the dissipation law on a run record. Refuses configurations outside
/// the decay hypotheses (the inequality is only claimed there).
pub fn energy_rate_check(record: &RunRecord, config: &ProblemConfig) -> Result<RateCheck> {
    let report = config.validate();
    if !report.decay_hypotheses_ok() {
        return Err(Error::HypothesesNotSatisfied(
            "energy rate check requires mu2 < mu1, zeta inside the delay window, and the geometric condition".into(),
        ));
    }
    if record.rows.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: record.rows.len() });
    }
    let e0 = record.e0();
    let tol = TOL_E_REL * e0 + TOL_E_ABS;
    let rows = &record.rows;
    let mut worst = f64::NEG_INFINITY;
    for pair in rows.windows(2) {
        worst = worst.max(pair[1].energy.total - pair[0].energy.total);
    }
    let denom_floor = 1e-12 * e0;
    let mut c4 = f64::INFINITY;
    let mut any = false;
    for r in 1..rows.len() - 1 {
        let dt_span = rows[r + 1].t - rows[r - 1].t;
        let dedt = (rows[r + 1].energy.total - rows[r - 1].energy.total) / dt_span;
        let denom = rows[r].ut_sq + rows[r].z1_sq;
        if denom > denom_floor {
            any = true;
            c4 = c4.min((-dedt + 0.5 * rows[r].gprime_square) / denom);
        }
    }
    Ok(RateCheck {
        monotone: worst <= tol,
        worst_violation: worst,
        tol,
        empirical_c4: any.then_some(c4),
        analytic_c4: analytic_c4(config),
    })
}

/// `sup |L/E - N1|` over rows with `E > 1e-12 E(0)`: the empirical
/// equivalence width of the Lyapunov bracket. `None` without a feasible
/// certificate or usable rows.
pub fn equivalence_scan(record: &RunRecord) -> Option<f64> {
    let cert = record.certificate.as_ref()?;
    let floor = 1e-12 * record.e0();
    let mut sup: Option<f64> = None;
    for row in &record.rows {
        if row.energy.total > floor && row.l_func.is_finite() {
            let dev = (row.l_func / row.energy.total - cert.n1).abs();
            sup = Some(sup.map_or(dev, |s: f64| s.max(dev)));
        }
    }
    sup
}

/// `inf -ΔL / (xi(t) L Δt)` over consecutive rows inside `[t_lo, t_hi]`: the
/// empirical contraction rate of the Lyapunov functional relative to the
/// kernel decay witness. `None` when fewer than one usable pair exists.
pub fn contraction_scan(
    record: &RunRecord,
    kernel: &RelaxationKernel,
    t_lo: f64,
    t_hi: f64,
) -> Result<Option<f64>> {
    let mut inf: Option<f64> = None;
    for pair in record.rows.windows(2) {
        let (r0, r1) = (&pair[0], &pair[1]);
        if r0.t < t_lo || r1.t > t_hi {
            continue;
        }
        if !(r0.l_func.is_finite() && r1.l_func.is_finite()) || r0.l_func <= 0.0 {
            continue;
        }
        let xi = kernel.eval(r0.t)?.xi;
        if xi <= 0.0 {
            continue;
        }
        let rate = (r0.l_func - r1.l_func) / (xi * r0.l_func * (r1.t - r0.t));
        inf = Some(inf.map_or(rate, |v: f64| v.min(rate)));
    }
    Ok(inf)
}

/// Least-squares fit of `ln E` against `X(t) = ∫_0^t xi`.
#[derive(Clone, Copy, Debug)]
pub struct DecayFit {
    /// Fitted decay rate: `E ~ exp(-gamma1 X(t))`.
    pub gamma1: f64,
    /// `ln gamma2` estimate (intercept).
    pub intercept: f64,
    pub r2: f64,
    pub window: (f64, f64),
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

/// Fit `ln E` against an arbitrary time map over the window `[T/2, T]`,
/// excluding rows with `E <= 1e-300`. Returns `(slope, intercept, r2)`.
pub fn fit_ln_energy(
    record: &RunRecord,
    time_map: impl Fn(f64) -> f64,
) -> Result<(f64, f64, f64)> {
    if record.e0() <= 0.0 {
        return Err(Error::DegenerateData);
    }
    let t_end = record.rows.last().map(|r| r.t).unwrap_or(0.0);
    let t_lo = 0.5 * t_end;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in &record.rows {
        if row.t >= t_lo && row.energy.total > 1e-300 {
            xs.push(time_map(row.t));
            ys.push(row.energy.total.ln());
        }
    }
    if xs.len() < 5 {
        return Err(Error::InsufficientData { needed: 5, got: xs.len() });
    }
    Ok(linear_fit(&xs, &ys))
}

/// Fit the general decay estimate `E <= gamma2 exp(-gamma1 ∫ xi)` on the tail
/// of a run.
pub fn decay_fit(record: &RunRecord, kernel: &RelaxationKernel) -> Result<DecayFit> {
    let t_end = record.rows.last().map(|r| r.t).unwrap_or(0.0);
    let (slope, intercept, r2) = fit_ln_energy(record, |t| {
        kernel.xi_integral(t).expect("nonnegative row times")
    })?;
    Ok(DecayFit { gamma1: -slope, intercept, r2, window: (0.5 * t_end, t_end) })
}

/// Rows helper for synthetic records in tests and examples.
pub fn record_from_rows(rows: Vec<DiagRow>, dt: f64, stride: usize) -> RunRecord {
    RunRecord { stride, dt, rows, snapshots: Vec::new(), operator_stats: None, certificate: None }
}
