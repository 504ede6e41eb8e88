//! Simulation state and the explicit time step.
//!
//! Central differences in time with the frictional term averaged over
//! `t - dt` and `t + dt` (solved in closed form), the delay realized by a
//! ring buffer of velocity snapshots (the transport equation
//! `tau z_t + z_rho = 0` solved exactly along characteristics), and the
//! memory term as the spatial difference of the convolution of the
//! cell-midpoint gradient history.
//!
//! A state at time `t = n dt` carries the field at `t` plus one level of
//! lookahead, so that the centered velocity at `t` is available to the
//! diagnostics and to the delay ring:
//!
//! ```text
//! u_next = u^{n+1},  u = u^n,  u_prev = u^{n-1}
//! ring   = [u_t(t), u_t(t - dt), ..., u_t(t - tau)]   (delay_steps + 1 slots)
//! ux_hist = midpoint gradients of u at 0, dt, ..., t
//! ```
//!
//! Interface nodes are shared unknowns updated from the half-cell balance
//! with the u-side stress taken as `beta(t) u_x`, which enforces the
//! transmission condition `beta(t) u_x(Li) = b v_x(Li)` weakly; the memory
//! contributions at the interface cell cancel in that form.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::Error;
use crate::kernels::{self, HistorySeries, RelaxationKernel};
use crate::problem::{Coupling, InitialPreset, ProblemConfig};
use crate::solver::mesh::Mesh;
use crate::Result;

/// Tolerance for the initial-data compatibility checks (`u0(0) = u0(L3) = 0`,
/// `u0(Li) = v0(Li)`, and the same for the velocities).
pub const COMPAT_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SimState {
    pub(crate) mesh: Arc<Mesh>,
    pub(crate) kernel: RelaxationKernel,
    pub(crate) t: f64,
    pub(crate) step_index: usize,
    pub(crate) u_next: Vec<f64>,
    pub(crate) u: Vec<f64>,
    pub(crate) u_prev: Vec<f64>,
    pub(crate) v_next: Vec<f64>,
    pub(crate) v: Vec<f64>,
    pub(crate) v_prev: Vec<f64>,
    /// Velocity ring: slot `k` holds `u_t(., t - k dt)`; slot 0 is the
    /// current velocity, the oldest slot is `u_t(., t - tau)`.
    pub(crate) ring: VecDeque<Vec<f64>>,
    /// Midpoint-gradient history of the u field for the memory convolutions.
    pub(crate) ux_hist: HistorySeries,
    /// Running trapezoid convolution `(g * u_x)(t)` for exponential kernels.
    pub(crate) carry: Option<Vec<f64>>,
}

impl SimState {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn kernel(&self) -> &RelaxationKernel {
        &self.kernel
    }

    /// u field at the state time.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// v field at the state time.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Centered u velocity at the state time (ring slot 0; the given `u1`
    /// at `t = 0`).
    pub fn u_velocity(&self) -> &[f64] {
        &self.ring[0]
    }

    /// Centered v velocity at the state time.
    pub fn v_velocity(&self) -> Vec<f64> {
        let inv = 1.0 / (2.0 * self.mesh.dt);
        self.v_next.iter().zip(&self.v_prev).map(|(&n, &p)| (n - p) * inv).collect()
    }

    /// Velocity `u_t(., t - k dt)`; `k = 0 ..= delay_steps`.
    pub fn ring_slot(&self, k: usize) -> &[f64] {
        &self.ring[k]
    }

    pub fn ring_len(&self) -> usize {
        self.ring.len()
    }

    /// Gradient history driving the memory term.
    pub fn ux_hist(&self) -> &HistorySeries {
        &self.ux_hist
    }

    /// Midpoint gradients of the current u field (latest history sample).
    pub fn u_grad(&self) -> &[f64] {
        self.ux_hist.latest().expect("history is never empty")
    }

    /// Midpoint gradients of the current v field.
    pub fn v_grad(&self) -> Vec<f64> {
        grad_mid(&self.v, self.mesh.dx)
    }
}

fn grad_mid(field: &[f64], dx: f64) -> Vec<f64> {
    field.windows(2).map(|w| (w[1] - w[0]) / dx).collect()
}

/// Midpoint gradients of a u field: per-segment, no gradient across the gap.
pub(crate) fn grad_u(mesh: &Mesh, u: &[f64]) -> Vec<f64> {
    let mut g = grad_mid(&u[..mesh.n_left], mesh.dx);
    g.extend(grad_mid(&u[mesh.n_left..], mesh.dx));
    g
}

/// Sample a preset on the u nodes. Sine modes vanish at the endpoints of each
/// outer segment.
pub(crate) fn sample_u(preset: &InitialPreset, mesh: &Mesh) -> Vec<f64> {
    let l1 = mesh.xs_u[mesh.iface_u_l1()];
    let l2 = mesh.xs_u[mesh.iface_u_l2()];
    let l3 = *mesh.xs_u.last().unwrap();
    mesh.xs_u
        .iter()
        .enumerate()
        .map(|(i, &x)| match preset {
            InitialPreset::SineMode { k, amp } => {
                let (lo, len) = if i < mesh.n_left { (0.0, l1) } else { (l2, l3 - l2) };
                amp * (*k as f64 * std::f64::consts::PI * (x - lo) / len).sin()
            }
            other => other.eval_scalar(x),
        })
        .collect()
}

/// Sample a preset on the v nodes. Sine modes vanish at both interfaces.
pub(crate) fn sample_v(preset: &InitialPreset, mesh: &Mesh) -> Vec<f64> {
    let l1 = mesh.xs_v[0];
    let len = mesh.xs_v[mesh.n_v() - 1] - l1;
    mesh.xs_v
        .iter()
        .map(|&x| match preset {
            InitialPreset::SineMode { k, amp } => {
                amp * (*k as f64 * std::f64::consts::PI * (x - l1) / len).sin()
            }
            other => other.eval_scalar(x),
        })
        .collect()
}

/// Closed-form update of the damped central-difference scheme at every node.
///
/// `cur`/`prev` are the levels `l` and `l - 1`; the returned fields are level
/// `l + 1`. `conv_mid` is `(g * u_x)` on the u midpoints at level `l`,
/// `beta_t = a - G(t_l)`, and `z1` is `u_t(., t_l - tau)`.
#[allow(clippy::too_many_arguments)]
fn advance(
    mesh: &Mesh,
    config: &ProblemConfig,
    cur_u: &[f64],
    prev_u: &[f64],
    cur_v: &[f64],
    prev_v: &[f64],
    conv_mid: &[f64],
    beta_t: f64,
    z1: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let c = config.coefficients;
    let dx = mesh.dx;
    let dt = mesh.dt;
    let dt2 = dt * dt;
    let inv_dx2 = 1.0 / (dx * dx);
    let inv_dx = 1.0 / dx;
    let pinned = config.discretization.coupling == Coupling::Pinned;

    let lam = 0.5 * c.mu1 * dt;
    let lam_if = 0.25 * c.mu1 * dt;

    let i_l1 = mesh.iface_u_l1();
    let i_l2 = mesh.iface_u_l2();
    let n_u = mesh.n_u();
    let n_v = mesh.n_v();

    let mut new_u = vec![0.0; n_u];
    let mut new_v = vec![0.0; n_v];

    // interior u nodes, left segment (cells 0..n_left-1 in the midpoint array)
    for i in 1..i_l1 {
        let d2 = (cur_u[i + 1] - 2.0 * cur_u[i] + cur_u[i - 1]) * inv_dx2;
        let mem = (conv_mid[i] - conv_mid[i - 1]) * inv_dx;
        let rhs = c.a * d2 - mem - c.mu2 * z1[i];
        new_u[i] = (2.0 * cur_u[i] - (1.0 - lam) * prev_u[i] + dt2 * rhs) / (1.0 + lam);
    }
    // interior u nodes, right segment; node i (global) sits between midpoints
    // cells_left + l - 1 and cells_left + l with l = i - n_left
    let mid_off = mesh.cells_left();
    for i in (i_l2 + 1)..(n_u - 1) {
        let l = i - mesh.n_left;
        let d2 = (cur_u[i + 1] - 2.0 * cur_u[i] + cur_u[i - 1]) * inv_dx2;
        let mem = (conv_mid[mid_off + l] - conv_mid[mid_off + l - 1]) * inv_dx;
        let rhs = c.a * d2 - mem - c.mu2 * z1[i];
        new_u[i] = (2.0 * cur_u[i] - (1.0 - lam) * prev_u[i] + dt2 * rhs) / (1.0 + lam);
    }
    // interior v nodes
    for j in 1..(n_v - 1) {
        let d2 = (cur_v[j + 1] - 2.0 * cur_v[j] + cur_v[j - 1]) * inv_dx2;
        new_v[j] = 2.0 * cur_v[j] - prev_v[j] + dt2 * c.b * d2;
    }

    // shared interface unknowns: half-cell balance with u-side stress
    // beta(t) u_x, which enforces beta u_x = b v_x weakly
    let w_l1 = if pinned {
        cur_u[i_l1]
    } else {
        let w = cur_u[i_l1];
        let flux = c.b * (cur_v[1] - w) * inv_dx - beta_t * (w - cur_u[i_l1 - 1]) * inv_dx;
        let rhs = flux * inv_dx - 0.5 * c.mu2 * z1[i_l1];
        (2.0 * w - (1.0 - lam_if) * prev_u[i_l1] + dt2 * rhs) / (1.0 + lam_if)
    };
    let w_l2 = if pinned {
        cur_u[i_l2]
    } else {
        let w = cur_u[i_l2];
        let flux = beta_t * (cur_u[i_l2 + 1] - w) * inv_dx - c.b * (w - cur_v[n_v - 2]) * inv_dx;
        let rhs = flux * inv_dx - 0.5 * c.mu2 * z1[i_l2];
        (2.0 * w - (1.0 - lam_if) * prev_u[i_l2] + dt2 * rhs) / (1.0 + lam_if)
    };
    new_u[i_l1] = w_l1;
    new_v[0] = w_l1;
    new_u[i_l2] = w_l2;
    new_v[n_v - 1] = w_l2;

    // Dirichlet ends, exact every step
    new_u[0] = 0.0;
    new_u[n_u - 1] = 0.0;

    (new_u, new_v)
}

/// Magnitude bound treated as blow-up: keeps squares representable in the
/// energy quadratures.
const OVERFLOW_GUARD: f64 = 1e140;

fn all_finite(fields: &[&[f64]]) -> bool {
    fields.iter().all(|f| f.iter().all(|v| v.is_finite() && v.abs() <= OVERFLOW_GUARD))
}

/// Build the initial state: fields from the presets, a second-order Taylor
/// start for the `t = -dt` level, the delay ring prefilled from `f0`, and the
/// first lookahead level computed with the same update as `step`.
pub fn init_state(config: &ProblemConfig, mesh: Arc<Mesh>) -> Result<SimState> {
    let kernel = config.kernel()?;
    let c = config.coefficients;
    let dt = mesh.dt;

    let mut u0 = sample_u(&config.initial.u0, &mesh);
    let mut u1 = sample_u(&config.initial.u1, &mesh);
    let mut v0 = sample_v(&config.initial.v0, &mesh);
    let mut v1 = sample_v(&config.initial.v1, &mesh);
    let f0 = sample_u(&config.initial.f0, &mesh);

    let i_l1 = mesh.iface_u_l1();
    let i_l2 = mesh.iface_u_l2();
    let n_u = mesh.n_u();
    let n_v = mesh.n_v();

    for (name, field) in [("u0", &u0), ("u1", &u1)] {
        if field[0].abs() > COMPAT_TOL || field[n_u - 1].abs() > COMPAT_TOL {
            return Err(Error::Incompatibility(format!(
                "{name} does not vanish at the Dirichlet ends (|{name}(0)| = {:.3e}, |{name}(L3)| = {:.3e})",
                field[0].abs(),
                field[n_u - 1].abs()
            )));
        }
    }
    for (name, uf, vf) in [("u0/v0", &u0, &v0), ("u1/v1", &u1, &v1)] {
        let j1 = (uf[i_l1] - vf[0]).abs();
        let j2 = (uf[i_l2] - vf[n_v - 1]).abs();
        if j1 > COMPAT_TOL || j2 > COMPAT_TOL {
            return Err(Error::Incompatibility(format!(
                "{name} disagree at the interfaces (|jump L1| = {j1:.3e}, |jump L2| = {j2:.3e})"
            )));
        }
    }
    // snap to the exact discrete constraints
    u0[0] = 0.0;
    u0[n_u - 1] = 0.0;
    u1[0] = 0.0;
    u1[n_u - 1] = 0.0;
    v0[0] = u0[i_l1];
    v0[n_v - 1] = u0[i_l2];
    v1[0] = u1[i_l1];
    v1[n_v - 1] = u1[i_l2];

    // Taylor start: u(-dt) = u0 - dt u1 + dt^2/2 u_tt(0), with the
    // acceleration from the same spatial operator (memory empty at t = 0)
    let inv_dx2 = 1.0 / (mesh.dx * mesh.dx);
    let mut u_prev = vec![0.0; n_u];
    for i in 1..n_u - 1 {
        let acc = if i == i_l1 {
            (c.b * (v0[1] - u0[i]) + c.a * (u0[i - 1] - u0[i])) * inv_dx2
                - 0.5 * (c.mu1 * u1[i] + c.mu2 * f0[i])
        } else if i == i_l2 {
            (c.a * (u0[i + 1] - u0[i]) + c.b * (v0[n_v - 2] - u0[i])) * inv_dx2
                - 0.5 * (c.mu1 * u1[i] + c.mu2 * f0[i])
        } else {
            c.a * (u0[i + 1] - 2.0 * u0[i] + u0[i - 1]) * inv_dx2 - c.mu1 * u1[i] - c.mu2 * f0[i]
        };
        u_prev[i] = u0[i] - dt * u1[i] + 0.5 * dt * dt * acc;
    }
    let mut v_prev = vec![0.0; n_v];
    for j in 1..n_v - 1 {
        let acc = c.b * (v0[j + 1] - 2.0 * v0[j] + v0[j - 1]) * inv_dx2;
        v_prev[j] = v0[j] - dt * v1[j] + 0.5 * dt * dt * acc;
    }
    v_prev[0] = u_prev[i_l1];
    v_prev[n_v - 1] = u_prev[i_l2];

    let m = mesh.delay_steps;
    let mut ring = VecDeque::with_capacity(m + 1);
    ring.push_back(u1.clone());
    for _ in 1..=m {
        ring.push_back(f0.clone());
    }

    let mut ux_hist = HistorySeries::new(dt, mesh.mids_u.len());
    ux_hist.push(grad_u(&mesh, &u0))?;

    // lookahead level 1 from the update at t = 0: empty memory, beta(0) = a
    let conv0 = vec![0.0; mesh.mids_u.len()];
    let (u_next, v_next) =
        advance(&mesh, config, &u0, &u_prev, &v0, &v_prev, &conv0, c.a, &ring[m]);
    if !all_finite(&[&u_next, &v_next]) {
        return Err(Error::Instability { step: 0, t: 0.0 });
    }

    let carry = match &kernel {
        RelaxationKernel::Exponential { .. } => Some(vec![0.0; mesh.mids_u.len()]),
        _ => None,
    };

    Ok(SimState {
        mesh,
        kernel,
        t: 0.0,
        step_index: 0,
        u_next,
        u: u0,
        u_prev,
        v_next,
        v: v0,
        v_prev,
        ring,
        ux_hist,
        carry,
    })
}

/// Advance the state by one time step.
///
/// `g_lags` optionally carries precomputed kernel values at integer lags
/// (`g_lags[j] = g(j dt)`) for the direct convolution path; exponential
/// kernels use the recursive carry instead.
pub(crate) fn step_inner(
    state: &mut SimState,
    config: &ProblemConfig,
    g_lags: Option<&[f64]>,
) -> Result<()> {
    let mesh = Arc::clone(&state.mesh);
    let c = config.coefficients;
    let dt = mesh.dt;
    let m = mesh.delay_steps;
    let level_time = state.t + dt;

    // gradient snapshot of the lookahead level, then the convolution there
    let grad_next = grad_u(&mesh, &state.u_next);
    let conv_mid: Vec<f64> = if let Some(carry) = &mut state.carry {
        let prev = state.ux_hist.latest().expect("history is never empty");
        let updated = kernels::recursive_conv_update(carry, &state.kernel, &grad_next, prev, dt)?;
        carry.copy_from_slice(&updated);
        state.ux_hist.push(grad_next)?;
        updated
    } else {
        state.ux_hist.push(grad_next)?;
        match g_lags {
            Some(lags) => kernels::conv_star_with_lags(lags, state.kernel.g0(), &state.ux_hist),
            None => kernels::conv_star(&state.kernel, &state.ux_hist)?,
        }
    };

    let beta_t = kernels::beta(&state.kernel, c.a, level_time)?;
    let z1 = &state.ring[m - 1];

    let (new_u, new_v) = advance(
        &mesh,
        config,
        &state.u_next,
        &state.u,
        &state.v_next,
        &state.v,
        &conv_mid,
        beta_t,
        z1,
    );
    if !all_finite(&[&new_u, &new_v]) {
        return Err(Error::Instability { step: state.step_index + 1, t: level_time });
    }

    // centered velocity of the lookahead level, into the delay ring
    let inv2dt = 1.0 / (2.0 * dt);
    let u_t: Vec<f64> =
        new_u.iter().zip(&state.u).map(|(&next, &prev)| (next - prev) * inv2dt).collect();
    state.ring.pop_back();
    state.ring.push_front(u_t);

    state.u_prev = std::mem::replace(&mut state.u, std::mem::replace(&mut state.u_next, new_u));
    state.v_prev = std::mem::replace(&mut state.v, std::mem::replace(&mut state.v_next, new_v));
    state.t = level_time;
    state.step_index += 1;
    Ok(())
}

/// Advance the state by one time step (self-contained kernel evaluation).
pub fn step(state: &mut SimState, config: &ProblemConfig) -> Result<()> {
    step_inner(state, config, None)
}

/// The delayed velocity `z(., 1, t) = u_t(., t - tau)`: the oldest ring slot,
/// exact because `dt` divides `tau`.
pub fn delayed_velocity(state: &SimState) -> &[f64] {
    &state.ring[state.mesh.delay_steps]
}

/// Interface residuals at the state time: the solution jump
/// `max_i |u(Li) - v(Li)|` (zero by construction) and the flux defect
/// `max_i |beta(t) u_x(Li) - b v_x(Li)|` with one-sided second-order
/// gradients.
pub fn interface_residual(state: &SimState, config: &ProblemConfig) -> Result<(f64, f64)> {
    let mesh = &state.mesh;
    let c = config.coefficients;
    let dx = mesh.dx;
    let i_l1 = mesh.iface_u_l1();
    let i_l2 = mesh.iface_u_l2();
    let n_v = mesh.n_v();
    let u = &state.u;
    let v = &state.v;

    let jump = (u[i_l1] - v[0]).abs().max((u[i_l2] - v[n_v - 1]).abs());

    let beta_t = kernels::beta(&state.kernel, c.a, state.t)?;
    let ux_l1 = (3.0 * u[i_l1] - 4.0 * u[i_l1 - 1] + u[i_l1 - 2]) / (2.0 * dx);
    let vx_l1 = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx);
    let ux_l2 = (-3.0 * u[i_l2] + 4.0 * u[i_l2 + 1] - u[i_l2 + 2]) / (2.0 * dx);
    let vx_l2 = (3.0 * v[n_v - 1] - 4.0 * v[n_v - 2] + v[n_v - 3]) / (2.0 * dx);
    let flux =
        (beta_t * ux_l1 - c.b * vx_l1).abs().max((beta_t * ux_l2 - c.b * vx_l2).abs());
    Ok((jump, flux))
}

/// Staggered discrete energy `1/2 |(u^{n+1}-u^n)/dt|_M^2 + 1/2 a(u^n, u^{n+1})`
/// of the central-difference scheme.
///
/// With `mu1 = mu2 = 0` and a zero kernel this is conserved exactly; with
/// friction only, it satisfies the exact per-step balance
/// `dE = -mu1 dt sum w |(u^{n+1}-u^{n-1})/(2dt)|^2` over the u nodes.
pub fn staggered_energy(state: &SimState, config: &ProblemConfig) -> f64 {
    let mesh = &state.mesh;
    let c = config.coefficients;
    let inv_dt = 1.0 / mesh.dt;
    let mut kin = 0.0;
    for (i, w) in mesh.wu.iter().enumerate() {
        let vel = (state.u_next[i] - state.u[i]) * inv_dt;
        kin += w * vel * vel;
    }
    for (j, w) in mesh.wv.iter().enumerate() {
        // interface velocities are shared with the u sum; their u weight is
        // the half cell, the v weight the other half
        let vel = (state.v_next[j] - state.v[j]) * inv_dt;
        kin += w * vel * vel;
    }
    let gu_cur = grad_u(mesh, &state.u);
    let gu_next = grad_u(mesh, &state.u_next);
    let mut elastic = 0.0;
    for (gc, gn) in gu_cur.iter().zip(&gu_next) {
        elastic += c.a * gc * gn * mesh.dx;
    }
    let gv_cur = grad_mid(&state.v, mesh.dx);
    let gv_next = grad_mid(&state.v_next, mesh.dx);
    for (gc, gn) in gv_cur.iter().zip(&gv_next) {
        elastic += c.b * gc * gn * mesh.dx;
    }
    0.5 * (kin + elastic)
}

/// Frictional power sink of the staggered balance at the state time:
/// `mu1 sum_u w |u_t|^2` with the centered velocity (ring slot 0).
pub fn friction_power(state: &SimState, config: &ProblemConfig) -> f64 {
    let vel = state.u_velocity();
    state
        .mesh
        .wu
        .iter()
        .zip(vel)
        .map(|(&w, &v)| w * v * v)
        .sum::<f64>()
        * config.coefficients.mu1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{
        Coefficients, Coupling, Discretization, Geometry, InitialData, KernelConfig,
    };
    use crate::solver::mesh::build_mesh;

    fn config() -> ProblemConfig {
        ProblemConfig {
            geometry: Geometry { l1: 1.0, l2: 2.0, l3: 3.0 },
            coefficients: Coefficients { a: 4.0, b: 4.0, mu1: 2.0, mu2: 1.0, tau: 0.5, zeta: 1.0 },
            kernel: KernelConfig::exponential(0.5, 1.0),
            initial: InitialData::zero(),
            discretization: Discretization {
                nx: 50,
                dt: 0.005,
                t_final: 1.0,
                coupling: Coupling::Coupled,
            },
        }
    }

    fn build(cfg: &ProblemConfig) -> SimState {
        let mesh = Arc::new(build_mesh(cfg).unwrap());
        init_state(cfg, mesh).unwrap()
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let cfg = config();
        let mut state = build(&cfg);
        for _ in 0..20 {
            step(&mut state, &cfg).unwrap();
        }
        assert!(state.u().iter().all(|&v| v == 0.0));
        assert!(state.v().iter().all(|&v| v == 0.0));
        assert!(state.u_velocity().iter().all(|&v| v == 0.0));
        assert_eq!(interface_residual(&state, &cfg).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn sine_mode_on_v_is_compatible() {
        let mut cfg = config();
        cfg.initial.v0 = InitialPreset::SineMode { k: 1, amp: 1.0 };
        let state = build(&cfg);
        assert_eq!(state.v()[0], 0.0);
    }

    #[test]
    fn wide_gaussian_violates_compatibility() {
        let mut cfg = config();
        cfg.initial.u0 = InitialPreset::GaussianBump { center: 0.5, width: 0.2, amp: 1.0 };
        let mesh = Arc::new(build_mesh(&cfg).unwrap());
        let err = init_state(&cfg, mesh).unwrap_err();
        assert!(matches!(err, Error::Incompatibility(_)));
    }

    #[test]
    fn dirichlet_and_interface_shared_every_step() {
        let mut cfg = config();
        cfg.initial.u0 = InitialPreset::GaussianBump { center: 0.5, width: 0.06, amp: 1.0 };
        let mut state = build(&cfg);
        for _ in 0..100 {
            step(&mut state, &cfg).unwrap();
            let n_u = state.mesh().n_u();
            let n_v = state.mesh().n_v();
            assert_eq!(state.u()[0], 0.0);
            assert_eq!(state.u()[n_u - 1], 0.0);
            assert_eq!(state.u()[state.mesh().iface_u_l1()], state.v()[0]);
            assert_eq!(state.u()[state.mesh().iface_u_l2()], state.v()[n_v - 1]);
            let (jump, _) = interface_residual(&state, &cfg).unwrap();
            assert_eq!(jump, 0.0);
        }
    }

    #[test]
    fn damped_staggered_balance_is_exact() {
        // mu2 = 0, g = 0, mu1 > 0: the staggered energy drops by exactly the
        // frictional power of the averaged damping term
        let mut cfg = config();
        cfg.coefficients.mu2 = 0.0;
        cfg.kernel = KernelConfig::exponential(0.0, 1.0);
        cfg.initial.u0 = InitialPreset::GaussianBump { center: 0.5, width: 0.06, amp: 1.0 };
        let mut state = build(&cfg);
        let mut e_prev = staggered_energy(&state, &cfg);
        let scale = e_prev;
        for _ in 0..200 {
            step(&mut state, &cfg).unwrap();
            let e = staggered_energy(&state, &cfg);
            let sink = friction_power(&state, &cfg) * state.mesh().dt;
            assert!(
                (e - (e_prev - sink)).abs() <= 1e-12 * scale,
                "balance defect {:e}",
                (e - (e_prev - sink)).abs()
            );
            assert!(e <= e_prev + 1e-14 * scale, "energy increased");
            e_prev = e;
        }
        // strict decrease while kinetic energy is present
        assert!(e_prev < scale);
    }

    #[test]
    fn standing_wave_tracks_analytic_solution() {
        // pinned interfaces, no damping, no memory: middle domain is the
        // Dirichlet wave equation with the separated standing-wave solution
        let mut cfg = config();
        cfg.coefficients.mu1 = 0.0;
        cfg.coefficients.mu2 = 0.0;
        cfg.kernel = KernelConfig::exponential(0.0, 1.0);
        cfg.discretization.coupling = Coupling::Pinned;
        cfg.initial.v0 = InitialPreset::SineMode { k: 1, amp: 1.0 };
        let mesh = Arc::new(build_mesh(&cfg).unwrap());
        let mut state = init_state(&cfg, Arc::clone(&mesh)).unwrap();
        let b = cfg.coefficients.b;
        let len = 1.0;
        let omega = b.sqrt() * std::f64::consts::PI / len;
        let t_final = 1.0;
        let steps = (t_final / mesh.dt).round() as usize;
        for _ in 0..steps {
            step(&mut state, &cfg).unwrap();
        }
        let mut err2 = 0.0;
        for (j, &x) in mesh.xs_v.iter().enumerate() {
            let exact = (std::f64::consts::PI * (x - 1.0) / len).sin() * (omega * state.t()).cos();
            let d = state.v()[j] - exact;
            err2 += mesh.wv[j] * d * d;
        }
        let err = err2.sqrt();
        assert!(err < 5e-3, "L2 error {err}");
        // u stays exactly zero in the decoupled run
        assert!(state.u().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn delayed_velocity_is_oldest_slot() {
        let mut cfg = config();
        cfg.initial.f0 = InitialPreset::GaussianBump { center: 0.5, width: 0.06, amp: 0.7 };
        cfg.initial.u0 = InitialPreset::GaussianBump { center: 0.5, width: 0.06, amp: 1.0 };
        let mesh = Arc::new(build_mesh(&cfg).unwrap());
        let f0 = sample_u(&cfg.initial.f0, &mesh);
        let mut state = init_state(&cfg, mesh).unwrap();
        // before tau has elapsed the delayed velocity is the sampled f0
        assert_eq!(delayed_velocity(&state), f0.as_slice());
        for _ in 0..10 {
            step(&mut state, &cfg).unwrap();
            assert_eq!(delayed_velocity(&state), f0.as_slice());
        }
    }

    #[test]
    fn instability_is_detected() {
        // force a CFL-violating dt directly into the mesh
        let cfg = config();
        let mut mesh = build_mesh(&cfg).unwrap();
        mesh.dt = 4.0 * mesh.dx; // far beyond dx/sqrt(a) = dx/2
        mesh.delay_steps = (cfg.coefficients.tau / mesh.dt).ceil().max(1.0) as usize;
        let mut cfg2 = cfg.clone();
        cfg2.initial.u0 = InitialPreset::GaussianBump { center: 0.5, width: 0.06, amp: 1.0 };
        let mut state = init_state(&cfg2, Arc::new(mesh)).unwrap();
        let mut failed = false;
        for _ in 0..2000 {
            if let Err(Error::Instability { step, .. }) = step(&mut state, &cfg2) {
                assert!(step > 0);
                failed = true;
                break;
            }
        }
        assert!(failed, "blow-up was not detected");
    }

    #[test]
    fn interface_flux_residual_second_order_on_manufactured_state() {
        // prescribe smooth fields satisfying beta u_x(Li) = b v_x(Li) exactly
        // and check that the one-sided measurement converges at second order
        let cfg = config();
        let c = cfg.coefficients;
        let kernel = cfg.kernel().unwrap();
        let t_star = 0.7;
        let beta_t = crate::kernels::beta(&kernel, c.a, t_star).unwrap();
        // u = sin(x) on [0,L1]; v matches value and scaled slope at L1 and
        // carries a quadratic term; right u segment matches at L2
        let residual_at = |nx: usize| -> f64 {
            let mut cfg_n = cfg.clone();
            cfg_n.discretization.nx = nx;
            let mesh = Arc::new(build_mesh(&cfg_n).unwrap());
            let mut state = init_state(&cfg_n, Arc::clone(&mesh)).unwrap();
            state.t = t_star;
            let v_l1 = 1.0f64.sin();
            let s_l1 = beta_t * 1.0f64.cos() / c.b;
            let quad = 0.3;
            let v_at = |x: f64| v_l1 + s_l1 * (x - 1.0) + quad * (x - 1.0) * (x - 1.0);
            let v_l2 = v_at(2.0);
            let vx_l2 = s_l1 + 2.0 * quad;
            let u_s2 = |x: f64| {
                // cubic on [L2, L3] with matching value/scaled slope at L2 and u(L3) = 0
                let s = x - 2.0;
                let ux_l2 = c.b * vx_l2 / beta_t;
                let c3 = -(v_l2 + ux_l2) ; // fixes u(3) = 0 with the cubic below
                v_l2 + ux_l2 * s + c3 * s * s * s
            };
            for (i, &x) in mesh.xs_u.iter().enumerate() {
                state.u[i] = if i < mesh.n_left { x.sin() } else { u_s2(x) };
            }
            for (j, &x) in mesh.xs_v.iter().enumerate() {
                state.v[j] = v_at(x);
            }
            let (_, flux) = interface_residual(&state, &cfg_n).unwrap();
            flux
        };
        let r0 = residual_at(25);
        let r1 = residual_at(50);
        let ratio = r0 / r1;
        assert!((3.0..5.0).contains(&ratio), "one-sided gradient ratio {ratio}");
    }

    #[test]
    fn deterministic_stepping() {
        let mut cfg = config();
        cfg.initial.u0 = InitialPreset::GaussianBump { center: 0.5, width: 0.06, amp: 1.0 };
        let run = || {
            let mut state = build(&cfg);
            for _ in 0..50 {
                step(&mut state, &cfg).unwrap();
            }
            (state.u().to_vec(), state.v().to_vec())
        };
        let (u1, v1) = run();
        let (u2, v2) = run();
        assert_eq!(u1, u2);
        assert_eq!(v1, v2);
    }

    #[test]
    fn taylor_start_second_order() {
        // refine dt on a fixed spatial mesh: the standing-wave error at fixed
        // time must drop ~4x per dt halving only if the start is second order
        let mut cfg = config();
        cfg.coefficients.mu1 = 0.5;
        cfg.coefficients.mu2 = 0.0;
        cfg.kernel = KernelConfig::exponential(0.0, 1.0);
        cfg.discretization.coupling = Coupling::Pinned;
        cfg.initial.v0 = InitialPreset::SineMode { k: 1, amp: 1.0 };
        cfg.discretization.nx = 400;
        // reference with tiny dt
        let solve = |dt: f64| {
            let mut c = cfg.clone();
            c.discretization.dt = dt;
            let mesh = Arc::new(build_mesh(&c).unwrap());
            let mut state = init_state(&c, Arc::clone(&mesh)).unwrap();
            let steps = (0.2 / mesh.dt).round() as usize;
            for _ in 0..steps {
                step(&mut state, &c).unwrap();
            }
            (state.v().to_vec(), mesh)
        };
        let (v_ref, _) = solve(0.5 / 4000.0);
        let err = |dt: f64| {
            let (v, mesh) = solve(dt);
            let mut e2 = 0.0;
            for j in 0..v.len() {
                let d = v[j] - v_ref[j];
                e2 += mesh.wv[j] * d * d;
            }
            e2.sqrt()
        };
        let e0 = err(0.5 / 500.0);
        let e1 = err(0.5 / 1000.0);
        let ratio = e0 / e1;
        assert!(ratio > 3.0, "time refinement ratio {ratio}");
    }
}
