//! Shared-interface spatial mesh for the three segments
//! `[0, L1]`, `[L1, L2]`, `[L2, L3]`.
//!
//! The `u` field lives on the outer two segments, the `v` field on the middle
//! one; `L1` and `L2` are nodes of both fields and the solver keeps the two
//! copies bitwise equal (shared unknowns). Spacing is uniform across all
//! segments; the time step is reduced to the CFL bound `dx / sqrt(max(a, b))`
//! and then to the largest value that divides the delay `tau` exactly.

use crate::error::Error;
use crate::problem::ProblemConfig;
use crate::Result;

#[derive(Clone, Debug)]
pub struct Mesh {
    pub dx: f64,
    pub dt: f64,
    /// Number of time steps per delay: `delay_steps * dt = tau`.
    pub delay_steps: usize,
    /// Node coordinates of the u field: `[0, L1]` then `[L2, L3]`.
    pub xs_u: Vec<f64>,
    /// Node coordinates of the v field: `[L1, L2]`.
    pub xs_v: Vec<f64>,
    /// Node count of the left segment (index of the `L1` node is
    /// `n_left - 1`; the `L2` node is at `n_left`).
    pub n_left: usize,
    /// Trapezoid quadrature weights per u node (both segments), include `dx`.
    pub wu: Vec<f64>,
    /// Trapezoid quadrature weights per v node.
    pub wv: Vec<f64>,
    /// Cell-midpoint coordinates of the u field (left cells then right cells).
    pub mids_u: Vec<f64>,
    /// Cell-midpoint coordinates of the v field.
    pub mids_v: Vec<f64>,
    /// Adjustments applied during construction (dt reductions, dx snapping).
    pub warnings: Vec<String>,
}

impl Mesh {
    /// u-field index of the `L1` interface node.
    pub fn iface_u_l1(&self) -> usize {
        self.n_left - 1
    }

    /// u-field index of the `L2` interface node.
    pub fn iface_u_l2(&self) -> usize {
        self.n_left
    }

    pub fn n_u(&self) -> usize {
        self.xs_u.len()
    }

    pub fn n_v(&self) -> usize {
        self.xs_v.len()
    }

    /// Cell count of the left u segment.
    pub fn cells_left(&self) -> usize {
        self.n_left - 1
    }

    /// Cell count of the right u segment.
    pub fn cells_right(&self) -> usize {
        self.xs_u.len() - self.n_left - 1
    }

    /// Total measure of the u domain.
    pub fn omega_measure(&self) -> f64 {
        self.wu.iter().sum()
    }
}

const COMMENSURATE_TOL: f64 = 1e-9;

fn segment_cells(len: f64, per_unit: f64) -> (usize, f64) {
    let m = (len * per_unit).round().max(2.0);
    (m as usize, (m / per_unit - len).abs())
}

/// Build the mesh for a configuration. Geometry segments that are not integer
/// multiples of `1/nx` get a denser commensurate spacing (with a warning);
/// the time step is reduced to satisfy the CFL bound and to divide `tau`.
pub fn build_mesh(config: &ProblemConfig) -> Result<Mesh> {
    let g = config.geometry;
    let c = config.coefficients;
    let d = config.discretization;
    if !(0.0 < g.l1 && g.l1 < g.l2 && g.l2 < g.l3) {
        return Err(Error::InvalidConfig(format!(
            "geometry must satisfy 0 < L1 < L2 < L3, got ({}, {}, {})",
            g.l1, g.l2, g.l3
        )));
    }
    if d.nx == 0 || d.dt <= 0.0 || d.dt.is_nan() || c.tau <= 0.0 || c.tau.is_nan() {
        return Err(Error::InvalidConfig("nx, dt and tau must be positive".into()));
    }

    let mut warnings = Vec::new();
    let segments = [g.l1, g.l2 - g.l1, g.l3 - g.l2];

    // find a spacing 1/q, q >= nx, that makes all three segments integer
    // multiples within tolerance
    let mut chosen = None;
    for q in d.nx..=d.nx.saturating_mul(64) {
        let per_unit = q as f64;
        let fits = segments.iter().all(|&len| segment_cells(len, per_unit).1 <= COMMENSURATE_TOL);
        if fits {
            chosen = Some(q);
            break;
        }
    }
    let q = chosen.ok_or_else(|| {
        Error::InvalidConfig(format!(
            "geometry ({}, {}, {}) is not commensurate with any spacing in [1/{}, 1/{}]",
            g.l1,
            g.l2,
            g.l3,
            d.nx,
            d.nx.saturating_mul(64)
        ))
    })?;
    if q != d.nx {
        warnings.push(format!("dx adjusted from 1/{} to 1/{} to fit the geometry", d.nx, q));
    }
    let per_unit = q as f64;
    let dx = 1.0 / per_unit;
    let m1 = segment_cells(segments[0], per_unit).0;
    let m2 = segment_cells(segments[1], per_unit).0;
    let m3 = segment_cells(segments[2], per_unit).0;

    // CFL, then the largest dt <= bound that divides tau exactly
    let cfl = dx / c.a.max(c.b).sqrt();
    let mut dt = d.dt;
    if dt > cfl {
        warnings.push(format!("dt reduced from {} to the CFL bound {}", dt, cfl));
        dt = cfl;
    }
    let delay_steps = (c.tau / dt - 1e-9).ceil().max(1.0) as usize;
    let dt_fit = c.tau / delay_steps as f64;
    if (dt_fit - dt).abs() > 1e-15 * dt {
        warnings.push(format!("dt adjusted to {} = tau/{} to divide the delay", dt_fit, delay_steps));
    }
    let dt = dt_fit;

    let mut xs_u = Vec::with_capacity(m1 + m3 + 2);
    for j in 0..=m1 {
        xs_u.push(g.l1 * j as f64 / m1 as f64);
    }
    for j in 0..=m3 {
        xs_u.push(g.l2 + (g.l3 - g.l2) * j as f64 / m3 as f64);
    }
    let xs_v: Vec<f64> = (0..=m2).map(|j| g.l1 + (g.l2 - g.l1) * j as f64 / m2 as f64).collect();

    let seg_weights = |cells: usize| -> Vec<f64> {
        (0..=cells).map(|j| if j == 0 || j == cells { 0.5 * dx } else { dx }).collect()
    };
    let mut wu = seg_weights(m1);
    wu.extend(seg_weights(m3));
    let wv = seg_weights(m2);

    let mids = |xs: &[f64]| xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect::<Vec<_>>();
    let mut mids_u = mids(&xs_u[..=m1]);
    mids_u.extend(mids(&xs_u[m1 + 1..]));
    let mids_v = mids(&xs_v);

    Ok(Mesh {
        dx,
        dt,
        delay_steps,
        xs_u,
        xs_v,
        n_left: m1 + 1,
        wu,
        wv,
        mids_u,
        mids_v,
        warnings,
    })
}
