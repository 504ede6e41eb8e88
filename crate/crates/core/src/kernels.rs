//! Relaxation kernels and memory-convolution operators.
//!
//! A relaxation kernel `g` is a nonnegative, nonincreasing function with a
//! decay-rate witness `xi(t) = -g'(t)/g(t)` that is positive and
//! nonincreasing. Two closed-form families are built in,
//!
//! ```text
//! exponential:  g(t) = g0 e^{-eta t}          xi = eta
//! polynomial:   g(t) = g0 (1 + t)^{-p}, p>1   xi = p/(1+t)
//! ```
//!
//! plus linearly interpolated tabulated kernels. The convolution operators
//! over a uniformly sampled history `h(., t_k)` are
//!
//! ```text
//! (g*h)(t) = ∫_0^t g(t-s) h(s) ds
//! (g◇h)(t) = ∫_0^t g(t-s) (h(t) - h(s)) ds
//! (g□h)(t) = ∫_0^t g(t-s) (h(t) - h(s))^2 ds
//! ```
//!
//! all discretized with the composite trapezoid rule on the shared time grid.
//! The diamond operator uses the signed difference `h(t) - h(s)` so that the
//! decomposition `(g*h) + (g◇h) = (∫_0^t g) h(t)` holds as an exact equation
//! on the shared quadrature nodes.

use crate::error::Error;
use crate::Result;

/// Point evaluation of a kernel: value, derivative, decay witness, and
/// cumulative integral `G(t) = ∫_0^t g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelPoint {
    pub g: f64,
    pub g_prime: f64,
    pub xi: f64,
    pub g_cumulative: f64,
}

/// Linearly interpolated kernel given on a sample grid.
///
/// `xi` is derived from the tabulated `g'/g` (zero where `g` vanishes); the
/// cumulative integral is the exact integral of the interpolant.
#[derive(Clone, Debug)]
pub struct TabulatedKernel {
    t: Vec<f64>,
    g: Vec<f64>,
    g_prime: Vec<f64>,
    xi: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Memory kernel of the viscoelastic term.
#[derive(Clone, Debug)]
pub enum RelaxationKernel {
    Exponential { g0: f64, eta: f64 },
    Polynomial { g0: f64, p: f64 },
    Tabulated(TabulatedKernel),
}

impl RelaxationKernel {
    /// `g(t) = g0 e^{-eta t}`. `g0 = 0` encodes the memory-free limit used by
    /// conservation controls; hypothesis validation flags it separately.
    pub fn exponential(g0: f64, eta: f64) -> Result<Self> {
        if g0 < 0.0 || eta < 0.0 || g0.is_nan() || eta.is_nan() {
            return Err(Error::InvalidKernel(format!(
                "exponential kernel needs g0 >= 0 and eta >= 0, got g0 = {g0}, eta = {eta}"
            )));
        }
        Ok(Self::Exponential { g0, eta })
    }

    /// `g(t) = g0 (1 + t)^{-p}` with `p > 1` so that `∫_0^∞ g` is finite.
    pub fn polynomial(g0: f64, p: f64) -> Result<Self> {
        if g0 < 0.0 || g0.is_nan() || p <= 1.0 || p.is_nan() {
            return Err(Error::InvalidKernel(format!(
                "polynomial kernel needs g0 >= 0 and p > 1, got g0 = {g0}, p = {p}"
            )));
        }
        Ok(Self::Polynomial { g0, p })
    }

    /// Tabulated kernel from `(t_j, g_j, g'_j)` rows; `t` must start at 0 and
    /// be strictly increasing.
    pub fn tabulated(t: Vec<f64>, g: Vec<f64>, g_prime: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != g.len() || t.len() != g_prime.len() {
            return Err(Error::InvalidKernel(
                "tabulated kernel needs >= 2 rows of equal length columns".into(),
            ));
        }
        if t[0] != 0.0 {
            return Err(Error::InvalidKernel("table must start at t = 0".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidKernel("table times must be strictly increasing".into()));
        }
        let xi = g
            .iter()
            .zip(&g_prime)
            .map(|(&gj, &gpj)| if gj > 0.0 { -gpj / gj } else { 0.0 })
            .collect();
        let mut cumulative = vec![0.0; t.len()];
        for j in 1..t.len() {
            cumulative[j] = cumulative[j - 1] + 0.5 * (t[j] - t[j - 1]) * (g[j] + g[j - 1]);
        }
        Ok(Self::Tabulated(TabulatedKernel { t, g, g_prime, xi, cumulative }))
    }

    /// Kernel value at 0.
    pub fn g0(&self) -> f64 {
        match self {
            Self::Exponential { g0, .. } | Self::Polynomial { g0, .. } => *g0,
            Self::Tabulated(tab) => tab.g[0],
        }
    }

    /// Evaluate `g`, `g'`, `xi` and `G(t) = ∫_0^t g` at `t >= 0`.
    pub fn eval(&self, t: f64) -> Result<KernelPoint> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        match self {
            Self::Exponential { g0, eta } => {
                let g = g0 * (-eta * t).exp();
                let g_cumulative = if *eta > 0.0 {
                    (g0 / eta) * (1.0 - (-eta * t).exp())
                } else {
                    g0 * t
                };
                Ok(KernelPoint { g, g_prime: -eta * g, xi: *eta, g_cumulative })
            }
            Self::Polynomial { g0, p } => {
                let base = 1.0 + t;
                let g = g0 * base.powf(-p);
                Ok(KernelPoint {
                    g,
                    g_prime: -p * g / base,
                    xi: p / base,
                    g_cumulative: (g0 / (p - 1.0)) * (1.0 - base.powf(1.0 - p)),
                })
            }
            Self::Tabulated(tab) => tab.eval(t),
        }
    }

    /// `∫_0^∞ g(s) ds` where a closed form exists.
    ///
    /// Returns `None` when the integral diverges (`eta = 0` with `g0 > 0`);
    /// tabulated kernels report the finite-horizon integral over their table
    /// (callers treat it as a lower bound).
    pub fn total_mass(&self) -> Option<f64> {
        match self {
            Self::Exponential { g0, eta } => {
                if *eta > 0.0 {
                    Some(g0 / eta)
                } else if *g0 == 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            Self::Polynomial { g0, p } => Some(g0 / (p - 1.0)),
            Self::Tabulated(tab) => Some(*tab.cumulative.last().unwrap()),
        }
    }

    /// `∫_0^t xi(s) ds`, the exponent of the general decay estimate.
    pub fn xi_integral(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        match self {
            Self::Exponential { eta, .. } => Ok(eta * t),
            Self::Polynomial { p, .. } => Ok(p * (1.0 + t).ln()),
            Self::Tabulated(tab) => tab.xi_integral(t),
        }
    }

    /// True when the kernel is identically zero.
    pub fn is_zero(&self) -> bool {
        self.g0() == 0.0
    }

    /// Table horizon for tabulated kernels; `None` for the closed-form
    /// families (defined on all of `t >= 0`).
    pub fn horizon(&self) -> Option<f64> {
        match self {
            Self::Tabulated(tab) => Some(*tab.t.last().unwrap()),
            _ => None,
        }
    }
}

impl TabulatedKernel {
    fn segment(&self, t: f64) -> Result<usize> {
        let t_max = *self.t.last().unwrap();
        if t > t_max {
            return Err(Error::TableRange { t, t_max });
        }
        // partition_point returns the first index with t[j] > t, so j-1 is the
        // segment start; clamp for t == t_max.
        let j = self.t.partition_point(|&tj| tj <= t);
        Ok(j.min(self.t.len() - 1) - 1)
    }

    fn eval(&self, t: f64) -> Result<KernelPoint> {
        let j = self.segment(t)?;
        let (t0, t1) = (self.t[j], self.t[j + 1]);
        let w = (t - t0) / (t1 - t0);
        let lerp = |col: &[f64]| col[j] + w * (col[j + 1] - col[j]);
        let g = lerp(&self.g);
        // exact integral of the linear interpolant up to t
        let g_cumulative = self.cumulative[j] + 0.5 * (t - t0) * (self.g[j] + g);
        Ok(KernelPoint { g, g_prime: lerp(&self.g_prime), xi: lerp(&self.xi), g_cumulative })
    }

    fn xi_integral(&self, t: f64) -> Result<f64> {
        let j = self.segment(t)?;
        let mut acc = 0.0;
        for k in 0..j {
            acc += 0.5 * (self.t[k + 1] - self.t[k]) * (self.xi[k + 1] + self.xi[k]);
        }
        let w = (t - self.t[j]) / (self.t[j + 1] - self.t[j]);
        let xi_t = self.xi[j] + w * (self.xi[j + 1] - self.xi[j]);
        Ok(acc + 0.5 * (t - self.t[j]) * (self.xi[j] + xi_t))
    }
}

/// Effective stiffness `beta(t) = a - ∫_0^t g(s) ds`.
pub fn beta(kernel: &RelaxationKernel, a: f64, t: f64) -> Result<f64> {
    Ok(a - kernel.eval(t)?.g_cumulative)
}

/// Infinite-time stiffness `beta_0 = a - ∫_0^∞ g(s) ds`; `None` when the
/// kernel mass diverges.
pub fn beta0(kernel: &RelaxationKernel, a: f64) -> Option<f64> {
    kernel.total_mass().map(|m| a - m)
}

/// Uniformly sampled field history `h(., t_k)`, `t_k = k dt`, append-only.
///
/// Snapshot 0 is the state at `t = 0`; there are no gaps by construction.
#[derive(Clone, Debug)]
pub struct HistorySeries {
    dt: f64,
    width: usize,
    samples: Vec<Vec<f64>>,
}

impl HistorySeries {
    pub fn new(dt: f64, width: usize) -> Self {
        assert!(dt > 0.0, "history spacing must be positive");
        Self { dt, width, samples: Vec::new() }
    }

    pub fn push(&mut self, snapshot: Vec<f64>) -> Result<()> {
        if snapshot.len() != self.width {
            return Err(Error::HistoryWidth { expected: self.width, got: snapshot.len() });
        }
        self.samples.push(snapshot);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Time of the latest snapshot, `(len - 1) * dt`; 0 when empty.
    pub fn t_now(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            (self.samples.len() - 1) as f64 * self.dt
        }
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.samples[k]
    }

    pub fn latest(&self) -> Option<&[f64]> {
        self.samples.last().map(|s| s.as_slice())
    }
}

/// Relative level below which old kernel values are dropped from the
/// quadratures (`|g(lag)| < TAIL_CUTOFF * g(0)`); the skipped contribution is
/// below per-step roundoff.
pub const TAIL_CUTOFF: f64 = 1e-12;

fn first_active(g_lags: &[f64], n: usize, g0: f64) -> usize {
    if g0 == 0.0 {
        return 0;
    }
    let threshold = TAIL_CUTOFF * g0.abs();
    // g_lags[n - k] is the weight of sample k; lags shrink as k grows.
    (0..=n).find(|&k| g_lags[n - k].abs() >= threshold).unwrap_or(n + 1)
}

fn kernel_lags(kernel: &RelaxationKernel, n: usize, dt: f64, deriv: bool) -> Result<Vec<f64>> {
    (0..=n)
        .map(|j| {
            let pt = kernel.eval(j as f64 * dt)?;
            Ok(if deriv { pt.g_prime } else { pt.g })
        })
        .collect()
}

#[derive(Clone, Copy)]
enum ConvMode {
    Star,
    Diamond,
    Square,
}

/// Trapezoid-rule convolution against precomputed kernel values at integer
/// lags; `g_lags[j] = g(j dt)` with `j = 0 ..= len-1`. The upto index selects
/// the history prefix `samples[0..=upto]` as "now".
fn conv_with_lags_prefix(
    g_lags: &[f64],
    g0: f64,
    hist: &HistorySeries,
    upto: usize,
    mode: ConvMode,
) -> Vec<f64> {
    let width = hist.width();
    let mut out = vec![0.0; width];
    if upto == 0 || hist.len() <= 1 {
        return out;
    }
    let n = upto;
    let dt = hist.dt();
    let latest = hist.sample(n);
    let start = first_active(g_lags, n, g0);
    for k in start..=n {
        let w = if k == 0 || k == n { 0.5 * dt } else { dt };
        let c = w * g_lags[n - k];
        if c == 0.0 {
            continue;
        }
        let row = hist.sample(k);
        match mode {
            ConvMode::Star => {
                for i in 0..width {
                    out[i] += c * row[i];
                }
            }
            ConvMode::Diamond => {
                for i in 0..width {
                    out[i] += c * (latest[i] - row[i]);
                }
            }
            ConvMode::Square => {
                for i in 0..width {
                    let d = latest[i] - row[i];
                    out[i] += c * d * d;
                }
            }
        }
    }
    out
}

/// Full-history `(g*h)` against a precomputed lag table; the fast path used
/// by the solver's direct (non-exponential) branch.
pub(crate) fn conv_star_with_lags(g_lags: &[f64], g0: f64, hist: &HistorySeries) -> Vec<f64> {
    if hist.len() <= 1 {
        return vec![0.0; hist.width()];
    }
    conv_with_lags_prefix(g_lags, g0, hist, hist.len() - 1, ConvMode::Star)
}

/// One-pass evaluation of the decomposition residual and the Cauchy-Schwarz
/// margin against a precomputed lag table (per-step run checks).
pub(crate) fn operator_residuals_with_lags(
    g_lags: &[f64],
    g0: f64,
    hist: &HistorySeries,
) -> (f64, f64) {
    let width = hist.width();
    if hist.len() <= 1 {
        return (0.0, 0.0);
    }
    let n = hist.len() - 1;
    let dt = hist.dt();
    let latest = hist.sample(n);
    let start = first_active(g_lags, n, g0);
    let mut star = vec![0.0; width];
    let mut diamond = vec![0.0; width];
    let mut square = vec![0.0; width];
    let mut star_abs = vec![0.0; width];
    let mut mass = 0.0;
    for k in start..=n {
        let w = if k == 0 || k == n { 0.5 * dt } else { dt };
        let c = w * g_lags[n - k];
        mass += c;
        if c == 0.0 {
            continue;
        }
        let row = hist.sample(k);
        for i in 0..width {
            let d = latest[i] - row[i];
            star[i] += c * row[i];
            diamond[i] += c * d;
            square[i] += c * d * d;
            star_abs[i] += (c * row[i]).abs();
        }
    }
    let mut decomp = 0.0f64;
    let mut cs = f64::NEG_INFINITY;
    for i in 0..width {
        let lhs = star[i] + diamond[i];
        let rhs = mass * latest[i];
        // both sides cancel within themselves; the backward-error scale of
        // the shared summation is the accumulated operand magnitude
        let scale = (star_abs[i] + rhs.abs()).max(1e-300);
        decomp = decomp.max((lhs - rhs).abs() / scale);
        let lhs_cs = diamond[i] * diamond[i];
        let rhs_cs = mass * square[i];
        let scale_cs = lhs_cs.abs().max(rhs_cs.abs()).max(1e-300);
        cs = cs.max((lhs_cs - rhs_cs) / scale_cs);
    }
    (decomp, cs)
}

/// Kernel values at integer lags `g(j dt)`, `j = 0..=n` (`g'` when `deriv`).
pub(crate) fn lag_table(kernel: &RelaxationKernel, n: usize, dt: f64, deriv: bool) -> Result<Vec<f64>> {
    kernel_lags(kernel, n, dt, deriv)
}

fn conv(kernel: &RelaxationKernel, hist: &HistorySeries, mode: ConvMode, deriv: bool) -> Result<Vec<f64>> {
    if hist.len() <= 1 {
        // empty integration interval (t = 0 convention)
        return Ok(vec![0.0; hist.width()]);
    }
    let n = hist.len() - 1;
    let lags = kernel_lags(kernel, n, hist.dt(), deriv)?;
    Ok(conv_with_lags_prefix(&lags, kernel.g0(), hist, n, mode))
}

/// `(g*h)(t_now)` nodewise by the composite trapezoid rule.
pub fn conv_star(kernel: &RelaxationKernel, hist: &HistorySeries) -> Result<Vec<f64>> {
    conv(kernel, hist, ConvMode::Star, false)
}

/// `(g◇h)(t_now)` nodewise with the signed difference `h(t_now) - h(s)`.
pub fn conv_diamond(kernel: &RelaxationKernel, hist: &HistorySeries) -> Result<Vec<f64>> {
    conv(kernel, hist, ConvMode::Diamond, false)
}

/// `(g□h)(t_now)` nodewise; entries are nonnegative for nonnegative kernels.
pub fn conv_square(kernel: &RelaxationKernel, hist: &HistorySeries) -> Result<Vec<f64>> {
    conv(kernel, hist, ConvMode::Square, false)
}

/// `(g'□h)(t_now)` using the analytic kernel derivative in the quadrature.
pub fn conv_square_deriv(kernel: &RelaxationKernel, hist: &HistorySeries) -> Result<Vec<f64>> {
    conv(kernel, hist, ConvMode::Square, true)
}

/// Trapezoid-rule `∫_0^{t_now} g`, on the same nodes as the convolutions.
pub fn g_mass_trapezoid(kernel: &RelaxationKernel, n: usize, dt: f64) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let lags = kernel_lags(kernel, n, dt, false)?;
    let mut acc = 0.5 * dt * (lags[0] + lags[n]);
    for lag in &lags[1..n] {
        acc += dt * lag;
    }
    Ok(acc)
}

/// Maximum relative residual of `(g*h) + (g◇h) = (∫_0^t g) h(t)` on the
/// shared quadrature nodes. Exact in exact arithmetic; the returned value is
/// pure rounding noise.
pub fn decomposition_residual(kernel: &RelaxationKernel, hist: &HistorySeries) -> Result<f64> {
    if hist.len() <= 1 {
        return Ok(0.0);
    }
    let n = hist.len() - 1;
    let lags = kernel_lags(kernel, n, hist.dt(), false)?;
    Ok(operator_residuals_with_lags(&lags, kernel.g0(), hist).0)
}

/// Largest normalized violation of the Cauchy-Schwarz bound
/// `(g◇h)^2 <= (∫_0^t g) (g□h)` nodewise; nonpositive when the bound holds.
pub fn cauchy_schwarz_margin(kernel: &RelaxationKernel, hist: &HistorySeries) -> Result<f64> {
    let diamond = conv_diamond(kernel, hist)?;
    let square = conv_square(kernel, hist)?;
    let mass = if hist.len() <= 1 {
        0.0
    } else {
        g_mass_trapezoid(kernel, hist.len() - 1, hist.dt())?
    };
    let mut worst = f64::NEG_INFINITY;
    for i in 0..hist.width() {
        let lhs = diamond[i] * diamond[i];
        let rhs = mass * square[i];
        let scale = lhs.abs().max(rhs.abs()).max(1e-300);
        worst = worst.max((lhs - rhs) / scale);
    }
    Ok(worst)
}

/// Residual of the product-rule identity
///
/// ```text
/// 2 (g*h) h' = (g'□h) - g(t) h^2 - d/dt { (g□h) - (∫_0^t g) h^2 }
/// ```
///
/// evaluated at interior time levels with central differences for `h'` and
/// `d/dt`. The `g(t) h^2` term is folded into the exact derivative of
/// `(∫_0^t g) h^2`, which leaves
/// `2 (g*h) h' = (g'□h) - d/dt(g□h) + G(t) d/dt(h^2)` and makes the residual
/// vanish identically for constant histories. Returns the maximum nodewise
/// absolute residual; it decreases as O(dt^2) on smooth histories.
pub fn check_lemma21(kernel: &RelaxationKernel, hist: &HistorySeries) -> Result<f64> {
    if hist.len() < 3 {
        return Err(Error::TooFewSamples { op: "check_lemma21", needed: 3, got: hist.len() });
    }
    let n = hist.len() - 1;
    let dt = hist.dt();
    let width = hist.width();
    let g_lags = kernel_lags(kernel, n, dt, false)?;
    let gp_lags = kernel_lags(kernel, n, dt, true)?;
    let g0 = kernel.g0();

    let squares: Vec<Vec<f64>> = (0..=n)
        .map(|k| conv_with_lags_prefix(&g_lags, g0, hist, k, ConvMode::Square))
        .collect();

    let mut worst = 0.0f64;
    for k in 1..n {
        let star = conv_with_lags_prefix(&g_lags, g0, hist, k, ConvMode::Star);
        let sq_prime = conv_with_lags_prefix(&gp_lags, g0, hist, k, ConvMode::Square);
        let g_cum = kernel.eval(k as f64 * dt)?.g_cumulative;
        let (prev, next) = (hist.sample(k - 1), hist.sample(k + 1));
        for i in 0..width {
            let h_dot = (next[i] - prev[i]) / (2.0 * dt);
            let dsq = (squares[k + 1][i] - squares[k - 1][i]) / (2.0 * dt);
            let dh2 = (next[i] * next[i] - prev[i] * prev[i]) / (2.0 * dt);
            let lhs = 2.0 * star[i] * h_dot;
            let rhs = sq_prime[i] - dsq + g_cum * dh2;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// One step of the running convolution for exponential kernels.
///
/// Uses `g(t + dt) = e^{-eta dt} g(t)` to advance
/// `carry = ∫_0^t g(t-s) h(s) ds` by one trapezoid cell:
///
/// ```text
/// carry' = e^{-eta dt} carry + dt/2 (g(dt) h(t) + g(0) h(t+dt))
/// ```
///
/// which reproduces the full-history trapezoid quadrature exactly (the same
/// weights, accumulated in a different order).
pub fn recursive_conv_update(
    carry: &[f64],
    kernel: &RelaxationKernel,
    h_new: &[f64],
    h_prev: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    let (g0, eta) = match kernel {
        RelaxationKernel::Exponential { g0, eta } => (*g0, *eta),
        _ => {
            return Err(Error::UnsupportedKernel {
                op: "recursive_conv_update",
                required: "exponential kernel",
            })
        }
    };
    let decay = (-eta * dt).exp();
    let c_prev = 0.5 * dt * g0 * decay;
    let c_new = 0.5 * dt * g0;
    Ok(carry
        .iter()
        .zip(h_prev.iter().zip(h_new))
        .map(|(&c, (&hp, &hn))| decay * c + c_prev * hp + c_new * hn)
        .collect())
}
