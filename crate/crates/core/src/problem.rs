//! Problem configuration, hypothesis validation, and the Lyapunov-weight
//! certificate.
//!
//! Validation covers the kernel hypotheses (positive `g(0)`, positive
//! residual stiffness `beta_0`, a positive nonincreasing decay witness `xi`
//! with divergent integral), the delay-weight window
//! `tau mu2 < zeta < tau (2 mu1 - mu2)`, strictness `mu2 < mu1`, and the
//! geometric condition `a, b > 4 (L2 - L1) / (L1 + L3 - L2) beta_0`.
//!
//! The certificate search fixes the scale `N3 = 1`, splits the two upper
//! bounds evenly with `N4 = min(a, b) / 2`, and places `N2` at the midpoint
//! of its admissible interval `(beta_0, (L1 + L3 - L2) / (4 (L2 - L1)) N4)`;
//! `N1 = 10 (N2 + N3 + N4)` is the reported "large enough" weight.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::kernels::{beta0, RelaxationKernel};
use crate::Result;

/// Interval geometry `0 < L1 < L2 < L3`; the middle interval `(L1, L2)`
/// carries the undamped wave.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "L3")]
    pub l3: f64,
}

/// Physical coefficients of the two equations and the delay channel.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub tau: f64,
    pub zeta: f64,
}

/// Kernel family selector for the config file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Exponential,
    Polynomial,
    Tabulated,
}

/// Kernel section of the config file: `kind`, `g0`, `rate` (eta for
/// exponential, p for polynomial), and an optional `[t, g, g']` table.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: KernelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 3]>>,
}

impl KernelConfig {
    pub fn exponential(g0: f64, rate: f64) -> Self {
        Self { kind: KernelKind::Exponential, g0: Some(g0), rate: Some(rate), table: None }
    }

    pub fn polynomial(g0: f64, rate: f64) -> Self {
        Self { kind: KernelKind::Polynomial, g0: Some(g0), rate: Some(rate), table: None }
    }

    pub fn to_kernel(&self) -> Result<RelaxationKernel> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidConfig(format!("kernel.{name} is required for this kind")))
        };
        match self.kind {
            KernelKind::Exponential => {
                RelaxationKernel::exponential(need(self.g0, "g0")?, need(self.rate, "rate")?)
            }
            KernelKind::Polynomial => {
                RelaxationKernel::polynomial(need(self.g0, "g0")?, need(self.rate, "rate")?)
            }
            KernelKind::Tabulated => {
                let table = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("kernel.table is required".into()))?;
                let t = table.iter().map(|r| r[0]).collect();
                let g = table.iter().map(|r| r[1]).collect();
                let gp = table.iter().map(|r| r[2]).collect();
                RelaxationKernel::tabulated(t, g, gp)
            }
        }
    }
}

/// Named initial-data presets shared by `u0`, `u1`, `v0`, `v1`, and the delay
/// history `f0` (treated as a function of `x`, constant over `[-tau, 0]`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPreset {
    Zero,
    GaussianBump { center: f64, width: f64, amp: f64 },
    SineMode { k: u32, amp: f64 },
}

impl InitialPreset {
    /// Pointwise value; sine modes are interpreted per subdomain by the
    /// sampler (they vanish at the subdomain endpoints), so this covers the
    /// other presets only.
    pub fn eval_scalar(&self, x: f64) -> f64 {
        match self {
            InitialPreset::Zero => 0.0,
            InitialPreset::GaussianBump { center, width, amp } => {
                let z = (x - center) / width;
                amp * (-0.5 * z * z).exp()
            }
            InitialPreset::SineMode { .. } => {
                unreachable!("sine modes are sampled per subdomain")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub u0: InitialPreset,
    pub u1: InitialPreset,
    pub v0: InitialPreset,
    pub v1: InitialPreset,
    pub f0: InitialPreset,
}

impl InitialData {
    pub fn zero() -> Self {
        Self {
            u0: InitialPreset::Zero,
            u1: InitialPreset::Zero,
            v0: InitialPreset::Zero,
            v1: InitialPreset::Zero,
            f0: InitialPreset::Zero,
        }
    }
}

/// Interface treatment. `Pinned` holds the interface values fixed, which
/// decouples the middle interval; it exists for the conservation and
/// convergence control scenarios.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    #[default]
    Coupled,
    Pinned,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    /// Nodes per unit length; the mesh spacing is adjusted so that all three
    /// segment lengths are integer multiples of it.
    pub nx: usize,
    /// Requested time step; adjusted downward to satisfy the CFL bound and to
    /// divide `tau` exactly.
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default)]
    pub coupling: Coupling,
}

/// Full problem description; the JSON layout of this struct is the config
/// file format.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub geometry: Geometry,
    pub coefficients: Coefficients,
    pub kernel: KernelConfig,
    pub initial: InitialData,
    pub discretization: Discretization,
}

impl ProblemConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn kernel(&self) -> Result<RelaxationKernel> {
        self.kernel.to_kernel()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

/// Named residuals for each validated inequality (positive = satisfied with
/// that much slack).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Margins {
    /// `beta_0` itself (the (G1) residual).
    pub beta0: f64,
    /// `zeta - tau mu2`.
    pub zeta_lo: f64,
    /// `tau (2 mu1 - mu2) - zeta`.
    pub zeta_hi: f64,
    /// `mu1 - mu2`.
    pub mu_strict: f64,
    /// `a - 4 (L2 - L1)/(L1 + L3 - L2) beta_0`.
    pub geom_a: f64,
    /// `b - 4 (L2 - L1)/(L1 + L3 - L2) beta_0`.
    pub geom_b: f64,
    /// `min_t [ -g'(t) - xi(t) g(t) ]` over the sample grid (the (G2)
    /// pointwise residual; ~0 for the built-in families).
    pub g2_slack: f64,
}

/// Validity classes used by the CLI exit-code taxonomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValidityClass {
    /// All decay-theorem hypotheses hold.
    DecayValid,
    /// Well-posedness hypotheses hold (`mu2 <= mu1`, kernel hypotheses) but
    /// the decay hypotheses do not.
    WellPosedOnly,
    Invalid,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub g1_ok: bool,
    pub g2_ok: bool,
    pub zeta_window_ok: bool,
    pub mu_strict_ok: bool,
    pub geom_ok: bool,
    /// Geometry ordered, coefficients in range, kernel constructible: enough
    /// to run the solver even when the theorem hypotheses fail (control
    /// scenarios set `mu1 = 0` or `g = 0` deliberately).
    pub structural_ok: bool,
    /// `a - ∫_0^∞ g`; `-inf` when the kernel mass diverges.
    pub beta0: f64,
    pub zeta_window: (f64, f64),
    pub margins: Margins,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn class(&self) -> ValidityClass {
        if !self.structural_ok || !self.g1_ok || !self.g2_ok || self.margins.mu_strict < 0.0 {
            ValidityClass::Invalid
        } else if self.mu_strict_ok && self.zeta_window_ok && self.geom_ok {
            ValidityClass::DecayValid
        } else {
            ValidityClass::WellPosedOnly
        }
    }

    /// True when the energy/dissipation machinery of the decay theorem is
    /// applicable (used by the rate checks to refuse other configs).
    pub fn decay_hypotheses_ok(&self) -> bool {
        self.class() == ValidityClass::DecayValid
    }
}

const G2_SAMPLES: usize = 1000;

fn validate(config: &ProblemConfig) -> ValidationReport {
    let g = config.geometry;
    let c = config.coefficients;
    let mut warnings = Vec::new();

    let geometry_ordered = 0.0 < g.l1 && g.l1 < g.l2 && g.l2 < g.l3;
    let coefficients_ok = c.a > 0.0
        && c.b > 0.0
        && c.tau > 0.0
        && c.mu1 >= 0.0
        && c.mu2 >= 0.0
        && c.zeta > 0.0;
    let disc = config.discretization;
    let disc_ok = disc.nx >= 1 && disc.dt > 0.0 && disc.t_final >= 0.0;

    let kernel = match config.kernel.to_kernel() {
        Ok(k) => k,
        Err(e) => {
            warnings.push(format!("kernel rejected: {e}"));
            return ValidationReport {
                g1_ok: false,
                g2_ok: false,
                zeta_window_ok: false,
                mu_strict_ok: false,
                geom_ok: false,
                structural_ok: false,
                beta0: f64::NAN,
                zeta_window: (c.tau * c.mu2, c.tau * (2.0 * c.mu1 - c.mu2)),
                margins: Margins {
                    beta0: f64::NAN,
                    zeta_lo: f64::NAN,
                    zeta_hi: f64::NAN,
                    mu_strict: c.mu1 - c.mu2,
                    geom_a: f64::NAN,
                    geom_b: f64::NAN,
                    g2_slack: f64::NAN,
                },
                warnings,
            };
        }
    };
    let structural_ok = geometry_ordered && coefficients_ok && disc_ok;

    let beta_0 = beta0(&kernel, c.a).unwrap_or(f64::NEG_INFINITY);
    if kernel.horizon().is_some() {
        warnings.push(
            "tabulated kernel: ∫g and ∫xi checked over the table horizon only".to_string(),
        );
    }
    let g1_ok = kernel.g0() > 0.0 && beta_0 > 0.0;

    // (G2): xi positive and nonincreasing, g' <= -xi g, divergent ∫xi.
    // The pointwise conditions are sampled on a log grid (or the table range);
    // divergence is analytic for the built-in families.
    let t_max = kernel.horizon().unwrap_or(1e6);
    let mut g2_ok = true;
    let mut g2_slack = f64::INFINITY;
    let mut prev_xi = f64::INFINITY;
    let lo: f64 = 1e-6;
    for j in 0..G2_SAMPLES {
        let frac = j as f64 / (G2_SAMPLES - 1) as f64;
        let t = if j == 0 { 0.0 } else { lo * (t_max / lo).powf(frac) };
        let pt = match kernel.eval(t) {
            Ok(pt) => pt,
            Err(_) => break,
        };
        let tol = 1e-9 * (pt.g_prime.abs() + (pt.xi * pt.g).abs() + 1e-300);
        let slack = -pt.g_prime - pt.xi * pt.g;
        g2_slack = g2_slack.min(slack);
        if pt.xi <= 0.0 || pt.xi > prev_xi * (1.0 + 1e-12) || slack < -tol {
            g2_ok = false;
        }
        prev_xi = pt.xi;
    }
    match &kernel {
        RelaxationKernel::Exponential { eta, .. } => {
            if *eta <= 0.0 {
                g2_ok = false;
            }
        }
        RelaxationKernel::Polynomial { .. } => {}
        RelaxationKernel::Tabulated(_) => {
            warnings.push("(G2) divergence of ∫xi is not decidable from samples".to_string());
        }
    }

    let zeta_window = (c.tau * c.mu2, c.tau * (2.0 * c.mu1 - c.mu2));
    let zeta_window_ok = zeta_window.0 < c.zeta && c.zeta < zeta_window.1;
    let mu_strict_ok = c.mu2 < c.mu1;

    let geom_factor = 4.0 * (g.l2 - g.l1) / (g.l1 + g.l3 - g.l2);
    let geom_threshold = geom_factor * beta_0;
    let geom_ok = g1_ok && c.b > geom_threshold && c.a > geom_threshold;

    ValidationReport {
        g1_ok,
        g2_ok,
        zeta_window_ok,
        mu_strict_ok,
        geom_ok,
        structural_ok,
        beta0: beta_0,
        zeta_window,
        margins: Margins {
            beta0: beta_0,
            zeta_lo: c.zeta - zeta_window.0,
            zeta_hi: zeta_window.1 - c.zeta,
            mu_strict: c.mu1 - c.mu2,
            geom_a: c.a - geom_threshold,
            geom_b: c.b - geom_threshold,
            g2_slack,
        },
        warnings,
    }
}

/// The interface multiplier, piecewise linear and continuous at both joints:
///
/// ```text
/// q(x) = x - L1/2                                   on [0, L1]
///      = L1/2 - (L1+L3-L2)/(2(L2-L1)) (x - L1)      on (L1, L2)
///      = x - (L2+L3)/2                              on [L2, L3]
/// ```
pub fn q_eval(x: f64, l1: f64, l2: f64, l3: f64) -> Result<f64> {
    if !(0.0..=l3).contains(&x) {
        return Err(Error::OutOfDomain { x, l3 });
    }
    Ok(if x <= l1 {
        x - 0.5 * l1
    } else if x < l2 {
        0.5 * l1 - (l1 + l3 - l2) / (2.0 * (l2 - l1)) * (x - l1)
    } else {
        x - 0.5 * (l2 + l3)
    })
}

/// The bound `M = max(L1/2, (L3 - L2)/2)` with `|q| <= M`.
pub fn q_bound(l1: f64, l2: f64, l3: f64) -> f64 {
    (0.5 * l1).max(0.5 * (l3 - l2))
}

/// Constraint slacks of a certificate (positive = satisfied).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CertificateResiduals {
    /// `(L1+L3-L2)/(4(L2-L1)) N4 - N2`.
    pub n2_below_cap: f64,
    /// `b N3 - N4`.
    pub n4_below_b: f64,
    /// `a N3 - N4`.
    pub n4_below_a: f64,
    /// `N2 - N3 beta_0`.
    pub n2_above_beta0: f64,
}

/// Positive weights for the Lyapunov combination
/// `L = N1 E + N2 D + N3 F1 + N4 F2 + F3`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Certificate {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    pub residuals: CertificateResiduals,
    pub feasible: bool,
    /// Conservative headroom `N2 - N3 a` (uses `beta(t) <= a` instead of
    /// `beta_0`; may be negative for feasible certificates).
    pub margin_eps: f64,
}

/// Search for the Lyapunov weights. `N3 = 1` fixes the scale, `N4 = min(a,b)/2`
/// splits the two upper bounds evenly, and `N2` sits at the midpoint of
/// `(beta_0, (L1+L3-L2)/(4(L2-L1)) N4)`; feasibility is exactly the
/// nonemptiness of that interval.
pub fn find_certificate(config: &ProblemConfig) -> Result<Certificate> {
    let kernel = config.kernel()?;
    let c = config.coefficients;
    let g = config.geometry;
    let beta_0 = beta0(&kernel, c.a)
        .ok_or_else(|| Error::HypothesesNotSatisfied("kernel mass diverges; (G1) fails".into()))?;
    if beta_0 <= 0.0 || beta_0.is_nan() {
        return Err(Error::HypothesesNotSatisfied(format!(
            "beta_0 = {beta_0} <= 0; (G1) fails"
        )));
    }
    if !(0.0 < g.l1 && g.l1 < g.l2 && g.l2 < g.l3) {
        return Err(Error::HypothesesNotSatisfied("geometry is not ordered".into()));
    }

    let n3 = 1.0;
    let n4 = 0.5 * c.a.min(c.b) * n3;
    let cap = (g.l1 + g.l3 - g.l2) / (4.0 * (g.l2 - g.l1)) * n4;
    let feasible = cap > beta_0;
    let n2 = 0.5 * (beta_0 + cap);
    let n1 = 10.0 * (n2 + n3 + n4);

    Ok(Certificate {
        n1,
        n2,
        n3,
        n4,
        residuals: CertificateResiduals {
            n2_below_cap: cap - n2,
            n4_below_b: c.b * n3 - n4,
            n4_below_a: c.a * n3 - n4,
            n2_above_beta0: n2 - n3 * beta_0,
        },
        feasible,
        margin_eps: n2 - n3 * c.a,
    })
}
