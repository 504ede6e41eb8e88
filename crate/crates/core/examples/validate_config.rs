//! Hypothesis validation and the Lyapunov-weight certificate for the
//! standard transmission scenario.

use viscowave::problem::{
    find_certificate, Coefficients, Coupling, Discretization, Geometry, InitialData,
    InitialPreset, KernelConfig, ProblemConfig, ValidityClass,
};

fn main() {
    let mut initial = InitialData::zero();
    initial.u0 = InitialPreset::GaussianBump { center: 0.5, width: 0.06, amp: 1.0 };
    let config = ProblemConfig {
        geometry: Geometry { l1: 1.0, l2: 1.2, l3: 3.0 },
        coefficients: Coefficients { a: 4.0, b: 4.0, mu1: 2.0, mu2: 1.0, tau: 0.5, zeta: 1.0 },
        kernel: KernelConfig::exponential(0.5, 1.0),
        initial,
        discretization: Discretization {
            nx: 100,
            dt: 0.0025,
            t_final: 20.0,
            coupling: Coupling::Coupled,
        },
    };

    let report = config.validate();
    println!("hypotheses");
    println!("  (G1) residual stiffness  beta0 = {}  ok = {}", report.beta0, report.g1_ok);
    println!("  (G2) decay witness       ok = {}", report.g2_ok);
    println!(
        "  delay-weight window      ({}, {}) contains zeta = {}: {}",
        report.zeta_window.0, report.zeta_window.1, config.coefficients.zeta, report.zeta_window_ok
    );
    println!("  strict weights           mu2 < mu1 margin = {}", report.margins.mu_strict);
    println!(
        "  geometric condition      margins: a {} / b {}",
        report.margins.geom_a, report.margins.geom_b
    );
    println!(
        "  class                    {:?}",
        match report.class() {
            ValidityClass::DecayValid => "decay-valid",
            ValidityClass::WellPosedOnly => "well-posed only",
            ValidityClass::Invalid => "invalid",
        }
    );

    let cert = find_certificate(&config).expect("hypotheses hold");
    println!("\ncertificate (N3 normalized to 1)");
    println!("  N1 = {}", cert.n1);
    println!("  N2 = {}  (interval midpoint above beta0)", cert.n2);
    println!("  N4 = {}  (half of min(a, b))", cert.n4);
    println!("  feasible = {}", cert.feasible);
    println!(
        "  slacks: N2 below cap {:.4}, N4 below a {:.4}, N4 below b {:.4}, N2 above beta0 {:.4}",
        cert.residuals.n2_below_cap,
        cert.residuals.n4_below_a,
        cert.residuals.n4_below_b,
        cert.residuals.n2_above_beta0
    );
    println!("  conservative eps headroom N2 - N3 a = {}", cert.margin_eps);

    // the certificate degrades gracefully when the geometry breaks the
    // N2 interval: widen the middle interval until infeasible
    println!("\nfeasibility across middle-interval widths");
    for l2 in [1.2, 1.6, 2.0, 2.4] {
        let mut c = config.clone();
        c.geometry.l2 = l2;
        let cert = find_certificate(&c).expect("g1 unaffected");
        println!("  L2 = {l2:>4}: feasible = {}", cert.feasible);
    }
}
