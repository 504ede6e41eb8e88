//! Polynomial-kernel run: the general decay estimate specializes to a
//! power law `E <~ (1+t)^{-2 gamma1}` when `g = g0 (1+t)^{-2}`.

use viscowave::diagnostics::{decay_fit, fit_ln_energy};
use viscowave::problem::{
    Coefficients, Coupling, Discretization, Geometry, InitialData, InitialPreset, KernelConfig,
    ProblemConfig,
};
use viscowave::solver::{run, RunOptions};

fn main() {
    let mut initial = InitialData::zero();
    initial.u0 = InitialPreset::GaussianBump { center: 0.5, width: 0.06, amp: 1.0 };
    let config = ProblemConfig {
        geometry: Geometry { l1: 1.0, l2: 1.2, l3: 3.0 },
        coefficients: Coefficients { a: 4.0, b: 4.0, mu1: 2.0, mu2: 1.0, tau: 0.5, zeta: 1.0 },
        kernel: KernelConfig::polynomial(0.5, 2.0),
        initial,
        discretization: Discretization {
            nx: 100,
            dt: 0.0025,
            t_final: 12.0,
            coupling: Coupling::Coupled,
        },
    };

    let record = run(&config, &RunOptions { stride: 40, ..Default::default() })
        .expect("scenario integrates");

    println!("{:>6} {:>13} {:>13} {:>13}", "t", "E_total", "E_memory", "E(0)(1+t)^-2");
    for row in record.rows.iter().step_by(20) {
        println!(
            "{:>6.2} {:>13.5e} {:>13.5e} {:>13.5e}",
            row.t,
            row.energy.total,
            row.energy.memory,
            record.e0() * (1.0 + row.t).powi(-2)
        );
    }

    let kernel = config.kernel().unwrap();
    let fit = decay_fit(&record, &kernel).expect("fit succeeds");
    println!("\nfit of ln E against X(t) = 2 ln(1+t) over [{:.1}, {:.1}]", fit.window.0, fit.window.1);
    println!("  gamma1 = {:.4}, r2 = {:.6}", fit.gamma1, fit.r2);
    println!("  i.e. E(t) <~ (1+t)^-{:.3}", 2.0 * fit.gamma1);

    // the same regression in the ln(1+t) variable has exactly twice the slope
    let (slope, _, r2) = fit_ln_energy(&record, |t| (1.0 + t).ln()).unwrap();
    println!("\nrefit against ln(1+t): slope = {:.6} (= 2 gamma1 to rounding), r2 = {:.6}", slope, r2);
    println!("  |slope + 2 gamma1| = {:.3e}", (slope + 2.0 * fit.gamma1).abs());
}
