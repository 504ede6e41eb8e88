//! Sweep the delay weight mu2 across the admissible window and report the
//! fitted decay rate per value.

use viscowave::diagnostics::{decay_fit, energy_rate_check};
use viscowave::problem::{
    Coefficients, Coupling, Discretization, Geometry, InitialData, InitialPreset, KernelConfig,
    ProblemConfig, ValidityClass,
};
use viscowave::solver::{run, RunOptions};

fn main() {
    let mut initial = InitialData::zero();
    initial.u0 = InitialPreset::GaussianBump { center: 0.5, width: 0.06, amp: 1.0 };
    let base = ProblemConfig {
        geometry: Geometry { l1: 1.0, l2: 1.2, l3: 3.0 },
        coefficients: Coefficients { a: 4.0, b: 4.0, mu1: 2.0, mu2: 0.0, tau: 0.5, zeta: 1.0 },
        kernel: KernelConfig::exponential(0.5, 1.0),
        initial,
        discretization: Discretization {
            nx: 100,
            dt: 0.0025,
            t_final: 10.0,
            coupling: Coupling::Coupled,
        },
    };

    let mu1 = base.coefficients.mu1;
    println!("mu1 = {mu1}, zeta = {} fixed; delay weight swept", base.coefficients.zeta);
    println!("{:>8} {:>10} {:>10} {:>10} {:>16}", "mu2", "gamma1", "r2", "monotone", "class");
    for frac in [0.0, 0.25, 0.5, 0.9, 1.5] {
        let mut cfg = base.clone();
        cfg.coefficients.mu2 = frac * mu1;
        let class = cfg.validate().class();
        if class == ValidityClass::Invalid {
            println!("{:>8} {:>10} {:>10} {:>10} {:>16}", frac * mu1, "-", "-", "-", "invalid");
            continue;
        }
        let record = run(&cfg, &RunOptions { stride: 40, ..Default::default() }).unwrap();
        let fit = decay_fit(&record, &cfg.kernel().unwrap()).unwrap();
        let monotone = energy_rate_check(&record, &cfg).map(|c| c.monotone).unwrap_or(false);
        println!(
            "{:>8} {:>10.4} {:>10.6} {:>10} {:>16}",
            frac * mu1,
            fit.gamma1,
            fit.r2,
            monotone,
            match class {
                ValidityClass::DecayValid => "decay-valid",
                ValidityClass::WellPosedOnly => "well-posed only",
                ValidityClass::Invalid => unreachable!(),
            }
        );
    }
}
