//! Refinement study against the separated standing-wave solution of the
//! decoupled middle interval, measured at 5/4 period.

use viscowave::cli::standing_wave_error;
use viscowave::problem::{
    Coefficients, Coupling, Discretization, Geometry, InitialData, KernelConfig, ProblemConfig,
};

fn main() {
    let config = ProblemConfig {
        geometry: Geometry { l1: 1.0, l2: 2.0, l3: 3.0 },
        coefficients: Coefficients { a: 4.0, b: 4.0, mu1: 0.0, mu2: 0.0, tau: 0.5, zeta: 1.0 },
        kernel: KernelConfig::exponential(0.0, 1.0),
        initial: InitialData::zero(),
        discretization: Discretization {
            nx: 25,
            dt: 0.01,
            t_final: 1.25,
            coupling: Coupling::Pinned,
        },
    };
    let period = 2.0 * (config.geometry.l2 - config.geometry.l1) / config.coefficients.b.sqrt();
    let t_measure = 1.25 * period;

    println!("standing wave sin(pi (x - L1)) cos(omega t), measured at t = {t_measure}");
    println!("{:>8} {:>10} {:>14} {:>8}", "nx", "dx", "L2 error", "ratio");
    let mut prev: Option<f64> = None;
    for level in 0..4 {
        let nx = 25usize << level;
        let (dx, err, warnings) = standing_wave_error(&config, nx, t_measure).unwrap();
        match prev {
            Some(p) => println!("{nx:>8} {dx:>10} {err:>14.6e} {:>8.3}", p / err),
            None => println!("{nx:>8} {dx:>10} {err:>14.6e} {:>8}", "-"),
        }
        for w in warnings {
            println!("         note: {w}");
        }
        prev = Some(err);
    }
}
