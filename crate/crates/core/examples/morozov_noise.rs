//! Noisy data with the regularization parameter picked by the discrepancy
//! principle, for several noise levels.
//!
//!     cargo run --example morozov_noise

use nullsrc::experiments::{preset, run_experiment};
use nullsrc::Method;

fn main() -> nullsrc::Result<()> {
    let mut cfg = preset("ex6a").expect("built-in preset");
    for kappa in [0.01, 0.05, 0.2] {
        cfg.noise_kappa = kappa;
        let res = run_experiment(&cfg)?;
        println!("kappa {kappa}: delta {:.3e}, gamma {:.3e}", res.delta, res.gamma);
        for m in [Method::MethodII, Method::MethodIII] {
            match res.report(m) {
                Some(r) => println!(
                    "  {:<11} alpha {:.3e} discrepancy {:.3e} argmax distance {:?} L2 error {:.3}",
                    m.name(),
                    r.solve.alpha,
                    r.solve.discrepancy,
                    r.argmax_chebyshev_distance,
                    r.l2_error
                ),
                None => println!("  {} failed", m.name()),
            }
        }
    }
    Ok(())
}
