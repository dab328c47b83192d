//! Single-cell source, exact data: standard Tikhonov against the three
//! weighted methods.
//!
//!     cargo run --example methods_comparison

use nullsrc::experiments::{preset, run_experiment};
use nullsrc::Method;

fn main() -> nullsrc::Result<()> {
    let cfg = preset("ex1").expect("built-in preset");
    let res = run_experiment(&cfg)?;
    let basis = &res.setup.inverse_basis;
    let truth = cfg.true_source[0].cell;
    println!("true cell {truth} at grid {:?}, rank {}", basis.cells[truth].grid, res.rank);
    for m in Method::ALL {
        let Some(r) = res.report(m) else { continue };
        let c = r.solve.argmax_cell;
        println!(
            "{:<18} argmax cell {c:>2} grid {:?} boundary {:<5} distance {:?} L2 error {:.3}",
            m.name(),
            basis.cells[c].grid,
            basis.touches_boundary(c),
            r.argmax_chebyshev_distance,
            r.l2_error
        );
    }
    Ok(())
}
