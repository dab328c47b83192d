//! Negative epsilon (Helmholtz type operator): the same pipeline, plus the
//! failure at a Neumann eigenvalue.
//!
//!     cargo run --example helmholtz

use nullsrc::experiments::{preset, run_experiment};
use nullsrc::fem::neumann_eigenvalues;
use nullsrc::{assemble, build_mesh, CoefficientField, DomainSpec, Error, Method};

fn main() -> nullsrc::Result<()> {
    for name in ["ex7a", "ex7b"] {
        let cfg = preset(name).expect("built-in preset");
        let res = run_experiment(&cfg)?;
        println!("{name}: eps {}", cfg.epsilon);
        for m in [Method::MethodI, Method::MethodII, Method::MethodIII] {
            if let Some(r) = res.report(m) {
                println!("  {:<11} argmax distance {:?}", m.name(), r.argmax_chebyshev_distance);
            }
        }
    }

    let mesh = build_mesh(&DomainSpec::unit_square(8, 8))?;
    let lam = neumann_eigenvalues(&assemble(&mesh, 0.0, &CoefficientField::identity(&mesh))?);
    let resonant = assemble(&mesh, -lam[3], &CoefficientField::identity(&mesh))?;
    match resonant.factorize() {
        Err(e @ Error::SingularState { .. }) => println!("eps = -{:.6}: {e}", lam[3]),
        Err(e) => return Err(e),
        Ok(_) => println!("eps = -{:.6}: factorized (unexpected)", lam[3]),
    }
    Ok(())
}
