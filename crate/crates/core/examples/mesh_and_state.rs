//! Build a mesh, assemble the state operator and solve one forward problem.
//!
//!     cargo run --example mesh_and_state

use nalgebra::DVector;
use nullsrc::fem::neumann_eigenvalues;
use nullsrc::{assemble, build_mesh, refine_uniform, CoefficientField, DomainSpec};

fn main() -> nullsrc::Result<()> {
    let mesh = build_mesh(&DomainSpec::l_shape(8, 8))?;
    println!(
        "L-shape: {} nodes, {} triangles, area {:.4}, boundary length {:.4}",
        mesh.n_nodes(),
        mesh.n_triangles(),
        mesh.total_area(),
        mesh.boundary_length()
    );
    let (fine, _) = refine_uniform(&mesh);
    println!("refined once: {} nodes, {} triangles", fine.n_nodes(), fine.n_triangles());

    // with f = eps the Neumann solution is the constant 1
    let eps = 0.5;
    let sys = assemble(&mesh, eps, &CoefficientField::identity(&mesh))?;
    let load = sys.mass_times(&DVector::from_element(mesh.n_nodes(), eps));
    let u = sys.factorize()?.solve(&load)?;
    println!("constant load: max |u - 1| = {:.2e}", u.add_scalar(-1.0).amax());

    let g = sys.trace(&u);
    println!("{} boundary values, |g|_B^2 = {:.6}", g.len(), sys.boundary_norm_sq(&g));

    let lam = neumann_eigenvalues(&assemble(&mesh, 0.0, &CoefficientField::identity(&mesh))?);
    println!("lowest Neumann eigenvalues: {:.4?}", &lam[..4]);
    Ok(())
}
