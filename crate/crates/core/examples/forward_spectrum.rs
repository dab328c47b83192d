//! Forward map from cell sources to boundary data, its singular values and
//! the projector weights `w_i`.
//!
//!     cargo run --example forward_spectrum

use nullsrc::{analyze, assemble, build_control_basis, build_forward_model, build_mesh, CoefficientField, DomainSpec};

fn main() -> nullsrc::Result<()> {
    let mesh = build_mesh(&DomainSpec::unit_square(16, 16))?;
    let sys = assemble(&mesh, 1e-3, &CoefficientField::identity(&mesh))?;
    let basis = build_control_basis(&mesh, 8, 8)?;
    let fm = build_forward_model(&sys, &basis, &mesh)?;
    let sd = analyze(&fm, 1e-12)?;

    println!("{} boundary values x {} controls, numerical rank {}", fm.a_hat.nrows(), sd.n(), sd.rank);
    let s = sd.s.as_slice();
    println!("sigma_1 = {:.3e}, sigma_r = {:.3e}, sigma_(r+1) = {:.3e}", s[0], s[sd.rank - 1], s.get(sd.rank).copied().unwrap_or(0.0));

    // interior cells are barely seen from the boundary: small w
    let (mx, my) = basis.grid_dims;
    for iy in (0..my).rev() {
        let row: Vec<String> = (0..mx).map(|ix| format!("{:.2}", sd.p_norms[iy * mx + ix])).collect();
        println!("  {}", row.join(" "));
    }
    println!("w in [{:.3}, {:.3}]", sd.w_min(), sd.w_max());
    Ok(())
}
