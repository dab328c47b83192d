//! Whitened forward matrix, its SVD, the orthogonal projector onto the
//! complement of the forward nullspace, and the diagonal weight operator
//! built from the projector norms of the basis functions.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::control::{control_load_matrix, ControlBasis};
use crate::error::{Error, Result};
use crate::fem::FemSystem;
use crate::mesh::Mesh;

pub const DEFAULT_RANK_TOL: f64 = 1e-12;
/// Projector norms below this make the weight operator numerically singular.
pub const DEGENERATE_WEIGHT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ForwardModel {
    /// Boundary traces of the basis functions, `n_boundary x n`.
    pub a: DMatrix<f64>,
    /// Upper Cholesky factor of the boundary mass matrix, `B = R^T R`.
    pub r: DMatrix<f64>,
    /// `R * A`; Euclidean norms of `a_hat * c` are `L2(boundary)` norms.
    pub a_hat: DMatrix<f64>,
    /// Pointwise value of each unit basis coefficient (`1/sqrt(area)`).
    pub cell_scale: Vec<f64>,
}

impl ForwardModel {
    /// Wraps an already whitened matrix (identity boundary metric, unit cell scales).
    pub fn from_whitened(a_hat: DMatrix<f64>) -> Self {
        let (m, n) = a_hat.shape();
        ForwardModel { a: a_hat.clone(), r: DMatrix::identity(m, m), a_hat, cell_scale: vec![1.0; n] }
    }

    pub fn n_controls(&self) -> usize {
        self.a_hat.ncols()
    }

    /// Maps boundary data to whitened coordinates.
    pub fn whiten(&self, d: &DVector<f64>) -> DVector<f64> {
        &self.r * d
    }

    /// `L2(boundary)` misfit of control coefficients against whitened data.
    pub fn residual(&self, coeffs: &DVector<f64>, b_hat: &DVector<f64>) -> f64 {
        (&self.a_hat * coeffs - b_hat).norm()
    }
}

pub fn build_forward_model(sys: &FemSystem, basis: &ControlBasis, mesh: &Mesh) -> Result<ForwardModel> {
    let solver = sys.factorize()?;
    let mcf = control_load_matrix(basis, sys, mesh);
    let columns: Vec<DVector<f64>> = (0..basis.len())
        .into_par_iter()
        .map(|i| solver.solve(&mcf.column(i).into_owned()).map(|u| sys.trace(&u)))
        .collect::<Result<_>>()?;
    let a = DMatrix::from_columns(&columns);
    let r = sys
        .b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::IllConditioned("boundary mass matrix is not positive definite".into()))?
        .l()
        .transpose();
    let a_hat = &r * &a;
    Ok(ForwardModel { a, r, a_hat, cell_scale: basis.scale.clone() })
}

/// Thin SVD with singular values sorted in descending order. Columns of
/// `v` are the right singular vectors.
pub fn thin_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok((DMatrix::zeros(m, 0), DVector::zeros(0), DMatrix::zeros(n, 0)));
    }
    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let svd = fa.thin_svd().map_err(|e| Error::IllConditioned(format!("SVD failed: {e:?}")))?;
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = fs.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| fs[j].total_cmp(&fs[i]));
    let u = DMatrix::from_fn(m, k, |i, c| fu[(i, order[c])]);
    let v = DMatrix::from_fn(n, k, |i, c| fv[(i, order[c])]);
    let s = DVector::from_fn(k, |c, _| fs[order[c]]);
    Ok((u, s, v))
}

/// Number of singular values above `rank_tol_rel * s[0]`.
pub fn numerical_rank(s: &DVector<f64>, rank_tol_rel: f64) -> usize {
    match s.iter().next() {
        Some(&s0) if s0 > 0.0 => s.iter().take_while(|&&x| x > rank_tol_rel * s0).count(),
        _ => 0,
    }
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
    pub rank: usize,
    /// `w_i = |P phi_i|`, the Euclidean norms of the rows of `V_r`.
    pub p_norms: DVector<f64>,
    pub rank_tol: f64,
}

pub fn analyze(fm: &ForwardModel, rank_tol_rel: f64) -> Result<SpectralData> {
    SpectralData::from_matrix(&fm.a_hat, rank_tol_rel)
}

impl SpectralData {
    pub fn from_matrix(a_hat: &DMatrix<f64>, rank_tol_rel: f64) -> Result<Self> {
        if a_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditioned("forward matrix has non-finite entries".into()));
        }
        let (u, s, v) = thin_svd(a_hat)?;
        let rank = numerical_rank(&s, rank_tol_rel);
        let n = a_hat.ncols();
        let p_norms = DVector::from_fn(n, |i, _| v.view((i, 0), (1, rank)).norm());
        if let Some((i, &w)) = p_norms.iter().enumerate().find(|(_, &w)| w < DEGENERATE_WEIGHT) {
            return Err(Error::DegenerateBasis(i + 1, w));
        }
        Ok(SpectralData { u, s, v, rank, p_norms, rank_tol: rank_tol_rel })
    }

    pub fn n(&self) -> usize {
        self.p_norms.len()
    }

    /// First `rank` right singular vectors.
    pub fn v_r(&self) -> DMatrix<f64> {
        self.v.columns(0, self.rank).into_owned()
    }

    /// Dense projector `V_r V_r^T` onto the orthogonal complement of the nullspace.
    pub fn projector(&self) -> DMatrix<f64> {
        let vr = self.v_r();
        &vr * vr.transpose()
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let vr = self.v.columns(0, self.rank);
        vr * (vr.transpose() * x)
    }

    pub fn apply_w(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        coeffs.component_mul(&self.p_norms)
    }

    pub fn apply_w_inv(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        coeffs.component_div(&self.p_norms)
    }

    pub fn w_min(&self) -> f64 {
        self.p_norms.min()
    }

    pub fn w_max(&self) -> f64 {
        self.p_norms.max()
    }

    /// Minimizer over `c` of `|c phi_i - P phi_i / |P phi_i||`, evaluated as
    /// `(phi_i, P phi_i) / |P phi_i|` from the projected column. Equals `w_i`.
    pub fn optimal_scalar_weight(&self, i: usize) -> f64 {
        let mut e = DVector::zeros(self.n());
        e[i] = 1.0;
        let pe = self.project(&e);
        pe[i] / pe.norm()
    }
}

pub fn optimal_scalar_weight(sd: &SpectralData, i: usize) -> f64 {
    sd.optimal_scalar_weight(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::build_control_basis;
    use crate::fem::{assemble, CoefficientField};
    use crate::mesh::{build_mesh, DomainSpec};
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn svd_reconstructs_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = rng.random_range(2..=20);
            let n = rng.random_range(2..=12);
            let k = rng.random_range(1..m.min(n));
            let (a, _) = random_low_rank(&mut rng, m, n, k);
            let (u, s, v) = thin_svd(&a).unwrap();
            let back = &u * DMatrix::from_diagonal(&s) * v.transpose();
            assert!((back - &a).amax() < 1e-12 * a.amax().max(1.0));
            assert!((v.transpose() * &v - DMatrix::identity(s.len(), s.len())).amax() < 1e-12);
            assert!(s.as_slice().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    fn random_low_rank(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let g = DMatrix::from_fn(m, k, |_, _| rng.random_range(-1.0..1.0));
        let h = DMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
        (&g * &h, h)
    }

    #[test]
    fn symmetric_one_by_two() {
        let sd = SpectralData::from_matrix(&dmatrix![1.0, 1.0], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(sd.rank, 1);
        let p = sd.projector();
        assert!((p - dmatrix![0.5, 0.5; 0.5, 0.5]).amax() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((sd.p_norms[0] - h).abs() < 1e-15 && (sd.p_norms[1] - h).abs() < 1e-15);
        let wc = sd.apply_w(&DVector::from_vec(vec![1.0, 0.0]));
        assert!((wc[0] - h).abs() < 1e-15 && wc[1] == 0.0);
        assert!((sd.optimal_scalar_weight(0) - h).abs() < 1e-15);
    }

    #[test]
    fn nullspace_basis_vector_is_degenerate() {
        let a = dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 0.0];
        match SpectralData::from_matrix(&a, DEFAULT_RANK_TOL) {
            Err(Error::DegenerateBasis(3, w)) => assert!(w < 1e-8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn full_column_rank_gives_identity_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = DMatrix::from_fn(7, 4, |_, _| rng.random_range(-1.0..1.0));
        let sd = SpectralData::from_matrix(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(sd.rank, 4);
        assert!(sd.p_norms.iter().all(|w| (w - 1.0).abs() < 1e-14));
        assert!((0..4).all(|i| (sd.optimal_scalar_weight(i) - 1.0).abs() < 1e-14));
    }

    #[test]
    fn projector_matches_row_space_oracle() {
        // A = G H with G of full column rank: row space of A is row space of
        // H, so H^T (H H^T)^-1 H is the projector, with no SVD involved.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let (a, h) = random_low_rank(&mut rng, 6, 4, 3);
            let sd = SpectralData::from_matrix(&a, DEFAULT_RANK_TOL).unwrap();
            assert_eq!(sd.rank, 3);
            let hht = (&h * h.transpose()).try_inverse().unwrap();
            let oracle = h.transpose() * hht * &h;
            assert!((sd.projector() - &oracle).amax() < 1e-10);
            let pinv = a.clone().pseudo_inverse(1e-10).unwrap();
            assert!((sd.projector() - pinv * &a).amax() < 1e-10);
            for i in 0..4 {
                assert!((sd.optimal_scalar_weight(i) - sd.p_norms[i]).abs() < 1e-12);
                assert!((oracle[(i, i)].sqrt() - sd.p_norms[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projector_properties_and_w_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (a, _) = random_low_rank(&mut rng, 9, 12, 5);
        let sd = SpectralData::from_matrix(&a, DEFAULT_RANK_TOL).unwrap();
        let p = sd.projector();
        assert!((&p * &p - &p).amax() <= 1e-10);
        assert!((&p - p.transpose()).amax() <= 1e-12);
        assert!(sd.p_norms.iter().all(|&w| w > 0.0 && w <= 1.0 + 1e-15));
        for i in 0..12 {
            assert!((sd.p_norms[i].powi(2) - p[(i, i)]).abs() < 1e-12);
        }
        let x = DVector::from_fn(12, |_, _| rng.random_range(-1.0..1.0));
        assert!((sd.apply_w_inv(&sd.apply_w(&x)) - &x).amax() < 1e-14);
        // P x lies in the row space
        let r = &a * (&x - sd.project(&x));
        assert!(r.norm() <= 1e-8 * a.norm() * x.norm());
    }

    #[test]
    fn nullspace_correspondence_under_weighting() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let (a, _) = random_low_rank(&mut rng, 5, 9, 4);
        let sd = SpectralData::from_matrix(&a, DEFAULT_RANK_TOL).unwrap();
        let x = DVector::from_fn(9, |_, _| rng.random_range(-1.0..1.0));
        let q = &x - sd.project(&x);
        assert!((&a * &q).norm() < 1e-12);
        let back = &a * sd.apply_w_inv(&sd.apply_w(&q));
        assert!(back.norm() <= 1e-8);
    }

    fn small_forward(eps: f64) -> (Mesh, FemSystem, ControlBasis, ForwardModel) {
        let mesh = build_mesh(&DomainSpec::unit_square(8, 8)).unwrap();
        let sys = assemble(&mesh, eps, &CoefficientField::identity(&mesh)).unwrap();
        let basis = build_control_basis(&mesh, 4, 4).unwrap();
        let fm = build_forward_model(&sys, &basis, &mesh).unwrap();
        (mesh, sys, basis, fm)
    }

    #[test]
    fn constant_source_maps_to_unit_trace() {
        let eps = 1e-3;
        let (_, _, basis, fm) = small_forward(eps);
        let c = DVector::from_iterator(basis.len(), basis.areas.iter().map(|a| eps * a.sqrt()));
        let g = &fm.a * c;
        assert!(g.iter().all(|v| (v - 1.0).abs() < 1e-8));
        assert_eq!((&fm.a * DVector::zeros(basis.len())).amax(), 0.0);
    }

    #[test]
    fn columns_match_dense_solve() {
        let (mesh, sys, basis, fm) = small_forward(-1.0);
        let mcf = control_load_matrix(&basis, &sys, &mesh);
        let dense = DMatrix::from(&sys.s).lu();
        for i in [0, 5, 15] {
            let u = dense.solve(&mcf.column(i).into_owned()).unwrap();
            let g = sys.trace(&u);
            assert!((fm.a.column(i) - g).amax() <= 1e-12 * fm.a.amax().max(1.0));
        }
    }

    #[test]
    fn whitening_realizes_boundary_norm() {
        let (_, sys, basis, fm) = small_forward(1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let c = DVector::from_fn(basis.len(), |_, _| rng.random_range(-1.0..1.0));
            let lhs = (&fm.a_hat * &c).norm_squared();
            let rhs = sys.boundary_norm_sq(&(&fm.a * &c));
            assert!((lhs - rhs).abs() <= 1e-10 * rhs);
        }
    }

    #[test]
    fn singular_values_sorted() {
        let (_, _, _, fm) = small_forward(1e-3);
        let sd = analyze(&fm, DEFAULT_RANK_TOL).unwrap();
        assert!(sd.s.as_slice().windows(2).all(|w| w[0] >= w[1]));
        assert!(sd.rank <= fm.a_hat.nrows().min(fm.a_hat.ncols()));
    }
}
