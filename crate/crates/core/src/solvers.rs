//! Regularized inversion: standard Tikhonov, the three weighted methods,
//! minimum-norm least squares, and discrepancy-principle selection of the
//! regularization parameter.
//!
//! With `W = diag(w)` the projector norms from [`SpectralData`]:
//!
//! * Method I returns `W^-1 x_a` where `x_a` is the standard Tikhonov solution.
//! * Method II returns `y_a`, the Tikhonov solution for the operator `A W^-1`.
//! * Method III returns `z_a`, the Tikhonov solution with penalty `|W z|^2`.
//!   Mathematically `z_a = W^-1 y_a`; the two are computed independently.
//!
//! Regularized problems are solved as augmented least-squares problems
//! `[A; sqrt(a) W] z ~ [b; 0]` through a Householder QR, restricted to the
//! subspace that contains the exact minimizer. This stays accurate for the
//! tiny `a` used to approximate the `a -> 0` limits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{numerical_rank, thin_svd, ForwardModel, SpectralData, DEFAULT_RANK_TOL, DEGENERATE_WEIGHT};

/// Cells within this relative distance of the maximum value share the argmax.
pub const ARGMAX_TIE_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "standard_tikhonov")]
    StandardTikhonov,
    #[serde(rename = "method_i")]
    MethodI,
    #[serde(rename = "method_ii")]
    MethodII,
    #[serde(rename = "method_iii")]
    MethodIII,
    #[serde(rename = "min_norm")]
    MinNorm,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::StandardTikhonov, Method::MethodI, Method::MethodII, Method::MethodIII, Method::MinNorm];

    pub fn name(self) -> &'static str {
        match self {
            Method::StandardTikhonov => "standard_tikhonov",
            Method::MethodI => "method_i",
            Method::MethodII => "method_ii",
            Method::MethodIII => "method_iii",
            Method::MinNorm => "min_norm",
        }
    }

    pub fn from_name(s: &str) -> Option<Method> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL.into_iter().find(|m| m.name() == s).or(match s.as_str() {
            "tikhonov" | "standard" => Some(Method::StandardTikhonov),
            "i" | "1" => Some(Method::MethodI),
            "ii" | "2" => Some(Method::MethodII),
            "iii" | "3" => Some(Method::MethodIII),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub method: Method,
    /// Coefficients in the orthonormal control basis.
    pub coeffs: DVector<f64>,
    pub alpha: f64,
    /// `|A_hat coeffs - b_hat|`, the `L2(boundary)` misfit of the returned source.
    pub residual: f64,
    /// Misfit of the underlying Tikhonov iterate, the quantity the discrepancy
    /// principle controls. Equals `residual` except for Method I, whose output
    /// is a rescaling of the iterate.
    pub discrepancy: f64,
    /// Smallest index in `argmax_tieset`.
    pub argmax_cell: usize,
    pub argmax_tieset: Vec<usize>,
}

/// Argmax of `values` with its tie set under [`ARGMAX_TIE_RTOL`].
pub fn argmax_with_ties(values: &DVector<f64>) -> (usize, Vec<usize>) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = ARGMAX_TIE_RTOL * values.amax();
    let ties: Vec<usize> = values.iter().enumerate().filter(|(_, &v)| v >= max - tol).map(|(i, _)| i).collect();
    (ties[0], ties)
}

fn finish(fm: &ForwardModel, method: Method, coeffs: DVector<f64>, alpha: f64, b_hat: &DVector<f64>, discrepancy: Option<f64>) -> SolveResult {
    let residual = fm.residual(&coeffs, b_hat);
    let values = coeffs.component_mul(&DVector::from_column_slice(&fm.cell_scale));
    let (argmax_cell, argmax_tieset) = argmax_with_ties(&values);
    SolveResult {
        method,
        coeffs,
        alpha,
        residual,
        discrepancy: discrepancy.unwrap_or(residual),
        argmax_cell,
        argmax_tieset,
    }
}

/// Minimizer of `|A z - b|^2 + alpha |W z|^2`, `W = diag(weights)` or the identity.
///
/// The optimality condition `alpha W^2 z = A^T (b - A z)` puts `z` in
/// `W^-2 row(A)`, so the problem is solved in coordinates of that subspace,
/// with `row(A)` taken as the numerical row space at [`DEFAULT_RANK_TOL`].
/// Directions below the rank threshold are thereby excluded, which keeps
/// rounding noise in the data from being amplified by `1 / alpha` there.
pub fn tikhonov(a_hat: &DMatrix<f64>, b_hat: &DVector<f64>, alpha: f64, weights: Option<&DVector<f64>>) -> Result<DVector<f64>> {
    let (m, n) = a_hat.shape();
    if b_hat.len() != m {
        return Err(Error::LengthMismatch { expected: m, got: b_hat.len() });
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: w.len() });
        }
        if let Some(i) = w.iter().position(|&x| !(x >= DEGENERATE_WEIGHT)) {
            return Err(Error::DegenerateBasis(i + 1, w[i]));
        }
    }
    let (_, s, v) = thin_svd(a_hat)?;
    let r = numerical_rank(&s, DEFAULT_RANK_TOL);
    let mut basis = v.columns(0, r).into_owned();
    if let Some(w) = weights {
        scale_rows(&mut basis, |i| 1.0 / (w[i] * w[i]));
    }
    tikhonov_on_subspace(a_hat, b_hat, alpha, weights, &basis)
}

fn scale_rows(m: &mut DMatrix<f64>, f: impl Fn(usize) -> f64) {
    for i in 0..m.nrows() {
        let c = f(i);
        m.row_mut(i).scale_mut(c);
    }
}

/// Minimizes `|A Z c - b|^2 + alpha |W Z c|^2` over `c` by Householder QR of
/// the stacked matrix `[A Z; sqrt(alpha) W Z]` and returns `Z c`.
fn tikhonov_on_subspace(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    alpha: f64,
    weights: Option<&DVector<f64>>,
    basis: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
    }
    let (m, n) = a.shape();
    let r = basis.ncols();
    if r == 0 {
        return Ok(DVector::zeros(n));
    }
    let mut penalty = basis.clone();
    if let Some(w) = weights {
        scale_rows(&mut penalty, |i| w[i]);
    }
    let mut aug = DMatrix::zeros(m + n, r);
    aug.rows_mut(0, m).copy_from(&(a * basis));
    aug.rows_mut(m, n).copy_from(&(penalty * alpha.sqrt()));
    let mut rhs = DVector::zeros(m + n);
    rhs.rows_mut(0, m).copy_from(b);

    let qr = aug.qr();
    qr.q_tr_mul(&mut rhs);
    let rr = qr.r();
    if rr.diagonal().iter().any(|d| !d.is_finite() || *d == 0.0) {
        return Err(Error::IllConditioned(format!("triangular factor is singular at alpha = {alpha:e}")));
    }
    let c = rr
        .solve_upper_triangular(&rhs.rows(0, r).into_owned())
        .ok_or_else(|| Error::IllConditioned(format!("back substitution failed at alpha = {alpha:e}")))?;
    let z = basis * c;
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::IllConditioned(format!("non-finite solution at alpha = {alpha:e}")));
    }
    Ok(z)
}

/// Truncated-SVD pseudo-inverse solution `V_r diag(1/s) U_r^T b`.
pub fn min_norm_lsq(a_hat: &DMatrix<f64>, b_hat: &DVector<f64>, rank_tol_rel: f64) -> Result<DVector<f64>> {
    if b_hat.len() != a_hat.nrows() {
        return Err(Error::LengthMismatch { expected: a_hat.nrows(), got: b_hat.len() });
    }
    let (u, s, v) = thin_svd(a_hat)?;
    let r = numerical_rank(&s, rank_tol_rel);
    let mut x = DVector::zeros(a_hat.ncols());
    for k in 0..r {
        let beta = u.column(k).dot(b_hat) / s[k];
        x.axpy(beta, &v.column(k), 1.0);
    }
    Ok(x)
}

/// `A_hat W^-1`.
pub fn weighted_operator(fm: &ForwardModel, sd: &SpectralData) -> DMatrix<f64> {
    let mut aw = fm.a_hat.clone();
    for (j, mut col) in aw.column_iter_mut().enumerate() {
        col /= sd.p_norms[j];
    }
    aw
}

pub fn standard_tikhonov(fm: &ForwardModel, sd: &SpectralData, b_hat: &DVector<f64>, alpha: f64) -> Result<SolveResult> {
    let x = tikhonov_on_subspace(&fm.a_hat, b_hat, alpha, None, &sd.v_r())?;
    Ok(finish(fm, Method::StandardTikhonov, x, alpha, b_hat, None))
}

pub fn method_i(fm: &ForwardModel, sd: &SpectralData, b_hat: &DVector<f64>, alpha: f64) -> Result<SolveResult> {
    let x = tikhonov_on_subspace(&fm.a_hat, b_hat, alpha, None, &sd.v_r())?;
    let fit = fm.residual(&x, b_hat);
    Ok(finish(fm, Method::MethodI, sd.apply_w_inv(&x), alpha, b_hat, Some(fit)))
}

/// Tikhonov for the operator `A_hat W^-1`, whose row space is `W^-1 row(A_hat)`.
pub fn method_ii(fm: &ForwardModel, sd: &SpectralData, b_hat: &DVector<f64>, alpha: f64) -> Result<SolveResult> {
    let aw = weighted_operator(fm, sd);
    let mut basis = sd.v_r();
    scale_rows(&mut basis, |i| 1.0 / sd.p_norms[i]);
    let y = tikhonov_on_subspace(&aw, b_hat, alpha, None, &basis)?;
    let fit = (&aw * &y - b_hat).norm();
    Ok(finish(fm, Method::MethodII, y, alpha, b_hat, Some(fit)))
}

/// Tikhonov for `A_hat` with penalty `|W z|^2`, solved in `W^-2 row(A_hat)`.
pub fn method_iii(fm: &ForwardModel, sd: &SpectralData, b_hat: &DVector<f64>, alpha: f64) -> Result<SolveResult> {
    let mut basis = sd.v_r();
    scale_rows(&mut basis, |i| 1.0 / (sd.p_norms[i] * sd.p_norms[i]));
    let z = tikhonov_on_subspace(&fm.a_hat, b_hat, alpha, Some(&sd.p_norms), &basis)?;
    Ok(finish(fm, Method::MethodIII, z, alpha, b_hat, None))
}

pub fn min_norm(fm: &ForwardModel, sd: &SpectralData, b_hat: &DVector<f64>) -> Result<SolveResult> {
    let x = min_norm_lsq(&fm.a_hat, b_hat, sd.rank_tol)?;
    Ok(finish(fm, Method::MinNorm, x, 0.0, b_hat, None))
}

/// Runs `method` at a fixed `alpha` (ignored for [`Method::MinNorm`]).
pub fn solve(method: Method, fm: &ForwardModel, sd: &SpectralData, b_hat: &DVector<f64>, alpha: f64) -> Result<SolveResult> {
    if b_hat.len() != fm.a_hat.nrows() {
        return Err(Error::LengthMismatch { expected: fm.a_hat.nrows(), got: b_hat.len() });
    }
    match method {
        Method::StandardTikhonov => standard_tikhonov(fm, sd, b_hat, alpha),
        Method::MethodI => method_i(fm, sd, b_hat, alpha),
        Method::MethodII => method_ii(fm, sd, b_hat, alpha),
        Method::MethodIII => method_iii(fm, sd, b_hat, alpha),
        Method::MinNorm => min_norm(fm, sd, b_hat),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorozovSettings {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub rel_tol: f64,
}

impl Default for MorozovSettings {
    fn default() -> Self {
        MorozovSettings { alpha_min: 1e-14, alpha_max: 1e6, rel_tol: 1e-3 }
    }
}

/// Tikhonov misfit `alpha -> |A x_alpha - b|` evaluated from the SVD of `A`:
/// `sum_k (alpha / (s_k^2 + alpha))^2 (u_k . b)^2 + |b_perp|^2`.
#[derive(Debug, Clone)]
pub struct DiscrepancyCurve {
    s2: Vec<f64>,
    beta2: Vec<f64>,
    perp2: f64,
}

impl DiscrepancyCurve {
    pub fn new(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        let (u, s, _) = thin_svd(a)?;
        let beta = u.transpose() * b;
        let perp2 = (b - &u * &beta).norm_squared();
        Ok(DiscrepancyCurve {
            s2: s.iter().map(|x| x * x).collect(),
            beta2: beta.iter().map(|x| x * x).collect(),
            perp2,
        })
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        let filtered: f64 = self
            .s2
            .iter()
            .zip(&self.beta2)
            .map(|(s2, b2)| {
                let f = alpha / (s2 + alpha);
                f * f * b2
            })
            .sum();
        (filtered + self.perp2).sqrt()
    }
}

/// Picks `alpha` so the misfit of the method's Tikhonov iterate equals
/// `gamma`, by bisection in `log(alpha)` on the monotone discrepancy curve.
pub fn morozov(
    fm: &ForwardModel,
    sd: &SpectralData,
    b_hat: &DVector<f64>,
    gamma: f64,
    method: Method,
    settings: &MorozovSettings,
) -> Result<(f64, SolveResult)> {
    if !(gamma > 0.0) {
        return Err(Error::GammaTooSmall { gamma, min_residual: 0.0 });
    }
    let MorozovSettings { alpha_min, alpha_max, rel_tol } = *settings;
    if !(alpha_min > 0.0 && alpha_max > alpha_min) {
        return Err(Error::Config(format!("invalid alpha range [{alpha_min:e}, {alpha_max:e}]")));
    }
    let curve = match method {
        Method::StandardTikhonov | Method::MethodI => DiscrepancyCurve::new(&fm.a_hat, b_hat)?,
        Method::MethodII | Method::MethodIII => DiscrepancyCurve::new(&weighted_operator(fm, sd), b_hat)?,
        Method::MinNorm => {
            return Err(Error::Config("the discrepancy principle needs a regularized method".into()));
        }
    };
    let (r_lo, r_hi) = (curve.eval(alpha_min), curve.eval(alpha_max));
    if gamma < r_lo * (1.0 - rel_tol) {
        return Err(Error::GammaTooSmall { gamma, min_residual: r_lo });
    }
    if gamma > r_hi * (1.0 + rel_tol) {
        return Err(Error::GammaTooLarge { gamma, max_residual: r_hi });
    }

    let (mut lo, mut hi) = (alpha_min.ln(), alpha_max.ln());
    let alpha = if gamma <= r_lo {
        alpha_min
    } else if gamma >= r_hi {
        alpha_max
    } else {
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if curve.eval(mid.exp()) < gamma {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    };
    let result = solve(method, fm, sd, b_hat, alpha)?;
    Ok((alpha, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn low_rank(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(m, k, |_, _| rng.random_range(-1.0..1.0));
        let h = DMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
        g * h
    }

    fn symmetric_pair() -> (ForwardModel, SpectralData) {
        let fm = ForwardModel::from_whitened(dmatrix![1.0, 1.0]);
        let sd = SpectralData::from_matrix(&fm.a_hat, 1e-12).unwrap();
        (fm, sd)
    }

    #[test]
    fn scalar_tikhonov() {
        let z = tikhonov(&dmatrix![1.0], &DVector::from_element(1, 1.0), 1.0, None).unwrap();
        assert!((z[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn huge_alpha_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = DMatrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let z = tikhonov(&a, &b, 1e6, None).unwrap();
        assert!(z.norm() <= 1e-5 * b.norm());
    }

    #[test]
    fn tiny_alpha_approaches_min_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = low_rank(&mut rng, 8, 5, 3);
        let b = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
        let z = tikhonov(&a, &b, 1e-10, None).unwrap();
        let x = min_norm_lsq(&a, &b, 1e-12).unwrap();
        assert!((z - x).amax() < 1e-6);
    }

    #[test]
    fn rejects_non_positive_alpha() {
        assert!(tikhonov(&dmatrix![1.0], &DVector::from_element(1, 1.0), 0.0, None).is_err());
    }

    #[test]
    fn min_norm_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = low_rank(&mut rng, 7, 6, 4);
        assert_eq!(min_norm_lsq(&a, &DVector::zeros(7), 1e-12).unwrap().amax(), 0.0);
        let b = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
        let x = min_norm_lsq(&DMatrix::identity(5, 5), &b, 1e-12).unwrap();
        assert!((x - &b).amax() < 1e-15);
    }

    #[test]
    fn min_norm_is_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let a = low_rank(&mut rng, 9, 7, 4);
            let sd = SpectralData::from_matrix(&a, 1e-12).unwrap();
            let psi = DVector::from_fn(7, |_, _| rng.random_range(-1.0..1.0));
            let x = min_norm_lsq(&a, &(&a * &psi), 1e-12).unwrap();
            assert!((x - sd.project(&psi)).norm() <= 1e-10 * psi.norm());
        }
    }

    #[test]
    fn symmetric_case_methods() {
        let (fm, sd) = symmetric_pair();
        let b = DVector::from_element(1, 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;

        let r1 = method_i(&fm, &sd, &b, 1e-12).unwrap();
        assert!((r1.coeffs[0] - h).abs() < 1e-9 && (r1.coeffs[1] - h).abs() < 1e-9);
        assert_eq!(r1.argmax_tieset, vec![0, 1]);
        assert_eq!(r1.argmax_cell, 0);

        let r2 = method_ii(&fm, &sd, &b, 1e-12).unwrap();
        let q = 2f64.sqrt() / 4.0;
        assert!((r2.coeffs[0] - q).abs() < 1e-9 && (r2.coeffs[1] - q).abs() < 1e-9);
        assert!((r2.coeffs[0] / sd.p_norms[0] - 0.5).abs() < 1e-9);

        let r3 = method_iii(&fm, &sd, &b, 1e-12).unwrap();
        assert!((r3.coeffs[0] - 0.5).abs() < 1e-9 && (r3.coeffs[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_data_gives_zero() {
        let (fm, sd) = symmetric_pair();
        let b = DVector::zeros(1);
        for m in [Method::MethodI, Method::MethodII, Method::MethodIII] {
            assert_eq!(solve(m, &fm, &sd, &b, 1e-3).unwrap().coeffs.amax(), 0.0);
        }
    }

    #[test]
    fn method_ii_approaches_weighted_min_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fm = ForwardModel::from_whitened(low_rank(&mut rng, 8, 6, 3));
        let sd = SpectralData::from_matrix(&fm.a_hat, 1e-12).unwrap();
        let b = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
        let y = method_ii(&fm, &sd, &b, 1e-10).unwrap().coeffs;
        let oracle = min_norm_lsq(&weighted_operator(&fm, &sd), &b, 1e-12).unwrap();
        assert!((y - oracle).amax() < 1e-6);
    }

    #[test]
    fn identity_weights_reduce_to_standard() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let fm = ForwardModel::from_whitened(DMatrix::from_fn(9, 5, |_, _| rng.random_range(-1.0..1.0)));
        let sd = SpectralData::from_matrix(&fm.a_hat, 1e-12).unwrap();
        let b = DVector::from_fn(9, |_, _| rng.random_range(-1.0..1.0));
        let z = method_iii(&fm, &sd, &b, 1e-2).unwrap().coeffs;
        let x = standard_tikhonov(&fm, &sd, &b, 1e-2).unwrap().coeffs;
        assert!((z - x).amax() < 1e-12);
    }

    #[test]
    fn method_iii_is_rescaled_method_ii() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let fm = ForwardModel::from_whitened(low_rank(&mut rng, 10, 8, 5));
        let sd = SpectralData::from_matrix(&fm.a_hat, 1e-12).unwrap();
        let b = DVector::from_fn(10, |_, _| rng.random_range(-1.0..1.0));
        for alpha in [1e-6, 1e-3, 1.0] {
            let y = method_ii(&fm, &sd, &b, alpha).unwrap().coeffs;
            let z = method_iii(&fm, &sd, &b, alpha).unwrap().coeffs;
            assert!((z - sd.apply_w_inv(&y)).norm() <= 1e-10 * y.norm());
        }
    }

    #[test]
    fn residual_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fm = ForwardModel::from_whitened(low_rank(&mut rng, 7, 9, 4));
        let sd = SpectralData::from_matrix(&fm.a_hat, 1e-12).unwrap();
        let b = DVector::from_fn(7, |_, _| rng.random_range(-1.0..1.0));
        for m in Method::ALL {
            let r = solve(m, &fm, &sd, &b, 1e-3).unwrap();
            let again = (&fm.a_hat * &r.coeffs - &b).norm();
            assert!((r.residual - again).abs() <= 1e-10 * again.max(1e-300));
        }
    }

    #[test]
    fn morozov_scalar_closed_form() {
        let fm = ForwardModel::from_whitened(dmatrix![1.0]);
        let sd = SpectralData::from_matrix(&fm.a_hat, 1e-12).unwrap();
        let b = DVector::from_element(1, 1.0);
        let (alpha, r) = morozov(&fm, &sd, &b, 0.5, Method::StandardTikhonov, &MorozovSettings::default()).unwrap();
        assert!((alpha - 1.0).abs() < 1e-3);
        assert!((r.residual - 0.5).abs() < 1e-3 * 0.5);
        assert!(matches!(
            morozov(&fm, &sd, &b, 2.0, Method::StandardTikhonov, &MorozovSettings::default()),
            Err(Error::GammaTooLarge { .. })
        ));
    }

    #[test]
    fn morozov_too_small_target() {
        // inconsistent data: the residual never drops below |b_perp|
        let fm = ForwardModel::from_whitened(dmatrix![1.0; 0.0]);
        let sd = SpectralData::from_matrix(&fm.a_hat, 1e-12).unwrap();
        let b = DVector::from_vec(vec![1.0, 0.5]);
        assert!(matches!(
            morozov(&fm, &sd, &b, 0.1, Method::MethodII, &MorozovSettings::default()),
            Err(Error::GammaTooSmall { .. })
        ));
    }

    #[test]
    fn discrepancy_curve_matches_direct_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = low_rank(&mut rng, 8, 6, 4);
        let b = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
        let curve = DiscrepancyCurve::new(&a, &b).unwrap();
        for alpha in [1e-8, 1e-4, 1e-1, 10.0] {
            let x = tikhonov(&a, &b, alpha, None).unwrap();
            let direct = (&a * x - &b).norm();
            assert!((curve.eval(alpha) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_name(m.name()), Some(m));
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert_eq!(Method::from_name("II"), Some(Method::MethodII));
        assert_eq!(Method::from_name("nope"), None);
    }
}
