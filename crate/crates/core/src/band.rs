//! Banded Cholesky and banded LU with partial pivoting.
//!
//! Structured meshes numbered row-major give P1 matrices with half-bandwidth
//! `nx + 2`, so band storage keeps the state solves linear in the node count.

use nalgebra_sparse::CsrMatrix;

/// Why a band factorization stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallPivot {
    pub row: usize,
    pub pivot: f64,
}

/// Lower Cholesky factor in row-band storage: row `i` holds columns
/// `i - bw ..= i`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// Factors a symmetric positive definite matrix. A pivot (before the
    /// square root) at or below `tol` aborts the factorization.
    pub fn factor(a: &CsrMatrix<f64>, bw: usize, tol: f64) -> Result<Self, SmallPivot> {
        let n = a.nrows();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for (i, j, &v) in a.triplet_iter() {
            if j <= i {
                debug_assert!(i - j <= bw);
                l[i * w + (j + bw - i)] += v;
            }
        }
        for j in 0..n {
            let k0 = j.saturating_sub(bw);
            let row_j = j * w;
            let mut d = l[row_j + bw];
            for k in k0..j {
                let ljk = l[row_j + (k + bw - j)];
                d -= ljk * ljk;
            }
            if !(d > tol) {
                return Err(SmallPivot { row: j, pivot: d });
            }
            let djj = d.sqrt();
            l[row_j + bw] = djj;
            for i in (j + 1)..n.min(j + bw + 1) {
                let row_i = i * w;
                let k_start = i.saturating_sub(bw);
                let mut s = l[row_i + (j + bw - i)];
                for k in k_start..j {
                    s -= l[row_i + (k + bw - i)] * l[row_j + (k + bw - j)];
                }
                l[row_i + (j + bw - i)] = s / djj;
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (k + bw - i)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= self.l[k * w + (i + bw - k)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
    }
}

/// LU factors with row pivoting, stored column-wise like LAPACK `gbtrf`:
/// entry `(i, j)` lives at `j * ld + (ku_fill + i - j)`, where the upper
/// band `ku_fill = ku + kl` has room for the pivoting fill.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku_fill: usize,
    ld: usize,
    ab: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix<f64>, bw: usize, tol: f64) -> Result<Self, SmallPivot> {
        let n = a.nrows();
        let kl = bw;
        let ku_fill = 2 * bw;
        let ld = kl + ku_fill + 1;
        let mut lu = BandLu { n, kl, ku_fill, ld, ab: vec![0.0; n * ld], piv: vec![0; n] };
        for (i, j, &v) in a.triplet_iter() {
            *lu.at_mut(i, j) += v;
        }
        for k in 0..n {
            let i_end = (n - 1).min(k + kl);
            let mut p = k;
            let mut best = lu.at(k, k).abs();
            for i in (k + 1)..=i_end {
                let v = lu.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tol) {
                return Err(SmallPivot { row: k, pivot: lu.at(p, k) });
            }
            lu.piv[k] = p;
            let j_end = (n - 1).min(k + ku_fill);
            if p != k {
                for j in k..=j_end {
                    let (x, y) = (lu.idx(k, j), lu.idx(p, j));
                    lu.ab.swap(x, y);
                }
            }
            let pivot = lu.at(k, k);
            for i in (k + 1)..=i_end {
                let m = lu.at(i, k) / pivot;
                *lu.at_mut(i, k) = m;
                if m != 0.0 {
                    for j in (k + 1)..=j_end {
                        let ukj = lu.at(k, j);
                        *lu.at_mut(i, j) -= m * ukj;
                    }
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld + (self.ku_fill + i - j)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.ab[self.idx(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.ab[k]
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for i in (k + 1)..=(n - 1).min(k + self.kl) {
                b[i] -= self.at(i, k) * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in (k + 1)..=(n - 1).min(k + self.ku_fill) {
                s -= self.at(k, j) * b[j];
            }
            b[k] = s / self.at(k, k);
        }
    }
}
