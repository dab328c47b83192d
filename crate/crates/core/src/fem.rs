//! P1 finite elements for `-div(sigma grad u) + eps u = f` with homogeneous
//! Neumann conditions.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::band::{BandCholesky, BandLu, SmallPivot};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Relative pivot threshold for declaring the state matrix singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientKind {
    Identity,
    Diagonal,
}

/// Piecewise-constant `sigma = diag(kappa1, kappa2)`, one value per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub kind: CoefficientKind,
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
}

impl CoefficientField {
    pub fn identity(mesh: &Mesh) -> Self {
        let n = mesh.n_triangles();
        CoefficientField { kind: CoefficientKind::Identity, kappa1: vec![1.0; n], kappa2: vec![1.0; n] }
    }

    /// Samples `(kappa1, kappa2)` at triangle centroids.
    pub fn diagonal_from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (kappa1, kappa2) = (0..mesh.n_triangles())
            .map(|t| {
                let c = mesh.centroid(t);
                f(c[0], c[1])
            })
            .unzip();
        CoefficientField { kind: CoefficientKind::Diagonal, kappa1, kappa2 }
    }
}

#[derive(Debug, Clone)]
pub struct FemSystem {
    pub k_sigma: CsrMatrix<f64>,
    pub m: CsrMatrix<f64>,
    /// Boundary mass matrix, indexed by position in `trace_map`.
    pub b: DMatrix<f64>,
    /// `k_sigma + epsilon * m`.
    pub s: CsrMatrix<f64>,
    pub epsilon: f64,
    /// Boundary node indices; position `k` of a trace vector is node `trace_map[k]`.
    pub trace_map: Vec<usize>,
    pub bandwidth: usize,
}

fn gradients(mesh: &Mesh, t: usize) -> (f64, [[f64; 2]; 3]) {
    let [a, b, c] = mesh.triangles[t];
    let (p0, p1, p2) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
    let area = mesh.signed_area(t);
    let inv2a = 0.5 / area;
    // grad of barycentric lambda_k = rot90(opposite edge) / (2 area)
    let g = [
        [(p1[1] - p2[1]) * inv2a, (p2[0] - p1[0]) * inv2a],
        [(p2[1] - p0[1]) * inv2a, (p0[0] - p2[0]) * inv2a],
        [(p0[1] - p1[1]) * inv2a, (p1[0] - p0[0]) * inv2a],
    ];
    (area, g)
}

pub fn assemble(mesh: &Mesh, epsilon: f64, sigma: &CoefficientField) -> Result<FemSystem> {
    let nt = mesh.n_triangles();
    if sigma.kappa1.len() != nt || sigma.kappa2.len() != nt {
        return Err(Error::LengthMismatch { expected: nt, got: sigma.kappa1.len().min(sigma.kappa2.len()) });
    }
    let n = mesh.n_nodes();
    let mut k_coo = CooMatrix::new(n, n);
    let mut m_coo = CooMatrix::new(n, n);
    let mut s_coo = CooMatrix::new(n, n);
    for t in 0..nt {
        let (k1, k2) = (sigma.kappa1[t], sigma.kappa2[t]);
        if !(k1 > 0.0 && k2 > 0.0) {
            return Err(Error::NonPositiveCoefficient { triangle: t });
        }
        let (area, g) = gradients(mesh, t);
        let tri = mesh.triangles[t];
        for a in 0..3 {
            for b in 0..3 {
                let kab = area * (k1 * g[a][0] * g[b][0] + k2 * g[a][1] * g[b][1]);
                let mab = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                k_coo.push(tri[a], tri[b], kab);
                m_coo.push(tri[a], tri[b], mab);
                s_coo.push(tri[a], tri[b], kab + epsilon * mab);
            }
        }
    }

    let trace_map = mesh.boundary_nodes.clone();
    let mut pos = vec![usize::MAX; n];
    for (k, &node) in trace_map.iter().enumerate() {
        pos[node] = k;
    }
    let nb = trace_map.len();
    let mut b = DMatrix::zeros(nb, nb);
    for &e in &mesh.boundary_edges {
        let len = mesh.edge_length(e);
        let (i, j) = (pos[e[0]], pos[e[1]]);
        b[(i, i)] += len / 3.0;
        b[(j, j)] += len / 3.0;
        b[(i, j)] += len / 6.0;
        b[(j, i)] += len / 6.0;
    }

    Ok(FemSystem {
        k_sigma: CsrMatrix::from(&k_coo),
        m: CsrMatrix::from(&m_coo),
        b,
        s: CsrMatrix::from(&s_coo),
        epsilon,
        trace_map,
        bandwidth: mesh.bandwidth(),
    })
}

#[derive(Debug, Clone)]
enum Factor {
    Cholesky(BandCholesky),
    Lu(BandLu),
}

/// Immutable factorization of the state matrix; shareable across threads.
#[derive(Debug, Clone)]
pub struct StateSolver {
    factor: Factor,
    n: usize,
}

impl StateSolver {
    pub fn solve(&self, load: &DVector<f64>) -> Result<DVector<f64>> {
        if load.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: load.len() });
        }
        let mut x = load.as_slice().to_vec();
        match &self.factor {
            Factor::Cholesky(c) => c.solve_in_place(&mut x),
            Factor::Lu(lu) => lu.solve_in_place(&mut x),
        }
        Ok(DVector::from_vec(x))
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl FemSystem {
    pub fn n_nodes(&self) -> usize {
        self.s.nrows()
    }

    pub fn n_boundary(&self) -> usize {
        self.trace_map.len()
    }

    /// Cholesky for `epsilon > 0`, pivoted LU otherwise.
    pub fn factorize(&self) -> Result<StateSolver> {
        let scale = self.s.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = SINGULAR_PIVOT_RTOL * scale;
        let singular = |p: SmallPivot| Error::SingularState { epsilon: self.epsilon, row: p.row, pivot: p.pivot };
        let factor = if self.epsilon > 0.0 {
            Factor::Cholesky(BandCholesky::factor(&self.s, self.bandwidth, tol).map_err(singular)?)
        } else {
            Factor::Lu(BandLu::factor(&self.s, self.bandwidth, tol).map_err(singular)?)
        };
        Ok(StateSolver { factor, n: self.n_nodes() })
    }

    /// Restriction of a nodal vector to the boundary nodes, in `trace_map` order.
    pub fn trace(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.trace_map.len(), self.trace_map.iter().map(|&k| u[k]))
    }

    /// `M * v` for a nodal vector.
    pub fn mass_times(&self, v: &DVector<f64>) -> DVector<f64> {
        csr_times(&self.m, v)
    }

    pub fn state_times(&self, v: &DVector<f64>) -> DVector<f64> {
        csr_times(&self.s, v)
    }

    /// Squared `L2(boundary)` norm of a trace vector.
    pub fn boundary_norm_sq(&self, g: &DVector<f64>) -> f64 {
        g.dot(&(&self.b * g))
    }
}

pub fn csr_times(a: &CsrMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.nrows());
    for (i, row) in a.row_iter().enumerate() {
        out[i] = row.col_indices().iter().zip(row.values()).map(|(&j, &x)| x * v[j]).sum();
    }
    out
}

pub fn solve_state(sys: &FemSystem, load: &DVector<f64>) -> Result<DVector<f64>> {
    sys.factorize()?.solve(load)
}

pub fn trace(sys: &FemSystem, u: &DVector<f64>) -> DVector<f64> {
    sys.trace(u)
}

/// Eigenvalues of the pencil `(K_sigma, M)` in ascending order, i.e. the
/// discrete Neumann spectrum. `epsilon = -lambda` makes the state singular.
/// Dense; intended for small meshes.
pub fn neumann_eigenvalues(sys: &FemSystem) -> Vec<f64> {
    let k = DMatrix::from(&sys.k_sigma);
    let m = DMatrix::from(&sys.m);
    let l = m.cholesky().expect("mass matrix is SPD").l();
    let l_inv = l.clone().try_inverse().expect("triangular factor invertible");
    let c = &l_inv * k * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
