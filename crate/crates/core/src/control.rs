//! Piecewise-constant control space on a rectangular partition of the domain.
//!
//! Basis function `i` is `scale[i] * indicator(cell i)` with
//! `scale[i] = 1 / sqrt(area[i])`, so the basis is orthonormal in `L2` and the
//! Euclidean inner product of coefficient vectors is the `L2` inner product of
//! the represented sources.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::FemSystem;
use crate::mesh::Mesh;

const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    /// `[xmin, ymin, xmax, ymax]`.
    pub rect: [f64; 4],
    /// Position `(ix, iy)` in the `mx x my` grid over the bounding box.
    pub grid: (usize, usize),
}

impl Cell {
    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.rect[0] + self.rect[2]), 0.5 * (self.rect[1] + self.rect[3])]
    }

    pub fn area(&self) -> f64 {
        (self.rect[2] - self.rect[0]) * (self.rect[3] - self.rect[1])
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.rect[0] - GEOM_TOL
            && p[0] <= self.rect[2] + GEOM_TOL
            && p[1] >= self.rect[1] - GEOM_TOL
            && p[1] <= self.rect[3] + GEOM_TOL
    }
}

#[derive(Debug, Clone)]
pub struct ControlBasis {
    /// Row-major (y outer) over the cells present in the domain.
    pub cells: Vec<Cell>,
    pub areas: Vec<f64>,
    pub scale: Vec<f64>,
    pub grid_dims: (usize, usize),
    pub cell_centers: Vec<[f64; 2]>,
    /// Control cell of each mesh triangle.
    pub triangle_cell: Vec<usize>,
    /// Grid position -> cell index, `None` where the grid cell is outside.
    grid_index: Vec<Option<usize>>,
}

impl ControlBasis {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_at(&self, ix: isize, iy: isize) -> Option<usize> {
        let (mx, my) = self.grid_dims;
        if ix < 0 || iy < 0 || ix as usize >= mx || iy as usize >= my {
            return None;
        }
        self.grid_index[iy as usize * mx + ix as usize]
    }

    /// True when the cell shares an edge with the domain boundary.
    pub fn touches_boundary(&self, i: usize) -> bool {
        let (ix, iy) = self.cells[i].grid;
        let (ix, iy) = (ix as isize, iy as isize);
        [(-1, 0), (1, 0), (0, -1), (0, 1)]
            .iter()
            .any(|(dx, dy)| self.cell_at(ix + dx, iy + dy).is_none())
    }

    /// Chebyshev distance between two cells in grid units.
    pub fn chebyshev(&self, i: usize, j: usize) -> usize {
        let (a, b) = (self.cells[i].grid, self.cells[j].grid);
        a.0.abs_diff(b.0).max(a.1.abs_diff(b.1))
    }

    /// Index of the cell whose rectangle contains `p`, if any.
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let (mx, my) = self.grid_dims;
        let c0 = self.cells.first()?;
        // grid origin and spacing recovered from any cell
        let hx = c0.rect[2] - c0.rect[0];
        let hy = c0.rect[3] - c0.rect[1];
        let x0 = c0.rect[0] - c0.grid.0 as f64 * hx;
        let y0 = c0.rect[1] - c0.grid.1 as f64 * hy;
        let ix = ((p[0] - x0) / hx).floor() as isize;
        let iy = ((p[1] - y0) / hy).floor() as isize;
        self.cell_at(ix.clamp(0, mx as isize - 1), iy.clamp(0, my as isize - 1))
    }

    /// Pointwise value of `sum_i coeffs[i] * phi_i` on each cell.
    pub fn coefficients_to_cell_field(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(coeffs.len())?;
        Ok(coeffs.component_mul(&DVector::from_column_slice(&self.scale)))
    }

    pub fn cell_field_to_coefficients(&self, values: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(values.len())?;
        Ok(DVector::from_iterator(self.len(), values.iter().zip(&self.scale).map(|(v, s)| v / s)))
    }

    /// Cell averages of a piecewise-constant field given on a finer nested
    /// grid `from`.
    pub fn average_from(&self, from: &ControlBasis, values: &DVector<f64>) -> Result<DVector<f64>> {
        from.check_len(values.len())?;
        let mut acc = DVector::zeros(self.len());
        for (k, cell) in from.cells.iter().enumerate() {
            let target = self.locate(cell.center()).ok_or_else(|| {
                Error::IncompatibleGrids(format!("cell {k} of the source grid lies outside the target grid"))
            })?;
            if !self.cells[target].contains([cell.rect[0], cell.rect[1]])
                || !self.cells[target].contains([cell.rect[2], cell.rect[3]])
            {
                return Err(Error::IncompatibleGrids(format!(
                    "cell {k} of the source grid straddles target cell {target}"
                )));
            }
            acc[target] += values[k] * from.areas[k];
        }
        for (i, a) in acc.iter_mut().enumerate() {
            *a /= self.areas[i];
        }
        Ok(acc)
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got });
        }
        Ok(())
    }
}

/// Partitions the mesh bounding box into `mx x my` rectangles and keeps the
/// ones covered by triangles. Every triangle must lie inside one cell and
/// every kept cell must be fully covered.
pub fn build_control_basis(mesh: &Mesh, mx: usize, my: usize) -> Result<ControlBasis> {
    if mx == 0 || my == 0 {
        return Err(Error::IncompatibleGrids(format!("control grid {mx}x{my} is empty")));
    }
    let (lo, hi) = mesh.bounding_box();
    let hx = (hi[0] - lo[0]) / mx as f64;
    let hy = (hi[1] - lo[1]) / my as f64;
    let rect = |ix: usize, iy: usize| {
        [
            lo[0] + ix as f64 * hx,
            lo[1] + iy as f64 * hy,
            lo[0] + (ix + 1) as f64 * hx,
            lo[1] + (iy + 1) as f64 * hy,
        ]
    };

    let mut grid_of_triangle = Vec::with_capacity(mesh.n_triangles());
    let mut covered = vec![0.0; mx * my];
    for t in 0..mesh.n_triangles() {
        let c = mesh.centroid(t);
        let ix = (((c[0] - lo[0]) / hx).floor() as usize).min(mx - 1);
        let iy = (((c[1] - lo[1]) / hy).floor() as usize).min(my - 1);
        let cell = Cell { rect: rect(ix, iy), grid: (ix, iy) };
        if !mesh.triangles[t].iter().all(|&v| cell.contains(mesh.nodes[v])) {
            return Err(Error::IncompatibleGrids(format!(
                "triangle {t} straddles control cell ({ix}, {iy})"
            )));
        }
        covered[iy * mx + ix] += mesh.signed_area(t);
        grid_of_triangle.push(iy * mx + ix);
    }

    let mut grid_index = vec![None; mx * my];
    let mut cells = Vec::new();
    for iy in 0..my {
        for ix in 0..mx {
            let g = iy * mx + ix;
            if covered[g] == 0.0 {
                continue;
            }
            let cell = Cell { rect: rect(ix, iy), grid: (ix, iy) };
            if (covered[g] - cell.area()).abs() > 1e-9 * cell.area() {
                return Err(Error::IncompatibleGrids(format!(
                    "control cell ({ix}, {iy}) is only partially covered by the mesh"
                )));
            }
            grid_index[g] = Some(cells.len());
            cells.push(cell);
        }
    }
    let areas: Vec<f64> = cells.iter().map(Cell::area).collect();
    let scale = areas.iter().map(|a| 1.0 / a.sqrt()).collect();
    let cell_centers = cells.iter().map(Cell::center).collect();
    let triangle_cell = grid_of_triangle.iter().map(|&g| grid_index[g].unwrap()).collect();
    Ok(ControlBasis { cells, areas, scale, grid_dims: (mx, my), cell_centers, triangle_cell, grid_index })
}

/// Load matrix: entry `(k, i)` is the integral of `phi_i` against the P1
/// hat function of node `k`.
pub fn control_load_matrix(basis: &ControlBasis, sys: &FemSystem, mesh: &Mesh) -> DMatrix<f64> {
    let mut mcf = DMatrix::zeros(sys.n_nodes(), basis.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let i = basis.triangle_cell[t];
        // a hat function integrates to area/3 over each of its triangles
        let w = basis.scale[i] * mesh.signed_area(t) / 3.0;
        for &k in tri {
            mcf[(k, i)] += w;
        }
    }
    mcf
}
