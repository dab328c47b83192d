//! Structured triangular meshes of the unit square and an L-shaped domain.
//!
//! Every rectangular cell is split along its lower-left to upper-right
//! diagonal, nodes are numbered row-major (y outer, x inner), and triangles
//! are oriented counterclockwise. The L-shape is the unit square with the
//! open quadrant `(1/2, 1] x (1/2, 1]` removed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    UnitSquare,
    LShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: Shape,
    pub nx: usize,
    pub ny: usize,
}

impl DomainSpec {
    pub fn unit_square(nx: usize, ny: usize) -> Self {
        DomainSpec { shape: Shape::UnitSquare, nx, ny }
    }

    pub fn l_shape(nx: usize, ny: usize) -> Self {
        DomainSpec { shape: Shape::LShape, nx, ny }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidSpec(format!(
                "cell counts must be positive, got {}x{}",
                self.nx, self.ny
            )));
        }
        if self.shape == Shape::LShape && (self.nx % 2 != 0 || self.ny % 2 != 0) {
            return Err(Error::InvalidSpec(format!(
                "L-shape needs even cell counts, got {}x{}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    /// Exact area of the domain.
    pub fn area(&self) -> f64 {
        match self.shape {
            Shape::UnitSquare => 1.0,
            Shape::LShape => 0.75,
        }
    }

    /// Exact boundary length of the domain.
    pub fn perimeter(&self) -> f64 {
        4.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Edges with exactly one adjacent triangle, oriented as in that triangle.
    pub boundary_edges: Vec<[usize; 2]>,
    /// Sorted, deduplicated endpoints of `boundary_edges`.
    pub boundary_nodes: Vec<usize>,
}

impl Mesh {
    /// Builds a mesh from nodes and counterclockwise triangles, deriving the
    /// boundary structure.
    pub fn from_parts(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Self {
        let mut edge_count: BTreeMap<(usize, usize), (usize, [usize; 2])> = BTreeMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                edge_count
                    .entry(key)
                    .and_modify(|e| e.0 += 1)
                    .or_insert((1, [a, b]));
            }
        }
        let boundary_edges: Vec<[usize; 2]> = edge_count
            .values()
            .filter(|(count, _)| *count == 1)
            .map(|(_, e)| *e)
            .collect();
        let mut boundary_nodes: Vec<usize> = boundary_edges.iter().flatten().copied().collect();
        boundary_nodes.sort_unstable();
        boundary_nodes.dedup();
        Mesh { nodes, triangles, boundary_edges, boundary_nodes }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Signed area of triangle `t` (positive for counterclockwise).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        [
            (self.nodes[a][0] + self.nodes[b][0] + self.nodes[c][0]) / 3.0,
            (self.nodes[a][1] + self.nodes[b][1] + self.nodes[c][1]) / 3.0,
        ]
    }

    pub fn edge_length(&self, e: [usize; 2]) -> f64 {
        let (p, q) = (self.nodes[e[0]], self.nodes[e[1]]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.signed_area(t)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|&e| self.edge_length(e)).sum()
    }

    /// Axis-aligned bounding box as `([xmin, ymin], [xmax, ymax])`.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Half-bandwidth of the P1 connectivity under the current numbering.
    pub fn bandwidth(&self) -> usize {
        self.triangles
            .iter()
            .map(|t| {
                let mx = t.iter().max().unwrap();
                let mn = t.iter().min().unwrap();
                mx - mn
            })
            .max()
            .unwrap_or(0)
    }

    /// Plain-text dump: nodes `x y`, blank line, triangles `i j k`, blank
    /// line, boundary edges `i j`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.nodes {
            let _ = writeln!(s, "{} {}", p[0], p[1]);
        }
        s.push('\n');
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s.push('\n');
        for e in &self.boundary_edges {
            let _ = writeln!(s, "{} {}", e[0], e[1]);
        }
        s
    }

    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn removed_cell(spec: &DomainSpec, i: usize, j: usize) -> bool {
    spec.shape == Shape::LShape && i >= spec.nx / 2 && j >= spec.ny / 2
}

fn removed_node(spec: &DomainSpec, i: usize, j: usize) -> bool {
    spec.shape == Shape::LShape && i > spec.nx / 2 && j > spec.ny / 2
}

pub fn build_mesh(spec: &DomainSpec) -> Result<Mesh> {
    spec.validate()?;
    let (nx, ny) = (spec.nx, spec.ny);
    let mut index = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut nodes = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            if removed_node(spec, i, j) {
                continue;
            }
            index[j * (nx + 1) + i] = nodes.len();
            nodes.push([i as f64 / nx as f64, j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            if removed_cell(spec, i, j) {
                continue;
            }
            let a = index[j * (nx + 1) + i];
            let b = index[j * (nx + 1) + i + 1];
            let c = index[(j + 1) * (nx + 1) + i];
            let d = index[(j + 1) * (nx + 1) + i + 1];
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    Ok(Mesh::from_parts(nodes, triangles))
}

/// Splits every triangle into four through its edge midpoints.
///
/// Returns the fine mesh and the injection `coarse node -> fine node`. Fine
/// nodes are renumbered lexicographically by `(y, x)`, so a refined
/// structured mesh keeps the row-major numbering of `build_mesh`.
pub fn refine_uniform(mesh: &Mesh) -> (Mesh, Vec<usize>) {
    let mut nodes = mesh.nodes.clone();
    let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut mid = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
        *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
            let (p, q) = (nodes[a], nodes[b]);
            nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            nodes.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut nodes);
        let bc = mid(b, c, &mut nodes);
        let ca = mid(c, a, &mut nodes);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }

    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&p, &q| {
        nodes[p][1]
            .total_cmp(&nodes[q][1])
            .then(nodes[p][0].total_cmp(&nodes[q][0]))
    });
    let mut new_index = vec![0; nodes.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let fine_nodes: Vec<[f64; 2]> = order.iter().map(|&old| nodes[old]).collect();
    let fine_triangles: Vec<[usize; 3]> = triangles
        .iter()
        .map(|t| [new_index[t[0]], new_index[t[1]], new_index[t[2]]])
        .collect();
    let injection = (0..mesh.n_nodes()).map(|k| new_index[k]).collect();
    (Mesh::from_parts(fine_nodes, fine_triangles), injection)
}
