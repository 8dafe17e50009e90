//! Conforming triangulations of the unit square with exact nesting under
//! uniform refinement.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::math::{abs, sqrt};
use crate::{Error, Result};

/// Tolerance of the coordinate test that marks boundary vertices.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Area and constant P1 basis gradients of one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub area: f64,
    /// Gradient of the barycentric coordinate of each local vertex.
    pub grads: [[f64; 2]; 3],
}

impl CellGeometry {
    /// Geometry of the triangle `(p0, p1, p2)`. Fails unless the signed area
    /// is strictly positive (counterclockwise orientation).
    pub fn from_points(p: [[f64; 2]; 3], cell: usize) -> Result<Self> {
        let e1 = [p[1][0] - p[0][0], p[1][1] - p[0][1]];
        let e2 = [p[2][0] - p[0][0], p[2][1] - p[0][1]];
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        let area = 0.5 * det;
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::DegenerateCell { cell, area });
        }
        // Rows of the inverse Jacobian give the gradients of λ1 and λ2.
        let g1 = [e2[1] / det, -e2[0] / det];
        let g2 = [-e1[1] / det, e1[0] / det];
        let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
        Ok(Self {
            area,
            grads: [g0, g1, g2],
        })
    }
}

/// Parent information recorded by [`SimplicialMesh::refine_uniform`].
#[derive(Debug, Clone, PartialEq)]
pub struct Nesting {
    /// Number of vertices of the parent mesh; they keep their indices.
    pub parent_vertices: usize,
    /// For every vertex `parent_vertices + i`, the endpoints of the parent
    /// edge it bisects.
    pub midpoint_parents: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMesh {
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    geometry: Vec<CellGeometry>,
    boundary: Vec<bool>,
    level: usize,
    h_max: f64,
    nesting: Option<Nesting>,
}

impl SimplicialMesh {
    /// Builds a mesh from raw vertices and counterclockwise cells.
    ///
    /// Boundary vertices are the ones lying on the unit-square boundary.
    pub fn from_parts(vertices: Vec<[f64; 2]>, cells: Vec<[usize; 3]>, level: usize) -> Result<Self> {
        let mut geometry = Vec::with_capacity(cells.len());
        let mut h_max: f64 = 0.0;
        for (k, c) in cells.iter().enumerate() {
            for &v in c {
                if v >= vertices.len() {
                    return Err(Error::DimensionMismatch {
                        what: "cell vertex index",
                        expected: vertices.len(),
                        found: v,
                    });
                }
            }
            let p = [vertices[c[0]], vertices[c[1]], vertices[c[2]]];
            geometry.push(CellGeometry::from_points(p, k)?);
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                let dx = p[a][0] - p[b][0];
                let dy = p[a][1] - p[b][1];
                h_max = h_max.max(sqrt(dx * dx + dy * dy));
            }
        }
        let boundary = vertices.iter().map(|p| on_unit_square_boundary(*p)).collect();
        Ok(Self {
            vertices,
            cells,
            geometry,
            boundary,
            level,
            h_max,
            nesting: None,
        })
    }

    /// Structured mesh of the unit square with `2^k` lattice squares per side,
    /// each split along its lower-left to upper-right diagonal. Vertices are
    /// numbered row by row.
    pub fn unit_square(k: usize) -> Self {
        let n = 1usize << k;
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                cells.push([v00, v10, v11]);
                cells.push([v00, v11, v01]);
            }
        }
        Self::from_parts(vertices, cells, k).expect("lattice triangles are non-degenerate")
    }

    /// Red refinement: every triangle is split into four through its edge
    /// midpoints. Parent vertices keep their indices; midpoints are appended
    /// in order of first appearance.
    pub fn refine_uniform(&self) -> Self {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        let mut midpoint_parents = Vec::new();
        let mut edge_mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
            let key = if a < b { (a, b) } else { (b, a) };
            *edge_mid.entry(key).or_insert_with(|| {
                let (pa, pb) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                midpoint_parents.push([key.0, key.1]);
                vertices.len() - 1
            })
        };
        let mut cells = Vec::with_capacity(4 * self.cells.len());
        for &[a, b, c] in &self.cells {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            cells.push([a, ab, ca]);
            cells.push([ab, b, bc]);
            cells.push([ca, bc, c]);
            cells.push([ab, bc, ca]);
        }
        let mut fine = Self::from_parts(vertices, cells, self.level + 1)
            .expect("refinement of a valid mesh is valid");
        fine.nesting = Some(Nesting {
            parent_vertices: nv,
            midpoint_parents,
        });
        fine
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn nesting(&self) -> Option<&Nesting> {
        self.nesting.as_ref()
    }

    /// Area and basis gradients of `cell`.
    pub fn cell_geometry(&self, cell: usize) -> &CellGeometry {
        &self.geometry[cell]
    }

    pub fn geometry(&self) -> &[CellGeometry] {
        &self.geometry
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }
}

fn on_unit_square_boundary(p: [f64; 2]) -> bool {
    p.iter()
        .any(|&x| abs(x) <= BOUNDARY_TOL || abs(x - 1.0) <= BOUNDARY_TOL)
}
