//! Continuous P1 Lagrange fields, nodal interpolation, prolongation between
//! nested meshes and cellwise strains.
//!
//! Scalar unknowns (phase field, chemical potential, fluid content,
//! pressure) carry no boundary condition. Displacements vanish on the
//! boundary; [`DisplacementDofs`] enumerates the remaining interior degrees
//! of freedom.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::mesh::SimplicialMesh;
use crate::{Error, Result};

/// Symmetric 2×2 tensor in Voigt form `(e11, e22, 2 e12)`.
pub type Voigt = [f64; 3];

/// Voigt representation of the identity tensor.
pub const VOIGT_IDENTITY: Voigt = [1.0, 1.0, 0.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    mesh: Arc<SimplicialMesh>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: Arc<SimplicialMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::DimensionMismatch {
                what: "scalar field",
                expected: mesh.n_vertices(),
                found: values.len(),
            });
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<SimplicialMesh>) -> Self {
        let n = mesh.n_vertices();
        Self { mesh, values: vec![0.0; n] }
    }

    pub fn constant(mesh: Arc<SimplicialMesh>, c: f64) -> Self {
        let n = mesh.n_vertices();
        Self { mesh, values: vec![c; n] }
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at barycentric coordinates `bary` inside `cell`.
    pub fn eval_in_cell(&self, cell: usize, bary: &[f64; 3]) -> f64 {
        let c = &self.mesh.cells()[cell];
        bary[0] * self.values[c[0]] + bary[1] * self.values[c[1]] + bary[2] * self.values[c[2]]
    }

    /// Constant gradient on `cell`.
    pub fn cell_gradient(&self, cell: usize) -> [f64; 2] {
        cell_gradient(&self.mesh, &self.values, cell)
    }
}

pub(crate) fn cell_gradient(mesh: &SimplicialMesh, values: &[f64], cell: usize) -> [f64; 2] {
    let c = &mesh.cells()[cell];
    let g = &mesh.cell_geometry(cell).grads;
    let mut out = [0.0; 2];
    for a in 0..3 {
        out[0] += values[c[a]] * g[a][0];
        out[1] += values[c[a]] * g[a][1];
    }
    out
}

/// Interior displacement degrees of freedom: two per free vertex, numbered
/// `2 * k + component` in increasing vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementDofs {
    vertex_dof: Vec<Option<usize>>,
    n_free: usize,
}

impl DisplacementDofs {
    /// Boundary vertices are eliminated (homogeneous Dirichlet data).
    pub fn interior(mesh: &SimplicialMesh) -> Self {
        Self::with_mask(mesh.boundary_mask())
    }

    /// Every vertex free; used to check operators on unconstrained patches.
    pub fn all(mesh: &SimplicialMesh) -> Self {
        Self::with_mask(&vec![false; mesh.n_vertices()])
    }

    fn with_mask(fixed: &[bool]) -> Self {
        let mut n_free = 0;
        let vertex_dof = fixed
            .iter()
            .map(|&b| {
                if b {
                    None
                } else {
                    n_free += 1;
                    Some(2 * (n_free - 1))
                }
            })
            .collect();
        Self { vertex_dof, n_free }
    }

    /// Index of component 0 of `vertex`, or `None` when the vertex is fixed.
    #[inline]
    pub fn dof(&self, vertex: usize) -> Option<usize> {
        self.vertex_dof[vertex]
    }

    pub fn len(&self) -> usize {
        2 * self.n_free
    }

    pub fn is_empty(&self) -> bool {
        self.n_free == 0
    }

    /// Gathers the free components of `u`.
    pub fn gather(&self, u: &VectorField) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (v, d) in self.vertex_dof.iter().enumerate() {
            if let Some(d) = d {
                out[*d] = u.values[v][0];
                out[*d + 1] = u.values[v][1];
            }
        }
        out
    }

    /// Nodal values from a dof vector; fixed vertices get zero.
    pub fn scatter(&self, x: &[f64]) -> Vec<[f64; 2]> {
        self.vertex_dof
            .iter()
            .map(|d| match d {
                Some(d) => [x[*d], x[*d + 1]],
                None => [0.0, 0.0],
            })
            .collect()
    }
}

/// Displacement field; vertices on the boundary always hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    mesh: Arc<SimplicialMesh>,
    values: Vec<[f64; 2]>,
}

impl VectorField {
    /// Wraps nodal values and zeroes every boundary vertex.
    pub fn new(mesh: Arc<SimplicialMesh>, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::DimensionMismatch {
                what: "vector field",
                expected: mesh.n_vertices(),
                found: values.len(),
            });
        }
        let mut u = Self { mesh, values };
        u.apply_dirichlet_mask();
        Ok(u)
    }

    /// Field without boundary elimination, for operators on free patches.
    pub fn new_unconstrained(mesh: Arc<SimplicialMesh>, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::DimensionMismatch {
                what: "vector field",
                expected: mesh.n_vertices(),
                found: values.len(),
            });
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<SimplicialMesh>) -> Self {
        let n = mesh.n_vertices();
        Self { mesh, values: vec![[0.0; 2]; n] }
    }

    pub fn apply_dirichlet_mask(&mut self) {
        for (v, &b) in self.values.iter_mut().zip(self.mesh.boundary_mask()) {
            if b {
                *v = [0.0, 0.0];
            }
        }
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    /// Voigt strain on `cell`.
    pub fn cell_strain(&self, cell: usize) -> Voigt {
        cell_strain(&self.mesh, &self.values, cell)
    }
}

pub(crate) fn cell_strain(mesh: &SimplicialMesh, u: &[[f64; 2]], cell: usize) -> Voigt {
    let c = &mesh.cells()[cell];
    let g = &mesh.cell_geometry(cell).grads;
    let mut du = [[0.0; 2]; 2]; // du[i][j] = ∂u_i/∂x_j
    for a in 0..3 {
        for i in 0..2 {
            for j in 0..2 {
                du[i][j] += u[c[a]][i] * g[a][j];
            }
        }
    }
    [du[0][0], du[1][1], du[0][1] + du[1][0]]
}

/// Piecewise-constant strain, one Voigt triple per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStrain(pub Vec<Voigt>);

impl CellStrain {
    pub fn divergence(&self, cell: usize) -> f64 {
        self.0[cell][0] + self.0[cell][1]
    }
}

/// Symmetric gradient of `u`, cell by cell.
pub fn strain(u: &VectorField) -> CellStrain {
    CellStrain((0..u.mesh.n_cells()).map(|k| u.cell_strain(k)).collect())
}

/// Nodal interpolant of `f`.
pub fn interpolate_nodal<F>(mesh: Arc<SimplicialMesh>, f: F) -> Result<ScalarField>
where
    F: Fn(f64, f64) -> f64,
{
    let mut values = Vec::with_capacity(mesh.n_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let v = f(p[0], p[1]);
        if !v.is_finite() {
            return Err(Error::NonFiniteValue { vertex: i, value: v });
        }
        values.push(v);
    }
    Ok(ScalarField { mesh, values })
}

/// Exact injection of a P1 function into the space of the next finer mesh.
pub fn prolong(field: &ScalarField, fine: &Arc<SimplicialMesh>) -> Result<ScalarField> {
    let values = prolong_values(field.mesh(), field.values(), fine, |a, b| 0.5 * (a + b))?;
    ScalarField::new(fine.clone(), values)
}

/// Vector version of [`prolong`]. Boundary zeros are preserved.
pub fn prolong_vector(field: &VectorField, fine: &Arc<SimplicialMesh>) -> Result<VectorField> {
    let values = prolong_values(field.mesh(), field.values(), fine, |a: [f64; 2], b: [f64; 2]| {
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    })?;
    VectorField::new(fine.clone(), values)
}

fn prolong_values<T: Copy>(
    coarse: &SimplicialMesh,
    values: &[T],
    fine: &SimplicialMesh,
    average: impl Fn(T, T) -> T,
) -> Result<Vec<T>> {
    let not_nested = Error::NotNested {
        coarse: coarse.level(),
        fine: fine.level(),
    };
    let nest = fine.nesting().ok_or(not_nested.clone())?;
    if fine.level() != coarse.level() + 1
        || nest.parent_vertices != coarse.n_vertices()
        || fine.vertices()[..coarse.n_vertices()] != *coarse.vertices()
    {
        return Err(not_nested);
    }
    let mut out = Vec::with_capacity(fine.n_vertices());
    out.extend_from_slice(values);
    for &[a, b] in &nest.midpoint_parents {
        out.push(average(values[a], values[b]));
    }
    Ok(out)
}
