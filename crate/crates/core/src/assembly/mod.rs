//! Assembly of the bilinear and linear forms of the scheme.
//!
//! Quadrature-point data is laid out cell by cell: entry `cell * nq + q`
//! belongs to point `q` of the rule on `cell`. Gradients of P1 functions are
//! constant per cell, so operators acting on gradients or strains only need
//! the cellwise quadrature mean of their coefficient.

pub mod quadrature;

use alloc::vec;
use alloc::vec::Vec;

use crate::fespace::{DisplacementDofs, Voigt};
use crate::material::Mat3;
use crate::mesh::SimplicialMesh;
use crate::sparse::{CsrMatrix, Triplets};

pub use quadrature::{gauss_legendre, QuadratureRule};

/// Default volume quadrature degree.
pub const DEFAULT_DEGREE: usize = 6;

/// A scalar coefficient of a form.
#[derive(Debug, Clone, Copy)]
pub enum Weight<'a> {
    Constant(f64),
    PerCell(&'a [f64]),
    PerPoint(&'a [f64]),
}

impl Weight<'_> {
    #[inline]
    fn at(&self, cell: usize, q: usize, nq: usize) -> f64 {
        match *self {
            Weight::Constant(c) => c,
            Weight::PerCell(v) => v[cell],
            Weight::PerPoint(v) => v[cell * nq + q],
        }
    }

    /// Quadrature mean over `cell`.
    fn cell_mean(&self, cell: usize, rule: &QuadratureRule) -> f64 {
        match *self {
            Weight::Constant(c) => c,
            Weight::PerCell(v) => v[cell],
            Weight::PerPoint(v) => {
                let nq = rule.len();
                rule.weights().iter().enumerate().map(|(q, w)| w * v[cell * nq + q]).sum()
            }
        }
    }
}

/// Physical coordinates of every quadrature point.
pub fn quadrature_points(mesh: &SimplicialMesh, rule: &QuadratureRule) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(mesh.n_cells() * rule.len());
    for c in mesh.cells() {
        let p = [mesh.vertices()[c[0]], mesh.vertices()[c[1]], mesh.vertices()[c[2]]];
        for b in rule.points() {
            out.push([
                b[0] * p[0][0] + b[1] * p[1][0] + b[2] * p[2][0],
                b[0] * p[0][1] + b[1] * p[1][1] + b[2] * p[2][1],
            ]);
        }
    }
    out
}

/// Values of the P1 function with nodal `values` at every quadrature point.
pub fn eval_at_points(mesh: &SimplicialMesh, rule: &QuadratureRule, values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(mesh.n_cells() * rule.len());
    for c in mesh.cells() {
        let v = [values[c[0]], values[c[1]], values[c[2]]];
        for b in rule.points() {
            out.push(b[0] * v[0] + b[1] * v[1] + b[2] * v[2]);
        }
    }
    out
}

/// Cellwise quadrature mean of per-point data.
pub fn cell_means(rule: &QuadratureRule, per_point: &[f64]) -> Vec<f64> {
    let nq = rule.len();
    per_point
        .chunks_exact(nq)
        .map(|c| c.iter().zip(rule.weights()).map(|(v, w)| v * w).sum())
        .collect()
}

/// ∫ density over the domain.
pub fn integrate_density(mesh: &SimplicialMesh, rule: &QuadratureRule, per_point: &[f64]) -> f64 {
    let nq = rule.len();
    let mut total = 0.0;
    for (k, g) in mesh.geometry().iter().enumerate() {
        let s: f64 = (0..nq).map(|q| rule.weights()[q] * per_point[k * nq + q]).sum();
        total += g.area * s;
    }
    total
}

/// Weighted mass matrix ∫ w ψ_i ψ_j.
pub fn assemble_mass(mesh: &SimplicialMesh, rule: &QuadratureRule, weight: Weight) -> CsrMatrix {
    let n = mesh.n_vertices();
    let nq = rule.len();
    let mut t = Triplets::with_capacity(n, n, 9 * mesh.n_cells());
    for (k, c) in mesh.cells().iter().enumerate() {
        let area = mesh.cell_geometry(k).area;
        let mut local = [[0.0; 3]; 3];
        for (q, (b, w)) in rule.points().iter().zip(rule.weights()).enumerate() {
            let s = area * w * weight.at(k, q, nq);
            for a in 0..3 {
                for bb in a..3 {
                    local[a][bb] += s * b[a] * b[bb];
                }
            }
        }
        for a in 0..3 {
            for bb in 0..3 {
                t.push(c[a], c[bb], local[a.min(bb)][a.max(bb)]);
            }
        }
    }
    t.into_csr()
}

/// Stiffness matrix ∫ w ∇ψ_i·∇ψ_j.
pub fn assemble_stiffness(mesh: &SimplicialMesh, rule: &QuadratureRule, weight: Weight) -> CsrMatrix {
    let n = mesh.n_vertices();
    let mut t = Triplets::with_capacity(n, n, 9 * mesh.n_cells());
    for (k, c) in mesh.cells().iter().enumerate() {
        let g = mesh.cell_geometry(k);
        let s = g.area * weight.cell_mean(k, rule);
        for a in 0..3 {
            for b in 0..3 {
                let dot = g.grads[a][0] * g.grads[b][0] + g.grads[a][1] * g.grads[b][1];
                t.push(c[a], c[b], s * dot);
            }
        }
    }
    t.into_csr()
}

/// Voigt strain of the basis function ψ_a e_i.
#[inline]
pub(crate) fn basis_strain(grad: &[f64; 2], component: usize) -> Voigt {
    if component == 0 {
        [grad[0], 0.0, grad[1]]
    } else {
        [0.0, grad[1], grad[0]]
    }
}

/// Elasticity-type matrix ∫ C_K ℰ(v_j)·ℰ(v_i) on the displacement dofs,
/// with one (already averaged) Voigt matrix per cell.
pub fn assemble_elasticity(mesh: &SimplicialMesh, dofs: &DisplacementDofs, per_cell: &[Mat3]) -> CsrMatrix {
    let n = dofs.len();
    let mut t = Triplets::with_capacity(n, n, 36 * mesh.n_cells());
    for (k, cell) in mesh.cells().iter().enumerate() {
        let g = mesh.cell_geometry(k);
        let c = &per_cell[k];
        for a in 0..3 {
            let Some(da) = dofs.dof(cell[a]) else { continue };
            for i in 0..2 {
                // Row of the test function: (C ℰ(v_j))·ℰ(v_i) = ℰ(v_i)ᵀ C ℰ(v_j).
                let ea = basis_strain(&g.grads[a], i);
                let ct = crate::material::mat_t_vec(c, &ea);
                for b in 0..3 {
                    let Some(db) = dofs.dof(cell[b]) else { continue };
                    for j in 0..2 {
                        let eb = basis_strain(&g.grads[b], j);
                        let v = g.area * (ct[0] * eb[0] + ct[1] * eb[1] + ct[2] * eb[2]);
                        t.push(da + i, db + j, v);
                    }
                }
            }
        }
    }
    t.into_csr()
}

/// Rectangular coupling ∫ ψ_i S·ℰ(v_j) with a per-point Voigt field `S`
/// (rows: vertices, columns: displacement dofs).
pub fn assemble_strain_coupling(
    mesh: &SimplicialMesh,
    rule: &QuadratureRule,
    dofs: &DisplacementDofs,
    per_point: &[Voigt],
) -> CsrMatrix {
    let nq = rule.len();
    let mut t = Triplets::with_capacity(mesh.n_vertices(), dofs.len(), 18 * mesh.n_cells());
    for (k, cell) in mesh.cells().iter().enumerate() {
        let g = mesh.cell_geometry(k);
        // ∫ ψ_a S over the cell, for each local vertex a.
        let mut m = [[0.0; 3]; 3];
        for (q, (b, w)) in rule.points().iter().zip(rule.weights()).enumerate() {
            let s = &per_point[k * nq + q];
            for a in 0..3 {
                for r in 0..3 {
                    m[a][r] += g.area * w * b[a] * s[r];
                }
            }
        }
        for a in 0..3 {
            for bb in 0..3 {
                let Some(db) = dofs.dof(cell[bb]) else { continue };
                for j in 0..2 {
                    let e = basis_strain(&g.grads[bb], j);
                    t.push(cell[a], db + j, m[a][0] * e[0] + m[a][1] * e[1] + m[a][2] * e[2]);
                }
            }
        }
    }
    t.into_csr()
}

/// Divergence coupling ∫ w ψ_i div v_j.
pub fn assemble_div_coupling(
    mesh: &SimplicialMesh,
    rule: &QuadratureRule,
    dofs: &DisplacementDofs,
    weight: Weight,
) -> CsrMatrix {
    let nq = rule.len();
    let per_point: Vec<Voigt> = (0..mesh.n_cells() * nq)
        .map(|i| {
            let w = weight.at(i / nq, i % nq, nq);
            [w, w, 0.0]
        })
        .collect();
    assemble_strain_coupling(mesh, rule, dofs, &per_point)
}

/// Load vector ∫ d ψ_i from per-point density values.
pub fn assemble_load(mesh: &SimplicialMesh, rule: &QuadratureRule, per_point: &[f64]) -> Vec<f64> {
    let nq = rule.len();
    let mut out = vec![0.0; mesh.n_vertices()];
    for (k, c) in mesh.cells().iter().enumerate() {
        let area = mesh.cell_geometry(k).area;
        for (q, (b, w)) in rule.points().iter().zip(rule.weights()).enumerate() {
            let s = area * w * per_point[k * nq + q];
            for a in 0..3 {
                out[c[a]] += s * b[a];
            }
        }
    }
    out
}

/// Load vector ∫ f ψ_i for a pointwise function `f(x, y)`.
pub fn assemble_load_fn<F: Fn(f64, f64) -> f64>(mesh: &SimplicialMesh, rule: &QuadratureRule, f: F) -> Vec<f64> {
    let values: Vec<f64> = quadrature_points(mesh, rule).iter().map(|p| f(p[0], p[1])).collect();
    assemble_load(mesh, rule, &values)
}

/// ∫ f·v_j for a constant body force.
pub fn assemble_body_force(mesh: &SimplicialMesh, dofs: &DisplacementDofs, force: [f64; 2]) -> Vec<f64> {
    let mut out = vec![0.0; dofs.len()];
    for (k, c) in mesh.cells().iter().enumerate() {
        let third = mesh.cell_geometry(k).area / 3.0;
        for &v in c {
            if let Some(d) = dofs.dof(v) {
                out[d] += third * force[0];
                out[d + 1] += third * force[1];
            }
        }
    }
    out
}

/// ∫ σ_K·ℰ(v_j) for a cellwise constant Voigt field.
pub fn assemble_strain_load(mesh: &SimplicialMesh, dofs: &DisplacementDofs, per_cell: &[Voigt]) -> Vec<f64> {
    let mut out = vec![0.0; dofs.len()];
    for (k, c) in mesh.cells().iter().enumerate() {
        let g = mesh.cell_geometry(k);
        let s = &per_cell[k];
        for a in 0..3 {
            if let Some(d) = dofs.dof(c[a]) {
                for i in 0..2 {
                    let e = basis_strain(&g.grads[a], i);
                    out[d + i] += g.area * (s[0] * e[0] + s[1] * e[1] + s[2] * e[2]);
                }
            }
        }
    }
    out
}
