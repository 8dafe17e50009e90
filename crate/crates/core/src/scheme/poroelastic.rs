use alloc::vec::Vec;

use super::{State, Stepper};
use crate::assembly::{self, Weight};
use crate::fespace::{ScalarField, Voigt, VectorField};
use crate::material::{mat_vec, Mat3};
use crate::sparse::{BlockLayout, BlockSystem, CsrMatrix};
use crate::Result;

/// Operators of the linear poro-elastic step, all frozen at φⁿ.
#[derive(Debug, Clone)]
pub(crate) struct PoroBlocks {
    /// ∫ (C_ν/τ + 2C) ℰ(u)·ℰ(v) + Mα² div u div v.
    pub a_uu: CsrMatrix,
    /// ∫ Mα ψ_i div v_j.
    pub b_div: CsrMatrix,
    /// ∫ M ψ_i ψ_j.
    pub m_biot: CsrMatrix,
    /// ∫ κ ∇ψ_i·∇ψ_j.
    pub k_kappa: CsrMatrix,
    pub rhs_u: Vec<f64>,
    pub rhs_theta: Vec<f64>,
}

pub(crate) const U: usize = 0;
pub(crate) const THETA: usize = 1;
pub(crate) const P: usize = 2;

impl Stepper {
    pub(crate) fn poro_blocks(&self, state: &State) -> PoroBlocks {
        let d = &self.disc;
        let params = &self.params;
        let tau = self.config.tau;
        let nq = d.rule.len();
        let weights = d.rule.weights();
        let phi_q = d.at_points(state.phi.values());
        let e0 = state.strain();
        let theta_q = d.at_points(state.theta.values());

        let n_cells = d.mesh.n_cells();
        let mut cell_a: Vec<Mat3> = Vec::with_capacity(n_cells);
        let mut cell_load: Vec<Voigt> = Vec::with_capacity(n_cells);
        let mut m_alpha = Vec::with_capacity(phi_q.len());
        let mut m_pt = Vec::with_capacity(phi_q.len());
        let mut kappa = Vec::with_capacity(phi_q.len());
        let mut s_pt = Vec::with_capacity(phi_q.len());
        for k in 0..n_cells {
            let mut c_nu = [[0.0; 3]; 3];
            let mut c2 = [[0.0; 3]; 3];
            let mut ma2 = 0.0;
            let mut two_ct = [0.0; 3];
            for q in 0..nq {
                let i = k * nq + q;
                let w = weights[q];
                let co = params.coeffs_at(phi_q[i]);
                let ct = mat_vec(&co.stiffness, &params.eigenstrain_at(phi_q[i]));
                for r in 0..3 {
                    for c in 0..3 {
                        c_nu[r][c] += w * co.viscosity[r][c];
                        c2[r][c] += w * 2.0 * co.stiffness[r][c];
                    }
                    two_ct[r] += w * 2.0 * ct[r];
                }
                ma2 += w * co.biot_modulus * co.alpha * co.alpha;
                m_alpha.push(co.biot_modulus * co.alpha);
                m_pt.push(co.biot_modulus);
                kappa.push(co.kappa);
                s_pt.push(params.fluid_source.eval(phi_q[i], &e0.0[k], theta_q[i]));
            }
            let mut a = [[0.0; 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    let j = if r < 2 && c < 2 { ma2 } else { 0.0 };
                    a[r][c] = c_nu[r][c] / tau + c2[r][c] + j;
                }
            }
            let visc = mat_vec(&c_nu, &e0.0[k]);
            cell_a.push(a);
            cell_load.push(core::array::from_fn(|r| visc[r] / tau + two_ct[r]));
        }

        let a_uu = assembly::assemble_elasticity(&d.mesh, &d.dofs, &cell_a);
        let b_div = assembly::assemble_div_coupling(&d.mesh, &d.rule, &d.dofs, Weight::PerPoint(&m_alpha));
        let m_biot = assembly::assemble_mass(&d.mesh, &d.rule, Weight::PerPoint(&m_pt));
        let k_kappa = assembly::assemble_stiffness(&d.mesh, &d.rule, Weight::PerPoint(&kappa));
        let mut rhs_u = assembly::assemble_strain_load(&d.mesh, &d.dofs, &cell_load);
        if params.body_force != [0.0, 0.0] {
            let f = assembly::assemble_body_force(&d.mesh, &d.dofs, params.body_force);
            rhs_u.iter_mut().zip(f).for_each(|(a, b)| *a += b);
        }
        let mut rhs_theta = d.mass.mul_vec(state.theta.values());
        rhs_theta.iter_mut().for_each(|v| *v /= tau);
        if !params.fluid_source.is_zero() {
            let s = assembly::assemble_load(&d.mesh, &d.rule, &s_pt);
            rhs_theta.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
        PoroBlocks {
            a_uu,
            b_div,
            m_biot,
            k_kappa,
            rhs_u,
            rhs_theta,
        }
    }

    /// Block system in the unknown order (u, θ, p).
    pub(crate) fn poro_system(&self, blocks: &PoroBlocks) -> Result<BlockSystem> {
        let d = &self.disc;
        let (nu, nv) = (d.dofs.len(), d.mesh.n_vertices());
        let mut sys = BlockSystem::new(BlockLayout::new(&[("u", nu), ("theta", nv), ("p", nv)]));
        self.fill_poro(&mut sys, blocks)?;
        Ok(sys)
    }

    /// Writes the poro-elastic blocks into groups 0..3 of `sys`.
    pub(crate) fn fill_poro(&self, sys: &mut BlockSystem, blocks: &PoroBlocks) -> Result<()> {
        let d = &self.disc;
        sys.set_block(U, U, blocks.a_uu.clone())?;
        sys.set_block(U, THETA, blocks.b_div.transpose().scaled(-1.0))?;
        sys.set_zero(U, P);
        sys.set_zero(THETA, U);
        sys.set_block(THETA, THETA, d.mass.clone().scaled(1.0 / self.config.tau))?;
        sys.set_block(THETA, P, blocks.k_kappa.clone())?;
        sys.set_block(P, U, blocks.b_div.clone())?;
        sys.set_block(P, THETA, blocks.m_biot.clone().scaled(-1.0))?;
        sys.set_block(P, P, d.mass.clone())?;
        sys.set_rhs(U, blocks.rhs_u.clone())?;
        sys.set_rhs(THETA, blocks.rhs_theta.clone())?;
        Ok(())
    }

    /// Assembled matrix and right-hand side of the poro-elastic step from `state`.
    pub fn poroelastic_system(&self, state: &State) -> Result<(CsrMatrix, Vec<f64>)> {
        let sys = self.poro_system(&self.poro_blocks(state))?;
        Ok((sys.assemble_matrix()?, sys.assemble_rhs()))
    }

    /// Linear step for (uⁿ⁺¹, θⁿ⁺¹, pⁿ⁺¹).
    pub fn poroelastic_step(&mut self, state: &State) -> Result<(VectorField, ScalarField, ScalarField)> {
        let blocks = self.poro_blocks(state);
        let sys = self.poro_system(&blocks)?;
        let a = sys.assemble_matrix()?;
        let x = self.poro_solver.solve(&a, &sys.assemble_rhs())?;
        let parts = sys.layout().split(&x);
        let mesh = self.disc.mesh.clone();
        let u = VectorField::new(mesh.clone(), self.disc.dofs.scatter(parts[U]))?;
        let theta = ScalarField::new(mesh.clone(), parts[THETA].to_vec())?;
        let p = ScalarField::new(mesh, parts[P].to_vec())?;
        Ok((u, theta, p))
    }
}
