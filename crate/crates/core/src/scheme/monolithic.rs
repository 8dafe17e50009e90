use alloc::vec;
use alloc::vec::Vec;

use super::cahn_hilliard::{ChData, NewtonReport};
use super::poroelastic::{P, THETA, U};
use super::{State, StepAux, Stepper};
use crate::assembly::{self, Weight};
use crate::fespace::{ScalarField, Voigt, VectorField};
use crate::math::norm2;
use crate::sparse::{BlockLayout, BlockSystem, CsrMatrix};
use crate::{Error, Result};

const PHI: usize = 3;
const MU: usize = 4;
const MAX_HALVINGS: usize = 8;

impl Stepper {
    /// One Newton solve of the fully coupled five-field system; a reference
    /// for [`Stepper::step`] on small meshes.
    pub fn solve_monolithic(&mut self, state: &State, previous_mu: Option<&ScalarField>) -> Result<(State, StepAux, NewtonReport)> {
        self.check_mesh(state)?;
        state.check_finite()?;
        let d = &self.disc;
        let (nu, nv) = (d.dofs.len(), d.mesh.n_vertices());
        let total = nu + 4 * nv;
        if total > self.config.monolithic_dof_cap {
            return Err(Error::TooManyDofs {
                dofs: total,
                cap: self.config.monolithic_dof_cap,
            });
        }
        let layout = BlockLayout::new(&[("u", nu), ("theta", nv), ("p", nv), ("phi", nv), ("mu", nv)]);
        let blocks = self.poro_blocks(state);
        let poro_sys = self.poro_system(&blocks)?;
        let poro = poro_sys.assemble_matrix()?;
        let poro_rhs = poro_sys.assemble_rhs();
        let mut base = BlockSystem::new(layout.clone());
        self.fill_poro(&mut base, &blocks)?;
        for r in [U, THETA, P] {
            base.set_zero(r, PHI);
            base.set_zero(r, MU);
            base.set_zero(PHI, r);
        }
        base.set_zero(MU, P);

        let mut x = Vec::with_capacity(total);
        x.extend(d.dofs.gather(&state.u));
        x.extend_from_slice(state.theta.values());
        x.extend(core::iter::repeat(0.0).take(nv));
        x.extend_from_slice(state.phi.values());
        let seed = {
            let data = self.ch_data(state, &state.u, &state.theta);
            match previous_mu {
                Some(m) => m.values().to_vec(),
                None => self.algebraic_mu(&data, state.phi.values())?,
            }
        };
        x.extend(seed);

        let mut res = self.mono_residual(state, &layout, &poro, &poro_rhs, &x)?;
        let mut norm = norm2(&res.0);
        let mut history = vec![norm];
        let mut iterations = 0;
        let mut damped = false;
        loop {
            if !norm.is_finite() {
                return Err(Error::NonFiniteResidual { iteration: iterations });
            }
            if norm <= self.config.newton_tol && !damped {
                break;
            }
            if iterations == self.config.newton_max_iters {
                return Err(Error::NewtonFailed { history });
            }
            let jac = self.mono_jacobian(&base, &res.1, &res.2, &x)?;
            let rhs: Vec<f64> = res.0.iter().map(|v| -v).collect();
            let delta = self.mono_solver.solve(&jac, &rhs)?;
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + lambda * b).collect();
                let r = self.mono_residual(state, &layout, &poro, &poro_rhs, &trial)?;
                let tn = norm2(&r.0);
                if !tn.is_finite() {
                    return Err(Error::NonFiniteResidual { iteration: iterations + 1 });
                }
                if tn < norm || tn <= self.config.newton_tol || lambda == 1.0 && damped {
                    accepted = Some((trial, r, tn));
                    break;
                }
                lambda *= 0.5;
            }
            iterations += 1;
            let Some((t, r, tn)) = accepted else {
                history.push(norm);
                return Err(Error::NewtonFailed { history });
            };
            damped = lambda < 1.0;
            x = t;
            res = r;
            norm = tn;
            history.push(norm);
        }

        let parts = layout.split(&x);
        let mesh = d.mesh.clone();
        let next = State {
            t: state.t + self.config.tau,
            phi: ScalarField::new(mesh.clone(), parts[PHI].to_vec())?,
            u: VectorField::new(mesh.clone(), d.dofs.scatter(parts[U]))?,
            theta: ScalarField::new(mesh.clone(), parts[THETA].to_vec())?,
        };
        let aux = StepAux {
            mu: ScalarField::new(mesh.clone(), parts[MU].to_vec())?,
            p: ScalarField::new(mesh, parts[P].to_vec())?,
        };
        Ok((next, aux, NewtonReport { iterations, residual: norm }))
    }

    fn mono_data(&self, state: &State, layout: &BlockLayout, x: &[f64]) -> Result<ChData> {
        let d = &self.disc;
        let parts = layout.split(x);
        let u = VectorField::new(d.mesh.clone(), d.dofs.scatter(parts[U]))?;
        let theta = ScalarField::new(d.mesh.clone(), parts[THETA].to_vec())?;
        Ok(self.ch_data(state, &u, &theta))
    }

    /// Residual vector, the (u, θ)-dependent data, and the φ-derivative per
    /// quadrature point.
    fn mono_residual(
        &self,
        state: &State,
        layout: &BlockLayout,
        poro: &CsrMatrix,
        poro_rhs: &[f64],
        x: &[f64],
    ) -> Result<(Vec<f64>, ChData, Vec<f64>)> {
        let n_poro = poro.nrows();
        let mut r = poro.mul_vec(&x[..n_poro]);
        r.iter_mut().zip(poro_rhs).for_each(|(a, b)| *a -= b);
        let data = self.mono_data(state, layout, x)?;
        let parts = layout.split(x);
        let ch = self.ch_residual(&data, parts[PHI], parts[MU]);
        r.extend(ch.r_phi);
        r.extend(ch.r_mu);
        Ok((r, data, ch.d_q))
    }

    fn mono_jacobian(&self, base: &BlockSystem, data: &ChData, d_q: &[f64], x: &[f64]) -> Result<CsrMatrix> {
        let d = &self.disc;
        let nq = d.rule.len();
        let phi1_q = d.at_points(base.layout().split(x)[PHI]);
        let mut g_e: Vec<Voigt> = Vec::with_capacity(phi1_q.len());
        let mut g_t: Vec<f64> = Vec::with_capacity(phi1_q.len());
        for (i, &p1) in phi1_q.iter().enumerate() {
            let (de, dt) = self.params.time_avg_mixed(
                data.phi0_q[i],
                p1,
                &data.strain.0[i / nq],
                data.theta_q[i],
                &d.time_rule,
            );
            g_e.push([-de[0], -de[1], -de[2]]);
            g_t.push(-dt);
        }
        let m_d = assembly::assemble_mass(&d.mesh, &d.rule, Weight::PerPoint(d_q));
        let mut sys = base.clone();
        sys.set_block(PHI, PHI, d.mass.clone())?;
        sys.set_block(PHI, MU, data.k_mob.clone().scaled(self.config.tau))?;
        sys.set_block(MU, U, assembly::assemble_strain_coupling(&d.mesh, &d.rule, &d.dofs, &g_e))?;
        sys.set_block(MU, THETA, assembly::assemble_mass(&d.mesh, &d.rule, Weight::PerPoint(&g_t)))?;
        sys.set_block(MU, PHI, CsrMatrix::lin_comb(-self.params.gamma, &d.laplace, -1.0, &m_d)?)?;
        sys.set_block(MU, MU, d.mass.clone())?;
        sys.assemble_matrix()
    }
}
