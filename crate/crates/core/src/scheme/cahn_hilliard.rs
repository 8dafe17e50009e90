use alloc::vec;
use alloc::vec::Vec;

use super::{State, Stepper};
use crate::assembly::{self, Weight};
use crate::fespace::{strain, CellStrain, ScalarField, VectorField};
use crate::math::norm2;
use crate::sparse::{solve_spd, BlockLayout, BlockSystem, CsrMatrix, DEFAULT_SPD_TOL};
use crate::{Error, Result};

/// Halvings of the Newton update tried before giving up.
const MAX_HALVINGS: usize = 8;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Euclidean norm of the final residual.
    pub residual: f64,
}

/// Data of the Cahn-Hilliard subproblem that stays fixed during Newton.
pub(crate) struct ChData {
    pub phi0: Vec<f64>,
    pub phi0_q: Vec<f64>,
    pub strain: CellStrain,
    pub theta_q: Vec<f64>,
    /// ∫ m(φⁿ) ∇ψ_i·∇ψ_j.
    pub k_mob: CsrMatrix,
    /// ∫ r ψ_i.
    pub load_r: Vec<f64>,
}

/// Residual of the (φ, μ) system and the pointwise second derivative
/// needed by its Jacobian.
pub(crate) struct ChResidual {
    pub r_phi: Vec<f64>,
    pub r_mu: Vec<f64>,
    /// 3φ² + ∂(W̃_φ average)/∂φ_new per quadrature point.
    pub d_q: Vec<f64>,
}

impl ChResidual {
    fn norm(&self) -> f64 {
        let a = norm2(&self.r_phi);
        let b = norm2(&self.r_mu);
        crate::math::sqrt(a * a + b * b)
    }
}

impl Stepper {
    pub(crate) fn ch_data(&self, state: &State, u_new: &VectorField, theta_new: &ScalarField) -> ChData {
        let d = &self.disc;
        let phi0_q = d.at_points(state.phi.values());
        let strain = strain(u_new);
        let theta_q = d.at_points(theta_new.values());
        let mob: Vec<f64> = phi0_q.iter().map(|&p| self.params.mobility_at(p)).collect();
        let k_mob = assembly::assemble_stiffness(&d.mesh, &d.rule, Weight::PerPoint(&mob));
        let nq = d.rule.len();
        let load_r = if self.params.phase_source.is_zero() {
            vec![0.0; d.mesh.n_vertices()]
        } else {
            let r: Vec<f64> = (0..phi0_q.len())
                .map(|i| self.params.phase_source.eval(phi0_q[i], &strain.0[i / nq], theta_q[i]))
                .collect();
            assembly::assemble_load(&d.mesh, &d.rule, &r)
        };
        ChData {
            phi0: state.phi.values().to_vec(),
            phi0_q,
            strain,
            theta_q,
            k_mob,
            load_r,
        }
    }

    /// Pointwise nonlinearity Ψ'_vex(φ₁) + Ψ'_cav(φ₀) + W̃_φ average and its
    /// φ₁-derivative.
    pub(crate) fn ch_nonlinearity(&self, data: &ChData, phi1: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = &self.disc;
        let nq = d.rule.len();
        let phi1_q = d.at_points(phi1);
        let mut val = Vec::with_capacity(phi1_q.len());
        let mut der = Vec::with_capacity(phi1_q.len());
        for (i, &p1) in phi1_q.iter().enumerate() {
            let p0 = data.phi0_q[i];
            let (avg, davg) =
                self.params
                    .time_avg_pair(p0, p1, &data.strain.0[i / nq], data.theta_q[i], &d.time_rule);
            val.push(crate::material::psi_terms(p1, p0) + avg);
            der.push(3.0 * p1 * p1 + davg);
        }
        (val, der)
    }

    pub(crate) fn ch_residual(&self, data: &ChData, phi1: &[f64], mu1: &[f64]) -> ChResidual {
        let d = &self.disc;
        let tau = self.config.tau;
        let gamma = self.params.gamma;
        let dphi: Vec<f64> = phi1.iter().zip(&data.phi0).map(|(a, b)| a - b).collect();
        let m_dphi = d.mass.mul_vec(&dphi);
        let k_mu = data.k_mob.mul_vec(mu1);
        let r_phi = (0..phi1.len())
            .map(|i| m_dphi[i] + tau * k_mu[i] - tau * data.load_r[i])
            .collect();
        let (val, d_q) = self.ch_nonlinearity(data, phi1);
        let n = assembly::assemble_load(&d.mesh, &d.rule, &val);
        let m_mu = d.mass.mul_vec(mu1);
        let k_phi = d.laplace.mul_vec(phi1);
        let r_mu = (0..phi1.len())
            .map(|i| m_mu[i] - gamma * k_phi[i] - n[i])
            .collect();
        ChResidual { r_phi, r_mu, d_q }
    }

    fn ch_jacobian(&self, data: &ChData, d_q: &[f64]) -> Result<CsrMatrix> {
        let d = &self.disc;
        let n = d.mesh.n_vertices();
        let m_d = assembly::assemble_mass(&d.mesh, &d.rule, Weight::PerPoint(d_q));
        let lower = CsrMatrix::lin_comb(-self.params.gamma, &d.laplace, -1.0, &m_d)?;
        let mut sys = BlockSystem::new(BlockLayout::new(&[("phi", n), ("mu", n)]));
        sys.set_block(0, 0, d.mass.clone())?;
        sys.set_block(0, 1, data.k_mob.clone().scaled(self.config.tau))?;
        sys.set_block(1, 0, lower)?;
        sys.set_block(1, 1, d.mass.clone())?;
        sys.assemble_matrix()
    }

    /// μ solving the second equation for a given φ, used to seed Newton.
    pub(crate) fn algebraic_mu(&self, data: &ChData, phi: &[f64]) -> Result<Vec<f64>> {
        let d = &self.disc;
        let (val, _) = self.ch_nonlinearity(data, phi);
        let n = assembly::assemble_load(&d.mesh, &d.rule, &val);
        let k_phi = d.laplace.mul_vec(phi);
        let rhs: Vec<f64> = (0..phi.len()).map(|i| self.params.gamma * k_phi[i] + n[i]).collect();
        solve_spd(&d.mass, &rhs, DEFAULT_SPD_TOL)
    }

    /// Nonlinear step for (φⁿ⁺¹, μⁿ⁺¹) given the new displacement and fluid content.
    pub fn cahn_hilliard_step(
        &mut self,
        state: &State,
        u_new: &VectorField,
        theta_new: &ScalarField,
        previous_mu: Option<&ScalarField>,
    ) -> Result<(ScalarField, ScalarField, NewtonReport)> {
        let data = self.ch_data(state, u_new, theta_new);
        let n = data.phi0.len();
        let mut phi = data.phi0.clone();
        let mut mu = match previous_mu {
            Some(m) => m.values().to_vec(),
            None => self.algebraic_mu(&data, &phi)?,
        };
        let mut res = self.ch_residual(&data, &phi, &mu);
        let mut norm = res.norm();
        let mut history = vec![norm];
        let mut iterations = 0;
        let mut damped = false;
        loop {
            if !norm.is_finite() {
                return Err(Error::NonFiniteResidual { iteration: iterations });
            }
            // A damped update leaves the affine mass equation unbalanced; finish
            // with a full step.
            if norm <= self.config.newton_tol && !damped {
                break;
            }
            if iterations == self.config.newton_max_iters {
                return Err(Error::NewtonFailed { history });
            }
            let jac = self.ch_jacobian(&data, &res.d_q)?;
            let rhs: Vec<f64> = res.r_phi.iter().chain(&res.r_mu).map(|v| -v).collect();
            let delta = self.ch_solver.solve(&jac, &rhs)?;
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let trial_phi: Vec<f64> = (0..n).map(|i| phi[i] + lambda * delta[i]).collect();
                let trial_mu: Vec<f64> = (0..n).map(|i| mu[i] + lambda * delta[n + i]).collect();
                let trial = self.ch_residual(&data, &trial_phi, &trial_mu);
                let tn = trial.norm();
                if !tn.is_finite() {
                    return Err(Error::NonFiniteResidual { iteration: iterations + 1 });
                }
                if tn < norm || tn <= self.config.newton_tol || lambda == 1.0 && damped {
                    accepted = Some((trial_phi, trial_mu, trial, tn));
                    break;
                }
                lambda *= 0.5;
            }
            iterations += 1;
            let Some((p, m, r, tn)) = accepted else {
                history.push(norm);
                return Err(Error::NewtonFailed { history });
            };
            damped = lambda < 1.0;
            phi = p;
            mu = m;
            res = r;
            norm = tn;
            history.push(norm);
        }
        let mesh = self.disc.mesh.clone();
        Ok((
            ScalarField::new(mesh.clone(), phi)?,
            ScalarField::new(mesh, mu)?,
            NewtonReport { iterations, residual: norm },
        ))
    }
}
