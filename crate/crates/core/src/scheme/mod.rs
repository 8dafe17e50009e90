//! Time integration.
//!
//! Each step first solves the linear poro-elastic system for
//! `(u, θ, p)` with all coefficients frozen at the old phase field, then the
//! nonlinear Cahn-Hilliard system for `(φ, μ)` by Newton's method. A fully
//! coupled Newton solve of all five fields is kept as a reference.

mod cahn_hilliard;
mod monolithic;
mod poroelastic;
mod run;

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::assembly::{self, QuadratureRule, Weight};
use crate::diagnostics::{self, EnergyBreakdown};
use crate::fespace::{strain, CellStrain, DisplacementDofs, ScalarField, VectorField};
use crate::material::{MaterialParams, TimeRule, DEFAULT_TIME_POINTS};
use crate::mesh::SimplicialMesh;
use crate::sparse::{CsrMatrix, DirectSolver, SolverStats};
use crate::{Error, Result};

pub use cahn_hilliard::NewtonReport;
pub use run::{run, NullSink, RunFailure, RunSummary, StepSink};

/// Pivot threshold of the step solvers. The pressure columns of the
/// poro-elastic matrix have diagonals of order h² against off-diagonal
/// entries of order one; the usual 0.1 would pivot away from the diagonal and
/// destroy the fill-reducing ordering. Iterative refinement guards accuracy.
const STEP_PIVOT_THRESHOLD: f64 = 1e-6;

/// Default cap on the number of unknowns accepted by the monolithic solver.
pub const DEFAULT_MONOLITHIC_DOF_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub tau: f64,
    pub final_time: f64,
    /// Absolute tolerance on the Euclidean norm of the Newton residual.
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    /// Gauss points per piece for the time average of `W̃_φ`.
    pub time_points: usize,
    /// Exactness degree of the volume quadrature.
    pub quad_degree: usize,
    /// Drop the fluid energy (M ≡ 0).
    pub chl_mode: bool,
    pub monolithic_dof_cap: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            tau: 1e-5,
            final_time: 0.01,
            newton_tol: 1e-10,
            newton_max_iters: 50,
            time_points: DEFAULT_TIME_POINTS,
            quad_degree: assembly::DEFAULT_DEGREE,
            chl_mode: false,
            monolithic_dof_cap: DEFAULT_MONOLITHIC_DOF_CAP,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter("time step must be positive"));
        }
        if !(self.final_time >= 0.0) || !self.final_time.is_finite() {
            return Err(Error::InvalidParameter("final time must be nonnegative"));
        }
        let steps = self.final_time / self.tau;
        if crate::math::abs(steps - crate::math::round(steps)) > 1e-6 * steps.max(1.0) {
            return Err(Error::InvalidParameter("final time must be a multiple of the time step"));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidParameter("Newton tolerance must be positive"));
        }
        if self.newton_max_iters == 0 || self.time_points == 0 {
            return Err(Error::InvalidParameter("iteration and quadrature counts must be positive"));
        }
        Ok(())
    }

    /// Number of steps from 0 to the final time.
    pub fn n_steps(&self) -> usize {
        crate::math::round(self.final_time / self.tau) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub phi: ScalarField,
    pub u: VectorField,
    pub theta: ScalarField,
}

impl State {
    /// Phase field `phi` with zero displacement and fluid content at t = 0.
    pub fn initial(phi: ScalarField) -> Self {
        let mesh = phi.mesh().clone();
        Self {
            t: 0.0,
            u: VectorField::zeros(mesh.clone()),
            theta: ScalarField::zeros(mesh),
            phi,
        }
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        self.phi.mesh()
    }

    pub fn strain(&self) -> CellStrain {
        strain(&self.u)
    }

    fn check_finite(&self) -> Result<()> {
        let scalars = self.phi.values().iter().chain(self.theta.values());
        let vectors = self.u.values().iter().flat_map(|v| v.iter());
        for (i, v) in scalars.chain(vectors).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { vertex: i, value: *v });
            }
        }
        Ok(())
    }
}

/// Chemical potential and pressure of one completed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepAux {
    pub mu: ScalarField,
    pub p: ScalarField,
}

/// Diagnostics of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub energy: EnergyBreakdown,
    pub dissipation: f64,
    pub production: f64,
    /// ℱⁿ⁺¹ − ℱⁿ + τ(𝒟 − 𝒫); nonpositive up to solver tolerances.
    pub energy_residual: f64,
    /// 1e-8·(1 + |ℱⁿ|).
    pub energy_tolerance: f64,
    pub mass_phi: f64,
    pub mass_theta: f64,
    /// τ⟨r, 1⟩, the phase-field supply of the step.
    pub supply_phi: f64,
    /// τ⟨s, 1⟩.
    pub supply_theta: f64,
    /// Relative defect of the per-step phase-field balance.
    pub mass_residual_phi: f64,
    /// Relative defect of the per-step fluid-content balance.
    pub mass_residual_theta: f64,
    pub newton_iters: usize,
    pub newton_residual: f64,
}

impl StepRecord {
    pub fn energy_ok(&self) -> bool {
        self.energy_residual <= self.energy_tolerance
    }
}

/// Mesh-dependent data shared by all steps.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Arc<SimplicialMesh>,
    rule: QuadratureRule,
    time_rule: TimeRule,
    dofs: DisplacementDofs,
    mass: CsrMatrix,
    laplace: CsrMatrix,
}

impl Discretization {
    pub fn new(mesh: Arc<SimplicialMesh>, quad_degree: usize, time_points: usize) -> Self {
        let rule = QuadratureRule::for_degree(quad_degree);
        let mass = assembly::assemble_mass(&mesh, &rule, Weight::Constant(1.0));
        let laplace = assembly::assemble_stiffness(&mesh, &rule, Weight::Constant(1.0));
        Self {
            dofs: DisplacementDofs::interior(&mesh),
            time_rule: TimeRule::new(time_points),
            mesh,
            rule,
            mass,
            laplace,
        }
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn time_rule(&self) -> &TimeRule {
        &self.time_rule
    }

    pub fn dofs(&self) -> &DisplacementDofs {
        &self.dofs
    }

    /// Unweighted mass matrix.
    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Unweighted stiffness matrix.
    pub fn laplace(&self) -> &CsrMatrix {
        &self.laplace
    }

    /// Nodal values at the quadrature points.
    pub fn at_points(&self, values: &[f64]) -> Vec<f64> {
        assembly::eval_at_points(&self.mesh, &self.rule, values)
    }

    /// ⟨v, 1⟩.
    pub fn integral(&self, values: &[f64]) -> f64 {
        // Row sums of the mass matrix are ∫ψ_i.
        (0..values.len())
            .map(|i| self.mass.row(i).1.iter().sum::<f64>() * values[i])
            .sum()
    }

    /// ∫|v| for the lumped representation; scale for relative balance defects.
    pub fn lumped_abs(&self, values: &[f64]) -> f64 {
        (0..values.len())
            .map(|i| self.mass.row(i).1.iter().sum::<f64>() * crate::math::abs(values[i]))
            .sum()
    }
}

/// Owns the parameters, the discretization and the solver caches of a run.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: MaterialParams,
    config: SchemeConfig,
    disc: Discretization,
    poro_solver: DirectSolver,
    ch_solver: DirectSolver,
    mono_solver: DirectSolver,
}

/// Output of [`Stepper::step`].
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: State,
    pub aux: StepAux,
    pub record: StepRecord,
}

impl Stepper {
    pub fn new(mesh: Arc<SimplicialMesh>, params: MaterialParams, config: SchemeConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        let params = if config.chl_mode { params.without_fluid_energy() } else { params };
        Ok(Self {
            disc: Discretization::new(mesh, config.quad_degree, config.time_points),
            params,
            config,
            poro_solver: DirectSolver::with_pivot_threshold(STEP_PIVOT_THRESHOLD).reusing(),
            ch_solver: DirectSolver::with_pivot_threshold(STEP_PIVOT_THRESHOLD).reusing(),
            mono_solver: DirectSolver::new(),
        })
    }

    /// Effective parameters (with M ≡ 0 in CHL mode).
    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    /// Work counters of the poro-elastic and Cahn-Hilliard solvers.
    pub fn solver_stats(&self) -> (SolverStats, SolverStats) {
        (self.poro_solver.stats(), self.ch_solver.stats())
    }

    fn check_mesh(&self, state: &State) -> Result<()> {
        if !Arc::ptr_eq(state.mesh(), &self.disc.mesh) && **state.mesh() != *self.disc.mesh {
            return Err(Error::DimensionMismatch {
                what: "state mesh",
                expected: self.disc.mesh.n_vertices(),
                found: state.mesh().n_vertices(),
            });
        }
        Ok(())
    }

    /// One step of the decoupled scheme. `previous_mu` seeds Newton.
    pub fn step(&mut self, state: &State, previous_mu: Option<&ScalarField>, index: usize) -> Result<StepOutput> {
        self.check_mesh(state)?;
        state.check_finite()?;
        let (u, theta, p) = self.poroelastic_step(state)?;
        let (phi, mu, report) = self.cahn_hilliard_step(state, &u, &theta, previous_mu)?;
        let next = State {
            t: state.t + self.config.tau,
            phi,
            u,
            theta,
        };
        let aux = StepAux { mu, p };
        let record = self.record(state, &next, &aux, report, index);
        Ok(StepOutput { state: next, aux, record })
    }

    /// Energy, rates and balance defects of the step `prev → next`.
    pub fn record(&self, prev: &State, next: &State, aux: &StepAux, newton: NewtonReport, index: usize) -> StepRecord {
        let d = &self.disc;
        let p = &self.params;
        let tau = self.config.tau;
        let e0 = diagnostics::energy(d, prev, p);
        let e1 = diagnostics::energy(d, next, p);
        let du = diagnostics::velocity(prev, next, tau);
        let phi0q = d.at_points(prev.phi.values());
        let dissipation = diagnostics::dissipation_rate(d, p, &phi0q, aux.mu.values(), &du, aux.p.values());
        let (r, s) = diagnostics::source_points(d, p, prev, next);
        let production = diagnostics::production_rate(d, p, &r, &s, aux.mu.values(), &du, aux.p.values());
        let energy_residual = e1.total - e0.total + tau * (dissipation - production);

        let (m0, m1) = (d.integral(prev.phi.values()), d.integral(next.phi.values()));
        let r_int = assembly::integrate_density(&d.mesh, &d.rule, &r);
        let scale = d.lumped_abs(prev.phi.values()).max(d.lumped_abs(next.phi.values()));
        let mass_residual_phi = relative(m1 - m0 - tau * r_int, scale);
        let (t0, t1) = (d.integral(prev.theta.values()), d.integral(next.theta.values()));
        let s_int = assembly::integrate_density(&d.mesh, &d.rule, &s);
        let scale = d.lumped_abs(prev.theta.values()).max(d.lumped_abs(next.theta.values()));
        let mass_residual_theta = relative(t1 - t0 - tau * s_int, scale);
        StepRecord {
            step: index,
            t: next.t,
            energy: e1,
            dissipation,
            production,
            energy_residual,
            energy_tolerance: 1e-8 * (1.0 + crate::math::abs(e0.total)),
            mass_phi: m1,
            mass_theta: t1,
            supply_phi: tau * r_int,
            supply_theta: tau * s_int,
            mass_residual_phi,
            mass_residual_theta,
            newton_iters: newton.iterations,
            newton_residual: newton.residual,
        }
    }
}

fn relative(defect: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        crate::math::abs(defect) / scale
    } else {
        crate::math::abs(defect)
    }
}

#[cfg(test)]
mod tests;
