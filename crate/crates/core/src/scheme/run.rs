use alloc::vec::Vec;

use super::{State, StepAux, StepRecord, Stepper};
use crate::diagnostics::{self, EnergyBreakdown};
use crate::Error;

/// Receives every completed step of a [`run`].
pub trait StepSink {
    /// Called once with the initial state before the first step.
    fn on_start(&mut self, _state: &State, _energy: &EnergyBreakdown) {}

    fn on_step(&mut self, state: &State, aux: &StepAux, record: &StepRecord);
}

/// Discards everything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullSink;

impl StepSink for NullSink {
    fn on_step(&mut self, _: &State, _: &StepAux, _: &StepRecord) {}
}

impl StepSink for Vec<StepRecord> {
    fn on_step(&mut self, _: &State, _: &StepAux, record: &StepRecord) {
        self.push(*record);
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub initial_energy: EnergyBreakdown,
    pub final_state: State,
    /// `None` when no step was taken.
    pub final_aux: Option<StepAux>,
    /// Largest per-step relative defect of the phase-field balance.
    pub max_step_mass_phi: f64,
    pub max_step_mass_theta: f64,
    /// Relative defect of ⟨φⁿ,1⟩ − ⟨φ⁰,1⟩ − τΣ⟨r,1⟩ at the end.
    pub cumulative_mass_phi: f64,
    pub cumulative_mass_theta: f64,
    /// Largest per-step energy residual divided by its tolerance; at most 1
    /// when every step satisfied the energy inequality.
    pub worst_energy_ratio: f64,
    /// Largest ℱⁿ⁺¹ − ℱⁿ − 1e-8(1+|ℱⁿ|) over all steps.
    pub worst_energy_increase: f64,
    pub max_newton_iters: usize,
    /// h²ᵈ/τ with d = 2.
    pub uniqueness_ratio: f64,
}

impl RunSummary {
    /// Whether the balance and energy checks hold with the tolerances used by
    /// the acceptance criteria.
    pub fn structure_preserved(&self, mass_tol: f64) -> bool {
        self.max_step_mass_phi <= mass_tol
            && self.max_step_mass_theta <= mass_tol
            && self.cumulative_mass_phi <= mass_tol
            && self.cumulative_mass_theta <= mass_tol
            && self.worst_energy_ratio <= 1.0
    }
}

/// A failed run with everything computed before the failure.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: Error,
    /// Index of the step that failed (1-based).
    pub step: usize,
    pub last_state: State,
    pub last_aux: Option<StepAux>,
}

impl core::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "step {} (t = {}) failed: {}", self.step, self.last_state.t, self.error)
    }
}

/// Integrates from `initial` over `stepper.config().n_steps()` steps,
/// streaming every step to `sinks`.
pub fn run(initial: State, stepper: &mut Stepper, sinks: &mut [&mut dyn StepSink]) -> core::result::Result<RunSummary, RunFailure> {
    let disc = stepper.discretization();
    let h = disc.mesh().h_max();
    let uniqueness_ratio = h * h * h * h / stepper.config().tau;
    log::info!("h^4/tau = {uniqueness_ratio:.3e}");
    let initial_energy = diagnostics::energy(disc, &initial, stepper.params());
    for s in sinks.iter_mut() {
        s.on_start(&initial, &initial_energy);
    }
    let phi_mass0 = disc.integral(initial.phi.values());
    let theta_mass0 = disc.integral(initial.theta.values());

    let mut state = initial;
    let mut aux: Option<StepAux> = None;
    let mut summary = RunSummary {
        steps: 0,
        initial_energy,
        final_state: state.clone(),
        final_aux: None,
        max_step_mass_phi: 0.0,
        max_step_mass_theta: 0.0,
        cumulative_mass_phi: 0.0,
        cumulative_mass_theta: 0.0,
        worst_energy_ratio: f64::NEG_INFINITY,
        worst_energy_increase: f64::NEG_INFINITY,
        max_newton_iters: 0,
        uniqueness_ratio,
    };
    let (mut supply_phi, mut supply_theta) = (0.0, 0.0);
    let (mut scale_phi, mut scale_theta): (f64, f64) = (
        stepper.discretization().lumped_abs(state.phi.values()),
        stepper.discretization().lumped_abs(state.theta.values()),
    );
    let mut energy = initial_energy.total;
    for index in 1..=stepper.config().n_steps() {
        let out = match stepper.step(&state, aux.as_ref().map(|a| &a.mu), index) {
            Ok(out) => out,
            Err(error) => {
                return Err(RunFailure {
                    error,
                    step: index,
                    last_state: state,
                    last_aux: aux,
                })
            }
        };
        let r = &out.record;
        supply_phi += r.supply_phi;
        supply_theta += r.supply_theta;
        let disc = stepper.discretization();
        scale_phi = scale_phi.max(disc.lumped_abs(out.state.phi.values()));
        scale_theta = scale_theta.max(disc.lumped_abs(out.state.theta.values()));
        summary.max_step_mass_phi = summary.max_step_mass_phi.max(r.mass_residual_phi);
        summary.max_step_mass_theta = summary.max_step_mass_theta.max(r.mass_residual_theta);
        summary.cumulative_mass_phi = super::relative(r.mass_phi - phi_mass0 - supply_phi, scale_phi);
        summary.cumulative_mass_theta = super::relative(r.mass_theta - theta_mass0 - supply_theta, scale_theta);
        summary.worst_energy_ratio = summary.worst_energy_ratio.max(r.energy_residual / r.energy_tolerance);
        summary.worst_energy_increase = summary
            .worst_energy_increase
            .max(r.energy.total - energy - r.energy_tolerance);
        summary.max_newton_iters = summary.max_newton_iters.max(r.newton_iters);
        energy = r.energy.total;
        if !r.energy_ok() {
            log::warn!(
                "step {index}: energy residual {:.3e} exceeds {:.3e}",
                r.energy_residual,
                r.energy_tolerance
            );
        }
        for s in sinks.iter_mut() {
            s.on_step(&out.state, &out.aux, &out.record);
        }
        summary.steps = index;
        state = out.state;
        aux = Some(out.aux);
    }
    if summary.steps == 0 {
        summary.worst_energy_ratio = 0.0;
        summary.worst_energy_increase = 0.0;
    }
    summary.final_state = state;
    summary.final_aux = aux;
    Ok(summary)
}
