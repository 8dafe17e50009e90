//! Discrete energy, its dissipation and production rates, and the weighted
//! H⁻¹ norm.
//!
//! All volume integrals use the quadrature rule of the [`Discretization`], the
//! same rule the scheme assembles with, so the discrete energy law holds up
//! to solver tolerances rather than up to quadrature error.

use alloc::vec::Vec;

use crate::assembly::{self, Weight};
use crate::fespace::{strain, ScalarField, VectorField};
use crate::material::{psi, MaterialParams};
use crate::math::{dot, norm2, sqrt};
use crate::scheme::{Discretization, State, StepAux};
use crate::sparse::{solve_spd_with, CsrMatrix, DEFAULT_SPD_TOL};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyBreakdown {
    /// (γ/2)∫|∇φ|².
    pub interface: f64,
    /// ∫Ψ(φ).
    pub potential: f64,
    /// ∫W(φ, ℰ(u)).
    pub elastic: f64,
    /// ∫(M/2)(θ − α div u)².
    pub fluid: f64,
    pub total: f64,
}

/// Discrete free energy of `state`.
pub fn energy(disc: &Discretization, state: &State, params: &MaterialParams) -> EnergyBreakdown {
    let phi = state.phi.values();
    let interface = 0.5 * params.gamma * dot(phi, &disc.laplace().mul_vec(phi));
    let phi_q = disc.at_points(phi);
    let theta_q = disc.at_points(state.theta.values());
    let e = state.strain();
    let nq = disc.rule().len();
    let mesh = disc.mesh();
    let rule = disc.rule();
    let pot: Vec<f64> = phi_q.iter().map(|&p| psi(p)).collect();
    let potential = assembly::integrate_density(mesh, rule, &pot);
    let el: Vec<f64> = (0..phi_q.len())
        .map(|i| params.elastic_energy(phi_q[i], &e.0[i / nq]))
        .collect();
    let elastic = assembly::integrate_density(mesh, rule, &el);
    let fl: Vec<f64> = (0..phi_q.len())
        .map(|i| params.fluid_energy(phi_q[i], &e.0[i / nq], theta_q[i]))
        .collect();
    let fluid = assembly::integrate_density(mesh, rule, &fl);
    EnergyBreakdown {
        interface,
        potential,
        elastic,
        fluid,
        total: interface + potential + elastic + fluid,
    }
}

/// 𝒟 = ∫m(φⁿ)|∇μ|² + ∫C_ν(φⁿ)ℰ(∂u)·ℰ(∂u) + ∫κ(φⁿ)|∇p|², with `phi0_q` the old
/// phase field at the quadrature points and `du` the discrete velocity.
pub fn dissipation_rate(
    disc: &Discretization,
    params: &MaterialParams,
    phi0_q: &[f64],
    mu: &[f64],
    du: &VectorField,
    p: &[f64],
) -> f64 {
    let mesh = disc.mesh();
    let rule = disc.rule();
    let nq = rule.len();
    let mob: Vec<f64> = phi0_q.iter().map(|&q| params.mobility_at(q)).collect();
    let k_m = assembly::assemble_stiffness(mesh, rule, Weight::PerPoint(&mob));
    let kap: Vec<f64> = phi0_q.iter().map(|&q| params.coeffs_at(q).kappa).collect();
    let k_k = assembly::assemble_stiffness(mesh, rule, Weight::PerPoint(&kap));
    let rate = strain(du);
    let visc: Vec<f64> = (0..phi0_q.len())
        .map(|i| {
            let c = params.coeffs_at(phi0_q[i]).viscosity;
            let e = &rate.0[i / nq];
            dot(e, &crate::material::mat_vec(&c, e))
        })
        .collect();
    dot(mu, &k_m.mul_vec(mu)) + assembly::integrate_density(mesh, rule, &visc) + dot(p, &k_k.mul_vec(p))
}

/// 𝒫 = ∫rμ + ∫f·∂u + ∫sp, with `r` and `s` given per quadrature point.
pub fn production_rate(
    disc: &Discretization,
    params: &MaterialParams,
    r: &[f64],
    s: &[f64],
    mu: &[f64],
    du: &VectorField,
    p: &[f64],
) -> f64 {
    let mesh = disc.mesh();
    let rule = disc.rule();
    let chem = dot(&assembly::assemble_load(mesh, rule, r), mu);
    let fluid = dot(&assembly::assemble_load(mesh, rule, s), p);
    let mech = if params.body_force == [0.0, 0.0] {
        0.0
    } else {
        let dofs = disc.dofs();
        let f = assembly::assemble_body_force(mesh, dofs, params.body_force);
        dot(&f, &dofs.gather(du))
    };
    chem + mech + fluid
}

/// Discrete velocity (uⁿ⁺¹ − uⁿ)/τ.
pub fn velocity(prev: &State, next: &State, tau: f64) -> VectorField {
    let du = next
        .u
        .values()
        .iter()
        .zip(prev.u.values())
        .map(|(a, b)| [(a[0] - b[0]) / tau, (a[1] - b[1]) / tau])
        .collect();
    VectorField::new_unconstrained(next.mesh().clone(), du).expect("same mesh")
}

/// r at (φⁿ, ℰ(uⁿ⁺¹), θⁿ⁺¹) and s at (φⁿ, ℰ(uⁿ), θⁿ), per quadrature point.
pub fn source_points(disc: &Discretization, params: &MaterialParams, prev: &State, next: &State) -> (Vec<f64>, Vec<f64>) {
    let nq = disc.rule().len();
    let phi0 = disc.at_points(prev.phi.values());
    let e0 = prev.strain();
    let e1 = next.strain();
    let th0 = disc.at_points(prev.theta.values());
    let th1 = disc.at_points(next.theta.values());
    let r = (0..phi0.len())
        .map(|i| params.phase_source.eval(phi0[i], &e1.0[i / nq], th1[i]))
        .collect();
    let s = (0..phi0.len())
        .map(|i| params.fluid_source.eval(phi0[i], &e0.0[i / nq], th0[i]))
        .collect();
    (r, s)
}

/// ℱⁿ⁺¹ − ℱⁿ + τ(𝒟 − 𝒫) for the step `prev → next`; the scheme keeps this
/// nonpositive up to solver tolerances.
pub fn energy_inequality_residual(
    disc: &Discretization,
    params: &MaterialParams,
    prev: &State,
    next: &State,
    aux: &StepAux,
    tau: f64,
) -> f64 {
    let du = velocity(prev, next, tau);
    let phi0_q = disc.at_points(prev.phi.values());
    let d = dissipation_rate(disc, params, &phi0_q, aux.mu.values(), &du, aux.p.values());
    let (r, s) = source_points(disc, params, prev, next);
    let p = production_rate(disc, params, &r, &s, aux.mu.values(), &du, aux.p.values());
    energy(disc, next, params).total - energy(disc, prev, params).total + tau * (d - p)
}

/// Mobility-weighted stiffness matrix ∫m(φ)∇ψ_i·∇ψ_j.
pub fn mobility_stiffness(disc: &Discretization, params: &MaterialParams, phi: &ScalarField) -> CsrMatrix {
    let q = disc.at_points(phi.values());
    let mob: Vec<f64> = q.iter().map(|&v| params.mobility_at(v)).collect();
    assembly::assemble_stiffness(disc.mesh(), disc.rule(), Weight::PerPoint(&mob))
}

/// Solves `(m∇z, ∇ψ) = (v, ψ)` for all test functions ψ, with `z` normalised
/// to zero mean. `v` must be mean-free.
pub fn weighted_inverse_laplacian(disc: &Discretization, k_m: &CsrMatrix, v: &[f64]) -> Result<Vec<f64>> {
    let n = disc.mesh().n_vertices();
    if v.len() != n || k_m.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "inverse Laplacian input",
            expected: n,
            found: v.len(),
        });
    }
    let mean = disc.integral(v);
    let scale = norm2(v);
    if crate::math::abs(mean) > 1e-10 * scale {
        return Err(Error::NotMeanFree { mean, norm: scale });
    }
    let b = disc.mass().mul_vec(v);
    if norm2(&b) == 0.0 {
        return Ok(alloc::vec![0.0; n]);
    }
    let (mut z, _) = solve_spd_with(k_m, &b, None, DEFAULT_SPD_TOL, 20 * n + 200)?;
    let area = disc.integral(&alloc::vec![1.0; n]);
    let zm = disc.integral(&z) / area;
    z.iter_mut().for_each(|x| *x -= zm);
    Ok(z)
}

/// ‖v‖²_{-1,m} = ∫m|∇z|² for `z` the weighted inverse Laplacian of `v`.
pub fn h_minus1_m_norm_sq(disc: &Discretization, k_m: &CsrMatrix, v: &[f64]) -> Result<f64> {
    let z = weighted_inverse_laplacian(disc, k_m, v)?;
    Ok(dot(&z, &k_m.mul_vec(&z)))
}

/// max √m(φ) over the quadrature points.
pub fn sqrt_mobility_sup(disc: &Discretization, params: &MaterialParams, phi: &ScalarField) -> f64 {
    disc.at_points(phi.values())
        .iter()
        .map(|&v| sqrt(params.mobility_at(v)))
        .fold(0.0, f64::max)
}
