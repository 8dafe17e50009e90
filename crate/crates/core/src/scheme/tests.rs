use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::*;
use crate::fespace::interpolate_nodal;
use crate::material::{Eigenstrain, Source};

fn exp1_phi(mesh: &Arc<SimplicialMesh>) -> ScalarField {
    interpolate_nodal(mesh.clone(), |x, y| -0.1 + 0.01 * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()).unwrap()
}

fn stepper(level: usize, params: MaterialParams, tau: f64, steps: usize) -> Stepper {
    let mesh = Arc::new(SimplicialMesh::unit_square(level));
    let config = SchemeConfig {
        tau,
        final_time: tau * steps as f64,
        ..SchemeConfig::default()
    };
    Stepper::new(mesh, params, config).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn flat(u: &VectorField) -> Vec<f64> {
    u.values().iter().flat_map(|v| v.iter().copied()).collect()
}

#[test]
fn config_rejects_bad_values() {
    let mut c = SchemeConfig::default();
    assert_eq!(c.n_steps(), 1000);
    c.tau = 0.0;
    assert!(c.validate().is_err());
    c.tau = 3e-3;
    assert!(c.validate().is_err());
    c.tau = 1e-3;
    c.newton_tol = 0.0;
    assert!(c.validate().is_err());
}

#[test]
fn stationary_state_persists() {
    let params = MaterialParams {
        eigenstrain: Eigenstrain::NONE,
        ..MaterialParams::default()
    };
    let mut s = stepper(2, params, 1e-3, 100);
    let mesh = s.discretization().mesh().clone();
    let initial = State::initial(ScalarField::constant(mesh, 0.3));
    let summary = run(initial.clone(), &mut s, &mut []).unwrap();
    let fin = &summary.final_state;
    assert_eq!(summary.steps, 100);
    assert!(max_diff(fin.phi.values(), initial.phi.values()) < 1e-13);
    assert!(flat(&fin.u).iter().all(|v| v.abs() < 1e-13));
    assert!(fin.theta.values().iter().all(|v| v.abs() < 1e-13));
    let aux = summary.final_aux.unwrap();
    assert!(aux.p.values().iter().all(|v| v.abs() < 1e-13));
    assert!(summary.worst_energy_ratio <= 1.0);
}

#[test]
fn zero_data_gives_zero_poroelastic_step() {
    let params = MaterialParams {
        eigenstrain: Eigenstrain::NONE,
        ..MaterialParams::default()
    };
    let mut s = stepper(2, params, 1e-3, 1);
    let mesh = s.discretization().mesh().clone();
    let (u, theta, p) = s.poroelastic_step(&State::initial(ScalarField::zeros(mesh))).unwrap();
    assert!(flat(&u).iter().all(|&v| v == 0.0));
    assert!(theta.values().iter().chain(p.values()).all(|&v| v == 0.0));
}

#[test]
fn constant_phase_field_gives_constant_potential() {
    let params = MaterialParams {
        eigenstrain: Eigenstrain::NONE,
        ..MaterialParams::default()
    };
    let mut s = stepper(2, params.clone(), 1e-3, 1);
    let mesh = s.discretization().mesh().clone();
    let c = -0.4;
    let state = State::initial(ScalarField::constant(mesh.clone(), c));
    let (u, theta, _) = s.poroelastic_step(&state).unwrap();
    let (phi, mu, report) = s.cahn_hilliard_step(&state, &u, &theta, None).unwrap();
    let expected = c * c * c - c + params.wtilde_phi(c, &[0.0; 3], 0.0);
    assert!(max_diff(phi.values(), state.phi.values()) < 1e-14);
    assert!(mu.values().iter().all(|m| (m - expected).abs() < 1e-12));
    assert!(report.iterations <= 2);
}

#[test]
fn experiment_one_step_is_structure_preserving() {
    let mut s = stepper(3, MaterialParams::default(), 1e-5, 1);
    let mesh = s.discretization().mesh().clone();
    let state = State::initial(exp1_phi(&mesh));
    let out = s.step(&state, None, 1).unwrap();
    let r = out.record;
    assert!(r.energy_ok(), "{} > {}", r.energy_residual, r.energy_tolerance);
    assert!(r.mass_residual_phi < 1e-12, "{}", r.mass_residual_phi);
    assert!(r.mass_residual_theta < 1e-11, "{}", r.mass_residual_theta);
    assert!(r.dissipation >= 0.0);
    assert_eq!(r.production, 0.0);
    assert!(r.energy.total < diagnostics::energy(s.discretization(), &state, s.params()).total);
    let direct = diagnostics::energy_inequality_residual(s.discretization(), s.params(), &state, &out.state, &out.aux, 1e-5);
    assert!((direct - r.energy_residual).abs() < 1e-15);
}

#[test]
fn splitting_matches_monolithic_solve() {
    let mut s = stepper(2, MaterialParams::default(), 1e-5, 3);
    let mesh = s.discretization().mesh().clone();
    let mut state = State::initial(exp1_phi(&mesh));
    let mut mu: Option<ScalarField> = None;
    for k in 1..=3 {
        let (mono, mono_aux, _) = s.solve_monolithic(&state, mu.as_ref()).unwrap();
        let out = s.step(&state, mu.as_ref(), k).unwrap();
        assert!(max_diff(mono.phi.values(), out.state.phi.values()) < 1e-9);
        assert!(max_diff(&flat(&mono.u), &flat(&out.state.u)) < 1e-9);
        assert!(max_diff(mono.theta.values(), out.state.theta.values()) < 1e-9);
        assert!(max_diff(mono_aux.mu.values(), out.aux.mu.values()) < 1e-9);
        assert!(max_diff(mono_aux.p.values(), out.aux.p.values()) < 1e-9);
        state = out.state;
        mu = Some(out.aux.mu);
    }
}

#[test]
fn monolithic_refuses_large_meshes() {
    let mut s = stepper(5, MaterialParams::default(), 1e-5, 1);
    let mesh = s.discretization().mesh().clone();
    let state = State::initial(exp1_phi(&mesh));
    assert!(matches!(s.solve_monolithic(&state, None), Err(Error::TooManyDofs { .. })));
}

#[test]
fn chl_mode_has_zero_pressure() {
    let mesh = Arc::new(SimplicialMesh::unit_square(3));
    let config = SchemeConfig {
        tau: 1e-4,
        final_time: 3e-4,
        chl_mode: true,
        ..SchemeConfig::default()
    };
    let mut s = Stepper::new(mesh.clone(), MaterialParams::default(), config).unwrap();
    let mut state = State::initial(exp1_phi(&mesh));
    for k in 1..=3 {
        let out = s.step(&state, None, k).unwrap();
        assert!(out.aux.p.values().iter().all(|&p| p == 0.0));
        assert!(max_diff(out.state.theta.values(), state.theta.values()) == 0.0);
        let (mono, mono_aux, _) = s.solve_monolithic(&state, None).unwrap();
        assert!(mono_aux.p.values().iter().all(|&p| p.abs() < 1e-14));
        assert!(max_diff(mono.phi.values(), out.state.phi.values()) < 1e-9);
        state = out.state;
    }
}

#[test]
fn constant_source_accumulates_mass() {
    let c = 0.7;
    let params = MaterialParams {
        phase_source: Source::Constant(c),
        ..MaterialParams::default()
    };
    let n = 20;
    let tau = 1e-4;
    let mut s = stepper(3, params, tau, n);
    let mesh = s.discretization().mesh().clone();
    let initial = State::initial(exp1_phi(&mesh));
    let m0 = s.discretization().integral(initial.phi.values());
    let summary = run(initial, &mut s, &mut []).unwrap();
    let m1 = s.discretization().integral(summary.final_state.phi.values());
    assert!((m1 - m0 - n as f64 * tau * c).abs() < 1e-11);
    assert!(summary.cumulative_mass_phi < 1e-11);
}

#[test]
fn reflection_symmetric_data_stays_symmetric() {
    let mut s = stepper(3, MaterialParams::default(), 1e-4, 2);
    let mesh = s.discretization().mesh().clone();
    let phi = interpolate_nodal(mesh.clone(), |x, y| 0.5 * (PI * x).cos() * (PI * y).cos() + 0.2 * (x * y)).unwrap();
    let verts = mesh.vertices();
    let mirror: Vec<usize> = verts
        .iter()
        .map(|p| {
            verts
                .iter()
                .position(|q| (q[0] - p[1]).abs() < 1e-14 && (q[1] - p[0]).abs() < 1e-14)
                .unwrap()
        })
        .collect();
    let mut records = Vec::new();
    let summary = run(State::initial(phi), &mut s, &mut [&mut records]).unwrap();
    assert_eq!(records.len(), 2);
    let fin = summary.final_state;
    let aux = summary.final_aux.unwrap();
    for (i, &j) in mirror.iter().enumerate() {
        for f in [fin.phi.values(), fin.theta.values(), aux.mu.values(), aux.p.values()] {
            assert!((f[i] - f[j]).abs() < 1e-10);
        }
        let (a, b) = (fin.u.values()[i], fin.u.values()[j]);
        assert!((a[0] - b[1]).abs() < 1e-10 && (a[1] - b[0]).abs() < 1e-10);
    }
}

#[test]
fn smaller_steps_are_consistent() {
    let params = MaterialParams::default();
    let mesh = Arc::new(SimplicialMesh::unit_square(3));
    let initial = State::initial(exp1_phi(&mesh));
    let horizon = 1e-3;
    let mut finals = Vec::new();
    for tau in [horizon, horizon / 2.0, horizon / 4.0, horizon / 8.0] {
        let config = SchemeConfig {
            tau,
            final_time: horizon,
            ..SchemeConfig::default()
        };
        let mut s = Stepper::new(mesh.clone(), params.clone(), config).unwrap();
        finals.push(run(initial.clone(), &mut s, &mut []).unwrap().final_state);
    }
    let d = |a: &State, b: &State| max_diff(a.phi.values(), b.phi.values());
    let d1 = d(&finals[0], &finals[1]);
    let d2 = d(&finals[1], &finals[2]);
    let d3 = d(&finals[2], &finals[3]);
    let (q1, q2) = (d1 / d2, d2 / d3);
    assert!(q1 > 1.6 && q1 < 2.5, "{q1} {q2}");
    assert!(q2 > 1.6 && q2 < 2.5, "{q2}");
}

#[test]
fn state_on_other_mesh_is_rejected() {
    let mut s = stepper(2, MaterialParams::default(), 1e-5, 1);
    let other = Arc::new(SimplicialMesh::unit_square(3));
    let state = State::initial(exp1_phi(&other));
    assert!(s.step(&state, None, 1).is_err());
}

#[test]
fn non_finite_state_is_rejected() {
    let mut s = stepper(2, MaterialParams::default(), 1e-5, 1);
    let mesh = s.discretization().mesh().clone();
    let mut phi = exp1_phi(&mesh);
    phi.values_mut()[3] = f64::NAN;
    assert!(matches!(
        s.step(&State::initial(phi), None, 1),
        Err(Error::NonFiniteValue { vertex: 3, .. })
    ));
}
