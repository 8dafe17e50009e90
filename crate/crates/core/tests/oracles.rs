mod common;

#[test]
fn assembled_operators_match_dense_quadrature() {
    let errs = common::assembly_errors(11);
    assert!(errs.len() >= 30);
    for (name, e) in errs {
        assert!(e <= 1e-12, "{name}: {e:e}");
    }
}

#[test]
fn derivatives_match_central_differences() {
    for (name, e) in common::derivative_errors(100, 5) {
        assert!(e <= 1e-6, "{name}: {e:e}");
    }
}

#[test]
fn four_point_gauss_is_exact_for_quintics() {
    let e = common::gauss4_degree5_error(100, 3);
    assert!(e <= 1e-14, "{e:e}");
}

#[test]
fn dense_solver_oracle_is_sound() {
    let a = vec![vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]];
    let x = common::dense_solve(a.clone(), vec![5.0, 3.0, 6.0]);
    for (row, b) in a.iter().zip([5.0, 3.0, 6.0]) {
        let r: f64 = row.iter().zip(&x).map(|(a, x)| a * x).sum();
        assert!((r - b).abs() < 1e-14);
    }
}

#[test]
fn steps_match_dense_oracles() {
    let (newton, linear) = common::dense_scheme_errors(21);
    assert!(linear <= 1e-10, "poro-elastic step vs dense linear solve: {linear:e}");
    assert!(newton <= 1e-9, "splitting step vs dense Newton: {newton:e}");
}

#[test]
fn inverse_laplacian_matches_dense_constrained_solve() {
    use std::sync::Arc;

    use chb_core::diagnostics;
    use chb_core::fespace::interpolate_nodal;
    use chb_core::material::{MaterialParams, Mobility};
    use chb_core::mesh::SimplicialMesh;
    use chb_core::scheme::Discretization;
    use rand::{Rng, SeedableRng};

    let mesh = Arc::new(SimplicialMesh::unit_square(2));
    let disc = Discretization::new(mesh.clone(), 6, 5);
    let n = mesh.n_vertices();
    let mut rng = rand::rngs::StdRng::seed_from_u64(9);
    let degenerate = MaterialParams {
        mobility: Mobility::Degenerate { floor: 1e-3, scale: 1.0 / 16.0 },
        ..MaterialParams::default()
    };
    let phi = interpolate_nodal(mesh.clone(), |x, y| (4.0 * x * y).cos()).unwrap();
    let mass = disc.mass().to_dense();
    let mass_row: Vec<f64> = (0..n).map(|j| (0..n).map(|i| mass[i][j]).sum()).collect();
    for params in [MaterialParams::default(), degenerate] {
        let k_m = diagnostics::mobility_stiffness(&disc, &params, &phi);
        let unit = params.mobility == Mobility::Constant(1.0);
        if unit {
            assert!(common::max_diff(k_m.values(), disc.laplace().values()) < 1e-14);
        }
        let k = k_m.to_dense();
        for _ in 0..5 {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean = disc.integral(&raw) / disc.integral(&vec![1.0; n]);
            let v: Vec<f64> = raw.iter().map(|a| a - mean).collect();
            // [K  M1; (M1)ᵀ 0] [z; λ] = [Mv; 0]
            let mut a: common::Dense = k.iter().zip(&mass_row).map(|(r, m)| {
                let mut r = r.clone();
                r.push(*m);
                r
            }).collect();
            let mut last = mass_row.clone();
            last.push(0.0);
            a.push(last);
            let mut b = disc.mass().mul_vec(&v);
            b.push(0.0);
            let z = common::dense_solve(a, b);
            let got = diagnostics::weighted_inverse_laplacian(&disc, &k_m, &v).unwrap();
            let scale = z.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            assert!(common::max_diff(&z[..n], &got) <= 1e-10 * scale);
            let norm = diagnostics::h_minus1_m_norm_sq(&disc, &k_m, &v).unwrap();
            let dense_norm: f64 = z[..n].iter().zip(&disc.mass().mul_vec(&v)).map(|(a, b)| a * b).sum();
            assert!((norm - dense_norm).abs() <= 1e-10 * dense_norm);
        }
    }
}
