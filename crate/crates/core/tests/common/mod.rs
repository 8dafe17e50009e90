//! Dense brute-force oracles shared by the integration tests and the
//! acceptance harness of the `chb` crate.
#![allow(dead_code)]

use std::sync::Arc;

use chb_core::assembly::{self, QuadratureRule, Weight};
use chb_core::fespace::{DisplacementDofs, ScalarField, VectorField, Voigt};
use chb_core::material::{self, Endpoints, Eigenstrain, Mat3, MaterialParams, Mobility, Source};
use chb_core::mesh::SimplicialMesh;
use chb_core::scheme::{SchemeConfig, State, Stepper};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub type Dense = Vec<Vec<f64>>;

// ---------------------------------------------------------------- linear algebra

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Dense, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        assert!(a[piv][k].abs() > 1e-300, "singular dense system");
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dense_diff(a: &Dense, b: &Dense) -> f64 {
    let scale = a.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(r, s)| max_diff(r, s)).fold(0.0, f64::max) / scale
}

// ---------------------------------------------------------------- geometry

/// Level-0 (2 cells), level-1 (8 cells) and a level-1 mesh with a displaced
/// interior vertex.
pub fn small_meshes() -> Vec<(&'static str, Arc<SimplicialMesh>)> {
    let m1 = SimplicialMesh::unit_square(1);
    let mut v = m1.vertices().to_vec();
    let centre = v.iter().position(|p| p == &[0.5, 0.5]).unwrap();
    v[centre] = [0.55, 0.43];
    let skew = SimplicialMesh::from_parts(v, m1.cells().to_vec(), 1).unwrap();
    vec![
        ("2 cells", Arc::new(SimplicialMesh::unit_square(0))),
        ("8 cells", Arc::new(m1)),
        ("8 skewed cells", Arc::new(skew)),
    ]
}

struct Tri {
    p: [[f64; 2]; 3],
    area: f64,
    grad: [[f64; 2]; 3],
}

fn tri(mesh: &SimplicialMesh, k: usize) -> Tri {
    let c = mesh.cells()[k];
    let p = [mesh.vertices()[c[0]], mesh.vertices()[c[1]], mesh.vertices()[c[2]]];
    let (a, b) = ([p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]);
    let det = a[0] * b[1] - a[1] * b[0];
    // Rows of the inverse Jacobian are the gradients of λ1, λ2.
    let g1 = [b[1] / det, -a[1] / det];
    let g2 = [-b[0] / det, a[0] / det];
    Tri {
        p,
        area: 0.5 * det.abs(),
        grad: [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2],
    }
}

/// Gauss-Legendre nodes on [0, 1] by Newton iteration on P_n.
fn gauss01(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Collapsed 8×8 Gauss rule: barycentric points, weights summing to one.
fn oracle_rule() -> Vec<([f64; 3], f64)> {
    let g = gauss01(8);
    let mut out = Vec::new();
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            let (x, y) = (u, v * (1.0 - u));
            out.push(([1.0 - x - y, x, y], 2.0 * wu * wv * (1.0 - u)));
        }
    }
    out
}

fn at(t: &Tri, b: &[f64; 3]) -> [f64; 2] {
    [
        b[0] * t.p[0][0] + b[1] * t.p[1][0] + b[2] * t.p[2][0],
        b[0] * t.p[0][1] + b[1] * t.p[1][1] + b[2] * t.p[2][1],
    ]
}

/// Voigt strain of the basis function ψ_a e_i.
fn basis_strain(g: &[f64; 2], i: usize) -> Voigt {
    if i == 0 {
        [g[0], 0.0, g[1]]
    } else {
        [0.0, g[1], g[0]]
    }
}

fn dot3(a: &Voigt, b: &Voigt) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mat_vec(m: &Mat3, v: &Voigt) -> Voigt {
    std::array::from_fn(|r| dot3(&m[r], v))
}

// ---------------------------------------------------------------- assembly oracles

fn weight_fn(x: f64, y: f64) -> f64 {
    1.0 + x * x - 0.5 * x * y + 0.3 * y
}

fn voigt_fn(x: f64, y: f64) -> Voigt {
    [1.0 + x * y, 0.5 - y * y, 0.2 * x + y]
}

fn density_fn(x: f64, y: f64) -> f64 {
    x * x * x * y * y - 2.0 * x * y * y * y + 0.7 * x * x - y + 0.1
}

fn per_point<T>(mesh: &SimplicialMesh, rule: &QuadratureRule, f: impl Fn(f64, f64) -> T) -> Vec<T> {
    assembly::quadrature_points(mesh, rule).iter().map(|p| f(p[0], p[1])).collect()
}

/// Largest relative entry error of every assembly operator against dense
/// quadrature loops on meshes of at most 8 cells.
pub fn assembly_errors(seed: u64) -> Vec<(String, f64)> {
    let rule = QuadratureRule::for_degree(6);
    let orule = oracle_rule();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (name, mesh) in small_meshes() {
        let nv = mesh.n_vertices();
        let dofs = DisplacementDofs::interior(&mesh);
        let nu = dofs.len();
        let cells = mesh.n_cells();
        let cell_w: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.5..2.0)).collect();
        let cell_c: Vec<Mat3> = (0..cells)
            .map(|_| std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))))
            .collect();
        let cell_s: Vec<Voigt> = (0..cells).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
        let force = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let pp_w = per_point(&mesh, &rule, weight_fn);
        let pp_s = per_point(&mesh, &rule, voigt_fn);
        let pp_d = per_point(&mesh, &rule, density_fn);

        let mut mass = [vec![vec![0.0; nv]; nv], vec![vec![0.0; nv]; nv], vec![vec![0.0; nv]; nv]];
        let mut stiff = mass.clone();
        let mut elast = vec![vec![0.0; nu]; nu];
        let mut coupling = vec![vec![0.0; nu]; nv];
        let mut div = vec![vec![0.0; nu]; nv];
        let mut load = vec![0.0; nv];
        let mut body = vec![0.0; nu];
        let mut sload = vec![0.0; nu];
        let mut total = 0.0;
        for k in 0..cells {
            let t = tri(&mesh, k);
            let c = mesh.cells()[k];
            for (b, w) in &orule {
                let x = at(&t, b);
                let dx = t.area * w;
                let weights = [1.7, cell_w[k], weight_fn(x[0], x[1])];
                let dens = density_fn(x[0], x[1]);
                let s = voigt_fn(x[0], x[1]);
                total += dx * dens;
                for a in 0..3 {
                    load[c[a]] += dx * dens * b[a];
                    for bb in 0..3 {
                        let gg = t.grad[a][0] * t.grad[bb][0] + t.grad[a][1] * t.grad[bb][1];
                        for (i, wt) in weights.iter().enumerate() {
                            mass[i][c[a]][c[bb]] += dx * wt * b[a] * b[bb];
                            stiff[i][c[a]][c[bb]] += dx * wt * gg;
                        }
                    }
                    for bb in 0..3 {
                        let Some(d) = dofs.dof(c[bb]) else { continue };
                        for j in 0..2 {
                            let e = basis_strain(&t.grad[bb], j);
                            coupling[c[a]][d + j] += dx * b[a] * dot3(&s, &e);
                            div[c[a]][d + j] += dx * weights[2] * b[a] * (e[0] + e[1]);
                        }
                    }
                    let Some(da) = dofs.dof(c[a]) else { continue };
                    for i in 0..2 {
                        let ea = basis_strain(&t.grad[a], i);
                        body[da + i] += dx * force[i] * b[a];
                        sload[da + i] += dx * dot3(&cell_s[k], &ea);
                        for bb in 0..3 {
                            let Some(db) = dofs.dof(c[bb]) else { continue };
                            for j in 0..2 {
                                let eb = basis_strain(&t.grad[bb], j);
                                elast[da + i][db + j] += dx * dot3(&mat_vec(&cell_c[k], &eb), &ea);
                            }
                        }
                    }
                }
            }
        }
        let weights = [Weight::Constant(1.7), Weight::PerCell(&cell_w), Weight::PerPoint(&pp_w)];
        let kinds = ["constant", "per-cell", "per-point"];
        for i in 0..3 {
            let m = assembly::assemble_mass(&mesh, &rule, weights[i]).to_dense();
            let s = assembly::assemble_stiffness(&mesh, &rule, weights[i]).to_dense();
            out.push((format!("mass ({}, {name})", kinds[i]), dense_diff(&mass[i], &m)));
            out.push((format!("stiffness ({}, {name})", kinds[i]), dense_diff(&stiff[i], &s)));
        }
        if nu > 0 {
            let e = assembly::assemble_elasticity(&mesh, &dofs, &cell_c).to_dense();
            out.push((format!("elasticity ({name})"), dense_diff(&elast, &e)));
            let c = assembly::assemble_strain_coupling(&mesh, &rule, &dofs, &pp_s).to_dense();
            out.push((format!("strain coupling ({name})"), dense_diff(&coupling, &c)));
            let d = assembly::assemble_div_coupling(&mesh, &rule, &dofs, Weight::PerPoint(&pp_w)).to_dense();
            out.push((format!("divergence coupling ({name})"), dense_diff(&div, &d)));
            let f = assembly::assemble_body_force(&mesh, &dofs, force);
            out.push((format!("body force ({name})"), dense_diff(&vec![body], &vec![f])));
            let s = assembly::assemble_strain_load(&mesh, &dofs, &cell_s);
            out.push((format!("strain load ({name})"), dense_diff(&vec![sload], &vec![s])));
        }
        let l = assembly::assemble_load(&mesh, &rule, &pp_d);
        out.push((format!("load ({name})"), dense_diff(&vec![load.clone()], &vec![l])));
        let l = assembly::assemble_load_fn(&mesh, &rule, density_fn);
        out.push((format!("load from function ({name})"), dense_diff(&vec![load], &vec![l])));
        let i = assembly::integrate_density(&mesh, &rule, &pp_d);
        out.push((format!("integral ({name})"), (i - total).abs() / total.abs().max(1.0)));
    }
    out
}

// ---------------------------------------------------------------- derivative oracles

pub fn tumour_params() -> MaterialParams {
    MaterialParams {
        stiffness: Endpoints::new(
            [[6.0, 4.0, 0.0], [4.0, 6.0, 0.0], [0.0, 0.0, 1.0]],
            [[1.55, 0.38, 0.0], [0.38, 1.55, 0.0], [0.0, 0.0, 0.58]],
        ),
        viscosity: Endpoints::constant([[0.0; 3]; 3]),
        eigenstrain: Eigenstrain::half_shifted(0.3),
        mobility: Mobility::Degenerate {
            floor: 1e-14,
            scale: 1.0 / 16.0,
        },
        phase_source: Source::Logistic { rate: 2.5 },
        ..MaterialParams::default()
    }
}

fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-5 * x.abs().max(1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn rel(analytic: f64, fd: f64) -> f64 {
    (analytic - fd).abs() / analytic.abs().max(1e-6)
}

/// Largest relative discrepancy between each analytic derivative of the
/// reduced energy (and of its time average) and a central difference, over
/// `n` random points for the default and the tumour parameter sets.
pub fn derivative_errors(n: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = vec![
        ("psi'", 0.0f64),
        ("W_phi", 0.0),
        ("W_phiphi", 0.0),
        ("W_strain", 0.0),
        ("W_theta", 0.0),
        ("W_phi_strain", 0.0),
        ("W_phi_theta", 0.0),
        ("avg W_phi", 0.0),
        ("d avg W_phi / d phi_new", 0.0),
        ("d avg W_phi / d (strain, theta)", 0.0),
    ];
    let sets = [MaterialParams::default(), tumour_params()];
    let rule = material::TimeRule::new(5);
    for i in 0..n {
        let p = &sets[i % 2];
        // Keep clear of the kinks of π at ±1 by more than the difference step.
        let draw = |rng: &mut StdRng| loop {
            let v: f64 = rng.gen_range(-1.4..1.4);
            if (v.abs() - 1.0).abs() > 1e-3 {
                break v;
            }
        };
        let phi = draw(&mut rng);
        let phi_new = draw(&mut rng);
        let e: Voigt = std::array::from_fn(|_| rng.gen_range(-0.5..0.5));
        let th: f64 = rng.gen_range(-0.5..0.5);
        let mut put = |k: usize, v: f64| worst[k].1 = worst[k].1.max(v);

        let dpsi = material::psi_vex_prime(phi) + material::psi_cav_prime(phi);
        put(0, rel(dpsi, central(material::psi, phi)));
        put(1, rel(p.wtilde_phi(phi, &e, th), central(|f| p.reduced_energy(f, &e, th), phi)));
        put(2, rel(p.wtilde_phiphi(phi, &e, th), central(|f| p.wtilde_phi(f, &e, th), phi)));
        let ws = p.wtilde_strain(phi, &e, th);
        let wps = p.wtilde_phi_strain(phi, &e, th);
        let (mix_e, mix_t) = p.time_avg_mixed(phi, phi_new, &e, th, &rule);
        for k in 0..3 {
            let shift = |v: f64| {
                let mut e2 = e;
                e2[k] = v;
                e2
            };
            put(3, rel(ws[k], central(|v| p.reduced_energy(phi, &shift(v), th), e[k])));
            put(5, rel(wps[k], central(|v| p.wtilde_phi(phi, &shift(v), th), e[k])));
            let fd = central(|v| p.time_avg_wtilde_phi(phi, phi_new, &shift(v), th, 5), e[k]);
            put(9, rel(mix_e[k], fd));
        }
        put(4, rel(p.wtilde_theta(phi, &e, th), central(|t| p.reduced_energy(phi, &e, t), th)));
        put(6, rel(p.wtilde_phi_theta(phi, &e, th), central(|t| p.wtilde_phi(phi, &e, t), th)));
        put(9, rel(mix_t, central(|t| p.time_avg_wtilde_phi(phi, phi_new, &e, t, 5), th)));
        // The average times the increment is the increment of W̃.
        let avg = p.time_avg_wtilde_phi(phi, phi_new, &e, th, 5);
        let inc = p.reduced_energy(phi_new, &e, th) - p.reduced_energy(phi, &e, th);
        put(7, (avg * (phi_new - phi) - inc).abs() / inc.abs().max(1e-6));
        let dnew = p.time_avg_wtilde_phi_dnew(phi, phi_new, &e, th, 5);
        put(8, rel(dnew, central(|f| p.time_avg_wtilde_phi(phi, f, &e, th, 5), phi_new)));
    }
    worst
}

/// Error of the 4-point Gauss time average on random degree-5 polynomials,
/// relative to the exact average (G(b) − G(a))/(b − a).
pub fn gauss4_degree5_error(trials: usize, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let c: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let a: f64 = rng.gen_range(-2.0..2.0);
        let b: f64 = rng.gen_range(-2.0..2.0);
        let g = |x: f64| c.iter().rev().fold(0.0, |s, ci| s * x + ci);
        let prim = |x: f64| (0..6).rev().fold(0.0, |s, k| s * x + c[k] / (k + 1) as f64) * x;
        let exact = (prim(b) - prim(a)) / (b - a);
        let got = material::time_average(a, b, 4, g);
        let scale = c.iter().map(|v| v.abs()).sum::<f64>() * a.abs().max(b.abs()).max(1.0).powi(5);
        worst = worst.max((got - exact).abs() / scale);
    }
    worst
}

// ---------------------------------------------------------------- scheme oracles

/// Dense residual of the fully coupled step for (u, θ, p, φ, μ), written
/// pointwise from the variational equations with the library volume rule.
pub struct DenseProblem {
    pub mesh: Arc<SimplicialMesh>,
    pub params: MaterialParams,
    pub tau: f64,
    pub old: State,
    dofs: DisplacementDofs,
    rule: QuadratureRule,
}

impl DenseProblem {
    pub fn new(mesh: Arc<SimplicialMesh>, params: MaterialParams, tau: f64, old: State) -> Self {
        let dofs = DisplacementDofs::interior(&mesh);
        Self {
            mesh,
            params,
            tau,
            old,
            dofs,
            rule: QuadratureRule::for_degree(6),
        }
    }

    /// Random state with |φ| < 0.9, interior displacement and fluid content.
    pub fn random_state(mesh: &Arc<SimplicialMesh>, rng: &mut StdRng) -> State {
        let nv = mesh.n_vertices();
        let phi = ScalarField::new(mesh.clone(), (0..nv).map(|_| rng.gen_range(-0.9..0.9)).collect()).unwrap();
        let theta = ScalarField::new(mesh.clone(), (0..nv).map(|_| rng.gen_range(-0.1..0.1)).collect()).unwrap();
        let mut u: Vec<[f64; 2]> = (0..nv).map(|_| [rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01)]).collect();
        for (v, b) in u.iter_mut().zip(mesh.boundary_mask()) {
            if *b {
                *v = [0.0, 0.0];
            }
        }
        State {
            t: 0.0,
            phi,
            u: VectorField::new(mesh.clone(), u).unwrap(),
            theta,
        }
    }

    pub fn n_u(&self) -> usize {
        self.dofs.len()
    }

    pub fn len(&self) -> usize {
        self.n_u() + 4 * self.mesh.n_vertices()
    }

    fn strain(&self, k: usize, t: &Tri, u: &[f64]) -> Voigt {
        let c = self.mesh.cells()[k];
        let mut e = [0.0; 3];
        for a in 0..3 {
            if let Some(d) = self.dofs.dof(c[a]) {
                for i in 0..2 {
                    let s = basis_strain(&t.grad[a], i);
                    (0..3).for_each(|r| e[r] += u[d + i] * s[r]);
                }
            }
        }
        e
    }

    /// Residual of all five equations; `x` is (u, θ, p, φ, μ).
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let (nu, nv) = (self.n_u(), self.mesh.n_vertices());
        let (u, rest) = x.split_at(nu);
        let (theta, rest) = rest.split_at(nv);
        let (p, rest) = rest.split_at(nv);
        let (phi, mu) = rest.split_at(nv);
        let u_old = self.dofs.gather(&self.old.u);
        let (phi0, theta0) = (self.old.phi.values(), self.old.theta.values());
        let tau = self.tau;
        let pm = &self.params;
        let mut r = vec![0.0; x.len()];
        let (o_th, o_p, o_phi, o_mu) = (nu, nu + nv, nu + 2 * nv, nu + 3 * nv);
        for k in 0..self.mesh.n_cells() {
            let t = tri(&self.mesh, k);
            let c = self.mesh.cells()[k];
            let e = self.strain(k, &t, u);
            let e0 = self.strain(k, &t, &u_old);
            let grad = |f: &[f64]| -> [f64; 2] {
                let mut g = [0.0; 2];
                for a in 0..3 {
                    g[0] += f[c[a]] * t.grad[a][0];
                    g[1] += f[c[a]] * t.grad[a][1];
                }
                g
            };
            let (gp, gphi, gmu) = (grad(p), grad(phi), grad(mu));
            for (b, w) in self.rule.points().iter().zip(self.rule.weights()) {
                let dx = t.area * w;
                let val = |f: &[f64]| b[0] * f[c[0]] + b[1] * f[c[1]] + b[2] * f[c[2]];
                let (f0, f1, th0, th, pq, mq) = (val(phi0), val(phi), val(theta0), val(theta), val(p), val(mu));
                let co = pm.coeffs_at(f0);
                let de: Voigt = std::array::from_fn(|i| (e[i] - e0[i]) / tau);
                let stress = pm.wtilde_strain(f0, &e, th);
                let visc = mat_vec(&co.viscosity, &de);
                let (rq, sq) = (pm.phase_source.eval(f0, &e, th), pm.fluid_source.eval(f0, &e0, th0));
                let chem = material::psi_vex_prime(f1)
                    + material::psi_cav_prime(f0)
                    + pm.time_avg_wtilde_phi(f0, f1, &e, th, 5);
                let (wth, mob) = (pm.wtilde_theta(f0, &e, th), pm.mobility_at(f0));
                for a in 0..3 {
                    let (i, g) = (c[a], t.grad[a]);
                    let dot = |v: [f64; 2]| v[0] * g[0] + v[1] * g[1];
                    r[o_th + i] += dx * ((th - th0) / tau * b[a] + co.kappa * dot(gp) - sq * b[a]);
                    r[o_p + i] += dx * (pq - wth) * b[a];
                    r[o_phi + i] += dx * ((f1 - f0) / tau * b[a] + mob * dot(gmu) - rq * b[a]);
                    r[o_mu + i] += dx * ((mq - chem) * b[a] - pm.gamma * dot(gphi));
                    if let Some(d) = self.dofs.dof(i) {
                        for j in 0..2 {
                            let ev = basis_strain(&g, j);
                            r[d + j] += dx * (dot3(&visc, &ev) + dot3(&stress, &ev) - pm.body_force[j] * b[a]);
                        }
                    }
                }
            }
        }
        r
    }

    /// Dense central-difference Jacobian.
    fn jacobian(&self, x: &[f64]) -> Dense {
        let n = x.len();
        let mut jt = Vec::with_capacity(n);
        let mut y = x.to_vec();
        for j in 0..n {
            let h = 1e-6 * x[j].abs().max(1.0);
            y[j] = x[j] + h;
            let rp = self.residual(&y);
            y[j] = x[j] - h;
            let rm = self.residual(&y);
            y[j] = x[j];
            jt.push(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
        }
        (0..n).map(|i| (0..n).map(|j| jt[j][i]).collect()).collect()
    }

    pub fn initial_guess(&self) -> Vec<f64> {
        let mut x = self.dofs.gather(&self.old.u);
        x.extend_from_slice(self.old.theta.values());
        x.extend(std::iter::repeat(0.0).take(self.mesh.n_vertices()));
        x.extend_from_slice(self.old.phi.values());
        x.extend(std::iter::repeat(0.0).take(self.mesh.n_vertices()));
        x
    }

    /// Damped Newton on the dense system until ‖R‖∞ ≤ 1e-13.
    pub fn newton(&self) -> Vec<f64> {
        let mut x = self.initial_guess();
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut res = norm(&self.residual(&x));
        for _ in 0..60 {
            if res <= 1e-13 {
                return x;
            }
            let r = self.residual(&x);
            let dx = dense_solve(self.jacobian(&x), r.iter().map(|v| -v).collect());
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
                let tres = norm(&self.residual(&trial));
                if tres < res || lambda < 1e-3 {
                    x = trial;
                    res = tres;
                    break;
                }
                lambda *= 0.5;
            }
        }
        panic!("dense Newton stalled at {res:e}");
    }

    /// The poro-elastic block alone: (u, θ, p) with φ frozen at φⁿ. The
    /// equations are affine, so the columns of the residual difference give
    /// the exact matrix.
    pub fn linear_poro(&self) -> Vec<f64> {
        let (nu, nv) = (self.n_u(), self.mesh.n_vertices());
        let n = nu + 2 * nv;
        let mut x = self.initial_guess();
        x.iter_mut().take(n).for_each(|v| *v = 0.0);
        let r0 = self.residual(&x);
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            x[j] = 1.0;
            let r = self.residual(&x);
            x[j] = 0.0;
            cols.push(r.iter().zip(&r0).take(n).map(|(a, b)| a - b).collect::<Vec<f64>>());
        }
        let a: Dense = (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect();
        dense_solve(a, r0.iter().take(n).map(|v| -v).collect())
    }

    pub fn stepper(&self) -> Stepper {
        let config = SchemeConfig {
            tau: self.tau,
            final_time: self.tau,
            ..SchemeConfig::default()
        };
        Stepper::new(self.mesh.clone(), self.params.clone(), config).unwrap()
    }
}

/// Splitting step against the dense Newton oracle, and the poro-elastic step
/// against the dense linear oracle, on the 2- and 8-cell meshes.
/// Returns the largest nodal discrepancy of each.
pub fn dense_scheme_errors(seed: u64) -> (f64, f64) {
    let mut rng = StdRng::seed_from_u64(seed);
    let (mut newton, mut linear) = (0.0f64, 0.0f64);
    for (_, mesh) in small_meshes() {
        for params in [MaterialParams::default(), tumour_params()] {
            let old = DenseProblem::random_state(&mesh, &mut rng);
            let prob = DenseProblem::new(mesh.clone(), params, 1e-3, old);
            let mut stepper = prob.stepper();
            let (nu, nv) = (prob.n_u(), mesh.n_vertices());

            let lin = prob.linear_poro();
            let (u, theta, p) = stepper.poroelastic_step(&prob.old).unwrap();
            let dofs = DisplacementDofs::interior(&mesh);
            let mut got = dofs.gather(&u);
            got.extend_from_slice(theta.values());
            got.extend_from_slice(p.values());
            linear = linear.max(max_diff(&lin, &got) / lin.iter().fold(1.0f64, |m, v| m.max(v.abs())));

            let x = prob.newton();
            let out = stepper.step(&prob.old, None, 1).unwrap();
            let mut got = dofs.gather(&out.state.u);
            got.extend_from_slice(out.state.theta.values());
            got.extend_from_slice(out.aux.p.values());
            got.extend_from_slice(out.state.phi.values());
            got.extend_from_slice(out.aux.mu.values());
            assert_eq!(got.len(), nu + 4 * nv);
            newton = newton.max(max_diff(&x, &got) / x.iter().fold(1.0f64, |m, v| m.max(v.abs())));
        }
    }
    (newton, linear)
}
