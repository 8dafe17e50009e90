//! Constitutive laws: phase interpolation, coefficients, the double-well
//! potential and its convex-concave split, the reduced energy density `W̃`
//! with its derivatives, time averages along the linear path in φ, and
//! source terms.

use crate::assembly::quadrature::gauss_legendre;
use crate::fespace::{Voigt, VOIGT_IDENTITY};
use alloc::vec::Vec;

use crate::{Error, Result};

/// Symmetric 3×3 matrix acting on Voigt vectors.
pub type Mat3 = [[f64; 3]; 3];

/// Gauss points used for time averages by default. `W̃_φ` is a polynomial of
/// degree 8 in φ on each side of the clamp points of π, so five points
/// integrate it exactly along a linear path.
pub const DEFAULT_TIME_POINTS: usize = 5;

/// Interpolation function π(φ) = ¼(2 + 3φ − φ³), clamped to 0 / 1 outside [−1, 1].
pub fn pi_interp(phi: f64) -> f64 {
    if phi <= -1.0 {
        0.0
    } else if phi >= 1.0 {
        1.0
    } else {
        0.25 * (2.0 + 3.0 * phi - phi * phi * phi)
    }
}

pub fn pi_prime(phi: f64) -> f64 {
    if phi.abs() >= 1.0 {
        0.0
    } else {
        0.75 * (1.0 - phi * phi)
    }
}

pub fn pi_second(phi: f64) -> f64 {
    if phi.abs() >= 1.0 {
        0.0
    } else {
        -1.5 * phi
    }
}

/// Double well Ψ(φ) = ¼(1 − φ²)².
pub fn psi(phi: f64) -> f64 {
    let a = 1.0 - phi * phi;
    0.25 * a * a
}

pub fn psi_vex_prime(phi: f64) -> f64 {
    phi * phi * phi
}

pub fn psi_cav_prime(phi: f64) -> f64 {
    -phi
}

/// Split derivative Ψ'_vex(φ_new) + Ψ'_cav(φ_old).
pub fn psi_terms(phi_new: f64, phi_old: f64) -> f64 {
    psi_vex_prime(phi_new) + psi_cav_prime(phi_old)
}

/// Values of a coefficient in the pure phases φ = −1 and φ = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoints<T> {
    pub minus: T,
    pub plus: T,
}

impl<T: Copy> Endpoints<T> {
    pub const fn new(minus: T, plus: T) -> Self {
        Self { minus, plus }
    }

    pub const fn constant(v: T) -> Self {
        Self { minus: v, plus: v }
    }
}

impl Endpoints<f64> {
    fn at(&self, pi: f64) -> f64 {
        (1.0 - pi) * self.minus + pi * self.plus
    }

    fn jump(&self) -> f64 {
        self.plus - self.minus
    }
}

impl Endpoints<Mat3> {
    fn at(&self, pi: f64) -> Mat3 {
        core::array::from_fn(|i| core::array::from_fn(|j| (1.0 - pi) * self.minus[i][j] + pi * self.plus[i][j]))
    }

    fn jump(&self) -> Mat3 {
        core::array::from_fn(|i| core::array::from_fn(|j| self.plus[i][j] - self.minus[i][j]))
    }
}

/// Eigenstrain 𝒯(φ) = slope·(φ − shift)·I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenstrain {
    pub slope: f64,
    pub shift: f64,
}

impl Eigenstrain {
    pub const NONE: Self = Self { slope: 0.0, shift: 0.0 };

    /// The form ½ζ(φ + 1)·I.
    pub fn half_shifted(zeta: f64) -> Self {
        Self {
            slope: 0.5 * zeta,
            shift: -1.0,
        }
    }

    /// Scalar factor multiplying the identity.
    pub fn scalar(&self, phi: f64) -> f64 {
        self.slope * (phi - self.shift)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mobility {
    Constant(f64),
    /// m(φ) = floor + scale·(φ² − 1)².
    Degenerate { floor: f64, scale: f64 },
}

impl Mobility {
    pub fn eval(&self, phi: f64) -> f64 {
        match *self {
            Mobility::Constant(m) => m,
            Mobility::Degenerate { floor, scale } => {
                let a = phi * phi - 1.0;
                floor + scale * a * a
            }
        }
    }
}

/// A source term; all shipped forms depend on φ only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Zero,
    Constant(f64),
    /// rate·(1 − φ²).
    Logistic { rate: f64 },
}

impl Source {
    pub fn eval(&self, phi: f64, _strain: &Voigt, _theta: f64) -> f64 {
        match *self {
            Source::Zero => 0.0,
            Source::Constant(c) => c,
            Source::Logistic { rate } => rate * (1.0 - phi * phi),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Source::Zero) || matches!(self, Source::Constant(c) if *c == 0.0)
    }
}

/// Coefficients at one value of φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub kappa: f64,
    pub biot_modulus: f64,
    pub alpha: f64,
    pub stiffness: Mat3,
    pub viscosity: Mat3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    /// Interface parameter γ.
    pub gamma: f64,
    pub eigenstrain: Eigenstrain,
    /// Permeability κ.
    pub kappa: Endpoints<f64>,
    /// Compressibility modulus M.
    pub biot_modulus: Endpoints<f64>,
    /// Biot–Willis coefficient α.
    pub alpha: Endpoints<f64>,
    /// Elasticity tensor C.
    pub stiffness: Endpoints<Mat3>,
    /// Viscosity tensor C_ν.
    pub viscosity: Endpoints<Mat3>,
    pub mobility: Mobility,
    /// Phase-field source r.
    pub phase_source: Source,
    /// Fluid source s.
    pub fluid_source: Source,
    pub body_force: [f64; 2],
}

const C_SOFT: Mat3 = [[1.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 2.0]];

impl Default for MaterialParams {
    /// The reference parameter set used for the convergence study.
    fn default() -> Self {
        Self {
            gamma: 1e-4,
            eigenstrain: Eigenstrain { slope: 0.3, shift: 0.0 },
            kappa: Endpoints::new(1.0, 0.1),
            biot_modulus: Endpoints::new(1.0, 0.1),
            alpha: Endpoints::new(1.0, 0.5),
            stiffness: Endpoints::new([[4.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 8.0]], C_SOFT),
            viscosity: Endpoints::constant(C_SOFT),
            mobility: Mobility::Constant(1.0),
            phase_source: Source::Zero,
            fluid_source: Source::Zero,
            body_force: [0.0, 0.0],
        }
    }
}

/// φ-dependent quantities entering `W̃` and their first two derivatives.
#[derive(Debug, Clone, Copy)]
struct Phase {
    c: Mat3,
    dc: Mat3,
    ddc: Mat3,
    m: f64,
    dm: f64,
    ddm: f64,
    a: f64,
    da: f64,
    dda: f64,
    t: f64,
    dt: f64,
}

impl MaterialParams {
    /// Checks the structural assumptions. Violations that the reference
    /// experiments make on purpose (vanishing viscosity, degenerate mobility,
    /// vanishing compressibility modulus) are logged, not rejected.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter("interface parameter must be positive"));
        }
        for c in [self.stiffness.minus, self.stiffness.plus] {
            if !is_symmetric(&c) || !is_positive_definite(&c) {
                return Err(Error::InvalidParameter("stiffness must be symmetric positive definite"));
            }
        }
        for c in [self.viscosity.minus, self.viscosity.plus] {
            if !is_symmetric(&c) || !is_positive_semidefinite(&c) {
                return Err(Error::InvalidParameter("viscosity must be symmetric positive semidefinite"));
            }
            if !is_positive_definite(&c) {
                log::warn!("viscosity tensor is not positive definite");
            }
        }
        for (e, what) in [(self.kappa, "permeability must be positive"), (self.alpha, "Biot-Willis coefficient must be positive")] {
            if !(e.minus > 0.0 && e.plus > 0.0) {
                return Err(Error::InvalidParameter(what));
            }
        }
        let m = self.biot_modulus;
        if m.minus < 0.0 || m.plus < 0.0 {
            return Err(Error::InvalidParameter("compressibility modulus must be nonnegative"));
        }
        if m.minus == 0.0 || m.plus == 0.0 {
            log::warn!("compressibility modulus vanishes: Cahn-Hilliard-Larche limit");
        }
        match self.mobility {
            Mobility::Constant(v) if !(v > 0.0) => {
                return Err(Error::InvalidParameter("mobility must be positive"));
            }
            Mobility::Degenerate { floor, scale } => {
                if !(floor > 0.0) || scale < 0.0 {
                    return Err(Error::InvalidParameter("degenerate mobility needs floor > 0 and scale >= 0"));
                }
                if floor < 1e-8 {
                    log::warn!("mobility floor {floor:e} is at machine scale");
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Parameters of the limit without fluid energy (M ≡ 0).
    pub fn without_fluid_energy(&self) -> Self {
        Self {
            biot_modulus: Endpoints::constant(0.0),
            ..self.clone()
        }
    }

    pub fn coeffs_at(&self, phi: f64) -> Coefficients {
        let p = pi_interp(phi);
        Coefficients {
            kappa: self.kappa.at(p),
            biot_modulus: self.biot_modulus.at(p),
            alpha: self.alpha.at(p),
            stiffness: self.stiffness.at(p),
            viscosity: self.viscosity.at(p),
        }
    }

    pub fn mobility_at(&self, phi: f64) -> f64 {
        self.mobility.eval(phi)
    }

    pub fn eigenstrain_at(&self, phi: f64) -> Voigt {
        let t = self.eigenstrain.scalar(phi);
        [t, t, 0.0]
    }

    /// (r, s) at one point.
    pub fn sources_at(&self, phi: f64, strain: &Voigt, theta: f64) -> (f64, f64) {
        (
            self.phase_source.eval(phi, strain, theta),
            self.fluid_source.eval(phi, strain, theta),
        )
    }

    fn phase(&self, phi: f64) -> Phase {
        let (p, dp, ddp) = (pi_interp(phi), pi_prime(phi), pi_second(phi));
        let jc = self.stiffness.jump();
        let (jm, ja) = (self.biot_modulus.jump(), self.alpha.jump());
        Phase {
            c: self.stiffness.at(p),
            dc: scale3(&jc, dp),
            ddc: scale3(&jc, ddp),
            m: self.biot_modulus.at(p),
            dm: dp * jm,
            ddm: ddp * jm,
            a: self.alpha.at(p),
            da: dp * ja,
            dda: ddp * ja,
            t: self.eigenstrain.scalar(phi),
            dt: self.eigenstrain.slope,
        }
    }

    /// Elastic part W = (ε − 𝒯)ᵀ C (ε − 𝒯).
    pub fn elastic_energy(&self, phi: f64, e: &Voigt) -> f64 {
        let ph = self.phase(phi);
        let d = sub_t(e, ph.t);
        quad(&ph.c, &d)
    }

    /// Fluid part (M/2)(θ − α tr ε)².
    pub fn fluid_energy(&self, phi: f64, e: &Voigt, theta: f64) -> f64 {
        let c = self.coeffs_at(phi);
        let r = theta - c.alpha * (e[0] + e[1]);
        0.5 * c.biot_modulus * r * r
    }

    /// Reduced energy density W̃(φ, ε, θ).
    pub fn reduced_energy(&self, phi: f64, e: &Voigt, theta: f64) -> f64 {
        let ph = self.phase(phi);
        let d = sub_t(e, ph.t);
        let r = theta - ph.a * (e[0] + e[1]);
        quad(&ph.c, &d) + 0.5 * ph.m * r * r
    }

    /// ∂W̃/∂φ.
    pub fn wtilde_phi(&self, phi: f64, e: &Voigt, theta: f64) -> f64 {
        self.phi_derivatives(phi, e, theta).0
    }

    /// ∂²W̃/∂φ².
    pub fn wtilde_phiphi(&self, phi: f64, e: &Voigt, theta: f64) -> f64 {
        self.phi_derivatives(phi, e, theta).1
    }

    /// (W̃_φ, W̃_φφ) from one evaluation of the coefficients.
    fn phi_derivatives(&self, phi: f64, e: &Voigt, theta: f64) -> (f64, f64) {
        let ph = self.phase(phi);
        let d = sub_t(e, ph.t);
        let tr = e[0] + e[1];
        let r = theta - ph.a * tr;
        let dr = -ph.da * tr;
        let ddr = -ph.dda * tr;
        let dtv = [ph.dt, ph.dt, 0.0];
        let first = -2.0 * bilin(&ph.c, &dtv, &d) + quad(&ph.dc, &d) + 0.5 * ph.dm * r * r + ph.m * r * dr;
        let second = 2.0 * quad(&ph.c, &dtv) - 4.0 * bilin(&ph.dc, &dtv, &d)
            + quad(&ph.ddc, &d)
            + 0.5 * ph.ddm * r * r
            + 2.0 * ph.dm * r * dr
            + ph.m * (dr * dr + r * ddr);
        (first, second)
    }

    /// Stress ∂W̃/∂ε = 2C(ε − 𝒯) − Mα(θ − α tr ε)·I, in Voigt form.
    pub fn wtilde_strain(&self, phi: f64, e: &Voigt, theta: f64) -> Voigt {
        let ph = self.phase(phi);
        let d = sub_t(e, ph.t);
        let r = theta - ph.a * (e[0] + e[1]);
        let cd = mat_vec(&ph.c, &d);
        let s = ph.m * ph.a * r;
        [2.0 * cd[0] - s, 2.0 * cd[1] - s, 2.0 * cd[2]]
    }

    /// Pressure ∂W̃/∂θ = M(θ − α tr ε).
    pub fn wtilde_theta(&self, phi: f64, e: &Voigt, theta: f64) -> f64 {
        let ph = self.phase(phi);
        ph.m * (theta - ph.a * (e[0] + e[1]))
    }

    /// ∂²W̃/∂φ∂ε in Voigt form.
    pub fn wtilde_phi_strain(&self, phi: f64, e: &Voigt, theta: f64) -> Voigt {
        let ph = self.phase(phi);
        let d = sub_t(e, ph.t);
        let tr = e[0] + e[1];
        let r = theta - ph.a * tr;
        let dr = -ph.da * tr;
        let ct = mat_vec(&ph.c, &[ph.dt, ph.dt, 0.0]);
        let dcd = mat_vec(&ph.dc, &d);
        let s = -ph.a * ph.dm * r - ph.a * ph.m * dr - ph.da * ph.m * r;
        core::array::from_fn(|i| -2.0 * ct[i] + 2.0 * dcd[i] + s * VOIGT_IDENTITY[i])
    }

    /// ∂²W̃/∂φ∂θ.
    pub fn wtilde_phi_theta(&self, phi: f64, e: &Voigt, theta: f64) -> f64 {
        let ph = self.phase(phi);
        let tr = e[0] + e[1];
        ph.dm * (theta - ph.a * tr) - ph.m * ph.da * tr
    }

    /// Time average ∫₀¹ W̃_φ(φ(s), ε, θ) ds along φ(s) = φ_old + s(φ_new − φ_old).
    pub fn time_avg_wtilde_phi(&self, phi_old: f64, phi_new: f64, e: &Voigt, theta: f64, points: usize) -> f64 {
        self.time_avg_pair(phi_old, phi_new, e, theta, &TimeRule::new(points)).0
    }

    /// Derivative of [`Self::time_avg_wtilde_phi`] with respect to φ_new,
    /// ∫₀¹ s W̃_φφ(φ(s)) ds.
    pub fn time_avg_wtilde_phi_dnew(&self, phi_old: f64, phi_new: f64, e: &Voigt, theta: f64, points: usize) -> f64 {
        self.time_avg_pair(phi_old, phi_new, e, theta, &TimeRule::new(points)).1
    }

    /// The time average and its φ_new-derivative in one sweep of the path.
    pub fn time_avg_pair(&self, phi_old: f64, phi_new: f64, e: &Voigt, theta: f64, rule: &TimeRule) -> (f64, f64) {
        if phi_old == phi_new {
            let (g, dg) = self.phi_derivatives(phi_new, e, theta);
            return (g, 0.5 * dg);
        }
        let (mut avg, mut davg) = (0.0, 0.0);
        rule.for_each_node(phi_old, phi_new, |phi, s, w| {
            let (g, dg) = self.phi_derivatives(phi, e, theta);
            avg += w * g;
            davg += w * s * dg;
        });
        (avg, davg)
    }

    /// Averages of ∂W̃_φ/∂ε and ∂W̃_φ/∂θ along the same path.
    pub fn time_avg_mixed(&self, phi_old: f64, phi_new: f64, e: &Voigt, theta: f64, rule: &TimeRule) -> (Voigt, f64) {
        if phi_old == phi_new {
            return (self.wtilde_phi_strain(phi_new, e, theta), self.wtilde_phi_theta(phi_new, e, theta));
        }
        let (mut de, mut dth) = ([0.0; 3], 0.0);
        rule.for_each_node(phi_old, phi_new, |phi, _, w| {
            let g = self.wtilde_phi_strain(phi, e, theta);
            for k in 0..3 {
                de[k] += w * g[k];
            }
            dth += w * self.wtilde_phi_theta(phi, e, theta);
        });
        (de, dth)
    }
}

/// Gauss–Legendre average of `g(φ(s))` over s ∈ [0, 1], with φ linear from
/// `a` to `b`.
pub fn time_average<F: Fn(f64) -> f64>(a: f64, b: f64, points: usize, g: F) -> f64 {
    let rule = gauss_legendre(points.max(1));
    rule.iter().map(|&(s, w)| w * g(a + s * (b - a))).sum()
}

/// Gauss–Legendre rule for integrals along the linear path between two
/// values of φ.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeRule {
    nodes: Vec<(f64, f64)>,
}

impl TimeRule {
    pub fn new(points: usize) -> Self {
        Self {
            nodes: gauss_legendre(points.max(1)),
        }
    }

    pub fn points(&self) -> usize {
        self.nodes.len()
    }

    /// Calls `f(φ(s), s, weight)` for the nodes of ∫₀¹ … ds. The path is split
    /// where it crosses the clamp points ±1 of π so that every piece has a
    /// polynomial integrand.
    pub fn for_each_node<F: FnMut(f64, f64, f64)>(&self, a: f64, b: f64, mut f: F) {
        let mut breaks = [0.0, 1.0, 1.0, 1.0];
        let mut nb = 1;
        let mut cross: [f64; 2] = [f64::NAN; 2];
        for (i, c) in [-1.0, 1.0].into_iter().enumerate() {
            let s = (c - a) / (b - a);
            if s > 0.0 && s < 1.0 {
                cross[i] = s;
            }
        }
        if cross[0].is_finite() && cross[1].is_finite() && cross[0] > cross[1] {
            cross.swap(0, 1);
        }
        for s in cross {
            if s.is_finite() {
                breaks[nb] = s;
                nb += 1;
            }
        }
        breaks[nb] = 1.0;
        for k in 0..nb {
            let (s0, s1) = (breaks[k], breaks[k + 1]);
            let len = s1 - s0;
            if len <= 0.0 {
                continue;
            }
            for &(x, w) in &self.nodes {
                let s = s0 + x * len;
                f(a + s * (b - a), s, w * len);
            }
        }
    }
}

fn sub_t(e: &Voigt, t: f64) -> Voigt {
    [e[0] - t, e[1] - t, e[2]]
}

pub(crate) fn mat_vec(c: &Mat3, v: &Voigt) -> Voigt {
    core::array::from_fn(|i| c[i][0] * v[0] + c[i][1] * v[1] + c[i][2] * v[2])
}

/// Cᵀv.
pub(crate) fn mat_t_vec(c: &Mat3, v: &Voigt) -> Voigt {
    core::array::from_fn(|i| c[0][i] * v[0] + c[1][i] * v[1] + c[2][i] * v[2])
}

fn bilin(c: &Mat3, a: &Voigt, b: &Voigt) -> f64 {
    let cb = mat_vec(c, b);
    a[0] * cb[0] + a[1] * cb[1] + a[2] * cb[2]
}

fn quad(c: &Mat3, v: &Voigt) -> f64 {
    bilin(c, v, v)
}

fn scale3(c: &Mat3, s: f64) -> Mat3 {
    core::array::from_fn(|i| core::array::from_fn(|j| c[i][j] * s))
}

fn is_symmetric(c: &Mat3) -> bool {
    (0..3).all(|i| (0..3).all(|j| c[i][j] == c[j][i]))
}

fn det2(c: &Mat3, i: usize, j: usize) -> f64 {
    c[i][i] * c[j][j] - c[i][j] * c[j][i]
}

fn det3(c: &Mat3) -> f64 {
    c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
        + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0])
}

fn is_positive_definite(c: &Mat3) -> bool {
    c[0][0] > 0.0 && det2(c, 0, 1) > 0.0 && det3(c) > 0.0
}

fn is_positive_semidefinite(c: &Mat3) -> bool {
    (0..3).all(|i| c[i][i] >= 0.0) && det2(c, 0, 1) >= 0.0 && det2(c, 0, 2) >= 0.0 && det2(c, 1, 2) >= 0.0 && det3(c) >= 0.0
}
