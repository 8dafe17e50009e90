//! Spatial convergence study against uniformly refined meshes.

use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use chb_core::assembly::{self, QuadratureRule, Weight};
use chb_core::fespace::{prolong, prolong_vector, strain, ScalarField, VectorField};
use chb_core::material::MaterialParams;
use chb_core::mesh::SimplicialMesh;
use chb_core::scheme::{self, SchemeConfig, State, StepAux, Stepper};

use crate::experiments::convergence_initial;
use crate::output::{fmt_f64, CsvWriter};
use crate::runner::MASS_TOLERANCE;
use crate::{Error, Result};

/// Squared difference norms between a level and its refinement.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorSet {
    /// Sum of all five parts.
    pub total: f64,
    /// ‖φ_h − φ_{h/2}‖²_{H¹}.
    pub phi: f64,
    pub mu: f64,
    /// ‖ℰ(u_h) − ℰ(u_{h/2})‖²_{L²}.
    pub u: f64,
    pub theta: f64,
    pub p: f64,
}

impl ErrorSet {
    fn parts(&self) -> [f64; 6] {
        [self.total, self.phi, self.mu, self.u, self.theta, self.p]
    }

    fn from_parts(v: [f64; 6]) -> Self {
        Self {
            total: v[0],
            phi: v[1],
            mu: v[2],
            u: v[3],
            theta: v[4],
            p: v[5],
        }
    }

    /// log₂(coarser/self), part by part.
    pub fn eoc_from(&self, coarser: &ErrorSet) -> ErrorSet {
        let (a, b) = (coarser.parts(), self.parts());
        Self::from_parts(std::array::from_fn(|i| eoc(a[i], b[i])))
    }
}

pub fn eoc(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// The coarse level of the pair (k, k + 1).
    pub k: usize,
    pub errors: ErrorSet,
    /// `None` on the first row.
    pub eoc: Option<ErrorSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRun {
    pub level: usize,
    pub steps: usize,
    pub structure_preserved: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceReport {
    pub tau: f64,
    pub final_time: f64,
    pub rows: Vec<ConvergenceRow>,
    pub runs: Vec<LevelRun>,
}

impl ConvergenceReport {
    pub fn finest(&self) -> Option<&ConvergenceRow> {
        self.rows.last()
    }

    pub fn structure_preserved(&self) -> bool {
        self.runs.iter().all(|r| r.structure_preserved)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let header = [
            "k", "e_h", "eoc", "e_phi", "eoc_phi", "e_mu", "eoc_mu", "e_u", "eoc_u", "e_theta", "eoc_theta", "e_p", "eoc_p",
        ];
        let mut w = CsvWriter::with_header(path, &header)?;
        for r in &self.rows {
            let mut f = vec![r.k.to_string()];
            let e = r.errors.parts();
            let o = r.eoc.map(|o| o.parts());
            for i in [0, 1, 2, 3, 4, 5] {
                f.push(fmt_f64(e[i]));
                f.push(o.map_or(String::new(), |o| fmt_f64(o[i])));
            }
            w.raw(&f)?;
        }
        w.flush()
    }
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tau = {:e}, T = {}", self.tau, self.final_time)?;
        writeln!(
            f,
            "{:>3} | {:>9} {:>5} | {:>9} {:>5} | {:>9} {:>5} | {:>9} {:>5} | {:>9} {:>5} | {:>9} {:>5}",
            "k", "e_h", "eoc", "e_phi", "eoc", "e_mu", "eoc", "e_u", "eoc", "e_theta", "eoc", "e_p", "eoc"
        )?;
        for r in &self.rows {
            write!(f, "{:>3}", r.k)?;
            let e = r.errors.parts();
            let o = r.eoc.map(|o| o.parts());
            for i in 0..6 {
                match o {
                    Some(o) => write!(f, " | {:>9.3e} {:>5.2}", e[i], o[i])?,
                    None => write!(f, " | {:>9.3e} {:>5}", e[i], "--")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Final state and auxiliary fields of one Experiment 1 run.
#[derive(Debug, Clone)]
pub struct LevelSolution {
    pub state: State,
    pub aux: StepAux,
}

fn h1_and_l2(mesh: &SimplicialMesh, rule: &QuadratureRule, d: &[f64]) -> (f64, f64) {
    let m = assembly::assemble_mass(mesh, rule, Weight::Constant(1.0));
    let k = assembly::assemble_stiffness(mesh, rule, Weight::Constant(1.0));
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let l2 = dot(d, &m.mul_vec(d));
    (l2 + dot(d, &k.mul_vec(d)), l2)
}

fn diff(fine: &ScalarField, coarse: &ScalarField, mesh: &Arc<SimplicialMesh>) -> Result<Vec<f64>> {
    let c = if Arc::ptr_eq(coarse.mesh(), mesh) { coarse.clone() } else { prolong(coarse, mesh)? };
    Ok(fine.values().iter().zip(c.values()).map(|(a, b)| a - b).collect())
}

/// Squared error norms of `coarse` against `fine`, evaluated on the mesh of
/// `fine` (which must be the uniform refinement of the coarse mesh, or the
/// same mesh). The strain norm is the Frobenius norm of the tensor.
pub fn errors_between(coarse: &LevelSolution, fine: &LevelSolution) -> Result<ErrorSet> {
    let mesh = fine.state.phi.mesh().clone();
    let rule = QuadratureRule::for_degree(2);
    let h1 = |f: &ScalarField, c: &ScalarField| -> Result<f64> { Ok(h1_and_l2(&mesh, &rule, &diff(f, c, &mesh)?).0) };
    let phi = h1(&fine.state.phi, &coarse.state.phi)?;
    let mu = h1(&fine.aux.mu, &coarse.aux.mu)?;
    let p = h1(&fine.aux.p, &coarse.aux.p)?;
    let theta = h1_and_l2(&mesh, &rule, &diff(&fine.state.theta, &coarse.state.theta, &mesh)?).1;
    let uc: VectorField = if Arc::ptr_eq(coarse.state.u.mesh(), &mesh) {
        coarse.state.u.clone()
    } else {
        prolong_vector(&coarse.state.u, &mesh)?
    };
    let (ef, ec) = (strain(&fine.state.u), strain(&uc));
    let u = mesh
        .geometry()
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let d: [f64; 3] = std::array::from_fn(|i| ef.0[k][i] - ec.0[k][i]);
            g.area * (d[0] * d[0] + d[1] * d[1] + 0.5 * d[2] * d[2])
        })
        .sum();
    Ok(ErrorSet {
        total: phi + mu + u + theta + p,
        phi,
        mu,
        u,
        theta,
        p,
    })
}

/// Experiment 1 on `mesh`.
pub fn solve_level(mesh: Arc<SimplicialMesh>, tau: f64, final_time: f64, params: &MaterialParams) -> Result<(LevelSolution, LevelRun)> {
    let start = Instant::now();
    let level = mesh.level();
    let config = SchemeConfig {
        tau,
        final_time,
        ..SchemeConfig::default()
    };
    let mut stepper = Stepper::new(mesh.clone(), params.clone(), config)?;
    let initial = State::initial(convergence_initial().interpolate(&mesh)?);
    let summary = scheme::run(initial, &mut stepper, &mut []).map_err(|f| Error::Run(format!("level {level}: {f}")))?;
    let run = LevelRun {
        level,
        steps: summary.steps,
        structure_preserved: summary.structure_preserved(MASS_TOLERANCE),
        seconds: start.elapsed().as_secs_f64(),
    };
    log::info!(
        "level {level}: {} steps in {:.1} s, structure preserved: {}",
        run.steps,
        run.seconds,
        run.structure_preserved
    );
    let aux = summary
        .final_aux
        .ok_or_else(|| Error::Config("the convergence study needs at least one step".into()))?;
    Ok((
        LevelSolution {
            state: summary.final_state,
            aux,
        },
        run,
    ))
}

/// The report so far and the error that stopped the study, if any.
#[derive(Debug)]
pub struct ConvergenceOutcome {
    pub report: ConvergenceReport,
    pub failure: Option<Error>,
}

/// Rows for every k in `levels` (consecutive), each comparing the solution
/// on level k with the one on level k + 1.
pub fn run_convergence(levels: &[usize], tau: f64, final_time: f64, params: &MaterialParams) -> ConvergenceOutcome {
    let mut report = ConvergenceReport {
        tau,
        final_time,
        ..ConvergenceReport::default()
    };
    if levels.is_empty() || levels.windows(2).any(|w| w[1] != w[0] + 1) {
        let failure = Some(Error::Config(format!("levels must be consecutive and nonempty, got {levels:?}")));
        return ConvergenceOutcome { report, failure };
    }
    let mut previous: Option<LevelSolution> = None;
    // Finer meshes come from red refinement so that coarse fields can be prolonged.
    let mut mesh = Arc::new(SimplicialMesh::unit_square(levels[0]));
    for level in levels[0]..=levels[levels.len() - 1] + 1 {
        if level > levels[0] {
            mesh = Arc::new(mesh.refine_uniform());
        }
        let (sol, run) = match solve_level(mesh.clone(), tau, final_time, params) {
            Ok(v) => v,
            Err(e) => {
                return ConvergenceOutcome {
                    report,
                    failure: Some(e),
                }
            }
        };
        report.runs.push(run);
        if let Some(coarse) = previous.take() {
            let errors = match errors_between(&coarse, &sol) {
                Ok(e) => e,
                Err(e) => {
                    return ConvergenceOutcome {
                        report,
                        failure: Some(e),
                    }
                }
            };
            let eoc = report.rows.last().map(|r| errors.eoc_from(&r.errors));
            report.rows.push(ConvergenceRow {
                k: level - 1,
                errors,
                eoc,
            });
        }
        previous = Some(sol);
    }
    ConvergenceOutcome { report, failure: None }
}

/// Parses `a..b` (inclusive), `a..=b` or a comma-separated list.
pub fn parse_levels(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("cannot read levels from {s:?}"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(bad());
        }
        Ok((a..=b).collect())
    } else {
        s.split(',').map(num).collect()
    }
}
