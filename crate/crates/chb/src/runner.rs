//! Trajectories of a resolved configuration with CSV and VTK output.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chb_core::diagnostics::EnergyBreakdown;
use chb_core::mesh::SimplicialMesh;
use chb_core::scheme::{self, RunSummary, State, StepAux, StepRecord, StepSink, Stepper};

use crate::config::Resolved;
use crate::experiments::positive_components;
use crate::output::{fmt_f64, write_vtk, CsvRow, CsvWriter, VtkFields};
use crate::{Error, Result};

/// Relative tolerance of the per-step and cumulative balance checks.
pub const MASS_TOLERANCE: f64 = 1e-11;

/// Steps at which snapshots are written: every `stride` steps, the steps
/// nearest to each requested time, and the last step.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    steps: BTreeSet<usize>,
    stride: usize,
    last: usize,
}

impl Schedule {
    pub fn new(stride: usize, times: &[f64], tau: f64, n_steps: usize) -> Self {
        let steps = times
            .iter()
            .map(|t| ((t / tau).round().max(0.0) as usize).min(n_steps))
            .collect();
        Self {
            steps,
            stride,
            last: n_steps,
        }
    }

    pub fn contains(&self, step: usize) -> bool {
        (self.stride > 0 && step % self.stride == 0) || self.steps.contains(&step) || step == self.last
    }
}

/// Writes `timeseries.csv`, `components.csv` and `snapshot_<step>.vtk`.
pub struct RunWriter {
    dir: PathBuf,
    mesh: Arc<SimplicialMesh>,
    schedule: Schedule,
    csv: CsvWriter,
    components_csv: CsvWriter,
    initial_masses: (f64, f64),
    pub snapshots: Vec<PathBuf>,
    /// (t, number of positive-φ components) after every step.
    pub components: Vec<(f64, usize)>,
    pub final_energy: f64,
    pub error: Option<Error>,
}

impl RunWriter {
    pub fn new(dir: &Path, mesh: Arc<SimplicialMesh>, schedule: Schedule, initial_masses: (f64, f64)) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            mesh,
            schedule,
            csv: CsvWriter::create(&dir.join("timeseries.csv"))?,
            components_csv: CsvWriter::with_header(&dir.join("components.csv"), &["t", "positive_components"])?,
            initial_masses,
            snapshots: Vec::new(),
            components: Vec::new(),
            final_energy: f64::NAN,
            error: None,
        })
    }

    fn keep<T>(&mut self, r: Result<T>) {
        if let Err(e) = r {
            log::error!("{e}");
            self.error.get_or_insert(e);
        }
    }

    fn snapshot(&mut self, step: usize, state: &State, aux: Option<&StepAux>) {
        let path = self.dir.join(format!("snapshot_{step:06}.vtk"));
        let mut fields = VtkFields::default().scalar("phi", &state.phi).scalar("theta", &state.theta);
        if let Some(a) = aux {
            fields = fields.scalar("mu", &a.mu).scalar("p", &a.p);
        }
        let fields = fields.vector("u", &state.u);
        let r = write_vtk(&self.mesh, &fields, &format!("t = {}", fmt_f64(state.t)), &path);
        if r.is_ok() {
            self.snapshots.push(path);
        }
        self.keep(r);
    }

    fn components(&mut self, state: &State) {
        let n = positive_components(&state.phi);
        self.components.push((state.t, n));
        let r = self.components_csv.raw([fmt_f64(state.t), n.to_string()]);
        self.keep(r);
    }

    pub fn finish(&mut self) -> Result<()> {
        self.csv.flush()?;
        self.components_csv.flush()?;
        match self.error.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

impl StepSink for RunWriter {
    fn on_start(&mut self, state: &State, energy: &EnergyBreakdown) {
        let (mp, mt) = self.initial_masses;
        self.final_energy = energy.total;
        let r = self.csv.row(&CsvRow::initial(state.t, *energy, mp, mt));
        self.keep(r);
        self.components(state);
        if self.schedule.contains(0) {
            self.snapshot(0, state, None);
        }
    }

    fn on_step(&mut self, state: &State, aux: &StepAux, record: &StepRecord) {
        self.final_energy = record.energy.total;
        let r = self.csv.row(&CsvRow::from(record));
        self.keep(r);
        self.components(state);
        if self.schedule.contains(record.step) {
            self.snapshot(record.step, state, Some(aux));
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub output_dir: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub components: Vec<(f64, usize)>,
    pub initial: State,
}

impl RunOutcome {
    /// Mass balances within [`MASS_TOLERANCE`] and the energy inequality at
    /// every step.
    pub fn structure_preserved(&self) -> bool {
        self.summary.structure_preserved(MASS_TOLERANCE)
    }

    /// First time at which the positive phase forms a single component.
    pub fn merge_time(&self) -> Option<f64> {
        self.components.iter().find(|(_, n)| *n == 1).map(|(t, _)| *t)
    }
}

pub fn initial_state(r: &Resolved) -> Result<(Arc<SimplicialMesh>, State)> {
    let mesh = Arc::new(SimplicialMesh::unit_square(r.level));
    let phi = r.initial.interpolate(&mesh)?;
    Ok((mesh, State::initial(phi)))
}

/// Runs the trajectory of `r` into `dir`, passing every step also to `extra`.
pub fn run_into(r: &Resolved, dir: &Path, extra: &mut [&mut dyn StepSink]) -> Result<RunOutcome> {
    let (mesh, initial) = initial_state(r)?;
    let mut stepper = Stepper::new(mesh.clone(), r.params.clone(), r.scheme.clone())?;
    let disc = stepper.discretization();
    let masses = (disc.integral(initial.phi.values()), disc.integral(initial.theta.values()));
    let schedule = Schedule::new(r.snapshot_stride, &r.snapshot_times, r.scheme.tau, r.scheme.n_steps());
    let mut writer = RunWriter::new(dir, mesh, schedule, masses)?;
    log::info!(
        "{:?}: level {}, tau {:e}, {} steps into {}",
        r.experiment,
        r.level,
        r.scheme.tau,
        r.scheme.n_steps(),
        dir.display()
    );
    let result = {
        let mut sinks: Vec<&mut dyn StepSink> = vec![&mut writer];
        sinks.extend(extra.iter_mut().map(|s| &mut **s as &mut dyn StepSink));
        scheme::run(initial.clone(), &mut stepper, &mut sinks)
    };
    let finished = writer.finish();
    let summary = result.map_err(|f| Error::Run(f.to_string()))?;
    finished?;
    write_summary(&dir.join("summary.txt"), &summary, writer.final_energy)?;
    let (lu_poro, lu_ch) = stepper.solver_stats();
    log::info!("factorizations: poro-elastic {}, Cahn-Hilliard {}", lu_poro.factorizations, lu_ch.factorizations);
    Ok(RunOutcome {
        summary,
        output_dir: dir.to_path_buf(),
        snapshots: writer.snapshots,
        components: writer.components,
        initial,
    })
}

pub fn run_experiment(r: &Resolved) -> Result<RunOutcome> {
    run_into(r, &r.output_dir, &mut [])
}

pub fn write_summary(path: &Path, s: &RunSummary, final_energy: f64) -> Result<()> {
    let text = format!(
        "steps = {}\n\
         final_time = {}\n\
         initial_energy = {}\n\
         final_energy = {}\n\
         max_step_mass_phi = {:e}\n\
         max_step_mass_theta = {:e}\n\
         cumulative_mass_phi = {:e}\n\
         cumulative_mass_theta = {:e}\n\
         worst_energy_ratio = {:e}\n\
         worst_energy_increase = {:e}\n\
         max_newton_iters = {}\n\
         h4_over_tau = {:e}\n\
         structure_preserved = {}\n",
        s.steps,
        fmt_f64(s.final_state.t),
        fmt_f64(s.initial_energy.total),
        fmt_f64(final_energy),
        s.max_step_mass_phi,
        s.max_step_mass_theta,
        s.cumulative_mass_phi,
        s.cumulative_mass_theta,
        s.worst_energy_ratio,
        s.worst_energy_increase,
        s.max_newton_iters,
        s.uniqueness_ratio,
        s.structure_preserved(MASS_TOLERANCE),
    );
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
