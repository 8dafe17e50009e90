//! Cahn-Hilliard-Biot against Cahn-Hilliard-Larché (M = 0) from the same data.

use std::path::PathBuf;

use chb_core::scheme::{State, StepAux, StepRecord, StepSink};

use crate::config::Resolved;
use crate::output::{fmt_f64, write_vtk, CsvWriter, VtkFields};
use crate::runner::{run_into, RunOutcome, Schedule};
use crate::{Error, Result};

/// φ after every step of the first run.
#[derive(Default)]
struct History(Vec<Vec<f64>>);

impl StepSink for History {
    fn on_start(&mut self, state: &State, _: &chb_core::diagnostics::EnergyBreakdown) {
        self.0.push(state.phi.values().to_vec());
    }

    fn on_step(&mut self, state: &State, _: &StepAux, _: &StepRecord) {
        self.0.push(state.phi.values().to_vec());
    }
}

/// Compares the second run against the stored first one.
struct Difference {
    reference: Vec<Vec<f64>>,
    schedule: Schedule,
    dir: PathBuf,
    csv: CsvWriter,
    /// (t, max nodal |φ_CHB − φ_CHL|) for every step including t = 0.
    series: Vec<(f64, f64)>,
    snapshots: Vec<PathBuf>,
    error: Option<Error>,
}

impl Difference {
    fn record(&mut self, step: usize, state: &State) {
        let Some(reference) = self.reference.get(step) else {
            self.error.get_or_insert(Error::Run(format!("no reference solution at step {step}")));
            return;
        };
        let d: Vec<f64> = reference.iter().zip(state.phi.values()).map(|(a, b)| (a - b).abs()).collect();
        let max = d.iter().fold(0.0f64, |m, v| m.max(*v));
        self.series.push((state.t, max));
        let mut r = self.csv.raw([fmt_f64(state.t), fmt_f64(max)]);
        if r.is_ok() && self.schedule.contains(step) {
            let path = self.dir.join(format!("difference_{step:06}.vtk"));
            let fields = VtkFields::default()
                .values("phi_chb", reference)
                .scalar("phi_chl", &state.phi)
                .values("abs_difference", &d);
            r = write_vtk(state.phi.mesh(), &fields, &format!("t = {}", fmt_f64(state.t)), &path);
            self.snapshots.push(path);
        }
        if let Err(e) = r {
            self.error.get_or_insert(e);
        }
    }
}

impl StepSink for Difference {
    fn on_start(&mut self, state: &State, _: &chb_core::diagnostics::EnergyBreakdown) {
        self.record(0, state);
    }

    fn on_step(&mut self, state: &State, _: &StepAux, record: &StepRecord) {
        self.record(record.step, state);
    }
}

#[derive(Debug)]
pub struct Comparison {
    pub chb: RunOutcome,
    pub chl: RunOutcome,
    /// (t, max nodal |φ_CHB − φ_CHL|) for every step including t = 0.
    pub series: Vec<(f64, f64)>,
    pub snapshots: Vec<PathBuf>,
}

impl Comparison {
    pub fn final_difference(&self) -> f64 {
        self.series.last().map_or(0.0, |s| s.1)
    }

    pub fn max_difference(&self) -> f64 {
        self.series.iter().fold(0.0, |m, s| m.max(s.1))
    }

    pub fn structure_preserved(&self) -> bool {
        self.chb.structure_preserved() && self.chl.structure_preserved()
    }
}

/// Runs `r` with and without the fluid energy into `chb/` and `chl/` below
/// its output directory; writes `difference.csv` and difference snapshots.
pub fn compare_chb_chl(r: &Resolved) -> Result<Comparison> {
    let dir = r.output_dir.clone();
    let mut chb_cfg = r.clone();
    chb_cfg.scheme.chl_mode = false;
    let mut chl_cfg = r.clone();
    chl_cfg.scheme.chl_mode = true;

    let mut history = History::default();
    let chb = run_into(&chb_cfg, &dir.join("chb"), &mut [&mut history])?;
    let schedule = Schedule::new(r.snapshot_stride, &r.snapshot_times, r.scheme.tau, r.scheme.n_steps());
    let mut diff = Difference {
        reference: history.0,
        schedule,
        dir: dir.clone(),
        csv: CsvWriter::with_header(&dir.join("difference.csv"), &["t", "max_abs_difference"])?,
        series: Vec::new(),
        snapshots: Vec::new(),
        error: None,
    };
    let chl = run_into(&chl_cfg, &dir.join("chl"), &mut [&mut diff]);
    diff.csv.flush()?;
    let chl = chl?;
    if let Some(e) = diff.error {
        return Err(e);
    }
    let cmp = Comparison {
        chb,
        chl,
        series: diff.series,
        snapshots: diff.snapshots,
    };
    log::info!(
        "max |phi_CHB - phi_CHL|: {:e} at T, {:e} over time",
        cmp.final_difference(),
        cmp.max_difference()
    );
    Ok(cmp)
}
