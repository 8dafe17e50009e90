use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chb::config::{ExperimentConfig, Resolved};
use chb::convergence::{parse_levels, run_convergence};
use chb::experiments::defaults;
use chb::{chl, output_root, runner, Error, Result};
use clap::{Parser, Subcommand};

/// Cahn-Hilliard-Biot simulator.
///
/// Outputs go below $CHB_OUTPUT_ROOT (default ./output) unless --output-root
/// is given. The exit code is 0 only if every run preserved the mass balances
/// and the energy inequality.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Overrides $CHB_OUTPUT_ROOT.
    #[arg(long, global = true)]
    output_root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spatial convergence study on the smooth Experiment 1 data.
    Converge {
        /// Coarse levels k of the rows; each row compares level k with k + 1.
        #[arg(long, default_value = "2..5")]
        levels: String,
        #[arg(long, default_value_t = 1e-5)]
        tau: f64,
        /// Final time.
        #[arg(long = "T", default_value_t = 0.01)]
        final_time: f64,
    },
    /// Run the experiment described by a TOML configuration file.
    Run { config: PathBuf },
    /// Run a configuration with and without the fluid energy and compare φ.
    CompareChl { config: PathBuf },
}

fn load(path: &Path, root: &Path) -> Result<(ExperimentConfig, Resolved)> {
    let cfg = ExperimentConfig::load(path)?;
    let resolved = cfg.resolve(root)?;
    Ok((cfg, resolved))
}

fn save_config(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("config.toml");
    std::fs::write(&path, cfg.to_toml()).map_err(|e| Error::io(&path, e))
}

fn converge(levels: &str, tau: f64, final_time: f64, root: &Path) -> Result<bool> {
    let levels = parse_levels(levels)?;
    let params = defaults(chb::config::ExperimentName::Convergence).params;
    let out = run_convergence(&levels, tau, final_time, &params);
    let report = &out.report;
    let dir = root.join("convergence");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    report.write_csv(&dir.join("convergence.csv"))?;
    let table = dir.join("convergence.txt");
    std::fs::write(&table, report.to_string()).map_err(|e| Error::io(&table, e))?;
    print!("{report}");
    if let Some(e) = out.failure {
        return Err(e);
    }
    Ok(report.structure_preserved())
}

fn run(path: &Path, root: &Path) -> Result<bool> {
    let (cfg, r) = load(path, root)?;
    save_config(&cfg, &r.output_dir)?;
    let out = runner::run_experiment(&r)?;
    let s = &out.summary;
    println!(
        "{} steps to t = {}; max mass defects {:.2e} (phi) {:.2e} (theta); worst energy residual/tolerance {:.3}",
        s.steps, s.final_state.t, s.max_step_mass_phi, s.max_step_mass_theta, s.worst_energy_ratio
    );
    if let Some(t) = out.merge_time() {
        println!("positive phase is a single component from t = {t}");
    }
    println!("outputs in {}", out.output_dir.display());
    Ok(out.structure_preserved())
}

fn compare(path: &Path, root: &Path) -> Result<bool> {
    let (cfg, r) = load(path, root)?;
    save_config(&cfg, &r.output_dir)?;
    let c = chl::compare_chb_chl(&r)?;
    println!(
        "max |phi_CHB - phi_CHL| = {:e} at t = {}, {:e} over the run",
        c.final_difference(),
        c.chb.summary.final_state.t,
        c.max_difference()
    );
    println!("outputs in {}", r.output_dir.display());
    Ok(c.structure_preserved())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let root = cli.output_root.unwrap_or_else(output_root);
    let result = match &cli.command {
        Command::Converge {
            levels,
            tau,
            final_time,
        } => converge(levels, *tau, *final_time, &root),
        Command::Run { config } => run(config, &root),
        Command::CompareChl { config } => compare(config, &root),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("structure-preservation checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
