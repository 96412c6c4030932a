use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracphase_core::config::{Experiment, RunConfig};
use fracphase_core::experiments::{
    run_circle, run_coarsening, run_convergence, run_energy_study, save_with, write_circle_csv, write_convergence_csv,
};
use fracphase_core::snapshot::write_snapshot;
use fracphase_core::spectral::BoundaryCondition;
use fracphase_core::{Error, Result};

#[derive(Parser)]
#[command(name = "fracphase", version, about = "Time-fractional Allen-Cahn experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Temporal convergence study (example 1, 2 or 3)
    Converge(Flags),
    /// Long-time modified-energy study on a composite mesh
    Energy(Flags),
    /// Shrinking-circle benchmark
    Circle(Flags),
    /// Coarsening from random initial data
    Coarsen(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// l1, l1cn or l1plus
    #[arg(long)]
    scheme: Option<String>,
    /// Fractional order in (0, 1]; 1 selects the classical derivative
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    theta2: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    /// Number of graded steps (coarsest level for convergence studies)
    #[arg(long = "M")]
    steps: Option<usize>,
    /// Mesh grading exponent
    #[arg(long = "r")]
    grading: Option<f64>,
    /// Final time
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// Uniform step after t = 1
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    /// periodic or neumann
    #[arg(long)]
    bc: Option<String>,
    /// direct, soe or auto
    #[arg(long)]
    history: Option<String>,
    #[arg(long = "soe-tol")]
    soe_tol: Option<f64>,
    /// Regularity exponent of example 2
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Convergence problem: 1, 2 or 3 (self-convergence)
    #[arg(long)]
    example: Option<u32>,
    /// Number of mesh doublings
    #[arg(long)]
    levels: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn into_config(self, experiment: Experiment) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let mut over = RunConfig {
            experiment: Some(experiment),
            alpha: self.alpha,
            eps2: self.eps2,
            theta2: self.theta2,
            c0: self.c0,
            steps: self.steps,
            grading: self.grading,
            horizon: self.horizon,
            dt: self.dt,
            nx: self.nx,
            ny: self.ny,
            soe_tol: self.soe_tol,
            mu: self.mu,
            seed: self.seed,
            out: self.out,
            example: self.example,
            levels: self.levels,
            ..Default::default()
        };
        if let Some(s) = &self.scheme {
            over.set("scheme", s)?;
        }
        if let Some(b) = &self.bc {
            over.bc = Some(
                b.parse::<BoundaryCondition>()
                    .map_err(|_| Error::Config(format!("invalid boundary condition '{b}'")))?,
            );
        }
        if let Some(h) = &self.history {
            over.set("history", h)?;
        }
        Ok(base.merge(over))
    }
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    Ok(dir)
}

fn run(command: Command) -> Result<()> {
    let (experiment, flags) = match command {
        Command::Converge(f) => (Experiment::Converge, f),
        Command::Energy(f) => (Experiment::Energy, f),
        Command::Circle(f) => (Experiment::Circle, f),
        Command::Coarsen(f) => (Experiment::Coarsen, f),
    };
    let cfg = flags.into_config(experiment)?;
    let dir = output_dir(&cfg)?;
    match experiment {
        Experiment::Converge => {
            let spec = cfg.convergence_spec()?;
            let rows = run_convergence(&spec)?;
            let name = format!("converge_ex{}_{}.csv", cfg.example.unwrap_or(1), spec.config.scheme);
            let path = dir.join(name);
            save_with(&path, |w| write_convergence_csv(&rows, w))?;
            for r in &rows {
                let order = r.order.map_or(String::from("-"), |p| format!("{p:.3}"));
                println!("M={:<6} tau={:.3e} error={:.3e} order={order}", r.steps, r.tau, r.error);
            }
            report(&path);
        }
        Experiment::Energy => {
            let spec = cfg.energy_spec()?;
            let rep = run_energy_study(&spec)?;
            let path = dir.join(format!("energy_{}.csv", spec.config.scheme));
            rep.save(&path)?;
            if let (Some(first), Some(last)) = (rep.rows.first(), rep.rows.last()) {
                println!(
                    "{} steps, modified energy {:.6e} -> {:.6e}",
                    last.n, first.modified, last.modified
                );
            }
            report(&path);
        }
        Experiment::Circle => {
            let spec = cfg.circle_spec()?;
            let rows = run_circle(&spec)?;
            let path = dir.join(format!("circle_alpha{}.csv", spec.config.alpha()));
            save_with(&path, |w| write_circle_csv(&rows, w))?;
            let worst = rows
                .iter()
                .filter(|r| (1.0..=25.0).contains(&r.t))
                .map(|r| (r.radius_sq - (64.0 - 2.0 * r.t)).abs())
                .fold(0.0, f64::max);
            println!("max |R^2 - (64 - 2t)| on [1, 25]: {worst:.4}");
            report(&path);
        }
        Experiment::Coarsen => {
            let spec = cfg.coarsen_spec()?;
            let out = run_coarsening(&spec)?;
            let path = dir.join("coarsen_energy.csv");
            out.report.save(&path)?;
            report(&path);
            for (t, field) in &out.snapshots {
                let snap = dir.join(format!("snapshot_t{t:.2}.bin"));
                write_snapshot(field, &snap)?;
                report(&snap);
            }
        }
    }
    Ok(())
}

fn report(path: &Path) {
    println!("wrote {}", path.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::EnergyIncrease { .. } => ExitCode::from(3),
                Error::Config(_) | Error::InvalidParameter(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
