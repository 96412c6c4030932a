//! Run configuration: optional settings merged from a `key = value` file and
//! command-line flags, resolved into experiment specs with per-experiment
//! defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::{
    optimal_grading, CircleSpec, CoarsenSpec, CompositeMeshSpec, ConvergenceProblem, ConvergenceSpec, EnergySpec,
    Manufactured,
};
use crate::history::DEFAULT_SOE_TOL;
use crate::scheme::{HistoryMode, SchemeConfig, SchemeKind};
use crate::spectral::BoundaryCondition;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Converge,
    Energy,
    Circle,
    Coarsen,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Converge => "converge",
            Experiment::Energy => "energy",
            Experiment::Circle => "circle",
            Experiment::Coarsen => "coarsen",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "converge" | "convergence" => Ok(Experiment::Converge),
            "energy" | "energy_study" => Ok(Experiment::Energy),
            "circle" => Ok(Experiment::Circle),
            "coarsen" | "coarsening" => Ok(Experiment::Coarsen),
            _ => Err(Error::Config(format!("unknown experiment '{s}'"))),
        }
    }
}

/// Every field is optional; unset fields take the experiment's default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub scheme: Option<SchemeKind>,
    pub alpha: Option<f64>,
    pub eps2: Option<f64>,
    pub theta2: Option<f64>,
    pub c0: Option<f64>,
    pub steps: Option<usize>,
    pub grading: Option<f64>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub bc: Option<BoundaryCondition>,
    pub history: Option<String>,
    pub soe_tol: Option<f64>,
    pub mu: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Convergence problem: 1 and 2 are manufactured, 3 is self-convergence.
    pub example: Option<u32>,
    /// Number of mesh doublings in a convergence study.
    pub levels: Option<usize>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

impl RunConfig {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = Some(value.parse()?),
            "scheme" => self.scheme = Some(value.parse()?),
            "alpha" => self.alpha = Some(parse_value(key, value)?),
            "eps2" => self.eps2 = Some(parse_value(key, value)?),
            "theta2" => self.theta2 = Some(parse_value(key, value)?),
            "c0" | "C0" => self.c0 = Some(parse_value(key, value)?),
            "M" | "steps" => self.steps = Some(parse_value(key, value)?),
            "r" | "grading" => self.grading = Some(parse_value(key, value)?),
            "T" | "horizon" => self.horizon = Some(parse_value(key, value)?),
            "dt" => self.dt = Some(parse_value(key, value)?),
            "nx" => self.nx = Some(parse_value(key, value)?),
            "ny" => self.ny = Some(parse_value(key, value)?),
            "bc" => {
                self.bc = Some(
                    value
                        .parse()
                        .map_err(|_| Error::Config(format!("invalid boundary condition '{value}'")))?,
                )
            }
            "history" => {
                value.parse::<HistoryMode>()?;
                self.history = Some(value.to_string());
            }
            "soe_tol" | "soe-tol" => self.soe_tol = Some(parse_value(key, value)?),
            "mu" => self.mu = Some(parse_value(key, value)?),
            "seed" => self.seed = Some(parse_value(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "example" => self.example = Some(parse_value(key, value)?),
            "levels" => self.levels = Some(parse_value(key, value)?),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(mut self, over: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(
            experiment, scheme, alpha, eps2, theta2, c0, steps, grading, horizon, dt, nx, ny, bc, history, soe_tol, mu,
            seed, out, example, levels
        );
        self
    }

    fn history_mode(&self) -> Result<HistoryMode> {
        let mode = match &self.history {
            Some(h) => h.parse()?,
            None => HistoryMode::Auto,
        };
        Ok(match (mode, self.soe_tol) {
            (HistoryMode::Soe { .. }, Some(tol)) => HistoryMode::Soe { tol },
            (HistoryMode::Soe { .. }, None) => HistoryMode::Soe { tol: DEFAULT_SOE_TOL },
            (m, _) => m,
        })
    }

    fn scheme_config(&self, scheme: SchemeKind, alpha: f64, eps2: f64, c0: f64) -> Result<SchemeConfig> {
        let cfg = SchemeConfig::new(
            self.scheme.unwrap_or(scheme),
            self.alpha.unwrap_or(alpha),
            self.eps2.unwrap_or(eps2),
        )?
        .with_theta2(self.theta2.unwrap_or(0.0))?
        .with_c0(self.c0.unwrap_or(c0))
        .with_history(self.history_mode()?);
        cfg.validate()?;
        Ok(cfg)
    }

    fn square(&self, default: usize) -> Result<(usize, usize)> {
        let nx = self.nx.unwrap_or(default);
        let ny = self.ny.unwrap_or(nx);
        if nx != ny {
            return Err(Error::Config(format!(
                "experiments use square grids, got nx={nx}, ny={ny}"
            )));
        }
        Ok((nx, ny))
    }

    pub fn convergence_spec(&self) -> Result<ConvergenceSpec> {
        let example = self.example.unwrap_or(1);
        let levels = self.levels.unwrap_or(5);
        if levels < 2 {
            return Err(Error::Config("a convergence study needs at least two levels".into()));
        }
        let (problem, config, grading, horizon, nx, m0) = match example {
            1 => {
                if self.bc.is_some_and(|b| b != BoundaryCondition::Periodic) {
                    return Err(Error::Config("example 1 is periodic".into()));
                }
                let cfg = self.scheme_config(SchemeKind::L1Plus, 0.5, 0.1, 0.0)?;
                let problem = ConvergenceProblem::Exact(Manufactured::Smooth);
                (problem, cfg, self.grading.unwrap_or(1.0), 1.0, self.square(16)?.0, 8)
            }
            2 => {
                if self.bc.is_some_and(|b| b != BoundaryCondition::Neumann) {
                    return Err(Error::Config("example 2 uses Neumann conditions".into()));
                }
                let cfg = self.scheme_config(SchemeKind::L1Plus, 0.5, 0.1, 0.0)?;
                let mu = self.mu.unwrap_or(0.5);
                let r = self.grading.unwrap_or(optimal_grading(cfg.scheme, cfg.alpha(), mu));
                let problem = ConvergenceProblem::Exact(Manufactured::Singular { mu });
                (problem, cfg, r, 1.0, self.square(16)?.0, 16)
            }
            3 => {
                if self.bc.is_some_and(|b| b != BoundaryCondition::Neumann) {
                    return Err(Error::Config("example 3 uses Neumann conditions".into()));
                }
                let cfg = self.scheme_config(SchemeKind::L1Cn, 0.5, 0.01, 0.0)?;
                let r = self
                    .grading
                    .unwrap_or(optimal_grading(cfg.scheme, cfg.alpha(), cfg.alpha()));
                (
                    ConvergenceProblem::SelfConvergence,
                    cfg,
                    r,
                    0.01,
                    self.square(32)?.0,
                    16,
                )
            }
            _ => {
                return Err(Error::Config(format!(
                    "unknown convergence example {example} (1, 2 or 3)"
                )))
            }
        };
        let m0 = self.steps.unwrap_or(m0);
        Ok(ConvergenceSpec {
            problem,
            config,
            grading,
            horizon: self.horizon.unwrap_or(horizon),
            levels: (0..levels).map(|k| m0 << k).collect(),
            nx,
        })
    }

    fn composite(&self, steps: usize, grading: f64, dt: f64, horizon: f64) -> CompositeMeshSpec {
        CompositeMeshSpec {
            graded_steps: self.steps.unwrap_or(steps),
            grading: self.grading.unwrap_or(grading),
            t1: 1.0,
            dt: self.dt.unwrap_or(dt),
            horizon: self.horizon.unwrap_or(horizon),
        }
    }

    pub fn energy_spec(&self) -> Result<EnergySpec> {
        let config = self.scheme_config(SchemeKind::L1Cn, 0.6, 0.001, 0.0)?;
        let r = optimal_grading(config.scheme, config.alpha(), config.alpha());
        Ok(EnergySpec {
            mesh: self.composite(100, r, 1.0, 50.0),
            config,
            nx: self.square(64)?.0,
            bc: self.bc.unwrap_or(BoundaryCondition::Neumann),
            tolerance: 1e-10,
        })
    }

    pub fn circle_spec(&self) -> Result<CircleSpec> {
        if self.bc.is_some_and(|b| b != BoundaryCondition::Periodic) {
            return Err(Error::Config("the circle benchmark is periodic".into()));
        }
        let config = self.scheme_config(SchemeKind::L1Cn, 1.0, 1.0, 1000.0)?;
        let alpha = config.alpha();
        let r = optimal_grading(config.scheme, alpha, alpha);
        let steps = if alpha < 0.5 { 1000 } else { 100 };
        Ok(CircleSpec {
            mesh: self.composite(steps, r, 0.01, 30.0),
            config,
            nx: self.square(128)?.0,
            half_width: 32.0,
            radius: 8.0,
            output_interval: 0.5,
        })
    }

    pub fn coarsen_spec(&self) -> Result<CoarsenSpec> {
        let config = self.scheme_config(SchemeKind::L1Plus, 0.5, 0.001, 0.0)?;
        let r = optimal_grading(config.scheme, config.alpha(), config.alpha());
        let mesh = self.composite(100, r, 0.01, 100.0);
        let snapshot_times = [0.0, 5.0, 20.0, 50.0, 100.0]
            .into_iter()
            .filter(|&t| t <= mesh.horizon)
            .chain(std::iter::once(mesh.horizon))
            .fold(Vec::new(), |mut v: Vec<f64>, t| {
                if v.last() != Some(&t) {
                    v.push(t);
                }
                v
            });
        Ok(CoarsenSpec {
            config,
            nx: self.square(128)?.0,
            bc: self.bc.unwrap_or(BoundaryCondition::Neumann),
            seed: self.seed.unwrap_or(0),
            amplitude: 0.1,
            mesh,
            snapshot_times,
            tolerance: 1e-10,
            range_slack: 0.5,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_merge() {
        let file = RunConfig::parse("# study\nscheme = l1cn\nalpha=0.7\nM = 32 # coarse\nbc = neumann\n").unwrap();
        assert_eq!(file.scheme, Some(SchemeKind::L1Cn));
        assert_eq!(file.steps, Some(32));
        let flags = RunConfig {
            alpha: Some(0.4),
            ..Default::default()
        };
        let merged = file.merge(flags);
        assert_eq!(merged.alpha, Some(0.4));
        assert_eq!(merged.scheme, Some(SchemeKind::L1Cn));
        assert_eq!(merged.bc, Some(BoundaryCondition::Neumann));
    }

    #[test]
    fn parse_errors() {
        assert!(RunConfig::parse("alpha 0.5").is_err());
        assert!(RunConfig::parse("alpha = half").is_err());
        assert!(RunConfig::parse("colour = red").is_err());
        assert!(RunConfig::parse("history = lazy").is_err());
    }

    #[test]
    fn convergence_defaults() {
        let spec = RunConfig::default().convergence_spec().unwrap();
        assert_eq!(spec.levels, vec![8, 16, 32, 64, 128]);
        assert_eq!(spec.config.scheme, SchemeKind::L1Plus);
        let cfg = RunConfig {
            example: Some(2),
            scheme: Some(SchemeKind::L1Cn),
            ..Default::default()
        };
        let spec = cfg.convergence_spec().unwrap();
        assert!((spec.grading - 3.0).abs() < 1e-14);
        let bad = RunConfig {
            example: Some(1),
            bc: Some(BoundaryCondition::Neumann),
            ..Default::default()
        };
        assert!(bad.convergence_spec().is_err());
    }

    #[test]
    fn soe_tolerance_is_applied() {
        let cfg = RunConfig {
            history: Some("soe".into()),
            soe_tol: Some(1e-8),
            ..Default::default()
        };
        let spec = cfg.energy_spec().unwrap();
        assert_eq!(spec.config.history, HistoryMode::Soe { tol: 1e-8 });
    }

    #[test]
    fn coarsening_snapshot_times_respect_horizon() {
        let cfg = RunConfig {
            horizon: Some(7.5),
            ..Default::default()
        };
        assert_eq!(cfg.coarsen_spec().unwrap().snapshot_times, vec![0.0, 5.0, 7.5]);
    }
}
