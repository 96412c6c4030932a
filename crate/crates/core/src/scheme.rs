//! Time stepping of the fractional Allen–Cahn equation with a scalar
//! auxiliary variable `R ≈ sqrt(E_θ(φ) + C0)`.
//!
//! Every scheme reduces to the linear problem
//!
//! ```text
//! A φ' + κ (γ, φ') γ = c φ + d Δφ - θ² Δφ̄ - [ρ - κ (γ, φ)] γ + s
//! ```
//!
//! with `A = c I - e Δ`, which is solved by two applications of `A⁻¹` and a
//! scalar elimination of `(γ, φ')`. The solve is carried out for the
//! increment `φ' - φ`, whose right side stays bounded when `R` is small.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::energy::{bulk_energy, modified_energy};
use crate::error::{Error, Result};
use crate::history::{HistoryStore, DEFAULT_SOE_TOL};
use crate::spectral::{inner_unchecked, laplacian, solve_shifted_poisson, Field, SpatialGrid};
use crate::timegrid::{check_alpha, weight_entry, TimeMesh, WeightFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// First order: fully implicit diffusion, kernel at `t_{n+1}`.
    L1,
    /// Crank–Nicolson with the kernel at the half step.
    L1Cn,
    /// Crank–Nicolson with the time-averaged kernel.
    L1Plus,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::L1, SchemeKind::L1Cn, SchemeKind::L1Plus];

    pub fn family(self) -> WeightFamily {
        match self {
            SchemeKind::L1 => WeightFamily::L1,
            SchemeKind::L1Cn => WeightFamily::L1Cn,
            SchemeKind::L1Plus => WeightFamily::L1Plus,
        }
    }

    pub fn is_crank_nicolson(self) -> bool {
        !matches!(self, SchemeKind::L1)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::L1 => "l1",
            SchemeKind::L1Cn => "l1cn",
            SchemeKind::L1Plus => "l1plus",
        }
    }

    /// Expected temporal order on smooth solutions.
    pub fn nominal_order(self, alpha: f64) -> f64 {
        match self {
            SchemeKind::L1 => 1.0,
            SchemeKind::L1Cn => 2.0 - alpha,
            SchemeKind::L1Plus => 2.0,
        }
    }

    /// Grading exponent that restores the nominal order for a `t^regularity` solution.
    pub fn optimal_grading(self, alpha: f64, regularity: f64) -> f64 {
        self.nominal_order(alpha) / regularity
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s
            .to_ascii_lowercase()
            .replace('+', "plus")
            .replace(['-', '_'], "")
            .as_str()
        {
            "l1" => Ok(SchemeKind::L1),
            "l1cn" => Ok(SchemeKind::L1Cn),
            "l1plus" | "l1pluscn" | "l1p" => Ok(SchemeKind::L1Plus),
            _ => Err(Error::Config(format!(
                "unknown scheme '{s}' (expected l1, l1cn or l1plus)"
            ))),
        }
    }
}

/// Order of the time derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeOrder {
    Fractional(f64),
    /// `α = 1`: ordinary first derivative, no memory.
    Classical,
}

impl TimeOrder {
    /// `α = 1` maps to [`TimeOrder::Classical`].
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if alpha == 1.0 {
            Ok(TimeOrder::Classical)
        } else {
            check_alpha(alpha)?;
            Ok(TimeOrder::Fractional(alpha))
        }
    }

    pub fn alpha(self) -> f64 {
        match self {
            TimeOrder::Fractional(a) => a,
            TimeOrder::Classical => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum HistoryMode {
    /// Direct sums up to [`AUTO_DIRECT_MAX_STEPS`] steps, exponential sums beyond.
    #[default]
    Auto,
    Direct,
    Soe {
        tol: f64,
    },
}

pub const AUTO_DIRECT_MAX_STEPS: usize = 2000;

impl FromStr for HistoryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(HistoryMode::Auto),
            "direct" => Ok(HistoryMode::Direct),
            "soe" => Ok(HistoryMode::Soe { tol: DEFAULT_SOE_TOL }),
            _ => Err(Error::Config(format!(
                "unknown history mode '{s}' (expected direct, soe or auto)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    pub order: TimeOrder,
    pub eps2: f64,
    pub theta2: f64,
    pub c0: f64,
    pub history: HistoryMode,
    pub r_floor: f64,
}

impl SchemeConfig {
    pub fn new(scheme: SchemeKind, alpha: f64, eps2: f64) -> Result<Self> {
        let cfg = SchemeConfig {
            scheme,
            order: TimeOrder::from_alpha(alpha)?,
            eps2,
            theta2: 0.0,
            c0: 0.0,
            history: HistoryMode::Auto,
            r_floor: 1e-12,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_theta2(mut self, theta2: f64) -> Result<Self> {
        self.theta2 = theta2;
        self.validate()?;
        Ok(self)
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = c0;
        self
    }

    pub fn with_history(mut self, history: HistoryMode) -> Self {
        self.history = history;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.order.alpha()
    }

    pub fn validate(&self) -> Result<()> {
        if let TimeOrder::Fractional(a) = self.order {
            check_alpha(a)?;
        }
        if !(self.eps2 > 0.0 && self.eps2.is_finite()) {
            return Err(Error::Config(format!("eps2 must be positive, got {}", self.eps2)));
        }
        if !(self.theta2 >= 0.0 && self.theta2 <= self.eps2) {
            return Err(Error::Config(format!(
                "theta2 must lie in [0, eps2 = {}], got {}",
                self.eps2, self.theta2
            )));
        }
        if !self.c0.is_finite() {
            return Err(Error::Config("C0 must be finite".into()));
        }
        if !(self.r_floor > 0.0) {
            return Err(Error::Config(format!("r_floor must be positive, got {}", self.r_floor)));
        }
        if let HistoryMode::Soe { tol } = self.history {
            if !(tol > 0.0 && tol < 1e-2) {
                return Err(Error::Config(format!("SOE tolerance {tol} outside (0, 1e-2)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SchemeState {
    pub n: usize,
    pub phi: Field,
    pub phi_prev: Option<Field>,
    pub r: f64,
    pub r_prev: Option<f64>,
    pub history: HistoryStore,
    pub mesh: Arc<TimeMesh>,
}

impl SchemeState {
    pub fn t(&self) -> f64 {
        self.mesh.t(self.n)
    }

    pub fn is_finished(&self) -> bool {
        self.n >= self.mesh.steps()
    }
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Index of the new time level.
    pub n: usize,
    pub t: f64,
    pub sigma: f64,
    pub residual: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    /// `(local weight / τ) ‖φ^{n+1} - φ^n‖²`, the guaranteed dissipation when θ = 0.
    pub dissipation: f64,
    /// `‖φ^{n+1} - φ^n‖` in the L² norm.
    pub step_change: f64,
}

/// Source term `s(x, y, t)` added to the right side of the field equation.
pub type Source = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

pub struct Solver {
    config: SchemeConfig,
    grid: Arc<SpatialGrid>,
    mesh: Arc<TimeMesh>,
    source: Option<Source>,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver")
            .field("config", &self.config)
            .field("grid", &(self.grid.nx(), self.grid.ny(), self.grid.bc()))
            .field("steps", &self.mesh.steps())
            .field("source", &self.source.is_some())
            .finish()
    }
}

/// Everything a step needs that depends only on the current state.
struct StepSetup {
    tau: f64,
    /// Local weight over τ.
    shift: f64,
    /// Implicit and explicit diffusion coefficients.
    implicit: f64,
    explicit: f64,
    phi_bar: Field,
    r_bar: f64,
    gamma: Field,
    source: Option<Field>,
}

impl Solver {
    pub fn new(config: SchemeConfig, grid: Arc<SpatialGrid>, mesh: Arc<TimeMesh>) -> Result<Self> {
        config.validate()?;
        Ok(Solver {
            config,
            grid,
            mesh,
            source: None,
        })
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = Some(source);
        self
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn mesh(&self) -> &Arc<TimeMesh> {
        &self.mesh
    }

    /// `R⁰ = sqrt(E_θ(φ⁰) + C0)` and an empty history.
    pub fn init_state(&self, phi0: Field) -> Result<SchemeState> {
        if **phi0.grid() != *self.grid {
            return Err(Error::GridMismatch("initial field is not on the solver grid".into()));
        }
        if !phi0.is_finite() {
            return Err(Error::InvalidParameter("initial field is not finite".into()));
        }
        let e = bulk_energy(&phi0, self.config.theta2);
        let radicand = e + self.config.c0;
        if !(radicand > 0.0) {
            return Err(Error::Config(format!(
                "E_theta(phi0) + C0 = {radicand} is not positive; C0 must exceed {}",
                -e
            )));
        }
        let r = radicand.sqrt();
        if r <= self.config.r_floor {
            return Err(Error::AuxiliaryCollapse {
                value: r,
                floor: self.config.r_floor,
            });
        }
        let history = match self.config.order {
            TimeOrder::Classical => HistoryStore::None,
            TimeOrder::Fractional(alpha) => match self.config.history {
                HistoryMode::Direct => HistoryStore::direct(&self.grid, &self.mesh, alpha)?,
                HistoryMode::Soe { tol } => HistoryStore::soe(&self.grid, &self.mesh, alpha, tol)?,
                HistoryMode::Auto if self.mesh.steps() <= AUTO_DIRECT_MAX_STEPS => {
                    HistoryStore::direct(&self.grid, &self.mesh, alpha)?
                }
                HistoryMode::Auto => HistoryStore::soe(&self.grid, &self.mesh, alpha, DEFAULT_SOE_TOL)?,
            },
        };
        Ok(SchemeState {
            n: 0,
            phi: phi0,
            phi_prev: None,
            r,
            r_prev: None,
            history,
            mesh: Arc::clone(&self.mesh),
        })
    }

    fn local_weight(&self, n: usize) -> f64 {
        match self.config.order {
            TimeOrder::Classical => 1.0,
            TimeOrder::Fractional(alpha) => weight_entry(self.config.scheme.family(), &self.mesh, n, 0, alpha),
        }
    }

    fn check_r(&self, value: f64) -> Result<()> {
        if value.abs() > self.config.r_floor && value.is_finite() {
            Ok(())
        } else {
            Err(Error::AuxiliaryCollapse {
                value: value.abs(),
                floor: self.config.r_floor,
            })
        }
    }

    fn source_at(&self, n: usize) -> Option<Field> {
        let src = self.source.as_ref()?;
        let mesh = &self.mesh;
        let (t0, t1) = (mesh.t(n), mesh.t(n + 1));
        let field = match self.config.scheme {
            SchemeKind::L1 => Field::from_fn(&self.grid, |x, y| src(x, y, t1)),
            SchemeKind::L1Cn => {
                let tm = 0.5 * (t0 + t1);
                Field::from_fn(&self.grid, |x, y| src(x, y, tm))
            }
            SchemeKind::L1Plus => Field::from_fn(&self.grid, |x, y| 0.5 * (src(x, y, t0) + src(x, y, t1))),
        };
        Some(field)
    }

    fn setup(&self, state: &SchemeState) -> Result<StepSetup> {
        if !Arc::ptr_eq(&state.mesh, &self.mesh) && *state.mesh != *self.mesh {
            return Err(Error::Mesh("state was created on a different time mesh".into()));
        }
        let n = state.n;
        if n >= self.mesh.steps() {
            return Err(Error::Mesh(format!("state is already at the final step {n}")));
        }
        self.check_r(state.r)?;
        let cfg = &self.config;
        let tau = self.mesh.tau(n + 1);
        let shift = self.local_weight(n) / tau;
        let cn = cfg.scheme.is_crank_nicolson();
        let (phi_bar, r_bar) = match (cn, &state.phi_prev, state.r_prev) {
            (true, Some(prev), Some(r_prev)) => {
                let w = 0.5 * tau / self.mesh.tau(n);
                (
                    Field::lin_comb(1.0 + w, &state.phi, -w, prev),
                    (1.0 + w) * state.r - w * r_prev,
                )
            }
            _ => (state.phi.clone(), state.r),
        };
        self.check_r(r_bar)?;
        let mut gamma = phi_bar.map(|p| p * p * p - p);
        if cfg.theta2 > 0.0 {
            gamma.axpy(-cfg.theta2, &laplacian(&phi_bar));
        }
        let hist = state.history.eval(cfg.scheme.family(), n, &self.grid)?;
        gamma.axpy(1.0, &hist);
        let (implicit, explicit) = if cn {
            (0.5 * cfg.eps2, 0.5 * cfg.eps2)
        } else {
            (cfg.eps2, 0.0)
        };
        Ok(StepSetup {
            tau,
            shift,
            implicit,
            explicit,
            phi_bar,
            r_bar,
            gamma,
            source: self.source_at(n),
        })
    }

    /// `κ` and `ρ` of the linear system.
    fn coupling(&self, state: &SchemeState, s: &StepSetup) -> (f64, f64) {
        if self.config.scheme.is_crank_nicolson() {
            (0.25 / (s.r_bar * s.r_bar), state.r / s.r_bar)
        } else {
            (0.5 / (state.r * state.r), 1.0)
        }
    }

    /// Advance `state` by one step. On error the state is left untouched.
    pub fn step(&self, state: &mut SchemeState) -> Result<StepReport> {
        let setup = self.setup(state)?;
        let cfg = &self.config;
        let (kappa, rho) = self.coupling(state, &setup);
        let gamma = &setup.gamma;

        // the system for the increment δ = φ' - φ carries no κ-sized terms
        let mut rhs = gamma.scaled(-rho);
        let lap_mix = {
            let mut m = state.phi.scaled(setup.explicit + setup.implicit);
            m.axpy(-cfg.theta2, &setup.phi_bar);
            m
        };
        rhs.axpy(1.0, &laplacian(&lap_mix));
        if let Some(s) = &setup.source {
            rhs.axpy(1.0, s);
        }
        let (u, v) = rayon::join(
            || solve_shifted_poisson(setup.shift, setup.implicit, gamma),
            || solve_shifted_poisson(setup.shift, setup.implicit, &rhs),
        );
        let (u, v) = (u?, v?);
        let sigma = kappa * inner_unchecked(gamma, &u);
        let gamma_delta = inner_unchecked(gamma, &v) / (1.0 + sigma);
        let mut delta = v;
        delta.axpy(-kappa * gamma_delta, &u);
        if !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite field at step {}",
                state.n + 1
            )));
        }
        let phi_next = Field::lin_comb(1.0, &state.phi, 1.0, &delta);
        let r_next = state.r + gamma_delta / (2.0 * setup.r_bar);
        self.check_r(r_next)?;

        let residual = self.residual_with(state, &setup, &phi_next, r_next);
        let energy_before = modified_energy(state, cfg);
        let diff_quotient = delta.scaled(1.0 / setup.tau);
        let delta_norm_sq = inner_unchecked(&delta, &delta);

        state.history.push(diff_quotient)?;
        let phi_old = std::mem::replace(&mut state.phi, phi_next);
        state.phi_prev = Some(phi_old);
        state.r_prev = Some(state.r);
        state.r = r_next;
        state.n += 1;
        let energy_after = modified_energy(state, cfg);
        Ok(StepReport {
            n: state.n,
            t: state.t(),
            sigma,
            residual,
            energy_before,
            energy_after,
            dissipation: setup.shift * delta_norm_sq,
            step_change: delta_norm_sq.sqrt(),
        })
    }

    /// Advance until the end of the mesh, calling `observe` after each step.
    pub fn run<F: FnMut(&SchemeState, &StepReport) -> Result<()>>(
        &self,
        state: &mut SchemeState,
        mut observe: F,
    ) -> Result<()> {
        while !state.is_finished() {
            let report = self.step(state)?;
            observe(state, &report)?;
        }
        Ok(())
    }

    /// Relative residual of the scheme equations for the candidate `(φ^{n+1}, R^{n+1})`.
    pub fn residual(&self, before: &SchemeState, phi_next: &Field, r_next: f64) -> Result<f64> {
        if **phi_next.grid() != *self.grid {
            return Err(Error::GridMismatch("candidate field is not on the solver grid".into()));
        }
        let setup = self.setup(before)?;
        Ok(self.residual_with(before, &setup, phi_next, r_next))
    }

    fn residual_with(&self, before: &SchemeState, s: &StepSetup, phi_next: &Field, r_next: f64) -> f64 {
        let cfg = &self.config;
        let delta = Field::lin_comb(1.0, phi_next, -1.0, &before.phi);
        let factor = if cfg.scheme.is_crank_nicolson() {
            (r_next + before.r) / (2.0 * s.r_bar)
        } else {
            r_next / before.r
        };
        let terms = [
            delta.scaled(s.shift),
            laplacian(phi_next).scaled(-s.implicit),
            laplacian(&before.phi).scaled(-s.explicit),
            laplacian(&s.phi_bar).scaled(cfg.theta2),
            s.gamma.scaled(factor),
        ];
        let mut total = Field::zeros(&self.grid);
        let mut scale = s.shift * phi_next.max_abs().max(before.phi.max_abs());
        for t in &terms {
            total.axpy(1.0, t);
            scale = scale.max(t.max_abs());
        }
        if let Some(src) = &s.source {
            total.axpy(-1.0, src);
            scale = scale.max(src.max_abs());
        }
        let field_res = relative(total.max_abs(), scale);

        let two_r_bar = 2.0 * s.r_bar;
        let gain_next = inner_unchecked(&s.gamma, phi_next) / two_r_bar;
        let gain_prev = inner_unchecked(&s.gamma, &before.phi) / two_r_bar;
        let increment = inner_unchecked(&s.gamma, &delta) / two_r_bar;
        let scalar_res = relative(
            (r_next - before.r - increment).abs(),
            [r_next, before.r, gain_next, gain_prev]
                .iter()
                .fold(0.0, |m, v| m.max(v.abs())),
        );
        field_res.max(scalar_res)
    }
}

fn relative(abs: f64, scale: f64) -> f64 {
    if abs == 0.0 {
        0.0
    } else if scale > 0.0 {
        abs / scale
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{BoundaryCondition, Domain};
    use std::f64::consts::PI;

    fn periodic(n: usize) -> Arc<SpatialGrid> {
        SpatialGrid::new(n, n, Domain::square(0.0, 2.0 * PI), BoundaryCondition::Periodic).unwrap()
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in SchemeKind::ALL {
            assert_eq!(s.as_str().parse::<SchemeKind>().unwrap(), s);
        }
        assert_eq!("L1+-CN".parse::<SchemeKind>().unwrap(), SchemeKind::L1Plus);
        assert!("bdf2".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::new(SchemeKind::L1, 0.5, 0.0).is_err());
        assert!(SchemeConfig::new(SchemeKind::L1, 1.5, 0.1).is_err());
        assert!(SchemeConfig::new(SchemeKind::L1, 0.5, 0.1)
            .unwrap()
            .with_theta2(0.2)
            .is_err());
        let cfg = SchemeConfig::new(SchemeKind::L1, 1.0, 0.1).unwrap();
        assert_eq!(cfg.order, TimeOrder::Classical);
    }

    #[test]
    fn init_pure_phase() {
        let g = periodic(8);
        let mesh = Arc::new(TimeMesh::uniform(4, 1.0).unwrap());
        let cfg = SchemeConfig::new(SchemeKind::L1, 0.5, 0.1).unwrap().with_c0(4.0);
        let solver = Solver::new(cfg, g.clone(), mesh).unwrap();
        let st = solver.init_state(Field::constant(&g, 1.0)).unwrap();
        assert!((st.r - 2.0).abs() < 1e-14);
    }

    #[test]
    fn init_zero_field() {
        let g = periodic(8);
        let mesh = Arc::new(TimeMesh::uniform(4, 1.0).unwrap());
        let cfg = SchemeConfig::new(SchemeKind::L1, 0.5, 0.1).unwrap();
        let solver = Solver::new(cfg.clone(), g.clone(), mesh.clone()).unwrap();
        let st = solver.init_state(Field::zeros(&g)).unwrap();
        assert!((st.r - PI).abs() < 1e-13);

        let bad = Solver::new(cfg.with_c0(-PI * PI - 1.0), g.clone(), mesh).unwrap();
        match bad.init_state(Field::zeros(&g)) {
            Err(Error::Config(msg)) => assert!(msg.contains("C0")),
            other => panic!("expected a configuration error, got {other:?}"),
        }
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let g = periodic(8);
        let mesh = Arc::new(TimeMesh::graded(6, 2.0, 1.0).unwrap());
        for scheme in SchemeKind::ALL {
            let cfg = SchemeConfig::new(scheme, 0.5, 0.1).unwrap().with_c0(1.0);
            let solver = Solver::new(cfg, g.clone(), mesh.clone()).unwrap();
            let mut st = solver.init_state(Field::constant(&g, 1.0)).unwrap();
            let r0 = st.r;
            solver
                .run(&mut st, |s, rep| {
                    assert!(rep.residual <= 1e-14);
                    assert!(s.phi.max_diff(&Field::constant(&g, 1.0)) <= 1e-14);
                    Ok(())
                })
                .unwrap();
            assert!((st.r - r0).abs() <= 1e-14 * r0);
        }
    }

    #[test]
    fn perturbed_candidate_has_large_residual() {
        let g = periodic(8);
        let mesh = Arc::new(TimeMesh::uniform(5, 0.5).unwrap());
        let cfg = SchemeConfig::new(SchemeKind::L1, 0.5, 0.1).unwrap();
        let solver = Solver::new(cfg, g.clone(), mesh).unwrap();
        let mut st = solver
            .init_state(Field::from_fn(&g, |x, y| 0.1 * x.sin() * y.cos()))
            .unwrap();
        solver.step(&mut st).unwrap();
        let before = st.clone();
        let rep = solver.step(&mut st).unwrap();
        assert!(rep.residual <= 1e-10);
        assert!(solver.residual(&before, &st.phi, st.r).unwrap() <= 1e-10);
        let bumped = st.phi.map(|v| v + 1e-3);
        assert!(solver.residual(&before, &bumped, st.r).unwrap() >= 1e-5);
    }

    #[test]
    fn step_past_the_end_fails() {
        let g = periodic(4);
        let mesh = Arc::new(TimeMesh::uniform(1, 0.1).unwrap());
        let cfg = SchemeConfig::new(SchemeKind::L1Cn, 0.5, 0.1).unwrap();
        let solver = Solver::new(cfg, g.clone(), mesh).unwrap();
        let mut st = solver.init_state(Field::zeros(&g)).unwrap();
        solver.step(&mut st).unwrap();
        let snapshot = (st.n, st.r);
        assert!(solver.step(&mut st).is_err());
        assert_eq!((st.n, st.r), snapshot);
    }
}
