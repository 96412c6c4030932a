//! Numerical experiments: manufactured-solution and self-convergence
//! studies, long-time energy runs, the shrinking circle and coarsening.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::energy::{original_energy, EnergyReport};
use crate::error::{Error, Result};
use crate::scheme::{SchemeConfig, SchemeKind, SchemeState, Solver, Source, TimeOrder};
use crate::spectral::{BoundaryCondition, Domain, Field, SpatialGrid};
use crate::timegrid::TimeMesh;

/// Caputo derivative of order `α ∈ (0, 1]` of `t^μ`: `Γ(μ+1)/Γ(μ+1-α) t^(μ-α)`.
pub fn caputo_power(mu: f64, alpha: f64, t: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent must be positive, got {mu}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "order must lie in (0, 1], got {alpha}"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    let z = mu + 1.0 - alpha;
    if z <= 0.0 && z.fract() == 0.0 {
        return Err(Error::InvalidParameter(format!("Γ has a pole at {z}")));
    }
    let coef = gamma(mu + 1.0) / gamma(z);
    let p = mu - alpha;
    if t == 0.0 {
        return Ok(if p > 0.0 {
            0.0
        } else if p == 0.0 {
            coef
        } else {
            f64::INFINITY
        });
    }
    Ok(coef * t.powf(p))
}

/// Problems with a known exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Manufactured {
    /// `0.2 t⁵ sin x cos y` on the periodic box `(0, 2π)²`.
    Smooth,
    /// `0.2 (t^μ + 1) cos πx cos πy` on `(-1, 1)²` with Neumann conditions.
    Singular { mu: f64 },
}

impl Manufactured {
    pub fn from_example(example: u32, mu: f64) -> Result<Self> {
        match example {
            1 => Ok(Manufactured::Smooth),
            2 => Ok(Manufactured::Singular { mu }),
            _ => Err(Error::Config(format!("no manufactured solution numbered {example}"))),
        }
    }

    pub fn grid(&self, nx: usize) -> Result<Arc<SpatialGrid>> {
        match self {
            Manufactured::Smooth => {
                SpatialGrid::new(nx, nx, Domain::square(0.0, 2.0 * PI), BoundaryCondition::Periodic)
            }
            Manufactured::Singular { .. } => {
                SpatialGrid::new(nx, nx, Domain::square(-1.0, 1.0), BoundaryCondition::Neumann)
            }
        }
    }

    fn parts(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            Manufactured::Smooth => (x.sin() * y.cos(), 2.0),
            Manufactured::Singular { .. } => ((PI * x).cos() * (PI * y).cos(), 2.0 * PI * PI),
        }
    }

    fn time_factor(&self, t: f64) -> f64 {
        match self {
            Manufactured::Smooth => 0.2 * t.powi(5),
            Manufactured::Singular { mu } => 0.2 * (t.powf(*mu) + 1.0),
        }
    }

    pub fn exact(&self, x: f64, y: f64, t: f64) -> f64 {
        self.time_factor(t) * self.parts(x, y).0
    }

    /// Source making [`Self::exact`] solve `∂^α φ - ε² Δφ + φ³ - φ = s`.
    pub fn source(&self, x: f64, y: f64, t: f64, alpha: f64, eps2: f64) -> Result<f64> {
        let (shape, lap) = self.parts(x, y);
        let rate = match self {
            Manufactured::Smooth => 0.2 * caputo_power(5.0, alpha, t)?,
            Manufactured::Singular { mu } => 0.2 * caputo_power(*mu, alpha, t)?,
        };
        let phi = self.time_factor(t) * shape;
        Ok(rate * shape + eps2 * lap * phi - phi + phi * phi * phi)
    }

    /// Regularity exponent of the exact solution at `t = 0`.
    pub fn regularity(&self) -> f64 {
        match self {
            Manufactured::Smooth => 5.0,
            Manufactured::Singular { mu } => *mu,
        }
    }
}

/// Source term at a point for the given example number (1 or 2).
pub fn manufactured_source(example: u32, x: f64, y: f64, t: f64, alpha: f64, eps2: f64, mu: f64) -> Result<f64> {
    Manufactured::from_example(example, mu)?.source(x, y, t, alpha, eps2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvergenceProblem {
    Exact(Manufactured),
    /// `cos 4πx cos 4πy` on `(-1, 1)²`, Neumann, errors against the doubled mesh.
    SelfConvergence,
}

#[derive(Debug, Clone)]
pub struct ConvergenceSpec {
    pub problem: ConvergenceProblem,
    pub config: SchemeConfig,
    pub grading: f64,
    pub horizon: f64,
    pub levels: Vec<usize>,
    pub nx: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub steps: usize,
    /// Largest step of the mesh.
    pub tau: f64,
    pub error: f64,
    /// Observed order against the previous row.
    pub order: Option<f64>,
}

pub const CONVERGENCE_CSV_HEADER: &str = "M,tau,error,order";

pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CONVERGENCE_CSV_HEADER}")?;
    for r in rows {
        match r.order {
            Some(p) => writeln!(out, "{},{:e},{:e},{:.6}", r.steps, r.tau, r.error, p)?,
            None => writeln!(out, "{},{:e},{:e},", r.steps, r.tau, r.error)?,
        }
    }
    Ok(())
}

/// Initial field of the self-convergence and energy studies.
pub fn checkerboard(grid: &Arc<SpatialGrid>) -> Field {
    Field::from_fn(grid, |x, y| (4.0 * PI * x).cos() * (4.0 * PI * y).cos())
}

fn neumann_box(nx: usize) -> Result<Arc<SpatialGrid>> {
    SpatialGrid::new(nx, nx, Domain::square(-1.0, 1.0), BoundaryCondition::Neumann)
}

/// Run the solver over `mesh`, handing every time level (including `n = 0`) to `visit`.
fn trajectory<F: FnMut(&SchemeState) -> Result<()>>(solver: &Solver, phi0: Field, mut visit: F) -> Result<()> {
    let mut state = solver.init_state(phi0)?;
    visit(&state)?;
    solver.run(&mut state, |s, _| visit(s))
}

pub fn run_convergence(spec: &ConvergenceSpec) -> Result<Vec<ConvergenceRow>> {
    if spec.levels.is_empty() || spec.levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("levels must be a non-empty increasing list".into()));
    }
    let grid = match spec.problem {
        ConvergenceProblem::Exact(m) => m.grid(spec.nx)?,
        ConvergenceProblem::SelfConvergence => neumann_box(spec.nx)?,
    };
    let meshes = |m: usize| TimeMesh::graded(m, spec.grading, spec.horizon).map(Arc::new);
    let (errors, taus): (Vec<f64>, Vec<f64>) = match spec.problem {
        ConvergenceProblem::Exact(problem) => {
            let cfg = &spec.config;
            let (alpha, eps2) = (cfg.alpha(), cfg.eps2);
            // validate the source once so the closure can unwrap
            problem.source(0.0, 0.0, 0.0, alpha, eps2)?;
            let results: Result<Vec<(f64, f64)>> = spec
                .levels
                .par_iter()
                .map(|&m| {
                    let mesh = meshes(m)?;
                    let source: Source =
                        Arc::new(move |x, y, t| problem.source(x, y, t, alpha, eps2).expect("validated source"));
                    let solver = Solver::new(cfg.clone(), grid.clone(), mesh.clone())?.with_source(source);
                    let phi0 = Field::from_fn(&grid, |x, y| problem.exact(x, y, 0.0));
                    let mut err = 0.0f64;
                    trajectory(&solver, phi0, |s| {
                        let t = s.t();
                        let exact = Field::from_fn(&grid, |x, y| problem.exact(x, y, t));
                        err = err.max(s.phi.max_diff(&exact));
                        Ok(())
                    })?;
                    Ok((err, mesh.max_step()))
                })
                .collect();
            results?.into_iter().unzip()
        }
        ConvergenceProblem::SelfConvergence => {
            if spec.levels.windows(2).any(|w| w[1] != 2 * w[0]) {
                return Err(Error::Config(
                    "self-convergence needs a doubling sequence of levels".into(),
                ));
            }
            let mut all = spec.levels.clone();
            all.push(2 * spec.levels[spec.levels.len() - 1]);
            let runs: Result<Vec<Vec<Field>>> = all
                .par_iter()
                .map(|&m| {
                    let solver = Solver::new(spec.config.clone(), grid.clone(), meshes(m)?)?;
                    let mut levels = Vec::with_capacity(m + 1);
                    trajectory(&solver, checkerboard(&grid), |s| {
                        levels.push(s.phi.clone());
                        Ok(())
                    })?;
                    Ok(levels)
                })
                .collect();
            let runs = runs?;
            let mut errors = Vec::new();
            let mut taus = Vec::new();
            for (k, &m) in spec.levels.iter().enumerate() {
                let (coarse, fine) = (&runs[k], &runs[k + 1]);
                let err = (1..=m).map(|n| coarse[n].max_diff(&fine[2 * n])).fold(0.0, f64::max);
                errors.push(err);
                taus.push(meshes(m)?.max_step());
            }
            (errors, taus)
        }
    };
    Ok(order_table(&spec.levels, &taus, &errors))
}

fn order_table(levels: &[usize], taus: &[f64], errors: &[f64]) -> Vec<ConvergenceRow> {
    (0..levels.len())
        .map(|k| ConvergenceRow {
            steps: levels[k],
            tau: taus[k],
            error: errors[k],
            order: (k > 0).then(|| (errors[k - 1] / errors[k]).ln() / (taus[k - 1] / taus[k]).ln()),
        })
        .collect()
}

/// Graded mesh with `graded_steps` points on `[0, t1]`, then uniform steps `dt` up to `horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeMeshSpec {
    pub graded_steps: usize,
    pub grading: f64,
    pub t1: f64,
    pub dt: f64,
    pub horizon: f64,
}

impl CompositeMeshSpec {
    pub fn build(&self) -> Result<TimeMesh> {
        if self.horizon <= self.t1 {
            TimeMesh::graded(self.graded_steps, self.grading, self.horizon)
        } else {
            TimeMesh::composite(self.graded_steps, self.grading, self.t1, self.dt, self.horizon)
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnergySpec {
    pub config: SchemeConfig,
    pub mesh: CompositeMeshSpec,
    pub nx: usize,
    pub bc: BoundaryCondition,
    /// Allowed relative increase of the modified energy per step.
    pub tolerance: f64,
}

/// Long-time run from `cos 4πx cos 4πy` on `(-1, 1)²`, logging energies each step.
pub fn run_energy_study(spec: &EnergySpec) -> Result<EnergyReport> {
    let grid = SpatialGrid::new(spec.nx, spec.nx, Domain::square(-1.0, 1.0), spec.bc)?;
    let phi0 = checkerboard(&grid);
    run_logged(&spec.config, grid, spec.mesh.build()?, phi0, spec.tolerance, |_| Ok(()))
}

fn run_logged<F: FnMut(&SchemeState) -> Result<()>>(
    config: &SchemeConfig,
    grid: Arc<SpatialGrid>,
    mesh: TimeMesh,
    phi0: Field,
    tolerance: f64,
    mut visit: F,
) -> Result<EnergyReport> {
    let solver = Solver::new(config.clone(), grid, Arc::new(mesh))?;
    let mut state = solver.init_state(phi0)?;
    let mut report = EnergyReport::new();
    report.record(&state, config, 0.0)?;
    visit(&state)?;
    solver.run(&mut state, |s, rep| {
        report.record(s, config, rep.step_change)?;
        if rep.energy_after - rep.energy_before > tolerance * (1.0 + rep.energy_before.abs()) {
            return Err(Error::EnergyIncrease {
                step: rep.n,
                before: rep.energy_before,
                after: rep.energy_after,
            });
        }
        visit(s)
    })?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct CircleSpec {
    pub config: SchemeConfig,
    pub nx: usize,
    /// Half width of the box `(-L, L)²`.
    pub half_width: f64,
    pub radius: f64,
    pub mesh: CompositeMeshSpec,
    /// Spacing of the recorded rows.
    pub output_interval: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleRow {
    pub t: f64,
    pub radius_sq: f64,
    pub energy: f64,
}

pub const CIRCLE_CSV_HEADER: &str = "t,R2,E";

pub fn write_circle_csv<W: Write>(rows: &[CircleRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CIRCLE_CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{:e},{:e},{:e}", r.t, r.radius_sq, r.energy)?;
    }
    Ok(())
}

/// Share of a triangle on which the linear interpolant of the corner values is positive.
fn positive_fraction(a: f64, b: f64, c: f64) -> f64 {
    let mut v = [a, b, c];
    v.sort_by(|x, y| x.total_cmp(y));
    let [lo, mid, hi] = v;
    if lo > 0.0 {
        1.0
    } else if hi <= 0.0 {
        0.0
    } else if mid <= 0.0 {
        hi * hi / ((hi - lo) * (hi - mid))
    } else {
        1.0 - lo * lo / ((mid - lo) * (hi - lo))
    }
}

/// Cells along one axis as `(node, next node, width)`. Neumann grids get
/// half cells at the walls carrying the nearest nodal value.
fn axis_cells(n: usize, h: f64, periodic: bool) -> Vec<(usize, usize, f64)> {
    if periodic {
        (0..n).map(|i| (i, (i + 1) % n, h)).collect()
    } else {
        std::iter::once((0, 0, 0.5 * h))
            .chain((0..n - 1).map(|i| (i, i + 1, h)))
            .chain(std::iter::once((n - 1, n - 1, 0.5 * h)))
            .collect()
    }
}

/// Area of `{φ > 0}` for the piecewise-linear interpolant on a triangulation of the grid.
pub fn positive_area(field: &Field) -> f64 {
    let g = field.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let d = g.domain();
    let periodic = g.bc() == BoundaryCondition::Periodic;
    let v = field.values();
    let xs = axis_cells(nx, d.lx() / nx as f64, periodic);
    let ys = axis_cells(ny, d.ly() / ny as f64, periodic);
    ys.par_iter()
        .map(|&(j0, j1, hy)| {
            xs.iter()
                .map(|&(i0, i1, hx)| {
                    let (a, b) = (v[j0 * nx + i0], v[j0 * nx + i1]);
                    let (c, e) = (v[j1 * nx + i0], v[j1 * nx + i1]);
                    0.5 * hx * hy * (positive_fraction(a, b, e) + positive_fraction(a, e, c))
                })
                .sum::<f64>()
        })
        .sum()
}

/// Equilibrium profile `tanh((R₀ - |x|) / (√2 ε))` centred in the box.
pub fn circle_profile(grid: &Arc<SpatialGrid>, radius: f64, eps2: f64) -> Field {
    let width = (2.0 * eps2).sqrt();
    Field::from_fn(grid, |x, y| ((radius - x.hypot(y)) / width).tanh())
}

pub fn run_circle(spec: &CircleSpec) -> Result<Vec<CircleRow>> {
    let l = spec.half_width;
    let grid = SpatialGrid::new(spec.nx, spec.nx, Domain::square(-l, l), BoundaryCondition::Periodic)?;
    let mesh = match spec.config.order {
        TimeOrder::Classical => {
            let steps = (spec.mesh.horizon / spec.mesh.dt - 1e-9).ceil() as usize;
            TimeMesh::uniform(steps, spec.mesh.horizon)?
        }
        TimeOrder::Fractional(_) => spec.mesh.build()?,
    };
    let solver = Solver::new(spec.config.clone(), grid.clone(), Arc::new(mesh))?;
    let mut rows = Vec::new();
    let mut next = 0.0;
    let eps2 = spec.config.eps2;
    let interval = spec.output_interval;
    trajectory(&solver, circle_profile(&grid, spec.radius, eps2), |s| {
        let t = s.t();
        if t >= next - 1e-9 || s.is_finished() {
            rows.push(CircleRow {
                t,
                radius_sq: positive_area(&s.phi) / PI,
                energy: original_energy(&s.phi, eps2),
            });
            while next <= t + 1e-9 {
                next += interval;
            }
        }
        Ok(())
    })?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct CoarsenSpec {
    pub config: SchemeConfig,
    pub nx: usize,
    pub bc: BoundaryCondition,
    pub seed: u64,
    pub amplitude: f64,
    pub mesh: CompositeMeshSpec,
    pub snapshot_times: Vec<f64>,
    pub tolerance: f64,
    /// Allowed excess of `max |φ|` over 1.
    pub range_slack: f64,
}

#[derive(Debug, Clone)]
pub struct CoarsenOutput {
    pub report: EnergyReport,
    pub snapshots: Vec<(f64, Field)>,
}

/// i.i.d. uniform values in `[-amplitude, amplitude]` from a seeded ChaCha stream.
pub fn random_field(grid: &Arc<SpatialGrid>, seed: u64, amplitude: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len()).map(|_| rng.gen_range(-amplitude..=amplitude)).collect();
    Field::new(grid, values).expect("finite random values")
}

pub fn run_coarsening(spec: &CoarsenSpec) -> Result<CoarsenOutput> {
    let grid = SpatialGrid::new(spec.nx, spec.nx, Domain::square(-1.0, 1.0), spec.bc)?;
    let phi0 = random_field(&grid, spec.seed, spec.amplitude);
    let mut pending: Vec<f64> = spec.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    pending.reverse();
    let mut snapshots = Vec::new();
    let bound = 1.0 + spec.range_slack;
    let report = run_logged(&spec.config, grid, spec.mesh.build()?, phi0, spec.tolerance, |s| {
        let t = s.t();
        while pending.last().is_some_and(|&ts| t >= ts - 1e-9) {
            pending.pop();
            snapshots.push((t, s.phi.clone()));
        }
        let m = s.phi.max_abs();
        if m > bound {
            return Err(Error::InvalidParameter(format!(
                "|phi| reached {m} at t = {t}, above the sanity bound {bound}"
            )));
        }
        Ok(())
    })?;
    Ok(CoarsenOutput { report, snapshots })
}

/// Write a CSV file through `writer`.
pub fn save_with<F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>>(
    path: &Path,
    writer: F,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writer(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Grading exponent that gives `scheme` its nominal order for a `t^regularity` solution.
pub fn optimal_grading(scheme: SchemeKind, alpha: f64, regularity: f64) -> f64 {
    scheme.optimal_grading(alpha, regularity).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caputo_power_examples() {
        assert!((caputo_power(1.0, 0.5, 1.0).unwrap() - 2.0 / PI.sqrt()).abs() < 1e-14);
        assert!((caputo_power(5.0, 0.5, 1.0).unwrap() - 120.0 / 52.34277778455352).abs() < 1e-12);
        assert!((caputo_power(0.5, 0.5, 0.0).unwrap() - 0.886226925452758).abs() < 1e-14);
        assert_eq!(caputo_power(2.0, 0.5, 0.0).unwrap(), 0.0);
        assert!(caputo_power(0.0, 0.5, 1.0).is_err());
        // classical derivative
        assert!((caputo_power(3.0, 1.0, 2.0).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn manufactured_source_examples() {
        for (x, y) in [(0.3, 1.1), (2.0, 5.0)] {
            assert_eq!(manufactured_source(1, x, y, 0.0, 0.5, 1.0, 0.5).unwrap(), 0.0);
        }
        let s = manufactured_source(1, PI / 2.0, 0.0, 1.0, 0.5, 1.0, 0.5).unwrap();
        assert!((s - 0.666516).abs() < 1e-6, "{s}");
        let (x, y, eps2) = (0.2, -0.7, 0.1);
        let phi = 0.2 * (PI * x).cos() * (PI * y).cos();
        let s = manufactured_source(2, x, y, 0.0, 0.3, eps2, 0.5).unwrap();
        assert!((s - (2.0 * PI * PI * eps2 * phi - phi + phi.powi(3))).abs() < 1e-14);
        assert!(manufactured_source(3, 0.0, 0.0, 0.0, 0.5, 0.1, 0.5).is_err());
    }

    #[test]
    fn positive_area_of_disc() {
        let g = SpatialGrid::new(128, 128, Domain::square(-32.0, 32.0), BoundaryCondition::Periodic).unwrap();
        let phi = circle_profile(&g, 8.0, 1.0);
        let r2 = positive_area(&phi) / PI;
        assert!((r2 - 64.0).abs() < 0.5, "{r2}");
        let n = SpatialGrid::new(64, 64, Domain::square(-1.0, 1.0), BoundaryCondition::Neumann).unwrap();
        let half = Field::from_fn(&n, |x, _| x);
        assert!((positive_area(&half) - 2.0).abs() < 1e-12);
        assert_eq!(positive_area(&Field::constant(&n, -1.0)), 0.0);
        assert!((positive_area(&Field::constant(&n, 1.0)) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn positive_fraction_is_continuous() {
        assert_eq!(positive_fraction(1.0, 1.0, 1.0), 1.0);
        assert_eq!(positive_fraction(-1.0, 0.0, -2.0), 0.0);
        assert!((positive_fraction(1.0, -1.0, -1.0) - 0.25).abs() < 1e-15);
        assert!((positive_fraction(-1.0, 1.0, 1.0) - 0.75).abs() < 1e-15);
        let near = positive_fraction(1e-12, -1.0, 1.0);
        assert!((near - positive_fraction(0.0, -1.0, 1.0)).abs() < 1e-11);
    }

    #[test]
    fn random_field_is_seeded() {
        let g = SpatialGrid::new(8, 8, Domain::square(-1.0, 1.0), BoundaryCondition::Neumann).unwrap();
        let a = random_field(&g, 7, 0.1);
        assert_eq!(a.values(), random_field(&g, 7, 0.1).values());
        assert_ne!(a.values(), random_field(&g, 8, 0.1).values());
        assert!(a.max_abs() <= 0.1);
    }

    #[test]
    fn convergence_rejects_bad_levels() {
        let spec = ConvergenceSpec {
            problem: ConvergenceProblem::SelfConvergence,
            config: SchemeConfig::new(SchemeKind::L1, 0.5, 0.01).unwrap(),
            grading: 1.0,
            horizon: 0.01,
            levels: vec![4, 6],
            nx: 8,
        };
        assert!(run_convergence(&spec).is_err());
    }
}
