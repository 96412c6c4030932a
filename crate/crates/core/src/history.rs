//! History part of the discrete fractional derivative.
//!
//! The direct path stores every difference quotient and applies the weights
//! of [`crate::timegrid`]; it costs O(n) per step. The fast path replaces the
//! kernel `t^(-α)` by a sum of exponentials fitted on `[δ, T]` and carries one
//! running field per exponential. The most recent history interval is always
//! applied directly, so only kernel arguments of at least `τ_min` reach the
//! exponential sum.

use std::sync::Arc;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::spectral::{Field, SpatialGrid};
use crate::timegrid::{check_alpha, weight_entry, QuadWeights, TimeMesh, WeightFamily};

/// Stored difference quotients `(φ^{k+1} - φ^k) / τ_{k+1}`, `k = 0..n-1`.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    grid: Arc<SpatialGrid>,
    diffs: Vec<Field>,
}

impl HistoryBuffer {
    pub fn new(grid: &Arc<SpatialGrid>) -> Self {
        HistoryBuffer {
            grid: Arc::clone(grid),
            diffs: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }

    pub fn push(&mut self, diff: Field) -> Result<()> {
        if **diff.grid() != *self.grid {
            return Err(Error::GridMismatch("difference quotient on a foreign grid".into()));
        }
        if !diff.is_finite() {
            return Err(Error::History("non-finite difference quotient".into()));
        }
        self.diffs.push(diff);
        Ok(())
    }

    pub fn diffs(&self) -> &[Field] {
        &self.diffs
    }
}

/// `Σ_{k<n} b[n-k] · diffs[k]`.
pub fn direct_history(buffer: &HistoryBuffer, weights: &QuadWeights) -> Result<Field> {
    if buffer.len() != weights.n {
        return Err(Error::History(format!(
            "buffer holds {} intervals but the weights target step {}",
            buffer.len(),
            weights.n
        )));
    }
    let mut out = Field::zeros(&buffer.grid);
    for (k, d) in buffer.diffs.iter().enumerate() {
        out.axpy(weights.history(k), d);
    }
    Ok(out)
}

/// `t^(-α) ≈ Σ_i w_i e^{-s_i t}` on `[δ, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoeApprox {
    pub alpha: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub delta: f64,
    pub horizon: f64,
    pub tol: f64,
    /// Largest relative kernel error seen on the verification sample.
    pub achieved: f64,
}

pub const DEFAULT_SOE_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_MODES: usize = 512;
const VERIFY_SAMPLES: usize = 2000;

impl SoeApprox {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kernel(&self, t: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * (-s * t).exp())
            .sum()
    }

    /// Max relative kernel error over `samples` geometrically spaced points of `[δ, T]`.
    pub fn max_relative_error(&self, samples: usize) -> f64 {
        geometric_samples(self.delta, self.horizon, samples)
            .map(|t| {
                let exact = t.powf(-self.alpha);
                (self.kernel(t) - exact).abs() / exact
            })
            .fold(0.0, f64::max)
    }
}

fn geometric_samples(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let ratio = (hi / lo).ln();
    let last = count.max(2) - 1;
    (0..=last).map(move |i| {
        if i == last {
            hi
        } else {
            lo * (ratio * i as f64 / last as f64).exp()
        }
    })
}

/// Fit a sum of exponentials to `t^(-α)` on `[δ, T]` with the default mode cap.
pub fn fit_soe(alpha: f64, delta: f64, horizon: f64, tol: f64) -> Result<SoeApprox> {
    fit_soe_capped(alpha, delta, horizon, tol, DEFAULT_MAX_MODES)
}

/// Composite Gauss quadrature of `t^(-α) = (1/Γ(α)) ∫_0^∞ e^{-ts} s^{α-1} ds`.
///
/// `[0, 1/T]` gets a Gauss–Jacobi rule absorbing `s^{α-1}`; the dyadic
/// intervals `[2^j/T, 2^{j+1}/T]` get Gauss–Legendre rules in `ln s`. The
/// number of intervals is fixed by a bound on the neglected tail at `t = δ`;
/// the points per interval grow until the verification sample passes.
pub fn fit_soe_capped(alpha: f64, delta: f64, horizon: f64, tol: f64, max_modes: usize) -> Result<SoeApprox> {
    check_alpha(alpha)?;
    if !(delta > 0.0 && delta < horizon) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need 0 < delta < horizon, got delta={delta}, horizon={horizon}"
        )));
    }
    if !(tol > 1e-14 && tol < 1e-2) {
        return Err(Error::InvalidParameter(format!(
            "SOE tolerance {tol} outside (1e-14, 1e-2)"
        )));
    }
    let s0 = 1.0 / horizon;
    let g_alpha = gamma(alpha);
    // smallest J with (δS)^{α-1} e^{-δS} <= tol Γ(α)/4, S = s0 2^J
    let mut intervals = 0usize;
    loop {
        let z = delta * s0 * 2f64.powi(intervals as i32);
        if z > 1.0 && z.powf(alpha - 1.0) * (-z).exp() <= 0.25 * tol * g_alpha {
            break;
        }
        intervals += 1;
    }
    let mut best: Option<SoeApprox> = None;
    for n in 2..=64usize {
        let modes = n * (intervals + 1);
        if modes > max_modes {
            break;
        }
        let approx = build_soe(alpha, s0, intervals, n, delta, horizon, tol, g_alpha);
        if approx.achieved <= tol {
            return Ok(approx);
        }
        if best.as_ref().is_none_or(|b| approx.achieved < b.achieved) {
            best = Some(approx);
        }
    }
    let (achieved, modes) = best.map_or((f64::INFINITY, 0), |b| (b.achieved, b.len()));
    Err(Error::SoeFit { achieved, tol, modes })
}

#[allow(clippy::too_many_arguments)]
fn build_soe(
    alpha: f64,
    s0: f64,
    intervals: usize,
    n: usize,
    delta: f64,
    horizon: f64,
    tol: f64,
    g_alpha: f64,
) -> SoeApprox {
    let mut nodes = Vec::with_capacity(n * (intervals + 1));
    let mut weights = Vec::with_capacity(nodes.capacity());
    // [0, s0] with weight s^{α-1}: s = s0 (1 + x)/2
    let jac = GaussRule::jacobi(n, 0.0, alpha - 1.0);
    let scale = (0.5 * s0).powf(alpha) / g_alpha;
    for (&x, &w) in jac.nodes.iter().zip(&jac.weights) {
        nodes.push(0.5 * s0 * (1.0 + x));
        weights.push(w * scale);
    }
    let leg = GaussRule::legendre(n);
    let width = std::f64::consts::LN_2;
    let u0 = s0.ln();
    for j in 0..intervals {
        let lo = u0 + j as f64 * width;
        for (&x, &w) in leg.nodes.iter().zip(&leg.weights) {
            let u = lo + 0.5 * width * (1.0 + x);
            nodes.push(u.exp());
            weights.push(0.5 * width * w * (alpha * u).exp() / g_alpha);
        }
    }
    let mut approx = SoeApprox {
        alpha,
        nodes,
        weights,
        delta,
        horizon,
        tol,
        achieved: f64::INFINITY,
    };
    approx.achieved = approx.max_relative_error(VERIFY_SAMPLES);
    approx
}

/// Running exponential modes of the fast history evaluation.
#[derive(Debug, Clone)]
pub struct SoeHistory {
    approx: SoeApprox,
    mesh: Arc<TimeMesh>,
    grid: Arc<SpatialGrid>,
    /// `modes[i * len .. (i+1) * len]` is the field of exponential `i`.
    modes: Vec<f64>,
    pending: Option<Field>,
    pushed: usize,
    inv_gamma: f64,
}

impl SoeHistory {
    /// Fit the kernel on `[τ_min, T]` of `mesh`.
    pub fn new(grid: &Arc<SpatialGrid>, mesh: &Arc<TimeMesh>, alpha: f64, tol: f64) -> Result<Self> {
        let approx = fit_soe(alpha, mesh.min_step(), mesh.horizon(), tol)?;
        Self::with_approx(grid, mesh, approx)
    }

    pub fn with_approx(grid: &Arc<SpatialGrid>, mesh: &Arc<TimeMesh>, approx: SoeApprox) -> Result<Self> {
        if approx.delta > mesh.min_step() * (1.0 + 1e-12) || approx.horizon < mesh.horizon() * (1.0 - 1e-12) {
            return Err(Error::History(format!(
                "kernel fit on [{}, {}] does not cover the mesh range [{}, {}]",
                approx.delta,
                approx.horizon,
                mesh.min_step(),
                mesh.horizon()
            )));
        }
        let inv_gamma = 1.0 / gamma(1.0 - approx.alpha);
        Ok(SoeHistory {
            modes: vec![0.0; approx.len() * grid.len()],
            approx,
            mesh: Arc::clone(mesh),
            grid: Arc::clone(grid),
            pending: None,
            pushed: 0,
            inv_gamma,
        })
    }

    pub fn approx(&self) -> &SoeApprox {
        &self.approx
    }

    /// Number of difference quotients received so far.
    pub fn len(&self) -> usize {
        self.pushed
    }

    pub fn is_empty(&self) -> bool {
        self.pushed == 0
    }

    /// Fields held in memory: one per exponential plus the pending interval.
    pub fn stored_fields(&self) -> usize {
        self.approx.len() + 1
    }

    /// Append the difference quotient of interval `k = len()`.
    ///
    /// The previous interval is folded into the exponential modes, which are
    /// then anchored at `t_k`.
    pub fn update(&mut self, diff: Field) -> Result<()> {
        if **diff.grid() != *self.grid {
            return Err(Error::GridMismatch("difference quotient on a foreign grid".into()));
        }
        if self.pushed >= self.mesh.steps() {
            return Err(Error::History("more history intervals than mesh steps".into()));
        }
        if let Some(prev) = self.pending.take() {
            let tau = self.mesh.tau(self.pushed);
            let len = self.grid.len();
            let d = prev.values();
            for (i, &s) in self.approx.nodes.iter().enumerate() {
                let decay = (-s * tau).exp();
                let gain = -(-s * tau).exp_m1() / s;
                let y = &mut self.modes[i * len..(i + 1) * len];
                y.iter_mut().zip(d).for_each(|(y, &d)| *y = decay * *y + gain * d);
            }
        }
        self.pending = Some(diff);
        self.pushed += 1;
        Ok(())
    }

    /// History operator of `family` for the step `t_n -> t_{n+1}`.
    pub fn eval(&self, family: WeightFamily, n: usize) -> Result<Field> {
        if n != self.pushed {
            return Err(Error::History(format!(
                "history holds {} intervals, evaluation requested for step {n}",
                self.pushed
            )));
        }
        if n >= self.mesh.steps() {
            return Err(Error::History(format!("step {n} beyond the mesh")));
        }
        let mut out = Field::zeros(&self.grid);
        let Some(last) = &self.pending else {
            return Ok(out);
        };
        out.axpy(weight_entry(family, &self.mesh, n, 1, self.approx.alpha), last);
        if n < 2 {
            return Ok(out);
        }
        let mesh = &self.mesh;
        let tau_next = mesh.tau(n + 1);
        let tau_last = mesh.tau(n);
        let len = self.grid.len();
        let acc = out.values_mut();
        for (i, (&s, &w)) in self.approx.nodes.iter().zip(&self.approx.weights).enumerate() {
            // modes are anchored at t_{n-1}
            let factor = match family {
                WeightFamily::L1 => (-s * (tau_last + tau_next)).exp(),
                WeightFamily::L1Cn => (-s * (tau_last + 0.5 * tau_next)).exp(),
                WeightFamily::L1Plus => {
                    let x = s * tau_next;
                    let avg = if x < 1e-8 { 1.0 - 0.5 * x } else { -(-x).exp_m1() / x };
                    (-s * tau_last).exp() * avg
                }
            };
            let c = self.inv_gamma * w * factor;
            if c == 0.0 {
                continue;
            }
            let y = &self.modes[i * len..(i + 1) * len];
            acc.iter_mut().zip(y).for_each(|(a, &y)| *a += c * y);
        }
        Ok(out)
    }
}

/// Either history representation, chosen per solver run.
#[derive(Debug, Clone)]
pub enum HistoryStore {
    /// Classical time derivative: no memory.
    None,
    Direct {
        buffer: HistoryBuffer,
        mesh: Arc<TimeMesh>,
        alpha: f64,
    },
    Soe(Box<SoeHistory>),
}

impl HistoryStore {
    pub fn direct(grid: &Arc<SpatialGrid>, mesh: &Arc<TimeMesh>, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(HistoryStore::Direct {
            buffer: HistoryBuffer::new(grid),
            mesh: Arc::clone(mesh),
            alpha,
        })
    }

    pub fn soe(grid: &Arc<SpatialGrid>, mesh: &Arc<TimeMesh>, alpha: f64, tol: f64) -> Result<Self> {
        Ok(HistoryStore::Soe(Box::new(SoeHistory::new(grid, mesh, alpha, tol)?)))
    }

    pub fn push(&mut self, diff: Field) -> Result<()> {
        match self {
            HistoryStore::None => Ok(()),
            HistoryStore::Direct { buffer, .. } => buffer.push(diff),
            HistoryStore::Soe(soe) => soe.update(diff),
        }
    }

    /// History operator for the step `t_n -> t_{n+1}`.
    pub fn eval(&self, family: WeightFamily, n: usize, grid: &Arc<SpatialGrid>) -> Result<Field> {
        match self {
            HistoryStore::None => Ok(Field::zeros(grid)),
            HistoryStore::Direct { buffer, mesh, alpha } => {
                if buffer.len() != n {
                    return Err(Error::History(format!(
                        "history holds {} intervals, evaluation requested for step {n}",
                        buffer.len()
                    )));
                }
                if n == 0 {
                    return Ok(Field::zeros(grid));
                }
                let weights = crate::timegrid::weights(family, mesh, n, *alpha)?;
                direct_history(buffer, &weights)
            }
            HistoryStore::Soe(soe) => soe.eval(family, n),
        }
    }

    /// Fields held in memory.
    pub fn stored_fields(&self) -> usize {
        match self {
            HistoryStore::None => 0,
            HistoryStore::Direct { buffer, .. } => buffer.len(),
            HistoryStore::Soe(soe) => soe.stored_fields(),
        }
    }

    /// Field updates performed by one evaluation at step `n`.
    pub fn eval_cost(&self, n: usize) -> usize {
        match self {
            HistoryStore::None => 0,
            HistoryStore::Direct { .. } => n,
            HistoryStore::Soe(soe) => soe.approx.len() + 1,
        }
    }
}
