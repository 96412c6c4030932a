//! Time meshes and the quadrature weights of the discrete Caputo operators.
//!
//! All three weight families are integrals of the kernel
//! `(t - s)^(-α) / Γ(1 - α)` against piecewise-linear interpolants, so every
//! entry is strictly positive. Entry `b[0]` is the local weight for the step
//! `t_n -> t_{n+1}`; entry `b[n - k]` multiplies the difference quotient of the
//! interval `[t_k, t_{k+1}]`.

use std::sync::OnceLock;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

/// How a mesh was built.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshKind {
    Uniform,
    Graded { r: f64 },
    Composite { segments: Vec<MeshSegment> },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSegment {
    Graded { steps: usize, r: f64, end: f64 },
    Uniform { dt: f64, end: f64 },
}

/// A strictly increasing grid `0 = t_0 < t_1 < ... < t_M = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    points: Vec<f64>,
    kind: MeshKind,
}

impl TimeMesh {
    /// Graded mesh `t_n = (n / M)^r T`; `r = 1` gives the uniform mesh.
    pub fn graded(steps: usize, r: f64, t_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Mesh("step count must be positive".into()));
        }
        if !(r >= 1.0) || !r.is_finite() {
            return Err(Error::Mesh(format!("grading exponent must be >= 1, got {r}")));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::Mesh(format!("horizon must be positive, got {t_end}")));
        }
        let points = graded_points(steps, r, t_end);
        let kind = if r == 1.0 {
            MeshKind::Uniform
        } else {
            MeshKind::Graded { r }
        };
        Ok(TimeMesh { points, kind })
    }

    pub fn uniform(steps: usize, t_end: f64) -> Result<Self> {
        Self::graded(steps, 1.0, t_end)
    }

    /// Graded points on `[0, t1]` followed by steps of `dt` up to `t_end`.
    ///
    /// When `dt` does not divide `t_end - t1` the last step is shortened.
    pub fn composite(steps: usize, r: f64, t1: f64, dt: f64, t_end: f64) -> Result<Self> {
        if !(t1 < t_end) {
            return Err(Error::Mesh(format!(
                "graded part must end before the horizon ({t1} >= {t_end})"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Mesh(format!("uniform step must be positive, got {dt}")));
        }
        let mut points = Self::graded(steps, r, t1)?.points;
        let span = t_end - t1;
        let count = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
        for k in 1..count {
            points.push(t1 + k as f64 * dt);
        }
        points.push(t_end);
        let kind = MeshKind::Composite {
            segments: vec![
                MeshSegment::Graded { steps, r, end: t1 },
                MeshSegment::Uniform { dt, end: t_end },
            ],
        };
        Ok(TimeMesh { points, kind })
    }

    /// Mesh from explicit points; they must start at 0 and strictly increase.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Mesh("a mesh needs at least two points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::Mesh(format!("mesh must start at 0, got {}", points[0])));
        }
        if let Some(w) = points.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::Mesh(format!(
                "mesh points must strictly increase ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(TimeMesh {
            points,
            kind: MeshKind::Custom,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn kind(&self) -> &MeshKind {
        &self.kind
    }

    /// Number of steps `M`.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn t(&self, n: usize) -> f64 {
        self.points[n]
    }

    /// Step size `τ_n = t_n - t_{n-1}` for `n >= 1`.
    pub fn tau(&self, n: usize) -> f64 {
        self.points[n] - self.points[n - 1]
    }

    pub fn min_step(&self) -> f64 {
        (1..=self.steps()).map(|n| self.tau(n)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_step(&self) -> f64 {
        (1..=self.steps()).map(|n| self.tau(n)).fold(0.0, f64::max)
    }

    pub fn is_uniform(&self) -> bool {
        let (lo, hi) = (self.min_step(), self.max_step());
        hi - lo <= 1e-12 * hi
    }
}

fn graded_points(steps: usize, r: f64, t_end: f64) -> Vec<f64> {
    let m = steps as f64;
    let mut points: Vec<f64> = (0..=steps)
        .map(|n| {
            let s = n as f64 / m;
            if r == 1.0 {
                s * t_end
            } else {
                s.powf(r) * t_end
            }
        })
        .collect();
    points[steps] = t_end;
    points
}

/// The three discrete fractional operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightFamily {
    /// Kernel evaluated at `t_{n+1}`.
    L1,
    /// Kernel evaluated at the midpoint `t_{n+1/2}`.
    L1Cn,
    /// Kernel averaged over `[t_n, t_{n+1}]`.
    L1Plus,
}

/// Weights for advancing from `t_n` to `t_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadWeights {
    pub family: WeightFamily,
    pub n: usize,
    pub b: Vec<f64>,
}

impl QuadWeights {
    pub fn local(&self) -> f64 {
        self.b[0]
    }

    /// Weight multiplying the difference quotient of interval `k` (`k < n`).
    pub fn history(&self, k: usize) -> f64 {
        self.b[self.n - k]
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "fractional order must lie in (0, 1), got {alpha}"
        )))
    }
}

fn check_step(mesh: &TimeMesh, n: usize) -> Result<()> {
    if n < mesh.steps() {
        Ok(())
    } else {
        Err(Error::Mesh(format!(
            "step index {n} out of range for a mesh with {} steps",
            mesh.steps()
        )))
    }
}

/// `(lo + gap)^p - lo^p` without cancellation when `gap << lo`.
pub(crate) fn pow_diff(lo: f64, gap: f64, p: f64) -> f64 {
    if lo <= 0.0 {
        gap.powf(p)
    } else {
        lo.powf(p) * (p * (gap / lo).ln_1p()).exp_m1()
    }
}

fn far_field_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::legendre(16))
}

/// A single weight entry `b[j]` of the given family, `0 <= j <= n`.
pub fn weight_entry(family: WeightFamily, mesh: &TimeMesh, n: usize, j: usize, alpha: f64) -> f64 {
    debug_assert!(j <= n && n < mesh.steps());
    let p = 1.0 - alpha;
    let tau = mesh.tau(n + 1);
    if j == 0 {
        return match family {
            WeightFamily::L1 => tau.powf(p) / gamma(2.0 - alpha),
            WeightFamily::L1Cn => tau.powf(p) / (gamma(2.0 - alpha) * 2f64.powf(p)),
            WeightFamily::L1Plus => tau.powf(p) / gamma(3.0 - alpha),
        };
    }
    let k = n - j;
    let d = mesh.tau(k + 1);
    // distance from the end of interval k to t_n
    let gap = mesh.t(n) - mesh.t(k + 1);
    match family {
        WeightFamily::L1 => pow_diff(gap + tau, d, p) / gamma(2.0 - alpha),
        WeightFamily::L1Cn => pow_diff(gap + 0.5 * tau, d, p) / gamma(2.0 - alpha),
        WeightFamily::L1Plus => l1plus_entry(gap, d, tau, alpha),
    }
}

/// `(1/(Γ(1-α) τ)) ∫_{t_n}^{t_{n+1}} ∫_{t_k}^{t_{k+1}} (t - s)^(-α) ds dt` with
/// `gap = t_n - t_{k+1}`, `d = τ_{k+1}`, `tau = τ_{n+1}`.
fn l1plus_entry(gap: f64, d: f64, tau: f64, alpha: f64) -> f64 {
    let p = 1.0 - alpha;
    let (short, long) = if d <= tau { (d, tau) } else { (tau, d) };
    if gap >= short {
        // kernel is analytic on the short side; integrate the inner closed form
        let integral = far_field_rule().integrate(0.0, short, |u| pow_diff(gap + u, long, p));
        integral / (gamma(2.0 - alpha) * tau)
    } else {
        let q = 2.0 - alpha;
        (pow_diff(gap + long, short, q) - pow_diff(gap, short, q)) / (gamma(3.0 - alpha) * tau)
    }
}

fn family_weights(family: WeightFamily, mesh: &TimeMesh, n: usize, alpha: f64) -> Result<QuadWeights> {
    check_alpha(alpha)?;
    check_step(mesh, n)?;
    let b = (0..=n).map(|j| weight_entry(family, mesh, n, j, alpha)).collect();
    Ok(QuadWeights { family, n, b })
}

/// L1 weights at `t_{n+1}`.
pub fn l1_weights(mesh: &TimeMesh, n: usize, alpha: f64) -> Result<QuadWeights> {
    family_weights(WeightFamily::L1, mesh, n, alpha)
}

/// L1-CN weights at `t_{n+1/2}`.
pub fn l1cn_weights(mesh: &TimeMesh, n: usize, alpha: f64) -> Result<QuadWeights> {
    family_weights(WeightFamily::L1Cn, mesh, n, alpha)
}

/// L1+ weights, time-averaged over `[t_n, t_{n+1}]`.
pub fn l1plus_weights(mesh: &TimeMesh, n: usize, alpha: f64) -> Result<QuadWeights> {
    family_weights(WeightFamily::L1Plus, mesh, n, alpha)
}

pub fn weights(family: WeightFamily, mesh: &TimeMesh, n: usize, alpha: f64) -> Result<QuadWeights> {
    family_weights(family, mesh, n, alpha)
}
