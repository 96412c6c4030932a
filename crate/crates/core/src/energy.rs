//! Free energies, the per-step energy log and the positivity diagnostic of
//! the fractional bilinear form.

use std::io::Write;
use std::path::Path;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::scheme::{SchemeConfig, SchemeState};
use crate::spectral::{grad_norm_sq, Field};
use crate::timegrid::check_alpha;

/// Double-well potential `(φ² - 1)² / 4`.
pub fn potential(phi: f64) -> f64 {
    let w = phi * phi - 1.0;
    0.25 * w * w
}

/// `∫ [coef/2 |∇φ|² + F(φ)]`.
pub fn bulk_energy(phi: &Field, coef: f64) -> f64 {
    let well: f64 = phi.values().iter().map(|&p| potential(p)).sum::<f64>() * phi.grid().cell_area();
    if coef == 0.0 {
        well
    } else {
        0.5 * coef * grad_norm_sq(phi) + well
    }
}

/// Ginzburg–Landau energy `∫ [ε²/2 |∇φ|² + F(φ)]`.
pub fn original_energy(phi: &Field, eps2: f64) -> f64 {
    bulk_energy(phi, eps2)
}

/// The discrete energy the scheme is guaranteed to dissipate.
///
/// `(ε² - θ²)/2 ‖∇φⁿ‖² + Rⁿ²`, plus `θ²/4 ‖∇(φⁿ - φⁿ⁻¹)‖²` for the
/// Crank–Nicolson schemes.
pub fn modified_energy(state: &SchemeState, config: &SchemeConfig) -> f64 {
    let mut e = state.r * state.r;
    let coef = config.eps2 - config.theta2;
    if coef != 0.0 {
        e += 0.5 * coef * grad_norm_sq(&state.phi);
    }
    if config.scheme.is_crank_nicolson() && config.theta2 > 0.0 {
        if let Some(prev) = &state.phi_prev {
            let d = Field::lin_comb(1.0, &state.phi, -1.0, prev);
            e += 0.25 * config.theta2 * grad_norm_sq(&d);
        }
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub n: usize,
    pub t: f64,
    pub original: f64,
    pub modified: f64,
    pub r: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub step_change: f64,
}

/// One row per time level, starting with the initial state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyReport {
    pub rows: Vec<EnergyRow>,
}

pub const ENERGY_CSV_HEADER: &str = "n,t,E,E_mod,R,phi_min,phi_max,step_change";

impl EnergyReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append the row for `state`; `step_change` is `‖φⁿ - φⁿ⁻¹‖`, zero at `n = 0`.
    pub fn record(&mut self, state: &SchemeState, config: &SchemeConfig, step_change: f64) -> Result<()> {
        let t = state.t();
        if let Some(last) = self.rows.last() {
            if !(t > last.t) {
                return Err(Error::InvalidParameter(format!(
                    "energy rows must advance in time: {t} after {}",
                    last.t
                )));
            }
        }
        self.rows.push(EnergyRow {
            n: state.n,
            t,
            original: original_energy(&state.phi, config.eps2),
            modified: modified_energy(state, config),
            r: state.r,
            phi_min: state.phi.min(),
            phi_max: state.phi.max(),
            step_change,
        });
        Ok(())
    }

    /// First step whose modified energy exceeds its predecessor by more than `rel_tol · (1 + |E|)`.
    pub fn first_increase(&self, rel_tol: f64) -> Option<(usize, f64, f64)> {
        self.rows.windows(2).find_map(|w| {
            let (a, b) = (w[0].modified, w[1].modified);
            (b - a > rel_tol * (1.0 + a.abs())).then_some((w[1].n, a, b))
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{ENERGY_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.n, r.t, r.original, r.modified, r.r, r.phi_min, r.phi_max, r.step_change
            )?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

const POSITIVITY_NODES: usize = 40;

/// `(1/Γ(1-α)) ∫_a^b ∫_a^s (s - σ)^(-α) ψ(σ) ψ(s) dσ ds` together with the
/// same integral of `|ψ(σ) ψ(s)|`, which serves as its natural scale.
pub fn bilinear_form<F: Fn(f64) -> f64>(alpha: f64, a: f64, b: f64, psi: F) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if !(b > a) {
        return Err(Error::InvalidParameter(format!("empty interval [{a}, {b}]")));
    }
    // inner: σ = a + (s - a)(1 + x)/2 absorbs (1 - x)^(-α); outer absorbs (s - a)^(1-α)
    let inner = GaussRule::jacobi(POSITIVITY_NODES, -alpha, 0.0);
    let outer = GaussRule::jacobi(POSITIVITY_NODES, 0.0, 1.0 - alpha);
    let half = 0.5 * (b - a);
    let mut value = 0.0;
    let mut scale = 0.0;
    for (&y, &wy) in outer.nodes.iter().zip(&outer.weights) {
        let s = a + half * (1.0 + y);
        let ps = psi(s);
        let (mut iv, mut ia) = (0.0, 0.0);
        for (&x, &wx) in inner.nodes.iter().zip(&inner.weights) {
            let p = psi(s - (s - a) * 0.5 * (1.0 - x));
            iv += wx * p;
            ia += wx * p.abs();
        }
        value += wy * ps * iv;
        scale += wy * ps.abs() * ia;
    }
    // (s-a)^{1-α} 2^{α-1} from the inner map, half^{2-α} from the outer map
    let factor = 2f64.powf(alpha - 1.0) * half.powf(2.0 - alpha) / gamma(1.0 - alpha);
    Ok((value * factor, scale * factor))
}

/// Smallest value of the bilinear form over the samples.
pub fn bilinear_positivity_check<F: Fn(f64) -> f64>(alpha: f64, a: f64, b: f64, samples: &[F]) -> Result<f64> {
    let mut min = f64::INFINITY;
    for psi in samples {
        min = min.min(bilinear_form(alpha, a, b, psi)?.0);
    }
    if samples.is_empty() {
        min = 0.0;
    }
    Ok(min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{SchemeKind, Solver};
    use crate::spectral::{BoundaryCondition, Domain, SpatialGrid};
    use crate::timegrid::TimeMesh;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn box2pi(n: usize) -> Arc<SpatialGrid> {
        SpatialGrid::new(n, n, Domain::square(0.0, 2.0 * PI), BoundaryCondition::Periodic).unwrap()
    }

    #[test]
    fn original_energy_examples() {
        let g = box2pi(32);
        assert_eq!(original_energy(&Field::constant(&g, 1.0), 0.1), 0.0);
        assert!((original_energy(&Field::zeros(&g), 0.1) - PI * PI).abs() < 1e-12);
        let s = Field::from_fn(&g, |x, _| x.sin());
        assert!((original_energy(&s, 1.0) - 11.0 * PI * PI / 8.0).abs() < 1e-10);
    }

    #[test]
    fn modified_energy_examples() {
        let g = box2pi(16);
        let mesh = Arc::new(TimeMesh::uniform(2, 1.0).unwrap());
        let cfg = SchemeConfig::new(SchemeKind::L1, 0.5, 0.1).unwrap().with_c0(4.0);
        let solver = Solver::new(cfg.clone(), g.clone(), mesh.clone()).unwrap();
        let st = solver.init_state(Field::constant(&g, 1.0)).unwrap();
        assert!((modified_energy(&st, &cfg) - 4.0).abs() < 1e-14);

        let mut st = solver.init_state(Field::from_fn(&g, |x, _| x.sin())).unwrap();
        st.r = 1.0;
        assert!((modified_energy(&st, &cfg) - (0.1 * PI * PI + 1.0)).abs() < 1e-12);

        let full = SchemeConfig::new(SchemeKind::L1, 0.5, 0.1)
            .unwrap()
            .with_theta2(0.1)
            .unwrap();
        assert!((modified_energy(&st, &full) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bilinear_form_of_constant() {
        let (v, s) = bilinear_form(0.5, 0.0, 1.0, |_| 1.0).unwrap();
        let exact = 4.0 / (3.0 * PI.sqrt());
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
        assert!((s - exact).abs() < 1e-12);
        assert_eq!(bilinear_form(0.5, 0.0, 1.0, |_| 0.0).unwrap().0, 0.0);
    }

    #[test]
    fn bilinear_form_of_linear_function() {
        // ψ(s) = s on [0,1]: ∫_0^1 s ∫_0^s (s-σ)^{-α} σ dσ ds = B(2, 1-α) / (4 - α)
        let alpha: f64 = 0.3;
        let (v, _) = bilinear_form(alpha, 0.0, 1.0, |s| s).unwrap();
        let beta = gamma(2.0) * gamma(1.0 - alpha) / gamma(3.0 - alpha);
        let exact = beta / (4.0 - alpha) / gamma(1.0 - alpha);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn csv_header_and_rows() {
        let mut rep = EnergyReport::new();
        rep.rows.push(EnergyRow {
            n: 0,
            t: 0.0,
            original: 1.0,
            modified: 2.0,
            r: 1.0,
            phi_min: -1.0,
            phi_max: 1.0,
            step_change: 0.0,
        });
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,t,E,E_mod,R,phi_min,phi_max,step_change\n0,"));
        assert_eq!(text.lines().count(), 2);
    }
}
