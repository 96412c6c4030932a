#![allow(dead_code)]

use fracphase_core::spectral::{Field, SpatialGrid};
use fracphase_core::timegrid::{TimeMesh, WeightFamily};
use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use std::sync::Arc;

/// Adaptive tanh-sinh quadrature of `f` over an interval of length `len`.
///
/// `f` receives the distances `(u_a, u_b)` of the node from both ends, so
/// integrands singular at an endpoint can be evaluated without cancellation.
pub fn tanh_sinh<F: Fn(f64, f64) -> f64>(len: f64, tol: f64, f: F) -> f64 {
    let term = |x: f64| -> f64 {
        let s = PI * x.sinh();
        // logistic split of the interval: u_a = len σ(s), u_b = len σ(-s)
        let (ea, eb) = ((-s).exp(), s.exp());
        let (sa, sb) = (1.0 / (1.0 + ea), 1.0 / (1.0 + eb));
        let (ua, ub) = (len * sa, len * sb);
        if ua == 0.0 || ub == 0.0 {
            return 0.0;
        }
        let w = len * PI * x.cosh() * sa * sb;
        if w == 0.0 {
            return 0.0;
        }
        w * f(ua, ub)
    };
    // Σ term(±(offset + k step)), k >= 0, until the terms become negligible
    let sweep = |offset: f64, step: f64| -> f64 {
        let mut total = 0.0;
        for sign in [1.0, -1.0] {
            let mut k = 0usize;
            let mut quiet = 0;
            loop {
                let x = sign * (offset + k as f64 * step);
                if offset == 0.0 && k == 0 && sign < 0.0 {
                    k += 1;
                    continue;
                }
                let t = term(x);
                total += t;
                if t.abs() <= 1e-18 * total.abs() || x.abs() > 7.0 {
                    quiet += 1;
                    if quiet > 3 {
                        break;
                    }
                } else {
                    quiet = 0;
                }
                k += 1;
            }
        }
        total
    };
    let mut h = 0.5;
    let mut sum = sweep(0.0, h);
    let mut estimate = sum * h;
    for _ in 0..12 {
        h *= 0.5;
        // new nodes are the odd multiples of h
        sum += sweep(h, 2.0 * h);
        let next = sum * h;
        if (next - estimate).abs() <= tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Weight entry `b[j]` from its defining integral, by nested numeric quadrature.
pub fn weight_oracle(family: WeightFamily, mesh: &TimeMesh, n: usize, j: usize, alpha: f64) -> f64 {
    let tol = 1e-13;
    let k = n - j;
    let tau = mesh.tau(n + 1);
    let d = mesh.tau(k + 1);
    let kernel = |dist: f64| dist.powf(-alpha) / gamma(1.0 - alpha);
    match family {
        WeightFamily::L1 => {
            // ∫_{t_k}^{t_{k+1}} (t_{n+1} - s)^{-α} ds
            let off = mesh.t(n + 1) - mesh.t(k + 1);
            let off = if j == 0 { 0.0 } else { off };
            tanh_sinh(d, tol, |_, ub| kernel(off + ub))
        }
        WeightFamily::L1Cn => {
            if j == 0 {
                tanh_sinh(0.5 * tau, tol, |_, ub| kernel(ub))
            } else {
                let off = mesh.t(n) - mesh.t(k + 1) + 0.5 * tau;
                tanh_sinh(d, tol, |_, ub| kernel(off + ub))
            }
        }
        WeightFamily::L1Plus => {
            // (1/τ) ∫_{t_n}^{t_{n+1}} ∫_{t_k}^{min(t_{k+1}, t)} (t - s)^{-α} ds dt
            let outer = if j == 0 {
                tanh_sinh(tau, tol, |w, _| tanh_sinh(w, tol, |_, ub| kernel(ub)))
            } else {
                let gap = mesh.t(n) - mesh.t(k + 1);
                tanh_sinh(tau, tol, |w, _| tanh_sinh(d, tol, |_, ub| kernel(gap + w + ub)))
            };
            outer / tau
        }
    }
}

/// Dense Fourier second-derivative matrix on `n` equispaced nodes of a period `len`.
pub fn fourier_d2(n: usize, len: f64) -> DMatrix<f64> {
    assert!(n.is_multiple_of(2));
    let h = 2.0 * PI / n as f64;
    let scale = (2.0 * PI / len).powi(2);
    DMatrix::from_fn(n, n, |i, j| {
        let v = if i == j {
            -PI * PI / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let m = i as i64 - j as i64;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            -sign / (2.0 * (m as f64 * h / 2.0).sin().powi(2))
        };
        v * scale
    })
}

/// Dense 2-D periodic Laplacian, row-major with `x` fastest.
pub fn dense_laplacian(grid: &Arc<SpatialGrid>) -> DMatrix<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let dom = grid.domain();
    let dx = fourier_d2(nx, dom.lx());
    let dy = fourier_d2(ny, dom.ly());
    let len = nx * ny;
    DMatrix::from_fn(len, len, |p, q| {
        let (ip, jp) = (p % nx, p / nx);
        let (iq, jq) = (q % nx, q / nx);
        let mut v = 0.0;
        if jp == jq {
            v += dx[(ip, iq)];
        }
        if ip == iq {
            v += dy[(jp, jq)];
        }
        v
    })
}

pub fn to_vec(f: &Field) -> DVector<f64> {
    DVector::from_column_slice(f.values())
}

pub fn max_abs_diff(a: &DVector<f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Print one acceptance line and return whether it passed.
pub fn verdict(id: u32, pass: bool, detail: &str) -> bool {
    println!("criterion {id}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
