//! Gauss rules on `[-1, 1]` built with the Golub–Welsch eigenvalue method.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Nodes and weights of an `n`-point Gauss rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss–Legendre rule, weight 1 on `[-1, 1]`.
    pub fn legendre(n: usize) -> Self {
        Self::jacobi(n, 0.0, 0.0)
    }

    /// Gauss–Jacobi rule for the weight `(1 - x)^a (1 + x)^b` on `[-1, 1]`, `a, b > -1`.
    pub fn jacobi(n: usize, a: f64, b: f64) -> Self {
        assert!(n >= 1, "a Gauss rule needs at least one node");
        assert!(a > -1.0 && b > -1.0, "Jacobi exponents must exceed -1");
        let ab = a + b;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            jac[(k, k)] = if (s * (s + 2.0)).abs() < 1e-300 || k == 0 {
                (b - a) / (ab + 2.0)
            } else {
                (b * b - a * a) / (s * (s + 2.0))
            };
            if k + 1 < n {
                let k1 = kf + 1.0;
                let s1 = 2.0 * k1 + ab;
                let beta = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + ab) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0));
                let off = beta.sqrt();
                jac[(k, k + 1)] = off;
                jac[(k + 1, k)] = off;
            }
        }
        let mu0 =
            ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(ab + 2.0)).exp();
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        GaussRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` against the rule's weight, mapped affinely to `[lo, hi]`.
    ///
    /// The weight itself is not rescaled: for Jacobi rules the caller accounts
    /// for the `((hi - lo) / 2)^(a + b)` factor.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = GaussRule::legendre(6);
        // degree 11 is the exactness limit of a 6-point rule
        let v = rule.integrate(0.0, 2.0, |x| x.powi(11));
        assert!((v - 2f64.powi(12) / 12.0).abs() < 1e-11 * 341.0);
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_weights_sum_to_moment() {
        // ∫_{-1}^{1} (1+x)^{-1/2} dx = 2·√2
        let rule = GaussRule::jacobi(12, 0.0, -0.5);
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 2.0 * 2f64.sqrt()).abs() < 1e-13);
        // ∫ (1+x)^{-1/2} x² dx = 2√2·(1 - 4/3 + 4/5)·... checked against the beta function
        let v: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x * x).sum();
        // substitute u = 1 + x: ∫_0^2 u^{-1/2}(u-1)^2 du = 2^{5/2}/(5/2) - 2·2^{3/2}/(3/2) + 2^{1/2}/(1/2)
        let exact = 2f64.powf(2.5) / 2.5 - 2.0 * 2f64.powf(1.5) / 1.5 + 2f64.sqrt() / 0.5;
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn nodes_are_sorted_and_interior() {
        let rule = GaussRule::jacobi(20, -0.3, 0.7);
        assert!(rule.nodes.windows(2).all(|p| p[0] < p[1]));
        assert!(rule.nodes.iter().all(|x| x.abs() < 1.0));
        assert!(rule.weights.iter().all(|&w| w > 0.0));
    }
}
