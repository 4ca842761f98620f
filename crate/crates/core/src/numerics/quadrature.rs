use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Tricomi initial guess.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::usage("gauss_legendre", "n_nodes must be >= 1"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs mapped affinely onto `[lo, hi]`.
    pub fn on(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (hi + lo);
        let h = 0.5 * (hi - lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (pn, pn1) = if n == 1 { (x, 1.0) } else { (p1, p0) };
    let d = n as f64 * (x * pn - pn1) / (x * x - 1.0);
    (pn, d)
}

/// Nodes and weights of the `n_nodes`-point rule on `[lo, hi]`.
pub fn gauss_legendre(n_nodes: usize, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
    if !(lo < hi) {
        return Err(Error::usage(
            "gauss_legendre",
            format!("empty interval [{lo}, {hi}]"),
        ));
    }
    Ok(GaussLegendre::new(n_nodes)?.on(lo, hi).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(n: usize, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        gauss_legendre(n, lo, hi)
            .unwrap()
            .into_iter()
            .map(|(x, w)| w * f(x))
            .sum()
    }

    #[test]
    fn midpoint_rule() {
        let r = gauss_legendre(1, -1.0, 1.0).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].0.abs() < 1e-16);
        assert!((r[0].1 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_nodes_exact_for_cubics() {
        assert!((integrate(2, 0.0, 1.0, |x| x * x) - 1.0 / 3.0).abs() < 1e-15);
        assert!((integrate(2, 0.0, 1.0, |x| x * x * x) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exponential_twenty_nodes() {
        let v = integrate(20, 0.0, 1.0, f64::exp);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn polynomial_degree_exactness() {
        for n in [3usize, 8, 33, 64, 200] {
            let deg = 2 * n - 1;
            // int_{-1}^{1} x^deg-1 (even) = 2/deg
            let v = integrate(n, -1.0, 1.0, |x| x.powi(deg as i32 - 1));
            assert!((v - 2.0 / deg as f64).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn weights_sum_for_large_rules() {
        for n in [512usize, 4096] {
            let s: f64 = gauss_legendre(n, 0.0, 1.0)
                .unwrap()
                .iter()
                .map(|p| p.1)
                .sum();
            assert!((s - 1.0).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn bad_arguments() {
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
        assert!(gauss_legendre(4, 1.0, 1.0).is_err());
    }
}
