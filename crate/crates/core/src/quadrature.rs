//! Gauss-Legendre rules.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gauss-Legendre rule mapped to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule<F> {
    pub nodes: Vec<F>,
    pub weights: Vec<F>,
}

impl<F: Real> QuadratureRule<F> {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("quadrature order must be at least 1".into()));
        }
        let mut nodes = vec![F::zero(); n];
        let mut weights = vec![F::zero(); n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map to [0,1]
            nodes[i] = F::lit(0.5 * (1.0 - x));
            nodes[n - 1 - i] = F::lit(0.5 * (1.0 + x));
            weights[i] = F::lit(0.5 * w);
            weights[n - 1 - i] = F::lit(0.5 * w);
        }
        Ok(QuadratureRule { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[lo, hi]`.
    pub fn integrate(&self, lo: F, hi: F, f: impl Fn(F) -> F) -> F {
        let h = hi - lo;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| *w * f(lo + h * *x))
            .sum::<F>()
            * h
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_up_to_2n_minus_1() {
        for n in 1..12 {
            let q = QuadratureRule::<f64>::gauss_legendre(n).unwrap();
            for k in 0..2 * n {
                let got = q.integrate(0.0, 1.0, |x| x.powi(k as i32));
                assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn three_point_nodes() {
        // classic values: 0, ±sqrt(3/5) with weights 8/9, 5/9 on [-1,1]
        let q = QuadratureRule::<f64>::gauss_legendre(3).unwrap();
        let s = (0.6f64).sqrt();
        assert!((q.nodes[0] - 0.5 * (1.0 - s)).abs() < 1e-15);
        assert!((q.nodes[1] - 0.5).abs() < 1e-15);
        assert!((q.weights[1] - 4.0 / 9.0).abs() < 1e-15);
        assert!((q.weights[0] - 5.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn f32_rule() {
        let q = QuadratureRule::<f32>::gauss_legendre(4).unwrap();
        let got = q.integrate(0.0, 2.0, |x| x * x * x);
        assert!((got - 4.0).abs() < 1e-5);
    }

    #[test]
    fn zero_order_rejected() {
        assert!(QuadratureRule::<f64>::gauss_legendre(0).is_err());
    }
}
