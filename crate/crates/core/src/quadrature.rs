//! Gauss–Legendre rules and composite panel integration for smooth 1-D
//! integrands.

use alloc::vec::Vec;

use crate::math::{FloatExt, PI};

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// n-point rule on [−1, 1] (Newton iteration on P_n from Chebyshev
    /// guesses).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫_a^b f.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Composite rule over consecutive breakpoints.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, breaks: &[f64], mut f: F) -> f64 {
        breaks
            .windows(2)
            .map(|w| self.integrate(w[0], w[1], &mut f))
            .sum()
    }

    /// Mapped nodes and weights for a composite rule, useful when the same
    /// abscissae feed several integrals.
    pub fn panel_points(&self, breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::with_capacity(self.len() * breaks.len());
        let mut ws = Vec::with_capacity(self.len() * breaks.len());
        for w in breaks.windows(2) {
            let c = 0.5 * (w[0] + w[1]);
            let h = 0.5 * (w[1] - w[0]);
            for (x, wt) in self.nodes.iter().zip(&self.weights) {
                xs.push(c + h * x);
                ws.push(wt * h);
            }
        }
        (xs, ws)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Breakpoints on [0, b] refined geometrically towards 0 starting at scale
/// `s`, then uniform panels of width ≤ `max_width`.
pub fn graded_breaks(s: f64, b: f64, max_width: f64) -> Vec<f64> {
    let mut v = alloc::vec![0.0];
    let mut x = (s / 64.0).min(b);
    while x < b.min(4.0 * s) {
        v.push(x);
        x *= 1.5;
    }
    let start = *v.last().unwrap();
    let n = (((b - start) / max_width).ceil() as usize).max(1);
    for k in 1..=n {
        v.push(start + (b - start) * k as f64 / n as f64);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        let g = GaussLegendre::new(8);
        // degree 15 exact
        let v = g.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let s: f64 = g.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_integrand() {
        let g = GaussLegendre::new(20);
        let v = g.integrate_panels(&graded_breaks(0.1, 30.0, 1.0), |x| (-x).exp());
        assert!((v - (1.0 - (-30f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn odd_point_count_has_zero_node() {
        let g = GaussLegendre::new(5);
        assert!(g.nodes[2].abs() < 1e-15);
        let v = g.integrate(-1.0, 1.0, |x| x * x * x * x);
        assert!((v - 0.4).abs() < 1e-14);
    }
}
