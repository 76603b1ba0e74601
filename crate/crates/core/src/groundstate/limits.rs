use serde::{Deserialize, Serialize};

use crate::math::FloatExt;
use crate::params::PhysParams;
use crate::{Error, Result};

/// Heuristic stand-ins for the regime constants β₀, β₁ and the α bound of
/// the existence theory, which the analysis leaves implicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeKnobs {
    pub beta0: f64,
    pub beta1: f64,
    pub alpha_guard: f64,
}

impl RegimeKnobs {
    pub fn defaults_for(params: &PhysParams) -> Self {
        RegimeKnobs {
            beta0: 0.2 * (params.mu1 * params.mu2).sqrt(),
            beta1: 2.0 * params.mu1.max(params.mu2),
            alpha_guard: 0.1,
        }
    }
}

/// Solves μ₁k₁ + βk₂ = 1, μ₂k₂ + βk₁ = 1.
pub fn k_system(mu1: f64, mu2: f64, beta: f64) -> Result<(f64, f64)> {
    let det = mu1 * mu2 - beta * beta;
    if !(det.abs() > 1e-14 * (mu1 * mu2).abs().max(beta * beta)) {
        return Err(Error::Singular(alloc::format!("β² = μ₁μ₂ (β = {beta})")));
    }
    Ok(((mu2 - beta) / det, (mu1 - beta) / det))
}

/// A₁ for the covered coupling ranges: S²/(4μ₁) + S²/(4μ₂) for β ≤ 0 and
/// (k₁+k₂)S²/4 for 0 < β < min μ or β > max μ.
pub fn a1(params: &PhysParams, s: f64) -> Result<f64> {
    let (mu1, mu2, beta) = (params.mu1, params.mu2, params.beta);
    let s2 = s * s;
    if beta <= 0.0 {
        return Ok(s2 / (4.0 * mu1) + s2 / (4.0 * mu2));
    }
    if beta < mu1.min(mu2) || beta > mu1.max(mu2) {
        let (k1, k2) = k_system(mu1, mu2, beta)?;
        return Ok((k1 + k2) * s2 / 4.0);
    }
    Err(Error::UnsupportedRegime(alloc::format!(
        "no closed form for A₁ with min(μ) ≤ β = {beta} ≤ max(μ)"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub s: f64,
    pub d1: f64,
    pub d2: f64,
    pub b: Option<f64>,
    pub b_prime: Option<f64>,
    pub a1: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
}

impl LimitConstants {
    pub fn new(params: &PhysParams, s: f64, d1: f64, d2: f64) -> Self {
        let k = k_system(params.mu1, params.mu2, params.beta).ok();
        LimitConstants {
            s,
            d1,
            d2,
            b: None,
            b_prime: None,
            a1: a1(params, s).ok(),
            k1: k.map(|k| k.0),
            k2: k.map(|k| k.1),
        }
    }

    /// Margins S²/(4μᵢ) − dᵢ.
    pub fn scalar_margins(&self, params: &PhysParams) -> [f64; 2] {
        let s2 = self.s * self.s;
        [s2 / (4.0 * params.mu1) - self.d1, s2 / (4.0 * params.mu2) - self.d2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// d₁,ε + ε⁴S²/(4μ₂) − c
    pub gap1: f64,
    /// d₂,ε + ε⁴S²/(4μ₁) − c
    pub gap2: f64,
    /// ε⁴A₁ − c, absent where A₁ has no closed form.
    pub gap_a: Option<f64>,
    pub min_gap: f64,
}

/// Gaps between the system level `c` and each competing threshold, with
/// `d_eps` the scalar levels on the same domain.
pub fn threshold_check(c: f64, constants: &LimitConstants, params: &PhysParams, d_eps: [f64; 2]) -> ThresholdReport {
    let e4 = params.epsilon.powi(4);
    let s2 = constants.s * constants.s;
    let gap1 = d_eps[0] + e4 * s2 / (4.0 * params.mu2) - c;
    let gap2 = d_eps[1] + e4 * s2 / (4.0 * params.mu1) - c;
    let gap_a = constants.a1.map(|a| e4 * a - c);
    let min_gap = gap_a.map_or(gap1.min(gap2), |g| gap1.min(gap2).min(g));
    ThresholdReport {
        gap1,
        gap2,
        gap_a,
        min_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(mu1: f64, mu2: f64, beta: f64, k: (f64, f64)) -> f64 {
        (mu1 * k.0 + beta * k.1 - 1.0).abs().max((mu2 * k.1 + beta * k.0 - 1.0).abs())
    }

    #[test]
    fn k_system_examples() {
        let k = k_system(1.0, 2.0, 0.0).unwrap();
        assert_eq!(k, (1.0, 0.5));
        let k = k_system(1.0, 1.0, 0.5).unwrap();
        assert!((k.0 - 2.0 / 3.0).abs() < 1e-15 && (k.1 - 2.0 / 3.0).abs() < 1e-15);
        assert!(residual(1.0, 1.0, 0.5, k) < 1e-15);
        let k = k_system(2.0, 3.0, 1.0).unwrap();
        assert!((k.0 - 0.4).abs() < 1e-15 && (k.1 - 0.2).abs() < 1e-15);
        assert!(residual(2.0, 3.0, 1.0, k) < 1e-15);
        assert!(matches!(k_system(1.0, 4.0, 2.0), Err(Error::Singular(_))));
        assert!(k_system(1.0, 4.0, -2.0).is_err());
    }

    #[test]
    fn a1_examples() {
        let s = 3.0;
        let p = PhysParams { mu1: 1.0, mu2: 1.0, beta: -0.3, ..Default::default() };
        assert!((a1(&p, s).unwrap() - s * s / 2.0).abs() < 1e-15);
        let p = PhysParams { beta: 0.5, ..p };
        assert!((a1(&p, s).unwrap() - s * s / 3.0).abs() < 1e-14);
        let p = PhysParams { mu1: 1.0, mu2: 2.0, beta: 1.5, ..p };
        assert!(matches!(a1(&p, s), Err(Error::UnsupportedRegime(_))));
        let p = PhysParams { beta: 1e-13, ..p };
        let q = PhysParams { beta: -1e-13, ..p };
        assert!((a1(&p, s).unwrap() - a1(&q, s).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn decoupled_threshold_sanity() {
        let p = PhysParams { beta: 0.0, epsilon: 0.5, ..Default::default() };
        let s = 10.0;
        let e4 = 0.5f64.powi(4);
        let d = [0.8 * e4 * s * s / 4.0, 0.7 * e4 * s * s / 4.0];
        let consts = LimitConstants::new(&p, s, d[0] / e4, d[1] / e4);
        let r = threshold_check(d[0] + d[1], &consts, &p, d);
        assert!(r.gap1 > 0.0 && r.gap2 > 0.0);
        assert!(r.gap_a.is_some());
        assert!(r.min_gap <= r.gap1.min(r.gap2));
    }
}
