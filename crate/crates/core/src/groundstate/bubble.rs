use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::grid::{dist4, Field, Grid, Point};
use crate::math::{FloatExt, PI, SPHERE3_AREA};
use crate::params::{smoothstep_down, smoothstep_down_prime};
use crate::quadrature::{graded_breaks, GaussLegendre};
use crate::{Error, Result};

const SQRT8: f64 = 2.828_427_124_746_190_1;

/// V_σ(r) = 2√2σ/(σ² + r²), which solves −ΔV = V³ in ℝ⁴.
pub fn bubble(sigma: f64, r: f64) -> f64 {
    SQRT8 * sigma / (sigma * sigma + r * r)
}

pub fn bubble_prime(sigma: f64, r: f64) -> f64 {
    let q = sigma * sigma + r * r;
    -2.0 * SQRT8 * sigma * r / (q * q)
}

/// φ(|x−c|/R)·V_σ(|x−c|) with φ the quintic cut-off (1 on [0, ½], 0 past 1).
pub fn truncated_bubble(sigma: f64, center: &Point, cutoff_radius: f64, grid: &Arc<Grid>) -> Result<Field> {
    if !(sigma > 0.0 && cutoff_radius > 0.0) {
        return Err(Error::Domain("σ and the cut-off radius must be positive".into()));
    }
    if grid.is_radial() && crate::grid::norm4(center) > 0.0 {
        return Err(Error::Usage("radial grids need the bubble at the origin".into()));
    }
    if grid.domain_dist(center) < cutoff_radius * (1.0 - 1e-12) {
        return Err(Error::Geometry("cut-off ball leaves the domain".into()));
    }
    Ok(Field::from_fn(grid, |x| {
        let r = dist4(x, center);
        smoothstep_down(2.0 * r / cutoff_radius) * bubble(sigma, r)
    }))
}

/// Radial integrals (∫|∇v|², ∫v⁴, ∫v²) of the truncated bubble.
fn truncated_integrals(sigma: f64, cutoff: f64, gl: &GaussLegendre) -> (f64, f64, f64) {
    let breaks = graded_breaks(sigma, cutoff, cutoff / 64.0);
    let (xs, ws) = gl.panel_points(&breaks);
    let (mut g, mut q, mut l) = (0.0, 0.0, 0.0);
    for (r, w) in xs.iter().zip(&ws) {
        let s = 2.0 * r / cutoff;
        let phi = smoothstep_down(s);
        let v = phi * bubble(sigma, *r);
        let dv = 2.0 / cutoff * smoothstep_down_prime(s) * bubble(sigma, *r) + phi * bubble_prime(sigma, *r);
        let r3 = r * r * r;
        g += w * dv * dv * r3;
        q += w * v.powi(4) * r3;
        l += w * v * v * r3;
    }
    (SPHERE3_AREA * g, SPHERE3_AREA * q, SPHERE3_AREA * l)
}

/// ‖∇v_σ‖₂² / ‖v_σ‖₄² for the truncated bubble.
pub fn truncated_ratio(sigma: f64, cutoff: f64, order: usize) -> f64 {
    let (g, q, _) = truncated_integrals(sigma, cutoff, &GaussLegendre::new(order));
    g / q.sqrt()
}

/// ‖v_σ‖₂² for the truncated bubble.
pub fn truncated_l2_sq(sigma: f64, cutoff: f64, order: usize) -> f64 {
    truncated_integrals(sigma, cutoff, &GaussLegendre::new(order)).2
}

/// The same ratio for the untruncated bubble, from the substitution
/// r = tan θ which turns both radial integrals into trigonometric
/// polynomials on [0, π/2].
pub fn exact_bubble_ratio(order: usize) -> f64 {
    let gl = GaussLegendre::new(order);
    let breaks: Vec<f64> = (0..=8).map(|k| 0.5 * PI * k as f64 / 8.0).collect();
    let grad = gl.integrate_panels(&breaks, |t| {
        let r = t.sin() / t.cos();
        let sec2 = 1.0 / (t.cos() * t.cos());
        bubble_prime(1.0, r).powi(2) * r * r * r * sec2
    });
    let quartic = gl.integrate_panels(&breaks, |t| {
        let r = t.sin() / t.cos();
        let sec2 = 1.0 / (t.cos() * t.cos());
        bubble(1.0, r).powi(4) * r * r * r * sec2
    });
    SPHERE3_AREA * grad / (SPHERE3_AREA * quartic).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevQuadrature {
    /// Bubble widths, each half the previous.
    pub sigmas: Vec<f64>,
    pub cutoff: f64,
    /// Gauss–Legendre points per panel.
    pub order: usize,
}

impl Default for SobolevQuadrature {
    fn default() -> Self {
        SobolevQuadrature {
            sigmas: alloc::vec![0.2, 0.1, 0.05, 0.025],
            cutoff: 1.0,
            order: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevEstimate {
    pub s: f64,
    pub error_estimate: f64,
    pub sigmas: Vec<f64>,
    pub ratios: Vec<f64>,
    /// (Q(σ_{n−2}) − S)/(Q(σ_{n−1}) − S); 4 for an O(σ²) error.
    pub gap_ratio: f64,
    pub warning: Option<String>,
}

/// S from truncated-bubble ratios Q(σ) = S + aσ² + bσ⁴ + …, Richardson
/// extrapolated in σ².
pub fn sobolev_constant(spec: &SobolevQuadrature) -> Result<SobolevEstimate> {
    let n = spec.sigmas.len();
    if n < 2 || spec.sigmas.iter().any(|s| !(*s > 0.0)) || !(spec.cutoff > 0.0) {
        return Err(Error::Usage("need at least two positive σ values and a positive cut-off".into()));
    }
    for w in spec.sigmas.windows(2) {
        if (w[1] - 0.5 * w[0]).abs() > 1e-12 * w[0] {
            return Err(Error::Usage("σ values must halve at each step".into()));
        }
    }
    let gl = GaussLegendre::new(spec.order);
    let ratios: Vec<f64> = spec
        .sigmas
        .iter()
        .map(|&s| {
            let (g, q, _) = truncated_integrals(s, spec.cutoff, &gl);
            g / q.sqrt()
        })
        .collect();
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut row = alloc::vec![ratios[k]];
        for j in 1..=k {
            let f = 4f64.powi(j as i32);
            let v = (f * row[j - 1] - table[k - 1][j - 1]) / (f - 1.0);
            row.push(v);
        }
        table.push(row);
    }
    let last = &table[n - 1];
    let s = last[n - 1];
    let error_estimate = (last[n - 1] - last[n - 2]).abs();
    let gap_ratio = (ratios[n - 2] - s) / (ratios[n - 1] - s);
    let gaps: Vec<f64> = ratios.iter().map(|q| q - s).collect();
    let monotone = gaps.windows(2).all(|w| w[0].signum() == w[1].signum() && w[1].abs() < w[0].abs());
    Ok(SobolevEstimate {
        s,
        error_estimate,
        sigmas: spec.sigmas.clone(),
        ratios,
        gap_ratio,
        warning: (!monotone).then(|| String::from("extrapolation sequence is not monotone")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;

    #[test]
    fn closed_form_and_oracle() {
        let exact = (32.0f64 / 3.0).sqrt() * PI;
        assert!((exact_bubble_ratio(20) - exact).abs() < 1e-13 * exact);
        let est = sobolev_constant(&SobolevQuadrature::default()).unwrap();
        assert!((est.s - exact_bubble_ratio(20)).abs() < 1e-6 * exact);
        assert!((est.gap_ratio - 4.0).abs() < 1.0, "{}", est.gap_ratio);
        assert!(est.warning.is_none());
        assert!(est.ratios.iter().all(|q| *q > est.s));
    }

    #[test]
    fn dilation_invariance() {
        let a = truncated_ratio(0.1, 1.0, 20);
        let b = truncated_ratio(0.2, 2.0, 20);
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn bubble_solves_critical_equation() {
        // −V'' − 3V'/r = V³ checked by central differences
        let h = 1e-4;
        for r in [0.3, 1.0, 2.5] {
            let lap = (bubble(1.0, r + h) - 2.0 * bubble(1.0, r) + bubble(1.0, r - h)) / (h * h)
                + 3.0 / r * bubble_prime(1.0, r);
            assert!((-lap - bubble(1.0, r).powi(3)).abs() < 1e-6);
        }
    }

    #[test]
    fn truncated_bubble_field() {
        let g = Grid::radial(RadialGrid::uniform(1.0, 400)).unwrap();
        let v = truncated_bubble(0.1, &[0.0; 4], 1.0, &g).unwrap();
        assert!((v.values()[0] - SQRT8 / 0.1).abs() < 1e-12);
        for (c, x) in g.coords().iter().zip(v.values()) {
            if c[0] >= 1.0 {
                assert_eq!(*x, 0.0);
            }
        }
        assert!(truncated_bubble(0.1, &[0.0; 4], 1.5, &g).is_err());
    }

    #[test]
    fn l2_norm_has_logarithmic_leading_term() {
        // ‖v_σ‖² = 8π²σ²(ln σ⁻² + c) + O(σ⁴); the offsets c(σ) must settle
        let c: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|s| truncated_l2_sq(*s, 1.0, 20) / (8.0 * PI * PI * s * s) - (1.0 / (s * s)).ln())
            .collect();
        let d: Vec<f64> = c.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(d[2] < 0.3 * d[1] && d[1] < 0.3 * d[0], "{c:?}");
        assert!(d[2] < 3e-3, "{c:?}");
    }
}
