use alloc::vec::Vec;

use serde::Serialize;

use crate::energy::{bessel_i1_scaled, ScalarMoments};
use crate::grid::{Field, Grid, RadialGrid};
use crate::math::{FloatExt, SPHERE3_AREA};
use crate::params::{Component, PhysParams};
use crate::{Error, Result};

const STEP: f64 = 2e-3;

/// RK4 step for a shot from u(0) = a: at most 1/40 of the bubble width
/// 2√2/a, so near-critical spikes stay resolved.
fn step_for(a: f64) -> f64 {
    let h = STEP.min(2.0 * core::f64::consts::SQRT_2 / a / 40.0);
    // an integer number of steps per STEP keeps output grids nested
    STEP / (STEP / h).ceil()
}

#[derive(Debug, Clone, Serialize)]
pub struct ShootingResult {
    #[serde(skip)]
    pub profile: Field,
    pub energy: f64,
    /// Simpson moments of the profile over the ball of radius r_max.
    pub moments: ScalarMoments,
    pub u0: f64,
    /// Radius past which the profile is the linearized tail ∝ K₁(√λ r)/r.
    pub cut_radius: f64,
}

#[derive(Debug, Clone, Copy)]
struct Nonlinearity {
    lambda: f64,
    mu: f64,
    alpha: f64,
    p: f64,
}

impl Nonlinearity {
    /// Δu = g(u) for radial entire solutions.
    fn g(&self, u: f64) -> f64 {
        let a = u.abs();
        let sub = if a == 0.0 { 0.0 } else { a.powf(self.p - 1.0) * u.signum() };
        self.lambda * u - self.mu * u * u * u - self.alpha * sub
    }

    fn dg(&self, u: f64) -> f64 {
        let a = u.abs();
        let sub = if a == 0.0 { 0.0 } else { (self.p - 1.0) * a.powf(self.p - 2.0) };
        self.lambda - 3.0 * self.mu * u * u - self.alpha * sub
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// u′ turned positive before u reached zero.
    Under,
    /// u crossed zero.
    Over,
    /// Neither event before r_max.
    Undecided,
}

/// Integrates u″ + 3u′/r = g(u), u(0) = a, u′(0) = 0 with RK4 from a
/// series start, optionally recording (u, u′) at every step.
fn shoot(f: &Nonlinearity, a: f64, r_max: f64, record: Option<&mut Vec<[f64; 2]>>) -> Shot {
    shoot_with_step(f, a, r_max, step_for(a), record)
}

fn shoot_with_step(f: &Nonlinearity, a: f64, r_max: f64, h: f64, record: Option<&mut Vec<[f64; 2]>>) -> Shot {
    let g0 = f.g(a);
    let b = g0 / 8.0;
    let c = f.dg(a) * g0 / 192.0;
    let mut u = a + b * h * h + c * h.powi(4);
    let mut du = 2.0 * b * h + 4.0 * c * h.powi(3);
    let mut rec = record;
    if let Some(v) = rec.as_deref_mut() {
        v.clear();
        v.push([a, 0.0]);
        v.push([u, du]);
    }
    let n = (r_max / h).round() as usize;
    let rhs = |r: f64, u: f64, du: f64| (du, f.g(u) - 3.0 * du / r);
    if du > 0.0 {
        return Shot::Under;
    }
    for k in 1..n {
        let r = k as f64 * h;
        let (k1u, k1v) = rhs(r, u, du);
        let (k2u, k2v) = rhs(r + 0.5 * h, u + 0.5 * h * k1u, du + 0.5 * h * k1v);
        let (k3u, k3v) = rhs(r + 0.5 * h, u + 0.5 * h * k2u, du + 0.5 * h * k2v);
        let (k4u, k4v) = rhs(r + h, u + h * k3u, du + h * k3v);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        du += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if let Some(v) = rec.as_deref_mut() {
            v.push([u, du]);
        }
        if u < 0.0 {
            return Shot::Over;
        }
        if du > 0.0 {
            return Shot::Under;
        }
    }
    Shot::Undecided
}

/// e^z K₁(z) (polynomial approximations with relative error below 3e−7).
pub fn k1_scaled(z: f64) -> f64 {
    if z >= 2.0 {
        let y = 2.0 / z;
        let poly = 1.253_314_14
            + y * (0.234_986_19
                + y * (-0.036_556_20
                    + y * (0.015_042_68 + y * (-0.007_803_53 + y * (0.003_256_14 + y * -0.000_682_45)))));
        poly / z.sqrt()
    } else {
        let y = 0.25 * z * z;
        let i1 = bessel_i1_scaled(z) * z.exp();
        let poly = 1.0
            + y * (0.154_431_44
                + y * (-0.672_785_79
                    + y * (-0.181_568_97 + y * (-0.019_194_02 + y * (-0.001_104_04 + y * -0.000_046_86)))));
        (z * (0.5 * z).ln() * i1 + poly) / z * z.exp()
    }
}

/// Radial ground state of −Δu + λu = μu³ + αu^{p−1} in ℝ⁴ by shooting on
/// u(0), with the profile reported on [0, r_max].
pub fn shooting_oracle(component: Component, params: &PhysParams, r_max: f64) -> Result<ShootingResult> {
    let f = Nonlinearity {
        lambda: params.lambda(component),
        mu: params.mu(component),
        alpha: params.alpha(component),
        p: params.p,
    };
    if !(f.lambda > 0.0 && f.mu > 0.0 && f.alpha >= 0.0 && params.p > 2.0 && params.p < 4.0) {
        return Err(Error::InvalidParams("shooting needs λ, μ > 0, α ≥ 0, 2 < p < 4".into()));
    }
    if !(r_max > 20.0 * STEP) {
        return Err(Error::Usage("r_max too small".into()));
    }
    let n_scan = 180;
    let amp = |k: usize| 1e-3 * 1e9f64.powf(k as f64 / n_scan as f64);
    let mut bracket = None;
    let mut prev = shoot(&f, amp(0), r_max, None);
    for k in 1..=n_scan {
        let cur = shoot(&f, amp(k), r_max, None);
        if prev == Shot::Under && cur != Shot::Under {
            bracket = Some((amp(k - 1), amp(k)));
            break;
        }
        prev = cur;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| Error::Bracket("no sign-crossing bracket for u(0) in [1e-3, 1e3]".into()))?;
    // one step for the whole bisection keeps the classification consistent
    let h = step_for(hi);
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        match shoot_with_step(&f, mid, r_max, h, None) {
            Shot::Under => lo = mid,
            Shot::Over => hi = mid,
            Shot::Undecided => {
                lo = mid;
                hi = mid;
            }
        }
    }
    let mut tr_lo = Vec::new();
    let mut tr_hi = Vec::new();
    shoot_with_step(&f, lo, r_max, h, Some(&mut tr_lo));
    shoot_with_step(&f, hi, r_max, h, Some(&mut tr_hi));
    let mut cut = tr_lo.len().min(tr_hi.len()) - 1;
    for j in 1..=cut {
        let (a, b) = (tr_lo[j][0], tr_hi[j][0]);
        if (a - b).abs() > 1e-7 * 0.5 * (a.abs() + b.abs()) {
            cut = j;
            break;
        }
    }
    // leave a margin where both trajectories still agree
    cut = cut.saturating_sub((1.0 / h).round() as usize).max(1);
    let rc = cut as f64 * h;
    let uc = 0.5 * (tr_lo[cut][0] + tr_hi[cut][0]);
    let sl = f.lambda.sqrt();
    let tail = |r: f64| -> f64 {
        let (z, zc) = (sl * r, sl * rc);
        uc * k1_scaled(z) / k1_scaled(zc) * (rc / r) * (-(z - zc)).exp()
    };
    let mut n = (r_max / h).round() as usize;
    n += n % 2;
    let mut u = Vec::with_capacity(n + 1);
    let mut du = Vec::with_capacity(n + 1);
    for j in 0..=n {
        if j <= cut {
            u.push(0.5 * (tr_lo[j][0] + tr_hi[j][0]));
            du.push(0.5 * (tr_lo[j][1] + tr_hi[j][1]));
        } else {
            let r = j as f64 * h;
            let d = 1e-5 * r;
            u.push(tail(r));
            du.push((tail(r + d) - tail(r - d)) / (2.0 * d));
        }
    }
    // composite Simpson on the uniform step grid
    let (mut norm_sq, mut sub, mut quartic) = (0.0, 0.0, 0.0);
    for j in 0..=n {
        let r = j as f64 * h;
        let w = if j == 0 || j == n {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        } * r
            * r
            * r;
        let x = u[j];
        norm_sq += w * (du[j] * du[j] + f.lambda * x * x);
        sub += w * x.abs().powf(f.p);
        quartic += w * x * x * x * x;
    }
    let c = SPHERE3_AREA * h / 3.0;
    let moments = ScalarMoments {
        norm_sq: c * norm_sq,
        sub: c * sub,
        quartic: c * quartic,
    };
    let energy = 0.5 * moments.norm_sq - f.alpha / f.p * moments.sub - f.mu / 4.0 * moments.quartic;
    let grid = Grid::radial(RadialGrid::uniform(n as f64 * h, n))?;
    let profile = Field::from_values(&grid, u)?;
    Ok(ShootingResult {
        profile,
        energy,
        moments,
        u0: 0.5 * (lo + hi),
        cut_radius: rc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::linear_fit;

    #[test]
    fn k1_values() {
        // K₁(1) = 0.6019072302, K₁(3) = 0.0401564311
        assert!((k1_scaled(1.0) * (-1f64).exp() - 0.601_907_230_2).abs() < 3e-7 * 0.6);
        assert!((k1_scaled(3.0) * (-3f64).exp() - 0.040_156_431_1).abs() < 3e-7 * 0.04);
    }

    #[test]
    fn cubic_ground_state_profile() {
        let p = PhysParams { alpha1: 1.0, ..PhysParams::default() };
        let s = shooting_oracle(Component::One, &p, 30.0).unwrap();
        let v = s.profile.values();
        for w in v.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(s.energy > 0.0);
        assert!(s.cut_radius > 4.0);
        // tail: log(u·r^{3/2}) has slope −√λ on [R/2, 3R/4]
        let g = s.profile.grid();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (c, x) in g.coords().iter().zip(v) {
            if c[0] >= 15.0 && c[0] <= 22.5 {
                xs.push(c[0]);
                ys.push((x * c[0].powf(1.5)).ln());
            }
        }
        let (slope, _, _) = linear_fit(&xs, &ys);
        assert!((slope + 1.0).abs() < 0.02, "{slope}");
    }

    #[test]
    fn shooting_energy_is_resolution_independent() {
        let p = PhysParams { lambda1: 2.0, alpha1: 0.5, p: 2.5, ..PhysParams::default() };
        let a = shooting_oracle(Component::One, &p, 20.0).unwrap();
        let b = shooting_oracle(Component::One, &p, 30.0).unwrap();
        assert!((a.energy - b.energy).abs() < 1e-10 * a.energy);
    }
}
