//! Nehari constraints, projections along fibering rays, and the Θ matrix.
//!
//! Every quantity along a ray `t∘u = (t₁u₁, t₂u₂)` is a closed form in
//! `(t₁, t₂)` once the [`Moments`] of `u` are known, so projections cost no
//! grid work beyond one moment evaluation.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::energy::{Moments, ScalarMoments};
use crate::grid::{Field, Pair};
use crate::math::FloatExt;
use crate::params::{Component, PhysParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberCoords {
    pub t1: f64,
    pub t2: f64,
}

impl FiberCoords {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(t1 > 0.0 && t2 > 0.0 && t1.is_finite() && t2.is_finite()) {
            return Err(Error::Domain(alloc::format!("fiber coordinates must be positive, got ({t1}, {t2})")));
        }
        Ok(FiberCoords { t1, t2 })
    }

    pub fn apply(&self, u: &Pair) -> Pair {
        u.scaled(self.t1, self.t2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaMatrix {
    pub m: [[f64; 2]; 2],
}

impl ThetaMatrix {
    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

/// 𝒥′(u)(u₁,0) and 𝒥′(u)(0,u₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NehariResidual {
    pub g1: f64,
    pub g2: f64,
}

impl NehariResidual {
    /// max |gᵢ| relative to ‖u‖².
    pub fn relative(&self, m: &Moments) -> f64 {
        let n = (m.norm_sq[0] + m.norm_sq[1]).max(f64::MIN_POSITIVE);
        self.g1.abs().max(self.g2.abs()) / n
    }
}

pub fn residuals(u: &Pair, params: &PhysParams) -> NehariResidual {
    let g = Moments::of(u, params).nehari_pairings(params);
    NehariResidual { g1: g[0], g2: g[1] }
}

#[derive(Debug, Clone)]
pub struct ScalarProjection {
    pub t: f64,
    pub projected: Field,
    /// ‖tu‖² lies beyond the untruncated zone of χ_β.
    pub truncation_zone: bool,
}

/// Unique t > 0 with ‖tu‖² = αtᵖ∫|u|ᵖ + μt⁴∫u⁴.
pub fn scalar_project(u: &Field, component: Component, params: &PhysParams) -> Result<ScalarProjection> {
    let m = ScalarMoments::of(u, component, params);
    let t = scalar_root(&m, params.alpha(component), params.mu(component), params.p)?;
    let e4 = params.epsilon.powi(4);
    let s = t * t * m.norm_sq / (params.t_scale * params.t_scale * e4);
    Ok(ScalarProjection {
        t,
        projected: u.scaled(t),
        truncation_zone: params.truncation_active() && s > 1.0,
    })
}

/// Root of `f(t) = αP·t^{p−2} + μQ·t² − N`, strictly increasing in t.
pub fn scalar_root(m: &ScalarMoments, alpha: f64, mu: f64, p: f64) -> Result<f64> {
    let (a, b, n) = (alpha * m.sub, mu * m.quartic, m.norm_sq);
    if !(n > 0.0) || (a <= 0.0 && b <= 0.0) {
        return Err(Error::NoRoot("scalar fibering map has no critical point".into()));
    }
    if a == 0.0 {
        return Ok((n / b).sqrt());
    }
    let f = |t: f64| a * t.powf(p - 2.0) + b * t * t - n;
    bisect_increasing(f, 1.0)
}

/// Geometric bracket expansion from `t0`, then bisection in log t to
/// relative width 1e−15.
fn bisect_increasing<F: Fn(f64) -> f64>(f: F, t0: f64) -> Result<f64> {
    let mut lo = t0;
    let mut hi = t0;
    let mut k = 0;
    while f(lo) > 0.0 {
        lo *= 0.5;
        k += 1;
        if k > 2000 {
            return Err(Error::Bracket("no lower bracket".into()));
        }
    }
    k = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        k += 1;
        if k > 2000 {
            return Err(Error::Bracket("no upper bracket".into()));
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionMethod {
    #[serde(rename = "miranda-bisection")]
    MirandaBisection,
    #[serde(rename = "newton")]
    Newton,
}

#[derive(Debug, Clone)]
pub struct VectorProjection {
    pub t: FiberCoords,
    pub method: ProjectionMethod,
    /// More than one root was seen inside the box.
    pub multiple_roots: bool,
    pub residual: NehariResidual,
    pub projected: Pair,
}

/// Constraint maps ηᵢ(t) = 𝒥′(t∘u)(tᵢuᵢeᵢ)/tᵢ².
#[derive(Debug, Clone, Copy)]
pub struct Fibering<'a> {
    pub moments: Moments,
    pub params: &'a PhysParams,
}

impl<'a> Fibering<'a> {
    pub fn new(u: &Pair, params: &'a PhysParams) -> Self {
        Fibering {
            moments: Moments::of(u, params),
            params,
        }
    }

    pub fn energy(&self, t1: f64, t2: f64) -> f64 {
        self.moments.scaled(t1, t2, self.params.p).breakdown(self.params).total
    }

    pub fn pairings(&self, t1: f64, t2: f64) -> [f64; 2] {
        self.moments.scaled(t1, t2, self.params.p).nehari_pairings(self.params)
    }

    pub fn eta(&self, t1: f64, t2: f64) -> [f64; 2] {
        let g = self.pairings(t1, t2);
        [g[0] / (t1 * t1), g[1] / (t2 * t2)]
    }

    /// ∂Ψᵢ/∂tⱼ for Ψᵢ(t) = 𝒥′(t∘u)(tᵢuᵢeᵢ), including the χ_β terms.
    pub fn jacobian(&self, t1: f64, t2: f64) -> [[f64; 2]; 2] {
        let pr = self.params;
        let p = pr.p;
        let m = self.moments.scaled(t1, t2, p);
        let t = [t1, t2];
        let e4 = pr.epsilon.powi(4);
        let k = pr.t_scale * pr.t_scale * e4;
        let s = m.chi_arg(pr);
        let chi = pr.chi(s).unwrap_or(1.0);
        let d1 = pr.chi_prime(s).unwrap_or(0.0);
        let d2 = pr.chi_second(s).unwrap_or(0.0);
        let alpha = [pr.alpha1, pr.alpha2];
        let mu = [pr.mu1, pr.mu2];
        let a_sum = alpha[0] * m.sub[0] + alpha[1] * m.sub[1];
        let c = 1.0 - 2.0 * d1 * a_sum / (p * k);
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let ds = 2.0 * m.norm_sq[j] / (k * t[j]);
            let da = p * alpha[j] * m.sub[j] / t[j];
            let dc = -2.0 / (p * k) * (d2 * ds * a_sum + d1 * da);
            let dchi = d1 * ds;
            for i in 0..2 {
                let mut v = dc * m.norm_sq[i] - dchi * alpha[i] * m.sub[i] - pr.beta * 2.0 * m.coupling / t[j];
                if i == j {
                    v += c * 2.0 * m.norm_sq[i] / t[j]
                        - chi * alpha[i] * p * m.sub[i] / t[j]
                        - 4.0 * mu[i] * m.quartic[i] / t[j];
                }
                jac[i][j] = v;
            }
        }
        jac
    }

    /// For fixed t₂, the root of η₁(·, t₂) in [lo, hi] by bisection, or
    /// `None` without a sign change.
    fn inner_root(&self, t2: f64, lo: f64, hi: f64) -> Option<f64> {
        let f = |t1: f64| self.eta(t1, t2)[0];
        let (mut a, mut b) = (lo, hi);
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            return Some(a);
        }
        if fb == 0.0 {
            return Some(b);
        }
        if fa.signum() == fb.signum() {
            return None;
        }
        let sa = fa.signum();
        while b - a > 1e-13 * b {
            let mid = 0.5 * (a + b);
            let fm = f(mid);
            if fm == 0.0 {
                return Some(mid);
            }
            if fm.signum() == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
        Some(0.5 * (a + b))
    }

    /// Miranda sign conditions on the box edges, sampled at 65 points each:
    /// η₁ > 0 on {t₁ = lo₁}, η₁ < 0 on {t₁ = hi₁}, and likewise for η₂.
    pub fn miranda_conditions(&self, b: &[[f64; 2]; 2]) -> bool {
        let n = 64;
        for k in 0..=n {
            let s = k as f64 / n as f64;
            let x = b[0][0] * (b[0][1] / b[0][0]).powf(s);
            let y = b[1][0] * (b[1][1] / b[1][0]).powf(s);
            if !(self.eta(b[0][0], y)[0] > 0.0 && self.eta(b[0][1], y)[0] < 0.0) {
                return false;
            }
            if !(self.eta(x, b[1][0])[1] > 0.0 && self.eta(x, b[1][1])[1] < 0.0) {
                return false;
            }
        }
        true
    }

    /// Nested bisection: t₁*(t₂) from η₁, then η₂(t₁*(t₂), t₂) in t₂. Also
    /// scans the outer map for additional sign changes.
    fn miranda_solve(&self, b: &[[f64; 2]; 2]) -> Option<(f64, f64, bool)> {
        let (lo1, hi1) = (b[0][0], b[0][1]);
        let h = |t2: f64| -> Option<f64> {
            let t1 = self.inner_root(t2, lo1, hi1)?;
            Some(self.eta(t1, t2)[1])
        };
        let n = 96;
        let ts: Vec<f64> = (0..=n)
            .map(|k| b[1][0] * (b[1][1] / b[1][0]).powf(k as f64 / n as f64))
            .collect();
        let mut vals = Vec::with_capacity(ts.len());
        for &t in &ts {
            vals.push(h(t)?);
        }
        let mut brackets = Vec::new();
        for k in 0..n {
            if vals[k] == 0.0 || vals[k].signum() != vals[k + 1].signum() {
                brackets.push((ts[k], ts[k + 1], vals[k]));
            }
        }
        let mut roots = Vec::new();
        for (mut a, mut c, fa) in brackets.iter().copied() {
            if fa == 0.0 {
                roots.push(a);
                continue;
            }
            let sa = fa.signum();
            while c - a > 1e-13 * c {
                let mid = 0.5 * (a + c);
                let fm = h(mid)?;
                if fm == 0.0 {
                    a = mid;
                    c = mid;
                    break;
                }
                if fm.signum() == sa {
                    a = mid;
                } else {
                    c = mid;
                }
            }
            roots.push(0.5 * (a + c));
        }
        let mut best: Option<(f64, f64)> = None;
        for &t2 in &roots {
            let t1 = self.inner_root(t2, lo1, hi1)?;
            let d = (t1 - 1.0).powi(2) + (t2 - 1.0).powi(2);
            if best.map_or(true, |(b1, b2)| d < (b1 - 1.0).powi(2) + (b2 - 1.0).powi(2)) {
                best = Some((t1, t2));
            }
        }
        best.map(|(t1, t2)| (t1, t2, roots.len() > 1))
    }

    /// Damped Newton on (η₁, η₂) from `seed`, halving steps until the
    /// residual norm decreases; at most 50 iterations.
    fn newton_solve(&self, seed: (f64, f64)) -> core::result::Result<(f64, f64), [f64; 2]> {
        let (mut t1, mut t2) = seed;
        let n = self.moments.norm_sq;
        let norm = |e: [f64; 2]| (e[0] * e[0] + e[1] * e[1]).sqrt();
        // per component: an absolute test lets tᵢ → 0 pass for free
        let done = |g: [f64; 2], t1: f64, t2: f64, tol: f64| g[0].abs() <= tol * t1 * t1 * n[0] && g[1].abs() <= tol * t2 * t2 * n[1];
        let mut g = self.pairings(t1, t2);
        for _ in 0..50 {
            if done(g, t1, t2, 1e-12) {
                return Ok((t1, t2));
            }
            let jm = self.jacobian(t1, t2);
            let det = jm[0][0] * jm[1][1] - jm[0][1] * jm[1][0];
            if det == 0.0 || !det.is_finite() {
                return Err(g);
            }
            let d1 = (jm[1][1] * g[0] - jm[0][1] * g[1]) / det;
            let d2 = (-jm[1][0] * g[0] + jm[0][0] * g[1]) / det;
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let (n1, n2) = (t1 - step * d1, t2 - step * d2);
                if n1 > 0.0 && n2 > 0.0 {
                    let gn = self.pairings(n1, n2);
                    if norm(gn) < norm(g) {
                        t1 = n1;
                        t2 = n2;
                        g = gn;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                return Err(g);
            }
        }
        if done(g, t1, t2, 1e-10) {
            Ok((t1, t2))
        } else {
            Err(g)
        }
    }
}

/// Scalar projections of each component, used to scale the default box and
/// seed Newton.
fn scalar_seeds(f: &Fibering) -> Result<(f64, f64)> {
    let m = &f.moments;
    let pr = f.params;
    let s1 = ScalarMoments {
        norm_sq: m.norm_sq[0],
        sub: m.sub[0],
        quartic: m.quartic[0],
    };
    let s2 = ScalarMoments {
        norm_sq: m.norm_sq[1],
        sub: m.sub[1],
        quartic: m.quartic[1],
    };
    Ok((
        scalar_root(&s1, pr.alpha1, pr.mu1, pr.p)?,
        scalar_root(&s2, pr.alpha2, pr.mu2, pr.p)?,
    ))
}

/// Projection computed from moments alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentProjection {
    pub t: FiberCoords,
    pub method: ProjectionMethod,
    pub multiple_roots: bool,
    pub residual: NehariResidual,
    /// 𝒥(t∘u)
    pub energy: f64,
}

/// (t₁, t₂) with t∘u in the vector Nehari set, for any u with moments
/// `m`. `t_box` is `[lo, hi]` applied as multiples of the scalar
/// projections; the default is `[0.05, 20]`.
pub fn vector_project_moments(m: &Moments, params: &PhysParams, t_box: Option<[f64; 2]>) -> Result<MomentProjection> {
    let f = Fibering { moments: *m, params };
    if !(f.moments.norm_sq[0] > 0.0 && f.moments.norm_sq[1] > 0.0) {
        return Err(Error::NoRoot("both components must be nonzero".into()));
    }
    let (s1, s2) = scalar_seeds(&f)?;
    let [lo, hi] = t_box.unwrap_or([0.05, 20.0]);
    let b = [[lo * s1, hi * s1], [lo * s2, hi * s2]];
    let mut solved = None;
    if f.miranda_conditions(&b) {
        if let Some((t1, t2, multi)) = f.miranda_solve(&b) {
            solved = Some((t1, t2, multi, ProjectionMethod::MirandaBisection));
        }
    }
    if solved.is_none() {
        let seeds = [(1.0, 1.0), (s1, s2)];
        let mut roots: Vec<(f64, f64)> = Vec::new();
        let mut last = [f64::NAN; 2];
        for seed in seeds {
            match f.newton_solve(seed) {
                Ok(r) => {
                    if !roots.iter().any(|q| (q.0 - r.0).abs() + (q.1 - r.1).abs() < 1e-6 * (r.0 + r.1)) {
                        roots.push(r);
                    }
                }
                Err(g) => last = g,
            }
        }
        roots.sort_by(|a, b| {
            let da = (a.0 - 1.0).powi(2) + (a.1 - 1.0).powi(2);
            let db = (b.0 - 1.0).powi(2) + (b.1 - 1.0).powi(2);
            da.total_cmp(&db)
        });
        match roots.first() {
            Some(&(t1, t2)) => solved = Some((t1, t2, roots.len() > 1, ProjectionMethod::Newton)),
            None => return Err(Error::ProjectionFailure { g1: last[0], g2: last[1] }),
        }
    }
    let (t1, t2, multiple_roots, method) = solved.expect("set above");
    let g = f.pairings(t1, t2);
    Ok(MomentProjection {
        t: FiberCoords { t1, t2 },
        method,
        multiple_roots,
        residual: NehariResidual { g1: g[0], g2: g[1] },
        energy: f.energy(t1, t2),
    })
}

/// (t₁, t₂) with t∘u in the vector Nehari set; see
/// [`vector_project_moments`] for `t_box`.
pub fn vector_project(u: &Pair, params: &PhysParams, t_box: Option<[f64; 2]>) -> Result<VectorProjection> {
    let r = vector_project_moments(&Moments::of(u, params), params, t_box)?;
    Ok(VectorProjection {
        t: r.t,
        method: r.method,
        multiple_roots: r.multiple_roots,
        residual: r.residual,
        projected: u.scaled(r.t.t1, r.t.t2),
    })
}

/// Single t with Σᵢ𝒥′(tu)(tuᵢeᵢ) = 0 (the set 𝒩′).
pub fn diagonal_project(u: &Pair, params: &PhysParams) -> Result<(f64, Pair)> {
    let f = Fibering::new(u, params);
    let g = |t: f64| {
        let q = f.pairings(t, t);
        -(q[0] + q[1]) / (t * t)
    };
    let t = bisect_increasing(g, 1.0)?;
    Ok((t, u.scaled(t, t)))
}

/// Θ at (t₁,t₂) in the displayed form: θᵢᵢ = 2c‖uᵢ‖² − pχαᵢ∫|uᵢ|ᵖ −
/// 4μᵢ∫uᵢ⁴ − 2β∫u₁²u₂², θ₁₂ = θ₂₁ = −2β∫u₁²u₂². Equal to the exact
/// Jacobian whenever χ′_β vanishes nearby.
pub fn theta_at(u: &Pair, params: &PhysParams, t: FiberCoords) -> ThetaMatrix {
    let m = Moments::of(u, params).scaled(t.t1, t.t2, params.p);
    let c = m.chi_correction(params);
    let chi = params.chi(m.chi_arg(params)).unwrap_or(1.0);
    let p = params.p;
    let off = -2.0 * params.beta * m.coupling;
    let d = |i: usize, alpha: f64, mu: f64| {
        2.0 * c * m.norm_sq[i] - p * chi * alpha * m.sub[i] - 4.0 * mu * m.quartic[i] + off
    };
    ThetaMatrix {
        m: [
            [d(0, params.alpha1, params.mu1), off],
            [off, d(1, params.alpha2, params.mu2)],
        ],
    }
}

pub fn theta(u: &Pair, params: &PhysParams) -> ThetaMatrix {
    theta_at(u, params, FiberCoords { t1: 1.0, t2: 1.0 })
}

pub fn theta_det(u: &Pair, params: &PhysParams) -> f64 {
    theta(u, params).det()
}

/// (μ₁μ₂ − β²)∫u₁⁴∫u₂⁴, the lower bound for det Θ on members.
pub fn theta_det_bound(u: &Pair, params: &PhysParams) -> f64 {
    let m = Moments::of(u, params);
    (params.mu1 * params.mu2 - params.beta * params.beta) * m.quartic[0] * m.quartic[1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t1: f64,
    pub t2: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberScan {
    pub rows: Vec<ScanRow>,
    pub argmax: FiberCoords,
    pub phi_max: f64,
    pub phi_at_one: f64,
    /// Φ(argmax) − Φ(1,1).
    pub max_gap: f64,
}

/// Φ(t) = 𝒥(t∘u) on the tensor grid `t_grid × t_grid`.
pub fn fiber_scan(u: &Pair, params: &PhysParams, t_grid: &[f64]) -> Result<FiberScan> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Usage("scan grid must be nonempty and positive".into()));
    }
    let f = Fibering::new(u, params);
    let mut rows = Vec::with_capacity(t_grid.len() * t_grid.len());
    let mut best = ScanRow {
        t1: t_grid[0],
        t2: t_grid[0],
        phi: f64::NEG_INFINITY,
    };
    for &t1 in t_grid {
        for &t2 in t_grid {
            let phi = f.energy(t1, t2);
            let row = ScanRow { t1, t2, phi };
            if phi > best.phi {
                best = row;
            }
            rows.push(row);
        }
    }
    let phi_at_one = f.energy(1.0, 1.0);
    Ok(FiberScan {
        rows,
        argmax: FiberCoords {
            t1: best.t1,
            t2: best.t2,
        },
        phi_max: best.phi,
        phi_at_one,
        max_gap: best.phi - phi_at_one,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{norm4, Grid, RadialGrid};
    use alloc::sync::Arc;

    fn grid() -> Arc<Grid> {
        Grid::radial(RadialGrid::uniform(8.0, 400)).unwrap()
    }

    fn pair(g: &Arc<Grid>, a: f64, b: f64) -> Pair {
        Pair::new(
            Field::from_fn(g, |x| a * (-norm4(x).powi(2) / 2.0).exp()),
            Field::from_fn(g, |x| b * (-norm4(x).powi(2) / 3.0).exp() * (1.0 + 0.2 * norm4(x))),
        )
        .unwrap()
    }

    fn params(beta: f64) -> PhysParams {
        PhysParams {
            lambda1: 1.0,
            lambda2: 1.5,
            mu1: 1.0,
            mu2: 2.0,
            alpha1: 1.0,
            alpha2: 0.5,
            beta,
            p: 3.0,
            epsilon: 1.0,
            t_scale: 1e3,
        }
    }

    #[test]
    fn zero_residuals() {
        let g = grid();
        let z = Pair::new(Field::zeros(&g), Field::zeros(&g)).unwrap();
        let r = residuals(&z, &params(0.3));
        assert_eq!((r.g1, r.g2), (0.0, 0.0));
    }

    #[test]
    fn scalar_projection_properties() {
        let g = grid();
        let u = pair(&g, 0.3, 1.0).u1;
        let p = params(0.0);
        let s = scalar_project(&u, Component::One, &p).unwrap();
        let again = scalar_project(&s.projected, Component::One, &p).unwrap();
        assert!((again.t - 1.0).abs() < 1e-12);
        let m = ScalarMoments::of(&s.projected, Component::One, &p);
        assert!(m.pairing(Component::One, &p).abs() < 1e-12 * m.norm_sq);
        // bracketing: the rearranged constraint changes sign across t
        let m0 = ScalarMoments::of(&u, Component::One, &p);
        let f = |t: f64| p.alpha1 * m0.sub * t.powf(p.p - 2.0) + p.mu1 * m0.quartic * t * t - m0.norm_sq;
        assert!(f(s.t * (1.0 - 1e-9)) < 0.0 && f(s.t * (1.0 + 1e-9)) > 0.0);
        assert!(!s.truncation_zone);
    }

    #[test]
    fn scalar_projection_pure_quartic() {
        let g = grid();
        let u = pair(&g, 0.3, 1.0).u1;
        let p = PhysParams { alpha1: 0.0, ..params(0.0) };
        let s = scalar_project(&u, Component::One, &p).unwrap();
        let m = ScalarMoments::of(&u, Component::One, &p);
        let bis = bisect_increasing(|t| p.mu1 * m.quartic * t * t - m.norm_sq, 1.0).unwrap();
        assert!((s.t - bis).abs() < 1e-12 * s.t);
        let c = 3.7;
        let sc = scalar_project(&u.scaled(c), Component::One, &p).unwrap();
        assert!((sc.t - s.t / c).abs() < 1e-12 * s.t);
        let z = Field::zeros(&g);
        assert!(matches!(scalar_project(&z, Component::One, &p), Err(Error::NoRoot(_))));
    }

    #[test]
    fn decoupled_projection_is_scalar() {
        let g = grid();
        let u = pair(&g, 0.5, 0.8);
        let p = params(0.0);
        let v = vector_project(&u, &p, None).unwrap();
        let s1 = scalar_project(&u.u1, Component::One, &p).unwrap().t;
        let s2 = scalar_project(&u.u2, Component::Two, &p).unwrap().t;
        assert!((v.t.t1 - s1).abs() < 1e-10 * s1);
        assert!((v.t.t2 - s2).abs() < 1e-10 * s2);
        assert_eq!(v.method, ProjectionMethod::MirandaBisection);
        assert!(!v.multiple_roots);
    }

    #[test]
    fn projection_idempotent_and_members() {
        let g = grid();
        for beta in [-0.8, -0.3, 0.2, 0.5] {
            let p = params(beta);
            let u = pair(&g, 0.5, 0.8);
            let v = vector_project(&u, &p, None).unwrap();
            let m = Moments::of(&v.projected, &p);
            assert!(residuals(&v.projected, &p).relative(&m) < 1e-8, "β={beta}");
            let w = vector_project(&v.projected, &p, None).unwrap();
            assert!((w.t.t1 - 1.0).abs() < 1e-8 && (w.t.t2 - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn symmetric_pair_diagonal_oracle() {
        let g = grid();
        let u1 = Field::from_fn(&g, |x| (-norm4(x).powi(2) / 2.0).exp());
        let u = Pair::new(u1.clone(), u1.clone()).unwrap();
        let p = PhysParams {
            lambda2: 1.0,
            mu2: 1.0,
            alpha2: 1.0,
            ..params(0.2)
        };
        let v = vector_project(&u, &p, None).unwrap();
        assert!((v.t.t1 - v.t.t2).abs() < 1e-10);
        // on the diagonal: N = αP t^{p−2} + (μQ + βC) t²
        let m = Moments::of(&u, &p);
        let t = bisect_increasing(
            |t| p.alpha1 * m.sub[0] * t + (p.mu1 * m.quartic[0] + p.beta * m.coupling) * t * t - m.norm_sq[0],
            1.0,
        )
        .unwrap();
        assert!((v.t.t1 - t).abs() < 1e-10 * t);
    }

    #[test]
    fn theta_properties_and_fd() {
        let g = grid();
        for beta in [-0.9, 0.0, 0.6] {
            let p = params(beta);
            let v = vector_project(&pair(&g, 0.5, 0.8), &p, None).unwrap().projected;
            let th = theta(&v, &p);
            assert_eq!(th.m[0][1], th.m[1][0]);
            let f = Fibering::new(&v, &p);
            let h = 1e-6;
            for j in 0..2 {
                let (a, b) = if j == 0 { ((1.0 + h, 1.0), (1.0 - h, 1.0)) } else { ((1.0, 1.0 + h), (1.0, 1.0 - h)) };
                let gp = f.pairings(a.0, a.1);
                let gm = f.pairings(b.0, b.1);
                for i in 0..2 {
                    let fd = (gp[i] - gm[i]) / (2.0 * h);
                    assert!((fd - th.m[i][j]).abs() < 1e-4 * th.m[i][j].abs().max(1e-3));
                }
            }
            if beta == 0.0 {
                assert_eq!(th.m[0][1], 0.0);
                assert_eq!(th.det(), th.m[0][0] * th.m[1][1]);
            }
            let bound = theta_det_bound(&v, &p);
            assert!(theta_det(&v, &p) > bound && bound > 0.0, "β={beta}");
        }
    }

    #[test]
    fn exact_jacobian_in_truncation_zone() {
        let g = grid();
        let u = pair(&g, 0.5, 0.8);
        let mut p = params(-2.0);
        let m = Moments::of(&u, &p);
        p.t_scale = ((m.norm_sq[0] + m.norm_sq[1]) / 1.3).sqrt();
        let f = Fibering::new(&u, &p);
        let jm = f.jacobian(1.0, 1.0);
        let h = 1e-6;
        for j in 0..2 {
            let (a, b) = if j == 0 { ((1.0 + h, 1.0), (1.0 - h, 1.0)) } else { ((1.0, 1.0 + h), (1.0, 1.0 - h)) };
            let gp = f.pairings(a.0, a.1);
            let gm = f.pairings(b.0, b.1);
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                assert!((fd - jm[i][j]).abs() < 1e-5 * jm[i][j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn fibering_scan_maximum_at_member() {
        let g = grid();
        for beta in [-0.5, 0.0] {
            let p = params(beta);
            let v = vector_project(&pair(&g, 0.5, 0.8), &p, None).unwrap().projected;
            let grid: Vec<f64> = (1..=60).map(|k| k as f64 * 0.05).collect();
            let scan = fiber_scan(&v, &p, &grid).unwrap();
            assert!(scan.max_gap <= 1e-12 * scan.phi_at_one.abs());
            if beta == 0.0 {
                assert!((scan.argmax.t1 - 1.0).abs() <= 0.05 && (scan.argmax.t2 - 1.0).abs() <= 0.05);
            }
            let f = Fibering::new(&v, &p);
            let mut last = f.energy(4.0, 4.0);
            for k in 5..20 {
                let e = f.energy(k as f64, k as f64);
                assert!(e < last);
                last = e;
            }
            assert!(last < 0.0);
        }
    }

    #[test]
    fn newton_fallback_on_narrow_box() {
        let g = grid();
        let p = params(0.4);
        let u = pair(&g, 0.5, 0.8);
        // a box that excludes the root forces the fallback
        let v = vector_project(&u, &p, Some([0.05, 0.1])).unwrap();
        assert_eq!(v.method, ProjectionMethod::Newton);
        let w = vector_project(&u, &p, None).unwrap();
        assert!((v.t.t1 - w.t.t1).abs() < 1e-9 && (v.t.t2 - w.t.t2).abs() < 1e-9);
    }

    #[test]
    fn diagonal_projection_member() {
        let g = grid();
        let p = params(3.0);
        let (t, v) = diagonal_project(&pair(&g, 0.5, 0.8), &p).unwrap();
        assert!(t > 0.0);
        let r = residuals(&v, &p);
        let m = Moments::of(&v, &p);
        assert!((r.g1 + r.g2).abs() < 1e-12 * (m.norm_sq[0] + m.norm_sq[1]));
    }
}
