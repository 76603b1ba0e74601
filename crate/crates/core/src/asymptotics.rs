//! ε → 0 experiments: sweeps over a decreasing ladder of ε, spike traces,
//! and the fits run on them.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::energy::interaction_i;
use crate::grid::{dist4, rescale_to_reference, AxiGrid, Field, Grid, Point, RadialGrid, Ray};
use crate::groundstate::{solve_system_ground, InitialProfile, SolveOptions};
use crate::math::{linear_fit, FloatExt};
use crate::params::PhysParams;
use crate::{Error, Result};

pub const DEFAULT_LADDER: [f64; 5] = [0.4, 0.3, 0.2, 0.15, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepDomain {
    /// Ball about the origin, radially symmetric states only.
    RadialBall { radius: f64 },
    /// Ball about the origin on an axisymmetric (ξ, ρ) grid.
    AxiBall { radius: f64 },
}

impl SweepDomain {
    fn radius(&self) -> f64 {
        match *self {
            SweepDomain::RadialBall { radius } | SweepDomain::AxiBall { radius } => radius,
        }
    }

    /// Grid with `nodes_per_eps` nodes per length ε.
    pub fn grid(&self, eps: f64, nodes_per_eps: f64) -> Result<Arc<Grid>> {
        let h = eps / nodes_per_eps;
        match *self {
            SweepDomain::RadialBall { radius } => {
                // tolerate rounding so R/h that is integral in exact arithmetic stays so
                let n = (radius / h - 1e-9).ceil() as usize;
                Grid::radial(RadialGrid::uniform(radius, n.max(2)))
            }
            SweepDomain::AxiBall { radius } => Grid::axi(AxiGrid::ball(radius, h)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsSweepPlan {
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    pub domain: SweepDomain,
    /// ε is overridden per entry.
    pub params: PhysParams,
    pub nodes_per_eps: f64,
    /// Seed each solve from the previous solution, rescaled about its
    /// maximum points.
    pub warm_start: bool,
    pub solve: SolveOptions,
}

impl EpsSweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.eps.len() < 3 {
            return Err(Error::Config("a sweep needs at least three ε values".into()));
        }
        if self.eps.iter().any(|e| !(*e > 0.0)) || self.eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("ε values must be positive and strictly decreasing".into()));
        }
        if !(self.nodes_per_eps > 0.0) || !(self.domain.radius() > 0.0) {
            return Err(Error::Config("grid policy and domain radius must be positive".into()));
        }
        self.solve.validate()
    }
}

/// Entire-space limit profiles on a common radial grid, and their level B.
#[derive(Debug, Clone)]
pub struct LimitProfile {
    pub v: [Field; 2],
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeTrace {
    pub eps: f64,
    pub ok: bool,
    pub error: Option<String>,
    /// Maximum points of u₁, u₂.
    pub p1: Point,
    pub p2: Point,
    pub max1: f64,
    pub max2: f64,
    /// dist(pᵢ, ∂Ω)
    pub dist1: f64,
    pub dist2: f64,
    /// |p₁ − p₂| / ε
    pub separation: f64,
    /// ε⁻⁴c
    pub scaled_energy: f64,
    /// ‖vᵢ^ε − vᵢ⁰‖ / ‖vᵢ⁰‖ on the reference grid.
    pub l2_error: [f64; 2],
    /// max|vᵢ^ε − vᵢ⁰| / max vᵢ⁰
    pub linf_error: [f64; 2],
    /// The reference disc around some pᵢ left Ω.
    pub rescale_truncated: bool,
    pub truncation_zone: bool,
    pub converged: bool,
    pub semi_trivial: bool,
    pub el_residual: f64,
    pub iterations: usize,
    /// Grid spacing of this entry.
    pub spacing: f64,
}

impl SpikeTrace {
    fn failed(eps: f64, spacing: f64, err: &Error) -> Self {
        SpikeTrace {
            eps,
            ok: false,
            error: Some(err.to_string()),
            p1: [f64::NAN; 4],
            p2: [f64::NAN; 4],
            max1: f64::NAN,
            max2: f64::NAN,
            dist1: f64::NAN,
            dist2: f64::NAN,
            separation: f64::NAN,
            scaled_energy: f64::NAN,
            l2_error: [f64::NAN; 2],
            linf_error: [f64::NAN; 2],
            rescale_truncated: false,
            truncation_zone: false,
            converged: false,
            semi_trivial: false,
            el_residual: f64::NAN,
            iterations: 0,
            spacing,
        }
    }
}

/// The previous solution of component `i` resampled for a smaller ε:
/// u(p + (ε_prev/ε)(x − p)).
fn warm_profile(u: &Field, center: &Point, ratio: f64, grid: &Arc<Grid>) -> InitialProfile {
    let f = Field::from_fn(grid, |x| {
        let y = [
            center[0] + ratio * (x[0] - center[0]),
            center[1] + ratio * (x[1] - center[1]),
            center[2] + ratio * (x[2] - center[2]),
            center[3] + ratio * (x[3] - center[3]),
        ];
        u.sample(&y)
    });
    InitialProfile::Values(f.into_values())
}

fn profile_errors(u: &Field, center: &Point, eps: f64, limit: &Field) -> Result<(f64, f64, bool)> {
    let ray = if u.grid().is_radial() { Ray::Radial } else { Ray::Transverse };
    let r = rescale_to_reference(u, center, eps, limit.grid(), ray)?;
    let diff = r.field.axpy(-1.0, limit)?;
    let l2 = diff.l2_norm() / limit.l2_norm();
    let linf = diff.max_abs() / limit.max_abs();
    Ok((l2, linf, r.truncated))
}

/// One sweep entry. `init` overrides the plan's initial profiles.
pub fn run_entry(
    plan: &EpsSweepPlan,
    eps: f64,
    init: Option<[InitialProfile; 2]>,
    limit: Option<&LimitProfile>,
) -> (SpikeTrace, Option<crate::groundstate::GroundStateResult>) {
    let params = plan.params.with_epsilon(eps);
    let grid = match plan.domain.grid(eps, plan.nodes_per_eps) {
        Ok(g) => g,
        Err(e) => return (SpikeTrace::failed(eps, eps / plan.nodes_per_eps, &e), None),
    };
    let spacing = grid.spacing();
    let mut opts = plan.solve.clone();
    if init.is_some() {
        opts.initial = init;
    }
    let res = match solve_system_ground(&params, &grid, &opts) {
        Ok(r) => r,
        Err(e) => return (SpikeTrace::failed(eps, spacing, &e), None),
    };
    let pair = res.pair().expect("system solve");
    let (p1, max1) = pair.u1.max_point();
    let (p2, max2) = pair.u2.max_point();
    let mut entry = SpikeTrace {
        eps,
        ok: true,
        error: None,
        p1,
        p2,
        max1,
        max2,
        dist1: grid.domain_dist(&p1).max(0.0),
        dist2: grid.domain_dist(&p2).max(0.0),
        separation: dist4(&p1, &p2) / eps,
        scaled_energy: res.energy / eps.powi(4),
        l2_error: [f64::NAN; 2],
        linf_error: [f64::NAN; 2],
        rescale_truncated: false,
        truncation_zone: res.truncation_zone,
        converged: res.converged,
        semi_trivial: res.semi_trivial,
        el_residual: res.el_residual,
        iterations: res.iterations,
        spacing,
    };
    if let Some(lim) = limit {
        for (i, (u, c)) in [(&pair.u1, &p1), (&pair.u2, &p2)].into_iter().enumerate() {
            match profile_errors(u, c, eps, &lim.v[i]) {
                Ok((l2, linf, t)) => {
                    entry.l2_error[i] = l2;
                    entry.linf_error[i] = linf;
                    entry.rescale_truncated |= t;
                }
                Err(e) => {
                    entry.ok = false;
                    entry.error = Some(e.to_string());
                }
            }
        }
    }
    (entry, Some(res))
}

/// Solves along the ladder in order; failures are recorded and skipped.
pub fn run_sweep(plan: &EpsSweepPlan, limit: Option<&LimitProfile>) -> Result<Vec<SpikeTrace>> {
    plan.validate()?;
    let mut out = Vec::with_capacity(plan.eps.len());
    let mut prev: Option<(f64, crate::groundstate::GroundStateResult)> = None;
    for &eps in &plan.eps {
        let init = match (&prev, plan.warm_start) {
            (Some((eps_prev, res)), true) => {
                let grid = plan.domain.grid(eps, plan.nodes_per_eps)?;
                let pair = res.pair().expect("system solve");
                let ratio = eps_prev / eps;
                let (c1, _) = pair.u1.max_point();
                let (c2, _) = pair.u2.max_point();
                Some([
                    warm_profile(&pair.u1, &c1, ratio, &grid),
                    warm_profile(&pair.u2, &c2, ratio, &grid),
                ])
            }
            _ => None,
        };
        let (entry, res) = run_entry(plan, eps, init, limit);
        if let Some(r) = res {
            if entry.ok {
                prev = Some((eps, r));
            }
        }
        out.push(entry);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// log u linear in r.
    Pure,
    /// log(u·r^{3/2}) linear in r, matching the K₁(√λr)/r tail in ℝ⁴.
    RadiallyCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// ν in u ~ e^{−νr}, r = |x − center|/ε.
    pub rate: f64,
    pub window: [f64; 2],
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub model: DecayModel,
}

impl DecayFit {
    /// Smallest σ with rate ∈ [(1−σ)√λ, (1+σ)√λ].
    pub fn sigma_for(&self, lambda: f64) -> f64 {
        (self.rate / lambda.sqrt() - 1.0).abs()
    }
}

/// Least-squares decay rate of u along `ray` from `center` over
/// `window` (in units of ε). On nonpositive samples the window's upper
/// end is pulled in by a quarter, at most four times.
pub fn decay_fit(u: &Field, center: &Point, eps: f64, window: [f64; 2], ray: Ray, model: DecayModel) -> Result<DecayFit> {
    let [lo, mut hi] = window;
    if !(eps > 0.0) || !(lo >= 0.0 && hi > lo) {
        return Err(Error::Domain("need ε > 0 and 0 ≤ r_lo < r_hi".into()));
    }
    if model == DecayModel::RadiallyCorrected && lo == 0.0 {
        return Err(Error::Domain("the corrected model needs r_lo > 0".into()));
    }
    let dir: Point = match ray {
        Ray::Radial | Ray::AxisPlus => [1.0, 0.0, 0.0, 0.0],
        Ray::AxisMinus => [-1.0, 0.0, 0.0, 0.0],
        Ray::Transverse => [0.0, 1.0, 0.0, 0.0],
    };
    let h = u.grid().spacing_at(center) / eps;
    for _ in 0..5 {
        let n = (((hi - lo) / h).ceil() as usize).clamp(16, 400);
        let mut xs = Vec::with_capacity(n + 1);
        let mut ys = Vec::with_capacity(n + 1);
        let mut bad = false;
        for k in 0..=n {
            let r = lo + (hi - lo) * k as f64 / n as f64;
            let x = [
                center[0] + eps * r * dir[0],
                center[1] + eps * r * dir[1],
                center[2],
                center[3],
            ];
            let v = if u.grid().domain_dist(&x) < 0.0 { 0.0 } else { u.sample(&x) };
            if !(v > 1e-300) {
                bad = true;
                break;
            }
            xs.push(r);
            ys.push(match model {
                DecayModel::Pure => v.ln(),
                DecayModel::RadiallyCorrected => v.ln() + 1.5 * r.ln(),
            });
        }
        if !bad {
            let (slope, _, rms) = linear_fit(&xs, &ys);
            return Ok(DecayFit {
                rate: -slope,
                window: [lo, hi],
                residual: rms,
                model,
            });
        }
        hi = lo + 0.75 * (hi - lo);
    }
    Err(Error::Domain("nonpositive values in every decay window tried".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLimitReport {
    pub b: f64,
    pub eps: Vec<f64>,
    /// |ε⁻⁴c − B| / B per successful entry.
    pub gaps: Vec<f64>,
    /// Gaps strictly decrease along the ladder.
    pub monotone: bool,
    /// Log-log slope of gap vs ε (the empirical order of the o(1) term).
    pub order: Option<f64>,
    pub final_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn energy_limit_check(trace: &[SpikeTrace], b: f64, tolerance: f64) -> Result<EnergyLimitReport> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Config(alloc::format!("limit level B = {b} must be positive")));
    }
    let ok: Vec<&SpikeTrace> = trace.iter().filter(|t| t.ok).collect();
    let eps: Vec<f64> = ok.iter().map(|t| t.eps).collect();
    let gaps: Vec<f64> = ok.iter().map(|t| (t.scaled_energy - b).abs() / b).collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let order = (gaps.len() >= 3 && gaps.iter().all(|g| *g > 0.0)).then(|| {
        let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        let ly: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
        linear_fit(&lx, &ly).0
    });
    let final_gap = gaps.last().copied().unwrap_or(f64::NAN);
    Ok(EnergyLimitReport {
        b,
        pass: gaps.len() >= 3 && final_gap < tolerance,
        eps,
        gaps,
        monotone,
        order,
        final_gap,
        tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionPoint {
    pub eps: f64,
    pub value: f64,
    /// Underflowed below 1e−300 and left out of the fit.
    pub dropped: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionFit {
    pub d: f64,
    pub points: Vec<InteractionPoint>,
    /// Slope of log I_ε against 1/ε.
    pub slope: f64,
    /// −2·minᵢ√λᵢ·d
    pub expected: f64,
    pub relative_error: f64,
}

/// Fits log I_ε[d] against 1/ε for radial entire profiles.
pub fn interaction_slope(v1: &Field, v2: &Field, d: f64, eps_list: &[f64], lambda: [f64; 2]) -> Result<InteractionFit> {
    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let i = interaction_i(v1, v2, d, eps)?;
        points.push(InteractionPoint {
            eps,
            value: i.value,
            dropped: !(i.value > 1e-300),
            truncated: i.truncated,
        });
    }
    let kept: Vec<&InteractionPoint> = points.iter().filter(|p| !p.dropped).collect();
    if kept.len() < 2 {
        return Err(Error::Domain("fewer than two interaction values above underflow".into()));
    }
    let xs: Vec<f64> = kept.iter().map(|p| 1.0 / p.eps).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.value.ln()).collect();
    let slope = linear_fit(&xs, &ys).0;
    let expected = -2.0 * lambda[0].min(lambda[1]).sqrt() * d;
    Ok(InteractionFit {
        d,
        points,
        slope,
        expected,
        relative_error: if expected == 0.0 { slope.abs() } else { (slope / expected - 1.0).abs() },
    })
}

/// The separation column of a trace is strictly increasing over its
/// successful entries.
pub fn separation_increasing(trace: &[SpikeTrace]) -> bool {
    let s: Vec<f64> = trace.iter().filter(|t| t.ok).map(|t| t.separation).collect();
    s.len() >= 2 && s.windows(2).all(|w| w[1] > w[0])
}

/// Radius of a reference ball for profile comparison that still fits in
/// the domain at every ε of `plan`.
pub fn reference_radius(plan: &EpsSweepPlan) -> f64 {
    let r = plan.domain.radius();
    let e = plan.eps[0];
    match plan.domain {
        SweepDomain::RadialBall { .. } => r / e,
        SweepDomain::AxiBall { .. } => r / (3.0 * e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{solve_scalar_ground, shooting_oracle};
    use crate::params::Component;

    #[test]
    fn synthetic_exponential_rate() {
        let g = Grid::radial(RadialGrid::uniform(10.0, 2000)).unwrap();
        let u = Field::from_fn(&g, |x| (-2.0 * x[0]).exp());
        let f = decay_fit(&u, &[0.0; 4], 1.0, [2.0, 6.0], Ray::Radial, DecayModel::Pure).unwrap();
        assert!((f.rate - 2.0).abs() < 1e-3, "{}", f.rate);
        // ε rescales the window
        let f2 = decay_fit(&u, &[0.0; 4], 0.5, [4.0, 12.0], Ray::Radial, DecayModel::Pure).unwrap();
        assert!((f2.rate - 1.0).abs() < 1e-3, "{}", f2.rate);
    }

    #[test]
    fn window_shrinks_past_zeros() {
        let g = Grid::radial(RadialGrid::uniform(4.0, 400)).unwrap();
        let u = Field::from_fn(&g, |x| if x[0] < 2.5 { (-x[0]).exp() } else { 0.0 });
        let f = decay_fit(&u, &[0.0; 4], 1.0, [0.5, 3.0], Ray::Radial, DecayModel::Pure).unwrap();
        assert!(f.window[1] < 2.5);
        assert!((f.rate - 1.0).abs() < 1e-3);
        let z = Field::zeros(&g);
        assert!(decay_fit(&z, &[0.0; 4], 1.0, [0.5, 3.0], Ray::Radial, DecayModel::Pure).is_err());
    }

    #[test]
    fn scalar_ground_state_decay_band() {
        let p = PhysParams { alpha1: 1.0, ..PhysParams::default() };
        let g = Grid::radial(RadialGrid::graded(16.0, 2000, 0.05)).unwrap();
        let r = solve_scalar_ground(Component::One, &p, &g, &SolveOptions::default()).unwrap();
        let u = r.field().unwrap();
        let a = decay_fit(u, &[0.0; 4], 1.0, [6.0, 12.0], Ray::Radial, DecayModel::RadiallyCorrected).unwrap();
        assert!(a.sigma_for(1.0) < 0.02, "{}", a.rate);
        let h = g.spacing_at(&[9.0, 0.0, 0.0, 0.0]);
        let b = decay_fit(u, &[0.0; 4], 1.0, [6.0 + h, 12.0 + h], Ray::Radial, DecayModel::RadiallyCorrected).unwrap();
        assert!((a.rate - b.rate).abs() < 0.02 * a.rate);
        let pure = decay_fit(u, &[0.0; 4], 1.0, [6.0, 12.0], Ray::Radial, DecayModel::Pure).unwrap();
        // the uncorrected fit overshoots by about (3/2)/r
        assert!(pure.rate > a.rate + 0.1, "{}", pure.rate);
    }

    fn trace(eps: &[f64], energies: &[f64]) -> Vec<SpikeTrace> {
        eps.iter()
            .zip(energies)
            .map(|(e, c)| SpikeTrace {
                ok: true,
                error: None,
                scaled_energy: *c,
                ..SpikeTrace::failed(*e, 0.01, &Error::Usage(String::new()))
            })
            .collect()
    }

    #[test]
    fn energy_limit_report() {
        let t = trace(&[0.4, 0.2, 0.1], &[1.16, 1.04, 1.01]);
        let r = energy_limit_check(&t, 1.0, 0.05).unwrap();
        assert!(r.pass && r.monotone);
        assert!((r.order.unwrap() - 2.0).abs() < 1e-9);
        assert!(matches!(energy_limit_check(&t, -1.0, 0.05), Err(Error::Config(_))));
        let short = energy_limit_check(&t[..2], 1.0, 0.05).unwrap();
        assert!(!short.pass && short.order.is_none());
    }

    #[test]
    fn plan_validation() {
        let plan = EpsSweepPlan {
            eps: alloc::vec![0.4, 0.2, 0.3],
            domain: SweepDomain::RadialBall { radius: 1.0 },
            params: PhysParams::default(),
            nodes_per_eps: 8.0,
            warm_start: false,
            solve: SolveOptions::default(),
        };
        assert!(plan.validate().is_err());
        let ok = EpsSweepPlan { eps: DEFAULT_LADDER.to_vec(), ..plan };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn interaction_slope_matches_min_rate() {
        let p = PhysParams { lambda1: 4.0, ..PhysParams::default() };
        let v1 = shooting_oracle(Component::One, &p, 40.0).unwrap().profile;
        let v2 = shooting_oracle(Component::Two, &p, 40.0).unwrap().profile;
        let eps: Vec<f64> = [12.0, 16.0, 20.0, 24.0].iter().map(|dd| 1.0 / dd).collect();
        let f = interaction_slope(&v1, &v2, 1.0, &eps, [4.0, 1.0]).unwrap();
        assert!(f.relative_error < 0.1, "{} vs {}", f.slope, f.expected);
        // coincident centres: no decay in ε
        let z = interaction_slope(&v1, &v2, 0.0, &eps, [4.0, 1.0]).unwrap();
        assert!(z.slope.abs() < 1e-8);
    }
}
