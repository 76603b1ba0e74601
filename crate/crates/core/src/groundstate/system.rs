use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::energy::{eval_j, grad_j, Moments};
use crate::grid::{Field, Grid, Pair};
use crate::linalg::{block_tridiagonal_solve, Block};
use crate::math::FloatExt;
use crate::nehari::{diagonal_project, residuals, vector_project};
use crate::params::PhysParams;
use crate::{Error, Result};

use super::{
    check_spike, jitter, GroundStateResult, InitialProfile, Method, RegimeKnobs, SolveOptions, State,
    SEMI_TRIVIAL_RATIO,
};

const ARMIJO: f64 = 1e-4;

/// Which constraint set the flow stays on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemPath {
    /// Both Nehari conditions, projected with two fibering scales.
    VectorNehari,
    /// Their sum only, projected with one common scale.
    NehariPrime,
}

impl SystemPath {
    /// Path for `params`, or `UnsupportedRegime` between the knobs.
    pub fn select(params: &PhysParams, knobs: &RegimeKnobs) -> Result<SystemPath> {
        let beta = params.beta;
        if beta < knobs.beta0 {
            if params.truncation_active() && params.alpha1.max(params.alpha2) > knobs.alpha_guard {
                return Err(Error::UnsupportedRegime(alloc::format!(
                    "β ≤ −√(μ₁μ₂) needs max αᵢ ≤ {} (α-guard)",
                    knobs.alpha_guard
                )));
            }
            Ok(SystemPath::VectorNehari)
        } else if beta > knobs.beta1 {
            Ok(SystemPath::NehariPrime)
        } else {
            Err(Error::UnsupportedRegime(alloc::format!(
                "β = {beta} lies in [β₀, β₁] = [{}, {}]",
                knobs.beta0, knobs.beta1
            )))
        }
    }

    fn project(self, u: &Pair, params: &PhysParams) -> Result<Pair> {
        match self {
            SystemPath::VectorNehari => Ok(vector_project(u, params, None)?.projected),
            SystemPath::NehariPrime => Ok(diagonal_project(u, params)?.1),
        }
    }
}

/// Default seeds: two Gaussians a third of the inradius either side of
/// the centre along the axis when β < 0 on an axisymmetric grid,
/// concentric otherwise.
fn default_initial(params: &PhysParams, grid: &Grid) -> [InitialProfile; 2] {
    let eps = params.epsilon;
    let offset = if params.beta < 0.0 && !grid.is_radial() {
        grid.domain_inradius() / 3.0
    } else {
        0.0
    };
    let make = |lambda: f64, x: f64| InitialProfile::Gaussian {
        width: 1.5 * eps / lambda.sqrt(),
        center: [x, 0.0, 0.0, 0.0],
        amplitude: 1.0,
    };
    [make(params.lambda1, -offset), make(params.lambda2, offset)]
}

fn relative_residual(g: &Pair, u: &Pair, params: &PhysParams) -> f64 {
    let eps = params.epsilon;
    let l1 = u.u1.apply_operator(params.lambda1, eps).l2_norm();
    let l2 = u.u2.apply_operator(params.lambda2, eps).l2_norm();
    let gn = g.u1.l2_norm().hypot(g.u2.l2_norm());
    gn / l1.hypot(l2).max(f64::MIN_POSITIVE)
}

fn in_truncation_zone(u: &Pair, params: &PhysParams) -> bool {
    if !params.truncation_active() {
        return false;
    }
    let s = Moments::of(u, params).chi_arg(params);
    params.chi(s).unwrap_or(1.0) < 1.0 || params.chi_prime(s).unwrap_or(0.0) != 0.0
}

/// Minimizer of 𝒥 over the vector Nehari set (β below the β₀ knob) or
/// over 𝒩′ (β above the β₁ knob) on `grid`.
pub fn solve_system_ground(params: &PhysParams, grid: &Arc<Grid>, opts: &SolveOptions) -> Result<GroundStateResult> {
    params.require_solvable()?;
    opts.validate()?;
    let knobs = opts.knobs.unwrap_or_else(|| RegimeKnobs::defaults_for(params));
    let path = SystemPath::select(params, &knobs)?;
    let init = opts.initial.clone().unwrap_or_else(|| default_initial(params, grid));
    let mut u1 = init[0].realize(grid)?;
    let mut u2 = init[1].realize(grid)?;
    jitter(&mut u1, opts.seed, opts.jitter);
    jitter(&mut u2, opts.seed.wrapping_add(1), opts.jitter);
    let mut u = path.project(&Pair::new(u1.abs(), u2.abs())?, params)?;
    let newton_ready = opts.polish && grid.is_radial();
    let flow_tol = if newton_ready { opts.tol.max(1e-5) } else { opts.tol };
    let eps = params.epsilon;

    let mut e = eval_j(&u, params).total;
    let mut history = alloc::vec![e];
    let mut eta = opts.step;
    let mut iterations = 0;
    let mut el = f64::INFINITY;
    while iterations < opts.max_iter {
        let g = grad_j(&u, params);
        el = relative_residual(&g, &u, params);
        if el < flow_tol {
            break;
        }
        let d = Pair {
            u1: g.u1.apply_inverse_operator(params.lambda1, eps),
            u2: g.u2.apply_inverse_operator(params.lambda2, eps),
        };
        let slope = g.dot(&d)?;
        let mut accepted = None;
        while eta > 1e-12 {
            let trial = Pair {
                u1: u.u1.axpy(-eta, &d.u1)?.abs(),
                u2: u.u2.axpy(-eta, &d.u2)?.abs(),
            };
            if let Ok(v) = path.project(&trial, params) {
                let en = eval_j(&v, params).total;
                // the allowance absorbs rounding once the decrease is at machine level
                if en <= e - ARMIJO * eta * slope + 1e-14 * e.abs() {
                    accepted = Some((v, en));
                    break;
                }
            }
            eta *= 0.5;
        }
        let Some((v, en)) = accepted else {
            break;
        };
        if en > e + 1e-14 * e.abs() {
            return Err(Error::EnergyIncrease {
                iteration: iterations,
                before: e,
                after: en,
            });
        }
        u = v;
        e = en;
        history.push(e);
        iterations += 1;
        eta = (2.0 * eta).min(opts.step);
    }
    let mut method = Method::GradientFlow;
    if newton_ready && !in_truncation_zone(&u, params) {
        if let Some(v) = newton_system(&u, params) {
            let ev = eval_j(&v, params).total;
            let elv = relative_residual(&grad_j(&v, params), &v, params);
            if elv < el && (ev - e).abs() <= 1e-6 * e.abs() + 1e-12 {
                u = v;
                e = ev;
                el = elv;
                method = Method::GradientFlowNewton;
            }
        }
    }
    let (m1, m2) = (u.u1.max_abs(), u.u2.max_abs());
    let semi_trivial = m1.min(m2) < SEMI_TRIVIAL_RATIO * m1.max(m2);
    if !semi_trivial {
        check_spike(&u.u1, opts)?;
        check_spike(&u.u2, opts)?;
    }
    let breakdown = eval_j(&u, params);
    Ok(GroundStateResult {
        nehari: residuals(&u, params),
        truncation_zone: in_truncation_zone(&u, params),
        state: State::System(u),
        breakdown,
        energy: e,
        el_residual: el,
        iterations,
        method,
        converged: el < opts.tol,
        semi_trivial,
        history,
    })
}

/// Newton's method for the coupled strong-form equations on a radial grid
/// (outside the truncation zone, where χ ≡ 1).
fn newton_system(u0: &Pair, params: &PhysParams) -> Option<Pair> {
    let grid = u0.grid();
    let (lower0, diag0, upper0) = grid.radial_laplacian_bands()?;
    let n = diag0.len();
    let e2 = params.epsilon * params.epsilon;
    let p = params.p;
    let beta = params.beta;
    let band = |x: f64| -> Block { [[e2 * x, 0.0], [0.0, e2 * x]] };
    let lower: Vec<Block> = lower0.iter().map(|x| band(*x)).collect();
    let upper: Vec<Block> = upper0.iter().map(|x| band(*x)).collect();
    let sub = |a: f64, x: f64| if x == 0.0 { 0.0 } else { (p - 1.0) * a * x.abs().powf(p - 2.0) };
    let norm = |g: &Pair| g.u1.l2_norm().hypot(g.u2.l2_norm());
    let mut u = u0.clone();
    let mut g = grad_j(&u, params);
    let mut res = norm(&g);
    for _ in 0..40 {
        if relative_residual(&g, &u, params) <= 1e-14 {
            break;
        }
        let (a, b) = (u.u1.values(), u.u2.values());
        let diag: Vec<Block> = (0..n)
            .map(|j| {
                let (x, y) = (a[j], b[j]);
                let d1 = e2 * diag0[j] + params.lambda1 - sub(params.alpha1, x) - 3.0 * params.mu1 * x * x - beta * y * y;
                let d2 = e2 * diag0[j] + params.lambda2 - sub(params.alpha2, y) - 3.0 * params.mu2 * y * y - beta * x * x;
                let off = -2.0 * beta * x * y;
                [[d1, off], [off, d2]]
            })
            .collect();
        let rhs: Vec<[f64; 2]> = (0..n).map(|j| [-g.u1.values()[j], -g.u2.values()[j]]).collect();
        let delta = block_tridiagonal_solve(&lower, &diag, &upper, &rhs).ok()?;
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let mut v = u.clone();
            for (j, dj) in delta.iter().enumerate() {
                v.u1.values_mut()[j] += step * dj[0];
                v.u2.values_mut()[j] += step * dj[1];
            }
            let gv = grad_j(&v, params);
            let rv = norm(&gv);
            if rv < res {
                u = v;
                g = gv;
                res = rv;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let neg = |f: &Field| f.values().iter().any(|x| *x < -1e-12 * f.max_abs());
    if neg(&u.u1) || neg(&u.u2) {
        return None;
    }
    Some(Pair {
        u1: u.u1.abs(),
        u2: u.u2.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::solve_scalar_ground;
    use super::*;
    use crate::grid::RadialGrid;
    use crate::params::Component;

    fn radial(r: f64, n: usize) -> Arc<Grid> {
        Grid::radial(RadialGrid::graded(r, n, 0.05)).unwrap()
    }

    #[test]
    fn regime_selection() {
        let p = PhysParams::default();
        let k = RegimeKnobs::defaults_for(&p);
        assert_eq!(SystemPath::select(&p.with_beta(-0.5), &k).unwrap(), SystemPath::VectorNehari);
        assert_eq!(SystemPath::select(&p.with_beta(3.0), &k).unwrap(), SystemPath::NehariPrime);
        assert!(matches!(SystemPath::select(&p.with_beta(0.5), &k), Err(Error::UnsupportedRegime(_))));
        assert!(matches!(SystemPath::select(&p.with_beta(-2.0), &k), Err(Error::UnsupportedRegime(_))));
        let small = PhysParams { alpha1: 0.05, alpha2: 0.05, ..p.with_beta(-2.0) };
        assert!(SystemPath::select(&small, &k).is_ok());
    }

    #[test]
    fn decoupled_control_matches_scalar_sum() {
        let p = PhysParams { lambda2: 2.0, alpha2: 0.5, ..PhysParams::default() };
        let g = radial(12.0, 1500);
        let opts = SolveOptions::default();
        let sys = solve_system_ground(&p, &g, &opts).unwrap();
        let d1 = solve_scalar_ground(Component::One, &p, &g, &opts).unwrap().energy;
        let d2 = solve_scalar_ground(Component::Two, &p, &g, &opts).unwrap().energy;
        assert!(sys.converged && !sys.semi_trivial);
        assert!((sys.energy - d1 - d2).abs() < 1e-6 * (d1 + d2), "{} vs {}", sys.energy, d1 + d2);
    }

    #[test]
    fn weak_attraction_lowers_the_level() {
        let p = PhysParams::default();
        let g = radial(12.0, 1500);
        let opts = SolveOptions::default();
        let d = solve_scalar_ground(Component::One, &p, &g, &opts).unwrap().energy;
        let sys = solve_system_ground(&p.with_beta(0.1), &g, &opts).unwrap();
        assert!(sys.converged);
        assert!(sys.energy < 2.0 * d - 1e-3, "{} vs {}", sys.energy, 2.0 * d);
        let n = sys.nehari.relative(&Moments::of(sys.pair().unwrap(), &p.with_beta(0.1)));
        assert!(n < 1e-8, "{n}");
    }

    #[test]
    fn strong_attraction_uses_single_scale_projection() {
        let p = PhysParams::default().with_beta(3.0);
        let g = radial(12.0, 1500);
        let sys = solve_system_ground(&p, &g, &SolveOptions::default()).unwrap();
        assert!(sys.converged && !sys.semi_trivial);
        for w in sys.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-14 * w[0].abs());
        }
    }
}
