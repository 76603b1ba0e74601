use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::energy::{grad_e_scalar, EnergyBreakdown, ScalarMoments};
use crate::grid::{Field, Grid};
use crate::linalg::tridiagonal_solve;
use crate::math::FloatExt;
use crate::nehari::{scalar_project, NehariResidual};
use crate::params::{Component, PhysParams};
use crate::{Error, Result};

use super::{check_spike, jitter, GroundStateResult, InitialProfile, Method, SolveOptions, State};

const ARMIJO: f64 = 1e-4;

/// Ground state of 𝓔ᵢ over its Nehari set on `grid`.
pub fn solve_scalar_ground(
    component: Component,
    params: &PhysParams,
    grid: &Arc<Grid>,
    opts: &SolveOptions,
) -> Result<GroundStateResult> {
    let report = params.validate();
    if !report.is_valid() {
        return Err(Error::InvalidParams(report.violations.join("; ")));
    }
    if !(params.alpha(component) > 0.0) {
        return Err(Error::InvalidParams("scalar solves require αᵢ > 0".into()));
    }
    opts.validate()?;
    let lambda = params.lambda(component);
    let eps = params.epsilon;
    let init = match &opts.initial {
        Some(profiles) => profiles[component.index()].clone(),
        None => InitialProfile::Gaussian {
            width: 1.5 * eps / lambda.sqrt(),
            center: [0.0; 4],
            amplitude: 1.0,
        },
    };
    let mut u = init.realize(grid)?;
    jitter(&mut u, opts.seed, opts.jitter);
    let mut u = scalar_project(&u.abs(), component, params)?.projected;
    let newton_ready = opts.polish && grid.is_radial();
    let flow_tol = if newton_ready { opts.tol.max(1e-5) } else { opts.tol };

    let energy = |v: &Field| ScalarMoments::of(v, component, params).energy(component, params);
    let mut e = energy(&u);
    let mut history = alloc::vec![e];
    let mut eta = opts.step;
    let mut iterations = 0;
    let mut el = f64::INFINITY;
    while iterations < opts.max_iter {
        let g = grad_e_scalar(&u, component, params);
        el = relative_residual(&g, &u, lambda, eps);
        if el < flow_tol {
            break;
        }
        let d = g.apply_inverse_operator(lambda, eps);
        let slope = g.dot(&d)?;
        let mut accepted = None;
        while eta > 1e-12 {
            let trial = u.axpy(-eta, &d)?.abs();
            if let Ok(proj) = scalar_project(&trial, component, params) {
                let en = energy(&proj.projected);
                if en <= e - ARMIJO * eta * slope {
                    accepted = Some((proj.projected, en));
                    break;
                }
            }
            eta *= 0.5;
        }
        let Some((v, en)) = accepted else {
            break;
        };
        if en > e {
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
    if newton_ready {
        if let Some(v) = newton_scalar(&u, component, params) {
            let ev = energy(&v);
            let gv = grad_e_scalar(&v, component, params);
            let elv = relative_residual(&gv, &v, lambda, eps);
            if elv < el && (ev - e).abs() <= 1e-6 * e.abs() + 1e-12 {
                u = v;
                e = ev;
                el = elv;
                method = Method::GradientFlowNewton;
            }
        }
    }
    check_spike(&u, opts)?;
    let m = ScalarMoments::of(&u, component, params);
    let mut breakdown = EnergyBreakdown {
        h1_1: 0.0,
        h1_2: 0.0,
        sub_1: 0.0,
        sub_2: 0.0,
        quartic_1: 0.0,
        quartic_2: 0.0,
        coupling: 0.0,
        chi: 1.0,
        total: 0.0,
    };
    let (h1, sub, quartic) = (
        0.5 * m.norm_sq,
        params.alpha(component) / params.p * m.sub,
        params.mu(component) / 4.0 * m.quartic,
    );
    match component {
        Component::One => {
            breakdown.h1_1 = h1;
            breakdown.sub_1 = sub;
            breakdown.quartic_1 = quartic;
        }
        Component::Two => {
            breakdown.h1_2 = h1;
            breakdown.sub_2 = sub;
            breakdown.quartic_2 = quartic;
        }
    }
    breakdown.total = breakdown.reassemble();
    let pairing = m.pairing(component, params);
    let nehari = match component {
        Component::One => NehariResidual { g1: pairing, g2: 0.0 },
        Component::Two => NehariResidual { g1: 0.0, g2: pairing },
    };
    Ok(GroundStateResult {
        state: State::Scalar { component, field: u },
        breakdown,
        energy: e,
        el_residual: el,
        iterations,
        nehari,
        method,
        converged: el < opts.tol,
        semi_trivial: false,
        truncation_zone: false,
        history,
    })
}

pub(super) fn relative_residual(g: &Field, u: &Field, lambda: f64, eps: f64) -> f64 {
    let lu = u.apply_operator(lambda, eps);
    g.l2_norm() / lu.l2_norm().max(f64::MIN_POSITIVE)
}

/// Newton's method on the free radial nodes, with step halving on the
/// residual norm.
fn newton_scalar(u0: &Field, component: Component, params: &PhysParams) -> Option<Field> {
    let grid = u0.grid();
    let (lower, diag0, upper) = grid.radial_laplacian_bands()?;
    let n = diag0.len();
    let lambda = params.lambda(component);
    let (alpha, mu, p) = (params.alpha(component), params.mu(component), params.p);
    let e2 = params.epsilon * params.epsilon;
    let lower: Vec<f64> = lower.iter().map(|x| e2 * x).collect();
    let upper: Vec<f64> = upper.iter().map(|x| e2 * x).collect();
    let mut u = u0.clone();
    let mut g = grad_e_scalar(&u, component, params);
    let mut res = g.l2_norm();
    for _ in 0..40 {
        let lu = u.apply_operator(lambda, params.epsilon).l2_norm();
        if res <= 1e-14 * lu {
            break;
        }
        let vals = u.values();
        let diag: Vec<f64> = (0..n)
            .map(|j| {
                let x = vals[j].abs();
                let sub = if x == 0.0 { 0.0 } else { (p - 1.0) * alpha * x.powf(p - 2.0) };
                e2 * diag0[j] + lambda - sub - 3.0 * mu * x * x
            })
            .collect();
        let rhs: Vec<f64> = g.values()[..n].iter().map(|x| -x).collect();
        let delta = tridiagonal_solve(&lower, &diag, &upper, &rhs);
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let mut v = u.clone();
            for (x, d) in v.values_mut().iter_mut().zip(&delta) {
                *x += step * d;
            }
            let gv = grad_e_scalar(&v, component, params);
            let rv = gv.l2_norm();
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
    if u.values().iter().any(|x| *x < -1e-12 * u.max_abs()) {
        return None;
    }
    Some(u.abs())
}
