//! One driver per experiment kind. Drivers never fail: solver errors become
//! failed assertions so the report is always written.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use spike4_core::asymptotics::{
    decay_fit, energy_limit_check, interaction_slope, run_entry, run_sweep, separation_increasing, DecayModel,
    EpsSweepPlan, LimitProfile, SpikeTrace, SweepDomain,
};
use spike4_core::energy::{pohozaev_residual, Moments};
use spike4_core::grid::{Field, Grid, Point, RadialGrid, Ray};
use spike4_core::groundstate::{
    a1, exact_bubble_ratio, k_system, shooting_oracle, solve_scalar_ground, solve_system_ground, sobolev_constant,
    threshold_check, GroundStateResult, LimitConstants, SobolevQuadrature,
};
use spike4_core::params::Component;
use spike4_core::placement::{
    finish_phi, maximize_dist, multistart_pairs, pattern_search, phi, phi_oracle_curve, phi_star, PointPair,
};
use spike4_core::{Error, PhysParams};

use crate::config::{GridSection, Kind, RunConfig};
use crate::report::{num, Assertion, Outcome, Table};

/// Dispatches on the resolved kind.
pub fn run(kind: Kind, cfg: &RunConfig) -> Outcome {
    match kind {
        Kind::Constants => constants(cfg),
        Kind::ScalarGround => scalar_ground(cfg),
        Kind::SystemGround => system_ground(cfg),
        Kind::Sweep => sweep(cfg),
        Kind::Placement => placement(cfg),
        Kind::Interaction => interaction(cfg),
    }
}

fn timed<T>(out: &mut Outcome, key: &str, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let v = f();
    out.timings_ms.insert(key.to_string(), t.elapsed().as_secs_f64() * 1e3);
    v
}

fn components(params: &PhysParams) -> Vec<Component> {
    [Component::One, Component::Two]
        .into_iter()
        .filter(|c| params.alpha(*c) > 0.0)
        .collect()
}

fn label(c: Component) -> usize {
    c.index() + 1
}

/// Entire-space scalar level dᵢ by shooting, profile cut at `radius`/√λᵢ.
fn shooting_level(c: Component, params: &PhysParams, radius: f64) -> spike4_core::Result<f64> {
    let p = params.with_epsilon(1.0);
    Ok(shooting_oracle(c, &p, radius / p.lambda(c).sqrt())?.energy)
}

fn constants(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let sec = cfg.constants.clone().unwrap_or_default();
    let params = &cfg.params;
    let mut table = Table::new("constants", &["name", "value"]);

    let quad = SobolevQuadrature {
        sigmas: sec.sigmas.clone(),
        cutoff: sec.cutoff,
        order: sec.order,
    };
    let est = match timed(&mut out, "sobolev", || sobolev_constant(&quad)) {
        Ok(e) => e,
        Err(e) => {
            out.check(Assertion::error("sobolev", e));
            return out;
        }
    };
    let oracle = exact_bubble_ratio(sec.order);
    let rel = (est.s - oracle).abs() / oracle;
    out.result("sobolev", &est);
    out.result("sobolev_oracle", &oracle);
    out.check(Assertion::at_most("sobolev_matches_oracle", rel, sec.oracle_tolerance));
    out.check(Assertion::at_most("sobolev_gap_ratio_near_4", (est.gap_ratio - 4.0).abs(), 1.0));
    table.push(["S".into(), num(est.s)]);
    table.push(["S_oracle".into(), num(oracle)]);
    table.push(["gap_ratio".into(), num(est.gap_ratio)]);

    let s = est.s;
    let mut d = [f64::NAN; 2];
    for c in components(params) {
        let i = label(c);
        match timed(&mut out, &format!("shooting_d{i}"), || shooting_level(c, params, sec.shooting_radius)) {
            Ok(v) => d[c.index()] = v,
            Err(e) => out.check(Assertion::error(format!("d{i}"), e)),
        }
    }
    let lc = LimitConstants::new(params, s, d[0], d[1]);
    let margins = lc.scalar_margins(params);
    for c in components(params) {
        let i = label(c);
        if d[c.index()].is_finite() {
            out.check(Assertion::at_least(format!("d{i}_positive"), d[c.index()], 0.0));
            out.check(Assertion::at_least(format!("d{i}_below_threshold"), margins[c.index()], 0.0));
            table.push([format!("d{i}"), num(d[c.index()])]);
            table.push([format!("margin{i}"), num(margins[c.index()])]);
        }
    }
    out.result("limit_constants", &lc);

    match k_system(params.mu1, params.mu2, params.beta) {
        Ok((k1, k2)) => {
            let res = (params.mu1 * k1 + params.beta * k2 - 1.0)
                .abs()
                .max((params.mu2 * k2 + params.beta * k1 - 1.0).abs());
            out.result("k_residual", &res);
            out.check(Assertion::at_most("k_system_residual", res, 1e-12));
            table.push(["k1".into(), num(k1)]);
            table.push(["k2".into(), num(k2)]);
        }
        Err(e) => out.check(Assertion::error("k_system", e)),
    }

    let (lo, hi) = (params.mu1.min(params.mu2), params.mu1.max(params.mu2));
    let between = params.beta > lo && params.beta < hi;
    match a1(params, s) {
        Ok(v) => {
            out.check(Assertion::flag("a1_regime", !between));
            table.push(["A1".into(), num(v)]);
        }
        Err(e) => {
            let expected = between && matches!(e, Error::UnsupportedRegime(_));
            out.check(Assertion::flag("a1_regime", expected).with_detail(e.to_string()));
        }
    }
    // the β ≤ 0 and 0 < β < min μ branches meet at β = 0
    let at0 = a1(&params.with_beta(0.0), s);
    let near0 = a1(&params.with_beta(1e-12), s);
    match (at0, near0) {
        (Ok(a), Ok(b)) => {
            let rel = (a - b).abs() / a.abs();
            out.result("a1_continuity", &rel);
            out.check(Assertion::at_most("a1_continuous_at_zero", rel, 1e-10));
        }
        (Err(e), _) | (_, Err(e)) => out.check(Assertion::error("a1_continuous_at_zero", e)),
    }
    out.tables.push(table);
    out
}

/// (r, u1, u2) or (xi, rho, u1, u2) in node order; absent components blank.
pub fn profile_table(name: &str, grid: &Arc<Grid>, u: [Option<&Field>; 2]) -> Table {
    let mut t = if grid.is_radial() {
        Table::new(name, &["r", "u1", "u2"])
    } else {
        Table::new(name, &["xi", "rho", "u1", "u2"])
    };
    for (j, c) in grid.coords().iter().enumerate() {
        let mut row = if grid.is_radial() { vec![num(c[0])] } else { vec![num(c[0]), num(c[1])] };
        for f in u {
            row.push(f.map_or(String::new(), |f| num(f.values()[j])));
        }
        t.push(row);
    }
    t
}

fn solve_summary(r: &GroundStateResult) -> serde_json::Value {
    json!({
        "energy": r.energy,
        "breakdown": r.breakdown,
        "el_residual": r.el_residual,
        "iterations": r.iterations,
        "method": r.method,
        "converged": r.converged,
        "semi_trivial": r.semi_trivial,
        "truncation_zone": r.truncation_zone,
        "nehari": r.nehari,
    })
}

fn grid_radius(g: &GridSection) -> Option<f64> {
    match *g {
        GridSection::Radial { radius, .. } => Some(radius),
        _ => None,
    }
}

/// Decay fit about `center` with the window in units of ε/√λ.
fn decay_check(
    out: &mut Outcome,
    name: &str,
    u: &Field,
    center: &Point,
    params: &PhysParams,
    lambda: f64,
    window: [f64; 2],
    band: f64,
) {
    let w = [window[0] / lambda.sqrt(), window[1] / lambda.sqrt()];
    let ray = if u.grid().is_radial() { Ray::Radial } else { Ray::Transverse };
    match decay_fit(u, center, params.epsilon, w, ray, DecayModel::RadiallyCorrected) {
        Ok(f) => {
            out.result(name, &f);
            out.check(Assertion::at_most(name, f.sigma_for(lambda), band));
        }
        Err(e) => out.check(Assertion::error(name, e)),
    }
}

fn scalar_ground(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let sec = cfg.scalar.clone().unwrap_or_default();
    let gs = cfg.grid.expect("checked by parse_config");
    let params = &cfg.params;
    let grid = match gs.build() {
        Ok(g) => g,
        Err(e) => {
            out.check(Assertion::error("grid", e));
            return out;
        }
    };
    let comps: Vec<Component> = if sec.components.is_empty() {
        components(params)
    } else {
        match sec.components.iter().map(|n| Component::from_number(*n)).collect() {
            Ok(v) => v,
            Err(e) => {
                out.check(Assertion::error("components", e));
                return out;
            }
        }
    };
    let s = sobolev_constant(&SobolevQuadrature::default()).map(|e| e.s).unwrap_or(f64::NAN);
    let mut fields: [Option<Field>; 2] = [None, None];
    for c in comps {
        let i = label(c);
        let key = format!("u{i}");
        let res = match timed(&mut out, &format!("solve_{key}"), || {
            solve_scalar_ground(c, params, &grid, &cfg.solver)
        }) {
            Ok(r) => r,
            Err(e) => {
                out.check(Assertion::error(format!("{key}_solve"), e));
                continue;
            }
        };
        out.result(&key, &solve_summary(&res));
        out.check(Assertion::flag(format!("{key}_converged"), res.converged));
        let d = res.energy / params.epsilon.powi(4);
        out.check(Assertion::at_least(format!("{key}_below_threshold"), s * s / (4.0 * params.mu(c)) - d, 0.0));
        out.check(Assertion::at_least(format!("{key}_positive"), d, 0.0));
        let u = res.field().expect("scalar solve").clone();
        let lambda = params.lambda(c);
        if gs.is_entire(lambda) && params.epsilon == 1.0 {
            let radius = grid_radius(&gs).expect("entire grids are radial");
            match shooting_oracle(c, params, radius) {
                Ok(sh) => {
                    let rel = (res.energy - sh.energy).abs() / sh.energy;
                    out.result(&format!("{key}_shooting"), &sh);
                    out.check(Assertion::at_most(format!("{key}_matches_shooting"), rel, sec.energy_tolerance));
                }
                Err(e) => out.check(Assertion::error(format!("{key}_matches_shooting"), e)),
            }
            let poh = pohozaev_residual(&u, lambda, params.mu(c), params.alpha(c), params.p);
            out.result(&format!("{key}_pohozaev"), &json!({ "residual": poh, "relative": poh / u.grad_norm_sq() }));
            decay_check(&mut out, &format!("{key}_decay"), &u, &[0.0; 4], params, lambda, sec.decay_window, sec.decay_band);
        }
        fields[c.index()] = Some(u);
    }
    out.tables.push(profile_table("scalar_profile", &grid, [fields[0].as_ref(), fields[1].as_ref()]));
    out
}

fn system_ground(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let sec = cfg.system.clone().unwrap_or_default();
    let gs = cfg.grid.expect("checked by parse_config");
    let params = &cfg.params;
    let grid = match gs.build() {
        Ok(g) => g,
        Err(e) => {
            out.check(Assertion::error("grid", e));
            return out;
        }
    };
    let res = match timed(&mut out, "solve", || solve_system_ground(params, &grid, &cfg.solver)) {
        Ok(r) => r,
        Err(e) => {
            out.check(Assertion::error("solve", e));
            return out;
        }
    };
    let pair = res.pair().expect("system solve");
    out.result("system", &solve_summary(&res));
    out.result("nehari_relative", &res.nehari.relative(&Moments::of(pair, params)));
    out.check(Assertion::flag("converged", res.converged));
    out.check(Assertion::flag("not_semi_trivial", !res.semi_trivial));

    let lambda_min = params.lambda1.min(params.lambda2);
    if sec.compare_scalar && gs.is_entire(lambda_min) && params.epsilon == 1.0 {
        let radius = grid_radius(&gs).expect("entire grids are radial");
        let d = timed(&mut out, "shooting", || {
            Ok::<_, Error>([shooting_oracle(Component::One, params, radius)?.energy, shooting_oracle(Component::Two, params, radius)?.energy])
        });
        match d {
            Ok(d) => {
                let sum = d[0] + d[1];
                out.result("d", &d);
                let name = "level_vs_scalar_sum";
                let a = if params.beta > 0.0 {
                    Assertion::at_most(name, res.energy, sum - sec.level_margin)
                } else if params.beta < 0.0 {
                    Assertion::at_least(name, res.energy, sum - sec.level_margin)
                } else {
                    Assertion::at_most(name, (res.energy - sum).abs(), sec.level_margin)
                };
                out.check(a);
                if let Ok(est) = sobolev_constant(&SobolevQuadrature::default()) {
                    let lc = LimitConstants::new(params, est.s, d[0], d[1]);
                    out.result("thresholds", &threshold_check(res.energy, &lc, params, d));
                }
            }
            Err(e) => out.check(Assertion::error("level_vs_scalar_sum", e)),
        }
        for (i, u) in [&pair.u1, &pair.u2].into_iter().enumerate() {
            let (c, _) = u.max_point();
            let lambda = if i == 0 { params.lambda1 } else { params.lambda2 };
            decay_check(&mut out, &format!("u{}_decay", i + 1), u, &c, params, lambda, sec.decay_window, sec.decay_band);
        }
    }
    out.tables.push(profile_table("system_profile", &grid, [Some(&pair.u1), Some(&pair.u2)]));
    out
}

/// ε = 1 limit problem on a radial grid matching the sweep's node density.
fn matched_limit(plan: &EpsSweepPlan, radius: f64) -> spike4_core::Result<LimitProfile> {
    let n = (radius * plan.nodes_per_eps).round() as usize;
    let grid = Grid::radial(RadialGrid::uniform(radius, n))?;
    let mut opts = plan.solve.clone();
    opts.initial = None;
    let r = solve_system_ground(&plan.params.with_epsilon(1.0), &grid, &opts)?;
    let pair = r.pair().expect("system solve");
    Ok(LimitProfile {
        v: [pair.u1.clone(), pair.u2.clone()],
        b: r.energy,
    })
}

fn continuum_level(plan: &EpsSweepPlan, radius: f64) -> spike4_core::Result<f64> {
    let grid = Grid::radial(RadialGrid::graded(radius, 2000, 0.05))?;
    let mut opts = plan.solve.clone();
    opts.initial = None;
    Ok(solve_system_ground(&plan.params.with_epsilon(1.0), &grid, &opts)?.energy)
}

fn cold_sweep(plan: &EpsSweepPlan, limit: Option<&LimitProfile>) -> Vec<SpikeTrace> {
    plan.eps.par_iter().map(|&e| run_entry(plan, e, None, limit).0).collect()
}

fn trace_table(trace: &[SpikeTrace]) -> Table {
    let mut t = Table::new(
        "sweep_trace",
        &[
            "eps", "spacing", "ok", "converged", "semi_trivial", "truncation_zone", "iterations", "el_residual",
            "p1_1", "p1_2", "p1_3", "p1_4", "p2_1", "p2_2", "p2_3", "p2_4", "max1", "max2", "dist1", "dist2",
            "separation", "scaled_energy", "l2_error1", "l2_error2", "linf_error1", "linf_error2", "error",
        ],
    );
    for e in trace {
        let mut row = vec![
            num(e.eps),
            num(e.spacing),
            e.ok.to_string(),
            e.converged.to_string(),
            e.semi_trivial.to_string(),
            e.truncation_zone.to_string(),
            e.iterations.to_string(),
            num(e.el_residual),
        ];
        row.extend(e.p1.iter().chain(e.p2.iter()).map(|x| num(*x)));
        row.extend(
            [e.max1, e.max2, e.dist1, e.dist2, e.separation, e.scaled_energy, e.l2_error[0], e.l2_error[1], e.linf_error[0], e.linf_error[1]]
                .map(num),
        );
        row.push(e.error.clone().unwrap_or_default());
        t.push(row);
    }
    t
}

fn sweep(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let sec = cfg.sweep.clone().expect("checked by parse_config");
    let plan = EpsSweepPlan {
        eps: sec.eps.clone(),
        domain: sec.domain,
        params: cfg.params,
        nodes_per_eps: sec.nodes_per_eps,
        warm_start: sec.warm_start,
        solve: cfg.solver.clone(),
    };
    if let Err(e) = plan.validate() {
        out.check(Assertion::error("plan", e));
        return out;
    }
    let attractive = cfg.params.beta > 0.0;
    let radial = matches!(plan.domain, SweepDomain::RadialBall { .. });

    let limit = if attractive && radial {
        match timed(&mut out, "limit", || matched_limit(&plan, sec.limit_radius)) {
            Ok(l) => Some(l),
            Err(e) => {
                out.check(Assertion::error("limit", e));
                None
            }
        }
    } else {
        None
    };
    if attractive {
        match timed(&mut out, "continuum_limit", || continuum_level(&plan, sec.limit_radius)) {
            Ok(b) => out.result("b_continuum", &b),
            Err(e) => out.check(Assertion::error("continuum_limit", e)),
        }
    }

    let trace = timed(&mut out, "sweep", || {
        if plan.warm_start {
            run_sweep(&plan, limit.as_ref()).unwrap_or_default()
        } else {
            cold_sweep(&plan, limit.as_ref())
        }
    });
    out.result("trace", &trace);
    out.check(Assertion::flag("all_entries_solved", trace.iter().all(|t| t.ok)));

    if attractive {
        let b = limit
            .as_ref()
            .map(|l| l.b)
            .or_else(|| out.results.get("b_continuum").and_then(|v| v.as_f64()));
        if let Some(b) = b {
            out.result("b", &b);
            match energy_limit_check(&trace, b, sec.final_gap_tolerance) {
                Ok(r) => {
                    out.check(Assertion::flag("energy_gap_monotone", r.monotone));
                    out.check(Assertion::at_most("energy_final_gap", r.final_gap, sec.final_gap_tolerance));
                    out.result("energy_limit", &r);
                }
                Err(e) => out.check(Assertion::error("energy_limit", e)),
            }
        }
        if limit.is_some() {
            let l2: Vec<f64> = trace.iter().map(|t| t.l2_error[0].max(t.l2_error[1])).collect();
            let decreasing = l2.len() >= 2 && l2.windows(2).all(|w| w[1] < w[0]);
            out.check(Assertion::flag("profile_error_decreasing", decreasing));
        }
        if let Some(last) = trace.last() {
            let cell = last.spacing / last.eps;
            out.check(Assertion::at_most("final_separation_within_cell", last.separation, cell));
            let inradius = match plan.domain {
                SweepDomain::RadialBall { radius } | SweepDomain::AxiBall { radius } => radius,
            };
            let off = (last.dist1 - inradius).abs().max((last.dist2 - inradius).abs());
            out.check(Assertion::at_most("boundary_distance_at_inradius", off, last.spacing));
        }
    } else {
        out.check(Assertion::flag("separation_increasing", separation_increasing(&trace)));
    }

    if sec.compare_cold && plan.warm_start {
        let cold = timed(&mut out, "cold_sweep", || cold_sweep(&plan, limit.as_ref()));
        let diff = trace
            .iter()
            .zip(&cold)
            .map(|(a, b)| ((a.scaled_energy - b.scaled_energy) / b.scaled_energy).abs())
            .fold(0.0, f64::max);
        out.result("warm_cold_difference", &diff);
        out.check(Assertion::at_most("warm_matches_cold", diff, 1e-6));
    }
    out.tables.push(trace_table(&trace));
    out
}

fn placement(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let sec = cfg.placement.clone().expect("checked by parse_config");
    let lambda = sec.lambda.unwrap_or([cfg.params.lambda1, cfg.params.lambda2]);
    let domain = sec.domain;
    let opts = &sec.options;

    match timed(&mut out, "maximize_dist", || maximize_dist(&domain)) {
        Ok(r) => {
            out.check(Assertion::at_most("dist_gap", r.gap.unwrap_or(f64::NAN).abs(), sec.gap_tolerance));
            out.result("maximize_dist", &r);
        }
        Err(e) => out.check(Assertion::error("maximize_dist", e)),
    }

    let best = timed(&mut out, "maximize_phi", || {
        domain.validate()?;
        let starts = multistart_pairs(&domain, opts.starts.max(1), opts.seed);
        // same per-start seeds as the sequential core routine
        let runs: Vec<_> = starts
            .par_iter()
            .enumerate()
            .map(|(j, s)| pattern_search(&domain, lambda, s, opts, opts.seed ^ (j as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
            .collect();
        finish_phi(&domain, lambda, &runs, opts)
    });
    let best = match best {
        Ok(r) => r,
        Err(e) => {
            out.check(Assertion::error("maximize_phi", e));
            return out;
        }
    };
    out.check(Assertion::at_most("phi_gap", best.gap.unwrap_or(f64::NAN).abs(), sec.gap_tolerance));
    out.result("maximize_phi", &best);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst_probe = f64::NEG_INFINITY;
    let mut worst_limit: f64 = 0.0;
    for _ in 0..sec.probes {
        let pair = PointPair {
            p1: domain.sample(&mut rng),
            p2: domain.sample(&mut rng),
        };
        worst_probe = worst_probe.max(phi(&pair, lambda, &domain));
        // b₂ → 0 leaves the component-1 weight on the separation
        let limit = {
            let (s1, s2) = (lambda[0].sqrt(), lambda[1].sqrt());
            let d1 = domain.dist_boundary(&pair.p1).value;
            let d2 = domain.dist_boundary(&pair.p2).value;
            (s1 * spike4_core::grid::dist4(&pair.p1, &pair.p2)).min(s1 * d1).min(s2 * d2)
        };
        if let Ok(v) = phi_star(&pair, [1.0, 1e-14], lambda, &domain) {
            worst_limit = worst_limit.max((v - limit).abs());
        }
    }
    if sec.probes > 0 {
        out.check(Assertion::at_most("probes_below_max", worst_probe, best.value + 1e-12));
        out.check(Assertion::at_most("phi_star_limit", worst_limit, 1e-10));
    }

    let mut t = Table::new("placement", &["quantity", "value"]);
    if let spike4_core::placement::Optimizer::Pair { pair } = best.optimizer {
        for (k, x) in pair.p1.iter().enumerate() {
            t.push([format!("p1_{}", k + 1), num(*x)]);
        }
        for (k, x) in pair.p2.iter().enumerate() {
            t.push([format!("p2_{}", k + 1), num(*x)]);
        }
    }
    t.push(["phi".into(), num(best.value)]);
    t.push(["oracle".into(), num(best.oracle_value.unwrap_or(f64::NAN))]);
    t.push(["gap".into(), num(best.gap.unwrap_or(f64::NAN))]);
    out.tables.push(t);
    let mut curve = Table::new("oracle_curve", &["a", "phi"]);
    for (a, v) in phi_oracle_curve(&domain, lambda, sec.curve_points) {
        curve.push([num(a), num(v)]);
    }
    out.tables.push(curve);
    out
}

fn interaction(cfg: &RunConfig) -> Outcome {
    let mut out = Outcome::default();
    let sec = cfg.interaction.clone().unwrap_or_default();
    let params = cfg.params.with_epsilon(1.0);
    let lambda = [params.lambda1, params.lambda2];
    let profiles = timed(&mut out, "shooting", || {
        Ok::<_, Error>([
            shooting_oracle(Component::One, &params, sec.shooting_radius)?.profile,
            shooting_oracle(Component::Two, &params, sec.shooting_radius)?.profile,
        ])
    });
    let [v1, v2] = match profiles {
        Ok(p) => p,
        Err(e) => {
            out.check(Assertion::error("profiles", e));
            return out;
        }
    };
    let fits: Vec<_> = timed(&mut out, "fits", || {
        sec.d
            .par_iter()
            .map(|&d| {
                let eps: Vec<f64> = sec.scaled_separations.iter().map(|s| d / s).collect();
                interaction_slope(&v1, &v2, d, &eps, lambda)
            })
            .collect()
    });
    let mut t = Table::new("interaction", &["d", "eps", "value", "dropped", "truncated"]);
    let mut ok = Vec::new();
    for (d, f) in sec.d.iter().zip(fits) {
        match f {
            Ok(f) => {
                out.check(Assertion::at_most(format!("slope_d{d}"), f.relative_error, sec.tolerance));
                for p in &f.points {
                    t.push([num(f.d), num(p.eps), num(p.value), p.dropped.to_string(), p.truncated.to_string()]);
                }
                ok.push(f);
            }
            Err(e) => out.check(Assertion::error(format!("slope_d{d}"), e)),
        }
    }
    out.result("fits", &ok);
    out.tables.push(t);
    out
}
