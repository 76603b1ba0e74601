//! Where spikes sit: boundary distances in symmetric 4-D domains and the
//! min-max placement functionals φ, φ*.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{dist4, Point};
use crate::math::FloatExt;
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 0x5eed_0004;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain4 {
    Ball { center: Point, radius: f64 },
    Box { lo: Point, hi: Point },
    Shell { center: Point, r_in: f64, r_out: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDistance {
    pub value: f64,
    pub outside: bool,
}

impl Domain4 {
    pub fn ball(radius: f64) -> Self {
        Domain4::Ball { center: [0.0; 4], radius }
    }

    pub fn unit_box() -> Self {
        Domain4::Box { lo: [0.0; 4], hi: [1.0; 4] }
    }

    pub fn shell(r_in: f64, r_out: f64) -> Self {
        Domain4::Shell { center: [0.0; 4], r_in, r_out }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Domain4::Ball { radius, .. } => radius > 0.0,
            Domain4::Box { lo, hi } => (0..4).all(|k| hi[k] > lo[k]),
            Domain4::Shell { r_in, r_out, .. } => r_in >= 0.0 && r_out > r_in,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config("domain must have positive measure (shell: r_in < r_out)".into()))
        }
    }

    /// Signed distance: positive inside, negative outside.
    fn signed_dist(&self, x: &Point) -> f64 {
        match *self {
            Domain4::Ball { center, radius } => radius - dist4(x, &center),
            Domain4::Box { lo, hi } => (0..4).map(|k| (x[k] - lo[k]).min(hi[k] - x[k])).fold(f64::INFINITY, f64::min),
            Domain4::Shell { center, r_in, r_out } => {
                let r = dist4(x, &center);
                (r - r_in).min(r_out - r)
            }
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.signed_dist(x) >= 0.0
    }

    /// Exact Euclidean distance to ∂Ω; 0 with the flag set outside Ω̄.
    pub fn dist_boundary(&self, x: &Point) -> BoundaryDistance {
        let d = self.signed_dist(x);
        BoundaryDistance {
            value: d.max(0.0),
            outside: d < 0.0,
        }
    }

    fn center(&self) -> Point {
        match *self {
            Domain4::Ball { center, .. } | Domain4::Shell { center, .. } => center,
            Domain4::Box { lo, hi } => core::array::from_fn(|k| 0.5 * (lo[k] + hi[k])),
        }
    }

    fn bounding_box(&self) -> (Point, Point) {
        match *self {
            Domain4::Ball { center, radius: r } | Domain4::Shell { center, r_out: r, .. } => {
                (core::array::from_fn(|k| center[k] - r), core::array::from_fn(|k| center[k] + r))
            }
            Domain4::Box { lo, hi } => (lo, hi),
        }
    }

    fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        dist4(&lo, &hi)
    }

    /// Largest boundary distance any point can have.
    fn inradius(&self) -> f64 {
        match *self {
            Domain4::Ball { radius, .. } => radius,
            Domain4::Box { lo, hi } => (0..4).map(|k| 0.5 * (hi[k] - lo[k])).fold(f64::INFINITY, f64::min),
            Domain4::Shell { r_in, r_out, .. } => 0.5 * (r_out - r_in),
        }
    }

    /// Uniform point of Ω by rejection from the bounding box.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        let (lo, hi) = self.bounding_box();
        loop {
            let x: Point = core::array::from_fn(|k| lo[k] + (hi[k] - lo[k]) * rng.gen::<f64>());
            if self.signed_dist(&x) > 0.0 {
                return x;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub p1: Point,
    pub p2: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Point { x: Point },
    Pair { pair: PointPair },
}

/// Maximizers are not unique; this names the family the reported one
/// belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Orbit {
    /// Any rotation about `center` maps maximizers to maximizers.
    Rotations { center: Point },
    /// Reflections of the box through its centre planes.
    BoxReflections,
    /// Only the reported point.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementMethod {
    ClosedForm,
    PatternSearch,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    pub optimizer: Optimizer,
    pub value: f64,
    pub method: PlacementMethod,
    pub oracle_value: Option<f64>,
    /// Oracle value minus the general method's value.
    pub gap: Option<f64>,
    pub iterations: usize,
    pub orbit: Orbit,
}

/// Maximizes dist(·, ∂Ω), in closed form, and reports the gap to a
/// grid-refinement search.
pub fn maximize_dist(domain: &Domain4) -> Result<PlacementResult> {
    domain.validate()?;
    let c = domain.center();
    let (x, orbit) = match *domain {
        Domain4::Ball { .. } => (c, Orbit::Single),
        Domain4::Box { .. } => (c, Orbit::Single),
        Domain4::Shell { r_in, r_out, .. } => {
            let mut x = c;
            x[0] += 0.5 * (r_in + r_out);
            (x, Orbit::Rotations { center: c })
        }
    };
    let value = domain.dist_boundary(&x).value;
    let (oracle, iterations) = dist_oracle(domain);
    Ok(PlacementResult {
        optimizer: Optimizer::Point { x },
        value,
        method: PlacementMethod::ClosedForm,
        oracle_value: Some(oracle),
        gap: Some(oracle - value),
        iterations,
        orbit,
    })
}

/// Zooming grid search for the inradius: over the radius along e₁ for
/// ball and shell, over a 9⁴ lattice for the box.
fn dist_oracle(domain: &Domain4) -> (f64, usize) {
    let c = domain.center();
    let mut evals = 0;
    match *domain {
        Domain4::Ball { .. } | Domain4::Shell { .. } => {
            let (_, hi) = domain.bounding_box();
            let (mut a, mut b) = (0.0, hi[0] - c[0]);
            let mut best = 0.0;
            for _ in 0..40 {
                let n = 64;
                let mut arg = a;
                for j in 0..=n {
                    let t = a + (b - a) * j as f64 / n as f64;
                    let mut x = c;
                    x[0] += t;
                    let v = domain.dist_boundary(&x).value;
                    evals += 1;
                    if v > best {
                        best = v;
                        arg = t;
                    }
                }
                let w = 2.0 * (b - a) / n as f64;
                a = (arg - w).max(0.0);
                b = arg + w;
            }
            (best, evals)
        }
        Domain4::Box { lo, hi } => {
            let (mut a, mut b) = (lo, hi);
            let mut best = 0.0;
            let n = 8;
            for _ in 0..30 {
                let mut arg = c;
                for idx in 0..(n + 1usize).pow(4) {
                    let mut x = [0.0; 4];
                    let mut rest = idx;
                    for k in 0..4 {
                        x[k] = a[k] + (b[k] - a[k]) * (rest % (n + 1)) as f64 / n as f64;
                        rest /= n + 1;
                    }
                    let v = domain.dist_boundary(&x).value;
                    evals += 1;
                    if v > best {
                        best = v;
                        arg = x;
                    }
                }
                for k in 0..4 {
                    let w = 2.0 * (b[k] - a[k]) / n as f64;
                    a[k] = (arg[k] - w).max(lo[k]);
                    b[k] = (arg[k] + w).min(hi[k]);
                }
            }
            (best, evals)
        }
    }
}

/// min over i of √λᵢ·min(|P₁ − P₂|, dist(Pᵢ, ∂Ω)).
pub fn phi(pair: &PointPair, lambda: [f64; 2], domain: &Domain4) -> f64 {
    let sep = dist4(&pair.p1, &pair.p2);
    let d1 = domain.dist_boundary(&pair.p1).value;
    let d2 = domain.dist_boundary(&pair.p2).value;
    let (s1, s2) = (lambda[0].sqrt(), lambda[1].sqrt());
    (s1 * sep).min(s1 * d1).min(s2 * sep).min(s2 * d2)
}

/// Weighted-separation variant: min of (√λ₁b₁ + √λ₂b₂)/(b₁ + b₂)·|P₁ − P₂|
/// and √λᵢ·dist(Pᵢ, ∂Ω).
pub fn phi_star(pair: &PointPair, b: [f64; 2], lambda: [f64; 2], domain: &Domain4) -> Result<f64> {
    if !(b[0] > 0.0 && b[1] > 0.0) {
        return Err(Error::Domain("φ* weights must be positive".into()));
    }
    let (s1, s2) = (lambda[0].sqrt(), lambda[1].sqrt());
    let factor = (s1 * b[0] + s2 * b[1]) / (b[0] + b[1]);
    let sep = dist4(&pair.p1, &pair.p2);
    let d1 = domain.dist_boundary(&pair.p1).value;
    let d2 = domain.dist_boundary(&pair.p2).value;
    Ok((factor * sep).min(s1 * d1).min(s2 * d2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSet {
    /// The point p on [P₁, P₂] with b₁|p − P₁| = b₂|p − P₂|.
    pub segment_point: Point,
    /// Points of {b₁|x − P₁| = b₂|x − P₂|} inside Ω̄, the segment point
    /// first when it lies in Ω̄.
    pub points: Vec<Point>,
    /// No sampled point fell inside Ω̄.
    pub empty: bool,
}

fn unit_gaussian_dir<R: Rng>(rng: &mut R) -> Point {
    loop {
        let v: Point = core::array::from_fn(|_| 2.0 * rng.gen::<f64>() - 1.0);
        let n = dist4(&v, &[0.0; 4]);
        if n > 1e-3 && n <= 1.0 {
            return core::array::from_fn(|k| v[k] / n);
        }
    }
}

/// Samples the weighted bisector {b₁|x − P₁| = b₂|x − P₂|}: a hyperplane
/// when b₁ = b₂, otherwise an Apollonius sphere.
pub fn lambda_set_sample(pair: &PointPair, b: [f64; 2], domain: &Domain4, count: usize, seed: u64) -> Result<LambdaSet> {
    if !(b[0] > 0.0 && b[1] > 0.0) {
        return Err(Error::Domain("weights must be positive".into()));
    }
    let (p1, p2) = (pair.p1, pair.p2);
    let len = dist4(&p1, &p2);
    if !(len > 0.0) {
        return Err(Error::Domain("P₁ = P₂".into()));
    }
    let s1 = b[1] * len / (b[0] + b[1]);
    let seg: Point = core::array::from_fn(|k| p1[k] + s1 / len * (p2[k] - p1[k]));
    let mut points = Vec::with_capacity(count);
    if domain.contains(&seg) {
        points.push(seg);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = b[1] / b[0];
    let reach = domain.diameter();
    let mut tries = 0;
    while points.len() < count && tries < 200 * count.max(1) {
        tries += 1;
        let dir = unit_gaussian_dir(&mut rng);
        let x: Point = if (k - 1.0).abs() < 1e-14 {
            // hyperplane through the midpoint, normal P₂ − P₁
            let n: Point = core::array::from_fn(|i| (p2[i] - p1[i]) / len);
            let dn: f64 = (0..4).map(|i| dir[i] * n[i]).sum();
            let t: Point = core::array::from_fn(|i| dir[i] - dn * n[i]);
            let tn = dist4(&t, &[0.0; 4]);
            if tn < 1e-9 {
                continue;
            }
            let r = reach * rng.gen::<f64>();
            core::array::from_fn(|i| seg[i] + r * t[i] / tn)
        } else {
            // |x − P₁| = k|x − P₂|
            let k2 = k * k;
            let c: Point = core::array::from_fn(|i| (p1[i] - k2 * p2[i]) / (1.0 - k2));
            let rho = k * len / (1.0 - k2).abs();
            core::array::from_fn(|i| c[i] + rho * dir[i])
        };
        if domain.contains(&x) {
            points.push(x);
        }
    }
    let empty = points.is_empty();
    Ok(LambdaSet {
        segment_point: seg,
        points,
        empty,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementOptions {
    pub starts: usize,
    pub seed: u64,
    /// Initial compass step as a fraction of the domain diameter.
    pub initial_step: f64,
    /// Stop once the step falls below this (absolute).
    pub min_step: f64,
    pub max_iter: usize,
    /// Lattice points per axis of the oracle's first pass.
    pub oracle_resolution: usize,
}

impl Default for PlacementOptions {
    fn default() -> Self {
        PlacementOptions {
            starts: 32,
            seed: DEFAULT_SEED,
            initial_step: 0.1,
            min_step: 1e-10,
            max_iter: 20_000,
            oracle_resolution: 400,
        }
    }
}

fn pair_coords(p: &PointPair) -> [f64; 8] {
    core::array::from_fn(|k| if k < 4 { p.p1[k] } else { p.p2[k - 4] })
}

fn coords_pair(x: &[f64; 8]) -> PointPair {
    PointPair {
        p1: core::array::from_fn(|k| x[k]),
        p2: core::array::from_fn(|k| x[k + 4]),
    }
}

/// Search directions in pair space: each point alone along ±e_k, both
/// together (translation) and opposite (spread), along axes and along
/// diagonals. The combined moves get past kinks where several terms of
/// the min are active.
fn directions() -> Vec<[f64; 8]> {
    let mut out = Vec::with_capacity(96);
    for k in 0..4 {
        for s in [1.0, -1.0] {
            let mut a = [0.0; 8];
            a[k] = s;
            out.push(a);
            let mut b = [0.0; 8];
            b[k + 4] = s;
            out.push(b);
            let mut t = [0.0; 8];
            t[k] = s;
            t[k + 4] = s;
            out.push(t);
            let mut d = [0.0; 8];
            d[k] = s;
            d[k + 4] = -s;
            out.push(d);
        }
    }
    // diagonal sign vectors: a box corner moves every coordinate at once
    for m in 0..16u32 {
        let v: Point = core::array::from_fn(|k| if m >> k & 1 == 1 { 0.5 } else { -0.5 });
        out.push(core::array::from_fn(|k| if k < 4 { v[k] } else { 0.0 }));
        out.push(core::array::from_fn(|k| if k < 4 { 0.0 } else { v[k - 4] }));
        out.push(core::array::from_fn(|k| if k < 4 { v[k] } else { -v[k - 4] }));
        out.push(core::array::from_fn(|k| if k < 4 { v[k] } else { v[k - 4] }));
    }
    out
}

/// Compass pattern search from `start`, halving the step whenever no
/// direction improves. Returns (pair, value, iterations).
pub fn pattern_search(domain: &Domain4, lambda: [f64; 2], start: &PointPair, opts: &PlacementOptions, seed: u64) -> (PointPair, f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs = directions();
    let f = |x: &[f64; 8]| -> f64 {
        let p = coords_pair(x);
        if !domain.contains(&p.p1) || !domain.contains(&p.p2) {
            return f64::NEG_INFINITY;
        }
        phi(&p, lambda, domain)
    };
    let mut x = pair_coords(start);
    let mut fx = f(&x);
    let mut step = opts.initial_step * domain.diameter();
    let mut it = 0;
    while step > opts.min_step && it < opts.max_iter {
        it += 1;
        let mut moved = false;
        // a few random directions break ties the fixed set cannot
        let extra: Vec<[f64; 8]> = (0..4)
            .map(|_| {
                let a = unit_gaussian_dir(&mut rng);
                let b = unit_gaussian_dir(&mut rng);
                core::array::from_fn(|k| if k < 4 { a[k] } else { b[k - 4] })
            })
            .collect();
        for d in dirs.iter().chain(extra.iter()) {
            let y: [f64; 8] = core::array::from_fn(|k| x[k] + step * d[k]);
            let fy = f(&y);
            if fy > fx {
                x = y;
                fx = fy;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (coords_pair(&x), fx, it)
}

/// Deterministic start pairs: start j draws from its own sub-seed.
pub fn multistart_pairs(domain: &Domain4, count: usize, seed: u64) -> Vec<PointPair> {
    (0..count)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(j as u64));
            PointPair {
                p1: domain.sample(&mut rng),
                p2: domain.sample(&mut rng),
            }
        })
        .collect()
}

/// The reduced pair at boundary margins (a₁, a₂): opposite extreme
/// points of the two inner parallel sets (collinear through the centre
/// for ball and shell, opposite corners of the inner boxes for a box),
/// and min(√λ_min·|P₁ − P₂|, √λ₁a₁, √λ₂a₂).
pub fn phi_reduced(domain: &Domain4, lambda: [f64; 2], a1: f64, a2: f64) -> (PointPair, f64) {
    let c = domain.center();
    let pair = match *domain {
        Domain4::Ball { radius: r, .. } | Domain4::Shell { r_out: r, .. } => {
            let mut p1 = c;
            let mut p2 = c;
            p1[0] += r - a1;
            p2[0] -= r - a2;
            PointPair { p1, p2 }
        }
        Domain4::Box { lo, hi } => PointPair {
            p1: core::array::from_fn(|k| hi[k] - a1),
            p2: core::array::from_fn(|k| lo[k] + a2),
        },
    };
    let sep = dist4(&pair.p1, &pair.p2);
    let smin = lambda[0].min(lambda[1]).sqrt();
    let v = (smin * sep).min(lambda[0].sqrt() * a1).min(lambda[1].sqrt() * a2);
    (pair, v)
}

/// Exact oracle: dist(Pᵢ, ∂Ω) ≥ aᵢ confines Pᵢ to an inner parallel set,
/// and the largest separation between two such sets is attained by the
/// reduced pair, so max φ is the max of [`phi_reduced`] over
/// (a₁, a₂) ∈ [0, inradius]². Zooming lattice search.
pub fn phi_oracle(domain: &Domain4, lambda: [f64; 2], resolution: usize) -> (PointPair, f64) {
    let amax = domain.inradius();
    let n = resolution.max(8);
    let (mut lo, mut hi) = ([0.0, 0.0], [amax, amax]);
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for _ in 0..40 {
        for i in 0..=n {
            for j in 0..=n {
                let a1 = lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64;
                let a2 = lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64;
                let v = phi_reduced(domain, lambda, a1, a2).1;
                if v > best.2 {
                    best = (a1, a2, v);
                }
            }
        }
        let w = [2.0 * (hi[0] - lo[0]) / n as f64, 2.0 * (hi[1] - lo[1]) / n as f64];
        if w[0].max(w[1]) < 1e-15 * amax {
            break;
        }
        lo = [(best.0 - w[0]).max(0.0), (best.1 - w[1]).max(0.0)];
        hi = [(best.0 + w[0]).min(amax), (best.1 + w[1]).min(amax)];
    }
    (phi_reduced(domain, lambda, best.0, best.1).0, best.2)
}

/// max over a₂ of the reduced φ at each of `points` values of a₁, for
/// plotting.
pub fn phi_oracle_curve(domain: &Domain4, lambda: [f64; 2], points: usize) -> Vec<(f64, f64)> {
    let amax = domain.inradius();
    let n = points.max(2) - 1;
    (0..=n)
        .map(|i| {
            let a1 = amax * i as f64 / n as f64;
            let best = (0..=4 * n)
                .map(|j| phi_reduced(domain, lambda, a1, amax * j as f64 / (4 * n) as f64).1)
                .fold(f64::NEG_INFINITY, f64::max);
            (a1, best)
        })
        .collect()
}

/// Pattern-search runs reduced to the best one, ties broken by start index.
pub fn best_run(runs: &[(PointPair, f64, usize)]) -> Option<(usize, PointPair, f64)> {
    let mut best: Option<(usize, PointPair, f64)> = None;
    for (j, (p, v, _)) in runs.iter().enumerate() {
        if best.as_ref().map_or(true, |b| *v > b.2) {
            best = Some((j, *p, *v));
        }
    }
    best
}

/// Combines finished pattern-search runs with the oracle. The reported
/// optimizer is the better of the two; `gap` is oracle minus search.
pub fn finish_phi(domain: &Domain4, lambda: [f64; 2], runs: &[(PointPair, f64, usize)], opts: &PlacementOptions) -> Result<PlacementResult> {
    let (ps, vs) = match best_run(runs) {
        Some((_, p, v)) => (p, v),
        None => return Err(Error::Usage("no pattern-search runs".into())),
    };
    let iterations = runs.iter().map(|r| r.2).sum();
    let (po, vo) = phi_oracle(domain, lambda, opts.oracle_resolution);
    let orbit = match domain {
        Domain4::Box { .. } => Orbit::BoxReflections,
        _ => Orbit::Rotations { center: domain.center() },
    };
    let (pair, value, method) = if vo > vs { (po, vo, PlacementMethod::Oracle) } else { (ps, vs, PlacementMethod::PatternSearch) };
    Ok(PlacementResult {
        optimizer: Optimizer::Pair { pair },
        value,
        method,
        oracle_value: Some(vo),
        gap: Some(vo - vs),
        iterations,
        orbit,
    })
}

/// Maximizes φ over Ω̄²: seeded multistart pattern search checked against
/// the symmetry-reduced oracle.
pub fn maximize_phi(domain: &Domain4, lambda: [f64; 2], opts: &PlacementOptions) -> Result<PlacementResult> {
    domain.validate()?;
    if !(lambda[0] > 0.0 && lambda[1] > 0.0) || opts.starts == 0 {
        return Err(Error::Config("need λᵢ > 0 and at least one start".into()));
    }
    let starts = multistart_pairs(domain, opts.starts, opts.seed);
    let runs: Vec<_> = starts
        .iter()
        .enumerate()
        .map(|(j, s)| pattern_search(domain, lambda, s, opts, opts.seed ^ (j as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
        .collect();
    finish_phi(domain, lambda, &runs, opts)
}
