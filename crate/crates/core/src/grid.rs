//! Symmetric discretizations of four-dimensional domains.
//!
//! Two node layouts share one finite-volume representation:
//!
//! * [`RadialGrid`]: nodes `r_j = j·h` on a ball of radius `R`, for radially
//!   symmetric fields.
//! * [`AxiGrid`]: nodes `(ξ_i, ρ_k)` representing `x = (ξ, y)` with
//!   `|y| = ρ`, for fields symmetric about the `x₁` axis.
//!
//! Every node owns a control volume `W_j` (its exact 4-D measure), and every
//! pair of neighbouring nodes shares a face with conductance
//! `κ = |face| / spacing`. The discrete Dirichlet energy is
//! `Σ_edges κ (u_a − u_b)²`, the discrete Laplacian is its Riesz
//! representative with respect to the weights `W`, and the quadrature of a
//! field is `Σ W_j f_j`. Because the operator is built from the energy,
//! `⟨(−Δ)f, g⟩_W = ⟨f, (−Δ)g⟩_W` holds to rounding.

use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::math::{FloatExt, PI, SPHERE3_AREA};
use crate::{Error, Result};

/// A point of ℝ⁴. Radial fields use `(r, 0, 0, 0)`; axisymmetric fields use
/// `(ξ, ρ, 0, 0)` as the representative of their orbit.
pub type Point = [f64; 4];

pub fn norm4(p: &Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3]).sqrt()
}

pub fn dist4(a: &Point, b: &Point) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]];
    norm4(&d)
}

/// Radial nodes r₀ = 0 < r₁ < … < r_n = radius. Uniform by default; with
/// `grading = Some(g)` the nodes are r(s) = g(e^{κs} − 1), s = j/n, with
/// κ = ln(1 + radius/g), so spacing grows linearly with r + g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub radius: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grading: Option<f64>,
}

impl RadialGrid {
    pub fn uniform(radius: f64, n: usize) -> Self {
        RadialGrid { radius, n, grading: None }
    }

    pub fn graded(radius: f64, n: usize, g: f64) -> Self {
        RadialGrid { radius, n, grading: Some(g) }
    }

    fn map(&self, s: f64) -> f64 {
        match self.grading {
            None => s * self.radius,
            Some(g) => g * ((1.0 + self.radius / g).ln() * s).exp_m1(),
        }
    }

    /// Position of node j.
    pub fn node(&self, j: usize) -> f64 {
        match self.grading {
            None => j as f64 * (self.radius / self.n as f64),
            Some(_) if j == self.n => self.radius,
            Some(_) => self.map(j as f64 / self.n as f64),
        }
    }

    /// Interface between nodes j and j + 1.
    fn face(&self, j: usize) -> f64 {
        match self.grading {
            None => (j as f64 + 0.5) * (self.radius / self.n as f64),
            Some(_) => self.map((j as f64 + 0.5) / self.n as f64),
        }
    }

    /// Fractional node index of radius r.
    pub fn index_of(&self, r: f64) -> f64 {
        match self.grading {
            None => r / (self.radius / self.n as f64),
            Some(g) => (r / g).ln_1p() / (1.0 + self.radius / g).ln() * self.n as f64,
        }
    }

    /// Smallest node spacing (at the origin).
    pub fn spacing(&self) -> f64 {
        self.node(1)
    }

    /// Spacing of the cell containing r.
    pub fn spacing_at(&self, r: f64) -> f64 {
        let j = (self.index_of(r).floor() as usize).min(self.n - 1);
        self.node(j + 1) - self.node(j)
    }
}

/// Axisymmetric layout on `[−L, L] × [0, ρ_max]`. With `ball_radius` set the
/// domain is the 4-ball of that radius centred at the origin (nodes outside
/// carry Dirichlet zeros); otherwise it is the cylinder itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiGrid {
    pub half_length: f64,
    pub n_xi: usize,
    pub rho_max: f64,
    pub n_rho: usize,
    pub ball_radius: Option<f64>,
}

impl AxiGrid {
    /// Ball of radius `r` with (approximately) spacing `h` in both directions.
    pub fn ball(r: f64, h: f64) -> Self {
        let n_rho = ((r / h).round() as usize).max(2);
        AxiGrid {
            half_length: r,
            n_xi: 2 * n_rho,
            rho_max: r,
            n_rho,
            ball_radius: Some(r),
        }
    }

    pub fn h_xi(&self) -> f64 {
        2.0 * self.half_length / self.n_xi as f64
    }

    pub fn h_rho(&self) -> f64 {
        self.rho_max / self.n_rho as f64
    }

    fn index(&self, i: usize, k: usize) -> usize {
        i * (self.n_rho + 1) + k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Radial(RadialGrid),
    Axi(AxiGrid),
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    a: usize,
    b: usize,
    kappa: f64,
}

#[derive(Debug)]
pub struct Grid {
    shape: Shape,
    coords: Vec<[f64; 2]>,
    weight: Vec<f64>,
    active: Vec<bool>,
    edges: Vec<Edge>,
    // CSR adjacency over all nodes: (neighbour, κ)
    adj_start: Vec<usize>,
    adj: Vec<(usize, f64)>,
    sine: Option<SineBasis>,
}

#[derive(Debug)]
struct SineBasis {
    // orthonormal sine vectors of the interior ξ operator, row-major [mode][i]
    vectors: Vec<f64>,
    eigenvalues: Vec<f64>,
    m: usize,
}

impl Grid {
    pub fn radial(spec: RadialGrid) -> Result<Arc<Grid>> {
        if !(spec.radius > 0.0) || spec.n < 2 || spec.grading.is_some_and(|g| !(g > 0.0)) {
            return Err(Error::Geometry(alloc::format!("bad radial grid {spec:?}")));
        }
        let n = spec.n;
        let vol = |r: f64| 0.5 * PI * PI * r.powi(4);
        let mut coords = Vec::with_capacity(n + 1);
        let mut weight = Vec::with_capacity(n + 1);
        let mut active = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let lo = if j == 0 { 0.0 } else { spec.face(j - 1) };
            let hi = if j == n { spec.radius } else { spec.face(j) };
            coords.push([spec.node(j), 0.0]);
            weight.push(vol(hi) - vol(lo));
            active.push(j < n);
        }
        let edges = (0..n)
            .map(|j| {
                let rm = spec.face(j);
                Edge {
                    a: j,
                    b: j + 1,
                    kappa: SPHERE3_AREA * rm.powi(3) / (spec.node(j + 1) - spec.node(j)),
                }
            })
            .collect();
        Ok(Arc::new(Grid::assemble(Shape::Radial(spec), coords, weight, active, edges)))
    }

    pub fn axi(spec: AxiGrid) -> Result<Arc<Grid>> {
        if !(spec.half_length > 0.0 && spec.rho_max > 0.0) || spec.n_xi < 2 || spec.n_rho < 2 {
            return Err(Error::Geometry(alloc::format!("bad axisymmetric grid {spec:?}")));
        }
        let hx = spec.h_xi();
        let hr = spec.h_rho();
        let nr = spec.n_rho;
        let nx = spec.n_xi;
        let ball3 = |r: f64| 4.0 * PI / 3.0 * r * r * r;
        let shell: Vec<f64> = (0..=nr)
            .map(|k| {
                let rho = k as f64 * hr;
                let lo = if k == 0 { 0.0 } else { rho - 0.5 * hr };
                let hi = if k == nr { spec.rho_max } else { rho + 0.5 * hr };
                ball3(hi) - ball3(lo)
            })
            .collect();
        let inside = |xi: f64, rho: f64| match spec.ball_radius {
            Some(r) => xi * xi + rho * rho <= r * r * (1.0 + 1e-12),
            None => true,
        };
        let strictly_inside = |xi: f64, rho: f64| match spec.ball_radius {
            Some(r) => xi * xi + rho * rho < r * r * (1.0 - 1e-12),
            None => true,
        };
        let total = (nx + 1) * (nr + 1);
        let mut coords = Vec::with_capacity(total);
        let mut weight = Vec::with_capacity(total);
        let mut active = Vec::with_capacity(total);
        for i in 0..=nx {
            let xi = -spec.half_length + i as f64 * hx;
            let wx = if i == 0 || i == nx { 0.5 * hx } else { hx };
            for k in 0..=nr {
                let rho = k as f64 * hr;
                coords.push([xi, rho]);
                weight.push(if inside(xi, rho) { wx * shell[k] } else { 0.0 });
                active.push(i > 0 && i < nx && k < nr && strictly_inside(xi, rho));
            }
        }
        let mut edges = Vec::new();
        for i in 0..=nx {
            for k in 0..=nr {
                let a = spec.index(i, k);
                if i < nx {
                    edges.push(Edge {
                        a,
                        b: spec.index(i + 1, k),
                        kappa: shell[k] / hx,
                    });
                }
                if k < nr {
                    let rm = (k as f64 + 0.5) * hr;
                    edges.push(Edge {
                        a,
                        b: spec.index(i, k + 1),
                        kappa: hx * 4.0 * PI * rm * rm / hr,
                    });
                }
            }
        }
        let mut g = Grid::assemble(Shape::Axi(spec), coords, weight, active, edges);
        g.sine = Some(SineBasis::new(nx, hx));
        Ok(Arc::new(g))
    }

    fn assemble(
        shape: Shape,
        coords: Vec<[f64; 2]>,
        weight: Vec<f64>,
        active: Vec<bool>,
        edges: Vec<Edge>,
    ) -> Grid {
        let n = coords.len();
        let mut count = alloc::vec![0usize; n + 1];
        for e in &edges {
            count[e.a + 1] += 1;
            count[e.b + 1] += 1;
        }
        for j in 0..n {
            count[j + 1] += count[j];
        }
        let mut fill = count.clone();
        let mut adj = alloc::vec![(0usize, 0.0f64); edges.len() * 2];
        for e in &edges {
            adj[fill[e.a]] = (e.b, e.kappa);
            fill[e.a] += 1;
            adj[fill[e.b]] = (e.a, e.kappa);
            fill[e.b] += 1;
        }
        Grid {
            shape,
            coords,
            weight,
            active,
            edges,
            adj_start: count,
            adj,
            sine: None,
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.shape, Shape::Radial(_))
    }

    /// Node coordinates: `(r, 0)` for radial grids, `(ξ, ρ)` otherwise.
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn point(&self, j: usize) -> Point {
        let c = self.coords[j];
        [c[0], c[1], 0.0, 0.0]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    /// Smallest node spacing.
    pub fn spacing(&self) -> f64 {
        match self.shape {
            Shape::Radial(r) => r.spacing(),
            Shape::Axi(a) => a.h_xi().min(a.h_rho()),
        }
    }

    /// Node spacing around `x` (differs from [`Grid::spacing`] only on
    /// graded radial grids).
    pub fn spacing_at(&self, x: &Point) -> f64 {
        match self.shape {
            Shape::Radial(r) => r.spacing_at(norm4(x)),
            Shape::Axi(_) => self.spacing(),
        }
    }

    /// Distance from `x` to the boundary of the discretized domain (negative
    /// outside).
    pub fn domain_dist(&self, x: &Point) -> f64 {
        match self.shape {
            Shape::Radial(r) => r.radius - norm4(x),
            Shape::Axi(a) => {
                let rho = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
                let cyl = (a.half_length - x[0].abs()).min(a.rho_max - rho);
                match a.ball_radius {
                    Some(r) => (r - norm4(x)).min(cyl),
                    None => cyl,
                }
            }
        }
    }

    /// Radius of the largest ball centred at the origin inside the domain.
    pub fn domain_inradius(&self) -> f64 {
        self.domain_dist(&[0.0; 4])
    }

    fn same_as(&self, other: &Grid) -> bool {
        core::ptr::eq(self, other) || self.shape == other.shape
    }

    /// Σ_edges κ (f_a − f_b)(g_a − g_b): the discrete ∫∇f·∇g.
    fn grad_form(&self, f: &[f64], g: &[f64]) -> f64 {
        let mut s = 0.0;
        for e in &self.edges {
            s += e.kappa * (f[e.a] - f[e.b]) * (g[e.a] - g[e.b]);
        }
        s
    }

    /// Discrete −Δf at node j (0 on Dirichlet nodes).
    fn neg_laplacian_at(&self, f: &[f64], j: usize) -> f64 {
        if !self.active[j] {
            return 0.0;
        }
        let mut s = 0.0;
        for &(k, kappa) in &self.adj[self.adj_start[j]..self.adj_start[j + 1]] {
            s += kappa * (f[j] - f[k]);
        }
        s / self.weight[j]
    }

    /// Solve (−ε²Δ + λ)u = f exactly on radial grids; on axisymmetric grids
    /// the bounding-cylinder inverse is applied and restricted to the free
    /// nodes, which is symmetric positive definite and exact away from a
    /// curved boundary.
    fn precondition_values(&self, f: &[f64], lambda: f64, eps: f64) -> Vec<f64> {
        match self.shape {
            Shape::Radial(spec) => self.radial_solve(f, lambda, eps, spec.n),
            Shape::Axi(spec) => {
                let mut u = self.cylinder_solve(f, lambda, eps, &spec);
                for (x, &a) in u.iter_mut().zip(&self.active) {
                    if !a {
                        *x = 0.0;
                    }
                }
                u
            }
        }
    }

    fn radial_solve(&self, f: &[f64], lambda: f64, eps: f64, n: usize) -> Vec<f64> {
        let e2 = eps * eps;
        let mut lower = alloc::vec![0.0; n];
        let mut diag = alloc::vec![0.0; n];
        let mut upper = alloc::vec![0.0; n];
        let mut rhs = alloc::vec![0.0; n];
        for j in 0..n {
            let w = self.weight[j];
            let kl = if j > 0 { self.edges[j - 1].kappa } else { 0.0 };
            let kr = self.edges[j].kappa;
            diag[j] = e2 * (kl + kr) / w + lambda;
            if j > 0 {
                lower[j] = -e2 * kl / w;
            }
            if j + 1 < n {
                upper[j] = -e2 * kr / w;
            }
            rhs[j] = f[j];
        }
        let mut u = linalg::tridiagonal_solve(&lower, &diag, &upper, &rhs);
        u.push(0.0);
        u
    }

    fn cylinder_solve(&self, f: &[f64], lambda: f64, eps: f64, spec: &AxiGrid) -> Vec<f64> {
        let sine = self.sine.as_ref().expect("axisymmetric grid carries its sine basis");
        let nr = spec.n_rho;
        let m = sine.m;
        let e2 = eps * eps;
        // forward sine transform of interior rows i = 1..n_xi-1
        let mut fh = alloc::vec![0.0; m * nr];
        for mode in 0..m {
            let v = &sine.vectors[mode * m..(mode + 1) * m];
            let row = &mut fh[mode * nr..(mode + 1) * nr];
            for (ii, &vi) in v.iter().enumerate() {
                let base = spec.index(ii + 1, 0);
                for k in 0..nr {
                    row[k] += vi * f[base + k];
                }
            }
        }
        // tridiagonal in ρ per mode; ρ part identical for every ξ row
        let hx = spec.h_xi();
        let mut lower = alloc::vec![0.0; nr];
        let mut diag0 = alloc::vec![0.0; nr];
        let mut upper = alloc::vec![0.0; nr];
        for k in 0..nr {
            let j = spec.index(1, k);
            let w = hx * self.axi_shell(spec, k);
            let kr = self.rho_kappa(spec, k);
            let kl = if k > 0 { self.rho_kappa(spec, k - 1) } else { 0.0 };
            let _ = j;
            diag0[k] = e2 * (kl + kr) / w;
            if k > 0 {
                lower[k] = -e2 * kl / w;
            }
            if k + 1 < nr {
                upper[k] = -e2 * kr / w;
            }
        }
        let mut uh = alloc::vec![0.0; m * nr];
        let mut diag = alloc::vec![0.0; nr];
        for mode in 0..m {
            let shift = e2 * sine.eigenvalues[mode] + lambda;
            for k in 0..nr {
                diag[k] = diag0[k] + shift;
            }
            let sol = linalg::tridiagonal_solve(&lower, &diag, &upper, &fh[mode * nr..(mode + 1) * nr]);
            uh[mode * nr..(mode + 1) * nr].copy_from_slice(&sol);
        }
        let mut u = alloc::vec![0.0; self.len()];
        for mode in 0..m {
            let v = &sine.vectors[mode * m..(mode + 1) * m];
            let row = &uh[mode * nr..(mode + 1) * nr];
            for (ii, &vi) in v.iter().enumerate() {
                let base = spec.index(ii + 1, 0);
                for k in 0..nr {
                    u[base + k] += vi * row[k];
                }
            }
        }
        u
    }

    fn axi_shell(&self, spec: &AxiGrid, k: usize) -> f64 {
        let hr = spec.h_rho();
        let ball3 = |r: f64| 4.0 * PI / 3.0 * r * r * r;
        let rho = k as f64 * hr;
        let lo = if k == 0 { 0.0 } else { rho - 0.5 * hr };
        let hi = if k == spec.n_rho { spec.rho_max } else { rho + 0.5 * hr };
        ball3(hi) - ball3(lo)
    }

    fn rho_kappa(&self, spec: &AxiGrid, k: usize) -> f64 {
        let hr = spec.h_rho();
        let rm = (k as f64 + 0.5) * hr;
        spec.h_xi() * 4.0 * PI * rm * rm / hr
    }

    /// Tridiagonal pieces of −Δ on the free radial nodes, as rows of the
    /// strong-form operator: `(lower, diag, upper)`.
    pub(crate) fn radial_laplacian_bands(&self) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let Shape::Radial(spec) = self.shape else {
            return None;
        };
        let n = spec.n;
        let mut lower = alloc::vec![0.0; n];
        let mut diag = alloc::vec![0.0; n];
        let mut upper = alloc::vec![0.0; n];
        for j in 0..n {
            let w = self.weight[j];
            let kl = if j > 0 { self.edges[j - 1].kappa } else { 0.0 };
            let kr = self.edges[j].kappa;
            diag[j] = (kl + kr) / w;
            if j > 0 {
                lower[j] = -kl / w;
            }
            if j + 1 < n {
                upper[j] = -kr / w;
            }
        }
        Some((lower, diag, upper))
    }
}

impl SineBasis {
    fn new(n_xi: usize, h: f64) -> Self {
        let m = n_xi - 1;
        let norm = (2.0 / n_xi as f64).sqrt();
        let mut vectors = alloc::vec![0.0; m * m];
        let mut eigenvalues = alloc::vec![0.0; m];
        for mode in 0..m {
            let q = (mode + 1) as f64;
            let s = (PI * q / (2.0 * n_xi as f64)).sin();
            eigenvalues[mode] = 4.0 * s * s / (h * h);
            for i in 0..m {
                vectors[mode * m + i] = norm * (PI * q * (i + 1) as f64 / n_xi as f64).sin();
            }
        }
        SineBasis {
            vectors,
            eigenvalues,
            m,
        }
    }
}

/// One real value per node of a grid.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid) && self.values == other.values
    }
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>) -> Field {
        Field {
            grid: grid.clone(),
            values: alloc::vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::Usage(alloc::format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Usage("field values must be finite".into()));
        }
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    /// Sample `f` at every node's representative point, leaving Dirichlet
    /// nodes at zero.
    pub fn from_fn<F: FnMut(&Point) -> f64>(grid: &Arc<Grid>, mut f: F) -> Field {
        let values = (0..grid.len())
            .map(|j| if grid.active[j] { f(&grid.point(j)) } else { 0.0 })
            .collect();
        Field {
            grid: grid.clone(),
            values,
        }
    }

    /// Like [`Field::from_fn`] but also fills Dirichlet nodes.
    pub fn from_fn_everywhere<F: FnMut(&Point) -> f64>(grid: &Arc<Grid>, mut f: F) -> Field {
        let values = (0..grid.len()).map(|j| f(&grid.point(j))).collect();
        Field {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::Usage("fields live on different grids".into()))
        }
    }

    pub fn map<F: FnMut(f64) -> f64>(&self, f: F) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().copied().map(f).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn abs(&self) -> Field {
        self.map(|v| v.abs())
    }

    /// Zero the Dirichlet nodes.
    pub fn enforce_dirichlet(&mut self) {
        for (v, &a) in self.values.iter_mut().zip(&self.grid.active) {
            if !a {
                *v = 0.0;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Σ W f.
    pub fn integrate(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.grid.weight)
            .map(|(v, w)| v * w)
            .sum()
    }

    /// ∫|f|^q over the domain.
    pub fn integrate_power(&self, q: f64) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(Error::Usage(alloc::format!("integrate_power needs q ≥ 1, got {q}")));
        }
        Ok(self
            .values
            .iter()
            .zip(&self.grid.weight)
            .map(|(v, w)| w * pow_abs(*v, q))
            .sum())
    }

    /// ∫ f g.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(&self.grid.weight)
            .map(|((a, b), w)| a * b * w)
            .sum())
    }

    /// L² norm with the grid quadrature.
    pub fn l2_norm(&self) -> f64 {
        self.dot(self).unwrap_or(0.0).sqrt()
    }

    /// Discrete ∫∇f·∇g.
    pub fn grad_dot(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.grid.grad_form(&self.values, &other.values))
    }

    /// Discrete ∫|∇f|².
    pub fn grad_norm_sq(&self) -> f64 {
        self.grid.grad_form(&self.values, &self.values)
    }

    /// ⟨f, g⟩ = ∫ ε²∇f·∇g + λ f g.
    pub fn h1_product(&self, other: &Field, lambda: f64, eps: f64) -> Result<f64> {
        Ok(eps * eps * self.grad_dot(other)? + lambda * self.dot(other)?)
    }

    pub fn h1_norm_sq(&self, lambda: f64, eps: f64) -> f64 {
        eps * eps * self.grad_norm_sq() + lambda * self.dot(self).unwrap_or(0.0)
    }

    /// Discrete −Δf (zero on Dirichlet nodes).
    pub fn neg_laplacian(&self) -> Field {
        let values = (0..self.grid.len())
            .map(|j| self.grid.neg_laplacian_at(&self.values, j))
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    /// −ε²Δf + λf on free nodes, zero on Dirichlet nodes.
    pub fn apply_operator(&self, lambda: f64, eps: f64) -> Field {
        let e2 = eps * eps;
        let values = (0..self.grid.len())
            .map(|j| {
                if self.grid.active[j] {
                    e2 * self.grid.neg_laplacian_at(&self.values, j) + lambda * self.values[j]
                } else {
                    0.0
                }
            })
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    /// (−ε²Δ + λ)⁻¹ f, exact on radial grids, cylinder-preconditioned on
    /// axisymmetric ones (see [`Grid`]).
    pub fn apply_inverse_operator(&self, lambda: f64, eps: f64) -> Field {
        let mut f = self.values.clone();
        for (v, &a) in f.iter_mut().zip(&self.grid.active) {
            if !a {
                *v = 0.0;
            }
        }
        Field {
            grid: self.grid.clone(),
            values: self.grid.precondition_values(&f, lambda, eps),
        }
    }

    /// Exact (−ε²Δ + λ)⁻¹ f on any grid: direct on radial grids, conjugate
    /// gradients preconditioned by the cylinder solve otherwise.
    pub fn solve_operator(&self, lambda: f64, eps: f64, tol: f64) -> Result<Field> {
        if self.grid.is_radial() {
            return Ok(self.apply_inverse_operator(lambda, eps));
        }
        let grid = self.grid.clone();
        let n = grid.len();
        let apply = |x: &[f64]| -> Vec<f64> {
            let fx = Field {
                grid: grid.clone(),
                values: x.to_vec(),
            };
            fx.apply_operator(lambda, eps).values
        };
        let precond = |r: &[f64]| grid.precondition_values(r, lambda, eps);
        let weights = &grid.weight;
        let mut rhs = self.values.clone();
        for (v, &a) in rhs.iter_mut().zip(&grid.active) {
            if !a {
                *v = 0.0;
            }
        }
        let x = linalg::weighted_pcg(apply, precond, weights, &rhs, alloc::vec![0.0; n], tol, 500)?;
        Ok(Field {
            grid: self.grid.clone(),
            values: x,
        })
    }

    /// Value at an arbitrary point, by linear (radial) or bilinear
    /// (axisymmetric) interpolation; zero outside the grid.
    pub fn sample(&self, x: &Point) -> f64 {
        match self.grid.shape {
            Shape::Radial(spec) => {
                let r = norm4(x);
                self.sample_radial(r, &spec)
            }
            Shape::Axi(spec) => {
                let rho = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
                self.sample_axi(x[0], rho, &spec)
            }
        }
    }

    fn sample_radial(&self, r: f64, spec: &RadialGrid) -> f64 {
        if r > spec.radius {
            return 0.0;
        }
        let j = (spec.index_of(r).floor() as usize).min(spec.n - 1);
        let (a, b) = (spec.node(j), spec.node(j + 1));
        let t = ((r - a) / (b - a)).clamp(0.0, 1.0);
        (1.0 - t) * self.values[j] + t * self.values[j + 1]
    }

    fn sample_axi(&self, xi: f64, rho: f64, spec: &AxiGrid) -> f64 {
        if xi.abs() > spec.half_length || rho > spec.rho_max {
            return 0.0;
        }
        let sx = (xi + spec.half_length) / spec.h_xi();
        let sr = rho / spec.h_rho();
        let i = (sx.floor() as usize).min(spec.n_xi - 1);
        let k = (sr.floor() as usize).min(spec.n_rho - 1);
        let tx = sx - i as f64;
        let tr = sr - k as f64;
        let v = |a: usize, b: usize| self.values[spec.index(a, b)];
        (1.0 - tx) * ((1.0 - tr) * v(i, k) + tr * v(i, k + 1))
            + tx * ((1.0 - tr) * v(i + 1, k) + tr * v(i + 1, k + 1))
    }

    /// Node of maximal value; ties go to the smallest |x|, then the smallest
    /// axial coordinate.
    pub fn max_point(&self) -> (Point, f64) {
        let mut best = 0usize;
        for j in 1..self.values.len() {
            let (vb, vj) = (self.values[best], self.values[j]);
            if vj > vb {
                best = j;
            } else if vj == vb {
                let pb = self.grid.point(best);
                let pj = self.grid.point(j);
                let (rb, rj) = (norm4(&pb), norm4(&pj));
                if rj < rb || (rj == rb && pj[0] < pb[0]) {
                    best = j;
                }
            }
        }
        (self.grid.point(best), self.values[best])
    }
}

#[inline]
pub(crate) fn pow_abs(v: f64, q: f64) -> f64 {
    let a = v.abs();
    if q == 2.0 {
        a * a
    } else if q == 4.0 {
        let s = a * a;
        s * s
    } else if q == 1.0 {
        a
    } else if a == 0.0 {
        0.0
    } else {
        a.powf(q)
    }
}

/// Two fields on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub u1: Field,
    pub u2: Field,
}

impl Pair {
    pub fn new(u1: Field, u2: Field) -> Result<Pair> {
        u1.check_same_grid(&u2)?;
        Ok(Pair { u1, u2 })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u1.grid()
    }

    pub fn component(&self, i: usize) -> &Field {
        if i == 0 {
            &self.u1
        } else {
            &self.u2
        }
    }

    pub fn scaled(&self, t1: f64, t2: f64) -> Pair {
        Pair {
            u1: self.u1.scaled(t1),
            u2: self.u2.scaled(t2),
        }
    }

    /// ⟨a, b⟩ summed over components with the L² quadrature.
    pub fn dot(&self, other: &Pair) -> Result<f64> {
        Ok(self.u1.dot(&other.u1)? + self.u2.dot(&other.u2)?)
    }
}

/// Direction along which a non-radial field is sampled when rescaled onto a
/// radial reference grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ray {
    /// Any ray (radial fields only).
    Radial,
    /// Along +x₁.
    AxisPlus,
    /// Along −x₁.
    AxisMinus,
    /// Perpendicular to the symmetry axis.
    Transverse,
}

#[derive(Debug, Clone)]
pub struct Rescaled {
    pub field: Field,
    /// The reference radius exceeded dist(center, ∂Ω)/ε; values past the
    /// boundary are zero.
    pub truncated: bool,
}

/// v(y) = u(center + εy) sampled on a radial reference grid.
pub fn rescale_to_reference(
    u: &Field,
    center: &Point,
    eps: f64,
    reference: &Arc<Grid>,
    ray: Ray,
) -> Result<Rescaled> {
    let Shape::Radial(rspec) = *reference.shape() else {
        return Err(Error::Usage("reference grid must be radial".into()));
    };
    if !(eps > 0.0) {
        return Err(Error::Domain("ε must be positive".into()));
    }
    let dist = u.grid().domain_dist(center);
    if dist < 0.0 {
        return Err(Error::Geometry("rescaling center lies outside the domain".into()));
    }
    let dir: Point = match (u.grid().shape(), ray) {
        (Shape::Radial(_), Ray::Radial) | (Shape::Radial(_), Ray::AxisPlus) => {
            if norm4(center) > 0.0 {
                return Err(Error::Usage(
                    "radial fields can only be rescaled about the origin".into(),
                ));
            }
            [1.0, 0.0, 0.0, 0.0]
        }
        (Shape::Radial(_), _) => {
            return Err(Error::Usage("radial fields use Ray::Radial".into()));
        }
        (Shape::Axi(_), Ray::AxisPlus) => [1.0, 0.0, 0.0, 0.0],
        (Shape::Axi(_), Ray::AxisMinus) => [-1.0, 0.0, 0.0, 0.0],
        (Shape::Axi(_), Ray::Transverse) | (Shape::Axi(_), Ray::Radial) => [0.0, 1.0, 0.0, 0.0],
    };
    let values = reference
        .coords()
        .iter()
        .map(|c| {
            let s = eps * c[0];
            let x = [
                center[0] + s * dir[0],
                center[1] + s * dir[1],
                center[2],
                center[3],
            ];
            if u.grid().domain_dist(&x) < 0.0 {
                0.0
            } else {
                u.sample(&x)
            }
        })
        .collect();
    Ok(Rescaled {
        field: Field {
            grid: reference.clone(),
            values,
        },
        truncated: rspec.radius * eps > dist * (1.0 + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(r: f64, n: usize) -> Arc<Grid> {
        Grid::radial(RadialGrid::uniform(r, n)).unwrap()
    }

    #[test]
    fn zero_field_integrals() {
        let g = ball(1.0, 50);
        let f = Field::zeros(&g);
        assert_eq!(f.integrate_power(1.0).unwrap(), 0.0);
        assert_eq!(f.h1_product(&f, 1.0, 1.0).unwrap(), 0.0);
        assert!(f.apply_operator(1.0, 1.0).values().iter().all(|v| *v == 0.0));
        assert!(f.integrate_power(0.5).is_err());
    }

    #[test]
    fn unit_ball_volume() {
        for n in [10, 40, 160] {
            let g = ball(1.0, n);
            let f = Field::from_fn_everywhere(&g, |_| 1.0);
            let v = f.integrate_power(1.0).unwrap();
            assert!((v - PI * PI / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_moment() {
        let g = ball(8.0, 800);
        let f = Field::from_fn_everywhere(&g, |x| (-norm4(x).powi(2)).exp());
        let v = f.integrate_power(2.0).unwrap();
        assert!((v - PI * PI / 4.0).abs() / (PI * PI / 4.0) < 1e-4);
    }

    #[test]
    fn h1_of_exponential_profile() {
        // ∫(|∇e^{-r}|² + e^{-2r}) over ℝ⁴ = 2·2π²·∫ e^{-2r} r³ dr = 2·2π²·3/8
        let exact = 2.0 * SPHERE3_AREA * 6.0 / 16.0;
        let g = ball(30.0, 6000);
        let f = Field::from_fn_everywhere(&g, |x| (-norm4(x)).exp());
        let v = f.h1_product(&f, 1.0, 1.0).unwrap();
        assert!((v - exact).abs() / exact < 1e-3, "{v} vs {exact}");
    }

    #[test]
    fn laplacian_of_r_squared_is_eight() {
        let g = ball(2.0, 40);
        let f = Field::from_fn_everywhere(&g, |x| norm4(x).powi(2));
        let eps = 0.3;
        let out = f.apply_operator(0.7, eps);
        for j in 0..40 {
            let r = g.coords()[j][0];
            let want = -8.0 * eps * eps + 0.7 * r * r;
            assert!((out.values()[j] - want).abs() < 1e-10, "node {j}");
        }
        let ga = Grid::axi(AxiGrid::ball(2.0, 0.1)).unwrap();
        let f = Field::from_fn_everywhere(&ga, |x| norm4(x).powi(2));
        let lap = f.neg_laplacian();
        for j in 0..ga.len() {
            if ga.active()[j] {
                let mut interior = true;
                // nodes next to the staircase boundary see Dirichlet zeros
                for &(k, _) in &ga.adj[ga.adj_start[j]..ga.adj_start[j + 1]] {
                    interior &= ga.active()[k];
                }
                if interior {
                    assert!((lap.values()[j] + 8.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn operator_is_self_adjoint() {
        let g = ball(3.0, 120);
        let f = Field::from_fn(&g, |x| (-norm4(x).powi(2)).exp() * (1.0 + x[0]));
        let h = Field::from_fn(&g, |x| (-(norm4(x) - 1.0).powi(2)).exp());
        let a = f.apply_operator(1.3, 0.5).dot(&h).unwrap();
        let b = f.dot(&h.apply_operator(1.3, 0.5)).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        assert!(f.neg_laplacian().dot(&f).unwrap() >= 0.0);

        let ga = Grid::axi(AxiGrid::ball(3.0, 0.1)).unwrap();
        let f = Field::from_fn(&ga, |x| (-norm4(x).powi(2)).exp() * (1.0 + x[0]));
        let h = Field::from_fn(&ga, |x| (-(x[0] - 0.5).powi(2) - x[1] * x[1]).exp());
        let a = f.apply_operator(1.0, 1.0).dot(&h).unwrap();
        let b = f.dot(&h.apply_operator(1.0, 1.0)).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs());
    }

    /// Inverse iteration for the lowest Dirichlet eigenvalue of −Δ on the
    /// unit 4-ball against a shooting oracle for J₁(√ν r)/r.
    #[test]
    fn lowest_dirichlet_eigenvalue() {
        let oracle = shooting_eigenvalue();
        let g = ball(1.0, 400);
        let mut u = Field::from_fn(&g, |x| 1.0 - norm4(x).powi(2));
        let mut nu = 0.0;
        for _ in 0..60 {
            let v = u.apply_inverse_operator(0.0, 1.0);
            nu = u.dot(&u).unwrap() / u.dot(&v).unwrap();
            let n = v.l2_norm();
            u = v.scaled(1.0 / n);
        }
        assert!((nu - oracle).abs() / oracle < 1e-4, "{nu} vs {oracle}");
    }

    // u'' + 3u'/r + νu = 0, u(0)=1: find ν with u(1) = 0 by bisection.
    fn shooting_eigenvalue() -> f64 {
        let end = |nu: f64| {
            let n = 20000;
            let h = 1.0 / n as f64;
            let f = |r: f64, y: [f64; 2]| -> [f64; 2] {
                if r == 0.0 {
                    [y[1], -nu * y[0] / 4.0]
                } else {
                    [y[1], -3.0 * y[1] / r - nu * y[0]]
                }
            };
            let mut y = [1.0, 0.0];
            for k in 0..n {
                let r = k as f64 * h;
                let k1 = f(r, y);
                let k2 = f(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
                let k3 = f(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
                let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
                y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
                y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            }
            y[0]
        };
        let (mut lo, mut hi) = (10.0, 20.0);
        assert!(end(lo) > 0.0 && end(hi) < 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if end(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn inverse_operator_roundtrip() {
        let g = ball(4.0, 200);
        let f = Field::from_fn(&g, |x| (-norm4(x).powi(2)).exp());
        let u = f.apply_inverse_operator(2.0, 0.7);
        let back = u.apply_operator(2.0, 0.7);
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let ga = Grid::axi(AxiGrid::ball(4.0, 0.1)).unwrap();
        let f = Field::from_fn(&ga, |x| (-(x[0] - 0.5).powi(2) - x[1] * x[1]).exp());
        let u = f.solve_operator(1.0, 1.0, 1e-12).unwrap();
        let back = u.apply_operator(1.0, 1.0);
        let err = back.axpy(-1.0, &f).unwrap().l2_norm();
        assert!(err < 1e-9 * f.l2_norm(), "{err}");
    }

    #[test]
    fn cylinder_inverse_is_exact_without_ball() {
        let spec = AxiGrid {
            half_length: 3.0,
            n_xi: 30,
            rho_max: 2.0,
            n_rho: 20,
            ball_radius: None,
        };
        let g = Grid::axi(spec).unwrap();
        let f = Field::from_fn(&g, |x| (-(x[0] * x[0]) - x[1] * x[1]).exp());
        let u = f.apply_inverse_operator(1.5, 0.8);
        let back = u.apply_operator(1.5, 0.8);
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn rescale_identity_and_profile() {
        let g = ball(2.0, 100);
        let f = Field::from_fn(&g, |x| (-norm4(x)).exp() - (-2f64).exp());
        let r = rescale_to_reference(&f, &[0.0; 4], 1.0, &g, Ray::Radial).unwrap();
        for (a, b) in r.field.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(!r.truncated);

        // u(x) = φ(|x|/ε) rescales back to φ
        let eps = 0.2;
        let phys = ball(1.0, 400);
        let phi = |s: f64| (-s * s).exp();
        let u = Field::from_fn_everywhere(&phys, |x| phi(norm4(x) / eps));
        let reference = ball(4.0, 160);
        let r = rescale_to_reference(&u, &[0.0; 4], eps, &reference, Ray::Radial).unwrap();
        let h = 1.0 / 400.0 / eps;
        for (c, v) in reference.coords().iter().zip(r.field.values()) {
            assert!((v - phi(c[0])).abs() < h * h, "r={}", c[0]);
        }
        assert!(!r.truncated);
        let big = ball(6.0, 60);
        assert!(rescale_to_reference(&u, &[0.0; 4], eps, &big, Ray::Radial).unwrap().truncated);

        let c = Field::from_fn_everywhere(&phys, |_| 3.0);
        let r = rescale_to_reference(&c, &[0.0; 4], eps, &reference, Ray::Radial).unwrap();
        assert!(r.field.values().iter().all(|v| (v - 3.0).abs() < 1e-14));
    }

    #[test]
    fn rescale_axisymmetric_off_center() {
        let g = Grid::axi(AxiGrid::ball(1.0, 0.0025)).unwrap();
        let eps = 0.1;
        let c = [0.3, 0.0, 0.0, 0.0];
        let phi = |s: f64| (-s * s).exp();
        let u = Field::from_fn(&g, |x| phi(dist4(x, &c) / eps));
        let reference = ball(3.0, 30);
        for ray in [Ray::AxisPlus, Ray::AxisMinus, Ray::Transverse] {
            let r = rescale_to_reference(&u, &c, eps, &reference, ray).unwrap();
            for (cc, v) in reference.coords().iter().zip(r.field.values()) {
                assert!((v - phi(cc[0])).abs() < 2e-3, "{ray:?} r={}", cc[0]);
            }
        }
    }

    #[test]
    fn max_point_tie_breaks() {
        let ga = Grid::axi(AxiGrid::ball(2.0, 0.1)).unwrap();
        let bump = |c: f64| move |x: &Point| (-((x[0] - c).powi(2) + x[1] * x[1]) * 20.0).exp();
        let f = Field::from_fn(&ga, bump(0.5));
        let (p, v) = f.max_point();
        assert!((p[0] - 0.5).abs() < 1e-12 && p[1] == 0.0 && (v - 1.0).abs() < 1e-12);

        let c = Field::from_fn_everywhere(&ga, |_| 1.0);
        let (p, _) = c.max_point();
        assert!(norm4(&p) < 1e-12);

        let two = Field::from_fn(&ga, |x| bump(0.5)(x) + bump(-0.5)(x));
        let (p, _) = two.max_point();
        assert!((p[0] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = Field::zeros(&ball(1.0, 10));
        let b = Field::zeros(&ball(1.0, 12));
        assert!(matches!(a.dot(&b), Err(Error::Usage(_))));
        // same shape from a separate build is compatible
        let c = Field::zeros(&ball(1.0, 10));
        assert!(a.dot(&c).is_ok());
    }
}
