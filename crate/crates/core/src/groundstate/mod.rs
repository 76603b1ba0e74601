//! Ground states of the scalar and coupled problems, the Sobolev constant,
//! and the closed-form limit levels.

mod bubble;
mod limits;
mod scalar;
mod shooting;
mod system;

use alloc::vec::Vec;
use alloc::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::EnergyBreakdown;
use crate::grid::{dist4, norm4, Field, Grid, Pair, Point};
use crate::math::FloatExt;
use crate::nehari::NehariResidual;
use crate::params::Component;
use crate::{Error, Result};

pub use bubble::{bubble, bubble_prime, exact_bubble_ratio, sobolev_constant, truncated_bubble, truncated_l2_sq, truncated_ratio, SobolevEstimate, SobolevQuadrature};
pub use limits::{a1, k_system, threshold_check, LimitConstants, RegimeKnobs, ThresholdReport};
pub use scalar::solve_scalar_ground;
pub use shooting::{k1_scaled, shooting_oracle, ShootingResult};
pub use system::{solve_system_ground, SystemPath};

/// Ratio below which a component counts as vanished.
pub const SEMI_TRIVIAL_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialProfile {
    /// amplitude·exp(−|x−center|²/width²)
    Gaussian { width: f64, center: Point, amplitude: f64 },
    /// The Aubin–Talenti bubble 2√2σ/(σ²+|x−center|²).
    Bubble { sigma: f64, center: Point },
    /// Nodal values on the solve grid (e.g. read from a profile file).
    Values(Vec<f64>),
}

impl InitialProfile {
    pub fn realize(&self, grid: &Arc<Grid>) -> Result<Field> {
        let check_center = |c: &Point| {
            if grid.is_radial() && norm4(c) > 0.0 {
                Err(Error::Usage("radial grids need profiles centred at the origin".into()))
            } else if grid.domain_dist(c) < 0.0 {
                Err(Error::Geometry("profile centre outside the domain".into()))
            } else {
                Ok(())
            }
        };
        match self {
            InitialProfile::Gaussian { width, center, amplitude } => {
                check_center(center)?;
                if !(*width > 0.0) {
                    return Err(Error::Usage("gaussian width must be positive".into()));
                }
                Ok(Field::from_fn(grid, |x| {
                    amplitude * (-(dist4(x, center) / width).powi(2)).exp()
                }))
            }
            InitialProfile::Bubble { sigma, center } => {
                check_center(center)?;
                if !(*sigma > 0.0) {
                    return Err(Error::Usage("bubble σ must be positive".into()));
                }
                Ok(Field::from_fn(grid, |x| bubble(*sigma, dist4(x, center))))
            }
            InitialProfile::Values(v) => {
                let mut f = Field::from_values(grid, v.clone())?;
                f.enforce_dirichlet();
                Ok(f)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Initial gradient step; adapted by Armijo backtracking.
    pub step: f64,
    /// Relative Euler–Lagrange residual ‖𝒥′(u)‖/‖(−ε²Δ+λ)u‖ at which the
    /// descent stops.
    pub tol: f64,
    /// Per-component initial profiles; `None` picks the regime default.
    pub initial: Option<[InitialProfile; 2]>,
    /// Seed for the multiplicative jitter applied to initial profiles.
    pub seed: u64,
    /// Relative amplitude of that jitter (0 disables it).
    pub jitter: f64,
    /// Finish radial solves with Newton's method.
    pub polish: bool,
    /// Raise `RefinementNeeded` when the final spike width is below 4h.
    pub check_width: bool,
    pub knobs: Option<RegimeKnobs>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iter: 20_000,
            step: 1.0,
            tol: 1e-8,
            initial: None,
            seed: 0,
            jitter: 0.0,
            polish: true,
            check_width: true,
            knobs: None,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::Usage("max_iter must be ≥ 1".into()));
        }
        if !(self.tol > 0.0) || !(self.step > 0.0) {
            return Err(Error::Usage("tolerance and step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Preconditioned gradient flow with Nehari re-projection.
    GradientFlow,
    /// Gradient flow finished by Newton's method.
    GradientFlowNewton,
}

#[derive(Debug, Clone)]
pub enum State {
    Scalar { component: Component, field: Field },
    System(Pair),
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub state: State,
    pub breakdown: EnergyBreakdown,
    pub energy: f64,
    /// ‖𝒥′(u)‖ / ‖(−ε²Δ+λ)u‖ in the grid L² norm.
    pub el_residual: f64,
    pub iterations: usize,
    pub nehari: NehariResidual,
    pub method: Method,
    pub converged: bool,
    pub semi_trivial: bool,
    /// χ_β < 1 or χ′_β ≠ 0 at the final iterate.
    pub truncation_zone: bool,
    /// Energies after each accepted step.
    pub history: Vec<f64>,
}

impl GroundStateResult {
    pub fn field(&self) -> Option<&Field> {
        match &self.state {
            State::Scalar { field, .. } => Some(field),
            State::System(_) => None,
        }
    }

    pub fn pair(&self) -> Option<&Pair> {
        match &self.state {
            State::System(p) => Some(p),
            State::Scalar { .. } => None,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        match &self.state {
            State::Scalar { field, .. } => field.grid(),
            State::System(p) => p.grid(),
        }
    }
}

fn jitter(field: &mut Field, seed: u64, amount: f64) {
    use rand::{Rng, SeedableRng};
    if amount == 0.0 {
        return;
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for v in field.values_mut() {
        *v *= 1.0 + amount * rng.gen_range(-1.0..1.0);
    }
}

/// Second-moment radius of u² about its maximum point.
pub fn spike_width(u: &Field) -> f64 {
    let (c, _) = u.max_point();
    crate::energy::spike_width(u, &c)
}

fn check_spike(u: &Field, opts: &SolveOptions) -> Result<()> {
    if !opts.check_width {
        return Ok(());
    }
    let (c, _) = u.max_point();
    let w = crate::energy::spike_width(u, &c);
    let limit = 4.0 * u.grid().spacing_at(&c);
    if w < limit {
        return Err(Error::RefinementNeeded { width: w, limit });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{AxiGrid, RadialGrid};

    #[test]
    fn initial_profiles() {
        let g = Grid::radial(RadialGrid::uniform(4.0, 40)).unwrap();
        let b = InitialProfile::Bubble { sigma: 0.5, center: [0.0; 4] }.realize(&g).unwrap();
        assert!((b.values()[0] - 2.0 * 2f64.sqrt() / 0.5).abs() < 1e-14);
        let bad = InitialProfile::Gaussian { width: 1.0, center: [1.0, 0.0, 0.0, 0.0], amplitude: 1.0 };
        assert!(bad.realize(&g).is_err());
        let ga = Grid::axi(AxiGrid::ball(2.0, 0.1)).unwrap();
        let f = bad.realize(&ga).unwrap();
        let (p, v) = f.max_point();
        assert!((p[0] - 1.0).abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        assert!(InitialProfile::Values(alloc::vec![1.0; 3]).realize(&g).is_err());
    }

    #[test]
    fn options_validation() {
        assert!(SolveOptions::default().validate().is_ok());
        assert!(SolveOptions { tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolveOptions { max_iter: 0, ..Default::default() }.validate().is_err());
    }
}
