//! Model coefficients and the truncation function χ_β.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::FloatExt;
use crate::{Error, Result};

/// Name of the interpolant used for χ_β on (1, 2); echoed into every report.
pub const CHI_INTERPOLANT: &str = "quintic-smoothstep-C2";

/// Which equation of the system a scalar quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    One,
    Two,
}

impl Component {
    pub fn index(self) -> usize {
        match self {
            Component::One => 0,
            Component::Two => 1,
        }
    }

    pub fn other(self) -> Component {
        match self {
            Component::One => Component::Two,
            Component::Two => Component::One,
        }
    }

    pub fn from_number(n: u8) -> Result<Component> {
        match n {
            1 => Ok(Component::One),
            2 => Ok(Component::Two),
            _ => Err(Error::Usage(alloc::format!("component must be 1 or 2, got {n}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub p: f64,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub t_scale: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams {
            lambda1: 1.0,
            lambda2: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            alpha1: 1.0,
            alpha2: 1.0,
            beta: 0.0,
            p: 3.0,
            epsilon: 1.0,
            t_scale: 1.0e3,
        }
    }
}

/// Every invariant a [`PhysParams`] violates; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl PhysParams {
    pub fn lambda(&self, c: Component) -> f64 {
        match c {
            Component::One => self.lambda1,
            Component::Two => self.lambda2,
        }
    }

    pub fn mu(&self, c: Component) -> f64 {
        match c {
            Component::One => self.mu1,
            Component::Two => self.mu2,
        }
    }

    pub fn alpha(&self, c: Component) -> f64 {
        match c {
            Component::One => self.alpha1,
            Component::Two => self.alpha2,
        }
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = eps;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    /// True when χ_β is a genuine cut-off, i.e. β ≤ −√(μ₁μ₂).
    pub fn truncation_active(&self) -> bool {
        self.beta <= -(self.mu1 * self.mu2).sqrt()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        let finite = [
            self.lambda1,
            self.lambda2,
            self.mu1,
            self.mu2,
            self.alpha1,
            self.alpha2,
            self.beta,
            self.p,
            self.epsilon,
            self.t_scale,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            v.push(String::from("all coefficients must be finite"));
        }
        if !(self.p > 2.0 && self.p < 4.0) {
            v.push(String::from("p must lie in (2,4)"));
        }
        let positive = [
            (self.lambda1, "λ₁ > 0 required"),
            (self.lambda2, "λ₂ > 0 required"),
            (self.mu1, "μ₁ > 0 required"),
            (self.mu2, "μ₂ > 0 required"),
            (self.epsilon, "ε > 0 required"),
            (self.t_scale, "T > 0 required"),
        ];
        for (x, msg) in positive {
            if !(x > 0.0) {
                v.push(String::from(msg));
            }
        }
        if !(self.alpha1 >= 0.0) {
            v.push(String::from("α₁ ≥ 0 required"));
        }
        if !(self.alpha2 >= 0.0) {
            v.push(String::from("α₂ ≥ 0 required"));
        }
        ValidationReport { violations: v }
    }

    /// Entry check for the solver drivers: valid and max(α₁, α₂) > 0.
    pub fn require_solvable(&self) -> Result<()> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(Error::InvalidParams(report.violations.join("; ")));
        }
        if !(self.alpha1.max(self.alpha2) > 0.0) {
            return Err(Error::InvalidParams(String::from(
                "solvers require max(α₁, α₂) > 0",
            )));
        }
        Ok(())
    }

    /// Smallest T with T² ≥ (16 + Σᵢ 4p/(μᵢ(p−2)))·S².
    pub fn choose_t(&self, sobolev_s: f64) -> Result<f64> {
        if !(self.p > 2.0) {
            return Err(Error::Domain(String::from("choose_T needs p > 2")));
        }
        if !(sobolev_s > 0.0) {
            return Err(Error::Domain(String::from("Sobolev constant must be positive")));
        }
        let sum: f64 = [self.mu1, self.mu2]
            .iter()
            .map(|mu| 4.0 * self.p / (mu * (self.p - 2.0)))
            .sum();
        Ok(((16.0 + sum) * sobolev_s * sobolev_s).sqrt())
    }

    /// χ_β(s).
    pub fn chi(&self, s: f64) -> Result<f64> {
        check_arg(s)?;
        if !self.truncation_active() {
            return Ok(1.0);
        }
        Ok(smoothstep_down(s))
    }

    /// χ′_β(s), bounded in [−1.875, 0].
    pub fn chi_prime(&self, s: f64) -> Result<f64> {
        check_arg(s)?;
        if !self.truncation_active() || s <= 1.0 || s >= 2.0 {
            return Ok(0.0);
        }
        let t = s - 1.0;
        Ok(-30.0 * t * t * (1.0 - t) * (1.0 - t))
    }

    /// χ″_β(s); only needed for the exact fibering Jacobian inside the
    /// truncation zone.
    pub fn chi_second(&self, s: f64) -> Result<f64> {
        check_arg(s)?;
        if !self.truncation_active() || s <= 1.0 || s >= 2.0 {
            return Ok(0.0);
        }
        let t = s - 1.0;
        Ok(-60.0 * t * (1.0 - t) * (1.0 - 2.0 * t))
    }
}

fn check_arg(s: f64) -> Result<()> {
    if s < 0.0 || s.is_nan() {
        return Err(Error::Domain(alloc::format!("χ_β needs s ≥ 0, got {s}")));
    }
    Ok(())
}

/// 1 on [0,1], 0 on [2,∞), C² quintic in between. Shared by χ_β and the
/// bubble cut-off.
pub fn smoothstep_down(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let t = s - 1.0;
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// Derivative of [`smoothstep_down`].
pub fn smoothstep_down_prime(s: f64) -> f64 {
    if s <= 1.0 || s >= 2.0 {
        0.0
    } else {
        let t = s - 1.0;
        -30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}
