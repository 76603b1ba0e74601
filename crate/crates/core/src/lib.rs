//! Numerical core for the two-component critical elliptic system
//!
//! ```text
//! -ε²Δu₁ + λ₁u₁ = μ₁u₁³ + α₁u₁^{p-1} + βu₂²u₁
//! -ε²Δu₂ + λ₂u₂ = μ₂u₂³ + α₂u₂^{p-1} + βu₁²u₂     in Ω ⊂ ℝ⁴, u = 0 on ∂Ω
//! ```
//!
//! The crate is `no_std` (with `alloc`). Everything that touches files, the
//! clock or threads lives in the companion `spike4` crate.

#![no_std]
// std's inherent float methods shadow the libm shims whenever a dependent
// crate links std (tests, or serde's std feature unified in by the runner)
#![allow(unused_imports)]

extern crate alloc;

pub mod asymptotics;
pub mod energy;
mod error;
pub mod grid;
pub mod groundstate;
pub mod linalg;
mod math;
pub mod nehari;
pub mod params;
pub mod placement;
pub mod quadrature;

pub use error::{Error, Result};
pub use params::PhysParams;
