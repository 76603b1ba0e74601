//! Run configuration: TOML in, fully resolved TOML/JSON echo out.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use spike4_core::asymptotics::{SweepDomain, DEFAULT_LADDER};
use spike4_core::grid::{AxiGrid, Grid, RadialGrid};
use spike4_core::groundstate::SolveOptions;
use spike4_core::placement::{Domain4, PlacementOptions};
use spike4_core::PhysParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Constants,
    ScalarGround,
    SystemGround,
    Sweep,
    Placement,
    Interaction,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Constants => "constants",
            Kind::ScalarGround => "scalar-ground",
            Kind::SystemGround => "system-ground",
            Kind::Sweep => "sweep",
            Kind::Placement => "placement",
            Kind::Interaction => "interaction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must agree with the subcommand when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: PhysParams,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar: Option<ScalarSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<PlacementSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<InteractionSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSection {
    Radial {
        radius: f64,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grading: Option<f64>,
    },
    AxiBall { radius: f64, h: f64 },
    AxiCylinder { half_length: f64, n_xi: usize, rho_max: f64, n_rho: usize },
}

impl GridSection {
    pub fn build(&self) -> spike4_core::Result<std::sync::Arc<Grid>> {
        match *self {
            GridSection::Radial { radius, n, grading } => Grid::radial(RadialGrid { radius, n, grading }),
            GridSection::AxiBall { radius, h } => Grid::axi(AxiGrid::ball(radius, h)),
            GridSection::AxiCylinder { half_length, n_xi, rho_max, n_rho } => Grid::axi(AxiGrid {
                half_length,
                n_xi,
                rho_max,
                n_rho,
                ball_radius: None,
            }),
        }
    }

    /// Large enough, radially, to stand in for ℝ⁴.
    pub fn is_entire(&self, lambda_min: f64) -> bool {
        matches!(*self, GridSection::Radial { radius, .. } if radius * lambda_min.sqrt() >= 8.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsSection {
    pub sigmas: Vec<f64>,
    pub cutoff: f64,
    pub order: usize,
    /// Radius (at √λ = 1) out to which shooting profiles are reported.
    pub shooting_radius: f64,
    pub oracle_tolerance: f64,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        ConstantsSection {
            sigmas: vec![0.2, 0.1, 0.05, 0.025],
            cutoff: 1.0,
            order: 20,
            shooting_radius: 20.0,
            oracle_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalarSection {
    /// 1 and/or 2; empty means every component with αᵢ > 0.
    pub components: Vec<u8>,
    pub energy_tolerance: f64,
    /// Decay fit window in units of ε/√λᵢ.
    pub decay_window: [f64; 2],
    pub decay_band: f64,
}

impl Default for ScalarSection {
    fn default() -> Self {
        ScalarSection {
            components: Vec::new(),
            energy_tolerance: 1e-4,
            decay_window: [4.0, 8.0],
            decay_band: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    /// Compare the level with d₁ + d₂ from shooting (entire-space grids only).
    pub compare_scalar: bool,
    pub level_margin: f64,
    pub decay_window: [f64; 2],
    pub decay_band: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection {
            compare_scalar: true,
            level_margin: 1e-3,
            decay_window: [4.0, 8.0],
            decay_band: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub eps: Vec<f64>,
    pub domain: SweepDomain,
    pub nodes_per_eps: f64,
    pub warm_start: bool,
    /// Radius of the ε = 1 reference solve giving B and the limit profiles.
    pub limit_radius: f64,
    pub final_gap_tolerance: f64,
    /// Also run the ladder cold and compare final energies.
    pub compare_cold: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            eps: DEFAULT_LADDER.to_vec(),
            domain: SweepDomain::RadialBall { radius: 1.0 },
            nodes_per_eps: 24.0,
            warm_start: true,
            limit_radius: 12.0,
            final_gap_tolerance: 0.05,
            compare_cold: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementSection {
    pub domain: Domain4,
    /// Defaults to (λ₁, λ₂) from the params section.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[f64; 2]>,
    pub options: PlacementOptions,
    pub probes: usize,
    pub curve_points: usize,
    pub gap_tolerance: f64,
}

impl Default for PlacementSection {
    fn default() -> Self {
        PlacementSection {
            domain: Domain4::ball(1.0),
            lambda: None,
            options: PlacementOptions::default(),
            probes: 1000,
            curve_points: 101,
            gap_tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractionSection {
    pub d: Vec<f64>,
    /// D = d/ε values; ε is derived per d.
    pub scaled_separations: Vec<f64>,
    pub shooting_radius: f64,
    pub tolerance: f64,
}

impl Default for InteractionSection {
    fn default() -> Self {
        InteractionSection {
            d: vec![0.5, 1.0],
            scaled_separations: vec![12.0, 16.0, 20.0, 24.0],
            shooting_radius: 40.0,
            tolerance: 0.1,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Parses and resolves a config for `kind`: sections the kind needs get
/// their defaults filled in, and the seed override (if any) is applied.
pub fn parse_config(text: &str, kind: Kind, seed: Option<u64>) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
    if let Some(k) = cfg.kind {
        if k != kind {
            return Err(ConfigError(format!(
                "config is for `{}` but the subcommand is `{}`",
                k.name(),
                kind.name()
            )));
        }
    }
    cfg.kind = Some(kind);
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.solver.seed = cfg.seed;
    match kind {
        Kind::Constants => {
            cfg.constants.get_or_insert_with(Default::default);
        }
        Kind::ScalarGround => {
            require(cfg.grid.is_some(), "grid")?;
            cfg.scalar.get_or_insert_with(Default::default);
        }
        Kind::SystemGround => {
            require(cfg.grid.is_some(), "grid")?;
            cfg.system.get_or_insert_with(Default::default);
        }
        Kind::Sweep => {
            require(cfg.sweep.is_some(), "sweep")?;
        }
        Kind::Placement => {
            require(cfg.placement.is_some(), "placement")?;
            let pl = cfg.placement.as_mut().expect("checked");
            pl.options.seed = cfg.seed;
            pl.lambda.get_or_insert([cfg.params.lambda1, cfg.params.lambda2]);
        }
        Kind::Interaction => {
            cfg.interaction.get_or_insert_with(Default::default);
        }
    }
    let report = cfg.params.validate();
    if !report.is_valid() {
        return Err(ConfigError(format!("invalid params: {}", report.violations.join("; "))));
    }
    Ok(cfg)
}

fn require(present: bool, section: &str) -> Result<(), ConfigError> {
    if present {
        Ok(())
    } else {
        Err(ConfigError(format!("missing required section [{section}]")))
    }
}

/// The resolved config as TOML, re-parseable by [`parse_config`].
pub fn echo(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_constants_run() {
        let cfg = parse_config("[params]\nmu1 = 2.0\nlambda2 = 3.0\np = 3.5\n", Kind::Constants, None).unwrap();
        assert_eq!(cfg.params.mu1, 2.0);
        assert_eq!(cfg.params.mu2, 1.0);
        assert_eq!(cfg.constants.as_ref().unwrap().order, 20);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_config("[params]\ngamma = 1.0\n", Kind::Constants, None).unwrap_err();
        assert!(e.0.contains("gamma"), "{e}");
        let e = parse_config("gamma = 1.0\n", Kind::Constants, None).unwrap_err();
        assert!(e.0.contains("gamma"), "{e}");
    }

    #[test]
    fn missing_section_and_kind_mismatch() {
        assert!(parse_config("", Kind::Sweep, None).unwrap_err().0.contains("sweep"));
        assert!(parse_config("kind = \"sweep\"\n", Kind::Constants, None).is_err());
    }

    #[test]
    fn echo_round_trip() {
        let text = "seed = 3\n[params]\nbeta = 0.1\n[grid]\nkind = \"radial\"\nradius = 12.0\nn = 400\ngrading = 0.05\n";
        let cfg = parse_config(text, Kind::SystemGround, Some(9)).unwrap();
        assert_eq!(cfg.seed, 9);
        let again = parse_config(&echo(&cfg), Kind::SystemGround, None).unwrap();
        assert_eq!(cfg, again);
        let pl = parse_config("[placement.domain]\nkind = \"shell\"\ncenter = [0.0, 0.0, 0.0, 0.0]\nr_in = 1.0\nr_out = 3.0\n", Kind::Placement, None).unwrap();
        assert_eq!(parse_config(&echo(&pl), Kind::Placement, None).unwrap(), pl);
    }
}
