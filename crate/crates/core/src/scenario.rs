//! A complete planning problem: configuration, terrain, irradiance, safe set
//! and discretisation, loadable from and writable to a scenario directory.
//!
//! Directory layout: `config.json`, `elevation.asc`, `irradiance/index.txt`
//! and `irradiance/frame_<k>.asc`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::faults::{outcome_distribution, outcome_of_kind, FaultParams, Outcome, OutcomeDistribution, OutcomeKind};
use crate::geodata::{
    drive_distance, format_ascii_grid, load_ascii_grid, load_irradiance_index, write_ascii_grid, GridMap,
    IrradianceStack, TerrainProducts, DEFAULT_SLOPE_LIMIT_DEG,
};
use crate::location::{Action, Cell};
use crate::num::Real;
use crate::rover::{HybridState, RoverParams};
use crate::safehaven::{select_havens, HavenSelector, SafeHavenSpec, SafeSet};
use crate::simulator::ConservativeExecution;
use crate::statespace::{DiscreteStateSpace, OperationalBounds};

pub const CONFIG_FILE: &str = "config.json";
pub const ELEVATION_FILE: &str = "elevation.asc";
pub const IRRADIANCE_DIR: &str = "irradiance";
pub const INDEX_FILE: &str = "index.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SafeSetConfig<T> {
    pub selector: HavenSelector,
    /// Mean irradiance (W/m²) a cell needs under the threshold selector.
    #[serde(default = "zero")]
    pub threshold: T,
    /// t̄ shared by every haven, epoch seconds.
    pub time_limit: T,
    /// b̄ shared by every haven, Wh.
    pub min_energy_at_limit: T,
    /// Backward step of the ζ lattice; defaults to the time resolution.
    #[serde(default)]
    pub zeta_step_s: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct DiscretizationConfig<T> {
    pub time_resolution_s: T,
    pub energy_resolution_wh: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct TerrainConfig<T> {
    #[serde(default = "default_slope_limit")]
    pub slope_limit_deg: T,
}

impl<T: Real> Default for TerrainConfig<T> {
    fn default() -> Self {
        TerrainConfig {
            slope_limit_deg: default_slope_limit(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SolverConfig<T> {
    #[serde(default = "default_epsilon")]
    pub epsilon: T,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            epsilon: default_epsilon(),
            max_iterations: default_max_iterations(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulatorConfig {
    #[serde(default)]
    pub conservative_execution: ConservativeExecution,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        SimulatorConfig {
            conservative_execution: ConservativeExecution::default(),
            max_steps: default_max_steps(),
        }
    }
}

fn zero<T: Real>() -> T {
    T::zero()
}

fn default_slope_limit<T: Real>() -> T {
    T::lit(DEFAULT_SLOPE_LIMIT_DEG)
}

fn default_epsilon<T: Real>() -> T {
    T::lit(1e-5)
}

fn default_max_iterations() -> usize {
    10_000
}

fn default_max_steps() -> usize {
    100_000
}

/// Contents of `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ScenarioConfig<T> {
    pub rover: RoverParams<T>,
    pub faults: FaultParams<T>,
    pub bounds: OperationalBounds<T>,
    pub safe_set: SafeSetConfig<T>,
    pub discretization: DiscretizationConfig<T>,
    #[serde(default)]
    pub terrain: TerrainConfig<T>,
    #[serde(default)]
    pub solver: SolverConfig<T>,
    #[serde(default)]
    pub simulator: SimulatorConfig,
}

impl<T: Real> ScenarioConfig<T> {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Replaces keys given as dotted paths (`solver.epsilon`,
    /// `discretization.time_resolution_s`). Values are parsed as JSON and
    /// fall back to plain strings. Paths must already exist in the config.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc = serde_json::to_value(self)?;
        for (path, raw) in overrides {
            let mut slot = &mut doc;
            for key in path.split('.') {
                slot = slot
                    .get_mut(key)
                    .ok_or_else(|| Error::invalid(format!("unknown config key `{path}`")))?;
            }
            *slot = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.clone()));
        }
        let config: Self = serde_json::from_value(doc)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.rover.validate()?;
        self.faults.validate()?;
        self.bounds.validate(self.rover.battery_capacity)?;
        let s = &self.safe_set;
        if !(s.time_limit >= self.bounds.t_min) {
            return Err(Error::invalid("haven time limit precedes the operational window"));
        }
        if !(s.min_energy_at_limit > T::zero() && s.min_energy_at_limit <= self.rover.battery_capacity) {
            return Err(Error::invalid("haven energy requirement must lie in (0, capacity]"));
        }
        if let Some(step) = s.zeta_step_s {
            if !(step > T::zero()) {
                return Err(Error::invalid("zeta_step_s must be positive"));
            }
        }
        if !(self.solver.epsilon > T::zero()) || self.solver.max_iterations == 0 {
            return Err(Error::invalid("solver epsilon and iteration ceiling must be positive"));
        }
        if self.simulator.max_steps == 0 {
            return Err(Error::invalid("simulator step ceiling must be positive"));
        }
        Ok(())
    }
}

/// Where an outcome leaves the rover, classified safe-first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Landing<T> {
    Safe(HybridState<T>),
    Failed(HybridState<T>),
    Live(HybridState<T>),
}

impl<T: Copy> Landing<T> {
    pub fn state(&self) -> HybridState<T> {
        match *self {
            Landing::Safe(x) | Landing::Failed(x) | Landing::Live(x) => x,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub config: ScenarioConfig<T>,
    pub terrain: TerrainProducts<T>,
    pub stack: IrradianceStack<T>,
    pub safe_set: SafeSet<T>,
    pub space: DiscreteStateSpace<T>,
    hash: String,
    source: Option<PathBuf>,
}

impl<T: Real> Scenario<T> {
    pub fn from_parts(config: ScenarioConfig<T>, elevation: GridMap<T>, stack: IrradianceStack<T>) -> Result<Self> {
        config.validate()?;
        let b = config.bounds;
        let (first, last) = stack.coverage();
        if first > b.t_min {
            return Err(Error::invalid(format!(
                "irradiance coverage starts at {first}, after t_min {}",
                b.t_min
            )));
        }
        let terrain = TerrainProducts::build(elevation, &stack, config.terrain.slope_limit_deg, (b.t_min, b.t_max))?;

        let cells: Vec<Cell> = terrain.elevation.cells().filter(|c| terrain.is_traversable(*c)).collect();
        if cells.is_empty() {
            return Err(Error::invalid("no traversable cells"));
        }
        let longest = longest_outcome(&config, &terrain, &cells)?;
        let needed = (b.t_max + longest).max(config.safe_set.time_limit);
        if last < needed {
            return Err(Error::invalid(format!(
                "irradiance coverage ends at {last} but outcomes from t_max reach {needed}"
            )));
        }

        let mean = stack.mean_map(b.t_min, b.t_max)?;
        let ss = &config.safe_set;
        let specs: Vec<SafeHavenSpec<T>> = select_havens(&terrain, &mean, ss.selector, ss.threshold)
            .into_iter()
            .map(|cell| SafeHavenSpec {
                cell,
                time_limit: ss.time_limit,
                min_energy_at_limit: ss.min_energy_at_limit,
            })
            .collect();
        let step = ss.zeta_step_s.unwrap_or(config.discretization.time_resolution_s);
        let safe_set = SafeSet::build(&terrain.elevation, &specs, &config.rover, &stack, step, b.t_min, b.b_min)?;

        let g = &terrain.elevation;
        let space = DiscreteStateSpace::new(
            cells,
            g.n_rows,
            g.n_cols,
            b,
            config.discretization.time_resolution_s,
            config.discretization.energy_resolution_wh,
        )?;
        let hash = content_hash(&config, &terrain.elevation, &stack);
        Ok(Scenario {
            config,
            terrain,
            stack,
            safe_set,
            space,
            hash,
            source: None,
        })
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        Self::load_with_overrides(dir, &[])
    }

    /// [`Scenario::load`] with config keys replaced as in
    /// [`ScenarioConfig::with_overrides`].
    pub fn load_with_overrides(dir: impl AsRef<Path>, overrides: &[(String, String)]) -> Result<Self> {
        let dir = dir.as_ref();
        let cfg_path = dir.join(CONFIG_FILE);
        let text = std::fs::read_to_string(&cfg_path).map_err(|e| Error::io(&cfg_path, e))?;
        let mut config = ScenarioConfig::from_json(&text)?;
        if !overrides.is_empty() {
            config = config.with_overrides(overrides)?;
        }
        let elevation = load_ascii_grid(dir.join(ELEVATION_FILE))?;
        let stack = load_irradiance_index(dir.join(IRRADIANCE_DIR).join(INDEX_FILE))?;
        let mut s = Scenario::from_parts(config, elevation, stack)?;
        s.source = Some(dir.to_path_buf());
        Ok(s)
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        write_scenario_dir(dir, &self.config, &self.terrain.elevation, &self.stack)
    }

    /// Hex SHA-256 over the canonical config, elevation and irradiance text.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    /// The same scenario on a different lattice.
    pub fn with_discretization(&self, time_resolution_s: T, energy_resolution_wh: T) -> Result<Self> {
        let mut config = self.config.clone();
        config.discretization = DiscretizationConfig {
            time_resolution_s,
            energy_resolution_wh,
        };
        let mut s = Scenario::from_parts(config, self.terrain.elevation.clone(), self.stack.clone())?;
        s.source = self.source.clone();
        Ok(s)
    }

    /// Energy saturation level: the battery capacity or `b_max`, whichever is lower.
    pub fn energy_ceiling(&self) -> T {
        self.config.rover.battery_capacity.min(self.config.bounds.b_max)
    }

    /// Actions available from `cell`, in canonical order.
    pub fn feasible_actions(&self, cell: Cell) -> Vec<Action> {
        Action::ALL
            .into_iter()
            .filter(|a| self.terrain.destination(cell, *a).is_ok())
            .collect()
    }

    pub fn drive_distance(&self, cell: Cell, action: Action) -> Result<T> {
        drive_distance(&self.terrain, cell, action)
    }

    pub fn outcome_distribution(&self, x: &HybridState<T>, action: Action) -> Result<OutcomeDistribution<T>> {
        outcome_distribution(&self.config.faults, &self.config.rover, &self.stack, &self.terrain, x, action)
    }

    /// The outcome of `kind`, with probability one attached.
    pub fn outcome(&self, x: &HybridState<T>, action: Action, kind: OutcomeKind) -> Result<Outcome<T>> {
        outcome_of_kind(
            &self.config.faults,
            &self.config.rover,
            &self.stack,
            &self.terrain,
            x,
            action,
            kind,
            T::one(),
        )
    }

    /// Safe check first, then membership of the operational region.
    pub fn classify(&self, x: HybridState<T>) -> Landing<T> {
        if self.safe_set.is_safe(&x) {
            Landing::Safe(x)
        } else if !self.config.bounds.contains(&x) || self.space.cell_index(x.cell).is_none() {
            Landing::Failed(x)
        } else {
            Landing::Live(x)
        }
    }

    /// Applies an outcome with battery saturation. A second-half fault
    /// saturates at the intermediate arrival and fails there if the battery
    /// is already below `b_min`.
    pub fn land(&self, x: &HybridState<T>, outcome: &Outcome<T>) -> Landing<T> {
        let ceiling = self.energy_ceiling();
        let mut y = x.apply(&outcome.first, ceiling);
        if let Some(second) = &outcome.second {
            if y.b < self.config.bounds.b_min {
                return Landing::Failed(y);
            }
            y = y.apply(second, ceiling);
        }
        self.classify(y)
    }

    /// Upper bound on distance a rollout can drive inside the window.
    pub fn drive_horizon(&self) -> T {
        let b = &self.config.bounds;
        let diag = self.terrain.elevation.cell_size * T::lit(4.0);
        (b.t_max - b.t_min) * self.config.rover.drive_velocity + diag
    }
}

fn longest_outcome<T: Real>(config: &ScenarioConfig<T>, terrain: &TerrainProducts<T>, cells: &[Cell]) -> Result<T> {
    let mut longest_drive = T::zero();
    for c in cells {
        for a in Action::ALL.into_iter().filter(|a| a.is_drive()) {
            if terrain.destination(*c, a).is_ok() {
                longest_drive = longest_drive.max(drive_distance(terrain, *c, a)?);
            }
        }
    }
    let drive_time = longest_drive / config.rover.drive_velocity;
    Ok(config
        .rover
        .wait_duration
        .max(drive_time + config.faults.recovery_duration))
}

pub fn content_hash<T: Real>(config: &ScenarioConfig<T>, elevation: &GridMap<T>, stack: &IrradianceStack<T>) -> String {
    let mut h = Sha256::new();
    h.update(b"config\n");
    h.update(serde_json::to_string(config).expect("config serialises").as_bytes());
    h.update(b"\nelevation\n");
    h.update(format_ascii_grid(elevation).as_bytes());
    for (t, f) in stack.timestamps().iter().zip(stack.frames()) {
        h.update(format!("\nframe {}\n", t.as_f64()).as_bytes());
        h.update(format_ascii_grid(f).as_bytes());
    }
    hex::encode(h.finalize())
}

/// Writes the directory layout read by [`Scenario::load`].
pub fn write_scenario_dir<T: Real>(
    dir: impl AsRef<Path>,
    config: &ScenarioConfig<T>,
    elevation: &GridMap<T>,
    stack: &IrradianceStack<T>,
) -> Result<()> {
    let dir = dir.as_ref();
    let irr = dir.join(IRRADIANCE_DIR);
    std::fs::create_dir_all(&irr).map_err(|e| Error::io(&irr, e))?;
    let cfg_path = dir.join(CONFIG_FILE);
    std::fs::write(&cfg_path, config.to_json() + "\n").map_err(|e| Error::io(&cfg_path, e))?;
    write_ascii_grid(elevation, dir.join(ELEVATION_FILE))?;
    let mut index = String::new();
    for (k, (t, f)) in stack.timestamps().iter().zip(stack.frames()).enumerate() {
        let name = format!("frame_{k}.asc");
        write_ascii_grid(f, irr.join(&name))?;
        let _ = writeln!(index, "{} {name}", t.as_f64());
    }
    let index_path = irr.join(INDEX_FILE);
    std::fs::write(&index_path, index).map_err(|e| Error::io(&index_path, e))
}
