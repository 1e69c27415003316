//! Risk-bounded recovery planning for solar-powered rovers that suffer random
//! traverse faults.
//!
//! The core is generic over the scalar type (`f32` or `f64`, see [`Real`]);
//! the aliases at the crate root fix it to `f64`.

// Validation uses `!(x >= lo)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod faults;
pub mod geodata;
pub mod location;
pub mod num;
pub mod rover;
pub mod safehaven;
pub mod scenario;
pub mod scenario_gen;
pub mod simulator;
pub mod solver;
pub mod statespace;

pub use error::{Error, Result};
pub use location::{Action, Cell};
pub use num::Real;
pub use solver::{Flavour, PolicyArtifact};
pub use statespace::StateId;

pub type GridMap = geodata::GridMap<f64>;
pub type IrradianceStack = geodata::IrradianceStack<f64>;
pub type TerrainProducts = geodata::TerrainProducts<f64>;
pub type RoverParams = rover::RoverParams<f64>;
pub type HybridState = rover::HybridState<f64>;
pub type StateDelta = rover::StateDelta<f64>;
pub type FaultParams = faults::FaultParams<f64>;
pub type FaultProfile = faults::FaultProfile<f64>;
pub type OutcomeDistribution = faults::OutcomeDistribution<f64>;
pub type SafeHavenSpec = safehaven::SafeHavenSpec<f64>;
pub type MinEnergySeries = safehaven::MinEnergySeries<f64>;
pub type SafeSet = safehaven::SafeSet<f64>;
pub type OperationalBounds = statespace::OperationalBounds<f64>;
pub type DiscreteStateSpace = statespace::DiscreteStateSpace<f64>;
pub type DiscreteMapResult = statespace::DiscreteMapResult<f64>;
pub type Scenario = scenario::Scenario<f64>;
pub type ScenarioConfig = scenario::ScenarioConfig<f64>;
pub type TransitionModel = solver::TransitionModel<f64>;
pub type ValueFunction = solver::ValueFunction<f64>;
pub type Solution = solver::Solution<f64>;
pub type PolicyTable = simulator::PolicyTable<f64>;
pub type TrialResult = simulator::TrialResult<f64>;
pub type BatchResult = simulator::BatchResult<f64>;

/// Version string recorded in every output file.
pub const TOOL_VERSION: &str = concat!("havenwalk ", env!("CARGO_PKG_VERSION"));
