//! Value iteration over the discretised state space.
//!
//! Flavours differ only in the map applied to each landed hybrid state:
//! `Nearest` and `Interp` take one expectation, `Conservative` takes the worse
//! of the lower-time and upper-time expectations before minimising over
//! actions. `Lower` and `Upper` use one of those maps alone.

mod artifact;
mod curve;
mod iteration;
mod transitions;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use artifact::{PolicyArtifact, ARTIFACT_MAGIC, ARTIFACT_VERSION};
pub use curve::{format_curve_csv, min_energy_curve};
pub use iteration::{evaluate_policy, extract_policy, value_iteration, IterationStats};
pub use transitions::{build_transitions, Target, TransitionModel};

use crate::error::{Error, Result};
use crate::location::Action;
use crate::num::Real;
use crate::rover::HybridState;
use crate::scenario::Scenario;
use crate::statespace::{DiscreteStateSpace, MapKind, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavour {
    Nearest,
    Interp,
    Conservative,
    Lower,
    Upper,
}

impl Flavour {
    pub const ALL: [Flavour; 5] = [
        Flavour::Nearest,
        Flavour::Interp,
        Flavour::Conservative,
        Flavour::Lower,
        Flavour::Upper,
    ];

    /// The maps whose expectations are maximised over in a backup.
    pub fn maps(self) -> &'static [MapKind] {
        match self {
            Flavour::Nearest => &[MapKind::Nearest],
            Flavour::Interp => &[MapKind::Interp],
            Flavour::Conservative => &[MapKind::Lower, MapKind::Upper],
            Flavour::Lower => &[MapKind::Lower],
            Flavour::Upper => &[MapKind::Upper],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Flavour::Nearest => "nearest",
            Flavour::Interp => "interp",
            Flavour::Conservative => "conservative",
            Flavour::Lower => "lower",
            Flavour::Upper => "upper",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Flavour> {
        Flavour::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Flavour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Flavour {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nearest" => Ok(Flavour::Nearest),
            "interp" | "interpolation" => Ok(Flavour::Interp),
            "conservative" => Ok(Flavour::Conservative),
            "lower" => Ok(Flavour::Lower),
            "upper" => Ok(Flavour::Upper),
            other => Err(Error::invalid(format!("unknown flavour `{other}`"))),
        }
    }
}

/// Risk per discrete state; the last entry is the sink.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction<T> {
    pub flavour: Flavour,
    pub values: Vec<T>,
}

impl<T: Real> ValueFunction<T> {
    #[inline]
    pub fn get(&self, z: StateId) -> T {
        self.values[z.index()]
    }

    /// Values of the lattice states only.
    pub fn lattice(&self) -> &[T] {
        &self.values[..self.values.len() - 1]
    }
}

/// One action per non-terminal lattice state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub flavour: Flavour,
    pub actions: Vec<Option<Action>>,
}

impl Policy {
    #[inline]
    pub fn action(&self, z: StateId) -> Option<Action> {
        self.actions.get(z.index()).copied().flatten()
    }
}

#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub flavour: Flavour,
    pub values: ValueFunction<T>,
    pub policy: Policy,
    pub stats: IterationStats<T>,
}

/// Builds transitions, iterates to `epsilon` and extracts the policy.
pub fn solve<T: Real>(scenario: &Scenario<T>, flavour: Flavour, epsilon: T, max_iterations: usize) -> Result<Solution<T>> {
    let model = build_transitions(scenario, flavour)?;
    let (values, stats) = value_iteration(&model, epsilon, max_iterations)?;
    let policy = extract_policy(&model, &values);
    Ok(Solution {
        flavour,
        values,
        policy,
        stats,
    })
}

/// Risk the flavour predicts at an arbitrary hybrid state: the value at the
/// nearest point, the interpolated value, or the worse of the lower-time and
/// upper-time values. States outside the region read as the sink.
pub fn predicted_risk<T: Real>(space: &DiscreteStateSpace<T>, values: &[T], flavour: Flavour, x: &HybridState<T>) -> T {
    let mut worst = T::zero();
    for kind in flavour.maps() {
        let e: T = space
            .map(*kind, x)
            .support()
            .iter()
            .map(|(z, p)| *p * values[z.index()])
            .sum();
        worst = worst.max(e);
    }
    worst
}
