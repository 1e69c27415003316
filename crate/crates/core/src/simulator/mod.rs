//! Monte Carlo rollouts of solved policies in the continuous hybrid space
//! against sampled fault profiles.

mod batch;
mod output;
mod start;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use batch::{risk_difference_histogram, run_batch, run_batch_with_profiles, trial_rng, BatchResult, ProfileSet};
pub use output::{format_batch_csv, format_trace};
pub use start::sample_start_states;

use crate::error::{Error, Result};
use crate::faults::{FaultProfile, OutcomeKind};
use crate::location::Action;
use crate::num::Real;
use crate::rover::HybridState;
use crate::scenario::{Landing, Scenario};
use crate::solver::{predicted_risk, Flavour, PolicyArtifact, Solution};
use crate::statespace::{MapKind, StateId};

/// How a conservative policy picks actions away from lattice points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConservativeExecution {
    /// Re-run the min-max backup from the live hybrid state.
    #[default]
    Lookahead,
    /// Use the stored action of whichever of the lower-time and upper-time
    /// states has the larger value.
    StoredAction,
}

/// Values and actions of one solved policy.
#[derive(Debug, Clone)]
pub struct PolicyTable<T> {
    pub flavour: Flavour,
    /// Per discrete state, sink last.
    pub values: Vec<T>,
    /// Per lattice state.
    pub actions: Vec<Option<Action>>,
}

impl<T: Real> PolicyTable<T> {
    pub fn from_solution(solution: &Solution<T>) -> Self {
        PolicyTable {
            flavour: solution.flavour,
            values: solution.values.values.clone(),
            actions: solution.policy.actions.clone(),
        }
    }

    pub fn from_artifact(artifact: &PolicyArtifact) -> Self {
        PolicyTable {
            flavour: artifact.flavour,
            values: artifact.values_as(),
            actions: artifact.actions.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureReason {
    ExitedRegion,
    PredictedRiskOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialOutcome {
    Success,
    Failure(FailureReason),
}

impl TrialOutcome {
    pub fn is_failure(self) -> bool {
        matches!(self, TrialOutcome::Failure(_))
    }
}

/// What happened on arrival at a path entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    Start,
    Wait,
    Drive,
    FirstHalfFault,
    SecondHalfFault,
}

impl StepEvent {
    pub fn name(self) -> &'static str {
        match self {
            StepEvent::Start => "start",
            StepEvent::Wait => "wait",
            StepEvent::Drive => "drive",
            StepEvent::FirstHalfFault => "fault-first-half",
            StepEvent::SecondHalfFault => "fault-second-half",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult<T> {
    pub outcome: TrialOutcome,
    pub path: Vec<HybridState<T>>,
    pub events: Vec<StepEvent>,
    pub fault_count: usize,
    pub steps: usize,
}

/// Decision at a live state: one or more (weight, action) choices. Only the
/// interpolation flavour produces several, one per support corner.
#[derive(Debug, Clone)]
pub(crate) struct Decision<T> {
    pub choices: Vec<(T, Action)>,
}

/// Executes a policy table on hybrid states of a scenario.
pub struct Controller<'a, T> {
    pub scenario: &'a Scenario<T>,
    pub table: &'a PolicyTable<T>,
    pub execution: ConservativeExecution,
}

impl<'a, T: Real> Controller<'a, T> {
    pub fn new(scenario: &'a Scenario<T>, table: &'a PolicyTable<T>) -> Result<Self> {
        if table.values.len() != scenario.space.cardinality() || table.actions.len() < scenario.space.n_lattice() {
            return Err(Error::invalid("policy table does not match the scenario lattice"));
        }
        Ok(Controller {
            scenario,
            table,
            execution: scenario.config.simulator.conservative_execution,
        })
    }

    pub fn flavour(&self) -> Flavour {
        self.table.flavour
    }

    /// Risk the policy predicts at `x`: zero inside the safe set, one outside
    /// the operational region.
    pub fn predicted(&self, x: &HybridState<T>) -> T {
        match self.scenario.classify(*x) {
            Landing::Safe(_) => T::zero(),
            Landing::Failed(_) => T::one(),
            Landing::Live(x) => predicted_risk(&self.scenario.space, &self.table.values, self.table.flavour, &x),
        }
    }

    fn stored(&self, z: StateId) -> Option<Action> {
        self.table.actions.get(z.index()).copied().flatten()
    }

    /// One-step min-max backup from a live hybrid state; ties go to the
    /// earliest action in canonical order.
    pub fn lookahead(&self, x: &HybridState<T>) -> Result<Action> {
        let s = self.scenario;
        let mut best: Option<(T, Action)> = None;
        for a in s.feasible_actions(x.cell) {
            let dist = s.outcome_distribution(x, a)?;
            let mut worst = T::zero();
            for kind in self.table.flavour.maps() {
                let mut e = T::zero();
                for o in &dist.outcomes {
                    let v = match s.land(x, o) {
                        Landing::Safe(_) => T::zero(),
                        Landing::Failed(_) => T::one(),
                        Landing::Live(y) => s
                            .space
                            .map(*kind, &y)
                            .support()
                            .iter()
                            .map(|(z, w)| *w * self.table.values[z.index()])
                            .sum(),
                    };
                    e += o.probability * v;
                }
                worst = worst.max(e);
            }
            if best.is_none_or(|(b, _)| worst < b) {
                best = Some((worst, a));
            }
        }
        best.map(|(_, a)| a)
            .ok_or_else(|| Error::invalid(format!("no feasible action at {}", x.cell)))
    }

    fn stored_or_lookahead(&self, z: StateId, x: &HybridState<T>) -> Result<Action> {
        match self.stored(z) {
            Some(a) => Ok(a),
            None => self.lookahead(x),
        }
    }

    /// Weighted actions the policy executes at a live state; a single entry
    /// except under the interpolation flavour.
    pub fn action_choices(&self, x: &HybridState<T>) -> Result<Vec<(T, Action)>> {
        Ok(self.decide(x)?.choices)
    }

    /// Action choices at a live state. Lattice states without a stored
    /// action (safe corners of an unsafe state) fall back to the lookahead.
    pub(crate) fn decide(&self, x: &HybridState<T>) -> Result<Decision<T>> {
        let space = &self.scenario.space;
        let single = |a| Decision {
            choices: vec![(T::one(), a)],
        };
        let single_map = |kind| -> Result<Decision<T>> {
            let z = space.map(kind, x).single_state().expect("deterministic map");
            Ok(single(self.stored_or_lookahead(z, x)?))
        };
        match self.table.flavour {
            Flavour::Nearest => single_map(MapKind::Nearest),
            Flavour::Lower => single_map(MapKind::Lower),
            Flavour::Upper => single_map(MapKind::Upper),
            Flavour::Interp => {
                let mut choices = Vec::with_capacity(4);
                for (z, w) in space.map_interp(x).support() {
                    choices.push((*w, self.stored_or_lookahead(*z, x)?));
                }
                Ok(Decision { choices })
            }
            Flavour::Conservative => match self.execution {
                ConservativeExecution::Lookahead => Ok(single(self.lookahead(x)?)),
                ConservativeExecution::StoredAction => {
                    let lo = space.map_lower(x).single_state().expect("deterministic map");
                    let up = space.map_upper(x).single_state().expect("deterministic map");
                    let v = &self.table.values;
                    let z = if v[up.index()] > v[lo.index()] { up } else { lo };
                    Ok(single(self.stored_or_lookahead(z, x)?))
                }
            },
        }
    }
}

impl<T: Real> Decision<T> {
    /// Index of the chosen entry; draws from `rng` only when there is a choice.
    pub(crate) fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.choices.len() == 1 {
            return 0;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, (w, _)) in self.choices.iter().enumerate() {
            acc += w.as_f64();
            if u < acc {
                return i;
            }
        }
        self.choices.len() - 1
    }
}

/// Outcome bucket of an action started at cumulative driven distance
/// `driven`; every drive attempt consumes its full length of the profile.
pub(crate) fn bucket<T: Real>(profile: &FaultProfile<T>, action: Action, driven: T, rho: T) -> OutcomeKind {
    if action.is_drive() {
        profile.classify(driven, rho)
    } else {
        OutcomeKind::Nominal
    }
}

pub(crate) fn event_of(action: Action, kind: OutcomeKind) -> StepEvent {
    match kind {
        OutcomeKind::FirstHalfFault => StepEvent::FirstHalfFault,
        OutcomeKind::SecondHalfFault => StepEvent::SecondHalfFault,
        OutcomeKind::Nominal if action.is_drive() => StepEvent::Drive,
        OutcomeKind::Nominal => StepEvent::Wait,
    }
}

/// One trial from `x0`. Per step: safe check, region check, predicted-risk
/// check, then act on the outcome the profile dictates.
pub fn rollout<T: Real, R: Rng + ?Sized>(
    ctrl: &Controller<'_, T>,
    x0: HybridState<T>,
    profile: &FaultProfile<T>,
    rng: &mut R,
) -> Result<TrialResult<T>> {
    let s = ctrl.scenario;
    let max_steps = s.config.simulator.max_steps;
    let mut path = vec![x0];
    let mut events = vec![StepEvent::Start];
    let mut faults = 0;
    let mut driven = T::zero();
    let mut status = s.classify(x0);
    let finish = |outcome, path: Vec<HybridState<T>>, events, faults| {
        let steps = path.len() - 1;
        Ok(TrialResult {
            outcome,
            path,
            events,
            fault_count: faults,
            steps,
        })
    };
    loop {
        let x = match status {
            Landing::Safe(_) => return finish(TrialOutcome::Success, path, events, faults),
            Landing::Failed(_) => {
                return finish(TrialOutcome::Failure(FailureReason::ExitedRegion), path, events, faults)
            }
            Landing::Live(x) => x,
        };
        if ctrl.predicted(&x) >= T::one() {
            return finish(TrialOutcome::Failure(FailureReason::PredictedRiskOne), path, events, faults);
        }
        if path.len() > max_steps {
            return Err(Error::StepLimit(max_steps));
        }
        let decision = ctrl.decide(&x)?;
        let action = decision.choices[decision.pick(rng)].1;
        let rho = s.drive_distance(x.cell, action)?;
        let kind = bucket(profile, action, driven, rho);
        driven += rho;
        if kind.is_fault() {
            faults += 1;
        }
        let outcome = s.outcome(&x, action, kind)?;
        status = s.land(&x, &outcome);
        path.push(status.state());
        events.push(event_of(action, kind));
    }
}
