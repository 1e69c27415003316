//! Paired-profile batches.
//!
//! Every policy runs against the same pre-sampled profiles. A policy's
//! trajectory depends only on the sequence of (choice, outcome bucket) pairs
//! it meets, so each policy's trials share a lazily grown tree of visited
//! states; a trial walks the tree and only expands unseen branches. Results
//! are identical to calling [`rollout`](super::rollout) per trial.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{bucket, Controller, Decision, FailureReason, TrialOutcome};
use crate::error::{Error, Result};
use crate::faults::{sample_fault_profile_with, FaultProfile};
use crate::num::Real;
use crate::rover::HybridState;
use crate::scenario::Landing;
use crate::solver::Flavour;

/// Per-trial fault profiles drawn from one seed; trial `i` uses stream `i`.
#[derive(Debug, Clone)]
pub struct ProfileSet<T> {
    pub seed: u64,
    pub profiles: Vec<FaultProfile<T>>,
}

impl<T: Real> ProfileSet<T> {
    pub fn sample(alpha: T, horizon_distance: T, n_trials: usize, seed: u64) -> Result<Self> {
        let profiles = (0..n_trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                sample_fault_profile_with(&mut rng, alpha, horizon_distance)
            })
            .collect::<Result<_>>()?;
        Ok(ProfileSet { seed, profiles })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Generator for trial `i`'s execution-time randomness (interpolation corner
/// draws), disjoint from the profile streams.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((1u64 << 63) | trial as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult<T> {
    pub start: HybridState<T>,
    pub policy: Flavour,
    pub trials: usize,
    pub failures: usize,
    pub actual_risk: f64,
    pub predicted_risk: f64,
    /// Binomial standard error of `actual_risk`.
    pub stderr: f64,
    /// Predicted risk below actual risk by more than 0.001.
    pub reckless: bool,
}

pub const RECKLESS_MARGIN: f64 = 0.001;

enum NodeKind<T> {
    Done(TrialOutcome),
    Live { decision: Decision<T>, rhos: Vec<T> },
}

struct Node<T> {
    state: HybridState<T>,
    kind: NodeKind<T>,
    /// `choice * 3 + bucket`; `u32::MAX` until expanded.
    children: Vec<u32>,
}

struct Tree<'c, 'a, T> {
    ctrl: &'c Controller<'a, T>,
    nodes: Vec<Node<T>>,
}

impl<'c, 'a, T: Real> Tree<'c, 'a, T> {
    fn node(&mut self, status: Landing<T>) -> Result<u32> {
        let ctrl = self.ctrl;
        let (state, kind) = match status {
            Landing::Safe(x) => (x, NodeKind::Done(TrialOutcome::Success)),
            Landing::Failed(x) => (x, NodeKind::Done(TrialOutcome::Failure(FailureReason::ExitedRegion))),
            Landing::Live(x) if ctrl.predicted(&x) >= T::one() => {
                (x, NodeKind::Done(TrialOutcome::Failure(FailureReason::PredictedRiskOne)))
            }
            Landing::Live(x) => {
                let decision = ctrl.decide(&x)?;
                let rhos = decision
                    .choices
                    .iter()
                    .map(|(_, a)| ctrl.scenario.drive_distance(x.cell, *a))
                    .collect::<Result<_>>()?;
                (x, NodeKind::Live { decision, rhos })
            }
        };
        let n_children = match &kind {
            NodeKind::Live { decision, .. } => decision.choices.len() * 3,
            NodeKind::Done(_) => 0,
        };
        self.nodes.push(Node {
            state,
            kind,
            children: vec![u32::MAX; n_children],
        });
        Ok((self.nodes.len() - 1) as u32)
    }

    fn run(&mut self, root: u32, profile: &FaultProfile<T>, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
        let max_steps = self.ctrl.scenario.config.simulator.max_steps;
        let mut at = root as usize;
        let mut driven = T::zero();
        let mut steps = 0usize;
        loop {
            let (choice, action, rho) = match &self.nodes[at].kind {
                NodeKind::Done(o) => return Ok(*o),
                NodeKind::Live { decision, rhos } => {
                    let i = decision.pick(rng);
                    (i, decision.choices[i].1, rhos[i])
                }
            };
            steps += 1;
            if steps > max_steps {
                return Err(Error::StepLimit(max_steps));
            }
            let kind = bucket(profile, action, driven, rho);
            driven += rho;
            let slot = choice * 3 + kind as usize;
            let mut next = self.nodes[at].children[slot];
            if next == u32::MAX {
                let x = self.nodes[at].state;
                let s = self.ctrl.scenario;
                let outcome = s.outcome(&x, action, kind)?;
                next = self.node(s.land(&x, &outcome))?;
                self.nodes[at].children[slot] = next;
            }
            at = next as usize;
        }
    }
}

/// Rolls every controller against every profile from `start`.
pub fn run_batch_with_profiles<T: Real>(
    controllers: &[Controller<'_, T>],
    start: HybridState<T>,
    profiles: &ProfileSet<T>,
) -> Result<Vec<BatchResult<T>>> {
    if profiles.is_empty() {
        return Err(Error::invalid("a batch needs at least one trial"));
    }
    controllers
        .par_iter()
        .map(|ctrl| {
            let mut tree = Tree {
                ctrl,
                nodes: Vec::new(),
            };
            let root = tree.node(ctrl.scenario.classify(start))?;
            let mut failures = 0usize;
            for (i, profile) in profiles.profiles.iter().enumerate() {
                let mut rng = trial_rng(profiles.seed, i);
                if tree.run(root, profile, &mut rng)?.is_failure() {
                    failures += 1;
                }
            }
            let n = profiles.len();
            let actual = failures as f64 / n as f64;
            let predicted = ctrl.predicted(&start).as_f64();
            Ok(BatchResult {
                start,
                policy: ctrl.flavour(),
                trials: n,
                failures,
                actual_risk: actual,
                predicted_risk: predicted,
                stderr: (actual * (1.0 - actual) / n as f64).sqrt(),
                reckless: predicted < actual - RECKLESS_MARGIN,
            })
        })
        .collect()
}

/// Samples `n_trials` profiles from `seed` and runs the paired batch.
pub fn run_batch<T: Real>(
    controllers: &[Controller<'_, T>],
    start: HybridState<T>,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<BatchResult<T>>> {
    let scenario = controllers
        .first()
        .ok_or_else(|| Error::invalid("no policies to simulate"))?
        .scenario;
    if n_trials == 0 {
        return Err(Error::invalid("a batch needs at least one trial"));
    }
    let profiles = ProfileSet::sample(scenario.config.faults.rate_alpha, scenario.drive_horizon(), n_trials, seed)?;
    run_batch_with_profiles(controllers, start, &profiles)
}

/// Counts of `actual - predicted` per bin of `width`, keyed by
/// `floor(diff / width)`.
pub fn risk_difference_histogram<T>(results: &[BatchResult<T>], width: f64) -> BTreeMap<i64, usize> {
    let mut bins = BTreeMap::new();
    for r in results {
        let k = ((r.actual_risk - r.predicted_risk) / width).floor() as i64;
        *bins.entry(k).or_insert(0) += 1;
    }
    bins
}
