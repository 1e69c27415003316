//! Poisson fault process: per-drive outcome probabilities, the three-way
//! outcome distribution, and exact fault-profile sampling for simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{drive_distance, IrradianceStack, TerrainProducts};
use crate::location::Action;
use crate::num::Real;
use crate::rover::{fault_delta, nominal_delta, HybridState, RoverParams, StateDelta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultParams<T> {
    /// Mean faults per metre driven.
    pub rate_alpha: T,
    /// Time spent in place resolving one fault, s.
    pub recovery_duration: T,
}

impl<T: Real> FaultParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_alpha >= T::zero()) {
            return Err(Error::invalid("fault rate must be non-negative"));
        }
        if !(self.recovery_duration > T::zero()) {
            return Err(Error::invalid("fault recovery duration must be positive"));
        }
        Ok(())
    }
}

/// Probabilities that the next fault on a drive of length ρ lands nowhere,
/// in the first half, or in the second half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultProbs<T> {
    pub nominal: T,
    pub first_half: T,
    pub second_half: T,
}

impl<T: Real> FaultProbs<T> {
    pub fn get(&self, kind: OutcomeKind) -> T {
        match kind {
            OutcomeKind::Nominal => self.nominal,
            OutcomeKind::FirstHalfFault => self.first_half,
            OutcomeKind::SecondHalfFault => self.second_half,
        }
    }
}

/// `nominal = e^{-αρ}`, `first_half = 1 - e^{-αρ/2}`,
/// `second_half = e^{-αρ/2} - e^{-αρ}`.
pub fn fault_probs<T: Real>(alpha: T, rho: T) -> Result<FaultProbs<T>> {
    if !(alpha >= T::zero()) || !(rho >= T::zero()) {
        return Err(Error::invalid(format!(
            "fault rate and distance must be non-negative (alpha={alpha}, rho={rho})"
        )));
    }
    let half = alpha * rho / T::lit(2.0);
    let first_half = -(-half).exp_m1();
    let survive_half = (-half).exp();
    Ok(FaultProbs {
        nominal: survive_half * survive_half,
        first_half,
        second_half: survive_half * first_half,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutcomeKind {
    Nominal = 0,
    /// Delay in place at the origin; the drive does not complete.
    FirstHalfFault = 1,
    /// Nominal arrival followed by a delay at the destination.
    SecondHalfFault = 2,
}

impl OutcomeKind {
    pub const ALL: [OutcomeKind; 3] = [
        OutcomeKind::Nominal,
        OutcomeKind::FirstHalfFault,
        OutcomeKind::SecondHalfFault,
    ];

    pub fn is_fault(self) -> bool {
        self != OutcomeKind::Nominal
    }
}

/// One realisation of an action. The second-half fault outcome carries two
/// phases so callers can saturate the battery at the intermediate arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome<T> {
    pub kind: OutcomeKind,
    pub probability: T,
    pub first: StateDelta<T>,
    pub second: Option<StateDelta<T>>,
}

impl<T: Real> Outcome<T> {
    /// Combined state change.
    pub fn delta(&self) -> StateDelta<T> {
        match &self.second {
            Some(s) => self.first.combine(s),
            None => self.first,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution<T> {
    pub outcomes: Vec<Outcome<T>>,
}

impl<T: Real> OutcomeDistribution<T> {
    pub fn total_probability(&self) -> T {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    pub fn get(&self, kind: OutcomeKind) -> Option<&Outcome<T>> {
        self.outcomes.iter().find(|o| o.kind == kind)
    }
}

/// Builds the outcome of `kind` for `action` from `x` with the given
/// probability attached.
pub fn outcome_of_kind<T: Real>(
    faults: &FaultParams<T>,
    rover: &RoverParams<T>,
    stack: &IrradianceStack<T>,
    terrain: &TerrainProducts<T>,
    x: &HybridState<T>,
    action: Action,
    kind: OutcomeKind,
    probability: T,
) -> Result<Outcome<T>> {
    let (first, second) = match kind {
        OutcomeKind::Nominal => (nominal_delta(rover, stack, terrain, x, action)?, None),
        OutcomeKind::FirstHalfFault => (fault_delta(rover, stack, x, faults.recovery_duration)?, None),
        OutcomeKind::SecondHalfFault => {
            let nom = nominal_delta(rover, stack, terrain, x, action)?;
            let arrived = HybridState::new(
                terrain.destination(x.cell, action)?,
                x.t + nom.dt,
                x.b + nom.db,
            );
            (nom, Some(fault_delta(rover, stack, &arrived, faults.recovery_duration)?))
        }
    };
    Ok(Outcome {
        kind,
        probability,
        first,
        second,
    })
}

/// Waiting always ends nominally; a drive has up to three outcomes.
/// Outcomes of zero probability are omitted.
pub fn outcome_distribution<T: Real>(
    faults: &FaultParams<T>,
    rover: &RoverParams<T>,
    stack: &IrradianceStack<T>,
    terrain: &TerrainProducts<T>,
    x: &HybridState<T>,
    action: Action,
) -> Result<OutcomeDistribution<T>> {
    let rho = drive_distance(terrain, x.cell, action)?;
    let probs = fault_probs(faults.rate_alpha, rho)?;
    let mut outcomes = Vec::with_capacity(3);
    for kind in OutcomeKind::ALL {
        let p = probs.get(kind);
        if p > T::zero() {
            outcomes.push(outcome_of_kind(faults, rover, stack, terrain, x, action, kind, p)?);
        }
    }
    Ok(OutcomeDistribution { outcomes })
}

/// Cumulative driven distances (m) at which faults strike.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FaultProfile<T> {
    pub fault_distances: Vec<T>,
}

impl<T: Real> FaultProfile<T> {
    pub fn empty() -> Self {
        FaultProfile {
            fault_distances: Vec::new(),
        }
    }

    /// First fault at or beyond `distance`.
    pub fn next_fault(&self, distance: T) -> Option<T> {
        let i = self.fault_distances.partition_point(|d| *d < distance);
        self.fault_distances.get(i).copied()
    }

    /// Outcome bucket for an edge spanning `[start, start + rho)` of
    /// cumulative distance: only the next fault matters.
    pub fn classify(&self, start: T, rho: T) -> OutcomeKind {
        let mid = start + rho / T::lit(2.0);
        match self.next_fault(start) {
            Some(f) if f < mid => OutcomeKind::FirstHalfFault,
            Some(f) if f < start + rho => OutcomeKind::SecondHalfFault,
            _ => OutcomeKind::Nominal,
        }
    }

    /// Number of faults in `[a, b)`.
    pub fn count_in(&self, a: T, b: T) -> usize {
        let lo = self.fault_distances.partition_point(|d| *d < a);
        let hi = self.fault_distances.partition_point(|d| *d < b);
        hi - lo
    }
}

/// Draws a profile from `rng`: cumulative sums of Exponential(alpha) gaps,
/// truncated at `horizon_distance`.
pub fn sample_fault_profile_with<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    alpha: T,
    horizon_distance: T,
) -> Result<FaultProfile<T>> {
    if !(alpha >= T::zero()) {
        return Err(Error::invalid("fault rate must be non-negative"));
    }
    if alpha == T::zero() {
        return Ok(FaultProfile::empty());
    }
    let exp = Exp::new(alpha.as_f64()).map_err(|e| Error::invalid(e.to_string()))?;
    let horizon = horizon_distance.as_f64();
    let mut acc = 0.0f64;
    let mut out = Vec::new();
    loop {
        let gap: f64 = exp.sample(rng);
        if gap <= 0.0 {
            continue;
        }
        acc += gap;
        if acc > horizon {
            break;
        }
        let d = T::lit(acc);
        if out.last().is_none_or(|prev| d > *prev) {
            out.push(d);
        }
    }
    Ok(FaultProfile {
        fault_distances: out,
    })
}

/// Deterministic profile for `seed`.
pub fn sample_fault_profile<T: Real>(alpha: T, horizon_distance: T, seed: u64) -> Result<FaultProfile<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_fault_profile_with(&mut rng, alpha, horizon_distance)
}
