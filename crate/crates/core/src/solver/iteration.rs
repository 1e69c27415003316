//! Synchronous (Jacobi) sweeps with double buffering.

use rayon::prelude::*;

use super::transitions::{Successors, TransitionModel};
use super::{Policy, ValueFunction};
use crate::error::{Error, Result};
use crate::location::Action;
use crate::num::Real;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats<T> {
    pub iterations: usize,
    /// Sup-norm change of the last sweep.
    pub residual: T,
}

impl<T: Real> TransitionModel<T> {
    /// Worst-over-maps expectation of row `row` under `v`.
    #[inline]
    fn backup(&self, prob_index: usize, row: usize, v: &[T]) -> T {
        match &self.succ {
            Successors::Deterministic { n_maps, next } => {
                let p = &self.probs[prob_index];
                let mut worst = T::zero();
                for m in 0..*n_maps {
                    let s = &next[(row * n_maps + m) * 3..(row * n_maps + m) * 3 + 3];
                    let e = p[0] * v[s[0] as usize] + p[1] * v[s[1] as usize] + p[2] * v[s[2] as usize];
                    worst = worst.max(e);
                }
                worst
            }
            Successors::Stochastic { offsets, entries } => {
                let mut e = T::zero();
                for (s, p) in &entries[offsets[row]..offsets[row + 1]] {
                    e += *p * v[*s as usize];
                }
                e
            }
        }
    }

    /// Minimum backup over actions and the first slot attaining it.
    #[inline]
    fn best(&self, z: usize, v: &[T]) -> (T, usize) {
        let c = z / self.per_cell;
        let k = self.cell_actions[c].len();
        let row0 = self.row_base[c] + (z % self.per_cell) * k;
        let mut best = (T::infinity(), 0);
        for slot in 0..k {
            let q = self.backup(self.prob_base[c] + slot, row0 + slot, v);
            if q < best.0 {
                best = (q, slot);
            }
        }
        best
    }

    fn initial_values(&self) -> Vec<T> {
        let mut v: Vec<T> = self.safe.iter().map(|s| if *s { T::zero() } else { T::one() }).collect();
        v.push(T::one());
        v.push(T::zero());
        v
    }
}

/// Repeats `sweep` into a second buffer until the sup-norm change is at most
/// `epsilon`.
fn iterate<T: Real, F>(model: &TransitionModel<T>, epsilon: T, max_iterations: usize, update: F) -> Result<(Vec<T>, IterationStats<T>)>
where
    F: Fn(usize, &[T]) -> T + Sync,
{
    if !(epsilon > T::zero()) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let n = model.n_lattice;
    let mut old = model.initial_values();
    let mut new = old.clone();
    let mut residual = T::infinity();
    for it in 1..=max_iterations {
        residual = new[..n]
            .par_chunks_mut(CHUNK)
            .enumerate()
            .map(|(ci, chunk)| {
                let mut r = T::zero();
                for (j, slot) in chunk.iter_mut().enumerate() {
                    let z = ci * CHUNK + j;
                    if model.safe[z] {
                        continue;
                    }
                    let val = update(z, &old);
                    r = r.max((val - old[z]).abs());
                    *slot = val;
                }
                r
            })
            .reduce(T::zero, |a, b| a.max(b));
        std::mem::swap(&mut old, &mut new);
        if residual <= epsilon {
            old.truncate(n + 1);
            return Ok((
                old,
                IterationStats {
                    iterations: it,
                    residual,
                },
            ));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
        residual: residual.as_f64(),
    })
}

/// Optimal values: `min_a max_φ E[V(φ(f(z, a)))]`, safe states pinned to
/// zero and the sink to one.
pub fn value_iteration<T: Real>(model: &TransitionModel<T>, epsilon: T, max_iterations: usize) -> Result<(ValueFunction<T>, IterationStats<T>)> {
    let (values, stats) = iterate(model, epsilon, max_iterations, |z, v| model.best(z, v).0)?;
    Ok((
        ValueFunction {
            flavour: model.flavour,
            values,
        },
        stats,
    ))
}

/// Greedy policy under `values`; ties go to the earliest action in
/// canonical order.
pub fn extract_policy<T: Real>(model: &TransitionModel<T>, values: &ValueFunction<T>) -> Policy {
    let mut v = values.values.clone();
    v.push(T::zero());
    let actions = (0..model.n_lattice)
        .into_par_iter()
        .map(|z| {
            if model.safe[z] {
                None
            } else {
                let (_, slot) = model.best(z, &v);
                Some(model.cell_actions[z / model.per_cell][slot])
            }
        })
        .collect();
    Policy {
        flavour: model.flavour,
        actions,
    }
}

/// Risk of a fixed policy under the model's maps.
pub fn evaluate_policy<T: Real>(
    model: &TransitionModel<T>,
    policy: &Policy,
    epsilon: T,
    max_iterations: usize,
) -> Result<(ValueFunction<T>, IterationStats<T>)> {
    if policy.actions.len() != model.n_lattice {
        return Err(Error::invalid("policy does not match the state space"));
    }
    let slots: Vec<u8> = (0..model.n_lattice)
        .map(|z| slot_of(model, z, policy.actions[z]))
        .collect::<Result<_>>()?;
    let (values, stats) = iterate(model, epsilon, max_iterations, |z, v| {
        let c = z / model.per_cell;
        let slot = slots[z] as usize;
        model.backup(model.prob_base[c] + slot, model.row(z, slot), v)
    })?;
    Ok((
        ValueFunction {
            flavour: model.flavour,
            values,
        },
        stats,
    ))
}

fn slot_of<T: Real>(model: &TransitionModel<T>, z: usize, action: Option<Action>) -> Result<u8> {
    if model.safe[z] {
        return Ok(0);
    }
    let acts = &model.cell_actions[z / model.per_cell];
    let a = action.ok_or_else(|| Error::invalid(format!("policy has no action at live state {z}")))?;
    acts.iter()
        .position(|b| *b == a)
        .map(|p| p as u8)
        .ok_or_else(|| Error::invalid(format!("action {} is infeasible at state {z}", a.name())))
}
