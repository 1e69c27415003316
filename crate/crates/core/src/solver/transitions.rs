//! Sparse per-(state, action) successor structures.
//!
//! Rows exist for every lattice state and every action feasible from its
//! cell, in canonical action order. Successor indices below `n_lattice` are
//! lattice states; `n_lattice` is the sink (value one) and `n_lattice + 1`
//! the safe terminal (value zero), so backups never branch on terminals.
//!
//! Deterministic maps store three successors per row and map, with the
//! outcome probabilities kept once per (cell, action). The interpolation map
//! stores a flat list of (successor, probability) pairs per row.

use rayon::prelude::*;

use super::Flavour;
use crate::error::Result;
use crate::faults::{fault_probs, Outcome};
use crate::location::Action;
use crate::num::Real;
use crate::rover::HybridState;
use crate::scenario::{Landing, Scenario};
use crate::statespace::{MapKind, StateId};

/// Where a successor entry points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Lattice(StateId),
    Sink,
    Safe,
}

#[derive(Debug, Clone)]
pub(crate) enum Successors<T> {
    /// `next[(row * n_maps + m) * 3 + outcome]`.
    Deterministic { n_maps: usize, next: Vec<u32> },
    /// Entries of row `r` are `entries[offsets[r]..offsets[r + 1]]`.
    Stochastic { offsets: Vec<usize>, entries: Vec<(u32, T)> },
}

#[derive(Debug, Clone)]
pub struct TransitionModel<T> {
    pub(crate) flavour: Flavour,
    pub(crate) n_lattice: usize,
    /// States per cell (n_T · n_B).
    pub(crate) per_cell: usize,
    pub(crate) safe: Vec<bool>,
    pub(crate) cell_actions: Vec<Vec<Action>>,
    /// First row of each cell's block.
    pub(crate) row_base: Vec<usize>,
    /// First entry of each cell's outcome-probability block.
    pub(crate) prob_base: Vec<usize>,
    pub(crate) probs: Vec<[T; 3]>,
    pub(crate) succ: Successors<T>,
}

impl<T: Real> TransitionModel<T> {
    pub fn flavour(&self) -> Flavour {
        self.flavour
    }

    pub fn n_lattice(&self) -> usize {
        self.n_lattice
    }

    /// Number of parallel successor structures per action.
    pub fn n_structures(&self) -> usize {
        self.flavour.maps().len()
    }

    pub fn is_safe(&self, z: StateId) -> bool {
        self.safe[z.index()]
    }

    pub fn n_rows(&self) -> usize {
        *self.row_base.last().unwrap()
    }

    /// Feasible actions at `z`, in canonical order.
    pub fn actions(&self, z: StateId) -> &[Action] {
        &self.cell_actions[z.index() / self.per_cell]
    }

    #[inline]
    pub(crate) fn row(&self, z: usize, slot: usize) -> usize {
        let c = z / self.per_cell;
        self.row_base[c] + (z % self.per_cell) * self.cell_actions[c].len() + slot
    }

    #[inline]
    pub(crate) fn target(&self, raw: u32) -> Target {
        let raw = raw as usize;
        if raw < self.n_lattice {
            Target::Lattice(StateId(raw as u32))
        } else if raw == self.n_lattice {
            Target::Sink
        } else {
            Target::Safe
        }
    }

    /// Successor distributions of `action` at `z`, one per map of the
    /// flavour. Zero-probability entries are omitted.
    pub fn successors(&self, z: StateId, action: Action) -> Option<Vec<Vec<(Target, T)>>> {
        let c = z.index() / self.per_cell;
        let slot = self.cell_actions[c].iter().position(|a| *a == action)?;
        let row = self.row(z.index(), slot);
        let out = match &self.succ {
            Successors::Deterministic { n_maps, next } => {
                let p = &self.probs[self.prob_base[c] + slot];
                (0..*n_maps)
                    .map(|m| {
                        (0..3)
                            .filter(|o| p[*o] > T::zero())
                            .map(|o| (self.target(next[(row * n_maps + m) * 3 + o]), p[o]))
                            .collect()
                    })
                    .collect()
            }
            Successors::Stochastic { offsets, entries } => vec![entries[offsets[row]..offsets[row + 1]]
                .iter()
                .map(|(s, p)| (self.target(*s), *p))
                .collect()],
        };
        Some(out)
    }
}

/// Per (cell, time) outcome cache: energy changes do not depend on `b`.
struct CellTimeOutcomes<T> {
    /// Per slot: outcome per kind, `None` when impossible.
    outcomes: Vec<[Option<Outcome<T>>; 3]>,
}

pub fn build_transitions<T: Real>(scenario: &Scenario<T>, flavour: Flavour) -> Result<TransitionModel<T>> {
    let space = &scenario.space;
    let n_lattice = space.n_lattice();
    let (n_t, n_b) = (space.n_time(), space.n_energy());
    let per_cell = n_t * n_b;
    let cells = space.cells();

    let cell_actions: Vec<Vec<Action>> = cells.iter().map(|c| scenario.feasible_actions(*c)).collect();
    let mut row_base = Vec::with_capacity(cells.len() + 1);
    let mut prob_base = Vec::with_capacity(cells.len() + 1);
    let (mut r, mut q) = (0usize, 0usize);
    for acts in &cell_actions {
        row_base.push(r);
        prob_base.push(q);
        r += per_cell * acts.len();
        q += acts.len();
    }
    row_base.push(r);
    prob_base.push(q);

    let safe: Vec<bool> = (0..n_lattice)
        .into_par_iter()
        .map(|i| scenario.safe_set.is_safe(&space.embed(StateId(i as u32)).expect("lattice state")))
        .collect();

    let mut probs = Vec::with_capacity(q);
    for (c, acts) in cells.iter().zip(&cell_actions) {
        for a in acts {
            let rho = scenario.drive_distance(*c, *a)?;
            let p = fault_probs(scenario.config.faults.rate_alpha, rho)?;
            probs.push(if a.is_drive() {
                [p.nominal, p.first_half, p.second_half]
            } else {
                [T::one(), T::zero(), T::zero()]
            });
        }
    }

    let sink = n_lattice as u32;
    let goal = n_lattice as u32 + 1;
    let maps = flavour.maps();

    // Per-cell outcome caches, one entry per time point.
    let cache_for = |ci: usize| -> Result<Vec<CellTimeOutcomes<T>>> {
        let cell = cells[ci];
        (0..n_t)
            .map(|ti| {
                let x = HybridState::new(cell, space.time_point(ti), space.energy_point(0));
                let outcomes = cell_actions[ci]
                    .iter()
                    .map(|a| {
                        let dist = scenario.outcome_distribution(&x, *a)?;
                        let mut per_kind = [None, None, None];
                        for o in dist.outcomes {
                            per_kind[o.kind as usize] = Some(o);
                        }
                        Ok(per_kind)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(CellTimeOutcomes { outcomes })
            })
            .collect()
    };
    let landing = |x: &HybridState<T>, o: &Option<Outcome<T>>| -> Option<Landing<T>> {
        o.as_ref().map(|o| scenario.land(x, o))
    };

    let succ = if flavour == Flavour::Interp {
        let per_cell_rows: Vec<(Vec<usize>, Vec<(u32, T)>)> = (0..cells.len())
            .into_par_iter()
            .map(|ci| -> Result<_> {
                let cache = cache_for(ci)?;
                let k = cell_actions[ci].len();
                let mut lens = Vec::with_capacity(per_cell * k);
                let mut entries = Vec::new();
                for ti in 0..n_t {
                    for bi in 0..n_b {
                        let z = space.id(ci, ti, bi);
                        let x = HybridState::new(cells[ci], space.time_point(ti), space.energy_point(bi));
                        for slot in 0..k {
                            let before = entries.len();
                            if safe[z.index()] {
                                entries.push((goal, T::one()));
                            } else {
                                for o in cache[ti].outcomes[slot].iter().flatten() {
                                    match scenario.land(&x, o) {
                                        Landing::Safe(_) => entries.push((goal, o.probability)),
                                        Landing::Failed(_) => entries.push((sink, o.probability)),
                                        Landing::Live(y) => {
                                            for (s, w) in space.map(MapKind::Interp, &y).support() {
                                                entries.push((s.0, o.probability * *w));
                                            }
                                        }
                                    }
                                }
                            }
                            lens.push(entries.len() - before);
                        }
                    }
                }
                Ok((lens, entries))
            })
            .collect::<Result<_>>()?;
        let mut offsets = Vec::with_capacity(r + 1);
        offsets.push(0usize);
        let total: usize = per_cell_rows.iter().map(|(_, e)| e.len()).sum();
        let mut entries = Vec::with_capacity(total);
        for (lens, e) in per_cell_rows {
            for l in lens {
                offsets.push(offsets.last().unwrap() + l);
            }
            entries.extend(e);
        }
        Successors::Stochastic { offsets, entries }
    } else {
        let n_maps = maps.len();
        let mut next = vec![sink; r * n_maps * 3];
        let mut blocks = Vec::with_capacity(cells.len());
        let mut rest: &mut [u32] = &mut next;
        for ci in 0..cells.len() {
            let len = (row_base[ci + 1] - row_base[ci]) * n_maps * 3;
            let (block, tail) = rest.split_at_mut(len);
            blocks.push(block);
            rest = tail;
        }
        blocks
            .into_par_iter()
            .enumerate()
            .try_for_each(|(ci, block)| -> Result<()> {
                let cache = cache_for(ci)?;
                let k = cell_actions[ci].len();
                for ti in 0..n_t {
                    for bi in 0..n_b {
                        let z = space.id(ci, ti, bi);
                        let x = HybridState::new(cells[ci], space.time_point(ti), space.energy_point(bi));
                        let local = (ti * n_b + bi) * k;
                        for slot in 0..k {
                            let out = &mut block[(local + slot) * n_maps * 3..(local + slot + 1) * n_maps * 3];
                            if safe[z.index()] {
                                out.fill(goal);
                                continue;
                            }
                            for (o_idx, o) in cache[ti].outcomes[slot].iter().enumerate() {
                                let Some(l) = landing(&x, o) else { continue };
                                for (m, kind) in maps.iter().enumerate() {
                                    out[m * 3 + o_idx] = match l {
                                        Landing::Safe(_) => goal,
                                        Landing::Failed(_) => sink,
                                        Landing::Live(y) => space.map(*kind, &y).single_state().expect("deterministic map").0,
                                    };
                                }
                            }
                        }
                    }
                }
                Ok(())
            })?;
        Successors::Deterministic { n_maps, next }
    };

    Ok(TransitionModel {
        flavour,
        n_lattice,
        per_cell,
        safe,
        cell_actions,
        row_base,
        prob_base,
        probs,
        succ,
    })
}
