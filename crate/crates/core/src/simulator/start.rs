//! Start states for batches: PSR lattice points inside a risk band.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Controller;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::rover::HybridState;

/// Uniform rejection sampling over (PSR cell, time point, energy point),
/// keeping distinct states whose predicted risk lies in `band` (inclusive)
/// under every controller.
pub fn sample_start_states<T: Real>(
    controllers: &[Controller<'_, T>],
    n: usize,
    band: (f64, f64),
    seed: u64,
    max_attempts: usize,
) -> Result<Vec<HybridState<T>>> {
    let first = controllers
        .first()
        .ok_or_else(|| Error::invalid("no policies to sample start states for"))?;
    let scenario = first.scenario;
    let space = &scenario.space;
    let psr: Vec<usize> = (0..space.cells().len())
        .filter(|ci| scenario.terrain.is_psr(space.cells()[*ci]))
        .collect();
    if psr.is_empty() {
        return Err(Error::invalid("the scenario has no permanently shadowed cells"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        if attempts >= max_attempts {
            return Err(Error::EmptyBand { attempts });
        }
        attempts += 1;
        let ci = psr[rng.gen_range(0..psr.len())];
        let ti = rng.gen_range(0..space.n_time());
        let bi = rng.gen_range(0..space.n_energy());
        let z = space.id(ci, ti, bi);
        if !seen.insert(z) {
            continue;
        }
        let x = space.embed(z)?;
        let in_band = controllers.iter().all(|c| {
            let r = c.predicted(&x).as_f64();
            r >= band.0 && r <= band.1
        });
        if in_band {
            out.push(x);
        }
    }
    Ok(out)
}
