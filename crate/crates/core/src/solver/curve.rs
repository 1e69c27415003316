//! Minimum departure energy per time point for a risk threshold.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::location::Cell;
use crate::num::Real;
use crate::statespace::DiscreteStateSpace;

/// For each time lattice point at `cell`, the lowest energy lattice value
/// whose risk is at most `threshold`, or `None`.
pub fn min_energy_curve<T: Real>(
    values: &[T],
    space: &DiscreteStateSpace<T>,
    cell: Cell,
    threshold: T,
) -> Result<Vec<(T, Option<T>)>> {
    let ci = space
        .cell_index(cell)
        .ok_or_else(|| Error::invalid(format!("cell {cell} is not in the state space")))?;
    if values.len() < space.n_lattice() {
        return Err(Error::invalid("value array is shorter than the lattice"));
    }
    Ok((0..space.n_time())
        .map(|ti| {
            let b = (0..space.n_energy())
                .find(|bi| values[space.id(ci, ti, *bi).index()] <= threshold)
                .map(|bi| space.energy_point(bi));
            (space.time_point(ti), b)
        })
        .collect())
}

/// CSV with `#` metadata lines, a `time_s,min_energy_wh` header, and an
/// empty energy field where no energy qualifies.
pub fn format_curve_csv<T: Real>(curve: &[(T, Option<T>)], metadata: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("time_s,min_energy_wh\n");
    for (t, b) in curve {
        match b {
            Some(b) => {
                let _ = writeln!(out, "{},{}", t.as_f64(), b.as_f64());
            }
            None => {
                let _ = writeln!(out, "{},", t.as_f64());
            }
        }
    }
    out
}
