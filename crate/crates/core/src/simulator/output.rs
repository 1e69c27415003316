//! Batch CSV and per-trial trace text.

use std::fmt::Write as _;

use super::{BatchResult, TrialResult};
use crate::num::Real;

/// `#` metadata lines, then one row per batch result.
pub fn format_batch_csv<T: Real>(results: &[BatchResult<T>], metadata: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str(
        "start_cell_row,start_cell_col,start_t_s,start_b_wh,policy,predicted_risk,actual_risk,stderr,n_trials,reckless_flag\n",
    );
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.start.cell.row,
            r.start.cell.col,
            r.start.t.as_f64(),
            r.start.b.as_f64(),
            r.policy.name(),
            r.predicted_risk,
            r.actual_risk,
            r.stderr,
            r.trials,
            u8::from(r.reckless)
        );
    }
    out
}

/// Lines of `trial_id step cell_row cell_col t_s b_wh event`.
pub fn format_trace<T: Real>(trials: &[(usize, TrialResult<T>)]) -> String {
    let mut out = String::from("# trial_id step cell_row cell_col t_s b_wh event\n");
    for (id, trial) in trials {
        for (step, (x, e)) in trial.path.iter().zip(&trial.events).enumerate() {
            let _ = writeln!(
                out,
                "{id} {step} {} {} {} {} {}",
                x.cell.row,
                x.cell.col,
                x.t.as_f64(),
                x.b.as_f64(),
                e.name()
            );
        }
    }
    out
}
