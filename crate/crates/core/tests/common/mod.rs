#![allow(dead_code)]

pub mod oracle;

use havenwalk::scenario::Scenario;
use havenwalk::scenario_gen::{gen_sweep_scenario, SweepParams};

/// A 7x7 sweep (5x5 interior) over 12 hours.
pub fn small_params(seed: u64) -> SweepParams {
    SweepParams {
        n_rows: 7,
        n_cols: 7,
        window_s: 12.0 * 3600.0,
        seed,
        ..SweepParams::default()
    }
}

pub fn small(seed: u64) -> Scenario<f64> {
    gen_sweep_scenario::<f64>(&small_params(seed)).unwrap().build().unwrap()
}

pub fn default_scenario(seed: u64) -> Scenario<f64> {
    let p = SweepParams {
        seed,
        ..SweepParams::default()
    };
    gen_sweep_scenario::<f64>(&p).unwrap().build().unwrap()
}

/// 3x3 interior cells, 12 time points 2400 s apart, 10 energy points.
pub fn toy_params(seed: u64) -> SweepParams {
    SweepParams {
        n_rows: 5,
        n_cols: 5,
        window_s: 11.0 * 2400.0,
        seed,
        psr_fraction: 0.67,
        b_min: 500.0,
        b_max: 1400.0,
        min_energy_at_limit: 1000.0,
        time_resolution_s: 2400.0,
        energy_resolution_wh: 100.0,
        ..SweepParams::default()
    }
}

pub fn toy(seed: u64) -> Scenario<f64> {
    gen_sweep_scenario::<f64>(&toy_params(seed)).unwrap().build().unwrap()
}

/// Energy after hibernating at `cell` from `t0` to `t1` starting with `b`,
/// integrating each irradiance hold segment exactly and saturating at the
/// battery capacity.
pub fn hibernate_forward(s: &Scenario<f64>, cell: havenwalk::Cell, t0: f64, t1: f64, b: f64) -> f64 {
    let r = &s.config.rover;
    let gain = r.panel_area * r.panel_efficiency;
    let segs = s.stack.segments(cell, t0, t1).unwrap();
    let mut b = b;
    for (k, (start, irr)) in segs.iter().enumerate() {
        let end = segs.get(k + 1).map_or(t1, |(n, _)| *n);
        b = (b + (irr * gain - r.hibernate_power) * (end - start) / 3600.0).min(r.battery_capacity);
    }
    b
}
