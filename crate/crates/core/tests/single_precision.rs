mod common;

use havenwalk::scenario_gen::{gen_sweep_scenario, SweepParams};
use havenwalk::simulator::{run_batch, sample_start_states, Controller, PolicyTable};
use havenwalk::solver::{solve, Flavour};

/// Single precision cannot resolve seconds at absolute epochs, so these
/// scenarios count time from the start of the window.
fn relative(seed: u64) -> SweepParams {
    SweepParams {
        start_epoch: 0.0,
        ..common::small_params(seed)
    }
}

#[test]
fn f32_pipeline_tracks_f64() {
    let p = relative(3);
    let s32 = gen_sweep_scenario::<f32>(&p).unwrap().build().unwrap();
    let s64 = gen_sweep_scenario::<f64>(&p).unwrap().build().unwrap();
    assert_eq!(s32.space.cardinality(), s64.space.cardinality());
    for f in [Flavour::Nearest, Flavour::Conservative] {
        let a = solve(&s32, f, 1e-5, 10_000).unwrap();
        let b = solve(&s64, f, 1e-5, 10_000).unwrap();
        // Landings that hit a haven's energy threshold exactly can fall on
        // either side of it in single precision; allow a handful of flips.
        let off = a
            .values
            .values
            .iter()
            .zip(&b.values.values)
            .filter(|(x, y)| (**x as f64 - **y).abs() > 1e-3)
            .count();
        assert!(off * 200 < b.values.values.len(), "{f}: {off} states differ");
    }
}

#[test]
fn f32_batches_run() {
    let s = gen_sweep_scenario::<f32>(&relative(2)).unwrap().build().unwrap();
    let table = PolicyTable::from_solution(&solve(&s, Flavour::Conservative, 1e-5, 10_000).unwrap());
    let ctrl = [Controller::new(&s, &table).unwrap()];
    let x0 = sample_start_states(&ctrl, 1, (0.0, 1.0), 1, 10_000).unwrap()[0];
    let r = run_batch(&ctrl, x0, 1000, 4).unwrap();
    assert!((0.0..=1.0).contains(&r[0].actual_risk));
}
