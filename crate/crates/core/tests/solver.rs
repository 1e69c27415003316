mod common;

use havenwalk::scenario::Scenario;
use havenwalk::solver::{
    build_transitions, evaluate_policy, min_energy_curve, solve, value_iteration, Flavour, Policy, Target,
    TransitionModel,
};
use havenwalk::{Action, StateId};

fn value_of(v: &[f64], t: Target) -> f64 {
    match t {
        Target::Lattice(z) => v[z.index()],
        Target::Sink => 1.0,
        Target::Safe => 0.0,
    }
}

/// min over actions of the worst map's expectation, recomputed from the
/// public successor lists.
fn bellman(model: &TransitionModel<f64>, v: &[f64], z: StateId) -> f64 {
    model
        .actions(z)
        .iter()
        .map(|a| {
            model
                .successors(z, *a)
                .unwrap()
                .iter()
                .map(|d| d.iter().map(|(t, p)| p * value_of(v, *t)).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn values_lie_in_unit_interval_with_sink_one() {
    let s = common::small(3);
    for f in Flavour::ALL {
        let sol = solve(&s, f, 1e-6, 10_000).unwrap();
        assert_eq!(sol.values.values.len(), s.space.cardinality());
        assert_eq!(*sol.values.values.last().unwrap(), 1.0);
        assert!(sol.values.values.iter().all(|v| (0.0..=1.0).contains(v)), "{f}");
    }
}

#[test]
fn conservative_dominates_single_map_flavours() {
    for seed in [1, 2] {
        let s = common::small(seed);
        let c = solve(&s, Flavour::Conservative, 1e-12, 100_000).unwrap();
        for f in [Flavour::Lower, Flavour::Upper] {
            let o = solve(&s, f, 1e-12, 100_000).unwrap();
            for (a, b) in c.values.values.iter().zip(&o.values.values) {
                assert!(a + 1e-12 >= *b, "{f}: {a} < {b}");
            }
        }
    }
}

#[test]
fn fixed_point_satisfies_bellman_within_epsilon() {
    let s = common::small(2);
    for f in Flavour::ALL {
        let eps = 1e-7;
        let model = build_transitions(&s, f).unwrap();
        let (v, stats) = value_iteration(&model, eps, 10_000).unwrap();
        assert!(stats.residual <= eps);
        for z in 0..model.n_lattice() {
            let z = StateId(z as u32);
            let expect = if model.is_safe(z) { 0.0 } else { bellman(&model, &v.values, z) };
            assert!((expect - v.get(z)).abs() <= eps, "{f} at {z:?}");
        }
    }
}

#[test]
fn successor_distributions_are_normalised() {
    let s = common::small(1);
    for f in Flavour::ALL {
        let model = build_transitions(&s, f).unwrap();
        assert_eq!(model.n_structures(), f.maps().len());
        for z in 0..model.n_lattice() {
            let z = StateId(z as u32);
            for a in model.actions(z) {
                let dists = model.successors(z, *a).unwrap();
                assert_eq!(dists.len(), f.maps().len());
                for d in dists {
                    let total: f64 = d.iter().map(|(_, p)| p).sum();
                    assert!((total - 1.0).abs() < 1e-12, "{f}: {total}");
                    assert!(d.len() <= if f == Flavour::Interp { 12 } else { 3 });
                }
            }
        }
    }
}

#[test]
fn wait_is_always_feasible() {
    let s = common::small(1);
    let model = build_transitions(&s, Flavour::Nearest).unwrap();
    for z in 0..model.n_lattice() {
        assert_eq!(model.actions(StateId(z as u32))[0], Action::Wait);
    }
}

#[test]
fn solves_are_bit_identical() {
    let s = common::small(4);
    for f in [Flavour::Interp, Flavour::Conservative] {
        let a = solve(&s, f, 1e-6, 10_000).unwrap();
        let b = solve(&s, f, 1e-6, 10_000).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.values.values), bits(&b.values.values));
        assert_eq!(a.policy, b.policy);
    }
}

fn assert_energy_monotone(s: &Scenario<f64>, values: &[f64], what: &str) {
    let sp = &s.space;
    for ci in 0..sp.cells().len() {
        for ti in 0..sp.n_time() {
            for bi in 1..sp.n_energy() {
                let lo = values[sp.id(ci, ti, bi - 1).index()];
                let hi = values[sp.id(ci, ti, bi).index()];
                assert!(hi <= lo + 1e-9, "{what}: cell {ci} t {ti} b {bi}: {hi} > {lo}");
            }
        }
    }
}

#[test]
fn values_non_increasing_in_energy() {
    for seed in 1..=3 {
        let s = common::default_scenario(seed);
        for f in Flavour::ALL {
            let sol = solve(&s, f, 1e-9, 100_000).unwrap();
            assert_energy_monotone(&s, &sol.values.values, f.name());
        }
    }
}

#[test]
fn policy_evaluation_reproduces_optimal_values() {
    let s = common::small(2);
    for f in Flavour::ALL {
        let model = build_transitions(&s, f).unwrap();
        let sol = solve(&s, f, 1e-12, 100_000).unwrap();
        let (v, _) = evaluate_policy(&model, &sol.policy, 1e-12, 100_000).unwrap();
        for (a, b) in v.values.iter().zip(&sol.values.values) {
            assert!((a - b).abs() < 1e-9, "{f}");
        }
    }
}

#[test]
fn fixed_policies_never_beat_the_optimum() {
    let s = common::small(2);
    let model = build_transitions(&s, Flavour::Conservative).unwrap();
    let opt = solve(&s, Flavour::Conservative, 1e-12, 100_000).unwrap();
    let wait = Policy {
        flavour: Flavour::Conservative,
        actions: vec![Some(Action::Wait); model.n_lattice()],
    };
    let (v, _) = evaluate_policy(&model, &wait, 1e-12, 100_000).unwrap();
    for (a, b) in v.values.iter().zip(&opt.values.values) {
        assert!(*a + 1e-12 >= *b);
    }
}

#[test]
fn evaluate_rejects_infeasible_actions() {
    let s = common::small(2);
    let model = build_transitions(&s, Flavour::Nearest).unwrap();
    let none = Policy {
        flavour: Flavour::Nearest,
        actions: vec![None; model.n_lattice()],
    };
    assert!(evaluate_policy(&model, &none, 1e-9, 100).is_err());
}

#[test]
fn curves_shift_down_with_threshold() {
    let s = common::small(3);
    let sol = solve(&s, Flavour::Conservative, 1e-9, 10_000).unwrap();
    for cell in s.space.cells() {
        let mut prev: Option<Vec<(f64, Option<f64>)>> = None;
        for th in [0.0, 0.05, 0.2, 0.5, 1.0] {
            let c = min_energy_curve(&sol.values.values, &s.space, *cell, th).unwrap();
            if let Some(p) = &prev {
                for ((_, a), (_, b)) in p.iter().zip(&c) {
                    match (a, b) {
                        (Some(a), Some(b)) => assert!(b <= a),
                        (Some(_), None) => panic!("curve lost a point at a looser threshold"),
                        _ => {}
                    }
                }
            }
            prev = Some(c);
        }
        let loose = prev.unwrap();
        assert!(loose.iter().all(|(_, b)| *b == Some(s.space.energy_point(0))));
    }
}

#[test]
fn non_convergence_is_reported() {
    let s = common::small(1);
    let err = solve(&s, Flavour::Conservative, 1e-300, 1).unwrap_err();
    assert!(matches!(err, havenwalk::Error::NonConvergence { .. }), "{err}");
}
