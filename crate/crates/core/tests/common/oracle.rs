//! Exhaustive outcome-tree enumeration, built only from the scenario's
//! outcome algebra and the lattice maps (never from the solver's tables).
#![allow(dead_code)]

use std::collections::HashMap;

use havenwalk::rover::HybridState;
use havenwalk::scenario::{Landing, Scenario};
use havenwalk::simulator::{Controller, PolicyTable};
use havenwalk::solver::Flavour;
use havenwalk::statespace::MapKind;
use havenwalk::{Action, StateId};

/// Exact discrete risk of following `policy` on the lattice: every landed
/// live state is mapped with each of the flavour's maps and the worst map
/// is taken, as in the model.
pub fn discrete_policy_risk(s: &Scenario<f64>, flavour: Flavour, policy: &dyn Fn(StateId) -> Option<Action>) -> Vec<f64> {
    let mut memo: HashMap<u32, f64> = HashMap::new();
    let n = s.space.n_lattice();
    let mut out: Vec<f64> = (0..n).map(|z| lattice_risk(s, flavour, policy, StateId(z as u32), &mut memo)).collect();
    out.push(1.0);
    out
}

fn lattice_risk(
    s: &Scenario<f64>,
    flavour: Flavour,
    policy: &dyn Fn(StateId) -> Option<Action>,
    z: StateId,
    memo: &mut HashMap<u32, f64>,
) -> f64 {
    if s.space.is_sink(z) {
        return 1.0;
    }
    if let Some(v) = memo.get(&z.0) {
        return *v;
    }
    let x = s.space.embed(z).unwrap();
    let v = match s.classify(x) {
        Landing::Safe(_) => 0.0,
        Landing::Failed(_) => 1.0,
        Landing::Live(x) => {
            let a = policy(z).expect("policy covers every live state");
            let dist = s.outcome_distribution(&x, a).unwrap();
            let mut worst = 0.0f64;
            for kind in flavour.maps() {
                let mut e = 0.0;
                for o in &dist.outcomes {
                    e += o.probability
                        * match s.land(&x, o) {
                            Landing::Safe(_) => 0.0,
                            Landing::Failed(_) => 1.0,
                            Landing::Live(y) => {
                                let m = s.space.map(*kind, &y);
                                let mut acc = 0.0;
                                for (zz, w) in m.support() {
                                    acc += w * lattice_risk(s, flavour, policy, *zz, memo);
                                }
                                acc
                            }
                        };
                }
                worst = worst.max(e);
            }
            worst
        }
    };
    memo.insert(z.0, v);
    v
}

/// Exact probability that executing `table` in the continuous hybrid space
/// from `x0` fails, enumerating every fault outcome. Supports the nearest
/// and conservative (lookahead) execution rules.
pub fn hybrid_execution_risk(s: &Scenario<f64>, table: &PolicyTable<f64>, x0: HybridState<f64>) -> f64 {
    let ctrl = Controller::new(s, table).unwrap();
    let mut memo = HashMap::new();
    hybrid(&ctrl, s.classify(x0), &mut memo)
}

type Key = (usize, usize, u64, u64);

fn hybrid(ctrl: &Controller<'_, f64>, status: Landing<f64>, memo: &mut HashMap<Key, f64>) -> f64 {
    let s = ctrl.scenario;
    let x = match status {
        Landing::Safe(_) => return 0.0,
        Landing::Failed(_) => return 1.0,
        Landing::Live(x) => x,
    };
    if ctrl.predicted(&x) >= 1.0 {
        return 1.0;
    }
    let key = (x.cell.row, x.cell.col, x.t.to_bits(), x.b.to_bits());
    if let Some(v) = memo.get(&key) {
        return *v;
    }
    let action = match ctrl.table.flavour {
        Flavour::Nearest => {
            let z = s.space.map(MapKind::Nearest, &x).single_state().unwrap();
            match ctrl.table.actions[z.index()] {
                Some(a) => a,
                None => ctrl.lookahead(&x).unwrap(),
            }
        }
        Flavour::Conservative => ctrl.lookahead(&x).unwrap(),
        f => panic!("oracle does not model {f} execution"),
    };
    let dist = s.outcome_distribution(&x, action).unwrap();
    let mut v = 0.0;
    for o in &dist.outcomes {
        v += o.probability * hybrid(ctrl, s.land(&x, o), memo);
    }
    memo.insert(key, v);
    v
}
