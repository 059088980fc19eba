//! Seeded random system generator for differential testing.
//!
//! Bounds are pinned so exhaustive ground-truth checks stay instant while the
//! instances still exercise synchronization, both transition cones and
//! variable guards: at most 3 automata with at most 4 locations each, at most
//! 2 variables with domain size at most 4, at most 8 events (each
//! uncontrollable with probability 0.3) and at most 2 forbidden locations.
//! One transition per (location, event) pair keeps determinism structural.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    Automaton, CmpOp, EventDecl, GuardExpr, System, Transition, Update, VarDecl,
};

/// Deterministic function of the seed.
pub fn random_system(seed: u64) -> System {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_vars = rng.gen_range(0..=2);
    let variables: Vec<VarDecl> = (0..n_vars)
        .map(|i| {
            let min = 0;
            let max = rng.gen_range(0..=3);
            VarDecl {
                name: format!("v{i}"),
                min,
                max,
                init: rng.gen_range(min..=max),
            }
        })
        .collect();

    let n_events = rng.gen_range(1..=8);
    let events: Vec<EventDecl> = (0..n_events)
        .map(|i| EventDecl {
            name: format!("e{i}"),
            controllable: !rng.gen_bool(0.3),
        })
        .collect();

    let n_automata = rng.gen_range(1..=3);
    let mut automata = Vec::new();
    for ai in 0..n_automata {
        let n_locs = rng.gen_range(1..=4);
        let locations: Vec<String> = (0..n_locs).map(|l| format!("q{l}")).collect();
        let mut transitions = Vec::new();
        for from in 0..n_locs {
            for ev in 0..n_events {
                if !rng.gen_bool(0.35) {
                    continue;
                }
                let to = rng.gen_range(0..n_locs);
                let guard = random_guard(&mut rng, &variables);
                let mut updates = Vec::new();
                for v in &variables {
                    if !rng.gen_bool(0.3) {
                        continue;
                    }
                    let upd = match rng.gen_range(0..4) {
                        0 => Update::Const(rng.gen_range(v.min..=v.max)),
                        1 => Update::Keep,
                        2 => Update::Add(rng.gen_range(1..=2)),
                        _ => Update::Sub(rng.gen_range(1..=2)),
                    };
                    updates.push((v.name.clone(), upd));
                }
                transitions.push(Transition {
                    from: format!("q{from}"),
                    event: format!("e{ev}"),
                    to: format!("q{to}"),
                    guard,
                    updates,
                });
            }
        }
        automata.push(Automaton {
            name: format!("a{ai}"),
            locations,
            initial: "q0".into(),
            forbidden: vec![],
            transitions,
        });
    }

    // Scatter up to two forbidden locations across the network. Forbidding
    // the initial location is allowed; those instances exercise the
    // trivially uncontrollable path.
    let n_forbidden = rng.gen_range(0..=2);
    for _ in 0..n_forbidden {
        let ai = rng.gen_range(0..automata.len());
        let li = rng.gen_range(0..automata[ai].locations.len());
        let name = automata[ai].locations[li].clone();
        if !automata[ai].forbidden.contains(&name) {
            automata[ai].forbidden.push(name);
        }
    }

    System {
        variables,
        events,
        automata,
        extra_forbidden: None,
    }
}

fn random_guard(rng: &mut ChaCha8Rng, variables: &[VarDecl]) -> GuardExpr {
    if variables.is_empty() || rng.gen_bool(0.5) {
        return GuardExpr::True;
    }
    let atom = |rng: &mut ChaCha8Rng| {
        let v = &variables[rng.gen_range(0..variables.len())];
        let op = match rng.gen_range(0..6) {
            0 => CmpOp::Eq,
            1 => CmpOp::Ne,
            2 => CmpOp::Lt,
            3 => CmpOp::Le,
            4 => CmpOp::Gt,
            _ => CmpOp::Ge,
        };
        GuardExpr::cmp(&v.name, op, rng.gen_range(v.min..=v.max))
    };
    match rng.gen_range(0..3) {
        0 => atom(rng),
        1 => GuardExpr::And(vec![atom(rng), atom(rng)]),
        _ => GuardExpr::Or(vec![atom(rng), atom(rng)]),
    }
}
