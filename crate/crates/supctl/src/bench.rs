//! Parameterized benchmark families plus the six-location worked example.
//!
//! The generators are deterministic functions of their parameters. Each
//! produced system validates cleanly, and at small parameters the hazard is
//! reachable in the uncontrolled plant (the synthesis problem is not vacuous).

use crate::model::{
    Automaton, CmpOp, EventDecl, GuardExpr, System, Transition, Update, VarDecl,
};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("benchmark parameter out of range: {0}")]
    ParamOutOfRange(String),
}

fn tr(from: &str, event: &str, to: &str, guard: GuardExpr, updates: Vec<(&str, Update)>) -> Transition {
    Transition {
        from: from.to_string(),
        event: event.to_string(),
        to: to.to_string(),
        guard,
        updates: updates
            .into_iter()
            .map(|(n, u)| (n.to_string(), u))
            .collect(),
    }
}

/// The worked example: one automaton over locations `l0..l5`, variables
/// `x, y` in `[0,3]`, controllable `a, b, c`, uncontrollable `alpha, omega`,
/// and `l5` forbidden. Reaching `l3` with `y = 2` and `x > 2` forces an
/// uncontrollable step into `l5`.
pub fn gen_fig1() -> System {
    let guard_low = GuardExpr::and(vec![
        GuardExpr::cmp("y", CmpOp::Eq, 2),
        GuardExpr::cmp("x", CmpOp::Le, 2),
    ]);
    let guard_high = GuardExpr::and(vec![
        GuardExpr::cmp("y", CmpOp::Eq, 2),
        GuardExpr::cmp("x", CmpOp::Gt, 2),
    ]);
    System {
        variables: vec![
            VarDecl {
                name: "x".into(),
                min: 0,
                max: 3,
                init: 0,
            },
            VarDecl {
                name: "y".into(),
                min: 0,
                max: 3,
                init: 0,
            },
        ],
        events: vec![
            EventDecl {
                name: "a".into(),
                controllable: true,
            },
            EventDecl {
                name: "b".into(),
                controllable: true,
            },
            EventDecl {
                name: "c".into(),
                controllable: true,
            },
            EventDecl {
                name: "alpha".into(),
                controllable: false,
            },
            EventDecl {
                name: "omega".into(),
                controllable: false,
            },
        ],
        automata: vec![Automaton {
            name: "M".into(),
            locations: (0..6).map(|i| format!("l{i}")).collect(),
            initial: "l0".into(),
            forbidden: vec!["l5".into()],
            transitions: vec![
                tr("l0", "b", "l1", GuardExpr::True, vec![("y", Update::Const(1))]),
                tr("l0", "a", "l2", GuardExpr::True, vec![("y", Update::Const(2))]),
                tr("l1", "a", "l3", GuardExpr::True, vec![]),
                tr("l3", "c", "l1", GuardExpr::True, vec![("x", Update::Add(1))]),
                tr("l2", "b", "l3", GuardExpr::True, vec![]),
                tr("l3", "alpha", "l4", guard_low, vec![]),
                tr("l3", "alpha", "l5", guard_high, vec![]),
                tr("l4", "omega", "l4", GuardExpr::True, vec![]),
            ],
        }],
        extra_forbidden: None,
    }
}

/// Dining philosophers with `n` philosophers, `n` fork automata and `k`
/// intermediate steps between taking the left and the right fork.
///
/// Philosopher `i` cycles `think -> mid1 -> .. -> midk -> eat -> think`,
/// acquiring fork `i` on `take_left_i`, fork `(i+1) % n` on `take_right_i`
/// and releasing both on `release_i`. Fork occupancy is structural: a take
/// event synchronizes with the fork automaton's `free -> held` transition.
/// Even-numbered philosophers additionally own an uncontrollable `grab_i`
/// that fires while their left fork is held by someone else and lands in the
/// forbidden `collision` location.
pub fn gen_edp(n: usize, k: usize) -> Result<System, BenchError> {
    if n < 2 {
        return Err(BenchError::ParamOutOfRange(format!(
            "edp needs n >= 2 philosophers, got {n}"
        )));
    }
    if k < 1 {
        return Err(BenchError::ParamOutOfRange(format!(
            "edp needs k >= 1 intermediate steps, got {k}"
        )));
    }
    let mut events = Vec::new();
    let mut automata = Vec::new();
    for i in 0..n {
        events.push(EventDecl {
            name: format!("take_left_{i}"),
            controllable: true,
        });
        if k >= 2 {
            events.push(EventDecl {
                name: format!("step_{i}"),
                controllable: true,
            });
        }
        events.push(EventDecl {
            name: format!("take_right_{i}"),
            controllable: true,
        });
        events.push(EventDecl {
            name: format!("release_{i}"),
            controllable: true,
        });
        if i % 2 == 0 {
            events.push(EventDecl {
                name: format!("grab_{i}"),
                controllable: false,
            });
        }
    }

    for i in 0..n {
        let mut locations: Vec<String> = vec!["think".into()];
        locations.extend((1..=k).map(|j| format!("mid{j}")));
        locations.push("eat".into());
        let even = i % 2 == 0;
        if even {
            locations.push("collision".into());
        }
        let mut transitions = vec![tr(
            "think",
            &format!("take_left_{i}"),
            "mid1",
            GuardExpr::True,
            vec![],
        )];
        for j in 1..k {
            transitions.push(tr(
                &format!("mid{j}"),
                &format!("step_{i}"),
                &format!("mid{}", j + 1),
                GuardExpr::True,
                vec![],
            ));
        }
        transitions.push(tr(
            &format!("mid{k}"),
            &format!("take_right_{i}"),
            "eat",
            GuardExpr::True,
            vec![],
        ));
        transitions.push(tr(
            "eat",
            &format!("release_{i}"),
            "think",
            GuardExpr::True,
            vec![],
        ));
        if even {
            transitions.push(tr(
                "think",
                &format!("grab_{i}"),
                "collision",
                GuardExpr::True,
                vec![],
            ));
        }
        automata.push(Automaton {
            name: format!("phil{i}"),
            locations,
            initial: "think".into(),
            forbidden: if even {
                vec!["collision".into()]
            } else {
                vec![]
            },
            transitions,
        });
    }

    for j in 0..n {
        // Fork j is philosopher j's left fork and philosopher (j-1)'s right.
        let right_owner = (j + n - 1) % n;
        let mut transitions = vec![
            tr(
                "free",
                &format!("take_left_{j}"),
                "held",
                GuardExpr::True,
                vec![],
            ),
            tr(
                "free",
                &format!("take_right_{right_owner}"),
                "held",
                GuardExpr::True,
                vec![],
            ),
            tr(
                "held",
                &format!("release_{j}"),
                "free",
                GuardExpr::True,
                vec![],
            ),
            tr(
                "held",
                &format!("release_{right_owner}"),
                "free",
                GuardExpr::True,
                vec![],
            ),
        ];
        if j % 2 == 0 {
            // The impatient grab only fires while the fork is already held.
            transitions.push(tr(
                "held",
                &format!("grab_{j}"),
                "held",
                GuardExpr::True,
                vec![],
            ));
        }
        automata.push(Automaton {
            name: format!("fork{j}"),
            locations: vec!["free".into(), "held".into()],
            initial: "free".into(),
            forbidden: vec![],
            transitions,
        });
    }

    Ok(System {
        variables: vec![],
        events,
        automata,
        extra_forbidden: None,
    })
}

const CMT_ROOMS: usize = 5;

fn cat_var(f: usize, r: usize) -> String {
    format!("c{f}_{r}")
}

fn mouse_var(f: usize, r: usize) -> String {
    format!("m{f}_{r}")
}

/// Cat-and-mouse tower with `n` floors, `k` cats and `k` mice.
///
/// Each floor has five rooms on a ring (0-1-2-3-4-0) with per-room occupancy
/// counters per species. All moves along the ring are controllable except
/// one pathway per species and floor: cats drift uncontrollably from room 1
/// into room 2, mice from room 3 into room 2. Adjacent floors connect room 4
/// below to room 0 above. Cats start in room 0 of floor 0, mice in room 4 of
/// floor 0; a state is forbidden when any room holds both a cat and a mouse.
pub fn gen_cmt(n: usize, k: usize) -> Result<System, BenchError> {
    if n < 1 || k < 1 {
        return Err(BenchError::ParamOutOfRange(format!(
            "cmt needs n >= 1 and k >= 1, got ({n}, {k})"
        )));
    }
    let mut variables = Vec::new();
    for f in 0..n {
        for r in 0..CMT_ROOMS {
            let init_cats = if f == 0 && r == 0 { k as i64 } else { 0 };
            let init_mice = if f == 0 && r == 4 { k as i64 } else { 0 };
            variables.push(VarDecl {
                name: cat_var(f, r),
                min: 0,
                max: k as i64,
                init: init_cats,
            });
            variables.push(VarDecl {
                name: mouse_var(f, r),
                min: 0,
                max: k as i64,
                init: init_mice,
            });
        }
    }

    let mut events = Vec::new();
    let mut transitions = Vec::new();
    let mut add_move = |events: &mut Vec<EventDecl>,
                        name: String,
                        controllable: bool,
                        src: String,
                        dst: String| {
        events.push(EventDecl {
            name: name.clone(),
            controllable,
        });
        let mut updates = vec![(src.clone(), Update::Sub(1)), (dst, Update::Add(1))];
        updates.sort_by(|a, b| a.0.cmp(&b.0));
        transitions.push(Transition {
            from: "run".into(),
            event: name,
            to: "run".into(),
            guard: GuardExpr::Cmp {
                var: src,
                op: CmpOp::Ge,
                value: 1,
            },
            updates,
        });
    };

    let ring: [(usize, usize); 5] = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)];
    let species_vars: [(&str, fn(usize, usize) -> String); 2] =
        [("cat", cat_var), ("mouse", mouse_var)];
    for f in 0..n {
        for &(a, b) in &ring {
            for &(species, var) in &species_vars {
                for (src, dst) in [(a, b), (b, a)] {
                    // The hazard pathways replace the controllable move.
                    let uncontrollable = (species == "cat" && (src, dst) == (1, 2))
                        || (species == "mouse" && (src, dst) == (3, 2));
                    let name = if uncontrollable {
                        format!("{species}_haz_{f}")
                    } else {
                        format!("{species}_{f}_{src}_{dst}")
                    };
                    add_move(&mut events, name, !uncontrollable, var(f, src), var(f, dst));
                }
            }
        }
        if f + 1 < n {
            add_move(
                &mut events,
                format!("cat_up_{f}"),
                true,
                cat_var(f, 4),
                cat_var(f + 1, 0),
            );
            add_move(
                &mut events,
                format!("cat_down_{f}"),
                true,
                cat_var(f + 1, 0),
                cat_var(f, 4),
            );
            add_move(
                &mut events,
                format!("mouse_up_{f}"),
                true,
                mouse_var(f, 4),
                mouse_var(f + 1, 0),
            );
            add_move(
                &mut events,
                format!("mouse_down_{f}"),
                true,
                mouse_var(f + 1, 0),
                mouse_var(f, 4),
            );
        }
    }

    let mut cohabit = Vec::new();
    for f in 0..n {
        for r in 0..CMT_ROOMS {
            cohabit.push(GuardExpr::And(vec![
                GuardExpr::Cmp {
                    var: cat_var(f, r),
                    op: CmpOp::Ge,
                    value: 1,
                },
                GuardExpr::Cmp {
                    var: mouse_var(f, r),
                    op: CmpOp::Ge,
                    value: 1,
                },
            ]));
        }
    }

    Ok(System {
        variables,
        events,
        automata: vec![Automaton {
            name: "tower".into(),
            locations: vec!["run".into()],
            initial: "run".into(),
            forbidden: vec![],
            transitions,
        }],
        extra_forbidden: Some(GuardExpr::or(cohabit)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Stepper;

    #[test]
    fn generators_validate() {
        assert!(gen_fig1().validate().is_empty());
        assert!(gen_edp(2, 1).unwrap().validate().is_empty());
        assert!(gen_edp(3, 2).unwrap().validate().is_empty());
        assert!(gen_cmt(1, 1).unwrap().validate().is_empty());
        assert!(gen_cmt(2, 2).unwrap().validate().is_empty());
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_edp(3, 2).unwrap(), gen_edp(3, 2).unwrap());
        assert_eq!(gen_cmt(2, 1).unwrap(), gen_cmt(2, 1).unwrap());
    }

    #[test]
    fn edp_counts_automata() {
        for (n, k) in [(2, 1), (3, 1), (4, 2), (5, 10)] {
            let sys = gen_edp(n, k).unwrap();
            assert_eq!(sys.automata.len(), 2 * n);
        }
    }

    #[test]
    fn edp_initial_configuration() {
        let sys = gen_edp(2, 1).unwrap();
        let init = sys.initial_state();
        let stepper = Stepper::new(&sys);
        assert!(!stepper.is_forbidden(&init));
        for (ai, a) in sys.automata.iter().enumerate() {
            let loc = &a.locations[init.locs[ai] as usize];
            if a.name.starts_with("phil") {
                assert_eq!(loc, "think");
            } else {
                assert_eq!(loc, "free");
            }
        }
    }

    #[test]
    fn bad_params_rejected() {
        assert!(gen_edp(1, 1).is_err());
        assert!(gen_edp(2, 0).is_err());
        assert!(gen_cmt(0, 1).is_err());
        assert!(gen_cmt(1, 0).is_err());
    }

    #[test]
    fn cmt_forbidden_needs_both_species() {
        let sys = gen_cmt(1, 2).unwrap();
        let stepper = Stepper::new(&sys);
        // Any state with all mouse counters at zero is safe.
        let mut state = sys.initial_state();
        for (vi, v) in sys.variables.iter().enumerate() {
            if v.name.starts_with('m') {
                state.vals[vi] = 0;
            } else {
                state.vals[vi] = 1;
            }
        }
        assert!(!stepper.is_forbidden(&state));
        // A shared room is forbidden.
        let c2 = sys.var_id("c0_2").unwrap();
        let m2 = sys.var_id("m0_2").unwrap();
        state.vals[m2] = 1;
        state.vals[c2] = 1;
        assert!(stepper.is_forbidden(&state));
    }
}
