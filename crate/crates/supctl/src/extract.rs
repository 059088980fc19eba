//! Decoding the bit-level supervisor into strengthened guards, and the
//! independent inductive-certificate check.

use crate::encode::SymbolicSystem;
use crate::logic::{Clause, Cube, Lit};
use crate::model::{EventId, GuardExpr, Stepper, System};
use crate::oracle::{reachable, OracleLimit};
use crate::pdrc::Supervisor;
use crate::sat::{OracleError, QueryResult, SolverHandle};

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("supervisor cube {0} matches no controllable transition")]
    NoMatchingTransition(usize),
    #[error("controlled system fails validation: {0}")]
    InvalidControlled(String),
}

/// One guard strengthening: the targeted original transition and the added
/// conjunct (the negated variable part of the forbidden cube).
#[derive(Debug, Clone)]
pub struct GuardStrengthening {
    pub automaton: String,
    pub from: String,
    pub event: String,
    pub added_guard: GuardExpr,
    /// Frame at which the originating cube was learned.
    pub frame: usize,
    /// Index into the supervisor's cube list.
    pub cube_index: usize,
    /// Filled by [`annotate_redundancy`]: true when the strengthening never
    /// blocks anything reachable in the controlled system.
    pub redundant: Option<bool>,
}

#[derive(Debug)]
pub struct Extraction {
    pub controlled: System,
    pub strengthenings: Vec<GuardStrengthening>,
    /// Location constraints of cubes on automata without a matching
    /// transition. The guard language cannot express another automaton's
    /// location, so these make the extracted system conservatively tighter
    /// than the bit-level supervisor (never looser).
    pub unrepresented: Vec<(usize, String)>,
}

/// Turn each forbidden cube into guard strengthenings on original
/// controllable transitions, keeping the extracted system faithful to the
/// bit-level supervisor wherever the guard language allows.
///
/// A cube forbids (state, event) pairs. Per event, its location literals are
/// realized through the transitions of the automata they constrain: a
/// location literal on an automaton declaring the event holds exactly when
/// that automaton's matching transition fires, so strengthening only those
/// transitions scopes the guard correctly. A literal on an automaton that
/// does not take part in the event has no transition to hang on; those cubes
/// are applied conservatively (the strengthening fires regardless of that
/// automaton's location) and reported as unrepresented.
pub fn extract_guards(
    supervisor: &Supervisor,
    sym: &SymbolicSystem,
) -> Result<Extraction, ExtractError> {
    let sys = &sym.system;
    let mut controlled = sys.clone();
    let mut strengthenings = Vec::new();
    let mut unrepresented = Vec::new();
    // Added guards per transition, in cube insertion order.
    let mut additions: Vec<Vec<Vec<GuardExpr>>> = sys
        .automata
        .iter()
        .map(|a| vec![Vec::new(); a.transitions.len()])
        .collect();
    // Controllable transitions per event.
    let mut by_event: Vec<Vec<(usize, usize)>> = vec![Vec::new(); sys.events.len()];
    for (ai, a) in sys.automata.iter().enumerate() {
        for (ti, t) in a.transitions.iter().enumerate() {
            let e = sys.event_id(&t.event).unwrap();
            if sys.events[e].controllable {
                by_event[e].push((ai, ti));
            }
        }
    }

    for (ci, fc) in supervisor.cubes.iter().enumerate() {
        let dec = &fc.selector;
        let added = dec.negated_guard(sys);
        let events: Vec<usize> = match dec.event {
            Some(e) => vec![e],
            None => (0..sys.events.len())
                .filter(|e| sys.events[*e].controllable && !dec.neg_events.contains(e))
                .collect(),
        };
        let mut any = false;
        for e in events {
            let participants = &by_event[e];
            if participants.is_empty() {
                continue;
            }
            // Per participating automaton: its transitions on this event
            // consistent with the cube, and whether the cube's location
            // constraints on it need a strengthening to be enforced (they
            // do not when the event can only fire from that location).
            let mut consistent: Vec<(usize, Vec<usize>)> = Vec::new();
            let mut constrained_carriers: Vec<usize> = Vec::new();
            let mut vacuous = false;
            let automata_of_event: Vec<usize> = {
                let mut v: Vec<usize> = participants.iter().map(|&(ai, _)| ai).collect();
                v.dedup();
                v
            };
            for &ai in &automata_of_event {
                let a = &sys.automata[ai];
                let all_ti: Vec<usize> = participants
                    .iter()
                    .filter(|&&(pa, _)| pa == ai)
                    .map(|&(_, ti)| ti)
                    .collect();
                let from_of = |ti: usize| {
                    a.locations
                        .iter()
                        .position(|l| *l == a.transitions[ti].from)
                        .unwrap()
                };
                let pos = dec.pos_locs.iter().find(|&&(pa, _)| pa == ai).map(|&(_, pl)| pl);
                let negs: Vec<usize> = dec
                    .neg_locs
                    .iter()
                    .filter(|&&(pa, _)| pa == ai)
                    .map(|&(_, pl)| pl)
                    .collect();
                let ok: Vec<usize> = all_ti
                    .iter()
                    .copied()
                    .filter(|&ti| {
                        let f = from_of(ti);
                        pos.map_or(true, |pl| pl == f) && !negs.contains(&f)
                    })
                    .collect();
                if ok.is_empty() {
                    // The cube pins this automaton away from every source
                    // location of the event: it can never fire there.
                    vacuous = true;
                    break;
                }
                let entailed_pos =
                    pos.map_or(true, |pl| all_ti.iter().all(|&ti| from_of(ti) == pl));
                let entailed_negs = negs.iter().all(|&nl| all_ti.iter().all(|&ti| from_of(ti) != nl));
                if !(entailed_pos && entailed_negs) {
                    constrained_carriers.push(ai);
                }
                consistent.push((ai, ok));
            }
            if vacuous {
                continue;
            }
            // Location constraints on automata outside the event cannot be
            // expressed in a guard; the strengthening then over-approximates.
            let outside: Vec<String> = dec
                .pos_locs
                .iter()
                .chain(dec.neg_locs.iter())
                .filter(|&&(pa, _)| !automata_of_event.contains(&pa))
                .map(|&(pa, pl)| {
                    format!("{}@{}", sys.automata[pa].name, sys.automata[pa].locations[pl])
                })
                .collect();
            let faithful = outside.is_empty() && constrained_carriers.len() <= 1;
            let carriers: Vec<usize> = if constrained_carriers.is_empty() {
                automata_of_event.clone()
            } else {
                constrained_carriers.clone()
            };
            if !faithful {
                for loc in outside {
                    unrepresented.push((ci, loc));
                }
                if constrained_carriers.len() > 1 {
                    for &ai in &constrained_carriers {
                        unrepresented.push((ci, format!("{} (joint constraint)", sys.automata[ai].name)));
                    }
                }
            }
            for &(ai, ref tis) in &consistent {
                if !carriers.contains(&ai) {
                    continue;
                }
                for &ti in tis {
                    let t = &sys.automata[ai].transitions[ti];
                    any = true;
                    additions[ai][ti].push(added.clone());
                    strengthenings.push(GuardStrengthening {
                        automaton: sys.automata[ai].name.clone(),
                        from: t.from.clone(),
                        event: t.event.clone(),
                        added_guard: added.clone(),
                        frame: fc.frame,
                        cube_index: ci,
                        redundant: None,
                    });
                }
            }
        }
        if !any {
            return Err(ExtractError::NoMatchingTransition(ci));
        }
    }

    for (ai, per_transition) in additions.into_iter().enumerate() {
        for (ti, parts) in per_transition.into_iter().enumerate() {
            if parts.is_empty() {
                continue;
            }
            let old = controlled.automata[ai].transitions[ti].guard.clone();
            let mut conj = Vec::new();
            if old != GuardExpr::True {
                conj.push(old);
            }
            conj.extend(parts);
            controlled.automata[ai].transitions[ti].guard = GuardExpr::and(conj);
        }
    }

    let diags = controlled.validate();
    if !diags.is_empty() {
        return Err(ExtractError::InvalidControlled(format!("{diags:?}")));
    }
    Ok(Extraction {
        controlled,
        strengthenings,
        unrepresented,
    })
}

/// Mark strengthenings that never fire on any state reachable in the
/// controlled system. Skipped (left `None`) past the state limit.
pub fn annotate_redundancy(
    extraction: &mut Extraction,
    sym: &SymbolicSystem,
    supervisor: &Supervisor,
    limit: u128,
) -> Result<(), OracleLimit> {
    if extraction.controlled.state_count() > limit {
        return Ok(());
    }
    let states = reachable(&extraction.controlled, None, limit)?;
    let sys = &sym.system;
    let stepper = Stepper::new(sys);
    for st in &mut extraction.strengthenings {
        let fc = &supervisor.cubes[st.cube_index];
        let ai = sys.automaton_id(&st.automaton).unwrap();
        let e = sys.event_id(&st.event).unwrap() as EventId;
        let from_idx = sys.automata[ai]
            .locations
            .iter()
            .position(|l| *l == st.from)
            .unwrap() as u32;
        let fires = states.iter().any(|q| {
            q.locs[ai] == from_idx
                && sym.bitmap().pair_satisfies(&fc.cube, q, e)
                && stepper
                    .transitions_of(ai)
                    .iter()
                    .any(|t| t.event == e && t.from == from_idx && stepper.transition_enabled(t, q))
        });
        st.redundant = Some(!fires);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Certificate checking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertCheck {
    /// Every initial state satisfies the invariant.
    Initiation,
    /// The invariant is closed under one supervised step.
    Consecution,
    /// The invariant implies the safety property.
    Safety,
}

impl std::fmt::Display for CertCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CertCheck::Initiation => write!(f, "initiation"),
            CertCheck::Consecution => write!(f, "consecution"),
            CertCheck::Safety => write!(f, "safety"),
        }
    }
}

#[derive(Debug)]
pub struct CertFailure {
    pub check: CertCheck,
    pub witness: String,
}

#[derive(Debug, Default)]
pub struct CertificateVerdict {
    pub failures: Vec<CertFailure>,
}

impl CertificateVerdict {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Run the three inductive-invariant checks on a fresh solver, independent
/// of any synthesis run. `supervisor_cubes` strengthen the controllable cone
/// exactly as the engine does; pass none when the system's transition
/// relation already is the controlled one.
pub fn check_certificate(
    invariant: &[Clause],
    sym: &SymbolicSystem,
    supervisor_cubes: &[Cube],
) -> Result<CertificateVerdict, OracleError> {
    let mut h = SolverHandle::new();
    let loaded = sym.load_into(&mut h)?;
    for t in supervisor_cubes {
        let mut lits = vec![!sym.ind_c];
        lits.extend(t.negate().lits().iter().copied());
        h.add_clause_lits(&lits)?;
    }
    let act_inv = Lit::positive(h.new_var());
    for c in invariant {
        let mut lits = vec![!act_inv];
        lits.extend_from_slice(c.lits());
        h.add_clause_lits(&lits)?;
    }

    let map = sym.bitmap();
    let mut verdict = CertificateVerdict::default();

    // Initiation, clause by clause: no initial state violates any clause.
    for c in invariant {
        let mut assumptions = vec![loaded.act_init, loaded.act_inv_cur];
        assumptions.extend(c.negate().lits().iter().copied());
        if let QueryResult::Satisfiable { model } = h.solve(&assumptions)? {
            let witness = map
                .decode_current_state(&model)
                .map(|s| crate::oracle::format_state(&sym.system, &s))
                .unwrap_or_else(|_| "<undecodable>".into());
            verdict.failures.push(CertFailure {
                check: CertCheck::Initiation,
                witness,
            });
        }
    }

    // Consecution: no supervised step leaves the invariant.
    for c in invariant {
        let mut assumptions = vec![act_inv, loaded.act_inv_cur, loaded.act_inv_next, sym.ind_any];
        assumptions.extend(c.negate().lits().iter().map(|&l| map.prime(l)));
        if let QueryResult::Satisfiable { model } = h.solve(&assumptions)? {
            let witness = match (map.decode_state(&model), map.decode_primed_state(&model)) {
                (Ok((s, e)), Ok(next)) => format!(
                    "{} --{}--> {}",
                    crate::oracle::format_state(&sym.system, &s),
                    sym.system.events[e].name,
                    crate::oracle::format_state(&sym.system, &next)
                ),
                _ => "<undecodable>".into(),
            };
            verdict.failures.push(CertFailure {
                check: CertCheck::Consecution,
                witness,
            });
        }
    }

    // Safety: the invariant rules out every property violation.
    let assumptions = vec![act_inv, loaded.act_inv_cur, sym.bad];
    if let QueryResult::Satisfiable { model } = h.solve(&assumptions)? {
        let witness = map
            .decode_current_state(&model)
            .map(|s| crate::oracle::format_state(&sym.system, &s))
            .unwrap_or_else(|_| "<undecodable>".into());
        verdict.failures.push(CertFailure {
            check: CertCheck::Safety,
            witness,
        });
    }

    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::gen_fig1;
    use crate::encode::{encode, EncodeLimits};
    use crate::model::CmpOp;
    use crate::pdrc::{synthesize, SynthOptions, SynthesisResult};
    use crate::syntax::print_guard;

    fn controlled_fig1() -> (SymbolicSystem, crate::pdrc::Controlled) {
        let sym = encode(&gen_fig1(), &EncodeLimits::default()).unwrap();
        match synthesize(&sym, SynthOptions::default()).unwrap() {
            SynthesisResult::Controlled(c) => (sym, c),
            _ => panic!("fig1 must be controllable"),
        }
    }

    #[test]
    fn fig1_guard_extraction() {
        let (sym, controlled) = controlled_fig1();
        let mut extraction = extract_guards(&controlled.supervisor, &sym).unwrap();
        assert_eq!(extraction.strengthenings.len(), 2);
        let mut targets: Vec<(String, String)> = extraction
            .strengthenings
            .iter()
            .map(|s| (s.from.clone(), s.event.clone()))
            .collect();
        targets.sort();
        assert_eq!(
            targets,
            vec![
                ("l1".to_string(), "a".to_string()),
                ("l2".to_string(), "b".to_string())
            ]
        );
        // Added guards are semantically y != 2 or x <= 2 over [0,3]^2.
        for st in &extraction.strengthenings {
            for x in 0..=3i64 {
                for y in 0..=3i64 {
                    let expect = !(y == 2 && x > 2);
                    assert_eq!(eval_xy(&st.added_guard, x, y), expect);
                }
            }
        }
        assert!(extraction.unrepresented.is_empty());
        // The re-validated controlled system keeps l5 unreachable.
        let reach =
            crate::oracle::reachable(&extraction.controlled, None, 1_000_000).unwrap();
        assert!(reach.iter().all(|s| s.locs[0] != 5));
        // Redundancy: (l2, b) never fires on a reachable state, (l1, a) does.
        annotate_redundancy(&mut extraction, &sym, &controlled.supervisor, 1_000_000).unwrap();
        for st in &extraction.strengthenings {
            match st.from.as_str() {
                "l1" => assert_eq!(st.redundant, Some(false)),
                "l2" => assert_eq!(st.redundant, Some(true)),
                other => panic!("unexpected source {other}"),
            }
        }
    }

    #[test]
    fn empty_supervisor_is_identity() {
        let mut sys = gen_fig1();
        sys.automata[0].forbidden.clear();
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let controlled = match synthesize(&sym, SynthOptions::default()).unwrap() {
            SynthesisResult::Controlled(c) => c,
            _ => panic!(),
        };
        assert!(controlled.supervisor.cubes.is_empty());
        let extraction = extract_guards(&controlled.supervisor, &sym).unwrap();
        assert_eq!(extraction.controlled, sys);
        assert!(extraction.strengthenings.is_empty());
    }

    #[test]
    fn uncontrollable_transitions_preserved_verbatim() {
        let (sym, controlled) = controlled_fig1();
        let extraction = extract_guards(&controlled.supervisor, &sym).unwrap();
        let print_unc = |sys: &crate::model::System| -> Vec<String> {
            let mut out = Vec::new();
            for a in &sys.automata {
                for t in &a.transitions {
                    let e = sys.event_id(&t.event).unwrap();
                    if !sys.events[e].controllable {
                        out.push(format!(
                            "{} {} {} {} {}",
                            a.name,
                            t.from,
                            t.event,
                            t.to,
                            print_guard(&t.guard)
                        ));
                    }
                }
            }
            out
        };
        assert_eq!(print_unc(&sym.system), print_unc(&extraction.controlled));
    }

    #[test]
    fn certificate_checks_accept_the_synthesized_invariant() {
        let (sym, controlled) = controlled_fig1();
        let verdict = check_certificate(
            &controlled.invariant,
            &sym,
            &controlled.supervisor.raw_cubes(),
        )
        .unwrap();
        assert!(verdict.passed());
        // The same invariant also certifies the re-encoded controlled model.
        let extraction = extract_guards(&controlled.supervisor, &sym).unwrap();
        let sym2 = encode(&extraction.controlled, &EncodeLimits::default()).unwrap();
        let verdict2 = check_certificate(&controlled.invariant, &sym2, &[]).unwrap();
        assert!(verdict2.passed(), "{verdict2:?}");
    }

    #[test]
    fn trivial_invariant_fails_safety_on_unsafe_plant() {
        let sys = gen_fig1();
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        // Inv = true: the third check must fail since l5 is reachable.
        let verdict = check_certificate(&[], &sym, &[]).unwrap();
        assert!(!verdict.passed());
        assert!(verdict
            .failures
            .iter()
            .any(|f| f.check == CertCheck::Safety));
    }

    #[test]
    fn deleting_a_needed_clause_fails_a_check() {
        let (sym, controlled) = controlled_fig1();
        for skip in 0..controlled.invariant.len() {
            let mutated: Vec<_> = controlled
                .invariant
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, c)| c.clone())
                .collect();
            let verdict =
                check_certificate(&mutated, &sym, &controlled.supervisor.raw_cubes()).unwrap();
            // Both fig1 clauses are load-bearing.
            assert!(!verdict.passed(), "deletion {skip} accepted");
        }
    }

    fn eval_xy(g: &crate::model::GuardExpr, x: i64, y: i64) -> bool {
        use crate::model::GuardExpr as G;
        match g {
            G::True => true,
            G::False => false,
            G::Cmp { var, op, value } => {
                let v = if var == "x" { x } else { y };
                op.eval(v, *value)
            }
            G::Not(i) => !eval_xy(i, x, y),
            G::And(ps) => ps.iter().all(|p| eval_xy(p, x, y)),
            G::Or(ps) => ps.iter().any(|p| eval_xy(p, x, y)),
            G::AtLocation { .. } => unreachable!(),
        }
    }

    #[test]
    fn cmp_op_sanity() {
        assert!(CmpOp::Ne.eval(1, 2));
        assert!(!CmpOp::Ne.eval(2, 2));
    }
}
