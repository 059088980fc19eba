//! On-disk formats: the model document, certificates, counterexample traces
//! and the strengthening report.
//!
//! A model is a JSON document with sections `variables`, `events`,
//! `automata` and an optional global `forbidden` predicate. Guards and the
//! forbidden predicate are strings in the grammar of [`crate::syntax`];
//! updates map a variable name to one of `"c"`, `"x"`, `"x+c"`, `"x-c"`.
//!
//! Certificates are model-level so they survive encoder changes: a list of
//! clauses, each clause a list of signed atoms like `"!loc:M@l5"`,
//! `"!ev:alpha"`, `"y<=1"` or `"x>=3"`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::encode::{BLit, BitMap};
use crate::logic::{Clause, Lit};
use crate::model::{
    Automaton, EventDecl, EventId, ExplicitState, GuardExpr, System, Transition, VarDecl,
};
use crate::syntax::{parse_guard, parse_update, print_guard, print_update};

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("in {context}: {message}")]
    Syntax { context: String, message: String },
    #[error("unknown atom '{0}'")]
    UnknownAtom(String),
}

fn syntax_err<T>(context: impl Into<String>, message: impl std::fmt::Display) -> Result<T, FileError> {
    Err(FileError::Syntax {
        context: context.into(),
        message: message.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Model documents
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct TransitionDoc {
    from: String,
    event: String,
    to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    guard: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    updates: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AutomatonDoc {
    name: String,
    locations: Vec<String>,
    initial: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    forbidden: Vec<String>,
    transitions: Vec<TransitionDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    variables: Vec<VarDecl>,
    events: Vec<EventDecl>,
    automata: Vec<AutomatonDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forbidden: Option<String>,
}

pub fn system_to_string(sys: &System) -> String {
    let doc = ModelDoc {
        variables: sys.variables.clone(),
        events: sys.events.clone(),
        automata: sys
            .automata
            .iter()
            .map(|a| AutomatonDoc {
                name: a.name.clone(),
                locations: a.locations.clone(),
                initial: a.initial.clone(),
                forbidden: a.forbidden.clone(),
                transitions: a
                    .transitions
                    .iter()
                    .map(|t| TransitionDoc {
                        from: t.from.clone(),
                        event: t.event.clone(),
                        to: t.to.clone(),
                        guard: if t.guard == GuardExpr::True {
                            None
                        } else {
                            Some(print_guard(&t.guard))
                        },
                        updates: t
                            .updates
                            .iter()
                            .map(|(v, u)| (v.clone(), print_update(v, u)))
                            .collect(),
                    })
                    .collect(),
            })
            .collect(),
        forbidden: sys.extra_forbidden.as_ref().map(print_guard),
    };
    serde_json::to_string_pretty(&doc).expect("model serialization cannot fail") + "\n"
}

pub fn system_from_str(text: &str) -> Result<System, FileError> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    let mut automata = Vec::with_capacity(doc.automata.len());
    for a in doc.automata {
        let mut transitions = Vec::with_capacity(a.transitions.len());
        for (ti, t) in a.transitions.into_iter().enumerate() {
            let guard = match &t.guard {
                None => GuardExpr::True,
                Some(text) => match parse_guard(text) {
                    Ok(g) => g,
                    Err(e) => {
                        return syntax_err(format!("guard of {}#{}", a.name, ti), e);
                    }
                },
            };
            let mut updates = Vec::new();
            for (var, text) in &t.updates {
                match parse_update(var, text) {
                    Ok(u) => updates.push((var.clone(), u)),
                    Err(e) => {
                        return syntax_err(format!("update of {}#{}", a.name, ti), e);
                    }
                }
            }
            transitions.push(Transition {
                from: t.from,
                event: t.event,
                to: t.to,
                guard,
                updates,
            });
        }
        automata.push(Automaton {
            name: a.name,
            locations: a.locations,
            initial: a.initial,
            forbidden: a.forbidden,
            transitions,
        });
    }
    let extra_forbidden = match &doc.forbidden {
        None => None,
        Some(text) => match parse_guard(text) {
            Ok(g) => Some(g),
            Err(e) => return syntax_err("forbidden predicate", e),
        },
    };
    Ok(System {
        variables: doc.variables,
        events: doc.events,
        automata,
        extra_forbidden,
    })
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub invariant: Vec<Vec<String>>,
}

/// Render one bit literal as a model-level atom string.
fn atom_of_lit(map: &BitMap, l: Lit) -> Result<String, FileError> {
    if !map.is_current_bit(l.var()) {
        return syntax_err("certificate", format!("non-state bit {}", l.var()));
    }
    Ok(map.describe_lit(l))
}

fn lit_of_atom(map: &BitMap, atom: &str) -> Result<Lit, FileError> {
    let (negated, body) = match atom.strip_prefix('!') {
        Some(rest) => (true, rest),
        None => (false, atom),
    };
    if let Some(rest) = body.strip_prefix("loc:") {
        let (aut, loc) = rest
            .split_once('@')
            .ok_or_else(|| FileError::UnknownAtom(atom.into()))?;
        let block = map
            .locs
            .iter()
            .find(|b| b.name == aut)
            .ok_or_else(|| FileError::UnknownAtom(atom.into()))?;
        let li = block
            .locations
            .iter()
            .position(|l| l == loc)
            .ok_or_else(|| FileError::UnknownAtom(atom.into()))?;
        let lit = map.loc_lit(block.automaton, li);
        return Ok(if negated { !lit } else { lit });
    }
    if let Some(rest) = body.strip_prefix("ev:") {
        let e = map
            .event_names
            .iter()
            .position(|n| n == rest)
            .ok_or_else(|| FileError::UnknownAtom(atom.into()))?;
        let lit = map.event_lit(e);
        return Ok(if negated { !lit } else { lit });
    }
    // Threshold atom: name>=c or name<=c, possibly under a '!'.
    let (name, geq, value) = if let Some((n, v)) = body.split_once(">=") {
        (n, true, v)
    } else if let Some((n, v)) = body.split_once("<=") {
        (n, false, v)
    } else {
        return Err(FileError::UnknownAtom(atom.into()));
    };
    let value: i64 = value
        .trim()
        .parse()
        .map_err(|_| FileError::UnknownAtom(atom.into()))?;
    let block = map
        .vars
        .iter()
        .find(|b| b.name == name.trim())
        .ok_or_else(|| FileError::UnknownAtom(atom.into()))?;
    let blit = if geq != negated {
        // x >= value (possibly from !(x <= value-1) canonicalization)
        let v = if geq { value } else { value + 1 };
        map.var_geq(block.var, v)
    } else {
        let v = if geq { value - 1 } else { value };
        map.var_leq(block.var, v)
    };
    match blit {
        BLit::Is(l) => Ok(l),
        BLit::True | BLit::False => Err(FileError::UnknownAtom(format!(
            "{atom} is constant over the variable's domain"
        ))),
    }
}

pub fn certificate_to_doc(map: &BitMap, invariant: &[Clause]) -> Result<CertificateDoc, FileError> {
    let mut clauses = Vec::with_capacity(invariant.len());
    for c in invariant {
        let atoms: Result<Vec<String>, FileError> =
            c.lits().iter().map(|&l| atom_of_lit(map, l)).collect();
        clauses.push(atoms?);
    }
    Ok(CertificateDoc { invariant: clauses })
}

pub fn certificate_from_doc(map: &BitMap, doc: &CertificateDoc) -> Result<Vec<Clause>, FileError> {
    let mut out = Vec::with_capacity(doc.invariant.len());
    for clause in &doc.invariant {
        let lits: Result<Vec<Lit>, FileError> =
            clause.iter().map(|a| lit_of_atom(map, a)).collect();
        out.push(Clause::new(lits?));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// One line per strengthening: selector, added guard, originating frame.
pub fn strengthening_report(
    extraction: &crate::extract::Extraction,
) -> String {
    let mut out = String::new();
    for st in &extraction.strengthenings {
        let redundant = match st.redundant {
            Some(true) => " redundant=yes",
            Some(false) => " redundant=no",
            None => "",
        };
        out.push_str(&format!(
            "supervise {} {} --{}--> : guard &= ({}) [frame {}]{}\n",
            st.automaton,
            st.from,
            st.event,
            print_guard(&st.added_guard),
            st.frame,
            redundant
        ));
    }
    for (ci, loc) in &extraction.unrepresented {
        out.push_str(&format!(
            "note: cube {ci} also constrains {loc}, which guards cannot express\n"
        ));
    }
    if extraction.strengthenings.is_empty() {
        out.push_str("no strengthenings: the plant is already safe\n");
    }
    out
}

/// Plain-text counterexample: alternating states and uncontrollable events.
pub fn trace_report(sys: &System, path: &[(ExplicitState, Option<EventId>)]) -> String {
    let mut out = String::new();
    for (state, event) in path {
        out.push_str(&format!(
            "state {}\n",
            crate::oracle::format_state(sys, state)
        ));
        if let Some(e) = event {
            out.push_str(&format!("  --{}-->\n", sys.events[*e].name));
        }
    }
    out.push_str("forbidden\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{gen_cmt, gen_fig1};
    use crate::encode::{encode, EncodeLimits};

    #[test]
    fn model_document_round_trips() {
        for sys in [gen_fig1(), gen_cmt(1, 1).unwrap()] {
            let text = system_to_string(&sys);
            let back = system_from_str(&text).unwrap();
            assert_eq!(back, sys);
            assert!(back.validate().is_empty());
        }
    }

    #[test]
    fn model_document_shape() {
        let text = system_to_string(&gen_fig1());
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.get("variables").is_some());
        assert!(v.get("events").is_some());
        assert!(v.get("automata").is_some());
        let t0 = &v["automata"][0]["transitions"][0];
        assert_eq!(t0["from"], "l0");
        assert_eq!(t0["updates"]["y"], "1");
    }

    #[test]
    fn bad_guard_reported_with_context() {
        let mut text = system_to_string(&gen_fig1());
        text = text.replace("y == 2 && x > 2", "y == &&");
        match system_from_str(&text) {
            Err(FileError::Syntax { context, .. }) => assert!(context.contains('#')),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn certificate_atoms_round_trip() {
        let sys = gen_fig1();
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let map = sym.bitmap();
        let alpha = sys.event_id("alpha").unwrap();
        let clause = Clause::new(vec![
            !map.loc_lit(0, 3),
            !map.event_lit(alpha),
            match map.var_geq(1, 3) {
                BLit::Is(l) => l,
                _ => panic!(),
            },
            match map.var_geq(0, 3) {
                BLit::Is(l) => !l,
                _ => panic!(),
            },
        ]);
        let doc = certificate_to_doc(map, &[clause.clone()]).unwrap();
        let back = certificate_from_doc(map, &doc).unwrap();
        assert_eq!(back, vec![clause]);
        // Atoms are model-level strings.
        let all: Vec<&String> = doc.invariant[0].iter().collect();
        assert!(all.iter().any(|a| a.as_str() == "!loc:M@l3"));
        assert!(all.iter().any(|a| a.as_str() == "!ev:alpha"));
        assert!(all.iter().any(|a| a.as_str() == "y>=3"));
        assert!(all.iter().any(|a| a.as_str() == "x<=2"));
    }

    #[test]
    fn unknown_atoms_rejected() {
        let sys = gen_fig1();
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let map = sym.bitmap();
        assert!(lit_of_atom(map, "loc:Nope@l1").is_err());
        assert!(lit_of_atom(map, "ev:nothing").is_err());
        assert!(lit_of_atom(map, "z>=1").is_err());
        assert!(lit_of_atom(map, "x&3").is_err());
    }
}
