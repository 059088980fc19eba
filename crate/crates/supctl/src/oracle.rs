//! Brute-force ground truth at desk scale: explicit reachability, the
//! classical fixpoint construction of the maximally permissive safe
//! controller, and comparison of synthesis results against it.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{self, Write};

use crate::model::{all_states, EventId, ExplicitState, Stepper, System};

#[derive(Debug, thiserror::Error)]
pub enum OracleLimit {
    #[error("product state space has {0} states, over the limit of {1}")]
    TooManyStates(u128, u128),
}

pub const DEFAULT_STATE_LIMIT: u128 = 1_000_000;

/// Per-state set of enabled events. States absent from the map are treated
/// as fully permissive.
#[derive(Debug, Clone, Default)]
pub struct ControllerMap {
    pub enabled: HashMap<ExplicitState, BTreeSet<EventId>>,
}

impl ControllerMap {
    pub fn allows(&self, state: &ExplicitState, event: EventId) -> bool {
        match self.enabled.get(state) {
            Some(set) => set.contains(&event),
            None => true,
        }
    }
}

/// Breadth-first reachable set from the initial state, optionally filtered by
/// a controller. Deterministic insertion order.
pub fn reachable(
    sys: &System,
    ctrl: Option<&ControllerMap>,
    limit: u128,
) -> Result<BTreeSet<ExplicitState>, OracleLimit> {
    let count = sys.state_count();
    if count > limit {
        return Err(OracleLimit::TooManyStates(count, limit));
    }
    let stepper = Stepper::new(sys);
    let init = sys.initial_state();
    let mut seen: HashSet<ExplicitState> = HashSet::new();
    let mut queue = std::collections::VecDeque::new();
    seen.insert(init.clone());
    queue.push_back(init);
    while let Some(state) = queue.pop_front() {
        for e in 0..sys.events.len() {
            if let Some(ctrl) = ctrl {
                if !ctrl.allows(&state, e) {
                    continue;
                }
            }
            if let Some(next) = stepper.step(&state, e) {
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(seen.into_iter().collect())
}

/// Result of the classical explicit synthesis.
#[derive(Debug)]
pub enum RwResult {
    Controlled {
        controller: ControllerMap,
        /// States from which uncontrollable steps alone can reach a
        /// forbidden state (the backward closure).
        doomed: BTreeSet<ExplicitState>,
    },
    Uncontrollable {
        /// Shortest path of uncontrollable events from the initial state to
        /// a forbidden state. Empty when the initial state is forbidden.
        path: Vec<(ExplicitState, Option<EventId>)>,
    },
}

/// Backward-close the forbidden states under uncontrollable transitions,
/// then disable exactly the controllable events leading into the closure.
pub fn rw_synthesize(sys: &System, limit: u128) -> Result<RwResult, OracleLimit> {
    let count = sys.state_count();
    if count > limit {
        return Err(OracleLimit::TooManyStates(count, limit));
    }
    let stepper = Stepper::new(sys);
    let states: Vec<ExplicitState> = all_states(sys).collect();
    let mut doomed: HashSet<ExplicitState> = states
        .iter()
        .filter(|s| stepper.is_forbidden(s))
        .cloned()
        .collect();
    let uncontrollable: Vec<EventId> = (0..sys.events.len())
        .filter(|&e| !sys.events[e].controllable)
        .collect();
    loop {
        let mut grew = false;
        for s in &states {
            if doomed.contains(s) {
                continue;
            }
            for &e in &uncontrollable {
                if let Some(next) = stepper.step(s, e) {
                    if doomed.contains(&next) {
                        doomed.insert(s.clone());
                        grew = true;
                        break;
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }

    let init = sys.initial_state();
    if doomed.contains(&init) {
        return Ok(RwResult::Uncontrollable {
            path: shortest_uncontrollable_path(sys, &stepper, &init),
        });
    }

    let mut ctrl = ControllerMap::default();
    for s in &states {
        let mut enabled: BTreeSet<EventId> = BTreeSet::new();
        for e in 0..sys.events.len() {
            if !sys.events[e].controllable {
                enabled.insert(e);
                continue;
            }
            match stepper.step(s, e) {
                Some(next) if doomed.contains(&next) => {}
                _ => {
                    enabled.insert(e);
                }
            }
        }
        ctrl.enabled.insert(s.clone(), enabled);
    }
    Ok(RwResult::Controlled {
        controller: ctrl,
        doomed: doomed.into_iter().collect(),
    })
}

/// BFS over uncontrollable edges only, from `init` to any forbidden state.
fn shortest_uncontrollable_path(
    sys: &System,
    stepper: &Stepper,
    init: &ExplicitState,
) -> Vec<(ExplicitState, Option<EventId>)> {
    if stepper.is_forbidden(init) {
        return vec![(init.clone(), None)];
    }
    let mut parent: HashMap<ExplicitState, (ExplicitState, EventId)> = HashMap::new();
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(init.clone());
    let mut target = None;
    'bfs: while let Some(state) = queue.pop_front() {
        for e in 0..sys.events.len() {
            if sys.events[e].controllable {
                continue;
            }
            if let Some(next) = stepper.step(&state, e) {
                if parent.contains_key(&next) || next == *init {
                    continue;
                }
                parent.insert(next.clone(), (state.clone(), e));
                if stepper.is_forbidden(&next) {
                    target = Some(next);
                    break 'bfs;
                }
                queue.push_back(next);
            }
        }
    }
    let target = target.expect("doomed initial state must reach a forbidden state");
    let mut rev = vec![(target.clone(), None)];
    let mut cur = target;
    while let Some((prev, e)) = parent.get(&cur) {
        rev.push((prev.clone(), Some(*e)));
        cur = prev.clone();
    }
    rev.reverse();
    // Each entry carries the event taken *from* that state.
    rev
}

/// Findings from comparing a synthesis run against the explicit oracle.
#[derive(Debug, Default)]
pub struct ComparisonReport {
    pub verdicts_agree: bool,
    pub reachable_equal: Option<bool>,
    pub synth_reachable: Option<usize>,
    pub oracle_reachable: Option<usize>,
    pub forbidden_free: Option<bool>,
    pub counterexample_replays: Option<bool>,
    pub findings: Vec<String>,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Executable form of the safety and minimal-restrictiveness claims: equal
/// verdicts; on Controlled, equal controlled reachable sets containing no
/// forbidden state; on Uncontrollable, a replayable counterexample.
pub fn compare(
    sys: &System,
    synth_controller: Option<&ControllerMap>,
    synth_cex: Option<&[(ExplicitState, Option<EventId>)]>,
    oracle_result: &RwResult,
    limit: u128,
) -> Result<ComparisonReport, OracleLimit> {
    let mut report = ComparisonReport::default();
    let stepper = Stepper::new(sys);
    match (synth_controller, oracle_result) {
        (Some(ctrl), RwResult::Controlled { controller, .. }) => {
            report.verdicts_agree = true;
            let ours = reachable(sys, Some(ctrl), limit)?;
            let theirs = reachable(sys, Some(controller), limit)?;
            report.synth_reachable = Some(ours.len());
            report.oracle_reachable = Some(theirs.len());
            let equal = ours == theirs;
            report.reachable_equal = Some(equal);
            if !equal {
                report
                    .findings
                    .push("controlled reachable sets differ".into());
            }
            let clean = ours.iter().all(|s| !stepper.is_forbidden(s))
                && theirs.iter().all(|s| !stepper.is_forbidden(s));
            report.forbidden_free = Some(clean);
            if !clean {
                report
                    .findings
                    .push("a forbidden state is reachable under control".into());
            }
        }
        (None, RwResult::Uncontrollable { .. }) => {
            report.verdicts_agree = true;
            if let Some(path) = synth_cex {
                let ok = replay(sys, &stepper, path);
                report.counterexample_replays = Some(ok);
                if !ok {
                    report
                        .findings
                        .push("counterexample does not replay".into());
                }
            }
        }
        (Some(_), RwResult::Uncontrollable { .. }) => {
            report.verdicts_agree = false;
            report
                .findings
                .push("synthesis reports controlled, oracle uncontrollable".into());
        }
        (None, RwResult::Controlled { .. }) => {
            report.verdicts_agree = false;
            report
                .findings
                .push("synthesis reports uncontrollable, oracle controlled".into());
        }
    }
    Ok(report)
}

/// Check a counterexample: consecutive uncontrollable steps from the initial
/// state ending in a forbidden state.
pub fn replay(
    sys: &System,
    stepper: &Stepper,
    path: &[(ExplicitState, Option<EventId>)],
) -> bool {
    if path.is_empty() {
        return false;
    }
    if path[0].0 != sys.initial_state() {
        return false;
    }
    for i in 0..path.len() {
        let (state, event) = &path[i];
        match event {
            None => {
                if i != path.len() - 1 {
                    return false;
                }
            }
            Some(e) => {
                if sys.events[*e].controllable {
                    return false;
                }
                match stepper.step(state, *e) {
                    Some(next) if i + 1 < path.len() && next == path[i + 1].0 => {}
                    _ => return false,
                }
            }
        }
    }
    stepper.is_forbidden(&path[path.len() - 1].0)
}

/// Dump the reachable graph, one `state TAB event TAB state` line per edge.
pub fn dump_reachable_graph(
    sys: &System,
    ctrl: Option<&ControllerMap>,
    limit: u128,
    w: &mut impl Write,
) -> Result<(), io::Error> {
    let states = match reachable(sys, ctrl, limit) {
        Ok(s) => s,
        Err(e) => return Err(io::Error::new(io::ErrorKind::Other, e.to_string())),
    };
    let stepper = Stepper::new(sys);
    for s in &states {
        for e in 0..sys.events.len() {
            if let Some(ctrl) = ctrl {
                if !ctrl.allows(s, e) {
                    continue;
                }
            }
            if let Some(next) = stepper.step(s, e) {
                writeln!(
                    w,
                    "{}\t{}\t{}",
                    format_state(sys, s),
                    sys.events[e].name,
                    format_state(sys, &next)
                )?;
            }
        }
    }
    Ok(())
}

pub fn format_state(sys: &System, s: &ExplicitState) -> String {
    let mut parts = Vec::new();
    for (ai, a) in sys.automata.iter().enumerate() {
        parts.push(format!("{}@{}", a.name, a.locations[s.locs[ai] as usize]));
    }
    for (vi, v) in sys.variables.iter().enumerate() {
        parts.push(format!("{}={}", v.name, s.vals[vi]));
    }
    parts.join(",")
}
