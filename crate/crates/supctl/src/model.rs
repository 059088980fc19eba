//! User-facing modeling layer: variables, events, guarded transitions and
//! synchronized networks of automata.
//!
//! A [`System`] is a set of automata that synchronize on shared events, plus
//! bounded integer variables shared across the network. Guards compare
//! variables against constants; updates assign a constant, keep the value, or
//! add/subtract a constant. An event is enabled in a state when every
//! automaton declaring it has a transition from its current location whose
//! guard holds and whose updates stay inside the declared variable domains.
//! Systems are immutable once validated and safe to share across threads.

use std::collections::HashSet;
use std::fmt;

/// Bounded integer variable with an initial value.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub min: i64,
    pub max: i64,
    pub init: i64,
}

/// Named event, either controllable or uncontrollable.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EventDecl {
    pub name: String,
    pub controllable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Boolean combination of variable/constant comparisons. Location atoms
/// (`Automaton@location`) are only legal in a system's global forbidden
/// predicate, never in transition guards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuardExpr {
    True,
    False,
    Cmp {
        var: String,
        op: CmpOp,
        value: i64,
    },
    AtLocation {
        automaton: String,
        location: String,
    },
    Not(Box<GuardExpr>),
    And(Vec<GuardExpr>),
    Or(Vec<GuardExpr>),
}

impl GuardExpr {
    pub fn and(parts: Vec<GuardExpr>) -> GuardExpr {
        match parts.len() {
            0 => GuardExpr::True,
            1 => parts.into_iter().next().unwrap(),
            _ => GuardExpr::And(parts),
        }
    }

    pub fn or(parts: Vec<GuardExpr>) -> GuardExpr {
        match parts.len() {
            0 => GuardExpr::False,
            1 => parts.into_iter().next().unwrap(),
            _ => GuardExpr::Or(parts),
        }
    }

    pub fn cmp(var: &str, op: CmpOp, value: i64) -> GuardExpr {
        GuardExpr::Cmp {
            var: var.to_string(),
            op,
            value,
        }
    }

    fn visit_atoms(&self, f: &mut impl FnMut(&GuardExpr)) {
        match self {
            GuardExpr::Not(inner) => inner.visit_atoms(f),
            GuardExpr::And(parts) | GuardExpr::Or(parts) => {
                for p in parts {
                    p.visit_atoms(f);
                }
            }
            other => f(other),
        }
    }

    /// Names of all variables referenced by comparison atoms.
    pub fn referenced_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |atom| {
            if let GuardExpr::Cmp { var, .. } = atom {
                if !out.contains(var) {
                    out.push(var.clone());
                }
            }
        });
        out
    }

    pub fn has_location_atoms(&self) -> bool {
        let mut found = false;
        self.visit_atoms(&mut |atom| {
            if matches!(atom, GuardExpr::AtLocation { .. }) {
                found = true;
            }
        });
        found
    }
}

/// Per-variable next-state assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Update {
    /// `x' := c`
    Const(i64),
    /// `x' := x`
    Keep,
    /// `x' := x + c`
    Add(i64),
    /// `x' := x - c`
    Sub(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: String,
    pub event: String,
    pub to: String,
    pub guard: GuardExpr,
    pub updates: Vec<(String, Update)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    pub name: String,
    pub locations: Vec<String>,
    pub initial: String,
    pub forbidden: Vec<String>,
    pub transitions: Vec<Transition>,
}

/// A synchronized network of automata over shared variables and events.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct System {
    pub variables: Vec<VarDecl>,
    pub events: Vec<EventDecl>,
    pub automata: Vec<Automaton>,
    /// Extra forbidden predicate over variables and location atoms. The
    /// safety property is "no automaton in a forbidden location, and this
    /// predicate false".
    pub extra_forbidden: Option<GuardExpr>,
}

pub type EventId = usize;
pub type VarId = usize;
pub type AutomatonId = usize;

/// One concrete state: a location index per automaton, a value per variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExplicitState {
    pub locs: Vec<u32>,
    pub vals: Vec<i64>,
}

impl fmt::Debug for ExplicitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?},{:?})", self.locs, self.vals)
    }
}

/// Kind of validation failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    EmptySystem,
    DuplicateName,
    BadBounds,
    UnknownReference,
    ConstantOutOfRange,
    DuplicateAssignment,
    BadInitialLocation,
    BadForbiddenLocation,
    NoEvents,
    LocationAtomInGuard,
    Nondeterminism,
    DeterminismCheckTooLarge,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub automaton: Option<String>,
    pub transition: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.automaton, self.transition) {
            (Some(a), Some(t)) => write!(f, "[{a}#{t}] {}", self.message),
            (Some(a), None) => write!(f, "[{a}] {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

fn diag(kind: DiagnosticKind, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        kind,
        automaton: None,
        transition: None,
        message: message.into(),
    }
}

fn diag_at(
    kind: DiagnosticKind,
    automaton: &str,
    transition: Option<usize>,
    message: impl Into<String>,
) -> Diagnostic {
    Diagnostic {
        kind,
        automaton: Some(automaton.to_string()),
        transition,
        message: message.into(),
    }
}

impl System {
    pub fn event_id(&self, name: &str) -> Option<EventId> {
        self.events.iter().position(|e| e.name == name)
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn automaton_id(&self, name: &str) -> Option<AutomatonId> {
        self.automata.iter().position(|a| a.name == name)
    }

    /// The unique initial state: each automaton's initial location, each
    /// variable's initial value. Only meaningful on a validated system.
    pub fn initial_state(&self) -> ExplicitState {
        ExplicitState {
            locs: self
                .automata
                .iter()
                .map(|a| a.locations.iter().position(|l| *l == a.initial).unwrap() as u32)
                .collect(),
            vals: self.variables.iter().map(|v| v.init).collect(),
        }
    }

    /// Successor of `state` under `event`, if the event is enabled.
    /// Convenience wrapper; use a [`Stepper`] for tight loops.
    pub fn enabled(&self, state: &ExplicitState, event: EventId) -> Option<ExplicitState> {
        Stepper::new(self).step(state, event)
    }

    /// Total number of (location, value) states, saturating.
    pub fn state_count(&self) -> u128 {
        let mut n: u128 = 1;
        for a in &self.automata {
            n = n.saturating_mul(a.locations.len() as u128);
        }
        for v in &self.variables {
            n = n.saturating_mul((v.max - v.min + 1) as u128);
        }
        n
    }

    /// Check every structural invariant plus per-(state, event) determinism.
    /// Returns an empty list exactly when the system is well-formed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();

        if self.automata.is_empty() {
            out.push(diag(DiagnosticKind::EmptySystem, "system has no automata"));
        }

        let mut names = HashSet::new();
        for v in &self.variables {
            if !names.insert(v.name.clone()) {
                out.push(diag(
                    DiagnosticKind::DuplicateName,
                    format!("duplicate variable name '{}'", v.name),
                ));
            }
            if v.min > v.max {
                out.push(diag(
                    DiagnosticKind::BadBounds,
                    format!("variable '{}' has min {} > max {}", v.name, v.min, v.max),
                ));
            }
            if v.init < v.min || v.init > v.max {
                out.push(diag(
                    DiagnosticKind::BadBounds,
                    format!(
                        "variable '{}' initial value {} outside [{}, {}]",
                        v.name, v.init, v.min, v.max
                    ),
                ));
            }
        }
        let mut event_names = HashSet::new();
        for e in &self.events {
            if !event_names.insert(e.name.clone()) {
                out.push(diag(
                    DiagnosticKind::DuplicateName,
                    format!("duplicate event name '{}'", e.name),
                ));
            }
        }
        let mut automaton_names = HashSet::new();
        let has_transitions = self.automata.iter().any(|a| !a.transitions.is_empty());
        if has_transitions && self.events.is_empty() {
            out.push(diag(
                DiagnosticKind::NoEvents,
                "system has transitions but declares no events",
            ));
        }

        for a in &self.automata {
            if !automaton_names.insert(a.name.clone()) {
                out.push(diag(
                    DiagnosticKind::DuplicateName,
                    format!("duplicate automaton name '{}'", a.name),
                ));
            }
            let mut locs = HashSet::new();
            for l in &a.locations {
                if !locs.insert(l.clone()) {
                    out.push(diag_at(
                        DiagnosticKind::DuplicateName,
                        &a.name,
                        None,
                        format!("duplicate location '{l}'"),
                    ));
                }
            }
            if !a.locations.contains(&a.initial) {
                out.push(diag_at(
                    DiagnosticKind::BadInitialLocation,
                    &a.name,
                    None,
                    format!("initial location '{}' is not declared", a.initial),
                ));
            }
            for f in &a.forbidden {
                if !a.locations.contains(f) {
                    out.push(diag_at(
                        DiagnosticKind::BadForbiddenLocation,
                        &a.name,
                        None,
                        format!("forbidden location '{f}' is not declared"),
                    ));
                }
            }
            for (ti, t) in a.transitions.iter().enumerate() {
                if !a.locations.contains(&t.from) {
                    out.push(diag_at(
                        DiagnosticKind::UnknownReference,
                        &a.name,
                        Some(ti),
                        format!("source location '{}' is not declared", t.from),
                    ));
                }
                if !a.locations.contains(&t.to) {
                    out.push(diag_at(
                        DiagnosticKind::UnknownReference,
                        &a.name,
                        Some(ti),
                        format!("target location '{}' is not declared", t.to),
                    ));
                }
                if self.event_id(&t.event).is_none() {
                    out.push(diag_at(
                        DiagnosticKind::UnknownReference,
                        &a.name,
                        Some(ti),
                        format!("event '{}' is not declared", t.event),
                    ));
                }
                if t.guard.has_location_atoms() {
                    out.push(diag_at(
                        DiagnosticKind::LocationAtomInGuard,
                        &a.name,
                        Some(ti),
                        "transition guards may not reference locations",
                    ));
                }
                for var in t.guard.referenced_vars() {
                    if self.var_id(&var).is_none() {
                        out.push(diag_at(
                            DiagnosticKind::UnknownReference,
                            &a.name,
                            Some(ti),
                            format!("guard references undeclared variable '{var}'"),
                        ));
                    }
                }
                let mut assigned = HashSet::new();
                for (var, upd) in &t.updates {
                    match self.var_id(var) {
                        None => out.push(diag_at(
                            DiagnosticKind::UnknownReference,
                            &a.name,
                            Some(ti),
                            format!("update assigns undeclared variable '{var}'"),
                        )),
                        Some(vi) => {
                            if let Update::Const(c) = upd {
                                let decl = &self.variables[vi];
                                if *c < decl.min || *c > decl.max {
                                    out.push(diag_at(
                                        DiagnosticKind::ConstantOutOfRange,
                                        &a.name,
                                        Some(ti),
                                        format!(
                                            "update assigns {c} outside the domain of '{var}'"
                                        ),
                                    ));
                                }
                            }
                        }
                    }
                    if !assigned.insert(var.clone()) {
                        out.push(diag_at(
                            DiagnosticKind::DuplicateAssignment,
                            &a.name,
                            Some(ti),
                            format!("variable '{var}' assigned twice in one transition"),
                        ));
                    }
                }
            }
        }

        if let Some(extra) = &self.extra_forbidden {
            for var in extra.referenced_vars() {
                if self.var_id(&var).is_none() {
                    out.push(diag(
                        DiagnosticKind::UnknownReference,
                        format!("forbidden predicate references undeclared variable '{var}'"),
                    ));
                }
            }
            extra.visit_atoms(&mut |atom| {
                if let GuardExpr::AtLocation {
                    automaton,
                    location,
                } = atom
                {
                    match self.automaton_id(automaton) {
                        None => out.push(diag(
                            DiagnosticKind::UnknownReference,
                            format!("forbidden predicate references unknown automaton '{automaton}'"),
                        )),
                        Some(ai) => {
                            if !self.automata[ai].locations.contains(location) {
                                out.push(diag(
                                    DiagnosticKind::UnknownReference,
                                    format!(
                                        "forbidden predicate references unknown location '{automaton}@{location}'"
                                    ),
                                ));
                            }
                        }
                    }
                }
            });
        }

        if out.is_empty() {
            self.check_determinism(&mut out);
        }
        out
    }

    /// Two same-source, same-event transitions must never be simultaneously
    /// enabled. Enabledness includes the implicit domain guard, so the check
    /// enumerates valuations of the variables either transition mentions.
    fn check_determinism(&self, out: &mut Vec<Diagnostic>) {
        const CAP: u128 = 100_000;
        for a in &self.automata {
            for i in 0..a.transitions.len() {
                for j in i + 1..a.transitions.len() {
                    let (t1, t2) = (&a.transitions[i], &a.transitions[j]);
                    if t1.from != t2.from || t1.event != t2.event {
                        continue;
                    }
                    let mut vars: Vec<VarId> = Vec::new();
                    for t in [t1, t2] {
                        for name in t.guard.referenced_vars() {
                            let vi = self.var_id(&name).unwrap();
                            if !vars.contains(&vi) {
                                vars.push(vi);
                            }
                        }
                        for (name, _) in &t.updates {
                            let vi = self.var_id(name).unwrap();
                            if !vars.contains(&vi) {
                                vars.push(vi);
                            }
                        }
                    }
                    let mut count: u128 = 1;
                    for &vi in &vars {
                        let v = &self.variables[vi];
                        count = count.saturating_mul((v.max - v.min + 1) as u128);
                    }
                    if count > CAP {
                        out.push(diag_at(
                            DiagnosticKind::DeterminismCheckTooLarge,
                            &a.name,
                            Some(j),
                            format!(
                                "cannot check determinism of transitions {i} and {j}: \
                                 {count} valuations exceed the limit"
                            ),
                        ));
                        continue;
                    }
                    if self.overlapping(t1, t2, &vars) {
                        out.push(diag_at(
                            DiagnosticKind::Nondeterminism,
                            &a.name,
                            Some(j),
                            format!(
                                "transitions {i} and {j} from '{}' on '{}' are both enabled \
                                 for some valuation",
                                t1.from, t1.event
                            ),
                        ));
                    }
                }
            }
        }
    }

    fn overlapping(&self, t1: &Transition, t2: &Transition, vars: &[VarId]) -> bool {
        let mut vals: Vec<i64> = vars.iter().map(|&vi| self.variables[vi].min).collect();
        loop {
            let lookup = |name: &str| -> i64 {
                match vars
                    .iter()
                    .position(|&vi| self.variables[vi].name == name)
                {
                    Some(k) => vals[k],
                    None => self.variables[self.var_id(name).unwrap()].init,
                }
            };
            let enabled = |t: &Transition| {
                eval_guard_vars(&t.guard, &lookup)
                    && t.updates.iter().all(|(name, upd)| {
                        let decl = &self.variables[self.var_id(name).unwrap()];
                        let next = apply_update(*upd, lookup(name));
                        next >= decl.min && next <= decl.max
                    })
            };
            if enabled(t1) && enabled(t2) {
                return true;
            }
            // Advance the odometer.
            let mut k = 0;
            loop {
                if k == vars.len() {
                    return false;
                }
                let decl = &self.variables[vars[k]];
                if vals[k] < decl.max {
                    vals[k] += 1;
                    break;
                }
                vals[k] = decl.min;
                k += 1;
            }
        }
    }
}

pub fn apply_update(upd: Update, current: i64) -> i64 {
    match upd {
        Update::Const(c) => c,
        Update::Keep => current,
        Update::Add(c) => current + c,
        Update::Sub(c) => current - c,
    }
}

/// Evaluate a guard that contains no location atoms.
fn eval_guard_vars(g: &GuardExpr, lookup: &impl Fn(&str) -> i64) -> bool {
    match g {
        GuardExpr::True => true,
        GuardExpr::False => false,
        GuardExpr::Cmp { var, op, value } => op.eval(lookup(var), *value),
        GuardExpr::AtLocation { .. } => panic!("location atom in transition guard"),
        GuardExpr::Not(inner) => !eval_guard_vars(inner, lookup),
        GuardExpr::And(parts) => parts.iter().all(|p| eval_guard_vars(p, lookup)),
        GuardExpr::Or(parts) => parts.iter().any(|p| eval_guard_vars(p, lookup)),
    }
}

// ---------------------------------------------------------------------------
// Compiled stepper
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum CompiledGuard {
    True,
    False,
    Cmp(VarId, CmpOp, i64),
    AtLocation(AutomatonId, u32),
    Not(Box<CompiledGuard>),
    And(Vec<CompiledGuard>),
    Or(Vec<CompiledGuard>),
}

impl CompiledGuard {
    fn eval(&self, state: &ExplicitState) -> bool {
        match self {
            CompiledGuard::True => true,
            CompiledGuard::False => false,
            CompiledGuard::Cmp(v, op, c) => op.eval(state.vals[*v], *c),
            CompiledGuard::AtLocation(a, l) => state.locs[*a] == *l,
            CompiledGuard::Not(inner) => !inner.eval(state),
            CompiledGuard::And(parts) => parts.iter().all(|p| p.eval(state)),
            CompiledGuard::Or(parts) => parts.iter().any(|p| p.eval(state)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompiledTransition {
    pub automaton: AutomatonId,
    pub index: usize,
    pub from: u32,
    pub to: u32,
    pub event: EventId,
    guard: CompiledGuard,
    pub updates: Vec<(VarId, Update)>,
}

/// Precompiled single-step semantics for one validated system.
pub struct Stepper<'a> {
    sys: &'a System,
    /// Per automaton, all compiled transitions.
    transitions: Vec<Vec<CompiledTransition>>,
    /// Automata declaring each event (appear in some transition with it).
    declaring: Vec<Vec<AutomatonId>>,
    extra_forbidden: Option<CompiledGuard>,
    forbidden_locs: Vec<(AutomatonId, u32)>,
}

impl<'a> Stepper<'a> {
    /// Compile lookup tables. Panics on an unvalidated system.
    pub fn new(sys: &'a System) -> Stepper<'a> {
        let compile_guard = |g: &GuardExpr| -> CompiledGuard { compile(sys, g) };
        let mut transitions = Vec::with_capacity(sys.automata.len());
        let mut declaring = vec![Vec::new(); sys.events.len()];
        for (ai, a) in sys.automata.iter().enumerate() {
            let mut list = Vec::with_capacity(a.transitions.len());
            for (ti, t) in a.transitions.iter().enumerate() {
                let event = sys.event_id(&t.event).expect("undeclared event");
                if !declaring[event].contains(&ai) {
                    declaring[event].push(ai);
                }
                list.push(CompiledTransition {
                    automaton: ai,
                    index: ti,
                    from: a.locations.iter().position(|l| *l == t.from).unwrap() as u32,
                    to: a.locations.iter().position(|l| *l == t.to).unwrap() as u32,
                    event,
                    guard: compile_guard(&t.guard),
                    updates: t
                        .updates
                        .iter()
                        .map(|(n, u)| (sys.var_id(n).unwrap(), *u))
                        .collect(),
                });
            }
            transitions.push(list);
        }
        let forbidden_locs = sys
            .automata
            .iter()
            .enumerate()
            .flat_map(|(ai, a)| {
                a.forbidden.iter().map(move |f| {
                    (
                        ai,
                        a.locations.iter().position(|l| l == f).unwrap() as u32,
                    )
                })
            })
            .collect();
        Stepper {
            sys,
            transitions,
            declaring,
            extra_forbidden: sys.extra_forbidden.as_ref().map(compile_guard),
            forbidden_locs,
        }
    }

    pub fn system(&self) -> &System {
        self.sys
    }

    pub fn declaring(&self, event: EventId) -> &[AutomatonId] {
        &self.declaring[event]
    }

    pub fn transitions_of(&self, automaton: AutomatonId) -> &[CompiledTransition] {
        &self.transitions[automaton]
    }

    /// A transition's effective enabledness: guard holds and every update
    /// lands inside its variable's domain.
    pub fn transition_enabled(&self, t: &CompiledTransition, state: &ExplicitState) -> bool {
        state.locs[t.automaton] == t.from
            && t.guard.eval(state)
            && t.updates.iter().all(|(vi, upd)| {
                let decl = &self.sys.variables[*vi];
                let next = apply_update(*upd, state.vals[*vi]);
                next >= decl.min && next <= decl.max
            })
    }

    /// The enabled transition of one automaton for (state, event), if any.
    pub fn enabled_transition(
        &self,
        automaton: AutomatonId,
        state: &ExplicitState,
        event: EventId,
    ) -> Option<&CompiledTransition> {
        self.transitions[automaton]
            .iter()
            .find(|t| t.event == event && self.transition_enabled(t, state))
    }

    /// Synchronous successor under `event`, or `None` when disabled.
    pub fn step(&self, state: &ExplicitState, event: EventId) -> Option<ExplicitState> {
        if self.declaring[event].is_empty() {
            return None;
        }
        let mut next = state.clone();
        let mut assigned: Vec<Option<i64>> = vec![None; self.sys.variables.len()];
        for &ai in &self.declaring[event] {
            let t = self.enabled_transition(ai, state, event)?;
            next.locs[ai] = t.to;
            for (vi, upd) in &t.updates {
                let value = apply_update(*upd, state.vals[*vi]);
                match assigned[*vi] {
                    Some(prev) if prev != value => return None, // conflicting writes
                    _ => assigned[*vi] = Some(value),
                }
            }
        }
        for (vi, val) in assigned.iter().enumerate() {
            if let Some(v) = val {
                next.vals[vi] = *v;
            }
        }
        Some(next)
    }

    /// All (event, successor) pairs enabled in `state`.
    pub fn successors(&self, state: &ExplicitState) -> Vec<(EventId, ExplicitState)> {
        (0..self.sys.events.len())
            .filter_map(|e| self.step(state, e).map(|s| (e, s)))
            .collect()
    }

    pub fn is_forbidden(&self, state: &ExplicitState) -> bool {
        self.forbidden_locs
            .iter()
            .any(|&(ai, li)| state.locs[ai] == li)
            || self
                .extra_forbidden
                .as_ref()
                .map_or(false, |g| g.eval(state))
    }
}

fn compile(sys: &System, g: &GuardExpr) -> CompiledGuard {
    match g {
        GuardExpr::True => CompiledGuard::True,
        GuardExpr::False => CompiledGuard::False,
        GuardExpr::Cmp { var, op, value } => {
            CompiledGuard::Cmp(sys.var_id(var).expect("undeclared variable"), *op, *value)
        }
        GuardExpr::AtLocation {
            automaton,
            location,
        } => {
            let ai = sys.automaton_id(automaton).expect("unknown automaton");
            let li = sys.automata[ai]
                .locations
                .iter()
                .position(|l| l == location)
                .expect("unknown location") as u32;
            CompiledGuard::AtLocation(ai, li)
        }
        GuardExpr::Not(inner) => CompiledGuard::Not(Box::new(compile(sys, inner))),
        GuardExpr::And(parts) => CompiledGuard::And(parts.iter().map(|p| compile(sys, p)).collect()),
        GuardExpr::Or(parts) => CompiledGuard::Or(parts.iter().map(|p| compile(sys, p)).collect()),
    }
}

/// Iterator over every (location, value) state of the product space.
pub fn all_states(sys: &System) -> impl Iterator<Item = ExplicitState> + '_ {
    let mut current = Some(ExplicitState {
        locs: vec![0; sys.automata.len()],
        vals: sys.variables.iter().map(|v| v.min).collect(),
    });
    std::iter::from_fn(move || {
        let state = current.clone()?;
        // Advance.
        let mut next = state.clone();
        let mut done = true;
        for (i, v) in sys.variables.iter().enumerate() {
            if next.vals[i] < v.max {
                next.vals[i] += 1;
                done = false;
                break;
            }
            next.vals[i] = v.min;
        }
        if done {
            for (i, a) in sys.automata.iter().enumerate() {
                if (next.locs[i] as usize) < a.locations.len() - 1 {
                    next.locs[i] += 1;
                    done = false;
                    break;
                }
                next.locs[i] = 0;
            }
        }
        current = if done { None } else { Some(next) };
        Some(state)
    })
}
