//! Incremental satisfiability oracle.
//!
//! [`SolverHandle`] owns a monotone clause database: clauses can be added but
//! never retracted, and variable indices stay stable. Queries are made under
//! assumption literals; an unsatisfiable answer carries a core, a subset of
//! the assumptions that is already inconsistent with the database. Anything
//! that speaks this protocol can sit behind the [`SatEngine`] trait; the
//! built-in engine is a small conflict-driven solver so the whole crate runs
//! without external dependencies.

use std::io::{self, Write};

use crate::logic::{Clause, Lit, Var};

/// Outcome of one engine-level solve call.
pub enum SolveOutcome {
    /// Total assignment over all allocated variables.
    Satisfiable(Vec<bool>),
    /// Subset of the passed assumptions whose conjunction with the database
    /// is unsatisfiable. Empty when the database alone is unsatisfiable.
    Unsatisfiable(Vec<Lit>),
    /// The conflict budget ran out before a verdict.
    BudgetExhausted,
}

/// Minimal contract a backend must provide: permanent clauses, solving under
/// assumptions, and core extraction.
pub trait SatEngine {
    fn new_var(&mut self) -> Var;
    fn num_vars(&self) -> u32;
    fn add_clause(&mut self, lits: &[Lit]);
    fn solve(&mut self, assumptions: &[Lit], conflict_limit: Option<u64>) -> SolveOutcome;
    fn conflicts(&self) -> u64;
}

/// Result of a [`SolverHandle::solve`] query.
#[derive(Debug)]
pub enum QueryResult {
    Satisfiable { model: Vec<bool> },
    Unsatisfiable { core: Vec<Lit> },
}

impl QueryResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, QueryResult::Satisfiable { .. })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("literal references variable {0} outside the allocated range")]
    LitOutOfRange(Var),
    #[error("conflict budget exhausted")]
    BudgetExhausted,
}

/// Cumulative counters for one handle.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolverStats {
    pub calls: u64,
    pub conflicts: u64,
}

/// One clause database plus statistics, owned by a single worker at a time.
pub struct SolverHandle {
    engine: Box<dyn SatEngine>,
    db: Vec<Clause>,
    stats: SolverStats,
    conflict_budget: Option<u64>,
}

impl SolverHandle {
    pub fn new() -> SolverHandle {
        SolverHandle::with_engine(Box::new(CdclSolver::new()))
    }

    pub fn with_engine(engine: Box<dyn SatEngine>) -> SolverHandle {
        SolverHandle {
            engine,
            db: Vec::new(),
            stats: SolverStats::default(),
            conflict_budget: None,
        }
    }

    /// Total conflicts this handle may still spend across all queries.
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }

    pub fn new_var(&mut self) -> Var {
        self.engine.new_var()
    }

    pub fn num_vars(&self) -> u32 {
        self.engine.num_vars()
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// Pristine copies of every clause ever added, in insertion order.
    pub fn clause_db(&self) -> &[Clause] {
        &self.db
    }

    fn check_range(&self, lits: &[Lit]) -> Result<(), OracleError> {
        for l in lits {
            if l.var() >= self.engine.num_vars() {
                return Err(OracleError::LitOutOfRange(l.var()));
            }
        }
        Ok(())
    }

    pub fn add_clause(&mut self, clause: &Clause) -> Result<(), OracleError> {
        self.check_range(clause.lits())?;
        self.db.push(clause.clone());
        self.engine.add_clause(clause.lits());
        Ok(())
    }

    pub fn add_clause_lits(&mut self, lits: &[Lit]) -> Result<(), OracleError> {
        self.add_clause(&Clause::new(lits.to_vec()))
    }

    pub fn solve(&mut self, assumptions: &[Lit]) -> Result<QueryResult, OracleError> {
        self.check_range(assumptions)?;
        self.stats.calls += 1;
        let before = self.engine.conflicts();
        let outcome = self.engine.solve(assumptions, self.conflict_budget);
        let spent = self.engine.conflicts() - before;
        self.stats.conflicts += spent;
        if let Some(budget) = self.conflict_budget.as_mut() {
            *budget = budget.saturating_sub(spent);
        }
        match outcome {
            SolveOutcome::Satisfiable(model) => Ok(QueryResult::Satisfiable { model }),
            SolveOutcome::Unsatisfiable(core) => Ok(QueryResult::Unsatisfiable { core }),
            SolveOutcome::BudgetExhausted => Err(OracleError::BudgetExhausted),
        }
    }

    /// Dump the database in DIMACS CNF (1-based, negative = negated).
    pub fn write_dimacs(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "p cnf {} {}", self.engine.num_vars(), self.db.len())?;
        for clause in &self.db {
            for l in clause.lits() {
                let v = l.var() as i64 + 1;
                write!(w, "{} ", if l.is_negated() { -v } else { v })?;
            }
            writeln!(w, "0")?;
        }
        Ok(())
    }
}

impl Default for SolverHandle {
    fn default() -> Self {
        SolverHandle::new()
    }
}

// ---------------------------------------------------------------------------
// Built-in CDCL engine
// ---------------------------------------------------------------------------

const CREF_NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

/// Conflict-driven clause learning with two watched literals, VSIDS decisions,
/// phase saving and Luby restarts. Fully deterministic.
pub struct CdclSolver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<i8>, // 0 undef, 1 true, -1 false
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    polarity: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    conflicts: u64,
}

impl CdclSolver {
    pub fn new() -> CdclSolver {
        CdclSolver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            heap: VarHeap::new(),
            polarity: Vec::new(),
            seen: Vec::new(),
            ok: true,
            conflicts: 0,
        }
    }

    fn value(&self, l: Lit) -> i8 {
        let v = self.assigns[l.var() as usize];
        if l.is_negated() {
            -v
        } else {
            v
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        debug_assert_eq!(self.value(l), 0);
        let v = l.var() as usize;
        self.assigns[v] = if l.is_negated() { -1 } else { 1 };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn cancel_until(&mut self, target: u32) {
        if self.decision_level() <= target {
            return;
        }
        let bound = self.trail_lim[target as usize];
        while self.trail.len() > bound {
            let l = self.trail.pop().unwrap();
            let v = l.var() as usize;
            self.polarity[v] = !l.is_negated();
            self.assigns[v] = 0;
            self.reason[v] = CREF_NONE;
            self.heap.insert(v as Var, &self.activity);
        }
        self.trail_lim.truncate(target as usize);
        self.qhead = self.trail.len();
    }

    fn propagate(&mut self) -> u32 {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[p.code()]);
            let mut i = 0;
            'watchers: while i < ws.len() {
                let w = ws[i];
                if self.value(w.blocker) == 1 {
                    i += 1;
                    continue;
                }
                let cref = w.cref;
                // Make sure the false literal sits at position 1.
                {
                    let clause = &mut self.clauses[cref as usize];
                    if clause[0] == false_lit {
                        clause.swap(0, 1);
                    }
                }
                let first = self.clauses[cref as usize][0];
                if first != w.blocker && self.value(first) == 1 {
                    ws[i] = Watcher {
                        cref,
                        blocker: first,
                    };
                    i += 1;
                    continue;
                }
                // Look for a new literal to watch.
                let len = self.clauses[cref as usize].len();
                for k in 2..len {
                    let lk = self.clauses[cref as usize][k];
                    if self.value(lk) != -1 {
                        self.clauses[cref as usize].swap(1, k);
                        self.watches[(!lk).code()].push(Watcher {
                            cref,
                            blocker: first,
                        });
                        ws.swap_remove(i);
                        continue 'watchers;
                    }
                }
                // Clause is unit or conflicting.
                ws[i] = Watcher {
                    cref,
                    blocker: first,
                };
                i += 1;
                if self.value(first) == -1 {
                    // Conflict: restore the remaining watchers and bail out.
                    self.qhead = self.trail.len();
                    self.watches[p.code()] = ws;
                    return cref;
                }
                self.enqueue(first, cref);
            }
            self.watches[p.code()] = ws;
        }
        CREF_NONE
    }

    fn bump(&mut self, v: Var) {
        let a = &mut self.activity[v as usize];
        *a += self.var_inc;
        if *a > 1e100 {
            for x in &mut self.activity {
                *x *= 1e-100;
            }
            self.var_inc *= 1e-100;
            self.heap.rebuild(&self.activity);
        } else {
            self.heap.update(v, &self.activity);
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt: Vec<Lit> = vec![Lit::positive(0)]; // placeholder slot 0
        let mut counter = 0u32;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        loop {
            debug_assert_ne!(confl, CREF_NONE);
            let start = usize::from(p.is_some());
            for k in start..self.clauses[confl as usize].len() {
                let q = self.clauses[confl as usize][k];
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(q.var());
                    if self.level[v] >= self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            // Pick the next literal of the current level to expand.
            loop {
                index -= 1;
                if self.seen[self.trail[index].var() as usize] {
                    break;
                }
            }
            let q = self.trail[index];
            self.seen[q.var() as usize] = false;
            counter -= 1;
            if counter == 0 {
                learnt[0] = !q;
                break;
            }
            p = Some(q);
            confl = self.reason[q.var() as usize];
        }
        for l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let backjump = if learnt.len() == 1 {
            0
        } else {
            // Move the highest remaining level to slot 1.
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[max_i].var() as usize] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var() as usize]
        };
        (learnt, backjump)
    }

    /// Walk reasons backwards from a failing assumption to build a core.
    /// Decisions inside the assumption prefix are assumptions themselves.
    fn analyze_final(&mut self, p: Lit) -> Vec<Lit> {
        let mut core = vec![p];
        if self.decision_level() == 0 {
            return core;
        }
        self.seen[p.var() as usize] = true;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let q = self.trail[i];
            let v = q.var() as usize;
            if !self.seen[v] {
                continue;
            }
            if self.reason[v] == CREF_NONE {
                debug_assert!(self.level[v] > 0);
                if q != p {
                    core.push(q);
                }
            } else {
                let cref = self.reason[v] as usize;
                for k in 1..self.clauses[cref].len() {
                    let l = self.clauses[cref][k];
                    if self.level[l.var() as usize] > 0 {
                        self.seen[l.var() as usize] = true;
                    }
                }
            }
            self.seen[v] = false;
        }
        self.seen[p.var() as usize] = false;
        core
    }

    fn attach(&mut self, cref: u32) {
        let c = &self.clauses[cref as usize];
        debug_assert!(c.len() >= 2);
        let (l0, l1) = (c[0], c[1]);
        self.watches[(!l0).code()].push(Watcher {
            cref,
            blocker: l1,
        });
        self.watches[(!l1).code()].push(Watcher {
            cref,
            blocker: l0,
        });
    }

    fn luby(mut x: u64) -> u64 {
        // Luby sequence: 1 1 2 1 1 2 4 ...
        let mut k = 1u64;
        while (1 << k) - 1 < x + 1 {
            k += 1;
        }
        loop {
            if (1 << k) - 1 == x + 1 {
                return 1 << (k - 1);
            }
            k -= 1;
            x -= (1 << k) - 1;
            while (1 << k) - 1 > x + 1 {
                k -= 1;
            }
        }
    }
}

impl SatEngine for CdclSolver {
    fn new_var(&mut self) -> Var {
        let v = self.assigns.len() as Var;
        self.assigns.push(0);
        self.level.push(0);
        self.reason.push(CREF_NONE);
        self.activity.push(0.0);
        self.polarity.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.insert(v, &self.activity);
        v
    }

    fn num_vars(&self) -> u32 {
        self.assigns.len() as u32
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        if !self.ok {
            return;
        }
        self.cancel_until(0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return; // tautology
        }
        c.retain(|&l| self.value(l) != -1);
        if c.iter().any(|&l| self.value(l) == 1) {
            return;
        }
        match c.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(c[0], CREF_NONE);
                if self.propagate() != CREF_NONE {
                    self.ok = false;
                }
            }
            _ => {
                let cref = self.clauses.len() as u32;
                self.clauses.push(c);
                self.attach(cref);
            }
        }
    }

    fn solve(&mut self, assumptions: &[Lit], conflict_limit: Option<u64>) -> SolveOutcome {
        if !self.ok {
            return SolveOutcome::Unsatisfiable(Vec::new());
        }
        self.cancel_until(0);
        if self.propagate() != CREF_NONE {
            self.ok = false;
            return SolveOutcome::Unsatisfiable(Vec::new());
        }
        let start_conflicts = self.conflicts;
        let mut restart_round = 0u64;
        let mut restart_budget = 100 * Self::luby(restart_round);
        loop {
            let confl = self.propagate();
            if confl != CREF_NONE {
                self.conflicts += 1;
                restart_budget = restart_budget.saturating_sub(1);
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SolveOutcome::Unsatisfiable(Vec::new());
                }
                if self.decision_level() <= assumptions.len() as u32 {
                    // The conflict depends only on assumptions; extract a core
                    // from the conflicting clause.
                    let mut core = Vec::new();
                    for k in 0..self.clauses[confl as usize].len() {
                        let l = self.clauses[confl as usize][k];
                        if self.level[l.var() as usize] > 0 {
                            self.seen[l.var() as usize] = true;
                        }
                    }
                    for i in (self.trail_lim[0]..self.trail.len()).rev() {
                        let q = self.trail[i];
                        let v = q.var() as usize;
                        if !self.seen[v] {
                            continue;
                        }
                        if self.reason[v] == CREF_NONE {
                            core.push(q);
                        } else {
                            let cref = self.reason[v] as usize;
                            for k in 1..self.clauses[cref].len() {
                                let l = self.clauses[cref][k];
                                if self.level[l.var() as usize] > 0 {
                                    self.seen[l.var() as usize] = true;
                                }
                            }
                        }
                        self.seen[v] = false;
                    }
                    self.cancel_until(0);
                    return SolveOutcome::Unsatisfiable(core);
                }
                let (learnt, backjump) = self.analyze(confl);
                self.cancel_until(backjump);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], CREF_NONE);
                } else {
                    let cref = self.clauses.len() as u32;
                    let asserting = learnt[0];
                    self.clauses.push(learnt);
                    self.attach(cref);
                    self.enqueue(asserting, cref);
                }
                self.var_inc /= 0.95;
                if let Some(limit) = conflict_limit {
                    if self.conflicts - start_conflicts >= limit {
                        self.cancel_until(0);
                        return SolveOutcome::BudgetExhausted;
                    }
                }
            } else {
                if restart_budget == 0 {
                    restart_round += 1;
                    restart_budget = 100 * Self::luby(restart_round);
                    self.cancel_until(0);
                    continue;
                }
                // Place pending assumptions, one decision level each.
                if (self.decision_level() as usize) < assumptions.len() {
                    let p = assumptions[self.decision_level() as usize];
                    match self.value(p) {
                        1 => {
                            self.trail_lim.push(self.trail.len());
                        }
                        -1 => {
                            let core = self.analyze_final(p);
                            self.cancel_until(0);
                            return SolveOutcome::Unsatisfiable(core);
                        }
                        _ => {
                            self.trail_lim.push(self.trail.len());
                            self.enqueue(p, CREF_NONE);
                        }
                    }
                    continue;
                }
                // Regular decision.
                let mut decision = None;
                while let Some(v) = self.heap.pop_max(&self.activity) {
                    if self.assigns[v as usize] == 0 {
                        decision = Some(v);
                        break;
                    }
                }
                match decision {
                    None => {
                        let model = self.assigns.iter().map(|&a| a == 1).collect();
                        self.cancel_until(0);
                        return SolveOutcome::Satisfiable(model);
                    }
                    Some(v) => {
                        self.trail_lim.push(self.trail.len());
                        let l = Lit::new(v, !self.polarity[v as usize]);
                        self.enqueue(l, CREF_NONE);
                    }
                }
            }
        }
    }

    fn conflicts(&self) -> u64 {
        self.conflicts
    }
}

impl Default for CdclSolver {
    fn default() -> Self {
        CdclSolver::new()
    }
}

/// Binary max-heap over variable activities with position tracking.
struct VarHeap {
    heap: Vec<Var>,
    pos: Vec<usize>,
}

const POS_NONE: usize = usize::MAX;

impl VarHeap {
    fn new() -> VarHeap {
        VarHeap {
            heap: Vec::new(),
            pos: Vec::new(),
        }
    }

    fn insert(&mut self, v: Var, act: &[f64]) {
        let vi = v as usize;
        if vi >= self.pos.len() {
            self.pos.resize(vi + 1, POS_NONE);
        }
        if self.pos[vi] != POS_NONE {
            return;
        }
        self.pos[vi] = self.heap.len();
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn update(&mut self, v: Var, act: &[f64]) {
        let p = self.pos[v as usize];
        if p != POS_NONE {
            self.sift_up(p, act);
        }
    }

    fn rebuild(&mut self, act: &[f64]) {
        let vars = self.heap.clone();
        self.heap.clear();
        for p in &mut self.pos {
            *p = POS_NONE;
        }
        for v in vars {
            self.insert(v, act);
        }
    }

    fn pop_max(&mut self, act: &[f64]) -> Option<Var> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = POS_NONE;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.heap[i] as usize] <= act[self.heap[parent] as usize] {
                break;
            }
            self.swap(i, parent);
            i = parent;
        }
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        loop {
            let l = 2 * i + 1;
            let r = 2 * i + 2;
            let mut best = i;
            if l < self.heap.len() && act[self.heap[l] as usize] > act[self.heap[best] as usize] {
                best = l;
            }
            if r < self.heap.len() && act[self.heap[r] as usize] > act[self.heap[best] as usize] {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos[self.heap[a] as usize] = a;
        self.pos[self.heap[b] as usize] = b;
    }
}
