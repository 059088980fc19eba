//! Propositional encoding of a validated system.
//!
//! State bits come in three groups, laid out in this order: unary-encoded
//! integer variables (bit `i` of `x` means `x >= min + i + 1`), a one-hot
//! block for the event taken from the current state, and one-hot location
//! blocks per automaton. Every current-state bit has a primed partner at
//! `bit + state_bits`; gate variables live above the primed block.
//!
//! The transition relation is built as Tseitin cones with two root
//! indicators: `ind_c` is equivalent to the controllable part, `ind_u` to the
//! uncontrollable part. Successor event bits are left unconstrained; the next
//! event is a free choice of the successor state. One-hot exactness and unary
//! monotonicity form the encoding invariant, kept out of the clause database
//! proper and asserted through activation literals in every query.

use std::collections::HashMap;

use crate::logic::{Clause, Cube, Lit, Var};
use crate::model::{
    all_states, AutomatonId, CmpOp, EventId, ExplicitState, GuardExpr, Stepper,
    System, Update, VarId,
};
use crate::sat::{OracleError, QueryResult, SolverHandle};

#[derive(Debug, thiserror::Error)]
pub enum EncodeError {
    #[error("encoding needs {needed} bits, exceeding the limit of {limit}")]
    Capacity { needed: usize, limit: usize },
    #[error("forbidden predicate expands past {0} clauses")]
    ForbiddenTooLarge(usize),
}

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("assignment violates the {0} block invariant")]
    MalformedAssignment(String),
    #[error("cube contains a non-state bit {0}")]
    NonStateBit(Var),
}

#[derive(Debug, Clone, Copy)]
pub struct EncodeLimits {
    pub max_bits: usize,
    pub max_forbidden_clauses: usize,
}

impl Default for EncodeLimits {
    fn default() -> Self {
        EncodeLimits {
            max_bits: 1_000_000,
            max_forbidden_clauses: 50_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarBlock {
    pub var: VarId,
    pub name: String,
    pub offset: usize,
    pub width: usize,
    pub min: i64,
    pub max: i64,
}

#[derive(Debug, Clone)]
pub struct LocBlock {
    pub automaton: AutomatonId,
    pub name: String,
    pub offset: usize,
    pub locations: Vec<String>,
}

/// What one bit variable stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitClass {
    /// Threshold bit `i` of a variable: true means `x >= min + i + 1`.
    VarBit(VarId, usize),
    EventBit(EventId),
    LocBit(AutomatonId, usize),
}

/// Bidirectional map between model-level state and bit indices.
#[derive(Debug, Clone)]
pub struct BitMap {
    pub vars: Vec<VarBlock>,
    pub event_offset: usize,
    pub event_names: Vec<String>,
    pub event_controllable: Vec<bool>,
    pub locs: Vec<LocBlock>,
    state_bits: usize,
    init_values: Vec<Option<bool>>, // None for event bits (free in I)
}

/// A literal over variable bits that may fold to a constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BLit {
    True,
    False,
    Is(Lit),
}

impl BitMap {
    pub fn state_bits(&self) -> usize {
        self.state_bits
    }

    /// Primed partner of a current-state literal.
    pub fn prime(&self, l: Lit) -> Lit {
        debug_assert!((l.var() as usize) < self.state_bits);
        Lit::new(l.var() + self.state_bits as u32, l.is_negated())
    }

    pub fn is_current_bit(&self, v: Var) -> bool {
        (v as usize) < self.state_bits
    }

    pub fn classify(&self, v: Var) -> Option<BitClass> {
        let v = v as usize;
        if v >= self.state_bits {
            return None;
        }
        for b in &self.vars {
            if v >= b.offset && v < b.offset + b.width {
                return Some(BitClass::VarBit(b.var, v - b.offset));
            }
        }
        if v >= self.event_offset && v < self.event_offset + self.event_names.len() {
            return Some(BitClass::EventBit(v - self.event_offset));
        }
        for b in &self.locs {
            if v >= b.offset && v < b.offset + b.locations.len() {
                return Some(BitClass::LocBit(b.automaton, v - b.offset));
            }
        }
        None
    }

    pub fn event_lit(&self, e: EventId) -> Lit {
        Lit::positive((self.event_offset + e) as Var)
    }

    pub fn loc_lit(&self, a: AutomatonId, loc: usize) -> Lit {
        Lit::positive((self.locs[a].offset + loc) as Var)
    }

    /// `x >= c` as a bit literal, folding to a constant at the domain edges.
    pub fn var_geq(&self, v: VarId, c: i64) -> BLit {
        let b = &self.vars[v];
        if c <= b.min {
            BLit::True
        } else if c > b.max {
            BLit::False
        } else {
            BLit::Is(Lit::positive((b.offset + (c - b.min - 1) as usize) as Var))
        }
    }

    pub fn var_leq(&self, v: VarId, c: i64) -> BLit {
        match self.var_geq(v, c + 1) {
            BLit::True => BLit::False,
            BLit::False => BLit::True,
            BLit::Is(l) => BLit::Is(!l),
        }
    }

    /// Full minterm over the state bits of `state`, with the event block
    /// pinned to `event` when given and left unconstrained otherwise.
    pub fn state_cube(&self, state: &ExplicitState, event: Option<EventId>) -> Cube {
        let mut lits = Vec::with_capacity(self.state_bits);
        for b in &self.vars {
            for i in 0..b.width {
                let set = state.vals[b.var] >= b.min + i as i64 + 1;
                lits.push(Lit::new((b.offset + i) as Var, !set));
            }
        }
        if let Some(e) = event {
            for i in 0..self.event_names.len() {
                lits.push(Lit::new((self.event_offset + i) as Var, i != e));
            }
        }
        for b in &self.locs {
            for i in 0..b.locations.len() {
                lits.push(Lit::new(
                    (b.offset + i) as Var,
                    i != state.locs[b.automaton] as usize,
                ));
            }
        }
        Cube::new(lits)
    }

    /// Decode a total assignment's current-state bits.
    pub fn decode_state(&self, model: &[bool]) -> Result<(ExplicitState, EventId), DecodeError> {
        let state = self.decode_state_at(model, 0)?;
        let mut event = None;
        for i in 0..self.event_names.len() {
            if model[self.event_offset + i] {
                if event.is_some() {
                    return Err(DecodeError::MalformedAssignment("event".into()));
                }
                event = Some(i);
            }
        }
        let event = event.ok_or_else(|| DecodeError::MalformedAssignment("event".into()))?;
        Ok((state, event))
    }

    /// Decode the primed location and variable blocks (the successor state).
    pub fn decode_primed_state(&self, model: &[bool]) -> Result<ExplicitState, DecodeError> {
        self.decode_state_at(model, self.state_bits)
    }

    /// Decode only the current location and variable blocks.
    pub fn decode_current_state(&self, model: &[bool]) -> Result<ExplicitState, DecodeError> {
        self.decode_state_at(model, 0)
    }

    fn decode_state_at(&self, model: &[bool], shift: usize) -> Result<ExplicitState, DecodeError> {
        let mut vals = Vec::with_capacity(self.vars.len());
        for b in &self.vars {
            let mut value = b.min;
            let mut prev = true;
            for i in 0..b.width {
                let bit = model[shift + b.offset + i];
                if bit && !prev {
                    return Err(DecodeError::MalformedAssignment(format!("unary {}", b.name)));
                }
                if bit {
                    value = b.min + i as i64 + 1;
                }
                prev = bit;
            }
            vals.push(value);
        }
        let mut locs = Vec::with_capacity(self.locs.len());
        for b in &self.locs {
            let mut found = None;
            for i in 0..b.locations.len() {
                if model[shift + b.offset + i] {
                    if found.is_some() {
                        return Err(DecodeError::MalformedAssignment(format!(
                            "one-hot {}",
                            b.name
                        )));
                    }
                    found = Some(i as u32);
                }
            }
            match found {
                Some(i) => locs.push(i),
                None => {
                    return Err(DecodeError::MalformedAssignment(format!("one-hot {}", b.name)))
                }
            }
        }
        Ok(ExplicitState { locs, vals })
    }

    /// Does the cube admit the unique initial state (under any event)?
    /// Event-block literals never exclude it since the initial event is free.
    pub fn initial_intersects(&self, cube: &Cube) -> bool {
        cube.lits().iter().all(|l| {
            let v = l.var() as usize;
            if v >= self.state_bits {
                return true;
            }
            match self.init_values[v] {
                None => true,
                Some(value) => l.eval(value),
            }
        })
    }

    /// True when the (state, event) pair satisfies every literal of the cube.
    pub fn pair_satisfies(&self, cube: &Cube, state: &ExplicitState, event: EventId) -> bool {
        cube.lits().iter().all(|l| {
            match self.classify(l.var()) {
                Some(BitClass::VarBit(v, i)) => {
                    let b = &self.vars[v];
                    l.eval(state.vals[v] >= b.min + i as i64 + 1)
                }
                Some(BitClass::EventBit(e)) => l.eval(e == event),
                Some(BitClass::LocBit(a, li)) => l.eval(state.locs[a] as usize == li),
                None => true, // non-state bits do not constrain pairs
            }
        })
    }

    pub fn describe_lit(&self, l: Lit) -> String {
        let v = l.var() as usize;
        let (base, primed) = if v >= self.state_bits && v < 2 * self.state_bits {
            (Lit::new((v - self.state_bits) as Var, l.is_negated()), true)
        } else {
            (l, false)
        };
        let body = match self.classify(base.var()) {
            Some(BitClass::VarBit(vi, i)) => {
                let b = &self.vars[vi];
                if base.is_negated() {
                    format!("{}<={}", b.name, b.min + i as i64)
                } else {
                    format!("{}>={}", b.name, b.min + i as i64 + 1)
                }
            }
            Some(BitClass::EventBit(e)) => {
                let s = format!("ev:{}", self.event_names[e]);
                if base.is_negated() {
                    format!("!{s}")
                } else {
                    s
                }
            }
            Some(BitClass::LocBit(a, li)) => {
                let s = format!("loc:{}@{}", self.locs[a].name, self.locs[a].locations[li]);
                if base.is_negated() {
                    format!("!{s}")
                } else {
                    s
                }
            }
            None => {
                if l.is_negated() {
                    format!("!aux{}", l.var())
                } else {
                    format!("aux{}", l.var())
                }
            }
        };
        if primed {
            format!("next({body})")
        } else {
            body
        }
    }

    pub fn describe_cube(&self, c: &Cube) -> String {
        let parts: Vec<String> = c.lits().iter().map(|&l| self.describe_lit(l)).collect();
        parts.join(" & ")
    }
}

/// Model-level reading of a cube over current-state bits.
#[derive(Debug, Clone)]
pub struct DecodedCube {
    pub pos_locs: Vec<(AutomatonId, usize)>,
    pub neg_locs: Vec<(AutomatonId, usize)>,
    pub event: Option<EventId>,
    pub neg_events: Vec<EventId>,
    /// Canonical interval per constrained variable, thresholds merged.
    pub intervals: Vec<(VarId, i64, i64)>,
}

impl DecodedCube {
    /// Conjunction of threshold atoms equivalent to the variable literals.
    pub fn guard(&self, sys: &System) -> GuardExpr {
        let mut parts = Vec::new();
        for &(v, lo, hi) in &self.intervals {
            let decl = &sys.variables[v];
            if lo > hi {
                return GuardExpr::False;
            }
            if lo == hi {
                parts.push(GuardExpr::cmp(&decl.name, CmpOp::Eq, lo));
                continue;
            }
            if lo > decl.min {
                parts.push(GuardExpr::cmp(&decl.name, CmpOp::Ge, lo));
            }
            if hi < decl.max {
                parts.push(GuardExpr::cmp(&decl.name, CmpOp::Le, hi));
            }
        }
        GuardExpr::and(parts)
    }

    /// Disjunctive negation of the variable part, the shape guards are
    /// strengthened with: one escape atom per tight interval bound.
    pub fn negated_guard(&self, sys: &System) -> GuardExpr {
        let mut parts = Vec::new();
        for &(v, lo, hi) in &self.intervals {
            let decl = &sys.variables[v];
            if lo > hi {
                return GuardExpr::True;
            }
            if lo > decl.min {
                parts.push(GuardExpr::cmp(&decl.name, CmpOp::Le, lo - 1));
            }
            if hi < decl.max {
                parts.push(GuardExpr::cmp(&decl.name, CmpOp::Ge, hi + 1));
            }
        }
        GuardExpr::or(parts)
    }
}

/// Split a current-state cube into location/event selector literals and the
/// variable intervals. Rejects cubes touching primed or gate bits.
pub fn cube_to_predicate(map: &BitMap, cube: &Cube) -> Result<DecodedCube, DecodeError> {
    let mut out = DecodedCube {
        pos_locs: Vec::new(),
        neg_locs: Vec::new(),
        event: None,
        neg_events: Vec::new(),
        intervals: Vec::new(),
    };
    let mut bounds: HashMap<VarId, (i64, i64)> = HashMap::new();
    for &l in cube.lits() {
        let class = map
            .classify(l.var())
            .ok_or(DecodeError::NonStateBit(l.var()))?;
        match class {
            BitClass::VarBit(v, i) => {
                let b = &map.vars[v];
                let entry = bounds.entry(v).or_insert((b.min, b.max));
                if l.is_negated() {
                    entry.1 = entry.1.min(b.min + i as i64);
                } else {
                    entry.0 = entry.0.max(b.min + i as i64 + 1);
                }
            }
            BitClass::EventBit(e) => {
                if l.is_negated() {
                    out.neg_events.push(e);
                } else {
                    out.event = Some(e);
                }
            }
            BitClass::LocBit(a, li) => {
                if l.is_negated() {
                    out.neg_locs.push((a, li));
                } else {
                    out.pos_locs.push((a, li));
                }
            }
        }
    }
    let mut intervals: Vec<(VarId, i64, i64)> =
        bounds.into_iter().map(|(v, (lo, hi))| (v, lo, hi)).collect();
    intervals.sort_unstable();
    out.intervals = intervals;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Gate builder
// ---------------------------------------------------------------------------

struct Gates {
    next_var: u32,
    clauses: Vec<Clause>,
    true_lit: Lit,
    and_memo: HashMap<Vec<Lit>, Lit>,
    or_memo: HashMap<Vec<Lit>, Lit>,
    iff_memo: HashMap<(Lit, Lit), Lit>,
}

impl Gates {
    fn new(first_free: u32) -> Gates {
        let true_lit = Lit::positive(first_free);
        let mut g = Gates {
            next_var: first_free + 1,
            clauses: Vec::new(),
            true_lit,
            and_memo: HashMap::new(),
            or_memo: HashMap::new(),
            iff_memo: HashMap::new(),
        };
        g.clauses.push(Clause::new(vec![true_lit]));
        g
    }

    fn constant(&self, b: bool) -> Lit {
        if b {
            self.true_lit
        } else {
            !self.true_lit
        }
    }

    fn fresh(&mut self) -> Lit {
        let v = self.next_var;
        self.next_var += 1;
        Lit::positive(v)
    }

    fn blit(&self, b: BLit) -> Lit {
        match b {
            BLit::True => self.constant(true),
            BLit::False => self.constant(false),
            BLit::Is(l) => l,
        }
    }

    /// Conjunction gate with full biconditional clauses.
    fn and(&mut self, lits: Vec<Lit>) -> Lit {
        let mut ls: Vec<Lit> = lits
            .into_iter()
            .filter(|&l| l != self.true_lit)
            .collect();
        if ls.iter().any(|&l| l == !self.true_lit) {
            return self.constant(false);
        }
        ls.sort_unstable();
        ls.dedup();
        if ls.windows(2).any(|w| w[0] == !w[1]) {
            return self.constant(false);
        }
        match ls.len() {
            0 => self.constant(true),
            1 => ls[0],
            _ => {
                if let Some(&g) = self.and_memo.get(&ls) {
                    return g;
                }
                let g = self.fresh();
                for &l in &ls {
                    self.clauses.push(Clause::new(vec![!g, l]));
                }
                let mut back: Vec<Lit> = ls.iter().map(|&l| !l).collect();
                back.push(g);
                self.clauses.push(Clause::new(back));
                self.and_memo.insert(ls, g);
                g
            }
        }
    }

    fn or(&mut self, lits: Vec<Lit>) -> Lit {
        let mut ls: Vec<Lit> = lits
            .into_iter()
            .filter(|&l| l != !self.true_lit)
            .collect();
        if ls.iter().any(|&l| l == self.true_lit) {
            return self.constant(true);
        }
        ls.sort_unstable();
        ls.dedup();
        if ls.windows(2).any(|w| w[0] == !w[1]) {
            return self.constant(true);
        }
        match ls.len() {
            0 => self.constant(false),
            1 => ls[0],
            _ => {
                if let Some(&g) = self.or_memo.get(&ls) {
                    return g;
                }
                let g = self.fresh();
                for &l in &ls {
                    self.clauses.push(Clause::new(vec![g, !l]));
                }
                let mut fwd = ls.clone();
                fwd.push(!g);
                self.clauses.push(Clause::new(fwd));
                self.or_memo.insert(ls, g);
                g
            }
        }
    }

    fn iff(&mut self, a: Lit, b: Lit) -> Lit {
        if a == self.true_lit {
            return b;
        }
        if b == self.true_lit {
            return a;
        }
        if a == !self.true_lit {
            return !b;
        }
        if b == !self.true_lit {
            return !a;
        }
        if a == b {
            return self.constant(true);
        }
        if a == !b {
            return self.constant(false);
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&g) = self.iff_memo.get(&key) {
            return g;
        }
        let g = self.fresh();
        self.clauses.push(Clause::new(vec![!g, !a, b]));
        self.clauses.push(Clause::new(vec![!g, a, !b]));
        self.clauses.push(Clause::new(vec![g, a, b]));
        self.clauses.push(Clause::new(vec![g, !a, !b]));
        self.iff_memo.insert(key, g);
        g
    }
}

// ---------------------------------------------------------------------------
// The encoded system
// ---------------------------------------------------------------------------

/// Propositional image of one system: initial clause set, safety clause set,
/// encoding invariant and the gate-defined transition cones.
pub struct SymbolicSystem {
    pub system: System,
    map: BitMap,
    /// All solver variables the encoding allocates (state, primed, gates).
    pub total_vars: u32,
    /// Exact initial-state clauses (units plus a free exactly-one event).
    pub init: Vec<Clause>,
    /// Safety property P as clauses over current state bits.
    pub safe: Vec<Clause>,
    pub enc_inv_cur: Vec<Clause>,
    pub enc_inv_next: Vec<Clause>,
    /// Permanent gate definitions (cones, enabledness, bad).
    pub defs: Vec<Clause>,
    /// Root indicator for the controllable transition cone.
    pub ind_c: Lit,
    pub ind_u: Lit,
    /// `ind_c or ind_u`, the full (supervised) relation under assumptions.
    pub ind_any: Lit,
    /// Tseitin root equivalent to "the current state violates P".
    pub bad: Lit,
    /// Literal constrained true by the definitions; anchor for constants.
    pub const_true: Lit,
    /// Per (automaton, transition index): enabledness gate over current bits.
    enab: HashMap<(AutomatonId, usize), Lit>,
}

/// Activation literals created by [`SymbolicSystem::load_into`].
#[derive(Debug, Clone, Copy)]
pub struct Loaded {
    pub act_init: Lit,
    pub act_inv_cur: Lit,
    pub act_inv_next: Lit,
}

impl SymbolicSystem {
    pub fn bitmap(&self) -> &BitMap {
        &self.map
    }

    pub fn enab_lit(&self, automaton: AutomatonId, transition: usize) -> Lit {
        self.enab[&(automaton, transition)]
    }

    /// Replay the encoding into a fresh handle. Gate definitions are added
    /// permanently; init and the two invariant halves are guarded by fresh
    /// activation literals so queries opt in per call.
    pub fn load_into(&self, h: &mut SolverHandle) -> Result<Loaded, OracleError> {
        assert_eq!(h.num_vars(), 0, "load_into needs a fresh handle");
        for _ in 0..self.total_vars {
            h.new_var();
        }
        for c in &self.defs {
            h.add_clause(c)?;
        }
        let guard_all = |h: &mut SolverHandle, clauses: &[Clause]| -> Result<Lit, OracleError> {
            let act = Lit::positive(h.new_var());
            for c in clauses {
                let mut lits = vec![!act];
                lits.extend_from_slice(c.lits());
                h.add_clause_lits(&lits)?;
            }
            Ok(act)
        };
        let act_init = guard_all(h, &self.init)?;
        let act_inv_cur = guard_all(h, &self.enc_inv_cur)?;
        let act_inv_next = guard_all(h, &self.enc_inv_next)?;
        Ok(Loaded {
            act_init,
            act_inv_cur,
            act_inv_next,
        })
    }
}

/// Encode a validated system. Alias for [`SymbolicSystem`] construction; the
/// bit map rides along inside the result.
pub fn encode(sys: &System, limits: &EncodeLimits) -> Result<SymbolicSystem, EncodeError> {
    // Lay out the state bits: variables, then events, then locations.
    let mut offset = 0usize;
    let mut vars = Vec::new();
    for (vi, v) in sys.variables.iter().enumerate() {
        let width = (v.max - v.min) as usize;
        vars.push(VarBlock {
            var: vi,
            name: v.name.clone(),
            offset,
            width,
            min: v.min,
            max: v.max,
        });
        offset += width;
    }
    let event_offset = offset;
    offset += sys.events.len();
    let mut locs = Vec::new();
    for (ai, a) in sys.automata.iter().enumerate() {
        locs.push(LocBlock {
            automaton: ai,
            name: a.name.clone(),
            offset,
            locations: a.locations.clone(),
        });
        offset += a.locations.len();
    }
    let state_bits = offset;
    if 2 * state_bits > limits.max_bits {
        return Err(EncodeError::Capacity {
            needed: 2 * state_bits,
            limit: limits.max_bits,
        });
    }

    let init_state = sys.initial_state();
    let mut init_values = vec![None; state_bits];
    for b in &vars {
        for i in 0..b.width {
            init_values[b.offset + i] = Some(init_state.vals[b.var] >= b.min + i as i64 + 1);
        }
    }
    for b in &locs {
        for i in 0..b.locations.len() {
            init_values[b.offset + i] = Some(init_state.locs[b.automaton] as usize == i);
        }
    }

    let map = BitMap {
        vars,
        event_offset,
        event_names: sys.events.iter().map(|e| e.name.clone()).collect(),
        event_controllable: sys.events.iter().map(|e| e.controllable).collect(),
        locs,
        state_bits,
        init_values,
    };

    let mut g = Gates::new(2 * state_bits as u32);

    // Initial clause set: units for every location and variable bit, plus a
    // free exactly-one over the event block.
    let mut init = Vec::new();
    for (bit, value) in map.init_values.iter().enumerate() {
        if let Some(v) = value {
            init.push(Clause::new(vec![Lit::new(bit as Var, !v)]));
        }
    }
    init.extend(exactly_one(
        (0..map.event_names.len()).map(|i| Lit::positive((map.event_offset + i) as Var)),
    ));

    // Encoding invariant, current and primed (primed skips the event block).
    let mut enc_inv_cur = Vec::new();
    let mut enc_inv_next = Vec::new();
    for b in &map.locs {
        let lits: Vec<Lit> = (0..b.locations.len())
            .map(|i| Lit::positive((b.offset + i) as Var))
            .collect();
        enc_inv_cur.extend(exactly_one(lits.iter().copied()));
        enc_inv_next.extend(exactly_one(lits.iter().map(|&l| map.prime(l))));
    }
    enc_inv_cur.extend(exactly_one(
        (0..map.event_names.len()).map(|i| Lit::positive((map.event_offset + i) as Var)),
    ));
    for b in &map.vars {
        for i in 1..b.width {
            let hi = Lit::positive((b.offset + i) as Var);
            let lo = Lit::positive((b.offset + i - 1) as Var);
            enc_inv_cur.push(Clause::new(vec![!hi, lo]));
            enc_inv_next.push(Clause::new(vec![!map.prime(hi), map.prime(lo)]));
        }
    }

    // Safety property P: every forbidden location bit off, and the negation
    // of the extra forbidden predicate in distributed CNF.
    let mut safe = Vec::new();
    for (ai, a) in sys.automata.iter().enumerate() {
        for f in &a.forbidden {
            let li = a.locations.iter().position(|l| l == f).unwrap();
            safe.push(Clause::new(vec![!map.loc_lit(ai, li)]));
        }
    }
    if let Some(extra) = &sys.extra_forbidden {
        let cnf = guard_cnf(sys, &map, extra, true, limits.max_forbidden_clauses)
            .ok_or(EncodeError::ForbiddenTooLarge(limits.max_forbidden_clauses))?;
        safe.extend(cnf.into_iter().filter_map(|c| clause_from_blits(&g, c)));
    }

    // Frame gates, shared by every cone that copies a bit.
    let frame_bit = |g: &mut Gates, map: &BitMap, bit: usize| -> Lit {
        let cur = Lit::positive(bit as Var);
        g.iff(map.prime(cur), cur)
    };

    let stepper = Stepper::new(sys);
    let mut enab: HashMap<(AutomatonId, usize), Lit> = HashMap::new();
    let mut same_loc: Vec<Option<Lit>> = vec![None; sys.automata.len()];
    let mut frame_var: Vec<Option<Lit>> = vec![None; sys.variables.len()];

    // Pre-build enabledness gates in declaration order.
    for (ai, a) in sys.automata.iter().enumerate() {
        for (ti, t) in a.transitions.iter().enumerate() {
            let from = a.locations.iter().position(|l| *l == t.from).unwrap();
            let mut parts = vec![map.loc_lit(ai, from)];
            parts.push(compile_guard(&mut g, &map, sys, &t.guard));
            for (name, upd) in &t.updates {
                let vi = sys.var_id(name).unwrap();
                let decl = &sys.variables[vi];
                match upd {
                    Update::Add(c) => parts.push(g.blit(map.var_leq(vi, decl.max - c))),
                    Update::Sub(c) => parts.push(g.blit(map.var_geq(vi, decl.min + c))),
                    Update::Const(_) | Update::Keep => {}
                }
            }
            let e = g.and(parts);
            enab.insert((ai, ti), e);
        }
    }

    // One cone per event with at least one declaring automaton.
    let mut cones_c = Vec::new();
    let mut cones_u = Vec::new();
    for (ei, ev) in sys.events.iter().enumerate() {
        let declaring = stepper.declaring(ei);
        if declaring.is_empty() {
            continue;
        }
        let mut conjuncts = vec![map.event_lit(ei)];
        let mut assigners_by_var: Vec<Vec<Lit>> = vec![Vec::new(); sys.variables.len()];
        for (ai, a) in sys.automata.iter().enumerate() {
            if declaring.contains(&ai) {
                let mut sels = Vec::new();
                for (ti, t) in a.transitions.iter().enumerate() {
                    if sys.event_id(&t.event).unwrap() != ei {
                        continue;
                    }
                    let to = a.locations.iter().position(|l| *l == t.to).unwrap();
                    let mut parts = vec![enab[&(ai, ti)]];
                    // Full one-hot successor pattern for this automaton.
                    for li in 0..a.locations.len() {
                        let bit = map.loc_lit(ai, li);
                        parts.push(if li == to {
                            map.prime(bit)
                        } else {
                            !map.prime(bit)
                        });
                    }
                    for (name, upd) in &t.updates {
                        let vi = sys.var_id(name).unwrap();
                        parts.extend(update_pattern(&mut g, &map, vi, *upd));
                    }
                    let sel = g.and(parts);
                    sels.push(sel);
                    for (name, _) in &t.updates {
                        let vi = sys.var_id(name).unwrap();
                        assigners_by_var[vi].push(sel);
                    }
                }
                conjuncts.push(g.or(sels));
            } else {
                let gate = match same_loc[ai] {
                    Some(l) => l,
                    None => {
                        let b = &map.locs[ai];
                        let eqs: Vec<Lit> = (0..b.locations.len())
                            .map(|i| frame_bit(&mut g, &map, b.offset + i))
                            .collect();
                        let l = g.and(eqs);
                        same_loc[ai] = Some(l);
                        l
                    }
                };
                conjuncts.push(gate);
            }
        }
        for vi in 0..sys.variables.len() {
            let frame = match frame_var[vi] {
                Some(l) => l,
                None => {
                    let b = &map.vars[vi];
                    let eqs: Vec<Lit> = (0..b.width)
                        .map(|i| frame_bit(&mut g, &map, b.offset + i))
                        .collect();
                    let l = g.and(eqs);
                    frame_var[vi] = Some(l);
                    l
                }
            };
            let sels = std::mem::take(&mut assigners_by_var[vi]);
            if sels.is_empty() {
                conjuncts.push(frame);
            } else {
                let mut opts = sels;
                opts.push(frame);
                conjuncts.push(g.or(opts));
            }
        }
        let cone = g.and(conjuncts);
        if ev.controllable {
            cones_c.push(cone);
        } else {
            cones_u.push(cone);
        }
    }
    let ind_c = g.or(cones_c);
    let ind_u = g.or(cones_u);
    let ind_any = g.or(vec![ind_c, ind_u]);

    // bad <-> not P.
    let mut bad_parts = Vec::new();
    for (ai, a) in sys.automata.iter().enumerate() {
        for f in &a.forbidden {
            let li = a.locations.iter().position(|l| l == f).unwrap();
            bad_parts.push(map.loc_lit(ai, li));
        }
    }
    if let Some(extra) = &sys.extra_forbidden {
        bad_parts.push(compile_guard(&mut g, &map, sys, extra));
    }
    let bad = g.or(bad_parts);

    let total_vars = g.next_var;
    if total_vars as usize > limits.max_bits {
        return Err(EncodeError::Capacity {
            needed: total_vars as usize,
            limit: limits.max_bits,
        });
    }
    let const_true = g.true_lit;
    Ok(SymbolicSystem {
        system: sys.clone(),
        map,
        total_vars,
        init,
        safe,
        enc_inv_cur,
        enc_inv_next,
        defs: g.clauses,
        ind_c,
        ind_u,
        ind_any,
        bad,
        const_true,
        enab,
    })
}

/// Primed-bit constraints realizing one variable update inside a cone.
fn update_pattern(g: &mut Gates, map: &BitMap, vi: VarId, upd: Update) -> Vec<Lit> {
    let b = map.vars[vi].clone();
    let mut out = Vec::with_capacity(b.width);
    for i in 0..b.width {
        let next = map.prime(Lit::positive((b.offset + i) as Var));
        let lit = match upd {
            Update::Const(c) => {
                if c >= b.min + i as i64 + 1 {
                    next
                } else {
                    !next
                }
            }
            Update::Keep => g.iff(next, Lit::positive((b.offset + i) as Var)),
            Update::Add(c) => {
                // next bit i holds iff x >= min + (i - c) + 1
                let src = i as i64 - c;
                if src < 0 {
                    next
                } else if src >= b.width as i64 {
                    !next
                } else {
                    g.iff(next, Lit::positive((b.offset + src as usize) as Var))
                }
            }
            Update::Sub(c) => {
                let src = i as i64 + c;
                if src >= b.width as i64 {
                    !next
                } else {
                    g.iff(next, Lit::positive((b.offset + src as usize) as Var))
                }
            }
        };
        out.push(lit);
    }
    out
}

fn compile_guard(g: &mut Gates, map: &BitMap, sys: &System, expr: &GuardExpr) -> Lit {
    match expr {
        GuardExpr::True => g.constant(true),
        GuardExpr::False => g.constant(false),
        GuardExpr::Cmp { var, op, value } => {
            let vi = sys.var_id(var).expect("undeclared variable");
            let parts: Vec<BLit> = match op {
                CmpOp::Ge => vec![map.var_geq(vi, *value)],
                CmpOp::Gt => vec![map.var_geq(vi, *value + 1)],
                CmpOp::Le => vec![map.var_leq(vi, *value)],
                CmpOp::Lt => vec![map.var_leq(vi, *value - 1)],
                CmpOp::Eq => vec![map.var_geq(vi, *value), map.var_leq(vi, *value)],
                CmpOp::Ne => {
                    let lo = g.blit(map.var_leq(vi, *value - 1));
                    let hi = g.blit(map.var_geq(vi, *value + 1));
                    return g.or(vec![lo, hi]);
                }
            };
            let lits: Vec<Lit> = parts.into_iter().map(|b| g.blit(b)).collect();
            g.and(lits)
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
                .expect("unknown location");
            map.loc_lit(ai, li)
        }
        GuardExpr::Not(inner) => !compile_guard(g, map, sys, inner),
        GuardExpr::And(parts) => {
            let lits = parts.iter().map(|p| compile_guard(g, map, sys, p)).collect();
            g.and(lits)
        }
        GuardExpr::Or(parts) => {
            let lits = parts.iter().map(|p| compile_guard(g, map, sys, p)).collect();
            g.or(lits)
        }
    }
}

fn exactly_one(lits: impl Iterator<Item = Lit>) -> Vec<Clause> {
    let ls: Vec<Lit> = lits.collect();
    let mut out = Vec::new();
    if ls.is_empty() {
        return out;
    }
    out.push(Clause::new(ls.clone()));
    for i in 0..ls.len() {
        for j in i + 1..ls.len() {
            out.push(Clause::new(vec![!ls[i], !ls[j]]));
        }
    }
    out
}

/// CNF over state-bit literals of `expr` (or its negation), by distribution.
/// `None` when the expansion exceeds `cap` clauses. Clauses may fold away
/// entirely (constant true) or come back empty (constant false).
fn guard_cnf(
    sys: &System,
    map: &BitMap,
    expr: &GuardExpr,
    negated: bool,
    cap: usize,
) -> Option<Vec<Vec<BLit>>> {
    fn atom_clauses(sys: &System, map: &BitMap, expr: &GuardExpr, negated: bool) -> Vec<Vec<BLit>> {
        match expr {
            GuardExpr::True => {
                if negated {
                    vec![vec![]]
                } else {
                    vec![]
                }
            }
            GuardExpr::False => {
                if negated {
                    vec![]
                } else {
                    vec![vec![]]
                }
            }
            GuardExpr::Cmp { var, op, value } => {
                let vi = sys.var_id(var).unwrap();
                let (op, value) = if negated {
                    match op {
                        CmpOp::Eq => (CmpOp::Ne, *value),
                        CmpOp::Ne => (CmpOp::Eq, *value),
                        CmpOp::Lt => (CmpOp::Ge, *value),
                        CmpOp::Le => (CmpOp::Gt, *value),
                        CmpOp::Gt => (CmpOp::Le, *value),
                        CmpOp::Ge => (CmpOp::Lt, *value),
                    }
                } else {
                    (*op, *value)
                };
                match op {
                    CmpOp::Ge => vec![vec![map.var_geq(vi, value)]],
                    CmpOp::Gt => vec![vec![map.var_geq(vi, value + 1)]],
                    CmpOp::Le => vec![vec![map.var_leq(vi, value)]],
                    CmpOp::Lt => vec![vec![map.var_leq(vi, value - 1)]],
                    CmpOp::Eq => vec![
                        vec![map.var_geq(vi, value)],
                        vec![map.var_leq(vi, value)],
                    ],
                    CmpOp::Ne => vec![vec![map.var_leq(vi, value - 1), map.var_geq(vi, value + 1)]],
                }
            }
            GuardExpr::AtLocation {
                automaton,
                location,
            } => {
                let ai = sys.automaton_id(automaton).unwrap();
                let li = sys.automata[ai]
                    .locations
                    .iter()
                    .position(|l| l == location)
                    .unwrap();
                let lit = map.loc_lit(ai, li);
                vec![vec![BLit::Is(if negated { !lit } else { lit })]]
            }
            _ => unreachable!("composite handled by caller"),
        }
    }
    match expr {
        GuardExpr::Not(inner) => guard_cnf(sys, map, inner, !negated, cap),
        GuardExpr::And(parts) if !negated => {
            let mut out = Vec::new();
            for p in parts {
                out.extend(guard_cnf(sys, map, p, false, cap)?);
                if out.len() > cap {
                    return None;
                }
            }
            Some(out)
        }
        GuardExpr::Or(parts) if negated => {
            let mut out = Vec::new();
            for p in parts {
                out.extend(guard_cnf(sys, map, p, true, cap)?);
                if out.len() > cap {
                    return None;
                }
            }
            Some(out)
        }
        GuardExpr::And(parts) | GuardExpr::Or(parts) => {
            // Remaining cases are disjunctions of sub-CNFs: a negated
            // conjunction or a plain disjunction. Distribute pairwise,
            // keeping the negation flag of each part as passed down.
            debug_assert!(negated == matches!(expr, GuardExpr::And(_)));
            let mut acc: Vec<Vec<BLit>> = vec![vec![]];
            for p in parts {
                let part_cnf = guard_cnf(sys, map, p, negated, cap)?;
                let mut next = Vec::new();
                for c1 in &acc {
                    for c2 in &part_cnf {
                        let mut merged = c1.clone();
                        merged.extend(c2.iter().copied());
                        next.push(merged);
                        if next.len() > cap {
                            return None;
                        }
                    }
                }
                acc = next;
            }
            Some(acc)
        }
        atom => Some(atom_clauses(sys, map, atom, negated)),
    }
}

/// Resolve constant-folded literals inside a CNF clause. Returns `None` when
/// the clause is satisfied outright (a constant-true literal or a
/// complementary pair).
fn clause_from_blits(_g: &Gates, clause: Vec<BLit>) -> Option<Clause> {
    let mut lits = Vec::new();
    for b in clause {
        match b {
            BLit::True => return None,
            BLit::False => {}
            BLit::Is(l) => lits.push(l),
        }
    }
    lits.sort_unstable();
    lits.dedup();
    if lits.windows(2).any(|w| w[0] == !w[1]) {
        return None;
    }
    Some(Clause::new(lits))
}

// ---------------------------------------------------------------------------
// Relation enumeration (ground truth at desk scale)
// ---------------------------------------------------------------------------

/// Which cone to materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Controllable,
    Uncontrollable,
    Either,
}

/// Materialize the encoded transition relation by model enumeration on a
/// throwaway handle: every (state, event, successor) triple the cone admits,
/// optionally under supervisor cubes strengthening the controllable part.
pub fn enumerate_transitions(
    sym: &SymbolicSystem,
    cone: Cone,
    supervisor: &[Cube],
) -> Result<Vec<(ExplicitState, EventId, ExplicitState)>, OracleError> {
    let mut h = SolverHandle::new();
    let loaded = sym.load_into(&mut h)?;
    for t in supervisor {
        let mut lits = vec![!sym.ind_c];
        lits.extend(t.negate().lits().iter().copied());
        h.add_clause_lits(&lits)?;
    }
    let root = match cone {
        Cone::Controllable => sym.ind_c,
        Cone::Uncontrollable => sym.ind_u,
        Cone::Either => sym.ind_any,
    };
    let map = sym.bitmap();
    let mut out = Vec::new();
    loop {
        let res = h.solve(&[loaded.act_inv_cur, loaded.act_inv_next, root])?;
        let model = match res {
            QueryResult::Satisfiable { model } => model,
            QueryResult::Unsatisfiable { .. } => break,
        };
        let (state, event) = map.decode_state(&model).expect("invariant-valid model");
        let succ = map.decode_primed_state(&model).expect("valid successor");
        // Block this (state, event, successor-state) projection.
        let mut block = Vec::new();
        for l in map.state_cube(&state, Some(event)).lits() {
            block.push(!*l);
        }
        for l in map.state_cube(&succ, None).lits() {
            block.push(!map.prime(*l));
        }
        h.add_clause_lits(&block)?;
        out.push((state, event, succ));
    }
    out.sort_unstable_by(|a, b| a.cmp(b));
    Ok(out)
}

/// The explicit enabled relation, for comparison with the encoded one.
pub fn explicit_transitions(sys: &System) -> Vec<(ExplicitState, EventId, ExplicitState)> {
    let stepper = Stepper::new(sys);
    let mut out = Vec::new();
    for state in all_states(sys) {
        for e in 0..sys.events.len() {
            if let Some(succ) = stepper.step(&state, e) {
                out.push((state.clone(), e, succ));
            }
        }
    }
    out.sort_unstable_by(|a, b| a.cmp(b));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::gen_fig1;
    use crate::model::{Automaton, EventDecl};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_hot_location_pattern() {
        // A location three out of five: bits [0,0,1,0,0].
        let sys = System {
            variables: vec![],
            events: vec![EventDecl {
                name: "e".into(),
                controllable: true,
            }],
            automata: vec![Automaton {
                name: "m".into(),
                locations: (0..5).map(|i| format!("l{i}")).collect(),
                initial: "l0".into(),
                forbidden: vec![],
                transitions: vec![],
            }],
            extra_forbidden: None,
        };
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let map = sym.bitmap();
        let state = ExplicitState {
            locs: vec![2],
            vals: vec![],
        };
        let cube = map.state_cube(&state, None);
        let bits: Vec<bool> = (0..5)
            .map(|i| cube.contains(map.loc_lit(0, i)))
            .collect();
        assert_eq!(bits, vec![false, false, true, false, false]);
    }

    #[test]
    fn unary_value_pattern() {
        // Value 3 over [0,5]: bits [1,1,1,0,0].
        let sys = System {
            variables: vec![crate::model::VarDecl {
                name: "v".into(),
                min: 0,
                max: 5,
                init: 0,
            }],
            events: vec![EventDecl {
                name: "e".into(),
                controllable: true,
            }],
            automata: vec![Automaton {
                name: "m".into(),
                locations: vec!["l0".into()],
                initial: "l0".into(),
                forbidden: vec![],
                transitions: vec![],
            }],
            extra_forbidden: None,
        };
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let map = sym.bitmap();
        let state = ExplicitState {
            locs: vec![0],
            vals: vec![3],
        };
        let cube = map.state_cube(&state, None);
        let bits: Vec<bool> = (0..5)
            .map(|i| cube.contains(Lit::positive((map.vars[0].offset + i) as Var)))
            .collect();
        assert_eq!(bits, vec![true, true, true, false, false]);
        // All-zero block over [2,6] decodes to the minimum.
        let mut model = vec![false; sym.total_vars as usize];
        for l in cube.lits() {
            if !l.is_negated() {
                model[l.var() as usize] = true;
            }
        }
        let decoded = map.decode_state_at(&model, 0).unwrap();
        assert_eq!(decoded.vals, vec![3]);
    }

    #[test]
    fn min_value_is_all_zero_block() {
        let sys = System {
            variables: vec![crate::model::VarDecl {
                name: "v".into(),
                min: 2,
                max: 6,
                init: 2,
            }],
            events: vec![EventDecl {
                name: "e".into(),
                controllable: true,
            }],
            automata: vec![Automaton {
                name: "m".into(),
                locations: vec!["l0".into()],
                initial: "l0".into(),
                forbidden: vec![],
                transitions: vec![],
            }],
            extra_forbidden: None,
        };
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let map = sym.bitmap();
        let mut model = vec![false; sym.total_vars as usize];
        model[map.event_offset] = true;
        model[map.locs[0].offset] = true;
        let (state, _) = map.decode_state(&model).unwrap();
        assert_eq!(state.vals, vec![2]);
    }

    #[test]
    fn decode_rejects_malformed_blocks() {
        let sym = encode(&gen_fig1(), &EncodeLimits::default()).unwrap();
        let map = sym.bitmap();
        let mut model = vec![false; sym.total_vars as usize];
        // No location bit set.
        model[map.event_offset] = true;
        assert!(map.decode_state(&model).is_err());
        // Non-monotone unary block: x bit 2 without bit 1.
        model[map.locs[0].offset] = true;
        model[map.vars[0].offset + 2] = true;
        assert!(map.decode_state(&model).is_err());
    }

    #[test]
    fn state_round_trip_random() {
        let sys = gen_fig1();
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let map = sym.bitmap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let state = ExplicitState {
                locs: vec![rng.gen_range(0..6)],
                vals: vec![rng.gen_range(0..=3), rng.gen_range(0..=3)],
            };
            let event = rng.gen_range(0..sys.events.len());
            let cube = map.state_cube(&state, Some(event));
            let mut model = vec![false; sym.total_vars as usize];
            for l in cube.lits() {
                model[l.var() as usize] = !l.is_negated();
            }
            let (back, ev) = map.decode_state(&model).unwrap();
            assert_eq!(back, state);
            assert_eq!(ev, event);
        }
    }

    #[test]
    fn cube_decodes_to_selector_and_guard() {
        let sys = gen_fig1();
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let map = sym.bitmap();
        let alpha = sys.event_id("alpha").unwrap();
        // l3, alpha, y = 2, x > 2 over [0,3]
        let x = 0;
        let y = 1;
        let cube = Cube::new(vec![
            map.loc_lit(0, 3),
            map.event_lit(alpha),
            match map.var_geq(y, 2) {
                BLit::Is(l) => l,
                _ => panic!(),
            },
            match map.var_geq(y, 3) {
                BLit::Is(l) => !l,
                _ => panic!(),
            },
            match map.var_geq(x, 3) {
                BLit::Is(l) => l,
                _ => panic!(),
            },
        ]);
        let dec = cube_to_predicate(map, &cube).unwrap();
        assert_eq!(dec.pos_locs, vec![(0, 3)]);
        assert_eq!(dec.event, Some(alpha));
        assert_eq!(dec.intervals, vec![(x, 3, 3), (y, 2, 2)]);
        let guard = dec.guard(&sys);
        // Semantically y == 2 and x > 2: check by enumeration.
        for xv in 0..=3i64 {
            for yv in 0..=3i64 {
                let expect = yv == 2 && xv > 2;
                let state = ExplicitState {
                    locs: vec![3],
                    vals: vec![xv, yv],
                };
                let _ = state;
                let got = eval_guard(&guard, &[("x", xv), ("y", yv)]);
                assert_eq!(got, expect, "x={xv} y={yv}");
            }
        }
        // The negated form merges into escape thresholds.
        let neg = dec.negated_guard(&sys);
        for xv in 0..=3i64 {
            for yv in 0..=3i64 {
                let expect = !(yv == 2 && xv > 2);
                assert_eq!(eval_guard(&neg, &[("x", xv), ("y", yv)]), expect);
            }
        }
    }

    #[test]
    fn empty_cube_decodes_to_true() {
        let sys = gen_fig1();
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let dec = cube_to_predicate(sym.bitmap(), &Cube::empty()).unwrap();
        assert!(dec.pos_locs.is_empty());
        assert!(dec.event.is_none());
        assert_eq!(dec.guard(&sys), GuardExpr::True);
    }

    #[test]
    fn negative_location_cube_keeps_guard_true() {
        let sys = gen_fig1();
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let map = sym.bitmap();
        let cube = Cube::new(vec![!map.loc_lit(0, 5)]);
        let dec = cube_to_predicate(map, &cube).unwrap();
        assert_eq!(dec.neg_locs, vec![(0, 5)]);
        assert_eq!(dec.guard(&sys), GuardExpr::True);
        // Enumeration cross-check: the cube admits exactly the non-l5 pairs.
        for state in all_states(&sys) {
            for e in 0..sys.events.len() {
                assert_eq!(
                    map.pair_satisfies(&cube, &state, e),
                    state.locs[0] != 5
                );
            }
        }
    }

    #[test]
    fn cube_with_primed_bit_rejected() {
        let sys = gen_fig1();
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let map = sym.bitmap();
        let primed = map.prime(map.loc_lit(0, 1));
        assert!(cube_to_predicate(map, &Cube::new(vec![primed])).is_err());
    }

    #[test]
    fn fig1_relation_matches_explicit_semantics() {
        let sys = gen_fig1();
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let symbolic = enumerate_transitions(&sym, Cone::Either, &[]).unwrap();
        let explicit = explicit_transitions(&sys);
        assert_eq!(symbolic, explicit);
        // Cone split respects controllability.
        let ctrl = enumerate_transitions(&sym, Cone::Controllable, &[]).unwrap();
        for (_, e, _) in &ctrl {
            assert!(sys.events[*e].controllable);
        }
        let unc = enumerate_transitions(&sym, Cone::Uncontrollable, &[]).unwrap();
        for (_, e, _) in &unc {
            assert!(!sys.events[*e].controllable);
        }
        assert_eq!(ctrl.len() + unc.len(), explicit.len());
    }

    #[test]
    fn uncontrollable_query_decodes_hazard_transition() {
        let sys = gen_fig1();
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let map = sym.bitmap();
        let mut h = SolverHandle::new();
        let loaded = sym.load_into(&mut h).unwrap();
        let alpha = sys.event_id("alpha").unwrap();
        let mut assumptions = vec![loaded.act_inv_cur, loaded.act_inv_next, sym.ind_u];
        assumptions.push(map.loc_lit(0, 3));
        assumptions.push(map.event_lit(alpha));
        for b in [map.var_geq(1, 2), map.var_geq(0, 3)] {
            match b {
                BLit::Is(l) => assumptions.push(l),
                _ => panic!(),
            }
        }
        match map.var_geq(1, 3) {
            BLit::Is(l) => assumptions.push(!l),
            _ => panic!(),
        }
        match h.solve(&assumptions).unwrap() {
            QueryResult::Satisfiable { model } => {
                let (state, ev) = map.decode_state(&model).unwrap();
                assert_eq!(ev, alpha);
                let succ = map.decode_primed_state(&model).unwrap();
                let stepper = Stepper::new(&sys);
                assert_eq!(stepper.step(&state, ev), Some(succ.clone()));
                assert_eq!(succ.locs, vec![5]);
            }
            _ => panic!("hazard transition should exist"),
        }
    }

    #[test]
    fn single_location_system_encodes() {
        use crate::model::Transition;
        let sys = System {
            variables: vec![],
            events: vec![EventDecl {
                name: "tick".into(),
                controllable: true,
            }],
            automata: vec![Automaton {
                name: "m".into(),
                locations: vec!["only".into()],
                initial: "only".into(),
                forbidden: vec![],
                transitions: vec![Transition {
                    from: "only".into(),
                    event: "tick".into(),
                    to: "only".into(),
                    guard: GuardExpr::True,
                    updates: vec![],
                }],
            }],
            extra_forbidden: None,
        };
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        let rel = enumerate_transitions(&sym, Cone::Either, &[]).unwrap();
        assert_eq!(rel.len(), 1);
        assert_eq!(rel, explicit_transitions(&sys));
    }

    #[test]
    fn cones_partition_by_controllability() {
        for sys in [gen_fig1(), crate::randsys::random_system(5), crate::randsys::random_system(17)] {
            let sym = encode(&sys, &EncodeLimits::default()).unwrap();
            let map = sym.bitmap();
            let mut h = SolverHandle::new();
            let loaded = sym.load_into(&mut h).unwrap();
            for e in 0..sys.events.len() {
                let (root, label) = if sys.events[e].controllable {
                    (sym.ind_u, "uncontrollable")
                } else {
                    (sym.ind_c, "controllable")
                };
                match h
                    .solve(&[loaded.act_inv_cur, loaded.act_inv_next, root, map.event_lit(e)])
                    .unwrap()
                {
                    QueryResult::Unsatisfiable { .. } => {}
                    QueryResult::Satisfiable { .. } => panic!(
                        "{label} cone admits event {}",
                        sys.events[e].name
                    ),
                }
            }
        }
    }

    #[test]
    fn capacity_limit_enforced() {
        let sys = gen_fig1();
        let tiny = EncodeLimits {
            max_bits: 4,
            max_forbidden_clauses: 100,
        };
        assert!(matches!(
            encode(&sys, &tiny),
            Err(EncodeError::Capacity { .. })
        ));
    }

    fn eval_guard(g: &GuardExpr, env: &[(&str, i64)]) -> bool {
        match g {
            GuardExpr::True => true,
            GuardExpr::False => false,
            GuardExpr::Cmp { var, op, value } => {
                let v = env.iter().find(|(n, _)| n == var).unwrap().1;
                op.eval(v, *value)
            }
            GuardExpr::Not(i) => !eval_guard(i, env),
            GuardExpr::And(ps) => ps.iter().all(|p| eval_guard(p, env)),
            GuardExpr::Or(ps) => ps.iter().any(|p| eval_guard(p, env)),
            GuardExpr::AtLocation { .. } => unreachable!(),
        }
    }
}
