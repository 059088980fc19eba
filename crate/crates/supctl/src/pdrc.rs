//! The synthesis engine: property-directed reachability extended with
//! supervisor updates.
//!
//! The engine keeps a trace of frames `R_0 .. R_N`, each a clause set
//! over-approximating the states reachable in that many steps of the
//! currently supervised system (`R_0` is the initial predicate itself).
//! Three invariants hold after every phase: frames weaken monotonically
//! (`F_{i+1}` is a subset of `F_i` as clause sets), every frame below the
//! top implies the safety property, and each frame over-approximates the
//! image of its predecessor under the supervised transition relation.
//!
//! One iteration blocks every reachable property violation out of the top
//! frame, then propagates clauses forward and checks for two syntactically
//! equal adjacent frames. Blocking a cube first strips its controllable
//! preimages by strengthening the controllable cone (the supervisor update:
//! a permanently learned clause guarded on the controllable indicator),
//! then recursively blocks uncontrollable preimages one frame down. An
//! uncontrollable preimage reaching the initial frame means no safe
//! supervisor exists; the recursion chain then replays into a concrete
//! counterexample path.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::time::{Duration, Instant};

use crate::encode::{cube_to_predicate, DecodedCube, Loaded, SymbolicSystem};
use crate::extract::{check_certificate, CertificateVerdict};
use crate::logic::{Clause, Cube, Lit};
use crate::model::{EventId, ExplicitState, Stepper};
use crate::oracle::{reachable, ControllerMap, OracleLimit};
use crate::sat::{OracleError, QueryResult, SolverHandle};

#[derive(Debug, Clone, Default)]
pub struct Budget {
    pub max_frames: Option<usize>,
    pub max_conflicts: Option<u64>,
    pub max_seconds: Option<f64>,
}

pub struct SynthOptions {
    /// Drop literals of blocked clauses subject to initiation and
    /// consecution before inserting them. On by default; turning it off
    /// pins the exact clauses the blocking recursion produced.
    pub inductive_generalization: bool,
    /// Re-verify the trace invariants after every phase, including an
    /// explicit image check on small systems.
    pub debug_invariants: bool,
    pub budget: Budget,
    /// Newline-delimited record sink, one record per solver query.
    pub run_log: Option<Box<dyn Write + Send>>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            inductive_generalization: true,
            debug_invariants: false,
            budget: Budget::default(),
            run_log: None,
        }
    }
}

/// One supervisor entry: the forbidden (state, event) cube, where it was
/// learned, the cube it was blocking, and its model-level reading.
#[derive(Debug, Clone)]
pub struct ForbiddenCube {
    pub cube: Cube,
    pub frame: usize,
    pub blocked: Cube,
    pub selector: DecodedCube,
}

/// Accumulated strengthening of the controllable transition relation.
#[derive(Debug, Clone, Default)]
pub struct Supervisor {
    pub cubes: Vec<ForbiddenCube>,
}

impl Supervisor {
    pub fn raw_cubes(&self) -> Vec<Cube> {
        self.cubes.iter().map(|c| c.cube.clone()).collect()
    }

    /// Does the supervisor forbid taking `event` in `state`?
    pub fn blocks_pair(
        &self,
        sym: &SymbolicSystem,
        state: &ExplicitState,
        event: EventId,
    ) -> bool {
        if !sym.system.events[event].controllable {
            return false;
        }
        self.cubes
            .iter()
            .any(|c| sym.bitmap().pair_satisfies(&c.cube, state, event))
    }

    /// Materialize a per-state controller over the plant-reachable states.
    pub fn to_controller(
        &self,
        sym: &SymbolicSystem,
        limit: u128,
    ) -> Result<ControllerMap, OracleLimit> {
        let sys = &sym.system;
        let mut ctrl = ControllerMap::default();
        for state in reachable(sys, None, limit)? {
            let enabled: BTreeSet<EventId> = (0..sys.events.len())
                .filter(|&e| !self.blocks_pair(sym, &state, e))
                .collect();
            ctrl.enabled.insert(state, enabled);
        }
        Ok(ctrl)
    }
}

/// Cube chain witnessing unavoidable unsafety: consecutive cubes are linked
/// by single uncontrollable steps, with one concrete witness state each.
#[derive(Debug, Clone)]
pub struct CounterexamplePath {
    pub cubes: Vec<Cube>,
    /// `events[i]` steps `states[i]` into `states[i+1]`.
    pub events: Vec<EventId>,
    pub states: Vec<ExplicitState>,
}

impl CounterexamplePath {
    /// Shape consumed by the explicit oracle's replay check.
    pub fn to_state_path(&self) -> Vec<(ExplicitState, Option<EventId>)> {
        let mut out = Vec::with_capacity(self.states.len());
        for (i, s) in self.states.iter().enumerate() {
            out.push((s.clone(), self.events.get(i).copied()));
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct SynthStats {
    /// Blocking/propagation rounds completed.
    pub iterations: usize,
    /// Highest frame index reached.
    pub frames: usize,
    pub clauses_learned: usize,
    pub supervisor_cubes: usize,
    pub solver_calls: u64,
    pub conflicts: u64,
    pub fixpoint_frame: Option<usize>,
    pub wall: Duration,
}

#[derive(Debug)]
pub struct Controlled {
    pub supervisor: Supervisor,
    /// The inductive invariant: clauses of the fixpoint frame.
    pub invariant: Vec<Clause>,
    /// The same clauses as the blocked cubes they negate.
    pub invariant_cubes: Vec<Cube>,
    pub certificate: CertificateVerdict,
    pub stats: SynthStats,
}

#[derive(Debug)]
pub struct Inconclusive {
    pub reason: String,
    /// Supervisor cubes learned before the budget ran out; uncertified.
    pub partial_supervisor: Supervisor,
    pub stats: SynthStats,
}

pub enum SynthesisResult {
    Controlled(Controlled),
    Uncontrollable(CounterexamplePath, SynthStats),
    Inconclusive(Inconclusive),
}

impl SynthesisResult {
    pub fn stats(&self) -> &SynthStats {
        match self {
            SynthesisResult::Controlled(c) => &c.stats,
            SynthesisResult::Uncontrollable(_, s) => s,
            SynthesisResult::Inconclusive(i) => &i.stats,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("internal invariant failure: {0}")]
pub struct InternalError(pub String);

/// Control flow out of the engine's inner loops: a proven uncontrollability,
/// an exhausted budget, or a broken internal invariant.
#[derive(Debug)]
pub enum Interrupt {
    Uncontrollable(CounterexamplePath),
    Budget(String),
    Internal(String),
}

impl From<OracleError> for Interrupt {
    fn from(e: OracleError) -> Interrupt {
        match e {
            OracleError::BudgetExhausted => Interrupt::Budget("conflict budget exhausted".into()),
            other => Interrupt::Internal(other.to_string()),
        }
    }
}

struct FrameClause {
    cube: Cube,
    act: Lit,
}

struct ChainLink {
    cube: Cube,
    /// Uncontrollable event stepping this cube into its parent.
    step_event: Option<EventId>,
}

/// Run the full synthesis loop on an encoded system.
pub fn synthesize(
    sym: &SymbolicSystem,
    opts: SynthOptions,
) -> Result<SynthesisResult, InternalError> {
    let mut engine = Engine::new(sym, opts)?;
    engine.run()
}

pub struct Engine<'a> {
    sym: &'a SymbolicSystem,
    handle: SolverHandle,
    loaded: Loaded,
    opts: SynthOptions,
    frames: Vec<BTreeSet<usize>>,
    clauses: Vec<FrameClause>,
    cube_ids: HashMap<Cube, usize>,
    supervisor: Supervisor,
    combo_gates: HashMap<(EventId, Vec<(usize, usize)>), Lit>,
    /// Every uncontrollable-preimage generalization: (cube, target, event).
    pub u_generalizations: Vec<(Cube, Cube, EventId)>,
    stats: SynthStats,
    started: Instant,
    query_counter: u64,
}

impl<'a> Engine<'a> {
    pub fn new(sym: &'a SymbolicSystem, opts: SynthOptions) -> Result<Engine<'a>, InternalError> {
        let mut handle = SolverHandle::new();
        handle.set_conflict_budget(opts.budget.max_conflicts);
        let loaded = sym
            .load_into(&mut handle)
            .map_err(|e| InternalError(e.to_string()))?;
        Ok(Engine {
            sym,
            handle,
            loaded,
            opts,
            frames: vec![BTreeSet::new(), BTreeSet::new()],
            clauses: Vec::new(),
            cube_ids: HashMap::new(),
            supervisor: Supervisor::default(),
            combo_gates: HashMap::new(),
            u_generalizations: Vec::new(),
            stats: SynthStats::default(),
            started: Instant::now(),
            query_counter: 0,
        })
    }

    /// Highest frame index currently in the trace.
    pub fn top_frame(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn frame_cubes(&self, i: usize) -> Vec<Cube> {
        self.frames[i]
            .iter()
            .map(|&id| self.clauses[id].cube.clone())
            .collect()
    }

    pub fn frame_clauses(&self, i: usize) -> Vec<Clause> {
        self.frames[i]
            .iter()
            .map(|&id| self.clauses[id].cube.negate())
            .collect()
    }

    pub fn supervisor(&self) -> &Supervisor {
        &self.supervisor
    }

    pub fn run(&mut self) -> Result<SynthesisResult, InternalError> {
        let outcome = self.run_inner();
        self.stats.wall = self.started.elapsed();
        self.stats.conflicts = self.handle.stats().conflicts;
        self.stats.clauses_learned = self.clauses.len();
        self.stats.supervisor_cubes = self.supervisor.cubes.len();
        self.stats.frames = self.top_frame();
        match outcome {
            Ok(result) => Ok(result),
            Err(Interrupt::Uncontrollable(path)) => Ok(SynthesisResult::Uncontrollable(
                path,
                std::mem::take(&mut self.stats),
            )),
            Err(Interrupt::Budget(reason)) => Ok(SynthesisResult::Inconclusive(Inconclusive {
                reason,
                partial_supervisor: std::mem::take(&mut self.supervisor),
                stats: std::mem::take(&mut self.stats),
            })),
            Err(Interrupt::Internal(msg)) => Err(InternalError(msg)),
        }
    }

    fn run_inner(&mut self) -> Result<SynthesisResult, Interrupt> {
        if let Some(path) = self.base_check()? {
            return Err(Interrupt::Uncontrollable(path));
        }
        // Every iteration either finds the fixpoint or blocks at least one
        // new state in some frame, so the pair count bounds the rounds.
        let pair_bound = self
            .sym
            .system
            .state_count()
            .saturating_mul(self.sym.system.events.len().max(1) as u128)
            .saturating_add(2);
        loop {
            if self.stats.iterations as u128 > pair_bound {
                return Err(Interrupt::Internal(format!(
                    "iteration bound {pair_bound} exceeded without convergence"
                )));
            }
            if let Some(max) = self.opts.budget.max_frames {
                if self.top_frame() > max {
                    return Err(Interrupt::Budget(format!(
                        "frame budget of {max} exhausted"
                    )));
                }
            }
            self.blocking_phase()?;
            if self.opts.debug_invariants {
                self.audit_trace("blocking")?;
            }
            self.propagate()?;
            if self.opts.debug_invariants {
                self.audit_trace("propagate")?;
            }
            self.stats.iterations += 1;
            if let Some(fixpoint) = self.check_fixpoint() {
                self.stats.fixpoint_frame = Some(fixpoint);
                return self.certify(fixpoint);
            }
        }
    }

    /// The initial state must satisfy the property; otherwise no supervisor
    /// can help and the counterexample is the empty path.
    pub fn base_check(&mut self) -> Result<Option<CounterexamplePath>, Interrupt> {
        let assumptions = vec![
            self.loaded.act_inv_cur,
            self.loaded.act_init,
            self.sym.bad,
        ];
        match self.query("base", None, assumptions, None)? {
            QueryResult::Unsatisfiable { .. } => Ok(None),
            QueryResult::Satisfiable { model } => {
                let state = self
                    .sym
                    .bitmap()
                    .decode_current_state(&model)
                    .map_err(|e| Interrupt::Internal(e.to_string()))?;
                let cube = self.sym.bitmap().state_cube(&state, None);
                Ok(Some(CounterexamplePath {
                    cubes: vec![cube],
                    events: vec![],
                    states: vec![state],
                }))
            }
        }
    }

    /// Block states violating the property out of the top frame until the
    /// top frame implies the property.
    pub fn blocking_phase(&mut self) -> Result<(), Interrupt> {
        let n = self.top_frame();
        loop {
            let mut assumptions = vec![self.loaded.act_inv_cur];
            assumptions.extend(self.frame_assumptions(n));
            assumptions.push(self.sym.bad);
            match self.query("bad", Some(n), assumptions, None)? {
                QueryResult::Unsatisfiable { .. } => return Ok(()),
                QueryResult::Satisfiable { model } => {
                    let s = self.generalize_bad_state(&model)?;
                    let chain = vec![ChainLink {
                        cube: s.clone(),
                        step_event: None,
                    }];
                    self.block(&s, n, &chain)?;
                }
            }
        }
    }

    /// Widen a property-violating assignment into a cube every state of
    /// which violates the property, dropping literals greedily in bit order.
    pub fn generalize_bad_state(&mut self, model: &[bool]) -> Result<Cube, Interrupt> {
        let mut cube = self.project_current(model);
        for v in 0..self.sym.bitmap().state_bits() {
            let lit = Lit::new(v as u32, !model[v]);
            if !cube.contains(lit) || cube.len() == 1 {
                continue;
            }
            let candidate = cube.without(lit);
            let mut assumptions = vec![self.loaded.act_inv_cur, !self.sym.bad];
            assumptions.extend(candidate.lits());
            if let QueryResult::Unsatisfiable { .. } =
                self.query("gen_bad", None, assumptions, Some(&candidate))?
            {
                cube = candidate;
            }
        }
        Ok(cube)
    }

    /// Block a cube known to be unsafe, as the top of a fresh chain.
    pub fn block_cube(&mut self, s: &Cube, k: usize) -> Result<(), Interrupt> {
        let chain = vec![ChainLink {
            cube: s.clone(),
            step_event: None,
        }];
        self.block(s, k, &chain)
    }

    /// The blocking routine. Supervises controllable preimages, recurses on
    /// uncontrollable ones, then adds the blocked clause to frames 1..=k.
    fn block(&mut self, s: &Cube, k: usize, chain: &[ChainLink]) -> Result<(), Interrupt> {
        if self.sym.bitmap().initial_intersects(s) {
            // Every state of s reaches a violation through uncontrollable
            // steps alone; if an initial state is inside, synthesis fails.
            let state = self.sym.system.initial_state();
            return Err(Interrupt::Uncontrollable(self.build_path(state, None, chain)?));
        }
        if k == 0 {
            return Err(Interrupt::Internal("block called on frame 0".into()));
        }
        let not_s = self.guarded_clause(&s.negate())?;
        let primed_s: Vec<Lit> = s
            .lits()
            .iter()
            .map(|&l| self.sym.bitmap().prime(l))
            .collect();
        let escape_s = self.escape_lit(s)?;

        // Controllable preimages: supervise them away.
        loop {
            let mut assumptions = vec![self.loaded.act_inv_cur, self.loaded.act_inv_next];
            assumptions.extend(self.frame_assumptions(k - 1));
            assumptions.push(not_s);
            assumptions.push(self.sym.ind_c);
            assumptions.extend(primed_s.iter().copied());
            match self.query("trans_c", Some(k - 1), assumptions, Some(s))? {
                QueryResult::Unsatisfiable { .. } => break,
                QueryResult::Satisfiable { model } => {
                    let t = self.generalize_preimage_c(&model, escape_s)?;
                    self.add_supervisor_cube(t, k, s)?;
                }
            }
        }

        // Uncontrollable preimages: block them one frame earlier.
        loop {
            let mut assumptions = vec![self.loaded.act_inv_cur, self.loaded.act_inv_next];
            assumptions.extend(self.frame_assumptions(k - 1));
            assumptions.push(not_s);
            assumptions.push(self.sym.ind_u);
            assumptions.extend(primed_s.iter().copied());
            match self.query("trans_u", Some(k - 1), assumptions, Some(s))? {
                QueryResult::Unsatisfiable { .. } => break,
                QueryResult::Satisfiable { model } => {
                    if k == 1 {
                        let (state, event) = self
                            .sym
                            .bitmap()
                            .decode_state(&model)
                            .map_err(|e| Interrupt::Internal(e.to_string()))?;
                        return Err(Interrupt::Uncontrollable(self.build_path(
                            state,
                            Some(event),
                            chain,
                        )?));
                    }
                    let (t, event) = self.generalize_preimage_u(&model, s, escape_s)?;
                    let mut child = Vec::with_capacity(chain.len() + 1);
                    child.push(ChainLink {
                        cube: t.clone(),
                        step_event: Some(event),
                    });
                    child.extend(chain.iter().map(|l| ChainLink {
                        cube: l.cube.clone(),
                        step_event: l.step_event,
                    }));
                    self.block(&t, k - 1, &child)?;
                }
            }
        }

        let blocked = if self.opts.inductive_generalization {
            self.strengthen(s, k)?
        } else {
            s.clone()
        };
        debug_assert!(!self.sym.bitmap().initial_intersects(&blocked));
        self.insert_blocked(&blocked, k)?;
        Ok(())
    }

    /// Generalize a controllable-cone preimage assignment: keep dropping
    /// literals while every controllable transition out of the cube lands
    /// inside the blocked cube's state part.
    fn generalize_preimage_c(&mut self, model: &[bool], escape_s: Lit) -> Result<Cube, Interrupt> {
        let mut t = self.project_current(model);
        if !self.closed_under(self.sym.ind_c, &t, escape_s)? {
            // With deterministic systems the full projection always passes;
            // fall back to the unreduced cube if it somehow does not.
            return Ok(t);
        }
        for v in 0..self.sym.bitmap().state_bits() {
            let lit = Lit::new(v as u32, !model[v]);
            if !t.contains(lit) || t.len() == 1 {
                continue;
            }
            let candidate = t.without(lit);
            if self.closed_under(self.sym.ind_c, &candidate, escape_s)? {
                t = candidate;
            }
        }
        Ok(t)
    }

    /// Generalize an uncontrollable-cone preimage assignment. A literal may
    /// drop only while (a) every uncontrollable transition out of the cube
    /// lands inside the target's state part and (b) the cube still entails
    /// enabledness of the transition combination the model took, so every
    /// state in the cube really makes the step.
    fn generalize_preimage_u(
        &mut self,
        model: &[bool],
        s: &Cube,
        escape_s: Lit,
    ) -> Result<(Cube, EventId), Interrupt> {
        let (state, event) = self
            .sym
            .bitmap()
            .decode_state(model)
            .map_err(|e| Interrupt::Internal(e.to_string()))?;
        let combo = self.combo_gate(&state, event)?;
        let mut t = self.project_current(model);
        for v in 0..self.sym.bitmap().state_bits() {
            let lit = Lit::new(v as u32, !model[v]);
            if !t.contains(lit) || t.len() == 1 {
                continue;
            }
            let candidate = t.without(lit);
            if self.closed_under(self.sym.ind_u, &candidate, escape_s)?
                && self.entails_gate(&candidate, combo)?
            {
                t = candidate;
            }
        }
        self.u_generalizations
            .push((t.clone(), s.clone(), event));
        Ok((t, event))
    }

    /// UNSAT[t and cone and not(target-state')] under the encoding invariant.
    fn closed_under(&mut self, cone: Lit, t: &Cube, escape: Lit) -> Result<bool, Interrupt> {
        let mut assumptions = vec![self.loaded.act_inv_cur, self.loaded.act_inv_next, cone, escape];
        assumptions.extend(t.lits());
        let tag = if cone == self.sym.ind_c {
            "gen_c"
        } else {
            "gen_u"
        };
        Ok(matches!(
            self.query(tag, None, assumptions, Some(t))?,
            QueryResult::Unsatisfiable { .. }
        ))
    }

    /// UNSAT[t and not gate]: every pair in t satisfies the gate.
    fn entails_gate(&mut self, t: &Cube, gate: Lit) -> Result<bool, Interrupt> {
        let mut assumptions = vec![self.loaded.act_inv_cur, !gate];
        assumptions.extend(t.lits());
        Ok(matches!(
            self.query("gen_u_enab", None, assumptions, Some(t))?,
            QueryResult::Unsatisfiable { .. }
        ))
    }

    /// Drop literals of a blocked cube subject to initiation (the clause
    /// still excludes no initial state) and consecution relative to the
    /// previous frame under the supervised relation.
    fn strengthen(&mut self, s: &Cube, k: usize) -> Result<Cube, Interrupt> {
        let mut cur = s.clone();
        for &lit in s.lits() {
            if !cur.contains(lit) || cur.len() == 1 {
                continue;
            }
            let candidate = cur.without(lit);
            if self.sym.bitmap().initial_intersects(&candidate) {
                continue;
            }
            let act = self.guarded_clause(&candidate.negate())?;
            let mut assumptions = vec![self.loaded.act_inv_cur, self.loaded.act_inv_next];
            assumptions.extend(self.frame_assumptions(k - 1));
            assumptions.push(act);
            assumptions.push(self.sym.ind_any);
            assumptions.extend(
                candidate
                    .lits()
                    .iter()
                    .map(|&l| self.sym.bitmap().prime(l)),
            );
            if let QueryResult::Unsatisfiable { .. } =
                self.query("consec", Some(k - 1), assumptions, Some(&candidate))?
            {
                cur = candidate;
            }
        }
        Ok(cur)
    }

    /// Append a fresh empty frame, then push each clause forward when it is
    /// preserved by one supervised step from the frame holding it.
    pub fn propagate(&mut self) -> Result<(), Interrupt> {
        let n = self.top_frame();
        self.frames.push(BTreeSet::new());
        for k in 1..=n {
            let candidates: Vec<usize> = self.frames[k]
                .difference(&self.frames[k + 1])
                .copied()
                .collect();
            for id in candidates {
                let cube = self.clauses[id].cube.clone();
                let mut assumptions = vec![self.loaded.act_inv_cur, self.loaded.act_inv_next];
                assumptions.extend(self.frame_assumptions(k));
                assumptions.push(self.sym.ind_any);
                assumptions.extend(cube.lits().iter().map(|&l| self.sym.bitmap().prime(l)));
                if let QueryResult::Unsatisfiable { .. } =
                    self.query("propagate", Some(k), assumptions, Some(&cube))?
                {
                    self.frames[k + 1].insert(id);
                }
            }
        }
        Ok(())
    }

    /// Two syntactically equal adjacent frames close the proof; the shared
    /// clause set is the inductive invariant.
    pub fn check_fixpoint(&self) -> Option<usize> {
        (1..self.frames.len() - 1).find(|&i| self.frames[i] == self.frames[i + 1])
    }

    fn certify(&mut self, fixpoint: usize) -> Result<SynthesisResult, Interrupt> {
        let invariant = self.frame_clauses(fixpoint);
        let invariant_cubes = self.frame_cubes(fixpoint);
        let certificate = check_certificate(
            &invariant,
            self.sym,
            &self.supervisor.raw_cubes(),
        )
        .map_err(|e| Interrupt::Internal(e.to_string()))?;
        if !certificate.passed() {
            return Err(Interrupt::Internal(format!(
                "fixpoint frame failed certification: {certificate:?}"
            )));
        }
        self.stats.wall = self.started.elapsed();
        self.stats.conflicts = self.handle.stats().conflicts;
        self.stats.clauses_learned = self.clauses.len();
        self.stats.supervisor_cubes = self.supervisor.cubes.len();
        self.stats.frames = self.top_frame();
        Ok(SynthesisResult::Controlled(Controlled {
            supervisor: std::mem::take(&mut self.supervisor),
            invariant,
            invariant_cubes,
            certificate,
            stats: std::mem::take(&mut self.stats),
        }))
    }

    // -- plumbing -----------------------------------------------------------

    fn project_current(&self, model: &[bool]) -> Cube {
        let bits = self.sym.bitmap().state_bits();
        Cube::new(
            (0..bits)
                .map(|v| Lit::new(v as u32, !model[v]))
                .collect(),
        )
    }

    fn frame_assumptions(&self, k: usize) -> Vec<Lit> {
        if k == 0 {
            vec![self.loaded.act_init]
        } else {
            self.frames[k]
                .iter()
                .map(|&id| self.clauses[id].act)
                .collect()
        }
    }

    /// Add `clause` guarded by a fresh activation literal; assuming the
    /// returned literal turns the clause on.
    fn guarded_clause(&mut self, clause: &Clause) -> Result<Lit, Interrupt> {
        let act = Lit::positive(self.handle.new_var());
        let mut lits = vec![!act];
        lits.extend_from_slice(clause.lits());
        self.handle.add_clause_lits(&lits).map_err(Interrupt::from)?;
        Ok(act)
    }

    /// Define a fresh gate equivalent to the conjunction of `lits`.
    fn define_and(&mut self, lits: &[Lit]) -> Result<Lit, Interrupt> {
        match lits.len() {
            0 => Ok(self.sym.const_true),
            1 => Ok(lits[0]),
            _ => {
                let g = Lit::positive(self.handle.new_var());
                for &l in lits {
                    self.handle.add_clause_lits(&[!g, l]).map_err(Interrupt::from)?;
                }
                let mut back: Vec<Lit> = lits.iter().map(|&l| !l).collect();
                back.push(g);
                self.handle.add_clause_lits(&back).map_err(Interrupt::from)?;
                Ok(g)
            }
        }
    }

    /// Assumption literal meaning "the successor state escapes the location
    /// and variable part of `s`". The event part stays free: the successor
    /// commits to its next event independently.
    fn escape_lit(&mut self, s: &Cube) -> Result<Lit, Interrupt> {
        let map = self.sym.bitmap();
        let primed_state: Vec<Lit> = s
            .lits()
            .iter()
            .filter(|l| {
                !matches!(
                    map.classify(l.var()),
                    Some(crate::encode::BitClass::EventBit(_))
                )
            })
            .map(|&l| map.prime(l))
            .collect();
        let gate = self.define_and(&primed_state)?;
        Ok(!gate)
    }

    /// Enabledness gate of the exact transition combination taken from
    /// `state` under `event`: the event bit plus each participating
    /// automaton's transition enabledness.
    fn combo_gate(&mut self, state: &ExplicitState, event: EventId) -> Result<Lit, Interrupt> {
        let stepper = Stepper::new(&self.sym.system);
        let mut key = Vec::new();
        for &ai in stepper.declaring(event) {
            let t = stepper
                .enabled_transition(ai, state, event)
                .ok_or_else(|| {
                    Interrupt::Internal("model transition not enabled in the plant".into())
                })?;
            key.push((ai, t.index));
        }
        key.sort_unstable();
        if let Some(&g) = self.combo_gates.get(&(event, key.clone())) {
            return Ok(g);
        }
        let mut lits = vec![self.sym.bitmap().event_lit(event)];
        for &(ai, ti) in &key {
            lits.push(self.sym.enab_lit(ai, ti));
        }
        let g = self.define_and(&lits)?;
        self.combo_gates.insert((event, key), g);
        Ok(g)
    }

    fn insert_blocked(&mut self, s: &Cube, k: usize) -> Result<(), Interrupt> {
        let id = match self.cube_ids.get(s) {
            Some(&id) => id,
            None => {
                let act = self.guarded_clause(&s.negate())?;
                let id = self.clauses.len();
                self.clauses.push(FrameClause {
                    cube: s.clone(),
                    act,
                });
                self.cube_ids.insert(s.clone(), id);
                id
            }
        };
        for i in 1..=k {
            self.frames[i].insert(id);
        }
        Ok(())
    }

    fn add_supervisor_cube(&mut self, t: Cube, k: usize, s: &Cube) -> Result<(), Interrupt> {
        let mut lits = vec![!self.sym.ind_c];
        lits.extend(t.negate().lits().iter().copied());
        self.handle.add_clause_lits(&lits).map_err(Interrupt::from)?;
        let selector = cube_to_predicate(self.sym.bitmap(), &t)
            .map_err(|e| Interrupt::Internal(e.to_string()))?;
        self.supervisor.cubes.push(ForbiddenCube {
            cube: t,
            frame: k,
            blocked: s.clone(),
            selector,
        });
        Ok(())
    }

    /// Materialize the counterexample: walk the recorded uncontrollable
    /// events from the witness state, checking each step in the plant.
    fn build_path(
        &self,
        start: ExplicitState,
        first_event: Option<EventId>,
        chain: &[ChainLink],
    ) -> Result<CounterexamplePath, Interrupt> {
        let stepper = Stepper::new(&self.sym.system);
        let map = self.sym.bitmap();
        let mut cubes = Vec::new();
        let mut events = Vec::new();
        if let Some(e) = first_event {
            cubes.push(map.state_cube(&start, Some(e)));
            events.push(e);
        }
        for link in chain {
            cubes.push(link.cube.clone());
            if let Some(e) = link.step_event {
                events.push(e);
            }
        }
        let mut states = vec![start];
        for &e in &events {
            let cur = states.last().unwrap();
            let next = stepper.step(cur, e).ok_or_else(|| {
                Interrupt::Internal("counterexample step not enabled in the plant".into())
            })?;
            states.push(next);
        }
        if states.len() != cubes.len() {
            return Err(Interrupt::Internal(
                "counterexample chain length mismatch".into(),
            ));
        }
        // Each witness lands inside its cube; the cube's event literal is the
        // event taken onward, so the final state checks state bits only.
        debug_assert!(states.iter().enumerate().all(|(i, st)| {
            cubes[i].lits().iter().all(|l| {
                match map.classify(l.var()) {
                    Some(crate::encode::BitClass::EventBit(e)) => match events.get(i) {
                        Some(&ev) => l.eval(e == ev),
                        None => true,
                    },
                    _ => map.pair_satisfies(&Cube::new(vec![*l]), st, 0),
                }
            })
        }));
        if !stepper.is_forbidden(states.last().unwrap()) {
            return Err(Interrupt::Internal(
                "counterexample does not end in a forbidden state".into(),
            ));
        }
        Ok(CounterexamplePath {
            cubes,
            events,
            states,
        })
    }

    fn query(
        &mut self,
        cone: &str,
        frame: Option<usize>,
        assumptions: Vec<Lit>,
        cube: Option<&Cube>,
    ) -> Result<QueryResult, Interrupt> {
        if let Some(max) = self.opts.budget.max_seconds {
            if self.started.elapsed().as_secs_f64() > max {
                return Err(Interrupt::Budget(format!(
                    "wall clock budget of {max}s exhausted"
                )));
            }
        }
        self.query_counter += 1;
        self.stats.solver_calls += 1;
        let result = self.handle.solve(&assumptions).map_err(Interrupt::from)?;
        if self.opts.run_log.is_some() {
            let record = serde_json::json!({
                "query": self.query_counter,
                "frame": frame,
                "cone": cone,
                "verdict": if result.is_sat() { "sat" } else { "unsat" },
                "cube": cube.map(|c| self.sym.bitmap().describe_cube(c)),
            });
            if let Some(log) = self.opts.run_log.as_mut() {
                let _ = writeln!(log, "{record}");
            }
        }
        Ok(result)
    }

    /// Re-verify the trace invariants; wrong frames are an engine bug.
    fn audit_trace(&mut self, phase: &str) -> Result<(), Interrupt> {
        let n = self.top_frame();
        // (1) Clause sets weaken monotonically.
        for i in 1..n {
            if !self.frames[i + 1].is_subset(&self.frames[i]) {
                return Err(Interrupt::Internal(format!(
                    "after {phase}: frame {} is not a subset of frame {}",
                    i + 1,
                    i
                )));
            }
        }
        // (2) Every frame below the top implies the property.
        for i in 1..n {
            let mut assumptions = vec![self.loaded.act_inv_cur];
            assumptions.extend(self.frame_assumptions(i));
            assumptions.push(self.sym.bad);
            if let QueryResult::Satisfiable { .. } =
                self.query("audit_safe", Some(i), assumptions, None)?
            {
                return Err(Interrupt::Internal(format!(
                    "after {phase}: frame {i} admits a property violation"
                )));
            }
        }
        // (3) Image containment, explicitly, on small systems.
        if self.sym.system.state_count() <= 1000 {
            self.audit_images(phase)?;
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn frames_snapshot(&self) -> Vec<Vec<Cube>> {
        (0..self.frames.len()).map(|i| self.frame_cubes(i)).collect()
    }

    fn audit_images(&mut self, phase: &str) -> Result<(), Interrupt> {
        let sys = &self.sym.system;
        let map = self.sym.bitmap();
        let stepper = Stepper::new(sys);
        let states: Vec<ExplicitState> = crate::model::all_states(sys).collect();
        let n = self.top_frame();
        let in_frame = |frames: &Vec<BTreeSet<usize>>,
                        clauses: &Vec<FrameClause>,
                        i: usize,
                        state: &ExplicitState,
                        event: EventId| {
            frames[i].iter().all(|&id| {
                let cube = &clauses[id].cube;
                !map.pair_satisfies(cube, state, event)
            })
        };
        for i in 0..n {
            for state in &states {
                for event in 0..sys.events.len() {
                    let inside = if i == 0 {
                        *state == sys.initial_state()
                    } else {
                        in_frame(&self.frames, &self.clauses, i, state, event)
                    };
                    if !inside {
                        continue;
                    }
                    if self.supervisor.blocks_pair(self.sym, state, event) {
                        continue;
                    }
                    if let Some(next) = stepper.step(state, event) {
                        for next_event in 0..sys.events.len() {
                            if !in_frame(&self.frames, &self.clauses, i + 1, &next, next_event) {
                                return Err(Interrupt::Internal(format!(
                                    "after {phase}: image of frame {i} escapes frame {}",
                                    i + 1
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::gen_fig1;
    use crate::encode::{encode, EncodeLimits};
    use crate::model::{all_states, CmpOp, GuardExpr};

    fn fig1_sym() -> SymbolicSystem {
        encode(&gen_fig1(), &EncodeLimits::default()).unwrap()
    }

    fn opts_no_gen() -> SynthOptions {
        SynthOptions {
            inductive_generalization: false,
            ..SynthOptions::default()
        }
    }

    /// Evaluate "y != 2 or x <= 2" against a cube's variable intervals by
    /// enumerating the whole domain.
    fn guard_is_escape(sym: &SymbolicSystem, cube: &Cube) -> bool {
        let sys = &sym.system;
        let dec = crate::encode::cube_to_predicate(sym.bitmap(), cube).unwrap();
        let guard = dec.negated_guard(sys);
        for x in 0..=3i64 {
            for y in 0..=3i64 {
                let expect = !(y == 2 && x > 2);
                let got = eval(&guard, x, y);
                if got != expect {
                    return false;
                }
            }
        }
        true
    }

    fn eval(g: &GuardExpr, x: i64, y: i64) -> bool {
        match g {
            GuardExpr::True => true,
            GuardExpr::False => false,
            GuardExpr::Cmp { var, op, value } => {
                let v = if var == "x" { x } else { y };
                op.eval(v, *value)
            }
            GuardExpr::Not(i) => !eval(i, x, y),
            GuardExpr::And(ps) => ps.iter().all(|p| eval(p, x, y)),
            GuardExpr::Or(ps) => ps.iter().any(|p| eval(p, x, y)),
            GuardExpr::AtLocation { .. } => unreachable!(),
        }
    }

    #[test]
    fn fig1_synthesis_supervises_both_entries() {
        let sym = fig1_sym();
        let result = synthesize(&sym, SynthOptions::default()).unwrap();
        let controlled = match result {
            SynthesisResult::Controlled(c) => c,
            _ => panic!("expected a controlled verdict"),
        };
        let sys = &sym.system;
        // Exactly two supervisor cubes, on (l1, a) and (l2, b), both with a
        // variable part equivalent to y = 2 and x > 2.
        assert_eq!(controlled.supervisor.cubes.len(), 2);
        let mut sources = Vec::new();
        for fc in &controlled.supervisor.cubes {
            assert!(guard_is_escape(&sym, &fc.cube), "{:?}", fc.cube);
            assert_eq!(fc.selector.pos_locs.len(), 1);
            sources.push(fc.selector.pos_locs[0].1);
        }
        sources.sort_unstable();
        assert_eq!(sources, vec![1, 2]); // l1 and l2
        // The certificate went through and alpha/omega stay untouched.
        assert!(controlled.certificate.passed());
        let _ = sys;
    }

    #[test]
    fn fig1_invariant_matches_known_form_without_generalization() {
        let sym = fig1_sym();
        let result = synthesize(&sym, opts_no_gen()).unwrap();
        let controlled = match result {
            SynthesisResult::Controlled(c) => c,
            _ => panic!("expected controlled"),
        };
        let sys = &sym.system;
        let map = sym.bitmap();
        let alpha = sys.event_id("alpha").unwrap();
        // Semantic comparison by enumeration over every (state, event) pair:
        // the invariant must equal (!alpha | !l3 | y != 2 | x <= 2) & !l5.
        for state in all_states(sys) {
            for e in 0..sys.events.len() {
                let expect = state.locs[0] != 5
                    && !(e == alpha
                        && state.locs[0] == 3
                        && state.vals[1] == 2
                        && state.vals[0] > 2);
                let got = controlled
                    .invariant_cubes
                    .iter()
                    .all(|cube| !map.pair_satisfies(cube, &state, e));
                assert_eq!(got, expect, "state {state:?} event {e}");
            }
        }
        assert!(controlled.stats.iterations <= 5);
        assert!(controlled.stats.fixpoint_frame.is_some());
    }

    #[test]
    fn forbidden_initial_state_gives_empty_path() {
        let mut sys = gen_fig1();
        sys.automata[0].forbidden.push("l0".into());
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        match synthesize(&sym, SynthOptions::default()).unwrap() {
            SynthesisResult::Uncontrollable(path, _) => {
                assert_eq!(path.states.len(), 1);
                assert!(path.events.is_empty());
                assert_eq!(path.states[0], sys.initial_state());
            }
            _ => panic!("expected uncontrollable"),
        }
    }

    #[test]
    fn uncontrollable_chain_is_detected_and_replays() {
        // Everything uncontrollable and the hazard reachable without any
        // controllable point of no return.
        let mut sys = gen_fig1();
        for e in &mut sys.events {
            e.controllable = false;
        }
        // Make the l5 hazard fire on y = 2 regardless of x.
        sys.automata[0].transitions[6].guard = GuardExpr::cmp("y", CmpOp::Eq, 2);
        sys.automata[0].transitions[5].guard = GuardExpr::And(vec![
            GuardExpr::cmp("y", CmpOp::Ne, 2),
            GuardExpr::cmp("y", CmpOp::Eq, 99), // never
        ]);
        assert!(sys.validate().is_empty());
        let sym = encode(&sys, &EncodeLimits::default()).unwrap();
        match synthesize(&sym, SynthOptions::default()).unwrap() {
            SynthesisResult::Uncontrollable(path, _) => {
                let stepper = Stepper::new(&sys);
                assert!(crate::oracle::replay(&sys, &stepper, &path.to_state_path()));
            }
            _ => panic!("expected uncontrollable"),
        }
    }

    #[test]
    fn first_iteration_blocks_the_forbidden_location() {
        let sym = fig1_sym();
        let mut engine = Engine::new(&sym, opts_no_gen()).unwrap();
        assert!(engine.base_check().unwrap().is_none());
        engine.blocking_phase().unwrap();
        // After the first blocking phase the clause !l5 sits in frame 1.
        let f1 = engine.frame_cubes(1);
        assert_eq!(f1.len(), 1);
        let dec = crate::encode::cube_to_predicate(sym.bitmap(), &f1[0]).unwrap();
        assert_eq!(dec.pos_locs, vec![(0, 5)]);
        assert!(dec.event.is_none());
        assert!(dec.intervals.is_empty());
    }

    #[test]
    fn trace_reaches_fixpoint_with_equal_adjacent_frames() {
        let sym = fig1_sym();
        let mut engine = Engine::new(&sym, opts_no_gen()).unwrap();
        assert!(engine.base_check().unwrap().is_none());
        let mut rounds = 0;
        loop {
            rounds += 1;
            engine.blocking_phase().unwrap();
            engine.propagate().unwrap();
            if let Some(i) = engine.check_fixpoint() {
                // Adjacent equal frames hold the invariant.
                assert_eq!(engine.frame_cubes(i), engine.frame_cubes(i + 1));
                assert_eq!(engine.frame_cubes(i).len(), 2);
                break;
            }
            assert!(rounds < 10, "no fixpoint after {rounds} rounds");
        }
        assert_eq!(rounds, 3);
        // Frame subset invariant held throughout.
        let frames = engine.frames_snapshot();
        for i in 1..frames.len() - 1 {
            for cube in &frames[i + 1] {
                assert!(frames[i].contains(cube));
            }
        }
    }

    #[test]
    fn blocking_a_cube_with_no_preimage_only_inserts() {
        let sym = fig1_sym();
        let mut engine = Engine::new(&sym, opts_no_gen()).unwrap();
        assert!(engine.base_check().unwrap().is_none());
        // {l5} has no preimage from the initial frame.
        let cube = Cube::new(vec![sym.bitmap().loc_lit(0, 5)]);
        engine.block_cube(&cube, 1).unwrap();
        assert_eq!(engine.frame_cubes(1), vec![cube]);
        assert!(engine.supervisor().cubes.is_empty());
    }

    #[test]
    fn budget_zero_seconds_is_inconclusive() {
        let sym = fig1_sym();
        let opts = SynthOptions {
            budget: Budget {
                max_seconds: Some(0.0),
                ..Budget::default()
            },
            ..SynthOptions::default()
        };
        match synthesize(&sym, opts).unwrap() {
            SynthesisResult::Inconclusive(inc) => {
                assert!(inc.reason.contains("wall clock"));
            }
            _ => panic!("expected inconclusive"),
        }
    }

    #[test]
    fn debug_invariants_hold_on_fig1() {
        let sym = fig1_sym();
        let opts = SynthOptions {
            debug_invariants: true,
            ..SynthOptions::default()
        };
        match synthesize(&sym, opts).unwrap() {
            SynthesisResult::Controlled(_) => {}
            _ => panic!("expected controlled"),
        }
    }

    #[test]
    fn run_log_emits_one_record_per_query() {
        use std::sync::{Arc, Mutex};

        struct Sink(Arc<Mutex<Vec<u8>>>);
        impl Write for Sink {
            fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(buf);
                Ok(buf.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }

        let sym = fig1_sym();
        let buf = Arc::new(Mutex::new(Vec::new()));
        let opts = SynthOptions {
            run_log: Some(Box::new(Sink(buf.clone()))),
            ..SynthOptions::default()
        };
        let result = synthesize(&sym, opts).unwrap();
        let calls = result.stats().solver_calls;
        let text = String::from_utf8(buf.lock().unwrap().clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len() as u64, calls);
        for line in lines {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.get("cone").is_some());
            assert!(v.get("verdict").is_some());
        }
    }
}
