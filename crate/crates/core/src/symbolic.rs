//! Symbolic reachability over a Boolean encoding of the abstract state
//! space.
//!
//! Each allowed constraint of the abstraction table owns one BDD variable
//! (plus a primed twin); a constraint with the clocks in the opposite
//! order is the negation of a stored variable. Locations live in a
//! separate bit block that the step relations never touch. Time elapse and
//! single-clock resets are relations over unprimed/primed predicate
//! variables; edges are applied one at a time, never through a monolithic
//! transition relation. Every state formula is kept 2-reduced: conjoining
//! the `reduce2` constraint removes minterms that contradict themselves
//! through constraint paths of length one or two.

use crate::automaton::TimedAutomaton;
use crate::bdd::{BddError, Formula, Manager, VarClass, VarId};
use crate::bounds::{Bound, ClockIndex};
use crate::dbm::{AtomicGuard, Dbm};
use crate::domain::AbstractDomain;
use crate::report::{SymStats, Verdict};
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SymError {
    #[error(transparent)]
    Bdd(#[from] BddError),
    #[error("guard constraint {0} missing from the abstraction table")]
    GuardNotInDomain(String),
    #[error("minterm decodes to invalid location code {0}")]
    InvalidLocationCode(usize),
    #[error("trace extraction found no applicable step")]
    NoStepApplies,
}

/// Maps every allowed constraint of a domain to a BDD variable. Location
/// bits come first; each predicate variable is immediately followed by its
/// primed twin. Regeneration after a refinement keeps existing variable
/// ids and appends the new constraints.
pub struct PredicateTable {
    pub dim: usize,
    pub location_bits: u32,
    pub num_locations: usize,
    /// Constraint `(x, y, bound)` with `x < y` in clock order, per
    /// predicate index.
    pub constraints: Vec<(ClockIndex, ClockIndex, Bound)>,
    index: HashMap<(ClockIndex, ClockIndex, Bound), usize>,
}

/// A literal in the encoding: variable id and polarity.
pub type Literal = (VarId, bool);

impl PredicateTable {
    pub fn build(
        domain: &AbstractDomain,
        num_locations: usize,
        prev: Option<&PredicateTable>,
    ) -> PredicateTable {
        let bits = (usize::BITS - (num_locations.max(2) - 1).leading_zeros()) as u32;
        let mut table = PredicateTable {
            dim: domain.dim(),
            location_bits: bits,
            num_locations,
            constraints: Vec::new(),
            index: HashMap::new(),
        };
        if let Some(prev) = prev {
            for &c in &prev.constraints {
                table.push_constraint(c);
            }
        }
        for x in 0..domain.dim() {
            for y in x + 1..domain.dim() {
                for &b in domain.bounds(x, y) {
                    table.push_constraint((x, y, b));
                }
            }
        }
        table
    }

    fn push_constraint(&mut self, c: (ClockIndex, ClockIndex, Bound)) {
        if !self.index.contains_key(&c) {
            self.index.insert(c, self.constraints.len());
            self.constraints.push(c);
        }
    }

    pub fn num_predicates(&self) -> usize {
        self.constraints.len()
    }

    pub fn pred_var(&self, idx: usize) -> VarId {
        self.location_bits + 2 * idx as u32
    }

    pub fn pred_var_primed(&self, idx: usize) -> VarId {
        self.location_bits + 2 * idx as u32 + 1
    }

    pub fn is_unprimed_pred(&self, v: VarId) -> bool {
        v >= self.location_bits && (v - self.location_bits) % 2 == 0
    }

    pub fn is_primed_pred(&self, v: VarId) -> bool {
        v >= self.location_bits && (v - self.location_bits) % 2 == 1
    }

    pub fn unprimed_vars(&self) -> Vec<VarId> {
        (0..self.num_predicates()).map(|i| self.pred_var(i)).collect()
    }

    pub fn primed_vars(&self) -> Vec<VarId> {
        (0..self.num_predicates())
            .map(|i| self.pred_var_primed(i))
            .collect()
    }

    pub fn location_vars(&self) -> Vec<VarId> {
        (0..self.location_bits).collect()
    }

    /// The literal for the constraint `x - y ≺ k`: the stored variable
    /// when `x < y`, the negated mirror variable otherwise.
    pub fn literal(&self, x: ClockIndex, y: ClockIndex, b: Bound) -> Option<Literal> {
        if x < y {
            self.index.get(&(x, y, b)).map(|&i| (self.pred_var(i), true))
        } else {
            self.index
                .get(&(y, x, b.negated()))
                .map(|&i| (self.pred_var(i), false))
        }
    }

    /// All bounds of the table for the ordered pair `(x, y)`, each with
    /// its literal.
    pub fn pair_literals(&self, x: ClockIndex, y: ClockIndex) -> Vec<(Bound, Literal)> {
        let mut out = Vec::new();
        for (i, &(cx, cy, b)) in self.constraints.iter().enumerate() {
            if (cx, cy) == (x, y) {
                out.push((b, (self.pred_var(i), true)));
            } else if (cx, cy) == (y, x) {
                out.push((b.negated(), (self.pred_var(i), false)));
            }
        }
        out
    }

    /// Location encoding as a minterm over the location bits.
    pub fn enc_location(&self, m: &mut Manager, loc: usize) -> Result<Formula, BddError> {
        let mut f = m.mk_true();
        for bit in 0..self.location_bits {
            let lit = m.mk_literal(bit, loc >> bit & 1 == 1)?;
            f = m.and(f, lit)?;
        }
        Ok(f)
    }

    pub fn decode_location(&self, assignment: &[bool]) -> usize {
        let mut loc = 0usize;
        for bit in 0..self.location_bits as usize {
            if assignment[bit] {
                loc |= 1 << bit;
            }
        }
        loc
    }

    /// All variables of a full state minterm: location bits then unprimed
    /// predicate variables.
    pub fn state_support(&self) -> Vec<VarId> {
        let mut v = self.location_vars();
        v.extend(self.unprimed_vars());
        v
    }
}

/// A total assignment over location bits and unprimed predicate variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AbstractMinterm {
    pub loc: usize,
    /// Truth value per predicate index.
    pub preds: Vec<bool>,
}

impl AbstractMinterm {
    fn from_assignment(table: &PredicateTable, assignment: &[bool]) -> AbstractMinterm {
        let loc = table.decode_location(assignment);
        let preds = (0..table.num_predicates())
            .map(|i| assignment[table.location_bits as usize + 2 * i])
            .collect();
        AbstractMinterm { loc, preds }
    }
}

/// Step labels of extracted traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymAction {
    Up,
    REmpty,
    Reset(ClockIndex),
}

/// One extracted abstract counterexample: `minterms[i] --actions[i]-->
/// minterms[i+1]`, plus the automaton edges applied along the way.
#[derive(Clone, Debug)]
pub struct SymTrace {
    pub minterms: Vec<AbstractMinterm>,
    pub actions: Vec<SymAction>,
    pub edges: Vec<usize>,
}

/// Symbolic engine state for one abstraction table.
pub struct SymContext<'a> {
    pub ta: &'a TimedAutomaton,
    pub table: PredicateTable,
    pub mgr: Manager,
    pub reduce2: Formula,
    pub layers_explored: usize,
    s_up: Formula,
    s_reset: Vec<Formula>,
}

impl<'a> SymContext<'a> {
    pub fn new(
        ta: &'a TimedAutomaton,
        domain: &AbstractDomain,
        prev: Option<&PredicateTable>,
        budget: usize,
    ) -> Result<SymContext<'a>, SymError> {
        let table = PredicateTable::build(domain, ta.num_locations(), prev);
        let mut mgr = Manager::with_budget(budget);
        let reduce2 = build_reduce2(&table, &mut mgr)?;
        let s_up = build_s_up(&table, &mut mgr)?;
        let mut s_reset = Vec::new();
        for z in 1..table.dim {
            s_reset.push(build_s_reset(&table, &mut mgr, z)?);
        }
        Ok(SymContext {
            ta,
            table,
            mgr,
            reduce2,
            layers_explored: 0,
            s_up,
            s_reset,
        })
    }

    pub fn s_up(&self) -> Formula {
        self.s_up
    }

    pub fn s_reset(&self, z: ClockIndex) -> Formula {
        self.s_reset[z - 1]
    }

    /// Conjunction of the literals of a guard. Guards are represented
    /// exactly: every atom must be in the table.
    pub fn alpha_guard(&mut self, guard: &[AtomicGuard]) -> Result<Formula, SymError> {
        let mut f = self.mgr.mk_true();
        for a in guard {
            let (var, pos) = self.table.literal(a.x, a.y, a.bound).ok_or_else(|| {
                SymError::GuardNotInDomain(format!("{}-{} {}", a.x, a.y, a.bound))
            })?;
            let lit = self.mgr.mk_literal(var, pos)?;
            f = self.mgr.and(f, lit)?;
        }
        Ok(f)
    }

    /// Relational image: quantify unprimed predicate variables, rename the
    /// primed block down. Location bits pass through untouched.
    pub fn post_rel(&mut self, s: Formula, r: Formula) -> Result<Formula, SymError> {
        let conj = self.mgr.and(s, r)?;
        let vars = self.table.unprimed_vars();
        let projected = self.mgr.exists(conj, &vars)?;
        let bits = self.table.location_bits;
        let classify = move |v: VarId| {
            if v < bits {
                VarClass::Keep
            } else if (v - bits) % 2 == 1 {
                VarClass::Shift
            } else {
                VarClass::Forbidden
            }
        };
        Ok(self.mgr.rename_shift(projected, -1, &classify)?)
    }

    /// Relational preimage: rename the state onto the primed block,
    /// conjoin, quantify the primed block away.
    pub fn pre_rel(&mut self, s: Formula, r: Formula) -> Result<Formula, SymError> {
        let bits = self.table.location_bits;
        let classify = move |v: VarId| {
            if v < bits {
                VarClass::Keep
            } else if (v - bits) % 2 == 0 {
                VarClass::Shift
            } else {
                VarClass::Forbidden
            }
        };
        let renamed = self.mgr.rename_shift(s, 1, &classify)?;
        let conj = self.mgr.and(renamed, r)?;
        let vars = self.table.primed_vars();
        Ok(self.mgr.exists(conj, &vars)?)
    }

    /// Abstract time elapse: image through the up relation, re-reduced.
    pub fn up_op(&mut self, a: Formula) -> Result<Formula, SymError> {
        let rel = self.s_up;
        let img = self.post_rel(a, rel)?;
        Ok(self.mgr.and(img, self.reduce2)?)
    }

    /// Abstract single-clock reset: image through the reset relation,
    /// re-reduced.
    pub fn reset_op(&mut self, a: Formula, z: ClockIndex) -> Result<Formula, SymError> {
        let rel = self.s_reset(z);
        let img = self.post_rel(a, rel)?;
        Ok(self.mgr.and(img, self.reduce2)?)
    }

    /// Disjunction of the images through every edge: guard filtering,
    /// location switch, then the resets in order.
    pub fn apply_edges(&mut self, a: Formula) -> Result<Formula, SymError> {
        let mut out = self.mgr.mk_false();
        for e in 0..self.ta.edges.len() {
            let img = self.apply_one_edge(a, e)?;
            out = self.mgr.or(out, img)?;
        }
        Ok(out)
    }

    fn apply_one_edge(&mut self, a: Formula, e: usize) -> Result<Formula, SymError> {
        let ta = self.ta;
        let edge = &ta.edges[e];
        let guard = self.alpha_guard(&edge.guard)?;
        let enc_src = self.table.enc_location(&mut self.mgr, edge.src)?;
        let mut f = self.mgr.and(a, enc_src)?;
        let locs = self.table.location_vars();
        f = self.mgr.exists(f, &locs)?;
        f = self.mgr.and(f, guard)?;
        for &r in &edge.resets {
            if f == self.mgr.mk_false() {
                break;
            }
            f = self.reset_op(f, r)?;
        }
        let enc_dst = self.table.enc_location(&mut self.mgr, edge.dst)?;
        Ok(self.mgr.and(f, enc_dst)?)
    }

    /// The abstraction of the zero valuation: one minterm fixing every
    /// predicate to its truth at the origin.
    pub fn initial_formula(&mut self) -> Result<Formula, SymError> {
        let mut f = self.table.enc_location(&mut self.mgr, self.ta.initial)?;
        for i in 0..self.table.num_predicates() {
            let (_, _, b) = self.table.constraints[i];
            let lit = self
                .mgr
                .mk_literal(self.table.pred_var(i), b >= Bound::LE_ZERO)?;
            f = self.mgr.and(f, lit)?;
        }
        Ok(f)
    }

    /// Concretizes a minterm: decoded location and the zone obtained from
    /// the positive literals plus the reflected complements of the
    /// negative ones, over non-negative valuations.
    pub fn concretize(&self, v: &AbstractMinterm) -> Result<(usize, Dbm), SymError> {
        if v.loc >= self.table.num_locations {
            return Err(SymError::InvalidLocationCode(v.loc));
        }
        let mut z = Dbm::universe(self.table.dim);
        for (i, &(x, y, b)) in self.table.constraints.iter().enumerate() {
            if v.preds[i] {
                z.constrain(AtomicGuard::new(x, y, b));
            } else {
                z.constrain(AtomicGuard::new(y, x, b.negated()));
            }
        }
        Ok((v.loc, z.canonicalize()))
    }

    /// Formula with exactly this minterm's predicate part (location bits
    /// unconstrained).
    pub fn minterm_pred_formula(&mut self, v: &AbstractMinterm) -> Result<Formula, SymError> {
        let mut f = self.mgr.mk_true();
        for i in 0..self.table.num_predicates() {
            let lit = self.mgr.mk_literal(self.table.pred_var(i), v.preds[i])?;
            f = self.mgr.and(f, lit)?;
        }
        Ok(f)
    }

    fn pick_state(&mut self, f: Formula) -> Option<AbstractMinterm> {
        let support = self.table.state_support();
        let assignment = self.mgr.pick_minterm(f, &support)?;
        Some(AbstractMinterm::from_assignment(&self.table, &assignment))
    }
}

fn build_literal(m: &mut Manager, lit: Literal) -> Result<Formula, BddError> {
    m.mk_literal(lit.0, lit.1)
}

/// The 2-reduction constraint: a stored predicate must hold whenever a
/// same-pair tighter constraint holds or a two-step path through a third
/// clock derives it.
fn build_reduce2(table: &PredicateTable, m: &mut Manager) -> Result<Formula, BddError> {
    let dim = table.dim;
    let mut out = m.mk_true();
    for x in 0..dim {
        for y in 0..dim {
            if x == y {
                continue;
            }
            for (target, target_lit) in table.pair_literals(x, y) {
                let mut rhs = m.mk_false();
                for (b, lit) in table.pair_literals(x, y) {
                    if b < target {
                        let l = build_literal(m, lit)?;
                        rhs = m.or(rhs, l)?;
                    }
                }
                for z in 0..dim {
                    if z == x || z == y {
                        continue;
                    }
                    for (b1, lit1) in table.pair_literals(x, z) {
                        for (b2, lit2) in table.pair_literals(z, y) {
                            if b1.add(b2) <= target {
                                let l1 = build_literal(m, lit1)?;
                                let l2 = build_literal(m, lit2)?;
                                let conj = m.and(l1, l2)?;
                                rhs = m.or(rhs, conj)?;
                            }
                        }
                    }
                }
                let tgt = build_literal(m, target_lit)?;
                let imp = m.implies(rhs, tgt)?;
                out = m.and(out, imp)?;
            }
        }
    }
    Ok(out)
}

/// Time-elapse relation: upper bounds may only be dropped, lower bounds
/// only gained, diagonals preserved. Over the stored variables this reads:
/// reference-pair variables obey `p -> p'`, diagonal variables `p <-> p'`.
/// The relation is intentionally not a function.
fn build_s_up(table: &PredicateTable, m: &mut Manager) -> Result<Formula, BddError> {
    let mut out = m.mk_true();
    for i in 0..table.num_predicates() {
        let (x, y, _) = table.constraints[i];
        let p = m.mk_var(table.pred_var(i))?;
        let p_prime = m.mk_var(table.pred_var_primed(i))?;
        let conj = if x == 0 {
            // Pair (0, y) stores both the lower bounds of y and (negated)
            // its upper bounds; time elapse can only turn the stored
            // variable true.
            m.implies(p, p_prime)?
        } else {
            debug_assert!(y != 0, "pairs are stored with the smaller clock first");
            m.iff(p, p_prime)?
        };
        out = m.and(out, conj)?;
    }
    Ok(out)
}

/// Reset relation for one clock `zc`: predicates relating `zc` to the
/// reference clock get their exact truth at zero, diagonals against `zc`
/// are implied by the corresponding bound on the other clock (plus the
/// trivially true non-negative ones), and pairs not involving `zc` are
/// frozen.
fn build_s_reset(
    table: &PredicateTable,
    m: &mut Manager,
    zc: ClockIndex,
) -> Result<Formula, BddError> {
    let dim = table.dim;
    let mut out = m.mk_true();

    for i in 0..table.num_predicates() {
        let (x, y, b) = table.constraints[i];
        if (x, y) == (0, zc) {
            // After the reset `0 - zc = 0`: the constraint holds exactly
            // when its bound admits zero.
            let lit = m.mk_literal(table.pred_var_primed(i), b >= Bound::LE_ZERO)?;
            out = m.and(out, lit)?;
        } else if x != zc && y != zc {
            // Pairs not involving the reset clock are untouched.
            let p = m.mk_var(table.pred_var(i))?;
            let pp = m.mk_var(table.pred_var_primed(i))?;
            let eq = m.iff(p, pp)?;
            out = m.and(out, eq)?;
        }
    }

    // Primed literal of a constraint (the twin of the stored variable).
    let lit_primed = |x: ClockIndex, y: ClockIndex, b: Bound| -> Literal {
        let (v, pos) = table.literal(x, y, b).expect("constraint in table");
        (v + 1, pos)
    };

    for other in 1..dim {
        if other == zc {
            continue;
        }
        // x - zc ≺ k becomes x - 0 ≺ k: implied by any upper bound
        // (l, ≺') <= (k, ≺) on x.
        for (k, _) in table.pair_literals(other, zc) {
            let mut any = m.mk_false();
            for (l, lit) in table.pair_literals(other, 0) {
                if l <= k {
                    let f = build_literal(m, lit)?;
                    any = m.or(any, f)?;
                }
            }
            let tgt = build_literal(m, lit_primed(other, zc, k))?;
            let imp = m.implies(any, tgt)?;
            out = m.and(out, imp)?;
        }
        // zc - y ≺ k becomes 0 - y ≺ k: implied by any lower bound
        // (l, ≺') <= (k, ≺) on y; the non-negative ones hold outright.
        for (k, _) in table.pair_literals(zc, other) {
            let mut any = m.mk_false();
            for (l, lit) in table.pair_literals(0, other) {
                if l <= k {
                    let f = build_literal(m, lit)?;
                    any = m.or(any, f)?;
                }
            }
            let tgt = build_literal(m, lit_primed(zc, other, k))?;
            let imp = m.implies(any, tgt)?;
            out = m.and(out, imp)?;
            if k >= Bound::LE_ZERO {
                let f = build_literal(m, lit_primed(zc, other, k))?;
                out = m.and(out, f)?;
            }
        }
    }
    Ok(out)
}

/// Result of one symbolic reachability run under a fixed table.
pub enum SymReach {
    NotReachable,
    Trace(SymTrace),
}

/// Breadth-first reachability: `layers[i]` holds the states first reached
/// after `i + 1` rounds of elapse-then-edge.
pub fn sym_reach(ctx: &mut SymContext) -> Result<SymReach, SymError> {
    let init = ctx.initial_formula()?;
    let init = ctx.mgr.and(init, ctx.reduce2)?;
    let target_enc = ctx.table.enc_location(&mut ctx.mgr, ctx.ta.target)?;

    let hit0 = ctx.mgr.and(init, target_enc)?;
    if hit0 != ctx.mgr.mk_false() {
        let m0 = ctx.pick_state(hit0).expect("non-false formula");
        return Ok(SymReach::Trace(SymTrace {
            minterms: vec![m0],
            actions: Vec::new(),
            edges: Vec::new(),
        }));
    }

    let mut layers: Vec<Formula> = Vec::new();
    let mut reachable = ctx.mgr.mk_false();
    let mut nexts = init;
    loop {
        let not_reach = ctx.mgr.not(reachable)?;
        let frontier = ctx.mgr.and(nexts, not_reach)?;
        if frontier == ctx.mgr.mk_false() {
            return Ok(SymReach::NotReachable);
        }
        reachable = ctx.mgr.or(reachable, frontier)?;
        let up = ctx.up_op(frontier)?;
        let stepped = ctx.apply_edges(up)?;
        let not_reach = ctx.mgr.not(reachable)?;
        nexts = ctx.mgr.and(stepped, not_reach)?;
        layers.push(nexts);
        ctx.layers_explored = ctx.layers_explored.max(layers.len());
        let hit = ctx.mgr.and(nexts, target_enc)?;
        if hit != ctx.mgr.mk_false() {
            return Ok(SymReach::Trace(extract_trace(ctx, init, &layers)?));
        }
    }
}

/// Walks the layer list backwards, finding for each layer an edge and the
/// intermediate minterms connecting it to the previous one. Step order per
/// transition: one up step, then the edge's resets (or an `r_empty` marker
/// when it has none). Every emitted step is checked against its relation.
fn extract_trace(
    ctx: &mut SymContext,
    init: Formula,
    layers: &[Formula],
) -> Result<SymTrace, SymError> {
    let target_enc = ctx.table.enc_location(&mut ctx.mgr, ctx.ta.target)?;
    let last = layers.len() - 1;
    let hit = ctx.mgr.and(layers[last], target_enc)?;
    let mut cur = ctx.pick_state(hit).ok_or(SymError::NoStepApplies)?;

    let mut rev_minterms = vec![cur.clone()];
    let mut rev_actions: Vec<SymAction> = Vec::new();
    let mut rev_edges: Vec<usize> = Vec::new();

    for layer_idx in (0..=last).rev() {
        let prev_set = if layer_idx == 0 {
            init
        } else {
            layers[layer_idx - 1]
        };
        let (prev, actions, targets, edge) = step_back(ctx, prev_set, &cur)?;
        // Targets are forward-ordered and end at `cur`; push the sources
        // of each action, walking backwards.
        for i in (0..actions.len()).rev() {
            rev_actions.push(actions[i]);
            let src = if i == 0 {
                prev.clone()
            } else {
                targets[i - 1].clone()
            };
            rev_minterms.push(src);
        }
        rev_edges.push(edge);
        cur = prev;
    }

    rev_minterms.reverse();
    rev_actions.reverse();
    rev_edges.reverse();
    Ok(SymTrace {
        minterms: rev_minterms,
        actions: rev_actions,
        edges: rev_edges,
    })
}

/// Finds an edge and a chain `prev --up--> t0 --r(x1)--> ... --> cur` with
/// `prev` in `prev_set`. Returns the predecessor minterm, the actions with
/// their target minterms in forward order, and the edge index.
fn step_back(
    ctx: &mut SymContext,
    prev_set: Formula,
    cur: &AbstractMinterm,
) -> Result<(AbstractMinterm, Vec<SymAction>, Vec<AbstractMinterm>, usize), SymError> {
    let cur_pred = ctx.minterm_pred_formula(cur)?;
    'edges: for e in 0..ctx.ta.edges.len() {
        let edge = ctx.ta.edges[e].clone();
        if edge.dst != cur.loc {
            continue;
        }
        // Backward sets through the resets: sets[i] holds the admissible
        // states just before the i-th reset; the last entry is `cur`.
        let mut sets = vec![cur_pred];
        for &r in edge.resets.iter().rev() {
            let s = *sets.last().unwrap();
            let rel = ctx.s_reset(r);
            let pre = ctx.pre_rel(s, rel)?;
            let pre = ctx.mgr.and(pre, ctx.reduce2)?;
            if pre == ctx.mgr.mk_false() {
                continue 'edges;
            }
            sets.push(pre);
        }
        sets.reverse();
        let guard = ctx.alpha_guard(&edge.guard)?;
        let before_resets = ctx.mgr.and(sets[0], guard)?;
        if before_resets == ctx.mgr.mk_false() {
            continue;
        }
        // Up predecessors inside the previous layer at the edge source.
        let enc_src = ctx.table.enc_location(&mut ctx.mgr, edge.src)?;
        let prev_at_src = ctx.mgr.and(prev_set, enc_src)?;
        let locs = ctx.table.location_vars();
        let prev_preds = ctx.mgr.exists(prev_at_src, &locs)?;
        let up_rel = ctx.s_up();
        let up_pre = ctx.pre_rel(before_resets, up_rel)?;
        let candidates = ctx.mgr.and(up_pre, prev_preds)?;
        let Some(mut prev) = ctx.pick_state(candidates) else {
            continue;
        };
        prev.loc = edge.src;

        // Forward re-materialization, constrained by the backward sets so
        // every pick chains to `cur`.
        let mut actions = Vec::new();
        let mut targets = Vec::new();
        let prev_formula = ctx.minterm_pred_formula(&prev)?;
        let up_img = ctx.up_op(prev_formula)?;
        let t0_set = ctx.mgr.and(up_img, before_resets)?;
        let mut at = ctx.pick_state(t0_set).ok_or(SymError::NoStepApplies)?;
        at.loc = edge.src;
        actions.push(SymAction::Up);
        targets.push(at.clone());
        if edge.resets.is_empty() {
            let mut landed = at.clone();
            landed.loc = edge.dst;
            actions.push(SymAction::REmpty);
            targets.push(landed);
        } else {
            for (i, &r) in edge.resets.iter().enumerate() {
                let at_formula = ctx.minterm_pred_formula(&at)?;
                let img = ctx.reset_op(at_formula, r)?;
                let constrained = ctx.mgr.and(img, sets[i + 1])?;
                let mut next = ctx.pick_state(constrained).ok_or(SymError::NoStepApplies)?;
                next.loc = edge.dst;
                actions.push(SymAction::Reset(r));
                targets.push(next.clone());
                at = next;
            }
        }
        debug_assert_eq!(targets.last().unwrap().preds, cur.preds);
        verify_steps(ctx, &prev, &actions, &targets)?;
        return Ok((prev, actions, targets, e));
    }
    Err(SymError::NoStepApplies)
}

/// Asserts that every emitted step is a member of its relation.
fn verify_steps(
    ctx: &mut SymContext,
    prev: &AbstractMinterm,
    actions: &[SymAction],
    targets: &[AbstractMinterm],
) -> Result<(), SymError> {
    let mut at = prev.clone();
    for (a, m) in actions.iter().zip(targets) {
        let from = ctx.minterm_pred_formula(&at)?;
        let to = ctx.minterm_pred_formula(m)?;
        let img = match a {
            SymAction::Up => ctx.up_op(from)?,
            SymAction::Reset(x) => ctx.reset_op(from, *x)?,
            SymAction::REmpty => from,
        };
        let both = ctx.mgr.and(img, to)?;
        if both == ctx.mgr.mk_false() {
            return Err(SymError::NoStepApplies);
        }
        at = m.clone();
    }
    Ok(())
}

/// Concrete replay of an abstract trace: the zone chain starts at the
/// origin and each step applies the concrete action, then intersects with
/// the concretization of the trace minterm. The trace is realizable iff
/// the last zone is non-empty.
pub fn replay(ctx: &SymContext, trace: &SymTrace) -> Result<Vec<Dbm>, SymError> {
    let dim = ctx.table.dim;
    let (_, cell0) = ctx.concretize(&trace.minterms[0])?;
    let mut chain = vec![Dbm::zero(dim).intersect(&cell0)];
    for (a, m) in trace.actions.iter().zip(&trace.minterms[1..]) {
        let prev = chain.last().unwrap();
        let stepped = if prev.is_empty() {
            prev.clone()
        } else {
            match a {
                SymAction::Up => prev.up(),
                SymAction::Reset(x) => prev.reset_clock(*x),
                SymAction::REmpty => prev.clone(),
            }
        };
        let (_, cell) = ctx.concretize(m)?;
        chain.push(stepped.intersect(&cell));
    }
    Ok(chain)
}

/// Which refinement case fired for a spurious trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefineCase {
    EmptyMinterm,
    PredecessorSplit,
    Up,
    Reset,
}

/// Refines the domain to exclude a spurious trace. At the failure index,
/// exactly one case applies: the successor minterm is unsatisfiable, or
/// its concrete predecessors exist in the current cell but miss the
/// reachable states, or there are no predecessors at all and the step
/// relation itself was too coarse.
pub fn refine_spurious(
    ctx: &SymContext,
    trace: &SymTrace,
    chain: &[Dbm],
    domain: &AbstractDomain,
) -> Result<(AbstractDomain, RefineCase), SymError> {
    let i0 = chain
        .iter()
        .rposition(|z| !z.is_empty())
        .expect("the initial zone is never empty");
    assert!(i0 + 1 < chain.len(), "trace was realizable");
    let action = trace.actions[i0];
    let (_, next_cell) = ctx.concretize(&trace.minterms[i0 + 1])?;
    let (_, cur_cell) = ctx.concretize(&trace.minterms[i0])?;

    // Case 1: the successor minterm concretizes to the empty zone.
    if next_cell.is_empty() {
        let refined = refine_empty_minterm(ctx, &trace.minterms[i0 + 1], domain);
        return Ok((refined, RefineCase::EmptyMinterm));
    }

    let pre_c = match action {
        SymAction::Up => next_cell.down(),
        SymAction::Reset(x) => next_cell.free(x),
        SymAction::REmpty => next_cell.clone(),
    };

    // Case 2: concrete predecessors inside the current cell, none of them
    // reachable; separate the predecessors from the reachable zone.
    if !pre_c.intersect(&cur_cell).is_empty() {
        let refined = refine_by_interpolant(domain, &pre_c, &chain[i0])
            .expect("predecessors are disjoint from the reachable zone here");
        return Ok((refined, RefineCase::PredecessorSplit));
    }

    // Case 3: the abstract step relation was too coarse.
    match action {
        SymAction::Up => {
            let refined = refine_by_interpolant(domain, &cur_cell.up(), &next_cell.down())
                .expect("time-successor and time-predecessor cones are disjoint here");
            Ok((refined, RefineCase::Up))
        }
        SymAction::Reset(x) => {
            // The freed cones can fail to separate when the successor cell
            // is not closed under the reset (possible with spuriously
            // chosen diagonal literals); the reset image itself always is.
            let refined = refine_by_interpolant(domain, &cur_cell.free(x), &next_cell.free(x))
                .unwrap_or_else(|| {
                    refine_by_interpolant(domain, &cur_cell.reset_clock(x), &next_cell)
                        .expect("reset image is disjoint from the successor cell here")
                });
            Ok((refined, RefineCase::Reset))
        }
        SymAction::REmpty => unreachable!("an identity step cannot be the failing step"),
    }
}

fn refine_by_interpolant(
    domain: &AbstractDomain,
    container: &Dbm,
    excluded: &Dbm,
) -> Option<AbstractDomain> {
    match crate::interpolate::minimal_interpolant(container, excluded) {
        crate::interpolate::MinInterp::Separated { interpolant, .. } => {
            Some(domain.refine_with(interpolant.cycle_constraints()))
        }
        crate::interpolate::MinInterp::Intersecting => None,
    }
}

/// Case-1 refinement: the minterm's constraint graph has a negative
/// cycle; adding the cycle's single steps and its prefix sums makes the
/// contradiction derivable by paths of length two, so the minterm fails
/// the refined reduction.
fn refine_empty_minterm(
    ctx: &SymContext,
    v: &AbstractMinterm,
    domain: &AbstractDomain,
) -> AbstractDomain {
    let dim = ctx.table.dim;
    let mut enc = Dbm::unconstrained(dim);
    for (i, &(x, y, b)) in ctx.table.constraints.iter().enumerate() {
        let (cx, cy, cb) = if v.preds[i] {
            (x, y, b)
        } else {
            (y, x, b.negated())
        };
        if cb < enc.get(cx, cy) {
            enc.set(cx, cy, cb);
        }
    }
    // Concretization lives in the non-negative orthant.
    for x in 1..dim {
        if Bound::LE_ZERO < enc.get(0, x) {
            enc.set(0, x, Bound::LE_ZERO);
        }
    }
    let cycle = negative_cycle(&enc).expect("empty minterm must close a negative cycle");
    let mut constraints = Vec::new();
    for i in 0..cycle.len() {
        let (x, y) = (cycle[i], cycle[(i + 1) % cycle.len()]);
        constraints.push((x, y, enc.get(x, y)));
    }
    let mut sum = Bound::LE_ZERO;
    for j in 1..cycle.len() {
        sum = sum.add(enc.get(cycle[j - 1], cycle[j]));
        if cycle[0] != cycle[j] {
            constraints.push((cycle[0], cycle[j], sum));
        }
    }
    domain.refine_with(constraints)
}

/// An elementary negative cycle of the matrix's constraint graph.
fn negative_cycle(d: &Dbm) -> Option<Vec<ClockIndex>> {
    let n = d.dim();
    let mut dist = vec![Bound::LE_ZERO; n];
    let mut pred = vec![usize::MAX; n];
    let mut last_changed = None;
    for _ in 0..=n {
        last_changed = None;
        for x in 0..n {
            for y in 0..n {
                if x == y || d.get(x, y).is_top() {
                    continue;
                }
                let cand = dist[x].add(d.get(x, y));
                if cand < dist[y] {
                    dist[y] = cand;
                    pred[y] = x;
                    last_changed = Some(y);
                }
            }
        }
        if last_changed.is_none() {
            return None;
        }
    }
    let mut v = last_changed.unwrap();
    for _ in 0..n {
        v = pred[v];
    }
    let mut cycle = vec![v];
    let mut u = pred[v];
    while u != v {
        cycle.push(u);
        u = pred[u];
    }
    cycle.reverse();
    Some(cycle)
}

/// Hash of an abstract counterexample for progress checks.
pub fn hash_sym_trace(trace: &SymTrace) -> u64 {
    let mut h = DefaultHasher::new();
    for m in &trace.minterms {
        m.loc.hash(&mut h);
        m.preds.hash(&mut h);
    }
    for a in &trace.actions {
        a.hash(&mut h);
    }
    h.finish()
}

/// Outcome of the symbolic CEGAR loop.
pub enum SymOutcome {
    Reachable(SymTrace),
    NotReachable,
    Inconclusive(String),
}

impl SymOutcome {
    pub fn verdict(&self) -> Verdict {
        match self {
            SymOutcome::Reachable(_) => Verdict::Reachable,
            SymOutcome::NotReachable => Verdict::NotReachable,
            SymOutcome::Inconclusive(_) => Verdict::Inconclusive,
        }
    }
}

pub struct SymEngineResult {
    pub outcome: SymOutcome,
    pub stats: SymStats,
    pub trace_hashes: Vec<u64>,
    /// The edge witness of a reachable verdict, for replay by callers.
    pub witness_edges: Option<Vec<usize>>,
}

/// The symbolic CEGAR loop. Invariants are first compiled into the guards
/// (the step relations have no invariant hook); the abstraction starts
/// from the syntactic constraints; every spurious trace strictly grows the
/// table before the reachability pass reruns.
pub fn check_symbolic(
    ta: &TimedAutomaton,
    max_refinements: usize,
    bdd_budget: usize,
) -> SymEngineResult {
    let compiled = ta.compile_invariants();
    let mut stats = SymStats::default();
    let mut trace_hashes = Vec::new();
    let mut domain = AbstractDomain::from_automaton(&compiled);
    let mut prev_table: Option<PredicateTable> = None;

    let fail = |outcome: SymOutcome, stats: &SymStats, hashes: &[u64]| SymEngineResult {
        outcome,
        stats: stats.clone(),
        trace_hashes: hashes.to_vec(),
        witness_edges: None,
    };

    loop {
        if stats.cegar_iterations >= max_refinements {
            return fail(
                SymOutcome::Inconclusive(format!(
                    "refinement budget of {max_refinements} exhausted"
                )),
                &stats,
                &trace_hashes,
            );
        }
        stats.cegar_iterations += 1;
        let mut ctx = match SymContext::new(&compiled, &domain, prev_table.as_ref(), bdd_budget) {
            Ok(ctx) => ctx,
            Err(e) => return fail(SymOutcome::Inconclusive(e.to_string()), &stats, &trace_hashes),
        };
        stats.predicate_count = ctx.table.num_predicates();
        let reach = match sym_reach(&mut ctx) {
            Ok(r) => r,
            Err(e) => return fail(SymOutcome::Inconclusive(e.to_string()), &stats, &trace_hashes),
        };
        stats.peak_bdd_nodes = stats.peak_bdd_nodes.max(ctx.mgr.node_count());
        stats.layers = stats.layers.max(ctx.layers_explored);
        match reach {
            SymReach::NotReachable => {
                return SymEngineResult {
                    outcome: SymOutcome::NotReachable,
                    stats,
                    trace_hashes,
                    witness_edges: None,
                }
            }
            SymReach::Trace(trace) => {
                trace_hashes.push(hash_sym_trace(&trace));
                let chain = match replay(&ctx, &trace) {
                    Ok(c) => c,
                    Err(e) => {
                        return fail(SymOutcome::Inconclusive(e.to_string()), &stats, &trace_hashes)
                    }
                };
                if !chain.last().unwrap().is_empty() {
                    let witness = trace.edges.clone();
                    return SymEngineResult {
                        outcome: SymOutcome::Reachable(trace),
                        stats,
                        trace_hashes,
                        witness_edges: Some(witness),
                    };
                }
                match refine_spurious(&ctx, &trace, &chain, &domain) {
                    Ok((refined, case)) => {
                        if refined.size() <= domain.size() {
                            return fail(
                                SymOutcome::Inconclusive(
                                    "refinement stalled: no new constraint".into(),
                                ),
                                &stats,
                                &trace_hashes,
                            );
                        }
                        match case {
                            RefineCase::EmptyMinterm => stats.refine_empty_minterm += 1,
                            RefineCase::PredecessorSplit => stats.refine_predecessor_split += 1,
                            RefineCase::Up => stats.refine_up += 1,
                            RefineCase::Reset => stats.refine_reset += 1,
                        }
                        domain = refined;
                        prev_table = Some(ctx.table);
                    }
                    Err(e) => {
                        return fail(SymOutcome::Inconclusive(e.to_string()), &stats, &trace_hashes)
                    }
                }
            }
        }
    }
}
