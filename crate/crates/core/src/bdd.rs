//! Reduced ordered binary decision diagrams with hash consing.
//!
//! One manager per checking session; formulas are indices into the
//! manager's node table and are only meaningful together with it. The
//! variable order is fixed at creation: location bits first, then each
//! predicate variable immediately followed by its primed copy, so renaming
//! between the two is an order-preserving shift.

use std::collections::HashMap;
use thiserror::Error;

/// A variable in the manager's fixed global order.
pub type VarId = u32;

/// Handle to a formula in a manager.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Formula(u32);

/// How [`Manager::rename_shift`] treats one variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarClass {
    Keep,
    Shift,
    Forbidden,
}

const FALSE: Formula = Formula(0);
const TRUE: Formula = Formula(1);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BddError {
    #[error("node budget of {0} exhausted")]
    Budget(usize),
    #[error("variable {0} outside the renameable block")]
    SupportViolation(VarId),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    var: VarId,
    lo: Formula,
    hi: Formula,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
    Xor,
    Not,
    ExistsOne(VarId),
    Shift(i8),
}

/// BDD manager: unique table, operation cache, node budget.
pub struct Manager {
    nodes: Vec<Node>,
    unique: HashMap<Node, Formula>,
    cache: HashMap<(Op, Formula, Formula), Formula>,
    budget: usize,
}

impl Manager {
    pub fn new() -> Manager {
        Manager::with_budget(1 << 22)
    }

    pub fn with_budget(budget: usize) -> Manager {
        let sentinel = Node {
            var: VarId::MAX,
            lo: FALSE,
            hi: TRUE,
        };
        Manager {
            nodes: vec![sentinel, sentinel],
            unique: HashMap::new(),
            cache: HashMap::new(),
            budget,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn mk_true(&self) -> Formula {
        TRUE
    }

    pub fn mk_false(&self) -> Formula {
        FALSE
    }

    pub fn mk_const(&self, v: bool) -> Formula {
        if v {
            TRUE
        } else {
            FALSE
        }
    }

    fn is_terminal(f: Formula) -> bool {
        f.0 < 2
    }

    fn node(&self, f: Formula) -> Node {
        self.nodes[f.0 as usize]
    }

    fn mk_node(&mut self, var: VarId, lo: Formula, hi: Formula) -> Result<Formula, BddError> {
        if lo == hi {
            return Ok(lo);
        }
        let n = Node { var, lo, hi };
        if let Some(&f) = self.unique.get(&n) {
            return Ok(f);
        }
        if self.nodes.len() >= self.budget {
            return Err(BddError::Budget(self.budget));
        }
        let f = Formula(self.nodes.len() as u32);
        self.nodes.push(n);
        self.unique.insert(n, f);
        Ok(f)
    }

    pub fn mk_var(&mut self, v: VarId) -> Result<Formula, BddError> {
        self.mk_node(v, FALSE, TRUE)
    }

    pub fn mk_literal(&mut self, v: VarId, positive: bool) -> Result<Formula, BddError> {
        if positive {
            self.mk_var(v)
        } else {
            self.mk_node(v, TRUE, FALSE)
        }
    }

    fn top_var(&self, f: Formula) -> VarId {
        self.node(f).var
    }

    fn cofactors(&self, f: Formula, var: VarId) -> (Formula, Formula) {
        let n = self.node(f);
        if Self::is_terminal(f) || n.var != var {
            (f, f)
        } else {
            (n.lo, n.hi)
        }
    }

    fn apply(&mut self, op: Op, a: Formula, b: Formula) -> Result<Formula, BddError> {
        let (a, b) = match op {
            Op::And | Op::Or | Op::Xor if b < a => (b, a),
            _ => (a, b),
        };
        match op {
            Op::And => {
                if a == FALSE || b == FALSE {
                    return Ok(FALSE);
                }
                if a == TRUE {
                    return Ok(b);
                }
                if b == TRUE {
                    return Ok(a);
                }
                if a == b {
                    return Ok(a);
                }
            }
            Op::Or => {
                if a == TRUE || b == TRUE {
                    return Ok(TRUE);
                }
                if a == FALSE {
                    return Ok(b);
                }
                if b == FALSE {
                    return Ok(a);
                }
                if a == b {
                    return Ok(a);
                }
            }
            Op::Xor => {
                if a == FALSE {
                    return Ok(b);
                }
                if b == FALSE {
                    return Ok(a);
                }
                if a == b {
                    return Ok(FALSE);
                }
            }
            _ => {}
        }
        if let Some(&f) = self.cache.get(&(op, a, b)) {
            return Ok(f);
        }
        let var = self.top_var(a).min(self.top_var(b));
        let (alo, ahi) = self.cofactors(a, var);
        let (blo, bhi) = self.cofactors(b, var);
        let lo = self.apply(op, alo, blo)?;
        let hi = self.apply(op, ahi, bhi)?;
        let f = self.mk_node(var, lo, hi)?;
        self.cache.insert((op, a, b), f);
        Ok(f)
    }

    pub fn and(&mut self, a: Formula, b: Formula) -> Result<Formula, BddError> {
        self.apply(Op::And, a, b)
    }

    pub fn or(&mut self, a: Formula, b: Formula) -> Result<Formula, BddError> {
        self.apply(Op::Or, a, b)
    }

    pub fn xor(&mut self, a: Formula, b: Formula) -> Result<Formula, BddError> {
        self.apply(Op::Xor, a, b)
    }

    pub fn not(&mut self, a: Formula) -> Result<Formula, BddError> {
        if a == TRUE {
            return Ok(FALSE);
        }
        if a == FALSE {
            return Ok(TRUE);
        }
        if let Some(&f) = self.cache.get(&(Op::Not, a, FALSE)) {
            return Ok(f);
        }
        let n = self.node(a);
        let lo = self.not(n.lo)?;
        let hi = self.not(n.hi)?;
        let f = self.mk_node(n.var, lo, hi)?;
        self.cache.insert((Op::Not, a, FALSE), f);
        Ok(f)
    }

    pub fn implies(&mut self, a: Formula, b: Formula) -> Result<Formula, BddError> {
        let na = self.not(a)?;
        self.or(na, b)
    }

    pub fn iff(&mut self, a: Formula, b: Formula) -> Result<Formula, BddError> {
        let x = self.xor(a, b)?;
        self.not(x)
    }

    fn exists_one(&mut self, f: Formula, v: VarId) -> Result<Formula, BddError> {
        if Self::is_terminal(f) {
            return Ok(f);
        }
        let n = self.node(f);
        if n.var > v {
            return Ok(f);
        }
        if let Some(&g) = self.cache.get(&(Op::ExistsOne(v), f, FALSE)) {
            return Ok(g);
        }
        let g = if n.var == v {
            self.or(n.lo, n.hi)?
        } else {
            let lo = self.exists_one(n.lo, v)?;
            let hi = self.exists_one(n.hi, v)?;
            self.mk_node(n.var, lo, hi)?
        };
        self.cache.insert((Op::ExistsOne(v), f, FALSE), g);
        Ok(g)
    }

    /// Existential quantification over a set of variables.
    pub fn exists(&mut self, f: Formula, vars: &[VarId]) -> Result<Formula, BddError> {
        let mut sorted = vars.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut g = f;
        // Quantify innermost first to keep intermediate diagrams small.
        for &v in sorted.iter().rev() {
            g = self.exists_one(g, v)?;
        }
        Ok(g)
    }

    /// Shifts the variables selected by `classify` by `delta` (+1 maps a
    /// predicate onto its primed twin, -1 back); `Keep` variables stay in
    /// place, `Forbidden` ones are a support violation. The caller must
    /// ensure the resulting map is strictly monotone (interleaved twins
    /// and a kept prefix are), so the structure is preserved. The cache is
    /// keyed by `delta` only: one manager must not mix different blocks
    /// for the same direction.
    pub fn rename_shift(
        &mut self,
        f: Formula,
        delta: i8,
        classify: &impl Fn(VarId) -> VarClass,
    ) -> Result<Formula, BddError> {
        if Self::is_terminal(f) {
            return Ok(f);
        }
        if let Some(&g) = self.cache.get(&(Op::Shift(delta), f, FALSE)) {
            return Ok(g);
        }
        let n = self.node(f);
        let var = match classify(n.var) {
            VarClass::Keep => n.var,
            VarClass::Shift => (n.var as i64 + delta as i64) as VarId,
            VarClass::Forbidden => return Err(BddError::SupportViolation(n.var)),
        };
        let lo = self.rename_shift(n.lo, delta, classify)?;
        let hi = self.rename_shift(n.hi, delta, classify)?;
        let g = self.mk_node(var, lo, hi)?;
        self.cache.insert((Op::Shift(delta), f, FALSE), g);
        Ok(g)
    }

    /// Evaluates under a total assignment.
    pub fn eval(&self, f: Formula, assignment: &impl Fn(VarId) -> bool) -> bool {
        let mut cur = f;
        while !Self::is_terminal(cur) {
            let n = self.node(cur);
            cur = if assignment(n.var) { n.hi } else { n.lo };
        }
        cur == TRUE
    }

    /// Variables appearing in the diagram.
    pub fn support(&self, f: Formula) -> Vec<VarId> {
        let mut seen = std::collections::HashSet::new();
        let mut vars = std::collections::BTreeSet::new();
        let mut stack = vec![f];
        while let Some(g) = stack.pop() {
            if Self::is_terminal(g) || !seen.insert(g) {
                continue;
            }
            let n = self.node(g);
            vars.insert(n.var);
            stack.push(n.lo);
            stack.push(n.hi);
        }
        vars.into_iter().collect()
    }

    /// All satisfying total assignments over `support` (which must contain
    /// the formula's support), in lexicographic variable order with `false`
    /// before `true`.
    pub fn minterms(&self, f: Formula, support: &[VarId]) -> Vec<Vec<bool>> {
        let mut sorted = support.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for v in self.support(f) {
            assert!(
                sorted.binary_search(&v).is_ok(),
                "support set misses variable {v}"
            );
        }
        let mut out = Vec::new();
        let mut cur = vec![false; sorted.len()];
        self.minterms_rec(f, &sorted, 0, &mut cur, &mut out);
        out
    }

    fn minterms_rec(
        &self,
        f: Formula,
        support: &[VarId],
        i: usize,
        cur: &mut Vec<bool>,
        out: &mut Vec<Vec<bool>>,
    ) {
        if f == FALSE {
            return;
        }
        if i == support.len() {
            debug_assert_eq!(f, TRUE);
            out.push(cur.clone());
            return;
        }
        let v = support[i];
        let (lo, hi) = if !Self::is_terminal(f) && self.top_var(f) == v {
            let n = self.node(f);
            (n.lo, n.hi)
        } else {
            (f, f)
        };
        cur[i] = false;
        self.minterms_rec(lo, support, i + 1, cur, out);
        cur[i] = true;
        self.minterms_rec(hi, support, i + 1, cur, out);
        cur[i] = false;
    }

    /// One satisfying total assignment over `support`, or `None`.
    pub fn pick_minterm(&self, f: Formula, support: &[VarId]) -> Option<Vec<bool>> {
        if f == FALSE {
            return None;
        }
        let mut sorted = support.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut cur = vec![false; sorted.len()];
        let mut g = f;
        for (i, &v) in sorted.iter().enumerate() {
            if !Self::is_terminal(g) && self.top_var(g) == v {
                let n = self.node(g);
                if n.lo != FALSE {
                    cur[i] = false;
                    g = n.lo;
                } else {
                    cur[i] = true;
                    g = n.hi;
                }
            } else if !Self::is_terminal(g) && self.top_var(g) < v {
                unreachable!("support set misses variable {}", self.top_var(g));
            }
            // Variable not in the diagram: leave false.
        }
        debug_assert_eq!(g, TRUE);
        Some(cur)
    }

    /// Number of satisfying assignments over `num_vars` variables
    /// (variables 0..num_vars).
    pub fn count_minterms(&self, f: Formula, num_vars: u32) -> u128 {
        fn rec(
            m: &Manager,
            f: Formula,
            from: u32,
            num_vars: u32,
            memo: &mut HashMap<(Formula, u32), u128>,
        ) -> u128 {
            if f == FALSE {
                return 0;
            }
            if Manager::is_terminal(f) {
                return 1u128 << (num_vars - from);
            }
            if let Some(&c) = memo.get(&(f, from)) {
                return c;
            }
            let n = m.node(f);
            let skipped = n.var - from;
            let lo = rec(m, n.lo, n.var + 1, num_vars, memo);
            let hi = rec(m, n.hi, n.var + 1, num_vars, memo);
            let c = (lo + hi) << skipped;
            memo.insert((f, from), c);
            c
        }
        assert!(self.support(f).iter().all(|&v| v < num_vars));
        rec(self, f, 0, num_vars, &mut HashMap::new())
    }

    /// Rebuilds the node table keeping only what the roots reach; returns
    /// the remapped roots. Invalidates every other handle.
    pub fn gc(&mut self, roots: &[Formula]) -> Vec<Formula> {
        let mut fresh = Manager::with_budget(self.budget);
        let mut map: HashMap<Formula, Formula> = HashMap::new();
        map.insert(FALSE, FALSE);
        map.insert(TRUE, TRUE);
        fn copy(old: &Manager, f: Formula, fresh: &mut Manager, map: &mut HashMap<Formula, Formula>) -> Formula {
            if let Some(&g) = map.get(&f) {
                return g;
            }
            let n = old.node(f);
            let lo = copy(old, n.lo, fresh, map);
            let hi = copy(old, n.hi, fresh, map);
            let g = fresh.mk_node(n.var, lo, hi).expect("gc under budget");
            map.insert(f, g);
            g
        }
        let out = roots
            .iter()
            .map(|&r| copy(self, r, &mut fresh, &mut map))
            .collect();
        *self = fresh;
        out
    }

    /// DOT rendering of the diagram rooted at `f`, for debugging.
    pub fn to_dot(&self, f: Formula) -> String {
        use std::fmt::Write;
        let mut out = String::from("digraph bdd {\n");
        out.push_str("  f0 [label=\"0\", shape=box];\n  f1 [label=\"1\", shape=box];\n");
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![f];
        while let Some(g) = stack.pop() {
            if Self::is_terminal(g) || !seen.insert(g) {
                continue;
            }
            let n = self.node(g);
            writeln!(out, "  f{} [label=\"v{}\"];", g.0, n.var).unwrap();
            writeln!(out, "  f{} -> f{} [style=dashed];", g.0, n.lo.0).unwrap();
            writeln!(out, "  f{} -> f{};", g.0, n.hi.0).unwrap();
            stack.push(n.lo);
            stack.push(n.hi);
        }
        out.push_str("}\n");
        out
    }
}

impl Default for Manager {
    fn default() -> Self {
        Manager::new()
    }
}
