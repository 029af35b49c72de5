//! Enumerative reachability with lazy clock-predicate abstraction.
//!
//! The engine grows an exploration tree. A node popped from the wait list
//! is first checked against the passed list for covering (with its stored,
//! unabstracted zone); otherwise its zone is widened by the node's
//! abstraction table, the node is passed, and its children are pushed with
//! plain zone successors. A trace to the target is replayed concretely;
//! when spurious, the refinement pass walks the trace backwards, adds
//! interpolant constraints to the abstraction tables of the offending
//! nodes, shrinks their zones, and cuts one subtree so exploration can
//! recover.

use crate::automaton::{SymbolicTrace, TimedAutomaton};
use crate::dbm::Dbm;
use crate::domain::{initial_domain, AbstractDomain, DomainMode};
use crate::interpolate::{minimal_interpolant, MinInterp};
use crate::report::{EnumStats, Verdict};
use std::cell::RefCell;
use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

/// Wait-list discipline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchOrder {
    Dfs,
    Bfs,
}

/// Node and refinement budgets; exceeding either yields `Inconclusive`.
#[derive(Clone, Copy, Debug)]
pub struct Budgets {
    pub max_nodes: usize,
    pub max_refinements: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_nodes: 1_000_000,
            max_refinements: 100_000,
        }
    }
}

/// Outcome of a run, with a concrete witness trace when reachable.
#[derive(Clone, Debug)]
pub enum Outcome {
    Reachable(SymbolicTrace),
    NotReachable,
    Inconclusive(String),
}

impl Outcome {
    pub fn verdict(&self) -> Verdict {
        match self {
            Outcome::Reachable(_) => Verdict::Reachable,
            Outcome::NotReachable => Verdict::NotReachable,
            Outcome::Inconclusive(_) => Verdict::Inconclusive,
        }
    }
}

type DomainHandle = Rc<RefCell<AbstractDomain>>;

struct Node {
    loc: usize,
    zone: Dbm,
    domain: DomainHandle,
    parent: Option<(usize, usize)>, // (node id, edge index)
    children: Vec<usize>,
    covered_by: Option<usize>,
    in_passed: bool,
    in_wait: bool,
    alive: bool,
}

pub struct EnumEngine<'a> {
    ta: &'a TimedAutomaton,
    mode: DomainMode,
    order: SearchOrder,
    budgets: Budgets,
    nodes: Vec<Node>,
    wait: VecDeque<usize>,
    passed_by_loc: Vec<Vec<usize>>,
    global_domain: DomainHandle,
    location_domains: Vec<DomainHandle>,
    pub stats: EnumStats,
    /// Hash of each abstract counterexample, in discovery order.
    pub trace_hashes: Vec<u64>,
    /// With validation on, Property (1) and zone monotonicity are checked
    /// at every checkpoint; violations are collected here.
    pub validate: bool,
    pub violations: Vec<String>,
}

impl<'a> EnumEngine<'a> {
    pub fn new(ta: &'a TimedAutomaton, mode: DomainMode, order: SearchOrder, budgets: Budgets) -> Self {
        let seed = initial_domain(ta, mode);
        let global_domain = Rc::new(RefCell::new(seed.clone()));
        let location_domains = (0..ta.num_locations())
            .map(|_| Rc::new(RefCell::new(seed.clone())))
            .collect();
        EnumEngine {
            ta,
            mode,
            order,
            budgets,
            nodes: Vec::new(),
            wait: VecDeque::new(),
            passed_by_loc: vec![Vec::new(); ta.num_locations()],
            global_domain,
            location_domains,
            stats: EnumStats::default(),
            trace_hashes: Vec::new(),
            validate: cfg!(debug_assertions),
            violations: Vec::new(),
        }
    }

    fn choose_dom(&self, parent: usize, edge: usize) -> DomainHandle {
        match self.mode {
            DomainMode::Global => Rc::clone(&self.global_domain),
            DomainMode::PerLocation => {
                Rc::clone(&self.location_domains[self.ta.edges[edge].dst])
            }
            DomainMode::PerNode => {
                // Children inherit the parent's current refinements.
                Rc::new(RefCell::new(self.nodes[parent].domain.borrow().clone()))
            }
        }
    }

    fn new_node(&mut self, loc: usize, zone: Dbm, domain: DomainHandle, parent: Option<(usize, usize)>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            loc,
            zone,
            domain,
            parent,
            children: Vec::new(),
            covered_by: None,
            in_passed: false,
            in_wait: false,
            alive: true,
        });
        if let Some((p, _)) = parent {
            self.nodes[p].children.push(id);
        }
        self.stats.nodes_created += 1;
        id
    }

    fn push_wait(&mut self, id: usize) {
        if !self.nodes[id].in_wait && self.nodes[id].alive {
            self.nodes[id].in_wait = true;
            self.wait.push_back(id);
            self.stats.peak_wait = self.stats.peak_wait.max(self.wait.len());
        }
    }

    fn pop_wait(&mut self) -> Option<usize> {
        loop {
            let id = match self.order {
                SearchOrder::Dfs => self.wait.pop_back()?,
                SearchOrder::Bfs => self.wait.pop_front()?,
            };
            if self.nodes[id].alive && self.nodes[id].in_wait {
                self.nodes[id].in_wait = false;
                return Some(id);
            }
        }
    }

    /// The concrete zone a node would get from its parent: the plain edge
    /// successor, or the initial zone at the root.
    fn concrete(&self, id: usize) -> Dbm {
        match self.nodes[id].parent {
            Some((p, e)) => self.ta.post_edge(&self.nodes[p].zone, e),
            None => self.ta.initial_zone(),
        }
    }

    /// A passed node (other than `id`) at the same location whose zone
    /// includes this node's zone; smallest id wins.
    fn find_coverer(&self, id: usize) -> Option<usize> {
        let me = &self.nodes[id];
        self.passed_by_loc[me.loc]
            .iter()
            .copied()
            .filter(|&c| c != id && self.nodes[c].alive && self.nodes[c].in_passed)
            .find(|&c| self.nodes[c].zone.includes(&me.zone))
    }

    /// Nodes covered by `id` whose covering no longer holds re-enter wait.
    fn recheck_coverees(&mut self, id: usize) {
        let mut to_wake = Vec::new();
        for (other, node) in self.nodes.iter().enumerate() {
            if node.alive && node.covered_by == Some(id) {
                if !self.nodes[id].alive || !self.nodes[id].zone.includes(&node.zone) {
                    to_wake.push(other);
                }
            }
        }
        for other in to_wake {
            self.nodes[other].covered_by = None;
            self.stats.reinserted_after_uncover += 1;
            self.push_wait(other);
        }
    }

    fn set_zone(&mut self, id: usize, zone: Dbm) {
        if self.validate && !self.nodes[id].zone.includes(&zone) {
            self.violations
                .push(format!("zone of node {id} grew during refinement"));
        }
        self.nodes[id].zone = zone;
        self.recheck_coverees(id);
    }

    fn delete_subtree_below(&mut self, root: usize) {
        let mut stack: Vec<usize> = self.nodes[root].children.clone();
        self.nodes[root].children.clear();
        let mut dead = Vec::new();
        while let Some(id) = stack.pop() {
            if !self.nodes[id].alive {
                continue;
            }
            self.nodes[id].alive = false;
            self.nodes[id].in_passed = false;
            self.nodes[id].in_wait = false;
            self.stats.nodes_deleted += 1;
            dead.push(id);
            stack.extend(self.nodes[id].children.clone());
        }
        for loc_list in &mut self.passed_by_loc {
            loc_list.retain(|&n| self.nodes[n].alive);
        }
        for id in dead {
            self.recheck_coverees(id);
        }
    }

    /// Forward exploration until the target is popped or wait empties.
    /// Returns the root-to-target node path.
    fn abs_reach(&mut self) -> Result<Option<Vec<usize>>, String> {
        while let Some(id) = self.pop_wait() {
            if self.nodes[id].loc == self.ta.target {
                return Ok(Some(self.path_to_root(id)));
            }
            if let Some(coverer) = self.find_coverer(id) {
                self.nodes[id].covered_by = Some(coverer);
                self.stats.nodes_covered += 1;
                continue;
            }
            // Abstract the zone before passing the node; successors are
            // computed from the abstracted zone.
            let abstracted = self.nodes[id].domain.borrow().alpha(&self.nodes[id].zone);
            self.nodes[id].zone = abstracted;
            self.nodes[id].in_passed = true;
            self.passed_by_loc[self.nodes[id].loc].push(id);
            self.stats.nodes_passed += 1;

            let edges: Vec<usize> = self
                .ta
                .edges_from(self.nodes[id].loc)
                .map(|(i, _)| i)
                .collect();
            for e in edges {
                let succ = self.ta.post_edge(&self.nodes[id].zone, e);
                if succ.is_empty() {
                    continue;
                }
                if self.nodes.len() >= self.budgets.max_nodes {
                    return Err(format!("node budget of {} exhausted", self.budgets.max_nodes));
                }
                let dom = self.choose_dom(id, e);
                let child = self.new_node(self.ta.edges[e].dst, succ, dom, Some((id, e)));
                self.push_wait(child);
            }
        }
        Ok(None)
    }

    fn path_to_root(&self, id: usize) -> Vec<usize> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some((p, _)) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    fn edge_trace(&self, path: &[usize]) -> SymbolicTrace {
        SymbolicTrace {
            edges: path[1..]
                .iter()
                .map(|&n| self.nodes[n].parent.unwrap().1)
                .collect(),
        }
    }

    fn hash_trace(&self, path: &[usize]) -> u64 {
        let mut h = DefaultHasher::new();
        for &id in path {
            id.hash(&mut h);
            self.nodes[id].loc.hash(&mut h);
            let z = &self.nodes[id].zone;
            for x in 0..z.dim() {
                for y in 0..z.dim() {
                    z.get(x, y).hash(&mut h);
                }
            }
        }
        h.finish()
    }

    /// Shrinks a node to the abstraction of its concrete zone, first
    /// refining the node's table when the abstraction still meets the
    /// backward zone `z`.
    fn strengthen(&mut self, id: usize, z: &Dbm, c: &Dbm) {
        debug_assert!(c.intersect(z).is_empty());
        if c.is_empty() {
            self.set_zone(id, c.clone());
            self.stats.zone_strengthenings += 1;
            return;
        }
        let too_coarse = !self.nodes[id].domain.borrow().alpha(c).intersect(z).is_empty();
        if too_coarse {
            match minimal_interpolant(c, z) {
                MinInterp::Separated { interpolant, .. } => {
                    let refined = self.nodes[id]
                        .domain
                        .borrow()
                        .refine_with(interpolant.cycle_constraints());
                    *self.nodes[id].domain.borrow_mut() = refined;
                    self.stats.interpolants_added += 1;
                }
                MinInterp::Intersecting => unreachable!("strengthen requires disjoint zones"),
            }
        }
        let shrunk = self.nodes[id].domain.borrow().alpha(c);
        debug_assert!(
            shrunk.intersect(z).is_empty(),
            "abstraction still meets the backward zone after refinement"
        );
        self.set_zone(id, shrunk);
        self.stats.zone_strengthenings += 1;
    }

    /// Backward refinement over a spurious trace. Returns false when the
    /// trace turned out feasible (no modification happened).
    fn refine(&mut self, path: &[usize]) -> bool {
        let k = path.len();
        // Backward zones: z[k-1] is the target node's zone, and each step
        // intersects the exact edge preimage with the node's stored zone.
        let mut zs: Vec<Dbm> = vec![Dbm::universe(self.ta.dim()); k];
        zs[k - 1] = self.nodes[path[k - 1]].zone.clone();
        for j in (0..k - 1).rev() {
            let e = self.nodes[path[j + 1]].parent.unwrap().1;
            zs[j] = self
                .ta
                .pre_edge(&zs[j + 1], e)
                .intersect(&self.nodes[path[j]].zone);
        }
        // Deepest index (from the target side) whose concrete zone misses
        // the backward zone; the trace is feasible if none does.
        let mut i0 = None;
        for j in (0..k).rev() {
            if self.concrete(path[j]).intersect(&zs[j]).is_empty() {
                i0 = Some(j);
                break;
            }
            if j == 0 {
                return false; // feasible at the root
            }
        }
        let i0 = i0.expect("checked above");
        self.stats.refinement_passes += 1;

        // Unwind: strengthen from i0 towards the target; each concrete
        // zone is recomputed from the already-shrunk parent.
        for j in i0..k {
            let c = self.concrete(path[j]);
            self.strengthen(path[j], &zs[j], &c);
        }

        // Cut chain: i0 up to the first node whose zone became empty.
        let j0 = (i0..k)
            .find(|&j| self.nodes[path[j]].zone.is_empty())
            .unwrap_or(k - 1);
        let chain = &path[i0..=j0];
        let n_cut = chain
            .iter()
            .copied()
            .find(|&n| self.find_coverer(n).is_some())
            .unwrap_or(chain[chain.len() - 1]);
        self.cut(n_cut);
        true
    }

    /// Deletes the subtree below `n_cut`; the node itself is deleted when
    /// its zone emptied, otherwise it re-enters wait with its concrete
    /// zone, leaving the passed list.
    fn cut(&mut self, n_cut: usize) {
        self.stats.cuts += 1;
        self.delete_subtree_below(n_cut);
        if self.nodes[n_cut].zone.is_empty() {
            self.nodes[n_cut].alive = false;
            self.nodes[n_cut].in_passed = false;
            self.nodes[n_cut].in_wait = false;
            self.stats.nodes_deleted += 1;
            if let Some((p, _)) = self.nodes[n_cut].parent {
                self.nodes[p].children.retain(|&c| c != n_cut);
            }
            let loc = self.nodes[n_cut].loc;
            self.passed_by_loc[loc].retain(|&n| n != n_cut);
            self.recheck_coverees(n_cut);
        } else {
            if self.nodes[n_cut].in_passed {
                self.nodes[n_cut].in_passed = false;
                let loc = self.nodes[n_cut].loc;
                self.passed_by_loc[loc].retain(|&n| n != n_cut);
            }
            let concrete = self.concrete(n_cut);
            self.set_zone(n_cut, concrete);
            self.push_wait(n_cut);
        }
    }

    /// Property (1): every passed node has, per enabled edge, a child
    /// whose zone covers the edge successor; passed children also cover
    /// the abstraction of the successor under their own table.
    pub fn check_property_one(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for (id, node) in self.nodes.iter().enumerate() {
            if !node.alive || !node.in_passed {
                continue;
            }
            for (e, edge) in self.ta.edges_from(node.loc) {
                let succ = self.ta.post_edge(&node.zone, e);
                if succ.is_empty() {
                    continue;
                }
                let child = node
                    .children
                    .iter()
                    .copied()
                    .find(|&c| self.nodes[c].alive && self.nodes[c].parent == Some((id, e)));
                let Some(child) = child else {
                    bad.push(format!("node {id} lacks a child for edge {e} to {}", edge.dst));
                    continue;
                };
                if !self.nodes[child].zone.includes(&succ) {
                    bad.push(format!("child {child} of {id} fails post inclusion"));
                    continue;
                }
                if self.nodes[child].in_passed {
                    let alpha = self.nodes[child].domain.borrow().alpha(&succ);
                    if !self.nodes[child].zone.includes(&alpha) {
                        bad.push(format!("child {child} of {id} fails abstract inclusion"));
                    }
                }
            }
        }
        bad
    }

    fn checkpoint(&mut self, phase: &str) {
        if self.validate {
            for v in self.check_property_one() {
                self.violations.push(format!("[{phase}] {v}"));
            }
        }
    }

    /// The CEGAR loop: explore, replay, refine, until a verdict.
    pub fn check(&mut self) -> Outcome {
        let root_zone = self.ta.initial_zone();
        if root_zone.is_empty() {
            return Outcome::NotReachable;
        }
        let root_domain = match self.mode {
            DomainMode::Global => Rc::clone(&self.global_domain),
            DomainMode::PerLocation => Rc::clone(&self.location_domains[self.ta.initial]),
            DomainMode::PerNode => Rc::new(RefCell::new(self.global_domain.borrow().clone())),
        };
        let root = self.new_node(self.ta.initial, root_zone, root_domain, None);
        self.push_wait(root);

        loop {
            let path = match self.abs_reach() {
                Ok(Some(path)) => path,
                Ok(None) => return Outcome::NotReachable,
                Err(msg) => return Outcome::Inconclusive(msg),
            };
            self.checkpoint("abs-reach");
            self.trace_hashes.push(self.hash_trace(&path));
            let trace = self.edge_trace(&path);
            if self.ta.trace_feasible(&trace).is_some() {
                return Outcome::Reachable(trace);
            }
            if self.stats.refinement_passes >= self.budgets.max_refinements {
                return Outcome::Inconclusive(format!(
                    "refinement budget of {} exhausted",
                    self.budgets.max_refinements
                ));
            }
            let modified = self.refine(&path);
            debug_assert!(modified, "spurious trace must trigger a refinement");
            self.checkpoint("refine");
        }
    }
}

/// Convenience wrapper running a fresh engine.
pub fn check(
    ta: &TimedAutomaton,
    mode: DomainMode,
    order: SearchOrder,
    budgets: Budgets,
) -> (Outcome, EnumStats) {
    let mut engine = EnumEngine::new(ta, mode, order, budgets);
    let outcome = engine.check();
    assert!(
        engine.violations.is_empty(),
        "invariant violations: {:?}",
        engine.violations
    );
    (outcome, engine.stats.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::parse_model;
    use crate::oracle::{generate_model, zone_reach_baseline, GeneratorConfig};

    fn run(ta: &TimedAutomaton, mode: DomainMode) -> Outcome {
        let (outcome, _) = check(ta, mode, SearchOrder::Dfs, Budgets::default());
        outcome
    }

    #[test]
    fn trivial_target_is_initial() {
        let ta = parse_model("clocks x\nlocation a initial\ntarget a\n").unwrap();
        assert!(matches!(run(&ta, DomainMode::Global), Outcome::Reachable(t) if t.edges.is_empty()));
    }

    #[test]
    fn unreachable_behind_false_guard() {
        let ta = parse_model(
            "clocks x\nlocation a initial\nlocation b\nedge a -> b guard x<0\ntarget b\n",
        )
        .unwrap();
        assert!(matches!(run(&ta, DomainMode::Global), Outcome::NotReachable));
    }

    #[test]
    fn reachable_with_reset_chain() {
        let text = "clocks x y
location a initial invariant x<=10 and y<=10
location b invariant x<=10 and y<=10
location c
edge a -> b guard x>2 reset y
edge b -> c guard x>=3 and y<1
target c
";
        let ta = parse_model(text).unwrap();
        for mode in [DomainMode::Global, DomainMode::PerNode, DomainMode::PerLocation] {
            match run(&ta, mode) {
                Outcome::Reachable(trace) => {
                    assert!(ta.trace_feasible(&trace).is_some());
                }
                other => panic!("expected reachable, got {other:?}"),
            }
        }
    }

    #[test]
    fn agreement_with_baseline_on_random_models() {
        for seed in 0..150 {
            let cfg = GeneratorConfig {
                seed,
                ..GeneratorConfig::default()
            };
            let ta = generate_model(&cfg);
            let expected = zone_reach_baseline(&ta, 200_000).unwrap();
            for mode in [DomainMode::Global, DomainMode::PerNode, DomainMode::PerLocation] {
                let (outcome, _) = check(&ta, mode, SearchOrder::Dfs, Budgets::default());
                match (&outcome, expected) {
                    (Outcome::Reachable(trace), true) => {
                        assert!(ta.trace_feasible(trace).is_some(), "witness must replay");
                    }
                    (Outcome::NotReachable, false) => {}
                    other => panic!("seed {seed} mode {mode:?}: disagreement {other:?}"),
                }
            }
        }
    }

    #[test]
    fn bfs_order_agrees_too() {
        for seed in 0..60 {
            let cfg = GeneratorConfig {
                seed,
                ..GeneratorConfig::default()
            };
            let ta = generate_model(&cfg);
            let expected = zone_reach_baseline(&ta, 200_000).unwrap();
            let (outcome, _) = check(&ta, DomainMode::PerLocation, SearchOrder::Bfs, Budgets::default());
            assert_eq!(
                matches!(outcome, Outcome::Reachable(_)),
                expected,
                "seed {seed}"
            );
        }
    }

    #[test]
    fn refinement_makes_progress_on_spurious_traces() {
        for seed in 0..150 {
            let cfg = GeneratorConfig {
                seed: seed + 10_000,
                ..GeneratorConfig::default()
            };
            let ta = generate_model(&cfg);
            let mut engine = EnumEngine::new(&ta, DomainMode::Global, SearchOrder::Dfs, Budgets::default());
            let _ = engine.check();
            for pair in engine.trace_hashes.windows(2) {
                assert_ne!(pair[0], pair[1], "identical consecutive abstract counterexample");
            }
        }
    }

    #[test]
    fn node_budget_reports_inconclusive() {
        let text = "clocks x y
location a initial invariant x<=10 and y<=10
location b invariant x<=10 and y<=10
location c
edge a -> b guard x>2 reset y
edge b -> a reset x
edge b -> c guard x>=3 and y<1
target c
";
        let ta = parse_model(text).unwrap();
        let budgets = Budgets {
            max_nodes: 2,
            max_refinements: 100,
        };
        let (outcome, _) = check(&ta, DomainMode::Global, SearchOrder::Dfs, budgets);
        assert!(matches!(outcome, Outcome::Inconclusive(_)));
    }
}
