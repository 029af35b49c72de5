//! Run reports shared by the CLI, the engines and the bindings.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Reachable,
    NotReachable,
    Inconclusive,
}

impl Verdict {
    /// Exit-code contract: 0 = not reachable, 1 = reachable, 2 = inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::NotReachable => 0,
            Verdict::Reachable => 1,
            Verdict::Inconclusive => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Reachable => "reachable",
            Verdict::NotReachable => "not_reachable",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Statistics of an enumerative run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EnumStats {
    pub nodes_created: usize,
    pub nodes_passed: usize,
    pub nodes_covered: usize,
    pub nodes_deleted: usize,
    pub refinement_passes: usize,
    pub interpolants_added: usize,
    pub zone_strengthenings: usize,
    pub cuts: usize,
    pub reinserted_after_uncover: usize,
    pub peak_wait: usize,
}

/// Statistics of a symbolic run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SymStats {
    pub cegar_iterations: usize,
    pub layers: usize,
    pub peak_bdd_nodes: usize,
    pub predicate_count: usize,
    pub refine_empty_minterm: usize,
    pub refine_predecessor_split: usize,
    pub refine_up: usize,
    pub refine_reset: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum EngineStats {
    Enumerative(EnumStats),
    Symbolic(SymStats),
    Oracle { nodes: usize },
}

/// The machine-readable run report printed by `check --json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
    pub stats: EngineStats,
    pub time_ms: u64,
}
