//! Reachability checking for timed automata.
//!
//! Two engines decide location reachability: an enumerative engine that
//! lazily refines per-node clock-constraint abstractions over DBMs, and a
//! symbolic engine that encodes abstract states as Boolean formulas over
//! clock predicates and runs breadth-first image computation on BDDs. Both
//! sit on a shared zone algebra (difference-bound matrices, abstraction
//! tables, zone interpolants), and a deliberately dumb zone-graph engine
//! plus an integer-point model of zones serve as ground truth for testing.

pub mod automaton;
pub mod bdd;
pub mod bounds;
pub mod dbm;
pub mod domain;
pub mod enumerative;
pub mod interpolate;
pub mod oracle;
pub mod report;
pub mod symbolic;

pub use automaton::TimedAutomaton;
pub use bounds::{Bound, ClockIndex};
pub use dbm::{AtomicGuard, Dbm, Guard};
pub use domain::{AbstractDomain, DomainMode};
pub use report::{RunReport, Verdict};
