//! Abstract domains: per clock pair, the finite set of bounds a zone
//! constraint may use, and the induced closure operator on zones.
//!
//! The table is kept reflection-closed: adding `x - y < k` also records
//! `-(k, <)` for the pair `(y, x)`, mirroring the encoding where a
//! constraint with `x` after `y` in the clock order is the negation of a
//! stored predicate. Refinement is copy-on-write so the thousands of
//! near-identical per-node domains of the enumerative engine share their
//! unchanged pairs.

use crate::automaton::TimedAutomaton;
use crate::bounds::{Bound, ClockIndex};
use crate::dbm::Dbm;
use std::fmt::Write;
use std::sync::Arc;

/// Which domain instance the enumerative engine hands to a new node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainMode {
    Global,
    PerNode,
    PerLocation,
}

/// The table `D` of allowed bounds per ordered clock pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractDomain {
    dim: usize,
    pairs: Vec<Arc<Vec<Bound>>>,
}

impl AbstractDomain {
    pub fn empty(dim: usize) -> AbstractDomain {
        AbstractDomain {
            dim,
            pairs: vec![Arc::new(Vec::new()); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sorted bounds allowed for constraints on `x - y`.
    pub fn bounds(&self, x: ClockIndex, y: ClockIndex) -> &[Bound] {
        &self.pairs[x * self.dim + y]
    }

    /// Number of stored bounds over all ordered pairs.
    pub fn size(&self) -> usize {
        self.pairs.iter().map(|p| p.len()).sum()
    }

    fn insert_one(&mut self, x: ClockIndex, y: ClockIndex, b: Bound) -> bool {
        let pair = Arc::make_mut(&mut self.pairs[x * self.dim + y]);
        match pair.binary_search(&b) {
            Ok(_) => false,
            Err(at) => {
                pair.insert(at, b);
                true
            }
        }
    }

    /// Adds one constraint value and its reflection. Returns true if the
    /// table grew.
    pub fn add(&mut self, x: ClockIndex, y: ClockIndex, b: Bound) -> bool {
        assert!(x != y && x < self.dim && y < self.dim);
        assert!(!b.is_top());
        let a = self.insert_one(x, y, b);
        let r = self.insert_one(y, x, b.negated());
        a || r
    }

    /// Copy-on-write refinement: the result shares unchanged pairs.
    pub fn refine_with(
        &self,
        constraints: impl IntoIterator<Item = (ClockIndex, ClockIndex, Bound)>,
    ) -> AbstractDomain {
        let mut out = self.clone();
        for (x, y, b) in constraints {
            out.add(x, y, b);
        }
        out
    }

    /// True if `self` allows at least all bounds of `other`.
    pub fn is_refinement_of(&self, other: &AbstractDomain) -> bool {
        assert_eq!(self.dim, other.dim);
        self.pairs
            .iter()
            .zip(&other.pairs)
            .all(|(a, b)| b.iter().all(|v| a.binary_search(v).is_ok()))
    }

    /// Entrywise ceiling of a canonical zone into the domain, before
    /// canonicalization: the witness matrix of the abstraction.
    pub fn alpha_witness(&self, z: &Dbm) -> Dbm {
        assert!(!z.is_empty() && z.is_canonical());
        assert_eq!(z.dim(), self.dim);
        let mut w = Dbm::unconstrained(self.dim);
        for x in 0..self.dim {
            for y in 0..self.dim {
                if x == y {
                    continue;
                }
                let e = z.get(x, y);
                if e.is_top() {
                    continue;
                }
                // Smallest allowed bound at least as weak as the entry.
                let pair = self.bounds(x, y);
                let at = pair.partition_point(|&b| b < e);
                if at < pair.len() {
                    w.set(x, y, pair[at]);
                }
            }
        }
        w
    }

    /// The smallest domain-definable zone containing `z` (over non-negative
    /// valuations).
    pub fn alpha(&self, z: &Dbm) -> Dbm {
        self.alpha_witness(z)
            .canonicalize()
            .intersect(&Dbm::universe(self.dim))
    }

    /// Seeds a domain with every atomic constraint that appears
    /// syntactically in the automaton's guards and invariants.
    pub fn from_automaton(ta: &TimedAutomaton) -> AbstractDomain {
        let mut d = AbstractDomain::empty(ta.dim());
        let mut scan = |g: &[crate::dbm::AtomicGuard]| {
            for a in g {
                if !a.bound.is_top() {
                    d.add(a.x, a.y, a.bound);
                }
            }
        };
        for inv in &ta.invariants {
            scan(inv);
        }
        for e in &ta.edges {
            scan(&e.guard);
        }
        d
    }

    /// Textual dump, one line per non-empty pair.
    pub fn dump(&self, clock_names: &[String]) -> String {
        let name = |c: ClockIndex| {
            if c == 0 {
                "0".to_string()
            } else {
                clock_names
                    .get(c - 1)
                    .cloned()
                    .unwrap_or_else(|| format!("c{c}"))
            }
        };
        let mut out = String::new();
        for x in 0..self.dim {
            for y in 0..self.dim {
                let pair = self.bounds(x, y);
                if pair.is_empty() {
                    continue;
                }
                write!(out, "{}-{}:", name(x), name(y)).unwrap();
                for b in pair {
                    write!(out, " {b}").unwrap();
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Seeds the initial domain for an automaton; all modes share this content.
pub fn initial_domain(ta: &TimedAutomaton, _mode: DomainMode) -> AbstractDomain {
    AbstractDomain::from_automaton(ta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::parse_model;
    use crate::dbm::AtomicGuard;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(k: i64) -> Bound {
        Bound::weak(k)
    }

    /// The domain drawn with thick red lines in the running two-clock
    /// example: x compared with 2 or 3, y with 2, x-y with -1 or 2. A line
    /// admits both closed half-planes, hence bounds in both directions.
    fn fig_domain() -> AbstractDomain {
        let mut d = AbstractDomain::empty(3);
        for k in [2, 3] {
            d.add(1, 0, w(k));
            d.add(0, 1, w(-k));
        }
        d.add(2, 0, w(2));
        d.add(0, 2, w(-2));
        for k in [-1, 2] {
            d.add(1, 2, w(k));
            d.add(2, 1, w(-k));
        }
        d
    }

    #[test]
    fn alpha_of_unit_square() {
        // The abstraction of 1<=x,y<=2 under the figure domain is
        // 0<=x,y<=2 and -1<=x-y.
        let d = fig_domain();
        let mut z = Dbm::universe(3);
        z.constrain(AtomicGuard::new(1, 0, w(2)));
        z.constrain(AtomicGuard::new(0, 1, w(-1)));
        z.constrain(AtomicGuard::new(2, 0, w(2)));
        z.constrain(AtomicGuard::new(0, 2, w(-1)));
        let z = z.canonicalize();
        let a = d.alpha(&z);

        let mut expect = Dbm::universe(3);
        expect.constrain(AtomicGuard::new(1, 0, w(2)));
        expect.constrain(AtomicGuard::new(2, 0, w(2)));
        expect.constrain(AtomicGuard::new(2, 1, w(1)));
        let expect = expect.canonicalize();
        assert!(a.includes(&expect) && expect.includes(&a), "got {a}");
    }

    #[test]
    fn alpha_fixpoint_on_definable_zone() {
        let d = fig_domain();
        let mut z = Dbm::universe(3);
        z.constrain(AtomicGuard::new(1, 0, w(3)));
        z.constrain(AtomicGuard::new(2, 0, w(2)));
        z.constrain(AtomicGuard::new(1, 2, w(2)));
        let z = z.canonicalize();
        let a = d.alpha(&z);
        assert!(a.includes(&z) && z.includes(&a));
    }

    #[test]
    fn alpha_is_extensive_monotone_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let d = fig_domain();
        for _ in 0..300 {
            let z1 = crate::dbm::tests::random_zone(&mut rng, 2, 4);
            let z2 = crate::dbm::tests::random_zone(&mut rng, 2, 4);
            let a1 = d.alpha(&z1);
            assert!(a1.includes(&z1), "extensive");
            // Monotone on comparable pairs; intersection gives one for free.
            let meet = z1.intersect(&z2);
            if !meet.is_empty() {
                assert!(a1.includes(&d.alpha(&meet)), "monotone");
            }
            let again = d.alpha(&a1);
            assert!(again.includes(&a1) && a1.includes(&again), "idempotent");
        }
    }

    #[test]
    fn reflection_consistency() {
        let d = fig_domain();
        for x in 0..3 {
            for y in 0..3 {
                if x == y {
                    continue;
                }
                let direct: Vec<Bound> = d.bounds(x, y).to_vec();
                let mut mirrored: Vec<Bound> =
                    d.bounds(y, x).iter().map(|b| b.negated()).collect();
                mirrored.sort();
                assert_eq!(direct, mirrored);
            }
        }
    }

    #[test]
    fn refine_with_empty_is_identity() {
        let d = fig_domain();
        let d2 = d.refine_with([]);
        assert_eq!(d, d2);
    }

    #[test]
    fn refine_adds_both_directions_of_an_equality() {
        // An interpolant containing x = y + 2 contributes (x,y) <= 2 and
        // (y,x) <= -2 as written.
        let d = fig_domain().refine_with([(1, 2, w(2)), (2, 1, w(-2))]);
        assert!(d.bounds(1, 2).contains(&w(2)));
        assert!(d.bounds(2, 1).contains(&w(-2)));
    }

    #[test]
    fn initial_domain_contains_syntactic_guards() {
        let ta = parse_model(
            "clocks x y\nlocation a initial invariant x<=5\nlocation b\nedge a -> b guard x<=3 and x-y>2\ntarget b\n",
        )
        .unwrap();
        let d = initial_domain(&ta, DomainMode::Global);
        assert!(d.bounds(1, 0).contains(&w(3)));
        assert!(d.bounds(1, 0).contains(&w(5)));
        // x - y > 2 normalizes to y - x < -2; reflected it is (x,y) (2,<=).
        assert!(d.bounds(2, 1).contains(&Bound::strict(-2)));
        assert!(d.bounds(1, 2).contains(&w(2)));
    }

    #[test]
    fn alpha_fixes_guard_zones_under_initial_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for seed in 0..40 {
            let cfg = crate::oracle::GeneratorConfig {
                seed,
                ..Default::default()
            };
            let ta = crate::oracle::generate_model(&cfg);
            let d = initial_domain(&ta, DomainMode::Global);
            for e in &ta.edges {
                let gz = Dbm::of_guard(ta.dim(), &e.guard);
                if gz.is_empty() {
                    continue;
                }
                let a = d.alpha(&gz);
                assert!(a.includes(&gz) && gz.includes(&a), "guard zone moved");
            }
            let _ = &mut rng;
        }
    }
}
