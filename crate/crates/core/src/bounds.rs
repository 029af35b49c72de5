//! Bound algebra for difference constraints.
//!
//! A bound is either `(k, <)` / `(k, <=)` for an integer `k`, or the unique
//! top element `(inf, <)`.  Bounds are packed into a single `i64` as
//! `2*k + weak_bit` so that the natural order on the packed value agrees
//! with the bound order and min/add stay branch-light in the shortest-path
//! loops.

use std::fmt;

/// Index of a clock. Index 0 is the reference clock whose value is always 0.
pub type ClockIndex = usize;

/// The reference clock.
pub const REFERENCE_CLOCK: ClockIndex = 0;

/// An upper bound on a clock difference: `(k, <)`, `(k, <=)` or `(inf, <)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(i64);

const TOP_RAW: i64 = i64::MAX;

impl Bound {
    /// The unique top element `(inf, <)`.
    pub const TOP: Bound = Bound(TOP_RAW);

    /// `(0, <=)`, the additive identity.
    pub const LE_ZERO: Bound = Bound(1);

    /// `(0, <)`.
    pub const LT_ZERO: Bound = Bound(0);

    /// Builds the strict bound `(k, <)`.
    pub fn strict(k: i64) -> Bound {
        Bound(k.checked_mul(2).expect("bound constant overflow"))
    }

    /// Builds the weak bound `(k, <=)`.
    pub fn weak(k: i64) -> Bound {
        Bound(
            k.checked_mul(2)
                .and_then(|v| v.checked_add(1))
                .expect("bound constant overflow"),
        )
    }

    pub fn is_top(self) -> bool {
        self.0 == TOP_RAW
    }

    /// The constant `k`. Must not be called on top.
    pub fn value(self) -> i64 {
        debug_assert!(!self.is_top());
        self.0 >> 1
    }

    pub fn is_strict(self) -> bool {
        self.0 & 1 == 0
    }

    /// Bound addition: constants add, strictness is the conjunction of
    /// weaknesses, and top absorbs. Aborts on integer overflow.
    pub fn add(self, other: Bound) -> Bound {
        if self.is_top() || other.is_top() {
            return Bound::TOP;
        }
        let sum = self
            .0
            .checked_add(other.0)
            .expect("bound arithmetic overflow");
        Bound(sum - ((self.0 | other.0) & 1))
    }

    /// Negation used by domain reflection: `-(k, <=) = (-k, <)` and
    /// `-(k, <) = (-k, <=)`. Undefined on top.
    pub fn negated(self) -> Bound {
        assert!(!self.is_top(), "cannot negate the top bound");
        Bound(1 - self.0)
    }

    /// True if the difference `d` satisfies `d < k` / `d <= k`.
    pub fn admits(self, d: i64) -> bool {
        if self.is_top() {
            return true;
        }
        if self.is_strict() {
            d < self.value()
        } else {
            d <= self.value()
        }
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_top() {
            write!(f, "inf")
        } else if self.is_strict() {
            write!(f, "({},<)", self.value())
        } else {
            write!(f, "({},<=)", self.value())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_value_then_strictness() {
        assert!(Bound::strict(3) < Bound::weak(3));
        assert!(Bound::weak(3) < Bound::strict(4));
        assert!(Bound::weak(100) < Bound::TOP);
        assert!(Bound::strict(-5) < Bound::weak(-5));
    }

    #[test]
    fn addition_propagates_strictness() {
        assert_eq!(Bound::weak(2).add(Bound::strict(3)), Bound::strict(5));
        assert_eq!(Bound::weak(2).add(Bound::weak(3)), Bound::weak(5));
        assert_eq!(Bound::strict(2).add(Bound::strict(3)), Bound::strict(5));
    }

    #[test]
    fn top_absorbs() {
        assert_eq!(Bound::weak(7).add(Bound::TOP), Bound::TOP);
        assert_eq!(Bound::TOP.add(Bound::strict(-4)), Bound::TOP);
    }

    #[test]
    fn zero_is_identity() {
        assert_eq!(Bound::LE_ZERO.add(Bound::LE_ZERO), Bound::LE_ZERO);
        assert_eq!(Bound::weak(5).add(Bound::LE_ZERO), Bound::weak(5));
    }

    #[test]
    fn addition_is_associative_and_commutative_on_samples() {
        let samples = [
            Bound::strict(-3),
            Bound::weak(-1),
            Bound::LE_ZERO,
            Bound::strict(2),
            Bound::weak(4),
            Bound::TOP,
        ];
        for &a in &samples {
            for &b in &samples {
                assert_eq!(a.add(b), b.add(a));
                for &c in &samples {
                    assert_eq!(a.add(b).add(c), a.add(b.add(c)));
                }
            }
        }
    }

    #[test]
    fn negation_flips_strictness() {
        assert_eq!(Bound::weak(2).negated(), Bound::strict(-2));
        assert_eq!(Bound::strict(-2).negated(), Bound::weak(2));
        assert_eq!(Bound::LE_ZERO.negated(), Bound::LT_ZERO);
    }

    #[test]
    #[should_panic(expected = "overflow")]
    fn addition_overflow_is_reported() {
        let huge = Bound::weak(i64::MAX / 4);
        let _ = huge.add(huge);
    }

    #[test]
    fn admits_matches_comparison() {
        assert!(Bound::weak(3).admits(3));
        assert!(!Bound::strict(3).admits(3));
        assert!(Bound::strict(3).admits(2));
        assert!(Bound::TOP.admits(1 << 40));
    }
}
