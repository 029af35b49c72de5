//! Zone interpolants.
//!
//! For disjoint canonical zones `a` and `b`, an interpolant is a zone
//! containing `a` and disjoint from `b`. Disjointness of `min(a, b)` is
//! witnessed by a negative cycle mixing entries of both matrices; the
//! conjunction of the `a`-entries on such a cycle is an interpolant, and
//! minimizing the number of `a`-edges on a negative cycle minimizes the
//! interpolant's density (its count of finite off-diagonal constraints).

use crate::bounds::{Bound, ClockIndex};
use crate::dbm::Dbm;

/// Which matrix an edge of a separating cycle was taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Entry of the zone the interpolant must contain.
    Container,
    /// Entry of the zone the interpolant must avoid.
    Excluded,
}

/// A separating zone together with the cycle it was extracted from.
#[derive(Clone, Debug)]
pub struct Interpolant {
    /// Container-side constraints `x - y ≺ k`: the interpolant itself.
    pub constraints: Vec<(ClockIndex, ClockIndex, Bound)>,
    /// The full negative cycle, both sides.
    pub cycle: Vec<(ClockIndex, ClockIndex, Side, Bound)>,
}

impl Interpolant {
    /// Count of distinct constrained pairs.
    pub fn density(&self) -> usize {
        self.constraints.len()
    }

    /// The interpolant as a zone over non-negative valuations.
    pub fn as_zone(&self, dim: usize) -> Dbm {
        let mut d = Dbm::universe(dim);
        for &(x, y, b) in &self.constraints {
            d.constrain(crate::dbm::AtomicGuard::new(x, y, b));
        }
        d.canonicalize()
    }

    /// Every constraint of the cycle, both sides, for domain refinement.
    pub fn cycle_constraints(&self) -> Vec<(ClockIndex, ClockIndex, Bound)> {
        self.cycle.iter().map(|&(x, y, _, b)| (x, y, b)).collect()
    }
}

/// Result of the minimal-interpolant computation.
#[derive(Clone, Debug)]
pub enum MinInterp {
    /// The zones intersect; no interpolant exists.
    Intersecting,
    /// Disjoint, with the smallest possible interpolant density `k`.
    Separated { k: usize, interpolant: Interpolant },
}

/// Count of finite off-diagonal entries of a matrix.
pub fn density(d: &Dbm) -> usize {
    let n = d.dim();
    let mut count = 0;
    for x in 0..n {
        for y in 0..n {
            if x != y && !d.get(x, y).is_top() {
                count += 1;
            }
        }
    }
    count
}

/// Merges consecutive same-side edges of a cycle (including around the
/// wrap) using canonicity of the source matrices, then checks strict
/// alternation. Returns the compacted cycle.
fn compact_cycle(
    mut cycle: Vec<(ClockIndex, ClockIndex, Side, Bound)>,
    container: &Dbm,
    excluded: &Dbm,
) -> Vec<(ClockIndex, ClockIndex, Side, Bound)> {
    let entry = |side: Side, x: ClockIndex, y: ClockIndex| match side {
        Side::Container => container.get(x, y),
        Side::Excluded => excluded.get(x, y),
    };
    loop {
        // Self-loops carry the diagonal (0,<=) and can be dropped.
        cycle.retain(|&(x, y, _, _)| x != y);
        let n = cycle.len();
        if n <= 1 {
            break;
        }
        let mut merged = false;
        for i in 0..n {
            let j = (i + 1) % n;
            let (x1, _, s1, _) = cycle[i];
            let (_, y2, s2, _) = cycle[j];
            if s1 == s2 {
                let b = entry(s1, x1, y2);
                if i < j {
                    cycle[i] = (x1, y2, s1, b);
                    cycle.remove(j);
                } else {
                    cycle[j] = (x1, y2, s1, b);
                    cycle.remove(i);
                }
                merged = true;
                break;
            }
        }
        if !merged {
            break;
        }
    }
    for i in 0..cycle.len() {
        let j = (i + 1) % cycle.len();
        assert_ne!(
            cycle[i].2, cycle[j].2,
            "separating cycle must alternate sides"
        );
    }
    cycle
}

fn cycle_to_interpolant(
    cycle: Vec<(ClockIndex, ClockIndex, Side, Bound)>,
    container: &Dbm,
    excluded: &Dbm,
) -> Interpolant {
    let cycle = compact_cycle(cycle, container, excluded);
    let total = cycle
        .iter()
        .fold(Bound::LE_ZERO, |acc, &(_, _, _, w)| acc.add(w));
    assert!(total < Bound::LE_ZERO, "compacted cycle lost negativity");
    let mut constraints = Vec::new();
    for &(x, y, side, b) in &cycle {
        if side == Side::Container && !constraints.iter().any(|&(cx, cy, _)| (cx, cy) == (x, y)) {
            constraints.push((x, y, b));
        }
    }
    Interpolant { constraints, cycle }
}

/// Bellman-Ford negative-cycle detection over the pointwise minimum of the
/// two matrices. Returns an elementary negative cycle as edges, or `None`
/// if the intersection is non-empty.
fn min_graph_negative_cycle(
    container: &Dbm,
    excluded: &Dbm,
) -> Option<Vec<(ClockIndex, ClockIndex, Side, Bound)>> {
    let n = container.dim();
    // Ties go to the excluded side: container edges are counted, so use
    // them only when strictly better.
    let weight = |x: usize, y: usize| -> (Bound, Side) {
        let c = container.get(x, y);
        let e = excluded.get(x, y);
        if c < e {
            (c, Side::Container)
        } else {
            (e, Side::Excluded)
        }
    };
    let mut dist = vec![Bound::LE_ZERO; n];
    let mut pred = vec![usize::MAX; n];
    let mut changed_node = None;
    for _ in 0..=n {
        changed_node = None;
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let (w, _) = weight(x, y);
                if w.is_top() {
                    continue;
                }
                let cand = dist[x].add(w);
                if cand < dist[y] {
                    dist[y] = cand;
                    pred[y] = x;
                    changed_node = Some(y);
                }
            }
        }
        if changed_node.is_none() {
            return None;
        }
    }
    // Walk predecessors to land inside the cycle, then collect it.
    let mut v = changed_node.unwrap();
    for _ in 0..n {
        v = pred[v];
    }
    let mut cycle_nodes = vec![v];
    let mut u = pred[v];
    while u != v {
        cycle_nodes.push(u);
        u = pred[u];
    }
    cycle_nodes.reverse();
    let mut edges = Vec::new();
    for i in 0..cycle_nodes.len() {
        let x = cycle_nodes[i];
        let y = cycle_nodes[(i + 1) % cycle_nodes.len()];
        let (w, side) = weight(x, y);
        edges.push((x, y, side, w));
    }
    Some(edges)
}

/// Interpolant from one negative cycle of `min(a, b)`, shortened so the
/// cycle strictly alternates between the two matrices. The density is at
/// most half the number of clocks (including the reference clock), rounded
/// up. Returns `None` when the zones intersect.
pub fn interpolant_simple(a: &Dbm, b: &Dbm) -> Option<Interpolant> {
    assert!(a.is_canonical() && b.is_canonical());
    let cycle = min_graph_negative_cycle(a, b)?;
    let interp = cycle_to_interpolant(cycle, a, b);
    debug_assert!(interp.as_zone(a.dim()).includes(a));
    debug_assert!(interp.as_zone(a.dim()).intersect(b).is_empty());
    Some(interp)
}

/// Provenance of one matrix cell in the minimal-interpolant iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Prov {
    /// Value copied from the previous matrix at the same cell.
    Copy,
    /// Previous matrix at `(x, z)` plus a container edge `(z, y)`.
    AppendContainer(usize),
    /// Current row matrix at `(x, z)` plus an excluded edge `(z, y)`.
    AppendExcluded(usize),
}

struct Layer {
    values: Vec<Bound>,
    prov: Vec<Prov>,
}

impl Layer {
    fn get(&self, n: usize, x: usize, y: usize) -> Bound {
        self.values[x * n + y]
    }
}

/// Shortest paths restricted to excluded-side edges (those where the
/// excluded matrix is no worse than the container's). Path reconstruction
/// reruns a Bellman-Ford walk, which is exact because this subgraph has no
/// negative cycle on its own.
struct BaseGraph {
    n: usize,
    edges: Vec<(usize, usize, Bound)>,
}

impl BaseGraph {
    fn new(container: &Dbm, excluded: &Dbm) -> BaseGraph {
        let n = container.dim();
        let mut edges = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if x != y && excluded.get(x, y) <= container.get(x, y) && !excluded.get(x, y).is_top()
                {
                    edges.push((x, y, excluded.get(x, y)));
                }
            }
        }
        BaseGraph { n, edges }
    }

    fn closure(&self) -> Vec<Bound> {
        let n = self.n;
        let mut dist = vec![Bound::TOP; n * n];
        for x in 0..n {
            dist[x * n + x] = Bound::LE_ZERO;
        }
        for &(x, y, w) in &self.edges {
            dist[x * n + y] = dist[x * n + y].min(w);
        }
        for z in 0..n {
            for x in 0..n {
                let xz = dist[x * n + z];
                if xz.is_top() {
                    continue;
                }
                for y in 0..n {
                    let cand = xz.add(dist[z * n + y]);
                    if cand < dist[x * n + y] {
                        dist[x * n + y] = cand;
                    }
                }
            }
        }
        dist
    }

    /// Shortest path from `x` to `y` as a list of edges; `cost` is the
    /// already-computed closure value.
    fn path(&self, x: usize, y: usize, cost: Bound) -> Vec<(usize, usize, Bound)> {
        if x == y && cost == Bound::LE_ZERO {
            return Vec::new();
        }
        let n = self.n;
        let mut dist = vec![Bound::TOP; n];
        let mut pred: Vec<Option<(usize, Bound)>> = vec![None; n];
        dist[x] = Bound::LE_ZERO;
        for _ in 0..n {
            for &(u, v, w) in &self.edges {
                if dist[u].is_top() {
                    continue;
                }
                let cand = dist[u].add(w);
                if cand < dist[v] {
                    dist[v] = cand;
                    pred[v] = Some((u, w));
                }
            }
        }
        assert_eq!(dist[y], cost, "path reconstruction mismatch");
        let mut path = Vec::new();
        let mut v = y;
        while v != x || path.is_empty() {
            let (u, w) = pred[v].expect("broken predecessor chain");
            path.push((u, v, w));
            v = u;
            if path.len() > n {
                panic!("path reconstruction looped");
            }
        }
        path.reverse();
        path
    }
}

/// Minimal interpolant via iterated relaxation: after `i` rounds the
/// matrix `N^i` holds the least weight of any path using at most `i`
/// container edges; the first round producing a negative diagonal yields
/// the minimal density `k` and the cycle behind it.
pub fn minimal_interpolant(a: &Dbm, b: &Dbm) -> MinInterp {
    assert!(a.is_canonical() && b.is_canonical());
    let (container, excluded) = (a, b);
    let n = container.dim();
    let base = BaseGraph::new(container, excluded);

    // N^0: closure over excluded-side edges only. No negative diagonal is
    // possible here because the excluded matrix is canonical and non-empty.
    let n0 = Layer {
        values: base.closure(),
        prov: vec![Prov::Copy; n * n],
    };
    for x in 0..n {
        assert!(n0.get(n, x, x) >= Bound::LE_ZERO);
    }

    // Container edges: strictly better than the excluded side.
    let container_edge = |z: usize, y: usize| -> Option<Bound> {
        let c = container.get(z, y);
        if !c.is_top() && c < excluded.get(z, y) {
            Some(c)
        } else {
            None
        }
    };

    let mut layers: Vec<(Layer, Layer)> = Vec::new();
    let mut prev = n0;
    let max_rounds = n / 2;
    let mut hit: Option<(usize, usize)> = None;

    'outer: for round in 1..=max_rounds {
        let mut m = Layer {
            values: vec![Bound::TOP; n * n],
            prov: vec![Prov::Copy; n * n],
        };
        for x in 0..n {
            for y in 0..n {
                let mut best = prev.get(n, x, y);
                let mut prov = Prov::Copy;
                for z in 0..n {
                    if let Some(w) = container_edge(z, y) {
                        let cand = prev.get(n, x, z).add(w);
                        if cand < best {
                            best = cand;
                            prov = Prov::AppendContainer(z);
                        }
                    }
                }
                m.values[x * n + y] = best;
                m.prov[x * n + y] = prov;
            }
        }
        let mut nn = Layer {
            values: vec![Bound::TOP; n * n],
            prov: vec![Prov::Copy; n * n],
        };
        for x in 0..n {
            for y in 0..n {
                let mut best = m.get(n, x, y);
                let mut prov = Prov::Copy;
                for z in 0..n {
                    let e = excluded.get(z, y);
                    if z != y && !e.is_top() && e <= container.get(z, y) {
                        let cand = m.get(n, x, z).add(e);
                        if cand < best {
                            best = cand;
                            prov = Prov::AppendExcluded(z);
                        }
                    }
                }
                nn.values[x * n + y] = best;
                nn.prov[x * n + y] = prov;
            }
        }
        let diag_hit = (0..n).find(|&x| nn.get(n, x, x) < Bound::LE_ZERO);
        layers.push((m, nn));
        if let Some(x) = diag_hit {
            hit = Some((round, x));
            break 'outer;
        }
        prev = Layer {
            values: layers.last().unwrap().1.values.clone(),
            prov: vec![Prov::Copy; n * n],
        };
    }

    let Some((k, start)) = hit else {
        debug_assert!(!a.intersect(b).is_empty());
        return MinInterp::Intersecting;
    };

    // Reconstruct the negative cycle by unwinding provenance through the
    // layer stack.
    fn reconstruct(
        layers: &[(Layer, Layer)],
        base: &BaseGraph,
        n: usize,
        level: usize,
        in_n: bool,
        x: usize,
        y: usize,
        out: &mut Vec<(usize, usize, Side, Bound)>,
        container: &Dbm,
        excluded: &Dbm,
    ) {
        if level == 0 {
            // Base closure: a pure excluded-side path.
            let cost = if x == y {
                // Only the trivial empty path is ever referenced on the
                // diagonal at level 0.
                Bound::LE_ZERO
            } else {
                base.closure()[x * n + y]
            };
            for (u, v, w) in base.path(x, y, cost) {
                out.push((u, v, Side::Excluded, w));
            }
            return;
        }
        let (m, nn) = &layers[level - 1];
        if in_n {
            match nn.prov[x * n + y] {
                Prov::Copy => reconstruct(layers, base, n, level, false, x, y, out, container, excluded),
                Prov::AppendExcluded(z) => {
                    reconstruct(layers, base, n, level, false, x, z, out, container, excluded);
                    out.push((z, y, Side::Excluded, excluded.get(z, y)));
                }
                Prov::AppendContainer(_) => unreachable!(),
            }
        } else {
            match m.prov[x * n + y] {
                Prov::Copy => {
                    reconstruct(layers, base, n, level - 1, true, x, y, out, container, excluded)
                }
                Prov::AppendContainer(z) => {
                    reconstruct(layers, base, n, level - 1, true, x, z, out, container, excluded);
                    out.push((z, y, Side::Container, container.get(z, y)));
                }
                Prov::AppendExcluded(_) => unreachable!(),
            }
        }
    }

    let mut cycle = Vec::new();
    reconstruct(
        &layers, &base, n, k, true, start, start, &mut cycle, container, excluded,
    );
    let total = cycle
        .iter()
        .fold(Bound::LE_ZERO, |acc, &(_, _, _, w)| acc.add(w));
    assert!(total < Bound::LE_ZERO, "reconstructed cycle not negative");

    let interpolant = cycle_to_interpolant(cycle, container, excluded);
    let k_actual = interpolant
        .cycle
        .iter()
        .filter(|&&(_, _, s, _)| s == Side::Container)
        .count();
    assert_eq!(k_actual, k, "compacted cycle changed the container count");
    debug_assert!(interpolant.as_zone(n).includes(a));
    debug_assert!(interpolant.as_zone(n).intersect(b).is_empty());
    MinInterp::Separated { k, interpolant }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbm::fixtures::{zone_a_no_simple_interpolant, zone_b_no_simple_interpolant};
    use crate::dbm::tests::random_zone;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive minimal density: smallest subset of the container's
    /// finite off-diagonal entries whose conjunction avoids the excluded
    /// zone. Containment is automatic.
    pub(crate) fn exhaustive_min_density(a: &Dbm, b: &Dbm) -> Option<usize> {
        let n = a.dim();
        let mut entries = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if x != y && !a.get(x, y).is_top() {
                    entries.push((x, y, a.get(x, y)));
                }
            }
        }
        for size in 1..=entries.len() {
            let mut chosen = vec![0usize; size];
            // Enumerate size-subsets by indices.
            fn walk(
                entries: &[(usize, usize, Bound)],
                chosen: &mut Vec<usize>,
                depth: usize,
                start: usize,
                n: usize,
                b: &Dbm,
            ) -> bool {
                if depth == chosen.len() {
                    let mut z = Dbm::universe(n);
                    for &i in chosen.iter() {
                        let (x, y, bound) = entries[i];
                        z.constrain(crate::dbm::AtomicGuard::new(x, y, bound));
                    }
                    return z.canonicalize().intersect(b).is_empty();
                }
                for i in start..entries.len() {
                    chosen[depth] = i;
                    if walk(entries, chosen, depth + 1, i + 1, n, b) {
                        return true;
                    }
                }
                false
            }
            if walk(&entries, &mut chosen, 0, 0, n, b) {
                return Some(size);
            }
        }
        None
    }

    #[test]
    fn density_counts_finite_off_diagonals() {
        assert_eq!(density(&Dbm::unconstrained(4)), 0);
        let mut d = Dbm::unconstrained(4);
        d.constrain(crate::dbm::AtomicGuard::new(1, 2, Bound::weak(2)));
        assert_eq!(density(&d), 1);
        assert_eq!(density(&zone_b_no_simple_interpolant()), 12);
    }

    #[test]
    fn overlapping_zones_have_no_interpolant() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let z = random_zone(&mut rng, 3, 5);
        assert!(interpolant_simple(&z, &z).is_none());
        assert!(matches!(minimal_interpolant(&z, &z), MinInterp::Intersecting));
    }

    #[test]
    fn fixture_pair_has_no_simple_interpolant_but_density_two() {
        let a = zone_a_no_simple_interpolant();
        let b = zone_b_no_simple_interpolant();
        // No single-constraint interpolant: a(x,y) + b(y,x) >= (0,<=) for
        // every ordered pair.
        for x in 0..4 {
            for y in 0..4 {
                if x != y {
                    assert!(a.get(x, y).add(b.get(y, x)) >= Bound::LE_ZERO);
                }
            }
        }
        assert_eq!(exhaustive_min_density(&a, &b), Some(2));
        match minimal_interpolant(&a, &b) {
            MinInterp::Separated { k, interpolant } => {
                assert_eq!(k, 2);
                assert_eq!(interpolant.density(), 2);
                let z = interpolant.as_zone(4);
                assert!(z.includes(&a));
                assert!(z.intersect(&b).is_empty());
            }
            MinInterp::Intersecting => panic!("fixture zones are disjoint"),
        }
    }

    #[test]
    fn simple_interpolant_on_fixture() {
        let a = zone_a_no_simple_interpolant();
        let b = zone_b_no_simple_interpolant();
        let i = interpolant_simple(&a, &b).expect("disjoint");
        let z = i.as_zone(4);
        assert!(z.includes(&a));
        assert!(z.intersect(&b).is_empty());
        assert!(i.density() <= 2, "density bound |C0|/2");
    }

    fn random_disjoint_pair(rng: &mut ChaCha8Rng, clocks: usize, max_c: i64) -> (Dbm, Dbm) {
        loop {
            let a = random_zone(rng, clocks, max_c);
            let b = random_zone(rng, clocks, max_c);
            if a.intersect(&b).is_empty() {
                return (a, b);
            }
        }
    }

    #[test]
    fn random_pairs_simple_interpolant_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..300 {
            let (a, b) = random_disjoint_pair(&mut rng, 3, 5);
            let i = interpolant_simple(&a, &b).expect("disjoint");
            let z = i.as_zone(a.dim());
            assert!(z.includes(&a));
            assert!(z.intersect(&b).is_empty());
            assert!(i.density() <= 2, "|C0| = 4 gives bound 2");
        }
    }

    #[test]
    fn random_pairs_minimal_matches_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..200 {
            let (a, b) = random_disjoint_pair(&mut rng, 3, 4);
            match minimal_interpolant(&a, &b) {
                MinInterp::Separated { k, interpolant } => {
                    assert_eq!(Some(k), exhaustive_min_density(&a, &b));
                    let z = interpolant.as_zone(a.dim());
                    assert!(z.includes(&a));
                    assert!(z.intersect(&b).is_empty());
                    assert!(k <= 2);
                }
                MinInterp::Intersecting => panic!("pair was disjoint"),
            }
        }
    }

    #[test]
    fn verdict_agrees_with_intersection() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..300 {
            let a = random_zone(&mut rng, 2, 4);
            let b = random_zone(&mut rng, 2, 4);
            let intersecting = !a.intersect(&b).is_empty();
            assert_eq!(
                matches!(minimal_interpolant(&a, &b), MinInterp::Intersecting),
                intersecting
            );
            assert_eq!(interpolant_simple(&a, &b).is_none(), intersecting);
        }
    }

    #[test]
    fn refinement_by_cycle_separates_abstractions() {
        use crate::domain::AbstractDomain;
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..150 {
            let (a, b) = random_disjoint_pair(&mut rng, 2, 4);
            let MinInterp::Separated { interpolant, .. } = minimal_interpolant(&a, &b) else {
                panic!("disjoint");
            };
            let d = AbstractDomain::empty(a.dim()).refine_with(interpolant.cycle_constraints());
            let aa = d.alpha(&a);
            let ab = d.alpha(&b);
            assert!(
                aa.intersect(&ab).is_empty(),
                "refined abstractions must separate: {aa} vs {ab}"
            );
        }
    }
}
