//! Timed-automaton data model and the line-oriented text format.
//!
//! ```text
//! clocks x y
//! location l0 initial invariant x<=5
//! location l1
//! edge l0 -> l1 guard x>=2 and x-y<3 reset x y
//! target l1
//! ```
//!
//! `#` starts a comment. Atomic constraints are `x<k`, `x<=k`, `x>k`,
//! `x>=k`, `x-y<k`, `x-y<=k`, `x-y>k`, `x-y>=k` with `k` a decimal integer;
//! lower bounds are normalized into difference-upper-bound form at parse
//! time.

use crate::bounds::{Bound, ClockIndex, REFERENCE_CLOCK};
use crate::dbm::{AtomicGuard, Dbm, Guard};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// An edge `src --guard,resets--> dst`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub guard: Guard,
    pub resets: Vec<ClockIndex>,
}

/// A timed automaton with one designated target location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedAutomaton {
    pub clock_names: Vec<String>,
    pub location_names: Vec<String>,
    pub invariants: Vec<Guard>,
    pub edges: Vec<Edge>,
    pub initial: usize,
    pub target: usize,
}

/// A symbolic trace is a path given as edge indices with matching endpoints.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolicTrace {
    pub edges: Vec<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl TimedAutomaton {
    /// Number of DBM dimensions: clocks plus the reference clock.
    pub fn dim(&self) -> usize {
        self.clock_names.len() + 1
    }

    pub fn num_locations(&self) -> usize {
        self.location_names.len()
    }

    /// Edges leaving `loc`, with their indices.
    pub fn edges_from(&self, loc: usize) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.src == loc)
    }

    /// The root zone `{0}↑ ∩ I(l0)`.
    pub fn initial_zone(&self) -> Dbm {
        Dbm::zero(self.dim())
            .up()
            .intersect(&Dbm::of_guard(self.dim(), &self.invariants[self.initial]))
    }

    /// Zone successor through an edge.
    pub fn post_edge(&self, z: &Dbm, edge: usize) -> Dbm {
        let e = &self.edges[edge];
        z.post_edge(&e.guard, &e.resets, &self.invariants[e.dst])
    }

    /// Zone predecessor through an edge (exact adjoint of [`Self::post_edge`]).
    pub fn pre_edge(&self, z: &Dbm, edge: usize) -> Dbm {
        let e = &self.edges[edge];
        z.pre_edge(&e.guard, &e.resets, &self.invariants[e.dst])
    }

    /// Checks a trace by computing predecessors with plain zones, without
    /// any abstraction. Returns the non-empty set of initial valuations
    /// realizing the trace, or `None` when the trace is spurious.
    pub fn trace_feasible(&self, trace: &SymbolicTrace) -> Option<Dbm> {
        let mut z = Dbm::universe(self.dim());
        for &e in trace.edges.iter().rev() {
            z = self.pre_edge(&z, e);
            if z.is_empty() {
                return None;
            }
        }
        let first = self.initial_zone().intersect(&z);
        if first.is_empty() {
            None
        } else {
            Some(first)
        }
    }

    /// Checks that a trace's edges chain from the initial location.
    pub fn trace_well_formed(&self, trace: &SymbolicTrace) -> bool {
        let mut loc = self.initial;
        for &e in &trace.edges {
            match self.edges.get(e) {
                Some(edge) if edge.src == loc => loc = edge.dst,
                _ => return false,
            }
        }
        true
    }

    /// Largest constant appearing in any guard or invariant.
    pub fn max_constant(&self) -> i64 {
        let mut m = 0;
        let mut scan = |g: &Guard| {
            for a in g {
                if !a.bound.is_top() {
                    m = m.max(a.bound.value().abs());
                }
            }
        };
        for inv in &self.invariants {
            scan(inv);
        }
        for e in &self.edges {
            scan(&e.guard);
        }
        m
    }

    /// Equivalent automaton without location invariants: each edge guard
    /// absorbs the source invariant and the destination invariant with the
    /// resets substituted. Edges whose destination invariant became
    /// unsatisfiable at entry are dropped. Used by the symbolic engine,
    /// whose step relations have no invariant hook.
    pub fn compile_invariants(&self) -> TimedAutomaton {
        let mut out = self.clone();
        let mut edges = Vec::new();
        'edges: for e in &self.edges {
            let mut guard = e.guard.clone();
            guard.extend(self.invariants[e.src].iter().copied());
            for &a in &self.invariants[e.dst] {
                let reset = |c: ClockIndex| c != REFERENCE_CLOCK && e.resets.contains(&c);
                let (x, y) = (a.x, a.y);
                match (reset(x), reset(y)) {
                    (false, false) => guard.push(a),
                    (true, false) => guard.push(AtomicGuard::new(REFERENCE_CLOCK, y, a.bound)),
                    (false, true) => guard.push(AtomicGuard::new(x, REFERENCE_CLOCK, a.bound)),
                    (true, true) => {
                        if !a.bound.admits(0) {
                            continue 'edges;
                        }
                    }
                }
            }
            guard.retain(|a| !(a.x == REFERENCE_CLOCK && a.y == REFERENCE_CLOCK));
            edges.push(Edge {
                guard,
                ..e.clone()
            });
        }
        out.edges = edges;
        out.invariants = vec![Vec::new(); self.num_locations()];
        out
    }
}

struct Parser<'a> {
    clocks: HashMap<&'a str, ClockIndex>,
    clock_names: Vec<String>,
    locations: HashMap<&'a str, usize>,
    location_names: Vec<String>,
    invariants: Vec<Guard>,
    edges: Vec<Edge>,
    initial: Option<usize>,
    target: Option<usize>,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError {
        line,
        col,
        msg: msg.into(),
    }
}

impl<'a> Parser<'a> {
    fn clock(&self, tok: &str, line: usize, col: usize) -> Result<ClockIndex, ParseError> {
        self.clocks
            .get(tok)
            .copied()
            .ok_or_else(|| err(line, col, format!("undeclared clock `{tok}`")))
    }

    fn location(&self, tok: &str, line: usize, col: usize) -> Result<usize, ParseError> {
        self.locations
            .get(tok)
            .copied()
            .ok_or_else(|| err(line, col, format!("undeclared location `{tok}`")))
    }

    /// Parses one atomic constraint token, normalizing `>`/`>=` into
    /// difference-upper-bound form.
    fn atom(&self, tok: &str, line: usize, col: usize) -> Result<AtomicGuard, ParseError> {
        let ops = ["<=", ">=", "<", ">"];
        let (op_pos, op) = ops
            .iter()
            .filter_map(|op| tok.find(op).map(|p| (p, *op)))
            .min_by_key(|&(p, op)| (p, usize::MAX - op.len()))
            .ok_or_else(|| err(line, col, format!("expected a clock constraint, got `{tok}`")))?;
        let (lhs, rhs) = (&tok[..op_pos], &tok[op_pos + op.len()..]);
        let k: i64 = rhs
            .parse()
            .map_err(|_| err(line, col, format!("expected an integer constant, got `{rhs}`")))?;
        let (x, y) = match lhs.split_once('-') {
            Some((a, b)) => (self.clock(a, line, col)?, self.clock(b, line, col)?),
            None => (self.clock(lhs, line, col)?, REFERENCE_CLOCK),
        };
        if x == y {
            return Err(err(line, col, format!("constraint `{tok}` relates a clock to itself")));
        }
        Ok(match op {
            "<" => AtomicGuard::new(x, y, Bound::strict(k)),
            "<=" => AtomicGuard::new(x, y, Bound::weak(k)),
            ">" => AtomicGuard::new(y, x, Bound::strict(-k)),
            ">=" => AtomicGuard::new(y, x, Bound::weak(-k)),
            _ => unreachable!(),
        })
    }

    /// Parses `a<b and c-d>=e ...` until the token stream ends or a keyword
    /// from `stop` is reached. Returns the guard and the stop keyword seen.
    fn guard_clause(
        &self,
        toks: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
        stop: &[&str],
        line: usize,
    ) -> Result<(Guard, Option<&'a str>), ParseError> {
        let mut guard = Vec::new();
        let mut expect_atom = true;
        while let Some(&(col, tok)) = toks.peek() {
            if stop.contains(&tok) {
                return Ok((guard, Some(tok)));
            }
            toks.next();
            if expect_atom {
                guard.push(self.atom(tok, line, col)?);
                expect_atom = false;
            } else if tok == "and" {
                expect_atom = true;
            } else {
                return Err(err(line, col, format!("expected `and`, got `{tok}`")));
            }
        }
        if expect_atom && !guard.is_empty() {
            return Err(err(line, 0, "dangling `and`"));
        }
        Ok((guard, None))
    }
}

/// Parses the model text format.
pub fn parse_model(text: &str) -> Result<TimedAutomaton, ParseError> {
    let mut p = Parser {
        clocks: HashMap::new(),
        clock_names: Vec::new(),
        locations: HashMap::new(),
        location_names: Vec::new(),
        invariants: Vec::new(),
        edges: Vec::new(),
        initial: None,
        target: None,
    };
    let mut pending_edges: Vec<(usize, Vec<(usize, &str)>)> = Vec::new();
    let mut saw_clocks = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content
            .split_whitespace()
            .map(|t| (t.as_ptr() as usize - content.as_ptr() as usize + 1, t))
            .peekable();
        let Some((col0, head)) = toks.next() else {
            continue;
        };
        match head {
            "clocks" => {
                if saw_clocks {
                    return Err(err(line, col0, "duplicate `clocks` line"));
                }
                saw_clocks = true;
                for (col, name) in toks {
                    if ["and", "clocks", "location", "edge", "target"].contains(&name)
                        || name.contains(|c: char| !c.is_alphanumeric() && c != '_')
                    {
                        return Err(err(line, col, format!("invalid clock name `{name}`")));
                    }
                    let idx = p.clock_names.len() + 1;
                    if p.clocks.insert(name, idx).is_some() {
                        return Err(err(line, col, format!("duplicate clock `{name}`")));
                    }
                    p.clock_names.push(name.to_string());
                }
            }
            "location" => {
                let (col, name) = toks
                    .next()
                    .ok_or_else(|| err(line, col0, "missing location name"))?;
                let idx = p.location_names.len();
                if p.locations.insert(name, idx).is_some() {
                    return Err(err(line, col, format!("duplicate location `{name}`")));
                }
                p.location_names.push(name.to_string());
                let mut invariant = Vec::new();
                while let Some((col, tok)) = toks.next() {
                    match tok {
                        "initial" => {
                            if p.initial.is_some() {
                                return Err(err(line, col, "more than one initial location"));
                            }
                            p.initial = Some(idx);
                        }
                        "invariant" => {
                            let (g, _) = p.guard_clause(&mut toks, &["initial"], line)?;
                            if g.is_empty() {
                                return Err(err(line, col, "empty invariant clause"));
                            }
                            invariant.extend(g);
                        }
                        _ => return Err(err(line, col, format!("unexpected token `{tok}`"))),
                    }
                }
                p.invariants.push(invariant);
            }
            "edge" => {
                // Edge lines may reference locations declared later; defer.
                pending_edges.push((line, toks.collect()));
            }
            "target" => {
                let (col, name) = toks
                    .next()
                    .ok_or_else(|| err(line, col0, "missing target location"))?;
                if p.target.is_some() {
                    return Err(err(line, col, "duplicate `target` line"));
                }
                p.target = Some(p.location(name, line, col)?);
            }
            _ => return Err(err(line, col0, format!("unknown directive `{head}`"))),
        }
    }

    for (line, toks) in pending_edges {
        let mut toks = toks.into_iter().peekable();
        let (col, src_name) = toks.next().ok_or_else(|| err(line, 1, "missing source location"))?;
        let src = p.location(src_name, line, col)?;
        match toks.next() {
            Some((_, "->")) => {}
            other => {
                let col = other.map(|(c, _)| c).unwrap_or(col);
                return Err(err(line, col, "expected `->`"));
            }
        }
        let (col, dst_name) = toks.next().ok_or_else(|| err(line, col, "missing destination location"))?;
        let dst = p.location(dst_name, line, col)?;
        let mut guard = Vec::new();
        let mut resets = Vec::new();
        while let Some((col, tok)) = toks.next() {
            match tok {
                "guard" => {
                    let (g, _) = p.guard_clause(&mut toks, &["reset"], line)?;
                    if g.is_empty() {
                        return Err(err(line, col, "empty guard clause"));
                    }
                    guard.extend(g);
                }
                "reset" => {
                    while let Some((col, name)) = toks.next() {
                        let c = p.clock(name, line, col)?;
                        if !resets.contains(&c) {
                            resets.push(c);
                        }
                    }
                }
                _ => return Err(err(line, col, format!("unexpected token `{tok}`"))),
            }
        }
        p.edges.push(Edge {
            src,
            dst,
            guard,
            resets,
        });
    }

    let initial = p.initial.ok_or_else(|| err(1, 1, "no initial location"))?;
    let target = p.target.ok_or_else(|| err(1, 1, "no target location"))?;
    let ta = TimedAutomaton {
        clock_names: p.clock_names,
        location_names: p.location_names,
        invariants: p.invariants,
        edges: p.edges,
        initial,
        target,
    };
    // The zero valuation must satisfy the initial invariant.
    for a in &ta.invariants[ta.initial] {
        if !a.bound.admits(0) {
            return Err(err(
                1,
                1,
                "invariant of the initial location rejects the zero valuation",
            ));
        }
    }
    Ok(ta)
}

fn write_atom(out: &mut String, names: &[String], a: &AtomicGuard) {
    use fmt::Write;
    let name = |c: ClockIndex| names[c - 1].as_str();
    // Entries with x = 0 are lower bounds `0 - y <= k`; print as `y >= -k`.
    let (text, k) = if a.x == REFERENCE_CLOCK {
        let op = if a.bound.is_strict() { ">" } else { ">=" };
        (format!("{}{}", name(a.y), op), -a.bound.value())
    } else {
        let lhs = if a.y == REFERENCE_CLOCK {
            name(a.x).to_string()
        } else {
            format!("{}-{}", name(a.x), name(a.y))
        };
        let op = if a.bound.is_strict() { "<" } else { "<=" };
        (format!("{lhs}{op}"), a.bound.value())
    };
    write!(out, "{text}{k}").unwrap();
}

fn write_guard(out: &mut String, names: &[String], g: &Guard) {
    for (i, a) in g.iter().enumerate() {
        if i > 0 {
            out.push_str(" and ");
        }
        write_atom(out, names, a);
    }
}

/// Renders an automaton in the model text format; inverse of [`parse_model`].
pub fn emit_model(ta: &TimedAutomaton) -> String {
    let mut out = String::new();
    use fmt::Write;
    write!(out, "clocks").unwrap();
    for c in &ta.clock_names {
        write!(out, " {c}").unwrap();
    }
    out.push('\n');
    for (i, name) in ta.location_names.iter().enumerate() {
        write!(out, "location {name}").unwrap();
        if i == ta.initial {
            out.push_str(" initial");
        }
        if !ta.invariants[i].is_empty() {
            out.push_str(" invariant ");
            write_guard(&mut out, &ta.clock_names, &ta.invariants[i]);
        }
        out.push('\n');
    }
    for e in &ta.edges {
        write!(
            out,
            "edge {} -> {}",
            ta.location_names[e.src], ta.location_names[e.dst]
        )
        .unwrap();
        if !e.guard.is_empty() {
            out.push_str(" guard ");
            write_guard(&mut out, &ta.clock_names, &e.guard);
        }
        if !e.resets.is_empty() {
            out.push_str(" reset");
            for &c in &e.resets {
                write!(out, " {}", ta.clock_names[c - 1]).unwrap();
            }
        }
        out.push('\n');
    }
    writeln!(out, "target {}", ta.location_names[ta.target]).unwrap();
    out
}
