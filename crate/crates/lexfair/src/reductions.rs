//! Constructive hardness reductions with encoders, decoders, and independent
//! oracles:
//!
//! * a (2/2/3)-SAT formula (each variable occurs in exactly four clauses,
//!   twice positively and twice negatively) becomes an instance whose
//!   EFX + rank-maximal allocations correspond exactly to satisfying
//!   assignments, and
//! * a balanced tripartite graph becomes, for any fixed `k ≥ 1`, an instance
//!   whose EFk + rank-maximal allocations correspond exactly to partitions
//!   of the vertices into triangles.
//!
//! Good and agent ids follow a fixed layout so reduced instances serialize
//! deterministically; the layout structs expose the id arithmetic.

use rand::Rng;
use thiserror::Error;

use crate::efficiency::is_rank_maximal;
use crate::fairness::{is_ef_k, is_efx};
use crate::model::{Allocation, Bundle, Good, Instance, Ranking};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("invalid formula: {0}")]
    InvalidSat(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("assignment does not satisfy the formula")]
    Unsatisfied,
    #[error("allocation is not EFX on the reduced instance")]
    NotEfx,
    #[error("allocation is not EF{0} on the reduced instance")]
    NotEfk(usize),
    #[error("allocation is not rank-maximal on the reduced instance")]
    NotRankMaximal,
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),
    #[error("oracle size guard: {0}")]
    SizeGuard(String),
}

// ---------------------------------------------------------------------------
// (2/2/3)-SAT
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lit {
    pub var: usize,
    pub negated: bool,
}

impl Lit {
    pub fn pos(var: usize) -> Lit {
        Lit {
            var,
            negated: false,
        }
    }

    pub fn neg(var: usize) -> Lit {
        Lit { var, negated: true }
    }

    pub fn satisfied_by(self, assignment: &[bool]) -> bool {
        assignment[self.var] != self.negated
    }
}

/// A 3-CNF formula in which every variable occurs in exactly four clauses,
/// twice negated and twice non-negated, with each polarity pair split across
/// two distinct clauses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sat223Instance {
    pub num_vars: usize,
    pub clauses: Vec<[Lit; 3]>,
}

impl Sat223Instance {
    pub fn validate(&self) -> Result<(), ReductionError> {
        let r = self.num_vars;
        let s = self.clauses.len();
        if 3 * s != 4 * r {
            return Err(ReductionError::InvalidSat(format!(
                "3·{s} literal slots cannot host 4·{r} occurrences"
            )));
        }
        let mut pos: Vec<Vec<usize>> = vec![Vec::new(); r];
        let mut neg: Vec<Vec<usize>> = vec![Vec::new(); r];
        for (j, clause) in self.clauses.iter().enumerate() {
            for lit in clause {
                if lit.var >= r {
                    return Err(ReductionError::InvalidSat(format!(
                        "clause {} mentions variable {} of {r}",
                        j + 1,
                        lit.var + 1
                    )));
                }
                if lit.negated {
                    neg[lit.var].push(j);
                } else {
                    pos[lit.var].push(j);
                }
            }
        }
        for v in 0..r {
            if pos[v].len() != 2 || neg[v].len() != 2 {
                return Err(ReductionError::InvalidSat(format!(
                    "variable {} occurs {}+/{}−, expected 2/2",
                    v + 1,
                    pos[v].len(),
                    neg[v].len()
                )));
            }
            if pos[v][0] == pos[v][1] || neg[v][0] == neg[v][1] {
                return Err(ReductionError::InvalidSat(format!(
                    "variable {} repeats a polarity within one clause",
                    v + 1
                )));
            }
        }
        Ok(())
    }

    /// The two clauses containing the positive literal of `var`, ascending.
    pub fn positive_clauses(&self, var: usize) -> [usize; 2] {
        self.polarity_clauses(var, false)
    }

    /// The two clauses containing the negative literal of `var`, ascending.
    pub fn negative_clauses(&self, var: usize) -> [usize; 2] {
        self.polarity_clauses(var, true)
    }

    fn polarity_clauses(&self, var: usize, negated: bool) -> [usize; 2] {
        let mut found = Vec::with_capacity(2);
        for (j, clause) in self.clauses.iter().enumerate() {
            if clause.iter().any(|l| l.var == var && l.negated == negated) {
                found.push(j);
            }
        }
        [found[0], found[1]]
    }
}

pub fn validate_223sat(sat: &Sat223Instance) -> bool {
    sat.validate().is_ok()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthAssignment(pub Vec<bool>);

impl TruthAssignment {
    pub fn satisfies(&self, sat: &Sat223Instance) -> bool {
        sat.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.satisfied_by(&self.0)))
    }
}

/// Id arithmetic for the reduced SAT instance: `4r` agents (positive and
/// negative literal agents, then paired dummy agents) and `4r + s` goods in
/// reference order (signature pairs, top dummies, clause goods, bottom
/// dummies).
#[derive(Clone, Copy, Debug)]
pub struct SatLayout {
    pub r: usize,
    pub s: usize,
}

impl SatLayout {
    pub fn of(sat: &Sat223Instance) -> SatLayout {
        SatLayout {
            r: sat.num_vars,
            s: sat.clauses.len(),
        }
    }

    pub fn n(self) -> usize {
        4 * self.r
    }

    pub fn m(self) -> usize {
        4 * self.r + self.s
    }

    pub fn sig_good(self, i: usize) -> usize {
        2 * i
    }

    pub fn sigbar_good(self, i: usize) -> usize {
        2 * i + 1
    }

    pub fn top_good(self, i: usize) -> usize {
        2 * self.r + i
    }

    pub fn clause_good(self, j: usize) -> usize {
        3 * self.r + j
    }

    pub fn bottom_good(self, i: usize) -> usize {
        3 * self.r + self.s + i
    }

    pub fn pos_agent(self, i: usize) -> usize {
        2 * i
    }

    pub fn neg_agent(self, i: usize) -> usize {
        2 * i + 1
    }

    pub fn dummy_agent(self, i: usize) -> usize {
        2 * self.r + 2 * i
    }

    pub fn dummybar_agent(self, i: usize) -> usize {
        2 * self.r + 2 * i + 1
    }
}

enum RowOp {
    Place(usize),
    Fill(usize),
    Star,
}

/// Builds one preference row from explicit placements, "next `l` unranked
/// goods of the reference order" fills, and a final drain of the rest.
fn assemble_row(m: usize, ops: &[RowOp]) -> Vec<usize> {
    let mut placed = vec![false; m];
    let mut row = Vec::with_capacity(m);
    let place = |row: &mut Vec<usize>, placed: &mut Vec<bool>, g: usize| {
        debug_assert!(!placed[g], "good {g} ranked twice");
        placed[g] = true;
        row.push(g);
    };
    for op in ops {
        match *op {
            RowOp::Place(g) => place(&mut row, &mut placed, g),
            RowOp::Fill(count) => {
                for _ in 0..count {
                    let g = (0..m)
                        .find(|&g| !placed[g])
                        .expect("fill exceeds unranked goods");
                    place(&mut row, &mut placed, g);
                }
            }
            RowOp::Star => {
                for g in 0..m {
                    if !placed[g] {
                        place(&mut row, &mut placed, g);
                    }
                }
            }
        }
    }
    debug_assert_eq!(row.len(), m);
    row
}

/// Builds the reduced fair-division instance for a valid (2/2/3)-SAT
/// formula: each positive literal agent tops its signature good and meets
/// its two clause goods at ranks `j+1` and `k+1`; each dummy pair contests a
/// top dummy good and a bottom dummy good around one signature good.
pub fn reduce_sat(sat: &Sat223Instance) -> Result<Instance, ReductionError> {
    sat.validate()?;
    let layout = SatLayout::of(sat);
    let (r, s) = (layout.r, layout.s);
    let m = layout.m();

    let mut goods: Vec<Good> = Vec::with_capacity(m);
    for i in 0..r {
        goods.push(Good {
            id: layout.sig_good(i),
            label: format!("S{}", i + 1),
        });
        goods.push(Good {
            id: layout.sigbar_good(i),
            label: format!("Sb{}", i + 1),
        });
    }
    for i in 0..r {
        goods.push(Good {
            id: layout.top_good(i),
            label: format!("T{}", i + 1),
        });
    }
    for j in 0..s {
        goods.push(Good {
            id: layout.clause_good(j),
            label: format!("C{}", j + 1),
        });
    }
    for i in 0..r {
        goods.push(Good {
            id: layout.bottom_good(i),
            label: format!("B{}", i + 1),
        });
    }

    let mut profile: Vec<Option<Ranking>> = vec![None; layout.n()];
    for i in 0..r {
        let [j, k] = sat.positive_clauses(i);
        let row = assemble_row(
            m,
            &[
                RowOp::Place(layout.sig_good(i)),
                RowOp::Fill(j),
                RowOp::Place(layout.clause_good(j)),
                RowOp::Fill(k - j - 1),
                RowOp::Place(layout.clause_good(k)),
                RowOp::Star,
            ],
        );
        profile[layout.pos_agent(i)] = Some(Ranking::new(row).expect("row is a permutation"));

        let [p, q] = sat.negative_clauses(i);
        let row = assemble_row(
            m,
            &[
                RowOp::Place(layout.sigbar_good(i)),
                RowOp::Fill(p),
                RowOp::Place(layout.clause_good(p)),
                RowOp::Fill(q - p - 1),
                RowOp::Place(layout.clause_good(q)),
                RowOp::Star,
            ],
        );
        profile[layout.neg_agent(i)] = Some(Ranking::new(row).expect("row is a permutation"));
    }
    for i in 0..r {
        let row = assemble_row(
            m,
            &[
                RowOp::Place(layout.top_good(i)),
                RowOp::Place(layout.sig_good(i)),
                RowOp::Place(layout.bottom_good(i)),
                RowOp::Star,
            ],
        );
        profile[layout.dummy_agent(i)] = Some(Ranking::new(row).expect("row is a permutation"));
        let row = assemble_row(
            m,
            &[
                RowOp::Place(layout.top_good(i)),
                RowOp::Place(layout.sigbar_good(i)),
                RowOp::Place(layout.bottom_good(i)),
                RowOp::Star,
            ],
        );
        profile[layout.dummybar_agent(i)] = Some(Ranking::new(row).expect("row is a permutation"));
    }

    let profile: Vec<Ranking> = profile
        .into_iter()
        .map(|p| p.expect("all agents built"))
        .collect();
    Instance::new(goods, profile).map_err(|e| ReductionError::InternalConsistency(e.to_string()))
}

/// The forward construction: given a satisfying assignment, builds the
/// canonical EFX + rank-maximal allocation (signature goods to their literal
/// agents, dummy goods split by the assigned truth value, each clause good
/// to the first literal that satisfies its clause).
pub fn encode_sat_assignment(
    sat: &Sat223Instance,
    assignment: &TruthAssignment,
) -> Result<Allocation, ReductionError> {
    if assignment.0.len() != sat.num_vars {
        return Err(ReductionError::InvalidParam(format!(
            "assignment covers {} of {} variables",
            assignment.0.len(),
            sat.num_vars
        )));
    }
    if !assignment.satisfies(sat) {
        return Err(ReductionError::Unsatisfied);
    }
    let layout = SatLayout::of(sat);
    let mut alloc = Allocation::empty(layout.n(), layout.m());
    for i in 0..layout.r {
        alloc.assign(layout.sig_good(i), layout.pos_agent(i));
        alloc.assign(layout.sigbar_good(i), layout.neg_agent(i));
        if assignment.0[i] {
            alloc.assign(layout.top_good(i), layout.dummy_agent(i));
            alloc.assign(layout.bottom_good(i), layout.dummybar_agent(i));
        } else {
            alloc.assign(layout.top_good(i), layout.dummybar_agent(i));
            alloc.assign(layout.bottom_good(i), layout.dummy_agent(i));
        }
    }
    for (j, clause) in sat.clauses.iter().enumerate() {
        let lit = clause
            .iter()
            .find(|l| l.satisfied_by(&assignment.0))
            .expect("assignment satisfies every clause");
        let agent = if lit.negated {
            layout.neg_agent(lit.var)
        } else {
            layout.pos_agent(lit.var)
        };
        alloc.assign(layout.clause_good(j), agent);
    }
    Ok(alloc)
}

/// The backward direction: reads the truth value of each variable off the
/// dummy pair (`true` iff the top dummy good sits with the first dummy
/// agent) after checking that the allocation is EFX and rank-maximal.
pub fn decode_sat(
    sat: &Sat223Instance,
    alloc: &Allocation,
) -> Result<TruthAssignment, ReductionError> {
    let reduced = reduce_sat(sat)?;
    if !is_rank_maximal(&reduced, alloc) {
        return Err(ReductionError::NotRankMaximal);
    }
    if !is_efx(&reduced, alloc).holds {
        return Err(ReductionError::NotEfx);
    }
    let layout = SatLayout::of(sat);
    let values: Vec<bool> = (0..layout.r)
        .map(|i| {
            alloc
                .bundle(layout.dummy_agent(i))
                .contains(layout.top_good(i))
        })
        .collect();
    let assignment = TruthAssignment(values);
    if !assignment.satisfies(sat) {
        return Err(ReductionError::InternalConsistency(
            "decoded assignment fails the formula".into(),
        ));
    }
    Ok(assignment)
}

/// Exhaustive satisfiability oracle (`r ≤ 20`).
pub fn sat_brute_force(sat: &Sat223Instance) -> Option<TruthAssignment> {
    sat_all_satisfying(sat).into_iter().next()
}

/// All satisfying assignments, in binary counting order (`r ≤ 20`).
pub fn sat_all_satisfying(sat: &Sat223Instance) -> Vec<TruthAssignment> {
    assert!(
        sat.num_vars <= 20,
        "enumeration oracle limited to 20 variables"
    );
    let r = sat.num_vars;
    let mut out = Vec::new();
    for bits in 0u64..(1 << r) {
        let values: Vec<bool> = (0..r).map(|i| bits >> i & 1 == 1).collect();
        let a = TruthAssignment(values);
        if a.satisfies(sat) {
            out.push(a);
        }
    }
    out
}

/// Enumeration oracle over arbitrary clause lists (not restricted to the
/// 2/2/3 occurrence pattern).
pub fn sat_brute_force_clauses(num_vars: usize, clauses: &[Vec<Lit>]) -> Option<TruthAssignment> {
    assert!(num_vars <= 20, "enumeration oracle limited to 20 variables");
    for bits in 0u64..(1 << num_vars) {
        let values: Vec<bool> = (0..num_vars).map(|i| bits >> i & 1 == 1).collect();
        if clauses
            .iter()
            .all(|c| c.iter().any(|l| l.satisfied_by(&values)))
        {
            return Some(TruthAssignment(values));
        }
    }
    None
}

/// Random valid (2/2/3)-SAT formula with `r` variables (`r` must be a
/// positive multiple of 3): the `4r` literal occurrences are shuffled into
/// `4r/3` clauses until every clause holds three distinct variables.
pub fn random_223sat(r: usize, rng: &mut impl Rng) -> Result<Sat223Instance, ReductionError> {
    if r == 0 || !r.is_multiple_of(3) {
        return Err(ReductionError::InvalidParam(format!(
            "variable count must be a positive multiple of 3, got {r}"
        )));
    }
    let s = 4 * r / 3;
    let mut tokens: Vec<Lit> = Vec::with_capacity(4 * r);
    for v in 0..r {
        tokens.extend([Lit::pos(v), Lit::pos(v), Lit::neg(v), Lit::neg(v)]);
    }
    for _ in 0..100_000 {
        use rand::seq::SliceRandom;
        tokens.shuffle(rng);
        let clauses: Vec<[Lit; 3]> = tokens.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        let distinct = clauses
            .iter()
            .all(|c| c[0].var != c[1].var && c[0].var != c[2].var && c[1].var != c[2].var);
        if distinct {
            let sat = Sat223Instance {
                num_vars: r,
                clauses: clauses[..s].to_vec(),
            };
            debug_assert!(validate_223sat(&sat));
            return Ok(sat);
        }
    }
    Err(ReductionError::InternalConsistency(
        "rejection sampling failed to build a valid formula".into(),
    ))
}

/// [`random_223sat`] with its own seeded generator.
pub fn random_223sat_seeded(r: usize, seed: u64) -> Result<Sat223Instance, ReductionError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    random_223sat(r, &mut rng)
}

// ---------------------------------------------------------------------------
// Partition Into Triangles
// ---------------------------------------------------------------------------

/// A balanced tripartite graph on parts `W`, `X`, `Y` of `q` vertices each.
/// Vertices are globally indexed `0..3q` (`W` first, then `X`, then `Y`);
/// edges may only cross parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripartiteGraph {
    q: usize,
    edges: Vec<(usize, usize)>,
}

impl TripartiteGraph {
    pub fn new(q: usize, edges: &[(usize, usize)]) -> Result<Self, ReductionError> {
        if q == 0 {
            return Err(ReductionError::InvalidGraph(
                "part size must be positive".into(),
            ));
        }
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b || a >= 3 * q || b >= 3 * q {
                return Err(ReductionError::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for 3·{q} vertices"
                )));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if u / q == v / q {
                return Err(ReductionError::InvalidGraph(format!(
                    "edge ({u}, {v}) joins two vertices of the same part"
                )));
            }
            normalized.push((u, v));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(TripartiteGraph {
            q,
            edges: normalized,
        })
    }

    /// The complete balanced tripartite graph.
    pub fn complete(q: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..3 * q {
            for v in u + 1..3 * q {
                if u / q != v / q {
                    edges.push((u, v));
                }
            }
        }
        TripartiteGraph::new(q, &edges).expect("complete graph is valid")
    }

    pub fn without_edge(&self, a: usize, b: usize) -> Result<Self, ReductionError> {
        let key = if a < b { (a, b) } else { (b, a) };
        if !self.edges.contains(&key) {
            return Err(ReductionError::InvalidGraph(format!(
                "edge ({a}, {b}) not present"
            )));
        }
        let edges: Vec<(usize, usize)> = self.edges.iter().copied().filter(|&e| e != key).collect();
        TripartiteGraph::new(self.q, &edges)
    }

    /// Drops every edge incident to `v`.
    pub fn isolate_vertex(&self, v: usize) -> Result<Self, ReductionError> {
        if v >= 3 * self.q {
            return Err(ReductionError::InvalidGraph(format!(
                "vertex {v} out of range"
            )));
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .copied()
            .filter(|&(a, b)| a != v && b != v)
            .collect();
        TripartiteGraph::new(self.q, &edges)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn num_vertices(&self) -> usize {
        3 * self.q
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&key).is_ok()
    }

    /// All vertex pairs (ascending) that are not edges, including the
    /// always-non-adjacent pairs within one part.
    pub fn non_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..3 * self.q {
            for v in u + 1..3 * self.q {
                if !self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn num_non_edges(&self) -> usize {
        let total = 3 * self.q * (3 * self.q - 1) / 2;
        total - self.edges.len()
    }

    pub fn is_triangle(&self, a: usize, b: usize, c: usize) -> bool {
        self.has_edge(a, b) && self.has_edge(b, c) && self.has_edge(a, c)
    }

    /// `w1..wq, x1..xq, y1..yq`.
    pub fn vertex_label(&self, v: usize) -> String {
        let part = ["w", "x", "y"][v / self.q];
        format!("{part}{}", v % self.q + 1)
    }

    pub fn parse_vertex(q: usize, label: &str) -> Option<usize> {
        let (part, idx) = label.split_at(1);
        let offset = match part {
            "w" => 0,
            "x" => q,
            "y" => 2 * q,
            _ => return None,
        };
        let idx: usize = idx.parse().ok()?;
        if idx == 0 || idx > q {
            return None;
        }
        Some(offset + idx - 1)
    }
}

/// Id arithmetic for the reduced triangle-partition instance: `q` main
/// agents then `t` groups of `(k+2)q + 1` dummy agents; goods in reference
/// order are `q` selector groups of `k−1` goods, the `3q` main goods, then
/// `t` dummy groups of `(k+2)q + 1` goods.
#[derive(Clone, Copy, Debug)]
pub struct PitLayout {
    pub q: usize,
    pub k: usize,
    pub t: usize,
}

impl PitLayout {
    pub fn of(graph: &TripartiteGraph, k: usize) -> PitLayout {
        PitLayout {
            q: graph.q(),
            k,
            t: graph.num_non_edges(),
        }
    }

    pub fn group_size(self) -> usize {
        (self.k + 2) * self.q + 1
    }

    pub fn n(self) -> usize {
        self.q + self.t * self.group_size()
    }

    pub fn m(self) -> usize {
        3 * self.q + (self.k - 1) * self.q + self.t * self.group_size()
    }

    pub fn selector_good(self, group: usize, idx: usize) -> usize {
        group * (self.k - 1) + idx
    }

    pub fn main_good(self, vertex: usize) -> usize {
        (self.k - 1) * self.q + vertex
    }

    pub fn dummy_good(self, group: usize, idx: usize) -> usize {
        (self.k - 1) * self.q + 3 * self.q + group * self.group_size() + idx
    }

    pub fn main_agent(self, i: usize) -> usize {
        i
    }

    pub fn dummy_agent(self, group: usize, idx: usize) -> usize {
        self.q + group * self.group_size() + idx
    }

    pub fn main_goods(self) -> Bundle {
        (0..3 * self.q).map(|v| self.main_good(v)).collect()
    }
}

/// Builds the reduced instance for the triangle-partition problem with
/// envy bound `k ≥ 1`: main agents cycle through the selector groups and
/// then rank the main goods identically; each dummy group is tied to one
/// non-edge, ranking its own dummy block, then the two main goods of that
/// non-edge, then the selector goods, then its final dummy good.
pub fn reduce_pit(graph: &TripartiteGraph, k: usize) -> Result<Instance, ReductionError> {
    if k < 1 {
        return Err(ReductionError::InvalidParam(
            "the envy bound k must be at least 1".into(),
        ));
    }
    let layout = PitLayout::of(graph, k);
    let (q, t) = (layout.q, layout.t);
    let m = layout.m();
    if m > crate::model::MAX_GOODS {
        return Err(ReductionError::InvalidParam(format!(
            "reduced instance needs {m} goods, above the supported {}",
            crate::model::MAX_GOODS
        )));
    }

    let mut goods: Vec<Good> = Vec::with_capacity(m);
    for group in 0..q {
        for idx in 0..k - 1 {
            goods.push(Good {
                id: layout.selector_good(group, idx),
                label: format!("S{}_{}", group + 1, idx + 1),
            });
        }
    }
    for v in 0..3 * q {
        goods.push(Good {
            id: layout.main_good(v),
            label: graph.vertex_label(v).to_uppercase(),
        });
    }
    for group in 0..t {
        for idx in 0..layout.group_size() {
            goods.push(Good {
                id: layout.dummy_good(group, idx),
                label: format!("D{}_{}", group + 1, idx + 1),
            });
        }
    }

    let mut profile: Vec<Ranking> = Vec::with_capacity(layout.n());
    for i in 0..q {
        let mut ops: Vec<RowOp> = Vec::new();
        for step in 0..q {
            let group = (i + step) % q;
            for idx in 0..k - 1 {
                ops.push(RowOp::Place(layout.selector_good(group, idx)));
            }
        }
        for v in 0..3 * q {
            ops.push(RowOp::Place(layout.main_good(v)));
        }
        ops.push(RowOp::Star);
        profile.push(Ranking::new(assemble_row(m, &ops)).expect("row is a permutation"));
    }
    let non_edges = graph.non_edges();
    debug_assert_eq!(non_edges.len(), t);
    for (group, &(u, v)) in non_edges.iter().enumerate() {
        let mut ops: Vec<RowOp> = Vec::new();
        for idx in 0..layout.group_size() - 1 {
            ops.push(RowOp::Place(layout.dummy_good(group, idx)));
        }
        ops.push(RowOp::Place(layout.main_good(u)));
        ops.push(RowOp::Place(layout.main_good(v)));
        for sel_group in 0..q {
            for idx in 0..k - 1 {
                ops.push(RowOp::Place(layout.selector_good(sel_group, idx)));
            }
        }
        ops.push(RowOp::Place(
            layout.dummy_good(group, layout.group_size() - 1),
        ));
        ops.push(RowOp::Star);
        let row = Ranking::new(assemble_row(m, &ops)).expect("row is a permutation");
        for _ in 0..layout.group_size() {
            profile.push(row.clone());
        }
    }

    Instance::new(goods, profile).map_err(|e| ReductionError::InternalConsistency(e.to_string()))
}

/// Forward construction: turns a partition of the vertices into triangles
/// into the canonical EFk + rank-maximal allocation of the reduced instance.
pub fn encode_pit_partition(
    graph: &TripartiteGraph,
    k: usize,
    partition: &[[usize; 3]],
) -> Result<Allocation, ReductionError> {
    let layout = PitLayout::of(graph, k);
    if partition.len() != layout.q {
        return Err(ReductionError::InvalidParam(format!(
            "partition has {} triples, expected {}",
            partition.len(),
            layout.q
        )));
    }
    let mut seen = vec![false; 3 * layout.q];
    for triple in partition {
        for &v in triple {
            if v >= 3 * layout.q || seen[v] {
                return Err(ReductionError::InvalidParam(format!(
                    "vertex {v} missing or repeated in the partition"
                )));
            }
            seen[v] = true;
        }
        if !graph.is_triangle(triple[0], triple[1], triple[2]) {
            return Err(ReductionError::InvalidParam(format!(
                "triple ({}, {}, {}) is not a triangle",
                triple[0], triple[1], triple[2]
            )));
        }
    }
    let mut alloc = Allocation::empty(layout.n(), layout.m());
    for (i, triple) in partition.iter().enumerate() {
        for &v in triple {
            alloc.assign(layout.main_good(v), layout.main_agent(i));
        }
        for idx in 0..k - 1 {
            alloc.assign(layout.selector_good(i, idx), layout.main_agent(i));
        }
    }
    for group in 0..layout.t {
        for idx in 0..layout.group_size() {
            alloc.assign(
                layout.dummy_good(group, idx),
                layout.dummy_agent(group, idx),
            );
        }
    }
    Ok(alloc)
}

/// Backward direction: reads the triangle partition off the main agents'
/// bundles after checking that the allocation is EFk and rank-maximal.
pub fn decode_pit(
    graph: &TripartiteGraph,
    k: usize,
    alloc: &Allocation,
) -> Result<Vec<[usize; 3]>, ReductionError> {
    let reduced = reduce_pit(graph, k)?;
    if !is_rank_maximal(&reduced, alloc) {
        return Err(ReductionError::NotRankMaximal);
    }
    if !is_ef_k(&reduced, alloc, k).holds {
        return Err(ReductionError::NotEfk(k));
    }
    let layout = PitLayout::of(graph, k);
    let mains = layout.main_goods();
    let mut partition = Vec::with_capacity(layout.q);
    for i in 0..layout.q {
        let held: Vec<usize> = alloc
            .bundle(layout.main_agent(i))
            .intersection(mains)
            .iter()
            .map(|g| g - layout.main_good(0))
            .collect();
        if held.len() != 3 {
            return Err(ReductionError::InternalConsistency(format!(
                "main agent {} holds {} main goods, expected 3",
                i + 1,
                held.len()
            )));
        }
        if !graph.is_triangle(held[0], held[1], held[2]) {
            return Err(ReductionError::InternalConsistency(format!(
                "main agent {}'s vertices do not form a triangle",
                i + 1
            )));
        }
        partition.push([held[0], held[1], held[2]]);
    }
    Ok(partition)
}

/// Exhaustive triangle-partition oracle (`3q ≤ 12`): picks the lowest
/// unmatched vertex and tries every adjacent pair.
pub fn pit_brute_force(graph: &TripartiteGraph) -> Option<Vec<[usize; 3]>> {
    assert!(
        graph.num_vertices() <= 12,
        "enumeration oracle limited to 12 vertices"
    );
    fn recurse(graph: &TripartiteGraph, used: &mut Vec<bool>, acc: &mut Vec<[usize; 3]>) -> bool {
        let Some(a) = used.iter().position(|&u| !u) else {
            return true;
        };
        used[a] = true;
        let nv = graph.num_vertices();
        for b in a + 1..nv {
            if used[b] || !graph.has_edge(a, b) {
                continue;
            }
            used[b] = true;
            for c in b + 1..nv {
                if used[c] || !graph.has_edge(a, c) || !graph.has_edge(b, c) {
                    continue;
                }
                used[c] = true;
                acc.push([a, b, c]);
                if recurse(graph, used, acc) {
                    return true;
                }
                acc.pop();
                used[c] = false;
            }
            used[b] = false;
        }
        used[a] = false;
        false
    }
    let mut used = vec![false; graph.num_vertices()];
    let mut acc = Vec::new();
    if recurse(graph, &mut used, &mut acc) {
        Some(acc)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::existence::{
        rm_feasible_owners, solve_fair_rm, FairnessCriterion, SolveBudget, SolveOutcome,
    };

    /// A fixed valid formula over three variables: every clause touches all
    /// three variables with polarity patterns giving each variable two
    /// positive and two negative occurrences.
    pub(crate) fn fixed_sat_r3() -> Sat223Instance {
        Sat223Instance {
            num_vars: 3,
            clauses: vec![
                [Lit::pos(0), Lit::pos(1), Lit::pos(2)],
                [Lit::pos(0), Lit::neg(1), Lit::neg(2)],
                [Lit::neg(0), Lit::pos(1), Lit::neg(2)],
                [Lit::neg(0), Lit::neg(1), Lit::pos(2)],
            ],
        }
    }

    #[test]
    fn validator_accepts_and_rejects() {
        assert!(validate_223sat(&fixed_sat_r3()));
        let mut bad = fixed_sat_r3();
        bad.clauses[0][0] = Lit::neg(0);
        assert!(!validate_223sat(&bad));
        let short = Sat223Instance {
            num_vars: 3,
            clauses: fixed_sat_r3().clauses[..3].to_vec(),
        };
        assert!(!validate_223sat(&short));
    }

    #[test]
    fn reduced_sat_counts_and_rows() {
        let sat = fixed_sat_r3();
        let inst = reduce_sat(&sat).unwrap();
        assert_eq!(inst.n(), 12);
        assert_eq!(inst.m(), 16);
        let layout = SatLayout::of(&sat);
        // dummy agents top T_i ≻ S_i ≻ B_i
        for i in 0..3 {
            let r = inst.ranking(layout.dummy_agent(i));
            assert_eq!(r.good_at(0), layout.top_good(i));
            assert_eq!(r.good_at(1), layout.sig_good(i));
            assert_eq!(r.good_at(2), layout.bottom_good(i));
            let rb = inst.ranking(layout.dummybar_agent(i));
            assert_eq!(rb.good_at(1), layout.sigbar_good(i));
        }
        // positive literal agents: signature good on top, clause goods at
        // ranks j+1 and k+1 (1-indexed clauses)
        for v in 0..3 {
            let r = inst.ranking(layout.pos_agent(v));
            assert_eq!(r.good_at(0), layout.sig_good(v));
            let [j, k] = sat.positive_clauses(v);
            assert_eq!(r.rank_of(layout.clause_good(j)), j + 2);
            assert_eq!(r.rank_of(layout.clause_good(k)), k + 2);
        }
    }

    #[test]
    fn reduced_sat_feasibility_structure() {
        let sat = fixed_sat_r3();
        let inst = reduce_sat(&sat).unwrap();
        let layout = SatLayout::of(&sat);
        let feas = rm_feasible_owners(&inst);
        for i in 0..3 {
            assert_eq!(
                feas.owners[layout.sig_good(i)].iter().collect::<Vec<_>>(),
                vec![layout.pos_agent(i)]
            );
            assert_eq!(
                feas.owners[layout.sigbar_good(i)]
                    .iter()
                    .collect::<Vec<_>>(),
                vec![layout.neg_agent(i)]
            );
            assert_eq!(
                feas.owners[layout.top_good(i)].iter().collect::<Vec<_>>(),
                vec![layout.dummy_agent(i), layout.dummybar_agent(i)]
            );
            assert_eq!(
                feas.owners[layout.bottom_good(i)]
                    .iter()
                    .collect::<Vec<_>>(),
                vec![layout.dummy_agent(i), layout.dummybar_agent(i)]
            );
        }
        for (j, clause) in sat.clauses.iter().enumerate() {
            let expected: Vec<usize> = {
                let mut v: Vec<usize> = clause
                    .iter()
                    .map(|l| {
                        if l.negated {
                            layout.neg_agent(l.var)
                        } else {
                            layout.pos_agent(l.var)
                        }
                    })
                    .collect();
                v.sort_unstable();
                v
            };
            assert_eq!(
                feas.owners[layout.clause_good(j)]
                    .iter()
                    .collect::<Vec<_>>(),
                expected
            );
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let sat = fixed_sat_r3();
        let inst = reduce_sat(&sat).unwrap();
        let satisfying = sat_all_satisfying(&sat);
        assert!(!satisfying.is_empty());
        for a in &satisfying {
            let alloc = encode_sat_assignment(&sat, a).unwrap();
            assert!(is_efx(&inst, &alloc).holds);
            assert!(is_rank_maximal(&inst, &alloc));
            assert_eq!(&decode_sat(&sat, &alloc).unwrap(), a);
        }
        // non-satisfying assignments are rejected by the encoder
        let all_false = TruthAssignment(vec![false; 3]);
        if !all_false.satisfies(&sat) {
            assert!(matches!(
                encode_sat_assignment(&sat, &all_false),
                Err(ReductionError::Unsatisfied)
            ));
        }
        // decoding a non-EFX allocation fails
        let rm_only = crate::efficiency::greedy_rank_maximal(&inst);
        if !is_efx(&inst, &rm_only).holds {
            assert!(matches!(
                decode_sat(&sat, &rm_only),
                Err(ReductionError::NotEfx)
            ));
        }
        // and so does decoding an allocation that breaks rank-maximality:
        // swap the two signature goods of the first variable
        let layout = SatLayout::of(&sat);
        let good = encode_sat_assignment(&sat, &satisfying[0]).unwrap();
        let mut bundles: Vec<crate::model::Bundle> = good.bundles().to_vec();
        bundles[layout.pos_agent(0)] = bundles[layout.pos_agent(0)]
            .without(layout.sig_good(0))
            .with(layout.sigbar_good(0));
        bundles[layout.neg_agent(0)] = bundles[layout.neg_agent(0)]
            .without(layout.sigbar_good(0))
            .with(layout.sig_good(0));
        let swapped = Allocation::new(bundles, layout.m()).unwrap();
        assert!(matches!(
            decode_sat(&sat, &swapped),
            Err(ReductionError::NotRankMaximal)
        ));
    }

    #[test]
    fn solver_verdict_matches_satisfiability_on_fixed_instance() {
        let sat = fixed_sat_r3();
        let inst = reduce_sat(&sat).unwrap();
        let outcome = solve_fair_rm(&inst, FairnessCriterion::Efx, &SolveBudget::default());
        assert_eq!(outcome.exists(), Some(sat_brute_force(&sat).is_some()));
        if let SolveOutcome::Found(alloc) = outcome {
            let decoded = decode_sat(&sat, &alloc).unwrap();
            assert!(decoded.satisfies(&sat));
        }
    }

    #[test]
    fn raw_clause_oracle_handles_unsatisfiable_input() {
        let clauses = vec![vec![Lit::pos(0)], vec![Lit::neg(0)]];
        assert_eq!(sat_brute_force_clauses(1, &clauses), None);
        let clauses = vec![
            vec![Lit::pos(0), Lit::neg(1)],
            vec![Lit::neg(0), Lit::pos(1)],
        ];
        assert!(sat_brute_force_clauses(2, &clauses).is_some());
    }

    #[test]
    fn generator_produces_valid_instances() {
        for seed in 0..20 {
            let sat = random_223sat_seeded(3, seed).unwrap();
            assert!(validate_223sat(&sat));
            let sat = random_223sat_seeded(6, seed).unwrap();
            assert!(validate_223sat(&sat));
        }
        assert!(random_223sat_seeded(4, 0).is_err());
    }

    #[test]
    fn tripartite_graph_basics() {
        let g = TripartiteGraph::complete(2);
        assert_eq!(g.edges().len(), 12);
        assert_eq!(g.num_non_edges(), 3);
        assert_eq!(g.non_edges(), vec![(0, 1), (2, 3), (4, 5)]);
        assert!(g.is_triangle(0, 2, 4));
        assert!(!g.is_triangle(0, 1, 2));
        assert_eq!(g.vertex_label(0), "w1");
        assert_eq!(g.vertex_label(3), "x2");
        assert_eq!(TripartiteGraph::parse_vertex(2, "y2"), Some(5));
        assert!(TripartiteGraph::new(2, &[(0, 1)]).is_err());
    }

    #[test]
    fn reduced_pit_counts() {
        let g = TripartiteGraph::complete(2);
        let inst = reduce_pit(&g, 1).unwrap();
        assert_eq!(inst.n(), 23);
        assert_eq!(inst.m(), 27);

        // single triangle: no non-edges, no dummy groups, no selectors
        let g1 = TripartiteGraph::complete(1);
        let inst = reduce_pit(&g1, 1).unwrap();
        assert_eq!(inst.n(), 1);
        assert_eq!(inst.m(), 3);

        let inst = reduce_pit(&g, 2).unwrap();
        assert_eq!(inst.n(), 2 + 3 * 9);
        assert_eq!(inst.m(), 6 + 2 + 3 * 9);
    }

    #[test]
    fn reduced_pit_rows() {
        let g = TripartiteGraph::complete(2);
        let k = 2;
        let inst = reduce_pit(&g, k).unwrap();
        let layout = PitLayout::of(&g, k);
        // main agents cycle the selector groups
        let a0 = inst.ranking(layout.main_agent(0));
        assert_eq!(a0.good_at(0), layout.selector_good(0, 0));
        let a1 = inst.ranking(layout.main_agent(1));
        assert_eq!(a1.good_at(0), layout.selector_good(1, 0));
        assert_eq!(a1.good_at(1), layout.selector_good(0, 0));
        // main goods follow in global order for every main agent
        for (p, v) in (0..6).enumerate() {
            assert_eq!(a0.good_at(layout.q * (k - 1) + p), layout.main_good(v));
        }
        // dummy group 0 is tied to the non-edge (w1, w2)
        let d = inst.ranking(layout.dummy_agent(0, 0));
        let gs = layout.group_size();
        for idx in 0..gs - 1 {
            assert_eq!(d.good_at(idx), layout.dummy_good(0, idx));
        }
        assert_eq!(d.good_at(gs - 1), layout.main_good(0));
        assert_eq!(d.good_at(gs), layout.main_good(1));
        assert_eq!(
            d.good_at(gs + 1 + layout.q * (k - 1)),
            layout.dummy_good(0, gs - 1)
        );
        // all dummies of a group share one ranking
        assert_eq!(inst.ranking(layout.dummy_agent(0, 3)), d);
    }

    #[test]
    fn pit_round_trip_on_complete_graph() {
        let g = TripartiteGraph::complete(2);
        let partition = pit_brute_force(&g).expect("complete graph partitions");
        for k in 1..=2usize {
            let inst = reduce_pit(&g, k).unwrap();
            let alloc = encode_pit_partition(&g, k, &partition).unwrap();
            assert!(is_ef_k(&inst, &alloc, k).holds);
            assert!(is_rank_maximal(&inst, &alloc));
            let decoded = decode_pit(&g, k, &alloc).unwrap();
            for triple in &decoded {
                assert!(g.is_triangle(triple[0], triple[1], triple[2]));
            }
        }
    }

    #[test]
    fn pit_brute_force_detects_infeasibility() {
        let g = TripartiteGraph::complete(2).isolate_vertex(0).unwrap();
        assert!(pit_brute_force(&g).is_none());
        let g = TripartiteGraph::complete(2).without_edge(1, 2).unwrap();
        // w2 can still pair with x2/y*, so a partition survives one deletion
        assert!(pit_brute_force(&g).is_some());
    }
}
