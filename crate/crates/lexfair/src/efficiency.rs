//! Efficiency notions: rank-maximality via signatures and Pareto optimality
//! via the picking-sequence (sequencibility) characterization.

use crate::model::{Allocation, Instance, PickingSequence};

/// Per-rank tally `(n_1, …, n_m)`: `counts[r-1]` is the number of
/// (agent, good) pairs where the good is assigned to that agent at rank `r`.
/// Signatures compare lexicographically, left to right.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Signature(pub Vec<usize>);

impl Signature {
    pub fn counts(&self) -> &[usize] {
        &self.0
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn allocation_signature(inst: &Instance, alloc: &Allocation) -> Signature {
    let mut counts = vec![0usize; inst.m()];
    for agent in 0..inst.n() {
        for g in alloc.bundle(agent).iter() {
            counts[inst.ranking(agent).position(g)] += 1;
        }
    }
    Signature(counts)
}

/// Best achievable rank of a good: the minimum over agents.
pub fn min_rank(inst: &Instance, good: usize) -> usize {
    (0..inst.n())
        .map(|i| inst.ranking(i).rank_of(good))
        .min()
        .expect("n >= 1")
}

/// The signature shared by all rank-maximal allocations: every good counted
/// at its best achievable rank.
pub fn rm_signature(inst: &Instance) -> Signature {
    let mut counts = vec![0usize; inst.m()];
    for g in 0..inst.m() {
        counts[min_rank(inst, g) - 1] += 1;
    }
    Signature(counts)
}

/// `true` iff every good is assigned to an agent achieving its best rank.
/// Equivalent to signature equality with [`rm_signature`].
pub fn assigns_every_good_at_min_rank(inst: &Instance, alloc: &Allocation) -> bool {
    (0..inst.m()).all(|g| match alloc.owner_of(g) {
        Some(a) => inst.ranking(a).rank_of(g) == min_rank(inst, g),
        None => false,
    })
}

/// Rank-maximality check for a complete allocation.
///
/// Panics on partial allocations.
pub fn is_rank_maximal(inst: &Instance, alloc: &Allocation) -> bool {
    assert!(
        alloc.is_complete(),
        "rank-maximality is defined for complete allocations"
    );
    let rm = allocation_signature(inst, alloc) == rm_signature(inst);
    debug_assert_eq!(rm, assigns_every_good_at_min_rank(inst, alloc));
    rm
}

/// Builds a rank-maximal allocation: each good goes to an agent that ranks
/// it highest, ties broken by the earliest agent in `tie_break`.
pub fn greedy_rank_maximal_tiebreak(inst: &Instance, tie_break: &[usize]) -> Allocation {
    let mut alloc = Allocation::empty(inst.n(), inst.m());
    for g in 0..inst.m() {
        let best = min_rank(inst, g);
        let winner = tie_break
            .iter()
            .copied()
            .find(|&a| inst.ranking(a).rank_of(g) == best)
            .expect("some agent achieves the minimum rank");
        alloc.assign(g, winner);
    }
    alloc
}

/// [`greedy_rank_maximal_tiebreak`] with the default lowest-index tie-break.
pub fn greedy_rank_maximal(inst: &Instance) -> Allocation {
    let order: Vec<usize> = (0..inst.n()).collect();
    greedy_rank_maximal_tiebreak(inst, &order)
}

/// Pareto optimality. A complete allocation is Pareto optimal iff it is
/// sequencible: repeatedly find an agent whose top-ranked remaining good lies
/// in its own bundle and consume that good; the allocation passes iff all
/// goods get consumed. Partial allocations are never Pareto optimal, since
/// assigning any unassigned good is an improvement.
pub fn is_pareto_optimal(inst: &Instance, alloc: &Allocation) -> bool {
    if !alloc.is_complete() {
        return false;
    }
    sequencible(inst, alloc).is_some()
}

/// The picking sequence that replays a complete Pareto-optimal allocation,
/// or `None` when the allocation is not Pareto optimal. At each step the
/// lowest-indexed eligible agent is chosen; the verdict does not depend on
/// this choice.
///
/// Panics on partial allocations.
pub fn extract_picking_sequence(inst: &Instance, alloc: &Allocation) -> Option<PickingSequence> {
    assert!(
        alloc.is_complete(),
        "picking sequences replay complete allocations"
    );
    sequencible(inst, alloc)
}

fn sequencible(inst: &Instance, alloc: &Allocation) -> Option<PickingSequence> {
    let mut remaining = alloc.assigned();
    let mut seq = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let mut progressed = false;
        for agent in 0..inst.n() {
            let own = alloc.bundle(agent).intersection(remaining);
            if own.is_empty() {
                continue;
            }
            let top = inst
                .ranking(agent)
                .best_of(remaining)
                .expect("remaining nonempty");
            if own.contains(top) {
                remaining = remaining.without(top);
                seq.push(agent);
                progressed = true;
                break;
            }
        }
        if !progressed {
            return None;
        }
    }
    Some(PickingSequence(seq))
}
