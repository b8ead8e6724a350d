//! Existence queries for fairness + rank-maximality: polynomial algorithms
//! for envy-freeness, the maximin guarantee, and EF1 with three agents, an
//! exact backtracking solver for every criterion, and the brute-force oracle
//! over all allocations.
//!
//! An allocation is rank-maximal iff every good goes to an agent achieving
//! that good's minimum possible rank, so the solver branches only over each
//! good's feasible owners and is exact within its node budget.

use thiserror::Error;

use crate::efficiency::{greedy_rank_maximal, is_pareto_optimal, is_rank_maximal};
use crate::fairness::{is_ef, is_ef_k, is_efx, is_mms};
use crate::model::{
    enumerate_allocations_with_cap, AgentSet, Allocation, Bundle, Instance, DEFAULT_ALLOCATION_CAP,
};

#[derive(Debug, Error)]
pub enum ExistenceError {
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),
    #[error("this algorithm requires exactly three agents, got {0}")]
    NotThreeAgents(usize),
}

/// The fairness side of an existence query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FairnessCriterion {
    Ef,
    Efx,
    Ef1,
    EfK(usize),
    Mms,
}

impl FairnessCriterion {
    /// Checks the criterion on a complete allocation.
    pub fn holds_for(self, inst: &Instance, alloc: &Allocation) -> bool {
        match self {
            FairnessCriterion::Ef => is_ef(inst, alloc).holds,
            FairnessCriterion::Efx => is_efx(inst, alloc).holds,
            FairnessCriterion::Ef1 => is_ef_k(inst, alloc, 1).holds,
            FairnessCriterion::EfK(k) => is_ef_k(inst, alloc, k).holds,
            FairnessCriterion::Mms => is_mms(inst, alloc).holds,
        }
    }

    /// Removal bound used by the search pruning: a sound necessary condition
    /// is that no agent holds more than this many goods that some other
    /// agent prefers to everything it can still end up with. EFX prunes with
    /// bound 1 (it implies EF1) plus a decided-envy rule.
    fn removal_bound(self) -> Option<usize> {
        match self {
            FairnessCriterion::Ef => Some(0),
            FairnessCriterion::Efx | FairnessCriterion::Ef1 => Some(1),
            FairnessCriterion::EfK(k) => Some(k),
            FairnessCriterion::Mms => None,
        }
    }

    pub fn label(self) -> String {
        match self {
            FairnessCriterion::Ef => "ef".into(),
            FairnessCriterion::Efx => "efx".into(),
            FairnessCriterion::Ef1 => "ef1".into(),
            FairnessCriterion::EfK(k) => format!("ef{k}"),
            FairnessCriterion::Mms => "mms".into(),
        }
    }
}

/// Result of a bounded existence search: `Unknown` reports an exhausted
/// budget and is never conflated with a definitive `NoneExists`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Found(Allocation),
    NoneExists,
    Unknown,
}

impl SolveOutcome {
    /// `Some(true)` / `Some(false)` for definitive verdicts, `None` for
    /// budget exhaustion.
    pub fn exists(&self) -> Option<bool> {
        match self {
            SolveOutcome::Found(_) => Some(true),
            SolveOutcome::NoneExists => Some(false),
            SolveOutcome::Unknown => None,
        }
    }

    pub fn allocation(&self) -> Option<&Allocation> {
        match self {
            SolveOutcome::Found(a) => Some(a),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveBudget {
    pub max_nodes: u64,
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget {
            max_nodes: 1_000_000,
        }
    }
}

/// For every good, the set of agents achieving its minimum possible rank.
/// Assigning each good within its owner set is exactly rank-maximality.
#[derive(Clone, Debug)]
pub struct RmFeasibility {
    pub owners: Vec<AgentSet>,
    pub min_rank: Vec<usize>,
}

pub fn rm_feasible_owners(inst: &Instance) -> RmFeasibility {
    let mut owners = Vec::with_capacity(inst.m());
    let mut min_rank = Vec::with_capacity(inst.m());
    for g in 0..inst.m() {
        let best = (0..inst.n())
            .map(|i| inst.ranking(i).rank_of(g))
            .min()
            .expect("n >= 1");
        owners.push(
            (0..inst.n())
                .filter(|&i| inst.ranking(i).rank_of(g) == best)
                .collect(),
        );
        min_rank.push(best);
    }
    RmFeasibility { owners, min_rank }
}

/// Assigns every unassigned good to its lowest-indexed feasible owner.
pub(crate) fn extend_rank_maximally(inst: &Instance, feas: &RmFeasibility, alloc: &mut Allocation) {
    for g in 0..inst.m() {
        if alloc.owner_of(g).is_none() {
            let agent = feas.owners[g]
                .iter()
                .next()
                .expect("owner sets are nonempty");
            alloc.assign(g, agent);
        }
    }
}

// ---------------------------------------------------------------------------
// Polynomial algorithms
// ---------------------------------------------------------------------------

/// Envy-free + rank-maximal, whenever such an allocation exists. A complete
/// allocation is envy-free iff every agent holds its own favorite good, so
/// existence reduces to the agents' top goods being pairwise distinct; the
/// remaining goods extend rank-maximally without creating envy.
pub fn exists_ef_rm(inst: &Instance) -> Option<Allocation> {
    let n = inst.n();
    let m = inst.m();
    if m == 0 {
        return Some(Allocation::empty(n, 0));
    }
    let tops: Vec<usize> = (0..n).map(|i| inst.ranking(i).good_at(0)).collect();
    let mut seen = Bundle::EMPTY;
    for &t in &tops {
        if seen.contains(t) {
            return None;
        }
        seen = seen.with(t);
    }
    let feas = rm_feasible_owners(inst);
    let mut alloc = Allocation::empty(n, m);
    for (i, &t) in tops.iter().enumerate() {
        alloc.assign(t, i);
    }
    extend_rank_maximally(inst, &feas, &mut alloc);
    debug_assert!(is_ef(inst, &alloc).holds && is_rank_maximal(inst, &alloc));
    Some(alloc)
}

/// Left-saturating bipartite matching by augmenting paths; `adj[l]` lists the
/// right vertices available to left vertex `l`. Returns the matching size and
/// the match of each left vertex.
fn max_matching(adj: &[Vec<usize>], right_size: usize) -> (usize, Vec<Option<usize>>) {
    let mut right_to_left: Vec<Option<usize>> = vec![None; right_size];
    let mut matched = 0usize;

    fn augment(
        l: usize,
        adj: &[Vec<usize>],
        right_to_left: &mut Vec<Option<usize>>,
        visited: &mut Vec<bool>,
    ) -> bool {
        for &r in &adj[l] {
            if visited[r] {
                continue;
            }
            visited[r] = true;
            match right_to_left[r] {
                None => {
                    right_to_left[r] = Some(l);
                    return true;
                }
                Some(other) => {
                    if augment(other, adj, right_to_left, visited) {
                        right_to_left[r] = Some(l);
                        return true;
                    }
                }
            }
        }
        false
    }

    for l in 0..adj.len() {
        let mut visited = vec![false; right_size];
        if augment(l, adj, &mut right_to_left, &mut visited) {
            matched += 1;
        }
    }
    let mut left_to_right = vec![None; adj.len()];
    for (r, l) in right_to_left.iter().enumerate() {
        if let Some(l) = l {
            left_to_right[*l] = Some(r);
        }
    }
    (matched, left_to_right)
}

/// Maximin + rank-maximal, whenever such an allocation exists.
///
/// First tries to match every agent to one of its top `n−1` goods among the
/// goods it can rank-maximally receive; on success the matching extends
/// rank-maximally. Otherwise some agent must receive its entire bottom block,
/// which forces all agents to rank those goods identically; the block then
/// collapses into a single meta good and an `n × n` matching decides the
/// query. Outputs are re-verified; a verification failure is an internal
/// error, never a wrong answer.
pub fn exists_mms_rm(inst: &Instance) -> Result<Option<Allocation>, ExistenceError> {
    let n = inst.n();
    let m = inst.m();
    if n == 1 {
        let mut alloc = Allocation::empty(1, m);
        for g in 0..m {
            alloc.assign(g, 0);
        }
        return Ok(Some(alloc));
    }
    if m < n {
        // every allocation meets the maximin threshold (it is empty)
        return Ok(Some(greedy_rank_maximal(inst)));
    }
    let feas = rm_feasible_owners(inst);

    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n - 1)
                .map(|p| inst.ranking(i).good_at(p))
                .filter(|&g| feas.owners[g].contains(i))
                .collect()
        })
        .collect();
    let (size, matching) = max_matching(&adj, m);
    if size == n {
        let mut alloc = Allocation::empty(n, m);
        for (i, r) in matching.iter().enumerate() {
            alloc.assign(r.expect("saturating matching"), i);
        }
        extend_rank_maximally(inst, &feas, &mut alloc);
        verify_mms_rm(inst, &alloc)?;
        return Ok(Some(alloc));
    }

    // Some agent must take its whole bottom block of m−n+1 goods.
    let bottom_of =
        |i: usize| -> Vec<usize> { (n - 1..m).map(|p| inst.ranking(i).good_at(p)).collect() };
    let eligible: Vec<usize> = (0..n)
        .filter(|&i| bottom_of(i).iter().all(|&g| feas.owners[g].contains(i)))
        .collect();
    if eligible.is_empty() {
        return Ok(None);
    }
    let rep = eligible[0];
    let block = bottom_of(rep);
    for h in 0..n {
        for &g in &block {
            if inst.ranking(h).position(g) != inst.ranking(rep).position(g) {
                return Err(ExistenceError::InternalConsistency(format!(
                    "agent {} should rank bottom-block good {} at position {}",
                    h + 1,
                    inst.label(g),
                    inst.ranking(rep).position(g) + 1
                )));
            }
        }
    }

    // n × n matching over the n−1 remaining goods plus the meta good.
    let block_set: Bundle = block.iter().copied().collect();
    let reals: Vec<usize> = (0..m).filter(|&g| !block_set.contains(g)).collect();
    let meta = reals.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut v: Vec<usize> = reals
                .iter()
                .enumerate()
                .filter(|&(_, &g)| feas.owners[g].contains(i))
                .map(|(j, _)| j)
                .collect();
            v.push(meta);
            v
        })
        .collect();
    let (size, matching) = max_matching(&adj, meta + 1);
    if size < n {
        return Ok(None);
    }
    let mut alloc = Allocation::empty(n, m);
    for (i, r) in matching.iter().enumerate() {
        match r.expect("saturating matching") {
            j if j < meta => alloc.assign(reals[j], i),
            _ => {
                for &g in &block {
                    alloc.assign(g, i);
                }
            }
        }
    }
    verify_mms_rm(inst, &alloc)?;
    Ok(Some(alloc))
}

fn verify_mms_rm(inst: &Instance, alloc: &Allocation) -> Result<(), ExistenceError> {
    if !is_mms(inst, alloc).holds || !is_rank_maximal(inst, alloc) {
        return Err(ExistenceError::InternalConsistency(
            "constructed allocation fails the maximin or rank-maximality recheck".into(),
        ));
    }
    Ok(())
}

/// EF1 + rank-maximal for exactly three agents.
///
/// Distinct top goods reduce to the envy-free case. Otherwise the contested
/// top good goes to one of its claimants case by case, every other claimant
/// receives the best good it can still rank-maximally get, and the partial
/// allocation is tested for EF1 and extended. Because the case analysis
/// fixes one particular choice of consolation goods and one particular
/// extension, a failed case falls back to the exact search over all
/// rank-maximal allocations before concluding that none exists.
pub fn exists_ef1_rm_three(
    inst: &Instance,
    budget: &SolveBudget,
) -> Result<SolveOutcome, ExistenceError> {
    if inst.n() != 3 {
        return Err(ExistenceError::NotThreeAgents(inst.n()));
    }
    let m = inst.m();
    if m == 0 {
        return Ok(SolveOutcome::Found(Allocation::empty(3, 0)));
    }
    if let Some(alloc) = exists_ef_rm(inst) {
        return Ok(SolveOutcome::Found(alloc));
    }

    let feas = rm_feasible_owners(inst);
    let tops: Vec<usize> = (0..3).map(|i| inst.ranking(i).good_at(0)).collect();
    // the contested good and its claimants (two or three agents share a top)
    let contested = tops
        .iter()
        .copied()
        .find(|&t| tops.iter().filter(|&&u| u == t).count() >= 2)
        .expect("shared top exists when envy-freeness fails");
    let claimants: Vec<usize> = (0..3).filter(|&i| tops[i] == contested).collect();

    let forced: Vec<(usize, usize)> = (0..m)
        .filter(|&g| feas.owners[g].len() == 1)
        .map(|g| (g, feas.owners[g].iter().next().expect("nonempty")))
        .collect();

    for &winner in &claimants {
        let mut presets = forced.clone();
        presets.push((contested, winner));
        let mut taken: Bundle = presets.iter().map(|&(g, _)| g).collect();
        for &loser in claimants.iter().filter(|&&l| l != winner) {
            let consolation = inst
                .ranking(loser)
                .order()
                .iter()
                .copied()
                .find(|&g| !taken.contains(g) && feas.owners[g].contains(loser));
            if let Some(g) = consolation {
                presets.push((g, loser));
                taken = taken.with(g);
            }
        }
        let mut partial = Allocation::empty(3, m);
        for &(g, a) in &presets {
            partial.assign(g, a);
        }
        if !is_ef_k(inst, &partial, 1).holds {
            continue;
        }
        let mut full = partial.clone();
        extend_rank_maximally(inst, &feas, &mut full);
        if is_ef_k(inst, &full, 1).holds && is_rank_maximal(inst, &full) {
            return Ok(SolveOutcome::Found(full));
        }
        // the default extension broke EF1; try every completion of this case
        match solve_fair_rm_from(inst, FairnessCriterion::Ef1, &presets, budget) {
            SolveOutcome::Found(a) => return Ok(SolveOutcome::Found(a)),
            SolveOutcome::NoneExists | SolveOutcome::Unknown => {}
        }
    }

    // No case produced an allocation; decide exactly before answering NO.
    Ok(solve_fair_rm(inst, FairnessCriterion::Ef1, budget))
}

/// An instance admits a rank-maximal allocation in which some agent receives
/// at most one good iff some agent is the unique minimum-rank owner of at
/// most one good (all other goods can then be routed elsewhere).
pub fn exists_rm_some_agent_at_most_one(inst: &Instance) -> bool {
    let feas = rm_feasible_owners(inst);
    (0..inst.n()).any(|i| {
        let forced = (0..inst.m())
            .filter(|&g| feas.owners[g].len() == 1 && feas.owners[g].contains(i))
            .count();
        forced <= 1
    })
}

// ---------------------------------------------------------------------------
// Exact search over rank-maximal allocations
// ---------------------------------------------------------------------------

/// Exact decision over all rank-maximal allocations: assigns each good among
/// its feasible owners (smallest owner sets first, lowest agent index first)
/// with criterion-specific sound pruning, and checks the criterion at every
/// leaf. Within the node budget the search is sound and complete; exceeding
/// the budget yields [`SolveOutcome::Unknown`].
pub fn solve_fair_rm(
    inst: &Instance,
    crit: FairnessCriterion,
    budget: &SolveBudget,
) -> SolveOutcome {
    solve_fair_rm_from(inst, crit, &[], budget)
}

/// [`solve_fair_rm`] with pre-assigned goods (which must be feasible).
pub(crate) fn solve_fair_rm_from(
    inst: &Instance,
    crit: FairnessCriterion,
    presets: &[(usize, usize)],
    budget: &SolveBudget,
) -> SolveOutcome {
    let feas = rm_feasible_owners(inst);
    let mut search = Search::new(inst, &feas, crit, budget.max_nodes);
    for &(g, a) in presets {
        debug_assert!(feas.owners[g].contains(a), "preset breaks rank-maximality");
        search.do_assign(g, a);
    }
    if !search.consistent() {
        return SolveOutcome::NoneExists;
    }
    let preset_goods: Bundle = presets.iter().map(|&(g, _)| g).collect();
    let mut order: Vec<usize> = (0..inst.m())
        .filter(|&g| !preset_goods.contains(g))
        .collect();
    order.sort_by_key(|&g| (feas.owners[g].len(), g));
    match search.dfs(&order, 0) {
        Dfs::Found(a) => SolveOutcome::Found(a),
        Dfs::Exhausted => SolveOutcome::NoneExists,
        Dfs::Aborted => SolveOutcome::Unknown,
    }
}

/// Scans every complete allocation and returns the first one passing the
/// criterion and the requested efficiency requirements. The ground-truth
/// oracle for the polynomial algorithms and the search.
pub fn brute_force(
    inst: &Instance,
    crit: FairnessCriterion,
    require_rm: bool,
    require_po: bool,
) -> SolveOutcome {
    brute_force_with_cap(inst, crit, require_rm, require_po, DEFAULT_ALLOCATION_CAP)
}

pub fn brute_force_with_cap(
    inst: &Instance,
    crit: FairnessCriterion,
    require_rm: bool,
    require_po: bool,
    cap: u64,
) -> SolveOutcome {
    let Ok(iter) = enumerate_allocations_with_cap(inst, true, cap) else {
        return SolveOutcome::Unknown;
    };
    for alloc in iter {
        if require_rm && !is_rank_maximal(inst, &alloc) {
            continue;
        }
        if require_po && !is_pareto_optimal(inst, &alloc) {
            continue;
        }
        if crit.holds_for(inst, &alloc) {
            return SolveOutcome::Found(alloc);
        }
    }
    SolveOutcome::NoneExists
}

enum Dfs {
    Found(Allocation),
    Exhausted,
    Aborted,
}

fn tz(x: u128) -> u32 {
    if x == 0 {
        128
    } else {
        x.trailing_zeros()
    }
}

fn below(p: u32) -> u128 {
    if p >= 128 {
        u128::MAX
    } else {
        (1u128 << p) - 1
    }
}

struct Search<'a> {
    inst: &'a Instance,
    crit: FairnessCriterion,
    removal_bound: Option<usize>,
    n: usize,
    owners: &'a [AgentSet],
    /// per agent, the goods it can rank-maximally receive (good space)
    feasible_goods: Vec<Bundle>,
    bundles: Vec<Bundle>,
    sizes: Vec<usize>,
    assigned: Bundle,
    /// `holdings[h][i]`: agent `i`'s bundle mapped into viewer `h`'s
    /// position space
    holdings: Vec<Vec<u128>>,
    /// per viewer, unassigned feasible goods in its position space
    remf: Vec<u128>,
    /// groups of agents with identical rankings (only groups of size >= 2)
    classes: Vec<Vec<usize>>,
    top_slice: Vec<Bundle>,
    bottom_slice: Vec<Bundle>,
    nodes: u64,
    max_nodes: u64,
}

impl<'a> Search<'a> {
    fn new(
        inst: &'a Instance,
        feas: &'a RmFeasibility,
        crit: FairnessCriterion,
        max_nodes: u64,
    ) -> Self {
        let n = inst.n();
        let m = inst.m();
        let mut feasible_goods = vec![Bundle::EMPTY; n];
        for g in 0..m {
            for a in feas.owners[g].iter() {
                feasible_goods[a] = feasible_goods[a].with(g);
            }
        }
        let remf: Vec<u128> = (0..n)
            .map(|h| inst.ranking(h).to_position_mask(feasible_goods[h]))
            .collect();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of = vec![usize::MAX; n];
        for i in 0..n {
            if class_of[i] != usize::MAX {
                continue;
            }
            let members: Vec<usize> = (i..n)
                .filter(|&j| inst.ranking(j) == inst.ranking(i))
                .collect();
            for &j in &members {
                class_of[j] = classes.len();
            }
            classes.push(members);
        }
        classes.retain(|c| c.len() >= 2);
        let cut = n.saturating_sub(1).min(m);
        let top_slice: Vec<Bundle> = (0..n)
            .map(|i| (0..cut).map(|p| inst.ranking(i).good_at(p)).collect())
            .collect();
        let bottom_slice: Vec<Bundle> = (0..n)
            .map(|i| inst.full_bundle().difference(top_slice[i]))
            .collect();
        Search {
            inst,
            crit,
            removal_bound: crit.removal_bound(),
            n,
            owners: &feas.owners,
            feasible_goods,
            bundles: vec![Bundle::EMPTY; n],
            sizes: vec![0; n],
            assigned: Bundle::EMPTY,
            holdings: vec![vec![0u128; n]; n],
            remf,
            classes,
            top_slice,
            bottom_slice,
            nodes: 0,
            max_nodes,
        }
    }

    fn do_assign(&mut self, g: usize, a: usize) {
        self.assigned = self.assigned.with(g);
        self.bundles[a] = self.bundles[a].with(g);
        self.sizes[a] += 1;
        for h in 0..self.n {
            let bit = 1u128 << self.inst.ranking(h).position(g);
            self.holdings[h][a] |= bit;
            if self.owners[g].contains(h) {
                self.remf[h] &= !bit;
            }
        }
    }

    fn undo_assign(&mut self, g: usize, a: usize) {
        self.assigned = self.assigned.without(g);
        self.bundles[a] = self.bundles[a].without(g);
        self.sizes[a] -= 1;
        for h in 0..self.n {
            let bit = 1u128 << self.inst.ranking(h).position(g);
            self.holdings[h][a] &= !bit;
            if self.owners[g].contains(h) {
                self.remf[h] |= bit;
            }
        }
    }

    /// Sound feasibility test: `false` only when no completion of the
    /// current partial assignment can satisfy the criterion.
    fn consistent(&self) -> bool {
        if let Some(k) = self.removal_bound {
            // Viewer h can end with at best the top of (own bundle ∪ its
            // feasible remainder); every good of A_i ranked above that must
            // be removed for h, so more than k of them is fatal.
            for h in 0..self.n {
                let best = below(tz(self.holdings[h][h] | self.remf[h]));
                for i in 0..self.n {
                    if i != h && (self.holdings[h][i] & best).count_ones() as usize > k {
                        return false;
                    }
                }
            }
            // Pigeonhole over identical-ranking groups: the worst-off member
            // ends no better than the |group|-th best good of what the group
            // can jointly hold.
            for class in &self.classes {
                let rep = class[0];
                let mut pool = self.remf[rep];
                for &h in class {
                    pool |= self.holdings[h][h];
                }
                let mut wth = pool;
                for _ in 1..class.len() {
                    wth &= wth.wrapping_sub(1); // clear lowest set bit
                }
                let reach = below(tz(wth));
                for i in 0..self.n {
                    if class.contains(&i) {
                        continue;
                    }
                    if (self.holdings[rep][i] & reach).count_ones() as usize > k {
                        return false;
                    }
                }
            }
        }
        if self.crit == FairnessCriterion::Efx {
            // An agent that is envied in every completion may not hold two
            // goods. Envy is decided once the top of (A_h ∪ A_i) lies in A_i
            // and outranks everything h can still receive.
            for h in 0..self.n {
                let horizon = tz(self.remf[h]);
                for i in 0..self.n {
                    if i == h || self.sizes[i] < 2 {
                        continue;
                    }
                    let joint = self.holdings[h][h] | self.holdings[h][i];
                    let p = tz(joint);
                    if p < horizon && self.holdings[h][i] >> p & 1 == 1 {
                        return false;
                    }
                }
            }
        }
        if self.crit == FairnessCriterion::Mms && self.n <= self.inst.m() {
            // Each agent needs one of its top n−1 goods or its entire bottom
            // block; prune once both routes are closed.
            for i in 0..self.n {
                if !self.bundles[i].intersection(self.top_slice[i]).is_empty() {
                    continue;
                }
                let unassigned = self.inst.full_bundle().difference(self.assigned);
                let top_route = !self.top_slice[i]
                    .intersection(unassigned)
                    .intersection(self.feasible_goods[i])
                    .is_empty();
                let lost_bottom = !self.bottom_slice[i]
                    .intersection(self.assigned)
                    .difference(self.bundles[i])
                    .is_empty();
                let unreachable_bottom = !self.bottom_slice[i]
                    .intersection(unassigned)
                    .difference(self.feasible_goods[i])
                    .is_empty();
                if !top_route && (lost_bottom || unreachable_bottom) {
                    return false;
                }
            }
        }
        true
    }

    fn dfs(&mut self, order: &[usize], depth: usize) -> Dfs {
        if depth == order.len() {
            let alloc = Allocation::new(self.bundles.clone(), self.inst.m())
                .expect("search bundles stay disjoint");
            debug_assert!(is_rank_maximal(self.inst, &alloc));
            return if self.crit.holds_for(self.inst, &alloc) {
                Dfs::Found(alloc)
            } else {
                Dfs::Exhausted
            };
        }
        let g = order[depth];
        for a in self.owners[g].iter() {
            self.nodes += 1;
            if self.nodes > self.max_nodes {
                return Dfs::Aborted;
            }
            self.do_assign(g, a);
            if self.consistent() {
                match self.dfs(order, depth + 1) {
                    Dfs::Found(x) => return Dfs::Found(x),
                    Dfs::Aborted => {
                        self.undo_assign(g, a);
                        return Dfs::Aborted;
                    }
                    Dfs::Exhausted => {}
                }
            }
            self.undo_assign(g, a);
        }
        Dfs::Exhausted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{enumerate_profiles, Instance};

    fn random_instance(rng: &mut impl rand::Rng, n: usize, m: usize) -> Instance {
        use rand::seq::SliceRandom;
        let mut orders = Vec::new();
        for _ in 0..n {
            let mut o: Vec<usize> = (0..m).collect();
            o.shuffle(rng);
            orders.push(o);
        }
        Instance::from_orders(orders).unwrap()
    }

    #[test]
    fn feasible_owner_examples() {
        let inst = fixtures::efk_rm_infeasible(1);
        let feas = rm_feasible_owners(&inst);
        assert_eq!(feas.owners[0].iter().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(feas.owners[1].iter().collect::<Vec<_>>(), vec![2]);
        assert_eq!(feas.owners[2].iter().collect::<Vec<_>>(), vec![2]);

        let ident = Instance::identical(3, vec![0, 1]).unwrap();
        let feas = rm_feasible_owners(&ident);
        assert!(feas.owners.iter().all(|o| o.len() == 3));
    }

    #[test]
    fn ef_rm_examples() {
        let inst =
            Instance::from_orders(vec![vec![0, 1, 2], vec![1, 0, 2], vec![2, 0, 1]]).unwrap();
        let a = exists_ef_rm(&inst).expect("distinct tops");
        assert!(is_ef(&inst, &a).holds && is_rank_maximal(&inst, &a));
        // the unconstrained oracle also finds an envy-free allocation here
        assert!(matches!(
            brute_force(&inst, FairnessCriterion::Ef, false, false),
            SolveOutcome::Found(_)
        ));

        assert!(exists_ef_rm(&fixtures::efk_rm_infeasible(1)).is_none());

        let solo = Instance::identical(1, vec![0, 1, 2]).unwrap();
        let a = exists_ef_rm(&solo).unwrap();
        assert_eq!(a.bundle(0).len(), 3);
    }

    #[test]
    fn ef_rm_exists_iff_tops_distinct() {
        for inst in enumerate_profiles(3, 3).unwrap() {
            let tops: std::collections::BTreeSet<usize> =
                (0..3).map(|i| inst.ranking(i).good_at(0)).collect();
            assert_eq!(exists_ef_rm(&inst).is_some(), tops.len() == 3);
        }
    }

    #[test]
    fn mms_rm_examples() {
        let (inst, _) = fixtures::mms_not_efx();
        let a = exists_mms_rm(&inst).unwrap().expect("exists");
        assert!(is_mms(&inst, &a).holds && is_rank_maximal(&inst, &a));

        let ident = Instance::identical(3, (0..5).collect()).unwrap();
        let a = exists_mms_rm(&ident)
            .unwrap()
            .expect("identical preferences admit one");
        assert!(is_mms(&ident, &a).holds);

        let distinct =
            Instance::from_orders(vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]).unwrap();
        let a = exists_mms_rm(&distinct)
            .unwrap()
            .expect("m = n with distinct tops");
        assert!(is_mms(&distinct, &a).holds && is_rank_maximal(&distinct, &a));
    }

    #[test]
    fn ef1_three_agent_examples() {
        let budget = SolveBudget::default();
        // shared-top fixture: no EF1 + rank-maximal allocation at k = 1
        let inst = fixtures::efk_rm_infeasible(1);
        assert_eq!(
            exists_ef1_rm_three(&inst, &budget).unwrap(),
            SolveOutcome::NoneExists
        );
        assert_eq!(
            brute_force(&inst, FairnessCriterion::Ef1, true, false).exists(),
            Some(false)
        );
        // with four goods the verdict still matches the oracle
        let inst = fixtures::efk_rm_infeasible(2);
        let ours = exists_ef1_rm_three(&inst, &budget).unwrap();
        let oracle = brute_force(&inst, FairnessCriterion::Ef1, true, false);
        assert_eq!(ours.exists(), oracle.exists());

        let distinct =
            Instance::from_orders(vec![vec![0, 1, 2], vec![1, 0, 2], vec![2, 0, 1]]).unwrap();
        assert!(matches!(
            exists_ef1_rm_three(&distinct, &budget).unwrap(),
            SolveOutcome::Found(_)
        ));

        let two = Instance::identical(2, vec![0, 1]).unwrap();
        assert!(matches!(
            exists_ef1_rm_three(&two, &budget),
            Err(ExistenceError::NotThreeAgents(2))
        ));
    }

    #[test]
    fn solver_examples() {
        let budget = SolveBudget::default();
        let inst = fixtures::efk_rm_infeasible(1);
        assert_eq!(
            solve_fair_rm(&inst, FairnessCriterion::Efx, &budget),
            SolveOutcome::NoneExists
        );

        let ident = Instance::identical(3, (0..5).collect()).unwrap();
        match solve_fair_rm(&ident, FairnessCriterion::Efx, &budget) {
            SolveOutcome::Found(a) => {
                assert!(is_efx(&ident, &a).holds && is_rank_maximal(&ident, &a));
            }
            other => panic!("expected a solution, got {other:?}"),
        }
    }

    #[test]
    fn solver_budget_yields_unknown_not_none() {
        let ident = Instance::identical(3, (0..5).collect()).unwrap();
        let outcome = solve_fair_rm(
            &ident,
            FairnessCriterion::Efx,
            &SolveBudget { max_nodes: 1 },
        );
        assert_eq!(outcome, SolveOutcome::Unknown);
    }

    #[test]
    fn solver_agrees_with_brute_force_on_random_instances() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        let budget = SolveBudget::default();
        let criteria = [
            FairnessCriterion::Ef,
            FairnessCriterion::Efx,
            FairnessCriterion::Ef1,
            FairnessCriterion::EfK(2),
            FairnessCriterion::Mms,
        ];
        for _ in 0..500 {
            let n = rand::Rng::gen_range(&mut rng, 1..=4);
            let m = rand::Rng::gen_range(&mut rng, 1..=7);
            let inst = random_instance(&mut rng, n, m);
            for crit in criteria {
                let ours = solve_fair_rm(&inst, crit, &budget);
                let oracle = brute_force(&inst, crit, true, false);
                assert_eq!(ours.exists(), oracle.exists(), "criterion {crit:?}");
                if let SolveOutcome::Found(a) = &ours {
                    assert!(crit.holds_for(&inst, a) && is_rank_maximal(&inst, a));
                }
            }
        }
    }

    #[test]
    fn small_bundle_rm_criterion_matches_enumeration() {
        use crate::model::enumerate_allocations;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..300 {
            let n = rand::Rng::gen_range(&mut rng, 1..=3);
            let m = rand::Rng::gen_range(&mut rng, 1..=5);
            let inst = random_instance(&mut rng, n, m);
            let oracle = enumerate_allocations(&inst, true)
                .unwrap()
                .any(|a| is_rank_maximal(&inst, &a) && (0..n).any(|i| a.bundle(i).len() <= 1));
            assert_eq!(exists_rm_some_agent_at_most_one(&inst), oracle);
        }
    }
}
