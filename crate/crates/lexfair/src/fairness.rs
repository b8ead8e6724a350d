//! Fairness checkers: envy-freeness and its relaxations (EFX, EFk) and the
//! maximin share guarantee, each with a minimal witness on failure.
//!
//! All checkers accept partial allocations except [`is_mms`], whose
//! characterization is stated for complete allocations only.

use std::cmp::Ordering;

use crate::model::{lex_compare, weakly_prefers, Allocation, Bundle, Instance};

/// Outcome of a fairness check. On failure, `witness` names an envier, the
/// agent it compares against, and the good set relevant to the violated
/// clause (empty for plain envy, the removal set for EFk, the maximin
/// threshold for MMS).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FairnessVerdict {
    pub holds: bool,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub envier: usize,
    pub envied: usize,
    pub goods: Bundle,
}

impl FairnessVerdict {
    pub fn ok() -> Self {
        FairnessVerdict {
            holds: true,
            witness: None,
        }
    }

    pub fn fail(envier: usize, envied: usize, goods: Bundle) -> Self {
        FairnessVerdict {
            holds: false,
            witness: Some(Witness {
                envier,
                envied,
                goods,
            }),
        }
    }
}

/// `true` iff agent `i` strictly prefers `h`'s bundle to its own.
pub fn envies(inst: &Instance, alloc: &Allocation, i: usize, h: usize) -> bool {
    lex_compare(inst.ranking(i), alloc.bundle(h), alloc.bundle(i)) == Ordering::Greater
}

/// `n × n` matrix with `[i][h] = true` iff `i` envies `h`.
pub fn envy_matrix(inst: &Instance, alloc: &Allocation) -> Vec<Vec<bool>> {
    let n = inst.n();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|h| i != h && envies(inst, alloc, i, h))
                .collect()
        })
        .collect()
}

/// Envy-freeness: no ordered pair of agents envies.
pub fn is_ef(inst: &Instance, alloc: &Allocation) -> FairnessVerdict {
    for i in 0..inst.n() {
        for h in 0..inst.n() {
            if i != h && envies(inst, alloc, i, h) {
                return FairnessVerdict::fail(i, h, Bundle::EMPTY);
            }
        }
    }
    FairnessVerdict::ok()
}

/// Envy-freeness up to any good: for every pair `i, h` with `A_h ≠ ∅` and
/// every `j ∈ A_h`, agent `i` weakly prefers `A_i` to `A_h ∖ {j}`.
pub fn is_efx(inst: &Instance, alloc: &Allocation) -> FairnessVerdict {
    for i in 0..inst.n() {
        let r = inst.ranking(i);
        for h in 0..inst.n() {
            if i == h || alloc.bundle(h).is_empty() {
                continue;
            }
            for j in alloc.bundle(h).iter() {
                if !weakly_prefers(r, alloc.bundle(i), alloc.bundle(h).without(j)) {
                    return FairnessVerdict::fail(i, h, Bundle::singleton(j));
                }
            }
        }
    }
    FairnessVerdict::ok()
}

/// Equivalent formulation of EFX under lexicographic preferences: an
/// allocation is EFX iff every envied agent holds exactly one good.
/// Agrees with [`is_efx`] on every input.
pub fn efx_characterization(inst: &Instance, alloc: &Allocation) -> FairnessVerdict {
    for envied in 0..inst.n() {
        if alloc.bundle(envied).len() <= 1 {
            continue;
        }
        for envier in 0..inst.n() {
            if envier != envied && envies(inst, alloc, envier, envied) {
                return FairnessVerdict::fail(envier, envied, alloc.bundle(envied));
            }
        }
    }
    FairnessVerdict::ok()
}

/// Envy-freeness up to `k` goods: every pairwise envy can be eliminated by
/// removing at most `k` goods from the envied bundle. Under lexicographic
/// preferences it is optimal to remove the `k` goods of `A_h` that the
/// envier ranks highest, so the check is greedy.
///
/// Panics if `k == 0`.
pub fn is_ef_k(inst: &Instance, alloc: &Allocation, k: usize) -> FairnessVerdict {
    assert!(k >= 1, "EFk requires k >= 1");
    for i in 0..inst.n() {
        let r = inst.ranking(i);
        for h in 0..inst.n() {
            if i == h || alloc.bundle(h).is_empty() {
                continue;
            }
            let mut reduced = alloc.bundle(h);
            let mut removed = Bundle::EMPTY;
            for _ in 0..k {
                match r.best_of(reduced) {
                    Some(g) => {
                        reduced = reduced.without(g);
                        removed = removed.with(g);
                    }
                    None => break,
                }
            }
            if !weakly_prefers(r, alloc.bundle(i), reduced) {
                return FairnessVerdict::fail(i, h, removed);
            }
        }
    }
    FairnessVerdict::ok()
}

/// The maximin partition of one agent: its top `n−1` goods as singletons and
/// the remaining `m−n+1` goods as one block, with the lexicographically
/// least-preferred part as threshold. When `m < n` some parts (and the
/// threshold) are empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MmsPartition {
    pub parts: Vec<Bundle>,
    pub threshold: Bundle,
}

pub fn mms_partition(inst: &Instance, agent: usize) -> MmsPartition {
    let n = inst.n();
    let m = inst.m();
    let r = inst.ranking(agent);
    let mut parts = Vec::with_capacity(n);
    if m < n {
        for p in 0..n {
            if p < m {
                parts.push(Bundle::singleton(r.good_at(p)));
            } else {
                parts.push(Bundle::EMPTY);
            }
        }
        return MmsPartition {
            parts,
            threshold: Bundle::EMPTY,
        };
    }
    for p in 0..n - 1 {
        parts.push(Bundle::singleton(r.good_at(p)));
    }
    let tail: Bundle = (n - 1..m).map(|p| r.good_at(p)).collect();
    parts.push(tail);
    let threshold = parts
        .iter()
        .copied()
        .min_by(|&a, &b| lex_compare(r, a, b))
        .expect("n >= 1 parts");
    MmsPartition { parts, threshold }
}

/// The agent's top `n−1` goods (empty set of positions when `m < n`).
fn top_slice(inst: &Instance, agent: usize) -> Bundle {
    let cut = (inst.n() - 1).min(inst.m());
    (0..cut).map(|p| inst.ranking(agent).good_at(p)).collect()
}

/// Definitional maximin comparison: every agent weakly prefers its bundle to
/// the least-preferred part of its own maximin partition. Unlike [`is_mms`]
/// this accepts partial allocations, so mechanisms that discard goods can
/// still be audited against the maximin guarantee.
pub fn meets_maximin_threshold(inst: &Instance, alloc: &Allocation) -> FairnessVerdict {
    for i in 0..inst.n() {
        let part = mms_partition(inst, i);
        if !weakly_prefers(inst.ranking(i), alloc.bundle(i), part.threshold) {
            return FairnessVerdict::fail(i, i, part.threshold);
        }
    }
    FairnessVerdict::ok()
}

/// Maximin share guarantee for a complete allocation: every agent holds one
/// or more of its top `n−1` goods, or all of its remaining `m−n+1` goods.
/// This agrees with the definitional check `A_i ⪰_i threshold_i`.
///
/// Panics on partial allocations.
pub fn is_mms(inst: &Instance, alloc: &Allocation) -> FairnessVerdict {
    assert!(
        alloc.is_complete(),
        "the MMS check is defined for complete allocations"
    );
    let n = inst.n();
    for i in 0..n {
        let part = mms_partition(inst, i);
        let bundle = alloc.bundle(i);
        let top_hit = !bundle.intersection(top_slice(inst, i)).is_empty();
        let bottom: Bundle = inst.full_bundle().difference(top_slice(inst, i));
        let characterization = top_hit || bottom.is_subset(bundle);
        let definitional = weakly_prefers(inst.ranking(i), bundle, part.threshold);
        debug_assert_eq!(characterization, definitional);
        if !characterization {
            return FairnessVerdict::fail(i, i, part.threshold);
        }
    }
    FairnessVerdict::ok()
}
