//! Small named instances used across the test suites and the documentation.

use crate::model::{Allocation, Bundle, Instance};

/// Three agents over `k + 2` goods: agents 1 and 2 share the ranking
/// `g1 ≻ g2 ≻ … ≻ g_{k+2}` while agent 3 ranks `g2 ≻ g3 ≻ … ≻ g_{k+2} ≻ g1`.
/// Rank-maximality forces goods `g2..g_{k+2}` onto agent 3 and leaves one of
/// the first two agents empty-handed, so no allocation is both EFk and
/// rank-maximal; relaxing to EF(k+1) restores existence.
pub fn efk_rm_infeasible(k: usize) -> Instance {
    assert!(k >= 1);
    let m = k + 2;
    let straight: Vec<usize> = (0..m).collect();
    let mut rotated: Vec<usize> = (1..m).collect();
    rotated.push(0);
    Instance::from_orders(vec![straight.clone(), straight, rotated]).expect("valid fixture")
}

/// The rank-maximal allocation of [`efk_rm_infeasible`] that resolves the
/// contested top good in favor of agent 1: `({g1}, ∅, {g2, …, g_{k+2}})`.
pub fn efk_rm_infeasible_rm_allocation(k: usize) -> Allocation {
    let m = k + 2;
    let bundles = vec![Bundle::singleton(0), Bundle::EMPTY, (1..m).collect()];
    Allocation::new(bundles, m).expect("valid fixture allocation")
}

/// Four agents, five goods, and an allocation that meets every agent's
/// maximin threshold yet fails EFX (and EF1): agent 1 holds two goods and is
/// envied by agent 2.
pub fn mms_not_efx() -> (Instance, Allocation) {
    let inst = Instance::from_orders(vec![
        vec![0, 1, 2, 3, 4],
        vec![0, 1, 2, 3, 4],
        vec![3, 0, 1, 2, 4],
        vec![4, 0, 1, 2, 3],
    ])
    .expect("valid fixture");
    let alloc = Allocation::new(
        vec![
            [0usize, 1].into_iter().collect(),
            Bundle::singleton(2),
            Bundle::singleton(3),
            Bundle::singleton(4),
        ],
        5,
    )
    .expect("valid fixture allocation");
    (inst, alloc)
}

/// Four agents with identical rankings over five goods and an allocation
/// that is EF1 but leaves agent 1 with a strict subset of its bottom goods,
/// failing the maximin guarantee.
pub fn ef1_not_mms() -> (Instance, Allocation) {
    let inst = Instance::identical(4, (0..5).collect()).expect("valid fixture");
    let alloc = Allocation::new(
        vec![
            Bundle::singleton(3),
            [0usize, 4].into_iter().collect(),
            Bundle::singleton(1),
            Bundle::singleton(2),
        ],
        5,
    )
    .expect("valid fixture allocation");
    (inst, alloc)
}
