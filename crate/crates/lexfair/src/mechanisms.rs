//! Allocation mechanisms built from picking sequences: a serial-dictatorship
//! round followed by a leftover phase restricted to unenvied agents, the
//! special case that hands all leftovers to the last agent, quota-based
//! serial dictatorship, and the decomposition that recovers `(σ, τ)`
//! parameters from any EFX and Pareto-optimal allocation.

use thiserror::Error;

use crate::efficiency::{extract_picking_sequence, is_pareto_optimal};
use crate::fairness::{envies, is_efx};
use crate::model::{Allocation, Bundle, Instance, PickingSequence};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MechanismError {
    #[error("agent id {0} out of range")]
    AgentOutOfRange(usize),
    #[error("sigma must be a permutation of all agents")]
    NotAPermutation,
    #[error("tau has length {got}, expected {expected}")]
    TauLength { expected: usize, got: usize },
    #[error("tau references agent {0}, who is envied after the first phase")]
    TauEnviedAgent(usize),
    #[error("tau round-robin order must be nonempty")]
    EmptyRoundRobin,
    #[error("quotas sum to {got}, expected {expected}")]
    QuotaSum { expected: usize, got: usize },
}

/// Policy for the leftover phase: an explicit sequence of length `m − n`, all
/// leftovers to one agent, or round-robin over a fixed agent order. Every
/// referenced agent must be unenvied when the phase starts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TauPolicy {
    Explicit(Vec<usize>),
    AllToOne(usize),
    RoundRobin(Vec<usize>),
}

/// Quota vector for [`serial_dictatorship_quota`]; positional with respect to
/// the agent ordering, and required to sum to `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quotas(pub Vec<usize>);

/// Replays a picking sequence: agents in order each take their most
/// preferred remaining good. The result is complete iff the sequence has
/// length `m`.
pub fn run_picking_sequence(
    inst: &Instance,
    seq: &PickingSequence,
) -> Result<Allocation, MechanismError> {
    assert!(
        seq.len() <= inst.m(),
        "picking sequence longer than the good supply"
    );
    let mut alloc = Allocation::empty(inst.n(), inst.m());
    let mut remaining = inst.full_bundle();
    for &agent in seq.agents() {
        if agent >= inst.n() {
            return Err(MechanismError::AgentOutOfRange(agent));
        }
        let top = inst
            .ranking(agent)
            .best_of(remaining)
            .expect("goods remain");
        alloc.assign(top, agent);
        remaining = remaining.without(top);
    }
    Ok(alloc)
}

fn check_permutation(inst: &Instance, sigma: &[usize]) -> Result<(), MechanismError> {
    if sigma.len() != inst.n() {
        return Err(MechanismError::NotAPermutation);
    }
    let mut seen = vec![false; inst.n()];
    for &a in sigma {
        if a >= inst.n() || seen[a] {
            return Err(MechanismError::NotAPermutation);
        }
        seen[a] = true;
    }
    Ok(())
}

/// One serial-dictatorship round: the first `min(n, m)` agents of `sigma`
/// pick their favorite remaining good. Returns the partial allocation and
/// the set of leftover goods.
pub fn serial_dictatorship_round(
    inst: &Instance,
    sigma: &[usize],
) -> Result<(Allocation, Bundle), MechanismError> {
    check_permutation(inst, sigma)?;
    let rounds = inst.n().min(inst.m());
    let mut alloc = Allocation::empty(inst.n(), inst.m());
    let mut remaining = inst.full_bundle();
    for &agent in sigma.iter().take(rounds) {
        let top = inst
            .ranking(agent)
            .best_of(remaining)
            .expect("goods remain");
        alloc.assign(top, agent);
        remaining = remaining.without(top);
    }
    Ok((alloc, remaining))
}

/// Agents that nobody envies under the given allocation.
pub fn unenvied_agents(inst: &Instance, alloc: &Allocation) -> Vec<usize> {
    (0..inst.n())
        .filter(|&i| (0..inst.n()).all(|h| h == i || !envies(inst, alloc, h, i)))
        .collect()
}

/// The two-phase mechanism family: a serial-dictatorship round ordered by
/// `sigma`, then the `m − n` leftover goods assigned among the unenvied
/// agents according to `tau`. Every output is EFX and Pareto optimal, and
/// every EFX and Pareto-optimal allocation arises for some `(σ, τ)`.
///
/// When `m < n` the dictatorship round stops once goods run out and the
/// leftover phase is skipped.
pub fn efx_po_mechanism(
    inst: &Instance,
    sigma: &[usize],
    tau: &TauPolicy,
) -> Result<Allocation, MechanismError> {
    let (mut alloc, remaining) = serial_dictatorship_round(inst, sigma)?;
    let leftover = remaining.len();

    let unenvied = unenvied_agents(inst, &alloc);
    let in_unenvied = |a: usize| unenvied.contains(&a);
    let order: Vec<usize> = match tau {
        TauPolicy::Explicit(seq) => {
            if seq.len() != leftover {
                return Err(MechanismError::TauLength {
                    expected: leftover,
                    got: seq.len(),
                });
            }
            seq.clone()
        }
        TauPolicy::AllToOne(agent) => vec![*agent; leftover],
        TauPolicy::RoundRobin(agents) => {
            if leftover > 0 && agents.is_empty() {
                return Err(MechanismError::EmptyRoundRobin);
            }
            (0..leftover).map(|i| agents[i % agents.len()]).collect()
        }
    };
    if leftover == 0 {
        return Ok(alloc);
    }
    for &a in &order {
        if a >= inst.n() {
            return Err(MechanismError::AgentOutOfRange(a));
        }
        if !in_unenvied(a) {
            return Err(MechanismError::TauEnviedAgent(a));
        }
    }

    let mut remaining = remaining;
    for &agent in &order {
        let top = inst
            .ranking(agent)
            .best_of(remaining)
            .expect("goods remain");
        alloc.assign(top, agent);
        remaining = remaining.without(top);
    }
    Ok(alloc)
}

/// Serial dictatorship with all leftovers to the last agent of `sigma`.
/// Coincides with [`efx_po_mechanism`] under `AllToOne(last)` and with
/// [`serial_dictatorship_quota`] under quotas `(1, …, 1, m−n+1)`.
pub fn last_agent_mechanism(
    inst: &Instance,
    sigma: &[usize],
) -> Result<Allocation, MechanismError> {
    let (mut alloc, remaining) = serial_dictatorship_round(inst, sigma)?;
    let last = *sigma.last().expect("n >= 1");
    let mut rest: Vec<usize> = remaining.iter().collect();
    rest.sort_unstable();
    for g in rest {
        alloc.assign(g, last);
    }
    Ok(alloc)
}

/// Quota-based serial dictatorship: agents in `sigma` order take their most
/// preferred bundle of the prescribed size from the remaining goods (under
/// lexicographic preferences, their top `q_i` remaining goods).
pub fn serial_dictatorship_quota(
    inst: &Instance,
    sigma: &[usize],
    quotas: &Quotas,
) -> Result<Allocation, MechanismError> {
    check_permutation(inst, sigma)?;
    let total: usize = quotas.0.iter().sum();
    if quotas.0.len() != inst.n() || total != inst.m() {
        return Err(MechanismError::QuotaSum {
            expected: inst.m(),
            got: total,
        });
    }
    let mut alloc = Allocation::empty(inst.n(), inst.m());
    let mut remaining = inst.full_bundle();
    for (pos, &agent) in sigma.iter().enumerate() {
        for _ in 0..quotas.0[pos] {
            let top = inst
                .ranking(agent)
                .best_of(remaining)
                .expect("quotas sum to m");
            alloc.assign(top, agent);
            remaining = remaining.without(top);
        }
    }
    Ok(alloc)
}

/// Recovers `(σ, τ)` with `efx_po_mechanism(inst, σ, Explicit(τ)) == alloc`
/// for any complete EFX and Pareto-optimal allocation; returns `None` when
/// the allocation fails EFX or Pareto optimality.
///
/// The allocation's picking sequence is normalized by repeatedly moving the
/// first appearance of a late agent ahead of earlier repeats; each move
/// preserves the replayed allocation, so the `n`-prefix ends up a
/// permutation.
pub fn decompose_efx_po(inst: &Instance, alloc: &Allocation) -> Option<(Vec<usize>, Vec<usize>)> {
    if !alloc.is_complete() || !is_efx(inst, alloc).holds || !is_pareto_optimal(inst, alloc) {
        return None;
    }
    let n = inst.n();
    let m = inst.m();
    let mut seq = extract_picking_sequence(inst, alloc)?.0;

    if m < n {
        // every bundle is a singleton here, so seq lists m distinct agents
        let mut sigma = seq.clone();
        let mut present = vec![false; n];
        for &a in &sigma {
            present[a] = true;
        }
        sigma.extend((0..n).filter(|&a| !present[a]));
        let out = efx_po_mechanism(inst, &sigma, &TauPolicy::Explicit(vec![])).ok()?;
        return if &out == alloc {
            Some((sigma, vec![]))
        } else {
            None
        };
    }

    loop {
        let prefix_distinct = {
            let mut seen = vec![false; n];
            seq[..n]
                .iter()
                .all(|&a| !std::mem::replace(&mut seen[a], true))
        };
        if prefix_distinct {
            break;
        }
        // first repeated occurrence
        let mut seen = vec![false; n];
        let mut t_i = None;
        for (p, &a) in seq.iter().enumerate() {
            if seen[a] {
                t_i = Some(p);
                break;
            }
            seen[a] = true;
        }
        let t_i = t_i.expect("prefix has a repeat");
        // earliest first appearance after t_i
        let mut seen = vec![false; n];
        for &a in &seq[..t_i] {
            seen[a] = true;
        }
        let mut t_j = None;
        for (p, &a) in seq.iter().enumerate().skip(t_i) {
            if !seen[a] {
                t_j = Some(p);
                break;
            }
            seen[a] = true;
        }
        let t_j = t_j.expect("every agent appears when m >= n");
        let agent = seq.remove(t_j);
        seq.insert(t_i, agent);
        let replay = run_picking_sequence(inst, &PickingSequence(seq.clone())).ok()?;
        if &replay != alloc {
            return None;
        }
    }

    let sigma: Vec<usize> = seq[..n].to_vec();
    let tau: Vec<usize> = seq[n..].to_vec();
    let out = efx_po_mechanism(inst, &sigma, &TauPolicy::Explicit(tau.clone())).ok()?;
    if &out == alloc {
        Some((sigma, tau))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efficiency::is_pareto_optimal;
    use crate::fairness::{envy_matrix, is_efx};
    use crate::fixtures;
    use crate::model::{enumerate_allocations, Instance};

    fn b(goods: &[usize]) -> Bundle {
        goods.iter().copied().collect()
    }

    fn alloc(bundles: &[&[usize]], m: usize) -> Allocation {
        Allocation::new(bundles.iter().map(|g| b(g)).collect(), m).unwrap()
    }

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
    fn picking_sequence_examples() {
        let ident = Instance::identical(2, vec![0, 1, 2]).unwrap();
        let a = run_picking_sequence(&ident, &PickingSequence(vec![0, 1, 0])).unwrap();
        assert_eq!(a, alloc(&[&[0, 2], &[1]], 3));

        let empty = run_picking_sequence(&ident, &PickingSequence(vec![])).unwrap();
        assert!(empty.assigned().is_empty());

        let inst = fixtures::efk_rm_infeasible(1);
        let a = run_picking_sequence(&inst, &PickingSequence(vec![0, 2, 2])).unwrap();
        assert_eq!(a, fixtures::efk_rm_infeasible_rm_allocation(1));

        assert_eq!(
            run_picking_sequence(&ident, &PickingSequence(vec![5])),
            Err(MechanismError::AgentOutOfRange(5))
        );
    }

    #[test]
    fn unenvied_agent_examples() {
        let ident = Instance::identical(3, vec![0, 1, 2]).unwrap();
        let (phase1, _) = serial_dictatorship_round(&ident, &[0, 1, 2]).unwrap();
        assert_eq!(unenvied_agents(&ident, &phase1), vec![2]);

        let distinct = Instance::from_orders(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let (phase1, _) = serial_dictatorship_round(&distinct, &[0, 1]).unwrap();
        assert_eq!(unenvied_agents(&distinct, &phase1), vec![0, 1]);

        let inst = fixtures::efk_rm_infeasible(1);
        let (phase1, _) = serial_dictatorship_round(&inst, &[0, 1, 2]).unwrap();
        assert_eq!(unenvied_agents(&inst, &phase1), vec![2]);
    }

    #[test]
    fn two_phase_mechanism_examples() {
        let ident = Instance::identical(2, vec![0, 1, 2]).unwrap();
        let a = efx_po_mechanism(&ident, &[0, 1], &TauPolicy::AllToOne(1)).unwrap();
        assert_eq!(a, alloc(&[&[0], &[1, 2]], 3));
        assert!(is_efx(&ident, &a).holds);
        assert!(is_pareto_optimal(&ident, &a));

        // m == n: the leftover phase is skipped
        let inst = fixtures::efk_rm_infeasible(1);
        let a = efx_po_mechanism(&inst, &[0, 1, 2], &TauPolicy::Explicit(vec![])).unwrap();
        assert_eq!(a, alloc(&[&[0], &[1], &[2]], 3));
    }

    #[test]
    fn two_phase_mechanism_rejects_bad_tau() {
        let ident = Instance::identical(2, vec![0, 1, 2]).unwrap();
        // agent 1 envies agent 0 after the first phase
        assert_eq!(
            efx_po_mechanism(&ident, &[0, 1], &TauPolicy::AllToOne(0)),
            Err(MechanismError::TauEnviedAgent(0))
        );
        assert_eq!(
            efx_po_mechanism(&ident, &[0, 1], &TauPolicy::Explicit(vec![1, 1])),
            Err(MechanismError::TauLength {
                expected: 1,
                got: 2
            })
        );
    }

    #[test]
    fn last_agent_mechanism_examples() {
        let ident = Instance::identical(2, (0..4).collect()).unwrap();
        let a = last_agent_mechanism(&ident, &[0, 1]).unwrap();
        assert_eq!(a, alloc(&[&[0], &[1, 2, 3]], 4));

        let a =
            last_agent_mechanism(&Instance::identical(2, vec![0, 1, 2]).unwrap(), &[1, 0]).unwrap();
        assert_eq!(a, alloc(&[&[1, 2], &[0]], 3));

        // m = n − 1: the last agent never gets to pick
        let inst = Instance::identical(3, vec![0, 1]).unwrap();
        let a = last_agent_mechanism(&inst, &[0, 1, 2]).unwrap();
        assert!(a.bundle(2).is_empty());
    }

    #[test]
    fn quota_mechanism_examples() {
        let ident = Instance::identical(2, vec![0, 1, 2]).unwrap();
        let a = serial_dictatorship_quota(&ident, &[0, 1], &Quotas(vec![2, 1])).unwrap();
        assert_eq!(a, alloc(&[&[0, 1], &[2]], 3));

        let a = serial_dictatorship_quota(&ident, &[0, 1], &Quotas(vec![3, 0])).unwrap();
        assert_eq!(a, alloc(&[&[0, 1, 2], &[]], 3));

        assert_eq!(
            serial_dictatorship_quota(&ident, &[0, 1], &Quotas(vec![1, 1])),
            Err(MechanismError::QuotaSum {
                expected: 3,
                got: 2
            })
        );
    }

    #[test]
    fn last_agent_equals_quota_special_case() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let n = rand::Rng::gen_range(&mut rng, 1..=4);
            let m = rand::Rng::gen_range(&mut rng, n..=8);
            let inst = random_instance(&mut rng, n, m);
            let sigma: Vec<usize> = {
                use rand::seq::SliceRandom;
                let mut s: Vec<usize> = (0..n).collect();
                s.shuffle(&mut rng);
                s
            };
            let mut quotas = vec![1usize; n];
            quotas[n - 1] = m - (n - 1);
            assert_eq!(
                last_agent_mechanism(&inst, &sigma).unwrap(),
                serial_dictatorship_quota(&inst, &sigma, &Quotas(quotas)).unwrap()
            );
        }
    }

    #[test]
    fn envy_relations_are_unchanged_by_the_leftover_phase() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for _ in 0..300 {
            let n = rand::Rng::gen_range(&mut rng, 2..=4);
            let m = rand::Rng::gen_range(&mut rng, n..=8);
            let inst = random_instance(&mut rng, n, m);
            let sigma: Vec<usize> = (0..n).collect();
            let (phase1, _) = serial_dictatorship_round(&inst, &sigma).unwrap();
            let unenvied = unenvied_agents(&inst, &phase1);
            let pick = unenvied[rand::Rng::gen_range(&mut rng, 0..unenvied.len())];
            let full = efx_po_mechanism(&inst, &sigma, &TauPolicy::AllToOne(pick)).unwrap();
            assert_eq!(envy_matrix(&inst, &phase1), envy_matrix(&inst, &full));
        }
    }

    #[test]
    fn decompose_round_trips_random_mechanism_outputs() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let n = rand::Rng::gen_range(&mut rng, 1..=4);
            let m = rand::Rng::gen_range(&mut rng, 1..=8);
            let inst = random_instance(&mut rng, n, m);
            let sigma: Vec<usize> = {
                use rand::seq::SliceRandom;
                let mut s: Vec<usize> = (0..n).collect();
                s.shuffle(&mut rng);
                s
            };
            let (phase1, remaining) = serial_dictatorship_round(&inst, &sigma).unwrap();
            let unenvied = unenvied_agents(&inst, &phase1);
            let tau: Vec<usize> = (0..remaining.len())
                .map(|_| unenvied[rand::Rng::gen_range(&mut rng, 0..unenvied.len())])
                .collect();
            let a = efx_po_mechanism(&inst, &sigma, &TauPolicy::Explicit(tau)).unwrap();
            let (s2, t2) = decompose_efx_po(&inst, &a).expect("mechanism outputs decompose");
            let replay = efx_po_mechanism(&inst, &s2, &TauPolicy::Explicit(t2)).unwrap();
            assert_eq!(replay, a);
        }
    }

    #[test]
    fn decompose_rejects_non_efx_allocations() {
        let ident = Instance::identical(2, vec![0, 1, 2]).unwrap();
        // agent 0 holds two goods and is envied
        let a = alloc(&[&[0, 1], &[2]], 3);
        assert!(decompose_efx_po(&ident, &a).is_none());
    }

    #[test]
    fn decompose_handles_fewer_goods_than_agents() {
        let inst = Instance::identical(3, vec![0, 1]).unwrap();
        for a in enumerate_allocations(&inst, true).unwrap() {
            let expected = is_efx(&inst, &a).holds && is_pareto_optimal(&inst, &a);
            match decompose_efx_po(&inst, &a) {
                Some((sigma, tau)) => {
                    assert!(expected);
                    let replay =
                        efx_po_mechanism(&inst, &sigma, &TauPolicy::Explicit(tau)).unwrap();
                    assert_eq!(replay, a);
                }
                None => assert!(!expected),
            }
        }
    }
}
