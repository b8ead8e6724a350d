//! Fair division of indivisible goods under lexicographic preferences.
//!
//! Agents rank individual goods; bundles compare by the highest-ranked good
//! in their symmetric difference. On this domain the crate provides:
//!
//! * checkers for envy-freeness and its relaxations (EFX, EFk), the maximin
//!   share guarantee, rank-maximality, and Pareto optimality, each with
//!   replayable witnesses ([`fairness`], [`efficiency`]);
//! * picking-sequence mechanisms: the two-phase family whose outputs are
//!   exactly the EFX + Pareto-optimal allocations, its strategyproof
//!   last-agent special case, and quota serial dictatorship ([`mechanisms`]);
//! * exhaustive auditors for strategyproofness, group-strategyproofness,
//!   non-bossiness, and neutrality over full small profile domains, plus the
//!   single-axiom counterexample mechanisms ([`axioms`]);
//! * existence solvers for fairness + rank-maximality: polynomial algorithms
//!   for envy-freeness, the maximin guarantee, and EF1 with three agents,
//!   an exact budgeted search for everything else, and a brute-force oracle
//!   ([`existence`]);
//! * hardness reduction builders from (2/2/3)-SAT and Partition Into
//!   Triangles with encoders, decoders, and oracles ([`reductions`]);
//! * a Mallows-model experiment harness with deterministic seeding and CSV
//!   output ([`experiments`]).

pub mod axioms;
pub mod efficiency;
pub mod existence;
pub mod experiments;
pub mod fairness;
pub mod fixtures;
pub mod mechanisms;
pub mod model;
pub mod reductions;

pub use model::{Allocation, Bundle, Instance, PickingSequence, Ranking};
