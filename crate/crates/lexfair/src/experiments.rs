//! Synthetic-data experiment harness: Mallows-model ranking sampling by
//! repeated insertion, Kendall tau distance, the closed-form probability of
//! distinct top goods, and the sweep runner that measures how often each
//! fairness criterion is compatible with rank-maximality.
//!
//! Trial outcomes are a pure function of `(seed, φ, m, trial index)`, so runs
//! are byte-identical regardless of worker count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::existence::{
    exists_ef1_rm_three, exists_ef_rm, exists_mms_rm, exists_rm_some_agent_at_most_one,
    solve_fair_rm, FairnessCriterion, SolveBudget, SolveOutcome,
};
use crate::model::{default_goods, permutations, Instance, Ranking};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("rankings cover different numbers of goods: {0} vs {1}")]
    MismatchedDomains(usize, usize),
    #[error("probability mass enumeration limited to {cap} goods, got {m}")]
    PmfTooLarge { m: usize, cap: usize },
    #[error("dispersion must lie in [0, 1], got {0}")]
    BadDispersion(f64),
    #[error("cannot parse sweep CSV at line {line}: {msg}")]
    BadCsv { line: usize, msg: String },
}

/// Mallows model parameters: a reference ranking and a dispersion in
/// `[0, 1]`; `0` concentrates all mass on the reference and `1` is uniform.
#[derive(Clone, Debug)]
pub struct MallowsParams {
    pub reference: Ranking,
    pub phi: f64,
}

impl MallowsParams {
    pub fn new(reference: Ranking, phi: f64) -> Result<Self, ExperimentError> {
        if !(0.0..=1.0).contains(&phi) {
            return Err(ExperimentError::BadDispersion(phi));
        }
        Ok(MallowsParams { reference, phi })
    }
}

/// Number of discordant pairs between two rankings over the same good set.
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<usize, ExperimentError> {
    if a.len() != b.len() {
        return Err(ExperimentError::MismatchedDomains(a.len(), b.len()));
    }
    let m = a.len();
    let mut count = 0usize;
    for p in 0..m {
        for q in p + 1..m {
            let (g, h) = (a.good_at(p), a.good_at(q));
            if b.position(g) > b.position(h) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Exact Mallows sample by repeated insertion: the `j`-th reference item
/// (1-indexed) is inserted at position `i ∈ {1..j}` with probability
/// `φ^{j−i} / (1 + φ + … + φ^{j−1})`, with `0^0 = 1` so that `φ = 0` always
/// reproduces the reference ranking.
pub fn mallows_sample(params: &MallowsParams, rng: &mut impl Rng) -> Ranking {
    let m = params.reference.len();
    let phi = params.phi;
    let mut order: Vec<usize> = Vec::with_capacity(m);
    for j in 1..=m {
        let good = params.reference.good_at(j - 1);
        // weights φ^{j−i} for i = 1..=j; accumulate from the back (i = j has
        // weight 1) so φ = 0 needs no special case
        let mut total = 0.0f64;
        let mut weights = vec![0.0f64; j];
        let mut w = 1.0f64;
        for i in (1..=j).rev() {
            weights[i - 1] = w;
            total += w;
            w *= phi;
        }
        let mut draw = rng.gen::<f64>() * total;
        let mut pos = j - 1;
        for (i, &wi) in weights.iter().enumerate() {
            if draw < wi {
                pos = i;
                break;
            }
            draw -= wi;
        }
        order.insert(pos, good);
    }
    Ranking::new(order).expect("insertion keeps a permutation")
}

/// Exact probability of drawing `ranking` under the model, with the
/// normalization constant computed by full enumeration (`m ≤ 8`).
pub fn mallows_pmf(params: &MallowsParams, ranking: &Ranking) -> Result<f64, ExperimentError> {
    let m = params.reference.len();
    if m > 8 {
        return Err(ExperimentError::PmfTooLarge { m, cap: 8 });
    }
    if ranking.len() != m {
        return Err(ExperimentError::MismatchedDomains(ranking.len(), m));
    }
    let phi = params.phi;
    let pow = |d: usize| -> f64 {
        if d == 0 {
            1.0
        } else {
            phi.powi(d as i32)
        }
    };
    let mut z = 0.0f64;
    for perm in permutations(m) {
        let r = Ranking::new(perm).expect("permutation");
        z += pow(kendall_tau(&params.reference, &r)?);
    }
    Ok(pow(kendall_tau(&params.reference, ranking)?) / z)
}

/// Probability that `n` uniformly random rankings of `m` goods have pairwise
/// distinct top goods: `∏_{i=1}^{n−1} (1 − i/m)`; `0` when `m < n`.
pub fn ef_rm_closed_form(n: usize, m: usize) -> f64 {
    if m < n {
        return 0.0;
    }
    (1..n).map(|i| 1.0 - i as f64 / m as f64).product()
}

/// Criteria measured by the sweep runner. `RmSmallBundle` counts instances
/// that admit a rank-maximal allocation giving some agent at most one good.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepCriterion {
    Ef,
    Efx,
    Ef1,
    Mms,
    RmSmallBundle,
}

impl SweepCriterion {
    pub fn label(self) -> &'static str {
        match self {
            SweepCriterion::Ef => "ef",
            SweepCriterion::Efx => "efx",
            SweepCriterion::Ef1 => "ef1",
            SweepCriterion::Mms => "mms",
            SweepCriterion::RmSmallBundle => "rm_small_bundle",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "ef" => Some(SweepCriterion::Ef),
            "efx" => Some(SweepCriterion::Efx),
            "ef1" => Some(SweepCriterion::Ef1),
            "mms" => Some(SweepCriterion::Mms),
            "rm_small_bundle" | "good" => Some(SweepCriterion::RmSmallBundle),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub n: usize,
    pub m_values: Vec<usize>,
    pub phis: Vec<f64>,
    pub trials: usize,
    pub criteria: Vec<SweepCriterion>,
    pub seed: u64,
    pub budget: SolveBudget,
}

/// One grid point: how many of `trials` sampled profiles admit a
/// criterion + rank-maximal allocation. Budget-exhausted trials are counted
/// separately and never folded into `exists_count`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub phi: f64,
    pub m: usize,
    pub n: usize,
    pub criterion: SweepCriterion,
    pub trials: usize,
    pub exists_count: usize,
    pub unknown_count: usize,
    pub seed: u64,
}

impl SweepRecord {
    pub fn fraction(&self) -> f64 {
        self.exists_count as f64 / self.trials as f64
    }
}

/// Deterministic per-trial generator stream.
pub fn trial_rng(seed: u64, phi: f64, m: usize, trial: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&phi.to_bits().to_le_bytes());
    key[16..24].copy_from_slice(&(m as u64).to_le_bytes());
    key[24..32].copy_from_slice(&(trial as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Samples one profile: `n` independent Mallows draws around the identity
/// reference ranking.
pub fn sample_instance(n: usize, m: usize, phi: f64, rng: &mut impl Rng) -> Instance {
    let params = MallowsParams {
        reference: Ranking::identity(m),
        phi,
    };
    let profile: Vec<Ranking> = (0..n).map(|_| mallows_sample(&params, rng)).collect();
    Instance::new(default_goods(m), profile).expect("sampled rankings are valid")
}

/// Decides one criterion for one instance, preferring the polynomial
/// algorithms and falling back to the exact search where none applies.
pub fn decide_criterion(
    inst: &Instance,
    criterion: SweepCriterion,
    budget: &SolveBudget,
) -> SolveOutcome {
    match criterion {
        SweepCriterion::Ef => match exists_ef_rm(inst) {
            Some(a) => SolveOutcome::Found(a),
            None => SolveOutcome::NoneExists,
        },
        SweepCriterion::Mms => match exists_mms_rm(inst).expect("internal recheck") {
            Some(a) => SolveOutcome::Found(a),
            None => SolveOutcome::NoneExists,
        },
        SweepCriterion::Efx => solve_fair_rm(inst, FairnessCriterion::Efx, budget),
        SweepCriterion::Ef1 => {
            if inst.n() == 3 {
                exists_ef1_rm_three(inst, budget).expect("n == 3")
            } else {
                solve_fair_rm(inst, FairnessCriterion::Ef1, budget)
            }
        }
        SweepCriterion::RmSmallBundle => {
            if exists_rm_some_agent_at_most_one(inst) {
                // witness construction is cheap but unused by the sweep
                SolveOutcome::Found(crate::efficiency::greedy_rank_maximal(inst))
            } else {
                SolveOutcome::NoneExists
            }
        }
    }
}

/// Runs the full grid. Each trial samples one profile and decides every
/// configured criterion on it, so implication chains hold pointwise per
/// trial; trials run in parallel and aggregate by counting.
pub fn run_sweep(config: &SweepConfig) -> Vec<SweepRecord> {
    let mut records = Vec::new();
    for &phi in &config.phis {
        for &m in &config.m_values {
            let per_trial: Vec<Vec<Option<bool>>> = (0..config.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = trial_rng(config.seed, phi, m, trial);
                    let inst = sample_instance(config.n, m, phi, &mut rng);
                    config
                        .criteria
                        .iter()
                        .map(|&c| decide_criterion(&inst, c, &config.budget).exists())
                        .collect()
                })
                .collect();
            for (ci, &criterion) in config.criteria.iter().enumerate() {
                let exists_count = per_trial.iter().filter(|t| t[ci] == Some(true)).count();
                let unknown_count = per_trial.iter().filter(|t| t[ci].is_none()).count();
                records.push(SweepRecord {
                    phi,
                    m,
                    n: config.n,
                    criterion,
                    trials: config.trials,
                    exists_count,
                    unknown_count,
                    seed: config.seed,
                });
            }
        }
    }
    records
}

pub fn csv_header() -> &'static str {
    "phi,m,n,criterion,trials,exists_count,unknown_count,fraction,seed"
}

pub fn csv_string(records: &[SweepRecord]) -> String {
    let mut out = String::from(csv_header());
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6},{}\n",
            r.phi,
            r.m,
            r.n,
            r.criterion.label(),
            r.trials,
            r.exists_count,
            r.unknown_count,
            r.fraction(),
            r.seed
        ));
    }
    out
}

pub fn write_csv(records: &[SweepRecord], path: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(path, csv_string(records))
}

/// Parses the CSV produced by [`csv_string`] back into records (the
/// `fraction` column is redundant and ignored).
pub fn parse_csv(text: &str) -> Result<Vec<SweepRecord>, ExperimentError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if i == 0 {
            if line.trim() != csv_header() {
                return Err(ExperimentError::BadCsv {
                    line: lineno,
                    msg: "unexpected header".into(),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| ExperimentError::BadCsv {
            line: lineno,
            msg: msg.into(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(err("expected 9 fields"));
        }
        records.push(SweepRecord {
            phi: fields[0].parse().map_err(|_| err("bad phi"))?,
            m: fields[1].parse().map_err(|_| err("bad m"))?,
            n: fields[2].parse().map_err(|_| err("bad n"))?,
            criterion: SweepCriterion::parse(fields[3]).ok_or_else(|| err("bad criterion"))?,
            trials: fields[4].parse().map_err(|_| err("bad trials"))?,
            exists_count: fields[5].parse().map_err(|_| err("bad exists_count"))?,
            unknown_count: fields[6].parse().map_err(|_| err("bad unknown_count"))?,
            seed: fields[8].parse().map_err(|_| err("bad seed"))?,
        });
    }
    Ok(records)
}

/// Reshapes sweep records into per-(φ, criterion) series files, each listing
/// `m,fraction,unknown_fraction` rows for plotting.
pub fn plot_series(records: &[SweepRecord]) -> Vec<(String, String)> {
    let mut keys: Vec<(u64, SweepCriterion)> = Vec::new();
    for r in records {
        let key = (r.phi.to_bits(), r.criterion);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.iter()
        .map(|&(phi_bits, criterion)| {
            let phi = f64::from_bits(phi_bits);
            let mut body = String::from("m,fraction,unknown_fraction\n");
            for r in records {
                if r.phi.to_bits() == phi_bits && r.criterion == criterion {
                    body.push_str(&format!(
                        "{},{:.6},{:.6}\n",
                        r.m,
                        r.fraction(),
                        r.unknown_count as f64 / r.trials as f64
                    ));
                }
            }
            (format!("series_phi{}_{}.csv", phi, criterion.label()), body)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kendall_tau_examples() {
        let id = Ranking::identity(4);
        assert_eq!(kendall_tau(&id, &id).unwrap(), 0);
        let rev = Ranking::new(vec![3, 2, 1, 0]).unwrap();
        assert_eq!(kendall_tau(&id, &rev).unwrap(), 6);
        let swap = Ranking::new(vec![1, 0, 2]).unwrap();
        assert_eq!(kendall_tau(&Ranking::identity(3), &swap).unwrap(), 1);
        assert!(kendall_tau(&id, &Ranking::identity(3)).is_err());
    }

    #[test]
    fn pmf_examples() {
        let uniform = MallowsParams::new(Ranking::identity(3), 1.0).unwrap();
        for perm in permutations(3) {
            let r = Ranking::new(perm).unwrap();
            let p = mallows_pmf(&uniform, &r).unwrap();
            assert!((p - 1.0 / 6.0).abs() < 1e-12);
        }
        let point = MallowsParams::new(Ranking::identity(3), 0.0).unwrap();
        assert!((mallows_pmf(&point, &Ranking::identity(3)).unwrap() - 1.0).abs() < 1e-12);

        // distance census over the 6 rankings of 3 goods: 1+2φ+2φ²+φ³
        let half = MallowsParams::new(Ranking::identity(3), 0.5).unwrap();
        let z = 1.0 + 2.0 * 0.5 + 2.0 * 0.25 + 0.125;
        assert!((mallows_pmf(&half, &Ranking::identity(3)).unwrap() - 1.0 / z).abs() < 1e-12);
    }

    #[test]
    fn zero_dispersion_reproduces_the_reference() {
        let params = MallowsParams::new(Ranking::identity(5), 0.0).unwrap();
        let mut rng = trial_rng(0, 0.0, 5, 0);
        for _ in 0..20 {
            assert_eq!(mallows_sample(&params, &mut rng), Ranking::identity(5));
        }
    }

    #[test]
    fn closed_form_examples() {
        assert!((ef_rm_closed_form(5, 100) - 0.90345024).abs() < 1e-8);
        assert!((ef_rm_closed_form(2, 2) - 0.5).abs() < 1e-12);
        assert!((ef_rm_closed_form(5, 5) - 0.0384).abs() < 1e-12);
        assert_eq!(ef_rm_closed_form(5, 4), 0.0);
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let config = SweepConfig {
            n: 3,
            m_values: vec![3, 4],
            phis: vec![0.0, 1.0],
            trials: 30,
            criteria: vec![
                SweepCriterion::Ef,
                SweepCriterion::Efx,
                SweepCriterion::Ef1,
                SweepCriterion::Mms,
            ],
            seed: 42,
            budget: SolveBudget::default(),
        };
        let a = run_sweep(&config);
        let b = run_sweep(&config);
        assert_eq!(csv_string(&a), csv_string(&b));

        for r in &a {
            assert_eq!(r.unknown_count, 0);
            if r.phi == 0.0 {
                match r.criterion {
                    SweepCriterion::Ef => assert_eq!(r.exists_count, 0),
                    _ => assert_eq!(r.exists_count, r.trials),
                }
            }
        }
        // pointwise implication chain aggregates into ordered fractions
        for &phi in &config.phis {
            for &m in &config.m_values {
                let get = |c: SweepCriterion| {
                    a.iter()
                        .find(|r| r.phi == phi && r.m == m && r.criterion == c)
                        .unwrap()
                        .exists_count
                };
                assert!(get(SweepCriterion::Ef) <= get(SweepCriterion::Efx));
                assert!(get(SweepCriterion::Efx) <= get(SweepCriterion::Ef1));
                assert!(get(SweepCriterion::Efx) <= get(SweepCriterion::Mms));
            }
        }
    }

    #[test]
    fn sweep_matches_serial_recomputation() {
        let config = SweepConfig {
            n: 2,
            m_values: vec![3],
            phis: vec![0.5],
            trials: 25,
            criteria: vec![SweepCriterion::Ef],
            seed: 7,
            budget: SolveBudget::default(),
        };
        let records = run_sweep(&config);
        let mut count = 0;
        for trial in 0..config.trials {
            let mut rng = trial_rng(7, 0.5, 3, trial);
            let inst = sample_instance(2, 3, 0.5, &mut rng);
            if crate::existence::exists_ef_rm(&inst).is_some() {
                count += 1;
            }
        }
        assert_eq!(records[0].exists_count, count);
    }

    #[test]
    fn csv_round_trips_through_parse() {
        let config = SweepConfig {
            n: 2,
            m_values: vec![2, 3],
            phis: vec![0.0, 0.5],
            trials: 10,
            criteria: vec![SweepCriterion::Ef, SweepCriterion::Mms],
            seed: 3,
            budget: SolveBudget::default(),
        };
        let records = run_sweep(&config);
        let parsed = parse_csv(&csv_string(&records)).unwrap();
        assert_eq!(records, parsed);
    }

    #[test]
    fn plot_series_reshapes_by_phi_and_criterion() {
        let records = vec![
            SweepRecord {
                phi: 0.5,
                m: 3,
                n: 2,
                criterion: SweepCriterion::Ef,
                trials: 10,
                exists_count: 5,
                unknown_count: 0,
                seed: 0,
            },
            SweepRecord {
                phi: 0.5,
                m: 4,
                n: 2,
                criterion: SweepCriterion::Ef,
                trials: 10,
                exists_count: 7,
                unknown_count: 0,
                seed: 0,
            },
        ];
        let series = plot_series(&records);
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].0, "series_phi0.5_ef.csv");
        assert!(series[0].1.contains("3,0.500000"));
        assert!(series[0].1.contains("4,0.700000"));
    }
}
