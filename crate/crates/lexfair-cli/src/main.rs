//! Command-line front end for the lexfair toolkit.
//!
//! Exit codes are the machine contract: 0 = success / property holds /
//! allocation found, 1 = property fails / none exists / violation found,
//! 2 = usage or input error, 3 = budget exceeded (verdict unknown).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lexfair::axioms::{
    self, check_group_strategyproof, check_neutral, check_non_bossy, check_profilewise,
    check_strategyproof, AuditBudget, AxiomReport, Mechanism, ProfileProperty, Violation,
};
use lexfair::efficiency::{
    allocation_signature, greedy_rank_maximal, greedy_rank_maximal_tiebreak, is_pareto_optimal,
    is_rank_maximal, rm_signature,
};
use lexfair::existence::{
    brute_force, exists_ef1_rm_three, exists_ef_rm, exists_mms_rm, solve_fair_rm,
    FairnessCriterion, SolveBudget, SolveOutcome,
};
use lexfair::experiments::{self, plot_series, run_sweep, SweepConfig, SweepCriterion};
use lexfair::fairness::{is_ef, is_ef_k, is_efx, is_mms, FairnessVerdict};
use lexfair::mechanisms::{
    efx_po_mechanism, last_agent_mechanism, run_picking_sequence, serial_dictatorship_quota,
    serial_dictatorship_round, unenvied_agents, Quotas, TauPolicy,
};
use lexfair::model::{
    parse_allocation, parse_instance, serialize_allocation, serialize_instance, Allocation,
    Instance, PickingSequence,
};
use lexfair::reductions::{
    decode_pit, decode_sat, encode_sat_assignment, pit_brute_force, random_223sat_seeded,
    reduce_pit, reduce_sat, sat_all_satisfying, sat_brute_force, Lit, Sat223Instance,
    TripartiteGraph,
};

const EXIT_OK: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(
    name = "lexfair",
    version,
    about = "Fair division under lexicographic preferences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every fairness and efficiency checker on an instance/allocation pair
    Check(CheckArgs),
    /// Run a built-in mechanism on an instance
    Solve(SolveArgs),
    /// Decide whether a fairness + rank-maximality combination is achievable
    Exists(ExistsArgs),
    /// Replay a picking sequence
    Mech(MechArgs),
    /// Audit a mechanism for axioms over a full small profile domain
    Axioms(AxiomsArgs),
    /// Build and verify hardness-reduction instances
    #[command(subcommand)]
    Reduce(ReduceCmd),
    /// Mallows-model existence-frequency sweeps
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Brute-force oracle over all complete allocations
    Oracle(OracleArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Instance document
    instance: PathBuf,
    /// Allocation document
    allocation: PathBuf,
    /// Also check EFk for this k
    #[arg(long)]
    k: Option<usize>,
    /// Exit nonzero unless this property holds: ef|efx|ef1|efk|mms|rm|po
    #[arg(long)]
    require: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    /// Mechanism: alg1 | alg2 | sdq | rm
    #[arg(long)]
    mech: String,
    /// Agent ordering as a 1-indexed comma list, e.g. 1,3,2 (default identity)
    #[arg(long)]
    sigma: Option<String>,
    /// Leftover policy for alg1: last | rr | explicit:<1-indexed list>
    #[arg(long, default_value = "last")]
    tau: String,
    /// Quotas for sdq as a comma list summing to m
    #[arg(long)]
    quotas: Option<String>,
    /// Tie-break agent order for rm (1-indexed comma list)
    #[arg(long)]
    tie_break: Option<String>,
    /// Instance document
    instance: PathBuf,
}

#[derive(Args)]
struct ExistsArgs {
    /// Criterion: ef | efx | ef1 | efk:<k> | mms
    #[arg(long)]
    criterion: String,
    /// Method: poly | search | brute
    #[arg(long, default_value = "search")]
    method: String,
    /// Node budget for the exact search
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Instance document
    instance: PathBuf,
}

#[derive(Args)]
struct MechArgs {
    /// Picking sequence as a 1-indexed comma list, e.g. 1,3,3
    #[arg(long)]
    sequence: String,
    /// Instance document
    instance: PathBuf,
}

#[derive(Args)]
struct AxiomsArgs {
    /// Mechanism: alg2 | sdq | rm | empty | fixture:<name>
    #[arg(long)]
    mechanism: String,
    /// Number of agents in the audited domain
    #[arg(long)]
    n: usize,
    /// Number of goods in the audited domain
    #[arg(long)]
    m: usize,
    /// Axiom: sp | gsp | nonbossy | neutral | efx | mms | po | all
    #[arg(long, default_value = "all")]
    axiom: String,
    /// Agent ordering for alg2/sdq (1-indexed comma list, default identity)
    #[arg(long)]
    sigma: Option<String>,
    /// Quotas for sdq
    #[arg(long)]
    quotas: Option<String>,
    /// Largest coalition size for gsp
    #[arg(long, default_value_t = 2)]
    max_coalition: usize,
    /// Cap on profile-domain size
    #[arg(long, default_value_t = 1_000_000)]
    max_profiles: u64,
    /// Cap on mechanism evaluations
    #[arg(long, default_value_t = 200_000_000)]
    max_evals: u64,
}

#[derive(Subcommand)]
enum ReduceCmd {
    /// Reduce a (2/2/3)-SAT formula (DIMACS-like file) to a fair-division instance
    Sat {
        /// Formula file: `p cnf <vars> <clauses>` then one clause per line
        file: PathBuf,
    },
    /// Reduce a balanced tripartite graph to a fair-division instance
    Pit {
        /// Graph file: `parts <q>` then `edge <u> <v>` lines (w1.., x1.., y1..)
        file: PathBuf,
        /// Envy bound k of the target EFk + rank-maximality question
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Run the reduction round-trip and equivalence suite
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random formulas checked per variable count
        #[arg(long, default_value_t = 5)]
        count: usize,
        /// Node budget for the exact searches
        #[arg(long, default_value_t = 5_000_000)]
        budget: u64,
    },
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Sample profiles and record how often each criterion + RM is achievable
    Run(ExperimentRunArgs),
    /// Reshape a sweep CSV into per-(phi, criterion) series files
    Plotdata {
        /// CSV produced by `experiment run`
        csv: PathBuf,
        /// Output directory for the series files
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentRunArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m_min: usize,
    #[arg(long)]
    m_max: usize,
    #[arg(long, default_value_t = 1)]
    m_step: usize,
    /// Comma list of dispersion values in [0, 1]
    #[arg(long, default_value = "0,0.25,0.5,0.75,1")]
    phi: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Comma list of criteria: ef, efx, ef1, mms, rm_small_bundle
    #[arg(long, default_value = "ef,efx,ef1,mms")]
    criteria: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Node budget per exact-search trial
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Worker threads (default: all cores); results do not depend on this
    #[arg(long)]
    jobs: Option<usize>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Criterion: ef | efx | ef1 | efk:<k> | mms
    #[arg(long)]
    criterion: String,
    /// Also require rank-maximality
    #[arg(long)]
    require_rm: bool,
    /// Also require Pareto optimality
    #[arg(long)]
    require_po: bool,
    /// Instance document
    instance: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Exists(args) => cmd_exists(args),
        Command::Mech(args) => cmd_mech(args),
        Command::Axioms(args) => cmd_axioms(args),
        Command::Reduce(cmd) => cmd_reduce(cmd),
        Command::Experiment(cmd) => cmd_experiment(cmd),
        Command::Oracle(args) => cmd_oracle(args),
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("cannot parse {}", path.display()))
}

/// Parses a 1-indexed comma list of agent ids.
fn parse_agents(text: &str, n: usize) -> Result<Vec<usize>> {
    text.split(',')
        .map(|tok| {
            let v: usize = tok
                .trim()
                .parse()
                .with_context(|| format!("bad agent id '{tok}'"))?;
            if v == 0 || v > n {
                bail!("agent id {v} out of range 1..{n}");
            }
            Ok(v - 1)
        })
        .collect()
}

fn parse_usizes(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .with_context(|| format!("bad number '{tok}'"))
        })
        .collect()
}

fn parse_criterion(text: &str) -> Result<FairnessCriterion> {
    match text {
        "ef" => Ok(FairnessCriterion::Ef),
        "efx" => Ok(FairnessCriterion::Efx),
        "ef1" => Ok(FairnessCriterion::Ef1),
        "mms" => Ok(FairnessCriterion::Mms),
        other => {
            if let Some(k) = other.strip_prefix("efk:") {
                let k: usize = k.parse().context("bad k in efk:<k>")?;
                if k == 0 {
                    bail!("efk requires k >= 1");
                }
                Ok(FairnessCriterion::EfK(k))
            } else {
                bail!("unknown criterion '{other}' (expected ef|efx|ef1|efk:<k>|mms)")
            }
        }
    }
}

fn witness_text(inst: &Instance, v: &FairnessVerdict) -> String {
    match &v.witness {
        None => String::new(),
        Some(w) => {
            let goods: Vec<&str> = w.goods.iter().map(|g| inst.label(g)).collect();
            if w.envier == w.envied {
                format!(
                    "  (agent {} below threshold [{}])",
                    w.envier + 1,
                    goods.join(" ")
                )
            } else if goods.is_empty() {
                format!("  (agent {} envies agent {})", w.envier + 1, w.envied + 1)
            } else {
                format!(
                    "  (agent {} envies agent {} despite removing [{}])",
                    w.envier + 1,
                    w.envied + 1,
                    goods.join(" ")
                )
            }
        }
    }
}

fn cmd_check(args: CheckArgs) -> Result<u8> {
    let inst = load_instance(&args.instance)?;
    let text = std::fs::read_to_string(&args.allocation)
        .with_context(|| format!("cannot read {}", args.allocation.display()))?;
    let alloc = parse_allocation(&inst, &text)
        .with_context(|| format!("cannot parse {}", args.allocation.display()))?;
    let complete = alloc.is_complete();

    println!("agents: {}", inst.n());
    println!("goods: {}", inst.m());
    println!(
        "allocation: {}",
        if complete { "complete" } else { "partial" }
    );

    let ef = is_ef(&inst, &alloc);
    println!("ef: {}{}", ef.holds, witness_text(&inst, &ef));
    let efx = is_efx(&inst, &alloc);
    println!("efx: {}{}", efx.holds, witness_text(&inst, &efx));
    let ef1 = is_ef_k(&inst, &alloc, 1);
    println!("ef1: {}{}", ef1.holds, witness_text(&inst, &ef1));
    let efk = args.k.map(|k| {
        let v = is_ef_k(&inst, &alloc, k);
        println!("ef{k}: {}{}", v.holds, witness_text(&inst, &v));
        v
    });
    let mms = if complete {
        let v = is_mms(&inst, &alloc);
        println!("mms: {}{}", v.holds, witness_text(&inst, &v));
        Some(v)
    } else {
        println!("mms: n/a (partial allocation)");
        None
    };
    let rm = if complete {
        let v = is_rank_maximal(&inst, &alloc);
        println!("rm: {v}");
        Some(v)
    } else {
        println!("rm: n/a (partial allocation)");
        None
    };
    let po = is_pareto_optimal(&inst, &alloc);
    println!("po: {po}");
    println!("signature: {}", allocation_signature(&inst, &alloc));
    println!("rm-signature: {}", rm_signature(&inst));

    let code = match args.require.as_deref() {
        None => EXIT_OK,
        Some(req) => {
            let ok = match req {
                "ef" => ef.holds,
                "efx" => efx.holds,
                "ef1" => ef1.holds,
                "efk" => {
                    efk.as_ref()
                        .ok_or_else(|| anyhow!("--require efk needs --k"))?
                        .holds
                }
                "mms" => mms.as_ref().is_some_and(|v| v.holds),
                "rm" => rm.unwrap_or(false),
                "po" => po,
                other => bail!("unknown requirement '{other}'"),
            };
            if ok {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
    };
    Ok(code)
}

fn cmd_solve(args: SolveArgs) -> Result<u8> {
    let inst = load_instance(&args.instance)?;
    let n = inst.n();
    let sigma = match &args.sigma {
        Some(s) => parse_agents(s, n)?,
        None => (0..n).collect(),
    };
    let alloc = match args.mech.as_str() {
        "alg1" => {
            let (phase1, remaining) = serial_dictatorship_round(&inst, &sigma)?;
            let unenvied = unenvied_agents(&inst, &phase1);
            let tau = match args.tau.as_str() {
                "last" => TauPolicy::AllToOne(*sigma.last().expect("n >= 1")),
                "rr" => TauPolicy::RoundRobin(unenvied.clone()),
                other => {
                    let list = other
                        .strip_prefix("explicit:")
                        .ok_or_else(|| anyhow!("bad --tau '{other}' (last|rr|explicit:<list>)"))?;
                    TauPolicy::Explicit(parse_agents(list, n)?)
                }
            };
            let _ = remaining;
            efx_po_mechanism(&inst, &sigma, &tau)?
        }
        "alg2" => last_agent_mechanism(&inst, &sigma)?,
        "sdq" => {
            let quotas = parse_usizes(
                args.quotas
                    .as_deref()
                    .ok_or_else(|| anyhow!("sdq needs --quotas"))?,
            )?;
            serial_dictatorship_quota(&inst, &sigma, &Quotas(quotas))?
        }
        "rm" => match &args.tie_break {
            Some(t) => greedy_rank_maximal_tiebreak(&inst, &parse_agents(t, n)?),
            None => greedy_rank_maximal(&inst),
        },
        other => bail!("unknown mechanism '{other}' (expected alg1|alg2|sdq|rm)"),
    };
    print!("{}", serialize_allocation(&inst, &alloc));
    Ok(EXIT_OK)
}

fn cmd_exists(args: ExistsArgs) -> Result<u8> {
    let inst = load_instance(&args.instance)?;
    let crit = parse_criterion(&args.criterion)?;
    let budget = SolveBudget {
        max_nodes: args.budget,
    };
    let outcome = match args.method.as_str() {
        "search" => solve_fair_rm(&inst, crit, &budget),
        "brute" => brute_force(&inst, crit, true, false),
        "poly" => {
            match crit {
                FairnessCriterion::Ef => match exists_ef_rm(&inst) {
                    Some(a) => SolveOutcome::Found(a),
                    None => SolveOutcome::NoneExists,
                },
                FairnessCriterion::Mms => match exists_mms_rm(&inst)? {
                    Some(a) => SolveOutcome::Found(a),
                    None => SolveOutcome::NoneExists,
                },
                FairnessCriterion::Ef1 => {
                    if inst.n() != 3 {
                        bail!("the polynomial EF1 algorithm needs exactly 3 agents; use --method search");
                    }
                    exists_ef1_rm_three(&inst, &budget)?
                }
                _ => bail!("no polynomial algorithm for this criterion; use --method search"),
            }
        }
        other => bail!("unknown method '{other}' (expected poly|search|brute)"),
    };
    match outcome {
        SolveOutcome::Found(a) => {
            println!("found");
            print!("{}", serialize_allocation(&inst, &a));
            Ok(EXIT_OK)
        }
        SolveOutcome::NoneExists => {
            println!("none");
            Ok(EXIT_FAIL)
        }
        SolveOutcome::Unknown => {
            println!("unknown (budget exceeded)");
            Ok(EXIT_BUDGET)
        }
    }
}

fn cmd_mech(args: MechArgs) -> Result<u8> {
    let inst = load_instance(&args.instance)?;
    let seq = parse_agents(&args.sequence, inst.n())?;
    if seq.len() > inst.m() {
        bail!("sequence length {} exceeds {} goods", seq.len(), inst.m());
    }
    let alloc = run_picking_sequence(&inst, &PickingSequence(seq))?;
    print!("{}", serialize_allocation(&inst, &alloc));
    Ok(EXIT_OK)
}

fn describe_violation(v: &Violation) {
    match v {
        Violation::Misreport {
            profile,
            agent,
            misreport,
            truthful,
            deviated,
        } => {
            println!("violation: agent {} misreports", agent + 1);
            print!("{}", serialize_instance(profile));
            let row: Vec<&str> = misreport
                .order()
                .iter()
                .map(|&g| profile.label(g))
                .collect();
            println!("misreport {}: {}", agent + 1, row.join(" > "));
            println!("# truthful outcome");
            print!("{}", serialize_allocation(profile, truthful));
            println!("# deviated outcome");
            print!("{}", serialize_allocation(profile, deviated));
        }
        Violation::Coalition {
            profile,
            agents,
            misreports,
            truthful,
            deviated,
        } => {
            let ids: Vec<String> = agents.iter().map(|a| (a + 1).to_string()).collect();
            println!("violation: coalition {{{}}} misreports", ids.join(","));
            print!("{}", serialize_instance(profile));
            for (a, r) in agents.iter().zip(misreports) {
                let row: Vec<&str> = r.order().iter().map(|&g| profile.label(g)).collect();
                println!("misreport {}: {}", a + 1, row.join(" > "));
            }
            println!("# truthful outcome");
            print!("{}", serialize_allocation(profile, truthful));
            println!("# deviated outcome");
            print!("{}", serialize_allocation(profile, deviated));
        }
        Violation::Relabeling {
            profile,
            relabeling,
            direct,
            on_relabeled_profile,
        } => {
            println!("violation: mechanism does not commute with a relabeling");
            print!("{}", serialize_instance(profile));
            let map: Vec<String> = relabeling
                .iter()
                .enumerate()
                .map(|(g, &to)| format!("{}->{}", profile.label(g), profile.label(to)))
                .collect();
            println!("relabeling: {}", map.join(" "));
            println!("# output on the original profile");
            print!("{}", serialize_allocation(profile, direct));
            println!("# output on the relabeled profile");
            print!("{}", serialize_allocation(profile, on_relabeled_profile));
        }
        Violation::Profile {
            profile,
            allocation,
        } => {
            println!("violation: output fails the property on this profile");
            print!("{}", serialize_instance(profile));
            print!("{}", serialize_allocation(profile, allocation));
        }
    }
}

fn cmd_axioms(args: AxiomsArgs) -> Result<u8> {
    let n = args.n;
    let sigma = match &args.sigma {
        Some(s) => parse_agents(s, n)?,
        None => (0..n).collect(),
    };
    let mechanism: Box<dyn Mechanism> = match args.mechanism.as_str() {
        "alg2" => {
            let sigma = sigma.clone();
            Box::new(move |inst: &Instance| {
                last_agent_mechanism(inst, &sigma).expect("valid sigma")
            })
        }
        "sdq" => {
            let quotas = Quotas(parse_usizes(
                args.quotas
                    .as_deref()
                    .ok_or_else(|| anyhow!("sdq needs --quotas"))?,
            )?);
            let sigma = sigma.clone();
            Box::new(move |inst: &Instance| {
                serial_dictatorship_quota(inst, &sigma, &quotas).expect("valid parameters")
            })
        }
        "rm" => Box::new(|inst: &Instance| greedy_rank_maximal(inst)),
        "empty" => Box::new(|inst: &Instance| Allocation::empty(inst.n(), inst.m())),
        other => {
            let name = other
                .strip_prefix("fixture:")
                .ok_or_else(|| anyhow!("unknown mechanism '{other}'"))?;
            let mut fixtures = axioms::fixtures::minimality_fixtures();
            fixtures.push(axioms::fixtures::mms_discard_fixture());
            let fx = fixtures
                .into_iter()
                .find(|f| f.name == name)
                .ok_or_else(|| anyhow!("unknown fixture '{name}'"))?;
            if fx.n != args.n || fx.m != args.m {
                bail!("fixture '{}' is defined for n={} m={}", name, fx.n, fx.m);
            }
            fx.mechanism
        }
    };

    let budget = AuditBudget {
        max_profiles: args.max_profiles,
        max_evaluations: args.max_evals,
    };
    let axiom_names: Vec<&str> = if args.axiom == "all" {
        vec!["sp", "gsp", "nonbossy", "neutral", "efx", "mms", "po"]
    } else {
        args.axiom.split(',').map(|s| s.trim()).collect()
    };

    let mut any_violation = false;
    for name in axiom_names {
        let report: AxiomReport = match name {
            "sp" => check_strategyproof(&*mechanism, args.n, args.m, &budget),
            "gsp" => {
                check_group_strategyproof(&*mechanism, args.n, args.m, args.max_coalition, &budget)
            }
            "nonbossy" => check_non_bossy(&*mechanism, args.n, args.m, &budget),
            "neutral" => check_neutral(&*mechanism, args.n, args.m, &budget),
            "efx" => check_profilewise(&*mechanism, args.n, args.m, ProfileProperty::Efx, &budget),
            "mms" => check_profilewise(&*mechanism, args.n, args.m, ProfileProperty::Mms, &budget),
            "po" => check_profilewise(
                &*mechanism,
                args.n,
                args.m,
                ProfileProperty::ParetoOptimal,
                &budget,
            ),
            other => bail!("unknown axiom '{other}'"),
        }
        .map_err(|e| {
            eprintln!("error: {e}");
            std::process::exit(EXIT_BUDGET as i32);
        })
        .expect("budget errors exit above");
        println!(
            "{}: {} ({} profiles)",
            report.axiom.label(),
            if report.holds { "holds" } else { "violated" },
            report.profiles
        );
        if let Some(v) = &report.counterexample {
            describe_violation(v);
            any_violation = true;
        }
    }
    Ok(if any_violation { EXIT_FAIL } else { EXIT_OK })
}

fn parse_dimacs(text: &str) -> Result<Sat223Instance> {
    let mut num_vars = None;
    let mut expected_clauses = None;
    let mut clauses: Vec<[Lit; 3]> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p cnf") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 2 {
                bail!("line {}: expected 'p cnf <vars> <clauses>'", i + 1);
            }
            num_vars = Some(parts[0].parse::<usize>().context("bad variable count")?);
            expected_clauses = Some(parts[1].parse::<usize>().context("bad clause count")?);
            continue;
        }
        let lits: Vec<i64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<i64>()
                    .with_context(|| format!("line {}: bad literal '{t}'", i + 1))
            })
            .collect::<Result<_>>()?;
        let Some((&0, body)) = lits.split_last() else {
            bail!("line {}: clause must end with 0", i + 1);
        };
        if body.len() != 3 {
            bail!(
                "line {}: expected exactly 3 literals, got {}",
                i + 1,
                body.len()
            );
        }
        let clause: Vec<Lit> = body
            .iter()
            .map(|&l| {
                let var = l.unsigned_abs() as usize;
                if var == 0 {
                    bail!("line {}: literal 0 inside clause", i + 1);
                }
                Ok(Lit {
                    var: var - 1,
                    negated: l < 0,
                })
            })
            .collect::<Result<_>>()?;
        clauses.push([clause[0], clause[1], clause[2]]);
    }
    let num_vars = num_vars.ok_or_else(|| anyhow!("missing 'p cnf' header"))?;
    if let Some(s) = expected_clauses {
        if s != clauses.len() {
            bail!("header promises {s} clauses, found {}", clauses.len());
        }
    }
    Ok(Sat223Instance { num_vars, clauses })
}

fn parse_graph(text: &str) -> Result<TripartiteGraph> {
    let mut q = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("parts") {
            q = Some(rest.trim().parse::<usize>().context("bad part size")?);
        } else if let Some(rest) = line.strip_prefix("edge") {
            let q = q.ok_or_else(|| anyhow!("line {}: 'edge' before 'parts'", i + 1))?;
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 2 {
                bail!("line {}: expected 'edge <u> <v>'", i + 1);
            }
            let u = TripartiteGraph::parse_vertex(q, parts[0])
                .ok_or_else(|| anyhow!("line {}: bad vertex '{}'", i + 1, parts[0]))?;
            let v = TripartiteGraph::parse_vertex(q, parts[1])
                .ok_or_else(|| anyhow!("line {}: bad vertex '{}'", i + 1, parts[1]))?;
            edges.push((u, v));
        } else {
            bail!("line {}: unrecognized line '{line}'", i + 1);
        }
    }
    let q = q.ok_or_else(|| anyhow!("missing 'parts' line"))?;
    Ok(TripartiteGraph::new(q, &edges)?)
}

fn cmd_reduce(cmd: ReduceCmd) -> Result<u8> {
    match cmd {
        ReduceCmd::Sat { file } => {
            let text = std::fs::read_to_string(&file)
                .with_context(|| format!("cannot read {}", file.display()))?;
            let sat = parse_dimacs(&text)?;
            let inst = reduce_sat(&sat)?;
            print!("{}", serialize_instance(&inst));
            Ok(EXIT_OK)
        }
        ReduceCmd::Pit { file, k } => {
            let text = std::fs::read_to_string(&file)
                .with_context(|| format!("cannot read {}", file.display()))?;
            let graph = parse_graph(&text)?;
            let inst = reduce_pit(&graph, k)?;
            print!("{}", serialize_instance(&inst));
            Ok(EXIT_OK)
        }
        ReduceCmd::Verify {
            seed,
            count,
            budget,
        } => cmd_reduce_verify(seed, count, budget),
    }
}

fn cmd_reduce_verify(seed: u64, count: usize, budget: u64) -> Result<u8> {
    let budget = SolveBudget { max_nodes: budget };
    let mut ok = true;
    let mut line = |pass: bool, label: String| {
        println!("[{}] {label}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };

    for r in [3usize, 6] {
        for i in 0..count {
            let sat = random_223sat_seeded(r, seed.wrapping_add(i as u64))?;
            let inst = reduce_sat(&sat)?;
            let satisfiable = sat_brute_force(&sat).is_some();
            let outcome = solve_fair_rm(&inst, FairnessCriterion::Efx, &budget);
            match outcome.exists() {
                Some(exists) => line(
                    exists == satisfiable,
                    format!("sat r={r} #{i}: satisfiable={satisfiable}, efx+rm={exists}"),
                ),
                None => line(false, format!("sat r={r} #{i}: search budget exceeded")),
            }
            let mut round_trips = true;
            for a in sat_all_satisfying(&sat) {
                let alloc = encode_sat_assignment(&sat, &a)?;
                round_trips &= decode_sat(&sat, &alloc)? == a;
            }
            line(
                round_trips,
                format!("sat r={r} #{i}: encode/decode round-trip"),
            );
        }
    }

    let complete = TripartiteGraph::complete(2);
    let isolated = complete.isolate_vertex(0)?;
    for (name, graph) in [("complete", &complete), ("isolated-vertex", &isolated)] {
        let reduced = reduce_pit(graph, 1)?;
        let direct = pit_brute_force(graph).is_some();
        let via = solve_fair_rm(&reduced, FairnessCriterion::Ef1, &budget);
        match via.exists() {
            Some(exists) => line(
                exists == direct,
                format!("pit q=2 {name}: partition={direct}, ef1+rm={exists}"),
            ),
            None => line(false, format!("pit q=2 {name}: search budget exceeded")),
        }
        if let SolveOutcome::Found(alloc) = via {
            let decoded = decode_pit(graph, 1, &alloc).is_ok();
            line(
                decoded,
                format!("pit q=2 {name}: decoded allocation is a triangle partition"),
            );
        }
    }

    Ok(if ok { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_experiment(cmd: ExperimentCmd) -> Result<u8> {
    match cmd {
        ExperimentCmd::Run(args) => {
            if let Some(jobs) = args.jobs {
                // results are independent of the pool size by construction
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build_global();
            }
            if args.m_step == 0 {
                bail!("--m-step must be positive");
            }
            let phis = args
                .phi
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .with_context(|| format!("bad phi '{t}'"))
                })
                .collect::<Result<Vec<f64>>>()?;
            for &phi in &phis {
                if !(0.0..=1.0).contains(&phi) {
                    bail!("phi {phi} outside [0, 1]");
                }
            }
            let criteria = args
                .criteria
                .split(',')
                .map(|t| {
                    SweepCriterion::parse(t.trim())
                        .ok_or_else(|| anyhow!("unknown criterion '{}'", t.trim()))
                })
                .collect::<Result<Vec<_>>>()?;
            let config = SweepConfig {
                n: args.n,
                m_values: (args.m_min..=args.m_max).step_by(args.m_step).collect(),
                phis,
                trials: args.trials,
                criteria,
                seed: args.seed,
                budget: SolveBudget {
                    max_nodes: args.budget,
                },
            };
            let records = run_sweep(&config);
            let csv = experiments::csv_string(&records);
            match args.out {
                Some(path) => std::fs::write(&path, csv)
                    .with_context(|| format!("cannot write {}", path.display()))?,
                None => print!("{csv}"),
            }
            Ok(EXIT_OK)
        }
        ExperimentCmd::Plotdata { csv, out_dir } => {
            let text = std::fs::read_to_string(&csv)
                .with_context(|| format!("cannot read {}", csv.display()))?;
            let records = experiments::parse_csv(&text)?;
            std::fs::create_dir_all(&out_dir)?;
            for (name, body) in plot_series(&records) {
                let path = out_dir.join(&name);
                std::fs::write(&path, body)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                println!("{}", path.display());
            }
            Ok(EXIT_OK)
        }
    }
}

fn cmd_oracle(args: OracleArgs) -> Result<u8> {
    let inst = load_instance(&args.instance)?;
    let crit = parse_criterion(&args.criterion)?;
    match brute_force(&inst, crit, args.require_rm, args.require_po) {
        SolveOutcome::Found(a) => {
            println!("found");
            print!("{}", serialize_allocation(&inst, &a));
            Ok(EXIT_OK)
        }
        SolveOutcome::NoneExists => {
            println!("none");
            Ok(EXIT_FAIL)
        }
        SolveOutcome::Unknown => {
            println!("unknown (budget exceeded)");
            Ok(EXIT_BUDGET)
        }
    }
}
