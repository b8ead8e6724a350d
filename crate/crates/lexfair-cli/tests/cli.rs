//! End-to-end checks of the binary: exit codes, output round-trips, and the
//! documented subcommand surfaces.

use std::path::Path;
use std::process::{Command, Output};

use lexfair::model::{parse_allocation, parse_instance};

const INSTANCE: &str = "\
agents 3
goods g1 g2 g3
pref 1: g1 > g2 > g3
pref 2: g1 > g2 > g3
pref 3: g2 > g3 > g1
";

const RM_ALLOCATION: &str = "\
alloc 1: g1
alloc 2:
alloc 3: g2 g3
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lexfair"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 output")
}

fn write_fixtures(dir: &Path) {
    std::fs::write(dir.join("inst.txt"), INSTANCE).unwrap();
    std::fs::write(dir.join("alloc.txt"), RM_ALLOCATION).unwrap();
}

#[test]
fn check_prints_verdicts_and_honors_require() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());

    let out = run(&["check", "inst.txt", "alloc.txt"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("efx: false"));
    assert!(text.contains("rm: true"));
    assert!(text.contains("po: true"));
    assert!(text.contains("signature: (2,1,0)"));

    let out = run(
        &["check", "inst.txt", "alloc.txt", "--require", "efx"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let out = run(
        &["check", "inst.txt", "alloc.txt", "--require", "rm"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn solve_output_reparses_through_the_model() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let inst = parse_instance(INSTANCE).unwrap();

    for args in [
        vec!["solve", "--mech", "alg2", "--sigma", "1,2,3", "inst.txt"],
        vec![
            "solve", "--mech", "alg1", "--sigma", "2,1,3", "--tau", "rr", "inst.txt",
        ],
        vec![
            "solve", "--mech", "sdq", "--sigma", "1,2,3", "--quotas", "1,1,1", "inst.txt",
        ],
        vec!["solve", "--mech", "rm", "inst.txt"],
    ] {
        let out = run(&args, dir.path());
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let alloc = parse_allocation(&inst, &stdout(&out)).expect("output reparses");
        assert!(alloc.is_complete());
    }
}

#[test]
fn exists_exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());

    let out = run(
        &[
            "exists",
            "--criterion",
            "efx",
            "--method",
            "search",
            "inst.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("none"));

    let out = run(
        &[
            "exists",
            "--criterion",
            "efk:2",
            "--method",
            "search",
            "inst.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("found"));

    let out = run(
        &[
            "exists",
            "--criterion",
            "ef1",
            "--method",
            "poly",
            "inst.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));

    // a starved budget reports unknown, never a definitive answer
    let out = run(
        &[
            "exists",
            "--criterion",
            "efx",
            "--method",
            "search",
            "--budget",
            "1",
            "inst.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));

    // usage errors exit 2
    let out = run(&["exists", "--criterion", "nope", "inst.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = run(
        &[
            "exists",
            "--criterion",
            "efx",
            "--method",
            "poly",
            "inst.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mech_replays_picking_sequences() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let out = run(&["mech", "--sequence", "1,3,3", "inst.txt"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), RM_ALLOCATION);
}

#[test]
fn axioms_reports_violations_with_replayable_counterexamples() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "axioms",
            "--mechanism",
            "alg2",
            "--n",
            "2",
            "--m",
            "3",
            "--axiom",
            "all",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));

    let out = run(
        &[
            "axioms",
            "--mechanism",
            "rm",
            "--n",
            "2",
            "--m",
            "3",
            "--axiom",
            "sp",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("sp: violated"));
    assert!(text.contains("misreport"));

    let out = run(
        &[
            "axioms",
            "--mechanism",
            "fixture:drop-efx",
            "--n",
            "2",
            "--m",
            "3",
            "--axiom",
            "efx,po,sp,nonbossy,neutral",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("efx: violated"));
    assert!(text.contains("po: holds"));
}

#[test]
fn reduce_emits_instances_and_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("formula.cnf"),
        "p cnf 3 4\n1 2 3 0\n1 -2 -3 0\n-1 2 -3 0\n-1 -2 3 0\n",
    )
    .unwrap();
    let out = run(&["reduce", "sat", "formula.cnf"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let inst = parse_instance(&stdout(&out)).expect("reduced instance reparses");
    assert_eq!(inst.n(), 12);
    assert_eq!(inst.m(), 16);

    std::fs::write(
        dir.path().join("graph.txt"),
        "parts 1\nedge w1 x1\nedge x1 y1\nedge w1 y1\n",
    )
    .unwrap();
    let out = run(&["reduce", "pit", "graph.txt", "--k", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(parse_instance(&stdout(&out)).unwrap().m(), 3);

    let out = run(
        &["reduce", "verify", "--seed", "5", "--count", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("[PASS]"));
    assert!(!stdout(&out).contains("[FAIL]"));
}

#[test]
fn experiment_runs_are_reproducible_and_reshape_to_series() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "experiment",
        "run",
        "--n",
        "3",
        "--m-min",
        "3",
        "--m-max",
        "4",
        "--phi",
        "0,1",
        "--trials",
        "15",
        "--criteria",
        "ef,efx,mms",
        "--seed",
        "3",
        "--out",
        "sweep.csv",
    ];
    assert_eq!(run(&args, dir.path()).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(run(&args, dir.path()).status.code(), Some(0));
    let second = std::fs::read(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(first, second, "same seed gives byte-identical CSV");

    let out = run(
        &["experiment", "plotdata", "sweep.csv", "--out-dir", "series"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let listed = stdout(&out);
    assert!(listed.contains("series_phi0_ef.csv"));
    let body =
        std::fs::read_to_string(dir.path().join("series").join("series_phi1_efx.csv")).unwrap();
    assert!(body.starts_with("m,fraction,unknown_fraction"));
}

#[test]
fn oracle_scans_all_allocations() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let out = run(
        &["oracle", "--criterion", "efx", "--require-rm", "inst.txt"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    // without rank-maximality an EFX allocation exists
    let out = run(&["oracle", "--criterion", "efx", "inst.txt"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn version_flag_prints_the_contract_version() {
    let out = bin().arg("--version").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains(env!("CARGO_PKG_VERSION")));
}
