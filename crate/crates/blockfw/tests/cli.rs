use std::path::Path;
use std::process::{Command, Output};

use blockfw::instance::load_instance;

fn blockfw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockfw")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = blockfw(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn gen_writes_a_loadable_instance() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.mstqp");
    let b = dir.path().join("b.mstqp");
    ok(&["gen", "--l", "10", "--m", "4", "--seed", "1", "--out", p(&a)]);
    ok(&["gen", "--l", "10", "--m", "4", "--seed", "1", "--out", p(&b)]);
    assert_eq!(load_instance(&a).unwrap().dim(), 40);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn gen_rejects_a_block_without_a_clique_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = blockfw(&["gen", "--l", "2", "--m", "1", "--out", p(&dir.path().join("x"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("clique"), "{err}");
}

#[test]
fn solve_respects_the_gradient_budget() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.mstqp");
    ok(&["gen", "--l", "10", "--m", "4", "--seed", "2", "--out", p(&inst)]);
    for alg in ["bcfw", "bcafw-ssc", "pafw-ssc", "gsafw-ssc", "pfw-ssc", "fdfw-ssc"] {
        let traj = dir.path().join(format!("{alg}.csv"));
        ok(&["solve", "--instance", p(&inst), "--algorithm", alg, "--budget-grads", "100", "--tol", "0", "--out", p(&traj)]);
        let rows = csv_rows(&traj);
        let last: u64 = rows.last().unwrap()[2].parse().unwrap();
        assert!(last <= 100, "{alg}: {last}");
    }
}

#[test]
fn solve_writes_trace_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.mstqp");
    let (traj, trace, diag) = (dir.path().join("t.csv"), dir.path().join("s.csv"), dir.path().join("d.csv"));
    ok(&["gen", "--l", "8", "--m", "3", "--seed", "4", "--out", p(&inst)]);
    ok(&[
        "solve", "--instance", p(&inst), "--start", "barycenter", "--ssc-trace", p(&trace), "--diagnostics", p(&diag),
        "--run-id", "r1", "--out", p(&traj),
    ]);
    let t = std::fs::read_to_string(&traj).unwrap();
    assert!(t.starts_with("run_id,k,grad_evals,block_updates,f,max_gap,l0_norm,elapsed_ms\n"));
    assert!(t.lines().skip(1).all(|l| l.starts_with("r1,")));
    assert!(std::fs::read_to_string(&trace).unwrap().starts_with("run_id,k,block,j,kind,alpha,beta,alpha_max,unit_slope\n"));
    let d = csv_rows(&diag);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0][0], "r1");
}

#[test]
fn iteration_cap_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.mstqp");
    ok(&["gen", "--l", "10", "--m", "4", "--seed", "2", "--out", p(&inst)]);
    let out = blockfw(&["solve", "--instance", p(&inst), "--max-iter", "2", "--tol", "0", "--out", p(&dir.path().join("t.csv"))]);
    assert_eq!(out.status.code(), Some(blockfw::cli::EXIT_MAX_ITER));
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let out = blockfw(&["solve", "--instance", "nowhere", "--algorithm", "fw", "--out", "nowhere.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_lists_the_algorithm_table_and_defaults() {
    let help = String::from_utf8(ok(&["solve", "--help"]).stdout).unwrap();
    assert!(help.contains("bcfw       RANDOM           FW    off"));
    assert!(help.contains("[default: pafw-ssc]"));
    let mbh = String::from_utf8(ok(&["mbh", "--help"]).stdout).unwrap();
    assert!(mbh.contains("[default: 0.25]") && mbh.contains("[default: 9]"));
    let ms = String::from_utf8(ok(&["multistart", "--help"]).stdout).unwrap();
    assert!(ms.contains("[default: 4]") && ms.contains("[default: 5]"));
}

#[test]
fn replay_reproduces_a_campaign_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let (first, again) = (dir.path().join("first"), dir.path().join("again"));
    ok(&["multistart", "--l", "6", "--m", "3", "--objectives", "2", "--starts", "2", "--master-seed", "8", "--out-dir", p(&first)]);
    ok(&["replay", "--manifest", p(&first.join("manifest.txt")), "--jobs", "2", "--out-dir", p(&again)]);
    for f in ["aggregate.csv", "trajectories.csv", "diagnostics.csv", "manifest.txt"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }

    let (mbh, mbh_again) = (dir.path().join("mbh"), dir.path().join("mbh_again"));
    ok(&["mbh", "--l", "6", "--m", "2", "--objectives", "1", "--runs", "2", "--algorithms", "bcafw-ssc", "--out-dir", p(&mbh)]);
    ok(&["replay", "--manifest", p(&mbh.join("manifest.txt")), "--out-dir", p(&mbh_again)]);
    for f in ["aggregate.csv", "incumbents.csv", "manifest.txt"] {
        assert_eq!(std::fs::read(mbh.join(f)).unwrap(), std::fs::read(mbh_again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn single_seed_campaign_has_zero_spread() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["multistart", "--l", "6", "--m", "3", "--objectives", "1", "--starts", "1", "--out-dir", p(dir.path())]);
    let rows = csv_rows(&dir.path().join("aggregate.csv"));
    assert!(!rows.is_empty());
    for r in rows {
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn report_renders_long_format() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["multistart", "--l", "6", "--m", "3", "--objectives", "1", "--starts", "2", "--algorithms", "bcfw", "--out-dir", p(dir.path())]);
    let long = dir.path().join("long.csv");
    ok(&["report", "--input", p(&dir.path().join("aggregate.csv")), "--out", p(&long)]);
    let text = std::fs::read_to_string(&long).unwrap();
    assert!(text.starts_with("algorithm_id,axis_tick,metric,mean,std\n"));
    let wide = csv_rows(&dir.path().join("aggregate.csv")).len();
    assert_eq!(text.lines().count() - 1, 2 * wide);
}
