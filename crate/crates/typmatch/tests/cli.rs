//! Black-box tests of the installed binary: exit codes, stream contents,
//! and file formats, exactly as a shell script would see them.

use std::path::Path;
use std::process::{Command, Output};

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_typmatch")
}

fn run(args: &[&str]) -> Output {
    Command::new(exe()).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_reference_dist(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("dist.txt");
    std::fs::write(&path, "2\n0.4 0.1\n0.1 0.4\n").unwrap();
    path
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&["match", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    // No arguments prints help and exits 2 as well.
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_exits_three_and_names_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.txt");
    let out = run(&["mi", "--dist", p(&missing)]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nope.txt"), "stderr was: {stderr}");

    let out = run(&["match", "--pair", p(&tmp.path().join("void"))]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("graph1.txt"), "stderr was: {stderr}");
}

#[test]
fn malformed_distribution_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.txt");
    // Does not sum to one.
    std::fs::write(&bad, "2\n0.4 0.1\n0.1 0.3\n").unwrap();
    let out = run(&["mi", "--dist", p(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    // Negative entry.
    std::fs::write(&bad, "2\n0.5 -0.1\n0.2 0.4\n").unwrap();
    assert_eq!(run(&["mi", "--dist", p(&bad)]).status.code(), Some(3));

    // Wrong row count.
    std::fs::write(&bad, "2\n0.5 0.5\n").unwrap();
    assert_eq!(run(&["mi", "--dist", p(&bad)]).status.code(), Some(3));
}

#[test]
fn mi_prints_bits_or_nats() {
    let tmp = tempfile::tempdir().unwrap();
    let dist = write_reference_dist(tmp.path());
    let out = run(&["mi", "--dist", p(&dist)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "0.278071905113\n");
    let out = run(&["mi", "--dist", p(&dist), "--base", "e"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "0.192744757022\n");
    assert_eq!(run(&["mi", "--dist", p(&dist), "--base", "10"]).status.code(), Some(2));
}

#[test]
fn gen_writes_a_complete_pair_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let dist = write_reference_dist(tmp.path());
    let pair = tmp.path().join("pair");
    let out = run(&["gen", "--n", "8", "--dist", p(&dist), "--seed", "3", "--out", p(&pair)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "mi_bits=0.278071905113\n");
    for name in ["graph1.txt", "graph2_anon.txt", "truth.txt", "dist.txt"] {
        assert!(pair.join(name).exists(), "{name} missing");
    }
    // graph file shape: "n l" header then the upper triangle.
    let g1 = std::fs::read_to_string(pair.join("graph1.txt")).unwrap();
    let mut lines = g1.lines();
    assert_eq!(lines.next().unwrap(), "8 2");
    let triangle: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    assert_eq!(triangle.len(), 28);
    // truth file shape: "n" then a 1-based labeling.
    let truth = std::fs::read_to_string(pair.join("truth.txt")).unwrap();
    let mut lines = truth.lines();
    assert_eq!(lines.next().unwrap(), "8");
    let images: Vec<usize> =
        lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    let mut sorted = images.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (1..=8).collect::<Vec<_>>());
}

#[test]
fn permissive_epsilon_admits_every_labeling() {
    let tmp = tempfile::tempdir().unwrap();
    let dist = write_reference_dist(tmp.path());
    let pair = tmp.path().join("pair");
    run(&["gen", "--n", "5", "--dist", p(&dist), "--seed", "1", "--out", p(&pair)]);
    let out = run(&["match", "--pair", p(&pair), "--epsilon", "1.5", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,l,epsilon,mode,heuristic,outcome,candidate_count,correct_fraction,\
         mismatch_count,max_deviation,automorphism_ties,seed"
    );
    let row = lines.next().unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "5");
    assert_eq!(fields[5], "matched");
    // 5! candidates: with every labeling typical the count is forced.
    assert_eq!(fields[6], "120");
}

#[test]
fn oversized_exhaustive_match_exits_four_but_greedy_works() {
    let tmp = tempfile::tempdir().unwrap();
    let dist = write_reference_dist(tmp.path());
    let pair = tmp.path().join("pair");
    run(&["gen", "--n", "12", "--dist", p(&dist), "--seed", "2", "--out", p(&pair)]);
    let out = run(&["match", "--pair", p(&pair), "--epsilon", "0.2"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
    let out = run(&["match", "--pair", p(&pair), "--epsilon", "0.2", "--mode", "greedy"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains(",greedy,true,"));
}

#[test]
fn tampered_pair_directory_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dist = write_reference_dist(tmp.path());
    let pair = tmp.path().join("pair");
    run(&["gen", "--n", "6", "--dist", p(&dist), "--seed", "4", "--out", p(&pair)]);
    // A truth vector for the wrong vertex count.
    std::fs::write(pair.join("truth.txt"), "5\n2 3 1 5 4\n").unwrap();
    let out = run(&["match", "--pair", p(&pair), "--epsilon", "0.5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("inconsistent"));
}

#[test]
fn permtyp_reports_exact_when_enumerable() {
    let tmp = tempfile::tempdir().unwrap();
    let dist = write_reference_dist(tmp.path());
    let out = run(&[
        "permtyp", "--dist", p(&dist), "--n", "8", "--cycles", "m=0;2,2,2,2",
        "--epsilon", "0.04",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), "n,cycle_type,epsilon,exact,estimate,ci_lo,ci_hi,bound");
    let row = lines.next().unwrap();
    assert!(row.starts_with("8,\"m=0;2,2,2,2\",0.040000000,true,"), "row: {row}");
}

#[test]
fn permtyp_identity_with_huge_epsilon_is_certain_but_unbounded() {
    let tmp = tempfile::tempdir().unwrap();
    let dist = write_reference_dist(tmp.path());
    let out = run(&[
        "permtyp", "--dist", p(&dist), "--n", "6", "--cycles", "m=6;",
        "--epsilon", "1.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let row = stdout.lines().nth(1).unwrap();
    let tail: Vec<&str> = row.rsplit(',').take(5).collect();
    // estimate, ci_lo, ci_hi all exactly 1; the bound is vacuous.
    assert_eq!(tail[3], "1.0000000000e0");
    assert_eq!(tail[2], "1.0000000000e0");
    assert_eq!(tail[1], "1.0000000000e0");
    assert_eq!(tail[0], "1.0000000000e0");
    assert!(String::from_utf8_lossy(&out.stderr).contains("vacuous"));
}

#[test]
fn permtyp_rejects_cycle_spec_that_misses_n() {
    let tmp = tempfile::tempdir().unwrap();
    let dist = write_reference_dist(tmp.path());
    let out = run(&[
        "permtyp", "--dist", p(&dist), "--n", "7", "--cycles", "m=0;2,2,2,2",
        "--epsilon", "0.04",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&[
        "permtyp", "--dist", p(&dist), "--n", "8", "--cycles", "two swaps",
        "--epsilon", "0.04",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn monte_carlo_interval_narrows_with_more_trials() {
    let tmp = tempfile::tempdir().unwrap();
    let dist = write_reference_dist(tmp.path());
    // 4^13 states is past the enumeration guard, so this samples.
    let width = |trials: &str| -> f64 {
        let out = run(&[
            "permtyp", "--dist", p(&dist), "--n", "13", "--cycles", "m=1;2,2,2,2,2,2",
            "--epsilon", "0.08", "--trials", trials, "--seed", "5",
        ]);
        assert_eq!(out.status.code(), Some(0));
        let stdout = String::from_utf8_lossy(&out.stdout);
        let row = stdout.lines().nth(1).unwrap().to_string();
        let tail: Vec<&str> = row.rsplit(',').take(5).collect();
        assert_eq!(tail[4], "false");
        tail[1].parse::<f64>().unwrap() - tail[2].parse::<f64>().unwrap()
    };
    let wide = width("4000");
    let narrow = width("16000");
    let ratio = wide / narrow;
    // Quadrupling the trials should halve the width, within 20%.
    assert!((1.6..=2.4).contains(&ratio), "width ratio {ratio} (wide {wide}, narrow {narrow})");
}

#[test]
fn sweep_runs_a_grid_and_rejects_bad_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("grid.cfg");
    std::fs::write(
        &config,
        "n_list=6\nrho_list=0,1\ntrials=6\nepsilon=0.2\nseed=11\nmode=exhaustive\n",
    )
    .unwrap();
    let csv_path = tmp.path().join("out.csv");
    let out = run(&["sweep", "--config", p(&config), "--out", p(&csv_path)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "wrote 2 cells\n");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "n,rho,mi_bits,epsilon,trials,mean_correct_fraction,std_correct_fraction,\
         mean_candidate_count,empty_sigma_rate,seed"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("6,0.000000,"));
    assert!(lines[2].starts_with("6,1.000000,1.000000000000000,"));

    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "n_list=6\nrho_list=0\ntrials=6\nepsilon=0.2\nseed=1\nmode=exhaustive\nwat=1\n").unwrap();
    let out = run(&["sweep", "--config", p(&bad), "--out", p(&csv_path)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wat"));
}

#[test]
fn near_degenerate_distribution_warns_on_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let dist = tmp.path().join("hot.txt");
    std::fs::write(&dist, "2\n0.4999999999 0.0000000001\n0.0000000001 0.4999999998\n").unwrap();
    let out = run(&["mi", "--dist", p(&dist)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning:"));
}
