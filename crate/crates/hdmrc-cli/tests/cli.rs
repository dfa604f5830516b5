//! End-to-end tests against the compiled binary: exit-code contract
//! (0 success, 1 solver precondition, 2 bad input), diagnostics, and
//! output shapes for every subcommand.

use std::path::{Path, PathBuf};
use std::process::Command;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_hdmrc"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn repo_topology(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../topologies")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, content).unwrap();
    path
}

const TWO_NODE_FAR: &str = "nodes = [[0.0, 0.0], [100.0, 0.0]]\npowers = [10.0]\nnoises = [0.01]\n";

#[test]
fn rate_solves_a_two_node_link() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_file(&dir, "pair.toml", TWO_NODE_FAR);
    let r = run(&["rate", file.to_str().unwrap()]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    // SNR = 10 * 100^-2 / 0.01 = 0.1, so the rate is log2(1.1).
    assert!(r.stdout.contains("df_rate: 0.13750352375"), "{}", r.stdout);
    assert!(r.stdout.contains("bottleneck: 2"), "{}", r.stdout);
    assert!(r.stdout.contains("gap: 0\n"), "{}", r.stdout);
    assert!(r.stdout.contains("RESULT {"), "{}", r.stdout);
}

#[test]
fn schedule_reproduces_the_four_node_reference_values() {
    let r = run(&["schedule", &repo_topology("vi_a_four_node.toml")]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    assert!(r.stdout.contains("method: algorithm2"), "{}", r.stdout);
    assert!(r.stdout.contains("df_rate: 0.298152006607"), "{}", r.stdout);
    assert!(r.stdout.contains("cutset_bound: 0.691558510275"), "{}", r.stdout);
    assert!(r.stdout.contains("bottleneck: 2\n"), "{}", r.stdout);
}

#[test]
fn schedule_methods_agree_where_applicable() {
    let d3 = repo_topology("line_d3_unit.toml");
    let mut values = Vec::new();
    for method in ["algo2", "algo3", "lp"] {
        let r = run(&["schedule", &d3, "--method", method]);
        assert_eq!(r.code, 0, "method {method} stderr: {}", r.stderr);
        let line = r
            .stdout
            .lines()
            .find(|l| l.starts_with("df_rate: "))
            .unwrap()
            .to_string();
        values.push(line);
    }
    assert!(values.iter().all(|v| v == "df_rate: 2.40241586072"), "{values:?}");

    // The closed form applies to four-node instances and must match the
    // general search there.
    let r = run(&[
        "schedule",
        &repo_topology("vi_a_four_node.toml"),
        "--method",
        "closed4",
    ]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    assert!(r.stdout.contains("method: closed_form_4node"), "{}", r.stdout);
    assert!(r.stdout.contains("df_rate: 0.298152006607"), "{}", r.stdout);
}

#[test]
fn grid_method_runs_and_respects_step_bounds() {
    let d3 = repo_topology("line_d3_unit.toml");
    let r = run(&["schedule", &d3, "--method", "grid", "--step", "0.001"]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    assert!(r.stdout.contains("method: grid_oracle"), "{}", r.stdout);

    for bad in ["0", "-0.5", "1.5"] {
        let r = run(&["schedule", &d3, "--method", "grid", "--step", bad]);
        assert_eq!(r.code, 2, "step {bad}: {}", r.stderr);
    }

    // A tiny step on a 4-state instance overflows the lattice budget:
    // that is an instance-size precondition, not a flag error.
    let r = run(&[
        "schedule",
        &repo_topology("vi_a_four_node.toml"),
        "--method",
        "grid",
        "--step",
        "0.00001",
    ]);
    assert_eq!(r.code, 1, "stderr: {}", r.stderr);
    assert!(r.stderr.contains("simplex lattice"), "{}", r.stderr);
}

#[test]
fn rate_accepts_and_validates_schedule_overrides() {
    let d3 = repo_topology("line_d3_unit.toml");
    let r = run(&["rate", &d3, "--schedule", "0.6,0.4"]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    assert!(r.stdout.contains("method: provided schedule"), "{}", r.stdout);
    // 0.6 * log2(11) with the source-to-relay link binding.
    assert!(r.stdout.contains("df_rate: 2.07565897118"), "{}", r.stdout);

    for bad in ["0.5,0.25,0.25", "-0.1,1.1", "0.6,0.6", "0.6,nope"] {
        let r = run(&["rate", &d3, "--schedule", bad]);
        assert_eq!(r.code, 2, "override {bad:?} must be rejected: {}", r.stderr);
    }
}

#[test]
fn toml_errors_carry_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_file(&dir, "broken.toml", "nodes = [[0.0, 0.0], [\n");
    let r = run(&["rate", file.to_str().unwrap()]);
    assert_eq!(r.code, 2, "stderr: {}", r.stderr);
    assert!(r.stderr.contains("line"), "{}", r.stderr);
    assert!(r.stderr.contains("column"), "{}", r.stderr);
    assert!(r.stderr.contains("broken.toml"), "{}", r.stderr);
}

#[test]
fn topology_form_must_be_exactly_one_of_nodes_or_gains() {
    let dir = tempfile::tempdir().unwrap();
    let both = write_file(
        &dir,
        "both.toml",
        "nodes = [[0.0, 0.0], [1.0, 0.0]]\ngains = [[1.0]]\npowers = [1.0]\nnoises = [1.0]\n",
    );
    let r = run(&["rate", both.to_str().unwrap()]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("not both"), "{}", r.stderr);

    let neither = write_file(&dir, "neither.toml", "powers = [1.0]\nnoises = [1.0]\n");
    let r = run(&["rate", neither.to_str().unwrap()]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("nodes list or a gains matrix"), "{}", r.stderr);

    let unknown = write_file(
        &dir,
        "unknown.toml",
        "nodes = [[0.0, 0.0], [1.0, 0.0]]\npowers = [1.0]\nnoises = [1.0]\nbogus = 3\n",
    );
    let r = run(&["rate", unknown.to_str().unwrap()]);
    assert_eq!(r.code, 2, "unknown fields must be rejected: {}", r.stderr);
}

#[test]
fn missing_file_is_an_input_error() {
    let r = run(&["rate", "/nonexistent/topo.toml"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("/nonexistent/topo.toml"), "{}", r.stderr);
}

#[test]
fn degraded_only_solver_names_the_violating_triple() {
    let r = run(&[
        "schedule",
        &repo_topology("vi_a_four_node.toml"),
        "--method",
        "algo3",
    ]);
    assert_eq!(r.code, 1, "stderr: {}", r.stderr);
    assert!(r.stderr.contains("not relay-SNR degraded"), "{}", r.stderr);
    assert!(
        r.stderr.contains("node 1's signal reaches node 2"),
        "{}",
        r.stderr
    );
}

#[test]
fn closed_form_requires_four_nodes() {
    let r = run(&[
        "schedule",
        &repo_topology("line_d3_unit.toml"),
        "--method",
        "closed4",
    ]);
    assert_eq!(r.code, 1, "stderr: {}", r.stderr);
    assert!(r.stderr.contains("4-node"), "{}", r.stderr);
}

#[test]
fn check_classifies_snr_ordering() {
    let r = run(&["check", &repo_topology("line_d3_unit.toml")]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("rSNR-degraded: yes\n"), "{}", r.stdout);

    let r = run(&["check", &repo_topology("vi_a_four_node.toml")]);
    assert_eq!(r.code, 0);
    assert!(
        r.stdout.contains("rSNR-degraded: no, triple (1,2,3)"),
        "{}",
        r.stdout
    );

    let dir = tempfile::tempdir().unwrap();
    let pair = write_file(&dir, "pair.toml", TWO_NODE_FAR);
    let r = run(&["check", pair.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("rSNR-degraded: yes (vacuous)"), "{}", r.stdout);
}

#[test]
fn check_flags_node_counts_beyond_the_scheduling_cap() {
    let dir = tempfile::tempdir().unwrap();
    let nodes: Vec<String> = (1..=18).map(|i| format!("[{i}.0, 0.0]")).collect();
    let text = format!(
        "nodes = [{}]\npowers = [{}]\nnoises = [{}]\n",
        nodes.join(", "),
        vec!["10.0"; 17].join(", "),
        vec!["1.0"; 17].join(", "),
    );
    let file = write_file(&dir, "big.toml", &text);

    let r = run(&["check", file.to_str().unwrap()]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    assert!(r.stdout.contains("beyond the D=16 scheduling cap"), "{}", r.stdout);

    // Half-duplex scheduling refuses the same instance.
    let r = run(&["schedule", file.to_str().unwrap()]);
    assert_eq!(r.code, 1, "stderr: {}", r.stderr);
}

#[test]
fn bound_reports_gap_and_probe() {
    let dir = tempfile::tempdir().unwrap();
    let pair = write_file(&dir, "pair.toml", TWO_NODE_FAR);
    let r = run(&["bound", pair.to_str().unwrap()]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    // Single-relay-free channel: the bound and DF rate coincide exactly.
    assert!(r.stdout.contains("gap: 0\n"), "{}", r.stdout);
    assert!(r.stdout.contains("probe: ok"), "{}", r.stdout);

    let r = run(&["bound", &repo_topology("vi_a_four_node.toml"), "--seed", "7"]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    assert!(r.stdout.contains("cutset_bound: 0.691558510275"), "{}", r.stdout);
    assert!(r.stdout.contains("seed 7"), "{}", r.stdout);
    assert!(r.stdout.contains("probe: ok"), "{}", r.stdout);
}

#[test]
fn position_sweeps_require_a_geometric_four_node_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");

    let r = run(&[
        "sweep",
        "relay-position-1d",
        &repo_topology("line_d3_unit.toml"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 1, "stderr: {}", r.stderr);

    // Gains-form files have no coordinates to move.
    let gains4 = write_file(
        &dir,
        "gains4.toml",
        "gains = [[3.0, 0.3, 0.1], [0.0, 10.0, 20.0], [1.0, 0.0, 5.0]]\n\
         powers = [1.0, 1.0, 1.0]\nnoises = [1.0, 1.0, 1.0]\n",
    );
    let r = run(&[
        "sweep",
        "relay-position-1d",
        gains4.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 1, "stderr: {}", r.stderr);
}

#[test]
fn gains_form_instances_solve() {
    let dir = tempfile::tempdir().unwrap();
    let gains4 = write_file(
        &dir,
        "gains4.toml",
        "gains = [[3.0, 0.3, 0.1], [0.0, 10.0, 20.0], [1.0, 0.0, 5.0]]\n\
         powers = [1.0, 1.0, 1.0]\nnoises = [1.0, 1.0, 1.0]\n",
    );
    let r = run(&["rate", gains4.to_str().unwrap()]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    assert!(r.stdout.contains("bottleneck: 2,3\n"), "{}", r.stdout);
}

#[test]
fn position_sweep_writes_the_expected_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3.csv");
    let r = run(&[
        "sweep",
        "relay-position-1d",
        &repo_topology("vi_a_four_node.toml"),
        "--range",
        "20:30",
        "--step",
        "1",
        "--threads",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    assert!(r.stdout.contains("wrote 11 rows"), "{}", r.stdout);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "y2,y3,df_rate,ub_rate,bottleneck_size,p0,p1,p2,p3"
    );
    assert_eq!(lines.count(), 11);
    assert!(csv.ends_with('\n'));

    // Zero worker threads is a flag error.
    let r = run(&[
        "sweep",
        "relay-position-1d",
        &repo_topology("vi_a_four_node.toml"),
        "--threads",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 2, "stderr: {}", r.stderr);
}

#[test]
fn sweep_range_must_be_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    for bad in ["5:1", "abc", "1:2:3"] {
        let r = run(&[
            "sweep",
            "relay-position-1d",
            &repo_topology("vi_a_four_node.toml"),
            "--range",
            bad,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(r.code, 2, "range {bad:?}: {}", r.stderr);
    }
}

#[test]
fn node_count_sweep_full_duplex_line_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("counts.csv");
    let r = run(&[
        "sweep",
        "node-count",
        "--d-range",
        "2:20",
        "--duplex",
        "full",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "D,duplex,df_rate");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 19);
    // Unit spacing, P=10, N=1: the full-duplex DF rate is log2(11) at
    // every node count.
    for row in &rows {
        assert!(row.ends_with(",full,3.45943161864"), "{row}");
    }
}

#[test]
fn node_count_sweep_guards_half_duplex_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("counts.csv");
    let r = run(&[
        "sweep",
        "node-count",
        "--d-range",
        "2:20",
        "--duplex",
        "both",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 1, "stderr: {}", r.stderr);

    // --spacing and --span are mutually exclusive (clap handles this).
    let r = run(&[
        "sweep",
        "node-count",
        "--d-range",
        "2:5",
        "--spacing",
        "1",
        "--span",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 2, "stderr: {}", r.stderr);

    // A spanned half-duplex sweep within the cap works.
    let r = run(&[
        "sweep",
        "node-count",
        "--d-range",
        "3:5",
        "--duplex",
        "half",
        "--span",
        "20",
        "--power",
        "10",
        "--noise",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().skip(1).all(|l| l.contains(",half,")), "{csv}");
}

#[test]
fn two_d_sweep_emits_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let r = run(&[
        "sweep",
        "relay-position-2d",
        &repo_topology("vi_a_four_node.toml"),
        "--range",
        "0:20",
        "--step",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    // y2 is the outer loop.
    assert!(rows[0].starts_with("0,0,"), "{}", rows[0]);
    assert!(rows[1].starts_with("0,10,"), "{}", rows[1]);
    assert!(rows[3].starts_with("10,0,"), "{}", rows[3]);
}
