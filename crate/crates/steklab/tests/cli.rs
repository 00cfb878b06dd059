//! End-to-end tests of the `steklab` binary: flag handling, exit codes,
//! file formats, and the determinism contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_steklab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

struct Dir {
    _guard: tempfile::TempDir,
    path: PathBuf,
}

fn workdir() -> Dir {
    let guard = tempfile::tempdir().expect("tempdir");
    let path = guard.path().to_path_buf();
    Dir { _guard: guard, path }
}

fn mesh_disk(dir: &Path, h: f64) -> PathBuf {
    let out = dir.join("disk.fmesh");
    let code = code(&run(&[
        "mesh", "--domain", "disk", "--param", "1.0", "--h", &h.to_string(), "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0, "mesh generation succeeds");
    out
}

fn eigenvalues(json_path: &Path) -> Vec<f64> {
    let text = fs::read_to_string(json_path).expect("json readable");
    let doc: serde_json::Value = serde_json::from_str(&text).expect("json parses");
    doc["spectrum"]["eigenvalues"]
        .as_array()
        .expect("eigenvalue array")
        .iter()
        .map(|v| v.as_f64().expect("numeric"))
        .collect()
}

// ---------------------------------------------------------------------------
// usage and exit codes

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["mesh", "--help"])), 0);
}

#[test]
fn bad_flags_exit_two() {
    let dir = workdir();
    let out = dir.path.join("x.fmesh");
    let out = out.to_str().unwrap();
    // unknown subcommand, unknown domain, malformed numbers, missing file
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["mesh", "--domain", "torus", "--out", out])), 2);
    assert_eq!(code(&run(&["mesh", "--domain", "disk", "--param", "abc", "--out", out])), 2);
    assert_eq!(
        code(&run(&["mesh", "--domain", "ellipse", "--param", "1.0", "--out", out])),
        2,
        "ellipse needs two parameters"
    );
    assert_eq!(
        code(&run(&["solve", "--mesh", "/nonexistent.fmesh", "--problem", "bs"])),
        2
    );
    let mesh = mesh_disk(&dir.path, 0.5);
    assert_eq!(
        code(&run(&["solve", "--mesh", mesh.to_str().unwrap(), "--problem", "heat"])),
        2
    );
}

#[test]
fn solver_failures_exit_three_with_the_error_name() {
    let dir = workdir();
    let mesh = mesh_disk(&dir.path, 0.5);
    // the boundary response map has no degree-2 realization in two dimensions
    let out = run(&["solve", "--mesh", mesh.to_str().unwrap(), "--problem", "dtn", "--p", "2"]);
    assert_eq!(code(&out), 3);
    assert!(
        stderr(&out).contains("UnsupportedDegree"),
        "stderr names the error: {}",
        stderr(&out)
    );
}

// ---------------------------------------------------------------------------
// mesh

#[test]
fn identical_mesh_commands_write_identical_bytes() {
    let dir = workdir();
    let out = dir.path.join("disk.fmesh");
    let args = [
        "mesh", "--domain", "disk", "--param", "1.0", "--h", "0.3", "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(code(&run(&args)), 0);
    let first = fs::read(&out).expect("file written");
    assert_eq!(code(&run(&args)), 0);
    let second = fs::read(&out).expect("file rewritten");
    assert_eq!(first, second, "re-running the identical command is byte-identical");
}

#[test]
fn mesh_files_carry_their_config_and_reload() {
    let dir = workdir();
    let mesh = mesh_disk(&dir.path, 0.4);
    let text = fs::read_to_string(&mesh).expect("readable");
    let header = text.lines().next().expect("nonempty");
    assert!(header.starts_with("# config: "), "first line embeds the run config");
    let config: serde_json::Value =
        serde_json::from_str(header.trim_start_matches("# config: ")).expect("config parses");
    assert_eq!(config["command"], "mesh");
    assert_eq!(config["seed"], 42);
    assert!(config["code_version"].is_string());
    // the commented file is still a valid mesh input
    let solved = dir.path.join("s.json");
    let out = run(&[
        "solve", "--mesh", mesh.to_str().unwrap(), "--problem", "neumann", "--k", "2",
        "--out", solved.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
}

#[test]
fn annulus_meshes_record_two_boundary_loops() {
    let dir = workdir();
    let out = dir.path.join("ann.fmesh");
    let res = run(&[
        "mesh", "--domain", "annulus", "--param", "0.5,1.0", "--h", "0.25", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0);
    assert!(stdout(&res).contains("2 boundary loops"), "stdout: {}", stdout(&res));
    // loops are reconstructed from the edge list on reload
    let mesh = steklab::mesh::read_fmesh(&out).expect("file round-trips");
    assert_eq!(mesh.boundary_loops.len(), 2);
}

#[test]
fn cap_meshes_record_their_opening_angle() {
    let dir = workdir();
    let out = dir.path.join("cap.fmesh");
    let res = run(&[
        "mesh", "--domain", "cap", "--param", "1.5708", "--h", "0.3", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0);
    let text = fs::read_to_string(&out).expect("readable");
    let header = text.lines().find(|l| l.starts_with("fmesh ")).expect("format line");
    assert!(header.contains("cap"), "metric kind recorded: {header}");
    assert!(header.contains("1.5708"), "alpha recorded: {header}");
}

// ---------------------------------------------------------------------------
// solve

#[test]
fn fourth_order_quotients_on_the_disk_are_positive_and_ascending() {
    let dir = workdir();
    let mesh = mesh_disk(&dir.path, 0.3);
    let out = dir.path.join("bs.json");
    let res = run(&[
        "solve", "--mesh", mesh.to_str().unwrap(), "--problem", "bs", "--p", "0", "--k", "3",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let q = eigenvalues(&out);
    assert_eq!(q.len(), 3);
    assert!(q[0] > 0.0, "first quotient positive: {q:?}");
    assert!(q.windows(2).all(|w| w[0] <= w[1] + 1e-12), "ascending: {q:?}");
}

#[test]
fn zero_penalty_reproduces_the_natural_spectrum() {
    let dir = workdir();
    let mesh = mesh_disk(&dir.path, 0.3);
    let mesh = mesh.to_str().unwrap();
    let robin = dir.path.join("robin0.json");
    let neumann = dir.path.join("neumann.json");
    for (problem, path, extra) in
        [("robin", &robin, true), ("neumann", &neumann, false)]
    {
        let mut args = vec![
            "solve", "--mesh", mesh, "--problem", problem, "--p", "1", "--k", "4", "--out",
            path.to_str().unwrap(),
        ];
        if extra {
            args.extend(["--tau", "0"]);
        }
        assert_eq!(code(&run(&args)), 0);
    }
    let a = eigenvalues(&robin);
    let b = eigenvalues(&neumann);
    for (x, y) in a.iter().zip(&b) {
        let rel = (x - y).abs() / y.abs().max(1e-300);
        assert!(rel <= 1e-12, "penalty 0 equals the natural problem: {a:?} vs {b:?}");
    }
}

#[test]
fn the_boundary_response_map_on_functions_sees_the_constants() {
    let dir = workdir();
    let mesh = mesh_disk(&dir.path, 0.3);
    let out = dir.path.join("dtn.json");
    let res = run(&[
        "solve", "--mesh", mesh.to_str().unwrap(), "--problem", "dtn", "--p", "0", "--k", "3",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let nu = eigenvalues(&out);
    assert!(nu[0].abs() <= 1e-8, "constants map to zero flux: {nu:?}");
    assert!(nu[1] > 0.5, "clear spectral gap after the kernel: {nu:?}");
}

#[test]
fn solve_emits_a_csv_when_asked() {
    let dir = workdir();
    let mesh = mesh_disk(&dir.path, 0.4);
    let json = dir.path.join("s.json");
    let csv = dir.path.join("s.csv");
    let res = run(&[
        "solve", "--mesh", mesh.to_str().unwrap(), "--problem", "dirichlet", "--k", "3",
        "--out", json.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0);
    let text = fs::read_to_string(&csv).expect("csv written");
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: "));
    assert_eq!(lines.next().unwrap(), "index,value");
    assert_eq!(lines.count(), 3, "one row per eigenvalue");
}

// ---------------------------------------------------------------------------
// verify

#[test]
fn single_check_verification_passes_and_embeds_reports() {
    let dir = workdir();
    let out = dir.path.join("v.json");
    let res = run(&[
        "verify", "--suite", "dtn_ratio", "--domain", "disk", "--h", "0.3",
        "--refinements", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    assert!(stdout(&res).contains("dtn_ratio"), "summary line printed");
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).expect("json parses");
    assert_eq!(doc["config"]["command"], "verify");
    let reports = doc["reports"].as_array().expect("report array");
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["theorem_id"], "dtn_ratio");
    assert_eq!(reports[0]["verdict"], "PASS");
    assert!(reports[0]["meta"]["cases"].as_array().unwrap().len() > 1);
}

#[test]
fn a_failed_check_exits_four() {
    // the closed-form two-sided penalty estimate overshoots on the disk;
    // the checker reports it honestly and the exit code follows
    let dir = workdir();
    let out = dir.path.join("v.json");
    let res = run(&[
        "verify", "--suite", "robin_dirichlet_neumann", "--domain", "disk", "--h", "0.25",
        "--refinements", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 4);
    assert!(stdout(&res).contains("FAIL"));
}

#[test]
fn unknown_suites_and_domains_exit_two() {
    assert_eq!(code(&run(&["verify", "--suite", "flat_earth"])), 2);
    assert_eq!(code(&run(&["verify", "--domain", "torus"])), 2);
    assert_eq!(code(&run(&["verify", "--jobs", "0"])), 2);
}

#[test]
fn worker_count_does_not_change_the_reports() {
    let dir = workdir();
    let serial = dir.path.join("serial.json");
    let threaded = dir.path.join("threaded.json");
    for (jobs, path) in [("1", &serial), ("4", &threaded)] {
        let res = run(&[
            "verify", "--suite", "flat_coincidence", "--domain", "disk,square", "--h", "0.3",
            "--refinements", "2", "--jobs", jobs, "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    }
    let read = |p: &Path| -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
    };
    assert_eq!(
        read(&serial)["reports"],
        read(&threaded)["reports"],
        "merged reports are independent of scheduling"
    );
}

// ---------------------------------------------------------------------------
// sweep

#[test]
fn refinement_sweeps_extrapolate_the_disk_quotient() {
    let dir = workdir();
    let csv = dir.path.join("bs.csv");
    let plot = dir.path.join("bs.dat");
    let res = run(&[
        "sweep", "--kind", "bs", "--domain", "disk", "--h", "0.4", "--refinements", "3",
        "--out", csv.to_str().unwrap(), "--plot", plot.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let text = fs::read_to_string(&csv).expect("csv written");
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: "));
    assert_eq!(lines.next().unwrap(), "h,value,extrapolated,order");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0][2].is_empty() && rows[1][2].is_empty(), "extrapolation needs three rows");
    let extrapolated: f64 = rows[2][2].parse().expect("extrapolated value");
    assert!(
        (extrapolated - 2.0).abs() <= 0.02 * 2.0,
        "disk quotient extrapolates to 2 within 2%: {extrapolated}"
    );
    // plot data: comment headers then two numeric columns
    let plot_text = fs::read_to_string(&plot).expect("plot written");
    for line in plot_text.lines().filter(|l| !l.starts_with('#')) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(cols.len(), 2, "gnuplot two-column data: {line}");
        cols.iter().for_each(|c| {
            c.parse::<f64>().expect("numeric");
        });
    }
}

#[test]
fn penalty_sweeps_are_monotone_in_the_penalty() {
    let dir = workdir();
    let csv = dir.path.join("robin.csv");
    let res = run(&[
        "sweep", "--kind", "robin", "--domain", "disk", "--p", "1", "--h", "0.35",
        "--refinements", "2", "--tau-grid", "0.1,0.5,2,10,50", "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let text = fs::read_to_string(&csv).expect("csv written");
    let values: Vec<f64> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 5);
    assert!(
        values.windows(2).all(|w| w[0] < w[1]),
        "eigenvalue grows with the penalty: {values:?}"
    );
}

#[test]
fn constant_flux_sweeps_tighten_under_refinement() {
    let dir = workdir();
    let csv = dir.path.join("serrin.csv");
    let res = run(&[
        "sweep", "--kind", "serrin", "--domain", "disk", "--h", "0.4", "--refinements", "3",
        "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "stderr: {}", stderr(&res));
    let text = fs::read_to_string(&csv).expect("csv written");
    let scores: Vec<f64> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(
        scores.windows(2).all(|w| w[1] < w[0]),
        "constancy deviation shrinks with h: {scores:?}"
    );
}

#[test]
fn sweep_rejects_unknown_kinds() {
    let dir = workdir();
    let csv = dir.path.join("x.csv");
    assert_eq!(
        code(&run(&["sweep", "--kind", "volume", "--out", csv.to_str().unwrap()])),
        2
    );
}
