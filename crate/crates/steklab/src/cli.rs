//! Command-line front end: mesh generation, single solves, verification
//! suites, and convergence sweeps.
//!
//! Every output file embeds the [`RunConfig`] that produced it (JSON results
//! carry it as a `config` field, text formats as `#`-prefixed header lines),
//! together with the crate version and SHA-256 hashes of any input files, so
//! a result can always be traced back to — and regenerated from — its exact
//! invocation. Commands are deterministic for a fixed seed; re-running the
//! same invocation writes byte-identical files.
//!
//! Exit codes are fixed for CI use: 0 success, 2 usage or input-file
//! problems, 3 solver failure (stderr carries the error name), 4 a
//! verification FAIL (or INCONCLUSIVE under `--strict`).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::assembly::{assemble, bs_harmonic_quotient, Problem, ProblemSpec};
use crate::eig::{richardson, solve_kmode, solve_smallest, Spectrum, DEFAULT_TOL};
use crate::global_seed;
use crate::mesh::{format_fmesh, gen_domain, read_fmesh, refine, DomainTag, SimplicialMesh};
use crate::serrin::solve_serrin;
use crate::verify::{
    canonical_sort, default_domains, run_domain_filtered, SuiteConfig, TheoremId, TheoremReport,
    Verdict,
};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 2;
const EXIT_SOLVER: i32 = 3;
const EXIT_VERIFY: i32 = 4;

/// Spectral laboratory for boundary eigenvalue problems on differential
/// forms: Dirichlet/Neumann/Robin spectra, boundary response maps, the
/// fourth-order boundary quotient, and the constant-flux overdetermined
/// problem, with checkers for the quantitative relations between them.
#[derive(Debug, Parser)]
#[command(name = "steklab", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Triangulate a catalog domain and write it as an FMESH v1 file.
    Mesh(MeshArgs),
    /// Solve one boundary problem on a mesh file and report the low spectrum.
    Solve(SolveArgs),
    /// Run the statement checkers over one or all catalog domains.
    Verify(VerifyArgs),
    /// Refinement and parameter sweeps with extrapolation columns.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct MeshArgs {
    /// Domain family: disk | annulus | ellipse | square | cap.
    #[arg(long)]
    domain: String,
    /// Shape parameters, comma-separated: disk radius; annulus inner,outer;
    /// ellipse a,b; square side; cap opening angle (radians).
    #[arg(long)]
    param: Option<String>,
    /// Target edge length.
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// Output FMESH path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Input FMESH file.
    #[arg(long)]
    mesh: PathBuf,
    /// Problem: dirichlet | neumann | robin | dtn | bs.
    #[arg(long)]
    problem: String,
    /// Form degree (0, 1, or 2).
    #[arg(long, default_value_t = 0)]
    p: u8,
    /// Boundary penalty for the robin problem.
    #[arg(long)]
    tau: Option<f64>,
    /// Number of eigenvalues.
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Write the spectrum JSON here (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an index,value CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// "all" or one check name (e.g. robin_sandwich, theta_lower_bound).
    #[arg(long, default_value = "all")]
    suite: String,
    /// "all", one domain name, or a comma list; "cap" selects both catalog caps.
    #[arg(long, default_value = "all")]
    domain: String,
    /// Coarsest target edge length of the mesh ladder.
    #[arg(long, default_value_t = 0.2)]
    h: f64,
    /// Number of ladder levels (each level halves h).
    #[arg(long, default_value_t = 3)]
    refinements: usize,
    /// Treat INCONCLUSIVE like FAIL for the exit code.
    #[arg(long)]
    strict: bool,
    /// Worker threads across domains.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the report JSON here as well as summarizing to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep kind: bs | robin | serrin.
    #[arg(long)]
    kind: String,
    /// Domain family (same names as `mesh`).
    #[arg(long, default_value = "disk")]
    domain: String,
    /// Shape parameters, comma-separated (same meaning as `mesh`).
    #[arg(long)]
    param: Option<String>,
    /// Form degree for bs and robin sweeps.
    #[arg(long, default_value_t = 0)]
    p: u8,
    /// Coarsest target edge length.
    #[arg(long, default_value_t = 0.4)]
    h: f64,
    /// Number of ladder levels.
    #[arg(long, default_value_t = 3)]
    refinements: usize,
    /// Penalty grid for the robin sweep, comma-separated.
    #[arg(long)]
    tau_grid: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Also write gnuplot-ready two-column data here.
    #[arg(long)]
    plot: Option<PathBuf>,
}

/// Everything needed to reproduce a run, embedded into each output file.
/// Fields that do not apply to the command are omitted from the JSON.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub code_version: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinements: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_grid: Option<Vec<f64>>,
    pub tolerance: f64,
    /// SHA-256 of each input file, as `path:hex`.
    pub input_hashes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl RunConfig {
    fn new(command: &str) -> Self {
        RunConfig {
            command: command.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: global_seed(),
            domain: None,
            param: None,
            mesh_file: None,
            problem: None,
            degree: None,
            tau: None,
            k: None,
            h: None,
            refinements: None,
            suite: None,
            strict: None,
            jobs: None,
            kind: None,
            tau_grid: None,
            tolerance: DEFAULT_TOL,
            input_hashes: Vec::new(),
            out: None,
        }
    }

    fn json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: msg.into() }
}

fn solver(err: impl std::fmt::Debug) -> Failure {
    Failure { code: EXIT_SOLVER, message: error_name(&format!("{err:?}")) }
}

/// The error's variant name from its Debug form, unwrapping transparent
/// layers: `Eig(NotConverged { .. })` → `NotConverged`.
fn error_name(debug: &str) -> String {
    let mut s = debug.trim();
    loop {
        let ident: String =
            s.chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '_').collect();
        let rest = &s[ident.len()..];
        if let Some(inner) = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            // a tuple wrapper around another enum — descend
            let inner = inner.trim();
            if inner.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                s = inner;
                continue;
            }
        }
        return if ident.is_empty() { debug.to_string() } else { ident };
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Mesh(args) => cmd_mesh(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("{}", failure.message);
            failure.code
        }
    }
}

// ---------------------------------------------------------------------------
// shared parsing

fn parse_floats(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("not a number: {t:?}"))))
        .collect()
}

fn parse_domain(name: &str, param: Option<&str>) -> Result<DomainTag, Failure> {
    let given = param.map(parse_floats).transpose()?;
    let arity_err = |want: &str| {
        usage(format!("domain {name:?} takes {want} --param value(s), got {:?}", given))
    };
    let vals = |defaults: &[f64]| -> Result<Vec<f64>, Failure> {
        match &given {
            None => Ok(defaults.to_vec()),
            Some(v) if v.len() == defaults.len() => Ok(v.clone()),
            Some(_) => Err(arity_err(if defaults.len() == 1 { "one" } else { "two" })),
        }
    };
    match name {
        "disk" => vals(&[1.0]).map(|v| DomainTag::Disk { r: v[0] }),
        "annulus" => {
            vals(&[0.5, 1.0]).map(|v| DomainTag::Annulus { r_inner: v[0], r_outer: v[1] })
        }
        "ellipse" => vals(&[1.0, 0.6]).map(|v| DomainTag::Ellipse { a: v[0], b: v[1] }),
        "square" => vals(&[1.0]).map(|v| DomainTag::Square { side: v[0] }),
        "cap" => vals(&[std::f64::consts::FRAC_PI_2]).map(|v| DomainTag::Cap { alpha: v[0] }),
        other => Err(usage(format!(
            "unknown domain {other:?} (expected disk, annulus, ellipse, square, or cap)"
        ))),
    }
}

fn parse_problem(name: &str, tau: Option<f64>) -> Result<Problem, Failure> {
    match name {
        "dirichlet" => Ok(Problem::Dirichlet),
        "neumann" => Ok(Problem::Neumann),
        "robin" => Ok(Problem::Robin { tau: tau.unwrap_or(1.0) }),
        "dtn" => Ok(Problem::Dtn),
        "bs" => Ok(Problem::BiharmonicSteklov),
        other => Err(usage(format!(
            "unknown problem {other:?} (expected dirichlet, neumann, robin, dtn, or bs)"
        ))),
    }
}

fn tag_params(tag: DomainTag) -> Vec<f64> {
    match tag {
        DomainTag::Disk { r } => vec![r],
        DomainTag::Annulus { r_inner, r_outer } => vec![r_inner, r_outer],
        DomainTag::Ellipse { a, b } => vec![a, b],
        DomainTag::Square { side } => vec![side],
        DomainTag::Cap { alpha } => vec![alpha],
    }
}

fn hash_file(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(format!("{}:{}", path.display(), hex))
}

fn write_output(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// mesh

fn cmd_mesh(args: MeshArgs) -> Result<i32, Failure> {
    let tag = parse_domain(&args.domain, args.param.as_deref())?;
    let mut config = RunConfig::new("mesh");
    config.domain = Some(args.domain.clone());
    config.param = Some(tag_params(tag));
    config.h = Some(args.h);
    config.out = Some(args.out.display().to_string());

    let mesh = gen_domain(tag, args.h).map_err(|e| usage(format!("{e}")))?;
    let mut text = String::new();
    let _ = writeln!(text, "# config: {}", config.json());
    text.push_str(&format_fmesh(&mesh));
    write_output(&args.out, &text)?;
    println!(
        "wrote {} ({} vertices, {} triangles, {} boundary loops)",
        args.out.display(),
        mesh.n_vertices(),
        mesh.triangles.len(),
        mesh.boundary_loops.len()
    );
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// solve

fn cmd_solve(args: SolveArgs) -> Result<i32, Failure> {
    if args.p > 2 {
        return Err(usage(format!("degree {} out of range (0, 1, or 2)", args.p)));
    }
    if args.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let problem = parse_problem(&args.problem, args.tau)?;
    let mut config = RunConfig::new("solve");
    config.mesh_file = Some(args.mesh.display().to_string());
    config.problem = Some(args.problem.clone());
    config.degree = Some(args.p);
    if let Problem::Robin { tau } = problem {
        config.tau = Some(tau);
    }
    config.k = Some(args.k);
    config.input_hashes = vec![hash_file(&args.mesh)?];
    config.out = args.out.as_ref().map(|p| p.display().to_string());

    let mesh = read_fmesh(&args.mesh)
        .map_err(|e| usage(format!("cannot load {}: {e}", args.mesh.display())))?;
    let spectrum = solve_one(problem, args.p, &mesh, args.k)?;

    #[derive(Serialize)]
    struct SolveOutput<'a> {
        config: &'a RunConfig,
        spectrum: &'a Spectrum,
    }
    let json = serde_json::to_string_pretty(&SolveOutput { config: &config, spectrum: &spectrum })
        .expect("output serializes");
    match &args.out {
        Some(path) => {
            write_output(path, &json)?;
            println!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    if let Some(csv) = &args.csv {
        let mut text = String::new();
        let _ = writeln!(text, "# config: {}", config.json());
        text.push_str("index,value\n");
        for (i, v) in spectrum.eigenvalues.iter().enumerate() {
            let _ = writeln!(text, "{i},{v:.16e}");
        }
        write_output(csv, &text)?;
        println!("wrote {}", csv.display());
    }
    Ok(EXIT_OK)
}

fn solve_one(
    problem: Problem,
    degree: u8,
    mesh: &SimplicialMesh,
    k: usize,
) -> Result<Spectrum, Failure> {
    if matches!(problem, Problem::BiharmonicSteklov) {
        let pencil = bs_harmonic_quotient(mesh, degree).map_err(solver)?;
        solve_kmode(&pencil, k, DEFAULT_TOL).map_err(solver)
    } else {
        let pencil = assemble(ProblemSpec { problem, degree }, mesh).map_err(solver)?;
        solve_smallest(&pencil, k, DEFAULT_TOL).map_err(solver)
    }
}

// ---------------------------------------------------------------------------
// verify

fn verify_domains(selector: &str) -> Result<Vec<DomainTag>, Failure> {
    if selector == "all" {
        return Ok(default_domains());
    }
    let catalog = default_domains();
    let mut out = Vec::new();
    for name in selector.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let matched: Vec<DomainTag> =
            catalog.iter().copied().filter(|t| t.name() == name).collect();
        if matched.is_empty() {
            return Err(usage(format!(
                "unknown domain {name:?} (catalog: disk, annulus, ellipse, square, cap, or all)"
            )));
        }
        out.extend(matched);
    }
    Ok(out)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, Failure> {
    let keep = if args.suite == "all" {
        None
    } else {
        Some(args.suite.parse::<TheoremId>().map_err(usage)?)
    };
    let domains = verify_domains(&args.domain)?;
    if args.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let cfg = SuiteConfig { h: args.h, refinements: args.refinements, ..SuiteConfig::default() };

    let mut config = RunConfig::new("verify");
    config.suite = Some(args.suite.clone());
    config.domain = Some(args.domain.clone());
    config.h = Some(args.h);
    config.refinements = Some(args.refinements);
    config.strict = Some(args.strict);
    config.jobs = Some(args.jobs);
    config.out = args.out.as_ref().map(|p| p.display().to_string());

    let reports = run_parallel(&domains, &cfg, keep, args.jobs)?;
    for report in &reports {
        println!("{}", report.summary_line());
    }
    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    let (pass, equality) = (count(Verdict::Pass), count(Verdict::Equality));
    let (fail, inconclusive, skipped) =
        (count(Verdict::Fail), count(Verdict::Inconclusive), count(Verdict::Skipped));
    println!(
        "{} checks: {pass} PASS, {equality} EQUALITY, {fail} FAIL, \
         {inconclusive} INCONCLUSIVE, {skipped} SKIPPED",
        reports.len()
    );

    if let Some(path) = &args.out {
        #[derive(Serialize)]
        struct VerifyOutput<'a> {
            config: &'a RunConfig,
            reports: &'a [TheoremReport],
        }
        let json =
            serde_json::to_string_pretty(&VerifyOutput { config: &config, reports: &reports })
                .expect("output serializes");
        write_output(path, &json)?;
        println!("wrote {}", path.display());
    }

    if fail > 0 || (args.strict && inconclusive > 0) {
        Ok(EXIT_VERIFY)
    } else {
        Ok(EXIT_OK)
    }
}

type DomainOutcome = Result<Vec<TheoremReport>, String>;

/// Run the per-domain suites on up to `jobs` worker threads. Results land in
/// per-domain slots and are merged in catalog order, then sorted canonically,
/// so the output is independent of scheduling.
fn run_parallel(
    domains: &[DomainTag],
    cfg: &SuiteConfig,
    keep: Option<TheoremId>,
    jobs: usize,
) -> Result<Vec<TheoremReport>, Failure> {
    let slots: Mutex<Vec<Option<DomainOutcome>>> = Mutex::new(vec![None; domains.len()]);
    let next = AtomicUsize::new(0);
    let workers = jobs.min(domains.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= domains.len() {
                    break;
                }
                let outcome = run_domain_filtered(domains[i], cfg, keep)
                    .map_err(|e| error_name(&format!("{e:?}")));
                slots.lock().expect("slot lock")[i] = Some(outcome);
            });
        }
    });
    let mut reports = Vec::new();
    for slot in slots.into_inner().expect("slot lock") {
        match slot.expect("every domain visited") {
            Ok(batch) => reports.extend(batch),
            Err(name) => return Err(Failure { code: EXIT_SOLVER, message: name }),
        }
    }
    canonical_sort(&mut reports);
    Ok(reports)
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
    x: f64,
    value: f64,
    extrapolated: Option<f64>,
    order: Option<f64>,
}

/// Running Richardson columns: from the third row on, extrapolate the last
/// three values and report the observed order alongside.
fn running_extrapolation(rows: &mut [SweepRow]) {
    for i in 2..rows.len() {
        let ex = richardson(rows[i - 2].value, rows[i - 1].value, rows[i].value);
        rows[i].extrapolated = Some(ex.value);
        rows[i].order = ex.observed_order;
    }
}

fn format_sweep_csv(config: &RunConfig, x_name: &str, rows: &[SweepRow]) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "# config: {}", config.json());
    let _ = writeln!(text, "{x_name},value,extrapolated,order");
    for row in rows {
        let ex = row.extrapolated.map(|v| format!("{v:.16e}")).unwrap_or_default();
        let ord = row.order.map(|v| format!("{v:.3}")).unwrap_or_default();
        let _ = writeln!(text, "{:.16e},{:.16e},{ex},{ord}", row.x, row.value);
    }
    text
}

fn format_plot_data(config: &RunConfig, x_name: &str, rows: &[SweepRow]) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "# config: {}", config.json());
    let _ = writeln!(text, "# {x_name} value");
    for row in rows {
        let _ = writeln!(text, "{:.16e} {:.16e}", row.x, row.value);
    }
    text
}

fn cmd_sweep(args: SweepArgs) -> Result<i32, Failure> {
    let tag = parse_domain(&args.domain, args.param.as_deref())?;
    if args.p > 2 {
        return Err(usage(format!("degree {} out of range (0, 1, or 2)", args.p)));
    }
    let tau_grid = match &args.tau_grid {
        Some(s) => parse_floats(s)?,
        None => vec![0.1, 0.3, 1.0, 3.0, 10.0, 100.0],
    };

    let mut config = RunConfig::new("sweep");
    config.kind = Some(args.kind.clone());
    config.domain = Some(args.domain.clone());
    config.param = Some(tag_params(tag));
    config.degree = Some(args.p);
    config.h = Some(args.h);
    config.refinements = Some(args.refinements);
    if args.kind == "robin" {
        config.tau_grid = Some(tau_grid.clone());
    }
    config.out = Some(args.out.display().to_string());

    let levels = args.refinements.max(1);
    let mut meshes = vec![gen_domain(tag, args.h).map_err(|e| usage(format!("{e}")))?];
    while meshes.len() < levels {
        meshes.push(refine(meshes.last().expect("nonempty ladder")));
    }

    let (x_name, mut rows) = match args.kind.as_str() {
        // first boundary quotient per ladder level
        "bs" => {
            let mut rows = Vec::new();
            for mesh in &meshes {
                let pencil = bs_harmonic_quotient(mesh, args.p).map_err(solver)?;
                let spectrum = solve_kmode(&pencil, 1, DEFAULT_TOL).map_err(solver)?;
                rows.push(SweepRow {
                    x: mesh.h_target,
                    value: spectrum.eigenvalues[0],
                    extrapolated: None,
                    order: None,
                });
            }
            running_extrapolation(&mut rows);
            ("h", rows)
        }
        // smallest penalty eigenvalue across the grid; each row extrapolates
        // its own ladder so the value column is the finest-level number
        "robin" => {
            let mut rows = Vec::new();
            for &tau in &tau_grid {
                let mut per_level = Vec::new();
                for mesh in &meshes {
                    let spec =
                        ProblemSpec { problem: Problem::Robin { tau }, degree: args.p };
                    let pencil = assemble(spec, mesh).map_err(solver)?;
                    let spectrum = solve_smallest(&pencil, 1, DEFAULT_TOL).map_err(solver)?;
                    per_level.push(spectrum.eigenvalues[0]);
                }
                let value = *per_level.last().expect("nonempty ladder");
                let (extrapolated, order) = if per_level.len() >= 3 {
                    let n = per_level.len();
                    let ex = richardson(per_level[n - 3], per_level[n - 2], per_level[n - 1]);
                    (Some(ex.value), ex.observed_order)
                } else {
                    (None, None)
                };
                rows.push(SweepRow { x: tau, value, extrapolated, order });
            }
            ("tau", rows)
        }
        // constant-flux deviation per ladder level; should shrink under refinement
        "serrin" => {
            let mut rows = Vec::new();
            for mesh in &meshes {
                let sol = solve_serrin(mesh).map_err(solver)?;
                rows.push(SweepRow {
                    x: mesh.h_target,
                    value: sol.constancy_score,
                    extrapolated: None,
                    order: None,
                });
            }
            running_extrapolation(&mut rows);
            ("h", rows)
        }
        other => {
            return Err(usage(format!(
                "unknown sweep kind {other:?} (expected bs, robin, or serrin)"
            )))
        }
    };

    // stable formatting regardless of which branch filled the rows
    rows.iter_mut().for_each(|r| {
        if !r.value.is_finite() {
            r.value = f64::NAN;
        }
    });
    write_output(&args.out, &format_sweep_csv(&config, x_name, &rows))?;
    println!("wrote {}", args.out.display());
    if let Some(plot) = &args.plot {
        write_output(plot, &format_plot_data(&config, x_name, &rows))?;
        println!("wrote {}", plot.display());
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_parsing_covers_the_catalog() {
        assert_eq!(parse_domain("disk", None).unwrap(), DomainTag::Disk { r: 1.0 });
        assert_eq!(
            parse_domain("annulus", Some("0.3,1.2")).unwrap(),
            DomainTag::Annulus { r_inner: 0.3, r_outer: 1.2 }
        );
        assert_eq!(
            parse_domain("cap", Some("1.0")).unwrap(),
            DomainTag::Cap { alpha: 1.0 }
        );
        assert!(parse_domain("torus", None).is_err());
        assert!(parse_domain("ellipse", Some("1.0")).is_err());
        assert!(parse_domain("disk", Some("abc")).is_err());
    }

    #[test]
    fn error_names_unwrap_transparent_layers() {
        assert_eq!(error_name("NotConverged { iterations: 500 }"), "NotConverged");
        assert_eq!(error_name("Eig(NotConverged { iterations: 500 })"), "NotConverged");
        assert_eq!(error_name("Assembly(UnsupportedDegree(7))"), "UnsupportedDegree");
        assert_eq!(error_name("Io(Os { code: 2 })"), "Os");
    }

    #[test]
    fn configs_serialize_without_unset_fields() {
        let config = RunConfig::new("mesh");
        let json = config.json();
        assert!(json.contains("\"command\":\"mesh\""));
        assert!(json.contains("\"seed\""));
        assert!(!json.contains("\"tau\""));
        assert!(!json.contains("\"suite\""));
    }

    #[test]
    fn sweeps_fill_extrapolation_from_the_third_row() {
        let mut rows: Vec<SweepRow> = [(0.4, 2.5), (0.2, 2.12), (0.1, 2.03)]
            .iter()
            .map(|&(x, value)| SweepRow { x, value, extrapolated: None, order: None })
            .collect();
        running_extrapolation(&mut rows);
        assert!(rows[0].extrapolated.is_none());
        assert!(rows[1].extrapolated.is_none());
        let ex = rows[2].extrapolated.unwrap();
        assert!(ex < 2.03 && ex > 1.9, "geometric tail should land just under: {ex}");
    }

    #[test]
    fn the_domain_selector_expands_cap_to_both_angles() {
        assert_eq!(verify_domains("cap").unwrap().len(), 2);
        assert_eq!(verify_domains("disk").unwrap().len(), 1);
        assert_eq!(verify_domains("all").unwrap().len(), 6);
        assert_eq!(verify_domains("disk,square").unwrap().len(), 2);
        assert!(verify_domains("moebius").is_err());
    }
}
