//! The project's acceptance checklist. Each test is one gate with its
//! tolerance written next to the measurement it grades; together they pin
//! down the closed-form values, structural identities, solver agreement,
//! inequality suites, classical oracles, and the determinism contract.
//!
//! One gate is expected to stay red until the closed-form two-sided penalty
//! estimate is repaired: on the disk at degree one the displayed bound
//! overshoots the measured spectrum by a refinement-stable margin (about
//! -2e-3 at penalty 2), while the underlying two-dimensional variational
//! bound with the measured cross term holds at every level. The checker
//! notes carry the details; `notes/` in the maintainers' records track the
//! analysis. The gate is kept as written rather than weakened.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};
use std::fs;
use std::process::Command;
use std::time::Instant;

use steklab::assembly::{assemble, bs_harmonic_quotient, Problem, ProblemSpec};
use steklab::eig::{dense_reference, richardson, solve_kmode, solve_smallest, DEFAULT_TOL};
use steklab::forms::ParallelForm;
use steklab::mesh::{gen_domain, refine, DomainTag, SimplicialMesh};
use steklab::serrin::{solve_serrin, verify_serrin_form};
use steklab::verify::{run_domain_filtered, SuiteConfig, TheoremId, TheoremReport, Verdict};

const DISK: DomainTag = DomainTag::Disk { r: 1.0 };
const ANNULUS: DomainTag = DomainTag::Annulus { r_inner: 0.5, r_outer: 1.0 };
const ELLIPSE: DomainTag = DomainTag::Ellipse { a: 1.0, b: 0.6 };
const SQUARE: DomainTag = DomainTag::Square { side: 1.0 };
const HEMISPHERE: DomainTag = DomainTag::Cap { alpha: FRAC_PI_2 };
const SMALL_CAP: DomainTag = DomainTag::Cap { alpha: FRAC_PI_3 };

/// First Bessel root squared: the disk's first fixed-boundary eigenvalue.
const BESSEL_J01_SQ: f64 = 5.783185962946785;

fn ladder(tag: DomainTag, h: f64, levels: usize) -> Vec<SimplicialMesh> {
    let mut meshes = vec![gen_domain(tag, h).expect("domain meshes")];
    while meshes.len() < levels {
        meshes.push(refine(meshes.last().unwrap()));
    }
    meshes
}

/// First fourth-order boundary quotient at each ladder level.
fn q1_per_level(meshes: &[SimplicialMesh], degree: u8) -> Vec<f64> {
    meshes
        .iter()
        .map(|m| {
            let pencil = bs_harmonic_quotient(m, degree).expect("quotient assembles");
            solve_kmode(&pencil, 1, DEFAULT_TOL).expect("quotient solves").eigenvalues[0]
        })
        .collect()
}

fn extrapolated(values: &[f64]) -> f64 {
    let n = values.len();
    assert!(n >= 3, "need three levels");
    richardson(values[n - 3], values[n - 2], values[n - 1]).value
}

fn suite_config(h: f64) -> SuiteConfig {
    SuiteConfig { h, ..SuiteConfig::default() }
}

/// Some checkers report once per degree on the same domain.
fn reports_for(tag: DomainTag, id: TheoremId, h: f64) -> Vec<TheoremReport> {
    let reports = run_domain_filtered(tag, &suite_config(h), Some(id)).expect("checker runs");
    assert!(!reports.is_empty(), "at least one report for {id} on {tag:?}");
    reports
}

fn single_report(tag: DomainTag, id: TheoremId, h: f64) -> TheoremReport {
    let reports = reports_for(tag, id, h);
    assert_eq!(reports.len(), 1, "exactly one report for {id} on {tag:?}");
    reports.into_iter().next().unwrap()
}

fn assert_upholds(report: &TheoremReport) {
    assert!(
        matches!(report.verdict, Verdict::Pass | Verdict::Equality),
        "{} on {}: expected the statement to hold, got {} \
         (margin {:+.3e}, error bar {:.1e}; notes: {:?})",
        report.theorem_id,
        report.domain,
        report.verdict,
        report.margin,
        report.tolerance,
        report.meta.notes,
    );
    if report.verdict == Verdict::Pass {
        assert!(
            report.margin > report.tolerance,
            "{} on {}: PASS margin {:+.3e} must exceed the error bar {:.1e}",
            report.theorem_id,
            report.domain,
            report.margin,
            report.tolerance,
        );
    }
    let case_fails = report
        .meta
        .cases
        .iter()
        .filter(|c| c.verdict == Verdict::Fail)
        .map(|c| c.label.clone())
        .collect::<Vec<_>>();
    assert!(case_fails.is_empty(), "no failing cases expected, got {case_fails:?}");
}

// ---------------------------------------------------------------------------
// 1. closed-form first quotients

#[test]
fn first_quotients_hit_the_disk_and_hemisphere_closed_forms() {
    // unit disk: q1 -> 2 (the boundary-to-volume ratio), within 2%
    let start = Instant::now();
    let q_disk = extrapolated(&q1_per_level(&ladder(DISK, 0.3, 3), 0));
    let disk_secs = start.elapsed().as_secs_f64();
    assert!(
        (q_disk - 2.0).abs() <= 0.02 * 2.0,
        "disk quotient extrapolates to 2 within 2%: got {q_disk}"
    );
    assert!(disk_secs <= 60.0, "disk measurement stays under a minute: {disk_secs:.1}s");

    // hemisphere: q1 -> 1, within 3%
    let start = Instant::now();
    let q_hemi = extrapolated(&q1_per_level(&ladder(HEMISPHERE, 0.2, 3), 0));
    let hemi_secs = start.elapsed().as_secs_f64();
    assert!(
        (q_hemi - 1.0).abs() <= 0.03,
        "hemisphere quotient extrapolates to 1 within 3%: got {q_hemi}"
    );
    assert!(hemi_secs <= 60.0, "hemisphere measurement stays under a minute: {hemi_secs:.1}s");
}

// ---------------------------------------------------------------------------
// 2. the radial-profile lower bound attains equality where it should

#[test]
fn the_profile_bound_attains_equality_on_disk_and_hemisphere() {
    for (tag, target) in [(DISK, 2.0), (HEMISPHERE, 1.0)] {
        let report = single_report(tag, TheoremId::ThetaLowerBound, 0.2);
        assert_eq!(
            report.verdict,
            Verdict::Equality,
            "profile bound is attained on {}: margin {:+.3e} vs error bar {:.1e}",
            report.domain,
            report.margin,
            report.tolerance,
        );
        // the reciprocal profile integral and the measured quotient both sit
        // at the closed-form value; grant each side its own measurement
        // tolerance (2–3%) plus extrapolation slack
        assert!(
            (report.lhs - target).abs() <= 0.04 * target,
            "bound value on {}: {} vs {target}",
            report.domain,
            report.lhs
        );
        assert!(
            (report.rhs - target).abs() <= 0.03 * target,
            "quotient on {}: {} vs {target}",
            report.domain,
            report.rhs
        );
        assert!(
            (report.lhs - report.rhs).abs() <= 0.04 * target,
            "the two sides agree within combined tolerance on {}: {} vs {}",
            report.domain,
            report.lhs,
            report.rhs
        );
    }
}

// ---------------------------------------------------------------------------
// 3. the constant-flux (mean exit time) solution on the disk

#[test]
fn the_constant_flux_solution_matches_the_disk_profile() {
    let meshes = ladder(DISK, 0.2, 3);

    // residual of the derived one-form identity shrinks monotonically
    let residuals: Vec<f64> = meshes
        .iter()
        .map(|m| verify_serrin_form(m, ParallelForm::Dx).expect("identity check runs").residual)
        .collect();
    assert!(
        residuals.windows(2).all(|w| w[1] < w[0]),
        "identity residual decreases under refinement: {residuals:?}"
    );

    let finest = meshes.last().unwrap();
    let sol = solve_serrin(finest).expect("torsion problem solves");

    // the exact disk solution is (1 - r^2)/4
    let max_f = sol.f.iter().cloned().fold(0.0f64, f64::max);
    let worst = finest
        .vertices
        .iter()
        .zip(&sol.f)
        .map(|(v, &f)| (f - (1.0 - (v[0] * v[0] + v[1] * v[1])) / 4.0).abs())
        .fold(0.0f64, f64::max);
    assert!(
        worst <= 0.01 * max_f,
        "pointwise deviation {worst:.2e} within 1% of the peak {max_f:.3}"
    );
    assert!(
        (sol.c_mean - 0.5).abs() <= 0.01 * 0.5,
        "mean boundary flux 0.5 within 1%: got {}",
        sol.c_mean
    );
    assert!(
        sol.constancy_score < 1e-2,
        "boundary flux is constant to within 1e-2: got {}",
        sol.constancy_score
    );
}

// ---------------------------------------------------------------------------
// 4. structural identities, exact to rounding

#[test]
fn structural_identities_hold_to_rounding() {
    // duality: degree-0 and degree-2 quotient spectra coincide on flat meshes
    for tag in [DISK, SQUARE, ANNULUS] {
        let mesh = gen_domain(tag, 0.25).expect("domain meshes");
        let q0 = solve_kmode(&bs_harmonic_quotient(&mesh, 0).unwrap(), 4, DEFAULT_TOL)
            .expect("degree-0 solves");
        let q2 = solve_kmode(&bs_harmonic_quotient(&mesh, 2).unwrap(), 4, DEFAULT_TOL)
            .expect("degree-2 solves");
        for (a, b) in q0.eigenvalues.iter().zip(&q2.eigenvalues) {
            let rel = (a - b).abs() / b.abs().max(1e-300);
            assert!(rel <= 1e-10, "duality on {tag:?}: {a} vs {b} (rel {rel:.2e})");
        }
    }

    // flat coincidence: deduplicated degree-1 quotients equal the degree-0 ones
    for tag in [DISK, SQUARE, ANNULUS] {
        let report = single_report(tag, TheoremId::FlatCoincidence, 0.25);
        assert_eq!(
            report.verdict,
            Verdict::Equality,
            "component folding on {}: margin {:+.3e}",
            report.domain,
            report.margin
        );
        assert!(
            report.margin.abs() <= 1e-8 * report.rhs.abs().max(1.0),
            "spectra coincide to 1e-8 on {}: {:+.3e}",
            report.domain,
            report.margin
        );
    }

    // zero penalty is assembled identically to the natural problem
    let mesh = gen_domain(DISK, 0.3).expect("disk meshes");
    for degree in [0u8, 1, 2] {
        let robin0 =
            assemble(ProblemSpec { problem: Problem::Robin { tau: 0.0 }, degree }, &mesh)
                .expect("zero-penalty assembles");
        let natural = assemble(ProblemSpec { problem: Problem::Neumann, degree }, &mesh)
            .expect("natural problem assembles");
        let (a0, b0) = robin0.densify();
        let (a1, b1) = natural.densify();
        assert_eq!(a0, a1, "stiffness entries identical at degree {degree}");
        assert_eq!(b0, b1, "mass entries identical at degree {degree}");
    }

    // boundary response kernels: constants on the disk at degree 0, nothing
    // at degree 1, and one circulating field on the annulus at degree 1
    let kernel_dim = |tag: DomainTag, degree: u8| -> usize {
        let mesh = gen_domain(tag, 0.25).expect("domain meshes");
        let pencil = assemble(ProblemSpec { problem: Problem::Dtn, degree }, &mesh)
            .expect("boundary response assembles");
        let k = 4.min(pencil.dim());
        let spectrum = solve_smallest(&pencil, k, DEFAULT_TOL).expect("spectrum solves");
        let scale = spectrum.eigenvalues.last().unwrap().abs().max(1.0);
        spectrum.eigenvalues.iter().filter(|v| v.abs() <= 1e-8 * scale).count()
    };
    assert_eq!(kernel_dim(DISK, 0), 1, "disk functions: constants only");
    assert_eq!(kernel_dim(DISK, 1), 0, "disk one-forms: trivial kernel");
    assert_eq!(kernel_dim(ANNULUS, 1), 1, "annulus one-forms: one circulating field");
}

// ---------------------------------------------------------------------------
// 5. solver cross-validation

#[test]
fn iterative_and_dense_eigensolvers_cross_validate() {
    let combos: Vec<(Problem, u8)> = [
        Problem::Dirichlet,
        Problem::Neumann,
        Problem::Robin { tau: 1.0 },
        Problem::Dtn,
        Problem::BiharmonicSteklov,
    ]
    .into_iter()
    .flat_map(|problem| [0u8, 1, 2].map(|degree| (problem, degree)))
    .filter(|(problem, degree)| !(matches!(problem, Problem::Dtn) && *degree == 2))
    .collect();

    let mut checked = 0;
    for tag in [DISK, ANNULUS] {
        let mesh = gen_domain(tag, 0.35).expect("domain meshes");
        for &(problem, degree) in &combos {
            let pencil = assemble(ProblemSpec { problem, degree }, &mesh)
                .expect("every listed combination assembles");
            if pencil.dim() > 1500 {
                continue;
            }
            let k = 4.min(pencil.dim());
            let iterative = if matches!(problem, Problem::BiharmonicSteklov) {
                solve_kmode(&pencil, k, DEFAULT_TOL)
            } else {
                solve_smallest(&pencil, k, DEFAULT_TOL)
            }
            .expect("iterative solve succeeds");
            let dense = dense_reference(&pencil, k).expect("dense solve succeeds");
            for (i, (l, d)) in
                iterative.eigenvalues.iter().zip(&dense.eigenvalues).enumerate()
            {
                let tol = 1e-8 * d.abs().max(1.0);
                assert!(
                    (l - d).abs() <= tol,
                    "{:?} degree {} on {:?}, eigenvalue {}: {l} vs {d}",
                    problem,
                    degree,
                    tag,
                    i
                );
            }
            checked += 1;
        }
    }
    assert!(checked >= 24, "the cross-validation actually covered the matrix: {checked}");

    // The two independent fourth-order discretizations approximate the same
    // quotient but at different rates (the mixed route is first-order, the
    // quotient route second-order), so the 1% agreement is between their
    // extrapolated values.
    for tag in [DISK, SQUARE] {
        let meshes = ladder(tag, 0.3, 4);
        let per_route = |use_mixed: bool| -> Vec<f64> {
            meshes
                .iter()
                .map(|m| {
                    let pencil = if use_mixed {
                        assemble(
                            ProblemSpec { problem: Problem::BiharmonicSteklov, degree: 0 },
                            m,
                        )
                        .expect("mixed form assembles")
                    } else {
                        bs_harmonic_quotient(m, 0).expect("quotient form assembles")
                    };
                    solve_kmode(&pencil, 1, DEFAULT_TOL).unwrap().eigenvalues[0]
                })
                .collect()
        };
        let q_mixed = extrapolated(&per_route(true));
        let q_harm = extrapolated(&per_route(false));
        let rel = (q_mixed - q_harm).abs() / q_harm;
        assert!(rel <= 0.01, "routes agree on {tag:?}: {q_mixed} vs {q_harm} (rel {rel:.2e})");
    }
}

// ---------------------------------------------------------------------------
// 6. inequality suites (one gate per checker)

#[test]
fn cap_spectra_respect_the_scaled_sum_inequality() {
    for tag in [SMALL_CAP, HEMISPHERE] {
        assert_upholds(&single_report(tag, TheoremId::SphereInequality, 0.2));
    }
}

#[test]
fn penalty_spectra_stay_inside_their_sandwich() {
    for tag in [DISK, ANNULUS] {
        for report in reports_for(tag, TheoremId::RobinSandwich, 0.2) {
            assert_upholds(&report);
        }
    }
}

#[test]
fn closed_form_penalty_bounds_hold_on_both_routes() {
    // kernel route (projection around the circulating field)
    assert_upholds(&single_report(ANNULUS, TheoremId::RobinDirichletNeumann, 0.2));
    // kernel-free route (displayed closed form) — red until the estimate is
    // repaired; the margin is refinement-stable and far outside the error bar
    assert_upholds(&single_report(DISK, TheoremId::RobinDirichletNeumann, 0.2));
}

#[test]
fn the_curvature_gap_bound_holds_on_smooth_domains() {
    for tag in [DISK, ELLIPSE] {
        assert_upholds(&single_report(tag, TheoremId::RobinGap, 0.2));
    }
}

#[test]
fn the_reciprocal_penalty_bound_holds_for_low_degrees() {
    let mut disk_degrees = Vec::new();
    for tag in [DISK, SQUARE] {
        for report in reports_for(tag, TheoremId::RobinBs, 0.2) {
            assert_upholds(&report);
            if tag == DISK {
                disk_degrees.extend(report.p.iter().copied());
            }
        }
    }
    disk_degrees.sort_unstable();
    assert_eq!(disk_degrees, vec![0, 1], "disk covers both low degrees");
}

#[test]
fn the_boundary_response_ratio_bound_holds_on_the_disk() {
    assert_upholds(&single_report(DISK, TheoremId::DtnRatio, 0.2));
}

// ---------------------------------------------------------------------------
// 7. classical oracles

#[test]
fn classical_disk_spectra_match_their_oracles() {
    // fixed-boundary fundamental tone: first Bessel root squared, within 1%
    let per_level: Vec<f64> = ladder(DISK, 0.3, 3)
        .iter()
        .map(|m| {
            let pencil =
                assemble(ProblemSpec { problem: Problem::Dirichlet, degree: 0 }, m).unwrap();
            solve_smallest(&pencil, 1, DEFAULT_TOL).unwrap().eigenvalues[0]
        })
        .collect();
    let lambda1 = extrapolated(&per_level);
    assert!(
        (lambda1 - BESSEL_J01_SQ).abs() <= 0.01 * BESSEL_J01_SQ,
        "fundamental tone within 1% of {BESSEL_J01_SQ}: got {lambda1}"
    );

    // boundary response on functions: {0, 1, 1, 2, 2} within 2%
    let mesh = gen_domain(DISK, 0.15).expect("disk meshes");
    let pencil = assemble(ProblemSpec { problem: Problem::Dtn, degree: 0 }, &mesh).unwrap();
    let nu = solve_smallest(&pencil, 5, DEFAULT_TOL).unwrap().eigenvalues;
    let targets = [0.0, 1.0, 1.0, 2.0, 2.0];
    for (i, (v, t)) in nu.iter().zip(&targets).enumerate() {
        assert!(
            (v - t).abs() <= 0.02 * t.max(1.0),
            "boundary response value {i}: {v} vs {t} (spectrum {nu:?})"
        );
    }
}

// ---------------------------------------------------------------------------
// 8. determinism of the full verification suite

#[test]
fn repeated_full_verification_is_byte_identical() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = dir.path().join("suite.json");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let status = Command::new(env!("CARGO_BIN_EXE_steklab"))
            .args(["verify", "--suite", "all", "--out", out.to_str().unwrap()])
            .output()
            .expect("binary runs");
        runs.push((status.status.code(), fs::read(&out).expect("report written")));
    }
    assert_eq!(runs[0].0, runs[1].0, "both runs exit the same way");
    assert_eq!(
        runs[0].1, runs[1].1,
        "the full suite is reproducible byte for byte"
    );
}
