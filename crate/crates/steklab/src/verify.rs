//! Mechanical checks of the eigenvalue comparisons: each checker measures both
//! sides of one inequality (or equality) on a ladder of meshes, extrapolates
//! where the statement lives in the limit, and grades the margin against an
//! explicit error bar. Reports carry every number needed to replay the run.
//!
//! Conventions shared by all checkers:
//! - every statement is arranged so that it reads `lhs ≤ rhs`; `margin = rhs − lhs`,
//!   so a nonnegative margin means the comparison holds;
//! - `EQUALITY` is claimed when the margin closes within three error bars and
//!   the statement has an equality case; `PASS` needs the margin to clear the
//!   error bar; a margin below the negative error bar is a `FAIL`; anything in
//!   between is `INCONCLUSIVE`;
//! - hypothesis failures measured from the mesh (corners, nonpositive boundary
//!   curvature, a domain that is not harmonic) produce `SKIPPED` with the
//!   measured reason, never a silent pass.

use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assembly::{
    assemble, bs_harmonic_quotient, scalar_building_blocks, AssemblyError, OperatorPencil,
    Problem, ProblemSpec,
};
use crate::eig::{
    richardson, solve_kmode, solve_smallest, EigError, ExtrapolatedValue, RichardsonStatus,
    Spectrum,
};
use crate::geom::{bs_constant, geometry_report, theta_integral, GeomError};
use crate::global_seed;
use crate::mesh::{format_fmesh, gen_domain, refine, DomainTag, MeshError, SimplicialMesh};
use crate::serrin::{harmonic_domain_score, SerrinError};
use crate::sparse::{Csr, SkylineLdl, SparseError, Triplets};
use crate::whitney::{boundary_trace_gram, edge_complex, form_energy, mass_m1, EdgeComplex};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Eig(#[from] EigError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Serrin(#[from] SerrinError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

// ---------------------------------------------------------------------------
// report schema

/// The checkable statements, in canonical report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    UpperBoundRatio,
    ThetaLowerBound,
    HodgeDuality,
    FlatCoincidence,
    SphereInequality,
    RobinSandwich,
    RobinDirichletNeumann,
    RobinGap,
    RobinBs,
    DtnRatio,
}

impl TheoremId {
    pub const ALL: [TheoremId; 10] = [
        TheoremId::UpperBoundRatio,
        TheoremId::ThetaLowerBound,
        TheoremId::HodgeDuality,
        TheoremId::FlatCoincidence,
        TheoremId::SphereInequality,
        TheoremId::RobinSandwich,
        TheoremId::RobinDirichletNeumann,
        TheoremId::RobinGap,
        TheoremId::RobinBs,
        TheoremId::DtnRatio,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremId::UpperBoundRatio => "upper_bound_ratio",
            TheoremId::ThetaLowerBound => "theta_lower_bound",
            TheoremId::HodgeDuality => "hodge_duality",
            TheoremId::FlatCoincidence => "flat_coincidence",
            TheoremId::SphereInequality => "sphere_inequality",
            TheoremId::RobinSandwich => "robin_sandwich",
            TheoremId::RobinDirichletNeumann => "robin_dirichlet_neumann",
            TheoremId::RobinGap => "robin_gap",
            TheoremId::RobinBs => "robin_bs",
            TheoremId::DtnRatio => "dtn_ratio",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TheoremId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TheoremId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown check {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Equality,
    Inconclusive,
    Skipped,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Equality => "EQUALITY",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Skipped => "SKIPPED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One measured comparison inside a report (a mesh level, a penalty value,
/// a spectrum index, …) with its own margin and grade.
#[derive(Debug, Clone, Serialize)]
pub struct CaseLine {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub error: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    pub h_list: Vec<f64>,
    pub seeds: Vec<u64>,
    pub hashes: Vec<String>,
    pub cases: Vec<CaseLine>,
    pub notes: Vec<String>,
}

/// Outcome of one checker on one domain. `margin = rhs − lhs` with the
/// statement arranged as `lhs ≤ rhs`, so margins at or above zero mean the
/// comparison holds; `tolerance` is the error bar the verdict was graded
/// against.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub theorem_id: TheoremId,
    pub domain: String,
    pub p: Vec<u8>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub meta: ReportMeta,
}

impl TheoremReport {
    /// One-line rendering for terminal output.
    pub fn summary_line(&self) -> String {
        let ps: Vec<String> = self.p.iter().map(|d| d.to_string()).collect();
        match self.verdict {
            Verdict::Skipped => format!(
                "{:<24} {:<18} p=[{}] SKIPPED ({})",
                self.theorem_id,
                self.domain,
                ps.join(","),
                self.meta.notes.first().map(String::as_str).unwrap_or("")
            ),
            _ => format!(
                "{:<24} {:<18} p=[{}] {} margin={:+.3e} (err {:.1e})",
                self.theorem_id,
                self.domain,
                ps.join(","),
                self.verdict,
                self.margin,
                self.tolerance
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// suite configuration and mesh ladders

/// Knobs shared by every checker. The defaults match the standard suite:
/// a coarse target edge length refined twice, five spectrum entries where a
/// spectrum is compared, and the documented constancy threshold for deciding
/// whether a domain admits a constant-flux solution.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteConfig {
    pub h: f64,
    pub refinements: usize,
    pub spectrum_depth: usize,
    pub harmonic_threshold: f64,
    pub solver_tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            h: 0.2,
            refinements: 3,
            spectrum_depth: 5,
            harmonic_threshold: crate::serrin::DEFAULT_HARMONIC_THRESHOLD,
            solver_tol: crate::eig::DEFAULT_TOL,
        }
    }
}

/// A domain meshed at `levels` nested resolutions (each level quarters the
/// triangles of the previous one), with content hashes for replay.
#[derive(Debug, Clone)]
pub struct MeshLadder {
    pub domain: DomainTag,
    pub meshes: Vec<SimplicialMesh>,
    pub h_list: Vec<f64>,
    pub hashes: Vec<String>,
}

impl MeshLadder {
    pub fn generate(tag: DomainTag, h: f64, levels: usize) -> Result<Self, VerifyError> {
        let levels = levels.max(1);
        let mut meshes = Vec::with_capacity(levels);
        meshes.push(gen_domain(tag, h)?);
        while meshes.len() < levels {
            let next = refine(meshes.last().expect("nonempty ladder"));
            meshes.push(next);
        }
        let h_list = meshes.iter().map(|m| m.h_target).collect();
        let hashes = meshes.iter().map(mesh_hash).collect();
        Ok(MeshLadder { domain: tag, meshes, h_list, hashes })
    }

    pub fn finest(&self) -> &SimplicialMesh {
        self.meshes.last().expect("nonempty ladder")
    }
}

/// First 16 hex digits of the SHA-256 of the mesh in its text format.
pub fn mesh_hash(mesh: &SimplicialMesh) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format_fmesh(mesh).as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Stable report label for a domain; caps carry their opening angle so that
/// several caps can coexist in one suite.
pub fn domain_label(tag: DomainTag) -> String {
    match tag {
        DomainTag::Cap { alpha } => format!("cap(alpha={alpha:.6})"),
        other => other.name().to_string(),
    }
}

// ---------------------------------------------------------------------------
// grading helpers

/// Extrapolate a ladder of measurements. Three or more levels feed the last
/// three into Richardson extrapolation; two levels use their difference as
/// the error bar; a single level gets a nominal two-percent bar so nothing
/// pretends to be converged.
fn extrapolate(values: &[f64]) -> ExtrapolatedValue {
    assert!(!values.is_empty(), "extrapolate needs at least one level");
    match values.len() {
        1 => ExtrapolatedValue {
            value: values[0],
            error_estimate: 0.02 * values[0].abs().max(1e-12),
            observed_order: None,
            inputs: [values[0]; 3],
            status: RichardsonStatus::NonMonotone,
        },
        2 => ExtrapolatedValue {
            value: values[1],
            error_estimate: (values[1] - values[0]).abs().max(1e-15),
            observed_order: None,
            inputs: [values[0], values[0], values[1]],
            status: RichardsonStatus::NonMonotone,
        },
        n => richardson(values[n - 3], values[n - 2], values[n - 1]),
    }
}

/// Grade a margin against an error bar. Equality-capable statements close to
/// `EQUALITY` within three bars; beyond the bar the sign decides; inside the
/// bar nothing can be claimed.
fn resolved_verdict(margin: f64, err: f64, equality_ok: bool) -> Verdict {
    if equality_ok && margin.abs() <= 3.0 * err {
        Verdict::Equality
    } else if margin > err {
        Verdict::Pass
    } else if margin < -err {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// Grade a structural identity: inside the tolerance it IS the claimed
/// equality, outside it is broken — there is no in-between for statements
/// that hold by construction.
fn exactness_verdict(margin_abs: f64, tol: f64) -> Verdict {
    if margin_abs <= tol {
        Verdict::Equality
    } else {
        Verdict::Fail
    }
}

/// Worst-case combination of case verdicts, ignoring skipped cases: any FAIL
/// fails the report, any INCONCLUSIVE leaves it unresolved, all-EQUALITY is
/// an equality, otherwise PASS.
fn combine(cases: &[CaseLine]) -> Verdict {
    let graded: Vec<Verdict> =
        cases.iter().map(|c| c.verdict).filter(|v| *v != Verdict::Skipped).collect();
    if graded.is_empty() {
        return Verdict::Skipped;
    }
    if graded.contains(&Verdict::Fail) {
        Verdict::Fail
    } else if graded.contains(&Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else if graded.iter().all(|v| *v == Verdict::Equality) {
        Verdict::Equality
    } else {
        Verdict::Pass
    }
}

/// The non-skipped case with the smallest margin: the binding comparison.
fn tightest(cases: &[CaseLine]) -> Option<&CaseLine> {
    cases
        .iter()
        .filter(|c| c.verdict != Verdict::Skipped)
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
}

/// Collapse an ascending value list into representatives of its relative
/// clusters (multiplicities ignored).
fn dedup_cluster(values: &[f64], rel: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in values {
        match out.last() {
            Some(&u) if (v - u).abs() <= rel * v.abs().max(u.abs()).max(1e-300) => {}
            _ => out.push(v),
        }
    }
    out
}

/// Threshold separating "numerically zero" eigenvalues (the harmonic kernel)
/// from genuinely positive ones.
fn kernel_cut(value_scale: f64, values: &[f64]) -> f64 {
    let top = values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    1e-8 * value_scale.abs().max(top).max(1e-300)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad(m: &Csr, x: &[f64]) -> f64 {
    let mut y = vec![0.0; x.len()];
    m.matvec(x, &mut y);
    dot(x, &y)
}

fn bilin(m: &Csr, x: &[f64], y: &[f64]) -> f64 {
    let mut my = vec![0.0; y.len()];
    m.matvec(y, &mut my);
    dot(x, &my)
}

fn scatter(values: &[f64], idx: &[u32], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (v, &i) in values.iter().zip(idx) {
        out[i as usize] = *v;
    }
    out
}

fn case(label: String, lhs: f64, rhs: f64, error: f64, verdict: Verdict) -> CaseLine {
    CaseLine { label, lhs, rhs, margin: rhs - lhs, error, verdict }
}

fn meta_for(ladder: &MeshLadder, cases: Vec<CaseLine>, notes: Vec<String>) -> ReportMeta {
    ReportMeta {
        h_list: ladder.h_list.clone(),
        seeds: vec![global_seed()],
        hashes: ladder.hashes.clone(),
        cases,
        notes,
    }
}

fn skipped_report(
    id: TheoremId,
    ladder: &MeshLadder,
    p: Vec<u8>,
    reason: String,
) -> TheoremReport {
    TheoremReport {
        theorem_id: id,
        domain: domain_label(ladder.domain),
        p,
        lhs: 0.0,
        rhs: 0.0,
        margin: 0.0,
        tolerance: 0.0,
        verdict: Verdict::Skipped,
        meta: meta_for(ladder, Vec::new(), vec![reason]),
    }
}

// ---------------------------------------------------------------------------
// shared solves

/// First `k` quotient values of the fourth-order boundary problem.
fn bs_values(mesh: &SimplicialMesh, degree: u8, k: usize, tol: f64) -> Result<Vec<f64>, VerifyError> {
    let pencil = bs_harmonic_quotient(mesh, degree)?;
    Ok(solve_kmode(&pencil, k, tol)?.eigenvalues)
}

fn solved(
    mesh: &SimplicialMesh,
    problem: Problem,
    degree: u8,
    k: usize,
    tol: f64,
) -> Result<(OperatorPencil, Spectrum), VerifyError> {
    let pencil = assemble(ProblemSpec { problem, degree }, mesh)?;
    let spec = solve_smallest(&pencil, k, tol)?;
    Ok((pencil, spec))
}

fn problem_values(
    mesh: &SimplicialMesh,
    problem: Problem,
    degree: u8,
    k: usize,
    tol: f64,
) -> Result<Vec<f64>, VerifyError> {
    Ok(solved(mesh, problem, degree, k, tol)?.1.eigenvalues)
}

/// Edge-element matrices of the normal-constrained 1-form family on one mesh.
struct OneFormSpace {
    ec: EdgeComplex,
    energy: Csr,
    mass: Csr,
    trace: Vec<f64>,
}

fn one_form_space(mesh: &SimplicialMesh) -> OneFormSpace {
    let ec = edge_complex(mesh);
    let energy = form_energy(mesh, &ec);
    let mass = mass_m1(mesh, &ec);
    let trace = boundary_trace_gram(mesh, &ec);
    OneFormSpace { ec, energy, mass, trace }
}

/// The infinite-penalty member of the 1-form family, computed in the same
/// edge space by restricting to interior edges (zero boundary circulations).
/// Returns the value and the minimizer extended by zero.
fn zero_trace_one_form(
    space: &OneFormSpace,
    tol: f64,
) -> Result<(f64, Vec<f64>), VerifyError> {
    let keep = &space.ec.interior_edge_ids;
    let a = space.energy.submatrix(keep, keep);
    let b = space.mass.submatrix(keep, keep);
    let pencil = OperatorPencil::from_matrices("one-form zero-circulation limit", a, b, true);
    let spec = solve_smallest(&pencil, 1, tol)?;
    let full = scatter(&spec.eigenvectors[0], keep, space.ec.n_edges());
    Ok((spec.eigenvalues[0], full))
}

/// Dense boundary Schur complement S = K_bb − K_bi K_ii⁻¹ K_ib of a symmetric
/// energy matrix, assembled column by column. Boundary sets are small (one
/// mesh boundary), so the dense passes stay cheap.
fn explicit_schur(energy: &Csr, bnd: &[u32], int: &[u32]) -> Result<Csr, VerifyError> {
    let kii = energy.submatrix(int, int);
    let kbi = energy.submatrix(bnd, int);
    let kbb = energy.submatrix(bnd, bnd);
    let factor = SkylineLdl::factor_rcm(&kii)?;
    let nb = bnd.len();
    let ni = int.len();
    let mut t = Triplets::new(nb, nb);
    let mut col = vec![0.0; ni];
    let mut reach = vec![0.0; nb];
    for j in 0..nb {
        col.iter_mut().for_each(|v| *v = 0.0);
        // column j of K_ib is row j of K_bi (the energy is symmetric)
        let (cs, vs) = kbi.row(j);
        for (c, v) in cs.iter().zip(vs) {
            col[*c as usize] = *v;
        }
        let w = factor.solve(&col);
        reach.iter_mut().for_each(|v| *v = 0.0);
        kbi.matvec(&w, &mut reach);
        let mut s_col = vec![0.0; nb];
        let (cs, vs) = kbb.row(j);
        for (c, v) in cs.iter().zip(vs) {
            s_col[*c as usize] += *v;
        }
        for i in 0..nb {
            let v = s_col[i] - reach[i];
            if v != 0.0 {
                // split symmetrically so rounding cannot skew the matrix
                t.push(i, j, 0.5 * v);
                t.push(j, i, 0.5 * v);
            }
        }
    }
    Ok(t.to_csr())
}

/// Dimension of the zero-eigenvalue space the natural (zero-penalty) problem
/// is expected to carry: constants for functions, one circulating field per
/// hole for 1-forms, nothing in the top degree (where the normal constraint
/// already pins the boundary value).
fn expected_kernel_dim(tag: DomainTag, degree: u8) -> usize {
    match degree {
        0 => 1,
        1 => usize::from(matches!(tag, DomainTag::Annulus { .. })),
        _ => 0,
    }
}

// ---------------------------------------------------------------------------
// checkers

/// q₁ ≤ Vol(∂M)/Vol(M), attained exactly when the domain admits a
/// constant-flux torsion solution. Both sides are measured per level and the
/// margin is extrapolated; the constancy score of the torsion flux decides
/// whether equality is the expected outcome, and the verdict is demoted to
/// INCONCLUSIVE if the two disagree.
pub fn check_upper_bound_ratio(
    ladder: &MeshLadder,
    degree: u8,
    cfg: &SuiteConfig,
) -> Result<TheoremReport, VerifyError> {
    let mut q_vals = Vec::new();
    let mut ratio_vals = Vec::new();
    let mut margins = Vec::new();
    for mesh in &ladder.meshes {
        let q1 = bs_values(mesh, degree, 1, cfg.solver_tol)?[0];
        let ratio = geometry_report(mesh).ratio;
        q_vals.push(q1);
        ratio_vals.push(ratio);
        margins.push(ratio - q1);
    }
    let q_ext = extrapolate(&q_vals);
    let r_ext = extrapolate(&ratio_vals);
    let m_ext = extrapolate(&margins);
    let err = m_ext.error_estimate.max(1e-10 * r_ext.value.abs());
    let mut verdict = resolved_verdict(m_ext.value, err, true);
    let score = harmonic_domain_score(ladder.finest())?;
    let mut notes = vec![format!(
        "constant-flux score {:.3e} (threshold {:.1e})",
        score, cfg.harmonic_threshold
    )];
    if verdict == Verdict::Equality && score >= cfg.harmonic_threshold {
        verdict = Verdict::Inconclusive;
        notes.push(
            "margin closes although the torsion flux is far from constant; unresolved".into(),
        );
    }
    if verdict == Verdict::Pass && score < cfg.harmonic_threshold {
        verdict = Verdict::Inconclusive;
        notes.push(
            "strict margin although the torsion flux is constant; the bound should close".into(),
        );
    }
    let cases: Vec<CaseLine> = (0..ladder.meshes.len())
        .map(|l| {
            case(
                format!("level {l} (h={:.4})", ladder.h_list[l]),
                q_vals[l],
                ratio_vals[l],
                err,
                resolved_verdict(margins[l], err, true),
            )
        })
        .collect();
    Ok(TheoremReport {
        theorem_id: TheoremId::UpperBoundRatio,
        domain: domain_label(ladder.domain),
        p: vec![degree],
        lhs: q_ext.value,
        rhs: r_ext.value,
        margin: m_ext.value,
        tolerance: err,
        verdict,
        meta: meta_for(ladder, cases, notes),
    })
}

/// q₁ ≥ 1/∫₀ᴿ Θ(r) dr with Θ built from the measured curvature lower bound
/// and inner radius. The profile vanishes at the inner radius exactly when
/// the bound is attained, which makes the bound stationary against the O(h)
/// error of the distance transform in precisely those cases.
pub fn check_theta_lower_bound(
    ladder: &MeshLadder,
    degree: u8,
    cfg: &SuiteConfig,
) -> Result<TheoremReport, VerifyError> {
    if geometry_report(ladder.finest()).curvature().is_err() {
        return Ok(skipped_report(
            TheoremId::ThetaLowerBound,
            ladder,
            vec![degree],
            "boundary has corners: no pointwise curvature infimum".into(),
        ));
    }
    let mut bound_vals = Vec::new();
    let mut q_vals = Vec::new();
    let mut margins = Vec::new();
    for mesh in &ladder.meshes {
        let geo = geometry_report(mesh);
        let curv = geo.curvature()?;
        let bound = 1.0 / theta_integral(geo.k, curv.h0, geo.inner_radius, 2);
        let q1 = bs_values(mesh, degree, 1, cfg.solver_tol)?[0];
        bound_vals.push(bound);
        q_vals.push(q1);
        margins.push(q1 - bound);
    }
    let b_ext = extrapolate(&bound_vals);
    let q_ext = extrapolate(&q_vals);
    let m_ext = extrapolate(&margins);
    let err = m_ext.error_estimate.max(1e-10 * q_ext.value.abs());
    let verdict = resolved_verdict(m_ext.value, err, true);
    let cases: Vec<CaseLine> = (0..ladder.meshes.len())
        .map(|l| {
            case(
                format!("level {l} (h={:.4})", ladder.h_list[l]),
                bound_vals[l],
                q_vals[l],
                err,
                resolved_verdict(margins[l], err, true),
            )
        })
        .collect();
    let notes = vec![
        "comparison profile truncated at its first zero".into(),
        "curvature term of the second-order identity is nonnegative on flat charts and round caps".into(),
    ];
    Ok(TheoremReport {
        theorem_id: TheoremId::ThetaLowerBound,
        domain: domain_label(ladder.domain),
        p: vec![degree],
        lhs: b_ext.value,
        rhs: q_ext.value,
        margin: m_ext.value,
        tolerance: err,
        verdict,
        meta: meta_for(ladder, cases, notes),
    })
}

/// The star pairs the degree-p and degree-(n−p) spectra. On flat charts the
/// two extreme-degree assemblies produce identical pencils, so the spectra
/// must agree to solver accuracy on a single mesh; on caps the dual problems
/// carry reciprocal conformal weights and only agree in the limit, so the
/// comparison is made between extrapolated values.
pub fn check_hodge_duality(
    ladder: &MeshLadder,
    degrees: (u8, u8),
    k: usize,
    cfg: &SuiteConfig,
) -> Result<TheoremReport, VerifyError> {
    let (pa, pb) = degrees;
    let finest = ladder.finest();
    let mut cases = Vec::new();
    let mut notes = Vec::new();
    if pa == pb {
        let qs = bs_values(finest, pa, k, cfg.solver_tol)?;
        for (i, q) in qs.iter().enumerate() {
            cases.push(case(format!("q_{} pairs with itself", i + 1), *q, *q, 0.0, Verdict::Equality));
        }
        notes.push("middle degree is its own star dual".into());
        let q0 = qs.first().copied().unwrap_or(0.0);
        return Ok(TheoremReport {
            theorem_id: TheoremId::HodgeDuality,
            domain: domain_label(ladder.domain),
            p: vec![pa, pb],
            lhs: q0,
            rhs: q0,
            margin: 0.0,
            tolerance: 0.0,
            verdict: Verdict::Equality,
            meta: meta_for(ladder, cases, notes),
        });
    }
    let (head_lhs, head_rhs, head_tol);
    if finest.metric.is_flat() {
        let qa = bs_values(finest, pa, k, cfg.solver_tol)?;
        let qb = bs_values(finest, pb, k, cfg.solver_tol)?;
        let m = qa.len().min(qb.len());
        let mut worst = 0usize;
        let mut worst_rel = -1.0f64;
        for i in 0..m {
            let scale = qa[i].abs().max(qb[i].abs()).max(1e-300);
            let tol = 1e-10 * scale;
            let diff = (qb[i] - qa[i]).abs();
            cases.push(case(
                format!("q_{} across the star", i + 1),
                qa[i],
                qb[i],
                tol,
                exactness_verdict(diff, tol),
            ));
            if diff / scale > worst_rel {
                worst_rel = diff / scale;
                worst = i;
            }
        }
        notes.push("flat chart: the extreme-degree assemblies build the same matrices".into());
        let scale = qa[worst].abs().max(qb[worst].abs()).max(1e-300);
        head_lhs = qa[worst];
        head_rhs = qb[worst];
        head_tol = 1e-10 * scale;
    } else {
        let mut qa_levels: Vec<Vec<f64>> = Vec::new();
        let mut qb_levels: Vec<Vec<f64>> = Vec::new();
        for mesh in &ladder.meshes {
            qa_levels.push(bs_values(mesh, pa, k, cfg.solver_tol)?);
            qb_levels.push(bs_values(mesh, pb, k, cfg.solver_tol)?);
        }
        let m = qa_levels.iter().chain(&qb_levels).map(Vec::len).min().unwrap_or(0);
        let mut worst = (0.0, 0.0, 0.0);
        let mut worst_rel = -1.0f64;
        for i in 0..m {
            let col_a: Vec<f64> = qa_levels.iter().map(|v| v[i]).collect();
            let col_b: Vec<f64> = qb_levels.iter().map(|v| v[i]).collect();
            let ea = extrapolate(&col_a);
            let eb = extrapolate(&col_b);
            let scale = ea.value.abs().max(eb.value.abs()).max(1e-300);
            let tol = 1e-2 * scale;
            let err = ea.error_estimate + eb.error_estimate;
            let diff = (eb.value - ea.value).abs();
            let verdict = if diff <= tol {
                Verdict::Equality
            } else if diff <= tol + err {
                Verdict::Inconclusive
            } else {
                Verdict::Fail
            };
            cases.push(case(
                format!("q_{} extrapolated across the star", i + 1),
                ea.value,
                eb.value,
                tol,
                verdict,
            ));
            if diff / scale > worst_rel {
                worst_rel = diff / scale;
                worst = (ea.value, eb.value, tol);
            }
        }
        notes.push("round cap: reciprocal conformal weights; spectra agree in the limit".into());
        head_lhs = worst.0;
        head_rhs = worst.1;
        head_tol = worst.2;
    }
    let verdict = combine(&cases);
    Ok(TheoremReport {
        theorem_id: TheoremId::HodgeDuality,
        domain: domain_label(ladder.domain),
        p: vec![pa, pb],
        lhs: head_lhs,
        rhs: head_rhs,
        margin: head_rhs - head_lhs,
        tolerance: head_tol,
        verdict,
        meta: meta_for(ladder, cases, notes),
    })
}

/// On flat charts the 1-form problem decouples into two copies of the scalar
/// one, so the q-spectra coincide once multiplicities are ignored. Compared
/// on the finest mesh after clustering.
pub fn check_flat_coincidence(
    ladder: &MeshLadder,
    k: usize,
    cfg: &SuiteConfig,
) -> Result<TheoremReport, VerifyError> {
    if !ladder.finest().metric.is_flat() {
        return Ok(skipped_report(
            TheoremId::FlatCoincidence,
            ladder,
            vec![0, 1],
            "stated for flat charts where component fields decouple".into(),
        ));
    }
    let finest = ladder.finest();
    let q0 = bs_values(finest, 0, k + 2, cfg.solver_tol)?;
    let q1 = bs_values(finest, 1, 2 * k + 4, cfg.solver_tol)?;
    let d0 = dedup_cluster(&q0, 1e-6);
    let d1 = dedup_cluster(&q1, 1e-6);
    let m = d0.len().min(d1.len()).min(k);
    let mut cases = Vec::new();
    let mut worst = 0usize;
    let mut worst_rel = -1.0f64;
    for i in 0..m {
        let scale = d0[i].abs().max(d1[i].abs()).max(1e-300);
        let tol = 1e-8 * scale;
        let diff = (d1[i] - d0[i]).abs();
        cases.push(case(
            format!("distinct value {}", i + 1),
            d0[i],
            d1[i],
            tol,
            exactness_verdict(diff, tol),
        ));
        if diff / scale > worst_rel {
            worst_rel = diff / scale;
            worst = i;
        }
    }
    let notes = vec![
        format!(
            "{} scalar and {} one-form values collapsed to {} distinct entries each",
            q0.len(),
            q1.len(),
            m
        ),
        "each scalar mode appears in two Cartesian polarizations".into(),
    ];
    let scale = d0[worst].abs().max(d1[worst].abs()).max(1e-300);
    let verdict = combine(&cases);
    Ok(TheoremReport {
        theorem_id: TheoremId::FlatCoincidence,
        domain: domain_label(ladder.domain),
        p: vec![0, 1],
        lhs: d0[worst],
        rhs: d1[worst],
        margin: d1[worst] - d0[worst],
        tolerance: 1e-8 * scale,
        verdict,
        meta: meta_for(ladder, cases, notes),
    })
}

/// For domains inside the round sphere: q₁,₀ + q₁,₂ < C·q₁,₁ with the
/// dimensional constant C = 6 of a surface, always strict. The displayed and
/// proof-side coefficient choices coincide in the middle degree of a surface,
/// so one measured combination covers both.
pub fn check_sphere_inequality(
    ladder: &MeshLadder,
    cfg: &SuiteConfig,
) -> Result<TheoremReport, VerifyError> {
    if ladder.finest().metric.is_flat() {
        return Ok(skipped_report(
            TheoremId::SphereInequality,
            ladder,
            vec![0, 1, 2],
            "stated for domains inside the round sphere".into(),
        ));
    }
    let c = bs_constant(1, 2)?.value();
    let mut lhs_vals = Vec::new();
    let mut rhs_vals = Vec::new();
    let mut margins = Vec::new();
    let mut cases = Vec::new();
    for (l, mesh) in ladder.meshes.iter().enumerate() {
        let q0 = bs_values(mesh, 0, 1, cfg.solver_tol)?[0];
        let q1 = bs_values(mesh, 1, 1, cfg.solver_tol)?[0];
        let q2 = bs_values(mesh, 2, 1, cfg.solver_tol)?[0];
        let lhs = q0 + q2;
        let rhs = c * q1;
        lhs_vals.push(lhs);
        rhs_vals.push(rhs);
        margins.push(rhs - lhs);
        cases.push(case(
            format!(
                "level {l} (h={:.4}): q0={:.5}, q1={:.5}, q2={:.5}",
                ladder.h_list[l], q0, q1, q2
            ),
            lhs,
            rhs,
            0.0,
            Verdict::Pass,
        ));
    }
    let l_ext = extrapolate(&lhs_vals);
    let r_ext = extrapolate(&rhs_vals);
    let m_ext = extrapolate(&margins);
    let err = m_ext.error_estimate.max(1e-10 * r_ext.value.abs());
    for (c_line, m) in cases.iter_mut().zip(&margins) {
        c_line.error = err;
        c_line.verdict = resolved_verdict(*m, err, false);
    }
    let verdict = resolved_verdict(m_ext.value, err, false);
    let notes = vec![
        format!("dimensional constant C = {c} (exact rational)"),
        "displayed and proof-side coefficients coincide in the middle degree of a surface".into(),
        "the comparison is strict: a closing margin is reported as unresolved, not as equality".into(),
    ];
    Ok(TheoremReport {
        theorem_id: TheoremId::SphereInequality,
        domain: domain_label(ladder.domain),
        p: vec![0, 1, 2],
        lhs: l_ext.value,
        rhs: r_ext.value,
        margin: m_ext.value,
        tolerance: err,
        verdict,
        meta: meta_for(ladder, cases, notes),
    })
}

/// The penalized family interpolates the natural and zero-trace problems:
/// λ(0) = λ_N, λ(τ) is nondecreasing in τ, stays below the zero-trace value
/// computed in the same discrete space, and converges to it as τ → ∞. These
/// are exact finite-dimensional facts, so they are graded on the finest mesh
/// with solver-level slack.
pub fn check_robin_sandwich(
    ladder: &MeshLadder,
    degree: u8,
    taus: &[f64],
    cfg: &SuiteConfig,
) -> Result<TheoremReport, VerifyError> {
    if degree == 2 {
        return Ok(skipped_report(
            TheoremId::RobinSandwich,
            ladder,
            vec![degree],
            "top degree: the normal constraint already pins the boundary value".into(),
        ));
    }
    let mesh = ladder.finest();
    let tol = cfg.solver_tol;
    let mut taus: Vec<f64> = taus.iter().copied().filter(|t| *t > 0.0).collect();
    taus.sort_by(f64::total_cmp);
    let (npencil, nspec) = solved(mesh, Problem::Neumann, degree, 3, tol)?;
    let cut = kernel_cut(npencil.value_scale, &nspec.eigenvalues);
    let kdim = nspec.eigenvalues.iter().filter(|v| v.abs() <= cut).count();
    let lam_n = nspec.eigenvalues[0];
    let mut cases = Vec::new();
    let mut notes = Vec::new();

    // the zero-penalty member must literally be the natural problem
    let r0 = problem_values(mesh, Problem::Robin { tau: 0.0 }, degree, 3, tol)?;
    let mut worst_zero = 0.0f64;
    for (a, b) in r0.iter().zip(&nspec.eigenvalues) {
        worst_zero = worst_zero.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
    }
    cases.push(case(
        "zero-penalty member equals the natural problem (relative)".into(),
        worst_zero,
        1e-12,
        0.0,
        if worst_zero <= 1e-12 { Verdict::Pass } else { Verdict::Fail },
    ));

    // kernel bookkeeping
    let expected = expected_kernel_dim(ladder.domain, degree);
    cases.push(case(
        format!("kernel dimension of the zero-penalty problem (cut {cut:.1e})"),
        kdim as f64,
        expected as f64,
        0.0,
        if kdim == expected { Verdict::Pass } else { Verdict::Fail },
    ));

    // zero-trace member of the same family
    let lam_d = match degree {
        1 => {
            let space = one_form_space(mesh);
            notes.push(
                "zero-trace limit taken in the same edge space (interior circulations)".into(),
            );
            zero_trace_one_form(&space, tol)?.0
        }
        _ => problem_values(mesh, Problem::Dirichlet, degree, 1, tol)?[0],
    };
    let slack = 1e-8 * lam_d.abs().max(1e-300);

    let mut lam_taus = Vec::new();
    for &tau in &taus {
        lam_taus.push(problem_values(mesh, Problem::Robin { tau }, degree, 1, tol)?[0]);
    }
    for (i, &tau) in taus.iter().enumerate() {
        let lam = lam_taus[i];
        let inside = (lam - lam_n).min(lam_d - lam);
        cases.push(case(
            format!("inside the sandwich at tau={tau:.1e}"),
            -inside,
            0.0,
            slack,
            if inside >= -slack { Verdict::Pass } else { Verdict::Fail },
        ));
    }
    for i in 1..taus.len() {
        let step = lam_taus[i] - lam_taus[i - 1];
        cases.push(case(
            format!("monotone step tau={:.1e} -> {:.1e}", taus[i - 1], taus[i]),
            -step,
            0.0,
            slack,
            if step >= -slack { Verdict::Pass } else { Verdict::Fail },
        ));
    }
    if let Some(&lam_last) = lam_taus.last() {
        let gap = (lam_d - lam_last).abs();
        let tol_limit = 1e-3 * lam_d.abs().max(1e-300);
        cases.push(case(
            format!("large-penalty limit at tau={:.1e}", taus.last().copied().unwrap_or(0.0)),
            gap,
            tol_limit,
            0.0,
            if gap <= tol_limit { Verdict::Pass } else { Verdict::Fail },
        ));
    }
    if kdim > 0 {
        if let Some((&tau0, &lam0)) = taus.first().zip(lam_taus.first()) {
            cases.push(case(
                format!("penalty removes the kernel at tau={tau0:.1e}"),
                cut,
                lam0,
                0.0,
                if lam0 > cut { Verdict::Pass } else { Verdict::Fail },
            ));
        }
    }
    notes.push(
        "interpolation, monotonicity, and the limit are exact in a fixed discrete space".into(),
    );
    let verdict = combine(&cases);
    Ok(TheoremReport {
        theorem_id: TheoremId::RobinSandwich,
        domain: domain_label(ladder.domain),
        p: vec![degree],
        lhs: lam_n,
        rhs: lam_d,
        margin: lam_d - lam_n,
        tolerance: 1e-3 * lam_d.abs().max(1e-300),
        verdict,
        meta: meta_for(ladder, cases, notes),
    })
}

/// Two-sided control of the penalized value by its endpoints. With a
/// circulating kernel, projecting the zero-trace minimizer onto it bounds
/// 1/λ(τ) from below by 1/λ_D plus a penalty term — an exact variational
/// identity in the discrete space. Without a kernel, a closed-form
/// combination of λ_N, λ_D and the boundary mass ratio of the first natural
/// eigenfield is claimed to do the same; the checker measures that closed
/// form across the ladder together with the exact two-dimensional test-field
/// bound it is derived from, so a failing closed form is distinguishable
/// from a failing discretization. On the disk the natural 1-form value is
/// also pinned against its Bessel oracle.
pub fn check_robin_dirichlet_neumann(
    ladder: &MeshLadder,
    degree: u8,
    tau_projection: f64,
    taus: &[f64],
    cfg: &SuiteConfig,
) -> Result<TheoremReport, VerifyError> {
    if degree != 1 {
        return Ok(skipped_report(
            TheoremId::RobinDirichletNeumann,
            ladder,
            vec![degree],
            "exercised for the middle-degree family, where both routes are nontrivial".into(),
        ));
    }
    let mesh = ladder.finest();
    let tol = cfg.solver_tol;
    let space = one_form_space(mesh);
    let (npencil, nspec) = solved(mesh, Problem::Neumann, degree, 3, tol)?;
    let cut = kernel_cut(npencil.value_scale, &nspec.eigenvalues);
    let kdim = nspec.eigenvalues.iter().filter(|v| v.abs() <= cut).count();
    let (lam_d, mut omega_d) = zero_trace_one_form(&space, tol)?;
    let nrm = quad(&space.mass, &omega_d).sqrt();
    omega_d.iter_mut().for_each(|v| *v /= nrm);
    let mut cases = Vec::new();
    let mut notes = Vec::new();

    if kdim == 0 {
        cases.push(case(
            format!(
                "projection route: no circulating kernel (first natural value {:.3e})",
                nspec.eigenvalues[0]
            ),
            0.0,
            0.0,
            0.0,
            Verdict::Skipped,
        ));
    } else {
        // orthonormal kernel basis in the volume inner product
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for vec in nspec.eigenvectors.iter().take(kdim) {
            let mut v = vec.clone();
            for u in &basis {
                let c = bilin(&space.mass, &v, u);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
            let n2 = quad(&space.mass, &v);
            if n2 > 1e-24 {
                let s = n2.sqrt();
                v.iter_mut().for_each(|x| *x /= s);
                basis.push(v);
            }
        }
        let mut omega0 = vec![0.0; space.ec.n_edges()];
        for u in &basis {
            let c = bilin(&space.mass, &omega_d, u);
            omega0.iter_mut().zip(u).for_each(|(x, y)| *x += c * y);
        }
        let n0m = quad(&space.mass, &omega0);
        let n0b: f64 = space.trace.iter().zip(&omega0).map(|(g, v)| g * v * v).sum();
        let term = if n0m <= 1e-14 || n0b <= 1e-300 {
            notes.push(
                "kernel projection of the zero-trace minimizer is numerically zero; its term drops out"
                    .into(),
            );
            0.0
        } else {
            n0m * n0m / (tau_projection * n0b)
        };
        let lam_tau =
            problem_values(mesh, Problem::Robin { tau: tau_projection }, degree, 1, tol)?[0];
        let lhs = 1.0 / lam_d + term;
        let rhs = 1.0 / lam_tau;
        let err = 1e-6 * rhs.abs();
        cases.push(case(
            format!("projection route at tau={tau_projection:.1e}"),
            lhs,
            rhs,
            err,
            resolved_verdict(rhs - lhs, err, false),
        ));
    }

    let mut lam_n_levels: Vec<f64> = Vec::new();
    if kdim > 0 {
        cases.push(case(
            "gap route: the natural problem has a kernel".into(),
            0.0,
            0.0,
            0.0,
            Verdict::Skipped,
        ));
    } else {
        // the closed form lives in the continuum limit, so its margin is
        // measured per level and extrapolated; the raw test-field bound it
        // was derived from is an exact statement on every level and is
        // graded alongside it with solver-level slack
        let nt = taus.len();
        let mut bound_levels: Vec<Vec<f64>> = vec![Vec::new(); nt];
        let mut inv_levels: Vec<Vec<f64>> = vec![Vec::new(); nt];
        let mut tf_worst: Vec<f64> = vec![f64::INFINITY; nt];
        let mut tf_at_worst: Vec<(f64, f64)> = vec![(0.0, 0.0); nt];
        for mesh_l in &ladder.meshes {
            let space_l = one_form_space(mesh_l);
            let (_, nspec_l) = solved(mesh_l, Problem::Neumann, degree, 1, tol)?;
            let lam_n_l = nspec_l.eigenvalues[0];
            lam_n_levels.push(lam_n_l);
            let omega_n_l = &nspec_l.eigenvectors[0];
            let nn = quad(&space_l.mass, omega_n_l);
            let alpha_l = space_l.trace.iter().zip(omega_n_l).map(|(g, v)| g * v * v).sum::<f64>() / nn;
            let (lam_d_l, mut omega_d_l) = zero_trace_one_form(&space_l, tol)?;
            let dn = quad(&space_l.mass, &omega_d_l).sqrt();
            omega_d_l.iter_mut().for_each(|v| *v /= dn);
            let n_unit: Vec<f64> = omega_n_l.iter().map(|v| v / nn.sqrt()).collect();
            let c = bilin(&space_l.mass, &omega_d_l, &n_unit);
            let e = bilin(&space_l.energy, &omega_d_l, &n_unit);
            for (i, &tau) in taus.iter().enumerate() {
                let lam_tau = problem_values(mesh_l, Problem::Robin { tau }, degree, 1, tol)?[0];
                let inv = 1.0 / lam_tau;
                let denom = lam_n_l * (tau * alpha_l * lam_d_l + lam_n_l * (lam_d_l - lam_n_l));
                let bound = 1.0 / lam_n_l - tau * alpha_l * (lam_d_l - lam_n_l) / denom;
                bound_levels[i].push(bound);
                inv_levels[i].push(inv);
                // smallest eigenvalue of the pencil on span{omega_d, omega_n}
                let (a11, a12, a22) = (lam_d_l, e, lam_n_l + tau * alpha_l);
                let aa = 1.0 - c * c;
                let bb = -(a11 + a22 - 2.0 * a12 * c);
                let cc = a11 * a22 - a12 * a12;
                let mu = (-bb - (bb * bb - 4.0 * aa * cc).max(0.0).sqrt()) / (2.0 * aa);
                let tf_margin = inv - 1.0 / mu;
                if tf_margin < tf_worst[i] {
                    tf_worst[i] = tf_margin;
                    tf_at_worst[i] = (1.0 / mu, inv);
                }
            }
        }
        let mut closed_form_failed = false;
        for (i, &tau) in taus.iter().enumerate() {
            let b_ext = extrapolate(&bound_levels[i]);
            let r_ext = extrapolate(&inv_levels[i]);
            let margins: Vec<f64> =
                inv_levels[i].iter().zip(&bound_levels[i]).map(|(r, b)| r - b).collect();
            let m_ext = extrapolate(&margins);
            let err = m_ext.error_estimate.max(1e-6 * r_ext.value.abs());
            let verdict = resolved_verdict(m_ext.value, err, false);
            closed_form_failed |= verdict == Verdict::Fail;
            cases.push(case(
                format!("closed-form lower bound at tau={tau:.1e}"),
                b_ext.value,
                r_ext.value,
                err,
                verdict,
            ));
            let slack = 1e-8 * r_ext.value.abs().max(1e-300);
            let (tf_lhs, tf_rhs) = tf_at_worst[i];
            cases.push(case(
                format!("two-dimensional test-field bound at tau={tau:.1e} (measured cross term)"),
                tf_lhs,
                tf_rhs,
                slack,
                if tf_worst[i] >= -slack { Verdict::Pass } else { Verdict::Fail },
            ));
        }
        if closed_form_failed {
            notes.push(
                "the closed form majorizes the field cross term inside the denominator of a negative correction, which is not direction-safe"
                    .into(),
            );
            notes.push(
                "its violation persists under refinement, while the test-field bound with the measured cross term holds on every level: the machinery is consistent and the discrepancy sits in the closed form"
                    .into(),
            );
        }
    }

    if matches!(ladder.domain, DomainTag::Disk { .. }) {
        let mut lam_levels = lam_n_levels;
        if lam_levels.len() != ladder.meshes.len() {
            lam_levels.clear();
            for m in &ladder.meshes {
                lam_levels.push(problem_values(m, Problem::Neumann, degree, 1, tol)?[0]);
            }
        }
        let ext = extrapolate(&lam_levels);
        // square of the first zero of J1', the radial oracle for the natural
        // 1-form value on the unit disk
        let oracle = 3.389_956_898_372_702_3;
        let diff = (ext.value - oracle).abs();
        let allow = 0.02 * oracle;
        cases.push(case(
            "natural 1-form value vs the Bessel oracle (2%)".into(),
            diff,
            allow,
            ext.error_estimate,
            resolved_verdict(allow - diff, ext.error_estimate, false),
        ));
    }

    let verdict = combine(&cases);
    let head = tightest(&cases);
    let (lhs, rhs, margin, tolerance) = match head {
        Some(c) => (c.lhs, c.rhs, c.margin, c.error),
        None => (0.0, 0.0, 0.0, 0.0),
    };
    Ok(TheoremReport {
        theorem_id: TheoremId::RobinDirichletNeumann,
        domain: domain_label(ladder.domain),
        p: vec![degree],
        lhs,
        rhs,
        margin,
        tolerance,
        verdict,
        meta: meta_for(ladder, cases, notes),
    })
}

/// For a Euclidean domain with positive boundary curvature, the boundary mass
/// fraction of the first penalized 1-form eigenfield is controlled by the
/// λ-gap down to the scalar problem over the curvature infimum. Both sides
/// are measured per level and the margin is extrapolated.
pub fn check_robin_gap(
    ladder: &MeshLadder,
    tau: f64,
    cfg: &SuiteConfig,
) -> Result<TheoremReport, VerifyError> {
    let p_field = vec![0u8, 1u8];
    if !ladder.finest().metric.is_flat() {
        return Ok(skipped_report(
            TheoremId::RobinGap,
            ladder,
            p_field,
            "stated for Euclidean domains".into(),
        ));
    }
    let probe = geometry_report(ladder.finest());
    let curv = match probe.curvature() {
        Ok(c) => c,
        Err(_) => {
            return Ok(skipped_report(
                TheoremId::RobinGap,
                ladder,
                p_field,
                "boundary has corners: no pointwise curvature infimum".into(),
            ))
        }
    };
    if curv.sigma1 <= 0.0 {
        return Ok(skipped_report(
            TheoremId::RobinGap,
            ladder,
            p_field,
            format!(
                "smallest principal-curvature sum is not positive (sigma_1 = {:.4})",
                curv.sigma1
            ),
        ));
    }
    let tol = cfg.solver_tol;
    let mut ratio_vals = Vec::new();
    let mut gap_vals = Vec::new();
    let mut margins = Vec::new();
    let mut cases = Vec::new();
    for (l, mesh) in ladder.meshes.iter().enumerate() {
        let space = one_form_space(mesh);
        let (_, spec1) = solved(mesh, Problem::Robin { tau }, 1, 1, tol)?;
        let lam_q = spec1.eigenvalues[0];
        let v = &spec1.eigenvectors[0];
        let bd: f64 = space.trace.iter().zip(v).map(|(g, x)| g * x * x).sum();
        let vol = quad(&space.mass, v);
        let ratio = bd / vol;
        let lam_0 = problem_values(mesh, Problem::Robin { tau }, 0, 1, tol)?[0];
        let sigma = geometry_report(mesh).curvature()?.sigma1;
        let gap = (lam_q - lam_0) / sigma;
        ratio_vals.push(ratio);
        gap_vals.push(gap);
        margins.push(gap - ratio);
        cases.push(case(
            format!("level {l} (h={:.4}): sigma_1={:.4}", ladder.h_list[l], sigma),
            ratio,
            gap,
            0.0,
            Verdict::Pass,
        ));
    }
    let r_ext = extrapolate(&ratio_vals);
    let g_ext = extrapolate(&gap_vals);
    let m_ext = extrapolate(&margins);
    let err = m_ext.error_estimate.max(1e-10 * g_ext.value.abs());
    for (c_line, m) in cases.iter_mut().zip(&margins) {
        c_line.error = err;
        c_line.verdict = resolved_verdict(*m, err, false);
    }
    let verdict = resolved_verdict(m_ext.value, err, false);
    let notes = vec![
        format!("penalty tau={tau} on both degrees"),
        "the eigenfield's normal part vanishes weakly, so its boundary mass is measured on the tangential trace".into(),
    ];
    Ok(TheoremReport {
        theorem_id: TheoremId::RobinGap,
        domain: domain_label(ladder.domain),
        p: p_field,
        lhs: r_ext.value,
        rhs: g_ext.value,
        margin: m_ext.value,
        tolerance: err,
        verdict,
        meta: meta_for(ladder, cases, notes),
    })
}

/// 1/λ(τ) ≤ 1/λ_D + 1/(τ·q₁) for every penalty: the fourth-order boundary
/// value compensates the zero-trace gap. All three quantities are measured
/// per level and per penalty; each penalty's margin is extrapolated and the
/// binding one decides.
pub fn check_robin_bs(
    ladder: &MeshLadder,
    degree: u8,
    taus: &[f64],
    cfg: &SuiteConfig,
) -> Result<TheoremReport, VerifyError> {
    let tol = cfg.solver_tol;
    let levels = ladder.meshes.len();
    let mut lam_d = Vec::with_capacity(levels);
    let mut q1 = Vec::with_capacity(levels);
    let mut lam_taus: Vec<Vec<f64>> = vec![Vec::with_capacity(levels); taus.len()];
    for mesh in &ladder.meshes {
        lam_d.push(problem_values(mesh, Problem::Dirichlet, degree, 1, tol)?[0]);
        q1.push(bs_values(mesh, degree, 1, tol)?[0]);
        for (i, &tau) in taus.iter().enumerate() {
            lam_taus[i].push(problem_values(mesh, Problem::Robin { tau }, degree, 1, tol)?[0]);
        }
    }
    let mut cases = Vec::new();
    let mut worst: Option<(f64, f64, f64, f64)> = None;
    for (i, &tau) in taus.iter().enumerate() {
        let lhs_levels: Vec<f64> = lam_taus[i].iter().map(|l| 1.0 / l).collect();
        let rhs_levels: Vec<f64> =
            (0..levels).map(|l| 1.0 / lam_d[l] + 1.0 / (tau * q1[l])).collect();
        let margins: Vec<f64> =
            lhs_levels.iter().zip(&rhs_levels).map(|(a, b)| b - a).collect();
        let l_ext = extrapolate(&lhs_levels);
        let r_ext = extrapolate(&rhs_levels);
        let m_ext = extrapolate(&margins);
        let err = m_ext.error_estimate.max(1e-10 * r_ext.value.abs());
        cases.push(case(
            format!("tau={tau:.1e}"),
            l_ext.value,
            r_ext.value,
            err,
            resolved_verdict(m_ext.value, err, false),
        ));
        if worst.map_or(true, |(_, _, m, _)| m_ext.value < m) {
            worst = Some((l_ext.value, r_ext.value, m_ext.value, err));
        }
    }
    let (lhs, rhs, margin, err) = worst.expect("at least one penalty value");
    let verdict = combine(&cases);
    let notes = vec![
        "zero-trace value from the componentwise problem; quotient value from the constrained harmonic family".into(),
    ];
    Ok(TheoremReport {
        theorem_id: TheoremId::RobinBs,
        domain: domain_label(ladder.domain),
        p: vec![degree],
        lhs,
        rhs,
        margin,
        tolerance: err,
        verdict,
        meta: meta_for(ladder, cases, notes),
    })
}

/// On a flat harmonic domain with positive boundary curvature, the first
/// boundary-response eigenvalues sit below Vol(∂M)/Vol(M). Both enumeration
/// conventions are recorded (the kernel value and the first positive value),
/// the kernel dimension is pinned, and the top-degree route is cross-checked
/// against the scalar one on the finest mesh — their agreement is the
/// discrete face of the star duality of boundary responses.
pub fn check_dtn_ratio(
    ladder: &MeshLadder,
    cfg: &SuiteConfig,
) -> Result<TheoremReport, VerifyError> {
    let p_field = vec![1u8];
    if !ladder.finest().metric.is_flat() {
        return Ok(skipped_report(
            TheoremId::DtnRatio,
            ladder,
            p_field,
            "the parallel-form hypothesis needs a flat chart".into(),
        ));
    }
    let score = harmonic_domain_score(ladder.finest())?;
    if score >= cfg.harmonic_threshold {
        return Ok(skipped_report(
            TheoremId::DtnRatio,
            ladder,
            p_field,
            format!("not a harmonic domain (constant-flux score {score:.3})"),
        ));
    }
    let probe = geometry_report(ladder.finest());
    let curv = match probe.curvature() {
        Ok(c) => c,
        Err(_) => {
            return Ok(skipped_report(
                TheoremId::DtnRatio,
                ladder,
                p_field,
                "boundary has corners: no pointwise curvature infimum".into(),
            ))
        }
    };
    if curv.sigma1 <= 0.0 {
        return Ok(skipped_report(
            TheoremId::DtnRatio,
            ladder,
            p_field,
            format!(
                "smallest principal-curvature sum is not positive (sigma_1 = {:.4})",
                curv.sigma1
            ),
        ));
    }
    let tol = cfg.solver_tol;
    let mut nu1 = Vec::new();
    let mut nu2 = Vec::new();
    let mut ratios = Vec::new();
    let mut kdims = Vec::new();
    for mesh in &ladder.meshes {
        let (pencil, spec) = solved(mesh, Problem::Dtn, 0, 3, tol)?;
        let cut = kernel_cut(pencil.value_scale, &spec.eigenvalues);
        kdims.push(spec.eigenvalues.iter().filter(|v| v.abs() <= cut).count());
        nu1.push(spec.eigenvalues[0]);
        nu2.push(spec.eigenvalues[1]);
        ratios.push(geometry_report(mesh).ratio);
    }
    let mut cases = Vec::new();
    let kdim = *kdims.last().expect("nonempty ladder");
    cases.push(case(
        "kernel dimension of the boundary response".into(),
        kdim as f64,
        1.0,
        0.0,
        if kdims.iter().all(|&d| d == 1) { Verdict::Pass } else { Verdict::Fail },
    ));
    let r_ext = extrapolate(&ratios);
    let n1_ext = extrapolate(&nu1);
    let n2_ext = extrapolate(&nu2);
    let margins1: Vec<f64> = ratios.iter().zip(&nu1).map(|(r, n)| r - n).collect();
    let margins2: Vec<f64> = ratios.iter().zip(&nu2).map(|(r, n)| r - n).collect();
    let m1_ext = extrapolate(&margins1);
    let m2_ext = extrapolate(&margins2);
    let err1 = m1_ext.error_estimate.max(1e-10 * r_ext.value.abs());
    let err2 = m2_ext.error_estimate.max(1e-10 * r_ext.value.abs());
    cases.push(case(
        "kernel-inclusive convention: smallest response value vs the ratio".into(),
        n1_ext.value,
        r_ext.value,
        err1,
        resolved_verdict(m1_ext.value, err1, false),
    ));
    cases.push(case(
        "first-positive convention vs the ratio".into(),
        n2_ext.value,
        r_ext.value,
        err2,
        resolved_verdict(m2_ext.value, err2, false),
    ));

    // top-degree route: the tangential-trace constraint is empty in the top
    // degree, so its boundary response reduces to the scalar one
    let finest = ladder.finest();
    let blocks2 = scalar_building_blocks(finest, 2);
    let schur = explicit_schur(&blocks2.energy, &blocks2.boundary_vertices, &blocks2.interior_vertices)?;
    let mb = blocks2.boundary_mass.submatrix(&blocks2.boundary_vertices, &blocks2.boundary_vertices);
    let dual = OperatorPencil::from_matrices("top-degree boundary response", schur, mb, false);
    let dual_spec = solve_smallest(&dual, 3, tol)?;
    let (_, scalar_spec) = solved(finest, Problem::Dtn, 0, 3, tol)?;
    let mut worst_dual = 0.0f64;
    let mut dual_scale = 1.0f64;
    for (a, b) in dual_spec.eigenvalues.iter().zip(&scalar_spec.eigenvalues) {
        dual_scale = dual_scale.max(a.abs()).max(b.abs());
        worst_dual = worst_dual.max((a - b).abs());
    }
    let dual_tol = 1e-8 * dual_scale;
    cases.push(case(
        "top-degree route agrees with the scalar one (finest mesh)".into(),
        worst_dual,
        dual_tol,
        0.0,
        exactness_verdict(worst_dual, dual_tol),
    ));

    let verdict = combine(&cases);
    let notes = vec![
        "both minimum arguments reduce to the scalar response on a surface".into(),
        format!("constant-flux score {score:.3e} passes the harmonic-domain gate"),
    ];
    Ok(TheoremReport {
        theorem_id: TheoremId::DtnRatio,
        domain: domain_label(ladder.domain),
        p: p_field,
        lhs: n2_ext.value,
        rhs: r_ext.value,
        margin: m2_ext.value,
        tolerance: err2,
        verdict,
        meta: meta_for(ladder, cases, notes),
    })
}

// ---------------------------------------------------------------------------
// suite planning

#[derive(Debug, Clone)]
pub enum CheckParams {
    UpperBound { degree: u8 },
    Theta { degree: u8 },
    Hodge { degrees: (u8, u8), k: usize },
    Coincidence { k: usize },
    Sphere,
    Sandwich { degree: u8, taus: Vec<f64> },
    DirichletNeumann { degree: u8, tau_projection: f64, taus: Vec<f64> },
    Gap { tau: f64 },
    BsBound { degree: u8, taus: Vec<f64> },
    Dtn,
}

#[derive(Debug, Clone)]
pub enum Planned {
    Run(CheckParams),
    Skip { p: Vec<u8>, reason: String },
}

#[derive(Debug, Clone)]
pub struct PlannedCheck {
    pub id: TheoremId,
    pub action: Planned,
}

fn run_entry(id: TheoremId, params: CheckParams) -> PlannedCheck {
    PlannedCheck { id, action: Planned::Run(params) }
}

fn skip_entry(id: TheoremId, p: Vec<u8>, reason: &str) -> PlannedCheck {
    PlannedCheck { id, action: Planned::Skip { p, reason: reason.to_string() } }
}

/// Which checks run on which domain. Hypothesis failures that can be read off
/// the mesh (corners, curvature sign, harmonicity) are left to the checkers,
/// which skip with the measured reason; statements whose setting a domain
/// simply does not inhabit (sphere statements on flat charts and vice versa)
/// are skipped at the planning level.
pub fn plan_for(tag: DomainTag, cfg: &SuiteConfig) -> Vec<PlannedCheck> {
    use CheckParams as P;
    use TheoremId as T;
    let k = cfg.spectrum_depth;
    let sandwich_taus = vec![0.1, 1.0, 10.0, 1e4, 1e8];
    let mut plan = Vec::new();
    match tag {
        DomainTag::Disk { .. } => {
            plan.push(run_entry(T::UpperBoundRatio, P::UpperBound { degree: 0 }));
            plan.push(run_entry(T::ThetaLowerBound, P::Theta { degree: 0 }));
            plan.push(run_entry(T::HodgeDuality, P::Hodge { degrees: (0, 2), k }));
            plan.push(run_entry(T::FlatCoincidence, P::Coincidence { k }));
            plan.push(skip_entry(
                T::SphereInequality,
                vec![0, 1, 2],
                "stated for domains inside the round sphere",
            ));
            plan.push(run_entry(
                T::RobinSandwich,
                P::Sandwich { degree: 0, taus: sandwich_taus.clone() },
            ));
            plan.push(run_entry(
                T::RobinSandwich,
                P::Sandwich { degree: 1, taus: sandwich_taus },
            ));
            plan.push(run_entry(
                T::RobinDirichletNeumann,
                P::DirichletNeumann { degree: 1, tau_projection: 1.0, taus: vec![0.5, 2.0] },
            ));
            plan.push(run_entry(T::RobinGap, P::Gap { tau: 1.0 }));
            plan.push(run_entry(T::RobinBs, P::BsBound { degree: 0, taus: vec![0.1, 1.0, 10.0] }));
            plan.push(run_entry(T::RobinBs, P::BsBound { degree: 1, taus: vec![1.0] }));
            plan.push(run_entry(T::DtnRatio, P::Dtn));
        }
        DomainTag::Annulus { .. } => {
            plan.push(run_entry(T::UpperBoundRatio, P::UpperBound { degree: 0 }));
            plan.push(run_entry(T::ThetaLowerBound, P::Theta { degree: 0 }));
            plan.push(run_entry(T::HodgeDuality, P::Hodge { degrees: (0, 2), k }));
            plan.push(run_entry(T::FlatCoincidence, P::Coincidence { k }));
            plan.push(skip_entry(
                T::SphereInequality,
                vec![0, 1, 2],
                "stated for domains inside the round sphere",
            ));
            plan.push(run_entry(
                T::RobinSandwich,
                P::Sandwich { degree: 1, taus: vec![0.1, 1.0, 10.0, 1e4, 1e8] },
            ));
            plan.push(run_entry(
                T::RobinDirichletNeumann,
                P::DirichletNeumann { degree: 1, tau_projection: 1.0, taus: vec![0.5, 2.0] },
            ));
            plan.push(run_entry(T::RobinGap, P::Gap { tau: 1.0 }));
            plan.push(run_entry(T::DtnRatio, P::Dtn));
        }
        DomainTag::Ellipse { .. } => {
            plan.push(run_entry(T::UpperBoundRatio, P::UpperBound { degree: 0 }));
            plan.push(run_entry(T::ThetaLowerBound, P::Theta { degree: 0 }));
            plan.push(run_entry(T::HodgeDuality, P::Hodge { degrees: (0, 2), k }));
            plan.push(run_entry(T::FlatCoincidence, P::Coincidence { k }));
            plan.push(skip_entry(
                T::SphereInequality,
                vec![0, 1, 2],
                "stated for domains inside the round sphere",
            ));
            plan.push(run_entry(T::RobinGap, P::Gap { tau: 1.0 }));
            plan.push(run_entry(T::DtnRatio, P::Dtn));
        }
        DomainTag::Square { .. } => {
            plan.push(run_entry(T::UpperBoundRatio, P::UpperBound { degree: 1 }));
            plan.push(run_entry(T::ThetaLowerBound, P::Theta { degree: 0 }));
            plan.push(run_entry(T::HodgeDuality, P::Hodge { degrees: (1, 1), k }));
            plan.push(run_entry(T::FlatCoincidence, P::Coincidence { k }));
            plan.push(skip_entry(
                T::SphereInequality,
                vec![0, 1, 2],
                "stated for domains inside the round sphere",
            ));
            plan.push(run_entry(T::RobinGap, P::Gap { tau: 1.0 }));
            plan.push(run_entry(T::RobinBs, P::BsBound { degree: 0, taus: vec![1.0] }));
        }
        DomainTag::Cap { .. } => {
            plan.push(run_entry(T::UpperBoundRatio, P::UpperBound { degree: 0 }));
            plan.push(run_entry(T::ThetaLowerBound, P::Theta { degree: 0 }));
            plan.push(run_entry(T::HodgeDuality, P::Hodge { degrees: (0, 2), k: k.min(3) }));
            plan.push(skip_entry(
                T::FlatCoincidence,
                vec![0, 1],
                "stated for flat charts where component fields decouple",
            ));
            plan.push(run_entry(T::SphereInequality, P::Sphere));
            plan.push(skip_entry(T::RobinGap, vec![0, 1], "stated for Euclidean domains"));
            plan.push(skip_entry(
                T::DtnRatio,
                vec![1],
                "the parallel-form hypothesis needs a flat chart",
            ));
        }
    }
    plan
}

fn run_check(
    id: TheoremId,
    params: CheckParams,
    ladder: &MeshLadder,
    cfg: &SuiteConfig,
) -> Result<TheoremReport, VerifyError> {
    debug_assert!(matches!(
        (id, &params),
        (TheoremId::UpperBoundRatio, CheckParams::UpperBound { .. })
            | (TheoremId::ThetaLowerBound, CheckParams::Theta { .. })
            | (TheoremId::HodgeDuality, CheckParams::Hodge { .. })
            | (TheoremId::FlatCoincidence, CheckParams::Coincidence { .. })
            | (TheoremId::SphereInequality, CheckParams::Sphere)
            | (TheoremId::RobinSandwich, CheckParams::Sandwich { .. })
            | (TheoremId::RobinDirichletNeumann, CheckParams::DirichletNeumann { .. })
            | (TheoremId::RobinGap, CheckParams::Gap { .. })
            | (TheoremId::RobinBs, CheckParams::BsBound { .. })
            | (TheoremId::DtnRatio, CheckParams::Dtn)
    ));
    match params {
        CheckParams::UpperBound { degree } => check_upper_bound_ratio(ladder, degree, cfg),
        CheckParams::Theta { degree } => check_theta_lower_bound(ladder, degree, cfg),
        CheckParams::Hodge { degrees, k } => check_hodge_duality(ladder, degrees, k, cfg),
        CheckParams::Coincidence { k } => check_flat_coincidence(ladder, k, cfg),
        CheckParams::Sphere => check_sphere_inequality(ladder, cfg),
        CheckParams::Sandwich { degree, taus } => {
            check_robin_sandwich(ladder, degree, &taus, cfg)
        }
        CheckParams::DirichletNeumann { degree, tau_projection, taus } => {
            check_robin_dirichlet_neumann(ladder, degree, tau_projection, &taus, cfg)
        }
        CheckParams::Gap { tau } => check_robin_gap(ladder, tau, cfg),
        CheckParams::BsBound { degree, taus } => check_robin_bs(ladder, degree, &taus, cfg),
        CheckParams::Dtn => check_dtn_ratio(ladder, cfg),
    }
}

/// Run the planned checks for one domain on a shared mesh ladder.
pub fn run_domain(tag: DomainTag, cfg: &SuiteConfig) -> Result<Vec<TheoremReport>, VerifyError> {
    run_domain_filtered(tag, cfg, None)
}

/// Like [`run_domain`], restricted to a single statement when `keep` is set.
pub fn run_domain_filtered(
    tag: DomainTag,
    cfg: &SuiteConfig,
    keep: Option<TheoremId>,
) -> Result<Vec<TheoremReport>, VerifyError> {
    let ladder = MeshLadder::generate(tag, cfg.h, cfg.refinements)?;
    let mut out = Vec::new();
    for planned in plan_for(tag, cfg) {
        if keep.is_some_and(|id| id != planned.id) {
            continue;
        }
        let report = match planned.action {
            Planned::Skip { p, reason } => skipped_report(planned.id, &ladder, p, reason),
            Planned::Run(params) => run_check(planned.id, params, &ladder, cfg)?,
        };
        out.push(report);
    }
    Ok(out)
}

/// Canonical (statement, domain, degree) report order, independent of
/// evaluation order.
pub fn canonical_sort(reports: &mut [TheoremReport]) {
    reports.sort_by(|a, b| (a.theorem_id, &a.domain, &a.p).cmp(&(b.theorem_id, &b.domain, &b.p)));
}

/// Run every planned check on every domain and merge the reports in the
/// canonical order.
pub fn run_suite(
    domains: &[DomainTag],
    cfg: &SuiteConfig,
) -> Result<Vec<TheoremReport>, VerifyError> {
    let mut out = Vec::new();
    for &tag in domains {
        out.extend(run_domain(tag, cfg)?);
    }
    canonical_sort(&mut out);
    Ok(out)
}

/// The standard domain catalog: unit disk, a thick annulus, a 3:5 ellipse,
/// the unit square, the hemisphere, and a smaller cap.
pub fn default_domains() -> Vec<DomainTag> {
    vec![
        DomainTag::Disk { r: 1.0 },
        DomainTag::Annulus { r_inner: 0.5, r_outer: 1.0 },
        DomainTag::Ellipse { a: 1.0, b: 0.6 },
        DomainTag::Square { side: 1.0 },
        DomainTag::Cap { alpha: std::f64::consts::FRAC_PI_2 },
        DomainTag::Cap { alpha: std::f64::consts::FRAC_PI_3 },
    ]
}
