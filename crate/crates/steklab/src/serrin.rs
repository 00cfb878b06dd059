//! The overdetermined torsion system: solve Δf = 1 with f = 0 on the
//! boundary, measure how far the inward normal derivative is from a
//! constant, and test the induced p-form f·ω₀ against the fourth-order
//! Steklov boundary conditions it should satisfy on a ball.

use crate::assembly::{
    bs_parts, mass_matrix, scalar_building_blocks, weak_conormal_trace, AssemblyError,
};
use crate::forms::{parallel_product, trace_split, FormError, FormField, ParallelForm};
use crate::mesh::{boundary_frame, SimplicialMesh};
use crate::sparse::{SkylineLdl, SparseError};

#[derive(Debug, thiserror::Error)]
pub enum SerrinError {
    #[error("metric is not flat: parallel forms other than constants need a flat chart")]
    NonFlatMetric,
    #[error(transparent)]
    Factorization(#[from] SparseError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Default threshold on the extrapolated constancy score below which a
/// domain is classified as having constant torsion flux. Carried in run
/// configuration; this is only the default.
pub const DEFAULT_HARMONIC_THRESHOLD: f64 = 1e-2;

/// Classification helper: the caller passes the (extrapolated) score and
/// the configured threshold.
pub fn is_harmonic_domain(extrapolated_score: f64, threshold: f64) -> bool {
    extrapolated_score < threshold
}

/// Solution of Δf = 1, f|∂ = 0, with the recovered boundary flux statistics.
/// `f` has length² units; `c_mean` (length units) is the boundary-measure
/// weighted mean of ∂_ν f with ν the inward normal, and `constancy_score`
/// its weighted standard deviation divided by the mean.
pub struct SerrinSolution {
    pub f: Vec<f64>,
    pub c_mean: f64,
    pub constancy_score: f64,
}

/// Solve the torsion problem on interior vertices and recover the boundary
/// flux from the residual rows of the energy, so that the discrete
/// divergence balance ∮ ∂_ν f dμ = Vol(M) holds to rounding.
pub fn solve_serrin(mesh: &SimplicialMesh) -> Result<SerrinSolution, SerrinError> {
    let blocks = scalar_building_blocks(mesh, 0);
    let n = mesh.n_vertices();
    // right-hand side ∫ φ_i dμ = row sums of the mass matrix
    let mut load = vec![0.0; n];
    blocks.mass.matvec(&vec![1.0; n], &mut load);
    let s_int = blocks.energy.submatrix(&blocks.interior_vertices, &blocks.interior_vertices);
    let rhs: Vec<f64> = blocks.interior_vertices.iter().map(|&v| load[v as usize]).collect();
    let ldl = SkylineLdl::factor_rcm(&s_int)?;
    let f_int = ldl.solve(&rhs);
    let mut f = vec![0.0; n];
    for (k, &v) in blocks.interior_vertices.iter().enumerate() {
        f[v as usize] = f_int[k];
    }

    let field = FormField { degree: 0, components: vec![f.clone()] };
    let conormal = weak_conormal_trace(mesh, &field, Some(&load))?;
    let frame = &blocks.frame;
    let flux: Vec<f64> = (0..frame.len())
        .map(|s| conormal.grad_nu.components[0][frame.vertex[s] as usize])
        .collect();
    let total_w: f64 = frame.w_metric.iter().sum();
    let c_mean = flux.iter().zip(&frame.w_metric).map(|(c, w)| c * w).sum::<f64>() / total_w;
    assert!(c_mean > 0.0, "mean inward flux must be positive on a valid mesh");
    let variance = flux
        .iter()
        .zip(&frame.w_metric)
        .map(|(c, w)| w * (c - c_mean) * (c - c_mean))
        .sum::<f64>()
        / total_w;
    let constancy_score = variance.sqrt() / c_mean;
    Ok(SerrinSolution { f, c_mean, constancy_score })
}

/// The constancy score alone, for refinement studies and classification.
pub fn harmonic_domain_score(mesh: &SimplicialMesh) -> Result<f64, SerrinError> {
    Ok(solve_serrin(mesh)?.constancy_score)
}

/// How well ω = f·ω₀ satisfies the fourth-order Steklov boundary system at
/// q = 1/c_mean. Since Δω = ω₀ holds by construction, the two boundary
/// conditions compare the traces of ω₀ against q times the conormal data
/// of ω; the residuals are relative to the boundary norm of ω₀'s trace.
/// `rayleigh_quotient` is ∫|Δω|² / ∮|∇_νω|² in the discrete forms, the
/// functional whose minimum over zero-trace fields is the first eigenvalue.
pub struct SerrinFormReport {
    pub degree: u8,
    pub q: f64,
    pub tangential_residual: f64,
    pub normal_residual: f64,
    pub residual: f64,
    pub rayleigh_quotient: f64,
}

pub fn verify_serrin_form(
    mesh: &SimplicialMesh,
    omega0: ParallelForm,
) -> Result<SerrinFormReport, SerrinError> {
    if !mesh.metric.is_flat() {
        return Err(SerrinError::NonFlatMetric);
    }
    let degree = omega0.degree();
    let sol = solve_serrin(mesh)?;
    let q = 1.0 / sol.c_mean;
    let omega = parallel_product(&sol.f, omega0);

    // Δω = ω₀, so the load is the mass applied to ω₀'s constant coefficients
    let n = mesh.n_vertices();
    let mass = mass_matrix(mesh, degree);
    let coeffs = omega0.coefficients();
    let mut mass_row_sums = vec![0.0; n];
    mass.matvec(&vec![1.0; n], &mut mass_row_sums);
    let mut load = vec![0.0; coeffs.len() * n];
    for (c, &a) in coeffs.iter().enumerate() {
        for v in 0..n {
            load[c * n + v] = a * mass_row_sums[v];
        }
    }
    let conormal = weak_conormal_trace(mesh, &omega, Some(&load))?;

    // boundary traces of the constant form ω₀
    let frame = boundary_frame(mesh);
    let omega0_field = FormField {
        degree,
        components: coeffs.iter().map(|&a| vec![a; n]).collect(),
    };
    let trace0 = trace_split(&omega0_field, &frame)?;

    // tangential condition: ι*Δω = q·ν⌟dω; normal condition: ν⌟Δω = −q·ι*δω
    let mut num_t = 0.0;
    let mut num_n = 0.0;
    let mut den = 0.0;
    for s in 0..frame.len() {
        let w = frame.w_metric[s];
        let rt = trace0.tangential[s] - q * conormal.nu_contraction_d[s];
        let rn = trace0.normal[s] + q * conormal.iota_delta[s];
        num_t += w * rt * rt;
        num_n += w * rn * rn;
        den += w * trace0.norm_sq(s);
    }
    let tangential_residual = (num_t / den).sqrt();
    let normal_residual = (num_n / den).sqrt();
    let residual = ((num_t + num_n) / den).sqrt();

    let parts = bs_parts(mesh, degree)?;
    let mut v = Vec::with_capacity(parts.dim());
    for comp in &omega.components {
        v.extend(parts.layout_int.kept.iter().map(|&i| comp[i as usize]));
    }
    let rayleigh_quotient = parts.a_form(&v) / parts.b_form(&v);

    Ok(SerrinFormReport {
        degree,
        q,
        tangential_residual,
        normal_residual,
        residual,
        rayleigh_quotient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_domain, DomainTag};

    fn total_mass(mesh: &SimplicialMesh) -> f64 {
        let n = mesh.n_vertices();
        let m = mass_matrix(mesh, 0);
        let mut out = vec![0.0; n];
        m.matvec(&vec![1.0; n], &mut out);
        out.iter().sum()
    }

    fn boundary_flux_total(mesh: &SimplicialMesh, f: &[f64]) -> f64 {
        let n = mesh.n_vertices();
        let m = mass_matrix(mesh, 0);
        let mut load = vec![0.0; n];
        m.matvec(&vec![1.0; n], &mut load);
        let field = FormField { degree: 0, components: vec![f.to_vec()] };
        let conormal = weak_conormal_trace(mesh, &field, Some(&load)).unwrap();
        let frame = boundary_frame(mesh);
        (0..frame.len())
            .map(|s| frame.w_metric[s] * conormal.grad_nu.components[0][frame.vertex[s] as usize])
            .sum()
    }

    #[test]
    fn disk_solution_matches_the_radial_profile() {
        let mesh = gen_domain(DomainTag::Disk { r: 1.0 }, 0.06).unwrap();
        let sol = solve_serrin(&mesh).unwrap();
        let mut worst = 0.0f64;
        for (v, &fv) in sol.f.iter().enumerate() {
            let [x, y] = mesh.vertices[v];
            let exact = (1.0 - x * x - y * y) / 4.0;
            worst = worst.max((fv - exact).abs());
        }
        assert!(worst <= 0.01 * 0.25, "sup error {worst:.2e} above 1% of the peak");
        assert!((sol.c_mean - 0.5).abs() <= 0.005, "c_mean {} off 1/2", sol.c_mean);
        assert!(sol.constancy_score < 1e-2, "score {} not small on the disk", sol.constancy_score);
    }

    #[test]
    fn flux_balance_matches_the_volume() {
        // the recovered flux satisfies ∮ ∂_ν f dμ = Vol(M) to rounding,
        // independently of how well f itself has converged
        let domains = [
            DomainTag::Disk { r: 1.0 },
            DomainTag::Square { side: 1.0 },
            DomainTag::Annulus { r_inner: 0.5, r_outer: 1.0 },
            DomainTag::Ellipse { a: 1.0, b: 0.6 },
            DomainTag::Cap { alpha: 1.0 },
        ];
        for tag in domains {
            let mesh = gen_domain(tag, 0.14).unwrap();
            let sol = solve_serrin(&mesh).unwrap();
            let vol = total_mass(&mesh);
            let total = boundary_flux_total(&mesh, &sol.f);
            assert!(
                (total - vol).abs() <= 1e-10 * vol,
                "{tag:?}: flux total {total} vs volume {vol}"
            );
        }
    }

    #[test]
    fn solution_is_nonnegative_on_convex_domains() {
        for tag in [DomainTag::Disk { r: 1.0 }, DomainTag::Square { side: 1.0 }] {
            let mesh = gen_domain(tag, 0.1).unwrap();
            let sol = solve_serrin(&mesh).unwrap();
            let min = sol.f.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-14, "{tag:?}: negative torsion value {min}");
        }
    }

    #[test]
    fn square_score_plateaus_above_threshold() {
        // a square is not a ball: the score settles at a positive constant
        let coarse = harmonic_domain_score(&gen_domain(DomainTag::Square { side: 1.0 }, 0.12).unwrap()).unwrap();
        let fine = harmonic_domain_score(&gen_domain(DomainTag::Square { side: 1.0 }, 0.06).unwrap()).unwrap();
        assert!(coarse > 0.05 && fine > 0.05, "scores {coarse} / {fine} below plateau");
        assert!((coarse - fine).abs() < 0.5 * fine, "score has not settled: {coarse} vs {fine}");
    }

    #[test]
    fn ellipse_score_stays_large() {
        let score = harmonic_domain_score(&gen_domain(DomainTag::Ellipse { a: 1.0, b: 0.6 }, 0.07).unwrap()).unwrap();
        assert!(score > 1e-1, "ellipse score {score} unexpectedly small");
    }

    #[test]
    fn cap_scores_like_a_ball() {
        let mesh = gen_domain(DomainTag::Cap { alpha: 1.0 }, 0.05).unwrap();
        let score = harmonic_domain_score(&mesh).unwrap();
        assert!(score < 1e-2, "cap score {score} above the ball threshold");
    }

    #[test]
    fn disk_form_report_converges_to_the_eigenpair() {
        let coarse = verify_serrin_form(&gen_domain(DomainTag::Disk { r: 1.0 }, 0.12).unwrap(), ParallelForm::Dx).unwrap();
        let fine = verify_serrin_form(&gen_domain(DomainTag::Disk { r: 1.0 }, 0.06).unwrap(), ParallelForm::Dx).unwrap();
        assert!(fine.residual < coarse.residual, "residual not decreasing: {} vs {}", coarse.residual, fine.residual);
        assert!(fine.residual < 0.05, "residual {} still large at h=0.06", fine.residual);
        assert!((fine.rayleigh_quotient - 2.0).abs() < 0.1, "quotient {} off 2", fine.rayleigh_quotient);
        assert!((fine.q - 2.0).abs() < 0.02, "q {} off 2", fine.q);
    }

    #[test]
    fn square_quotient_dominates_the_first_eigenvalue() {
        // the quotient at a particular zero-trace field can never undercut
        // the minimum of the same discrete functional
        let mesh = gen_domain(DomainTag::Square { side: 1.0 }, 0.12).unwrap();
        let report = verify_serrin_form(&mesh, ParallelForm::Dx).unwrap();
        let pencil = crate::assembly::assemble(
            crate::assembly::ProblemSpec { problem: crate::assembly::Problem::BiharmonicSteklov, degree: 1 },
            &mesh,
        )
        .unwrap();
        let spectrum = crate::eig::solve_kmode(&pencil, 1, crate::eig::DEFAULT_TOL).unwrap();
        let q1 = spectrum.eigenvalues[0];
        assert!(
            report.rayleigh_quotient >= q1 - 1e-9 * q1,
            "quotient {} below the discrete minimum {q1}",
            report.rayleigh_quotient
        );
    }

    #[test]
    fn volume_form_report_matches_the_scalar_one() {
        // on a flat chart the degree-2 system is the scalar system verbatim
        let mesh = gen_domain(DomainTag::Disk { r: 1.0 }, 0.1).unwrap();
        let scalar = verify_serrin_form(&mesh, ParallelForm::One).unwrap();
        let volume = verify_serrin_form(&mesh, ParallelForm::DxDy).unwrap();
        assert!((scalar.residual - volume.residual).abs() <= 1e-12 * (1.0 + scalar.residual));
        assert!(
            (scalar.rayleigh_quotient - volume.rayleigh_quotient).abs()
                <= 1e-12 * scalar.rayleigh_quotient
        );
    }

    #[test]
    fn cap_chart_is_rejected_for_parallel_forms() {
        let mesh = gen_domain(DomainTag::Cap { alpha: 1.0 }, 0.1).unwrap();
        assert!(matches!(verify_serrin_form(&mesh, ParallelForm::One), Err(SerrinError::NonFlatMetric)));
    }
}
