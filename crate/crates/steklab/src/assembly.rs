//! Sparse symmetric operator pencils for the five boundary problems on
//! p-forms: Dirichlet, Neumann, Robin(τ), Dirichlet-to-Neumann, and the
//! biharmonic Steklov problem.
//!
//! Discretization map:
//! * full-trace problems (Dirichlet, biharmonic Steklov) and all scalar
//!   degrees (p ∈ {0,2}) use linear Lagrange elements per Cartesian
//!   component with the conformal weights of the mesh metric;
//! * the ν⌟ω = 0 family at p = 1 (Neumann, Robin, DtN) uses the edge
//!   elements of [`crate::whitney`], whose discrete harmonic space has the
//!   exact topological dimension.
//!
//! Essential constraints are eliminated (never penalized); boundary
//! derivative data is recovered variationally from boundary rows of the
//! energy matrix.

use crate::forms::{component_count, trace_split, BoundaryTrace, FormError, FormField};
use crate::mesh::{boundary_frame, BoundaryFrame, MetricDescriptor, SimplicialMesh};
use crate::sparse::{Csr, SkylineLdl, SparseError, Triplets};
use crate::whitney;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("{problem} is not defined for degree {degree} in two dimensions")]
    UnsupportedDegree { problem: &'static str, degree: u8 },
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("factorization failed: {0}")]
    Factorization(#[from] SparseError),
}

/// The five boundary problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem {
    Dirichlet,
    Neumann,
    Robin { tau: f64 },
    Dtn,
    BiharmonicSteklov,
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Dirichlet => "dirichlet",
            Problem::Neumann => "neumann",
            Problem::Robin { .. } => "robin",
            Problem::Dtn => "dtn",
            Problem::BiharmonicSteklov => "bs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub problem: Problem,
    pub degree: u8,
}

impl ProblemSpec {
    pub fn label(&self) -> String {
        match self.problem {
            Problem::Robin { tau } => format!("robin(tau={})/p{}", tau, self.degree),
            p => format!("{}/p{}", p.name(), self.degree),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PencilKind {
    /// A x = λ B x, B positive definite; smallest eigenvalues wanted.
    GeneralizedSmallest,
    /// largest μ of A⁻¹B with A = Kᵀdiag(m)⁻¹K; reported as q = 1/μ.
    KMode,
    /// A is a boundary Schur complement applied implicitly.
    SchurBoundary,
    /// boundary quotient ‖ω‖²_∂ / ‖ω‖²_M over discrete-harmonic fields.
    HarmonicQuotient,
}

// ---------------------------------------------------------------------------
// element-level nodal assembly

fn tri_gradients(mesh: &SimplicialMesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let [a, b, c] = mesh.triangles[t];
    let p = [mesh.vertices[a as usize], mesh.vertices[b as usize], mesh.vertices[c as usize]];
    let area = mesh.triangle_area(t);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let u = p[(i + 1) % 3];
        let v = p[(i + 2) % 3];
        g[i] = [-(v[1] - u[1]) / (2.0 * area), (v[0] - u[0]) / (2.0 * area)];
    }
    (g, area)
}

/// Pointwise mass weight of a p-form coefficient field: μ^(2−2p).
fn mass_weight(metric: MetricDescriptor, degree: u8, p: [f64; 2]) -> f64 {
    metric.mass_weight(degree, p)
}

/// Consistent P1 mass with the degree's metric weight (midpoint quadrature;
/// exact for flat metrics).
pub fn mass_matrix(mesh: &SimplicialMesh, degree: u8) -> Csr {
    let n = mesh.n_vertices();
    let mut t = Triplets::new(n, n);
    let flat = mesh.metric.is_flat();
    for ti in 0..mesh.n_triangles() {
        let tri = mesh.triangles[ti];
        let area = mesh.triangle_area(ti);
        if flat {
            for i in 0..3 {
                for j in i..3 {
                    let v = area * if i == j { 1.0 / 6.0 } else { 1.0 / 12.0 };
                    t.push_sym(tri[i] as usize, tri[j] as usize, v);
                }
            }
        } else {
            // midpoint rule: λ_i λ_j is quadratic, the weight is sampled
            let mids = mesh.edge_midpoints(ti);
            let w: Vec<f64> = mids.iter().map(|&p| mass_weight(mesh.metric, degree, p)).collect();
            // λ values at midpoints: midpoint k (between vertices k, k+1)
            // has λ_k = λ_(k+1) = 1/2, λ_(k+2) = 0
            for i in 0..3 {
                for j in i..3 {
                    let mut acc = 0.0;
                    for (m, &wm) in w.iter().enumerate() {
                        let li = if m == i || (m + 1) % 3 == i { 0.5 } else { 0.0 };
                        let lj = if m == j || (m + 1) % 3 == j { 0.5 } else { 0.0 };
                        acc += wm * li * lj;
                    }
                    t.push_sym(tri[i] as usize, tri[j] as usize, area / 3.0 * acc);
                }
            }
        }
    }
    t.to_csr()
}

/// Row sums of [`mass_matrix`] as a diagonal.
pub fn lumped_nodal_mass(mesh: &SimplicialMesh, degree: u8) -> Vec<f64> {
    let n = mesh.n_vertices();
    let mut m = vec![0.0; n];
    for ti in 0..mesh.n_triangles() {
        let tri = mesh.triangles[ti];
        let area = mesh.triangle_area(ti);
        let mids = mesh.edge_midpoints(ti);
        let w: Vec<f64> = mids.iter().map(|&p| mass_weight(mesh.metric, degree, p)).collect();
        for k in 0..3 {
            m[tri[k] as usize] += area / 3.0 * 0.5 * (w[k] + w[(k + 2) % 3]);
        }
    }
    m
}

/// Flat P1 stiffness; it is also the 0-form energy for the cap metric
/// (the scalar Dirichlet energy is conformally invariant in 2-D).
pub fn stiffness(mesh: &SimplicialMesh) -> Csr {
    let n = mesh.n_vertices();
    let mut t = Triplets::new(n, n);
    for ti in 0..mesh.n_triangles() {
        let tri = mesh.triangles[ti];
        let (g, area) = tri_gradients(mesh, ti);
        for i in 0..3 {
            for j in i..3 {
                let v = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                t.push_sym(tri[i] as usize, tri[j] as usize, v);
            }
        }
    }
    t.to_csr()
}

/// Energy of the degree-2 coefficient field: ∫ |∇(μ⁻²u)|² dx (for the flat
/// metric this is exactly the stiffness). Quadrature differentiates the
/// product: ∇(μ⁻²u) = μ⁻²∇u + u∇(μ⁻²) sampled at edge midpoints.
pub fn two_form_energy(mesh: &SimplicialMesh) -> Csr {
    if mesh.metric.is_flat() {
        return stiffness(mesh);
    }
    let n = mesh.n_vertices();
    let mut t = Triplets::new(n, n);
    let inv_mu_sq = |p: [f64; 2]| {
        let m = mesh.metric.mu(p);
        1.0 / (m * m)
    };
    // ∇(μ⁻²) for μ = 2/(1+r²): μ⁻² = (1+r²)²/4, ∇ = (1+r²)(x,y)
    let grad_inv_mu_sq = |p: [f64; 2]| {
        let r2 = p[0] * p[0] + p[1] * p[1];
        [(1.0 + r2) * p[0], (1.0 + r2) * p[1]]
    };
    for ti in 0..mesh.n_triangles() {
        let tri = mesh.triangles[ti];
        let (g, area) = tri_gradients(mesh, ti);
        let mids = mesh.edge_midpoints(ti);
        // G_j at each midpoint
        let mut gj = [[[0.0f64; 2]; 3]; 3]; // [midpoint][node][xy]
        for (m, &pm) in mids.iter().enumerate() {
            let w = inv_mu_sq(pm);
            let gw = grad_inv_mu_sq(pm);
            for j in 0..3 {
                let lam = if m == j || (m + 1) % 3 == j { 0.5 } else { 0.0 };
                gj[m][j] = [w * g[j][0] + lam * gw[0], w * g[j][1] + lam * gw[1]];
            }
        }
        for i in 0..3 {
            for j in i..3 {
                let mut acc = 0.0;
                for m in 0..3 {
                    acc += gj[m][i][0] * gj[m][j][0] + gj[m][i][1] * gj[m][j][1];
                }
                t.push_sym(tri[i] as usize, tri[j] as usize, area / 3.0 * acc);
            }
        }
    }
    t.to_csr()
}

/// Consistent boundary mass with the ∂M measure weight μ (n×n,
/// boundary-supported, tridiagonal along each loop).
pub fn boundary_mass(mesh: &SimplicialMesh) -> Csr {
    let n = mesh.n_vertices();
    let mut t = Triplets::new(n, n);
    for lp in &mesh.boundary_loops {
        for k in 0..lp.len() {
            let (a, b) = (lp[k] as usize, lp[(k + 1) % lp.len()] as usize);
            let p = mesh.vertices[a];
            let q = mesh.vertices[b];
            let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
            let (mua, mub) = (mesh.metric.mu(p), mesh.metric.mu(q));
            t.push(a, a, len * (mua / 4.0 + mub / 12.0));
            t.push(b, b, len * (mub / 4.0 + mua / 12.0));
            t.push_sym(a, b, len * (mua + mub) / 12.0);
        }
    }
    t.to_csr()
}

/// Per-component nodal matrices for one scalar slot of a p-form, plus the
/// boundary bookkeeping shared by every pencil.
pub struct ScalarBlocks {
    pub degree: u8,
    pub mass: Csr,
    pub mass_lumped: Vec<f64>,
    /// Degree-appropriate energy: stiffness for p ∈ {0,1}, the weighted
    /// form for p = 2 (all coincide for flat metrics).
    pub energy: Csr,
    pub boundary_mass: Csr,
    pub frame: BoundaryFrame,
    pub boundary_vertices: Vec<u32>,
    pub interior_vertices: Vec<u32>,
}

pub fn scalar_building_blocks(mesh: &SimplicialMesh, degree: u8) -> ScalarBlocks {
    let frame = boundary_frame(mesh);
    let mask = mesh.boundary_mask();
    let boundary_vertices: Vec<u32> = (0..mesh.n_vertices() as u32).filter(|&v| mask[v as usize]).collect();
    let interior_vertices: Vec<u32> = (0..mesh.n_vertices() as u32).filter(|&v| !mask[v as usize]).collect();
    let energy = match degree {
        2 => two_form_energy(mesh),
        _ => stiffness(mesh),
    };
    ScalarBlocks {
        degree,
        mass: mass_matrix(mesh, degree),
        mass_lumped: lumped_nodal_mass(mesh, degree),
        energy,
        boundary_mass: boundary_mass(mesh),
        frame,
        boundary_vertices,
        interior_vertices,
    }
}

/// Full nodal energy of 1-form fields (2n × 2n, component blocks stacked
/// [x-block; y-block]).
///
/// Flat metric: two decoupled stiffness blocks. The curl²+div² form differs
/// from the componentwise form by twice the Jacobian determinant, which is
/// a null Lagrangian: its integral over any field vanishing on ∂M is zero
/// already at the discrete P1 level (the integrand is an exact divergence
/// of edgewise-continuous data). Assembling the decoupled form keeps that
/// cancellation exact instead of leaving it to rounding.
///
/// Cap metric: the genuinely coupled form ∫ μ⁻²((∂x b − ∂y a)² + (∂x a + ∂y b)²).
pub fn one_form_energy(mesh: &SimplicialMesh) -> Csr {
    let n = mesh.n_vertices();
    if mesh.metric.is_flat() {
        let s = stiffness(mesh);
        let mut t = Triplets::new(2 * n, 2 * n);
        for i in 0..n {
            let (cs, vs) = s.row(i);
            for (c, v) in cs.iter().zip(vs) {
                t.push(i, *c as usize, *v);
                t.push(n + i, n + *c as usize, *v);
            }
        }
        return t.to_csr();
    }
    let mut t = Triplets::new(2 * n, 2 * n);
    for ti in 0..mesh.n_triangles() {
        let tri = mesh.triangles[ti];
        let (g, area) = tri_gradients(mesh, ti);
        let w = mesh.integrate_triangle(ti, |p| {
            let mu = mesh.metric.mu(p);
            1.0 / (mu * mu)
        }) / area; // mean of μ⁻² over the element
        // curl = Σ_k (−g_k[1] a_k + g_k[0] b_k), div = Σ_k (g_k[0] a_k + g_k[1] b_k)
        let mut cvec = [0.0f64; 6];
        let mut dvec = [0.0f64; 6];
        for k in 0..3 {
            cvec[k] = -g[k][1];
            cvec[3 + k] = g[k][0];
            dvec[k] = g[k][0];
            dvec[3 + k] = g[k][1];
        }
        let dof = |k: usize| if k < 3 { tri[k] as usize } else { n + tri[k - 3] as usize };
        for i in 0..6 {
            for j in i..6 {
                let v = w * area * (cvec[i] * cvec[j] + dvec[i] * dvec[j]);
                if v != 0.0 {
                    t.push_sym(dof(i), dof(j), v);
                }
            }
        }
    }
    t.to_csr()
}

/// Mass of nodal 1-form fields: the unweighted P1 mass per component
/// (conformally invariant for the Cartesian coefficients), stacked.
pub fn one_form_mass(mesh: &SimplicialMesh) -> Csr {
    let n = mesh.n_vertices();
    let m = mass_matrix(mesh, 1);
    let mut t = Triplets::new(2 * n, 2 * n);
    for i in 0..n {
        let (cs, vs) = m.row(i);
        for (c, v) in cs.iter().zip(vs) {
            t.push(i, *c as usize, *v);
            t.push(n + i, n + *c as usize, *v);
        }
    }
    t.to_csr()
}

// ---------------------------------------------------------------------------
// nodal dof layouts

/// Stacked-component nodal layout with a kept-vertex subset.
#[derive(Debug, Clone)]
pub struct NodalLayout {
    pub comps: usize,
    pub n_vertices: usize,
    /// kept vertices (sorted), shared across components
    pub kept: Vec<u32>,
}

impl NodalLayout {
    pub fn dofs(&self) -> Vec<u32> {
        let n = self.n_vertices as u32;
        let mut out = Vec::with_capacity(self.comps * self.kept.len());
        for c in 0..self.comps as u32 {
            out.extend(self.kept.iter().map(|&v| c * n + v));
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.comps * self.kept.len()
    }
}

fn stack_subset(n_vertices: usize, comps: usize, kept: &[u32]) -> Vec<u32> {
    NodalLayout { comps, n_vertices, kept: kept.to_vec() }.dofs()
}

// ---------------------------------------------------------------------------
// weak conormal recovery

/// Conormal derivative data of a zero-trace p-form recovered from the
/// boundary rows of the energy matrix: at each boundary vertex,
/// `grad_nu` holds the Cartesian coefficients of ∇_νω (ν inward), and the
/// split fields are ν⌟dω = ι*∇_νω and ι*δω = −ν⌟∇_νω.
pub struct ConormalData {
    pub grad_nu: FormField,
    pub nu_contraction_d: Vec<f64>,
    pub iota_delta: Vec<f64>,
    pub trace: BoundaryTrace,
}

/// Recover ∇_νω for a p-form vanishing on ∂M. `load` optionally subtracts
/// an assembled interior load (rows of ∫⟨source, φ⟩) so that sources with a
/// known right-hand side recover the flux exactly in the discrete balance.
pub fn weak_conormal_trace(
    mesh: &SimplicialMesh,
    omega: &FormField,
    load: Option<&[f64]>,
) -> Result<ConormalData, AssemblyError> {
    crate::forms::require_zero_trace(omega, mesh)?;
    let n = mesh.n_vertices();
    let comps = component_count(omega.degree);
    let frame = boundary_frame(mesh);
    let energy = match omega.degree {
        0 => stiffness(mesh),
        1 => one_form_energy(mesh),
        _ => two_form_energy(mesh),
    };
    // flatten the field into the stacked layout and apply the energy
    let mut x = vec![0.0; comps * n];
    for (c, comp) in omega.components.iter().enumerate() {
        x[c * n..(c + 1) * n].copy_from_slice(comp);
    }
    let mut r = vec![0.0; comps * n];
    energy.matvec(&x, &mut r);
    if let Some(l) = load {
        assert_eq!(l.len(), r.len());
        for (ri, li) in r.iter_mut().zip(l) {
            *ri -= li;
        }
    }
    // The boundary rows carry the outward flux of the energy's Green
    // identity: r_b,c ≈ −w_b^g μ_b^(−2p) (∇_νω)_c with ν the inward normal.
    let mut grad_nu = FormField::zeros(omega.degree, n);
    let p2 = 2.0 * omega.degree as f64;
    for s in 0..frame.len() {
        let v = frame.vertex[s] as usize;
        let scale = -frame.mu[s].powf(p2) / frame.w_metric[s];
        for c in 0..comps {
            grad_nu.components[c][v] = r[c * n + v] * scale;
        }
    }
    let trace = trace_split(&grad_nu, &frame)?;
    let nu_contraction_d = trace.tangential.clone();
    let iota_delta: Vec<f64> = trace.normal.iter().map(|&x| -x).collect();
    Ok(ConormalData { grad_nu, nu_contraction_d, iota_delta, trace })
}

// ---------------------------------------------------------------------------
// biharmonic Steklov building parts

/// The two quadratic forms of the biharmonic Steklov problem on zero-trace
/// fields: a(ω) ≈ ∫|Δω|² via Kᵀdiag(m)⁻¹K on interior DOFs, and
/// b(ω) ≈ ∮|∇_νω|² via the boundary rows of the energy.
pub struct BsParts {
    pub degree: u8,
    pub layout_int: NodalLayout,
    /// energy on interior DOFs
    pub k_int: Csr,
    /// inverse lumped mass on interior DOFs
    pub m_int_inv: Vec<f64>,
    /// boundary rows × interior columns of the energy
    pub g_bnd: Csr,
    /// diagonal weights μ^(2p−1)/w per boundary row
    pub d_bnd: Vec<f64>,
}

impl BsParts {
    pub fn dim(&self) -> usize {
        self.layout_int.dim()
    }

    /// a(v) = (Kv)ᵀ diag(m)⁻¹ (Kv)
    pub fn a_form(&self, v: &[f64]) -> f64 {
        let mut kv = vec![0.0; v.len()];
        self.k_int.matvec(v, &mut kv);
        kv.iter().zip(&self.m_int_inv).map(|(x, mi)| x * x * mi).sum()
    }

    /// b(v) = Σ_b d_b (G v)_b²
    pub fn b_form(&self, v: &[f64]) -> f64 {
        let mut gv = vec![0.0; self.g_bnd.n_rows];
        self.g_bnd.matvec(v, &mut gv);
        gv.iter().zip(&self.d_bnd).map(|(x, d)| x * x * d).sum()
    }

    /// explicit B matrix (Gᵀ diag(d) G), interior × interior
    pub fn b_matrix(&self) -> Csr {
        let mut t = Triplets::new(self.dim(), self.dim());
        for b in 0..self.g_bnd.n_rows {
            let (cs, vs) = self.g_bnd.row(b);
            let d = self.d_bnd[b];
            for (i, (ci, vi)) in cs.iter().zip(vs).enumerate() {
                for (cj, vj) in cs.iter().zip(vs).skip(i) {
                    let val = d * vi * vj;
                    if *ci == *cj {
                        t.push(*ci as usize, *cj as usize, val);
                    } else {
                        t.push_sym(*ci as usize, *cj as usize, val);
                    }
                }
            }
        }
        t.to_csr()
    }
}

pub fn bs_parts(mesh: &SimplicialMesh, degree: u8) -> Result<BsParts, AssemblyError> {
    let n = mesh.n_vertices();
    let comps = component_count(degree);
    let blocks = scalar_building_blocks(mesh, degree);
    let energy_full = match degree {
        0 => blocks.energy.clone(),
        1 => one_form_energy(mesh),
        2 => blocks.energy.clone(),
        d => return Err(AssemblyError::UnsupportedDegree { problem: "bs", degree: d }),
    };
    let layout_int = NodalLayout { comps, n_vertices: n, kept: blocks.interior_vertices.clone() };
    let int_dofs = layout_int.dofs();
    let bnd_dofs = stack_subset(n, comps, &blocks.boundary_vertices);
    let k_int = energy_full.submatrix(&int_dofs, &int_dofs);
    let g_bnd = energy_full.submatrix(&bnd_dofs, &int_dofs);
    // interior lumped mass (degree weight; the p=1 coefficient weight is 1)
    let lumped = if degree == 1 { lumped_nodal_mass(mesh, 1) } else { blocks.mass_lumped.clone() };
    let m_int_inv: Vec<f64> = int_dofs
        .iter()
        .map(|&d| 1.0 / lumped[(d as usize) % n])
        .collect();
    // boundary weights per stacked boundary row
    let frame = &blocks.frame;
    let exp = 2.0 * degree as f64 - 1.0;
    let d_per_vertex: Vec<f64> = (0..frame.len())
        .map(|s| frame.mu[s].powf(exp) / frame.w_flat[s])
        .collect();
    let mut d_bnd = Vec::with_capacity(bnd_dofs.len());
    for _c in 0..comps {
        for &v in &blocks.boundary_vertices {
            let s = frame.slot[v as usize].expect("boundary vertex has a frame slot") as usize;
            d_bnd.push(d_per_vertex[s]);
        }
    }
    Ok(BsParts { degree, layout_int, k_int, m_int_inv, g_bnd, d_bnd })
}

// ---------------------------------------------------------------------------
// the pencil

/// A symmetric eigenvalue pencil with whatever implicit machinery its kind
/// requires. All applications are deterministic.
pub struct OperatorPencil {
    pub kind: PencilKind,
    pub label: String,
    pub dim: usize,
    /// true when A is known positive definite on the reduced space
    /// (allows the unshifted factorization)
    pub a_definite: bool,
    /// crude eigenvalue scale (trace ratio) used to pick shifts and to keep
    /// residuals of kernel pairs (λ = 0) meaningful
    pub value_scale: f64,
    pub b_trace: f64,
    /// gram matrix of the boundary trace in pencil coordinates, when the
    /// pencil's fields have one (Neumann/Robin families)
    trace_gram: Option<Csr>,
    ops: Ops,
}

enum Ops {
    Direct {
        a: Csr,
        b: Csr,
    },
    Kmode {
        k: Csr,
        k_factor: SkylineLdl,
        m_inv: Vec<f64>,
        b: Csr,
    },
    Schur {
        full: Csr,
        bnd: Vec<u32>,
        kii_factor: SkylineLdl,
        kib: Csr,
        kbi: Csr,
        kbb: Csr,
        b: Csr,
    },
    Quotient {
        a_diag: Vec<f64>,
        kii_factor: SkylineLdl,
        kib: Csr,
        mass_full: Csr,
        bnd: Vec<u32>,
        int: Vec<u32>,
    },
}

/// A prepared application of (A − σB)⁻¹.
pub struct ShiftedSolve {
    factor: SkylineLdl,
    /// for Schur pencils: scatter boundary rhs into the full system
    schur: Option<(Vec<u32>, usize)>,
}

impl ShiftedSolve {
    pub fn apply(&self, rhs: &[f64], out: &mut [f64]) {
        match &self.schur {
            None => {
                let x = self.factor.solve(rhs);
                out.copy_from_slice(&x);
            }
            Some((bnd, full_dim)) => {
                let mut full_rhs = vec![0.0; *full_dim];
                for (k, &d) in bnd.iter().enumerate() {
                    full_rhs[d as usize] = rhs[k];
                }
                let x = self.factor.solve(&full_rhs);
                for (k, &d) in bnd.iter().enumerate() {
                    out[k] = x[d as usize];
                }
            }
        }
    }
}

impl OperatorPencil {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// y = A x (for Schur kinds this applies the complement implicitly).
    pub fn apply_a(&self, x: &[f64], y: &mut [f64]) {
        match &self.ops {
            Ops::Direct { a, .. } => a.matvec(x, y),
            Ops::Kmode { k, m_inv, .. } => {
                let mut kx = vec![0.0; x.len()];
                k.matvec(x, &mut kx);
                for (v, mi) in kx.iter_mut().zip(m_inv) {
                    *v *= mi;
                }
                let t = kx;
                k.matvec(&t, y);
            }
            Ops::Schur { kii_factor, kib, kbi, kbb, .. } => {
                let mut t = vec![0.0; kib.n_rows];
                kib.matvec(x, &mut t);
                let w = kii_factor.solve(&t);
                kbb.matvec(x, y);
                let mut correction = vec![0.0; y.len()];
                kbi.matvec(&w, &mut correction);
                for (yi, c) in y.iter_mut().zip(&correction) {
                    *yi -= c;
                }
            }
            Ops::Quotient { a_diag, .. } => {
                for ((yi, xi), d) in y.iter_mut().zip(x).zip(a_diag) {
                    *yi = xi * d;
                }
            }
        }
    }

    /// y = B x.
    pub fn apply_b(&self, x: &[f64], y: &mut [f64]) {
        match &self.ops {
            Ops::Direct { b, .. } => b.matvec(x, y),
            Ops::Kmode { b, .. } => b.matvec(x, y),
            Ops::Schur { b, .. } => b.matvec(x, y),
            Ops::Quotient { kii_factor, kib, mass_full, bnd, int, .. } => {
                // extension u = [x on bnd; −K_ii⁻¹ K_ib x], then Eᵀ M u
                let mut t = vec![0.0; kib.n_rows];
                kib.matvec(x, &mut t);
                let w = kii_factor.solve(&t);
                let full_dim = mass_full.n_rows;
                let mut u = vec![0.0; full_dim];
                for (k, &d) in bnd.iter().enumerate() {
                    u[d as usize] = x[k];
                }
                for (k, &d) in int.iter().enumerate() {
                    u[d as usize] = -w[k];
                }
                let mut z = vec![0.0; full_dim];
                mass_full.matvec(&u, &mut z);
                let zi: Vec<f64> = int.iter().map(|&d| z[d as usize]).collect();
                let s = kii_factor.solve(&zi);
                let mut y_corr = vec![0.0; x.len()];
                kib.matvec_t_add(&s, 1.0, &mut y_corr);
                for (k, &d) in bnd.iter().enumerate() {
                    y[k] = z[d as usize] - y_corr[k];
                }
            }
        }
    }

    /// Apply A⁻¹B (KMode and Quotient kinds only).
    pub fn apply_ainv_b(&self, x: &[f64], y: &mut [f64]) {
        match &self.ops {
            Ops::Kmode { k_factor, m_inv, b, .. } => {
                let mut bx = vec![0.0; x.len()];
                b.matvec(x, &mut bx);
                let mut w = k_factor.solve(&bx);
                for (wi, mi) in w.iter_mut().zip(m_inv) {
                    // A⁻¹ = K⁻¹ diag(m) K⁻¹
                    *wi /= mi;
                }
                let z = k_factor.solve(&w);
                y.copy_from_slice(&z);
            }
            Ops::Quotient { a_diag, .. } => {
                let mut bx = vec![0.0; x.len()];
                self.apply_b(x, &mut bx);
                for ((yi, bi), d) in y.iter_mut().zip(&bx).zip(a_diag) {
                    *yi = bi / d;
                }
            }
            _ => panic!("apply_ainv_b is defined for KMode/Quotient pencils"),
        }
    }

    /// Prepare (A − σB)⁻¹ (GeneralizedSmallest and SchurBoundary kinds).
    pub fn make_shifted(&self, sigma: f64) -> Result<ShiftedSolve, SparseError> {
        match &self.ops {
            Ops::Direct { a, b } => {
                let shifted = if sigma == 0.0 { a.clone() } else { a.add_scaled(b, -sigma) };
                Ok(ShiftedSolve { factor: SkylineLdl::factor_rcm(&shifted)?, schur: None })
            }
            Ops::Schur { full, bnd, b, .. } => {
                // full + |σ|·B scattered onto boundary DOFs stays sparse and,
                // for σ < 0, positive definite
                let mut t = Triplets::new(full.n_rows, full.n_cols);
                for i in 0..full.n_rows {
                    let (cs, vs) = full.row(i);
                    for (c, v) in cs.iter().zip(vs) {
                        t.push(i, *c as usize, *v);
                    }
                }
                for bi in 0..b.n_rows {
                    let (cs, vs) = b.row(bi);
                    for (c, v) in cs.iter().zip(vs) {
                        t.push(bnd[bi] as usize, bnd[*c as usize] as usize, -sigma * v);
                    }
                }
                let shifted = t.to_csr();
                Ok(ShiftedSolve {
                    factor: SkylineLdl::factor_rcm(&shifted)?,
                    schur: Some((bnd.clone(), full.n_rows)),
                })
            }
            _ => panic!("make_shifted is defined for Direct/Schur pencils"),
        }
    }

    /// Relative residual of the pencil's true operators:
    /// ‖Av − λBv‖₂ / (‖Av‖₂ + (|λ| + scale)‖Bv‖₂). The scale term keeps
    /// the quotient meaningful for kernel pairs, where ‖Av‖ itself is the
    /// quantity tending to zero.
    pub fn residual(&self, lambda: f64, v: &[f64]) -> f64 {
        let mut av = vec![0.0; v.len()];
        let mut bv = vec![0.0; v.len()];
        self.apply_a(v, &mut av);
        self.apply_b(v, &mut bv);
        let mut num = 0.0;
        let mut na = 0.0;
        let mut nb = 0.0;
        for (a, b) in av.iter().zip(&bv) {
            let r = a - lambda * b;
            num += r * r;
            na += a * a;
            nb += b * b;
        }
        let den = na.sqrt() + (lambda.abs() + self.value_scale) * nb.sqrt();
        (num.sqrt() / den.max(1e-300)).min(1.0)
    }

    /// (‖ω‖²_{L²(∂M)}, ‖ω‖²_{L²(M)}) of a pencil-space vector, for pencils
    /// whose fields carry a boundary trace (Robin/Neumann families). For
    /// edge-element pencils the boundary norm is the tangential trace norm
    /// (the normal part vanishes in the continuum problems these serve).
    pub fn trace_norms(&self, v: &[f64]) -> Option<(f64, f64)> {
        match &self.ops {
            Ops::Direct { b, .. } => self.trace_gram.as_ref().map(|g| {
                let mut gv = vec![0.0; v.len()];
                g.matvec(v, &mut gv);
                let num: f64 = v.iter().zip(&gv).map(|(a, b)| a * b).sum();
                let mut bv = vec![0.0; v.len()];
                b.matvec(v, &mut bv);
                let den: f64 = v.iter().zip(&bv).map(|(a, b)| a * b).sum();
                (num, den)
            }),
            _ => None,
        }
    }

    /// Dense (A, B) for the reference solver.
    pub fn densify(&self) -> (nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>) {
        let n = self.dim;
        match &self.ops {
            Ops::Direct { a, b } => (a.to_dense(), b.to_dense()),
            Ops::Kmode { b, .. } => {
                let mut ad = nalgebra::DMatrix::zeros(n, n);
                let mut x = vec![0.0; n];
                let mut y = vec![0.0; n];
                for j in 0..n {
                    x[j] = 1.0;
                    self.apply_a(&x, &mut y);
                    for i in 0..n {
                        ad[(i, j)] = y[i];
                    }
                    x[j] = 0.0;
                }
                (ad, b.to_dense())
            }
            Ops::Schur { b, .. } => {
                let mut ad = nalgebra::DMatrix::zeros(n, n);
                let mut x = vec![0.0; n];
                let mut y = vec![0.0; n];
                for j in 0..n {
                    x[j] = 1.0;
                    self.apply_a(&x, &mut y);
                    for i in 0..n {
                        ad[(i, j)] = y[i];
                    }
                    x[j] = 0.0;
                }
                (ad, b.to_dense())
            }
            Ops::Quotient { a_diag, .. } => {
                let mut ad = nalgebra::DMatrix::zeros(n, n);
                for i in 0..n {
                    ad[(i, i)] = a_diag[i];
                }
                let mut bd = nalgebra::DMatrix::zeros(n, n);
                let mut x = vec![0.0; n];
                let mut y = vec![0.0; n];
                for j in 0..n {
                    x[j] = 1.0;
                    self.apply_b(&x, &mut y);
                    for i in 0..n {
                        bd[(i, j)] = y[i];
                    }
                    x[j] = 0.0;
                }
                (ad, bd)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// problem assembly

/// Assemble the pencil for a problem/degree on a mesh.
pub fn assemble(spec: ProblemSpec, mesh: &SimplicialMesh) -> Result<OperatorPencil, AssemblyError> {
    let label = spec.label();
    match (spec.problem, spec.degree) {
        (Problem::Dirichlet, p @ (0 | 2)) => {
            let blocks = scalar_building_blocks(mesh, p);
            let keep = &blocks.interior_vertices;
            let a = blocks.energy.submatrix(keep, keep);
            let b = blocks.mass.submatrix(keep, keep);
            Ok(direct(label, a, b, None, true))
        }
        (Problem::Dirichlet, 1) => {
            let blocks = scalar_building_blocks(mesh, 1);
            let dofs = stack_subset(mesh.n_vertices(), 2, &blocks.interior_vertices);
            let a = one_form_energy(mesh).submatrix(&dofs, &dofs);
            let b = one_form_mass(mesh).submatrix(&dofs, &dofs);
            Ok(direct(label, a, b, None, true))
        }
        (Problem::Neumann, 0) => {
            let blocks = scalar_building_blocks(mesh, 0);
            Ok(direct(label, blocks.energy, blocks.mass, Some(blocks.boundary_mass), false))
        }
        (Problem::Neumann, 2) => {
            // the full trace of a 2-form on a curve is its normal part, so
            // the essential condition coincides with the Dirichlet one
            let blocks = scalar_building_blocks(mesh, 2);
            let keep = &blocks.interior_vertices;
            let a = blocks.energy.submatrix(keep, keep);
            let b = blocks.mass.submatrix(keep, keep);
            Ok(direct(label, a, b, None, true))
        }
        (Problem::Neumann, 1) => {
            let ec = whitney::edge_complex(mesh);
            let a = whitney::form_energy(mesh, &ec);
            let b = whitney::mass_m1(mesh, &ec);
            let gram = whitney::boundary_trace_gram(mesh, &ec);
            let g = diag_csr(&gram);
            Ok(direct(label, a, b, Some(g), false))
        }
        (Problem::Robin { tau }, 0) => {
            let blocks = scalar_building_blocks(mesh, 0);
            let a = if tau == 0.0 {
                blocks.energy
            } else {
                blocks.energy.add_scaled(&blocks.boundary_mass, tau)
            };
            Ok(direct(label, a, blocks.mass, Some(blocks.boundary_mass), tau > 0.0))
        }
        (Problem::Robin { tau }, 1) => {
            let ec = whitney::edge_complex(mesh);
            let energy = whitney::form_energy(mesh, &ec);
            let gram = whitney::boundary_trace_gram(mesh, &ec);
            let a = if tau == 0.0 { energy } else { energy.add_diag(&gram, tau) };
            let b = whitney::mass_m1(mesh, &ec);
            Ok(direct(label, a, b, Some(diag_csr(&gram)), false))
        }
        (Problem::Robin { .. }, 2) => {
            // ι*ω ≡ 0 for 2-forms on a curve: the Robin term vanishes and the
            // problem reduces to the (essential normal-trace) one above
            assemble(ProblemSpec { problem: Problem::Neumann, degree: 2 }, mesh)
        }
        (Problem::Dtn, 0) => {
            let blocks = scalar_building_blocks(mesh, 0);
            let bnd = blocks.boundary_vertices.clone();
            let int = blocks.interior_vertices.clone();
            let b = blocks.boundary_mass.submatrix(&bnd, &bnd);
            schur(label, blocks.energy, bnd, int, b)
        }
        (Problem::Dtn, 1) => {
            let ec = whitney::edge_complex(mesh);
            let full = whitney::form_energy(mesh, &ec);
            let gram = whitney::boundary_trace_gram(mesh, &ec);
            let mut bnd: Vec<u32> = ec.boundary_edge_ids.clone();
            bnd.sort_unstable();
            let int: Vec<u32> = (0..ec.n_edges() as u32).filter(|e| !ec.is_boundary_edge[*e as usize]).collect();
            let bdiag: Vec<f64> = bnd.iter().map(|&e| gram[e as usize]).collect();
            schur(label, full, bnd, int, diag_csr(&bdiag))
        }
        (Problem::Dtn, d) => Err(AssemblyError::UnsupportedDegree { problem: "dtn", degree: d }),
        (Problem::BiharmonicSteklov, p @ (0 | 1 | 2)) => {
            let parts = bs_parts(mesh, p)?;
            let b = parts.b_matrix();
            let k_factor = SkylineLdl::factor_rcm(&parts.k_int)?;
            let b_trace = b.trace();
            Ok(OperatorPencil {
                kind: PencilKind::KMode,
                label,
                dim: parts.dim(),
                a_definite: true,
                value_scale: 0.0,
                b_trace,
                trace_gram: None,
                ops: Ops::Kmode { k: parts.k_int, k_factor, m_inv: parts.m_int_inv, b },
            })
        }
        (problem, degree) => Err(AssemblyError::UnsupportedDegree { problem: problem.name(), degree }),
    }
}

/// The boundary quotient pencil: smallest eigenvalue = min over
/// discrete-harmonic p-forms of ‖ω‖²_{L²(∂M)} / ‖ω‖²_{L²(M)}.
pub fn bs_harmonic_quotient(mesh: &SimplicialMesh, degree: u8) -> Result<OperatorPencil, AssemblyError> {
    let n = mesh.n_vertices();
    let comps = component_count(degree);
    let blocks = scalar_building_blocks(mesh, degree);
    let energy_full = match degree {
        1 => one_form_energy(mesh),
        _ => blocks.energy.clone(),
    };
    let mass_full = match degree {
        1 => one_form_mass(mesh),
        _ => blocks.mass.clone(),
    };
    let bnd = stack_subset(n, comps, &blocks.boundary_vertices);
    let int = stack_subset(n, comps, &blocks.interior_vertices);
    let kii = energy_full.submatrix(&int, &int);
    let kib = energy_full.submatrix(&int, &bnd);
    let kii_factor = SkylineLdl::factor_rcm(&kii)?;
    // lumped boundary p-form mass: w^g μ^(−2p) per component slot
    let frame = &blocks.frame;
    let exp = -2.0 * degree as f64;
    let mut a_diag = Vec::with_capacity(bnd.len());
    for _c in 0..comps {
        for &v in &blocks.boundary_vertices {
            let s = frame.slot[v as usize].unwrap() as usize;
            a_diag.push(frame.w_metric[s] * frame.mu[s].powf(exp));
        }
    }
    let b_trace = a_diag.iter().sum();
    Ok(OperatorPencil {
        kind: PencilKind::HarmonicQuotient,
        label: format!("bs-quotient/p{degree}"),
        dim: bnd.len(),
        a_definite: true,
        value_scale: 0.0,
        b_trace,
        trace_gram: None,
        ops: Ops::Quotient { a_diag, kii_factor, kib, mass_full, bnd, int },
    })
}

fn direct(label: String, a: Csr, b: Csr, trace_gram: Option<Csr>, a_definite: bool) -> OperatorPencil {
    debug_assert!(a.symmetry_defect() <= 1e-12 * a.max_abs().max(1.0));
    let b_trace = b.trace();
    OperatorPencil {
        kind: PencilKind::GeneralizedSmallest,
        label,
        dim: a.n_rows,
        a_definite,
        value_scale: (a.trace() / b_trace).abs(),
        b_trace,
        trace_gram,
        ops: Ops::Direct { a, b },
    }
}

impl OperatorPencil {
    /// Build a plain A x = λ B x pencil from explicit matrices.
    pub fn from_matrices(label: impl Into<String>, a: Csr, b: Csr, a_definite: bool) -> OperatorPencil {
        direct(label.into(), a, b, None, a_definite)
    }
}

fn schur(label: String, full: Csr, bnd: Vec<u32>, int: Vec<u32>, b: Csr) -> Result<OperatorPencil, AssemblyError> {
    let kii = full.submatrix(&int, &int);
    let kib = full.submatrix(&int, &bnd);
    let kbi = full.submatrix(&bnd, &int);
    let kbb = full.submatrix(&bnd, &bnd);
    let kii_factor = SkylineLdl::factor_rcm(&kii)?;
    let b_trace = b.trace();
    Ok(OperatorPencil {
        kind: PencilKind::SchurBoundary,
        label,
        dim: bnd.len(),
        a_definite: false,
        value_scale: (kbb.trace() / b_trace).abs(),
        b_trace,
        trace_gram: None,
        ops: Ops::Schur { full, bnd, kii_factor, kib, kbi, kbb, b },
    })
}

fn diag_csr(d: &[f64]) -> Csr {
    let mut t = Triplets::new(d.len(), d.len());
    for (i, &v) in d.iter().enumerate() {
        t.push(i, i, v);
    }
    t.to_csr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_domain, DomainTag};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disk(h: f64) -> SimplicialMesh {
        gen_domain(DomainTag::Disk { r: 1.0 }, h).unwrap()
    }

    fn rand_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn mass_partition_of_unity_unit_square() {
        let mesh = gen_domain(DomainTag::Square { side: 1.0 }, 0.25).unwrap();
        let m = mass_matrix(&mesh, 0);
        let ones = vec![1.0; mesh.n_vertices()];
        let mut y = vec![0.0; mesh.n_vertices()];
        m.matvec(&ones, &mut y);
        let total: f64 = y.iter().sum();
        assert!((total - 1.0).abs() < 1e-13, "1'M1 = {total}");
        let lumped: f64 = lumped_nodal_mass(&mesh, 0).iter().sum();
        assert!((lumped - 1.0).abs() < 1e-13);
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let mesh = disk(0.2);
        let s = stiffness(&mesh);
        let ones = vec![1.0; mesh.n_vertices()];
        let mut y = vec![0.0; mesh.n_vertices()];
        s.matvec(&ones, &mut y);
        let worst = y.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(worst < 1e-12 * s.max_abs(), "S1 residual {worst}");
    }

    #[test]
    fn cap_mass_integrates_sphere_area() {
        let mesh = gen_domain(DomainTag::Cap { alpha: std::f64::consts::FRAC_PI_2 }, 0.1).unwrap();
        let m = mass_matrix(&mesh, 0);
        let ones = vec![1.0; mesh.n_vertices()];
        let mut y = vec![0.0; mesh.n_vertices()];
        m.matvec(&ones, &mut y);
        let area: f64 = y.iter().sum();
        let exact = 2.0 * std::f64::consts::PI;
        assert!((area - exact).abs() < 0.01 * exact, "hemisphere area {area}");
        // boundary mass recovers the equator length
        let bm = boundary_mass(&mesh);
        let mut yb = vec![0.0; mesh.n_vertices()];
        bm.matvec(&ones, &mut yb);
        let per: f64 = yb.iter().sum();
        assert!((per - exact).abs() < 0.01 * exact, "equator length {per}");
    }

    #[test]
    fn conormal_recovery_scalar_quadratic() {
        // discrete solution of −Δf = 4, f|∂ = 0 on the unit disk is ≈ 1 − r²;
        // the recovered inward normal derivative is ≈ 2 all along the circle
        let mesh = disk(0.05);
        let n = mesh.n_vertices();
        let blocks = scalar_building_blocks(&mesh, 0);
        let int = &blocks.interior_vertices;
        let four = vec![4.0; n];
        let mut load = vec![0.0; n];
        blocks.mass.matvec(&four, &mut load);
        let s_ii = blocks.energy.submatrix(int, int);
        let rhs: Vec<f64> = int.iter().map(|&v| load[v as usize]).collect();
        let sol = SkylineLdl::factor_rcm(&s_ii).unwrap().solve(&rhs);
        let mut f = FormField::zeros(0, n);
        for (k, &v) in int.iter().enumerate() {
            f.components[0][v as usize] = sol[k];
        }
        let data = weak_conormal_trace(&mesh, &f, Some(&load)).unwrap();
        let frame = boundary_frame(&mesh);
        let mut mean = 0.0;
        for s in 0..frame.len() {
            let v = data.nu_contraction_d[s];
            assert!((v - 2.0).abs() < 0.1, "slot {s}: flux {v}");
            mean += v;
        }
        mean /= frame.len() as f64;
        assert!((mean - 2.0).abs() < 0.03, "mean flux {mean}");
        assert!(data.iota_delta.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conormal_recovery_one_form() {
        // −Δω = (4, 0) with vanishing full trace on the unit disk gives
        // ω ≈ (1 − r²) dx, whose conormal data along the circle is
        // ν⌟dω ≈ −2y and ι*δω ≈ 2x
        let mesh = disk(0.05);
        let n = mesh.n_vertices();
        let bmask = mesh.boundary_mask();
        let int: Vec<u32> = (0..n as u32).filter(|&v| !bmask[v as usize]).collect();
        let dofs = stack_subset(n, 2, &int);
        let m1 = one_form_mass(&mesh);
        let mut c = vec![0.0; 2 * n];
        c[..n].iter_mut().for_each(|v| *v = 4.0);
        let mut load = vec![0.0; 2 * n];
        m1.matvec(&c, &mut load);
        let e1 = one_form_energy(&mesh);
        let a_ii = e1.submatrix(&dofs, &dofs);
        let rhs: Vec<f64> = dofs.iter().map(|&d| load[d as usize]).collect();
        let sol = SkylineLdl::factor_rcm(&a_ii).unwrap().solve(&rhs);
        let mut omega = FormField::zeros(1, n);
        for (k, &d) in dofs.iter().enumerate() {
            omega.components[(d as usize) / n][(d as usize) % n] = sol[k];
        }
        let data = weak_conormal_trace(&mesh, &omega, Some(&load)).unwrap();
        let frame = boundary_frame(&mesh);
        for s in 0..frame.len() {
            let p = mesh.vertices[frame.vertex[s] as usize];
            let td = data.nu_contraction_d[s];
            let dd = data.iota_delta[s];
            assert!((td + 2.0 * p[1]).abs() < 0.1, "slot {s}: nu_d {td} vs {}", -2.0 * p[1]);
            assert!((dd - 2.0 * p[0]).abs() < 0.1, "slot {s}: iota_delta {dd} vs {}", 2.0 * p[0]);
        }
    }

    #[test]
    fn robin_zero_matches_neumann_exactly() {
        let mesh = disk(0.15);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for degree in [0u8, 1, 2] {
            let robin = assemble(
                ProblemSpec { problem: Problem::Robin { tau: 0.0 }, degree },
                &mesh,
            )
            .unwrap();
            let neumann =
                assemble(ProblemSpec { problem: Problem::Neumann, degree }, &mesh).unwrap();
            assert_eq!(robin.dim(), neumann.dim());
            let x = rand_vec(robin.dim(), &mut rng);
            let mut y1 = vec![0.0; robin.dim()];
            let mut y2 = vec![0.0; robin.dim()];
            robin.apply_a(&x, &mut y1);
            neumann.apply_a(&x, &mut y2);
            assert_eq!(y1, y2, "degree {degree} operators differ");
        }
    }

    #[test]
    fn flat_scalar_degrees_share_matrices() {
        let mesh = disk(0.15);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p0 = assemble(ProblemSpec { problem: Problem::Dirichlet, degree: 0 }, &mesh).unwrap();
        let p2 = assemble(ProblemSpec { problem: Problem::Dirichlet, degree: 2 }, &mesh).unwrap();
        assert_eq!(p0.dim(), p2.dim());
        let x = rand_vec(p0.dim(), &mut rng);
        let (mut a0, mut a2) = (vec![0.0; p0.dim()], vec![0.0; p0.dim()]);
        p0.apply_a(&x, &mut a0);
        p2.apply_a(&x, &mut a2);
        assert_eq!(a0, a2);
        let (mut b0, mut b2) = (vec![0.0; p0.dim()], vec![0.0; p0.dim()]);
        p0.apply_b(&x, &mut b0);
        p2.apply_b(&x, &mut b2);
        assert_eq!(b0, b2);
    }

    #[test]
    fn dtn_refuses_top_degree() {
        let mesh = disk(0.3);
        let err = assemble(ProblemSpec { problem: Problem::Dtn, degree: 2 }, &mesh);
        assert!(matches!(err, Err(AssemblyError::UnsupportedDegree { .. })));
    }

    #[test]
    fn cap_energies_are_symmetric() {
        let mesh = gen_domain(DomainTag::Cap { alpha: 1.0 }, 0.15).unwrap();
        for m in [one_form_energy(&mesh), two_form_energy(&mesh), mass_matrix(&mesh, 2)] {
            assert!(m.symmetry_defect() <= 1e-12 * m.max_abs());
        }
    }

    #[test]
    fn schur_complement_annihilates_constants() {
        let mesh = disk(0.25);
        let dtn = assemble(ProblemSpec { problem: Problem::Dtn, degree: 0 }, &mesh).unwrap();
        let ones = vec![1.0; dtn.dim()];
        let mut y = vec![0.0; dtn.dim()];
        dtn.apply_a(&ones, &mut y);
        let scale = {
            let (ad, _) = dtn.densify();
            ad.abs().max()
        };
        let worst = y.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(worst <= 1e-9 * scale, "S1 residual {worst} vs scale {scale}");
    }

    #[test]
    fn shifted_solves_invert_the_pencil() {
        let mesh = disk(0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for pencil in [
            assemble(ProblemSpec { problem: Problem::Neumann, degree: 0 }, &mesh).unwrap(),
            assemble(ProblemSpec { problem: Problem::Neumann, degree: 1 }, &mesh).unwrap(),
            assemble(ProblemSpec { problem: Problem::Dtn, degree: 0 }, &mesh).unwrap(),
            assemble(ProblemSpec { problem: Problem::Dtn, degree: 1 }, &mesh).unwrap(),
        ] {
            let sigma = -0.7;
            let solve = pencil.make_shifted(sigma).unwrap();
            let rhs = rand_vec(pencil.dim(), &mut rng);
            let mut x = vec![0.0; pencil.dim()];
            solve.apply(&rhs, &mut x);
            let mut ax = vec![0.0; pencil.dim()];
            let mut bx = vec![0.0; pencil.dim()];
            pencil.apply_a(&x, &mut ax);
            pencil.apply_b(&x, &mut bx);
            let mut err = 0.0f64;
            let mut den = 0.0f64;
            for i in 0..pencil.dim() {
                err += (ax[i] - sigma * bx[i] - rhs[i]).powi(2);
                den += rhs[i] * rhs[i];
            }
            let rel = (err / den).sqrt();
            assert!(rel < 1e-8, "{}: shifted solve residual {rel}", pencil.label);
        }
    }

    #[test]
    fn quotient_pencil_is_symmetric_psd() {
        let mesh = disk(0.25);
        let q = bs_harmonic_quotient(&mesh, 0).unwrap();
        let (ad, bd) = q.densify();
        let defect = (&bd - bd.transpose()).abs().max();
        assert!(defect <= 1e-10 * bd.abs().max(), "B defect {defect}");
        for i in 0..q.dim() {
            assert!(ad[(i, i)] > 0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..4 {
            let x = rand_vec(q.dim(), &mut rng);
            let mut bx = vec![0.0; q.dim()];
            q.apply_b(&x, &mut bx);
            let quad: f64 = x.iter().zip(&bx).map(|(a, b)| a * b).sum();
            assert!(quad >= -1e-10, "B quadratic form {quad}");
        }
    }

    #[test]
    fn bs_forms_approximate_the_integrals() {
        // ω = (1 − r²) dx on the disk: ∫|Δω|² = 16π, ∮|∇_νω|² = 8π
        let mesh = disk(0.0625);
        let parts = bs_parts(&mesh, 1).unwrap();
        let int = &parts.layout_int.kept;
        let mut v = vec![0.0; parts.dim()];
        for (k, &vi) in int.iter().enumerate() {
            let p = mesh.vertices[vi as usize];
            v[k] = 1.0 - p[0] * p[0] - p[1] * p[1];
        }
        let a = parts.a_form(&v);
        let exact_a = 16.0 * std::f64::consts::PI;
        assert!((a - exact_a).abs() < 0.1 * exact_a, "a-form {a} vs {exact_a}");
        let b = parts.b_form(&v);
        let exact_b = 8.0 * std::f64::consts::PI;
        assert!((b - exact_b).abs() < 0.3 * exact_b, "b-form {b} vs {exact_b}");
    }
}
