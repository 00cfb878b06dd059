//! Lowest-order edge elements for 1-form problems whose boundary condition
//! lives on the normal part (the Neumann/Robin family and the
//! Dirichlet-to-Neumann map).
//!
//! The degree of freedom on an edge is the circulation of the form along
//! it, oriented from the lower to the higher vertex index. Tangential
//! boundary data is then carried directly by boundary-edge DOFs, while the
//! condition on the normal part is the natural one of the weak
//! codifferential (tested against all nodal functions, boundary included).
//! This gives the discrete harmonic space its exact dimension — the first
//! Betti number of the domain — which nodal vector elements cannot achieve.
//!
//! Metric notes (chart metric g = μ²·flat): the L² pairing of 1-forms and
//! the circulation pairing ⟨dφ, ω⟩ are conformally invariant in two
//! dimensions, so the flat element matrices serve the cap as well; only
//! the exterior-derivative energy (weight μ⁻²), the scalar lumped mass
//! (weight μ²) inside the codifferential term, and boundary measures
//! (weight μ) see the conformal factor.

use crate::mesh::SimplicialMesh;
use crate::sparse::{Csr, Triplets};

/// Edge numbering and incidences of a triangle mesh.
#[derive(Debug, Clone)]
pub struct EdgeComplex {
    /// Canonical edges (a < b), sorted lexicographically.
    pub edges: Vec<[u32; 2]>,
    /// Per triangle: its three edges with the sign relating the canonical
    /// edge direction to the triangle's counterclockwise traversal.
    pub tri_edges: Vec<[(u32, f64); 3]>,
    /// Edge ids along the boundary, ordered by loop traversal.
    pub boundary_edge_ids: Vec<u32>,
    /// Sign relating the canonical direction to the loop direction.
    pub boundary_edge_sign: Vec<f64>,
    pub interior_edge_ids: Vec<u32>,
    pub is_boundary_edge: Vec<bool>,
    pub n_vertices: usize,
}

impl EdgeComplex {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_id(&self, a: u32, b: u32) -> u32 {
        let key = [a.min(b), a.max(b)];
        self.edges.binary_search(&key).expect("edge of the mesh") as u32
    }

    pub fn edge_length(&self, mesh: &SimplicialMesh, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let p = mesh.vertices[a as usize];
        let q = mesh.vertices[b as usize];
        ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
    }

    /// Circulations of a Cartesian-constant field (cx, cy): ∫_e ω = c·(b−a).
    pub fn circulations_of_constant(&self, mesh: &SimplicialMesh, c: [f64; 2]) -> Vec<f64> {
        self.edges
            .iter()
            .map(|&[a, b]| {
                let p = mesh.vertices[a as usize];
                let q = mesh.vertices[b as usize];
                c[0] * (q[0] - p[0]) + c[1] * (q[1] - p[1])
            })
            .collect()
    }
}

pub fn edge_complex(mesh: &SimplicialMesh) -> EdgeComplex {
    let mut edges: Vec<[u32; 2]> = Vec::with_capacity(3 * mesh.n_triangles());
    for tri in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            edges.push([a.min(b), a.max(b)]);
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let find = |a: u32, b: u32| -> u32 {
        edges.binary_search(&[a.min(b), a.max(b)]).unwrap() as u32
    };
    let tri_edges = mesh
        .triangles
        .iter()
        .map(|tri| {
            let mut out = [(0u32, 0.0f64); 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                out[k] = (find(a, b), if a < b { 1.0 } else { -1.0 });
            }
            out
        })
        .collect();

    let mut boundary_edge_ids = Vec::new();
    let mut boundary_edge_sign = Vec::new();
    for lp in &mesh.boundary_loops {
        for k in 0..lp.len() {
            let (a, b) = (lp[k], lp[(k + 1) % lp.len()]);
            boundary_edge_ids.push(find(a, b));
            boundary_edge_sign.push(if a < b { 1.0 } else { -1.0 });
        }
    }
    let mut is_boundary_edge = vec![false; edges.len()];
    for &e in &boundary_edge_ids {
        is_boundary_edge[e as usize] = true;
    }
    let interior_edge_ids = (0..edges.len() as u32).filter(|&e| !is_boundary_edge[e as usize]).collect();

    EdgeComplex {
        edges,
        tri_edges,
        boundary_edge_ids,
        boundary_edge_sign,
        interior_edge_ids,
        is_boundary_edge,
        n_vertices: mesh.n_vertices(),
    }
}

/// Barycentric gradients and area of triangle `t`.
fn tri_gradients(mesh: &SimplicialMesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let [a, b, c] = mesh.triangles[t];
    let p = [mesh.vertices[a as usize], mesh.vertices[b as usize], mesh.vertices[c as usize]];
    let area = mesh.triangle_area(t);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let u = p[(i + 1) % 3];
        let v = p[(i + 2) % 3];
        // rot90(v − u) / (2A) points toward vertex i
        g[i] = [-(v[1] - u[1]) / (2.0 * area), (v[0] - u[0]) / (2.0 * area)];
    }
    (g, area)
}

/// L² mass of edge-element 1-forms. Conformally invariant: the flat element
/// matrix is exact for the cap metric too.
pub fn mass_m1(mesh: &SimplicialMesh, ec: &EdgeComplex) -> Csr {
    let ne = ec.n_edges();
    let mut t = Triplets::new(ne, ne);
    for ti in 0..mesh.n_triangles() {
        let tri = mesh.triangles[ti];
        let (g, area) = tri_gradients(mesh, ti);
        let local = |v: u32| tri.iter().position(|&x| x == v).unwrap();
        let s = |i: usize, j: usize| g[i][0] * g[j][0] + g[i][1] * g[j][1];
        let p = |i: usize, j: usize| area * if i == j { 1.0 / 6.0 } else { 1.0 / 12.0 };
        for &(e, _) in &ec.tri_edges[ti] {
            for &(f, _) in &ec.tri_edges[ti] {
                if f < e {
                    continue;
                }
                let [ea, eb] = ec.edges[e as usize];
                let [fa, fb] = ec.edges[f as usize];
                let (a, b, c, d) = (local(ea), local(eb), local(fa), local(fb));
                // ∫ (λ_a dλ_b − λ_b dλ_a)·(λ_c dλ_d − λ_d dλ_c)
                let val = s(b, d) * p(a, c) - s(b, c) * p(a, d) - s(a, d) * p(b, c) + s(a, c) * p(b, d);
                t.push_sym(e as usize, f as usize, val);
            }
        }
    }
    t.to_csr()
}

/// Exterior-derivative energy ∫ μ⁻²(dω)² dx: rank-one per triangle in the
/// circulation sum, weighted by ∫_T μ⁻² / |T|².
pub fn curl_energy(mesh: &SimplicialMesh, ec: &EdgeComplex) -> Csr {
    let ne = ec.n_edges();
    let mut t = Triplets::new(ne, ne);
    for ti in 0..mesh.n_triangles() {
        let area = mesh.triangle_area(ti);
        let w = mesh.integrate_triangle(ti, |p| {
            let mu = mesh.metric.mu(p);
            1.0 / (mu * mu)
        }) / (area * area);
        for &(e, se) in &ec.tri_edges[ti] {
            for &(f, sf) in &ec.tri_edges[ti] {
                if f < e {
                    continue;
                }
                t.push_sym(e as usize, f as usize, w * se * sf);
            }
        }
    }
    t.to_csr()
}

/// Pairing rows ⟨dφ_v, ·⟩ of nodal gradients against edge DOFs
/// (n_vertices × n_edges). Conformally invariant like the mass.
pub fn grad_pairing(mesh: &SimplicialMesh, ec: &EdgeComplex) -> Csr {
    let mut t = Triplets::new(ec.n_vertices, ec.n_edges());
    for ti in 0..mesh.n_triangles() {
        let tri = mesh.triangles[ti];
        let (g, area) = tri_gradients(mesh, ti);
        let local = |v: u32| tri.iter().position(|&x| x == v).unwrap();
        for &(e, _) in &ec.tri_edges[ti] {
            let [ea, eb] = ec.edges[e as usize];
            let (a, b) = (local(ea), local(eb));
            // ∫_T w_e = (|T|/3)(dλ_b − dλ_a)
            let ie = [(g[b][0] - g[a][0]) * area / 3.0, (g[b][1] - g[a][1]) * area / 3.0];
            for (k, &v) in tri.iter().enumerate() {
                t.push(v as usize, e as usize, g[k][0] * ie[0] + g[k][1] * ie[1]);
            }
        }
    }
    t.to_csr()
}

/// Lumped nodal mass with the 0-form metric weight μ² (row sums of the
/// consistent weighted mass).
pub fn lumped_scalar_mass(mesh: &SimplicialMesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.n_vertices()];
    for ti in 0..mesh.n_triangles() {
        let tri = mesh.triangles[ti];
        let area = mesh.triangle_area(ti);
        let mids = mesh.edge_midpoints(ti);
        // midpoint-rule row sums: ∫ w λ_k = (A/3)Σ_m w(x_m) λ_k(x_m),
        // with λ_k = 1/2 on the two midpoints adjacent to vertex k
        let w: Vec<f64> = mids
            .iter()
            .map(|&p| {
                let mu = mesh.metric.mu(p);
                mu * mu
            })
            .collect();
        for k in 0..3 {
            // midpoints k–(k+1) and (k+2)–k touch vertex k
            m[tri[k] as usize] += area / 3.0 * 0.5 * (w[k] + w[(k + 2) % 3]);
        }
    }
    m
}

/// The full 1-form energy Ê = curl part + weak-codifferential part, the
/// latter with a lumped scalar mass so the operator stays sparse:
/// Ê = E_curl + Gᵀ diag(m)⁻¹ G with G = grad_pairing.
pub fn form_energy(mesh: &SimplicialMesh, ec: &EdgeComplex) -> Csr {
    let e_curl = curl_energy(mesh, ec);
    let g = grad_pairing(mesh, ec);
    let m = lumped_scalar_mass(mesh);
    let ne = ec.n_edges();
    let mut t = Triplets::new(ne, ne);
    for i in 0..ne {
        let (cs, vs) = e_curl.row(i);
        for (c, v) in cs.iter().zip(vs) {
            t.push(i, *c as usize, *v);
        }
    }
    for v in 0..ec.n_vertices {
        let (cs, vs) = g.row(v);
        let inv = 1.0 / m[v];
        for (i, (ci, vi)) in cs.iter().zip(vs).enumerate() {
            for (cj, vj) in cs.iter().zip(vs).skip(i) {
                let val = vi * vj * inv;
                let (a, b) = (*ci as usize, *cj as usize);
                if a == b {
                    t.push(a, a, val);
                } else {
                    t.push_sym(a, b, val);
                }
            }
        }
    }
    t.to_csr()
}

/// Diagonal boundary gram of the tangential trace: the trace of the edge
/// basis function on its own boundary edge is the constant 1/|e| (it
/// vanishes on every other boundary edge), so ∮ |ι*ω|² dμ picks up
/// (∫_e μ dl)/|e|² per boundary edge. Returned as a full-length diagonal.
pub fn boundary_trace_gram(mesh: &SimplicialMesh, ec: &EdgeComplex) -> Vec<f64> {
    let mut d = vec![0.0; ec.n_edges()];
    for &e in &ec.boundary_edge_ids {
        let [a, b] = ec.edges[e as usize];
        let p = mesh.vertices[a as usize];
        let q = mesh.vertices[b as usize];
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        let metric_len = len * 0.5 * (mesh.metric.mu(p) + mesh.metric.mu(q));
        d[e as usize] = metric_len / (len * len);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_domain, DomainTag};

    fn disk(h: f64) -> SimplicialMesh {
        gen_domain(DomainTag::Disk { r: 1.0 }, h).unwrap()
    }

    #[test]
    fn edge_counts_satisfy_euler() {
        for (tag, chi) in [
            (DomainTag::Disk { r: 1.0 }, 1i64),
            (DomainTag::Annulus { r_inner: 0.5, r_outer: 1.0 }, 0),
        ] {
            let mesh = gen_domain(tag, 0.2).unwrap();
            let ec = edge_complex(&mesh);
            let v = mesh.n_vertices() as i64;
            let e = ec.n_edges() as i64;
            let f = mesh.n_triangles() as i64;
            assert_eq!(v - e + f, chi);
        }
    }

    #[test]
    fn whitney_mass_on_the_reference_triangle() {
        // unit right triangle: ∫ |w_e|² = 1/3 for the leg from (0,0) to (1,0)
        let mesh = SimplicialMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary_loops: vec![vec![0, 1, 2]],
            metric: crate::mesh::MetricDescriptor::Flat,
            domain: None,
            h_target: 1.0,
        };
        let ec = edge_complex(&mesh);
        let m = mass_m1(&mesh, &ec);
        let e = ec.edge_id(0, 1) as usize;
        let (cs, vs) = m.row(e);
        let diag = cs.iter().zip(vs).find(|(c, _)| **c as usize == e).unwrap().1;
        assert!((diag - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn gradients_interpolate_exactly() {
        // the edge-element representative of a nodal gradient is exact, so
        // its mass form equals the scalar stiffness form
        let mesh = disk(0.25);
        let ec = edge_complex(&mesh);
        let m1 = mass_m1(&mesh, &ec);
        let phi: Vec<f64> = mesh.vertices.iter().map(|p| (1.3 * p[0] - 0.4 * p[1]).cos() + p[1]).collect();
        let du: Vec<f64> = ec.edges.iter().map(|&[a, b]| phi[b as usize] - phi[a as usize]).collect();
        let mut m_du = vec![0.0; ec.n_edges()];
        m1.matvec(&du, &mut m_du);
        let energy: f64 = du.iter().zip(&m_du).map(|(a, b)| a * b).sum();
        // reference: elementwise |∇φ|² from barycentric gradients
        let mut reference = 0.0;
        for ti in 0..mesh.n_triangles() {
            let (g, area) = tri_gradients(&mesh, ti);
            let tri = mesh.triangles[ti];
            let mut grad = [0.0, 0.0];
            for k in 0..3 {
                grad[0] += phi[tri[k] as usize] * g[k][0];
                grad[1] += phi[tri[k] as usize] * g[k][1];
            }
            reference += area * (grad[0] * grad[0] + grad[1] * grad[1]);
        }
        assert!((energy - reference).abs() < 1e-10 * reference);
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let mesh = disk(0.3);
        let ec = edge_complex(&mesh);
        let e_curl = curl_energy(&mesh, &ec);
        let phi: Vec<f64> = mesh.vertices.iter().map(|p| p[0] * p[0] - 3.0 * p[1]).collect();
        let du: Vec<f64> = ec.edges.iter().map(|&[a, b]| phi[b as usize] - phi[a as usize]).collect();
        let mut y = vec![0.0; ec.n_edges()];
        e_curl.matvec(&du, &mut y);
        let q: f64 = du.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!(q.abs() < 1e-12, "curl energy of a gradient: {q:.3e}");
    }

    #[test]
    fn constant_field_has_curl_zero_and_known_circulation() {
        let mesh = disk(0.3);
        let ec = edge_complex(&mesh);
        let u = ec.circulations_of_constant(&mesh, [0.7, -0.2]);
        let e_curl = curl_energy(&mesh, &ec);
        let mut y = vec![0.0; ec.n_edges()];
        e_curl.matvec(&u, &mut y);
        let q: f64 = u.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!(q.abs() < 1e-12);
        // mass form of a constant field = |c|²·area
        let m1 = mass_m1(&mesh, &ec);
        m1.matvec(&u, &mut y);
        let norm: f64 = u.iter().zip(&y).map(|(a, b)| a * b).sum();
        let expect = (0.7f64 * 0.7 + 0.2 * 0.2) * mesh.chart_area();
        assert!((norm - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn harmonic_space_dimension_matches_topology() {
        // smallest eigenvalues of (Ê, M₁): none near zero on the disk, exactly
        // one on the annulus
        for (tag, expected_zeros) in [
            (DomainTag::Disk { r: 1.0 }, 0usize),
            (DomainTag::Annulus { r_inner: 0.5, r_outer: 1.0 }, 1),
        ] {
            let mesh = gen_domain(tag, 0.35).unwrap();
            let ec = edge_complex(&mesh);
            let ehat = form_energy(&mesh, &ec).to_dense();
            let m1 = mass_m1(&mesh, &ec).to_dense();
            let chol = nalgebra::Cholesky::new(m1).expect("1-form mass is positive definite");
            let inv_l = chol.l().try_inverse().unwrap();
            let sym = &inv_l * ehat * inv_l.transpose();
            let mut eigs: Vec<f64> = nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
            eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let lam_max = eigs.last().copied().unwrap();
            let zeros = eigs.iter().filter(|&&l| l < 1e-10 * lam_max).count();
            assert_eq!(zeros, expected_zeros, "{tag:?}: low spectrum {:?}", &eigs[..4]);
            if expected_zeros > 0 {
                assert!(eigs[expected_zeros] > 1e-4 * lam_max, "gap after kernel: {:?}", &eigs[..4]);
            }
        }
    }

    #[test]
    fn boundary_gram_recovers_the_perimeter() {
        let mesh = disk(0.2);
        let ec = edge_complex(&mesh);
        let gram = boundary_trace_gram(&mesh, &ec);
        // unit tangential field: circulation = signed edge length
        let mut u = vec![0.0; ec.n_edges()];
        for (k, &e) in ec.boundary_edge_ids.iter().enumerate() {
            u[e as usize] = ec.boundary_edge_sign[k] * ec.edge_length(&mesh, e as usize);
        }
        let total: f64 = (0..ec.n_edges()).map(|e| gram[e] * u[e] * u[e]).sum();
        assert!((total - mesh.metric_boundary_length()).abs() < 1e-10 * total);
    }

    #[test]
    fn lumped_mass_sums_to_the_area() {
        let cap = gen_domain(DomainTag::Cap { alpha: std::f64::consts::FRAC_PI_2 }, 0.1).unwrap();
        let m = lumped_scalar_mass(&cap);
        let total: f64 = m.iter().sum();
        let exact = 2.0 * std::f64::consts::PI;
        assert!((total - cap.metric_area()).abs() < 1e-12 * total);
        assert!((total - exact).abs() / exact < 5e-3);
    }
}
