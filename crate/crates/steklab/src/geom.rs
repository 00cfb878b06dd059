//! Geometric quantities consumed by the eigenvalue bounds: volumes, the
//! inner radius, boundary curvature bounds, the comparison function s_K and
//! its Θ integral, and the degree/dimension constants of the sphere
//! inequality.

use crate::mesh::{boundary_frame, MetricDescriptor, SimplicialMesh};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, thiserror::Error)]
pub enum GeomError {
    #[error("boundary has corners: curvature bounds are not defined")]
    CornerDomain,
    #[error("degree {p} out of range for dimension {n} (need 1 <= p <= n-1)")]
    DegreeOutOfRange { p: u32, n: u32 },
}

/// Infimum of boundary curvature quantities over the smooth part of ∂M.
/// In two dimensions there is a single principal curvature, so the mean
/// curvature bound and the smallest 1-curvature sum coincide.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureBounds {
    pub h0: f64,
    pub sigma1: f64,
}

/// Measured geometry of a mesh: metric volumes, their ratio, the inner
/// radius, the ambient curvature constant, and (absent on corner domains)
/// the boundary curvature bounds.
#[derive(Debug, Clone)]
pub struct GeometryReport {
    pub vol_m: f64,
    pub vol_bd: f64,
    /// Vol(∂M)/Vol(M)
    pub ratio: f64,
    /// max over M of the distance to ∂M
    pub inner_radius: f64,
    /// ambient constant curvature: 0 for flat charts, 1 for spherical caps
    pub k: f64,
    curvature: Option<CurvatureBounds>,
}

impl GeometryReport {
    /// The curvature bounds, or `CornerDomain` when the boundary has
    /// corners and no pointwise curvature infimum exists.
    pub fn curvature(&self) -> Result<CurvatureBounds, GeomError> {
        self.curvature.ok_or(GeomError::CornerDomain)
    }
}

pub fn geometry_report(mesh: &SimplicialMesh) -> GeometryReport {
    let frame = boundary_frame(mesh);
    let vol_m: f64 = (0..mesh.n_triangles())
        .map(|t| mesh.integrate_triangle(t, |p| {
            let mu = mesh.metric.mu(p);
            mu * mu
        }))
        .sum();
    let vol_bd: f64 = frame.w_metric.iter().sum();
    let curvature = if frame.corner.iter().any(|&c| c) {
        None
    } else {
        let h0 = frame
            .curvature
            .iter()
            .filter_map(|c| *c)
            .fold(f64::INFINITY, f64::min);
        Some(CurvatureBounds { h0, sigma1: h0 })
    };
    let k = match mesh.metric {
        MetricDescriptor::Flat => 0.0,
        MetricDescriptor::ConformalCap { .. } => 1.0,
    };
    GeometryReport {
        vol_m,
        vol_bd,
        ratio: vol_bd / vol_m,
        inner_radius: inner_radius(mesh),
        k,
        curvature,
    }
}

// ---------------------------------------------------------------------------
// inner radius

struct HeapEntry {
    dist: f64,
    vertex: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.vertex == other.vertex
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // reversed so the max-heap pops the smallest distance
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Distance from every vertex to the boundary: multi-source shortest path
/// over the edge graph with metric edge lengths, then one Gauss–Seidel
/// sweep (a forward and a backward pass) of local triangle eikonal updates
/// to cut the graph-path overshoot. Values only decrease in the sweep, and
/// never below zero, so the result stays an O(h)-accurate distance field.
pub fn boundary_distance(mesh: &SimplicialMesh) -> Vec<f64> {
    let n = mesh.n_vertices();
    let metric_len = |a: usize, b: usize| {
        let p = mesh.vertices[a];
        let q = mesh.vertices[b];
        let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
        let l = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        mesh.metric.mu(mid) * l
    };
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for tri in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k] as usize, tri[(k + 1) % 3] as usize);
            adj[a].push(b as u32);
            adj[b].push(a as u32);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    let mask = mesh.boundary_mask();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for v in 0..n {
        if mask[v] {
            dist[v] = 0.0;
            heap.push(HeapEntry { dist: 0.0, vertex: v as u32 });
        }
    }
    while let Some(HeapEntry { dist: d, vertex: v }) = heap.pop() {
        let v = v as usize;
        if d > dist[v] {
            continue;
        }
        for &w in &adj[v] {
            let w = w as usize;
            let nd = d + metric_len(v, w);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(HeapEntry { dist: nd, vertex: w as u32 });
            }
        }
    }

    // triangle incidence for the eikonal pass
    let mut tris_at: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            tris_at[v as usize].push(t as u32);
        }
    }
    let relax = |dist: &mut Vec<f64>, v: usize| {
        if mask[v] {
            return;
        }
        for &t in &tris_at[v] {
            let tri = mesh.triangles[t as usize];
            let others: Vec<u32> = tri.iter().copied().filter(|&w| w as usize != v).collect();
            let (a, b) = (others[0] as usize, others[1] as usize);
            let slope = mesh.integrate_triangle(t as usize, |p| mesh.metric.mu(p))
                / mesh.triangle_area(t as usize);
            if let Some(t_new) = triangle_update(
                mesh.vertices[a],
                mesh.vertices[b],
                mesh.vertices[v],
                dist[a],
                dist[b],
                slope,
            ) {
                if t_new < dist[v] {
                    dist[v] = t_new;
                }
            }
            // edge fallbacks keep the field consistent where the two-point
            // update has no admissible characteristic
            let ea = dist[a] + metric_len(a, v);
            let eb = dist[b] + metric_len(b, v);
            if ea < dist[v] {
                dist[v] = ea;
            }
            if eb < dist[v] {
                dist[v] = eb;
            }
        }
    };
    for v in 0..n {
        relax(&mut dist, v);
    }
    for v in (0..n).rev() {
        relax(&mut dist, v);
    }
    dist
}

/// Planar two-point eikonal update: the arrival time at `pc` of a unit-speed
/// front (slope `s` in chart units) linear on the triangle and matching the
/// times at `pa`, `pb`. Returns None when no causal solution exists.
fn triangle_update(pa: [f64; 2], pb: [f64; 2], pc: [f64; 2], da: f64, db: f64, s: f64) -> Option<f64> {
    if !da.is_finite() || !db.is_finite() {
        return None;
    }
    let x1 = [pa[0] - pc[0], pa[1] - pc[1]];
    let x2 = [pb[0] - pc[0], pb[1] - pc[1]];
    // Gram matrix of the offsets and its inverse
    let g11 = x1[0] * x1[0] + x1[1] * x1[1];
    let g12 = x1[0] * x2[0] + x1[1] * x2[1];
    let g22 = x2[0] * x2[0] + x2[1] * x2[1];
    let det = g11 * g22 - g12 * g12;
    if det <= 0.0 {
        return None;
    }
    let (q11, q12, q22) = (g22 / det, -g12 / det, g11 / det);
    // solve (δ − t·1)ᵀ Q (δ − t·1) = s² for the later arrival t
    let sum_q = q11 + 2.0 * q12 + q22;
    let qd1 = q11 * da + q12 * db;
    let qd2 = q12 * da + q22 * db;
    let lin = qd1 + qd2;
    let quad = q11 * da * da + 2.0 * q12 * da * db + q22 * db * db;
    let disc = lin * lin - sum_q * (quad - s * s);
    if disc < 0.0 {
        return None;
    }
    let t = (lin + disc.sqrt()) / sum_q;
    if t < da.max(db) {
        return None; // not causal: the front would arrive at c first
    }
    // the characteristic must enter through the triangle: both gradient
    // weights against the offsets nonnegative
    let w1 = qd1 - t * (q11 + q12);
    let w2 = qd2 - t * (q12 + q22);
    if w1 > 0.0 || w2 > 0.0 {
        return None;
    }
    Some(t)
}

/// Inner radius: the largest boundary distance over the vertices.
pub fn inner_radius(mesh: &SimplicialMesh) -> f64 {
    boundary_distance(mesh).into_iter().fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// comparison functions

/// The space-form comparison function: sin(r√K)/√K for K > 0, r for K = 0,
/// sinh(r√−K)/√−K for K < 0.
pub fn s_k(k: f64, r: f64) -> f64 {
    if k > 0.0 {
        let sq = k.sqrt();
        (r * sq).sin() / sq
    } else if k < 0.0 {
        let sq = (-k).sqrt();
        (r * sq).sinh() / sq
    } else {
        r
    }
}

pub fn s_k_prime(k: f64, r: f64) -> f64 {
    if k > 0.0 {
        (r * k.sqrt()).cos()
    } else if k < 0.0 {
        (r * (-k).sqrt()).cosh()
    } else {
        1.0
    }
}

/// Θ(r) = (s_K'(r) − H₀ s_K(r))^(n−1), the comparison density for the
/// lower bound on the first eigenvalue.
pub fn theta(k: f64, h0: f64, r: f64, n: u32) -> f64 {
    (s_k_prime(k, r) - h0 * s_k(k, r)).powi(n as i32 - 1)
}

/// ∫₀ᴿ Θ(r) dr, truncated at the first zero of s_K' − H₀ s_K when that
/// zero falls inside the interval (the bound only uses the positive part).
/// Adaptive Simpson quadrature with relative tolerance 1e−10.
pub fn theta_integral(k: f64, h0: f64, r_max: f64, n: u32) -> f64 {
    assert!(r_max >= 0.0 && n >= 2);
    let base = |r: f64| s_k_prime(k, r) - h0 * s_k(k, r);
    // locate the first sign change by scan + bisection; the base starts at 1
    let mut upper = r_max;
    if base(r_max) <= 0.0 {
        let steps = 512;
        let mut lo = 0.0;
        let mut hi = r_max;
        for i in 1..=steps {
            let r = r_max * i as f64 / steps as f64;
            if base(r) <= 0.0 {
                hi = r;
                lo = r_max * (i - 1) as f64 / steps as f64;
                break;
            }
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if base(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        upper = 0.5 * (lo + hi);
    }
    let f = |r: f64| theta(k, h0, r, n);
    adaptive_simpson(&f, 0.0, upper, 1e-10)
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let whole = simpson(f, a, b);
    let scale = whole.abs().max(1e-300);
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, left, 0.5 * tol, depth - 1) + recurse(f, m, b, right, 0.5 * tol, depth - 1)
    }
    recurse(f, a, b, whole, rel_tol * scale, 48)
}

// ---------------------------------------------------------------------------
// curvature sums and the sphere-inequality constant

/// Sum of the p smallest values of a principal-curvature list.
pub fn sigma_p(etas: &[f64], p: usize) -> f64 {
    assert!(1 <= p && p <= etas.len());
    let mut sorted = etas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[..p].iter().sum()
}

/// The pair (a, C) of the sphere comparison: a = max(p+1, n−p+1) and
/// C = 4B + 2n + 2n(2p−n)²B² with B = (a−1)/(p(n−p)a), kept as an exact
/// reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BsConstant {
    pub a: u64,
    pub c_num: u64,
    pub c_den: u64,
}

impl BsConstant {
    pub fn value(&self) -> f64 {
        self.c_num as f64 / self.c_den as f64
    }
}

pub fn bs_constant(p: u32, n: u32) -> Result<BsConstant, GeomError> {
    if n < 2 || p < 1 || p > n - 1 {
        return Err(GeomError::DegreeOutOfRange { p, n });
    }
    let (p, n) = (p as u64, n as u64);
    let a = (p + 1).max(n - p + 1);
    // B = (a−1)/d with d = p(n−p)a; C over the denominator d²
    let d = p * (n - p) * a;
    let two_p_minus_n_sq = (2 * p).abs_diff(n).pow(2);
    let num = 4 * (a - 1) * d + 2 * n * d * d + 2 * n * two_p_minus_n_sq * (a - 1) * (a - 1);
    let den = d * d;
    let g = gcd(num, den);
    Ok(BsConstant { a, c_num: num / g, c_den: den / g })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
