//! Triangle meshes over the supported domain families, with boundary
//! bookkeeping (ordered loops, frames, discrete curvature), uniform
//! refinement that reprojects boundary midpoints onto the analytic
//! boundary, and a small plain-text mesh format (`fmesh 1`).
//!
//! Domains are meshed in a flat chart. Planar domains carry the flat
//! metric; spherical caps carry the conformal factor `μ = 2/(1+|x|²)` of
//! the stereographic chart (cap of opening angle `α` occupies the chart
//! disk of radius `tan(α/2)`).

use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate boundary: {0}")]
    DegenerateBoundary(String),
    #[error("mesh validation failed: {0}")]
    Validation(String),
    #[error("mesh file parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Analytic domain the mesh discretizes. Kept on generated meshes so that
/// refinement can project new boundary vertices back onto the true boundary.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainTag {
    Disk { r: f64 },
    Annulus { r_inner: f64, r_outer: f64 },
    Ellipse { a: f64, b: f64 },
    Square { side: f64 },
    /// Spherical cap of opening angle `alpha` on the unit sphere.
    Cap { alpha: f64 },
}

impl DomainTag {
    pub fn name(&self) -> &'static str {
        match self {
            DomainTag::Disk { .. } => "disk",
            DomainTag::Annulus { .. } => "annulus",
            DomainTag::Ellipse { .. } => "ellipse",
            DomainTag::Square { .. } => "square",
            DomainTag::Cap { .. } => "cap",
        }
    }

    pub fn is_flat(&self) -> bool {
        !matches!(self, DomainTag::Cap { .. })
    }
}

/// Metric carried by the mesh chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricDescriptor {
    Flat,
    /// Round metric of the unit sphere in the stereographic chart,
    /// `g = μ²(dx²+dy²)`, `μ = 2/(1+x²+y²)`; `alpha` is the cap angle.
    ConformalCap { alpha: f64 },
}

impl MetricDescriptor {
    pub fn is_flat(&self) -> bool {
        matches!(self, MetricDescriptor::Flat)
    }

    /// Conformal factor at a chart point.
    pub fn mu(&self, p: [f64; 2]) -> f64 {
        match self {
            MetricDescriptor::Flat => 1.0,
            MetricDescriptor::ConformalCap { .. } => 2.0 / (1.0 + p[0] * p[0] + p[1] * p[1]),
        }
    }

    /// Mass weight for p-form coefficients: μ^(2-2p) (0-forms μ², 1-forms 1,
    /// 2-forms μ⁻²), so that flat-coefficient L² products pick up the metric.
    pub fn mass_weight(&self, degree: u8, p: [f64; 2]) -> f64 {
        let mu = self.mu(p);
        match degree {
            0 => mu * mu,
            1 => 1.0,
            2 => 1.0 / (mu * mu),
            _ => unreachable!("degree out of range"),
        }
    }
}

/// Orientable triangle mesh with ordered boundary loops (domain on the left
/// of each loop: outer loops run counterclockwise, inner loops clockwise).
#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[u32; 3]>,
    /// Ordered closed vertex loops along the boundary.
    pub boundary_loops: Vec<Vec<u32>>,
    pub metric: MetricDescriptor,
    /// Present on generated meshes; `None` after loading from a file.
    pub domain: Option<DomainTag>,
    /// Requested max (chart) edge length.
    pub h_target: f64,
}

impl SimplicialMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Boundary edges as ordered pairs following the loop orientation.
    pub fn boundary_edges(&self) -> Vec<[u32; 2]> {
        let mut out = Vec::new();
        for lp in &self.boundary_loops {
            for k in 0..lp.len() {
                out.push([lp[k], lp[(k + 1) % lp.len()]]);
            }
        }
        out
    }

    /// `true` per vertex iff it lies on the boundary.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_vertices()];
        for lp in &self.boundary_loops {
            for &v in lp {
                mask[v as usize] = true;
            }
        }
        mask
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let p = self.vertices[a as usize];
        let q = self.vertices[b as usize];
        let r = self.vertices[c as usize];
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
    }

    /// Midpoints of the three edges of triangle `t` (quadrature nodes exact
    /// through quadratic integrands).
    pub fn edge_midpoints(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        let p = self.vertices[a as usize];
        let q = self.vertices[b as usize];
        let r = self.vertices[c as usize];
        [
            [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0],
            [(q[0] + r[0]) / 2.0, (q[1] + r[1]) / 2.0],
            [(r[0] + p[0]) / 2.0, (r[1] + p[1]) / 2.0],
        ]
    }

    /// ∫_T w dμ_flat by the midpoint rule (exact for quadratic w).
    pub fn integrate_triangle(&self, t: usize, w: impl Fn([f64; 2]) -> f64) -> f64 {
        let area = self.triangle_area(t);
        let mids = self.edge_midpoints(t);
        area / 3.0 * (w(mids[0]) + w(mids[1]) + w(mids[2]))
    }

    /// Flat chart area.
    pub fn chart_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Riemannian area (∫ μ² over the chart for caps).
    pub fn metric_area(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| {
                self.integrate_triangle(t, |p| {
                    let mu = self.metric.mu(p);
                    mu * mu
                })
            })
            .sum()
    }

    /// Riemannian boundary length.
    pub fn metric_boundary_length(&self) -> f64 {
        self.boundary_edges()
            .iter()
            .map(|&[a, b]| {
                let p = self.vertices[a as usize];
                let q = self.vertices[b as usize];
                let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
                len * 0.5 * (self.metric.mu(p) + self.metric.mu(q))
            })
            .sum()
    }

    /// Structural checks: positive orientation, edge-manifoldness, closed
    /// ordered boundary loops matching the triangulation, Euler formula.
    pub fn validate(&self) -> Result<(), MeshError> {
        let nv = self.n_vertices();
        for t in 0..self.n_triangles() {
            if self.triangles[t].iter().any(|&v| v as usize >= nv) {
                return Err(MeshError::Validation(format!("triangle {t} has an out-of-range vertex")));
            }
            let area = self.triangle_area(t);
            if area <= 0.0 {
                return Err(MeshError::Validation(format!("triangle {t} is degenerate or misoriented (area {area:.3e})")));
            }
        }
        // count directed edges; each undirected interior edge must appear
        // once per direction, boundary edges once in total
        use std::collections::HashMap;
        let mut undirected: HashMap<(u32, u32), i32> = HashMap::new();
        let mut directed: HashMap<(u32, u32), i32> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *directed.entry((a, b)).or_insert(0) += 1;
                let key = (a.min(b), a.max(b));
                *undirected.entry(key).or_insert(0) += 1;
            }
        }
        if directed.values().any(|&c| c > 1) {
            return Err(MeshError::Validation("repeated directed edge (inconsistent orientation)".into()));
        }
        let mut boundary_from_tris: Vec<(u32, u32)> = Vec::new();
        for (&(a, b), &c) in &undirected {
            match c {
                1 => boundary_from_tris.push((a, b)),
                2 => {}
                n => return Err(MeshError::Validation(format!("edge ({a},{b}) belongs to {n} triangles"))),
            }
        }
        let mut loop_edges: Vec<(u32, u32)> = self
            .boundary_edges()
            .iter()
            .map(|&[a, b]| (a.min(b), a.max(b)))
            .collect();
        loop_edges.sort_unstable();
        boundary_from_tris.sort_unstable();
        if loop_edges != boundary_from_tris {
            return Err(MeshError::Validation("boundary loops do not match the triangulation's boundary".into()));
        }
        // boundary loop orientation must match triangle orientation: the
        // directed loop edge (a,b) must appear as a triangle edge (a,b)
        for lp in &self.boundary_loops {
            if lp.len() < 3 {
                return Err(MeshError::DegenerateBoundary("loop with fewer than 3 vertices".into()));
            }
            for k in 0..lp.len() {
                let (a, b) = (lp[k], lp[(k + 1) % lp.len()]);
                if directed.get(&(a, b)).copied().unwrap_or(0) != 1 {
                    return Err(MeshError::Validation(format!(
                        "boundary edge ({a},{b}) is not traversed with the domain on its left"
                    )));
                }
            }
        }
        // Euler characteristic of a planar domain with `b` boundary loops
        let v = nv as i64;
        let e = undirected.len() as i64;
        let f = self.n_triangles() as i64;
        let chi = v - e + f;
        let expect = 2 - self.boundary_loops.len() as i64;
        if chi != expect {
            return Err(MeshError::Validation(format!("Euler characteristic {chi}, expected {expect}")));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// generation

/// Build a mesh of the given domain with target (chart) edge length `h`.
pub fn gen_domain(tag: DomainTag, h: f64) -> Result<SimplicialMesh, MeshError> {
    if !(h.is_finite() && h > 0.0) {
        return Err(MeshError::InvalidParameter(format!("h = {h}")));
    }
    match tag {
        DomainTag::Disk { r } => {
            if !(r.is_finite() && r > 0.0) {
                return Err(MeshError::InvalidParameter(format!("disk radius {r}")));
            }
            Ok(disk_mesh(r, h, MetricDescriptor::Flat, tag))
        }
        DomainTag::Annulus { r_inner, r_outer } => {
            if !(r_inner.is_finite() && r_outer.is_finite() && r_inner > 0.0 && r_outer > r_inner) {
                return Err(MeshError::InvalidParameter(format!("annulus radii ({r_inner}, {r_outer})")));
            }
            Ok(annulus_mesh(r_inner, r_outer, h, tag))
        }
        DomainTag::Ellipse { a, b } => {
            if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
                return Err(MeshError::InvalidParameter(format!("ellipse axes ({a}, {b})")));
            }
            let scale = a.max(b);
            let mut m = disk_mesh(1.0, h / scale, MetricDescriptor::Flat, tag);
            for v in &mut m.vertices {
                v[0] *= a;
                v[1] *= b;
            }
            m.h_target = h;
            Ok(m)
        }
        DomainTag::Square { side } => {
            if !(side.is_finite() && side > 0.0) {
                return Err(MeshError::InvalidParameter(format!("square side {side}")));
            }
            Ok(square_mesh(side, h, tag))
        }
        DomainTag::Cap { alpha } => {
            if !(alpha.is_finite() && alpha > 0.0 && alpha < std::f64::consts::PI) {
                return Err(MeshError::InvalidParameter(format!("cap angle {alpha} (need 0 < α < π)")));
            }
            let rho = (alpha / 2.0).tan();
            Ok(disk_mesh(rho, h, MetricDescriptor::ConformalCap { alpha }, tag))
        }
    }
}

/// Concentric-ring disk mesh: ring i of m carries 6i vertices, giving
/// near-equilateral triangles throughout.
fn disk_mesh(r: f64, h: f64, metric: MetricDescriptor, tag: DomainTag) -> SimplicialMesh {
    let m = ((1.25 * r / h).ceil() as usize).max(2);
    let mut vertices = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize; m + 1]; // index of first vertex of ring i
    // Ring i carries 6i vertices at the angles of a subdivided hexagon ring,
    // pushed out to the circle of radius r*i/m. Equal-angle placement drifts
    // against the lattice mid-sector and stretches strip diagonals to ~1.45
    // ring spacings; keeping the hexagon angles bounds every edge by ~1.33
    // spacings, which the 1.25 ring-count factor turns into <= 1.1*h.
    for i in 1..=m {
        ring_start[i] = vertices.len();
        let radius = r * i as f64 / m as f64;
        for s in 0..6u32 {
            let a0 = std::f64::consts::PI / 3.0 * s as f64;
            let a1 = std::f64::consts::PI / 3.0 * (s + 1) as f64;
            let (c0, c1) = ([a0.cos(), a0.sin()], [a1.cos(), a1.sin()]);
            for k in 0..i {
                let t = k as f64 / i as f64;
                let p = [c0[0] + t * (c1[0] - c0[0]), c0[1] + t * (c1[1] - c0[1])];
                let th = p[1].atan2(p[0]);
                vertices.push([radius * th.cos(), radius * th.sin()]);
            }
        }
    }
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    // hub fan
    for j in 0..6u32 {
        triangles.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for i in 2..=m {
        let inner: Vec<u32> = (0..6 * (i - 1)).map(|j| (ring_start[i - 1] + j) as u32).collect();
        let outer: Vec<u32> = (0..6 * i).map(|j| (ring_start[i] + j) as u32).collect();
        strip_triangulate(&vertices, &inner, &outer, &mut triangles);
    }
    let boundary: Vec<u32> = (0..6 * m).map(|j| (ring_start[m] + j) as u32).collect();
    SimplicialMesh {
        vertices,
        triangles,
        boundary_loops: vec![boundary],
        metric,
        domain: Some(tag),
        h_target: h,
    }
}

/// Triangulate the strip between two concentric vertex rings (inner, outer),
/// both listed counterclockwise starting near angle 0, by a greedy zipper:
/// at each step advance whichever ring creates the shorter new diagonal.
/// This keeps the angular offset of connected vertices within half a ring
/// spacing, so no strip edge is much longer than the ring spacings themselves.
fn strip_triangulate(vertices: &[[f64; 2]], inner: &[u32], outer: &[u32], out: &mut Vec<[u32; 3]>) {
    let (na, nb) = (inner.len(), outer.len());
    let dist2 = |u: u32, v: u32| {
        let p = vertices[u as usize];
        let q = vertices[v as usize];
        (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
    };
    let (mut a, mut b) = (0usize, 0usize);
    while a < na || b < nb {
        let advance_outer = b < nb
            && (a == na
                || dist2(outer[(b + 1) % nb], inner[a % na]) <= dist2(inner[(a + 1) % na], outer[b % nb]));
        if advance_outer {
            out.push([outer[b % nb], outer[(b + 1) % nb], inner[a % na]]);
            b += 1;
        } else {
            out.push([inner[a % na], outer[b % nb], inner[(a + 1) % na]]);
            a += 1;
        }
    }
}

fn annulus_mesh(r0: f64, r1: f64, h: f64, tag: DomainTag) -> SimplicialMesh {
    let n = ((2.0 * std::f64::consts::PI * r1 / h).ceil() as usize).max(8);
    let m = (((r1 - r0) / h).ceil() as usize).max(2);
    let mut vertices = Vec::with_capacity(n * (m + 1));
    for i in 0..=m {
        let radius = r0 + (r1 - r0) * i as f64 / m as f64;
        for j in 0..n {
            let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            vertices.push([radius * th.cos(), radius * th.sin()]);
        }
    }
    let mut triangles = Vec::new();
    for i in 0..m {
        let inner: Vec<u32> = (0..n).map(|j| (i * n + j) as u32).collect();
        let outer: Vec<u32> = (0..n).map(|j| ((i + 1) * n + j) as u32).collect();
        strip_triangulate(&vertices, &inner, &outer, &mut triangles);
    }
    let outer_loop: Vec<u32> = (0..n).map(|j| (m * n + j) as u32).collect();
    // inner loop clockwise so the annulus lies on its left
    let inner_loop: Vec<u32> = (0..n).rev().map(|j| j as u32).collect();
    SimplicialMesh {
        vertices,
        triangles,
        boundary_loops: vec![outer_loop, inner_loop],
        metric: MetricDescriptor::Flat,
        domain: Some(tag),
        h_target: h,
    }
}

fn square_mesh(side: f64, h: f64, tag: DomainTag) -> SimplicialMesh {
    let n = ((side / h).ceil() as usize).max(2);
    let step = side / n as f64;
    let idx = |i: usize, j: usize| (j * (n + 1) + i) as u32;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * step, j as f64 * step]);
        }
    }
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (p, q, r, s) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([p, q, r]);
                triangles.push([p, r, s]);
            } else {
                triangles.push([p, q, s]);
                triangles.push([q, r, s]);
            }
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary.push(idx(i, 0));
    }
    for j in 0..n {
        boundary.push(idx(n, j));
    }
    for i in (1..=n).rev() {
        boundary.push(idx(i, n));
    }
    for j in (1..=n).rev() {
        boundary.push(idx(0, j));
    }
    SimplicialMesh {
        vertices,
        triangles,
        boundary_loops: vec![boundary],
        metric: MetricDescriptor::Flat,
        domain: Some(tag),
        h_target: h,
    }
}

// ---------------------------------------------------------------------------
// refinement

/// Uniform 1→4 refinement. New boundary vertices are projected back onto the
/// analytic boundary when the mesh carries a domain tag (radially for disks,
/// annuli and caps; via the normalized parameter direction for ellipses).
pub fn refine(mesh: &SimplicialMesh) -> SimplicialMesh {
    use std::collections::HashMap;
    let mut vertices = mesh.vertices.clone();
    let boundary = mesh.boundary_mask();
    let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
    let mut boundary_pairs: std::collections::HashSet<(u32, u32)> = std::collections::HashSet::new();
    for &[a, b] in &mesh.boundary_edges() {
        boundary_pairs.insert((a.min(b), a.max(b)));
    }
    let mut mid = |a: u32, b: u32, vertices: &mut Vec<[f64; 2]>| -> u32 {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = midpoint.get(&key) {
            return m;
        }
        let p = vertices[a as usize];
        let q = vertices[b as usize];
        let mut v = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
        if boundary[a as usize] && boundary[b as usize] && boundary_pairs.contains(&key) {
            v = project_boundary_midpoint(mesh.domain, p, q, v);
        }
        let id = vertices.len() as u32;
        vertices.push(v);
        midpoint.insert(key, id);
        id
    };
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let boundary_loops = mesh
        .boundary_loops
        .iter()
        .map(|lp| {
            let mut out = Vec::with_capacity(2 * lp.len());
            for k in 0..lp.len() {
                let (a, b) = (lp[k], lp[(k + 1) % lp.len()]);
                out.push(a);
                out.push(midpoint[&(a.min(b), a.max(b))]);
            }
            out
        })
        .collect();
    SimplicialMesh {
        vertices,
        triangles,
        boundary_loops,
        metric: mesh.metric,
        domain: mesh.domain,
        h_target: mesh.h_target / 2.0,
    }
}

fn project_boundary_midpoint(tag: Option<DomainTag>, p: [f64; 2], q: [f64; 2], mid: [f64; 2]) -> [f64; 2] {
    match tag {
        Some(DomainTag::Disk { .. }) | Some(DomainTag::Cap { .. }) | Some(DomainTag::Annulus { .. }) => {
            // endpoints sit on a common circle; push the midpoint out to the
            // average endpoint radius
            let rp = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let rq = (q[0] * q[0] + q[1] * q[1]).sqrt();
            let target = 0.5 * (rp + rq);
            let rm = (mid[0] * mid[0] + mid[1] * mid[1]).sqrt();
            if rm > 0.0 {
                [mid[0] * target / rm, mid[1] * target / rm]
            } else {
                mid
            }
        }
        Some(DomainTag::Ellipse { a, b }) => {
            let u = [p[0] / a, p[1] / b];
            let v = [q[0] / a, q[1] / b];
            let s = [u[0] + v[0], u[1] + v[1]];
            let norm = (s[0] * s[0] + s[1] * s[1]).sqrt();
            if norm > 0.0 {
                [a * s[0] / norm, b * s[1] / norm]
            } else {
                mid
            }
        }
        _ => mid,
    }
}

// ---------------------------------------------------------------------------
// boundary frames

/// Per-boundary-vertex orthonormal frame and discrete curvature data.
///
/// `tangent` points along the loop orientation (domain on the left) and
/// `nu = rot90(tangent)` is the inward unit normal, both unit with respect
/// to the flat chart. `curvature` is the geodesic curvature of the boundary
/// with respect to the mesh metric and the inward normal (positive for a
/// convex boundary seen from inside); it is `None` at corner vertices.
#[derive(Debug, Clone)]
pub struct BoundaryFrame {
    /// Global vertex index of each frame slot.
    pub vertex: Vec<u32>,
    /// frame slot of a global vertex (None off the boundary)
    pub slot: Vec<Option<u32>>,
    pub tangent: Vec<[f64; 2]>,
    pub nu: Vec<[f64; 2]>,
    pub curvature: Vec<Option<f64>>,
    pub corner: Vec<bool>,
    /// Lumped boundary measure per vertex in the flat chart.
    pub w_flat: Vec<f64>,
    /// Lumped boundary measure with the metric weight μ.
    pub w_metric: Vec<f64>,
    /// μ at the vertex.
    pub mu: Vec<f64>,
}

impl BoundaryFrame {
    pub fn len(&self) -> usize {
        self.vertex.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex.is_empty()
    }
}

const CORNER_TURN_THRESHOLD: f64 = 0.6;

/// Build boundary frames for all loops of the mesh.
pub fn boundary_frame(mesh: &SimplicialMesh) -> BoundaryFrame {
    let mut vertex = Vec::new();
    let mut tangent = Vec::new();
    let mut nu = Vec::new();
    let mut curvature = Vec::new();
    let mut corner = Vec::new();
    let mut w_flat = Vec::new();
    let mut w_metric = Vec::new();
    let mut mu_v = Vec::new();

    for lp in &mesh.boundary_loops {
        let n = lp.len();
        for k in 0..n {
            let prev = mesh.vertices[lp[(k + n - 1) % n] as usize];
            let here = mesh.vertices[lp[k] as usize];
            let next = mesh.vertices[lp[(k + 1) % n] as usize];
            let e_in = [here[0] - prev[0], here[1] - prev[1]];
            let e_out = [next[0] - here[0], next[1] - here[1]];
            let l_in = (e_in[0] * e_in[0] + e_in[1] * e_in[1]).sqrt();
            let l_out = (e_out[0] * e_out[0] + e_out[1] * e_out[1]).sqrt();
            let d_in = [e_in[0] / l_in, e_in[1] / l_in];
            let d_out = [e_out[0] / l_out, e_out[1] / l_out];
            // bisector tangent
            let mut t = [d_in[0] + d_out[0], d_in[1] + d_out[1]];
            let tn = (t[0] * t[0] + t[1] * t[1]).sqrt();
            if tn < 1e-12 {
                t = d_out; // 180° turn; arbitrary but deterministic
            } else {
                t = [t[0] / tn, t[1] / tn];
            }
            let normal = [-t[1], t[0]]; // rot90 CCW: inward when domain is on the left
            // turning angle at the vertex: positive = bending toward the domain
            let cross = d_in[0] * d_out[1] - d_in[1] * d_out[0];
            let dot = d_in[0] * d_out[0] + d_in[1] * d_out[1];
            let turn = cross.atan2(dot);
            let avg_len = 0.5 * (l_in + l_out);
            let is_corner = turn.abs() > CORNER_TURN_THRESHOLD;
            let kappa_flat = turn / avg_len;
            let mu = mesh.metric.mu(here);
            let kappa = if is_corner {
                None
            } else {
                Some(match mesh.metric {
                    MetricDescriptor::Flat => kappa_flat,
                    MetricDescriptor::ConformalCap { .. } => {
                        // geodesic curvature under a conformal change
                        // g = μ² g_flat: κ_g = μ⁻¹ (κ_flat + ∂_{n_out} log μ)
                        let r2 = here[0] * here[0] + here[1] * here[1];
                        let grad_log_mu = [-2.0 * here[0] / (1.0 + r2), -2.0 * here[1] / (1.0 + r2)];
                        let dn_out = -(grad_log_mu[0] * normal[0] + grad_log_mu[1] * normal[1]);
                        (kappa_flat + dn_out) / mu
                    }
                })
            };
            vertex.push(lp[k]);
            tangent.push(t);
            nu.push(normal);
            curvature.push(kappa);
            corner.push(is_corner);
            w_flat.push(avg_len);
            // endpoint-trapezoid weight of ∫ μ dl over the two half-edges
            let mu_prev = mesh.metric.mu(prev);
            let mu_next = mesh.metric.mu(next);
            w_metric.push(0.25 * (l_in * (mu + mu_prev) + l_out * (mu + mu_next)));
            mu_v.push(mu);
        }
    }
    let mut slot = vec![None; mesh.n_vertices()];
    for (s, &v) in vertex.iter().enumerate() {
        slot[v as usize] = Some(s as u32);
    }
    BoundaryFrame { vertex, slot, tangent, nu, curvature, corner, w_flat, w_metric, mu: mu_v }
}

// ---------------------------------------------------------------------------
// mesh file format ("fmesh 1")

/// Serialize in the plain-text `fmesh 1` format:
/// a header `fmesh 1 <nv> <nt> <nbe> <metric> [alpha]`, then vertex lines
/// `x y`, triangle lines `i j k`, and ordered boundary-edge lines `i j`
/// (0-based indices, floats with 17 significant digits).
pub fn format_fmesh(mesh: &SimplicialMesh) -> String {
    let edges = mesh.boundary_edges();
    let mut s = String::new();
    match mesh.metric {
        MetricDescriptor::Flat => {
            let _ = writeln!(s, "fmesh 1 {} {} {} flat", mesh.n_vertices(), mesh.n_triangles(), edges.len());
        }
        MetricDescriptor::ConformalCap { alpha } => {
            let _ = writeln!(
                s,
                "fmesh 1 {} {} {} cap {:.16e}",
                mesh.n_vertices(),
                mesh.n_triangles(),
                edges.len(),
                alpha
            );
        }
    }
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.16e} {:.16e}", v[0], v[1]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    for e in &edges {
        let _ = writeln!(s, "{} {}", e[0], e[1]);
    }
    s
}

pub fn write_fmesh(mesh: &SimplicialMesh, path: &Path) -> Result<(), MeshError> {
    std::fs::write(path, format_fmesh(mesh))?;
    Ok(())
}

/// Parse the `fmesh 1` format and validate the result. Boundary loops are
/// reconstructed by walking the ordered edge list.
pub fn parse_fmesh(text: &str) -> Result<SimplicialMesh, MeshError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| MeshError::Parse("empty file".into()))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() < 5 || tok[0] != "fmesh" || tok[1] != "1" {
        return Err(MeshError::Parse(format!("bad header: {header:?}")));
    }
    let nv: usize = tok[2].parse().map_err(|_| MeshError::Parse("bad vertex count".into()))?;
    let nt: usize = tok[3].parse().map_err(|_| MeshError::Parse("bad triangle count".into()))?;
    let nbe: usize = tok[4].parse().map_err(|_| MeshError::Parse("bad boundary edge count".into()))?;
    let metric = match tok.get(5).copied() {
        Some("flat") | None => MetricDescriptor::Flat,
        Some("cap") => {
            let alpha: f64 = tok
                .get(6)
                .ok_or_else(|| MeshError::Parse("cap metric requires alpha".into()))?
                .parse()
                .map_err(|_| MeshError::Parse("bad alpha".into()))?;
            MetricDescriptor::ConformalCap { alpha }
        }
        Some(k) => return Err(MeshError::Parse(format!("unknown metric kind {k:?}"))),
    };
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| MeshError::Parse("missing vertex line".into()))?;
        let mut it = line.split_whitespace();
        let x: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MeshError::Parse(format!("bad vertex line {line:?}")))?;
        let y: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MeshError::Parse(format!("bad vertex line {line:?}")))?;
        vertices.push([x, y]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = lines.next().ok_or_else(|| MeshError::Parse("missing triangle line".into()))?;
        let ids: Vec<u32> = line
            .split_whitespace()
            .map(|s| s.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| MeshError::Parse(format!("bad triangle line {line:?}")))?;
        if ids.len() != 3 {
            return Err(MeshError::Parse(format!("bad triangle line {line:?}")));
        }
        triangles.push([ids[0], ids[1], ids[2]]);
    }
    let mut edges = Vec::with_capacity(nbe);
    for _ in 0..nbe {
        let line = lines.next().ok_or_else(|| MeshError::Parse("missing boundary edge line".into()))?;
        let ids: Vec<u32> = line
            .split_whitespace()
            .map(|s| s.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| MeshError::Parse(format!("bad boundary edge line {line:?}")))?;
        if ids.len() != 2 {
            return Err(MeshError::Parse(format!("bad boundary edge line {line:?}")));
        }
        edges.push((ids[0], ids[1]));
    }
    // rebuild ordered loops from the successor map
    use std::collections::HashMap;
    let mut succ: HashMap<u32, u32> = HashMap::new();
    for &(a, b) in &edges {
        if succ.insert(a, b).is_some() {
            return Err(MeshError::Parse(format!("vertex {a} has two outgoing boundary edges")));
        }
    }
    // loops are walked in file order, each starting at the source vertex of
    // its first listed edge, so a parse/serialize round trip is the identity
    let mut visited: std::collections::HashSet<u32> = std::collections::HashSet::new();
    let mut boundary_loops = Vec::new();
    for &(s, _) in &edges {
        if visited.contains(&s) {
            continue;
        }
        let mut lp = vec![s];
        visited.insert(s);
        let mut cur = s;
        loop {
            let nxt = *succ
                .get(&cur)
                .ok_or_else(|| MeshError::Parse(format!("boundary walk stuck at vertex {cur}")))?;
            if nxt == s {
                break;
            }
            if !visited.insert(nxt) {
                return Err(MeshError::Parse("boundary edges do not form simple loops".into()));
            }
            lp.push(nxt);
            cur = nxt;
        }
        boundary_loops.push(lp);
    }
    let mesh = SimplicialMesh {
        vertices,
        triangles,
        boundary_loops,
        metric,
        domain: None,
        h_target: f64::NAN,
    };
    mesh.validate()?;
    Ok(mesh)
}

pub fn read_fmesh(path: &Path) -> Result<SimplicialMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_fmesh(&text)
}
