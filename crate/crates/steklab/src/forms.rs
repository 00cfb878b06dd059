//! Discrete differential p-forms (n = 2) as bundles of nodal scalar fields
//! in Cartesian chart components: a 1-form ω = ω_x dx + ω_y dy stores the
//! pair (ω_x, ω_y); a 2-form stores its dx∧dy coefficient. Boundary algebra
//! (tangential trace ι*, interior product ν⌟ with the inward normal) is
//! evaluated pointwise in the flat chart frame; metric weights enter only
//! through integration, never through the pointwise frame split.

use crate::mesh::{BoundaryFrame, MetricDescriptor, SimplicialMesh};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormError {
    #[error("form field lives on {field} vertices, expected {expected}")]
    MeshMismatch { field: usize, expected: usize },
    #[error("degree {got} not supported here (need {expected})")]
    WrongDegree { expected: u8, got: u8 },
    #[error("form must vanish on the boundary (max |trace| = {0:.3e})")]
    NonzeroTrace(f64),
}

/// Number of Cartesian components of a p-form in two dimensions.
pub fn component_count(degree: u8) -> usize {
    match degree {
        0 | 2 => 1,
        1 => 2,
        _ => panic!("degree {degree} out of range for n = 2"),
    }
}

/// Nodal p-form field.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    pub degree: u8,
    /// `component_count(degree)` nodal vectors of equal length.
    pub components: Vec<Vec<f64>>,
}

impl FormField {
    pub fn zeros(degree: u8, n_vertices: usize) -> Self {
        FormField {
            degree,
            components: vec![vec![0.0; n_vertices]; component_count(degree)],
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.components[0].len()
    }

    fn check_mesh(&self, n_vertices: usize) -> Result<(), FormError> {
        if self.n_vertices() != n_vertices {
            return Err(FormError::MeshMismatch { field: self.n_vertices(), expected: n_vertices });
        }
        Ok(())
    }

    /// Pointwise squared norm of the chart coefficients at a vertex.
    pub fn coeff_norm_sq(&self, vertex: usize) -> f64 {
        self.components.iter().map(|c| c[vertex] * c[vertex]).sum()
    }
}

/// Boundary split of a p-form along `∂M`: the tangential part ι*ω and the
/// normal part ν⌟ω, each reduced to its single scalar coefficient per
/// boundary vertex (indexed by frame slot).
///
/// Coefficient conventions: for p=0 `tangential` is the value and `normal`
/// is identically 0; for p=1 `tangential` is ω·t and `normal` is ω·ν; for
/// p=2 `tangential` is identically 0 and `normal` is the coefficient of
/// ν⌟ω along the unit tangent, i.e. u·(ν∧t-pairing) = −u for ν = rot90(t).
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub degree: u8,
    pub tangential: Vec<f64>,
    pub normal: Vec<f64>,
}

impl BoundaryTrace {
    /// |ι*ω|² + |ν⌟ω|² at a frame slot; equals |ω|² of the chart coefficients.
    pub fn norm_sq(&self, slot: usize) -> f64 {
        self.tangential[slot] * self.tangential[slot] + self.normal[slot] * self.normal[slot]
    }
}

/// Split ω along the boundary into (ι*ω, ν⌟ω) coefficients per frame slot.
pub fn trace_split(omega: &FormField, frame: &BoundaryFrame) -> Result<BoundaryTrace, FormError> {
    omega.check_mesh(frame.slot.len())?;
    let nb = frame.len();
    let mut tangential = vec![0.0; nb];
    let mut normal = vec![0.0; nb];
    for s in 0..nb {
        let v = frame.vertex[s] as usize;
        match omega.degree {
            0 => tangential[s] = omega.components[0][v],
            1 => {
                let wx = omega.components[0][v];
                let wy = omega.components[1][v];
                let t = frame.tangent[s];
                let nu = frame.nu[s];
                tangential[s] = wx * t[0] + wy * t[1];
                normal[s] = wx * nu[0] + wy * nu[1];
            }
            2 => {
                // ν⌟(u dx∧dy) evaluated on t: u (ν_x t_y − ν_y t_x)
                let u = omega.components[0][v];
                let t = frame.tangent[s];
                let nu = frame.nu[s];
                normal[s] = u * (nu[0] * t[1] - nu[1] * t[0]);
            }
            d => return Err(FormError::WrongDegree { expected: 2, got: d }),
        }
    }
    Ok(BoundaryTrace { degree: omega.degree, tangential, normal })
}

/// One of the four constant-coefficient forms that are parallel for the
/// flat metric: 1, dx, dy, dx∧dy. All have unit pointwise norm on flat
/// charts; on the cap only the degree-0 and degree-2 slots admit parallel
/// representatives (the constant and the volume form).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParallelForm {
    One,
    Dx,
    Dy,
    DxDy,
}

impl ParallelForm {
    pub fn degree(&self) -> u8 {
        match self {
            ParallelForm::One => 0,
            ParallelForm::Dx | ParallelForm::Dy => 1,
            ParallelForm::DxDy => 2,
        }
    }

    /// Unit coefficient vector in the Cartesian component convention.
    pub fn coefficients(&self) -> &'static [f64] {
        match self {
            ParallelForm::One | ParallelForm::DxDy => &[1.0],
            ParallelForm::Dx => &[1.0, 0.0],
            ParallelForm::Dy => &[0.0, 1.0],
        }
    }

    /// Whether the form has unit pointwise norm under the given metric.
    /// The chart coefficients are unit-norm exactly for the flat metric;
    /// under the cap metric none of the four is (and the degree-1 slots
    /// are not even parallel there).
    pub fn is_unit_norm(&self, metric: MetricDescriptor) -> bool {
        metric.is_flat()
    }
}

/// ω = f·ω₀ for a scalar field f: places f into ω₀'s coefficient slots.
pub fn parallel_product(f: &[f64], omega0: ParallelForm) -> FormField {
    let coeffs = omega0.coefficients();
    let components = coeffs
        .iter()
        .map(|&c| f.iter().map(|&v| c * v).collect())
        .collect();
    FormField { degree: omega0.degree(), components }
}

/// Pointwise Hodge star with the mesh metric: degree p → n−p. With
/// g = μ²(dx²+dy²): *f = (μ²f) dx∧dy; on 1-forms the flat rotation
/// (ω_x,ω_y) → (−ω_y,ω_x) is conformally invariant; *(u dx∧dy) = u/μ².
pub fn hodge_star(omega: &FormField, mesh: &SimplicialMesh) -> Result<FormField, FormError> {
    omega.check_mesh(mesh.n_vertices())?;
    let n = omega.n_vertices();
    let mu_sq = |v: usize| {
        let m = mesh.metric.mu(mesh.vertices[v]);
        m * m
    };
    Ok(match omega.degree {
        0 => FormField {
            degree: 2,
            components: vec![(0..n).map(|v| omega.components[0][v] * mu_sq(v)).collect()],
        },
        1 => FormField {
            degree: 1,
            components: vec![
                omega.components[1].iter().map(|&b| -b).collect(),
                omega.components[0].clone(),
            ],
        },
        2 => FormField {
            degree: 0,
            components: vec![(0..n).map(|v| omega.components[0][v] / mu_sq(v)).collect()],
        },
        d => return Err(FormError::WrongDegree { expected: 2, got: d }),
    })
}

/// Assert that a form vanishes at every boundary vertex (used by operations
/// whose variational derivation assumes a zero full trace).
pub fn require_zero_trace(omega: &FormField, mesh: &SimplicialMesh) -> Result<(), FormError> {
    omega.check_mesh(mesh.n_vertices())?;
    let mut worst: f64 = 0.0;
    for lp in &mesh.boundary_loops {
        for &v in lp {
            for c in &omega.components {
                worst = worst.max(c[v as usize].abs());
            }
        }
    }
    if worst > 1e-10 {
        return Err(FormError::NonzeroTrace(worst));
    }
    Ok(())
}
