//! A numerical laboratory for boundary eigenvalue problems on differential
//! p-forms (p = 0, 1, 2) over meshed planar domains and spherical caps.
//!
//! The crate discretizes five problems — Dirichlet, Neumann, Robin(τ),
//! Dirichlet-to-Neumann, and the biharmonic Steklov problem — with linear
//! finite elements, solves the torsion ("mean exit time") boundary value
//! problem, and mechanically checks a family of spectral inequalities and
//! equality cases relating these spectra to the geometry of the domain.
//!
//! Conventions used throughout (see `docs/conventions.md`):
//! * the Laplacian is the geometer's one, `Δf = -div grad f`, so all
//!   spectra here are nonnegative;
//! * `ν` is the **inward** unit normal along the boundary;
//! * spherical caps are represented on a flat chart through stereographic
//!   projection from the antipode, with conformal factor `μ = 2/(1+|x|²)`.

pub mod assembly;
pub mod cli;
pub mod eig;
pub mod forms;
pub mod geom;
pub mod mesh;
pub mod serrin;
pub mod sparse;
pub mod verify;
pub mod whitney;

/// Environment variable consulted for the global RNG seed (default 42).
pub const SEED_ENV: &str = "SPECLAB_SEED";

/// Read the global seed: `SPECLAB_SEED` if set and parseable, else 42.
pub fn global_seed() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(42)
}
