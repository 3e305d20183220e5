//! Numerical solver for the stationary linearized and weakly nonlinear
//! Boltzmann equation on bounded convex domains, posed in integral form
//!
//! ```text
//! f = J f0 + S phi + S K f,
//! ```
//!
//! together with desk-scale verification probes for the geometric, kernel,
//! smoothing, compactness, coercivity and regularity estimates that underpin
//! the solvability theory.
//!
//! The crate is organized along the problem structure:
//!
//! * [`geometry`] — exact backward-exit geometry, boundary distance and the
//!   degeneracy weights of convex domains (balls and ellipsoids),
//! * [`collision`] — cross section, post-collision maps, collision frequency,
//!   the linearized kernel and its tabulated operator, and the bilinear form,
//! * [`transport`] — free streaming along backward characteristics,
//! * [`field`] — phase-space grids, fields and source families,
//! * [`solver`] — the linear fixed-point solver, the Picard iteration for the
//!   weakly nonlinear problem, and the operator probes,
//! * [`regularity`] — weighted norms, Hölder seminorms and integrability
//!   checks for solution fields,
//! * [`verify`] — named check suites shared by the verification scenarios.

pub mod collision;
pub mod error;
pub mod field;
pub mod geometry;
pub mod quad;
pub mod regularity;
pub mod solver;
pub mod transport;
pub mod vec3;
pub mod verify;

pub use collision::{
    CollisionKernelTable, CrossSection, VelocityGrid, VelocityGridConfig,
};
pub use error::{Error, Result};
pub use field::{PhaseSpaceField, SpatialGrid, SpatialGridConfig};
pub use geometry::{DomainGeometry, ExitData, PairGeometry};
pub use solver::{SolveConfig, SolveReport};
