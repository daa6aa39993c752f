//! Numerical toolkit for circle bundles over compact hyperbolic surfaces.

pub mod acs_pointwise;
pub mod bundle_autos;
pub mod deformation_ops;
pub mod error;
pub mod fem;
pub mod line_bundle;
pub mod linalg;
pub mod mobius_fuchsian;
pub mod surface_mesh;
pub mod surface_pde;

pub use error::{CrError, Result};
pub use num_complex::Complex64;
