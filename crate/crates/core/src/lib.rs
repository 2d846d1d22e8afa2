//! Numerics for Riesz-type odd kernels: three-point symmetrizations,
//! discrete energies, Wolff potentials and capacity estimators.

pub mod capacity;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod measures;
pub mod numeric;
pub mod sets;
pub mod symmetrization;

pub use error::{Error, Result};
pub use geometry::{Point, Triple};
pub use kernels::KernelParams;
pub use measures::{DiscreteMeasure, WolffParams};
pub use sets::{PointCloud, SetSpec};
