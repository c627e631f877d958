//! Quadratic lattices of signature (b, 2) and the arithmetic attached to them:
//! p-adic local densities, Eisenstein coefficients of weight 1 + b/2,
//! archimedean Green-function pieces and synthetic chains of reductions.

pub mod arith;
pub mod chains;
pub mod density;
pub mod eisenstein;
pub mod green;
pub mod enumerate;
pub mod error;
pub mod jordan;
pub mod lattice;
pub mod matrix;
pub mod point;
pub mod reduce;
pub mod special;

pub use density::{DensityCache, LocalDensity, SingularSeries};
pub use enumerate::Enumerator;
pub use error::{Error, Result};
pub use jordan::{JordanBlock, JordanSplitting};
pub use lattice::{DiscriminantGroup, IntegralLattice};
pub use point::PeriodPoint;
