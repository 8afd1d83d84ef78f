//! W-transforms: uniformity-preserving maps of `[0, 1]` built from a base
//! distribution and a piecewise monotone function, and the copulas obtained
//! by applying them to the margins of a base copula.

pub mod copula;
pub mod data;
pub mod dist;
pub mod error;
pub mod fit;
pub mod measures;
pub mod fixtures;
pub mod pcsm;
pub mod quad;
pub mod rng;
pub mod sample;
pub mod wcopula;
pub mod wtransform;

pub use copula::{Copula, Family, UnitBox};
pub use dist::{BaseDistribution, DistKind};
pub use error::{Error, Result};
pub use pcsm::{PcsmFunction, Piece, PiecewiseLinearMap};
pub use sample::Sample;
pub use wcopula::WTransformedCopula;
pub use wtransform::{Transform, WMap, WTransform};
