//! Riesz and logarithmic potentials of discrete measures, outer capacities
//! via linear programming, thinness series on dyadic annuli, multiscale
//! potential bounds and conformal ray lengths.
//!
//! Every numerical routine is generic over [`Scalar`] (`f32` or `f64`);
//! the aliases at the crate root fix `f64`.

pub mod asymptotics;
pub mod capacity;
pub mod conformal;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lp;
pub mod measure;
pub mod potential;
pub mod scalar;
pub mod thinness;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Measure = measure::DiscreteMeasure<f64>;
pub type Points = geometry::PointSet<f64>;
pub type Region = geometry::RegionSet<f64>;
pub type Domain = geometry::Domain<f64>;
