//! Decomposition of trimmed B-spline trivariates into tensor-product tiles.

pub mod error;
pub mod config;
pub mod fixtures;
pub mod geom2d;
pub mod raycast;
pub mod trim;
pub mod linalg;
pub mod quadrature;
pub mod scalar;
pub mod spline;
pub mod subdivide;
pub mod untrim;
pub mod integrate;
pub mod inversion;
pub mod io;
pub mod membership;

pub use config::Config;
pub use error::{Error, Result};
pub use quadrature::QuadratureRule;
pub use scalar::Real;
pub use spline::{KnotVector, ScalarField, SplineMap};

/// Double precision spline map.
pub type Spline = SplineMap<f64>;
/// Double precision knot vector.
pub type Knots = KnotVector<f64>;
/// Double precision Gauss-Legendre rule.
pub type Rule = QuadratureRule<f64>;
