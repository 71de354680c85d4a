//! Tensor-product B-spline kernel.

pub(crate) mod bezier;
mod compose;
mod knots;
mod map;
mod product;

pub use bezier::binomial;
pub use compose::{compose_surface, compose_surface_in_trivariate, interpolate_bezier_patch, ruled_trivariate};
pub use knots::KnotVector;
pub use map::{BezierGrid, SplineMap};
pub use product::{aligned_pieces, cross, dot, normal_field, normal_field_grid, product_grid, symbolic_product};

pub(crate) use product::dot_piece;
pub(crate) use compose::max_total_degree;

/// Scalar-valued spline map.
pub type ScalarField<F> = SplineMap<F>;

/// Partial derivative of `m` along `axis`.
pub fn derivative_map<F: crate::scalar::Real>(m: &SplineMap<F>, axis: usize) -> SplineMap<F> {
    m.derivative(axis)
}
