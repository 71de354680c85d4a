//! Composition of a surface with a trivariate, and ruled trivariates.

use crate::error::{Error, Result};
use crate::linalg::lu_solve;
use crate::scalar::Real;

use super::bezier::binomial;
use super::knots::KnotVector;
use super::map::SplineMap;

const MAX_COMPOSED_DEGREE: usize = 40;

fn lobatto_nodes<F: Real>(n: usize) -> Vec<F> {
    if n == 0 {
        return vec![F::lit(0.5)];
    }
    (0..=n)
        .map(|j| (F::one() - (F::PI() * F::of(j) / F::of(n)).cos()) * F::lit(0.5))
        .collect()
}

fn bernstein_matrix<F: Real>(n: usize, nodes: &[F]) -> Vec<F> {
    let mut m = vec![F::zero(); (n + 1) * (n + 1)];
    for (i, x) in nodes.iter().enumerate() {
        for j in 0..=n {
            m[i * (n + 1) + j] = binomial::<F>(n, j) * x.powi(j as i32) * (F::one() - *x).powi((n - j) as i32);
        }
    }
    m
}

/// Interpolates `f` on a Bézier patch of the given degrees over `[lo, hi]`
/// using Chebyshev-Lobatto nodes, so that polynomials of these degrees are
/// reproduced exactly.
pub fn interpolate_bezier_patch<F: Real>(
    degs: [usize; 2],
    lo: [F; 2],
    hi: [F; 2],
    dim_out: usize,
    f: impl Fn(F, F) -> Vec<F>,
) -> Result<SplineMap<F>> {
    let [n0, n1] = degs;
    let x0 = lobatto_nodes::<F>(n0);
    let x1 = lobatto_nodes::<F>(n1);
    let (m0, m1) = (n0 + 1, n1 + 1);
    let q = dim_out;
    // values laid out [i0][i1][c]
    let mut vals = Vec::with_capacity(m0 * m1 * q);
    for a in &x0 {
        for b in &x1 {
            let u = lo[0] + (hi[0] - lo[0]) * *a;
            let v = lo[1] + (hi[1] - lo[1]) * *b;
            let p = f(u, v);
            if p.len() != q {
                return Err(Error::Shape("interpolated function has wrong range".into()));
            }
            vals.extend(p);
        }
    }
    // solve along axis 1: for each i0, M1 * C = V with rhs columns = q
    let mut tmp = vec![F::zero(); m0 * m1 * q];
    for i0 in 0..m0 {
        let mut a = bernstein_matrix::<F>(n1, &x1);
        let mut rhs = vals[i0 * m1 * q..(i0 + 1) * m1 * q].to_vec();
        lu_solve(&mut a, m1, &mut rhs, q)?;
        tmp[i0 * m1 * q..(i0 + 1) * m1 * q].copy_from_slice(&rhs);
    }
    // solve along axis 0 with rhs columns = m1*q
    let mut a = bernstein_matrix::<F>(n0, &x0);
    lu_solve(&mut a, m0, &mut tmp, m1 * q)?;
    let bases = vec![KnotVector::bezier(n0, lo[0], hi[0]), KnotVector::bezier(n1, lo[1], hi[1])];
    SplineMap::new(bases, q, tmp)
}

/// Total degree bound of `t` over its polynomial pieces.
pub(crate) fn max_total_degree<F: Real>(t: &SplineMap<F>) -> usize {
    t.bezier_extract()
        .pieces
        .iter()
        .map(|p| p.total_degree(F::lit(1e-12)))
        .max()
        .unwrap_or(0)
}

/// Returns the surface `t(s(u,v))`.
///
/// The result is exact when every Bézier piece of `s` maps into a single
/// polynomial piece of `t`; otherwise it interpolates `t(s)` with the same
/// degree bound.
pub fn compose_surface_in_trivariate<F: Real>(t: &SplineMap<F>, s: &SplineMap<F>) -> Result<SplineMap<F>> {
    if t.dim_in() != 3 {
        return Err(Error::Shape(format!("outer map has {} parametric axes, expected 3", t.dim_in())));
    }
    if s.dim_in() != 2 || s.dim_out() != 3 {
        return Err(Error::Shape("inner map must be a surface into R^3".into()));
    }
    compose_surface(t, s)
}

/// Returns `outer(s(u,v))` for any outer map whose parametric dimension
/// equals the range dimension of the bivariate `s`.
pub fn compose_surface<F: Real>(t: &SplineMap<F>, s: &SplineMap<F>) -> Result<SplineMap<F>> {
    if s.dim_in() != 2 || s.dim_out() != t.dim_in() {
        return Err(Error::Shape("inner map must be bivariate into the outer domain".into()));
    }
    let tlo = t.domain_lo();
    let thi = t.domain_hi();
    let total = max_total_degree(t).max(1);
    let grid = s.bezier_extract();
    let mut pieces = Vec::with_capacity(grid.pieces.len());
    for piece in &grid.pieces {
        // range check on a sample grid
        let (ulo, uhi) = piece.domain(0);
        let (vlo, vhi) = piece.domain(1);
        for i in 0..=8 {
            for j in 0..=8 {
                let u = ulo + (uhi - ulo) * F::of(i) / F::of(8);
                let v = vlo + (vhi - vlo) * F::of(j) / F::of(8);
                let p = piece.eval_clamped(&[u, v]);
                for a in 0..t.dim_in() {
                    let tol = t.basis(a).knot_tol();
                    if p[a] < tlo[a] - tol || p[a] > thi[a] + tol {
                        return Err(Error::domain(
                            p[a].to_f64_lossy(),
                            tlo[a].to_f64_lossy(),
                            thi[a].to_f64_lossy(),
                        ));
                    }
                }
            }
        }
        let d = piece.degrees();
        let degs = [(total * d[0]).min(MAX_COMPOSED_DEGREE), (total * d[1]).min(MAX_COMPOSED_DEGREE)];
        let out = interpolate_bezier_patch(degs, [ulo, vlo], [uhi, vhi], t.dim_out(), |u, v| {
            t.eval_clamped(&piece.eval_clamped(&[u, v]))
        })?;
        pieces.push(out);
    }
    SplineMap::from_bezier_grid(&grid.counts, &pieces, F::lit(1e-9))
}

/// Ruled trivariate `(1-w) p + w s(u,v)` with `w` in `[0, 1]`.
pub fn ruled_trivariate<F: Real>(p: &[F], s: &SplineMap<F>) -> Result<SplineMap<F>> {
    if s.dim_in() != 2 {
        return Err(Error::Shape("ruled trivariate needs a surface".into()));
    }
    if p.len() != s.dim_out() {
        return Err(Error::Shape("apex and surface live in different spaces".into()));
    }
    let q = s.dim_out();
    let mut coeffs = Vec::with_capacity(s.num_points() * 2 * q);
    for c in s.points() {
        coeffs.extend_from_slice(p);
        coeffs.extend_from_slice(c);
    }
    let mut bases = s.bases().to_vec();
    bases.push(KnotVector::bezier(1, F::zero(), F::one()));
    SplineMap::new(bases, q, coeffs)
}
