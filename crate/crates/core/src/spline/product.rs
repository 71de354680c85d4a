//! Symbolic products of spline maps, computed per Bézier piece.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::bezier::product_tensor;
use super::map::{BezierGrid, SplineMap};

/// Extracts `f` and `g` at the union of their breakpoints so that pieces pair up.
pub fn aligned_pieces<F: Real>(f: &SplineMap<F>, g: &SplineMap<F>) -> Result<(BezierGrid<F>, BezierGrid<F>)> {
    if f.dim_in() != g.dim_in() {
        return Err(Error::Shape("fields have different parametric dimension".into()));
    }
    let mut breaks = Vec::with_capacity(f.dim_in());
    for a in 0..f.dim_in() {
        let (fl, fh) = f.domain(a);
        let (gl, gh) = g.domain(a);
        let tol = f.basis(a).knot_tol();
        if (fl - gl).abs() > tol || (fh - gh).abs() > tol {
            return Err(Error::domain(gl.to_f64_lossy(), fl.to_f64_lossy(), fh.to_f64_lossy()));
        }
        let mut br = f.basis(a).breakpoints();
        for b in g.basis(a).breakpoints() {
            if br.iter().all(|x| (*x - b).abs() > tol) {
                br.push(b);
            }
        }
        br.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // use f's exact end values
        let n = br.len();
        br[0] = fl;
        br[n - 1] = fh;
        breaks.push(br);
    }
    Ok((f.extract_at(&breaks), g.extract_at(&breaks)))
}

fn piece_product<F: Real>(a: &SplineMap<F>, b: &SplineMap<F>, pairs: &[(usize, usize)]) -> SplineMap<F> {
    // each output component is sum over listed (a_comp, b_comp) pairs with sign encoded by order
    let da = a.degrees();
    let db = b.degrees();
    let comps: Vec<Vec<F>> = pairs
        .iter()
        .map(|(ca, cb)| product_tensor(&a.component(*ca).coeffs().to_vec(), &da, &b.component(*cb).coeffs().to_vec(), &db))
        .collect();
    let dc: Vec<usize> = da.iter().zip(&db).map(|(x, y)| x + y).collect();
    let npts = comps[0].len();
    let mut coeffs = Vec::with_capacity(npts * comps.len());
    for i in 0..npts {
        for c in &comps {
            coeffs.push(c[i]);
        }
    }
    bezier_like(a, &dc, comps.len(), coeffs)
}

fn bezier_like<F: Real>(like: &SplineMap<F>, degs: &[usize], dim_out: usize, coeffs: Vec<F>) -> SplineMap<F> {
    let bases = (0..like.dim_in())
        .map(|a| {
            let (lo, hi) = like.domain(a);
            super::KnotVector::bezier(degs[a], lo, hi)
        })
        .collect();
    SplineMap::new(bases, dim_out, coeffs).expect("consistent Bézier product")
}

fn combine<F: Real>(
    f: &SplineMap<F>,
    g: &SplineMap<F>,
    per_piece: impl Fn(&SplineMap<F>, &SplineMap<F>) -> SplineMap<F>,
) -> Result<SplineMap<F>> {
    let grid = product_grid(f, g, per_piece)?;
    SplineMap::from_bezier_grid(&grid.counts, &grid.pieces, F::lit(1e-12))
}

/// Pairs pieces of `f` and `g` and applies `per_piece`, keeping the grid.
pub fn product_grid<F: Real>(
    f: &SplineMap<F>,
    g: &SplineMap<F>,
    per_piece: impl Fn(&SplineMap<F>, &SplineMap<F>) -> SplineMap<F>,
) -> Result<BezierGrid<F>> {
    let (gf, gg) = aligned_pieces(f, g)?;
    let pieces = gf.pieces.iter().zip(&gg.pieces).map(|(a, b)| per_piece(a, b)).collect();
    Ok(BezierGrid { counts: gf.counts, pieces })
}

/// Pointwise product. One operand may be scalar (scaling the other);
/// otherwise the product is taken componentwise.
pub fn symbolic_product<F: Real>(f: &SplineMap<F>, g: &SplineMap<F>) -> Result<SplineMap<F>> {
    let pairs: Vec<(usize, usize)> = if f.dim_out() == 1 {
        (0..g.dim_out()).map(|c| (0, c)).collect()
    } else if g.dim_out() == 1 {
        (0..f.dim_out()).map(|c| (c, 0)).collect()
    } else if f.dim_out() == g.dim_out() {
        (0..f.dim_out()).map(|c| (c, c)).collect()
    } else {
        return Err(Error::Shape(format!(
            "cannot multiply R^{} and R^{} valued fields",
            f.dim_out(),
            g.dim_out()
        )));
    };
    combine(f, g, |a, b| piece_product(a, b, &pairs))
}

/// Per-piece inner product.
pub(crate) fn dot_piece<F: Real>(a: &SplineMap<F>, b: &SplineMap<F>) -> SplineMap<F> {
    let q = a.dim_out();
    let prod = piece_product(a, b, &(0..q).map(|c| (c, c)).collect::<Vec<_>>());
    prod.map_points(1, |p| vec![p.iter().copied().sum()])
}

/// Per-piece cross product of two R^3 fields.
pub(crate) fn cross_piece<F: Real>(a: &SplineMap<F>, b: &SplineMap<F>) -> SplineMap<F> {
    // a1 b2 - a2 b1, a2 b0 - a0 b2, a0 b1 - a1 b0
    let pos = piece_product(a, b, &[(1, 2), (2, 0), (0, 1)]);
    let neg = piece_product(a, b, &[(2, 1), (0, 2), (1, 0)]);
    let coeffs = pos.coeffs().iter().zip(neg.coeffs()).map(|(x, y)| *x - *y).collect();
    SplineMap::new(pos.bases().to_vec(), 3, coeffs).expect("same layout")
}

/// Scalar field `<f, g>`.
pub fn dot<F: Real>(f: &SplineMap<F>, g: &SplineMap<F>) -> Result<SplineMap<F>> {
    if f.dim_out() != g.dim_out() {
        return Err(Error::Shape("dot product of different ranges".into()));
    }
    combine(f, g, dot_piece)
}

/// Field `f x g` of two R^3-valued maps.
pub fn cross<F: Real>(f: &SplineMap<F>, g: &SplineMap<F>) -> Result<SplineMap<F>> {
    if f.dim_out() != 3 || g.dim_out() != 3 {
        return Err(Error::Shape("cross product needs R^3-valued fields".into()));
    }
    combine(f, g, cross_piece)
}

/// Per-piece normal field `s_u x s_v` of a surface in R^3.
pub fn normal_field_grid<F: Real>(s: &SplineMap<F>) -> Result<BezierGrid<F>> {
    if s.dim_in() != 2 || s.dim_out() != 3 {
        return Err(Error::Shape(format!(
            "normal field needs a surface in R^3, got {}->{}",
            s.dim_in(),
            s.dim_out()
        )));
    }
    let grid = s.bezier_extract();
    let pieces = grid
        .pieces
        .iter()
        .map(|p| cross_piece(&p.derivative(0), &p.derivative(1)))
        .collect();
    Ok(BezierGrid { counts: grid.counts, pieces })
}

/// Unnormalized normal field `s_u x s_v`.
pub fn normal_field<F: Real>(s: &SplineMap<F>) -> Result<SplineMap<F>> {
    let g = normal_field_grid(s)?;
    SplineMap::from_bezier_grid(&g.counts, &g.pieces, F::lit(1e-12))
}
