//! Integration over untrimmed domains by per-tile Gauss-Legendre quadrature.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::scalar::Real;
use crate::spline::{max_total_degree, SplineMap};
use crate::untrim::UntrimResult;

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<F> {
    sum: F,
    err: F,
}

impl<F: Real> CompensatedSum<F> {
    pub fn add(&mut self, x: F) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.err += (self.sum - t) + x;
        } else {
            self.err += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> F {
        self.sum + self.err
    }
}

impl<F: Real> FromIterator<F> for CompensatedSum<F> {
    fn from_iter<I: IntoIterator<Item = F>>(iter: I) -> Self {
        let mut s = CompensatedSum { sum: F::zero(), err: F::zero() };
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// How many Gauss points to use per tile axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    /// The same number of points on every tile.
    Fixed([usize; 3]),
    /// Enough points to integrate exactly a polynomial integrand of the
    /// given total degree in the Euclidean coordinates.
    Exact { integrand_degree: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralReport<F> {
    pub value: F,
    /// One entry per tile, in tile order.
    pub contributions: Vec<F>,
    pub tile_count: usize,
    /// Number of tiles emitted by each Bézier cell.
    pub tiles_per_cell: Vec<usize>,
}

fn det3<F: Real>(m: &[F]) -> F {
    m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) + m[2] * (m[3] * m[7] - m[4] * m[6])
}

/// Determinant of the derivative of `t ∘ tile` at `params`.
pub fn jacobian_det<F: Real>(t: &SplineMap<F>, tile: &SplineMap<F>, params: &[F]) -> F {
    let (x, jt) = tile.eval_jacobian(params);
    let (_, jm) = t.eval_jacobian(&x);
    det3(&jm) * det3(&jt)
}

/// Gauss points per axis that integrate `f ∘ t ∘ tile · |det|` exactly when
/// `f` is a polynomial of total degree `g`.
pub fn exact_order<F: Real>(t: &SplineMap<F>, tile: &SplineMap<F>, g: usize) -> [usize; 3] {
    exact_order_with(max_total_degree(t), tile, g)
}

fn exact_order_with<F: Real>(dt: usize, tile: &SplineMap<F>, g: usize) -> [usize; 3] {
    let deg = tile.degrees();
    std::array::from_fn(|k| {
        let a = deg[k];
        let d = 3 * dt.saturating_sub(1) * a + (3 * a).saturating_sub(1) + g * dt * a;
        (d + 2) / 2
    })
}

/// Parameter cuts of an axis-aligned box piece at the breakpoints of `t`,
/// so that each sub-box maps into one polynomial piece of `t`.
fn box_cuts<F: Real>(t: &SplineMap<F>, piece: &SplineMap<F>) -> Vec<Vec<F>> {
    let lo = piece.domain_lo();
    let hi = piece.domain_hi();
    let mut cuts: Vec<Vec<F>> = (0..3).map(|a| vec![lo[a], hi[a]]).collect();
    if piece.degrees() != [1, 1, 1] {
        return cuts;
    }
    let c = |i: usize, j: usize, k: usize| piece.point((i * 2 + j) * 2 + k);
    let eps = F::lit(1e-12);
    // coordinate a must vary along parameter a only
    for a in 0..3 {
        for flat in 0..8 {
            let idx = [flat >> 2 & 1, flat >> 1 & 1, flat & 1];
            let mut own = [0usize; 3];
            own[a] = idx[a];
            let v = c(idx[0], idx[1], idx[2])[a];
            let w = c(own[0], own[1], own[2])[a];
            if (v - w).abs() > eps * (F::one() + w.abs()) {
                return cuts;
            }
        }
    }
    for a in 0..3 {
        let mut e = [0usize; 3];
        e[a] = 1;
        let x0 = c(0, 0, 0)[a];
        let x1 = c(e[0], e[1], e[2])[a];
        if x1 == x0 {
            continue;
        }
        let (xl, xh) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
        for b in t.basis(a).breakpoints() {
            if b > xl && b < xh {
                let s = (b - x0) / (x1 - x0);
                cuts[a].push(lo[a] + s * (hi[a] - lo[a]));
            }
        }
        cuts[a].sort_by(|p, q| p.partial_cmp(q).expect("finite"));
    }
    cuts
}

fn integrate_tile<F: Real>(
    t: &SplineMap<F>,
    tile: &SplineMap<F>,
    f: &(impl Fn(&[F]) -> F + Sync),
    rules: &[QuadratureRule<F>; 3],
) -> F {
    let mut acc = CompensatedSum::default();
    for piece in tile.bezier_extract().pieces {
        let cuts = box_cuts(t, &piece);
        for i in 0..cuts[0].len() - 1 {
            for j in 0..cuts[1].len() - 1 {
                for k in 0..cuts[2].len() - 1 {
                    let lo = [cuts[0][i], cuts[1][j], cuts[2][k]];
                    let hi = [cuts[0][i + 1], cuts[1][j + 1], cuts[2][k + 1]];
                    acc.add(integrate_box(t, &piece, f, rules, lo, hi));
                }
            }
        }
    }
    acc.value()
}

fn integrate_box<F: Real>(
    t: &SplineMap<F>,
    piece: &SplineMap<F>,
    f: &(impl Fn(&[F]) -> F + Sync),
    rules: &[QuadratureRule<F>; 3],
    lo: [F; 3],
    hi: [F; 3],
) -> F {
    let h: [F; 3] = std::array::from_fn(|a| hi[a] - lo[a]);
    let mut elem = CompensatedSum::default();
    for (x0, w0) in rules[0].nodes.iter().zip(&rules[0].weights) {
        for (x1, w1) in rules[1].nodes.iter().zip(&rules[1].weights) {
            for (x2, w2) in rules[2].nodes.iter().zip(&rules[2].weights) {
                let p = [lo[0] + h[0] * *x0, lo[1] + h[1] * *x1, lo[2] + h[2] * *x2];
                let (y, jt) = piece.eval_jacobian(&p);
                let (x, jm) = t.eval_jacobian(&y);
                let det = (det3(&jm) * det3(&jt)).abs();
                elem.add(*w0 * *w1 * *w2 * det * f(&x));
            }
        }
    }
    elem.value() * h[0] * h[1] * h[2]
}

fn rules_for<F: Real>(o: [usize; 3]) -> Result<[QuadratureRule<F>; 3]> {
    if o.contains(&0) {
        return Err(Error::Config("quadrature order must be at least 1".into()));
    }
    Ok([
        QuadratureRule::gauss_legendre(o[0])?,
        QuadratureRule::gauss_legendre(o[1])?,
        QuadratureRule::gauss_legendre(o[2])?,
    ])
}

/// Integrates `f` over the image of `tiles` under `t`. Tiles map into the
/// parametric box of `t`; `f` receives Euclidean points.
pub fn integrate_over_tiles<F: Real>(
    t: &SplineMap<F>,
    tiles: &[SplineMap<F>],
    f: impl Fn(&[F]) -> F + Sync,
    order: Order,
) -> Result<IntegralReport<F>> {
    if t.dim_in() != 3 || t.dim_out() != 3 || tiles.iter().any(|s| s.dim_in() != 3 || s.dim_out() != 3) {
        return Err(Error::Shape("integration needs trivariate maps into R^3".into()));
    }
    let dt = max_total_degree(t);
    let contributions = tiles
        .par_iter()
        .map(|tile| {
            let o = match order {
                Order::Fixed(o) => o,
                Order::Exact { integrand_degree } => exact_order_with(dt, tile, integrand_degree),
            };
            Ok(integrate_tile(t, tile, &f, &rules_for(o)?))
        })
        .collect::<Result<Vec<F>>>()?;
    let value = contributions.iter().copied().collect::<CompensatedSum<F>>().value();
    Ok(IntegralReport { value, tile_count: tiles.len(), tiles_per_cell: vec![tiles.len()], contributions })
}

/// [`integrate_over_tiles`] over the tiles of an untrimming result.
pub fn integrate_untrimmed(
    ur: &UntrimResult,
    f: impl Fn(&[f64]) -> f64 + Sync,
    order: Order,
) -> Result<IntegralReport<f64>> {
    let mut r = integrate_over_tiles(&ur.source.t, &ur.tiles, f, order)?;
    let cells = ur.origins.iter().map(|o| o.cell + 1).max().unwrap_or(0).max(ur.stats.bezier_cells);
    let mut per = vec![0; cells];
    for o in &ur.origins {
        per[o.cell] += 1;
    }
    r.tiles_per_cell = per;
    Ok(r)
}

/// Volume of the untrimmed domain, with rules exact for the polynomial
/// Jacobian determinant.
pub fn volume(ur: &UntrimResult) -> Result<f64> {
    Ok(integrate_untrimmed(ur, |_| 1.0, Order::Exact { integrand_degree: 0 })?.value)
}
