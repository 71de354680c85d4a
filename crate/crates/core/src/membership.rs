//! Point membership queries against a set of tiles.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::inversion::solve_box;
use crate::trim::P3;
use crate::Spline;

struct Elem {
    tile: usize,
    lo: P3,
    hi: P3,
    piece: Spline,
    /// Parameters and images of a 3 x 3 x 3 interior sample grid; entry 13
    /// is the element center.
    samples: Vec<(P3, P3)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hit {
    pub tile: usize,
    pub params: Vec<f64>,
    /// Estimated distance from the point to the tile's boundary.
    pub boundary_dist: f64,
}

/// Spatial index over the Bézier elements of trivariate tiles.
pub struct TileIndex {
    tiles: Vec<Spline>,
    elems: Vec<Elem>,
    cell: f64,
    grid: HashMap<(i64, i64, i64), Vec<u32>>,
    tol: f64,
}

impl TileIndex {
    pub fn new(tiles: &[Spline]) -> Self {
        let raw: Vec<(usize, Spline)> = tiles
            .iter()
            .enumerate()
            .flat_map(|(t, tile)| tile.bezier_extract().pieces.into_iter().map(move |p| (t, p)))
            .collect();
        let span = |p: &Spline| {
            let (lo, hi) = p.ctrl_bbox();
            (0..3).map(|a| (hi[a] - lo[a]).powi(2)).sum::<f64>().sqrt()
        };
        let target = raw.iter().map(|(_, p)| span(p)).fold(0.0, f64::max) / 16.0;
        let elems: Vec<Elem> = raw
            .par_iter()
            .flat_map_iter(|(t, piece)| {
                let mut parts = Vec::new();
                shrink(piece.clone(), target, 4, &mut parts);
                parts.into_iter().map(move |p| elem(*t, p))
            })
            .collect();
        let mut glo = [f64::INFINITY; 3];
        let mut ghi = [f64::NEG_INFINITY; 3];
        for e in &elems {
            for a in 0..3 {
                glo[a] = glo[a].min(e.lo[a]);
                ghi[a] = ghi[a].max(e.hi[a]);
            }
        }
        let diag = (0..3).map(|a| (ghi[a] - glo[a]).powi(2)).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let cell = diag / 64.0;
        let tol = 1e-10 * diag;
        let mut grid: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, e) in elems.iter().enumerate() {
            let k0 = key(&e.lo, cell, -tol);
            let k1 = key(&e.hi, cell, tol);
            for x in k0.0..=k1.0 {
                for y in k0.1..=k1.1 {
                    for z in k0.2..=k1.2 {
                        grid.entry((x, y, z)).or_default().push(i as u32);
                    }
                }
            }
        }
        TileIndex { tiles: tiles.to_vec(), elems, cell, grid, tol }
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    /// Tiles whose image contains `x`. Every element whose control box
    /// holds `x` is inverted locally, nearest elements first.
    pub fn locate(&self, x: &P3) -> Vec<Hit> {
        let mut hits: Vec<Hit> = Vec::new();
        let Some(cands) = self.grid.get(&key(x, self.cell, 0.0)) else {
            return hits;
        };
        let mut order: Vec<(f64, &Elem, P3)> = cands
            .iter()
            .map(|&ei| &self.elems[ei as usize])
            .filter(|e| (0..3).all(|a| x[a] >= e.lo[a] - self.tol && x[a] <= e.hi[a] + self.tol))
            .map(|e| {
                let (d, u) = e
                    .samples
                    .iter()
                    .map(|(u, p)| ((0..3).map(|a| (p[a] - x[a]).powi(2)).sum::<f64>(), *u))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .expect("samples");
                (d, e, u)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, e, u) in order {
            if hits.iter().any(|h| h.tile == e.tile) {
                continue;
            }
            let (lo, hi) = (e.piece.domain_lo(), e.piece.domain_hi());
            let found = [u, e.samples[13].0].into_iter().find_map(|s| {
                let sol = solve_box(&e.piece, x, &s, &lo, &hi, 1e-3 * self.tol, 40);
                (sol.residual <= self.tol).then_some(sol.params)
            });
            if let Some(params) = found {
                let tile = &self.tiles[e.tile];
                let boundary_dist = boundary_distance(tile, &params);
                hits.push(Hit { tile: e.tile, params, boundary_dist });
            }
        }
        hits
    }
}

fn elem(tile: usize, piece: Spline) -> Elem {
    let (lo, hi) = piece.ctrl_bbox();
    let (plo, phi) = (piece.domain_lo(), piece.domain_hi());
    let samples = (0..27)
        .map(|m| {
            let f = [m % 3, m / 3 % 3, m / 9];
            let u: P3 = std::array::from_fn(|a| plo[a] + (phi[a] - plo[a]) * (2 * f[a] + 1) as f64 / 6.0);
            let x = piece.eval_clamped(&u);
            (u, [x[0], x[1], x[2]])
        })
        .collect();
    Elem { tile, lo: [lo[0], lo[1], lo[2]], hi: [hi[0], hi[1], hi[2]], piece, samples }
}

/// Halves a Bézier piece along its longest parameter direction until its
/// control box is no wider than `target`.
fn shrink(piece: Spline, target: f64, depth: usize, out: &mut Vec<Spline>) {
    let (lo, hi) = piece.ctrl_bbox();
    let size = (0..3).map(|a| (hi[a] - lo[a]).powi(2)).sum::<f64>().sqrt();
    if depth == 0 || size <= target {
        out.push(piece);
        return;
    }
    let shape = piece.shape();
    let stride = |a: usize| shape[a + 1..].iter().product::<usize>();
    // image length of the control net along each parameter direction
    let reach: Vec<f64> = (0..3)
        .map(|a| {
            let s = stride(a);
            (0..piece.num_points())
                .filter(|i| (i / s) % shape[a] + 1 < shape[a])
                .map(|i| {
                    let (p, q) = (piece.point(i), piece.point(i + s));
                    (0..3).map(|k| (q[k] - p[k]).powi(2)).sum::<f64>().sqrt()
                })
                .fold(0.0, f64::max)
                * (shape[a] - 1) as f64
        })
        .collect();
    let axis = (0..3).max_by(|a, b| reach[*a].total_cmp(&reach[*b])).expect("three axes");
    let (l, h) = piece.domain(axis);
    match piece.subdivide(axis, 0.5 * (l + h)) {
        Ok((a, b)) => {
            shrink(a, target, depth - 1, out);
            shrink(b, target, depth - 1, out);
        }
        Err(_) => out.push(piece),
    }
}

fn key(p: &P3, cell: f64, pad: f64) -> (i64, i64, i64) {
    (
        ((p[0] + pad) / cell).floor() as i64,
        ((p[1] + pad) / cell).floor() as i64,
        ((p[2] + pad) / cell).floor() as i64,
    )
}

/// Distance to the nearest domain face, measured along the parameter
/// directions with first-order scaling.
fn boundary_distance(tile: &Spline, params: &[f64]) -> f64 {
    let (_, jac) = tile.eval_jacobian(params);
    let mut d = f64::INFINITY;
    for a in 0..3 {
        let (lo, hi) = tile.domain(a);
        let speed = (0..3).map(|k| jac[k * 3 + a].powi(2)).sum::<f64>().sqrt();
        d = d.min((params[a] - lo).min(hi - params[a]) * speed);
    }
    d
}
