//! Decomposition of trimmed Bézier trivariates into ruled tensor-product
//! tiles around kernel points.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::config::{Config, Tol};
use crate::error::{Error, Result};
use crate::geom2d::{kernel_point, Poly, Pt, Region};
use crate::inversion::closest;
use crate::linalg::{lstsq, lu_solve, simplex_max};
use crate::raycast::{Location, ShellLocator};
use crate::spline::bezier::deflate;
use crate::spline::{compose_surface, dot, dot_piece, normal_field, normal_field_grid, ruled_trivariate, KnotVector, ScalarField};
use crate::subdivide::{bezier_subdivide_with, tol_for, trim_trivar_subdiv_with};
use crate::trim::{Shell, TrimmedSurface, TrimmedTrivariate, P3};
use crate::Spline;

#[derive(Clone, Debug, PartialEq)]
pub struct KernelCandidate {
    pub p: P3,
    /// Spread between the farthest and the nearest surface.
    pub score: f64,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalCone {
    pub axis: P3,
    pub aperture: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UntrimStats {
    pub bezier_cells: usize,
    pub subdivisions: usize,
    pub max_depth: usize,
    pub kernel_points: usize,
    pub fallbacks: usize,
    pub elapsed: Duration,
}

/// Where a tile came from.
#[derive(Clone, Debug)]
pub struct TileOrigin {
    /// Index of the Bézier cell.
    pub cell: usize,
    pub depth: usize,
    /// Kernel point used as apex; `None` for full-box tiles.
    pub apex: Option<P3>,
    /// Untrimmed surface patch forming the `w = 1` face.
    pub face: Option<Spline>,
}

#[derive(Clone, Debug)]
pub struct UntrimResult {
    /// Tiles as maps into the parametric space of the source trivariate.
    pub tiles: Vec<Spline>,
    pub origins: Vec<TileOrigin>,
    pub source: TrimmedTrivariate,
    pub stats: UntrimStats,
}

// ---------------------------------------------------------------- surfaces

fn sub_patch(base: &Spline, lo: Pt, hi: Pt) -> Result<Spline> {
    let mut b = base.clone();
    for a in 0..2 {
        let (dl, dh) = b.domain(a);
        let eps = 1e-13 * (dh - dl);
        if (lo[a] - dl).abs() > eps || (hi[a] - dh).abs() > eps {
            b = b.restrict(a, lo[a].max(dl), hi[a].min(dh))?;
        }
    }
    Ok(b)
}

/// Patch `(w, s) -> base((1-w) q + w c(s))` where `c` runs once around
/// the closed polygon `ring`, one polynomial piece per edge.
fn ruled_patch(base: &Spline, q: Pt, ring: &[Pt]) -> Result<Spline> {
    let n = ring.len();
    let mut pieces = Vec::with_capacity(n);
    for k in 0..n {
        let a = ring[k];
        let b = ring[(k + 1) % n];
        let r = Spline::bezier(&[1, 1], 2, vec![q[0], q[1], q[0], q[1], a[0], a[1], b[0], b[1]])?;
        let c = compose_surface(base, &r)?;
        pieces.push(c.reparam(&[0.0, k as f64], &[1.0, (k + 1) as f64]));
    }
    let m = Spline::from_bezier_grid(&[1, n], &pieces, 1e-9)?;
    Ok(m.reparam(&[0.0, 0.0], &[1.0, 1.0]))
}

fn untrim_poly(base: &Spline, poly: Poly, depth: usize, out: &mut Vec<Spline>) -> Result<()> {
    let (lo, hi) = poly.bbox();
    let size = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if let Some((a, b)) = poly.as_rect(1e-12 * size) {
        out.push(sub_patch(base, a, b)?);
        return Ok(());
    }
    if let Some(q) = kernel_point(&poly, 1e-6 * size) {
        out.push(ruled_patch(base, q, &poly.outer)?);
        return Ok(());
    }
    if depth >= 40 {
        return Err(Error::FallbackFailure("trimmed surface region could not be decomposed".into()));
    }
    let axis = usize::from(hi[1] - lo[1] > hi[0] - lo[0]);
    let mid = 0.5 * (lo[axis] + hi[axis]);
    let mut h1 = hi;
    h1[axis] = mid;
    let mut l2 = lo;
    l2[axis] = mid;
    let reg = Region { polys: vec![poly] };
    for half in [Region::rect(lo, h1), Region::rect(l2, hi)] {
        for p in reg.intersection(&half, 1e-12 * size).polys {
            untrim_poly(base, p, depth + 1, out)?;
        }
    }
    Ok(())
}

/// Tensor-product patches covering the active region of `ts`, oriented so
/// that their normals point into the enclosed volume.
pub fn untrim_surface(ts: &TrimmedSurface, tol: &Tol) -> Result<Vec<Spline>> {
    let s = ts.oriented();
    if s.loops.is_empty() {
        return Ok(vec![s.base]);
    }
    let region = s.region(tol.flatten);
    let mut out = Vec::new();
    let grid = s.base.bezier_extract();
    for poly in region.polys {
        let (lo, hi) = poly.bbox();
        let size = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        if let Some((a, b)) = poly.as_rect(1e-12 * size) {
            out.push(sub_patch(&s.base, a, b)?);
            continue;
        }
        if grid.pieces.len() == 1 {
            untrim_poly(&grid.pieces[0], poly, 0, &mut out)?;
            continue;
        }
        let reg = Region { polys: vec![poly] };
        for piece in &grid.pieces {
            let (a, b) = piece.domain(0);
            let (c, d) = piece.domain(1);
            for p in reg.intersection(&Region::rect([a, c], [b, d]), 1e-12 * size).polys {
                untrim_poly(piece, p, 0, &mut out)?;
            }
        }
    }
    Ok(out)
}

// -------------------------------------------------------------- visibility

/// Field `<p - s, n>` with `n = s_u x s_v`.
pub fn visibility_field(p: &P3, s: &Spline) -> Result<ScalarField<f64>> {
    let d = s.map_points(3, |c| vec![p[0] - c[0], p[1] - c[1], p[2] - c[2]]);
    dot(&d, &normal_field(s)?)
}

#[derive(Clone, Debug)]
struct VisPiece {
    n: [Vec<f64>; 3],
    sn: Vec<f64>,
}

/// Bézier coefficients of `n` and `<s, n>` over a common basis, so that the
/// visibility field of any point is `p . n - <s, n>` coefficient-wise.
/// Faces along which the normal vanishes identically are divided out.
#[derive(Clone, Debug)]
pub struct Visibility {
    pieces: Vec<VisPiece>,
}

fn face_is_zero(c: &[f64], degs: &[usize], axis: usize, side: usize, tol: f64) -> bool {
    let shape: Vec<usize> = degs.iter().map(|d| d + 1).collect();
    let at = if side == 0 { 0 } else { degs[axis] };
    let inner: usize = shape[axis + 1..].iter().product();
    let n = shape[axis];
    c.iter().enumerate().all(|(f, v)| (f / inner) % n != at || v.abs() <= tol)
}

impl Visibility {
    pub fn new(s: &Spline) -> Result<Self> {
        let ngrid = normal_field_grid(s)?;
        let sgrid = s.bezier_extract();
        let mut pieces = Vec::with_capacity(sgrid.pieces.len());
        for (sp, np) in sgrid.pieces.iter().zip(&ngrid.pieces) {
            let sn = dot_piece(sp, np);
            let mut degs = sn.degrees();
            let nd = np.degrees();
            let mut ne = np.clone();
            for a in 0..2 {
                ne = ne.elevate_bezier(a, degs[a] - nd[a]);
            }
            let mut n: [Vec<f64>; 3] = std::array::from_fn(|c| ne.component(c).coeffs().to_vec());
            let mut snc = sn.coeffs().to_vec();
            let scale = n.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            let zero = 1e-10 * scale;
            loop {
                let mut changed = false;
                for axis in 0..2 {
                    for side in 0..2 {
                        if degs[axis] >= 1 && n.iter().all(|c| face_is_zero(c, &degs, axis, side, zero)) {
                            for c in n.iter_mut() {
                                *c = deflate(c, &degs, axis, side).0;
                            }
                            let (d, nd) = deflate(&snc, &degs, axis, side);
                            snc = d;
                            degs = nd;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            pieces.push(VisPiece { n, sn: snc });
        }
        Ok(Visibility { pieces })
    }

    /// Smallest coefficient of the visibility field of `p`.
    pub fn min_coeff(&self, p: &P3) -> f64 {
        let mut m = f64::INFINITY;
        for pc in &self.pieces {
            for k in 0..pc.sn.len() {
                let v = p[0] * pc.n[0][k] + p[1] * pc.n[1][k] + p[2] * pc.n[2][k] - pc.sn[k];
                m = m.min(v);
            }
        }
        m
    }

    pub fn is_positive(&self, p: &P3) -> bool {
        self.pieces.iter().all(|pc| {
            (0..pc.sn.len()).all(|k| p[0] * pc.n[0][k] + p[1] * pc.n[1][k] + p[2] * pc.n[2][k] - pc.sn[k] > 0.0)
        })
    }
}

/// True when every visibility field of `p` has only positive coefficients.
pub fn is_kernel_point(p: &P3, surfaces: &[Spline]) -> Result<bool> {
    for s in surfaces {
        if !Visibility::new(s)?.is_positive(p) {
            return Ok(false);
        }
    }
    Ok(true)
}

// ------------------------------------------------------------- normal cone

fn cone_of(patches: &[Spline]) -> Result<NormalCone> {
    let mut dirs = Vec::new();
    for s in patches {
        let g = normal_field_grid(s)?;
        let pts: Vec<P3> = g.pieces.iter().flat_map(|p| p.points().map(|c| [c[0], c[1], c[2]]).collect::<Vec<_>>()).collect();
        let scale = pts.iter().map(|c| norm3(c)).fold(0.0f64, f64::max);
        for c in pts {
            let l = norm3(&c);
            if l > 1e-9 * scale {
                dirs.push([c[0] / l, c[1] / l, c[2] / l]);
            }
        }
    }
    let sum = dirs.iter().fold([0.0; 3], |a, d| [a[0] + d[0], a[1] + d[1], a[2] + d[2]]);
    let l = norm3(&sum);
    if dirs.is_empty() || l <= 1e-12 * dirs.len() as f64 {
        return Ok(NormalCone { axis: [0.0, 0.0, 1.0], aperture: std::f64::consts::PI * 2.0 });
    }
    let axis = [sum[0] / l, sum[1] / l, sum[2] / l];
    let dev = dirs
        .iter()
        .map(|d| (d[0] * axis[0] + d[1] * axis[1] + d[2] * axis[2]).clamp(-1.0, 1.0).acos())
        .fold(0.0f64, f64::max);
    Ok(NormalCone { axis, aperture: 2.0 * dev })
}

fn norm3(v: &P3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Cone around the mean direction of the normal-field coefficients; the
/// aperture is the full opening angle.
pub fn normal_cone(s: &Spline) -> Result<NormalCone> {
    cone_of(std::slice::from_ref(s))
}

// ------------------------------------------------------- per-surface cache

#[derive(Debug)]
struct SurfaceData {
    patches: Vec<Spline>,
    vis: Vec<Visibility>,
    cone: NormalCone,
    extent: f64,
}

fn surface_key(s: &TrimmedSurface) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    s.inward.hash(&mut h);
    let hash_map = |m: &Spline, h: &mut std::collections::hash_map::DefaultHasher| {
        for b in m.bases() {
            b.degree().hash(h);
            for k in b.knots() {
                k.to_bits().hash(h);
            }
        }
        for c in m.coeffs() {
            c.to_bits().hash(h);
        }
    };
    hash_map(&s.base, &mut h);
    for l in &s.loops {
        l.curves.len().hash(&mut h);
        for c in &l.curves {
            hash_map(c, &mut h);
        }
    }
    h.finish()
}

struct Ctx<'a> {
    cfg: &'a Config,
    tol: Tol,
    cache: Mutex<HashMap<u64, Arc<SurfaceData>>>,
}

impl Ctx<'_> {
    fn surface(&self, s: &TrimmedSurface) -> Result<Arc<SurfaceData>> {
        let key = surface_key(s);
        if let Some(d) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(d.clone());
        }
        let patches = untrim_surface(s, &self.tol)?;
        let vis = patches.iter().map(Visibility::new).collect::<Result<Vec<_>>>()?;
        let cone = cone_of(&patches)?;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &patches {
            let (a, b) = p.ctrl_bbox();
            for k in 0..3 {
                lo[k] = lo[k].min(a[k]);
                hi[k] = hi[k].max(b[k]);
            }
        }
        let extent = norm3(&[hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]]);
        let d = Arc::new(SurfaceData { patches, vis, cone, extent });
        self.cache.lock().expect("cache lock").insert(key, d.clone());
        Ok(d)
    }
}

// ----------------------------------------------------------- kernel search

fn surface_distance(d: &SurfaceData, p: &P3) -> f64 {
    d.patches
        .iter()
        .map(|s| closest(s, p, 8, 3, 0.0).residual)
        .fold(f64::INFINITY, f64::min)
}

fn kernel_score(data: &[Arc<SurfaceData>], p: &P3) -> f64 {
    let ds: Vec<f64> = data.iter().map(|d| surface_distance(d, p)).collect();
    let max = ds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ds.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn grid_samples(lo: &P3, hi: &P3, n: usize) -> Vec<P3> {
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let f = |a: usize, t: usize| lo[a] + (hi[a] - lo[a]) * (t as f64 + 0.5) / n as f64;
                out.push([f(0, i), f(1, j), f(2, k)]);
            }
        }
    }
    out
}

fn find_kernel(
    data: &[Arc<SurfaceData>],
    locator: &ShellLocator,
    lo: &P3,
    hi: &P3,
    n: usize,
    tie: f64,
) -> Option<KernelCandidate> {
    let samples = grid_samples(lo, hi, n);
    let scored: Vec<Option<f64>> = samples
        .par_iter()
        .map(|p| {
            if locator.locate(p) != Location::Inside {
                return None;
            }
            if !data.iter().all(|d| d.vis.iter().all(|v| v.is_positive(p))) {
                return None;
            }
            Some(kernel_score(data, p))
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scored.iter().enumerate() {
        if let Some(s) = s {
            if best.is_none_or(|(_, b)| *s < b - tie) {
                best = Some((i, *s));
            }
        }
    }
    best.map(|(i, score)| KernelCandidate { p: samples[i], score, passed: true })
}

/// Searches a `grid_res^3` sample grid over the shell's bounding box for a
/// point seeing every surface, preferring points equally far from all of them.
pub fn find_kernel_point(shell: &Shell, grid_res: usize, cfg: &Config) -> Result<Option<KernelCandidate>> {
    let (lo, hi) = shell.bbox();
    let tol = Tol::new(cfg, &lo, &hi);
    let ctx = Ctx { cfg, tol, cache: Mutex::new(HashMap::new()) };
    let data = shell.surfaces.iter().map(|s| ctx.surface(s)).collect::<Result<Vec<_>>>()?;
    let locator = ShellLocator::new(shell, cfg);
    Ok(find_kernel(&data, &locator, &lo, &hi, grid_res, 1e-9 * tol.diag))
}

/// Split parameter and axis: the center of the shell's bounding box along
/// its longest side.
pub fn choose_subdivision(tt: &TrimmedTrivariate) -> (f64, usize) {
    let (lo, hi) = tt.shell.bbox();
    let ext: Vec<f64> = (0..3).map(|a| hi[a] - lo[a]).collect();
    let mut axis = 0;
    for a in 1..3 {
        if ext[a] > ext[axis] * (1.0 + 1e-9) {
            axis = a;
        }
    }
    (0.5 * (lo[axis] + hi[axis]), axis)
}

// ----------------------------------------------------------------- fallback

fn smallest_eigvec(c: &[f64; 9], guess: P3) -> P3 {
    let tr = c[0] + c[4] + c[8];
    let mut v = guess;
    for _ in 0..30 {
        let mut a = c.to_vec();
        for i in 0..3 {
            a[i * 4] += 1e-12 * tr.max(f64::MIN_POSITIVE);
        }
        let mut b = v.to_vec();
        if lu_solve(&mut a, 3, &mut b, 1).is_err() {
            break;
        }
        let l = norm3(&[b[0], b[1], b[2]]);
        if !(l.is_finite() && l > 0.0) {
            break;
        }
        v = [b[0] / l, b[1] / l, b[2] / l];
    }
    v
}

fn fallback_point(data: &[Arc<SurfaceData>], lo: &P3, hi: &P3, tol: &Tol) -> Result<P3> {
    let mut planes: Vec<(P3, P3)> = Vec::new();
    for d in data {
        let mut pts = Vec::new();
        for s in &d.patches {
            let (ul, uh) = s.domain(0);
            let (vl, vh) = s.domain(1);
            for i in 0..5 {
                for j in 0..5 {
                    let u = ul + (uh - ul) * i as f64 / 4.0;
                    let v = vl + (vh - vl) * j as f64 / 4.0;
                    let p = s.eval_clamped(&[u, v]);
                    pts.push([p[0], p[1], p[2]]);
                }
            }
        }
        let m = pts.len() as f64;
        let c = pts.iter().fold([0.0; 3], |a, p| [a[0] + p[0] / m, a[1] + p[1] / m, a[2] + p[2] / m]);
        let mut cov = [0.0; 9];
        for p in &pts {
            let q = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
            for i in 0..3 {
                for j in 0..3 {
                    cov[i * 3 + j] += q[i] * q[j];
                }
            }
        }
        let mut n = smallest_eigvec(&cov, d.cone.axis);
        let s = n[0] * d.cone.axis[0] + n[1] * d.cone.axis[1] + n[2] * d.cone.axis[2];
        if s < 0.0 {
            n = [-n[0], -n[1], -n[2]];
        }
        planes.push((n, c));
    }
    polyhedron_kernel(&planes, lo, hi, tol)
}

/// Chebyshev-style interior point of `{x : n_i . (x - c_i) >= 0}` inside
/// the box, by linear programming.
fn polyhedron_kernel(planes: &[(P3, P3)], lo: &P3, hi: &P3, tol: &Tol) -> Result<P3> {
    let x0: P3 = std::array::from_fn(|a| 0.5 * (lo[a] + hi[a]));
    let slack = |n: &P3, c: &P3| n[0] * (x0[0] - c[0]) + n[1] * (x0[1] - c[1]) + n[2] * (x0[2] - c[2]);
    let r0 = planes.iter().map(|(n, c)| slack(n, c)).fold(f64::INFINITY, f64::min);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (n, c) in planes {
        a.push(vec![-n[0], -n[1], -n[2], n[0], n[1], n[2], 1.0]);
        b.push((slack(n, c) - r0).max(0.0));
    }
    for k in 0..3 {
        let mut row = vec![0.0; 7];
        row[k] = 1.0;
        a.push(row);
        b.push(hi[k] - x0[k]);
        let mut row = vec![0.0; 7];
        row[3 + k] = 1.0;
        a.push(row);
        b.push(x0[k] - lo[k]);
    }
    let mut row = vec![0.0; 7];
    row[6] = 1.0;
    a.push(row);
    b.push(tol.diag + r0.abs());
    let sol = simplex_max(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0], &a, &b)
        .ok_or_else(|| Error::FallbackFailure("unbounded program".into()))?;
    let r = r0 + sol[6];
    if r <= tol.geo {
        return Err(Error::FallbackFailure("planar approximation has an empty kernel".into()));
    }
    Ok(std::array::from_fn(|k| x0[k] + sol[k] - sol[3 + k]))
}

/// Kernel point of the polyhedron bounded by the least-squares planes of
/// the shell's surfaces, for shells whose surfaces are all small and flat.
pub fn polyhedron_fallback(shell: &Shell, cfg: &Config) -> Result<P3> {
    let (lo, hi) = shell.bbox();
    let tol = Tol::new(cfg, &lo, &hi);
    let ctx = Ctx { cfg, tol, cache: Mutex::new(HashMap::new()) };
    let data = shell.surfaces.iter().map(|s| ctx.surface(s)).collect::<Result<Vec<_>>>()?;
    fallback_point(&data, &lo, &hi, &tol)
}

// -------------------------------------------------------------- algorithm

#[derive(Default)]
struct Partial {
    tiles: Vec<(Spline, TileOrigin)>,
    subdivisions: usize,
    max_depth: usize,
    kernels: usize,
    fallbacks: usize,
}

fn is_full_box(tt: &TrimmedTrivariate, tol: f64) -> bool {
    let lo = tt.t.domain_lo();
    let hi = tt.t.domain_hi();
    !tt.shell.is_empty()
        && tt.shell.surfaces.iter().all(|s| {
            (0..3).any(|a| {
                [lo[a], hi[a]].iter().any(|v| s.base.points().all(|p| (p[a] - v).abs() <= tol))
            })
        })
}

fn emit(p: P3, data: &[Arc<SurfaceData>], cell: usize, depth: usize) -> Result<Vec<(Spline, TileOrigin)>> {
    let mut out = Vec::new();
    for d in data {
        for s in &d.patches {
            let tile = ruled_trivariate(&p, s)?;
            out.push((tile, TileOrigin { cell, depth, apex: Some(p), face: Some(s.clone()) }));
        }
    }
    Ok(out)
}

fn untrim_rec(tt: &TrimmedTrivariate, ctx: &Ctx, depth: usize, cell: usize) -> Result<Partial> {
    let cfg = ctx.cfg;
    if is_full_box(tt, ctx.tol.geo) {
        let tile = Spline::identity_box(&tt.t.domain_lo(), &tt.t.domain_hi());
        return Ok(Partial {
            tiles: vec![(tile, TileOrigin { cell, depth, apex: None, face: None })],
            max_depth: depth,
            ..Partial::default()
        });
    }
    let data = tt.shell.surfaces.iter().map(|s| ctx.surface(s)).collect::<Result<Vec<_>>>()?;
    let locator = ShellLocator::new(&tt.shell, cfg);
    let (lo, hi) = tt.shell.bbox();
    for &n in &cfg.grids {
        if let Some(k) = find_kernel(&data, &locator, &lo, &hi, n, 1e-9 * ctx.tol.diag) {
            return Ok(Partial { tiles: emit(k.p, &data, cell, depth)?, max_depth: depth, kernels: 1, ..Partial::default() });
        }
    }
    let eps_e = cfg.eps_e_rel * ctx.tol.diag;
    if data.iter().all(|d| d.extent < eps_e && d.cone.aperture < cfg.eps_theta) {
        if let Ok(p) = fallback_point(&data, &lo, &hi, &ctx.tol) {
            return Ok(Partial {
                tiles: emit(p, &data, cell, depth)?,
                max_depth: depth,
                kernels: 1,
                fallbacks: 1,
                ..Partial::default()
            });
        }
    }
    if depth >= cfg.max_depth {
        return Err(Error::DepthExceeded { depth, tiles: 0 });
    }
    let (t, axis) = choose_subdivision(tt);
    let split = trim_trivar_subdiv_with(tt, t, axis, cfg, &ctx.tol)?;
    let parts: Vec<Result<Partial>> = split.pieces.par_iter().map(|p| untrim_rec(&p.tt, ctx, depth + 1, cell)).collect();
    let mut out = Partial { subdivisions: 1, max_depth: depth, ..Partial::default() };
    for p in parts {
        let p = p.map_err(|e| match e {
            Error::DepthExceeded { depth, tiles } => Error::DepthExceeded { depth, tiles: tiles + out.tiles.len() },
            e => e,
        })?;
        out.tiles.extend(p.tiles);
        out.subdivisions += p.subdivisions;
        out.max_depth = out.max_depth.max(p.max_depth);
        out.kernels += p.kernels;
        out.fallbacks += p.fallbacks;
    }
    Ok(out)
}

fn finish(source: &TrimmedTrivariate, parts: Vec<Partial>, cells: usize, start: Instant) -> UntrimResult {
    let mut stats = UntrimStats { bezier_cells: cells, ..UntrimStats::default() };
    let mut tiles = Vec::new();
    let mut origins = Vec::new();
    for p in parts {
        stats.subdivisions += p.subdivisions;
        stats.max_depth = stats.max_depth.max(p.max_depth);
        stats.kernel_points += p.kernels;
        stats.fallbacks += p.fallbacks;
        for (t, o) in p.tiles {
            tiles.push(t);
            origins.push(o);
        }
    }
    stats.elapsed = start.elapsed();
    UntrimResult { tiles, origins, source: source.clone(), stats }
}

/// Untrims a trimmed trivariate whose trivariate is a single Bézier piece.
pub fn untrim_bezier_trivariate(tb: &TrimmedTrivariate, cfg: &Config) -> Result<UntrimResult> {
    if !tb.is_bezier() {
        return Err(Error::Shape("trivariate has interior knots".into()));
    }
    let start = Instant::now();
    let ctx = Ctx { cfg, tol: tol_for(tb, cfg), cache: Mutex::new(HashMap::new()) };
    let p = untrim_rec(tb, &ctx, 0, 0)?;
    Ok(finish(tb, vec![p], 1, start))
}

/// Bézier subdivision followed by per-cell untrimming.
pub fn untrim_trimmed_trivariate(tt: &TrimmedTrivariate, cfg: &Config) -> Result<UntrimResult> {
    let start = Instant::now();
    let tol = tol_for(tt, cfg);
    let cells = bezier_subdivide_with(tt, cfg, &tol)?;
    let ctx = Ctx { cfg, tol, cache: Mutex::new(HashMap::new()) };
    let parts = cells
        .par_iter()
        .enumerate()
        .map(|(i, c)| untrim_rec(c, &ctx, 0, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(tt, parts, cells.len(), start))
}

// --------------------------------------------------------- back-projection

#[derive(Clone, Debug)]
pub struct BackProjection {
    pub surface: Spline,
    /// Largest parametric distance between a back-projected sample and the fit.
    pub max_residual: f64,
}

/// Pulls a Euclidean surface back into the parametric box of `t` by
/// inverting `t` at `m x m` samples and fitting an `n x n` B-spline of the
/// given order per axis.
pub fn back_project_surface(t: &Spline, se: &Spline, m: usize, order: usize, n: usize) -> Result<BackProjection> {
    if t.dim_in() != 3 || t.dim_out() != 3 || se.dim_in() != 2 || se.dim_out() != 3 {
        return Err(Error::Shape("back-projection needs a trivariate and a surface in R^3".into()));
    }
    if order == 0 || n < order || m < n {
        return Err(Error::Config(format!("cannot fit {n} controls of order {order} to {m} samples")));
    }
    let (tlo, thi) = (t.domain_lo(), t.domain_hi());
    let (ctl, cth) = t.ctrl_bbox();
    let scale = (0..3).map(|a| (cth[a] - ctl[a]).abs()).fold(0.0f64, f64::max).max(1.0);
    let (ul, uh) = se.domain(0);
    let (vl, vh) = se.domain(1);
    let us: Vec<f64> = (0..m).map(|i| ul + (uh - ul) * i as f64 / (m - 1).max(1) as f64).collect();
    let vs: Vec<f64> = (0..m).map(|i| vl + (vh - vl) * i as f64 / (m - 1).max(1) as f64).collect();
    let mut params = Vec::with_capacity(m * m);
    for u in &us {
        for v in &vs {
            let x = se.eval_clamped(&[*u, *v]);
            let sol = closest(t, &x, 4, 4, 1e-14 * scale);
            if sol.residual > 1e-12 * scale {
                return Err(Error::BackProjection(format!(
                    "no preimage of ({:.6}, {:.6}, {:.6}), residual {:.3e}",
                    x[0], x[1], x[2], sol.residual
                )));
            }
            params.push(sol.params);
        }
    }
    // samples on a boundary face of t keep that coordinate exactly
    let mut fixed: [Option<f64>; 3] = [None; 3];
    for a in 0..3 {
        for bound in [tlo[a], thi[a]] {
            let eps = 1e-10 * (thi[a] - tlo[a]);
            if params.iter().all(|p| (p[a] - bound).abs() <= eps) {
                fixed[a] = Some(bound);
            }
        }
    }
    let ku = KnotVector::uniform(order - 1, n, ul, uh)?;
    let kv = KnotVector::uniform(order - 1, n, vl, vh)?;
    let rows = m * m;
    let cols = n * n;
    let mut a = vec![0.0; rows * cols];
    let mut rhs = vec![0.0; rows * 3];
    for (i, u) in us.iter().enumerate() {
        let su = ku.find_span(*u);
        let bu = ku.basis_funs(su, *u);
        for (j, v) in vs.iter().enumerate() {
            let sv = kv.find_span(*v);
            let bv = kv.basis_funs(sv, *v);
            let r = i * m + j;
            for (x, nu) in bu.iter().enumerate() {
                for (y, nv) in bv.iter().enumerate() {
                    let c = (su - (order - 1) + x) * n + (sv - (order - 1) + y);
                    a[r * cols + c] = nu * nv;
                }
            }
            rhs[r * 3..r * 3 + 3].copy_from_slice(&params[r]);
        }
    }
    let mut coeffs = lstsq(&a, rows, cols, &rhs, 3)?;
    for c in coeffs.chunks_mut(3) {
        for a in 0..3 {
            if let Some(v) = fixed[a] {
                c[a] = v;
            }
        }
    }
    let surface = Spline::new(vec![ku, kv], 3, coeffs)?;
    let mut max_residual: f64 = 0.0;
    for (i, u) in us.iter().enumerate() {
        for (j, v) in vs.iter().enumerate() {
            let f = surface.eval_clamped(&[*u, *v]);
            let p = &params[i * m + j];
            max_residual = max_residual.max(norm3(&[f[0] - p[0], f[1] - p[1], f[2] - p[2]]));
        }
    }
    Ok(BackProjection { surface, max_residual })
}
