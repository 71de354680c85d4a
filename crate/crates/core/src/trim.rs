//! Trimmed surfaces, shells and trimmed trivariates.

use std::collections::HashMap;

use crate::config::Tol;
use crate::error::{Error, Result};
use crate::geom2d::{Pt, Region};
use crate::spline::KnotVector;
use crate::Spline;

pub type P3 = [f64; 3];

/// Closed chain of planar B-spline curves in a surface's parameter domain.
#[derive(Clone, Debug, PartialEq)]
pub struct TrimLoop {
    pub curves: Vec<Spline>,
    /// Counterclockwise orientation, i.e. an outer boundary.
    pub ccw: bool,
}

/// A surface restricted to the region bounded by its trim loops.
#[derive(Clone, Debug, PartialEq)]
pub struct TrimmedSurface {
    pub base: Spline,
    /// No loops means the full parameter domain is active.
    pub loops: Vec<TrimLoop>,
    /// Whether `base_u x base_v` points into the enclosed volume.
    pub inward: bool,
}

/// Closed, inward-oriented set of trimmed surfaces.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Shell {
    pub surfaces: Vec<TrimmedSurface>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    Parametric,
    Euclidean,
}

/// A trivariate together with the shell delimiting its active volume.
#[derive(Clone, Debug, PartialEq)]
pub struct TrimmedTrivariate {
    pub t: Spline,
    pub shell: Shell,
    pub space: Space,
}

pub(crate) fn dist3(a: &P3, b: &P3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub(crate) fn p3(v: &[f64]) -> P3 {
    [v[0], v[1], v[2]]
}

/// Degree-1 closed curve through `pts`.
pub fn polyline_curve(pts: &[Pt]) -> Spline {
    let n = pts.len();
    let mut knots = vec![0.0, 0.0];
    for i in 1..n {
        knots.push(i as f64 / n as f64);
    }
    knots.extend([1.0, 1.0]);
    let mut coeffs = Vec::with_capacity(2 * (n + 1));
    for p in pts.iter().chain(std::iter::once(&pts[0])) {
        coeffs.extend_from_slice(p);
    }
    Spline::new(vec![KnotVector::new(1, knots).expect("increasing knots")], 2, coeffs).expect("consistent polyline")
}

impl TrimLoop {
    /// Checks that the curves chain head to tail and close up within `tol`.
    pub fn new(curves: Vec<Spline>, tol: f64) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::InvalidShell("empty trim loop".into()));
        }
        for c in &curves {
            if c.dim_in() != 1 || c.dim_out() != 2 {
                return Err(Error::Shape("trim curves must map an interval into the plane".into()));
            }
        }
        let n = curves.len();
        for i in 0..n {
            let a = curves[i].eval_clamped(&[curves[i].domain(0).1]);
            let next = &curves[(i + 1) % n];
            let b = next.eval_clamped(&[next.domain(0).0]);
            if (a[0] - b[0]).hypot(a[1] - b[1]) > tol {
                return Err(Error::InvalidShell(format!("trim loop is not closed after curve {i}")));
            }
        }
        let mut l = TrimLoop { curves, ccw: true };
        let ring = l.flatten(None, tol);
        l.ccw = crate::geom2d::signed_area(&ring) > 0.0;
        Ok(l)
    }

    pub fn from_ring(ring: &[Pt]) -> Self {
        TrimLoop {
            curves: vec![polyline_curve(ring)],
            ccw: crate::geom2d::signed_area(ring) > 0.0,
        }
    }

    /// Polygonal approximation. Degree-1 curves contribute their control
    /// points; curved pieces are refined until the image under `base` (or the
    /// curve itself when no base is given) deviates less than `tol` from
    /// its chord.
    pub fn flatten(&self, base: Option<&Spline>, tol: f64) -> Vec<Pt> {
        let mut out: Vec<Pt> = Vec::new();
        for c in &self.curves {
            let kv = c.basis(0);
            if kv.degree() == 1 {
                for p in c.points().take(c.num_points() - 1) {
                    out.push([p[0], p[1]]);
                }
                continue;
            }
            let br = kv.breakpoints();
            for w in br.windows(2) {
                let steps = 2;
                for s in 0..steps {
                    let a = w[0] + (w[1] - w[0]) * s as f64 / steps as f64;
                    let b = w[0] + (w[1] - w[0]) * (s + 1) as f64 / steps as f64;
                    flatten_rec(c, base, a, b, tol, 0, &mut out);
                }
            }
        }
        crate::geom2d::clean_ring(&out, 0.0)
    }
}

fn image(base: Option<&Spline>, uv: Pt) -> Vec<f64> {
    match base {
        Some(b) => b.eval_clamped(&uv),
        None => uv.to_vec(),
    }
}

fn flatten_rec(c: &Spline, base: Option<&Spline>, a: f64, b: f64, tol: f64, depth: usize, out: &mut Vec<Pt>) {
    let pa = c.eval_clamped(&[a]);
    let pb = c.eval_clamped(&[b]);
    let m = 0.5 * (a + b);
    let pm = c.eval_clamped(&[m]);
    let chord = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
    let ia = image(base, [pa[0], pa[1]]);
    let ib = image(base, [pb[0], pb[1]]);
    let im = image(base, [pm[0], pm[1]]);
    let ic = image(base, chord);
    let mut err: f64 = 0.0;
    for k in 0..ia.len() {
        err = err.max((im[k] - ic[k]).abs()).max((ic[k] - 0.5 * (ia[k] + ib[k])).abs());
    }
    if err > tol && depth < 30 {
        flatten_rec(c, base, a, m, tol, depth + 1, out);
        flatten_rec(c, base, m, b, tol, depth + 1, out);
    } else {
        out.push([pa[0], pa[1]]);
    }
}

impl TrimmedSurface {
    pub fn untrimmed(base: Spline) -> Self {
        TrimmedSurface { base, loops: vec![], inward: true }
    }

    /// Surface whose active region is `region`, with degree-1 trim loops.
    pub fn from_region(base: Spline, region: &Region, inward: bool) -> Self {
        let loops = region.rings().map(|r| TrimLoop::from_ring(r)).collect();
        TrimmedSurface { base, loops, inward }
    }

    pub fn domain_rect(&self) -> (Pt, Pt) {
        let (a, b) = self.base.domain(0);
        let (c, d) = self.base.domain(1);
        ([a, c], [b, d])
    }

    /// Active parameter region as polygons.
    pub fn region(&self, tol: f64) -> Region {
        if self.loops.is_empty() {
            let (lo, hi) = self.domain_rect();
            return Region::rect(lo, hi);
        }
        Region::from_rings(self.loops.iter().map(|l| l.flatten(Some(&self.base), tol)).collect())
    }

    /// Equivalent surface with `inward == true`, obtained by swapping the
    /// parameter axes.
    pub fn oriented(&self) -> Self {
        if self.inward {
            return self.clone();
        }
        let base = self.base.swap_axes(0, 1);
        let loops = self
            .loops
            .iter()
            .map(|l| {
                let mut curves: Vec<Spline> = l
                    .curves
                    .iter()
                    .map(|c| c.map_points(2, |p| vec![p[1], p[0]]).reverse_axis(0))
                    .collect();
                curves.reverse();
                TrimLoop { curves, ccw: l.ccw }
            })
            .collect();
        TrimmedSurface { base, loops, inward: true }
    }

    /// Boundary of the active region as 3D polylines, one per ring, refined
    /// so that each straight 3D segment follows the image of its uv
    /// segment within `tol`.
    pub fn boundary_3d(&self, region: &Region, tol: f64) -> Vec<Vec<(Pt, P3)>> {
        let mut out = Vec::new();
        for ring in region.rings() {
            let n = ring.len();
            let mut pl = Vec::new();
            for i in 0..n {
                let a = ring[i];
                let b = ring[(i + 1) % n];
                densify(&self.base, a, b, tol, 0, &mut pl);
            }
            out.push(pl);
        }
        out
    }
}

fn densify(base: &Spline, a: Pt, b: Pt, tol: f64, depth: usize, out: &mut Vec<(Pt, P3)>) {
    let ia = p3(&base.eval_clamped(&a));
    let ib = p3(&base.eval_clamped(&b));
    let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let im = p3(&base.eval_clamped(&m));
    let mid = [0.5 * (ia[0] + ib[0]), 0.5 * (ia[1] + ib[1]), 0.5 * (ia[2] + ib[2])];
    if dist3(&im, &mid) > tol && depth < 20 {
        densify(base, a, m, tol, depth + 1, out);
        densify(base, m, b, tol, depth + 1, out);
    } else {
        out.push((a, ia));
    }
}

/// Report of shell defects; the shell is valid when every list is empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    /// (surface, ring, segment) of boundary segments not matched by another surface.
    pub unmatched: Vec<(usize, usize, usize)>,
    /// Surfaces whose normals do not point into the enclosed volume.
    pub orientation: Vec<usize>,
    /// Surfaces with an empty active region.
    pub empty: Vec<usize>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.unmatched.is_empty() && self.orientation.is_empty() && self.empty.is_empty()
    }

    /// Number of distinct surfaces with unmatched boundary.
    pub fn open_surfaces(&self) -> usize {
        let mut s: Vec<usize> = self.unmatched.iter().map(|u| u.0).collect();
        s.sort_unstable();
        s.dedup();
        s.len()
    }
}

/// Boundary segments of every surface of a shell with a spatial hash for
/// proximity queries.
pub(crate) struct BoundaryIndex {
    /// Per surface, per ring: 3D polyline vertices.
    pub rings: Vec<Vec<Vec<P3>>>,
    cell: f64,
    grid: HashMap<(i64, i64, i64), Vec<(u32, u32, u32)>>,
}

impl BoundaryIndex {
    pub fn new(surfaces: &[TrimmedSurface], regions: &[Region], tol: &Tol) -> Self {
        let rings: Vec<Vec<Vec<P3>>> = surfaces
            .iter()
            .zip(regions)
            .map(|(s, r)| {
                s.boundary_3d(r, tol.flatten)
                    .into_iter()
                    .map(|pl| pl.into_iter().map(|(_, p)| p).collect())
                    .collect()
            })
            .collect();
        let cell = (tol.diag / 128.0).max(4.0 * tol.matching());
        let mut idx = BoundaryIndex { rings, cell, grid: HashMap::new() };
        let mut grid: HashMap<(i64, i64, i64), Vec<(u32, u32, u32)>> = HashMap::new();
        for (si, rs) in idx.rings.iter().enumerate() {
            for (ri, ring) in rs.iter().enumerate() {
                let n = ring.len();
                for k in 0..n {
                    let a = ring[k];
                    let b = ring[(k + 1) % n];
                    let len = dist3(&a, &b);
                    let steps = ((2.0 * len / cell).ceil() as usize).max(1);
                    let mut last = None;
                    for j in 0..=steps {
                        let t = j as f64 / steps as f64;
                        let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])];
                        let key = idx.key(&p);
                        if last != Some(key) {
                            grid.entry(key).or_default().push((si as u32, ri as u32, k as u32));
                            last = Some(key);
                        }
                    }
                }
            }
        }
        for v in grid.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        idx.grid = grid;
        idx
    }

    fn key(&self, p: &P3) -> (i64, i64, i64) {
        (
            (p[0] / self.cell).floor() as i64,
            (p[1] / self.cell).floor() as i64,
            (p[2] / self.cell).floor() as i64,
        )
    }

    pub fn segment(&self, s: usize, r: usize, k: usize) -> (P3, P3) {
        let ring = &self.rings[s][r];
        (ring[k], ring[(k + 1) % ring.len()])
    }

    /// Surfaces other than `skip` having a boundary segment within `tol` of `p`.
    pub fn near(&self, p: &P3, tol: f64, skip: usize, out: &mut Vec<usize>) {
        let (kx, ky, kz) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(v) = self.grid.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &(s, r, k) in v {
                            let s = s as usize;
                            if s == skip || out.contains(&s) {
                                continue;
                            }
                            let (a, b) = self.segment(s, r as usize, k as usize);
                            if seg_dist3(p, &a, &b) <= tol {
                                out.push(s);
                            }
                        }
                    }
                }
            }
        }
    }

    /// For each surface, the segments left unmatched and the set of
    /// surfaces it touches.
    pub fn matches(&self, tol: f64) -> (Vec<(usize, usize, usize)>, Vec<Vec<usize>>) {
        let mut unmatched = Vec::new();
        let mut adj = vec![Vec::new(); self.rings.len()];
        let mut near = Vec::new();
        for (si, rs) in self.rings.iter().enumerate() {
            for (ri, ring) in rs.iter().enumerate() {
                let n = ring.len();
                for k in 0..n {
                    let a = ring[k];
                    let b = ring[(k + 1) % n];
                    if dist3(&a, &b) <= tol {
                        continue;
                    }
                    let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
                    near.clear();
                    self.near(&m, tol, si, &mut near);
                    if near.is_empty() {
                        unmatched.push((si, ri, k));
                    }
                    for s in &near {
                        if !adj[si].contains(s) {
                            adj[si].push(*s);
                        }
                    }
                }
            }
        }
        (unmatched, adj)
    }
}

pub(crate) fn seg_dist3(p: &P3, a: &P3, b: &P3) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let l2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1] + (p[2] - a[2]) * d[2]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist3(p, &[a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]])
}

impl Shell {
    pub fn new(surfaces: Vec<TrimmedSurface>) -> Self {
        Shell { surfaces }
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    /// Same shell with every surface normalized to `inward == true`.
    pub fn oriented(&self) -> Self {
        Shell { surfaces: self.surfaces.iter().map(TrimmedSurface::oriented).collect() }
    }

    /// Axis-aligned box of the active surface images, from region vertices
    /// and interior samples.
    pub fn bbox(&self) -> (P3, P3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut add = |p: &[f64]| {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        };
        for s in &self.surfaces {
            let region = s.region(1e-9 * ctrl_diag(&s.base));
            for r in region.rings() {
                for uv in r {
                    add(&s.base.eval_clamped(uv));
                }
            }
            let (l, h) = region.bbox();
            if !l[0].is_finite() {
                continue;
            }
            let n = 12;
            for i in 0..=n {
                for j in 0..=n {
                    let uv = [
                        l[0] + (h[0] - l[0]) * i as f64 / n as f64,
                        l[1] + (h[1] - l[1]) * j as f64 / n as f64,
                    ];
                    if region.contains(uv) {
                        add(&s.base.eval_clamped(&uv));
                    }
                }
            }
        }
        (lo, hi)
    }
}

pub(crate) fn ctrl_diag(m: &Spline) -> f64 {
    let (lo, hi) = m.ctrl_bbox();
    lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt().max(1e-300)
}

impl TrimmedTrivariate {
    pub fn new(t: Spline, shell: Shell, space: Space) -> Result<Self> {
        if t.dim_in() != 3 || t.dim_out() != 3 {
            return Err(Error::Shape("trivariate must map R^3 to R^3".into()));
        }
        for s in &shell.surfaces {
            if s.base.dim_in() != 2 || s.base.dim_out() != 3 {
                return Err(Error::Shape("trimming surfaces must map R^2 to R^3".into()));
            }
        }
        Ok(TrimmedTrivariate { t, shell, space })
    }

    /// Euclidean-mode model: the identity trivariate over the shell's box.
    pub fn euclidean(shell: Shell) -> Self {
        let (lo, hi) = shell.bbox();
        TrimmedTrivariate { t: Spline::identity_box(&lo, &hi), shell, space: Space::Euclidean }
    }

    /// Parametric box of `t`.
    pub fn param_box(&self) -> (P3, P3) {
        let lo = self.t.domain_lo();
        let hi = self.t.domain_hi();
        (p3(&lo), p3(&hi))
    }

    /// Whether `t` has no interior knots.
    pub fn is_bezier(&self) -> bool {
        self.t.is_bezier()
    }
}

/// Checks watertightness, orientation and non-emptiness of a shell.
pub fn validate_shell(shell: &Shell, cfg: &crate::Config) -> ValidationReport {
    use crate::geom2d::RegionIndex;
    use crate::raycast::{Location, ShellLocator};

    let (lo, hi) = shell.bbox();
    let tol = Tol::new(cfg, &lo, &hi);
    let mut report = ValidationReport::default();
    let regions: Vec<Region> = shell.surfaces.iter().map(|s| s.region(tol.flatten)).collect();
    for (i, r) in regions.iter().enumerate() {
        if r.is_empty() || r.area() <= 0.0 {
            report.empty.push(i);
        }
    }
    let index = BoundaryIndex::new(&shell.surfaces, &regions, &tol);
    let (unmatched, _) = index.matches(tol.matching());
    report.unmatched = unmatched;
    if !report.unmatched.is_empty() || shell.is_empty() {
        return report;
    }
    let locator = ShellLocator::new(shell, cfg);
    let per = 100usize.div_ceil(shell.len()).max(3);
    let step = 1e-4 * tol.diag;
    for (i, (s, r)) in shell.surfaces.iter().zip(&regions).enumerate() {
        if report.empty.contains(&i) {
            continue;
        }
        let s = s.oriented();
        let r = if shell.surfaces[i].inward { r.clone() } else { s.region(tol.flatten) };
        let idx = RegionIndex::new(&r);
        let (rlo, rhi) = r.bbox();
        let margin = 1e-3 * (rhi[0] - rlo[0]).max(rhi[1] - rlo[1]);
        let mut tried = 0;
        let mut bad = 0;
        let mut good = 0;
        // deterministic low-discrepancy samples over the region's box
        let mut k = 0usize;
        while tried < per && k < 50 * per {
            k += 1;
            let a = (k as f64 * 0.618_033_988_749_895).fract();
            let b = (k as f64 * 0.754_877_666_246_693).fract();
            let uv = [rlo[0] + a * (rhi[0] - rlo[0]), rlo[1] + b * (rhi[1] - rlo[1])];
            if !idx.contains(uv) || idx.boundary_dist(uv, margin) < margin {
                continue;
            }
            let (x, j) = s.base.eval_jacobian(&uv);
            let n = [j[2] * j[5] - j[4] * j[3], j[4] * j[1] - j[0] * j[5], j[0] * j[3] - j[2] * j[1]];
            let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            if nn < 1e-12 * tol.diag * tol.diag {
                continue;
            }
            tried += 1;
            let q = [x[0] + step * n[0] / nn, x[1] + step * n[1] / nn, x[2] + step * n[2] / nn];
            match locator.locate(&q) {
                Location::Inside => good += 1,
                Location::Outside => bad += 1,
                Location::Boundary => {}
            }
        }
        if bad > good {
            report.orientation.push(i);
        }
    }
    report
}
