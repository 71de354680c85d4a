//! Splitting trimmed trivariates along iso-planes and extraction of trimmed
//! Bézier cells.

use std::collections::HashMap;

use crate::config::{Config, Tol};
use crate::error::{Error, Result};
use crate::fixtures::axis_faces;
use crate::geom2d::{point_in_ring, signed_area, Pt, Region};
use crate::trim::{dist3, p3, BoundaryIndex, Shell, TrimmedSurface, TrimmedTrivariate, P3};
use crate::Spline;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug)]
pub struct SplitPiece {
    pub tt: TrimmedTrivariate,
    pub side: Side,
    pub component: usize,
}

#[derive(Clone, Debug, Default)]
pub struct SplitResult {
    pub pieces: Vec<SplitPiece>,
}

/// Which parameter a surface coordinate depends on, if only one.
fn single_dependency(base: &Spline, comp: usize, tol: f64) -> Option<usize> {
    let shape = base.shape();
    let c = |i: usize, j: usize| base.point(i * shape[1] + j)[comp];
    let const_in_v = (0..shape[0]).all(|i| (0..shape[1]).all(|j| (c(i, j) - c(i, 0)).abs() <= tol));
    let const_in_u = (0..shape[1]).all(|j| (0..shape[0]).all(|i| (c(i, j) - c(0, j)).abs() <= tol));
    match (const_in_u, const_in_v) {
        (false, true) => Some(0),
        (true, false) => Some(1),
        _ => None,
    }
}

fn bisect(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if (gm <= 0.0) == (ga <= 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Maximal sub-intervals of `[lo, hi]` where `g <= 0`, from dense sign
/// sampling refined by bisection.
fn nonpositive_intervals(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> Vec<(f64, f64)> {
    let xs: Vec<f64> = (0..=samples).map(|i| lo + (hi - lo) * i as f64 / samples as f64).collect();
    let s: Vec<bool> = xs.iter().map(|x| g(*x) <= 0.0).collect();
    let mut out = Vec::new();
    let mut start = if s[0] { Some(lo) } else { None };
    for i in 0..samples {
        if s[i] != s[i + 1] {
            let r = bisect(g, xs[i], xs[i + 1]);
            if s[i] {
                out.push((start.take().unwrap_or(lo), r));
            } else {
                start = Some(r);
            }
        }
    }
    if let Some(a) = start {
        out.push((a, hi));
    }
    out
}

struct Grid<'a> {
    base: &'a Spline,
    axis: usize,
    t: f64,
    lo: Pt,
    hi: Pt,
    n: [usize; 2],
    vals: Vec<f64>,
}

impl Grid<'_> {
    fn f(&self, uv: Pt) -> f64 {
        self.base.eval_clamped(&uv)[self.axis] - self.t
    }

    fn node(&self, i: usize, j: usize) -> Pt {
        [
            self.lo[0] + (self.hi[0] - self.lo[0]) * i as f64 / self.n[0] as f64,
            self.lo[1] + (self.hi[1] - self.lo[1]) * j as f64 / self.n[1] as f64,
        ]
    }

    fn val(&self, i: usize, j: usize) -> f64 {
        self.vals[i * (self.n[1] + 1) + j]
    }

    fn root(&self, a: Pt, b: Pt) -> Pt {
        let g = |s: f64| self.f([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        let s = bisect(&g, 0.0, 1.0);
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }
}

/// Region `{f <= 0}` inside `[lo, hi]` by marching squares, where
/// `f = base[axis] - t`. The grid doubles until each contour chord stays
/// within `tol` of the plane and of the surface's image of the chord.
fn marching_region(base: &Spline, axis: usize, t: f64, lo: Pt, hi: Pt, tol: f64) -> Region {
    let mut n = [16usize, 16usize];
    loop {
        let mut g = Grid { base, axis, t, lo, hi, n, vals: Vec::new() };
        g.vals = (0..=n[0])
            .flat_map(|i| (0..=n[1]).map(move |j| (i, j)))
            .map(|(i, j)| g.f(g.node(i, j)))
            .collect();
        let mut roots: HashMap<(usize, usize, usize, usize), Pt> = HashMap::new();
        let mut parts: Vec<Region> = Vec::new();
        let mut worst: f64 = 0.0;
        for j in 0..n[1] {
            let mut run: Option<usize> = None;
            for i in 0..=n[0] {
                let full = i < n[0]
                    && g.val(i, j) <= 0.0
                    && g.val(i + 1, j) <= 0.0
                    && g.val(i + 1, j + 1) <= 0.0
                    && g.val(i, j + 1) <= 0.0;
                if full {
                    run.get_or_insert(i);
                    continue;
                }
                if let Some(s) = run.take() {
                    parts.push(Region::rect(g.node(s, j), g.node(i, j + 1)));
                }
                if i == n[0] {
                    break;
                }
                let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                let ins: Vec<bool> = corners.iter().map(|c| g.val(c.0, c.1) <= 0.0).collect();
                if !ins.iter().any(|x| *x) {
                    continue;
                }
                let mut edge_root = |k: usize| -> Pt {
                    let (a, b) = (corners[k], corners[(k + 1) % 4]);
                    let key = if a < b { (a.0, a.1, b.0, b.1) } else { (b.0, b.1, a.0, a.1) };
                    *roots.entry(key).or_insert_with(|| g.root(g.node(a.0, a.1), g.node(b.0, b.1)))
                };
                let saddle = ins[0] == ins[2] && ins[1] == ins[3] && ins[0] != ins[1];
                let mut polys: Vec<Vec<Pt>> = Vec::new();
                let mut chords: Vec<(Pt, Pt)> = Vec::new();
                if saddle {
                    let c = g.node(i, j);
                    let d = g.node(i + 1, j + 1);
                    let centre_in = g.f([0.5 * (c[0] + d[0]), 0.5 * (c[1] + d[1])]) <= 0.0;
                    if !centre_in {
                        for k in 0..4 {
                            if ins[k] {
                                let a = edge_root(k);
                                let b = edge_root((k + 3) % 4);
                                polys.push(vec![g.node(corners[k].0, corners[k].1), a, b]);
                                chords.push((a, b));
                            }
                        }
                    }
                }
                if polys.is_empty() {
                    let mut poly = Vec::new();
                    let mut last_root: Option<Pt> = None;
                    let mut first_root: Option<Pt> = None;
                    for k in 0..4 {
                        if ins[k] {
                            poly.push(g.node(corners[k].0, corners[k].1));
                        }
                        if ins[k] != ins[(k + 1) % 4] {
                            let r = edge_root(k);
                            poly.push(r);
                            if ins[k] {
                                // leaving the region: the chord starts here
                                last_root = Some(r);
                            } else if let Some(a) = last_root.take() {
                                chords.push((a, r));
                            } else {
                                first_root = Some(r);
                            }
                        }
                    }
                    if let (Some(a), Some(b)) = (last_root, first_root) {
                        chords.push((a, b));
                    }
                    polys.push(poly);
                }
                for (a, b) in chords {
                    let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                    let pm = base.eval_clamped(&m);
                    let pa = base.eval_clamped(&a);
                    let pb = base.eval_clamped(&b);
                    let mut e = (pm[axis] - t).abs();
                    for k in 0..3 {
                        e = e.max((pm[k] - 0.5 * (pa[k] + pb[k])).abs());
                    }
                    worst = worst.max(e);
                }
                for p in polys {
                    let mut p = crate::geom2d::clean_ring(&p, 0.0);
                    if p.len() >= 3 && signed_area(&p).abs() > 0.0 {
                        if signed_area(&p) < 0.0 {
                            p.reverse();
                        }
                        parts.push(Region::from_rings(vec![p]));
                    }
                }
            }
        }
        if worst <= tol || n[0].max(n[1]) >= 4096 {
            let snap = 1e-12 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
            return Region::union_all(&parts, snap);
        }
        n = [n[0] * 2, n[1] * 2];
    }
}

/// `{base[axis] <= t}` restricted to the rectangle `[lo, hi]`.
fn halfspace_region(base: &Spline, axis: usize, t: f64, lo: Pt, hi: Pt, tol: &Tol) -> Region {
    let coeff_tol = 1e-14 * tol.span;
    if let Some(dep) = single_dependency(base, axis, coeff_tol) {
        let other = 1 - dep;
        let mut uv = [0.0; 2];
        uv[other] = lo[other];
        let g = |s: f64| {
            let mut q = uv;
            q[dep] = s;
            base.eval_clamped(&q)[axis] - t
        };
        let samples = 64 * base.basis(dep).breakpoints().len() * (base.degrees()[dep] + 1);
        let parts: Vec<Region> = nonpositive_intervals(&g, lo[dep], hi[dep], samples)
            .into_iter()
            .filter(|(a, b)| b > a)
            .map(|(a, b)| {
                let mut l = lo;
                let mut h = hi;
                l[dep] = a;
                h[dep] = b;
                Region::rect(l, h)
            })
            .collect();
        return Region { polys: parts.into_iter().flat_map(|r| r.polys).collect() };
    }
    marching_region(base, axis, t, lo, hi, 0.25 * tol.contour)
}

fn piece_surface(src: &TrimmedSurface, region: &Region, tol: &Tol) -> TrimmedSurface {
    let (dlo, dhi) = src.domain_rect();
    let eps = 1e-12 * (dhi[0] - dlo[0]).max(dhi[1] - dlo[1]);
    if let Some((lo, hi)) = region.polys[0].as_rect(eps) {
        let mut b = src.base.clone();
        let full = [(lo[0] - dlo[0]).abs() <= eps && (hi[0] - dhi[0]).abs() <= eps, (lo[1] - dlo[1]).abs() <= eps && (hi[1] - dhi[1]).abs() <= eps];
        let mut ok = true;
        for a in 0..2 {
            if !full[a] {
                match b.restrict(a, lo[a], hi[a]) {
                    Ok(r) => b = r,
                    Err(_) => ok = false,
                }
            }
        }
        if ok {
            return TrimmedSurface { base: b, loops: vec![], inward: true };
        }
    }
    let _ = tol;
    TrimmedSurface::from_region(src.base.clone(), region, true)
}

fn densify_plane(base: &Spline, a: Pt, b: Pt, tol: f64, depth: usize, out: &mut Vec<P3>) {
    let ia = p3(&base.eval_clamped(&a));
    let ib = p3(&base.eval_clamped(&b));
    let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let im = p3(&base.eval_clamped(&m));
    let mid = [0.5 * (ia[0] + ib[0]), 0.5 * (ia[1] + ib[1]), 0.5 * (ia[2] + ib[2])];
    if dist3(&im, &mid) > tol && depth < 24 {
        densify_plane(base, a, m, tol, depth + 1, out);
        densify_plane(base, m, b, tol, depth + 1, out);
    } else {
        out.push(ia);
    }
}

/// Chains undirected polylines into closed rings by matching endpoints.
fn chain_loops(segs: Vec<Vec<Pt>>, tol: f64) -> Result<Vec<Vec<Pt>>> {
    let mut nodes: Vec<Pt> = Vec::new();
    let node_of = |p: Pt, nodes: &mut Vec<Pt>| -> usize {
        for (i, q) in nodes.iter().enumerate() {
            if (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol {
                return i;
            }
        }
        nodes.push(p);
        nodes.len() - 1
    };
    let mut ends = Vec::with_capacity(segs.len());
    for s in &segs {
        let a = node_of(s[0], &mut nodes);
        let b = node_of(*s.last().expect("nonempty"), &mut nodes);
        ends.push((a, b));
    }
    let mut at: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (k, (a, b)) in ends.iter().enumerate() {
        at[*a].push(k);
        if a != b {
            at[*b].push(k);
        }
    }
    if at.iter().any(|v| v.len() % 2 == 1) {
        return Err(Error::DegenerateSplit {
            t: f64::NAN,
            axis: 0,
            reason: "open section curve".into(),
        });
    }
    let mut used = vec![false; segs.len()];
    let mut rings = Vec::new();
    for start in 0..segs.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (first, mut cur) = ends[start];
        let mut ring: Vec<Pt> = segs[start][..segs[start].len() - 1].to_vec();
        let mut guard = 0;
        while cur != first {
            guard += 1;
            if guard > segs.len() + 1 {
                break;
            }
            let Some(&k) = at[cur].iter().find(|k| !used[**k]) else {
                break;
            };
            used[k] = true;
            let s = &segs[k];
            if ends[k].0 == cur {
                ring.extend_from_slice(&s[..s.len() - 1]);
                cur = ends[k].1;
            } else {
                ring.extend(s[1..].iter().rev());
                cur = ends[k].0;
            }
        }
        if ring.len() >= 3 {
            rings.push(ring);
        }
    }
    Ok(rings)
}

/// Orients rings by nesting depth: even depth outer (counterclockwise),
/// odd depth hole (clockwise).
fn nest_rings(mut rings: Vec<Vec<Pt>>) -> Region {
    let depth: Vec<usize> = (0..rings.len())
        .map(|i| {
            let p = rings[i][0];
            (0..rings.len()).filter(|j| *j != i && point_in_ring(p, &rings[*j])).count()
        })
        .collect();
    for (r, d) in rings.iter_mut().zip(&depth) {
        let ccw = signed_area(r) > 0.0;
        if ccw != (d % 2 == 0) {
            r.reverse();
        }
    }
    Region::from_rings(rings)
}

/// Splits every surface of `shell` by the plane `{x_axis = t}` and adds
/// the planar caps closing both sides.
pub fn split_shell_by_isoplane(
    shell: &Shell,
    t: f64,
    axis: usize,
    tol: &Tol,
) -> Result<(Vec<TrimmedSurface>, Vec<TrimmedSurface>)> {
    let degenerate = |reason: &str| Error::DegenerateSplit { t, axis, reason: reason.into() };
    let mut left = Vec::new();
    let mut right = Vec::new();
    let on = 0.5 * tol.contour;
    let mut section: Vec<Vec<Pt>> = Vec::new();
    let a1 = (axis + 1) % 3;
    let a2 = (axis + 2) % 3;
    for src in &shell.surfaces {
        let s = src.oriented();
        let coords: Vec<f64> = s.base.points().map(|p| p[axis] - t).collect();
        let cmin = coords.iter().copied().fold(f64::INFINITY, f64::min);
        let cmax = coords.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if cmax.abs() <= on && cmin.abs() <= on {
            return Err(degenerate("surface lies in the splitting plane"));
        }
        let region = s.region(tol.flatten);
        let mut lefts = Vec::new();
        if cmax <= 0.0 {
            left.push(s.clone());
            lefts.push((left.len() - 1, region));
        } else if cmin >= 0.0 {
            right.push(s.clone());
        } else {
            let (lo, hi) = region.bbox();
            let ph = halfspace_region(&s.base, axis, t, lo, hi, tol);
            let lr = region.intersection(&ph, 1e-8 * tol.span);
            let rr = region.difference(&ph, 1e-8 * tol.span);
            for comp in lr.components() {
                left.push(piece_surface(&s, &comp, tol));
                lefts.push((left.len() - 1, comp));
            }
            for comp in rr.components() {
                right.push(piece_surface(&s, &comp, tol));
            }
        }
        // section curves: boundary edges of left pieces lying in the plane
        for (_, reg) in lefts {
            for ring in reg.rings() {
                let n = ring.len();
                let fval = |uv: Pt| s.base.eval_clamped(&uv)[axis] - t;
                let onp: Vec<bool> = ring.iter().map(|uv| fval(*uv).abs() <= on).collect();
                let mut k = 0;
                // start after a vertex that is off the plane, if any
                let start = (0..n).find(|i| !onp[*i]).map(|i| (i + 1) % n);
                let Some(start) = start else {
                    return Err(degenerate("trim ring lies in the splitting plane"));
                };
                let mut cur: Vec<P3> = Vec::new();
                while k < n {
                    let i = (start + k) % n;
                    let j = (i + 1) % n;
                    let a = ring[i];
                    let b = ring[j];
                    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                    if onp[i] && onp[j] && fval(mid).abs() <= on {
                        densify_plane(&s.base, a, b, tol.flatten, 0, &mut cur);
                    } else if !cur.is_empty() {
                        cur.push(p3(&s.base.eval_clamped(&a)));
                        section.push(cur.iter().map(|p| [p[a1], p[a2]]).collect());
                        cur.clear();
                    }
                    k += 1;
                }
                if !cur.is_empty() {
                    cur.push(p3(&s.base.eval_clamped(&ring[start])));
                    section.push(cur.iter().map(|p| [p[a1], p[a2]]).collect());
                }
            }
        }
    }
    if !section.is_empty() {
        let rings = chain_loops(section, tol.matching()).map_err(|_| degenerate("open section curve"))?;
        let caps = nest_rings(rings);
        left.extend(axis_faces(axis, t, false, &caps));
        right.extend(axis_faces(axis, t, true, &caps));
    }
    Ok((left, right))
}

/// Groups surfaces into closed connected shells.
pub fn group_connected_components(surfaces: Vec<TrimmedSurface>, tol: &Tol) -> Result<Vec<Shell>> {
    if surfaces.is_empty() {
        return Ok(vec![]);
    }
    let regions: Vec<Region> = surfaces.iter().map(|s| s.region(tol.flatten)).collect();
    let index = BoundaryIndex::new(&surfaces, &regions, tol);
    let (unmatched, adj) = index.matches(tol.matching());
    if !unmatched.is_empty() {
        return Err(Error::OpenShell(unmatched.len()));
    }
    let n = surfaces.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (i, nb) in adj.iter().enumerate() {
        for j in nb {
            let (a, b) = (find(&mut parent, i), find(&mut parent, *j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<TrimmedSurface>)> = Vec::new();
    for (i, s) in surfaces.into_iter().enumerate() {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(s),
            None => groups.push((r, vec![s])),
        }
    }
    Ok(groups.into_iter().map(|(_, v)| Shell::new(v)).collect())
}

fn shell_extent(shell: &Shell) -> f64 {
    let (lo, hi) = shell.bbox();
    (0..3).map(|a| hi[a] - lo[a]).fold(f64::INFINITY, f64::min)
}

fn split_once(tt: &TrimmedTrivariate, t: f64, axis: usize, tol: &Tol) -> Result<SplitResult> {
    let (tl, tr) = tt.t.subdivide(axis, t)?;
    let (ls, rs) = split_shell_by_isoplane(&tt.shell, t, axis, tol)?;
    let mut pieces = Vec::new();
    for (side, surfaces, tpiece) in [(Side::Left, ls, tl), (Side::Right, rs, tr)] {
        let comps = group_connected_components(surfaces, tol)?;
        for shell in comps {
            // numerically empty components are dropped
            if shell_extent(&shell) < 1e-9 * tol.span {
                continue;
            }
            let component = pieces.iter().filter(|p: &&SplitPiece| p.side == side).count();
            pieces.push(SplitPiece {
                tt: TrimmedTrivariate { t: tpiece.clone(), shell, space: tt.space },
                side,
                component,
            });
        }
    }
    Ok(SplitResult { pieces })
}

/// Subdivides a trimmed trivariate at `t` along `axis`, retrying at
/// perturbed parameters when the plane meets the shell degenerately.
pub fn trim_trivar_subdiv_with(tt: &TrimmedTrivariate, t: f64, axis: usize, cfg: &Config, tol: &Tol) -> Result<SplitResult> {
    let (lo, hi) = tt.t.domain(axis);
    let span = hi - lo;
    let mut last = None;
    for k in 0..=cfg.perturb_retries {
        let dt = match k {
            0 => 0.0,
            _ => {
                let m = k.div_ceil(2) as f64 * cfg.perturb_rel * span;
                if k % 2 == 1 {
                    m
                } else {
                    -m
                }
            }
        };
        match split_once(tt, t + dt, axis, tol) {
            Err(e @ Error::DegenerateSplit { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Tolerances for a trimmed trivariate's parametric box.
pub fn tol_for(tt: &TrimmedTrivariate, cfg: &Config) -> Tol {
    let (lo, hi) = tt.param_box();
    Tol::new(cfg, &lo, &hi)
}

pub fn trim_trivar_subdiv(tt: &TrimmedTrivariate, t: f64, axis: usize, cfg: &Config) -> Result<SplitResult> {
    trim_trivar_subdiv_with(tt, t, axis, cfg, &tol_for(tt, cfg))
}

/// Splits at interior knots until every cell's trivariate is Bézier.
pub fn bezier_subdivide_with(tt: &TrimmedTrivariate, cfg: &Config, tol: &Tol) -> Result<Vec<TrimmedTrivariate>> {
    for axis in 0..3 {
        let knots = tt.t.basis(axis).interior_knots();
        if knots.is_empty() {
            continue;
        }
        let t = knots[knots.len() / 2].0;
        let split = trim_trivar_subdiv_with(tt, t, axis, cfg, tol)?;
        let parts: Vec<Result<Vec<TrimmedTrivariate>>> = {
            use rayon::prelude::*;
            split.pieces.par_iter().map(|p| bezier_subdivide_with(&p.tt, cfg, tol)).collect()
        };
        let mut out = Vec::new();
        for p in parts {
            out.extend(p?);
        }
        return Ok(out);
    }
    Ok(vec![tt.clone()])
}

pub fn bezier_subdivide(tt: &TrimmedTrivariate, cfg: &Config) -> Result<Vec<TrimmedTrivariate>> {
    bezier_subdivide_with(tt, cfg, &tol_for(tt, cfg))
}
