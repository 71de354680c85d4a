//! Planar polygonal regions used for trimmed parametric domains.

use std::collections::HashMap;

use geo::{BooleanOps, Coord, LineString, MultiPolygon, Polygon};

pub type Pt = [f64; 2];

/// Simple polygon with holes. The outer ring is counterclockwise, holes are
/// clockwise; rings are stored without repeating the first vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub outer: Vec<Pt>,
    pub holes: Vec<Vec<Pt>>,
}

/// Union of disjoint polygons.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Region {
    pub polys: Vec<Poly>,
}

pub fn signed_area(ring: &[Pt]) -> f64 {
    let n = ring.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

pub fn ring_bbox(ring: &[Pt]) -> (Pt, Pt) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in ring {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}

pub fn rect(lo: Pt, hi: Pt) -> Vec<Pt> {
    vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]]
}

/// Winding-free even-odd test of `p` against a closed ring.
pub fn point_in_ring(p: Pt, ring: &[Pt]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn seg_point_dist(p: Pt, a: Pt, b: Pt) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0] - p[0], a[1] + t * d[1] - p[1]];
    (q[0] * q[0] + q[1] * q[1]).sqrt()
}

/// Removes repeated and collinear vertices from a closed ring.
pub fn clean_ring(ring: &[Pt], tol: f64) -> Vec<Pt> {
    let mut out: Vec<Pt> = Vec::with_capacity(ring.len());
    for p in ring {
        if out.last().is_none_or(|q| (q[0] - p[0]).abs() > tol || (q[1] - p[1]).abs() > tol) {
            out.push(*p);
        }
    }
    while out.len() > 1 {
        let (f, l) = (out[0], out[out.len() - 1]);
        if (f[0] - l[0]).abs() <= tol && (f[1] - l[1]).abs() <= tol {
            out.pop();
        } else {
            break;
        }
    }
    // drop vertices lying on the segment joining their neighbours
    let mut changed = true;
    while changed && out.len() > 3 {
        changed = false;
        let n = out.len();
        for i in 0..n {
            let a = out[(i + n - 1) % n];
            let b = out[i];
            let c = out[(i + 1) % n];
            if seg_point_dist(b, a, c) <= tol * 1e-3 {
                out.remove(i);
                changed = true;
                break;
            }
        }
    }
    out
}

impl Poly {
    pub fn area(&self) -> f64 {
        signed_area(&self.outer) + self.holes.iter().map(|h| signed_area(h)).sum::<f64>()
    }

    pub fn bbox(&self) -> (Pt, Pt) {
        ring_bbox(&self.outer)
    }

    pub fn rings(&self) -> impl Iterator<Item = &Vec<Pt>> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }

    pub fn contains(&self, p: Pt) -> bool {
        point_in_ring(p, &self.outer) && !self.holes.iter().any(|h| point_in_ring(p, h))
    }

    /// Axis-aligned rectangle `(lo, hi)` if this polygon is one.
    pub fn as_rect(&self, tol: f64) -> Option<(Pt, Pt)> {
        if !self.holes.is_empty() {
            return None;
        }
        let ring = clean_ring(&self.outer, tol);
        if ring.len() != 4 {
            return None;
        }
        let (lo, hi) = ring_bbox(&ring);
        let on_corner = |p: &Pt| {
            ((p[0] - lo[0]).abs() <= tol || (p[0] - hi[0]).abs() <= tol)
                && ((p[1] - lo[1]).abs() <= tol || (p[1] - hi[1]).abs() <= tol)
        };
        if ring.iter().all(on_corner) {
            Some((lo, hi))
        } else {
            None
        }
    }
}

impl Region {
    pub fn rect(lo: Pt, hi: Pt) -> Self {
        Region {
            polys: vec![Poly { outer: rect(lo, hi), holes: vec![] }],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.polys.iter().map(Poly::area).sum()
    }

    pub fn bbox(&self) -> (Pt, Pt) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.polys {
            let (l, h) = p.bbox();
            for a in 0..2 {
                lo[a] = lo[a].min(l[a]);
                hi[a] = hi[a].max(h[a]);
            }
        }
        (lo, hi)
    }

    pub fn contains(&self, p: Pt) -> bool {
        self.polys.iter().any(|q| q.contains(p))
    }

    pub fn rings(&self) -> impl Iterator<Item = &Vec<Pt>> {
        self.polys.iter().flat_map(|p| p.rings())
    }

    /// Builds a region from arbitrary rings classified by orientation:
    /// counterclockwise rings are outers, clockwise rings are holes of the
    /// smallest outer containing them.
    pub fn from_rings(rings: Vec<Vec<Pt>>) -> Self {
        let mut outers: Vec<Poly> = Vec::new();
        let mut holes = Vec::new();
        for r in rings {
            if r.len() < 3 {
                continue;
            }
            if signed_area(&r) > 0.0 {
                outers.push(Poly { outer: r, holes: vec![] });
            } else {
                holes.push(r);
            }
        }
        for h in holes {
            let probe = h[0];
            let host = outers
                .iter()
                .enumerate()
                .filter(|(_, o)| point_in_ring(probe, &o.outer) || ring_touches(&h, &o.outer))
                .min_by(|a, b| signed_area(&a.1.outer).partial_cmp(&signed_area(&b.1.outer)).unwrap())
                .map(|(i, _)| i);
            if let Some(i) = host {
                outers[i].holes.push(h);
            }
        }
        Region { polys: outers }
    }

    fn to_geo(&self) -> MultiPolygon<f64> {
        let ls = |r: &Vec<Pt>| {
            let mut v: Vec<Coord<f64>> = r.iter().map(|p| Coord { x: p[0], y: p[1] }).collect();
            v.push(v[0]);
            LineString::new(v)
        };
        MultiPolygon(
            self.polys
                .iter()
                .map(|p| Polygon::new(ls(&p.outer), p.holes.iter().map(ls).collect()))
                .collect(),
        )
    }

    fn from_geo(mp: &MultiPolygon<f64>, snap: &Snapper, tol: f64) -> Self {
        let conv = |ls: &LineString<f64>| -> Vec<Pt> {
            let pts: Vec<Pt> = ls.0.iter().map(|c| snap.snap([c.x, c.y])).collect();
            clean_ring(&pts, tol)
        };
        let mut polys = Vec::new();
        for p in &mp.0 {
            let mut outer = conv(p.exterior());
            if outer.len() < 3 || signed_area(&outer).abs() <= tol * tol {
                continue;
            }
            if signed_area(&outer) < 0.0 {
                outer.reverse();
            }
            let mut holes = Vec::new();
            for h in p.interiors() {
                let mut h = conv(h);
                if h.len() < 3 || signed_area(&h).abs() <= tol * tol {
                    continue;
                }
                if signed_area(&h) > 0.0 {
                    h.reverse();
                }
                holes.push(h);
            }
            polys.push(Poly { outer, holes });
        }
        Region { polys }
    }

    fn boolean(&self, other: &Region, tol: f64, op: impl Fn(&MultiPolygon<f64>, &MultiPolygon<f64>) -> MultiPolygon<f64>) -> Region {
        let mut snap = Snapper::new(tol);
        for r in self.rings().chain(other.rings()) {
            for p in r {
                snap.insert(*p);
            }
        }
        let out = op(&self.to_geo(), &other.to_geo());
        Region::from_geo(&out, &snap, tol)
    }

    /// Intersection; output vertices within `tol` of an input vertex are
    /// snapped back onto it.
    pub fn intersection(&self, other: &Region, tol: f64) -> Region {
        if self.is_empty() || other.is_empty() {
            return Region::default();
        }
        self.boolean(other, tol, |a, b| a.intersection(b))
    }

    pub fn difference(&self, other: &Region, tol: f64) -> Region {
        if self.is_empty() || other.is_empty() {
            return self.clone();
        }
        self.boolean(other, tol, |a, b| a.difference(b))
    }

    pub fn union(&self, other: &Region, tol: f64) -> Region {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        self.boolean(other, tol, |a, b| a.union(b))
    }

    /// Union of many regions at once.
    pub fn union_all(parts: &[Region], tol: f64) -> Region {
        let mut snap = Snapper::new(tol);
        let mut polys = Vec::new();
        for part in parts {
            for r in part.rings() {
                for p in r {
                    snap.insert(*p);
                }
            }
            polys.extend(part.to_geo().0);
        }
        if polys.is_empty() {
            return Region::default();
        }
        let out = geo::unary_union(polys.iter());
        Region::from_geo(&out, &snap, tol)
    }

    /// Splits the region into its polygons, each as a region.
    pub fn components(&self) -> Vec<Region> {
        self.polys.iter().map(|p| Region { polys: vec![p.clone()] }).collect()
    }
}

fn ring_touches(a: &[Pt], b: &[Pt]) -> bool {
    // a hole whose first vertex sits on the outer ring still belongs to it
    let p = a[0];
    let n = b.len();
    (0..n).any(|i| seg_point_dist(p, b[i], b[(i + 1) % n]) < 1e-12) && a.iter().any(|q| point_in_ring(*q, b))
}

/// Hash grid snapping points back onto previously inserted vertices.
pub struct Snapper {
    tol: f64,
    cells: HashMap<(i64, i64), Vec<Pt>>,
}

impl Snapper {
    pub fn new(tol: f64) -> Self {
        Snapper { tol: tol.max(f64::MIN_POSITIVE), cells: HashMap::new() }
    }

    fn key(&self, p: Pt) -> (i64, i64) {
        ((p[0] / self.tol).floor() as i64, (p[1] / self.tol).floor() as i64)
    }

    pub fn insert(&mut self, p: Pt) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(p);
    }

    pub fn snap(&self, p: Pt) -> Pt {
        let (kx, ky) = self.key(p);
        let mut best = p;
        let mut bd = self.tol;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = self.cells.get(&(kx + dx, ky + dy)) {
                    for q in v {
                        let d = (q[0] - p[0]).abs().max((q[1] - p[1]).abs());
                        if d <= bd {
                            bd = d;
                            best = *q;
                        }
                    }
                }
            }
        }
        best
    }
}

/// Horizontal-strip index for repeated point location against a region.
pub struct RegionIndex {
    y0: f64,
    dy: f64,
    strips: Vec<Vec<(Pt, Pt)>>,
}

impl RegionIndex {
    pub fn new(region: &Region) -> Self {
        let edges: Vec<(Pt, Pt)> = region
            .rings()
            .flat_map(|r| (0..r.len()).map(move |i| (r[i], r[(i + 1) % r.len()])))
            .collect();
        let (lo, hi) = region.bbox();
        let n = ((edges.len() as f64).sqrt().ceil() as usize).clamp(1, 512);
        let dy = ((hi[1] - lo[1]) / n as f64).max(1e-300);
        let mut strips = vec![Vec::new(); n];
        for e in &edges {
            let a = e.0[1].min(e.1[1]);
            let b = e.0[1].max(e.1[1]);
            let i0 = (((a - lo[1]) / dy).floor().max(0.0) as usize).min(n - 1);
            let i1 = (((b - lo[1]) / dy).floor().max(0.0) as usize).min(n - 1);
            for s in strips.iter_mut().take(i1 + 1).skip(i0) {
                s.push(*e);
            }
        }
        RegionIndex { y0: lo[1], dy, strips }
    }

    fn strip(&self, y: f64) -> Option<&Vec<(Pt, Pt)>> {
        let f = (y - self.y0) / self.dy;
        if f < 0.0 || f.is_nan() {
            return None;
        }
        let i = f.floor() as usize;
        if i >= self.strips.len() {
            if f <= self.strips.len() as f64 + 1e-9 {
                return self.strips.last();
            }
            return None;
        }
        Some(&self.strips[i])
    }

    pub fn contains(&self, p: Pt) -> bool {
        let Some(edges) = self.strip(p[1]) else {
            return false;
        };
        let mut inside = false;
        for (a, b) in edges {
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance to the boundary if it is below `reach`, else `reach`.
    pub fn boundary_dist(&self, p: Pt, reach: f64) -> f64 {
        let mut best = reach;
        let f0 = ((p[1] - reach - self.y0) / self.dy).floor().max(0.0) as usize;
        let f1 = (((p[1] + reach - self.y0) / self.dy).floor().max(0.0) as usize).min(self.strips.len() - 1);
        for s in self.strips.iter().take(f1 + 1).skip(f0) {
            for (a, b) in s {
                best = best.min(seg_point_dist(p, *a, *b));
            }
        }
        best
    }
}

/// Clips a convex polygon to the half-plane on the left of the directed
/// line `a -> b`.
fn clip_left(poly: &[Pt], a: Pt, b: Pt) -> Vec<Pt> {
    let side = |p: Pt| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (sp, sq) = (side(p), side(q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Kernel (set of points seeing the whole boundary) of a simple
/// counterclockwise ring, by successive half-plane clipping.
pub fn ring_kernel(ring: &[Pt]) -> Vec<Pt> {
    let (lo, hi) = ring_bbox(ring);
    let mut k = rect(lo, hi);
    let n = ring.len();
    for i in 0..n {
        k = clip_left(&k, ring[i], ring[(i + 1) % n]);
        if k.len() < 3 {
            return Vec::new();
        }
    }
    k
}

/// Interior kernel point of a hole-free polygon, if the kernel has a
/// nondegenerate interior: the centroid of the kernel polygon, accepted
/// when it lies at least `margin` from every edge line.
pub fn kernel_point(poly: &Poly, margin: f64) -> Option<Pt> {
    if !poly.holes.is_empty() {
        return None;
    }
    let k = ring_kernel(&poly.outer);
    if k.len() < 3 {
        return None;
    }
    let a = signed_area(&k);
    if a <= 0.0 {
        return None;
    }
    let n = k.len();
    let mut c = [0.0; 2];
    for i in 0..n {
        let p = k[i];
        let q = k[(i + 1) % n];
        let w = p[0] * q[1] - q[0] * p[1];
        c[0] += (p[0] + q[0]) * w;
        c[1] += (p[1] + q[1]) * w;
    }
    let c = [c[0] / (6.0 * a), c[1] / (6.0 * a)];
    let ring = &poly.outer;
    let m = ring.len();
    for i in 0..m {
        let (p, q) = (ring[i], ring[(i + 1) % m]);
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        if len == 0.0 {
            continue;
        }
        let s = ((q[0] - p[0]) * (c[1] - p[1]) - (q[1] - p[1]) * (c[0] - p[0])) / len;
        if s <= margin {
            return None;
        }
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_minus_hole() {
        let a = Region::rect([0.0, 0.0], [1.0, 1.0]);
        let b = Region::rect([0.3, 0.3], [0.6, 0.6]);
        let d = a.difference(&b, 1e-9);
        assert_eq!(d.polys.len(), 1);
        assert_eq!(d.polys[0].holes.len(), 1);
        assert!((d.area() - 0.91).abs() < 1e-12);
        // snapped back exactly
        assert!(d.polys[0].holes[0].iter().all(|p| p[0] == 0.3 || p[0] == 0.6));
        let idx = RegionIndex::new(&d);
        assert!(idx.contains([0.1, 0.1]));
        assert!(!idx.contains([0.45, 0.45]));
        assert!(!idx.contains([1.2, 0.45]));
        assert!((idx.boundary_dist([0.25, 0.45], 1.0) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn kernel_of_l_shape_and_star() {
        let l = Poly {
            outer: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]],
            holes: vec![],
        };
        let p = kernel_point(&l, 1e-9).unwrap();
        assert!(p[0] < 1.0 && p[1] < 1.0);
        // two squares joined by a thin corridor have no kernel
        let db = Poly {
            outer: vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [1.0, 0.45],
                [3.0, 0.45],
                [3.0, 0.0],
                [4.0, 0.0],
                [4.0, 1.0],
                [3.0, 1.0],
                [3.0, 0.55],
                [1.0, 0.55],
                [1.0, 1.0],
                [0.0, 1.0],
            ],
            holes: vec![],
        };
        assert!(kernel_point(&db, 1e-9).is_none());
    }

    #[test]
    fn rect_detection() {
        let r = Region::rect([0.0, 0.0], [1.0, 2.0]);
        assert_eq!(r.polys[0].as_rect(1e-12), Some(([0.0, 0.0], [1.0, 2.0])));
        let t = Poly { outer: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], holes: vec![] };
        assert!(t.as_rect(1e-12).is_none());
    }

    #[test]
    fn rings_classified() {
        let outer = rect([0.0, 0.0], [1.0, 1.0]);
        let mut hole = rect([0.2, 0.2], [0.4, 0.4]);
        hole.reverse();
        let r = Region::from_rings(vec![hole, outer]);
        assert_eq!(r.polys.len(), 1);
        assert_eq!(r.polys[0].holes.len(), 1);
        assert!((r.area() - 0.96).abs() < 1e-12);
    }

    #[test]
    fn union_of_cells() {
        let parts: Vec<Region> = (0..4)
            .map(|i| Region::rect([i as f64 * 0.25, 0.0], [(i + 1) as f64 * 0.25, 0.5]))
            .collect();
        let u = Region::union_all(&parts, 1e-9);
        assert_eq!(u.polys.len(), 1);
        assert_eq!(clean_ring(&u.polys[0].outer, 1e-9).len(), 4);
    }
}
