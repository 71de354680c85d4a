//! Point classification against a shell by ray parity.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Config, Tol};
use crate::geom2d::{Pt, RegionIndex};
use crate::linalg::lu_solve;
use crate::trim::{p3, Shell, P3};
use crate::Spline;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Inside,
    Outside,
    Boundary,
}

/// Crossings flatter than this (cosine to the normal) may hide a second
/// nearby root and make the ray ambiguous.
const GRAZING: f64 = 0.1;

/// Crossings this close to a trim or domain boundary, relative to the
/// parameter extent, make the ray ambiguous.
const EDGE_BAND: f64 = 1e-3;

struct Leaf {
    lo: P3,
    hi: P3,
    uv_lo: Pt,
    uv_hi: Pt,
    corners: [P3; 4],
}

struct SurfaceHits {
    base: Spline,
    index: RegionIndex,
    uv_tol: f64,
    uv_band: f64,
    leaves: Vec<Leaf>,
}

/// Precomputed acceleration data for repeated `point_in_shell` queries.
pub struct ShellLocator {
    surfaces: Vec<SurfaceHits>,
    dirs: Vec<P3>,
    tol: Tol,
}

enum Cast {
    Parity(bool),
    Boundary,
    Ambiguous,
}

fn leaves_of(piece: &Spline, flat: f64, depth: usize, out: &mut Vec<Leaf>, keep: &dyn Fn(Pt, Pt) -> bool) {
    let (u0, u1) = piece.domain(0);
    let (v0, v1) = piece.domain(1);
    if !keep([u0, v0], [u1, v1]) {
        return;
    }
    let shape = piece.shape();
    let (nu, nv) = (shape[0], shape[1]);
    let c00 = p3(piece.point(0));
    let c01 = p3(piece.point(nv - 1));
    let c10 = p3(piece.point((nu - 1) * nv));
    let c11 = p3(piece.point(nu * nv - 1));
    let mut dev: f64 = 0.0;
    for i in 0..nu {
        for j in 0..nv {
            let s = if nu > 1 { i as f64 / (nu - 1) as f64 } else { 0.5 };
            let t = if nv > 1 { j as f64 / (nv - 1) as f64 } else { 0.5 };
            let p = piece.point(i * nv + j);
            for a in 0..3 {
                let b = (1.0 - s) * ((1.0 - t) * c00[a] + t * c01[a]) + s * ((1.0 - t) * c10[a] + t * c11[a]);
                dev = dev.max((p[a] - b).abs());
            }
        }
    }
    if dev > flat && depth < 8 {
        let um = 0.5 * (u0 + u1);
        let vm = 0.5 * (v0 + v1);
        let (l, r) = piece.subdivide(0, um).expect("interior split");
        for h in [l, r] {
            let (a, b) = h.subdivide(1, vm).expect("interior split");
            leaves_of(&a, flat, depth + 1, out, keep);
            leaves_of(&b, flat, depth + 1, out, keep);
        }
        return;
    }
    let (lo, hi) = piece.ctrl_bbox();
    out.push(Leaf {
        lo: p3(&lo),
        hi: p3(&hi),
        uv_lo: [u0, v0],
        uv_hi: [u1, v1],
        corners: [c00, c10, c11, c01],
    });
}

fn ray_box(o: &P3, d: &P3, lo: &P3, hi: &P3, pad: f64) -> bool {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        let (l, h) = (lo[a] - pad, hi[a] + pad);
        if d[a].abs() < 1e-300 {
            if o[a] < l || o[a] > h {
                return false;
            }
            continue;
        }
        let (mut ta, mut tb) = ((l - o[a]) / d[a], (h - o[a]) / d[a]);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
    }
    t1 >= t0.max(-pad)
}

fn sub(a: &P3, b: &P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &P3, b: &P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &P3, b: &P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Möller-Trumbore; returns barycentrics (s, t) on edges (b-a, c-a).
fn ray_tri(o: &P3, d: &P3, a: &P3, b: &P3, c: &P3) -> Option<(f64, f64, f64)> {
    let e1 = sub(b, a);
    let e2 = sub(c, a);
    let p = cross(d, &e2);
    let det = dot(&e1, &p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = sub(o, a);
    let u = dot(&s, &p) * inv;
    let q = cross(&s, &e1);
    let v = dot(d, &q) * inv;
    let t = dot(&e2, &q) * inv;
    let slack = 0.25;
    if u < -slack || v < -slack || u + v > 1.0 + slack {
        return None;
    }
    Some((u, v, t))
}

impl ShellLocator {
    pub fn new(shell: &Shell, cfg: &Config) -> Self {
        let (lo, hi) = shell.bbox();
        let tol = Tol::new(cfg, &lo, &hi);
        let surfaces = shell
            .surfaces
            .iter()
            .map(|s| {
                let region = s.region(tol.flatten);
                let (rlo, rhi) = region.bbox();
                let mut leaves = Vec::new();
                let keep = |a: Pt, b: Pt| b[0] >= rlo[0] && a[0] <= rhi[0] && b[1] >= rlo[1] && a[1] <= rhi[1];
                for piece in s.base.bezier_extract().pieces {
                    leaves_of(&piece, 1e-3 * tol.diag, 0, &mut leaves, &keep);
                }
                let (dlo, dhi) = s.domain_rect();
                let extent = (dhi[0] - dlo[0]).max(dhi[1] - dlo[1]);
                let uv_tol = 1e-9 * extent;
                let uv_band = EDGE_BAND * extent;
                SurfaceHits { base: s.base.clone(), index: RegionIndex::new(&region), uv_tol, uv_band, leaves }
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005e_ed0f_7a75);
        let dirs = (0..16)
            .map(|_| loop {
                let d: P3 = [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ];
                let n = dot(&d, &d).sqrt();
                if n > 0.2 && n <= 1.0 {
                    break [d[0] / n, d[1] / n, d[2] / n];
                }
            })
            .collect();
        ShellLocator { surfaces, dirs, tol }
    }

    pub fn tol(&self) -> &Tol {
        &self.tol
    }

    /// Classifies `p` by the parity of ray crossings; retries along other
    /// directions when a crossing is tangential or grazes a trim boundary.
    pub fn locate(&self, p: &P3) -> Location {
        for d in &self.dirs {
            match self.cast(p, d) {
                Cast::Boundary => return Location::Boundary,
                Cast::Parity(inside) => {
                    return if inside { Location::Inside } else { Location::Outside };
                }
                Cast::Ambiguous => {}
            }
        }
        // every direction was ambiguous: the point sits on a tangential feature
        Location::Boundary
    }

    fn cast(&self, o: &P3, d: &P3) -> Cast {
        let mut count = 0usize;
        let mut hits: Vec<(usize, P3)> = Vec::new();
        let pad = 1e-9 * self.tol.diag;
        for (si, s) in self.surfaces.iter().enumerate() {
            for leaf in &s.leaves {
                if !ray_box(o, d, &leaf.lo, &leaf.hi, pad) {
                    continue;
                }
                let roots = self.leaf_roots(s, leaf, o, d);
                for r in roots {
                    match r {
                        None => return Cast::Ambiguous,
                        Some((uv, t, x, cosang)) => {
                            if t.abs() <= self.tol.geo {
                                if s.index.contains(uv) || s.index.boundary_dist(uv, s.uv_tol) < s.uv_tol {
                                    return Cast::Boundary;
                                }
                                continue;
                            }
                            if t < 0.0 {
                                continue;
                            }
                            if hits.iter().any(|(hs, hx)| *hs == si && crate::trim::dist3(hx, &x) < 1e3 * pad) {
                                continue;
                            }
                            if s.index.boundary_dist(uv, s.uv_band) < s.uv_band {
                                return Cast::Ambiguous;
                            }
                            if cosang < GRAZING {
                                return Cast::Ambiguous;
                            }
                            hits.push((si, x));
                            if s.index.contains(uv) {
                                count += 1;
                            }
                        }
                    }
                }
            }
        }
        Cast::Parity(count % 2 == 1)
    }

    /// Newton solve of `S(u,v) = o + t d` seeded from the leaf's corner
    /// quad. `None` signals a non-converging (tangential) configuration.
    #[allow(clippy::type_complexity)]
    fn leaf_roots(&self, s: &SurfaceHits, leaf: &Leaf, o: &P3, d: &P3) -> Vec<Option<(Pt, f64, P3, f64)>> {
        let c = &leaf.corners;
        let mut seeds: Vec<(f64, f64, f64)> = Vec::new();
        if let Some((a, b, t)) = ray_tri(o, d, &c[0], &c[1], &c[2]) {
            // triangle (00,10,11): u = a + b, v = b
            seeds.push((a + b, b, t));
        }
        if let Some((a, b, t)) = ray_tri(o, d, &c[0], &c[2], &c[3]) {
            seeds.push((a, a + b, t));
        }
        if seeds.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        let (ul, uh) = (leaf.uv_lo, leaf.uv_hi);
        let du = uh[0] - ul[0];
        let dv = uh[1] - ul[1];
        for (su, sv, st) in seeds {
            let mut u = ul[0] + su.clamp(0.0, 1.0) * du;
            let mut v = ul[1] + sv.clamp(0.0, 1.0) * dv;
            let mut t = st;
            let mut converged = false;
            let mut x = [0.0; 3];
            let mut n = [0.0; 3];
            for _ in 0..30 {
                let (val, jac) = s.base.eval_jacobian(&[u, v]);
                x = p3(&val);
                let su_ = [jac[0], jac[2], jac[4]];
                let sv_ = [jac[1], jac[3], jac[5]];
                n = cross(&su_, &sv_);
                let r = [val[0] - o[0] - t * d[0], val[1] - o[1] - t * d[1], val[2] - o[2] - t * d[2]];
                let mut a = vec![jac[0], jac[1], -d[0], jac[2], jac[3], -d[1], jac[4], jac[5], -d[2]];
                let mut b = vec![-r[0], -r[1], -r[2]];
                if lu_solve(&mut a, 3, &mut b, 1).is_err() {
                    break;
                }
                u += b[0];
                v += b[1];
                t += b[2];
                let rn = dot(&r, &r).sqrt();
                if rn < 1e-13 * self.tol.diag && (b[0].abs() + b[1].abs()) < 1e-12 * (du + dv) {
                    converged = true;
                    break;
                }
                // leave early if Newton runs far off the leaf
                if u < ul[0] - du || u > uh[0] + du || v < ul[1] - dv || v > uh[1] + dv {
                    break;
                }
            }
            if !converged {
                // seeds near the leaf that fail to converge indicate grazing rays
                if su > -0.01 && su < 1.01 && sv > -0.01 && sv < 1.01 {
                    out.push(None);
                }
                continue;
            }
            // roots that slid into a neighbouring leaf still count once
            let (bu0, bu1) = s.base.domain(0);
            let (bv0, bv1) = s.base.domain(1);
            let eps_u = 1e-12 * (bu1 - bu0);
            let eps_v = 1e-12 * (bv1 - bv0);
            if u < bu0 - eps_u || u > bu1 + eps_u || v < bv0 - eps_v || v > bv1 + eps_v {
                continue;
            }
            let nn = dot(&n, &n).sqrt();
            let cosang = if nn > 0.0 { dot(&n, d).abs() / nn } else { 0.0 };
            out.push(Some(([u, v], t, x, cosang)));
        }
        out
    }
}

/// One-shot classification; builds a locator each call.
pub fn point_in_shell(shell: &Shell, p: &P3, cfg: &Config) -> Location {
    ShellLocator::new(shell, cfg).locate(p)
}
