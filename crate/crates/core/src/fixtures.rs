//! Test and demonstration models.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom2d::{Poly, Pt, Region};
use crate::spline::KnotVector;
use crate::trim::{Shell, Space, TrimLoop, TrimmedSurface, TrimmedTrivariate, P3};
use crate::Spline;

/// Planar patch on `{x_axis = value}` over `[lo, hi]` in its own (u, v),
/// with normal `+axis` when `positive`, else `-axis`. For the positive case
/// u and v follow the cyclic successors of `axis`; otherwise they are swapped.
pub fn axis_plane(axis: usize, value: f64, positive: bool, lo: Pt, hi: Pt) -> Spline {
    let a1 = (axis + 1) % 3;
    let a2 = (axis + 2) % 3;
    let (au, av) = if positive { (a1, a2) } else { (a2, a1) };
    let mut coeffs = Vec::with_capacity(12);
    for u in [lo[0], hi[0]] {
        for v in [lo[1], hi[1]] {
            let mut p = [0.0; 3];
            p[axis] = value;
            p[au] = u;
            p[av] = v;
            coeffs.extend(p);
        }
    }
    let bases = vec![KnotVector::bezier(1, lo[0], hi[0]), KnotVector::bezier(1, lo[1], hi[1])];
    Spline::new(bases, 3, coeffs).expect("bilinear plane")
}

/// In-plane coordinates of a point on an axis plane, in the patch's (u, v).
pub fn plane_uv(axis: usize, positive: bool, p: &P3) -> Pt {
    let a1 = (axis + 1) % 3;
    let a2 = (axis + 2) % 3;
    if positive {
        [p[a1], p[a2]]
    } else {
        [p[a2], p[a1]]
    }
}

/// Trimmed planar face on an axis plane from a region given in (a1, a2)
/// coordinates; one surface per polygon.
pub fn axis_faces(axis: usize, value: f64, positive: bool, region: &Region) -> Vec<TrimmedSurface> {
    let mut out = Vec::new();
    for poly in &region.polys {
        let swap = |r: &Vec<Pt>| -> Vec<Pt> {
            if positive {
                r.clone()
            } else {
                let mut s: Vec<Pt> = r.iter().map(|p| [p[1], p[0]]).collect();
                s.reverse();
                s
            }
        };
        let p = Poly { outer: swap(&poly.outer), holes: poly.holes.iter().map(swap).collect() };
        let (lo, hi) = p.bbox();
        let base = axis_plane(axis, value, positive, lo, hi);
        let reg = Region { polys: vec![p.clone()] };
        if p.as_rect(0.0).is_some() {
            out.push(TrimmedSurface::untrimmed(base));
        } else {
            out.push(TrimmedSurface::from_region(base, &reg, true));
        }
    }
    out
}

/// Shell of a union of grid cells. `occ(i, j, k)` tells whether the cell
/// `[xs[i], xs[i+1]] x [ys[j], ys[j+1]] x [zs[k], zs[k+1]]` is solid.
pub fn voxel_shell(breaks: [&[f64]; 3], occ: impl Fn(usize, usize, usize) -> bool) -> Shell {
    let n = [breaks[0].len() - 1, breaks[1].len() - 1, breaks[2].len() - 1];
    let filled = |idx: [isize; 3]| -> bool {
        (0..3).all(|a| idx[a] >= 0 && (idx[a] as usize) < n[a]) && occ(idx[0] as usize, idx[1] as usize, idx[2] as usize)
    };
    let mut surfaces = Vec::new();
    for axis in 0..3 {
        let a1 = (axis + 1) % 3;
        let a2 = (axis + 2) % 3;
        for p in 0..=n[axis] {
            for positive in [true, false] {
                let mut cells = Vec::new();
                for i in 0..n[a1] {
                    for j in 0..n[a2] {
                        let mut lo = [0isize; 3];
                        lo[axis] = p as isize - 1;
                        lo[a1] = i as isize;
                        lo[a2] = j as isize;
                        let mut hi = lo;
                        hi[axis] = p as isize;
                        // positive normal: solid on the high side
                        let (solid, empty) = if positive { (hi, lo) } else { (lo, hi) };
                        if filled(solid) && !filled(empty) {
                            cells.push(Region::rect(
                                [breaks[a1][i], breaks[a2][j]],
                                [breaks[a1][i + 1], breaks[a2][j + 1]],
                            ));
                        }
                    }
                }
                if cells.is_empty() {
                    continue;
                }
                let region = Region::union_all(&cells, 1e-12);
                surfaces.extend(axis_faces(axis, breaks[axis][p], positive, &region));
            }
        }
    }
    Shell::new(surfaces)
}

/// Identity trivariate over `[lo, hi]` with the given interior knots per
/// axis (degree 1).
pub fn identity_trivariate(lo: P3, hi: P3, knots: [&[f64]; 3]) -> Spline {
    let bases: Vec<KnotVector<f64>> = (0..3)
        .map(|a| {
            let mut k = vec![lo[a], lo[a]];
            k.extend_from_slice(knots[a]);
            k.extend([hi[a], hi[a]]);
            KnotVector::new(1, k).expect("valid knots")
        })
        .collect();
    let shape: Vec<usize> = bases.iter().map(|b| b.num_ctrl()).collect();
    let mut coeffs = Vec::new();
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                // Greville abscissae of degree 1 are the knots themselves
                coeffs.extend([bases[0].knots()[i + 1], bases[1].knots()[j + 1], bases[2].knots()[k + 1]]);
            }
        }
    }
    Spline::new(bases, 3, coeffs).expect("identity map")
}

fn unit_model(shell: Shell, knots: [&[f64]; 3]) -> TrimmedTrivariate {
    TrimmedTrivariate {
        t: identity_trivariate([0.0; 3], [1.0; 3], knots),
        shell,
        space: Space::Parametric,
    }
}

/// Unit cube, untrimmed, Bézier trivariate.
pub fn unit_box() -> TrimmedTrivariate {
    unit_model(voxel_shell([&[0.0, 1.0], &[0.0, 1.0], &[0.0, 1.0]], |_, _, _| true), [&[], &[], &[]])
}

/// Unit cube with one interior knot at 0.5 per axis, untrimmed.
pub fn knotted_box() -> TrimmedTrivariate {
    unit_model(voxel_shell([&[0.0, 1.0], &[0.0, 1.0], &[0.0, 1.0]], |_, _, _| true), [&[0.5], &[0.5], &[0.5]])
}

/// Unit cube minus the corner tetrahedron `x + y + z >= 2.5` (legs 0.5),
/// with one interior knot per axis. Volume `1 - 1/48`.
pub fn cube_tetra() -> TrimmedTrivariate {
    let mut surfaces = Vec::new();
    for axis in 0..3 {
        surfaces.push(TrimmedSurface::untrimmed(axis_plane(axis, 0.0, true, [0.0, 0.0], [1.0, 1.0])));
        // face at 1 with the corner cut where the other two coordinates sum past 1.5
        let ring_a: Vec<Pt> = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 1.0]];
        let region = Region::from_rings(vec![ring_a]);
        surfaces.extend(axis_faces(axis, 1.0, false, &region));
    }
    let a = [1.0, 1.0, 0.5];
    let b = [1.0, 0.5, 1.0];
    let c = [0.5, 1.0, 1.0];
    let mut coeffs = Vec::new();
    for u in [0.0, 1.0] {
        for v in [0.0, 1.0] {
            for k in 0..3 {
                coeffs.push(a[k] + u * (b[k] - a[k]) + v * (c[k] - a[k]));
            }
        }
    }
    let tri = Spline::bezier(&[1, 1], 3, coeffs).expect("bilinear");
    surfaces.push(TrimmedSurface {
        base: tri,
        loops: vec![TrimLoop::from_ring(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])],
        inward: true,
    });
    unit_model(Shell::new(surfaces), [&[0.5], &[0.5], &[0.5]])
}

/// Unit cube minus `[0.45, 1]^3`, knots at 0.5: one Bézier cell is empty.
pub fn octant() -> TrimmedTrivariate {
    let b: &[f64] = &[0.0, 0.45, 1.0];
    unit_model(voxel_shell([b, b, b], |i, j, k| !(i == 1 && j == 1 && k == 1)), [&[0.5], &[0.5], &[0.5]])
}

/// Unit cube minus a slot that cuts the upper corner cell in two; knots at
/// 0.5 give nine trimmed Bézier cells.
pub fn notch() -> TrimmedTrivariate {
    let xs: &[f64] = &[0.0, 0.7, 0.8, 1.0];
    let yz: &[f64] = &[0.0, 0.45, 1.0];
    unit_model(voxel_shell([xs, yz, yz], |i, j, k| !(i == 1 && j == 1 && k == 1)), [&[0.5], &[0.5], &[0.5]])
}

/// Square ring: unit cube minus `[0.4, 0.6]^2 x [0, 1]`. Not star-shaped,
/// nor are its halves.
pub fn ring() -> TrimmedTrivariate {
    let xy: &[f64] = &[0.0, 0.4, 0.6, 1.0];
    unit_model(voxel_shell([xy, xy, &[0.0, 1.0]], |i, j, _| !(i == 1 && j == 1)), [&[], &[], &[]])
}

/// U-shaped prism with a knot at y = 0.7 crossing both prongs.
pub fn u_prism() -> TrimmedTrivariate {
    let xs: &[f64] = &[0.0, 0.35, 0.65, 1.0];
    let ys: &[f64] = &[0.0, 0.4, 1.0];
    unit_model(voxel_shell([xs, ys, &[0.0, 1.0]], |i, j, _| !(i == 1 && j == 1)), [&[], &[0.7], &[]])
}

/// L-shaped prism.
pub fn l_prism() -> TrimmedTrivariate {
    let xy: &[f64] = &[0.0, 0.5, 1.0];
    unit_model(voxel_shell([xy, xy, &[0.0, 1.0]], |i, j, _| !(i == 1 && j == 1)), [&[], &[], &[]])
}

/// Two boxes joined by a thin corridor; no point sees both chambers.
pub fn dumbbell() -> TrimmedTrivariate {
    let xs: &[f64] = &[0.0, 0.4, 0.6, 1.0];
    let yz: &[f64] = &[0.0, 0.45, 0.55, 1.0];
    unit_model(voxel_shell([xs, yz, yz], |i, j, k| i != 1 || (j == 1 && k == 1)), [&[], &[], &[]])
}

/// Box `[0,1]^2 x [0, h + bump]` whose top is a random polynomial bulge and
/// whose sides are ruled; star-shaped for small bumps.
pub fn star_bulge(seed: u64) -> TrimmedTrivariate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 3;
    let h = 0.6;
    let amp = rng.random_range(0.02..0.25);
    let mut top_h = vec![0.0; (d + 1) * (d + 1)];
    for c in top_h.iter_mut() {
        *c = h + rng.random_range(-amp..amp);
    }
    let height = |i: usize, j: usize| top_h[i * (d + 1) + j];
    let mut surfaces = Vec::new();
    // bottom z = 0, inward +z
    surfaces.push(TrimmedSurface::untrimmed(axis_plane(2, 0.0, true, [0.0, 0.0], [1.0, 1.0])));
    // top: (u, v, h(u,v)); u_x v = -z direction is inward, so swap: params (v, u)
    let mut coeffs = Vec::new();
    for j in 0..=d {
        for i in 0..=d {
            coeffs.extend([i as f64 / d as f64, j as f64 / d as f64, height(i, j)]);
        }
    }
    surfaces.push(TrimmedSurface::untrimmed(Spline::bezier(&[d, d], 3, coeffs).expect("top")));
    // sides: edge curve e(t) on the top, ruled down to z = 0
    let side = |edge: &dyn Fn(usize) -> P3, reverse: bool| -> TrimmedSurface {
        let mut coeffs = Vec::new();
        for i in 0..=d {
            let k = if reverse { d - i } else { i };
            let e = edge(k);
            coeffs.extend([e[0], e[1], 0.0]);
            coeffs.extend(e);
        }
        TrimmedSurface::untrimmed(Spline::bezier(&[d, 1], 3, coeffs).expect("side"))
    };
    let f = d as f64;
    // y = 0 side: normal must be +y
    surfaces.push(side(&|i| [i as f64 / f, 0.0, height(i, 0)], true));
    surfaces.push(side(&|i| [i as f64 / f, 1.0, height(i, d)], false));
    surfaces.push(side(&|j| [0.0, j as f64 / f, height(0, j)], false));
    surfaces.push(side(&|j| [1.0, j as f64 / f, height(d, j)], true));
    let shell = Shell::new(surfaces);
    TrimmedTrivariate::euclidean(shell)
}

fn unit(v: P3) -> P3 {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn lerp3(a: &P3, b: &P3, t: f64) -> P3 {
    std::array::from_fn(|k| a[k] + t * (b[k] - a[k]))
}

/// Point of the sphere `|x - c| = r` over the bilinear blend of four unit
/// directions.
fn sphere_point(c: &P3, r: f64, d: &[P3; 4], u: f64, v: f64) -> Vec<f64> {
    let p = lerp3(&lerp3(&d[0], &d[1], u), &lerp3(&d[3], &d[2], u), v);
    let n = unit(p);
    (0..3).map(|k| c[k] + r * n[k]).collect()
}

const ARC_DEGREE: usize = 2;

/// Polynomial approximation of the arc `c + r * unit(lerp(a, b, t))`
/// expressed in the (u, v) coordinates of an axis plane.
fn face_arc(axis: usize, positive: bool, c: &P3, r: f64, a: &P3, b: &P3) -> Spline {
    let patch = crate::spline::interpolate_bezier_patch([ARC_DEGREE, 0], [0.0, 0.0], [1.0, 1.0], 2, |t, _| {
        let n = unit(lerp3(a, b, t));
        let p: P3 = std::array::from_fn(|k| c[k] + r * n[k]);
        plane_uv(axis, positive, &p).to_vec()
    })
    .expect("arc interpolation");
    Spline::bezier(&[ARC_DEGREE], 2, patch.coeffs().to_vec()).expect("arc")
}

fn segment(a: Pt, b: Pt) -> Spline {
    Spline::bezier(&[1], 2, vec![a[0], a[1], b[0], b[1]]).expect("segment")
}

fn oriented_patch(base: Spline, inside: impl Fn(&[f64]) -> P3) -> TrimmedSurface {
    let (ul, uh) = base.domain(0);
    let (vl, vh) = base.domain(1);
    let mid = [0.5 * (ul + uh), 0.5 * (vl + vh)];
    let (p, j) = base.eval_jacobian(&mid);
    let n = [j[2] * j[5] - j[4] * j[3], j[4] * j[1] - j[0] * j[5], j[0] * j[3] - j[2] * j[1]];
    let d = inside(&p);
    let inward = n[0] * d[0] + n[1] * d[1] + n[2] * d[2] > 0.0;
    TrimmedSurface { base, loops: vec![], inward }
}

/// Unit cube minus balls of radius 0.3 at its eight corners and minus the
/// cylinder of radius 0.1 around the vertical axis through its center.
/// Curved pieces are biquadratic sphere patches (three per corner) and
/// quadratic cylinder patches (four), interpolated at Chebyshev-Lobatto
/// nodes; the analytic volume of the exact solid is
/// `1 - 4/3 pi 0.3^3 - pi 0.1^2 = 0.855486...`.
pub fn fig10() -> TrimmedTrivariate {
    let rs = 0.3;
    let rc = 0.1;
    let axis_c = [0.5, 0.5];
    let mut surfaces = Vec::new();
    // sphere patches
    for corner in 0..8 {
        let c: P3 = [(corner >> 2 & 1) as f64, (corner >> 1 & 1) as f64, (corner & 1) as f64];
        let e: [P3; 3] = std::array::from_fn(|k| {
            let mut d = [0.0; 3];
            d[k] = if c[k] == 0.0 { 1.0 } else { -1.0 };
            d
        });
        let m = |a: usize, b: usize| unit(lerp3(&e[a], &e[b], 0.5));
        let center = unit([e[0][0] + e[1][0] + e[2][0], e[0][1] + e[1][1] + e[2][1], e[0][2] + e[1][2] + e[2][2]]);
        for k in 0..3 {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            let quad = [e[k], m(k, a), center, m(k, b)];
            let base = crate::spline::interpolate_bezier_patch([ARC_DEGREE, ARC_DEGREE], [0.0, 0.0], [1.0, 1.0], 3, |u, v| {
                sphere_point(&c, rs, &quad, u, v)
            })
            .expect("sphere patch");
            surfaces.push(oriented_patch(base, |p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]]));
        }
    }
    // cylinder patches
    let dirs: [P3; 4] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]];
    for q in 0..4 {
        let (a, b) = (dirs[q], dirs[(q + 1) % 4]);
        let base = crate::spline::interpolate_bezier_patch([ARC_DEGREE, 1], [0.0, 0.0], [1.0, 1.0], 3, |t, z| {
            let n = unit(lerp3(&a, &b, t));
            vec![axis_c[0] + rc * n[0], axis_c[1] + rc * n[1], z]
        })
        .expect("cylinder patch");
        surfaces.push(oriented_patch(base, |p| [p[0] - axis_c[0], p[1] - axis_c[1], 0.0]));
    }
    // cube faces with quarter-disc corners, and the axial hole on z faces
    for axis in 0..3 {
        for value in [0.0, 1.0] {
            let positive = value == 0.0;
            let a1 = (axis + 1) % 3;
            let a2 = (axis + 2) % 3;
            let at = |x1: f64, x2: f64| -> P3 {
                let mut p = [value; 3];
                p[a1] = x1;
                p[a2] = x2;
                p
            };
            let uv = |p: &P3| plane_uv(axis, positive, p);
            // counterclockwise in (a1, a2)
            let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
            let mut curves = Vec::new();
            for i in 0..4 {
                let (x, y) = corners[i];
                let (nx, ny) = corners[(i + 1) % 4];
                let cc = at(x, y);
                // arc around this corner from the previous edge to the next one
                let prev = corners[(i + 3) % 4];
                let d_in: P3 = {
                    let p = at(prev.0, prev.1);
                    unit([p[0] - cc[0], p[1] - cc[1], p[2] - cc[2]])
                };
                let d_out: P3 = {
                    let p = at(nx, ny);
                    unit([p[0] - cc[0], p[1] - cc[1], p[2] - cc[2]])
                };
                let mid = unit(lerp3(&d_in, &d_out, 0.5));
                curves.push(face_arc(axis, positive, &cc, rs, &d_in, &mid));
                curves.push(face_arc(axis, positive, &cc, rs, &mid, &d_out));
                let s: P3 = std::array::from_fn(|k| cc[k] + rs * d_out[k]);
                let t_next = at(nx, ny);
                let back: P3 = unit([cc[0] - t_next[0], cc[1] - t_next[1], cc[2] - t_next[2]]);
                let e: P3 = std::array::from_fn(|k| t_next[k] + rs * back[k]);
                curves.push(segment(uv(&s), uv(&e)));
            }
            if !positive {
                curves = reverse_loop(curves);
            }
            let mut loops = vec![TrimLoop::new(curves, 1e-12).expect("closed face loop")];
            if axis == 2 {
                let c: P3 = [axis_c[0], axis_c[1], value];
                // clockwise in (a1, a2) = (x, y)
                let mut hole = Vec::new();
                for q in (0..4).rev() {
                    hole.push(face_arc(axis, positive, &c, rc, &dirs[(q + 1) % 4], &dirs[q]));
                }
                if !positive {
                    hole = reverse_loop(hole);
                }
                loops.push(TrimLoop::new(hole, 1e-12).expect("closed hole"));
            }
            let base = axis_plane(axis, value, positive, [0.0, 0.0], [1.0, 1.0]);
            surfaces.push(TrimmedSurface { base, loops, inward: true });
        }
    }
    TrimmedTrivariate::euclidean(Shell::new(surfaces))
}

/// Loop traversed backwards.
fn reverse_loop(curves: Vec<Spline>) -> Vec<Spline> {
    curves.into_iter().rev().map(|c| c.reverse_axis(0)).collect()
}

/// The shipped models by file name.
pub fn named() -> Vec<(&'static str, TrimmedTrivariate)> {
    vec![
        ("box", unit_box()),
        ("knotted_box", knotted_box()),
        ("cube_tetra", cube_tetra()),
        ("octant", octant()),
        ("notch", notch()),
        ("ring", ring()),
        ("u_prism", u_prism()),
        ("l_prism", l_prism()),
        ("dumbbell", dumbbell()),
        ("star_bulge", star_bulge(7)),
        ("fig10", fig10()),
    ]
}
