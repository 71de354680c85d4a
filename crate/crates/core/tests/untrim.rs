mod common;

use std::f64::consts::FRAC_PI_2;

use trivar::config::Tol;
use trivar::fixtures::{self, axis_faces, axis_plane};
use trivar::geom2d::Region;
use trivar::inversion::closest;
use trivar::trim::{validate_shell, Shell, Space, TrimLoop, TrimmedSurface, TrimmedTrivariate};
use trivar::untrim::{
    back_project_surface, choose_subdivision, find_kernel_point, is_kernel_point, normal_cone, polyhedron_fallback,
    untrim_bezier_trivariate, untrim_surface, untrim_trimmed_trivariate, visibility_field,
};
use trivar::{Config, Spline};

fn unit_tol() -> Tol {
    Tol::new(&Config::default(), &[0.0; 3], &[1.0; 3])
}

/// Fraction of a fine grid of the unit square covered by patches of a
/// planar surface at z = 0, and the number of points covered twice.
fn planar_cover(patches: &[Spline], n: usize) -> (f64, usize) {
    let mut covered = 0;
    let mut twice = 0;
    for i in 0..n {
        for j in 0..n {
            let p = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64, 0.0];
            let k = patches.iter().filter(|s| closest(s, &p, 6, 3, 1e-13).residual < 1e-9).count();
            covered += usize::from(k >= 1);
            twice += usize::from(k >= 2);
        }
    }
    (covered as f64 / (n * n) as f64, twice)
}

#[test]
fn untrimmed_surface_is_kept() {
    let s = TrimmedSurface::untrimmed(axis_plane(2, 0.0, true, [0.0, 0.0], [1.0, 1.0]));
    let p = untrim_surface(&s, &unit_tol()).unwrap();
    assert_eq!(p.len(), 1);
    assert_eq!(p[0], s.base);
}

#[test]
fn triangle_region_area() {
    let base = axis_plane(2, 0.0, true, [0.0, 0.0], [1.0, 1.0]);
    let s = TrimmedSurface { base, loops: vec![TrimLoop::from_ring(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])], inward: true };
    let p = untrim_surface(&s, &unit_tol()).unwrap();
    let n = 60;
    let (frac, twice) = planar_cover(&p, n);
    // grid points on the diagonal count as covered; 3 sigma of a binomial proportion
    let sigma = (0.25 / (n * n) as f64).sqrt();
    assert!((frac - 0.5).abs() <= 3.0 * sigma + 1.0 / n as f64, "{frac}");
    assert_eq!(twice, 0);
}

#[test]
fn holed_region_area() {
    let base = axis_plane(2, 0.0, true, [0.0, 0.0], [1.0, 1.0]);
    let outer = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let hole = vec![[0.3, 0.3], [0.3, 0.7], [0.7, 0.7], [0.7, 0.3]];
    let region = Region::from_rings(vec![outer, hole]);
    let s = TrimmedSurface::from_region(base, &region, true);
    let p = untrim_surface(&s, &unit_tol()).unwrap();
    assert!(p.len() >= 4);
    let (frac, twice) = planar_cover(&p, 50);
    assert!((frac - 0.84).abs() < 0.01, "{frac}");
    assert_eq!(twice, 0);
}

#[test]
fn visibility_signs() {
    let face = axis_plane(2, 0.0, true, [0.0, 0.0], [1.0, 1.0]);
    let f = visibility_field(&[0.5, 0.5, 0.5], &face).unwrap();
    assert!(f.coeffs().iter().all(|c| *c > 0.0));
    let f = visibility_field(&[0.2, 0.9, 0.0], &face).unwrap();
    assert!(f.coeffs().iter().all(|c| c.abs() < 1e-15));
    let q = [0.3, 0.4, -0.2];
    let f = visibility_field(&q, &face).unwrap();
    assert!(f.coeffs().iter().all(|c| *c <= 0.0));
    for i in 0..=10 {
        for j in 0..=10 {
            let (u, v) = (i as f64 / 10.0, j as f64 / 10.0);
            let s = face.eval(&[u, v]).unwrap();
            let (_, jac) = face.eval_jacobian(&[u, v]);
            let n = [
                jac[2] * jac[5] - jac[4] * jac[3],
                jac[4] * jac[1] - jac[0] * jac[5],
                jac[0] * jac[3] - jac[2] * jac[1],
            ];
            let want: f64 = (0..3).map(|k| (q[k] - s[k]) * n[k]).sum();
            assert!((f.eval(&[u, v]).unwrap()[0] - want).abs() < 1e-14);
        }
    }
}

fn box_patches(m: &TrimmedTrivariate) -> Vec<Spline> {
    m.shell.surfaces.iter().flat_map(|s| untrim_surface(s, &unit_tol()).unwrap()).collect()
}

#[test]
fn kernel_point_tests() {
    let cube = box_patches(&fixtures::unit_box());
    assert!(is_kernel_point(&[0.5, 0.5, 0.5], &cube).unwrap());
    assert!(is_kernel_point(&[0.999999, 0.5, 0.5], &cube).unwrap());
    assert!(!is_kernel_point(&[1.2, 0.5, 0.5], &cube).unwrap());
    let l = box_patches(&fixtures::l_prism());
    // inside the arm x < 0.5, y > 0.5: the far arm x > 0.5, y < 0.5 is hidden
    assert!(!is_kernel_point(&[0.1, 0.9, 0.5], &l).unwrap());
    assert!(is_kernel_point(&[0.25, 0.25, 0.5], &l).unwrap());
}

#[test]
fn kernel_search_on_cube_picks_center() {
    let cfg = Config::default();
    let k = find_kernel_point(&fixtures::unit_box().shell, 5, &cfg).unwrap().unwrap();
    assert!(k.passed);
    for a in 0..3 {
        assert!((k.p[a] - 0.5).abs() < 1e-12);
    }
    assert!(k.score.abs() < 1e-7);
}

#[test]
fn dumbbell_has_no_sampled_kernel() {
    let cfg = Config::default();
    let shell = fixtures::dumbbell().shell;
    for n in [5, 9] {
        assert!(find_kernel_point(&shell, n, &cfg).unwrap().is_none());
    }
}

/// Distance to a patch by dense sampling.
fn dense_distance(s: &Spline, p: &[f64; 3]) -> f64 {
    let n = 120;
    let (ul, uh) = s.domain(0);
    let (vl, vh) = s.domain(1);
    let mut best = f64::INFINITY;
    for i in 0..=n {
        for j in 0..=n {
            let q = s.eval(&[ul + (uh - ul) * i as f64 / n as f64, vl + (vh - vl) * j as f64 / n as f64]).unwrap();
            best = best.min(((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) + (q[2] - p[2]).powi(2)).sqrt());
        }
    }
    best
}

#[test]
fn kernel_selection_minimizes_score() {
    let cfg = Config::default();
    let m = fixtures::cube_tetra();
    let k = find_kernel_point(&m.shell, 5, &cfg).unwrap().unwrap();
    let tol = unit_tol();
    let surf: Vec<Vec<Spline>> = m.shell.surfaces.iter().map(|s| untrim_surface(s, &tol).unwrap()).collect();
    let score = |p: &[f64; 3]| {
        let d: Vec<f64> = surf
            .iter()
            .map(|ps| ps.iter().map(|s| dense_distance(s, p)).fold(f64::INFINITY, f64::min))
            .collect();
        d.iter().copied().fold(f64::NEG_INFINITY, f64::max) - d.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let all: Vec<Spline> = surf.iter().flatten().cloned().collect();
    let chosen = score(&k.p);
    for i in 0..5 {
        for j in 0..5 {
            for l in 0..5 {
                let p = [(i as f64 + 0.5) / 5.0, (j as f64 + 0.5) / 5.0, (l as f64 + 0.5) / 5.0];
                if p[0] + p[1] + p[2] >= 2.5 || !is_kernel_point(&p, &all).unwrap() {
                    continue;
                }
                assert!(chosen <= score(&p) + 2e-3, "{p:?}");
            }
        }
    }
}

#[test]
fn kernel_choice_survives_translation() {
    let cfg = Config::default();
    let shell = fixtures::cube_tetra().shell;
    let a = find_kernel_point(&shell, 5, &cfg).unwrap().unwrap();
    let v = [3.25, -1.5, 0.125];
    let b = find_kernel_point(&common::translate_shell(&shell, v), 5, &cfg).unwrap().unwrap();
    for k in 0..3 {
        assert!((b.p[k] - v[k] - a.p[k]).abs() < 1e-9);
    }
}

#[test]
fn subdivision_choice() {
    let m = fixtures::unit_box();
    let flat = Shell::new(fixtures::voxel_shell([&[0.0, 1.0], &[0.0, 0.5], &[0.0, 0.25]], |_, _, _| true).surfaces);
    let tt = TrimmedTrivariate { t: m.t.clone(), shell: flat, space: Space::Parametric };
    let (t, axis) = choose_subdivision(&tt);
    assert_eq!(axis, 0);
    assert!((t - 0.5).abs() < 1e-12);
    let (t, axis) = choose_subdivision(&m);
    assert_eq!(axis, 0);
    assert!((t - 0.5).abs() < 1e-12);
    let split = trivar::subdivide::trim_trivar_subdiv(&m, t, axis, &Config::default()).unwrap();
    assert_eq!(choose_subdivision(&split.pieces[0].tt).1, 1);
}

#[test]
fn normal_cones() {
    let c = normal_cone(&axis_plane(0, 0.3, true, [0.0, 0.0], [1.0, 1.0])).unwrap();
    assert!(c.aperture.abs() < 1e-12);
    let coeffs = vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0];
    let cyl = Spline::bezier(&[2, 1], 3, coeffs).unwrap();
    let c = normal_cone(&cyl).unwrap();
    assert!((c.aperture - FRAC_PI_2).abs() < 1e-6, "{}", c.aperture);
}

fn tiny_tetra(h: f64) -> Shell {
    let tri = Region::from_rings(vec![vec![[0.0, 0.0], [h, 0.0], [0.0, h]]]);
    let mut surfaces = Vec::new();
    for axis in 0..3 {
        surfaces.extend(axis_faces(axis, 0.0, true, &tri));
    }
    let a = [h, 0.0, 0.0];
    let b = [0.0, h, 0.0];
    let c = [0.0, 0.0, h];
    let mut coeffs = Vec::new();
    for u in [0.0, 1.0] {
        for v in [0.0, 1.0] {
            for k in 0..3 {
                coeffs.push(a[k] + u * (c[k] - a[k]) + v * (b[k] - a[k]));
            }
        }
    }
    surfaces.push(TrimmedSurface {
        base: Spline::bezier(&[1, 1], 3, coeffs).unwrap(),
        loops: vec![TrimLoop::from_ring(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])],
        inward: true,
    });
    Shell::new(surfaces)
}

#[test]
fn fallback_on_tiny_tetrahedron() {
    let cfg = Config::default();
    let shell = tiny_tetra(1e-3);
    assert!(validate_shell(&shell, &cfg).is_valid());
    let p = polyhedron_fallback(&shell, &cfg).unwrap();
    let tol = Tol::new(&cfg, &[0.0; 3], &[1e-3; 3]);
    let planes: Vec<Spline> = shell.surfaces.iter().flat_map(|s| untrim_surface(s, &tol).unwrap()).collect();
    assert!(is_kernel_point(&p, &planes).unwrap());
}

#[test]
fn untrimmed_box_is_one_tile() {
    let cfg = Config::default();
    let m = fixtures::unit_box();
    let r = untrim_bezier_trivariate(&m, &cfg).unwrap();
    assert_eq!(r.tiles.len(), 1);
    assert_eq!(r.stats.max_depth, 0);
    assert_eq!(r.tiles[0], Spline::identity_box(&[0.0; 3], &[1.0; 3]));
    let r = untrim_trimmed_trivariate(&fixtures::knotted_box(), &cfg).unwrap();
    assert_eq!(r.tiles.len(), 8);
}

fn bezier_cube_tetra() -> TrimmedTrivariate {
    let m = fixtures::cube_tetra();
    TrimmedTrivariate::new(Spline::identity_box(&[0.0; 3], &[1.0; 3]), m.shell, Space::Parametric).unwrap()
}

#[test]
fn convex_cell_uses_one_kernel() {
    let cfg = Config::default();
    let m = bezier_cube_tetra();
    let r = untrim_bezier_trivariate(&m, &cfg).unwrap();
    let patches: usize = m.shell.surfaces.iter().map(|s| untrim_surface(s, &unit_tol()).unwrap().len()).sum();
    assert_eq!(r.stats.kernel_points, 1);
    assert_eq!(r.stats.subdivisions, 0);
    assert_eq!(r.tiles.len(), patches);
    let c = common::coverage(&r, 4000, 7);
    assert!(c.ok(), "{c:?}");
}

#[test]
fn tiles_are_regular_and_interpolate_faces() {
    let cfg = Config::default();
    let r = untrim_trimmed_trivariate(&fixtures::cube_tetra(), &cfg).unwrap();
    for (tile, origin) in r.tiles.iter().zip(&r.origins) {
        if let Some(face) = &origin.face {
            assert_eq!(&tile.boundary(2, 1).unwrap(), face);
        }
        let mut sign = 0.0;
        for i in 1..=5 {
            for j in 1..=5 {
                for k in 1..=5 {
                    let x: Vec<f64> = [i, j, k]
                        .iter()
                        .enumerate()
                        .map(|(a, t)| {
                            let (lo, hi) = tile.domain(a);
                            lo + (hi - lo) * *t as f64 / 6.0
                        })
                        .collect();
                    let (_, j3) = tile.eval_jacobian(&x);
                    let det = j3[0] * (j3[4] * j3[8] - j3[5] * j3[7]) - j3[1] * (j3[3] * j3[8] - j3[5] * j3[6])
                        + j3[2] * (j3[3] * j3[7] - j3[4] * j3[6]);
                    assert!(det.abs() > 0.0);
                    if sign == 0.0 {
                        sign = det.signum();
                    }
                    assert_eq!(det.signum(), sign);
                }
            }
        }
    }
}

#[test]
fn nonconvex_models_cover() {
    let cfg = Config::default();
    for (name, m) in [("cube_tetra", fixtures::cube_tetra()), ("l_prism", fixtures::l_prism()), ("u_prism", fixtures::u_prism())] {
        let r = untrim_trimmed_trivariate(&m, &cfg).unwrap();
        let c = common::coverage(&r, 3000, 11);
        assert!(c.ok(), "{name}: {c:?}");
    }
}

#[test]
fn ring_needs_two_levels() {
    let cfg = Config::default();
    let r = untrim_trimmed_trivariate(&fixtures::ring(), &cfg).unwrap();
    assert!(r.stats.max_depth >= 2, "{:?}", r.stats);
    let c = common::coverage(&r, 3000, 5);
    assert!(c.ok(), "{c:?}");
}

#[test]
fn dumbbell_subdivides() {
    let cfg = Config::default();
    let r = untrim_trimmed_trivariate(&fixtures::dumbbell(), &cfg).unwrap();
    assert!(r.stats.subdivisions >= 1);
    let c = common::coverage(&r, 3000, 9);
    assert!(c.ok(), "{c:?}");
}

#[test]
fn back_projection_identity_and_scaling() {
    let se = Spline::bezier(&[2, 1], 3, vec![0.1, 0.2, 0.3, 0.1, 0.8, 0.3, 0.5, 0.2, 0.9, 0.5, 0.8, 0.9, 0.9, 0.2, 0.3, 0.9, 0.8, 0.3])
        .unwrap();
    let id = Spline::identity_box(&[0.0; 3], &[1.0; 3]);
    let b = back_project_surface(&id, &se, 9, 3, 3).unwrap();
    let scaled = Spline::identity_box(&[0.0; 3], &[1.0; 3]).map_points(3, |p| p.iter().map(|x| 2.0 * x).collect());
    let c = back_project_surface(&scaled, &se, 9, 3, 3).unwrap();
    for i in 0..=10 {
        for j in 0..=10 {
            let uv = [i as f64 / 10.0, j as f64 / 10.0];
            let want = se.eval(&uv).unwrap();
            let got = b.surface.eval(&uv).unwrap();
            let half = c.surface.eval(&uv).unwrap();
            for k in 0..3 {
                assert!((got[k] - want[k]).abs() < 1e-10);
                assert!((half[k] - want[k] / 2.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn back_projection_through_warp() {
    // trilinear warp of the unit cube
    let mut coeffs = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let (x, y, z) = (i as f64, j as f64, k as f64);
                coeffs.extend([x + 0.2 * y * z, y + 0.15 * x * z, z + 0.1 * x * y + 0.05 * x]);
            }
        }
    }
    let t = Spline::bezier(&[1, 1, 1], 3, coeffs).unwrap();
    let plane = Spline::bezier(&[1, 1], 3, vec![0.1, 0.1, 0.4, 0.1, 0.9, 0.45, 0.9, 0.1, 0.35, 0.9, 0.9, 0.5]).unwrap();
    let se = trivar::spline::compose_surface_in_trivariate(&t, &plane).unwrap();
    let b = back_project_surface(&t, &se, 15, 3, 6).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..=20 {
        for j in 0..=20 {
            let uv = [i as f64 / 20.0, j as f64 / 20.0];
            let a = t.eval(&b.surface.eval(&uv).unwrap()).unwrap();
            let e = se.eval(&uv).unwrap();
            worst = worst.max((0..3).map(|k| (a[k] - e[k]).abs()).fold(0.0, f64::max));
        }
    }
    assert!(worst < 1e-8, "{worst}");
}
