use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trivar::fixtures;
use trivar::raycast::{Location, ShellLocator};
use trivar::subdivide::{bezier_subdivide, split_shell_by_isoplane, tol_for, trim_trivar_subdiv, Side};
use trivar::trim::{validate_shell, TrimmedTrivariate};
use trivar::Config;

/// Every random point of the root box classifies the same way in the
/// original shell and in whichever cell shell covers it.
fn check_partition(root: &TrimmedTrivariate, cells: &[TrimmedTrivariate], n: usize, seed: u64) {
    let cfg = Config::default();
    let orig = ShellLocator::new(&root.shell, &cfg);
    let locs: Vec<(ShellLocator, [f64; 3], [f64; 3])> = cells
        .iter()
        .map(|c| {
            let (lo, hi) = c.param_box();
            (ShellLocator::new(&c.shell, &cfg), lo, hi)
        })
        .collect();
    let (lo, hi) = root.param_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..n {
        let p: [f64; 3] = std::array::from_fn(|a| lo[a] + (hi[a] - lo[a]) * rng.random::<f64>());
        let want = orig.locate(&p);
        if want == Location::Boundary {
            continue;
        }
        let hits = locs
            .iter()
            .filter(|(l, clo, chi)| {
                (0..3).all(|a| p[a] >= clo[a] && p[a] <= chi[a]) && l.locate(&p) == Location::Inside
            })
            .count();
        let expect = usize::from(want == Location::Inside);
        if hits != expect {
            mismatches += 1;
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn bezier_cell_counts() {
    let cfg = Config::default();
    for (name, m, want) in [
        ("knotted_box", fixtures::knotted_box(), 8),
        ("octant", fixtures::octant(), 7),
        ("notch", fixtures::notch(), 9),
        ("cube_tetra", fixtures::cube_tetra(), 8),
    ] {
        let cells = bezier_subdivide(&m, &cfg).unwrap();
        assert_eq!(cells.len(), want, "{name}");
        for c in &cells {
            assert!(c.is_bezier());
            let r = validate_shell(&c.shell, &cfg);
            assert!(r.is_valid(), "{name}: {r:?}");
        }
    }
}

#[test]
fn cells_partition_the_solid() {
    let cfg = Config::default();
    for (m, seed) in [(fixtures::notch(), 1), (fixtures::cube_tetra(), 2)] {
        let cells = bezier_subdivide(&m, &cfg).unwrap();
        check_partition(&m, &cells, 3000, seed);
    }
}

#[test]
fn split_curved_surface() {
    let cfg = Config::default();
    let m = fixtures::star_bulge(5);
    let (lo, hi) = m.param_box();
    for axis in 0..3 {
        let t = 0.37 * lo[axis] + 0.63 * hi[axis];
        let r = trim_trivar_subdiv(&m, t, axis, &cfg).unwrap();
        assert_eq!(r.pieces.len(), 2);
        for p in &r.pieces {
            let v = validate_shell(&p.tt.shell, &cfg);
            assert!(v.is_valid(), "axis {axis}: {v:?}");
        }
    }
}

#[test]
fn components_on_each_side() {
    let cfg = Config::default();
    let r = trim_trivar_subdiv(&fixtures::u_prism(), 0.7, 1, &cfg).unwrap();
    let left = r.pieces.iter().filter(|p| p.side == Side::Left).count();
    let right = r.pieces.iter().filter(|p| p.side == Side::Right).count();
    assert_eq!((left, right), (1, 2));

    let r = trim_trivar_subdiv(&fixtures::dumbbell(), 0.5, 0, &cfg).unwrap();
    assert_eq!(r.pieces.len(), 2);
}

#[test]
fn plane_through_a_face_is_degenerate() {
    let m = fixtures::octant();
    let tol = tol_for(&m, &Config::default());
    let e = split_shell_by_isoplane(&m.shell, 0.45, 2, &tol).unwrap_err();
    assert!(matches!(e, trivar::Error::DegenerateSplit { .. }));
    // the perturbed retry succeeds
    let r = trim_trivar_subdiv(&m, 0.45, 2, &Config::default()).unwrap();
    assert_eq!(r.pieces.len(), 2);
}
