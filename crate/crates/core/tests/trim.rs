use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trivar::fixtures;
use trivar::raycast::{point_in_shell, Location, ShellLocator};
use trivar::trim::{validate_shell, Shell, TrimmedSurface};
use trivar::Config;

#[test]
fn fixtures_are_valid() {
    let cfg = Config::default();
    for (name, m) in [
        ("box", fixtures::unit_box()),
        ("cube_tetra", fixtures::cube_tetra()),
        ("octant", fixtures::octant()),
        ("notch", fixtures::notch()),
        ("ring", fixtures::ring()),
        ("u_prism", fixtures::u_prism()),
        ("l_prism", fixtures::l_prism()),
        ("dumbbell", fixtures::dumbbell()),
        ("star", fixtures::star_bulge(3)),
    ] {
        let r = validate_shell(&m.shell, &cfg);
        assert!(r.is_valid(), "{name}: {r:?}");
    }
}

#[test]
fn missing_face_reports_open_loop() {
    let mut shell = fixtures::unit_box().shell;
    shell.surfaces.pop();
    let r = validate_shell(&shell, &Config::default());
    assert!(!r.is_valid());
    assert_eq!(r.open_surfaces(), 4);
}

#[test]
fn flipped_face_reports_orientation() {
    let mut shell = fixtures::unit_box().shell;
    let s = &mut shell.surfaces[2];
    *s = TrimmedSurface { base: s.base.clone(), loops: s.loops.clone(), inward: !s.inward };
    let r = validate_shell(&shell, &Config::default());
    assert_eq!(r.orientation, vec![2]);
    assert!(r.unmatched.is_empty());
}

#[test]
fn validation_is_permutation_stable() {
    let cfg = Config::default();
    let mut shell = fixtures::notch().shell;
    shell.surfaces.reverse();
    assert!(validate_shell(&shell, &cfg).is_valid());
}

#[test]
fn cube_points() {
    let shell = fixtures::unit_box().shell;
    let cfg = Config::default();
    assert_eq!(point_in_shell(&shell, &[0.5, 0.5, 0.5], &cfg), Location::Inside);
    assert_eq!(point_in_shell(&shell, &[1.5, 0.5, 0.5], &cfg), Location::Outside);
    assert_eq!(point_in_shell(&shell, &[1.0, 0.5, 0.5], &cfg), Location::Boundary);
}

fn inside_fraction(shell: &Shell, n: usize, seed: u64) -> f64 {
    let loc = ShellLocator::new(shell, &Config::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inside = 0;
    for _ in 0..n {
        let p = [rng.random(), rng.random(), rng.random()];
        if loc.locate(&p) == Location::Inside {
            inside += 1;
        }
    }
    inside as f64 / n as f64
}

#[test]
fn cube_tetra_inside_fraction() {
    let f = inside_fraction(&fixtures::cube_tetra().shell, 10_000, 1);
    let p: f64 = 1.0 - 1.0 / 48.0;
    let sigma = (p * (1.0 - p) / 10_000.0).sqrt();
    assert!((f - p).abs() < 3.0 * sigma, "{f}");
}

#[test]
fn parity_independent_of_direction() {
    let shell = fixtures::ring().shell;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let locs: Vec<ShellLocator> = (0..5)
        .map(|s| ShellLocator::new(&shell, &Config { seed: s, ..Config::default() }))
        .collect();
    for _ in 0..500 {
        let p = [rng.random(), rng.random(), rng.random()];
        let first = locs[0].locate(&p);
        for l in &locs[1..] {
            assert_eq!(l.locate(&p), first);
        }
    }
}

#[test]
fn curved_star_fixture_volume_fraction() {
    // the bulge fixture sits in [0,1]^2 x [0, zmax]; compare with a direct
    // height-function oracle
    let m = fixtures::star_bulge(7);
    let top = &m.shell.surfaces[1].base;
    let loc = ShellLocator::new(&m.shell, &Config::default());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..2000 {
        let p = [rng.random::<f64>(), rng.random::<f64>(), rng.random_range(0.0..1.0)];
        // top is parametrized as (y, x)
        let h = top.eval(&[p[1], p[0]]).unwrap()[2];
        if (p[2] - h).abs() < 1e-9 {
            continue;
        }
        let want = if p[2] < h { Location::Inside } else { Location::Outside };
        assert_eq!(loc.locate(&p), want, "{p:?} h={h}");
    }
}
