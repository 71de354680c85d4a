//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use trivar::integrate::{jacobian_det, volume};
use trivar::io::{StatsReport, StatsRow};
use trivar::subdivide::bezier_subdivide;
use trivar::trim::{Space, TrimmedTrivariate};
use trivar::untrim::{find_kernel_point, untrim_surface, untrim_trimmed_trivariate, UntrimResult};
use trivar::{fixtures, Config, Spline};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn untrim(tt: &TrimmedTrivariate) -> UntrimResult {
    untrim_trimmed_trivariate(tt, &Config::default()).expect("untrimming succeeds")
}

fn fig10_volume(fig10: &UntrimResult, secs: f64) -> Outcome {
    let t = Instant::now();
    let v = volume(fig10).map_err(|e| e.to_string())?;
    let total = secs + t.elapsed().as_secs_f64();
    check(
        (0.845..=0.866).contains(&v) && total <= 120.0,
        format!("volume {v:.6} (analytic 0.855486) in {total:.1} s, {} tiles", fig10.tiles.len()),
    )
}

fn cube_tetra_volume() -> Outcome {
    let t = Instant::now();
    let r = untrim(&fixtures::cube_tetra());
    let v = volume(&r).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let want = 1.0 - 1.0 / 48.0;
    check((v - want).abs() <= 1e-6 && secs <= 10.0, format!("volume {v:.12}, error {:.1e}, {secs:.2} s", (v - want).abs()))
}

fn coverage_suite(results: &[(&str, &UntrimResult)]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = results.len() >= 6;
    for (i, (name, r)) in results.iter().enumerate() {
        let c = common::interior_coverage(r, 100_000, 17 + i as u64);
        ok &= c.ok();
        lines.push(format!("{name} {}/{} failures", c.failures, c.inside));
    }
    let ring = results.iter().find(|(n, _)| *n == "ring").map(|(_, r)| r.stats.max_depth).unwrap_or(0);
    let split = results.iter().find(|(n, _)| *n == "u_prism").map(|(_, r)| r.stats.bezier_cells).unwrap_or(0);
    ok &= ring >= 2 && split > 2;
    check(ok, format!("{}; ring depth {ring}, u_prism cells {split}", lines.join(", ")))
}

/// Smallest value of `<p - s, n>` over a 40 x 40 grid of every patch.
fn dense_margin(p: &[f64; 3], patches: &[Spline]) -> f64 {
    let n = 40;
    let mut worst = f64::INFINITY;
    for s in patches {
        let (ul, uh) = s.domain(0);
        let (vl, vh) = s.domain(1);
        for i in 0..n {
            for j in 0..n {
                let u = ul + (uh - ul) * i as f64 / (n - 1) as f64;
                let v = vl + (vh - vl) * j as f64 / (n - 1) as f64;
                let (x, jac) = s.eval_jacobian(&[u, v]);
                let nn = [
                    jac[2] * jac[5] - jac[4] * jac[3],
                    jac[4] * jac[1] - jac[0] * jac[5],
                    jac[0] * jac[3] - jac[2] * jac[1],
                ];
                worst = worst.min((0..3).map(|k| (p[k] - x[k]) * nn[k]).sum());
            }
        }
    }
    worst
}

fn kernel_soundness(dumbbell: &UntrimResult) -> Outcome {
    let cfg = Config::default();
    let mut accepted = 0;
    let mut worst = f64::INFINITY;
    for seed in 0..100 {
        let tt = fixtures::star_bulge(seed);
        let tol = trivar::subdivide::tol_for(&tt, &cfg);
        let patches: Vec<Spline> =
            tt.shell.surfaces.iter().flat_map(|s| untrim_surface(s, &tol).expect("surface untrims")).collect();
        for &g in &cfg.grids {
            if let Some(k) = find_kernel_point(&tt.shell, g, &cfg).expect("kernel search runs") {
                accepted += 1;
                worst = worst.min(dense_margin(&k.p, &patches));
                break;
            }
        }
    }
    let shell = &fixtures::dumbbell().shell;
    let rejected = [5, 9].iter().all(|g| find_kernel_point(shell, *g, &cfg).map(|k| k.is_none()).unwrap_or(false));
    let subdivided = dumbbell.stats.subdivisions >= 1;
    check(
        accepted > 0 && worst > -1e-10 && rejected && subdivided,
        format!(
            "{accepted}/100 kernels accepted, worst dense margin {worst:.3e}; dumbbell rejected at 5^3 and 9^3: {rejected}, subdivided: {subdivided}"
        ),
    )
}

fn cell_counts() -> Outcome {
    let cfg = Config::default();
    let n = |tt: TrimmedTrivariate| bezier_subdivide(&tt, &cfg).map(|c| c.len()).unwrap_or(0);
    let got = (n(fixtures::knotted_box()), n(fixtures::octant()), n(fixtures::notch()));
    check(got == (8, 7, 9), format!("knotted box {}, octant {}, notch {} (want 8, 7, 9)", got.0, got.1, got.2))
}

fn regularity(results: &[(&str, &UntrimResult)]) -> Outcome {
    let mut tiles = 0;
    let mut faces = 0;
    let mut bad = Vec::new();
    for (name, r) in results {
        for (ti, (tile, origin)) in r.tiles.iter().zip(&r.origins).enumerate() {
            tiles += 1;
            if let Some(face) = &origin.face {
                faces += 1;
                let w1 = tile.boundary(2, 1).expect("tile face");
                let same = w1.bases() == face.bases()
                    && w1.coeffs().len() == face.coeffs().len()
                    && w1.coeffs().iter().zip(face.coeffs()).all(|(a, b)| a.to_bits() == b.to_bits());
                if !same {
                    bad.push(format!("{name}#{ti} face"));
                }
            }
            let mut sign = 0.0;
            'samples: for i in 1..=5 {
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
                        let det = jacobian_det(&r.source.t, tile, &x);
                        if sign == 0.0 {
                            sign = det.signum();
                        }
                        if det == 0.0 || !det.is_finite() || det.signum() != sign {
                            bad.push(format!("{name}#{ti} jacobian"));
                            break 'samples;
                        }
                    }
                }
            }
        }
    }
    check(bad.is_empty(), format!("{tiles} tiles, {faces} ruled faces compared, irregular: {bad:?}"))
}

fn stats_shape(fig10: &UntrimResult) -> Outcome {
    let report = StatsReport { rows: vec![StatsRow::from_results("fig10", &[fig10])] };
    let text = report.render();
    let header: Vec<&str> = text.lines().next().unwrap_or("").split('|').map(str::trim).collect();
    let row: Vec<&str> = text.lines().nth(2).unwrap_or("").split('|').map(str::trim).collect();
    let want = [
        "model",
        "trimmed trivariates",
        "trimming surfaces",
        "tensor product trivariates",
        "total subdivisions",
        "max depth",
        "time (s)",
        "space (E/P)",
    ];
    let space_ok = fig10.source.space == Space::Euclidean && row.get(7) == Some(&"E");
    check(
        header == want && row.len() == 8 && space_ok,
        format!("columns {header:?}; fig10 row {row:?}"),
    )
}

fn run(n: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let secs = t.elapsed().as_secs_f64();
    match &r {
        Ok(d) => println!("PASS criterion {n} ({name}): {d} [{secs:.1} s]"),
        Err(d) => println!("FAIL criterion {n} ({name}): {d} [{secs:.1} s]"),
    }
    r.is_ok()
}

fn main() {
    let t = Instant::now();
    let fig10 = untrim(&fixtures::fig10());
    let fig10_secs = t.elapsed().as_secs_f64();
    let models = [
        ("cube_tetra", fixtures::cube_tetra()),
        ("octant", fixtures::octant()),
        ("notch", fixtures::notch()),
        ("ring", fixtures::ring()),
        ("u_prism", fixtures::u_prism()),
        ("l_prism", fixtures::l_prism()),
        ("dumbbell", fixtures::dumbbell()),
        ("star_bulge", fixtures::star_bulge(7)),
    ];
    let results: Vec<(&str, UntrimResult)> = models.iter().map(|(n, m)| (*n, untrim(m))).collect();
    let mut all: Vec<(&str, &UntrimResult)> = results.iter().map(|(n, r)| (*n, r)).collect();
    all.push(("fig10", &fig10));
    let dumbbell = &results.iter().find(|(n, _)| *n == "dumbbell").expect("dumbbell").1;

    let mut ok = true;
    ok &= run(1, "fig10 volume", || fig10_volume(&fig10, fig10_secs));
    ok &= run(2, "cube minus tetrahedron volume", cube_tetra_volume);
    ok &= run(3, "coverage and exclusivity", || coverage_suite(&all));
    ok &= run(4, "kernel soundness", || kernel_soundness(dumbbell));
    ok &= run(5, "Bézier cell counts", cell_counts);
    ok &= run(6, "tile regularity", || regularity(&all));
    ok &= run(7, "statistics report shape", || stats_shape(&fig10));
    if !ok {
        std::process::exit(1);
    }
}
