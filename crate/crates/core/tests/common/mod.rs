#![allow(dead_code)]

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use trivar::config::Tol;
use trivar::membership::TileIndex;
use trivar::raycast::{Location, ShellLocator};
use trivar::trim::{Shell, TrimmedSurface};
use trivar::untrim::UntrimResult;
use trivar::Config;

#[derive(Debug, Default, Clone, Copy)]
pub struct Coverage {
    pub probes: usize,
    pub on_shell: usize,
    pub inside: usize,
    pub failures: usize,
    /// Failures not explained by closeness to a tile interface.
    pub unexplained: usize,
}

impl Coverage {
    pub fn ok(&self) -> bool {
        self.unexplained == 0 && (self.failures as f64) < 1e-3 * self.probes as f64
    }
}

/// Uniform probes in the source box: points inside the shell must lie in
/// exactly one tile, points outside in none.
pub fn coverage(r: &UntrimResult, n: usize, seed: u64) -> Coverage {
    Prober::new(r).run(n, seed)
}

/// Like [`coverage`], but keeps drawing probes until `n_inside` of them
/// fell inside the shell.
pub fn interior_coverage(r: &UntrimResult, n_inside: usize, seed: u64) -> Coverage {
    let prober = Prober::new(r);
    let mut total = Coverage::default();
    let mut round = 0;
    while total.inside < n_inside {
        let c = prober.run(20_000, seed.wrapping_mul(1_000_003).wrapping_add(round));
        total.probes += c.probes;
        total.on_shell += c.on_shell;
        total.inside += c.inside;
        total.failures += c.failures;
        total.unexplained += c.unexplained;
        round += 1;
    }
    total
}

struct Prober {
    lo: [f64; 3],
    hi: [f64; 3],
    tol: Tol,
    shell: ShellLocator,
    index: TileIndex,
}

impl Prober {
    fn new(r: &UntrimResult) -> Self {
        let cfg = Config::default();
        let (lo, hi) = r.source.param_box();
        let tol = Tol::new(&cfg, &lo, &hi);
        let shell = ShellLocator::new(&r.source.shell, &cfg);
        let index = TileIndex::new(&r.tiles);
        Prober { lo, hi, tol, shell, index }
    }

    fn run(&self, n: usize, seed: u64) -> Coverage {
        let (lo, hi) = (self.lo, self.hi);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| std::array::from_fn(|a| lo[a] + (hi[a] - lo[a]) * rng.random::<f64>()))
            .collect();
        let per: Vec<(u8, u8, u8, u8)> = pts
            .par_iter()
            .map(|p| {
                let loc = self.shell.locate(p);
                if loc == Location::Boundary {
                    return (1, 0, 0, 0);
                }
                let hits = self.index.locate(p);
                let want = usize::from(loc == Location::Inside);
                if hits.len() == want {
                    return (0, want as u8, 0, 0);
                }
                let near = hits.iter().any(|h| h.boundary_dist <= self.tol.geo);
                (0, want as u8, 1, u8::from(!near))
            })
            .collect();
        let mut c = Coverage { probes: n, ..Coverage::default() };
        for (b, i, f, u) in per {
            c.on_shell += b as usize;
            c.inside += i as usize;
            c.failures += f as usize;
            c.unexplained += u as usize;
        }
        c
    }
}

/// Rigid translation of every surface of a shell.
pub fn translate_shell(shell: &Shell, v: [f64; 3]) -> Shell {
    Shell::new(
        shell
            .surfaces
            .iter()
            .map(|s| TrimmedSurface {
                base: s.base.map_points(3, |p| vec![p[0] + v[0], p[1] + v[1], p[2] + v[2]]),
                loops: s.loops.clone(),
                inward: s.inward,
            })
            .collect(),
    )
}
