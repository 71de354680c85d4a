//! Parameter recovery for spline maps by damped least squares.

use crate::linalg::lu_solve;
use crate::Spline;

#[derive(Clone, Debug, PartialEq)]
pub struct Solve {
    pub params: Vec<f64>,
    /// Euclidean norm of `m(params) - target`.
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes `|m(x) - target|` over the domain box of `m` from `seed`.
/// Works for square systems (inversion) as well as over-determined ones
/// (closest point). Iterations run inside one polynomial element at a time
/// and move to a neighbouring element when the minimizer presses against a
/// shared face.
pub fn solve_ls(m: &Spline, target: &[f64], seed: &[f64], tol: f64, iters: usize) -> Solve {
    let n = m.dim_in();
    let q = m.dim_out();
    let breaks: Vec<Vec<f64>> = (0..n).map(|a| m.basis(a).breakpoints()).collect();
    let mut elem: Vec<usize> = (0..n)
        .map(|a| {
            let br = &breaks[a];
            let x = seed[a];
            (0..br.len() - 1).rev().find(|i| br[*i] <= x).unwrap_or(0)
        })
        .collect();
    let mut visited: Vec<Vec<usize>> = Vec::new();
    let mut x = seed.to_vec();
    let mut best: Option<Solve> = None;
    for _ in 0..64 {
        if visited.contains(&elem) {
            break;
        }
        visited.push(elem.clone());
        let lo: Vec<f64> = (0..n).map(|a| breaks[a][elem[a]]).collect();
        let hi: Vec<f64> = (0..n).map(|a| breaks[a][elem[a] + 1]).collect();
        let r = solve_box(m, target, &x, &lo, &hi, tol, iters);
        x = r.params.clone();
        let done = r.residual <= tol;
        if best.as_ref().is_none_or(|b| r.residual < b.residual) {
            best = Some(r);
        }
        if done {
            break;
        }
        let (val, jac) = m.eval_jacobian(&x);
        let mut moved = false;
        for a in 0..n {
            let g: f64 = (0..q).map(|k| jac[k * n + a] * (target[k] - val[k])).sum();
            let eps = 1e-12 * (hi[a] - lo[a]);
            if x[a] <= lo[a] + eps && g < 0.0 && elem[a] > 0 {
                elem[a] -= 1;
                moved = true;
            } else if x[a] >= hi[a] - eps && g > 0.0 && elem[a] + 2 < breaks[a].len() {
                elem[a] += 1;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    best.expect("at least one element visited")
}

/// [`solve_ls`] restricted to the box `[lo, hi]`, without element hopping.
pub fn solve_box(m: &Spline, target: &[f64], seed: &[f64], lo: &[f64], hi: &[f64], tol: f64, iters: usize) -> Solve {
    let n = m.dim_in();
    let q = m.dim_out();
    let clamp = |x: &mut Vec<f64>| {
        for a in 0..n {
            x[a] = x[a].clamp(lo[a], hi[a]);
        }
    };
    let mut x = seed.to_vec();
    clamp(&mut x);
    let (mut val, mut jac) = m.eval_jacobian(&x);
    let mut r: Vec<f64> = (0..q).map(|k| target[k] - val[k]).collect();
    let mut res = norm(&r);
    let mut mu = 1e-9;
    for _ in 0..iters {
        if res <= tol {
            break;
        }
        // normal equations (J^T J + mu diag) dx = J^T r
        let mut jtj = vec![0.0; n * n];
        let mut jtr = vec![0.0; n];
        for i in 0..n {
            for k in 0..q {
                jtr[i] += jac[k * n + i] * r[k];
            }
            for j in 0..n {
                jtj[i * n + j] = (0..q).map(|k| jac[k * n + i] * jac[k * n + j]).sum();
            }
        }
        // variables held at a bound by a descent direction pointing outwards
        for i in 0..n {
            let span = hi[i] - lo[i];
            let at_lo = x[i] <= lo[i] + 1e-15 * span && jtr[i] < 0.0;
            let at_hi = x[i] >= hi[i] - 1e-15 * span && jtr[i] > 0.0;
            if at_lo || at_hi {
                for j in 0..n {
                    jtj[i * n + j] = 0.0;
                    jtj[j * n + i] = 0.0;
                }
                jtj[i * n + i] = 1.0;
                jtr[i] = 0.0;
            }
        }
        let scale = (0..n).map(|i| jtj[i * n + i]).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[i * n + i] += mu * scale.max(a[i * n + i]);
            }
            let mut dx = jtr.clone();
            if lu_solve(&mut a, n, &mut dx, 1).is_err() {
                mu *= 10.0;
                continue;
            }
            let mut xn: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            clamp(&mut xn);
            let (vn, jn) = m.eval_jacobian(&xn);
            let rn: Vec<f64> = (0..q).map(|k| target[k] - vn[k]).collect();
            let resn = norm(&rn);
            if resn < res {
                x = xn;
                val = vn;
                jac = jn;
                r = rn;
                res = resn;
                mu = (mu * 0.1).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let _ = val;
    Solve { params: x, residual: res }
}

/// Parameter grid of `k` samples per axis over the domain of `m`, at
/// cell centers.
pub fn seed_grid(m: &Spline, k: usize) -> Vec<Vec<f64>> {
    let n = m.dim_in();
    let lo = m.domain_lo();
    let hi = m.domain_hi();
    let total = k.pow(n as u32);
    (0..total)
        .map(|mut f| {
            let mut x = vec![0.0; n];
            for a in (0..n).rev() {
                let i = f % k;
                f /= k;
                x[a] = lo[a] + (hi[a] - lo[a]) * (i as f64 + 0.5) / k as f64;
            }
            x
        })
        .collect()
}

/// Closest point search from the best few seeds of a `k`-grid.
pub fn closest(m: &Spline, target: &[f64], k: usize, starts: usize, tol: f64) -> Solve {
    let mut seeds: Vec<(f64, Vec<f64>)> = seed_grid(m, k)
        .into_iter()
        .map(|s| {
            let v = m.eval_clamped(&s);
            let d = v.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            (d, s)
        })
        .collect();
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    // best seeds from distinct polynomial elements
    let breaks: Vec<Vec<f64>> = (0..m.dim_in()).map(|a| m.basis(a).breakpoints()).collect();
    let elem = |s: &[f64]| -> Vec<usize> {
        s.iter().zip(&breaks).map(|(x, br)| br.iter().filter(|b| **b <= *x).count()).collect()
    };
    let mut taken: Vec<Vec<usize>> = Vec::new();
    let mut chosen = Vec::new();
    for (_, s) in seeds {
        let e = elem(&s);
        if !taken.contains(&e) {
            taken.push(e);
            chosen.push(s);
            if chosen.len() >= starts.max(1) {
                break;
            }
        }
    }
    let mut best: Option<Solve> = None;
    for s in chosen {
        let r = solve_ls(m, target, &s, tol, 60);
        if best.as_ref().is_none_or(|b| r.residual < b.residual) {
            best = Some(r);
        }
    }
    best.expect("at least one seed")
}
