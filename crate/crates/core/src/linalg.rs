//! Small dense linear algebra: LU solves, Householder least squares and a
//! tableau simplex for tiny linear programs. Matrices are row-major slices.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves `a * x = b` in place (`a` is `n x n`, `b` is `n x k`); `b` receives `x`.
pub fn lu_solve<F: Real>(a: &mut [F], n: usize, b: &mut [F], k: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n * k);
    let scale = a.iter().fold(F::zero(), |m, v| m.max(v.abs()));
    let tiny = scale * F::epsilon() * F::of(n.max(1));
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= tiny || !best.is_finite() {
            return Err(Error::Shape(format!("singular {n}x{n} system")));
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            for j in 0..k {
                b.swap(col * k + j, piv * k + j);
            }
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == F::zero() {
                continue;
            }
            a[r * n + col] = F::zero();
            for j in col + 1..n {
                let v = a[col * n + j];
                a[r * n + j] -= f * v;
            }
            for j in 0..k {
                let v = b[col * k + j];
                b[r * k + j] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let d = a[col * n + col];
        for j in 0..k {
            let mut s = b[col * k + j];
            for c in col + 1..n {
                s -= a[col * n + c] * b[c * k + j];
            }
            b[col * k + j] = s / d;
        }
    }
    Ok(())
}

/// Least-squares solution of `a * x ~= b` with `a` of size `m x n` (`m >= n`)
/// and `b` of size `m x k`, by Householder QR. Returns `x` (`n x k`).
pub fn lstsq<F: Real>(a: &[F], m: usize, n: usize, b: &[F], k: usize) -> Result<Vec<F>> {
    if m < n {
        return Err(Error::Shape(format!("underdetermined least squares {m}x{n}")));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    let scale = a.iter().fold(F::zero(), |m, v| m.max(v.abs()));
    for col in 0..n {
        let mut norm = F::zero();
        for r in col..m {
            norm += a[r * n + col] * a[r * n + col];
        }
        let norm = norm.sqrt();
        if norm <= scale * F::epsilon() * F::of(m) {
            return Err(Error::Shape("rank-deficient least squares".into()));
        }
        let alpha = if a[col * n + col] > F::zero() { -norm } else { norm };
        let mut v: Vec<F> = (col..m).map(|r| a[r * n + col]).collect();
        v[0] -= alpha;
        let vnorm2: F = v.iter().map(|x| *x * *x).sum();
        if vnorm2 == F::zero() {
            continue;
        }
        let two = F::lit(2.0);
        for j in col..n {
            let mut d = F::zero();
            for (i, vi) in v.iter().enumerate() {
                d += *vi * a[(col + i) * n + j];
            }
            let f = two * d / vnorm2;
            for (i, vi) in v.iter().enumerate() {
                a[(col + i) * n + j] -= f * *vi;
            }
        }
        for j in 0..k {
            let mut d = F::zero();
            for (i, vi) in v.iter().enumerate() {
                d += *vi * b[(col + i) * k + j];
            }
            let f = two * d / vnorm2;
            for (i, vi) in v.iter().enumerate() {
                b[(col + i) * k + j] -= f * *vi;
            }
        }
    }
    let mut x = vec![F::zero(); n * k];
    for row in (0..n).rev() {
        let d = a[row * n + row];
        for j in 0..k {
            let mut s = b[row * k + j];
            for c in row + 1..n {
                s -= a[row * n + c] * x[c * k + j];
            }
            x[row * k + j] = s / d;
        }
    }
    Ok(x)
}

/// Maximizes `c . x` subject to `a x <= b`, `x >= 0`, where every `b_i >= 0`
/// (so the origin is feasible). Returns `None` when unbounded.
pub fn simplex_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = c.len();
    let m = a.len();
    assert!(b.iter().all(|v| *v >= 0.0), "origin must be feasible");
    // tableau rows: m constraints + objective; columns: n vars + m slacks + rhs
    let w = n + m + 1;
    let mut t = vec![0.0; (m + 1) * w];
    for i in 0..m {
        for j in 0..n {
            t[i * w + j] = a[i][j];
        }
        t[i * w + n + i] = 1.0;
        t[i * w + w - 1] = b[i];
    }
    for j in 0..n {
        t[m * w + j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let eps = 1e-12;
    for _ in 0..50 * (n + m) {
        // Bland's rule: lowest-index improving column
        let Some(col) = (0..n + m).find(|&j| t[m * w + j] < -eps) else {
            let mut x = vec![0.0; n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = t[i * w + w - 1];
                }
            }
            return Some(x);
        };
        let mut row = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let aij = t[i * w + col];
            if aij > eps {
                let ratio = t[i * w + w - 1] / aij;
                if ratio < best - 1e-15
                    || (ratio <= best + 1e-15 && row.is_some_and(|r: usize| basis[i] < basis[r]))
                {
                    best = ratio;
                    row = Some(i);
                }
            }
        }
        let row = row?;
        let p = t[row * w + col];
        for j in 0..w {
            t[row * w + j] /= p;
        }
        for i in 0..=m {
            if i == row {
                continue;
            }
            let f = t[i * w + col];
            if f != 0.0 {
                for j in 0..w {
                    t[i * w + j] -= f * t[row * w + j];
                }
            }
        }
        basis[row] = col;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let mut a = vec![2.0f64, 1.0, 1.0, 3.0];
        let mut b = vec![3.0, 5.0];
        lu_solve(&mut a, 2, &mut b, 1).unwrap();
        assert!((b[0] - 0.8).abs() < 1e-14 && (b[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn lu_detects_singular() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 1.0];
        assert!(lu_solve(&mut a, 2, &mut b, 1).is_err());
    }

    #[test]
    fn lstsq_fits_line() {
        // y = 1 + 2x sampled exactly
        let xs = [0.0, 1.0, 2.0, 3.0];
        let a: Vec<f64> = xs.iter().flat_map(|x| [1.0, *x]).collect();
        let b: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x).collect();
        let sol = lstsq(&a, 4, 2, &b, 1).unwrap();
        assert!((sol[0] - 1.0).abs() < 1e-12 && (sol[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_matches_vertex_enumeration() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6
        let x = simplex_max(&[1.0, 1.0], &[vec![1.0, 2.0], vec![3.0, 1.0]], &[4.0, 6.0]).unwrap();
        assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn simplex_reports_unbounded() {
        assert!(simplex_max(&[1.0, 0.0], &[vec![-1.0, 1.0]], &[1.0]).is_none());
    }
}
