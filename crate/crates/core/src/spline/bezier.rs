//! Bernstein-basis arithmetic on single Bézier pieces.

use crate::scalar::Real;

use super::map::{unflatten, SplineMap};

pub fn binomial<F: Real>(n: usize, k: usize) -> F {
    if k > n {
        return F::zero();
    }
    let k = k.min(n - k);
    let mut r = F::one();
    for i in 0..k {
        r = r * F::of(n - i) / F::of(i + 1);
    }
    r
}

/// Degree elevation of one fiber of `d + 1` vectors (each `inner` long) by `by`.
pub(crate) fn elevate_fiber<F: Real>(fib: &[F], inner: usize, d: usize, by: usize) -> Vec<F> {
    let e = d + by;
    let mut out = vec![F::zero(); (e + 1) * inner];
    for i in 0..=e {
        let lo = i.saturating_sub(by);
        let hi = i.min(d);
        let ce: F = binomial(e, i);
        for j in lo..=hi {
            let w = binomial::<F>(d, j) * binomial::<F>(by, i - j) / ce;
            for r in 0..inner {
                out[i * inner + r] += w * fib[j * inner + r];
            }
        }
    }
    out
}

/// Product of two scalar Bernstein tensors of degrees `da`, `db` (same
/// number of axes); returns coefficients of degree `da + db`.
pub(crate) fn product_tensor<F: Real>(a: &[F], da: &[usize], b: &[F], db: &[usize]) -> Vec<F> {
    let n = da.len();
    let sa: Vec<usize> = da.iter().map(|d| d + 1).collect();
    let sb: Vec<usize> = db.iter().map(|d| d + 1).collect();
    let dc: Vec<usize> = (0..n).map(|k| da[k] + db[k]).collect();
    let sc: Vec<usize> = dc.iter().map(|d| d + 1).collect();
    // pre-scale by binomials so the convolution is plain
    let wa: Vec<F> = (0..a.len())
        .map(|f| {
            let idx = unflatten(f, &sa);
            (0..n).fold(a[f], |acc, k| acc * binomial::<F>(da[k], idx[k]))
        })
        .collect();
    let wb: Vec<F> = (0..b.len())
        .map(|f| {
            let idx = unflatten(f, &sb);
            (0..n).fold(b[f], |acc, k| acc * binomial::<F>(db[k], idx[k]))
        })
        .collect();
    let total: usize = sc.iter().product();
    let mut c = vec![F::zero(); total];
    for (fa, va) in wa.iter().enumerate() {
        if *va == F::zero() {
            continue;
        }
        let ia = unflatten(fa, &sa);
        for (fb, vb) in wb.iter().enumerate() {
            let ib = unflatten(fb, &sb);
            let fc = (0..n).fold(0, |acc, k| acc * sc[k] + ia[k] + ib[k]);
            c[fc] += *va * *vb;
        }
    }
    for (fc, v) in c.iter_mut().enumerate() {
        let idx = unflatten(fc, &sc);
        let w = (0..n).fold(F::one(), |acc, k| acc * binomial::<F>(dc[k], idx[k]));
        *v /= w;
    }
    c
}

/// Monomial coefficients (in the local variable on `[0,1]` per axis) of a
/// Bézier map, same layout as its control points.
pub(crate) fn to_monomial<F: Real>(m: &SplineMap<F>) -> Vec<F> {
    let mut cur = m.clone();
    for axis in 0..m.dim_in() {
        let d = m.basis(axis).degree();
        let kv = m.basis(axis).clone();
        cur = cur.map_fibers(axis, kv, |fib, inner| {
            // a_k = C(d,k) sum_{i<=k} (-1)^{k-i} C(k,i) b_i
            let mut out = vec![F::zero(); (d + 1) * inner];
            for k in 0..=d {
                let ck: F = binomial(d, k);
                for i in 0..=k {
                    let s = if (k - i) % 2 == 0 { F::one() } else { -F::one() };
                    let w = ck * binomial::<F>(k, i) * s;
                    for r in 0..inner {
                        out[k * inner + r] += w * fib[i * inner + r];
                    }
                }
            }
            out
        });
    }
    cur.coeffs().to_vec()
}

/// Divides a scalar Bézier tensor by the linear factor vanishing on one face:
/// `t` (side 0) or `1 - t` (side 1) along `axis`. The face row is assumed zero.
pub(crate) fn deflate<F: Real>(c: &[F], degs: &[usize], axis: usize, side: usize) -> (Vec<F>, Vec<usize>) {
    let n = degs.len();
    let d = degs[axis];
    assert!(d >= 1);
    let shape: Vec<usize> = degs.iter().map(|x| x + 1).collect();
    let mut nd = degs.to_vec();
    nd[axis] = d - 1;
    let nshape: Vec<usize> = nd.iter().map(|x| x + 1).collect();
    let total: usize = nshape.iter().product();
    let mut out = vec![F::zero(); total];
    for (f, v) in out.iter_mut().enumerate() {
        let mut idx = unflatten(f, &nshape);
        let j = idx[axis];
        // t * B^{d-1}_j = (j+1)/d * B^d_{j+1};  (1-t) * B^{d-1}_j = (d-j)/d * B^d_j
        let (src, w) = if side == 0 {
            (j + 1, F::of(d) / F::of(j + 1))
        } else {
            (j, F::of(d) / F::of(d - j))
        };
        idx[axis] = src;
        let sf = (0..n).fold(0, |acc, k| acc * shape[k] + idx[k]);
        *v = c[sf] * w;
    }
    (out, nd)
}
