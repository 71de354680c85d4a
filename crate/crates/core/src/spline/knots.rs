use crate::error::{Error, Result};
use crate::scalar::Real;

/// Degree plus clamped, nondecreasing knot sequence of a univariate spline space.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector<F> {
    degree: usize,
    knots: Vec<F>,
}

impl<F: Real> KnotVector<F> {
    /// Validates clamping and ordering. Interior multiplicity may reach
    /// `degree + 1`, which admits piecewise spaces that are discontinuous at
    /// that knot (derivatives of C0 maps need this).
    pub fn new(degree: usize, knots: Vec<F>) -> Result<Self> {
        let kv = Self { degree, knots };
        kv.validate(degree + 1)?;
        Ok(kv)
    }

    /// Like [`KnotVector::new`] but also requires interior multiplicity `<= degree`.
    pub fn new_continuous(degree: usize, knots: Vec<F>) -> Result<Self> {
        let kv = Self { degree, knots };
        kv.validate(degree.max(1))?;
        Ok(kv)
    }

    fn validate(&self, max_interior: usize) -> Result<()> {
        let d = self.degree;
        let k = &self.knots;
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::Knots("non-finite knot".into()));
        }
        if k.len() < 2 * (d + 1) {
            return Err(Error::Knots(format!(
                "{} knots is too few for degree {d}",
                k.len()
            )));
        }
        if k.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Knots("knots must be nondecreasing".into()));
        }
        let lo = k[0];
        let hi = k[k.len() - 1];
        if !(hi > lo) {
            return Err(Error::Knots("empty parametric domain".into()));
        }
        if k[..=d].iter().any(|v| *v != lo) || k[k.len() - d - 1..].iter().any(|v| *v != hi) {
            return Err(Error::Knots(format!(
                "ends must be clamped (repeated {} times)",
                d + 1
            )));
        }
        let interior = &k[d + 1..k.len() - d - 1];
        let mut i = 0;
        while i < interior.len() {
            let mut j = i;
            while j < interior.len() && interior[j] == interior[i] {
                j += 1;
            }
            if interior[i] == lo || interior[i] == hi {
                return Err(Error::Knots("interior knot equals a domain end".into()));
            }
            if j - i > max_interior {
                return Err(Error::Knots(format!(
                    "interior knot multiplicity {} exceeds {max_interior}",
                    j - i
                )));
            }
            i = j;
        }
        Ok(())
    }

    /// Single-span (Bézier) knot vector on `[lo, hi]`.
    pub fn bezier(degree: usize, lo: F, hi: F) -> Self {
        let mut knots = vec![lo; degree + 1];
        knots.extend(std::iter::repeat_n(hi, degree + 1));
        Self { degree, knots }
    }

    /// Clamped uniform knot vector with `n_ctrl` control points.
    pub fn uniform(degree: usize, n_ctrl: usize, lo: F, hi: F) -> Result<Self> {
        if n_ctrl < degree + 1 {
            return Err(Error::Knots(format!(
                "{n_ctrl} control points is too few for degree {degree}"
            )));
        }
        let spans = n_ctrl - degree;
        let mut knots = vec![lo; degree + 1];
        for s in 1..spans {
            knots.push(lo + (hi - lo) * F::of(s) / F::of(spans));
        }
        knots.extend(std::iter::repeat_n(hi, degree + 1));
        Self::new(degree, knots)
    }

    /// Knot vector with the given breakpoints (ends included), each interior
    /// breakpoint repeated `mult` times.
    pub fn from_breaks(degree: usize, breaks: &[F], mult: usize) -> Result<Self> {
        let n = breaks.len();
        if n < 2 {
            return Err(Error::Knots("need at least two breakpoints".into()));
        }
        let mut knots = vec![breaks[0]; degree + 1];
        for b in &breaks[1..n - 1] {
            knots.extend(std::iter::repeat_n(*b, mult));
        }
        knots.extend(std::iter::repeat_n(breaks[n - 1], degree + 1));
        Self::new(degree, knots)
    }

    pub(crate) fn from_raw(degree: usize, knots: Vec<F>) -> Self {
        Self { degree, knots }
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn knots(&self) -> &[F] {
        &self.knots
    }

    /// Number of basis functions (control points along this axis).
    #[inline]
    pub fn num_ctrl(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    #[inline]
    pub fn domain(&self) -> (F, F) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    #[inline]
    pub fn span_len(&self) -> F {
        let (lo, hi) = self.domain();
        hi - lo
    }

    /// Tolerance under which two knot values are considered equal.
    pub fn knot_tol(&self) -> F {
        F::lit(1e-9) * self.span_len()
    }

    pub fn is_bezier(&self) -> bool {
        self.num_ctrl() == self.degree + 1
    }

    /// Distinct knot values, ends included.
    pub fn breakpoints(&self) -> Vec<F> {
        let mut out: Vec<F> = Vec::new();
        for k in &self.knots {
            if out.last() != Some(k) {
                out.push(*k);
            }
        }
        out
    }

    /// Distinct interior knots with their multiplicities.
    pub fn interior_knots(&self) -> Vec<(F, usize)> {
        let d = self.degree;
        let mut out: Vec<(F, usize)> = Vec::new();
        for k in &self.knots[d + 1..self.knots.len() - d - 1] {
            match out.last_mut() {
                Some((v, m)) if *v == *k => *m += 1,
                _ => out.push((*k, 1)),
            }
        }
        out
    }

    pub fn multiplicity(&self, t: F) -> usize {
        self.knots.iter().filter(|k| **k == t).count()
    }

    /// Validates `t` against the domain, snapping values within tolerance of an end.
    pub fn check_param(&self, t: F) -> Result<F> {
        let (lo, hi) = self.domain();
        let tol = self.knot_tol();
        if t.is_nan() || t < lo - tol || t > hi + tol {
            return Err(Error::domain(t.to_f64_lossy(), lo.to_f64_lossy(), hi.to_f64_lossy()));
        }
        Ok(t.max(lo).min(hi))
    }

    /// Index `s` with `knots[s] <= t < knots[s+1]` (last nonempty span at the upper end).
    pub fn find_span(&self, t: F) -> usize {
        let n = self.num_ctrl();
        let d = self.degree;
        if t >= self.knots[n] {
            // last nonempty span
            let mut s = n - 1;
            while s > d && self.knots[s] == self.knots[s + 1] {
                s -= 1;
            }
            return s;
        }
        if t <= self.knots[d] {
            let mut s = d;
            while self.knots[s + 1] == self.knots[s] {
                s += 1;
            }
            return s;
        }
        // binary search over [d, n)
        let (mut lo, mut hi) = (d, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if t < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// The `degree + 1` nonzero basis values at `t` in span `span` (Cox–de Boor).
    pub fn basis_funs(&self, span: usize, t: F) -> Vec<F> {
        let d = self.degree;
        let k = &self.knots;
        let mut n = vec![F::zero(); d + 1];
        let mut left = vec![F::zero(); d + 1];
        let mut right = vec![F::zero(); d + 1];
        n[0] = F::one();
        for j in 1..=d {
            left[j] = t - k[span + 1 - j];
            right[j] = k[span + j] - t;
            let mut saved = F::zero();
            for r in 0..j {
                let tmp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            n[j] = saved;
        }
        n
    }

    /// Basis values and first `nd` derivatives at `t`; `out[k][j]` is the
    /// k-th derivative of basis `span - degree + j`.
    pub fn basis_ders(&self, span: usize, t: F, nd: usize) -> Vec<Vec<F>> {
        let p = self.degree;
        let k = &self.knots;
        let mut ndu = vec![vec![F::zero(); p + 1]; p + 1];
        let mut left = vec![F::zero(); p + 1];
        let mut right = vec![F::zero(); p + 1];
        ndu[0][0] = F::one();
        for j in 1..=p {
            left[j] = t - k[span + 1 - j];
            right[j] = k[span + j] - t;
            let mut saved = F::zero();
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let tmp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![F::zero(); p + 1]; nd + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![F::zero(); p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = F::one();
            for kk in 1..=nd.min(p) {
                let mut dsum = F::zero();
                let rk = r as isize - kk as isize;
                let pk = p - kk;
                if r >= kk {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    dsum = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize) - 1 <= pk as isize { kk - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    dsum += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][r];
                    dsum += a[s2][kk] * ndu[r][pk];
                }
                ders[kk][r] = dsum;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = F::of(p);
        for kk in 1..=nd.min(p) {
            for v in ders[kk].iter_mut() {
                *v *= fac;
            }
            fac *= F::of(p.saturating_sub(kk));
        }
        ders
    }

    /// Value of basis function `i` at `t`.
    pub fn eval_basis(&self, i: usize, t: F) -> Result<F> {
        let n = self.num_ctrl();
        if i >= n {
            return Err(Error::Index { index: i, count: n });
        }
        let t = self.check_param(t)?;
        let span = self.find_span(t);
        let d = self.degree;
        if i + d < span || i > span {
            return Ok(F::zero());
        }
        Ok(self.basis_funs(span, t)[i + d - span])
    }

    /// Knot vector with affinely remapped domain `[lo, hi]`.
    pub fn reparam(&self, lo: F, hi: F) -> Self {
        let (a, b) = self.domain();
        let s = (hi - lo) / (b - a);
        let mut knots: Vec<F> = self.knots.iter().map(|k| lo + (*k - a) * s).collect();
        // exact ends
        let d = self.degree;
        let len = knots.len();
        for k in knots[..=d].iter_mut() {
            *k = lo;
        }
        for k in knots[len - d - 1..].iter_mut() {
            *k = hi;
        }
        Self { degree: self.degree, knots }
    }

    /// Mirror image `t -> lo + hi - t`.
    pub fn reversed(&self) -> Self {
        let (lo, hi) = self.domain();
        let knots = self.knots.iter().rev().map(|k| lo + hi - *k).collect();
        Self { degree: self.degree, knots }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook recursive Cox–de Boor, independent of `basis_funs`.
    fn naive(k: &[f64], i: usize, d: usize, t: f64) -> f64 {
        if d == 0 {
            let last = k[k.len() - 1];
            if (k[i] <= t && t < k[i + 1]) || (t == last && k[i] < t && k[i + 1] == last) {
                return 1.0;
            }
            return 0.0;
        }
        let mut v = 0.0;
        if k[i + d] > k[i] {
            v += (t - k[i]) / (k[i + d] - k[i]) * naive(k, i, d - 1, t);
        }
        if k[i + d + 1] > k[i + 1] {
            v += (k[i + d + 1] - t) / (k[i + d + 1] - k[i + 1]) * naive(k, i + 1, d - 1, t);
        }
        v
    }

    #[test]
    fn bernstein_values() {
        let kv = KnotVector::new(2, vec![0.0f64, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(kv.eval_basis(0, 0.0).unwrap(), 1.0);
        assert!((kv.eval_basis(1, 0.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn matches_recursive_oracle() {
        let k = vec![0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0];
        let kv = KnotVector::new(2, k.clone()).unwrap();
        let expect = naive(&k, 1, 2, 0.25);
        // frozen from the recursive oracle: 0.5*0.25/0.5*(...)  = 0.625
        assert!((expect - 0.625).abs() < 1e-15);
        assert!((kv.eval_basis(1, 0.25).unwrap() - expect).abs() < 1e-15);
        for i in 0..kv.num_ctrl() {
            for s in 0..=20 {
                let t = s as f64 / 20.0;
                let a = kv.eval_basis(i, t).unwrap();
                assert!((a - naive(&k, i, 2, t)).abs() < 1e-14, "i={i} t={t}");
            }
        }
    }

    #[test]
    fn errors() {
        let kv = KnotVector::<f64>::bezier(2, 0.0, 1.0);
        assert!(matches!(kv.eval_basis(0, 1.5), Err(Error::Domain { .. })));
        assert!(matches!(kv.eval_basis(3, 0.5), Err(Error::Index { .. })));
        assert!(KnotVector::new(2, vec![0.0, 0.0, 1.0, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.5, 0.5, 1.0, 1.0]).is_ok());
        assert!(KnotVector::new_continuous(1, vec![0.0, 0.0, 0.5, 0.5, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.6, 0.5, 1.0, 1.0]).is_err());
    }

    #[test]
    fn derivative_basis_matches_difference() {
        let kv = KnotVector::new(3, vec![0.0f64, 0.0, 0.0, 0.0, 0.3, 0.7, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let t = 0.41;
        let h = 1e-6;
        let s = kv.find_span(t);
        let d = kv.basis_ders(s, t, 1);
        let p = kv.basis_funs(s, t + h);
        let m = kv.basis_funs(s, t - h);
        for j in 0..4 {
            assert!((d[1][j] - (p[j] - m[j]) / (2.0 * h)).abs() < 1e-6);
            assert!((d[0][j] - kv.basis_funs(s, t)[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn f32_partition_of_unity() {
        let kv = KnotVector::<f32>::uniform(3, 7, 0.0, 2.0).unwrap();
        let s = kv.find_span(1.3);
        let sum: f32 = kv.basis_funs(s, 1.3).iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }
}
