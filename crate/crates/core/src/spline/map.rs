use crate::error::{Error, Result};
use crate::scalar::Real;

use super::bezier;
use super::knots::KnotVector;

/// Tensor-product B-spline map from a 1-, 2- or 3-dimensional parametric box
/// into `R^dim_out`.
///
/// Control coefficients are stored densely, row-major over the control grid
/// (axis 0 slowest), each grid entry holding `dim_out` consecutive scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineMap<F> {
    bases: Vec<KnotVector<F>>,
    dim_out: usize,
    coeffs: Vec<F>,
}

/// Row-major grid of Bézier pieces produced by extraction.
#[derive(Clone, Debug)]
pub struct BezierGrid<F> {
    pub counts: Vec<usize>,
    pub pieces: Vec<SplineMap<F>>,
}

impl<F: Real> SplineMap<F> {
    pub fn new(bases: Vec<KnotVector<F>>, dim_out: usize, coeffs: Vec<F>) -> Result<Self> {
        if bases.is_empty() || bases.len() > 3 {
            return Err(Error::Shape(format!("{} parametric axes", bases.len())));
        }
        if dim_out == 0 {
            return Err(Error::Shape("zero-dimensional range".into()));
        }
        let expect: usize = bases.iter().map(|b| b.num_ctrl()).product::<usize>() * dim_out;
        if coeffs.len() != expect {
            return Err(Error::Shape(format!(
                "{} coefficients, control grid needs {expect}",
                coeffs.len()
            )));
        }
        Ok(Self { bases, dim_out, coeffs })
    }

    /// Bézier map of the given degrees over `[0,1]^n`.
    pub fn bezier(degrees: &[usize], dim_out: usize, coeffs: Vec<F>) -> Result<Self> {
        let bases = degrees
            .iter()
            .map(|d| KnotVector::bezier(*d, F::zero(), F::one()))
            .collect();
        Self::new(bases, dim_out, coeffs)
    }

    /// Trilinear/bilinear/linear identity map over the given box.
    pub fn identity_box(lo: &[F], hi: &[F]) -> Self {
        let n = lo.len();
        let bases: Vec<_> = (0..n).map(|a| KnotVector::bezier(1, lo[a], hi[a])).collect();
        let mut coeffs = Vec::with_capacity((1 << n) * n);
        for idx in 0..(1usize << n) {
            for a in 0..n {
                let bit = (idx >> (n - 1 - a)) & 1;
                coeffs.push(if bit == 0 { lo[a] } else { hi[a] });
            }
        }
        Self { bases, dim_out: n, coeffs }
    }

    #[inline]
    pub fn dim_in(&self) -> usize {
        self.bases.len()
    }

    #[inline]
    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    #[inline]
    pub fn bases(&self) -> &[KnotVector<F>] {
        &self.bases
    }

    #[inline]
    pub fn basis(&self, axis: usize) -> &KnotVector<F> {
        &self.bases[axis]
    }

    #[inline]
    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.degree()).collect()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.num_ctrl()).collect()
    }

    pub fn num_points(&self) -> usize {
        self.coeffs.len() / self.dim_out
    }

    pub fn point(&self, flat: usize) -> &[F] {
        &self.coeffs[flat * self.dim_out..(flat + 1) * self.dim_out]
    }

    pub fn points(&self) -> impl Iterator<Item = &[F]> {
        self.coeffs.chunks_exact(self.dim_out)
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let shape = self.shape();
        idx.iter().zip(&shape).fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn domain(&self, axis: usize) -> (F, F) {
        self.bases[axis].domain()
    }

    pub fn domain_lo(&self) -> Vec<F> {
        self.bases.iter().map(|b| b.domain().0).collect()
    }

    pub fn domain_hi(&self) -> Vec<F> {
        self.bases.iter().map(|b| b.domain().1).collect()
    }

    pub fn is_bezier(&self) -> bool {
        self.bases.iter().all(|b| b.is_bezier())
    }

    /// Checks that `params` lies in the domain; returns the snapped parameters.
    pub fn check_params(&self, params: &[F]) -> Result<Vec<F>> {
        if params.len() != self.dim_in() {
            return Err(Error::Shape(format!(
                "{} parameters for a {}-variate map",
                params.len(),
                self.dim_in()
            )));
        }
        params
            .iter()
            .zip(&self.bases)
            .map(|(t, b)| b.check_param(*t))
            .collect()
    }

    pub fn eval(&self, params: &[F]) -> Result<Vec<F>> {
        let p = self.check_params(params)?;
        let mut out = vec![F::zero(); self.dim_out];
        self.eval_into(&p, &mut out);
        Ok(out)
    }

    /// Evaluation with parameters clamped into the domain; no validation.
    pub fn eval_clamped(&self, params: &[F]) -> Vec<F> {
        let p: Vec<F> = params
            .iter()
            .zip(&self.bases)
            .map(|(t, b)| {
                let (lo, hi) = b.domain();
                t.max(lo).min(hi)
            })
            .collect();
        let mut out = vec![F::zero(); self.dim_out];
        self.eval_into(&p, &mut out);
        out
    }

    fn eval_into(&self, p: &[F], out: &mut [F]) {
        let n = self.dim_in();
        let mut spans = [0usize; 3];
        let mut funs: [Vec<F>; 3] = Default::default();
        for a in 0..n {
            spans[a] = self.bases[a].find_span(p[a]);
            funs[a] = self.bases[a].basis_funs(spans[a], p[a]);
        }
        self.accumulate(&spans[..n], &funs[..n], out);
    }

    fn accumulate(&self, spans: &[usize], funs: &[Vec<F>], out: &mut [F]) {
        let shape = self.shape();
        let q = self.dim_out;
        for o in out.iter_mut() {
            *o = F::zero();
        }
        match self.dim_in() {
            1 => {
                let d = self.bases[0].degree();
                for (j, b) in funs[0].iter().enumerate() {
                    let i = spans[0] - d + j;
                    for c in 0..q {
                        out[c] += *b * self.coeffs[i * q + c];
                    }
                }
            }
            2 => {
                let (d0, d1) = (self.bases[0].degree(), self.bases[1].degree());
                for (j0, b0) in funs[0].iter().enumerate() {
                    let i0 = spans[0] - d0 + j0;
                    for (j1, b1) in funs[1].iter().enumerate() {
                        let i1 = spans[1] - d1 + j1;
                        let w = *b0 * *b1;
                        let base = (i0 * shape[1] + i1) * q;
                        for c in 0..q {
                            out[c] += w * self.coeffs[base + c];
                        }
                    }
                }
            }
            _ => {
                let (d0, d1, d2) = (
                    self.bases[0].degree(),
                    self.bases[1].degree(),
                    self.bases[2].degree(),
                );
                for (j0, b0) in funs[0].iter().enumerate() {
                    let i0 = spans[0] - d0 + j0;
                    for (j1, b1) in funs[1].iter().enumerate() {
                        let i1 = spans[1] - d1 + j1;
                        let w01 = *b0 * *b1;
                        for (j2, b2) in funs[2].iter().enumerate() {
                            let i2 = spans[2] - d2 + j2;
                            let w = w01 * *b2;
                            let base = ((i0 * shape[1] + i1) * shape[2] + i2) * q;
                            for c in 0..q {
                                out[c] += w * self.coeffs[base + c];
                            }
                        }
                    }
                }
            }
        }
    }

    /// Value and Jacobian (row-major `dim_out x dim_in`) at clamped parameters.
    pub fn eval_jacobian(&self, params: &[F]) -> (Vec<F>, Vec<F>) {
        let n = self.dim_in();
        let q = self.dim_out;
        let mut spans = [0usize; 3];
        let mut ders: [Vec<Vec<F>>; 3] = Default::default();
        for a in 0..n {
            let (lo, hi) = self.bases[a].domain();
            let t = params[a].max(lo).min(hi);
            spans[a] = self.bases[a].find_span(t);
            ders[a] = self.bases[a].basis_ders(spans[a], t, 1);
        }
        let mut value = vec![F::zero(); q];
        let mut jac = vec![F::zero(); q * n];
        let mut tmp = vec![F::zero(); q];
        let vals: Vec<Vec<F>> = (0..n).map(|a| ders[a][0].clone()).collect();
        self.accumulate(&spans[..n], &vals, &mut value);
        for d in 0..n {
            let funs: Vec<Vec<F>> = (0..n)
                .map(|a| if a == d { ders[a][1].clone() } else { ders[a][0].clone() })
                .collect();
            self.accumulate(&spans[..n], &funs, &mut tmp);
            for c in 0..q {
                jac[c * n + d] = tmp[c];
            }
        }
        (value, jac)
    }

    /// `(outer, n, inner)` so that coefficient `(o, i, r)` lives at `(o*n + i)*inner + r`.
    pub(crate) fn axis_layout(&self, axis: usize) -> (usize, usize, usize) {
        let shape = self.shape();
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product::<usize>() * self.dim_out;
        (outer, shape[axis], inner)
    }

    /// Rebuilds the coefficient tensor by applying `f` to every fiber along
    /// `axis`; `f` maps `n` vectors (each `inner` long, concatenated) to `m`.
    pub(crate) fn map_fibers(
        &self,
        axis: usize,
        new_basis: KnotVector<F>,
        f: impl Fn(&[F], usize) -> Vec<F>,
    ) -> Self {
        let (outer, n, inner) = self.axis_layout(axis);
        let m = new_basis.num_ctrl();
        let mut coeffs = Vec::with_capacity(outer * m * inner);
        for o in 0..outer {
            let fiber = &self.coeffs[o * n * inner..(o + 1) * n * inner];
            let out = f(fiber, inner);
            debug_assert_eq!(out.len(), m * inner);
            coeffs.extend(out);
        }
        let mut bases = self.bases.clone();
        bases[axis] = new_basis;
        Self { bases, dim_out: self.dim_out, coeffs }
    }

    /// Inserts `t` along `axis` `times` times (Boehm).
    pub fn insert_knot(&self, axis: usize, t: F, times: usize) -> Result<Self> {
        let kv = &self.bases[axis];
        let (lo, hi) = kv.domain();
        if !(t > lo && t < hi) {
            return Err(Error::domain(t.to_f64_lossy(), lo.to_f64_lossy(), hi.to_f64_lossy()));
        }
        let mut cur = self.clone();
        for _ in 0..times {
            cur = cur.insert_once(axis, t);
        }
        Ok(cur)
    }

    fn insert_once(&self, axis: usize, t: F) -> Self {
        let kv = &self.bases[axis];
        let d = kv.degree();
        let k = kv.knots();
        let span = kv.find_span(t);
        let s = kv.multiplicity(t);
        let mut knots = k.to_vec();
        knots.insert(span + 1, t);
        let new_kv = KnotVector::from_raw(d, knots);
        let n = kv.num_ctrl();
        let k = k.to_vec();
        self.map_fibers(axis, new_kv, |fib, inner| {
            let mut out = Vec::with_capacity((n + 1) * inner);
            for i in 0..=n {
                if i + d <= span {
                    out.extend_from_slice(&fib[i * inner..(i + 1) * inner]);
                } else if i + s > span {
                    out.extend_from_slice(&fib[(i - 1) * inner..i * inner]);
                } else {
                    let alpha = (t - k[i]) / (k[i + d] - k[i]);
                    for r in 0..inner {
                        out.push(alpha * fib[i * inner + r] + (F::one() - alpha) * fib[(i - 1) * inner + r]);
                    }
                }
            }
            out
        })
    }

    /// Splits the map at `t` along `axis` into two maps reproducing it exactly.
    pub fn subdivide(&self, axis: usize, t: F) -> Result<(Self, Self)> {
        let kv = &self.bases[axis];
        let (lo, hi) = kv.domain();
        let tol = kv.knot_tol();
        if !(t > lo + tol && t < hi - tol) {
            return Err(Error::domain(t.to_f64_lossy(), lo.to_f64_lossy(), hi.to_f64_lossy()));
        }
        // snap onto an existing knot within tolerance
        let t = kv
            .breakpoints()
            .into_iter()
            .find(|b| (*b - t).abs() <= tol)
            .unwrap_or(t);
        let d = kv.degree();
        let have = kv.multiplicity(t);
        let full = self.insert_knot(axis, t, (d + 1).saturating_sub(have))?;
        let fk = full.bases[axis].knots();
        let last_t = fk.iter().rposition(|k| *k == t).unwrap();
        let first_t = fk.iter().position(|k| *k == t).unwrap();
        let left_knots = fk[..=last_t].to_vec();
        let right_knots = fk[first_t..].to_vec();
        let lkv = KnotVector::from_raw(d, left_knots);
        let rkv = KnotVector::from_raw(d, right_knots);
        let nl = lkv.num_ctrl();
        let nr = rkv.num_ctrl();
        let left = full.map_fibers(axis, lkv, |fib, inner| fib[..nl * inner].to_vec());
        let right = full.map_fibers(axis, rkv, |fib, inner| fib[fib.len() - nr * inner..].to_vec());
        Ok((left, right))
    }

    /// Restriction of the map to `[lo, hi]` along `axis`.
    pub fn restrict(&self, axis: usize, lo: F, hi: F) -> Result<Self> {
        let (a, b) = self.domain(axis);
        let tol = self.bases[axis].knot_tol();
        let mut cur = self.clone();
        if lo > a + tol {
            cur = cur.subdivide(axis, lo)?.1;
        }
        if hi < b - tol {
            cur = cur.subdivide(axis, hi)?.0;
        }
        Ok(cur)
    }

    /// Splits at every interior breakpoint of every axis.
    pub fn bezier_extract(&self) -> BezierGrid<F> {
        let breaks: Vec<Vec<F>> = self.bases.iter().map(|b| b.breakpoints()).collect();
        self.extract_at(&breaks)
    }

    /// Splits at the given breakpoints (ends included) per axis; breakpoints
    /// need not be knots.
    pub fn extract_at(&self, breaks: &[Vec<F>]) -> BezierGrid<F> {
        let mut pieces = vec![self.clone()];
        let mut counts = Vec::with_capacity(self.dim_in());
        for (axis, br) in breaks.iter().enumerate() {
            let interior = &br[1..br.len() - 1];
            counts.push(interior.len() + 1);
            let mut next = Vec::with_capacity(pieces.len() * (interior.len() + 1));
            for p in pieces {
                let mut rest = p;
                for t in interior {
                    let (l, r) = rest.subdivide(axis, *t).expect("breakpoint inside domain");
                    next.push(l);
                    rest = r;
                }
                next.push(rest);
            }
            pieces = next;
        }
        BezierGrid { counts, pieces }
    }

    /// Partial derivative along `axis` as a spline of one lower degree.
    pub fn derivative(&self, axis: usize) -> Self {
        let kv = &self.bases[axis];
        let d = kv.degree();
        let k = kv.knots().to_vec();
        if d == 0 {
            let zero = vec![F::zero(); self.coeffs.len()];
            return Self { bases: self.bases.clone(), dim_out: self.dim_out, coeffs: zero };
        }
        let n = kv.num_ctrl();
        let new_kv = KnotVector::from_raw(d - 1, k[1..k.len() - 1].to_vec());
        self.map_fibers(axis, new_kv, |fib, inner| {
            let mut out = Vec::with_capacity((n - 1) * inner);
            for i in 0..n - 1 {
                let den = k[i + d + 1] - k[i + 1];
                let f = if den > F::zero() { F::of(d) / den } else { F::zero() };
                for r in 0..inner {
                    out.push(f * (fib[(i + 1) * inner + r] - fib[i * inner + r]));
                }
            }
            out
        })
    }

    /// Raises the degree of a single-span axis by `by` (Bézier elevation).
    pub fn elevate_bezier(&self, axis: usize, by: usize) -> Self {
        assert!(self.bases[axis].is_bezier(), "degree elevation needs a Bézier axis");
        if by == 0 {
            return self.clone();
        }
        let d = self.bases[axis].degree();
        let (lo, hi) = self.bases[axis].domain();
        let new_kv = KnotVector::bezier(d + by, lo, hi);
        self.map_fibers(axis, new_kv, |fib, inner| bezier::elevate_fiber(fib, inner, d, by))
    }

    /// Control-point axis-aligned bounding box `(min, max)`.
    pub fn ctrl_bbox(&self) -> (Vec<F>, Vec<F>) {
        let q = self.dim_out;
        let mut lo = vec![F::infinity(); q];
        let mut hi = vec![F::neg_infinity(); q];
        for p in self.points() {
            for c in 0..q {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        (lo, hi)
    }

    /// Applies `f` to every control point (affine maps commute with evaluation).
    pub fn map_points(&self, dim_out: usize, f: impl Fn(&[F]) -> Vec<F>) -> Self {
        let mut coeffs = Vec::with_capacity(self.num_points() * dim_out);
        for p in self.points() {
            let v = f(p);
            debug_assert_eq!(v.len(), dim_out);
            coeffs.extend(v);
        }
        Self { bases: self.bases.clone(), dim_out, coeffs }
    }

    pub fn scale(&self, s: F) -> Self {
        self.map_points(self.dim_out, |p| p.iter().map(|v| *v * s).collect())
    }

    /// Scalar field of output component `c`.
    pub fn component(&self, c: usize) -> Self {
        self.map_points(1, |p| vec![p[c]])
    }

    /// Same map with each axis' domain affinely remapped.
    pub fn reparam(&self, lo: &[F], hi: &[F]) -> Self {
        let bases = self
            .bases
            .iter()
            .enumerate()
            .map(|(a, b)| b.reparam(lo[a], hi[a]))
            .collect();
        Self { bases, dim_out: self.dim_out, coeffs: self.coeffs.clone() }
    }

    /// Reverses the direction of `axis`.
    pub fn reverse_axis(&self, axis: usize) -> Self {
        let kv = self.bases[axis].reversed();
        let n = kv.num_ctrl();
        self.map_fibers(axis, kv, |fib, inner| {
            (0..n).rev().flat_map(|i| fib[i * inner..(i + 1) * inner].iter().copied()).collect()
        })
    }

    /// Exchanges two parametric axes.
    pub fn swap_axes(&self, a: usize, b: usize) -> Self {
        if a == b {
            return self.clone();
        }
        let shape = self.shape();
        let mut new_shape = shape.clone();
        new_shape.swap(a, b);
        let mut bases = self.bases.clone();
        bases.swap(a, b);
        let q = self.dim_out;
        let mut coeffs = vec![F::zero(); self.coeffs.len()];
        let total = self.num_points();
        let n = shape.len();
        let mut idx = vec![0usize; n];
        for flat in 0..total {
            let mut rem = flat;
            for ax in (0..n).rev() {
                idx[ax] = rem % shape[ax];
                rem /= shape[ax];
            }
            idx.swap(a, b);
            let nf = idx.iter().zip(&new_shape).fold(0, |acc, (i, s)| acc * s + i);
            idx.swap(a, b);
            coeffs[nf * q..(nf + 1) * q].copy_from_slice(&self.coeffs[flat * q..(flat + 1) * q]);
        }
        Self { bases, dim_out: q, coeffs }
    }

    /// Restriction to the boundary `axis = lo` (`side = 0`) or `axis = hi`
    /// (`side = 1`), exact for clamped knot vectors.
    pub fn boundary(&self, axis: usize, side: usize) -> Result<Self> {
        if self.dim_in() < 2 {
            return Err(Error::Shape("boundary of a curve is a point".into()));
        }
        let (outer, n, inner) = self.axis_layout(axis);
        let i = if side == 0 { 0 } else { n - 1 };
        let mut coeffs = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            coeffs.extend_from_slice(&self.coeffs[(o * n + i) * inner..(o * n + i + 1) * inner]);
        }
        let mut bases = self.bases.clone();
        bases.remove(axis);
        Ok(Self { bases, dim_out: self.dim_out, coeffs })
    }

    /// Iso-parametric restriction at `t` along `axis`.
    pub fn iso(&self, axis: usize, t: F) -> Result<Self> {
        let t = self.bases[axis].check_param(t)?;
        let (lo, hi) = self.domain(axis);
        let tol = self.bases[axis].knot_tol();
        if t <= lo + tol {
            return self.boundary(axis, 0);
        }
        if t >= hi - tol {
            return self.boundary(axis, 1);
        }
        let (l, _) = self.subdivide(axis, t)?;
        l.boundary(axis, 1)
    }

    /// Reassembles a row-major grid of Bézier pieces sharing degrees into a
    /// single piecewise map. Adjacent pieces whose shared boundary
    /// coefficients agree (relative `tol`) are joined with multiplicity
    /// `degree`; otherwise the break keeps multiplicity `degree + 1`.
    pub fn from_bezier_grid(counts: &[usize], pieces: &[Self], tol: F) -> Result<Self> {
        let n = counts.len();
        if pieces.is_empty() || pieces.len() != counts.iter().product::<usize>() {
            return Err(Error::Shape("piece count does not match grid".into()));
        }
        let degs = pieces[0].degrees();
        let q = pieces[0].dim_out;
        if pieces.iter().any(|p| p.degrees() != degs || !p.is_bezier() || p.dim_out != q) {
            return Err(Error::Shape("pieces must be Bézier with equal degrees".into()));
        }
        let scale = pieces
            .iter()
            .flat_map(|p| p.coeffs.iter())
            .fold(F::zero(), |m, v| m.max(v.abs()))
            .max(F::one());
        let stride = |idx: &[usize]| idx.iter().zip(counts).fold(0, |acc, (i, c)| acc * c + i);
        // decide per-axis, per-break continuity
        let mut joined: Vec<Vec<bool>> = Vec::with_capacity(n);
        for axis in 0..n {
            let mut flags = Vec::new();
            for b in 0..counts[axis].saturating_sub(1) {
                let mut ok = true;
                let total: usize = counts.iter().product();
                'scan: for flat in 0..total {
                    let mut idx = unflatten(flat, counts);
                    if idx[axis] != b {
                        continue;
                    }
                    let left = &pieces[flat];
                    idx[axis] += 1;
                    let right = &pieces[stride(&idx)];
                    let lb = left.boundary_coeffs(axis, 1);
                    let rb = right.boundary_coeffs(axis, 0);
                    for (x, y) in lb.iter().zip(&rb) {
                        if (*x - *y).abs() > tol * scale {
                            ok = false;
                            break 'scan;
                        }
                    }
                }
                flags.push(ok);
            }
            joined.push(flags);
        }
        // knot vectors
        let mut bases = Vec::with_capacity(n);
        for axis in 0..n {
            let d = degs[axis];
            let mut idx = vec![0usize; n];
            let mut knots = Vec::new();
            let first = &pieces[0];
            knots.extend(std::iter::repeat_n(first.domain(axis).0, d + 1));
            for b in 0..counts[axis] {
                idx[axis] = b;
                let p = &pieces[stride(&idx)];
                let hi = p.domain(axis).1;
                if b + 1 < counts[axis] {
                    let m = if joined[axis][b] { d.max(1) } else { d + 1 };
                    knots.extend(std::iter::repeat_n(hi, m));
                } else {
                    knots.extend(std::iter::repeat_n(hi, d + 1));
                }
            }
            bases.push(KnotVector::new(d, knots)?);
        }
        // coefficient grid: per axis, piece b contributes indices, shared ends dropped when joined
        let shape: Vec<usize> = bases.iter().map(|b| b.num_ctrl()).collect();
        let total_pts: usize = shape.iter().product();
        let mut coeffs = vec![F::zero(); total_pts * q];
        let mut hits = vec![0u32; total_pts];
        // offsets of each piece along each axis
        let mut offsets: Vec<Vec<usize>> = Vec::with_capacity(n);
        for axis in 0..n {
            let d = degs[axis];
            let mut offs = Vec::with_capacity(counts[axis]);
            let mut o = 0;
            for b in 0..counts[axis] {
                offs.push(o);
                o += if b + 1 < counts[axis] && joined[axis][b] { d.max(1) } else { d + 1 };
            }
            offsets.push(offs);
        }
        for (flat, p) in pieces.iter().enumerate() {
            let pidx = unflatten(flat, counts);
            let pshape = p.shape();
            for lf in 0..p.num_points() {
                let lidx = unflatten(lf, &pshape);
                let gidx: Vec<usize> = (0..n).map(|a| offsets[a][pidx[a]] + lidx[a]).collect();
                let g = gidx.iter().zip(&shape).fold(0, |acc, (i, s)| acc * s + i);
                for c in 0..q {
                    coeffs[g * q + c] += p.coeffs[lf * q + c];
                }
                hits[g] += 1;
            }
        }
        for (g, h) in hits.iter().enumerate() {
            if *h > 1 {
                let inv = F::one() / F::of(*h as usize);
                for c in 0..q {
                    coeffs[g * q + c] *= inv;
                }
            }
        }
        Self::new(bases, q, coeffs)
    }

    fn boundary_coeffs(&self, axis: usize, side: usize) -> Vec<F> {
        let (outer, n, inner) = self.axis_layout(axis);
        let i = if side == 0 { 0 } else { n - 1 };
        (0..outer)
            .flat_map(|o| self.coeffs[(o * n + i) * inner..(o * n + i + 1) * inner].iter().copied())
            .collect()
    }

    /// Polynomial total degree of a Bézier map (largest `i+j+k` with a
    /// nonzero monomial coefficient, relative tolerance `tol`).
    pub fn total_degree(&self, tol: F) -> usize {
        assert!(self.is_bezier(), "total degree needs a Bézier map");
        let mono = bezier::to_monomial(self);
        let shape = self.shape();
        let q = self.dim_out;
        let scale = mono.iter().fold(F::zero(), |m, v| m.max(v.abs())).max(F::min_positive_value());
        let mut best = 0;
        for flat in 0..self.num_points() {
            let idx = unflatten(flat, &shape);
            let deg: usize = idx.iter().sum();
            if deg > best && (0..q).any(|c| mono[flat * q + c].abs() > tol * scale) {
                best = deg;
            }
        }
        best
    }
}

pub(crate) fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        idx[a] = flat % shape[a];
        flat /= shape[a];
    }
    idx
}
