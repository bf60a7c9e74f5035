//! Univariate B-spline/NURBS curves: basis evaluation, knot insertion,
//! Bezier extraction and Greville abscissae.

use crate::error::{Error, Result};
use crate::geom::{BoundingBox, Point2};

/// Comparison tolerance for knot values.
const KNOT_TOL: f64 = 1e-12;

/// Clamped (open) knot vector of a given degree.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        let p = degree;
        if knots.len() < 2 * (p + 1) {
            return Err(Error::domain("knot vector too short for degree"));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("knot vector must be non-decreasing"));
        }
        let kv = KnotVector { knots, degree };
        let (first, last) = kv.domain();
        if kv.multiplicity(first) != p + 1 || kv.multiplicity(last) != p + 1 {
            return Err(Error::domain("knot vector must be clamped (end multiplicity p+1)"));
        }
        for (v, m) in kv.breakpoints() {
            if m > p + 1 {
                return Err(Error::domain(format!("knot {v} has multiplicity {m} > p+1")));
            }
        }
        Ok(kv)
    }

    /// Open uniform knot vector on [0, 1] with `n_spans` equal spans.
    pub fn open_uniform(degree: usize, n_spans: usize) -> Self {
        assert!(n_spans >= 1);
        let mut knots = vec![0.0; degree];
        for i in 0..=n_spans {
            knots.push(i as f64 / n_spans as f64);
        }
        knots.extend(std::iter::repeat(1.0).take(degree));
        KnotVector { knots, degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions.
    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    pub fn multiplicity(&self, u: f64) -> usize {
        self.knots.iter().filter(|&&k| (k - u).abs() <= KNOT_TOL).count()
    }

    /// Distinct knot values with multiplicities.
    pub fn breakpoints(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &k in &self.knots {
            match out.last_mut() {
                Some((v, m)) if (k - *v).abs() <= KNOT_TOL => *m += 1,
                _ => out.push((k, 1)),
            }
        }
        out
    }

    /// Non-empty knot spans as parameter intervals.
    pub fn spans(&self) -> Vec<(f64, f64)> {
        self.breakpoints().windows(2).map(|w| (w[0].0, w[1].0)).collect()
    }

    /// Parametric support [u_i, u_{i+p+1}] of basis function `i`.
    pub fn support(&self, i: usize) -> (f64, f64) {
        (self.knots[i], self.knots[i + self.degree + 1])
    }

    /// Index of the non-empty span containing `u`; the right end of the
    /// domain maps to the last span.
    pub fn find_span(&self, u: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        if u < lo - KNOT_TOL || u > hi + KNOT_TOL {
            return Err(Error::domain(format!("parameter {u} outside knot range [{lo}, {hi}]")));
        }
        let n = self.num_basis();
        let p = self.degree;
        if u >= self.knots[n] {
            return Ok(n - 1);
        }
        let mut low = p;
        let mut high = n;
        while high - low > 1 {
            let mid = (low + high) / 2;
            if u < self.knots[mid] {
                high = mid;
            } else {
                low = mid;
            }
        }
        Ok(low)
    }

    /// Values of the p+1 B-splines that are non-zero at `u`, together with
    /// the span index. Uses the Cox-de Boor recursion with the 0/0 = 0
    /// convention.
    pub fn eval_basis(&self, u: f64) -> Result<(usize, Vec<f64>)> {
        let span = self.find_span(u)?;
        Ok((span, self.basis_funs(span, u)))
    }

    fn basis_funs(&self, span: usize, u: f64) -> Vec<f64> {
        let p = self.degree;
        let mut vals = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        vals[0] = 1.0;
        for j in 1..=p {
            left[j] = u - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom != 0.0 { vals[r] / denom } else { 0.0 };
                vals[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            vals[j] = saved;
        }
        vals
    }

    /// Values and first derivatives of the p+1 non-zero B-splines at `u`.
    pub fn eval_basis_derivs(&self, u: f64) -> Result<(usize, Vec<f64>, Vec<f64>)> {
        let span = self.find_span(u)?;
        let p = self.degree;
        let vals = self.basis_funs(span, u);
        let mut ders = vec![0.0; p + 1];
        if p >= 1 {
            // Degree p-1 values on the same span, then the derivative
            // recurrence N'_{i,p} = p (N_{i,p-1}/d1 - N_{i+1,p-1}/d2).
            let lower = KnotVector {
                knots: self.knots.clone(),
                degree: p - 1,
            };
            let low_vals = lower.basis_funs(span, u);
            for j in 0..=p {
                let i = span - p + j;
                let mut d = 0.0;
                if j >= 1 {
                    let denom = self.knots[i + p] - self.knots[i];
                    if denom != 0.0 {
                        d += low_vals[j - 1] / denom;
                    }
                }
                if j <= p - 1 {
                    let denom = self.knots[i + p + 1] - self.knots[i + 1];
                    if denom != 0.0 {
                        d -= low_vals[j] / denom;
                    }
                }
                ders[j] = p as f64 * d;
            }
        }
        Ok((span, vals, ders))
    }

    /// Greville abscissae: the degree-average of p consecutive knots.
    pub fn greville_abscissae(&self) -> Result<Vec<f64>> {
        let p = self.degree;
        if p == 0 {
            return Err(Error::domain("Greville abscissae undefined for degree 0"));
        }
        Ok((0..self.num_basis())
            .map(|i| self.knots[i + 1..i + 1 + p].iter().sum::<f64>() / p as f64)
            .collect())
    }
}

/// Breakpoint-union of two knot vectors with maximum multiplicity per
/// breakpoint; the result carries the larger degree.
pub fn accumulated_knot_vector(a: &KnotVector, b: &KnotVector) -> Result<KnotVector> {
    let (a0, a1) = a.domain();
    let (b0, b1) = b.domain();
    if (a0 - b0).abs() > KNOT_TOL || (a1 - b1).abs() > KNOT_TOL {
        return Err(Error::domain("mismatched parametric ranges in knot union"));
    }
    let degree = a.degree().max(b.degree());
    let mut merged: Vec<(f64, usize)> = Vec::new();
    let (bpa, bpb) = (a.breakpoints(), b.breakpoints());
    let (mut i, mut j) = (0, 0);
    while i < bpa.len() || j < bpb.len() {
        match (bpa.get(i), bpb.get(j)) {
            (Some(&(va, ma)), Some(&(vb, mb))) if (va - vb).abs() <= KNOT_TOL => {
                merged.push((va, ma.max(mb)));
                i += 1;
                j += 1;
            }
            (Some(&(va, ma)), Some(&(vb, _))) if va < vb => {
                merged.push((va, ma));
                i += 1;
            }
            (Some(_), Some(&(vb, mb))) => {
                merged.push((vb, mb));
                j += 1;
            }
            (Some(&(va, ma)), None) => {
                merged.push((va, ma));
                i += 1;
            }
            (None, Some(&(vb, mb))) => {
                merged.push((vb, mb));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    // Ends carry the maximum degree's clamping.
    merged.first_mut().unwrap().1 = degree + 1;
    merged.last_mut().unwrap().1 = degree + 1;
    let knots: Vec<f64> = merged
        .iter()
        .flat_map(|&(v, m)| std::iter::repeat(v).take(m))
        .collect();
    KnotVector::new(knots, degree)
}

/// Result of a point evaluation on a NURBS curve.
#[derive(Debug, Clone)]
pub struct CurveEval {
    pub point: Point2,
    pub tangent: Point2,
    pub span: usize,
    /// Rational basis values of the p+1 functions active on the span.
    pub rational: Vec<f64>,
}

/// A single Bezier segment of an extracted curve.
#[derive(Debug, Clone)]
pub struct BezierSegment {
    pub interval: (f64, f64),
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

/// Rational B-spline curve in the plane.
#[derive(Debug, Clone)]
pub struct NurbsCurve {
    kv: KnotVector,
    control_points: Vec<Point2>,
    weights: Vec<f64>,
}

impl NurbsCurve {
    pub fn new(kv: KnotVector, control_points: Vec<Point2>, weights: Vec<f64>) -> Result<Self> {
        let n = kv.num_basis();
        if control_points.len() != n || weights.len() != n {
            return Err(Error::domain(format!(
                "expected {n} control points and weights, got {} and {}",
                control_points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::domain("all weights must be positive"));
        }
        Ok(NurbsCurve {
            kv,
            control_points,
            weights,
        })
    }

    pub fn knot_vector(&self) -> &KnotVector {
        &self.kv
    }

    pub fn control_points(&self) -> &[Point2] {
        &self.control_points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> usize {
        self.kv.degree()
    }

    /// Point, tangent and rational basis values at `u`. The tangent is the
    /// exact derivative of the rational map by the quotient rule on the
    /// weighted sums.
    pub fn eval(&self, u: f64) -> Result<CurveEval> {
        let p = self.kv.degree();
        let (span, vals, ders) = self.kv.eval_basis_derivs(u)?;
        let mut num = Point2::zeros();
        let mut num_d = Point2::zeros();
        let mut den = 0.0;
        let mut den_d = 0.0;
        for j in 0..=p {
            let i = span - p + j;
            let w = self.weights[i];
            num += self.control_points[i] * (vals[j] * w);
            num_d += self.control_points[i] * (ders[j] * w);
            den += vals[j] * w;
            den_d += ders[j] * w;
        }
        let point = num / den;
        let tangent = (num_d * den - num * den_d) / (den * den);
        let rational = (0..=p)
            .map(|j| vals[j] * self.weights[span - p + j] / den)
            .collect();
        Ok(CurveEval {
            point,
            tangent,
            span,
            rational,
        })
    }

    /// Insert the knot `u` once (Boehm's algorithm on homogeneous
    /// coordinates). The traced point set is unchanged.
    pub fn insert_knot(&self, u: f64) -> Result<NurbsCurve> {
        let (lo, hi) = self.kv.domain();
        if u <= lo + KNOT_TOL || u >= hi - KNOT_TOL {
            return Err(Error::domain("knot insertion requires a strictly interior parameter"));
        }
        let p = self.kv.degree();
        let s = self.kv.multiplicity(u);
        if s >= p {
            return Err(Error::domain(format!(
                "inserting {u} would raise multiplicity beyond p = {p}"
            )));
        }
        let k = self.kv.find_span(u)?;
        let knots = self.kv.knots();
        let n = self.kv.num_basis();

        let hom = |i: usize| {
            let w = self.weights[i];
            (self.control_points[i] * w, w)
        };
        let mut pts = Vec::with_capacity(n + 1);
        let mut wts = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let (pw, w) = if i <= k - p {
                hom(i)
            } else if i <= k - s {
                let alpha = (u - knots[i]) / (knots[i + p] - knots[i]);
                let (a, wa) = hom(i);
                let (b, wb) = hom(i - 1);
                (a * alpha + b * (1.0 - alpha), alpha * wa + (1.0 - alpha) * wb)
            } else {
                hom(i - 1)
            };
            pts.push(pw / w);
            wts.push(w);
        }
        let mut new_knots = knots.to_vec();
        new_knots.insert(k + 1, u);
        Ok(NurbsCurve {
            kv: KnotVector::new(new_knots, p)?,
            control_points: pts,
            weights: wts,
        })
    }

    /// Raise every interior knot (plus any `extra` breakpoints) to
    /// multiplicity p so that the curve is C^0 at every breakpoint, and
    /// slice the control polygon into Bezier segments. The segment control
    /// points form a convex hull of the curve.
    pub fn bezier_extract_with(&self, extra: &[f64]) -> Result<Vec<BezierSegment>> {
        let p = self.kv.degree();
        let mut curve = self.clone();
        let (lo, hi) = self.kv.domain();
        let mut targets: Vec<f64> = self
            .kv
            .breakpoints()
            .iter()
            .map(|&(v, _)| v)
            .chain(extra.iter().copied())
            .filter(|&v| v > lo + KNOT_TOL && v < hi - KNOT_TOL)
            .collect();
        targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
        targets.dedup_by(|a, b| (*a - *b).abs() <= KNOT_TOL);
        for v in targets {
            while curve.kv.multiplicity(v) < p {
                curve = curve.insert_knot(v)?;
            }
        }
        let spans = curve.kv.spans();
        let mut segments = Vec::with_capacity(spans.len());
        for (si, &(a, b)) in spans.iter().enumerate() {
            let start = si * p;
            segments.push(BezierSegment {
                interval: (a, b),
                points: curve.control_points[start..=start + p].to_vec(),
                weights: curve.weights[start..=start + p].to_vec(),
            });
        }
        Ok(segments)
    }

    pub fn bezier_extract(&self) -> Result<Vec<BezierSegment>> {
        self.bezier_extract_with(&[])
    }

    /// Axis-aligned box of the extracted control points whose segments
    /// intersect the parameter interval [a, b]. By the convex hull property
    /// it contains every curve point with parameter in [a, b].
    pub fn control_bbox_on(&self, segments: &[BezierSegment], a: f64, b: f64) -> BoundingBox {
        let mut bbox = BoundingBox::empty();
        for seg in segments {
            if seg.interval.1 <= a + KNOT_TOL || seg.interval.0 >= b - KNOT_TOL {
                continue;
            }
            for pt in &seg.points {
                bbox.expand(*pt);
            }
        }
        bbox
    }
}
