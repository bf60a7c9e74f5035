//! Operator assembly: collocated single and double layer operators in
//! H-matrix format.
//!
//! Near-field (inadmissible) blocks are integrated entry by entry with
//! graded quadrature toward the singularity. Far-field (admissible)
//! blocks are built in the three-factor form A·S·Bᵀ from tensor-product
//! Chebyshev interpolation of the kernel on the cluster boxes.
//!
//! The double layer operator is assembled in completed form: the free
//! term is absorbed by regularizing the singular entries against rigid
//! translations,
//!
//!   (C + K)_ij = ∫_sing T (φ_j - φ_j(x_i)) + ∫_{supp∖sing} T φ_j
//!                - φ_j(x_i) ∫_{Γ∖sing} T,
//!
//! which is exact because the collocated free term plus the principal
//! value of T over the closed boundary annihilates constants. Quadrature
//! cells depend only on (row, span), so the row sums of the near field
//! cancel to machine precision; the interpolation error of the far field
//! is removed by a final rank-correction of one dense entry per row.

use crate::boundary::{BasisSpace, Boundary, CollocationPoint, ExtractedBoundary};
use crate::clustering::{BlockStatus, BlockClusterTree, ClusterConfig, ClusterTree, IndexedGeometry};
use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::hmatrix::{HMatrix, LowRankBlock, Payload};
use crate::interp::InterpolationScheme;
use crate::kernels::{kelvin_t, kelvin_u, laplace_kernels, Material};
use crate::quadrature::{graded_cells, GaussRule};
use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;

/// Kernel family of an operator. Laplace kernels are scalar and use only
/// the (0, 0) entry of the 2x2 kernel blocks.
#[derive(Debug, Clone)]
pub enum KernelSet {
    Elastic(Material),
    Laplace,
}

impl KernelSet {
    pub fn ncomp(&self) -> usize {
        match self {
            KernelSet::Elastic(_) => 2,
            KernelSet::Laplace => 1,
        }
    }

    /// Single layer kernel block U(x, y).
    pub fn single_kernel(&self, x: Point2, y: Point2) -> Result<Matrix2<f64>> {
        match self {
            KernelSet::Elastic(mat) => kelvin_u(x, y, mat),
            KernelSet::Laplace => {
                let (g, _) = laplace_kernels(x, y, Point2::new(1.0, 0.0))?;
                let mut m = Matrix2::zeros();
                m[(0, 0)] = g;
                Ok(m)
            }
        }
    }

    /// Double layer kernel block T(x, y) with outward normal `n` at y.
    pub fn double_kernel(&self, x: Point2, y: Point2, n: Point2) -> Result<Matrix2<f64>> {
        match self {
            KernelSet::Elastic(mat) => kelvin_t(x, y, n, mat),
            KernelSet::Laplace => {
                let (_, dgdn) = laplace_kernels(x, y, n)?;
                let mut m = Matrix2::zeros();
                m[(0, 0)] = dgdn;
                Ok(m)
            }
        }
    }

    /// Conormal derivative of the Lagrange polynomial L_μ at y: the block
    /// that shifts the double layer onto the interpolation basis.
    fn moment_kernel(&self, scheme: &InterpolationScheme, mu: usize, y: Point2, n: Point2) -> Result<Matrix2<f64>> {
        match self {
            KernelSet::Elastic(mat) => scheme.traction_of_lagrange(mu, y, n, mat),
            KernelSet::Laplace => {
                let mut m = Matrix2::zeros();
                m[(0, 0)] = scheme.lagrange_gradient(mu, y).dot(&n);
                Ok(m)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Gauss-Legendre points per quadrature cell.
    pub gauss_order: usize,
    /// Geometric grading ratio toward a singular or nearby point.
    pub graded_ratio: f64,
    /// Number of graded refinement levels.
    pub graded_depth: usize,
    /// A span is treated as nearly singular when the collocation point is
    /// closer than `near_factor` times the span chord length.
    pub near_factor: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            gauss_order: 12,
            graded_ratio: 0.15,
            graded_depth: 6,
            near_factor: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AssemblyConfig {
    pub cluster: ClusterConfig,
    /// Chebyshev points per axis in far-field interpolation.
    pub interp_order: usize,
    pub quad: QuadratureConfig,
    /// Relative truncation tolerance of the low-rank recompression.
    pub recompress_tol: f64,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            cluster: ClusterConfig::default(),
            interp_order: 6,
            quad: QuadratureConfig::default(),
            recompress_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    SingleLayer,
    /// Double layer including the collocated free term.
    DoubleLayerCompleted,
}

/// Assembles one operator: fixed kernel, boundary, column space and
/// collocation rows. Rows need not anchor in the column space, so mixed
/// systems can collocate both operators at the same points.
pub struct Assembler<'a> {
    pub kernel: &'a KernelSet,
    pub boundary: &'a Boundary,
    pub space: &'a BasisSpace,
    pub rows: &'a [CollocationPoint],
    pub extracted: &'a ExtractedBoundary,
    pub cfg: &'a AssemblyConfig,
}

impl<'a> Assembler<'a> {
    pub fn assemble(&self, kind: OperatorKind) -> Result<HMatrix> {
        let nc = self.kernel.ncomp();
        let row_geom = IndexedGeometry::from_points(self.rows.iter().map(|r| r.point).collect());
        let mut col_pts = Vec::with_capacity(self.space.num_functions());
        let mut col_boxes = Vec::with_capacity(self.space.num_functions());
        for j in 0..self.space.num_functions() {
            let (e, u) = self.space.anchor(j)?;
            col_pts.push(self.boundary.point(e, u)?);
            col_boxes.push(self.extracted.support_box(self.boundary, self.space, j));
        }
        let col_geom = IndexedGeometry::new(col_pts, col_boxes);
        let row_tree = ClusterTree::build(&row_geom, &self.cfg.cluster);
        let col_tree = ClusterTree::build(&col_geom, &self.cfg.cluster);
        let block_tree = BlockClusterTree::build(&row_tree, &col_tree, &self.cfg.cluster);
        let mut h = HMatrix::new(row_tree, col_tree, block_tree, nc);

        let rigid: Vec<Matrix2<f64>> = if kind == OperatorKind::DoubleLayerCompleted {
            self.rows
                .par_iter()
                .map(|row| self.rigid_term(row))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };

        let leaves = h.block_tree.leaves.clone();
        let payloads: Vec<(usize, Payload)> = leaves
            .par_iter()
            .map(|&leaf| {
                let blk = &h.block_tree.blocks[leaf];
                let t = &h.rows.clusters[blk.row];
                let s = &h.cols.clusters[blk.col];
                let row_ids: Vec<usize> = (t.range.0..t.range.1).map(|p| h.rows.perm[p]).collect();
                let col_ids: Vec<usize> = (s.range.0..s.range.1).map(|p| h.cols.perm[p]).collect();
                let payload = if blk.status == BlockStatus::Admissible {
                    self.lowrank_payload(kind, &t.bbox, &s.bbox, &row_ids, &col_ids)?
                } else {
                    self.dense_payload(kind, &row_ids, &col_ids, &rigid)?
                };
                Ok((leaf, payload))
            })
            .collect::<Result<Vec<_>>>()?;
        for (leaf, payload) in payloads {
            h.set_payload(leaf, payload);
        }
        h.recompress(self.cfg.recompress_tol)?;
        if kind == OperatorKind::DoubleLayerCompleted {
            self.translation_correction(&mut h)?;
        }
        Ok(h)
    }

    /// The knot spans intersecting the support of function `j`.
    fn support_spans(&self, j: usize) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        for (e, a, b) in self.space.support(j) {
            for (sa, sb) in self.space.kvs[e].spans() {
                let tol = 1e-12 * (sb - sa);
                if sb > a + tol && sa < b - tol {
                    out.push((e, sa, sb));
                }
            }
        }
        out
    }

    /// Quadrature plan on span [a, b] of patch `e` for one collocation
    /// row. The plan depends on the (row, span) pair only, never on the
    /// integrand, so it is shared by every column and by the rigid term.
    /// Returns whether the span touches the collocation point (singular)
    /// and the quadrature cells.
    fn span_cells(&self, row: &CollocationPoint, e: usize, a: f64, b: f64) -> Result<(bool, Vec<(f64, f64)>)> {
        let q = &self.cfg.quad;
        let tol = 1e-12 * (b - a);
        if e == row.patch && row.param > a - tol && row.param < b + tol {
            let u0 = row.param.clamp(a, b);
            return Ok((true, graded_cells(a, b, u0, q.graded_ratio, q.graded_depth)));
        }
        let m = 8;
        let mut best = (f64::INFINITY, a);
        let mut chord = 0.0;
        let mut prev = Point2::zeros();
        for s in 0..=m {
            let u = a + (b - a) * s as f64 / m as f64;
            let p = self.boundary.point(e, u)?;
            let d = (p - row.point).norm();
            if d < best.0 {
                best = (d, u);
            }
            if s > 0 {
                chord += (p - prev).norm();
            }
            prev = p;
        }
        if best.0 < 1e-10 {
            // The span touches the collocation point at a patch joint.
            Ok((true, graded_cells(a, b, best.1, q.graded_ratio, q.graded_depth)))
        } else if best.0 < q.near_factor * chord {
            Ok((false, graded_cells(a, b, best.1, q.graded_ratio, q.graded_depth)))
        } else {
            Ok((false, vec![(a, b)]))
        }
    }

    /// Single layer entry block: ∫ U(x_i, y) ψ_j(y) dγ(y).
    pub fn single_entry(&self, row: &CollocationPoint, j: usize) -> Result<Matrix2<f64>> {
        let rule = GaussRule::new(self.cfg.quad.gauss_order);
        let mut acc = Matrix2::zeros();
        for (e, a, b) in self.support_spans(j) {
            let (_, cells) = self.span_cells(row, e, a, b)?;
            for (ca, cb) in cells {
                for (u, w) in rule.mapped(ca, cb) {
                    let (y, _, jac) = self.boundary.frame(e, u)?;
                    let val = self.space.eval(j, e, u)?;
                    if val == 0.0 {
                        continue;
                    }
                    acc += (w * jac * val) * self.kernel.single_kernel(row.point, y)?;
                }
            }
        }
        Ok(acc)
    }

    /// Completed double layer entry block for one row, given the rigid
    /// term R_i of that row.
    pub fn double_entry(&self, row: &CollocationPoint, j: usize, rigid: &Matrix2<f64>) -> Result<Matrix2<f64>> {
        let rule = GaussRule::new(self.cfg.quad.gauss_order);
        let phi_x = self.space.eval(j, row.patch, row.param)?;
        let mut acc = -phi_x * rigid;
        for (e, a, b) in self.support_spans(j) {
            let (singular, cells) = self.span_cells(row, e, a, b)?;
            let shift = if singular { phi_x } else { 0.0 };
            for (ca, cb) in cells {
                for (u, w) in rule.mapped(ca, cb) {
                    let (y, n, jac) = self.boundary.frame(e, u)?;
                    let val = self.space.eval(j, e, u)? - shift;
                    if val == 0.0 {
                        continue;
                    }
                    acc += (w * jac * val) * self.kernel.double_kernel(row.point, y, n)?;
                }
            }
        }
        Ok(acc)
    }

    /// Rigid term R_i = ∫_{Γ∖sing} T(x_i, y) dγ(y): the double layer of a
    /// unit translation over everything except the singular spans, on the
    /// same quadrature cells as the entries.
    pub fn rigid_term(&self, row: &CollocationPoint) -> Result<Matrix2<f64>> {
        let rule = GaussRule::new(self.cfg.quad.gauss_order);
        let mut acc = Matrix2::zeros();
        for e in 0..self.boundary.num_patches() {
            for (a, b) in self.space.kvs[e].spans() {
                let (singular, cells) = self.span_cells(row, e, a, b)?;
                if singular {
                    continue;
                }
                for (ca, cb) in cells {
                    for (u, w) in rule.mapped(ca, cb) {
                        let (y, n, jac) = self.boundary.frame(e, u)?;
                        acc += (w * jac) * self.kernel.double_kernel(row.point, y, n)?;
                    }
                }
            }
        }
        Ok(acc)
    }

    fn dense_payload(&self, kind: OperatorKind, row_ids: &[usize], col_ids: &[usize], rigid: &[Matrix2<f64>]) -> Result<Payload> {
        let nc = self.kernel.ncomp();
        let mut d = DMatrix::zeros(row_ids.len() * nc, col_ids.len() * nc);
        for (li, &i) in row_ids.iter().enumerate() {
            for (lj, &j) in col_ids.iter().enumerate() {
                let block = match kind {
                    OperatorKind::SingleLayer => self.single_entry(&self.rows[i], j)?,
                    OperatorKind::DoubleLayerCompleted => self.double_entry(&self.rows[i], j, &rigid[i])?,
                };
                for a in 0..nc {
                    for c in 0..nc {
                        d[(li * nc + a, lj * nc + c)] = block[(a, c)];
                    }
                }
            }
        }
        Ok(Payload::Dense(d))
    }

    /// Three-factor far-field block from kernel interpolation on the
    /// cluster boxes: A holds Lagrange values at the collocation points,
    /// S the kernel at the Chebyshev node pairs, B the basis moments of
    /// the Lagrange polynomials (single layer) or of their conormal
    /// derivatives (double layer). A and S do not depend on the kind.
    fn lowrank_payload(
        &self,
        kind: OperatorKind,
        row_box: &crate::geom::BoundingBox,
        col_box: &crate::geom::BoundingBox,
        row_ids: &[usize],
        col_ids: &[usize],
    ) -> Result<Payload> {
        let nc = self.kernel.ncomp();
        let sx = InterpolationScheme::new(self.cfg.interp_order, row_box)?;
        let sy = InterpolationScheme::new(self.cfg.interp_order, col_box)?;
        let k2 = sx.len();

        let mut a_mat = DMatrix::zeros(row_ids.len() * nc, k2 * nc);
        for (li, &i) in row_ids.iter().enumerate() {
            for nu in 0..k2 {
                let l = sx.lagrange_eval(nu, self.rows[i].point);
                for c in 0..nc {
                    a_mat[(li * nc + c, nu * nc + c)] = l;
                }
            }
        }

        let mut s_mat = DMatrix::zeros(k2 * nc, k2 * nc);
        for nu in 0..k2 {
            for mu in 0..k2 {
                let kb = self.kernel.single_kernel(sx.node(nu), sy.node(mu))?;
                for a in 0..nc {
                    for m in 0..nc {
                        s_mat[(nu * nc + a, mu * nc + m)] = kb[(a, m)];
                    }
                }
            }
        }

        let rule = GaussRule::new(self.cfg.quad.gauss_order);
        let mut b_mat = DMatrix::zeros(col_ids.len() * nc, k2 * nc);
        for (lj, &j) in col_ids.iter().enumerate() {
            for (e, a, b) in self.support_spans(j) {
                for (u, w) in rule.mapped(a, b) {
                    let (y, n, jac) = self.boundary.frame(e, u)?;
                    let val = self.space.eval(j, e, u)?;
                    if val == 0.0 {
                        continue;
                    }
                    let wv = w * jac * val;
                    match kind {
                        OperatorKind::SingleLayer => {
                            for mu in 0..k2 {
                                let l = sy.lagrange_eval(mu, y);
                                for b_c in 0..nc {
                                    b_mat[(lj * nc + b_c, mu * nc + b_c)] += wv * l;
                                }
                            }
                        }
                        OperatorKind::DoubleLayerCompleted => {
                            for mu in 0..k2 {
                                let m = self.kernel.moment_kernel(&sy, mu, y, n)?;
                                for b_c in 0..nc {
                                    for mc in 0..nc {
                                        b_mat[(lj * nc + b_c, mu * nc + mc)] += wv * m[(b_c, mc)];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(Payload::LowRank(LowRankBlock::three_factor(a_mat, s_mat, b_mat)))
    }

    /// Remove the residual of the discrete rigid-translation identity.
    /// The exact completed operator annihilates constant data; quadrature
    /// sharing makes the near field cancel already, so the residual is
    /// the far-field interpolation error. It is subtracted from the dense
    /// entry of the column with the largest basis value at each row,
    /// which restores (C+K)·const = 0 to machine precision without
    /// touching the operator beyond its approximation error.
    fn translation_correction(&self, h: &mut HMatrix) -> Result<()> {
        let nc = h.ncomp;
        let (_, ncols) = h.dims();
        let mut residuals = Vec::with_capacity(nc);
        for c in 0..nc {
            let mut x = DVector::zeros(ncols);
            for j in 0..self.space.num_functions() {
                x[j * nc + c] = 1.0;
            }
            residuals.push(h.matvec(&x)?);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let candidates = self.space.active_at(row.patch, row.param)?;
            let mut best = (f64::NEG_INFINITY, 0usize);
            for &j in &candidates {
                let v = self.space.eval(j, row.patch, row.param)?;
                if v > best.0 {
                    best = (v, j);
                }
            }
            let (d, li, lj) = h
                .dense_entry_mut(i, best.1)
                .ok_or_else(|| Error::contract("associated diagonal entry not in a dense block"))?;
            for a in 0..nc {
                for c in 0..nc {
                    d[(li * nc + a, lj * nc + c)] -= residuals[c][i * nc + a];
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{build_collocation, unit_circle, Continuity};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn circle_setup(
        degree: usize,
        n_spans: usize,
        continuity: Continuity,
    ) -> (Boundary, BasisSpace, ExtractedBoundary, Vec<CollocationPoint>) {
        let b = unit_circle();
        let s = BasisSpace::uniform(&b, degree, n_spans, continuity).unwrap();
        let ext = ExtractedBoundary::new(&b, &[&s]).unwrap();
        let rows = build_collocation(&s, &b).unwrap();
        (b, s, ext, rows)
    }

    fn dense_config() -> AssemblyConfig {
        AssemblyConfig {
            cluster: ClusterConfig { n_min: usize::MAX / 2, eta: 1.0 },
            ..AssemblyConfig::default()
        }
    }

    #[test]
    fn laplace_single_layer_annihilates_constants_on_unit_circle() {
        // ∮ ln|x - y| dγ(y) = 2π ln R vanishes on the unit circle, so the
        // single layer applied to the constant density is zero there.
        let (b, s, ext, rows) = circle_setup(2, 4, Continuity::Discontinuous);
        let kernel = KernelSet::Laplace;
        let cfg = AssemblyConfig::default();
        let asm = Assembler {
            kernel: &kernel,
            boundary: &b,
            space: &s,
            rows: &rows,
            extracted: &ext,
            cfg: &cfg,
        };
        let h = asm.assemble(OperatorKind::SingleLayer).unwrap();
        let ones = DVector::from_element(s.num_functions(), 1.0);
        let y = h.matvec(&ones).unwrap();
        assert!(y.amax() < 1e-6, "V·1 = {:.3e} on the unit circle", y.amax());
    }

    #[test]
    fn elastic_single_entry_matches_brute_force() {
        let (b, s, ext, rows) = circle_setup(2, 2, Continuity::Discontinuous);
        let mat = Material::new(2.0, 1.0).unwrap();
        let kernel = KernelSet::Elastic(mat.clone());
        let cfg = AssemblyConfig::default();
        let asm = Assembler {
            kernel: &kernel,
            boundary: &b,
            space: &s,
            rows: &rows,
            extracted: &ext,
            cfg: &cfg,
        };
        // One singular pair (row anchored inside the support) and one far
        // pair, against blunt uniform refinement.
        let rule = GaussRule::new(16);
        for (ri, j) in [(0usize, 0usize), (0, 9)] {
            let row = &rows[ri];
            let got = asm.single_entry(row, j).unwrap();
            let mut want = Matrix2::zeros();
            for (e, a, bb) in asm.support_spans(j) {
                // Uniform refinement with the interval split at the
                // collocation parameter, so the log singularity always
                // sits on a cell boundary.
                let mut pieces = vec![(a, bb)];
                if e == row.patch && row.param > a && row.param < bb {
                    pieces = vec![(a, row.param), (row.param, bb)];
                }
                for (pa, pb) in pieces {
                    let cells = 3000;
                    for c in 0..cells {
                        let ca = pa + (pb - pa) * c as f64 / cells as f64;
                        let cb = pa + (pb - pa) * (c + 1) as f64 / cells as f64;
                        for (u, w) in rule.mapped(ca, cb) {
                            let (y, _, jac) = b.frame(e, u).unwrap();
                            let val = s.eval(j, e, u).unwrap();
                            if val == 0.0 {
                                continue;
                            }
                            want += (w * jac * val) * kelvin_u(row.point, y, &mat).unwrap();
                        }
                    }
                }
            }
            assert!(
                (got - want).norm() <= 1e-6 * want.norm().max(1e-3),
                "entry ({ri},{j}): got {got}, want {want}"
            );
        }
    }

    #[test]
    fn laplace_double_layer_is_averaging_operator_on_circle() {
        // On the unit circle dG/dn is the constant -1/(4π), so the exact
        // completed operator maps coefficients c to u(x_i)/2 - (1/4π)∮u.
        let (b, s, ext, rows) = circle_setup(2, 4, Continuity::Continuous);
        let kernel = KernelSet::Laplace;
        let cfg = dense_config();
        let asm = Assembler {
            kernel: &kernel,
            boundary: &b,
            space: &s,
            rows: &rows,
            extracted: &ext,
            cfg: &cfg,
        };
        let h = asm.assemble(OperatorKind::DoubleLayerCompleted).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        let c = DVector::from_fn(s.num_functions(), |_, _| rng.gen_range(-1.0..1.0));
        let y = h.matvec(&c).unwrap();
        // ∮ u dγ by fine quadrature.
        let rule = GaussRule::new(20);
        let mut integral = 0.0;
        for e in 0..b.num_patches() {
            for (a, bb) in s.kvs[e].spans() {
                for cell in 0..8 {
                    let ca = a + (bb - a) * cell as f64 / 8.0;
                    let cb = a + (bb - a) * (cell + 1) as f64 / 8.0;
                    for (u, w) in rule.mapped(ca, cb) {
                        let (_, _, jac) = b.frame(e, u).unwrap();
                        let mut uval = 0.0;
                        for j in 0..s.num_functions() {
                            uval += c[j] * s.eval(j, e, u).unwrap();
                        }
                        integral += w * jac * uval;
                    }
                }
            }
        }
        for (i, row) in rows.iter().enumerate() {
            let mut u_at_x = 0.0;
            for j in 0..s.num_functions() {
                u_at_x += c[j] * s.eval(j, row.patch, row.param).unwrap();
            }
            let oracle = 0.5 * u_at_x - integral / (4.0 * std::f64::consts::PI);
            assert_relative_eq!(y[i], oracle, epsilon = 1e-7);
        }
    }

    #[test]
    fn elastic_double_layer_annihilates_translations() {
        let (b, s, ext, rows) = circle_setup(2, 4, Continuity::Continuous);
        let mat = Material::new(2.0, 1.0).unwrap();
        let kernel = KernelSet::Elastic(mat);
        for cfg in [dense_config(), AssemblyConfig::default()] {
            let asm = Assembler {
                kernel: &kernel,
                boundary: &b,
                space: &s,
                rows: &rows,
                extracted: &ext,
                cfg: &cfg,
            };
            let h = asm.assemble(OperatorKind::DoubleLayerCompleted).unwrap();
            for comp in 0..2 {
                let mut x = DVector::zeros(2 * s.num_functions());
                for j in 0..s.num_functions() {
                    x[2 * j + comp] = 1.0;
                }
                let y = h.matvec(&x).unwrap();
                assert!(y.amax() < 1e-13, "translation residual {:.3e}", y.amax());
            }
        }
    }

    #[test]
    fn lowrank_far_field_matches_dense_assembly() {
        let (b, s, ext, rows) = circle_setup(2, 16, Continuity::Discontinuous);
        let mat = Material::new(2.0, 1.0).unwrap();
        let kernel = KernelSet::Elastic(mat);
        let cfg_h = AssemblyConfig {
            interp_order: 8,
            ..AssemblyConfig::default()
        };
        let cfg_d = dense_config();
        let asm_h = Assembler {
            kernel: &kernel,
            boundary: &b,
            space: &s,
            rows: &rows,
            extracted: &ext,
            cfg: &cfg_h,
        };
        let asm_d = Assembler { cfg: &cfg_d, ..asm_h };
        let h = asm_h.assemble(OperatorKind::SingleLayer).unwrap();
        assert!(
            h.block_tree.admissible_leaves().count() > 0,
            "test geometry must produce admissible blocks"
        );
        let hd = h.to_dense().unwrap();
        let dd = asm_d.assemble(OperatorKind::SingleLayer).unwrap().to_dense().unwrap();
        let scale = dd.amax();
        assert!(
            (&hd - &dd).amax() <= 1e-5 * scale,
            "far-field error {:.3e} of scale {:.3e}",
            (&hd - &dd).amax(),
            scale
        );
    }

    #[test]
    fn double_layer_lowrank_matches_dense_assembly() {
        let (b, s, ext, rows) = circle_setup(2, 16, Continuity::Continuous);
        let mat = Material::new(2.0, 1.0).unwrap();
        let kernel = KernelSet::Elastic(mat);
        let cfg_h = AssemblyConfig {
            interp_order: 8,
            ..AssemblyConfig::default()
        };
        let cfg_d = dense_config();
        let asm_h = Assembler {
            kernel: &kernel,
            boundary: &b,
            space: &s,
            rows: &rows,
            extracted: &ext,
            cfg: &cfg_h,
        };
        let asm_d = Assembler { cfg: &cfg_d, ..asm_h };
        let hd = asm_h
            .assemble(OperatorKind::DoubleLayerCompleted)
            .unwrap()
            .to_dense()
            .unwrap();
        let dd = asm_d
            .assemble(OperatorKind::DoubleLayerCompleted)
            .unwrap()
            .to_dense()
            .unwrap();
        let scale = dd.amax();
        assert!(
            (&hd - &dd).amax() <= 1e-4 * scale,
            "far-field error {:.3e} of scale {:.3e}",
            (&hd - &dd).amax(),
            scale
        );
    }

    #[test]
    fn quadrature_plan_is_shared_between_entries_and_rigid_term() {
        // All-dense completed double layer must cancel constants at the
        // quadrature level, before the final correction even matters: the
        // correction subtracts only the (tiny) interpolation residual, so
        // the dense row sums themselves must already be near zero.
        let (b, s, ext, rows) = circle_setup(2, 3, Continuity::Continuous);
        let mat = Material::new(2.0, 1.0).unwrap();
        let kernel = KernelSet::Elastic(mat);
        let cfg = dense_config();
        let asm = Assembler {
            kernel: &kernel,
            boundary: &b,
            space: &s,
            rows: &rows,
            extracted: &ext,
            cfg: &cfg,
        };
        let rigid = asm.rigid_term(&rows[0]).unwrap();
        let mut row_sum = Matrix2::zeros();
        for j in 0..s.num_functions() {
            row_sum += asm.double_entry(&rows[0], j, &rigid).unwrap();
        }
        assert!(row_sum.norm() < 1e-13, "raw row sum {:.3e}", row_sum.norm());
    }

    #[test]
    fn interpolation_order_reduces_far_field_error() {
        let (b, s, ext, rows) = circle_setup(2, 16, Continuity::Discontinuous);
        let mat = Material::new(2.0, 1.0).unwrap();
        let kernel = KernelSet::Elastic(mat);
        let dd = Assembler {
            kernel: &kernel,
            boundary: &b,
            space: &s,
            rows: &rows,
            extracted: &ext,
            cfg: &dense_config(),
        }
        .assemble(OperatorKind::SingleLayer)
        .unwrap()
        .to_dense()
        .unwrap();
        let mut errs = Vec::new();
        for k in [2usize, 4, 6] {
            let cfg = AssemblyConfig {
                interp_order: k,
                recompress_tol: 0.0,
                ..AssemblyConfig::default()
            };
            let asm = Assembler {
                kernel: &kernel,
                boundary: &b,
                space: &s,
                rows: &rows,
                extracted: &ext,
                cfg: &cfg,
            };
            let hd = asm.assemble(OperatorKind::SingleLayer).unwrap().to_dense().unwrap();
            errs.push((&hd - &dd).amax());
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "errors {errs:?}");
    }
}
