//! Hierarchical matrix container: dense and low-rank leaf payloads,
//! matrix-vector product, storage accounting and QR/SVD recompression.

use crate::clustering::{BlockClusterTree, ClusterTree};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Low-rank leaf, either in the three-factor outer-product form A·S·Bᵀ
/// produced by kernel interpolation or the contracted two-factor form
/// U·Vᵀ after recompression (`s == None`).
#[derive(Debug, Clone)]
pub struct LowRankBlock {
    pub a: DMatrix<f64>,
    pub s: Option<DMatrix<f64>>,
    pub b: DMatrix<f64>,
}

impl LowRankBlock {
    pub fn three_factor(a: DMatrix<f64>, s: DMatrix<f64>, b: DMatrix<f64>) -> Self {
        assert_eq!(a.ncols(), s.nrows());
        assert_eq!(s.ncols(), b.ncols());
        LowRankBlock { a, s: Some(s), b }
    }

    pub fn two_factor(u: DMatrix<f64>, v: DMatrix<f64>) -> Self {
        assert_eq!(u.ncols(), v.ncols());
        LowRankBlock { a: u, s: None, b: v }
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.b.nrows()
    }

    pub fn rank(&self) -> usize {
        self.a.ncols()
    }

    pub fn payload_reals(&self) -> usize {
        self.a.len() + self.s.as_ref().map_or(0, |s| s.len()) + self.b.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.s {
            Some(s) => &self.a * s * self.b.transpose(),
            None => &self.a * self.b.transpose(),
        }
    }

    /// y += R * x, evaluated factor by factor at cost k(r+c+k).
    pub fn apply_add(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        let bt_x = self.b.transpose() * x;
        let core = match &self.s {
            Some(s) => s * bt_x,
            None => bt_x,
        };
        y.gemv(1.0, &self.a, &core, 1.0);
    }

    /// Recompression by economy QR of both factors and an SVD of the small
    /// core, truncated at the first singular value below `tol` relative to
    /// the largest. Never increases the rank.
    pub fn recompress(&self, tol: f64) -> Result<LowRankBlock> {
        if tol < 0.0 {
            return Err(Error::domain("recompression tolerance must be non-negative"));
        }
        let left = match &self.s {
            Some(s) => &self.a * s,
            None => self.a.clone(),
        };
        let qr1 = left.qr();
        let (q1, r1) = (qr1.q(), qr1.r());
        let qr2 = self.b.clone().qr();
        let (q2, r2) = (qr2.q(), qr2.r());
        let core = r1 * r2.transpose();
        let svd = core.svd(true, true);
        let sigma = &svd.singular_values;
        let s_max = sigma.max();
        if s_max == 0.0 {
            // Zero block: keep a rank-1 zero representation.
            return Ok(LowRankBlock::two_factor(
                DMatrix::zeros(self.nrows(), 1),
                DMatrix::zeros(self.ncols(), 1),
            ));
        }
        let mut k = sigma.len();
        for (i, &s) in sigma.iter().enumerate() {
            if s <= tol * s_max || (tol == 0.0 && s == 0.0) {
                k = i;
                break;
            }
        }
        let k = k.max(1);
        let u_core = svd.u.as_ref().unwrap();
        let v_t = svd.v_t.as_ref().unwrap();
        let mut u = q1 * u_core.columns(0, k);
        for (j, mut col) in u.column_iter_mut().enumerate() {
            col *= sigma[j];
        }
        let v = q2 * v_t.rows(0, k).transpose();
        Ok(LowRankBlock::two_factor(u, v))
    }
}

#[derive(Debug, Clone)]
pub enum Payload {
    Dense(DMatrix<f64>),
    LowRank(LowRankBlock),
}

impl Payload {
    pub fn payload_reals(&self) -> usize {
        match self {
            Payload::Dense(d) => d.len(),
            Payload::LowRank(r) => r.payload_reals(),
        }
    }
}

/// Storage accounting of an H-matrix versus its dense equivalent.
/// Only matrix reals are counted; tree and index overhead is excluded.
#[derive(Debug, Clone, Copy)]
pub struct StorageReport {
    pub bytes_h: usize,
    pub bytes_dense: usize,
    pub compression_rate: f64,
}

/// Block-partitioned matrix over a row and a column cluster tree. Scalar
/// cluster indices expand to `ncomp` vector components at payload level
/// (component-blocked layout), so payload dimensions are `ncomp` times the
/// cluster sizes.
#[derive(Debug, Clone)]
pub struct HMatrix {
    pub rows: ClusterTree,
    pub cols: ClusterTree,
    pub block_tree: BlockClusterTree,
    /// One payload per block-tree leaf, indexed by block id.
    pub payloads: Vec<Option<Payload>>,
    pub ncomp: usize,
}

impl HMatrix {
    pub fn new(rows: ClusterTree, cols: ClusterTree, block_tree: BlockClusterTree, ncomp: usize) -> Self {
        let n_blocks = block_tree.blocks.len();
        HMatrix {
            rows,
            cols,
            block_tree,
            payloads: vec![None; n_blocks],
            ncomp,
        }
    }

    /// Scalar dimensions (number of cluster indices).
    pub fn dims_scalar(&self) -> (usize, usize) {
        (self.rows.perm.len(), self.cols.perm.len())
    }

    /// Component dimensions of the represented matrix.
    pub fn dims(&self) -> (usize, usize) {
        let (r, c) = self.dims_scalar();
        (r * self.ncomp, c * self.ncomp)
    }

    fn leaf_shape(&self, block: usize) -> (usize, usize) {
        let blk = &self.block_tree.blocks[block];
        let t = &self.rows.clusters[blk.row];
        let s = &self.cols.clusters[blk.col];
        (t.size() * self.ncomp, s.size() * self.ncomp)
    }

    pub fn set_payload(&mut self, block: usize, payload: Payload) {
        let (r, c) = self.leaf_shape(block);
        let ok = match &payload {
            Payload::Dense(d) => d.nrows() == r && d.ncols() == c,
            Payload::LowRank(l) => l.nrows() == r && l.ncols() == c,
        };
        assert!(ok, "payload shape mismatch for block {block}");
        self.payloads[block] = Some(payload);
    }

    /// y = H x with `x` and `y` in original (unpermuted) index order.
    pub fn matvec(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (nr, nc) = self.dims();
        if x.len() != nc {
            return Err(Error::domain(format!("matvec dimension mismatch: {} vs {nc}", x.len())));
        }
        let nb = self.ncomp;
        let y = self
            .block_tree
            .leaves
            .par_iter()
            .fold(
                || DVector::zeros(nr),
                |mut acc: DVector<f64>, &leaf| {
                    let blk = &self.block_tree.blocks[leaf];
                    let t = &self.rows.clusters[blk.row];
                    let s = &self.cols.clusters[blk.col];
                    let payload = self.payloads[leaf]
                        .as_ref()
                        .expect("missing payload on block-tree leaf");
                    let mut xs = DVector::zeros(s.size() * nb);
                    for (local, pos) in (s.range.0..s.range.1).enumerate() {
                        let j = self.cols.perm[pos];
                        for c in 0..nb {
                            xs[local * nb + c] = x[j * nb + c];
                        }
                    }
                    let mut ys = DVector::zeros(t.size() * nb);
                    match payload {
                        Payload::Dense(d) => ys.gemv(1.0, d, &xs, 0.0),
                        Payload::LowRank(l) => l.apply_add(&xs, &mut ys),
                    }
                    for (local, pos) in (t.range.0..t.range.1).enumerate() {
                        let i = self.rows.perm[pos];
                        for c in 0..nb {
                            acc[i * nb + c] += ys[local * nb + c];
                        }
                    }
                    acc
                },
            )
            .reduce(|| DVector::zeros(nr), |a, b| a + b);
        Ok(y)
    }

    /// Dense materialization in original index order. Guarded against
    /// oversized expansions.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let (nr, nc) = self.dims();
        if nr * nc > 4_000_000 {
            return Err(Error::DenseGuard { rows: nr, cols: nc });
        }
        let nb = self.ncomp;
        let mut out = DMatrix::zeros(nr, nc);
        for &leaf in &self.block_tree.leaves {
            let blk = &self.block_tree.blocks[leaf];
            let t = &self.rows.clusters[blk.row];
            let s = &self.cols.clusters[blk.col];
            let payload = self.payloads[leaf].as_ref().expect("missing payload");
            let dense = match payload {
                Payload::Dense(d) => d.clone(),
                Payload::LowRank(l) => l.to_dense(),
            };
            for (li, pos_i) in (t.range.0..t.range.1).enumerate() {
                let i = self.rows.perm[pos_i];
                for (lj, pos_j) in (s.range.0..s.range.1).enumerate() {
                    let j = self.cols.perm[pos_j];
                    for a in 0..nb {
                        for b in 0..nb {
                            out[(i * nb + a, j * nb + b)] = dense[(li * nb + a, lj * nb + b)];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn storage_report(&self) -> StorageReport {
        let reals_h: usize = self
            .block_tree
            .leaves
            .iter()
            .filter_map(|&l| self.payloads[l].as_ref())
            .map(|p| p.payload_reals())
            .sum();
        let (nr, nc) = self.dims();
        let reals_dense = nr * nc;
        StorageReport {
            bytes_h: reals_h * 8,
            bytes_dense: reals_dense * 8,
            compression_rate: reals_dense as f64 / reals_h as f64,
        }
    }

    /// Recompress every low-rank leaf in place.
    pub fn recompress(&mut self, tol: f64) -> Result<()> {
        for &leaf in &self.block_tree.leaves {
            if let Some(Payload::LowRank(l)) = &self.payloads[leaf] {
                let before = l.payload_reals();
                let two = l.recompress(tol)?;
                if two.payload_reals() < before {
                    self.payloads[leaf] = Some(Payload::LowRank(two));
                }
            }
        }
        Ok(())
    }

    /// Position of an original row index in the permuted ordering, with
    /// the containing dense leaf, for entry-level diagonal completion.
    pub fn dense_entry_mut(&mut self, orig_i: usize, orig_j: usize) -> Option<(&mut DMatrix<f64>, usize, usize)> {
        let pos_i = self.rows.perm.iter().position(|&v| v == orig_i)?;
        let pos_j = self.cols.perm.iter().position(|&v| v == orig_j)?;
        self.dense_entry_mut_at(pos_i, pos_j)
    }

    fn dense_entry_mut_at(&mut self, pos_i: usize, pos_j: usize) -> Option<(&mut DMatrix<f64>, usize, usize)> {
        // Walk the block tree to the leaf containing the position pair.
        let mut node = 0usize;
        loop {
            let blk = &self.block_tree.blocks[node];
            if blk.children.is_empty() {
                break;
            }
            let mut next = None;
            for &c in &blk.children {
                let cb = &self.block_tree.blocks[c];
                let t = &self.rows.clusters[cb.row];
                let s = &self.cols.clusters[cb.col];
                if pos_i >= t.range.0 && pos_i < t.range.1 && pos_j >= s.range.0 && pos_j < s.range.1 {
                    next = Some(c);
                    break;
                }
            }
            node = next?;
        }
        let blk = &self.block_tree.blocks[node];
        let (t0, s0) = (
            self.rows.clusters[blk.row].range.0,
            self.cols.clusters[blk.col].range.0,
        );
        match self.payloads[node].as_mut() {
            Some(Payload::Dense(d)) => Some((d, pos_i - t0, pos_j - s0)),
            _ => None,
        }
    }
}
