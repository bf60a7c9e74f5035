//! Geometrically balanced binary cluster trees over characteristic points
//! and the admissible block cluster tree.

use crate::geom::{BoundingBox, Point2};

/// Characteristic points with per-index bounding boxes. Collocation (row)
/// indices carry degenerate point boxes; basis (column) indices carry the
/// support box of the function.
#[derive(Debug, Clone)]
pub struct IndexedGeometry {
    pub points: Vec<Point2>,
    pub boxes: Vec<BoundingBox>,
}

impl IndexedGeometry {
    pub fn from_points(points: Vec<Point2>) -> Self {
        let boxes = points.iter().map(|&p| BoundingBox::point(p)).collect();
        IndexedGeometry { points, boxes }
    }

    pub fn new(points: Vec<Point2>, boxes: Vec<BoundingBox>) -> Self {
        assert_eq!(points.len(), boxes.len());
        IndexedGeometry { points, boxes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClusterConfig {
    pub n_min: usize,
    pub eta: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig { n_min: 16, eta: 1.0 }
    }
}

/// A node of the cluster tree: a contiguous range into the permutation
/// array plus the minimal box of its members.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub range: (usize, usize),
    pub bbox: BoundingBox,
    pub level: usize,
    pub children: Option<(usize, usize)>,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.range.1 - self.range.0
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Binary cluster tree stored as an arena, with the permutation
/// (position -> original index) built during construction.
#[derive(Debug, Clone)]
pub struct ClusterTree {
    pub clusters: Vec<Cluster>,
    /// perm[position] = original index.
    pub perm: Vec<usize>,
}

impl ClusterTree {
    /// Geometrically balanced construction: split the cluster box at the
    /// midpoint of its longest axis and assign indices by characteristic
    /// point side; stop at `n_min`. Child boxes are re-shrunk to their
    /// members. Degenerate splits fall back to a median split, and fully
    /// coincident points to a forced halving.
    pub fn build(geom: &IndexedGeometry, cfg: &ClusterConfig) -> ClusterTree {
        assert!(!geom.is_empty(), "cluster tree needs at least one index");
        let mut tree = ClusterTree {
            clusters: Vec::new(),
            perm: (0..geom.len()).collect(),
        };
        tree.build_rec(geom, cfg, 0, geom.len(), 0);
        tree
    }

    fn member_box(&self, geom: &IndexedGeometry, begin: usize, end: usize) -> BoundingBox {
        let mut bbox = BoundingBox::empty();
        for pos in begin..end {
            bbox = bbox.merge(&geom.boxes[self.perm[pos]]);
        }
        bbox
    }

    fn build_rec(&mut self, geom: &IndexedGeometry, cfg: &ClusterConfig, begin: usize, end: usize, level: usize) -> usize {
        let bbox = self.member_box(geom, begin, end);
        let id = self.clusters.len();
        self.clusters.push(Cluster {
            range: (begin, end),
            bbox,
            level,
            children: None,
        });
        let size = end - begin;
        if size <= cfg.n_min.max(1) {
            return id;
        }

        // Split the box of characteristic points at the midpoint of the
        // longest axis of the cluster box.
        let axis = bbox.longest_axis();
        let mid = 0.5 * (bbox.lo[axis] + bbox.hi[axis]);
        let slice = &mut self.perm[begin..end];
        slice.sort_by(|&a, &b| geom.points[a][axis].partial_cmp(&geom.points[b][axis]).unwrap());
        let mut split = slice.partition_point(|&i| geom.points[i][axis] <= mid);
        if split == 0 || split == size {
            // Midpoint split left one side empty: median fallback.
            split = size / 2;
            // Fully coincident points still terminate via the forced halving.
        }
        let left = self.build_rec(geom, cfg, begin, begin + split, level + 1);
        let right = self.build_rec(geom, cfg, begin + split, end, level + 1);
        self.clusters[id].children = Some((left, right));
        id
    }

    pub fn root(&self) -> &Cluster {
        &self.clusters[0]
    }

    pub fn depth(&self) -> usize {
        self.clusters.iter().map(|c| c.level).max().unwrap_or(0)
    }
}

/// Admissibility: min(diam B_t, diam B_s) <= eta * dist(B_t, B_s). The
/// boxes must be strictly separated; a degenerate cluster touching the
/// other would otherwise admit a singular kernel evaluation.
pub fn is_admissible(t: &Cluster, s: &Cluster, eta: f64) -> bool {
    let dist = t.bbox.dist(&s.bbox);
    dist > 0.0 && t.bbox.diam().min(s.bbox.diam()) <= eta * dist
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockStatus {
    Admissible,
    InadmissibleLeaf,
    Subdivided,
}

#[derive(Debug, Clone)]
pub struct BlockCluster {
    pub row: usize,
    pub col: usize,
    pub status: BlockStatus,
    pub children: Vec<usize>,
}

/// Quad tree of blocks t x s, built level-synchronously from the two
/// cluster trees.
#[derive(Debug, Clone)]
pub struct BlockClusterTree {
    pub blocks: Vec<BlockCluster>,
    pub leaves: Vec<usize>,
}

impl BlockClusterTree {
    pub fn build(rows: &ClusterTree, cols: &ClusterTree, cfg: &ClusterConfig) -> BlockClusterTree {
        let mut tree = BlockClusterTree {
            blocks: Vec::new(),
            leaves: Vec::new(),
        };
        tree.build_rec(rows, cols, 0, 0, cfg);
        tree
    }

    fn build_rec(&mut self, rows: &ClusterTree, cols: &ClusterTree, t: usize, s: usize, cfg: &ClusterConfig) -> usize {
        let id = self.blocks.len();
        self.blocks.push(BlockCluster {
            row: t,
            col: s,
            status: BlockStatus::InadmissibleLeaf,
            children: Vec::new(),
        });
        let (tc, sc) = (&rows.clusters[t], &cols.clusters[s]);
        if is_admissible(tc, sc, cfg.eta) {
            self.blocks[id].status = BlockStatus::Admissible;
            self.leaves.push(id);
        } else if let (Some((tl, tr)), Some((sl, sr))) = (tc.children, sc.children) {
            self.blocks[id].status = BlockStatus::Subdivided;
            let kids: Vec<usize> = [(tl, sl), (tl, sr), (tr, sl), (tr, sr)]
                .into_iter()
                .map(|(a, b)| self.build_rec(rows, cols, a, b, cfg))
                .collect();
            self.blocks[id].children = kids;
        } else {
            // One of t, s is a leaf: stop as an inadmissible (dense) leaf.
            self.leaves.push(id);
        }
        id
    }

    pub fn admissible_leaves<'a>(&'a self) -> impl Iterator<Item = usize> + 'a {
        self.leaves
            .iter()
            .copied()
            .filter(|&b| self.blocks[b].status == BlockStatus::Admissible)
    }
}
