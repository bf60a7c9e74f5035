//! Points and axis-aligned bounding boxes in the plane.

pub type Point2 = nalgebra::Vector2<f64>;

/// Axis-aligned bounding box. Degenerate (zero-thickness) boxes are valid;
/// they arise from collocation points and straight boundary segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub lo: Point2,
    pub hi: Point2,
}

impl BoundingBox {
    pub fn new(lo: Point2, hi: Point2) -> Self {
        debug_assert!(lo.x <= hi.x && lo.y <= hi.y);
        BoundingBox { lo, hi }
    }

    pub fn point(p: Point2) -> Self {
        BoundingBox { lo: p, hi: p }
    }

    /// Empty box, absorbing under `merge`/`expand`.
    pub fn empty() -> Self {
        BoundingBox {
            lo: Point2::new(f64::INFINITY, f64::INFINITY),
            hi: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo.x > self.hi.x || self.lo.y > self.hi.y
    }

    pub fn expand(&mut self, p: Point2) {
        self.lo.x = self.lo.x.min(p.x);
        self.lo.y = self.lo.y.min(p.y);
        self.hi.x = self.hi.x.max(p.x);
        self.hi.y = self.hi.y.max(p.y);
    }

    pub fn merge(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            lo: Point2::new(self.lo.x.min(other.lo.x), self.lo.y.min(other.lo.y)),
            hi: Point2::new(self.hi.x.max(other.hi.x), self.hi.y.max(other.hi.y)),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point2>) -> BoundingBox {
        let mut b = BoundingBox::empty();
        for p in points {
            b.expand(*p);
        }
        b
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        p.x >= self.lo.x - tol && p.x <= self.hi.x + tol && p.y >= self.lo.y - tol && p.y <= self.hi.y + tol
    }

    /// Euclidean length of the box diagonal.
    pub fn diam(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (self.hi - self.lo).norm()
    }

    /// Euclidean distance between the closest points of two boxes,
    /// zero when they overlap.
    pub fn dist(&self, other: &BoundingBox) -> f64 {
        let dx = (self.lo.x - other.hi.x).max(other.lo.x - self.hi.x).max(0.0);
        let dy = (self.lo.y - other.hi.y).max(other.lo.y - self.hi.y).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }

    pub fn center(&self) -> Point2 {
        (self.lo + self.hi) * 0.5
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Index of the longest axis.
    pub fn longest_axis(&self) -> usize {
        if self.extent(0) >= self.extent(1) {
            0
        } else {
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diam_of_unit_square() {
        let b = BoundingBox::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        assert_relative_eq!(b.diam(), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn dist_axis_gap() {
        let a = BoundingBox::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        let b = BoundingBox::new(Point2::new(3.0, 0.0), Point2::new(4.0, 1.0));
        assert_relative_eq!(a.dist(&b), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn dist_overlapping_is_zero() {
        let a = BoundingBox::new(Point2::new(0.0, 0.0), Point2::new(2.0, 2.0));
        let b = BoundingBox::new(Point2::new(1.0, 1.0), Point2::new(3.0, 3.0));
        assert_eq!(a.dist(&b), 0.0);
    }

    #[test]
    fn degenerate_point_box() {
        let b = BoundingBox::point(Point2::new(0.5, -1.0));
        assert_eq!(b.diam(), 0.0);
        assert!(b.contains(Point2::new(0.5, -1.0), 0.0));
    }
}
