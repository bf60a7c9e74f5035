//! Tensor-product Lagrange interpolation on Chebyshev roots over a
//! bounding box, and the traction operator applied to the interpolation
//! polynomials.

use crate::error::{Error, Result};
use crate::geom::{BoundingBox, Point2};
use crate::kernels::Material;
use nalgebra::Matrix2;

/// One interpolation axis: Chebyshev first-kind roots mapped to [lo, hi].
#[derive(Debug, Clone)]
struct Axis {
    nodes: Vec<f64>,
}

impl Axis {
    fn new(lo: f64, hi: f64, k: usize, pad: f64) -> Axis {
        let (lo, hi) = (lo - pad, hi + pad);
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let nodes = (0..k)
            .map(|i| c + h * ((2 * i + 1) as f64 * std::f64::consts::PI / (2 * k) as f64).cos())
            .collect();
        Axis { nodes }
    }

    /// Cardinal polynomial l_i(x) = Π_{j≠i} (x - x_j)/(x_i - x_j).
    fn cardinal(&self, i: usize, x: f64) -> f64 {
        let xi = self.nodes[i];
        self.nodes
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &xj)| (x - xj) / (xi - xj))
            .product()
    }

    fn cardinal_deriv(&self, i: usize, x: f64) -> f64 {
        let xi = self.nodes[i];
        let mut sum = 0.0;
        for (m, &xm) in self.nodes.iter().enumerate() {
            if m == i {
                continue;
            }
            let mut prod = 1.0 / (xi - xm);
            for (j, &xj) in self.nodes.iter().enumerate() {
                if j != i && j != m {
                    prod *= (x - xj) / (xi - xj);
                }
            }
            sum += prod;
        }
        sum
    }
}

/// Interpolation grid of k x k Chebyshev points over a box. Degenerate
/// axes are padded by max(1e-8, 1e-8 * diam) so the cardinal polynomials
/// stay well defined on flat boxes.
#[derive(Debug, Clone)]
pub struct InterpolationScheme {
    order_k: usize,
    axes: [Axis; 2],
}

impl InterpolationScheme {
    pub fn new(order_k: usize, bbox: &BoundingBox) -> Result<Self> {
        if order_k < 1 {
            return Err(Error::domain("interpolation order must be at least 1"));
        }
        let pad = (1e-8f64).max(1e-8 * bbox.diam());
        Ok(InterpolationScheme {
            order_k,
            axes: [
                Axis::new(bbox.lo.x, bbox.hi.x, order_k, pad),
                Axis::new(bbox.lo.y, bbox.hi.y, order_k, pad),
            ],
        })
    }

    pub fn order(&self) -> usize {
        self.order_k
    }

    /// Number of grid points, k².
    pub fn len(&self) -> usize {
        self.order_k * self.order_k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn split(&self, nu: usize) -> (usize, usize) {
        (nu / self.order_k, nu % self.order_k)
    }

    pub fn node(&self, nu: usize) -> Point2 {
        let (ix, iy) = self.split(nu);
        Point2::new(self.axes[0].nodes[ix], self.axes[1].nodes[iy])
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point2> + '_ {
        (0..self.len()).map(|nu| self.node(nu))
    }

    /// Tensor-product Lagrange polynomial L_ν at `p`.
    pub fn lagrange_eval(&self, nu: usize, p: Point2) -> f64 {
        let (ix, iy) = self.split(nu);
        self.axes[0].cardinal(ix, p.x) * self.axes[1].cardinal(iy, p.y)
    }

    /// Analytic gradient of L_ν at `p`.
    pub fn lagrange_gradient(&self, nu: usize, p: Point2) -> Point2 {
        let (ix, iy) = self.split(nu);
        let lx = self.axes[0].cardinal(ix, p.x);
        let ly = self.axes[1].cardinal(iy, p.y);
        Point2::new(
            self.axes[0].cardinal_deriv(ix, p.x) * ly,
            lx * self.axes[1].cardinal_deriv(iy, p.y),
        )
    }

    /// Traction of the displacement fields L_μ e_m: column m holds the
    /// conormal derivative of L_μ e_m at `y`,
    /// `M_im = λ n_i ∂_m L + μ (n_m ∂_i L + δ_im ∇L·n)`.
    pub fn traction_of_lagrange(&self, mu_idx: usize, y: Point2, n: Point2, mat: &Material) -> Result<Matrix2<f64>> {
        if (n.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::domain("normal vector must have unit length"));
        }
        let g = self.lagrange_gradient(mu_idx, y);
        let gn = g.dot(&n);
        let mut m = Matrix2::zeros();
        for i in 0..2 {
            for mm in 0..2 {
                let delta = if i == mm { 1.0 } else { 0.0 };
                m[(i, mm)] = mat.lame_lambda * n[i] * g[mm]
                    + mat.shear_mu * (n[mm] * g[i] + delta * gn);
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{kelvin_t, kelvin_u};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn bbox(lo: (f64, f64), hi: (f64, f64)) -> BoundingBox {
        BoundingBox::new(Point2::new(lo.0, lo.1), Point2::new(hi.0, hi.1))
    }

    #[test]
    fn single_node_is_midpoint() {
        let s = InterpolationScheme::new(1, &bbox((0.0, 0.0), (2.0, 2.0))).unwrap();
        let n = s.node(0);
        assert_relative_eq!(n.x, 1.0, epsilon = 1e-7);
        assert_relative_eq!(n.y, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn two_node_axis_values() {
        let s = InterpolationScheme::new(2, &bbox((-1.0, -1.0), (1.0, 1.0))).unwrap();
        let expected = (std::f64::consts::PI / 4.0).cos();
        let xs: Vec<f64> = (0..4).map(|nu| s.node(nu).x).collect();
        assert_relative_eq!(xs[0], expected, epsilon = 1e-7);
        assert_relative_eq!(xs[2], -expected, epsilon = 1e-7);
    }

    #[test]
    fn nodes_strictly_inside_box() {
        for k in 1..=10 {
            let b = bbox((0.5, -2.0), (1.5, 3.0));
            let s = InterpolationScheme::new(k, &b).unwrap();
            for p in s.nodes() {
                assert!(p.x > b.lo.x - 1e-7 && p.x < b.hi.x + 1e-7);
                assert!(p.y > b.lo.y - 1e-7 && p.y < b.hi.y + 1e-7);
            }
        }
    }

    #[test]
    fn degenerate_box_is_padded() {
        let b = bbox((0.0, 1.0), (2.0, 1.0)); // zero thickness in y
        let s = InterpolationScheme::new(4, &b).unwrap();
        let v = s.lagrange_eval(0, Point2::new(0.3, 1.0));
        assert!(v.is_finite());
    }

    #[test]
    fn cardinal_property() {
        let s = InterpolationScheme::new(3, &bbox((0.0, 0.0), (1.0, 2.0))).unwrap();
        for nu in 0..s.len() {
            for mu in 0..s.len() {
                let v = s.lagrange_eval(nu, s.node(mu));
                let expect = if nu == mu { 1.0 } else { 0.0 };
                assert_relative_eq!(v, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn partition_of_unity_and_gradient_sum() {
        let b = bbox((-1.0, 2.0), (3.0, 4.0));
        let s = InterpolationScheme::new(5, &b).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let p = Point2::new(rng.gen_range(-1.0..3.0), rng.gen_range(2.0..4.0));
            let sum: f64 = (0..s.len()).map(|nu| s.lagrange_eval(nu, p)).sum();
            assert_relative_eq!(sum, 1.0, epsilon = 1e-11);
            let gsum: Point2 = (0..s.len()).map(|nu| s.lagrange_gradient(nu, p)).sum();
            assert_relative_eq!(gsum.norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn reproduces_bilinear_function() {
        let b = bbox((0.0, 0.0), (2.0, 3.0));
        let s = InterpolationScheme::new(2, &b).unwrap();
        let f = |p: Point2| p.x * p.y;
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let p = Point2::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..3.0));
            let interp: f64 = (0..s.len()).map(|nu| s.lagrange_eval(nu, p) * f(s.node(nu))).sum();
            assert_relative_eq!(interp, f(p), epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = bbox((0.0, -1.0), (2.0, 1.0));
        let s = InterpolationScheme::new(4, &b).unwrap();
        let h = 1e-6;
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..100 {
            let p = Point2::new(rng.gen_range(0.0..2.0), rng.gen_range(-1.0..1.0));
            let nu = rng.gen_range(0..s.len());
            let g = s.lagrange_gradient(nu, p);
            let fdx = (s.lagrange_eval(nu, p + Point2::new(h, 0.0))
                - s.lagrange_eval(nu, p - Point2::new(h, 0.0)))
                / (2.0 * h);
            let fdy = (s.lagrange_eval(nu, p + Point2::new(0.0, h))
                - s.lagrange_eval(nu, p - Point2::new(0.0, h)))
                / (2.0 * h);
            assert_relative_eq!(g.x, fdx, max_relative = 1e-6, epsilon = 1e-8);
            assert_relative_eq!(g.y, fdy, max_relative = 1e-6, epsilon = 1e-8);
        }
    }

    #[test]
    fn k2_gradient_constant_per_variable() {
        // With two nodes the univariate cardinals are affine, so ∂L/∂x is
        // independent of x.
        let s = InterpolationScheme::new(2, &bbox((-1.0, -1.0), (1.0, 1.0))).unwrap();
        let y = 0.37;
        let g1 = s.lagrange_gradient(0, Point2::new(-0.8, y));
        let g2 = s.lagrange_gradient(0, Point2::new(0.9, y));
        assert_relative_eq!(g1.x, g2.x, epsilon = 1e-12);
    }

    #[test]
    fn traction_of_constant_is_zero() {
        let m = Material::new(1.0, 1.0).unwrap();
        let s = InterpolationScheme::new(1, &bbox((0.0, 0.0), (1.0, 1.0))).unwrap();
        let t = s
            .traction_of_lagrange(0, Point2::new(0.5, 0.5), Point2::new(1.0, 0.0), &m)
            .unwrap();
        assert_relative_eq!(t.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn traction_orthogonal_gradient_structure() {
        // ∇L ⟂ n and λ = μ = 1: M_im = λ n_i ∂_m L + μ n_m ∂_i L.
        let m = Material::new(1.0, 1.0).unwrap();
        let s = InterpolationScheme::new(3, &bbox((0.0, 0.0), (1.0, 1.0))).unwrap();
        let y = Point2::new(0.3, 0.6);
        for nu in 0..s.len() {
            let g = s.lagrange_gradient(nu, y);
            if g.norm() < 1e-12 {
                continue;
            }
            let n = Point2::new(-g.y, g.x) / g.norm();
            let t = s.traction_of_lagrange(nu, y, n, &m).unwrap();
            for i in 0..2 {
                for mm in 0..2 {
                    assert_relative_eq!(t[(i, mm)], n[i] * g[mm] + n[mm] * g[i], epsilon = 1e-10);
                }
            }
        }
    }

    /// Interpolating U on admissible boxes and shifting the conormal
    /// derivative to the Lagrange polynomials must converge to the exact
    /// traction kernel T as k grows.
    #[test]
    fn interpolated_traction_converges_to_kelvin_t() {
        let mat = Material::new(1.2, 0.8).unwrap();
        let bx = bbox((0.0, 0.0), (1.0, 1.0));
        let by = bbox((3.0, 0.0), (4.0, 1.0));
        let n = Point2::new(1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt());
        let mut rng = StdRng::seed_from_u64(17);
        let pairs: Vec<(Point2, Point2)> = (0..20)
            .map(|_| {
                (
                    Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)),
                    Point2::new(rng.gen_range(3.0..4.0), rng.gen_range(0.0..1.0)),
                )
            })
            .collect();
        let mut prev_err = f64::INFINITY;
        for k in [2usize, 4, 6, 8] {
            let sx = InterpolationScheme::new(k, &bx).unwrap();
            let sy = InterpolationScheme::new(k, &by).unwrap();
            let mut max_rel: f64 = 0.0;
            for &(x, y) in &pairs {
                let exact = kelvin_t(x, y, n, &mat).unwrap();
                let mut approx_t = Matrix2::zeros();
                for nu in 0..sx.len() {
                    let lx = sx.lagrange_eval(nu, x);
                    if lx == 0.0 {
                        continue;
                    }
                    for mu in 0..sy.len() {
                        let s_nm = kelvin_u(sx.node(nu), sy.node(mu), &mat).unwrap();
                        let tl = sy.traction_of_lagrange(mu, y, n, &mat).unwrap();
                        // K_ab = L_ν(x) U_am(x̄, ȳ) M_bm
                        approx_t += lx * s_nm * tl.transpose();
                    }
                }
                max_rel = max_rel.max((approx_t - exact).norm() / exact.norm());
            }
            assert!(
                max_rel < prev_err,
                "interpolated traction error not decreasing at k={k}: {max_rel} vs {prev_err}"
            );
            prev_err = max_rel;
        }
        assert!(prev_err < 1e-4);
    }

    /// Interpolated displacement kernel error decays monotonically in k
    /// for boxes satisfying the admissibility condition with η = 1.
    #[test]
    fn interpolated_u_error_decays() {
        let mat = Material::new(1.0, 1.0).unwrap();
        let bx = bbox((0.0, 0.0), (1.0, 1.0));
        let by = bbox((3.0, 0.0), (4.0, 1.0));
        assert!(bx.diam().min(by.diam()) <= 1.0 * bx.dist(&by));
        let mut rng = StdRng::seed_from_u64(23);
        let pairs: Vec<(Point2, Point2)> = (0..50)
            .map(|_| {
                (
                    Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)),
                    Point2::new(rng.gen_range(3.0..4.0), rng.gen_range(0.0..1.0)),
                )
            })
            .collect();
        let mut prev = f64::INFINITY;
        for k in [2usize, 4, 6, 8] {
            let sx = InterpolationScheme::new(k, &bx).unwrap();
            let sy = InterpolationScheme::new(k, &by).unwrap();
            let mut max_rel: f64 = 0.0;
            for &(x, y) in &pairs {
                let exact = kelvin_u(x, y, &mat).unwrap();
                let mut approx_u = Matrix2::zeros();
                for nu in 0..sx.len() {
                    let lx = sx.lagrange_eval(nu, x);
                    for mu in 0..sy.len() {
                        let ly = sy.lagrange_eval(mu, y);
                        approx_u += lx * ly * kelvin_u(sx.node(nu), sy.node(mu), &mat).unwrap();
                    }
                }
                max_rel = max_rel.max((approx_u - exact).norm() / exact.norm());
            }
            assert!(max_rel < prev, "U interpolation error not decreasing at k={k}");
            prev = max_rel;
        }
    }
}
