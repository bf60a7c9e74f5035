//! Closed NURBS boundaries, Cauchy-data basis spaces and collocation.
//!
//! The geometry is a closed, positively oriented loop of NURBS patches,
//! each parameterized over [0, 1]. Cauchy data lives in B-spline spaces
//! defined per patch: a continuous space (displacements) whose functions
//! are shared across patch joints, and a patchwise discontinuous space
//! (tractions) whose end functions are duplicated at the joints.

use crate::error::{Error, Result};
use crate::geom::{BoundingBox, Point2};
use crate::nurbs::{BezierSegment, KnotVector, NurbsCurve};

/// Indentation fraction for collocation points of C^{-1} end functions,
/// relative to the adjacent span length.
pub const INDENT_DELTA: f64 = 0.05;

/// Closure tolerance between consecutive patch end points.
pub const CLOSURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Boundary {
    pub patches: Vec<NurbsCurve>,
}

impl Boundary {
    /// A closed loop: the end point of patch e must coincide with the
    /// start point of patch e+1, the last closing back to the first.
    pub fn new(patches: Vec<NurbsCurve>) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::Geometry {
                patch: 0,
                msg: "boundary needs at least one patch".into(),
            });
        }
        for (e, patch) in patches.iter().enumerate() {
            let (lo, hi) = patch.knot_vector().domain();
            if (lo - 0.0).abs() > CLOSURE_TOL || (hi - 1.0).abs() > CLOSURE_TOL {
                return Err(Error::Geometry {
                    patch: e,
                    msg: "patch parametric domain must be [0, 1]".into(),
                });
            }
            let next = &patches[(e + 1) % patches.len()];
            let end = patch.eval(1.0)?.point;
            let start = next.eval(0.0)?.point;
            if (end - start).norm() > CLOSURE_TOL {
                return Err(Error::Geometry {
                    patch: e,
                    msg: format!("open loop: gap {:.3e} to next patch", (end - start).norm()),
                });
            }
        }
        Ok(Boundary { patches })
    }

    pub fn num_patches(&self) -> usize {
        self.patches.len()
    }

    pub fn point(&self, patch: usize, u: f64) -> Result<Point2> {
        Ok(self.patches[patch].eval(u)?.point)
    }

    /// Point, outward normal and arc-length Jacobian at a parameter. The
    /// loop is positively oriented, so the outward normal is the tangent
    /// rotated by -90 degrees.
    pub fn frame(&self, patch: usize, u: f64) -> Result<(Point2, Point2, f64)> {
        let ev = self.patches[patch].eval(u)?;
        let jac = ev.tangent.norm();
        let normal = Point2::new(ev.tangent.y, -ev.tangent.x) / jac;
        Ok((ev.point, normal, jac))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    /// At least C^0 across patch joints (displacement space S_h).
    Continuous,
    /// Patchwise discontinuous (traction space S_h^-): end functions are
    /// not shared across joints.
    Discontinuous,
}

/// A global basis function: one patch-local B-spline, or the merged pair
/// at a patch joint for the continuous space.
#[derive(Debug, Clone)]
pub struct BasisFunction {
    /// (patch, local function index) pieces, in loop order.
    pub pieces: Vec<(usize, usize)>,
}

/// Indexed set of basis functions over the whole boundary.
#[derive(Debug, Clone)]
pub struct BasisSpace {
    pub continuity: Continuity,
    /// Field knot vector per patch (independent of the geometry degree).
    pub kvs: Vec<KnotVector>,
    pub functions: Vec<BasisFunction>,
    /// (patch, local) -> global function index.
    piece_map: std::collections::HashMap<(usize, usize), usize>,
}

impl BasisSpace {
    pub fn new(boundary: &Boundary, kvs: Vec<KnotVector>, continuity: Continuity) -> Result<Self> {
        if kvs.len() != boundary.num_patches() {
            return Err(Error::config("one field knot vector per patch required"));
        }
        let mut functions: Vec<BasisFunction> = Vec::new();
        let mut piece_map: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let e_count = kvs.len();
        for (e, kv) in kvs.iter().enumerate() {
            let n = kv.num_basis();
            for local in 0..n {
                if continuity == Continuity::Continuous && local == 0 && e_count > 1 {
                    // Merge with the last function of the previous patch;
                    // for e = 0 that function is created later, so close
                    // the loop after the pass below.
                    if e > 0 {
                        let prev_n = kvs[e - 1].num_basis();
                        let g = piece_map[&(e - 1, prev_n - 1)];
                        functions[g].pieces.push((e, local));
                        piece_map.insert((e, local), g);
                        continue;
                    }
                }
                let g = functions.len();
                functions.push(BasisFunction {
                    pieces: vec![(e, local)],
                });
                piece_map.insert((e, local), g);
            }
        }
        if continuity == Continuity::Continuous && e_count > 1 {
            // Close the loop: last function of the last patch is the first
            // function of patch 0.
            let last = (e_count - 1, kvs[e_count - 1].num_basis() - 1);
            let g_last = piece_map[&last];
            let g_first = piece_map[&(0, 0)];
            let piece = functions[g_last].pieces.clone();
            if g_last != g_first {
                functions[g_first].pieces.extend(piece);
                for p in functions[g_last].pieces.clone() {
                    piece_map.insert(p, g_first);
                }
                functions.remove(g_last);
                // `g_last` is the final index, so removal keeps others stable.
                debug_assert_eq!(g_last, functions.len());
            }
        }
        Ok(BasisSpace {
            continuity,
            kvs,
            functions,
            piece_map,
        })
    }

    /// Uniform open knot vectors with `n_spans` spans per patch.
    pub fn uniform(boundary: &Boundary, degree: usize, n_spans: usize, continuity: Continuity) -> Result<Self> {
        let kvs = (0..boundary.num_patches())
            .map(|_| KnotVector::open_uniform(degree, n_spans))
            .collect();
        Self::new(boundary, kvs, continuity)
    }

    pub fn num_functions(&self) -> usize {
        self.functions.len()
    }

    pub fn global_of(&self, patch: usize, local: usize) -> usize {
        self.piece_map[&(patch, local)]
    }

    /// Value of global function `g` at a patch parameter.
    pub fn eval(&self, g: usize, patch: usize, u: f64) -> Result<f64> {
        let kv = &self.kvs[patch];
        let p = kv.degree();
        let (span, vals) = kv.eval_basis(u)?;
        let mut total = 0.0;
        for &(pe, local) in &self.functions[g].pieces {
            if pe == patch && local + p >= span && local <= span {
                total += vals[local + p - span];
            }
        }
        Ok(total)
    }

    /// Global indices of the functions active on the span containing `u`
    /// of `patch` (the span's p+1 local functions mapped to globals).
    pub fn active_at(&self, patch: usize, u: f64) -> Result<Vec<usize>> {
        let kv = &self.kvs[patch];
        let span = kv.find_span(u)?;
        let p = kv.degree();
        Ok((span - p..=span).map(|local| self.global_of(patch, local)).collect())
    }

    /// Parametric support intervals of global function `g`, per piece.
    pub fn support(&self, g: usize) -> Vec<(usize, f64, f64)> {
        self.functions[g]
            .pieces
            .iter()
            .map(|&(e, local)| {
                let (a, b) = self.kvs[e].support(local);
                (e, a, b)
            })
            .collect()
    }

    /// Greville anchor of global function `g` as (patch, parameter). The
    /// merged joint function of the continuous space anchors at the joint.
    pub fn anchor(&self, g: usize) -> Result<(usize, f64)> {
        let f = &self.functions[g];
        if f.pieces.len() > 1 {
            // Joint function: anchor at the joint, i.e. the start of the
            // piece with local index 0.
            let &(e, _) = f.pieces.iter().find(|&&(_, local)| local == 0).unwrap();
            return Ok((e, 0.0));
        }
        let (e, local) = f.pieces[0];
        let xi = self.kvs[e].greville_abscissae()?[local];
        Ok((e, xi))
    }

    /// Whether `g` is C^{-1} at a patch end (a duplicated end function of
    /// the discontinuous space).
    pub fn is_cminus1_end(&self, g: usize) -> bool {
        if self.continuity != Continuity::Discontinuous {
            return false;
        }
        let (e, local) = self.functions[g].pieces[0];
        local == 0 || local == self.kvs[e].num_basis() - 1
    }
}

/// One collocation point, tied to a basis function of the unknown space.
#[derive(Debug, Clone)]
pub struct CollocationPoint {
    pub point: Point2,
    pub patch: usize,
    pub param: f64,
    pub indented: bool,
    pub function: usize,
}

/// Greville collocation with indentation of C^{-1} end functions: the
/// parametric point is moved inward by `INDENT_DELTA` times the adjacent
/// span length so collocation points at patch joints stay distinct.
pub fn build_collocation(space: &BasisSpace, boundary: &Boundary) -> Result<Vec<CollocationPoint>> {
    let mut points = Vec::with_capacity(space.num_functions());
    for g in 0..space.num_functions() {
        let (patch, xi) = space.anchor(g)?;
        let kv = &space.kvs[patch];
        let spans = kv.spans();
        let mut u = xi;
        let mut indented = false;
        if space.is_cminus1_end(g) {
            let (lo, hi) = kv.domain();
            if (xi - lo).abs() < 1e-12 {
                u = lo + INDENT_DELTA * (spans.first().unwrap().1 - spans.first().unwrap().0);
                indented = true;
            } else if (xi - hi).abs() < 1e-12 {
                u = hi - INDENT_DELTA * (spans.last().unwrap().1 - spans.last().unwrap().0);
                indented = true;
            }
        }
        points.push(CollocationPoint {
            point: boundary.point(patch, u)?,
            patch,
            param: u,
            indented,
            function: g,
        });
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if (points[i].point - points[j].point).norm() < 1e-12 {
                return Err(Error::config(format!(
                    "duplicate collocation points for functions {i} and {j}"
                )));
            }
        }
    }
    Ok(points)
}

/// Per-patch Bezier extraction of the geometry on the accumulated knot
/// breakpoints of the given field spaces. The extracted control points
/// bound the curve, which yields support boxes per basis function.
#[derive(Debug, Clone)]
pub struct ExtractedBoundary {
    pub segments: Vec<Vec<BezierSegment>>,
}

impl ExtractedBoundary {
    pub fn new(boundary: &Boundary, spaces: &[&BasisSpace]) -> Result<Self> {
        let mut segments = Vec::with_capacity(boundary.num_patches());
        for (e, patch) in boundary.patches.iter().enumerate() {
            let mut extra: Vec<f64> = Vec::new();
            for space in spaces {
                extra.extend(space.kvs[e].breakpoints().iter().map(|&(v, _)| v));
            }
            segments.push(patch.bezier_extract_with(&extra)?);
        }
        Ok(ExtractedBoundary { segments })
    }

    /// Axis-aligned support box of global function `g` of `space`: the
    /// box of the extracted control points over the knot spans of the
    /// function's support, a convex hull of the curve there.
    pub fn support_box(&self, boundary: &Boundary, space: &BasisSpace, g: usize) -> BoundingBox {
        let mut bbox = BoundingBox::empty();
        for (e, a, b) in space.support(g) {
            bbox = bbox.merge(&boundary.patches[e].control_bbox_on(&self.segments[e], a, b));
        }
        bbox
    }
}

/// The unit circle as four rational quadratic arcs, positively oriented.
pub fn unit_circle() -> Boundary {
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let kv = || KnotVector::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2).unwrap();
    let corner = |x: f64, y: f64| Point2::new(x, y);
    let arcs = [
        (corner(1.0, 0.0), corner(1.0, 1.0), corner(0.0, 1.0)),
        (corner(0.0, 1.0), corner(-1.0, 1.0), corner(-1.0, 0.0)),
        (corner(-1.0, 0.0), corner(-1.0, -1.0), corner(0.0, -1.0)),
        (corner(0.0, -1.0), corner(1.0, -1.0), corner(1.0, 0.0)),
    ];
    let patches = arcs
        .into_iter()
        .map(|(p0, p1, p2)| NurbsCurve::new(kv(), vec![p0, p1, p2], vec![1.0, w, 1.0]).unwrap())
        .collect();
    Boundary::new(patches).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_circle_is_closed_and_exact() {
        let b = unit_circle();
        assert_eq!(b.num_patches(), 4);
        for e in 0..4 {
            for i in 0..=20 {
                let u = i as f64 / 20.0;
                let p = b.point(e, u).unwrap();
                assert_relative_eq!(p.norm(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn outward_normal_on_circle() {
        let b = unit_circle();
        let (p, n, jac) = b.frame(0, 0.3).unwrap();
        assert_relative_eq!((n - p).norm(), 0.0, epsilon = 1e-12);
        assert!(jac > 0.0);
    }

    #[test]
    fn open_loop_is_rejected() {
        let kv = KnotVector::new(vec![0.0, 0.0, 1.0, 1.0], 1).unwrap();
        let seg = NurbsCurve::new(
            kv,
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)],
            vec![1.0, 1.0],
        )
        .unwrap();
        let err = Boundary::new(vec![seg]).unwrap_err();
        assert!(matches!(err, Error::Geometry { patch: 0, .. }));
    }

    #[test]
    fn discontinuous_space_counts() {
        let b = unit_circle();
        let s = BasisSpace::uniform(&b, 2, 2, Continuity::Discontinuous).unwrap();
        // 4 spans + ... each patch: 2 spans, p=2 -> 4 functions; x4 patches.
        assert_eq!(s.num_functions(), 16);
        for g in 0..s.num_functions() {
            assert_eq!(s.functions[g].pieces.len(), 1);
        }
    }

    #[test]
    fn continuous_space_merges_joints() {
        let b = unit_circle();
        let s = BasisSpace::uniform(&b, 2, 2, Continuity::Continuous).unwrap();
        // 4 joints merged: 16 - 4 = 12 functions.
        assert_eq!(s.num_functions(), 12);
        let joint: Vec<_> = (0..12).filter(|&g| s.functions[g].pieces.len() == 2).collect();
        assert_eq!(joint.len(), 4);
    }

    #[test]
    fn continuous_partition_of_unity_across_joint() {
        let b = unit_circle();
        let s = BasisSpace::uniform(&b, 2, 3, Continuity::Continuous).unwrap();
        for e in 0..4 {
            for i in 0..=10 {
                let u = i as f64 / 10.0;
                let total: f64 = (0..s.num_functions()).map(|g| s.eval(g, e, u).unwrap()).sum();
                assert_relative_eq!(total, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn joint_function_is_continuous_at_joint() {
        let b = unit_circle();
        let s = BasisSpace::uniform(&b, 2, 2, Continuity::Continuous).unwrap();
        let g = s.global_of(0, s.kvs[0].num_basis() - 1);
        assert_eq!(g, s.global_of(1, 0));
        let v_end = s.eval(g, 0, 1.0).unwrap();
        let v_start = s.eval(g, 1, 0.0).unwrap();
        assert_relative_eq!(v_end, 1.0, epsilon = 1e-12);
        assert_relative_eq!(v_start, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn collocation_single_patch_continuous_greville() {
        // Single Bezier patch, p = 2: collocation at parametric 0, 1/2, 1.
        let b = unit_circle();
        let s = BasisSpace::uniform(&b, 2, 1, Continuity::Continuous).unwrap();
        let pts = build_collocation(&s, &b).unwrap();
        assert_eq!(pts.len(), 8);
        let on_patch0: Vec<&CollocationPoint> = pts.iter().filter(|c| c.patch == 0).collect();
        assert!(on_patch0.iter().any(|c| (c.param - 0.5).abs() < 1e-12));
        assert!(pts.iter().all(|c| !c.indented));
    }

    #[test]
    fn collocation_discontinuous_indentation() {
        let b = unit_circle();
        let s = BasisSpace::uniform(&b, 2, 1, Continuity::Discontinuous).unwrap();
        let pts = build_collocation(&s, &b).unwrap();
        assert_eq!(pts.len(), 12);
        // End functions indented inward by 0.05 of the single span.
        for c in &pts {
            if c.indented {
                assert!((c.param - 0.05).abs() < 1e-12 || (c.param - 0.95).abs() < 1e-12);
            } else {
                assert_relative_eq!(c.param, 0.5, epsilon = 1e-12);
            }
        }
        // All distinct even at patch joints.
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                assert!((pts[i].point - pts[j].point).norm() > 1e-6);
            }
        }
    }

    #[test]
    fn support_boxes_contain_curve() {
        let b = unit_circle();
        let su = BasisSpace::uniform(&b, 2, 3, Continuity::Continuous).unwrap();
        let st = BasisSpace::uniform(&b, 2, 2, Continuity::Discontinuous).unwrap();
        let ext = ExtractedBoundary::new(&b, &[&su, &st]).unwrap();
        for (space, name) in [(&su, "u"), (&st, "t")] {
            for g in 0..space.num_functions() {
                let bbox = ext.support_box(&b, space, g);
                for (e, a, bb) in space.support(g) {
                    for i in 0..=200 {
                        let u = a + (bb - a) * i as f64 / 200.0;
                        let p = b.point(e, u).unwrap();
                        assert!(
                            bbox.contains(p, 1e-12),
                            "space {name} fn {g}: point at ({e}, {u}) outside box"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn straight_patch_box_degenerates() {
        // A square: degenerate (flat) boxes must be accepted.
        let kv = || KnotVector::new(vec![0.0, 0.0, 1.0, 1.0], 1).unwrap();
        let seg = |a: (f64, f64), b: (f64, f64)| {
            NurbsCurve::new(
                kv(),
                vec![Point2::new(a.0, a.1), Point2::new(b.0, b.1)],
                vec![1.0, 1.0],
            )
            .unwrap()
        };
        let b = Boundary::new(vec![
            seg((0.0, 0.0), (1.0, 0.0)),
            seg((1.0, 0.0), (1.0, 1.0)),
            seg((1.0, 1.0), (0.0, 1.0)),
            seg((0.0, 1.0), (0.0, 0.0)),
        ])
        .unwrap();
        let s = BasisSpace::uniform(&b, 1, 2, Continuity::Discontinuous).unwrap();
        let ext = ExtractedBoundary::new(&b, &[&s]).unwrap();
        let bbox = ext.support_box(&b, &s, 0);
        assert_eq!(bbox.extent(1), 0.0); // flat along the bottom edge
        assert!(bbox.extent(0) > 0.0);
    }

    #[test]
    fn degree_one_support_box_is_control_polygon_box() {
        let kv = || KnotVector::new(vec![0.0, 0.0, 1.0, 1.0], 1).unwrap();
        let seg = |a: (f64, f64), b: (f64, f64)| {
            NurbsCurve::new(
                kv(),
                vec![Point2::new(a.0, a.1), Point2::new(b.0, b.1)],
                vec![1.0, 1.0],
            )
            .unwrap()
        };
        let b = Boundary::new(vec![
            seg((0.0, 0.0), (1.0, 0.0)),
            seg((1.0, 0.0), (0.5, 1.0)),
            seg((0.5, 1.0), (0.0, 0.0)),
        ])
        .unwrap();
        // p = 1, 2 spans: the middle hat function on patch 0 is supported
        // on [0, 1]; its box spans the whole edge.
        let s = BasisSpace::uniform(&b, 1, 2, Continuity::Discontinuous).unwrap();
        let ext = ExtractedBoundary::new(&b, &[&s]).unwrap();
        let g = s.global_of(0, 1);
        let bbox = ext.support_box(&b, &s, g);
        assert_relative_eq!(bbox.lo.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(bbox.hi.x, 1.0, epsilon = 1e-12);
    }
}
