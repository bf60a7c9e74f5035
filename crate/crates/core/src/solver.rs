//! Boundary value problem setup and solution.
//!
//! The collocated boundary integral equation (C + K) u = V t is closed
//! with mixed boundary conditions: tractions are unknown on Dirichlet
//! patches, displacements on Neumann patches. The system keeps the two
//! operators whole (one H-matrix each) and routes known and unknown
//! coefficients through index masks, so a matrix-vector product of the
//! system costs two H-matrix products.

use crate::assembly::{Assembler, AssemblyConfig, KernelSet, OperatorKind, QuadratureConfig};
use crate::boundary::{build_collocation, BasisSpace, Boundary, CollocationPoint, Continuity, ExtractedBoundary};
use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::hmatrix::HMatrix;
use crate::quadrature::{graded_cells, GaussRule};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcType {
    Dirichlet,
    Neumann,
}

/// Discretized boundary value problem: geometry, kernel family, Cauchy
/// data spaces and per-patch boundary conditions.
pub struct Discretization {
    pub boundary: Boundary,
    pub kernel: KernelSet,
    /// Displacement space, continuous across patch joints.
    pub u_space: BasisSpace,
    /// Traction space, patchwise discontinuous.
    pub t_space: BasisSpace,
    pub bc: Vec<BcType>,
    pub cfg: AssemblyConfig,
}

impl Discretization {
    /// Uniform spaces of the given degree with `n_spans` spans per patch.
    /// Pure Neumann problems are rejected: the operator then has the
    /// rigid body motions in its kernel.
    pub fn new(
        boundary: Boundary,
        kernel: KernelSet,
        degree: usize,
        n_spans: usize,
        bc: Vec<BcType>,
        cfg: AssemblyConfig,
    ) -> Result<Self> {
        if bc.len() != boundary.num_patches() {
            return Err(Error::config("one boundary condition per patch required"));
        }
        if bc.iter().all(|&b| b == BcType::Neumann) {
            return Err(Error::Unsupported(
                "pure Neumann problems are singular up to rigid body motions".into(),
            ));
        }
        let u_space = BasisSpace::uniform(&boundary, degree, n_spans, Continuity::Continuous)?;
        let t_space = BasisSpace::uniform(&boundary, degree, n_spans, Continuity::Discontinuous)?;
        Ok(Discretization {
            boundary,
            kernel,
            u_space,
            t_space,
            bc,
            cfg,
        })
    }

    /// Whether displacement function `j` is unknown: all of its pieces
    /// lie on Neumann patches. Functions at Dirichlet/Neumann joints take
    /// their value from the Dirichlet datum.
    fn unknown_u(&self) -> Vec<bool> {
        (0..self.u_space.num_functions())
            .map(|j| {
                self.u_space.functions[j]
                    .pieces
                    .iter()
                    .all(|&(e, _)| self.bc[e] == BcType::Neumann)
            })
            .collect()
    }

    fn unknown_t(&self) -> Vec<bool> {
        (0..self.t_space.num_functions())
            .map(|j| self.bc[self.t_space.functions[j].pieces[0].0] == BcType::Dirichlet)
            .collect()
    }

    /// Assemble both operators, collocated at the anchors of the unknown
    /// functions (tractions first, then displacements).
    pub fn build(&self) -> Result<System> {
        let unknown_u = self.unknown_u();
        let unknown_t = self.unknown_t();
        let ext = ExtractedBoundary::new(&self.boundary, &[&self.u_space, &self.t_space])?;

        let mut rows: Vec<CollocationPoint> = Vec::new();
        for c in build_collocation(&self.t_space, &self.boundary)? {
            if unknown_t[c.function] {
                rows.push(c);
            }
        }
        for c in build_collocation(&self.u_space, &self.boundary)? {
            if unknown_u[c.function] {
                rows.push(c);
            }
        }

        let v = Assembler {
            kernel: &self.kernel,
            boundary: &self.boundary,
            space: &self.t_space,
            rows: &rows,
            extracted: &ext,
            cfg: &self.cfg,
        }
        .assemble(OperatorKind::SingleLayer)?;
        let k = Assembler {
            kernel: &self.kernel,
            boundary: &self.boundary,
            space: &self.u_space,
            rows: &rows,
            extracted: &ext,
            cfg: &self.cfg,
        }
        .assemble(OperatorKind::DoubleLayerCompleted)?;

        Ok(System {
            v,
            k,
            unknown_u,
            unknown_t,
            rows,
            ncomp: self.kernel.ncomp(),
        })
    }
}

/// The masked block system A z = rhs with
/// A z = (C+K) u_unknown - V t_unknown and rhs = V t_known - (C+K) u_known.
pub struct System {
    pub v: HMatrix,
    pub k: HMatrix,
    pub unknown_u: Vec<bool>,
    pub unknown_t: Vec<bool>,
    pub rows: Vec<CollocationPoint>,
    pub ncomp: usize,
}

impl System {
    pub fn n_unknowns(&self) -> usize {
        let nt = self.unknown_t.iter().filter(|&&b| b).count();
        let nu = self.unknown_u.iter().filter(|&&b| b).count();
        (nt + nu) * self.ncomp
    }

    /// Unpack a solution vector into full coefficient vectors (unknown
    /// entries filled, known entries zero): tractions first.
    pub fn scatter(&self, z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let nc = self.ncomp;
        let mut t_full = DVector::zeros(self.unknown_t.len() * nc);
        let mut u_full = DVector::zeros(self.unknown_u.len() * nc);
        let mut pos = 0;
        for (j, &unk) in self.unknown_t.iter().enumerate() {
            if unk {
                for c in 0..nc {
                    t_full[j * nc + c] = z[pos * nc + c];
                }
                pos += 1;
            }
        }
        for (j, &unk) in self.unknown_u.iter().enumerate() {
            if unk {
                for c in 0..nc {
                    u_full[j * nc + c] = z[pos * nc + c];
                }
                pos += 1;
            }
        }
        (u_full, t_full)
    }

    pub fn apply(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let (u_full, t_full) = self.scatter(z);
        Ok(self.k.matvec(&u_full)? - self.v.matvec(&t_full)?)
    }

    /// Right-hand side from full coefficient vectors of the known data
    /// (zeros at unknown functions).
    pub fn rhs(&self, u_known: &DVector<f64>, t_known: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.v.matvec(t_known)? - self.k.matvec(u_known)?)
    }

    /// Materialize the masked system and solve by LU. Subject to the
    /// dense expansion guard of the operators.
    pub fn solve_dense(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n_unknowns();
        let kd = self.k.to_dense()?;
        let vd = self.v.to_dense()?;
        let nc = self.ncomp;
        let mut a = DMatrix::zeros(n, n);
        let mut col = 0;
        for (j, &unk) in self.unknown_t.iter().enumerate() {
            if unk {
                for c in 0..nc {
                    a.set_column(col * nc + c, &(-vd.column(j * nc + c)));
                }
                col += 1;
            }
        }
        for (j, &unk) in self.unknown_u.iter().enumerate() {
            if unk {
                for c in 0..nc {
                    a.set_column(col * nc + c, &kd.column(j * nc + c));
                }
                col += 1;
            }
        }
        a.lu()
            .solve(rhs)
            .ok_or_else(|| Error::SingularMatrix("dense system factorization failed".into()))
    }

    pub fn solve_gmres(&self, rhs: &DVector<f64>, cfg: &GmresConfig) -> Result<GmresResult> {
        gmres(|z| self.apply(z), rhs, cfg)
    }

    /// Combine known data and solved unknowns into full coefficient
    /// vectors (u, t).
    pub fn combine(
        &self,
        z: &DVector<f64>,
        u_known: &DVector<f64>,
        t_known: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        let (u_sol, t_sol) = self.scatter(z);
        (u_known + u_sol, t_known + t_sol)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresConfig {
    pub restart: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            restart: 100,
            tol: 1e-8,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresResult {
    pub x: DVector<f64>,
    /// Relative residual after each iteration.
    pub history: Vec<f64>,
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
pub fn gmres<F>(apply: F, b: &DVector<f64>, cfg: &GmresConfig) -> Result<GmresResult>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = b.len();
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(GmresResult {
            x: DVector::zeros(n),
            history: vec![0.0],
        });
    }
    let m = cfg.restart.max(1);
    let mut x = DVector::zeros(n);
    let mut history = Vec::new();
    let mut total_iter = 0;
    loop {
        let r = b - apply(&x)?;
        let beta = r.norm();
        if beta / b_norm <= cfg.tol {
            history.push(beta / b_norm);
            return Ok(GmresResult { x, history });
        }
        let mut v: Vec<DVector<f64>> = vec![&r / beta];
        let mut h = DMatrix::zeros(m + 1, m);
        let mut g = DVector::zeros(m + 1);
        g[0] = beta;
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![0.0f64; m];
        let mut k_used = 0;
        for k in 0..m {
            let mut w = apply(&v[k])?;
            for i in 0..=k {
                h[(i, k)] = w.dot(&v[i]);
                w -= h[(i, k)] * &v[i];
            }
            let h_next = w.norm();
            h[(k + 1, k)] = h_next;
            // Apply the accumulated rotations to the new column.
            for i in 0..k {
                let tmp = cs[i] * h[(i, k)] + sn[i] * h[(i + 1, k)];
                h[(i + 1, k)] = -sn[i] * h[(i, k)] + cs[i] * h[(i + 1, k)];
                h[(i, k)] = tmp;
            }
            let denom = (h[(k, k)].powi(2) + h[(k + 1, k)].powi(2)).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[(k, k)] / denom;
            sn[k] = h[(k + 1, k)] / denom;
            h[(k, k)] = denom;
            h[(k + 1, k)] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total_iter += 1;
            let rel = g[k + 1].abs() / b_norm;
            history.push(rel);
            if rel <= cfg.tol || total_iter >= cfg.max_iter {
                break;
            }
            if h_next <= 1e-14 * b_norm {
                // Lucky breakdown: the Krylov space is invariant.
                break;
            }
            v.push(&w / h_next);
        }
        // Back substitution on the k_used x k_used triangle.
        let mut y = DVector::zeros(k_used);
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in (i + 1)..k_used {
                s -= h[(i, j)] * y[j];
            }
            y[i] = s / h[(i, i)];
        }
        for i in 0..k_used {
            x += y[i] * &v[i];
        }
        let rel = (b - apply(&x)?).norm() / b_norm;
        if rel <= cfg.tol {
            return Ok(GmresResult { x, history });
        }
        if total_iter >= cfg.max_iter {
            return Err(Error::NoConvergence {
                iterations: total_iter,
                residual: rel,
            });
        }
    }
}

/// Interpolate vector data at the anchors of the masked basis functions:
/// coefficients of the other functions stay zero. The data closure gets
/// the anchor point and the outward normal there (taken one-sided, from
/// the patch owning the anchor).
pub fn project_data<F>(
    space: &BasisSpace,
    boundary: &Boundary,
    mask: &[bool],
    ncomp: usize,
    f: F,
) -> Result<DVector<f64>>
where
    F: Fn(Point2, Point2) -> DVector<f64>,
{
    let sel: Vec<usize> = (0..space.num_functions()).filter(|&j| mask[j]).collect();
    let mut coeffs = DVector::zeros(space.num_functions() * ncomp);
    if sel.is_empty() {
        return Ok(coeffs);
    }
    let mut phi = DMatrix::zeros(sel.len(), sel.len());
    let mut data = DMatrix::zeros(sel.len(), ncomp);
    for (r, &jr) in sel.iter().enumerate() {
        let (e, u) = space.anchor(jr)?;
        let (p, n, _) = boundary.frame(e, u)?;
        let val = f(p, n);
        if val.len() != ncomp {
            return Err(Error::contract("data closure returned wrong component count"));
        }
        for c in 0..ncomp {
            data[(r, c)] = val[c];
        }
        for (q, &jq) in sel.iter().enumerate() {
            phi[(r, q)] = space.eval(jq, e, u)?;
        }
    }
    let lu = phi.lu();
    for c in 0..ncomp {
        let col = lu
            .solve(&DVector::from_column_slice(data.column(c).as_slice()))
            .ok_or_else(|| Error::SingularMatrix("interpolation matrix is singular".into()))?;
        for (q, &jq) in sel.iter().enumerate() {
            coeffs[jq * ncomp + c] = col[q];
        }
    }
    Ok(coeffs)
}

/// Value of the discretized field at a boundary parameter.
pub fn eval_field(
    space: &BasisSpace,
    coeffs: &DVector<f64>,
    ncomp: usize,
    patch: usize,
    u: f64,
) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(ncomp);
    for j in space.active_at(patch, u)? {
        let val = space.eval(j, patch, u)?;
        for c in 0..ncomp {
            out[c] += coeffs[j * ncomp + c] * val;
        }
    }
    Ok(out)
}

/// Relative L2(Γ) error of a discretized field against a reference.
pub fn boundary_l2_error<F>(
    space: &BasisSpace,
    boundary: &Boundary,
    coeffs: &DVector<f64>,
    ncomp: usize,
    exact: F,
) -> Result<f64>
where
    F: Fn(Point2, Point2) -> DVector<f64>,
{
    let rule = GaussRule::new(12);
    let mut err2 = 0.0;
    let mut ref2 = 0.0;
    for e in 0..boundary.num_patches() {
        for (a, b) in space.kvs[e].spans() {
            for (u, w) in rule.mapped(a, b) {
                let (p, n, jac) = boundary.frame(e, u)?;
                let fh = eval_field(space, coeffs, ncomp, e, u)?;
                let fx = exact(p, n);
                err2 += w * jac * (&fh - &fx).norm_squared();
                ref2 += w * jac * fx.norm_squared();
            }
        }
    }
    Ok((err2 / ref2.max(f64::MIN_POSITIVE)).sqrt())
}

/// Representation formula at an interior point:
/// u(x) = ∫ U(x, y) t(y) dγ - ∫ T(x, y) u(y) dγ. Spans close to x are
/// integrated on graded cells.
pub fn eval_interior(
    kernel: &KernelSet,
    boundary: &Boundary,
    u_space: &BasisSpace,
    u_coeffs: &DVector<f64>,
    t_space: &BasisSpace,
    t_coeffs: &DVector<f64>,
    x: Point2,
    quad: &QuadratureConfig,
) -> Result<DVector<f64>> {
    let nc = kernel.ncomp();
    let rule = GaussRule::new(quad.gauss_order);
    let mut out = DVector::zeros(nc);
    for e in 0..boundary.num_patches() {
        // Union of span boundaries of both spaces so each cell is smooth
        // for both fields.
        let mut cuts: Vec<f64> = u_space.kvs[e]
            .breakpoints()
            .iter()
            .chain(t_space.kvs[e].breakpoints().iter())
            .map(|&(v, _)| v)
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        for pair in cuts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let m = 8;
            let mut best = (f64::INFINITY, a);
            let mut chord = 0.0;
            let mut prev = Point2::zeros();
            for s in 0..=m {
                let u = a + (b - a) * s as f64 / m as f64;
                let p = boundary.point(e, u)?;
                let d = (p - x).norm();
                if d < best.0 {
                    best = (d, u);
                }
                if s > 0 {
                    chord += (p - prev).norm();
                }
                prev = p;
            }
            let cells = if best.0 < quad.near_factor * chord {
                graded_cells(a, b, best.1, quad.graded_ratio, quad.graded_depth)
            } else {
                vec![(a, b)]
            };
            for (ca, cb) in cells {
                for (u, w) in rule.mapped(ca, cb) {
                    let (y, n, jac) = boundary.frame(e, u)?;
                    let tv = eval_field(t_space, t_coeffs, nc, e, u)?;
                    let uv = eval_field(u_space, u_coeffs, nc, e, u)?;
                    let single = kernel.single_kernel(x, y)?;
                    let double = kernel.double_kernel(x, y, n)?;
                    for a_c in 0..nc {
                        for b_c in 0..nc {
                            out[a_c] += w * jac * (single[(a_c, b_c)] * tv[b_c] - double[(a_c, b_c)] * uv[b_c]);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
