//! Fundamental solutions: 2D Kelvin elastostatics (plane strain) and the
//! 2D Laplace potential, together with their traction kernels.
//!
//! Index convention: `(K u)_a = ∫ T[(a, b)] u_b dγ`, i.e. `T` is the
//! conormal derivative with respect to `y` of the displacement field
//! `y ↦ U[(a, ·)](x, y)`. Sign conventions are pinned by the rigid-body
//! identity `∮ T dγ = -1/2 · I` at smooth boundary points.

use crate::error::{Error, Result};
use crate::geom::Point2;
use nalgebra::Matrix2;

/// Linear elastic material under plane strain.
#[derive(Debug, Clone, Copy)]
pub struct Material {
    pub lame_lambda: f64,
    pub shear_mu: f64,
}

impl Material {
    pub fn new(lame_lambda: f64, shear_mu: f64) -> Result<Self> {
        if lame_lambda <= 0.0 || shear_mu <= 0.0 {
            return Err(Error::domain("material constants must be positive"));
        }
        Ok(Material { lame_lambda, shear_mu })
    }

    pub fn poisson_nu(&self) -> f64 {
        self.lame_lambda / (2.0 * (self.lame_lambda + self.shear_mu))
    }
}

fn check_distance(x: Point2, y: Point2) -> Result<(f64, Point2)> {
    let d = y - x;
    let r = d.norm();
    if r < 1e-300 {
        return Err(Error::SingularPoint);
    }
    Ok((r, d / r))
}

fn check_normal(n: Point2) -> Result<()> {
    if (n.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::domain("normal vector must have unit length"));
    }
    Ok(())
}

/// Kelvin fundamental solution for displacements,
/// `U_ab = 1/(8πμ(1-ν)) [ -(3-4ν) ln r δ_ab + r_,a r_,b ]`.
pub fn kelvin_u(x: Point2, y: Point2, mat: &Material) -> Result<Matrix2<f64>> {
    let (r, rd) = check_distance(x, y)?;
    let nu = mat.poisson_nu();
    let c = 1.0 / (8.0 * std::f64::consts::PI * mat.shear_mu * (1.0 - nu));
    let kappa = 3.0 - 4.0 * nu;
    let ln_r = r.ln();
    Ok(Matrix2::new(
        c * (-kappa * ln_r + rd.x * rd.x),
        c * (rd.x * rd.y),
        c * (rd.y * rd.x),
        c * (-kappa * ln_r + rd.y * rd.y),
    ))
}

/// Kelvin traction kernel `T = dTr_y U`.
pub fn kelvin_t(x: Point2, y: Point2, n: Point2, mat: &Material) -> Result<Matrix2<f64>> {
    check_normal(n)?;
    let (r, rd) = check_distance(x, y)?;
    let nu = mat.poisson_nu();
    let c = -1.0 / (4.0 * std::f64::consts::PI * (1.0 - nu) * r);
    let drdn = rd.dot(&n);
    let one_m2nu = 1.0 - 2.0 * nu;
    let mut t = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let delta = if a == b { 1.0 } else { 0.0 };
            t[(a, b)] = c
                * (drdn * (one_m2nu * delta + 2.0 * rd[a] * rd[b])
                    + one_m2nu * (rd[b] * n[a] - rd[a] * n[b]));
        }
    }
    Ok(t)
}

/// Laplace fundamental solution `G = -(1/2π) ln r` and its conormal
/// derivative with respect to `y`.
pub fn laplace_kernels(x: Point2, y: Point2, n: Point2) -> Result<(f64, f64)> {
    let (r, rd) = check_distance(x, y)?;
    let g = -r.ln() / (2.0 * std::f64::consts::PI);
    let dgdn = -rd.dot(&n) / (2.0 * std::f64::consts::PI * r);
    Ok((g, dgdn))
}
