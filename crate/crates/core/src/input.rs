//! JSON problem description: NURBS patches with boundary conditions,
//! material constants, manufactured point sources and interior probes.

use crate::boundary::Boundary;
use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::kernels::Material;
use crate::nurbs::{KnotVector, NurbsCurve};
use crate::solver::BcType;
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryFile {
    pub material: MaterialSpec,
    pub patches: Vec<PatchSpec>,
    #[serde(default)]
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub interior_probes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchSpec {
    pub degree: usize,
    pub knots: Vec<f64>,
    pub control_points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// "dirichlet" or "neumann".
    pub bc: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSpec {
    pub point: [f64; 2],
    pub force: [f64; 2],
}

/// Validated problem: closed boundary, material, per-patch conditions
/// and the manufactured-solution sources.
#[derive(Debug, Clone)]
pub struct ProblemInput {
    pub boundary: Boundary,
    pub material: Material,
    pub bc: Vec<BcType>,
    pub sources: Vec<(Point2, Vector2<f64>)>,
    pub probes: Vec<Point2>,
}

pub fn parse(text: &str) -> Result<ProblemInput> {
    let file: GeometryFile = serde_json::from_str(text)?;
    let material = Material::new(file.material.lambda, file.material.mu)?;
    let mut patches = Vec::with_capacity(file.patches.len());
    let mut bc = Vec::with_capacity(file.patches.len());
    for (e, spec) in file.patches.iter().enumerate() {
        let kv = KnotVector::new(spec.knots.clone(), spec.degree).map_err(|err| Error::Geometry {
            patch: e,
            msg: err.to_string(),
        })?;
        let pts = spec.control_points.iter().map(|&[x, y]| Point2::new(x, y)).collect();
        let curve = NurbsCurve::new(kv, pts, spec.weights.clone()).map_err(|err| Error::Geometry {
            patch: e,
            msg: err.to_string(),
        })?;
        patches.push(curve);
        bc.push(match spec.bc.as_str() {
            "dirichlet" => BcType::Dirichlet,
            "neumann" => BcType::Neumann,
            other => {
                return Err(Error::Geometry {
                    patch: e,
                    msg: format!("unknown boundary condition '{other}'"),
                })
            }
        });
    }
    let boundary = Boundary::new(patches)?;
    Ok(ProblemInput {
        boundary,
        material,
        bc,
        sources: file
            .sources
            .iter()
            .map(|s| (Point2::new(s.point[0], s.point[1]), Vector2::new(s.force[0], s.force[1])))
            .collect(),
        probes: file.interior_probes.iter().map(|&[x, y]| Point2::new(x, y)).collect(),
    })
}

pub fn load(path: impl AsRef<Path>) -> Result<ProblemInput> {
    parse(&std::fs::read_to_string(path)?)
}
