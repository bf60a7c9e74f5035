//! Study drivers behind the command line interface: a single solve with
//! probe errors, a refinement convergence series and a storage
//! compression series. Results are written as CSV with full precision.

use crate::assembly::{Assembler, AssemblyConfig, KernelSet, OperatorKind, QuadratureConfig};
use crate::boundary::{build_collocation, BasisSpace, Continuity, ExtractedBoundary};
use crate::clustering::ClusterConfig;
use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::input::ProblemInput;
use crate::kernels::{kelvin_t, kelvin_u};
use crate::solver::{eval_interior, project_data, Discretization, GmresConfig};
use nalgebra::{DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Solve,
    Convergence,
    Compression,
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub kind: StudyKind,
    /// Polynomial degree of both Cauchy data spaces.
    pub degree: usize,
    /// Chebyshev interpolation order of the far field.
    pub interp_order: usize,
    pub eta: f64,
    pub n_min: usize,
    /// Refinement levels: spans per patch double each level. The solve
    /// and compression studies use the finest level directly.
    pub levels: usize,
    /// Iterative solver tolerance.
    pub tol: f64,
    pub seed: u64,
    pub quad: QuadratureConfig,
}

impl StudyConfig {
    fn assembly(&self) -> AssemblyConfig {
        AssemblyConfig {
            cluster: ClusterConfig {
                n_min: self.n_min,
                eta: self.eta,
            },
            interp_order: self.interp_order,
            quad: self.quad,
            ..AssemblyConfig::default()
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Superposed manufactured fields of the input sources.
struct Manufactured<'a> {
    input: &'a ProblemInput,
}

impl Manufactured<'_> {
    fn displacement(&self, p: Point2) -> Result<Vector2<f64>> {
        let mut u = Vector2::zeros();
        for &(src, f) in &self.input.sources {
            u += kelvin_u(p, src, &self.input.material)? * f;
        }
        Ok(u)
    }

    fn traction(&self, p: Point2, n: Point2) -> Result<Vector2<f64>> {
        let mut t = Vector2::zeros();
        for &(src, f) in &self.input.sources {
            t += kelvin_t(src, p, n, &self.input.material)?.transpose() * f;
        }
        Ok(t)
    }
}

pub fn run_study(input: &ProblemInput, cfg: &StudyConfig, out: &mut dyn Write) -> Result<()> {
    match cfg.kind {
        StudyKind::Solve => run_solve(input, cfg, out),
        StudyKind::Convergence => run_convergence(input, cfg, out),
        StudyKind::Compression => run_compression(input, cfg, out),
    }
}

/// A solved boundary value problem: the discretization and the complete
/// Cauchy data, ready for interior evaluation.
pub struct SolvedProblem {
    disc: Discretization,
    u_sol: DVector<f64>,
    t_sol: DVector<f64>,
}

impl SolvedProblem {
    /// Displacement at an interior point by the representation formula.
    pub fn eval(&self, x: Point2) -> Result<Vector2<f64>> {
        probe_value(self, x)
    }
}

/// Solve at the finest level of `cfg` with boundary data manufactured
/// from the input sources.
pub fn solve_problem(input: &ProblemInput, cfg: &StudyConfig) -> Result<SolvedProblem> {
    solve_level(input, cfg, 1usize << cfg.levels)
}

fn solve_level(input: &ProblemInput, cfg: &StudyConfig, n_spans: usize) -> Result<SolvedProblem> {
    let mf = Manufactured { input };
    let disc = Discretization::new(
        input.boundary.clone(),
        KernelSet::Elastic(input.material.clone()),
        cfg.degree,
        n_spans,
        input.bc.clone(),
        cfg.assembly(),
    )?;
    let sys = disc.build()?;
    let known_u: Vec<bool> = sys.unknown_u.iter().map(|&b| !b).collect();
    let known_t: Vec<bool> = sys.unknown_t.iter().map(|&b| !b).collect();
    let u_known = project_data(&disc.u_space, &disc.boundary, &known_u, 2, |p, _| {
        DVector::from_column_slice(mf.displacement(p).unwrap().as_slice())
    })?;
    let t_known = project_data(&disc.t_space, &disc.boundary, &known_t, 2, |p, n| {
        DVector::from_column_slice(mf.traction(p, n).unwrap().as_slice())
    })?;
    let rhs = sys.rhs(&u_known, &t_known)?;
    let gmres_cfg = GmresConfig {
        tol: cfg.tol,
        ..GmresConfig::default()
    };
    let res = sys.solve_gmres(&rhs, &gmres_cfg)?;
    let (u_sol, t_sol) = sys.combine(&res.x, &u_known, &t_known);
    Ok(SolvedProblem { disc, u_sol, t_sol })
}

fn probe_value(sol: &SolvedProblem, probe: Point2) -> Result<Vector2<f64>> {
    let v = eval_interior(
        &sol.disc.kernel,
        &sol.disc.boundary,
        &sol.disc.u_space,
        &sol.u_sol,
        &sol.disc.t_space,
        &sol.t_sol,
        probe,
        &sol.disc.cfg.quad,
    )?;
    Ok(Vector2::new(v[0], v[1]))
}

fn run_solve(input: &ProblemInput, cfg: &StudyConfig, out: &mut dyn Write) -> Result<()> {
    let mf = Manufactured { input };
    let sol = solve_level(input, cfg, 1usize << cfg.levels)?;
    if input.sources.is_empty() {
        writeln!(out, "x,y,u1,u2")?;
    } else {
        writeln!(out, "x,y,u1,u2,u1_ref,u2_ref,err_max")?;
    }
    for &probe in &input.probes {
        let got = probe_value(&sol, probe)?;
        if input.sources.is_empty() {
            writeln!(out, "{},{},{},{}", fmt(probe.x), fmt(probe.y), fmt(got[0]), fmt(got[1]))?;
        } else {
            let want = mf.displacement(probe)?;
            let err = (got[0] - want[0]).abs().max((got[1] - want[1]).abs());
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt(probe.x),
                fmt(probe.y),
                fmt(got[0]),
                fmt(got[1]),
                fmt(want[0]),
                fmt(want[1]),
                fmt(err)
            )?;
        }
    }
    Ok(())
}

/// Interior max-norm error over the probes under uniform refinement.
fn run_convergence(input: &ProblemInput, cfg: &StudyConfig, out: &mut dyn Write) -> Result<()> {
    if input.sources.is_empty() {
        return Err(Error::config("convergence study needs at least one source"));
    }
    if input.probes.is_empty() {
        return Err(Error::config("convergence study needs interior probes"));
    }
    let mf = Manufactured { input };
    writeln!(out, "level,n_dofs,h,err_max")?;
    for level in 1..=cfg.levels {
        let n_spans = 1usize << level;
        let sol = solve_level(input, cfg, n_spans)?;
        let mut err_max: f64 = 0.0;
        for &probe in &input.probes {
            let got = probe_value(&sol, probe)?;
            let want = mf.displacement(probe)?;
            err_max = err_max.max((got[0] - want[0]).abs().max((got[1] - want[1]).abs()));
        }
        let h = mesh_size(&sol.disc);
        let dofs = sol
            .disc
            .u_space
            .num_functions()
            .max(sol.disc.t_space.num_functions());
        writeln!(out, "{level},{dofs},{},{}", fmt(h), fmt(err_max))?;
    }
    Ok(())
}

/// Largest physical span length (chord approximation).
fn mesh_size(disc: &Discretization) -> f64 {
    let mut h: f64 = 0.0;
    for e in 0..disc.boundary.num_patches() {
        for (a, b) in disc.u_space.kvs[e].spans() {
            let mut len = 0.0;
            let m = 4;
            for s in 0..m {
                let u0 = a + (b - a) * s as f64 / m as f64;
                let u1 = a + (b - a) * (s + 1) as f64 / m as f64;
                let p0 = disc.boundary.point(e, u0).unwrap();
                let p1 = disc.boundary.point(e, u1).unwrap();
                len += (p1 - p0).norm();
            }
            h = h.max(len);
        }
    }
    h
}

/// Storage of both boundary operators over a refinement sequence. The
/// matvec error compares the compressed operator against an uncompressed
/// assembly on seeded random vectors; it is omitted once the dense
/// counterpart exceeds the materialization guard.
fn run_compression(input: &ProblemInput, cfg: &StudyConfig, out: &mut dyn Write) -> Result<()> {
    const DENSE_GUARD: usize = 4_000_000;
    let kernel = KernelSet::Elastic(input.material.clone());
    writeln!(out, "operator,level,n_dofs,bytes_dense,bytes_h,c_h,matvec_err")?;
    for level in 1..=cfg.levels {
        let n_spans = 1usize << level;
        let t_space =
            BasisSpace::uniform(&input.boundary, cfg.degree, n_spans, Continuity::Discontinuous)?;
        let u_space =
            BasisSpace::uniform(&input.boundary, cfg.degree, n_spans, Continuity::Continuous)?;
        let ext = ExtractedBoundary::new(&input.boundary, &[&t_space, &u_space])?;
        let rows = build_collocation(&t_space, &input.boundary)?;
        let acfg = cfg.assembly();
        let dense_acfg = AssemblyConfig {
            cluster: ClusterConfig {
                n_min: usize::MAX / 2,
                eta: cfg.eta,
            },
            ..acfg
        };
        for (name, kind, space) in [
            ("V", OperatorKind::SingleLayer, &t_space),
            ("K", OperatorKind::DoubleLayerCompleted, &u_space),
        ] {
            let asm = Assembler {
                kernel: &kernel,
                boundary: &input.boundary,
                space,
                rows: &rows,
                extracted: &ext,
                cfg: &acfg,
            };
            let h = asm.assemble(kind)?;
            let report = h.storage_report();
            let (nr, nc) = h.dims();
            let matvec_err = if nr * nc <= DENSE_GUARD {
                let dense = Assembler {
                    cfg: &dense_acfg,
                    ..asm
                }
                .assemble(kind)?
                .to_dense()?;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ level as u64);
                let mut worst: f64 = 0.0;
                for _ in 0..5 {
                    let x = DVector::from_fn(nc, |_, _| rng.gen_range(-1.0..1.0));
                    let yd = &dense * &x;
                    let yh = h.matvec(&x)?;
                    worst = worst.max((yh - &yd).norm() / yd.norm());
                }
                fmt(worst)
            } else {
                String::new()
            };
            writeln!(
                out,
                "{name},{level},{},{},{},{},{matvec_err}",
                rows.len(),
                report.bytes_dense,
                report.bytes_h,
                fmt(report.compression_rate),
            )?;
        }
    }
    Ok(())
}
