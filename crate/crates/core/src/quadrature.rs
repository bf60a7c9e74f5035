//! Gauss-Legendre rules and graded subdivision for (nearly) singular
//! boundary integrals.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Cached rule with `n` points. Nodes are found by Newton iteration on
    /// the Legendre polynomial, seeded with the Chebyshev estimate.
    pub fn new(n: usize) -> Arc<GaussRule> {
        assert!(n >= 1);
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap();
        map.entry(n).or_insert_with(|| Arc::new(Self::compute(n))).clone()
    }

    fn compute(n: usize) -> GaussRule {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and P'_n(x).
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n == 1 {
            nodes[0] = 0.0;
            weights[0] = 2.0;
        }
        GaussRule { nodes, weights }
    }

    /// Integrate `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(c + h * x);
        }
        sum * h
    }

    /// Mapped nodes and weights on [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, w * h))
    }
}

/// Subdivision cells of [a, b] graded toward the singular parameter `u0`.
///
/// When `u0` lies strictly inside, the interval is split there and both
/// sides are graded toward the split. When `u0` is at (or beyond) an
/// endpoint, cells shrink geometrically toward that endpoint with the
/// given `ratio` over `depth` levels.
pub fn graded_cells(a: f64, b: f64, u0: f64, ratio: f64, depth: usize) -> Vec<(f64, f64)> {
    debug_assert!(a < b && ratio > 0.0 && ratio < 1.0);
    let mut cells = Vec::new();
    if u0 > a + 1e-14 * (b - a) && u0 < b - 1e-14 * (b - a) {
        grade_toward_left(u0, b, ratio, depth, &mut cells);
        grade_toward_left(u0, a, ratio, depth, &mut cells);
    } else if (u0 - a).abs() <= (u0 - b).abs() {
        grade_toward_left(a, b, ratio, depth, &mut cells);
    } else {
        grade_toward_left(b, a, ratio, depth, &mut cells);
    }
    // Normalize orientation.
    for c in &mut cells {
        if c.0 > c.1 {
            *c = (c.1, c.0);
        }
    }
    cells
}

/// Cells from `from` to `to` graded toward `from`; `to` may lie on either side.
fn grade_toward_left(from: f64, to: f64, ratio: f64, depth: usize, out: &mut Vec<(f64, f64)>) {
    let len = to - from;
    let mut prev = from;
    for l in (0..=depth).rev() {
        let next = if l == 0 { to } else { from + len * ratio.powi(l as i32) };
        out.push((prev, next));
        prev = next;
    }
}
