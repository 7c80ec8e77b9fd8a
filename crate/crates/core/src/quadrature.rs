//! Gauss–Legendre panels and dyadically graded rules for power-law endpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracy knobs shared by every quadrature in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub nodes_per_panel: usize,
    pub grading_depth: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes_per_panel: 8, grading_depth: 12, rel_tol: 1e-8 }
    }
}

impl QuadratureSpec {
    pub fn new(nodes_per_panel: usize, grading_depth: usize, rel_tol: f64) -> Result<Self> {
        let spec = QuadratureSpec { nodes_per_panel, grading_depth, rel_tol };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel < 2 {
            return Err(Error::Domain(format!("nodesPerPanel must be at least 2, got {}", self.nodes_per_panel)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Domain(format!("relTol must be positive, got {}", self.rel_tol)));
        }
        if self.grading_depth > 60 {
            return Err(Error::Domain(format!(
                "gradingDepth {} exceeds the double-precision range",
                self.grading_depth
            )));
        }
        Ok(())
    }

    /// Same spec with a different grading depth.
    pub fn with_depth(&self, grading_depth: usize) -> Self {
        QuadratureSpec { grading_depth, ..*self }
    }
}

/// Gauss–Legendre rule mapped to `[0, 1]`; weights sum to one.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Newton iteration on P_n from the Tricomi initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // Map [-1, 1] to [0, 1], ascending order.
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(a + h * x);
        }
        acc * h
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Substitution exponent for an endpoint where the integrand behaves like `|x|^e`.
///
/// For a singularity (`e < 0`) the choice `1/(1+e)` makes the mapped integrand
/// regular; bounded but non-smooth endpoints get a fixed quartic map.
pub fn substitution_power(exponent: f64) -> f64 {
    if exponent < 0.0 {
        1.0 / (1.0 + exponent)
    } else {
        4.0
    }
}

/// Rule on `(0, 1]` graded toward 0: dyadic Gauss–Legendre panels
/// `[2^-(k+1), 2^-k]` for `k < depth`, plus an innermost panel `[0, 2^-depth]`
/// mapped by `x = 2^-depth * y^beta`.
#[derive(Clone, Debug)]
pub struct GradedRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GradedRule {
    pub fn new(gl: &GaussLegendre, depth: usize, beta: f64) -> Self {
        let n = gl.len();
        let mut nodes = Vec::with_capacity(n * (depth + 1));
        let mut weights = Vec::with_capacity(n * (depth + 1));
        let delta = 0.5f64.powi(depth as i32);
        for (y, w) in gl.nodes().iter().zip(gl.weights()) {
            nodes.push(delta * y.powf(beta));
            weights.push(delta * beta * y.powf(beta - 1.0) * w);
        }
        for k in (0..depth).rev() {
            let hi = 0.5f64.powi(k as i32);
            let lo = 0.5 * hi;
            for (y, w) in gl.nodes().iter().zip(gl.weights()) {
                nodes.push(lo + (hi - lo) * y);
                weights.push((hi - lo) * w);
            }
        }
        GradedRule { nodes, weights }
    }

    /// Rule adapted to an endpoint behaving like `|x|^exponent`.
    pub fn for_exponent(spec: &QuadratureSpec, exponent: f64) -> Self {
        let gl = GaussLegendre::new(spec.nodes_per_panel);
        GradedRule::new(&gl, spec.grading_depth, substitution_power(exponent))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral over `[a, b]` with the grading anchored at `a`. The integrand
    /// receives the abscissa and its exact distance from `a`.
    pub fn toward_left<F: FnMut(f64, f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let t = h * x;
            acc += w * f(a + t, t);
        }
        acc * h
    }

    /// Integral over `[b - h, b]` graded toward `b`, with the length given
    /// exactly. The integrand receives the abscissa and its distance from `b`.
    pub fn toward_right_len<F: FnMut(f64, f64) -> f64>(&self, b: f64, h: f64, mut f: F) -> f64 {
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let t = h * x;
            acc += w * f(b - t, t);
        }
        acc * h
    }

    /// Integral over `[a, b]` with the grading anchored at `b`. The integrand
    /// receives the abscissa and its exact distance from `b`.
    pub fn toward_right<F: FnMut(f64, f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let t = h * x;
            acc += w * f(b - t, t);
        }
        acc * h
    }
}

/// Barycentric weights for Lagrange interpolation through `nodes`.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let prod: f64 = nodes.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, xj)| xi - xj).product();
            1.0 / prod
        })
        .collect()
}

/// Values of every Lagrange basis polynomial at `x`, written into `out`.
pub fn lagrange_basis(nodes: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    if let Some(hit) = nodes.iter().position(|&t| t == x) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[hit] = 1.0;
        return;
    }
    let mut total = 0.0;
    for ((o, t), b) in out.iter_mut().zip(nodes).zip(bary) {
        *o = b / (x - t);
        total += *o;
    }
    out.iter_mut().for_each(|v| *v /= total);
}
