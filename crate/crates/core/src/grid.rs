use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation grid: step `1/N`, `M = round(N^alpha)` observations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    alpha: f64,
    m: usize,
}

impl GridSpec {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("N must be positive".into()));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        let m = (n as f64).powf(alpha).round();
        if !(1.0..=1e12).contains(&m) {
            return Err(Error::Domain(format!("N^alpha = {m} observations is out of range")));
        }
        Ok(GridSpec { n, alpha, m: m as usize })
    }

    /// Grid with an explicit observation count; `alpha` must match within one step.
    pub fn with_steps(n: usize, alpha: f64, m: usize) -> Result<Self> {
        let g = GridSpec::new(n, alpha)?;
        if m == 0 || g.m.abs_diff(m) > 1 {
            return Err(Error::Domain(format!(
                "M = {m} is inconsistent with round(N^alpha) = {} (N = {n}, alpha = {alpha})",
                g.m
            )));
        }
        Ok(GridSpec { m, ..g })
    }

    /// Grid with `m` observations; `alpha = ln m / ln n` (1 when `n = 1`).
    pub fn from_steps(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Domain("N and M must be positive".into()));
        }
        let alpha = if n == 1 || m == 1 { 1.0 } else { (m as f64).ln() / (n as f64).ln() };
        Ok(GridSpec { n, alpha, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// `M / N`, the time horizon covered by the observations.
    pub fn horizon(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    /// Consistency conditions that fail for this grid and Hurst index.
    pub fn warnings(&self, h: Option<f64>) -> Vec<String> {
        let mut out = Vec::new();
        if self.alpha <= 1.0 {
            out.push(format!("alpha = {} <= 1: the drift estimators are not consistent", self.alpha));
        }
        if let Some(h) = h {
            if self.alpha <= 2.0 - 2.0 * h {
                out.push(format!("alpha = {} <= 2 - 2H = {}: T_N growth is not guaranteed", self.alpha, 2.0 - 2.0 * h));
            }
        }
        out
    }
}
