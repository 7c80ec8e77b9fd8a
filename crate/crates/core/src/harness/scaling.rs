//! Deterministic scaling studies: the fBm mean squared error and the
//! Gershgorin bound on the covariance spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::fbm_mse_closed_form;
use crate::fbm::fbm_entry;
use crate::grid::GridSpec;

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub alpha: f64,
    pub m: usize,
    pub mse: f64,
    /// `C N^((2-2H)(1-alpha))` with `C` fitted at the smallest `N`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub alpha: f64,
    pub slope: f64,
    pub expected: f64,
    /// Strictly decreasing in `N` (only asserted for `alpha > 1`).
    pub decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub h: f64,
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<SlopeFit>,
}

/// Exact fBm estimator MSE over an `(alpha, N)` grid.
pub fn mse_scaling_study(h: f64, alphas: &[f64], ns: &[usize]) -> Result<ScalingStudy> {
    if ns.len() < 2 {
        return Err(Error::Domain("scaling study needs at least two values of N".into()));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &alpha in alphas {
        let expected = (2.0 - 2.0 * h) * (1.0 - alpha);
        let mut mses = Vec::new();
        for &n in &ns {
            let grid = GridSpec::new(n, alpha)?;
            mses.push((grid.m(), fbm_mse_closed_form(h, &grid)?));
        }
        let c = mses[0].1 / (ns[0] as f64).powf(expected);
        for (&n, &(m, mse)) in ns.iter().zip(&mses) {
            rows.push(ScalingRow { n, alpha, m, mse, bound: c * (n as f64).powf(expected) });
        }
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let ys: Vec<f64> = mses.iter().map(|v| v.1).collect();
        fits.push(SlopeFit {
            alpha,
            slope: loglog_slope(&xs, &ys),
            expected,
            decreasing: ys.windows(2).all(|w| w[1] < w[0]),
        });
    }
    Ok(ScalingStudy { h, rows, fits })
}

/// Largest absolute row sum of the integer-grid covariance, streamed by row.
pub fn max_row_sum(h: f64, m: usize) -> f64 {
    (1..=m).map(|i| (1..=m).map(|l| fbm_entry(h, i, l).abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `(rowSumMax, M^(2H+1))` for `M = round(N^alpha)`.
pub fn gershgorin_check(h: f64, n: usize, alpha: f64) -> Result<(f64, f64)> {
    let m = GridSpec::new(n, alpha)?.m();
    Ok((max_row_sum(h, m), (m as f64).powf(2.0 * h + 1.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GershgorinRow {
    pub m: usize,
    pub row_sum_max: f64,
    pub ratio: f64,
}

/// Row sums against `C M^(2H+1)`, `C` calibrated at the smallest `M`. The
/// flag reports whether every ratio stays within `C (1 + slack)`.
pub fn gershgorin_sweep(h: f64, ms: &[usize], slack: f64) -> (Vec<GershgorinRow>, f64, bool) {
    let rows: Vec<GershgorinRow> = ms
        .iter()
        .map(|&m| {
            let s = max_row_sum(h, m);
            GershgorinRow { m, row_sum_max: s, ratio: s / (m as f64).powf(2.0 * h + 1.0) }
        })
        .collect();
    let c = rows.first().map_or(0.0, |r| r.ratio);
    let ok = rows.iter().all(|r| r.ratio <= c * (1.0 + slack));
    (rows, c, ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.7)).collect();
        assert!((loglog_slope(&x, &y) + 0.7).abs() < 1e-12);
    }

    #[test]
    fn gershgorin_small_cases() {
        assert_eq!(max_row_sum(0.75, 1), 1.0);
        let m = 30;
        assert!(max_row_sum(0.75, m) >= (m as f64).powf(1.5));
    }
}
