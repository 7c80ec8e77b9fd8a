//! Empirical signatures of the martingale argument behind strong consistency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::harness::{rosenblatt_table, simulate_rosenblatt_paths, RunOptions};
use crate::quadrature::QuadratureSpec;
use crate::rosenblatt::{RosenblattPath, G_GUARD};

/// Zero-mean check of `xi_{j+1} / g_j` across replications, step by step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub steps: usize,
    pub replications: usize,
    pub passing: usize,
    /// Fraction of steps inside the 3-standard-error band; `None` when the
    /// standard errors are undefined (fewer than two paths).
    pub fraction: Option<f64>,
    pub degenerate: bool,
    pub means: Vec<f64>,
}

pub fn martingale_diagnostic(paths: &[RosenblattPath]) -> MartingaleReport {
    let r = paths.len();
    let steps = paths.iter().map(|p| p.steps()).min().unwrap_or(0);
    let mut means = Vec::with_capacity(steps);
    let mut passing = 0;
    for j in 0..steps {
        let vals: Vec<f64> = paths.iter().map(|p| p.xi[j + 1] / p.g[j]).collect();
        let mean = vals.iter().sum::<f64>() / r as f64;
        means.push(mean);
        if r >= 2 {
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
            let se = (var / r as f64).sqrt();
            if mean.abs() <= 3.0 * se {
                passing += 1;
            }
        }
    }
    let degenerate = r < 2;
    let fraction = if degenerate || steps == 0 { None } else { Some(passing as f64 / steps as f64) };
    MartingaleReport { steps, replications: r, passing, fraction, degenerate, means }
}

/// Admissible `gamma` interval: `0 < gamma < 1` with `alpha(2 - gamma) - 2 + 2H gamma > 0`.
pub fn gamma_interval(h: f64, alpha: f64) -> Option<(f64, f64)> {
    // Linear in gamma: (2 alpha - 2) - gamma (alpha - 2H) > 0.
    let c0 = 2.0 * alpha - 2.0;
    let c1 = alpha - 2.0 * h;
    let (lo, hi) = if c1 > 0.0 {
        (0.0, (c0 / c1).min(1.0))
    } else if c1 < 0.0 {
        ((c0 / c1).max(0.0), 1.0)
    } else if c0 > 0.0 {
        (0.0, 1.0)
    } else {
        return None;
    };
    (hi > lo).then_some((lo, hi))
}

/// Midpoint of [`gamma_interval`].
pub fn default_gamma(h: f64, alpha: f64) -> Option<f64> {
    gamma_interval(h, alpha).map(|(lo, hi)| 0.5 * (lo + hi))
}

/// Per-path growth quantities. Series are indexed by `M = 1..=steps`
/// (`b` by `M = 1..steps`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSeries {
    pub gamma: f64,
    pub n: usize,
    /// `T_N = N^-2 <A>_{M}` at the final step, per path.
    pub t: Vec<f64>,
    /// `U_N = N^-2 <A>_{M}^(1 - gamma)`, per path.
    pub u: Vec<f64>,
    /// `A_M = sum_{j<M} xi_{j+1} / g_j`.
    pub a: Vec<Vec<f64>>,
    /// `<A>_M = sum_{j<M} 1 / g_j^2`.
    pub bracket: Vec<Vec<f64>>,
    /// `V_M = A_M^2 / <A>_M^(1 + gamma)`.
    pub v: Vec<Vec<f64>>,
    /// `B_M = (<A>_{M+1} - <A>_M) / <A>_{M+1}^(1 + gamma)`.
    pub b: Vec<Vec<f64>>,
    /// `sum_M B_M`, per path.
    pub b_sum: Vec<f64>,
    /// `<A>_1^-gamma / gamma`, which bounds `b_sum`.
    pub b_bound: Vec<f64>,
}

pub fn tn_growth_diagnostic(paths: &[RosenblattPath], n: usize, gamma: f64) -> Result<DiagnosticSeries> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let nn = (n as f64).powi(2);
    let mut s = DiagnosticSeries {
        gamma,
        n,
        t: vec![],
        u: vec![],
        a: vec![],
        bracket: vec![],
        v: vec![],
        b: vec![],
        b_sum: vec![],
        b_bound: vec![],
    };
    for p in paths {
        if let Some((step, &value)) = p.g.iter().enumerate().find(|(_, g)| !(g.abs() >= G_GUARD)) {
            return Err(Error::Guard { step, value });
        }
        let m = p.steps();
        let mut a = Vec::with_capacity(m);
        let mut br = Vec::with_capacity(m);
        let (mut acc_a, mut acc_b) = (0.0, 0.0);
        for j in 0..m {
            acc_a += p.xi[j + 1] / p.g[j];
            acc_b += 1.0 / (p.g[j] * p.g[j]);
            a.push(acc_a);
            br.push(acc_b);
        }
        let v: Vec<f64> = a.iter().zip(&br).map(|(x, y)| x * x / y.powf(1.0 + gamma)).collect();
        let b: Vec<f64> = br.windows(2).map(|w| (w[1] - w[0]) / w[1].powf(1.0 + gamma)).collect();
        let last = *br.last().unwrap_or(&0.0);
        s.t.push(last / nn);
        s.u.push(last.powf(1.0 - gamma) / nn);
        s.b_sum.push(b.iter().sum());
        s.b_bound.push(br.first().map_or(0.0, |b1| b1.powf(-gamma) / gamma));
        s.a.push(a);
        s.bracket.push(br);
        s.v.push(v);
        s.b.push(b);
    }
    Ok(s)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Medians of `T_N` and `U_N` at one `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub n: usize,
    pub m: usize,
    pub median_t: f64,
    pub median_u: f64,
    pub max_b_sum_ratio: f64,
}

/// `T_N` / `U_N` medians along an `N` sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSweep {
    pub h: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub points: Vec<GrowthPoint>,
    /// Both medians strictly increase along the sweep.
    pub increasing: bool,
    /// Every path satisfies `sum B_M <= <A>_1^-gamma / gamma`.
    pub b_bounded: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn tn_growth_sweep(
    h: f64,
    alpha: f64,
    ns: &[usize],
    reps: usize,
    seed: u64,
    gamma: Option<f64>,
    quad: &QuadratureSpec,
    opts: &RunOptions,
) -> Result<GrowthSweep> {
    let gamma = match gamma {
        Some(g) => g,
        None => default_gamma(h, alpha)
            .ok_or_else(|| Error::Domain(format!("no admissible gamma for H = {h}, alpha = {alpha}")))?,
    };
    let mut points = Vec::new();
    let mut b_bounded = true;
    for &n in ns {
        let grid = GridSpec::new(n, alpha)?;
        let table = rosenblatt_table(h, &grid, quad, opts)?;
        let paths = simulate_rosenblatt_paths(&table, reps, seed, opts)?;
        let s = tn_growth_diagnostic(&paths, n, gamma)?;
        let ratio = s.b_sum.iter().zip(&s.b_bound).map(|(x, y)| x / y).fold(0.0, f64::max);
        b_bounded &= ratio <= 1.0 + 1e-12;
        points.push(GrowthPoint {
            n,
            m: grid.m(),
            median_t: median(&s.t),
            median_u: median(&s.u),
            max_b_sum_ratio: ratio,
        });
    }
    let increasing = points.windows(2).all(|w| w[1].median_t > w[0].median_t && w[1].median_u > w[0].median_u);
    Ok(GrowthSweep { h, alpha, gamma, points, increasing, b_bounded })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_interval_examples() {
        assert_eq!(gamma_interval(0.75, 2.0), Some((0.0, 1.0)));
        assert_eq!(default_gamma(0.75, 2.0), Some(0.5));
        // alpha = 1.2, H = 0.55: (0.4) - gamma * 0.1 > 0 for all gamma < 1.
        assert_eq!(gamma_interval(0.55, 1.2), Some((0.0, 1.0)));
        // alpha = 1.1, H = 0.51: 0.2 - 0.08 gamma > 0 always; alpha = 3, H=0.6: 4 - 1.8 gamma.
        let (lo, hi) = gamma_interval(0.9, 1.0).unwrap_or((0.0, 0.0));
        assert!(lo >= 0.0 && hi <= 1.0);
        assert!(gamma_interval(0.3, 0.5).is_none());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn degenerate_inputs() {
        let p = RosenblattPath { xi: vec![0.0, 1.0, 2.0], f: vec![0.0, 0.1], g: vec![0.5, 0.25], z: vec![0.0; 3] };
        let rep = martingale_diagnostic(std::slice::from_ref(&p));
        assert!(rep.degenerate);
        assert_eq!(rep.fraction, None);
        let zero = RosenblattPath { xi: vec![0.0; 3], ..p.clone() };
        let rep = martingale_diagnostic(&[zero.clone(), zero]);
        assert!(rep.means.iter().all(|&m| m == 0.0));
        assert_eq!(rep.fraction, Some(1.0));
    }
}
