//! Drift estimators for the Wiener, fBm and Rosenblatt observation models.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{FbmModel, NoisePath};
use crate::grid::GridSpec;
use crate::rosenblatt::RosenblattPath;

/// Noise model of the observations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Wiener,
    Fbm,
    Rosenblatt,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Wiener => "wiener",
            Model::Fbm => "fbm",
            Model::Rosenblatt => "rosenblatt",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wiener" => Ok(Model::Wiener),
            "fbm" => Ok(Model::Fbm),
            "rosenblatt" => Ok(Model::Rosenblatt),
            other => Err(Error::Domain(format!("unknown model '{other}'"))),
        }
    }
}

/// Observations `Y[0..=M]` at times `j/N`, with `Y[0] = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationSeries {
    y: Vec<f64>,
    grid: GridSpec,
    drift: Option<f64>,
}

impl ObservationSeries {
    pub fn new(y: Vec<f64>, grid: GridSpec, drift: Option<f64>) -> Result<Self> {
        if y.len() != grid.m() + 1 {
            return Err(Error::Domain(format!("expected M + 1 = {} observations, got {}", grid.m() + 1, y.len())));
        }
        if y[0] != 0.0 {
            return Err(Error::Domain(format!("observations must start at 0, got {}", y[0])));
        }
        Ok(ObservationSeries { y, grid, drift })
    }

    /// `Y_j = a j/N + noise_j`.
    pub fn synthesize(grid: GridSpec, a: f64, noise: &[f64]) -> Result<Self> {
        let dt = grid.dt();
        let y = noise.iter().enumerate().map(|(j, v)| a * j as f64 * dt + v).collect();
        ObservationSeries::new(y, grid, Some(a))
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn drift(&self) -> Option<f64> {
        self.drift
    }
}

/// Result of one estimation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub a_hat: f64,
    pub model: Model,
    /// Right side of the pathwise envelope, when the true drift is known.
    pub envelope_bound: Option<f64>,
}

/// `Y[M] / (M dt)`.
pub fn wiener_mle(obs: &ObservationSeries) -> EstimateReport {
    let g = obs.grid();
    let a_hat = obs.y[g.m()] / (g.m() as f64 * g.dt());
    EstimateReport { a_hat, model: Model::Wiener, envelope_bound: None }
}

/// `N (x^T m^-1 y) / (x^T m^-1 x)` with `x = (1..M)`, using a stored factor.
pub fn fbm_mle_with(model: &FbmModel, obs: &ObservationSeries) -> Result<EstimateReport> {
    if model.grid().m() != obs.grid().m() {
        return Err(Error::Domain("fBm model and observations use different M".into()));
    }
    let n = obs.grid().n() as f64;
    let num: f64 = model.u().iter().zip(&obs.y[1..]).map(|(u, y)| u * y).sum();
    Ok(EstimateReport { a_hat: n * num / model.xtu(), model: Model::Fbm, envelope_bound: None })
}

pub fn fbm_mle(obs: &ObservationSeries, h: f64) -> Result<EstimateReport> {
    fbm_mle_with(&FbmModel::new(h, obs.grid())?, obs)
}

/// Exact mean squared error of the fBm estimator: `N^(2-2H) / (x^T m^-1 x)`.
pub fn fbm_mse_closed_form(h: f64, grid: &GridSpec) -> Result<f64> {
    let model = FbmModel::new(h, grid)?;
    Ok(mse_from_model(&model))
}

pub fn mse_from_model(model: &FbmModel) -> f64 {
    (model.grid().n() as f64).powf(2.0 - 2.0 * model.h()) / model.xtu()
}

/// `N sum_j (dY_j - f_j)/g_j^2 / sum_j 1/g_j^2`.
pub fn rosenblatt_pseudo_mle(obs: &ObservationSeries, path: &RosenblattPath) -> Result<EstimateReport> {
    let m = obs.grid().m();
    if path.steps() != m {
        return Err(Error::Domain(format!("path has {} steps, observations {m}", path.steps())));
    }
    path.check_guard()?;
    let y = obs.y();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..m {
        let w = 1.0 / (path.g[j] * path.g[j]);
        num += (y[j + 1] - y[j] - path.f[j]) * w;
        den += w;
    }
    let a_hat = obs.grid().n() as f64 * num / den;
    let envelope_bound = obs.drift().map(|_| error_envelope(path, obs.grid()));
    Ok(EstimateReport { a_hat, model: Model::Rosenblatt, envelope_bound })
}

/// `N sum_j (xi_{j+1}/g_j) / sum_j 1/g_j^2`, which equals `a_hat - a` on
/// synthetic data.
pub fn rosenblatt_error_identity(path: &RosenblattPath, n: usize) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..path.steps() {
        num += path.xi[j + 1] / path.g[j];
        den += 1.0 / (path.g[j] * path.g[j]);
    }
    n as f64 * num / den
}

/// `(N/M) (sum xi_{j+1}^2)^(1/2) (sum g_j^2)^(1/2)`, an upper bound on
/// `|a_hat - a|`; `N/M = N^(1-alpha)` when `M = N^alpha`.
pub fn error_envelope(path: &RosenblattPath, grid: &GridSpec) -> f64 {
    let xi2: f64 = path.xi[1..].iter().map(|v| v * v).sum();
    let g2: f64 = path.g.iter().map(|v| v * v).sum();
    grid.n() as f64 / grid.m() as f64 * xi2.sqrt() * g2.sqrt()
}

/// `N^(2H-1) sum (increments)^2` for a path on the `1/N` grid over `[0, 1]`,
/// with `N = values.len() - 1`.
pub fn qv_sigma2(noise: &NoisePath, h: f64) -> f64 {
    let n = (noise.values.len() - 1) as f64;
    let ss: f64 = noise.values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    n.powf(2.0 * h - 1.0) * ss
}

/// Solves with `Gamma = N^-2H m` directly; used to confirm the scale cancels.
pub fn fbm_mle_unscaled(obs: &ObservationSeries, h: f64) -> Result<f64> {
    let g = obs.grid();
    let gamma = crate::fbm::fbm_cov(h, g.m())?.scaled(g.n());
    let chol = nalgebra::Cholesky::new(gamma).ok_or(Error::Factorization { h, m: g.m() })?;
    let x = DVector::from_fn(g.m(), |i, _| (i + 1) as f64);
    let y = DVector::from_column_slice(&obs.y()[1..]);
    let u = chol.solve(&x);
    Ok(g.n() as f64 * u.dot(&y) / u.dot(&x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_recovery() {
        let grid = GridSpec::new(10, 1.5).unwrap();
        let zero = vec![0.0; grid.m() + 1];
        let obs = ObservationSeries::synthesize(grid, 2.0, &zero).unwrap();
        assert!((wiener_mle(&obs).a_hat - 2.0).abs() < 1e-14);
        assert!((fbm_mle(&obs, 0.75).unwrap().a_hat - 2.0).abs() < 1e-12);
        let none = ObservationSeries::new(zero, grid, None).unwrap();
        assert_eq!(wiener_mle(&none).a_hat, 0.0);
    }

    #[test]
    fn single_observation() {
        let grid = GridSpec::from_steps(20, 1).unwrap();
        let obs = ObservationSeries::new(vec![0.0, 0.37], grid, None).unwrap();
        assert!((fbm_mle(&obs, 0.3).unwrap().a_hat - 20.0 * 0.37).abs() < 1e-13);
        let mse = fbm_mse_closed_form(0.3, &grid).unwrap();
        assert!((mse - 20f64.powf(1.4)).abs() < 1e-12 * mse);
    }

    #[test]
    fn rejects_malformed_series() {
        let grid = GridSpec::from_steps(10, 3).unwrap();
        assert!(ObservationSeries::new(vec![0.0; 3], grid, None).is_err());
        assert!(ObservationSeries::new(vec![1.0, 0.0, 0.0, 0.0], grid, None).is_err());
        assert!("brownian".parse::<Model>().is_err());
        assert_eq!("fbm".parse::<Model>().unwrap(), Model::Fbm);
    }

    #[test]
    fn quadratic_variation_scales_quadratically() {
        let noise = NoisePath { values: vec![0.0, 0.1, -0.2, 0.05], kind: crate::fbm::NoiseKind::Fbm };
        let scaled = NoisePath { values: noise.values.iter().map(|v| 3.0 * v).collect(), ..noise.clone() };
        let a = qv_sigma2(&noise, 0.75);
        assert!((qv_sigma2(&scaled, 0.75) - 9.0 * a).abs() < 1e-14 * a);
        let zero = NoisePath { values: vec![0.0; 4], ..noise };
        assert_eq!(qv_sigma2(&zero, 0.75), 0.0);
    }
}
