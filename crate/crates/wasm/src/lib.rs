//! Browser bindings: sample an fBm or Rosenblatt-walk path and estimate the
//! drift from it. Sizes are capped to keep the page responsive.

use wasm_bindgen::prelude::*;

use longmem_core::estimators::{fbm_mle_with, rosenblatt_pseudo_mle};
use longmem_core::fbm::FbmModel;
use longmem_core::rng::replication_rng;
use longmem_core::rosenblatt::simulate_rosenblatt_walk;
use longmem_core::table::build_kernel_table;
use longmem_core::{hurst_constants, Error, GridSpec, Mode, ObservationSeries, QuadratureSpec};

/// Largest number of fBm observations.
pub const MAX_FBM_STEPS: usize = 1500;
/// Largest number of walk steps.
pub const MAX_WALK_STEPS: usize = 400;

/// Noisy observations `Y_j = a j/N + noise_j` together with the drift estimate.
#[wasm_bindgen]
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    times: Vec<f64>,
    noise: Vec<f64>,
    observations: Vec<f64>,
    a_hat: f64,
    envelope: f64,
}

#[wasm_bindgen]
impl Sample {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn noise(&self) -> Vec<f64> {
        self.noise.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn observations(&self) -> Vec<f64> {
        self.observations.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn a_hat(&self) -> f64 {
        self.a_hat
    }

    /// Pathwise error bound; NaN for fBm.
    #[wasm_bindgen(getter)]
    pub fn envelope(&self) -> f64 {
        self.envelope
    }
}

fn grid(n: usize, alpha: f64, cap: usize) -> Result<GridSpec, Error> {
    let grid = GridSpec::new(n, alpha)?;
    if grid.m() > cap {
        return Err(Error::Domain(format!("M = {} exceeds the demo limit of {cap}", grid.m())));
    }
    Ok(grid)
}

fn finish(grid: &GridSpec, noise: Vec<f64>, a: f64) -> Result<(Vec<f64>, ObservationSeries), Error> {
    let times = (0..=grid.m()).map(|j| j as f64 * grid.dt()).collect();
    Ok((times, ObservationSeries::synthesize(*grid, a, &noise)?))
}

pub fn fbm_sample(h: f64, n: usize, alpha: f64, a: f64, seed: u64) -> Result<Sample, Error> {
    hurst_constants(h, Mode::Fbm)?;
    let grid = grid(n, alpha, MAX_FBM_STEPS)?;
    let model = FbmModel::new(h, &grid)?;
    let noise = model.sample(&mut replication_rng(seed, 0)).values;
    let (times, obs) = finish(&grid, noise.clone(), a)?;
    let a_hat = fbm_mle_with(&model, &obs)?.a_hat;
    Ok(Sample { times, noise, observations: obs.y().to_vec(), a_hat, envelope: f64::NAN })
}

pub fn rosenblatt_sample(h: f64, n: usize, alpha: f64, a: f64, seed: u64) -> Result<Sample, Error> {
    let hp = hurst_constants(h, Mode::Rosenblatt)?;
    let grid = grid(n, alpha, MAX_WALK_STEPS)?;
    let table = build_kernel_table(&hp, &grid, &QuadratureSpec::default())?;
    let path = simulate_rosenblatt_walk(&table, &mut replication_rng(seed, 0))?;
    let (times, obs) = finish(&grid, path.z.clone(), a)?;
    let report = rosenblatt_pseudo_mle(&obs, &path)?;
    Ok(Sample {
        times,
        noise: path.z,
        observations: obs.y().to_vec(),
        a_hat: report.a_hat,
        envelope: report.envelope_bound.unwrap_or(f64::NAN),
    })
}

/// fBm path with drift `a` and its maximum-likelihood drift estimate.
#[wasm_bindgen(js_name = simulateFbm)]
pub fn simulate_fbm(h: f64, n: usize, alpha: f64, a: f64, seed: u32) -> Result<Sample, JsError> {
    fbm_sample(h, n, alpha, a, seed.into()).map_err(|e| JsError::new(&e.to_string()))
}

/// Rosenblatt-walk path with drift `a` and its pseudo-likelihood drift estimate.
#[wasm_bindgen(js_name = simulateRosenblatt)]
pub fn simulate_rosenblatt(h: f64, n: usize, alpha: f64, a: f64, seed: u32) -> Result<Sample, JsError> {
    rosenblatt_sample(h, n, alpha, a, seed.into()).map_err(|e| JsError::new(&e.to_string()))
}

/// Exact fBm mean squared error `N^(2-2H) / (x^T m^-1 x)`.
#[wasm_bindgen(js_name = fbmMse)]
pub fn fbm_mse(h: f64, n: usize, alpha: f64) -> Result<f64, JsError> {
    let run = || -> Result<f64, Error> {
        hurst_constants(h, Mode::Fbm)?;
        longmem_core::estimators::fbm_mse_closed_form(h, &grid(n, alpha, MAX_FBM_STEPS)?)
    };
    run().map_err(|e| JsError::new(&e.to_string()))
}
