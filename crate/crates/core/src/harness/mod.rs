//! Seeded Monte Carlo experiments over the three observation models.

pub mod diagnostics;
pub mod scaling;

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use statrs::statistics::Statistics;

use crate::error::{Error, Result};
use crate::estimators::{
    fbm_mle_with, rosenblatt_error_identity, rosenblatt_pseudo_mle, wiener_mle, Model, ObservationSeries,
};
use crate::fbm::{wiener_from_normals, FbmModel};
use crate::grid::GridSpec;
use crate::hurst::{hurst_constants, Mode};
use crate::quadrature::QuadratureSpec;
use crate::rng::{replication_rng, standard_normals};
use crate::rosenblatt::{draw_innovations, walk_from_innovations, RosenblattPath};
use crate::table::{build_kernel_table_cached, KernelTable};

/// One cell of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    /// Hurst index; ignored (and conventionally 0.5) for the Wiener model.
    pub h: f64,
    pub a: f64,
    pub n: usize,
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    pub quadrature: QuadratureSpec,
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Domain("replications must be at least 1".into()));
        }
        if !self.a.is_finite() {
            return Err(Error::Domain(format!("drift must be finite, got {}", self.a)));
        }
        self.grid()?;
        self.quadrature.validate()?;
        match self.model {
            Model::Wiener => Ok(()),
            Model::Fbm => hurst_constants(self.h, Mode::Fbm).map(|_| ()),
            Model::Rosenblatt => hurst_constants(self.h, Mode::Rosenblatt).map(|_| ()),
        }
    }

    /// Violated consistency conditions (alpha > 1, alpha > 2 - 2H).
    pub fn warnings(&self) -> Vec<String> {
        let h = match self.model {
            Model::Rosenblatt => Some(self.h),
            _ => None,
        };
        self.grid().map(|g| g.warnings(h)).unwrap_or_default()
    }

    fn noise_key(&self) -> (Model, u64, usize, u64, usize, u64, QuadratureKey) {
        (
            self.model,
            self.h.to_bits(),
            self.n,
            self.alpha.to_bits(),
            self.replications,
            self.seed,
            QuadratureKey::from(&self.quadrature),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct QuadratureKey(usize, usize, u64);

impl From<&QuadratureSpec> for QuadratureKey {
    fn from(q: &QuadratureSpec) -> Self {
        QuadratureKey(q.nodes_per_panel, q.grading_depth, q.rel_tol.to_bits())
    }
}

/// Execution settings that must not change results.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Replications simulated together; `None` splits evenly over the thread pool.
    pub batch_size: Option<usize>,
    /// Directory for cached kernel tables.
    pub cache_dir: Option<PathBuf>,
}

/// Pathwise identities checked on every Rosenblatt replication.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathChecks {
    pub replications: usize,
    pub reconstruction_failures: usize,
    pub identity_failures: usize,
    pub envelope_violations: usize,
    pub max_reconstruction_residual: f64,
    pub max_identity_residual: f64,
    pub min_abs_g: f64,
}

impl PathChecks {
    pub fn all_pass(&self) -> bool {
        self.reconstruction_failures == 0 && self.identity_failures == 0 && self.envelope_violations == 0
    }

    fn merge(&mut self, o: &PathChecks) {
        if self.replications == 0 {
            self.min_abs_g = f64::INFINITY;
        }
        self.replications += o.replications;
        self.reconstruction_failures += o.reconstruction_failures;
        self.identity_failures += o.identity_failures;
        self.envelope_violations += o.envelope_violations;
        self.max_reconstruction_residual = self.max_reconstruction_residual.max(o.max_reconstruction_residual);
        self.max_identity_residual = self.max_identity_residual.max(o.max_identity_residual);
        self.min_abs_g = self.min_abs_g.min(o.min_abs_g);
    }
}

/// Aggregated outcome of one experiment cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub config: ExperimentConfig,
    pub mean: f64,
    pub std: f64,
    pub mse: f64,
    pub per_replication: Vec<f64>,
    pub runtime_seconds: f64,
    pub checks: Option<PathChecks>,
    pub warnings: Vec<String>,
}

impl McSummary {
    fn new(
        config: ExperimentConfig,
        per_replication: Vec<f64>,
        runtime_seconds: f64,
        checks: Option<PathChecks>,
    ) -> Self {
        let mean = per_replication.iter().mean();
        let std = per_replication.iter().std_dev();
        let a = config.a;
        let mse = per_replication.iter().map(|v| (v - a).powi(2)).mean();
        let warnings = config.warnings();
        McSummary { config, mean, std, mse, per_replication, runtime_seconds, checks, warnings }
    }
}

/// Runs one cell.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<McSummary> {
    Ok(run_sweep(std::slice::from_ref(cfg), opts)?.pop().expect("one cell"))
}

/// Runs several cells, simulating the noise once for cells that differ only in
/// the drift (their replication streams coincide). Output order follows input.
pub fn run_sweep(cells: &[ExperimentConfig], opts: &RunOptions) -> Result<Vec<McSummary>> {
    for c in cells {
        c.validate()?;
    }
    let mut out: Vec<Option<McSummary>> = vec![None; cells.len()];
    let mut done = vec![false; cells.len()];
    for first in 0..cells.len() {
        if done[first] {
            continue;
        }
        let key = cells[first].noise_key();
        let members: Vec<usize> = (first..cells.len()).filter(|&i| !done[i] && cells[i].noise_key() == key).collect();
        let drifts: Vec<f64> = members.iter().map(|&i| cells[i].a).collect();
        let start = Instant::now();
        let outcome = estimate_group(&cells[first], &drifts, opts)?;
        let elapsed = start.elapsed().as_secs_f64();
        for (slot, (est, checks)) in members.iter().zip(outcome) {
            done[*slot] = true;
            out[*slot] = Some(McSummary::new(cells[*slot].clone(), est, elapsed, checks));
        }
    }
    Ok(out.into_iter().map(|s| s.expect("every cell estimated")).collect())
}

type GroupOutcome = Vec<(Vec<f64>, Option<PathChecks>)>;

fn batch_ranges(total: usize, batch: Option<usize>) -> Vec<(usize, usize)> {
    let size = batch.unwrap_or_else(|| total.div_ceil(thread_count())).max(1);
    (0..total).step_by(size).map(|s| (s, (s + size).min(total))).collect()
}

fn thread_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

fn map_batches<T, F>(ranges: &[(usize, usize)], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ranges.par_iter().map(|&(s, e)| f(s, e)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ranges.iter().map(|&(s, e)| f(s, e)).collect()
    }
}

fn estimate_group(cfg: &ExperimentConfig, drifts: &[f64], opts: &RunOptions) -> Result<GroupOutcome> {
    let grid = cfg.grid()?;
    let reps = cfg.replications;
    let ranges = batch_ranges(reps, opts.batch_size);
    let nd = drifts.len();
    match cfg.model {
        Model::Wiener | Model::Fbm => {
            let fbm = match cfg.model {
                Model::Fbm => Some(FbmModel::new(cfg.h, &grid)?),
                _ => None,
            };
            let batches = map_batches(&ranges, |s, e| {
                let mut est = vec![Vec::with_capacity(e - s); nd];
                for r in s..e {
                    let mut rng = replication_rng(cfg.seed, r as u64);
                    let noise = match &fbm {
                        Some(model) => model.sample(&mut rng),
                        None => wiener_from_normals(&grid, &standard_normals(&mut rng, grid.m())),
                    };
                    for (k, &a) in drifts.iter().enumerate() {
                        let obs = ObservationSeries::synthesize(grid, a, &noise.values)?;
                        let a_hat = match &fbm {
                            Some(model) => fbm_mle_with(model, &obs).map_err(|e| e.in_replication(r))?.a_hat,
                            None => wiener_mle(&obs).a_hat,
                        };
                        est[k].push(a_hat);
                    }
                }
                Ok(est)
            })?;
            Ok((0..nd).map(|k| (batches.iter().flat_map(|b| b[k].iter().copied()).collect(), None)).collect())
        }
        Model::Rosenblatt => {
            let table = rosenblatt_table(cfg.h, &grid, &cfg.quadrature, opts)?;
            let batches = map_batches(&ranges, |s, e| {
                let paths = simulate_batch(&table, cfg.seed, s, e)?;
                let mut est = vec![Vec::with_capacity(e - s); nd];
                let mut checks = vec![PathChecks::default(); nd];
                for (off, path) in paths.iter().enumerate() {
                    for (k, &a) in drifts.iter().enumerate() {
                        let (a_hat, c) = estimate_rosenblatt(&grid, a, path).map_err(|e| e.in_replication(s + off))?;
                        est[k].push(a_hat);
                        checks[k].merge(&c);
                    }
                }
                Ok((est, checks))
            })?;
            Ok((0..nd)
                .map(|k| {
                    let est = batches.iter().flat_map(|b| b.0[k].iter().copied()).collect();
                    let mut checks = PathChecks::default();
                    for b in &batches {
                        checks.merge(&b.1[k]);
                    }
                    (est, Some(checks))
                })
                .collect())
        }
    }
}

/// Kernel table for `(H, grid)`, cached when a directory is configured.
pub fn rosenblatt_table(h: f64, grid: &GridSpec, quad: &QuadratureSpec, opts: &RunOptions) -> Result<KernelTable> {
    let hp = hurst_constants(h, Mode::Rosenblatt)?;
    build_kernel_table_cached(&hp, grid, quad, opts.cache_dir.as_deref())
}

fn simulate_batch(table: &KernelTable, seed: u64, start: usize, end: usize) -> Result<Vec<RosenblattPath>> {
    let m = table.steps();
    let xs = (start..end).map(|r| draw_innovations(&mut replication_rng(seed, r as u64), m)).collect();
    let paths = walk_from_innovations(table, xs)?;
    for (off, p) in paths.iter().enumerate() {
        p.check_guard().map_err(|e| e.in_replication(start + off))?;
    }
    Ok(paths)
}

/// Replications `0..reps` of the walk with streams keyed by `(seed, r)`.
pub fn simulate_rosenblatt_paths(
    table: &KernelTable,
    reps: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<Vec<RosenblattPath>> {
    let ranges = batch_ranges(reps, opts.batch_size);
    let batches = map_batches(&ranges, |s, e| simulate_batch(table, seed, s, e))?;
    Ok(batches.into_iter().flatten().collect())
}

/// Pseudo-MLE on synthetic data plus the three pathwise checks.
pub fn estimate_rosenblatt(grid: &GridSpec, a: f64, path: &RosenblattPath) -> Result<(f64, PathChecks)> {
    let obs = ObservationSeries::synthesize(*grid, a, &path.z)?;
    let rep = rosenblatt_pseudo_mle(&obs, path)?;
    let err = rep.a_hat - a;
    let identity = rosenblatt_error_identity(path, grid.n());
    let y_scale = obs.y().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = f64::EPSILON;
    let tol = 64.0 * eps * grid.n() as f64 * (y_scale + 1.0) + 1e-12 * identity.abs();
    let id_res = (err - identity).abs();
    let rec = path.reconstruction_residual();
    let bound = rep.envelope_bound.expect("synthetic data carries the drift");
    let min_abs_g = path.g.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let checks = PathChecks {
        replications: 1,
        reconstruction_failures: usize::from(rec > 64.0 * eps),
        identity_failures: usize::from(id_res > tol),
        envelope_violations: usize::from(err.abs() > bound * (1.0 + 1e-12) + tol),
        max_reconstruction_residual: rec,
        max_identity_residual: id_res,
        min_abs_g,
    };
    Ok((rep.a_hat, checks))
}
