//! Fractional Brownian motion on the observation grid.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::rng::standard_normals;

/// Largest `M` for which the dense `M x M` covariance is factorized.
pub const FBM_MAX_M: usize = 6000;

/// Kind of noise a path was drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Wiener,
    Fbm,
    Rosenblatt,
}

/// Noise sampled at the grid times `j/N`, `j = 0..=M`; `values[0] = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    pub values: Vec<f64>,
    pub kind: NoiseKind,
}

/// `m_ij = (i^2H + j^2H - |i-j|^2H) / 2`.
pub fn fbm_entry(h: f64, i: usize, j: usize) -> f64 {
    let e = 2.0 * h;
    0.5 * ((i as f64).powf(e) + (j as f64).powf(e) - (i.abs_diff(j) as f64).powf(e))
}

/// Integer-grid fBm covariance; the `1/N` grid covariance is `N^-2H m`.
#[derive(Clone, Debug)]
pub struct CovarianceModel {
    h: f64,
    m: DMatrix<f64>,
}

pub fn fbm_cov(h: f64, m: usize) -> Result<CovarianceModel> {
    check_h(h)?;
    if m == 0 {
        return Err(Error::Domain("covariance needs M >= 1".into()));
    }
    if m > FBM_MAX_M {
        return Err(Error::MemoryBudget(format!(
            "dense fBm covariance with M = {m} exceeds the limit M <= {FBM_MAX_M}"
        )));
    }
    Ok(CovarianceModel { h, m: DMatrix::from_fn(m, m, |i, j| fbm_entry(h, i + 1, j + 1)) })
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("fBm needs 0 < H < 1, got {h}")))
    }
}

impl CovarianceModel {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `Gamma = N^-2H m`.
    pub fn scaled(&self, n: usize) -> DMatrix<f64> {
        &self.m * (n as f64).powf(-2.0 * self.h)
    }
}

/// Factorized covariance shared by the fBm sampler and the fBm estimator.
#[derive(Clone, Debug)]
pub struct FbmModel {
    h: f64,
    grid: GridSpec,
    chol: Cholesky<f64, Dyn>,
    /// `m^-1 x` with `x = (1, ..., M)`.
    u: DVector<f64>,
    xtu: f64,
}

impl FbmModel {
    pub fn new(h: f64, grid: &GridSpec) -> Result<Self> {
        let cov = fbm_cov(h, grid.m())?;
        let m = grid.m();
        let chol = Cholesky::new(cov.m).ok_or(Error::Factorization { h, m })?;
        let x = DVector::from_fn(m, |i, _| (i + 1) as f64);
        let u = chol.solve(&x);
        let xtu = x.dot(&u);
        if !(xtu.is_finite() && xtu > 0.0) {
            return Err(Error::Factorization { h, m });
        }
        Ok(FbmModel { h, grid: *grid, chol, u, xtu })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Solves `m v = b` with the stored factor.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub(crate) fn u(&self) -> &DVector<f64> {
        &self.u
    }

    /// `x^T m^-1 x`.
    pub fn xtu(&self) -> f64 {
        self.xtu
    }

    /// `N^-H L z` with `L` the lower Cholesky factor of `m`.
    pub fn path_from_normals(&self, z: &[f64]) -> NoisePath {
        let m = self.grid.m();
        assert_eq!(z.len(), m, "expected {m} normals");
        let l = self.chol.l_dirty();
        let mut acc = vec![0.0; m];
        for (k, zk) in z.iter().enumerate() {
            let col = l.column(k);
            for j in k..m {
                acc[j] += col[j] * zk;
            }
        }
        let scale = (self.grid.n() as f64).powf(-self.h);
        let mut values = Vec::with_capacity(m + 1);
        values.push(0.0);
        values.extend(acc.iter().map(|v| v * scale));
        NoisePath { values, kind: NoiseKind::Fbm }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> NoisePath {
        let z = standard_normals(rng, self.grid.m());
        self.path_from_normals(&z)
    }
}

/// One fBm path on `grid`. Factorizes the covariance on every call; use
/// [`FbmModel`] to reuse it across replications.
pub fn simulate_fbm<R: Rng + ?Sized>(h: f64, grid: &GridSpec, rng: &mut R) -> Result<NoisePath> {
    Ok(FbmModel::new(h, grid)?.sample(rng))
}

/// Brownian path with independent `N(0, 1/N)` increments.
pub fn simulate_wiener<R: Rng + ?Sized>(grid: &GridSpec, rng: &mut R) -> NoisePath {
    wiener_from_normals(grid, &standard_normals(rng, grid.m()))
}

pub fn wiener_from_normals(grid: &GridSpec, z: &[f64]) -> NoisePath {
    let sd = grid.dt().sqrt();
    let mut values = Vec::with_capacity(z.len() + 1);
    let mut acc = 0.0;
    values.push(0.0);
    for v in z {
        acc += sd * v;
        values.push(acc);
    }
    NoisePath { values, kind: NoiseKind::Wiener }
}
