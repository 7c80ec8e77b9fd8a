//! Per-step quadrature weights for the Rosenblatt random walk.
//!
//! Everything is computed on the integer grid (cells `[i-1, i]`, panels
//! `(j, j+1]`) and rescaled by powers of `N` on use. For step `j` the cells
//! `lo..=j` with `lo = max(1, j - NEAR_CELLS)` are "near": their factor
//! `psi_k` is not smooth on the panel, so all integrals involving them are
//! precomputed with a graded rule. Far cells are smooth on the panel and are
//! sampled at `nodesPerPanel` Gauss–Legendre nodes, then combined through
//! Lagrange product weights.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::hurst::{HurstParam, Mode};
use crate::kernel::Kernel;
use crate::quadrature::{barycentric_weights, lagrange_basis, GaussLegendre, GradedRule, QuadratureSpec};

/// Number of cells to the left of the running cell that are treated as near.
pub const NEAR_CELLS: usize = 3;
const NEAR: usize = NEAR_CELLS + 1;

/// Default cap on materialized factor samples.
pub const DEFAULT_PSI_BUDGET: usize = 100_000_000;

const CACHE_MAGIC: &[u8; 4] = b"LMKT";
const CACHE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug)]
struct Layout {
    q0: usize,
}

impl Layout {
    fn psi_first(&self) -> usize {
        0
    }
    fn prod(&self) -> usize {
        self.q0
    }
    fn pair(&self) -> usize {
        self.prod() + NEAR * self.q0
    }
    fn chiw(&self) -> usize {
        self.pair() + NEAR * NEAR
    }
    fn chin(&self) -> usize {
        self.chiw() + self.q0
    }
    fn chichi(&self) -> usize {
        self.chin() + NEAR
    }
    fn stride(&self) -> usize {
        self.chichi() + 1
    }
}

/// Weights of one step, borrowed from the table.
#[derive(Clone, Copy, Debug)]
pub struct StepWeights<'a> {
    /// First near cell.
    pub lo: usize,
    /// Number of near cells, `j - lo + 1` (zero at `j = 0`).
    pub near: usize,
    /// `psi_1` at the smooth nodes when cell 1 is far.
    pub psi_first: &'a [f64],
    prod: &'a [f64],
    pair: &'a [f64],
    /// `\int chi_j l_q`.
    pub chi_nodes: &'a [f64],
    /// `\int chi_j psi_k` for near `k`.
    pub chi_near: &'a [f64],
    /// `\int chi_j^2`.
    pub chi_chi: f64,
    q0: usize,
}

impl<'a> StepWeights<'a> {
    /// `\int psi_k l_q` over the panel, near slot `s = k - lo`.
    pub fn prod(&self, s: usize) -> &'a [f64] {
        &self.prod[s * self.q0..(s + 1) * self.q0]
    }

    /// `\int psi_k psi_l` over the panel, near slots `s`, `t`.
    pub fn pair(&self, s: usize, t: usize) -> f64 {
        self.pair[s * NEAR + t]
    }
}

#[derive(Debug)]
struct TableData {
    steps: usize,
    q0: usize,
    kernel: Kernel,
    d: f64,
    tau: Vec<f64>,
    omega: Vec<f64>,
    p_tab: Vec<f64>,
    l_tab: Vec<f64>,
    records: Vec<f64>,
}

/// Immutable weight table for `M` steps of the walk at a fixed Hurst index.
#[derive(Clone, Debug)]
pub struct KernelTable {
    hurst: HurstParam,
    grid: GridSpec,
    quad: QuadratureSpec,
    data: Arc<TableData>,
}

/// Builds the table, computing every step.
pub fn build_kernel_table(hp: &HurstParam, grid: &GridSpec, quad: &QuadratureSpec) -> Result<KernelTable> {
    let base = TableBase::new(hp, grid.m(), quad)?;
    let records = base.compute_records();
    Ok(base.finish(*hp, *grid, *quad, records))
}

/// Builds the table, reading and writing an `LMKT` cache file in `cache_dir`.
pub fn build_kernel_table_cached(
    hp: &HurstParam,
    grid: &GridSpec,
    quad: &QuadratureSpec,
    cache_dir: Option<&Path>,
) -> Result<KernelTable> {
    let Some(dir) = cache_dir else {
        return build_kernel_table(hp, grid, quad);
    };
    let base = TableBase::new(hp, grid.m(), quad)?;
    let path = cache_path(dir, hp.h(), grid.m(), quad);
    let stride = Layout { q0: quad.nodes_per_panel }.stride();
    if let Some(records) = read_cache(&path, hp.h(), grid.m(), quad, stride)? {
        return Ok(base.finish(*hp, *grid, *quad, records));
    }
    let records = base.compute_records();
    fs::create_dir_all(dir)?;
    write_cache(&path, hp.h(), grid.m(), quad, &records)?;
    Ok(base.finish(*hp, *grid, *quad, records))
}

/// File name of the cached table for `(H, M, quadrature)`.
pub fn cache_path(dir: &Path, h: f64, m: usize, quad: &QuadratureSpec) -> PathBuf {
    dir.join(format!("lmkt-{:016x}-m{}-n{}-d{}.bin", h.to_bits(), m, quad.nodes_per_panel, quad.grading_depth))
}

fn header(h: f64, m: usize, quad: &QuadratureSpec) -> Vec<u8> {
    let mut out = Vec::with_capacity(32);
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.extend_from_slice(&(quad.nodes_per_panel as u32).to_le_bytes());
    out.extend_from_slice(&(quad.grading_depth as u32).to_le_bytes());
    out
}

fn write_cache(path: &Path, h: f64, m: usize, quad: &QuadratureSpec, records: &[f64]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
        f.write_all(&header(h, m, quad))?;
        for v in records {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_cache(path: &Path, h: f64, m: usize, quad: &QuadratureSpec, stride: usize) -> Result<Option<Vec<f64>>> {
    let mut bytes = Vec::new();
    match fs::File::open(path) {
        Ok(mut f) => f.read_to_end(&mut bytes)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let head = header(h, m, quad);
    let bad = |reason: &str| Error::Cache { path: path.to_path_buf(), reason: reason.to_string() };
    if bytes.len() < head.len() || &bytes[..4] != CACHE_MAGIC {
        return Err(bad("not an LMKT file"));
    }
    if bytes[..head.len()] != head[..] {
        return Err(bad("header does not match the requested table"));
    }
    let body = &bytes[head.len()..];
    if body.len() != 8 * m * stride {
        return Err(bad("truncated payload"));
    }
    let records = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    Ok(Some(records))
}

struct TableBase {
    steps: usize,
    quad: QuadratureSpec,
    kernel: Kernel,
    d: f64,
    gl: GaussLegendre,
    bary: Vec<f64>,
    w_rule: GradedRule,
}

impl TableBase {
    fn new(hp: &HurstParam, steps: usize, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        if hp.mode() != Mode::Rosenblatt {
            return Err(Error::Domain("kernel tables need a Rosenblatt-mode Hurst parameter".into()));
        }
        if steps == 0 {
            return Err(Error::Domain("kernel table needs M >= 1".into()));
        }
        let kernel = Kernel::rosenblatt_factor(hp, quad)?;
        let gl = GaussLegendre::new(quad.nodes_per_panel);
        let bary = barycentric_weights(gl.nodes());
        let w_rule = GradedRule::for_exponent(quad, kernel.p());
        Ok(TableBase { steps, quad: *quad, kernel, d: hp.d_h()?, gl, bary, w_rule })
    }

    fn layout(&self) -> Layout {
        Layout { q0: self.quad.nodes_per_panel }
    }

    fn compute_records(&self) -> Vec<f64> {
        let stride = self.layout().stride();
        let mut records = vec![0.0; self.steps * stride];
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            records.par_chunks_mut(stride).enumerate().for_each(|(j, rec)| self.step_record(j, rec));
        }
        #[cfg(not(feature = "parallel"))]
        for (j, rec) in records.chunks_mut(stride).enumerate() {
            self.step_record(j, rec);
        }
        records
    }

    fn step_record(&self, j: usize, rec: &mut [f64]) {
        let lay = self.layout();
        let q0 = lay.q0;
        let kern = &self.kernel;
        let (c, p) = (kern.constant(), kern.p());
        let jf = j as f64;
        let (lo, nn) = near_range(j);
        let mut psi = [0.0; NEAR];
        let mut basis = vec![0.0; q0];
        for (x, wt) in self.w_rule.nodes().iter().zip(self.w_rule.weights()) {
            let w = jf + x;
            let wp = c * w.powf(p);
            let pole = kern.to_pole(jf, *x);
            let chi = wp * pole;
            rec[lay.chichi()] += wt * chi * chi;
            lagrange_basis(self.gl.nodes(), &self.bary, *x, &mut basis);
            for (q, b) in basis.iter().enumerate() {
                rec[lay.chiw() + q] += wt * chi * b;
            }
            for (s, v) in psi.iter_mut().enumerate().take(nn) {
                let k = lo + s;
                *v = if k == j {
                    wp * (kern.to_pole(jf - 1.0, 1.0 + x) - pole)
                } else {
                    wp * kern.base_integral((k - 1) as f64, k as f64, w)
                };
            }
            for s in 0..nn {
                rec[lay.chin() + s] += wt * chi * psi[s];
                for (q, b) in basis.iter().enumerate() {
                    rec[lay.prod() + s * q0 + q] += wt * psi[s] * b;
                }
                for t in 0..nn {
                    rec[lay.pair() + s * NEAR + t] += wt * psi[s] * psi[t];
                }
            }
        }
        if lo > 1 {
            for (q, x) in self.gl.nodes().iter().enumerate() {
                let w = jf + x;
                rec[lay.psi_first() + q] = c * w.powf(p) * kern.base_integral(0.0, 1.0, w);
            }
        }
    }

    fn finish(self, hurst: HurstParam, grid: GridSpec, quad: QuadratureSpec, records: Vec<f64>) -> KernelTable {
        let q0 = quad.nodes_per_panel;
        let (p, q) = (self.kernel.p(), self.kernel.q());
        let sigma = self.gl.nodes();
        let omega = self.gl.weights();
        let m = self.steps;
        let mut p_tab = vec![0.0; (m + 1) * q0];
        for i in 2..=m {
            for (mm, (s, w)) in sigma.iter().zip(omega).enumerate() {
                p_tab[i * q0 + mm] = w * ((i - 1) as f64 + s).powf(-p);
            }
        }
        let mut l_tab = vec![0.0; m * q0 * q0];
        for dd in (NEAR_CELLS + 1)..m {
            for (qi, t) in sigma.iter().enumerate() {
                let row = &mut l_tab[(dd * q0 + qi) * q0..(dd * q0 + qi + 1) * q0];
                for (mm, s) in sigma.iter().enumerate() {
                    row[mm] = (dd as f64 + 1.0 + t - s).powf(-q);
                }
            }
        }
        let data = TableData {
            steps: m,
            q0,
            d: self.d,
            tau: sigma.to_vec(),
            omega: omega.to_vec(),
            kernel: self.kernel,
            p_tab,
            l_tab,
            records,
        };
        KernelTable { hurst, grid, quad, data: Arc::new(data) }
    }
}

/// First near cell and number of near cells at step `j`.
pub fn near_range(j: usize) -> (usize, usize) {
    if j == 0 {
        (1, 0)
    } else {
        let lo = j.saturating_sub(NEAR_CELLS).max(1);
        (lo, j - lo + 1)
    }
}

impl KernelTable {
    pub fn hurst(&self) -> &HurstParam {
        &self.hurst
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    /// Number of steps `M` covered.
    pub fn steps(&self) -> usize {
        self.data.steps
    }

    /// Same weights on another grid with the same `M` (no recomputation).
    pub fn with_grid(&self, grid: GridSpec) -> Result<KernelTable> {
        if grid.m() != self.steps() {
            return Err(Error::Domain(format!("table covers M = {} steps, grid has M = {}", self.steps(), grid.m())));
        }
        Ok(KernelTable { grid, ..self.clone() })
    }

    /// Smooth panel nodes `tau_q` in `(0, 1)`.
    pub fn nodes(&self) -> &[f64] {
        &self.data.tau
    }

    /// Gauss–Legendre weights of the smooth panel nodes (sum to one).
    pub fn node_weights(&self) -> &[f64] {
        &self.data.omega
    }

    /// `d(H)`.
    pub fn d(&self) -> f64 {
        self.data.d
    }

    /// `N^-H`.
    pub fn n_pow_h(&self) -> f64 {
        (self.grid.n() as f64).powf(-self.hurst.h())
    }

    /// Factor converting integer-grid weights to the `1/N` grid: `N^-(H+1)`.
    pub fn weight_scale(&self) -> f64 {
        (self.grid.n() as f64).powf(-(self.hurst.h() + 1.0))
    }

    pub fn kernel(&self) -> &Kernel {
        &self.data.kernel
    }

    /// Raw step-major record array, as stored in the cache file.
    pub fn records(&self) -> &[f64] {
        &self.data.records
    }

    pub fn step(&self, j: usize) -> StepWeights<'_> {
        let lay = Layout { q0: self.data.q0 };
        let stride = lay.stride();
        let rec = &self.data.records[j * stride..(j + 1) * stride];
        let q0 = self.data.q0;
        let (lo, near) = near_range(j);
        StepWeights {
            lo,
            near,
            psi_first: &rec[..q0],
            prod: &rec[lay.prod()..lay.pair()],
            pair: &rec[lay.pair()..lay.chiw()],
            chi_nodes: &rec[lay.chiw()..lay.chin()],
            chi_near: &rec[lay.chin()..lay.chin() + NEAR],
            chi_chi: rec[lay.chichi()],
            q0,
        }
    }

    /// Integer-grid `psi_i(j + tau_q)` for the far cells `1..lo`, stored
    /// cell-major (`out[(i-1) * Q + q]`). Returns the number of far cells.
    pub fn far_psi(&self, j: usize, out: &mut Vec<f64>) -> usize {
        let dat = &*self.data;
        let q0 = dat.q0;
        let (lo, _) = near_range(j);
        let nf = lo - 1;
        out.clear();
        out.resize(nf * q0, 0.0);
        if nf == 0 {
            return 0;
        }
        let kern = &dat.kernel;
        let wp: Vec<f64> = dat.tau.iter().map(|t| kern.constant() * (j as f64 + t).powf(kern.p())).collect();
        out[..q0].copy_from_slice(self.step(j).psi_first);
        for i in 2..=nf {
            let dd = j - i;
            let prow = &dat.p_tab[i * q0..(i + 1) * q0];
            let lblock = &dat.l_tab[dd * q0 * q0..(dd + 1) * q0 * q0];
            let orow = &mut out[(i - 1) * q0..i * q0];
            for q in 0..q0 {
                let lrow = &lblock[q * q0..(q + 1) * q0];
                let mut acc = 0.0;
                for (a, b) in prow.iter().zip(lrow) {
                    acc += a * b;
                }
                orow[q] = wp[q] * acc;
            }
        }
        nf
    }

    /// `psi_i(j + tau_q)` on the integer grid for every cell `i <= j`,
    /// cell-major; near cells are evaluated directly.
    pub fn psi_samples(&self, j: usize) -> Result<Vec<f64>> {
        self.check_step(j)?;
        let q0 = self.data.q0;
        let mut out = Vec::new();
        self.far_psi(j, &mut out);
        let (lo, nn) = near_range(j);
        for k in lo..lo + nn {
            for t in &self.data.tau {
                out.push(self.data.kernel.cell_integral((k - 1) as f64, k as f64, j as f64 + t));
            }
        }
        debug_assert_eq!(out.len(), j * q0);
        Ok(out)
    }

    /// Materializes every step's factor samples, refusing beyond `budget` values.
    pub fn materialize_psi(&self, budget: usize) -> Result<Vec<Vec<f64>>> {
        let total = self.data.q0 as u128 * (self.steps() as u128 * (self.steps() as u128 - 1) / 2);
        if total > budget as u128 {
            return Err(Error::MemoryBudget(format!(
                "{total} factor samples requested, budget is {budget}; stream per step instead"
            )));
        }
        (0..self.steps()).map(|j| self.psi_samples(j)).collect()
    }

    fn check_step(&self, j: usize) -> Result<()> {
        if j >= self.steps() {
            return Err(Error::Index(format!("step {j} outside 0..{}", self.steps())));
        }
        Ok(())
    }

    /// `G_j(i)` for `i = 1..=j` on the `1/N` grid.
    pub fn g_weights(&self, j: usize) -> Result<Vec<f64>> {
        self.check_step(j)?;
        Ok(self.g_weights_integer(j).into_iter().map(|v| v * self.weight_scale()).collect())
    }

    /// Integer-grid `G_j(i)`, including `d(H)`.
    pub(crate) fn g_weights_integer(&self, j: usize) -> Vec<f64> {
        let q0 = self.data.q0;
        let st = self.step(j);
        let mut far = Vec::new();
        let nf = self.far_psi(j, &mut far);
        let mut out = Vec::with_capacity(j);
        for i in 0..nf {
            let row = &far[i * q0..(i + 1) * q0];
            out.push(self.d() * dot(row, st.chi_nodes));
        }
        for s in 0..st.near {
            out.push(self.d() * st.chi_near[s]);
        }
        out
    }

    /// `Delta_j(i, k)` on the `1/N` grid: the cell integral of
    /// `F((j+1)/N) - F(j/N)`.
    pub fn pair_weight(&self, j: usize, i: usize, k: usize) -> Result<f64> {
        self.check_step(j)?;
        if i == 0 || k == 0 || i > j || k > j {
            return Err(Error::Index(format!("pair weight needs 1 <= i, k <= j, got j={j}, i={i}, k={k}")));
        }
        let q0 = self.data.q0;
        let st = self.step(j);
        let mut far = Vec::new();
        self.far_psi(j, &mut far);
        let row = |c: usize| &far[(c - 1) * q0..c * q0];
        let v = match (i < st.lo, k < st.lo) {
            (true, true) => {
                self.node_weights().iter().zip(row(i).iter().zip(row(k))).map(|(w, (a, b))| w * a * b).sum()
            }
            (true, false) => dot(row(i), st.prod(k - st.lo)),
            (false, true) => dot(row(k), st.prod(i - st.lo)),
            (false, false) => st.pair(i - st.lo, k - st.lo),
        };
        Ok(self.d() * v * self.weight_scale())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
