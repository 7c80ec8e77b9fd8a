use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use longmem_core::estimators::{fbm_mle, rosenblatt_pseudo_mle, wiener_mle};
use longmem_core::fbm::{wiener_from_normals, FbmModel};
use longmem_core::harness::diagnostics::{
    default_gamma, gamma_interval, martingale_diagnostic, median, tn_growth_diagnostic, MartingaleReport,
};
use longmem_core::harness::scaling::{gershgorin_sweep, mse_scaling_study, GershgorinRow, ScalingStudy};
use longmem_core::harness::{rosenblatt_table, run_sweep, simulate_rosenblatt_paths, PathChecks};
use longmem_core::rng::{replication_rng, standard_normals};
use longmem_core::{
    hurst_constants, ExperimentConfig, GridSpec, McSummary, Mode, Model, NoisePath, ObservationSeries, RosenblattPath,
    RunOptions,
};

use crate::args::{Common, DiagnosticsArgs, EstimateArgs, Format, Manifest, ScalingArgs, SimulateArgs, SweepArgs};
use crate::format::g6;
use crate::CliError;

/// Walk cells above this many steps need `--full`.
pub const FULL_STEPS: usize = 20_000;

const CACHE_ENV: &str = "LONGMEM_CACHE_DIR";

type CliResult<T> = Result<T, CliError>;

fn run_options(common: &Common) -> RunOptions {
    RunOptions {
        batch_size: common.batch,
        cache_dir: std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
    }
}

fn require_seed(seed: Option<u64>) -> CliResult<u64> {
    seed.ok_or_else(|| {
        CliError::Usage("--seed is required: results are only reproducible with an explicit seed".into())
    })
}

fn check_hurst(model: Model, h: f64) -> CliResult<()> {
    let mode = match model {
        Model::Wiener => return Ok(()),
        Model::Fbm => Mode::Fbm,
        Model::Rosenblatt => Mode::Rosenblatt,
    };
    hurst_constants(h, mode).map(|_| ()).map_err(|e| CliError::Usage(format!("invalid value '{h}' for --hurst: {e}")))
}

fn require_hurst(model: Model, h: Option<f64>) -> CliResult<f64> {
    match (model, h) {
        (Model::Wiener, _) => Ok(0.5),
        (_, Some(h)) => check_hurst(model, h).map(|_| h),
        (_, None) => Err(CliError::Usage(format!("--hurst is required for the {model} model"))),
    }
}

fn check_steps(grid: &GridSpec, full: bool) -> CliResult<()> {
    if grid.m() > FULL_STEPS && !full {
        return Err(CliError::Usage(format!(
            "N = {}, alpha = {} gives M = {} walk steps; pass --full to run cells above {FULL_STEPS} steps",
            grid.n(),
            grid.alpha(),
            grid.m()
        )));
    }
    Ok(())
}

fn grid_arg(n: usize, alpha: f64) -> CliResult<GridSpec> {
    GridSpec::new(n, alpha).map_err(|e| CliError::Usage(format!("invalid --n/--alpha ({n}, {alpha}): {e}")))
}

/// Output sink: the `--out` file or stdout.
struct Sink {
    path: Option<PathBuf>,
    inner: Box<dyn Write>,
}

impl Sink {
    fn open(out: &Option<PathBuf>) -> CliResult<Sink> {
        match out {
            Some(p) => {
                let f = File::create(p).map_err(|e| io_err(p, e))?;
                Ok(Sink { path: Some(p.clone()), inner: Box::new(BufWriter::new(f)) })
            }
            None => Ok(Sink { path: None, inner: Box::new(BufWriter::new(io::stdout().lock())) }),
        }
    }

    fn line(&mut self, s: &str) -> CliResult<()> {
        writeln!(self.inner, "{s}").map_err(|e| self.err(e))
    }

    fn json<T: Serialize>(&mut self, value: &T) -> CliResult<()> {
        serde_json::to_writer_pretty(&mut self.inner, value).map_err(|e| self.err(e.into()))?;
        self.line("")
    }

    fn finish(mut self) -> CliResult<()> {
        self.inner.flush().map_err(|e| self.err(e))
    }

    fn err(&self, e: io::Error) -> CliError {
        match &self.path {
            Some(p) => io_err(p, e),
            None => io_err(Path::new("<stdout>"), e),
        }
    }
}

fn io_err(p: &Path, source: io::Error) -> CliError {
    CliError::Io { path: p.display().to_string(), source }
}

fn write_comments(sink: &mut Sink, manifest: &Manifest, warnings: &[String]) -> CliResult<()> {
    for l in manifest.comment_lines() {
        sink.line(&l)?;
    }
    for w in warnings {
        sink.line(&format!("# warning: {w}"))?;
    }
    Ok(())
}

fn dedup(v: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    v.into_iter().filter(|w| seen.insert(w.clone())).collect()
}

pub fn simulate(args: SimulateArgs) -> CliResult<()> {
    let model = Model::from(args.model);
    let seed = require_seed(args.seed)?;
    let h = require_hurst(model, args.hurst)?;
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let grid = grid_arg(args.n, args.alpha)?;
    if model == Model::Rosenblatt {
        check_steps(&grid, true)?;
    }
    let quad = args.common.quadrature();
    quad.validate().map_err(|e| CliError::Usage(format!("invalid quadrature flags: {e}")))?;
    let opts = run_options(&args.common);

    let mut manifest = Manifest::new("simulate", &args.common);
    manifest.model = Some(model.to_string());
    if model != Model::Wiener {
        manifest.hurst = vec![h];
    }
    manifest.n = vec![args.n];
    manifest.alpha = vec![args.alpha];
    manifest.reps = Some(args.reps);
    manifest.seed = Some(seed);
    let warnings = grid.warnings((model == Model::Rosenblatt).then_some(h));

    let mut sink = Sink::open(&args.common.out)?;
    match model {
        Model::Rosenblatt => {
            let table = rosenblatt_table(h, &grid, &quad, &opts)?;
            let paths = simulate_rosenblatt_paths(&table, args.reps, seed, &opts)?;
            match args.common.format {
                Format::Csv => {
                    write_comments(&mut sink, &manifest, &warnings)?;
                    write_walk_csv(&mut sink, &paths, grid.n())?;
                }
                Format::Json => sink.json(&json!({ "manifest": manifest, "warnings": warnings, "paths": paths }))?,
            }
        }
        Model::Fbm | Model::Wiener => {
            let fbm = match model {
                Model::Fbm => Some(FbmModel::new(h, &grid)?),
                _ => None,
            };
            let paths: Vec<NoisePath> = (0..args.reps)
                .map(|r| {
                    let mut rng = replication_rng(seed, r as u64);
                    match &fbm {
                        Some(m) => m.sample(&mut rng),
                        None => wiener_from_normals(&grid, &standard_normals(&mut rng, grid.m())),
                    }
                })
                .collect();
            match args.common.format {
                Format::Csv => {
                    write_comments(&mut sink, &manifest, &warnings)?;
                    write_noise_csv(&mut sink, &paths, grid.n())?;
                }
                Format::Json => sink.json(&json!({ "manifest": manifest, "warnings": warnings, "paths": paths }))?,
            }
        }
    }
    sink.finish()
}

fn opt_e(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn write_walk_csv(sink: &mut Sink, paths: &[RosenblattPath], n: usize) -> CliResult<()> {
    let multi = paths.len() > 1;
    sink.line(if multi { "rep,step,t,xi,f,g,Z" } else { "step,t,xi,f,g,Z" })?;
    for (r, p) in paths.iter().enumerate() {
        let m = p.steps();
        for j in 0..=m {
            let prefix = if multi { format!("{r},") } else { String::new() };
            let t = j as f64 / n as f64;
            let xi = opt_e((j > 0).then(|| p.xi[j]));
            let f = opt_e((j < m).then(|| p.f[j]));
            let g = opt_e((j < m).then(|| p.g[j]));
            sink.line(&format!("{prefix}{j},{t:e},{xi},{f},{g},{:e}", p.z[j]))?;
        }
    }
    Ok(())
}

fn write_noise_csv(sink: &mut Sink, paths: &[NoisePath], n: usize) -> CliResult<()> {
    let multi = paths.len() > 1;
    sink.line(if multi { "rep,step,t,value" } else { "step,t,value" })?;
    for (r, p) in paths.iter().enumerate() {
        for (j, v) in p.values.iter().enumerate() {
            let prefix = if multi { format!("{r},") } else { String::new() };
            sink.line(&format!("{prefix}{j},{:e},{v:e}", j as f64 / n as f64))?;
        }
    }
    Ok(())
}

/// One replication block of an input file.
#[derive(Default)]
struct Block {
    rep: usize,
    t: Vec<f64>,
    y: Option<Vec<f64>>,
    noise: Option<Vec<f64>>,
    xi: Vec<Option<f64>>,
    f: Vec<Option<f64>>,
    g: Vec<Option<f64>>,
}

fn read_blocks(path: &Path, model: Model) -> CliResult<Vec<Block>> {
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path).map_err(|e| {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(path, io),
            other => bad(format!("{other:?}")),
        }
    })?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let t_col = col("t").ok_or_else(|| bad("missing column 't'".into()))?;
    let y_col = col("Y");
    let noise_col = match model {
        Model::Rosenblatt => col("Z"),
        _ => col("value"),
    };
    if y_col.is_none() && noise_col.is_none() {
        let noise = if model == Model::Rosenblatt { "Z" } else { "value" };
        return Err(bad(format!("need an observation column 'Y' or a noise column '{noise}'")));
    }
    let (xi_col, f_col, g_col) = (col("xi"), col("f"), col("g"));
    if model == Model::Rosenblatt && (xi_col.is_none() || f_col.is_none() || g_col.is_none()) {
        return Err(bad("the rosenblatt estimator needs columns xi, f and g".into()));
    }
    let rep_col = col("rep");

    let mut blocks: Vec<Block> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |c: usize| -> CliResult<Option<f64>> {
            let s = rec.get(c).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|_| bad(format!("record {}: cannot parse '{s}'", line + 1)))
        };
        let need = |c: usize| -> CliResult<f64> {
            field(c)?.ok_or_else(|| bad(format!("record {}: empty field in column {}", line + 1, &headers[c])))
        };
        let rep = match rep_col {
            Some(c) => {
                rec.get(c).unwrap_or("").parse::<usize>().map_err(|_| bad(format!("record {}: bad rep", line + 1)))?
            }
            None => 0,
        };
        if blocks.last().map_or(true, |b| b.rep != rep) {
            blocks.push(Block { rep, y: y_col.map(|_| vec![]), noise: noise_col.map(|_| vec![]), ..Block::default() });
        }
        let b = blocks.last_mut().expect("block pushed");
        b.t.push(need(t_col)?);
        if let (Some(c), Some(v)) = (y_col, b.y.as_mut()) {
            v.push(need(c)?);
        }
        if let (Some(c), Some(v)) = (noise_col, b.noise.as_mut()) {
            v.push(need(c)?);
        }
        if let (Some(xc), Some(fc), Some(gc)) = (xi_col, f_col, g_col) {
            b.xi.push(field(xc)?);
            b.f.push(field(fc)?);
            b.g.push(field(gc)?);
        }
    }
    if blocks.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(blocks)
}

#[derive(Serialize)]
struct EstimateRow {
    model: Model,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "N")]
    n: usize,
    alpha: f64,
    #[serde(rename = "M")]
    m: usize,
    rep: usize,
    a: Option<f64>,
    a_hat: f64,
    envelope_bound: Option<f64>,
}

pub fn estimate(args: EstimateArgs) -> CliResult<()> {
    let model = Model::from(args.model);
    let h = require_hurst(model, args.hurst)?;
    if args.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let blocks = read_blocks(&args.input, model)?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for b in &blocks {
        let steps = b.t.len() - 1;
        if steps == 0 {
            return Err(CliError::Usage(format!("replication {}: need at least two rows", b.rep)));
        }
        let grid = GridSpec::from_steps(args.n, steps)?;
        let dt = grid.dt();
        if let Some(j) = (0..=steps).find(|&j| (b.t[j] - j as f64 * dt).abs() > 1e-9 * (1.0 + j as f64 * dt)) {
            return Err(CliError::Usage(format!(
                "replication {}: t[{j}] = {} is not {j}/N for --n {}",
                b.rep, b.t[j], args.n
            )));
        }
        warnings.extend(grid.warnings((model == Model::Rosenblatt).then_some(h)));
        let path = match model {
            Model::Rosenblatt => Some(walk_from_block(b, steps)?),
            _ => None,
        };
        let series: Vec<(Option<f64>, ObservationSeries)> = match (&b.y, &b.noise) {
            (Some(y), _) => {
                if args.drift.len() > 1 {
                    return Err(CliError::Usage("with an observation column 'Y' give at most one --drift".into()));
                }
                let a = args.drift.first().copied();
                vec![(a, ObservationSeries::new(y.clone(), grid, a)?)]
            }
            (None, Some(noise)) => {
                if args.drift.is_empty() {
                    return Err(CliError::Usage("a noise dump needs at least one --drift to form observations".into()));
                }
                args.drift
                    .iter()
                    .map(|&a| Ok((Some(a), ObservationSeries::synthesize(grid, a, noise)?)))
                    .collect::<CliResult<_>>()?
            }
            (None, None) => unreachable!("checked when reading"),
        };
        for (a, obs) in series {
            let rep = match (model, &path) {
                (Model::Wiener, _) => wiener_mle(&obs),
                (Model::Fbm, _) => fbm_mle(&obs, h)?,
                (Model::Rosenblatt, Some(p)) => rosenblatt_pseudo_mle(&obs, p)?,
                (Model::Rosenblatt, None) => unreachable!("walk read above"),
            };
            rows.push(EstimateRow {
                model,
                h,
                n: args.n,
                alpha: grid.alpha(),
                m: steps,
                rep: b.rep,
                a,
                a_hat: rep.a_hat,
                envelope_bound: rep.envelope_bound,
            });
        }
    }
    let warnings = dedup(warnings);

    let mut manifest = Manifest::new("estimate", &args.common);
    manifest.model = Some(model.to_string());
    manifest.input = Some(args.input.display().to_string());
    if model != Model::Wiener {
        manifest.hurst = vec![h];
    }
    manifest.drift = args.drift.clone();
    manifest.n = vec![args.n];

    let mut sink = Sink::open(&args.common.out)?;
    match args.common.format {
        Format::Csv => {
            write_comments(&mut sink, &manifest, &warnings)?;
            sink.line("model,H,N,alpha,M,rep,a,a_hat,envelope")?;
            for r in &rows {
                sink.line(&format!(
                    "{},{},{},{},{},{},{},{},{}",
                    r.model,
                    r.h,
                    r.n,
                    r.alpha,
                    r.m,
                    r.rep,
                    r.a.map(|v| v.to_string()).unwrap_or_default(),
                    r.a_hat,
                    r.envelope_bound.map(|v| v.to_string()).unwrap_or_default()
                ))?;
            }
        }
        Format::Json => sink.json(&json!({ "manifest": manifest, "warnings": warnings, "estimates": rows }))?,
    }
    sink.finish()
}

fn walk_from_block(b: &Block, steps: usize) -> CliResult<RosenblattPath> {
    let missing = |what: &str, j: usize| CliError::Usage(format!("replication {}: {what} missing at step {j}", b.rep));
    let mut xi = vec![0.0];
    for j in 1..=steps {
        xi.push(b.xi[j].ok_or_else(|| missing("xi", j))?);
    }
    let mut f = Vec::with_capacity(steps);
    let mut g = Vec::with_capacity(steps);
    for j in 0..steps {
        f.push(b.f[j].ok_or_else(|| missing("f", j))?);
        g.push(b.g[j].ok_or_else(|| missing("g", j))?);
    }
    let z = b.noise.clone().unwrap_or_else(|| vec![0.0; steps + 1]);
    Ok(RosenblattPath { xi, f, g, z })
}

pub fn reproduce_tables(args: SweepArgs) -> CliResult<()> {
    let model = Model::from(args.model);
    let seed = require_seed(args.seed)?;
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let hs = match model {
        Model::Wiener => vec![0.5],
        _ if args.hurst.is_empty() => vec![0.55, 0.75, 0.9],
        _ => args.hurst.clone(),
    };
    for &h in &hs {
        check_hurst(model, h)?;
    }
    let drifts = if args.drift.is_empty() { vec![2.0, 20.0] } else { args.drift.clone() };
    if let Some(a) = drifts.iter().find(|a| !a.is_finite()) {
        return Err(CliError::Usage(format!("invalid value '{a}' for --drift")));
    }
    let ns = match (args.n.is_empty(), args.full) {
        (true, false) => vec![100],
        (true, true) => vec![100, 200],
        (false, _) => args.n.clone(),
    };
    let quad = args.common.quadrature();
    quad.validate().map_err(|e| CliError::Usage(format!("invalid quadrature flags: {e}")))?;

    let mut cells = Vec::new();
    for &n in &ns {
        for &alpha in &args.alpha {
            let grid = grid_arg(n, alpha)?;
            if model == Model::Rosenblatt {
                check_steps(&grid, args.full)?;
            }
            for &h in &hs {
                for &a in &drifts {
                    cells.push(ExperimentConfig {
                        model,
                        h,
                        a,
                        n,
                        alpha,
                        replications: args.reps,
                        seed,
                        quadrature: quad,
                    });
                }
            }
        }
    }

    let mut manifest = Manifest::new("reproduce-tables", &args.common);
    manifest.model = Some(model.to_string());
    if model != Model::Wiener {
        manifest.hurst = hs.clone();
    }
    manifest.drift = drifts;
    manifest.n = ns;
    manifest.alpha = args.alpha.clone();
    manifest.reps = Some(args.reps);
    manifest.seed = Some(seed);
    manifest.full = args.full;

    let summaries = run_sweep(&cells, &run_options(&args.common))?;
    emit_table(&summaries, &manifest, args.common.timings, &args.common.out)
}

/// CSV header of every summary table.
pub const TABLE_HEADER: &str = "model,H,a,N,alpha,reps,seed,mean,std,mse,runtime_s";

#[derive(Serialize)]
struct CellJson<'a> {
    model: Model,
    #[serde(rename = "H")]
    h: f64,
    a: f64,
    #[serde(rename = "N")]
    n: usize,
    alpha: f64,
    #[serde(rename = "M")]
    m: usize,
    reps: usize,
    seed: u64,
    mean: f64,
    std: f64,
    mse: f64,
    runtime_s: Option<f64>,
    a_hat: &'a [f64],
    quadrature: &'a longmem_core::QuadratureSpec,
    warnings: &'a [String],
    checks: &'a Option<PathChecks>,
}

/// Writes the summary table for a sweep: CSV with the manifest as `#`
/// comments, or JSON with per-replication estimates.
pub fn emit_table(summaries: &[McSummary], manifest: &Manifest, timings: bool, out: &Option<PathBuf>) -> CliResult<()> {
    let warnings = dedup(
        summaries
            .iter()
            .flat_map(|s| s.warnings.iter().map(move |w| format!("N={} alpha={}: {w}", s.config.n, s.config.alpha)))
            .collect(),
    );
    let mut sink = Sink::open(out)?;
    match manifest.format {
        Format::Csv => {
            write_comments(&mut sink, manifest, &warnings)?;
            for s in summaries {
                if let Some(c) = &s.checks {
                    sink.line(&format!(
                        "# checks H={} a={} N={} alpha={}: reconstruction {}/{r} failed, identity {}/{r} failed, envelope {}/{r} violated",
                        s.config.h,
                        s.config.a,
                        s.config.n,
                        s.config.alpha,
                        c.reconstruction_failures,
                        c.identity_failures,
                        c.envelope_violations,
                        r = c.replications
                    ))?;
                }
            }
            sink.line(TABLE_HEADER)?;
            for s in summaries {
                let c = &s.config;
                let runtime = if timings { g6(s.runtime_seconds) } else { String::new() };
                sink.line(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    c.model,
                    g6(c.h),
                    g6(c.a),
                    c.n,
                    g6(c.alpha),
                    c.replications,
                    c.seed,
                    g6(s.mean),
                    g6(s.std),
                    g6(s.mse),
                    runtime
                ))?;
            }
        }
        Format::Json => {
            let cells = summaries
                .iter()
                .map(|s| {
                    let c = &s.config;
                    let m = GridSpec::new(c.n, c.alpha).map(|g| g.m()).unwrap_or(0);
                    CellJson {
                        model: c.model,
                        h: c.h,
                        a: c.a,
                        n: c.n,
                        alpha: c.alpha,
                        m,
                        reps: c.replications,
                        seed: c.seed,
                        mean: s.mean,
                        std: s.std,
                        mse: s.mse,
                        runtime_s: timings.then_some(s.runtime_seconds),
                        a_hat: &s.per_replication,
                        quadrature: &c.quadrature,
                        warnings: &s.warnings,
                        checks: &s.checks,
                    }
                })
                .collect::<Vec<_>>();
            sink.json(&json!({ "manifest": manifest, "warnings": warnings, "cells": cells }))?;
        }
    }
    sink.finish()
}

#[derive(Serialize)]
struct DiagnosticRow {
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "N")]
    n: usize,
    alpha: f64,
    #[serde(rename = "M")]
    m: usize,
    reps: usize,
    gamma: f64,
    martingale_pass_fraction: Option<f64>,
    median_t: f64,
    median_u: f64,
    max_b_sum_ratio: f64,
    t: Vec<f64>,
    u: Vec<f64>,
    b_sum: Vec<f64>,
    b_bound: Vec<f64>,
    martingale: MartingaleReport,
}

pub fn diagnostics(args: DiagnosticsArgs) -> CliResult<()> {
    let seed = require_seed(args.seed)?;
    check_hurst(Model::Rosenblatt, args.hurst)?;
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let ns = if args.n.is_empty() { vec![20, 40] } else { args.n.clone() };
    let mut warnings = Vec::new();
    let gamma = match args.gamma {
        Some(g) => {
            if !(g > 0.0 && g < 1.0) {
                return Err(CliError::Usage(format!("invalid value '{g}' for --gamma: must lie in (0, 1)")));
            }
            match gamma_interval(args.hurst, args.alpha) {
                Some((lo, hi)) if g > lo && g < hi => {}
                _ => warnings.push(format!("gamma = {g} violates alpha(2 - gamma) - 2 + 2H gamma > 0")),
            }
            g
        }
        None => default_gamma(args.hurst, args.alpha).ok_or_else(|| {
            CliError::Usage(format!("no admissible gamma for H = {}, alpha = {}; pass --gamma", args.hurst, args.alpha))
        })?,
    };
    let quad = args.common.quadrature();
    quad.validate().map_err(|e| CliError::Usage(format!("invalid quadrature flags: {e}")))?;
    let grids = ns.iter().map(|&n| grid_arg(n, args.alpha)).collect::<CliResult<Vec<_>>>()?;
    for g in &grids {
        check_steps(g, args.full)?;
        warnings.extend(g.warnings(Some(args.hurst)));
    }
    let opts = run_options(&args.common);

    let mut rows = Vec::new();
    for grid in &grids {
        let table = rosenblatt_table(args.hurst, grid, &quad, &opts)?;
        let paths = simulate_rosenblatt_paths(&table, args.reps, seed, &opts)?;
        let martingale = martingale_diagnostic(&paths);
        let s = tn_growth_diagnostic(&paths, grid.n(), gamma)?;
        let ratio = s.b_sum.iter().zip(&s.b_bound).map(|(x, y)| x / y).fold(0.0, f64::max);
        rows.push(DiagnosticRow {
            h: args.hurst,
            n: grid.n(),
            alpha: args.alpha,
            m: grid.m(),
            reps: args.reps,
            gamma,
            martingale_pass_fraction: martingale.fraction,
            median_t: median(&s.t),
            median_u: median(&s.u),
            max_b_sum_ratio: ratio,
            t: s.t,
            u: s.u,
            b_sum: s.b_sum,
            b_bound: s.b_bound,
            martingale,
        });
    }
    let increasing = rows.windows(2).all(|w| w[1].median_t > w[0].median_t && w[1].median_u > w[0].median_u);
    let b_bounded = rows.iter().all(|r| r.max_b_sum_ratio <= 1.0 + 1e-12);
    let warnings = dedup(warnings);

    let mut manifest = Manifest::new("diagnostics", &args.common);
    manifest.hurst = vec![args.hurst];
    manifest.n = ns;
    manifest.alpha = vec![args.alpha];
    manifest.reps = Some(args.reps);
    manifest.seed = Some(seed);
    manifest.gamma = Some(gamma);
    manifest.full = args.full;

    let mut sink = Sink::open(&args.common.out)?;
    match args.common.format {
        Format::Csv => {
            write_comments(&mut sink, &manifest, &warnings)?;
            sink.line(&format!("# medians of T_N and U_N increasing in N: {increasing}"))?;
            sink.line(&format!("# partial sums of B bounded by the integral bound: {b_bounded}"))?;
            sink.line("H,N,alpha,M,reps,seed,gamma,martingale_pass_fraction,median_T,median_U,max_B_sum_ratio")?;
            for r in &rows {
                sink.line(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    g6(r.h),
                    r.n,
                    g6(r.alpha),
                    r.m,
                    r.reps,
                    seed,
                    g6(r.gamma),
                    r.martingale_pass_fraction.map(g6).unwrap_or_default(),
                    g6(r.median_t),
                    g6(r.median_u),
                    g6(r.max_b_sum_ratio)
                ))?;
            }
        }
        Format::Json => sink.json(&json!({
            "manifest": manifest,
            "warnings": warnings,
            "gamma": gamma,
            "increasing": increasing,
            "b_bounded": b_bounded,
            "rows": rows,
        }))?,
    }
    sink.finish()
}

/// Allowed growth of `rowSumMax / M^(2H+1)` over its value at the smallest `M`.
pub const GERSHGORIN_SLACK: f64 = 0.05;

#[derive(Serialize)]
struct GershgorinJson {
    #[serde(rename = "H")]
    h: f64,
    constant: f64,
    bounded: bool,
    rows: Vec<GershgorinRow>,
}

pub fn scaling_study(args: ScalingArgs) -> CliResult<()> {
    for &h in &args.hurst {
        check_hurst(Model::Fbm, h)?;
    }
    for &a in &args.alpha {
        if !(a > 0.0) {
            return Err(CliError::Usage(format!("invalid value '{a}' for --alpha: must be positive")));
        }
    }
    let mut studies: Vec<ScalingStudy> = Vec::new();
    let mut gersh = Vec::new();
    let mut warnings = Vec::new();
    for &h in &args.hurst {
        studies.push(mse_scaling_study(h, &args.alpha, &args.n)?);
        let (rows, constant, bounded) = gershgorin_sweep(h, &args.gershgorin_m, GERSHGORIN_SLACK);
        gersh.push(GershgorinJson { h, constant, bounded, rows });
    }
    for &a in &args.alpha {
        if a <= 1.0 {
            warnings.push(format!("alpha = {a} <= 1: the estimator MSE does not decay"));
        }
    }

    let mut manifest = Manifest::new("scaling-study", &args.common);
    manifest.hurst = args.hurst.clone();
    manifest.n = args.n.clone();
    manifest.alpha = args.alpha.clone();
    manifest.seed = args.seed;
    manifest.extra = args.gershgorin_m.iter().map(|m| ("gershgorin-m".to_string(), m.to_string())).collect();

    let mut sink = Sink::open(&args.common.out)?;
    match args.common.format {
        Format::Csv => {
            write_comments(&mut sink, &manifest, &warnings)?;
            for s in &studies {
                for f in &s.fits {
                    sink.line(&format!(
                        "# fit H={} alpha={}: slope={} expected={} decreasing={}",
                        s.h,
                        f.alpha,
                        g6(f.slope),
                        g6(f.expected),
                        f.decreasing
                    ))?;
                }
            }
            for g in &gersh {
                for r in &g.rows {
                    sink.line(&format!(
                        "# gershgorin H={} M={}: row_sum_max={} ratio={}",
                        g.h,
                        r.m,
                        g6(r.row_sum_max),
                        g6(r.ratio)
                    ))?;
                }
                sink.line(&format!("# gershgorin H={}: C={} bounded={}", g.h, g6(g.constant), g.bounded))?;
            }
            sink.line("H,N,alpha,M,mse,bound")?;
            for s in &studies {
                for r in &s.rows {
                    sink.line(&format!("{},{},{},{},{},{}", g6(s.h), r.n, g6(r.alpha), r.m, g6(r.mse), g6(r.bound)))?;
                }
            }
        }
        Format::Json => sink.json(&json!({
            "manifest": manifest,
            "warnings": warnings,
            "studies": studies,
            "gershgorin": gersh,
        }))?,
    }
    sink.finish()
}
