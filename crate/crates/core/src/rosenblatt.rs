//! The Rosenblatt random walk and its innovation decomposition
//! `Z[j+1] - Z[j] = f[j] + g[j] xi[j+1]`.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::standard_normals;
use crate::table::{near_range, KernelTable};

/// Smallest admissible `|g[j]|`.
pub const G_GUARD: f64 = 1e-300;

/// One path of the walk. `xi` has `M + 1` slots with `xi[0] = 0` unused, so
/// that `xi[j]` is the innovation of cell `j`; `f` and `g` have `M` entries,
/// `z` has `M + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RosenblattPath {
    pub xi: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub z: Vec<f64>,
}

impl RosenblattPath {
    pub fn steps(&self) -> usize {
        self.f.len()
    }

    /// Fails with a guard error at the first `|g[j]| < G_GUARD`.
    pub fn check_guard(&self) -> Result<()> {
        match self.g.iter().enumerate().find(|(_, g)| !(g.abs() >= G_GUARD)) {
            Some((step, &value)) => Err(Error::Guard { step, value }),
            None => Ok(()),
        }
    }

    /// Largest `|Z[j+1] - Z[j] - f[j] - g[j] xi[j+1]|` relative to the
    /// magnitude of the terms involved.
    pub fn reconstruction_residual(&self) -> f64 {
        (0..self.steps())
            .map(|j| {
                let inc = self.f[j] + self.g[j] * self.xi[j + 1];
                let r = (self.z[j + 1] - self.z[j]) - inc;
                let scale =
                    self.z[j + 1].abs() + self.z[j].abs() + self.f[j].abs() + (self.g[j] * self.xi[j + 1]).abs();
                if scale > 0.0 {
                    r.abs() / scale
                } else {
                    r.abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `M` standard normal innovations, stored as `xi[1..=M]` after a zero slot.
pub fn draw_innovations<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    let mut xi = Vec::with_capacity(m + 1);
    xi.push(0.0);
    xi.extend(standard_normals(rng, m));
    xi
}

/// One walk path with fresh innovations from `rng`.
pub fn simulate_rosenblatt_walk<R: Rng + ?Sized>(table: &KernelTable, rng: &mut R) -> Result<RosenblattPath> {
    let xi = draw_innovations(rng, table.steps());
    let path = walk_from_innovations(table, vec![xi])?.pop().expect("one path");
    path.check_guard()?;
    Ok(path)
}

/// Runs the walk for a batch of innovation sequences, sharing the factor row
/// of each step across the batch. The arithmetic for every replication is
/// independent of the batch composition. Guard checks are left to the caller.
pub fn walk_from_innovations(table: &KernelTable, innovations: Vec<Vec<f64>>) -> Result<Vec<RosenblattPath>> {
    let m = table.steps();
    let r = innovations.len();
    if let Some(bad) = innovations.iter().position(|x| x.len() != m + 1) {
        return Err(Error::Domain(format!(
            "innovation sequence {bad} has length {}, expected M + 1 = {}",
            innovations[bad].len(),
            m + 1
        )));
    }
    if r == 0 {
        return Ok(Vec::new());
    }
    let q0 = table.nodes().len();
    let omega = table.node_weights();
    let nh = table.n_pow_h();
    let d = table.d();

    // Step-major copies so that row i holds xi_i for every replication.
    let mut x = vec![0.0; (m + 1) * r];
    for (rr, xi) in innovations.iter().enumerate() {
        for i in 1..=m {
            x[i * r + rr] = xi[i];
        }
    }
    let x2: Vec<f64> = x.iter().map(|v| v * v).collect();

    let mut f = vec![0.0; m * r];
    let mut g = vec![0.0; m * r];
    g[..r].iter_mut().for_each(|v| *v = nh);
    let mut s = vec![0.0; q0 * r];
    let mut diag = vec![0.0; r];
    let mut far = Vec::new();

    for j in 1..m {
        let st = table.step(j);
        let nf = table.far_psi(j, &mut far);
        s.iter_mut().for_each(|v| *v = 0.0);
        diag.iter_mut().for_each(|v| *v = 0.0);
        for i in 1..=nf {
            let row = &far[(i - 1) * q0..i * q0];
            let xr = &x[i * r..(i + 1) * r];
            for (q, coef) in row.iter().enumerate() {
                for (sv, xv) in s[q * r..(q + 1) * r].iter_mut().zip(xr) {
                    *sv += coef * xv;
                }
            }
            let dg: f64 = row.iter().zip(omega).map(|(v, w)| w * v * v).sum();
            for (dv, xv) in diag.iter_mut().zip(&x2[i * r..(i + 1) * r]) {
                *dv += dg * xv;
            }
        }
        let (lo, nn) = near_range(j);
        for rr in 0..r {
            let mut quad = 0.0;
            let mut chi = 0.0;
            for q in 0..q0 {
                let sv = s[q * r + rr];
                quad += omega[q] * sv * sv;
                chi += st.chi_nodes[q] * sv;
            }
            let mut cross = 0.0;
            let mut near_pairs = 0.0;
            for a in 0..nn {
                let xa = x[(lo + a) * r + rr];
                let prod = st.prod(a);
                let mut pa = 0.0;
                for q in 0..q0 {
                    pa += prod[q] * s[q * r + rr];
                }
                cross += xa * pa;
                chi += st.chi_near[a] * xa;
                for b in 0..nn {
                    if b != a {
                        near_pairs += xa * x[(lo + b) * r + rr] * st.pair(a, b);
                    }
                }
            }
            let mut fj = nh * d * (quad - diag[rr] + 2.0 * cross + near_pairs);
            if j == 1 {
                fj -= x[r + rr] * nh;
            }
            f[j * r + rr] = fj;
            g[j * r + rr] = 2.0 * nh * d * chi;
        }
    }

    let paths = innovations
        .into_iter()
        .enumerate()
        .map(|(rr, xi)| {
            let fv: Vec<f64> = (0..m).map(|j| f[j * r + rr]).collect();
            let gv: Vec<f64> = (0..m).map(|j| g[j * r + rr]).collect();
            let mut z = vec![0.0; m + 1];
            for j in 0..m {
                z[j + 1] = z[j] + fv[j] + gv[j] * xi[j + 1];
            }
            RosenblattPath { xi, f: fv, g: gv, z }
        })
        .collect();
    Ok(paths)
}

/// Writes a path as CSV with columns `step,t,xi,f,g,Z`. Fields that do not
/// exist at a step (`xi` at 0, `f` and `g` at `M`) are left empty.
pub fn write_path_csv<W: Write>(path: &RosenblattPath, n: usize, mut out: W) -> std::io::Result<()> {
    writeln!(out, "step,t,xi,f,g,Z")?;
    let m = path.steps();
    for j in 0..=m {
        let t = j as f64 / n as f64;
        let xi = if j == 0 { String::new() } else { format!("{:e}", path.xi[j]) };
        let (f, g) = if j < m {
            (format!("{:e}", path.f[j]), format!("{:e}", path.g[j]))
        } else {
            (String::new(), String::new())
        };
        writeln!(out, "{j},{t:e},{xi},{f},{g},{:e}", path.z[j])?;
    }
    Ok(())
}
