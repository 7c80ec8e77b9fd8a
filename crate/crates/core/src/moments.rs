//! Deterministic second moments of the walk (Wick pairings of the quadratic forms).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{dot, near_range, KernelTable};

/// `E(f_j^2)` and `E(g_j^2)` for one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMoments {
    pub ef2: f64,
    pub eg2: f64,
}

/// Second moments of `f_j` and `g_j` for `j = 0..M`, from the quadratic-form
/// weights: `E f_j^2 = 2 N^2 sum_{i != k} Delta_j(i,k)^2` and
/// `E g_j^2 = 4 N^2 sum_i G_j(i)^2`. At `j = 1` the sum is empty.
pub fn theoretical_moments(table: &KernelTable) -> Vec<StepMoments> {
    let m = table.steps();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..m).into_par_iter().map(|j| step_moments(table, j)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..m).map(|j| step_moments(table, j)).collect()
    }
}

fn step_moments(table: &KernelTable, j: usize) -> StepMoments {
    let nh2 = table.n_pow_h().powi(2);
    if j == 0 {
        return StepMoments { ef2: 0.0, eg2: nh2 };
    }
    let q0 = table.nodes().len();
    let omega = table.node_weights();
    let st = table.step(j);
    let mut far = Vec::new();
    let nf = table.far_psi(j, &mut far);
    // Gram matrix of the far factor samples and the diagonal panel integrals.
    let mut gram = vec![0.0; q0 * q0];
    let mut diag_sq = 0.0;
    for i in 0..nf {
        let row = &far[i * q0..(i + 1) * q0];
        for a in 0..q0 {
            for b in 0..q0 {
                gram[a * q0 + b] += row[a] * row[b];
            }
        }
        let dg: f64 = row.iter().zip(omega).map(|(v, w)| w * v * v).sum();
        diag_sq += dg * dg;
    }
    let quad_form = |v: &[f64]| -> f64 {
        let mut acc = 0.0;
        for a in 0..q0 {
            acc += v[a] * dot(&gram[a * q0..(a + 1) * q0], v);
        }
        acc
    };
    let mut far_far = -diag_sq;
    for a in 0..q0 {
        for b in 0..q0 {
            far_far += omega[a] * omega[b] * gram[a * q0 + b].powi(2);
        }
    }
    let (_, nn) = near_range(j);
    let far_near: f64 = (0..nn).map(|s| quad_form(st.prod(s))).sum();
    let mut near_near = 0.0;
    for s in 0..nn {
        for t in 0..nn {
            if s != t {
                near_near += st.pair(s, t).powi(2);
            }
        }
    }
    let d2 = table.d().powi(2);
    let ef2 = 2.0 * nh2 * d2 * (far_far + 2.0 * far_near + near_near);
    let chi_near: f64 = st.chi_near[..nn].iter().map(|v| v * v).sum();
    let eg2 = 4.0 * nh2 * d2 * (quad_form(st.chi_nodes) + chi_near);
    StepMoments { ef2, eg2 }
}

/// Integer-grid weight matrices `W_J(i, k)` (including `d(H)`) of the walk
/// value `Z_J = N^-H sum_{i != k} W_J(i, k) xi_i xi_k`, for each requested `J`.
pub fn walk_weights(table: &KernelTable, at: &[usize]) -> Result<Vec<DMatrix<f64>>> {
    let top = at.iter().copied().max().unwrap_or(0);
    if top > table.steps() {
        return Err(Error::Index(format!("walk index {top} beyond M = {}", table.steps())));
    }
    let q0 = table.nodes().len();
    let omega = table.node_weights();
    let d = table.d();
    let mut w = DMatrix::<f64>::zeros(top, top);
    let mut snaps: Vec<Option<DMatrix<f64>>> = vec![None; at.len()];
    let mut far = Vec::new();
    for l in 0..=top {
        for (slot, &jj) in snaps.iter_mut().zip(at) {
            if jj == l {
                *slot = Some(w.view((0, 0), (l, l)).into_owned());
            }
        }
        if l == top {
            break;
        }
        let st = table.step(l);
        if l > 0 {
            let nf = table.far_psi(l, &mut far);
            let row = |i: usize| &far[i * q0..(i + 1) * q0];
            for i in 0..nf {
                for k in 0..=i {
                    let v: f64 = d * row(i).iter().zip(row(k)).zip(omega).map(|((a, b), c)| a * b * c).sum::<f64>();
                    w[(i, k)] += v;
                    if k != i {
                        w[(k, i)] += v;
                    }
                }
            }
            let (lo, nn) = near_range(l);
            for s in 0..nn {
                let ks = lo - 1 + s;
                for i in 0..nf {
                    let v = d * dot(row(i), st.prod(s));
                    w[(i, ks)] += v;
                    w[(ks, i)] += v;
                }
                for t in 0..nn {
                    w[(ks, lo - 1 + t)] += d * st.pair(s, t);
                }
            }
            for i in 0..nf {
                let v = d * dot(row(i), st.chi_nodes);
                w[(i, l)] += v;
                w[(l, i)] += v;
            }
            for s in 0..nn {
                let v = d * st.chi_near[s];
                w[(lo - 1 + s, l)] += v;
                w[(l, lo - 1 + s)] += v;
            }
        }
        w[(l, l)] += d * st.chi_chi;
    }
    Ok(snaps.into_iter().map(|s| s.expect("snapshot taken")).collect())
}

/// `E(Z_{j1/N} Z_{j2/N})` for the walk, including the modified first value
/// `Z_{1/N} = xi_1 / N^H`.
pub fn walk_covariance(table: &KernelTable, j1: usize, j2: usize) -> Result<f64> {
    let m = table.steps();
    if j1 > m || j2 > m {
        return Err(Error::Index(format!("walk indices ({j1}, {j2}) beyond M = {m}")));
    }
    let nh2 = table.n_pow_h().powi(2);
    match (j1.min(j2), j1.max(j2)) {
        (0, _) => return Ok(0.0),
        (1, 1) => return Ok(nh2),
        (1, _) => return Ok(0.0),
        _ => {}
    }
    let mats = walk_weights(table, &[j1, j2])?;
    let (a, b) = (&mats[0], &mats[1]);
    let n = j1.min(j2);
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            if i != k {
                acc += a[(i, k)] * b[(i, k)];
            }
        }
    }
    Ok(2.0 * nh2 * acc)
}
