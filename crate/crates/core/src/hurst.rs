use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use crate::error::{Error, Result};

/// Which process the Hurst index parametrizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fbm,
    Rosenblatt,
}

/// Validated Hurst index with its derived constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HurstParam {
    h: f64,
    mode: Mode,
    h_prime: f64,
    c_h: Option<f64>,
    c_h_prime: Option<f64>,
    d_h: Option<f64>,
}

/// `c_H = sqrt(H(2H-1) / B(2-2H, H-1/2))`, defined for `1/2 < H < 1`.
pub fn kernel_constant(h: f64) -> Result<f64> {
    if !(h > 0.5 && h < 1.0) {
        return Err(Error::Domain(format!("kernel constant needs 1/2 < H < 1, got {h}")));
    }
    Ok((h * (2.0 * h - 1.0) / beta(2.0 - 2.0 * h, h - 0.5)).sqrt())
}

/// Builds the constants for `h` in the given mode.
pub fn hurst_constants(h: f64, mode: Mode) -> Result<HurstParam> {
    let ok = match mode {
        Mode::Fbm => h > 0.0 && h < 1.0,
        Mode::Rosenblatt => h > 0.5 && h < 1.0,
    };
    if !ok || !h.is_finite() {
        let range = match mode {
            Mode::Fbm => "(0, 1)",
            Mode::Rosenblatt => "(1/2, 1)",
        };
        return Err(Error::Domain(format!("Hurst index {h} outside {range}")));
    }
    let h_prime = 0.5 * (h + 1.0);
    let long = h > 0.5;
    let c_h = if long { Some(kernel_constant(h)?) } else { None };
    let c_h_prime = if long { Some(kernel_constant(h_prime)?) } else { None };
    let d_h = if long { Some((h / (2.0 * (2.0 * h - 1.0))).powf(-0.5) / (h + 1.0)) } else { None };
    Ok(HurstParam { h, mode, h_prime, c_h, c_h_prime, d_h })
}

impl HurstParam {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// `(H + 1) / 2`.
    pub fn h_prime(&self) -> f64 {
        self.h_prime
    }

    pub fn c_h(&self) -> Result<f64> {
        self.c_h.ok_or_else(|| Error::Domain(format!("c_H is undefined for H = {} <= 1/2", self.h)))
    }

    /// Kernel constant evaluated at `H'`.
    pub fn c_h_prime(&self) -> Result<f64> {
        self.c_h_prime.ok_or_else(|| Error::Domain(format!("c_H' is undefined for H = {} <= 1/2", self.h)))
    }

    /// Normalizing constant `d(H)` of the second-order kernel.
    pub fn d_h(&self) -> Result<f64> {
        self.d_h.ok_or_else(|| Error::Domain(format!("d(H) is undefined for H = {} <= 1/2", self.h)))
    }
}
