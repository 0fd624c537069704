//! Isolated single-mode resonator.

use std::f64::consts::{LN_10, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectrum::{FrequencyGrid, TfMetadata, TransferFunction};

/// Damping constant δ₀ (1/s) of a mode with reverberation time `t_r` (s):
/// δ₀ = 3 ln 10 / T_R.
pub fn damping_from_reverberation(t_r: f64) -> Result<f64> {
    if !(t_r > 0.0 && t_r.is_finite()) {
        return Err(Error::domain(format!("reverberation time must be positive, got {t_r}")));
    }
    Ok(3.0 * LN_10 / t_r)
}

/// `H(ω) = 1 / (ω₀² − ω² + 2jδ₀ω)` sampled on `grid`.
pub fn synth_single_mode(f0: f64, delta0: f64, grid: &FrequencyGrid) -> Result<TransferFunction> {
    if !(f0 > 0.0) || !(delta0 >= 0.0) {
        return Err(Error::domain(format!(
            "need f0 > 0 and delta0 >= 0, got f0 = {f0}, delta0 = {delta0}"
        )));
    }
    let w0 = 2.0 * PI * f0;
    let values = grid
        .iter()
        .map(|f| {
            let w = 2.0 * PI * f;
            Complex64::new(w0 * w0 - w * w, 2.0 * delta0 * w).inv()
        })
        .collect();
    TransferFunction::new(*grid, values, TfMetadata::default())
}
