//! Peak picking, Gaussian refinement and half-power bandwidths.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::TransferFunction;

/// Log-parabola fit through three equally spaced samples around a maximum.
/// Returns `(x_max, y_max)`.
pub fn gaussian_interpolate(x: [f64; 3], y: [f64; 3]) -> Result<(f64, f64)> {
    if y.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::domain(format!("magnitudes must be positive, got {y:?}")));
    }
    let dx = x[1] - x[0];
    if !(dx > 0.0) || ((x[2] - x[1]) - dx).abs() > 1e-9 * dx.abs().max(1.0) {
        return Err(Error::domain(format!(
            "abscissae must be equally spaced and ascending, got {x:?}"
        )));
    }
    let (l1, l2, l3) = (y[0].ln(), y[1].ln(), y[2].ln());
    let curv = l1 - 2.0 * l2 + l3;
    if curv == 0.0 || !curv.is_finite() {
        return Err(Error::Numerical {
            message: "zero log-curvature in Gaussian peak fit".into(),
            residual: 0.0,
        });
    }
    let d = 0.5 * (l1 - l3) / curv;
    Ok((x[1] + d * dx, (l2 - 0.25 * (l1 - l3) * d).exp()))
}

/// Undamped eigenfrequency from a damped peak and its half-power bandwidth:
/// `f₀ = sqrt(f_M² + Δf²/2)`.
pub fn restore_eigenfrequency(f_m: f64, delta_f: f64) -> Result<f64> {
    if !(f_m > 0.0) || !(delta_f >= 0.0) {
        return Err(Error::domain(format!(
            "need f_M > 0 and delta_f >= 0, got f_M = {f_m}, delta_f = {delta_f}"
        )));
    }
    Ok((f_m * f_m + 0.5 * delta_f * delta_f).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakOptions {
    pub min_prominence_db: f64,
    /// Defaults to two grid steps.
    pub min_separation_hz: Option<f64>,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            min_prominence_db: 3.0,
            min_separation_hz: None,
        }
    }
}

/// A local maximum refined by Gaussian interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Grid bin of the sampled maximum.
    pub bin: usize,
    pub f_m: f64,
    pub amplitude: f64,
    pub prominence_db: f64,
}

fn db(v: f64) -> f64 {
    20.0 * v.max(1e-300).log10()
}

/// Local maxima with at least `min_prominence_db` of topographic prominence,
/// thinned so that no two peaks lie closer than the separation (the higher
/// one wins). Ascending in frequency.
pub fn detect_peaks(tf: &TransferFunction, opts: &PeakOptions) -> Vec<Peak> {
    let grid = tf.grid();
    let mag = tf.magnitude();
    let level: Vec<f64> = mag.iter().map(|&m| db(m)).collect();
    let n = mag.len();
    if n < 3 {
        return Vec::new();
    }
    let mut cands = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if mag[i] > mag[i - 1] {
            // walk across a plateau
            let mut j = i;
            while j + 1 < n && mag[j + 1] == mag[i] {
                j += 1;
            }
            if j + 1 < n && mag[j + 1] < mag[i] {
                cands.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    let prominence = |p: usize| {
        let mut left_min = level[p];
        let mut k = p;
        while k > 0 {
            k -= 1;
            if level[k] > level[p] {
                break;
            }
            left_min = left_min.min(level[k]);
        }
        let mut right_min = level[p];
        let mut k = p;
        while k + 1 < n {
            k += 1;
            if level[k] > level[p] {
                break;
            }
            right_min = right_min.min(level[k]);
        }
        level[p] - left_min.max(right_min)
    };
    let mut kept: Vec<(usize, f64)> = cands
        .into_iter()
        .map(|p| (p, prominence(p)))
        .filter(|&(_, pr)| pr >= opts.min_prominence_db)
        .collect();
    let sep = opts.min_separation_hz.unwrap_or(2.0 * grid.step());
    let mut by_height = kept.clone();
    by_height.sort_by(|a, b| mag[b.0].total_cmp(&mag[a.0]).then(a.0.cmp(&b.0)));
    let mut accepted: Vec<usize> = Vec::new();
    for (p, _) in by_height {
        if accepted.iter().all(|&q| (grid.freq(q) - grid.freq(p)).abs() >= sep) {
            accepted.push(p);
        }
    }
    kept.retain(|(p, _)| accepted.contains(p));
    kept.into_iter()
        .map(|(p, pr)| {
            let x = [grid.freq(p - 1), grid.freq(p), grid.freq(p + 1)];
            let y = [mag[p - 1], mag[p], mag[p + 1]];
            let (f_m, amplitude) = gaussian_interpolate(x, y).unwrap_or((x[1], y[1]));
            Peak {
                bin: p,
                f_m,
                amplitude,
                prominence_db: pr,
            }
        })
        .collect()
}

/// Why a peak could not be measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PeakStatus {
    Resolved,
    /// A −3 dB crossing was not reached before a neighbouring peak or the
    /// edge of the spectrum.
    Unresolved,
}

/// Half-power bandwidth of `peaks[idx]`, or `None` if a crossing of
/// `amplitude/√2` is not found before the adjacent detected peak or the
/// grid edge. Crossings are interpolated linearly in magnitude.
pub fn half_power_bandwidth(tf: &TransferFunction, peaks: &[Peak], idx: usize) -> Option<f64> {
    let grid = tf.grid();
    let mag = tf.magnitude();
    let pk = peaks.get(idx)?;
    let target = pk.amplitude / SQRT_2;
    let left_stop = if idx > 0 { peaks[idx - 1].bin } else { 0 };
    let right_stop = peaks.get(idx + 1).map_or(mag.len() - 1, |p| p.bin);
    let cross = |a: usize, b: usize| {
        // interpolate between bins a (above target) and b (below)
        let t = (mag[a] - target) / (mag[a] - mag[b]);
        grid.freq(a) + t * (grid.freq(b) - grid.freq(a))
    };
    let mut k = pk.bin;
    let left = loop {
        if k <= left_stop {
            return None;
        }
        if mag[k - 1] < target {
            break cross(k, k - 1);
        }
        k -= 1;
    };
    let mut k = pk.bin;
    let right = loop {
        if k >= right_stop {
            return None;
        }
        if mag[k + 1] < target {
            break cross(k, k + 1);
        }
        k += 1;
    };
    let df = right - left;
    (df > 0.0).then_some(df)
}

/// A detected peak with its bandwidth and restored eigenfrequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakEstimate {
    pub f_m: f64,
    pub amplitude: f64,
    pub delta_f: Option<f64>,
    /// f_M / delta_f
    pub quality: Option<f64>,
    /// Restored eigenfrequency.
    pub f0: Option<f64>,
    pub status: PeakStatus,
    pub bin: usize,
    pub prominence_db: f64,
}

impl PeakEstimate {
    pub fn is_resolved(&self) -> bool {
        self.status == PeakStatus::Resolved
    }

    /// Restored eigenfrequency if resolved, else the damped peak.
    pub fn best_frequency(&self) -> f64 {
        self.f0.unwrap_or(self.f_m)
    }
}

/// Detection, bandwidth and restoration for every peak.
pub fn analyze_peaks(tf: &TransferFunction, opts: &PeakOptions) -> Vec<PeakEstimate> {
    let peaks = detect_peaks(tf, opts);
    (0..peaks.len())
        .map(|i| {
            let p = peaks[i];
            let delta_f = half_power_bandwidth(tf, &peaks, i);
            let f0 = delta_f.and_then(|d| restore_eigenfrequency(p.f_m, d).ok());
            PeakEstimate {
                f_m: p.f_m,
                amplitude: p.amplitude,
                delta_f,
                quality: delta_f.map(|d| p.f_m / d),
                f0,
                status: if delta_f.is_some() {
                    PeakStatus::Resolved
                } else {
                    PeakStatus::Unresolved
                },
                bin: p.bin,
                prominence_db: p.prominence_db,
            }
        })
        .collect()
}
