//! Knowledge-based inversion: from a measured transfer function to peak
//! estimates, axial fundamentals and room dimensions.

mod axial;
mod peaks;

use serde::{Deserialize, Serialize};

pub use axial::{
    axis_length, find_axial_fundamentals, infer_dimensions, matched_axis_errors, AxialSearch, AxialSearchOptions,
    AxisDimension, AxisHypothesis, DimensionEstimate, HarmonicMatch, HypothesisFlag,
};
pub use peaks::{
    analyze_peaks, detect_peaks, gaussian_interpolate, half_power_bandwidth, restore_eigenfrequency, Peak,
    PeakEstimate, PeakOptions, PeakStatus,
};

use crate::error::Result;
use crate::room::AirProperties;
use crate::spectrum::TransferFunction;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceOptions {
    pub peaks: PeakOptions,
    pub axial: AxialSearchOptions,
}

/// Everything the pipeline saw and decided, for the JSON diagnostics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub peaks: Vec<PeakEstimate>,
    pub search: AxialSearch,
    pub estimate: DimensionEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_m: Option<[f64; 3]>,
    /// Per-axis |error| in metres after optimal axis matching.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis_errors_m: Option<[Option<f64>; 3]>,
}

impl InferenceReport {
    pub fn max_error(&self) -> Option<f64> {
        let errs = self.axis_errors_m?;
        errs.iter().try_fold(0.0f64, |acc, e| e.map(|v| acc.max(v)))
    }
}

/// Runs peak analysis, the axial search and dimension inference on `tf`.
pub fn infer_room_dimensions(
    tf: &TransferFunction,
    air: &AirProperties,
    opts: &InferenceOptions,
    manual_peaks: Option<&[f64]>,
    truth: Option<[f64; 3]>,
) -> Result<InferenceReport> {
    let peaks = analyze_peaks(tf, &opts.peaks);
    let search = find_axial_fundamentals(&peaks, tf.grid().step(), &opts.axial, manual_peaks)?;
    let estimate = infer_dimensions(&search, air)?;
    let axis_errors_m = truth.map(|t| matched_axis_errors(&estimate.sorted_m, t));
    Ok(InferenceReport {
        peaks,
        search,
        estimate,
        truth_m: truth,
        axis_errors_m,
    })
}
