//! Frequency grids and complex transfer functions.

use std::f64::consts::SQRT_2;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference pressure for SPL, Pa.
pub const P_REF: f64 = 20e-6;

/// Peak amplitude at 1 Hz after [`normalize_spl`], Pa (≈ 91 dB SPL rms).
pub const NORMALIZED_AMPLITUDE: f64 = 1.0;

/// Sound pressure level of a peak amplitude, dB re 20 µPa (rms convention).
pub fn spl_db(amplitude: f64) -> f64 {
    20.0 * (amplitude / SQRT_2 / P_REF).log10()
}

/// Uniform frequency grid `start + i·step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl FrequencyGrid {
    pub const DATASET_START: f64 = 1.0;
    pub const DATASET_STOP: f64 = 354.0;
    pub const DATASET_STEP: f64 = 0.5;
    pub const DATASET_LEN: usize = 707;

    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(start > 0.0 && start.is_finite()) {
            return Err(Error::domain(format!("grid start must be positive, got {start}")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::domain(format!("grid step must be positive, got {step}")));
        }
        if len == 0 {
            return Err(Error::domain("grid must have at least one point"));
        }
        Ok(Self { start, step, len })
    }

    /// 1–354 Hz at 0.5 Hz (707 points).
    pub fn dataset() -> Self {
        Self {
            start: Self::DATASET_START,
            step: Self::DATASET_STEP,
            len: Self::DATASET_LEN,
        }
    }

    /// Grid from `start` to `stop` inclusive.
    pub fn spanning(start: f64, stop: f64, step: f64) -> Result<Self> {
        if stop < start {
            return Err(Error::domain(format!("grid stop {stop} below start {start}")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Self::new(start, step, n)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stop(&self) -> f64 {
        self.freq(self.len - 1)
    }

    pub fn freq(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.freq(i))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().collect()
    }

    /// Index of the grid point equal to `f` (within 1e-6 of a step).
    pub fn index_of(&self, f: f64) -> Option<usize> {
        let x = (f - self.start) / self.step;
        let i = x.round();
        ((x - i).abs() < 1e-6 && i >= 0.0 && (i as usize) < self.len).then_some(i as usize)
    }

    /// Index of the grid point nearest to `f`, clamped to the grid.
    pub fn nearest_index(&self, f: f64) -> usize {
        let x = ((f - self.start) / self.step).round();
        x.clamp(0.0, (self.len - 1) as f64) as usize
    }

    /// True for the 1–354 Hz grid at 0.5 or 1.0 Hz resolution.
    pub fn is_dataset_grid(&self) -> bool {
        self.start == Self::DATASET_START && (self.step == 0.5 || self.step == 1.0) && self.stop() == Self::DATASET_STOP
    }

    /// Every `factor`-th point starting at the first.
    pub fn decimate(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::domain("decimation factor must be at least 1"));
        }
        Self::new(self.start, self.step * factor as f64, (self.len - 1) / factor + 1)
    }
}

/// Provenance of a transfer function.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TfMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_pos: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver_pos: Option<[f64; 3]>,
}

/// Complex pressure response on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
    #[serde(default)]
    pub meta: TfMetadata,
}

impl TransferFunction {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>, meta: TfMetadata) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid(format!(
                "non-finite value {} at {} Hz",
                values[i],
                grid.freq(i)
            )));
        }
        Ok(Self { grid, values, meta })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// SPL of each bin, dB re 20 µPa, treating |H| as peak amplitude.
    pub fn magnitude_db(&self) -> Vec<f64> {
        self.values.iter().map(|v| spl_db(v.norm())).collect()
    }

    /// Value at grid frequency `f`.
    pub fn at(&self, f: f64) -> Option<Complex64> {
        self.grid.index_of(f).map(|i| self.values[i])
    }

    /// Uniformly scaled copy.
    pub fn scaled(&self, s: Complex64) -> Result<Self> {
        Self::new(
            self.grid,
            self.values.iter().map(|v| v * s).collect(),
            self.meta.clone(),
        )
    }

    /// Pointwise product with a gain per grid point.
    pub fn map_with<F: FnMut(f64, Complex64) -> Complex64>(&self, mut g: F) -> Result<Self> {
        let values = self.grid.iter().zip(&self.values).map(|(f, &v)| g(f, v)).collect();
        Self::new(self.grid, values, self.meta.clone())
    }

    /// Writes `frequency_hz,re,im,magnitude_db` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["frequency_hz", "re", "im", "magnitude_db"])
            .map_err(csv_io)?;
        for (f, v) in self.grid.iter().zip(&self.values) {
            wr.write_record(&[
                f.to_string(),
                format!("{:e}", v.re),
                format!("{:e}", v.im),
                format!("{:.6}", spl_db(v.norm())),
            ])
            .map_err(csv_io)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads a CSV written by [`write_csv`](Self::write_csv); the
    /// magnitude column is ignored. Frequencies must be uniformly spaced.
    pub fn read_csv<R: Read>(r: R, origin: &Path) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(r);
        let bad = |msg: String| Error::format(origin, msg);
        let mut freqs = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() < 3 {
                return Err(bad(format!("row {}: expected at least 3 columns", line + 2)));
            }
            let num =
                |i: usize| -> Result<f64> { rec[i].parse::<f64>().map_err(|e| bad(format!("row {}: {e}", line + 2))) };
            freqs.push(num(0)?);
            values.push(Complex64::new(num(1)?, num(2)?));
        }
        if freqs.len() < 2 {
            return Err(bad("need at least two frequency rows".into()));
        }
        let step = freqs[1] - freqs[0];
        let grid = FrequencyGrid::new(freqs[0], step, freqs.len()).map_err(|e| bad(e.to_string()))?;
        for (i, &f) in freqs.iter().enumerate() {
            if (f - grid.freq(i)).abs() > 1e-6 * step {
                return Err(bad(format!("frequency {f} breaks the uniform {step} Hz grid")));
            }
        }
        Self::new(grid, values, TfMetadata::default()).map_err(|e| bad(e.to_string()))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file), path)
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Scales `tf` by a positive real factor so that |H(1 Hz)| equals
/// [`NORMALIZED_AMPLITUDE`].
pub fn normalize_spl(tf: &TransferFunction) -> Result<TransferFunction> {
    let h1 = tf
        .at(1.0)
        .ok_or_else(|| Error::invalid("transfer function has no 1 Hz bin"))?;
    let mag = h1.norm();
    if !(mag > 0.0) {
        return Err(Error::invalid("transfer function is zero at 1 Hz"));
    }
    tf.scaled(Complex64::from(NORMALIZED_AMPLITUDE / mag))
}

/// Keeps every `factor`-th bin starting from the first.
pub fn downsample_resolution(tf: &TransferFunction, factor: usize) -> Result<TransferFunction> {
    let grid = tf.grid.decimate(factor)?;
    let values = tf.values.iter().step_by(factor).copied().collect();
    TransferFunction::new(grid, values, tf.meta.clone())
}
