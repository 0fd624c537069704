//! Measured room impulse responses to dataset-grid transfer functions.

use std::path::Path;

use log::warn;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::spectrum::{normalize_spl, FrequencyGrid, TfMetadata, TransferFunction};

/// Analysis length; at 0.5 Hz spacing the FFT bins fall on the grid.
pub const RIR_SECONDS: f64 = 2.0;
/// Shorter responses are rejected.
pub const RIR_MIN_SECONDS: f64 = 0.1;

/// Transfer function of `samples` taken at `fs` Hz, truncated or zero-padded
/// to [`RIR_SECONDS`], read off on the dataset grid and normalised to the
/// dataset level at 1 Hz.
pub fn ingest_samples(samples: &[f64], fs: f64) -> Result<TransferFunction> {
    let grid = FrequencyGrid::dataset();
    if !(fs >= 2.0 * grid.stop() && fs.is_finite()) {
        return Err(Error::domain(format!(
            "sample rate {fs} Hz cannot resolve {} Hz",
            grid.stop()
        )));
    }
    let dur = samples.len() as f64 / fs;
    if dur < RIR_MIN_SECONDS {
        return Err(Error::invalid(format!(
            "impulse response lasts {dur:.3} s, at least {RIR_MIN_SECONDS} s needed"
        )));
    }
    if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("impulse response holds {v}")));
    }
    let n = (RIR_SECONDS * fs).round() as usize;
    if samples.len() > n {
        warn!("impulse response truncated from {dur:.2} s to {RIR_SECONDS} s");
    }
    let mut buf: Vec<Complex64> = samples.iter().take(n).map(|&v| Complex64::from(v / fs)).collect();
    buf.resize(n, Complex64::default());
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let bin_hz = fs / n as f64;
    let values = grid
        .iter()
        .map(|f| {
            let x = f / bin_hz;
            let k = x.floor() as usize;
            let t = x - k as f64;
            if t < 1e-9 {
                buf[k]
            } else {
                buf[k] * (1.0 - t) + buf[k + 1] * t
            }
        })
        .collect();
    let tf = TransferFunction::new(grid, values, TfMetadata::default())?;
    normalize_spl(&tf)
}

fn read_wav(path: &Path) -> Result<(Vec<f64>, f64)> {
    let bad = |e: hound::Error| Error::format(path, e.to_string());
    let mut rd = hound::WavReader::open(path).map_err(bad)?;
    let spec = rd.spec();
    if spec.channels != 1 {
        return Err(Error::format(
            path,
            format!("expected mono, found {} channels", spec.channels),
        ));
    }
    let (samples, clipped) = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => {
            let v: Vec<f64> = rd
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()
                .map_err(bad)?;
            let clipped = v.iter().filter(|s| s.abs() >= 1.0).count();
            (v, clipped)
        }
        (hound::SampleFormat::Int, bits @ (16 | 24)) => {
            let full = (1i64 << (bits - 1)) as f64;
            let raw: Vec<i32> = rd
                .samples::<i32>()
                .collect::<std::result::Result<_, _>>()
                .map_err(bad)?;
            let clipped = raw
                .iter()
                .filter(|&&s| s as f64 >= full - 1.0 || s as f64 <= -full)
                .count();
            (raw.into_iter().map(|s| s as f64 / full).collect(), clipped)
        }
        (fmt, bits) => {
            return Err(Error::format(
                path,
                format!("unsupported sample format {fmt:?} with {bits} bits (PCM 16/24 or float 32)"),
            ))
        }
    };
    if clipped > 0 {
        warn!(
            "{}: {clipped} samples at full scale, response may be clipped",
            path.display()
        );
    }
    Ok((samples, spec.sample_rate as f64))
}

/// Reads `time_s,amplitude` rows; a non-numeric first row is a header.
fn read_csv(path: &Path) -> Result<(Vec<f64>, f64)> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let mut t = Vec::new();
    let mut x = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::format(path, format!("record {}: expected 2 columns", line + 1)));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                t.push(a);
                x.push(b);
            }
            _ if line == 0 => continue,
            _ => return Err(Error::format(path, format!("record {}: not a number", line + 1))),
        }
    }
    if t.len() < 2 {
        return Err(Error::format(path, "fewer than two samples"));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let uneven = t
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.abs().max(1e-12));
    if !(dt > 0.0) || uneven {
        return Err(Error::format(path, "time column must be uniformly increasing"));
    }
    Ok((x, 1.0 / dt))
}

/// Reads a mono WAV (PCM 16/24-bit or 32-bit float) or a `time_s,amplitude`
/// CSV, chosen by extension, and hands it to [`ingest_samples`].
pub fn ingest_rir(path: &Path) -> Result<TransferFunction> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let (samples, fs) = match ext.as_deref() {
        Some("wav") => read_wav(path)?,
        Some("csv") => read_csv(path)?,
        _ => return Err(Error::format(path, "expected a .wav or .csv impulse response")),
    };
    ingest_samples(&samples, fs).map_err(|e| match e {
        Error::Domain(m) | Error::InvalidInput(m) => Error::format(path, m),
        e => e,
    })
}
