//! Loudspeaker spectral corrections.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectrum::TransferFunction;

/// Complex gain table interpolated linearly in log-frequency; magnitude is
/// interpolated in dB and phase (unwrapped) in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionTable {
    log_f: Vec<f64>,
    gain_db: Vec<f64>,
    phase: Vec<f64>,
}

impl CorrectionTable {
    pub fn from_complex(freqs: &[f64], gains: &[Complex64]) -> Result<Self> {
        if freqs.len() != gains.len() {
            return Err(Error::invalid("frequency and gain columns differ in length"));
        }
        if let Some(g) = gains.iter().find(|g| !(g.norm() > 0.0 && g.norm().is_finite())) {
            return Err(Error::invalid(format!("gain {g} is zero or not finite")));
        }
        let mut phase: Vec<f64> = gains.iter().map(|g| g.arg()).collect();
        for i in 1..phase.len() {
            let jump = ((phase[i] - phase[i - 1]) / (2.0 * PI)).round();
            phase[i] -= jump * 2.0 * PI;
        }
        let gain_db = gains.iter().map(|g| 20.0 * g.norm().log10()).collect();
        Self::build(freqs, gain_db, phase)
    }

    pub fn from_db(freqs: &[f64], gain_db: &[f64]) -> Result<Self> {
        if freqs.len() != gain_db.len() {
            return Err(Error::invalid("frequency and gain columns differ in length"));
        }
        Self::build(freqs, gain_db.to_vec(), vec![0.0; freqs.len()])
    }

    fn build(freqs: &[f64], gain_db: Vec<f64>, phase: Vec<f64>) -> Result<Self> {
        if freqs.len() < 2 {
            return Err(Error::invalid("correction table needs at least two rows"));
        }
        if freqs.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(Error::invalid("correction frequencies must be positive"));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("correction frequencies must be strictly ascending"));
        }
        if gain_db.iter().chain(&phase).any(|v| !v.is_finite()) {
            return Err(Error::invalid("correction gains must be finite"));
        }
        Ok(Self {
            log_f: freqs.iter().map(|f| f.ln()).collect(),
            gain_db,
            phase,
        })
    }

    /// Reads `frequency_hz,gain_db` or `frequency_hz,re,im` rows; lines
    /// starting with `#` and a non-numeric header row are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => rows.push(v),
                Err(_) if line == 0 => continue,
                Err(e) => return Err(Error::format(path, format!("record {}: {e}", line + 1))),
            }
        }
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::format(path, "rows have differing column counts"));
        }
        let freqs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let table = match width {
            2 => Self::from_db(&freqs, &rows.iter().map(|r| r[1]).collect::<Vec<_>>()),
            3 => Self::from_complex(
                &freqs,
                &rows.iter().map(|r| Complex64::new(r[1], r[2])).collect::<Vec<_>>(),
            ),
            n => return Err(Error::format(path, format!("expected 2 or 3 columns, found {n}"))),
        };
        table.map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn range(&self) -> (f64, f64) {
        (self.log_f[0].exp(), self.log_f[self.log_f.len() - 1].exp())
    }

    /// Table with reciprocal gains.
    pub fn inverse(&self) -> Self {
        Self {
            log_f: self.log_f.clone(),
            gain_db: self.gain_db.iter().map(|g| -g).collect(),
            phase: self.phase.iter().map(|p| -p).collect(),
        }
    }

    pub fn gain(&self, f: f64) -> Result<Complex64> {
        let x = f.ln();
        let n = self.log_f.len();
        let tol = 1e-12;
        if x < self.log_f[0] - tol || x > self.log_f[n - 1] + tol {
            let (lo, hi) = self.range();
            return Err(Error::invalid(format!(
                "{f} Hz lies outside the correction table range [{lo}, {hi}] Hz"
            )));
        }
        let i = self.log_f.partition_point(|&v| v <= x).clamp(1, n - 1);
        let t = ((x - self.log_f[i - 1]) / (self.log_f[i] - self.log_f[i - 1])).clamp(0.0, 1.0);
        let db = self.gain_db[i - 1] + t * (self.gain_db[i] - self.gain_db[i - 1]);
        let ph = self.phase[i - 1] + t * (self.phase[i] - self.phase[i - 1]);
        Ok(Complex64::from_polar(10f64.powf(db / 20.0), ph))
    }
}

/// Frequency response imposed on a simulated transfer function.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SpectralCorrection {
    #[default]
    Flat,
    /// Second-order high-pass at `f_lo` with quality `q_lo`, times a
    /// second-order Butterworth low-pass at `f_hi`.
    ParametricBandpass {
        f_lo: f64,
        q_lo: f64,
        f_hi: f64,
    },
    File(CorrectionTable),
}

impl SpectralCorrection {
    pub fn validate(&self) -> Result<()> {
        if let SpectralCorrection::ParametricBandpass { f_lo, q_lo, f_hi } = *self {
            if !(f_lo > 0.0 && q_lo > 0.0 && f_hi > f_lo && f_hi.is_finite()) {
                return Err(Error::domain(format!(
                    "band-pass needs 0 < f_lo < f_hi and q_lo > 0, got f_lo = {f_lo}, q_lo = {q_lo}, f_hi = {f_hi}"
                )));
            }
        }
        Ok(())
    }

    pub fn gain(&self, f: f64) -> Result<Complex64> {
        match self {
            SpectralCorrection::Flat => Ok(Complex64::from(1.0)),
            SpectralCorrection::ParametricBandpass { f_lo, q_lo, f_hi } => {
                let s = Complex64::new(0.0, 2.0 * PI * f);
                let wl = 2.0 * PI * f_lo;
                let wh = 2.0 * PI * f_hi;
                let hp = s * s / (s * s + s * (wl / q_lo) + wl * wl);
                let lp = wh * wh / (s * s + s * (SQRT_2 * wh) + wh * wh);
                Ok(hp * lp)
            }
            SpectralCorrection::File(t) => t.gain(f),
        }
    }
}

/// Multiplies `tf` by the correction gain at every grid point.
pub fn apply_source_correction(tf: &TransferFunction, c: &SpectralCorrection) -> Result<TransferFunction> {
    if matches!(c, SpectralCorrection::Flat) {
        return Ok(tf.clone());
    }
    c.validate()?;
    if let SpectralCorrection::File(t) = c {
        let (lo, hi) = t.range();
        let (g0, g1) = (tf.grid().start(), tf.grid().stop());
        if lo > g0 * (1.0 + 1e-12) || hi < g1 * (1.0 - 1e-12) {
            return Err(Error::invalid(format!(
                "correction table covers [{lo}, {hi}] Hz but the transfer function spans [{g0}, {g1}] Hz"
            )));
        }
    }
    let gains = tf.grid().iter().map(|f| c.gain(f)).collect::<Result<Vec<_>>>()?;
    let mut it = gains.into_iter();
    tf.map_with(|_, v| v * it.next().expect("one gain per bin"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{FrequencyGrid, TfMetadata};
    use std::io::Write;

    fn tf() -> TransferFunction {
        let g = FrequencyGrid::dataset();
        let v = g
            .iter()
            .map(|f| Complex64::new((f / 7.0).sin() + 1.5, f.cos()))
            .collect();
        TransferFunction::new(g, v, TfMetadata::default()).unwrap()
    }

    #[test]
    fn flat_is_identity() {
        let t = tf();
        assert_eq!(apply_source_correction(&t, &SpectralCorrection::Flat).unwrap(), t);
    }

    #[test]
    fn highpass_corner_is_minus_3_db() {
        let c = SpectralCorrection::ParametricBandpass {
            f_lo: 50.0,
            q_lo: std::f64::consts::FRAC_1_SQRT_2,
            f_hi: 5000.0,
        };
        let passband = (200..355).map(|f| c.gain(f as f64).unwrap().norm()).fold(0.0, f64::max);
        let at = 20.0 * (c.gain(50.0).unwrap().norm() / passband).log10();
        assert!((at + 3.0103).abs() < 0.1, "{at}");
    }

    #[test]
    fn table_round_trip() {
        let freqs: Vec<f64> = (0..30).map(|i| 0.8 * 1.25f64.powi(i)).collect();
        let gains: Vec<Complex64> = freqs
            .iter()
            .map(|f| Complex64::from_polar(1.0 + 0.3 * (f / 40.0).sin(), 0.02 * f))
            .collect();
        let t = CorrectionTable::from_complex(&freqs, &gains).unwrap();
        assert!(t.range().1 > 354.0);
        let fwd = apply_source_correction(&tf(), &SpectralCorrection::File(t.clone())).unwrap();
        let back = apply_source_correction(&fwd, &SpectralCorrection::File(t.inverse())).unwrap();
        for (a, b) in back.values().iter().zip(tf().values()) {
            assert!((a - b).norm() <= 1e-9 * b.norm());
        }
        for (f, g) in freqs.iter().zip(&gains) {
            assert!((t.gain(*f).unwrap() - g).norm() < 1e-12);
        }
    }

    #[test]
    fn table_must_cover_grid() {
        let t = CorrectionTable::from_db(&[2.0, 400.0], &[0.0, -6.0]).unwrap();
        let err = apply_source_correction(&tf(), &SpectralCorrection::File(t)).unwrap_err();
        assert!(err.to_string().contains("covers [2"), "{err}");
    }

    #[test]
    fn loads_both_csv_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let p2 = dir.path().join("db.csv");
        let mut f = std::fs::File::create(&p2).unwrap();
        writeln!(f, "# measured response\nfrequency_hz,gain_db\n1,0\n10,-20\n1000,-20").unwrap();
        let t = CorrectionTable::load(&p2).unwrap();
        assert!((t.gain(10f64.sqrt()).unwrap().norm() - 10f64.powf(-0.5)).abs() < 1e-12);
        let p3 = dir.path().join("c.csv");
        std::fs::write(&p3, "1,1,0\n1000,0,2\n").unwrap();
        let t = CorrectionTable::load(&p3).unwrap();
        assert!((t.gain(1000.0).unwrap() - Complex64::new(0.0, 2.0)).norm() < 1e-12);
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "1,1,0,4\n2,1,0,4\n").unwrap();
        assert!(CorrectionTable::load(&bad).is_err());
        std::fs::write(&bad, "5,0\n2,0\n").unwrap();
        assert!(CorrectionTable::load(&bad).is_err());
    }
}
