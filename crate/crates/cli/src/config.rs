//! Run configuration file.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use roomscope_core::dataset::{self, CorrectionPolicy, SamplingPlan};
use roomscope_core::sim::{CorrectionTable, SolverConfig, SpectralCorrection, SurfaceMaterials};
use roomscope_core::{AirProperties, RoomGeometry};
use serde::{Deserialize, Serialize};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "ROOMSCOPE_SEED";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub air: AirProperties,
    pub room: Option<RoomSection>,
    /// Surface ids "1" to "6"; all six required when present.
    pub materials: Option<SurfaceMaterials>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sampling: SamplingPlan,
    #[serde(default)]
    pub correction: CorrectionSection,
    #[serde(default)]
    pub paths: PathsSection,
    pub seed: Option<u64>,
}

/// A table room by id, or explicit dimensions.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSection {
    pub id: Option<u32>,
    /// [Lx, Ly, Lz] in metres.
    pub dims: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectionSection {
    /// Loudspeaker response applied by `simulate`.
    #[serde(default)]
    pub source: SourceCorrection,
    /// Records kept per pair by `dataset`.
    #[serde(default)]
    pub policy: CorrectionPolicy,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceCorrection {
    #[default]
    Flat,
    Bandpass {
        f_lo: f64,
        q_lo: f64,
        f_hi: f64,
    },
    /// CSV of `frequency_hz,gain_db` or `frequency_hz,re,im`.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    /// Default output when `--out` is not given.
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        // a missing config is a usage error, not an I/O failure
        let text = std::fs::read_to_string(path).map_err(|e| anyhow!("reading config {}: {e}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("config {} does not match the schema", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.air.validate()?;
        self.solver.validate()?;
        self.sampling.validate()?;
        if let Some(m) = &self.materials {
            m.validate()?;
        }
        if self.room.is_some() {
            self.geometry()?;
        }
        if let SourceCorrection::Bandpass { .. } = self.correction.source {
            self.source_correction()?.validate()?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<RoomGeometry> {
        let Some(room) = &self.room else {
            bail!("config has no room section");
        };
        Ok(match (room.id, room.dims) {
            (Some(id), None) => dataset::room(id)?,
            (None, Some([lx, ly, lz])) => RoomGeometry::new(lx, ly, lz)?,
            _ => bail!("room section needs exactly one of \"id\" or \"dims\""),
        })
    }

    pub fn materials(&self) -> Result<SurfaceMaterials> {
        match self.materials {
            Some(m) => Ok(m),
            None => bail!("config has no materials section"),
        }
    }

    pub fn source_correction(&self) -> Result<SpectralCorrection> {
        Ok(match &self.correction.source {
            SourceCorrection::Flat => SpectralCorrection::Flat,
            SourceCorrection::Bandpass { f_lo, q_lo, f_hi } => SpectralCorrection::ParametricBandpass {
                f_lo: *f_lo,
                q_lo: *q_lo,
                f_hi: *f_hi,
            },
            SourceCorrection::File { path } => SpectralCorrection::File(CorrectionTable::load(path)?),
        })
    }

    /// Seed from the environment, then the config, then the sampling plan.
    pub fn seed(&self) -> Result<u64> {
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
            Err(_) => Ok(self.seed.unwrap_or(self.sampling.seed)),
        }
    }
}
