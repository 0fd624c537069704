use std::fs;
use std::path::Path;

use log::{debug, info};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::format::{file_crc32, record_bytes, write_shard};
use super::sampling::{sample_positions, Positions, SamplingPlan};
use super::split::split;
use super::{
    absorption_labels, dimension_labels, room, ConfigId, DatasetManifest, GridSpec, ManifestCounts, SampleRecord,
    ShardEntry, Variant, CONFIG_COUNT, FORMAT_VERSION, LABEL_ALPHA_LEN, ROOM_COUNT,
};
use crate::error::{Error, Result};
use crate::materials::{AbsorptionQuadrature, MaterialSpec};
use crate::room::{AirProperties, RoomGeometry};
use crate::sim::{apply_source_correction, ModalConfig, ModalModel, SpectralCorrection, SurfaceMaterials};
use crate::spectrum::{normalize_spl, FrequencyGrid, TfMetadata, TransferFunction};

/// Which responses are stored per source/receiver pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionPolicy {
    /// Simulated responses only.
    #[default]
    Simu,
    /// Responses through a per-source loudspeaker curve only.
    Aug,
    /// Both, raw first.
    Both,
}

impl CorrectionPolicy {
    pub fn variants(self) -> &'static [Variant] {
        match self {
            CorrectionPolicy::Simu => &[Variant::Raw],
            CorrectionPolicy::Aug => &[Variant::Corrected],
            CorrectionPolicy::Both => &[Variant::Raw, Variant::Corrected],
        }
    }
}

/// Band-pass standing in for the loudspeaker at source `source_id`; drawn
/// from a stream keyed by `seed` and the id alone.
pub fn augmentation_curve(seed: u64, source_id: u32) -> SpectralCorrection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + source_id as u64);
    SpectralCorrection::ParametricBandpass {
        f_lo: rng.random_range(30.0..60.0),
        q_lo: rng.random_range(0.6..1.0),
        f_hi: rng.random_range(400.0..2000.0),
    }
}

/// Ids to generate; `None` means all.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSubset {
    /// Room ids, 1 to 7.
    pub rooms: Option<Vec<u32>>,
    /// Config ids, 0 to 26.
    pub configs: Option<Vec<u32>>,
    /// Source ids, from 0.
    pub sources: Option<Vec<u32>>,
    /// Receiver ids, from 0.
    pub receivers: Option<Vec<u32>>,
}

fn resolve(ids: &Option<Vec<u32>>, lo: u32, count: usize, what: &str) -> Result<Vec<u32>> {
    let hi = lo + count as u32;
    let Some(ids) = ids else {
        return Ok((lo..hi).collect());
    };
    let mut v = ids.clone();
    v.sort_unstable();
    v.dedup();
    if v.is_empty() {
        return Err(Error::domain(format!("empty {what} selection")));
    }
    if let Some(bad) = v.iter().find(|&&i| i < lo || i >= hi) {
        return Err(Error::domain(format!("{what} id {bad} outside {lo}..{hi}")));
    }
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub plan: SamplingPlan,
    pub modal: ModalConfig,
    pub air: AirProperties,
    pub quadrature: AbsorptionQuadrature,
    pub policy: CorrectionPolicy,
    pub subset: DatasetSubset,
    /// Train fraction of the stored split, `None` for no split.
    pub split_ratio: Option<f64>,
    /// Keep shard files left by an interrupted run.
    pub resume: bool,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            plan: SamplingPlan::default(),
            modal: ModalConfig::default(),
            air: AirProperties::default(),
            quadrature: AbsorptionQuadrature::default(),
            policy: CorrectionPolicy::default(),
            subset: DatasetSubset::default(),
            split_ratio: Some(0.8),
            resume: false,
        }
    }
}

struct Selection {
    rooms: Vec<u32>,
    configs: Vec<u32>,
    sources: Vec<u32>,
    receivers: Vec<u32>,
}

fn select(opts: &GenerateOptions) -> Result<Selection> {
    opts.plan.validate()?;
    Ok(Selection {
        rooms: resolve(&opts.subset.rooms, 1, ROOM_COUNT, "room")?,
        configs: resolve(&opts.subset.configs, 0, CONFIG_COUNT, "config")?,
        sources: resolve(&opts.subset.sources, 0, opts.plan.source_count(), "source")?,
        receivers: resolve(&opts.subset.receivers, 0, opts.plan.receiver_count(), "receiver")?,
    })
}

/// Record counts [`generate_dataset`] would produce, without simulating.
pub fn planned_counts(opts: &GenerateOptions) -> Result<ManifestCounts> {
    let s = select(opts)?;
    let variants = opts.policy.variants().len();
    Ok(ManifestCounts {
        rooms: s.rooms.len(),
        configs: s.configs.len(),
        sources: s.sources.len(),
        receivers: s.receivers.len(),
        variants,
        total: s.rooms.len() * s.configs.len() * s.sources.len() * s.receivers.len() * variants,
    })
}

fn room_seed(seed: u64, room_id: u32) -> u64 {
    seed ^ (room_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct RoomData {
    id: u32,
    geom: RoomGeometry,
    positions: Positions,
    /// Labels with every surface in concrete, material A, material B.
    uniform: [[f64; LABEL_ALPHA_LEN]; 3],
}

impl RoomData {
    fn labels(&self, materials: &SurfaceMaterials) -> Result<[f32; LABEL_ALPHA_LEN]> {
        let mut y = [0.0; LABEL_ALPHA_LEN];
        for (s, m) in materials.iter() {
            let k = match *m {
                MaterialSpec::CONCRETE => 0,
                MaterialSpec::MATERIAL_A => 1,
                MaterialSpec::MATERIAL_B => 2,
                _ => {
                    return Err(Error::invalid(
                        "dataset configs use concrete, material A or material B only",
                    ))
                }
            };
            for b in 0..3 {
                y[3 * s.index() + b] = self.uniform[k][3 * s.index() + b] as f32;
            }
        }
        Ok(y)
    }
}

fn shard_file(room_id: u32, config: u32) -> String {
    format!("shards/room{room_id}_cfg{config}.bin")
}

fn quantize(tf: TransferFunction) -> Result<TransferFunction> {
    let grid = *tf.grid();
    let meta = tf.meta.clone();
    let v = tf
        .into_values()
        .into_iter()
        .map(|z| Complex64::new(z.re as f32 as f64, z.im as f32 as f64))
        .collect();
    TransferFunction::new(grid, v, meta)
}

#[allow(clippy::too_many_arguments)]
fn shard_records(
    room: &RoomData,
    config: &ConfigId,
    sources: &[u32],
    receivers: &[u32],
    opts: &GenerateOptions,
    grid: &FrequencyGrid,
    curves: &[SpectralCorrection],
) -> Result<Vec<SampleRecord>> {
    let y_a = room.labels(&config.materials)?;
    let y_d = dimension_labels(&room.geom).map(|v| v as f32);
    let f_cut = opts.modal.cutoff_margin * grid.stop();
    let mut out = Vec::with_capacity(sources.len() * receivers.len() * opts.policy.variants().len());
    for &s in sources {
        let src = room.positions.sources[s as usize];
        for &r in receivers {
            let rcv = room.positions.receivers[r as usize];
            let model = ModalModel::new(&room.geom, &config.materials, src, rcv, &opts.air, f_cut)?;
            let values = grid.iter().map(|f| model.response(f)).collect::<Result<Vec<_>>>()?;
            let meta = TfMetadata {
                room_id: Some(room.id),
                config_id: Some(config.index),
                source_id: Some(s),
                receiver_id: Some(r),
                source_pos: Some(src),
                receiver_pos: Some(rcv),
            };
            let raw = TransferFunction::new(*grid, values, meta)?;
            for &variant in opts.policy.variants() {
                let tf = match variant {
                    Variant::Raw => raw.clone(),
                    Variant::Corrected => apply_source_correction(&raw, &curves[s as usize])?,
                };
                out.push(SampleRecord {
                    room_id: room.id,
                    config_id: config.index,
                    source_id: s,
                    receiver_id: r,
                    variant,
                    source_pos: src,
                    receiver_pos: rcv,
                    tf: quantize(normalize_spl(&tf)?)?,
                    y_a,
                    y_d,
                });
            }
        }
    }
    Ok(out)
}

/// Simulates every selected (room, config, source, receiver) with the modal
/// solver and writes shards plus `manifest.json` under `out`.
///
/// Output bytes depend only on the options, not on the thread count. With
/// `resume`, shard files already present at full size are kept; shards are
/// renamed into place only once complete.
pub fn generate_dataset(opts: &GenerateOptions, out: &Path) -> Result<DatasetManifest> {
    opts.plan.validate()?;
    opts.air.validate()?;
    if let Some(r) = opts.split_ratio {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::domain(format!("split ratio must lie in (0, 1), got {r}")));
        }
    }
    let Selection {
        rooms,
        configs,
        sources,
        receivers,
    } = select(opts)?;
    let grid = FrequencyGrid::dataset();
    let seed = opts.plan.seed;
    let curves: Vec<SpectralCorrection> = (0..opts.plan.source_count() as u32)
        .map(|s| augmentation_curve(seed, s))
        .collect();

    fs::create_dir_all(out.join("shards"))?;

    let uniforms = [
        SurfaceMaterials::concrete(),
        SurfaceMaterials::uniform(MaterialSpec::MATERIAL_A),
        SurfaceMaterials::uniform(MaterialSpec::MATERIAL_B),
    ];
    let room_data: Vec<RoomData> = rooms
        .par_iter()
        .map(|&id| {
            let geom = room(id)?;
            let positions = sample_positions(&geom, &opts.plan, room_seed(seed, id))?;
            let mut uniform = [[0.0; LABEL_ALPHA_LEN]; 3];
            for (u, m) in uniform.iter_mut().zip(&uniforms) {
                *u = absorption_labels(&geom, m, &opts.air, &opts.quadrature)?;
            }
            Ok(RoomData {
                id,
                geom,
                positions,
                uniform,
            })
        })
        .collect::<Result<_>>()?;
    let config_ids: Vec<ConfigId> = configs.iter().map(|&c| ConfigId::new(c)).collect::<Result<_>>()?;

    let per_shard = sources.len() * receivers.len() * opts.policy.variants().len();
    let size = record_bytes(grid.len());
    let jobs: Vec<(&RoomData, &ConfigId)> = room_data
        .iter()
        .flat_map(|r| config_ids.iter().map(move |c| (r, c)))
        .collect();
    let shards: Vec<ShardEntry> = jobs
        .par_iter()
        .map(|&(rd, cfg)| {
            let file = shard_file(rd.id, cfg.index);
            let path = out.join(&file);
            let crc32 = match fs::metadata(&path) {
                Ok(m) if opts.resume && m.len() as usize == per_shard * size => {
                    debug!("keeping {file}");
                    file_crc32(&path)?
                }
                _ => {
                    let recs = shard_records(rd, cfg, &sources, &receivers, opts, &grid, &curves)?;
                    let crc = write_shard(&path, &recs)?;
                    info!("wrote {file} ({} records)", recs.len());
                    crc
                }
            };
            Ok(ShardEntry {
                file,
                room: rd.id,
                config: cfg.index,
                records: per_shard,
                crc32,
            })
        })
        .collect::<Result<_>>()?;

    let counts = planned_counts(opts)?;
    let mut manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        counts,
        grid: GridSpec::from(&grid),
        seed,
        policy: opts.policy,
        sampling: opts.plan,
        rooms,
        configs,
        sources,
        receivers,
        record_bytes: size,
        shards,
        split: None,
    };
    if let Some(ratio) = opts.split_ratio {
        manifest.split = Some(split(&manifest, ratio, seed)?);
    }
    manifest.validate()?;
    manifest.save(out)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_multiplier() {
        assert_eq!(CorrectionPolicy::Simu.variants().len(), 1);
        assert_eq!(CorrectionPolicy::Aug.variants().len(), 1);
        assert_eq!(CorrectionPolicy::Both.variants().len(), 2);
    }

    #[test]
    fn full_plan_count() {
        let c = planned_counts(&GenerateOptions::default()).unwrap();
        assert_eq!(
            (c.rooms, c.configs, c.sources, c.receivers, c.variants),
            (7, 27, 6, 125, 1)
        );
        assert_eq!(c.total, 141_750);
        let both = GenerateOptions {
            policy: CorrectionPolicy::Both,
            ..GenerateOptions::default()
        };
        assert_eq!(planned_counts(&both).unwrap().total, 283_500);
    }

    #[test]
    fn curves_are_keyed_by_source() {
        let a = augmentation_curve(3, 2);
        assert_eq!(a, augmentation_curve(3, 2));
        assert_ne!(a, augmentation_curve(3, 1));
        assert_ne!(a, augmentation_curve(4, 2));
        a.validate().unwrap();
    }

    #[test]
    fn subset_resolution() {
        assert_eq!(resolve(&None, 1, 3, "room").unwrap(), vec![1, 2, 3]);
        assert_eq!(resolve(&Some(vec![3, 1, 3]), 1, 7, "room").unwrap(), vec![1, 3]);
        assert!(resolve(&Some(vec![8]), 1, 7, "room").is_err());
        assert!(resolve(&Some(vec![]), 0, 27, "config").is_err());
    }
}
