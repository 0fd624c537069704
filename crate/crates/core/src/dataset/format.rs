//! On-disk layout: `manifest.json` plus one little-endian shard per
//! (room, config) at `shards/room{r}_cfg{c}.bin`.
//!
//! A shard is a plain sequence of fixed-size records:
//!
//! | field | type |
//! |---|---|
//! | room, config, source, receiver, variant, bins | 6 × u32 |
//! | source x, y, z; receiver x, y, z | 6 × f64 |
//! | `bins` complex values as (re, im) | 2·bins × f32 |
//! | `y_a` then `y_d` | 21 × f32 |

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::generate::CorrectionPolicy;
use super::sampling::SamplingPlan;
use super::{SampleRecord, Variant, LABEL_ALPHA_LEN, LABEL_DIM_LEN};
use crate::error::{Error, Result};
use crate::spectrum::{FrequencyGrid, TfMetadata, TransferFunction};

pub const FORMAT_VERSION: u32 = 1;

const HEADER_BYTES: usize = 6 * 4 + 6 * 8;
const LABEL_BYTES: usize = (LABEL_ALPHA_LEN + LABEL_DIM_LEN) * 4;

pub fn record_bytes(bins: usize) -> usize {
    HEADER_BYTES + 8 * bins + LABEL_BYTES
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start_hz: f64,
    pub step_hz: f64,
    pub bins: usize,
}

impl GridSpec {
    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.start_hz, self.step_hz, self.bins)
    }
}

impl From<&FrequencyGrid> for GridSpec {
    fn from(g: &FrequencyGrid) -> Self {
        Self {
            start_hz: g.start(),
            step_hz: g.step(),
            bins: g.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestCounts {
    pub rooms: usize,
    pub configs: usize,
    pub sources: usize,
    pub receivers: usize,
    /// Records per (room, config, source, receiver): 1, or 2 when both the
    /// raw and the corrected response are kept.
    pub variants: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShardEntry {
    /// Path relative to the dataset directory.
    pub file: String,
    pub room: u32,
    pub config: u32,
    pub records: usize,
    pub crc32: u32,
}

/// Train/test membership by global record index (shard order, then record
/// order inside the shard).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitAssignment {
    pub ratio: f64,
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub counts: ManifestCounts,
    pub grid: GridSpec,
    pub seed: u64,
    pub policy: CorrectionPolicy,
    pub sampling: SamplingPlan,
    pub rooms: Vec<u32>,
    pub configs: Vec<u32>,
    pub sources: Vec<u32>,
    pub receivers: Vec<u32>,
    pub record_bytes: usize,
    pub shards: Vec<ShardEntry>,
    pub split: Option<SplitAssignment>,
}

impl DatasetManifest {
    pub const FILE: &'static str = "manifest.json";

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(Self::FILE);
        let text = fs::read_to_string(&path)?;
        let m: Self = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
        m.validate().map_err(|e| Error::format(&path, e.to_string()))?;
        Ok(m)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(Self::FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "format version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let c = &self.counts;
        if c.total != c.rooms * c.configs * c.sources * c.receivers * c.variants {
            return Err(Error::invalid(format!(
                "manifest total {} breaks the count law",
                c.total
            )));
        }
        if self.shards.iter().map(|s| s.records).sum::<usize>() != c.total {
            return Err(Error::invalid("shard record counts do not add up to the total"));
        }
        if self.record_bytes != record_bytes(self.grid.bins) {
            return Err(Error::invalid("record size does not match the grid"));
        }
        Ok(())
    }
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f32(buf: &mut Vec<u8>, v: f32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn encode(rec: &SampleRecord, buf: &mut Vec<u8>) {
    for v in [
        rec.room_id,
        rec.config_id,
        rec.source_id,
        rec.receiver_id,
        rec.variant.code(),
    ] {
        put_u32(buf, v);
    }
    put_u32(buf, rec.tf.len() as u32);
    for v in rec.source_pos.iter().chain(&rec.receiver_pos) {
        put_f64(buf, *v);
    }
    for z in rec.tf.values() {
        put_f32(buf, z.re as f32);
        put_f32(buf, z.im as f32);
    }
    for v in rec.y_a.iter().chain(&rec.y_d) {
        put_f32(buf, *v);
    }
}

struct Cursor<'a> {
    b: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.b[self.at..self.at + N].try_into().expect("length checked");
        self.at += N;
        out
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take())
    }
}

fn decode(bytes: &[u8], grid: &FrequencyGrid, origin: &Path) -> Result<SampleRecord> {
    let bad = |msg: String| Error::format(origin, msg);
    if bytes.len() != record_bytes(grid.len()) {
        return Err(bad(format!(
            "record of {} bytes, expected {}",
            bytes.len(),
            record_bytes(grid.len())
        )));
    }
    let mut c = Cursor { b: bytes, at: 0 };
    let ids = [c.u32(), c.u32(), c.u32(), c.u32()];
    let variant = Variant::from_code(c.u32()).map_err(|e| bad(e.to_string()))?;
    let bins = c.u32() as usize;
    if bins != grid.len() {
        return Err(bad(format!(
            "record holds {bins} bins, manifest grid has {}",
            grid.len()
        )));
    }
    let source_pos = [c.f64(), c.f64(), c.f64()];
    let receiver_pos = [c.f64(), c.f64(), c.f64()];
    let values: Vec<Complex64> = (0..bins)
        .map(|_| {
            let re = c.f32();
            let im = c.f32();
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let y_a = [(); LABEL_ALPHA_LEN].map(|_| c.f32());
    let y_d = [(); LABEL_DIM_LEN].map(|_| c.f32());
    let meta = TfMetadata {
        room_id: Some(ids[0]),
        config_id: Some(ids[1]),
        source_id: Some(ids[2]),
        receiver_id: Some(ids[3]),
        source_pos: Some(source_pos),
        receiver_pos: Some(receiver_pos),
    };
    let tf = TransferFunction::new(*grid, values, meta).map_err(|e| bad(e.to_string()))?;
    Ok(SampleRecord {
        room_id: ids[0],
        config_id: ids[1],
        source_id: ids[2],
        receiver_id: ids[3],
        variant,
        source_pos,
        receiver_pos,
        tf,
        y_a,
        y_d,
    })
}

/// Writes `records` to `path` through a temporary file that is renamed into
/// place, so a shard file that exists is always complete. Returns its CRC32.
pub fn write_shard(path: &Path, records: &[SampleRecord]) -> Result<u32> {
    let tmp = path.with_extension("bin.partial");
    let mut hasher = crc32fast::Hasher::new();
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        let mut buf = Vec::new();
        for r in records {
            buf.clear();
            encode(r, &mut buf);
            hasher.update(&buf);
            w.write_all(&buf)?;
        }
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(hasher.finalize())
}

/// CRC32 of a whole file.
pub(crate) fn file_crc32(path: &Path) -> Result<u32> {
    let mut r = BufReader::new(File::open(path)?);
    let mut hasher = crc32fast::Hasher::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = r.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize())
}

/// Reads every record of a shard, checking its size and, when given, its
/// CRC32.
pub fn read_shard(path: &Path, grid: &FrequencyGrid, crc32: Option<u32>) -> Result<Vec<SampleRecord>> {
    let bytes = fs::read(path)?;
    if let Some(expected) = crc32 {
        let got = crc32fast::hash(&bytes);
        if got != expected {
            return Err(Error::format(
                path,
                format!("CRC32 {got:08x} does not match manifest {expected:08x}"),
            ));
        }
    }
    let size = record_bytes(grid.len());
    if bytes.len() % size != 0 {
        return Err(Error::format(
            path,
            format!("{} bytes is not a whole number of {size}-byte records", bytes.len()),
        ));
    }
    bytes.chunks_exact(size).map(|b| decode(b, grid, path)).collect()
}

/// Random access to a generated dataset.
#[derive(Debug)]
pub struct DatasetReader {
    dir: PathBuf,
    manifest: DatasetManifest,
    grid: FrequencyGrid,
    /// Global index of the first record of each shard.
    offsets: Vec<usize>,
}

impl DatasetReader {
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest = DatasetManifest::load(dir)?;
        let grid = manifest.grid.grid()?;
        let mut offsets = Vec::with_capacity(manifest.shards.len());
        let mut at = 0;
        for s in &manifest.shards {
            let path = dir.join(&s.file);
            let len = fs::metadata(&path)?.len() as usize;
            if len != s.records * manifest.record_bytes {
                return Err(Error::format(
                    &path,
                    format!("{len} bytes, manifest expects {} records", s.records),
                ));
            }
            offsets.push(at);
            at += s.records;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            grid,
            offsets,
        })
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn len(&self) -> usize {
        self.manifest.counts.total
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All records of shard `i`, checksum verified.
    pub fn shard(&self, i: usize) -> Result<Vec<SampleRecord>> {
        let s = self
            .manifest
            .shards
            .get(i)
            .ok_or_else(|| Error::domain(format!("shard {i} out of range")))?;
        read_shard(&self.dir.join(&s.file), &self.grid, Some(s.crc32))
    }

    /// Record by global index, read with a single seek (no checksum).
    pub fn record(&self, index: usize) -> Result<SampleRecord> {
        if index >= self.len() {
            return Err(Error::domain(format!(
                "record {index} out of range (total {})",
                self.len()
            )));
        }
        let shard = self.offsets.partition_point(|&o| o <= index) - 1;
        let path = self.dir.join(&self.manifest.shards[shard].file);
        let size = self.manifest.record_bytes;
        let mut f = File::open(&path)?;
        f.seek(SeekFrom::Start(((index - self.offsets[shard]) * size) as u64))?;
        let mut buf = vec![0u8; size];
        f.read_exact(&mut buf)?;
        decode(&buf, &self.grid, &path)
    }

    /// Every record in global order.
    pub fn iter(&self) -> impl Iterator<Item = Result<SampleRecord>> + '_ {
        (0..self.manifest.shards.len()).flat_map(move |i| match self.shard(i) {
            Ok(v) => v.into_iter().map(Ok).collect::<Vec<_>>(),
            Err(e) => vec![Err(e)],
        })
    }
}
