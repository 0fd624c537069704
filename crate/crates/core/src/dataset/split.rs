use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::format::{DatasetManifest, SplitAssignment};
use crate::error::{Error, Result};

/// Train/test split stratified by (room, config). Inside each shard the
/// unit is a source/receiver pair, so the raw and corrected records of a
/// pair always land on the same side. Each stratum with at least two pairs
/// contributes to both sides.
pub fn split(manifest: &DatasetManifest, ratio: f64, seed: u64) -> Result<SplitAssignment> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::domain(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let variants = manifest.counts.variants.max(1);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut base = 0;
    for shard in &manifest.shards {
        let pairs = shard.records / variants;
        let mut order: Vec<usize> = (0..pairs).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((shard.room as u64) << 32) | shard.config as u64);
        order.shuffle(&mut rng);
        let n_train = if pairs < 2 {
            pairs
        } else {
            ((ratio * pairs as f64).round() as usize).clamp(1, pairs - 1)
        };
        for (k, &p) in order.iter().enumerate() {
            let side = if k < n_train { &mut train } else { &mut test };
            side.extend((0..variants).map(|v| base + p * variants + v));
        }
        base += shard.records;
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitAssignment {
        ratio,
        seed,
        train,
        test,
    })
}
