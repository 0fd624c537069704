use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::room::RoomGeometry;

/// Stratified placement of sources and receivers: one uniform point per
/// cell, kept `margin_m` away from every cell face (and so from every wall).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingPlan {
    /// Source layers stacked in z.
    pub source_layers: usize,
    /// Source cells along the longer horizontal axis.
    pub source_columns: usize,
    /// Receiver cells per axis (x, y, z).
    pub receiver_cells: [usize; 3],
    pub margin_m: f64,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            source_layers: 2,
            source_columns: 3,
            receiver_cells: [5, 5, 5],
            margin_m: 0.1,
            seed: 0,
        }
    }
}

impl SamplingPlan {
    pub fn source_count(&self) -> usize {
        self.source_layers * self.source_columns
    }

    pub fn receiver_count(&self) -> usize {
        self.receiver_cells.iter().product()
    }

    /// Source cell counts per axis for `geom`; the columns run along the
    /// longer horizontal axis (x on a tie).
    pub fn source_cells(&self, geom: &RoomGeometry) -> [usize; 3] {
        let d = geom.dims();
        if d[1] > d[0] {
            [1, self.source_columns, self.source_layers]
        } else {
            [self.source_columns, 1, self.source_layers]
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.source_count() == 0 || self.receiver_count() == 0 {
            return Err(Error::domain("sampling plan needs at least one cell per axis"));
        }
        if !(self.margin_m >= 0.0 && self.margin_m.is_finite()) {
            return Err(Error::domain(format!(
                "margin must be non-negative, got {}",
                self.margin_m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Positions {
    /// Indexed by source id, x fastest then y then z cell.
    pub sources: Vec<[f64; 3]>,
    /// Indexed by receiver id, same ordering.
    pub receivers: Vec<[f64; 3]>,
}

fn sample_cells(
    geom: &RoomGeometry,
    cells: [usize; 3],
    margin: f64,
    rng: &mut ChaCha8Rng,
    what: &str,
) -> Result<Vec<[f64; 3]>> {
    let d = geom.dims();
    let size = [0, 1, 2].map(|a| d[a] / cells[a] as f64);
    if size.iter().any(|&s| s <= 2.0 * margin) {
        return Err(Error::domain(format!(
            "{what} cells of {:.3} x {:.3} x {:.3} m cannot keep a {margin} m margin",
            size[0], size[1], size[2]
        )));
    }
    let mut out = Vec::with_capacity(cells.iter().product());
    for k in 0..cells[2] {
        for j in 0..cells[1] {
            for i in 0..cells[0] {
                let idx = [i, j, k];
                let p = [0, 1, 2].map(|a| {
                    let lo = idx[a] as f64 * size[a] + margin;
                    let hi = (idx[a] + 1) as f64 * size[a] - margin;
                    rng.random_range(lo..hi)
                });
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// Samples source and receiver positions in `geom`. The stream depends only
/// on `seed`, so a room sampled twice with the same seed gets identical
/// coordinates.
pub fn sample_positions(geom: &RoomGeometry, plan: &SamplingPlan, seed: u64) -> Result<Positions> {
    plan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = sample_cells(geom, plan.source_cells(geom), plan.margin_m, &mut rng, "source")?;
    let receivers = sample_cells(geom, plan.receiver_cells, plan.margin_m, &mut rng, "receiver")?;
    Ok(Positions { sources, receivers })
}
