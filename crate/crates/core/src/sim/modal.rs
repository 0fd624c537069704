//! Modal summation with first-order boundary perturbation.
//!
//! Each rigid-wall mode `n` gets the complex eigenvalue
//! `k_n'² = k_n² + j·k·Σ_w β_w I_{n,w} / N_n`, where `I_{n,w}/N_n` reduces to
//! `ε_a / L_a` for the two walls normal to axis `a` (ε = 2 for a nonzero
//! index along that axis, 1 otherwise).

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_inside, ModalConfig, SurfaceMaterials};
use crate::error::{Error, Result};
use crate::room::{mode_norm, modes_up_to, AirProperties, RoomGeometry};
use crate::spectrum::{FrequencyGrid, TfMetadata, TransferFunction};

#[derive(Debug, Clone, Copy)]
struct ModeTerm {
    k2: f64,
    coupling: f64,
    wall: [f64; 3],
}

/// Modal expansion prepared for one source/receiver pair.
#[derive(Debug, Clone)]
pub struct ModalModel {
    terms: Vec<ModeTerm>,
    materials: SurfaceMaterials,
    air: AirProperties,
}

impl ModalModel {
    /// Sums modes up to `f_cutoff`.
    pub fn new(
        geom: &RoomGeometry,
        materials: &SurfaceMaterials,
        src: [f64; 3],
        rcv: [f64; 3],
        air: &AirProperties,
        f_cutoff: f64,
    ) -> Result<Self> {
        geom.validate()?;
        air.validate()?;
        materials.validate()?;
        check_inside(geom, src, "source")?;
        check_inside(geom, rcv, "receiver")?;
        let modes = modes_up_to(geom, air, f_cutoff);
        if modes.is_empty() {
            return Err(Error::invalid("mode set is empty"));
        }
        let dims = geom.dims();
        let terms = modes
            .iter()
            .map(|m| {
                let n = m.index.as_array();
                let mut psi_s = 1.0;
                let mut psi_r = 1.0;
                let mut wall = [0.0; 3];
                for a in 0..3 {
                    let q = n[a] as f64 * PI / dims[a];
                    psi_s *= (q * src[a]).cos();
                    psi_r *= (q * rcv[a]).cos();
                    wall[a] = if n[a] == 0 { 1.0 } else { 2.0 } / dims[a];
                }
                let k = 2.0 * PI * m.frequency / air.c;
                ModeTerm {
                    k2: k * k,
                    coupling: psi_s * psi_r / mode_norm(geom, m.index),
                    wall,
                }
            })
            .collect();
        Ok(Self {
            terms,
            materials: *materials,
            air: *air,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.terms.len()
    }

    /// Pressure per unit volume velocity at `f`.
    pub fn response(&self, f: f64) -> Result<Complex64> {
        let s = self.materials.axis_admittance(f, &self.air)?;
        let k = self.air.wavenumber(f);
        let k2 = k * k;
        let jk = Complex64::new(0.0, k);
        let mut sum = Complex64::default();
        for t in &self.terms {
            let damping = s[0] * t.wall[0] + s[1] * t.wall[1] + s[2] * t.wall[2];
            sum += t.coupling / (t.k2 - k2 + jk * damping);
        }
        let omega = 2.0 * PI * f;
        Ok(Complex64::new(0.0, omega * self.air.rho) * sum)
    }
}

/// Transfer function from a unit volume-velocity monopole at `src` to the
/// pressure at `rcv`.
pub fn synth_tf_modal(
    geom: &RoomGeometry,
    materials: &SurfaceMaterials,
    src: [f64; 3],
    rcv: [f64; 3],
    air: &AirProperties,
    cfg: &ModalConfig,
    grid: &FrequencyGrid,
) -> Result<TransferFunction> {
    if !(cfg.cutoff_margin >= 1.0) {
        return Err(Error::domain(format!(
            "mode cutoff margin must be at least 1, got {}",
            cfg.cutoff_margin
        )));
    }
    let model = ModalModel::new(geom, materials, src, rcv, air, cfg.cutoff_margin * grid.stop())?;
    let values = grid.iter().map(|f| model.response(f)).collect::<Result<Vec<_>>>()?;
    let meta = TfMetadata {
        source_pos: Some(src),
        receiver_pos: Some(rcv),
        ..TfMetadata::default()
    };
    TransferFunction::new(*grid, values, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::MaterialSpec;
    use crate::room::SurfaceId;
    use crate::sim::corner_pair;
    use proptest::prelude::*;

    const AIR: AirProperties = AirProperties { c: 343.0, rho: 1.20 };

    fn room1() -> RoomGeometry {
        RoomGeometry::new(3.0, 4.5, 2.7).unwrap()
    }

    fn local_maxima(tf: &TransferFunction, below: f64) -> Vec<f64> {
        let m = tf.magnitude();
        (1..m.len() - 1)
            .filter(|&i| m[i] > m[i - 1] && m[i] >= m[i + 1] && tf.grid().freq(i) < below)
            .map(|i| tf.grid().freq(i))
            .collect()
    }

    #[test]
    fn near_rigid_peaks_sit_on_eigenfrequencies() {
        let nearly_hard = MaterialSpec::Rigid { band_alpha: [1e-4; 3] };
        let (s, r) = corner_pair(&room1(), 0.01);
        let tf = synth_tf_modal(
            &room1(),
            &SurfaceMaterials::uniform(nearly_hard),
            s,
            r,
            &AIR,
            &ModalConfig::default(),
            &FrequencyGrid::dataset(),
        )
        .unwrap();
        let peaks = local_maxima(&tf, 70.0);
        let expect = [38.111, 57.167, 63.519, 68.712];
        assert_eq!(peaks.len(), expect.len(), "{peaks:?}");
        for (p, e) in peaks.iter().zip(expect) {
            assert!((p - e).abs() <= 0.25, "{p} vs {e}");
        }
    }

    #[test]
    fn concrete_room_first_axial_peaks() {
        let (s, r) = corner_pair(&room1(), 0.05);
        let tf = synth_tf_modal(
            &room1(),
            &SurfaceMaterials::concrete(),
            s,
            r,
            &AIR,
            &ModalConfig::default(),
            &FrequencyGrid::dataset(),
        )
        .unwrap();
        let peaks = local_maxima(&tf, 66.0);
        for (p, e) in peaks.iter().zip([38.1, 57.2, 63.5]) {
            assert!((p - e).abs() <= 0.5, "{p} vs {e}");
        }
    }

    #[test]
    fn absorption_widens_and_lowers_peaks() {
        let geom = room1();
        let (s, r) = corner_pair(&geom, 0.05);
        let grid = FrequencyGrid::new(30.0, 0.05, 400).unwrap();
        let cfg = ModalConfig::default();
        let hard = synth_tf_modal(&geom, &SurfaceMaterials::concrete(), s, r, &AIR, &cfg, &grid).unwrap();
        let soft = SurfaceMaterials::concrete().with(SurfaceId::new(2).unwrap(), MaterialSpec::MATERIAL_B);
        let soft = synth_tf_modal(&geom, &soft, s, r, &AIR, &cfg, &grid).unwrap();
        let window = |tf: &TransferFunction| {
            let m = tf.magnitude();
            let i = grid.nearest_index(38.1);
            let lo = i - 40;
            let peak = m[lo..i + 40].iter().cloned().fold(0.0, f64::max);
            let above = m[lo..i + 40].iter().filter(|&&v| v >= peak / 2f64.sqrt()).count();
            (peak, above)
        };
        let (hp, hw) = window(&hard);
        let (sp, sw) = window(&soft);
        assert!(sp < hp);
        assert!(sw > hw);
    }

    #[test]
    fn rejects_bad_positions_and_margin() {
        let g = room1();
        let m = SurfaceMaterials::concrete();
        let grid = FrequencyGrid::dataset();
        let cfg = ModalConfig::default();
        assert!(synth_tf_modal(&g, &m, [0.0, 1.0, 1.0], [1.0; 3], &AIR, &cfg, &grid).is_err());
        assert!(synth_tf_modal(&g, &m, [1.0; 3], [1.0, 5.0, 1.0], &AIR, &cfg, &grid).is_err());
        let low = ModalConfig { cutoff_margin: 0.5 };
        assert!(synth_tf_modal(&g, &m, [1.0; 3], [2.0; 3], &AIR, &low, &grid).is_err());
    }

    #[test]
    fn doubling_cutoff_barely_changes_low_band() {
        let g = room1();
        let m = SurfaceMaterials::concrete().with(SurfaceId::new(1).unwrap(), MaterialSpec::MATERIAL_A);
        let (s, r) = ([0.7, 1.1, 0.9], [2.2, 3.6, 1.9]);
        let a = ModalModel::new(&g, &m, s, r, &AIR, 1.5 * 354.0).unwrap();
        let b = ModalModel::new(&g, &m, s, r, &AIR, 3.0 * 354.0).unwrap();
        assert!(b.mode_count() > a.mode_count());
        let band = FrequencyGrid::new(20.0, 0.5, 261).unwrap();
        let hb: Vec<_> = band.iter().map(|f| b.response(f).unwrap()).collect();
        let rms = (hb.iter().map(|h| h.norm_sqr()).sum::<f64>() / hb.len() as f64).sqrt();
        let worst = band
            .iter()
            .zip(&hb)
            .map(|(f, h)| (a.response(f).unwrap() - h).norm() / rms)
            .fold(0.0, f64::max);
        assert!(worst < 0.05, "{worst}");
    }

    proptest! {
        #[test]
        fn reciprocity(
            sx in 0.05f64..2.95, sy in 0.05f64..4.45, sz in 0.05f64..2.65,
            rx in 0.05f64..2.95, ry in 0.05f64..4.45, rz in 0.05f64..2.65,
            f in 1.0f64..354.0,
        ) {
            let g = room1();
            let m = SurfaceMaterials::concrete()
                .with(SurfaceId::new(4).unwrap(), MaterialSpec::MATERIAL_B);
            let a = ModalModel::new(&g, &m, [sx, sy, sz], [rx, ry, rz], &AIR, 200.0).unwrap();
            let b = ModalModel::new(&g, &m, [rx, ry, rz], [sx, sy, sz], &AIR, 200.0).unwrap();
            prop_assert_eq!(a.response(f).unwrap(), b.response(f).unwrap());
        }

        #[test]
        fn passive_walls_give_finite_response(f in 1.0f64..354.0, cfg in 0usize..4) {
            let g = room1();
            let s = SurfaceId::new(1 + cfg as u8).unwrap();
            let m = SurfaceMaterials::concrete().with(s, MaterialSpec::MATERIAL_A);
            let model = ModalModel::new(&g, &m, [0.5, 0.5, 0.5], [2.5, 4.0, 2.2], &AIR, 400.0).unwrap();
            let h = model.response(f).unwrap();
            prop_assert!(h.re.is_finite() && h.im.is_finite());
        }
    }
}
