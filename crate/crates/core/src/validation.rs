//! Self-check suites run by `roomscope validate`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::dataset::{absorption_labels, room};
use crate::error::{Error, Result};
use crate::inverse::{analyze_peaks, detect_peaks, gaussian_interpolate, restore_eigenfrequency, PeakOptions};
use crate::materials::{
    rigid_backed_impedance, surface_impedance, transfer_matrix_impedance, AbsorptionQuadrature, AllardChampoux,
    MaterialSpec, PorousModel,
};
use crate::room::{AirProperties, RoomGeometry, SurfaceId};
use crate::sim::{
    damping_from_reverberation, solve_tf_fdm, synth_single_mode, synth_tf_modal, FdmConfig, ModalConfig,
    SurfaceMaterials,
};
use crate::spectrum::{FrequencyGrid, TransferFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    ModalVsFdm,
    Restoration,
    Materials,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 4] = ["modal-vs-fdm", "restoration", "materials", "all"];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ModalVsFdm => Self::NAMES[0],
            Suite::Restoration => Self::NAMES[1],
            Suite::Materials => Self::NAMES[2],
            Suite::All => Self::NAMES[3],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Suite::ModalVsFdm, Suite::Restoration, Suite::Materials, Suite::All]
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown suite {s:?}; expected one of {}",
                    Self::NAMES.join(", ")
                ))
            })
    }
}

/// One line of a validation table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(suite: Suite, name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            suite: suite.name(),
            name: name.into(),
            value,
            relation: "<=",
            limit,
            passed: value <= limit,
        }
    }

    fn at_least(suite: Suite, name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            relation: ">=",
            passed: value >= limit,
            ..Self::at_most(suite, name, value, limit)
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<14} {:<52} {:>11.4e} {} {:<9.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.value,
            self.relation,
            self.limit
        )
    }
}

/// Runs `suite` (every suite for [`Suite::All`]).
pub fn run_suite(suite: Suite) -> Result<Vec<Check>> {
    match suite {
        Suite::ModalVsFdm => modal_vs_fdm(),
        Suite::Restoration => restoration(),
        Suite::Materials => materials(),
        Suite::All => {
            let mut out = modal_vs_fdm()?;
            out.extend(restoration()?);
            out.extend(materials()?);
            Ok(out)
        }
    }
}

/// Agreement between two transfer functions on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverComparison {
    /// Largest relative offset from a reference peak to the nearest peak of
    /// the other response.
    pub max_peak_rel: f64,
    pub peaks: usize,
    /// Largest level difference in dB over bins away from nulls.
    pub max_level_db: f64,
    pub bins: usize,
}

/// Half-width of the band excluded around a null, Hz.
pub const NULL_GUARD_HZ: f64 = 2.0;
/// Minimum depth of a dip treated as a null, dB.
pub const NULL_DEPTH_DB: f64 = 6.0;

/// Compares `other` against `reference`. Peaks come from the reference
/// (3 dB prominence); level differences skip bins within
/// [`NULL_GUARD_HZ`] of a dip at least [`NULL_DEPTH_DB`] deep in either
/// response.
pub fn compare_responses(reference: &TransferFunction, other: &TransferFunction) -> Result<SolverComparison> {
    if reference.grid() != other.grid() {
        return Err(Error::invalid("responses sit on different grids"));
    }
    let opts = PeakOptions::default();
    let peaks_ref = detect_peaks(reference, &opts);
    let peaks_other = detect_peaks(other, &opts);
    let mut max_peak_rel: f64 = 0.0;
    for p in &peaks_ref {
        let nearest = peaks_other
            .iter()
            .map(|q| (q.f_m - p.f_m).abs())
            .fold(f64::INFINITY, f64::min);
        max_peak_rel = max_peak_rel.max(nearest / p.f_m);
    }

    let grid = reference.grid();
    let mut nulls = Vec::new();
    for tf in [reference, other] {
        let inverted = TransferFunction::new(
            *grid,
            tf.values()
                .iter()
                .map(|v| Complex64::from(1.0 / v.norm().max(1e-300)))
                .collect(),
            Default::default(),
        )?;
        let dips = PeakOptions {
            min_prominence_db: NULL_DEPTH_DB,
            min_separation_hz: None,
        };
        nulls.extend(detect_peaks(&inverted, &dips).iter().map(|p| p.f_m));
    }
    let (a, b) = (reference.magnitude_db(), other.magnitude_db());
    let mut max_level_db: f64 = 0.0;
    let mut bins = 0;
    for (i, f) in grid.iter().enumerate() {
        if nulls.iter().any(|n| (f - n).abs() <= NULL_GUARD_HZ) {
            continue;
        }
        bins += 1;
        max_level_db = max_level_db.max((a[i] - b[i]).abs());
    }
    Ok(SolverComparison {
        max_peak_rel,
        peaks: peaks_ref.len(),
        max_level_db,
        bins,
    })
}

/// 2 x 2 x 2 m test room with an off-axis pair, 20 to 150 Hz.
pub struct CrossSolverFixture {
    pub geom: RoomGeometry,
    pub source: [f64; 3],
    pub receiver: [f64; 3],
    pub grid: FrequencyGrid,
    pub fdm: FdmConfig,
    pub modal: ModalConfig,
}

impl Default for CrossSolverFixture {
    fn default() -> Self {
        Self {
            geom: RoomGeometry::new(2.0, 2.0, 2.0).expect("fixture room"),
            source: [0.3, 0.4, 0.5],
            receiver: [1.7, 1.45, 1.6],
            grid: FrequencyGrid::spanning(20.0, 150.0, 0.5).expect("fixture grid"),
            fdm: FdmConfig {
                max_spacing: Some(0.05),
                ..FdmConfig::default()
            },
            modal: ModalConfig { cutoff_margin: 3.0 },
        }
    }
}

impl CrossSolverFixture {
    /// Both responses, the modal one evaluated at the FDM's snapped
    /// positions.
    pub fn solve(
        &self,
        materials: &SurfaceMaterials,
        air: &AirProperties,
    ) -> Result<(TransferFunction, TransferFunction)> {
        let fdm = solve_tf_fdm(
            &self.geom,
            materials,
            self.source,
            self.receiver,
            air,
            &self.fdm,
            &self.grid,
        )?;
        let (s, r) = (
            fdm.meta.source_pos.expect("fdm reports positions"),
            fdm.meta.receiver_pos.expect("fdm reports positions"),
        );
        let modal = synth_tf_modal(&self.geom, materials, s, r, air, &self.modal, &self.grid)?;
        Ok((modal, fdm))
    }
}

/// Material-A wall used by the cross-solver fixture.
pub fn material_a_on_wall_one() -> SurfaceMaterials {
    SurfaceMaterials::concrete().with(SurfaceId::new(1).expect("surface 1"), MaterialSpec::MATERIAL_A)
}

fn modal_vs_fdm() -> Result<Vec<Check>> {
    let s = Suite::ModalVsFdm;
    let air = AirProperties::default();
    let fixture = CrossSolverFixture::default();
    let mut out = Vec::new();
    for (label, m) in [
        ("rigid", SurfaceMaterials::concrete()),
        ("material A", material_a_on_wall_one()),
    ] {
        let (modal, fdm) = fixture.solve(&m, &air)?;
        let c = compare_responses(&modal, &fdm)?;
        out.push(Check::at_most(
            s,
            format!("{label}: peak frequency offset (rel)"),
            c.max_peak_rel,
            0.01,
        ));
        out.push(Check::at_most(
            s,
            format!("{label}: level difference off nulls (dB)"),
            c.max_level_db,
            1.5,
        ));
    }
    Ok(out)
}

fn restoration() -> Result<Vec<Check>> {
    let s = Suite::Restoration;
    let mut out = Vec::new();
    let (x, y) = gaussian_interpolate([1.0, 2.0, 3.0], [1.0, 4.0, 3.8])?;
    out.push(Check::at_most(
        s,
        "gaussian example frequency |x - 2.46|",
        (x - 2.46).abs(),
        0.005,
    ));
    out.push(Check::at_most(
        s,
        "gaussian example amplitude |y - 4.67|",
        (y - 4.67).abs(),
        0.005,
    ));

    let grid = FrequencyGrid::dataset();
    let d = damping_from_reverberation(1.0)?;
    for f0 in [38.11, 57.0, 101.3] {
        let tf = synth_single_mode(f0, d, &grid)?;
        let est = analyze_peaks(&tf, &PeakOptions::default());
        let p = est
            .iter()
            .find(|p| (p.f_m - f0).abs() < 2.0)
            .ok_or_else(|| Error::invalid(format!("no peak near {f0} Hz")))?;
        let df = p.delta_f.unwrap_or(f64::NAN);
        let df_err = ((df - 2.199) / 2.199).abs();
        out.push(Check::at_most(
            s,
            format!("T_R = 1 s at {f0} Hz: bandwidth vs 2.199 Hz (rel)"),
            df_err,
            0.02,
        ));
        let f_rest = p.f0.unwrap_or(f64::NAN);
        out.push(Check::at_most(
            s,
            format!("T_R = 1 s at {f0} Hz: restored f0 (rel)"),
            ((f_rest - f0) / f0).abs(),
            0.005,
        ));
    }
    let r = restore_eigenfrequency(38.0, 2.1987)?;
    out.push(Check::at_most(
        s,
        "restore(38, 2.1987) vs 38.0318",
        (r - 38.0318).abs(),
        1e-4,
    ));
    Ok(out)
}

fn materials() -> Result<Vec<Check>> {
    let s = Suite::Materials;
    let air = AirProperties::default();
    let grid = FrequencyGrid::dataset();
    let quad = AbsorptionQuadrature::default();
    let wall = room(1)?.surface_dims(SurfaceId::new(1)?);
    let mut out = Vec::new();
    for (label, m) in [("A", MaterialSpec::MATERIAL_A), ("B", MaterialSpec::MATERIAL_B)] {
        let MaterialSpec::Porous {
            thickness_m,
            flow_resistivity,
        } = m
        else {
            unreachable!("porous fixtures")
        };
        let mut min_re: f64 = f64::INFINITY;
        let mut min_alpha: f64 = f64::INFINITY;
        let mut max_tm: f64 = 0.0;
        for f in grid.iter() {
            let zs = surface_impedance(&m, f, &air)?;
            min_re = min_re.min(zs.re);
            min_alpha = min_alpha.min(quad.alpha_for_impedance(zs, wall, f, &air)?);
            let props = AllardChampoux.characteristic(flow_resistivity, f, &air)?;
            let rigid = rigid_backed_impedance(&props, thickness_m);
            let tm = transfer_matrix_impedance(&props, thickness_m, Complex64::from(1e9 * air.impedance()));
            max_tm = max_tm.max((rigid - tm).norm() / tm.norm());
        }
        out.push(Check::at_least(
            s,
            format!("material {label}: min Re Zs over grid (Pa s/m)"),
            min_re,
            0.0,
        ));
        out.push(Check::at_least(
            s,
            format!("material {label}: min alpha over grid"),
            min_alpha,
            0.0,
        ));
        out.push(Check::at_most(
            s,
            format!("material {label}: rigid vs transfer matrix (rel)"),
            max_tm,
            1e-4,
        ));
    }
    let y = absorption_labels(&room(1)?, &SurfaceMaterials::concrete(), &air, &quad)?;
    let dev = y
        .chunks(3)
        .flat_map(|c| c.iter().zip([0.029, 0.048, 0.043]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    out.push(Check::at_most(
        s,
        "concrete band labels vs [0.029, 0.048, 0.043]",
        dev,
        0.0,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for n in Suite::NAMES {
            assert_eq!(n.parse::<Suite>().unwrap().name(), n);
        }
        assert!("fdm".parse::<Suite>().is_err());
    }

    #[test]
    fn comparison_of_identical_responses() {
        let grid = FrequencyGrid::dataset();
        let tf = synth_single_mode(60.0, 5.0, &grid).unwrap();
        let c = compare_responses(&tf, &tf).unwrap();
        assert_eq!((c.max_peak_rel, c.max_level_db, c.peaks), (0.0, 0.0, 1));
        let louder = tf.scaled(Complex64::from(2.0)).unwrap();
        let c = compare_responses(&tf, &louder).unwrap();
        assert!((c.max_level_db - 20.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn restoration_suite_passes() {
        assert!(run_suite(Suite::Restoration).unwrap().iter().all(|c| c.passed));
    }
}
