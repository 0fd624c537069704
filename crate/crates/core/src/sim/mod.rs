//! Forward models: modal summation, finite differences, source spectra.

mod correction;
mod fdm;
pub mod linsolve;
mod modal;
mod sdof;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use correction::{apply_source_correction, CorrectionTable, SpectralCorrection};
pub use fdm::{solve_tf_fdm, FdmGrid};
pub use modal::{synth_tf_modal, ModalModel};
pub use sdof::{damping_from_reverberation, synth_single_mode};

use crate::error::{Error, Result};
use crate::materials::MaterialSpec;
use crate::room::{AirProperties, RoomGeometry, SurfaceId};

/// Material of each of the six boundary surfaces, indexed by surface id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceMaterials([MaterialSpec; 6]);

impl SurfaceMaterials {
    pub fn uniform(m: MaterialSpec) -> Self {
        Self([m; 6])
    }

    /// Concrete everywhere.
    pub fn concrete() -> Self {
        Self::uniform(MaterialSpec::CONCRETE)
    }

    pub fn with(mut self, surface: SurfaceId, m: MaterialSpec) -> Self {
        self.0[surface.index()] = m;
        self
    }

    pub fn get(&self, surface: SurfaceId) -> &MaterialSpec {
        &self.0[surface.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (SurfaceId, &MaterialSpec)> {
        SurfaceId::all().map(move |s| (s, &self.0[s.index()]))
    }

    pub fn validate(&self) -> Result<()> {
        for (s, m) in self.iter() {
            m.validate()
                .map_err(|e| Error::domain(format!("surface {}: {e}", s.get())))?;
        }
        Ok(())
    }

    /// Specific admittance of every surface at `f`; rejects active walls.
    pub fn admittances(&self, f: f64, air: &AirProperties) -> Result<[Complex64; 6]> {
        let mut out = [Complex64::default(); 6];
        for (s, m) in self.iter() {
            let beta = m.specific_admittance(f, air)?;
            if !(beta.re >= 0.0) {
                return Err(Error::invalid(format!(
                    "surface {} is not passive at {f} Hz (admittance {beta})",
                    s.get()
                )));
            }
            out[s.index()] = beta;
        }
        Ok(out)
    }

    /// Admittance sums of the two walls normal to each axis.
    pub(crate) fn axis_admittance(&self, f: f64, air: &AirProperties) -> Result<[Complex64; 3]> {
        let b = self.admittances(f, air)?;
        let mut out = [Complex64::default(); 3];
        for s in SurfaceId::all() {
            out[s.plane().axis.index()] += b[s.index()];
        }
        Ok(out)
    }
}

impl Serialize for SurfaceMaterials {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, MaterialSpec> = self.iter().map(|(s, m)| (s.get().to_string(), *m)).collect();
        map.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SurfaceMaterials {
    /// Object keyed "1".."6"; every surface must be present.
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let map = BTreeMap::<String, MaterialSpec>::deserialize(de)?;
        let mut out = [None; 6];
        for (k, m) in map {
            let id: u8 = k
                .parse()
                .map_err(|_| D::Error::custom(format!("surface key {k:?} is not 1..6")))?;
            let s = SurfaceId::new(id).map_err(D::Error::custom)?;
            out[s.index()] = Some(m);
        }
        let mut specs = [MaterialSpec::CONCRETE; 6];
        for (i, m) in out.into_iter().enumerate() {
            specs[i] = m.ok_or_else(|| D::Error::custom(format!("surface {} has no material", i + 1)))?;
        }
        Ok(Self(specs))
    }
}

/// Modal solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModalConfig {
    /// Modes up to `cutoff_margin · f_max` are summed.
    pub cutoff_margin: f64,
}

impl Default for ModalConfig {
    fn default() -> Self {
        Self { cutoff_margin: 1.5 }
    }
}

/// Finite-difference solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdmConfig {
    /// Grid points per wavelength at the highest solved frequency.
    pub points_per_wavelength: f64,
    /// Optional upper bound on the grid spacing, m.
    pub max_spacing: Option<f64>,
    /// Relative residual target of the iterative solver.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FdmConfig {
    fn default() -> Self {
        Self {
            points_per_wavelength: 10.0,
            max_spacing: None,
            tolerance: 1e-8,
            max_iterations: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub modal: ModalConfig,
    pub fdm: FdmConfig,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.modal.cutoff_margin >= 1.0) {
            return Err(Error::domain(format!(
                "mode cutoff margin must be at least 1, got {}",
                self.modal.cutoff_margin
            )));
        }
        if !(self.fdm.points_per_wavelength >= 6.0) {
            return Err(Error::domain(format!(
                "points per wavelength must be at least 6, got {}",
                self.fdm.points_per_wavelength
            )));
        }
        if let Some(h) = self.fdm.max_spacing {
            if !(h > 0.0) {
                return Err(Error::domain(format!("grid spacing must be positive, got {h}")));
            }
        }
        if !(self.fdm.tolerance > 0.0 && self.fdm.tolerance < 1.0) {
            return Err(Error::domain(format!(
                "solver tolerance must lie in (0, 1), got {}",
                self.fdm.tolerance
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_inside(geom: &RoomGeometry, p: [f64; 3], what: &str) -> Result<()> {
    if !geom.contains_strictly(p) {
        return Err(Error::domain(format!(
            "{what} position {p:?} is not strictly inside the room {geom}"
        )));
    }
    Ok(())
}

/// Source and receiver near opposite trihedral corners, `inset` metres from
/// each wall.
pub fn corner_pair(geom: &RoomGeometry, inset: f64) -> ([f64; 3], [f64; 3]) {
    let d = geom.dims();
    ([inset; 3], [d[0] - inset, d[1] - inset, d[2] - inset])
}
