//! Boundary materials: porous layers on a rigid backing and concrete.
//!
//! Porous layers get a frequency-dependent surface impedance from an
//! empirical equivalent-fluid model; absorption labels are size-corrected
//! random-incidence coefficients evaluated with the azimuth-averaged
//! radiation impedance of the finite surface.

mod porous;
mod radiation;

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use porous::{
    rigid_backed_impedance, transfer_matrix_impedance, AllardChampoux, CharacteristicProps, DelanyBazley, PorousModel,
};
pub use radiation::{covariogram, CovariogramIntegral, RadiationKernel, RadiationModel};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::room::AirProperties;
use crate::spectrum::FrequencyGrid;

/// Upper end of the elevation integral; grazing incidence is clipped.
pub const THETA_MAX: f64 = FRAC_PI_2 - 1e-3;

/// Absorption coefficients above this are reported as implausible.
pub const ALPHA_PLAUSIBLE_MAX: f64 = 1.2;

/// Octave bands carried by the absorption labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OctaveBand {
    B63,
    B125,
    B250,
}

impl OctaveBand {
    pub const ALL: [OctaveBand; 3] = [OctaveBand::B63, OctaveBand::B125, OctaveBand::B250];

    pub fn center(self) -> f64 {
        match self {
            OctaveBand::B63 => 63.0,
            OctaveBand::B125 => 125.0,
            OctaveBand::B250 => 250.0,
        }
    }

    pub fn from_center(center: f64) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.center() == center)
            .ok_or_else(|| Error::domain(format!("no octave band centred at {center} Hz")))
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Band edges `[center/√2, center·√2]`.
    pub fn edges(self) -> (f64, f64) {
        (self.center() / SQRT_2, self.center() * SQRT_2)
    }

    /// Band whose value applies at `f`; frequencies below the lowest band
    /// use 63 Hz and above the highest use 250 Hz.
    pub fn governing(f: f64) -> Self {
        if f < OctaveBand::B63.edges().1 {
            OctaveBand::B63
        } else if f < OctaveBand::B125.edges().1 {
            OctaveBand::B125
        } else {
            OctaveBand::B250
        }
    }
}

impl fmt::Display for OctaveBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Hz", self.center())
    }
}

/// Wall construction of one surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MaterialSpec {
    /// Porous layer directly on a rigid backing.
    Porous {
        thickness_m: f64,
        /// N·s/m⁴
        flow_resistivity: f64,
    },
    /// Hard wall described by tabulated octave-band absorption (63/125/250 Hz).
    Rigid { band_alpha: [f64; 3] },
}

impl MaterialSpec {
    /// 40 mm glass wool, σ = 47 000 N·s/m⁴.
    pub const MATERIAL_A: MaterialSpec = MaterialSpec::Porous {
        thickness_m: 0.04,
        flow_resistivity: 47_000.0,
    };

    /// 100 mm glass wool, σ = 109 000 N·s/m⁴.
    pub const MATERIAL_B: MaterialSpec = MaterialSpec::Porous {
        thickness_m: 0.10,
        flow_resistivity: 109_000.0,
    };

    pub const CONCRETE: MaterialSpec = MaterialSpec::Rigid {
        band_alpha: [0.029, 0.048, 0.043],
    };

    /// Perfectly reflecting wall (zero admittance).
    pub const HARD: MaterialSpec = MaterialSpec::Rigid { band_alpha: [0.0; 3] };

    pub fn validate(&self) -> Result<()> {
        match *self {
            MaterialSpec::Porous {
                thickness_m,
                flow_resistivity,
            } => {
                if !(thickness_m > 0.0 && thickness_m.is_finite()) {
                    return Err(Error::domain(format!(
                        "porous layer thickness must be positive, got {thickness_m}"
                    )));
                }
                if !(flow_resistivity > 0.0 && flow_resistivity.is_finite()) {
                    return Err(Error::domain(format!(
                        "flow resistivity must be positive, got {flow_resistivity}"
                    )));
                }
            }
            MaterialSpec::Rigid { band_alpha } => {
                if band_alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
                    return Err(Error::domain(format!(
                        "band absorption coefficients must lie in [0, 1], got {band_alpha:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_porous(&self) -> bool {
        matches!(self, MaterialSpec::Porous { .. })
    }

    /// Specific (ρc-normalised) wall admittance β = ρc / Zs.
    ///
    /// Rigid walls carry a real admittance `α_band / 8`, the small-admittance
    /// inverse of the random-incidence relation α ≈ 8 Re β.
    pub fn specific_admittance(&self, f: f64, air: &AirProperties) -> Result<Complex64> {
        match *self {
            MaterialSpec::Porous { .. } => {
                let zs = surface_impedance(self, f, air)?;
                Ok(air.impedance() / zs)
            }
            MaterialSpec::Rigid { band_alpha } => {
                Ok(Complex64::from(band_alpha[OctaveBand::governing(f).index()] / 8.0))
            }
        }
    }
}

/// Surface impedance (Pa·s/m) of a porous layer on a rigid backing, using the
/// Allard–Champoux model.
pub fn surface_impedance(mat: &MaterialSpec, f: f64, air: &AirProperties) -> Result<Complex64> {
    surface_impedance_with(&AllardChampoux, mat, f, air)
}

pub fn surface_impedance_with(
    model: &dyn PorousModel,
    mat: &MaterialSpec,
    f: f64,
    air: &AirProperties,
) -> Result<Complex64> {
    match *mat {
        MaterialSpec::Porous {
            thickness_m,
            flow_resistivity,
        } => {
            if thickness_m <= 0.0 {
                return Err(Error::domain(format!(
                    "porous layer thickness must be positive, got {thickness_m}"
                )));
            }
            let props = model.characteristic(flow_resistivity, f, air)?;
            Ok(rigid_backed_impedance(&props, thickness_m))
        }
        MaterialSpec::Rigid { .. } => Err(Error::invalid("surface impedance is defined for porous layers only")),
    }
}

/// Azimuth-averaged radiation impedance of a finite surface (Pa·s/m).
pub fn radiation_impedance_avg(dims: (f64, f64), theta: f64, f: f64, air: &AirProperties) -> Result<Complex64> {
    CovariogramIntegral::default().average_impedance(dims, theta, f, air)
}

/// Elevation quadrature for the size-corrected absorption coefficient.
#[derive(Debug, Clone)]
pub struct AbsorptionQuadrature {
    rule: GaussLegendre,
    check: Option<GaussLegendre>,
    radiation: CovariogramIntegral,
}

impl AbsorptionQuadrature {
    /// Relative change tolerated between the order-n and order-2n results.
    pub const SELF_CHECK_TOL: f64 = 1e-3;

    pub fn new(order: usize, self_check: bool) -> Self {
        Self {
            rule: GaussLegendre::new(order),
            check: self_check.then(|| GaussLegendre::new(2 * order)),
            radiation: CovariogramIntegral::default(),
        }
    }

    pub fn order(&self) -> usize {
        self.rule.order()
    }

    fn integrate(rule: &GaussLegendre, zs: Complex64, kernel: &RadiationKernel, rho_c: f64) -> Result<f64> {
        let zs = zs / rho_c;
        let mut acc = 0.0;
        for (theta, w) in rule.mapped(0.0, THETA_MAX) {
            let zr = kernel.at(theta)? / rho_c;
            acc += w * 4.0 * zs.re / (zs + zr).norm_sqr() * theta.sin();
        }
        Ok(2.0 * acc)
    }

    /// Size-corrected random-incidence absorption for a given surface
    /// impedance (Pa·s/m).
    pub fn alpha_for_impedance(&self, zs: Complex64, dims: (f64, f64), f: f64, air: &AirProperties) -> Result<f64> {
        let kernel = self.radiation.kernel(dims, f, air)?;
        let rho_c = air.impedance();
        let alpha = Self::integrate(&self.rule, zs, &kernel, rho_c)?;
        if let Some(check) = &self.check {
            let fine = Self::integrate(check, zs, &kernel, rho_c)?;
            let change = (fine - alpha).abs() / fine.abs().max(1e-12);
            if change > Self::SELF_CHECK_TOL {
                return Err(Error::Numerical {
                    message: format!(
                        "absorption quadrature not converged at {f} Hz: order {} gives {alpha}, order {} gives {fine}",
                        self.rule.order(),
                        check.order()
                    ),
                    residual: change,
                });
            }
        }
        if alpha > ALPHA_PLAUSIBLE_MAX {
            log::warn!("size-corrected alpha {alpha:.3} at {f} Hz exceeds {ALPHA_PLAUSIBLE_MAX}");
        }
        Ok(alpha)
    }

    pub fn size_corrected_alpha(
        &self,
        mat: &MaterialSpec,
        dims: (f64, f64),
        f: f64,
        air: &AirProperties,
    ) -> Result<f64> {
        match *mat {
            MaterialSpec::Rigid { band_alpha } => Ok(band_alpha[OctaveBand::governing(f).index()]),
            MaterialSpec::Porous { .. } => {
                let zs = surface_impedance(mat, f, air)?;
                self.alpha_for_impedance(zs, dims, f, air)
            }
        }
    }

    /// Mean of the size-corrected coefficient over the points of `grid` that
    /// fall inside the octave band.
    pub fn band_average_alpha(
        &self,
        mat: &MaterialSpec,
        dims: (f64, f64),
        band: OctaveBand,
        grid: &FrequencyGrid,
        air: &AirProperties,
    ) -> Result<f64> {
        if let MaterialSpec::Rigid { band_alpha } = *mat {
            return Ok(band_alpha[band.index()]);
        }
        let (lo, hi) = band.edges();
        let freqs: Vec<f64> = grid.iter().filter(|f| (lo..=hi).contains(f)).collect();
        if freqs.is_empty() {
            return Err(Error::invalid(format!("no grid points inside the {band} band")));
        }
        let mut sum = 0.0;
        for &f in &freqs {
            sum += self.size_corrected_alpha(mat, dims, f, air)?;
        }
        Ok(sum / freqs.len() as f64)
    }
}

impl Default for AbsorptionQuadrature {
    fn default() -> Self {
        Self::new(64, true)
    }
}

/// Size-corrected random-incidence absorption coefficient with the default
/// quadrature (64 Gauss nodes in θ, doubled-order self-check).
pub fn size_corrected_alpha(mat: &MaterialSpec, dims: (f64, f64), f: f64, air: &AirProperties) -> Result<f64> {
    AbsorptionQuadrature::default().size_corrected_alpha(mat, dims, f, air)
}

/// Band mean of [`size_corrected_alpha`] over the dataset grid.
pub fn band_average_alpha(mat: &MaterialSpec, dims: (f64, f64), band: OctaveBand, air: &AirProperties) -> Result<f64> {
    AbsorptionQuadrature::default().band_average_alpha(mat, dims, band, &FrequencyGrid::dataset(), air)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const AIR: AirProperties = AirProperties { c: 343.0, rho: 1.20 };

    #[test]
    fn json_schema() {
        let a: MaterialSpec =
            serde_json::from_str(r#"{"kind": "porous", "thickness_m": 0.04, "flow_resistivity": 47000}"#).unwrap();
        assert_eq!(a, MaterialSpec::MATERIAL_A);
        let c: MaterialSpec =
            serde_json::from_str(r#"{"kind": "rigid", "band_alpha": [0.029, 0.048, 0.043]}"#).unwrap();
        assert_eq!(c, MaterialSpec::CONCRETE);
        assert!(serde_json::from_str::<MaterialSpec>(
            r#"{"kind": "rigid", "band_alpha": [0.1, 0.1, 0.1], "colour": "grey"}"#
        )
        .is_err());
    }

    #[test]
    fn validation() {
        assert!(MaterialSpec::MATERIAL_B.validate().is_ok());
        let bad = MaterialSpec::Porous {
            thickness_m: 0.0,
            flow_resistivity: 1e4,
        };
        assert!(bad.validate().is_err());
        assert!(surface_impedance(&bad, 100.0, &AIR).is_err());
        assert!(MaterialSpec::Rigid {
            band_alpha: [0.1, 1.5, 0.1]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn band_edges_and_governing_band() {
        let (lo, hi) = OctaveBand::B125.edges();
        assert_relative_eq!(lo, 88.388, epsilon = 1e-3);
        assert_relative_eq!(hi, 176.777, epsilon = 1e-3);
        assert_eq!(OctaveBand::governing(1.0), OctaveBand::B63);
        assert_eq!(OctaveBand::governing(100.0), OctaveBand::B125);
        assert_eq!(OctaveBand::governing(354.0), OctaveBand::B250);
    }

    #[test]
    fn concrete_band_values_are_exact() {
        let dims = (4.5, 2.7);
        for (band, expect) in OctaveBand::ALL.into_iter().zip([0.029, 0.048, 0.043]) {
            assert_eq!(
                band_average_alpha(&MaterialSpec::CONCRETE, dims, band, &AIR).unwrap(),
                expect
            );
        }
    }

    #[test]
    fn alpha_vanishes_for_rigid_impedance() {
        let q = AbsorptionQuadrature::default();
        let a = q
            .alpha_for_impedance(Complex64::new(1e9, -1e9), (4.5, 2.7), 125.0, &AIR)
            .unwrap();
        assert!(a < 1e-5);
    }

    #[test]
    fn thicker_layer_absorbs_more_at_63_hz() {
        let dims = (4.5, 2.7);
        let a = size_corrected_alpha(&MaterialSpec::MATERIAL_A, dims, 63.0, &AIR).unwrap();
        let b = size_corrected_alpha(&MaterialSpec::MATERIAL_B, dims, 63.0, &AIR).unwrap();
        // tests/oracles/materials_oracle.py
        assert_relative_eq!(a, 0.06753396193361486, max_relative = 1e-4);
        assert_relative_eq!(b, 0.43401822418141467, max_relative = 1e-4);
        assert!(b > a);
    }

    #[test]
    fn quadrature_self_convergence() {
        let coarse = AbsorptionQuadrature::new(64, false);
        let fine = AbsorptionQuadrature::new(1024, false);
        for mat in [MaterialSpec::MATERIAL_A, MaterialSpec::MATERIAL_B] {
            for f in [20.0, 63.0, 250.0, 354.0] {
                let a = coarse.size_corrected_alpha(&mat, (4.5, 2.7), f, &AIR).unwrap();
                let b = fine.size_corrected_alpha(&mat, (4.5, 2.7), f, &AIR).unwrap();
                assert!((a - b).abs() / b < 1e-3, "{f} Hz: {a} vs {b}");
            }
        }
    }

    #[test]
    fn alpha_swap_invariant() {
        let q = AbsorptionQuadrature::new(64, false);
        for f in [40.0, 180.0] {
            let a = q
                .size_corrected_alpha(&MaterialSpec::MATERIAL_A, (5.0, 3.0), f, &AIR)
                .unwrap();
            let b = q
                .size_corrected_alpha(&MaterialSpec::MATERIAL_A, (3.0, 5.0), f, &AIR)
                .unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn band_average_golden_material_a_250() {
        // tests/oracles/materials_oracle.py
        let v = band_average_alpha(&MaterialSpec::MATERIAL_A, (4.5, 2.7), OctaveBand::B250, &AIR).unwrap();
        assert_relative_eq!(v, 0.7145837924320687, max_relative = 1e-4);
    }

    #[test]
    fn rigid_admittance_from_band_alpha() {
        let b = MaterialSpec::CONCRETE.specific_admittance(100.0, &AIR).unwrap();
        assert_eq!(b, Complex64::from(0.048 / 8.0));
        assert_eq!(
            MaterialSpec::HARD.specific_admittance(100.0, &AIR).unwrap(),
            Complex64::from(0.0)
        );
        let a = MaterialSpec::MATERIAL_A.specific_admittance(100.0, &AIR).unwrap();
        assert!(a.re > 0.0);
    }
}
