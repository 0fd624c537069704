//! Empirical models for rigid-frame fibrous layers.
//!
//! Both models return the characteristic impedance `z_m` and propagation
//! constant `γ = jk` of the equivalent fluid under the e^{+jωt} convention,
//! so a lossy layer has `Re γ > 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::room::AirProperties;

/// Static pressure used by the Allard–Champoux bulk modulus, Pa.
const STATIC_PRESSURE: f64 = 101_320.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicProps {
    /// Characteristic impedance, Pa·s/m.
    pub z_m: Complex64,
    /// Propagation constant, 1/m.
    pub gamma: Complex64,
}

/// Equivalent-fluid model of a porous layer parameterised by flow resistivity.
pub trait PorousModel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Characteristic properties at frequency `f` (Hz) for flow resistivity
    /// `sigma` (N·s/m⁴).
    fn characteristic(&self, sigma: f64, f: f64, air: &AirProperties) -> Result<CharacteristicProps>;
}

fn check_args(sigma: f64, f: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("flow resistivity must be positive, got {sigma}")));
    }
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::domain(format!("frequency must be positive, got {f}")));
    }
    Ok(())
}

/// Allard & Champoux (1992) dynamic density and bulk modulus for fibrous
/// materials, in terms of `X = f / σ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct AllardChampoux;

impl PorousModel for AllardChampoux {
    fn name(&self) -> &'static str {
        "allard-champoux"
    }

    fn characteristic(&self, sigma: f64, f: f64, air: &AirProperties) -> Result<CharacteristicProps> {
        check_args(sigma, f)?;
        let x = f / sigma;
        let j = Complex64::i();
        let density = air.rho + (Complex64::new(-0.0364 / (x * x), -0.1144 / x)).sqrt();
        let root = Complex64::new(2.82 / (x * x), 24.9 / x).sqrt();
        let bulk = STATIC_PRESSURE * (j * 29.64 + root) / (j * 21.17 + root);
        let z_m = (density * bulk).sqrt();
        let k = 2.0 * PI * f * (density / bulk).sqrt();
        Ok(oriented(z_m, j * k))
    }
}

/// Delany & Bazley (1970) power laws in `X = ρ f / σ`; kept as a cross-check
/// family for the default model.
#[derive(Debug, Clone, Copy, Default)]
pub struct DelanyBazley;

impl PorousModel for DelanyBazley {
    fn name(&self) -> &'static str {
        "delany-bazley"
    }

    fn characteristic(&self, sigma: f64, f: f64, air: &AirProperties) -> Result<CharacteristicProps> {
        check_args(sigma, f)?;
        let x = air.rho * f / sigma;
        let z_m = air.impedance() * Complex64::new(1.0 + 0.0571 * x.powf(-0.754), -0.087 * x.powf(-0.732));
        let k = air.wavenumber(f) * Complex64::new(1.0 + 0.0978 * x.powf(-0.700), -0.189 * x.powf(-0.595));
        Ok(oriented(z_m, Complex64::i() * k))
    }
}

// Picks the square-root branch with decaying propagation into the layer.
fn oriented(z_m: Complex64, gamma: Complex64) -> CharacteristicProps {
    let z_m = if z_m.re < 0.0 { -z_m } else { z_m };
    let gamma = if gamma.re < 0.0 { -gamma } else { gamma };
    CharacteristicProps { z_m, gamma }
}

/// Surface impedance of a layer of thickness `h` in front of a backing of
/// impedance `z_c` (transfer-matrix form).
pub fn transfer_matrix_impedance(props: &CharacteristicProps, h: f64, z_c: Complex64) -> Complex64 {
    let gh = props.gamma * h;
    let (ch, sh) = (gh.cosh(), gh.sinh());
    let z_m = props.z_m;
    z_m * (z_c * ch + z_m * sh) / (z_c * sh + z_m * ch)
}

/// Rigid-backing limit of [`transfer_matrix_impedance`]: `z_m coth(γh)`.
pub fn rigid_backed_impedance(props: &CharacteristicProps, h: f64) -> Complex64 {
    let gh = props.gamma * h;
    // coth written via e^{-2γh} to stay finite for thick, lossy layers
    let e = (-2.0 * gh).exp();
    props.z_m * (1.0 + e) / (1.0 - e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const AIR: AirProperties = AirProperties { c: 343.0, rho: 1.20 };

    #[test]
    fn allard_champoux_matches_oracle() {
        // tests/oracles/materials_oracle.py
        let p = AllardChampoux.characteristic(47_000.0, 125.0, &AIR).unwrap();
        assert_relative_eq!(p.z_m.re, 1939.6352439953728, max_relative = 1e-10);
        assert_relative_eq!(p.z_m.im, -1874.2565385370083, max_relative = 1e-10);
        assert_relative_eq!(p.gamma.re, 14.718187512255872, max_relative = 1e-10);
        assert_relative_eq!(p.gamma.im, 14.829388572329679, max_relative = 1e-10);
    }

    #[test]
    fn dilute_limit_approaches_air() {
        let f = 2000.0;
        for model in [&AllardChampoux as &dyn PorousModel, &DelanyBazley] {
            // ρ f / σ ≈ 240
            let p = model.characteristic(10.0, f, &AIR).unwrap();
            let zrel = (p.z_m - AIR.impedance()).norm() / AIR.impedance();
            let k0 = Complex64::new(0.0, AIR.wavenumber(f));
            let grel = (p.gamma - k0).norm() / k0.norm();
            assert!(zrel < 0.05, "{}: z_m off by {zrel}", model.name());
            assert!(grel < 0.05, "{}: gamma off by {grel}", model.name());
        }
    }

    #[test]
    fn passive_orientation() {
        for model in [&AllardChampoux as &dyn PorousModel, &DelanyBazley] {
            for sigma in [5e3, 4.7e4, 1.09e5, 5e5] {
                for f in [1.0, 10.0, 63.0, 354.0, 4000.0] {
                    let p = model.characteristic(sigma, f, &AIR).unwrap();
                    assert!(p.gamma.re > 0.0 && p.z_m.re > 0.0);
                }
            }
        }
    }

    #[test]
    fn gamma_grows_with_flow_resistivity() {
        let mut last = 0.0;
        for i in 0..=90 {
            let sigma = 1e4 + i as f64 * 1e3;
            let g = AllardChampoux.characteristic(sigma, 125.0, &AIR).unwrap().gamma.norm();
            assert!(g > last);
            last = g;
        }
    }

    #[test]
    fn rejects_zero_frequency() {
        assert!(AllardChampoux.characteristic(47_000.0, 0.0, &AIR).is_err());
        assert!(AllardChampoux.characteristic(0.0, 10.0, &AIR).is_err());
    }

    #[test]
    fn rigid_limit_of_transfer_matrix() {
        let p = AllardChampoux.characteristic(47_000.0, 125.0, &AIR).unwrap();
        let rigid = rigid_backed_impedance(&p, 0.04);
        let tm = transfer_matrix_impedance(&p, 0.04, Complex64::from(1e9 * AIR.impedance()));
        assert!((rigid - tm).norm() / rigid.norm() < 1e-4);
        assert_relative_eq!(rigid.re, 793.0712214603248, max_relative = 1e-9);
        assert_relative_eq!(rigid.im, -3246.2589973152953, max_relative = 1e-9);
    }

    #[test]
    fn thick_layer_tends_to_characteristic_impedance() {
        let p = AllardChampoux.characteristic(47_000.0, 125.0, &AIR).unwrap();
        let z = rigid_backed_impedance(&p, 5.0);
        assert!((z - p.z_m).norm() / p.z_m.norm() < 1e-9);
    }

    #[test]
    fn thin_layer_diverges() {
        let p = AllardChampoux.characteristic(47_000.0, 125.0, &AIR).unwrap();
        let a = rigid_backed_impedance(&p, 1e-3).norm();
        let b = rigid_backed_impedance(&p, 1e-6).norm();
        assert!(b > 100.0 * a);
    }
}
