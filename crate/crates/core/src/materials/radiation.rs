//! Azimuth-averaged radiation impedance of a baffled rectangular surface
//! driven by an oblique plane-wave trace.
//!
//! For a panel `a × b` the average over the azimuth of the trace direction
//! turns the four-fold surface integral into
//!
//! ```text
//! Z̄r / ρc = jk / (2π S) ∫₀^D K(r) e^{-jkr} J0(k sinθ r) dr
//! ```
//!
//! where `K(r) = ∫₀^{2π} (a − |r cosψ|)₊ (b − |r sinψ|)₊ dψ` is the
//! isotropised covariogram of the rectangle (closed form, piecewise in `r`),
//! and `D` the panel diagonal.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::room::AirProperties;
use crate::special::bessel_j0;

/// Elevation angles at or beyond this are treated as grazing.
pub const GRAZING_LIMIT: f64 = FRAC_PI_2;

/// Azimuth-averaged radiation impedance model.
pub trait RadiationModel: Send + Sync {
    /// Z̄r in Pa·s/m for panel `dims` (m), elevation `theta` (rad) and
    /// frequency `f` (Hz).
    fn average_impedance(&self, dims: (f64, f64), theta: f64, f: f64, air: &AirProperties) -> Result<Complex64>;
}

/// Numerical evaluation of the covariogram integral.
#[derive(Debug, Clone)]
pub struct CovariogramIntegral {
    rule: GaussLegendre,
}

impl Default for CovariogramIntegral {
    fn default() -> Self {
        Self {
            rule: GaussLegendre::new(16),
        }
    }
}

impl CovariogramIntegral {
    /// Precomputes the θ-independent part of the integral for one panel and
    /// frequency. Evaluating many elevation angles through the kernel is the
    /// fast path used by the absorption integral.
    pub fn kernel(&self, dims: (f64, f64), f: f64, air: &AirProperties) -> Result<RadiationKernel> {
        let (a, b) = dims;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::domain(format!(
                "panel dimensions must be positive, got {dims:?}"
            )));
        }
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::domain(format!("frequency must be positive, got {f}")));
        }
        let k = air.wavenumber(f);
        let diag = a.hypot(b);
        let half_wave = PI / k;
        let mut nodes = Vec::new();
        let breaks = [0.0, a.min(b), a.max(b), diag];
        for seg in breaks.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            if hi - lo <= 0.0 {
                continue;
            }
            let pieces = ((hi - lo) / half_wave).ceil().max(1.0) as usize;
            let step = (hi - lo) / pieces as f64;
            for p in 0..pieces {
                let p_lo = lo + p as f64 * step;
                for (r, w) in self.rule.mapped(p_lo, p_lo + step) {
                    let weight = w * covariogram(a, b, r) * Complex64::from_polar(1.0, -k * r);
                    nodes.push((r, weight));
                }
            }
        }
        let prefactor = Complex64::new(0.0, k / (2.0 * PI * a * b)) * air.impedance();
        Ok(RadiationKernel { k, prefactor, nodes })
    }
}

impl RadiationModel for CovariogramIntegral {
    fn average_impedance(&self, dims: (f64, f64), theta: f64, f: f64, air: &AirProperties) -> Result<Complex64> {
        self.kernel(dims, f, air)?.at(theta)
    }
}

/// θ-independent part of the radiation integral for one panel/frequency.
#[derive(Debug, Clone)]
pub struct RadiationKernel {
    k: f64,
    prefactor: Complex64,
    nodes: Vec<(f64, Complex64)>,
}

impl RadiationKernel {
    /// Z̄r (Pa·s/m) at elevation `theta`.
    pub fn at(&self, theta: f64) -> Result<Complex64> {
        if !(0.0..GRAZING_LIMIT).contains(&theta) {
            return Err(Error::domain(format!(
                "elevation angle must lie in [0, π/2), got {theta}"
            )));
        }
        let mu = self.k * theta.sin();
        let sum: Complex64 = self.nodes.iter().map(|&(r, w)| w * bessel_j0(mu * r)).sum();
        Ok(self.prefactor * sum)
    }
}

/// `∫₀^{2π} (a − |r cosψ|)₊ (b − |r sinψ|)₊ dψ`.
pub fn covariogram(a: f64, b: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 2.0 * PI * a * b;
    }
    // integrand non-zero for ψ in (acos(min(1, a/r)), asin(min(1, b/r)))
    let lo = (a / r).min(1.0).acos();
    let hi = (b / r).min(1.0).asin();
    if hi <= lo {
        return 0.0;
    }
    let anti = |p: f64| {
        let s = p.sin();
        a * b * p + a * r * p.cos() - b * r * s + 0.5 * r * r * s * s
    };
    (4.0 * (anti(hi) - anti(lo))).max(0.0)
}
