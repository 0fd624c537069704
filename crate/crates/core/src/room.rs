//! Shoebox geometry, air, and the rigid-wall modal basis.
//!
//! Axis naming follows the room tables: length along x, width along y,
//! height along z. Mode shapes are the rigid-wall cosine eigenfunctions
//! `cos(nx π x / Lx) · cos(ny π y / Ly) · cos(nz π z / Lz)`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of sound and density of air.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirProperties {
    /// Speed of sound, m/s.
    pub c: f64,
    /// Density, kg/m³.
    pub rho: f64,
}

impl AirProperties {
    pub fn new(c: f64, rho: f64) -> Result<Self> {
        let air = Self { c, rho };
        air.validate()?;
        Ok(air)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite() && self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::domain(format!(
                "air properties must be positive (c = {}, rho = {})",
                self.c, self.rho
            )));
        }
        Ok(())
    }

    /// Characteristic impedance ρc, Pa·s/m.
    pub fn impedance(&self) -> f64 {
        self.rho * self.c
    }

    /// Wavenumber at frequency `f` (Hz).
    pub fn wavenumber(&self, f: f64) -> f64 {
        2.0 * PI * f / self.c
    }
}

impl Default for AirProperties {
    fn default() -> Self {
        Self { c: 343.0, rho: 1.20 }
    }
}

/// Shoebox room, dimensions in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomGeometry {
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
}

impl RoomGeometry {
    pub fn new(lx: f64, ly: f64, lz: f64) -> Result<Self> {
        let g = Self { lx, ly, lz };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.lx) && ok(self.ly) && ok(self.lz)) {
            return Err(Error::domain(format!(
                "room dimensions must be positive, got ({}, {}, {})",
                self.lx, self.ly, self.lz
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> [f64; 3] {
        [self.lx, self.ly, self.lz]
    }

    pub fn volume(&self) -> f64 {
        self.lx * self.ly * self.lz
    }

    /// Total boundary area, 2(LxLy + LyLz + LxLz).
    pub fn surface_area(&self) -> f64 {
        2.0 * (self.lx * self.ly + self.ly * self.lz + self.lx * self.lz)
    }

    /// Floor area Lx·Ly.
    pub fn floor_area(&self) -> f64 {
        self.lx * self.ly
    }

    /// In-plane dimensions of a boundary surface.
    pub fn surface_dims(&self, s: SurfaceId) -> (f64, f64) {
        match s.plane().axis {
            Axis::X => (self.ly, self.lz),
            Axis::Y => (self.lx, self.lz),
            Axis::Z => (self.lx, self.ly),
        }
    }

    pub fn surface_area_of(&self, s: SurfaceId) -> f64 {
        let (a, b) = self.surface_dims(s);
        a * b
    }

    /// True if `p` lies in the closed box.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        p.iter().zip(self.dims()).all(|(&v, l)| (0.0..=l).contains(&v))
    }

    /// True if `p` lies strictly inside the box.
    pub fn contains_strictly(&self, p: [f64; 3]) -> bool {
        p.iter().zip(self.dims()).all(|(&v, l)| v > 0.0 && v < l)
    }
}

impl fmt::Display for RoomGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} x {} x {} m", self.lx, self.ly, self.lz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Mode order class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeClass {
    Static,
    Axial,
    Tangential,
    Oblique,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub nx: u32,
    pub ny: u32,
    pub nz: u32,
}

impl ModeIndex {
    pub const fn new(nx: u32, ny: u32, nz: u32) -> Self {
        Self { nx, ny, nz }
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn class(&self) -> ModeClass {
        match self.as_array().iter().filter(|&&n| n > 0).count() {
            0 => ModeClass::Static,
            1 => ModeClass::Axial,
            2 => ModeClass::Tangential,
            _ => ModeClass::Oblique,
        }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.nx, self.ny, self.nz)
    }
}

/// A boundary plane: `axis = 0` or `axis = L_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Plane {
    pub axis: Axis,
    pub at_max: bool,
}

/// Boundary surface number, 1..=6.
///
/// Convention: 1: x=0, 6: x=Lx, 2: y=0, 5: y=Ly, 3: z=0 (floor),
/// 4: z=Lz (ceiling). Pairs (1,6), (2,5), (3,4) are parallel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SurfaceId(u8);

impl SurfaceId {
    pub fn new(id: u8) -> Result<Self> {
        if (1..=6).contains(&id) {
            Ok(Self(id))
        } else {
            Err(Error::domain(format!("surface id must be in 1..=6, got {id}")))
        }
    }

    pub fn all() -> impl Iterator<Item = SurfaceId> {
        (1..=6).map(SurfaceId)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position, for indexing per-surface arrays.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn plane(self) -> Plane {
        let (axis, at_max) = match self.0 {
            1 => (Axis::X, false),
            6 => (Axis::X, true),
            2 => (Axis::Y, false),
            5 => (Axis::Y, true),
            3 => (Axis::Z, false),
            4 => (Axis::Z, true),
            _ => unreachable!("SurfaceId invariant"),
        };
        Plane { axis, at_max }
    }

    pub fn from_plane(plane: Plane) -> Self {
        Self(match (plane.axis, plane.at_max) {
            (Axis::X, false) => 1,
            (Axis::X, true) => 6,
            (Axis::Y, false) => 2,
            (Axis::Y, true) => 5,
            (Axis::Z, false) => 3,
            (Axis::Z, true) => 4,
        })
    }

    /// The parallel surface on the opposite side of the room.
    pub fn opposite(self) -> Self {
        Self(7 - self.0)
    }
}

impl TryFrom<u8> for SurfaceId {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SurfaceId> for u8 {
    fn from(s: SurfaceId) -> u8 {
        s.0
    }
}

/// Rigid-wall eigenfrequency in Hz.
pub fn eigenfrequency(geom: &RoomGeometry, mode: ModeIndex, air: &AirProperties) -> f64 {
    let qx = mode.nx as f64 / geom.lx;
    let qy = mode.ny as f64 / geom.ly;
    let qz = mode.nz as f64 / geom.lz;
    0.5 * air.c * (qx * qx + qy * qy + qz * qz).sqrt()
}

fn mode_shape_unchecked(geom: &RoomGeometry, mode: ModeIndex, p: [f64; 3]) -> f64 {
    (mode.nx as f64 * PI * p[0] / geom.lx).cos()
        * (mode.ny as f64 * PI * p[1] / geom.ly).cos()
        * (mode.nz as f64 * PI * p[2] / geom.lz).cos()
}

/// Rigid-wall mode shape at `position`; fails outside the room.
pub fn mode_shape(geom: &RoomGeometry, mode: ModeIndex, position: [f64; 3]) -> Result<f64> {
    if !geom.contains(position) {
        return Err(Error::domain(format!(
            "position {position:?} lies outside the room {geom}"
        )));
    }
    Ok(mode_shape_unchecked(geom, mode, position))
}

/// ∫ψ² dV = V / (εx εy εz), ε = 1 for a zero index and 2 otherwise.
pub fn mode_norm(geom: &RoomGeometry, mode: ModeIndex) -> f64 {
    let eps = |n: u32| if n == 0 { 1.0 } else { 2.0 };
    geom.volume() / (eps(mode.nx) * eps(mode.ny) * eps(mode.nz))
}

/// A mode and its rigid-wall eigenfrequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: ModeIndex,
    pub frequency: f64,
}

/// All modes with eigenfrequency ≤ `f_max`, ascending by frequency, ties
/// broken lexicographically on the indices.
pub fn modes_up_to(geom: &RoomGeometry, air: &AirProperties, f_max: f64) -> Vec<Mode> {
    let f_max = f_max.max(0.0);
    let n_lim = |l: f64| (2.0 * f_max * l / air.c + 1e-9).floor() as u32;
    let (mx, my, mz) = (n_lim(geom.lx), n_lim(geom.ly), n_lim(geom.lz));
    let mut out = Vec::new();
    for nx in 0..=mx {
        for ny in 0..=my {
            for nz in 0..=mz {
                let index = ModeIndex::new(nx, ny, nz);
                let frequency = eigenfrequency(geom, index, air);
                if frequency <= f_max {
                    out.push(Mode { index, frequency });
                }
            }
        }
    }
    out.sort_by(|a, b| a.frequency.total_cmp(&b.frequency).then_with(|| a.index.cmp(&b.index)));
    out
}

/// Schroeder frequency 2000·sqrt(T/V), Hz.
pub fn schroeder_frequency(reverb_time: f64, volume: f64) -> Result<f64> {
    if !(reverb_time > 0.0 && volume > 0.0) {
        return Err(Error::domain(format!(
            "Schroeder frequency needs T > 0 and V > 0 (T = {reverb_time}, V = {volume})"
        )));
    }
    Ok(2000.0 * (reverb_time / volume).sqrt())
}
