//! Second-order finite differences for the Helmholtz equation in a box.
//!
//! Nodes sit on a uniform per-axis lattice that includes the walls. The
//! locally reacting boundary `∂p/∂n = −jkβ p` is imposed with ghost nodes,
//! and rows on faces, edges and corners are scaled by ½ per boundary axis so
//! that the assembled operator is complex symmetric.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::linsolve::{bicgstab, symmetric_tridiagonal_eigen, Jacobi, LinearOperator, Preconditioner};
use super::{check_inside, FdmConfig, SurfaceMaterials};
use crate::error::{Error, Result};
use crate::room::{AirProperties, RoomGeometry, SurfaceId};
use crate::spectrum::{FrequencyGrid, TfMetadata, TransferFunction};

type C = Complex64;

/// Node lattice of a box: `n[a]` intervals of width `h[a]` along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdmGrid {
    n: [usize; 3],
    h: [f64; 3],
}

impl FdmGrid {
    /// Finest lattice whose spacing does not exceed `h_max` on any axis.
    pub fn new(geom: &RoomGeometry, h_max: f64) -> Result<Self> {
        geom.validate()?;
        if !(h_max > 0.0 && h_max.is_finite()) {
            return Err(Error::domain(format!("grid spacing must be positive, got {h_max}")));
        }
        let d = geom.dims();
        let mut n = [0; 3];
        let mut h = [0.0; 3];
        for a in 0..3 {
            n[a] = ((d[a] / h_max - 1e-9).ceil() as usize).max(1);
            h[a] = d[a] / n[a] as f64;
        }
        let nodes = (n[0] + 1) * (n[1] + 1) * (n[2] + 1);
        if nodes > 50_000_000 {
            return Err(Error::invalid(format!("{nodes} grid nodes exceed the supported size")));
        }
        Ok(Self { n, h })
    }

    /// Lattice meeting the points-per-wavelength target at `f_max`.
    pub fn for_frequency(geom: &RoomGeometry, air: &AirProperties, f_max: f64, cfg: &FdmConfig) -> Result<Self> {
        if !(cfg.points_per_wavelength >= 6.0) {
            return Err(Error::domain(format!(
                "points per wavelength must be at least 6, got {}",
                cfg.points_per_wavelength
            )));
        }
        let mut h = air.c / (f_max * cfg.points_per_wavelength);
        if let Some(cap) = cfg.max_spacing {
            h = h.min(cap);
        }
        Self::new(geom, h)
    }

    pub fn intervals(&self) -> [usize; 3] {
        self.n
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.h
    }

    pub fn node_count(&self) -> usize {
        (self.n[0] + 1) * (self.n[1] + 1) * (self.n[2] + 1)
    }

    fn flat(&self, i: [usize; 3]) -> usize {
        (i[0] * (self.n[1] + 1) + i[1]) * (self.n[2] + 1) + i[2]
    }

    /// Nearest node to `p`.
    pub fn snap(&self, p: [f64; 3]) -> [usize; 3] {
        let mut out = [0; 3];
        for a in 0..3 {
            out[a] = ((p[a] / self.h[a]).round().max(0.0) as usize).min(self.n[a]);
        }
        out
    }

    pub fn position(&self, i: [usize; 3]) -> [f64; 3] {
        [
            i[0] as f64 * self.h[0],
            i[1] as f64 * self.h[1],
            i[2] as f64 * self.h[2],
        ]
    }
}

/// Three-point stencil along one axis: `diag·x_i + lo·x_{i-1} + hi·x_{i+1}`,
/// plus the row weight of each index.
struct AxisStencil {
    diag: Vec<C>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    weight: Vec<f64>,
}

impl AxisStencil {
    fn new(n: usize, h: f64, jk: C, beta_min: C, beta_max: C) -> Self {
        let h2 = 1.0 / (h * h);
        let mut s = Self {
            diag: vec![C::from(2.0 * h2); n + 1],
            lo: vec![-h2; n + 1],
            hi: vec![-h2; n + 1],
            weight: vec![1.0; n + 1],
        };
        s.lo[0] = 0.0;
        s.hi[0] = -2.0 * h2;
        s.diag[0] += 2.0 * jk * beta_min / h;
        s.weight[0] = 0.5;
        s.hi[n] = 0.0;
        s.lo[n] = -2.0 * h2;
        s.diag[n] += 2.0 * jk * beta_max / h;
        s.weight[n] = 0.5;
        s
    }
}

struct Helmholtz<'a> {
    grid: &'a FdmGrid,
    axes: [AxisStencil; 3],
    k2: f64,
}

impl Helmholtz<'_> {
    fn weight(&self, i: usize, j: usize, l: usize) -> f64 {
        self.axes[0].weight[i] * self.axes[1].weight[j] * self.axes[2].weight[l]
    }
}

impl LinearOperator for Helmholtz<'_> {
    fn dim(&self) -> usize {
        self.grid.node_count()
    }

    fn apply(&self, x: &[C], y: &mut [C]) {
        let [nx, ny, nz] = self.grid.n;
        let sz = 1;
        let sy = nz + 1;
        let sx = (ny + 1) * (nz + 1);
        let [ax, ay, az] = &self.axes;
        for i in 0..=nx {
            for j in 0..=ny {
                let base = i * sx + j * sy;
                let dxy = ax.diag[i] + ay.diag[j] - self.k2;
                for l in 0..=nz {
                    let c = base + l * sz;
                    let mut acc = (dxy + az.diag[l]) * x[c];
                    if i > 0 {
                        acc += ax.lo[i] * x[c - sx];
                    }
                    if i < nx {
                        acc += ax.hi[i] * x[c + sx];
                    }
                    if j > 0 {
                        acc += ay.lo[j] * x[c - sy];
                    }
                    if j < ny {
                        acc += ay.hi[j] * x[c + sy];
                    }
                    if l > 0 {
                        acc += az.lo[l] * x[c - sz];
                    }
                    if l < nz {
                        acc += az.hi[l] * x[c + sz];
                    }
                    y[c] = self.weight(i, j, l) * acc;
                }
            }
        }
    }

    fn diagonal(&self) -> Vec<C> {
        let [nx, ny, nz] = self.grid.n;
        let mut d = Vec::with_capacity(self.dim());
        for i in 0..=nx {
            for j in 0..=ny {
                for l in 0..=nz {
                    let v = self.axes[0].diag[i] + self.axes[1].diag[j] + self.axes[2].diag[l] - self.k2;
                    d.push(self.weight(i, j, l) * v);
                }
            }
        }
        d
    }
}

/// Eigenbasis of one axis stencil: `T = L Λ R` with `R = L⁻¹`, both stored
/// row-major.
struct AxisBasis {
    n: usize,
    lam: Vec<C>,
    left: Vec<C>,
    right: Vec<C>,
}

impl AxisBasis {
    fn new(st: &AxisStencil) -> Result<Self> {
        let n = st.diag.len();
        let sw: Vec<f64> = st.weight.iter().map(|w| w.sqrt()).collect();
        // D T D⁻¹ with D = diag(√w) is symmetric
        let off: Vec<C> = (0..n - 1).map(|i| C::from(sw[i] * st.hi[i] / sw[i + 1])).collect();
        let (lam, z) = symmetric_tridiagonal_eigen(&st.diag, &off)?;
        let mut left = vec![C::default(); n * n];
        let mut right = vec![C::default(); n * n];
        for i in 0..n {
            for k in 0..n {
                left[i * n + k] = z[i][k] / sw[i];
                right[k * n + i] = z[i][k] * sw[i];
            }
        }
        Ok(Self { n, lam, left, right })
    }
}

/// Exact inverse of the separable box operator by fast diagonalization.
struct FastDiagonal {
    shape: [usize; 3],
    axes: [AxisBasis; 3],
    inv_weight: [Vec<f64>; 3],
    k2: f64,
}

impl FastDiagonal {
    fn new(op: &Helmholtz<'_>) -> Result<Self> {
        let [nx, ny, nz] = op.grid.n;
        let inv = |a: usize| op.axes[a].weight.iter().map(|w| 1.0 / w).collect();
        Ok(Self {
            shape: [nx + 1, ny + 1, nz + 1],
            axes: [
                AxisBasis::new(&op.axes[0])?,
                AxisBasis::new(&op.axes[1])?,
                AxisBasis::new(&op.axes[2])?,
            ],
            inv_weight: [inv(0), inv(1), inv(2)],
            k2: op.k2,
        })
    }

    fn along(&self, data: &mut [C], axis: usize, m: &[C]) {
        let n = self.axes[axis].n;
        let stride = match axis {
            0 => self.shape[1] * self.shape[2],
            1 => self.shape[2],
            _ => 1,
        };
        let mut line = vec![C::default(); n];
        let total = data.len();
        for start in 0..total {
            // first element of each line along `axis`
            if (start / stride) % n != 0 {
                continue;
            }
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[start + k * stride];
            }
            for i in 0..n {
                let row = &m[i * n..(i + 1) * n];
                data[start + i * stride] = row.iter().zip(&line).map(|(a, b)| a * b).sum();
            }
        }
    }
}

impl Preconditioner for FastDiagonal {
    fn solve(&self, r: &[C], out: &mut [C]) {
        let [sx, sy, sz] = self.shape;
        let mut c = 0;
        for i in 0..sx {
            for j in 0..sy {
                let w = self.inv_weight[0][i] * self.inv_weight[1][j];
                for l in 0..sz {
                    out[c] = r[c] * w * self.inv_weight[2][l];
                    c += 1;
                }
            }
        }
        for a in 0..3 {
            self.along(out, a, &self.axes[a].right);
        }
        let mut c = 0;
        for i in 0..sx {
            for j in 0..sy {
                let lxy = self.axes[0].lam[i] + self.axes[1].lam[j] - self.k2;
                for l in 0..sz {
                    let den = lxy + self.axes[2].lam[l];
                    out[c] = if den.norm() > 1e-300 { out[c] / den } else { out[c] };
                    c += 1;
                }
            }
        }
        for a in 0..3 {
            self.along(out, a, &self.axes[a].left);
        }
    }
}

fn solve_one(
    grid: &FdmGrid,
    materials: &SurfaceMaterials,
    src: usize,
    rcv: usize,
    air: &AirProperties,
    cfg: &FdmConfig,
    f: f64,
) -> Result<C> {
    let beta = materials.admittances(f, air)?;
    let k = air.wavenumber(f);
    let jk = C::new(0.0, k);
    let wall = |id: u8| beta[SurfaceId::new(id).expect("valid id").index()];
    let axes = [
        AxisStencil::new(grid.n[0], grid.h[0], jk, wall(1), wall(6)),
        AxisStencil::new(grid.n[1], grid.h[1], jk, wall(2), wall(5)),
        AxisStencil::new(grid.n[2], grid.h[2], jk, wall(3), wall(4)),
    ];
    let op = Helmholtz { grid, axes, k2: k * k };
    let mut b = vec![C::default(); grid.node_count()];
    let cell = grid.h[0] * grid.h[1] * grid.h[2];
    b[src] = C::new(0.0, 2.0 * PI * f * air.rho / cell);
    let fast = FastDiagonal::new(&op);
    let pre: Box<dyn Preconditioner> = match fast {
        Ok(p) => Box::new(p),
        Err(e) => {
            log::debug!("falling back to Jacobi preconditioning at {f} Hz: {e}");
            Box::new(Jacobi::new(&op))
        }
    };
    let (x, _) = bicgstab(&op, pre.as_ref(), &b, cfg.tolerance, cfg.max_iterations).map_err(|e| match e {
        Error::Numerical { message, residual } => Error::Numerical {
            message: format!("{message} at {f} Hz"),
            residual,
        },
        other => other,
    })?;
    Ok(x[rcv])
}

/// Finite-difference transfer function on `grid` frequencies. Source and
/// receiver are moved to their nearest lattice nodes; the returned metadata
/// carries the snapped coordinates.
pub fn solve_tf_fdm(
    geom: &RoomGeometry,
    materials: &SurfaceMaterials,
    src: [f64; 3],
    rcv: [f64; 3],
    air: &AirProperties,
    cfg: &FdmConfig,
    grid: &FrequencyGrid,
) -> Result<TransferFunction> {
    air.validate()?;
    materials.validate()?;
    check_inside(geom, src, "source")?;
    check_inside(geom, rcv, "receiver")?;
    if !(cfg.tolerance > 0.0) {
        return Err(Error::domain(format!(
            "solver tolerance must be positive, got {}",
            cfg.tolerance
        )));
    }
    let lattice = FdmGrid::for_frequency(geom, air, grid.stop(), cfg)?;
    let (si, ri) = (lattice.snap(src), lattice.snap(rcv));
    let (s, r) = (lattice.flat(si), lattice.flat(ri));
    let values = grid
        .to_vec()
        .par_iter()
        .map(|&f| solve_one(&lattice, materials, s, r, air, cfg, f))
        .collect::<Result<Vec<_>>>()?;
    let meta = TfMetadata {
        source_pos: Some(lattice.position(si)),
        receiver_pos: Some(lattice.position(ri)),
        ..TfMetadata::default()
    };
    TransferFunction::new(*grid, values, meta)
}
