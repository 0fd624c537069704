//! Krylov solver for complex sparse systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// A square complex operator known only through products and its diagonal.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C], y: &mut [C]);
    fn diagonal(&self) -> Vec<C>;
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, C)>) -> Result<Self> {
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= n || *c >= n) {
            return Err(Error::invalid(format!("entry ({r}, {c}) outside a {n}x{n} matrix")));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut data: Vec<C> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *data.last_mut().expect("previous entry") += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self {
            n,
            indptr,
            indices,
            data,
        })
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[C], y: &mut [C]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C::default();
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *yi = acc;
        }
    }

    fn diagonal(&self) -> Vec<C> {
        (0..self.n)
            .map(|i| {
                (self.indptr[i]..self.indptr[i + 1])
                    .find(|&k| self.indices[k] == i)
                    .map_or(C::default(), |k| self.data[k])
            })
            .collect()
    }
}

/// Approximate inverse applied on every iteration.
pub trait Preconditioner: Sync {
    fn solve(&self, r: &[C], out: &mut [C]);
}

/// Inverse of the operator diagonal.
pub struct Jacobi(Vec<C>);

impl Jacobi {
    pub fn new(op: &dyn LinearOperator) -> Self {
        Self(
            op.diagonal()
                .into_iter()
                .map(|d| if d.norm() > 0.0 { d.inv() } else { C::from(1.0) })
                .collect(),
        )
    }
}

impl Preconditioner for Jacobi {
    fn solve(&self, r: &[C], out: &mut [C]) {
        for ((o, x), d) in out.iter_mut().zip(r).zip(&self.0) {
            *o = x * d;
        }
    }
}

/// Eigendecomposition `T = Z Λ Zᵀ` of a complex symmetric tridiagonal matrix
/// by implicit QL iteration, with `ZᵀZ = I` (no conjugation). `off[i]`
/// couples rows `i` and `i+1`. Returns `(Λ, Z)` with `Z[row][col]`.
pub fn symmetric_tridiagonal_eigen(diag: &[C], off: &[C]) -> Result<(Vec<C>, Vec<Vec<C>>)> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::invalid(
            "tridiagonal matrix needs n diagonal and n-1 off-diagonal entries",
        ));
    }
    let one = C::from(1.0);
    let zero = C::default();
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(zero);
    let mut z: Vec<Vec<C>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { one } else { zero }).collect())
        .collect();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].norm() + d[m + 1].norm();
                if e[m].norm() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numerical {
                    message: "tridiagonal QL iteration did not converge".into(),
                    residual: e[l].norm(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = (g * g + one).sqrt();
            let shift = if (g + r).norm() >= (g - r).norm() { g + r } else { g - r };
            g = d[m] - d[l] + e[l] / shift;
            let (mut s, mut c, mut p) = (one, one, zero);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r.norm() == 0.0 {
                    d[i + 1] -= p;
                    e[m] = zero;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = zero;
        }
    }
    Ok((d, z))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final ‖b − Ax‖ / ‖b‖.
    pub residual: f64,
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Right-preconditioned BiCGSTAB. Fails with [`Error::Numerical`] if the
/// relative residual has not reached `tol` after `max_iter` iterations.
pub fn bicgstab(
    op: &dyn LinearOperator,
    pre: &dyn Preconditioner,
    b: &[C],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<C>, SolveStats)> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::invalid(format!(
            "right-hand side has {} entries, operator {n}",
            b.len()
        )));
    }
    let precond = |v: &[C], out: &mut [C]| pre.solve(v, out);

    let b_norm = norm(b);
    let mut x = vec![C::default(); n];
    if b_norm == 0.0 {
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut r_hat = r.clone();
    let mut p = vec![C::default(); n];
    let mut v = vec![C::default(); n];
    let mut p_hat = vec![C::default(); n];
    let mut s_hat = vec![C::default(); n];
    let mut t = vec![C::default(); n];
    let (mut rho, mut alpha, mut omega) = (C::from(1.0), C::from(1.0), C::from(1.0));
    let mut best = f64::INFINITY;

    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.norm() < 1e-300 * b_norm * b_norm || omega.norm() == 0.0 {
            // breakdown: restart the shadow space from the current residual
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|e| *e = C::default());
            v.iter_mut().for_each(|e| *e = C::default());
            rho = C::from(1.0);
            alpha = C::from(1.0);
            omega = C::from(1.0);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut p_hat);
        op.apply(&p_hat, &mut v);
        alpha = rho / dot(&r_hat, &v);
        // r becomes s
        for i in 0..n {
            r[i] -= alpha * v[i];
        }
        let s_norm = norm(&r);
        if s_norm / b_norm < tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    residual: s_norm / b_norm,
                },
            ));
        }
        precond(&r, &mut s_hat);
        op.apply(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt.norm() > 0.0 {
            dot(&t, &r) / tt
        } else {
            C::default()
        };
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] -= omega * t[i];
        }
        let res = norm(&r) / b_norm;
        best = best.min(res);
        if res < tol {
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    residual: res,
                },
            ));
        }
        if !res.is_finite() {
            break;
        }
    }
    // recompute the true residual for the report
    let mut ax = vec![C::default(); n];
    op.apply(&x, &mut ax);
    let true_res = norm(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>()) / b_norm;
    Err(Error::Numerical {
        message: format!("BiCGSTAB stagnated after {max_iter} iterations (best {best:.3e})"),
        residual: true_res,
    })
}
