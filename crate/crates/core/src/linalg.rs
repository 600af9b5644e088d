//! Dense singular value decomposition by one-sided (Hestenes) Jacobi
//! rotations.
//!
//! The matrix is processed so that the work matrix is tall (`m ≥ n`): columns
//! of `W = A·V` are rotated pairwise until mutually orthogonal, at which point
//! the column norms are the singular values. An orthogonal starting `V`
//! may be supplied; SVT calls this with the previous iterate's right vectors,
//! which usually cuts the sweep count to one or two.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Thin SVD `A = U·diag(s)·Vᵀ` with `s` sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `m×k` left singular vectors, `k = min(m, n)`.
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    /// `n×k` right singular vectors.
    pub v: DMatrix<f64>,
    pub sweeps: usize,
}

impl Svd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (k, &sk) in self.s.iter().enumerate() {
            us.column_mut(k).scale_mut(sk);
        }
        us * self.v.transpose()
    }
}

/// SVD of `a`.
pub fn svd(a: &DMatrix<f64>) -> Result<Svd> {
    svd_warm(a, None)
}

/// SVD of `a` starting the Jacobi iteration from `basis`, an orthogonal
/// matrix of size `min(m,n)`-side (`n×n` when `a` is tall, `m×m` when wide).
/// A basis of the wrong size is ignored.
pub fn svd_warm(a: &DMatrix<f64>, basis: Option<&DMatrix<f64>>) -> Result<Svd> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("SVD input has non-finite entries".into()));
    }
    let (m, n) = a.shape();
    if m >= n {
        jacobi_tall(a, basis)
    } else {
        let t = jacobi_tall(&a.transpose(), basis)?;
        Ok(Svd { u: t.v, s: t.s, v: t.u, sweeps: t.sweeps })
    }
}

/// The orthogonal factor that [`svd_warm`] accepts as a warm start for a
/// matrix shaped like the one `svd` came from.
pub fn warm_basis(svd: &Svd, shape: (usize, usize)) -> &DMatrix<f64> {
    if shape.0 >= shape.1 {
        &svd.v
    } else {
        &svd.u
    }
}

fn jacobi_tall(a: &DMatrix<f64>, basis: Option<&DMatrix<f64>>) -> Result<Svd> {
    let (m, n) = a.shape();
    let (mut w, mut v) = match basis {
        Some(b) if b.shape() == (n, n) => (a * b, b.clone()),
        _ => (a.clone(), DMatrix::identity(n, n)),
    };
    let tol = f64::EPSILON * (m as f64).sqrt();
    let mut norms: Vec<f64> = (0..n).map(|j| w.column(j).norm_squared()).collect();
    let scale = norms.iter().cloned().fold(0.0, f64::max);

    let mut sweeps = 0;
    let mut converged = n < 2 || scale == 0.0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numerical(format!("Jacobi SVD did not converge in {MAX_SWEEPS} sweeps")));
        }
        sweeps += 1;
        let mut rotated = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let (ai, aj) = (norms[i], norms[j]);
                // Columns negligible against the largest one are left alone.
                if ai <= scale * f64::EPSILON * f64::EPSILON || aj <= scale * f64::EPSILON * f64::EPSILON {
                    continue;
                }
                let g = w.column(i).dot(&w.column(j));
                if g.abs() <= tol * (ai * aj).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aj - ai) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, i, j, c, s);
                rotate_columns(&mut v, i, j, c, s);
                norms[i] = ai - t * g;
                norms[j] = aj + t * g;
            }
        }
        // Refresh norms to stop drift from the incremental updates.
        for (j, nj) in norms.iter_mut().enumerate() {
            *nj = w.column(j).norm_squared();
        }
        converged = !rotated;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sing: Vec<f64> = norms.iter().map(|x| x.max(0.0).sqrt()).collect();
    order.sort_by(|&x, &y| sing[y].total_cmp(&sing[x]).then(x.cmp(&y)));

    let mut u = DMatrix::zeros(m, n);
    let mut vs = DMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = sing[src];
        s.push(sigma);
        if sigma > 0.0 {
            u.column_mut(dst).copy_from(&(w.column(src) / sigma));
        }
        vs.column_mut(dst).copy_from(&v.column(src));
    }
    Ok(Svd { u, s, v: vs, sweeps })
}

#[inline]
fn rotate_columns(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    let rows = m.nrows();
    let data = m.as_mut_slice();
    let (left, right) = data.split_at_mut(j * rows);
    let ci = &mut left[i * rows..(i + 1) * rows];
    let cj = &mut right[..rows];
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Sum of singular values.
pub fn nuclear_norm(a: &DMatrix<f64>) -> Result<f64> {
    Ok(svd(a)?.s.iter().sum())
}
