//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Least squares `argmin ‖b − A x‖₂` for a tall, full-column-rank `A`.
///
/// Uses a Householder QR; a rank-deficient `A` is reported as ill-conditioned.
pub fn lstsq(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return Ok(Vec::new());
    }
    if rows < cols {
        return Err(Error::IllConditioned(format!("least squares with {rows} rows and {cols} columns")));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let scale = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..cols).any(|i| r[(i, i)].abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::IllConditioned("rank-deficient column set".into()));
    }
    let qtb = qr.q().transpose() * DVector::from_column_slice(b);
    let x = r.solve_upper_triangular(&qtb).ok_or_else(|| Error::IllConditioned("triangular solve failed".into()))?;
    Ok(x.iter().copied().collect())
}

/// Cholesky of a symmetric positive definite matrix, retrying once with a
/// small ridge when the plain factorisation fails.
///
/// Returns the factor and whether the ridge was needed.
pub fn cholesky_ridged(m: DMatrix<f64>) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, bool)> {
    if let Some(c) = m.clone().cholesky() {
        return Ok((c, false));
    }
    let n = m.nrows().max(1);
    let ridge = 1e-10 * (m.trace().abs() / n as f64).max(f64::MIN_POSITIVE);
    let mut m2 = m;
    for i in 0..m2.nrows() {
        m2[(i, i)] += ridge;
    }
    m2.cholesky()
        .map(|c| (c, true))
        .ok_or_else(|| Error::IllConditioned("matrix is not positive definite after ridge".into()))
}
