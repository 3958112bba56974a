//! Small dense linear-algebra helpers shared across the crate.
//!
//! The operator norm is always the spectral norm (largest singular value),
//! computed by SVD; dimensions in this crate are small (d <= 8) so dense
//! decompositions are the right tool.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Spectral norm: largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

/// log(||M|| * ||M^-1||) >= 0, from one SVD.
pub fn log_distortion(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    sv.max().ln() - sv.min().ln()
}

/// Invert, mapping near-singularity to an error instead of a panic.
pub fn invert(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("matrix is numerically singular".into()))
}

/// Checks a table entry is usable: finite entries and |det| above threshold.
pub fn check_invertible(m: &DMatrix<f64>, min_abs_det: f64) -> Result<()> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let det = m.determinant();
    if det.abs() <= min_abs_det {
        return Err(Error::InvalidInput(format!(
            "matrix determinant {det:.3e} below invertibility threshold {min_abs_det:.1e}"
        )));
    }
    Ok(())
}

/// Spectral radius: largest modulus among (complex) eigenvalues.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Symmetrize: (M + M^T) / 2.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Applies `f` to the eigenvalues of a symmetric matrix.
pub fn sym_func(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let mut ev = symmetrize(m).symmetric_eigen().eigenvalues;
    let mut v: Vec<f64> = ev.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    for (i, x) in v.into_iter().enumerate() {
        ev[i] = x;
    }
    ev
}

/// Exact power-of-two rescaling of a matrix, used to renormalize long
/// cocycle products. Returns the binary exponent removed, so that
/// `input = output * 2^exponent` with every entry operation exact in IEEE
/// arithmetic.
pub fn renormalize_pow2(m: &mut DMatrix<f64>) -> i64 {
    let max = m.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if max == 0.0 || !max.is_finite() {
        return 0;
    }
    // Bring the largest entry into [0.5, 1).
    let e = (max.log2().floor() as i64) + 1;
    if e == 0 {
        return 0;
    }
    let scale = 2.0_f64.powi(-(e as i32));
    for x in m.iter_mut() {
        *x *= scale;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spectral_norm_of_diag() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -0.5]));
        assert_relative_eq!(spectral_norm(&m), 2.0, max_relative = 1e-14);
        assert_relative_eq!(log_distortion(&m), 4.0_f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn renormalization_is_exact() {
        let mut m = DMatrix::from_row_slice(2, 2, &[3.5e9, -1.25e8, 0.0, 7.75e9]);
        let orig = m.clone();
        let e = renormalize_pow2(&mut m);
        let back = &m * 2.0_f64.powi(e as i32);
        assert_eq!(back, orig);
        let max = m.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        assert!((0.5..1.0).contains(&max));
    }

    #[test]
    fn sym_func_square_root() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let r = sym_func(&m, f64::sqrt);
        assert_relative_eq!(&r * &r, m, epsilon = 1e-12);
    }

    #[test]
    fn spectral_radius_rotation_is_one() {
        let (c, s) = (1.0_f64.cos(), 1.0_f64.sin());
        let m = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert_relative_eq!(spectral_radius(&m), 1.0, max_relative = 1e-12);
    }
}
