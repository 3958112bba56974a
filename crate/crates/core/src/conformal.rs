//! Conformal structures on R^d and the geometry they live in.
//!
//! A conformal structure is an inner product up to positive scale; it is
//! represented by its unit-determinant symmetric positive-definite Gram
//! matrix, a point of the symmetric space `SL(d,R)/SO(d,R)`. The group
//! `GL(d,R)` acts by `push(B, eta) = normalize(B^T eta B)` and the inverse
//! action `pull(B, eta) = push(B^{-1}, eta)`; both are isometries of the
//! affine-invariant metric
//! `dist(eta, zeta) = sqrt(sum log^2 eigenvalues(eta^{-1} zeta))`,
//! which is the standard nonpositively curved metric on this space.
//!
//! The Karcher mean and the invariant-structure solver only use that the
//! space is complete and CAT(0) and that the action is isometric.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

const SYMMETRY_TOL: f64 = 1e-12;
const DET_TOL: f64 = 1e-10;

/// A unit-determinant symmetric positive-definite matrix: a point of
/// `SL(d,R)/SO(d,R)` representing a conformal structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalStructure {
    form: DMatrix<f64>,
}

impl ConformalStructure {
    /// Validates symmetry, positivity, and unit determinant.
    pub fn new(form: DMatrix<f64>) -> Result<Self> {
        if form.nrows() != form.ncols() || form.nrows() == 0 {
            return Err(Error::InvalidInput("form must be square and nonempty".into()));
        }
        let asym = (&form - form.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidInput(format!(
                "symmetry residual {asym:.3e} exceeds {SYMMETRY_TOL:.0e}"
            )));
        }
        let eigs = linalg::sym_eigenvalues(&form);
        if eigs[0] <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "form is not positive definite (min eigenvalue {:.3e})",
                eigs[0]
            )));
        }
        let det: f64 = eigs.iter().product();
        if (det - 1.0).abs() > DET_TOL {
            return Err(Error::InvalidInput(format!(
                "determinant {det} differs from 1 by more than {DET_TOL:.0e}"
            )));
        }
        Ok(Self { form: linalg::symmetrize(&form) })
    }

    /// Projects an arbitrary symmetric positive-definite matrix to
    /// determinant 1 (divides by `det^{1/d}`).
    pub fn from_spd(m: &DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        let sym = linalg::symmetrize(m);
        let eigs = linalg::sym_eigenvalues(&sym);
        if eigs[0] <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "matrix is not positive definite (min eigenvalue {:.3e})",
                eigs[0]
            )));
        }
        let log_det: f64 = eigs.iter().map(|x| x.ln()).sum();
        let scale = (-log_det / d as f64).exp();
        Self::new(sym * scale)
    }

    /// Identity structure (the Euclidean conformal class).
    pub fn identity(d: usize) -> Self {
        Self { form: DMatrix::identity(d, d) }
    }

    pub fn form(&self) -> &DMatrix<f64> {
        &self.form
    }

    pub fn dimension(&self) -> usize {
        self.form.nrows()
    }

    /// The quadratic form `eta(v, v)`.
    pub fn quad(&self, v: &nalgebra::DVector<f64>) -> f64 {
        (v.transpose() * &self.form * v)[(0, 0)]
    }

    /// Eccentricity: square root of the ratio of extreme eigenvalues.
    pub fn eccentricity(&self) -> f64 {
        let eigs = linalg::sym_eigenvalues(&self.form);
        (eigs[eigs.len() - 1] / eigs[0]).sqrt()
    }

    /// The norm-comparison constant squared: `max(lambda_max, 1/lambda_min)`,
    /// the smallest `gamma` with
    /// `gamma^{-1} ||v||^2 <= eta(v, v) <= gamma ||v||^2`.
    pub fn comparison_bound(&self) -> f64 {
        let eigs = linalg::sym_eigenvalues(&self.form);
        eigs[eigs.len() - 1].max(1.0 / eigs[0])
    }
}

/// The pushforward `B_* eta`: determinant-1 normalization of `B^T eta B`.
/// Invariant under rescaling of `B`; `push(B1, push(B2, eta)) = push(B2 B1, eta)`.
pub fn push(b: &DMatrix<f64>, eta: &ConformalStructure) -> ConformalStructure {
    let raw = b.transpose() * eta.form() * b;
    ConformalStructure::from_spd(&raw).expect("congruence of SPD by invertible stays SPD")
}

/// The action `B[eta] = (B^{-1})_* eta`; satisfies
/// `pull(A B, eta) = pull(A, pull(B, eta))`.
pub fn pull(b: &DMatrix<f64>, eta: &ConformalStructure) -> ConformalStructure {
    let inv = b.clone().try_inverse().expect("pull requires an invertible matrix");
    push(&inv, eta)
}

/// Affine-invariant distance: `sqrt(sum_i log^2 lambda_i)` over the
/// eigenvalues of `eta1^{-1} eta2`, computed through a Cholesky whitening.
pub fn distance(eta1: &ConformalStructure, eta2: &ConformalStructure) -> f64 {
    whitened_log_eigs(eta1, eta2).iter().map(|l| l * l).sum::<f64>().sqrt()
}

/// Eigenvalue logs of `eta1^{-1} eta2` via `L^{-1} eta2 L^{-T}` for
/// `eta1 = L L^T`, keeping the pencil symmetric.
fn whitened_log_eigs(eta1: &ConformalStructure, eta2: &ConformalStructure) -> Vec<f64> {
    let chol = eta1.form().clone().cholesky().expect("conformal structures are SPD");
    let l = chol.l();
    let z = l.solve_lower_triangular(eta2.form()).expect("triangular solve");
    let w = l.solve_lower_triangular(&z.transpose()).expect("triangular solve").transpose();
    linalg::sym_eigenvalues(&w).iter().map(|x| x.ln()).collect()
}

/// The geodesic `t -> eta1 # _t eta2` of the affine-invariant metric.
pub fn geodesic(eta1: &ConformalStructure, eta2: &ConformalStructure, t: f64) -> ConformalStructure {
    let sqrt1 = linalg::sym_func(eta1.form(), f64::sqrt);
    let inv_sqrt1 = linalg::sym_func(eta1.form(), |x| 1.0 / x.sqrt());
    let middle = &inv_sqrt1 * eta2.form() * &inv_sqrt1;
    let powered = linalg::sym_func(&middle, |x| x.powf(t));
    ConformalStructure::from_spd(&(&sqrt1 * powered * &sqrt1))
        .expect("geodesic stays inside the SPD cone")
}

/// Geodesic midpoint.
pub fn midpoint(eta1: &ConformalStructure, eta2: &ConformalStructure) -> ConformalStructure {
    geodesic(eta1, eta2, 0.5)
}

/// Weighted Karcher (Frechet) mean: the unique minimizer of
/// `sum w_i dist(., eta_i)^2`, found by the step-1 fixed-point iteration
/// `X <- X^{1/2} exp(sum w_i log(X^{-1/2} eta_i X^{-1/2})) X^{1/2}`,
/// stopping when the tangent update norm drops below `1e-12`.
pub fn karcher_mean(
    structures: &[ConformalStructure],
    weights: &[f64],
) -> Result<ConformalStructure> {
    if structures.is_empty() || structures.len() != weights.len() {
        return Err(Error::InvalidInput(
            "karcher mean needs a nonempty list with matching weights".into(),
        ));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidInput("weights must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    let mut x = structures[0].clone();
    let max_iter = 10_000;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let sqrt = linalg::sym_func(x.form(), f64::sqrt);
        let inv_sqrt = linalg::sym_func(x.form(), |v| 1.0 / v.sqrt());
        let mut tangent = DMatrix::<f64>::zeros(x.dimension(), x.dimension());
        for (eta, &w) in structures.iter().zip(weights) {
            let whitened = &inv_sqrt * eta.form() * &inv_sqrt;
            tangent += linalg::sym_func(&whitened, f64::ln) * (w / total);
        }
        residual = tangent.norm();
        if residual < 1e-12 {
            return Ok(x);
        }
        let step = linalg::sym_func(&linalg::symmetrize(&tangent), f64::exp);
        x = ConformalStructure::from_spd(&(&sqrt * step * &sqrt))?;
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

/// Practical ellipticity bound used by [`invariant_structure_elliptic`]:
/// powers up to this order must stay below the distortion cap.
const ELLIPTIC_POWER_CHECK: usize = 256;
const ELLIPTIC_DISTORTION_CAP: f64 = 1e6;

/// Constructs an `M`-invariant conformal structure for an elliptic matrix:
/// a fixed point of the isometry `eta -> pull(M, eta)`, found by
/// Krasnoselskii-Mann midpoint averaging from the identity. Matrices whose
/// powers are not uniformly bounded both ways are rejected up front, since
/// they cannot preserve any inner product.
pub fn invariant_structure_elliptic(
    m: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<ConformalStructure> {
    let d = m.nrows();
    let inv = m.clone().try_inverse().ok_or_else(|| {
        Error::InvalidInput("invariant structure requires an invertible matrix".into())
    })?;
    let mut fwd = DMatrix::<f64>::identity(d, d);
    let mut bwd = DMatrix::<f64>::identity(d, d);
    for n in 1..=ELLIPTIC_POWER_CHECK {
        fwd = m * fwd;
        bwd = &inv * bwd;
        let witness = linalg::spectral_norm(&fwd) * linalg::spectral_norm(&bwd);
        if witness > ELLIPTIC_DISTORTION_CAP {
            return Err(Error::NotElliptic { witness, n });
        }
    }
    let mut eta = ConformalStructure::identity(d);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let pulled = pull(m, &eta);
        residual = distance(&pulled, &eta);
        if residual <= tol {
            return Ok(eta);
        }
        eta = midpoint(&eta, &pulled);
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{random_invertible, random_structure, rotation_matrix};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(entries: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(entries))
    }

    #[test]
    fn push_examples() {
        let i2 = ConformalStructure::identity(2);
        let q = rotation_matrix(0.7);
        assert!(distance(&push(&q, &i2), &i2) < 1e-14);

        let b = diag(&[2.0, 0.5]);
        let pushed = push(&b, &i2);
        assert_relative_eq!(pushed.form().clone(), diag(&[4.0, 0.25]), epsilon = 1e-14);

        // normalization kills scalars
        let scaled = push(&(b.clone() * 3.0), &i2);
        assert_relative_eq!(scaled.form().clone(), pushed.form().clone(), epsilon = 1e-12);
    }

    #[test]
    fn pull_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eta = random_structure(3, &mut rng);
        let b = random_invertible(3, &mut rng);
        let roundtrip = pull(&b, &push(&b, &eta));
        assert!(distance(&roundtrip, &eta) < 1e-12);

        let i2 = ConformalStructure::identity(2);
        let pulled = pull(&diag(&[2.0, 0.5]), &i2);
        assert_relative_eq!(pulled.form().clone(), diag(&[0.25, 4.0]), epsilon = 1e-14);
        assert!(distance(&pull(&DMatrix::identity(2, 2), &eta_2()), &eta_2()) < 1e-15);
    }

    fn eta_2() -> ConformalStructure {
        ConformalStructure::from_spd(&DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])).unwrap()
    }

    #[test]
    fn distance_examples() {
        let i2 = ConformalStructure::identity(2);
        assert_eq!(distance(&i2, &i2), 0.0);
        let e = std::f64::consts::E;
        let eta = ConformalStructure::new(diag(&[e, 1.0 / e])).unwrap();
        assert_relative_eq!(distance(&i2, &eta), std::f64::consts::SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn triangle_inequality_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let d = rng.gen_range(2..=4);
            let a = random_structure(d, &mut rng);
            let b = random_structure(d, &mut rng);
            let c = random_structure(d, &mut rng);
            assert!(distance(&a, &c) <= distance(&a, &b) + distance(&b, &c) + 1e-10);
        }
    }

    #[test]
    fn karcher_examples() {
        let eta = eta_2();
        let single = karcher_mean(&[eta.clone()], &[1.0]).unwrap();
        assert!(distance(&single, &eta) < 1e-12);

        let double = karcher_mean(&[eta.clone(), eta.clone()], &[0.5, 0.5]).unwrap();
        assert!(distance(&double, &eta) < 1e-12);

        let e = std::f64::consts::E;
        let a = ConformalStructure::new(diag(&[e, 1.0 / e])).unwrap();
        let b = ConformalStructure::new(diag(&[1.0 / e, e])).unwrap();
        let mean = karcher_mean(&[a.clone(), b.clone()], &[1.0, 1.0]).unwrap();
        assert!(distance(&mean, &ConformalStructure::identity(2)) < 1e-10);
        // geodesic midpoint oracle
        assert!(distance(&mean, &midpoint(&a, &b)) < 1e-10);
    }

    #[test]
    fn karcher_is_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let etas: Vec<_> = (0..4).map(|_| random_structure(3, &mut rng)).collect();
        let w = [1.0, 2.0, 0.5, 1.5];
        let b = random_invertible(3, &mut rng);
        let mean = karcher_mean(&etas, &w).unwrap();
        let pushed: Vec<_> = etas.iter().map(|e| push(&b, e)).collect();
        let mean_pushed = karcher_mean(&pushed, &w).unwrap();
        assert!(distance(&mean_pushed, &push(&b, &mean)) < 1e-8);
    }

    #[test]
    fn elliptic_solver_examples() {
        let q = rotation_matrix(1.0);
        let eta = invariant_structure_elliptic(&q, 1e-12, 10_000).unwrap();
        assert!(distance(&eta, &ConformalStructure::identity(2)) < 1e-12);

        // M = S R S^{-1} preserves eta ~ S^{-T} S^{-1}
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let s_inv = s.clone().try_inverse().unwrap();
        let m = &s * rotation_matrix(1.0) * &s_inv;
        let eta = invariant_structure_elliptic(&m, 1e-11, 20_000).unwrap();
        let expected = ConformalStructure::from_spd(&(s_inv.transpose() * &s_inv)).unwrap();
        assert!(distance(&eta, &expected) < 1e-9, "dist {}", distance(&eta, &expected));
        // substitution: pull(M, eta) = eta
        assert!(distance(&pull(&m, &eta), &eta) < 1e-11);

        let hyp = diag(&[2.0, 0.5]);
        assert!(matches!(
            invariant_structure_elliptic(&hyp, 1e-10, 100),
            Err(Error::NotElliptic { .. })
        ));
    }

    #[test]
    fn quasiconformality_bridge() {
        // If eta is M-invariant with eccentricity C then ||M^n|| ||M^-n|| <= C^4.
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, -0.2, 1.0]);
        let s_inv = s.clone().try_inverse().unwrap();
        let m = &s * rotation_matrix(0.9) * &s_inv;
        let eta = invariant_structure_elliptic(&m, 1e-12, 50_000).unwrap();
        let c = eta.eccentricity();
        let mut fwd = DMatrix::<f64>::identity(2, 2);
        let mut bwd = DMatrix::<f64>::identity(2, 2);
        let m_inv = m.clone().try_inverse().unwrap();
        for _ in 1..=256 {
            fwd = &m * fwd;
            bwd = &m_inv * bwd;
            let k = linalg::spectral_norm(&fwd) * linalg::spectral_norm(&bwd);
            assert!(k <= c.powi(4) * (1.0 + 1e-9), "k = {k}, C^4 = {}", c.powi(4));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn action_is_isometric(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = rng.gen_range(2..=4);
            let eta = random_structure(d, &mut rng);
            let zeta = random_structure(d, &mut rng);
            let b = random_invertible(d, &mut rng);
            let before = distance(&eta, &zeta);
            let after = distance(&push(&b, &eta), &push(&b, &zeta));
            prop_assert!((before - after).abs() <= 1e-10 * before.max(1.0));
        }

        #[test]
        fn pull_is_functorial(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = rng.gen_range(2..=3);
            let eta = random_structure(d, &mut rng);
            let a = random_invertible(d, &mut rng);
            let b = random_invertible(d, &mut rng);
            let lhs = pull(&(&a * &b), &eta);
            let rhs = pull(&a, &pull(&b, &eta));
            prop_assert!(distance(&lhs, &rhs) <= 1e-10);
        }

        #[test]
        fn push_composes_contravariantly(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let eta = random_structure(2, &mut rng);
            let b1 = random_invertible(2, &mut rng);
            let b2 = random_invertible(2, &mut rng);
            let lhs = push(&b1, &push(&b2, &eta));
            let rhs = push(&(&b2 * &b1), &eta);
            prop_assert!(distance(&lhs, &rhs) <= 1e-10);
        }
    }
}
