//! Built-in example systems and randomized builders.
//!
//! Everything the test suites and the CLI exercise is constructed from here:
//! the standard small shifts, conformal and non-conformal generators,
//! manufactured coboundaries and conformal conjugates, and seeded random
//! instances with controlled conditioning.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;

use crate::analysis::{ConformalField, TransferField};
use crate::cocycle::LocallyConstantGenerator;
use crate::conformal::ConformalStructure;
use crate::error::{Error, Result};
use crate::linalg;
use crate::sft::Sft;

/// The full shift on `l` symbols.
pub fn full_shift(l: usize, tau: f64) -> Result<Sft> {
    Sft::new(&vec![vec![1u8; l]; l], tau)
}

/// The golden-mean shift (`11, 12, 21` allowed, `22` forbidden).
pub fn golden_mean_shift(tau: f64) -> Result<Sft> {
    Sft::new(&[vec![1, 1], vec![1, 0]], tau)
}

/// The 2-periodic shift (`12, 21` only) -- transitive but not mixing.
pub fn period_two_shift(tau: f64) -> Result<Sft> {
    Sft::new(&[vec![0, 1], vec![1, 0]], tau)
}

/// Plane rotation by `angle`.
pub fn rotation_matrix(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// The identity cocycle in dimension `d`.
pub fn identity_generator(sft: &Sft, d: usize) -> Result<LocallyConstantGenerator> {
    LocallyConstantGenerator::constant(sft, DMatrix::identity(d, d))
}

/// Constant diagonal cocycle.
pub fn constant_diag(sft: &Sft, entries: &[f64]) -> Result<LocallyConstantGenerator> {
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(entries));
    LocallyConstantGenerator::constant(sft, m)
}

/// Orthogonal-valued generator `A(x) = R(angles[x_0])`, window `[0, 0]`.
pub fn rotation_by_symbol(sft: &Sft, angles: &[f64]) -> Result<LocallyConstantGenerator> {
    if angles.len() != sft.alphabet_size() {
        return Err(Error::InvalidInput("one angle per symbol required".into()));
    }
    let table: BTreeMap<_, _> = sft
        .symbols()
        .map(|s| (vec![s], rotation_matrix(angles[(s - 1) as usize])))
        .collect();
    LocallyConstantGenerator::new(sft, 2, 0, 0, table)
}

/// Conjugated-rotation generator `A(x) = S R(angles[x_0]) S^{-1}`: preserves
/// the conformal structure of `S^{-T} S^{-1}` but is not conformal for the
/// Euclidean structure unless `S` is orthogonal.
pub fn conjugated_rotation(
    sft: &Sft,
    s: &DMatrix<f64>,
    angles: &[f64],
) -> Result<LocallyConstantGenerator> {
    if angles.len() != sft.alphabet_size() {
        return Err(Error::InvalidInput("one angle per symbol required".into()));
    }
    let s_inv = linalg::invert(s)?;
    let table: BTreeMap<_, _> = sft
        .symbols()
        .map(|sym| (vec![sym], s * rotation_matrix(angles[(sym - 1) as usize]) * &s_inv))
        .collect();
    LocallyConstantGenerator::new(sft, 2, 0, 0, table)
}

/// The built-in bunched window-one example: window `[-1, 0]`, mildly
/// non-conformal entries `R(alpha) diag(1+delta, (1+delta)^{-1})` with
/// per-step distortion far below `tau = 1`, so stable holonomies are
/// nontrivial and the uniform certificate exists.
pub fn bunched_window1(sft: &Sft) -> Result<LocallyConstantGenerator> {
    const ALPHAS: [f64; 8] = [0.3, 0.9, 1.2, 0.5, 0.7, 1.0, 0.2, 1.4];
    const DELTAS: [f64; 8] = [0.02, -0.03, 0.05, 0.01, -0.04, 0.03, -0.02, 0.04];
    let words = sft.enumerate_words(2)?;
    let table: BTreeMap<_, _> = words
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            let d = 1.0 + DELTAS[i % DELTAS.len()];
            let m = rotation_matrix(ALPHAS[i % ALPHAS.len()])
                * DMatrix::from_row_slice(2, 2, &[d, 0.0, 0.0, 1.0 / d]);
            (w, m)
        })
        .collect();
    LocallyConstantGenerator::new(sft, 2, -1, 0, table)
}

/// `A(x) = P(f(x)) B(x) P(x)^{-1}` as a locally constant generator; the
/// combined window is `[min(b-, p-), max(b+, p+ + 1)]`.
pub fn coboundary_generator(
    sft: &Sft,
    transfer: &TransferField,
    gen_b: &LocallyConstantGenerator,
) -> Result<LocallyConstantGenerator> {
    if transfer.dimension() != gen_b.dimension() {
        return Err(Error::InvalidInput("transfer and cocycle dimensions differ".into()));
    }
    let (blo, bhi) = gen_b.window();
    let (plo, phi) = transfer.window();
    let lo = blo.min(plo);
    let hi = bhi.max(phi + 1);
    let len = (hi - lo + 1) as usize;
    let mut table = BTreeMap::new();
    for w in sft.enumerate_words(len)? {
        let slice = |wlo: i64, whi: i64, shift: i64| -> Vec<u16> {
            ((wlo + shift - lo)..=(whi + shift - lo)).map(|t| w[t as usize]).collect()
        };
        let b = &gen_b.table()[&slice(blo, bhi, 0)];
        let p_x = &transfer.table()[&slice(plo, phi, 0)];
        let p_fx = &transfer.table()[&slice(plo, phi, 1)];
        table.insert(w, p_fx * b * linalg::invert(p_x)?);
    }
    LocallyConstantGenerator::new(sft, gen_b.dimension(), lo, hi, table)
}

/// A generator preserving the given 2-dimensional field exactly:
/// `A(x) = eta_{f(x)}^{-1/2} R(angles[x_0]) eta_x^{1/2}`.
pub fn generator_preserving(
    sft: &Sft,
    field: &ConformalField,
    angles: &[f64],
) -> Result<LocallyConstantGenerator> {
    if field.dimension() != 2 {
        return Err(Error::InvalidInput("preserving builder is 2-dimensional".into()));
    }
    if angles.len() != sft.alphabet_size() {
        return Err(Error::InvalidInput("one angle per symbol required".into()));
    }
    let (flo, fhi) = field.window();
    let lo = flo;
    let hi = fhi + 1;
    let len = (hi - lo + 1) as usize;
    let mut table = BTreeMap::new();
    for w in sft.enumerate_words(len)? {
        let slice = |shift: i64| -> Vec<u16> {
            ((flo + shift - lo)..=(fhi + shift - lo)).map(|t| w[t as usize]).collect()
        };
        let eta_x = &field.table()[&slice(0)];
        let eta_fx = &field.table()[&slice(1)];
        let root = linalg::sym_func(eta_x.form(), f64::sqrt);
        let inv_root = linalg::sym_func(eta_fx.form(), |v| 1.0 / v.sqrt());
        let r = rotation_matrix(angles[(w[(0 - lo) as usize] - 1) as usize]);
        table.insert(w, inv_root * r * root);
    }
    LocallyConstantGenerator::new(sft, 2, lo, hi, table)
}

/// Random invertible matrix with condition number at most 4, built from its
/// singular value decomposition; the determinant sign is random so both
/// components of `GL(d, R)` are covered.
pub fn random_invertible<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = random_invertible_posdet(d, rng);
    if rng.gen_bool(0.5) {
        let col = m.column(0) * -1.0;
        m.set_column(0, &col);
    }
    m
}

/// As [`random_invertible`] but with positive determinant.
pub fn random_invertible_posdet<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let q1 = random_orthogonal(d, rng);
    let q2 = random_orthogonal(d, rng);
    let sv = DMatrix::<f64>::from_fn(d, d, |r, c| {
        if r == c {
            rng.gen_range(0.5..2.0)
        } else {
            0.0
        }
    });
    q1 * sv * q2
}

/// Random unit-determinant SPD matrix with eccentricity below 50.
pub fn random_structure<R: Rng>(d: usize, rng: &mut R) -> ConformalStructure {
    loop {
        let a = DMatrix::<f64>::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        let spd = &a * a.transpose() + DMatrix::identity(d, d) * rng.gen_range(0.05..0.5);
        if let Ok(s) = ConformalStructure::from_spd(&spd) {
            if s.eccentricity() < 50.0 {
                return s;
            }
        }
    }
}

/// Random generator over an arbitrary window.
pub fn random_generator<R: Rng>(
    sft: &Sft,
    d: usize,
    lo: i64,
    hi: i64,
    rng: &mut R,
) -> Result<LocallyConstantGenerator> {
    let len = (hi - lo + 1) as usize;
    let table: BTreeMap<_, _> = sft
        .enumerate_words(len)?
        .into_iter()
        .map(|w| (w, random_invertible(d, rng)))
        .collect();
    LocallyConstantGenerator::new(sft, d, lo, hi, table)
}

/// Random generator with positive-determinant entries (SL-normalizable in
/// any dimension).
pub fn random_generator_posdet<R: Rng>(
    sft: &Sft,
    d: usize,
    lo: i64,
    hi: i64,
    rng: &mut R,
) -> Result<LocallyConstantGenerator> {
    let len = (hi - lo + 1) as usize;
    let table: BTreeMap<_, _> = sft
        .enumerate_words(len)?
        .into_iter()
        .map(|w| (w, random_invertible_posdet(d, rng)))
        .collect();
    LocallyConstantGenerator::new(sft, d, lo, hi, table)
}

/// Random nearly conformal generator: orthogonal times a diagonal stretch of
/// size at most `delta`, SL-normalized, so per-step distortion stays below
/// `2 d log(1 + delta)`.
pub fn random_near_conformal<R: Rng>(
    sft: &Sft,
    d: usize,
    lo: i64,
    hi: i64,
    delta: f64,
    rng: &mut R,
) -> Result<LocallyConstantGenerator> {
    let len = (hi - lo + 1) as usize;
    let mut table = BTreeMap::new();
    for w in sft.enumerate_words(len)? {
        let q = random_orthogonal(d, rng);
        let stretch = DMatrix::<f64>::from_fn(d, d, |r, c| {
            if r == c {
                (rng.gen_range(-delta..delta)).exp()
            } else {
                0.0
            }
        });
        table.insert(w, q * stretch);
    }
    LocallyConstantGenerator::new(sft, d, lo, hi, table)?.normalize_sl()
}

/// Random special orthogonal matrix (QR of a Gaussian-ish sample, sign-fixed).
pub fn random_orthogonal<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let m = DMatrix::<f64>::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let qr = m.qr();
    let mut q = qr.q();
    if q.determinant() < 0.0 {
        let col = q.column(0) * -1.0;
        q.set_column(0, &col);
    }
    q
}

/// Random transfer field.
pub fn random_transfer<R: Rng>(
    sft: &Sft,
    d: usize,
    lo: i64,
    hi: i64,
    rng: &mut R,
) -> Result<TransferField> {
    let len = (hi - lo + 1) as usize;
    let table: BTreeMap<_, _> = sft
        .enumerate_words(len)?
        .into_iter()
        .map(|w| (w, random_invertible(d, rng)))
        .collect();
    TransferField::new(sft, d, lo, hi, table)
}

/// Random transfer field with every entry in `SL(d, R)`.
pub fn random_transfer_sl<R: Rng>(
    sft: &Sft,
    d: usize,
    lo: i64,
    hi: i64,
    rng: &mut R,
) -> Result<TransferField> {
    let len = (hi - lo + 1) as usize;
    let mut table = BTreeMap::new();
    for w in sft.enumerate_words(len)? {
        let mut m = random_invertible(d, rng);
        if m.determinant() < 0.0 {
            let col = m.column(0) * -1.0;
            m.set_column(0, &col);
        }
        let det = m.determinant();
        table.insert(w, m / det.powf(1.0 / d as f64));
    }
    TransferField::new(sft, d, lo, hi, table)
}

/// Random locally constant conformal field with entries `exp(S)` for random
/// symmetric `S` of norm at most `spread`.
pub fn random_conformal_field<R: Rng>(
    sft: &Sft,
    d: usize,
    lo: i64,
    hi: i64,
    spread: f64,
    rng: &mut R,
) -> Result<ConformalField> {
    let len = (hi - lo + 1) as usize;
    let mut table = BTreeMap::new();
    for w in sft.enumerate_words(len)? {
        let raw = DMatrix::<f64>::from_fn(d, d, |_, _| rng.gen_range(-spread..spread));
        let sym = linalg::symmetrize(&raw);
        let eta = ConformalStructure::from_spd(&linalg::sym_func(&sym, f64::exp))?;
        table.insert(w, eta);
    }
    ConformalField::new(sft, lo, hi, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::verify_invariant_field;

    #[test]
    fn builders_produce_valid_objects() {
        let sft = golden_mean_shift(1.0).unwrap();
        assert_eq!(sft.mixing_index(), Some(2));
        let gen = bunched_window1(&sft).unwrap();
        assert_eq!(gen.table().len(), 3);
        assert!(gen.zeta() < 0.15);
        assert!(period_two_shift(1.0).unwrap().mixing_index().is_none());
    }

    #[test]
    fn preserving_builder_is_exactly_invariant() {
        let sft = full_shift(2, 1.0).unwrap();
        let mut rng = {
            use rand::SeedableRng;
            rand_chacha::ChaCha8Rng::seed_from_u64(55)
        };
        let field = random_conformal_field(&sft, 2, 0, 1, 0.4, &mut rng).unwrap();
        let gen = generator_preserving(&sft, &field, &[0.8, 1.1]).unwrap();
        assert!(verify_invariant_field(&gen, &field, &sft).unwrap() < 1e-12);
        // entries are in SL(2)
        for m in gen.table().values() {
            assert!((m.determinant() - 1.0).abs() < 1e-12);
        }
    }
}
