//! Locally constant linear cocycles and their growth data.
//!
//! A generator is a map `A` from points to invertible `d x d` matrices that
//! depends only on the coordinate window `[w-, w+]`; it is stored as a table
//! over the valid words of that window. Locally constant generators are the
//! finitely-describable Lipschitz generators, and every Holder generator is
//! a uniform limit of them.
//!
//! Products follow the cocycle convention
//! `A^n(x) = A(f^{n-1} x) ... A(f x) A(x)` for `n > 0`, the identity at
//! `n = 0`, and `A^n(x) = A(f^n x)^{-1} ... A(f^{-1} x)^{-1}` for `n < 0`.
//! Long products renormalize by exact powers of two every 32 factors and
//! carry the removed binary exponent separately, so norms of products with
//! `n ~ 10^4` never overflow.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::measure::MarkovMeasure;
use crate::sft::{Sft, Symbol, SymbolicPoint};

const MIN_ABS_DET: f64 = 1e-12;
const RENORM_EVERY: usize = 32;

/// A table of values indexed by the valid words of a coordinate window
/// `[lo, hi]` with `lo <= 0 <= hi`. The table must cover exactly those words.
#[derive(Debug, Clone)]
pub struct LocalMap<T> {
    lo: i64,
    hi: i64,
    table: BTreeMap<Vec<Symbol>, T>,
}

impl<T> LocalMap<T> {
    pub fn new(sft: &Sft, lo: i64, hi: i64, table: BTreeMap<Vec<Symbol>, T>) -> Result<Self> {
        if lo > 0 || hi < 0 {
            return Err(Error::InvalidInput(format!(
                "window must satisfy lo <= 0 <= hi, got [{lo}, {hi}]"
            )));
        }
        let len = (hi - lo + 1) as usize;
        let words = sft.enumerate_words(len)?;
        let missing: Vec<_> = words.iter().filter(|w| !table.contains_key(*w)).collect();
        if !missing.is_empty() {
            return Err(Error::InvalidInput(format!(
                "table is missing {} valid window word(s): {missing:?}",
                missing.len()
            )));
        }
        if table.len() != words.len() {
            let extra: Vec<_> = table.keys().filter(|k| !sft.is_valid_word(k) || k.len() != len).collect();
            return Err(Error::InvalidInput(format!(
                "table has {} entries for {} valid words; unexpected keys: {extra:?}",
                table.len(),
                words.len()
            )));
        }
        Ok(Self { lo, hi, table })
    }

    /// Window bounds `(lo, hi)`, inclusive.
    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn word_len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn table(&self) -> &BTreeMap<Vec<Symbol>, T> {
        &self.table
    }

    /// Value at the word `x_{j+lo} .. x_{j+hi}`, i.e. the value of the
    /// locally constant map at `f^j(x)`.
    pub fn value_at(&self, x: &SymbolicPoint, j: i64) -> &T {
        let mut key = vec![0 as Symbol; self.word_len()];
        x.fill_window(j + self.lo, &mut key);
        self.table.get(key.as_slice()).expect("valid point produces a covered window word")
    }

    fn value_for_fn(&self, sym: &impl Fn(i64) -> Symbol, j: i64, key: &mut Vec<Symbol>) -> &T {
        key.clear();
        key.extend((0..self.word_len() as i64).map(|k| sym(j + self.lo + k)));
        self.table.get(key.as_slice()).expect("symbol source must produce covered window words")
    }

    pub fn map_values<U>(&self, f: impl Fn(&T) -> U) -> LocalMap<U> {
        LocalMap {
            lo: self.lo,
            hi: self.hi,
            table: self.table.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        }
    }
}

/// A matrix carried as `matrix * 2^log2_scale`, the renormalized form of a
/// long cocycle product.
#[derive(Debug, Clone)]
pub struct ScaledMatrix {
    pub matrix: DMatrix<f64>,
    pub log2_scale: i64,
}

impl ScaledMatrix {
    fn identity(d: usize) -> Self {
        Self { matrix: DMatrix::identity(d, d), log2_scale: 0 }
    }

    /// `log ||M||` without materializing the unscaled matrix.
    pub fn log_norm(&self) -> f64 {
        linalg::spectral_norm(&self.matrix).ln() + self.log2_scale as f64 * std::f64::consts::LN_2
    }

    /// `log (||M|| ||M^{-1}||)`; scale cancels in the ratio.
    pub fn log_distortion(&self) -> f64 {
        linalg::log_distortion(&self.matrix)
    }

    /// The plain matrix; may overflow to infinities when the scale is huge.
    pub fn unscaled(&self) -> DMatrix<f64> {
        &self.matrix * 2.0_f64.powi(self.log2_scale as i32)
    }
}

/// Extremal Lyapunov exponents (log-stretch per iterate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovPair {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

impl LyapunovPair {
    /// Exponent gap `lambda_plus - lambda_minus`.
    pub fn gap(&self) -> f64 {
        self.lambda_plus - self.lambda_minus
    }
}

/// Mean and standard error of a sampled Birkhoff/Kingman estimate.
#[derive(Debug, Clone, Copy)]
pub struct BirkhoffEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub n: usize,
}

/// A locally constant cocycle generator.
#[derive(Debug, Clone)]
pub struct LocallyConstantGenerator {
    dim: usize,
    map: LocalMap<DMatrix<f64>>,
}

impl LocallyConstantGenerator {
    /// Builds a generator; every table entry must be an invertible `d x d`
    /// matrix and the table must cover exactly the valid window words.
    pub fn new(
        sft: &Sft,
        dim: usize,
        lo: i64,
        hi: i64,
        table: BTreeMap<Vec<Symbol>, DMatrix<f64>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        for (word, m) in &table {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidInput(format!(
                    "entry for word {word:?} is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            linalg::check_invertible(m, MIN_ABS_DET)
                .map_err(|e| Error::InvalidInput(format!("entry for word {word:?}: {e}")))?;
        }
        let map = LocalMap::new(sft, lo, hi, table)?;
        Ok(Self { dim, map })
    }

    /// Constant generator `A(x) = m` (window `[0, 0]`).
    pub fn constant(sft: &Sft, m: DMatrix<f64>) -> Result<Self> {
        let dim = m.nrows();
        let table: BTreeMap<_, _> = sft.symbols().map(|s| (vec![s], m.clone())).collect();
        Self::new(sft, dim, 0, 0, table)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> (i64, i64) {
        self.map.window()
    }

    pub fn table(&self) -> &BTreeMap<Vec<Symbol>, DMatrix<f64>> {
        self.map.table()
    }

    pub fn local_map(&self) -> &LocalMap<DMatrix<f64>> {
        &self.map
    }

    /// `A(f^j x)`.
    pub fn matrix_at(&self, x: &SymbolicPoint, j: i64) -> &DMatrix<f64> {
        self.map.value_at(x, j)
    }

    /// `A^n(x)` as a plain matrix.
    pub fn evaluate(&self, x: &SymbolicPoint, n: i64) -> DMatrix<f64> {
        self.scaled_product(x, n).unscaled()
    }

    /// `A^n(x)` in renormalized form.
    pub fn scaled_product(&self, x: &SymbolicPoint, n: i64) -> ScaledMatrix {
        self.scaled_product_with(|j| x.symbol_at(j), n)
    }

    /// `A^n` over an arbitrary symbol source (used for products along
    /// sampled finite words).
    pub fn scaled_product_with(&self, sym: impl Fn(i64) -> Symbol, n: i64) -> ScaledMatrix {
        let mut acc = ScaledMatrix::identity(self.dim);
        let mut key: Vec<Symbol> = Vec::with_capacity(self.map.word_len());
        let mut since_renorm = 0usize;
        let mut step = |acc: &mut ScaledMatrix, factor: DMatrix<f64>| {
            acc.matrix = factor * &acc.matrix;
            since_renorm += 1;
            if since_renorm == RENORM_EVERY {
                acc.log2_scale += linalg::renormalize_pow2(&mut acc.matrix);
                since_renorm = 0;
            }
        };
        if n >= 0 {
            for j in 0..n {
                let factor = self.map.value_for_fn(&sym, j, &mut key).clone();
                step(&mut acc, factor);
            }
        } else {
            for j in 1..=(-n) {
                let factor = self.map.value_for_fn(&sym, -j, &mut key);
                let inv = factor
                    .clone()
                    .try_inverse()
                    .expect("table entries are invertible by construction");
                step(&mut acc, inv);
            }
        }
        acc
    }

    /// `log ||A^n(x)||`, safe for large `|n|`.
    pub fn log_norm(&self, x: &SymbolicPoint, n: i64) -> f64 {
        self.scaled_product(x, n).log_norm()
    }

    /// `log (||A^n(x)|| ||A^n(x)^{-1}||)`, safe for large `|n|`.
    pub fn log_distortion_block(&self, x: &SymbolicPoint, n: i64) -> f64 {
        self.scaled_product(x, n).log_distortion()
    }

    /// The distortion observable `psi_N(x) = (1/N) log ||A^N(x)|| ||A^N(x)^{-1}||`.
    pub fn distortion(&self, x: &SymbolicPoint, n_block: usize) -> f64 {
        assert!(n_block >= 1);
        self.log_distortion_block(x, n_block as i64) / n_block as f64
    }

    /// SL-normalization `B = det(A)^{-1/d} A` entrywise on the table.
    ///
    /// In even dimension a negative determinant has no real d-th root with
    /// the right sign, which is reported rather than guessed around.
    pub fn normalize_sl(&self) -> Result<Self> {
        let d = self.dim;
        let mut table = BTreeMap::new();
        for (word, m) in self.map.table() {
            let det = m.determinant();
            if det < 0.0 && d % 2 == 0 {
                return Err(Error::NegativeDeterminant { det, dim: d });
            }
            let root = det.signum() * det.abs().powf(1.0 / d as f64);
            table.insert(word.clone(), m / root);
        }
        let (lo, hi) = self.map.window();
        Ok(Self { dim: d, map: LocalMap { lo, hi, table } })
    }

    /// Exact extremal exponents of the periodic measure on the orbit of `p`:
    /// `lambda_+ = (1/k) log rho(A^k(p))` and
    /// `lambda_- = -(1/k) log rho(A^k(p)^{-1})`.
    pub fn lyapunov_periodic(&self, p: &SymbolicPoint, k: usize) -> Result<LyapunovPair> {
        if k == 0 || !p.is_fixed_by(k) {
            return Err(Error::NotPeriodic { period: k });
        }
        let prod = self.scaled_product(p, k as i64);
        let ln2 = std::f64::consts::LN_2;
        let inv = linalg::invert(&prod.matrix)?;
        let lambda_plus =
            (linalg::spectral_radius(&prod.matrix).ln() + prod.log2_scale as f64 * ln2) / k as f64;
        let lambda_minus =
            -(linalg::spectral_radius(&inv).ln() - prod.log2_scale as f64 * ln2) / k as f64;
        Ok(LyapunovPair { lambda_plus, lambda_minus })
    }

    /// Sampled Kingman estimate of `lambda_+`: mean and standard error of
    /// `(1/n) log ||A^n||` over `samples` orbits of `mu`. Orbit `i` draws
    /// from ChaCha8 stream `i` of the seed.
    pub fn lyapunov_birkhoff(
        &self,
        mu: &MarkovMeasure,
        n: usize,
        samples: usize,
        seed: u64,
    ) -> BirkhoffEstimate {
        assert!(n >= 1 && samples >= 1);
        let (lo, hi) = self.map.window();
        let len = (n as i64 + hi - lo) as usize;
        let values: Vec<f64> = (0..samples)
            .map(|i| {
                let word = mu.sample_orbit_stream(len, seed, i as u64);
                let syms = word.symbols().to_vec();
                let prod = self.scaled_product_with(|c| syms[(c - lo) as usize], n as i64);
                prod.log_norm() / n as f64
            })
            .collect();
        let mean = values.iter().sum::<f64>() / samples as f64;
        let var = if samples > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples as f64 - 1.0)
        } else {
            0.0
        };
        BirkhoffEstimate { mean, std_error: (var / samples as f64).sqrt(), samples, n }
    }

    /// Exact Lipschitz constant of `A` with respect to `rho_tau`.
    ///
    /// Since `A` reads only the window `[w-, w+]`, the supremum of
    /// `||A(x) - A(y)|| / rho(x, y)` is attained among pairs of window words:
    /// for words `u != v` the deepest achievable agreement radius is
    /// `D(u, v) = min { |c| : u, v differ at window coordinate c }`, giving
    /// the finite maximization `max ||A_u - A_v|| e^{tau D(u, v)}`.
    pub fn lipschitz_constant(&self, sft: &Sft) -> f64 {
        let (lo, _) = self.map.window();
        let entries: Vec<(&Vec<Symbol>, &DMatrix<f64>)> = self.map.table().iter().collect();
        let mut best = 0.0_f64;
        for (i, (wu, mu)) in entries.iter().enumerate() {
            for (wv, mv) in entries.iter().skip(i + 1) {
                let depth = wu
                    .iter()
                    .zip(wv.iter())
                    .enumerate()
                    .filter(|(_, (a, b))| a != b)
                    .map(|(k, _)| (lo + k as i64).unsigned_abs())
                    .min();
                if let Some(d) = depth {
                    let diff = linalg::spectral_norm(&(*mu - *mv));
                    best = best.max(diff * (sft.tau() * d as f64).exp());
                }
            }
        }
        best
    }

    /// `zeta = sup_x log ||A(x)|| ||A(x)^{-1}||`, a finite table maximum.
    pub fn zeta(&self) -> f64 {
        self.map.table().values().map(linalg::log_distortion).fold(0.0, f64::max)
    }

    /// `R = sup_x max(||A(x)||, ||A(x)^{-1}||)`, a finite table maximum.
    pub fn r_bound(&self) -> f64 {
        self.map
            .table()
            .values()
            .map(|m| {
                let sv = m.singular_values();
                sv.max().max(1.0 / sv.min())
            })
            .fold(0.0, f64::max)
    }
}
