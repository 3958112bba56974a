//! Markov measures compatible with the transition structure.
//!
//! These are the computable fully supported shift-invariant measures with
//! local product structure: a row-stochastic matrix `P` supported exactly
//! where `Q` is 1, together with its stationary vector `pi`. Cylinder
//! weights, the one-sided Jacobians, the entropy-maximizing (Parry)
//! construction, and seeded orbit sampling all live here.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sft::{Sft, Symbol, SymbolicPoint, Word};

const STOCHASTIC_TOL: f64 = 1e-12;

/// A stationary Markov measure: row-stochastic `P` with `P_ij > 0` iff
/// `q_ij = 1`, and the stationary probability vector `pi P = pi`.
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    stochastic: DMatrix<f64>,
    stationary: DVector<f64>,
}

impl MarkovMeasure {
    /// Validates the support condition, row sums, and stationarity.
    pub fn new(sft: &Sft, stochastic: DMatrix<f64>) -> Result<Self> {
        let l = sft.alphabet_size();
        if stochastic.nrows() != l || stochastic.ncols() != l {
            return Err(Error::InvalidInput(format!(
                "stochastic matrix must be {l}x{l}, got {}x{}",
                stochastic.nrows(),
                stochastic.ncols()
            )));
        }
        for i in 0..l {
            let mut sum = 0.0;
            for j in 0..l {
                let p = stochastic[(i, j)];
                let allowed = sft.allowed((i + 1) as Symbol, (j + 1) as Symbol);
                if allowed && p <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "P[{},{}] must be positive on the allowed transition",
                        i + 1,
                        j + 1
                    )));
                }
                if !allowed && p != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "P[{},{}] must be zero on the forbidden transition",
                        i + 1,
                        j + 1
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidInput(format!(
                    "row {} sums to {sum}, not 1 within {STOCHASTIC_TOL:.0e}",
                    i + 1
                )));
            }
        }
        let stationary = solve_stationary(&stochastic)?;
        Ok(Self { stochastic, stationary })
    }

    /// The maximal-entropy (Parry) measure: `P_ij = q_ij v_j / (lambda v_i)`
    /// from the Perron eigendata of `Q`. Requires a mixing subshift.
    pub fn parry(sft: &Sft) -> Result<Self> {
        if sft.mixing_index().is_none() {
            return Err(Error::NotMixing);
        }
        let l = sft.alphabet_size();
        let q = DMatrix::<f64>::from_fn(l, l, |i, j| {
            sft.allowed((i + 1) as Symbol, (j + 1) as Symbol) as u8 as f64
        });
        let (lambda, v) = perron(&q)?;
        let p = DMatrix::<f64>::from_fn(l, l, |i, j| q[(i, j)] * v[j] / (lambda * v[i]));
        // Rescale rows exactly to unit sum, to land within the constructor
        // tolerance regardless of eigen-solver residue.
        let mut p = p;
        for i in 0..l {
            let s: f64 = p.row(i).iter().sum();
            for j in 0..l {
                p[(i, j)] /= s;
            }
        }
        Self::new(sft, p)
    }

    /// A random measure compatible with `Q`: positive weights on allowed
    /// transitions, rows normalized.
    pub fn random_compatible<R: Rng>(sft: &Sft, rng: &mut R) -> Result<Self> {
        let l = sft.alphabet_size();
        let mut p = DMatrix::<f64>::zeros(l, l);
        for i in 0..l {
            for j in 0..l {
                if sft.allowed((i + 1) as Symbol, (j + 1) as Symbol) {
                    p[(i, j)] = rng.gen_range(0.05..1.0);
                }
            }
            let s: f64 = p.row(i).iter().sum();
            for j in 0..l {
                p[(i, j)] /= s;
            }
        }
        Self::new(sft, p)
    }

    pub fn stochastic(&self) -> &DMatrix<f64> {
        &self.stochastic
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.stationary
    }

    /// `pi_a` for a 1-based symbol.
    pub fn symbol_prob(&self, a: Symbol) -> f64 {
        self.stationary[(a - 1) as usize]
    }

    /// `P_ab` for 1-based symbols.
    pub fn transition_prob(&self, a: Symbol, b: Symbol) -> f64 {
        self.stochastic[((a - 1) as usize, (b - 1) as usize)]
    }

    /// Markov weight of the cylinder fixed by `symbols`:
    /// `pi_{a_0} prod P_{a_i a_{i+1}}`. Independent of where the cylinder
    /// sits (shift invariance); words with a forbidden transition get 0.
    pub fn cylinder_measure(&self, symbols: &[Symbol]) -> f64 {
        if symbols.is_empty() {
            return 1.0;
        }
        let mut m = self.symbol_prob(symbols[0]);
        for w in symbols.windows(2) {
            m *= self.transition_prob(w[0], w[1]);
        }
        m
    }

    /// Unstable Jacobian of the one-sided factor: depends on `(y_0, y_1)`
    /// only, `J_u(y) = pi_{y_1} / (pi_{y_0} P_{y_0 y_1})`.
    pub fn jacobian_u(&self, y: &SymbolicPoint) -> f64 {
        let (a, b) = (y.symbol_at(0), y.symbol_at(1));
        self.symbol_prob(b) / (self.symbol_prob(a) * self.transition_prob(a, b))
    }

    /// Stable Jacobian, via the reversed chain
    /// `P*_{ij} = pi_j P_{ji} / pi_i`: depends on `(y_{-1}, y_{-2})` only.
    pub fn jacobian_s(&self, y: &SymbolicPoint) -> f64 {
        let rev = self.reversed();
        let (a, b) = (y.symbol_at(-1), y.symbol_at(-2));
        rev.symbol_prob(b) / (rev.symbol_prob(a) * rev.transition_prob(a, b))
    }

    /// The time-reversed measure (stochastic matrix of the chain read right
    /// to left; same stationary vector). Its support is the transposed
    /// transition pattern, so it is not validated against the original `Q`.
    pub fn reversed(&self) -> MarkovMeasure {
        let l = self.stochastic.nrows();
        let p = DMatrix::<f64>::from_fn(l, l, |i, j| {
            self.stationary[j] * self.stochastic[(j, i)] / self.stationary[i]
        });
        MarkovMeasure { stochastic: p, stationary: self.stationary.clone() }
    }

    /// Entropy rate `-sum_i pi_i sum_j P_ij log P_ij`.
    pub fn entropy(&self) -> f64 {
        let l = self.stochastic.nrows();
        let mut h = 0.0;
        for i in 0..l {
            for j in 0..l {
                let p = self.stochastic[(i, j)];
                if p > 0.0 {
                    h -= self.stationary[i] * p * p.ln();
                }
            }
        }
        h
    }

    /// A stationary sample path of the chain, deterministic in `seed`.
    ///
    /// The generator is ChaCha8 seeded with `seed`; callers running many
    /// orbits should split streams with [`Self::sample_orbit_stream`] rather
    /// than perturbing the seed.
    pub fn sample_orbit(&self, length: usize, seed: u64) -> Word {
        self.sample_orbit_stream(length, seed, 0)
    }

    /// As [`Self::sample_orbit`], on ChaCha8 stream `stream` of the seed:
    /// orbit `i` of an ensemble uses stream `i`, which makes ensembles
    /// reproducible and order-independent.
    pub fn sample_orbit_stream(&self, length: usize, seed: u64, stream: u64) -> Word {
        assert!(length >= 1, "orbit length must be >= 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let l = self.stochastic.nrows();
        let mut symbols = Vec::with_capacity(length);
        let first = sample_index(&mut rng, (0..l).map(|i| self.stationary[i]));
        symbols.push((first + 1) as Symbol);
        for _ in 1..length {
            let cur = (*symbols.last().unwrap() - 1) as usize;
            let next = sample_index(&mut rng, (0..l).map(|j| self.stochastic[(cur, j)]));
            symbols.push((next + 1) as Symbol);
        }
        Word::unchecked(symbols, 0)
    }
}

fn sample_index<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64>) -> usize {
    let w: Vec<f64> = weights.collect();
    let u: f64 = rng.gen::<f64>() * w.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &p) in w.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    w.len() - 1
}

/// Solves `pi P = pi`, `sum pi = 1` by replacing one equation of the
/// singular system with the normalization row.
fn solve_stationary(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let l = p.nrows();
    let mut a = p.transpose() - DMatrix::<f64>::identity(l, l);
    for j in 0..l {
        a[(l - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(l);
    b[l - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidInput("stationary distribution is not unique".into()))?;
    if pi.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidInput("stationary vector is not entrywise positive".into()));
    }
    let residual = (pi.transpose() * p - pi.transpose()).amax();
    if residual > STOCHASTIC_TOL {
        return Err(Error::InvalidInput(format!(
            "stationary residual {residual:.3e} exceeds {STOCHASTIC_TOL:.0e}"
        )));
    }
    Ok(pi)
}

/// Perron eigenvalue and positive right eigenvector of a primitive
/// nonnegative matrix, by power iteration from the all-ones vector.
fn perron(q: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let l = q.nrows();
    let mut v = DVector::<f64>::repeat(l, 1.0);
    for _ in 0..100_000 {
        let w = q * &v;
        let norm = w.amax();
        if norm == 0.0 {
            return Err(Error::InvalidInput("matrix is nilpotent".into()));
        }
        let w = w / norm;
        let delta = (&w - &v).amax();
        v = w;
        if delta < 1e-15 {
            break;
        }
    }
    // Rayleigh quotient for the eigenvalue.
    let qv = q * &v;
    let lambda = v.dot(&qv) / v.dot(&v);
    Ok((lambda, v))
}
