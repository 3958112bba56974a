//! Top-level drivers: invariance and coboundary verification, the
//! quasiconformality report, invariant-subspace detection, and the full
//! invariant-structure construction pipeline.
//!
//! Measurable objects are realized as locally constant fields (tables over
//! coordinate windows); on that class every verification below is an exact
//! finite maximization over cylinder words. A failed construction is a
//! scientific result, not an error: it comes back as a typed
//! [`Obstruction`] value (a periodic point with positive exponent certifies
//! that no invariant conformal structure exists at all).

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix, DVector};

use crate::cocycle::{LocalMap, LocallyConstantGenerator};
use crate::conformal::{distance, pull, ConformalStructure};
use crate::error::{Error, Result};
use crate::holonomy::{certify_uniform_bunching, extend_structure, BunchingCertificate};
use crate::linalg;
use crate::sft::{Sft, Symbol, SymbolicPoint};

/// A locally constant conformal-structure field `eta : Sigma -> C^d`.
#[derive(Debug, Clone)]
pub struct ConformalField {
    map: LocalMap<ConformalStructure>,
}

impl ConformalField {
    pub fn new(
        sft: &Sft,
        lo: i64,
        hi: i64,
        table: BTreeMap<Vec<Symbol>, ConformalStructure>,
    ) -> Result<Self> {
        let dims: Vec<usize> = table.values().map(|e| e.dimension()).collect();
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::InvalidInput("field entries have mixed dimensions".into()));
        }
        Ok(Self { map: LocalMap::new(sft, lo, hi, table)? })
    }

    /// The constant field `eta_x = eta`.
    pub fn constant(sft: &Sft, eta: ConformalStructure) -> Result<Self> {
        let table = sft.symbols().map(|s| (vec![s], eta.clone())).collect();
        Self::new(sft, 0, 0, table)
    }

    pub fn window(&self) -> (i64, i64) {
        self.map.window()
    }

    pub fn table(&self) -> &BTreeMap<Vec<Symbol>, ConformalStructure> {
        self.map.table()
    }

    pub fn dimension(&self) -> usize {
        self.map.table().values().next().map_or(0, |e| e.dimension())
    }

    /// `eta_{f^j(x)}`.
    pub fn value(&self, x: &SymbolicPoint, j: i64) -> ConformalStructure {
        self.map.value_at(x, j).clone()
    }

    /// The uniform Euclidean comparison constant `gamma`: smallest bound with
    /// `gamma^{-1} ||v||^2 <= eta_x(v, v) <= gamma ||v||^2` over the field.
    pub fn comparison_bound(&self) -> f64 {
        self.map.table().values().map(|e| e.comparison_bound()).fold(1.0, f64::max)
    }
}

/// A locally constant transfer function `P : Sigma -> GL(d, R)`.
#[derive(Debug, Clone)]
pub struct TransferField {
    dim: usize,
    map: LocalMap<DMatrix<f64>>,
}

impl TransferField {
    pub fn new(
        sft: &Sft,
        dim: usize,
        lo: i64,
        hi: i64,
        table: BTreeMap<Vec<Symbol>, DMatrix<f64>>,
    ) -> Result<Self> {
        for (word, m) in &table {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidInput(format!(
                    "transfer entry for {word:?} is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            linalg::check_invertible(m, 1e-12)
                .map_err(|e| Error::InvalidInput(format!("transfer entry for {word:?}: {e}")))?;
        }
        Ok(Self { dim, map: LocalMap::new(sft, lo, hi, table)? })
    }

    pub fn constant(sft: &Sft, m: DMatrix<f64>) -> Result<Self> {
        let dim = m.nrows();
        let table = sft.symbols().map(|s| (vec![s], m.clone())).collect();
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

    /// `P(f^j x)`.
    pub fn value(&self, x: &SymbolicPoint, j: i64) -> &DMatrix<f64> {
        self.map.value_at(x, j)
    }
}

/// Representative periodic point whose window word is `w`: the word closed
/// into a cycle through a connecting path, anchored so the word occupies
/// `[lo, lo + |w|)`.
fn representative_point(sft: &Sft, w: &[Symbol], lo: i64) -> Result<SymbolicPoint> {
    let m = sft.mixing_index().ok_or(Error::NotMixing)?;
    let conn = sft.connecting_word(*w.last().unwrap(), w[0], m)?;
    let mut cycle = w.to_vec();
    cycle.extend_from_slice(&conn.symbols()[1..m]);
    Ok(SymbolicPoint::periodic(sft, &cycle)?.shifted(-lo))
}

/// Exact maximum over cylinder words of
/// `dist(A(x)[eta_x], eta_{f(x)})`; zero (within tolerance) iff the field is
/// invariant.
pub fn verify_invariant_field(
    gen: &LocallyConstantGenerator,
    field: &ConformalField,
    sft: &Sft,
) -> Result<f64> {
    if gen.dimension() != field.dimension() {
        return Err(Error::InvalidInput("generator and field dimensions differ".into()));
    }
    let (glo, ghi) = gen.window();
    let (flo, fhi) = field.window();
    let lo = glo.min(flo);
    let hi = ghi.max(fhi + 1);
    let len = (hi - lo + 1) as usize;
    let mut worst = 0.0_f64;
    for w in sft.enumerate_words(len)? {
        let slice = |wlo: i64, whi: i64, shift: i64| -> Vec<Symbol> {
            ((wlo + shift - lo)..=(whi + shift - lo)).map(|t| w[t as usize]).collect()
        };
        let a = &gen.table()[&slice(glo, ghi, 0)];
        let eta_x = &field.table()[&slice(flo, fhi, 0)];
        let eta_fx = &field.table()[&slice(flo, fhi, 1)];
        worst = worst.max(distance(&pull(a, eta_x), eta_fx));
    }
    Ok(worst)
}

/// Exact maximum over cylinder words of
/// `||A(x) - P(f(x)) B(x) P(x)^{-1}||`; with `B = Id` this tests the
/// coboundary equation `A(x) = P(f(x)) P(x)^{-1}`.
pub fn verify_coboundary(
    gen_a: &LocallyConstantGenerator,
    gen_b: &LocallyConstantGenerator,
    transfer: &TransferField,
    sft: &Sft,
) -> Result<f64> {
    if gen_a.dimension() != gen_b.dimension() || gen_a.dimension() != transfer.dimension() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let (alo, ahi) = gen_a.window();
    let (blo, bhi) = gen_b.window();
    let (plo, phi) = transfer.window();
    let lo = alo.min(blo).min(plo);
    let hi = ahi.max(bhi).max(phi + 1);
    let len = (hi - lo + 1) as usize;
    let mut worst = 0.0_f64;
    for w in sft.enumerate_words(len)? {
        let slice = |wlo: i64, whi: i64, shift: i64| -> Vec<Symbol> {
            ((wlo + shift - lo)..=(whi + shift - lo)).map(|t| w[t as usize]).collect()
        };
        let a = &gen_a.table()[&slice(alo, ahi, 0)];
        let b = &gen_b.table()[&slice(blo, bhi, 0)];
        let p_x = &transfer.table()[&slice(plo, phi, 0)];
        let p_fx = &transfer.table()[&slice(plo, phi, 1)];
        let rhs = p_fx * b * linalg::invert(p_x)?;
        worst = worst.max(linalg::spectral_norm(&(a - rhs)));
    }
    Ok(worst)
}

/// The field `x -> P(x)[eta_x]`: when `A = (P o f) B P^{-1}` and `eta` is
/// `B`-invariant, this transported field is `A`-invariant.
pub fn transport_field(
    transfer: &TransferField,
    field: &ConformalField,
    sft: &Sft,
) -> Result<ConformalField> {
    let (plo, phi) = transfer.window();
    let (flo, fhi) = field.window();
    let lo = plo.min(flo);
    let hi = phi.max(fhi);
    let len = (hi - lo + 1) as usize;
    let mut table = BTreeMap::new();
    for w in sft.enumerate_words(len)? {
        let slice = |wlo: i64, whi: i64| -> Vec<Symbol> {
            ((wlo - lo)..=(whi - lo)).map(|t| w[t as usize]).collect()
        };
        let p = &transfer.table()[&slice(plo, phi)];
        let eta = &field.table()[&slice(flo, fhi)];
        table.insert(w, pull(p, eta));
    }
    ConformalField::new(sft, lo, hi, table)
}

/// One row of the quasiconformality table.
#[derive(Debug, Clone, Copy)]
pub struct DistortionRow {
    pub n: usize,
    /// `log K(n)`, `K(n) = max_x ||A^n(x)|| ||A^n(x)^{-1}||` over the scanned
    /// point set.
    pub log_k: f64,
}

/// Table of worst-case distortion growth with its exponential fit.
#[derive(Debug, Clone)]
pub struct QuasiconformalityReport {
    pub rows: Vec<DistortionRow>,
    /// Fit `log K(n) ~ log_c + eps n` (least squares).
    pub log_c: f64,
    pub eps: f64,
    /// Declared when the fitted rate is at most `1e-6`.
    pub uniformly_quasiconformal: bool,
}

/// Scans all periodic points of period `<= period_max` plus `samples`
/// random points, recording `K(n)` for `n <= n_max` and fitting its
/// exponential rate.
pub fn quasiconformality_report(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    n_max: usize,
    period_max: usize,
    samples: usize,
    seed: u64,
) -> Result<QuasiconformalityReport> {
    use rand::SeedableRng;
    let mut points = Vec::new();
    for k in 1..=period_max {
        points.extend(sft.enumerate_periodic(k)?);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        points.push(sft.random_point(4, &mut rng)?);
    }
    let mut log_k = vec![f64::NEG_INFINITY; n_max];
    for p in &points {
        let mut acc = DMatrix::<f64>::identity(gen.dimension(), gen.dimension());
        for n in 1..=n_max {
            acc = gen.matrix_at(p, n as i64 - 1) * acc;
            if n % 32 == 0 {
                // distortion is scale-free, so the removed exponent is dropped
                linalg::renormalize_pow2(&mut acc);
            }
            log_k[n - 1] = log_k[n - 1].max(linalg::log_distortion(&acc));
        }
    }
    let rows: Vec<DistortionRow> =
        (1..=n_max).map(|n| DistortionRow { n, log_k: log_k[n - 1] }).collect();
    // least-squares line through (n, log K(n))
    let nf = n_max as f64;
    let sx: f64 = (1..=n_max).map(|n| n as f64).sum();
    let sxx: f64 = (1..=n_max).map(|n| (n as f64) * (n as f64)).sum();
    let sy: f64 = rows.iter().map(|r| r.log_k).sum();
    let sxy: f64 = rows.iter().map(|r| r.n as f64 * r.log_k).sum();
    let denom = nf * sxx - sx * sx;
    let eps = if denom.abs() > 0.0 { (nf * sxy - sx * sy) / denom } else { 0.0 };
    let log_c = (sy - eps * sx) / nf;
    Ok(QuasiconformalityReport {
        rows,
        log_c,
        eps,
        uniformly_quasiconformal: eps <= 1e-6,
    })
}

/// A proper nonzero invariant subspace, as an orthonormal column basis.
#[derive(Debug, Clone)]
pub struct InvariantSubspace {
    pub basis: DMatrix<f64>,
    /// Relative invariance residual `max_M ||(I - P) M B|| / ||M B||`.
    pub residual: f64,
}

const SUBSPACE_MAX_DIM: usize = 6;
const SUBSPACE_RESIDUAL_TOL: f64 = 1e-8;

/// Searches for a common invariant proper nonzero subspace of a set of
/// invertible matrices.
///
/// The generated unital algebra is spanned first; full span (`d^2`) proves
/// irreducibility outright. Otherwise candidate subspaces are examined in a
/// deterministic order: cyclic subspaces of the coordinate axes (lowest
/// index first, which fixes the tie-break), then conjugation-closed sums of
/// eigenlines of generic algebra elements. Over the reals a deficient span
/// does not by itself produce a subspace (a single rotation generates a
/// 2-dimensional algebra with no real invariant line), so candidates are
/// always verified by their invariance residual.
pub fn common_invariant_subspace(
    matrices: &[DMatrix<f64>],
    dim: usize,
) -> Result<Option<InvariantSubspace>> {
    if dim > SUBSPACE_MAX_DIM {
        return Err(Error::DimensionTooLarge { dim, max: SUBSPACE_MAX_DIM });
    }
    if matrices.is_empty() {
        return Err(Error::InvalidInput("need at least one matrix".into()));
    }
    for m in matrices {
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::InvalidInput("matrix dimensions differ from d".into()));
        }
        linalg::check_invertible(m, 1e-12)?;
    }
    let algebra = algebra_basis(matrices, dim);
    if algebra.len() == dim * dim {
        return Ok(None);
    }
    // cyclic subspaces of coordinate vectors
    for i in 0..dim {
        let v = DVector::<f64>::from_fn(dim, |r, _| if r == i { 1.0 } else { 0.0 });
        if let Some(sub) = cyclic_subspace(&algebra, &v, dim, matrices) {
            return Ok(Some(sub));
        }
    }
    // conjugation-closed sums of eigenlines of generic combinations
    for attempt in 0..8u64 {
        let t = generic_combination(matrices, dim, attempt);
        if let Some(sub) = eigenline_subspace(&t, dim, matrices) {
            return Ok(Some(sub));
        }
    }
    Ok(None)
}

/// Orthonormal (Frobenius) basis of the unital algebra generated by the set.
fn algebra_basis(matrices: &[DMatrix<f64>], dim: usize) -> Vec<DMatrix<f64>> {
    let id = DMatrix::<f64>::identity(dim, dim);
    let mut basis: Vec<DMatrix<f64>> = vec![&id / id.norm()];
    let mut frontier = basis.clone();
    while !frontier.is_empty() && basis.len() < dim * dim {
        let mut next = Vec::new();
        for b in &frontier {
            for m in matrices {
                for cand in [m * b, b * m] {
                    if let Some(new) = orthogonal_component(&cand, &basis) {
                        basis.push(new.clone());
                        next.push(new);
                    }
                }
            }
        }
        frontier = next;
    }
    basis
}

/// Gram-Schmidt step in matrix space; `None` when `m` is already in the span.
fn orthogonal_component(m: &DMatrix<f64>, basis: &[DMatrix<f64>]) -> Option<DMatrix<f64>> {
    let mut r = m.clone();
    for b in basis {
        let coeff = r.dot(b);
        r -= b * coeff;
    }
    let norm = r.norm();
    if norm > 1e-9 * m.norm().max(1.0) {
        Some(r / norm)
    } else {
        None
    }
}

/// The cyclic subspace `span { B v }` over the algebra basis; returned when
/// proper, nonzero, and verifiably invariant.
fn cyclic_subspace(
    algebra: &[DMatrix<f64>],
    v: &DVector<f64>,
    dim: usize,
    matrices: &[DMatrix<f64>],
) -> Option<InvariantSubspace> {
    let mut cols = DMatrix::<f64>::zeros(dim, algebra.len());
    for (j, b) in algebra.iter().enumerate() {
        cols.set_column(j, &(b * v));
    }
    let basis = column_space(&cols, 1e-9)?;
    if basis.ncols() == 0 || basis.ncols() >= dim {
        return None;
    }
    verified_subspace(basis, matrices)
}

/// Orthonormal basis of the (numerical) column space.
fn column_space(m: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let svd = m.clone().svd(true, false);
    let u = svd.u?;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol * svd.singular_values.max().max(1.0)).count();
    Some(u.columns(0, rank).into_owned())
}

fn verified_subspace(basis: DMatrix<f64>, matrices: &[DMatrix<f64>]) -> Option<InvariantSubspace> {
    let d = basis.nrows();
    let proj = &basis * basis.transpose();
    let complement = DMatrix::<f64>::identity(d, d) - proj;
    let mut residual = 0.0_f64;
    for m in matrices {
        let image = m * &basis;
        let leak = linalg::spectral_norm(&(&complement * &image));
        residual = residual.max(leak / linalg::spectral_norm(&image).max(1e-300));
    }
    (residual <= SUBSPACE_RESIDUAL_TOL).then_some(InvariantSubspace { basis, residual })
}

/// Deterministic "generic" algebra element: a fixed pseudo-random positive
/// combination of the generators and the identity.
fn generic_combination(matrices: &[DMatrix<f64>], dim: usize, attempt: u64) -> DMatrix<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed ^ attempt);
    let mut t = DMatrix::<f64>::identity(dim, dim) * rng.gen_range(0.1..1.0);
    for m in matrices {
        t += m * rng.gen_range(0.1..1.0);
    }
    t
}

/// Enumerates conjugation-closed eigenline subsets of `t` (smallest first)
/// and returns the first verified invariant subspace they span.
fn eigenline_subspace(
    t: &DMatrix<f64>,
    dim: usize,
    matrices: &[DMatrix<f64>],
) -> Option<InvariantSubspace> {
    let pairs = complex_eigenpairs(t)?;
    // group eigenvalues into real ones and conjugate pairs
    #[derive(Clone)]
    enum Block {
        Real(DVector<f64>),
        Pair(DVector<f64>, DVector<f64>),
    }
    let mut blocks: Vec<Block> = Vec::new();
    let mut used = vec![false; pairs.len()];
    for i in 0..pairs.len() {
        if used[i] {
            continue;
        }
        let (lam, v) = &pairs[i];
        if lam.im.abs() < 1e-9 * lam.norm().max(1.0) {
            blocks.push(Block::Real(v.map(|z| z.re)));
            used[i] = true;
        } else {
            // find the conjugate partner
            let mut partner = None;
            for (j, flag) in used.iter().enumerate().skip(i + 1) {
                if !flag && (pairs[j].0 - lam.conj()).norm() < 1e-6 * lam.norm().max(1.0) {
                    partner = Some(j);
                    break;
                }
            }
            let j = partner?;
            used[i] = true;
            used[j] = true;
            blocks.push(Block::Pair(v.map(|z| z.re), v.map(|z| z.im)));
        }
    }
    let nb = blocks.len();
    // subsets ordered by size then index
    let mut subsets: Vec<Vec<usize>> = (1u32..(1 << nb)).map(|mask| {
        (0..nb).filter(|&b| mask >> b & 1 == 1).collect()
    }).collect();
    subsets.sort_by_key(|s| (s.len(), s.clone()));
    for subset in subsets {
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for &b in &subset {
            match &blocks[b] {
                Block::Real(v) => cols.push(v.clone()),
                Block::Pair(re, im) => {
                    cols.push(re.clone());
                    cols.push(im.clone());
                }
            }
        }
        if cols.is_empty() || cols.len() >= dim {
            continue;
        }
        let mut m = DMatrix::<f64>::zeros(dim, cols.len());
        for (j, cvec) in cols.iter().enumerate() {
            m.set_column(j, cvec);
        }
        let Some(basis) = column_space(&m, 1e-9) else { continue };
        if basis.ncols() == 0 || basis.ncols() >= dim {
            continue;
        }
        if let Some(sub) = verified_subspace(basis, matrices) {
            return Some(sub);
        }
    }
    None
}

/// Eigenvalues with eigenvectors by shifted inverse iteration in complex
/// arithmetic. `None` when the solve degenerates.
fn complex_eigenpairs(t: &DMatrix<f64>) -> Option<Vec<(Complex<f64>, DVector<Complex<f64>>)>> {
    let d = t.nrows();
    let tc = t.map(|x| Complex::new(x, 0.0));
    let eigenvalues = t.complex_eigenvalues();
    let mut out = Vec::with_capacity(d);
    for lam in eigenvalues.iter() {
        let shift = lam + Complex::new(1e-9, 1e-9);
        let shifted = &tc - DMatrix::<Complex<f64>>::identity(d, d) * shift;
        let lu = shifted.lu();
        let mut v = DVector::<Complex<f64>>::from_fn(d, |r, _| Complex::new(1.0 + r as f64, 0.3));
        v /= Complex::new(v.norm(), 0.0);
        for _ in 0..32 {
            let w = lu.solve(&v)?;
            let norm = w.norm();
            if !norm.is_finite() || norm == 0.0 {
                return None;
            }
            v = w / Complex::new(norm, 0.0);
        }
        // fix the arbitrary complex phase: make the dominant entry real
        // positive, so real eigenvectors have a genuine real part
        let dominant = (0..d).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap();
        let phase = v[dominant] / Complex::new(v[dominant].norm(), 0.0);
        v /= phase;
        out.push((*lam, v));
    }
    Some(out)
}

/// Why the construction pipeline stopped without a structure.
#[derive(Debug, Clone)]
pub enum Obstruction {
    /// A periodic point with positive top exponent: no invariant measurable
    /// conformal structure can exist.
    PositiveExponent { point: SymbolicPoint, period: usize, lambda_plus: f64 },
    /// No block size in the scanned grid certifies `theta* < tau`.
    NoBunchingCertificate { best_theta: f64, tau: f64 },
    /// An anchor's return map preserves no inner product.
    AnchorNotElliptic { symbol: Symbol, detail: String },
    /// The transported field failed the final invariance verification.
    InconsistentExtension { residual: f64 },
}

/// A successfully constructed invariant structure with its evidence.
#[derive(Debug, Clone)]
pub struct ConstructedStructure {
    pub field: ConformalField,
    pub certificate: BunchingCertificate,
    pub residual: f64,
    pub anchors: Vec<SymbolicPoint>,
}

/// Outcome of [`construct_invariant_structure`].
#[derive(Debug, Clone)]
pub enum ConstructOutcome {
    Structure(Box<ConstructedStructure>),
    Obstruction(Obstruction),
}

const EXPONENT_TOL: f64 = 1e-8;
const EXTENSION_RESIDUAL_TOL: f64 = 1e-6;
const BUNCHING_GRID: [usize; 4] = [1, 2, 4, 8];

/// Lexicographically least periodic point per cylinder `[0; i]` with
/// `|lambda_+| <= tol` (ordered by period, then by periodic word).
pub fn pick_anchors(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    search_period_max: usize,
    tol: f64,
) -> Result<Vec<SymbolicPoint>> {
    let mixing = sft.mixing_index().ok_or(Error::NotMixing)?;
    let k_max = search_period_max.max(mixing);
    let mut chosen: BTreeMap<Symbol, SymbolicPoint> = BTreeMap::new();
    for k in 1..=k_max {
        for p in sft.enumerate_periodic(k)? {
            let symbol = p.symbol_at(0);
            if chosen.contains_key(&symbol) {
                continue;
            }
            // enumeration yields words of length k in lexicographic order, so
            // the first admissible hit per cylinder is the least one
            if gen.lyapunov_periodic(&p, k)?.lambda_plus.abs() <= tol {
                chosen.insert(symbol, p);
            }
        }
        if chosen.len() == sft.alphabet_size() {
            break;
        }
    }
    if chosen.len() != sft.alphabet_size() {
        let missing: Vec<Symbol> =
            sft.symbols().filter(|s| !chosen.contains_key(s)).collect();
        return Err(Error::InvalidInput(format!(
            "no periodic point with |lambda_+| <= {tol:.1e} found through cylinders {missing:?} \
             up to period {k_max}"
        )));
    }
    Ok(chosen.into_values().collect())
}

/// The constructive realization of the rigidity pipeline:
///
/// 1. every periodic point up to `search_period_max` must have vanishing top
///    exponent (otherwise: `PositiveExponent` obstruction);
/// 2. uniform bunching is certified over a block-size grid;
/// 3. per-cylinder anchors get invariant structures from their return maps;
/// 4. the anchored structures are transported to a locally constant field by
///    the holonomy extension formula and verified exactly.
pub fn construct_invariant_structure(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    search_period_max: usize,
) -> Result<ConstructOutcome> {
    use ConstructOutcome::Obstruction as Fail;
    // (1) periodic exponents
    for k in 1..=search_period_max {
        for p in sft.enumerate_periodic(k)? {
            let lambda = gen.lyapunov_periodic(&p, k)?.lambda_plus;
            if lambda > EXPONENT_TOL {
                return Ok(Fail(Obstruction::PositiveExponent {
                    point: p,
                    period: k,
                    lambda_plus: lambda,
                }));
            }
        }
    }
    // (2) uniform bunching over the grid
    let mut cert = None;
    let mut best_theta = f64::INFINITY;
    for n in BUNCHING_GRID {
        match certify_uniform_bunching(gen, sft, n) {
            Ok(Some(c)) => {
                cert = Some(c);
                break;
            }
            Ok(None) => {
                best_theta = best_theta.min(crate::holonomy::uniform_bunching_theta(gen, sft, n)?);
            }
            Err(Error::TooManyWords { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    let Some(cert) = cert else {
        return Ok(Fail(Obstruction::NoBunchingCertificate { best_theta, tau: sft.tau() }));
    };
    // (3) anchors and their invariant inner products
    let anchor_points = pick_anchors(gen, sft, search_period_max, EXPONENT_TOL)?;
    let mut anchors = Vec::with_capacity(anchor_points.len());
    for p in &anchor_points {
        let k = p.period().expect("anchors are periodic");
        let return_map = gen.evaluate(p, k as i64);
        match crate::conformal::invariant_structure_elliptic(&return_map, 1e-11, 100_000) {
            Ok(eta) => anchors.push((p.clone(), eta)),
            Err(e @ (Error::NotElliptic { .. } | Error::NoConvergence { .. })) => {
                return Ok(Fail(Obstruction::AnchorNotElliptic {
                    symbol: p.symbol_at(0),
                    detail: e.to_string(),
                }));
            }
            Err(e) => return Err(e),
        }
    }
    // (4) extension to a locally constant field on the induced window
    let (glo, ghi) = gen.window();
    let flo = glo;
    let fhi = ((-glo) + ghi - 1).max(0);
    let len = (fhi - flo + 1) as usize;
    let mut table = BTreeMap::new();
    for w in sft.enumerate_words(len)? {
        let x = representative_point(sft, &w, flo)?;
        let eta = extend_structure(gen, sft, &anchors, &x, &cert)?;
        table.insert(w, eta);
    }
    let field = ConformalField::new(sft, flo, fhi, table)?;
    let residual = verify_invariant_field(gen, &field, sft)?;
    if residual > EXTENSION_RESIDUAL_TOL {
        return Ok(Fail(Obstruction::InconsistentExtension { residual }));
    }
    Ok(ConstructOutcome::Structure(Box::new(ConstructedStructure {
        field,
        certificate: cert,
        residual,
        anchors: anchor_points,
    })))
}
