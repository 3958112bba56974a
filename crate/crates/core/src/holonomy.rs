//! Fiber-bunching sets, their certificates, and holonomies.
//!
//! `D(N, theta)` is the set of points whose forward and backward products of
//! `N`-block distortions `||A^N|| ||A^N^{-1}||` grow no faster than
//! `e^{s N theta}` for every block count `s >= 1`. Membership is decided
//! exactly at periodic points (the sup over `s` reduces to finitely many
//! prefix checks), and certified uniformly over the whole shift through a
//! maximum-mean-cycle computation on the finite block-word graph.
//!
//! On `D(N, theta)` with `theta < tau` the stable and unstable holonomies
//! exist; for locally constant generators the defining limits stabilize
//! after finitely many steps, so holonomies are exact finite products here.

use nalgebra::DMatrix;

use crate::cocycle::LocallyConstantGenerator;
use crate::conformal::{pull, ConformalStructure};
use crate::error::{Error, Result};
use crate::linalg;
use crate::sft::{bracket, on_same_stable_set, on_same_unstable_set, Sft, Symbol, SymbolicPoint};

/// What a bunching certificate asserts membership of.
#[derive(Debug, Clone, PartialEq)]
pub enum CertificateScope {
    /// Every point of the shift lies in `D(N, theta)`.
    Uniform,
    /// The named periodic point lies in `D(N, theta)`.
    Point(SymbolicPoint),
}

/// A `(N, theta)` witness that points lie in `D(N, theta)`.
///
/// `witness` is the certified per-step distortion rate (maximum mean cycle
/// value divided by `N` for uniform scope, maximal prefix average divided by
/// `N` at a periodic point); it never exceeds `theta`. Downstream holonomy
/// use additionally requires `theta < tau`.
#[derive(Debug, Clone)]
pub struct BunchingCertificate {
    pub n_block: usize,
    pub theta: f64,
    pub scope: CertificateScope,
    pub witness: f64,
}

impl BunchingCertificate {
    pub fn new(n_block: usize, theta: f64, scope: CertificateScope, witness: f64) -> Result<Self> {
        if n_block == 0 || !(theta > 0.0) {
            return Err(Error::InvalidInput("certificate needs N >= 1 and theta > 0".into()));
        }
        if witness > theta {
            return Err(Error::InvalidInput(format!(
                "certificate witness {witness} exceeds theta {theta}"
            )));
        }
        Ok(Self { n_block, theta, scope, witness })
    }

    /// Checks the holonomy hypothesis `theta < tau` and that the scope
    /// covers the given points.
    fn check_for(&self, sft: &Sft, points: &[&SymbolicPoint]) -> Result<()> {
        if self.theta >= sft.tau() {
            return Err(Error::NoCertificate(format!(
                "theta = {} is not below tau = {}",
                self.theta,
                sft.tau()
            )));
        }
        match &self.scope {
            CertificateScope::Uniform => Ok(()),
            CertificateScope::Point(p) => {
                if points.iter().any(|&q| q == p) {
                    Ok(())
                } else {
                    Err(Error::NoCertificate(
                        "point-scoped certificate does not cover these points".into(),
                    ))
                }
            }
        }
    }
}

/// Outcome of the exact periodic membership decision.
#[derive(Debug, Clone, Copy)]
pub struct PeriodicBunching {
    pub member: bool,
    /// Maximal prefix average of block distortions divided by `N`
    /// (per-step units; membership means `witness <= theta`).
    pub witness: f64,
    /// Number of distinct blocks along the orbit, `k / gcd(k, N)`.
    pub block_period: usize,
}

/// Exact decision of `p in D(N, theta)` for a periodic point `f^k(p) = p`.
///
/// The block sequence `a_j = log ||A^N(f^{jN} p)|| ||A^N(f^{jN} p)^{-1}||`
/// is periodic with period `P = k/gcd(k, N)`, and `S_s <= s N theta` for
/// all `s >= 1` follows from the same bound for `s <= P`: any longer prefix
/// splits as `S_{hP+s'} = h S_P + S_{s'}`. Forward and backward conditions
/// are both checked.
pub fn bunching_membership_periodic(
    gen: &LocallyConstantGenerator,
    p: &SymbolicPoint,
    k: usize,
    n_block: usize,
    theta: f64,
) -> Result<PeriodicBunching> {
    if k == 0 || !p.is_fixed_by(k) {
        return Err(Error::NotPeriodic { period: k });
    }
    if n_block == 0 {
        return Err(Error::InvalidInput("block size must be >= 1".into()));
    }
    let n = n_block as i64;
    let period = k / gcd(k, n_block);
    let mut member = true;
    let mut witness = f64::NEG_INFINITY;
    for direction in [1i64, -1] {
        let mut prefix = 0.0;
        for j in 0..period as i64 {
            let base = p.shifted(direction * j * n);
            prefix += gen.log_distortion_block(&base, direction * n);
            let s = (j + 1) as f64;
            witness = witness.max(prefix / (s * n as f64));
            if prefix > s * n as f64 * theta {
                member = false;
            }
        }
    }
    Ok(PeriodicBunching { member, witness, block_period: period })
}

/// Builds a point-scoped certificate from a successful membership decision.
pub fn periodic_certificate(
    gen: &LocallyConstantGenerator,
    p: &SymbolicPoint,
    k: usize,
    n_block: usize,
    theta: f64,
) -> Result<Option<BunchingCertificate>> {
    let decision = bunching_membership_periodic(gen, p, k, n_block, theta)?;
    if !decision.member {
        return Ok(None);
    }
    Ok(Some(BunchingCertificate::new(
        n_block,
        theta,
        CertificateScope::Point(p.clone()),
        decision.witness,
    )?))
}

/// The asymptotic per-step distortion rate `theta*`: maximum mean cycle of
/// the `N`-block word graph, divided by `N`. Forward and backward block
/// graphs are both evaluated and the larger value is returned.
pub fn uniform_bunching_theta(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    n_block: usize,
) -> Result<f64> {
    let (weights, edges) = block_graph(gen, sft, n_block)?;
    let forward: Vec<(usize, usize, f64)> =
        edges.iter().map(|&(u, v)| (u, v, weights[u])).collect();
    let backward: Vec<(usize, usize, f64)> =
        edges.iter().map(|&(u, v)| (v, u, weights[u])).collect();
    let fwd = max_mean_cycle(weights.len(), &forward)
        .ok_or_else(|| Error::InvalidInput("block graph has no cycle".into()))?;
    let bwd = max_mean_cycle(weights.len(), &backward)
        .ok_or_else(|| Error::InvalidInput("block graph has no cycle".into()))?;
    Ok(fwd.max(bwd) / n_block as f64)
}

/// Uniform certification: computes `theta*` by Karp's algorithm and issues a
/// uniform-scope certificate when `theta* < tau`, `None` otherwise.
pub fn certify_uniform_bunching(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    n_block: usize,
) -> Result<Option<BunchingCertificate>> {
    if sft.mixing_index().is_none() {
        return Err(Error::NotMixing);
    }
    let theta = uniform_bunching_theta(gen, sft, n_block)?;
    if theta >= sft.tau() {
        return Ok(None);
    }
    // theta* can be 0 (conformal cocycles); keep theta itself positive.
    let theta_cert = if theta > 0.0 { theta } else { f64::MIN_POSITIVE };
    Ok(Some(BunchingCertificate::new(
        n_block,
        theta_cert,
        CertificateScope::Uniform,
        theta.max(0.0).min(theta_cert),
    )?))
}

/// Vertex weights and edges of the block-word graph: vertices are the valid
/// words of the dependence window of `A^N` (coordinates `[w-, N-1+w+]`, in
/// lexicographic order), an edge advances one `N`-block, and the weight of a
/// vertex is the log distortion of its block product.
pub fn block_graph(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    n_block: usize,
) -> Result<(Vec<f64>, Vec<(usize, usize)>)> {
    if n_block == 0 {
        return Err(Error::InvalidInput("block size must be >= 1".into()));
    }
    let (lo, hi) = gen.window();
    let span = (hi - lo) as usize;
    let depth = n_block + span;
    let words = sft.enumerate_words_capped(depth, 400_000)?;
    let index: std::collections::BTreeMap<&[Symbol], usize> =
        words.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect();
    let weights: Vec<f64> = words.iter().map(|w| block_weight(gen, w, n_block)).collect();
    // every valid word of length depth + n_block induces one edge
    let long_words = sft.enumerate_words_capped(depth + n_block, 4_000_000)?;
    let edges: Vec<(usize, usize)> = long_words
        .iter()
        .map(|w| (index[&w[..depth]], index[&w[n_block..]]))
        .collect();
    Ok((weights, edges))
}

/// `log ||A^N|| ||A^N^{-1}||` of the block whose dependence word is `w`.
fn block_weight(gen: &LocallyConstantGenerator, w: &[Symbol], n_block: usize) -> f64 {
    let (lo, _) = gen.window();
    let prod = gen.scaled_product_with(|c| w[(c - lo) as usize], n_block as i64);
    prod.log_distortion()
}

/// Karp's maximum mean cycle. `F_k(v)` is the maximum weight of a walk with
/// exactly `k` edges ending at `v`, seeded from every vertex; the answer is
/// `max_v min_k (F_n(v) - F_k(v)) / (n - k)`.
pub fn max_mean_cycle(n_vertices: usize, edges: &[(usize, usize, f64)]) -> Option<f64> {
    if n_vertices == 0 {
        return None;
    }
    let n = n_vertices;
    let mut f = vec![vec![f64::NEG_INFINITY; n]; n + 1];
    f[0].iter_mut().for_each(|x| *x = 0.0);
    for k in 1..=n {
        for &(u, v, w) in edges {
            let cand = f[k - 1][u] + w;
            if cand > f[k][v] {
                f[k][v] = cand;
            }
        }
    }
    let mut best: Option<f64> = None;
    for v in 0..n {
        if !f[n][v].is_finite() {
            continue;
        }
        let mut worst = f64::INFINITY;
        for k in 0..n {
            if f[k][v].is_finite() {
                worst = worst.min((f[n][v] - f[k][v]) / (n - k) as f64);
            }
        }
        if worst.is_finite() {
            best = Some(best.map_or(worst, |b: f64| b.max(worst)));
        }
    }
    best
}

/// Stable holonomy `H^s_{yz} = lim_n A^n(z)^{-1} A^n(y)` for
/// `z in W^s_loc(y)`. For a window `[w-, w+]` the product stabilizes exactly
/// at `n = |w-|`, so the limit is a finite product.
pub fn stable_holonomy(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    y: &SymbolicPoint,
    z: &SymbolicPoint,
    cert: &BunchingCertificate,
) -> Result<DMatrix<f64>> {
    if !on_same_stable_set(y, z) {
        return Err(Error::NotOnStableSet);
    }
    cert.check_for(sft, &[y, z])?;
    let (lo, _) = gen.window();
    let n0 = -lo;
    let az = gen.evaluate(z, n0);
    let ay = gen.evaluate(y, n0);
    Ok(linalg::invert(&az)? * ay)
}

/// Unstable holonomy for `z in W^u_loc(y)`, realized through backward
/// iterates `H^u_{yz} = lim_n A^{-n}(z)^{-1} A^{-n}(y)`, which stabilize
/// exactly at `n = w+`.
pub fn unstable_holonomy(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    y: &SymbolicPoint,
    z: &SymbolicPoint,
    cert: &BunchingCertificate,
) -> Result<DMatrix<f64>> {
    if !on_same_unstable_set(y, z) {
        return Err(Error::NotOnUnstableSet);
    }
    cert.check_for(sft, &[y, z])?;
    let (_, hi) = gen.window();
    let az = gen.evaluate(z, -hi);
    let ay = gen.evaluate(y, -hi);
    Ok(linalg::invert(&az)? * ay)
}

/// Transports an anchored structure to `x` along the canonical holonomy
/// path: unstable from the anchor `w` of `x`'s cylinder to `[w, x]`, then
/// stable to `x`.
pub fn extend_structure(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    anchors: &[(SymbolicPoint, ConformalStructure)],
    x: &SymbolicPoint,
    cert: &BunchingCertificate,
) -> Result<ConformalStructure> {
    if !matches!(cert.scope, CertificateScope::Uniform) {
        return Err(Error::NoCertificate("structure extension needs a uniform certificate".into()));
    }
    cert.check_for(sft, &[])?;
    let x0 = x.symbol_at(0);
    let (omega, eta) = anchors
        .iter()
        .find(|(w, _)| w.symbol_at(0) == x0)
        .ok_or(Error::MissingAnchor { symbol: x0 })?;
    let mid = bracket(omega, x)?;
    let hu = unstable_holonomy(gen, sft, omega, &mid, cert)?;
    let hs = stable_holonomy(gen, sft, &mid, x, cert)?;
    Ok(pull(&hs, &pull(&hu, eta)))
}

/// Report of the gap-proposition check `f^{-1}(D(N, theta)) ⊆ D(N, theta+eps)`.
#[derive(Debug, Clone)]
pub struct GapReport {
    /// `R = sup_x max(||A(x)||, ||A(x)^{-1}||)`, an exact table maximum.
    pub r_value: f64,
    /// Whether the sufficient condition `R^4 <= e^{N eps}` holds.
    pub condition_holds: bool,
    pub trials: usize,
    /// How many sampled periodic points landed in `D(N, theta)`.
    pub tested_in_d: usize,
    /// Sampled points violating the inclusion (an implementation bug if
    /// nonempty while the condition holds).
    pub counterexamples: Vec<SymbolicPoint>,
}

/// Verifies the gap proposition on random periodic points.
pub fn gap_check(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    n_block: usize,
    theta: f64,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<GapReport> {
    use rand::SeedableRng;
    let r_value = gen.r_bound();
    let condition_holds = 4.0 * r_value.ln() <= n_block as f64 * eps;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut tested_in_d = 0;
    let mut counterexamples = Vec::new();
    for _ in 0..trials {
        let p = sft.random_periodic_point(10, &mut rng);
        let k = p.period().expect("random periodic point is periodic");
        if bunching_membership_periodic(gen, &p, k, n_block, theta)?.member {
            tested_in_d += 1;
            let pre = p.shifted(-1);
            if !bunching_membership_periodic(gen, &pre, k, n_block, theta + eps)?.member {
                counterexamples.push(p);
            }
        }
    }
    Ok(GapReport { r_value, condition_holds, trials, tested_in_d, counterexamples })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}
