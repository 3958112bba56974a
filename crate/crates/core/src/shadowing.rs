//! The shadowing periodic-point construction and its experiments.
//!
//! Given periodic points `x` and `y` of common period `k` and a block length
//! `m` (a multiple of `k`, at least the mixing index), the point `p^m`
//! follows `y` for coordinates `-bm..=bm`, connects to `x` in `m` steps,
//! follows `x` for `cm` steps, and connects back to `y` in `m` steps, then
//! repeats with period `u_m = (2b + c + 2) m`. So defined, `p^m` shadows the
//! two orbits at the exact exponential rates needed by the
//! periodic-approximation bound `C^{-1} e^{n(lambda-eps)} <= ||A^n|| <=
//! C e^{n(lambda+eps)}`.
//!
//! The parameter tuner picks integers `b, c` and a rate `eps` satisfying the
//! three averaging inequalities that drive the membership estimate together
//! with the growth margin `chi = c(lambda - eps) - 2b eps - 2 zeta > 0`.

use crate::cocycle::LocallyConstantGenerator;
use crate::error::{Error, Result};
use crate::holonomy::bunching_membership_periodic;
use crate::sft::{agreement_radius, Sft, Symbol, SymbolicPoint, Word};

/// Specification of one shadowing point.
#[derive(Debug, Clone)]
pub struct ShadowingSpec {
    pub x: SymbolicPoint,
    pub y: SymbolicPoint,
    pub k: usize,
    pub m: usize,
    pub b: usize,
    pub c: usize,
    /// Connector from the end of the `y`-block to `x_0`, with `m` edges.
    pub connector_a: Word,
    /// Connector from the end of the `x`-block back to `y_0`, with `m` edges.
    pub connector_b: Word,
}

impl ShadowingSpec {
    /// Builds a spec with the default (lexicographically least) connectors.
    pub fn new(
        sft: &Sft,
        x: SymbolicPoint,
        y: SymbolicPoint,
        k: usize,
        m: usize,
        b: usize,
        c: usize,
    ) -> Result<Self> {
        let conn_a = sft.connecting_word(y.symbol_at(0), x.symbol_at(0), m)?;
        let conn_b = sft.connecting_word(x.symbol_at(0), y.symbol_at(0), m)?;
        Self::with_connectors(sft, x, y, k, m, b, c, conn_a, conn_b)
    }

    /// Builds a spec with caller-supplied connectors.
    #[allow(clippy::too_many_arguments)]
    pub fn with_connectors(
        sft: &Sft,
        x: SymbolicPoint,
        y: SymbolicPoint,
        k: usize,
        m: usize,
        b: usize,
        c: usize,
        connector_a: Word,
        connector_b: Word,
    ) -> Result<Self> {
        if k == 0 || !x.is_fixed_by(k) || !y.is_fixed_by(k) {
            return Err(Error::PeriodMismatch(format!(
                "x and y must both be fixed by f^{k}"
            )));
        }
        if b == 0 || c == 0 {
            return Err(Error::PeriodMismatch("b and c must be >= 1".into()));
        }
        if m == 0 || m % k != 0 {
            return Err(Error::PeriodMismatch(format!("m = {m} is not a positive multiple of k = {k}")));
        }
        let mixing = sft.mixing_index().ok_or(Error::NotMixing)?;
        if m < mixing {
            return Err(Error::PeriodMismatch(format!(
                "m = {m} is below the mixing index {mixing}"
            )));
        }
        for (name, conn, from, to) in [
            ("connector_a", &connector_a, y.symbol_at(0), x.symbol_at(0)),
            ("connector_b", &connector_b, x.symbol_at(0), y.symbol_at(0)),
        ] {
            if conn.len() != m + 1 {
                return Err(Error::InvalidConnector(format!(
                    "{name} must have {m} edges ({} symbols), got {}",
                    m + 1,
                    conn.len()
                )));
            }
            if conn.symbols()[0] != from || conn.symbols()[m] != to {
                return Err(Error::InvalidConnector(format!(
                    "{name} must run from {from} to {to}"
                )));
            }
            if !sft.is_valid_word(conn.symbols()) {
                return Err(Error::InvalidConnector(format!("{name} has a forbidden transition")));
            }
        }
        Ok(Self { x, y, k, m, b, c, connector_a, connector_b })
    }

    /// The implemented period `u_m = (2b + c + 2) m`: the segment inventory
    /// (y-block of `2bm + 1` coordinates, two connectors of `m` edges, and an
    /// x-block of `cm` edges) sums to exactly this.
    pub fn period(&self) -> usize {
        (2 * self.b + self.c + 2) * self.m
    }
}

/// Assembles the periodic point of a spec; returns it with `u_m`.
pub fn build_shadowing_point(sft: &Sft, spec: &ShadowingSpec) -> Result<(SymbolicPoint, usize)> {
    let (b, c, m) = (spec.b as i64, spec.c as i64, spec.m as i64);
    let u = spec.period();
    let mut cycle: Vec<Symbol> = Vec::with_capacity(u);
    for j in (-b * m)..((b + c + 2) * m) {
        let s = if j <= b * m {
            spec.y.symbol_at(j)
        } else if j < (b + 1) * m {
            spec.connector_a.symbols()[(j - b * m) as usize]
        } else if j <= (b + c + 1) * m {
            spec.x.symbol_at(j - (b + 1) * m)
        } else {
            spec.connector_b.symbols()[(j - (b + c + 1) * m) as usize]
        };
        cycle.push(s);
    }
    debug_assert_eq!(cycle.len(), u);
    if !sft.is_valid_cycle(&cycle) {
        return Err(Error::InvalidConnector("assembled period is not transition-valid".into()));
    }
    let p = SymbolicPoint::new(sft, cycle.clone(), Vec::new(), cycle, -(b * m))?;
    Ok((p, u))
}

/// Checks the three shadowing distance bounds coordinatewise, in exact
/// integer form: `rho(f^j z, f^j p) <= max(e^{-j tau}, e^{-(L-j) tau})`
/// is `N(f^j z, f^j p) >= min(j, L - j)`.
pub fn shadowing_bounds_hold(spec: &ShadowingSpec, p: &SymbolicPoint) -> bool {
    let (b, c, m) = (spec.b as i64, spec.c as i64, spec.m as i64);
    let segments: [(i64, &SymbolicPoint, i64); 3] = [
        (0, &spec.y, b * m),
        ((b + 1) * m, &spec.x, c * m),
        ((b + c + 2) * m, &spec.y, b * m),
    ];
    for (offset, z, len) in segments {
        for j in 0..=len {
            let radius = agreement_radius(&z.shifted(offset + j), &p.shifted(offset + j));
            let required = j.min(len - j);
            if radius.is_some_and(|n| n < required) {
                return false;
            }
        }
    }
    true
}

/// Output of the parameter tuner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedParameters {
    pub b: usize,
    pub c: usize,
    pub eps: f64,
    /// Growth margin `chi = c(lambda - eps) - 2b eps - 2 zeta`.
    pub chi: f64,
}

/// The three averaging inequalities, in the form used to choose `b` for a
/// fixed `c` (all must be strict).
pub fn shadowing_inequalities(b: usize, c: usize, theta: f64, zeta: f64, xi: f64) -> [bool; 3] {
    let (b, c) = (b as f64, c as f64);
    let tenth = theta / 10.0;
    let bound = 0.9 * theta;
    let i1 = zeta * (1.0 - b / (b + 1.0)) + tenth < bound;
    let i2 = (b / (b + 1.0)) * tenth
        + zeta / (b + 1.0)
        + (1.0 - (b + 1.0) / (b + c + 1.0)) * (xi + tenth)
        < bound;
    let i3 = (b / (b + c + 1.0)) * tenth
        + zeta / (b + c + 1.0)
        + (c / (b + c + 1.0)) * (xi + tenth)
        + zeta * (1.0 - (b + c + 1.0) / (b + c + 2.0))
        < bound;
    [i1, i2, i3]
}

/// Chooses `(b, c, eps)`: the smallest `c` with `c lambda - 2 zeta > 0`, the
/// smallest `b <= 10^6` satisfying the three inequalities for that `c`, and
/// `eps = min(theta/10, (c lambda - 2 zeta) / (2 (c + 2b)))`, which makes
/// `chi > 0` with a factor-two margin. `None` when no `b` works.
pub fn tune_parameters(
    lambda: f64,
    xi: f64,
    zeta: f64,
    tau: f64,
    theta: f64,
) -> Result<Option<TunedParameters>> {
    if !(theta > 0.0 && theta < tau) {
        return Err(Error::InvalidInput(format!("need 0 < theta < tau, got theta={theta}, tau={tau}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("need lambda > 0, got {lambda}")));
    }
    if zeta < 0.0 || xi < 0.0 {
        return Err(Error::InvalidInput("zeta and xi must be nonnegative".into()));
    }
    let c = (1..).find(|&c| c as f64 * lambda - 2.0 * zeta > 0.0).unwrap();
    let b = (1..=1_000_000usize)
        .find(|&b| shadowing_inequalities(b, c, theta, zeta, xi).iter().all(|&ok| ok));
    let Some(b) = b else {
        return Ok(None);
    };
    let margin = c as f64 * lambda - 2.0 * zeta;
    let eps = (theta / 10.0).min(margin / (2.0 * (c as f64 + 2.0 * b as f64)));
    let chi = c as f64 * (lambda - eps) - 2.0 * b as f64 * eps - 2.0 * zeta;
    debug_assert!(chi > 0.0 && eps <= theta / 10.0);
    Ok(Some(TunedParameters { b, c, eps, chi }))
}

/// Observed growth of `||A^n(q)||` against the periodic-approximation band
/// around the exponent of `p`.
#[derive(Debug, Clone, Copy)]
pub struct ShadowBandEstimate {
    pub lambda: f64,
    pub eps: f64,
    pub n: usize,
    pub log_observed: f64,
    /// Smallest `C >= 1` making both band inequalities hold.
    pub fitted_c: f64,
    pub log_lower: f64,
    pub log_upper: f64,
}

const MAX_BAND_CONSTANT: f64 = 1e12;

/// Checks the shadowing distance hypothesis between the orbits of a periodic
/// `p` and an arbitrary `q` over `n` iterates, then reports the observed
/// `log ||A^n(q)||` with the fitted band constant.
pub fn shadow_norm_estimate(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    p: &SymbolicPoint,
    q: &SymbolicPoint,
    n: usize,
    eps: f64,
) -> Result<ShadowBandEstimate> {
    let k = p.period().ok_or(Error::NotPeriodic { period: 0 })?;
    for j in 0..=n as i64 {
        let radius = agreement_radius(&p.shifted(j), &q.shifted(j));
        let required = j.min(n as i64 - j);
        if let Some(r) = radius {
            if r < required {
                return Err(Error::ShadowingHypothesisFails {
                    iterate: j as usize,
                    rho: (-sft.tau() * r as f64).exp(),
                    bound: (-sft.tau() * required as f64).exp(),
                });
            }
        }
    }
    let lambda = gen.lyapunov_periodic(p, k)?.lambda_plus;
    let log_observed = gen.log_norm(q, n as i64);
    let nf = n as f64;
    let log_c = (log_observed - nf * (lambda + eps))
        .max(nf * (lambda - eps) - log_observed)
        .max(0.0);
    let fitted_c = log_c.exp();
    if fitted_c > MAX_BAND_CONSTANT {
        return Err(Error::InvalidInput(format!(
            "no constant C <= {MAX_BAND_CONSTANT:.0e} satisfies the periodic approximation band \
             (needs C = {fitted_c:.3e})"
        )));
    }
    Ok(ShadowBandEstimate {
        lambda,
        eps,
        n,
        log_observed,
        fitted_c,
        log_lower: nf * (lambda - eps) - log_c,
        log_upper: nf * (lambda + eps) + log_c,
    })
}

/// One row of the growth/membership experiment.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentRow {
    pub m: usize,
    pub u_m: usize,
    pub log_norm: f64,
    pub chi_reference: f64,
    pub in_d: bool,
    /// Largest band constant fitted over the three shadowed segments.
    pub fitted_c: f64,
}

/// Full report of the growth/membership experiment.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    pub lambda_x: f64,
    pub lambda_y: f64,
    pub zeta: f64,
    pub chi: f64,
    pub eps: f64,
    /// `max_m log C_m`; the reference line is `chi m - 3 log C`.
    pub log_c: f64,
    pub n_block: usize,
    pub theta: f64,
    /// Whether the dichotomy preconditions held: `lambda_+(x) > 0`.
    pub x_exponent_positive: bool,
    /// ... and `lambda_+(y) = 0`.
    pub y_exponent_zero: bool,
    /// Euclidean-comparison constant of an invariant structure when one is
    /// available; bounded growth `||A^n|| <= gamma` is the contradiction arm.
    pub gamma: Option<f64>,
}

/// Family input for [`growth_and_membership_experiment`].
#[derive(Debug, Clone)]
pub struct ShadowingFamily {
    pub x: SymbolicPoint,
    pub y: SymbolicPoint,
    pub k: usize,
    pub b: usize,
    pub c: usize,
    pub eps: f64,
    pub m_values: Vec<usize>,
}

/// Runs the growth/membership experiment: for
/// each `m`, assemble `p^m`, verify the shadowing bounds, record
/// `log ||A^{u_m}(p^m)||` against the reference line `chi m - 3 log C`, and
/// decide `p^m in D(N, theta)` exactly.
pub fn growth_and_membership_experiment(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    family: &ShadowingFamily,
    n_block: usize,
    theta: f64,
    gamma: Option<f64>,
) -> Result<ExperimentReport> {
    let lambda_x = gen.lyapunov_periodic(&family.x, family.k)?.lambda_plus;
    let lambda_y = gen.lyapunov_periodic(&family.y, family.k)?.lambda_plus;
    let zeta = gen.zeta();
    let chi = family.c as f64 * (lambda_x - family.eps)
        - 2.0 * family.b as f64 * family.eps
        - 2.0 * zeta;

    struct Partial {
        m: usize,
        u_m: usize,
        log_norm: f64,
        in_d: bool,
        fitted_c: f64,
    }
    let mut partial = Vec::new();
    for &m in &family.m_values {
        let spec = ShadowingSpec::new(
            sft,
            family.x.clone(),
            family.y.clone(),
            family.k,
            m,
            family.b,
            family.c,
        )?;
        let (p, u_m) = build_shadowing_point(sft, &spec)?;
        if !shadowing_bounds_hold(&spec, &p) {
            return Err(Error::ShadowingHypothesisFails { iterate: 0, rho: 1.0, bound: 1.0 });
        }
        let (b, c) = (family.b as i64, family.c as i64);
        let mi = m as i64;
        let seg_x = shadow_norm_estimate(
            gen,
            sft,
            &family.x,
            &p.shifted((b + 1) * mi),
            (c * mi) as usize,
            family.eps,
        )?;
        let seg_y1 = shadow_norm_estimate(gen, sft, &family.y, &p, (b * mi) as usize, family.eps)?;
        let seg_y2 = shadow_norm_estimate(
            gen,
            sft,
            &family.y,
            &p.shifted((b + c + 2) * mi),
            (b * mi) as usize,
            family.eps,
        )?;
        let fitted_c = seg_x.fitted_c.max(seg_y1.fitted_c).max(seg_y2.fitted_c);
        let log_norm = gen.log_norm(&p, u_m as i64);
        let in_d = bunching_membership_periodic(gen, &p, u_m, n_block, theta)?.member;
        partial.push(Partial { m, u_m, log_norm, in_d, fitted_c });
    }
    let log_c = partial.iter().map(|r| r.fitted_c.ln()).fold(0.0, f64::max);
    let rows = partial
        .into_iter()
        .map(|r| ExperimentRow {
            m: r.m,
            u_m: r.u_m,
            log_norm: r.log_norm,
            chi_reference: chi * r.m as f64 - 3.0 * log_c,
            in_d: r.in_d,
            fitted_c: r.fitted_c,
        })
        .collect();
    Ok(ExperimentReport {
        rows,
        lambda_x,
        lambda_y,
        zeta,
        chi,
        eps: family.eps,
        log_c,
        n_block,
        theta,
        x_exponent_positive: lambda_x > 1e-8,
        y_exponent_zero: lambda_y.abs() <= 1e-8,
        gamma,
    })
}

/// The concrete `(N, theta)` selection of the membership proof, implemented
/// step by step with explicit finite bounds.
#[derive(Debug, Clone, Copy)]
pub struct BlockSelection {
    /// Smallest `J` with both orbit distortion bounds holding for `j >= J`
    /// (verified up to the scan limit).
    pub j_threshold: usize,
    /// Smallest multiple of `k` with `r >= J`.
    pub r: usize,
    /// Lipschitz constant of `log ||A^r|| ||(A^r)^{-1}||`.
    pub lipschitz: f64,
    /// `C = 2 / (1 - e^{-tau})`.
    pub c_geom: f64,
    /// Smallest `t` with `r t eps > 3 L C`.
    pub t: usize,
    /// `N = r t`.
    pub n: usize,
}

const J_SCAN_LIMIT: usize = 10_000;

/// Runs the `N = r t` selection: scan for the iterate threshold `J`, take
/// `r` the smallest multiple of `k` at least `J`, compute the exact Lipschitz
/// constant of the `r`-block log-distortion (a finite word-pair maximization,
/// guarded against exponential blowup), and pick `t` so that `N eps > 3 L C`.
pub fn select_block_parameters(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    x: &SymbolicPoint,
    y: &SymbolicPoint,
    k: usize,
    xi: f64,
    eps: f64,
) -> Result<BlockSelection> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let mut last_fail = 0usize;
    for j in 1..=J_SCAN_LIMIT {
        let ok_y = gen.log_distortion_block(y, j as i64) <= j as f64 * eps;
        let ok_x = gen.log_distortion_block(x, j as i64) <= j as f64 * (xi + eps);
        if !(ok_x && ok_y) {
            last_fail = j;
        }
    }
    if last_fail == J_SCAN_LIMIT {
        return Err(Error::NoConvergence { iterations: J_SCAN_LIMIT, residual: f64::NAN });
    }
    let j_threshold = last_fail + 1;
    let r = j_threshold.div_ceil(k) * k;
    let lipschitz = block_log_distortion_lipschitz(gen, sft, r)?;
    let c_geom = 2.0 / (1.0 - (-sft.tau()).exp());
    let t = ((3.0 * lipschitz * c_geom) / (r as f64 * eps)).floor() as usize + 1;
    Ok(BlockSelection { j_threshold, r, lipschitz, c_geom, t, n: r * t })
}

/// Exact Lipschitz constant of the locally constant scalar
/// `x -> log ||A^r(x)|| ||A^r(x)^{-1}||` (dependence window
/// `[w-, r - 1 + w+]`), by the same word-pair maximization as the generator
/// Lipschitz constant.
pub fn block_log_distortion_lipschitz(
    gen: &LocallyConstantGenerator,
    sft: &Sft,
    r: usize,
) -> Result<f64> {
    let (lo, hi) = gen.window();
    let depth = r + (hi - lo) as usize;
    let words = sft.enumerate_words_capped(depth, 200_000)?;
    let values: Vec<f64> = words
        .iter()
        .map(|w| gen.scaled_product_with(|c| w[(c - lo) as usize], r as i64).log_distortion())
        .collect();
    let mut best = 0.0_f64;
    for i in 0..words.len() {
        for j in (i + 1)..words.len() {
            let depth_first_diff = words[i]
                .iter()
                .zip(&words[j])
                .enumerate()
                .filter(|(_, (a, b))| a != b)
                .map(|(t, _)| (lo + t as i64).unsigned_abs())
                .min();
            if let Some(d) = depth_first_diff {
                let diff = (values[i] - values[j]).abs();
                best = best.max(diff * (sft.tau() * d as f64).exp());
            }
        }
    }
    Ok(best)
}
