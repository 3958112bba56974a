//! Command dispatch and deterministic artifact emission.
//!
//! Every command writes `report.json` (the resolved config plus results) and
//! some write a CSV table next to it. All numbers in CSV carry 17 significant
//! digits; reruns with the same config and seed produce byte-identical files.
//!
//! Exit codes: 0 success, 1 scientific obstruction (no certificate, pipeline
//! obstruction, infeasible tuning), 2 error (bad config, bad input, runtime
//! failure).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use cocycle_core::cocycle::LocallyConstantGenerator;
use cocycle_core::*;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{format_point, parse_config, parse_point, ExperimentConfig, ResolvedConfig};

const FORMAT_HELP: &str = "\
Config format (line-oriented, `#` comments, `version = 1` header):

  [sft]        alphabet = L; tau = T; row.<i> = 0/1 row of the transition matrix
  [generator]  dimension = d; window = lo hi; entry.<w1>.<w2>... = d*d row-major
               floats, one entry per valid window word
  [generator_b], [transfer], [field]   same shape (optional; field entries must
               be symmetric positive definite with determinant 1)
  [measure]    kind = parry | explicit (+ row.<i> stochastic rows)
  [run]        seed, theta, eps, block, block_list, m_list, n, n_max, samples,
               period_max, search_period_max, k, b, c, trials, tolerance,
               max_iter, point_x, point_y, point_z

Symbolic points: `left|core|right@start` with comma-separated cycles
(`1,2||1,2@0`), or `per:1,2` for the periodic point of a cycle.

Exit codes: 0 = success, 1 = scientific obstruction, 2 = error.
Artifacts: report.json always; lyapunov.csv (period,word,lambda_plus,
lambda_minus), certify.csv (block,theta_star,certified), shadow.csv
(m,u_m,log_norm,chi_reference,in_d,block,theta), quasiconformal.csv (n,log_k),
field.csv (word,f00,...,row-major entries).";

/// Command line interface.
#[derive(Debug, Parser)]
#[command(name = "cocycle", version, about = "Matrix cocycles over subshifts of finite type", after_long_help = FORMAT_HELP)]
pub struct Cli {
    /// Path to the experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for artifacts (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `seed` from the [run] section.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker hint; execution is currently sequential and results never
    /// depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overrides `tolerance` from the [run] section.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(subcommand)]
    pub command: CommandKind,
}

#[derive(Debug, Clone, Subcommand)]
pub enum CommandKind {
    /// Exact exponents at periodic points plus a sampled Kingman estimate.
    Lyapunov,
    /// Uniform fiber-bunching certification over a block-size grid.
    Certify,
    /// Stable/unstable holonomy between point_y and point_z.
    Holonomy,
    /// Transport anchored structures to point_x by the extension formula.
    Extend,
    /// Verify an invariant field and/or a coboundary relation.
    Verify,
    /// Full invariant-structure construction pipeline.
    Construct,
    /// Shadowing growth/membership experiment over m_list.
    Shadow,
    /// Common invariant subspace of periodic return maps.
    Irreducible,
    /// Worst-case distortion table K(n) with exponential fit.
    Quasiconformal,
}

/// Entry point used by `main` and the test harness. Returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    results: T,
    config: &'a ResolvedConfig,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    out: &'a Path,
    seed: u64,
    tolerance: f64,
}

impl Ctx<'_> {
    fn write_report<T: Serialize>(&self, command: &str, results: T) -> anyhow::Result<()> {
        let report = Report { command, seed: self.seed, results, config: &self.cfg.resolved };
        let text = serde_json::to_string_pretty(&report)?;
        let mut f = fs::File::create(self.out.join("report.json"))?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    fn write_csv(&self, name: &str, header: &str, rows: &[String]) -> anyhow::Result<()> {
        let mut f = fs::File::create(self.out.join(name))?;
        writeln!(f, "{header}")?;
        for row in rows {
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any f64.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn word_key(w: &[Symbol]) -> String {
    w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(".")
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn execute(cli: &Cli) -> anyhow::Result<i32> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
    }
    let text = fs::read_to_string(&cli.config)
        .with_context(|| format!("reading config {}", cli.config.display()))?;
    let cfg = parse_config(&text).map_err(|e| anyhow!("{e}"))?;
    fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;
    let ctx = Ctx {
        cfg: &cfg,
        out: &cli.out,
        seed: cli.seed.or(cfg.resolved.run.seed).unwrap_or(0),
        tolerance: cli.tolerance.or(cfg.resolved.run.tolerance).unwrap_or(1e-10),
    };
    match &cli.command {
        CommandKind::Lyapunov => cmd_lyapunov(&ctx),
        CommandKind::Certify => cmd_certify(&ctx),
        CommandKind::Holonomy => cmd_holonomy(&ctx),
        CommandKind::Extend => cmd_extend(&ctx),
        CommandKind::Verify => cmd_verify(&ctx),
        CommandKind::Construct => cmd_construct(&ctx),
        CommandKind::Shadow => cmd_shadow(&ctx),
        CommandKind::Irreducible => cmd_irreducible(&ctx),
        CommandKind::Quasiconformal => cmd_quasiconformal(&ctx),
    }
}

#[derive(Serialize)]
struct LyapunovResults {
    periodic_points: usize,
    max_lambda_plus: f64,
    min_lambda_minus: f64,
    birkhoff_mean: f64,
    birkhoff_std_error: f64,
    birkhoff_n: usize,
    birkhoff_samples: usize,
}

fn cmd_lyapunov(ctx: &Ctx) -> anyhow::Result<i32> {
    let run = &ctx.cfg.resolved.run;
    let period_max = run.period_max.unwrap_or(6);
    let n = run.n.unwrap_or(1024);
    let samples = run.samples.unwrap_or(16);
    let gen = &ctx.cfg.generator;
    let mut rows = Vec::new();
    let mut max_plus = f64::NEG_INFINITY;
    let mut min_minus = f64::INFINITY;
    let mut count = 0usize;
    for k in 1..=period_max {
        for p in ctx.cfg.sft.enumerate_periodic(k)? {
            let pair = gen.lyapunov_periodic(&p, k)?;
            let word = p.periodic_word().expect("enumerated points are periodic");
            rows.push(format!(
                "{k},{},{},{}",
                word_key(&word),
                num(pair.lambda_plus),
                num(pair.lambda_minus)
            ));
            max_plus = max_plus.max(pair.lambda_plus);
            min_minus = min_minus.min(pair.lambda_minus);
            count += 1;
        }
    }
    ctx.write_csv("lyapunov.csv", "period,word,lambda_plus,lambda_minus", &rows)?;
    let est = gen.lyapunov_birkhoff(&ctx.cfg.measure, n, samples, ctx.seed);
    ctx.write_report(
        "lyapunov",
        LyapunovResults {
            periodic_points: count,
            max_lambda_plus: max_plus,
            min_lambda_minus: min_minus,
            birkhoff_mean: est.mean,
            birkhoff_std_error: est.std_error,
            birkhoff_n: est.n,
            birkhoff_samples: est.samples,
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct CertifyResults {
    certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    block: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<f64>,
    best_theta_star: f64,
    tau: f64,
}

fn cmd_certify(ctx: &Ctx) -> anyhow::Result<i32> {
    let blocks = ctx.cfg.resolved.run.block_list.clone().unwrap_or_else(|| vec![1, 2, 4, 8]);
    let gen = &ctx.cfg.generator;
    let sft = &ctx.cfg.sft;
    let mut rows = Vec::new();
    let mut found: Option<BunchingCertificate> = None;
    let mut best = f64::INFINITY;
    for &b in &blocks {
        let theta_star = uniform_bunching_theta(gen, sft, b)?;
        best = best.min(theta_star);
        let certified = theta_star < sft.tau();
        rows.push(format!("{b},{},{}", num(theta_star), certified));
        if certified && found.is_none() {
            found = certify_uniform_bunching(gen, sft, b)?;
        }
    }
    ctx.write_csv("certify.csv", "block,theta_star,certified", &rows)?;
    let results = CertifyResults {
        certified: found.is_some(),
        block: found.as_ref().map(|c| c.n_block),
        theta: found.as_ref().map(|c| c.theta),
        witness: found.as_ref().map(|c| c.witness),
        best_theta_star: best,
        tau: sft.tau(),
    };
    let exit = if results.certified { 0 } else { 1 };
    ctx.write_report("certify", results)?;
    Ok(exit)
}

#[derive(Serialize)]
struct CertificateInfo {
    block: usize,
    theta: f64,
    witness: f64,
}

impl CertificateInfo {
    fn from(c: &BunchingCertificate) -> Self {
        Self { block: c.n_block, theta: c.theta, witness: c.witness }
    }
}

/// Certifies over the configured grid, or reports the obstruction.
fn require_certificate(ctx: &Ctx) -> anyhow::Result<std::result::Result<BunchingCertificate, f64>> {
    let blocks = ctx.cfg.resolved.run.block_list.clone().unwrap_or_else(|| {
        ctx.cfg.resolved.run.block.map_or_else(|| vec![1, 2, 4, 8], |b| vec![b])
    });
    let mut best = f64::INFINITY;
    for &b in &blocks {
        if let Some(cert) = certify_uniform_bunching(&ctx.cfg.generator, &ctx.cfg.sft, b)? {
            return Ok(Ok(cert));
        }
        best = best.min(uniform_bunching_theta(&ctx.cfg.generator, &ctx.cfg.sft, b)?);
    }
    Ok(Err(best))
}

#[derive(Serialize)]
struct HolonomyResults {
    relation: String,
    rho: f64,
    matrix: Vec<Vec<f64>>,
    deviation_from_identity: f64,
    certificate: CertificateInfo,
}

fn cmd_holonomy(ctx: &Ctx) -> anyhow::Result<i32> {
    let run = &ctx.cfg.resolved.run;
    let sft = &ctx.cfg.sft;
    let y = parse_point(
        run.point_y.as_deref().ok_or_else(|| anyhow!("[run] point_y is required"))?,
        sft,
    )
    .map_err(|e| anyhow!(e))?;
    let z = parse_point(
        run.point_z.as_deref().ok_or_else(|| anyhow!("[run] point_z is required"))?,
        sft,
    )
    .map_err(|e| anyhow!(e))?;
    let cert = match require_certificate(ctx)? {
        Ok(c) => c,
        Err(best) => {
            #[derive(Serialize)]
            struct NoCert {
                certified: bool,
                best_theta_star: f64,
            }
            ctx.write_report("holonomy", NoCert { certified: false, best_theta_star: best })?;
            return Ok(1);
        }
    };
    let gen = &ctx.cfg.generator;
    let (relation, h) = if on_same_stable_set(&y, &z) {
        ("stable", stable_holonomy(gen, sft, &y, &z, &cert)?)
    } else if on_same_unstable_set(&y, &z) {
        ("unstable", unstable_holonomy(gen, sft, &y, &z, &cert)?)
    } else {
        bail!("point_y and point_z share neither a local stable nor a local unstable set");
    };
    let dev = spectral_norm(&(&h - DMatrix::<f64>::identity(h.nrows(), h.ncols())));
    ctx.write_report(
        "holonomy",
        HolonomyResults {
            relation: relation.to_string(),
            rho: sft.rho_distance(&y, &z),
            matrix: matrix_rows(&h),
            deviation_from_identity: dev,
            certificate: CertificateInfo::from(&cert),
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct ExtendResults {
    eta: Vec<Vec<f64>>,
    anchors: Vec<String>,
    invariance_residual_at_x: f64,
    certificate: CertificateInfo,
}

fn cmd_extend(ctx: &Ctx) -> anyhow::Result<i32> {
    let run = &ctx.cfg.resolved.run;
    let sft = &ctx.cfg.sft;
    let gen = &ctx.cfg.generator;
    let x = parse_point(
        run.point_x.as_deref().ok_or_else(|| anyhow!("[run] point_x is required"))?,
        sft,
    )
    .map_err(|e| anyhow!(e))?;
    let cert = match require_certificate(ctx)? {
        Ok(c) => c,
        Err(best) => {
            #[derive(Serialize)]
            struct NoCert {
                certified: bool,
                best_theta_star: f64,
            }
            ctx.write_report("extend", NoCert { certified: false, best_theta_star: best })?;
            return Ok(1);
        }
    };
    let search = run.search_period_max.unwrap_or(6);
    let max_iter = run.max_iter.unwrap_or(100_000);
    let anchor_points = analysis::pick_anchors(gen, sft, search, 1e-8)?;
    let mut anchors = Vec::new();
    for p in &anchor_points {
        let k = p.period().expect("anchors are periodic");
        let eta = invariant_structure_elliptic(
            &gen.evaluate(p, k as i64),
            ctx.tolerance.min(1e-10),
            max_iter,
        )?;
        anchors.push((p.clone(), eta));
    }
    let eta = extend_structure(gen, sft, &anchors, &x, &cert)?;
    // report the single-step invariance defect at x as a sanity number
    let pulled = pull(gen.matrix_at(&x, 0), &eta);
    let eta_fx = extend_structure(gen, sft, &anchors, &x.shifted(1), &cert)?;
    let residual = distance(&pulled, &eta_fx);
    ctx.write_report(
        "extend",
        ExtendResults {
            eta: matrix_rows(eta.form()),
            anchors: anchor_points.iter().map(format_point).collect(),
            invariance_residual_at_x: residual,
            certificate: CertificateInfo::from(&cert),
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifyResults {
    #[serde(skip_serializing_if = "Option::is_none")]
    field_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coboundary_residual: Option<f64>,
    tolerance: f64,
    within_tolerance: bool,
}

fn cmd_verify(ctx: &Ctx) -> anyhow::Result<i32> {
    let gen = &ctx.cfg.generator;
    let sft = &ctx.cfg.sft;
    let mut field_residual = None;
    let mut coboundary_residual = None;
    if let Some(field) = &ctx.cfg.field {
        field_residual = Some(verify_invariant_field(gen, field, sft)?);
    }
    if let Some(transfer) = &ctx.cfg.transfer {
        let identity;
        let gen_b = match &ctx.cfg.generator_b {
            Some(b) => b,
            None => {
                identity = LocallyConstantGenerator::constant(
                    sft,
                    DMatrix::identity(gen.dimension(), gen.dimension()),
                )?;
                &identity
            }
        };
        coboundary_residual = Some(verify_coboundary(gen, gen_b, transfer, sft)?);
    }
    if field_residual.is_none() && coboundary_residual.is_none() {
        bail!("verify needs a [field] and/or a [transfer] section");
    }
    let within = field_residual.unwrap_or(0.0) <= ctx.tolerance
        && coboundary_residual.unwrap_or(0.0) <= ctx.tolerance;
    ctx.write_report(
        "verify",
        VerifyResults {
            field_residual,
            coboundary_residual,
            tolerance: ctx.tolerance,
            within_tolerance: within,
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct ConstructResults {
    outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    anchors: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    obstruction: Option<serde_json::Value>,
}

fn cmd_construct(ctx: &Ctx) -> anyhow::Result<i32> {
    let search = ctx.cfg.resolved.run.search_period_max.unwrap_or(6);
    match construct_invariant_structure(&ctx.cfg.generator, &ctx.cfg.sft, search)? {
        ConstructOutcome::Structure(s) => {
            let dim = s.field.dimension();
            let header = {
                let mut cols = vec!["word".to_string()];
                for i in 0..dim {
                    for j in 0..dim {
                        cols.push(format!("f{i}{j}"));
                    }
                }
                cols.join(",")
            };
            let rows: Vec<String> = s
                .field
                .table()
                .iter()
                .map(|(w, eta)| {
                    let mut cells = vec![word_key(w)];
                    for i in 0..dim {
                        for j in 0..dim {
                            cells.push(num(eta.form()[(i, j)]));
                        }
                    }
                    cells.join(",")
                })
                .collect();
            ctx.write_csv("field.csv", &header, &rows)?;
            ctx.write_report(
                "construct",
                ConstructResults {
                    outcome: "structure".into(),
                    residual: Some(s.residual),
                    certificate: Some(CertificateInfo::from(&s.certificate)),
                    anchors: Some(s.anchors.iter().map(format_point).collect()),
                    obstruction: None,
                },
            )?;
            Ok(0)
        }
        ConstructOutcome::Obstruction(o) => {
            let obstruction = match &o {
                Obstruction::PositiveExponent { point, period, lambda_plus } => serde_json::json!({
                    "kind": "positive_exponent",
                    "point": format_point(point),
                    "period": period,
                    "lambda_plus": lambda_plus,
                }),
                Obstruction::NoBunchingCertificate { best_theta, tau } => serde_json::json!({
                    "kind": "no_bunching_certificate",
                    "best_theta": best_theta,
                    "tau": tau,
                }),
                Obstruction::AnchorNotElliptic { symbol, detail } => serde_json::json!({
                    "kind": "anchor_not_elliptic",
                    "symbol": symbol,
                    "detail": detail,
                }),
                Obstruction::InconsistentExtension { residual } => serde_json::json!({
                    "kind": "inconsistent_extension",
                    "residual": residual,
                }),
            };
            ctx.write_report(
                "construct",
                ConstructResults {
                    outcome: "obstruction".into(),
                    residual: None,
                    certificate: None,
                    anchors: None,
                    obstruction: Some(obstruction),
                },
            )?;
            Ok(1)
        }
    }
}

#[derive(Serialize)]
struct ShadowResults {
    lambda_x: f64,
    lambda_y: f64,
    xi: f64,
    zeta: f64,
    b: usize,
    c: usize,
    eps: f64,
    chi: f64,
    log_c: f64,
    block: usize,
    theta: f64,
    x_exponent_positive: bool,
    y_exponent_zero: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    rows: usize,
}

fn cmd_shadow(ctx: &Ctx) -> anyhow::Result<i32> {
    let run = &ctx.cfg.resolved.run;
    let sft = &ctx.cfg.sft;
    let gen = &ctx.cfg.generator;
    let x = parse_point(
        run.point_x.as_deref().ok_or_else(|| anyhow!("[run] point_x is required"))?,
        sft,
    )
    .map_err(|e| anyhow!(e))?;
    let y = parse_point(
        run.point_y.as_deref().ok_or_else(|| anyhow!("[run] point_y is required"))?,
        sft,
    )
    .map_err(|e| anyhow!(e))?;
    let kx = x.period().ok_or_else(|| anyhow!("point_x must be periodic"))?;
    let ky = y.period().ok_or_else(|| anyhow!("point_y must be periodic"))?;
    let k = run.k.unwrap_or_else(|| kx * ky / gcd(kx, ky));
    let theta = run.theta.unwrap_or(sft.tau() / 2.0);
    let block = run.block.unwrap_or(2);
    let pair_x = gen.lyapunov_periodic(&x, k)?;
    let lambda = pair_x.lambda_plus;
    let xi = pair_x.gap();
    let zeta = gen.zeta();
    let (b, c, eps) = match (run.b, run.c, run.eps) {
        (Some(b), Some(c), Some(eps)) => (b, c, eps),
        _ => match tune_parameters(lambda, xi, zeta, sft.tau(), theta)? {
            Some(t) => (t.b, t.c, t.eps),
            None => {
                #[derive(Serialize)]
                struct Infeasible {
                    tuned: bool,
                    lambda: f64,
                    xi: f64,
                    zeta: f64,
                    theta: f64,
                }
                ctx.write_report(
                    "shadow",
                    Infeasible { tuned: false, lambda, xi, zeta, theta },
                )?;
                return Ok(1);
            }
        },
    };
    let m_values = run
        .m_list
        .clone()
        .unwrap_or_else(|| vec![4 * k, 8 * k, 16 * k, 32 * k]);
    let family =
        ShadowingFamily { x, y, k, b, c, eps, m_values };
    let gamma = ctx.cfg.field.as_ref().map(|f| f.comparison_bound());
    let report = growth_and_membership_experiment(gen, sft, &family, block, theta, gamma)?;
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{block},{}",
                r.m,
                r.u_m,
                num(r.log_norm),
                num(r.chi_reference),
                r.in_d,
                num(theta)
            )
        })
        .collect();
    ctx.write_csv("shadow.csv", "m,u_m,log_norm,chi_reference,in_d,block,theta", &rows)?;
    ctx.write_report(
        "shadow",
        ShadowResults {
            lambda_x: report.lambda_x,
            lambda_y: report.lambda_y,
            xi,
            zeta: report.zeta,
            b,
            c,
            eps: report.eps,
            chi: report.chi,
            log_c: report.log_c,
            block,
            theta,
            x_exponent_positive: report.x_exponent_positive,
            y_exponent_zero: report.y_exponent_zero,
            gamma: report.gamma,
            rows: report.rows.len(),
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct IrreducibleResults {
    matrices_tested: usize,
    period_max: usize,
    reducible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    subspace_dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    basis: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
}

fn cmd_irreducible(ctx: &Ctx) -> anyhow::Result<i32> {
    let period_max = ctx.cfg.resolved.run.period_max.unwrap_or(4);
    let gen = &ctx.cfg.generator;
    let mut matrices = Vec::new();
    for kk in 1..=period_max {
        for p in ctx.cfg.sft.enumerate_periodic(kk)? {
            matrices.push(gen.evaluate(&p, kk as i64));
        }
    }
    let result = common_invariant_subspace(&matrices, gen.dimension())?;
    ctx.write_report(
        "irreducible",
        IrreducibleResults {
            matrices_tested: matrices.len(),
            period_max,
            reducible: result.is_some(),
            subspace_dimension: result.as_ref().map(|s| s.basis.ncols()),
            basis: result.as_ref().map(|s| matrix_rows(&s.basis)),
            residual: result.as_ref().map(|s| s.residual),
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct QuasiconformalResults {
    log_c: f64,
    eps: f64,
    uniformly_quasiconformal: bool,
    n_max: usize,
    period_max: usize,
    samples: usize,
}

fn cmd_quasiconformal(ctx: &Ctx) -> anyhow::Result<i32> {
    let run = &ctx.cfg.resolved.run;
    let n_max = run.n_max.unwrap_or(256);
    let period_max = run.period_max.unwrap_or(4);
    let samples = run.samples.unwrap_or(4);
    let report = quasiconformality_report(
        &ctx.cfg.generator,
        &ctx.cfg.sft,
        n_max,
        period_max,
        samples,
        ctx.seed,
    )?;
    let rows: Vec<String> =
        report.rows.iter().map(|r| format!("{},{}", r.n, num(r.log_k))).collect();
    ctx.write_csv("quasiconformal.csv", "n,log_k", &rows)?;
    ctx.write_report(
        "quasiconformal",
        QuasiconformalResults {
            log_c: report.log_c,
            eps: report.eps,
            uniformly_quasiconformal: report.uniformly_quasiconformal,
            n_max,
            period_max,
            samples,
        },
    )?;
    Ok(0)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}
