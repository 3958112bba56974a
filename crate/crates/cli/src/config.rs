//! The line-oriented experiment configuration format.
//!
//! A config is UTF-8 text with `#` comments, a `version = 1` header key, and
//! the sections `[sft]`, `[generator]`, `[measure]`, `[run]` plus the
//! optional `[generator_b]`, `[transfer]`, `[field]`. Keys are `name = value`
//! with whitespace-separated numeric lists as values. Table entries are keyed
//! by their window word, symbols joined by dots: `entry.1.2 = ...` holds the
//! row-major matrix for the word `(1, 2)`.
//!
//! Symbolic points are written `left|core|right@start` with comma-separated
//! cycles (`1,2||1,2@0` is the periodic point of the cycle `12`), or
//! `per:1,2` as shorthand for that periodic form.

use std::collections::BTreeMap;
use std::fmt;

use cocycle_core::{
    ConformalField, ConformalStructure, LocallyConstantGenerator, MarkovMeasure, Sft, Symbol,
    SymbolicPoint, TransferField,
};
use nalgebra::DMatrix;
use serde::Serialize;

/// Parse-time failure: the offending line and key, with a reason.
#[derive(Debug, Clone)]
pub struct ParseError {
    pub line: usize,
    pub key: String,
    pub reason: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {} (key `{}`): {}", self.line, self.key, self.reason)
    }
}

impl std::error::Error for ParseError {}

type PResult<T> = Result<T, ParseError>;

fn err<T>(line: usize, key: &str, reason: impl Into<String>) -> PResult<T> {
    Err(ParseError { line, key: key.to_string(), reason: reason.into() })
}

/// Raw `key = value` entry with its source line.
#[derive(Debug, Clone)]
struct RawEntry {
    line: usize,
    value: String,
    used: bool,
}

#[derive(Debug, Default)]
struct RawSection {
    header_line: usize,
    entries: BTreeMap<String, RawEntry>,
}

impl RawSection {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn take_keys_with_prefix(&mut self, prefix: &str) -> Vec<(String, usize, String)> {
        let keys: Vec<String> =
            self.entries.keys().filter(|k| k.starts_with(prefix)).cloned().collect();
        keys.into_iter()
            .map(|k| {
                let e = self.entries.get_mut(&k).unwrap();
                e.used = true;
                (k.clone(), e.line, e.value.clone())
            })
            .collect()
    }

    fn check_exhausted(&self, section: &str) -> PResult<()> {
        for (k, e) in &self.entries {
            if !e.used {
                return err(e.line, k, format!("unknown key in section [{section}]"));
            }
        }
        Ok(())
    }
}

/// Echo of the parsed configuration, embedded in every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub version: u32,
    pub sft: SftSpec,
    pub generator: TableSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_b: Option<TableSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TableSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<TableSpec>,
    pub measure: MeasureSpec,
    pub run: RunSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct SftSpec {
    pub alphabet: usize,
    pub tau: f64,
    pub rows: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableSpec {
    pub dimension: usize,
    pub window: (i64, i64),
    pub entries: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureSpec {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<f64>>>,
}

/// `[run]` keys; commands take what they need and fall back to defaults.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_period_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point_x: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point_y: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point_z: Option<String>,
}

/// A parsed and validated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub resolved: ResolvedConfig,
    pub sft: Sft,
    pub generator: LocallyConstantGenerator,
    pub generator_b: Option<LocallyConstantGenerator>,
    pub transfer: Option<TransferField>,
    pub field: Option<ConformalField>,
    pub measure: MarkovMeasure,
}

/// Parses and validates a configuration; every module-level invariant is
/// checked here (0/1 transitions, invertible entries, stochastic rows,
/// window coverage), with diagnostics naming the offending line and key.
pub fn parse_config(text: &str) -> PResult<ExperimentConfig> {
    let mut sections: BTreeMap<String, RawSection> = BTreeMap::new();
    let mut header: BTreeMap<String, RawEntry> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return err(line_no, line, "malformed section header");
            };
            let name = name.trim().to_string();
            if sections.contains_key(&name) {
                return err(line_no, &name, "duplicate section");
            }
            sections.insert(
                name.clone(),
                RawSection { header_line: line_no, entries: BTreeMap::new() },
            );
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(line_no, line, "expected `key = value`");
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let target = match &current {
            Some(name) => &mut sections.get_mut(name).unwrap().entries,
            None => &mut header,
        };
        if target.contains_key(&key) {
            return err(line_no, &key, "duplicate key");
        }
        target.insert(key, RawEntry { line: line_no, value, used: false });
    }

    // version header
    let Some(version_entry) = header.get_mut("version") else {
        return err(1, "version", "missing `version = 1` header key");
    };
    version_entry.used = true;
    let version: u32 = parse_scalar(version_entry.line, "version", &version_entry.value)?;
    if version != 1 {
        return err(version_entry.line, "version", format!("unsupported version {version}"));
    }
    for (k, e) in &header {
        if !e.used {
            return err(e.line, k, "key outside any section");
        }
    }

    let known = ["sft", "generator", "generator_b", "transfer", "field", "measure", "run"];
    for (name, sec) in &sections {
        if !known.contains(&name.as_str()) {
            return err(sec.header_line, name, "unknown section");
        }
    }

    // [sft]
    let mut sft_sec = sections.remove("sft").ok_or_else(|| ParseError {
        line: 1,
        key: "sft".into(),
        reason: "missing [sft] section".into(),
    })?;
    let (al, av) = sft_sec
        .take("alphabet")
        .ok_or_else(|| ParseError {
            line: sft_sec.header_line,
            key: "alphabet".into(),
            reason: "missing alphabet size".into(),
        })?;
    let alphabet: usize = parse_scalar(al, "alphabet", &av)?;
    let tau = match sft_sec.take("tau") {
        Some((l, v)) => parse_scalar(l, "tau", &v)?,
        None => 1.0,
    };
    let mut rows = Vec::with_capacity(alphabet);
    for i in 1..=alphabet {
        let key = format!("row.{i}");
        let Some((l, v)) = sft_sec.take(&key) else {
            return err(sft_sec.header_line, &key, "missing transition row");
        };
        let row: Vec<u8> = parse_list(l, &key, &v)?;
        if row.len() != alphabet {
            return err(l, &key, format!("row has {} entries, expected {alphabet}", row.len()));
        }
        rows.push(row);
    }
    sft_sec.check_exhausted("sft")?;
    let sft = Sft::new(&rows, tau)
        .map_err(|e| ParseError {
            line: sft_sec.header_line,
            key: "sft".into(),
            reason: e.to_string(),
        })?;

    // [generator]
    let gen_sec = sections.remove("generator").ok_or_else(|| ParseError {
        line: 1,
        key: "generator".into(),
        reason: "missing [generator] section".into(),
    })?;
    let (gen_spec, generator) = parse_matrix_table(gen_sec, "generator", &sft, |d, lo, hi, t| {
        LocallyConstantGenerator::new(&sft, d, lo, hi, t).map_err(|e| e.to_string())
    })?;

    // optional matrix sections
    let generator_b = match sections.remove("generator_b") {
        Some(sec) => {
            let (spec, g) = parse_matrix_table(sec, "generator_b", &sft, |d, lo, hi, t| {
                LocallyConstantGenerator::new(&sft, d, lo, hi, t).map_err(|e| e.to_string())
            })?;
            Some((spec, g))
        }
        None => None,
    };
    let transfer = match sections.remove("transfer") {
        Some(sec) => {
            let (spec, t) = parse_matrix_table(sec, "transfer", &sft, |d, lo, hi, tab| {
                TransferField::new(&sft, d, lo, hi, tab).map_err(|e| e.to_string())
            })?;
            Some((spec, t))
        }
        None => None,
    };
    let field = match sections.remove("field") {
        Some(sec) => {
            let (spec, f) = parse_matrix_table(sec, "field", &sft, |_d, lo, hi, tab| {
                let mut table = BTreeMap::new();
                for (w, m) in tab {
                    let eta = ConformalStructure::new(m).map_err(|e| e.to_string())?;
                    table.insert(w, eta);
                }
                ConformalField::new(&sft, lo, hi, table).map_err(|e| e.to_string())
            })?;
            Some((spec, f))
        }
        None => None,
    };

    // [measure]
    let (measure_spec, measure) = match sections.remove("measure") {
        None => (
            MeasureSpec { kind: "parry".into(), rows: None },
            MarkovMeasure::parry(&sft).map_err(|e| ParseError {
                line: 1,
                key: "measure".into(),
                reason: format!("default parry measure unavailable: {e}"),
            })?,
        ),
        Some(mut sec) => {
            let kind = match sec.take("kind") {
                Some((_, v)) => v,
                None => "parry".to_string(),
            };
            match kind.as_str() {
                "parry" => {
                    sec.check_exhausted("measure")?;
                    (
                        MeasureSpec { kind, rows: None },
                        MarkovMeasure::parry(&sft).map_err(|e| ParseError {
                            line: sec.header_line,
                            key: "kind".into(),
                            reason: e.to_string(),
                        })?,
                    )
                }
                "explicit" => {
                    let mut prows = Vec::with_capacity(alphabet);
                    for i in 1..=alphabet {
                        let key = format!("row.{i}");
                        let Some((l, v)) = sec.take(&key) else {
                            return err(sec.header_line, &key, "missing stochastic row");
                        };
                        let row: Vec<f64> = parse_list(l, &key, &v)?;
                        if row.len() != alphabet {
                            return err(l, &key, "stochastic row length mismatch");
                        }
                        prows.push(row);
                    }
                    sec.check_exhausted("measure")?;
                    let flat: Vec<f64> = prows.iter().flatten().copied().collect();
                    let p = DMatrix::from_row_slice(alphabet, alphabet, &flat);
                    let mu = MarkovMeasure::new(&sft, p).map_err(|e| ParseError {
                        line: sec.header_line,
                        key: "measure".into(),
                        reason: e.to_string(),
                    })?;
                    (MeasureSpec { kind, rows: Some(prows) }, mu)
                }
                other => {
                    return err(sec.header_line, "kind", format!("unknown measure kind `{other}`"))
                }
            }
        }
    };

    // [run]
    let run = match sections.remove("run") {
        None => RunSpec::default(),
        Some(mut sec) => {
            let run = parse_run(&mut sec)?;
            sec.check_exhausted("run")?;
            run
        }
    };

    let resolved = ResolvedConfig {
        version,
        sft: SftSpec { alphabet, tau, rows },
        generator: gen_spec,
        generator_b: generator_b.as_ref().map(|(s, _)| s.clone()),
        transfer: transfer.as_ref().map(|(s, _)| s.clone()),
        field: field.as_ref().map(|(s, _)| s.clone()),
        measure: measure_spec,
        run,
    };
    Ok(ExperimentConfig {
        resolved,
        sft,
        generator,
        generator_b: generator_b.map(|(_, g)| g),
        transfer: transfer.map(|(_, t)| t),
        field: field.map(|(_, f)| f),
        measure,
    })
}

fn parse_run(sec: &mut RawSection) -> PResult<RunSpec> {
    let mut run = RunSpec::default();
    macro_rules! scalar {
        ($field:ident, $key:literal) => {
            if let Some((l, v)) = sec.take($key) {
                run.$field = Some(parse_scalar(l, $key, &v)?);
            }
        };
    }
    macro_rules! list {
        ($field:ident, $key:literal) => {
            if let Some((l, v)) = sec.take($key) {
                run.$field = Some(parse_list(l, $key, &v)?);
            }
        };
    }
    scalar!(seed, "seed");
    scalar!(period_max, "period_max");
    scalar!(search_period_max, "search_period_max");
    scalar!(n, "n");
    scalar!(n_max, "n_max");
    scalar!(samples, "samples");
    scalar!(block, "block");
    list!(block_list, "block_list");
    scalar!(theta, "theta");
    scalar!(eps, "eps");
    list!(m_list, "m_list");
    scalar!(k, "k");
    scalar!(b, "b");
    scalar!(c, "c");
    scalar!(trials, "trials");
    scalar!(tolerance, "tolerance");
    scalar!(max_iter, "max_iter");
    for (field, key) in [("point_x", "point_x"), ("point_y", "point_y"), ("point_z", "point_z")] {
        if let Some((_, v)) = sec.take(key) {
            match field {
                "point_x" => run.point_x = Some(v),
                "point_y" => run.point_y = Some(v),
                _ => run.point_z = Some(v),
            }
        }
    }
    Ok(run)
}

/// Parses a matrix-table section (`dimension`, `window`, `entry.*`) and
/// builds the domain object through `build`.
fn parse_matrix_table<T>(
    mut sec: RawSection,
    name: &str,
    sft: &Sft,
    build: impl FnOnce(usize, i64, i64, BTreeMap<Vec<Symbol>, DMatrix<f64>>) -> Result<T, String>,
) -> PResult<(TableSpec, T)> {
    let header_line = sec.header_line;
    let (dl, dv) = sec.take("dimension").ok_or_else(|| ParseError {
        line: header_line,
        key: "dimension".into(),
        reason: format!("[{name}] is missing its dimension"),
    })?;
    let dim: usize = parse_scalar(dl, "dimension", &dv)?;
    let (wl, wv) = sec.take("window").ok_or_else(|| ParseError {
        line: header_line,
        key: "window".into(),
        reason: format!("[{name}] is missing its window"),
    })?;
    let win: Vec<i64> = parse_list(wl, "window", &wv)?;
    if win.len() != 2 {
        return err(wl, "window", "window needs exactly two bounds: `lo hi`");
    }
    let (lo, hi) = (win[0], win[1]);
    let mut entries = BTreeMap::new();
    let mut table = BTreeMap::new();
    for (key, line, value) in sec.take_keys_with_prefix("entry.") {
        let word_txt = key.strip_prefix("entry.").unwrap();
        let word: Vec<Symbol> = word_txt
            .split('.')
            .map(|t| {
                t.parse::<Symbol>().map_err(|_| ParseError {
                    line,
                    key: key.clone(),
                    reason: format!("bad symbol `{t}` in entry key"),
                })
            })
            .collect::<PResult<_>>()?;
        let flat: Vec<f64> = parse_list(line, &key, &value)?;
        if flat.len() != dim * dim {
            return err(
                line,
                &key,
                format!("expected {} entries (row-major {dim}x{dim}), got {}", dim * dim, flat.len()),
            );
        }
        entries.insert(word_txt.to_string(), flat.clone());
        table.insert(word, DMatrix::from_row_slice(dim, dim, &flat));
    }
    sec.check_exhausted(name)?;
    let built = build(dim, lo, hi, table).map_err(|reason| ParseError {
        line: header_line,
        key: name.to_string(),
        reason,
    })?;
    let _ = sft;
    Ok((TableSpec { dimension: dim, window: (lo, hi), entries }, built))
}

fn parse_scalar<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> PResult<T> {
    v.parse::<T>().map_or_else(
        |_| err(line, key, format!("cannot parse `{v}` as {}", std::any::type_name::<T>())),
        Ok,
    )
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> PResult<Vec<T>> {
    v.split_whitespace()
        .map(|t| {
            t.parse::<T>().map_err(|_| ParseError {
                line,
                key: key.to_string(),
                reason: format!("cannot parse `{t}` in list"),
            })
        })
        .collect()
}

/// Parses the point syntax `left|core|right@start` or `per:<cycle>`.
pub fn parse_point(text: &str, sft: &Sft) -> Result<SymbolicPoint, String> {
    let text = text.trim();
    if let Some(cycle) = text.strip_prefix("per:") {
        let syms = parse_symbols(cycle)?;
        return SymbolicPoint::periodic(sft, &syms).map_err(|e| e.to_string());
    }
    let (body, start) = match text.split_once('@') {
        Some((b, s)) => {
            (b, s.trim().parse::<i64>().map_err(|_| format!("bad start index `{s}`"))?)
        }
        None => (text, 0),
    };
    let parts: Vec<&str> = body.split('|').collect();
    if parts.len() != 3 {
        return Err(format!(
            "point `{text}` must be `left|core|right@start` or `per:<cycle>`"
        ));
    }
    let left = parse_symbols(parts[0])?;
    let core = if parts[1].trim().is_empty() { Vec::new() } else { parse_symbols(parts[1])? };
    let right = parse_symbols(parts[2])?;
    SymbolicPoint::new(sft, left, core, right, start).map_err(|e| e.to_string())
}

fn parse_symbols(t: &str) -> Result<Vec<Symbol>, String> {
    t.split(',')
        .map(|s| s.trim().parse::<Symbol>().map_err(|_| format!("bad symbol `{s}`")))
        .collect()
}

/// Renders a point in the same syntax `parse_point` accepts.
pub fn format_point(p: &SymbolicPoint) -> String {
    let join = |s: &[Symbol]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    format!(
        "{}|{}|{}@{}",
        join(p.left_cycle()),
        join(p.core()),
        join(p.right_cycle()),
        p.core_start()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
version = 1

[sft]
alphabet = 2
row.1 = 1 1
row.2 = 1 1

[generator]
dimension = 2
window = 0 0
entry.1 = 1 0 0 1
entry.2 = 1 0 0 1
";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.sft.alphabet_size(), 2);
        assert_eq!(cfg.sft.tau(), 1.0);
        assert_eq!(cfg.resolved.measure.kind, "parry");
        assert_eq!(cfg.generator.dimension(), 2);
    }

    #[test]
    fn wrong_row_length_names_the_row() {
        let bad = MINIMAL.replace("row.2 = 1 1", "row.2 = 1");
        let e = parse_config(&bad).unwrap_err();
        assert_eq!(e.key, "row.2");
        assert!(e.reason.contains("expected 2"));
    }

    #[test]
    fn missing_window_word_is_listed() {
        let bad = MINIMAL.replace("entry.2 = 1 0 0 1\n", "");
        let e = parse_config(&bad).unwrap_err();
        assert_eq!(e.key, "generator");
        assert!(e.reason.contains("[2]"), "reason: {}", e.reason);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{MINIMAL}\n[run]\nbogus = 3\n");
        let e = parse_config(&bad).unwrap_err();
        assert_eq!(e.key, "bogus");
    }

    #[test]
    fn singular_entry_is_rejected() {
        let bad = MINIMAL.replace("entry.2 = 1 0 0 1", "entry.2 = 1 1 1 1");
        let e = parse_config(&bad).unwrap_err();
        assert!(e.reason.contains("determinant"), "reason: {}", e.reason);
    }

    #[test]
    fn point_syntax_round_trips() {
        let cfg = parse_config(MINIMAL).unwrap();
        let p = parse_point("1,2||1,2@0", &cfg.sft).unwrap();
        assert_eq!(p, parse_point("per:1,2", &cfg.sft).unwrap());
        let q = parse_point("1|2|1@-1", &cfg.sft).unwrap();
        assert_eq!(parse_point(&format_point(&q), &cfg.sft).unwrap(), q);
    }
}
