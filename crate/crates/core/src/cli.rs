//! The `qhistory` command line tool.
//!
//! Commands render either aligned text tables or JSON (`--json`). Exit
//! codes: 0 success, 2 parse error, 3 impossible outcome, 4 statistical
//! failure, 5 invariant violation.

use std::ffi::OsString;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dsl::{parse_scenario, ParseError};
use crate::histories::{
    collapse_on_outcome, enumerate_history_vector, state_before_measurement, HistoryError,
    HistoryVector, Scenario, DEFAULT_PRUNE_TOL,
};
use crate::linalg::{CMatrix, C64};
use crate::oracle::{compare_to_engine, sample_histories, Comparison, OracleError};
use crate::quantum::{partial_trace, QuantumError};
use crate::wigner::{run_wigner_report, WignerError, WignerReport, W_STEP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_IMPOSSIBLE: i32 = 3;
pub const EXIT_STATISTICAL: i32 = 4;
pub const EXIT_INVARIANT: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("impossible outcome: {0}")]
    Impossible(HistoryError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Wigner(#[from] WignerError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Parse { .. } => EXIT_PARSE,
            Self::Impossible(_) => EXIT_IMPOSSIBLE,
            _ => EXIT_INVARIANT,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qhistory", version, about = "History vectors of small qubit systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List every history with nonvanishing amplitude.
    Histories {
        file: PathBuf,
        /// Drop histories with |A| <= TOL.
        #[arg(long, value_name = "TOL", default_value_t = DEFAULT_PRUNE_TOL)]
        prune: f64,
        #[arg(long)]
        json: bool,
        /// Also print the history diagram.
        #[arg(long)]
        diagram: bool,
    },
    /// Collapse the history vector on an observed outcome.
    Collapse {
        file: PathBuf,
        /// Step of the observation (1-based).
        #[arg(long, value_name = "STEP")]
        at: usize,
        #[arg(long, value_name = "LABEL")]
        outcome: String,
        #[arg(long, value_name = "TOL", default_value_t = DEFAULT_PRUNE_TOL)]
        prune: f64,
        #[arg(long)]
        json: bool,
    },
    /// Reduced density matrix of some wires, after the evolution of a step.
    Reduce {
        file: PathBuf,
        /// Wires to keep, comma separated.
        #[arg(long, value_name = "WIRES", value_delimiter = ',', required = true)]
        keep: Vec<usize>,
        /// Step whose pre-measurement state is reduced; defaults to the last.
        #[arg(long, value_name = "K")]
        at_step: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Sample histories by Born-rule simulation and compare with the engine.
    Sample {
        file: PathBuf,
        #[arg(long, value_name = "N", default_value_t = 100_000)]
        shots: u64,
        #[arg(long, value_name = "S", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Wigner's-friend report for S prepared as alpha|0> + beta|1>.
    Wigner {
        #[arg(long, value_name = "RE,IM", value_parser = parse_complex, allow_hyphen_values = true)]
        alpha: C64,
        #[arg(long, value_name = "RE,IM", value_parser = parse_complex, allow_hyphen_values = true)]
        beta: C64,
        #[arg(long)]
        json: bool,
    },
}

fn parse_complex(s: &str) -> Result<C64, String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected RE,IM, got {s:?}"))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("invalid number {t:?}"))
    };
    Ok(C64::new(parse(re)?, parse(im)?))
}

/// `%.12g`-style number: 12 significant digits, trailing zeros trimmed,
/// lowercase scientific notation for magnitudes below 1e-4 (or 1e12 and up).
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..12).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_complex(z: C64) -> String {
    format!("({},{})", fmt_num(z.re), fmt_num(z.im))
}

/// JSON number: rounded to 12 significant digits, clamped to finite.
fn num(x: f64) -> f64 {
    if x.is_finite() {
        fmt_num(x).parse().expect("formatted float")
    } else {
        x.signum() * f64::MAX
    }
}

/// Text rows of a history diagram: one per history, steps joined by `→`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderedHistoryDiagram {
    pub lines: Vec<String>,
}

impl fmt::Display for RenderedHistoryDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

pub fn render_history_diagram(hv: &HistoryVector) -> RenderedHistoryDiagram {
    let steps = hv.history_len().unwrap_or(0);
    let widths: Vec<usize> = (1..=steps)
        .map(|k| {
            hv.histories()
                .filter_map(|h| h.label(k))
                .map(|l| l.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let lines = hv
        .iter()
        .map(|(h, a)| {
            let path = if h.is_empty() {
                "(empty)".to_string()
            } else {
                h.labels()
                    .iter()
                    .zip(&widths)
                    .map(|(l, w)| format!("{l:<w$}"))
                    .collect::<Vec<_>>()
                    .join(" → ")
            };
            format!("{path}  |A|={:.3}", a.norm())
        })
        .collect();
    RenderedHistoryDiagram { lines }
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        writeln!(out, "{}", padded.join("  ").trim_end()).unwrap();
    };
    line(header.iter().map(|s| s.to_string()).collect());
    for row in rows {
        line(row.clone());
    }
    out
}

fn history_table(hv: &HistoryVector) -> String {
    let rows: Vec<Vec<String>> = hv
        .iter()
        .map(|(h, a)| {
            vec![
                if h.is_empty() { "-".into() } else { h.to_string() },
                fmt_num(a.re),
                fmt_num(a.im),
                fmt_num(a.norm_sqr()),
            ]
        })
        .collect();
    table(&["history", "re(A)", "im(A)", "probability"], &rows)
}

pub fn history_json(hv: &HistoryVector) -> Value {
    let histories: Vec<Value> = hv
        .iter()
        .map(|(h, a)| {
            json!({
                "labels": h.labels(),
                "amplitude": [num(a.re), num(a.im)],
                "probability": num(a.norm_sqr()),
            })
        })
        .collect();
    json!({ "histories": histories })
}

fn matrix_json(m: &CMatrix) -> Value {
    let rows: Vec<Value> = (0..m.rows())
        .map(|i| {
            Value::Array(
                m.row(i)
                    .iter()
                    .map(|z| json!([num(z.re), num(z.im)]))
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

fn matrix_text(m: &CMatrix, indent: &str) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let cells: Vec<String> = m.row(i).iter().map(|z| fmt_complex(*z)).collect();
        writeln!(out, "{indent}{}", cells.join(" ")).unwrap();
    }
    out
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn load(path: &PathBuf) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let doc = parse_scenario(&text).map_err(|source| CliError::Parse {
        path: path.clone(),
        source,
    })?;
    Ok(doc.to_scenario()?)
}

/// Result of a successful command: what to print and the exit status.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub code: i32,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            code: EXIT_OK,
        }
    }
}

pub fn cmd_histories(file: &PathBuf, prune: f64, json: bool, diagram: bool) -> Result<Output, CliError> {
    let hv = enumerate_history_vector(&load(file)?, prune);
    if json {
        return Ok(Output::ok(pretty(&history_json(&hv))));
    }
    let mut out = history_table(&hv);
    if diagram && !hv.is_empty() {
        out.push('\n');
        out.push_str(&render_history_diagram(&hv).to_string());
    }
    Ok(Output::ok(out))
}

pub fn cmd_collapse(
    file: &PathBuf,
    at: usize,
    outcome: &str,
    prune: f64,
    json: bool,
) -> Result<Output, CliError> {
    let hv = enumerate_history_vector(&load(file)?, prune);
    let collapsed = collapse_on_outcome(&hv, at, outcome).map_err(|e| match e {
        HistoryError::ImpossibleOutcome { .. } => CliError::Impossible(e),
        other => CliError::History(other),
    })?;
    if json {
        return Ok(Output::ok(pretty(&history_json(&collapsed))));
    }
    let mut out = history_table(&collapsed);
    out.push('\n');
    out.push_str(&render_history_diagram(&collapsed).to_string());
    Ok(Output::ok(out))
}

pub fn cmd_reduce(file: &PathBuf, keep: &[usize], at_step: Option<usize>, json: bool) -> Result<Output, CliError> {
    let sc = load(file)?;
    let step = at_step.unwrap_or(sc.num_steps());
    let rho = state_before_measurement(&sc, step)?;
    let reduced = partial_trace(&rho, keep)?;
    if json {
        return Ok(Output::ok(pretty(&json!({
            "keep": keep,
            "at_step": step,
            "matrix": matrix_json(reduced.matrix()),
        }))));
    }
    Ok(Output::ok(matrix_text(reduced.matrix(), "")))
}

pub fn cmd_sample(file: &PathBuf, shots: u64, seed: u64, json: bool) -> Result<Output, CliError> {
    let sc = load(file)?;
    let report = sample_histories(&sc, shots, seed)?;
    let hv = enumerate_history_vector(&sc, DEFAULT_PRUNE_TOL);
    let rows = compare_to_engine(&report, &hv)?;
    let passed = rows.iter().all(Comparison::passed);
    let max_z = rows.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
    let stdout = if json {
        let histories: Vec<Value> = rows
            .iter()
            .map(|r| {
                json!({
                    "labels": r.history.labels(),
                    "count": r.count,
                    "empirical": num(r.empirical),
                    "exact": num(r.exact),
                    "z": num(r.z_score),
                })
            })
            .collect();
        pretty(&json!({
            "shots": shots,
            "seed": seed,
            "histories": histories,
            "max_abs_z": num(max_z),
            "passed": passed,
        }))
    } else {
        let body: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    if r.history.is_empty() { "-".into() } else { r.history.to_string() },
                    r.count.to_string(),
                    fmt_num(r.empirical),
                    fmt_num(r.exact),
                    fmt_num(r.z_score),
                ]
            })
            .collect();
        let mut out = table(&["history", "count", "empirical", "exact", "z"], &body);
        writeln!(
            out,
            "shots {shots}, seed {seed}: {} (max |z| = {})",
            if passed { "pass" } else { "FAIL" },
            fmt_num(max_z)
        )
        .unwrap();
        out
    };
    Ok(Output {
        stdout,
        code: if passed { EXIT_OK } else { EXIT_STATISTICAL },
    })
}

fn wigner_json(r: &WignerReport) -> Value {
    let state: Vec<Value> = r
        .entangled_state
        .amplitudes()
        .entries()
        .iter()
        .map(|z| json!([num(z.re), num(z.im)]))
        .collect();
    let friend: Vec<Value> = r
        .friend_view
        .iter()
        .map(|f| {
            let s: Vec<Value> = f.state.amplitudes().entries().iter().map(|z| json!([num(z.re), num(z.im)])).collect();
            json!({ "label": f.label, "probability": num(f.probability), "state": s })
        })
        .collect();
    json!({
        "alpha": [num(r.alpha.re), num(r.alpha.im)],
        "beta": [num(r.beta.re), num(r.beta.im)],
        "entangled_state": state,
        "rho_sf": matrix_json(r.rho_sf.matrix()),
        "rho_s": matrix_json(r.rho_s.matrix()),
        "friend_view": friend,
        "history_vector": history_json(&r.hv),
        "collapsed_on_f1": r.collapsed_hv_on_f1.as_ref().map(history_json),
        "agreement_check": r.agreement_check,
    })
}

fn wigner_text(r: &WignerReport) -> String {
    let mut out = String::new();
    writeln!(out, "alpha = {}  beta = {}", fmt_complex(r.alpha), fmt_complex(r.beta)).unwrap();
    let state: Vec<String> = r
        .entangled_state
        .amplitudes()
        .entries()
        .iter()
        .map(|z| fmt_complex(*z))
        .collect();
    writeln!(out, "\nentangled state of S+F after the friend's measurement:").unwrap();
    writeln!(out, "  {}", state.join(" ")).unwrap();
    writeln!(out, "\nreduced state of S (trace over F):").unwrap();
    out.push_str(&matrix_text(r.rho_s.matrix(), "  "));
    writeln!(out, "\nfriend's description of S:").unwrap();
    for f in &r.friend_view {
        writeln!(
            out,
            "  outcome {} with probability {} -> |{}>",
            f.label,
            fmt_num(f.probability),
            f.label
        )
        .unwrap();
    }
    writeln!(out, "\nhistories:").unwrap();
    for l in &render_history_diagram(&r.hv).lines {
        writeln!(out, "  {l}").unwrap();
    }
    out.push('\n');
    out.push_str(&history_table(&r.hv));
    writeln!(out, "\nafter W finds F = 1 at step {W_STEP}:").unwrap();
    match &r.collapsed_hv_on_f1 {
        Some(c) => {
            for l in &render_history_diagram(c).lines {
                writeln!(out, "  {l}").unwrap();
            }
        }
        None => writeln!(out, "  impossible (beta = 0)").unwrap(),
    }
    writeln!(
        out,
        "\nagreement check: {}",
        if r.agreement_check { "pass" } else { "FAIL" }
    )
    .unwrap();
    out
}

pub fn cmd_wigner(alpha: C64, beta: C64, json: bool) -> Result<Output, CliError> {
    let report = run_wigner_report(alpha, beta)?;
    let stdout = if json {
        pretty(&wigner_json(&report))
    } else {
        wigner_text(&report)
    };
    Ok(Output {
        stdout,
        code: if report.agreement_check { EXIT_OK } else { EXIT_INVARIANT },
    })
}

pub fn execute(cli: Cli) -> Result<Output, CliError> {
    match cli.command {
        Command::Histories {
            file,
            prune,
            json,
            diagram,
        } => cmd_histories(&file, prune, json, diagram),
        Command::Collapse {
            file,
            at,
            outcome,
            prune,
            json,
        } => cmd_collapse(&file, at, &outcome, prune, json),
        Command::Reduce {
            file,
            keep,
            at_step,
            json,
        } => cmd_reduce(&file, &keep, at_step, json),
        Command::Sample {
            file,
            shots,
            seed,
            json,
        } => cmd_sample(&file, shots, seed, json),
        Command::Wigner { alpha, beta, json } => cmd_wigner(alpha, beta, json),
    }
}

/// Parses arguments, runs the command and writes its output. Returns the
/// process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let sink: &mut dyn std::io::Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match execute(cli) {
        Ok(out) => {
            let _ = stdout.write_all(out.stdout.as_bytes());
            out.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
