//! Line-oriented scenario files.
//!
//! ```text
//! # Wigner's friend: S on wire 0, F on wire 1
//! qubits 2
//! init q0 = (0.6,0),(0.8,0)
//! step
//!   measure computational on 0 1
//! step
//!   gate CNOT 0 1
//!   measure computational on 0 1
//! ```
//!
//! Statements:
//!
//! * `qubits N` comes first.
//! * `init q<i> = (re,im),(re,im)` sets one qubit (others default to `|0>`),
//!   or `init state = [ (re,im), ... ]` gives all `2^N` amplitudes.
//! * `step` opens a step; it may carry one statement on the same line.
//! * `gate NAME wires...` with `NAME` one of `X Y Z H CNOT`, or
//!   `U2 <8 reals> w` / `U4 <32 reals> w1 w2` for explicit unitaries given
//!   as row-major `re im` pairs.
//! * `measure computational on wires...` or
//!   `measure family NAME [on wires...]` with `NAME` one of `Z X Y BELL
//!   PARITY`. Each step has exactly one measurement, after its gates.
//!
//! `#` starts a comment. Spacing inside a statement is free.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::gates;
use crate::histories::{Scenario, ScheduleStep};
use crate::linalg::{c, CMatrix, CVector, C64};
use crate::quantum::{
    check_wires, computational_basis_family, embed_operator, subsystem_family, ProjectorFamily,
    QuantumError, StateVector, NORM_TOL, STRUCTURE_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown gate {0:?}")]
    UnknownGate(String),
    #[error("unknown measurement family {0:?}")]
    UnknownFamily(String),
    #[error("matrix is not unitary")]
    NonUnitary,
    #[error("initial state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("wire {wire} out of range for {num_qubits} qubit(s)")]
    WireOutOfRange { wire: usize, num_qubits: usize },
    #[error("wire {0} repeated")]
    DuplicateWire(usize),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl ParseErrorKind {
    /// Short machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Self::Syntax(_) => "syntax",
            Self::UnknownGate(_) => "unknown-gate",
            Self::UnknownFamily(_) => "unknown-family",
            Self::NonUnitary => "non-unitary",
            Self::NotNormalized(_) => "non-normalized",
            Self::WireOutOfRange { .. } => "wire-out-of-range",
            Self::DuplicateWire(_) => "duplicate-wire",
            Self::Invalid(_) => "invalid",
        }
    }
}

/// Parse failure with a 1-based line and column.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

fn err<T>(line: usize, column: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
    Err(ParseError { line, column, kind })
}

fn syntax<T>(line: usize, column: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    err(line, column, ParseErrorKind::Syntax(msg.into()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    Cnot,
    /// Explicit 2x2 unitary, row-major.
    U2(Vec<C64>),
    /// Explicit 4x4 unitary, row-major.
    U4(Vec<C64>),
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            Self::Cnot | Self::U4(_) => 2,
            _ => 1,
        }
    }

    pub fn matrix(&self) -> CMatrix {
        match self {
            Self::X => gates::x(),
            Self::Y => gates::y(),
            Self::Z => gates::z(),
            Self::H => gates::h(),
            Self::Cnot => gates::cnot(),
            Self::U2(m) => CMatrix::new(2, 2, m.clone()).expect("4 entries"),
            Self::U4(m) => CMatrix::new(4, 4, m.clone()).expect("16 entries"),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::X => "X",
            Self::Y => "Y",
            Self::Z => "Z",
            Self::H => "H",
            Self::Cnot => "CNOT",
            Self::U2(_) => "U2",
            Self::U4(_) => "U4",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateSpec {
    pub kind: GateKind,
    pub wires: Vec<usize>,
}

/// Named measurement bases available to `measure family`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyName {
    /// Computational basis, labels `0`/`1` per wire.
    Z,
    /// Hadamard basis, labels `+`/`-` per wire.
    X,
    /// Circular basis, labels `+i`/`-i` per wire.
    Y,
    /// Bell basis on two wires: `phi+ phi- psi+ psi-`.
    Bell,
    /// Two-outcome parity of the listed wires: `even`/`odd`.
    Parity,
}

impl FromStr for FamilyName {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_uppercase().as_str() {
            "Z" | "COMPUTATIONAL" => Ok(Self::Z),
            "X" => Ok(Self::X),
            "Y" => Ok(Self::Y),
            "BELL" => Ok(Self::Bell),
            "PARITY" => Ok(Self::Parity),
            _ => Err(()),
        }
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Z => "Z",
            Self::X => "X",
            Self::Y => "Y",
            Self::Bell => "BELL",
            Self::Parity => "PARITY",
        })
    }
}

impl FamilyName {
    /// Projector family on `k` wires, before lifting to the register.
    pub fn local_family(self, k: usize) -> Result<ProjectorFamily, QuantumError> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let per_wire = |basis: [(&str, [C64; 2]); 2]| -> Result<ProjectorFamily, QuantumError> {
            let one = ProjectorFamily::from_basis(
                basis
                    .iter()
                    .map(|(l, v)| (l.to_string(), CVector::new(v.to_vec()).expect("finite")))
                    .collect(),
            )?;
            (1..k).try_fold(one.clone(), |acc, _| acc.tensor(&one))
        };
        match self {
            Self::Z => Ok(computational_basis_family(k)),
            Self::X => per_wire([("+", [c(s, 0.0), c(s, 0.0)]), ("-", [c(s, 0.0), c(-s, 0.0)])]),
            Self::Y => per_wire([("+i", [c(s, 0.0), c(0.0, s)]), ("-i", [c(s, 0.0), c(0.0, -s)])]),
            Self::Bell => {
                if k != 2 {
                    return Err(QuantumError::ArityMismatch { dim: 4, wires: k });
                }
                let v = |a: f64, b: f64, cc: f64, d: f64| CVector::from_real(&[a, b, cc, d]);
                ProjectorFamily::from_basis(vec![
                    ("phi+".into(), v(s, 0.0, 0.0, s)),
                    ("phi-".into(), v(s, 0.0, 0.0, -s)),
                    ("psi+".into(), v(0.0, s, s, 0.0)),
                    ("psi-".into(), v(0.0, s, -s, 0.0)),
                ])
            }
            Self::Parity => {
                let dim = 1usize << k;
                let mut even = CMatrix::zeros(dim, dim);
                let mut odd = CMatrix::zeros(dim, dim);
                for i in 0..dim {
                    let target = if i.count_ones() % 2 == 0 { &mut even } else { &mut odd };
                    target[(i, i)] = c(1.0, 0.0);
                }
                ProjectorFamily::new(vec![("even".into(), even), ("odd".into(), odd)])
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureSpec {
    Computational { wires: Vec<usize> },
    Family { name: FamilyName, wires: Option<Vec<usize>> },
}

impl MeasureSpec {
    /// The family lifted to a `num_qubits` register.
    pub fn family(&self, num_qubits: usize) -> Result<ProjectorFamily, QuantumError> {
        let all: Vec<usize> = (0..num_qubits).collect();
        let (name, wires) = match self {
            Self::Computational { wires } => (FamilyName::Z, wires.as_slice()),
            Self::Family { name, wires } => (*name, wires.as_deref().unwrap_or(&all)),
        };
        check_wires(wires, num_qubits)?;
        subsystem_family(&name.local_family(wires.len())?, wires, num_qubits)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepDoc {
    pub gates: Vec<GateSpec>,
    pub measure: MeasureSpec,
}

impl StepDoc {
    /// `G_k ... G_1` for the gates in file order.
    pub fn evolution(&self, num_qubits: usize) -> Result<CMatrix, QuantumError> {
        let mut u = CMatrix::identity(1 << num_qubits);
        for g in &self.gates {
            let lifted = embed_operator(&g.kind.matrix(), &g.wires, num_qubits)?;
            u = &lifted * &u;
        }
        Ok(u)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    /// One `(amp0, amp1)` pair per qubit, combined by tensor product.
    PerQubit(Vec<[C64; 2]>),
    /// All `2^N` amplitudes.
    Full(Vec<C64>),
}

impl InitSpec {
    pub fn state(&self) -> Result<StateVector, QuantumError> {
        match self {
            Self::PerQubit(pairs) => {
                let factors = pairs
                    .iter()
                    .map(|p| StateVector::new(CVector::new(p.to_vec())?))
                    .collect::<Result<Vec<_>, _>>()?;
                StateVector::product(&factors)
            }
            Self::Full(amps) => StateVector::new(CVector::new(amps.clone())?),
        }
    }
}

/// Parsed scenario file.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioDoc {
    pub num_qubits: usize,
    pub init: InitSpec,
    pub steps: Vec<StepDoc>,
}

impl ScenarioDoc {
    pub fn to_scenario(&self) -> Result<Scenario, crate::histories::HistoryError> {
        let initial = self.init.state()?;
        let steps = self
            .steps
            .iter()
            .map(|s| {
                ScheduleStep::new(s.evolution(self.num_qubits)?, s.measure.family(self.num_qubits)?)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Scenario::new(initial, steps)
    }

    /// Canonical text form; parsing it back gives an equal document.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let pair = |z: &C64| format!("({:?},{:?})", z.re, z.im);
        let wires = |w: &[usize]| w.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        writeln!(out, "qubits {}", self.num_qubits).unwrap();
        match &self.init {
            InitSpec::PerQubit(pairs) => {
                for (q, [a, b]) in pairs.iter().enumerate() {
                    writeln!(out, "init q{q} = {},{}", pair(a), pair(b)).unwrap();
                }
            }
            InitSpec::Full(amps) => {
                let list: Vec<String> = amps.iter().map(pair).collect();
                writeln!(out, "init state = [{}]", list.join(", ")).unwrap();
            }
        }
        for step in &self.steps {
            out.push_str("step\n");
            for g in &step.gates {
                let mut line = format!("  gate {}", g.kind.name());
                if let GateKind::U2(m) | GateKind::U4(m) = &g.kind {
                    for z in m {
                        write!(line, " {:?} {:?}", z.re, z.im).unwrap();
                    }
                }
                writeln!(out, "{line} {}", wires(&g.wires)).unwrap();
            }
            match &step.measure {
                MeasureSpec::Computational { wires: w } => {
                    writeln!(out, "  measure computational on {}", wires(w)).unwrap()
                }
                MeasureSpec::Family { name, wires: None } => {
                    writeln!(out, "  measure family {name}").unwrap()
                }
                MeasureSpec::Family { name, wires: Some(w) } => {
                    writeln!(out, "  measure family {name} on {}", wires(w)).unwrap()
                }
            }
        }
        out
    }
}

impl fmt::Display for ScenarioDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A whitespace-separated token with its 1-based column.
#[derive(Clone, Copy, Debug)]
struct Token<'a> {
    text: &'a str,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &line[s..i],
                    col: line[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            col: line[..s].chars().count() + 1,
        });
    }
    out
}

/// Non-whitespace characters of `text` with their original 1-based columns.
struct Compact {
    chars: Vec<char>,
    cols: Vec<usize>,
    end_col: usize,
}

impl Compact {
    fn new(text: &str, first_col: usize) -> Self {
        let mut chars = Vec::new();
        let mut cols = Vec::new();
        let mut count = 0;
        for (i, ch) in text.chars().enumerate() {
            count = i + 1;
            if !ch.is_whitespace() {
                chars.push(ch);
                cols.push(first_col + i);
            }
        }
        Self {
            chars,
            cols,
            end_col: first_col + count,
        }
    }

    fn col(&self, pos: usize) -> usize {
        self.cols.get(pos).copied().unwrap_or(self.end_col)
    }
}

/// Cursor over a compacted complex-number list such as `(0.6,0),(0.8,0)`.
struct ValueCursor<'a> {
    src: &'a Compact,
    pos: usize,
    line: usize,
}

impl ValueCursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src.chars.get(self.pos).copied()
    }

    fn expect(&mut self, ch: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(c) if c == ch => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => syntax(self.line, self.src.col(self.pos), format!("expected {ch:?}, found {c:?}")),
            None => syntax(self.line, self.src.col(self.pos), format!("expected {ch:?}, found end of line")),
        }
    }

    fn real(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '-'))
        {
            self.pos += 1;
        }
        let text: String = self.src.chars[start..self.pos].iter().collect();
        parse_real(&text, self.line, self.src.col(start))
    }

    fn complex(&mut self) -> Result<C64, ParseError> {
        self.expect('(')?;
        let re = self.real()?;
        self.expect(',')?;
        let im = self.real()?;
        self.expect(')')?;
        Ok(c(re, im))
    }

    /// `(a,b),(c,d),...`
    fn complex_list(&mut self) -> Result<Vec<C64>, ParseError> {
        let mut out = vec![self.complex()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            out.push(self.complex()?);
        }
        Ok(out)
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(c) => syntax(self.line, self.src.col(self.pos), format!("unexpected {c:?}")),
        }
    }
}

fn parse_real(text: &str, line: usize, col: usize) -> Result<f64, ParseError> {
    match text.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => syntax(line, col, format!("invalid number {text:?}")),
    }
}

fn parse_usize(tok: Token<'_>, line: usize, what: &str) -> Result<usize, ParseError> {
    tok.text
        .parse()
        .or_else(|_| syntax(line, tok.col, format!("invalid {what} {:?}", tok.text)))
}

/// Wire list after `on`, separated by spaces and/or commas.
fn parse_wires(
    toks: &[Token<'_>],
    line: usize,
    num_qubits: usize,
    after_col: usize,
) -> Result<Vec<usize>, ParseError> {
    let mut wires: Vec<usize> = Vec::new();
    for tok in toks {
        let mut offset = 0;
        for part in tok.text.split(',') {
            let col = tok.col + offset;
            offset += part.chars().count() + 1;
            if part.is_empty() {
                continue;
            }
            let w: usize = part
                .parse()
                .or_else(|_| syntax(line, col, format!("invalid wire {part:?}")))?;
            if w >= num_qubits {
                return err(line, col, ParseErrorKind::WireOutOfRange { wire: w, num_qubits });
            }
            if wires.contains(&w) {
                return err(line, col, ParseErrorKind::DuplicateWire(w));
            }
            wires.push(w);
        }
    }
    if wires.is_empty() {
        return syntax(line, after_col, "expected at least one wire");
    }
    Ok(wires)
}

struct OpenStep {
    line: usize,
    gates: Vec<GateSpec>,
    measure: Option<MeasureSpec>,
}

struct Parser {
    num_qubits: Option<usize>,
    per_qubit: Vec<Option<[C64; 2]>>,
    full: Option<Vec<C64>>,
    init_line: usize,
    steps: Vec<StepDoc>,
    open: Option<OpenStep>,
}

impl Parser {
    fn qubits(&self, line: usize, col: usize) -> Result<usize, ParseError> {
        match self.num_qubits {
            Some(n) => Ok(n),
            None => syntax(line, col, "`qubits N` must come first"),
        }
    }

    fn close_step(&mut self) -> Result<(), ParseError> {
        if let Some(step) = self.open.take() {
            let Some(measure) = step.measure else {
                return syntax(step.line, 1, "step has no measure line");
            };
            self.steps.push(StepDoc {
                gates: step.gates,
                measure,
            });
        }
        Ok(())
    }

    fn statement(&mut self, line: &str, toks: &[Token<'_>], lineno: usize) -> Result<(), ParseError> {
        let head = toks[0];
        match head.text {
            "qubits" => self.parse_qubits(toks, lineno),
            "init" => self.parse_init(line, toks, lineno),
            "step" => {
                self.qubits(lineno, head.col)?;
                self.close_step()?;
                self.open = Some(OpenStep {
                    line: lineno,
                    gates: Vec::new(),
                    measure: None,
                });
                if toks.len() > 1 {
                    self.statement(line, &toks[1..], lineno)?;
                }
                Ok(())
            }
            "gate" => self.parse_gate(toks, lineno),
            "measure" => self.parse_measure(toks, lineno),
            other => syntax(lineno, head.col, format!("unknown statement {other:?}")),
        }
    }

    fn parse_qubits(&mut self, toks: &[Token<'_>], line: usize) -> Result<(), ParseError> {
        if self.num_qubits.is_some() {
            return syntax(line, toks[0].col, "`qubits` given twice");
        }
        let [_, n] = toks else {
            return syntax(line, toks[0].col, "expected `qubits N`");
        };
        let count = parse_usize(*n, line, "qubit count")?;
        if !(1..=10).contains(&count) {
            return syntax(line, n.col, "qubit count must be between 1 and 10");
        }
        self.num_qubits = Some(count);
        self.per_qubit = vec![None; count];
        Ok(())
    }

    fn parse_init(&mut self, line: &str, toks: &[Token<'_>], lineno: usize) -> Result<(), ParseError> {
        let n = self.qubits(lineno, toks[0].col)?;
        if !self.steps.is_empty() || self.open.is_some() {
            return syntax(lineno, toks[0].col, "`init` must precede the first step");
        }
        let Some(eq_byte) = line.find('=') else {
            return syntax(lineno, toks[0].col, "expected `=` in init");
        };
        let eq_col = line[..eq_byte].chars().count() + 1;
        let target_text = line[..eq_byte].trim_start().trim_start_matches("init");
        let target: String = target_text.split_whitespace().collect();
        let target_col = toks.get(1).map_or(eq_col, |t| t.col);
        let value = Compact::new(&line[eq_byte + 1..], eq_col + 1);
        let mut cur = ValueCursor {
            src: &value,
            pos: 0,
            line: lineno,
        };

        if target == "state" {
            if self.full.is_some() || self.per_qubit.iter().any(Option::is_some) {
                return syntax(lineno, toks[0].col, "initial state given twice");
            }
            cur.expect('[')?;
            let amps = cur.complex_list()?;
            cur.expect(']')?;
            cur.finish()?;
            if amps.len() != 1 << n {
                return syntax(
                    lineno,
                    eq_col + 1,
                    format!("expected {} amplitudes, found {}", 1 << n, amps.len()),
                );
            }
            let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
            if (norm - 1.0).abs() > NORM_TOL {
                return err(lineno, eq_col + 1, ParseErrorKind::NotNormalized(norm));
            }
            self.full = Some(amps);
            self.init_line = lineno;
            return Ok(());
        }

        let Some(index) = target.strip_prefix('q') else {
            return syntax(lineno, target_col, format!("expected `q<i>` or `state`, found {target:?}"));
        };
        let q: usize = index
            .parse()
            .or_else(|_| syntax(lineno, target_col, format!("invalid qubit {target:?}")))?;
        if q >= n {
            return err(lineno, target_col, ParseErrorKind::WireOutOfRange { wire: q, num_qubits: n });
        }
        if self.full.is_some() || self.per_qubit[q].is_some() {
            return syntax(lineno, target_col, format!("qubit {q} initialized twice"));
        }
        let amps = cur.complex_list()?;
        cur.finish()?;
        let [a, b] = amps[..] else {
            return syntax(lineno, eq_col + 1, format!("expected 2 amplitudes, found {}", amps.len()));
        };
        let norm = a.norm_sqr() + b.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return err(lineno, eq_col + 1, ParseErrorKind::NotNormalized(norm));
        }
        self.per_qubit[q] = Some([a, b]);
        self.init_line = lineno;
        Ok(())
    }

    fn open_step(&mut self, line: usize, col: usize, what: &str) -> Result<&mut OpenStep, ParseError> {
        match self.open.as_mut() {
            Some(s) => Ok(s),
            None => syntax(line, col, format!("`{what}` outside of a step")),
        }
    }

    fn parse_gate(&mut self, toks: &[Token<'_>], line: usize) -> Result<(), ParseError> {
        let n = self.qubits(line, toks[0].col)?;
        let head_col = toks[0].col;
        if self.open_step(line, head_col, "gate")?.measure.is_some() {
            return syntax(line, head_col, "gate after the step's measurement");
        }
        let Some(name) = toks.get(1) else {
            return syntax(line, head_col, "expected a gate name");
        };
        let upper = name.text.to_ascii_uppercase();
        let mut rest = &toks[2..];
        let mut explicit = |count: usize| -> Result<Vec<C64>, ParseError> {
            if rest.len() < 2 * count {
                return syntax(
                    line,
                    name.col,
                    format!("{upper} expects {} reals", 2 * count),
                );
            }
            let reals = rest[..2 * count]
                .iter()
                .map(|t| parse_real(t.text, line, t.col))
                .collect::<Result<Vec<f64>, _>>()?;
            rest = &rest[2 * count..];
            Ok(reals.chunks(2).map(|p| c(p[0], p[1])).collect())
        };
        let kind = match upper.as_str() {
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "H" => GateKind::H,
            "CNOT" | "CX" => GateKind::Cnot,
            "U2" => GateKind::U2(explicit(4)?),
            "U4" => GateKind::U4(explicit(16)?),
            _ => return err(line, name.col, ParseErrorKind::UnknownGate(name.text.to_string())),
        };
        if matches!(kind, GateKind::U2(_) | GateKind::U4(_)) && !kind.matrix().is_unitary(STRUCTURE_TOL) {
            return err(line, name.col, ParseErrorKind::NonUnitary);
        }
        let after = rest.first().map_or(name.col, |t| t.col);
        let wires = parse_wires(rest, line, n, after)?;
        if wires.len() != kind.arity() {
            return syntax(
                line,
                after,
                format!("{upper} acts on {} wire(s), {} given", kind.arity(), wires.len()),
            );
        }
        self.open_step(line, head_col, "gate")?.gates.push(GateSpec { kind, wires });
        Ok(())
    }

    fn parse_measure(&mut self, toks: &[Token<'_>], line: usize) -> Result<(), ParseError> {
        let n = self.qubits(line, toks[0].col)?;
        let head_col = toks[0].col;
        if self.open_step(line, head_col, "measure")?.measure.is_some() {
            return syntax(line, head_col, "a step has exactly one measure line");
        }
        let Some(kind) = toks.get(1) else {
            return syntax(line, head_col, "expected `computational` or `family`");
        };
        let on_clause = |rest: &[Token<'_>]| -> Result<Option<Vec<usize>>, ParseError> {
            match rest.split_first() {
                None => Ok(None),
                Some((on, wires)) if on.text == "on" => {
                    parse_wires(wires, line, n, on.col + 2).map(Some)
                }
                Some((t, _)) => syntax(line, t.col, format!("expected `on`, found {:?}", t.text)),
            }
        };
        let spec = match kind.text {
            "computational" => match on_clause(&toks[2..])? {
                Some(wires) => MeasureSpec::Computational { wires },
                None => return syntax(line, kind.col, "expected `on <wires>`"),
            },
            "family" => {
                let Some(name_tok) = toks.get(2) else {
                    return syntax(line, kind.col, "expected a family name");
                };
                let name: FamilyName = name_tok.text.parse().or_else(|_| {
                    err(line, name_tok.col, ParseErrorKind::UnknownFamily(name_tok.text.to_string()))
                })?;
                let wires = on_clause(&toks[3..])?;
                let count = wires.as_ref().map_or(n, Vec::len);
                if name == FamilyName::Bell && count != 2 {
                    return syntax(line, name_tok.col, "BELL needs exactly two wires");
                }
                MeasureSpec::Family { name, wires }
            }
            other => return syntax(line, kind.col, format!("unknown measurement {other:?}")),
        };
        self.open_step(line, head_col, "measure")?.measure = Some(spec);
        Ok(())
    }

    fn finish(mut self, last_line: usize) -> Result<ScenarioDoc, ParseError> {
        self.close_step()?;
        let Some(n) = self.num_qubits else {
            return syntax(last_line.max(1), 1, "missing `qubits N`");
        };
        let init = match self.full {
            Some(amps) => InitSpec::Full(amps),
            None => InitSpec::PerQubit(
                self.per_qubit
                    .into_iter()
                    .map(|p| p.unwrap_or([c(1.0, 0.0), c(0.0, 0.0)]))
                    .collect(),
            ),
        };
        let doc = ScenarioDoc {
            num_qubits: n,
            init,
            steps: self.steps,
        };
        if let Err(e) = doc.to_scenario() {
            return err(self.init_line.max(1), 1, ParseErrorKind::Invalid(e.to_string()));
        }
        Ok(doc)
    }
}

/// Parses a scenario file and validates it against the quantum model.
pub fn parse_scenario(text: &str) -> Result<ScenarioDoc, ParseError> {
    let mut p = Parser {
        num_qubits: None,
        per_qubit: Vec::new(),
        full: None,
        init_line: 0,
        steps: Vec::new(),
        open: None,
    };
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last = lineno;
        let line = raw.split('#').next().unwrap_or("");
        let toks = tokenize(line);
        if toks.is_empty() {
            continue;
        }
        p.statement(line, &toks, lineno)?;
    }
    p.finish(last)
}
