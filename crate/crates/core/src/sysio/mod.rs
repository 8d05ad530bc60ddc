//! Deterministic text formats for systems (`.sys`), maps (`.eqv`) and
//! block-matrix reports (`.bmx`).
//!
//! A file is a list of sections `kind [name] { key = value … }`. Values are
//! `true`/`false`, quoted strings, `zero`, matrices `[a, b; c, d]` or
//! expressions over `t`, `x<i>`, `u<j>'…` and `D(u<j>, k)`.

mod lexer;
mod parser;

use std::fmt::Write as _;

use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

pub use lexer::Span;
pub use parser::{parse_document, parse_expr, Document, Entry, Key, Section, Value};

use crate::blocks::{BlockLayout, BlockMatrix};
use crate::equivalence::{EquivError, EquivMap};
use crate::jetcontrol::{ControlSystem, JetError};
use crate::{RatFn, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SysioError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: {msg}")]
    Semantic { line: usize, col: usize, msg: String },
    #[error("{what}: expected {expected} coordinates, found {got}")]
    ArityMismatch { what: String, expected: usize, got: usize },
    #[error("no '{0}' section")]
    MissingSection(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
}

impl SysioError {
    pub(crate) fn syntax(span: Span, msg: impl Into<String>) -> Self {
        SysioError::Syntax { line: span.line, col: span.col, msg: msg.into() }
    }

    pub(crate) fn semantic(span: Span, msg: impl Into<String>) -> Self {
        SysioError::Semantic { line: span.line, col: span.col, msg: msg.into() }
    }

    /// `(line, col)` for positioned errors.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            SysioError::Syntax { line, col, .. } | SysioError::Semantic { line, col, .. } => Some((*line, *col)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Unknown keys are errors rather than warnings.
    pub strict: bool,
}

/// A parsed value together with non-fatal diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

fn section<'a>(doc: &'a Document, kind: &str) -> Result<&'a Section, SysioError> {
    doc.section(kind).ok_or_else(|| SysioError::MissingSection(kind.into()))
}

fn count(sec: &Section, key: &str) -> Result<usize, SysioError> {
    let e = sec.get(&Key::plain(key)).ok_or_else(|| SysioError::semantic(sec.span, format!("missing key '{key}'")))?;
    match &e.value {
        Value::Expr(v) => v
            .as_constant()
            .filter(|c| c.is_integer() && !c.is_negative())
            .and_then(|c| c.to_integer().to_usize())
            .ok_or_else(|| SysioError::semantic(e.span, format!("'{key}' must be a nonnegative integer"))),
        _ => Err(SysioError::semantic(e.span, format!("'{key}' must be a nonnegative integer"))),
    }
}

fn expr_of(e: &Entry) -> Result<&RatFn, SysioError> {
    match &e.value {
        Value::Expr(v) => Ok(v),
        _ => Err(SysioError::semantic(e.span, format!("'{}' must be an expression", e.key))),
    }
}

fn indexed(name: &str, prefix: &str) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    rest.parse::<usize>().ok().filter(|i| *i >= 1 && !rest.starts_with('0'))
}

fn unknown(e: &Entry, opts: ParseOptions, warnings: &mut Vec<String>) -> Result<(), SysioError> {
    let msg = format!("unknown key '{}'", e.key);
    if opts.strict {
        return Err(SysioError::semantic(e.span, msg));
    }
    warnings.push(format!("{}:{}: {msg}", e.span.line, e.span.col));
    Ok(())
}

/// Reject variables outside `n` states and `s` controls, and control
/// derivatives above `max_order`.
fn check_vars(e: &Entry, n: usize, s: usize, max_order: Option<usize>) -> Result<(), SysioError> {
    for (v, span) in &e.vars {
        match *v {
            VarId::State(i) if i as usize > n => {
                return Err(SysioError::semantic(*span, format!("{v} exceeds the {n} states")));
            }
            VarId::Control { index, order } => {
                if index as usize > s {
                    return Err(SysioError::semantic(*span, format!("{v} exceeds the {s} controls")));
                }
                if max_order.is_some_and(|m| order as usize > m) {
                    return Err(SysioError::semantic(*span, format!("derivative {v} is not allowed here")));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn parse_system(text: &str) -> Result<ControlSystem, SysioError> {
    parse_system_with(text, ParseOptions::default()).map(|p| p.value)
}

pub fn parse_system_with(text: &str, opts: ParseOptions) -> Result<Parsed<ControlSystem>, SysioError> {
    let doc = parse_document(text)?;
    system_from_section(section(&doc, "system")?, opts)
}

pub fn system_from_section(sec: &Section, opts: ParseOptions) -> Result<Parsed<ControlSystem>, SysioError> {
    let n = count(sec, "states")?;
    let s = count(sec, "controls")?;
    let mut f: Vec<Option<RatFn>> = vec![None; n];
    let mut warnings = Vec::new();
    for e in &sec.entries {
        let name = e.key.name.as_str();
        if e.key.indices.is_empty() && matches!(name, "states" | "controls" | "name") {
            continue;
        }
        match indexed(name, "f").filter(|_| e.key.indices.is_empty()) {
            Some(i) if i <= n => {
                check_vars(e, n, s, Some(0))?;
                f[i - 1] = Some(expr_of(e)?.clone());
            }
            Some(_) => return Err(SysioError::semantic(e.span, format!("'{}' exceeds the {n} states", e.key))),
            None => unknown(e, opts, &mut warnings)?,
        }
    }
    let got = f.iter().filter(|x| x.is_some()).count();
    if got != n {
        return Err(SysioError::ArityMismatch { what: "right-hand side".into(), expected: n, got });
    }
    let sys = ControlSystem::new(n, s, f.into_iter().map(Option::unwrap).collect())?;
    Ok(Parsed { value: sys, warnings })
}

pub fn parse_map(text: &str, src: &ControlSystem, tgt: &ControlSystem) -> Result<EquivMap, SysioError> {
    parse_map_with(text, src, tgt, ParseOptions::default()).map(|p| p.value)
}

pub fn parse_map_with(
    text: &str,
    src: &ControlSystem,
    tgt: &ControlSystem,
    opts: ParseOptions,
) -> Result<Parsed<EquivMap>, SysioError> {
    let doc = parse_document(text)?;
    let sec = section(&doc, "map")?;
    let (m, s) = (tgt.n(), tgt.s());
    let mut y: Vec<Option<RatFn>> = vec![None; m];
    let mut v: Vec<Option<RatFn>> = vec![None; s];
    let mut name = sec.name.clone().unwrap_or_default();
    let mut warnings = Vec::new();
    for e in &sec.entries {
        let key = e.key.name.as_str();
        if key == "name" && e.key.indices.is_empty() {
            if let Value::Str(s) = &e.value {
                name = s.clone();
                continue;
            }
        }
        let slot = if !e.key.indices.is_empty() {
            None
        } else if let Some(i) = indexed(key, "y") {
            Some((&mut y, i, "state"))
        } else {
            indexed(key, "v").map(|i| (&mut v, i, "control"))
        };
        match slot {
            Some((list, i, what)) => {
                if i > list.len() {
                    return Err(SysioError::ArityMismatch { what: what.into(), expected: list.len(), got: i });
                }
                check_vars(e, src.n(), src.s(), None)?;
                list[i - 1] = Some(expr_of(e)?.clone());
            }
            None => unknown(e, opts, &mut warnings)?,
        }
    }
    let collect = |list: Vec<Option<RatFn>>, what: &str| -> Result<Vec<RatFn>, SysioError> {
        let expected = list.len();
        let got = list.iter().filter(|x| x.is_some()).count();
        if got != expected {
            return Err(SysioError::ArityMismatch { what: what.into(), expected, got });
        }
        Ok(list.into_iter().map(Option::unwrap).collect())
    };
    let y = collect(y, "state")?;
    let v = collect(v, "control")?;
    let map = EquivMap::new(name, src.clone(), tgt.clone(), y, v)?;
    Ok(Parsed { value: map, warnings })
}

pub fn parse_matrix(text: &str) -> Result<BlockMatrix, SysioError> {
    let doc = parse_document(text)?;
    matrix_from_section(section(&doc, "matrix")?)
}

pub fn matrix_from_section(sec: &Section) -> Result<BlockMatrix, SysioError> {
    let s = count(sec, "controls")?;
    let rows = BlockLayout::new(count(sec, "row_states")?, s, count(sec, "row_levels")?);
    let cols = BlockLayout::new(count(sec, "col_states")?, s, count(sec, "col_levels")?);
    let mut a = BlockMatrix::zeros(rows, cols);
    for e in &sec.entries {
        match (e.key.name.as_str(), e.key.indices.as_slice()) {
            ("band", []) => {
                let b = expr_of(e)?
                    .as_constant()
                    .filter(|c| c.is_integer())
                    .and_then(|c| c.to_integer().to_i32())
                    .ok_or_else(|| SysioError::semantic(e.span, "band must be an integer"))?;
                a.band = Some(b);
            }
            ("b", [bi, bj]) => {
                let (bi, bj) = (*bi as i32, *bj as i32);
                if !rows.has_block(bi) || !cols.has_block(bj) {
                    return Err(SysioError::semantic(e.span, format!("block ({bi},{bj}) outside the layout")));
                }
                match &e.value {
                    Value::Zero => {}
                    Value::Matrix(m) => {
                        let (rr, cr) = (rows.range(bi), cols.range(bj));
                        if m.len() != rr.len() || m.iter().any(|r| r.len() != cr.len()) {
                            return Err(SysioError::semantic(
                                e.span,
                                format!("block ({bi},{bj}) must be {}x{}", rr.len(), cr.len()),
                            ));
                        }
                        for (i, row) in rr.zip(m) {
                            for (j, x) in cr.clone().zip(row) {
                                a.set_entry(i, j, x.clone());
                            }
                        }
                    }
                    _ => return Err(SysioError::semantic(e.span, "block must be a matrix or 'zero'")),
                }
            }
            ("controls" | "row_states" | "col_states" | "row_levels" | "col_levels" | "name", []) => {}
            _ => return Err(SysioError::semantic(e.span, format!("unknown key '{}'", e.key))),
        }
    }
    Ok(a)
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn fmt_matrix(m: &[Vec<RatFn>], indent: &str) -> String {
    let mut out = String::from("[\n");
    for row in m {
        let cells: Vec<String> = row.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(out, "{indent}  {};", cells.join(", "));
    }
    out.push_str(indent);
    out.push(']');
    out
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Bool(b) => b.to_string(),
        Value::Str(s) => quote(s),
        Value::Expr(e) => e.to_string(),
        Value::Matrix(m) => fmt_matrix(m, "  "),
        Value::Zero => "zero".into(),
    }
}

pub fn serialize_section(sec: &Section) -> String {
    let mut out = sec.kind.clone();
    if let Some(n) = &sec.name {
        let _ = write!(out, " {n}");
    }
    out.push_str(" {\n");
    for e in &sec.entries {
        let _ = writeln!(out, "  {} = {}", e.key, fmt_value(&e.value));
    }
    out.push_str("}\n");
    out
}

pub fn serialize_document(doc: &Document) -> String {
    doc.sections.iter().map(serialize_section).collect::<Vec<_>>().join("\n")
}

fn int(n: usize) -> Value {
    Value::Expr(RatFn::from_int(n as i64))
}

pub fn system_section(sys: &ControlSystem) -> Section {
    let mut sec = Section::new("system", None);
    sec.push(Key::plain("states"), int(sys.n()));
    sec.push(Key::plain("controls"), int(sys.s()));
    for (i, f) in sys.f().iter().enumerate() {
        sec.push(Key::plain(format!("f{}", i + 1)), Value::Expr(f.clone()));
    }
    sec
}

pub fn map_section(m: &EquivMap) -> Section {
    let mut sec = Section::new("map", None);
    if !m.name.is_empty() {
        sec.push(Key::plain("name"), Value::Str(m.name.clone()));
    }
    for (i, y) in m.y.iter().enumerate() {
        sec.push(Key::plain(format!("y{}", i + 1)), Value::Expr(y.clone()));
    }
    for (j, v) in m.v.iter().enumerate() {
        sec.push(Key::plain(format!("v{}", j + 1)), Value::Expr(v.clone()));
    }
    sec
}

/// Block by block; all-zero blocks are written as `zero`.
pub fn matrix_section(a: &BlockMatrix) -> Section {
    let mut sec = Section::new("matrix", None);
    sec.push(Key::plain("row_states"), int(a.rows.n));
    sec.push(Key::plain("col_states"), int(a.cols.n));
    sec.push(Key::plain("controls"), int(a.rows.s));
    sec.push(Key::plain("row_levels"), int(a.rows.levels));
    sec.push(Key::plain("col_levels"), int(a.cols.levels));
    if let Some(b) = a.band {
        sec.push(Key::plain("band"), Value::Expr(RatFn::from_int(b as i64)));
    }
    for bi in -1..=a.rows.levels as i32 {
        for bj in -1..=a.cols.levels as i32 {
            let key = Key { name: "b".into(), indices: vec![bi as i64, bj as i64] };
            let value = if a.is_zero_block(bi, bj) { Value::Zero } else { Value::Matrix(a.block(bi, bj)) };
            sec.push(key, value);
        }
    }
    sec
}

pub fn serialize_system(sys: &ControlSystem) -> String {
    serialize_section(&system_section(sys))
}

pub fn serialize_map(m: &EquivMap) -> String {
    serialize_section(&map_section(m))
}

pub fn serialize_matrix(a: &BlockMatrix) -> String {
    serialize_section(&matrix_section(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "system { states=3 controls=2 f1=u1 f2=u2 f3=x2*u1 }";

    #[test]
    fn derivative_in_rhs_is_semantic() {
        let err = parse_system("system { states=1 controls=1 f1=u1' }").unwrap_err();
        assert!(matches!(err, SysioError::Semantic { line: 1, col: 33, .. }), "{err}");
    }

    #[test]
    fn system_round_trip() {
        let sys = parse_system(SRC).unwrap();
        assert_eq!(parse_system(&serialize_system(&sys)).unwrap(), sys);
    }

    #[test]
    fn strict_mode_rejects_unknown_keys() {
        let text = "system { states=1 controls=1 f1=u1 g1=x1 }";
        let lax = parse_system_with(text, ParseOptions { strict: false }).unwrap();
        assert_eq!(lax.warnings.len(), 1);
        assert!(parse_system_with(text, ParseOptions { strict: true }).is_err());
    }
}
