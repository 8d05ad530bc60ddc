use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::lexer::{tokenize, Span, Tok, Token};
use super::SysioError;
use crate::{RatFn, Rational, VarId};

/// `name[i][j]…`
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key {
    pub name: String,
    pub indices: Vec<i64>,
}

impl Key {
    pub fn plain(name: impl Into<String>) -> Self {
        Key { name: name.into(), indices: Vec::new() }
    }
}

impl std::fmt::Display for Key {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name)?;
        for i in &self.indices {
            write!(f, "[{i}]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    Str(String),
    Expr(RatFn),
    Matrix(Vec<Vec<RatFn>>),
    /// An elided zero block.
    Zero,
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub key: Key,
    pub value: Value,
    pub span: Span,
    /// Variables referenced by the value and where.
    pub vars: Vec<(VarId, Span)>,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.value == other.value
    }
}

#[derive(Clone, Debug)]
pub struct Section {
    pub kind: String,
    pub name: Option<String>,
    pub span: Span,
    pub entries: Vec<Entry>,
}

impl PartialEq for Section {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.name == other.name && self.entries == other.entries
    }
}

impl Section {
    pub fn new(kind: impl Into<String>, name: Option<String>) -> Self {
        Section { kind: kind.into(), name, span: Span::default(), entries: Vec::new() }
    }

    pub fn push(&mut self, key: Key, value: Value) {
        self.entries.push(Entry { key, value, span: Span::default(), vars: Vec::new() });
    }

    pub fn get(&self, key: &Key) -> Option<&Entry> {
        self.entries.iter().find(|e| &e.key == key)
    }
}

/// A parsed file: keyed sections.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn section(&self, kind: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.kind == kind)
    }
}

pub fn parse_document(text: &str) -> Result<Document, SysioError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, vars: Vec::new() };
    let mut doc = Document::default();
    while p.peek() != &Tok::Eof {
        doc.sections.push(p.section()?);
    }
    Ok(doc)
}

/// Parse one expression spanning the whole text.
pub fn parse_expr(text: &str) -> Result<RatFn, SysioError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, vars: Vec::new() };
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return Err(SysioError::syntax(p.span(), "trailing input"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    vars: Vec<(VarId, Span)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek() == &Tok::Sym(c)
    }

    fn expect_sym(&mut self, c: char) -> Result<Span, SysioError> {
        if self.is_sym(c) {
            Ok(self.bump().span)
        } else {
            Err(SysioError::syntax(self.span(), format!("expected '{c}', found {}", describe(self.peek()))))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), SysioError> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().span)),
            t => Err(SysioError::syntax(self.span(), format!("expected identifier, found {}", describe(&t)))),
        }
    }

    fn int(&mut self) -> Result<(BigInt, Span), SysioError> {
        let neg = self.is_sym('-');
        let start = self.span();
        if neg {
            self.bump();
        }
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok((if neg { -n } else { n }, start))
            }
            t => Err(SysioError::syntax(self.span(), format!("expected integer, found {}", describe(&t)))),
        }
    }

    fn small_int(&mut self) -> Result<(i64, Span), SysioError> {
        let (n, span) = self.int()?;
        let v = n.to_i64().ok_or_else(|| SysioError::syntax(span, "integer out of range"))?;
        Ok((v, span))
    }

    fn section(&mut self) -> Result<Section, SysioError> {
        let (kind, span) = self.ident()?;
        let name = if let Tok::Ident(_) = self.peek() { Some(self.ident()?.0) } else { None };
        self.expect_sym('{')?;
        let mut entries = Vec::new();
        while !self.is_sym('}') {
            if self.peek() == &Tok::Eof {
                return Err(SysioError::syntax(self.span(), "unterminated section"));
            }
            entries.push(self.entry()?);
        }
        self.bump();
        Ok(Section { kind, name, span, entries })
    }

    fn entry(&mut self) -> Result<Entry, SysioError> {
        let (name, span) = self.ident()?;
        let mut indices = Vec::new();
        while self.is_sym('[') {
            self.bump();
            indices.push(self.small_int()?.0);
            self.expect_sym(']')?;
        }
        self.expect_sym('=')?;
        self.vars.clear();
        let value = self.value()?;
        Ok(Entry { key: Key { name, indices }, value, span, vars: std::mem::take(&mut self.vars) })
    }

    fn value(&mut self) -> Result<Value, SysioError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Value::Bool(s == "true"))
            }
            Tok::Ident(s) if s == "zero" => {
                self.bump();
                Ok(Value::Zero)
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Value::Str(s))
            }
            Tok::Sym('[') => self.matrix(),
            _ => Ok(Value::Expr(self.expr()?)),
        }
    }

    fn matrix(&mut self) -> Result<Value, SysioError> {
        self.expect_sym('[')?;
        let mut rows = Vec::new();
        let mut row = Vec::new();
        loop {
            if self.is_sym(']') {
                self.bump();
                break;
            }
            if self.is_sym(';') {
                self.bump();
                rows.push(std::mem::take(&mut row));
                continue;
            }
            if !row.is_empty() {
                self.expect_sym(',')?;
            }
            row.push(self.expr()?);
        }
        if !row.is_empty() {
            rows.push(row);
        }
        if let Some(w) = rows.first().map(Vec::len) {
            if rows.iter().any(|r| r.len() != w) {
                return Err(SysioError::syntax(self.toks[self.pos - 1].span, "ragged matrix rows"));
            }
        }
        Ok(Value::Matrix(rows))
    }

    fn expr(&mut self) -> Result<RatFn, SysioError> {
        let mut acc = self.term()?;
        loop {
            if self.is_sym('+') {
                self.bump();
                acc = acc + self.term()?;
            } else if self.is_sym('-') {
                self.bump();
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RatFn, SysioError> {
        let mut acc = self.unary()?;
        loop {
            if self.is_sym('*') {
                self.bump();
                acc = acc * self.unary()?;
            } else if self.is_sym('/') {
                let span = self.bump().span;
                let d = self.unary()?;
                acc = acc.div(&d).map_err(|_| SysioError::semantic(span, "division by zero"))?;
            } else {
                return Ok(acc);
            }
        }
    }

    // Unary minus binds looser than '^' so that -u1^2 reads as -(u1^2).
    fn unary(&mut self) -> Result<RatFn, SysioError> {
        if self.is_sym('-') {
            self.bump();
            return Ok(-self.unary()?);
        }
        let base = self.atom()?;
        if self.is_sym('^') {
            self.bump();
            let (e, span) = self.small_int()?;
            let e = i32::try_from(e).map_err(|_| SysioError::syntax(span, "exponent out of range"))?;
            return base.pow(e).map_err(|_| SysioError::semantic(span, "negative power of zero"));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RatFn, SysioError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(RatFn::constant(Rational::from_integer(n)))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                let v = self.variable(&name, span)?;
                self.vars.push((v, span));
                Ok(RatFn::var(v))
            }
            t => Err(SysioError::syntax(span, format!("expected expression, found {}", describe(&t)))),
        }
    }

    fn variable(&mut self, name: &str, span: Span) -> Result<VarId, SysioError> {
        if name == "t" {
            return Ok(VarId::Time);
        }
        if name == "D" && self.is_sym('(') {
            self.bump();
            let (inner, ispan) = self.ident()?;
            let j = var_index(&inner, 'u', ispan)?;
            self.expect_sym(',')?;
            let (k, kspan) = self.small_int()?;
            if k < 0 {
                return Err(SysioError::semantic(kspan, "negative derivative order"));
            }
            self.expect_sym(')')?;
            return Ok(VarId::du(j, k as usize));
        }
        if name.starts_with('x') {
            return Ok(VarId::x(var_index(name, 'x', span)?));
        }
        if name.starts_with('u') {
            let j = var_index(name, 'u', span)?;
            let mut order = 0;
            while self.peek() == &Tok::Prime {
                self.bump();
                order += 1;
            }
            return Ok(VarId::du(j, order));
        }
        Err(SysioError::syntax(span, format!("unknown identifier '{name}'")))
    }
}

fn var_index(name: &str, prefix: char, span: Span) -> Result<usize, SysioError> {
    let rest = name.strip_prefix(prefix).unwrap_or("");
    match rest.parse::<usize>() {
        Ok(i) if i >= 1 && !rest.starts_with('0') => Ok(i),
        _ => Err(SysioError::syntax(span, format!("unknown identifier '{name}'"))),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(n) => format!("'{n}'"),
        Tok::Str(_) => "string".into(),
        Tok::Sym(c) => format!("'{c}'"),
        Tok::Prime => "'''".into(),
        Tok::Eof => "end of input".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unary_minus_binds_below_power() {
        let e = parse_expr("-u1^2 + x1^2").unwrap();
        assert_eq!(e.to_string(), "-u1^2 + x1^2");
    }

    #[test]
    fn derivative_spellings_agree() {
        assert_eq!(parse_expr("D(u2,1)").unwrap(), parse_expr("u2'").unwrap());
    }

    #[test]
    fn one_line_section() {
        let d = parse_document("system { states=3 controls=2 f1=u1 f2=u2 f3=x2*u1 }").unwrap();
        assert_eq!(d.sections[0].entries.len(), 5);
    }
}
