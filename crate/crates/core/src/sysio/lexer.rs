use num_bigint::BigInt;

use super::SysioError;

/// 1-based source position of a token.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub line: usize,
    pub col: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    Str(String),
    Sym(char),
    Prime,
    Eof,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const SYMBOLS: &str = "+-*/^()[]{}=,;";

pub fn tokenize(text: &str) -> Result<Vec<Token>, SysioError> {
    let text = text.replace("\r\n", "\n").replace('\r', "\n");
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let start = i;
            let span = |end: usize| Span { line: ln + 1, col: start + 1, len: end - start };
            if c == '#' {
                break;
            }
            if c.is_ascii_whitespace() {
                i += 1;
                continue;
            }
            if !c.is_ascii() {
                return Err(SysioError::syntax(span(i + 1), format!("non-ASCII character {c:?}")));
            }
            if c.is_ascii_alphabetic() || c == '_' {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), span: span(i) });
            } else if c.is_ascii_digit() {
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let n = digits.parse::<BigInt>().expect("digits");
                out.push(Token { tok: Tok::Int(n), span: span(i) });
            } else if c == '"' {
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(SysioError::syntax(span(i), "unterminated string")),
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some(e @ ('"' | '\\')) => s.push(*e),
                                Some('n') => s.push('\n'),
                                _ => return Err(SysioError::syntax(span(i + 1), "bad escape")),
                            }
                            i += 2;
                        }
                        Some(ch) => {
                            s.push(*ch);
                            i += 1;
                        }
                    }
                }
                i += 1;
                out.push(Token { tok: Tok::Str(s), span: span(i) });
            } else if c == '\'' {
                i += 1;
                out.push(Token { tok: Tok::Prime, span: span(i) });
            } else if SYMBOLS.contains(c) {
                i += 1;
                out.push(Token { tok: Tok::Sym(c), span: span(i) });
            } else {
                return Err(SysioError::syntax(span(i + 1), format!("unexpected character {c:?}")));
            }
        }
    }
    let last = text.lines().count().max(1);
    out.push(Token { tok: Tok::Eof, span: Span { line: last + 1, col: 1, len: 0 } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_and_positions() {
        let toks = tokenize("f1 = u2''\n  + 3").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|t| &t.tok).collect();
        assert_eq!(kinds[3], &Tok::Prime);
        assert_eq!(toks[5].span, Span { line: 2, col: 3, len: 1 });
        assert_eq!(toks[6].tok, Tok::Int(3.into()));
    }
}
