//! Argument and return-value literals for function-mode tasks.
//!
//! Literals travel through the manifest as JSON and come back from test
//! generation as loosely formatted text, so the parser accepts JSON plus the
//! Python spellings `True`, `False`, `None` and single-quoted strings.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Null,
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
    List(Vec<Literal>),
    Map(BTreeMap<String, Literal>),
}

/// Scalar kinds accepted by the test drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    Int,
    Real,
    Str,
    Bool,
}

impl Literal {
    pub fn scalar_kind(&self) -> Option<ScalarKind> {
        match self {
            Literal::Int(_) => Some(ScalarKind::Int),
            Literal::Real(_) => Some(ScalarKind::Real),
            Literal::Str(_) => Some(ScalarKind::Str),
            Literal::Bool(_) => Some(ScalarKind::Bool),
            _ => None,
        }
    }

    /// True for integers, reals, strings, booleans and flat lists of those.
    pub fn is_driver_supported(&self) -> bool {
        match self {
            Literal::List(items) => items.iter().all(|item| item.scalar_kind().is_some()),
            other => other.scalar_kind().is_some(),
        }
    }

    /// Canonical text form printed by every driver and stored in oracles.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match self {
            Literal::Null => out.push_str("null"),
            Literal::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Literal::Int(i) => out.push_str(&i.to_string()),
            Literal::Real(r) => out.push_str(&render_real(*r)),
            Literal::Str(s) => out.push_str(&quote(s)),
            Literal::List(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    item.render_into(out);
                }
                out.push(']');
            }
            Literal::Map(map) => {
                out.push('{');
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&quote(k));
                    out.push_str(": ");
                    v.render_into(out);
                }
                out.push('}');
            }
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn render_real(r: f64) -> String {
    if r.is_nan() {
        "nan".into()
    } else if r.is_infinite() {
        if r > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        alloc::format!("{r:?}")
    }
}

/// JSON string quoting, the same escape set every driver emits.
pub fn quote(s: &str) -> String {
    serde_json::to_string(s).unwrap_or_else(|_| String::from("\"\""))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralError {
    pub offset: usize,
    pub reason: &'static str,
}

impl fmt::Display for LiteralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bad literal at byte {}: {}", self.offset, self.reason)
    }
}

impl core::error::Error for LiteralError {}

/// Parses a single literal, rejecting trailing input.
pub fn parse_literal(text: &str) -> Result<Literal, LiteralError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, text };
    p.skip_ws();
    let lit = p.value(0)?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing characters"));
    }
    Ok(lit)
}

/// Parses a comma-separated argument list such as `2, 3` or `[1, 5, 3]`.
/// The list brackets are not implied: `[1, 5, 3]` is one list argument.
pub fn parse_argument_list(text: &str) -> Result<Vec<Literal>, LiteralError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, text };
    let mut args = Vec::new();
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.err("empty argument list"));
    }
    loop {
        args.push(p.value(0)?);
        p.skip_ws();
        match p.peek() {
            None => break,
            Some(b',') => {
                p.pos += 1;
                p.skip_ws();
                if p.peek().is_none() {
                    break;
                }
            }
            Some(_) => return Err(p.err("expected ',' between arguments")),
        }
    }
    Ok(args)
}

const MAX_DEPTH: usize = 64;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    text: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, reason: &'static str) -> LiteralError {
        LiteralError { offset: self.pos, reason }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
    }

    fn value(&mut self, depth: usize) -> Result<Literal, LiteralError> {
        if depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'[') | Some(b'(') => self.list(depth),
            Some(b'{') => self.map(depth),
            Some(b'"') | Some(b'\'') => self.string().map(Literal::Str),
            Some(c) if c == b'-' || c == b'+' || c == b'.' || c.is_ascii_digit() => self.number(),
            Some(_) => self.word(),
        }
    }

    fn list(&mut self, depth: usize) -> Result<Literal, LiteralError> {
        let close = if self.peek() == Some(b'[') { b']' } else { b')' };
        self.pos += 1;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(close) {
                self.pos += 1;
                return Ok(Literal::List(items));
            }
            items.push(self.value(depth + 1)?);
            self.skip_ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(c) if c == close => {}
                _ => return Err(self.err("unterminated list")),
            }
        }
    }

    fn map(&mut self, depth: usize) -> Result<Literal, LiteralError> {
        self.pos += 1;
        let mut map = BTreeMap::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(b'}') {
                self.pos += 1;
                return Ok(Literal::Map(map));
            }
            let key = match self.value(depth + 1)? {
                Literal::Str(s) => s,
                other => other.render(),
            };
            self.skip_ws();
            if self.peek() != Some(b':') {
                return Err(self.err("expected ':' in map"));
            }
            self.pos += 1;
            let value = self.value(depth + 1)?;
            map.insert(key, value);
            self.skip_ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b'}') => {}
                _ => return Err(self.err("unterminated map")),
            }
        }
    }

    fn string(&mut self) -> Result<String, LiteralError> {
        let quote = self.src[self.pos];
        self.pos += 1;
        let mut out = String::new();
        loop {
            let rest = &self.text[self.pos..];
            let mut chars = rest.chars();
            let c = chars.next().ok_or_else(|| self.err("unterminated string"))?;
            self.pos += c.len_utf8();
            if c as u32 == quote as u32 {
                return Ok(out);
            }
            if c != '\\' {
                out.push(c);
                continue;
            }
            let esc = self.peek().ok_or_else(|| self.err("dangling escape"))?;
            self.pos += 1;
            match esc {
                b'n' => out.push('\n'),
                b't' => out.push('\t'),
                b'r' => out.push('\r'),
                b'0' => out.push('\0'),
                b'b' => out.push('\u{8}'),
                b'f' => out.push('\u{c}'),
                b'u' => {
                    let hex = self
                        .text
                        .get(self.pos..self.pos + 4)
                        .ok_or_else(|| self.err("short \\u escape"))?;
                    let code = u32::from_str_radix(hex, 16).map_err(|_| self.err("bad \\u escape"))?;
                    self.pos += 4;
                    out.push(char::from_u32(code).unwrap_or('\u{fffd}'));
                }
                other => out.push(other as char),
            }
        }
    }

    fn number(&mut self) -> Result<Literal, LiteralError> {
        let start = self.pos;
        if matches!(self.peek(), Some(b'-' | b'+')) {
            self.pos += 1;
        }
        let mut is_real = false;
        while let Some(c) = self.peek() {
            match c {
                b'0'..=b'9' => self.pos += 1,
                b'.' => {
                    is_real = true;
                    self.pos += 1;
                }
                b'e' | b'E' => {
                    is_real = true;
                    self.pos += 1;
                    if matches!(self.peek(), Some(b'-' | b'+')) {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
        let token = &self.text[start..self.pos];
        let token = token.strip_prefix('+').unwrap_or(token);
        if !is_real {
            if let Ok(i) = token.parse::<i64>() {
                return Ok(Literal::Int(i));
            }
        }
        token
            .parse::<f64>()
            .map(Literal::Real)
            .map_err(|_| LiteralError { offset: start, reason: "bad number" })
    }

    fn word(&mut self) -> Result<Literal, LiteralError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        match &self.text[start..self.pos] {
            "true" | "True" => Ok(Literal::Bool(true)),
            "false" | "False" => Ok(Literal::Bool(false)),
            "null" | "None" | "nil" => Ok(Literal::Null),
            "" => Err(self.err("unexpected character")),
            _ => Err(LiteralError { offset: start, reason: "unknown identifier" }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn parses_python_spellings() {
        assert_eq!(
            parse_argument_list("True, None, 'a b'").unwrap(),
            vec![Literal::Bool(true), Literal::Null, Literal::Str("a b".into())]
        );
    }

    #[test]
    fn bracketed_list_is_one_argument() {
        let args = parse_argument_list("[1, 5, 3]").unwrap();
        assert_eq!(
            args,
            vec![Literal::List(vec![Literal::Int(1), Literal::Int(5), Literal::Int(3)])]
        );
        assert_eq!(args[0].render(), "[1, 5, 3]");
    }

    #[test]
    fn numbers_keep_their_kind() {
        assert_eq!(parse_literal("-7").unwrap(), Literal::Int(-7));
        assert_eq!(parse_literal("2.5").unwrap(), Literal::Real(2.5));
        assert_eq!(parse_literal("1e3").unwrap(), Literal::Real(1000.0));
        assert_eq!(Literal::Real(5.0).render(), "5.0");
    }

    #[test]
    fn support_excludes_maps_and_nesting() {
        assert!(parse_literal("[1, 2.5, \"x\", true]").unwrap().is_driver_supported());
        assert!(!parse_literal("[[1], [2]]").unwrap().is_driver_supported());
        assert!(!parse_literal("{\"a\": {\"b\": 1}}").unwrap().is_driver_supported());
        assert!(!Literal::Null.is_driver_supported());
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_argument_list("").is_err());
        assert!(parse_argument_list("no inputs here").is_err());
        assert!(parse_literal("[1, 2").is_err());
        assert!(parse_literal("1 2").is_err());
    }

    #[test]
    fn json_round_trip_through_serde() {
        let lit: Literal = serde_json::from_str("[1, 2.5, \"s\", false]").unwrap();
        assert_eq!(lit.render(), "[1, 2.5, \"s\", false]");
    }
}
