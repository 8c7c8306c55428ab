//! Output comparison.
//!
//! Tokens that read as numbers on both sides are compared after rounding to
//! three decimal places, half away from zero. Rounding works on the decimal
//! digits directly, so `3.1415` rounds to `3.142` even though the nearest
//! binary double lies just below it. Every other token must match exactly.

use alloc::vec::Vec;

use crate::model::EntryKind;

/// Stdio whitespace handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Whitespace {
    /// Normalize line endings, trim trailing whitespace per line and
    /// trailing blank lines, then compare whitespace-separated tokens.
    #[default]
    Normalize,
    /// Lines and single-space separated fields must line up exactly.
    Strict,
}

pub fn compare_output(actual: &str, expected: &str, mode: &EntryKind) -> bool {
    compare_output_with(actual, expected, mode, Whitespace::Normalize)
}

pub fn compare_output_with(
    actual: &str,
    expected: &str,
    mode: &EntryKind,
    whitespace: Whitespace,
) -> bool {
    match mode {
        EntryKind::Function { .. } => {
            let a = value_tokens(actual.trim());
            let e = value_tokens(expected.trim());
            a.len() == e.len() && a.iter().zip(&e).all(|(x, y)| tokens_match(x, y))
        }
        EntryKind::Stdio => match whitespace {
            Whitespace::Normalize => {
                let a = normalized_lines(actual);
                let e = normalized_lines(expected);
                a.len() == e.len()
                    && a.iter().zip(&e).all(|(la, le)| {
                        let ta: Vec<&str> = la.split_whitespace().collect();
                        let te: Vec<&str> = le.split_whitespace().collect();
                        ta.len() == te.len() && ta.iter().zip(&te).all(|(x, y)| tokens_match(x, y))
                    })
            }
            Whitespace::Strict => {
                let a: Vec<&str> = actual.split('\n').collect();
                let e: Vec<&str> = expected.split('\n').collect();
                a.len() == e.len()
                    && a.iter().zip(&e).all(|(la, le)| {
                        let ta: Vec<&str> = la.split(' ').collect();
                        let te: Vec<&str> = le.split(' ').collect();
                        ta.len() == te.len() && ta.iter().zip(&te).all(|(x, y)| tokens_match(x, y))
                    })
            }
        },
    }
}

pub fn tokens_match(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (round3(a), round3(b)) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}

fn normalized_lines(text: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .flat_map(|l| l.split('\r'))
        .map(str::trim_end)
        .collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines
}

/// Splits a rendered value into brackets, commas, quoted strings and words.
fn value_tokens(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if matches!(c, b'[' | b']' | b'(' | b')' | b'{' | b'}' | b',' | b':') {
            out.push(&text[i..i + 1]);
            i += 1;
        } else if c == b'"' || c == b'\'' {
            let start = i;
            i += 1;
            while i < bytes.len() && bytes[i] != c {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            i = (i + 1).min(bytes.len());
            out.push(&text[start..i]);
        } else {
            let start = i;
            while i < bytes.len()
                && !bytes[i].is_ascii_whitespace()
                && !matches!(bytes[i], b'[' | b']' | b'(' | b')' | b'{' | b'}' | b',' | b':' | b'"' | b'\'')
            {
                i += 1;
            }
            out.push(&text[start..i]);
        }
    }
    out
}

/// A number rounded to three decimals: sign, integer digits without leading
/// zeros, and the three fractional digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rounded {
    negative: bool,
    integer: Vec<u8>,
    fraction: [u8; 3],
}

const MAX_EXPONENT: i64 = 4096;

/// Parses `[+-]?(digits[.digits]|.digits)([eE][+-]?digits)?` and rounds it.
pub fn round3(token: &str) -> Option<Rounded> {
    let bytes = token.as_bytes();
    let mut i = 0;
    let mut negative = false;
    if let Some(&s) = bytes.first() {
        if s == b'-' || s == b'+' {
            negative = s == b'-';
            i = 1;
        }
    }
    let mut digits: Vec<u8> = Vec::new();
    let mut int_len = 0usize;
    let mut seen_point = false;
    let mut mantissa_digits = 0;
    while i < bytes.len() {
        match bytes[i] {
            d @ b'0'..=b'9' => {
                digits.push(d - b'0');
                mantissa_digits += 1;
                if !seen_point {
                    int_len += 1;
                }
            }
            b'.' if !seen_point => seen_point = true,
            _ => break,
        }
        i += 1;
    }
    if mantissa_digits == 0 {
        return None;
    }
    let mut exponent: i64 = 0;
    if i < bytes.len() {
        if bytes[i] != b'e' && bytes[i] != b'E' {
            return None;
        }
        i += 1;
        let mut exp_neg = false;
        if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
            exp_neg = bytes[i] == b'-';
            i += 1;
        }
        if i == bytes.len() {
            return None;
        }
        while i < bytes.len() {
            let d = bytes[i];
            if !d.is_ascii_digit() {
                return None;
            }
            exponent = exponent * 10 + i64::from(d - b'0');
            if exponent > MAX_EXPONENT {
                return None;
            }
            i += 1;
        }
        if exp_neg {
            exponent = -exponent;
        }
    }

    // Position of the decimal point within `digits` after applying the exponent.
    let mut point = int_len as i64 + exponent;
    if point < 0 {
        let pad = (-point) as usize;
        let mut padded = alloc::vec![0u8; pad];
        padded.extend_from_slice(&digits);
        digits = padded;
        point = 0;
    }
    let point = point as usize;
    while digits.len() < point + 4 {
        digits.push(0);
    }
    let mut integer: Vec<u8> = digits[..point].to_vec();
    let mut fraction = [digits[point], digits[point + 1], digits[point + 2]];
    if digits[point + 3] >= 5 {
        let mut carry = true;
        for d in fraction.iter_mut().rev() {
            if *d == 9 {
                *d = 0;
            } else {
                *d += 1;
                carry = false;
                break;
            }
        }
        if carry {
            let mut k = integer.len();
            loop {
                if k == 0 {
                    integer.insert(0, 1);
                    break;
                }
                k -= 1;
                if integer[k] == 9 {
                    integer[k] = 0;
                } else {
                    integer[k] += 1;
                    break;
                }
            }
        }
    }
    let lead = integer.iter().take_while(|d| **d == 0).count();
    integer.drain(..lead);
    if integer.is_empty() && fraction == [0, 0, 0] {
        negative = false;
    }
    Some(Rounded { negative, integer, fraction })
}
