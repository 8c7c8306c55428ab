//! Error-message summarization for repair prompts.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::harness::OutcomeStatus;

pub const MAX_MESSAGE_CHARS: usize = 4000;
const TRUNCATED: &str = "\n(truncated)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub category: OutcomeStatus,
    pub message: String,
    /// First 16 hex digits of the SHA-256 of the unsanitized text.
    pub raw_digest: String,
}

/// Reduces absolute paths to basenames, masks hexadecimal addresses,
/// collapses runs of identical lines and caps the length.
pub fn summarize_error(raw: &str, category: OutcomeStatus) -> ErrorSummary {
    let masked = mask_hex(raw);
    let stripped = strip_paths(&masked);
    let deduped = collapse_repeats(&stripped);
    ErrorSummary { category, message: truncate(deduped), raw_digest: digest(raw) }
}

pub fn digest(raw: &str) -> String {
    let hash = Sha256::digest(raw.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in hash.iter().take(8) {
        out.push(hex_digit(byte >> 4));
        out.push(hex_digit(byte & 0xf));
    }
    out
}

fn hex_digit(n: u8) -> char {
    (if n < 10 { b'0' + n } else { b'a' + n - 10 }) as char
}

fn mask_hex(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut copied = 0;
    let mut i = 0;
    while i + 2 < bytes.len() {
        if bytes[i] == b'0' && (bytes[i + 1] == b'x' || bytes[i + 1] == b'X') && bytes[i + 2].is_ascii_hexdigit() {
            let mut end = i + 2;
            while end < bytes.len() && bytes[end].is_ascii_hexdigit() {
                end += 1;
            }
            out.push_str(&text[copied..i]);
            out.push_str("<addr>");
            copied = end;
            i = end;
        } else {
            i += 1;
        }
    }
    out.push_str(&text[copied..]);
    out
}

/// Characters that end a path token and may precede an absolute path.
pub fn is_path_terminator(c: char) -> bool {
    c.is_whitespace() || matches!(c, ':' | '\'' | '"' | '(' | ')' | '[' | ']' | '<' | '>' | ',' | ';' | '{' | '}' | '=' | '`')
}

fn strip_paths(text: &str) -> String {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let at_boundary = i == 0 || is_path_terminator(chars[i - 1].1);
        let c = chars[i].1;
        let drive = at_boundary
            && c.is_ascii_alphabetic()
            && chars.get(i + 1).is_some_and(|x| x.1 == ':')
            && chars.get(i + 2).is_some_and(|x| x.1 == '\\' || x.1 == '/');
        if at_boundary && (c == '/' || drive) {
            let start = i;
            let mut end = if drive { i + 2 } else { i };
            while end < chars.len() && !is_path_terminator(chars[end].1) {
                end += 1;
            }
            let run_start = chars[start].0;
            let run_end = chars.get(end).map_or(text.len(), |x| x.0);
            let run = &text[run_start..run_end];
            match basename(run) {
                Some(base) => out.push_str(base),
                None => out.push_str(run),
            }
            i = end;
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

/// Last non-empty segment of a path; `None` for a run of bare separators.
fn basename(run: &str) -> Option<&str> {
    let body = run.get(2..).filter(|_| run.as_bytes().get(1) == Some(&b':')).unwrap_or(run);
    body.split(['/', '\\']).rfind(|s| !s.is_empty())
}

fn collapse_repeats(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut lines = text.split('\n').peekable();
    let mut first = true;
    while let Some(line) = lines.next() {
        let mut count = 1usize;
        while lines.peek() == Some(&line) {
            lines.next();
            count += 1;
        }
        if !first {
            out.push('\n');
        }
        first = false;
        out.push_str(line);
        if count > 1 {
            out.push_str(&alloc::format!(" (x{count})"));
        }
    }
    out
}

fn truncate(text: String) -> String {
    if text.chars().count() <= MAX_MESSAGE_CHARS {
        return text;
    }
    let keep = MAX_MESSAGE_CHARS - TRUNCATED.chars().count();
    let cut = text.char_indices().nth(keep).map_or(text.len(), |(i, _)| i);
    let mut out = String::from(&text[..cut]);
    out.push_str(TRUNCATED);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(raw: &str) -> String {
        summarize_error(raw, OutcomeStatus::CompileError).message
    }

    #[test]
    fn strips_paths_to_basename() {
        assert_eq!(
            msg("/home/u/p/Main.java:12: error: ';' expected"),
            "Main.java:12: error: ';' expected"
        );
        assert_eq!(msg("In file included from /usr/include/stdio.h:27,"), "In file included from stdio.h:27,");
        assert_eq!(msg("at C:\\work\\x\\main.go:3"), "at main.go:3");
        assert_eq!(msg("a / b and rel/path.c"), "a / b and rel/path.c");
        assert_eq!(msg("dir /tmp/build/ missing"), "dir build missing");
    }

    #[test]
    fn masks_hex() {
        assert_eq!(msg("Segmentation fault at 0x7ffde83c"), "Segmentation fault at <addr>");
        assert_eq!(msg("0x 0xg 0X1F"), "0x 0xg <addr>");
    }

    #[test]
    fn collapses_repeats() {
        let raw = alloc::vec!["warning: unused"; 500].join("\n");
        assert_eq!(msg(&raw), "warning: unused (x500)");
        assert_eq!(msg("a\na\nb\na"), "a (x2)\nb\na");
    }

    #[test]
    fn truncates_long_messages() {
        let raw: String = (0..3000).map(|i| alloc::format!("line {i}\n")).collect();
        let m = msg(&raw);
        assert_eq!(m.chars().count(), MAX_MESSAGE_CHARS);
        assert!(m.ends_with("(truncated)"));
    }

    #[test]
    fn empty_is_empty() {
        let s = summarize_error("", OutcomeStatus::RuntimeError);
        assert_eq!(s.message, "");
        assert_eq!(s.raw_digest.len(), 16);
        assert_ne!(digest("a"), digest("b"));
    }
}
