//! Pulls program text out of a raw chat completion.

use alloc::string::String;
use core::fmt;

use crate::gateway::RawCompletion;
use crate::model::LanguageId;

const END_MARKER: &str = "end of code";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractError {
    NoCode,
}

impl fmt::Display for ExtractError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("completion contains no code")
    }
}

impl core::error::Error for ExtractError {}

pub fn extract_code(raw: &RawCompletion, target: LanguageId) -> Result<String, ExtractError> {
    extract_code_text(&raw.text, target)
}

/// Strips markdown fences, truncates at the first `End of Code` marker and
/// trims surrounding blank lines. A residue without any code punctuation is
/// treated as prose and rejected.
pub fn extract_code_text(text: &str, _target: LanguageId) -> Result<String, ExtractError> {
    let body = fenced_body(text).unwrap_or(text);
    let body = truncate_at_marker(body);
    let body = trim_blank_lines(body);
    if body.trim().is_empty() || !looks_like_code(body) {
        return Err(ExtractError::NoCode);
    }
    Ok(String::from(body))
}

/// Content of the first fenced block; an unclosed fence runs to the end.
fn fenced_body(text: &str) -> Option<&str> {
    let mut offset = 0;
    let mut start = None;
    for line in text.split_inclusive('\n') {
        let is_fence = line.trim_start().starts_with("```");
        match start {
            None if is_fence => start = Some(offset + line.len()),
            Some(s) if is_fence => return Some(&text[s..offset]),
            _ => {}
        }
        offset += line.len();
    }
    start.map(|s| &text[s.min(text.len())..])
}

fn truncate_at_marker(text: &str) -> &str {
    let Some(at) = find_ignore_case(text, END_MARKER) else {
        return text;
    };
    // Walk back over the marker's backslashes and any comment leader.
    let bytes = text.as_bytes();
    let mut cut = at;
    while cut > 0 && matches!(bytes[cut - 1], b'\\' | b' ' | b'\t' | b'/' | b'#' | b'*') {
        cut -= 1;
    }
    &text[..cut]
}

fn find_ignore_case(haystack: &str, needle: &str) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    if n.len() > h.len() {
        return None;
    }
    (0..=h.len() - n.len()).find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

fn trim_blank_lines(text: &str) -> &str {
    let mut start = 0;
    for line in text.split_inclusive('\n') {
        if line.trim().is_empty() {
            start += line.len();
        } else {
            break;
        }
    }
    text[start.min(text.len())..].trim_end()
}

fn looks_like_code(text: &str) -> bool {
    text.bytes().any(|b| matches!(b, b'(' | b')' | b'{' | b'}' | b'[' | b']' | b';' | b'='))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(text: &str) -> Result<String, ExtractError> {
        extract_code_text(text, LanguageId::Java)
    }

    #[test]
    fn strips_fences() {
        assert_eq!(ex("```java\nclass A{}\n```").unwrap(), "class A{}");
        assert_eq!(ex("Here you go:\n```java\nclass A{}\n```\nEnjoy").unwrap(), "class A{}");
    }

    #[test]
    fn truncates_at_marker() {
        assert_eq!(ex("class A{}\n// \\End of Code\\\nAs requested...").unwrap(), "class A{}");
        assert_eq!(ex("x = 1\n# \\End of Code\\").unwrap(), "x = 1");
        assert_eq!(ex("x = 1\n\\End of Code\\").unwrap(), "x = 1");
        assert_eq!(ex("```go\nx := 1 // \\End of Code\\\n```").unwrap(), "x := 1");
    }

    #[test]
    fn keeps_indentation_of_first_line() {
        assert_eq!(ex("\n\n    x = f(1)\nprint(x)\n\n").unwrap(), "    x = f(1)\nprint(x)");
    }

    #[test]
    fn prose_is_not_code() {
        assert_eq!(ex("Sure, here is nothing."), Err(ExtractError::NoCode));
        assert_eq!(ex("```\n\n```"), Err(ExtractError::NoCode));
        assert_eq!(ex("\\End of Code\\"), Err(ExtractError::NoCode));
    }

    #[test]
    fn stable_under_refencing() {
        let once = ex("int main() { return 0; }\n// \\End of Code\\\ntrailing").unwrap();
        let refenced = alloc::format!("```c\n{once}\n```");
        assert_eq!(ex(&refenced).unwrap(), once);
    }
}
