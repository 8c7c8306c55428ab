//! Bug scopes named by the model and the bug descriptions sent to the
//! scope-targeted repair prompt.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScopeCategory {
    InputProcessing,
    OutputFormatting,
    VariableDeclaration,
    LoopBlocks,
    ConditionalBlocks,
}

impl ScopeCategory {
    pub const ALL: [ScopeCategory; 5] = [
        ScopeCategory::InputProcessing,
        ScopeCategory::OutputFormatting,
        ScopeCategory::VariableDeclaration,
        ScopeCategory::LoopBlocks,
        ScopeCategory::ConditionalBlocks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScopeCategory::InputProcessing => "Input Processing",
            ScopeCategory::OutputFormatting => "Output Formatting",
            ScopeCategory::VariableDeclaration => "Variable Declaration",
            ScopeCategory::LoopBlocks => "Loop Blocks",
            ScopeCategory::ConditionalBlocks => "Conditional Blocks",
        }
    }

    /// Lowercase stem matched in completions; singular so plurals match too.
    fn stem(self) -> &'static str {
        match self {
            ScopeCategory::InputProcessing => "input processing",
            ScopeCategory::OutputFormatting => "output formatting",
            ScopeCategory::VariableDeclaration => "variable declaration",
            ScopeCategory::LoopBlocks => "loop block",
            ScopeCategory::ConditionalBlocks => "conditional block",
        }
    }
}

impl fmt::Display for ScopeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineRange {
    Lines { start: u32, end: u32 },
    WholeBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugScope {
    pub category: ScopeCategory,
    pub line_range: LineRange,
    pub justification: String,
}

/// What the scope-targeted repair prompt is told about the bug.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BugInfo {
    SuspiciousLines(Vec<u32>),
    Scope(BugScope),
}

impl BugInfo {
    pub fn is_empty(&self) -> bool {
        matches!(self, BugInfo::SuspiciousLines(lines) if lines.is_empty())
    }

    pub fn render(&self) -> String {
        match self {
            BugInfo::SuspiciousLines(lines) => {
                let list: Vec<String> = lines.iter().map(|l| alloc::format!("{l}")).collect();
                alloc::format!("Suspicious lines: {}", list.join(", "))
            }
            BugInfo::Scope(scope) => {
                let range = match scope.line_range {
                    LineRange::Lines { start, end } => alloc::format!("lines {start}-{end}"),
                    LineRange::WholeBody => String::from("whole body"),
                };
                alloc::format!("Scope: {}, {range}: {}", scope.category, scope.justification)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScopeParseError;

impl fmt::Display for ScopeParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("completion names none of the five bug scopes")
    }
}

impl core::error::Error for ScopeParseError {}

/// Reads the first scope name (case-insensitive) and the first `L<a>-<b>` or
/// `<a>-<b>` range. Lines carrying neither make up the justification.
pub fn parse_bug_scope(completion: &str) -> Result<BugScope, ScopeParseError> {
    let lowered = completion.to_ascii_lowercase();
    let category = ScopeCategory::ALL
        .into_iter()
        .filter_map(|c| lowered.find(c.stem()).map(|at| (at, c)))
        .min_by_key(|(at, _)| *at)
        .map(|(_, c)| c)
        .ok_or(ScopeParseError)?;

    let range = find_range(completion);
    let line_range = match range {
        Some((start, end)) => LineRange::Lines { start: start.min(end), end: start.max(end) },
        None => LineRange::WholeBody,
    };

    let mut rest: Vec<&str> = Vec::new();
    for line in completion.lines() {
        let l = line.trim();
        if l.is_empty() {
            continue;
        }
        let names_scope = ScopeCategory::ALL.iter().any(|c| l.to_ascii_lowercase().contains(c.stem()));
        if names_scope || find_range(l).is_some() {
            continue;
        }
        rest.push(l);
    }
    let justification = if rest.is_empty() { String::from(completion.trim()) } else { rest.join(" ") };
    Ok(BugScope { category, line_range, justification })
}

fn find_range(text: &str) -> Option<(u32, u32)> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let starts_number = bytes[i].is_ascii_digit() && (i == 0 || !bytes[i - 1].is_ascii_digit());
        let prefixed = i > 0 && (bytes[i - 1] == b'L' || bytes[i - 1] == b'l');
        let word_start = i == 0 || !bytes[i - 1].is_ascii_alphanumeric() || prefixed;
        if starts_number && word_start {
            if let Some((a, b, _)) = range_at(bytes, i) {
                return Some((a, b));
            }
        }
        i += 1;
    }
    None
}

fn range_at(bytes: &[u8], start: usize) -> Option<(u32, u32, usize)> {
    let (a, mut i) = number_at(bytes, start)?;
    while i < bytes.len() && bytes[i] == b' ' {
        i += 1;
    }
    if bytes.get(i) != Some(&b'-') {
        return None;
    }
    i += 1;
    while i < bytes.len() && bytes[i] == b' ' {
        i += 1;
    }
    if matches!(bytes.get(i), Some(b'L' | b'l')) {
        i += 1;
    }
    let (b, end) = number_at(bytes, i)?;
    Some((a, b, end))
}

fn number_at(bytes: &[u8], start: usize) -> Option<(u32, usize)> {
    let mut i = start;
    let mut value: u32 = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        value = value.checked_mul(10)?.checked_add(u32::from(bytes[i] - b'0'))?;
        i += 1;
    }
    (i > start).then_some((value, i))
}
