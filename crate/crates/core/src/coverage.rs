//! Line coverage: per-run records, native report parsers, and the
//! normalized line-by-test matrix consumed by fault localization.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Lines seen by one execution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LineCoverage {
    pub executable: BTreeSet<u32>,
    pub hit: BTreeSet<u32>,
}

impl LineCoverage {
    pub fn record(&mut self, line: u32, hit: bool) {
        self.executable.insert(line);
        if hit {
            self.hit.insert(line);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineHits {
    pub line: u32,
    pub hits: Vec<bool>,
}

/// Normalized coverage. `lines[i].hits[t]` is true when test `t` executed
/// line `lines[i].line`; `verdicts[t]` is true when test `t` passed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageMatrix {
    pub tests: Vec<String>,
    pub verdicts: Vec<bool>,
    pub lines: Vec<LineHits>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverageError {
    Shape(&'static str),
    Parse { line: usize, reason: &'static str },
}

impl fmt::Display for CoverageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverageError::Shape(msg) => write!(f, "malformed coverage matrix: {msg}"),
            CoverageError::Parse { line, reason } => write!(f, "coverage report line {line}: {reason}"),
        }
    }
}

impl core::error::Error for CoverageError {}

impl CoverageMatrix {
    /// Joins per-test runs. Only lines some run marked executable appear, and
    /// lines above `max_line` (driver code appended to the candidate) are dropped.
    pub fn from_runs(
        tests: Vec<String>,
        verdicts: Vec<bool>,
        runs: &[LineCoverage],
        max_line: Option<u32>,
    ) -> Result<Self, CoverageError> {
        if tests.len() != verdicts.len() || runs.len() != verdicts.len() {
            return Err(CoverageError::Shape("tests, verdicts and runs differ in length"));
        }
        let executable: BTreeSet<u32> = runs
            .iter()
            .flat_map(|r| r.executable.iter().copied())
            .filter(|l| *l > 0 && max_line.is_none_or(|m| *l <= m))
            .collect();
        let lines = executable
            .into_iter()
            .map(|line| LineHits { line, hits: runs.iter().map(|r| r.hit.contains(&line)).collect() })
            .collect();
        Ok(CoverageMatrix { tests, verdicts, lines })
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        if self.tests.len() != self.verdicts.len() {
            return Err(CoverageError::Shape("tests and verdicts differ in length"));
        }
        if self.lines.iter().any(|l| l.hits.len() != self.verdicts.len()) {
            return Err(CoverageError::Shape("hit vector length differs from verdict count"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    pub fn from_json(text: &str) -> Result<Self, CoverageError> {
        let matrix: CoverageMatrix =
            serde_json::from_str(text).map_err(|_| CoverageError::Shape("not a coverage matrix document"))?;
        matrix.validate()?;
        Ok(matrix)
    }
}

/// Parses gcov's annotated-source text (`count:lineno:source`). `-` marks a
/// non-executable line, `#####`/`=====` an unexecuted one.
pub fn parse_gcov(text: &str) -> Result<LineCoverage, CoverageError> {
    let mut cov = LineCoverage::default();
    for (i, raw) in text.lines().enumerate() {
        let mut fields = raw.splitn(3, ':');
        let (Some(count), Some(lineno)) = (fields.next(), fields.next()) else {
            continue;
        };
        let count = count.trim();
        let Ok(line) = lineno.trim().parse::<u32>() else {
            // Branch/call annotation lines and function summaries.
            continue;
        };
        if line == 0 || count == "-" {
            continue;
        }
        if count.starts_with("#####") || count.starts_with("=====") {
            cov.record(line, false);
            continue;
        }
        let digits = count.trim_end_matches('*');
        let n: u64 = digits
            .parse()
            .map_err(|_| CoverageError::Parse { line: i + 1, reason: "bad execution count" })?;
        cov.record(line, n > 0);
    }
    Ok(cov)
}

/// Parses a Go cover profile (`file:l0.c0,l1.c1 stmts count`), keeping
/// blocks whose file name ends with `file_suffix`.
pub fn parse_go_profile(text: &str, file_suffix: &str) -> Result<LineCoverage, CoverageError> {
    let mut cov = LineCoverage::default();
    for (i, raw) in text.lines().enumerate() {
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with("mode:") {
            continue;
        }
        let err = |reason| CoverageError::Parse { line: i + 1, reason };
        let (location, counts) = raw.rsplit_once(':').ok_or(err("missing ':'"))?;
        if !location.ends_with(file_suffix) {
            continue;
        }
        let mut parts = counts.split_whitespace();
        let range = parts.next().ok_or(err("missing range"))?;
        let _stmts = parts.next().ok_or(err("missing statement count"))?;
        let count: u64 = parts
            .next()
            .ok_or(err("missing hit count"))?
            .parse()
            .map_err(|_| err("bad hit count"))?;
        let (start, end) = range.split_once(',').ok_or(err("bad range"))?;
        let line_of = |pos: &str| pos.split('.').next().and_then(|l| l.parse::<u32>().ok());
        let (Some(first), Some(last)) = (line_of(start), line_of(end)) else {
            return Err(err("bad range"));
        };
        for line in first..=last.max(first) {
            cov.record(line, count > 0);
        }
    }
    Ok(cov)
}

/// Parses the `<line nr=.. ci=..>` entries of one `<sourcefile>` element in
/// a JaCoCo XML report.
pub fn parse_jacoco_xml(text: &str, source_file: &str) -> Result<LineCoverage, CoverageError> {
    let mut cov = LineCoverage::default();
    let marker = alloc::format!("<sourcefile name=\"{source_file}\"");
    let Some(start) = text.find(&marker) else {
        return Ok(cov);
    };
    let section = &text[start..];
    let section = &section[..section.find("</sourcefile>").unwrap_or(section.len())];
    for element in section.split("<line ").skip(1) {
        let attr = |name: &str| -> Option<u64> {
            let key = alloc::format!("{name}=\"");
            let at = element.find(&key)? + key.len();
            let rest = &element[at..];
            rest[..rest.find('"')?].parse().ok()
        };
        let line = attr("nr").ok_or(CoverageError::Parse { line: 0, reason: "line without nr" })?;
        let covered = attr("ci").unwrap_or(0);
        cov.record(line as u32, covered > 0);
    }
    Ok(cov)
}

#[derive(Deserialize)]
struct PythonTrace {
    executable: Vec<u32>,
    hits: Vec<u32>,
}

/// Parses the `{"executable": [...], "hits": [...]}` document written by the
/// Python line tracer.
pub fn parse_python_trace(text: &str) -> Result<LineCoverage, CoverageError> {
    let trace: PythonTrace = serde_json::from_str(text)
        .map_err(|_| CoverageError::Parse { line: 1, reason: "not a trace document" })?;
    let mut cov = LineCoverage::default();
    for line in trace.executable {
        cov.record(line, false);
    }
    for line in trace.hits {
        cov.record(line, true);
    }
    Ok(cov)
}
