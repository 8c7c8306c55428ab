//! Test execution vocabulary shared by the refinement loop and the sandbox.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::time::Duration;

use serde::{Deserialize, Serialize};

use crate::coverage::CoverageMatrix;
use crate::model::{Oracle, TestCase, TestInput};
use crate::summarize::ErrorSummary;
use crate::translate::CandidateTranslation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OutcomeStatus {
    Pass,
    CompileError,
    RuntimeError,
    AssertionFail,
    OutputMismatch,
    Timeout,
}

impl OutcomeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeStatus::Pass => "Pass",
            OutcomeStatus::CompileError => "CompileError",
            OutcomeStatus::RuntimeError => "RuntimeError",
            OutcomeStatus::AssertionFail => "AssertionFail",
            OutcomeStatus::OutputMismatch => "OutputMismatch",
            OutcomeStatus::Timeout => "Timeout",
        }
    }

    /// Wording bound to `{type}` in repair prompts.
    pub fn bug_type(self) -> &'static str {
        match self {
            OutcomeStatus::Pass => "no error",
            OutcomeStatus::CompileError => "compilation error",
            OutcomeStatus::RuntimeError => "runtime error",
            OutcomeStatus::AssertionFail => "assertion error",
            OutcomeStatus::OutputMismatch => "output mismatch",
            OutcomeStatus::Timeout => "timeout",
        }
    }
}

impl fmt::Display for OutcomeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub status: OutcomeStatus,
    pub stdout: String,
    pub stderr: String,
    pub exit_code: i32,
    #[serde(with = "duration_ms")]
    pub duration: Duration,
}

impl ExecutionOutcome {
    pub fn compile_error(stderr: String) -> Self {
        ExecutionOutcome {
            status: OutcomeStatus::CompileError,
            stdout: String::new(),
            stderr,
            exit_code: -1,
            duration: Duration::ZERO,
        }
    }
}

mod duration_ms {
    use core::time::Duration;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

/// Raw facts about one run, before classification.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunObservation {
    pub compile_failed: bool,
    pub timed_out: bool,
    /// The driver printed an `ASSERT expected=.. actual=..` diagnostic.
    pub assertion_reported: bool,
    pub exit_code: i32,
    /// Comparator verdict on the produced output, when one was produced.
    pub output_matches: bool,
}

/// Priority: CompileError > Timeout > AssertionFail > RuntimeError >
/// OutputMismatch > Pass.
pub fn classify(obs: &RunObservation) -> OutcomeStatus {
    if obs.compile_failed {
        OutcomeStatus::CompileError
    } else if obs.timed_out {
        OutcomeStatus::Timeout
    } else if obs.assertion_reported {
        OutcomeStatus::AssertionFail
    } else if obs.exit_code != 0 {
        OutcomeStatus::RuntimeError
    } else if !obs.output_matches {
        OutcomeStatus::OutputMismatch
    } else {
        OutcomeStatus::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub test_id: String,
    pub outcome: ExecutionOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestReport {
    pub task_id: String,
    pub candidate_revision: u32,
    pub per_test: Vec<TestVerdict>,
    pub pass_count: usize,
    pub total: usize,
}

impl TestReport {
    pub fn new(task_id: &str, candidate_revision: u32, per_test: Vec<TestVerdict>) -> Self {
        let pass_count = per_test.iter().filter(|v| v.outcome.status == OutcomeStatus::Pass).count();
        let total = per_test.len();
        TestReport { task_id: task_id.into(), candidate_revision, per_test, pass_count, total }
    }

    /// All tests pass, and there is at least one.
    pub fn all_pass(&self) -> bool {
        self.total > 0 && self.pass_count == self.total
    }

    pub fn verdicts(&self) -> Vec<bool> {
        self.per_test.iter().map(|v| v.outcome.status == OutcomeStatus::Pass).collect()
    }

    pub fn first_failure(&self) -> Option<&TestVerdict> {
        self.per_test.iter().find(|v| v.outcome.status != OutcomeStatus::Pass)
    }

    pub fn has_failures(&self) -> bool {
        self.pass_count < self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionLimits {
    pub timeout: Duration,
    pub output_cap_bytes: usize,
}

impl Default for ExecutionLimits {
    fn default() -> Self {
        ExecutionLimits { timeout: Duration::from_secs(10), output_cap_bytes: 1 << 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HarnessError {
    ToolchainMissing(String),
    OracleFailure(String),
    CoverageUnavailable(String),
    UnsupportedArgumentType(String),
    Io(String),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::ToolchainMissing(m) => write!(f, "toolchain missing: {m}"),
            HarnessError::OracleFailure(m) => write!(f, "oracle derivation failed: {m}"),
            HarnessError::CoverageUnavailable(m) => write!(f, "coverage unavailable: {m}"),
            HarnessError::UnsupportedArgumentType(m) => write!(f, "unsupported argument type: {m}"),
            HarnessError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl core::error::Error for HarnessError {}

/// Execution services for one task: the source program, target language
/// and limits are bound when the harness is built.
pub trait TestHarness {
    /// `None` when the candidate compiles, otherwise the summarized diagnostics.
    fn compile_check(
        &mut self,
        candidate: &CandidateTranslation,
    ) -> Result<Option<ErrorSummary>, HarnessError>;

    /// Runs the source program on `input` and records its result.
    fn derive_oracle(&mut self, input: &TestInput) -> Result<Oracle, HarnessError>;

    fn run_suite(
        &mut self,
        candidate: &CandidateTranslation,
        tests: &[TestCase],
    ) -> Result<TestReport, HarnessError>;

    fn collect_coverage(
        &mut self,
        candidate: &CandidateTranslation,
        tests: &[TestCase],
        report: &TestReport,
    ) -> Result<CoverageMatrix, HarnessError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_priority() {
        let all = RunObservation {
            compile_failed: true,
            timed_out: true,
            assertion_reported: true,
            exit_code: 1,
            output_matches: false,
        };
        assert_eq!(classify(&all), OutcomeStatus::CompileError);
        let obs = RunObservation { compile_failed: false, ..all.clone() };
        assert_eq!(classify(&obs), OutcomeStatus::Timeout);
        let obs = RunObservation { timed_out: false, ..obs };
        assert_eq!(classify(&obs), OutcomeStatus::AssertionFail);
        let obs = RunObservation { assertion_reported: false, ..obs };
        assert_eq!(classify(&obs), OutcomeStatus::RuntimeError);
        let obs = RunObservation { exit_code: 0, ..obs };
        assert_eq!(classify(&obs), OutcomeStatus::OutputMismatch);
        let obs = RunObservation { output_matches: true, ..obs };
        assert_eq!(classify(&obs), OutcomeStatus::Pass);
    }

    #[test]
    fn report_arithmetic() {
        let outcome = |status| ExecutionOutcome {
            status,
            stdout: String::new(),
            stderr: String::new(),
            exit_code: 0,
            duration: Duration::ZERO,
        };
        let report = TestReport::new(
            "t",
            0,
            alloc::vec![
                TestVerdict { test_id: "a".into(), outcome: outcome(OutcomeStatus::Pass) },
                TestVerdict { test_id: "b".into(), outcome: outcome(OutcomeStatus::Pass) },
                TestVerdict { test_id: "c".into(), outcome: outcome(OutcomeStatus::OutputMismatch) },
            ],
        );
        assert_eq!((report.pass_count, report.total), (2, 3));
        assert!(!report.all_pass());
        assert_eq!(report.first_failure().unwrap().test_id, "c");
        assert!(!TestReport::new("t", 0, Vec::new()).all_pass());
    }
}
