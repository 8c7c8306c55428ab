//! Shared domain types and task-manifest validation.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use core::time::Duration;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::literal::Literal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LanguageId {
    C,
    Cpp,
    Go,
    Java,
    Python,
}

impl LanguageId {
    pub const ALL: [LanguageId; 5] = [
        LanguageId::C,
        LanguageId::Cpp,
        LanguageId::Go,
        LanguageId::Java,
        LanguageId::Python,
    ];

    /// Canonical lowercase key, accepted back by [`parse_language_id`].
    pub fn as_str(self) -> &'static str {
        match self {
            LanguageId::C => "c",
            LanguageId::Cpp => "cpp",
            LanguageId::Go => "go",
            LanguageId::Java => "java",
            LanguageId::Python => "python",
        }
    }

    /// Human name used inside prompts ("C++", "Python", ...).
    pub fn display_name(self) -> &'static str {
        match self {
            LanguageId::C => "C",
            LanguageId::Cpp => "C++",
            LanguageId::Go => "Go",
            LanguageId::Java => "Java",
            LanguageId::Python => "Python",
        }
    }

    /// Languages with a separate compile step before running.
    pub fn is_compiled(self) -> bool {
        !matches!(self, LanguageId::Python)
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

pub fn parse_language_id(name: &str) -> Result<LanguageId, ModelError> {
    let lowered = name.trim().to_ascii_lowercase();
    Ok(match lowered.as_str() {
        "c" => LanguageId::C,
        "c++" | "cpp" => LanguageId::Cpp,
        "go" => LanguageId::Go,
        "java" => LanguageId::Java,
        "python" => LanguageId::Python,
        _ => return Err(ModelError::UnknownLanguage(name.to_owned())),
    })
}

impl FromStr for LanguageId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_language_id(s)
    }
}

impl Serialize for LanguageId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for LanguageId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        parse_language_id(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EntryKind {
    /// Reads stdin, verdict from printed output.
    Stdio,
    /// Verdict from the return value of `function_name`.
    Function {
        function_name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arity: Option<usize>,
    },
}

impl EntryKind {
    pub fn is_function(&self) -> bool {
        matches!(self, EntryKind::Function { .. })
    }

    pub fn function_name(&self) -> Option<&str> {
        match self {
            EntryKind::Function { function_name, .. } => Some(function_name),
            EntryKind::Stdio => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceProgram {
    pub language: LanguageId,
    pub code: String,
    pub entry: EntryKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestPayload {
    Stdin(String),
    Args(Vec<Literal>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestOrigin {
    Provided,
    Generated,
}

/// Flavor word bound into the test-generation prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFlavor {
    Complex,
    Difficult,
    CornerCase,
    None,
}

impl TestFlavor {
    pub const GENERATED: [TestFlavor; 3] =
        [TestFlavor::Complex, TestFlavor::Difficult, TestFlavor::CornerCase];

    pub fn prompt_word(self) -> &'static str {
        match self {
            TestFlavor::Complex => "complex",
            TestFlavor::Difficult => "difficult",
            TestFlavor::CornerCase => "corner case",
            TestFlavor::None => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestInput {
    pub payload: TestPayload,
    pub origin: TestOrigin,
    pub flavor: TestFlavor,
}

impl TestInput {
    pub fn provided(payload: TestPayload) -> Self {
        TestInput { payload, origin: TestOrigin::Provided, flavor: TestFlavor::None }
    }

    /// Text shown to the model as the sample test of the generation prompt.
    pub fn render(&self) -> String {
        match &self.payload {
            TestPayload::Stdin(text) => text.clone(),
            TestPayload::Args(args) => {
                let parts: Vec<String> = args.iter().map(Literal::render).collect();
                parts.join(", ")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleSource {
    SourceExecution,
    Dataset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleValue {
    Stdout(String),
    /// Canonical rendering of the returned literal.
    ReturnValue(String),
}

impl OracleValue {
    pub fn text(&self) -> &str {
        match self {
            OracleValue::Stdout(s) | OracleValue::ReturnValue(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Oracle {
    pub value: OracleValue,
    pub derived_from: OracleSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub input: TestInput,
    pub expected: Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageToggles {
    pub nlspec_augmentation: bool,
    pub nlspec_validation: bool,
    pub scope_estimation: bool,
}

impl StageToggles {
    pub const ALL_ON: StageToggles =
        StageToggles { nlspec_augmentation: true, nlspec_validation: true, scope_estimation: true };
    pub const ALL_OFF: StageToggles =
        StageToggles { nlspec_augmentation: false, nlspec_validation: false, scope_estimation: false };

    pub fn new(augmentation: bool, validation: bool, scope: bool) -> Result<Self, ModelError> {
        let toggles = StageToggles {
            nlspec_augmentation: augmentation,
            nlspec_validation: validation,
            scope_estimation: scope,
        };
        toggles.check()?;
        Ok(toggles)
    }

    pub fn check(&self) -> Result<(), ModelError> {
        if self.nlspec_validation && !self.nlspec_augmentation {
            return Err(ModelError::invalid(
                "toggles",
                "nlspec validation requires nlspec augmentation",
            ));
        }
        Ok(())
    }
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles::ALL_ON
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementBudget {
    pub max_fix_rounds_per_error_kind: u32,
    pub max_total_llm_calls: u32,
    pub per_run_timeout: Duration,
}

impl Default for RefinementBudget {
    fn default() -> Self {
        RefinementBudget {
            max_fix_rounds_per_error_kind: 5,
            max_total_llm_calls: 40,
            per_run_timeout: Duration::from_secs(10),
        }
    }
}

impl RefinementBudget {
    pub fn check(&self) -> Result<(), ModelError> {
        if self.max_fix_rounds_per_error_kind == 0 {
            return Err(ModelError::invalid("budget.max_fix_rounds", "must be positive"));
        }
        if self.max_total_llm_calls == 0 {
            return Err(ModelError::invalid("budget.max_llm_calls", "must be positive"));
        }
        if self.per_run_timeout.is_zero() {
            return Err(ModelError::invalid("budget.timeout_secs", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationTask {
    pub id: String,
    pub source: SourceProgram,
    pub target_language: LanguageId,
    pub provided_tests: Vec<TestCase>,
    pub budget: RefinementBudget,
    pub toggles: StageToggles,
}

/// Manifest-level budget override; absent fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_fix_rounds: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_llm_calls: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestTest {
    pub input: Literal,
    pub expected: Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntryKind {
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arity: Option<usize>,
}

/// One task as written in a manifest, before validation. `path` is resolved
/// into `code` by whoever reads the manifest from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskManifestEntry {
    pub id: String,
    pub source_language: String,
    pub target_language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub entry: ManifestEntryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests: Option<Vec<ManifestTest>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    UnknownLanguage(String),
    InvalidTask { field: String, reason: String },
}

impl ModelError {
    pub fn invalid(field: &str, reason: &str) -> Self {
        ModelError::InvalidTask { field: field.to_owned(), reason: reason.to_owned() }
    }
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::UnknownLanguage(name) => write!(f, "unknown language '{name}'"),
            ModelError::InvalidTask { field, reason } => {
                write!(f, "invalid task: {field}: {reason}")
            }
        }
    }
}

impl core::error::Error for ModelError {}

pub fn validate_task(raw: &TaskManifestEntry) -> Result<TranslationTask, ModelError> {
    validate_task_with(raw, StageToggles::default())
}

/// Validates a manifest entry and fills defaults, using `toggles` for the
/// stage settings.
pub fn validate_task_with(
    raw: &TaskManifestEntry,
    toggles: StageToggles,
) -> Result<TranslationTask, ModelError> {
    if raw.id.trim().is_empty() {
        return Err(ModelError::invalid("id", "empty id"));
    }
    let lang = |field: &str, name: &str| {
        parse_language_id(name).map_err(|_| ModelError::InvalidTask {
            field: field.to_owned(),
            reason: alloc::format!("unknown language '{name}'"),
        })
    };
    let source_language = lang("source_language", &raw.source_language)?;
    let target_language = lang("target_language", &raw.target_language)?;
    if source_language == target_language {
        return Err(ModelError::invalid("target_language", "same language"));
    }

    let code = raw.code.as_deref().unwrap_or("");
    if code.trim().is_empty() {
        return Err(ModelError::invalid("code", "empty code"));
    }

    let entry = match raw.entry.mode.to_ascii_lowercase().as_str() {
        "stdio" => {
            if raw.entry.function_name.is_some() {
                return Err(ModelError::invalid(
                    "entry.function_name",
                    "function_name is only allowed in function mode",
                ));
            }
            EntryKind::Stdio
        }
        "function" => {
            let name = raw.entry.function_name.as_deref().unwrap_or("").trim();
            if name.is_empty() {
                return Err(ModelError::invalid(
                    "entry.function_name",
                    "function mode requires function_name",
                ));
            }
            if !is_identifier(name) {
                return Err(ModelError::invalid("entry.function_name", "not an identifier"));
            }
            let arity = raw.entry.arity.or_else(|| {
                raw.tests.as_ref().and_then(|tests| match tests.first().map(|t| &t.input) {
                    Some(Literal::List(args)) => Some(args.len()),
                    _ => None,
                })
            });
            EntryKind::Function { function_name: name.to_owned(), arity }
        }
        other => {
            return Err(ModelError::InvalidTask {
                field: "entry.mode".to_owned(),
                reason: alloc::format!("unknown mode '{other}'"),
            })
        }
    };

    let mut provided_tests = Vec::new();
    for (i, test) in raw.tests.iter().flatten().enumerate() {
        provided_tests.push(manifest_test(&entry, i, test)?);
    }

    let mut budget = RefinementBudget::default();
    if let Some(spec) = &raw.budget {
        if let Some(rounds) = spec.max_fix_rounds {
            budget.max_fix_rounds_per_error_kind = rounds;
        }
        if let Some(calls) = spec.max_llm_calls {
            budget.max_total_llm_calls = calls;
        }
        if let Some(secs) = spec.timeout_secs {
            if !(secs.is_finite() && secs > 0.0) {
                return Err(ModelError::invalid("budget.timeout_secs", "must be positive"));
            }
            budget.per_run_timeout = Duration::from_secs_f64(secs);
        }
    }
    budget.check()?;
    toggles.check()?;

    Ok(TranslationTask {
        id: raw.id.clone(),
        source: SourceProgram { language: source_language, code: code.to_owned(), entry },
        target_language,
        provided_tests,
        budget,
        toggles,
    })
}

fn manifest_test(entry: &EntryKind, index: usize, test: &ManifestTest) -> Result<TestCase, ModelError> {
    let field = alloc::format!("tests[{index}]");
    let (payload, expected) = match entry {
        EntryKind::Stdio => {
            let input = match &test.input {
                Literal::Str(s) => s.clone(),
                _ => return Err(ModelError::invalid(&field, "stdio input must be a string")),
            };
            let expected = match &test.expected {
                Literal::Str(s) => s.clone(),
                other => other.render(),
            };
            (TestPayload::Stdin(input), OracleValue::Stdout(expected))
        }
        EntryKind::Function { arity, .. } => {
            let args = match &test.input {
                Literal::List(args) => args.clone(),
                _ => return Err(ModelError::invalid(&field, "function input must be a list of arguments")),
            };
            if let Some(n) = arity {
                if args.len() != *n {
                    return Err(ModelError::invalid(&field, "argument count does not match arity"));
                }
            }
            (TestPayload::Args(args), OracleValue::ReturnValue(test.expected.render()))
        }
    };
    Ok(TestCase {
        id: alloc::format!("provided-{index}"),
        input: TestInput::provided(payload),
        expected: Oracle { value: expected, derived_from: OracleSource::Dataset },
    })
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
