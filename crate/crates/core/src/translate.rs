//! Translation agent: one completion per call, from the source code or from
//! the natural-language specification.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::extract::{extract_code, ExtractError};
use crate::gateway::{Backend, Gateway, GatewayError, RawCompletion};
use crate::model::{LanguageId, SourceProgram};
use crate::prompt::{bindings, render_prompt, PromptInstance, PromptTemplateId, RenderError};

/// Bound to `{source_lang}` when translating from a specification.
pub const SPEC_SOURCE_LANG: &str = "pseudocode";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InputForm {
    SourceCode,
    NlSpec,
}

impl InputForm {
    pub fn as_str(self) -> &'static str {
        match self {
            InputForm::SourceCode => "SourceCode",
            InputForm::NlSpec => "NlSpec",
        }
    }
}

impl fmt::Display for InputForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTranslation {
    pub code: String,
    pub input_form: InputForm,
    pub revision: u32,
    pub task_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NLSpecification {
    pub text: String,
    pub revision: u32,
    pub validated: bool,
    pub task_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentError {
    Gateway(GatewayError),
    NoCode,
    SpecEmpty,
    Render(RenderError),
    /// A documented precondition of the operation did not hold.
    Precondition(&'static str),
    FixRoundsExhausted,
    ScopeParse,
    FormatUnparseable,
}

impl From<GatewayError> for AgentError {
    fn from(e: GatewayError) -> Self {
        AgentError::Gateway(e)
    }
}

impl From<RenderError> for AgentError {
    fn from(e: RenderError) -> Self {
        AgentError::Render(e)
    }
}

impl From<ExtractError> for AgentError {
    fn from(_: ExtractError) -> Self {
        AgentError::NoCode
    }
}

impl fmt::Display for AgentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentError::Gateway(e) => write!(f, "{e}"),
            AgentError::NoCode => f.write_str("completion contained no code"),
            AgentError::SpecEmpty => f.write_str("completion contained no specification"),
            AgentError::Render(e) => write!(f, "{e}"),
            AgentError::Precondition(what) => write!(f, "precondition violated: {what}"),
            AgentError::FixRoundsExhausted => f.write_str("fix rounds exhausted"),
            AgentError::ScopeParse => f.write_str("completion names no bug scope"),
            AgentError::FormatUnparseable => f.write_str("no test inputs could be parsed from the completion"),
        }
    }
}

impl core::error::Error for AgentError {}

/// Renders the translation request without sending it.
pub fn translation_request(
    input_form: InputForm,
    source: &SourceProgram,
    nlspec: Option<&NLSpecification>,
    target: LanguageId,
) -> Result<PromptInstance, AgentError> {
    let (source_lang, body) = match input_form {
        InputForm::SourceCode => (source.language.display_name(), source.code.as_str()),
        InputForm::NlSpec => {
            let spec = nlspec.ok_or(AgentError::Precondition("NlSpec input requires a specification"))?;
            (SPEC_SOURCE_LANG, spec.text.as_str())
        }
    };
    Ok(render_prompt(
        PromptTemplateId::Translate,
        &bindings([
            ("source_lang", source_lang),
            ("target_lang", target.display_name()),
            ("source_code", body),
        ]),
    )?)
}

/// Translates and extracts code. `previous_revision` is the revision of the
/// task's latest candidate, `None` before the first one.
pub fn translate<B: Backend>(
    input_form: InputForm,
    source: &SourceProgram,
    nlspec: Option<&NLSpecification>,
    target: LanguageId,
    task_id: &str,
    previous_revision: Option<u32>,
    gateway: &mut Gateway<B>,
) -> Result<(CandidateTranslation, RawCompletion), AgentError> {
    let request = translation_request(input_form, source, nlspec, target)?;
    let raw = gateway.complete(&request)?;
    let code = extract_code(&raw, target)?;
    let candidate = CandidateTranslation {
        code,
        input_form,
        revision: next_revision(previous_revision),
        task_id: task_id.into(),
    };
    Ok((candidate, raw))
}

pub fn next_revision(previous: Option<u32>) -> u32 {
    previous.map_or(0, |r| r + 1)
}
