//! Completion gateway: budget accounting in front of a pluggable backend.
//!
//! A [`Gateway`] is created per task. It owns the call counter that enforces
//! `max_total_llm_calls`, retries transient backend failures, and keeps the
//! ordered list of templates it sent so callers can audit stage toggles.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::prompt::{GenerationParams, PromptInstance, PromptTemplateId};

pub trait Backend {
    fn complete(
        &mut self,
        request: &PromptInstance,
        params: &GenerationParams,
    ) -> Result<String, BackendError>;
}

impl<B: Backend + ?Sized> Backend for &mut B {
    fn complete(
        &mut self,
        request: &PromptInstance,
        params: &GenerationParams,
    ) -> Result<String, BackendError> {
        (**self).complete(request, params)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(
        &mut self,
        request: &PromptInstance,
        params: &GenerationParams,
    ) -> Result<String, BackendError> {
        (**self).complete(request, params)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendError {
    /// Network, HTTP or credential failure. `transient` failures are retried.
    Unavailable { message: String, transient: bool },
    TranscriptMiss { template: PromptTemplateId },
}

impl fmt::Display for BackendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendError::Unavailable { message, .. } => write!(f, "backend unavailable: {message}"),
            BackendError::TranscriptMiss { template } => {
                write!(f, "no transcript entry matches a {template} request")
            }
        }
    }
}

impl core::error::Error for BackendError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GatewayError {
    BackendUnavailable(String),
    BudgetExhausted { limit: u32 },
    TranscriptMiss(PromptTemplateId),
}

impl fmt::Display for GatewayError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GatewayError::BackendUnavailable(msg) => write!(f, "backend unavailable: {msg}"),
            GatewayError::BudgetExhausted { limit } => {
                write!(f, "LLM call budget of {limit} exhausted")
            }
            GatewayError::TranscriptMiss(t) => write!(f, "no transcript entry matches a {t} request"),
        }
    }
}

impl core::error::Error for GatewayError {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCompletion {
    pub text: String,
    /// 1-based position of this completion among the task's calls.
    pub llm_call_index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub llm_call_index: u32,
    pub template: PromptTemplateId,
}

pub const DEFAULT_RETRIES: u32 = 2;

pub struct Gateway<B> {
    backend: B,
    params: GenerationParams,
    max_calls: u32,
    retries: u32,
    used: u32,
    log: Vec<CallRecord>,
}

impl<B: Backend> Gateway<B> {
    pub fn new(backend: B, params: GenerationParams, max_calls: u32) -> Self {
        Gateway { backend, params, max_calls, retries: DEFAULT_RETRIES, used: 0, log: Vec::new() }
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    pub fn calls_used(&self) -> u32 {
        self.used
    }

    pub fn max_calls(&self) -> u32 {
        self.max_calls
    }

    pub fn remaining(&self) -> u32 {
        self.max_calls.saturating_sub(self.used)
    }

    pub fn call_log(&self) -> &[CallRecord] {
        &self.log
    }

    pub fn params(&self) -> &GenerationParams {
        &self.params
    }

    pub fn into_backend(self) -> B {
        self.backend
    }

    /// Sends one request. Only successful completions consume budget.
    pub fn complete(&mut self, instance: &PromptInstance) -> Result<RawCompletion, GatewayError> {
        if self.used >= self.max_calls {
            return Err(GatewayError::BudgetExhausted { limit: self.max_calls });
        }
        let mut attempt = 0;
        let text = loop {
            match self.backend.complete(instance, &self.params) {
                Ok(text) => break text,
                Err(BackendError::Unavailable { message, transient }) => {
                    if transient && attempt < self.retries {
                        attempt += 1;
                        continue;
                    }
                    return Err(GatewayError::BackendUnavailable(message));
                }
                Err(BackendError::TranscriptMiss { template }) => {
                    return Err(GatewayError::TranscriptMiss(template))
                }
            }
        };
        self.used += 1;
        self.log.push(CallRecord { llm_call_index: self.used, template: instance.template });
        Ok(RawCompletion { text, llm_call_index: self.used })
    }
}

/// One scripted response. `contains`, when set, must occur in the rendered
/// context or prompt for the entry to match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub template: PromptTemplateId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for TranscriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "transcript line {}: {}", self.line, self.message)
    }
}

impl core::error::Error for TranscriptError {}

/// Deterministic scripted backend. Each entry answers at most one request;
/// a request takes the first unconsumed entry that matches it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MockTranscript {
    entries: Vec<TranscriptEntry>,
    consumed: Vec<bool>,
}

impl MockTranscript {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        let consumed = alloc::vec![false; entries.len()];
        MockTranscript { entries, consumed }
    }

    /// Parses one JSON object per line; blank lines are skipped.
    pub fn from_jsonl(text: &str) -> Result<Self, TranscriptError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry = serde_json::from_str(line).map_err(|e| TranscriptError {
                line: i + 1,
                message: alloc::format!("{e}"),
            })?;
            entries.push(entry);
        }
        Ok(MockTranscript::new(entries))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            if let Ok(line) = serde_json::to_string(entry) {
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn consumed_count(&self) -> usize {
        self.consumed.iter().filter(|c| **c).count()
    }

    fn matches(entry: &TranscriptEntry, request: &PromptInstance) -> bool {
        if entry.template != request.template {
            return false;
        }
        match &entry.contains {
            None => true,
            Some(needle) => request.prompt.contains(needle.as_str()) || request.context.contains(needle.as_str()),
        }
    }
}

impl Backend for MockTranscript {
    fn complete(
        &mut self,
        request: &PromptInstance,
        _params: &GenerationParams,
    ) -> Result<String, BackendError> {
        let hit = self
            .entries
            .iter()
            .enumerate()
            .find(|(i, e)| !self.consumed[*i] && Self::matches(e, request))
            .map(|(i, _)| i);
        match hit {
            Some(i) => {
                self.consumed[i] = true;
                Ok(self.entries[i].response.to_owned())
            }
            None => Err(BackendError::TranscriptMiss { template: request.template }),
        }
    }
}
