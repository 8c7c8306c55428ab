//! Prompt templates and rendering.
//!
//! Each template is a pair of texts: the system-role `context` and the
//! user-role `prompt`. Placeholders are `{identifier}` tokens in the static
//! template text. Rendering is a single left-to-right pass, so braces that
//! appear inside bound values (source code, mostly) are never re-expanded.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PromptTemplateId {
    Translate,
    NlSpecGen,
    NlSpecAlign,
    BugScope,
    FixWithScope,
    TestGen,
    FixCompile,
    FixGeneral,
}

impl PromptTemplateId {
    pub const ALL: [PromptTemplateId; 8] = [
        PromptTemplateId::Translate,
        PromptTemplateId::NlSpecGen,
        PromptTemplateId::NlSpecAlign,
        PromptTemplateId::BugScope,
        PromptTemplateId::FixWithScope,
        PromptTemplateId::TestGen,
        PromptTemplateId::FixCompile,
        PromptTemplateId::FixGeneral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptTemplateId::Translate => "Translate",
            PromptTemplateId::NlSpecGen => "NlSpecGen",
            PromptTemplateId::NlSpecAlign => "NlSpecAlign",
            PromptTemplateId::BugScope => "BugScope",
            PromptTemplateId::FixWithScope => "FixWithScope",
            PromptTemplateId::TestGen => "TestGen",
            PromptTemplateId::FixCompile => "FixCompile",
            PromptTemplateId::FixGeneral => "FixGeneral",
        }
    }

    fn texts(self) -> (&'static str, &'static str) {
        match self {
            PromptTemplateId::Translate => (TRANSLATE_CONTEXT, TRANSLATE_PROMPT),
            PromptTemplateId::NlSpecGen => ("", NLSPEC_GEN_PROMPT),
            PromptTemplateId::NlSpecAlign => (NLSPEC_ALIGN_CONTEXT, NLSPEC_ALIGN_PROMPT),
            PromptTemplateId::BugScope => (BUG_SCOPE_CONTEXT, BUG_SCOPE_PROMPT),
            PromptTemplateId::FixWithScope => (FIX_SCOPE_CONTEXT, FIX_SCOPE_PROMPT),
            PromptTemplateId::TestGen => (TEST_GEN_CONTEXT, TEST_GEN_PROMPT),
            PromptTemplateId::FixCompile | PromptTemplateId::FixGeneral => {
                (FIX_ERROR_CONTEXT, FIX_ERROR_PROMPT)
            }
        }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(self) -> Vec<&'static str> {
        let (context, prompt) = self.texts();
        let mut names: Vec<&'static str> = Vec::new();
        for text in [context, prompt] {
            for segment in segments(text) {
                if let Segment::Placeholder(name) = segment {
                    if !names.contains(&name) {
                        names.push(name);
                    }
                }
            }
        }
        names
    }
}

impl fmt::Display for PromptTemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptTemplateId {
    type Err = UnknownTemplate;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| *c != '_' && *c != '-').collect();
        PromptTemplateId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(&key))
            .ok_or_else(|| UnknownTemplate(s.to_owned()))
    }
}

impl Serialize for PromptTemplateId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PromptTemplateId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTemplate(pub String);

impl fmt::Display for UnknownTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown prompt template '{}'", self.0)
    }
}

impl core::error::Error for UnknownTemplate {}

const TRANSLATE_CONTEXT: &str =
    "You are an expert software developer and you can translate code from {source_lang} to {target_lang}.";
const TRANSLATE_PROMPT: &str = "{source_code}\n\
Translate the above {source_lang} code to {target_lang}. Print only the {target_lang} code and end with the comment \\End of Code\\. Do not give any other explanations or any other text except the {target_lang} code.";

const NLSPEC_GEN_PROMPT: &str = "{source_code}\n\
Give pseudocode for the above {source_language} code so that the {source_language} code is reproducible from the pseudocode. Do not give any other explanation except for the pseudocode.";

const NLSPEC_ALIGN_CONTEXT: &str = "You are an expert {source_lang} to NL-Specification aligner. You will be given a {source_lang} code and corresponding NL-Specification. Your task is to align the {source_lang} code and the NL-Specification line by line and update the NL-Specification accordingly. Please return only the updated NL-Specification without any further description.";
const NLSPEC_ALIGN_PROMPT: &str = "{source_lang}: {source_code}\n\
Corresponding NL-Specification: {nl_specification}";

const BUG_SCOPE_CONTEXT: &str = "You are an expert bug finder agent for {type} in {tgt_lang} translated from {src_lang}. You will be provided a source code written in {src_lang}, a translated version of the code in {tgt_lang} that contains bugs, and the error message for the buggy code. Please check the following scopes and find out where the bug remains: {scopes}. Return the scope of the bug with a precise and very brief explanation and line numbers.";
const BUG_SCOPE_PROMPT: &str = "{src_lang} Source Code: {src_code}\n\
Translated {tgt_lang} Buggy Code: {trans_code}\n\
Error Message: {error_messages}";

const FIX_SCOPE_CONTEXT: &str = "You are an expert bug repair tool to solve {type} in {tgt_lang} translated from {src_lang}. You will be provided with a code snippet in {tgt_lang} that contains bugs, and the possible bug location. Please fix the translated code using the bug description. Return only the fixed code without any additional text.";
const FIX_SCOPE_PROMPT: &str = "{src_lang} Source Code: {src_code}\n\
Translated {tgt_lang} Buggy Code: {trans_code}\n\
Bug Location: {scope}";

const TEST_GEN_CONTEXT: &str = "You are an expert Software Quality Assurance Engineer. You can write high quality and {choice} tests for {language} code.";
const TEST_GEN_PROMPT: &str = "{source_code}\n\
Generate {no_of_tests} {choice} input for the above {language} code.\n\
For your reference, a sample test case is as follows:\n\
{sample_test}\n\
Maintain the following output format (x will be {last_index}):\n\
Input_0:\n\
<input>\n\
...\n\
Input_x:\n\
<input>\n\
Do not add any extra explanation or any other text except the mentioned output format.";
const TEST_GEN_SAMPLE_BLOCK: &str =
    "For your reference, a sample test case is as follows:\n{sample_test}\n";

const FIX_ERROR_CONTEXT: &str =
    "You are an expert bug repair tool to solve {type} in {tgt_lang} translated from {src_lang}.";
const FIX_ERROR_PROMPT: &str = "Translated {tgt_lang} Buggy Code: {trans_code}\n\
Error Message: {error_messages}\n\
Return only the fixed code.";

/// The five scope names listed in the bug-scope prompt.
pub const SCOPE_LIST: &str =
    "Input Processing, Output Formatting, Variable Declaration, Loop Blocks, and Conditional Blocks";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub template: PromptTemplateId,
    pub context: String,
    pub prompt: String,
    pub bindings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_name: String,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams { temperature: 0.8, max_tokens: 8000, model_name: "gpt-4o".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RenderError {
    MissingBinding(String),
}

impl fmt::Display for RenderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RenderError::MissingBinding(name) => write!(f, "missing binding '{name}'"),
        }
    }
}

impl core::error::Error for RenderError {}

pub type Bindings = BTreeMap<String, String>;

/// Builds a binding map from `(name, value)` pairs.
pub fn bindings<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Bindings {
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v.to_owned())).collect()
}

pub fn render_prompt(
    template: PromptTemplateId,
    bindings: &Bindings,
) -> Result<PromptInstance, RenderError> {
    let (context, mut prompt) = template.texts();
    let owned;
    if template == PromptTemplateId::TestGen && !bindings.contains_key("sample_test") {
        // No sample test available: the reference block is dropped.
        owned = TEST_GEN_PROMPT.replacen(TEST_GEN_SAMPLE_BLOCK, "", 1);
        prompt = &owned;
    }
    Ok(PromptInstance {
        template,
        context: substitute(context, bindings)?,
        prompt: substitute(prompt, bindings)?,
        bindings: bindings.clone(),
    })
}

enum Segment<'a> {
    Text(&'a str),
    Placeholder(&'a str),
}

fn segments(text: &str) -> impl Iterator<Item = Segment<'_>> {
    let mut rest = text;
    core::iter::from_fn(move || {
        if rest.is_empty() {
            return None;
        }
        let mut search_from = 0;
        while let Some(open) = rest[search_from..].find('{').map(|i| i + search_from) {
            if let Some(len) = placeholder_len(&rest[open + 1..]) {
                if open > 0 {
                    let text = &rest[..open];
                    rest = &rest[open..];
                    return Some(Segment::Text(text));
                }
                let name = &rest[1..1 + len];
                rest = &rest[len + 2..];
                return Some(Segment::Placeholder(name));
            }
            search_from = open + 1;
        }
        let text = rest;
        rest = "";
        Some(Segment::Text(text))
    })
}

/// Length of an identifier followed by `}` at the start of `s`.
fn placeholder_len(s: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let first = *bytes.first()?;
    if !(first.is_ascii_alphabetic() || first == b'_') {
        return None;
    }
    let len = bytes.iter().take_while(|b| b.is_ascii_alphanumeric() || **b == b'_').count();
    (bytes.get(len) == Some(&b'}')).then_some(len)
}

fn substitute(text: &str, bindings: &Bindings) -> Result<String, RenderError> {
    let mut out = String::with_capacity(text.len());
    for segment in segments(text) {
        match segment {
            Segment::Text(t) => out.push_str(t),
            Segment::Placeholder(name) => match bindings.get(name) {
                Some(value) => out.push_str(value),
                None => return Err(RenderError::MissingBinding(name.to_owned())),
            },
        }
    }
    Ok(out)
}
