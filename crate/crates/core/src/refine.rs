//! The refinement loop and the agent operations it drives.
//!
//! [`refine`] runs one task: initial translation, compile repair, test
//! preparation, then cycles of evaluation, optional specification
//! augmentation and validation, localization and repair. It never fails:
//! every problem ends the run with the best candidate seen so far and an
//! event explaining why.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::extract::extract_code;
use crate::gateway::{Backend, CallRecord, Gateway, GatewayError};
use crate::harness::{HarnessError, OutcomeStatus, TestHarness, TestReport};
use crate::model::{
    LanguageId, OracleValue, SourceProgram, StageToggles, TestCase, TestOrigin, TranslationTask,
};
use crate::prompt::{bindings, render_prompt, GenerationParams, PromptTemplateId, SCOPE_LIST};
use crate::sbfl;
use crate::scope::{parse_bug_scope, BugInfo, BugScope};
use crate::summarize::{summarize_error, ErrorSummary};
use crate::testgen::{generate_test_inputs, DEFAULT_TEST_COUNT};
use crate::translate::{translate, AgentError, CandidateTranslation, InputForm, NLSpecification};

pub type FixRounds = BTreeMap<OutcomeStatus, u32>;

/// Which program the test-generation prompt is shown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestGenSource {
    #[default]
    Source,
    Translated,
}

/// What the loop refines against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestPolicy {
    /// Provided tests when the task has them, generated ones otherwise.
    #[default]
    PreferProvided,
    /// Always generate; provided tests are kept for evaluation only.
    AlwaysGenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub params: GenerationParams,
    pub test_count: usize,
    pub testgen_from: TestGenSource,
    pub test_policy: TestPolicy,
    pub sbfl_top_k: usize,
    pub seed: u64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            params: GenerationParams::default(),
            test_count: DEFAULT_TEST_COUNT,
            testgen_from: TestGenSource::Source,
            test_policy: TestPolicy::PreferProvided,
            sbfl_top_k: sbfl::DEFAULT_TOP_K,
            seed: 0,
        }
    }
}

/// One line of the task's event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEvent {
    pub event: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<PromptTemplateId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass_count: Option<usize>,
    /// Calls made so far when the event was recorded.
    pub llm_call_index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl StageEvent {
    pub fn new(event: &str, llm_call_index: u32) -> Self {
        StageEvent {
            event: event.to_owned(),
            template: None,
            revision: None,
            pass_count: None,
            llm_call_index,
            detail: None,
        }
    }
}

pub fn events_to_jsonl(events: &[StageEvent]) -> String {
    let mut out = String::new();
    for e in events {
        if let Ok(line) = serde_json::to_string(e) {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineState {
    pub current_input_form: InputForm,
    pub best_candidate: Option<CandidateTranslation>,
    pub best_pass_count: usize,
    pub best_report: Option<TestReport>,
    pub pass_count_by_form: BTreeMap<InputForm, usize>,
    pub fix_rounds_used: FixRounds,
    pub llm_calls_used: u32,
    pub stage_log: Vec<StageEvent>,
    /// Highest revision handed out for this task.
    pub latest_revision: Option<u32>,
}

impl Default for PipelineState {
    fn default() -> Self {
        PipelineState {
            current_input_form: InputForm::SourceCode,
            best_candidate: None,
            best_pass_count: 0,
            best_report: None,
            pass_count_by_form: BTreeMap::new(),
            fix_rounds_used: BTreeMap::new(),
            llm_calls_used: 0,
            stage_log: Vec::new(),
            latest_revision: None,
        }
    }
}

impl PipelineState {
    /// Records an evaluated candidate. The best candidate changes only on a
    /// strictly higher pass count, so the earliest wins ties.
    pub fn observe(&mut self, candidate: &CandidateTranslation, report: &TestReport) {
        let entry = self.pass_count_by_form.entry(candidate.input_form).or_insert(0);
        *entry = (*entry).max(report.pass_count);
        if self.best_report.is_none() || report.pass_count > self.best_pass_count {
            self.best_pass_count = report.pass_count;
            self.best_candidate = Some(candidate.clone());
            self.best_report = Some(report.clone());
        }
    }
}

/// Argmax of pass counts by input form; ties, a missing specification entry
/// and disabled augmentation all give `SourceCode`.
pub fn select_input_form(state: &PipelineState, toggles: &StageToggles) -> InputForm {
    if !toggles.nlspec_augmentation {
        return InputForm::SourceCode;
    }
    let source = state.pass_count_by_form.get(&InputForm::SourceCode).copied().unwrap_or(0);
    match state.pass_count_by_form.get(&InputForm::NlSpec) {
        Some(spec) if *spec > source => InputForm::NlSpec,
        _ => InputForm::SourceCode,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementResult {
    pub task_id: String,
    pub final_candidate: Option<CandidateTranslation>,
    pub final_report: TestReport,
    pub converged: bool,
    pub events: Vec<StageEvent>,
    pub llm_calls_used: u32,
    pub call_log: Vec<CallRecord>,
    /// The suite the loop refined against.
    pub tests: Vec<TestCase>,
    pub nlspec: Option<NLSpecification>,
    pub stop_reason: String,
}

/// Text of a specification completion, without a surrounding code fence.
fn spec_text(completion: &str) -> Option<String> {
    let trimmed = completion.trim();
    let body = match trimmed.strip_prefix("```") {
        Some(rest) => {
            let rest = rest.split_once('\n').map_or("", |(_, r)| r);
            rest.trim_end().strip_suffix("```").unwrap_or(rest)
        }
        None => trimmed,
    };
    let body = body.trim();
    (!body.is_empty()).then(|| body.to_owned())
}

/// Asks for the pseudocode specification. Only one per task: pass the
/// existing specification, if any, to have the call refused.
pub fn generate_nlspec<B: Backend>(
    source: &SourceProgram,
    task_id: &str,
    existing: Option<&NLSpecification>,
    gateway: &mut Gateway<B>,
) -> Result<NLSpecification, AgentError> {
    if existing.is_some() {
        return Err(AgentError::Precondition("specification already generated for this task"));
    }
    let request = render_prompt(
        PromptTemplateId::NlSpecGen,
        &bindings([("source_code", source.code.as_str()), ("source_language", source.language.display_name())]),
    )?;
    let raw = gateway.complete(&request)?;
    let text = spec_text(&raw.text).ok_or(AgentError::SpecEmpty)?;
    Ok(NLSpecification { text, revision: 0, validated: false, task_id: task_id.to_owned() })
}

/// Aligns the specification with the source line by line. Only called
/// after a run with failing tests.
pub fn validate_nlspec<B: Backend>(
    source: &SourceProgram,
    spec: &NLSpecification,
    report: &TestReport,
    gateway: &mut Gateway<B>,
) -> Result<NLSpecification, AgentError> {
    if !report.has_failures() {
        return Err(AgentError::Precondition("validation needs a failing test"));
    }
    let request = render_prompt(
        PromptTemplateId::NlSpecAlign,
        &bindings([
            ("source_lang", source.language.display_name()),
            ("source_code", source.code.as_str()),
            ("nl_specification", spec.text.as_str()),
        ]),
    )?;
    let raw = gateway.complete(&request)?;
    let text = spec_text(&raw.text).ok_or(AgentError::SpecEmpty)?;
    Ok(NLSpecification { text, revision: spec.revision + 1, validated: true, task_id: spec.task_id.clone() })
}

/// Per-task facts shared by the repair operations.
#[derive(Debug, Clone, Copy)]
pub struct FixContext<'a> {
    pub source: &'a SourceProgram,
    pub target: LanguageId,
    pub max_rounds: u32,
}

fn take_round(rounds: &mut FixRounds, kind: OutcomeStatus, max: u32) -> Result<(), AgentError> {
    let used = rounds.entry(kind).or_insert(0);
    if *used >= max {
        return Err(AgentError::FixRoundsExhausted);
    }
    *used += 1;
    Ok(())
}

fn fixed_candidate<B: Backend>(
    template: PromptTemplateId,
    b: &crate::prompt::Bindings,
    candidate: &CandidateTranslation,
    target: LanguageId,
    latest_revision: u32,
    gateway: &mut Gateway<B>,
) -> Result<CandidateTranslation, AgentError> {
    let request = render_prompt(template, b)?;
    let raw = gateway.complete(&request)?;
    let code = extract_code(&raw, target)?;
    Ok(CandidateTranslation {
        code,
        input_form: candidate.input_form,
        revision: latest_revision + 1,
        task_id: candidate.task_id.clone(),
    })
}

fn error_fix<B: Backend>(
    template: PromptTemplateId,
    ctx: FixContext<'_>,
    candidate: &CandidateTranslation,
    summary: &ErrorSummary,
    rounds: &mut FixRounds,
    latest_revision: u32,
    gateway: &mut Gateway<B>,
) -> Result<CandidateTranslation, AgentError> {
    take_round(rounds, summary.category, ctx.max_rounds)?;
    let b = bindings([
        ("type", summary.category.bug_type()),
        ("tgt_lang", ctx.target.display_name()),
        ("src_lang", ctx.source.language.display_name()),
        ("trans_code", candidate.code.as_str()),
        ("error_messages", summary.message.as_str()),
    ]);
    fixed_candidate(template, &b, candidate, ctx.target, latest_revision, gateway)
}

pub fn fix_compile_error<B: Backend>(
    ctx: FixContext<'_>,
    candidate: &CandidateTranslation,
    summary: &ErrorSummary,
    rounds: &mut FixRounds,
    latest_revision: u32,
    gateway: &mut Gateway<B>,
) -> Result<CandidateTranslation, AgentError> {
    if summary.category != OutcomeStatus::CompileError {
        return Err(AgentError::Precondition("compile fix needs a compilation error"));
    }
    error_fix(PromptTemplateId::FixCompile, ctx, candidate, summary, rounds, latest_revision, gateway)
}

pub fn fix_general_error<B: Backend>(
    ctx: FixContext<'_>,
    candidate: &CandidateTranslation,
    summary: &ErrorSummary,
    rounds: &mut FixRounds,
    latest_revision: u32,
    gateway: &mut Gateway<B>,
) -> Result<CandidateTranslation, AgentError> {
    if matches!(summary.category, OutcomeStatus::CompileError | OutcomeStatus::Pass) {
        return Err(AgentError::Precondition("general fix needs a runtime or test failure"));
    }
    error_fix(PromptTemplateId::FixGeneral, ctx, candidate, summary, rounds, latest_revision, gateway)
}

pub fn estimate_bug_scope<B: Backend>(
    ctx: FixContext<'_>,
    candidate: &CandidateTranslation,
    summary: &ErrorSummary,
    toggles: &StageToggles,
    gateway: &mut Gateway<B>,
) -> Result<BugScope, AgentError> {
    if !toggles.scope_estimation {
        return Err(AgentError::Precondition("scope estimation is disabled"));
    }
    let request = render_prompt(
        PromptTemplateId::BugScope,
        &bindings([
            ("type", summary.category.bug_type()),
            ("tgt_lang", ctx.target.display_name()),
            ("src_lang", ctx.source.language.display_name()),
            ("scopes", SCOPE_LIST),
            ("src_code", ctx.source.code.as_str()),
            ("trans_code", candidate.code.as_str()),
            ("error_messages", summary.message.as_str()),
        ]),
    )?;
    let raw = gateway.complete(&request)?;
    parse_bug_scope(&raw.text).map_err(|_| AgentError::ScopeParse)
}

#[allow(clippy::too_many_arguments)]
pub fn fix_within_scope<B: Backend>(
    ctx: FixContext<'_>,
    candidate: &CandidateTranslation,
    bug_info: &BugInfo,
    bug_kind: OutcomeStatus,
    rounds: &mut FixRounds,
    latest_revision: u32,
    gateway: &mut Gateway<B>,
) -> Result<CandidateTranslation, AgentError> {
    if bug_info.is_empty() {
        return Err(AgentError::Precondition("no bug location to fix within"));
    }
    take_round(rounds, bug_kind, ctx.max_rounds)?;
    let scope = bug_info.render();
    let b = bindings([
        ("type", bug_kind.bug_type()),
        ("tgt_lang", ctx.target.display_name()),
        ("src_lang", ctx.source.language.display_name()),
        ("src_code", ctx.source.code.as_str()),
        ("trans_code", candidate.code.as_str()),
        ("scope", scope.as_str()),
    ]);
    fixed_candidate(PromptTemplateId::FixWithScope, &b, candidate, ctx.target, latest_revision, gateway)
}

fn render_input(test: &TestCase) -> String {
    test.input.render()
}

/// Summarizes the first failing test of `report` for a repair prompt.
pub fn describe_failure(report: &TestReport, tests: &[TestCase]) -> Option<ErrorSummary> {
    let verdict = report.first_failure()?;
    let test = tests.iter().find(|t| t.id == verdict.test_id);
    let input = test.map(render_input).unwrap_or_default();
    let expected = test.map(|t| t.expected.value.text().to_owned()).unwrap_or_default();
    let o = &verdict.outcome;
    let failed = report.total - report.pass_count;
    let mut raw = alloc::format!("{failed} of {} tests failed.\n", report.total);
    let label = match test.map(|t| &t.expected.value) {
        Some(OracleValue::ReturnValue(_)) => "Expected return value",
        _ => "Expected output",
    };
    let body = match o.status {
        OutcomeStatus::CompileError => o.stderr.clone(),
        OutcomeStatus::Timeout => alloc::format!("Execution timed out on input:\n{input}"),
        OutcomeStatus::RuntimeError => {
            alloc::format!("Runtime error (exit code {}) on input:\n{input}\n{}", o.exit_code, o.stderr.trim_end())
        }
        OutcomeStatus::AssertionFail => {
            alloc::format!("Assertion failed on input:\n{input}\n{}", o.stderr.trim_end())
        }
        OutcomeStatus::OutputMismatch | OutcomeStatus::Pass => alloc::format!(
            "Wrong output on input:\n{input}\n{label}:\n{expected}\nActual output:\n{}",
            o.stdout.trim_end()
        ),
    };
    raw.push_str(&body);
    Some(summarize_error(&raw, o.status))
}

/// Why the loop ended early.
enum Halt {
    Converged,
    Stop(String),
}

fn gateway_halt(e: &GatewayError) -> Halt {
    Halt::Stop(match e {
        GatewayError::BudgetExhausted { .. } => "llm call budget exhausted".into(),
        other => alloc::format!("{other}"),
    })
}

struct Run<'a, B: Backend, H: TestHarness> {
    task: &'a TranslationTask,
    config: &'a RefineConfig,
    gateway: Gateway<B>,
    harness: &'a mut H,
    state: PipelineState,
    tests: Vec<TestCase>,
    nlspec: Option<NLSpecification>,
    translate_retries: u32,
}

struct Evaluated {
    candidate: CandidateTranslation,
    report: TestReport,
}

impl<'a, B: Backend, H: TestHarness> Run<'a, B, H> {
    fn ctx(&self) -> FixContext<'a> {
        FixContext {
            source: &self.task.source,
            target: self.task.target_language,
            max_rounds: self.task.budget.max_fix_rounds_per_error_kind,
        }
    }

    fn emit(&mut self, mut event: StageEvent) {
        self.sync_calls();
        event.llm_call_index = self.gateway.calls_used();
        self.state.stage_log.push(event);
    }

    fn note(&mut self, name: &str, detail: Option<String>) {
        let mut e = StageEvent::new(name, 0);
        e.detail = detail;
        self.emit(e);
    }

    /// Logs calls made since the last sync, one `llm_call` event each.
    fn sync_calls(&mut self) {
        let logged = self.state.stage_log.iter().filter(|e| e.event == "llm_call").count();
        let new: Vec<CallRecord> = self.gateway.call_log()[logged..].to_vec();
        for record in new {
            let mut e = StageEvent::new("llm_call", record.llm_call_index);
            e.template = Some(record.template);
            self.state.stage_log.push(e);
        }
        self.state.llm_calls_used = self.gateway.calls_used();
    }

    fn candidate_event(&mut self, name: &str, c: &CandidateTranslation) {
        self.state.latest_revision = Some(self.state.latest_revision.map_or(c.revision, |r| r.max(c.revision)));
        let mut e = StageEvent::new(name, 0);
        e.revision = Some(c.revision);
        e.detail = Some(c.input_form.as_str().into());
        self.emit(e);
    }

    fn latest(&self) -> u32 {
        self.state.latest_revision.unwrap_or(0)
    }

    fn agent_halt(&mut self, op: &str, e: AgentError) -> Halt {
        match e {
            AgentError::Gateway(g) => gateway_halt(&g),
            AgentError::FixRoundsExhausted => Halt::Stop(alloc::format!("{op}: fix rounds exhausted")),
            other => Halt::Stop(alloc::format!("{op}: {other}")),
        }
    }

    fn harness_halt(&mut self, e: HarnessError) -> Halt {
        Halt::Stop(alloc::format!("{e}"))
    }

    fn translate_from(&mut self, form: InputForm) -> Result<Option<CandidateTranslation>, Halt> {
        let latest = self.state.latest_revision;
        let result = translate(
            form,
            &self.task.source,
            self.nlspec.as_ref(),
            self.task.target_language,
            &self.task.id,
            latest,
            &mut self.gateway,
        );
        match result {
            Ok((c, _)) => {
                self.candidate_event("translated", &c);
                Ok(Some(c))
            }
            Err(AgentError::NoCode) => {
                self.note("no_code", Some(form.as_str().into()));
                Ok(None)
            }
            Err(e) => Err(self.agent_halt("translate", e)),
        }
    }

    /// Compile-checks and repairs until the candidate compiles or compile
    /// rounds run out. Returns the last candidate either way.
    fn compile_loop(&mut self, mut c: CandidateTranslation) -> Result<CandidateTranslation, Halt> {
        loop {
            let summary = match self.harness.compile_check(&c) {
                Ok(None) => {
                    let mut e = StageEvent::new("compile_ok", 0);
                    e.revision = Some(c.revision);
                    self.emit(e);
                    return Ok(c);
                }
                Ok(Some(summary)) => summary,
                Err(e) => return Err(self.harness_halt(e)),
            };
            let mut e = StageEvent::new("compile_error", 0);
            e.revision = Some(c.revision);
            e.detail = Some(summary.message.clone());
            self.emit(e);
            let ctx = self.ctx();
            let latest = self.latest();
            match fix_compile_error(ctx, &c, &summary, &mut self.state.fix_rounds_used, latest, &mut self.gateway) {
                Ok(next) => {
                    self.candidate_event("compile_fixed", &next);
                    c = next;
                }
                Err(AgentError::NoCode) => self.note("no_code", Some("FixCompile".into())),
                Err(AgentError::FixRoundsExhausted) => {
                    self.note("fix_rounds_exhausted", Some(OutcomeStatus::CompileError.as_str().into()));
                    return Ok(c);
                }
                Err(e) => return Err(self.agent_halt("fix compile", e)),
            }
        }
    }

    fn prepare_tests(&mut self, working: &CandidateTranslation) -> Result<(), Halt> {
        let provided = &self.task.provided_tests;
        if !provided.is_empty() && self.config.test_policy == TestPolicy::PreferProvided {
            self.tests = provided.clone();
            self.note("tests_provided", Some(alloc::format!("{}", self.tests.len())));
            return Ok(());
        }
        let (code, language) = match self.config.testgen_from {
            TestGenSource::Source => (self.task.source.code.as_str(), self.task.source.language),
            TestGenSource::Translated => (working.code.as_str(), self.task.target_language),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let inputs = generate_test_inputs(
            code,
            language,
            &self.task.source.entry,
            self.config.test_count.max(1),
            provided.first(),
            &mut rng,
            &mut self.gateway,
        );
        let inputs = match inputs {
            Ok(inputs) => inputs,
            Err(e) => return Err(self.agent_halt("test generation", e)),
        };
        let mut discarded = 0usize;
        for (i, input) in inputs.into_iter().enumerate() {
            debug_assert_eq!(input.origin, TestOrigin::Generated);
            match self.harness.derive_oracle(&input) {
                Ok(expected) => {
                    self.tests.push(TestCase { id: alloc::format!("gen-{i}"), input, expected })
                }
                Err(HarnessError::OracleFailure(_)) | Err(HarnessError::UnsupportedArgumentType(_)) => {
                    discarded += 1
                }
                Err(e) => return Err(self.harness_halt(e)),
            }
        }
        self.note(
            "tests_generated",
            Some(alloc::format!("{} kept, {discarded} discarded", self.tests.len())),
        );
        if self.tests.is_empty() {
            return Err(Halt::Stop("no usable tests".into()));
        }
        Ok(())
    }

    fn evaluate(&mut self, candidate: CandidateTranslation) -> Result<Evaluated, Halt> {
        let report = match self.harness.run_suite(&candidate, &self.tests) {
            Ok(r) => r,
            Err(e) => return Err(self.harness_halt(e)),
        };
        self.state.observe(&candidate, &report);
        let mut e = StageEvent::new("suite", 0);
        e.revision = Some(candidate.revision);
        e.pass_count = Some(report.pass_count);
        e.detail = Some(alloc::format!("{}/{} {}", report.pass_count, report.total, candidate.input_form));
        self.emit(e);
        Ok(Evaluated { candidate, report })
    }

    /// Keeps `working` unless `next` passes at least as many tests.
    fn adopt(&mut self, working: Evaluated, next: Evaluated) -> Evaluated {
        if next.report.pass_count >= working.report.pass_count {
            next
        } else {
            let mut e = StageEvent::new("kept_working", 0);
            e.revision = Some(working.candidate.revision);
            self.emit(e);
            working
        }
    }

    fn check_converged(&self, working: &Evaluated) -> Result<(), Halt> {
        if working.report.all_pass() {
            Err(Halt::Converged)
        } else {
            Ok(())
        }
    }

    fn translate_compile_evaluate(&mut self, form: InputForm) -> Result<Option<Evaluated>, Halt> {
        let Some(c) = self.translate_from(form)? else {
            return Ok(None);
        };
        let c = self.compile_loop(c)?;
        self.evaluate(c).map(Some)
    }

    fn initial(&mut self) -> Result<CandidateTranslation, Halt> {
        loop {
            if let Some(c) = self.translate_from(InputForm::SourceCode)? {
                return Ok(c);
            }
            self.translate_retries += 1;
            if self.translate_retries >= self.task.budget.max_fix_rounds_per_error_kind {
                return Err(Halt::Stop("no code in translation completions".into()));
            }
        }
    }

    fn run(&mut self) -> Result<(), Halt> {
        let first = self.initial()?;
        let first = self.compile_loop(first)?;
        self.prepare_tests(&first)?;
        let mut working = self.evaluate(first)?;
        self.check_converged(&working)?;

        let toggles = self.task.toggles;
        if toggles.nlspec_augmentation {
            match generate_nlspec(&self.task.source, &self.task.id, None, &mut self.gateway) {
                Ok(spec) => {
                    self.nlspec = Some(spec);
                    self.note("nlspec_generated", None);
                    if let Some(spec_run) = self.translate_compile_evaluate(InputForm::NlSpec)? {
                        let form = select_input_form(&self.state, &toggles);
                        self.state.current_input_form = form;
                        self.note("input_form", Some(form.as_str().into()));
                        if form == InputForm::NlSpec {
                            working = spec_run;
                        }
                    }
                }
                Err(AgentError::SpecEmpty) => self.note("nlspec_empty", None),
                Err(e) => return Err(self.agent_halt("nlspec generation", e)),
            }
            self.check_converged(&working)?;
        }

        loop {
            if toggles.nlspec_validation && working.report.has_failures() {
                if let Some(spec) = self.nlspec.clone() {
                    match validate_nlspec(&self.task.source, &spec, &working.report, &mut self.gateway) {
                        Ok(revised) => {
                            let mut e = StageEvent::new("nlspec_validated", 0);
                            e.revision = Some(revised.revision);
                            self.nlspec = Some(revised);
                            self.emit(e);
                            if let Some(next) = self.translate_compile_evaluate(InputForm::NlSpec)? {
                                let form = select_input_form(&self.state, &toggles);
                                self.state.current_input_form = form;
                                working = self.adopt(working, next);
                                self.check_converged(&working)?;
                            }
                        }
                        Err(AgentError::SpecEmpty) => self.note("nlspec_empty", None),
                        Err(e) => return Err(self.agent_halt("nlspec validation", e)),
                    }
                }
            }

            let Some(summary) = describe_failure(&working.report, &self.tests) else {
                return Err(Halt::Stop("no failing test to repair".into()));
            };
            let kind = summary.category;
            let ctx = self.ctx();
            let fixed = if kind == OutcomeStatus::CompileError {
                let latest = self.latest();
                fix_compile_error(ctx, &working.candidate, &summary, &mut self.state.fix_rounds_used, latest, &mut self.gateway)
            } else {
                let bug_info = self.localize(&working, &summary)?;
                let latest = self.latest();
                match bug_info {
                    Some(info) => fix_within_scope(
                        ctx,
                        &working.candidate,
                        &info,
                        kind,
                        &mut self.state.fix_rounds_used,
                        latest,
                        &mut self.gateway,
                    ),
                    None => fix_general_error(
                        ctx,
                        &working.candidate,
                        &summary,
                        &mut self.state.fix_rounds_used,
                        latest,
                        &mut self.gateway,
                    ),
                }
            };
            match fixed {
                Ok(next) => {
                    self.candidate_event("fixed", &next);
                    let next = self.compile_loop(next)?;
                    let next = self.evaluate(next)?;
                    working = self.adopt(working, next);
                    self.check_converged(&working)?;
                }
                Err(AgentError::NoCode) => self.note("no_code", Some(kind.as_str().into())),
                Err(e) => return Err(self.agent_halt(kind.as_str(), e)),
            }
        }
    }

    /// SBFL lines when coverage splits passing from failing tests, else a
    /// model-estimated scope when enabled, else nothing.
    fn localize(&mut self, working: &Evaluated, summary: &ErrorSummary) -> Result<Option<BugInfo>, Halt> {
        let report = &working.report;
        if report.pass_count > 0 && report.has_failures() {
            match self.harness.collect_coverage(&working.candidate, &self.tests, report) {
                Ok(matrix) => {
                    let lines = sbfl::build_counts(&matrix)
                        .map(|counts| sbfl::top_suspicious(&sbfl::score(&counts), self.config.sbfl_top_k))
                        .unwrap_or_default();
                    if !lines.is_empty() {
                        let info = BugInfo::SuspiciousLines(lines);
                        self.note("sbfl", Some(info.render()));
                        return Ok(Some(info));
                    }
                    self.note("sbfl_empty", None);
                }
                Err(HarnessError::CoverageUnavailable(why)) => self.note("coverage_unavailable", Some(why)),
                Err(e) => return Err(self.harness_halt(e)),
            }
        }
        if self.task.toggles.scope_estimation {
            let ctx = self.ctx();
            let toggles = self.task.toggles;
            match estimate_bug_scope(ctx, &working.candidate, summary, &toggles, &mut self.gateway) {
                Ok(scope) => {
                    let info = BugInfo::Scope(scope);
                    self.note("bug_scope", Some(info.render()));
                    return Ok(Some(info));
                }
                Err(AgentError::ScopeParse) => self.note("scope_unparsed", None),
                Err(e) => return Err(self.agent_halt("scope estimation", e)),
            }
        }
        Ok(None)
    }
}

/// Runs the whole loop for `task`. The call budget is the task's.
pub fn refine<B: Backend, H: TestHarness>(
    task: &TranslationTask,
    config: &RefineConfig,
    backend: B,
    harness: &mut H,
) -> RefinementResult {
    let gateway = Gateway::new(backend, config.params.clone(), task.budget.max_total_llm_calls);
    let mut run = Run {
        task,
        config,
        gateway,
        harness,
        state: PipelineState::default(),
        tests: Vec::new(),
        nlspec: None,
        translate_retries: 0,
    };
    run.note("start", Some(alloc::format!("{} -> {}", task.source.language.as_str(), task.target_language.as_str())));
    let halt = match run.run() {
        Ok(()) => Halt::Stop("loop ended".into()),
        Err(h) => h,
    };
    let stop_reason = match halt {
        Halt::Converged => {
            run.note("converged", None);
            String::from("converged")
        }
        Halt::Stop(reason) => {
            run.note("stopped", Some(reason.clone()));
            reason
        }
    };
    let final_report = run
        .state
        .best_report
        .clone()
        .unwrap_or_else(|| TestReport::new(&task.id, run.state.latest_revision.unwrap_or(0), Vec::new()));
    let converged = final_report.all_pass();
    RefinementResult {
        task_id: task.id.clone(),
        final_candidate: run.state.best_candidate.clone(),
        final_report,
        converged,
        events: run.state.stage_log.clone(),
        llm_calls_used: run.gateway.calls_used(),
        call_log: run.gateway.call_log().to_vec(),
        tests: run.tests.clone(),
        nlspec: run.nlspec.clone(),
        stop_reason,
    }
}
