//! Dataset ingestion, benchmark runs and ablation staging.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xlate_core::gateway::{Backend, MockTranscript};
use xlate_core::harness::{ExecutionLimits, TestHarness, TestReport};
use xlate_core::metrics::{computational_accuracy, format2, CAResult};
use xlate_core::model::{validate_task_with, RefinementBudget, StageToggles, TaskManifestEntry, TestOrigin, TranslationTask};
use xlate_core::refine::{refine, RefineConfig, RefinementResult, StageEvent};

use crate::executor::SandboxHarness;
use crate::http::{HttpBackend, HttpConfig};
use crate::toolchain::Toolchains;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("manifest unreadable: {0}")]
    ManifestUnreadable(String),
    #[error("dataset has no runnable tasks")]
    EmptyDataset,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub dataset: String,
    pub tasks: Vec<TaskManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidEntry {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub tasks: Vec<TranslationTask>,
    pub invalid: Vec<InvalidEntry>,
}

/// Reads a manifest and validates every entry. `path` fields resolve
/// relative to the manifest's directory.
pub fn load_dataset(path: &Path) -> Result<Dataset, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::ManifestUnreadable(format!("{}: {e}", path.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| BenchError::ManifestUnreadable(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let name = if manifest.dataset.is_empty() {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    } else {
        manifest.dataset.clone()
    };
    let mut tasks: Vec<TranslationTask> = Vec::new();
    let mut invalid = Vec::new();
    for mut entry in manifest.tasks {
        if tasks.iter().any(|t| t.id == entry.id) {
            invalid.push(InvalidEntry { id: entry.id.clone(), error: "duplicate task id".into() });
            continue;
        }
        if entry.code.is_none() {
            if let Some(rel) = &entry.path {
                match fs::read_to_string(base.join(rel)) {
                    Ok(code) => entry.code = Some(code),
                    Err(e) => {
                        invalid.push(InvalidEntry { id: entry.id.clone(), error: format!("cannot read {rel}: {e}") });
                        continue;
                    }
                }
            }
        }
        match validate_task_with(&entry, StageToggles::ALL_ON) {
            Ok(task) => tasks.push(task),
            Err(e) => invalid.push(InvalidEntry { id: entry.id.clone(), error: e.to_string() }),
        }
    }
    Ok(Dataset { name, tasks, invalid })
}

/// Supplies a fresh backend per task; mock transcripts are never shared.
pub trait BackendFactory: Sync {
    fn backend_for(&self, task: &TranslationTask) -> Result<Box<dyn Backend + Send>, String>;
}

/// Mock transcripts: `<dir>/<task-id>.jsonl`, or one file reused (fresh
/// copy) for every task.
pub struct TranscriptSource {
    path: PathBuf,
}

impl TranscriptSource {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        TranscriptSource { path: path.into() }
    }
}

pub fn load_transcript(path: &Path) -> Result<MockTranscript, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read transcript {}: {e}", path.display()))?;
    MockTranscript::from_jsonl(&text).map_err(|e| format!("{}: {e}", path.display()))
}

impl BackendFactory for TranscriptSource {
    fn backend_for(&self, task: &TranslationTask) -> Result<Box<dyn Backend + Send>, String> {
        let file = if self.path.is_dir() { self.path.join(format!("{}.jsonl", task.id)) } else { self.path.clone() };
        Ok(Box::new(load_transcript(&file)?))
    }
}

pub struct HttpFactory(pub HttpConfig);

impl BackendFactory for HttpFactory {
    fn backend_for(&self, _task: &TranslationTask) -> Result<Box<dyn Backend + Send>, String> {
        Ok(Box::new(HttpBackend::new(self.0.clone())))
    }
}

/// Budget fields set on the command line; `None` keeps the task's value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetOverride {
    pub max_fix_rounds: Option<u32>,
    pub max_llm_calls: Option<u32>,
    pub timeout_secs: Option<f64>,
}

impl BudgetOverride {
    pub fn apply(&self, budget: &mut RefinementBudget) {
        if let Some(r) = self.max_fix_rounds {
            budget.max_fix_rounds_per_error_kind = r;
        }
        if let Some(c) = self.max_llm_calls {
            budget.max_total_llm_calls = c;
        }
        if let Some(t) = self.timeout_secs {
            budget.per_run_timeout = std::time::Duration::from_secs_f64(t);
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub refine: RefineConfig,
    pub toggles: StageToggles,
    pub budget: BudgetOverride,
    pub parallelism: usize,
    pub work_root: PathBuf,
    pub output_cap_bytes: usize,
    pub tools: Toolchains,
    pub cancel: Arc<AtomicBool>,
}

impl BenchConfig {
    pub fn new(work_root: impl Into<PathBuf>) -> Self {
        BenchConfig {
            refine: RefineConfig::default(),
            toggles: StageToggles::ALL_ON,
            budget: BudgetOverride::default(),
            parallelism: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            work_root: work_root.into(),
            output_cap_bytes: ExecutionLimits::default().output_cap_bytes,
            tools: Toolchains::discover(),
            cancel: Arc::new(AtomicBool::new(false)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Ran,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub id: String,
    pub source_language: String,
    pub target_language: String,
    pub status: TaskStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub converged: bool,
    /// Passes every evaluation test: the provided tests when the task has
    /// them, otherwise its generated suite.
    pub eval_pass: bool,
    pub eval_passed: usize,
    pub eval_total: usize,
    /// Passes every generated test, when the loop generated tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_pass: Option<bool>,
    pub llm_calls: u32,
    pub stop_reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_code: Option<String>,
    pub wall_ms: u64,
    #[serde(skip)]
    pub events: Vec<StageEvent>,
}

impl TaskOutcome {
    fn not_run(task: &TranslationTask, status: TaskStatus, reason: String) -> Self {
        TaskOutcome {
            id: task.id.clone(),
            source_language: task.source.language.as_str().into(),
            target_language: task.target_language.as_str().into(),
            status,
            reason: Some(reason),
            converged: false,
            eval_pass: false,
            eval_passed: 0,
            eval_total: 0,
            generated_pass: None,
            llm_calls: 0,
            stop_reason: String::new(),
            final_code: None,
            wall_ms: 0,
            events: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated: Option<CAResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<CAResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AblationStage {
    Stage1NoSpec,
    Stage2Augment,
    Stage3Validate,
    Stage4Scope,
}

impl AblationStage {
    pub const ALL: [AblationStage; 4] =
        [AblationStage::Stage1NoSpec, AblationStage::Stage2Augment, AblationStage::Stage3Validate, AblationStage::Stage4Scope];

    pub fn toggles(self) -> StageToggles {
        match self {
            AblationStage::Stage1NoSpec => StageToggles::ALL_OFF,
            AblationStage::Stage2Augment => {
                StageToggles { nlspec_augmentation: true, nlspec_validation: false, scope_estimation: false }
            }
            AblationStage::Stage3Validate => {
                StageToggles { nlspec_augmentation: true, nlspec_validation: true, scope_estimation: false }
            }
            AblationStage::Stage4Scope => StageToggles::ALL_ON,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AblationStage::Stage1NoSpec => "Stage 1 (no NL-spec)",
            AblationStage::Stage2Augment => "Stage 2 (+ NL-spec augmentation)",
            AblationStage::Stage3Validate => "Stage 3 (+ NL-spec validation)",
            AblationStage::Stage4Scope => "Stage 4 (+ bug scope estimation)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub stage: AblationStage,
    pub toggles: StageToggles,
    pub pairs: Vec<PairRow>,
    /// Mean of the per-pair evaluation CAs.
    pub average: f64,
    #[serde(skip)]
    pub tasks: Vec<TaskOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub pairs: Vec<PairRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall: Option<CAResult>,
    pub tasks: Vec<TaskOutcome>,
    #[serde(default)]
    pub invalid: Vec<InvalidEntry>,
    pub total_llm_calls: u64,
    pub wall_ms: u64,
    #[serde(default)]
    pub cancelled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation: Option<Vec<AblationRow>>,
}

impl BenchmarkReport {
    pub fn ran(&self) -> usize {
        self.tasks.iter().filter(|t| t.status == TaskStatus::Ran).count()
    }
}

fn run_task(task: &TranslationTask, config: &BenchConfig, factory: &dyn BackendFactory) -> TaskOutcome {
    if config.cancel.load(Ordering::SeqCst) {
        return TaskOutcome::not_run(task, TaskStatus::Skipped, "cancelled".into());
    }
    for lang in [task.source.language, task.target_language] {
        if let Some(missing) = config.tools.missing_for(lang) {
            return TaskOutcome::not_run(task, TaskStatus::Skipped, missing);
        }
    }
    let mut task = task.clone();
    task.toggles = config.toggles;
    config.budget.apply(&mut task.budget);
    let backend = match factory.backend_for(&task) {
        Ok(b) => b,
        Err(e) => return TaskOutcome::not_run(&task, TaskStatus::Failed, e),
    };
    let limits = ExecutionLimits { timeout: task.budget.per_run_timeout, output_cap_bytes: config.output_cap_bytes };
    let mut harness = SandboxHarness::new(
        &task.id,
        task.source.clone(),
        task.target_language,
        limits,
        config.tools.clone(),
        &config.work_root,
    );
    let start = Instant::now();
    let result = refine(&task, &config.refine, backend, &mut harness);
    let (eval, eval_error) = evaluation_report(&task, &result, &mut harness);
    let generated = result.tests.first().is_some_and(|t| t.input.origin == TestOrigin::Generated);
    TaskOutcome {
        id: task.id.clone(),
        source_language: task.source.language.as_str().into(),
        target_language: task.target_language.as_str().into(),
        status: TaskStatus::Ran,
        reason: eval_error,
        converged: result.converged,
        eval_pass: eval.all_pass(),
        eval_passed: eval.pass_count,
        eval_total: eval.total,
        generated_pass: generated.then_some(result.converged),
        llm_calls: result.llm_calls_used,
        stop_reason: result.stop_reason.clone(),
        final_code: result.final_candidate.as_ref().map(|c| c.code.clone()),
        wall_ms: start.elapsed().as_millis() as u64,
        events: result.events,
    }
}

/// The final candidate's report on the evaluation tests. When the loop
/// already refined against the provided tests that report is reused.
fn evaluation_report<H: TestHarness>(
    task: &TranslationTask,
    result: &RefinementResult,
    harness: &mut H,
) -> (TestReport, Option<String>) {
    let refined_on_provided = result.tests.first().is_some_and(|t| t.input.origin == TestOrigin::Provided);
    if task.provided_tests.is_empty() || refined_on_provided {
        return (result.final_report.clone(), None);
    }
    let Some(candidate) = &result.final_candidate else {
        return (TestReport::new(&task.id, 0, Vec::new()), None);
    };
    match harness.run_suite(candidate, &task.provided_tests) {
        Ok(r) => (r, None),
        Err(e) => (TestReport::new(&task.id, candidate.revision, Vec::new()), Some(e.to_string())),
    }
}

pub fn pair_rows(tasks: &[TaskOutcome]) -> Vec<PairRow> {
    let mut groups: BTreeMap<(String, String), Vec<&TaskOutcome>> = BTreeMap::new();
    for t in tasks.iter().filter(|t| t.status != TaskStatus::Skipped) {
        groups.entry((t.source_language.clone(), t.target_language.clone())).or_default().push(t);
    }
    groups
        .into_iter()
        .map(|((source, target), ts)| {
            let eval_passed = ts.iter().filter(|t| t.eval_pass).count() as u64;
            let gen: Vec<bool> = ts.iter().filter_map(|t| t.generated_pass).collect();
            PairRow {
                source,
                target,
                evaluation: computational_accuracy(eval_passed, ts.len() as u64).ok(),
                generated: computational_accuracy(gen.iter().filter(|g| **g).count() as u64, gen.len() as u64).ok(),
            }
        })
        .collect()
}

pub fn run_benchmark(
    dataset: &Dataset,
    config: &BenchConfig,
    factory: &dyn BackendFactory,
) -> Result<BenchmarkReport, BenchError> {
    if dataset.tasks.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .map_err(|e| BenchError::ManifestUnreadable(format!("cannot start worker pool: {e}")))?;
    let tasks: Vec<TaskOutcome> =
        pool.install(|| dataset.tasks.par_iter().map(|t| run_task(t, config, factory)).collect());
    Ok(assemble(dataset, tasks, start.elapsed().as_millis() as u64, config.cancel.load(Ordering::SeqCst)))
}

pub fn assemble(dataset: &Dataset, tasks: Vec<TaskOutcome>, wall_ms: u64, cancelled: bool) -> BenchmarkReport {
    let ran: Vec<&TaskOutcome> = tasks.iter().filter(|t| t.status == TaskStatus::Ran).collect();
    let overall = computational_accuracy(ran.iter().filter(|t| t.eval_pass).count() as u64, ran.len() as u64).ok();
    BenchmarkReport {
        dataset: dataset.name.clone(),
        pairs: pair_rows(&tasks),
        overall,
        total_llm_calls: tasks.iter().map(|t| t.llm_calls as u64).sum(),
        wall_ms,
        cancelled,
        invalid: dataset.invalid.clone(),
        tasks,
        ablation: None,
    }
}

/// Four full runs with cumulative stage toggles.
pub fn ablation_run(
    dataset: &Dataset,
    config: &BenchConfig,
    factory: &dyn BackendFactory,
) -> Result<Vec<AblationRow>, BenchError> {
    let mut rows = Vec::new();
    for stage in AblationStage::ALL {
        let mut cfg = config.clone();
        cfg.toggles = stage.toggles();
        cfg.work_root = config.work_root.join(format!("stage{}", rows.len() + 1));
        let report = run_benchmark(dataset, &cfg, factory)?;
        let cas: Vec<f64> = report.pairs.iter().filter_map(|p| p.evaluation.map(|c| c.ca)).collect();
        let average = if cas.is_empty() { 0.0 } else { cas.iter().sum::<f64>() / cas.len() as f64 };
        rows.push(AblationRow { stage, toggles: cfg.toggles, pairs: report.pairs, average, tasks: report.tasks });
    }
    Ok(rows)
}

/// Writes `report.json`, the text tables and one event log per task.
pub fn write_outputs(report: &BenchmarkReport, out_dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(out_dir.join("events"))?;
    let json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    fs::write(out_dir.join("report.json"), json)?;
    fs::write(out_dir.join("report.txt"), crate::report::render(report, crate::report::Format::Text, None))?;
    for t in &report.tasks {
        write_events(&out_dir.join("events"), &t.id, &t.events)?;
    }
    if let Some(rows) = &report.ablation {
        for (i, row) in rows.iter().enumerate() {
            let dir = out_dir.join("events").join(format!("stage{}", i + 1));
            fs::create_dir_all(&dir)?;
            for t in &row.tasks {
                write_events(&dir, &t.id, &t.events)?;
            }
        }
    }
    Ok(())
}

pub fn write_events(dir: &Path, id: &str, events: &[StageEvent]) -> std::io::Result<()> {
    if events.is_empty() {
        return Ok(());
    }
    fs::write(dir.join(format!("{id}.jsonl")), xlate_core::refine::events_to_jsonl(events))
}

pub fn format_ca(ca: Option<CAResult>) -> String {
    ca.map_or_else(|| "-".into(), |c| c.formatted())
}

pub fn format_average(avg: f64) -> String {
    format2(avg)
}
