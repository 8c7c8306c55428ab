//! Command-line front end: `translate`, `bench` and `report`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use xlate_core::gateway::Backend;
use xlate_core::harness::{ExecutionLimits, TestReport};
use xlate_core::model::{
    validate_task_with, BudgetSpec, LanguageId, ManifestEntryKind, ManifestTest, StageToggles, TaskManifestEntry,
};
use xlate_core::prompt::GenerationParams;
use xlate_core::refine::{events_to_jsonl, refine, RefineConfig, TestGenSource, TestPolicy};

use crate::bench::{
    ablation_run, assemble, load_dataset, load_transcript, run_benchmark, write_outputs, BackendFactory, BenchConfig,
    BudgetOverride, HttpFactory, TranscriptSource,
};
use crate::executor::SandboxHarness;
use crate::http::{HttpBackend, HttpConfig};
use crate::report::{render, Format, IssueCount};
use crate::toolchain::Toolchains;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "xlate", version, about = "Translate programs between languages with a model-driven repair loop")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Translate one program and refine it until its tests pass.
    Translate(TranslateArgs),
    /// Run every task of a manifest and report accuracy per language pair.
    Bench(BenchArgs),
    /// Render tables from a saved report.json.
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Replay a mock transcript (file, or directory of `<task-id>.jsonl`) instead of calling a model.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// JSON config file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    #[arg(long)]
    pub model: Option<String>,
    /// Seed for the test-flavor draw.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of generated tests.
    #[arg(long)]
    pub test_count: Option<usize>,
    /// Which program the test generator is shown.
    #[arg(long, value_enum)]
    pub testgen_from: Option<TestgenFrom>,
    /// Refine on generated tests even when the task provides its own.
    #[arg(long)]
    pub always_generate: bool,
    #[arg(long)]
    pub max_fix_rounds: Option<u32>,
    #[arg(long)]
    pub max_llm_calls: Option<u32>,
    /// Per-execution timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Skip specification generation; implies --no-nlspec-validation.
    #[arg(long)]
    pub no_nlspec: bool,
    #[arg(long)]
    pub no_nlspec_validation: bool,
    #[arg(long)]
    pub no_scope_estimation: bool,
    /// Scratch directory for builds; failing runs are kept there.
    #[arg(long)]
    pub work_root: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestgenFrom {
    Source,
    Translated,
}

#[derive(Args, Debug)]
pub struct TranslateArgs {
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
    #[arg(long, value_enum, default_value = "stdio")]
    pub mode: Mode,
    /// Entry function name (function mode).
    #[arg(long)]
    pub function: Option<String>,
    /// JSON list of `{"input", "expected"}` tests.
    #[arg(long)]
    pub tests: Option<PathBuf>,
    #[arg(long, default_value = "xlate-out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Stdio,
    Function,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Also run the four cumulative stage configurations.
    #[arg(long)]
    pub ablate: bool,
    #[arg(long, default_value = "xlate-bench")]
    pub out: PathBuf,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "txt")]
    pub format: OutFormat,
    /// JSON list of `{"name", "issues", "nloc"}` rows.
    #[arg(long)]
    pub issues: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Txt,
    Md,
}

/// Keys accepted in `--config`; same meaning as the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    transcript: Option<PathBuf>,
    temperature: Option<f64>,
    max_tokens: Option<u32>,
    model: Option<String>,
    seed: Option<u64>,
    test_count: Option<usize>,
    testgen_from: Option<TestgenFrom>,
    always_generate: Option<bool>,
    max_fix_rounds: Option<u32>,
    max_llm_calls: Option<u32>,
    timeout: Option<f64>,
    no_nlspec: Option<bool>,
    no_nlspec_validation: Option<bool>,
    no_scope_estimation: Option<bool>,
    work_root: Option<PathBuf>,
    parallelism: Option<usize>,
}

/// Validated settings shared by every command.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub transcript: Option<PathBuf>,
    pub http: Option<HttpConfig>,
    pub refine: RefineConfig,
    pub toggles: StageToggles,
    pub budget: BudgetOverride,
    pub work_root: PathBuf,
    pub parallelism: Option<usize>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn cfg_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

impl CliConfig {
    pub fn resolve(common: &Common, parallelism: Option<usize>) -> Result<Self, ConfigError> {
        let file = match &common.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| cfg_err(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| cfg_err(format!("invalid config {}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        let mut params = GenerationParams::default();
        if let Some(t) = common.temperature.or(file.temperature) {
            if !(0.0..=2.0).contains(&t) {
                return Err(cfg_err(format!("temperature {t} outside [0, 2]")));
            }
            params.temperature = t;
        }
        if let Some(m) = common.max_tokens.or(file.max_tokens) {
            if m == 0 {
                return Err(cfg_err("max_tokens must be positive"));
            }
            params.max_tokens = m;
        }
        if let Some(m) = common.model.clone().or(file.model) {
            params.model_name = m;
        }
        let mut refine = RefineConfig { params, ..RefineConfig::default() };
        if let Some(s) = common.seed.or(file.seed) {
            refine.seed = s;
        }
        if let Some(n) = common.test_count.or(file.test_count) {
            if n == 0 {
                return Err(cfg_err("test_count must be positive"));
            }
            refine.test_count = n;
        }
        if let Some(f) = common.testgen_from.or(file.testgen_from) {
            refine.testgen_from = match f {
                TestgenFrom::Source => TestGenSource::Source,
                TestgenFrom::Translated => TestGenSource::Translated,
            };
        }
        if common.always_generate || file.always_generate.unwrap_or(false) {
            refine.test_policy = TestPolicy::AlwaysGenerate;
        }
        let no_nlspec = common.no_nlspec || file.no_nlspec.unwrap_or(false);
        let no_validation = no_nlspec || common.no_nlspec_validation || file.no_nlspec_validation.unwrap_or(false);
        let no_scope = common.no_scope_estimation || file.no_scope_estimation.unwrap_or(false);
        let toggles = StageToggles::new(!no_nlspec, !no_validation, !no_scope).map_err(|e| cfg_err(e.to_string()))?;
        let budget = BudgetOverride {
            max_fix_rounds: common.max_fix_rounds.or(file.max_fix_rounds),
            max_llm_calls: common.max_llm_calls.or(file.max_llm_calls),
            timeout_secs: common.timeout.or(file.timeout),
        };
        if budget.max_llm_calls == Some(0) {
            return Err(cfg_err("max_llm_calls must be positive"));
        }
        if let Some(t) = budget.timeout_secs {
            if !(t.is_finite() && t > 0.0) {
                return Err(cfg_err("timeout must be a positive number of seconds"));
            }
        }
        let transcript = common.transcript.clone().or(file.transcript);
        let http = match &transcript {
            Some(p) if !p.exists() => return Err(cfg_err(format!("transcript {} not found", p.display()))),
            Some(_) => None,
            None => Some(HttpConfig::from_env().ok_or_else(|| {
                cfg_err(format!(
                    "no model backend: pass --transcript or set {} (or OPENAI_API_KEY)",
                    crate::http::ENV_API_KEY
                ))
            })?),
        };
        let parallelism = parallelism.or(file.parallelism);
        if parallelism == Some(0) {
            return Err(cfg_err("parallelism must be positive"));
        }
        Ok(CliConfig {
            transcript,
            http,
            refine,
            toggles,
            budget,
            work_root: common.work_root.clone().or(file.work_root).unwrap_or_else(|| std::env::temp_dir().join("xlate-work")),
            parallelism,
        })
    }

    fn factory(&self) -> Box<dyn BackendFactory> {
        match (&self.transcript, &self.http) {
            (Some(t), _) => Box::new(TranscriptSource::new(t)),
            (None, Some(h)) => Box::new(HttpFactory(h.clone())),
            (None, None) => unreachable!("resolve guarantees a backend"),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, cancel: Arc<AtomicBool>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Translate(a) => cmd_translate(&a),
        Command::Bench(a) => cmd_bench(&a, cancel),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn extension(lang: LanguageId) -> &'static str {
    match lang {
        LanguageId::C => "c",
        LanguageId::Cpp => "cpp",
        LanguageId::Go => "go",
        LanguageId::Java => "java",
        LanguageId::Python => "py",
    }
}

pub fn cmd_translate(args: &TranslateArgs) -> Result<i32, ConfigError> {
    let config = CliConfig::resolve(&args.common, None)?;
    let code = fs::read_to_string(&args.src).map_err(|e| cfg_err(format!("cannot read {}: {e}", args.src.display())))?;
    let tests = match &args.tests {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| cfg_err(format!("cannot read {}: {e}", p.display())))?;
            Some(
                serde_json::from_str::<Vec<ManifestTest>>(&text)
                    .map_err(|e| cfg_err(format!("invalid tests {}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    let id = args.src.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "task".into());
    let entry = TaskManifestEntry {
        id,
        source_language: args.from.clone(),
        target_language: args.to.clone(),
        code: Some(code),
        path: None,
        entry: ManifestEntryKind {
            mode: match args.mode {
                Mode::Stdio => "stdio".into(),
                Mode::Function => "function".into(),
            },
            function_name: args.function.clone(),
            arity: None,
        },
        tests,
        budget: Some(BudgetSpec::default()),
    };
    let mut task = validate_task_with(&entry, config.toggles).map_err(|e| cfg_err(e.to_string()))?;
    config.budget.apply(&mut task.budget);
    let tools = Toolchains::discover();
    for lang in [task.source.language, task.target_language] {
        if let Some(missing) = tools.missing_for(lang) {
            return Err(cfg_err(missing));
        }
    }
    let backend: Box<dyn Backend + Send> = match (&config.transcript, &config.http) {
        (Some(t), _) => Box::new(load_transcript(t).map_err(cfg_err)?),
        (None, Some(h)) => Box::new(HttpBackend::new(h.clone())),
        (None, None) => unreachable!(),
    };
    let limits = ExecutionLimits { timeout: task.budget.per_run_timeout, ..ExecutionLimits::default() };
    let mut harness =
        SandboxHarness::new(&task.id, task.source.clone(), task.target_language, limits, tools, &config.work_root);
    let start = Instant::now();
    let result = refine(&task, &config.refine, backend, &mut harness);
    fs::create_dir_all(&args.out).map_err(|e| cfg_err(format!("cannot create {}: {e}", args.out.display())))?;
    let write = |name: &str, body: &str| {
        fs::write(args.out.join(name), body).map_err(|e| cfg_err(format!("cannot write {name}: {e}")))
    };
    if let Some(c) = &result.final_candidate {
        write(&format!("translated.{}", extension(task.target_language)), &c.code)?;
    }
    write("events.jsonl", &events_to_jsonl(&result.events))?;
    write("test_report.json", &report_json(&result.final_report, &result))?;
    eprintln!(
        "{}: {} ({}/{} tests, {} LLM calls, {:.1}s, {})",
        task.id,
        if result.converged { "converged" } else { "not converged" },
        result.final_report.pass_count,
        result.final_report.total,
        result.llm_calls_used,
        start.elapsed().as_secs_f64(),
        result.stop_reason
    );
    Ok(if result.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn report_json(report: &TestReport, result: &xlate_core::refine::RefinementResult) -> String {
    let v = serde_json::json!({
        "task_id": result.task_id,
        "converged": result.converged,
        "stop_reason": result.stop_reason,
        "llm_calls_used": result.llm_calls_used,
        "report": report,
        "tests": result.tests,
    });
    serde_json::to_string_pretty(&v).unwrap_or_default()
}

pub fn cmd_bench(args: &BenchArgs, cancel: Arc<AtomicBool>) -> Result<i32, ConfigError> {
    let config = CliConfig::resolve(&args.common, args.parallelism)?;
    let dataset = load_dataset(&args.manifest).map_err(|e| cfg_err(e.to_string()))?;
    for bad in &dataset.invalid {
        eprintln!("invalid task {}: {}", bad.id, bad.error);
    }
    let mut bench = BenchConfig::new(&config.work_root);
    bench.refine = config.refine.clone();
    bench.toggles = config.toggles;
    bench.budget = config.budget;
    bench.cancel = cancel;
    if let Some(p) = config.parallelism {
        bench.parallelism = p;
    }
    let factory = config.factory();
    let start = Instant::now();
    let report = if args.ablate {
        let rows = ablation_run(&dataset, &bench, factory.as_ref()).map_err(|e| cfg_err(e.to_string()))?;
        let last = rows.last().map(|r| r.tasks.clone()).unwrap_or_default();
        let mut report =
            assemble(&dataset, last, start.elapsed().as_millis() as u64, bench.cancel.load(Ordering::SeqCst));
        report.total_llm_calls = rows.iter().flat_map(|r| &r.tasks).map(|t| t.llm_calls as u64).sum();
        report.ablation = Some(rows);
        report
    } else {
        run_benchmark(&dataset, &bench, factory.as_ref()).map_err(|e| cfg_err(e.to_string()))?
    };
    write_outputs(&report, &args.out).map_err(|e| cfg_err(format!("cannot write report: {e}")))?;
    print!("{}", render(&report, Format::Text, None));
    if report.ran() == 0 {
        eprintln!("no task ran");
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

pub fn cmd_report(args: &ReportArgs) -> Result<i32, ConfigError> {
    let report = read_report(&args.input)?;
    let issues = match &args.issues {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| cfg_err(format!("cannot read {}: {e}", p.display())))?;
            Some(
                serde_json::from_str::<Vec<IssueCount>>(&text)
                    .map_err(|e| cfg_err(format!("invalid issue file {}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    let format = match args.format {
        OutFormat::Txt => Format::Text,
        OutFormat::Md => Format::Markdown,
    };
    print!("{}", render(&report, format, issues.as_deref()));
    Ok(EXIT_OK)
}

pub fn read_report(path: &Path) -> Result<crate::bench::BenchmarkReport, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| cfg_err(format!("malformed report {}: {e}", path.display())))
}
