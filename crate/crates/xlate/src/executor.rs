//! Compile-and-run harness over local toolchains.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use xlate_core::compare::{compare_output_with, Whitespace};
use xlate_core::coverage::{self, CoverageMatrix, LineCoverage};
use xlate_core::harness::{
    classify, ExecutionLimits, ExecutionOutcome, HarnessError, OutcomeStatus, RunObservation, TestHarness,
    TestReport, TestVerdict,
};
use xlate_core::model::{EntryKind, Oracle, OracleSource, OracleValue, SourceProgram, TestCase, TestInput, TestPayload};
use xlate_core::summarize::{summarize_error, ErrorSummary};
use xlate_core::translate::CandidateTranslation;
use xlate_core::LanguageId;

use crate::drivers::{self, DriverCase, DriverError, Layout, PY_TRACER};
use crate::sandbox::{self, Invocation, RunOutput};
use crate::toolchain::{Tool, Toolchains};

pub const DEFAULT_COMPILE_TIMEOUT: Duration = Duration::from_secs(120);

/// A scratch directory removed on drop unless marked failed.
#[derive(Debug)]
pub struct Scratch {
    path: PathBuf,
    keep: bool,
}

impl Scratch {
    fn create(path: PathBuf) -> io::Result<Self> {
        if path.exists() {
            fs::remove_dir_all(&path)?;
        }
        fs::create_dir_all(&path)?;
        Ok(Scratch { path, keep: false })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn fail(&mut self) {
        self.keep = true;
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        if !self.keep {
            let _ = fs::remove_dir_all(&self.path);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BuildKind {
    Check,
    Run,
    Coverage,
}

struct Built {
    scratch: Scratch,
    lang: LanguageId,
    layout: Layout,
}

fn io_err(e: io::Error) -> HarnessError {
    HarnessError::Io(e.to_string())
}

fn sanitize_component(s: &str) -> String {
    let out: String =
        s.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect();
    if out.is_empty() || out.chars().all(|c| c == '.') {
        "task".into()
    } else {
        out
    }
}

fn with_newline(stdin: &str) -> String {
    if stdin.is_empty() || stdin.ends_with('\n') {
        stdin.to_string()
    } else {
        format!("{stdin}\n")
    }
}

pub struct SandboxHarness {
    task_id: String,
    source: SourceProgram,
    target: LanguageId,
    limits: ExecutionLimits,
    compile_timeout: Duration,
    tools: Toolchains,
    work_root: PathBuf,
    whitespace: Whitespace,
    seq: u32,
    source_stdio: Option<Result<Built, String>>,
}

impl SandboxHarness {
    pub fn new(
        task_id: &str,
        source: SourceProgram,
        target: LanguageId,
        limits: ExecutionLimits,
        tools: Toolchains,
        work_root: impl Into<PathBuf>,
    ) -> Self {
        SandboxHarness {
            task_id: task_id.into(),
            source,
            target,
            limits,
            compile_timeout: DEFAULT_COMPILE_TIMEOUT,
            tools,
            work_root: work_root.into(),
            whitespace: Whitespace::Normalize,
            seq: 0,
            source_stdio: None,
        }
    }

    pub fn with_whitespace(mut self, whitespace: Whitespace) -> Self {
        self.whitespace = whitespace;
        self
    }

    pub fn with_compile_timeout(mut self, timeout: Duration) -> Self {
        self.compile_timeout = timeout;
        self
    }

    fn scratch(&mut self, purpose: &str) -> Result<Scratch, HarnessError> {
        self.seq += 1;
        let dir = self.work_root.join(sanitize_component(&self.task_id)).join(format!("{:04}-{purpose}", self.seq));
        Scratch::create(dir).map_err(io_err)
    }

    fn tool(&self, tool: Tool) -> Result<PathBuf, HarnessError> {
        self.tools.require(tool).map(Path::to_path_buf)
    }

    fn run(&self, inv: &Invocation, timeout: Duration) -> Result<RunOutput, HarnessError> {
        sandbox::run(inv, timeout, self.limits.output_cap_bytes).map_err(|e| {
            if e.kind() == io::ErrorKind::NotFound {
                HarnessError::ToolchainMissing(format!("{}: {e}", inv.program.display()))
            } else {
                io_err(e)
            }
        })
    }

    /// Writes `layout` into a fresh scratch directory and compiles it.
    /// `Ok(Err(stderr))` is a compile failure.
    fn build(
        &mut self,
        lang: LanguageId,
        layout: Layout,
        purpose: &str,
        kind: BuildKind,
    ) -> Result<Result<Built, String>, HarnessError> {
        for tool in crate::toolchain::required_tools(lang) {
            self.tool(*tool)?;
        }
        let mut scratch = self.scratch(purpose)?;
        let dir = scratch.path().to_path_buf();
        for f in &layout.files {
            fs::write(dir.join(&f.name), &f.text).map_err(io_err)?;
        }
        let coverage = kind == BuildKind::Coverage;
        let steps: Vec<Invocation> = match lang {
            LanguageId::C | LanguageId::Cpp => {
                let compiler = self.tool(if lang == LanguageId::C { Tool::Cc } else { Tool::Cxx })?;
                let std_flag = if lang == LanguageId::C { None } else { Some("-std=c++17") };
                let base = |inv: Invocation| match std_flag {
                    Some(f) => inv.arg(f),
                    None => inv,
                };
                let unit = layout.units[0].clone();
                if kind == BuildKind::Check && !has_c_main(&layout.files[0].text) {
                    vec![base(Invocation::new(&compiler, &dir)).args(["-O0", "-c", unit.as_str(), "-o", "check.o"])]
                } else if coverage {
                    let obj = format!("{}.o", unit.rsplit_once('.').map_or(unit.as_str(), |(s, _)| s));
                    vec![
                        base(Invocation::new(&compiler, &dir)).args(["--coverage", "-O0", "-c", unit.as_str(), "-o", obj.as_str()]),
                        base(Invocation::new(&compiler, &dir)).args(["--coverage", obj.as_str(), "-o", "prog", "-lm"]),
                    ]
                } else {
                    vec![base(Invocation::new(&compiler, &dir)).args(["-O0", unit.as_str(), "-o", "prog", "-lm"])]
                }
            }
            LanguageId::Go => {
                let go = self.tool(Tool::Go)?;
                let mut inv = go_env(Invocation::new(&go, &dir)).arg("build");
                if coverage {
                    inv = inv.arg("-cover");
                }
                vec![inv.args(["-o", "prog"]).args(layout.units.clone())]
            }
            LanguageId::Python => {
                let py = self.tool(Tool::Python)?;
                vec![Invocation::new(&py, &dir).args(["-m", "py_compile", layout.candidate_file.as_str()])]
            }
            LanguageId::Java => {
                let javac = self.tool(Tool::Javac)?;
                vec![Invocation::new(&javac, &dir).args(["-g", "-encoding", "UTF-8", "-d", "."]).args(layout.units.clone())]
            }
        };
        for step in steps {
            let out = self.run(&step, self.compile_timeout)?;
            if !out.success() {
                scratch.fail();
                let mut msg = out.stderr;
                if msg.trim().is_empty() {
                    msg = out.stdout;
                }
                if out.timed_out {
                    msg.push_str("\ncompilation timed out");
                }
                return Ok(Err(msg));
            }
        }
        Ok(Ok(Built { scratch, lang, layout }))
    }

    fn invocation(&self, built: &Built, case: Option<usize>, stdin: &str) -> Result<Invocation, HarnessError> {
        let dir = built.scratch.path();
        let case_arg: Vec<String> = case.map(|i| i.to_string()).into_iter().collect();
        let inv = match built.lang {
            LanguageId::C | LanguageId::Cpp | LanguageId::Go => Invocation::new(dir.join("prog"), dir).args(case_arg),
            LanguageId::Python => {
                let py = self.tool(Tool::Python)?;
                Invocation::new(py, dir).args(["-u", built.layout.units[0].as_str()]).args(case_arg)
            }
            LanguageId::Java => {
                let java = self.tool(Tool::Java)?;
                let class = built.layout.main_class.clone().unwrap_or_else(|| "Main".into());
                Invocation::new(java, dir).args(["-cp", "."]).arg(class).args(case_arg)
            }
        };
        Ok(inv.stdin(with_newline(stdin)))
    }

    fn execute(&self, built: &Built, case: Option<usize>, stdin: &str) -> Result<RunOutput, HarnessError> {
        let inv = self.invocation(built, case, stdin)?;
        self.run(&inv, self.limits.timeout)
    }

    /// Runs one test and records its line coverage.
    fn execute_covered(&self, built: &Built, case: Option<usize>, stdin: &str, i: usize) -> Result<LineCoverage, HarnessError> {
        let dir = built.scratch.path();
        let unavailable = |m: String| HarnessError::CoverageUnavailable(m);
        match built.lang {
            LanguageId::C | LanguageId::Cpp => {
                let gcov = self.tools.get(Tool::Gcov).ok_or_else(|| unavailable("gcov not found".into()))?.to_path_buf();
                for entry in fs::read_dir(dir).map_err(io_err)?.flatten() {
                    if entry.path().extension().is_some_and(|e| e == "gcda") {
                        let _ = fs::remove_file(entry.path());
                    }
                }
                self.execute(built, case, stdin)?;
                let unit = &built.layout.units[0];
                let out = self.run(&Invocation::new(&gcov, dir).arg(unit.as_str()), self.compile_timeout)?;
                let report = dir.join(format!("{}.gcov", built.layout.candidate_file));
                let text = fs::read_to_string(&report)
                    .map_err(|_| unavailable(format!("gcov produced no report: {}", out.stderr.trim())))?;
                coverage::parse_gcov(&text).map_err(|e| unavailable(e.to_string()))
            }
            LanguageId::Go => {
                let go = self.tool(Tool::Go)?;
                let cov_dir = dir.join(format!("cov-{i}"));
                fs::create_dir_all(&cov_dir).map_err(io_err)?;
                let inv = self.invocation(built, case, stdin)?.env("GOCOVERDIR", &cov_dir);
                self.run(&inv, self.limits.timeout)?;
                let text_path = dir.join(format!("cov-{i}.txt"));
                let conv = go_env(Invocation::new(&go, dir))
                    .args(["tool", "covdata", "textfmt"])
                    .arg(format!("-i={}", cov_dir.display()))
                    .arg(format!("-o={}", text_path.display()));
                let out = self.run(&conv, self.compile_timeout)?;
                let text = fs::read_to_string(&text_path)
                    .map_err(|_| unavailable(format!("covdata produced no profile: {}", out.stderr.trim())))?;
                coverage::parse_go_profile(&text, "main.go").map_err(|e| unavailable(e.to_string()))
            }
            LanguageId::Python => {
                let py = self.tool(Tool::Python)?;
                let tracer = dir.join("xl_trace.py");
                if !tracer.exists() {
                    fs::write(&tracer, PY_TRACER).map_err(io_err)?;
                }
                let trace_out = format!("trace-{i}.json");
                let case_arg: Vec<String> = case.map(|c| c.to_string()).into_iter().collect();
                let inv = Invocation::new(&py, dir)
                    .args(["xl_trace.py", trace_out.as_str(), built.layout.candidate_file.as_str()])
                    .arg(built.layout.units[0].as_str())
                    .args(case_arg)
                    .stdin(with_newline(stdin));
                self.run(&inv, self.limits.timeout)?;
                let text = fs::read_to_string(dir.join(&trace_out))
                    .map_err(|_| unavailable("tracer wrote no data".into()))?;
                coverage::parse_python_trace(&text).map_err(|e| unavailable(e.to_string()))
            }
            LanguageId::Java => {
                let (agent, cli) =
                    self.tools.jacoco.clone().ok_or_else(|| unavailable("JaCoCo not configured".into()))?;
                let java = self.tool(Tool::Java)?;
                let exec = format!("jacoco-{i}.exec");
                let mut inv = self.invocation(built, case, stdin)?;
                inv.args.insert(0, format!("-javaagent:{}=destfile={exec}", agent.display()).into());
                self.run(&inv, self.limits.timeout)?;
                let xml = format!("jacoco-{i}.xml");
                let report = Invocation::new(&java, dir)
                    .arg("-jar")
                    .arg(&cli)
                    .args(["report", exec.as_str(), "--classfiles", ".", "--sourcefiles", ".", "--xml", xml.as_str()]);
                self.run(&report, self.compile_timeout)?;
                let text =
                    fs::read_to_string(dir.join(&xml)).map_err(|_| unavailable("JaCoCo wrote no report".into()))?;
                coverage::parse_jacoco_xml(&text, &built.layout.candidate_file).map_err(|e| unavailable(e.to_string()))
            }
        }
    }

    fn cases(&self, tests: &[TestCase]) -> Result<Vec<DriverCase>, HarnessError> {
        tests
            .iter()
            .map(|t| match &t.input.payload {
                TestPayload::Args(args) => {
                    Ok(DriverCase { args: args.clone(), expected: Some(t.expected.value.text().to_string()) })
                }
                TestPayload::Stdin(_) => {
                    Err(HarnessError::UnsupportedArgumentType(format!("test {} has stdin input in function mode", t.id)))
                }
            })
            .collect()
    }

    fn layout_for(&self, lang: LanguageId, code: &str, cases: &[DriverCase]) -> Result<Layout, HarnessError> {
        match &self.source.entry {
            EntryKind::Stdio => Ok(drivers::stdio_layout(lang, code)),
            entry => drivers::function_layout(lang, code, entry, cases).map_err(|e| match e {
                DriverError::UnsupportedArgument(m) => HarnessError::UnsupportedArgumentType(m),
            }),
        }
    }

    fn outcome(&self, run: RunOutput, expected: &str) -> ExecutionOutcome {
        let entry = &self.source.entry;
        let (stdout, matches, asserted, exit_code) = if entry.is_function() {
            match drivers::parse_result(&run.stdout) {
                Some(actual) => {
                    let ok = compare_output_with(&actual, expected, entry, self.whitespace);
                    // The driver's own check is textual; the comparator has the final say.
                    let exit = if run.exit_code == 1 && run.stderr.contains("ASSERT expected=") { 0 } else { run.exit_code };
                    (actual, ok, !ok, exit)
                }
                None => (run.stdout.clone(), false, false, run.exit_code),
            }
        } else {
            let ok = compare_output_with(&run.stdout, expected, entry, self.whitespace);
            (run.stdout.clone(), ok, false, run.exit_code)
        };
        let mut stderr = run.stderr;
        if asserted && !stderr.contains("ASSERT expected=") {
            stderr.push_str(&format!("ASSERT expected={expected} actual={stdout}\n"));
        }
        let status = classify(&RunObservation {
            compile_failed: false,
            timed_out: run.timed_out,
            assertion_reported: asserted,
            exit_code,
            output_matches: matches,
        });
        ExecutionOutcome { status, stdout, stderr, exit_code, duration: run.duration }
    }

    fn ensure_source_stdio(&mut self) -> Result<(), HarnessError> {
        if self.source_stdio.is_none() {
            let layout = drivers::stdio_layout(self.source.language, &self.source.code);
            let built = self.build(self.source.language, layout, "source", BuildKind::Run)?;
            self.source_stdio = Some(built);
        }
        match self.source_stdio.as_ref().expect("just built") {
            Ok(_) => Ok(()),
            Err(msg) => Err(HarnessError::OracleFailure(format!("source does not compile: {}", first_line(msg)))),
        }
    }
}

fn first_line(s: &str) -> &str {
    s.lines().find(|l| !l.trim().is_empty()).unwrap_or("")
}

fn has_c_main(code: &str) -> bool {
    regex::Regex::new(r"\bmain\s*\(").map(|re| re.is_match(code)).unwrap_or(false)
}

fn go_env(inv: Invocation) -> Invocation {
    let inv = inv.env("GOTOOLCHAIN", "local");
    if std::env::var_os("GOCACHE").is_none() && std::env::var_os("HOME").is_none() {
        inv.env("GOCACHE", std::env::temp_dir().join("xlate-gocache"))
    } else {
        inv
    }
}

impl TestHarness for SandboxHarness {
    fn compile_check(&mut self, candidate: &CandidateTranslation) -> Result<Option<ErrorSummary>, HarnessError> {
        let layout = drivers::check_layout(self.target, &candidate.code, &self.source.entry);
        match self.build(self.target, layout, "check", BuildKind::Check)? {
            Ok(_) => Ok(None),
            Err(stderr) => Ok(Some(summarize_error(&stderr, OutcomeStatus::CompileError))),
        }
    }

    fn derive_oracle(&mut self, input: &TestInput) -> Result<Oracle, HarnessError> {
        let oracle = |value| Oracle { value, derived_from: OracleSource::SourceExecution };
        match (&self.source.entry, &input.payload) {
            (EntryKind::Stdio, TestPayload::Stdin(text)) => {
                let text = text.clone();
                self.ensure_source_stdio()?;
                let Some(Ok(built)) = self.source_stdio.as_ref() else { unreachable!("source build checked") };
                let run = self.execute(built, None, &text)?;
                if run.success() {
                    Ok(oracle(OracleValue::Stdout(run.stdout)))
                } else if run.timed_out {
                    Err(HarnessError::OracleFailure("source run timed out".into()))
                } else {
                    Err(HarnessError::OracleFailure(format!("source exited with {}: {}", run.exit_code, first_line(&run.stderr))))
                }
            }
            (EntryKind::Function { .. }, TestPayload::Args(args)) => {
                let case = DriverCase { args: args.clone(), expected: None };
                let layout = self.layout_for(self.source.language, &self.source.code.clone(), &[case])?;
                let mut built = match self.build(self.source.language, layout, "oracle", BuildKind::Run)? {
                    Ok(b) => b,
                    Err(msg) => {
                        return Err(HarnessError::OracleFailure(format!("source driver does not compile: {}", first_line(&msg))))
                    }
                };
                let run = self.execute(&built, Some(0), "")?;
                match drivers::parse_result(&run.stdout) {
                    Some(value) if run.success() => Ok(oracle(OracleValue::ReturnValue(value))),
                    _ => {
                        built.scratch.fail();
                        if run.timed_out {
                            Err(HarnessError::OracleFailure("source run timed out".into()))
                        } else {
                            Err(HarnessError::OracleFailure(format!(
                                "source exited with {}: {}",
                                run.exit_code,
                                first_line(&run.stderr)
                            )))
                        }
                    }
                }
            }
            _ => Err(HarnessError::UnsupportedArgumentType("input payload does not match the entry mode".into())),
        }
    }

    fn run_suite(&mut self, candidate: &CandidateTranslation, tests: &[TestCase]) -> Result<TestReport, HarnessError> {
        let function = self.source.entry.is_function();
        let cases = if function { self.cases(tests)? } else { Vec::new() };
        let layout = self.layout_for(self.target, &candidate.code, &cases)?;
        let mut built = match self.build(self.target, layout, "suite", BuildKind::Run)? {
            Ok(b) => b,
            Err(stderr) => {
                let per_test = tests
                    .iter()
                    .map(|t| TestVerdict { test_id: t.id.clone(), outcome: ExecutionOutcome::compile_error(stderr.clone()) })
                    .collect();
                return Ok(TestReport::new(&candidate.task_id, candidate.revision, per_test));
            }
        };
        let mut per_test = Vec::with_capacity(tests.len());
        for (i, test) in tests.iter().enumerate() {
            let run = match &test.input.payload {
                TestPayload::Stdin(text) if !function => self.execute(&built, None, text)?,
                _ => self.execute(&built, Some(i), "")?,
            };
            let outcome = self.outcome(run, test.expected.value.text());
            per_test.push(TestVerdict { test_id: test.id.clone(), outcome });
        }
        let report = TestReport::new(&candidate.task_id, candidate.revision, per_test);
        if report.has_failures() {
            built.scratch.fail();
        }
        Ok(report)
    }

    fn collect_coverage(
        &mut self,
        candidate: &CandidateTranslation,
        tests: &[TestCase],
        report: &TestReport,
    ) -> Result<CoverageMatrix, HarnessError> {
        if tests.is_empty() {
            return Err(HarnessError::CoverageUnavailable("no tests".into()));
        }
        let function = self.source.entry.is_function();
        let cases = if function { self.cases(tests)? } else { Vec::new() };
        let layout = self.layout_for(self.target, &candidate.code, &cases)?;
        let max_line = layout.candidate_lines;
        let built = match self.build(self.target, layout, "coverage", BuildKind::Coverage)? {
            Ok(b) => b,
            Err(_) => return Err(HarnessError::CoverageUnavailable("candidate does not compile".into())),
        };
        let mut runs = Vec::with_capacity(tests.len());
        let mut verdicts = Vec::with_capacity(tests.len());
        for (i, test) in tests.iter().enumerate() {
            let (case, stdin) = match &test.input.payload {
                TestPayload::Stdin(text) if !function => (None, text.as_str()),
                _ => (Some(i), ""),
            };
            runs.push(self.execute_covered(&built, case, stdin, i)?);
            let passed = report
                .per_test
                .iter()
                .find(|v| v.test_id == test.id)
                .is_some_and(|v| v.outcome.status == OutcomeStatus::Pass);
            verdicts.push(passed);
        }
        if runs.iter().all(|r| r.executable.is_empty()) {
            return Err(HarnessError::CoverageUnavailable("coverage tool produced no data".into()));
        }
        let ids = tests.iter().map(|t| t.id.clone()).collect();
        CoverageMatrix::from_runs(ids, verdicts, &runs, Some(max_line))
            .map_err(|e| HarnessError::CoverageUnavailable(e.to_string()))
    }
}
