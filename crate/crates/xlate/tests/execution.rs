use std::time::Duration;

use xlate::executor::SandboxHarness;
use xlate::toolchain::Toolchains;
use xlate_core::harness::{ExecutionLimits, HarnessError, OutcomeStatus, TestHarness};
use xlate_core::literal::Literal;
use xlate_core::model::{
    EntryKind, Oracle, OracleSource, OracleValue, SourceProgram, TestCase, TestFlavor, TestInput, TestOrigin,
    TestPayload,
};
use xlate_core::translate::{CandidateTranslation, InputForm};
use xlate_core::LanguageId;

fn func(name: &str) -> EntryKind {
    EntryKind::Function { function_name: name.into(), arity: None }
}

fn harness(source_lang: LanguageId, code: &str, entry: EntryKind, target: LanguageId) -> Option<SandboxHarness> {
    let tools = Toolchains::discover();
    if !tools.supports(source_lang) || !tools.supports(target) {
        eprintln!("skipping: toolchain missing for {source_lang:?} or {target:?}");
        return None;
    }
    let work = tempfile::tempdir().unwrap().keep();
    let limits = ExecutionLimits { timeout: Duration::from_secs(5), output_cap_bytes: 1 << 20 };
    Some(SandboxHarness::new(
        "exec-test",
        SourceProgram { language: source_lang, code: code.into(), entry },
        target,
        limits,
        tools,
        work,
    ))
}

fn cand(code: &str) -> CandidateTranslation {
    CandidateTranslation { code: code.into(), input_form: InputForm::SourceCode, revision: 1, task_id: "exec-test".into() }
}

fn args_case(id: &str, args: Vec<Literal>, expected: &str) -> TestCase {
    TestCase {
        id: id.into(),
        input: TestInput::provided(TestPayload::Args(args)),
        expected: Oracle { value: OracleValue::ReturnValue(expected.into()), derived_from: OracleSource::Dataset },
    }
}

fn stdin_case(id: &str, input: &str, expected: &str) -> TestCase {
    TestCase {
        id: id.into(),
        input: TestInput::provided(TestPayload::Stdin(input.into())),
        expected: Oracle { value: OracleValue::Stdout(expected.into()), derived_from: OracleSource::Dataset },
    }
}

fn generated(payload: TestPayload) -> TestInput {
    TestInput { payload, origin: TestOrigin::Generated, flavor: TestFlavor::Complex }
}

fn statuses(h: &mut SandboxHarness, code: &str, tests: &[TestCase]) -> Vec<OutcomeStatus> {
    h.run_suite(&cand(code), tests).unwrap().per_test.iter().map(|v| v.outcome.status).collect()
}

const PY_DOUBLE: &str = "print(int(input())*2)\n";

#[test]
fn python_stdio_oracle_and_suite() {
    let Some(mut h) = harness(LanguageId::Python, PY_DOUBLE, EntryKind::Stdio, LanguageId::Python) else { return };
    let o = h.derive_oracle(&generated(TestPayload::Stdin("21".into()))).unwrap();
    assert_eq!(o.value, OracleValue::Stdout("42\n".into()));
    assert_eq!(o.derived_from, OracleSource::SourceExecution);
    assert!(matches!(h.derive_oracle(&generated(TestPayload::Stdin("".into()))), Err(HarnessError::OracleFailure(_))));
    let tests = [stdin_case("a", "21", "42"), stdin_case("b", "1", "3")];
    assert_eq!(statuses(&mut h, PY_DOUBLE, &tests), [OutcomeStatus::Pass, OutcomeStatus::OutputMismatch]);
    assert_eq!(statuses(&mut h, "print(int(input()) // 0)\n", &tests[..1]), [OutcomeStatus::RuntimeError]);
    assert_eq!(statuses(&mut h, "while True:\n    pass\n", &tests[..1]), [OutcomeStatus::Timeout]);
    assert_eq!(statuses(&mut h, "print(\n", &tests[..1]), [OutcomeStatus::CompileError]);
    assert!(h.compile_check(&cand("def f(:\n")).unwrap().is_some());
    assert!(h.compile_check(&cand(PY_DOUBLE)).unwrap().is_none());
}

#[test]
fn python_function_assertions() {
    let src = "def add(a, b):\n    return a + b\n";
    let Some(mut h) = harness(LanguageId::Python, src, func("add"), LanguageId::Python) else { return };
    let o = h.derive_oracle(&generated(TestPayload::Args(vec![Literal::Int(2), Literal::Int(3)]))).unwrap();
    assert_eq!(o.value, OracleValue::ReturnValue("5".into()));
    let tests = [
        args_case("ok", vec![Literal::Int(2), Literal::Int(3)], "5"),
        args_case("bad", vec![Literal::Int(2), Literal::Int(3)], "6"),
        args_case("real", vec![Literal::Real(0.1), Literal::Real(0.2)], "0.3"),
    ];
    let report = h.run_suite(&cand(src), &tests).unwrap();
    let st: Vec<_> = report.per_test.iter().map(|v| v.outcome.status).collect();
    assert_eq!(st, [OutcomeStatus::Pass, OutcomeStatus::AssertionFail, OutcomeStatus::Pass]);
    assert!(report.per_test[1].outcome.stderr.contains("ASSERT expected=6 actual=5"));
    let nested = args_case("n", vec![Literal::List(vec![Literal::List(vec![])])], "0");
    assert!(matches!(h.run_suite(&cand(src), &[nested]), Err(HarnessError::UnsupportedArgumentType(_))));
}

#[test]
fn python_function_in_class_with_camel_name() {
    let src = "class Solution:\n    def maxElement(self, xs):\n        return max(xs)\n";
    let Some(mut h) = harness(LanguageId::Python, src, func("max_element"), LanguageId::Python) else { return };
    let list = Literal::List(vec![Literal::Int(1), Literal::Int(5), Literal::Int(3)]);
    let o = h.derive_oracle(&generated(TestPayload::Args(vec![list]))).unwrap();
    assert_eq!(o.value.text(), "5");
}

#[test]
fn c_function_with_list_and_bool() {
    let src = "int max_element(int *a, int n) {\n    int m = a[0];\n    for (int i = 1; i < n; i++)\n        if (a[i] > m) m = a[i];\n    return m;\n}\n\nint is_even(int x) { return x % 2 == 0; }\n";
    let Some(mut h) = harness(LanguageId::C, src, func("max_element"), LanguageId::C) else { return };
    let list = Literal::List(vec![Literal::Int(1), Literal::Int(5), Literal::Int(3)]);
    let o = h.derive_oracle(&generated(TestPayload::Args(vec![list.clone()]))).unwrap();
    assert_eq!(o.value.text(), "5");
    let tests = [args_case("a", vec![list.clone()], "5"), args_case("b", vec![list], "4")];
    assert_eq!(statuses(&mut h, src, &tests), [OutcomeStatus::Pass, OutcomeStatus::AssertionFail]);
    assert_eq!(statuses(&mut h, "int max_element(int *a, int n) { return a[0] }\n", &tests), [OutcomeStatus::CompileError; 2]);

    let Some(mut h) = harness(LanguageId::C, src, func("is_even"), LanguageId::C) else { return };
    let tests = [args_case("t", vec![Literal::Int(4)], "true"), args_case("f", vec![Literal::Int(3)], "false")];
    assert_eq!(statuses(&mut h, src, &tests), [OutcomeStatus::Pass, OutcomeStatus::Pass]);
}

#[test]
fn c_stdio_and_coverage() {
    let src = "#include <stdio.h>\nint main(void) {\n    int n;\n    if (scanf(\"%d\", &n) != 1) return 1;\n    if (n > 0)\n        printf(\"%d\\n\", n * 2);\n    else\n        printf(\"%d\\n\", n);\n    return 0;\n}\n";
    let Some(mut h) = harness(LanguageId::C, src, EntryKind::Stdio, LanguageId::C) else { return };
    let o = h.derive_oracle(&generated(TestPayload::Stdin("4".into()))).unwrap();
    assert_eq!(o.value.text(), "8\n");
    let tests = [stdin_case("pos", "4", "8"), stdin_case("neg", "-3", "-6")];
    let report = h.run_suite(&cand(src), &tests).unwrap();
    assert_eq!(report.pass_count, 1);
    match h.collect_coverage(&cand(src), &tests, &report) {
        Ok(m) => {
            assert_eq!(m.verdicts, vec![true, false]);
            let line8 = m.lines.iter().find(|l| l.line == 8).expect("else branch is executable");
            assert_eq!(line8.hits, vec![false, true]);
            let line6 = m.lines.iter().find(|l| l.line == 6).unwrap();
            assert_eq!(line6.hits, vec![true, false]);
        }
        Err(HarnessError::CoverageUnavailable(why)) => eprintln!("coverage unavailable: {why}"),
        Err(e) => panic!("{e}"),
    }
    assert!(h.compile_check(&cand("int main(void) { return 0 }\n")).unwrap().is_some());
}

#[test]
fn cpp_function_with_vector_and_string() {
    let src = "#include <string>\n#include <vector>\nusing namespace std;\n\nstring reverse_str(const string &s) {\n    return string(s.rbegin(), s.rend());\n}\n\ndouble mean(vector<int> &v) {\n    double t = 0;\n    for (int x : v) t += x;\n    return t / v.size();\n}\n";
    let Some(mut h) = harness(LanguageId::Cpp, src, func("reverse_str"), LanguageId::Cpp) else { return };
    let o = h.derive_oracle(&generated(TestPayload::Args(vec![Literal::Str("abc".into())]))).unwrap();
    assert_eq!(o.value.text(), "\"cba\"");
    let Some(mut h) = harness(LanguageId::Cpp, src, func("mean"), LanguageId::Cpp) else { return };
    let list = Literal::List(vec![Literal::Int(1), Literal::Int(2)]);
    let tests = [args_case("m", vec![list], "1.5")];
    assert_eq!(statuses(&mut h, src, &tests), [OutcomeStatus::Pass]);
}

#[test]
fn go_function_and_stdio() {
    let src = "package main\n\nfunc Gcd(a int, b int) int {\n\tfor b != 0 {\n\t\ta, b = b, a%b\n\t}\n\treturn a\n}\n\nfunc main() {}\n";
    let Some(mut h) = harness(LanguageId::Go, src, func("gcd"), LanguageId::Go) else { return };
    let o = h.derive_oracle(&generated(TestPayload::Args(vec![Literal::Int(12), Literal::Int(18)]))).unwrap();
    assert_eq!(o.value.text(), "6");
    let tests = [args_case("a", vec![Literal::Int(12), Literal::Int(18)], "6"), args_case("b", vec![Literal::Int(7), Literal::Int(5)], "1")];
    let report = h.run_suite(&cand(src), &tests).unwrap();
    assert_eq!(report.pass_count, 2);

    let stdio = "package main\n\nimport \"fmt\"\n\nfunc main() {\n\tvar n int\n\tfmt.Scan(&n)\n\tif n > 0 {\n\t\tfmt.Println(n * 2)\n\t} else {\n\t\tfmt.Println(n)\n\t}\n}\n";
    let Some(mut h) = harness(LanguageId::Go, stdio, EntryKind::Stdio, LanguageId::Go) else { return };
    let tests = [stdin_case("pos", "4", "8"), stdin_case("neg", "-3", "-6")];
    let report = h.run_suite(&cand(stdio), &tests).unwrap();
    assert_eq!(report.pass_count, 1);
    let m = h.collect_coverage(&cand(stdio), &tests, &report).unwrap();
    let line11 = m.lines.iter().find(|l| l.line == 11).expect("else branch");
    assert_eq!(line11.hits, vec![false, true]);
    assert!(h.compile_check(&cand("package main\n\nfunc main() {\n\tx := 1\n}\n")).unwrap().is_some());
}

#[test]
fn python_coverage_function_mode() {
    let src = "def sign(x):\n    if x > 0:\n        return 1\n    return -1\n";
    let Some(mut h) = harness(LanguageId::Python, src, func("sign"), LanguageId::Python) else { return };
    let tests = [args_case("p", vec![Literal::Int(3)], "1"), args_case("n", vec![Literal::Int(-3)], "0")];
    let report = h.run_suite(&cand(src), &tests).unwrap();
    assert_eq!(report.pass_count, 1);
    let m = h.collect_coverage(&cand(src), &tests, &report).unwrap();
    let hits = |line| m.lines.iter().find(|l| l.line == line).map(|l| l.hits.clone());
    assert_eq!(hits(3), Some(vec![true, false]));
    assert_eq!(hits(4), Some(vec![false, true]));
}

#[test]
fn java_missing_is_reported() {
    let tools = Toolchains::discover();
    if tools.supports(LanguageId::Java) {
        return;
    }
    let work = tempfile::tempdir().unwrap();
    let mut h = SandboxHarness::new(
        "java",
        SourceProgram { language: LanguageId::Python, code: PY_DOUBLE.into(), entry: EntryKind::Stdio },
        LanguageId::Java,
        ExecutionLimits::default(),
        tools,
        work.path(),
    );
    assert!(matches!(h.compile_check(&cand("class A {}")), Err(HarnessError::ToolchainMissing(_))));
}
