//! Source layouts and generated test drivers for each target language.
//!
//! Stdio programs run as written. Function-mode programs get a driver that
//! holds every test as a numbered case, selected by the first command-line
//! argument, so a suite compiles once. Each case prints the serialized
//! return value after [`SENTINEL`] on a line of its own and, when an
//! expected value is embedded and differs textually, writes
//! `ASSERT expected=<e> actual=<a>` to stderr and exits 1. The harness
//! makes the final verdict with the output comparator.

use regex::Regex;
use xlate_core::literal::Literal;
use xlate_core::model::EntryKind;
use xlate_core::LanguageId;

pub const SENTINEL: &str = "__XLATE_RESULT__:";

/// Name of the candidate-facing main function after the driver takes over.
const RENAMED_MAIN: &str = "xl_candidate_main";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub name: String,
    pub text: String,
}

/// Files to write plus what to compile and run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub files: Vec<SourceFile>,
    /// File holding the program under test, the one coverage is read from.
    pub candidate_file: String,
    /// Files handed to the compiler or interpreter, in order.
    pub units: Vec<String>,
    /// Class to launch, for Java.
    pub main_class: Option<String>,
    /// Lines in the program under test.
    pub candidate_lines: u32,
}

/// One function-mode test case.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverCase {
    pub args: Vec<Literal>,
    /// Canonical expected rendering. `None` when deriving an oracle.
    pub expected: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DriverError {
    UnsupportedArgument(String),
}

impl std::fmt::Display for DriverError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DriverError::UnsupportedArgument(m) => f.write_str(m),
        }
    }
}

fn line_count(code: &str) -> u32 {
    code.lines().count().max(1) as u32
}

pub fn stdio_layout(lang: LanguageId, code: &str) -> Layout {
    let (name, main_class) = match lang {
        LanguageId::C => ("candidate.c".to_string(), None),
        LanguageId::Cpp => ("candidate.cpp".to_string(), None),
        LanguageId::Go => ("main.go".to_string(), None),
        LanguageId::Python => ("candidate.py".to_string(), None),
        LanguageId::Java => {
            let (file_class, main_class) = java_classes(code);
            (format!("{file_class}.java"), Some(main_class))
        }
    };
    let text = match lang {
        LanguageId::Go => go_package_main(code),
        _ => code.to_string(),
    };
    Layout {
        files: vec![SourceFile { name: name.clone(), text }],
        candidate_file: name.clone(),
        units: vec![name],
        main_class,
        candidate_lines: line_count(code),
    }
}

/// Layout for compiling a candidate on its own. Function-mode Go code gets
/// a stub `main` so the package builds.
pub fn check_layout(lang: LanguageId, code: &str, entry: &EntryKind) -> Layout {
    let mut layout = stdio_layout(lang, code);
    if lang == LanguageId::Go && entry.is_function() {
        layout.files[0].text = go_rename_main(&go_package_main(code));
        layout.files.push(SourceFile { name: "xl_stub.go".into(), text: "package main\n\nfunc main() {}\n".into() });
        layout.units.push("xl_stub.go".into());
    }
    layout
}

pub fn function_layout(
    lang: LanguageId,
    code: &str,
    entry: &EntryKind,
    cases: &[DriverCase],
) -> Result<Layout, DriverError> {
    let requested = entry.function_name().unwrap_or("main");
    let name = resolve_function_name(code, requested);
    for case in cases {
        for arg in &case.args {
            if !arg.is_driver_supported() {
                return Err(DriverError::UnsupportedArgument(format!(
                    "argument {} is not an integer, real, string, boolean or flat list of these",
                    arg.render()
                )));
            }
        }
    }
    let candidate_lines = line_count(code);
    let layout = match lang {
        LanguageId::C => {
            let driver = c_driver(&name, cases);
            Layout {
                files: vec![file("candidate.c", code), file("driver.c", &driver)],
                candidate_file: "candidate.c".into(),
                units: vec!["driver.c".into()],
                main_class: None,
                candidate_lines,
            }
        }
        LanguageId::Cpp => {
            let driver = cpp_driver(&name, cases);
            Layout {
                files: vec![file("candidate.cpp", code), file("driver.cpp", &driver)],
                candidate_file: "candidate.cpp".into(),
                units: vec!["driver.cpp".into()],
                main_class: None,
                candidate_lines,
            }
        }
        LanguageId::Go => {
            let candidate = go_rename_main(&go_package_main(code));
            let driver = go_driver(&name, cases);
            Layout {
                files: vec![file("main.go", &candidate), file("xl_driver.go", &driver)],
                candidate_file: "main.go".into(),
                units: vec!["main.go".into(), "xl_driver.go".into()],
                main_class: None,
                candidate_lines,
            }
        }
        LanguageId::Python => {
            let driver = python_driver(&name, cases);
            Layout {
                files: vec![file("candidate.py", code), file("xl_driver.py", &driver)],
                candidate_file: "candidate.py".into(),
                units: vec!["xl_driver.py".into()],
                main_class: None,
                candidate_lines,
            }
        }
        LanguageId::Java => {
            let (file_class, _) = java_classes(code);
            let owner = java_owner_class(code, &name).unwrap_or_else(|| file_class.clone());
            let is_static = java_is_static(code, &name);
            let driver = java_driver(&owner, is_static, &name, cases);
            let cand = format!("{file_class}.java");
            Layout {
                files: vec![file(&cand, code), file("XlDriver.java", &driver)],
                candidate_file: cand.clone(),
                units: vec![cand, "XlDriver.java".into()],
                main_class: Some("XlDriver".into()),
                candidate_lines,
            }
        }
    };
    Ok(layout)
}

fn file(name: &str, text: &str) -> SourceFile {
    SourceFile { name: name.into(), text: text.into() }
}

/// The serialized result on the last sentinel line of driver output.
pub fn parse_result(stdout: &str) -> Option<String> {
    stdout.lines().rev().find_map(|l| l.strip_prefix(SENTINEL)).map(|s| s.trim_end_matches('\r').to_string())
}

fn identifiers_called(code: &str) -> Vec<String> {
    let re = Regex::new(r"\b([A-Za-z_][A-Za-z0-9_]*)\s*\(").expect("valid regex");
    re.captures_iter(code).map(|c| c[1].to_string()).collect()
}

fn normalize_ident(s: &str) -> String {
    s.chars().filter(|c| *c != '_').flat_map(char::to_lowercase).collect()
}

/// The candidate's spelling of `requested`: exact when present, otherwise
/// the first called or defined identifier equal up to case and underscores
/// (`max_element`, `maxElement`, `MaxElement`).
pub fn resolve_function_name(code: &str, requested: &str) -> String {
    let idents = identifiers_called(code);
    if idents.iter().any(|i| i == requested) {
        return requested.to_string();
    }
    let want = normalize_ident(requested);
    idents.into_iter().find(|i| normalize_ident(i) == want).unwrap_or_else(|| requested.to_string())
}

fn go_package_main(code: &str) -> String {
    let re = Regex::new(r"(?m)^package\s+\w+").expect("valid regex");
    re.replace(code, "package main").into_owned()
}

fn go_rename_main(code: &str) -> String {
    let re = Regex::new(r"func\s+main\s*\(\s*\)").expect("valid regex");
    re.replace_all(code, format!("func {RENAMED_MAIN}()")).into_owned()
}

/// (class naming the file, class holding `main`).
fn java_classes(code: &str) -> (String, String) {
    let public = Regex::new(r"public\s+(?:final\s+|abstract\s+)*class\s+(\w+)").expect("valid regex");
    let any = Regex::new(r"\bclass\s+(\w+)").expect("valid regex");
    let main_at = code.find("static void main");
    let main_class = any
        .captures_iter(code)
        .filter(|c| main_at.is_none_or(|m| c.get(0).unwrap().start() < m))
        .last()
        .map(|c| c[1].to_string());
    let file_class = public.captures(code).map(|c| c[1].to_string());
    let fallback = any.captures(code).map(|c| c[1].to_string()).unwrap_or_else(|| "Main".into());
    let main_class = main_class.unwrap_or_else(|| fallback.clone());
    (file_class.unwrap_or_else(|| main_class.clone()), main_class)
}

fn java_owner_class(code: &str, method: &str) -> Option<String> {
    let any = Regex::new(r"\bclass\s+(\w+)").expect("valid regex");
    let def = Regex::new(&format!(r"\b{}\s*\([^)]*\)\s*(?:throws[^{{]*)?\{{", regex::escape(method))).ok()?;
    let at = def.find(code)?.start();
    any.captures_iter(code).filter(|c| c.get(0).unwrap().start() < at).last().map(|c| c[1].to_string())
}

fn java_is_static(code: &str, method: &str) -> bool {
    Regex::new(&format!(r"\bstatic\b[^;{{}}(=]*\b{}\s*\(", regex::escape(method)))
        .map(|re| re.is_match(code))
        .unwrap_or(false)
}

// ---------- literal rendering per language ----------

#[derive(Clone, Copy, PartialEq, Eq)]
enum Elem {
    Int,
    Long,
    Real,
    Str,
    Bool,
}

fn elem_of(items: &[Literal]) -> Elem {
    let mut kind = Elem::Int;
    let mut seen = false;
    for item in items {
        let k = match item {
            Literal::Int(i) if i32::try_from(*i).is_err() => Elem::Long,
            Literal::Int(_) => Elem::Int,
            Literal::Real(_) => Elem::Real,
            Literal::Str(_) => Elem::Str,
            Literal::Bool(_) => Elem::Bool,
            _ => Elem::Int,
        };
        kind = if !seen {
            k
        } else {
            match (kind, k) {
                (a, b) if a == b => a,
                (Elem::Int, Elem::Long) | (Elem::Long, Elem::Int) => Elem::Long,
                (Elem::Int | Elem::Long | Elem::Real, Elem::Int | Elem::Long | Elem::Real) => Elem::Real,
                (a, _) => a,
            }
        };
        seen = true;
    }
    kind
}

fn real_text(r: f64) -> String {
    let s = format!("{r:?}");
    if s.contains(['.', 'e', 'E']) || !r.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

fn c_string(s: &str) -> String {
    let mut out = String::from("\"");
    for b in s.bytes() {
        match b {
            b'\\' => out.push_str("\\\\"),
            b'"' => out.push_str("\\\""),
            b'\n' => out.push_str("\\n"),
            b'\t' => out.push_str("\\t"),
            b'\r' => out.push_str("\\r"),
            b'?' => out.push_str("\\?"),
            0x20..=0x7e => out.push(b as char),
            _ => out.push_str(&format!("\\{b:03o}")),
        }
    }
    out.push('"');
    out
}

fn go_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => out.push_str(&format!("\\x{:02x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn java_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            ' '..='~' => out.push(c),
            c => {
                let mut buf = [0u16; 2];
                for unit in c.encode_utf16(&mut buf) {
                    out.push_str(&format!("\\u{unit:04x}"));
                }
            }
        }
    }
    out.push('"');
    out
}

fn int_text(i: i64, long_suffix: &str) -> String {
    if i == i64::MIN {
        format!("({}{long_suffix} - 1)", i64::MIN + 1)
    } else if i32::try_from(i).is_ok() {
        i.to_string()
    } else {
        format!("{i}{long_suffix}")
    }
}

fn scalar_c(lit: &Literal, long_suffix: &str) -> String {
    match lit {
        Literal::Int(i) => int_text(*i, long_suffix),
        Literal::Real(r) => real_text(*r),
        Literal::Str(s) => c_string(s),
        Literal::Bool(b) => if *b { "1" } else { "0" }.into(),
        other => other.render(),
    }
}

// ---------- C ----------

const C_PRELUDE: &str = r#"#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static char *xl_buf;
static size_t xl_len, xl_cap;

static void xl_put(const char *s) {
    size_t n = strlen(s);
    if (xl_len + n + 1 > xl_cap) {
        xl_cap = (xl_len + n + 1) * 2;
        xl_buf = realloc(xl_buf, xl_cap);
    }
    memcpy(xl_buf + xl_len, s, n + 1);
    xl_len += n;
}
static void xl_ser_ll(long long v) { char b[32]; snprintf(b, sizeof b, "%lld", v); xl_put(b); }
static void xl_ser_ull(unsigned long long v) { char b[32]; snprintf(b, sizeof b, "%llu", v); xl_put(b); }
static void xl_ser_d(double v) {
    char b[64];
    snprintf(b, sizeof b, "%.17g", v);
    xl_put(b);
    if (!strpbrk(b, ".eEn")) xl_put(".0");
}
static void xl_ser_ld(long double v) { xl_ser_d((double)v); }
static void xl_ser_bool(_Bool v) { xl_put(v ? "true" : "false"); }
static void xl_ser_str(const char *s) {
    char b[8];
    if (!s) { xl_put("null"); return; }
    xl_put("\"");
    for (; *s; s++) {
        unsigned char c = (unsigned char)*s;
        if (c == '"') xl_put("\\\"");
        else if (c == '\\') xl_put("\\\\");
        else if (c == '\n') xl_put("\\n");
        else if (c == '\t') xl_put("\\t");
        else if (c == '\r') xl_put("\\r");
        else if (c < 0x20) { snprintf(b, sizeof b, "\\u%04x", c); xl_put(b); }
        else { b[0] = (char)c; b[1] = 0; xl_put(b); }
    }
    xl_put("\"");
}
static void xl_ser_char(char c) { char s[2] = {c, 0}; xl_ser_str(s); }
#define xl_ser(x) _Generic((x), \
    _Bool: xl_ser_bool, char: xl_ser_char, \
    signed char: xl_ser_ll, short: xl_ser_ll, int: xl_ser_ll, long: xl_ser_ll, long long: xl_ser_ll, \
    unsigned char: xl_ser_ull, unsigned short: xl_ser_ull, unsigned int: xl_ser_ull, \
    unsigned long: xl_ser_ull, unsigned long long: xl_ser_ull, \
    float: xl_ser_d, double: xl_ser_d, long double: xl_ser_ld, \
    char *: xl_ser_str, const char *: xl_ser_str)(x)

static int xl_finish(const char *expected) {
    fflush(stdout);
    printf("\n__XLATE_RESULT__:%s\n", xl_buf ? xl_buf : "");
    fflush(stdout);
    if (expected && strcmp(expected, xl_buf ? xl_buf : "") != 0) {
        fprintf(stderr, "ASSERT expected=%s actual=%s\n", expected, xl_buf ? xl_buf : "");
        return 1;
    }
    return 0;
}

#define main xl_candidate_main
"#;

fn is_bool_text(expected: &Option<String>) -> bool {
    matches!(expected.as_deref(), Some("true") | Some("false"))
}

fn c_driver(name: &str, cases: &[DriverCase]) -> String {
    let mut out = String::from(C_PRELUDE);
    out.push_str("#include \"candidate.c\"\n#undef main\n\n");
    out.push_str("int main(int argc, char **argv) {\n    const char *xl_expected = NULL;\n");
    out.push_str("    switch (argc > 1 ? atoi(argv[1]) : 0) {\n");
    for (i, case) in cases.iter().enumerate() {
        out.push_str(&format!("    case {i}: {{\n"));
        let mut exprs = Vec::new();
        for (j, arg) in case.args.iter().enumerate() {
            match arg {
                Literal::List(items) => {
                    let ty = match elem_of(items) {
                        Elem::Int => "int",
                        Elem::Long => "long long",
                        Elem::Real => "double",
                        Elem::Str => "char *",
                        Elem::Bool => "_Bool",
                    };
                    let vals: Vec<String> = items.iter().map(|v| scalar_c(v, "LL")).collect();
                    let body = if vals.is_empty() { "0".to_string() } else { vals.join(", ") };
                    out.push_str(&format!("        {ty} xl_a{j}[] = {{{body}}};\n"));
                    exprs.push(format!("xl_a{j}"));
                    exprs.push(items.len().to_string());
                }
                Literal::Str(s) => {
                    out.push_str(&format!("        char xl_a{j}[] = {};\n", c_string(s)));
                    exprs.push(format!("xl_a{j}"));
                }
                other => exprs.push(scalar_c(other, "LL")),
            }
        }
        let call = format!("{name}({})", exprs.join(", "));
        let call = if is_bool_text(&case.expected) { format!("(_Bool)({call})") } else { call };
        out.push_str(&format!("        xl_ser({call});\n"));
        if let Some(e) = &case.expected {
            out.push_str(&format!("        xl_expected = {};\n", c_string(e)));
        }
        out.push_str("        break;\n    }\n");
    }
    out.push_str("    default:\n        fprintf(stderr, \"unknown test case\\n\");\n        return 2;\n    }\n");
    out.push_str("    return xl_finish(xl_expected);\n}\n");
    out
}

// ---------- C++ ----------

const CPP_PRELUDE: &str = r#"#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

static void xl_ser(std::ostream &o, bool v);
static void xl_ser(std::ostream &o, char v);
static void xl_ser(std::ostream &o, const std::string &s);
static void xl_ser(std::ostream &o, const char *s);
template <class T> static typename std::enable_if<std::is_integral<T>::value>::type xl_ser(std::ostream &o, T v);
template <class T> static typename std::enable_if<std::is_floating_point<T>::value>::type xl_ser(std::ostream &o, T v);
template <class T> static void xl_ser(std::ostream &o, const std::vector<T> &v);

static void xl_ser(std::ostream &o, bool v) { o << (v ? "true" : "false"); }
static void xl_ser(std::ostream &o, const std::string &s) {
    o << '"';
    for (unsigned char c : s) {
        if (c == '"') o << "\\\"";
        else if (c == '\\') o << "\\\\";
        else if (c == '\n') o << "\\n";
        else if (c == '\t') o << "\\t";
        else if (c == '\r') o << "\\r";
        else if (c < 0x20) { char b[8]; std::snprintf(b, sizeof b, "\\u%04x", c); o << b; }
        else o << (char)c;
    }
    o << '"';
}
static void xl_ser(std::ostream &o, const char *s) { if (s) xl_ser(o, std::string(s)); else o << "null"; }
static void xl_ser(std::ostream &o, char v) { xl_ser(o, std::string(1, v)); }
template <class T> static typename std::enable_if<std::is_integral<T>::value>::type xl_ser(std::ostream &o, T v) {
    if (std::is_signed<T>::value) o << (long long)v; else o << (unsigned long long)v;
}
template <class T> static typename std::enable_if<std::is_floating_point<T>::value>::type xl_ser(std::ostream &o, T v) {
    std::ostringstream s;
    s << std::setprecision(17) << (double)v;
    std::string t = s.str();
    o << t;
    if (t.find_first_of(".eEn") == std::string::npos) o << ".0";
}
template <class T> static void xl_ser(std::ostream &o, const std::vector<T> &v) {
    o << '[';
    for (size_t i = 0; i < v.size(); i++) {
        if (i) o << ", ";
        xl_ser(o, (T)v[i]);
    }
    o << ']';
}

static int xl_finish(const std::string &actual, const char *expected) {
    std::cout.flush();
    std::fflush(stdout);
    std::cout << "\n__XLATE_RESULT__:" << actual << "\n";
    std::cout.flush();
    if (expected && actual != expected) {
        std::cerr << "ASSERT expected=" << expected << " actual=" << actual << "\n";
        return 1;
    }
    return 0;
}

#define main xl_candidate_main
"#;

fn cpp_driver(name: &str, cases: &[DriverCase]) -> String {
    let mut out = String::from(CPP_PRELUDE);
    out.push_str("#include \"candidate.cpp\"\n#undef main\n\n");
    out.push_str("int main(int argc, char **argv) {\n    const char *xl_expected = nullptr;\n    std::ostringstream xl_out;\n");
    out.push_str("    switch (argc > 1 ? std::atoi(argv[1]) : 0) {\n");
    for (i, case) in cases.iter().enumerate() {
        out.push_str(&format!("    case {i}: {{\n"));
        let mut exprs = Vec::new();
        for (j, arg) in case.args.iter().enumerate() {
            let decl = match arg {
                Literal::List(items) => {
                    let ty = match elem_of(items) {
                        Elem::Int => "int",
                        Elem::Long => "long long",
                        Elem::Real => "double",
                        Elem::Str => "std::string",
                        Elem::Bool => "bool",
                    };
                    let vals: Vec<String> = items
                        .iter()
                        .map(|v| match v {
                            Literal::Bool(b) => b.to_string(),
                            v => scalar_c(v, "LL"),
                        })
                        .collect();
                    format!("std::vector<{ty}> xl_a{j} = {{{}}};", vals.join(", "))
                }
                Literal::Str(s) => format!("std::string xl_a{j} = {};", c_string(s)),
                Literal::Bool(b) => format!("bool xl_a{j} = {b};"),
                Literal::Real(r) => format!("double xl_a{j} = {};", real_text(*r)),
                Literal::Int(v) if i32::try_from(*v).is_ok() => format!("int xl_a{j} = {v};"),
                other => format!("long long xl_a{j} = {};", scalar_c(other, "LL")),
            };
            out.push_str(&format!("        {decl}\n"));
            exprs.push(format!("xl_a{j}"));
        }
        let call = format!("{name}({})", exprs.join(", "));
        let call = if is_bool_text(&case.expected) { format!("(bool)({call})") } else { call };
        out.push_str(&format!("        xl_ser(xl_out, {call});\n"));
        if let Some(e) = &case.expected {
            out.push_str(&format!("        xl_expected = {};\n", c_string(e)));
        }
        out.push_str("        break;\n    }\n");
    }
    out.push_str("    default:\n        std::cerr << \"unknown test case\\n\";\n        return 2;\n    }\n");
    out.push_str("    return xl_finish(xl_out.str(), xl_expected);\n}\n");
    out
}

// ---------- Go ----------

const GO_DRIVER: &str = r#"package main

import (
	"bytes"
	"encoding/json"
	"fmt"
	"os"
	"reflect"
	"sort"
	"strconv"
	"strings"
)

func xlQuote(s string) string {
	var b bytes.Buffer
	enc := json.NewEncoder(&b)
	enc.SetEscapeHTML(false)
	_ = enc.Encode(s)
	return strings.TrimRight(b.String(), "\n")
}

func xlSer(v reflect.Value) string {
	switch v.Kind() {
	case reflect.Invalid:
		return "null"
	case reflect.Bool:
		if v.Bool() {
			return "true"
		}
		return "false"
	case reflect.Int, reflect.Int8, reflect.Int16, reflect.Int64:
		return strconv.FormatInt(v.Int(), 10)
	case reflect.Int32:
		if v.Type().Name() == "rune" {
			return xlQuote(string(rune(v.Int())))
		}
		return strconv.FormatInt(v.Int(), 10)
	case reflect.Uint, reflect.Uint16, reflect.Uint32, reflect.Uint64, reflect.Uintptr:
		return strconv.FormatUint(v.Uint(), 10)
	case reflect.Uint8:
		if v.Type().Name() == "byte" {
			return xlQuote(string([]byte{byte(v.Uint())}))
		}
		return strconv.FormatUint(v.Uint(), 10)
	case reflect.Float32, reflect.Float64:
		s := strconv.FormatFloat(v.Float(), 'g', 17, 64)
		if !strings.ContainsAny(s, ".eEnI") {
			s += ".0"
		}
		return s
	case reflect.String:
		return xlQuote(v.String())
	case reflect.Slice, reflect.Array:
		if v.Kind() == reflect.Slice && v.IsNil() {
			return "[]"
		}
		parts := make([]string, v.Len())
		for i := 0; i < v.Len(); i++ {
			parts[i] = xlSer(v.Index(i))
		}
		return "[" + strings.Join(parts, ", ") + "]"
	case reflect.Map:
		keys := v.MapKeys()
		items := make([]string, 0, len(keys))
		for _, k := range keys {
			ks := fmt.Sprint(k.Interface())
			items = append(items, xlQuote(ks)+": "+xlSer(v.MapIndex(k)))
		}
		sort.Strings(items)
		return "{" + strings.Join(items, ", ") + "}"
	case reflect.Ptr, reflect.Interface:
		if v.IsNil() {
			return "null"
		}
		return xlSer(v.Elem())
	}
	return fmt.Sprint(v.Interface())
}

func xlConv(a interface{}, t reflect.Type) reflect.Value {
	switch t.Kind() {
	case reflect.Slice:
		items := a.([]interface{})
		out := reflect.MakeSlice(t, len(items), len(items))
		for i, it := range items {
			out.Index(i).Set(xlConv(it, t.Elem()))
		}
		return out
	case reflect.Array:
		items := a.([]interface{})
		out := reflect.New(t).Elem()
		for i, it := range items {
			out.Index(i).Set(xlConv(it, t.Elem()))
		}
		return out
	case reflect.Interface:
		return reflect.ValueOf(&a).Elem()
	}
	if s, ok := a.(string); ok && t.Kind() == reflect.Int32 && len([]rune(s)) == 1 {
		return reflect.ValueOf([]rune(s)[0]).Convert(t)
	}
	if s, ok := a.(string); ok && t.Kind() == reflect.Uint8 && len(s) == 1 {
		return reflect.ValueOf(s[0]).Convert(t)
	}
	return reflect.ValueOf(a).Convert(t)
}

func xlCall(fn interface{}, args ...interface{}) string {
	f := reflect.ValueOf(fn)
	ft := f.Type()
	in := make([]reflect.Value, len(args))
	for i, a := range args {
		in[i] = xlConv(a, ft.In(i))
	}
	out := f.Call(in)
	if len(out) == 1 {
		return xlSer(out[0])
	}
	parts := make([]string, len(out))
	for i, o := range out {
		parts[i] = xlSer(o)
	}
	return "[" + strings.Join(parts, ", ") + "]"
}

func main() {
	which := 0
	if len(os.Args) > 1 {
		which, _ = strconv.Atoi(os.Args[1])
	}
	var actual string
	var expected *string
	switch which {
"#;

fn go_arg(lit: &Literal) -> String {
    match lit {
        Literal::Int(i) => format!("int64({i})"),
        Literal::Real(r) => format!("float64({})", real_text(*r)),
        Literal::Str(s) => go_string(s),
        Literal::Bool(b) => b.to_string(),
        Literal::List(items) => {
            let parts: Vec<String> = items.iter().map(go_arg).collect();
            format!("[]interface{{}}{{{}}}", parts.join(", "))
        }
        _ => "nil".into(),
    }
}

fn go_driver(name: &str, cases: &[DriverCase]) -> String {
    let mut out = String::from(GO_DRIVER);
    for (i, case) in cases.iter().enumerate() {
        let args: Vec<String> = case.args.iter().map(go_arg).collect();
        let sep = if args.is_empty() { "" } else { ", " };
        out.push_str(&format!("\tcase {i}:\n\t\tactual = xlCall({name}{sep}{})\n", args.join(", ")));
        if let Some(e) = &case.expected {
            out.push_str(&format!("\t\te := {}\n\t\texpected = &e\n", go_string(e)));
        }
    }
    out.push_str("\tdefault:\n\t\tfmt.Fprintln(os.Stderr, \"unknown test case\")\n\t\tos.Exit(2)\n\t}\n");
    out.push_str("\tos.Stdout.Sync()\n\tfmt.Print(\"\\n__XLATE_RESULT__:\" + actual + \"\\n\")\n");
    out.push_str("\tif expected != nil && *expected != actual {\n\t\tfmt.Fprintf(os.Stderr, \"ASSERT expected=%s actual=%s\\n\", *expected, actual)\n\t\tos.Exit(1)\n\t}\n}\n");
    out
}

// ---------- Python ----------

const PY_DRIVER: &str = r#"import importlib.util
import json
import math
import os
import sys

_here = os.path.dirname(os.path.abspath(__file__))
_spec = importlib.util.spec_from_file_location("candidate", os.path.join(_here, "candidate.py"))
_mod = importlib.util.module_from_spec(_spec)
sys.modules["candidate"] = _mod
_spec.loader.exec_module(_mod)


def _norm(s):
    return s.replace("_", "").lower()


def _find(name):
    fn = getattr(_mod, name, None)
    if callable(fn) and not isinstance(fn, type):
        return fn
    for key in dir(_mod):
        val = getattr(_mod, key)
        if callable(val) and not isinstance(val, type) and _norm(key) == _norm(name):
            return val
    for key in dir(_mod):
        cls = getattr(_mod, key)
        if isinstance(cls, type) and getattr(cls, "__module__", "") == "candidate":
            for attr in dir(cls):
                if _norm(attr) == _norm(name):
                    raw = cls.__dict__.get(attr)
                    if isinstance(raw, (staticmethod, classmethod)):
                        return getattr(cls, attr)
                    return getattr(cls(), attr)
    sys.stderr.write("function %s not found\n" % name)
    sys.exit(3)


def _ser(v):
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_ser(x) for x in v) + "]"
    if isinstance(v, dict):
        items = sorted((str(k), _ser(x)) for k, x in v.items())
        return "{" + ", ".join(json.dumps(k, ensure_ascii=False) + ": " + x for k, x in items) + "}"
    return str(v)


_CASES = [
"#;

fn py_literal(lit: &Literal) -> String {
    match lit {
        Literal::Null => "None".into(),
        Literal::Bool(b) => if *b { "True" } else { "False" }.into(),
        Literal::Int(i) => i.to_string(),
        Literal::Real(r) if r.is_nan() => "float('nan')".into(),
        Literal::Real(r) if r.is_infinite() => if *r > 0.0 { "float('inf')" } else { "float('-inf')" }.into(),
        Literal::Real(r) => real_text(*r),
        Literal::Str(s) => xlate_core::literal::quote(s),
        Literal::List(items) => {
            let parts: Vec<String> = items.iter().map(py_literal).collect();
            format!("[{}]", parts.join(", "))
        }
        Literal::Map(m) => {
            let parts: Vec<String> =
                m.iter().map(|(k, v)| format!("{}: {}", xlate_core::literal::quote(k), py_literal(v))).collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}

fn python_driver(name: &str, cases: &[DriverCase]) -> String {
    let mut out = String::from(PY_DRIVER);
    for case in cases {
        let args: Vec<String> = case.args.iter().map(py_literal).collect();
        let expected = case.expected.as_deref().map_or("None".to_string(), xlate_core::literal::quote);
        out.push_str(&format!("    ([{}], {expected}),\n", args.join(", ")));
    }
    out.push_str("]\n\n");
    out.push_str(&format!(
        r#"if __name__ == "__main__":
    _args, _expected = _CASES[int(sys.argv[1]) if len(sys.argv) > 1 else 0]
    _actual = _ser(_find({})(*_args))
    sys.stdout.flush()
    sys.stdout.write("\n__XLATE_RESULT__:" + _actual + "\n")
    sys.stdout.flush()
    if _expected is not None and _expected != _actual:
        sys.stderr.write("ASSERT expected=%s actual=%s\n" % (_expected, _actual))
        sys.exit(1)
"#,
        xlate_core::literal::quote(name)
    ));
    out
}

/// Line tracer for Python coverage. Usage: `xl_trace.py <out.json>
/// <candidate.py> <script> [args...]`.
pub const PY_TRACER: &str = r#"import json
import os
import runpy
import sys
import threading

out_path, target, script = sys.argv[1], os.path.abspath(sys.argv[2]), sys.argv[3]
sys.argv = [script] + sys.argv[4:]
sys.path.insert(0, os.path.dirname(os.path.abspath(script)))


def executable_lines(path):
    import dis
    with open(path, encoding="utf-8") as f:
        code = compile(f.read(), path, "exec")
    lines, stack = set(), [code]
    while stack:
        co = stack.pop()
        for _, line in dis.findlinestarts(co):
            if line is not None and line > 0:
                lines.add(line)
        stack.extend(c for c in co.co_consts if hasattr(c, "co_code"))
    return lines


hits = set()
seen = {}


def tracer(frame, event, arg):
    name = frame.f_code.co_filename
    mine = seen.get(name)
    if mine is None:
        mine = seen[name] = os.path.abspath(name) == target
    if not mine:
        return None
    if event == "line":
        hits.add(frame.f_lineno)
    return tracer


def dump():
    sys.settrace(None)
    try:
        exe = sorted(executable_lines(target))
    except SyntaxError:
        exe = []
    with open(out_path, "w") as f:
        json.dump({"executable": exe, "hits": sorted(hits)}, f)


threading.settrace(tracer)
sys.settrace(tracer)
try:
    runpy.run_path(script, run_name="__main__")
finally:
    dump()
"#;

// ---------- Java ----------

fn java_arg(lit: &Literal) -> String {
    match lit {
        Literal::Int(i) => int_text(*i, "L"),
        Literal::Real(r) => real_text(*r),
        Literal::Str(s) => java_string(s),
        Literal::Bool(b) => b.to_string(),
        Literal::List(items) => {
            let ty = match elem_of(items) {
                Elem::Int => "int",
                Elem::Long => "long",
                Elem::Real => "double",
                Elem::Str => "String",
                Elem::Bool => "boolean",
            };
            let parts: Vec<String> = items.iter().map(java_arg).collect();
            format!("new {ty}[]{{{}}}", parts.join(", "))
        }
        _ => "null".into(),
    }
}

const JAVA_PRELUDE: &str = r#"public class XlDriver {
    static String quote(String s) {
        StringBuilder b = new StringBuilder("\"");
        for (char c : s.toCharArray()) {
            if (c == '"') b.append("\\\"");
            else if (c == '\\') b.append("\\\\");
            else if (c == '\n') b.append("\\n");
            else if (c == '\t') b.append("\\t");
            else if (c == '\r') b.append("\\r");
            else if (c < 0x20) b.append(String.format("\\u%04x", (int) c));
            else b.append(c);
        }
        return b.append('"').toString();
    }

    static String ser(Object v) {
        if (v == null) return "null";
        if (v instanceof Boolean) return ((Boolean) v) ? "true" : "false";
        if (v instanceof Double || v instanceof Float) {
            double d = ((Number) v).doubleValue();
            if (Double.isNaN(d)) return "nan";
            if (Double.isInfinite(d)) return d > 0 ? "inf" : "-inf";
            return Double.toString(d);
        }
        if (v instanceof Number) return v.toString();
        if (v instanceof Character) return quote(v.toString());
        if (v instanceof CharSequence) return quote(v.toString());
        if (v.getClass().isArray()) {
            StringBuilder b = new StringBuilder("[");
            int n = java.lang.reflect.Array.getLength(v);
            for (int i = 0; i < n; i++) {
                if (i > 0) b.append(", ");
                b.append(ser(java.lang.reflect.Array.get(v, i)));
            }
            return b.append(']').toString();
        }
        if (v instanceof Iterable) {
            StringBuilder b = new StringBuilder("[");
            boolean first = true;
            for (Object o : (Iterable<?>) v) {
                if (!first) b.append(", ");
                first = false;
                b.append(ser(o));
            }
            return b.append(']').toString();
        }
        return v.toString();
    }

    public static void main(String[] argv) throws Throwable {
        int which = argv.length > 0 ? Integer.parseInt(argv[0]) : 0;
        Object result = null;
        String expected = null;
        switch (which) {
"#;

fn java_driver(owner: &str, is_static: bool, name: &str, cases: &[DriverCase]) -> String {
    let mut out = String::from(JAVA_PRELUDE);
    let target = if is_static { owner.to_string() } else { format!("new {owner}()") };
    for (i, case) in cases.iter().enumerate() {
        let args: Vec<String> = case.args.iter().map(java_arg).collect();
        out.push_str(&format!("        case {i}:\n            result = {target}.{name}({});\n", args.join(", ")));
        if let Some(e) = &case.expected {
            out.push_str(&format!("            expected = {};\n", java_string(e)));
        }
        out.push_str("            break;\n");
    }
    out.push_str(
        r#"        default:
            System.err.println("unknown test case");
            System.exit(2);
        }
        String actual = ser(result);
        System.out.flush();
        System.out.print("\n__XLATE_RESULT__:" + actual + "\n");
        System.out.flush();
        if (expected != null && !expected.equals(actual)) {
            System.err.println("ASSERT expected=" + expected + " actual=" + actual);
            System.exit(1);
        }
    }
}
"#,
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn name_resolution() {
        assert_eq!(resolve_function_name("int max_element(int *a, int n) {", "max_element"), "max_element");
        assert_eq!(resolve_function_name("static int maxElement(int[] a) {", "max_element"), "maxElement");
        assert_eq!(resolve_function_name("func MaxElement(a []int) int {", "max_element"), "MaxElement");
        assert_eq!(resolve_function_name("int other(void) {", "add"), "add");
    }

    #[test]
    fn sentinel_is_last_result_line() {
        let out = "noise\n__XLATE_RESULT__:1\nmore\n__XLATE_RESULT__:[1, 2]\n";
        assert_eq!(parse_result(out).as_deref(), Some("[1, 2]"));
        assert_eq!(parse_result("nothing"), None);
    }

    #[test]
    fn go_main_is_renamed() {
        let code = "package solution\n\nfunc main() {\n}\n";
        let l = function_layout(LanguageId::Go, code, &EntryKind::Function { function_name: "f".into(), arity: None }, &[])
            .unwrap();
        assert!(l.files[0].text.starts_with("package main\n"));
        assert!(l.files[0].text.contains("func xl_candidate_main()"));
        assert_eq!(l.files[0].text.lines().count(), code.lines().count());
    }

    #[test]
    fn java_class_detection() {
        let code = "import java.util.*;\npublic class Solution {\n  public static int add(int a, int b) { return a + b; }\n}\n";
        assert_eq!(java_classes(code).0, "Solution");
        assert_eq!(java_owner_class(code, "add").as_deref(), Some("Solution"));
        assert!(java_is_static(code, "add"));
        let inst = "class Helper {\n  int twice(int x) { return 2 * x; }\n}\n";
        assert!(!java_is_static(inst, "twice"));
    }

    #[test]
    fn nested_arguments_are_rejected() {
        let entry = EntryKind::Function { function_name: "f".into(), arity: None };
        let case = DriverCase { args: vec![Literal::List(vec![Literal::List(vec![])])], expected: None };
        assert!(matches!(
            function_layout(LanguageId::Python, "def f(x): pass", &entry, &[case]),
            Err(DriverError::UnsupportedArgument(_))
        ));
    }

    #[test]
    fn escapes() {
        assert_eq!(c_string("a\"b\\\n?"), "\"a\\\"b\\\\\\n\\?\"");
        assert_eq!(go_string("tab\there"), "\"tab\\there\"");
        assert_eq!(java_string("é"), "\"\\u00e9\"");
        assert_eq!(real_text(5.0), "5.0");
        assert_eq!(int_text(1 << 40, "LL"), "1099511627776LL");
    }
}
