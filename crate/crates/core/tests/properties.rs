use proptest::prelude::*;
use regex::Regex;

use xlate_core::compare::{compare_output, tokens_match};
use xlate_core::coverage::{CoverageMatrix, LineHits};
use xlate_core::harness::OutcomeStatus;
use xlate_core::literal::{parse_literal, Literal};
use xlate_core::metrics::computational_accuracy;
use xlate_core::model::EntryKind;
use xlate_core::prompt::{bindings, render_prompt, PromptTemplateId};
use xlate_core::sbfl::{build_counts, score, top_suspicious};
use xlate_core::summarize::{summarize_error, MAX_MESSAGE_CHARS};

fn matrix() -> impl Strategy<Value = CoverageMatrix> {
    (1usize..=8, 1usize..=10).prop_flat_map(|(tests, lines)| {
        (
            prop::collection::vec(any::<bool>(), tests),
            prop::collection::vec(prop::collection::vec(any::<bool>(), tests), lines),
            0..tests,
        )
            .prop_map(move |(mut verdicts, hits, forced_fail)| {
                verdicts[forced_fail] = false;
                CoverageMatrix {
                    tests: (0..tests).map(|i| format!("t{i}")).collect(),
                    verdicts,
                    lines: hits.into_iter().enumerate().map(|(i, h)| LineHits { line: i as u32 + 1, hits: h }).collect(),
                }
            })
    })
}

/// Ochiai straight from the matrix, without the library's count records.
fn direct_ochiai(m: &CoverageMatrix, line: usize) -> f64 {
    let hits = &m.lines[line].hits;
    let ef = hits.iter().zip(&m.verdicts).filter(|(h, p)| **h && !**p).count() as f64;
    let ep = hits.iter().zip(&m.verdicts).filter(|(h, p)| **h && **p).count() as f64;
    let failing = m.verdicts.iter().filter(|p| !**p).count() as f64;
    if ef == 0.0 {
        0.0
    } else {
        ef / (failing * (ef + ep)).sqrt()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sbfl_matches_direct_ochiai(m in matrix()) {
        let counts = build_counts(&m).unwrap();
        let failing = m.verdicts.iter().filter(|p| !**p).count() as u32;
        let passing = m.verdicts.len() as u32 - failing;
        for c in &counts {
            prop_assert_eq!(c.ef + c.nf, failing);
            prop_assert_eq!(c.ep + c.np, passing);
        }
        let ranking = score(&counts);
        for (line, s) in &ranking.entries {
            let want = direct_ochiai(&m, *line as usize - 1);
            prop_assert!((s - want).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(s));
        }
        for pair in ranking.entries.windows(2) {
            let ((l0, s0), (l1, s1)) = (pair[0], pair[1]);
            prop_assert!(s0 > s1 || (s0 == s1 && l0 < l1));
        }
        let top = top_suspicious(&ranking, 5);
        prop_assert!(top.len() <= 5);
        prop_assert!(top.iter().all(|l| direct_ochiai(&m, *l as usize - 1) > 0.0));
    }

    #[test]
    fn comparator_is_reflexive(s in "[ -~\n]{0,40}") {
        prop_assert!(compare_output(&s, &s, &EntryKind::Stdio));
        let func = EntryKind::Function { function_name: "f".into(), arity: None };
        prop_assert!(compare_output(&s, &s, &func));
    }

    #[test]
    fn numeric_tokens_are_symmetric(a in "-?[0-9]{1,4}(\\.[0-9]{1,6})?", b in "-?[0-9]{1,4}(\\.[0-9]{1,6})?") {
        prop_assert_eq!(tokens_match(&a, &b), tokens_match(&b, &a));
        prop_assert_eq!(compare_output(&a, &b, &EntryKind::Stdio), compare_output(&b, &a, &EntryKind::Stdio));
    }

    #[test]
    fn rounding_matches_integer_oracle(a in "-?[0-9]{1,4}(\\.[0-9]{1,6})?", b in "-?[0-9]{1,4}(\\.[0-9]{1,6})?") {
        prop_assert_eq!(tokens_match(&a, &b), thousandths(&a) == thousandths(&b));
    }

    #[test]
    fn sanitizer_removes_paths_and_hex(
        parts in prop::collection::vec(
            prop_oneof![
                "[a-z]{1,8}",
                "/[a-z]{1,5}(/[a-z0-9_.]{1,6}){0,4}",
                "0x[0-9a-fA-F]{1,12}",
                "[ :;,()\n]",
            ],
            0..30,
        )
    ) {
        let raw: String = parts.concat();
        let out = summarize_error(&raw, OutcomeStatus::RuntimeError).message;
        prop_assert!(!Regex::new("0[xX][0-9a-fA-F]").unwrap().is_match(&out));
        prop_assert!(!Regex::new(r"(^|[\s:;,()])/[^\s/]+/").unwrap().is_match(&out), "{out}");
        prop_assert!(out.chars().count() <= MAX_MESSAGE_CHARS);
    }

    #[test]
    fn literal_round_trip(v in literal()) {
        prop_assert_eq!(parse_literal(&v.render()).unwrap(), v);
    }

    #[test]
    fn bound_values_are_verbatim(code in "[ -~]{0,60}") {
        let b = bindings([("source_lang", "C"), ("target_lang", "Go"), ("source_code", code.as_str())]);
        let p = render_prompt(PromptTemplateId::Translate, &b).unwrap();
        let head = format!("{code}\n");
        prop_assert!(p.prompt.starts_with(&head));
    }

    #[test]
    fn ca_bounds(passed in 0u64..1000, extra in 0u64..1000) {
        let total = passed + extra;
        prop_assume!(total > 0);
        let r = computational_accuracy(passed, total).unwrap();
        prop_assert!((0.0..=100.0).contains(&r.ca));
        prop_assert_eq!(r.formatted() == "100.00", passed == total);
    }
}

/// Value in thousandths, rounded half away from zero, by integer arithmetic.
fn thousandths(token: &str) -> i128 {
    let (neg, body) = match token.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, token),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let mut frac = frac.to_string();
    while frac.len() < 6 {
        frac.push('0');
    }
    let micros: i128 = int.parse::<i128>().unwrap() * 1_000_000 + frac.parse::<i128>().unwrap();
    let rounded = (micros + 500) / 1000;
    if neg {
        -rounded
    } else {
        rounded
    }
}

fn literal() -> impl Strategy<Value = Literal> {
    let scalar = prop_oneof![
        any::<bool>().prop_map(Literal::Bool),
        any::<i64>().prop_map(Literal::Int),
        (-1e9f64..1e9).prop_map(Literal::Real),
        "[ -~]{0,10}".prop_map(Literal::Str),
    ];
    prop_oneof![
        scalar.clone(),
        prop::collection::vec(scalar, 0..5).prop_map(Literal::List),
    ]
}
