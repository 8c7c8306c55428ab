//! Test-input generation: prompt, flavor choice and `Input_k:` parsing.

use alloc::string::String;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::gateway::{Backend, Gateway};
use crate::literal::parse_argument_list;
use crate::model::{EntryKind, LanguageId, TestCase, TestFlavor, TestInput, TestOrigin, TestPayload};
use crate::prompt::{render_prompt, Bindings, PromptInstance, PromptTemplateId};
use crate::translate::AgentError;

pub const DEFAULT_TEST_COUNT: usize = 10;

/// Uniform choice among the three generated-test flavors.
pub fn pick_flavor(rng: &mut impl RngCore) -> TestFlavor {
    // Rejection sampling: the u32::MAX values below u32::MAX split evenly
    // into three, so the outcomes are exactly equiprobable.
    loop {
        let x = rng.next_u32();
        if x < u32::MAX {
            return TestFlavor::GENERATED[(x % 3) as usize];
        }
    }
}

pub fn test_generation_request(
    code: &str,
    language: LanguageId,
    n: usize,
    flavor: TestFlavor,
    sample: Option<&TestCase>,
) -> Result<PromptInstance, AgentError> {
    if n == 0 {
        return Err(AgentError::Precondition("test count must be at least 1"));
    }
    let mut b = Bindings::new();
    b.insert("source_code".into(), code.into());
    b.insert("no_of_tests".into(), alloc::format!("{n}"));
    b.insert("choice".into(), flavor.prompt_word().into());
    b.insert("language".into(), language.display_name().into());
    b.insert("last_index".into(), alloc::format!("{}", n - 1));
    if let Some(sample) = sample {
        b.insert("sample_test".into(), sample.input.render());
    }
    Ok(render_prompt(PromptTemplateId::TestGen, &b)?)
}

/// Requests `n` inputs for `code` and parses the completion. The flavor is
/// drawn from `rng` once per call.
#[allow(clippy::too_many_arguments)]
pub fn generate_test_inputs<B: Backend>(
    code: &str,
    language: LanguageId,
    entry: &EntryKind,
    n: usize,
    sample: Option<&TestCase>,
    rng: &mut impl RngCore,
    gateway: &mut Gateway<B>,
) -> Result<Vec<TestInput>, AgentError> {
    let flavor = pick_flavor(rng);
    let request = test_generation_request(code, language, n, flavor, sample)?;
    let raw = gateway.complete(&request)?;
    let inputs = parse_test_inputs(&raw.text, entry, flavor, n);
    if inputs.is_empty() {
        return Err(AgentError::FormatUnparseable);
    }
    Ok(inputs)
}

/// Splits a completion into `Input_<k>:` blocks. Empty blocks and, in
/// function mode, blocks that are not a well-formed argument list of the
/// right arity are dropped. At most `n` inputs are returned.
pub fn parse_test_inputs(text: &str, entry: &EntryKind, flavor: TestFlavor, n: usize) -> Vec<TestInput> {
    let mut blocks: Vec<Vec<&str>> = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("```") {
            continue;
        }
        if let Some(rest) = header_rest(trimmed) {
            if let Some(block) = current.take() {
                blocks.push(block);
            }
            let mut block = Vec::new();
            if !rest.trim().is_empty() {
                block.push(rest.trim());
            }
            current = Some(block);
        } else if let Some(block) = current.as_mut() {
            block.push(line);
        }
    }
    if let Some(block) = current {
        blocks.push(block);
    }

    blocks
        .into_iter()
        .filter_map(|lines| block_input(&lines, entry, flavor))
        .take(n)
        .collect()
}

/// Text after `Input_<k>:` (with optional `**`/`#` decoration), if `line` is a header.
fn header_rest(line: &str) -> Option<&str> {
    let line = line.trim_start_matches(['*', '#', ' ']);
    let rest = line.strip_prefix("Input_").or_else(|| line.strip_prefix("input_"))?;
    let digits = rest.bytes().take_while(|b| b.is_ascii_alphanumeric()).count();
    if digits == 0 {
        return None;
    }
    let rest = rest[digits..].trim_start_matches('*');
    let rest = rest.strip_prefix(':')?;
    Some(rest.trim_start_matches('*'))
}

fn block_input(lines: &[&str], entry: &EntryKind, flavor: TestFlavor) -> Option<TestInput> {
    let mut start = 0;
    let mut end = lines.len();
    while start < end && lines[start].trim().is_empty() {
        start += 1;
    }
    while end > start && lines[end - 1].trim().is_empty() {
        end -= 1;
    }
    if start == end {
        return None;
    }
    let body: Vec<&str> = lines[start..end].iter().map(|l| l.trim_end()).collect();
    let text: String = body.join("\n");
    let payload = match entry {
        EntryKind::Stdio => TestPayload::Stdin(text),
        EntryKind::Function { arity, .. } => {
            let args = parse_argument_list(&text).ok()?;
            if arity.is_some_and(|a| a != args.len()) || !args.iter().all(|a| a.is_driver_supported()) {
                return None;
            }
            TestPayload::Args(args)
        }
    };
    Some(TestInput { payload, origin: TestOrigin::Generated, flavor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{MockTranscript, TranscriptEntry};
    use crate::literal::Literal;
    use crate::prompt::GenerationParams;
    use alloc::vec;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stdin(inputs: &[TestInput]) -> Vec<&str> {
        inputs
            .iter()
            .map(|i| match &i.payload {
                TestPayload::Stdin(s) => s.as_str(),
                TestPayload::Args(_) => panic!("args"),
            })
            .collect()
    }

    #[test]
    fn parses_blocks() {
        let got = parse_test_inputs("Input_0:\n5\nInput_1:\n-1\nInput_2:\n0", &EntryKind::Stdio, TestFlavor::Complex, 3);
        assert_eq!(stdin(&got), vec!["5", "-1", "0"]);
        assert!(got.iter().all(|i| i.origin == TestOrigin::Generated && i.flavor == TestFlavor::Complex));
    }

    #[test]
    fn drops_malformed_blocks() {
        let got = parse_test_inputs("Input_0:\n3 4\nInput_1:\n\nInput_2:\n1 2\n", &EntryKind::Stdio, TestFlavor::Difficult, 3);
        assert_eq!(stdin(&got), vec!["3 4", "1 2"]);
        let func = EntryKind::Function { function_name: "add".into(), arity: Some(2) };
        let got = parse_test_inputs("Input_0:\n2, 3\nInput_1:\n(1,\nInput_2:\n4\n", &func, TestFlavor::Difficult, 3);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].payload, TestPayload::Args(vec![Literal::Int(2), Literal::Int(3)]));
    }

    #[test]
    fn multi_line_and_caps() {
        let text = "```\nInput_0:\n2\n1 2\n\nInput_1: 7\nInput_2:\n8\n```";
        let got = parse_test_inputs(text, &EntryKind::Stdio, TestFlavor::CornerCase, 2);
        assert_eq!(stdin(&got), vec!["2\n1 2", "7"]);
    }

    #[test]
    fn unparseable_completion() {
        let entry = TranscriptEntry { template: PromptTemplateId::TestGen, contains: None, response: "no inputs here".into() };
        let mut gw = Gateway::new(MockTranscript::new(vec![entry]), GenerationParams::default(), 40);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = generate_test_inputs("print(1)", LanguageId::Python, &EntryKind::Stdio, 3, None, &mut rng, &mut gw);
        assert_eq!(err, Err(AgentError::FormatUnparseable));
    }

    #[test]
    fn flavor_is_seeded_and_covers_all() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..60).map(|_| pick_flavor(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        let d = draw(7);
        for f in TestFlavor::GENERATED {
            assert!(d.contains(&f));
        }
    }

    #[test]
    fn request_binds_count_and_flavor() {
        let r = test_generation_request("x = input()", LanguageId::Python, 10, TestFlavor::CornerCase, None).unwrap();
        assert!(r.prompt.contains("Generate 10 corner case input for the above Python code."));
        assert!(r.prompt.contains("(x will be 9)"));
        assert!(r.context.contains("high quality and corner case tests for Python code"));
        assert!(test_generation_request("x", LanguageId::Python, 0, TestFlavor::Complex, None).is_err());
    }
}
