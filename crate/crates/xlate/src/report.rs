//! Plain-text and markdown tables over a benchmark report.

use serde::{Deserialize, Serialize};
use xlate_core::metrics::{format2, issue_density};
use xlate_core::model::parse_language_id;

use crate::bench::{format_ca, BenchmarkReport, TaskStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Markdown,
}

/// One row of an issue-count file: `[{"name", "issues", "nloc"}]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueCount {
    pub name: String,
    pub issues: u64,
    pub nloc: u64,
}

struct Table {
    title: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(title: &str, header: &[&str]) -> Self {
        Table { title: title.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Markdown => {
                out.push_str(&format!("### {}\n\n", self.title));
                out.push_str(&format!("| {} |\n", self.header.join(" | ")));
                out.push_str(&format!("|{}\n", "---|".repeat(self.header.len())));
                for r in &self.rows {
                    out.push_str(&format!("| {} |\n", r.join(" | ")));
                }
            }
            Format::Text => {
                let widths: Vec<usize> = (0..self.header.len())
                    .map(|i| {
                        self.rows.iter().map(|r| r[i].chars().count()).chain([self.header[i].chars().count()]).max().unwrap_or(0)
                    })
                    .collect();
                let line = |cells: &[String]| {
                    let padded: Vec<String> =
                        cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}", w = *w)).collect();
                    format!("{}\n", padded.join("  ").trim_end())
                };
                out.push_str(&format!("{}\n", self.title));
                out.push_str(&line(&self.header));
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                out.push_str(&line(&rule));
                for r in &self.rows {
                    out.push_str(&line(r));
                }
            }
        }
        out
    }
}

fn lang_name(key: &str) -> String {
    parse_language_id(key).map(|l| l.display_name().to_string()).unwrap_or_else(|_| key.to_string())
}

pub fn accuracy_table(report: &BenchmarkReport, format: Format) -> String {
    let mut t = Table::new(
        "Computational accuracy (%)",
        &["Dataset", "Source", "Target", "Accuracy (generated tests)", "Accuracy (evaluation tests)"],
    );
    for p in &report.pairs {
        t.rows.push(vec![
            report.dataset.clone(),
            lang_name(&p.source),
            lang_name(&p.target),
            format_ca(p.generated),
            format_ca(p.evaluation),
        ]);
    }
    if let Some(overall) = report.overall {
        t.rows.push(vec![report.dataset.clone(), "all".into(), "all".into(), "-".into(), overall.formatted()]);
    }
    t.render(format)
}

pub fn ablation_table(report: &BenchmarkReport, format: Format) -> Option<String> {
    let rows = report.ablation.as_ref()?;
    let pairs: Vec<(String, String)> = rows
        .first()
        .map(|r| r.pairs.iter().map(|p| (p.source.clone(), p.target.clone())).collect())
        .unwrap_or_default();
    let mut header = vec!["Configuration".to_string()];
    header.extend(pairs.iter().map(|(s, t)| format!("{}->{}", lang_name(s), lang_name(t))));
    header.push("Average".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new("Ablation (evaluation CA %)", &header_refs);
    for row in rows {
        let mut cells = vec![row.stage.label().to_string()];
        for (s, tg) in &pairs {
            let ca = row.pairs.iter().find(|p| &p.source == s && &p.target == tg).and_then(|p| p.evaluation);
            cells.push(format_ca(ca));
        }
        cells.push(format2(row.average));
        t.rows.push(cells);
    }
    Some(t.render(format))
}

pub fn issue_table(issues: &[IssueCount], format: Format) -> String {
    let mut t = Table::new("Issue density", &["Name", "Issues", "NLOC", "Issues per 1,000 NLOC"]);
    for i in issues {
        let density = issue_density(i.issues, i.nloc).map_or_else(|_| "-".into(), |d| d.formatted());
        t.rows.push(vec![i.name.clone(), i.issues.to_string(), i.nloc.to_string(), density]);
    }
    t.render(format)
}

fn task_table(report: &BenchmarkReport, format: Format) -> String {
    let mut t = Table::new("Tasks", &["Task", "Pair", "Status", "Eval", "LLM calls", "Stop"]);
    for task in &report.tasks {
        let status = match task.status {
            TaskStatus::Ran if task.eval_pass => "pass".to_string(),
            TaskStatus::Ran => "fail".to_string(),
            TaskStatus::Skipped => format!("skipped: {}", task.reason.clone().unwrap_or_default()),
            TaskStatus::Failed => format!("error: {}", task.reason.clone().unwrap_or_default()),
        };
        t.rows.push(vec![
            task.id.clone(),
            format!("{}->{}", lang_name(&task.source_language), lang_name(&task.target_language)),
            status,
            format!("{}/{}", task.eval_passed, task.eval_total),
            task.llm_calls.to_string(),
            task.stop_reason.clone(),
        ]);
    }
    t.render(format)
}

/// Every table the report supports, separated by blank lines.
pub fn render(report: &BenchmarkReport, format: Format, issues: Option<&[IssueCount]>) -> String {
    let mut parts = Vec::new();
    if !report.pairs.is_empty() || report.ablation.is_none() {
        parts.push(accuracy_table(report, format));
    }
    if let Some(a) = ablation_table(report, format) {
        parts.push(a);
    }
    if let Some(i) = issues {
        parts.push(issue_table(i, format));
    }
    if !report.tasks.is_empty() {
        parts.push(task_table(report, format));
    }
    let mut footer = format!("LLM calls: {}  wall time: {} ms", report.total_llm_calls, report.wall_ms);
    if report.cancelled {
        footer.push_str("  (cancelled, partial results)");
    }
    if !report.invalid.is_empty() {
        footer.push_str(&format!("\ninvalid entries: {}", report.invalid.len()));
        for e in &report.invalid {
            footer.push_str(&format!("\n  {}: {}", e.id, e.error));
        }
    }
    parts.push(format!("{footer}\n"));
    parts.join("\n")
}
