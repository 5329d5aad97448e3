use std::fmt::Write;

use super::{Metrics, ProgramReport, ResilienceReport};
use crate::attacks::{AttackKind, AttackOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Markdown),
            _ => Err(format!("unknown format `{s}`")),
        }
    }
}

pub fn render(report: &ResilienceReport, format: Format) -> String {
    match format {
        Format::Json => {
            // Going through `Value` sorts object keys.
            let value = serde_json::to_value(report).expect("report serializes");
            let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
            s.push('\n');
            s
        }
        Format::Markdown => markdown(report),
    }
}

fn table(out: &mut String, title: &str, headers: &[&str], rows: &[Vec<String>]) {
    let _ = writeln!(out, "## {title}\n");
    let _ = writeln!(out, "| {} |", headers.join(" | "));
    let align: Vec<&str> = headers
        .iter()
        .enumerate()
        .map(|(i, _)| if i == 0 { "---" } else { "---:" })
        .collect();
    let _ = writeln!(out, "| {} |", align.join(" | "));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

fn metric_rows(report: &ResilienceReport, cols: impl Fn(&Metrics, &Metrics) -> Vec<i64>, width: usize) -> Vec<Vec<String>> {
    report
        .programs
        .iter()
        .map(|p| {
            let mut row = vec![p.name.clone()];
            match (&p.wm, &p.tp) {
                (Some(wm), Some(tp)) => row.extend(cols(wm, tp).into_iter().map(|v| v.to_string())),
                _ => row.extend(std::iter::repeat("-".to_string()).take(width)),
            }
            row
        })
        .collect()
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

fn attack_row(p: &ProgramReport, kind: AttackKind) -> Vec<String> {
    let mut row = vec![p.name.clone()];
    match p.attacks.iter().find(|c| c.kind == kind) {
        Some(cell) => {
            let side = |o: &AttackOutcome| vec![o.verdict.to_string(), yes_no(o.runs_ok), yes_no(o.watermark_survives)];
            row.extend(side(&cell.wm));
            row.extend(side(&cell.tp));
            row.push(yes_no(cell.wm.changed || cell.tp.changed));
        }
        None => row.extend(std::iter::repeat("-".to_string()).take(7)),
    }
    row
}

fn markdown(report: &ResilienceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Resilience report\n");
    let trigger: Vec<String> = report.trigger.iter().map(|t| t.to_string()).collect();
    let _ = writeln!(
        out,
        "Watermark `{}`, trigger `{}`, policy `{}`, seed {}. WM is the watermarked build, TP the protected build.\n",
        report.watermark,
        trigger.join(","),
        report.policy,
        report.seed
    );

    let i = |v: u64| v as i64;
    table(
        &mut out,
        "Heap space",
        &["Program", "WM peak live", "TP peak live", "Δ peak live", "WM allocations", "TP allocations", "Δ allocations"],
        &metric_rows(
            report,
            |w, t| {
                vec![
                    i(w.peak_live_nodes),
                    i(t.peak_live_nodes),
                    i(t.peak_live_nodes) - i(w.peak_live_nodes),
                    i(w.total_allocations),
                    i(t.total_allocations),
                    i(t.total_allocations) - i(w.total_allocations),
                ]
            },
            6,
        ),
    );
    table(
        &mut out,
        "Execution steps",
        &["Program", "WM steps", "TP steps", "Δ steps"],
        &metric_rows(report, |w, t| vec![i(w.steps), i(t.steps), i(t.steps) - i(w.steps)], 3),
    );

    let size_rows: Vec<Vec<String>> = report
        .programs
        .iter()
        .map(|p| {
            let mut row = vec![p.name.clone()];
            match (&p.wm, &p.tp) {
                (Some(w), Some(t)) => row.extend(
                    [
                        i(w.code_size_bytes),
                        i(t.code_size_bytes),
                        i(t.code_size_bytes) - i(w.code_size_bytes),
                        p.support_bytes,
                        p.site_bytes,
                        p.sites as i64,
                        p.protected_sites as i64,
                        p.lookups as i64,
                    ]
                    .map(|v| v.to_string()),
                ),
                _ => row.extend(std::iter::repeat("-".to_string()).take(8)),
            }
            row
        })
        .collect();
    table(
        &mut out,
        "Code size",
        &["Program", "WM bytes", "TP bytes", "Δ bytes", "Support bytes", "Site bytes", "Sites", "Encoded sites", "Lookups"],
        &size_rows,
    );
    if !report.programs.is_empty() {
        let support = report.s_support.map_or("varies".to_string(), |s| format!("{s} bytes"));
        let _ = writeln!(
            out,
            "Fixed support overhead: {support}. Δ bytes = support + site bytes for every program: {}.\n",
            yes_no(report.fixed_overhead_holds)
        );
    }

    for kind in AttackKind::ALL {
        let title = if kind.is_adapted() {
            format!("Attack: {kind} (adapted)")
        } else {
            format!("Attack: {kind}")
        };
        let rows: Vec<Vec<String>> = report.programs.iter().map(|p| attack_row(p, kind)).collect();
        table(
            &mut out,
            &title,
            &["Program", "WM verdict", "WM runs ok", "WM watermark", "TP verdict", "TP runs ok", "TP watermark", "Changed"],
            &rows,
        );
        if kind == AttackKind::Reorder {
            out.push_str("Heap-touching statements keep their relative order.\n\n");
        }
    }
    let errors: Vec<&ProgramReport> = report.programs.iter().filter(|p| p.error.is_some()).collect();
    if !errors.is_empty() {
        out.push_str("## Failures\n\n");
        for p in errors {
            let _ = writeln!(out, "- {}: {}", p.name, p.error.as_deref().unwrap_or_default());
        }
        out.push('\n');
    }
    out.pop();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> ResilienceReport {
        ResilienceReport {
            watermark: "472".into(),
            trigger: vec![9, 9],
            policy: "all".into(),
            seed: 0,
            s_support: None,
            fixed_overhead_holds: false,
            programs: vec![],
        }
    }

    #[test]
    fn empty_report_has_headers_only() {
        let md = render(&empty(), Format::Markdown);
        assert!(md.contains("## Heap space"));
        assert!(md.contains("## Attack: split_function (adapted)"));
        assert!(!md.contains("Fixed support overhead"));
        for line in md.lines().filter(|l| l.starts_with('|')) {
            assert!(line.starts_with("| Program") || line.starts_with("| ---"), "{line}");
        }
    }

    #[test]
    fn json_is_stable_and_sorted() {
        let a = render(&empty(), Format::Json);
        assert_eq!(a, render(&empty(), Format::Json));
        let fixed = a.find("\"fixed_overhead_holds\"").unwrap();
        let watermark = a.find("\"watermark\"").unwrap();
        assert!(fixed < watermark);
        assert_eq!(ResilienceReport::from_json(&a).unwrap(), empty());
    }
}
