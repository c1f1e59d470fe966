//! Re-rendering report CSVs as aligned text tables. Errors are shown
//! multiplied by 10², with their standard errors.

use std::fmt::Write as _;

use famiss::Method;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: Method,
    pub mask_kind: String,
    pub split: String,
    pub n_examples: usize,
    pub mean_error: f64,
    pub std_error: f64,
}

pub fn parse_report_csv(text: &str) -> CliResult<Vec<ReportRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == famiss::ImputationReport::CSV_HEADER => {}
        _ => {
            return Err(CliError::Usage(
                "report CSV has an unexpected header".into(),
            ))
        }
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || CliError::Usage(format!("report row {}: malformed {line:?}", i + 1));
            if fields.len() != 6 {
                return Err(bad());
            }
            Ok(ReportRow {
                method: fields[0].parse()?,
                mask_kind: fields[1].to_owned(),
                split: fields[2].to_owned(),
                n_examples: fields[3].parse().map_err(|_| bad())?,
                mean_error: fields[4].parse().map_err(|_| bad())?,
                std_error: fields[5].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

fn mask_label(kind: &str) -> String {
    match kind.split(':').next() {
        Some("random") => "R".to_owned(),
        Some("quarters") => "Q".to_owned(),
        _ => kind.to_owned(),
    }
}

/// One line per (mask kind, split), one column per method present, in the
/// canonical method order.
pub fn render_table(rows: &[ReportRow]) -> String {
    let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();

    let mut groups: Vec<(String, String)> = Vec::new();
    for row in rows {
        let key = (row.mask_kind.clone(), row.split.clone());
        if !groups.contains(&key) {
            groups.push(key);
        }
    }

    let mut header = vec!["mask".to_owned(), "split".to_owned()];
    header.extend(methods.iter().map(|m| m.title().to_owned()));
    let mut body: Vec<Vec<String>> = Vec::new();
    for (kind, split) in &groups {
        let mut line = vec![mask_label(kind), split.clone()];
        for method in &methods {
            let cell = rows
                .iter()
                .find(|r| &r.mask_kind == kind && &r.split == split && r.method == *method)
                .map_or_else(
                    || "-".to_owned(),
                    |r| format!("{:.4} ± {:.4}", r.mean_error * 1e2, r.std_error * 1e2),
                );
            line.push(cell);
        }
        body.push(line);
    }

    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            std::iter::once(&header)
                .chain(&body)
                .map(|row| row[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Mean squared imputation error (x10^2) ± standard error"
    );
    for row in std::iter::once(&header).chain(&body) {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "method,mask_kind,split,n_examples,mean_error,std_error\n\
        mean,random:0.5,test,400,0.045323,0.000047\n\
        exact,random:0.5,test,400,0.005913,0.000001\n\
        exact,quarters:uniform,test,400,0.006998,0.000005\n";

    #[test]
    fn parses_and_renders() {
        let rows = parse_report_csv(CSV).unwrap();
        assert_eq!(rows.len(), 3);
        let table = render_table(&rows);
        assert!(table.contains("4.5323 ± 0.0047"), "{table}");
        assert!(table.contains("0.5913 ± 0.0001"));
        let q_line = table.lines().find(|l| l.starts_with('Q')).unwrap();
        assert!(q_line.contains('-') && q_line.contains("0.6998"));
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(parse_report_csv("a,b\n1,2\n").is_err());
        let bad = "method,mask_kind,split,n_examples,mean_error,std_error\nexact,r,test,x,1,1\n";
        assert!(parse_report_csv(bad).is_err());
    }
}
