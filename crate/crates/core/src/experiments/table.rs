//! Summary tables.

use std::path::Path;

use super::scenario::{write_json, ScenarioReport};
use super::ExperimentError;

const HEADER: [&str; 9] = ["scenario", "seed", "beads", "initial E", "final E", "converged", "round", "steps", "classification"];

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

/// Aligned text table, one row per report, ordered by name then seed.
pub fn report_table(reports: &[ScenarioReport]) -> Result<String, ExperimentError> {
    if reports.is_empty() {
        return Err(ExperimentError::EmptyReports);
    }
    let mut sorted: Vec<&ScenarioReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name).then(a.seed.cmp(&b.seed)));
    let rows: Vec<[String; 9]> = sorted
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                r.seed.to_string(),
                r.beads.to_string(),
                format!("{:.6}", r.initial_energy),
                format!("{:.6}", r.final_energy),
                yes_no(r.converged),
                yes_no(r.round),
                r.steps.to_string(),
                r.classification.clone(),
            ]
        })
        .collect();
    let mut widths = HEADER.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let text: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(k, (c, w))| if (1..=4).contains(&k) || k == 7 { format!("{c:>w$}") } else { format!("{c:<w$}") })
            .collect();
        out.push_str(text.join("  ").trim_end());
        out.push('\n');
    };
    line(&HEADER.map(String::from));
    for row in &rows {
        line(row);
    }
    Ok(out)
}

/// Writes the reports as a JSON array.
pub fn write_report_json(reports: &[ScenarioReport], path: &Path) -> Result<(), ExperimentError> {
    write_json(path, &reports)
}
