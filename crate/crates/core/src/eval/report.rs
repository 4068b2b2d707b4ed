//! Study reports and their text renderings.
//!
//! Text formats (csv, markdown) print numbers at 6 significant digits;
//! JSON keeps full precision. The best cell of each row is bolded in
//! markdown, mirroring how result tables usually highlight winners.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Value(f64),
    Failed(String),
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(*v),
            Cell::Failed(_) => None,
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, Cell::Failed(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub cells: Vec<Cell>,
    /// Index of the highlighted cell, chosen by the study that built the row.
    pub best: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub title: String,
    pub row_label: String,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl StudyReport {
    pub fn new(title: impl Into<String>, row_label: impl Into<String>, columns: Vec<String>) -> Self {
        Self { title: title.into(), row_label: row_label.into(), columns, rows: Vec::new() }
    }

    pub fn push_row(&mut self, row: ReportRow) -> Result<()> {
        if row.cells.len() != self.columns.len() {
            return Err(Error::Report(format!(
                "row {:?} has {} cells for {} columns",
                row.label,
                row.cells.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.cells.iter().any(Cell::is_failed))
    }

    pub fn cell(&self, row_label: &str, column: &str) -> Option<&Cell> {
        let col = self.columns.iter().position(|c| c == column)?;
        self.rows.iter().find(|r| r.label == row_label).map(|r| &r.cells[col])
    }

    /// Concatenates rows of reports that share columns.
    pub fn merge(title: impl Into<String>, reports: Vec<StudyReport>) -> Result<StudyReport> {
        let mut iter = reports.into_iter();
        let mut merged = iter.next().ok_or_else(|| Error::Report("no reports to merge".into()))?;
        merged.title = title.into();
        for r in iter {
            if r.columns != merged.columns {
                return Err(Error::Report(format!(
                    "column mismatch: {:?} vs {:?}",
                    r.columns, merged.columns
                )));
            }
            merged.rows.extend(r.rows);
        }
        Ok(merged)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            "md" | "markdown" => Some(ReportFormat::Markdown),
            _ => None,
        }
    }
}

/// Formats a float at `sig` significant digits, trimming trailing zeros;
/// switches to scientific notation outside [1e-4, 10^sig).
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", sig.saturating_sub(1), x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp >= sig as i32 || exp < -4 {
        return format!("{}e{}", trim(mantissa), exp);
    }
    // re-render in plain decimal with the precision that keeps `sig`
    // significant digits
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    trim(&format!("{x:.decimals$}"))
}

fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Value(v) => fmt_sig(*v, 6),
        Cell::Failed(reason) => format!("failed: {reason}"),
    }
}

/// Renders a report deterministically in the requested format.
pub fn render_report(report: &StudyReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).expect("report serializes") + "\n"
        }
        ReportFormat::Csv => {
            let mut out = String::new();
            out.push_str(&report.row_label);
            for c in &report.columns {
                out.push(',');
                out.push_str(c);
            }
            out.push('\n');
            for row in &report.rows {
                out.push_str(&row.label);
                for cell in &row.cells {
                    out.push(',');
                    out.push_str(&cell_text(cell));
                }
                out.push('\n');
            }
            out
        }
        ReportFormat::Markdown => {
            let mut out = format!("# {}\n\n", report.title);
            out.push_str(&format!("| {} |", report.row_label));
            for c in &report.columns {
                out.push_str(&format!(" {c} |"));
            }
            out.push('\n');
            out.push_str("|---|");
            for _ in &report.columns {
                out.push_str("---|");
            }
            out.push('\n');
            for row in &report.rows {
                out.push_str(&format!("| {} |", row.label));
                for (i, cell) in row.cells.iter().enumerate() {
                    let text = cell_text(cell);
                    if row.best == Some(i) {
                        out.push_str(&format!(" **{text}** |"));
                    } else {
                        out.push_str(&format!(" {text} |"));
                    }
                }
                out.push('\n');
            }
            out
        }
    }
}
