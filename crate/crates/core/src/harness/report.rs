use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::sweep::{summarize, RunRow, SummaryRow, SweepResult};
use super::{Architecture, Family, HarnessError};
use crate::scenario::string_enum;

pub const SUMMARY_CSV_HEADER: &str = "architecture,family,density,accuracy_mean,accuracy_std,seeds";
pub const ROWS_CSV_HEADER: &str = "architecture,family,density,seed,accuracy,train_instances,test_instances,error";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    PlotData,
}

string_enum!(ReportFormat {
    Csv => "csv",
    Markdown => "markdown",
    PlotData => "plot-data",
});

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        s.parse().map_err(|_| HarnessError::UnknownFormat(s.to_string()))
    }

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
            ReportFormat::PlotData => "json",
        }
    }
}

fn write_serde_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<(), HarnessError> {
    let err = |e: csv::Error| HarnessError::Parse(e.to_string());
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(err)?;
    }
    wr.flush().map_err(|e| HarnessError::Parse(e.to_string()))
}

fn read_serde_csv<T: for<'de> Deserialize<'de>, R: Read>(r: R, header: &str) -> Result<Vec<T>, HarnessError> {
    let mut rd = csv::Reader::from_reader(r);
    let got = rd.headers().map_err(|e| HarnessError::Parse(e.to_string()))?;
    if got.iter().ne(header.split(',')) {
        return Err(HarnessError::Parse(format!("expected header `{header}`")));
    }
    rd.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| HarnessError::Parse(format!("row {}: {e}", i + 1))))
        .collect()
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], w: W) -> Result<(), HarnessError> {
    if summary.is_empty() {
        // serde-driven csv writes the header with the first row
        let mut w = w;
        return writeln!(w, "{SUMMARY_CSV_HEADER}").map_err(|e| HarnessError::Parse(e.to_string()));
    }
    write_serde_csv(summary, w)
}

pub fn read_summary_csv<R: Read>(r: R) -> Result<Vec<SummaryRow>, HarnessError> {
    read_serde_csv(r, SUMMARY_CSV_HEADER)
}

pub fn write_rows_csv<W: Write>(result: &SweepResult, w: W) -> Result<(), HarnessError> {
    if result.rows.is_empty() {
        let mut w = w;
        return writeln!(w, "{ROWS_CSV_HEADER}").map_err(|e| HarnessError::Parse(e.to_string()));
    }
    write_serde_csv(&result.rows, w)
}

pub fn read_rows_csv<R: Read>(r: R) -> Result<SweepResult, HarnessError> {
    Ok(SweepResult {
        rows: read_serde_csv::<RunRow, _>(r, ROWS_CSV_HEADER)?,
    })
}

/// The results table: one row per (family, architecture), one column per
/// density, seed-averaged accuracy to two decimals.
pub fn markdown_table(summary: &[SummaryRow]) -> String {
    let densities: BTreeSet<usize> = summary.iter().map(|r| r.density).collect();
    let mut out = String::from("| Cell density |");
    for d in &densities {
        out.push_str(&format!(" {d} |"));
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(densities.len()));
    out.push('\n');
    for family in Family::ALL {
        for arch in Architecture::ALL {
            if !summary.iter().any(|r| r.family == family && r.architecture == arch) {
                continue;
            }
            out.push_str(&format!("| {} ({}) |", arch.display_name(), family.display_name()));
            for &d in &densities {
                match summary.iter().find(|r| r.family == family && r.architecture == arch && r.density == d) {
                    Some(r) => out.push_str(&format!(" {:.2} |", r.accuracy_mean)),
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
    }
    out
}

/// One line of a density/accuracy plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub architecture: Architecture,
    pub family: Family,
    /// (density, mean accuracy, std) in density order.
    pub points: Vec<(usize, f64, f64)>,
}

pub fn plot_data(summary: &[SummaryRow]) -> Vec<PlotSeries> {
    let mut out = Vec::new();
    for family in Family::ALL {
        for architecture in Architecture::ALL {
            let mut points: Vec<(usize, f64, f64)> = summary
                .iter()
                .filter(|r| r.family == family && r.architecture == architecture)
                .map(|r| (r.density, r.accuracy_mean, r.accuracy_std))
                .collect();
            if points.is_empty() {
                continue;
            }
            points.sort_by_key(|p| p.0);
            out.push(PlotSeries { architecture, family, points });
        }
    }
    out
}

/// Renders a sweep result in the requested format.
pub fn render(result: &SweepResult, format: ReportFormat) -> Result<String, HarnessError> {
    let summary = summarize(result);
    if summary.is_empty() {
        return Err(HarnessError::Empty("no successful rows in the sweep result".into()));
    }
    Ok(match format {
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            write_summary_csv(&summary, &mut buf)?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
        ReportFormat::Markdown => markdown_table(&summary),
        ReportFormat::PlotData => {
            serde_json::to_string_pretty(&plot_data(&summary)).map_err(|e| HarnessError::Parse(e.to_string()))?
        }
    })
}
