//! Corpus-level aggregates and their text-table rendering.

use serde::{Deserialize, Serialize};

use crate::metrics::{Metric, MetricReport};
use crate::selector::SelectionShare;

/// Mean and population standard deviation; `None` for an empty slice.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Chunk-size statistics over every chunk of a corpus run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub method: String,
    pub mean: f64,
    pub max: usize,
    pub min: usize,
    pub std: f64,
    pub chunks: usize,
    pub documents: usize,
    /// Wall time spent chunking, in seconds.
    pub time_secs: f64,
}

impl SizeStats {
    pub fn from_counts(
        method: impl Into<String>,
        counts: &[usize],
        documents: usize,
        time_secs: f64,
    ) -> Self {
        let values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let (mean, std) = mean_std(&values).unwrap_or((0.0, 0.0));
        Self {
            method: method.into(),
            mean,
            max: counts.iter().copied().max().unwrap_or(0),
            min: counts.iter().copied().min().unwrap_or(0),
            std,
            chunks: counts.len(),
            documents,
            time_secs,
        }
    }
}

/// Per-metric mean ± standard deviation (in percent) over the documents where
/// the metric applies, plus the mean of per-document means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub method: String,
    pub documents: usize,
    pub rc: Option<(f64, f64)>,
    pub icc: Option<(f64, f64)>,
    pub dcc: Option<(f64, f64)>,
    pub bi: Option<(f64, f64)>,
    pub sc: Option<(f64, f64)>,
    pub mean: Option<f64>,
}

impl MetricAggregate {
    pub fn from_reports(method: impl Into<String>, reports: &[MetricReport]) -> Self {
        let pct = |m: Metric| {
            let values: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.get(m).value())
                .map(|v| v * 100.0)
                .collect();
            mean_std(&values)
        };
        let means: Vec<f64> = reports.iter().map(|r| r.mean * 100.0).collect();
        Self {
            method: method.into(),
            documents: reports.len(),
            rc: pct(Metric::Rc),
            icc: pct(Metric::Icc),
            dcc: pct(Metric::Dcc),
            bi: pct(Metric::Bi),
            sc: pct(Metric::Sc),
            mean: mean_std(&means).map(|(m, _)| m),
        }
    }

    pub fn get(&self, metric: Metric) -> Option<(f64, f64)> {
        match metric {
            Metric::Rc => self.rc,
            Metric::Icc => self.icc,
            Metric::Dcc => self.dcc,
            Metric::Bi => self.bi,
            Metric::Sc => self.sc,
        }
    }
}

/// Align `rows` under `header`; the first column is left-aligned, the rest
/// right-aligned.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        parts.join(" | ").trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    out.push_str(
        &widths
            .iter()
            .map(|&w| "-".repeat(w))
            .collect::<Vec<_>>()
            .join("-|-"),
    );
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

pub const SIZE_COLUMNS: [&str; 7] = [
    "method", "mean", "max", "min", "std", "# chunks", "time [s]",
];

/// Size table: integer token statistics and seconds to two decimals.
pub fn size_table(rows: &[SizeStats]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|s| {
            vec![
                s.method.clone(),
                format!("{:.0}", s.mean),
                s.max.to_string(),
                s.min.to_string(),
                format!("{:.0}", s.std),
                s.chunks.to_string(),
                format!("{:.2}", s.time_secs),
            ]
        })
        .collect();
    render_table(&SIZE_COLUMNS, &body)
}

pub const METRIC_COLUMNS: [&str; 7] = ["method", "RC", "ICC", "DCC", "BI", "SC", "mean"];

/// Metric table: `mean ± std` in percent with one decimal, overall mean with two.
pub fn metric_table(rows: &[MetricAggregate]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|a| {
            let mut row = vec![a.method.clone()];
            for m in Metric::ALL {
                row.push(match a.get(m) {
                    Some((mean, std)) => format!("{mean:.1} ± {std:.1}"),
                    None => "n/a".into(),
                });
            }
            row.push(a.mean.map_or_else(|| "n/a".into(), |m| format!("{m:.2}")));
            row
        })
        .collect();
    render_table(&METRIC_COLUMNS, &body)
}

pub fn selection_table(shares: &[SelectionShare]) -> String {
    let body: Vec<Vec<String>> = shares
        .iter()
        .map(|s| vec![s.method.clone(), s.percent.to_string()])
        .collect();
    render_table(&["selected method", "% selection"], &body)
}
