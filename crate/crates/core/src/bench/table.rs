//! Rendering records as problem × parameterization tables.

use serde::Deserialize;

use super::config::ProblemKind;
use super::run::RunRecord;
use crate::param::ParamKind;

pub const MISSING_CELL: &str = "--";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PerIter,
    PerSec,
}

impl Metric {
    fn of(self, r: &RunRecord) -> Option<f64> {
        match self {
            Metric::PerIter => r.min_ess_per_iter,
            Metric::PerSec => r.min_ess_per_sec,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::PerIter => "minESS/iter",
            Metric::PerSec => "minESS/sec",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Text,
}

/// One table row: mean metric per parameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub problem: String,
    pub j: usize,
    pub k: usize,
    pub t: Option<usize>,
    /// Indexed by `ParamKind::index()`; `None` when no successful run exists.
    pub means: [Option<f64>; 4],
    pub counts: [usize; 4],
}

impl TableRow {
    /// Kind with the largest mean.
    pub fn best(&self) -> Option<ParamKind> {
        ParamKind::ALL
            .into_iter()
            .filter_map(|k| self.means[k.index()].map(|m| (k, m)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k)
    }
}

/// Groups records by `(problem, J, K, T)` in order of first appearance and
/// averages the metric over successful runs.
pub fn table_rows(records: &[RunRecord], metric: Metric) -> Vec<TableRow> {
    let mut rows: Vec<TableRow> = Vec::new();
    let mut sums: Vec<[f64; 4]> = Vec::new();
    for r in records {
        let idx = match rows
            .iter()
            .position(|row| row.problem == r.problem && row.j == r.j && row.k == r.k && row.t == r.t)
        {
            Some(i) => i,
            None => {
                rows.push(TableRow {
                    problem: r.problem.clone(),
                    j: r.j,
                    k: r.k,
                    t: r.t,
                    means: [None; 4],
                    counts: [0; 4],
                });
                sums.push([0.0; 4]);
                rows.len() - 1
            }
        };
        if let (false, Some(v)) = (r.failed, metric.of(r)) {
            let c = r.kind.index();
            sums[idx][c] += v;
            rows[idx].counts[c] += 1;
        }
    }
    for (row, s) in rows.iter_mut().zip(&sums) {
        for c in 0..4 {
            if row.counts[c] > 0 {
                row.means[c] = Some(s[c] / row.counts[c] as f64);
            }
        }
    }
    rows
}

fn fmt_value(v: f64) -> String {
    if v == 0.0 || (1e-3..1e5).contains(&v.abs()) {
        format!("{v:.4}")
    } else {
        format!("{v:.4e}")
    }
}

/// Renders a table. CSV output is purely numeric apart from `--` cells so
/// it loads back with `load_csv_matrix(.., "--")`: the problem is a code
/// (uniform 0, eigenmodel 1, ppca 2, mc 3) and `best` is the index of the
/// winning column. Text output marks the best cell with `*`.
pub fn emit_table(records: &[RunRecord], metric: Metric, format: TableFormat) -> String {
    let rows = table_rows(records, metric);
    match format {
        TableFormat::Csv => {
            let mut out = String::from("problem_code,J,K,T,polar,householder,cayley,givens,best\n");
            for row in &rows {
                let code = ProblemKind::from_name(&row.problem).map_or(MISSING_CELL.to_string(), |p| p.code().to_string());
                let mut cells = vec![
                    code,
                    row.j.to_string(),
                    row.k.to_string(),
                    row.t.map_or(MISSING_CELL.into(), |t| t.to_string()),
                ];
                cells.extend(row.means.iter().map(|m| m.map_or(MISSING_CELL.into(), |v| v.to_string())));
                cells.push(row.best().map_or(MISSING_CELL.into(), |k| k.index().to_string()));
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        TableFormat::Text => {
            let mut header = vec!["problem".to_string(), "J".into(), "K".into(), "T".into()];
            header.extend(ParamKind::ALL.iter().map(|k| k.title().to_string()));
            let mut body: Vec<Vec<String>> = Vec::new();
            for row in &rows {
                let best = row.best();
                let mut cells = vec![
                    row.problem.clone(),
                    row.j.to_string(),
                    row.k.to_string(),
                    row.t.map_or(MISSING_CELL.into(), |t| t.to_string()),
                ];
                for k in ParamKind::ALL {
                    cells.push(match row.means[k.index()] {
                        Some(v) if best == Some(k) => format!("{}*", fmt_value(v)),
                        Some(v) => fmt_value(v),
                        None => MISSING_CELL.into(),
                    });
                }
                body.push(cells);
            }
            let widths: Vec<usize> = (0..header.len())
                .map(|c| body.iter().map(|r| r[c].chars().count()).chain([header[c].len()]).max().unwrap_or(0))
                .collect();
            let line = |cells: &[String]| {
                cells
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            let mut out = format!("{} (mean over runs; * = best in row)\n", metric.label());
            out.push_str(&line(&header));
            out.push('\n');
            for r in &body {
                out.push_str(&line(r));
                out.push('\n');
            }
            out
        }
    }
}
