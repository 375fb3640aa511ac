//! Aggregation of a results table into per-cell means.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Method;
use crate::error::CliError;
use crate::harness::ResultRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    /// Noise level, sensor count, or both when the table varies in both.
    pub cell: String,
    #[serde(rename = "mean_PE")]
    pub mean_pe: f64,
    /// Sample standard deviation of δ; 0 for a single network.
    #[serde(rename = "std_PE")]
    pub std_pe: f64,
    pub mean_solve_time_s: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct CellKey {
    n: usize,
    sigma_bits: u64,
}

impl CellKey {
    fn sigma(&self) -> f64 {
        f64::from_bits(self.sigma_bits)
    }
}

fn cell_label(key: &CellKey, vary_n: bool, vary_sigma: bool) -> String {
    match (vary_n, vary_sigma) {
        (true, false) => key.n.to_string(),
        (true, true) => format!("n={};sigma={}", key.n, key.sigma()),
        (false, _) => key.sigma().to_string(),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Groups rows by method and `(n, σ)`, in method order then ascending cell.
/// Every row counts, whatever its solver status.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Method, CellKey), Vec<&ResultRow>> = BTreeMap::new();
    for row in rows {
        let key = CellKey {
            n: row.n,
            sigma_bits: row.sigma.to_bits(),
        };
        groups.entry((row.method, key)).or_default().push(row);
    }
    let ns: std::collections::BTreeSet<usize> = rows.iter().map(|r| r.n).collect();
    let sigmas: std::collections::BTreeSet<u64> = rows.iter().map(|r| r.sigma.to_bits()).collect();
    let (vary_n, vary_sigma) = (ns.len() > 1, sigmas.len() > 1);
    groups
        .into_iter()
        .map(|((method, key), group)| {
            let deltas: Vec<f64> = group.iter().map(|r| r.delta).collect();
            let times: Vec<f64> = group.iter().map(|r| r.solve_time_s).collect();
            SummaryRow {
                method,
                cell: cell_label(&key, vary_n, vary_sigma),
                mean_pe: mean(&deltas),
                std_pe: sample_std(&deltas),
                mean_solve_time_s: mean(&times),
                count: group.len(),
            }
        })
        .collect()
}

pub fn write_summary(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<(), CliError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    for row in rows {
        w.serialize(row).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Wide table with one line per cell and, per method, columns
/// `<method>_mean_PE`, `<method>_std_PE` and `<method>_mean_solve_time_s`.
pub fn write_plot_data(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<(), CliError> {
    let path = path.as_ref();
    let methods: std::collections::BTreeSet<Method> = rows.iter().map(|r| r.method).collect();
    let mut cells: Vec<&str> = Vec::new();
    for r in rows {
        if !cells.contains(&r.cell.as_str()) {
            cells.push(&r.cell);
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    let mut header = vec!["cell".to_string()];
    for m in &methods {
        header.push(format!("{m}_mean_PE"));
        header.push(format!("{m}_std_PE"));
        header.push(format!("{m}_mean_solve_time_s"));
    }
    w.write_record(&header).map_err(CliError::csv(path))?;
    for cell in cells {
        let mut record = vec![cell.to_string()];
        for m in &methods {
            match rows.iter().find(|r| r.method == *m && r.cell == cell) {
                Some(r) => {
                    record.push(r.mean_pe.to_string());
                    record.push(r.std_pe.to_string());
                    record.push(r.mean_solve_time_s.to_string());
                }
                None => record.extend(["", "", ""].map(String::from)),
            }
        }
        w.write_record(&record).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}
