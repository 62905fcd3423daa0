//! Plot-data tables: one row per time index, one column group per run,
//! then the across-run mean and 95% half-width per component.

use std::io::Write;

use aisdd::analysis::mean_ci95;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("no runs to tabulate")]
    Empty,
    #[error("run {run} has {got} rows, run 1 has {expected}")]
    MixedHorizons { run: usize, expected: usize, got: usize },
    #[error("run {run} has {got} components per row, expected {expected}")]
    MixedDims { run: usize, expected: usize, got: usize },
    #[error("run {run} is evaluated at different time indices than run 1")]
    MixedTimes { run: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A metric over time for one run; `values[r]` holds the components at `t[r]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub t: Vec<u64>,
    pub values: Vec<Vec<f64>>,
}

impl Series {
    /// Scalar metric at `t = 1, 2, ...`.
    pub fn scalar(values: &[f64]) -> Self {
        Self {
            t: (1..=values.len() as u64).collect(),
            values: values.iter().map(|v| vec![*v]).collect(),
        }
    }
}

/// Column names for `runs` runs of a `dim`-component metric.
pub fn plot_header(runs: usize, dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    let suffix = |c: usize| if dim == 1 { String::new() } else { format!("_{}", c + 1) };
    for r in 0..runs {
        for c in 0..dim {
            h.push(format!("run_{}{}", r + 1, suffix(c)));
        }
    }
    for c in 0..dim {
        h.push(format!("mean{}", suffix(c)));
    }
    for c in 0..dim {
        h.push(format!("ci95{}", suffix(c)));
    }
    h
}

/// Writes the table, preceded by a `# config_hash=...` comment line.
pub fn emit_plot_data<W: Write>(runs: &[Series], mut out: W, config_hash: &str) -> Result<(), PlotError> {
    let first = runs.first().ok_or(PlotError::Empty)?;
    let rows = first.values.len();
    let dim = first.values.first().map_or(1, Vec::len);
    for (n, s) in runs.iter().enumerate() {
        if s.values.len() != rows || s.t.len() != rows {
            return Err(PlotError::MixedHorizons {
                run: n + 1,
                expected: rows,
                got: s.values.len().min(s.t.len()),
            });
        }
        if s.t != first.t {
            return Err(PlotError::MixedTimes { run: n + 1 });
        }
        if let Some(bad) = s.values.iter().find(|v| v.len() != dim) {
            return Err(PlotError::MixedDims {
                run: n + 1,
                expected: dim,
                got: bad.len(),
            });
        }
    }
    writeln!(out, "# config_hash={config_hash}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(plot_header(runs.len(), dim))?;
    let mut column = vec![0.0; runs.len()];
    for r in 0..rows {
        let mut rec = Vec::with_capacity(1 + (runs.len() + 2) * dim);
        rec.push(first.t[r].to_string());
        for s in runs {
            rec.extend(s.values[r].iter().map(|v| fmt_f64(*v)));
        }
        let mut means = Vec::with_capacity(dim);
        let mut cis = Vec::with_capacity(dim);
        for c in 0..dim {
            for (n, s) in runs.iter().enumerate() {
                column[n] = s.values[r][c];
            }
            let (m, ci) = mean_ci95(&column);
            means.push(fmt_f64(m));
            cis.push(fmt_f64(ci));
        }
        rec.extend(means);
        rec.extend(cis);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
