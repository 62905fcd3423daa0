//! Re-analysis of a finished experiment directory from its trace files.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::plot::{emit_plot_data, Series};
use crate::run::MeanCi;
use aisdd::analysis::mean_ci95;

/// Columns of one `trace.csv` needed for re-analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceTable {
    pub config_hash: String,
    pub running_objective: Vec<f64>,
    /// Per slot, the feasibility-gap components.
    pub feasibility: Vec<Vec<f64>>,
}

pub fn read_trace_csv(path: &Path) -> Result<TraceTable> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let config_hash = first
        .trim()
        .strip_prefix("# config_hash=")
        .and_then(|r| r.split_whitespace().next())
        .with_context(|| format!("{}: missing config_hash line", path.display()))?
        .to_string();
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let obj = col("running_objective").with_context(|| format!("{}: no running_objective column", path.display()))?;
    let feas: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("feasibility_"))
        .map(|(i, _)| i)
        .collect();
    let mut table = TraceTable {
        config_hash,
        running_objective: Vec::new(),
        feasibility: Vec::new(),
    };
    for rec in csv.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .with_context(|| format!("{}: bad number {:?}", path.display(), &rec[i]))
        };
        table.running_objective.push(num(obj)?);
        table.feasibility.push(feas.iter().map(|&i| num(i)).collect::<Result<_>>()?);
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantAnalysis {
    pub variant: String,
    pub runs: usize,
    pub horizon: usize,
    pub final_running_objective: MeanCi,
    pub feasibility_gap: Vec<MeanCi>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub config_hash: String,
    pub variants: Vec<VariantAnalysis>,
}

fn sorted_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    out.sort();
    Ok(out)
}

fn mean_ci(values: &[f64]) -> MeanCi {
    let (mean, ci95) = mean_ci95(values);
    MeanCi { mean, ci95 }
}

/// Rebuilds the plot tables of every variant under `dir` and writes
/// `analysis.json`. Fails when the traces disagree on config hash or horizon.
pub fn analyze_dir(dir: &Path) -> Result<Analysis> {
    let mut hash: Option<String> = None;
    let mut variants = Vec::new();
    for vdir in sorted_dirs(dir)? {
        let seeds: Vec<PathBuf> = sorted_dirs(&vdir)?
            .into_iter()
            .filter(|p| p.join("trace.csv").is_file())
            .collect();
        if seeds.is_empty() {
            continue;
        }
        let tables: Vec<TraceTable> = seeds.iter().map(|s| read_trace_csv(&s.join("trace.csv"))).collect::<Result<_>>()?;
        for (t, s) in tables.iter().zip(&seeds) {
            match &hash {
                None => hash = Some(t.config_hash.clone()),
                Some(h) if *h != t.config_hash => {
                    bail!("{}: config hash {} differs from {}", s.display(), t.config_hash, h)
                }
                _ => {}
            }
        }
        let h = hash.clone().expect("set above");
        let objective: Vec<Series> = tables.iter().map(|t| Series::scalar(&t.running_objective)).collect();
        let feasibility: Vec<Series> = tables
            .iter()
            .map(|t| Series {
                t: (1..=t.feasibility.len() as u64).collect(),
                values: t.feasibility.clone(),
            })
            .collect();
        let write = |name: &str, runs: &[Series]| -> Result<()> {
            let path = vdir.join(name);
            let f = BufWriter::new(File::create(&path)?);
            emit_plot_data(runs, f, &h).with_context(|| format!("{}", path.display()))
        };
        write("plot_objective.csv", &objective)?;
        write("plot_feasibility.csv", &feasibility)?;
        let last = |t: &TraceTable| t.running_objective.last().copied().unwrap_or(f64::NAN);
        let dim = tables[0].feasibility.last().map_or(0, Vec::len);
        variants.push(VariantAnalysis {
            variant: vdir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            runs: tables.len(),
            horizon: tables[0].running_objective.len(),
            final_running_objective: mean_ci(&tables.iter().map(last).collect::<Vec<_>>()),
            feasibility_gap: (0..dim)
                .map(|j| {
                    mean_ci(
                        &tables
                            .iter()
                            .map(|t| t.feasibility.last().map_or(f64::NAN, |v| v[j]))
                            .collect::<Vec<_>>(),
                    )
                })
                .collect(),
        });
    }
    let Some(config_hash) = hash else {
        bail!("{}: no trace.csv files found", dir.display());
    };
    let analysis = Analysis { config_hash, variants };
    let mut f = BufWriter::new(File::create(dir.join("analysis.json"))?);
    serde_json::to_writer_pretty(&mut f, &analysis)?;
    writeln!(f)?;
    f.flush()?;
    Ok(analysis)
}
