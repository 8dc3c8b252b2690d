use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bootstrap::significance;
use super::metrics::{mae, pearson, r2, rmse};
use crate::error::{Error, Result};
use crate::ingest::Phase;

pub const REPORT_FORMAT: &str = "tdreport-v1";
pub const METRICS: [&str; 4] = ["mae", "rmse", "r2", "pearson"];
pub const ALL_PHASES: &str = "All";
/// Printed in place of an undefined R² or Pearson value.
pub const NA: &str = "NA";

/// Metrics for one group of test trials. `None` marks an undefined value
/// (fewer than two samples or a constant input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub phase: String,
    pub n: usize,
    pub mae: f64,
    pub rmse: f64,
    pub r2: Option<f64>,
    pub pearson: Option<f64>,
}

impl MetricRow {
    pub fn compute(phase: impl Into<String>, y: &[f64], yhat: &[f64]) -> Result<Self> {
        Ok(MetricRow {
            phase: phase.into(),
            n: y.len(),
            mae: mae(y, yhat)?,
            rmse: rmse(y, yhat)?,
            r2: defined(r2(y, yhat))?,
            pearson: defined(pearson(y, yhat))?,
        })
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "mae" => Some(self.mae),
            "rmse" => Some(self.rmse),
            "r2" => self.r2,
            "pearson" => self.pearson,
            _ => None,
        }
    }
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Undefined(_)) | Err(Error::EmptyDataset(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// One "All" row followed by one row per phase present, in phase order.
pub fn evaluate(y: &[f64], yhat: &[f64], phases: &[Phase]) -> Result<Vec<MetricRow>> {
    if y.len() != phases.len() {
        return Err(Error::LengthMismatch(y.len(), phases.len()));
    }
    let mut rows = vec![MetricRow::compute(ALL_PHASES, y, yhat)?];
    let present: BTreeSet<Phase> = phases.iter().copied().collect();
    for p in present {
        let (ys, ps): (Vec<f64>, Vec<f64>) = y
            .iter()
            .zip(yhat)
            .zip(phases)
            .filter(|(_, q)| **q == p)
            .map(|((a, b), _)| (*a, *b))
            .unzip();
        rows.push(MetricRow::compute(p.to_string(), &ys, &ps)?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    /// Runs in which the metric was defined.
    pub runs: usize,
}

/// Mean and sample standard deviation (zero for a single run).
pub fn mean_std(values: &[f64]) -> Option<MeanStd> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some(MeanStd {
        mean,
        std,
        runs: values.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub phase: String,
    pub n: usize,
    pub mae: Option<MeanStd>,
    pub rmse: Option<MeanStd>,
    pub r2: Option<MeanStd>,
    pub pearson: Option<MeanStd>,
}

impl AggregateRow {
    pub fn metric(&self, name: &str) -> Option<MeanStd> {
        match name {
            "mae" => self.mae,
            "rmse" => self.rmse,
            "r2" => self.r2,
            "pearson" => self.pearson,
            _ => None,
        }
    }
}

/// Test-set predictions of one model, one vector per run (seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRuns {
    pub model: String,
    pub predictions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEval {
    pub model: String,
    pub runs: Vec<Vec<MetricRow>>,
    pub aggregate: Vec<AggregateRow>,
    /// Per-trial absolute error averaged over runs.
    pub abs_errors: Vec<f64>,
    /// Bootstrap p-value of the MAE difference against the reference model.
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: String,
    pub nct_ids: Vec<String>,
    pub reference: Option<String>,
    pub n_boot: usize,
    pub seed: u64,
    pub models: Vec<ModelEval>,
}

fn aggregate(runs: &[Vec<MetricRow>]) -> Vec<AggregateRow> {
    runs[0]
        .iter()
        .enumerate()
        .map(|(i, first)| {
            let collect = |name: &str| -> Option<MeanStd> {
                let vals: Vec<f64> = runs.iter().filter_map(|r| r[i].metric(name)).collect();
                mean_std(&vals)
            };
            AggregateRow {
                phase: first.phase.clone(),
                n: first.n,
                mae: collect("mae"),
                rmse: collect("rmse"),
                r2: collect("r2"),
                pearson: collect("pearson"),
            }
        })
        .collect()
}

/// Evaluates every model on the same test set and, when `reference` names
/// one of them, attaches a paired bootstrap p-value to every other model.
pub fn compare(
    nct_ids: &[String],
    y: &[f64],
    phases: &[Phase],
    models: &[ModelRuns],
    reference: Option<&str>,
    n_boot: usize,
    seed: u64,
) -> Result<EvalReport> {
    if y.is_empty() {
        return Err(Error::EmptyDataset("empty test set".into()));
    }
    if nct_ids.len() != y.len() {
        return Err(Error::LengthMismatch(nct_ids.len(), y.len()));
    }
    let mut evals = Vec::with_capacity(models.len());
    for m in models {
        if m.predictions.is_empty() {
            return Err(Error::Invalid(format!("model {} has no runs", m.model)));
        }
        let runs = m
            .predictions
            .iter()
            .map(|p| evaluate(y, p, phases))
            .collect::<Result<Vec<_>>>()?;
        let k = m.predictions.len() as f64;
        let abs_errors = (0..y.len())
            .map(|i| m.predictions.iter().map(|p| (p[i] - y[i]).abs()).sum::<f64>() / k)
            .collect();
        evals.push(ModelEval {
            model: m.model.clone(),
            aggregate: aggregate(&runs),
            runs,
            abs_errors,
            p_value: None,
        });
    }
    if let Some(name) = reference {
        let r = evals
            .iter()
            .position(|e| e.model == name)
            .ok_or_else(|| Error::Config(format!("reference model {name:?} is not among the evaluated models")))?;
        let ref_errors = evals[r].abs_errors.clone();
        for (i, e) in evals.iter_mut().enumerate() {
            if i != r {
                e.p_value = Some(significance(&e.abs_errors, &ref_errors, n_boot, seed)?);
            }
        }
    }
    Ok(EvalReport {
        format: REPORT_FORMAT.into(),
        nct_ids: nct_ids.to_vec(),
        reference: reference.map(str::to_string),
        n_boot,
        seed,
        models: evals,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

/// Writes `<stem>.json` (the full report) and `<stem>.csv` with columns
/// `model,phase,metric,mean,std,n,p_value`; `p_value` is filled only on
/// each model's All/mae row.
pub fn emit_report(report: &EvalReport, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    if let Some(parent) = stem.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let json_path = stem.with_extension("json");
    let csv_path = stem.with_extension("csv");
    let text = serde_json::to_string_pretty(report)?;
    fs::write(&json_path, text + "\n").map_err(|e| Error::io(&json_path, e))?;

    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["model", "phase", "metric", "mean", "std", "n", "p_value"])?;
    for m in &report.models {
        for row in &m.aggregate {
            for metric in METRICS {
                let ms = row.metric(metric);
                let p = (row.phase == ALL_PHASES && metric == "mae")
                    .then_some(m.p_value)
                    .flatten();
                w.write_record([
                    m.model.clone(),
                    row.phase.clone(),
                    metric.to_string(),
                    fmt_opt(ms.map(|s| s.mean)),
                    fmt_opt(ms.map(|s| s.std)),
                    row.n.to_string(),
                    p.map(|v| v.to_string()).unwrap_or_default(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    Ok((json_path, csv_path))
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: EvalReport = serde_json::from_str(&text)?;
    if report.format != REPORT_FORMAT {
        return Err(Error::Format(format!("unknown report format {:?}", report.format)));
    }
    Ok(report)
}

/// Human-readable table of the aggregate rows.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = format!(
        "{:<10} {:<5} {:>5} {:>15} {:>15} {:>15} {:>15} {:>8}\n",
        "model", "phase", "n", "MAE", "RMSE", "R2", "Pearson", "p"
    );
    let cell = |m: Option<MeanStd>| m.map_or_else(|| NA.to_string(), |s| format!("{:.3}±{:.3}", s.mean, s.std));
    for m in &report.models {
        for row in &m.aggregate {
            let p = if row.phase == ALL_PHASES {
                m.p_value.map_or_else(String::new, |p| format!("{p:.4}"))
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{:<10} {:<5} {:>5} {:>15} {:>15} {:>15} {:>15} {:>8}\n",
                m.model,
                row.phase,
                row.n,
                cell(row.mae),
                cell(row.rmse),
                cell(row.r2),
                cell(row.pearson),
                p
            ));
        }
    }
    out
}
