use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::ablation::AblationTable;
use super::cdf::cdf;
use super::metrics::{ErrorSeries, MetricsRecord};
use crate::error::{Error, Result};
use crate::io::{fmt_sig6, write_atomic};

/// Reference ablation table: model, then MAE/RMSE/R² for dataset1 and dataset2.
pub const PAPER_TABLE: [(&str, [f64; 6]); 9] = [
    ("Ours", [5.30, 11.00, 0.76, 5.00, 11.60, 0.86]),
    ("cnn layers: one", [7.50, 13.81, 0.71, 6.96, 13.12, 0.73]),
    ("cnn layers: three", [9.84, 15.30, 0.47, 8.86, 14.89, 0.53]),
    ("cnn width: one", [6.56, 12.52, 0.74, 6.47, 12.27, 0.79]),
    ("cnn width: four", [9.50, 16.02, 0.39, 8.93, 15.03, 0.46]),
    (
        "Transformer layers: zero",
        [9.68, 16.31, 0.53, 8.77, 15.82, 0.59],
    ),
    (
        "Transformer layers: two",
        [7.48, 13.68, 0.67, 7.22, 13.47, 0.68],
    ),
    ("no CNN", [7.63, 13.79, 0.69, 6.61, 12.99, 0.79]),
    ("no Transformer", [9.44, 15.39, 0.52, 8.82, 14.82, 0.61]),
];

pub const TABLE_DATASETS: [&str; 2] = ["dataset1", "dataset2"];

/// How the ablation rows map onto the model, rendered into `results.json`.
pub const ABLATION_NOTES: [&str; 4] = [
    "Transformer layers counts self-attention inside the conformer blocks: zero drops the block attention sublayer, two stacks two conformer blocks",
    "cnn layers / cnn width set the number and channel multiplier of the convolutional preprocessing modules",
    "no CNN / no Transformer remove the convolutional or self-attention preprocessing stage",
    "MAE and RMSE pool the x and y coordinate errors, in millimetres; R2 pools both axes around their own means",
];

/// Tracking quality of one method on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodEval {
    pub method: String,
    pub dataset: String,
    /// Millimetres.
    pub metrics: MetricsRecord,
    pub median_r_mm: f64,
    /// Per-sample errors in metres (for the CDFs).
    pub errors: ErrorSeries,
}

/// Everything a report is rendered from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalResults {
    pub ablation: Option<AblationTable>,
    pub methods: Vec<MethodEval>,
}

/// Full-precision results, re-read by `report` to re-render.
pub const RAW_RESULTS_FILE: &str = "results_raw.json";

impl EvalResults {
    pub fn is_empty(&self) -> bool {
        self.methods.is_empty() && self.ablation.as_ref().is_none_or(|t| t.rows.is_empty())
    }
}

fn sig6(v: f64) -> Value {
    match fmt_sig6(v).parse::<f64>() {
        Ok(r) if r.is_finite() => json!(r),
        _ => Value::Null,
    }
}

fn metrics_json(m: &MetricsRecord, median_r_mm: Option<f64>) -> Value {
    let mut o = Map::new();
    o.insert("mae".into(), sig6(m.mae));
    o.insert("rmse".into(), sig6(m.rmse));
    o.insert("r2".into(), sig6(m.r2));
    o.insert("n".into(), json!(m.n));
    if let Some(med) = median_r_mm {
        o.insert("median_r_mm".into(), sig6(med));
    }
    Value::Object(o)
}

fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| format!("{v:.2}"))
}

/// Table-shaped CSV: one row per model, MAE/RMSE/R² per dataset.
pub fn table_csv(table: &AblationTable) -> String {
    let mut s = String::from("model");
    for ds in &table.datasets {
        s.push_str(&format!(",{ds}_mae,{ds}_rmse,{ds}_r2"));
    }
    s.push('\n');
    for row in &table.rows {
        s.push_str(&csv_field(&row.model));
        for ds in &table.datasets {
            let m = row.cell(ds).and_then(|c| c.metrics.as_ref());
            for v in [m.map(|m| m.mae), m.map(|m| m.rmse), m.map(|m| m.r2)] {
                s.push(',');
                s.push_str(&fmt2(v));
            }
        }
        s.push('\n');
    }
    s
}

/// `model,mae,rmse,r2` rows for one dataset.
pub fn dataset_csv(table: &AblationTable, dataset: &str) -> String {
    let mut s = String::from("model,mae,rmse,r2\n");
    for row in &table.rows {
        let m = row.cell(dataset).and_then(|c| c.metrics.as_ref());
        s.push_str(&metrics_row(&row.model, m));
    }
    s
}

/// One CSV row with two decimals, e.g. `Ours,5.30,11.00,0.76`.
pub fn metrics_row(model: &str, m: Option<&MetricsRecord>) -> String {
    format!(
        "{},{},{},{}\n",
        csv_field(model),
        fmt2(m.map(|m| m.mae)),
        fmt2(m.map(|m| m.rmse)),
        fmt2(m.map(|m| m.r2))
    )
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// The published table in the same layout as [`table_csv`].
pub fn paper_reference_csv() -> String {
    let mut s = String::from("model");
    for ds in TABLE_DATASETS {
        s.push_str(&format!(",{ds}_mae,{ds}_rmse,{ds}_r2"));
    }
    s.push('\n');
    for (model, vals) in PAPER_TABLE {
        s.push_str(model);
        for v in vals {
            s.push_str(&format!(",{v:.2}"));
        }
        s.push('\n');
    }
    s
}

/// Parses a table CSV back into `model → [values]` (`None` for `NA`).
pub fn parse_table_csv(text: &str) -> Result<Vec<(String, Vec<Option<f64>>)>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Empty("table csv has no header".into()))?;
    let width = header.split(',').count();
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let fields: Vec<&str> = line.rsplitn(width, ',').collect();
            if fields.len() != width {
                return Err(Error::Config(format!(
                    "table row has {} fields, expected {width}: {line}",
                    fields.len()
                )));
            }
            let model = fields[width - 1].trim_matches('"').replace("\"\"", "\"");
            let values = fields[..width - 1]
                .iter()
                .rev()
                .map(|f| match *f {
                    "NA" => Ok(None),
                    f => f
                        .parse()
                        .map(Some)
                        .map_err(|_| Error::Config(format!("not a number in table csv: `{f}`"))),
                })
                .collect::<Result<_>>()?;
            Ok((model, values))
        })
        .collect()
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

/// Renders every report file in memory, in write order.
pub fn render(results: &EvalResults) -> Result<Vec<(String, Vec<u8>)>> {
    if results.is_empty() {
        return Err(Error::Empty("no results to report".into()));
    }
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut top = Map::new();

    if let Some(table) = &results.ablation {
        let mut by_model = Map::new();
        for row in &table.rows {
            let mut by_ds = Map::new();
            for c in &row.cells {
                let v = match (&c.metrics, &c.error) {
                    (Some(m), _) => metrics_json(m, c.median_r_mm),
                    (None, e) => json!({ "error": e.clone().unwrap_or_default() }),
                };
                by_ds.insert(c.dataset.clone(), v);
            }
            by_model.insert(row.model.clone(), Value::Object(by_ds));
        }
        top.insert("seed".into(), json!(table.seed));
        top.insert("notes".into(), json!(ABLATION_NOTES));
        top.insert("ablation".into(), Value::Object(by_model));
        files.push(("results.csv".into(), table_csv(table).into_bytes()));
        for ds in &table.datasets {
            files.push((
                format!("results_{}.csv", file_safe(ds)),
                dataset_csv(table, ds).into_bytes(),
            ));
        }
        files.push((
            "paper_reference.csv".into(),
            paper_reference_csv().into_bytes(),
        ));
    }

    if !results.methods.is_empty() {
        let mut by_method: BTreeMap<&str, Map<String, Value>> = BTreeMap::new();
        let mut seen = std::collections::BTreeSet::new();
        for m in &results.methods {
            if !seen.insert(file_safe(&m.method)) {
                return Err(Error::Config(format!(
                    "method `{}` reported twice",
                    m.method
                )));
            }
            by_method.entry(&m.method).or_default().insert(
                m.dataset.clone(),
                metrics_json(&m.metrics, Some(m.median_r_mm)),
            );
            for (axis, series) in m.errors.axes() {
                let curve = cdf(series)?;
                files.push((
                    format!("cdf_{}_{axis}.csv", file_safe(&m.method)),
                    curve.to_csv(1e3).into_bytes(),
                ));
            }
        }
        let methods: Map<String, Value> = by_method
            .into_iter()
            .map(|(k, v)| (k.to_string(), Value::Object(v)))
            .collect();
        top.insert("methods".into(), Value::Object(methods.clone()));
        files.push(("comparison.json".into(), pretty(&Value::Object(methods))?));
    }

    files.push(("results.json".into(), pretty(&Value::Object(top))?));
    files.push((RAW_RESULTS_FILE.into(), pretty(results)?));
    Ok(files)
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::json("rendering report", e))?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Writes the rendered report into `dir`. Nothing is written unless every
/// file rendered; each file is replaced atomically.
pub fn report_emit(results: &EvalResults, dir: &Path) -> Result<Vec<PathBuf>> {
    let files = render(results)?;
    files
        .into_iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            write_atomic(&path, &bytes)?;
            Ok(path)
        })
        .collect()
}
