//! Machine-readable experiment reports: one CSV/JSON schema for probe-loss
//! grids, one for richness scores. Emission is deterministic so identical
//! configurations produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Debug, Serialize)]
pub struct LossRow {
    pub experiment: String,
    pub label: String,
    pub size: usize,
    pub region: String,
    pub seed_count: usize,
    pub loss_mean: f64,
    pub loss_std: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RichnessRow {
    pub image: String,
    pub k: usize,
    pub embedder: String,
    #[serde(rename = "S")]
    pub s: f64,
}

#[derive(Clone, Debug)]
pub enum Rows {
    Loss(Vec<LossRow>),
    Richness(Vec<RichnessRow>),
}

/// Output format for reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(crate::error::Error::InvalidArgument(format!(
                "unknown format '{other}' (expected csv|json)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub experiment: String,
    pub meta: BTreeMap<String, String>,
    pub rows: Rows,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.rows {
            Rows::Loss(rows) => {
                out.push_str("experiment,label,size,region,seed_count,loss_mean,loss_std\n");
                for r in rows {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        r.experiment, r.label, r.size, r.region, r.seed_count, r.loss_mean,
                        r.loss_std
                    )
                    .expect("writing to String cannot fail");
                }
            }
            Rows::Richness(rows) => {
                out.push_str("image,k,embedder,S\n");
                for r in rows {
                    writeln!(out, "{},{},{},{}", r.image, r.k, r.embedder, r.s)
                        .expect("writing to String cannot fail");
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = match &self.rows {
            Rows::Loss(rows) => serde_json::to_value(rows),
            Rows::Richness(rows) => serde_json::to_value(rows),
        }
        .expect("report rows serialize");
        serde_json::json!({
            "experiment": self.experiment,
            "meta": self.meta,
            "rows": rows,
        })
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json())
                    .expect("report serializes to JSON");
                s.push('\n');
                s
            }
        }
    }

    /// Write to `path`, or to stdout when no path is given.
    pub fn write(&self, format: ReportFormat, path: Option<&Path>) -> Result<()> {
        let rendered = self.render(format);
        match path {
            Some(p) => {
                if let Some(parent) = p.parent() {
                    if !parent.as_os_str().is_empty() {
                        std::fs::create_dir_all(parent)?;
                    }
                }
                std::fs::write(p, rendered)?;
            }
            None => print!("{rendered}"),
        }
        Ok(())
    }

    pub fn loss_rows(&self) -> &[LossRow] {
        match &self.rows {
            Rows::Loss(rows) => rows,
            Rows::Richness(_) => &[],
        }
    }

    pub fn find_loss(&self, label: &str, size: usize, region: &str) -> Option<&LossRow> {
        self.loss_rows()
            .iter()
            .find(|r| r.label == label && r.size == size && r.region == region)
    }
}

/// Mean and population standard deviation.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        ExperimentReport {
            experiment: "demo".into(),
            meta: BTreeMap::from([("seeds".into(), "0..5".into())]),
            rows: Rows::Loss(vec![LossRow {
                experiment: "demo".into(),
                label: "zero".into(),
                size: 64,
                region: "full".into(),
                seed_count: 5,
                loss_mean: 0.00725,
                loss_std: 0.0011,
            }]),
        }
    }

    #[test]
    fn csv_has_the_pinned_schema() {
        let csv = sample().to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,label,size,region,seed_count,loss_mean,loss_std"
        );
        assert_eq!(lines.next().unwrap(), "demo,zero,64,full,5,0.00725,0.0011");
    }

    #[test]
    fn csv_and_json_carry_identical_values() {
        let report = sample();
        let csv = report.to_csv();
        let json = report.to_json();
        let row = &json["rows"][0];
        let fields: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(fields[5].parse::<f64>().unwrap(), row["loss_mean"].as_f64().unwrap());
        assert_eq!(fields[6].parse::<f64>().unwrap(), row["loss_std"].as_f64().unwrap());
        assert_eq!(fields[2].parse::<u64>().unwrap(), row["size"].as_u64().unwrap());
    }

    #[test]
    fn mean_std_of_single_value_has_zero_std() {
        let (m, s) = mean_std(&[0.42]);
        assert_eq!(m, 0.42);
        assert_eq!(s, 0.0);
    }
}
