use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::timeline::fixed6;

/// One participant's percentage for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub keys: Vec<String>,
    pub participant_id: u32,
    pub percent: f64,
    /// Responses behind `percent`.
    pub responses: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub condition: String,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub name: String,
    pub key_names: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub trials_per_participant: usize,
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

pub(crate) fn percent(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * hits as f64 / total as f64
    }
}

impl ExperimentResult {
    pub fn new(name: &str, key_names: &[&str], trials_per_participant: usize) -> Self {
        ExperimentResult {
            name: name.to_string(),
            key_names: key_names.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            trials_per_participant,
        }
    }

    pub fn push(&mut self, keys: &[String], participant_id: u32, percent: f64, responses: usize) {
        self.rows.push(ResultRow {
            keys: keys.to_vec(),
            participant_id,
            percent,
            responses,
        });
    }

    /// Per-participant percentages of the cell with exactly these keys, in
    /// participant order.
    pub fn cell_values(&self, keys: &[&str]) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.keys.len() == keys.len() && r.keys.iter().zip(keys).all(|(a, b)| a == b))
            .map(|r| r.percent)
            .collect()
    }

    pub fn cell_mean(&self, keys: &[&str]) -> Option<f64> {
        let v = self.cell_values(keys);
        (!v.is_empty()).then(|| mean_sd(&v).0)
    }

    /// One summary row per distinct key tuple accepted by `include`, in first-seen order.
    pub fn summarize(&mut self, include: impl Fn(&[String]) -> bool) {
        let mut seen: Vec<&Vec<String>> = Vec::new();
        for r in &self.rows {
            if include(&r.keys) && !seen.contains(&&r.keys) {
                seen.push(&r.keys);
            }
        }
        let summary = seen
            .into_iter()
            .map(|keys| {
                let values: Vec<f64> = self.rows.iter().filter(|r| &r.keys == keys).map(|r| r.percent).collect();
                let (mean, sd) = mean_sd(&values);
                SummaryRow {
                    condition: self
                        .key_names
                        .iter()
                        .zip(keys)
                        .map(|(k, v)| format!("{k}={v}"))
                        .collect::<Vec<_>>()
                        .join(" "),
                    mean,
                    sd,
                    n: values.len(),
                }
            })
            .collect();
        self.summary = summary;
    }

    pub fn summary_row(&self, condition: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.condition == condition)
    }

    pub fn write_records<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{},participant_id,percent", self.key_names.join(","))?;
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.keys.join(","), r.participant_id, fixed6(r.percent))?;
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "condition,mean,sd,n")?;
        for s in &self.summary {
            writeln!(out, "{},{},{},{}", s.condition, fixed6(s.mean), fixed6(s.sd), s.n)?;
        }
        Ok(())
    }

    /// Writes `<name>_records.csv` and `<name>_summary.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut rec = Vec::new();
        self.write_records(&mut rec)?;
        fs::write(dir.join(format!("{}_records.csv", self.name)), rec)?;
        let mut sum = Vec::new();
        self.write_summary(&mut sum)?;
        fs::write(dir.join(format!("{}_summary.csv", self.name)), sum)
    }
}
