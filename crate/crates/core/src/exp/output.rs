//! CSV tables and the JSON summary, assembled in memory and then written.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::experiments::{Exp1Report, Exp2Report, Exp3Report, Exp4Report};
use super::sweep::SweepReport;
use super::ExperimentConfig;
use crate::error::{param, Result};

/// Named output files in write order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn push(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    /// Writes every file into `dir`, creating it if needed. Existing files
    /// are only replaced when `force` is set.
    pub fn write_to(&self, dir: &Path, force: bool) -> Result<()> {
        fs::create_dir_all(dir)?;
        if !force {
            if let Some((name, _)) = self.files.iter().find(|(n, _)| dir.join(n).exists()) {
                return Err(param(format!(
                    "{} already exists (pass --force to overwrite)",
                    dir.join(name).display()
                )));
            }
        }
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(writer.into_inner().map_err(|e| e.into_error())?)
}

/// CSV with an explicit header, for tables that may be empty.
fn csv_with_header<T: Serialize>(header: &[&str], rows: &[T]) -> Result<Vec<u8>> {
    if rows.is_empty() {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        writer.flush()?;
        return Ok(writer.into_inner().map_err(|e| e.into_error())?);
    }
    csv_bytes(rows)
}

#[derive(Serialize)]
struct Exp3Csv {
    pair_id: usize,
    source_id: usize,
    recipient_id: usize,
    prompt: u32,
    overlap_mean: f64,
    gain_mean: f64,
}

pub fn exp1_csv(report: &Exp1Report) -> Result<Vec<u8>> {
    csv_with_header(&["p", "replicate", "Q"], &report.rows)
}

pub fn exp2_csv(report: &Exp2Report) -> Result<Vec<u8>> {
    csv_with_header(
        &["agent_id", "p", "Q", "B_hat", "ci_low", "ci_high"],
        &report.rows,
    )
}

pub fn exp3_csv(report: &Exp3Report) -> Result<Vec<u8>> {
    let rows: Vec<Exp3Csv> = report
        .exposures
        .iter()
        .map(|e| Exp3Csv {
            pair_id: e.pair_id,
            source_id: e.source_id,
            recipient_id: e.recipient_id,
            prompt: e.prompt,
            overlap_mean: e.overlap_mean,
            gain_mean: e.gain_mean,
        })
        .collect();
    csv_with_header(
        &[
            "pair_id",
            "source_id",
            "recipient_id",
            "prompt",
            "overlap_mean",
            "gain_mean",
        ],
        &rows,
    )
}

pub fn exp3_binned_csv(report: &Exp3Report) -> Result<Vec<u8>> {
    csv_with_header(
        &["bin", "mean_resid_overlap", "mean_resid_gain"],
        &report.binned,
    )
}

pub fn exp4_csv(report: &Exp4Report) -> Result<Vec<u8>> {
    csv_with_header(
        &[
            "instance_id",
            "source1_id",
            "source2_id",
            "recipient_a_id",
            "recipient_b_id",
            "prompt",
            "r_triad",
            "r_control",
            "delta",
        ],
        &report.instances,
    )
}

/// Headline statistics of one run, written as `summary.json`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub design: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exp1: Option<Exp1Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exp2: Option<Exp2Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exp3: Option<Exp3Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exp4: Option<Exp4Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepReport>,
}

impl Summary {
    pub fn new(config: &ExperimentConfig) -> Self {
        // The output location is not part of the design, so it stays out of
        // the summary and does not break byte-identical reruns.
        let mut design = serde_json::to_value(config).expect("config serialises");
        if let Some(map) = design.as_object_mut() {
            map.remove("output_dir");
        }
        Self {
            design,
            ..Default::default()
        }
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}
