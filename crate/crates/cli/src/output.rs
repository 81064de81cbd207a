//! Serialization of reports and all-or-nothing file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use qbsm::estimators::{ConvergencePoint, QbsmReport, SobolReport};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::error::{config, CliError};

/// Hex SHA-256 of the canonical JSON of `settings`.
pub fn config_hash<T: Serialize>(settings: &T) -> String {
    let json = serde_json::to_string(settings).expect("settings serialize");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// `# provenance {...}` line that prefixes every CSV file.
pub fn provenance_line<T: Serialize>(provenance: &T) -> String {
    format!(
        "# provenance {}\n",
        serde_json::to_string(provenance).expect("provenance serializes")
    )
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Vec<u8> {
    writer.into_inner().expect("in-memory CSV writer")
}

pub const ANALYZE_HEADER: [&str; 11] = [
    "model",
    "method",
    "sampler",
    "seed",
    "alpha",
    "input",
    "q_unconditional",
    "qbar1",
    "qbar2",
    "Q1",
    "Q2",
];

pub const SOBOL_HEADER: [&str; 8] = [
    "model",
    "sampler",
    "seed",
    "n",
    "bins",
    "input",
    "first_order",
    "total_order",
];

pub const CONVERGE_HEADER: [&str; 9] = [
    "model",
    "method",
    "alpha",
    "input",
    "n",
    "evaluations",
    "replicates",
    "mae",
    "rmse",
];

pub fn quantile_csv(reports: &[QbsmReport], seed: u64, prefix: &str) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(prefix.as_bytes().to_vec());
    w.write_record(ANALYZE_HEADER).expect("in-memory write");
    for report in reports {
        let p = &report.provenance;
        for r in &report.results {
            for (i, name) in report.input_names.iter().enumerate() {
                w.write_record([
                    p.model.clone(),
                    p.method.as_str().to_string(),
                    p.sampler.kind.as_str().to_string(),
                    seed.to_string(),
                    r.alpha.to_string(),
                    name.clone(),
                    r.q_unconditional.to_string(),
                    r.qbar1[i].to_string(),
                    r.qbar2[i].to_string(),
                    r.q1.values[i].to_string(),
                    r.q2.values[i].to_string(),
                ])
                .expect("in-memory write");
            }
        }
    }
    finish(w)
}

pub fn sobol_csv(report: &SobolReport, seed: u64, prefix: &str) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(prefix.as_bytes().to_vec());
    w.write_record(SOBOL_HEADER).expect("in-memory write");
    let p = &report.provenance;
    for (i, name) in report.input_names.iter().enumerate() {
        let total = report
            .total_order
            .as_ref()
            .map(|t| t[i].to_string())
            .unwrap_or_default();
        w.write_record([
            p.model.clone(),
            p.sampler.kind.as_str().to_string(),
            seed.to_string(),
            p.n.to_string(),
            p.bins.to_string(),
            name.clone(),
            report.first_order[i].to_string(),
            total,
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn convergence_csv(
    model: &str,
    input_names: &[String],
    alpha: f64,
    points: &[ConvergencePoint],
    prefix: &str,
) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(prefix.as_bytes().to_vec());
    w.write_record(CONVERGE_HEADER).expect("in-memory write");
    for p in points {
        w.write_record([
            model.to_string(),
            p.method.as_str().to_string(),
            alpha.to_string(),
            input_names[p.input].clone(),
            p.n.to_string(),
            p.evaluations.to_string(),
            p.replicates.to_string(),
            p.mae.to_string(),
            p.rmse.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}

/// `results.csv` -> `results.sobol.csv`.
pub fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

/// Writes every file to a temporary sibling first and renames only once all
/// contents are on disk, so a failure leaves no partial output.
pub fn write_all(files: &[(PathBuf, Vec<u8>)]) -> Result<(), CliError> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let io_err = |source| CliError::Output {
            path: path.display().to_string(),
            source,
        };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        if !dir.is_dir() {
            return Err(config(format!(
                "output directory {} does not exist",
                dir.display()
            )));
        }
        let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
        tmp.write_all(bytes).map_err(io_err)?;
        tmp.as_file().sync_all().map_err(io_err)?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| CliError::Output {
            path: path.display().to_string(),
            source: e.error,
        })?;
    }
    Ok(())
}
