//! Dataset ingestion and artifact serialization.
//!
//! Datasets arrive as headered CSV plus a TOML role configuration mapping
//! columns to X/Z/W/Y; categorical columns are declared explicitly and
//! label-encoded with a persisted codebook. All JSON artifacts carry a
//! `schema_version` field.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset};
use crate::error::{Error, Result};
use crate::inference::{ConfigEcho, TestResult};
use crate::scm::sample::SampleResult;
use crate::scm::spec::Role;

/// Column-role mapping and categorical declarations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoleConfig {
    pub roles: RoleMap,
    #[serde(default)]
    pub categorical: CategoricalCols,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoleMap {
    pub x: String,
    pub y: String,
    #[serde(default)]
    pub z: Vec<String>,
    #[serde(default)]
    pub w: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CategoricalCols {
    #[serde(default)]
    pub columns: Vec<String>,
}

impl RoleConfig {
    pub fn from_path(path: &Path) -> Result<RoleConfig> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Data(format!("bad roles file: {e}")))
    }

    pub fn to_path(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("cannot serialize roles: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Role configuration matching an SCM's variables.
    pub fn from_sample(sample: &SampleResult) -> RoleConfig {
        let mut roles =
            RoleMap { x: String::new(), y: String::new(), z: Vec::new(), w: Vec::new() };
        for (name, role, _) in &sample.columns {
            match role {
                Role::X => roles.x = name.clone(),
                Role::Y => roles.y = name.clone(),
                Role::Z => roles.z.push(name.clone()),
                Role::W => roles.w.push(name.clone()),
            }
        }
        RoleConfig { roles, categorical: CategoricalCols::default() }
    }
}

/// Label-encoding legend for categorical columns: column -> levels, the
/// level index being the encoded value.
pub type Codebook = BTreeMap<String, Vec<String>>;

/// Reads a headered CSV into a typed dataset under the given roles.
pub fn ingest_csv(path: &Path, roles: &RoleConfig) -> Result<(Dataset, Codebook)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let col_idx = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Data(format!("column `{name}` not found in {}", path.display()))
        })
    };

    let xi = col_idx(&roles.roles.x)?;
    let yi = col_idx(&roles.roles.y)?;
    let zi: Vec<usize> = roles.roles.z.iter().map(|c| col_idx(c)).collect::<Result<_>>()?;
    let wi: Vec<usize> = roles.roles.w.iter().map(|c| col_idx(c)).collect::<Result<_>>()?;
    let is_categorical =
        |name: &str| roles.categorical.columns.iter().any(|c| c == name);

    let mut raw: Vec<Vec<String>> = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Data(format!(
                "row {} has {} fields, expected {}",
                row_no + 2,
                record.len(),
                headers.len()
            )));
        }
        raw.push(record.iter().map(|f| f.trim().to_string()).collect());
    }
    if raw.is_empty() {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }

    let mut codebook: Codebook = BTreeMap::new();
    let parse_numeric = |idx: usize, name: &str| -> Result<Vec<f64>> {
        raw.iter()
            .enumerate()
            .map(|(r, row)| {
                let cell = &row[idx];
                if cell.is_empty() {
                    return Err(Error::Data(format!(
                        "missing value in column `{name}` at row {}",
                        r + 2
                    )));
                }
                cell.parse::<f64>().map_err(|_| {
                    Error::Data(format!(
                        "column `{name}` row {}: `{cell}` is not numeric \
                         (declare the column categorical to label-encode it)",
                        r + 2
                    ))
                })
            })
            .collect()
    };
    let mut encode = |idx: usize, name: &str| -> Result<Vec<f64>> {
        let mut levels: Vec<String> = Vec::new();
        for (r, row) in raw.iter().enumerate() {
            let cell = &row[idx];
            if cell.is_empty() {
                return Err(Error::Data(format!(
                    "missing value in column `{name}` at row {}",
                    r + 2
                )));
            }
            if !levels.contains(cell) {
                levels.push(cell.clone());
            }
        }
        levels.sort();
        let values = raw
            .iter()
            .map(|row| levels.iter().position(|l| l == &row[idx]).unwrap() as f64)
            .collect();
        codebook.insert(name.to_string(), levels);
        Ok(values)
    };

    let mut build = |idxs: &[usize], names: &[String]| -> Result<Vec<Column>> {
        idxs.iter()
            .zip(names)
            .map(|(&i, name)| {
                let categorical = is_categorical(name);
                let values =
                    if categorical { encode(i, name) } else { parse_numeric(i, name) }?;
                Ok(Column { name: name.clone(), values, categorical })
            })
            .collect()
    };
    let z = build(&zi, &roles.roles.z)?;
    let w = build(&wi, &roles.roles.w)?;

    let x_vals = parse_numeric(xi, &roles.roles.x)?;
    let x: Vec<u8> = x_vals
        .iter()
        .enumerate()
        .map(|(r, &v)| {
            if v == 0.0 {
                Ok(0u8)
            } else if v == 1.0 {
                Ok(1u8)
            } else {
                Err(Error::Data(format!(
                    "X must be binary {{0,1}}: column `{}` row {} holds {v} \
                     (remap the treatment to 0/1 before ingestion)",
                    roles.roles.x,
                    r + 2
                )))
            }
        })
        .collect::<Result<_>>()?;
    let y = parse_numeric(yi, &roles.roles.y)?;

    let data = Dataset::new(roles.roles.x.clone(), roles.roles.y.clone(), x, z, w, y)?;
    Ok((data, codebook))
}

/// Writes an observational sample as CSV. Values print in shortest
/// round-trip form, so re-ingestion is bit-exact on numeric columns.
pub fn write_sample_csv(path: &Path, sample: &SampleResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(sample.columns.iter().map(|(name, _, _)| name.as_str()))?;
    let n = sample.columns.first().map(|(_, _, v)| v.len()).unwrap_or(0);
    let mut record: Vec<String> = Vec::with_capacity(sample.columns.len());
    for i in 0..n {
        record.clear();
        record.extend(sample.columns.iter().map(|(_, _, v)| format!("{}", v[i])));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes any report as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// A standalone test result artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub schema_version: u32,
    #[serde(flatten)]
    pub result: TestResult,
    pub config: ConfigEcho,
}

/// Structural verdicts artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub scm: String,
    pub scale: crate::shape::Scale,
    pub verdicts: Vec<crate::structural::StructuralVerdict>,
}

/// Machine-readable error envelope for CLI failures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    pub schema_version: u32,
    pub error: String,
}

/// Writes a p-value table as CSV (one row per test).
pub fn write_pvalue_csv(path: &Path, table: &crate::experiments::PValueTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "scm",
        "n",
        "rep",
        "interaction",
        "p_value",
        "estimate",
        "se",
        "null_true",
        "error",
    ])?;
    for r in &table.rows {
        w.write_record([
            r.scm.clone(),
            r.n.to_string(),
            r.rep.to_string(),
            r.interaction.clone(),
            format!("{}", r.p_value),
            format!("{}", r.estimate),
            format!("{}", r.se),
            r.null_true.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes plot-ready ECDF points as CSV.
pub fn write_ecdf_csv(path: &Path, points: &[crate::experiments::EcdfPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scm", "n", "interaction", "null_true", "p_value", "ecdf"])?;
    for p in points {
        w.write_record([
            p.scm.clone(),
            p.n.to_string(),
            p.interaction.clone(),
            p.null_true.to_string(),
            format!("{}", p.p_value),
            format!("{}", p.ecdf),
        ])?;
    }
    w.flush()?;
    Ok(())
}
