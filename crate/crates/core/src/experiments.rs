//! Synthetic-study harness.
//!
//! Samples the built-in models across seeds and sample sizes, runs the five
//! interaction tests on every replication, and summarizes p-value
//! distributions: ECDFs, exact KS distances against Uniform[0,1], and
//! rejection rates labeled Type-I (null true) or power (null false) from
//! the structural-analyzer ground truth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FoldPlan};
use crate::effects::EffectKind;
use crate::error::{Error, Result};
use crate::estimator::{effect_estimate, EffectSpec, EstimatorKind};
use crate::inference::test_effect;
use crate::learner::LearnerConfig;
use crate::numeric::mix_seed;
use crate::nuisance::fit_nuisances;
use crate::scm::{builtin_scm_with_shape, sample_observational};
use crate::shape::Scale;
use crate::stats::{ks_distance_uniform, ks_p_value};
use crate::structural::{check_all, Verdict};

/// The experiment grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub scms: Vec<String>,
    /// Sample sizes, ascending.
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    pub alpha: f64,
    pub seed_base: u64,
    pub estimator: EstimatorKind,
    pub learner: LearnerConfig,
    pub folds: usize,
}

impl ExperimentGrid {
    /// Desk-scale default: 20 repetitions over n in {500, 2000, 8000}.
    pub fn desk(seed_base: u64) -> Self {
        ExperimentGrid {
            scms: vec!["m1".into(), "m2".into(), "m3".into(), "m4".into(), "m5".into()],
            sizes: vec![500, 2000, 8000],
            repetitions: 20,
            alpha: 0.05,
            seed_base,
            estimator: EstimatorKind::Onestep,
            learner: LearnerConfig::stumps(),
            folds: 10,
        }
    }

    /// The full study grid: 100 repetitions over six sample sizes. Orders
    /// of magnitude slower than the desk grid.
    pub fn paper(seed_base: u64) -> Self {
        ExperimentGrid {
            sizes: vec![500, 750, 1500, 3000, 5000, 8000],
            repetitions: 100,
            ..ExperimentGrid::desk(seed_base)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Data("repetitions must be at least 1".into()));
        }
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Data("sizes must be non-empty and ascending".into()));
        }
        if self.scms.is_empty() {
            return Err(Error::Data("no SCMs in the grid".into()));
        }
        Ok(())
    }
}

/// One test outcome within the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PRow {
    pub scm: String,
    pub n: usize,
    pub rep: usize,
    pub interaction: String,
    pub p_value: f64,
    pub estimate: f64,
    pub se: f64,
    pub null_true: bool,
    /// A failed repetition is recorded, not dropped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// All p-values of a grid run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PValueTable {
    pub rows: Vec<PRow>,
}

/// Ground-truth null flags for a model: `(interaction name, null_true)`.
fn null_flags(scm: &str) -> Result<Vec<(EffectKind, bool)>> {
    let (_, shape) = builtin_scm_with_shape(scm)?;
    let verdicts = check_all(&shape, Scale::Mean)?;
    Ok(EffectKind::INTERACTIONS
        .iter()
        .map(|&k| {
            let v = verdicts
                .iter()
                .find(|v| v.criterion.effect() == k)
                .expect("all five criteria checked");
            (k, v.verdict == Verdict::NoInteraction)
        })
        .collect())
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Runs every (scm, n, repetition) cell; deterministic in `seed_base`.
pub fn run_grid(grid: &ExperimentGrid) -> Result<PValueTable> {
    grid.validate()?;
    let mut jobs = Vec::new();
    for scm in &grid.scms {
        let flags = null_flags(scm)?;
        for &n in &grid.sizes {
            for rep in 0..grid.repetitions {
                jobs.push((scm.clone(), flags.clone(), n, rep));
            }
        }
    }
    let rows: Vec<Vec<PRow>> = jobs
        .par_iter()
        .map(|(scm, flags, n, rep)| run_cell(grid, scm, flags, *n, *rep))
        .collect();
    Ok(PValueTable { rows: rows.into_iter().flatten().collect() })
}

fn run_cell(
    grid: &ExperimentGrid,
    scm: &str,
    flags: &[(EffectKind, bool)],
    n: usize,
    rep: usize,
) -> Vec<PRow> {
    let seed = mix_seed(mix_seed(mix_seed(grid.seed_base, fnv1a(scm)), n as u64), rep as u64);
    let base = |k: EffectKind, null_true: bool| PRow {
        scm: scm.to_string(),
        n,
        rep,
        interaction: k.name(Scale::Mean),
        p_value: f64::NAN,
        estimate: f64::NAN,
        se: f64::NAN,
        null_true,
        error: None,
    };
    let attempt = || -> Result<Vec<PRow>> {
        let spec = crate::scm::builtin_scm(scm)?;
        let data = Dataset::from_sample(&sample_observational(&spec, n, seed)?)?;
        let plan = FoldPlan::stratified(&data.x, grid.folds, mix_seed(seed, 1))?;
        let fits = fit_nuisances(&data, &plan, &grid.learner, Scale::Mean)?;
        let mut out = Vec::with_capacity(flags.len());
        for &(k, null_true) in flags {
            let est =
                effect_estimate(&fits, &data, &EffectSpec::of(k, Scale::Mean), grid.estimator)?;
            let t = test_effect(&est, grid.alpha)?;
            let mut row = base(k, null_true);
            row.p_value = t.p_value;
            row.estimate = t.estimate;
            row.se = t.se;
            out.push(row);
        }
        Ok(out)
    };
    match attempt() {
        Ok(rows) => rows,
        Err(e) => flags
            .iter()
            .map(|&(k, null_true)| {
                let mut row = base(k, null_true);
                row.error = Some(e.to_string());
                row
            })
            .collect(),
    }
}

/// Summary of one (scm, n, interaction) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub scm: String,
    pub n: usize,
    pub interaction: String,
    pub null_true: bool,
    /// "type-i" when the null is true, "power" otherwise.
    pub label: String,
    pub repetitions: usize,
    pub failures: usize,
    pub reject_rate: f64,
    pub ks_distance: f64,
    pub ks_p_value: f64,
}

/// Grid summary plus pooled ECDF data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub alpha: f64,
    pub cells: Vec<CellSummary>,
}

/// Summarizes per-cell rejection rates and KS distances from uniformity.
pub fn summarize(table: &PValueTable, alpha: f64) -> Result<Summary> {
    if table.rows.is_empty() {
        return Err(Error::Data("empty p-value table".into()));
    }
    let mut keys: Vec<(String, usize, String)> = Vec::new();
    for r in &table.rows {
        let key = (r.scm.clone(), r.n, r.interaction.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut cells = Vec::with_capacity(keys.len());
    for (scm, n, interaction) in keys {
        let rows: Vec<&PRow> = table
            .rows
            .iter()
            .filter(|r| r.scm == scm && r.n == n && r.interaction == interaction)
            .collect();
        let ps: Vec<f64> =
            rows.iter().filter(|r| r.error.is_none()).map(|r| r.p_value).collect();
        let failures = rows.len() - ps.len();
        let null_true = rows.first().map(|r| r.null_true).unwrap_or(false);
        let (reject_rate, ks, ksp) = if ps.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let rr = ps.iter().filter(|&&p| p < alpha).count() as f64 / ps.len() as f64;
            let d = ks_distance_uniform(&ps)?;
            (rr, d, ks_p_value(ps.len(), d)?)
        };
        cells.push(CellSummary {
            scm,
            n,
            interaction,
            null_true,
            label: if null_true { "type-i".into() } else { "power".into() },
            repetitions: rows.len(),
            failures,
            reject_rate,
            ks_distance: ks,
            ks_p_value: ksp,
        });
    }
    Ok(Summary { schema_version: 1, alpha, cells })
}

/// Plot-ready ECDF points: one row per (cell, sorted p-value).
#[derive(Debug, Clone, Serialize)]
pub struct EcdfPoint {
    pub scm: String,
    pub n: usize,
    pub interaction: String,
    pub null_true: bool,
    pub p_value: f64,
    pub ecdf: f64,
}

pub fn ecdf_points(table: &PValueTable) -> Vec<EcdfPoint> {
    let mut out = Vec::new();
    let mut keys: Vec<(String, usize, String)> = Vec::new();
    for r in &table.rows {
        let key = (r.scm.clone(), r.n, r.interaction.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    for (scm, n, interaction) in keys {
        let mut rows: Vec<&PRow> = table
            .rows
            .iter()
            .filter(|r| r.scm == scm && r.n == n && r.interaction == interaction && r.error.is_none())
            .collect();
        rows.sort_by(|a, b| a.p_value.total_cmp(&b.p_value));
        let m = rows.len() as f64;
        for (i, r) in rows.iter().enumerate() {
            out.push(EcdfPoint {
                scm: scm.clone(),
                n,
                interaction: interaction.clone(),
                null_true: r.null_true,
                p_value: r.p_value,
                ecdf: (i as f64 + 1.0) / m,
            });
        }
    }
    out
}
