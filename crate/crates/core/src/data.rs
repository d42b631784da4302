//! Datasets and cross-fitting fold plans.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scm::sample::SampleResult;
use crate::scm::spec::Role;

/// One covariate column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
    /// Label-encoded categorical (levels are exact codes) vs numeric.
    pub categorical: bool,
}

/// An analysis dataset: binary treatment `x`, confounder columns `z`,
/// mediator columns `w`, outcome `y`. Either covariate block may be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x_name: String,
    pub y_name: String,
    pub x: Vec<u8>,
    pub z: Vec<Column>,
    pub w: Vec<Column>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(
        x_name: String,
        y_name: String,
        x: Vec<u8>,
        z: Vec<Column>,
        w: Vec<Column>,
        y: Vec<f64>,
    ) -> Result<Dataset> {
        let n = x.len();
        if n == 0 {
            return Err(Error::Data("dataset has no rows".into()));
        }
        if y.len() != n {
            return Err(Error::Data("outcome column length mismatch".into()));
        }
        for c in z.iter().chain(w.iter()) {
            if c.values.len() != n {
                return Err(Error::Data(format!("column {} length mismatch", c.name)));
            }
            if let Some(i) = c.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!("column {} has a missing value at row {i}", c.name)));
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("outcome has a missing value at row {i}")));
        }
        if x.iter().any(|&v| v > 1) {
            return Err(Error::Data("X must be binary {0,1}".into()));
        }
        Ok(Dataset { x_name, y_name, x, z, w, y })
    }

    /// Builds a dataset from an observational sample of an SCM.
    pub fn from_sample(sample: &SampleResult) -> Result<Dataset> {
        let mut x: Option<(String, Vec<u8>)> = None;
        let mut y: Option<(String, Vec<f64>)> = None;
        let mut z = Vec::new();
        let mut w = Vec::new();
        for (name, role, values) in &sample.columns {
            match role {
                Role::X => {
                    let xs: Vec<u8> = values
                        .iter()
                        .map(|&v| {
                            if v == 0.0 {
                                Ok(0u8)
                            } else if v == 1.0 {
                                Ok(1u8)
                            } else {
                                Err(Error::Data(format!("X value {v} is not binary")))
                            }
                        })
                        .collect::<Result<_>>()?;
                    x = Some((name.clone(), xs));
                }
                Role::Y => y = Some((name.clone(), values.clone())),
                Role::Z => {
                    z.push(Column { name: name.clone(), values: values.clone(), categorical: false })
                }
                Role::W => {
                    w.push(Column { name: name.clone(), values: values.clone(), categorical: false })
                }
            }
        }
        let (x_name, x) = x.ok_or_else(|| Error::Data("sample has no X column".into()))?;
        let (y_name, y) = y.ok_or_else(|| Error::Data("sample has no Y column".into()))?;
        Dataset::new(x_name, y_name, x, z, w, y)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// True if every outcome value is 0 or 1.
    pub fn y_is_binary(&self) -> bool {
        self.y.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Z feature vector of row `i`.
    pub fn z_row(&self, i: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.z.iter().map(|c| c.values[i]));
    }

    /// (Z, W) feature vector of row `i`.
    pub fn zw_row(&self, i: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.z.iter().map(|c| c.values[i]));
        buf.extend(self.w.iter().map(|c| c.values[i]));
    }

    /// Restricts to the rows where every Z column matches `z` exactly.
    pub fn z_stratum(&self, z: &[f64]) -> Result<(Dataset, Vec<usize>)> {
        if z.len() != self.z.len() {
            return Err(Error::Data(format!(
                "stratum value has {} entries but the dataset has {} Z columns",
                z.len(),
                self.z.len()
            )));
        }
        let rows: Vec<usize> = (0..self.n())
            .filter(|&i| self.z.iter().zip(z).all(|(c, zv)| c.values[i] == *zv))
            .collect();
        if rows.is_empty() {
            return Err(Error::Data("empty Z stratum".into()));
        }
        let pick = |vals: &Vec<f64>| rows.iter().map(|&i| vals[i]).collect::<Vec<f64>>();
        let sub = Dataset {
            x_name: self.x_name.clone(),
            y_name: self.y_name.clone(),
            x: rows.iter().map(|&i| self.x[i]).collect(),
            z: self
                .z
                .iter()
                .map(|c| Column { name: c.name.clone(), values: pick(&c.values), categorical: c.categorical })
                .collect(),
            w: self
                .w
                .iter()
                .map(|c| Column { name: c.name.clone(), values: pick(&c.values), categorical: c.categorical })
                .collect(),
            y: pick(&self.y),
        };
        Ok((sub, rows))
    }

    /// Distinct Z rows, in first-appearance order. Errors when a Z column is
    /// continuous-looking (more than `max_levels` distinct values).
    pub fn z_levels(&self, max_levels: usize) -> Result<Vec<Vec<f64>>> {
        let mut seen: Vec<Vec<f64>> = Vec::new();
        for i in 0..self.n() {
            let row: Vec<f64> = self.z.iter().map(|c| c.values[i]).collect();
            if !seen.contains(&row) {
                seen.push(row);
                if seen.len() > max_levels {
                    return Err(Error::Unsupported(format!(
                        "Z has more than {max_levels} distinct levels; z-specific analysis needs discrete Z"
                    )));
                }
            }
        }
        Ok(seen)
    }
}

/// A K-fold assignment of rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// Stratified-on-treatment folds: each treatment class is shuffled and
    /// dealt round-robin, so class balance per fold is off by at most one.
    pub fn stratified(x: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
        if k < 2 {
            return Err(Error::Estimation("fold count must be at least 2".into()));
        }
        if x.len() < 2 * k {
            return Err(Error::Estimation(format!(
                "{} rows are too few for {k}-fold cross-fitting",
                x.len()
            )));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = Vec::with_capacity(x.len());
        for class in [0u8, 1u8] {
            let mut idx: Vec<usize> =
                (0..x.len()).filter(|&i| x[i] == class).collect();
            idx.shuffle(&mut rng);
            order.extend(idx);
        }
        let mut assignment = vec![0usize; x.len()];
        for (pos, &row) in order.iter().enumerate() {
            assignment[row] = pos % k;
        }
        Ok(FoldPlan { k, assignment, seed })
    }

    /// Rows of each fold.
    pub fn folds(&self) -> Vec<Vec<usize>> {
        let mut folds = vec![Vec::new(); self.k];
        for (row, &f) in self.assignment.iter().enumerate() {
            folds[f].push(row);
        }
        folds
    }
}
