//! Built-in nuisance learners.
//!
//! Two learners cover the toolkit's needs without external ML dependencies:
//!
//! - [`TableModel`] — a frequency table over exact feature tuples with a
//!   longest-prefix fallback chain. On fully discrete covariates it is the
//!   saturated estimator: cell means of the target.
//! - [`BoostedModel`] — gradient-boosted depth-2 regression trees on
//!   histogram bins, with squared loss for conditional means and logistic
//!   loss for propensities, early-stopped on a held-out slice of the
//!   training rows.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which built-in learner to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    /// Frequency table (exact on discrete covariates).
    Table,
    /// Boosted depth-2 stumps (continuous covariates).
    Stumps,
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(LearnerKind::Table),
            "stumps" => Ok(LearnerKind::Stumps),
            other => Err(Error::Unsupported(format!("unknown learner `{other}`"))),
        }
    }
}

/// Learner hyperparameters and clipping constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    /// Boosting rounds (upper bound; early stopping may use fewer).
    pub rounds: usize,
    pub learning_rate: f64,
    /// Ridge penalty on leaf values.
    pub ridge: f64,
    /// Propensity clipping bound: predictions land in [eps, 1 - eps].
    pub clip_e: f64,
    /// Outcome-probability clipping for the log scales.
    pub clip_mu: f64,
}

impl LearnerConfig {
    pub fn table() -> Self {
        LearnerConfig {
            kind: LearnerKind::Table,
            rounds: 0,
            learning_rate: 0.0,
            ridge: 0.0,
            clip_e: 0.01,
            clip_mu: 0.005,
        }
    }

    pub fn stumps() -> Self {
        LearnerConfig {
            kind: LearnerKind::Stumps,
            rounds: 200,
            learning_rate: 0.1,
            ridge: 1.0,
            clip_e: 0.01,
            clip_mu: 0.005,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.clip_e) || self.clip_e <= 0.0 {
            return Err(Error::Estimation(format!("clip_e {} outside (0, 0.5)", self.clip_e)));
        }
        if !(0.0..0.5).contains(&self.clip_mu) || self.clip_mu <= 0.0 {
            return Err(Error::Estimation(format!("clip_mu {} outside (0, 0.5)", self.clip_mu)));
        }
        if self.kind == LearnerKind::Stumps && self.rounds == 0 {
            return Err(Error::Estimation("stumps learner needs rounds >= 1".into()));
        }
        Ok(())
    }
}

/// Target loss for a fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// Squared error; predictions on the outcome scale.
    Squared,
    /// Logistic; predictions are probabilities.
    Logistic,
}

/// A fitted predictor.
#[derive(Debug, Clone)]
pub enum Model {
    Table(TableModel),
    Boosted(BoostedModel),
}

impl Model {
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            Model::Table(m) => m.predict(row),
            Model::Boosted(m) => m.predict(row),
        }
    }
}

/// Fits the configured learner. `cols` are feature columns over the
/// training rows; `seed` only drives the early-stopping validation split.
pub fn fit_model(
    config: &LearnerConfig,
    loss: Loss,
    cols: &[Vec<f64>],
    y: &[f64],
    seed: u64,
) -> Result<Model> {
    match config.kind {
        LearnerKind::Table => Ok(Model::Table(TableModel::fit(cols, y)?)),
        LearnerKind::Stumps => Ok(Model::Boosted(BoostedModel::fit(config, loss, cols, y, seed)?)),
    }
}

// ---------- frequency table ----------

/// Frequency-table regressor: mean target per exact feature tuple, with a
/// fallback chain that drops trailing features (mediators before
/// confounders, given the `[Z.., W..]` layout) down to the global mean.
#[derive(Debug, Clone)]
pub struct TableModel {
    /// `maps[p]`: key over the first `p` features -> (sum, count).
    maps: Vec<HashMap<Vec<u64>, (f64, u32)>>,
    global: f64,
    d: usize,
}

impl TableModel {
    pub fn fit(cols: &[Vec<f64>], y: &[f64]) -> Result<TableModel> {
        let n = y.len();
        if n == 0 {
            return Err(Error::Estimation("cannot fit a table on zero rows".into()));
        }
        let d = cols.len();
        let mut maps: Vec<HashMap<Vec<u64>, (f64, u32)>> = vec![HashMap::new(); d + 1];
        let mut key = Vec::with_capacity(d);
        for i in 0..n {
            key.clear();
            for c in cols {
                key.push(c[i].to_bits());
            }
            for p in 1..=d {
                let e = maps[p].entry(key[..p].to_vec()).or_insert((0.0, 0));
                e.0 += y[i];
                e.1 += 1;
            }
        }
        let global = y.iter().sum::<f64>() / n as f64;
        Ok(TableModel { maps, global, d })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        debug_assert_eq!(row.len(), self.d);
        let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        for p in (1..=self.d).rev() {
            if let Some((s, c)) = self.maps[p].get(&key[..p]) {
                return s / f64::from(*c);
            }
        }
        self.global
    }
}

// ---------- boosted depth-2 stumps ----------

#[derive(Debug, Clone, Copy)]
struct Split {
    feat: usize,
    /// Go left when `value <= threshold`.
    threshold: f64,
    /// The threshold's index in the feature's edge list: bins `0..=bin_hint`
    /// go left, used for binned prediction during fitting.
    bin_hint: usize,
}

#[derive(Debug, Clone)]
struct Tree {
    root: Option<Split>,
    child: [Option<Split>; 2],
    /// Leaf values indexed by (root branch, child branch).
    leaf: [[f64; 2]; 2],
}

impl Tree {
    fn predict(&self, row: &[f64]) -> f64 {
        let b0 = match &self.root {
            None => return self.leaf[0][0],
            Some(s) => usize::from(row[s.feat] > s.threshold),
        };
        let b1 = match &self.child[b0] {
            None => 0,
            Some(s) => usize::from(row[s.feat] > s.threshold),
        };
        self.leaf[b0][b1]
    }
}

/// Gradient-boosted depth-2 trees.
#[derive(Debug, Clone)]
pub struct BoostedModel {
    base: f64,
    trees: Vec<Tree>,
    loss: Loss,
    /// Rounds actually kept after early stopping.
    pub rounds_used: usize,
}

const MAX_BINS: usize = 64;
const MIN_CHILD_HESS: f64 = 4.0;
const PATIENCE: usize = 15;
const VALIDATION_FRAC: f64 = 0.2;

impl BoostedModel {
    pub fn fit(
        config: &LearnerConfig,
        loss: Loss,
        cols: &[Vec<f64>],
        y: &[f64],
        seed: u64,
    ) -> Result<BoostedModel> {
        let n = y.len();
        if n == 0 {
            return Err(Error::Estimation("cannot fit stumps on zero rows".into()));
        }
        let mean = y.iter().sum::<f64>() / n as f64;
        let base = match loss {
            Loss::Squared => mean,
            Loss::Logistic => logit(mean.clamp(1e-6, 1.0 - 1e-6)),
        };
        if cols.is_empty() || n < 20 {
            return Ok(BoostedModel { base, trees: Vec::new(), loss, rounds_used: 0 });
        }

        // Early-stopping slice: a seeded 20% holdout of the training rows.
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha12Rng::seed_from_u64(seed));
        let n_val = ((n as f64 * VALIDATION_FRAC) as usize).max(1);
        let (val_rows, fit_rows) = order.split_at(n_val);

        // Quantile bin edges per feature, from the fitting rows.
        let edges: Vec<Vec<f64>> = cols
            .iter()
            .map(|c| {
                let mut vals: Vec<f64> = fit_rows.iter().map(|&i| c[i]).collect();
                vals.sort_by(|a, b| a.total_cmp(b));
                let mut e = Vec::with_capacity(MAX_BINS);
                for b in 1..MAX_BINS {
                    let pos = b * vals.len() / MAX_BINS;
                    e.push(vals[pos.min(vals.len() - 1)]);
                }
                e.dedup_by(|a, b| a == b);
                e
            })
            .collect();
        // Pre-binned fitting rows, column-major.
        let binned: Vec<Vec<u8>> = cols
            .iter()
            .zip(&edges)
            .map(|(c, e)| fit_rows.iter().map(|&i| bin_of(c[i], e) as u8).collect())
            .collect();
        let n_fit = fit_rows.len();

        let mut score_fit = vec![base; n_fit];
        let mut score_val = vec![base; val_rows.len()];
        let y_fit: Vec<f64> = fit_rows.iter().map(|&i| y[i]).collect();
        let y_val: Vec<f64> = val_rows.iter().map(|&i| y[i]).collect();

        let mut trees: Vec<Tree> = Vec::new();
        let mut best_loss = val_loss(loss, &score_val, &y_val);
        let mut best_rounds = 0usize;
        let mut grad = vec![0.0; n_fit];
        let mut hess = vec![0.0; n_fit];
        let mut row_buf = vec![0.0; cols.len()];

        for round in 0..config.rounds {
            for i in 0..n_fit {
                match loss {
                    Loss::Squared => {
                        grad[i] = score_fit[i] - y_fit[i];
                        hess[i] = 1.0;
                    }
                    Loss::Logistic => {
                        let p = expit(score_fit[i]);
                        grad[i] = p - y_fit[i];
                        hess[i] = (p * (1.0 - p)).max(1e-9);
                    }
                }
            }
            let Some(tree) =
                build_tree(&binned, &edges, &grad, &hess, config.ridge, config.learning_rate)
            else {
                break;
            };
            for i in 0..n_fit {
                score_fit[i] += tree_predict_binned(&tree, &binned, i);
            }
            for (vi, &row) in val_rows.iter().enumerate() {
                for (f, c) in cols.iter().enumerate() {
                    row_buf[f] = c[row];
                }
                score_val[vi] += tree.predict(&row_buf);
            }
            trees.push(tree);

            let l = val_loss(loss, &score_val, &y_val);
            if l < best_loss - 1e-10 {
                best_loss = l;
                best_rounds = round + 1;
            } else if round + 1 >= best_rounds + PATIENCE {
                break;
            }
        }
        trees.truncate(best_rounds);
        let rounds_used = trees.len();
        Ok(BoostedModel { base, trees, loss, rounds_used })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let score = self.base + self.trees.iter().map(|t| t.predict(row)).sum::<f64>();
        match self.loss {
            Loss::Squared => score,
            Loss::Logistic => expit(score),
        }
    }
}

fn expit(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Number of edges strictly below `v`: the bin index. A split at edge
/// index `t` sends bins `0..=t` left, matching `value <= edges[t]`.
fn bin_of(v: f64, edges: &[f64]) -> usize {
    edges.partition_point(|&e| e < v)
}

fn tree_predict_binned(tree: &Tree, binned: &[Vec<u8>], i: usize) -> f64 {
    let go = |s: &Split| -> usize { usize::from(binned[s.feat][i] as usize > s.bin_hint) };
    let b0 = match &tree.root {
        None => return tree.leaf[0][0],
        Some(s) => go(s),
    };
    let b1 = match &tree.child[b0] {
        None => 0,
        Some(s) => go(s),
    };
    tree.leaf[b0][b1]
}

fn val_loss(loss: Loss, score: &[f64], y: &[f64]) -> f64 {
    let mut total = 0.0;
    for (s, yv) in score.iter().zip(y) {
        total += match loss {
            Loss::Squared => (s - yv) * (s - yv),
            Loss::Logistic => {
                let p = expit(*s).clamp(1e-12, 1.0 - 1e-12);
                -(yv * p.ln() + (1.0 - yv) * (1.0 - p).ln())
            }
        };
    }
    total / score.len().max(1) as f64
}

struct NodeStat {
    g: f64,
    h: f64,
}

/// Best split of the rows in `mask` (bit per fitting row).
fn best_split(
    binned: &[Vec<u8>],
    edges: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    rows: &[u32],
    ridge: f64,
) -> Option<(Split, f64)> {
    let mut total = NodeStat { g: 0.0, h: 0.0 };
    for &i in rows {
        total.g += grad[i as usize];
        total.h += hess[i as usize];
    }
    let parent_score = total.g * total.g / (total.h + ridge);
    let mut best: Option<(Split, f64)> = None;
    let mut hist_g = [0.0_f64; MAX_BINS];
    let mut hist_h = [0.0_f64; MAX_BINS];
    for (f, col) in binned.iter().enumerate() {
        let n_edges = edges[f].len();
        if n_edges == 0 {
            continue;
        }
        hist_g[..=n_edges].fill(0.0);
        hist_h[..=n_edges].fill(0.0);
        for &i in rows {
            let b = col[i as usize] as usize;
            hist_g[b] += grad[i as usize];
            hist_h[b] += hess[i as usize];
        }
        let mut gl = 0.0;
        let mut hl = 0.0;
        for t in 0..n_edges {
            gl += hist_g[t];
            hl += hist_h[t];
            let gr = total.g - gl;
            let hr = total.h - hl;
            if hl < MIN_CHILD_HESS || hr < MIN_CHILD_HESS {
                continue;
            }
            let gain = gl * gl / (hl + ridge) + gr * gr / (hr + ridge) - parent_score;
            if gain > 1e-10 && best.as_ref().map_or(true, |(_, g)| gain > *g) {
                best = Some((
                    Split { feat: f, threshold: edges[f][t], bin_hint: t },
                    gain,
                ));
            }
        }
    }
    best
}

fn leaf_value(grad: &[f64], hess: &[f64], rows: &[u32], ridge: f64, lr: f64) -> f64 {
    let mut g = 0.0;
    let mut h = 0.0;
    for &i in rows {
        g += grad[i as usize];
        h += hess[i as usize];
    }
    -lr * g / (h + ridge)
}

fn build_tree(
    binned: &[Vec<u8>],
    edges: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    ridge: f64,
    lr: f64,
) -> Option<Tree> {
    let n = binned.first().map(|c| c.len()).unwrap_or(0);
    let all: Vec<u32> = (0..n as u32).collect();
    let (root, _) = best_split(binned, edges, grad, hess, &all, ridge)?;
    let (left, right): (Vec<u32>, Vec<u32>) = all
        .iter()
        .partition(|&&i| (binned[root.feat][i as usize] as usize) <= root.bin_hint);

    let mut tree = Tree { root: Some(root), child: [None, None], leaf: [[0.0; 2]; 2] };
    for (b, rows) in [(0usize, &left), (1usize, &right)] {
        match best_split(binned, edges, grad, hess, rows, ridge) {
            Some((split, _)) => {
                let (cl, cr): (Vec<u32>, Vec<u32>) = rows
                    .iter()
                    .partition(|&&i| (binned[split.feat][i as usize] as usize) <= split.bin_hint);
                tree.leaf[b][0] = leaf_value(grad, hess, &cl, ridge, lr);
                tree.leaf[b][1] = leaf_value(grad, hess, &cr, ridge, lr);
                tree.child[b] = Some(split);
            }
            None => {
                let v = leaf_value(grad, hess, rows, ridge, lr);
                tree.leaf[b][0] = v;
                tree.leaf[b][1] = v;
            }
        }
    }
    Some(tree)
}
