//! K-fold cross-fitted nuisance estimation.
//!
//! Fits, out-of-fold, the four nuisance functions the estimators need:
//! the outcome regressions `μ(x, z, w) = E[Y | x, z, w]` for both arms,
//! the confounder propensity `e(z) = P(X=1 | z)`, the extended propensity
//! `g(z, w) = P(X=1 | z, w)`, and the nested means
//! `ν(x_y, x_w, z) = E[t(μ(x_y, Z, W)) | X = x_w, Z = z]` for all four
//! `(x_y, x_w)` pairs, where `t` is the identity, `log`, or `logit`
//! transform of the analysis scale.
//!
//! Every row's prediction comes from models trained without its fold. The
//! nested means are fitted by regressing out-of-fold `μ̂` predictions on Z
//! among training rows of the `x_w` arm — the regression-on-predictions
//! route, which coincides with the explicit `Σ_w μ̂ P̂(w|x_w,z)` form on
//! discrete data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::learner::{fit_model, LearnerConfig, Loss};
use crate::numeric::mix_seed;
use crate::shape::Scale;

/// Metadata recorded with a fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitMetadata {
    pub learner: LearnerConfig,
    pub k: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

/// Out-of-fold nuisance predictions, aligned with the dataset rows.
#[derive(Debug, Clone)]
pub struct NuisanceFits {
    pub scale: Scale,
    pub plan: FoldPlan,
    /// `mu[x][i]`: out-of-fold prediction of `E[Y | X=x, Z_i, W_i]`,
    /// clipped as the scale requires.
    pub mu: [Vec<f64>; 2],
    /// `P(X=1 | Z_i)`, clipped to `[eps, 1-eps]`.
    pub e1: Vec<f64>,
    /// `P(X=1 | Z_i, W_i)`, clipped to `[eps, 1-eps]`.
    pub g1: Vec<f64>,
    /// `nu[x_y][x_w][i]`: nested mean on the transformed scale.
    pub nu: [[Vec<f64>; 2]; 2],
    /// Raw empirical share `P(X=1)`; never clipped.
    pub x_share1: f64,
    pub meta: FitMetadata,
}

impl NuisanceFits {
    pub fn n(&self) -> usize {
        self.e1.len()
    }

    /// `P(X=x | Z_i)`.
    pub fn e(&self, x: u8, i: usize) -> f64 {
        if x == 1 {
            self.e1[i]
        } else {
            1.0 - self.e1[i]
        }
    }

    /// `P(X=x | Z_i, W_i)`.
    pub fn g(&self, x: u8, i: usize) -> f64 {
        if x == 1 {
            self.g1[i]
        } else {
            1.0 - self.g1[i]
        }
    }

    /// Raw empirical share of the `X=x` arm.
    pub fn x_share(&self, x: u8) -> f64 {
        if x == 1 {
            self.x_share1
        } else {
            1.0 - self.x_share1
        }
    }
}

/// Applies the scale's clipping to an outcome-probability prediction.
pub fn clip_mu(scale: Scale, delta: f64, v: f64) -> f64 {
    match scale {
        Scale::Mean => v,
        Scale::LogRisk => v.clamp(delta, 1.0),
        Scale::LogOdds => v.clamp(delta, 1.0 - delta),
    }
}

/// The scale's transform of a (clipped) outcome probability.
pub fn transform_mu(scale: Scale, v: f64) -> f64 {
    match scale {
        Scale::Mean => v,
        Scale::LogRisk => v.ln(),
        Scale::LogOdds => (v / (1.0 - v)).ln(),
    }
}

fn sub_rows(values: &[f64], rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&i| values[i]).collect()
}

fn feature_cols(data: &Dataset, with_w: bool) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = data.z.iter().map(|c| c.values.clone()).collect();
    if with_w {
        cols.extend(data.w.iter().map(|c| c.values.clone()));
    }
    cols
}

fn sub_cols(cols: &[Vec<f64>], rows: &[usize]) -> Vec<Vec<f64>> {
    cols.iter().map(|c| sub_rows(c, rows)).collect()
}

/// Fits all nuisances with K-fold cross-fitting.
pub fn fit_nuisances(
    data: &Dataset,
    plan: &FoldPlan,
    learner: &LearnerConfig,
    scale: Scale,
) -> Result<NuisanceFits> {
    learner.validate()?;
    let n = data.n();
    if plan.assignment.len() != n {
        return Err(Error::Estimation("fold plan does not match the dataset".into()));
    }
    if scale != Scale::Mean && !data.y_is_binary() {
        return Err(Error::Estimation(format!(
            "{} scale requires a binary outcome",
            scale.label()
        )));
    }
    let folds = plan.folds();
    for (k, fold) in folds.iter().enumerate() {
        let mut has = [false, false];
        for i in 0..n {
            if plan.assignment[i] != k {
                has[data.x[i] as usize] = true;
            }
        }
        if !(has[0] && has[1]) {
            return Err(Error::Estimation(format!(
                "training split of fold {k} contains a single treatment class; \
                 use stratified folds or fewer folds"
            )));
        }
        if fold.is_empty() {
            return Err(Error::Estimation(format!("fold {k} is empty")));
        }
    }

    let z_cols = feature_cols(data, false);
    let zw_cols = feature_cols(data, true);
    let x_f64: Vec<f64> = data.x.iter().map(|&v| f64::from(v)).collect();
    let eps = learner.clip_e;
    let delta = learner.clip_mu;

    // Phase 1: out-of-fold mu, e, g.
    struct FoldOut {
        fold: usize,
        mu: [Vec<f64>; 2],
        e1: Vec<f64>,
        g1: Vec<f64>,
    }
    let phase1: Vec<FoldOut> = folds
        .par_iter()
        .enumerate()
        .map(|(k, fold_rows)| -> Result<FoldOut> {
            let train: Vec<usize> = (0..n).filter(|&i| plan.assignment[i] != k).collect();
            let mut mu_models = Vec::with_capacity(2);
            for arm in [0u8, 1u8] {
                let arm_rows: Vec<usize> =
                    train.iter().copied().filter(|&i| data.x[i] == arm).collect();
                let cols = sub_cols(&zw_cols, &arm_rows);
                let y = sub_rows(&data.y, &arm_rows);
                let seed = mix_seed(plan.seed, (k as u64) << 3 | u64::from(arm));
                mu_models.push(fit_model(learner, Loss::Squared, &cols, &y, seed)?);
            }
            let e_model = fit_model(
                learner,
                Loss::Logistic,
                &sub_cols(&z_cols, &train),
                &sub_rows(&x_f64, &train),
                mix_seed(plan.seed, (k as u64) << 3 | 2),
            )?;
            // With no mediators, g(z, w) degenerates to e(z); reuse the
            // model so the two coincide exactly.
            let g_model = if data.w.is_empty() {
                None
            } else {
                Some(fit_model(
                    learner,
                    Loss::Logistic,
                    &sub_cols(&zw_cols, &train),
                    &sub_rows(&x_f64, &train),
                    mix_seed(plan.seed, (k as u64) << 3 | 3),
                )?)
            };

            let mut out = FoldOut {
                fold: k,
                mu: [Vec::with_capacity(fold_rows.len()), Vec::with_capacity(fold_rows.len())],
                e1: Vec::with_capacity(fold_rows.len()),
                g1: Vec::with_capacity(fold_rows.len()),
            };
            let mut zbuf = Vec::new();
            let mut zwbuf = Vec::new();
            for &i in fold_rows {
                data.z_row(i, &mut zbuf);
                data.zw_row(i, &mut zwbuf);
                for (arm, model) in mu_models.iter().enumerate() {
                    let v = model.predict(&zwbuf);
                    out.mu[arm].push(clip_mu(scale, delta, v));
                }
                let e_pred = e_model.predict(&zbuf).clamp(eps, 1.0 - eps);
                out.e1.push(e_pred);
                out.g1.push(match &g_model {
                    Some(m) => m.predict(&zwbuf).clamp(eps, 1.0 - eps),
                    None => e_pred,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut mu = [vec![0.0; n], vec![0.0; n]];
    let mut e1 = vec![0.0; n];
    let mut g1 = vec![0.0; n];
    for out in &phase1 {
        for (j, &i) in folds[out.fold].iter().enumerate() {
            mu[0][i] = out.mu[0][j];
            mu[1][i] = out.mu[1][j];
            e1[i] = out.e1[j];
            g1[i] = out.g1[j];
        }
    }

    // Phase 2: nested means. With no mediators the W-marginalization is
    // vacuous and the nested mean collapses to the (transformed) outcome
    // regression exactly, independent of the x_w arm.
    let targets: [Vec<f64>; 2] = [
        mu[0].iter().map(|&v| transform_mu(scale, v)).collect(),
        mu[1].iter().map(|&v| transform_mu(scale, v)).collect(),
    ];
    if data.w.is_empty() {
        let nu = [
            [targets[0].clone(), targets[0].clone()],
            [targets[1].clone(), targets[1].clone()],
        ];
        return assemble(data, plan, learner, scale, mu, e1, g1, nu, &x_f64);
    }
    struct NuOut {
        fold: usize,
        nu: [[Vec<f64>; 2]; 2],
    }
    let phase2: Vec<NuOut> = folds
        .par_iter()
        .enumerate()
        .map(|(k, fold_rows)| -> Result<NuOut> {
            let mut out = NuOut {
                fold: k,
                nu: [
                    [Vec::with_capacity(fold_rows.len()), Vec::with_capacity(fold_rows.len())],
                    [Vec::with_capacity(fold_rows.len()), Vec::with_capacity(fold_rows.len())],
                ],
            };
            for x_y in 0..2usize {
                for x_w in 0..2usize {
                    let train_rows: Vec<usize> = (0..n)
                        .filter(|&i| plan.assignment[i] != k && data.x[i] as usize == x_w)
                        .collect();
                    let cols = sub_cols(&z_cols, &train_rows);
                    let t = sub_rows(&targets[x_y], &train_rows);
                    let seed = mix_seed(
                        plan.seed,
                        0x100 | (k as u64) << 3 | (x_y as u64) << 1 | x_w as u64,
                    );
                    let model = fit_model(learner, Loss::Squared, &cols, &t, seed)?;
                    let mut zbuf = Vec::new();
                    for &i in fold_rows {
                        data.z_row(i, &mut zbuf);
                        out.nu[x_y][x_w].push(model.predict(&zbuf));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut nu = [[vec![0.0; n], vec![0.0; n]], [vec![0.0; n], vec![0.0; n]]];
    for out in &phase2 {
        for (j, &i) in folds[out.fold].iter().enumerate() {
            for x_y in 0..2 {
                for x_w in 0..2 {
                    nu[x_y][x_w][i] = out.nu[x_y][x_w][j];
                }
            }
        }
    }
    assemble(data, plan, learner, scale, mu, e1, g1, nu, &x_f64)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    data: &Dataset,
    plan: &FoldPlan,
    learner: &LearnerConfig,
    scale: Scale,
    mu: [Vec<f64>; 2],
    e1: Vec<f64>,
    g1: Vec<f64>,
    nu: [[Vec<f64>; 2]; 2],
    x_f64: &[f64],
) -> Result<NuisanceFits> {
    let eps = learner.clip_e;
    let n = data.n();
    let mut warnings = Vec::new();
    let at_bound = |v: f64| v <= eps || v >= 1.0 - eps;
    if e1.iter().all(|&v| at_bound(v)) {
        warnings
            .push("propensity e(z) is degenerate after clipping: every value at a bound".into());
    }
    if g1.iter().all(|&v| at_bound(v)) {
        warnings
            .push("propensity g(z,w) is degenerate after clipping: every value at a bound".into());
    }

    let x_share1 = x_f64.iter().sum::<f64>() / n as f64;
    if x_share1 == 0.0 || x_share1 == 1.0 {
        return Err(Error::Estimation("dataset contains a single treatment class".into()));
    }

    Ok(NuisanceFits {
        scale,
        plan: plan.clone(),
        mu,
        e1,
        g1,
        nu,
        x_share1,
        meta: FitMetadata { learner: learner.clone(), k: plan.k, seed: plan.seed, warnings },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;
    use crate::scm::{builtin_scm, sample_observational};

    fn discrete_data(n: usize, seed: u64) -> Dataset {
        let spec = builtin_scm("c-ie-se-a").unwrap(); // Z, X binary; W in {0,1,2}
        Dataset::from_sample(&sample_observational(&spec, n, seed).unwrap()).unwrap()
    }

    #[test]
    fn table_mu_is_the_cell_mean() {
        let data = discrete_data(4000, 1);
        let plan = FoldPlan::stratified(&data.x, 2, 1).unwrap();
        let fits = fit_nuisances(&data, &plan, &LearnerConfig::table(), Scale::Mean).unwrap();
        // Check rows against the stratum mean over the training
        // (other-fold) rows with matching (x, z, w).
        for i in (0..data.n()).step_by(997) {
            let k = plan.assignment[i];
            let x = data.x[i] as usize;
            let (zi, wi) = (data.z[0].values[i], data.w[0].values[i]);
            let mut sum = 0.0;
            let mut cnt = 0.0;
            for j in 0..data.n() {
                if plan.assignment[j] != k
                    && data.x[j] as usize == x
                    && data.z[0].values[j] == zi
                    && data.w[0].values[j] == wi
                {
                    sum += data.y[j];
                    cnt += 1.0;
                }
            }
            if cnt > 0.0 {
                assert!((fits.mu[x][i] - sum / cnt).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn propensity_recovers_the_mechanism() {
        // X ~ Bernoulli(0.5 + 0.1 Z) in the worked total-spurious model.
        let spec = builtin_scm("c-te-se").unwrap();
        let data =
            Dataset::from_sample(&sample_observational(&spec, 50_000, 3).unwrap()).unwrap();
        let plan = FoldPlan::stratified(&data.x, 10, 3).unwrap();
        let fits = fit_nuisances(&data, &plan, &LearnerConfig::table(), Scale::Mean).unwrap();
        let mut sum = [0.0, 0.0];
        let mut cnt = [0.0, 0.0];
        for i in 0..data.n() {
            let z = data.z[0].values[i] as usize;
            sum[z] += fits.e1[i];
            cnt[z] += 1.0;
        }
        assert!((sum[1] / cnt[1] - 0.6).abs() < 0.02, "{}", sum[1] / cnt[1]);
        assert!((sum[0] / cnt[0] - 0.5).abs() < 0.02, "{}", sum[0] / cnt[0]);
    }

    #[test]
    fn nested_mean_matches_closed_form_on_discrete_data() {
        let data = discrete_data(6000, 5);
        let plan = FoldPlan::stratified(&data.x, 2, 7).unwrap();
        let fits = fit_nuisances(&data, &plan, &LearnerConfig::table(), Scale::Mean).unwrap();
        // Closed form on tables: nu(x_y, x_w, z) equals the mean of the
        // out-of-fold mu(x_y) predictions over training rows with X = x_w
        // and Z = z, which is sum_w mu_hat(x_y, z, w) * P_hat(w | x_w, z).
        for i in (0..data.n()).step_by(501) {
            let k = plan.assignment[i];
            let z = data.z[0].values[i];
            for x_y in 0..2usize {
                for x_w in 0..2usize {
                    let mut sum = 0.0;
                    let mut cnt = 0.0;
                    for j in 0..data.n() {
                        if plan.assignment[j] != k
                            && data.x[j] as usize == x_w
                            && data.z[0].values[j] == z
                        {
                            sum += fits.mu[x_y][j];
                            cnt += 1.0;
                        }
                    }
                    if cnt > 0.0 {
                        assert!(
                            (fits.nu[x_y][x_w][i] - sum / cnt).abs() < 1e-10,
                            "row {i} nu({x_y},{x_w})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn clipping_is_respected_exactly() {
        let data = discrete_data(2000, 9);
        let plan = FoldPlan::stratified(&data.x, 5, 2).unwrap();
        let mut cfg = LearnerConfig::table();
        cfg.clip_e = 0.05;
        let fits = fit_nuisances(&data, &plan, &cfg, Scale::Mean).unwrap();
        assert!(fits.e1.iter().all(|&v| (0.05..=0.95).contains(&v)));
        assert!(fits.g1.iter().all(|&v| (0.05..=0.95).contains(&v)));
    }

    #[test]
    fn single_class_data_is_an_error() {
        let data = Dataset::new(
            "x".into(),
            "y".into(),
            vec![1; 40],
            vec![Column { name: "z".into(), values: vec![0.0; 40], categorical: false }],
            vec![],
            vec![0.0; 40],
        )
        .unwrap();
        let plan = FoldPlan::stratified(&data.x, 2, 1).unwrap();
        let err =
            fit_nuisances(&data, &plan, &LearnerConfig::table(), Scale::Mean).unwrap_err();
        assert!(err.to_string().contains("single treatment class"), "{err}");
    }
}
