//! Interaction testing and parsimony selection.
//!
//! Each interaction effect gets a two-sided Wald z-test of `H0: effect = 0`
//! against the normal reference (ties at `p = alpha` resolve to "not
//! rejected"). The parsimony procedure tests the total-spurious and
//! direct-indirect interactions and returns the matching decomposition
//! form; the granular battery adds the three remaining interactions with
//! Benjamini-Hochberg adjustment across all five.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FoldPlan};
use crate::effects::EffectKind;
use crate::error::{Error, Result};
use crate::estimator::{
    all_effects, drr_irr_estimate, effect_estimate, EffectEstimate, EffectSpec, EstimatorKind,
};
use crate::learner::{LearnerConfig, LearnerKind};
use crate::nuisance::{fit_nuisances, NuisanceFits};
use crate::shape::Scale;
use crate::stats::two_sided_p;

/// Default minimum stratum size per treatment arm for z-specific tests.
pub const MIN_STRATUM: usize = 50;

/// One hypothesis test result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestResult {
    pub hypothesis: String,
    pub estimate: f64,
    pub se: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub rejected: bool,
    pub alpha: f64,
    /// Benjamini-Hochberg adjusted p-value, when a correction was applied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_value: Option<f64>,
    /// Significance under the correction, when one was applied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bh_significant: Option<bool>,
}

/// Wald z-test of `H0: effect = 0`.
pub fn interaction_test(est: &EffectEstimate, alpha: f64) -> Result<TestResult> {
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::Inference(format!("alpha {alpha} outside (0,1)")));
    }
    if est.se <= 0.0 {
        return Err(Error::Inference(format!(
            "degenerate standard error for {}: se = {}",
            est.name, est.se
        )));
    }
    let statistic = est.value / est.se;
    let p_value = two_sided_p(statistic);
    Ok(TestResult {
        hypothesis: est.name.clone(),
        estimate: est.value,
        se: est.se,
        statistic,
        p_value,
        rejected: p_value < alpha,
        alpha,
        q_value: None,
        bh_significant: None,
    })
}

/// Like [`interaction_test`], but an identically-zero estimate (zero value
/// and zero influence up to floating round-off, e.g. a mediator
/// interaction on data with no mediators, where the PO terms cancel
/// pairwise) is trivially not rejected instead of erroring or turning
/// round-off dust into a huge Wald statistic: the null holds by
/// construction.
pub(crate) fn test_effect(est: &EffectEstimate, alpha: f64) -> Result<TestResult> {
    if est.se < 1e-12 && est.value.abs() < 1e-12 {
        return Ok(TestResult {
            hypothesis: est.name.clone(),
            estimate: 0.0,
            se: 0.0,
            statistic: 0.0,
            p_value: 1.0,
            rejected: false,
            alpha,
            q_value: None,
            bh_significant: None,
        });
    }
    interaction_test(est, alpha)
}

/// Benjamini-Hochberg step-up: returns adjusted p-values (monotone,
/// clamped to 1) and the significance flags at level `alpha`.
pub fn benjamini_hochberg(p_values: &[f64], alpha: f64) -> (Vec<f64>, Vec<bool>) {
    let m = p_values.len();
    if m == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut q = vec![0.0; m];
    let mut running = f64::INFINITY;
    for rank in (0..m).rev() {
        let i = order[rank];
        let adj = (p_values[i] * m as f64 / (rank + 1) as f64).min(1.0);
        running = running.min(adj);
        q[i] = running;
    }
    // Step-up rejection: largest k with p_(k) <= k*alpha/m flags 1..=k.
    let mut cutoff_rank = None;
    for rank in (0..m).rev() {
        if p_values[order[rank]] <= (rank + 1) as f64 * alpha / m as f64 {
            cutoff_rank = Some(rank);
            break;
        }
    }
    let mut sig = vec![false; m];
    if let Some(k) = cutoff_rank {
        for rank in 0..=k {
            sig[order[rank]] = true;
        }
    }
    (q, sig)
}

/// The four parsimony outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectedForm {
    #[serde(rename = "3-term")]
    ThreeTerm,
    #[serde(rename = "4-term-deie")]
    FourTermDeIe,
    #[serde(rename = "4-term-tese")]
    FourTermTeSe,
    #[serde(rename = "5-term")]
    FiveTerm,
}

impl SelectedForm {
    /// Effect kinds of the selected decomposition, in reporting order.
    pub fn terms(self) -> Vec<EffectKind> {
        use EffectKind::*;
        match self {
            SelectedForm::ThreeTerm => vec![De, Ie, Se],
            SelectedForm::FourTermDeIe => vec![De, Ie, DeIe, Se],
            SelectedForm::FourTermTeSe => vec![De, Ie, Se, TeSe],
            SelectedForm::FiveTerm => vec![De, Ie, DeIe, Se, TeSe],
        }
    }
}

/// Serializable effect summary (the per-effect JSON schema).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectReport {
    pub name: String,
    pub scale: Scale,
    pub estimator: EstimatorKind,
    pub value: f64,
    pub se: f64,
    pub ci95: [f64; 2],
    pub n: usize,
}

impl From<&EffectEstimate> for EffectReport {
    fn from(e: &EffectEstimate) -> Self {
        EffectReport {
            name: e.name.clone(),
            scale: e.scale,
            estimator: e.kind,
            value: e.value,
            se: e.se,
            ci95: [e.ci95.0, e.ci95.1],
            n: e.n,
        }
    }
}

/// Configuration echo embedded in every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub alpha: f64,
    pub folds: usize,
    pub clip_e: f64,
    pub clip_mu: f64,
    pub learner: LearnerKind,
    pub seed: u64,
    pub scale: Scale,
    pub estimator: EstimatorKind,
}

/// The outcome of a parsimony analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub schema_version: u32,
    pub scale: Scale,
    pub estimator: EstimatorKind,
    pub n: usize,
    /// Every estimated term (total, first-order, and interactions).
    pub effects: Vec<EffectReport>,
    /// The two parsimony hypotheses, in testing order.
    pub test_te_se: TestResult,
    pub test_de_ie: TestResult,
    pub selected_form: SelectedForm,
    /// Names of the terms in the selected decomposition.
    pub selected_terms: Vec<String>,
    /// Total minus the sum of the selected terms: the estimated size of
    /// whatever the parsimonious form omits.
    pub additivity_residual: f64,
    /// Total minus the sum of the full five-term decomposition; telescopes
    /// to numerical round-off by construction.
    pub full_identity_residual: f64,
    /// Granular battery with BH adjustment, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub granular: Option<Vec<TestResult>>,
    /// Risk-ratio diagnostic (value, se), reported on the log scales.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drr_irr: Option<[f64; 2]>,
    pub config: ConfigEcho,
}

fn find<'a>(effects: &'a [EffectEstimate], kind: EffectKind, scale: Scale) -> &'a EffectEstimate {
    let name = kind.name(scale);
    effects.iter().find(|e| e.name == name).expect("all effects estimated")
}

/// Runs the parsimony selection on the scale the nuisances were fitted
/// for: the mean-scale procedure, its log-risk analogue, or the log-odds
/// analogue.
pub fn run_parsimony(
    fits: &NuisanceFits,
    data: &Dataset,
    alpha: f64,
    kind: EstimatorKind,
    with_granular: bool,
) -> Result<DecompositionReport> {
    let scale = fits.scale;
    let effects = all_effects(fits, data, scale, kind)?;
    let test_te_se = test_effect(find(&effects, EffectKind::TeSe, scale), alpha)?;
    let test_de_ie = test_effect(find(&effects, EffectKind::DeIe, scale), alpha)?;

    let selected_form = match (test_te_se.rejected, test_de_ie.rejected) {
        (false, false) => SelectedForm::ThreeTerm,
        (false, true) => SelectedForm::FourTermDeIe,
        (true, false) => SelectedForm::FourTermTeSe,
        (true, true) => SelectedForm::FiveTerm,
    };
    let value_of = |k: EffectKind| find(&effects, k, scale).value;
    let tv = value_of(EffectKind::Tv);
    let selected_terms: Vec<String> =
        selected_form.terms().iter().map(|k| k.name(scale)).collect();
    let selected_sum: f64 = selected_form.terms().iter().map(|&k| value_of(k)).sum();
    let full_sum: f64 = SelectedForm::FiveTerm.terms().iter().map(|&k| value_of(k)).sum();

    let granular = if with_granular {
        Some(granular_tests(fits, data, alpha, Correction::BenjaminiHochberg, kind)?)
    } else {
        None
    };
    let drr_irr = if scale != Scale::Mean {
        // Diagnostic on the risk scale; requires a binary outcome, which
        // the log-scale fit already guarantees.
        let mean_fits = refit_mean_for_diagnostic(fits, data)?;
        let (v, se) = drr_irr_estimate(&mean_fits, data, kind)?;
        Some([v, se])
    } else {
        None
    };

    Ok(DecompositionReport {
        schema_version: 1,
        scale,
        estimator: kind,
        n: data.n(),
        effects: effects.iter().map(EffectReport::from).collect(),
        test_te_se,
        test_de_ie,
        selected_form,
        selected_terms,
        additivity_residual: tv - selected_sum,
        full_identity_residual: tv - full_sum,
        granular,
        drr_irr,
        config: ConfigEcho {
            alpha,
            folds: fits.plan.k,
            clip_e: fits.meta.learner.clip_e,
            clip_mu: fits.meta.learner.clip_mu,
            learner: fits.meta.learner.kind,
            seed: fits.plan.seed,
            scale,
            estimator: kind,
        },
    })
}

/// Mean-scale refit used for the risk-ratio diagnostic inside log-scale
/// reports (same plan, same learner).
fn refit_mean_for_diagnostic(fits: &NuisanceFits, data: &Dataset) -> Result<NuisanceFits> {
    fit_nuisances(data, &fits.plan, &fits.meta.learner, Scale::Mean)
}

/// Mean-scale parsimony selection.
pub fn run_alg1(
    fits: &NuisanceFits,
    data: &Dataset,
    alpha: f64,
    kind: EstimatorKind,
    with_granular: bool,
) -> Result<DecompositionReport> {
    if fits.scale != Scale::Mean {
        return Err(Error::Inference("the mean-scale procedure needs mean-scale nuisances".into()));
    }
    run_parsimony(fits, data, alpha, kind, with_granular)
}

/// Log-risk parsimony selection (binary outcomes).
pub fn run_alg2(
    fits: &NuisanceFits,
    data: &Dataset,
    alpha: f64,
    kind: EstimatorKind,
    with_granular: bool,
) -> Result<DecompositionReport> {
    if fits.scale != Scale::LogRisk {
        return Err(Error::Inference(
            "the log-risk procedure needs log-risk nuisances".into(),
        ));
    }
    if !data.y_is_binary() {
        return Err(Error::Inference("the log-risk procedure needs a binary outcome".into()));
    }
    run_parsimony(fits, data, alpha, kind, with_granular)
}

/// Multiple-testing correction choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    None,
    BenjaminiHochberg,
}

/// Tests all five interaction measures; BH adjusts across the five.
pub fn granular_tests(
    fits: &NuisanceFits,
    data: &Dataset,
    alpha: f64,
    correction: Correction,
    kind: EstimatorKind,
) -> Result<Vec<TestResult>> {
    let scale = fits.scale;
    let mut tests = Vec::with_capacity(5);
    for k in EffectKind::INTERACTIONS {
        let est = effect_estimate(fits, data, &EffectSpec::of(k, scale), kind)?;
        tests.push(test_effect(&est, alpha)?);
    }
    if correction == Correction::BenjaminiHochberg {
        let ps: Vec<f64> = tests.iter().map(|t| t.p_value).collect();
        let (q, sig) = benjamini_hochberg(&ps, alpha);
        for (t, (qv, s)) in tests.iter_mut().zip(q.into_iter().zip(sig)) {
            t.q_value = Some(qv);
            t.bh_significant = Some(s);
        }
    }
    Ok(tests)
}

/// z-specific DE-IE estimate and test within the `Z = z` stratum.
///
/// Restricts both nuisance fitting and averaging to the stratum, then
/// tests the stratum interaction. Uses the population-granularity
/// orientation (the reverse of the x-specific DE-IE orientation).
#[allow(clippy::too_many_arguments)]
pub fn z_specific_de_ie(
    data: &Dataset,
    z_value: &[f64],
    alpha: f64,
    learner: &LearnerConfig,
    folds: usize,
    seed: u64,
    kind: EstimatorKind,
    scale: Scale,
    min_stratum: usize,
) -> Result<(EffectEstimate, TestResult)> {
    // Discreteness guard: the stratum view only makes sense for discrete Z.
    data.z_levels(64)?;
    let (stratum, _rows) = data.z_stratum(z_value)?;
    let n0 = stratum.x.iter().filter(|&&x| x == 0).count();
    let n1 = stratum.n() - n0;
    if n0 < min_stratum || n1 < min_stratum {
        return Err(Error::Estimation(format!(
            "stratum Z = {z_value:?} has {n0} control / {n1} treated rows; \
             each arm needs at least {min_stratum}"
        )));
    }
    let plan = FoldPlan::stratified(&stratum.x, folds, seed)?;
    let fits = fit_nuisances(&stratum, &plan, learner, scale)?;
    let est = effect_estimate(&fits, &stratum, &EffectSpec::z_de_ie(scale), kind)?;
    let test = interaction_test(&est, alpha)?;
    Ok((est, test))
}

/// The v-specific DE-IE interaction (conditioning on `X, Z, W`) is not
/// identifiable from observational data: it would need the joint
/// distribution of counterfactual outcomes.
pub fn v_specific_de_ie() -> Result<()> {
    Err(Error::Unsupported(
        "v-specific DE-IE measures are not identifiable from observational data \
         (they involve the joint distribution of counterfactual outcomes)"
            .into(),
    ))
}

/// The unit-level DE-IE interaction is not identifiable from observational
/// data, for the same reason as the v-specific measure.
pub fn u_specific_de_ie() -> Result<()> {
    Err(Error::Unsupported(
        "u-specific DE-IE measures are not identifiable from observational data \
         (they involve the joint distribution of counterfactual outcomes)"
            .into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::{builtin_scm, sample_observational};

    #[test]
    fn wald_arithmetic() {
        let est = EffectEstimate {
            name: "x-te-se".into(),
            scale: Scale::Mean,
            kind: EstimatorKind::Onestep,
            value: 0.10,
            se: 0.02,
            ci95: (0.0608, 0.1392),
            n: 100,
            phi: vec![],
        };
        let t = interaction_test(&est, 0.05).unwrap();
        assert!((t.statistic - 5.0).abs() < 1e-12);
        assert!((t.p_value - 5.733e-7).abs() < 1e-9);
        assert!(t.rejected);

        let zero = EffectEstimate { value: 0.0, ..est.clone() };
        let t = interaction_test(&zero, 0.05).unwrap();
        assert_eq!(t.p_value, 1.0);
        assert!(!t.rejected);

        let degenerate = EffectEstimate { se: 0.0, ..est };
        assert!(interaction_test(&degenerate, 0.05).is_err());
    }

    #[test]
    fn bh_step_up_flags_the_worked_example() {
        let ps = [0.01, 0.02, 0.20, 0.50, 0.90];
        let (q, sig) = benjamini_hochberg(&ps, 0.05);
        assert_eq!(sig, vec![true, true, false, false, false]);
        // Adjusted p-values are monotone in the input order statistics.
        assert!(q[0] <= q[1] && q[1] <= q[2] && q[2] <= q[3] && q[3] <= q[4]);
        // Never flags more than unadjusted testing.
        let raw: usize = ps.iter().filter(|&&p| p < 0.05).count();
        assert!(sig.iter().filter(|&&s| s).count() <= raw);
    }

    #[test]
    fn parsimony_selects_and_telescopes() {
        let spec = builtin_scm("c-te-se").unwrap();
        let data = crate::data::Dataset::from_sample(
            &sample_observational(&spec, 20_000, 17).unwrap(),
        )
        .unwrap();
        let plan = FoldPlan::stratified(&data.x, 10, 17).unwrap();
        let fits = fit_nuisances(&data, &plan, &LearnerConfig::table(), Scale::Mean).unwrap();
        let report =
            run_alg1(&fits, &data, 0.05, EstimatorKind::Onestep, true).unwrap();
        // The worked model has a strong TE-SE interaction and no mediator,
        // so DE-IE cannot reject.
        assert!(report.test_te_se.rejected);
        assert!(!report.test_de_ie.rejected);
        assert_eq!(report.selected_form, SelectedForm::FourTermTeSe);
        assert!(report.full_identity_residual.abs() < 1e-10);
        let g = report.granular.as_ref().unwrap();
        assert_eq!(g.len(), 5);
        assert!(g.iter().all(|t| t.q_value.is_some()));
    }

    #[test]
    fn null_model_keeps_three_terms() {
        // Pure-noise outcome: nothing rejects, three-term form selected.
        let spec = crate::scm::parse_scm(
            "var Z : z ~ bernoulli(0.5)\n\
             var X : x ~ bernoulli(0.5)\n\
             var W : w ~ bernoulli(0.5)\n\
             var Y : y ~ bernoulli(0.5)\n",
        )
        .unwrap();
        let data = crate::data::Dataset::from_sample(
            &sample_observational(&spec, 4000, 23).unwrap(),
        )
        .unwrap();
        let plan = FoldPlan::stratified(&data.x, 5, 23).unwrap();
        let fits = fit_nuisances(&data, &plan, &LearnerConfig::table(), Scale::Mean).unwrap();
        let report = run_alg1(&fits, &data, 0.05, EstimatorKind::Onestep, false).unwrap();
        assert_eq!(report.selected_form, SelectedForm::ThreeTerm);
        for e in &report.effects {
            assert!(e.value.abs() < 3.5 * e.se + 1e-12, "{}: {} vs {}", e.name, e.value, e.se);
        }
    }

    #[test]
    fn unidentifiable_granularities_are_rejected() {
        assert!(v_specific_de_ie().unwrap_err().to_string().contains("not identifiable"));
        assert!(u_specific_de_ie().unwrap_err().to_string().contains("not identifiable"));
    }
}
