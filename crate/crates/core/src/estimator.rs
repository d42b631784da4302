//! Plug-in and one-step estimators of the potential-outcome functional
//! `PO(x_y, x_w, x_z) = E[Y_{x_y, W_{x_w}} | X = x_z]` and the signed
//! effect algebra built on it.
//!
//! The one-step estimator averages the uncentered influence expression
//!
//! ```text
//!   1(X=x_y)/P(x_z) · e-ratio · g-ratio · s(μ̂) · (Y − μ̂(x_y,Z,W))
//! + 1(X=x_w)/P(x_z) · e-ratio · (t(μ̂(x_y,Z,W)) − ν̂(x_y,x_w,Z))
//! + 1(X=x_z)/P(x_z) · ν̂(x_y,x_w,Z)
//! ```
//!
//! with `e-ratio = ê(x_z|Z)/ê(x_w|Z)`, `g-ratio = ĝ(x_w|Z,W)/ĝ(x_y|Z,W)`,
//! all predictions out-of-fold. On the mean scale `t` is the identity and
//! `s ≡ 1`; on the log-risk scale `t = log`, `s = 1/μ̂`; on the log-odds
//! scale `t = logit`, `s = 1/(μ̂(1−μ̂))`. `x_z = None` drops the stratum
//! conditioning (indicator and share become 1), which is what z-specific
//! estimation within a stratum-restricted dataset uses.
//!
//! Every named effect is a ±1 combination of PO estimates; its per-row
//! influence is the same combination of the PO influence values, so each
//! decomposition telescopes to its total at the estimate level exactly.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::effects::{EffectKind, PoSignature};
use crate::error::{Error, Result};
use crate::nuisance::{transform_mu, NuisanceFits};
use crate::shape::Scale;

/// Which estimator produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Plugin,
    Onestep,
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plugin" => Ok(EstimatorKind::Plugin),
            "onestep" => Ok(EstimatorKind::Onestep),
            other => Err(Error::Unsupported(format!("unknown estimator `{other}`"))),
        }
    }
}

/// A potential-outcome query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoQuery {
    pub x_y: u8,
    pub x_w: u8,
    /// Natural-treatment stratum; `None` averages the whole population.
    pub x_z: Option<u8>,
    pub scale: Scale,
}

impl PoQuery {
    pub fn new(sig: PoSignature, scale: Scale) -> Self {
        PoQuery { x_y: sig.x_y, x_w: sig.x_w, x_z: sig.x_z, scale }
    }
}

/// A PO estimate with its per-row influence values.
#[derive(Debug, Clone)]
pub struct PoEstimate {
    pub value: f64,
    /// Mean-centered per-row influence contributions.
    pub phi: Vec<f64>,
    pub se: f64,
    pub kind: EstimatorKind,
    pub n: usize,
}

/// A named effect as a signed combination of PO queries.
#[derive(Debug, Clone)]
pub struct EffectSpec {
    pub name: String,
    pub scale: Scale,
    pub terms: Vec<(f64, PoSignature)>,
}

impl EffectSpec {
    /// The spec of a named effect on a scale, per the coefficient algebra.
    pub fn of(kind: EffectKind, scale: Scale) -> EffectSpec {
        EffectSpec { name: kind.name(scale), scale, terms: kind.coefficients() }
    }

    /// The z-specific DE-IE spec (unconditional POs; callers restrict the
    /// data to the stratum).
    pub fn z_de_ie(scale: Scale) -> EffectSpec {
        let prefix = match scale {
            Scale::Mean => "z-de-ie",
            Scale::LogRisk => "z-dlr-ilr",
            Scale::LogOdds => "z-dlo-ilo",
        };
        EffectSpec {
            name: prefix.into(),
            scale,
            terms: crate::effects::z_de_ie_coefficients(),
        }
    }
}

/// An effect estimate: point value, influence values, standard error, CI.
#[derive(Debug, Clone)]
pub struct EffectEstimate {
    pub name: String,
    pub scale: Scale,
    pub kind: EstimatorKind,
    pub value: f64,
    pub se: f64,
    pub ci95: (f64, f64),
    pub n: usize,
    /// Mean-centered per-row influence values (for combining estimates).
    pub phi: Vec<f64>,
}

fn check_alignment(fits: &NuisanceFits, data: &Dataset, scale: Scale) -> Result<()> {
    if fits.n() != data.n() {
        return Err(Error::Estimation("nuisance fits do not match the dataset".into()));
    }
    if fits.scale != scale {
        return Err(Error::Estimation(format!(
            "nuisances fitted on the {} scale, query is on {}",
            fits.scale.label(),
            scale.label()
        )));
    }
    Ok(())
}

/// Uncentered one-step influence values for a query.
fn influence_values(fits: &NuisanceFits, data: &Dataset, q: &PoQuery) -> Result<Vec<f64>> {
    let n = data.n();
    let share = match q.x_z {
        Some(x) => {
            let s = fits.x_share(x);
            if s == 0.0 {
                return Err(Error::Estimation(format!("no rows with X = {x}")));
            }
            s
        }
        None => 1.0,
    };
    let mut phi = Vec::with_capacity(n);
    for i in 0..n {
        let xi = data.x[i];
        let e_ratio = match q.x_z {
            Some(xz) => fits.e(xz, i) / fits.e(q.x_w, i),
            None => 1.0 / fits.e(q.x_w, i),
        };
        let g_ratio = fits.g(q.x_w, i) / fits.g(q.x_y, i);
        let mu = fits.mu[q.x_y as usize][i];
        let nu = fits.nu[q.x_y as usize][q.x_w as usize][i];
        let resid_scale = match q.scale {
            Scale::Mean => 1.0,
            Scale::LogRisk => 1.0 / mu,
            Scale::LogOdds => 1.0 / (mu * (1.0 - mu)),
        };
        let ind_y = f64::from(xi == q.x_y);
        let ind_w = f64::from(xi == q.x_w);
        let ind_z = match q.x_z {
            Some(xz) => f64::from(xi == xz),
            None => 1.0,
        };
        let t1 = ind_y / share * e_ratio * g_ratio * resid_scale * (data.y[i] - mu);
        let t2 = ind_w / share * e_ratio * (transform_mu(q.scale, mu) - nu);
        let t3 = ind_z / share * nu;
        phi.push(t1 + t2 + t3);
    }
    Ok(phi)
}

fn center_and_se(mut phi: Vec<f64>, value: f64) -> (Vec<f64>, f64) {
    let n = phi.len();
    let mean = phi.iter().sum::<f64>() / n as f64;
    for p in phi.iter_mut() {
        *p -= mean;
    }
    let var = phi.iter().map(|p| p * p).sum::<f64>() / (n as f64 - 1.0).max(1.0);
    let _ = value;
    (phi, (var / n as f64).sqrt())
}

/// Plug-in estimate: the empirical analogue of the identification
/// expression, i.e. the average of `ν̂(x_y, x_w, Z_i)` over the `X = x_z`
/// stratum. Standard errors reuse the one-step influence values (a
/// documented approximation).
pub fn po_plugin(fits: &NuisanceFits, data: &Dataset, q: &PoQuery) -> Result<PoEstimate> {
    check_alignment(fits, data, q.scale)?;
    let n = data.n();
    let mut sum = 0.0;
    let mut cnt = 0.0;
    for i in 0..n {
        let keep = match q.x_z {
            Some(xz) => data.x[i] == xz,
            None => true,
        };
        if keep {
            sum += fits.nu[q.x_y as usize][q.x_w as usize][i];
            cnt += 1.0;
        }
    }
    if cnt == 0.0 {
        return Err(Error::Estimation(format!("no rows with X = {:?}", q.x_z)));
    }
    let value = sum / cnt;
    let (phi, se) = center_and_se(influence_values(fits, data, q)?, value);
    Ok(PoEstimate { value, phi, se, kind: EstimatorKind::Plugin, n })
}

/// One-step estimate: the mean of the uncentered influence expression.
pub fn po_onestep(fits: &NuisanceFits, data: &Dataset, q: &PoQuery) -> Result<PoEstimate> {
    check_alignment(fits, data, q.scale)?;
    let phi = influence_values(fits, data, q)?;
    let n = phi.len();
    let value = phi.iter().sum::<f64>() / n as f64;
    let (phi, se) = center_and_se(phi, value);
    Ok(PoEstimate { value, phi, se, kind: EstimatorKind::Onestep, n })
}

/// Estimates a PO with the requested estimator.
pub fn po_estimate(
    fits: &NuisanceFits,
    data: &Dataset,
    q: &PoQuery,
    kind: EstimatorKind,
) -> Result<PoEstimate> {
    match kind {
        EstimatorKind::Plugin => po_plugin(fits, data, q),
        EstimatorKind::Onestep => po_onestep(fits, data, q),
    }
}

/// Estimates a signed PO combination; the influence of the combination is
/// the same signed combination of PO influences (delta method for a linear
/// functional).
pub fn effect_estimate(
    fits: &NuisanceFits,
    data: &Dataset,
    spec: &EffectSpec,
    kind: EstimatorKind,
) -> Result<EffectEstimate> {
    check_alignment(fits, data, spec.scale)?;
    let n = data.n();
    let mut value = 0.0;
    let mut phi = vec![0.0; n];
    for (coef, sig) in &spec.terms {
        let q = PoQuery::new(*sig, spec.scale);
        let po = po_estimate(fits, data, &q, kind)?;
        value += coef * po.value;
        for (acc, p) in phi.iter_mut().zip(&po.phi) {
            *acc += coef * p;
        }
    }
    let var = phi.iter().map(|p| p * p).sum::<f64>() / (n as f64 - 1.0).max(1.0);
    let se = (var / n as f64).sqrt();
    Ok(EffectEstimate {
        name: spec.name.clone(),
        scale: spec.scale,
        kind,
        value,
        se,
        ci95: (value - 1.96 * se, value + 1.96 * se),
        n,
        phi,
    })
}

/// All ten named effects of the decompositions, in one pass.
pub fn all_effects(
    fits: &NuisanceFits,
    data: &Dataset,
    scale: Scale,
    kind: EstimatorKind,
) -> Result<Vec<EffectEstimate>> {
    EffectKind::ALL
        .iter()
        .map(|&k| effect_estimate(fits, data, &EffectSpec::of(k, scale), kind))
        .collect()
}

/// The estimated risk-ratio diagnostic
/// `PO(1,0,·)/PO(0,0,·) × PO(0,1,·)/PO(1,1,·)` on unconditional mean-scale
/// POs, with a delta-method standard error. Reported, not tested.
pub fn drr_irr_estimate(
    fits: &NuisanceFits,
    data: &Dataset,
    kind: EstimatorKind,
) -> Result<(f64, f64)> {
    check_alignment(fits, data, Scale::Mean)?;
    let sigs = [
        PoSignature::marginal(1, 0),
        PoSignature::marginal(0, 0),
        PoSignature::marginal(0, 1),
        PoSignature::marginal(1, 1),
    ];
    let pos: Vec<PoEstimate> = sigs
        .iter()
        .map(|s| po_estimate(fits, data, &PoQuery::new(*s, Scale::Mean), kind))
        .collect::<Result<_>>()?;
    if pos.iter().any(|p| p.value <= 0.0) {
        return Err(Error::Estimation(
            "risk-ratio diagnostic needs strictly positive mean outcomes".into(),
        ));
    }
    let value = pos[0].value / pos[1].value * (pos[2].value / pos[3].value);
    // Influence of log(value): signed sum of phi_k / PO_k.
    let n = data.n();
    let signs = [1.0, -1.0, 1.0, -1.0];
    let mut var = 0.0;
    for i in 0..n {
        let mut v = 0.0;
        for (k, po) in pos.iter().enumerate() {
            v += signs[k] * po.phi[i] / po.value;
        }
        var += v * v;
    }
    var /= (n as f64 - 1.0).max(1.0);
    let se = value * (var / n as f64).sqrt();
    Ok((value, se))
}
