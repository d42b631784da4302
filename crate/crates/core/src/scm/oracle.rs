//! Ground-truth contrast values on a known SCM.
//!
//! Contrasts are lowered to a grouped form `Σ_g sign_g · E[D_g | E_g]`
//! where each `D_g` is a signed combination of potential outcomes solved at
//! the *same* exogenous point (the structural-basis expansion). Exact mode
//! enumerates the exogenous space — in rational arithmetic when the model
//! permits, reproducing worked fractions literally. Monte-Carlo mode reuses
//! one draw for every clause of a contrast and reports a delta-method
//! standard error from the per-draw influence values.

use num::rational::BigRational;

use crate::effects::{z_de_ie_coefficients, EffectKind, PoSignature};
use crate::error::{Error, Result};
use crate::numeric::Scalar;
use crate::scm::engine::{enumerate_exact, mc_accumulate, EvalOptions, WorldValues, Worlds};
use crate::scm::spec::{InterventionClause, Role, ScmSpec};
use crate::shape::Scale;

/// Conditioning event, evaluated on the natural world.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// The whole population.
    All,
    /// Natural treatment stratum `X = x`.
    X(u8),
    /// Discrete confounder stratum `Z = z` (all named variables equal).
    Z(Vec<(String, f64)>),
}

/// Oracle evaluation mode.
#[derive(Debug, Clone, Copy)]
pub enum OracleMode {
    /// Enumerate the exogenous space (requires finite support).
    Exact,
    /// Common-random-number Monte Carlo.
    MonteCarlo { n: usize, seed: u64 },
}

/// An oracle result: the value, its exact rational form when available,
/// and the Monte-Carlo standard error when sampled.
#[derive(Debug, Clone)]
pub struct OracleValue {
    pub value: f64,
    pub rational: Option<BigRational>,
    pub se: Option<f64>,
    pub warnings: Vec<String>,
}

impl OracleValue {
    /// |value| measured in Monte-Carlo standard errors (`None` in exact mode).
    pub fn z_score(&self) -> Option<f64> {
        self.se.map(|se| if se > 0.0 { self.value / se } else { f64::INFINITY })
    }
}

/// The contrast families of the higher-order contrast taxonomy.
#[derive(Debug, Clone)]
pub enum ContrastKind {
    /// First-order causal: `E[Y_{c1} − Y_{c0} | event]`.
    CtfFirst { c0: InterventionClause, c1: InterventionClause, event: Event },
    /// First-order spurious: `E[Y_c | e1] − E[Y_c | e0]`.
    FactualFirst { clause: InterventionClause, e0: Event, e1: Event },
    /// Second-order causal-causal:
    /// `E[(Y_{c1,alt} − Y_{c0,alt}) − (Y_{c1,base} − Y_{c0,base}) | event]`.
    CausalCausal {
        c0: InterventionClause,
        c1: InterventionClause,
        base: InterventionClause,
        alt: InterventionClause,
        event: Event,
    },
    /// Second-order causal-spurious:
    /// `E[Y_{c1} − Y_{c0} | e1] − E[Y_{c1} − Y_{c0} | e0]`.
    CausalSpurious { c0: InterventionClause, c1: InterventionClause, e0: Event, e1: Event },
    /// Third-order causal-causal-spurious:
    /// the causal-causal difference (base-first orientation) integrated
    /// against the posterior difference `e1 − e0`.
    CausalCausalSpurious {
        c0: InterventionClause,
        c1: InterventionClause,
        base: InterventionClause,
        alt: InterventionClause,
        e0: Event,
        e1: Event,
    },
}

/// A contrast: clauses, conditioning events, order tag, and outcome scale.
#[derive(Debug, Clone)]
pub struct Contrast {
    pub kind: ContrastKind,
    pub scale: Scale,
}

impl Contrast {
    pub fn order(&self) -> u8 {
        match self.kind {
            ContrastKind::CtfFirst { .. } | ContrastKind::FactualFirst { .. } => 1,
            ContrastKind::CausalCausal { .. } | ContrastKind::CausalSpurious { .. } => 2,
            ContrastKind::CausalCausalSpurious { .. } => 3,
        }
    }
}

/// One conditional expectation group of a lowered contrast.
#[derive(Debug, Clone)]
struct Group {
    sign: f64,
    /// Signed combination of clause outcomes forming the unit-level quantity.
    outcomes: Vec<(f64, usize)>,
    event: Event,
}

/// A contrast lowered to `Σ_g sign_g · E[Σ_j coef_j · Y_{clause_j} | E_g]`.
#[derive(Debug, Clone)]
pub struct GroupedContrast {
    pub scale: Scale,
    clauses: Vec<InterventionClause>,
    groups: Vec<Group>,
}

impl GroupedContrast {
    fn new(scale: Scale) -> Self {
        GroupedContrast { scale, clauses: Vec::new(), groups: Vec::new() }
    }

    fn clause_idx(&mut self, c: &InterventionClause) -> usize {
        if let Some(i) = self.clauses.iter().position(|x| x == c) {
            return i;
        }
        self.clauses.push(c.clone());
        self.clauses.len() - 1
    }

    fn push_group(&mut self, sign: f64, outcomes: &[(f64, &InterventionClause)], event: Event) {
        let outcomes = outcomes.iter().map(|(c, cl)| (*c, self.clause_idx(cl))).collect();
        self.groups.push(Group { sign, outcomes, event });
    }

    /// Number of conditional-expectation groups.
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }
}

fn merge_clauses(a: &InterventionClause, b: &InterventionClause) -> Result<InterventionClause> {
    let mut out = a.clone();
    for (k, v) in &b.assignments {
        if out.assignments.insert(k.clone(), v.clone()).is_some() {
            return Err(Error::Oracle(format!("clauses both assign `{k}`")));
        }
    }
    Ok(out)
}

impl Contrast {
    /// Lowers to the unit-level grouped form (the structural-basis
    /// expansion: differences inside each conditional expectation).
    pub fn to_grouped(&self) -> Result<GroupedContrast> {
        let mut g = GroupedContrast::new(self.scale);
        match &self.kind {
            ContrastKind::CtfFirst { c0, c1, event } => {
                g.push_group(1.0, &[(1.0, c1), (-1.0, c0)], event.clone());
            }
            ContrastKind::FactualFirst { clause, e0, e1 } => {
                g.push_group(1.0, &[(1.0, clause)], e1.clone());
                g.push_group(-1.0, &[(1.0, clause)], e0.clone());
            }
            ContrastKind::CausalCausal { c0, c1, base, alt, event } => {
                let c1a = merge_clauses(c1, alt)?;
                let c0a = merge_clauses(c0, alt)?;
                let c1b = merge_clauses(c1, base)?;
                let c0b = merge_clauses(c0, base)?;
                g.push_group(
                    1.0,
                    &[(1.0, &c1a), (-1.0, &c0a), (-1.0, &c1b), (1.0, &c0b)],
                    event.clone(),
                );
            }
            ContrastKind::CausalSpurious { c0, c1, e0, e1 } => {
                g.push_group(1.0, &[(1.0, c1), (-1.0, c0)], e1.clone());
                g.push_group(-1.0, &[(1.0, c1), (-1.0, c0)], e0.clone());
            }
            ContrastKind::CausalCausalSpurious { c0, c1, base, alt, e0, e1 } => {
                let c1b = merge_clauses(c1, base)?;
                let c0b = merge_clauses(c0, base)?;
                let c1a = merge_clauses(c1, alt)?;
                let c0a = merge_clauses(c0, alt)?;
                let d = [(1.0, c1b), (-1.0, c0b), (-1.0, c1a), (1.0, c0a)];
                let d_ref: Vec<(f64, &InterventionClause)> =
                    d.iter().map(|(c, cl)| (*c, cl)).collect();
                g.push_group(1.0, &d_ref, e1.clone());
                g.push_group(-1.0, &d_ref, e0.clone());
            }
        }
        Ok(g)
    }

    /// Lowers to one group per (clause, event) pair: the direct
    /// conditional-expectation evaluation, used to cross-check the
    /// structural-basis expansion.
    pub fn to_grouped_po(&self) -> Result<GroupedContrast> {
        let unit = self.to_grouped()?;
        let mut g = GroupedContrast::new(self.scale);
        for group in &unit.groups {
            for (coef, clause_idx) in &group.outcomes {
                let clause = unit.clauses[*clause_idx].clone();
                g.push_group(group.sign * coef, &[(1.0, &clause)], group.event.clone());
            }
        }
        Ok(g)
    }
}

/// Grouped form of a named effect: PO terms grouped by conditioning event so
/// unit-level differences share draws.
pub fn effect_grouped(spec: &ScmSpec, kind: EffectKind, scale: Scale) -> GroupedContrast {
    po_combination(spec, &kind.coefficients(), scale)
}

/// Grouped form of the z-specific DE-IE interaction within `Z = z`.
pub fn z_de_ie_grouped(spec: &ScmSpec, z: &[(String, f64)], scale: Scale) -> GroupedContrast {
    let mut g = po_combination(spec, &z_de_ie_coefficients(), scale);
    for group in &mut g.groups {
        group.event = Event::Z(z.to_vec());
    }
    g
}

/// Builds the grouped contrast of a signed PO combination, merging terms
/// that share a conditioning event into unit-level groups.
pub fn po_combination(
    spec: &ScmSpec,
    coefficients: &[(f64, PoSignature)],
    scale: Scale,
) -> GroupedContrast {
    let mut g = GroupedContrast::new(scale);
    // Group by conditioning event, preserving first-seen order.
    let mut events: Vec<Option<u8>> = Vec::new();
    for (_, sig) in coefficients {
        if !events.contains(&sig.x_z) {
            events.push(sig.x_z);
        }
    }
    for ev in events {
        let outcomes: Vec<(f64, InterventionClause)> = coefficients
            .iter()
            .filter(|(_, sig)| sig.x_z == ev)
            .map(|(c, sig)| (*c, InterventionClause::nested_po(spec, sig.x_y, sig.x_w)))
            .collect();
        let refs: Vec<(f64, &InterventionClause)> =
            outcomes.iter().map(|(c, cl)| (*c, cl)).collect();
        let event = match ev {
            Some(x) => Event::X(x),
            None => Event::All,
        };
        g.push_group(1.0, &refs, event);
    }
    g
}

fn event_holds<S: Scalar>(spec: &ScmSpec, event: &Event, natural: &[S]) -> Result<bool> {
    match event {
        Event::All => Ok(true),
        Event::X(x) => {
            let xi = spec.x_index();
            let want = if *x == 1 { S::one() } else { S::zero() };
            Ok(natural[xi] == want)
        }
        Event::Z(conds) => {
            for (name, value) in conds {
                let idx = spec.index_of(name).ok_or_else(|| {
                    Error::Oracle(format!("conditioning on unknown variable {name}"))
                })?;
                if spec.var(idx).role != Role::Z {
                    return Err(Error::Oracle(format!(
                        "conditioning variable {name} does not have role Z"
                    )));
                }
                if (natural[idx].to_f64() - value).abs() > 1e-12 {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

fn transform<S: Scalar>(scale: Scale, v: &S) -> Result<S> {
    match scale {
        Scale::Mean => Ok(v.clone()),
        Scale::LogRisk => {
            if v.to_f64() <= 0.0 {
                return Err(Error::Oracle("log-risk of a zero-probability outcome".into()));
            }
            v.ln()
        }
        Scale::LogOdds => {
            let p = v.to_f64();
            if p <= 0.0 || p >= 1.0 {
                return Err(Error::Oracle("degenerate odds".into()));
            }
            v.logit()
        }
    }
}

fn check_scale(spec: &ScmSpec, scale: Scale) -> Result<()> {
    if scale != Scale::Mean && !spec.y_is_bernoulli() {
        return Err(Error::Oracle(
            "log-risk and log-odds scales need a Bernoulli outcome mechanism".into(),
        ));
    }
    Ok(())
}

/// Evaluates a grouped contrast.
pub fn eval_grouped(spec: &ScmSpec, g: &GroupedContrast, mode: OracleMode) -> Result<OracleValue> {
    check_scale(spec, g.scale)?;
    match mode {
        OracleMode::Exact => eval_exact(spec, g),
        OracleMode::MonteCarlo { n, seed } => eval_mc(spec, g, n, seed),
    }
}

fn eval_exact(spec: &ScmSpec, g: &GroupedContrast) -> Result<OracleValue> {
    // Rational arithmetic when the model is rational and no log transform is
    // involved; otherwise exact enumeration over f64.
    if g.scale == Scale::Mean && !spec.has_transcendental() {
        let (value, rational, warnings) = eval_exact_backend::<BigRational>(spec, g)?;
        Ok(OracleValue { value, rational: Some(rational), se: None, warnings })
    } else {
        let (value, _, warnings) = eval_exact_backend::<f64>(spec, g)?;
        Ok(OracleValue { value, rational: None, se: None, warnings })
    }
}

fn eval_exact_backend<S: Scalar>(
    spec: &ScmSpec,
    g: &GroupedContrast,
) -> Result<(f64, S, Vec<String>)> {
    let worlds = Worlds::build(spec, &g.clauses)?;
    let world_of: Vec<usize> = g.clauses.iter().map(|c| worlds.index_of(c)).collect();
    let opts = EvalOptions { y_risk: g.scale != Scale::Mean };
    let y_idx = spec.y_index();

    let mut num: Vec<S> = vec![S::zero(); g.groups.len()];
    let mut den: Vec<S> = vec![S::zero(); g.groups.len()];
    let mut warnings = Vec::new();
    enumerate_exact::<S, _>(spec, &worlds, opts, &mut warnings, &mut |values, weight| {
        for (gi, group) in g.groups.iter().enumerate() {
            if !event_holds(spec, &group.event, &values[0])? {
                continue;
            }
            let mut d = S::zero();
            for (coef, clause_idx) in &group.outcomes {
                let y = &values[world_of[*clause_idx]][y_idx];
                let y = transform(g.scale, y)?;
                let coef_s = S::from_rational(
                    &crate::numeric::rational_from_str(&format!("{coef}"))
                        .expect("±1 coefficients"),
                );
                d = d.add(&coef_s.mul(&y));
            }
            num[gi] = num[gi].add(&d.mul(weight));
            den[gi] = den[gi].add(weight);
        }
        Ok(())
    })?;

    let mut total = S::zero();
    for (gi, group) in g.groups.iter().enumerate() {
        if den[gi].is_zero() {
            return Err(Error::Oracle("empty conditioning event".into()));
        }
        let sign = if group.sign >= 0.0 { S::one() } else { S::one().neg() };
        total = total.add(&sign.mul(&num[gi].div(&den[gi])?));
    }
    Ok((total.to_f64(), total, warnings))
}

/// Monte-Carlo moment accumulator for the delta-method standard error.
#[derive(Clone)]
struct McAcc {
    n: usize,
    s_d: Vec<f64>,
    s_e: Vec<f64>,
    // pairwise raw moments, indexed [g][h]
    p_dd: Vec<Vec<f64>>,
    p_de: Vec<Vec<f64>>,
    p_ee: Vec<Vec<f64>>,
    warnings: Vec<String>,
}

impl McAcc {
    fn new(k: usize) -> Self {
        McAcc {
            n: 0,
            s_d: vec![0.0; k],
            s_e: vec![0.0; k],
            p_dd: vec![vec![0.0; k]; k],
            p_de: vec![vec![0.0; k]; k],
            p_ee: vec![vec![0.0; k]; k],
            warnings: Vec::new(),
        }
    }

    fn merge(mut self, other: McAcc) -> McAcc {
        self.n += other.n;
        for i in 0..self.s_d.len() {
            self.s_d[i] += other.s_d[i];
            self.s_e[i] += other.s_e[i];
            for j in 0..self.s_d.len() {
                self.p_dd[i][j] += other.p_dd[i][j];
                self.p_de[i][j] += other.p_de[i][j];
                self.p_ee[i][j] += other.p_ee[i][j];
            }
        }
        for w in other.warnings {
            if self.warnings.len() < 8 && !self.warnings.contains(&w) {
                self.warnings.push(w);
            }
        }
        self
    }
}

fn eval_mc(spec: &ScmSpec, g: &GroupedContrast, n: usize, seed: u64) -> Result<OracleValue> {
    let worlds = Worlds::build(spec, &g.clauses)?;
    let world_of: Vec<usize> = g.clauses.iter().map(|c| worlds.index_of(c)).collect();
    let opts = EvalOptions { y_risk: g.scale != Scale::Mean };
    let y_idx = spec.y_index();
    let k = g.groups.len();

    let acc = mc_accumulate(
        spec,
        &worlds,
        opts,
        n,
        seed,
        McAcc::new(k),
        |acc, values: &WorldValues<f64>| {
            acc.n += 1;
            let mut d = vec![0.0_f64; k];
            let mut e = vec![false; k];
            for (gi, group) in g.groups.iter().enumerate() {
                if !event_holds(spec, &group.event, &values[0])? {
                    continue;
                }
                e[gi] = true;
                let mut acc_d = 0.0;
                for (coef, clause_idx) in &group.outcomes {
                    let y = values[world_of[*clause_idx]][y_idx];
                    acc_d += coef * transform(g.scale, &y)?;
                }
                d[gi] = acc_d;
            }
            for gi in 0..k {
                if !e[gi] {
                    continue;
                }
                acc.s_d[gi] += d[gi];
                acc.s_e[gi] += 1.0;
                for h in 0..k {
                    if !e[h] {
                        continue;
                    }
                    acc.p_dd[gi][h] += d[gi] * d[h];
                    acc.p_de[gi][h] += d[gi];
                    acc.p_ee[gi][h] += 1.0;
                }
            }
            Ok(())
        },
        McAcc::merge,
    )?;

    finalize_mc(g, &acc)
}

fn finalize_mc(g: &GroupedContrast, acc: &McAcc) -> Result<OracleValue> {
    let n = acc.n as f64;
    let k = g.groups.len();
    let mut theta = vec![0.0; k];
    let mut share = vec![0.0; k];
    for gi in 0..k {
        if acc.s_e[gi] == 0.0 {
            return Err(Error::Oracle("empty conditioning event".into()));
        }
        theta[gi] = acc.s_d[gi] / acc.s_e[gi];
        share[gi] = acc.s_e[gi] / n;
    }
    let value: f64 = (0..k).map(|gi| g.groups[gi].sign * theta[gi]).sum();

    // Var(phi) with phi = sum_g sign_g (d_g - theta_g) 1_g / share_g.
    let mut var_phi = 0.0;
    for gi in 0..k {
        for h in 0..k {
            let cov = acc.p_dd[gi][h] - theta[h] * acc.p_de[gi][h] - theta[gi] * acc.p_de[h][gi]
                + theta[gi] * theta[h] * acc.p_ee[gi][h];
            var_phi += g.groups[gi].sign * g.groups[h].sign * cov / (share[gi] * share[h]);
        }
    }
    var_phi /= n;
    let se = (var_phi.max(0.0) / n).sqrt();
    Ok(OracleValue {
        value,
        rational: None,
        se: Some(se),
        warnings: acc.warnings.clone(),
    })
}

/// Evaluates a contrast against the model (structural-basis expansion).
pub fn oracle_contrast(spec: &ScmSpec, contrast: &Contrast, mode: OracleMode) -> Result<OracleValue> {
    eval_grouped(spec, &contrast.to_grouped()?, mode)
}

/// Ground-truth value of a named effect.
pub fn oracle_effect(
    spec: &ScmSpec,
    kind: EffectKind,
    scale: Scale,
    mode: OracleMode,
) -> Result<OracleValue> {
    eval_grouped(spec, &effect_grouped(spec, kind, scale), mode)
}

/// Ground-truth z-specific DE-IE interaction within the `Z = z` stratum.
pub fn oracle_z_de_ie(
    spec: &ScmSpec,
    z: &[(String, f64)],
    scale: Scale,
    mode: OracleMode,
) -> Result<OracleValue> {
    eval_grouped(spec, &z_de_ie_grouped(spec, z, scale), mode)
}

/// The risk-ratio diagnostic
/// `E[Y_{x1,W_{x0}}]/E[Y_{x0,W_{x0}}] × E[Y_{x0,W_{x1}}]/E[Y_{x1,W_{x1}}]`,
/// reported alongside log-risk analyses. A value of 1 means the risk ratio
/// of the transition is unchanged by the mediator regime.
pub fn oracle_drr_irr(spec: &ScmSpec, mode: OracleMode) -> Result<OracleValue> {
    // Four unconditional mean-scale POs.
    let sigs = [
        PoSignature::marginal(1, 0),
        PoSignature::marginal(0, 0),
        PoSignature::marginal(0, 1),
        PoSignature::marginal(1, 1),
    ];
    let mut g = GroupedContrast::new(Scale::Mean);
    for sig in sigs {
        let clause = InterventionClause::nested_po(spec, sig.x_y, sig.x_w);
        g.push_group(1.0, &[(1.0, &clause)], Event::All);
    }
    match mode {
        OracleMode::Exact => {
            let v = eval_exact_po_values(spec, &g)?;
            let value = v.0[0] / v.0[1] * (v.0[2] / v.0[3]);
            Ok(OracleValue { value, rational: None, se: None, warnings: v.1 })
        }
        OracleMode::MonteCarlo { n, seed } => {
            let worlds = Worlds::build(spec, &g.clauses)?;
            let world_of: Vec<usize> = g.clauses.iter().map(|c| worlds.index_of(c)).collect();
            let y_idx = spec.y_index();
            let acc = mc_accumulate(
                spec,
                &worlds,
                EvalOptions::default(),
                n,
                seed,
                McAcc::new(4),
                |acc, values: &WorldValues<f64>| {
                    acc.n += 1;
                    let d: Vec<f64> =
                        world_of.iter().map(|&w| values[w][y_idx]).collect();
                    for gi in 0..4 {
                        acc.s_d[gi] += d[gi];
                        acc.s_e[gi] += 1.0;
                        for h in 0..4 {
                            acc.p_dd[gi][h] += d[gi] * d[h];
                        }
                    }
                    Ok(())
                },
                McAcc::merge,
            )?;
            let n_f = acc.n as f64;
            let means: Vec<f64> = acc.s_d.iter().map(|s| s / n_f).collect();
            if means.iter().any(|&m| m <= 0.0) {
                return Err(Error::Oracle(
                    "risk-ratio diagnostic needs strictly positive mean outcomes".into(),
                ));
            }
            let value = means[0] / means[1] * (means[2] / means[3]);
            // Delta method on log: signs +,-,+,- over the four means.
            let signs = [1.0, -1.0, 1.0, -1.0];
            let mut var_log = 0.0;
            for gi in 0..4 {
                for h in 0..4 {
                    let cov = acc.p_dd[gi][h] / n_f - means[gi] * means[h];
                    var_log += signs[gi] * signs[h] * cov / (means[gi] * means[h]);
                }
            }
            let se = value * (var_log.max(0.0) / n_f).sqrt();
            Ok(OracleValue { value, rational: None, se: Some(se), warnings: acc.warnings })
        }
    }
}

fn eval_exact_po_values(spec: &ScmSpec, g: &GroupedContrast) -> Result<(Vec<f64>, Vec<String>)> {
    let worlds = Worlds::build(spec, &g.clauses)?;
    let world_of: Vec<usize> = g.clauses.iter().map(|c| worlds.index_of(c)).collect();
    let y_idx = spec.y_index();
    let mut num = vec![0.0_f64; g.groups.len()];
    let mut warnings = Vec::new();
    enumerate_exact::<f64, _>(
        spec,
        &worlds,
        EvalOptions::default(),
        &mut warnings,
        &mut |values, weight| {
            for (gi, group) in g.groups.iter().enumerate() {
                let (_, clause_idx) = group.outcomes[0];
                num[gi] += values[world_of[clause_idx]][y_idx] * weight;
            }
            Ok(())
        },
    )?;
    Ok((num, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::parse::parse_scm;

    fn te_se_scm() -> ScmSpec {
        parse_scm(
            "name: appendix-te-se\n\
             var Z : z ~ bernoulli(0.5)\n\
             var X : x ~ bernoulli(0.5 + 0.1*Z)\n\
             var Y : y = X + Z + X*Z\n",
        )
        .unwrap()
    }

    #[test]
    fn exact_te_se_is_ten_ninety_ninths() {
        let spec = te_se_scm();
        let v = oracle_effect(&spec, EffectKind::TeSe, Scale::Mean, OracleMode::Exact).unwrap();
        let q = v.rational.expect("rational mode");
        assert_eq!(q, crate::numeric::rational_from_str("10/99").unwrap());
    }

    #[test]
    fn ett_conditional_means_match_worked_fractions() {
        let spec = te_se_scm();
        let c = Contrast {
            scale: Scale::Mean,
            kind: ContrastKind::CtfFirst {
                c0: InterventionClause::set_x(&spec, 0),
                c1: InterventionClause::set_x(&spec, 1),
                event: Event::X(1),
            },
        };
        let v = oracle_contrast(&spec, &c, OracleMode::Exact).unwrap();
        assert_eq!(v.rational.unwrap(), crate::numeric::rational_from_str("17/11").unwrap());
    }

    #[test]
    fn unit_level_and_po_routes_agree_exactly() {
        let spec = te_se_scm();
        let c = Contrast {
            scale: Scale::Mean,
            kind: ContrastKind::CausalSpurious {
                c0: InterventionClause::set_x(&spec, 0),
                c1: InterventionClause::set_x(&spec, 1),
                e0: Event::X(0),
                e1: Event::X(1),
            },
        };
        let unit = eval_grouped(&spec, &c.to_grouped().unwrap(), OracleMode::Exact).unwrap();
        let po = eval_grouped(&spec, &c.to_grouped_po().unwrap(), OracleMode::Exact).unwrap();
        assert_eq!(unit.rational.unwrap(), po.rational.unwrap());
    }

    #[test]
    fn mc_agrees_with_exact_within_four_ses() {
        let spec = te_se_scm();
        let exact =
            oracle_effect(&spec, EffectKind::TeSe, Scale::Mean, OracleMode::Exact).unwrap();
        let mc = oracle_effect(
            &spec,
            EffectKind::TeSe,
            Scale::Mean,
            OracleMode::MonteCarlo { n: 200_000, seed: 11 },
        )
        .unwrap();
        let se = mc.se.unwrap();
        assert!((mc.value - exact.value).abs() <= 4.0 * se, "{} vs {}", mc.value, exact.value);
    }

    #[test]
    fn empty_conditioning_event_errors() {
        let spec = parse_scm(
            "var Z : z ~ bernoulli(0.5)\n\
             var X : x ~ bernoulli(1)\n\
             var Y : y = X + Z\n",
        )
        .unwrap();
        let err =
            oracle_effect(&spec, EffectKind::Se, Scale::Mean, OracleMode::Exact).unwrap_err();
        assert!(err.to_string().contains("empty conditioning event"), "{err}");
    }
}
