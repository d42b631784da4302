//! Structural causal model specification and validation.

use std::collections::{BTreeMap, HashSet};

use num::rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::rational_from_str;
use crate::scm::expr::Expr;

/// Role of an endogenous variable in the assumed causal diagram
/// (confounders `Z` before treatment `X` before mediators `W` before
/// outcome `Y`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Z,
    X,
    W,
    Y,
}

impl Role {
    fn order(self) -> u8 {
        match self {
            Role::Z => 0,
            Role::X => 1,
            Role::W => 2,
            Role::Y => 3,
        }
    }
}

/// Distribution descriptor for an exogenous variable.
#[derive(Debug, Clone, PartialEq)]
pub enum ExoDist {
    /// Finite support: values with rational probabilities summing to one.
    Table(Vec<(BigRational, BigRational)>),
    /// Bernoulli with a constant rational parameter.
    Bernoulli(BigRational),
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
}

impl ExoDist {
    /// True if the support is finite (enumerable in exact mode).
    pub fn finite(&self) -> bool {
        matches!(self, ExoDist::Table(_) | ExoDist::Bernoulli(_))
    }

    /// Finite-support atoms as (value, mass) pairs.
    pub fn atoms(&self) -> Option<Vec<(BigRational, BigRational)>> {
        match self {
            ExoDist::Table(rows) => Some(rows.clone()),
            ExoDist::Bernoulli(p) => {
                let one = BigRational::from_integer(1.into());
                Some(vec![
                    (BigRational::from_integer(0.into()), one.clone() - p.clone()),
                    (BigRational::from_integer(1.into()), p.clone()),
                ])
            }
            _ => None,
        }
    }
}

/// An exogenous variable declaration.
#[derive(Debug, Clone)]
pub struct ExoVar {
    pub name: String,
    pub dist: ExoDist,
}

/// How an endogenous variable obtains its value.
#[derive(Debug, Clone)]
pub enum Mechanism {
    /// Deterministic function of parents and exogenous variables.
    Deterministic(Expr),
    /// Draws from Bernoulli(p) where p is a function of parents; the draw
    /// consumes the variable's own implicit uniform noise, shared across
    /// counterfactual worlds.
    Bernoulli(Expr),
}

impl Mechanism {
    pub fn expr(&self) -> &Expr {
        match self {
            Mechanism::Deterministic(e) | Mechanism::Bernoulli(e) => e,
        }
    }
}

/// An endogenous variable: name, role, mechanism.
#[derive(Debug, Clone)]
pub struct EndoVar {
    pub name: String,
    pub role: Role,
    pub mech: Mechanism,
}

/// An executable structural causal model.
///
/// Immutable after construction; shareable across threads. Variables are
/// stored in topological order (mechanisms reference only earlier variables
/// and declared exogenous names).
#[derive(Debug, Clone)]
pub struct ScmSpec {
    pub name: String,
    pub exogenous: Vec<ExoVar>,
    pub endogenous: Vec<EndoVar>,
}

impl ScmSpec {
    /// Validates the model invariants and returns the spec.
    pub fn new(name: String, exogenous: Vec<ExoVar>, endogenous: Vec<EndoVar>) -> Result<Self> {
        let spec = ScmSpec { name, exogenous, endogenous };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for v in &self.exogenous {
            if !seen.insert(v.name.clone()) {
                return Err(Error::Spec(format!("duplicate exogenous name {}", v.name)));
            }
            if let ExoDist::Table(rows) = &v.dist {
                let total: BigRational = rows.iter().map(|(_, p)| p.clone()).sum();
                if total != BigRational::from_integer(1.into()) {
                    return Err(Error::Spec(format!(
                        "table probabilities for {} sum to {}, expected 1",
                        v.name, total
                    )));
                }
            }
            match &v.dist {
                ExoDist::Normal { sd, .. } if *sd <= 0.0 => {
                    return Err(Error::Spec(format!("normal sd must be positive for {}", v.name)))
                }
                ExoDist::Uniform { lo, hi } if lo >= hi => {
                    return Err(Error::Spec(format!("uniform bounds inverted for {}", v.name)))
                }
                ExoDist::Exponential { rate } if *rate <= 0.0 => {
                    return Err(Error::Spec(format!("exponential rate must be positive for {}", v.name)))
                }
                _ => {}
            }
        }
        let mut endo_seen = HashSet::new();
        for v in &self.endogenous {
            if seen.contains(&v.name) || !endo_seen.insert(v.name.clone()) {
                return Err(Error::Spec(format!("duplicate variable name {}", v.name)));
            }
        }

        // Mechanisms reference only earlier variables (acyclic, Markovian) and
        // each exogenous variable feeds at most one mechanism: shared noise
        // would be a bidirected edge, which the toolkit does not model.
        let mut exo_owner: BTreeMap<usize, String> = BTreeMap::new();
        for (i, v) in self.endogenous.iter().enumerate() {
            let mut endo_refs = Vec::new();
            v.mech.expr().endo_refs(&mut endo_refs);
            if endo_refs.iter().any(|&j| j >= i) {
                return Err(Error::Spec(format!(
                    "mechanism of {} references a variable declared at or after it",
                    v.name
                )));
            }
            let mut exo_refs = Vec::new();
            v.mech.expr().exo_refs(&mut exo_refs);
            exo_refs.sort_unstable();
            exo_refs.dedup();
            for e in exo_refs {
                if let Some(owner) = exo_owner.get(&e) {
                    return Err(Error::Spec(format!(
                        "exogenous variable {} is shared by {} and {}; correlated noise is not supported",
                        self.exogenous[e].name, owner, v.name
                    )));
                }
                exo_owner.insert(e, v.name.clone());
            }
        }

        // Role wiring: Z* X W* Y, exactly one X and one Y.
        let n_x = self.endogenous.iter().filter(|v| v.role == Role::X).count();
        let n_y = self.endogenous.iter().filter(|v| v.role == Role::Y).count();
        if n_x != 1 || n_y != 1 {
            return Err(Error::Spec(format!(
                "expected exactly one X and one Y variable, found {n_x} and {n_y}"
            )));
        }
        let mut last = 0u8;
        for v in &self.endogenous {
            let ord = v.role.order();
            if ord < last {
                return Err(Error::Spec(format!(
                    "variable {} breaks the Z, X, W, Y declaration order",
                    v.name
                )));
            }
            last = ord;
        }
        // The treatment must be binary by construction.
        let x = self.var(self.x_index());
        match &x.mech {
            Mechanism::Bernoulli(_) => {}
            Mechanism::Deterministic(e) => {
                if !self.expr_binary(e) {
                    return Err(Error::Spec(format!(
                        "treatment {} must be a Bernoulli mechanism or copy a 0/1 exogenous table",
                        x.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Conservative static check that a deterministic expression is {0,1}:
    /// an indicator, or a direct copy of a 0/1 table exogenous.
    fn expr_binary(&self, e: &Expr) -> bool {
        match e {
            Expr::Ind(..) => true,
            Expr::Exo(i) => match &self.exogenous[*i].dist {
                ExoDist::Bernoulli(_) => true,
                ExoDist::Table(rows) => rows.iter().all(|(v, _)| {
                    *v == BigRational::from_integer(0.into())
                        || *v == BigRational::from_integer(1.into())
                }),
                _ => false,
            },
            _ => false,
        }
    }

    pub fn var(&self, idx: usize) -> &EndoVar {
        &self.endogenous[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.endogenous.iter().position(|v| v.name == name)
    }

    pub fn x_index(&self) -> usize {
        self.endogenous.iter().position(|v| v.role == Role::X).expect("validated")
    }

    pub fn y_index(&self) -> usize {
        self.endogenous.iter().position(|v| v.role == Role::Y).expect("validated")
    }

    pub fn vars_with_role(&self, role: Role) -> Vec<usize> {
        self.endogenous
            .iter()
            .enumerate()
            .filter(|(_, v)| v.role == role)
            .map(|(i, _)| i)
            .collect()
    }

    /// True if exact enumeration requires the `f64` backend (transcendental
    /// mechanisms present).
    pub fn has_transcendental(&self) -> bool {
        self.endogenous.iter().any(|v| v.mech.expr().has_transcendental())
    }

    /// True if every exogenous distribution has finite support, so the
    /// exact oracle can enumerate the model.
    pub fn finite_support(&self) -> bool {
        self.exogenous.iter().all(|e| e.dist.finite())
    }

    /// True if the outcome mechanism defines a risk in [0,1]: a Bernoulli
    /// draw whose parameter is the per-unit risk.
    pub fn y_is_bernoulli(&self) -> bool {
        matches!(self.var(self.y_index()).mech, Mechanism::Bernoulli(_))
    }
}

/// One intervention assignment: a constant, or the natural value the
/// variable takes under a sub-intervention (`W_{x'}` inside `Y_{x, W_{x'}}`).
#[derive(Debug, Clone, PartialEq)]
pub enum Assignment {
    Const(BigRational),
    NaturalUnder(Box<InterventionClause>),
}

/// A (possibly nested) intervention clause.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InterventionClause {
    pub assignments: BTreeMap<String, Assignment>,
}

impl InterventionClause {
    /// Empty clause: the natural regime.
    pub fn natural() -> Self {
        Self::default()
    }

    /// `{X: x}` for the spec's treatment variable.
    pub fn set_x(spec: &ScmSpec, x: u8) -> Self {
        let mut c = Self::default();
        c.assignments.insert(
            spec.var(spec.x_index()).name.clone(),
            Assignment::Const(BigRational::from_integer((x as i64).into())),
        );
        c
    }

    /// `{X: x_y, W: natural under X = x_w}` for every mediator, i.e. the
    /// clause of the nested counterfactual `Y_{x_y, W_{x_w}}`.
    pub fn nested_po(spec: &ScmSpec, x_y: u8, x_w: u8) -> Self {
        let mut c = Self::set_x(spec, x_y);
        if x_y != x_w {
            let sub = Self::set_x(spec, x_w);
            for wi in spec.vars_with_role(Role::W) {
                c.assignments.insert(
                    spec.var(wi).name.clone(),
                    Assignment::NaturalUnder(Box::new(sub.clone())),
                );
            }
        }
        c
    }

    /// Sets a variable to a numeric constant.
    pub fn with_const(mut self, name: &str, value: f64) -> Self {
        let q = rational_from_str(&format!("{value}"))
            .unwrap_or_else(|| BigRational::from_integer(0.into()));
        self.assignments.insert(name.to_string(), Assignment::Const(q));
        self
    }

    /// Validates depth and role constraints against a spec.
    pub fn validate(&self, spec: &ScmSpec) -> Result<()> {
        for (name, a) in &self.assignments {
            let idx = spec
                .index_of(name)
                .ok_or_else(|| Error::Spec(format!("clause references unknown variable {name}")))?;
            if let Assignment::NaturalUnder(sub) = a {
                if spec.var(idx).role != Role::W {
                    return Err(Error::Spec(format!(
                        "nested clauses may only assign mediators, but {name} has role {:?}",
                        spec.var(idx).role
                    )));
                }
                for (sub_name, sub_a) in &sub.assignments {
                    spec.index_of(sub_name).ok_or_else(|| {
                        Error::Spec(format!("clause references unknown variable {sub_name}"))
                    })?;
                    if matches!(sub_a, Assignment::NaturalUnder(_)) {
                        return Err(Error::Spec("clause nesting depth exceeds 2".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A realized point of the exogenous space, for unit-level evaluation.
///
/// Keys are declared exogenous names plus `u:<var>` for the implicit uniform
/// noise of each Bernoulli-mechanism variable.
#[derive(Debug, Clone, Default)]
pub struct ExogenousDraw {
    pub values: BTreeMap<String, f64>,
    /// Probability mass (enumeration) or 1/n (sampling).
    pub weight: f64,
}

impl ExogenousDraw {
    pub fn new(values: BTreeMap<String, f64>) -> Self {
        ExogenousDraw { values, weight: 1.0 }
    }
}

/// Evaluates the submodel at one exogenous point: constants override
/// mechanisms; nested clauses first solve the mediator under the
/// sub-intervention with the same draw, then inject that value.
pub fn potential_response(
    spec: &ScmSpec,
    clause: &InterventionClause,
    draw: &ExogenousDraw,
) -> Result<BTreeMap<String, f64>> {
    clause.validate(spec)?;
    let mut out = BTreeMap::new();
    let values = solve_world(spec, clause, draw)?;
    for (i, v) in spec.endogenous.iter().enumerate() {
        out.insert(v.name.clone(), values[i]);
    }
    Ok(out)
}

fn solve_world(
    spec: &ScmSpec,
    clause: &InterventionClause,
    draw: &ExogenousDraw,
) -> Result<Vec<f64>> {
    let exo: Vec<f64> = spec
        .exogenous
        .iter()
        .map(|e| {
            draw.values
                .get(&e.name)
                .copied()
                .ok_or_else(|| Error::Eval(format!("draw is missing exogenous value {}", e.name)))
        })
        .collect::<Result<_>>()?;

    let mut values: Vec<Option<f64>> = vec![None; spec.endogenous.len()];
    for (i, v) in spec.endogenous.iter().enumerate() {
        let assigned = clause.assignments.get(&v.name);
        let value = match assigned {
            Some(Assignment::Const(q)) => num::ToPrimitive::to_f64(q).unwrap_or(f64::NAN),
            Some(Assignment::NaturalUnder(sub)) => {
                let sub_values = solve_world(spec, sub, draw)?;
                sub_values[i]
            }
            None => match &v.mech {
                Mechanism::Deterministic(e) => e.eval(&values, &exo)?,
                Mechanism::Bernoulli(e) => {
                    let p: f64 = e.eval(&values, &exo)?;
                    let p = p.clamp(0.0, 1.0);
                    let u = draw.values.get(&format!("u:{}", v.name)).copied().ok_or_else(
                        || Error::Eval(format!("draw is missing uniform noise u:{}", v.name)),
                    )?;
                    if u < p {
                        1.0
                    } else {
                        0.0
                    }
                }
            },
        };
        values[i] = Some(value);
    }
    Ok(values.into_iter().map(|v| v.expect("all solved")).collect())
}
