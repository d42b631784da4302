//! Symbolic mechanism shapes.
//!
//! A [`MechanismShape`] records, per endogenous variable, which variables its
//! mechanism reads and how they combine: an additive list of terms, each
//! coupling a set of arguments, with per-variable non-linearity flags. The
//! structural analyzer consumes this declared structure as-is — it does not
//! attempt symbolic algebra to discover hidden additivity, so a shape that
//! mis-declares its terms yields verdicts about the declared model, not the
//! true one.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scm::spec::Role;

/// Outcome scale on which effects are defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Mean,
    LogRisk,
    LogOdds,
}

impl Scale {
    pub fn label(self) -> &'static str {
        match self {
            Scale::Mean => "mean",
            Scale::LogRisk => "log-risk",
            Scale::LogOdds => "log-odds",
        }
    }

    /// The link under which a binary outcome's `p_y` must be declared for
    /// the structural criteria on this scale.
    pub fn link(self) -> Link {
        match self {
            Scale::Mean => Link::Identity,
            Scale::LogRisk => Link::Log,
            Scale::LogOdds => Link::Logit,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Scale::Mean),
            "log-risk" => Ok(Scale::LogRisk),
            "log-odds" => Ok(Scale::LogOdds),
            other => Err(Error::Unsupported(format!(
                "unknown scale `{other}` (expected mean, log-risk, or log-odds)"
            ))),
        }
    }
}

/// Scale on which a term list describes the outcome mechanism: for a binary
/// outcome the additive structure may be declared for `p_y`, `log p_y`, or
/// `logit p_y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Log,
    Logit,
}

/// One additive term: the set of endogenous arguments it couples
/// multiplicatively, and which of them enter non-linearly.
///
/// `(X W)` is a term of the form `W · g(X, U)`; `(X W!)` couples X and W
/// with W entering non-linearly (e.g. `X·W²`). Exogenous arguments are
/// implicit — every term may read its variable's own noise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeTerm {
    pub args: BTreeSet<String>,
    pub nonlinear: BTreeSet<String>,
}

impl ShapeTerm {
    pub fn new<I, J>(args: I, nonlinear: J) -> Self
    where
        I: IntoIterator<Item = String>,
        J: IntoIterator<Item = String>,
    {
        ShapeTerm {
            args: args.into_iter().collect(),
            nonlinear: nonlinear.into_iter().collect(),
        }
    }

    /// True if this term couples every variable in `vars`.
    pub fn couples_all(&self, vars: &[&str]) -> bool {
        vars.iter().all(|v| self.args.contains(*v))
    }

    /// True if `v` appears in this term and enters it linearly.
    pub fn linear_in(&self, v: &str) -> bool {
        self.args.contains(v) && !self.nonlinear.contains(v)
    }
}

/// Declared shape of one variable's mechanism.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeVar {
    pub name: String,
    pub role: Role,
    /// Endogenous arguments of the mechanism.
    pub args: BTreeSet<String>,
    /// Additive decomposition of the mechanism into coupled terms.
    pub terms: Vec<ShapeTerm>,
    /// For binary outcomes: the scale on which `terms` describes `p_y`.
    pub link: Link,
}

/// Symbolic description of a whole model's mechanisms, in topological order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MechanismShape {
    pub name: String,
    pub vars: Vec<ShapeVar>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl MechanismShape {
    pub fn new(name: String, vars: Vec<ShapeVar>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, v) in vars.iter().enumerate() {
            // The union of term arguments must equal the declared arguments.
            let mut union: BTreeSet<String> = BTreeSet::new();
            for t in &v.terms {
                for a in &t.args {
                    union.insert(a.clone());
                }
            }
            if union != v.args {
                return Err(Error::Spec(format!(
                    "terms for {} cover arguments {union:?} but the mechanism reads {:?}",
                    v.name, v.args
                )));
            }
            for t in &v.terms {
                if !t.nonlinear.is_subset(&t.args) {
                    return Err(Error::Spec(format!(
                        "non-linear markers in a term for {} name variables outside the term",
                        v.name
                    )));
                }
            }
            index.insert(v.name.clone(), i);
        }
        let n_x = vars.iter().filter(|v| v.role == Role::X).count();
        let n_y = vars.iter().filter(|v| v.role == Role::Y).count();
        if n_x != 1 || n_y != 1 {
            return Err(Error::Spec("shape needs exactly one X and one Y".into()));
        }
        Ok(MechanismShape { name, vars, index })
    }

    pub fn var(&self, name: &str) -> Option<&ShapeVar> {
        self.index.get(name).map(|&i| &self.vars[i])
    }

    pub fn x(&self) -> &ShapeVar {
        self.vars.iter().find(|v| v.role == Role::X).expect("validated")
    }

    pub fn y(&self) -> &ShapeVar {
        self.vars.iter().find(|v| v.role == Role::Y).expect("validated")
    }

    pub fn with_role(&self, role: Role) -> Vec<&ShapeVar> {
        self.vars.iter().filter(|v| v.role == role).collect()
    }

    /// Names of variables with the given role.
    pub fn names_with_role(&self, role: Role) -> Vec<&str> {
        self.vars.iter().filter(|v| v.role == role).map(|v| v.name.as_str()).collect()
    }

    /// True if `upstream` has a directed path to `var` through declared
    /// argument sets.
    pub fn depends_on(&self, var: &str, upstream: &str) -> bool {
        let Some(v) = self.var(var) else { return false };
        if v.args.contains(upstream) {
            return true;
        }
        v.args.iter().any(|a| self.depends_on(a, upstream))
    }

    /// Role of a named variable.
    pub fn role_of(&self, name: &str) -> Option<Role> {
        self.var(name).map(|v| v.role)
    }
}
