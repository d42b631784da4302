//! Counterfactual evaluation engine.
//!
//! A *world* is one submodel (the natural regime or an intervention clause).
//! All worlds of a query are solved in lockstep over a shared exogenous
//! point, which is what makes unit-level differences like
//! `Y_{x1}(u) - Y_{x0}(u)` meaningful: sampling fresh noise per clause would
//! be a correctness bug, not an approximation.
//!
//! Exact mode enumerates the product exogenous space. Stochastic Bernoulli
//! mechanisms are enumerated by partitioning their implicit uniform noise at
//! the per-world threshold values, so the joint coupling across worlds is
//! preserved exactly. Monte-Carlo mode draws the shared noise instead, with
//! per-chunk counter-based RNG streams so results do not depend on the
//! number of threads.

use num::rational::BigRational;
use num::ToPrimitive;
use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::Scalar;
use crate::scm::spec::{
    Assignment, ExoDist, InterventionClause, Mechanism, Role, ScmSpec,
};

/// Tolerance before a clamped Bernoulli parameter earns a warning.
const CLAMP_TOL: f64 = 1e-9;

/// Draws per RNG chunk; fixed so chunk boundaries are thread-independent.
pub(crate) const MC_CHUNK: usize = 8192;

/// How one endogenous variable behaves in one world.
#[derive(Debug, Clone)]
enum Action {
    /// Evaluate the variable's own mechanism.
    Mech,
    /// Intervened to a constant.
    Set(BigRational),
    /// Take the value this variable obtained in another (earlier) world.
    Copy(usize),
}

/// A resolved set of worlds sharing one exogenous point.
///
/// World 0 is always the natural regime.
#[derive(Debug, Clone)]
pub struct Worlds {
    /// `actions[w][i]`: behavior of endogenous variable `i` in world `w`.
    actions: Vec<Vec<Action>>,
    clauses: Vec<InterventionClause>,
}

impl Worlds {
    /// Builds the world set for the given clauses (deduplicated). Nested
    /// `NaturalUnder` assignments get auxiliary worlds ordered before their
    /// dependents.
    pub fn build(spec: &ScmSpec, clauses: &[InterventionClause]) -> Result<Worlds> {
        let mut w = Worlds { actions: Vec::new(), clauses: Vec::new() };
        w.intern(spec, &InterventionClause::natural())?;
        for c in clauses {
            c.validate(spec)?;
            w.intern(spec, c)?;
        }
        Ok(w)
    }

    /// Index of the world implementing `clause`, interning it if new.
    fn intern(&mut self, spec: &ScmSpec, clause: &InterventionClause) -> Result<usize> {
        if let Some(i) = self.clauses.iter().position(|c| c == clause) {
            return Ok(i);
        }
        // Resolve nested sub-clauses first so their worlds come earlier.
        let mut resolved: Vec<(usize, Action)> = Vec::new();
        for (name, a) in &clause.assignments {
            let idx = spec
                .index_of(name)
                .ok_or_else(|| Error::Spec(format!("clause references unknown variable {name}")))?;
            let action = match a {
                Assignment::Const(q) => Action::Set(q.clone()),
                Assignment::NaturalUnder(sub) => Action::Copy(self.intern(spec, sub)?),
            };
            resolved.push((idx, action));
        }
        let mut actions = vec![Action::Mech; spec.endogenous.len()];
        for (idx, action) in resolved {
            actions[idx] = action;
        }
        self.actions.push(actions);
        self.clauses.push(clause.clone());
        Ok(self.clauses.len() - 1)
    }

    /// Index of an already-interned clause.
    pub fn index_of(&self, clause: &InterventionClause) -> usize {
        self.clauses.iter().position(|c| c == clause).expect("clause was interned at build time")
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }
}

/// Values of all endogenous variables in all worlds at one exogenous point.
/// Indexed `[world][variable]`.
pub type WorldValues<S> = Vec<Vec<S>>;

/// Shared evaluation options.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// When true, the outcome variable exposes its per-unit risk
    /// `P(Y = 1 | parents)` instead of a drawn value. Requires a Bernoulli
    /// outcome mechanism; used for log-risk and log-odds scales.
    pub y_risk: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { y_risk: false }
    }
}

/// Exact enumeration of the product exogenous space.
///
/// Calls `visit(values, mass)` once per atom of the joint distribution.
/// Requires finite-support exogenous distributions.
pub fn enumerate_exact<S, F>(
    spec: &ScmSpec,
    worlds: &Worlds,
    opts: EvalOptions,
    warnings: &mut Vec<String>,
    visit: &mut F,
) -> Result<()>
where
    S: Scalar,
    F: FnMut(&WorldValues<S>, &S) -> Result<()>,
{
    if !spec.finite_support() {
        return Err(Error::Oracle(
            "exact mode requires all exogenous distributions to have finite support".into(),
        ));
    }
    let atoms: Vec<Vec<(S, S)>> = spec
        .exogenous
        .iter()
        .map(|e| {
            e.dist
                .atoms()
                .expect("finite support checked")
                .into_iter()
                .map(|(v, p)| (S::from_rational(&v), S::from_rational(&p)))
                .collect()
        })
        .collect();

    let mut exo: Vec<S> = vec![S::zero(); spec.exogenous.len()];
    let mut state = ExactState::<S, F> { _marker: std::marker::PhantomData, spec, worlds, opts, warnings, visit };
    state.recurse_exo(0, &atoms, &mut exo, S::one())
}

struct ExactState<'a, S: Scalar, F> {
    _marker: std::marker::PhantomData<S>,
    spec: &'a ScmSpec,
    worlds: &'a Worlds,
    opts: EvalOptions,
    warnings: &'a mut Vec<String>,
    visit: &'a mut F,
}

impl<S, F> ExactState<'_, S, F>
where
    S: Scalar,
    F: FnMut(&WorldValues<S>, &S) -> Result<()>,
{
    fn recurse_exo(
        &mut self,
        i: usize,
        atoms: &[Vec<(S, S)>],
        exo: &mut Vec<S>,
        weight: S,
    ) -> Result<()> {
        if i == atoms.len() {
            let n_worlds = self.worlds.len();
            let mut values: Vec<Vec<Option<S>>> =
                vec![vec![None; self.spec.endogenous.len()]; n_worlds];
            return self.recurse_endo(0, exo, &mut values, weight);
        }
        for (v, p) in &atoms[i] {
            if p.is_zero() {
                continue;
            }
            exo[i] = v.clone();
            self.recurse_exo(i + 1, atoms, exo, weight.mul(p))?;
        }
        Ok(())
    }

    fn recurse_endo(
        &mut self,
        var: usize,
        exo: &[S],
        values: &mut Vec<Vec<Option<S>>>,
        weight: S,
    ) -> Result<()> {
        if var == self.spec.endogenous.len() {
            let solved: WorldValues<S> = values
                .iter()
                .map(|w| w.iter().map(|v| v.clone().expect("solved")).collect())
                .collect();
            return (self.visit)(&solved, &weight);
        }
        let v = self.spec.var(var);
        let risk_node = self.opts.y_risk && v.role == Role::Y;
        let stochastic = matches!(v.mech, Mechanism::Bernoulli(_)) && !risk_node;

        if !stochastic {
            for w in 0..self.worlds.len() {
                let value = match &self.worlds.actions[w][var] {
                    Action::Set(q) => S::from_rational(q),
                    Action::Copy(src) => values[*src][var].clone().expect("source world earlier"),
                    Action::Mech => match &v.mech {
                        Mechanism::Deterministic(e) => e.eval(&values[w], exo)?,
                        Mechanism::Bernoulli(e) => {
                            // risk node: expose the clamped parameter itself
                            let p = e.eval(&values[w], exo)?;
                            clamp_unit(p, &v.name, self.warnings)
                        }
                    },
                };
                values[w][var] = Some(value);
            }
            return self.recurse_endo(var + 1, exo, values, weight);
        }

        // Stochastic binary node: partition the shared uniform noise at the
        // per-world thresholds.
        let mech = match &v.mech {
            Mechanism::Bernoulli(e) => e,
            _ => unreachable!(),
        };
        let mut thresholds: Vec<Option<S>> = vec![None; self.worlds.len()];
        let mut boundaries: Vec<S> = vec![S::zero(), S::one()];
        for w in 0..self.worlds.len() {
            if let Action::Mech = self.worlds.actions[w][var] {
                let p = mech.eval(&values[w], exo)?;
                let p = clamp_unit(p, &v.name, self.warnings);
                if !boundaries.iter().any(|b| *b == p) {
                    boundaries.push(p.clone());
                }
                thresholds[w] = Some(p);
            }
        }
        boundaries.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));

        for pair in boundaries.windows(2) {
            let (lo, hi) = (&pair[0], &pair[1]);
            let mass = hi.sub(lo);
            if mass.is_zero() {
                continue;
            }
            for w in 0..self.worlds.len() {
                let value = match &self.worlds.actions[w][var] {
                    Action::Set(q) => S::from_rational(q),
                    Action::Copy(src) => values[*src][var].clone().expect("source world earlier"),
                    Action::Mech => {
                        // u in [lo, hi): the draw is 1 iff u < threshold,
                        // i.e. iff threshold >= hi (thresholds are boundaries).
                        let t = thresholds[w].as_ref().expect("mech world has threshold");
                        if *t >= *hi {
                            S::one()
                        } else {
                            S::zero()
                        }
                    }
                };
                values[w][var] = Some(value);
            }
            self.recurse_endo(var + 1, exo, values, weight.mul(&mass))?;
        }
        Ok(())
    }
}

fn clamp_unit<S: Scalar>(p: S, name: &str, warnings: &mut Vec<String>) -> S {
    let pf = p.to_f64();
    if pf < 0.0 {
        if pf < -CLAMP_TOL {
            warnings.push(format!("Bernoulli parameter for {name} clamped from {pf} to 0"));
        }
        return S::zero();
    }
    if pf > 1.0 {
        if pf > 1.0 + CLAMP_TOL {
            warnings.push(format!("Bernoulli parameter for {name} clamped from {pf} to 1"));
        }
        return S::one();
    }
    p
}

/// Monte-Carlo evaluation with common random numbers across worlds.
///
/// Accumulator `A` is filled per draw within fixed-size chunks; chunk
/// accumulators are merged in chunk order, so the result is bit-identical
/// regardless of thread count.
pub fn mc_accumulate<A, FoldF, MergeF>(
    spec: &ScmSpec,
    worlds: &Worlds,
    opts: EvalOptions,
    n: usize,
    seed: u64,
    init: A,
    fold: FoldF,
    merge: MergeF,
) -> Result<A>
where
    A: Clone + Send + Sync,
    FoldF: Fn(&mut A, &WorldValues<f64>) -> Result<()> + Sync,
    MergeF: Fn(A, A) -> A,
{
    if n == 0 {
        return Err(Error::Oracle("Monte-Carlo mode requires n >= 1".into()));
    }
    let n_chunks = n.div_ceil(MC_CHUNK);
    let results: Vec<Result<A>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * MC_CHUNK;
            let hi = usize::min(lo + MC_CHUNK, n);
            let mut rng = chunk_rng(seed, chunk as u64);
            let mut acc = init.clone();
            let mut values: Vec<Vec<Option<f64>>> =
                vec![vec![None; spec.endogenous.len()]; worlds.len()];
            let mut exo = vec![0.0_f64; spec.exogenous.len()];
            let mut warnings = Vec::new();
            for _ in lo..hi {
                draw_exo(spec, &mut rng, &mut exo);
                solve_draw(spec, worlds, opts, &exo, &mut rng, &mut values, &mut warnings)?;
                let solved: WorldValues<f64> = values
                    .iter()
                    .map(|w| w.iter().map(|v| v.expect("solved")).collect())
                    .collect();
                fold(&mut acc, &solved)?;
            }
            Ok(acc)
        })
        .collect();
    let mut merged: Option<A> = None;
    for r in results {
        let a = r?;
        merged = Some(match merged {
            None => a,
            Some(m) => merge(m, a),
        });
    }
    Ok(merged.expect("at least one chunk"))
}

pub(crate) fn chunk_rng(seed: u64, chunk: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(chunk.wrapping_add(1));
    rng
}

fn draw_exo(spec: &ScmSpec, rng: &mut ChaCha12Rng, out: &mut [f64]) {
    for (i, e) in spec.exogenous.iter().enumerate() {
        out[i] = match &e.dist {
            ExoDist::Table(rows) => {
                let u: f64 = rng.gen();
                let mut cum = 0.0;
                let mut value = rows.last().map(|(v, _)| ToPrimitive::to_f64(v).unwrap()).unwrap_or(0.0);
                for (v, p) in rows {
                    cum += ToPrimitive::to_f64(p).unwrap();
                    if u < cum {
                        value = ToPrimitive::to_f64(v).unwrap();
                        break;
                    }
                }
                value
            }
            ExoDist::Bernoulli(p) => {
                if rng.gen::<f64>() < ToPrimitive::to_f64(p).unwrap() {
                    1.0
                } else {
                    0.0
                }
            }
            ExoDist::Normal { mean, sd } => {
                rand_distr::Normal::new(*mean, *sd).expect("validated").sample(rng)
            }
            ExoDist::Uniform { lo, hi } => rng.gen_range(*lo..*hi),
            ExoDist::Exponential { rate } => {
                rand_distr::Exp::new(*rate).expect("validated").sample(rng)
            }
        };
    }
}

/// Solves all worlds for one draw, sharing the Bernoulli uniforms.
fn solve_draw(
    spec: &ScmSpec,
    worlds: &Worlds,
    opts: EvalOptions,
    exo: &[f64],
    rng: &mut ChaCha12Rng,
    values: &mut Vec<Vec<Option<f64>>>,
    warnings: &mut Vec<String>,
) -> Result<()> {
    for w in values.iter_mut() {
        for v in w.iter_mut() {
            *v = None;
        }
    }
    for (var, v) in spec.endogenous.iter().enumerate() {
        let risk_node = opts.y_risk && v.role == Role::Y;
        let stochastic = matches!(v.mech, Mechanism::Bernoulli(_)) && !risk_node;
        // One shared draw per stochastic node, consumed even if every world
        // intervenes on it, to keep the stream layout fixed.
        let u: f64 = if stochastic { rng.gen() } else { 0.0 };
        for w in 0..worlds.len() {
            let value = match &worlds.actions[w][var] {
                Action::Set(q) => ToPrimitive::to_f64(q).unwrap(),
                Action::Copy(src) => values[*src][var].expect("source world earlier"),
                Action::Mech => match &v.mech {
                    Mechanism::Deterministic(e) => e.eval(&values[w], exo)?,
                    Mechanism::Bernoulli(e) => {
                        let p: f64 = e.eval(&values[w], exo)?;
                        let p = clamp_unit(p, &v.name, warnings);
                        if risk_node {
                            p
                        } else if u < p {
                            1.0
                        } else {
                            0.0
                        }
                    }
                },
            };
            values[w][var] = Some(value);
        }
    }
    Ok(())
}
