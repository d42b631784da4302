//! Causal variation analysis toolkit.
//!
//! Decomposes the total-variation association between a binary treatment `X`
//! and an outcome `Y` into direct, indirect, spurious, and interaction
//! components, tests which interaction terms are statistically zero, and
//! verifies estimates against exact oracles on simulated structural causal
//! models.
//!
//! The crate is organized around the analysis pipeline:
//!
//! - [`scm`] — structural causal models: a declarative text format, exact
//!   (rational-arithmetic) and Monte-Carlo oracles for arbitrary nested
//!   counterfactual contrasts, and the built-in model fixtures.
//! - [`shape`] / [`structural`] — symbolic mechanism shapes and the five
//!   structural interaction criteria (TE-SE, DE-IE, DE-SE, IE-SE, DE-IE-SE)
//!   on mean, log-risk, and log-odds scales.
//! - [`data`], [`learner`], [`nuisance`] — datasets, the two built-in
//!   learners (frequency table, boosted depth-2 stumps), and K-fold
//!   cross-fitted nuisance estimation.
//! - [`estimator`] — plug-in and influence-function one-step estimators of
//!   the potential-outcome functional `PO(x_y, x_w, x_z)` and the signed
//!   effect algebra built on it.
//! - [`inference`] — Wald interaction tests, the parsimony selection
//!   procedure, z-specific tests, and Benjamini-Hochberg correction.
//! - [`experiments`] — the synthetic study harness: p-value tables, ECDFs,
//!   KS distances, Type I/II summaries.
//! - [`io`] — CSV ingestion, role configuration, and JSON reports.

pub mod data;
pub mod effects;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod inference;
pub mod io;
pub mod learner;
pub mod nuisance;
pub mod numeric;
pub mod scm;
pub mod shape;
pub mod stats;
pub mod structural;

pub use data::{Dataset, FoldPlan};
pub use effects::{EffectKind, PoSignature};
pub use error::{Error, Result};
pub use estimator::{EffectEstimate, EffectSpec, EstimatorKind, PoEstimate, PoQuery};
pub use inference::{DecompositionReport, SelectedForm, TestResult};
pub use learner::LearnerConfig;
pub use nuisance::NuisanceFits;
pub use scm::{builtin_scm, Contrast, InterventionClause, OracleMode, OracleValue, ScmSpec};
pub use shape::{MechanismShape, Scale};
pub use structural::{Criterion, StructuralVerdict, Verdict};
