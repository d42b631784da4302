//! Structural causal models: specification, text format, counterfactual
//! evaluation, observational sampling, and ground-truth oracles.

pub mod builtin;
pub mod engine;
pub mod expr;
pub mod oracle;
pub mod parse;
pub mod sample;
pub mod spec;

pub use builtin::{builtin_names, builtin_scm, builtin_scm_with_shape};
pub use oracle::{
    effect_grouped, oracle_contrast, oracle_drr_irr, oracle_effect, oracle_z_de_ie, Contrast,
    ContrastKind, Event, GroupedContrast, OracleMode, OracleValue,
};
pub use parse::{parse_scm, parse_scm_with_shape};
pub use sample::{sample_observational, SampleResult};
pub use spec::{
    potential_response, Assignment, EndoVar, ExoDist, ExoVar, ExogenousDraw, InterventionClause,
    Mechanism, Role, ScmSpec,
};
