//! `variata` — causal variation analysis from the command line.
//!
//! Subcommands: `simulate` (sample an SCM), `check` (structural interaction
//! verdicts), `decompose` (TV decomposition with parsimony), `test` (a
//! single interaction test), `experiment` (the synthetic study grid).
//! Failures print a machine-readable error JSON to stderr and exit nonzero.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use variata_core::effects::EffectKind;
use variata_core::error::{Error, Result};
use variata_core::estimator::EstimatorKind;
use variata_core::experiments::{ecdf_points, run_grid, summarize, ExperimentGrid};
use variata_core::inference::{
    run_parsimony, z_specific_de_ie, Correction, TestResult, MIN_STRATUM,
};
use variata_core::io::{
    ingest_csv, write_ecdf_csv, write_json, write_pvalue_csv, write_sample_csv, CheckReport,
    ErrorReport, RoleConfig, TestReport,
};
use variata_core::learner::{LearnerConfig, LearnerKind};
use variata_core::scm::{
    builtin_scm_with_shape, parse_scm_with_shape, sample_observational, ScmSpec,
};
use variata_core::shape::{MechanismShape, Scale};
use variata_core::structural::check_all;
use variata_core::FoldPlan;

#[derive(Parser)]
#[command(
    name = "variata",
    version,
    about = "Decompose treatment-outcome associations into direct, indirect, spurious, \
             and interaction components, and test which interactions are zero"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample observational data from a built-in or user SCM into a CSV.
    Simulate {
        /// Built-in model name (m1..m5, c1..c12, ...) or path to a .scm file.
        #[arg(long)]
        scm: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also write a matching roles file here.
        #[arg(long)]
        roles_out: Option<PathBuf>,
    },
    /// Evaluate the five structural interaction criteria of a model.
    Check {
        #[arg(long)]
        scm: String,
        /// mean, log-risk, or log-odds.
        #[arg(long, default_value = "mean")]
        scale: String,
        /// Output JSON path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the TV decomposition and select a parsimonious form.
    Decompose {
        #[command(flatten)]
        opts: EstimationOpts,
    },
    /// Run a single interaction test.
    Test {
        #[command(flatten)]
        opts: EstimationOpts,
        /// One of te-se, de-ie, de-se, ie-se, de-ie-se.
        #[arg(long)]
        effect: String,
        /// Test the z-specific DE-IE within this stratum (comma-separated
        /// values, one per Z column).
        #[arg(long)]
        z_value: Option<String>,
    },
    /// Run the synthetic experiment grid.
    Experiment {
        /// "desk" (20 reps, n in 500/2000/8000) or "paper" (100 reps, six
        /// sizes; slow).
        #[arg(long, default_value = "desk")]
        grid: String,
        /// Override the model list (comma-separated builtin names).
        #[arg(long)]
        scms: Option<String>,
        /// Override the sizes (comma-separated, ascending).
        #[arg(long)]
        sizes: Option<String>,
        /// Override the repetition count.
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        learner: Option<String>,
        #[arg(long)]
        estimator: Option<String>,
        /// Output prefix: writes <out>.csv, <out>.summary.json, <out>.ecdf.csv.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct EstimationOpts {
    /// Dataset CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// TOML role mapping (columns -> x/y/z/w, categorical declarations).
    #[arg(long)]
    roles: PathBuf,
    /// mean, log-risk, or log-odds.
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Cross-fitting folds (K >= 2).
    #[arg(long)]
    folds: Option<usize>,
    /// Propensity clipping bound.
    #[arg(long = "clip-e")]
    clip_e: Option<f64>,
    /// Outcome-probability clipping for log scales.
    #[arg(long = "clip-mu")]
    clip_mu: Option<f64>,
    /// table or stumps.
    #[arg(long)]
    learner: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// plugin or onestep.
    #[arg(long)]
    estimator: Option<String>,
    /// Optional TOML config with a [settings] section; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Effective run settings after merging flags, config file, and defaults.
struct RunConfig {
    scale: Scale,
    alpha: f64,
    folds: usize,
    clip_e: f64,
    clip_mu: f64,
    learner: LearnerKind,
    estimator: EstimatorKind,
    seed: u64,
}

#[derive(Default, serde::Deserialize)]
struct SettingsFile {
    #[serde(default)]
    settings: Settings,
}

#[derive(Default, serde::Deserialize)]
struct Settings {
    scale: Option<String>,
    alpha: Option<f64>,
    folds: Option<usize>,
    clip_e: Option<f64>,
    clip_mu: Option<f64>,
    learner: Option<String>,
    estimator: Option<String>,
    seed: Option<u64>,
}

impl RunConfig {
    fn resolve(opts: &EstimationOpts) -> Result<RunConfig> {
        let file: SettingsFile = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                toml::from_str(&text)
                    .map_err(|e| Error::Data(format!("bad config file: {e}")))?
            }
            None => SettingsFile::default(),
        };
        let s = file.settings;
        let scale_str =
            opts.scale.clone().or(s.scale).unwrap_or_else(|| "mean".to_string());
        let learner_str =
            opts.learner.clone().or(s.learner).unwrap_or_else(|| "table".to_string());
        let estimator_str =
            opts.estimator.clone().or(s.estimator).unwrap_or_else(|| "onestep".to_string());
        let cfg = RunConfig {
            scale: Scale::from_str(&scale_str)?,
            alpha: opts.alpha.or(s.alpha).unwrap_or(0.05),
            folds: opts.folds.or(s.folds).unwrap_or(10),
            clip_e: opts.clip_e.or(s.clip_e).unwrap_or(0.01),
            clip_mu: opts.clip_mu.or(s.clip_mu).unwrap_or(0.005),
            learner: LearnerKind::from_str(&learner_str)?,
            estimator: EstimatorKind::from_str(&estimator_str)?,
            seed: opts.seed.or(s.seed).unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Data(format!("alpha {} outside (0,1)", self.alpha)));
        }
        if self.folds < 2 {
            return Err(Error::Data("folds must be at least 2".into()));
        }
        if !(self.clip_e > 0.0 && self.clip_e < 0.5) {
            return Err(Error::Data(format!("clip-e {} outside (0,0.5)", self.clip_e)));
        }
        if !(self.clip_mu > 0.0 && self.clip_mu < 0.5) {
            return Err(Error::Data(format!("clip-mu {} outside (0,0.5)", self.clip_mu)));
        }
        Ok(())
    }

    fn learner_config(&self) -> LearnerConfig {
        let mut cfg = match self.learner {
            LearnerKind::Table => LearnerConfig::table(),
            LearnerKind::Stumps => LearnerConfig::stumps(),
        };
        cfg.clip_e = self.clip_e;
        cfg.clip_mu = self.clip_mu;
        cfg
    }
}

fn load_scm(arg: &str) -> Result<(ScmSpec, MechanismShape)> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        parse_scm_with_shape(&text)
    } else {
        builtin_scm_with_shape(arg)
    }
}

fn emit<T: serde::Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| Error::Data(format!("bad {what} `{p}`"))))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate { scm, n, seed, out, roles_out } => {
            let (spec, _) = load_scm(&scm)?;
            let sample = sample_observational(&spec, n, seed)?;
            write_sample_csv(&out, &sample)?;
            if let Some(roles_path) = roles_out {
                RoleConfig::from_sample(&sample).to_path(&roles_path)?;
            }
            eprintln!("wrote {n} rows from `{}` to {}", spec.name, out.display());
            Ok(())
        }
        Cmd::Check { scm, scale, out } => {
            let (spec, shape) = load_scm(&scm)?;
            let scale = Scale::from_str(&scale)?;
            let verdicts = check_all(&shape, scale)?;
            let report =
                CheckReport { schema_version: 1, scm: spec.name.clone(), scale, verdicts };
            emit(&out, &report)
        }
        Cmd::Decompose { opts } => {
            let cfg = RunConfig::resolve(&opts)?;
            let roles = RoleConfig::from_path(&opts.roles)?;
            let (data, _codebook) = ingest_csv(&opts.data, &roles)?;
            let plan = FoldPlan::stratified(&data.x, cfg.folds, cfg.seed)?;
            let fits = variata_core::nuisance::fit_nuisances(
                &data,
                &plan,
                &cfg.learner_config(),
                cfg.scale,
            )?;
            let report = run_parsimony(&fits, &data, cfg.alpha, cfg.estimator, true)?;
            emit(&opts.out, &report)
        }
        Cmd::Test { opts, effect, z_value } => {
            let cfg = RunConfig::resolve(&opts)?;
            let roles = RoleConfig::from_path(&opts.roles)?;
            let (data, _codebook) = ingest_csv(&opts.data, &roles)?;
            let result: TestResult = match z_value {
                Some(zs) => {
                    if effect != "de-ie" {
                        return Err(Error::Unsupported(
                            "z-specific testing is defined for the de-ie interaction".into(),
                        ));
                    }
                    let z: Vec<f64> = parse_list(&zs, "z value")?;
                    let (_, t) = z_specific_de_ie(
                        &data,
                        &z,
                        cfg.alpha,
                        &cfg.learner_config(),
                        cfg.folds,
                        cfg.seed,
                        cfg.estimator,
                        cfg.scale,
                        MIN_STRATUM,
                    )?;
                    t
                }
                None => {
                    let kind = EffectKind::parse(&effect).ok_or_else(|| {
                        Error::Unsupported(format!(
                            "unknown effect `{effect}` (expected te-se, de-ie, de-se, ie-se, \
                             or de-ie-se)"
                        ))
                    })?;
                    let plan = FoldPlan::stratified(&data.x, cfg.folds, cfg.seed)?;
                    let fits = variata_core::nuisance::fit_nuisances(
                        &data,
                        &plan,
                        &cfg.learner_config(),
                        cfg.scale,
                    )?;
                    let tests = variata_core::inference::granular_tests(
                        &fits,
                        &data,
                        cfg.alpha,
                        Correction::None,
                        cfg.estimator,
                    )?;
                    let name = kind.name(cfg.scale);
                    tests
                        .into_iter()
                        .find(|t| t.hypothesis == name)
                        .ok_or_else(|| Error::Inference(format!("no test named {name}")))?
                }
            };
            let report = TestReport {
                schema_version: 1,
                result,
                config: variata_core::inference::ConfigEcho {
                    alpha: cfg.alpha,
                    folds: cfg.folds,
                    clip_e: cfg.clip_e,
                    clip_mu: cfg.clip_mu,
                    learner: cfg.learner,
                    seed: cfg.seed,
                    scale: cfg.scale,
                    estimator: cfg.estimator,
                },
            };
            emit(&opts.out, &report)
        }
        Cmd::Experiment {
            grid,
            scms,
            sizes,
            reps,
            alpha,
            seed,
            folds,
            learner,
            estimator,
            out,
        } => {
            let seed_base = seed.unwrap_or(1);
            let mut g = match grid.as_str() {
                "desk" => ExperimentGrid::desk(seed_base),
                "paper" => {
                    eprintln!(
                        "warning: the paper grid runs 100 repetitions over six sizes; \
                         expect a long runtime"
                    );
                    ExperimentGrid::paper(seed_base)
                }
                other => return Err(Error::Data(format!("unknown grid `{other}`"))),
            };
            if let Some(s) = scms {
                g.scms = s.split(',').map(|p| p.trim().to_string()).collect();
            }
            if let Some(s) = sizes {
                g.sizes = parse_list(&s, "size")?;
            }
            if let Some(r) = reps {
                g.repetitions = r;
            }
            if let Some(a) = alpha {
                g.alpha = a;
            }
            if let Some(k) = folds {
                g.folds = k;
            }
            if let Some(l) = learner {
                g.learner = match LearnerKind::from_str(&l)? {
                    LearnerKind::Table => LearnerConfig::table(),
                    LearnerKind::Stumps => LearnerConfig::stumps(),
                };
            }
            if let Some(e) = estimator {
                g.estimator = EstimatorKind::from_str(&e)?;
            }
            let table = run_grid(&g)?;
            let summary = summarize(&table, g.alpha)?;
            let prefix = out.to_string_lossy().to_string();
            write_pvalue_csv(Path::new(&format!("{prefix}.csv")), &table)?;
            write_json(
                Path::new(&format!("{prefix}.summary.json")),
                &json!({
                    "schema_version": 1,
                    "grid": &g,
                    "summary": &summary,
                }),
            )?;
            write_ecdf_csv(Path::new(&format!("{prefix}.ecdf.csv")), &ecdf_points(&table))?;
            eprintln!(
                "wrote {}.csv, {}.summary.json, {}.ecdf.csv",
                prefix, prefix, prefix
            );
            Ok(())
        }
    }
}

fn main() {
    if let Ok(threads) = std::env::var("VARIATA_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let report = ErrorReport { schema_version: 1, error: e.to_string() };
        eprintln!("{}", serde_json::to_string(&report).unwrap_or_else(|_| e.to_string()));
        std::process::exit(1);
    }
}
