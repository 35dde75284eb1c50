//! The five subcommands. Each returns a serializable report; rendering and
//! writing happen in [`crate::output`].

use std::collections::BTreeMap;

use docuscle::beam::{self, ExperimentKind, FrequencyTable, Quantity, RunOptions};
use docuscle::experiments::{
    self, ConvergenceRow, DimScan, Instance, InstanceGenerator, Model, ScanConfig, ScanReport,
    ViolationSearch,
};
use docuscle::probability::{band_sign, PROB_TOL};
use docuscle::{CMatrix, Error};
use serde::Serialize;

use crate::config::{ConfigError, PropertySpec, RunConfig, StateSpec};
use crate::CliError;

/// Default violation-search budget.
pub const DEFAULT_BUDGET: u64 = 100_000;

/// Machine-readable reason for an undefined quantity.
fn reason(err: &Error) -> Option<&'static str> {
    match err {
        Error::DegenerateRelevance(_) => Some("degenerate-relevance"),
        Error::ConditioningOnNull(_) => Some("conditioning-on-null"),
        Error::PostSelectionOnNull(_) => Some("post-selection-on-null"),
        _ => None,
    }
}

/// Collects values that may be undefined, recording why they are.
#[derive(Default)]
struct Nulls(BTreeMap<String, String>);

impl Nulls {
    fn take(&mut self, name: &str, value: docuscle::Result<f64>) -> Result<Option<f64>, CliError> {
        match value {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            Ok(v) => Err(CliError::Runtime(format!("{name} evaluated to {v}"))),
            Err(e) => match reason(&e) {
                Some(code) => {
                    self.0.insert(name.to_string(), code.to_string());
                    Ok(None)
                }
                None => Err(e.into()),
            },
        }
    }

    fn missing(&mut self, name: &str, because: &[(&str, Option<f64>)]) {
        if let Some((dep, _)) = because.iter().find(|(_, v)| v.is_none()) {
            self.0.insert(name.to_string(), format!("undefined-{dep}"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactReport {
    pub model: Model,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub x: Option<f64>,
    /// `x > r` beyond rounding noise.
    pub boost: Option<bool>,
    /// `p > q` beyond rounding noise.
    pub natural: Option<bool>,
    pub ltp_residual: Option<f64>,
    /// `P(X ∧ R) / r` with `X` tested first; equals `p` classically.
    pub p_reversed: Option<f64>,
    /// `P(X ∧ R̄) / (1 - r)` with `X` tested first.
    pub q_reversed: Option<f64>,
    /// Why each null field is null.
    pub reasons: BTreeMap<String, String>,
}

/// Mass of "X then R" and of `X` alone.
fn term_then_relevance(instance: &Instance) -> docuscle::Result<(f64, f64)> {
    match instance {
        Instance::Classical { state, x, r } => {
            Ok((state.prob(&x.intersection(r)?)?, state.prob(x)?))
        }
        Instance::Quantum { state, x, r } => {
            let after_x = CMatrix::sandwich(x.matrix(), state.matrix())?;
            let joint = CMatrix::trace_of_product(&after_x, r.matrix())?.re;
            Ok((joint, docuscle::quantum::born_prob(state, x)?))
        }
    }
}

fn gt(a: Option<f64>, b: Option<f64>) -> Option<bool> {
    Some(band_sign(a? - b?, PROB_TOL) > 0)
}

pub fn cmd_exact(config: &RunConfig) -> Result<ExactReport, CliError> {
    let instance = config.instance()?;
    let mut nulls = Nulls::default();
    let r = nulls.take("r", instance.exact(Quantity::R))?;
    let p = nulls.take("p", instance.exact(Quantity::P))?;
    let q = nulls.take("q", instance.exact(Quantity::Q))?;
    let x = nulls.take("x", instance.exact(Quantity::X))?;
    let ltp_residual = nulls.take("ltp_residual", instance.ltp_residual())?;
    let (joint, term) = term_then_relevance(&instance)?;
    let rel = r.unwrap_or(0.0);
    let p_reversed = nulls.take(
        "p_reversed",
        if rel > docuscle::probability::NULL_TOL {
            Ok(joint / rel)
        } else {
            Err(Error::DegenerateRelevance(rel))
        },
    )?;
    let q_reversed = nulls.take(
        "q_reversed",
        if rel < 1.0 - docuscle::probability::NULL_TOL {
            Ok(((term - joint) / (1.0 - rel)).clamp(0.0, 1.0))
        } else {
            Err(Error::DegenerateRelevance(rel))
        },
    )?;
    let boost = gt(x, r);
    let natural = gt(p, q);
    nulls.missing("boost", &[("x", x), ("r", r)]);
    nulls.missing("natural", &[("p", p), ("q", q)]);
    Ok(ExactReport {
        model: instance.model(),
        r,
        p,
        q,
        x,
        boost,
        natural,
        ltp_residual,
        p_reversed,
        q_reversed,
        reasons: nulls.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub quantity: Quantity,
    pub value: f64,
    pub std_error: f64,
    pub count: u64,
    pub exact: Option<f64>,
    pub abs_error: Option<f64>,
    pub within_5_sigma: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub model: Model,
    pub experiment: ExperimentKind,
    pub n: u64,
    pub seed: u64,
    pub table: FrequencyTable,
    pub estimates: Vec<EstimateRow>,
}

pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateReport, CliError> {
    let instance = config.instance()?;
    let kind = config
        .experiment
        .ok_or_else(|| ConfigError::field("experiment", "missing; expected one of E1..E5"))?;
    let n = config.n.ok_or_else(|| ConfigError::field("n", "missing"))?;
    if n == 0 {
        return Err(ConfigError::field("n", "must be at least 1").into());
    }
    let seed = config.require_seed()?;
    let options = RunOptions {
        emission_cap: config.emission_cap.unwrap_or(beam::DEFAULT_EMISSION_CAP),
    };
    if options.emission_cap == 0 {
        return Err(ConfigError::field("emission_cap", "must be at least 1").into());
    }
    let pipeline = instance
        .pipeline(kind)
        .map_err(|e| ConfigError::field("experiment", e))?;
    let table = beam::run_with(&pipeline, n, seed, &options)?;
    let est = beam::estimate(&table);
    let mut estimates = Vec::new();
    for (quantity, slot) in [
        (Quantity::R, est.r),
        (Quantity::P, est.p),
        (Quantity::Q, est.q),
        (Quantity::X, est.x),
        (Quantity::PX, est.p_x),
    ] {
        let Some(e) = slot else { continue };
        let mut nulls = Nulls::default();
        let exact = nulls.take(quantity.name(), instance.exact(quantity))?;
        estimates.push(EstimateRow {
            quantity,
            value: e.value,
            std_error: e.std_error,
            count: e.count,
            exact,
            abs_error: exact.map(|v| (e.value - v).abs()),
            within_5_sigma: exact.map(|v| e.within(v, 5.0)),
            reason: nulls.0.into_values().next(),
        });
    }
    Ok(SimulateReport {
        model: instance.model(),
        experiment: kind,
        n,
        seed,
        table,
        estimates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSummary {
    #[serde(flatten)]
    pub report: ScanReport,
    pub trials: u64,
    pub total_disagree: u64,
    pub total_reversed_disagree: u64,
    pub max_abs_ltp_residual: f64,
}

impl ScanSummary {
    pub fn rows(&self) -> &[DimScan] {
        &self.report.dims
    }
}

pub fn scan_config(config: &RunConfig) -> Result<ScanConfig, CliError> {
    let model = config.require_model()?;
    let mut scan = ScanConfig::default_for(model, config.require_seed()?);
    if let Some(dims) = &config.dims {
        scan.dims = dims.clone();
    }
    if let Some(trials) = config.trials {
        scan.trials = trials;
    }
    if let Some(band) = config.band {
        scan.band = band;
    }
    if let Err(e) = scan.validate() {
        let field = if scan.trials == 0 {
            "trials"
        } else if scan.dims.is_empty() || scan.dims.contains(&0) {
            "dims"
        } else {
            "band"
        };
        return Err(ConfigError::field(field, e).into());
    }
    Ok(scan)
}

pub fn cmd_scan(config: &RunConfig) -> Result<ScanSummary, CliError> {
    let scan = scan_config(config)?;
    let report = experiments::scan_equivalence(&scan)?;
    Ok(ScanSummary {
        trials: scan.trials,
        total_disagree: report.total_disagree(),
        total_reversed_disagree: report.total_reversed_disagree(),
        max_abs_ltp_residual: report.max_abs_ltp_residual(),
        report,
    })
}

/// Search result laid out as a config: `model`, `state`, `x` and `r` can be
/// fed back to `exact`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolateReport {
    pub dim: usize,
    pub generator: InstanceGenerator,
    pub seed: u64,
    pub budget: u64,
    pub iterations: u64,
    pub skipped: u64,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<PropertySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<PropertySpec>,
    pub diagnostic: Option<String>,
}

pub fn cmd_violate(config: &RunConfig) -> Result<ViolateReport, CliError> {
    let dim = config
        .dim
        .ok_or_else(|| ConfigError::field("dim", "missing"))?;
    if dim == 0 {
        return Err(ConfigError::field("dim", "must be at least 1").into());
    }
    let budget = config.budget.unwrap_or(DEFAULT_BUDGET);
    if budget == 0 {
        return Err(ConfigError::field("budget", "must be at least 1").into());
    }
    let search = ViolationSearch {
        dim,
        budget,
        seed: config.require_seed()?,
        generator: config.generator.unwrap_or(InstanceGenerator::PureRankOne),
    };
    let found = experiments::find_ltp_violation(&search)?;
    let (model, state, x, r) = match &found.instance {
        Some(Instance::Quantum { state, x, r }) => (
            Some(Model::Quantum),
            Some(StateSpec::Matrix(state.matrix().clone())),
            Some(PropertySpec::Matrix(x.matrix().clone())),
            Some(PropertySpec::Matrix(r.matrix().clone())),
        ),
        Some(Instance::Classical { .. }) => {
            return Err(CliError::Runtime(
                "search returned a classical instance".into(),
            ))
        }
        None => (None, None, None, None),
    };
    Ok(ViolateReport {
        dim,
        generator: search.generator,
        seed: search.seed,
        budget,
        iterations: found.iterations,
        skipped: found.skipped,
        residual: found.residual,
        model,
        state,
        x,
        r,
        diagnostic: found.diagnostic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub model: Model,
    pub experiment: ExperimentKind,
    pub quantity: Quantity,
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
}

pub fn cmd_convergence(config: &RunConfig) -> Result<ConvergenceReport, CliError> {
    let instance = config.instance()?;
    let kind = config
        .experiment
        .ok_or_else(|| ConfigError::field("experiment", "missing; expected one of E1..E5"))?;
    let n_list = match (&config.n_list, config.n) {
        (Some(list), _) => list.clone(),
        (None, Some(n)) => vec![n],
        (None, None) => return Err(ConfigError::field("n_list", "missing").into()),
    };
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(
            ConfigError::field("n_list", "must be a non-empty list of positive counts").into(),
        );
    }
    let seed = config.require_seed()?;
    // the measured quantity must be defined before any run is attempted
    instance.exact(kind.quantity()).map_err(|e| {
        ConfigError::field(
            "experiment",
            format!("{} is undefined: {e}", kind.quantity().name()),
        )
    })?;
    let rows = experiments::convergence_study(kind, &instance, &n_list, seed)?;
    Ok(ConvergenceReport {
        model: instance.model(),
        experiment: kind,
        quantity: kind.quantity(),
        seed,
        rows,
    })
}
