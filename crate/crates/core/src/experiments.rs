//! Batch studies over random instances.
//!
//! Each trial draws from its own generator `derive_rng(seed, domain, ordinal)`
//! and results merge by summation and max, so reports do not depend on how
//! rayon schedules the trials.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{self, standard_experiment, Emitter, ExperimentKind, Property, Quantity};
use crate::error::{Error, Result};
use crate::probability::{self, band_sign, ClassicalState, Event};
use crate::quantum::{self, DensityMatrix, Projector};
use crate::rng::{derive_rng, SimRng};

const SCAN_DOMAIN: u64 = 0x7363_616e_0000_0000;
const VIOLATION_DOMAIN: u64 = 0x6c74_7000_0000_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Classical,
    Quantum,
}

/// Exact classical or quantum instance: a state plus the `X` and `R` tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Instance {
    Classical {
        state: ClassicalState,
        x: Event,
        r: Event,
    },
    Quantum {
        state: DensityMatrix,
        x: Projector,
        r: Projector,
    },
}

impl Instance {
    pub fn model(&self) -> Model {
        match self {
            Instance::Classical { .. } => Model::Classical,
            Instance::Quantum { .. } => Model::Quantum,
        }
    }

    /// Exact value of `quantity` from the probability or quantum formulas.
    pub fn exact(&self, quantity: Quantity) -> Result<f64> {
        match self {
            Instance::Classical { state, x, r } => match quantity {
                Quantity::R => state.prob(r),
                Quantity::P => state.cond_prob(x, r),
                Quantity::Q => state.cond_prob(x, &r.complement()),
                Quantity::X => state.cond_prob(r, x),
                Quantity::PX => state.prob(x),
            },
            Instance::Quantum { state, x, r } => match quantity {
                Quantity::R => quantum::born_prob(state, r),
                Quantity::P => quantum::cond_given_r(state, x, r),
                Quantity::Q => quantum::cond_given_r(state, x, &r.complement()),
                Quantity::X => quantum::expansion_prob(state, x, r),
                Quantity::PX => quantum::born_prob(state, x),
            },
        }
    }

    pub fn ltp_residual(&self) -> Result<f64> {
        match self {
            Instance::Classical { state, x, r } => probability::ltp_residual(state, x, r),
            Instance::Quantum { state, x, r } => quantum::ltp_residual_q(state, x, r),
        }
    }

    pub fn pipeline(&self, kind: ExperimentKind) -> Result<beam::Pipeline> {
        match self {
            Instance::Classical { state, x, r } => standard_experiment(
                kind,
                Emitter::Classical(state.clone()),
                Property::Event(x.clone()),
                Property::Event(r.clone()),
            ),
            Instance::Quantum { state, x, r } => standard_experiment(
                kind,
                Emitter::Quantum(state.clone()),
                Property::Projector(x.clone()),
                Property::Projector(r.clone()),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub model: Model,
    pub dims: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    /// Differences with magnitude at most `band` count as ties.
    pub band: f64,
}

impl ScanConfig {
    /// Classical: dims 2, 4, 8, 16 with band 1e-12. Quantum: dims 2 to 8
    /// with band 1e-10. 10,000 trials per dim.
    pub fn default_for(model: Model, seed: u64) -> Self {
        match model {
            Model::Classical => Self {
                model,
                dims: vec![2, 4, 8, 16],
                trials: 10_000,
                seed,
                band: 1e-12,
            },
            Model::Quantum => Self {
                model,
                dims: (2..=8).collect(),
                trials: 10_000,
                seed,
                band: 1e-10,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::InvalidInput(
                "dims must be a non-empty list of positive integers".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if !(self.band >= 0.0 && self.band.is_finite()) {
            return Err(Error::InvalidInput(
                "band must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Agree,
    Tie,
    Disagree,
}

fn classify(boost_gap: f64, natural_gap: f64, band: f64) -> Verdict {
    match (band_sign(boost_gap, band), band_sign(natural_gap, band)) {
        (0, _) | (_, 0) => Verdict::Tie,
        (a, b) if a == b => Verdict::Agree,
        _ => Verdict::Disagree,
    }
}

/// Sign agreement between `x - r` and `p - q` for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimScan {
    pub dim: usize,
    pub trials: u64,
    pub agree: u64,
    pub tie: u64,
    pub disagree: u64,
    pub skipped: u64,
    pub skip_reasons: BTreeMap<String, u64>,
    /// Largest `|x - r|` among ties.
    pub worst_tie_gap: f64,
    /// Largest `|LTP residual|` over evaluated trials.
    pub max_abs_ltp_residual: f64,
    /// Disagreements of `x - r` with the reversed-order difference
    /// `tr(XρXR)/r - tr(XρXR̄)/(1-r)`. Equals `disagree` classically.
    pub reversed_disagree: u64,
}

impl DimScan {
    fn empty(dim: usize) -> Self {
        Self {
            dim,
            trials: 0,
            agree: 0,
            tie: 0,
            disagree: 0,
            skipped: 0,
            skip_reasons: BTreeMap::new(),
            worst_tie_gap: 0.0,
            max_abs_ltp_residual: 0.0,
            reversed_disagree: 0,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.trials += other.trials;
        self.agree += other.agree;
        self.tie += other.tie;
        self.disagree += other.disagree;
        self.skipped += other.skipped;
        for (k, v) in other.skip_reasons {
            *self.skip_reasons.entry(k).or_default() += v;
        }
        self.worst_tie_gap = self.worst_tie_gap.max(other.worst_tie_gap);
        self.max_abs_ltp_residual = self.max_abs_ltp_residual.max(other.max_abs_ltp_residual);
        self.reversed_disagree += other.reversed_disagree;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub model: Model,
    pub seed: u64,
    pub band: f64,
    pub dims: Vec<DimScan>,
}

impl ScanReport {
    pub fn total_disagree(&self) -> u64 {
        self.dims.iter().map(|d| d.disagree).sum()
    }

    pub fn total_reversed_disagree(&self) -> u64 {
        self.dims.iter().map(|d| d.reversed_disagree).sum()
    }

    pub fn max_abs_ltp_residual(&self) -> f64 {
        self.dims
            .iter()
            .map(|d| d.max_abs_ltp_residual)
            .fold(0.0, f64::max)
    }
}

fn skip_reason(err: &Error) -> &'static str {
    match err {
        Error::DegenerateRelevance(_) => "degenerate-relevance",
        Error::ConditioningOnNull(_) | Error::PostSelectionOnNull(_) => "null-expansion-term",
        _ => "invalid-instance",
    }
}

/// Random classical instance: flat-Dirichlet weights on all points and two
/// independent events, each uniform over non-empty proper subsets (any
/// subset when `dim == 1`). Every draw with `dim >= 2` meets the boost
/// preconditions.
pub fn random_classical_instance<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Instance> {
    Ok(Instance::Classical {
        state: ClassicalState::random(dim, dim, rng)?,
        x: random_proper_event(dim, rng),
        r: random_proper_event(dim, rng),
    })
}

fn random_proper_event<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Event {
    loop {
        let e = Event::random(dim, rng);
        let size = e.indices().len();
        if dim == 1 || (size > 0 && size < dim) {
            return e;
        }
    }
}

/// Random quantum instance: Ginibre state of rank in `1..=dim` and Haar
/// projectors of rank in `1..dim` (`0..=1` when `dim == 1`).
pub fn random_quantum_instance<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Instance> {
    let state_rank = rng.random_range(1..=dim);
    let proj_ranks = if dim == 1 { 0..=1 } else { 1..=dim - 1 };
    let x_rank = rng.random_range(proj_ranks.clone());
    let r_rank = rng.random_range(proj_ranks);
    Ok(Instance::Quantum {
        state: quantum::random_density(dim, state_rank, rng)?,
        x: quantum::random_projector(dim, x_rank, rng)?,
        r: quantum::random_projector(dim, r_rank, rng)?,
    })
}

/// Signed gaps `(x - r, p - q, p_rev - q_rev)` and the LTP residual.
fn trial_gaps(instance: &Instance) -> Result<([f64; 3], f64)> {
    match instance {
        Instance::Classical { state, x, r } => {
            let b = probability::boost_indicators(state, x, r)?;
            let ltp = probability::ltp_residual(state, x, r)?;
            Ok(([b.x - b.r, b.p - b.q, b.p - b.q], ltp))
        }
        Instance::Quantum { state, x, r } => {
            let b = quantum::quantum_equivalence(state, x, r)?;
            Ok((
                [b.x - b.r, b.p - b.q, b.p_reversed - b.q_reversed],
                b.ltp_residual,
            ))
        }
    }
}

fn scan_trial(config: &ScanConfig, dim: usize, rng: &mut SimRng) -> DimScan {
    let mut out = DimScan::empty(dim);
    out.trials = 1;
    let instance = match config.model {
        Model::Classical => random_classical_instance(dim, rng),
        Model::Quantum => random_quantum_instance(dim, rng),
    };
    match instance.and_then(|inst| trial_gaps(&inst)) {
        Err(err) => {
            out.skipped = 1;
            out.skip_reasons.insert(skip_reason(&err).to_string(), 1);
        }
        Ok(([boost_gap, natural_gap, reversed_gap], ltp)) => {
            out.max_abs_ltp_residual = ltp.abs();
            match classify(boost_gap, natural_gap, config.band) {
                Verdict::Agree => out.agree = 1,
                Verdict::Disagree => out.disagree = 1,
                Verdict::Tie => {
                    out.tie = 1;
                    out.worst_tie_gap = boost_gap.abs();
                }
            }
            if classify(boost_gap, reversed_gap, config.band) == Verdict::Disagree {
                out.reversed_disagree = 1;
            }
        }
    }
    out
}

/// Compares `sign(x - r)` with `sign(p - q)` over random instances.
pub fn scan_equivalence(config: &ScanConfig) -> Result<ScanReport> {
    config.validate()?;
    let dims = config
        .dims
        .iter()
        .map(|&dim| {
            (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = derive_rng(config.seed, SCAN_DOMAIN | dim as u64, t);
                    scan_trial(config, dim, &mut rng)
                })
                .reduce(|| DimScan::empty(dim), DimScan::merge)
        })
        .collect();
    Ok(ScanReport {
        model: config.model,
        seed: config.seed,
        band: config.band,
        dims,
    })
}

/// How violation-search candidates are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceGenerator {
    /// Pure state, rank-one `X` and `R`.
    PureRankOne,
    /// Same distribution as the quantum equivalence scan.
    Mixed,
    /// Commuting diagonal instances (embedded classical triples).
    Diagonal,
}

impl std::str::FromStr for InstanceGenerator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure-rank-one" => Ok(Self::PureRankOne),
            "mixed" => Ok(Self::Mixed),
            "diagonal" => Ok(Self::Diagonal),
            _ => Err(Error::InvalidInput(format!("unknown generator `{s}`"))),
        }
    }
}

impl InstanceGenerator {
    fn draw<R: Rng + ?Sized>(self, dim: usize, rng: &mut R) -> Result<Instance> {
        match self {
            InstanceGenerator::PureRankOne => Ok(Instance::Quantum {
                state: quantum::random_density(dim, 1, rng)?,
                x: quantum::random_projector(dim, 1, rng)?,
                r: quantum::random_projector(dim, 1, rng)?,
            }),
            InstanceGenerator::Mixed => random_quantum_instance(dim, rng),
            InstanceGenerator::Diagonal => {
                let state = ClassicalState::random(dim, dim, rng)?;
                let x = Event::random(dim, rng);
                let r = Event::random(dim, rng);
                let (state, x, r) = quantum::embed_classical(&state, &x, &r)?;
                Ok(Instance::Quantum { state, x, r })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationSearch {
    pub dim: usize,
    pub budget: u64,
    pub seed: u64,
    pub generator: InstanceGenerator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub dim: usize,
    pub generator: InstanceGenerator,
    pub seed: u64,
    /// Candidates drawn.
    pub iterations: u64,
    /// Candidates with degenerate relevance, which have no residual.
    pub skipped: u64,
    /// Signed residual of the best instance (largest magnitude).
    pub residual: f64,
    pub instance: Option<Instance>,
    pub diagnostic: Option<String>,
}

impl ViolationReport {
    /// Recomputes the residual from the stored instance.
    pub fn reevaluate(&self) -> Result<f64> {
        match &self.instance {
            Some(inst) => inst.ltp_residual(),
            None => Ok(0.0),
        }
    }
}

/// Random search for the instance with the largest `|LTP residual|`.
pub fn find_ltp_violation(search: &ViolationSearch) -> Result<ViolationReport> {
    if search.dim == 0 {
        return Err(Error::InvalidInput("dim must be at least 1".into()));
    }
    if search.budget == 0 {
        return Err(Error::InvalidInput("budget must be at least 1".into()));
    }
    let mut report = ViolationReport {
        dim: search.dim,
        generator: search.generator,
        seed: search.seed,
        iterations: 0,
        skipped: 0,
        residual: 0.0,
        instance: None,
        diagnostic: None,
    };
    if search.dim == 1 {
        report.diagnostic =
            Some("dimension 1: all operators commute, so the residual is identically 0".into());
        return Ok(report);
    }
    let draw = |i: u64| {
        let mut rng = derive_rng(search.seed, VIOLATION_DOMAIN, i);
        search.generator.draw(search.dim, &mut rng)
    };
    // (index, residual) of the best candidate; ties go to the lower index
    let (best, skipped) = (0..search.budget)
        .into_par_iter()
        .map(|i| match draw(i).and_then(|inst| inst.ltp_residual()) {
            Ok(res) => (Some((i, res)), 0u64),
            Err(Error::DegenerateRelevance(_)) => (None, 1),
            Err(_) => (None, 1),
        })
        .reduce(
            || (None, 0),
            |(a, sa), (b, sb)| {
                let best = match (a, b) {
                    (Some((ia, ra)), Some((ib, rb))) => {
                        let a_wins = ra.abs() > rb.abs() || (ra.abs() == rb.abs() && ia < ib);
                        Some(if a_wins { (ia, ra) } else { (ib, rb) })
                    }
                    (x, None) | (None, x) => x,
                };
                (best, sa + sb)
            },
        );
    report.iterations = search.budget;
    report.skipped = skipped;
    if let Some((i, residual)) = best {
        report.residual = residual;
        report.instance = Some(draw(i)?);
    } else {
        report.diagnostic = Some("every candidate had degenerate relevance".into());
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub estimate: f64,
    pub exact: f64,
    pub abs_error: f64,
    pub std_error: f64,
    pub within_5_sigma: bool,
}

/// One beam run per `n` (same seed, so smaller runs are prefixes of larger
/// ones) compared with the exact value of the quantity `kind` measures.
pub fn convergence_study(
    kind: ExperimentKind,
    instance: &Instance,
    n_list: &[u64],
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    let quantity = kind.quantity();
    let exact = instance.exact(quantity)?;
    let pipeline = instance.pipeline(kind)?;
    n_list
        .iter()
        .map(|&n| {
            let table = beam::run(&pipeline, n, seed)?;
            let est = beam::estimate(&table).get(quantity)?;
            Ok(ConvergenceRow {
                n,
                estimate: est.value,
                exact,
                abs_error: (est.value - exact).abs(),
                std_error: est.std_error,
                within_5_sigma: est.within(exact, 5.0),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn classify_rules() {
        assert_eq!(classify(0.1, 0.2, 1e-12), Verdict::Agree);
        assert_eq!(classify(-0.1, -0.2, 1e-12), Verdict::Agree);
        assert_eq!(classify(0.1, -0.2, 1e-12), Verdict::Disagree);
        assert_eq!(classify(1e-13, -0.2, 1e-12), Verdict::Tie);
        assert_eq!(classify(0.0, 0.0, 1e-12), Verdict::Tie);
    }

    #[test]
    fn classical_scan_has_no_disagreement() {
        let config = ScanConfig {
            model: Model::Classical,
            dims: vec![8],
            trials: 10_000,
            seed: 1,
            band: 1e-12,
        };
        let report = scan_equivalence(&config).unwrap();
        let d = &report.dims[0];
        assert_eq!(d.disagree, 0);
        assert_eq!(d.agree + d.tie + d.disagree + d.skipped, 10_000);
        assert!(d.agree > 5_000);
        assert!(d.max_abs_ltp_residual <= 1e-12);
    }

    #[test]
    fn single_quantum_trial_accounting() {
        let mut config = ScanConfig::default_for(Model::Quantum, 42);
        config.dims = vec![2];
        config.trials = 1;
        let d = &scan_equivalence(&config).unwrap().dims[0];
        assert_eq!(d.agree + d.tie + d.disagree + d.skipped, 1);
    }

    #[test]
    fn quantum_scan_reversed_order_never_disagrees() {
        let mut config = ScanConfig::default_for(Model::Quantum, 5);
        config.trials = 500;
        let report = scan_equivalence(&config).unwrap();
        assert_eq!(report.total_reversed_disagree(), 0);
        for d in &report.dims {
            assert_eq!(d.agree + d.tie + d.disagree + d.skipped, 500);
        }
        // the measured-order conditionals do not follow the boost
        assert!(report.total_disagree() > 0);
    }

    #[test]
    fn scan_is_reproducible() {
        let mut config = ScanConfig::default_for(Model::Quantum, 9);
        config.dims = vec![2];
        config.trials = 100;
        assert_eq!(
            scan_equivalence(&config).unwrap(),
            scan_equivalence(&config).unwrap()
        );
    }

    #[test]
    fn scan_config_validation() {
        let mut config = ScanConfig::default_for(Model::Classical, 1);
        config.trials = 0;
        assert!(scan_equivalence(&config).is_err());
        config.trials = 1;
        config.dims = vec![];
        assert!(scan_equivalence(&config).is_err());
    }

    #[test]
    fn violation_dim_one() {
        let report = find_ltp_violation(&ViolationSearch {
            dim: 1,
            budget: 10,
            seed: 1,
            generator: InstanceGenerator::PureRankOne,
        })
        .unwrap();
        assert_eq!(report.residual, 0.0);
        assert!(report.diagnostic.is_some());
    }

    #[test]
    fn violation_diagonal_generator_finds_nothing() {
        let report = find_ltp_violation(&ViolationSearch {
            dim: 4,
            budget: 2_000,
            seed: 3,
            generator: InstanceGenerator::Diagonal,
        })
        .unwrap();
        assert!(report.residual.abs() <= 1e-10);
    }

    #[test]
    fn violation_search_reevaluates() {
        let report = find_ltp_violation(&ViolationSearch {
            dim: 3,
            budget: 2_000,
            seed: 4,
            generator: InstanceGenerator::Mixed,
        })
        .unwrap();
        assert!(report.residual.abs() > 0.1);
        let json = serde_json::to_string(&report).unwrap();
        let back: ViolationReport = serde_json::from_str(&json).unwrap();
        assert!((back.reevaluate().unwrap() - report.residual).abs() <= 1e-10);
    }

    #[test]
    fn convergence_examples() {
        let instance = Instance::Classical {
            state: ClassicalState::uniform(2).unwrap(),
            x: Event::from_indices(2, &[1]).unwrap(),
            r: Event::from_indices(2, &[0]).unwrap(),
        };
        let rows =
            convergence_study(ExperimentKind::E1, &instance, &[1_000, 10_000, 100_000], 8).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.exact == 0.5 && r.within_5_sigma));
        assert!(rows[2].abs_error <= 5.0 * (0.25f64 / 1e5).sqrt());

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let quantum = Instance::Quantum {
            state: DensityMatrix::pure(&[c(1.0), c(0.0)]).unwrap(),
            x: Projector::rank_one(&[c(s), c(s)]).unwrap(),
            r: Projector::rank_one(&[c(0.0), c(1.0)]).unwrap(),
        };
        let rows = convergence_study(ExperimentKind::E5, &quantum, &[100_000], 2).unwrap();
        assert!((rows[0].exact - 0.5).abs() < 1e-15);
        assert!(rows[0].within_5_sigma);
    }
}
