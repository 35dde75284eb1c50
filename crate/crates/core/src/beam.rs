//! Finite-beam simulation.
//!
//! An [`Emitter`] prepares independent docuscles in one state. Each docuscle
//! passes through the [`Appliance`] stages of a [`Pipeline`] in order. A
//! stage tests one property, tallies the click, and either lets both branches
//! continue ([`Mode::Record`]) or discards one of them ([`Mode::Select`],
//! [`Mode::Block`]). Emission stops once exactly `n` docuscles have reached
//! the last stage.
//!
//! Quantum docuscles collapse at every stage. Because the collapsed state
//! depends only on the outcomes seen so far, the per-branch Born
//! probabilities are computed once per run into an outcome tree.
//!
//! Docuscle `k` draws from the generator `derive_rng(seed, RUN_DOMAIN, k / BLOCK)`,
//! so blocks are simulated in parallel and merged in ordinal order; the table
//! is bit-identical to a sequential run.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::probability::{ClassicalState, Event, NULL_TOL};
use crate::quantum::{born_prob, lueders_update, DensityMatrix, Projector};
use crate::rng::derive_rng;

const RUN_DOMAIN: u64 = 0x6265_616d; // "beam"
const BLOCK: u64 = 4096;
const BLOCKS_PER_WAVE: u64 = 16;

/// Default limit on emitted docuscles before a run gives up.
pub const DEFAULT_EMISSION_CAP: u64 = 100_000_000;

/// Source of identically prepared docuscles.
#[derive(Debug, Clone, PartialEq)]
pub enum Emitter {
    Classical(ClassicalState),
    Quantum(DensityMatrix),
}

impl Emitter {
    pub fn dim(&self) -> usize {
        match self {
            Emitter::Classical(s) => s.dim(),
            Emitter::Quantum(rho) => rho.dim(),
        }
    }
}

/// Property checked by an appliance; must match the emitter kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Property {
    Event(Event),
    Projector(Projector),
}

impl Property {
    pub fn dim(&self) -> usize {
        match self {
            Property::Event(e) => e.dim(),
            Property::Projector(p) => p.dim(),
        }
    }
}

/// Which of the two properties a stage tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Relevance,
    Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Tally and pass both branches on.
    Record,
    /// Pass only docuscles that have the property.
    Select,
    /// Pass only docuscles that lack the property.
    Block,
}

impl Mode {
    fn passes(self, positive: bool) -> bool {
        match self {
            Mode::Record => true,
            Mode::Select => positive,
            Mode::Block => !positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Appliance {
    pub role: Role,
    pub property: Property,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    emitter: Emitter,
    stages: Vec<Appliance>,
}

impl Pipeline {
    pub fn new(emitter: Emitter, stages: Vec<Appliance>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidInput(
                "pipeline needs at least one stage".into(),
            ));
        }
        if stages.len() > 16 {
            return Err(Error::InvalidInput(
                "pipelines are limited to 16 stages".into(),
            ));
        }
        for stage in &stages {
            check_dim(emitter.dim(), stage.property.dim())?;
            let kinds_match = matches!(
                (&emitter, &stage.property),
                (Emitter::Classical(_), Property::Event(_))
                    | (Emitter::Quantum(_), Property::Projector(_))
            );
            if !kinds_match {
                return Err(Error::InvalidInput(
                    "classical emitters take events, quantum emitters take projectors".into(),
                ));
            }
        }
        Ok(Self { emitter, stages })
    }

    pub fn emitter(&self) -> &Emitter {
        &self.emitter
    }

    pub fn stages(&self) -> &[Appliance] {
        &self.stages
    }
}

/// The five measurement layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    /// Relevance test only.
    E1,
    /// Keep relevant docuscles, then check `X`.
    E2,
    /// Keep non-relevant docuscles, then check `X`.
    E3,
    /// Check `X` with no relevance test.
    E4,
    /// Keep docuscles with `X`, then test relevance.
    E5,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [Self::E1, Self::E2, Self::E3, Self::E4, Self::E5];

    /// The quantity this layout measures.
    pub fn quantity(self) -> Quantity {
        match self {
            Self::E1 => Quantity::R,
            Self::E2 => Quantity::P,
            Self::E3 => Quantity::Q,
            Self::E4 => Quantity::PX,
            Self::E5 => Quantity::X,
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "E1" => Ok(Self::E1),
            "E2" => Ok(Self::E2),
            "E3" => Ok(Self::E3),
            "E4" => Ok(Self::E4),
            "E5" => Ok(Self::E5),
            _ => Err(Error::InvalidInput(format!("unknown experiment `{s}`"))),
        }
    }
}

pub fn standard_experiment(
    kind: ExperimentKind,
    emitter: Emitter,
    x_property: Property,
    r_property: Property,
) -> Result<Pipeline> {
    let r = |mode| Appliance {
        role: Role::Relevance,
        property: r_property.clone(),
        mode,
    };
    let x = |mode| Appliance {
        role: Role::Term,
        property: x_property.clone(),
        mode,
    };
    let stages = match kind {
        ExperimentKind::E1 => vec![r(Mode::Record)],
        ExperimentKind::E2 => vec![r(Mode::Select), x(Mode::Record)],
        ExperimentKind::E3 => vec![r(Mode::Block), x(Mode::Record)],
        ExperimentKind::E4 => vec![x(Mode::Record)],
        ExperimentKind::E5 => vec![x(Mode::Select), r(Mode::Record)],
    };
    // both properties are validated even when a layout uses only one
    check_dim(emitter.dim(), x_property.dim())?;
    check_dim(emitter.dim(), r_property.dim())?;
    Pipeline::new(emitter, stages)
}

/// Tallies for one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub role: Role,
    pub mode: Mode,
    pub inflow: u64,
    pub positive: u64,
    pub negative: u64,
    /// Counts keyed by the outcome path up to and including this stage,
    /// written as `1` (has the property) / `0` per stage.
    pub branches: BTreeMap<String, u64>,
}

/// Counts from one run. The derived counts are filled in where the stage
/// layout defines them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    /// Docuscles that reached the last stage (`N`).
    pub n_total: u64,
    /// Docuscles emitted, including those discarded by selection.
    pub emitted: u64,
    pub stages: Vec<StageCounts>,
    /// `n_R`
    pub n_relevant: Option<u64>,
    /// `n_R̄`
    pub n_nonrelevant: Option<u64>,
    /// `n_XR`
    pub n_term_relevant: Option<u64>,
    /// `n_XR̄`
    pub n_term_nonrelevant: Option<u64>,
    /// Docuscles with `X` when `X` is tested directly on the emitted state.
    pub n_term: Option<u64>,
    /// `R_X`: relevant docuscles among the `X`-selected ones.
    pub relevant_given_term: Option<u64>,
}

impl FrequencyTable {
    /// Empty table with no derived counts; mostly useful for tests.
    pub fn with_total(n_total: u64) -> Self {
        Self {
            n_total,
            emitted: n_total,
            stages: Vec::new(),
            n_relevant: None,
            n_nonrelevant: None,
            n_term_relevant: None,
            n_term_nonrelevant: None,
            n_term: None,
            relevant_given_term: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub emission_cap: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            emission_cap: DEFAULT_EMISSION_CAP,
        }
    }
}

/// Outcome path of one docuscle: bit `s` is the click at stage `s`.
#[derive(Debug, Clone, Copy)]
struct Trace {
    path: u32,
    depth: u8,
}

fn path_key(path: u32, depth: usize) -> String {
    (0..depth)
        .map(|s| if path >> s & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Per-run sampler for a single docuscle.
enum Sampler<'a> {
    Classical {
        state: &'a ClassicalState,
        events: Vec<&'a Event>,
    },
    /// Probability of a click keyed by `(stage, path so far)`.
    Quantum(HashMap<(usize, u32), f64>),
}

impl<'a> Sampler<'a> {
    fn new(pipeline: &'a Pipeline) -> Result<(Self, f64)> {
        match &pipeline.emitter {
            Emitter::Classical(state) => {
                let events: Vec<&Event> = pipeline
                    .stages
                    .iter()
                    .map(|s| match &s.property {
                        Property::Event(e) => e,
                        Property::Projector(_) => unreachable!("checked in Pipeline::new"),
                    })
                    .collect();
                let reach: f64 = state
                    .weights()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| {
                        pipeline
                            .stages
                            .iter()
                            .zip(&events)
                            .all(|(st, e)| st.mode.passes(e.contains(*i)))
                    })
                    .map(|(_, w)| w)
                    .sum();
                Ok((Sampler::Classical { state, events }, reach))
            }
            Emitter::Quantum(rho) => {
                let mut tree = HashMap::new();
                let reach = grow_tree(&pipeline.stages, rho.clone(), 0, 0, &mut tree)?;
                Ok((Sampler::Quantum(tree), reach))
            }
        }
    }

    fn emit<R: Rng>(&self, stages: &[Appliance], rng: &mut R) -> Trace {
        let mut path = 0u32;
        match self {
            Sampler::Classical { state, events } => {
                let outcome = state.sample_outcome(rng);
                for (s, (stage, event)) in stages.iter().zip(events).enumerate() {
                    let positive = event.contains(outcome);
                    path |= (positive as u32) << s;
                    if !stage.mode.passes(positive) {
                        return Trace {
                            path,
                            depth: s as u8 + 1,
                        };
                    }
                }
            }
            Sampler::Quantum(tree) => {
                for (s, stage) in stages.iter().enumerate() {
                    let click = tree[&(s, path)];
                    let positive = rng.random::<f64>() < click;
                    path |= (positive as u32) << s;
                    if !stage.mode.passes(positive) {
                        return Trace {
                            path,
                            depth: s as u8 + 1,
                        };
                    }
                }
            }
        }
        Trace {
            path,
            depth: stages.len() as u8,
        }
    }
}

/// Fills click probabilities for every reachable `(stage, path)` and returns
/// the probability of reaching the final stage's outflow. Branches with
/// probability at most [`NULL_TOL`] are pruned as impossible.
fn grow_tree(
    stages: &[Appliance],
    state: DensityMatrix,
    stage: usize,
    path: u32,
    tree: &mut HashMap<(usize, u32), f64>,
) -> Result<f64> {
    let Some(appliance) = stages.get(stage) else {
        return Ok(1.0);
    };
    let Property::Projector(projector) = &appliance.property else {
        unreachable!("checked in Pipeline::new");
    };
    let mut click = born_prob(&state, projector)?;
    if click <= NULL_TOL {
        click = 0.0;
    } else if click >= 1.0 - NULL_TOL {
        click = 1.0;
    }
    tree.insert((stage, path), click);
    let mut reach = 0.0;
    for positive in [true, false] {
        let branch = if positive { click } else { 1.0 - click };
        if branch == 0.0 || !appliance.mode.passes(positive) {
            continue;
        }
        let next = if stage + 1 == stages.len() {
            state.clone()
        } else if positive {
            lueders_update(&state, projector)?
        } else {
            lueders_update(&state, &projector.complement())?
        };
        let bit = (positive as u32) << stage;
        reach += branch * grow_tree(stages, next, stage + 1, path | bit, tree)?;
    }
    Ok(reach)
}

/// Runs until `n` docuscles reach the last stage.
pub fn run(pipeline: &Pipeline, n: u64, seed: u64) -> Result<FrequencyTable> {
    run_with(pipeline, n, seed, &RunOptions::default())
}

pub fn run_with(
    pipeline: &Pipeline,
    n: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<FrequencyTable> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "number of docuscles must be at least 1".into(),
        ));
    }
    let (sampler, reach) = Sampler::new(pipeline)?;
    if reach <= 0.0 {
        return Err(Error::ProgressImpossible {
            requested: n,
            survivors: 0,
            emitted: 0,
        });
    }
    let stages = &pipeline.stages;
    let depth = stages.len();
    let mut tally = Tally::new(depth);
    let mut next_block = 0u64;

    'waves: loop {
        let wave: Vec<Vec<Trace>> = (next_block..next_block + BLOCKS_PER_WAVE)
            .into_par_iter()
            .map(|block| {
                let mut rng = derive_rng(seed, RUN_DOMAIN, block);
                (0..BLOCK).map(|_| sampler.emit(stages, &mut rng)).collect()
            })
            .collect();
        next_block += BLOCKS_PER_WAVE;
        for trace in wave.iter().flatten() {
            if tally.emitted == options.emission_cap {
                return Err(Error::ProgressImpossible {
                    requested: n,
                    survivors: tally.survivors,
                    emitted: tally.emitted,
                });
            }
            tally.add(*trace, depth);
            if tally.survivors == n {
                break 'waves;
            }
        }
    }
    Ok(tally.into_table(stages))
}

struct Tally {
    emitted: u64,
    survivors: u64,
    /// `(stage, path up to and including the stage) -> count`
    branches: Vec<BTreeMap<u32, u64>>,
}

impl Tally {
    fn new(depth: usize) -> Self {
        Self {
            emitted: 0,
            survivors: 0,
            branches: vec![BTreeMap::new(); depth],
        }
    }

    fn add(&mut self, trace: Trace, depth: usize) {
        self.emitted += 1;
        for s in 0..trace.depth as usize {
            let prefix = trace.path & ((1u32 << (s + 1)) - 1);
            *self.branches[s].entry(prefix).or_default() += 1;
        }
        if trace.depth as usize == depth {
            self.survivors += 1;
        }
    }

    fn into_table(self, stages: &[Appliance]) -> FrequencyTable {
        let stage_counts: Vec<StageCounts> = stages
            .iter()
            .zip(&self.branches)
            .enumerate()
            .map(|(s, (appliance, branches))| {
                let positive = branches
                    .iter()
                    .filter(|(p, _)| *p >> s & 1 == 1)
                    .map(|(_, c)| c)
                    .sum();
                let inflow: u64 = branches.values().sum();
                StageCounts {
                    role: appliance.role,
                    mode: appliance.mode,
                    inflow,
                    positive,
                    negative: inflow - positive,
                    branches: branches
                        .iter()
                        .map(|(p, c)| (path_key(*p, s + 1), *c))
                        .collect(),
                }
            })
            .collect();
        let mut table = FrequencyTable::with_total(self.survivors);
        table.emitted = self.emitted;
        derive_counts(&mut table, &stage_counts);
        table.stages = stage_counts;
        table
    }
}

/// Maps stage tallies onto `n_R`, `n_XR`, ... for the layouts that define them.
fn derive_counts(table: &mut FrequencyTable, stages: &[StageCounts]) {
    let last = stages.last().expect("pipeline has stages");
    let before = &stages[..stages.len() - 1];
    match (last.role, before) {
        (Role::Relevance, []) => {
            table.n_relevant = Some(last.positive);
            table.n_nonrelevant = Some(last.negative);
        }
        (Role::Relevance, [first]) if first.role == Role::Term && first.mode == Mode::Select => {
            table.relevant_given_term = Some(last.positive);
        }
        (Role::Term, []) => {
            table.n_term = Some(last.positive);
        }
        (Role::Term, [first]) if first.role == Role::Relevance => match first.mode {
            Mode::Select => {
                table.n_relevant = Some(last.inflow);
                table.n_term_relevant = Some(last.positive);
            }
            Mode::Block => {
                table.n_nonrelevant = Some(last.inflow);
                table.n_term_nonrelevant = Some(last.positive);
            }
            Mode::Record => {
                let count = |key: &str| last.branches.get(key).copied().unwrap_or(0);
                table.n_relevant = Some(count("10") + count("11"));
                table.n_nonrelevant = Some(count("00") + count("01"));
                table.n_term_relevant = Some(count("11"));
                table.n_term_nonrelevant = Some(count("01"));
            }
        },
        _ => {}
    }
}

/// Quantities estimable from frequency tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    /// `P(R)`
    #[serde(rename = "r")]
    R,
    /// `P(X|R)`
    #[serde(rename = "p")]
    P,
    /// `P(X|R̄)`
    #[serde(rename = "q")]
    Q,
    /// `P(R|X)`
    #[serde(rename = "x")]
    X,
    /// `P(X)` measured directly
    #[serde(rename = "p_x")]
    PX,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::R => "r",
            Quantity::P => "p",
            Quantity::Q => "q",
            Quantity::X => "x",
            Quantity::PX => "p_x",
        }
    }
}

/// Frequency `successes / count` with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub count: u64,
}

impl Estimate {
    fn ratio(successes: Option<u64>, count: Option<u64>) -> Option<Self> {
        let (k, n) = (successes?, count?);
        if n == 0 {
            return None;
        }
        let value = k as f64 / n as f64;
        Some(Self {
            value,
            std_error: (value * (1.0 - value) / n as f64).sqrt(),
            count: n,
        })
    }

    /// `|value - exact| <= sigmas · std_error`, plus a 1e-12 allowance so
    /// that a zero-variance estimate still matches an exact value carrying
    /// rounding noise.
    pub fn within(&self, exact: f64, sigmas: f64) -> bool {
        (self.value - exact).abs() <= sigmas * self.std_error + 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimates {
    pub r: Option<Estimate>,
    pub p: Option<Estimate>,
    pub q: Option<Estimate>,
    pub x: Option<Estimate>,
    pub p_x: Option<Estimate>,
}

impl Estimates {
    pub fn get(&self, quantity: Quantity) -> Result<Estimate> {
        let slot = match quantity {
            Quantity::R => self.r,
            Quantity::P => self.p,
            Quantity::Q => self.q,
            Quantity::X => self.x,
            Quantity::PX => self.p_x,
        };
        slot.ok_or(Error::AbsentEstimate(quantity.name()))
    }
}

/// Frequency estimates from a table; ratios with an unknown or zero
/// denominator are left absent.
pub fn estimate(table: &FrequencyTable) -> Estimates {
    let relevance_total = match (table.n_relevant, table.n_nonrelevant) {
        (Some(a), Some(b)) => Some(a + b),
        _ => None,
    };
    Estimates {
        r: Estimate::ratio(table.n_relevant, relevance_total),
        p: Estimate::ratio(table.n_term_relevant, table.n_relevant),
        q: Estimate::ratio(table.n_term_nonrelevant, table.n_nonrelevant),
        x: Estimate::ratio(table.relevant_given_term, Some(table.n_total)),
        p_x: Estimate::ratio(table.n_term, Some(table.n_total)),
    }
}

/// Estimated LTP residual `P(X) - [p r + q (1 - r)]` from independent runs,
/// with a delta-method standard error.
pub fn ltp_residual_estimate(p_x: Estimate, r: Estimate, p: Estimate, q: Estimate) -> Estimate {
    let value = p_x.value - (p.value * r.value + q.value * (1.0 - r.value));
    let var = p_x.std_error.powi(2)
        + (r.value * p.std_error).powi(2)
        + ((1.0 - r.value) * q.std_error).powi(2)
        + ((p.value - q.value) * r.std_error).powi(2);
    Estimate {
        value,
        std_error: var.sqrt(),
        count: p_x.count.min(r.count).min(p.count).min(q.count),
    }
}
