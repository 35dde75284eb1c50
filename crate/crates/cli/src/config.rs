//! JSON run configuration and construction of validated instances from it.

use std::fmt;

use docuscle::beam::ExperimentKind;
use docuscle::experiments::{Instance, InstanceGenerator, Model};
use docuscle::probability::{ClassicalState, Event};
use docuscle::quantum::{self, DensityMatrix, Projector};
use docuscle::rng::seeded;
use docuscle::CMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Every command reads the same config shape and ignores the fields it does
/// not use, so the output of `violate` can be passed straight to `exact`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<PropertySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<PropertySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<InstanceGenerator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission_cap: Option<u64>,
}

pub const KNOWN_FIELDS: &[&str] = &[
    "model",
    "state",
    "x",
    "r",
    "experiment",
    "n",
    "n_list",
    "seed",
    "dims",
    "trials",
    "band",
    "dim",
    "budget",
    "generator",
    "emission_cap",
];

/// Where the state comes from. Exactly one key may be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpec {
    /// Classical weights, or a diagonal density matrix in the quantum model.
    Weights(Vec<f64>),
    /// Density matrix, row-major, entries `[re, im]`.
    Matrix(CMatrix),
    /// Pure state vector, normalized on use.
    Vector(Vec<[f64; 2]>),
    Generator(StateGenerator),
}

/// Random state: Dirichlet weights on `rank` points (classical) or a
/// Ginibre density matrix of rank `rank` (quantum).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateGenerator {
    pub dim: usize,
    pub rank: usize,
    pub seed: u64,
}

/// An `X` or `R` test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertySpec {
    /// Member indices; a diagonal projector in the quantum model.
    Members(Vec<usize>),
    Full,
    Empty,
    /// Projector matrix (quantum only).
    Matrix(CMatrix),
    /// Rank-one projector onto this direction (quantum only).
    Vector(Vec<[f64; 2]>),
    Generator(PropertyGenerator),
}

/// Random event with `rank` members, or a Haar-random projector of rank
/// `rank`. `dim` defaults to the state dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyGenerator {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub rank: usize,
    pub seed: u64,
}

/// Invalid configuration. `line` and `column` point into the config text
/// when they are known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            field: None,
            line: None,
            column: None,
            message: message.into(),
        }
    }

    pub fn field(field: &str, message: impl fmt::Display) -> Self {
        Self {
            field: Some(field.to_string()),
            ..Self::new(message.to_string())
        }
    }

    /// Fills in the line of the field's top-level key when no position is
    /// known yet.
    pub fn locate_in(mut self, text: &str) -> Self {
        if self.line.is_none() {
            if let Some(field) = &self.field {
                let key = field.split(['.', '[']).next().unwrap_or(field);
                self.line = key_line(text, key);
            }
        }
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config")?;
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, " at line {l}, column {c}")?,
            (Some(l), None) => write!(f, " at line {l}")?,
            _ => {}
        }
        if let Some(field) = &self.field {
            write!(f, ", field `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line of the first `"key":` in `text`.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    let mut from = 0;
    while let Some(pos) = text[from..].find(&quoted) {
        let at = from + pos;
        let rest = text[at + quoted.len()..].trim_start();
        if rest.starts_with(':') {
            return Some(text[..at].matches('\n').count() + 1);
        }
        from = at + quoted.len();
    }
    None
}

/// Parses config text, reporting the position and field path of any error.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError {
            field: (path != "." && !path.is_empty()).then_some(path),
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: strip_position(&inner.to_string()),
        }
    })?;
    Ok(config)
}

/// serde_json appends " at line L column C"; the position is reported
/// separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Top-level keys that no command reads.
pub fn unknown_fields(text: &str) -> Vec<String> {
    let Ok(map) = serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(text) else {
        return Vec::new();
    };
    map.keys()
        .filter(|k| !KNOWN_FIELDS.contains(&k.as_str()))
        .cloned()
        .collect()
}

fn complex(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

fn invalid(field: &str) -> impl Fn(docuscle::Error) -> ConfigError + '_ {
    move |e| ConfigError::field(field, e)
}

impl RunConfig {
    pub fn require_model(&self) -> Result<Model, ConfigError> {
        self.model.ok_or_else(|| {
            ConfigError::field("model", "missing; expected \"classical\" or \"quantum\"")
        })
    }

    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed.ok_or_else(|| {
            ConfigError::field("seed", "missing; give it in the config or with --seed")
        })
    }

    /// Builds and validates the state and both tests.
    pub fn instance(&self) -> Result<Instance, ConfigError> {
        let model = self.require_model()?;
        let state = self
            .state
            .as_ref()
            .ok_or_else(|| ConfigError::field("state", "missing"))?;
        let x = self
            .x
            .as_ref()
            .ok_or_else(|| ConfigError::field("x", "missing"))?;
        let r = self
            .r
            .as_ref()
            .ok_or_else(|| ConfigError::field("r", "missing"))?;
        match model {
            Model::Classical => {
                let state = classical_state(state)?;
                let dim = state.dim();
                Ok(Instance::Classical {
                    x: classical_event(x, dim, "x")?,
                    r: classical_event(r, dim, "r")?,
                    state,
                })
            }
            Model::Quantum => {
                let state = density_matrix(state)?;
                let dim = state.dim();
                Ok(Instance::Quantum {
                    x: projector(x, dim, "x")?,
                    r: projector(r, dim, "r")?,
                    state,
                })
            }
        }
    }
}

fn classical_state(spec: &StateSpec) -> Result<ClassicalState, ConfigError> {
    match spec {
        StateSpec::Weights(w) => ClassicalState::new(w.clone()).map_err(invalid("state.weights")),
        StateSpec::Generator(g) => {
            check_rank(g.rank, 1, g.dim, "state.generator")?;
            ClassicalState::random(g.dim, g.rank, &mut seeded(g.seed))
                .map_err(invalid("state.generator"))
        }
        StateSpec::Matrix(_) | StateSpec::Vector(_) => Err(ConfigError::field(
            "state",
            "the classical model takes `weights` or `generator`",
        )),
    }
}

fn density_matrix(spec: &StateSpec) -> Result<DensityMatrix, ConfigError> {
    match spec {
        StateSpec::Weights(w) => ClassicalState::new(w.clone())
            .and_then(|s| DensityMatrix::diagonal(&s))
            .map_err(invalid("state.weights")),
        StateSpec::Matrix(m) => DensityMatrix::new(m.clone()).map_err(invalid("state.matrix")),
        StateSpec::Vector(v) => DensityMatrix::pure(&complex(v)).map_err(invalid("state.vector")),
        StateSpec::Generator(g) => {
            check_rank(g.rank, 1, g.dim, "state.generator")?;
            quantum::random_density(g.dim, g.rank, &mut seeded(g.seed))
                .map_err(invalid("state.generator"))
        }
    }
}

fn check_rank(rank: usize, min: usize, dim: usize, field: &str) -> Result<(), ConfigError> {
    if dim == 0 {
        return Err(ConfigError::field(field, "dim must be at least 1"));
    }
    if rank < min || rank > dim {
        return Err(ConfigError::field(
            field,
            format!("rank {rank} outside {min}..={dim}"),
        ));
    }
    Ok(())
}

fn generator_dim(g: &PropertyGenerator, dim: usize, field: &str) -> Result<(), ConfigError> {
    match g.dim {
        Some(d) if d != dim => Err(ConfigError::field(
            field,
            format!("dimension {d} does not match the state dimension {dim}"),
        )),
        _ => check_rank(g.rank, 0, dim, field),
    }
}

fn classical_event(spec: &PropertySpec, dim: usize, field: &str) -> Result<Event, ConfigError> {
    match spec {
        PropertySpec::Members(idx) => Event::from_indices(dim, idx).map_err(invalid(field)),
        PropertySpec::Full => Ok(Event::full(dim)),
        PropertySpec::Empty => Ok(Event::empty(dim)),
        PropertySpec::Generator(g) => {
            generator_dim(g, dim, field)?;
            let chosen = rand::seq::index::sample(&mut seeded(g.seed), dim, g.rank).into_vec();
            Event::from_indices(dim, &chosen).map_err(invalid(field))
        }
        PropertySpec::Matrix(_) | PropertySpec::Vector(_) => Err(ConfigError::field(
            field,
            "the classical model takes `members`, \"full\", \"empty\" or `generator`",
        )),
    }
}

fn projector(spec: &PropertySpec, dim: usize, field: &str) -> Result<Projector, ConfigError> {
    let p = match spec {
        PropertySpec::Members(idx) => Event::from_indices(dim, idx)
            .map(|e| Projector::diagonal(&e))
            .map_err(invalid(field))?,
        PropertySpec::Full => Projector::identity(dim),
        PropertySpec::Empty => Projector::zero(dim),
        PropertySpec::Matrix(m) => Projector::new(m.clone()).map_err(invalid(field))?,
        PropertySpec::Vector(v) => Projector::rank_one(&complex(v)).map_err(invalid(field))?,
        PropertySpec::Generator(g) => {
            generator_dim(g, dim, field)?;
            quantum::random_projector(dim, g.rank, &mut seeded(g.seed)).map_err(invalid(field))?
        }
    };
    if p.dim() != dim {
        return Err(ConfigError::field(
            field,
            format!(
                "dimension {} does not match the state dimension {dim}",
                p.dim()
            ),
        ));
    }
    Ok(p)
}
