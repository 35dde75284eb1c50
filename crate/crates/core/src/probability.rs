//! Exact classical probability on a finite sample space `0..n`.
//!
//! A [`ClassicalState`] is a probability vector and an [`Event`] is an
//! indicator over the same points. Relevance `R` and the expansion term `X`
//! are both events; `R̄` is [`Event::complement`].

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Absolute tolerance for comparing classical probabilities.
pub const PROB_TOL: f64 = 1e-12;

/// Probabilities at or below this are treated as zero when dividing.
pub const NULL_TOL: f64 = 1e-15;

/// Probability distribution over the points `0..dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassicalState {
    weights: Vec<f64>,
}

impl ClassicalState {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("sample space must be non-empty".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "weight {i} is {w}; weights must be finite and non-negative"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidInput(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("sample space must be non-empty".into()));
        }
        Ok(Self {
            weights: vec![1.0 / dim as f64; dim],
        })
    }

    pub fn point_mass(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidInput(format!(
                "point {index} outside sample space of size {dim}"
            )));
        }
        let mut weights = vec![0.0; dim];
        weights[index] = 1.0;
        Ok(Self { weights })
    }

    /// Uniformly random distribution (flat Dirichlet) supported on `support`
    /// randomly chosen points.
    pub fn random<R: Rng + ?Sized>(dim: usize, support: usize, rng: &mut R) -> Result<Self> {
        if dim == 0 || support == 0 || support > dim {
            return Err(Error::InvalidInput(format!(
                "support {support} must lie in 1..={dim}"
            )));
        }
        let chosen = rand::seq::index::sample(rng, dim, support);
        let mut weights = vec![0.0; dim];
        for i in chosen.iter() {
            let w: f64 = Exp1.sample(rng);
            weights[i] = w;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { weights })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `P(a)`, the total weight of the members of `a`.
    pub fn prob(&self, a: &Event) -> Result<f64> {
        check_dim(self.dim(), a.dim())?;
        let p: f64 = self
            .weights
            .iter()
            .zip(&a.members)
            .filter(|(_, &m)| m)
            .map(|(w, _)| w)
            // an empty `sum` of f64 is -0.0
            .fold(0.0, |acc, w| acc + w);
        Ok(clamp_unit(p))
    }

    /// `P(a | given)`.
    pub fn cond_prob(&self, a: &Event, given: &Event) -> Result<f64> {
        check_dim(self.dim(), a.dim())?;
        let denom = self.prob(given)?;
        if denom <= NULL_TOL {
            return Err(Error::ConditioningOnNull(denom));
        }
        let joint = self.prob(&a.intersection(given)?)?;
        Ok(clamp_unit(joint / denom))
    }

    /// The state restricted to `given` and renormalized.
    pub fn condition(&self, given: &Event) -> Result<Self> {
        let denom = self.prob(given)?;
        if denom <= NULL_TOL {
            return Err(Error::ConditioningOnNull(denom));
        }
        let weights = self
            .weights
            .iter()
            .zip(&given.members)
            .map(|(w, &m)| if m { w / denom } else { 0.0 })
            .collect();
        Ok(Self { weights })
    }

    /// Draws one outcome index with probability equal to its weight.
    pub fn sample_outcome<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_supported = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last_supported = i;
                if u < acc {
                    return i;
                }
            }
        }
        // u landed in the rounding gap above the final cumulative sum
        last_supported
    }
}

impl TryFrom<Vec<f64>> for ClassicalState {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<ClassicalState> for Vec<f64> {
    fn from(state: ClassicalState) -> Self {
        state.weights
    }
}

/// Subset of the sample space, stored as an indicator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    members: Vec<bool>,
}

impl Event {
    pub fn new(members: Vec<bool>) -> Self {
        Self { members }
    }

    pub fn from_indices(dim: usize, indices: &[usize]) -> Result<Self> {
        let mut members = vec![false; dim];
        for &i in indices {
            if i >= dim {
                return Err(Error::InvalidInput(format!(
                    "event member {i} outside sample space of size {dim}"
                )));
            }
            members[i] = true;
        }
        Ok(Self { members })
    }

    pub fn full(dim: usize) -> Self {
        Self {
            members: vec![true; dim],
        }
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            members: vec![false; dim],
        }
    }

    /// Each point included independently with probability 1/2.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self {
            members: (0..dim).map(|_| rng.random_bool(0.5)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn contains(&self, point: usize) -> bool {
        self.members.get(point).copied().unwrap_or(false)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    pub fn complement(&self) -> Self {
        Self {
            members: self.members.iter().map(|m| !m).collect(),
        }
    }

    pub fn intersection(&self, other: &Event) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(a, b)| *a && *b)
                .collect(),
        })
    }

    pub fn union(&self, other: &Event) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(a, b)| *a || *b)
                .collect(),
        })
    }
}

/// Snaps values within [`PROB_TOL`] of 0 or 1 onto the boundary.
pub(crate) fn clamp_unit(p: f64) -> f64 {
    if (-PROB_TOL..0.0).contains(&p) {
        0.0
    } else if p > 1.0 && p <= 1.0 + PROB_TOL {
        1.0
    } else {
        p
    }
}

/// Residual of the law of total probability,
/// `P(X) - [P(X|R) P(R) + P(X|R̄) P(R̄)]`. Always zero up to rounding.
pub fn ltp_residual(state: &ClassicalState, x: &Event, r: &Event) -> Result<f64> {
    let p_r = relevance_prob(state, r)?;
    let not_r = r.complement();
    let p_x = state.prob(x)?;
    let total = state.cond_prob(x, r)? * p_r + state.cond_prob(x, &not_r)? * (1.0 - p_r);
    Ok(p_x - total)
}

/// `P(R)`, rejected when a conditional on `R` or `R̄` would be undefined.
fn relevance_prob(state: &ClassicalState, r: &Event) -> Result<f64> {
    let p_r = state.prob(r)?;
    if p_r <= NULL_TOL || p_r >= 1.0 - NULL_TOL {
        return Err(Error::DegenerateRelevance(p_r));
    }
    Ok(p_r)
}

/// Three-way sign where `|value| <= band` counts as zero.
pub fn band_sign(value: f64, band: f64) -> i8 {
    if value > band {
        1
    } else if value < -band {
        -1
    } else {
        0
    }
}

/// Measured quantities for one expansion term and the boost verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostReport {
    /// `P(R)`
    pub r: f64,
    /// `P(X|R)`
    pub p: f64,
    /// `P(X|R̄)`
    pub q: f64,
    /// `P(R|X)`
    pub x: f64,
    /// `x > r`
    pub boost: bool,
    /// `p > q`
    pub natural: bool,
}

impl BoostReport {
    /// `x = r` within the band.
    pub fn boost_tie(&self) -> bool {
        band_sign(self.x - self.r, PROB_TOL) == 0
    }

    /// `p = q` within the band.
    pub fn natural_tie(&self) -> bool {
        band_sign(self.p - self.q, PROB_TOL) == 0
    }
}

/// Evaluates `r, p, q, x` and both sides of the boost criterion.
pub fn boost_indicators(
    state: &ClassicalState,
    x_event: &Event,
    r_event: &Event,
) -> Result<BoostReport> {
    check_dim(state.dim(), x_event.dim())?;
    let r = relevance_prob(state, r_event)?;
    let p = state.cond_prob(x_event, r_event)?;
    let q = state.cond_prob(x_event, &r_event.complement())?;
    let x = state.cond_prob(r_event, x_event)?;
    Ok(BoostReport {
        r,
        p,
        q,
        x,
        boost: band_sign(x - r, PROB_TOL) > 0,
        natural: band_sign(p - q, PROB_TOL) > 0,
    })
}
