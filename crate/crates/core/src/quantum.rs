//! Density operators, projectors and the trace formulas for relevance,
//! sequential conditionals, post-selected expansion and the law of total
//! probability.
//!
//! All probabilities are real parts of traces. A trace whose imaginary part
//! exceeds [`IMAG_TOL`] means an operand was not Hermitian and is reported as
//! [`Error::InvariantViolation`].

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::CMatrix;
use crate::probability::{band_sign, ClassicalState, Event, NULL_TOL, PROB_TOL};

/// Entrywise tolerance for Hermiticity, idempotence, trace and positivity.
pub const QUANTUM_TOL: f64 = 1e-10;

/// Largest imaginary part tolerated in a trace that should be real.
pub const IMAG_TOL: f64 = 1e-8;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrix", into = "CMatrix")]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::InvalidInput(format!(
                "density matrix must be square and non-empty, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermiticity_error();
        if herm > QUANTUM_TOL {
            return Err(Error::InvalidInput(format!(
                "density matrix is not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > QUANTUM_TOL {
            return Err(Error::InvalidInput(format!(
                "density matrix has trace {tr}, expected 1"
            )));
        }
        if !matrix.is_psd_within(QUANTUM_TOL) {
            return Err(Error::InvalidInput(
                "density matrix has an eigenvalue below -1e-10".into(),
            ));
        }
        Ok(Self { matrix })
    }

    /// `|v⟩⟨v| / ⟨v|v⟩`.
    pub fn pure(v: &[Complex64]) -> Result<Self> {
        let norm_sqr: f64 = v.iter().map(Complex64::norm_sqr).sum();
        if v.is_empty() || norm_sqr <= NULL_TOL {
            return Err(Error::InvalidInput("state vector must be non-zero".into()));
        }
        Ok(Self {
            matrix: CMatrix::outer(v).scale(1.0 / norm_sqr),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::diagonal(&ClassicalState::uniform(dim)?)
    }

    /// The commuting embedding of a classical distribution.
    pub fn diagonal(state: &ClassicalState) -> Result<Self> {
        Ok(Self {
            matrix: CMatrix::from_diagonal(state.weights()),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Normalized `m`, symmetrized to absorb rounding drift. `m` must be PSD
    /// in exact arithmetic.
    fn from_unnormalized(m: CMatrix, trace: f64) -> Self {
        Self {
            matrix: m.scale(1.0 / trace).hermitian_part(),
        }
    }
}

/// Hermitian idempotent matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrix", into = "CMatrix")]
pub struct Projector {
    matrix: CMatrix,
}

impl Projector {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::InvalidInput(format!(
                "projector must be square and non-empty, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermiticity_error();
        if herm > QUANTUM_TOL {
            return Err(Error::InvalidInput(format!(
                "projector is not Hermitian (deviation {herm:e})"
            )));
        }
        let idem = (&matrix * &matrix).max_abs_diff(&matrix);
        if idem > QUANTUM_TOL {
            return Err(Error::InvalidInput(format!(
                "projector is not idempotent (deviation {idem:e})"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    /// Projector onto the line through `v`.
    pub fn rank_one(v: &[Complex64]) -> Result<Self> {
        let norm_sqr: f64 = v.iter().map(Complex64::norm_sqr).sum();
        if v.is_empty() || norm_sqr <= NULL_TOL {
            return Err(Error::InvalidInput(
                "projector direction must be non-zero".into(),
            ));
        }
        Ok(Self {
            matrix: CMatrix::outer(v).scale(1.0 / norm_sqr),
        })
    }

    /// Diagonal 0/1 projector given by an indicator.
    pub fn diagonal(event: &Event) -> Self {
        let diag: Vec<f64> = event
            .members()
            .iter()
            .map(|&m| if m { 1.0 } else { 0.0 })
            .collect();
        Self {
            matrix: CMatrix::from_diagonal(&diag),
        }
    }

    /// Projector onto the span of orthonormal `basis` vectors of length `dim`.
    fn from_basis(dim: usize, basis: &[Vec<Complex64>]) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        for v in basis {
            m = &m + &CMatrix::outer(v);
        }
        Self {
            matrix: m.hermitian_part(),
        }
    }

    /// `𝟙 - P`.
    pub fn complement(&self) -> Self {
        Self {
            matrix: &CMatrix::identity(self.dim()) - &self.matrix,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round().max(0.0) as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

impl TryFrom<CMatrix> for DensityMatrix {
    type Error = Error;

    fn try_from(m: CMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DensityMatrix> for CMatrix {
    fn from(rho: DensityMatrix) -> Self {
        rho.matrix
    }
}

impl TryFrom<CMatrix> for Projector {
    type Error = Error;

    fn try_from(m: CMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<Projector> for CMatrix {
    fn from(p: Projector) -> Self {
        p.matrix
    }
}

fn real_trace(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > IMAG_TOL {
        return Err(Error::InvariantViolation(format!(
            "{what} has imaginary part {:e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// Accepts values within [`QUANTUM_TOL`] of `[0, 1]` and clamps them; anything
/// further out means the inputs broke their invariants.
fn checked_probability(p: f64, what: &str) -> Result<f64> {
    if !(-QUANTUM_TOL..=1.0 + QUANTUM_TOL).contains(&p) {
        return Err(Error::InvariantViolation(format!(
            "{what} = {p} lies outside [0, 1]"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

fn check_same_dim(rho: &DensityMatrix, ops: &[&Projector]) -> Result<()> {
    ops.iter().try_for_each(|p| check_dim(rho.dim(), p.dim()))
}

/// `Re tr(P ρ)`, the probability of passing the test `P`.
pub fn born_prob(rho: &DensityMatrix, p: &Projector) -> Result<f64> {
    check_same_dim(rho, &[p])?;
    let tr = real_trace(
        CMatrix::trace_of_product(&p.matrix, &rho.matrix)?,
        "tr(P rho)",
    )?;
    checked_probability(tr, "tr(P rho)")
}

/// `Re tr(A ρ A B)`: the joint probability of passing `A` and then `B`.
fn sequential_mass(rho: &DensityMatrix, first: &Projector, then: &Projector) -> Result<f64> {
    let collapsed = CMatrix::sandwich(&first.matrix, &rho.matrix)?;
    real_trace(
        CMatrix::trace_of_product(&collapsed, &then.matrix)?,
        "tr(A rho A B)",
    )
}

/// Post-measurement state `P ρ P / tr(P ρ)` after the test `P` passes.
pub fn lueders_update(rho: &DensityMatrix, p: &Projector) -> Result<DensityMatrix> {
    let pass = born_prob(rho, p)?;
    if pass <= NULL_TOL {
        return Err(Error::PostSelectionOnNull(pass));
    }
    let collapsed = CMatrix::sandwich(&p.matrix, &rho.matrix)?;
    Ok(DensityMatrix::from_unnormalized(collapsed, pass))
}

/// `tr(R ρ R X) / tr(R ρ)`: probability of `X` measured after `R` passed.
///
/// Passing `r.complement()` gives `P(X|R̄)`.
pub fn cond_given_r(rho: &DensityMatrix, x: &Projector, r: &Projector) -> Result<f64> {
    check_same_dim(rho, &[x, r])?;
    let relevance = born_prob(rho, r)?;
    if relevance <= NULL_TOL {
        return Err(Error::DegenerateRelevance(relevance));
    }
    checked_probability(sequential_mass(rho, r, x)? / relevance, "P(X|R)")
}

/// `tr(X ρ X R) / tr(X ρ)`: relevance of the beam post-selected on `X`.
pub fn expansion_prob(rho: &DensityMatrix, x: &Projector, r: &Projector) -> Result<f64> {
    check_same_dim(rho, &[x, r])?;
    let pass = born_prob(rho, x)?;
    if pass <= NULL_TOL {
        return Err(Error::PostSelectionOnNull(pass));
    }
    checked_probability(sequential_mass(rho, x, r)? / pass, "P(R|X)")
}

/// Division-free boost test `tr(XρXR) > tr(Xρ) · tr(ρR)` with margin
/// [`PROB_TOL`].
pub fn boost_condition(rho: &DensityMatrix, x: &Projector, r: &Projector) -> Result<bool> {
    check_same_dim(rho, &[x, r])?;
    let lhs = sequential_mass(rho, x, r)?;
    let rhs = born_prob(rho, x)? * born_prob(rho, r)?;
    Ok(lhs > rhs + PROB_TOL)
}

/// `tr(Xρ) - [tr(RρRX) + tr(R̄ρR̄X)]`; zero when the operators commute.
pub fn ltp_residual_q(rho: &DensityMatrix, x: &Projector, r: &Projector) -> Result<f64> {
    check_same_dim(rho, &[x, r])?;
    let relevance = born_prob(rho, r)?;
    if relevance <= NULL_TOL || relevance >= 1.0 - NULL_TOL {
        return Err(Error::DegenerateRelevance(relevance));
    }
    let direct = born_prob(rho, x)?;
    let via_r = sequential_mass(rho, r, x)?;
    let via_not_r = sequential_mass(rho, &r.complement(), x)?;
    Ok(direct - (via_r + via_not_r))
}

/// Quantum counterpart of [`crate::probability::BoostReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QBoostReport {
    /// `tr(ρR)`
    pub r: f64,
    /// `tr(RρRX) / r`, measured by testing `R` and then `X`
    pub p: f64,
    /// `tr(R̄ρR̄X) / (1 - r)`
    pub q: f64,
    /// `tr(XρXR) / tr(Xρ)`
    pub x: f64,
    /// `x > r`
    pub boost: bool,
    /// `p > q`
    pub natural: bool,
    pub ltp_residual: f64,
    /// `tr(XρXR) / r`: the `X`-then-`R` ordering of `p`. Equal to `p` when
    /// `X` and `R` commute on the state.
    pub p_reversed: f64,
    /// `tr(XρXR̄) / (1 - r)`
    pub q_reversed: f64,
}

impl QBoostReport {
    /// `p_reversed > q_reversed` with the same margin as `boost`.
    pub fn natural_reversed(&self) -> bool {
        band_sign(self.p_reversed - self.q_reversed, PROB_TOL) > 0
    }
}

/// Evaluates every quantity needed to compare `x > r` against `p > q`.
pub fn quantum_equivalence(
    rho: &DensityMatrix,
    x: &Projector,
    r: &Projector,
) -> Result<QBoostReport> {
    check_same_dim(rho, &[x, r])?;
    let relevance = born_prob(rho, r)?;
    if relevance <= NULL_TOL || relevance >= 1.0 - NULL_TOL {
        return Err(Error::DegenerateRelevance(relevance));
    }
    let pass_x = born_prob(rho, x)?;
    if pass_x <= NULL_TOL {
        return Err(Error::PostSelectionOnNull(pass_x));
    }
    let not_r = r.complement();
    let p = cond_given_r(rho, x, r)?;
    let q = cond_given_r(rho, x, &not_r)?;
    let x_prob = expansion_prob(rho, x, r)?;
    let after_x = CMatrix::sandwich(&x.matrix, &rho.matrix)?;
    let x_then_r = real_trace(CMatrix::trace_of_product(&after_x, &r.matrix)?, "tr(XρXR)")?;
    let x_then_not_r = real_trace(
        CMatrix::trace_of_product(&after_x, &not_r.matrix)?,
        "tr(XρXR̄)",
    )?;
    Ok(QBoostReport {
        r: relevance,
        p,
        q,
        x: x_prob,
        boost: band_sign(x_prob - relevance, PROB_TOL) > 0,
        natural: band_sign(p - q, PROB_TOL) > 0,
        ltp_residual: ltp_residual_q(rho, x, r)?,
        p_reversed: x_then_r / relevance,
        q_reversed: x_then_not_r / (1.0 - relevance),
    })
}

/// `G G† / tr(G G†)` for a `dim × rank` complex Ginibre matrix `G`.
pub fn random_density<R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::InvalidInput(format!(
            "density rank {rank} must lie in 1..={dim}"
        )));
    }
    let g = CMatrix::ginibre(dim, rank, rng);
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    Ok(DensityMatrix::from_unnormalized(m, tr))
}

/// Projector onto a Haar-random `rank`-dimensional subspace.
pub fn random_projector<R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> Result<Projector> {
    if dim == 0 || rank > dim {
        return Err(Error::InvalidInput(format!(
            "projector rank {rank} must lie in 0..={dim}"
        )));
    }
    if rank == 0 {
        return Ok(Projector::zero(dim));
    }
    if rank == dim {
        return Ok(Projector::identity(dim));
    }
    loop {
        let basis = CMatrix::ginibre(dim, rank, rng).orthonormal_columns(1e-8);
        // a rank-deficient Gaussian draw has probability zero; redraw if seen
        if basis.len() == rank {
            return Ok(Projector::from_basis(dim, &basis));
        }
    }
}

/// Diagonal embedding of a classical triple: the commuting special case.
pub fn embed_classical(
    state: &ClassicalState,
    x_event: &Event,
    r_event: &Event,
) -> Result<(DensityMatrix, Projector, Projector)> {
    check_dim(state.dim(), x_event.dim())?;
    check_dim(state.dim(), r_event.dim())?;
    Ok((
        DensityMatrix::diagonal(state)?,
        Projector::diagonal(x_event),
        Projector::diagonal(r_event),
    ))
}
