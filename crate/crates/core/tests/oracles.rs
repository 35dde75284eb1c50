//! Cross-checks against an independent linear-algebra path (nalgebra) and
//! hand-computed 2×2 values.

use docuscle::quantum::{self, DensityMatrix, Projector};
use docuscle::rng::seeded;
use docuscle::CMatrix;
use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use rand::Rng;

fn to_na(m: &CMatrix) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        let z = m[(i, j)];
        Complex::new(z.re, z.im)
    })
}

fn na_trace(m: &DMatrix<Complex<f64>>) -> Complex<f64> {
    m.trace()
}

fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    to_na(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect()
}

#[test]
fn random_density_has_requested_rank() {
    let mut rng = seeded(404);
    for dim in 1..=6 {
        for rank in 1..=dim {
            let rho = quantum::random_density(dim, rank, &mut rng).unwrap();
            let eig = eigenvalues(rho.matrix());
            assert!(eig.iter().all(|&e| e >= -1e-10), "{eig:?}");
            assert!((eig.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            assert_eq!(eig.iter().filter(|&&e| e > 1e-8).count(), rank);
        }
    }
}

#[test]
fn random_projector_spectrum_is_zero_one() {
    let mut rng = seeded(405);
    for dim in 1..=6 {
        for rank in 0..=dim {
            let p = quantum::random_projector(dim, rank, &mut rng).unwrap();
            let eig = eigenvalues(p.matrix());
            let ones = eig.iter().filter(|&&e| (e - 1.0).abs() < 1e-10).count();
            let zeros = eig.iter().filter(|&&e| e.abs() < 1e-10).count();
            assert_eq!((ones, zeros), (rank, dim - rank));
        }
    }
}

#[test]
fn psd_check_agrees_with_spectrum() {
    let mut rng = seeded(406);
    for _ in 0..200 {
        let dim = rng.random_range(1..=5);
        let g = CMatrix::ginibre(dim, dim, &mut rng);
        // Hermitian with a random shift so that some are indefinite
        let h = (&g + &g.adjoint()).scale(0.5);
        let shift = rng.random_range(0.0..4.0);
        let m = &h + &CMatrix::identity(dim).scale(shift);
        let min = eigenvalues(&m).into_iter().fold(f64::INFINITY, f64::min);
        if (min + 1e-10).abs() > 1e-6 {
            assert_eq!(
                m.is_psd_within(1e-10),
                min >= -1e-10,
                "min eigenvalue {min}"
            );
        }
    }
}

#[test]
fn trace_formulas_match_nalgebra() {
    let mut rng = seeded(407);
    for _ in 0..300 {
        let dim = rng.random_range(2..=6);
        let rho = quantum::random_density(dim, rng.random_range(1..=dim), &mut rng).unwrap();
        let x = quantum::random_projector(dim, rng.random_range(1..dim), &mut rng).unwrap();
        let r = quantum::random_projector(dim, rng.random_range(1..dim), &mut rng).unwrap();
        let (nr, nx, nrho) = (to_na(r.matrix()), to_na(x.matrix()), to_na(rho.matrix()));
        let id = DMatrix::<Complex<f64>>::identity(dim, dim);
        let nrbar = &id - &nr;

        let r_prob = na_trace(&(&nr * &nrho)).re;
        let x_prob = na_trace(&(&nx * &nrho)).re;
        let p = na_trace(&(&nr * &nrho * &nr * &nx)).re / r_prob;
        let q = na_trace(&(&nrbar * &nrho * &nrbar * &nx)).re / (1.0 - r_prob);
        let xr = na_trace(&(&nx * &nrho * &nx * &nr)).re / x_prob;
        let ltp = x_prob - r_prob * p - (1.0 - r_prob) * q;

        let rep = quantum::quantum_equivalence(&rho, &x, &r).unwrap();
        for (a, b) in [
            (rep.r, r_prob),
            (rep.p, p),
            (rep.q, q),
            (rep.x, xr),
            (rep.ltp_residual, ltp),
        ] {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Hand arithmetic in dim 2, |+⟩ = (1,1)/√2:
/// |+⟩⟨+| = [[1/2, 1/2], [1/2, 1/2]], |0⟩⟨0| |+⟩⟨+| |0⟩⟨0| = [[1/2, 0], [0, 0]],
/// and tr([[1/2, 0], [0, 0]] |+⟩⟨+|) = 1/4.
#[test]
fn two_by_two_hand_values() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = [c(s), c(s)];
    let zero = [c(1.0), c(0.0)];
    let one = [c(0.0), c(1.0)];
    let rho_plus = DensityMatrix::pure(&plus).unwrap();
    let p0 = Projector::rank_one(&zero).unwrap();
    let p1 = Projector::rank_one(&one).unwrap();
    let pplus = Projector::rank_one(&plus).unwrap();

    assert!((quantum::born_prob(&rho_plus, &p0).unwrap() - 0.5).abs() < 1e-15);
    // P(X|R) = (1/4) / (1/2)
    assert!((quantum::cond_given_r(&rho_plus, &pplus, &p0).unwrap() - 0.5).abs() < 1e-15);
    // 1 - (1/4 + 1/4)
    assert!((quantum::ltp_residual_q(&rho_plus, &pplus, &p0).unwrap() - 0.5).abs() < 1e-15);
    // ρ = |0⟩⟨0|, X = |+⟩⟨+|: XρX = |+⟩⟨+|/2, tr(XρX |1⟩⟨1|) = 1/4, tr(Xρ) = 1/2
    let rho0 = DensityMatrix::pure(&zero).unwrap();
    assert!((quantum::expansion_prob(&rho0, &pplus, &p1).unwrap() - 0.5).abs() < 1e-15);
}
