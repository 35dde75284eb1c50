use docuscle::probability::{self, band_sign, ClassicalState, Event, PROB_TOL};
use docuscle::quantum::{self, embed_classical, DensityMatrix, Projector, QUANTUM_TOL};
use docuscle::rng::seeded;
use docuscle::{CMatrix, Error};
use proptest::prelude::*;

fn state_and_events() -> impl Strategy<Value = (ClassicalState, Event, Event)> {
    (1usize..=10).prop_flat_map(|dim| {
        (
            prop::collection::vec(0.0f64..1.0, dim),
            prop::collection::vec(any::<bool>(), dim),
            prop::collection::vec(any::<bool>(), dim),
        )
            .prop_filter_map("zero mass", |(w, a, b)| {
                let total: f64 = w.iter().sum();
                if total <= 1e-6 {
                    return None;
                }
                let state = ClassicalState::new(w.iter().map(|x| x / total).collect()).ok()?;
                Some((state, Event::new(a), Event::new(b)))
            })
    })
}

/// Seeded random quantum triple with ranks drawn from the seed.
fn quantum_triple(seed: u64, dim: usize) -> (DensityMatrix, Projector, Projector) {
    use rand::Rng;
    let mut rng = seeded(seed);
    let rank = rng.random_range(1..=dim);
    let xr = rng.random_range(1..dim);
    let rr = rng.random_range(1..dim);
    (
        quantum::random_density(dim, rank, &mut rng).unwrap(),
        quantum::random_projector(dim, xr, &mut rng).unwrap(),
        quantum::random_projector(dim, rr, &mut rng).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn prob_is_additive_on_disjoint_events((s, a, b) in state_and_events()) {
        let b_only = b.intersection(&a.complement()).unwrap();
        let union = a.union(&b_only).unwrap();
        let lhs = s.prob(&union).unwrap();
        let rhs = s.prob(&a).unwrap() + s.prob(&b_only).unwrap();
        prop_assert!((lhs - rhs).abs() <= PROB_TOL);
    }

    #[test]
    fn condition_then_prob_is_cond_prob((s, a, b) in state_and_events()) {
        match s.condition(&b) {
            Ok(c) => {
                let direct = s.cond_prob(&a, &b).unwrap();
                prop_assert!((c.prob(&a).unwrap() - direct).abs() <= PROB_TOL);
                prop_assert!((c.weights().iter().sum::<f64>() - 1.0).abs() <= PROB_TOL);
            }
            Err(e) => prop_assert!(matches!(e, Error::ConditioningOnNull(_))),
        }
    }

    #[test]
    fn classical_ltp_holds((s, x, r) in state_and_events()) {
        if let Ok(res) = probability::ltp_residual(&s, &x, &r) {
            prop_assert!(res.abs() <= PROB_TOL);
        }
    }

    #[test]
    fn classical_boost_iff_natural((s, x, r) in state_and_events()) {
        if let Ok(b) = probability::boost_indicators(&s, &x, &r) {
            prop_assert_eq!(b.boost, b.natural);
            prop_assert_eq!(band_sign(b.x - b.r, PROB_TOL), band_sign(b.p - b.q, PROB_TOL));
        }
    }

    #[test]
    fn embedding_matches_classical((s, x, r) in state_and_events()) {
        let (rho, xq, rq) = embed_classical(&s, &x, &r).unwrap();
        let born = quantum::born_prob(&rho, &rq).unwrap();
        prop_assert!((born - s.prob(&r).unwrap()).abs() <= PROB_TOL);
        if let Ok(b) = probability::boost_indicators(&s, &x, &r) {
            let q = quantum::quantum_equivalence(&rho, &xq, &rq).unwrap();
            for (a, c) in [(b.r, q.r), (b.p, q.p), (b.q, q.q), (b.x, q.x)] {
                prop_assert!((a - c).abs() <= PROB_TOL);
            }
            prop_assert!(q.ltp_residual.abs() <= QUANTUM_TOL);
            prop_assert_eq!(b.boost, q.boost);
        }
    }

    #[test]
    fn lueders_is_idempotent(seed in any::<u64>(), dim in 2usize..=6) {
        let (rho, x, _) = quantum_triple(seed, dim);
        if let Ok(once) = quantum::lueders_update(&rho, &x) {
            let twice = quantum::lueders_update(&once, &x).unwrap();
            prop_assert!(twice.matrix().max_abs_diff(once.matrix()) <= QUANTUM_TOL);
            prop_assert!(DensityMatrix::new(once.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn post_selected_mass_splits_over_relevance(seed in any::<u64>(), dim in 2usize..=6) {
        let (rho, x, r) = quantum_triple(seed, dim);
        let after_x = &(x.matrix() * rho.matrix()) * x.matrix();
        let with_r = CMatrix::trace_of_product(&after_x, r.matrix()).unwrap().re;
        let with_not_r = CMatrix::trace_of_product(&after_x, r.complement().matrix()).unwrap().re;
        let pass = quantum::born_prob(&rho, &x).unwrap();
        prop_assert!((with_r + with_not_r - pass).abs() <= QUANTUM_TOL);
    }

    #[test]
    fn conditionals_match_collapse_then_born(seed in any::<u64>(), dim in 2usize..=6) {
        let (rho, x, r) = quantum_triple(seed, dim);
        let p = quantum::cond_given_r(&rho, &x, &r).unwrap();
        let via = quantum::born_prob(&quantum::lueders_update(&rho, &r).unwrap(), &x).unwrap();
        prop_assert!((p - via).abs() <= QUANTUM_TOL);
        let e = quantum::expansion_prob(&rho, &x, &r).unwrap();
        let via = quantum::born_prob(&quantum::lueders_update(&rho, &x).unwrap(), &r).unwrap();
        prop_assert!((e - via).abs() <= QUANTUM_TOL);
    }

    #[test]
    fn reported_values_are_probabilities(seed in any::<u64>(), dim in 2usize..=6) {
        let (rho, x, r) = quantum_triple(seed, dim);
        if let Ok(rep) = quantum::quantum_equivalence(&rho, &x, &r) {
            for v in [rep.r, rep.p, rep.q, rep.x] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert_eq!(rep.boost, rep.natural_reversed());
        }
    }

    #[test]
    fn density_round_trips_through_json(seed in any::<u64>(), dim in 1usize..=5) {
        let mut rng = seeded(seed);
        let rho = quantum::random_density(dim, dim, &mut rng).unwrap();
        let json = serde_json::to_string(&rho).unwrap();
        let back: DensityMatrix = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, rho);
    }
}
