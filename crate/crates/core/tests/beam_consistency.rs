mod common;

use docuscle::beam::{self, estimate, ltp_residual_estimate, ExperimentKind, Quantity};
use docuscle::experiments::Instance;
use docuscle::quantum::embed_classical;

use common::fixed_instances;

#[test]
fn estimates_track_exact_values_as_n_grows() {
    for (name, instance) in fixed_instances() {
        for kind in ExperimentKind::ALL {
            let pipeline = instance.pipeline(kind).unwrap();
            let exact = instance.exact(kind.quantity()).unwrap();
            for n in [1_000, 10_000, 100_000] {
                let est = estimate(&beam::run(&pipeline, n, 31).unwrap())
                    .get(kind.quantity())
                    .unwrap();
                assert!(
                    est.within(exact, 5.0),
                    "{name} {kind:?} n={n}: {} vs {exact} (se {})",
                    est.value,
                    est.std_error
                );
            }
        }
    }
}

#[test]
fn embedded_instances_simulate_like_classical_ones() {
    for (name, instance) in fixed_instances() {
        let Instance::Classical { state, x, r } = &instance else {
            continue;
        };
        let (state_q, x_q, r_q) = embed_classical(state, x, r).unwrap();
        let embedded = Instance::Quantum {
            state: state_q,
            x: x_q,
            r: r_q,
        };
        for kind in ExperimentKind::ALL {
            let exact = instance.exact(kind.quantity()).unwrap();
            assert!((embedded.exact(kind.quantity()).unwrap() - exact).abs() < 1e-12);
            for inst in [&instance, &embedded] {
                let est = estimate(&beam::run(&inst.pipeline(kind).unwrap(), 50_000, 5).unwrap())
                    .get(kind.quantity())
                    .unwrap();
                assert!(est.within(exact, 5.0), "{name} {kind:?}");
            }
        }
    }
}

#[test]
fn interference_shows_up_in_simulated_ltp_residual() {
    let (_, instance) = fixed_instances().remove(3);
    let n = 100_000;
    let est = |kind: ExperimentKind, seed| {
        estimate(&beam::run(&instance.pipeline(kind).unwrap(), n, seed).unwrap())
            .get(kind.quantity())
            .unwrap()
    };
    let residual = ltp_residual_estimate(
        est(ExperimentKind::E4, 1),
        est(ExperimentKind::E1, 2),
        est(ExperimentKind::E2, 3),
        est(ExperimentKind::E3, 4),
    );
    let exact = instance.ltp_residual().unwrap();
    assert!((exact - 0.5).abs() < 1e-12);
    assert!(residual.within(exact, 5.0), "{residual:?}");
}

#[test]
fn absent_quantities_are_reported_as_such() {
    let (_, instance) = fixed_instances().remove(0);
    let table = beam::run(&instance.pipeline(ExperimentKind::E2).unwrap(), 100, 1).unwrap();
    let est = estimate(&table);
    assert!(est.get(Quantity::P).is_ok());
    for q in [Quantity::R, Quantity::Q, Quantity::X, Quantity::PX] {
        assert!(est.get(q).is_err());
    }
}
