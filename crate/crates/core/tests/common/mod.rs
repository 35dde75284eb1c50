#![allow(dead_code)]

use docuscle::experiments::Instance;
use docuscle::quantum::{self, DensityMatrix, Projector};
use docuscle::rng::seeded;
use docuscle::{ClassicalState, Event};
use num_complex::Complex64;

pub fn ket(entries: &[f64]) -> Vec<Complex64> {
    entries.iter().map(|&re| Complex64::new(re, 0.0)).collect()
}

pub fn plus() -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ket(&[s, s])
}

fn ev(dim: usize, idx: &[usize]) -> Event {
    Event::from_indices(dim, idx).unwrap()
}

/// Three classical and two quantum instances, all with `0 < r < 1` and
/// `P(X) > 0`.
pub fn fixed_instances() -> Vec<(&'static str, Instance)> {
    let c3_state = ClassicalState::random(8, 8, &mut seeded(77)).unwrap();
    let mut rng = seeded(78);
    let q2 = Instance::Quantum {
        state: quantum::random_density(4, 2, &mut rng).unwrap(),
        x: quantum::random_projector(4, 2, &mut rng).unwrap(),
        r: quantum::random_projector(4, 2, &mut rng).unwrap(),
    };
    vec![
        (
            "classical (0.4,0.1,0.2,0.3) X={1,2} R={0,1}",
            Instance::Classical {
                state: ClassicalState::new(vec![0.4, 0.1, 0.2, 0.3]).unwrap(),
                x: ev(4, &[1, 2]),
                r: ev(4, &[0, 1]),
            },
        ),
        (
            "classical uniform(4) X={0} R={0,1}",
            Instance::Classical {
                state: ClassicalState::uniform(4).unwrap(),
                x: ev(4, &[0]),
                r: ev(4, &[0, 1]),
            },
        ),
        (
            "classical random(8) X={0,2,4,5} R={1,2,3}",
            Instance::Classical {
                state: c3_state,
                x: ev(8, &[0, 2, 4, 5]),
                r: ev(8, &[1, 2, 3]),
            },
        ),
        (
            "quantum |+><+| X=|+><+| R=|0><0|",
            Instance::Quantum {
                state: DensityMatrix::pure(&plus()).unwrap(),
                x: Projector::rank_one(&plus()).unwrap(),
                r: Projector::rank_one(&ket(&[1.0, 0.0])).unwrap(),
            },
        ),
        ("quantum random dim 4, ranks 2/2/2", q2),
    ]
}
