//! Deterministic fixtures for the solver benchmarks.
//!
//! Each instance carries dissimilarities realizable by a random state plus
//! a mild multiplicative distortion, so the steppers keep moving without
//! collapsing pairs, and both update paths can be seated on the same
//! starting point.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use condmds::fastpath::EqualStepper;
use condmds::kernel::joint_distances;
use condmds::solver::GeneralStepper;

/// One benchmark instance; half the rows have free conditioning
/// coordinates.
pub struct Instance {
    pub delta: DMatrix<f64>,
    pub v1: DMatrix<f64>,
    pub u0: DMatrix<f64>,
    pub b0: DMatrix<f64>,
    pub v2t0: DMatrix<f64>,
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

pub fn unit_weights(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::from_element(n, n, 1.0);
    w.fill_diagonal(0.0);
    w
}

pub fn instance(n: usize, p: usize, q: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n2 = n / 2;
    let n1 = n - n2;
    let u = random_matrix(&mut rng, n, p);
    let vt = random_matrix(&mut rng, n, q);
    let mut delta = joint_distances(&u, &vt);
    for i in 0..n {
        for j in (i + 1)..n {
            let f = 1.0 + 0.1 * (2.0 * rng.random::<f64>() - 1.0);
            delta[(i, j)] *= f;
            delta[(j, i)] = delta[(i, j)];
        }
    }
    Instance {
        delta,
        v1: random_matrix(&mut rng, n1, q),
        u0: random_matrix(&mut rng, n, p),
        b0: random_matrix(&mut rng, q, q),
        v2t0: random_matrix(&mut rng, n2, q),
    }
}

impl Instance {
    pub fn n(&self) -> usize {
        self.delta.nrows()
    }

    pub fn equal_stepper(&self) -> EqualStepper {
        EqualStepper::from_parts(
            self.delta.clone(),
            self.v1.clone(),
            self.u0.clone(),
            self.b0.clone(),
            self.v2t0.clone(),
        )
        .unwrap()
    }

    pub fn general_stepper(&self) -> GeneralStepper {
        GeneralStepper::from_parts(
            self.delta.clone(),
            unit_weights(self.n()),
            self.v1.clone(),
            self.u0.clone(),
            self.b0.clone(),
            self.v2t0.clone(),
        )
        .unwrap()
    }
}
