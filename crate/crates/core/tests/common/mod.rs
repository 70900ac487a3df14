#![allow(dead_code)]

use ddtraj::oracle::{self, example1_linear_model, simulate, uniform_signal, StateSpaceModel};
use ddtraj::{Signal, Trajectory};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Noise-free record of `model` from `x0 = 0` driven by i.i.d. uniform input on `[-amp, amp]`.
pub fn record(model: &StateSpaceModel, len: usize, amp: f64, rng: &mut impl Rng) -> Trajectory {
    let u = uniform_signal(rng, model.input_dim(), len, -amp, amp).unwrap();
    simulate(model, &DVector::zeros(model.order()), &u)
        .unwrap()
        .trajectory(&u)
        .unwrap()
}

pub fn linear_record(len: usize, seed: u64) -> Trajectory {
    record(&example1_linear_model(), len, 1.0, &mut rng(seed))
}

pub fn random_state(n: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0))
}

/// Trajectory of `model` from a random initial state with random uniform input.
pub fn random_trajectory(model: &StateSpaceModel, len: usize, rng: &mut impl Rng) -> Trajectory {
    let x0 = random_state(model.order(), rng);
    let u = uniform_signal(rng, model.input_dim(), len, -1.0, 1.0).unwrap();
    simulate(model, &x0, &u).unwrap().trajectory(&u).unwrap()
}

pub fn with_output_bump(t: &Trajectory, k: usize, delta: f64) -> Trajectory {
    let mut y = t.y().as_slice().to_vec();
    y[k] += delta;
    Trajectory::new(t.u().clone(), Signal::new(t.output_dim(), y).unwrap()).unwrap()
}

pub fn rel_rms(predicted: &Signal, truth: &Signal) -> f64 {
    let p = predicted.stacked();
    let t = truth.stacked();
    (p - &t).norm() / t.norm()
}

/// Rank by Gaussian elimination with complete pivoting. Independent of the SVD path
/// used by the library.
pub fn elimination_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let scale = a.amax();
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for step in 0..rows.min(cols) {
        let mut best = (step, step, 0.0);
        for i in step..rows {
            for j in step..cols {
                if a[(i, j)].abs() > best.2 {
                    best = (i, j, a[(i, j)].abs());
                }
            }
        }
        if best.2 <= rel_tol * scale {
            break;
        }
        a.swap_rows(step, best.0);
        a.swap_columns(step, best.1);
        let pivot = a[(step, step)];
        for i in step + 1..rows {
            let f = a[(i, step)] / pivot;
            if f != 0.0 {
                for j in step..cols {
                    let v = a[(step, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Re-simulates `t` from the initial state reconstructed out of its first `n` samples
/// and returns the largest output deviation.
pub fn resimulation_error(model: &StateSpaceModel, t: &Trajectory) -> f64 {
    let x0 = oracle::reconstruct_initial_state(model, t).unwrap().x0;
    let y = simulate(model, &x0, t.u()).unwrap().y;
    (y.stacked() - t.y().stacked()).amax()
}
