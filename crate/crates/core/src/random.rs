//! Random states and observables for property suites and self-tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::classical::MarginalSet;
use crate::histories::HistoryFamily;
use crate::qmat::{bloch_observable, ComplexMatrix, Observable, State, C64};

/// Independent generator for draw `index` of a seeded batch, so batches can
/// be split across threads without changing any draw.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let entries = (0..dim * dim).map(|_| gaussian_c64(rng)).collect();
    ComplexMatrix::from_vec(entries).expect("square by construction")
}

/// Random Hermitian matrix `(G + G†)/2` with Gaussian `G`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Haar-distributed unitary via Gram-Schmidt on a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v: Vec<C64> = (0..dim).map(|i| g[(i, j)]).collect();
        for u in &cols {
            let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    let mut u = ComplexMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            u[(i, j)] = *z;
        }
    }
    u
}

/// Uniform point on the unit sphere.
pub fn unit_vector3<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Full-rank mixed state `GG†/Tr(GG†)` from a Ginibre matrix.
pub fn mixed_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> State {
    let g = ginibre(rng, dim);
    let rho = g.matmul(&g.adjoint());
    let tr = rho.trace().re;
    let mut rho = rho.scale_real(1.0 / tr);
    for i in 0..dim {
        rho[(i, i)] = C64::new(rho[(i, i)].re, 0.0);
        for j in (i + 1)..dim {
            let avg = (rho[(i, j)] + rho[(j, i)].conj()) * 0.5;
            rho[(i, j)] = avg;
            rho[(j, i)] = avg.conj();
        }
    }
    let tr = rho.trace().re;
    State::new(rho.scale_real(1.0 / tr)).expect("Ginibre state is valid")
}

/// Haar-random pure state.
pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> State {
    let ket: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
    State::pure(&ket).expect("nonzero Gaussian ket")
}

/// Mixed or pure with equal odds, so both kinds of branch structure appear.
pub fn state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> State {
    if rng.random_bool(0.5) {
        pure_state(rng, dim)
    } else {
        mixed_state(rng, dim)
    }
}

/// `n·σ` for a uniformly random Bloch direction.
pub fn qubit_observable<R: Rng + ?Sized>(rng: &mut R) -> Observable {
    bloch_observable(unit_vector3(rng)).expect("unit vector")
}

/// `U D U†` with a random ±1 diagonal `D` (both signs present when dim ≥ 2).
pub fn observable<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Observable {
    let u = unitary(rng, dim);
    let plus = if dim >= 2 { rng.random_range(1..dim) } else { 1 };
    let diag: Vec<f64> = (0..dim).map(|i| if i < plus { 1.0 } else { -1.0 }).collect();
    let m = u.matmul(&ComplexMatrix::diagonal(&diag)).matmul(&u.adjoint());
    Observable::new((&m + &m.adjoint()).scale_real(0.5)).expect("dichotomic by construction")
}

/// Qubit state (pure or mixed) with three random dichotomic observables.
pub fn qubit_history_family<R: Rng + ?Sized>(rng: &mut R) -> HistoryFamily {
    let rho = state(rng, 2);
    let obs = [qubit_observable(rng), qubit_observable(rng), qubit_observable(rng)];
    HistoryFamily::from_observables(rho, [&obs[0], &obs[1], &obs[2]]).expect("qubit family")
}

/// No-disturbance pair marginals of an `n`-cycle: uniform singles in
/// `[−1, 1]`, each correlator uniform over the range keeping all four cells
/// nonnegative. Some are classical, some are not.
pub fn marginal_set<R: Rng + ?Sized>(rng: &mut R, n: usize) -> MarginalSet {
    let singles: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let pairs = (0..n)
        .map(|i| {
            let (a, b) = (singles[i], singles[(i + 1) % n]);
            let lo = (a + b).abs() - 1.0;
            let hi = 1.0 - (a - b).abs();
            let c = lo + (hi - lo) * rng.random::<f64>();
            [
                (1.0 + a + b + c) / 4.0,
                (1.0 + a - b - c) / 4.0,
                (1.0 - a + b - c) / 4.0,
                (1.0 - a - b + c) / 4.0,
            ]
            .map(|p: f64| p.max(0.0))
        })
        .collect();
    MarginalSet::new(pairs).expect("cells nonnegative by construction")
}
