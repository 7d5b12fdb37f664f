#![allow(dead_code)]

use netcoh::matrix::Matrix;
use netcoh::Network;
use rand::{Rng, RngExt};

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Edges `i -> j` for `i < j`, each present with probability `density`.
pub fn random_dag(rng: &mut impl Rng, n: usize, density: f64, lo: f64, hi: f64) -> Network {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < density {
                edges.push((i, j, uniform(rng, lo, hi)));
            }
        }
    }
    Network::from_indices(n, &edges).unwrap()
}

/// Every ordered pair, self-loops included, each present with probability
/// `density`; `ring` forces `i -> i+1 (mod n)`.
pub fn random_digraph(
    rng: &mut impl Rng,
    n: usize,
    density: f64,
    lo: f64,
    hi: f64,
    ring: bool,
) -> Network {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if (ring && j == (i + 1) % n) || rng.random::<f64>() < density {
                edges.push((i, j, uniform(rng, lo, hi)));
            }
        }
    }
    Network::from_indices(n, &edges).unwrap()
}

pub fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Dense `M` with `M e_j = step(e_j)`, so `step(x) = M x`.
pub fn operator_matrix(n: usize, step: impl Fn(&[f64]) -> Vec<f64>) -> nalgebra::DMatrix<f64> {
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for (i, x) in step(&e).into_iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    m
}

/// Fixed point of a column-stochastic `m` with unit mass, by replacing one
/// row of `m − I` with the normalization constraint.
pub fn solve_stationary(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut sys = m - nalgebra::DMatrix::identity(n, n);
    let mut rhs = nalgebra::DVector::zeros(n);
    for j in 0..n {
        sys[(n - 1, j)] = 1.0;
    }
    rhs[n - 1] = 1.0;
    let x = sys.lu().solve(&rhs).expect("stationary system is singular");
    x.iter().copied().collect()
}

pub fn to_dense(m: &Matrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}
