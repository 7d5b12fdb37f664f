//! Probability vectors over nodes and joint distributions over node pairs.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankKind {
    /// Reputation, stationary of the forward chain.
    Pull,
    /// Promotion, stationary of the backward chain.
    Push,
    ForwardOut,
    BackwardIn,
    Stationary,
    Empirical,
}

/// Diagnostics from the iteration that produced a distribution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub residual: f64,
    /// Dominant eigenvalue; 1 for stochastic chains.
    pub eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub values: Vec<f64>,
    pub label: RankKind,
    pub convergence: Option<Convergence>,
}

impl Distribution {
    pub fn new(values: Vec<f64>, label: RankKind) -> Self {
        Self {
            values,
            label,
            convergence: None,
        }
    }

    pub fn uniform(n: usize, label: RankKind) -> Self {
        Self::new(vec![1.0 / n as f64; n], label)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        crate::information::entropy_bits(&self.values)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JointKind {
    Capacity,
    ExpectedFlow,
    NodeAttraction,
    Empirical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    pub values: Matrix,
    pub label: JointKind,
}

impl JointDistribution {
    pub fn new(values: Matrix, label: JointKind) -> Self {
        Self { values, label }
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.values.row_sums()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        self.values.col_sums()
    }

    pub fn sum(&self) -> f64 {
        self.values.total()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[(j, k)]
    }
}

/// Rescale a nonnegative vector to unit sum in place; returns the old sum.
pub(crate) fn normalize(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
    s
}
