//! Markov dynamics derived from a capacity matrix: forward (pull) and
//! backward (push) chains, forward-out / backward-in scores, and
//! teleportation with a preference matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{capacity_of, CapacityMatrix};
use crate::matrix::Matrix;

const STOCHASTIC_TOL: f64 = 1e-9;

/// Row chains evolve row vectors (`π = πM`); column chains evolve column
/// vectors (`π = Mπ`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Row,
    Column,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicsKind {
    Forward,
    Backward,
    ForwardOut,
    BackwardIn,
    Teleported,
    Custom,
}

/// How nodes without out-links (resp. in-links) are patched.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum DanglingPolicy {
    /// Add a link of cost `fix_cost` between every ordered pair of nodes.
    Complete {
        fix_cost: f64,
    },
    /// Adjoin one fresh node with links of cost `fix_cost` to and from every node.
    Phantom {
        fix_cost: f64,
    },
    Reject,
}

pub const DEFAULT_FIX_COST: f64 = 30.0;
pub const DEFAULT_DAMPING: f64 = 0.85;

impl Default for DanglingPolicy {
    fn default() -> Self {
        DanglingPolicy::Complete {
            fix_cost: DEFAULT_FIX_COST,
        }
    }
}

/// A chain matrix. Forward-out and backward-in carry raw scores, which are
/// not stochastic; their ranks are Perron vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticChain {
    matrix: Matrix,
    orientation: Orientation,
    kind: DynamicsKind,
    stochastic: bool,
    phantom: bool,
}

impl StochasticChain {
    /// A user-supplied chain; must be stochastic in its orientation.
    pub fn new(matrix: Matrix, orientation: Orientation) -> Result<Self> {
        check_stochastic(&matrix, orientation)?;
        Ok(Self {
            matrix,
            orientation,
            kind: DynamicsKind::Custom,
            stochastic: true,
            phantom: false,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn kind(&self) -> DynamicsKind {
        self.kind
    }

    pub fn is_stochastic(&self) -> bool {
        self.stochastic
    }

    /// True if the last state is an adjoined phantom node.
    pub fn has_phantom(&self) -> bool {
        self.phantom
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    /// One step of the chain on a distribution.
    pub fn step(&self, x: &[f64]) -> Vec<f64> {
        match self.orientation {
            Orientation::Row => self.matrix.left_mul(x),
            Orientation::Column => self.matrix.right_mul(x),
        }
    }

    /// Transition probabilities out of `state`: a row for row chains, a
    /// column for column chains.
    pub fn transitions(&self, state: usize) -> Vec<f64> {
        match self.orientation {
            Orientation::Row => self.matrix.row(state).to_vec(),
            Orientation::Column => (0..self.size()).map(|i| self.matrix[(i, state)]).collect(),
        }
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.matrix.as_slice().iter().all(|&x| x > 0.0)
    }
}

fn check_stochastic(m: &Matrix, orientation: Orientation) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    if m.as_slice().iter().any(|&x| x.is_nan() || x < 0.0) {
        return Err(Error::InvalidParameter(
            "chain entries must be nonnegative".into(),
        ));
    }
    let sums = match orientation {
        Orientation::Row => m.row_sums(),
        Orientation::Column => m.col_sums(),
    };
    if let Some(bad) = sums.iter().position(|s| (s - 1.0).abs() > STOCHASTIC_TOL) {
        return Err(Error::InvalidParameter(format!(
            "{orientation:?} {bad} sums to {} rather than 1",
            sums[bad]
        )));
    }
    Ok(())
}

/// Patch zero rows (`rows`) and/or zero columns (`cols`). Returns the
/// matrix to normalize and whether a phantom node was appended.
fn patch_dangling(
    a: &CapacityMatrix,
    policy: DanglingPolicy,
    rows: bool,
    cols: bool,
) -> Result<(Matrix, bool)> {
    let m = a.matrix();
    let n = a.n();
    let zero_row = if rows {
        m.row_sums().iter().position(|&s| s <= 0.0)
    } else {
        None
    };
    let zero_col = if cols {
        m.col_sums().iter().position(|&s| s <= 0.0)
    } else {
        None
    };
    if zero_row.is_none() && zero_col.is_none() {
        return Ok((m.clone(), false));
    }
    match policy {
        DanglingPolicy::Reject => {
            let (node, direction) = match (zero_row, zero_col) {
                (Some(i), _) => (i, "out"),
                (None, Some(j)) => (j, "in"),
                (None, None) => unreachable!(),
            };
            Err(Error::Dangling {
                node: node.to_string(),
                direction,
            })
        }
        DanglingPolicy::Complete { fix_cost } => {
            let eps = capacity_of(fix_cost);
            Ok((m.map(|x| x + eps), false))
        }
        DanglingPolicy::Phantom { fix_cost } => {
            let eps = capacity_of(fix_cost);
            let patched = Matrix::from_fn(n + 1, n + 1, |i, j| match (i == n, j == n) {
                (false, false) => m[(i, j)],
                (true, true) => 0.0,
                _ => eps,
            });
            Ok((patched, true))
        }
    }
}

fn chain(
    matrix: Matrix,
    orientation: Orientation,
    kind: DynamicsKind,
    stochastic: bool,
    phantom: bool,
) -> StochasticChain {
    StochasticChain {
        matrix,
        orientation,
        kind,
        stochastic,
        phantom,
    }
}

/// Pull coefficients `A_ij / A_i•`; row-stochastic.
pub fn forward(a: &CapacityMatrix, policy: DanglingPolicy) -> Result<StochasticChain> {
    let (m, phantom) = patch_dangling(a, policy, true, false)?;
    let out = m.row_sums();
    let p = Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] / out[i]);
    Ok(chain(
        p,
        Orientation::Row,
        DynamicsKind::Forward,
        true,
        phantom,
    ))
}

/// Push coefficients `A_ij / A_•j`; column-stochastic.
pub fn backward(a: &CapacityMatrix, policy: DanglingPolicy) -> Result<StochasticChain> {
    let (m, phantom) = patch_dangling(a, policy, false, true)?;
    let inn = m.col_sums();
    let p = Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] / inn[j]);
    Ok(chain(
        p,
        Orientation::Column,
        DynamicsKind::Backward,
        true,
        phantom,
    ))
}

/// Raw forward-out scores `A_ij·A_j• / (A_i•·A_••)`.
pub fn forward_out(a: &CapacityMatrix, policy: DanglingPolicy) -> Result<StochasticChain> {
    let (m, phantom) = patch_dangling(a, policy, true, false)?;
    let out = m.row_sums();
    let total = m.total();
    let s = Matrix::from_fn(m.rows(), m.cols(), |i, j| {
        m[(i, j)] * out[j] / (out[i] * total)
    });
    Ok(chain(
        s,
        Orientation::Row,
        DynamicsKind::ForwardOut,
        false,
        phantom,
    ))
}

/// Raw backward-in scores `A_•i·A_ij / (A_••·A_•j)`.
pub fn backward_in(a: &CapacityMatrix, policy: DanglingPolicy) -> Result<StochasticChain> {
    let (m, phantom) = patch_dangling(a, policy, false, true)?;
    let inn = m.col_sums();
    let total = m.total();
    let s = Matrix::from_fn(m.rows(), m.cols(), |i, j| {
        inn[i] * m[(i, j)] / (total * inn[j])
    });
    Ok(chain(
        s,
        Orientation::Column,
        DynamicsKind::BackwardIn,
        false,
        phantom,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TeleportParams {
    /// Probability of following the chain, strictly inside (0, 1).
    pub damping: f64,
    /// Preference matrix; `None` means uniform `1/N`.
    pub preference: Option<Matrix>,
}

impl Default for TeleportParams {
    fn default() -> Self {
        Self {
            damping: DEFAULT_DAMPING,
            preference: None,
        }
    }
}

impl TeleportParams {
    pub fn new(damping: f64) -> Self {
        Self {
            damping,
            preference: None,
        }
    }

    pub fn with_preference(mut self, preference: Matrix) -> Self {
        self.preference = Some(preference);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping {} outside (0, 1)",
                self.damping
            )));
        }
        Ok(())
    }

    /// The preference matrix for an `n`-state chain of the given orientation.
    pub fn preference_for(&self, n: usize, orientation: Orientation) -> Result<Matrix> {
        match &self.preference {
            None => Ok(Matrix::filled(n, n, 1.0 / n as f64)),
            Some(p) => {
                if p.rows() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        got: p.rows(),
                    });
                }
                check_stochastic(p, orientation)?;
                Ok(p.clone())
            }
        }
    }
}

/// `δ·M + (1−δ)·P`.
pub fn teleport(chain: &StochasticChain, tp: &TeleportParams) -> Result<StochasticChain> {
    tp.validate()?;
    let p = tp.preference_for(chain.size(), chain.orientation)?;
    Ok(StochasticChain {
        matrix: chain.matrix.combine(tp.damping, &p, 1.0 - tp.damping),
        orientation: chain.orientation,
        kind: DynamicsKind::Teleported,
        stochastic: chain.stochastic,
        phantom: chain.phantom,
    })
}
