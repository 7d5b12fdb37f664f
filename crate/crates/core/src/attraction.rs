//! Attraction dynamics on node pairs, node attraction, attraction bias, and
//! the marginal diagnostics against the forward-out / backward-in ranks.

use serde::Serialize;

use crate::completion::CompletedNetwork;
use crate::dist::{Convergence, Distribution, JointDistribution, JointKind};
use crate::error::{Error, Result};
use crate::graph::{bias_against_product, capacity_matrix, BiasMatrix, CapacityMatrix};
use crate::information::mutual_information;
use crate::matrix::{linf_distance, Matrix};
use crate::path_network::{build_path_network, node_attraction, path_ranks, PathNetwork};
use crate::ranking::{
    bi_rank, fo_rank, is_irreducible, power_iteration, RankMode, RankOptions, StationaryConfig,
};

/// The pair chain `T_(iℓ)→(jk) = A_ij·A_jk·A_kℓ / D_iℓ` with
/// `D = A·A·A`, kept in factored form.
#[derive(Clone, Debug)]
pub struct AttractionOperator {
    a: Matrix,
    at: Matrix,
    denominators: Matrix,
    excluded: Vec<(usize, usize)>,
}

pub fn attraction_dynamics(a: &CapacityMatrix) -> AttractionOperator {
    let m = a.matrix().clone();
    let denominators = m.matmul(&m).matmul(&m);
    let n = m.rows();
    let excluded = (0..n)
        .flat_map(|i| (0..n).map(move |l| (i, l)))
        .filter(|&(i, l)| denominators[(i, l)] <= 0.0)
        .collect();
    AttractionOperator {
        at: m.transpose(),
        a: m,
        denominators,
        excluded,
    }
}

impl AttractionOperator {
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn capacity(&self) -> &Matrix {
        &self.a
    }

    /// `D_iℓ = Σ_mn A_im A_mn A_nℓ`.
    pub fn denominators(&self) -> &Matrix {
        &self.denominators
    }

    /// Pairs with `D_iℓ = 0`; mass there is dropped.
    pub fn excluded(&self) -> &[(usize, usize)] {
        &self.excluded
    }

    /// Single transition probability from pair `(i, l)` to pair `(j, k)`.
    pub fn transition(&self, (i, l): (usize, usize), (j, k): (usize, usize)) -> f64 {
        let d = self.denominators[(i, l)];
        if d <= 0.0 {
            return 0.0;
        }
        self.a[(i, j)] * self.a[(j, k)] * self.a[(k, l)] / d
    }

    /// `T(m) = A ⊙ (Aᵀ · (m ⊘ D) · Aᵀ)`, O(N³).
    pub fn apply(&self, m: &Matrix) -> Matrix {
        let n = self.n();
        let w = Matrix::from_fn(n, n, |i, l| {
            let d = self.denominators[(i, l)];
            if d > 0.0 {
                m[(i, l)] / d
            } else {
                0.0
            }
        });
        self.a.hadamard(&self.at.matmul(&w).matmul(&self.at))
    }

    /// Support graph over the pairs carrying capacity.
    fn support_is_irreducible(&self) -> bool {
        let n = self.n();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |l| (i, l)))
            .filter(|&(i, l)| self.a[(i, l)] > 0.0)
            .collect();
        let g = Matrix::from_fn(pairs.len(), pairs.len(), |p, q| {
            self.transition(pairs[p], pairs[q])
        });
        is_irreducible(&g)
    }
}

/// Stationary joint of the attraction dynamics. In damped mode each step
/// mixes with the uniform joint over all N² pairs; in exact mode the pair
/// chain must be irreducible on the pairs carrying capacity.
pub fn attraction_stationary(
    op: &AttractionOperator,
    opts: &RankOptions,
) -> Result<(JointDistribution, Convergence)> {
    let n = op.n();
    let as_matrix = |x: &[f64]| Matrix::from_fn(n, n, |i, j| x[i * n + j]);
    let (values, conv) = match &opts.mode {
        RankMode::Exact => {
            if !op.support_is_irreducible() {
                return Err(Error::Reducible);
            }
            // start on the pairs carrying capacity so no mass sits outside
            let mut start: Vec<f64> =
                op.a.as_slice()
                    .iter()
                    .map(|&x| f64::from(u8::from(x > 0.0)))
                    .collect();
            crate::dist::normalize(&mut start);
            let cfg = StationaryConfig {
                lazy: true,
                ..opts.stationary
            };
            power_iteration(start, cfg, |x| op.apply(&as_matrix(x)).as_slice().to_vec())?
        }
        RankMode::Damped(tp) => {
            tp.validate()?;
            let d = tp.damping;
            let uniform = 1.0 / (n * n) as f64;
            power_iteration(vec![uniform; n * n], opts.stationary, |x| {
                let mass: f64 = x.iter().sum();
                op.apply(&as_matrix(x))
                    .as_slice()
                    .iter()
                    .map(|t| d * t + (1.0 - d) * mass * uniform)
                    .collect()
            })?
        }
    };
    Ok((
        JointDistribution::new(as_matrix(&values), JointKind::NodeAttraction),
        conv,
    ))
}

/// `Υ_jk = r̂_jk − r▶_j·r◀_k`.
pub fn attraction_bias(
    joint: &JointDistribution,
    fo: &Distribution,
    bi: &Distribution,
) -> BiasMatrix {
    bias_against_product(&joint.values, &fo.values, &bi.values)
}

/// Max deviation of the row / column marginals of `r̂` from `r▶` / `r◀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarginalReport {
    pub row_deviation: f64,
    pub col_deviation: f64,
}

impl MarginalReport {
    pub fn max_deviation(&self) -> f64 {
        self.row_deviation.max(self.col_deviation)
    }
}

pub fn marginal_check(
    joint: &JointDistribution,
    fo: &Distribution,
    bi: &Distribution,
) -> MarginalReport {
    MarginalReport {
        row_deviation: linf_distance(&joint.row_marginal(), &fo.values),
        col_deviation: linf_distance(&joint.col_marginal(), &bi.values),
    }
}

/// Everything derived from one completed network.
#[derive(Clone, Debug)]
pub struct AttractionResult {
    pub path_network: PathNetwork,
    /// ř over base edges.
    pub path_pull: Distribution,
    /// ř◁ over base edges.
    pub path_push: Distribution,
    /// r̂ via the path network.
    pub node_attraction: JointDistribution,
    /// r̂ via the pair chain.
    pub pair_stationary: JointDistribution,
    pub forward_out: Distribution,
    pub backward_in: Distribution,
    pub bias: BiasMatrix,
    pub mutual_information: f64,
    pub excluded_pairs: Vec<(usize, usize)>,
}

impl AttractionResult {
    /// Entry-wise gap between the two routes to r̂.
    pub fn route_gap(&self) -> f64 {
        self.node_attraction
            .values
            .max_abs_diff(&self.pair_stationary.values)
    }

    pub fn marginals(&self) -> MarginalReport {
        marginal_check(&self.node_attraction, &self.forward_out, &self.backward_in)
    }
}

pub fn analyze(net: &CompletedNetwork, opts: &RankOptions) -> Result<AttractionResult> {
    let path_network = build_path_network(net)?;
    let (path_pull, path_push) = path_ranks(&path_network, opts)?;
    let joint = node_attraction(&path_network, &path_pull)?;
    let a = capacity_matrix(net.network());
    let op = attraction_dynamics(&a);
    let (pair_stationary, _) = attraction_stationary(&op, opts)?;
    let forward_out = fo_rank(&a, opts)?;
    let backward_in = bi_rank(&a, opts)?;
    let bias = attraction_bias(&joint, &forward_out, &backward_in);
    let mi = mutual_information(&joint, &forward_out, &backward_in)?;
    Ok(AttractionResult {
        path_network,
        path_pull,
        path_push,
        node_attraction: joint,
        pair_stationary,
        forward_out,
        backward_in,
        bias,
        mutual_information: mi,
        excluded_pairs: op.excluded().to_vec(),
    })
}
