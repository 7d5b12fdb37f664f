//! Stationary distributions and Perron vectors by power iteration, the
//! pull/push/forward-out/backward-in ranks, and the expected flow.

use crate::dist::{normalize, Convergence, Distribution, JointDistribution, JointKind, RankKind};
use crate::dynamics::{
    backward, backward_in, forward, forward_out, teleport, DanglingPolicy, Orientation,
    StochasticChain, TeleportParams,
};
use crate::error::{Error, Result};
use crate::graph::CapacityMatrix;
use crate::matrix::{l1_distance, Matrix};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationaryConfig {
    /// ℓ1 bound on `‖step(x)/λ − x‖` at return.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterate `(x + step(x)/λ) / 2`, which has the same fixed points but
    /// converges on periodic irreducible chains.
    pub lazy: bool,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            lazy: false,
        }
    }
}

/// Normalized power iteration on an arbitrary nonnegative operator.
///
/// Returns the last iterate `x` (unit ℓ1 mass) whose residual
/// `‖step(x)/‖step(x)‖₁ − x‖₁` is below `cfg.tol`.
pub fn power_iteration(
    start: Vec<f64>,
    cfg: StationaryConfig,
    mut step: impl FnMut(&[f64]) -> Vec<f64>,
) -> Result<(Vec<f64>, Convergence)> {
    let mut x = start;
    normalize(&mut x);
    let mut before: Option<Vec<f64>> = None;
    let mut residual = f64::INFINITY;
    for iter in 0..cfg.max_iter {
        let mut y = step(&x);
        let lambda = normalize(&mut y);
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::NonConvergence {
                iterations: iter,
                residual,
            });
        }
        residual = l1_distance(&x, &y);
        if residual <= cfg.tol {
            return Ok((
                x,
                Convergence {
                    iterations: iter,
                    residual,
                    eigenvalue: lambda,
                },
            ));
        }
        if cfg.lazy {
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi = 0.5 * (*yi + xi);
            }
        } else if let Some(prev) = &before {
            if l1_distance(prev, &y) <= cfg.tol && residual > 1e3 * cfg.tol {
                return Err(Error::Oscillation);
            }
        }
        before = Some(std::mem::replace(&mut x, y));
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual,
    })
}

/// Strong connectivity of the support graph `i -> j iff m_ij > 0`.
pub fn is_irreducible(m: &Matrix) -> bool {
    let n = m.rows();
    if n == 0 {
        return false;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let w = if forward { m[(u, v)] } else { m[(v, u)] };
                if w > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Stationary distribution (or normalized Perron vector, for raw score
/// chains) of `chain`. Chains that are not strictly positive must be
/// irreducible.
pub fn stationary(chain: &StochasticChain, cfg: StationaryConfig) -> Result<Distribution> {
    if !chain.is_strictly_positive() && !is_irreducible(chain.matrix()) {
        return Err(Error::Reducible);
    }
    let n = chain.size();
    let (values, conv) = power_iteration(vec![1.0 / n as f64; n], cfg, |x| chain.step(x))?;
    Ok(Distribution {
        values,
        label: RankKind::Stationary,
        convergence: Some(conv),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum RankMode {
    Damped(TeleportParams),
    /// No damping; the chain must be irreducible.
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankOptions {
    pub mode: RankMode,
    pub dangling: DanglingPolicy,
    pub stationary: StationaryConfig,
}

impl Default for RankOptions {
    fn default() -> Self {
        Self {
            mode: RankMode::Damped(TeleportParams::default()),
            dangling: DanglingPolicy::default(),
            stationary: StationaryConfig::default(),
        }
    }
}

impl RankOptions {
    pub fn exact() -> Self {
        Self {
            mode: RankMode::Exact,
            dangling: DanglingPolicy::Reject,
            stationary: StationaryConfig::default(),
        }
    }

    pub fn damped(damping: f64) -> Self {
        Self {
            mode: RankMode::Damped(TeleportParams::new(damping)),
            ..Self::default()
        }
    }
}

/// Rank of a chain under `opts`. A phantom state is dropped and the rest
/// renormalized.
pub fn rank_chain(
    chain: &StochasticChain,
    opts: &RankOptions,
    label: RankKind,
) -> Result<Distribution> {
    let mut dist = match &opts.mode {
        RankMode::Exact => stationary(
            chain,
            StationaryConfig {
                lazy: true,
                ..opts.stationary
            },
        )?,
        RankMode::Damped(tp) if chain.is_stochastic() => {
            stationary(&teleport(chain, tp)?, opts.stationary)?
        }
        RankMode::Damped(tp) => damped_perron(chain, tp, opts.stationary)?,
    };
    if chain.has_phantom() {
        dist.values.pop();
        normalize(&mut dist.values);
    }
    dist.label = label;
    Ok(dist)
}

/// Perron iteration on a non-stochastic score matrix with teleportation
/// applied after normalization: `x ← δ·step(x)/‖step(x)‖₁ + (1−δ)·P(x)`.
fn damped_perron(
    chain: &StochasticChain,
    tp: &TeleportParams,
    cfg: StationaryConfig,
) -> Result<Distribution> {
    tp.validate()?;
    let n = chain.size();
    let p = tp.preference_for(n, chain.orientation())?;
    let d = tp.damping;
    let (values, mut conv) = power_iteration(vec![1.0 / n as f64; n], cfg, |x| {
        let mut s = chain.step(x);
        normalize(&mut s);
        let t = match chain.orientation() {
            Orientation::Row => p.left_mul(x),
            Orientation::Column => p.right_mul(x),
        };
        s.iter()
            .zip(&t)
            .map(|(a, b)| d * a + (1.0 - d) * b)
            .collect()
    })?;
    let mut raw = chain.step(&values);
    conv.eigenvalue = normalize(&mut raw);
    Ok(Distribution {
        values,
        label: RankKind::Stationary,
        convergence: Some(conv),
    })
}

/// Reputation `r▷ = r▷ A▷`.
pub fn pull_rank(a: &CapacityMatrix, opts: &RankOptions) -> Result<Distribution> {
    rank_chain(&forward(a, opts.dangling)?, opts, RankKind::Pull)
}

/// Promotion `r◁ = A◁ r◁`.
pub fn push_rank(a: &CapacityMatrix, opts: &RankOptions) -> Result<Distribution> {
    rank_chain(&backward(a, opts.dangling)?, opts, RankKind::Push)
}

/// Left Perron vector of the forward-out scores.
pub fn fo_rank(a: &CapacityMatrix, opts: &RankOptions) -> Result<Distribution> {
    rank_chain(&forward_out(a, opts.dangling)?, opts, RankKind::ForwardOut)
}

/// Right Perron vector of the backward-in scores.
pub fn bi_rank(a: &CapacityMatrix, opts: &RankOptions) -> Result<Distribution> {
    rank_chain(&backward_in(a, opts.dangling)?, opts, RankKind::BackwardIn)
}

/// `r▶◀_jk = r▶_j · r◀_k`.
pub fn expected_flow(fo: &Distribution, bi: &Distribution) -> JointDistribution {
    JointDistribution::new(
        Matrix::outer(&fo.values, &bi.values),
        JointKind::ExpectedFlow,
    )
}

/// `Σ_iℓ S▶_ij · m_iℓ · S◀_kℓ`, the propagation step whose fixed points
/// (up to the product of Perron eigenvalues) characterize the expected flow.
pub fn propagate_flow(fo: &StochasticChain, bi: &StochasticChain, m: &Matrix) -> Matrix {
    fo.matrix()
        .transpose()
        .matmul(m)
        .matmul(&bi.matrix().transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_network, capacity_matrix};

    fn row_chain(rows: &[Vec<f64>]) -> StochasticChain {
        StochasticChain::new(Matrix::from_rows(rows), Orientation::Row).unwrap()
    }

    #[test]
    fn symmetric_damped_chain() {
        let swap = row_chain(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let t = teleport(&swap, &TeleportParams::new(0.5)).unwrap();
        let pi = stationary(&t, StationaryConfig::default()).unwrap();
        assert!(l1_distance(&pi.values, &[0.5, 0.5]) < 1e-12);
    }

    #[test]
    fn two_state_chain() {
        let c = row_chain(&[vec![0.0, 1.0], vec![0.5, 0.5]]);
        let pi = stationary(&c, StationaryConfig::default()).unwrap();
        assert!(l1_distance(&pi.values, &[1.0 / 3.0, 2.0 / 3.0]) < 1e-11);
        let conv = pi.convergence.unwrap();
        assert!(conv.residual <= 1e-12);
        assert!((conv.eigenvalue - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_is_not_unique() {
        let c = row_chain(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let err = stationary(&c, StationaryConfig::default()).unwrap_err();
        assert!(err
            .to_string()
            .contains("non-unique stationary distribution"));
    }

    #[test]
    fn periodic_chain_oscillates_unless_lazy() {
        // 3-cycle from a non-uniform start
        let m = Matrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ]);
        let c = StochasticChain::new(m.clone(), Orientation::Row).unwrap();
        let res = power_iteration(vec![0.6, 0.3, 0.1], StationaryConfig::default(), |x| {
            c.step(x)
        });
        assert!(res.is_err());
        let (x, _) = power_iteration(
            vec![0.6, 0.3, 0.1],
            StationaryConfig {
                lazy: true,
                ..Default::default()
            },
            |x| c.step(x),
        )
        .unwrap();
        assert!(l1_distance(&x, &[1.0 / 3.0; 3]) < 1e-11);

        let swap = row_chain(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let err = power_iteration(vec![0.9, 0.1], StationaryConfig::default(), |x| {
            swap.step(x)
        })
        .unwrap_err();
        assert!(matches!(err, Error::Oscillation));
    }

    #[test]
    fn complete_uniform_ranks() {
        let net = build_network(
            &["x", "y", "z"],
            &[
                ("x", "x", 0.0),
                ("x", "y", 0.0),
                ("x", "z", 0.0),
                ("y", "x", 0.0),
                ("y", "y", 0.0),
                ("y", "z", 0.0),
                ("z", "x", 0.0),
                ("z", "y", 0.0),
                ("z", "z", 0.0),
            ],
        )
        .unwrap();
        let a = capacity_matrix(&net);
        for opts in [RankOptions::default(), RankOptions::exact()] {
            for r in [
                pull_rank(&a, &opts).unwrap(),
                push_rank(&a, &opts).unwrap(),
                fo_rank(&a, &opts).unwrap(),
                bi_rank(&a, &opts).unwrap(),
            ] {
                assert!(l1_distance(&r.values, &[1.0 / 3.0; 3]) < 1e-12);
            }
        }
    }

    #[test]
    fn two_cycle_exact_pull_rank() {
        let net = build_network(&["x", "y"], &[("x", "y", 0.0), ("y", "x", 1.0)]).unwrap();
        let r = pull_rank(&capacity_matrix(&net), &RankOptions::exact()).unwrap();
        assert!(l1_distance(&r.values, &[0.5, 0.5]) < 1e-12);
    }

    #[test]
    fn star_center_dominates() {
        let mut edges = Vec::new();
        for leaf in ["a", "b", "c", "d"] {
            edges.push(("hub", leaf, 0.0));
            edges.push((leaf, "hub", 0.0));
        }
        let net = build_network(&["hub", "a", "b", "c", "d"], &edges).unwrap();
        let r = pull_rank(&capacity_matrix(&net), &RankOptions::default()).unwrap();
        assert!(r.values[1..].iter().all(|&leaf| r.values[0] > leaf));
    }

    #[test]
    fn phantom_rank_drops_extra_state() {
        let net = build_network(&["x", "y"], &[("x", "y", 0.0)]).unwrap();
        let opts = RankOptions {
            dangling: DanglingPolicy::Phantom { fix_cost: 30.0 },
            ..RankOptions::default()
        };
        let r = pull_rank(&capacity_matrix(&net), &opts).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expected_flow_examples() {
        let u = Distribution::uniform(2, RankKind::ForwardOut);
        let f = expected_flow(&u, &u);
        assert!(f.values.as_slice().iter().all(|&x| x == 0.25));

        let fo = Distribution::new(vec![1.0, 0.0], RankKind::ForwardOut);
        let bi = Distribution::new(vec![0.0, 1.0], RankKind::BackwardIn);
        assert_eq!(
            expected_flow(&fo, &bi).values,
            Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]])
        );

        let fo = Distribution::new(vec![2.0 / 3.0, 1.0 / 3.0], RankKind::ForwardOut);
        let bi = Distribution::new(vec![0.25, 0.75], RankKind::BackwardIn);
        let f = expected_flow(&fo, &bi);
        let want = Matrix::from_rows(&[vec![1.0 / 6.0, 0.5], vec![1.0 / 12.0, 0.25]]);
        assert!(f.values.max_abs_diff(&want) < 1e-15);
        assert!(l1_distance(&f.row_marginal(), &fo.values) < 1e-15);
        assert!(l1_distance(&f.col_marginal(), &bi.values) < 1e-15);
    }
}
