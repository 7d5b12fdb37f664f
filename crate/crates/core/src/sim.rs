//! Monte-Carlo random surfers for cross-checking stationary distributions.
//!
//! Each walker draws from its own ChaCha8 stream, selected by the walker
//! index on a generator seeded with the configured seed, so counts do not
//! depend on scheduling.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::attraction::AttractionOperator;
use crate::dist::{Distribution, JointDistribution, JointKind, RankKind};
use crate::dynamics::StochasticChain;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const RNG_NAME: &str = "chacha8";
const BATCHES_PER_WALKER: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    /// Steps per walker, burn-in included.
    pub steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub walkers: usize,
}

impl SimConfig {
    /// One walker, burn-in of 1% of the steps.
    pub fn new(steps: u64, seed: u64) -> Self {
        SimConfig {
            steps,
            burn_in: steps / 100,
            seed,
            walkers: 1,
        }
    }

    pub fn with_walkers(mut self, walkers: usize) -> Self {
        self.walkers = walkers;
        self
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps <= self.burn_in {
            return Err(Error::InvalidParameter(format!(
                "steps ({}) must exceed burn-in ({})",
                self.steps, self.burn_in
            )));
        }
        if self.walkers == 0 {
            return Err(Error::InvalidParameter(
                "walker count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn recorded(&self) -> u64 {
        self.steps - self.burn_in
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimResult {
    pub frequencies: Vec<f64>,
    /// Batch-means standard error per state.
    pub stderr: Vec<f64>,
    pub counts: Vec<u64>,
    pub seed: u64,
    pub rng: &'static str,
    pub steps: u64,
    pub burn_in: u64,
    pub walkers: usize,
}

impl SimResult {
    pub fn distribution(&self) -> Distribution {
        Distribution::new(self.frequencies.clone(), RankKind::Empirical)
    }

    /// Largest `|empirical − analytic| / stderr`; infinite where the
    /// standard error is zero and the values differ.
    pub fn max_z(&self, analytic: &[f64]) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.stderr)
            .zip(analytic)
            .map(|((&f, &s), &a)| {
                let d = (f - a).abs();
                if d == 0.0 {
                    0.0
                } else if s == 0.0 {
                    f64::INFINITY
                } else {
                    d / s
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Cumulative sums of each table row, normalized so the last entry is 1.
fn cumulative(rows: impl Iterator<Item = Vec<f64>>) -> Vec<Vec<f64>> {
    rows.map(|mut r| {
        let mut acc = 0.0;
        for x in r.iter_mut() {
            acc += *x;
            *x = acc;
        }
        if acc > 0.0 {
            for x in r.iter_mut() {
                *x /= acc;
            }
        }
        r
    })
    .collect()
}

fn sample(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

struct WalkerCounts {
    totals: Vec<u64>,
    batches: Vec<Vec<u64>>,
}

/// Run one walker of a chain on `states` states and record visits.
fn walk(
    cfg: &SimConfig,
    walker: usize,
    states: usize,
    start: impl Fn(&mut ChaCha8Rng) -> usize,
    mut next: impl FnMut(usize, &mut ChaCha8Rng) -> Result<usize>,
) -> Result<WalkerCounts> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(walker as u64);
    let mut state = start(&mut rng);
    for _ in 0..cfg.burn_in {
        state = next(state, &mut rng)?;
    }
    let recorded = cfg.recorded();
    let batches = BATCHES_PER_WALKER.min(recorded);
    let batch_len = recorded / batches;
    let mut out = WalkerCounts {
        totals: vec![0; states],
        batches: Vec::with_capacity(batches as usize),
    };
    let mut current = vec![0u64; states];
    for t in 0..recorded {
        state = next(state, &mut rng)?;
        out.totals[state] += 1;
        // the remainder steps are counted in totals but not in batches
        if t < batch_len * batches {
            current[state] += 1;
            if (t + 1) % batch_len == 0 {
                out.batches
                    .push(std::mem::replace(&mut current, vec![0; states]));
            }
        }
    }
    Ok(out)
}

fn summarize(cfg: &SimConfig, states: usize, walkers: Vec<WalkerCounts>) -> SimResult {
    let mut counts = vec![0u64; states];
    let mut batches = Vec::new();
    for w in walkers {
        for (c, t) in counts.iter_mut().zip(&w.totals) {
            *c += t;
        }
        batches.extend(w.batches);
    }
    let total: u64 = counts.iter().sum();
    let frequencies = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let stderr = (0..states)
        .map(|s| {
            let b = batches.len() as f64;
            if b < 2.0 {
                return f64::NAN;
            }
            let means: Vec<f64> = batches
                .iter()
                .map(|bc| bc[s] as f64 / bc.iter().sum::<u64>() as f64)
                .collect();
            let m = means.iter().sum::<f64>() / b;
            let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1.0);
            (var / b).sqrt()
        })
        .collect();
    SimResult {
        frequencies,
        stderr,
        counts,
        seed: cfg.seed,
        rng: RNG_NAME,
        steps: cfg.steps,
        burn_in: cfg.burn_in,
        walkers: cfg.walkers,
    }
}

/// Visit frequencies of a stochastic chain. Column chains move from `j` to
/// `i` with probability `M_ij`.
pub fn simulate(chain: &StochasticChain, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    if !chain.is_stochastic() {
        return Err(Error::InvalidParameter(
            "simulation needs a stochastic chain".into(),
        ));
    }
    let n = chain.size();
    let cdfs = cumulative((0..n).map(|s| chain.transitions(s)));
    let walkers = (0..cfg.walkers)
        .into_par_iter()
        .map(|w| {
            walk(
                cfg,
                w,
                n,
                |rng| rng.random_range(0..n),
                |s, rng| Ok(sample(&cdfs[s], rng.random::<f64>())),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(cfg, n, walkers))
}

/// Empirical joint over node pairs from the attraction chain. A move from
/// `(i, ℓ)` first draws `j` with weight `A_ij·(A²)_jℓ`, then `k` with
/// weight `A_jk·A_kℓ`; the product is the pair transition probability.
pub fn simulate_pairs(
    op: &AttractionOperator,
    cfg: &SimConfig,
) -> Result<(JointDistribution, SimResult)> {
    cfg.validate()?;
    let n = op.n();
    let a = op.capacity();
    let a2 = a.matmul(a);
    let first =
        cumulative((0..n * n).map(|il| (0..n).map(|j| a[(il / n, j)] * a2[(j, il % n)]).collect()));
    let second =
        cumulative((0..n * n).map(|jl| (0..n).map(|k| a[(jl / n, k)] * a[(k, jl % n)]).collect()));
    let starts: Vec<usize> = (0..n * n)
        .filter(|&p| a[(p / n, p % n)] > 0.0 && op.denominators()[(p / n, p % n)] > 0.0)
        .collect();
    if starts.is_empty() {
        return Err(Error::InvalidParameter(
            "no pair with a three-hop route".into(),
        ));
    }
    let walkers = (0..cfg.walkers)
        .into_par_iter()
        .map(|w| {
            walk(
                cfg,
                w,
                n * n,
                |rng| starts[rng.random_range(0..starts.len())],
                |p, rng| {
                    let (i, l) = (p / n, p % n);
                    if op.denominators()[(i, l)] <= 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "pair ({i}, {l}) has no three-hop route"
                        )));
                    }
                    let j = sample(&first[p], rng.random::<f64>());
                    let k = sample(&second[j * n + l], rng.random::<f64>());
                    Ok(j * n + k)
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let res = summarize(cfg, n * n, walkers);
    let joint = JointDistribution::new(
        Matrix::from_fn(n, n, |j, k| res.frequencies[j * n + k]),
        JointKind::Empirical,
    );
    Ok((joint, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attraction::{attraction_dynamics, attraction_stationary};
    use crate::dynamics::{teleport, Orientation, TeleportParams};
    use crate::graph::{capacity_matrix, Network};
    use crate::matrix::linf_distance;
    use crate::ranking::{stationary, RankOptions, StationaryConfig};

    fn chain(rows: &[Vec<f64>]) -> StochasticChain {
        StochasticChain::new(Matrix::from_rows(rows), Orientation::Row).unwrap()
    }

    #[test]
    fn symmetric_damped_two_state() {
        let c = teleport(
            &chain(&[vec![0.0, 1.0], vec![1.0, 0.0]]),
            &TeleportParams::default(),
        )
        .unwrap();
        let r = simulate(&c, &SimConfig::new(1_000_000, 1)).unwrap();
        assert!(r.max_z(&[0.5, 0.5]) <= 3.0, "{r:?}");
        assert_eq!(r.counts.iter().sum::<u64>(), 990_000);
        assert!((r.frequencies.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_chain_matches_analytic() {
        let c = chain(&[vec![0.0, 1.0], vec![0.5, 0.5]]);
        let pi = stationary(&c, StationaryConfig::default()).unwrap();
        assert!(linf_distance(&pi.values, &[1.0 / 3.0, 2.0 / 3.0]) < 1e-12);
        let r = simulate(&c, &SimConfig::new(400_000, 7).with_walkers(3)).unwrap();
        assert!(r.max_z(&pi.values) <= 3.0, "{r:?}");
    }

    #[test]
    fn column_chains_walk_columns() {
        let m = Matrix::from_rows(&[vec![0.0, 0.5], vec![1.0, 0.5]]);
        let c = StochasticChain::new(m, Orientation::Column).unwrap();
        let r = simulate(&c, &SimConfig::new(200_000, 3)).unwrap();
        assert!(r.max_z(&[1.0 / 3.0, 2.0 / 3.0]) <= 3.0, "{r:?}");
    }

    #[test]
    fn seeds_reproduce_counts() {
        let c = chain(&[
            vec![0.2, 0.3, 0.5],
            vec![0.6, 0.1, 0.3],
            vec![0.3, 0.3, 0.4],
        ]);
        let cfg = SimConfig::new(50_000, 42).with_walkers(4);
        let a = simulate(&c, &cfg).unwrap();
        let b = simulate(&c, &cfg).unwrap();
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.stderr, b.stderr);
        let other = simulate(&c, &SimConfig::new(50_000, 43).with_walkers(4)).unwrap();
        assert_ne!(a.counts, other.counts);
    }

    #[test]
    fn error_shrinks_with_steps() {
        let c = chain(&[vec![0.1, 0.9], vec![0.6, 0.4]]);
        let pi = stationary(&c, StationaryConfig::default()).unwrap();
        let errs: Vec<f64> = [10_000u64, 40_000, 160_000, 640_000]
            .iter()
            .map(|&s| {
                (0..8)
                    .map(|seed| {
                        linf_distance(
                            &simulate(&c, &SimConfig::new(s, seed)).unwrap().frequencies,
                            &pi.values,
                        )
                    })
                    .sum::<f64>()
            })
            .collect();
        // 1/√steps predicts a factor 8 over the ladder
        assert!(errs[3] < errs[0] / 3.0, "{errs:?}");
    }

    #[test]
    fn rejects_bad_config_and_raw_chains() {
        let c = chain(&[vec![1.0]]);
        assert!(simulate(&c, &SimConfig::new(10, 0).with_burn_in(10)).is_err());
        assert!(simulate(&c, &SimConfig::new(10, 0).with_walkers(0)).is_err());
    }

    #[test]
    fn single_node_pairs() {
        let net = Network::from_indices(1, &[(0, 0, 1.0)]).unwrap();
        let op = attraction_dynamics(&capacity_matrix(&net));
        let (joint, _) = simulate_pairs(&op, &SimConfig::new(1000, 0)).unwrap();
        assert_eq!(joint.get(0, 0), 1.0);
    }

    #[test]
    fn pairs_match_attraction_stationary() {
        let net = Network::from_indices(
            3,
            &[
                (0, 1, 0.0),
                (1, 2, 0.5),
                (2, 0, 1.0),
                (0, 0, 1.5),
                (1, 0, 0.3),
                (2, 2, 0.2),
                (0, 2, 2.0),
            ],
        )
        .unwrap();
        let op = attraction_dynamics(&capacity_matrix(&net));
        let (r, _) = attraction_stationary(&op, &RankOptions::exact()).unwrap();
        let (_, res) = simulate_pairs(&op, &SimConfig::new(400_000, 9)).unwrap();
        assert!(res.max_z(r.values.as_slice()) <= 3.0, "{res:?}\n{r:?}");

        let mut edges = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                edges.push((i, j, 1.0));
            }
        }
        let op = attraction_dynamics(&capacity_matrix(&Network::from_indices(3, &edges).unwrap()));
        let (_, res) = simulate_pairs(&op, &SimConfig::new(200_000, 5)).unwrap();
        assert!(res.max_z(&[1.0 / 9.0; 9]) <= 3.0, "{res:?}");
    }
}
