//! Cohesive node sets under the attraction bias: ε-communities, their
//! maximal elements (ε-concepts), the ε-sweep, and associations between
//! concepts.

use serde::{Serialize, Serializer};

use crate::completion::CompletedNetwork;
use crate::error::{Error, Result};
use crate::graph::{capacity_of, BiasMatrix};
use crate::matrix::Matrix;

pub const DEFAULT_CLIQUE_CAP: usize = 100_000;

pub(crate) fn finite_or_null<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConceptSet {
    /// Sorted node indices.
    pub members: Vec<usize>,
    /// `Υ(U)`; `+∞` for singletons, serialized as `null`.
    #[serde(serialize_with = "finite_or_null")]
    pub cohesion: f64,
}

impl ConceptSet {
    pub fn new(bias: &BiasMatrix, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        let cohesion = set_cohesion(bias, &members)?;
        Ok(ConceptSet { members, cohesion })
    }

    pub fn contains(&self, node: usize) -> bool {
        self.members.binary_search(&node).is_ok()
    }

    pub fn is_subset(&self, other: &ConceptSet) -> bool {
        self.members.iter().all(|&m| other.contains(m))
    }
}

/// `Υ_ij ∨ Υ_ji`.
pub fn pair_score(bias: &BiasMatrix, i: usize, j: usize) -> f64 {
    bias.get(i, j).max(bias.get(j, i))
}

/// `Υ(U)`: minimum pair score over distinct members.
pub fn set_cohesion(bias: &BiasMatrix, set: &[usize]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut c = f64::INFINITY;
    for (p, &i) in set.iter().enumerate() {
        for &j in &set[p + 1..] {
            if i != j {
                c = c.min(pair_score(bias, i, j));
            }
        }
    }
    Ok(c)
}

fn check_epsilon(eps: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "epsilon {eps} outside [0, 1]"
        )))
    }
}

/// Undirected graph `G_ε` with `i ~ j` iff `Υ_ij ∨ Υ_ji ≥ ε`.
#[derive(Clone, Debug)]
pub struct ThresholdGraph {
    adj: Vec<Vec<bool>>,
}

impl ThresholdGraph {
    pub fn new(bias: &BiasMatrix, eps: f64) -> Self {
        let n = bias.n();
        let adj = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| i != j && pair_score(bias, i, j) >= eps)
                    .collect()
            })
            .collect();
        ThresholdGraph { adj }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i][j]
    }

    pub fn is_clique(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(p, &i)| set[p + 1..].iter().all(|&j| i == j || self.adj[i][j]))
    }
}

pub fn is_epsilon_community(bias: &BiasMatrix, set: &[usize], eps: f64) -> Result<bool> {
    check_epsilon(eps)?;
    Ok(set_cohesion(bias, set)? >= eps)
}

/// All nonempty ε-communities, i.e. the cliques of `G_ε`, in
/// lexicographic order.
pub fn epsilon_communities(bias: &BiasMatrix, eps: f64, cap: usize) -> Result<Vec<Vec<usize>>> {
    check_epsilon(eps)?;
    let g = ThresholdGraph::new(bias, eps);
    let mut out = Vec::new();
    let mut current = Vec::new();
    extend_cliques(&g, 0, &mut current, &mut out, cap)?;
    Ok(out)
}

fn extend_cliques(
    g: &ThresholdGraph,
    from: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    cap: usize,
) -> Result<()> {
    for v in from..g.n() {
        if current.iter().all(|&u| g.adjacent(u, v)) {
            current.push(v);
            if out.len() == cap {
                return Err(Error::ResourceCap {
                    what: "communities",
                    limit: cap,
                });
            }
            out.push(current.clone());
            extend_cliques(g, v + 1, current, out, cap)?;
            current.pop();
        }
    }
    Ok(())
}

/// `U ⊑ V ⟺ U ⊆ V ∧ Υ(U) ≤ Υ(V)`.
pub fn order_leq(u: &ConceptSet, v: &ConceptSet) -> bool {
    u.is_subset(v) && u.cohesion <= v.cohesion
}

/// Maximal ε-communities: the maximal cliques of `G_ε`, sorted by members.
pub fn epsilon_concepts(bias: &BiasMatrix, eps: f64, cap: usize) -> Result<Vec<ConceptSet>> {
    check_epsilon(eps)?;
    let g = ThresholdGraph::new(bias, eps);
    let mut found = Vec::new();
    let mut r = Vec::new();
    bron_kerbosch(
        &g,
        &mut r,
        (0..g.n()).collect(),
        Vec::new(),
        &mut found,
        cap,
    )?;
    let mut out = found
        .into_iter()
        .map(|m| ConceptSet::new(bias, m))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.members.cmp(&b.members));
    Ok(out)
}

fn bron_kerbosch(
    g: &ThresholdGraph,
    r: &mut Vec<usize>,
    p: Vec<usize>,
    mut x: Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    cap: usize,
) -> Result<()> {
    if p.is_empty() {
        if x.is_empty() && !r.is_empty() {
            if out.len() == cap {
                return Err(Error::ResourceCap {
                    what: "concepts",
                    limit: cap,
                });
            }
            out.push(r.clone());
        }
        return Ok(());
    }
    let pivot = p
        .iter()
        .chain(&x)
        .copied()
        .max_by_key(|&u| p.iter().filter(|&&w| g.adjacent(u, w)).count())
        .expect("p is nonempty");
    let candidates: Vec<usize> = p
        .iter()
        .copied()
        .filter(|&v| !g.adjacent(pivot, v))
        .collect();
    let mut p = p;
    for v in candidates {
        let np = p.iter().copied().filter(|&w| g.adjacent(v, w)).collect();
        let nx = x.iter().copied().filter(|&w| g.adjacent(v, w)).collect();
        r.push(v);
        bron_kerbosch(g, r, np, nx, out, cap)?;
        r.pop();
        p.retain(|&w| w != v);
        x.push(v);
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ConceptLayer {
    pub epsilon: f64,
    pub concepts: Vec<ConceptSet>,
}

/// The hypergraph sequence `A_ε` over a grid, in grid order.
pub fn concept_sweep(bias: &BiasMatrix, grid: &[f64], cap: usize) -> Result<Vec<ConceptLayer>> {
    grid.iter()
        .map(|&eps| {
            Ok(ConceptLayer {
                epsilon: eps,
                concepts: epsilon_concepts(bias, eps, cap)?,
            })
        })
        .collect()
}

/// One quadruple `⟨a, b, f0, f1⟩` from concept `from` to concept `to`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Association {
    pub from: usize,
    pub to: usize,
    /// `a: i→k`.
    pub a: usize,
    /// `b: j→ℓ`.
    pub b: usize,
    /// `f0 ∈ E_ij`.
    pub f0: usize,
    /// `f1 ∈ E_kℓ`.
    pub f1: usize,
    pub cost: f64,
}

#[derive(Clone, Debug)]
pub struct ConceptNetwork {
    pub concepts: Vec<ConceptSet>,
    pub associations: Vec<Association>,
    /// Aggregate `Σ 2^(−γ(f))` per ordered concept pair.
    pub capacity: Matrix,
}

/// Enumerate associations for every ordered concept pair with a common
/// member. Edges of `a` run from `U` into `U∩V`, edges of `b` from `U∩V`
/// into `V`.
pub fn concept_associations(
    net: &CompletedNetwork,
    concepts: &[ConceptSet],
) -> Result<ConceptNetwork> {
    let base = net.network();
    let params = net.params();
    let n = base.node_count();
    let edges = base.edges();
    let sets = base.edge_sets();
    let bound = params.cutoff - params.penalty;
    for c in concepts {
        if let Some(&m) = c.members.iter().find(|&&m| m >= n) {
            return Err(Error::Dimension {
                expected: n,
                got: m + 1,
            });
        }
    }

    let mut associations = Vec::new();
    let mut capacity = Matrix::square(concepts.len());
    for (ui, u) in concepts.iter().enumerate() {
        for (vi, v) in concepts.iter().enumerate() {
            let both = |x: usize| u.contains(x) && v.contains(x);
            if !u.members.iter().any(|&m| v.contains(m)) {
                continue;
            }
            for (ai, a) in edges.iter().enumerate() {
                if !(u.contains(a.source) && both(a.target)) {
                    continue;
                }
                for (bi, b) in edges.iter().enumerate() {
                    if !(both(b.source) && v.contains(b.target)) {
                        continue;
                    }
                    let (i, k, j, l) = (a.source, a.target, b.source, b.target);
                    for &f0 in &sets[i * n + j] {
                        if edges[f0].cost + b.cost > bound {
                            continue;
                        }
                        for &f1 in &sets[k * n + l] {
                            if a.cost + edges[f1].cost > bound {
                                continue;
                            }
                            if associations.len() == params.edge_limit {
                                return Err(Error::ResourceCap {
                                    what: "concept associations",
                                    limit: params.edge_limit,
                                });
                            }
                            let cost = edges[f0].cost + b.cost - a.cost - edges[f1].cost;
                            capacity[(ui, vi)] += capacity_of(cost);
                            associations.push(Association {
                                from: ui,
                                to: vi,
                                a: ai,
                                b: bi,
                                f0,
                                f1,
                                cost,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(ConceptNetwork {
        concepts: concepts.to_vec(),
        associations,
        capacity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::completion::{v_complete, CompletionParams};
    use crate::graph::build_network;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bias(rows: &[Vec<f64>]) -> BiasMatrix {
        BiasMatrix(Matrix::from_rows(rows))
    }

    fn random_bias(n: usize, seed: u64) -> BiasMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BiasMatrix(Matrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.3))
    }

    fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
        (1u32..1 << n).map(move |mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
    }

    /// Maximal ε-communities by filtering all subsets.
    fn brute_concepts(y: &BiasMatrix, eps: f64) -> Vec<Vec<usize>> {
        let n = y.n();
        let comm: Vec<Vec<usize>> = subsets(n)
            .filter(|s| set_cohesion(y, s).unwrap() >= eps)
            .collect();
        let mut out: Vec<Vec<usize>> = comm
            .iter()
            .filter(|s| {
                (0..n)
                    .filter(|k| !s.contains(k))
                    .all(|k| s.iter().any(|&j| pair_score(y, k, j) < eps))
            })
            .cloned()
            .collect();
        out.sort();
        out
    }

    #[test]
    fn cohesion_examples() {
        let y = bias(&[
            vec![-0.1, 0.2, 0.05],
            vec![0.3, -0.2, 0.0],
            vec![0.1, 0.4, -0.3],
        ]);
        assert_eq!(set_cohesion(&y, &[0, 1]).unwrap(), 0.3);
        assert_eq!(set_cohesion(&y, &[2]).unwrap(), f64::INFINITY);
        assert_eq!(set_cohesion(&y, &[0, 1, 2]).unwrap(), 0.1);
        assert!(set_cohesion(&y, &[0, 1, 2]).unwrap() <= set_cohesion(&y, &[0, 2]).unwrap());
        assert!(matches!(set_cohesion(&y, &[]), Err(Error::EmptySet)));
    }

    #[test]
    fn every_subset_at_zero_with_positive_bias() {
        let y = BiasMatrix(Matrix::filled(4, 4, 0.1));
        let comm = epsilon_communities(&y, 0.0, DEFAULT_CLIQUE_CAP).unwrap();
        assert_eq!(comm.len(), 15);
        let concepts = epsilon_concepts(&y, 0.0, DEFAULT_CLIQUE_CAP).unwrap();
        assert_eq!(concepts.len(), 1);
        assert_eq!(concepts[0].members, vec![0, 1, 2, 3]);
    }

    #[test]
    fn empty_threshold_graph_gives_singletons() {
        let y = BiasMatrix(Matrix::filled(3, 3, -0.1));
        let concepts = epsilon_concepts(&y, 0.5, DEFAULT_CLIQUE_CAP).unwrap();
        let members: Vec<_> = concepts.iter().map(|c| c.members.clone()).collect();
        assert_eq!(members, vec![vec![0], vec![1], vec![2]]);
        assert!(concepts.iter().all(|c| c.cohesion == f64::INFINITY));
        let json = serde_json::to_string(&concepts[0]).unwrap();
        assert_eq!(json, r#"{"members":[0],"cohesion":null}"#);
    }

    #[test]
    fn communities_match_subset_filter() {
        let y = random_bias(8, 11);
        let mut scores: Vec<f64> = (0..8)
            .flat_map(|i| (i + 1..8).map(move |j| (i, j)))
            .map(|(i, j)| pair_score(&y, i, j))
            .collect();
        scores.sort_by(f64::total_cmp);
        let eps = scores[scores.len() / 2].clamp(0.0, 1.0);
        let mut got = epsilon_communities(&y, eps, DEFAULT_CLIQUE_CAP).unwrap();
        got.sort();
        let mut want: Vec<_> = subsets(8)
            .filter(|s| is_epsilon_community(&y, s, eps).unwrap())
            .collect();
        want.sort();
        assert_eq!(got, want);
        let g = ThresholdGraph::new(&y, eps);
        assert!(subsets(8).all(|s| g.is_clique(&s) == want.contains(&s)));
    }

    #[test]
    fn communities_shrink_with_epsilon() {
        let y = random_bias(7, 5);
        let lo = epsilon_communities(&y, 0.1, DEFAULT_CLIQUE_CAP).unwrap();
        let hi = epsilon_communities(&y, 0.4, DEFAULT_CLIQUE_CAP).unwrap();
        assert!(hi.iter().all(|s| lo.contains(s)));
        assert!(epsilon_communities(&y, 0.0, 3).is_err());
    }

    #[test]
    fn concepts_match_maximal_subset_filter() {
        for seed in 0..20 {
            let n = 3 + (seed as usize % 8);
            let y = random_bias(n, seed);
            for eps in [0.0, 0.2, 0.4, 0.6, 0.9] {
                let got: Vec<_> = epsilon_concepts(&y, eps, DEFAULT_CLIQUE_CAP)
                    .unwrap()
                    .into_iter()
                    .map(|c| c.members)
                    .collect();
                assert_eq!(got, brute_concepts(&y, eps), "seed {seed} eps {eps}");
            }
        }
    }

    #[test]
    fn order_examples() {
        let y = bias(&[
            vec![0.0, 0.5, 0.5],
            vec![0.5, 0.0, 0.2],
            vec![0.5, 0.2, 0.0],
        ]);
        let u = ConceptSet::new(&y, vec![0, 1]).unwrap();
        let v = ConceptSet::new(&y, vec![0, 1, 2]).unwrap();
        assert!(order_leq(&u, &u));
        assert!(!order_leq(&u, &v));
        let y = BiasMatrix(Matrix::filled(3, 3, 0.3));
        let u = ConceptSet::new(&y, vec![0, 2]).unwrap();
        let v = ConceptSet::new(&y, vec![0, 1, 2]).unwrap();
        assert_eq!(u.cohesion, v.cohesion);
        assert!(order_leq(&u, &v));
        assert!(!order_leq(&v, &u));
    }

    #[test]
    fn sweep_is_antitone() {
        let y = random_bias(9, 3);
        let layers = concept_sweep(&y, &[0.0, 0.25, 0.5, 0.75, 1.0], DEFAULT_CLIQUE_CAP).unwrap();
        for w in layers.windows(2) {
            for c in &w[1].concepts {
                assert!(w[0].concepts.iter().any(|d| c.is_subset(d)));
            }
        }
        let y = bias(&[
            vec![0.0, 0.4, 0.4],
            vec![0.4, 0.0, 0.4],
            vec![0.4, 0.4, 0.0],
        ]);
        let layers = concept_sweep(&y, &[0.0, 0.4, 0.41, 1.0], DEFAULT_CLIQUE_CAP).unwrap();
        let sizes: Vec<_> = layers.iter().map(|l| l.concepts.len()).collect();
        assert_eq!(sizes, vec![1, 1, 3, 3]);
    }

    fn toy_network() -> CompletedNetwork {
        let net = build_network(
            &["p", "q", "r", "s"],
            &[
                ("p", "q", 1.0),
                ("q", "r", 0.5),
                ("r", "s", 1.0),
                ("p", "r", 2.0),
                ("q", "s", 1.5),
                ("q", "q", 0.5),
            ],
        )
        .unwrap();
        v_complete(&net, CompletionParams::new(2.5, 1.0)).unwrap()
    }

    /// Filter all of `E⁴` against the association conditions.
    fn brute_associations(
        c: &CompletedNetwork,
        u: &ConceptSet,
        v: &ConceptSet,
    ) -> Vec<(usize, usize, usize, usize)> {
        let e = c.network().edges();
        let bound = c.params().cutoff - c.params().penalty;
        let mut out = Vec::new();
        for a in 0..e.len() {
            for b in 0..e.len() {
                for f0 in 0..e.len() {
                    for f1 in 0..e.len() {
                        let (i, k) = (e[a].source, e[a].target);
                        let (j, l) = (e[b].source, e[b].target);
                        let ok = e[f0].source == i
                            && e[f0].target == j
                            && e[f1].source == k
                            && e[f1].target == l
                            && u.contains(i)
                            && u.contains(j)
                            && u.contains(k)
                            && v.contains(j)
                            && v.contains(k)
                            && v.contains(l)
                            && e[f0].cost + e[b].cost <= bound
                            && e[a].cost + e[f1].cost <= bound;
                        if ok {
                            out.push((a, b, f0, f1));
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn associations_match_brute_force() {
        let c = toy_network();
        let y = BiasMatrix(Matrix::square(4));
        let sets = [vec![0, 1, 2], vec![1, 2, 3], vec![0, 1, 2, 3]];
        let concepts: Vec<_> = sets
            .iter()
            .map(|s| ConceptSet::new(&y, s.clone()).unwrap())
            .collect();
        let cn = concept_associations(&c, &concepts).unwrap();
        for (ui, u) in concepts.iter().enumerate() {
            for (vi, v) in concepts.iter().enumerate() {
                let mut got: Vec<_> = cn
                    .associations
                    .iter()
                    .filter(|x| x.from == ui && x.to == vi)
                    .map(|x| (x.a, x.b, x.f0, x.f1))
                    .collect();
                got.sort();
                let want = brute_associations(&c, u, v);
                assert_eq!(got, want, "{ui} -> {vi}");
                let e = c.network().edges();
                let cap: f64 = want
                    .iter()
                    .map(|&(a, b, f0, f1)| {
                        (-(e[f0].cost + e[b].cost - e[a].cost - e[f1].cost)).exp2()
                    })
                    .sum();
                assert!((cn.capacity[(ui, vi)] - cap).abs() < 1e-12);
            }
        }
        assert!(cn.associations.iter().any(|x| x.from == 0 && x.to == 1));
    }

    #[test]
    fn disjoint_concepts_have_no_associations() {
        let c = toy_network();
        let y = BiasMatrix(Matrix::square(4));
        let concepts = vec![
            ConceptSet::new(&y, vec![0, 1]).unwrap(),
            ConceptSet::new(&y, vec![2, 3]).unwrap(),
        ];
        let cn = concept_associations(&c, &concepts).unwrap();
        assert!(cn.associations.iter().all(|x| x.from == x.to));
        assert_eq!(cn.capacity[(0, 1)], 0.0);
        assert_eq!(cn.capacity[(1, 0)], 0.0);
    }
}
