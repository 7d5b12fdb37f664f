//! The path network of a v-complete network: its nodes are the edges of the
//! base network, and each edge `f = ⟨f0, f1⟩` from `a: i→ℓ` to `b: j→k`
//! records a detour `f0 ∈ E_ij`, `f1 ∈ E_kℓ` that diverts traffic from `a`
//! through `b`.

use rayon::prelude::*;
use serde::Serialize;

use crate::completion::{CompletedNetwork, CompletionParams};
use crate::dist::{Distribution, JointDistribution, JointKind};
use crate::error::{Error, Result};
use crate::graph::{capacity_matrix, capacity_of, CapacityMatrix, Network};
use crate::matrix::Matrix;
use crate::ranking::{pull_rank, push_rank, RankOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Detour {
    /// Avoided base edge `a: i→ℓ`.
    pub avoided: usize,
    /// Attracting base edge `b: j→k`.
    pub attracting: usize,
    /// `f0 ∈ E_ij`.
    pub entry: usize,
    /// `f1 ∈ E_kℓ`.
    pub exit: usize,
    pub cost: f64,
}

#[derive(Clone, Debug)]
pub struct PathNetwork {
    base: Network,
    params: CompletionParams,
    detours: Vec<Detour>,
    capacity: CapacityMatrix,
}

impl PathNetwork {
    pub fn base(&self) -> &Network {
        &self.base
    }

    pub fn params(&self) -> CompletionParams {
        self.params
    }

    /// Number of path-network nodes, i.e. base edges.
    pub fn node_count(&self) -> usize {
        self.base.edge_count()
    }

    pub fn detours(&self) -> &[Detour] {
        &self.detours
    }

    /// `Ǎ_ab = Σ_{f ∈ Ě_ab} 2^(−γ(f))`.
    pub fn capacity(&self) -> &CapacityMatrix {
        &self.capacity
    }
}

/// Enumerate every admissible detour of a v-complete network.
pub fn build_path_network(net: &CompletedNetwork) -> Result<PathNetwork> {
    let base = net.network();
    let params = net.params();
    let n = base.node_count();
    let edges = base.edges();
    let sets = base.edge_sets();
    let bound = params.cutoff - 2.0 * params.penalty;
    let twice_penalty = 2.0 * params.penalty;

    let rows: Vec<Vec<Detour>> = edges
        .par_iter()
        .enumerate()
        .map(|(ai, a)| {
            let mut row = Vec::new();
            for (bi, b) in edges.iter().enumerate() {
                for &f0 in &sets[a.source * n + b.source] {
                    for &f1 in &sets[b.target * n + a.target] {
                        let lhs = edges[f0].cost + b.cost + edges[f1].cost - a.cost;
                        if lhs <= bound {
                            row.push(Detour {
                                avoided: ai,
                                attracting: bi,
                                entry: f0,
                                exit: f1,
                                cost: twice_penalty + lhs,
                            });
                        }
                    }
                }
            }
            row
        })
        .collect();

    let total: usize = rows.iter().map(Vec::len).sum();
    if total > params.edge_limit {
        return Err(Error::ResourceCap {
            what: "path-network edges",
            limit: params.edge_limit,
        });
    }
    let m = edges.len();
    let mut cap = Matrix::square(m);
    let mut detours = Vec::with_capacity(total);
    for row in rows {
        for d in row {
            cap[(d.avoided, d.attracting)] += capacity_of(d.cost);
            detours.push(d);
        }
    }
    Ok(PathNetwork {
        base: base.clone(),
        params,
        detours,
        capacity: CapacityMatrix::from_matrix(cap)?,
    })
}

/// Pull rank ř (attraction) and push rank ř◁ (avoidance) over base edges.
pub fn path_ranks(pn: &PathNetwork, opts: &RankOptions) -> Result<(Distribution, Distribution)> {
    if pn.node_count() == 0 {
        return Err(Error::EmptySet);
    }
    Ok((
        pull_rank(&pn.capacity, opts)?,
        push_rank(&pn.capacity, opts)?,
    ))
}

/// `r̂_jk = Σ_{b: j→k} ř_b`.
pub fn node_attraction(pn: &PathNetwork, path_pull: &Distribution) -> Result<JointDistribution> {
    let base = &pn.base;
    if path_pull.len() != base.edge_count() {
        return Err(Error::Dimension {
            expected: base.edge_count(),
            got: path_pull.len(),
        });
    }
    let n = base.node_count();
    let mut r = Matrix::square(n);
    for (e, &p) in base.edges().iter().zip(&path_pull.values) {
        r[(e.source, e.target)] += p;
    }
    Ok(JointDistribution::new(r, JointKind::NodeAttraction))
}

/// Largest deviations between enumerated path-network capacities and the
/// closed forms. Each deviation is `|enumerated − closed| / max(1, |closed|)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ClosedFormReport {
    /// `Ǎ_ab = A_b·A_ij·A_kℓ / (4^d·A_a)`.
    pub pair_capacity: f64,
    /// `Σ_{c: j→k} Ǎ_ac = A_ij·A_jk·A_kℓ / (4^d·A_a)`.
    pub grouped_capacity: f64,
    /// `Ǎ_a• = (A·A·A)_iℓ / (4^d·A_a)`.
    pub out_capacity: f64,
    pub pairs_checked: usize,
}

impl ClosedFormReport {
    pub fn max_deviation(&self) -> f64 {
        self.pair_capacity
            .max(self.grouped_capacity)
            .max(self.out_capacity)
    }
}

fn deviation(enumerated: f64, closed: f64) -> f64 {
    (enumerated - closed).abs() / closed.abs().max(1.0)
}

/// Check the closed forms of the path-network capacities against
/// enumeration on `net`. Deviations are large when the cutoff excludes
/// some detour pair.
pub fn closed_form_check(net: &CompletedNetwork) -> Result<ClosedFormReport> {
    let pn = build_path_network(net)?;
    let base = net.network();
    let n = base.node_count();
    let edges = base.edges();
    let a = capacity_matrix(base);
    let am = a.matrix();
    let a3 = am.matmul(am).matmul(am);
    let quarter = capacity_of(2.0 * net.params().penalty);
    let check = pn.capacity.matrix();

    let mut report = ClosedFormReport::default();
    for (ai, ea) in edges.iter().enumerate() {
        let (i, l) = (ea.source, ea.target);
        let scale = quarter / ea.capacity();
        let mut grouped = Matrix::square(n);
        for (bi, eb) in edges.iter().enumerate() {
            let (j, k) = (eb.source, eb.target);
            let closed = eb.capacity() * scale * a.get(i, j) * a.get(k, l);
            report.pair_capacity = report.pair_capacity.max(deviation(check[(ai, bi)], closed));
            grouped[(j, k)] += check[(ai, bi)];
            report.pairs_checked += 1;
        }
        for j in 0..n {
            for k in 0..n {
                let closed = scale * a.get(i, j) * a.get(j, k) * a.get(k, l);
                report.grouped_capacity = report
                    .grouped_capacity
                    .max(deviation(grouped[(j, k)], closed));
            }
        }
        let out: f64 = check.row(ai).iter().sum();
        report.out_capacity = report.out_capacity.max(deviation(out, scale * a3[(i, l)]));
    }
    Ok(report)
}
