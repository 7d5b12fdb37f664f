//! v-completion: close a network under composition of walks whose penalized
//! cost stays within a cutoff.
//!
//! A walk `a_1 … a_n` costs `(n-1)·penalty + Σ γ(a_t)`. Every walk within
//! the cutoff becomes one edge whose provenance is the concatenation of the
//! provenances of its constituents, so completing an already completed
//! network reproduces it (edges are identified by flattened provenance).
//!
//! Enumeration is a depth-first search pruned by a lower bound on the cost
//! of any continuation, which is finite because every cycle is required to
//! have strictly positive penalized cost.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{Edge, Network};

pub const DEFAULT_EDGE_LIMIT: usize = 1_000_000;
const MAX_EXHAUSTIVE_ROUNDS: usize = 4096;
/// Rounds the admitting cutoff may run ahead of the current one without the
/// gap shrinking before the search is abandoned.
const STALLED_ROUNDS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompletionParams {
    pub cutoff: f64,
    /// Added once per extra hop in a composed walk.
    pub penalty: f64,
    /// Hard cap on completed edges (and on search effort).
    pub edge_limit: usize,
}

impl CompletionParams {
    pub fn new(cutoff: f64, penalty: f64) -> Self {
        Self {
            cutoff,
            penalty,
            edge_limit: DEFAULT_EDGE_LIMIT,
        }
    }

    pub fn with_cutoff(self, cutoff: f64) -> Self {
        Self { cutoff, ..self }
    }

    pub fn with_edge_limit(self, edge_limit: usize) -> Self {
        Self { edge_limit, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !self.cutoff.is_finite() || !self.penalty.is_finite() {
            return Err(Error::InvalidParameter(
                "cutoff and penalty must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// How an exhaustive cutoff was found.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExhaustiveInfo {
    /// Largest `γ(f0)+γ(b)+γ(f1)−γ(a)` over all detour candidates, if any.
    pub max_detour: Option<f64>,
    pub rounds: usize,
}

#[derive(Clone, Debug)]
pub struct CompletedNetwork {
    network: Network,
    params: CompletionParams,
    exhaustive: Option<ExhaustiveInfo>,
}

impl CompletedNetwork {
    /// Accept a network (e.g. read back from disk) after checking it is
    /// v-complete for `params`.
    pub fn from_network(network: Network, params: CompletionParams) -> Result<Self> {
        if !is_v_complete(&network, params)? {
            return Err(Error::NotComplete {
                cutoff: params.cutoff,
                penalty: params.penalty,
            });
        }
        Ok(Self {
            network,
            params,
            exhaustive: None,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn params(&self) -> CompletionParams {
        self.params
    }

    pub fn exhaustive(&self) -> Option<ExhaustiveInfo> {
        self.exhaustive
    }

    pub fn into_network(self) -> Network {
        self.network
    }
}

/// A closed walk whose penalized cost is ≤ 0, as node indices `v0 … vk = v0`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonPositiveCycle {
    pub nodes: Vec<usize>,
    pub cost: f64,
}

/// Cheapest parallel edge per ordered pair under weight `γ + penalty`.
fn pair_weights(net: &Network, penalty: f64) -> Vec<f64> {
    let n = net.node_count();
    let mut w = vec![f64::INFINITY; n * n];
    for e in net.edges() {
        let c = e.cost + penalty;
        let slot = &mut w[e.source * n + e.target];
        if c < *slot {
            *slot = c;
        }
    }
    w
}

/// Find a simple cycle with `n·penalty + Σγ ≤ 0`, if any.
pub fn find_nonpositive_cycle(net: &Network, penalty: f64) -> Option<NonPositiveCycle> {
    let n = net.node_count();
    let w = pair_weights(net, penalty);
    let weight = |nodes: &[usize]| -> f64 { nodes.windows(2).map(|p| w[p[0] * n + p[1]]).sum() };

    for start in 0..n {
        // best[k][v]: cheapest k-hop walk start -> v; parent[k][v]: predecessor.
        let mut best = vec![vec![f64::INFINITY; n]; n + 1];
        let mut parent = vec![vec![usize::MAX; n]; n + 1];
        best[0][start] = 0.0;
        for k in 1..=n {
            for u in 0..n {
                let bu = best[k - 1][u];
                if bu == f64::INFINITY {
                    continue;
                }
                for v in 0..n {
                    let c = bu + w[u * n + v];
                    if c < best[k][v] {
                        best[k][v] = c;
                        parent[k][v] = u;
                    }
                }
            }
            if best[k][start] <= 0.0 {
                let mut nodes = vec![start; k + 1];
                let mut v = start;
                for hop in (1..=k).rev() {
                    v = parent[hop][v];
                    nodes[hop - 1] = v;
                }
                let nodes = simple_subcycle(nodes, &weight);
                let cost = weight(&nodes);
                return Some(NonPositiveCycle { nodes, cost });
            }
        }
    }
    None
}

/// Split a closed walk at repeated nodes until a simple cycle of
/// nonpositive weight remains.
fn simple_subcycle(mut walk: Vec<usize>, weight: &impl Fn(&[usize]) -> f64) -> Vec<usize> {
    loop {
        let body = &walk[..walk.len() - 1];
        let mut first_seen: HashMap<usize, usize> = HashMap::new();
        let mut repeat = None;
        for (pos, &v) in body.iter().enumerate() {
            if let Some(&prev) = first_seen.get(&v) {
                repeat = Some((prev, pos));
                break;
            }
            first_seen.insert(v, pos);
        }
        let Some((i, j)) = repeat else {
            return walk;
        };
        let inner = walk[i..=j].to_vec();
        let mut outer = walk[..=i].to_vec();
        outer.extend_from_slice(&walk[j + 1..]);
        walk = if weight(&inner) <= 0.0 { inner } else { outer };
    }
}

fn check_cycles(net: &Network, penalty: f64) -> Result<()> {
    if let Some(cycle) = find_nonpositive_cycle(net, penalty) {
        return Err(Error::DivergentCompletion {
            cycle: cycle
                .nodes
                .iter()
                .map(|&i| net.nodes()[i].clone())
                .collect(),
            cost: cycle.cost,
        });
    }
    Ok(())
}

/// `reach[u]`: cheapest penalized cost of any (possibly empty) continuation
/// from `u`, i.e. `min(0, shortest walk from u)`.
fn continuation_bounds(net: &Network, penalty: f64) -> Vec<f64> {
    let n = net.node_count();
    let mut d = pair_weights(net, penalty);
    for i in 0..n {
        d[i * n + i] = d[i * n + i].min(0.0);
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let c = dik + d[k * n + j];
                if c < d[i * n + j] {
                    d[i * n + j] = c;
                }
            }
        }
    }
    (0..n)
        .map(|u| d[u * n..(u + 1) * n].iter().copied().fold(0.0, f64::min))
        .collect()
}

fn slack(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

struct Walk {
    source: usize,
    target: usize,
    cost: f64,
    len: usize,
}

/// Enumerate every walk of cost ≤ `cutoff`, keyed by flattened provenance.
fn enumerate_walks(
    net: &Network,
    params: CompletionParams,
    bounds: &[f64],
) -> Result<HashMap<Vec<String>, Walk>> {
    let out = net.out_edges();
    let edges = net.edges();
    let cutoff = params.cutoff;
    let prune_at = cutoff + slack(cutoff);
    let step_limit = params.edge_limit.saturating_mul(64);
    let mut steps = 0usize;
    let mut found: HashMap<Vec<String>, Walk> = HashMap::new();
    let mut stack: Vec<usize> = Vec::new();

    // Iterative DFS over (edge index, cost) frames.
    for (start, e0) in edges.iter().enumerate() {
        let mut frames: Vec<(usize, f64, usize)> = Vec::new(); // (edge, cost, next child)
        if e0.cost + bounds[e0.target] > prune_at {
            continue;
        }
        frames.push((start, e0.cost, 0));
        stack.clear();
        stack.push(start);
        record(
            &mut found,
            edges,
            &stack,
            e0.cost,
            cutoff,
            params.edge_limit,
        )?;
        while let Some(frame) = frames.last_mut() {
            let (edge, cost, child) = *frame;
            let node = edges[edge].target;
            if child >= out[node].len() {
                frames.pop();
                stack.pop();
                continue;
            }
            frame.2 += 1;
            steps += 1;
            if steps > step_limit {
                return Err(Error::ResourceCap {
                    what: "completion search steps",
                    limit: step_limit,
                });
            }
            let next = out[node][child];
            let e = &edges[next];
            let c = cost + params.penalty + e.cost;
            if c + bounds[e.target] > prune_at {
                continue;
            }
            stack.push(next);
            record(&mut found, edges, &stack, c, cutoff, params.edge_limit)?;
            frames.push((next, c, 0));
        }
    }
    Ok(found)
}

fn record(
    found: &mut HashMap<Vec<String>, Walk>,
    edges: &[Edge],
    walk: &[usize],
    cost: f64,
    cutoff: f64,
    limit: usize,
) -> Result<()> {
    if cost > cutoff {
        return Ok(());
    }
    let provenance: Vec<String> = walk
        .iter()
        .flat_map(|&k| edges[k].provenance.iter().cloned())
        .collect();
    let candidate = Walk {
        source: edges[walk[0]].source,
        target: edges[*walk.last().unwrap()].target,
        cost,
        len: walk.len(),
    };
    match found.get_mut(&provenance) {
        // fewer constituents wins, so existing composite edges keep their cost
        Some(existing) if existing.len > candidate.len => *existing = candidate,
        Some(_) => {}
        None => {
            if found.len() >= limit {
                return Err(Error::ResourceCap {
                    what: "completed edges",
                    limit,
                });
            }
            found.insert(provenance, candidate);
        }
    }
    Ok(())
}

/// The v-completion of `net`, edges sorted by provenance.
pub fn v_complete(net: &Network, params: CompletionParams) -> Result<CompletedNetwork> {
    params.validate()?;
    check_cycles(net, params.penalty)?;
    let bounds = continuation_bounds(net, params.penalty);
    let found = enumerate_walks(net, params, &bounds)?;
    let mut entries: Vec<(Vec<String>, Walk)> = found.into_iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let edges = entries
        .into_iter()
        .map(|(provenance, w)| Edge {
            id: provenance.join(","),
            source: w.source,
            target: w.target,
            cost: w.cost,
            provenance,
        })
        .collect();
    Ok(CompletedNetwork {
        network: net.with_edges(edges),
        params,
        exhaustive: None,
    })
}

/// True iff completing `net` neither adds nor drops an edge.
pub fn is_v_complete(net: &Network, params: CompletionParams) -> Result<bool> {
    let completed = v_complete(net, params)?;
    let mut have: Vec<&Vec<String>> = net.edges().iter().map(|e| &e.provenance).collect();
    have.sort();
    let want: Vec<&Vec<String>> = completed
        .network
        .edges()
        .iter()
        .map(|e| &e.provenance)
        .collect();
    Ok(have == want)
}

/// Smallest walk cost strictly above `v`, if any walk costs more than `v`.
pub fn next_walk_cost(net: &Network, penalty: f64, v: f64, limit: usize) -> Result<Option<f64>> {
    check_cycles(net, penalty)?;
    let bounds = continuation_bounds(net, penalty);
    let out = net.out_edges();
    let edges = net.edges();
    let step_limit = limit.saturating_mul(64);
    let mut steps = 0usize;
    let mut best = f64::INFINITY;
    for (start, e0) in edges.iter().enumerate() {
        let mut frames: Vec<(usize, f64, usize)> = vec![(start, e0.cost, 0)];
        if e0.cost > v {
            best = best.min(e0.cost);
        }
        while let Some(frame) = frames.last_mut() {
            let (edge, cost, child) = *frame;
            let node = edges[edge].target;
            if child >= out[node].len() {
                frames.pop();
                continue;
            }
            frame.2 += 1;
            steps += 1;
            if steps > step_limit {
                return Err(Error::ResourceCap {
                    what: "breakpoint search steps",
                    limit: step_limit,
                });
            }
            let next = out[node][child];
            let c = cost + penalty + edges[next].cost;
            if c + bounds[edges[next].target] >= best {
                continue;
            }
            if c > v {
                best = best.min(c);
            }
            frames.push((next, c, 0));
        }
    }
    Ok((best < f64::INFINITY).then_some(best))
}

/// Max of `γ(f0)+γ(b)+γ(f1)−γ(a)` over a: i→ℓ, b: j→k, f0 ∈ E_ij, f1 ∈ E_kℓ.
pub fn max_detour(net: &Network) -> Option<f64> {
    let n = net.node_count();
    let mut max_e = vec![f64::NEG_INFINITY; n * n];
    let mut min_e = vec![f64::INFINITY; n * n];
    for e in net.edges() {
        let at = e.source * n + e.target;
        max_e[at] = max_e[at].max(e.cost);
        min_e[at] = min_e[at].min(e.cost);
    }
    let mut best: Option<f64> = None;
    for i in 0..n {
        for l in 0..n {
            let a = min_e[i * n + l];
            if a == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let f0 = max_e[i * n + j];
                if f0 == f64::NEG_INFINITY {
                    continue;
                }
                for k in 0..n {
                    let b = max_e[j * n + k];
                    let f1 = max_e[k * n + l];
                    if b == f64::NEG_INFINITY || f1 == f64::NEG_INFINITY {
                        continue;
                    }
                    let d = f0 + b + f1 - a;
                    best = Some(best.map_or(d, |m: f64| m.max(d)));
                }
            }
        }
    }
    best
}

/// Smallest cutoff `x ≥ floor` with `detour ≤ x − 2·penalty` in floating point.
fn admitting_cutoff(floor: f64, detour: f64, penalty: f64) -> f64 {
    let mut x = floor.max(detour + 2.0 * penalty);
    while x - 2.0 * penalty < detour {
        x = x.next_up();
    }
    x
}

/// Complete `net` at the smallest cutoff `v ≥ params.cutoff` for which the
/// completion is still v-complete and admits every detour pair
/// `E_ij × E_kℓ` into the path network. The chosen cutoff is recorded in the
/// returned params.
pub fn exhaustive_complete(net: &Network, params: CompletionParams) -> Result<CompletedNetwork> {
    params.validate()?;
    let mut v = params.cutoff;
    let mut best_gap = f64::INFINITY;
    let mut stalled = 0;
    for round in 1..=MAX_EXHAUSTIVE_ROUNDS {
        let completed = v_complete(net, params.with_cutoff(v))?;
        let detour = max_detour(completed.network());
        let needed = detour.map_or(v, |m| admitting_cutoff(v, m, params.penalty));
        let next = next_walk_cost(net, params.penalty, v, params.edge_limit)?;
        // E^{*v} is constant on [v, next)
        if next.is_none_or(|nb| needed < nb) {
            return Ok(CompletedNetwork {
                network: completed.network,
                params: params.with_cutoff(needed),
                exhaustive: Some(ExhaustiveInfo {
                    max_detour: detour,
                    rounds: round,
                }),
            });
        }
        let gap = needed - v;
        if gap < best_gap {
            best_gap = gap;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALLED_ROUNDS {
                return Err(Error::NoExhaustiveCutoff { rounds: round });
            }
        }
        v = next.unwrap();
    }
    Err(Error::NoExhaustiveCutoff {
        rounds: MAX_EXHAUSTIVE_ROUNDS,
    })
}
