//! Cost-labelled directed multigraphs, their capacity matrices, capacity
//! distribution, traffic bias, and set-level cohesion/adhesion.

use std::collections::{HashMap, HashSet};

use crate::dist::{JointDistribution, JointKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A directed edge. `provenance` lists the original edge ids the edge was
/// composed from; for an original edge it is just `[id]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: String,
    pub source: usize,
    pub target: usize,
    pub cost: f64,
    pub provenance: Vec<String>,
}

impl Edge {
    /// `2^(-cost)`.
    pub fn capacity(&self) -> f64 {
        capacity_of(self.cost)
    }

    pub fn hops(&self) -> usize {
        self.provenance.len()
    }
}

pub fn capacity_of(cost: f64) -> f64 {
    (-cost).exp2()
}

/// An edge as it appears in an input file, before validation.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeRecord {
    pub source: String,
    pub target: String,
    pub cost: f64,
    pub provenance: Option<Vec<String>>,
}

impl EdgeRecord {
    pub fn new(source: impl Into<String>, target: impl Into<String>, cost: f64) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            cost,
            provenance: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Network {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
}

impl Network {
    /// Validates node ids and edge endpoints. Edges without provenance get
    /// ids `e0, e1, ...` by position.
    pub fn new(nodes: Vec<String>, records: Vec<EdgeRecord>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, id) in nodes.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateNode(id.clone()));
            }
        }
        let mut edges = Vec::with_capacity(records.len());
        let mut seen = HashSet::with_capacity(records.len());
        for (k, rec) in records.into_iter().enumerate() {
            let provenance = rec.provenance.unwrap_or_else(|| vec![format!("e{k}")]);
            let id = provenance.join(",");
            let lookup = |node: &String| {
                index.get(node).copied().ok_or_else(|| Error::UnknownNode {
                    edge: id.clone(),
                    node: node.clone(),
                })
            };
            let source = lookup(&rec.source)?;
            let target = lookup(&rec.target)?;
            if !rec.cost.is_finite() {
                return Err(Error::NonFiniteCost { edge: id });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateEdge(id));
            }
            edges.push(Edge {
                id,
                source,
                target,
                cost: rec.cost,
                provenance,
            });
        }
        Ok(Self {
            nodes,
            index,
            edges,
        })
    }

    /// Nodes named `"0".."n-1"`.
    pub fn from_indices(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let nodes = (0..n).map(|i| i.to_string()).collect();
        let records = edges
            .iter()
            .map(|&(s, t, c)| EdgeRecord::new(s.to_string(), t.to_string(), c))
            .collect();
        Self::new(nodes, records)
    }

    /// Already-validated edges over the same node set.
    pub(crate) fn with_edges(&self, edges: Vec<Edge>) -> Self {
        Self {
            nodes: self.nodes.clone(),
            index: self.index.clone(),
            edges,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Resolve a list of node ids to indices.
    pub fn node_set(&self, ids: &[&str]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                self.node_index(id).ok_or_else(|| Error::UnknownNode {
                    edge: "<set>".into(),
                    node: id.to_string(),
                })
            })
            .collect()
    }

    /// Edge indices grouped by (source, target).
    pub fn edge_sets(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut sets = vec![Vec::new(); n * n];
        for (k, e) in self.edges.iter().enumerate() {
            sets[e.source * n + e.target].push(k);
        }
        sets
    }

    /// Outgoing edge indices per node.
    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.node_count()];
        for (k, e) in self.edges.iter().enumerate() {
            out[e.source].push(k);
        }
        out
    }
}

/// Convenience constructor from string slices.
pub fn build_network(node_list: &[&str], edge_list: &[(&str, &str, f64)]) -> Result<Network> {
    Network::new(
        node_list.iter().map(|s| s.to_string()).collect(),
        edge_list
            .iter()
            .map(|&(s, t, c)| EdgeRecord::new(s, t, c))
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityMatrix {
    matrix: Matrix,
    edge_capacities: Vec<f64>,
}

impl CapacityMatrix {
    /// Wrap a raw nonnegative matrix, e.g. a path-network capacity matrix.
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension {
                expected: matrix.rows(),
                got: matrix.cols(),
            });
        }
        if matrix.as_slice().iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidParameter(
                "capacities must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            matrix,
            edge_capacities: Vec::new(),
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Per-edge capacities `2^(-γ(e))`, in edge order (empty for raw matrices).
    pub fn edge_capacities(&self) -> &[f64] {
        &self.edge_capacities
    }

    pub fn out_degrees(&self) -> Vec<f64> {
        self.matrix.row_sums()
    }

    pub fn in_degrees(&self) -> Vec<f64> {
        self.matrix.col_sums()
    }

    pub fn total(&self) -> f64 {
        self.matrix.total()
    }
}

pub fn capacity_matrix(net: &Network) -> CapacityMatrix {
    let n = net.node_count();
    let mut matrix = Matrix::square(n);
    let mut edge_capacities = Vec::with_capacity(net.edge_count());
    for e in net.edges() {
        let c = e.capacity();
        matrix[(e.source, e.target)] += c;
        edge_capacities.push(c);
    }
    CapacityMatrix {
        matrix,
        edge_capacities,
    }
}

/// Capacity distribution α with its out-rank (row) and in-rank (column) marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityDistribution {
    pub joint: JointDistribution,
    pub out_rank: Vec<f64>,
    pub in_rank: Vec<f64>,
}

pub fn capacity_distribution(a: &CapacityMatrix) -> Result<CapacityDistribution> {
    let total = a.total();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::ZeroCapacity);
    }
    let alpha = a.matrix().scale(1.0 / total);
    let out_rank = alpha.row_sums();
    let in_rank = alpha.col_sums();
    Ok(CapacityDistribution {
        joint: JointDistribution::new(alpha, JointKind::Capacity),
        out_rank,
        in_rank,
    })
}

/// N×N matrix of bias values: the traffic bias υ or the attraction bias Υ.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasMatrix(pub Matrix);

impl BiasMatrix {
    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn sum(&self) -> f64 {
        self.0.total()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

/// `joint_ij - row_i · col_j`, the deviation of a joint from independence.
pub fn bias_against_product(joint: &Matrix, rows: &[f64], cols: &[f64]) -> BiasMatrix {
    BiasMatrix(Matrix::from_fn(joint.rows(), joint.cols(), |i, j| {
        joint[(i, j)] - rows[i] * cols[j]
    }))
}

/// υ_ij = α_ij − α_i•·α_•j.
pub fn traffic_bias(alpha: &JointDistribution) -> BiasMatrix {
    bias_against_product(&alpha.values, &alpha.row_marginal(), &alpha.col_marginal())
}

fn membership(n: usize, set: &[usize]) -> Vec<bool> {
    let mut inside = vec![false; n];
    for &i in set {
        inside[i] = true;
    }
    inside
}

/// Total bias within `set`. Duplicate indices count once.
pub fn cohesion(bias: &BiasMatrix, set: &[usize]) -> f64 {
    let inside = membership(bias.n(), set);
    let members: Vec<usize> = (0..bias.n()).filter(|&i| inside[i]).collect();
    members
        .iter()
        .flat_map(|&i| members.iter().map(move |&j| (i, j)))
        .map(|(i, j)| bias.get(i, j))
        .sum()
}

/// Total bias between `set` and its exterior, both directions.
pub fn adhesion(bias: &BiasMatrix, set: &[usize]) -> f64 {
    let n = bias.n();
    let inside = membership(n, set);
    let mut total = 0.0;
    for i in (0..n).filter(|&i| inside[i]) {
        for j in (0..n).filter(|&j| !inside[j]) {
            total += bias.get(i, j) + bias.get(j, i);
        }
    }
    total
}
