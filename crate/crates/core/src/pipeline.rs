//! End-to-end runs: configuration, the individual stages, and the
//! numbered stage files plus manifest written by [`run_pipeline`].

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attraction::{analyze, AttractionResult};
use crate::completion::{
    exhaustive_complete, v_complete, CompletedNetwork, CompletionParams, DEFAULT_EDGE_LIMIT,
};
use crate::concepts::{
    concept_associations, epsilon_concepts, finite_or_null, ConceptSet, DEFAULT_CLIQUE_CAP,
};
use crate::dynamics::{
    backward, backward_in, forward, forward_out, DanglingPolicy, TeleportParams, DEFAULT_DAMPING,
};
use crate::error::{Error, Result};
use crate::graph::{capacity_distribution, capacity_matrix, traffic_bias, BiasMatrix, Network};
use crate::information::entropy_bits;
use crate::io::{fmt_f64, read_edge_list, write_columns_tsv, write_edge_list};
use crate::ranking::{
    bi_rank, fo_rank, pull_rank, push_rank, RankMode, RankOptions, StationaryConfig,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};

pub const STAGE_FILES: [&str; 7] = [
    "01-ingest.tsv",
    "02-complete.tsv",
    "03-dynamics.json",
    "04-ranks.tsv",
    "05-path-network.tsv",
    "06-bias.json",
    "07-concepts.json",
];
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub cutoff: f64,
    pub penalty: f64,
    /// Raise the cutoff until every detour pair is admitted.
    pub exhaustive: bool,
    pub damping: f64,
    /// Undamped ranks; needs irreducible chains.
    pub exact: bool,
    pub dangling: DanglingPolicy,
    pub epsilon_grid: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub edge_limit: usize,
    pub clique_cap: usize,
    pub seed: u64,
    pub sim_steps: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: PathBuf::new(),
            output_dir: PathBuf::from("out"),
            cutoff: 3.0,
            penalty: 1.0,
            exhaustive: false,
            damping: DEFAULT_DAMPING,
            exact: false,
            dangling: DanglingPolicy::default(),
            epsilon_grid: vec![0.0, 0.01, 0.02, 0.05, 0.1],
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            edge_limit: DEFAULT_EDGE_LIMIT,
            clique_cap: DEFAULT_CLIQUE_CAP,
            seed: 0,
            sim_steps: 1_000_000,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !self.cutoff.is_finite() || !self.penalty.is_finite() {
            return bad("cutoff and penalty must be finite".into());
        }
        if !self.exact && !(self.damping > 0.0 && self.damping < 1.0) {
            return bad(format!("damping {} outside (0, 1)", self.damping));
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return bad(format!("epsilon {e} outside [0, 1]"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("tolerance {} must be positive", self.tol));
        }
        match self.dangling {
            DanglingPolicy::Complete { fix_cost } | DanglingPolicy::Phantom { fix_cost }
                if !fix_cost.is_finite() =>
            {
                bad("fix cost must be finite".into())
            }
            _ => Ok(()),
        }
    }

    pub fn completion_params(&self) -> CompletionParams {
        CompletionParams::new(self.cutoff, self.penalty).with_edge_limit(self.edge_limit)
    }

    pub fn rank_options(&self) -> RankOptions {
        RankOptions {
            mode: if self.exact {
                RankMode::Exact
            } else {
                RankMode::Damped(TeleportParams::new(self.damping))
            },
            dangling: self.dangling,
            stationary: StationaryConfig {
                tol: self.tol,
                max_iter: self.max_iter,
                lazy: false,
            },
        }
    }
}

pub fn ingest(path: &Path) -> Result<Network> {
    read_edge_list(path).map_err(|e| e.in_stage("ingest"))
}

pub fn complete(net: &Network, cfg: &PipelineConfig) -> Result<CompletedNetwork> {
    let params = cfg.completion_params();
    let c = if cfg.exhaustive {
        exhaustive_complete(net, params)
    } else {
        v_complete(net, params)
    };
    c.map_err(|e| e.in_stage("complete"))
}

/// The four node ranks of a network in node order.
#[derive(Clone, Debug)]
pub struct NodeRanks {
    pub pull: Vec<f64>,
    pub push: Vec<f64>,
    pub forward_out: Vec<f64>,
    pub backward_in: Vec<f64>,
}

pub fn node_ranks(net: &Network, opts: &RankOptions) -> Result<NodeRanks> {
    let a = capacity_matrix(net);
    let run = || -> Result<NodeRanks> {
        Ok(NodeRanks {
            pull: pull_rank(&a, opts)?.values,
            push: push_rank(&a, opts)?.values,
            forward_out: fo_rank(&a, opts)?.values,
            backward_in: bi_rank(&a, opts)?.values,
        })
    };
    run().map_err(|e| e.in_stage("ranks"))
}

#[derive(Serialize)]
struct DynamicsReport {
    nodes: Vec<String>,
    dangling: DanglingPolicy,
    phantom: bool,
    capacity: Vec<Vec<f64>>,
    forward: Vec<Vec<f64>>,
    backward: Vec<Vec<f64>>,
    forward_out: Vec<Vec<f64>>,
    backward_in: Vec<Vec<f64>>,
}

fn dynamics_report(net: &Network, policy: DanglingPolicy) -> Result<DynamicsReport> {
    let a = capacity_matrix(net);
    let f = forward(&a, policy)?;
    Ok(DynamicsReport {
        nodes: net.nodes().to_vec(),
        dangling: policy,
        phantom: f.has_phantom(),
        capacity: a.matrix().to_rows(),
        forward: f.matrix().to_rows(),
        backward: backward(&a, policy)?.matrix().to_rows(),
        forward_out: forward_out(&a, policy)?.matrix().to_rows(),
        backward_in: backward_in(&a, policy)?.matrix().to_rows(),
    })
}

fn detour_table(res: &AttractionResult) -> String {
    let edges = res.path_network.base().edges();
    let mut out = String::from("avoided\tattracting\tentry\texit\tcost\n");
    for d in res.path_network.detours() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            edges[d.avoided].id,
            edges[d.attracting].id,
            edges[d.entry].id,
            edges[d.exit].id,
            fmt_f64(d.cost)
        ));
    }
    out
}

#[derive(Serialize)]
struct EdgeRank {
    id: String,
    source: String,
    target: String,
    pull: f64,
    push: f64,
}

#[derive(Serialize)]
pub struct BiasReport {
    nodes: Vec<String>,
    path_ranks: Vec<EdgeRank>,
    node_attraction: Vec<Vec<f64>>,
    forward_out: Vec<f64>,
    backward_in: Vec<f64>,
    attraction_bias: Vec<Vec<f64>>,
    traffic_bias: Vec<Vec<f64>>,
    mutual_information_bits: f64,
    entropy_fo: f64,
    entropy_bi: f64,
    excluded_pairs: Vec<[String; 2]>,
}

pub fn bias_report(net: &CompletedNetwork, res: &AttractionResult) -> Result<BiasReport> {
    let base = net.network();
    let names = base.nodes();
    let alpha = capacity_distribution(&capacity_matrix(base))?.joint;
    Ok(BiasReport {
        nodes: names.to_vec(),
        path_ranks: base
            .edges()
            .iter()
            .enumerate()
            .map(|(k, e)| EdgeRank {
                id: e.id.clone(),
                source: names[e.source].clone(),
                target: names[e.target].clone(),
                pull: res.path_pull.values[k],
                push: res.path_push.values[k],
            })
            .collect(),
        node_attraction: res.node_attraction.values.to_rows(),
        forward_out: res.forward_out.values.clone(),
        backward_in: res.backward_in.values.clone(),
        attraction_bias: res.bias.0.to_rows(),
        traffic_bias: traffic_bias(&alpha).0.to_rows(),
        mutual_information_bits: res.mutual_information,
        entropy_fo: entropy_bits(&res.forward_out.values),
        entropy_bi: entropy_bits(&res.backward_in.values),
        excluded_pairs: res
            .excluded_pairs
            .iter()
            .map(|&(i, l)| [names[i].clone(), names[l].clone()])
            .collect(),
    })
}

/// A concept with node ids in place of indices.
#[derive(Clone, Debug, Serialize)]
pub struct NamedConcept {
    pub members: Vec<String>,
    #[serde(serialize_with = "finite_or_null")]
    pub cohesion: f64,
}

pub fn name_concepts(net: &Network, concepts: &[ConceptSet]) -> Vec<NamedConcept> {
    concepts
        .iter()
        .map(|c| NamedConcept {
            members: c.members.iter().map(|&m| net.nodes()[m].clone()).collect(),
            cohesion: c.cohesion,
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct AssociationSummary {
    pub from: usize,
    pub to: usize,
    pub count: usize,
    pub capacity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerReport {
    pub epsilon: f64,
    pub concepts: Vec<NamedConcept>,
    pub associations: Vec<AssociationSummary>,
}

pub fn concept_layer(
    net: &CompletedNetwork,
    bias: &BiasMatrix,
    eps: f64,
    cap: usize,
) -> Result<LayerReport> {
    let concepts = epsilon_concepts(bias, eps, cap)?;
    let cn = concept_associations(net, &concepts)?;
    let k = concepts.len();
    let mut counts = vec![0usize; k * k];
    for a in &cn.associations {
        counts[a.from * k + a.to] += 1;
    }
    let associations = (0..k * k)
        .filter(|&p| counts[p] > 0)
        .map(|p| AssociationSummary {
            from: p / k,
            to: p % k,
            count: counts[p],
            capacity: cn.capacity[(p / k, p % k)],
        })
        .collect();
    Ok(LayerReport {
        epsilon: eps,
        concepts: name_concepts(net.network(), &concepts),
        associations,
    })
}

#[derive(Serialize)]
struct ConceptsReport {
    layers: Vec<LayerReport>,
}

#[derive(Serialize)]
struct FileDigest {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct CompletionInfo {
    cutoff: f64,
    penalty: f64,
    edges: usize,
    max_detour: Option<f64>,
    exhaustive_rounds: Option<usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a PipelineConfig,
    input: FileDigest,
    completion: CompletionInfo,
    stages: Vec<FileDigest>,
    created_unix: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// Run every stage on `cfg.input` and write the stage files and manifest
/// into `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let input_bytes = fs::read(&cfg.input).map_err(|e| Error::from(e).in_stage("ingest"))?;
    let net = ingest(&cfg.input)?;
    let completed = complete(&net, cfg)?;
    let opts = cfg.rank_options();
    let cnet = completed.network();

    let dynamics = dynamics_report(cnet, cfg.dangling).map_err(|e| e.in_stage("dynamics"))?;
    let ranks = node_ranks(cnet, &opts)?;
    let res = analyze(&completed, &opts).map_err(|e| e.in_stage("path-network"))?;
    let bias = bias_report(&completed, &res).map_err(|e| e.in_stage("bias"))?;
    let layers = cfg
        .epsilon_grid
        .iter()
        .map(|&eps| concept_layer(&completed, &res.bias, eps, cfg.clique_cap))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("concepts"))?;

    let contents = [
        write_edge_list(&net, true),
        write_edge_list(cnet, true),
        to_json(&dynamics)?,
        write_columns_tsv(
            &["node", "pull", "push", "forward-out", "backward-in"],
            cnet.nodes(),
            &[
                &ranks.pull,
                &ranks.push,
                &ranks.forward_out,
                &ranks.backward_in,
            ],
        ),
        detour_table(&res),
        to_json(&bias)?,
        to_json(&ConceptsReport { layers })?,
    ];

    fs::create_dir_all(&cfg.output_dir)?;
    let mut files = Vec::new();
    let mut stages = Vec::new();
    for (name, text) in STAGE_FILES.iter().zip(&contents) {
        let path = cfg.output_dir.join(name);
        fs::write(&path, text)?;
        stages.push(FileDigest {
            file: name.to_string(),
            sha256: sha256_hex(text.as_bytes()),
        });
        files.push(path);
    }
    let params = completed.params();
    let manifest = Manifest {
        tool: "netcoh",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        input: FileDigest {
            file: cfg.input.display().to_string(),
            sha256: sha256_hex(&input_bytes),
        },
        completion: CompletionInfo {
            cutoff: params.cutoff,
            penalty: params.penalty,
            edges: cnet.edge_count(),
            max_detour: completed.exhaustive().and_then(|x| x.max_detour),
            exhaustive_rounds: completed.exhaustive().map(|x| x.rounds),
        },
        stages,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let manifest_path = cfg.output_dir.join(MANIFEST);
    fs::write(&manifest_path, to_json(&manifest)?)?;
    Ok(PipelineOutput {
        files,
        manifest: manifest_path,
    })
}
