use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use netcoh::attraction::analyze;
use netcoh::concepts::{concept_sweep, epsilon_concepts};
use netcoh::dynamics::{backward, backward_in, forward, forward_out, teleport, DEFAULT_FIX_COST};
use netcoh::graph::{capacity_distribution, traffic_bias};
use netcoh::information::entropy_bits;
use netcoh::io::{
    fmt_f64, parse_personalization, write_edge_list, write_matrix_tsv, write_rank_tsv,
};
use netcoh::pipeline::{
    complete, concept_layer, ingest, name_concepts, run_pipeline, PipelineConfig,
};
use netcoh::ranking::rank_chain;
use netcoh::sim::{simulate, SimConfig};
use netcoh::verify::{verify, VerifyOptions};
use netcoh::{capacity_matrix, DanglingPolicy, Error, RankKind, RankMode, Result, TeleportParams};

/// Exit status when `verify` ran but some check failed.
const CHECKS_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "netcoh",
    version,
    about = "Path ranking, attraction bias and concepts on cost-weighted directed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an edge list and print it in normalized form.
    Ingest(Common),
    /// Print the v-complete network with provenance in a fourth column.
    Complete(Common),
    /// Print node ranks, highest first.
    Rank {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Dynamics::Forward)]
        dynamics: Dynamics,
        /// Preference matrix as TSV with a node header row.
        #[arg(long)]
        personalization: Option<PathBuf>,
    },
    /// Print a bias matrix of the completed network as TSV.
    Bias {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = BiasMode::Attraction)]
        mode: BiasMode,
    },
    /// Print the mutual information of forward-out and backward-in flow.
    Mutinfo(Common),
    /// Print ε-concepts of the attraction bias as JSON.
    Concepts {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "sweep")]
        epsilon: Option<f64>,
        /// Comma-separated ε values.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<f64>>,
    },
    /// Print aggregate association capacities between ε-concepts as TSV.
    Associations {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: f64,
    },
    /// Estimate a stationary distribution with random surfers.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Dynamics::Pagerank)]
        dynamics: Dynamics,
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        walkers: usize,
    },
    /// Run the identity and closed-form checks and print a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Fault injection: mix this much point mass into the node attraction.
        #[arg(long)]
        perturb: Option<f64>,
    },
    /// Run every stage and write numbered stage files plus a manifest.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dynamics {
    Forward,
    Backward,
    ForwardOut,
    BackwardIn,
    /// Forward dynamics, always damped.
    Pagerank,
}

#[derive(Clone, Copy, ValueEnum)]
enum BiasMode {
    Attraction,
    Traffic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dangling {
    Complete,
    Phantom,
    Reject,
}

/// Settings shared by all commands. Flags override the config file.
#[derive(Args)]
struct Common {
    /// Edge list: `source<TAB>target<TAB>cost[<TAB>provenance]`.
    input: Option<PathBuf>,
    /// JSON pipeline configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    penalty: Option<f64>,
    /// Raise the cutoff until every detour pair is admitted.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    damping: Option<f64>,
    /// Undamped ranks; chains must be irreducible.
    #[arg(long)]
    exact: bool,
    #[arg(long, value_enum)]
    dangling: Option<Dangling>,
    #[arg(long)]
    fixcost: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    edge_limit: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(p) = &self.input {
            cfg.input = p.clone();
        }
        if cfg.input.as_os_str().is_empty() {
            return Err(Error::InvalidParameter("no input file given".into()));
        }
        if let Some(v) = self.cutoff {
            cfg.cutoff = v;
        }
        if let Some(d) = self.penalty {
            cfg.penalty = d;
        }
        cfg.exhaustive |= self.exhaustive;
        if let Some(d) = self.damping {
            cfg.damping = d;
        }
        cfg.exact |= self.exact;
        let fix = self.fixcost.unwrap_or(match cfg.dangling {
            DanglingPolicy::Complete { fix_cost } | DanglingPolicy::Phantom { fix_cost } => {
                fix_cost
            }
            DanglingPolicy::Reject => DEFAULT_FIX_COST,
        });
        cfg.dangling = match self.dangling {
            Some(Dangling::Complete) => DanglingPolicy::Complete { fix_cost: fix },
            Some(Dangling::Phantom) => DanglingPolicy::Phantom { fix_cost: fix },
            Some(Dangling::Reject) => DanglingPolicy::Reject,
            None => match cfg.dangling {
                DanglingPolicy::Complete { .. } => DanglingPolicy::Complete { fix_cost: fix },
                DanglingPolicy::Phantom { .. } => DanglingPolicy::Phantom { fix_cost: fix },
                DanglingPolicy::Reject => DanglingPolicy::Reject,
            },
        };
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(l) = self.edge_limit {
            cfg.edge_limit = l;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn json_out(value: &serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Returns the text for stdout and whether every check passed.
fn run(cli: Cli) -> Result<(String, bool)> {
    let out = match cli.command {
        Command::Ingest(common) => {
            let cfg = common.config()?;
            write_edge_list(&ingest(&cfg.input)?, true)
        }
        Command::Complete(common) => {
            let cfg = common.config()?;
            let c = complete(&ingest(&cfg.input)?, &cfg)?;
            let p = c.params();
            let mut s = format!(
                "# cutoff {}\tpenalty {}\n",
                fmt_f64(p.cutoff),
                fmt_f64(p.penalty)
            );
            s.push_str(&write_edge_list(c.network(), true));
            s
        }
        Command::Rank {
            common,
            dynamics,
            personalization,
        } => {
            let cfg = common.config()?;
            let net = ingest(&cfg.input)?;
            let a = capacity_matrix(&net);
            let mut opts = cfg.rank_options();
            if dynamics == Dynamics::Pagerank && cfg.exact {
                return Err(Error::InvalidParameter(
                    "pagerank dynamics are always damped".into(),
                ));
            }
            if let Some(p) = personalization {
                let m = parse_personalization(&fs::read_to_string(p)?, &net)?;
                match &mut opts.mode {
                    RankMode::Damped(tp) => *tp = tp.clone().with_preference(m),
                    RankMode::Exact => {
                        return Err(Error::InvalidParameter(
                            "personalization needs damping".into(),
                        ))
                    }
                }
            }
            let (chain, label) = match dynamics {
                Dynamics::Forward | Dynamics::Pagerank => {
                    (forward(&a, cfg.dangling)?, RankKind::Pull)
                }
                Dynamics::Backward => (backward(&a, cfg.dangling)?, RankKind::Push),
                Dynamics::ForwardOut => (forward_out(&a, cfg.dangling)?, RankKind::ForwardOut),
                Dynamics::BackwardIn => (backward_in(&a, cfg.dangling)?, RankKind::BackwardIn),
            };
            let r = rank_chain(&chain, &opts, label)?;
            write_rank_tsv(net.nodes(), &r.values)
        }
        Command::Bias { common, mode } => {
            let cfg = common.config()?;
            let c = complete(&ingest(&cfg.input)?, &cfg)?;
            let y = match mode {
                BiasMode::Attraction => analyze(&c, &cfg.rank_options())?.bias,
                BiasMode::Traffic => {
                    traffic_bias(&capacity_distribution(&capacity_matrix(c.network()))?.joint)
                }
            };
            write_matrix_tsv(c.network().nodes(), y.matrix())
        }
        Command::Mutinfo(common) => {
            let cfg = common.config()?;
            let c = complete(&ingest(&cfg.input)?, &cfg)?;
            let res = analyze(&c, &cfg.rank_options())?;
            let names = c.network().nodes();
            let excluded: Vec<_> = res
                .excluded_pairs
                .iter()
                .map(|&(i, l)| [names[i].clone(), names[l].clone()])
                .collect();
            json_out(&json!({
                "mutual_information_bits": res.mutual_information,
                "entropy_fo": entropy_bits(&res.forward_out.values),
                "entropy_bi": entropy_bits(&res.backward_in.values),
                "excluded_pairs": excluded,
            }))?
        }
        Command::Concepts {
            common,
            epsilon,
            sweep,
        } => {
            let cfg = common.config()?;
            let c = complete(&ingest(&cfg.input)?, &cfg)?;
            let y = analyze(&c, &cfg.rank_options())?.bias;
            match (epsilon, sweep) {
                (_, Some(grid)) => {
                    let layers: Vec<_> = concept_sweep(&y, &grid, cfg.clique_cap)?
                        .iter()
                        .map(|l| json!({"epsilon": l.epsilon, "concepts": name_concepts(c.network(), &l.concepts)}))
                        .collect();
                    json_out(&json!({ "layers": layers }))?
                }
                (eps, None) => {
                    let eps = eps.unwrap_or(0.0);
                    let concepts = epsilon_concepts(&y, eps, cfg.clique_cap)?;
                    json_out(
                        &json!({"epsilon": eps, "concepts": name_concepts(c.network(), &concepts)}),
                    )?
                }
            }
        }
        Command::Associations { common, epsilon } => {
            let cfg = common.config()?;
            let c = complete(&ingest(&cfg.input)?, &cfg)?;
            let y = analyze(&c, &cfg.rank_options())?.bias;
            let layer = concept_layer(&c, &y, epsilon, cfg.clique_cap)?;
            let label = |k: usize| layer.concepts[k].members.join(",");
            let mut s = String::from("from\tto\tcount\tcapacity\n");
            for a in &layer.associations {
                s.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    label(a.from),
                    label(a.to),
                    a.count,
                    fmt_f64(a.capacity)
                ));
            }
            s
        }
        Command::Simulate {
            common,
            dynamics,
            steps,
            seed,
            walkers,
        } => {
            let cfg = common.config()?;
            let net = ingest(&cfg.input)?;
            let a = capacity_matrix(&net);
            let chain = match dynamics {
                Dynamics::Forward | Dynamics::Pagerank => forward(&a, cfg.dangling)?,
                Dynamics::Backward => backward(&a, cfg.dangling)?,
                Dynamics::ForwardOut | Dynamics::BackwardIn => {
                    return Err(Error::InvalidParameter(
                        "forward-out and backward-in scores are not stochastic".into(),
                    ))
                }
            };
            let chain = if cfg.exact && dynamics != Dynamics::Pagerank {
                chain
            } else {
                teleport(&chain, &TeleportParams::new(cfg.damping))?
            };
            let sc = SimConfig::new(steps, seed.unwrap_or(cfg.seed)).with_walkers(walkers);
            let r = simulate(&chain, &sc)?;
            let mut nodes = net.nodes().to_vec();
            if chain.has_phantom() {
                nodes.push("@phantom".into());
            }
            json_out(&json!({
                "nodes": nodes,
                "frequencies": r.frequencies,
                "stderr": r.stderr,
                "counts": r.counts,
                "seed": r.seed,
                "rng": r.rng,
                "steps": r.steps,
                "burn_in": r.burn_in,
                "walkers": r.walkers,
            }))?
        }
        Command::Verify { common, perturb } => {
            let cfg = common.config()?;
            let net = ingest(&cfg.input)?;
            let report = verify(&net, &cfg, &VerifyOptions { perturb })?;
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            return Ok((s, report.passed));
        }
        Command::Pipeline { common, output_dir } => {
            let mut cfg = common.config()?;
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            let out = run_pipeline(&cfg)?;
            let mut s = String::new();
            for f in out.files.iter().chain([&out.manifest]) {
                s.push_str(&format!("{}\n", f.display()));
            }
            s
        }
    };
    Ok((out, true))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = netcoh::configure_threads_from_env() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    match run(cli) {
        Ok((out, passed)) => {
            print!("{out}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(CHECKS_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
