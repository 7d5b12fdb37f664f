//! Network coherence analysis: v-completion, capacity dynamics, ranks,
//! path networks, attraction bias, concept extraction and a random surfer.

pub mod attraction;
pub mod completion;
pub mod concepts;
pub mod dist;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod information;
pub mod io;
pub mod matrix;
pub mod path_network;
pub mod pipeline;
pub mod ranking;
pub mod sim;
pub mod verify;

pub use attraction::{
    analyze, attraction_dynamics, attraction_stationary, AttractionOperator, AttractionResult,
};
pub use completion::{exhaustive_complete, v_complete, CompletedNetwork, CompletionParams};
pub use concepts::{epsilon_concepts, ConceptSet};
pub use dist::{Convergence, Distribution, JointDistribution, JointKind, RankKind};
pub use dynamics::{DanglingPolicy, Orientation, StochasticChain, TeleportParams};
pub use error::{Error, Result};
pub use graph::{capacity_matrix, BiasMatrix, CapacityMatrix, Edge, EdgeRecord, Network};
pub use matrix::Matrix;
pub use pipeline::{run_pipeline, PipelineConfig};
pub use ranking::{RankMode, RankOptions};
pub use sim::{SimConfig, SimResult};

/// Size the global thread pool from `NETCOH_THREADS` when it is set to a
/// positive integer. Has no effect once the pool exists.
pub fn configure_threads_from_env() -> Result<()> {
    let Ok(v) = std::env::var("NETCOH_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::InvalidParameter(format!("NETCOH_THREADS={v} is not a positive integer"))
    })?;
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}
