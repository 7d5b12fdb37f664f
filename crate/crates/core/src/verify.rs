//! Executable checks of the closed forms and identities on one input
//! network, collected into a machine-readable report.

use serde::Serialize;

use crate::attraction::{analyze, attraction_bias, marginal_check, AttractionResult};
use crate::completion::{exhaustive_complete, v_complete, CompletedNetwork};
use crate::dist::JointDistribution;
use crate::dynamics::{forward, teleport, TeleportParams};
use crate::error::{Error, Result};
use crate::graph::{capacity_distribution, capacity_matrix, traffic_bias, Network};
use crate::path_network::closed_form_check;
use crate::pipeline::PipelineConfig;
use crate::ranking::{stationary, RankOptions, StationaryConfig};
use crate::sim::{simulate, SimConfig};

pub const CLOSED_FORM_TOL: f64 = 1e-10;
pub const ROUTE_TOL: f64 = 1e-8;
pub const MARGINAL_TOL: f64 = 1e-8;
pub const SUM_TOL: f64 = 1e-12;
pub const SIM_SIGMAS: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// The check could not be evaluated.
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub value: Option<f64>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn bounded(name: &'static str, value: f64, tolerance: f64) -> Self {
        Check {
            name,
            status: if value <= tolerance {
                Status::Pass
            } else {
                Status::Fail
            },
            value: Some(value),
            tolerance,
            detail: None,
        }
    }

    fn failed(name: &'static str, tolerance: f64, err: &Error) -> Self {
        Check {
            name,
            status: Status::Error,
            value: None,
            tolerance,
            detail: Some(err.to_string()),
        }
    }

    fn from_result(name: &'static str, tolerance: f64, r: Result<f64>) -> Self {
        match r {
            Ok(v) => Check::bounded(name, v, tolerance),
            Err(e) => Check::failed(name, tolerance, &e),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    /// Cutoff of the exhaustive completion the attraction checks ran on.
    pub exhaustive_cutoff: Option<f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Mix this much point mass at pair (0, 0) into `r̂` before the
    /// marginal check; a fault-injection hook.
    pub perturb: Option<f64>,
}

fn perturbed(r: &JointDistribution, f: f64) -> JointDistribution {
    let mut v = r.values.scale(1.0 - f);
    v[(0, 0)] += f;
    JointDistribution::new(v, r.label)
}

/// Run every check on `net` under `cfg`. Attraction checks
/// use an exhaustive completion with `cfg.cutoff` as the floor and
/// undamped ranks.
pub fn verify(net: &Network, cfg: &PipelineConfig, vopts: &VerifyOptions) -> Result<VerifyReport> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let exact = RankOptions {
        stationary: StationaryConfig {
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            lazy: false,
        },
        ..RankOptions::exact()
    };

    let exhaustive = exhaustive_complete(net, cfg.completion_params());
    let exhaustive_cutoff = exhaustive.as_ref().ok().map(|c| c.params().cutoff);
    match &exhaustive {
        Ok(c) => attraction_checks(c, &exact, vopts, &mut checks),
        Err(e) => {
            for (name, tol) in [
                ("closed-form", CLOSED_FORM_TOL),
                ("route-agreement", ROUTE_TOL),
                ("marginals", MARGINAL_TOL),
                ("attraction-bias-sum", SUM_TOL),
            ] {
                checks.push(Check::failed(name, tol, e));
            }
        }
    }

    let completed = if cfg.exhaustive {
        exhaustive
    } else {
        v_complete(net, cfg.completion_params())
    };
    match completed {
        Ok(c) => {
            checks.push(Check::from_result("idempotence", 0.0, idempotence_gap(&c)));
            checks.push(Check::from_result(
                "traffic-bias-sum",
                SUM_TOL,
                traffic_sum(&c),
            ));
            checks.push(Check::from_result(
                "simulator",
                SIM_SIGMAS,
                simulator_z(&c, cfg),
            ));
        }
        Err(e) => {
            for (name, tol) in [
                ("idempotence", 0.0),
                ("traffic-bias-sum", SUM_TOL),
                ("simulator", SIM_SIGMAS),
            ] {
                checks.push(Check::failed(name, tol, &e));
            }
        }
    }
    let passed = checks.iter().all(|c| c.status == Status::Pass);
    Ok(VerifyReport {
        exhaustive_cutoff,
        checks,
        passed,
    })
}

fn attraction_checks(
    c: &CompletedNetwork,
    exact: &RankOptions,
    vopts: &VerifyOptions,
    checks: &mut Vec<Check>,
) {
    checks.push(Check::from_result(
        "closed-form",
        CLOSED_FORM_TOL,
        closed_form_check(c).map(|r| r.max_deviation()),
    ));
    let res: Result<AttractionResult> = analyze(c, exact);
    match res {
        Ok(res) => {
            checks.push(Check::bounded(
                "route-agreement",
                res.route_gap(),
                ROUTE_TOL,
            ));
            let r = match vopts.perturb {
                Some(f) => perturbed(&res.node_attraction, f),
                None => res.node_attraction.clone(),
            };
            let m = marginal_check(&r, &res.forward_out, &res.backward_in);
            checks.push(Check::bounded("marginals", m.max_deviation(), MARGINAL_TOL));
            let y = attraction_bias(&r, &res.forward_out, &res.backward_in);
            checks.push(Check::bounded(
                "attraction-bias-sum",
                y.sum().abs(),
                SUM_TOL,
            ));
        }
        Err(e) => {
            for (name, tol) in [
                ("route-agreement", ROUTE_TOL),
                ("marginals", MARGINAL_TOL),
                ("attraction-bias-sum", SUM_TOL),
            ] {
                checks.push(Check::failed(name, tol, &e));
            }
        }
    }
}

/// Number of edges whose provenance or cost changes under re-completion.
fn idempotence_gap(c: &CompletedNetwork) -> Result<f64> {
    let again = v_complete(c.network(), c.params())?;
    let (a, b) = (c.network().edges(), again.network().edges());
    if a.len() != b.len() {
        return Ok(a.len().abs_diff(b.len()) as f64);
    }
    Ok(a.iter()
        .zip(b)
        .filter(|(x, y)| x.provenance != y.provenance || (x.cost - y.cost).abs() > 1e-12)
        .count() as f64)
}

fn traffic_sum(c: &CompletedNetwork) -> Result<f64> {
    let alpha = capacity_distribution(&capacity_matrix(c.network()))?.joint;
    Ok(traffic_bias(&alpha).sum().abs())
}

/// Largest z-score of the simulated damped forward chain against its
/// stationary distribution.
fn simulator_z(c: &CompletedNetwork, cfg: &PipelineConfig) -> Result<f64> {
    let a = capacity_matrix(c.network());
    let tp = TeleportParams::new(if cfg.exact {
        TeleportParams::default().damping
    } else {
        cfg.damping
    });
    let chain = teleport(&forward(&a, cfg.dangling)?, &tp)?;
    let pi = stationary(&chain, StationaryConfig::default())?;
    let sim = simulate(&chain, &SimConfig::new(cfg.sim_steps, cfg.seed))?;
    Ok(sim.max_z(&pi.values))
}
