//! Solve-method registry: the four strategies (cutting-plane loop, lazy-cut
//! branch-and-cut, extensive form, implicit enumeration) behind one trait so
//! drivers can select them by name.

use thiserror::Error;

use crate::engine::{self, EngineError, IterationRecord, RunConfig, RunStatus, SolveMode};
use crate::model::{identify_distribution, SpInstance};
use crate::ppp::{self, PppError, DEFAULT_ORACLE_CAP};

#[derive(Debug, Error)]
pub enum MethodError {
    #[error("unknown method '{0}'")]
    UnknownMethod(String),
    #[error("method not applicable: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Ppp(#[from] PppError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeStatus {
    Optimal,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub status: OutcomeStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub d: usize,
    pub lower: f64,
    pub upper: f64,
    /// Cut counts (feasibility, optimality, distribution-independent);
    /// zero for the monolithic methods.
    pub cuts_feas: usize,
    pub cuts_opt: usize,
    pub cuts_dist_ind: usize,
    pub iterations: Vec<IterationRecord>,
    pub nodes: u64,
}

pub trait SolveMethod {
    fn name(&self) -> &'static str;
    fn solve(&self, instance: &SpInstance, cfg: &RunConfig) -> Result<MethodOutcome, MethodError>;
}

fn from_run(res: engine::RunResult) -> MethodOutcome {
    use crate::engine::CutKind;
    let count = |pred: &dyn Fn(CutKind) -> bool| {
        res.cuts.iter().filter(|c| pred(c.kind)).count()
    };
    MethodOutcome {
        status: match res.status {
            RunStatus::Optimal => OutcomeStatus::Optimal,
            RunStatus::TimeLimit => OutcomeStatus::TimeLimit,
        },
        objective: res.objective,
        x: res.x,
        d: res.d,
        lower: res.lower,
        upper: res.upper,
        cuts_feas: count(&|k| matches!(k, CutKind::ContFeas | CutKind::IntFeas)),
        cuts_opt: count(&|k| matches!(k, CutKind::ContOpt | CutKind::IntOpt)),
        cuts_dist_ind: count(&|k| matches!(k, CutKind::DistInd)),
        iterations: res.iterations,
        nodes: res.master_nodes,
    }
}

pub struct LsLoop;

impl SolveMethod for LsLoop {
    fn name(&self) -> &'static str {
        "ls-loop"
    }

    fn solve(&self, instance: &SpInstance, cfg: &RunConfig) -> Result<MethodOutcome, MethodError> {
        Ok(from_run(engine::run(instance, cfg, SolveMode::Loop)?))
    }
}

pub struct LsCallback;

impl SolveMethod for LsCallback {
    fn name(&self) -> &'static str {
        "ls-callback"
    }

    fn solve(&self, instance: &SpInstance, cfg: &RunConfig) -> Result<MethodOutcome, MethodError> {
        Ok(from_run(engine::run(instance, cfg, SolveMode::Callback)?))
    }
}

pub struct Extensive;

impl SolveMethod for Extensive {
    fn name(&self) -> &'static str {
        "extensive"
    }

    fn solve(&self, instance: &SpInstance, cfg: &RunConfig) -> Result<MethodOutcome, MethodError> {
        let sol = ppp::solve_extensive(instance, Some(cfg.time_limit))?;
        Ok(MethodOutcome {
            status: if sol.hit_time_limit {
                OutcomeStatus::TimeLimit
            } else {
                OutcomeStatus::Optimal
            },
            objective: sol.objective,
            lower: sol.bound,
            upper: sol.objective,
            x: sol.x,
            d: sol.d,
            cuts_feas: 0,
            cuts_opt: 0,
            cuts_dist_ind: 0,
            iterations: vec![],
            nodes: sol.node_count,
        })
    }
}

pub struct Oracle;

impl SolveMethod for Oracle {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn solve(&self, instance: &SpInstance, _cfg: &RunConfig) -> Result<MethodOutcome, MethodError> {
        let res = match ppp::enumeration_oracle(instance, DEFAULT_ORACLE_CAP) {
            Ok(r) => r,
            Err(PppError::TooManyDistributions(nd)) => {
                return Err(MethodError::Unsupported(format!(
                    "{} distributions exceed the enumeration cap {}",
                    nd, DEFAULT_ORACLE_CAP
                )));
            }
            Err(e) => return Err(e.into()),
        };
        // The oracle re-derives d from the partition as a consistency check.
        let d = identify_distribution(instance, &res.x).unwrap_or(res.d);
        Ok(MethodOutcome {
            status: OutcomeStatus::Optimal,
            objective: res.objective,
            lower: res.objective,
            upper: res.objective,
            x: res.x,
            d,
            cuts_feas: 0,
            cuts_opt: 0,
            cuts_dist_ind: 0,
            iterations: vec![],
            nodes: 0,
        })
    }
}

pub fn registry() -> Vec<Box<dyn SolveMethod>> {
    vec![
        Box::new(LsLoop),
        Box::new(LsCallback),
        Box::new(Extensive),
        Box::new(Oracle),
    ]
}

pub fn lookup(name: &str) -> Result<Box<dyn SolveMethod>, MethodError> {
    registry()
        .into_iter()
        .find(|m| m.name() == name)
        .ok_or_else(|| MethodError::UnknownMethod(name.to_string()))
}
