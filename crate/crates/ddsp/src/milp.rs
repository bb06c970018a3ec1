//! Branch-and-bound mixed-integer solver over the LP kernel.
//!
//! Best-bound node selection, branching on the most fractional integer
//! variable (ties by lowest index), node LPs re-solved from scratch. An
//! optional lazy-cut callback runs at integer-feasible nodes: returned rows
//! are added to a global pool and the node is re-solved instead of fathomed,
//! the branch-and-cut vehicle used by the decomposition engine.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::lp::{self, LinearProgram, LpConfig, LpError, LpStatus, Row, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

#[derive(Debug, Clone)]
pub struct MixedIntegerProgram {
    pub lp: LinearProgram,
    pub kinds: Vec<VarKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub incumbent: Vec<f64>,
    pub objective: f64,
    /// Best dual bound (lower bound for min, upper for max).
    pub bound: f64,
    pub node_count: u64,
}

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("malformed program: {0}")]
    MalformedProgram(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("callback failure: {0}")]
    Callback(String),
}

/// Branching variable selection. `FirstFractional` follows the variable
/// order, which pays off on block-structured models whose leading variables
/// (first stage, cell selectors) decide the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchRule {
    #[default]
    MostFractional,
    FirstFractional,
}

#[derive(Debug, Clone, Copy)]
pub struct MilpConfig {
    pub int_tol: f64,
    pub mip_gap: f64,
    pub lp: LpConfig,
    pub time_limit: Option<Duration>,
    pub node_limit: u64,
    pub branch_rule: BranchRule,
}

impl Default for MilpConfig {
    fn default() -> Self {
        MilpConfig {
            int_tol: 1e-6,
            mip_gap: 1e-4,
            lp: LpConfig::default(),
            time_limit: None,
            node_limit: 50_000_000,
            branch_rule: BranchRule::default(),
        }
    }
}

/// Lazy cuts for an integer-feasible node solution (in the original variable
/// space). Empty result accepts the point as an incumbent candidate.
pub type NodeCallback<'a> = &'a mut dyn FnMut(&[f64]) -> Result<Vec<Row>, MilpError>;

struct Node {
    /// Parent LP bound in min form; the priority key.
    key: f64,
    id: u64,
    bounds: Vec<(f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: order so the smallest key (then smallest id)
    // is popped first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.id.cmp(&self.id))
    }
}

pub fn solve_milp(
    mip: &MixedIntegerProgram,
    callback: Option<NodeCallback>,
) -> Result<MilpSolution, MilpError> {
    solve_milp_with(mip, callback, &MilpConfig::default())
}

pub fn solve_milp_with(
    mip: &MixedIntegerProgram,
    mut callback: Option<NodeCallback>,
    cfg: &MilpConfig,
) -> Result<MilpSolution, MilpError> {
    let n = mip.lp.num_vars();
    if mip.kinds.len() != n {
        return Err(MilpError::MalformedProgram(format!(
            "kinds length {} != {} variables",
            mip.kinds.len(),
            n
        )));
    }
    for (j, (&k, &(l, u))) in mip.kinds.iter().zip(mip.lp.bounds.iter()).enumerate() {
        if k == VarKind::Binary && (l < -1e-12 || u > 1.0 + 1e-12) {
            return Err(MilpError::MalformedProgram(format!(
                "binary variable {} has bounds [{}, {}] outside [0, 1]",
                j, l, u
            )));
        }
    }
    let maximize = mip.lp.sense == Sense::Max;

    // Work in min form; flip back on exit.
    let mut base = mip.lp.clone();
    if maximize {
        base.sense = Sense::Min;
        for c in base.objective.iter_mut() {
            *c = -*c;
        }
    }
    let int_vars: Vec<usize> = mip
        .kinds
        .iter()
        .enumerate()
        .filter(|(_, &k)| k != VarKind::Continuous)
        .map(|(j, _)| j)
        .collect();

    let start = Instant::now();
    let mut pool: Vec<Row> = Vec::new();
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut next_id: u64 = 0;
    heap.push(Node {
        key: f64::NEG_INFINITY,
        id: next_id,
        bounds: base.bounds.clone(),
    });
    next_id += 1;

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut node_count: u64 = 0;
    // Best global bound reported so far (monotone nondecreasing in min form).
    let mut reported_bound = f64::NEG_INFINITY;

    let finish = |status: MilpStatus,
                  incumbent: Option<(Vec<f64>, f64)>,
                  bound: f64,
                  node_count: u64| {
        let (x, obj) = match incumbent {
            Some((x, o)) => (x, o),
            None => (
                vec![],
                match status {
                    MilpStatus::Infeasible => f64::INFINITY,
                    MilpStatus::Unbounded => f64::NEG_INFINITY,
                    _ => f64::INFINITY,
                },
            ),
        };
        let (obj, bound) = if maximize { (-obj, -bound) } else { (obj, bound) };
        MilpSolution {
            status,
            incumbent: x,
            objective: obj,
            bound,
            node_count,
        }
    };

    loop {
        let Some(node) = heap.pop() else {
            // Tree exhausted: the incumbent is optimal.
            return Ok(match incumbent {
                Some((x, obj)) => finish(MilpStatus::Optimal, Some((x, obj)), obj, node_count),
                None => finish(MilpStatus::Infeasible, None, f64::INFINITY, node_count),
            });
        };
        // The popped key is the best bound over open nodes.
        if node.key > reported_bound {
            reported_bound = node.key;
        }
        if let Some((_, inc_obj)) = &incumbent {
            let tol = cfg.mip_gap * (1.0 + inc_obj.abs());
            if node.key >= inc_obj - tol.min(1e-9) {
                let (x, obj) = incumbent.unwrap();
                return Ok(finish(MilpStatus::Optimal, Some((x, obj)), obj, node_count));
            }
        }
        if let Some(limit) = cfg.time_limit {
            if start.elapsed() >= limit {
                let bound = reported_bound.max(node.key);
                return Ok(finish(MilpStatus::TimeLimit, incumbent, bound, node_count));
            }
        }
        if node_count >= cfg.node_limit {
            let bound = reported_bound.max(node.key);
            return Ok(finish(MilpStatus::TimeLimit, incumbent, bound, node_count));
        }

        // Re-solve the node LP from scratch against the current cut pool.
        'resolve: loop {
            node_count += 1;
            let mut lp = base.clone();
            lp.bounds = node.bounds.clone();
            lp.rows.extend(pool.iter().cloned());
            let sol = lp::solve_lp_with(&lp, &cfg.lp)?;
            match sol.status {
                LpStatus::Infeasible => break 'resolve,
                LpStatus::Unbounded => {
                    if node.id == 0 && incumbent.is_none() {
                        return Ok(finish(
                            MilpStatus::Unbounded,
                            None,
                            f64::NEG_INFINITY,
                            node_count,
                        ));
                    }
                    // A non-root unbounded relaxation still means the MILP
                    // objective is unbounded on this subtree only if an
                    // integer-feasible ray exists; treat as unbounded overall.
                    return Ok(finish(
                        MilpStatus::Unbounded,
                        None,
                        f64::NEG_INFINITY,
                        node_count,
                    ));
                }
                LpStatus::Optimal => {}
            }
            let lp_obj = sol.objective;
            if let Some((_, inc_obj)) = &incumbent {
                if lp_obj >= inc_obj - 1e-9 {
                    break 'resolve;
                }
            }
            // Branching variable per the configured rule; default is the
            // most fractional integer variable with ties by lowest index.
            let mut branch: Option<(usize, f64)> = None;
            let mut best_score = cfg.int_tol;
            for &j in &int_vars {
                let v = sol.primal[j];
                let frac = (v - v.round()).abs();
                if frac > best_score {
                    best_score = frac;
                    branch = Some((j, v));
                    if cfg.branch_rule == BranchRule::FirstFractional {
                        break;
                    }
                }
            }
            match branch {
                None => {
                    // Integer feasible.
                    if let Some(cb) = callback.as_mut() {
                        let cuts = cb(&sol.primal)?;
                        if !cuts.is_empty() {
                            for r in &cuts {
                                if r.coeffs.len() != n {
                                    return Err(MilpError::Callback(format!(
                                        "cut row has {} coefficients, expected {}",
                                        r.coeffs.len(),
                                        n
                                    )));
                                }
                            }
                            pool.extend(cuts);
                            continue 'resolve;
                        }
                    }
                    let better = match &incumbent {
                        None => true,
                        Some((_, inc_obj)) => lp_obj < inc_obj - 1e-12,
                    };
                    if better {
                        incumbent = Some((sol.primal.clone(), lp_obj));
                    }
                    break 'resolve;
                }
                Some((j, v)) => {
                    let (l, u) = node.bounds[j];
                    let fl = v.floor();
                    let mut down = node.bounds.clone();
                    down[j] = (l, fl.min(u));
                    let mut up = node.bounds.clone();
                    up[j] = ((fl + 1.0).max(l), u);
                    if down[j].0 <= down[j].1 + 1e-12 {
                        heap.push(Node {
                            key: lp_obj,
                            id: next_id,
                            bounds: down,
                        });
                        next_id += 1;
                    }
                    if up[j].0 <= up[j].1 + 1e-12 {
                        heap.push(Node {
                            key: lp_obj,
                            id: next_id,
                            bounds: up,
                        });
                        next_id += 1;
                    }
                    break 'resolve;
                }
            }
        }
    }
}
