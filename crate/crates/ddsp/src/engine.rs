//! The extended L-Shaped engine: relaxed master problem management,
//! subproblem evaluation, distribution-specific cut generation for continuous
//! and integer second stages, bound-constant computation, and the
//! distribution-independent valid inequalities.
//!
//! Master variable layout: `[x (n1) | mu | indicator variables]`.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::lp::{self, LinearProgram, LpStatus, Relation, Row, Sense};
use crate::milp::{self, MilpConfig, MilpStatus, MixedIntegerProgram, VarKind};
use crate::model::{
    build_indicator_encoding, IndicatorEncoding, ModelError, ScenarioData, SpInstance, Stage2Kind,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error(transparent)]
    Milp(#[from] milp::MilpError),
    #[error("unbounded bound constant: {0}")]
    UnboundedBound(String),
    #[error("generated cut not violated at its generating point: {0}")]
    NotViolated(String),
    #[error("integer cuts require an all-binary first stage")]
    NonBinaryX,
    #[error("bad bound constants: {0}")]
    BadBounds(String),
    #[error("second-stage upper-bound box (ybox) required but missing")]
    MissingY,
    #[error("distribution-independent cut requires the rhsOnlyUncertainty flag")]
    ConvexityFlagMissing,
    #[error("envelope cut requires declared monotone directions")]
    MonotonicityFlagMissing,
    #[error("master problem infeasible: first-stage region empty or fully cut")]
    InfeasibleMaster,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

// ---------------------------------------------------------------------------
// Configuration and reporting types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistIndFamily {
    None,
    McCormick,
    Jensen,
    Envelope,
}

impl DistIndFamily {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(DistIndFamily::None),
            "mccormick" => Some(DistIndFamily::McCormick),
            "jensen" => Some(DistIndFamily::Jensen),
            "envelope" => Some(DistIndFamily::Envelope),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub gap_tol: f64,
    pub time_limit: Duration,
    pub dist_ind: DistIndFamily,
    pub u_opt_override: Option<f64>,
    /// Global lower bound on the expected recourse, valid for every cell.
    pub l_override: Option<f64>,
    pub max_iterations: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gap_tol: 1e-4,
            time_limit: Duration::from_secs(1800),
            dist_ind: DistIndFamily::None,
            u_opt_override: None,
            l_override: None,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutKind {
    ContFeas,
    ContOpt,
    IntFeas,
    IntOpt,
    DistInd,
}

#[derive(Debug, Clone)]
pub struct CutProvenance {
    pub iteration: usize,
    pub x_v: Vec<f64>,
    pub scenario: Option<usize>,
    /// For optimality cuts: the recourse value the RHS equals at the
    /// generating point with activation 0 (the MILP value for integer cuts,
    /// the LP-relaxation value for duality-based cuts).
    pub tight_value: Option<f64>,
}

/// A master cut `x_coeffs . x + mu_coeff . mu + ind_coeffs . v {rel} rhs`.
#[derive(Debug, Clone)]
pub struct Cut {
    pub kind: CutKind,
    pub d: Option<usize>,
    pub x_coeffs: Vec<f64>,
    pub mu_coeff: f64,
    pub ind_coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub provenance: CutProvenance,
}

impl Cut {
    pub fn lhs(&self, x: &[f64], mu: f64, ind: &[f64]) -> f64 {
        let mut v = self.mu_coeff * mu;
        for (c, xv) in self.x_coeffs.iter().zip(x) {
            v += c * xv;
        }
        for &(i, c) in &self.ind_coeffs {
            v += c * ind[i];
        }
        v
    }

    /// Positive when (x, mu, ind) violates the cut.
    pub fn violation(&self, x: &[f64], mu: f64, ind: &[f64]) -> f64 {
        let lhs = self.lhs(x, mu, ind);
        match self.relation {
            Relation::Le => lhs - self.rhs,
            Relation::Ge => self.rhs - lhs,
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }

    /// Row over the master layout `[x | mu | ind]`.
    pub fn to_row(&self, n1: usize, num_ind: usize) -> Row {
        let mut coeffs = vec![0.0; n1 + 1 + num_ind];
        coeffs[..n1].copy_from_slice(&self.x_coeffs);
        coeffs[n1] = self.mu_coeff;
        for &(i, c) in &self.ind_coeffs {
            coeffs[n1 + 1 + i] += c;
        }
        Row::new(coeffs, self.relation, self.rhs)
    }

    /// The cut RHS seen by mu at a point with activation 0 (Ge cuts only):
    /// rhs - x_coeffs . x with indicator terms cancelled.
    pub fn mu_rhs_at(&self, x: &[f64], ind_for_act0: &[f64]) -> f64 {
        let mut v = self.rhs;
        for (c, xv) in self.x_coeffs.iter().zip(x) {
            v -= c * xv;
        }
        for &(i, c) in &self.ind_coeffs {
            v -= c * ind_for_act0[i];
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Computed,
    UserSupplied,
}

#[derive(Debug, Clone)]
pub struct BoundConstants {
    /// u_feas[d][s]: bound on |sigma . (h - T x)| over the box hull of X.
    pub u_feas: Vec<Vec<f64>>,
    pub u_opt: f64,
    pub u_opt_source: Provenance,
    /// Per-distribution lower bound on the expected recourse; None when the
    /// cell has no feasible recourse anywhere.
    pub l: Vec<Option<f64>>,
    pub l_source: Provenance,
    /// min over d of l[d]; lower bound for the master mu variable.
    pub mu_lower: Option<f64>,
    /// Box hull of the (relaxed) first-stage region, per variable.
    pub hull: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Feas,
    Opt,
    Done,
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phase: Phase,
    pub x: Vec<f64>,
    pub d: usize,
    pub mu: f64,
    pub recourse: Option<f64>,
    pub cuts_added: usize,
    pub lower: f64,
    pub upper: f64,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Optimal,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: RunStatus,
    pub x: Vec<f64>,
    pub mu: f64,
    pub d: usize,
    pub objective: f64,
    pub lower: f64,
    pub upper: f64,
    pub cuts: Vec<Cut>,
    pub iterations: Vec<IterationRecord>,
    pub bounds: BoundConstants,
    pub master_nodes: u64,
}

// ---------------------------------------------------------------------------
// Bound constants
// ---------------------------------------------------------------------------

/// Box hull of the LP relaxation of the first-stage region.
pub fn first_stage_hull(instance: &SpInstance) -> Result<Vec<(f64, f64)>, EngineError> {
    let n1 = instance.num_x();
    let mut hull = Vec::with_capacity(n1);
    for j in 0..n1 {
        let mut obj = vec![0.0; n1];
        obj[j] = 1.0;
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (sense, slot) in [(Sense::Min, &mut lo), (Sense::Max, &mut hi)] {
            let lp = LinearProgram {
                sense,
                objective: obj.clone(),
                rows: instance.first_stage.rows.clone(),
                bounds: instance.first_stage.bounds.clone(),
            };
            let sol = lp::solve_lp(&lp)?;
            match sol.status {
                LpStatus::Optimal => *slot = sol.objective,
                LpStatus::Unbounded => {}
                LpStatus::Infeasible => return Err(EngineError::InfeasibleMaster),
            }
        }
        hull.push((lo, hi));
    }
    Ok(hull)
}

fn interval_dot(coeffs: &[f64], hull: &[(f64, f64)]) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (&c, &(l, u)) in coeffs.iter().zip(hull) {
        if c >= 0.0 {
            lo += c * l;
            hi += c * u;
        } else {
            lo += c * u;
            hi += c * l;
        }
    }
    (lo, hi)
}

/// Joint (x, y) scenario LP over the relaxed first stage:
/// optimize q^T y subject to first-stage rows, W y + T x = h, y in [0, ybox].
fn joint_scenario_lp(
    instance: &SpInstance,
    sc: &ScenarioData,
    sense: Sense,
    use_ybox: bool,
) -> LinearProgram {
    let n1 = instance.num_x();
    let n2 = sc.q.len();
    let mut rows: Vec<Row> = instance
        .first_stage
        .rows
        .iter()
        .map(|r| {
            let mut coeffs = vec![0.0; n1 + n2];
            coeffs[..n1].copy_from_slice(&r.coeffs);
            Row::new(coeffs, r.relation, r.rhs)
        })
        .collect();
    for ((wrow, trow), &h) in sc.w.iter().zip(&sc.t).zip(&sc.h) {
        let mut coeffs = vec![0.0; n1 + n2];
        coeffs[..n1].copy_from_slice(trow);
        coeffs[n1..].copy_from_slice(wrow);
        rows.push(Row::new(coeffs, Relation::Eq, h));
    }
    let mut objective = vec![0.0; n1 + n2];
    objective[n1..].copy_from_slice(&sc.q);
    let mut bounds = instance.first_stage.bounds.clone();
    for i in 0..n2 {
        let ub = match (&instance.ybox, use_ybox) {
            (Some(yb), true) => yb[i],
            _ => f64::INFINITY,
        };
        bounds.push((0.0, ub));
    }
    LinearProgram {
        sense,
        objective,
        rows,
        bounds,
    }
}

pub fn compute_bounds(
    instance: &SpInstance,
    cfg: &RunConfig,
) -> Result<BoundConstants, EngineError> {
    let hull = first_stage_hull(instance)?;
    let nd = instance.num_distributions();

    let mut u_feas = Vec::with_capacity(nd);
    for scen in &instance.distributions {
        let mut per_s = Vec::with_capacity(scen.len());
        for sc in scen {
            // sum_i max |h_i - (Tx)_i| over the hull; valid because the
            // phase-one dual is within [-1, 1] componentwise.
            let mut total = 0.0;
            for (trow, &h) in sc.t.iter().zip(&sc.h) {
                let (lo, hi) = interval_dot(trow, &hull);
                total += (h - lo).abs().max((h - hi).abs());
            }
            per_s.push(total);
        }
        u_feas.push(per_s);
    }

    let mut l: Vec<Option<f64>> = Vec::with_capacity(nd);
    let mut u_prime: Vec<Option<f64>> = Vec::with_capacity(nd);
    for scen in &instance.distributions {
        let mut l_d = Some(0.0f64);
        let mut u_d = Some(0.0f64);
        for sc in scen {
            if l_d.is_none() {
                break;
            }
            let min_sol = lp::solve_lp(&joint_scenario_lp(instance, sc, Sense::Min, false))?;
            match min_sol.status {
                LpStatus::Optimal => {
                    l_d = l_d.map(|v| v + sc.probability * min_sol.objective);
                }
                LpStatus::Infeasible => {
                    // No x makes this scenario feasible: the cell can never
                    // hold an optimal solution with finite recourse.
                    l_d = None;
                    u_d = None;
                }
                LpStatus::Unbounded => {
                    if cfg.l_override.is_none() {
                        return Err(EngineError::UnboundedBound(
                            "scenario recourse unbounded below over relaxed X; supply an L \
                             override"
                                .into(),
                        ));
                    }
                    l_d = None;
                }
            }
            if u_d.is_some() {
                let max_sol =
                    lp::solve_lp(&joint_scenario_lp(instance, sc, Sense::Max, true))?;
                match max_sol.status {
                    LpStatus::Optimal => {
                        u_d = u_d.map(|v| v + sc.probability * max_sol.objective);
                    }
                    LpStatus::Infeasible => u_d = None,
                    LpStatus::Unbounded => {
                        if cfg.u_opt_override.is_none() {
                            return Err(EngineError::UnboundedBound(
                                "scenario recourse unbounded above over relaxed X; supply a U \
                                 override or a ybox"
                                    .into(),
                            ));
                        }
                        u_d = None;
                    }
                }
            }
        }
        l.push(l_d);
        u_prime.push(u_d);
    }

    let (l, l_source) = match cfg.l_override {
        Some(v) => (vec![Some(v); nd], Provenance::UserSupplied),
        None => (l, Provenance::Computed),
    };
    let mu_lower = l.iter().flatten().cloned().fold(None, |acc: Option<f64>, v| {
        Some(acc.map_or(v, |a| a.min(v)))
    });

    let (u_opt, u_opt_source) = match cfg.u_opt_override {
        Some(v) => (v, Provenance::UserSupplied),
        None => {
            let max_u = u_prime
                .iter()
                .flatten()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let min_l = mu_lower.ok_or_else(|| {
                EngineError::UnboundedBound("no cell admits a finite recourse bound".into())
            })?;
            if !max_u.is_finite() {
                return Err(EngineError::UnboundedBound(
                    "upper recourse bound not finite; supply a U override".into(),
                ));
            }
            ((max_u - min_l).max(0.0), Provenance::Computed)
        }
    };

    Ok(BoundConstants {
        u_feas,
        u_opt,
        u_opt_source,
        l,
        l_source,
        mu_lower,
        hull,
    })
}

// ---------------------------------------------------------------------------
// Recourse evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RecourseEval {
    pub feasible: bool,
    /// Expected recourse Q_d(x): the MILP value for integer second stages.
    pub value: f64,
    /// Expected LP-relaxation value (equals `value` for LP stages).
    pub lp_value: f64,
    /// Per-scenario LP-relaxation duals.
    pub duals: Vec<Vec<f64>>,
    /// First infeasible scenario with its phase-one dual sigma, and whether
    /// the infeasibility was already present in the LP relaxation.
    pub infeasible: Option<InfeasibleScenario>,
}

#[derive(Debug, Clone)]
pub struct InfeasibleScenario {
    pub scenario: usize,
    pub sigma: Vec<f64>,
    pub lp_infeasible: bool,
}

pub fn evaluate_recourse(
    instance: &SpInstance,
    x: &[f64],
    d: usize,
    milp_cfg: &MilpConfig,
) -> Result<RecourseEval, EngineError> {
    let mut value = 0.0;
    let mut lp_value = 0.0;
    let mut duals = Vec::new();
    for (s, sc) in instance.distributions[d].iter().enumerate() {
        let lp_prob = sc.recourse_lp(x);
        let sol = lp::solve_lp_with(&lp_prob, &milp_cfg.lp)?;
        match sol.status {
            LpStatus::Infeasible => {
                return Ok(RecourseEval {
                    feasible: false,
                    value: f64::INFINITY,
                    lp_value: f64::INFINITY,
                    duals,
                    infeasible: Some(InfeasibleScenario {
                        scenario: s,
                        sigma: sol.dual,
                        lp_infeasible: true,
                    }),
                });
            }
            LpStatus::Unbounded => {
                return Err(EngineError::Numerical(format!(
                    "scenario {} recourse unbounded below at x = {:?}",
                    s, x
                )));
            }
            LpStatus::Optimal => {}
        }
        lp_value += sc.probability * sol.objective;
        duals.push(sol.dual);
        match instance.stage2_kind {
            Stage2Kind::Lp => value += sc.probability * sol.objective,
            Stage2Kind::MixedInteger => {
                let mip = MixedIntegerProgram {
                    lp: lp_prob,
                    kinds: instance.second_stage_kinds.clone(),
                };
                let msol = milp::solve_milp_with(&mip, None, milp_cfg)?;
                match msol.status {
                    MilpStatus::Optimal => value += sc.probability * msol.objective,
                    MilpStatus::Infeasible => {
                        return Ok(RecourseEval {
                            feasible: false,
                            value: f64::INFINITY,
                            lp_value,
                            duals,
                            infeasible: Some(InfeasibleScenario {
                                scenario: s,
                                sigma: vec![],
                                lp_infeasible: false,
                            }),
                        });
                    }
                    other => {
                        return Err(EngineError::Numerical(format!(
                            "scenario {} integer recourse ended with {:?}",
                            s, other
                        )));
                    }
                }
            }
        }
    }
    Ok(RecourseEval {
        feasible: true,
        value,
        lp_value,
        duals,
        infeasible: None,
    })
}

// ---------------------------------------------------------------------------
// Distribution-specific cuts
// ---------------------------------------------------------------------------

fn activation_terms(enc: &IndicatorEncoding, d: usize, scale: f64) -> (f64, Vec<(usize, f64)>) {
    // scale * activation(d) = scale*const + sum scale*c_i v_i
    let act = &enc.activations[d];
    (
        scale * act.constant,
        act.coeffs.iter().map(|&(i, c)| (i, scale * c)).collect(),
    )
}

/// Continuous feasibility cut: sigma^T (h - T x) <= U_ds * activation(d).
pub fn gen_feas_cut_continuous(
    instance: &SpInstance,
    enc: &IndicatorEncoding,
    x_v: &[f64],
    d: usize,
    s: usize,
    sigma: &[f64],
    u_feas_ds: f64,
    iteration: usize,
) -> Result<Cut, EngineError> {
    if !u_feas_ds.is_finite() {
        return Err(EngineError::UnboundedBound(format!(
            "feasibility bound for distribution {} scenario {} is not finite",
            d, s
        )));
    }
    let sc = &instance.distributions[d][s];
    let psi = sigma
        .iter()
        .zip(sc.rhs(x_v))
        .map(|(sg, r)| sg * r)
        .sum::<f64>();
    if psi <= 1e-8 {
        return Err(EngineError::NotViolated(format!(
            "phase-one value {} at the generating point",
            psi
        )));
    }
    let n1 = instance.num_x();
    // sigma^T h - sigma^T T x - U * act(d) <= 0
    let mut x_coeffs = vec![0.0; n1];
    for (trow, sg) in sc.t.iter().zip(sigma) {
        for (c, t) in x_coeffs.iter_mut().zip(trow) {
            *c -= sg * t;
        }
    }
    let sigma_h: f64 = sigma.iter().zip(&sc.h).map(|(sg, h)| sg * h).sum();
    let (act_const, act_coeffs) = activation_terms(enc, d, -u_feas_ds);
    Ok(Cut {
        kind: CutKind::ContFeas,
        d: Some(d),
        x_coeffs,
        mu_coeff: 0.0,
        ind_coeffs: act_coeffs,
        relation: Relation::Le,
        rhs: -sigma_h - act_const,
        provenance: CutProvenance {
            iteration,
            x_v: x_v.to_vec(),
            scenario: Some(s),
            tight_value: None,
        },
    })
}

/// Continuous optimality cut:
/// mu >= sum_s pi_s rho_s^T (h_s - T_s x) - U * activation(d).
pub fn gen_opt_cut_continuous(
    instance: &SpInstance,
    enc: &IndicatorEncoding,
    x_v: &[f64],
    d: usize,
    duals: &[Vec<f64>],
    u_opt: f64,
    tight_value: f64,
    iteration: usize,
) -> Cut {
    let n1 = instance.num_x();
    let mut x_coeffs = vec![0.0; n1];
    let mut const_term = 0.0;
    for (sc, rho) in instance.distributions[d].iter().zip(duals) {
        for (trow, r) in sc.t.iter().zip(rho) {
            for (c, t) in x_coeffs.iter_mut().zip(trow) {
                // cut in Ge form: mu + sum pi rho^T T x >= sum pi rho^T h - U act
                *c += sc.probability * r * t;
            }
        }
        const_term += sc.probability * sc.h.iter().zip(rho).map(|(h, r)| h * r).sum::<f64>();
    }
    let (act_const, act_coeffs) = activation_terms(enc, d, u_opt);
    Cut {
        kind: CutKind::ContOpt,
        d: Some(d),
        x_coeffs,
        mu_coeff: 1.0,
        ind_coeffs: act_coeffs,
        relation: Relation::Ge,
        rhs: const_term - act_const,
        provenance: CutProvenance {
            iteration,
            x_v: x_v.to_vec(),
            scenario: None,
            tight_value: Some(tight_value),
        },
    }
}

fn binary_support(x_v: &[f64]) -> Result<Vec<bool>, EngineError> {
    let mut out = Vec::with_capacity(x_v.len());
    for &v in x_v {
        if (v - v.round()).abs() > 1e-6 || !(v.round() == 0.0 || v.round() == 1.0) {
            return Err(EngineError::NonBinaryX);
        }
        out.push(v.round() == 1.0);
    }
    Ok(out)
}

/// Integer feasibility cut (no-good):
/// sum_{i in I} x_i - sum_{i not in I} x_i <= |I| - 1.
pub fn gen_feas_cut_integer(x_v: &[f64], iteration: usize) -> Result<Cut, EngineError> {
    let support = binary_support(x_v)?;
    let card = support.iter().filter(|&&b| b).count();
    let x_coeffs = support
        .iter()
        .map(|&b| if b { 1.0 } else { -1.0 })
        .collect();
    Ok(Cut {
        kind: CutKind::IntFeas,
        d: None,
        x_coeffs,
        mu_coeff: 0.0,
        ind_coeffs: vec![],
        relation: Relation::Le,
        rhs: card as f64 - 1.0,
        provenance: CutProvenance {
            iteration,
            x_v: x_v.to_vec(),
            scenario: None,
            tight_value: None,
        },
    })
}

/// Integer optimality cut:
/// mu >= (Q - L_d)(sum_I x_i - sum_{not I} x_i) - (Q - L_d)(|I| - 1) + L_d
///       - U * activation(d).
pub fn gen_opt_cut_integer(
    enc: &IndicatorEncoding,
    x_v: &[f64],
    d: usize,
    q_value: f64,
    l_d: f64,
    u_opt: f64,
    iteration: usize,
) -> Result<Cut, EngineError> {
    let support = binary_support(x_v)?;
    if q_value < l_d - 1e-7 {
        return Err(EngineError::BadBounds(format!(
            "recourse value {} below its lower bound {}",
            q_value, l_d
        )));
    }
    let gap = q_value - l_d;
    let card = support.iter().filter(|&&b| b).count() as f64;
    // Ge form: mu - gap * (sum_I x - sum_{!I} x) + U act >= -gap(card-1) + L_d
    let x_coeffs = support
        .iter()
        .map(|&b| if b { -gap } else { gap })
        .collect();
    let (act_const, act_coeffs) = activation_terms(enc, d, u_opt);
    Ok(Cut {
        kind: CutKind::IntOpt,
        d: Some(d),
        x_coeffs,
        mu_coeff: 1.0,
        ind_coeffs: act_coeffs,
        relation: Relation::Ge,
        rhs: -gap * (card - 1.0) + l_d - act_const,
        provenance: CutProvenance {
            iteration,
            x_v: x_v.to_vec(),
            scenario: None,
            tight_value: Some(q_value),
        },
    })
}

// ---------------------------------------------------------------------------
// Distribution-independent cuts
// ---------------------------------------------------------------------------

/// Linear constraints `lo <= form . x <= hi` carving cell d out of X.
pub fn cell_constraints(instance: &SpInstance, d: usize) -> Vec<(Vec<f64>, f64, f64)> {
    use crate::model::Partition;
    match &instance.partition {
        Partition::ExplicitDelta { forms, cells } => forms
            .iter()
            .zip(&cells[d])
            .map(|(f, &(l, u))| (f.clone(), l, u))
            .collect(),
        Partition::BoxConditions { forms, intervals } => {
            let digits = instance.partition.digits(d);
            forms
                .iter()
                .zip(intervals)
                .zip(digits)
                .map(|((f, iv), j)| {
                    let (l, u) = iv[j];
                    (f.clone(), l, u)
                })
                .collect()
        }
        Partition::BinarySegments { segments } => {
            let n1 = instance.num_x();
            let digits = instance.partition.digits(d);
            segments
                .iter()
                .zip(digits)
                .map(|(seg, k)| {
                    let mut form = vec![0.0; n1];
                    for (&v, &w) in seg.vars.iter().zip(&seg.weights) {
                        form[v] += w;
                    }
                    let (l, u) = seg.conditions[k];
                    (form, l, u)
                })
                .collect()
        }
    }
}

/// McCormick lower-bound LP L^d for one (d, s) with x pinned to x_v.
/// Variables: [x | y | tau | delta]. The duals of the pinning rows are the
/// subgradient in x. Cell linking relaxes "delta = 1 iff x in X_d" to rows
/// that force delta = 0 outside the cell (a valid relaxation either way).
fn mccormick_lp(
    instance: &SpInstance,
    sc: &ScenarioData,
    d: usize,
    x_v: &[f64],
    hull: &[(f64, f64)],
) -> Result<LinearProgram, EngineError> {
    let ybox = instance.ybox.as_ref().ok_or(EngineError::MissingY)?;
    let n1 = instance.num_x();
    let n2 = sc.q.len();
    let xoff = 0;
    let yoff = n1;
    let toff = n1 + n2;
    let doff = n1 + 2 * n2;
    let width = doff + 1;
    let mut rows: Vec<Row> = Vec::new();
    // Pin x = x_v; duals of these rows are the subgradient.
    for j in 0..n1 {
        let mut c = vec![0.0; width];
        c[xoff + j] = 1.0;
        rows.push(Row::new(c, Relation::Eq, x_v[j]));
    }
    // W y + T x = h.
    for ((wrow, trow), &h) in sc.w.iter().zip(&sc.t).zip(&sc.h) {
        let mut c = vec![0.0; width];
        c[xoff..xoff + n1].copy_from_slice(trow);
        c[yoff..yoff + n2].copy_from_slice(wrow);
        rows.push(Row::new(c, Relation::Eq, h));
    }
    // McCormick rows for cost-bearing components.
    for i in 0..n2 {
        if sc.q[i] == 0.0 {
            continue;
        }
        let y_i = ybox[i];
        if !y_i.is_finite() {
            return Err(EngineError::MissingY);
        }
        let mut r1 = vec![0.0; width]; // tau - y <= 0
        r1[toff + i] = 1.0;
        r1[yoff + i] = -1.0;
        rows.push(Row::new(r1, Relation::Le, 0.0));
        let mut r2 = vec![0.0; width]; // tau - Y delta <= 0
        r2[toff + i] = 1.0;
        r2[doff] = -y_i;
        rows.push(Row::new(r2, Relation::Le, 0.0));
        let mut r3 = vec![0.0; width]; // tau - y - Y delta >= -Y
        r3[toff + i] = 1.0;
        r3[yoff + i] = -1.0;
        r3[doff] = -y_i;
        rows.push(Row::new(r3, Relation::Ge, -y_i));
    }
    // Cell linking: form . x within [lo, hi] when delta = 1, within the hull
    // range when delta = 0. Sides with infinite hull range are dropped.
    for (form, lo, hi) in cell_constraints(instance, d) {
        let (glo, ghi) = interval_dot(&form, hull);
        if lo.is_finite() && glo.is_finite() {
            // form.x >= lo*delta + glo*(1-delta)
            let mut c = vec![0.0; width];
            for j in 0..n1 {
                c[xoff + j] = -form[j];
            }
            c[doff] = lo - glo;
            rows.push(Row::new(c, Relation::Le, -glo));
        }
        if hi.is_finite() && ghi.is_finite() {
            // form.x <= hi*delta + ghi*(1-delta)
            let mut c = vec![0.0; width];
            c[xoff..xoff + n1].copy_from_slice(&form);
            c[doff] = ghi - hi;
            rows.push(Row::new(c, Relation::Le, ghi));
        }
    }
    let mut objective = vec![0.0; width];
    objective[toff..toff + n2].copy_from_slice(&sc.q);
    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); n1];
    bounds.extend(std::iter::repeat((0.0, f64::INFINITY)).take(n2));
    for i in 0..n2 {
        if sc.q[i] == 0.0 {
            bounds.push((0.0, 0.0));
        } else {
            bounds.push((0.0, f64::INFINITY));
        }
    }
    bounds.push((0.0, 1.0));
    Ok(LinearProgram {
        sense: Sense::Min,
        objective,
        rows,
        bounds,
    })
}

fn solve_mccormick_term(
    instance: &SpInstance,
    sc: &ScenarioData,
    d: usize,
    x_v: &[f64],
    hull: &[(f64, f64)],
) -> Result<(f64, Vec<f64>), EngineError> {
    let n1 = instance.num_x();
    let lp_prob = mccormick_lp(instance, sc, d, x_v, hull)?;
    let sol = lp::solve_lp(&lp_prob)?;
    match sol.status {
        LpStatus::Optimal => Ok((sol.objective, sol.dual[..n1].to_vec())),
        other => Err(EngineError::Numerical(format!(
            "McCormick subproblem for distribution {} ended with {:?}",
            d, other
        ))),
    }
}

/// One global cut mu >= sum_{d,s} pi_sd [ L^d(x_v) + grad^T (x - x_v) ].
pub fn gen_distind_mccormick_cut(
    instance: &SpInstance,
    x_v: &[f64],
    hull: &[(f64, f64)],
    iteration: usize,
) -> Result<Cut, EngineError> {
    let n1 = instance.num_x();
    let mut constant = 0.0;
    let mut grad = vec![0.0; n1];
    for (d, scen) in instance.distributions.iter().enumerate() {
        for sc in scen {
            let (val, g) = solve_mccormick_term(instance, sc, d, x_v, hull)?;
            let p = sc.probability;
            constant += p * (val - g.iter().zip(x_v).map(|(a, b)| a * b).sum::<f64>());
            for (acc, gj) in grad.iter_mut().zip(&g) {
                *acc += p * gj;
            }
        }
    }
    // mu - grad.x >= constant
    Ok(Cut {
        kind: CutKind::DistInd,
        d: None,
        x_coeffs: grad.iter().map(|g| -g).collect(),
        mu_coeff: 1.0,
        ind_coeffs: vec![],
        relation: Relation::Ge,
        rhs: constant,
        provenance: CutProvenance {
            iteration,
            x_v: x_v.to_vec(),
            scenario: None,
            tight_value: None,
        },
    })
}

fn mean_scenario(instance: &SpInstance, d: usize) -> ScenarioData {
    let scen = &instance.distributions[d];
    let base = &scen[0];
    let mut h = vec![0.0; base.h.len()];
    for sc in scen {
        for (acc, &v) in h.iter_mut().zip(&sc.h) {
            *acc += sc.probability * v;
        }
    }
    ScenarioData {
        probability: 1.0,
        q: base.q.clone(),
        w: base.w.clone(),
        t: base.t.clone(),
        h,
    }
}

/// Jensen variant of the McCormick cut: one subproblem per distribution at
/// the mean scenario. Requires rhs-only uncertainty (convexity of Q in xi).
pub fn gen_distind_jensen_cut(
    instance: &SpInstance,
    x_v: &[f64],
    hull: &[(f64, f64)],
    iteration: usize,
) -> Result<Cut, EngineError> {
    if !instance.meta.rhs_only_uncertainty {
        return Err(EngineError::ConvexityFlagMissing);
    }
    let n1 = instance.num_x();
    let mut constant = 0.0;
    let mut grad = vec![0.0; n1];
    for d in 0..instance.num_distributions() {
        let sc = mean_scenario(instance, d);
        let (val, g) = solve_mccormick_term(instance, &sc, d, x_v, hull)?;
        constant += val - g.iter().zip(x_v).map(|(a, b)| a * b).sum::<f64>();
        for (acc, gj) in grad.iter_mut().zip(&g) {
            *acc += gj;
        }
    }
    Ok(Cut {
        kind: CutKind::DistInd,
        d: None,
        x_coeffs: grad.iter().map(|g| -g).collect(),
        mu_coeff: 1.0,
        ind_coeffs: vec![],
        relation: Relation::Ge,
        rhs: constant,
        provenance: CutProvenance {
            iteration,
            x_v: x_v.to_vec(),
            scenario: None,
            tight_value: None,
        },
    })
}

/// Envelope scenario: componentwise extreme of the per-distribution mean h
/// following the declared monotone directions (+1 nondecreasing -> min).
pub fn envelope_scenario(instance: &SpInstance) -> Result<ScenarioData, EngineError> {
    if !instance.meta.rhs_only_uncertainty {
        return Err(EngineError::ConvexityFlagMissing);
    }
    let dirs = instance
        .meta
        .monotone_dirs
        .as_ref()
        .ok_or(EngineError::MonotonicityFlagMissing)?;
    let means: Vec<ScenarioData> = (0..instance.num_distributions())
        .map(|d| mean_scenario(instance, d))
        .collect();
    let mut h = means[0].h.clone();
    for m in &means[1..] {
        for ((acc, &v), &dir) in h.iter_mut().zip(&m.h).zip(dirs) {
            if dir >= 0 {
                *acc = acc.min(v);
            } else {
                *acc = acc.max(v);
            }
        }
    }
    let base = &means[0];
    Ok(ScenarioData {
        probability: 1.0,
        q: base.q.clone(),
        w: base.w.clone(),
        t: base.t.clone(),
        h,
    })
}

/// Envelope cut mu >= rho^T (h_hat - T_hat x) from the dual at x_v.
pub fn gen_distind_envelope_cut(
    instance: &SpInstance,
    x_v: &[f64],
    iteration: usize,
) -> Result<Cut, EngineError> {
    let sc = envelope_scenario(instance)?;
    let sol = lp::solve_lp(&sc.recourse_lp(x_v))?;
    if sol.status != LpStatus::Optimal {
        return Err(EngineError::Numerical(format!(
            "envelope subproblem at the generating point ended with {:?}",
            sol.status
        )));
    }
    let rho = &sol.dual;
    let n1 = instance.num_x();
    let mut x_coeffs = vec![0.0; n1];
    for (trow, r) in sc.t.iter().zip(rho) {
        for (c, t) in x_coeffs.iter_mut().zip(trow) {
            *c += r * t;
        }
    }
    let rho_h: f64 = rho.iter().zip(&sc.h).map(|(r, h)| r * h).sum();
    Ok(Cut {
        kind: CutKind::DistInd,
        d: None,
        x_coeffs,
        mu_coeff: 1.0,
        ind_coeffs: vec![],
        relation: Relation::Ge,
        rhs: rho_h,
        provenance: CutProvenance {
            iteration,
            x_v: x_v.to_vec(),
            scenario: None,
            tight_value: None,
        },
    })
}

pub fn gen_distind_cut(
    instance: &SpInstance,
    family: DistIndFamily,
    x_v: &[f64],
    hull: &[(f64, f64)],
    iteration: usize,
) -> Result<Option<Cut>, EngineError> {
    match family {
        DistIndFamily::None => Ok(None),
        DistIndFamily::McCormick => {
            gen_distind_mccormick_cut(instance, x_v, hull, iteration).map(Some)
        }
        DistIndFamily::Jensen => gen_distind_jensen_cut(instance, x_v, hull, iteration).map(Some),
        DistIndFamily::Envelope => gen_distind_envelope_cut(instance, x_v, iteration).map(Some),
    }
}

// ---------------------------------------------------------------------------
// Master problem
// ---------------------------------------------------------------------------

struct Master {
    n1: usize,
    enc: IndicatorEncoding,
    base: MixedIntegerProgram,
    mu_active: bool,
    mu_lower: Option<f64>,
}

impl Master {
    fn build(instance: &SpInstance, mu_lower: Option<f64>) -> Result<Self, EngineError> {
        let enc = build_indicator_encoding(instance)?;
        let n1 = instance.num_x();
        let nv = enc.num_vars;
        let width = n1 + 1 + nv;
        let mut objective = vec![0.0; width];
        objective[..n1].copy_from_slice(&instance.first_stage.costs);
        let mut rows: Vec<Row> = instance
            .first_stage
            .rows
            .iter()
            .map(|r| {
                let mut c = vec![0.0; width];
                c[..n1].copy_from_slice(&r.coeffs);
                Row::new(c, r.relation, r.rhs)
            })
            .collect();
        for r in &enc.rows {
            let mut c = vec![0.0; width];
            c[..n1].copy_from_slice(&r.coeffs[..n1]);
            c[n1 + 1..].copy_from_slice(&r.coeffs[n1..]);
            rows.push(Row::new(c, r.relation, r.rhs));
        }
        let mut bounds = instance.first_stage.bounds.clone();
        bounds.push((0.0, 0.0)); // mu, inactive until the first optimality cut
        bounds.extend(std::iter::repeat((0.0, 1.0)).take(nv));
        let mut kinds = instance.first_stage.kinds.clone();
        kinds.push(VarKind::Continuous);
        kinds.extend(std::iter::repeat(VarKind::Binary).take(nv));
        Ok(Master {
            n1,
            enc,
            base: MixedIntegerProgram {
                lp: LinearProgram {
                    sense: Sense::Min,
                    objective,
                    rows,
                    bounds,
                },
                kinds,
            },
            mu_active: false,
            mu_lower,
        })
    }

    fn activate_mu(&mut self) {
        if !self.mu_active {
            self.mu_active = true;
            self.base.lp.objective[self.n1] = 1.0;
            self.base.lp.bounds[self.n1] =
                (self.mu_lower.unwrap_or(f64::NEG_INFINITY), f64::INFINITY);
        }
    }

    fn with_cuts(&self, cuts: &[Cut]) -> MixedIntegerProgram {
        let mut mip = self.base.clone();
        for cut in cuts {
            mip.lp.rows.push(cut.to_row(self.n1, self.enc.num_vars));
        }
        mip
    }

    /// Cell whose activation is (near) zero at the given indicator values.
    fn active_cell(&self, ind: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (d, act) in self.enc.activations.iter().enumerate() {
            let v = act.eval(ind);
            if best.map_or(true, |(_, bv)| v < bv) {
                best = Some((d, v));
            }
        }
        best.filter(|&(_, v)| v < 0.5).map(|(d, _)| d)
    }
}

/// Coefficient-hash duplicate detection so numerical noise cannot regenerate
/// the same cut forever.
fn cut_signature(cut: &Cut, n1: usize, nv: usize) -> u64 {
    use std::hash::{Hash, Hasher};
    let row = cut.to_row(n1, nv);
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for c in row.coeffs.iter().chain(std::iter::once(&row.rhs)) {
        // Quantize to make the hash robust to sub-tolerance noise.
        ((c * 1e9).round() as i64).hash(&mut h);
    }
    (row.relation as u8).hash(&mut h);
    h.finish()
}

// ---------------------------------------------------------------------------
// Algorithm 1 (loop mode) and branch-and-cut (callback mode)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Loop,
    Callback,
}

pub fn run(
    instance: &SpInstance,
    cfg: &RunConfig,
    mode: SolveMode,
) -> Result<RunResult, EngineError> {
    match mode {
        SolveMode::Loop => run_loop(instance, cfg),
        SolveMode::Callback => run_callback(instance, cfg),
    }
}

struct CutEngine<'a> {
    instance: &'a SpInstance,
    bounds: BoundConstants,
    milp_cfg: MilpConfig,
    gap_tol: f64,
}

impl<'a> CutEngine<'a> {
    fn new(instance: &'a SpInstance, cfg: &RunConfig) -> Result<Self, EngineError> {
        let bounds = compute_bounds(instance, cfg)?;
        let all_binary_x = instance
            .first_stage
            .kinds
            .iter()
            .all(|&k| k == VarKind::Binary);
        if instance.stage2_kind == Stage2Kind::MixedInteger && !all_binary_x {
            return Err(EngineError::NonBinaryX);
        }
        Ok(CutEngine {
            instance,
            bounds,
            milp_cfg: MilpConfig::default(),
            gap_tol: cfg.gap_tol,
        })
    }

    /// Cuts for a candidate master point. Returns (cuts, recourse value if
    /// feasible). Empty cuts + Some(q) means the point passed the optimality
    /// test.
    fn react(
        &self,
        master: &Master,
        x: &[f64],
        mu: f64,
        d: usize,
        iteration: usize,
    ) -> Result<(Vec<Cut>, Option<f64>), EngineError> {
        let eval = evaluate_recourse(self.instance, x, d, &self.milp_cfg)?;
        if let Some(inf) = &eval.infeasible {
            let cut = if inf.lp_infeasible {
                gen_feas_cut_continuous(
                    self.instance,
                    &master.enc,
                    x,
                    d,
                    inf.scenario,
                    &inf.sigma,
                    self.bounds.u_feas[d][inf.scenario],
                    iteration,
                )?
            } else {
                // LP relaxation feasible but the integer stage is not: only
                // the no-good cut applies.
                gen_feas_cut_integer(x, iteration)?
            };
            return Ok((vec![cut], None));
        }
        let q = eval.value;
        let opt_tol = self.gap_tol * (1.0 + q.abs());
        if mu >= q - opt_tol {
            return Ok((vec![], Some(q)));
        }
        let mut cuts = Vec::new();
        match self.instance.stage2_kind {
            Stage2Kind::Lp => {
                cuts.push(gen_opt_cut_continuous(
                    self.instance,
                    &master.enc,
                    x,
                    d,
                    &eval.duals,
                    self.bounds.u_opt,
                    eval.lp_value,
                    iteration,
                ));
            }
            Stage2Kind::MixedInteger => {
                let l_d = self.bounds.l[d].ok_or_else(|| {
                    EngineError::BadBounds(format!("no lower bound for distribution {}", d))
                })?;
                cuts.push(gen_opt_cut_integer(
                    &master.enc,
                    x,
                    d,
                    q,
                    l_d,
                    self.bounds.u_opt,
                    iteration,
                )?);
                // Duality-based cut from the LP relaxation as well.
                if mu < eval.lp_value - self.gap_tol * (1.0 + eval.lp_value.abs()) {
                    cuts.push(gen_opt_cut_continuous(
                        self.instance,
                        &master.enc,
                        x,
                        d,
                        &eval.duals,
                        self.bounds.u_opt,
                        eval.lp_value,
                        iteration,
                    ));
                }
            }
        }
        Ok((cuts, Some(q)))
    }
}

fn run_loop(instance: &SpInstance, cfg: &RunConfig) -> Result<RunResult, EngineError> {
    let start = Instant::now();
    let eng = CutEngine::new(instance, cfg)?;
    let mut master = Master::build(instance, eng.bounds.mu_lower)?;
    if eng.bounds.mu_lower.is_some() {
        master.activate_mu();
    }
    let n1 = master.n1;
    let nv = master.enc.num_vars;
    let mut cuts: Vec<Cut> = Vec::new();
    let mut signatures = std::collections::HashSet::new();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut incumbent: Option<(Vec<f64>, f64, usize, f64)> = None; // x, mu, d, objective
    let mut dist_ind_added = false;
    let mut total_nodes = 0u64;

    for iteration in 1..=cfg.max_iterations {
        if start.elapsed() >= cfg.time_limit {
            return Ok(finish_run(
                RunStatus::TimeLimit,
                incumbent,
                lower,
                upper,
                cuts,
                records,
                eng.bounds,
                total_nodes,
            ));
        }
        let mip = master.with_cuts(&cuts);
        let msol = milp::solve_milp_with(&mip, None, &eng.milp_cfg)?;
        total_nodes += msol.node_count;
        match msol.status {
            MilpStatus::Optimal => {}
            MilpStatus::Infeasible => return Err(EngineError::InfeasibleMaster),
            other => {
                return Err(EngineError::Numerical(format!(
                    "master solve ended with {:?}",
                    other
                )));
            }
        }
        let x = msol.incumbent[..n1].to_vec();
        let mu = if master.mu_active {
            msol.incumbent[n1]
        } else {
            f64::NEG_INFINITY
        };
        let ind = msol.incumbent[n1 + 1..].to_vec();
        let d = master
            .active_cell(&ind)
            .ok_or_else(|| EngineError::Numerical("no active cell in master solution".into()))?;
        if master.mu_active {
            lower = lower.max(msol.objective);
        }

        if !dist_ind_added && cfg.dist_ind != DistIndFamily::None {
            // Added once, from the first master solution.
            dist_ind_added = true;
            if let Some(cut) = gen_distind_cut(instance, cfg.dist_ind, &x, &eng.bounds.hull, iteration)? {
                master.activate_mu();
                if signatures.insert(cut_signature(&cut, n1, nv)) {
                    cuts.push(cut);
                }
                continue;
            }
        }

        let (new_cuts, qval) = eng.react(&master, &x, mu, d, iteration)?;
        let phase = if new_cuts.iter().any(|c| c.mu_coeff == 0.0) {
            Phase::Feas
        } else if new_cuts.is_empty() {
            Phase::Done
        } else {
            Phase::Opt
        };
        if let Some(q) = qval {
            let obj = dot(&instance.first_stage.costs, &x) + q;
            if obj < upper {
                upper = obj;
                incumbent = Some((x.clone(), q, d, obj));
            }
        }
        let mut added = 0usize;
        for cut in new_cuts {
            if cut.mu_coeff != 0.0 {
                master.activate_mu();
            }
            if signatures.insert(cut_signature(&cut, n1, nv)) {
                cuts.push(cut);
                added += 1;
            }
        }
        records.push(IterationRecord {
            iteration,
            phase,
            x: x.clone(),
            d,
            mu,
            recourse: qval,
            cuts_added: added,
            lower,
            upper,
            wall_ms: start.elapsed().as_millis(),
        });
        if phase == Phase::Done {
            // The optimality test passed: mu matches the recourse at x.
            let q = qval.unwrap();
            let obj = dot(&instance.first_stage.costs, &x) + q;
            lower = lower.max(msol.objective);
            upper = upper.min(obj);
            return Ok(finish_run(
                RunStatus::Optimal,
                Some((x, q, d, obj)),
                lower,
                upper,
                cuts,
                records,
                eng.bounds,
                total_nodes,
            ));
        }
        if added == 0 {
            return Err(EngineError::NotViolated(
                "iteration produced only duplicate cuts; tolerances are inconsistent".into(),
            ));
        }
    }
    Err(EngineError::Numerical(format!(
        "no convergence within {} iterations",
        cfg.max_iterations
    )))
}

fn run_callback(instance: &SpInstance, cfg: &RunConfig) -> Result<RunResult, EngineError> {
    let start = Instant::now();
    let eng = CutEngine::new(instance, cfg)?;
    let mut master = Master::build(instance, eng.bounds.mu_lower)?;
    // A single tree needs mu in the objective from the start.
    master.activate_mu();
    if master.mu_lower.is_none() {
        return Err(EngineError::UnboundedBound(
            "callback mode needs a finite recourse lower bound; supply an L override".into(),
        ));
    }
    let n1 = master.n1;
    let nv = master.enc.num_vars;
    let mut cuts: Vec<Cut> = Vec::new();
    let mut signatures = std::collections::HashSet::new();
    let mut records: Vec<IterationRecord> = Vec::new();

    if cfg.dist_ind != DistIndFamily::None {
        // Root-node valid inequalities, generated at the LP relaxation
        // optimum of the bare master.
        let mut relax = master.base.lp.clone();
        let sol = lp::solve_lp(&relax)?;
        if sol.status == LpStatus::Optimal {
            let x0 = sol.primal[..n1].to_vec();
            if let Some(cut) = gen_distind_cut(instance, cfg.dist_ind, &x0, &eng.bounds.hull, 0)? {
                if signatures.insert(cut_signature(&cut, n1, nv)) {
                    cuts.push(cut);
                }
            }
        }
        relax.rows.clear();
    }

    let mip = master.with_cuts(&cuts);
    let mut upper = f64::INFINITY;
    let mut iteration = 0usize;
    let mut cb_error: Option<EngineError> = None;
    let mut cb_cuts: Vec<Cut> = Vec::new();
    let msol = {
        let mut callback = |point: &[f64]| -> Result<Vec<Row>, milp::MilpError> {
            iteration += 1;
            let x = point[..n1].to_vec();
            let mu = point[n1];
            let ind = point[n1 + 1..].to_vec();
            let d = match master.active_cell(&ind) {
                Some(d) => d,
                None => {
                    cb_error =
                        Some(EngineError::Numerical("no active cell at integer node".into()));
                    return Err(milp::MilpError::Callback("no active cell".into()));
                }
            };
            match eng.react(&master, &x, mu, d, iteration) {
                Ok((new_cuts, qval)) => {
                    let phase = if new_cuts.iter().any(|c| c.mu_coeff == 0.0) {
                        Phase::Feas
                    } else if new_cuts.is_empty() {
                        Phase::Done
                    } else {
                        Phase::Opt
                    };
                    if let Some(q) = qval {
                        let obj = dot(&instance.first_stage.costs, &x) + q;
                        upper = upper.min(obj);
                    }
                    let mut rows = Vec::new();
                    let mut added = 0usize;
                    for cut in new_cuts {
                        if signatures.insert(cut_signature(&cut, n1, nv)) {
                            rows.push(cut.to_row(n1, nv));
                            cb_cuts.push(cut);
                            added += 1;
                        }
                    }
                    records.push(IterationRecord {
                        iteration,
                        phase,
                        x,
                        d,
                        mu,
                        recourse: qval,
                        cuts_added: added,
                        lower: f64::NEG_INFINITY,
                        upper,
                        wall_ms: start.elapsed().as_millis(),
                    });
                    Ok(rows)
                }
                Err(e) => {
                    let msg = e.to_string();
                    cb_error = Some(e);
                    Err(milp::MilpError::Callback(msg))
                }
            }
        };
        let mut milp_cfg = eng.milp_cfg;
        milp_cfg.time_limit = Some(cfg.time_limit.saturating_sub(start.elapsed()));
        milp::solve_milp_with(&mip, Some(&mut callback), &milp_cfg)
    };
    let msol = match msol {
        Ok(s) => s,
        Err(e) => {
            return Err(cb_error.unwrap_or(EngineError::Milp(e)));
        }
    };
    cuts.extend(cb_cuts);
    let status = match msol.status {
        MilpStatus::Optimal => RunStatus::Optimal,
        MilpStatus::TimeLimit => RunStatus::TimeLimit,
        MilpStatus::Infeasible => return Err(EngineError::InfeasibleMaster),
        MilpStatus::Unbounded => {
            return Err(EngineError::UnboundedBound(
                "master relaxation unbounded; recourse lower bound too weak".into(),
            ));
        }
    };
    if msol.incumbent.is_empty() {
        return Err(EngineError::Numerical(
            "branch-and-cut terminated without an incumbent".into(),
        ));
    }
    let x = msol.incumbent[..n1].to_vec();
    let ind = msol.incumbent[n1 + 1..].to_vec();
    let d = master
        .active_cell(&ind)
        .ok_or_else(|| EngineError::Numerical("no active cell in final incumbent".into()))?;
    // Re-evaluate the incumbent so the reported objective uses the true
    // recourse value rather than mu.
    let eval = evaluate_recourse(instance, &x, d, &eng.milp_cfg)?;
    if !eval.feasible {
        return Err(EngineError::Numerical(
            "final incumbent has infeasible recourse".into(),
        ));
    }
    let obj = dot(&instance.first_stage.costs, &x) + eval.value;
    Ok(RunResult {
        status,
        x,
        mu: msol.incumbent[n1],
        d,
        objective: obj,
        lower: msol.bound,
        upper: obj.min(upper),
        cuts,
        iterations: records,
        bounds: eng.bounds,
        master_nodes: msol.node_count,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish_run(
    status: RunStatus,
    incumbent: Option<(Vec<f64>, f64, usize, f64)>,
    lower: f64,
    upper: f64,
    cuts: Vec<Cut>,
    records: Vec<IterationRecord>,
    bounds: BoundConstants,
    master_nodes: u64,
) -> RunResult {
    let (x, mu, d, objective) = incumbent.unwrap_or((vec![], f64::NAN, 0, f64::INFINITY));
    RunResult {
        status,
        x,
        mu,
        d,
        objective,
        lower,
        upper,
        cuts,
        iterations: records,
        bounds,
        master_nodes,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
