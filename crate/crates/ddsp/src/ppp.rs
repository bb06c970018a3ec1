//! Production-planning benchmark suite: three problem variants built as
//! `SpInstance`s, a randomized instance generator, the extensive (deterministic
//! equivalent) linearized form, and an implicit-enumeration oracle.
//!
//! All variants maximize expected profit; instances are stored in the
//! engine's canonical min form with negated revenue coefficients, and
//! `recourse_sense = Max` records the original orientation.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{self, cell_constraints};
use crate::lp::{LinearProgram, Relation, Row, Sense};
use crate::milp::{self, MilpConfig, MilpStatus, MixedIntegerProgram, VarKind};
use crate::model::{
    build_indicator_encoding, FirstStage, InstanceMeta, ModelError, Partition, ScenarioData,
    Segment, SpInstance, Stage2Kind,
};

pub const DEFAULT_ORACLE_CAP: usize = 256;

#[derive(Debug, Error)]
pub enum PppError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("facility {0}: no batch size lies within any of its level intervals")]
    InfeasibleBatchLevels(usize),
    #[error("{0} distributions exceed the enumeration cap")]
    TooManyDistributions(usize),
    #[error("finite second-stage bound box required for linearization")]
    UnboundedLinearizationBound,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] crate::lp::LpError),
    #[error(transparent)]
    Milp(#[from] milp::MilpError),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    V1,
    V2,
    V3,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "1" | "v1" => Some(Variant::V1),
            "2" | "v2" => Some(Variant::V2),
            "3" | "v3" => Some(Variant::V3),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Variant::V1 => 1,
            Variant::V2 => 2,
            Variant::V3 => 3,
        }
    }
}

/// Instance-class descriptor: the counts that define a generated instance.
#[derive(Debug, Clone, Copy)]
pub struct ClassSpec {
    pub facilities: usize,
    pub levels: usize,
    pub scenarios: usize,
    /// Customer locations (variants 2-3; forced to 1 for variant 1).
    pub customers: usize,
    /// Batch count per facility (variant 3 only).
    pub batches: usize,
    pub seed: u64,
}

/// Concrete problem data for the production-planning variants.
#[derive(Debug, Clone)]
pub struct PppParams {
    pub name: String,
    /// Per-unit production cost C_f.
    pub costs: Vec<f64>,
    /// Sale price P.
    pub price: f64,
    /// Salvage value O < P.
    pub salvage: f64,
    /// levels[f][l] = [L_fl, U_fl], disjoint, one level with L = 0.
    pub levels: Vec<Vec<(f64, f64)>>,
    /// batch_sizes[f][b] (variant 3).
    pub batch_sizes: Vec<Vec<f64>>,
    /// Vehicle capacity K (variant 3).
    pub vehicle_capacity: f64,
    /// Per-unit transport cost H_fq (variant 2).
    pub transport_cost: Vec<Vec<f64>>,
    /// Per-vehicle cost G_fq (variant 3).
    pub vehicle_cost: Vec<Vec<f64>>,
    /// yields[f][l][s]: yield draw for facility f at level l in scenario s.
    pub yields: Vec<Vec<Vec<f64>>>,
    /// demand[q][s] (variant 1 uses a single aggregate location q = 0).
    pub demand: Vec<Vec<f64>>,
}

impl PppParams {
    pub fn num_facilities(&self) -> usize {
        self.costs.len()
    }

    pub fn num_levels(&self) -> usize {
        self.levels[0].len()
    }

    pub fn num_scenarios(&self) -> usize {
        self.yields[0][0].len()
    }

    pub fn num_customers(&self) -> usize {
        self.demand.len()
    }

    pub fn num_distributions(&self) -> usize {
        self.num_levels().pow(self.num_facilities() as u32)
    }

    fn max_capacity(&self, f: usize) -> f64 {
        self.levels[f]
            .iter()
            .map(|&(_, u)| u)
            .fold(0.0, f64::max)
    }

    fn max_demand(&self) -> f64 {
        self.demand
            .iter()
            .flatten()
            .cloned()
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<(), PppError> {
        let nf = self.num_facilities();
        if nf == 0 {
            return Err(PppError::BadParams("no facilities".into()));
        }
        if self.levels.len() != nf || self.yields.len() != nf {
            return Err(PppError::BadParams("per-facility data length mismatch".into()));
        }
        let nl = self.num_levels();
        if nl < 2 {
            return Err(PppError::BadParams("need at least two levels".into()));
        }
        for (f, lv) in self.levels.iter().enumerate() {
            if lv.len() != nl {
                return Err(PppError::BadParams(format!("facility {}: level count", f)));
            }
            if !lv.iter().any(|&(l, _)| l == 0.0) {
                return Err(PppError::BadParams(format!(
                    "facility {}: no level with L = 0",
                    f
                )));
            }
            let mut sorted = lv.clone();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            for pair in sorted.windows(2) {
                if pair[1].0 <= pair[0].1 {
                    return Err(PppError::BadParams(format!(
                        "facility {}: overlapping level intervals",
                        f
                    )));
                }
            }
        }
        if self.salvage >= self.price {
            return Err(PppError::BadParams("salvage must be below price".into()));
        }
        if self.demand.is_empty() || self.demand.iter().any(|d| d.len() != self.num_scenarios()) {
            return Err(PppError::BadParams("demand shape mismatch".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Randomized generator
// ---------------------------------------------------------------------------

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn truncated_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    loop {
        let v = mean + sd * std_normal(rng);
        if v >= lo && v <= hi {
            return v;
        }
    }
}

/// Sample concrete problem data for an instance class.
pub fn generate_params(variant: Variant, spec: &ClassSpec) -> Result<PppParams, PppError> {
    if spec.facilities == 0 || spec.levels < 2 || spec.scenarios == 0 {
        return Err(PppError::BadParams(format!(
            "class ({}, {}, {}) invalid",
            spec.facilities, spec.levels, spec.scenarios
        )));
    }
    let customers = match variant {
        Variant::V1 => 1,
        _ => spec.customers.max(1),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(variant.index() as u64);
    let nf = spec.facilities;
    let nl = spec.levels;
    let ns = spec.scenarios;

    let caps: Vec<f64> = (0..nf)
        .map(|_| rng.gen_range(80.0f64..120.0).round())
        .collect();
    let costs: Vec<f64> = (0..nf).map(|_| rng.gen_range(60.0..80.0)).collect();
    let price = rng.gen_range(125.0..185.0);
    let salvage = rng.gen_range(15.0..40.0);

    // Level 0 is the mandatory zero-production level; the remaining levels
    // are contiguous disjoint bands over [1, cap] with unit gaps.
    let levels: Vec<Vec<(f64, f64)>> = caps
        .iter()
        .map(|&cap| {
            let mut lv = vec![(0.0, 0.0)];
            let bands = nl - 1;
            let mut lo = 1.0;
            for j in 1..=bands {
                let hi = (cap * j as f64 / bands as f64).floor().max(lo);
                lv.push((lo, hi));
                lo = hi + 1.0;
            }
            lv
        })
        .collect();

    let batch_sizes: Vec<Vec<f64>> = match variant {
        Variant::V3 => caps
            .iter()
            .map(|&cap| {
                let nb = spec.batches.max(1);
                (1..=nb)
                    .map(|b| (cap * b as f64 / nb as f64).round().max(1.0))
                    .collect()
            })
            .collect(),
        _ => vec![vec![]; nf],
    };

    let mut transport_cost = vec![vec![0.0; customers]; nf];
    let mut vehicle_cost = vec![vec![0.0; customers]; nf];
    for f in 0..nf {
        for q in 0..customers {
            let miles = rng.gen_range(75.0..300.0);
            transport_cost[f][q] = 0.10 * miles;
            vehicle_cost[f][q] = 1.55 * miles;
        }
    }

    // Yield draws: truncated normal on [0.25, 1.0], mean 0.8, standard
    // deviation strictly decreasing in the level index.
    let mut yields = vec![vec![vec![0.0; ns]; nl]; nf];
    for (f, per_f) in yields.iter_mut().enumerate() {
        let _ = f;
        for (l, per_l) in per_f.iter_mut().enumerate() {
            let sd = 0.18 / (l + 1) as f64;
            for slot in per_l.iter_mut() {
                *slot = truncated_normal(&mut rng, 0.8, sd, 0.25, 1.0);
            }
        }
    }

    // Demand: normal truncated at 0, location means splitting a share of
    // the expected full-production supply.
    let total_mean = 0.55 * 0.8 * caps.iter().sum::<f64>();
    let shares: Vec<f64> = (0..customers).map(|_| rng.gen_range(0.5..1.5)).collect();
    let share_sum: f64 = shares.iter().sum();
    let mut demand = vec![vec![0.0; ns]; customers];
    for (q, per_q) in demand.iter_mut().enumerate() {
        let mean = total_mean * shares[q] / share_sum;
        let sd = 0.2 * mean;
        for slot in per_q.iter_mut() {
            *slot = truncated_normal(&mut rng, mean, sd, 0.0, f64::INFINITY).round();
        }
    }

    let max_demand = demand.iter().flatten().cloned().fold(0.0, f64::max);
    let vehicle_capacity = (1.25 * max_demand).ceil().max(1.0);

    Ok(PppParams {
        name: format!(
            "ppp-v{}-f{}-l{}-s{}-seed{}",
            variant.index(),
            nf,
            nl,
            ns,
            spec.seed
        ),
        costs,
        price,
        salvage,
        levels,
        batch_sizes,
        vehicle_capacity,
        transport_cost,
        vehicle_cost,
        yields,
        demand,
    })
}

pub fn generate_instance(variant: Variant, spec: &ClassSpec) -> Result<SpInstance, PppError> {
    let params = generate_params(variant, spec)?;
    build_variant(variant, &params)
}

pub fn build_variant(variant: Variant, params: &PppParams) -> Result<SpInstance, PppError> {
    match variant {
        Variant::V1 => build_variant1(params),
        Variant::V2 => build_variant2(params),
        Variant::V3 => build_variant3(params),
    }
}

// ---------------------------------------------------------------------------
// Shared builder pieces
// ---------------------------------------------------------------------------

/// Partition over the level-selection binaries: one segment per facility,
/// weights equal to the level index, one condition interval per level.
fn level_partition(params: &PppParams, y_offset: usize) -> Partition {
    let nl = params.num_levels();
    let segments = (0..params.num_facilities())
        .map(|f| Segment {
            vars: (0..nl).map(|l| y_offset + f * nl + l).collect(),
            weights: (0..nl).map(|l| l as f64).collect(),
            conditions: (0..nl)
                .map(|l| (l as f64 - 0.25, l as f64 + 0.25))
                .collect(),
        })
        .collect();
    Partition::BinarySegments { segments }
}

/// First-stage level-linking rows shared by the variants: sum_l y_fl = 1 and
/// sum_l L_fl y_fl <= prod_f <= sum_l U_fl y_fl, where prod_f is a linear
/// expression over the first-stage variables.
fn level_rows(
    params: &PppParams,
    n1: usize,
    y_offset: usize,
    prod_expr: &dyn Fn(usize) -> Vec<(usize, f64)>,
) -> Vec<Row> {
    let nl = params.num_levels();
    let mut rows = Vec::new();
    for f in 0..params.num_facilities() {
        let mut sum = vec![0.0; n1];
        let mut lo = vec![0.0; n1];
        let mut hi = vec![0.0; n1];
        for (l, &(lfl, ufl)) in params.levels[f].iter().enumerate() {
            let col = y_offset + f * nl + l;
            sum[col] = 1.0;
            lo[col] = lfl;
            hi[col] = -ufl;
        }
        for (col, c) in prod_expr(f) {
            lo[col] -= c;
            hi[col] += c;
        }
        rows.push(Row::new(sum, Relation::Eq, 1.0));
        // sum L y - prod <= 0  and  prod - sum U y <= 0
        rows.push(Row::new(lo, Relation::Le, 0.0));
        rows.push(Row::new(hi, Relation::Le, 0.0));
    }
    rows
}

fn uniform_prob(ns: usize) -> f64 {
    1.0 / ns as f64
}

// ---------------------------------------------------------------------------
// Variant 1: aggregate demand, per-unit sales
// ---------------------------------------------------------------------------

/// First stage: production quantities x_f and level binaries y_fl. Second
/// stage sells w at price P (capped by aggregate demand) and salvages o at O:
/// stored min form with q = (-P, -O, 0) over (w, o, demand slack).
pub fn build_variant1(params: &PppParams) -> Result<SpInstance, PppError> {
    params.validate()?;
    let nf = params.num_facilities();
    let nl = params.num_levels();
    let ns = params.num_scenarios();
    let n1 = nf + nf * nl;
    let y_offset = nf;

    let mut costs = vec![0.0; n1];
    costs[..nf].copy_from_slice(&params.costs);
    let rows = level_rows(params, n1, y_offset, &|f| vec![(f, 1.0)]);
    let mut bounds = Vec::with_capacity(n1);
    let mut kinds = Vec::with_capacity(n1);
    for f in 0..nf {
        bounds.push((0.0, params.max_capacity(f)));
        kinds.push(VarKind::Continuous);
    }
    for _ in 0..nf * nl {
        bounds.push((0.0, 1.0));
        kinds.push(VarKind::Binary);
    }

    let partition = level_partition(params, y_offset);
    let nd = partition.num_distributions();
    let prob = uniform_prob(ns);
    let max_prod: f64 = (0..nf).map(|f| params.max_capacity(f)).sum();
    let max_dem = params.max_demand();

    let mut distributions = Vec::with_capacity(nd);
    for d in 0..nd {
        let digits = partition.digits(d);
        let mut scen = Vec::with_capacity(ns);
        for s in 0..ns {
            // Row 0: w + o = sum_f Y_f x_f; row 1: w + slack = D_s.
            let mut t0 = vec![0.0; n1];
            for f in 0..nf {
                t0[f] = -params.yields[f][digits[f]][s];
            }
            scen.push(ScenarioData {
                probability: prob,
                q: vec![-params.price, -params.salvage, 0.0],
                w: vec![vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 1.0]],
                t: vec![t0, vec![0.0; n1]],
                h: vec![0.0, params.demand[0][s]],
            });
        }
        distributions.push(scen);
    }

    let inst = SpInstance {
        first_stage: FirstStage {
            costs,
            rows,
            kinds,
            bounds,
        },
        partition,
        distributions,
        stage2_kind: Stage2Kind::Lp,
        second_stage_kinds: vec![VarKind::Continuous; 3],
        ybox: Some(vec![max_dem, max_prod, max_dem]),
        recourse_sense: Sense::Max,
        meta: InstanceMeta {
            name: Some(params.name.clone()),
            rhs_only_uncertainty: false,
            monotone_dirs: None,
        },
    };
    inst.validate()?;
    Ok(inst)
}

// ---------------------------------------------------------------------------
// Variant 2: per-location demand, per-unit transport cost
// ---------------------------------------------------------------------------

/// Second-stage variables per scenario: w_fq (shipments), o_f (salvage),
/// s_q (unmet-demand slack); q = (-(P - H_fq), -O, 0).
pub fn build_variant2(params: &PppParams) -> Result<SpInstance, PppError> {
    params.validate()?;
    let nf = params.num_facilities();
    let nl = params.num_levels();
    let ns = params.num_scenarios();
    let nq = params.num_customers();
    let n1 = nf + nf * nl;
    let y_offset = nf;

    let mut costs = vec![0.0; n1];
    costs[..nf].copy_from_slice(&params.costs);
    let rows = level_rows(params, n1, y_offset, &|f| vec![(f, 1.0)]);
    let mut bounds = Vec::with_capacity(n1);
    let mut kinds = Vec::with_capacity(n1);
    for f in 0..nf {
        bounds.push((0.0, params.max_capacity(f)));
        kinds.push(VarKind::Continuous);
    }
    for _ in 0..nf * nl {
        bounds.push((0.0, 1.0));
        kinds.push(VarKind::Binary);
    }

    let n2 = nf * nq + nf + nq;
    let wv = |f: usize, q: usize| f * nq + q;
    let ov = |f: usize| nf * nq + f;
    let sv = |q: usize| nf * nq + nf + q;

    let mut qcost = vec![0.0; n2];
    for f in 0..nf {
        for q in 0..nq {
            qcost[wv(f, q)] = -(params.price - params.transport_cost[f][q]);
        }
        qcost[ov(f)] = -params.salvage;
    }

    let partition = level_partition(params, y_offset);
    let nd = partition.num_distributions();
    let prob = uniform_prob(ns);
    let max_dem = params.max_demand();

    let mut distributions = Vec::with_capacity(nd);
    for d in 0..nd {
        let digits = partition.digits(d);
        let mut scen = Vec::with_capacity(ns);
        for s in 0..ns {
            let mut w = Vec::with_capacity(nf + nq);
            let mut t = Vec::with_capacity(nf + nq);
            let mut h = Vec::with_capacity(nf + nq);
            // Per facility: sum_q w_fq + o_f = Y_f x_f.
            for f in 0..nf {
                let mut wr = vec![0.0; n2];
                for q in 0..nq {
                    wr[wv(f, q)] = 1.0;
                }
                wr[ov(f)] = 1.0;
                let mut tr = vec![0.0; n1];
                tr[f] = -params.yields[f][digits[f]][s];
                w.push(wr);
                t.push(tr);
                h.push(0.0);
            }
            // Per location: sum_f w_fq + s_q = D_qs.
            for q in 0..nq {
                let mut wr = vec![0.0; n2];
                for f in 0..nf {
                    wr[wv(f, q)] = 1.0;
                }
                wr[sv(q)] = 1.0;
                w.push(wr);
                t.push(vec![0.0; n1]);
                h.push(params.demand[q][s]);
            }
            scen.push(ScenarioData {
                probability: prob,
                q: qcost.clone(),
                w,
                t,
                h,
            });
        }
        distributions.push(scen);
    }

    let mut ybox = vec![0.0; n2];
    for f in 0..nf {
        for q in 0..nq {
            ybox[wv(f, q)] = max_dem;
        }
        ybox[ov(f)] = params.max_capacity(f);
    }
    for q in 0..nq {
        ybox[sv(q)] = max_dem;
    }

    let inst = SpInstance {
        first_stage: FirstStage {
            costs,
            rows,
            kinds,
            bounds,
        },
        partition,
        distributions,
        stage2_kind: Stage2Kind::Lp,
        second_stage_kinds: vec![VarKind::Continuous; n2],
        ybox: Some(ybox),
        recourse_sense: Sense::Max,
        meta: InstanceMeta {
            name: Some(params.name.clone()),
            rhs_only_uncertainty: false,
            monotone_dirs: None,
        },
    };
    inst.validate()?;
    Ok(inst)
}

// ---------------------------------------------------------------------------
// Variant 3: batch production, per-vehicle transport
// ---------------------------------------------------------------------------

/// First stage all-binary: batch selectors x_fb plus level binaries y_fl.
/// Second stage mixed-integer: shipments w_fq, vehicle counts v_fq (integer,
/// w_fq <= K v_fq), salvage o_f, slacks.
pub fn build_variant3(params: &PppParams) -> Result<SpInstance, PppError> {
    params.validate()?;
    let nf = params.num_facilities();
    let nl = params.num_levels();
    let ns = params.num_scenarios();
    let nq = params.num_customers();
    let nb = params
        .batch_sizes
        .first()
        .map(|b| b.len())
        .unwrap_or(0);
    if nb == 0 {
        return Err(PppError::BadParams("variant 3 needs batch sizes".into()));
    }
    // Reject facilities whose batches all miss every positive level band.
    for f in 0..nf {
        let usable = params.batch_sizes[f].iter().any(|&sz| {
            params.levels[f]
                .iter()
                .any(|&(l, u)| sz >= l && sz <= u && u > 0.0)
        });
        if !usable {
            return Err(PppError::InfeasibleBatchLevels(f));
        }
    }

    let n1 = nf * nb + nf * nl;
    let y_offset = nf * nb;
    let xv = |f: usize, b: usize| f * nb + b;

    let mut costs = vec![0.0; n1];
    for f in 0..nf {
        for b in 0..nb {
            costs[xv(f, b)] = params.costs[f] * params.batch_sizes[f][b];
        }
    }
    let mut rows = level_rows(params, n1, y_offset, &|f| {
        (0..nb).map(|b| (xv(f, b), params.batch_sizes[f][b])).collect()
    });
    // At most one batch per facility.
    for f in 0..nf {
        let mut r = vec![0.0; n1];
        for b in 0..nb {
            r[xv(f, b)] = 1.0;
        }
        rows.push(Row::new(r, Relation::Le, 1.0));
    }
    let bounds = vec![(0.0, 1.0); n1];
    let kinds = vec![VarKind::Binary; n1];

    let n2 = 3 * nf * nq + nf + nq;
    let wv = |f: usize, q: usize| f * nq + q;
    let vv = |f: usize, q: usize| nf * nq + f * nq + q;
    let ov = |f: usize| 2 * nf * nq + f;
    let sv = |q: usize| 2 * nf * nq + nf + q;
    let tv = |f: usize, q: usize| 2 * nf * nq + nf + nq + f * nq + q;

    let mut qcost = vec![0.0; n2];
    for f in 0..nf {
        for q in 0..nq {
            qcost[wv(f, q)] = -params.price;
            qcost[vv(f, q)] = params.vehicle_cost[f][q];
        }
        qcost[ov(f)] = -params.salvage;
    }
    let mut skinds = vec![VarKind::Continuous; n2];
    for f in 0..nf {
        for q in 0..nq {
            skinds[vv(f, q)] = VarKind::Integer;
        }
    }

    let partition = level_partition(params, y_offset);
    let nd = partition.num_distributions();
    let prob = uniform_prob(ns);
    let k = params.vehicle_capacity;
    let max_dem = params.max_demand();
    let vmax = (max_dem / k).ceil().max(1.0);

    let mut distributions = Vec::with_capacity(nd);
    for d in 0..nd {
        let digits = partition.digits(d);
        let mut scen = Vec::with_capacity(ns);
        for s in 0..ns {
            let mut w = Vec::new();
            let mut t = Vec::new();
            let mut h = Vec::new();
            // Per facility: sum_q w_fq + o_f = Y_f sum_b Q_bf x_fb.
            for f in 0..nf {
                let mut wr = vec![0.0; n2];
                for q in 0..nq {
                    wr[wv(f, q)] = 1.0;
                }
                wr[ov(f)] = 1.0;
                let mut tr = vec![0.0; n1];
                let y = params.yields[f][digits[f]][s];
                for b in 0..nb {
                    tr[xv(f, b)] = -y * params.batch_sizes[f][b];
                }
                w.push(wr);
                t.push(tr);
                h.push(0.0);
            }
            // Per location: sum_f w_fq + s_q = D_qs.
            for q in 0..nq {
                let mut wr = vec![0.0; n2];
                for f in 0..nf {
                    wr[wv(f, q)] = 1.0;
                }
                wr[sv(q)] = 1.0;
                w.push(wr);
                t.push(vec![0.0; n1]);
                h.push(params.demand[q][s]);
            }
            // Per (f, q): w_fq - K v_fq + t_fq = 0.
            for f in 0..nf {
                for q in 0..nq {
                    let mut wr = vec![0.0; n2];
                    wr[wv(f, q)] = 1.0;
                    wr[vv(f, q)] = -k;
                    wr[tv(f, q)] = 1.0;
                    w.push(wr);
                    t.push(vec![0.0; n1]);
                    h.push(0.0);
                }
            }
            scen.push(ScenarioData {
                probability: prob,
                q: qcost.clone(),
                w,
                t,
                h,
            });
        }
        distributions.push(scen);
    }

    let mut ybox = vec![0.0; n2];
    for f in 0..nf {
        for q in 0..nq {
            ybox[wv(f, q)] = max_dem;
            ybox[vv(f, q)] = vmax;
            ybox[tv(f, q)] = k * vmax;
        }
        ybox[ov(f)] = params.max_capacity(f);
    }
    for q in 0..nq {
        ybox[sv(q)] = max_dem;
    }

    let inst = SpInstance {
        first_stage: FirstStage {
            costs,
            rows,
            kinds,
            bounds,
        },
        partition,
        distributions,
        stage2_kind: Stage2Kind::MixedInteger,
        second_stage_kinds: skinds,
        ybox: Some(ybox),
        recourse_sense: Sense::Max,
        meta: InstanceMeta {
            name: Some(params.name.clone()),
            rhs_only_uncertainty: false,
            monotone_dirs: None,
        },
    };
    inst.validate()?;
    Ok(inst)
}

// ---------------------------------------------------------------------------
// Extensive (deterministic equivalent) form
// ---------------------------------------------------------------------------

/// Monolithic MILP layout: `[x | indicators | delta_d | per-(d,s): y, tau]`,
/// where tau columns exist only for cost-bearing second-stage components and
/// carry the McCormick linearization of delta_d * y.
pub struct ExtensiveForm {
    pub mip: MixedIntegerProgram,
    pub n1: usize,
    pub num_ind: usize,
    pub delta_offset: usize,
    pub num_delta: usize,
    /// Second-stage component indices that received a tau column.
    pub tau_comps: Vec<usize>,
    /// block_offsets[d][s]: first column (the y block) of scenario (d, s).
    pub block_offsets: Vec<Vec<usize>>,
}

pub fn build_extensive(instance: &SpInstance) -> Result<ExtensiveForm, PppError> {
    let enc = build_indicator_encoding(instance)?;
    let n1 = instance.num_x();
    let nv = enc.num_vars;
    let nd = instance.num_distributions();
    let n2 = instance.second_stage_kinds.len();

    let tau_comps: Vec<usize> = (0..n2)
        .filter(|&i| {
            instance
                .distributions
                .iter()
                .flatten()
                .any(|sc| sc.q[i] != 0.0)
        })
        .collect();
    let ybox = instance
        .ybox
        .as_ref()
        .ok_or(PppError::UnboundedLinearizationBound)?;
    for &i in &tau_comps {
        if !ybox[i].is_finite() {
            return Err(PppError::UnboundedLinearizationBound);
        }
    }
    let tq = tau_comps.len();
    let tau_pos: Vec<Option<usize>> = {
        let mut m = vec![None; n2];
        for (j, &i) in tau_comps.iter().enumerate() {
            m[i] = Some(j);
        }
        m
    };

    let delta_offset = n1 + nv;
    let block_width = n2 + tq;
    let mut block_offsets = Vec::with_capacity(nd);
    let mut acc = delta_offset + nd;
    for scen in &instance.distributions {
        let mut per_s = Vec::with_capacity(scen.len());
        for _ in scen {
            per_s.push(acc);
            acc += block_width;
        }
        block_offsets.push(per_s);
    }
    let width = acc;

    let mut objective = vec![0.0; width];
    objective[..n1].copy_from_slice(&instance.first_stage.costs);
    let mut rows: Vec<Row> = Vec::new();
    for r in &instance.first_stage.rows {
        let mut c = vec![0.0; width];
        c[..n1].copy_from_slice(&r.coeffs);
        rows.push(Row::new(c, r.relation, r.rhs));
    }
    for r in &enc.rows {
        let mut c = vec![0.0; width];
        c[..n1].copy_from_slice(&r.coeffs[..n1]);
        c[n1..n1 + nv].copy_from_slice(&r.coeffs[n1..]);
        rows.push(Row::new(c, r.relation, r.rhs));
    }
    // Exactly one active distribution, linked to the encoding activations:
    // activation(d) + A_d * delta_d <= A_d with A_d = activation's constant.
    let mut sum_row = vec![0.0; width];
    for d in 0..nd {
        sum_row[delta_offset + d] = 1.0;
    }
    rows.push(Row::new(sum_row, Relation::Eq, 1.0));
    for (d, act) in enc.activations.iter().enumerate() {
        if act.constant == 0.0 && act.coeffs.is_empty() {
            continue;
        }
        let mut c = vec![0.0; width];
        for &(i, coef) in &act.coeffs {
            c[n1 + i] += coef;
        }
        c[delta_offset + d] = act.constant;
        rows.push(Row::new(c, Relation::Le, 0.0));
    }

    // Big-M slack for deactivated blocks: |W y + T x - h| over the box hull
    // of the first stage and y in [0, ybox]. Infinite bounds fall back to the
    // hard equality (which then requires recourse feasibility in every cell).
    let hull = engine::first_stage_hull(instance).map_err(|e| PppError::Numerical(e.to_string()))?;
    let row_slack = |wrow: &[f64], trow: &[f64], h: f64| -> f64 {
        let mut lo = -h;
        let mut hi = -h;
        for (&t, &(l, u)) in trow.iter().zip(&hull) {
            if t >= 0.0 {
                lo += t * l;
                hi += t * u;
            } else {
                lo += t * u;
                hi += t * l;
            }
        }
        for (&w, &yb) in wrow.iter().zip(ybox) {
            if w >= 0.0 {
                hi += w * yb;
            } else {
                lo += w * yb;
            }
        }
        lo.abs().max(hi.abs())
    };
    for (d, scen) in instance.distributions.iter().enumerate() {
        for (s, sc) in scen.iter().enumerate() {
            let off = block_offsets[d][s];
            // W y + T x = h when delta_d = 1, relaxed by M(1 - delta_d)
            // otherwise so deactivated blocks admit y = 0.
            for ((wrow, trow), &h) in sc.w.iter().zip(&sc.t).zip(&sc.h) {
                let mut c = vec![0.0; width];
                c[..n1].copy_from_slice(trow);
                c[off..off + n2].copy_from_slice(wrow);
                let m = row_slack(wrow, trow, h);
                if m.is_finite() {
                    let mut up = c.clone(); // expr + M delta <= h + M
                    up[delta_offset + d] = m;
                    rows.push(Row::new(up, Relation::Le, h + m));
                    c[delta_offset + d] = -m; // expr - M delta >= h - M
                    rows.push(Row::new(c, Relation::Ge, h - m));
                } else {
                    rows.push(Row::new(c, Relation::Eq, h));
                }
            }
            // McCormick rows tau = delta_d * y for cost-bearing components.
            for &i in &tau_comps {
                let j = tau_pos[i].unwrap();
                let ycol = off + i;
                let tcol = off + n2 + j;
                let dcol = delta_offset + d;
                let cap = ybox[i];
                let mut r1 = vec![0.0; width]; // tau - y <= 0
                r1[tcol] = 1.0;
                r1[ycol] = -1.0;
                rows.push(Row::new(r1, Relation::Le, 0.0));
                let mut r2 = vec![0.0; width]; // tau - Y delta <= 0
                r2[tcol] = 1.0;
                r2[dcol] = -cap;
                rows.push(Row::new(r2, Relation::Le, 0.0));
                let mut r3 = vec![0.0; width]; // tau - y - Y delta >= -Y
                r3[tcol] = 1.0;
                r3[ycol] = -1.0;
                r3[dcol] = -cap;
                rows.push(Row::new(r3, Relation::Ge, -cap));
                objective[tcol] = sc.probability * sc.q[i];
            }
        }
    }

    let mut bounds = instance.first_stage.bounds.clone();
    let mut kinds = instance.first_stage.kinds.clone();
    bounds.extend(std::iter::repeat((0.0, 1.0)).take(nv));
    kinds.extend(std::iter::repeat(VarKind::Binary).take(nv));
    if nd == 1 {
        bounds.push((1.0, 1.0));
        kinds.push(VarKind::Continuous);
    } else {
        bounds.extend(std::iter::repeat((0.0, 1.0)).take(nd));
        kinds.extend(std::iter::repeat(VarKind::Binary).take(nd));
    }
    for scen in &instance.distributions {
        for _ in scen {
            for &k2 in &instance.second_stage_kinds {
                bounds.push((0.0, f64::INFINITY));
                kinds.push(k2);
            }
            for _ in 0..tq {
                bounds.push((0.0, f64::INFINITY));
                kinds.push(VarKind::Continuous);
            }
        }
    }

    Ok(ExtensiveForm {
        mip: MixedIntegerProgram {
            lp: LinearProgram {
                sense: Sense::Min,
                objective,
                rows,
                bounds,
            },
            kinds,
        },
        n1,
        num_ind: nv,
        delta_offset,
        num_delta: nd,
        tau_comps,
        block_offsets,
    })
}

#[derive(Debug, Clone)]
pub struct ExtensiveSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub d: usize,
    pub node_count: u64,
    /// Best dual bound; equals the objective on Optimal.
    pub bound: f64,
    pub hit_time_limit: bool,
}

pub fn solve_extensive(
    instance: &SpInstance,
    time_limit: Option<Duration>,
) -> Result<ExtensiveSolution, PppError> {
    let ef = build_extensive(instance)?;
    let cfg = MilpConfig {
        time_limit,
        // The leading first-stage and cell-selector binaries decide the
        // per-block variables; branching in variable order keeps the tree
        // small on this block structure.
        branch_rule: milp::BranchRule::FirstFractional,
        ..MilpConfig::default()
    };
    let sol = milp::solve_milp_with(&ef.mip, None, &cfg)?;
    let hit_time_limit = match sol.status {
        MilpStatus::Optimal => false,
        MilpStatus::TimeLimit if !sol.incumbent.is_empty() => true,
        other => {
            return Err(PppError::Numerical(format!(
                "extensive solve ended with {:?}",
                other
            )));
        }
    };
    let x = sol.incumbent[..ef.n1].to_vec();
    let d = (0..ef.num_delta)
        .max_by(|&a, &b| {
            sol.incumbent[ef.delta_offset + a].total_cmp(&sol.incumbent[ef.delta_offset + b])
        })
        .unwrap_or(0);
    Ok(ExtensiveSolution {
        objective: sol.objective,
        x,
        d,
        node_count: sol.node_count,
        bound: sol.bound,
        hit_time_limit,
    })
}

// ---------------------------------------------------------------------------
// Implicit-enumeration oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub objective: f64,
    pub x: Vec<f64>,
    pub d: usize,
}

/// Per-distribution standard stochastic program: min c'x + sum_s pi q'y_s
/// over x in X cap X_d, W y_s = h_s - T_s x. Exact by construction.
pub fn enumeration_oracle(
    instance: &SpInstance,
    cap: usize,
) -> Result<OracleResult, PppError> {
    let nd = instance.num_distributions();
    if nd > cap {
        return Err(PppError::TooManyDistributions(nd));
    }
    let n1 = instance.num_x();
    let n2 = instance.second_stage_kinds.len();
    let mut best: Option<OracleResult> = None;
    for d in 0..nd {
        let scen = &instance.distributions[d];
        let width = n1 + scen.len() * n2;
        let mut objective = vec![0.0; width];
        objective[..n1].copy_from_slice(&instance.first_stage.costs);
        let mut rows: Vec<Row> = Vec::new();
        for r in &instance.first_stage.rows {
            let mut c = vec![0.0; width];
            c[..n1].copy_from_slice(&r.coeffs);
            rows.push(Row::new(c, r.relation, r.rhs));
        }
        for (form, lo, hi) in cell_constraints(instance, d) {
            if lo.is_finite() {
                let mut c = vec![0.0; width];
                for j in 0..n1 {
                    c[j] = -form[j];
                }
                rows.push(Row::new(c, Relation::Le, -lo));
            }
            if hi.is_finite() {
                let mut c = vec![0.0; width];
                c[..n1].copy_from_slice(&form);
                rows.push(Row::new(c, Relation::Le, hi));
            }
        }
        for (s, sc) in scen.iter().enumerate() {
            let off = n1 + s * n2;
            for ((wrow, trow), &h) in sc.w.iter().zip(&sc.t).zip(&sc.h) {
                let mut c = vec![0.0; width];
                c[..n1].copy_from_slice(trow);
                c[off..off + n2].copy_from_slice(wrow);
                rows.push(Row::new(c, Relation::Eq, h));
            }
            for (i, &qi) in sc.q.iter().enumerate() {
                objective[off + i] = sc.probability * qi;
            }
        }
        let mut bounds = instance.first_stage.bounds.clone();
        let mut kinds = instance.first_stage.kinds.clone();
        for _ in 0..scen.len() {
            for &k2 in &instance.second_stage_kinds {
                bounds.push((0.0, f64::INFINITY));
                kinds.push(k2);
            }
        }
        let mip = MixedIntegerProgram {
            lp: LinearProgram {
                sense: Sense::Min,
                objective,
                rows,
                bounds,
            },
            kinds,
        };
        let cell_cfg = MilpConfig {
            branch_rule: milp::BranchRule::FirstFractional,
            ..MilpConfig::default()
        };
        let sol = milp::solve_milp_with(&mip, None, &cell_cfg)?;
        match sol.status {
            MilpStatus::Optimal => {
                if best
                    .as_ref()
                    .map_or(true, |b| sol.objective < b.objective)
                {
                    best = Some(OracleResult {
                        objective: sol.objective,
                        x: sol.incumbent[..n1].to_vec(),
                        d,
                    });
                }
            }
            MilpStatus::Infeasible => continue,
            other => {
                return Err(PppError::Numerical(format!(
                    "oracle subproblem for distribution {} ended with {:?}",
                    d, other
                )));
            }
        }
    }
    best.ok_or_else(|| PppError::Numerical("every distribution cell is infeasible".into()))
}
