//! Data model for decision-dependent two-stage stochastic programs.
//!
//! An instance is a first stage, a partition of the first-stage feasible
//! region into cells (one per probability distribution), and a scenario set
//! per distribution. Scenario data is stored in the canonical recourse form
//! `min q^T y  s.t.  W y = h - T x,  y >= 0`: inequality rows must be
//! rewritten with explicit slack columns before loading, so that LP duals
//! live in `{rho : rho^T W <= q}` and cut coefficients transcribe directly.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, LinearProgram, LpStatus, Relation, Row, Sense};
use crate::milp::{self, MixedIntegerProgram, MilpStatus, VarKind};

pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),
    #[error("no partition cell contains x = {0:?}")]
    NoCell(Vec<f64>),
    #[error("unsupported partition: {0}")]
    UnsupportedPartition(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FirstStage {
    pub costs: Vec<f64>,
    pub rows: Vec<Row>,
    pub kinds: Vec<VarKind>,
    /// Per-variable `[lower, upper]`; `null` in JSON means unbounded.
    #[serde(
        serialize_with = "ser_bounds",
        deserialize_with = "de_bounds"
    )]
    pub bounds: Vec<(f64, f64)>,
}

impl FirstStage {
    pub fn num_vars(&self) -> usize {
        self.costs.len()
    }
}

/// One scenario realization: `probability` times the recourse problem
/// `min q^T y  s.t.  W y = h - T x,  y >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    pub probability: f64,
    pub q: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub t: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

impl ScenarioData {
    /// `h - T x` for a concrete first-stage point.
    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        self.h
            .iter()
            .zip(self.t.iter())
            .map(|(h, trow)| h - dot(trow, x))
            .collect()
    }

    /// The recourse LP at `x` (kinds ignored; callers add integrality).
    pub fn recourse_lp(&self, x: &[f64]) -> LinearProgram {
        let rhs = self.rhs(x);
        let rows = self
            .w
            .iter()
            .zip(rhs)
            .map(|(wrow, r)| Row::new(wrow.clone(), Relation::Eq, r))
            .collect();
        LinearProgram::min_nonneg(self.q.clone(), rows)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Distribution {
    pub scenarios: Vec<ScenarioFile>,
}

/// Second-stage variable domains and optional elementwise upper-bound box Y
/// (metadata for McCormick/extensive linearization; never imposed on the
/// recourse LPs).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SecondStage {
    pub kinds: Vec<VarKind>,
    #[serde(default)]
    pub ybox: Option<Vec<f64>>,
    /// Template fields shared by scenarios that do not override them.
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    #[serde(default)]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub t: Option<Vec<Vec<f64>>>,
}

/// On-disk scenario record; `q`/`w`/`t` fall back to the template.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioFile {
    pub probability: f64,
    pub h: Vec<f64>,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    #[serde(default)]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub t: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "variant")]
pub enum Partition {
    /// One cell per distribution, each an interval box on linear forms of x.
    ExplicitDelta {
        /// Linear forms a_i over x.
        forms: Vec<Vec<f64>>,
        /// cells[d][i] = closed interval for form i in cell d.
        cells: Vec<Vec<(f64, f64)>>,
    },
    /// m linear forms, J_i disjoint closed intervals per form; a cell is a
    /// choice of one interval per form, indexed in big-endian mixed radix.
    BoxConditions {
        forms: Vec<Vec<f64>>,
        /// intervals[i] = ordered interval list for form i.
        intervals: Vec<Vec<(f64, f64)>>,
    },
    /// Segments of (weighted) first-stage variables; a cell is a choice of
    /// one condition interval per segment, big-endian mixed radix.
    BinarySegments { segments: Vec<Segment> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Segment {
    pub vars: Vec<usize>,
    pub weights: Vec<f64>,
    /// Closed intervals on the weighted sum, one per condition.
    pub conditions: Vec<(f64, f64)>,
}

impl Partition {
    pub fn num_distributions(&self) -> usize {
        match self {
            Partition::ExplicitDelta { cells, .. } => cells.len(),
            Partition::BoxConditions { intervals, .. } => {
                intervals.iter().map(|iv| iv.len()).product()
            }
            Partition::BinarySegments { segments } => {
                segments.iter().map(|s| s.conditions.len()).product()
            }
        }
    }

    /// Mixed-radix digits of cell d (big-endian: first form/segment is the
    /// most significant digit). Identity mapping for ExplicitDelta.
    pub fn digits(&self, d: usize) -> Vec<usize> {
        let radices: Vec<usize> = match self {
            Partition::ExplicitDelta { cells, .. } => vec![cells.len()],
            Partition::BoxConditions { intervals, .. } => {
                intervals.iter().map(|iv| iv.len()).collect()
            }
            Partition::BinarySegments { segments } => {
                segments.iter().map(|s| s.conditions.len()).collect()
            }
        };
        let mut rem = d;
        let mut out = vec![0usize; radices.len()];
        for (slot, &r) in out.iter_mut().zip(radices.iter()).rev() {
            *slot = rem % r;
            rem /= r;
        }
        debug_assert_eq!(rem, 0);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Stage2Kind {
    Lp,
    MixedInteger,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceMeta {
    #[serde(default)]
    pub name: Option<String>,
    /// True when q, W, T are deterministic and only h varies by scenario
    /// (sufficient for convexity of Q in the random data).
    #[serde(default)]
    pub rhs_only_uncertainty: bool,
    /// Per h-component monotonicity of Q: +1 nondecreasing, -1 nonincreasing.
    #[serde(default)]
    pub monotone_dirs: Option<Vec<i8>>,
}

#[derive(Debug, Clone)]
pub struct SpInstance {
    pub first_stage: FirstStage,
    pub partition: Partition,
    /// distributions[d].scenarios, fully expanded (templates resolved).
    pub distributions: Vec<Vec<ScenarioData>>,
    pub stage2_kind: Stage2Kind,
    pub second_stage_kinds: Vec<VarKind>,
    pub ybox: Option<Vec<f64>>,
    /// The modeling sense the recourse data was derived from. Scenario data
    /// is always stored in min form; Max records that the original model
    /// maximized (objective values are reported as stored, i.e. negated).
    pub recourse_sense: Sense,
    pub meta: InstanceMeta,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SpInstance {
    pub fn num_distributions(&self) -> usize {
        self.distributions.len()
    }

    pub fn num_x(&self) -> usize {
        self.first_stage.num_vars()
    }

    /// Validate internal consistency; called by the loader and by builders.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n1 = self.num_x();
        if self.first_stage.kinds.len() != n1 || self.first_stage.bounds.len() != n1 {
            return Err(ModelError::InconsistentDimensions(format!(
                "first stage: {} costs, {} kinds, {} bounds",
                n1,
                self.first_stage.kinds.len(),
                self.first_stage.bounds.len()
            )));
        }
        for (i, r) in self.first_stage.rows.iter().enumerate() {
            if r.coeffs.len() != n1 {
                return Err(ModelError::InconsistentDimensions(format!(
                    "first-stage row {} has {} coefficients, expected {}",
                    i,
                    r.coeffs.len(),
                    n1
                )));
            }
        }
        if self.partition.num_distributions() != self.distributions.len() {
            return Err(ModelError::SchemaViolation(format!(
                "partition describes {} cells but {} distributions provided",
                self.partition.num_distributions(),
                self.distributions.len()
            )));
        }
        self.validate_partition_shape()?;
        let n2 = self.second_stage_kinds.len();
        if let Some(yb) = &self.ybox {
            if yb.len() != n2 {
                return Err(ModelError::InconsistentDimensions(format!(
                    "ybox has {} entries, expected {}",
                    yb.len(),
                    n2
                )));
            }
        }
        for (d, scen) in self.distributions.iter().enumerate() {
            if scen.is_empty() {
                return Err(ModelError::SchemaViolation(format!(
                    "distribution {} has no scenarios",
                    d
                )));
            }
            let mut total = 0.0;
            for (s, sc) in scen.iter().enumerate() {
                if !(sc.probability > 0.0 && sc.probability <= 1.0 + 1e-9) {
                    return Err(ModelError::SchemaViolation(format!(
                        "distribution {} scenario {}: probability {}",
                        d, s, sc.probability
                    )));
                }
                total += sc.probability;
                let m2 = sc.h.len();
                if sc.w.len() != m2 || sc.t.len() != m2 {
                    return Err(ModelError::InconsistentDimensions(format!(
                        "distribution {} scenario {}: {} h entries, {} W rows, {} T rows",
                        d,
                        s,
                        m2,
                        sc.w.len(),
                        sc.t.len()
                    )));
                }
                if sc.q.len() != n2 {
                    return Err(ModelError::InconsistentDimensions(format!(
                        "distribution {} scenario {}: {} q entries, expected {}",
                        d,
                        s,
                        sc.q.len(),
                        n2
                    )));
                }
                for wr in &sc.w {
                    if wr.len() != n2 {
                        return Err(ModelError::InconsistentDimensions(format!(
                            "distribution {} scenario {}: W row width {}",
                            d,
                            s,
                            wr.len()
                        )));
                    }
                }
                for tr in &sc.t {
                    if tr.len() != n1 {
                        return Err(ModelError::InconsistentDimensions(format!(
                            "distribution {} scenario {}: T row width {}",
                            d,
                            s,
                            tr.len()
                        )));
                    }
                }
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(ModelError::SchemaViolation(format!(
                    "distribution {}: probabilities sum to {}",
                    d, total
                )));
            }
        }
        if let Some(dirs) = &self.meta.monotone_dirs {
            let m2 = self.distributions[0][0].h.len();
            if dirs.len() != m2 {
                return Err(ModelError::InconsistentDimensions(format!(
                    "monotoneDirs has {} entries, expected {}",
                    dirs.len(),
                    m2
                )));
            }
        }
        Ok(())
    }

    fn validate_partition_shape(&self) -> Result<(), ModelError> {
        let n1 = self.num_x();
        match &self.partition {
            Partition::ExplicitDelta { forms, cells } => {
                for f in forms {
                    if f.len() != n1 {
                        return Err(ModelError::InconsistentDimensions(
                            "partition form width mismatch".into(),
                        ));
                    }
                }
                for (d, cell) in cells.iter().enumerate() {
                    if cell.len() != forms.len() {
                        return Err(ModelError::InconsistentDimensions(format!(
                            "cell {} has {} intervals, expected {}",
                            d,
                            cell.len(),
                            forms.len()
                        )));
                    }
                    for &(l, u) in cell {
                        if l > u {
                            return Err(ModelError::SchemaViolation(format!(
                                "cell {} interval [{}, {}] empty",
                                d, l, u
                            )));
                        }
                    }
                }
            }
            Partition::BoxConditions { forms, intervals } => {
                if forms.len() != intervals.len() {
                    return Err(ModelError::InconsistentDimensions(
                        "forms/intervals length mismatch".into(),
                    ));
                }
                for f in forms {
                    if f.len() != n1 {
                        return Err(ModelError::InconsistentDimensions(
                            "partition form width mismatch".into(),
                        ));
                    }
                }
                for iv in intervals {
                    check_disjoint(iv)?;
                }
            }
            Partition::BinarySegments { segments } => {
                for seg in segments {
                    if seg.vars.len() != seg.weights.len() {
                        return Err(ModelError::InconsistentDimensions(
                            "segment vars/weights length mismatch".into(),
                        ));
                    }
                    if seg.vars.iter().any(|&v| v >= n1) {
                        return Err(ModelError::SchemaViolation(
                            "segment references nonexistent variable".into(),
                        ));
                    }
                    check_disjoint(&seg.conditions)?;
                }
            }
        }
        Ok(())
    }

    /// One LP/MILP feasibility solve confirming X is nonempty.
    pub fn check_first_stage_nonempty(&self) -> Result<(), ModelError> {
        let lp = LinearProgram {
            sense: Sense::Min,
            objective: vec![0.0; self.num_x()],
            rows: self.first_stage.rows.clone(),
            bounds: self.first_stage.bounds.clone(),
        };
        let has_int = self
            .first_stage
            .kinds
            .iter()
            .any(|&k| k != VarKind::Continuous);
        let feasible = if has_int {
            let mip = MixedIntegerProgram {
                lp,
                kinds: self.first_stage.kinds.clone(),
            };
            matches!(
                milp::solve_milp(&mip, None)
                    .map_err(|e| ModelError::SchemaViolation(e.to_string()))?
                    .status,
                MilpStatus::Optimal
            )
        } else {
            matches!(
                lp::solve_lp(&lp)
                    .map_err(|e| ModelError::SchemaViolation(e.to_string()))?
                    .status,
                LpStatus::Optimal
            )
        };
        if feasible {
            Ok(())
        } else {
            Err(ModelError::SchemaViolation(
                "first-stage feasible region is empty".into(),
            ))
        }
    }
}

fn check_disjoint(intervals: &[(f64, f64)]) -> Result<(), ModelError> {
    for &(l, u) in intervals {
        if l > u {
            return Err(ModelError::SchemaViolation(format!(
                "interval [{}, {}] empty",
                l, u
            )));
        }
    }
    let mut sorted: Vec<(f64, f64)> = intervals.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in sorted.windows(2) {
        if pair[1].0 <= pair[0].1 + MEMBERSHIP_TOL {
            return Err(ModelError::UnsupportedPartition(format!(
                "intervals [{}, {}] and [{}, {}] overlap",
                pair[0].0, pair[0].1, pair[1].0, pair[1].1
            )));
        }
    }
    Ok(())
}

/// The unique cell containing x, evaluated with `MEMBERSHIP_TOL` slack on
/// interval endpoints.
pub fn identify_distribution(instance: &SpInstance, x: &[f64]) -> Result<usize, ModelError> {
    let tol = MEMBERSHIP_TOL;
    match &instance.partition {
        Partition::ExplicitDelta { forms, cells } => {
            for (d, cell) in cells.iter().enumerate() {
                let inside = forms.iter().zip(cell).all(|(f, &(l, u))| {
                    let v = dot(f, x);
                    v >= l - tol && v <= u + tol
                });
                if inside {
                    return Ok(d);
                }
            }
            Err(ModelError::NoCell(x.to_vec()))
        }
        Partition::BoxConditions { forms, intervals } => {
            let mut d = 0usize;
            for (f, iv) in forms.iter().zip(intervals) {
                let v = dot(f, x);
                let j = iv
                    .iter()
                    .position(|&(l, u)| v >= l - tol && v <= u + tol)
                    .ok_or_else(|| ModelError::NoCell(x.to_vec()))?;
                d = d * iv.len() + j;
            }
            Ok(d)
        }
        Partition::BinarySegments { segments } => {
            let mut d = 0usize;
            for seg in segments {
                let v: f64 = seg
                    .vars
                    .iter()
                    .zip(&seg.weights)
                    .map(|(&i, &w)| w * x[i])
                    .sum();
                let k = seg
                    .conditions
                    .iter()
                    .position(|&(l, u)| v >= l - tol && v <= u + tol)
                    .ok_or_else(|| ModelError::NoCell(x.to_vec()))?;
                d = d * seg.conditions.len() + k;
            }
            Ok(d)
        }
    }
}

/// A linear expression over the encoding's indicator variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinExpr {
    pub constant: f64,
    /// (indicator-variable index, coefficient) pairs.
    pub coeffs: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn zero() -> Self {
        LinExpr {
            constant: 0.0,
            coeffs: vec![],
        }
    }

    pub fn eval(&self, ind: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|&(i, c)| c * ind[i]).sum::<f64>()
    }
}

/// Compact master encoding of the partition: binary indicator variables,
/// rows over (x, indicators), and per-cell activation expressions that are 0
/// exactly when x lies in the cell (for integer-feasible indicator values).
#[derive(Debug, Clone)]
pub struct IndicatorEncoding {
    pub num_vars: usize,
    /// Rows over the concatenated (x, indicator) vector.
    pub rows: Vec<Row>,
    /// activations[d]: zero iff x in cell d, >= 1 otherwise.
    pub activations: Vec<LinExpr>,
}

pub fn build_indicator_encoding(instance: &SpInstance) -> Result<IndicatorEncoding, ModelError> {
    let n1 = instance.num_x();
    let nd = instance.num_distributions();
    if nd == 1 {
        return Ok(IndicatorEncoding {
            num_vars: 0,
            rows: vec![],
            activations: vec![LinExpr::zero()],
        });
    }
    let finite = |v: f64, what: &str| -> Result<f64, ModelError> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ModelError::UnsupportedPartition(format!(
                "{} endpoint must be finite for the compact encoding",
                what
            )))
        }
    };
    match &instance.partition {
        Partition::ExplicitDelta { forms, cells } => {
            // Binaries delta_d; rows: sum_d lo_{id} delta_d <= a_i x <=
            // sum_d hi_{id} delta_d for each form i, plus sum_d delta_d = 1.
            let nv = nd;
            let width = n1 + nv;
            let mut rows = Vec::new();
            for (i, f) in forms.iter().enumerate() {
                let mut lo_row = vec![0.0; width];
                let mut hi_row = vec![0.0; width];
                for j in 0..n1 {
                    lo_row[j] = -f[j];
                    hi_row[j] = f[j];
                }
                for (d, cell) in cells.iter().enumerate() {
                    let (l, u) = cell[i];
                    lo_row[n1 + d] = finite(l, "cell")?;
                    hi_row[n1 + d] = -finite(u, "cell")?;
                }
                // lo . delta - a x <= 0  and  a x - hi . delta <= 0
                rows.push(Row::new(lo_row, Relation::Le, 0.0));
                rows.push(Row::new(hi_row, Relation::Le, 0.0));
            }
            let mut sum_row = vec![0.0; width];
            for d in 0..nd {
                sum_row[n1 + d] = 1.0;
            }
            rows.push(Row::new(sum_row, Relation::Eq, 1.0));
            let activations = (0..nd)
                .map(|d| LinExpr {
                    constant: 1.0,
                    coeffs: vec![(d, -1.0)],
                })
                .collect();
            Ok(IndicatorEncoding {
                num_vars: nv,
                rows,
                activations,
            })
        }
        Partition::BoxConditions { forms, intervals } => {
            let nv: usize = intervals.iter().map(|iv| iv.len()).sum();
            let m = forms.len();
            let width = n1 + nv;
            let mut rows = Vec::new();
            // offsets[i] = first indicator index of form i.
            let mut offsets = Vec::with_capacity(m);
            let mut acc = 0usize;
            for iv in intervals {
                offsets.push(acc);
                acc += iv.len();
            }
            for (i, (f, iv)) in forms.iter().zip(intervals).enumerate() {
                let mut lo_row = vec![0.0; width];
                let mut hi_row = vec![0.0; width];
                let mut sum_row = vec![0.0; width];
                for j in 0..n1 {
                    lo_row[j] = -f[j];
                    hi_row[j] = f[j];
                }
                for (j, &(l, u)) in iv.iter().enumerate() {
                    let col = n1 + offsets[i] + j;
                    lo_row[col] = finite(l, "interval")?;
                    hi_row[col] = -finite(u, "interval")?;
                    sum_row[col] = 1.0;
                }
                rows.push(Row::new(lo_row, Relation::Le, 0.0));
                rows.push(Row::new(hi_row, Relation::Le, 0.0));
                rows.push(Row::new(sum_row, Relation::Eq, 1.0));
            }
            let activations = (0..nd)
                .map(|d| {
                    let digits = instance.partition.digits(d);
                    LinExpr {
                        constant: m as f64,
                        coeffs: digits
                            .iter()
                            .enumerate()
                            .map(|(i, &j)| (offsets[i] + j, -1.0))
                            .collect(),
                    }
                })
                .collect();
            Ok(IndicatorEncoding {
                num_vars: nv,
                rows,
                activations,
            })
        }
        Partition::BinarySegments { segments } => {
            let nv: usize = segments.iter().map(|s| s.conditions.len()).sum();
            let t = segments.len();
            let width = n1 + nv;
            let mut rows = Vec::new();
            let mut offsets = Vec::with_capacity(t);
            let mut acc = 0usize;
            for s in segments {
                offsets.push(acc);
                acc += s.conditions.len();
            }
            for (i, seg) in segments.iter().enumerate() {
                let mut lo_row = vec![0.0; width];
                let mut hi_row = vec![0.0; width];
                let mut sum_row = vec![0.0; width];
                for (&v, &wgt) in seg.vars.iter().zip(&seg.weights) {
                    lo_row[v] -= wgt;
                    hi_row[v] += wgt;
                }
                for (k, &(l, u)) in seg.conditions.iter().enumerate() {
                    let col = n1 + offsets[i] + k;
                    lo_row[col] = finite(l, "condition")?;
                    hi_row[col] = -finite(u, "condition")?;
                    sum_row[col] = 1.0;
                }
                rows.push(Row::new(lo_row, Relation::Le, 0.0));
                rows.push(Row::new(hi_row, Relation::Le, 0.0));
                rows.push(Row::new(sum_row, Relation::Eq, 1.0));
            }
            let activations = (0..nd)
                .map(|d| {
                    let digits = instance.partition.digits(d);
                    LinExpr {
                        constant: t as f64,
                        coeffs: digits
                            .iter()
                            .enumerate()
                            .map(|(i, &k)| (offsets[i] + k, -1.0))
                            .collect(),
                    }
                })
                .collect();
            Ok(IndicatorEncoding {
                num_vars: nv,
                rows,
                activations,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct InstanceFile {
    first_stage: FirstStage,
    partition: Partition,
    stage2_kind: Stage2Kind,
    recourse_sense: Sense,
    second_stage: SecondStage,
    distributions: Vec<Distribution>,
    #[serde(default)]
    meta: InstanceMeta,
}

fn ser_bounds<S: serde::Serializer>(
    bounds: &[(f64, f64)],
    s: S,
) -> Result<S::Ok, S::Error> {
    let opt: Vec<(Option<f64>, Option<f64>)> = bounds
        .iter()
        .map(|&(l, u)| {
            (
                if l.is_finite() { Some(l) } else { None },
                if u.is_finite() { Some(u) } else { None },
            )
        })
        .collect();
    opt.serialize(s)
}

fn de_bounds<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<(f64, f64)>, D::Error> {
    let opt: Vec<(Option<f64>, Option<f64>)> = Vec::deserialize(d)?;
    Ok(opt
        .into_iter()
        .map(|(l, u)| (l.unwrap_or(f64::NEG_INFINITY), u.unwrap_or(f64::INFINITY)))
        .collect())
}

impl SpInstance {
    fn from_file(file: InstanceFile) -> Result<Self, ModelError> {
        let tpl = &file.second_stage;
        let mut distributions = Vec::with_capacity(file.distributions.len());
        for (d, dist) in file.distributions.iter().enumerate() {
            let mut scen = Vec::with_capacity(dist.scenarios.len());
            for (s, sc) in dist.scenarios.iter().enumerate() {
                let need = |field: &Option<Vec<f64>>, tplf: &Option<Vec<f64>>, name: &str| {
                    field
                        .clone()
                        .or_else(|| tplf.clone())
                        .ok_or_else(|| {
                            ModelError::SchemaViolation(format!(
                                "distribution {} scenario {}: missing {} (no template)",
                                d, s, name
                            ))
                        })
                };
                let needm =
                    |field: &Option<Vec<Vec<f64>>>, tplf: &Option<Vec<Vec<f64>>>, name: &str| {
                        field
                            .clone()
                            .or_else(|| tplf.clone())
                            .ok_or_else(|| {
                                ModelError::SchemaViolation(format!(
                                    "distribution {} scenario {}: missing {} (no template)",
                                    d, s, name
                                ))
                            })
                    };
                scen.push(ScenarioData {
                    probability: sc.probability,
                    q: need(&sc.q, &tpl.q, "q")?,
                    w: needm(&sc.w, &tpl.w, "w")?,
                    t: needm(&sc.t, &tpl.t, "t")?,
                    h: sc.h.clone(),
                });
            }
            distributions.push(scen);
        }
        let inst = SpInstance {
            first_stage: file.first_stage,
            partition: file.partition,
            distributions,
            stage2_kind: file.stage2_kind,
            second_stage_kinds: file.second_stage.kinds,
            ybox: file.second_stage.ybox,
            recourse_sense: file.recourse_sense,
            meta: file.meta,
        };
        inst.validate()?;
        inst.check_first_stage_nonempty()?;
        Ok(inst)
    }

    fn to_file(&self) -> InstanceFile {
        // Factor q/w/t into the template when shared by every scenario.
        let all: Vec<&ScenarioData> = self.distributions.iter().flatten().collect();
        let first = all.first();
        let shared = |get_eq: &dyn Fn(&ScenarioData, &ScenarioData) -> bool| -> bool {
            match first {
                Some(f) => all.iter().all(|s| get_eq(f, s)),
                None => false,
            }
        };
        let q_shared = shared(&|a, b| a.q == b.q);
        let w_shared = shared(&|a, b| a.w == b.w);
        let t_shared = shared(&|a, b| a.t == b.t);
        let tpl = SecondStage {
            kinds: self.second_stage_kinds.clone(),
            ybox: self.ybox.clone(),
            q: if q_shared {
                first.map(|f| f.q.clone())
            } else {
                None
            },
            w: if w_shared {
                first.map(|f| f.w.clone())
            } else {
                None
            },
            t: if t_shared {
                first.map(|f| f.t.clone())
            } else {
                None
            },
        };
        let distributions = self
            .distributions
            .iter()
            .map(|scen| Distribution {
                scenarios: scen
                    .iter()
                    .map(|s| ScenarioFile {
                        probability: s.probability,
                        h: s.h.clone(),
                        q: if q_shared { None } else { Some(s.q.clone()) },
                        w: if w_shared { None } else { Some(s.w.clone()) },
                        t: if t_shared { None } else { Some(s.t.clone()) },
                    })
                    .collect(),
            })
            .collect();
        InstanceFile {
            first_stage: self.first_stage.clone(),
            partition: self.partition.clone(),
            stage2_kind: self.stage2_kind,
            recourse_sense: self.recourse_sense,
            second_stage: tpl,
            distributions,
            meta: self.meta.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| ModelError::ParseError(e.to_string()))?;
        SpInstance::from_file(file)
    }
}

pub fn load_instance(path: &Path) -> Result<SpInstance, ModelError> {
    let text = std::fs::read_to_string(path)?;
    SpInstance::from_json(&text)
}

pub fn save_instance(instance: &SpInstance, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, instance.to_json() + "\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Bundled interval example
// ---------------------------------------------------------------------------

/// Single-variable example with two interval cells:
/// X_1 = [0.5, 3] enforcing xi in {4 (p=.7), 12 (p=.3)},
/// X_2 = [3.5, 10] enforcing xi in {10 (p=.3), 18 (p=.7)};
/// recourse min y1 + 2 y2 s.t. y1 + y2 >= 2 + x, y1 >= xi - x, y >= 0
/// (slacks explicit). Closed form: Q(x, xi) = xi - x if x <= (xi-2)/2,
/// else x + 2.
pub fn toy_instance() -> SpInstance {
    let scenario = |p: f64, xi: f64| ScenarioData {
        probability: p,
        q: vec![1.0, 2.0, 0.0, 0.0],
        w: vec![vec![1.0, 1.0, -1.0, 0.0], vec![1.0, 0.0, 0.0, -1.0]],
        t: vec![vec![-1.0], vec![1.0]],
        h: vec![2.0, xi],
    };
    SpInstance {
        first_stage: FirstStage {
            costs: vec![1.0],
            rows: vec![],
            kinds: vec![VarKind::Continuous],
            bounds: vec![(0.5, 10.0)],
        },
        partition: Partition::ExplicitDelta {
            forms: vec![vec![1.0]],
            cells: vec![vec![(0.5, 3.0)], vec![(3.5, 10.0)]],
        },
        distributions: vec![
            vec![scenario(0.7, 4.0), scenario(0.3, 12.0)],
            vec![scenario(0.3, 10.0), scenario(0.7, 18.0)],
        ],
        stage2_kind: Stage2Kind::Lp,
        second_stage_kinds: vec![VarKind::Continuous; 4],
        ybox: Some(vec![30.0, 30.0, 30.0, 30.0]),
        recourse_sense: Sense::Min,
        meta: InstanceMeta {
            name: Some("interval-example".into()),
            rhs_only_uncertainty: true,
            monotone_dirs: Some(vec![1, 1]),
        },
    }
}

/// Closed-form recourse of the bundled example, for oracle checks.
pub fn toy_recourse(x: f64, xi: f64) -> f64 {
    if x <= (xi - 2.0) / 2.0 {
        xi - x
    } else {
        x + 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_identify_cells() {
        let inst = toy_instance();
        assert_eq!(identify_distribution(&inst, &[0.5]).unwrap(), 0);
        assert_eq!(identify_distribution(&inst, &[3.0]).unwrap(), 0);
        assert_eq!(identify_distribution(&inst, &[3.5]).unwrap(), 1);
        assert_eq!(identify_distribution(&inst, &[10.0]).unwrap(), 1);
        assert!(matches!(
            identify_distribution(&inst, &[3.25]),
            Err(ModelError::NoCell(_))
        ));
    }

    #[test]
    fn toy_recourse_matches_lp() {
        let inst = toy_instance();
        for &(d, x) in &[(0usize, 0.5), (0, 1.0), (0, 3.0), (1, 3.5), (1, 10.0)] {
            for sc in &inst.distributions[d] {
                let sol = lp::solve_lp(&sc.recourse_lp(&[x])).unwrap();
                assert_eq!(sol.status, LpStatus::Optimal);
                let xi = sc.h[1];
                assert!(
                    (sol.objective - toy_recourse(x, xi)).abs() <= 1e-9,
                    "x={} xi={}: {} vs {}",
                    x,
                    xi,
                    sol.objective,
                    toy_recourse(x, xi)
                );
            }
        }
    }

    #[test]
    fn toy_expected_recourse_values() {
        let inst = toy_instance();
        let expect = |d: usize, x: f64| -> f64 {
            inst.distributions[d]
                .iter()
                .map(|s| s.probability * toy_recourse(x, s.h[1]))
                .sum()
        };
        assert!((expect(0, 0.5) - 5.9).abs() <= 1e-12);
        assert!((expect(0, 1.0) - 5.4).abs() <= 1e-12);
        assert!((expect(0, 3.0) - 6.2).abs() <= 1e-12);
        assert!((expect(1, 3.5) - 12.1).abs() <= 1e-12);
    }

    #[test]
    fn toy_encoding_rows() {
        let inst = toy_instance();
        let enc = build_indicator_encoding(&inst).unwrap();
        assert_eq!(enc.num_vars, 2);
        // Rows: 0.5 d1 + 3.5 d2 <= x, x <= 3 d1 + 10 d2, d1 + d2 = 1.
        assert_eq!(enc.rows.len(), 3);
        let at = |row: &Row, x: f64, d1: f64, d2: f64| -> f64 {
            row.coeffs[0] * x + row.coeffs[1] * d1 + row.coeffs[2] * d2
        };
        for &(x, d1, d2, ok) in &[
            (1.0, 1.0, 0.0, true),
            (5.0, 0.0, 1.0, true),
            (5.0, 1.0, 0.0, false),
            (3.25, 1.0, 0.0, false),
        ] {
            let feasible = enc.rows.iter().all(|r| {
                let v = at(r, x, d1, d2);
                match r.relation {
                    Relation::Le => v <= r.rhs + 1e-9,
                    Relation::Ge => v >= r.rhs - 1e-9,
                    Relation::Eq => (v - r.rhs).abs() <= 1e-9,
                }
            });
            assert_eq!(feasible, ok, "x={} d=({},{})", x, d1, d2);
        }
        assert_eq!(enc.activations[0].eval(&[1.0, 0.0]), 0.0);
        assert_eq!(enc.activations[0].eval(&[0.0, 1.0]), 1.0);
    }

    #[test]
    fn single_distribution_trivial_encoding() {
        let mut inst = toy_instance();
        inst.partition = Partition::ExplicitDelta {
            forms: vec![vec![1.0]],
            cells: vec![vec![(0.5, 10.0)]],
        };
        inst.distributions.truncate(1);
        let enc = build_indicator_encoding(&inst).unwrap();
        assert_eq!(enc.num_vars, 0);
        assert!(enc.rows.is_empty());
        assert_eq!(enc.activations[0], LinExpr::zero());
    }

    #[test]
    fn mixed_radix_digits_big_endian() {
        let p = Partition::BinarySegments {
            segments: vec![
                Segment {
                    vars: vec![0],
                    weights: vec![1.0],
                    conditions: vec![(0.0, 0.0), (1.0, 2.0)],
                },
                Segment {
                    vars: vec![1],
                    weights: vec![1.0],
                    conditions: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)],
                },
            ],
        };
        assert_eq!(p.num_distributions(), 6);
        assert_eq!(p.digits(0), vec![0, 0]);
        assert_eq!(p.digits(2), vec![0, 2]);
        assert_eq!(p.digits(3), vec![1, 0]);
        assert_eq!(p.digits(5), vec![1, 2]);
    }

    #[test]
    fn segment_partition_on_binary_cube() {
        // Five binaries, three segments (vars 0-1, 2-3, 4), two conditions
        // each (sum = 0 vs sum >= 1): 6 indicator variables for 8 cells.
        let inst = binary_cube_instance();
        let enc = build_indicator_encoding(&inst).unwrap();
        assert_eq!(enc.num_vars, 6);
        // (0,0,0,0,0) lies in cell 0 alone.
        assert_eq!(identify_distribution(&inst, &[0.0; 5]).unwrap(), 0);
        // Exhaustive: each point of {0,1}^5 maps to exactly one cell, and
        // the natural indicator assignment zeroes exactly that activation.
        for mask in 0u32..32 {
            let x: Vec<f64> = (0..5).map(|j| ((mask >> j) & 1) as f64).collect();
            let d = identify_distribution(&inst, &x).unwrap();
            let ind = natural_indicators(&inst, &x);
            for (dd, act) in enc.activations.iter().enumerate() {
                let v = act.eval(&ind);
                if dd == d {
                    assert!(v.abs() <= 1e-12);
                } else {
                    assert!(v >= 1.0 - 1e-12);
                }
            }
        }
    }

    /// Indicator assignment implied by x: one condition selected per segment.
    fn natural_indicators(inst: &SpInstance, x: &[f64]) -> Vec<f64> {
        let Partition::BinarySegments { segments } = &inst.partition else {
            panic!("expected segments");
        };
        let mut ind = Vec::new();
        for seg in segments {
            let v: f64 = seg
                .vars
                .iter()
                .zip(&seg.weights)
                .map(|(&i, &w)| w * x[i])
                .sum();
            for &(l, u) in &seg.conditions {
                ind.push(if v >= l - 1e-9 && v <= u + 1e-9 { 1.0 } else { 0.0 });
            }
        }
        ind
    }

    fn binary_cube_instance() -> SpInstance {
        let seg = |vars: Vec<usize>| {
            let n = vars.len() as f64;
            Segment {
                weights: vec![1.0; vars.len()],
                vars,
                conditions: vec![(0.0, 0.0), (1.0, n)],
            }
        };
        let scenario = ScenarioData {
            probability: 1.0,
            q: vec![1.0],
            w: vec![vec![1.0]],
            t: vec![vec![0.0; 5]],
            h: vec![0.0],
        };
        SpInstance {
            first_stage: FirstStage {
                costs: vec![1.0; 5],
                rows: vec![],
                kinds: vec![VarKind::Binary; 5],
                bounds: vec![(0.0, 1.0); 5],
            },
            partition: Partition::BinarySegments {
                segments: vec![seg(vec![0, 1]), seg(vec![2, 3]), seg(vec![4])],
            },
            distributions: vec![vec![scenario]; 8],
            stage2_kind: Stage2Kind::Lp,
            second_stage_kinds: vec![VarKind::Continuous],
            ybox: None,
            recourse_sense: Sense::Min,
            meta: InstanceMeta::default(),
        }
    }

    #[test]
    fn json_round_trip() {
        let inst = toy_instance();
        let json = inst.to_json();
        let back = SpInstance::from_json(&json).unwrap();
        assert_eq!(back.first_stage.costs, inst.first_stage.costs);
        assert_eq!(back.first_stage.bounds, inst.first_stage.bounds);
        assert_eq!(back.distributions, inst.distributions);
        assert_eq!(back.second_stage_kinds, inst.second_stage_kinds);
        assert_eq!(back.ybox, inst.ybox);
        assert_eq!(back.meta.rhs_only_uncertainty, inst.meta.rhs_only_uncertainty);
        // And again: serialization is a fixed point.
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn bad_probability_sum_rejected() {
        let mut inst = toy_instance();
        inst.distributions[0][0].probability = 0.6;
        let json = inst.to_json();
        match SpInstance::from_json(&json) {
            Err(ModelError::SchemaViolation(msg)) => {
                assert!(msg.contains("probabilities sum"), "{}", msg);
            }
            other => panic!("expected SchemaViolation, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn overlapping_intervals_rejected() {
        let mut inst = toy_instance();
        inst.partition = Partition::BoxConditions {
            forms: vec![vec![1.0]],
            intervals: vec![vec![(0.0, 2.0), (1.5, 3.0)]],
        };
        inst.distributions = vec![inst.distributions[0].clone(); 2];
        assert!(matches!(
            inst.validate(),
            Err(ModelError::UnsupportedPartition(_))
        ));
    }
}
