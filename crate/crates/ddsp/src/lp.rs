//! Dense linear-programming kernel.
//!
//! Two-phase tableau simplex with a Dantzig pivot rule that falls back to
//! Bland's rule after a configurable pivot count. Returns optimal primal and
//! dual solutions, a Farkas certificate (the phase-one dual) on infeasibility
//! and an improving ray on unboundedness.
//!
//! Dual sign convention, for a minimization problem: the multiplier of a
//! `<=` row is nonpositive, of a `>=` row nonnegative, of an `=` row free,
//! and the dual objective is `dual . rhs`. For a maximization problem the
//! signs flip.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Row { coeffs, relation, rhs }
    }
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    /// Per-variable `[lower, upper]`; infinities allowed.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// Minimization problem with all variables in `[0, +inf)`.
    pub fn min_nonneg(objective: Vec<f64>, rows: Vec<Row>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense: Sense::Min,
            objective,
            rows,
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// One multiplier per row. On infeasibility this is the phase-one dual,
    /// which doubles as a Farkas certificate.
    pub dual: Vec<f64>,
    pub objective: f64,
    /// Improving direction in the original variable space when unbounded.
    pub ray: Option<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed program: {0}")]
    MalformedProgram(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

#[derive(Debug, Clone, Copy)]
pub struct LpConfig {
    pub feas_tol: f64,
    pub pivot_tol: f64,
    pub duality_gap_tol: f64,
    /// Pivots executed under the Dantzig rule before switching to Bland.
    pub bland_after: usize,
    pub max_pivots: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            feas_tol: 1e-8,
            pivot_tol: 1e-9,
            duality_gap_tol: 1e-7,
            bland_after: 20_000,
            max_pivots: 400_000,
        }
    }
}

/// How an original variable maps into the canonical nonnegative space.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = lower + z[col]
    Shift { col: usize, lower: f64 },
    /// x = upper - z[col]
    Negate { col: usize, upper: f64 },
    /// x = z[pos] - z[neg]
    Split { pos: usize, neg: usize },
}

struct Canonical {
    /// Equality rows over nonnegative variables, rhs >= 0.
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    cost: Vec<f64>,
    ncols: usize,
    varmaps: Vec<VarMap>,
    /// +-1 per original row (negated to make rhs nonnegative).
    row_sign: Vec<f64>,
    n_orig_rows: usize,
    /// Per canonical row, a column holding e_i (a +1 slack), if any.
    unit_col: Vec<Option<usize>>,
}

fn canonicalize(lp: &LinearProgram) -> Result<Canonical, LpError> {
    let n = lp.num_vars();
    if lp.bounds.len() != n {
        return Err(LpError::MalformedProgram(format!(
            "bounds length {} != {} variables",
            lp.bounds.len(),
            n
        )));
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(LpError::MalformedProgram(format!(
                "row {} has {} coefficients, expected {}",
                i,
                row.coeffs.len(),
                n
            )));
        }
        if !row.rhs.is_finite() {
            return Err(LpError::MalformedProgram(format!("row {} rhs not finite", i)));
        }
    }

    let minimize = lp.sense == Sense::Min;
    let mut ncols = 0usize;
    let mut varmaps = Vec::with_capacity(n);
    // ub_rows: (canonical column, span) for finite double bounds.
    let mut ub_rows: Vec<(usize, f64)> = Vec::new();
    for (j, &(l, u)) in lp.bounds.iter().enumerate() {
        if l > u {
            return Err(LpError::MalformedProgram(format!(
                "variable {}: lower {} > upper {}",
                j, l, u
            )));
        }
        if l.is_finite() {
            let col = ncols;
            ncols += 1;
            varmaps.push(VarMap::Shift { col, lower: l });
            if u.is_finite() {
                ub_rows.push((col, u - l));
            }
        } else if u.is_finite() {
            let col = ncols;
            ncols += 1;
            varmaps.push(VarMap::Negate { col, upper: u });
        } else {
            let pos = ncols;
            let neg = ncols + 1;
            ncols += 2;
            varmaps.push(VarMap::Split { pos, neg });
        }
    }

    let n_orig_rows = lp.rows.len();
    let m = n_orig_rows + ub_rows.len();
    // Reserve one slack column per inequality row up front.
    let mut slack_of: Vec<Option<usize>> = vec![None; m];
    for (i, row) in lp.rows.iter().enumerate() {
        if row.relation != Relation::Eq {
            slack_of[i] = Some(ncols);
            ncols += 1;
        }
    }
    for k in 0..ub_rows.len() {
        slack_of[n_orig_rows + k] = Some(ncols);
        ncols += 1;
    }

    let mut cost = vec![0.0; ncols];
    for (j, vm) in varmaps.iter().enumerate() {
        let c = if minimize { lp.objective[j] } else { -lp.objective[j] };
        match *vm {
            VarMap::Shift { col, .. } => cost[col] += c,
            VarMap::Negate { col, .. } => cost[col] -= c,
            VarMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    let mut a = vec![vec![0.0; ncols]; m];
    let mut b = vec![0.0; m];
    let mut row_sign = vec![1.0; m];
    let mut unit_col = vec![None; m];

    for (i, row) in lp.rows.iter().enumerate() {
        let mut rhs = row.rhs;
        for (j, vm) in varmaps.iter().enumerate() {
            let c = row.coeffs[j];
            if c == 0.0 {
                continue;
            }
            match *vm {
                VarMap::Shift { col, lower } => {
                    a[i][col] += c;
                    rhs -= c * lower;
                }
                VarMap::Negate { col, upper } => {
                    a[i][col] -= c;
                    rhs -= c * upper;
                }
                VarMap::Split { pos, neg } => {
                    a[i][pos] += c;
                    a[i][neg] -= c;
                }
            }
        }
        if let Some(s) = slack_of[i] {
            a[i][s] = match row.relation {
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
                Relation::Eq => unreachable!(),
            };
        }
        b[i] = rhs;
        if b[i] < 0.0 {
            for v in a[i].iter_mut() {
                *v = -*v;
            }
            b[i] = -b[i];
            row_sign[i] = -1.0;
        }
        if let Some(s) = slack_of[i] {
            if a[i][s] > 0.0 {
                unit_col[i] = Some(s);
            }
        }
    }
    for (k, &(col, span)) in ub_rows.iter().enumerate() {
        let i = n_orig_rows + k;
        let s = slack_of[i].unwrap();
        a[i][col] = 1.0;
        a[i][s] = 1.0;
        b[i] = span;
        unit_col[i] = Some(s);
    }

    Ok(Canonical {
        a,
        b,
        cost,
        ncols,
        varmaps,
        row_sign,
        n_orig_rows,
        unit_col,
    })
}

/// Tableau state shared by both phases.
struct Tableau {
    /// m rows; each row has width ncols_total + 1 (rhs last).
    rows: Vec<Vec<f64>>,
    /// Reduced costs for the active phase, same width; last entry is -obj.
    zrow: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
    /// Columns >= art_start are artificials.
    art_start: usize,
    pivots: usize,
}

impl Tableau {
    fn width(&self) -> usize {
        self.ncols + 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let piv = self.rows[r][c];
        let inv = 1.0 / piv;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for j in 0..w {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        }
        let f = self.zrow[c];
        if f != 0.0 {
            for j in 0..w {
                self.zrow[j] -= f * prow[j];
            }
            self.zrow[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Recompute the reduced-cost row for the given column costs.
    fn set_costs(&mut self, cost: &[f64]) {
        let w = self.width();
        let mut z = vec![0.0; w];
        z[..cost.len()].copy_from_slice(cost);
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = if bv < cost.len() { cost[bv] } else { 0.0 };
            if cb != 0.0 {
                for j in 0..w {
                    z[j] -= cb * self.rows[i][j];
                }
            }
        }
        self.zrow = z;
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded { entering: usize },
}

/// Run the simplex on the current cost row. `allow_artificial` permits
/// artificial columns to enter (phase one only).
fn run_simplex(
    t: &mut Tableau,
    cfg: &LpConfig,
    allow_artificial: bool,
) -> Result<PhaseOutcome, LpError> {
    loop {
        if t.pivots > cfg.max_pivots {
            return Err(LpError::NumericalFailure(
                "pivot limit exhausted after anti-cycling fallback".into(),
            ));
        }
        let bland = t.pivots >= cfg.bland_after;
        let limit = if allow_artificial { t.ncols } else { t.art_start };
        let mut entering: Option<usize> = None;
        let mut best = -cfg.pivot_tol;
        for j in 0..limit {
            let z = t.zrow[j];
            if z < -cfg.pivot_tol {
                if bland {
                    entering = Some(j);
                    break;
                }
                if z < best {
                    best = z;
                    entering = Some(j);
                }
            }
        }
        let Some(c) = entering else {
            return Ok(PhaseOutcome::Optimal);
        };
        // Ratio test; ties by lowest basis variable index.
        let w = t.ncols;
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..t.rows.len() {
            let a = t.rows[i][c];
            if a > cfg.pivot_tol {
                let ratio = t.rows[i][w] / a;
                let better = match leave {
                    None => true,
                    Some(r) => {
                        ratio < best_ratio - 1e-12
                            || (ratio <= best_ratio + 1e-12 && t.basis[i] < t.basis[r])
                    }
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return Ok(PhaseOutcome::Unbounded { entering: c });
        };
        t.pivot(r, c);
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(lp, &LpConfig::default())
}

pub fn solve_lp_with(lp: &LinearProgram, cfg: &LpConfig) -> Result<LpSolution, LpError> {
    let canon = canonicalize(lp)?;
    let m = canon.a.len();
    let n_orig = canon.n_orig_rows;

    // Column layout: canonical columns, then one artificial per row lacking a
    // unit column.
    let art_start = canon.ncols;
    let mut art_of: Vec<Option<usize>> = vec![None; m];
    let mut ncols = canon.ncols;
    for i in 0..m {
        if canon.unit_col[i].is_none() {
            art_of[i] = Some(ncols);
            ncols += 1;
        }
    }

    let w = ncols + 1;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![0.0; w];
        row[..canon.ncols].copy_from_slice(&canon.a[i]);
        row[ncols] = canon.b[i];
        if let Some(aj) = art_of[i] {
            row[aj] = 1.0;
            basis.push(aj);
        } else {
            basis.push(canon.unit_col[i].unwrap());
        }
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        zrow: vec![0.0; w],
        basis,
        ncols,
        art_start,
        pivots: 0,
    };

    let has_artificials = art_of.iter().any(|a| a.is_some());
    if has_artificials {
        let mut phase1_cost = vec![0.0; ncols];
        for a in art_of.iter().flatten() {
            phase1_cost[*a] = 1.0;
        }
        t.set_costs(&phase1_cost);
        match run_simplex(&mut t, cfg, true)? {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded { .. } => {
                return Err(LpError::NumericalFailure(
                    "phase one reported unbounded".into(),
                ));
            }
        }
        let p1_obj = -t.zrow[ncols];
        if p1_obj > cfg.feas_tol * 10.0 {
            // Infeasible; phase-one duals are the Farkas certificate.
            let dual = extract_duals(&t, &phase1_cost, &canon, &art_of, n_orig, lp.sense, false);
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                primal: vec![],
                dual,
                objective: match lp.sense {
                    Sense::Min => f64::INFINITY,
                    Sense::Max => f64::NEG_INFINITY,
                },
                ray: None,
            });
        }
        // Drive remaining artificials out of the basis where possible.
        for i in 0..m {
            if t.basis[i] >= art_start {
                let col = (0..art_start).find(|&j| t.rows[i][j].abs() > cfg.pivot_tol);
                if let Some(c) = col {
                    t.pivot(i, c);
                }
                // Otherwise the row is redundant; the artificial stays basic
                // at value zero.
            }
        }
    }

    let mut phase2_cost = vec![0.0; ncols];
    phase2_cost[..canon.cost.len()].copy_from_slice(&canon.cost);
    t.set_costs(&phase2_cost);
    match run_simplex(&mut t, cfg, false)? {
        PhaseOutcome::Optimal => {}
        PhaseOutcome::Unbounded { entering } => {
            // Improving ray in the original variable space.
            let mut dz = vec![0.0; canon.ncols];
            if entering < canon.ncols {
                dz[entering] = 1.0;
            }
            for (i, &bv) in t.basis.iter().enumerate() {
                if bv < canon.ncols {
                    dz[bv] -= t.rows[i][entering];
                }
            }
            let ray = map_primal(&canon.varmaps, &dz, true);
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                primal: vec![],
                dual: vec![],
                objective: match lp.sense {
                    Sense::Min => f64::NEG_INFINITY,
                    Sense::Max => f64::INFINITY,
                },
                ray: Some(ray),
            });
        }
    }

    let mut z = vec![0.0; canon.ncols];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < canon.ncols {
            z[bv] = t.rows[i][ncols];
        }
    }
    let primal = map_primal(&canon.varmaps, &z, false);
    let objective: f64 = primal
        .iter()
        .zip(lp.objective.iter())
        .map(|(x, c)| x * c)
        .sum();
    let dual = extract_duals(&t, &phase2_cost, &canon, &art_of, n_orig, lp.sense, true);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal,
        dual,
        objective,
        ray: None,
    })
}

fn map_primal(varmaps: &[VarMap], z: &[f64], ray: bool) -> Vec<f64> {
    varmaps
        .iter()
        .map(|vm| match *vm {
            VarMap::Shift { col, lower } => {
                if ray {
                    z[col]
                } else {
                    lower + z[col]
                }
            }
            VarMap::Negate { col, upper } => {
                if ray {
                    -z[col]
                } else {
                    upper - z[col]
                }
            }
            VarMap::Split { pos, neg } => z[pos] - z[neg],
        })
        .collect()
}

/// Row duals from the final tableau: for row i, the column that started as
/// e_i (its artificial, else its +1 slack) carries B^-1 e_i, so
/// y_i = c_unit - zrow_unit.
fn extract_duals(
    t: &Tableau,
    cost: &[f64],
    canon: &Canonical,
    art_of: &[Option<usize>],
    n_orig: usize,
    sense: Sense,
    negate_for_max: bool,
) -> Vec<f64> {
    let mut dual = Vec::with_capacity(n_orig);
    for i in 0..n_orig {
        let unit = art_of[i].or(canon.unit_col[i]).unwrap();
        let y = cost[unit] - t.zrow[unit];
        let mut y = canon.row_sign[i] * y;
        if negate_for_max && sense == Sense::Max {
            y = -y;
        }
        dual.push(y);
    }
    dual
}

/// Phase-one feasibility measurement for the system `W y = rhs, y >= 0`:
/// minimizes the total artificial mass `1^T w+ + 1^T w-` over
/// `W y + w+ - w- = rhs`. The objective is zero exactly when the system is
/// feasible; the returned dual is bounded componentwise by one in absolute
/// value. Never infeasible or unbounded.
pub fn solve_phase_one(w: &[Vec<f64>], rhs: &[f64]) -> Result<LpSolution, LpError> {
    solve_phase_one_with(w, rhs, &LpConfig::default())
}

pub fn solve_phase_one_with(
    w: &[Vec<f64>],
    rhs: &[f64],
    cfg: &LpConfig,
) -> Result<LpSolution, LpError> {
    let m = w.len();
    if rhs.len() != m {
        return Err(LpError::MalformedProgram(format!(
            "rhs length {} != {} rows",
            rhs.len(),
            m
        )));
    }
    let n = w.first().map(|r| r.len()).unwrap_or(0);
    let total = n + 2 * m;
    let mut objective = vec![0.0; total];
    for i in 0..m {
        objective[n + i] = 1.0;
        objective[n + m + i] = 1.0;
    }
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        if w[i].len() != n {
            return Err(LpError::MalformedProgram(format!(
                "row {} has {} coefficients, expected {}",
                i,
                w[i].len(),
                n
            )));
        }
        let mut coeffs = vec![0.0; total];
        coeffs[..n].copy_from_slice(&w[i]);
        coeffs[n + i] = 1.0;
        coeffs[n + m + i] = -1.0;
        rows.push(Row::new(coeffs, Relation::Eq, rhs[i]));
    }
    let lp = LinearProgram::min_nonneg(objective, rows);
    let mut sol = solve_lp_with(&lp, cfg)?;
    if sol.status != LpStatus::Optimal {
        return Err(LpError::NumericalFailure(
            "phase-one problem did not solve to optimality".into(),
        ));
    }
    sol.primal.truncate(n);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{} vs {}", a, b);
    }

    #[test]
    fn dual_subproblem_closed_form() {
        // max (2+x) r1 + (xi-x) r2 s.t. r1+r2 <= 1, r2 <= 2, r >= 0 at
        // x = 0.5, xi = 4.
        let lp = LinearProgram {
            sense: Sense::Max,
            objective: vec![2.5, 3.5],
            rows: vec![
                Row::new(vec![1.0, 1.0], Relation::Le, 1.0),
                Row::new(vec![0.0, 1.0], Relation::Le, 2.0),
            ],
            bounds: vec![(0.0, f64::INFINITY); 2],
        };
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.primal[0], 0.0, 1e-9);
        assert_close(sol.primal[1], 1.0, 1e-9);
        assert_close(sol.objective, 3.5, 1e-9);
    }

    #[test]
    fn zero_objective_equality() {
        let lp = LinearProgram::min_nonneg(
            vec![0.0],
            vec![Row::new(vec![1.0], Relation::Eq, 1.0)],
        );
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.primal[0], 1.0, 1e-9);
        assert_close(sol.objective, 0.0, 1e-12);
    }

    #[test]
    fn infeasible_system_reports_farkas_dual() {
        // x = 1 and x = 2 simultaneously.
        let lp = LinearProgram::min_nonneg(
            vec![1.0],
            vec![
                Row::new(vec![1.0], Relation::Eq, 1.0),
                Row::new(vec![1.0], Relation::Eq, 2.0),
            ],
        );
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        // Farkas: y1 + 2 y2 > 0 while y1 + y2 <= 0 on the column.
        let y = &sol.dual;
        assert!(y[0] + 2.0 * y[1] > 1e-9);
        assert!(y[0] + y[1] <= 1e-9);
    }

    #[test]
    fn unbounded_reports_ray() {
        let lp = LinearProgram::min_nonneg(
            vec![-1.0, 0.0],
            vec![Row::new(vec![0.0, 1.0], Relation::Le, 1.0)],
        );
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
        let ray = sol.ray.unwrap();
        assert!(ray[0] > 1e-9);
    }

    #[test]
    fn general_bounds_and_free_variables() {
        // min x + y, x in [-3, 5], y free, x + y >= 2.
        let lp = LinearProgram {
            sense: Sense::Min,
            objective: vec![1.0, 1.0],
            rows: vec![Row::new(vec![1.0, 1.0], Relation::Ge, 2.0)],
            bounds: vec![(-3.0, 5.0), (f64::NEG_INFINITY, f64::INFINITY)],
        };
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.objective, 2.0, 1e-9);
        // Dual of the >= row in a min problem is nonnegative.
        assert!(sol.dual[0] >= -1e-9);
        assert_close(sol.dual[0], 1.0, 1e-9);
    }

    #[test]
    fn phase_one_forced_artificial() {
        // W = [1], rhs = -1: only w- = 1 works; objective 1, sigma = -1.
        let sol = solve_phase_one(&[vec![1.0]], &[-1.0]).unwrap();
        assert_close(sol.objective, 1.0, 1e-9);
        assert_close(sol.dual[0], -1.0, 1e-9);
    }

    #[test]
    fn phase_one_feasible_system() {
        // W = [[1,1],[1,0]], rhs = (2+x, xi-x) at x=1, xi=4: y = (3, 0).
        let w = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        let sol = solve_phase_one(&w, &[3.0, 3.0]).unwrap();
        assert_close(sol.objective, 0.0, 1e-9);
    }

    #[test]
    fn phase_one_dual_bounded_by_one() {
        let w = vec![vec![1.0, -2.0, 0.5], vec![0.0, 1.0, 1.0]];
        let sol = solve_phase_one(&w, &[-4.0, 7.0]).unwrap();
        for &s in &sol.dual {
            assert!(s.abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn determinism() {
        let lp = LinearProgram::min_nonneg(
            vec![1.0, 2.0, 0.0, 0.0],
            vec![
                Row::new(vec![1.0, 1.0, -1.0, 0.0], Relation::Eq, 2.5),
                Row::new(vec![1.0, 0.0, 0.0, -1.0], Relation::Eq, 3.5),
            ],
        );
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert_eq!(a.primal, b.primal);
        assert_eq!(a.dual, b.dual);
        assert_eq!(a.objective, b.objective);
        // This is the section-3.4 subproblem at x = 0.5, xi = 4; the unique
        // optimal dual is (0, 1).
        assert_close(a.dual[0], 0.0, 1e-9);
        assert_close(a.dual[1], 1.0, 1e-9);
    }
}
