//! Acceptance gate: one test per criterion, each ending in a single
//! `criterion N <slug>: PASS` line (a failure panics with the details).

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ddsp::cli::run_golden_example;
use ddsp::engine::{
    self, gen_distind_cut, Cut, CutKind, DistIndFamily, RunConfig, RunResult, SolveMode,
};
use ddsp::lp::{self, LinearProgram, LpStatus, Relation, Row, Sense};
use ddsp::milp::{self, MilpConfig, MilpStatus, MixedIntegerProgram, VarKind};
use ddsp::model::{
    build_indicator_encoding, identify_distribution, toy_instance, toy_recourse, FirstStage,
    IndicatorEncoding, InstanceMeta, Partition, ScenarioData, Segment, SpInstance, Stage2Kind,
};
use ddsp::ppp::{self, ClassSpec, Variant};

fn report(n: u32, slug: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("criterion {} {}: PASS", n, slug);
    } else {
        println!("criterion {} {}: FAIL", n, slug);
        panic!("criterion {} {}: {:?}", n, slug, failures);
    }
}

/// Integer indicator assignment putting x in cell d: ones exactly at the
/// positions the cell's activation expression references.
fn ind_assignment(enc: &IndicatorEncoding, d: usize) -> Vec<f64> {
    let mut ind = vec![0.0; enc.num_vars];
    for &(i, _) in &enc.activations[d].coeffs {
        ind[i] = 1.0;
    }
    ind
}

// ---------------------------------------------------------------------------
// Shared corpus (criteria 2-5)
// ---------------------------------------------------------------------------

fn corpus_specs() -> Vec<(Variant, ClassSpec)> {
    let mut specs = Vec::new();
    for (variant, base) in [
        (Variant::V1, 1000u64),
        (Variant::V2, 2000),
        (Variant::V3, 3000),
    ] {
        // The integer-stage variant gets the leanest second stage so the
        // extensive-form cross-check stays tractable.
        let (customers, batches) = if variant == Variant::V3 { (1, 2) } else { (2, 3) };
        for &facilities in &[2usize, 3] {
            for k in 0..10u64 {
                specs.push((
                    variant,
                    ClassSpec {
                        facilities,
                        levels: 2,
                        scenarios: 5,
                        customers,
                        batches,
                        seed: base + 100 * facilities as u64 + k,
                    },
                ));
            }
        }
    }
    specs
}

struct CorpusRun {
    instance: SpInstance,
    loop_run: RunResult,
    callback_obj: f64,
    oracle_obj: f64,
}

struct Corpus {
    runs: Vec<CorpusRun>,
    ls_and_oracle_secs: f64,
}

fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| {
        // Tighter than the CLI default so the 1e-4 cross-method comparison is
        // not eaten by termination slack on large objectives.
        let cfg = RunConfig {
            gap_tol: 1e-6,
            ..RunConfig::default()
        };
        let start = Instant::now();
        let runs = corpus_specs()
            .into_iter()
            .map(|(variant, spec)| {
                let instance = ppp::generate_instance(variant, &spec)
                    .unwrap_or_else(|e| panic!("generate {:?} {:?}: {}", variant, spec.seed, e));
                let loop_run = engine::run(&instance, &cfg, SolveMode::Loop)
                    .unwrap_or_else(|e| panic!("ls-loop seed {}: {}", spec.seed, e));
                let cb = engine::run(&instance, &cfg, SolveMode::Callback)
                    .unwrap_or_else(|e| panic!("ls-callback seed {}: {}", spec.seed, e));
                let oracle = ppp::enumeration_oracle(&instance, ppp::DEFAULT_ORACLE_CAP)
                    .unwrap_or_else(|e| panic!("oracle seed {}: {}", spec.seed, e));
                CorpusRun {
                    instance,
                    loop_run,
                    callback_obj: cb.objective,
                    oracle_obj: oracle.objective,
                }
            })
            .collect();
        Corpus {
            runs,
            ls_and_oracle_secs: start.elapsed().as_secs_f64(),
        }
    })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1.0f64.max(a.abs()).max(b.abs())
}

#[test]
fn criterion_1_golden_example() {
    let start = Instant::now();
    let check = run_golden_example().expect("golden run failed");
    let mut failures = check.failures;
    if start.elapsed() >= Duration::from_secs(1) {
        failures.push(format!("runtime {:?} >= 1s", start.elapsed()));
    }
    report(1, "golden-example", &failures);
}

#[test]
fn criterion_2_oracle_equivalence() {
    let c = corpus();
    let mut failures = Vec::new();
    for (i, run) in c.runs.iter().enumerate() {
        for (mode, obj) in [
            ("ls-loop", run.loop_run.objective),
            ("ls-callback", run.callback_obj),
        ] {
            if !rel_close(obj, run.oracle_obj, 1e-4) {
                failures.push(format!(
                    "instance {} {}: {} vs oracle {}",
                    i, mode, obj, run.oracle_obj
                ));
            }
        }
    }
    if c.ls_and_oracle_secs >= 600.0 {
        failures.push(format!("corpus runtime {:.1}s >= 600s", c.ls_and_oracle_secs));
    }
    report(2, "oracle-equivalence-60", &failures);
}

#[test]
fn criterion_3_extensive_equivalence() {
    let c = corpus();
    let mut failures = Vec::new();
    for (i, run) in c.runs.iter().enumerate() {
        match ppp::solve_extensive(&run.instance, Some(Duration::from_secs(600))) {
            Ok(sol) => {
                if sol.hit_time_limit {
                    failures.push(format!("instance {}: extensive hit time limit", i));
                } else if !rel_close(sol.objective, run.loop_run.objective, 1e-4) {
                    failures.push(format!(
                        "instance {}: extensive {} vs ls {}",
                        i, sol.objective, run.loop_run.objective
                    ));
                }
            }
            Err(e) => failures.push(format!("instance {}: extensive failed: {}", i, e)),
        }
    }
    report(3, "extensive-equivalence-60", &failures);
}

/// Deterministic feasible first-stage samples: random-objective MILP vertices
/// of the first-stage region joined with the compact indicator encoding.
fn sample_feasible_points(
    instance: &SpInstance,
    enc: &IndicatorEncoding,
    hull: &[(f64, f64)],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let n1 = instance.num_x();
    let width = n1 + enc.num_vars;
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
    rows.extend(enc.rows.iter().cloned());
    // Clamp only continuous variables to the hull; integer bounds are
    // already finite and LP-computed hulls carry 1e-16 noise.
    let mut bounds: Vec<(f64, f64)> = instance
        .first_stage
        .bounds
        .iter()
        .zip(hull)
        .zip(&instance.first_stage.kinds)
        .map(|((&(l, u), &(hl, hu)), &k)| {
            if k == VarKind::Continuous {
                (l.max(hl), u.min(hu))
            } else {
                (l, u)
            }
        })
        .collect();
    bounds.extend(std::iter::repeat((0.0, 1.0)).take(enc.num_vars));
    let mut kinds = instance.first_stage.kinds.clone();
    kinds.extend(std::iter::repeat(VarKind::Binary).take(enc.num_vars));
    let cfg = MilpConfig::default();
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let objective: Vec<f64> = (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mip = MixedIntegerProgram {
            lp: LinearProgram {
                sense: Sense::Min,
                objective,
                rows: rows.clone(),
                bounds: bounds.clone(),
            },
            kinds: kinds.clone(),
        };
        let sol = milp::solve_milp_with(&mip, None, &cfg).expect("sampler milp");
        assert_eq!(sol.status, MilpStatus::Optimal, "sampler milp not optimal");
        let mut x: Vec<f64> = sol.incumbent[..n1].to_vec();
        for (v, k) in x.iter_mut().zip(&instance.first_stage.kinds) {
            if *k != VarKind::Continuous {
                *v = v.round();
            }
        }
        points.push(x);
    }
    points
}

#[test]
fn criterion_4_cut_safety() {
    let c = corpus();
    let milp_cfg = MilpConfig::default();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(40_404);
    for (i, run) in c.runs.iter().enumerate() {
        let inst = &run.instance;
        let enc = build_indicator_encoding(inst).unwrap();
        let points = sample_feasible_points(inst, &enc, &run.loop_run.bounds.hull, 500, &mut rng);
        for x in &points {
            let d = match identify_distribution(inst, x) {
                Ok(d) => d,
                Err(e) => {
                    failures.push(format!("instance {}: sampled point has no cell: {}", i, e));
                    continue;
                }
            };
            let eval = engine::evaluate_recourse(inst, x, d, &milp_cfg).expect("recourse eval");
            if !eval.feasible {
                continue; // not a correctly-estimating point
            }
            let mu = eval.value;
            let ind = ind_assignment(&enc, d);
            for (k, cut) in run.loop_run.cuts.iter().enumerate() {
                let v = cut.violation(x, mu, &ind);
                if v > 1e-6 {
                    failures.push(format!(
                        "instance {} cut {} ({:?}) violated by {:.3e} at {:?}",
                        i, k, cut.kind, v, x
                    ));
                }
            }
        }
        if failures.len() > 20 {
            break;
        }
    }
    report(4, "cut-safety-500", &failures);
}

#[test]
fn criterion_5_cut_tightness() {
    let c = corpus();
    let milp_cfg = MilpConfig::default();
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for (i, run) in c.runs.iter().enumerate() {
        let inst = &run.instance;
        let enc = build_indicator_encoding(inst).unwrap();
        for (k, cut) in run.loop_run.cuts.iter().enumerate() {
            let tight_target = match cut.kind {
                CutKind::ContOpt | CutKind::IntOpt => cut.d,
                _ => None,
            };
            let Some(d) = tight_target else { continue };
            let x_v = &cut.provenance.x_v;
            let eval = engine::evaluate_recourse(inst, x_v, d, &milp_cfg).expect("recourse eval");
            let expected = match cut.kind {
                CutKind::ContOpt => eval.lp_value,
                _ => eval.value,
            };
            let got = cut.mu_rhs_at(x_v, &ind_assignment(&enc, d));
            checked += 1;
            if (got - expected).abs() > 1e-7 * (1.0 + expected.abs()) {
                failures.push(format!(
                    "instance {} cut {} ({:?}): rhs {} vs recourse {}",
                    i, k, cut.kind, got, expected
                ));
            }
        }
    }
    assert!(checked > 0, "no optimality cuts to check");
    report(5, "cut-tightness", &failures);
}

/// A variant-1-like single-facility instance whose demand row is an equality
/// the zero-production cell can never meet: x = [capacity, y_idle, y_on];
/// recourse w + o = x, w = D with D in {3, 5}.
fn no_complete_recourse_instance() -> SpInstance {
    let scenario = |p: f64, demand: f64| ScenarioData {
        probability: p,
        q: vec![-2.0, 0.0],
        w: vec![vec![1.0, 1.0], vec![1.0, 0.0]],
        t: vec![vec![-1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]],
        h: vec![0.0, demand],
    };
    let cell = vec![scenario(0.5, 3.0), scenario(0.5, 5.0)];
    SpInstance {
        first_stage: FirstStage {
            costs: vec![1.0, 0.0, 0.0],
            rows: vec![
                Row::new(vec![0.0, 1.0, 1.0], Relation::Eq, 1.0),
                Row::new(vec![-1.0, 0.0, 1.0], Relation::Le, 0.0),
                Row::new(vec![1.0, 0.0, -10.0], Relation::Le, 0.0),
            ],
            kinds: vec![VarKind::Continuous, VarKind::Binary, VarKind::Binary],
            bounds: vec![(0.0, 10.0), (0.0, 1.0), (0.0, 1.0)],
        },
        partition: Partition::BinarySegments {
            segments: vec![Segment {
                vars: vec![1, 2],
                weights: vec![0.0, 1.0],
                conditions: vec![(-0.25, 0.25), (0.75, 1.25)],
            }],
        },
        distributions: vec![cell.clone(), cell],
        stage2_kind: Stage2Kind::Lp,
        second_stage_kinds: vec![VarKind::Continuous; 2],
        ybox: Some(vec![10.0, 10.0]),
        recourse_sense: Sense::Min,
        meta: InstanceMeta {
            name: Some("no-complete-recourse".into()),
            rhs_only_uncertainty: true,
            monotone_dirs: None,
        },
    }
}

#[test]
fn criterion_6_feasibility_cut_convergence() {
    let inst = no_complete_recourse_instance();
    let cfg = RunConfig::default();
    let res = engine::run(&inst, &cfg, SolveMode::Loop).expect("run");
    let mut failures = Vec::new();
    let feas_cuts = res
        .cuts
        .iter()
        .filter(|c| matches!(c.kind, CutKind::ContFeas))
        .count();
    if feas_cuts == 0 {
        failures.push("no continuous feasibility cut generated".into());
    }
    // Selling exactly D at price 2 costs x = max demand 5: objective 5 - 8.
    if (res.objective - (-3.0)).abs() > 1e-6 {
        failures.push(format!("objective {} expected -3", res.objective));
    }
    let d = identify_distribution(&inst, &res.x).expect("final x has a cell");
    let eval =
        engine::evaluate_recourse(&inst, &res.x, d, &MilpConfig::default()).expect("eval");
    if !eval.feasible {
        failures.push("final x has infeasible recourse in its own cell".into());
    }
    report(6, "feasibility-cut-convergence", &failures);
}

/// The binary-cube example: X = {0,1}^5 split into segments {x1,x2}, {x3,x4},
/// {x5}, each with conditions sum < 1 and sum >= 1, giving 8 cells.
fn binary_cube_instance() -> SpInstance {
    let segment = |vars: Vec<usize>| Segment {
        weights: vec![1.0; vars.len()],
        vars,
        conditions: vec![(-0.25, 0.25), (0.75, 5.25)],
    };
    let cell = |c: f64| {
        vec![ScenarioData {
            probability: 1.0,
            q: vec![1.0],
            w: vec![vec![1.0]],
            t: vec![vec![0.0; 5]],
            h: vec![c],
        }]
    };
    SpInstance {
        first_stage: FirstStage {
            costs: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            rows: vec![],
            kinds: vec![VarKind::Binary; 5],
            bounds: vec![(0.0, 1.0); 5],
        },
        partition: Partition::BinarySegments {
            segments: vec![segment(vec![0, 1]), segment(vec![2, 3]), segment(vec![4])],
        },
        distributions: (0..8).map(|d| cell(d as f64)).collect(),
        stage2_kind: Stage2Kind::Lp,
        second_stage_kinds: vec![VarKind::Continuous],
        ybox: Some(vec![10.0]),
        recourse_sense: Sense::Min,
        meta: InstanceMeta {
            name: Some("binary-cube".into()),
            rhs_only_uncertainty: true,
            monotone_dirs: None,
        },
    }
}

#[test]
fn criterion_7_encoding_compression() {
    let inst = binary_cube_instance();
    let enc = build_indicator_encoding(&inst).unwrap();
    let mut failures = Vec::new();
    if enc.num_vars != 6 {
        failures.push(format!("{} indicator variables, expected 6", enc.num_vars));
    }
    if inst.num_distributions() != 8 {
        failures.push(format!("{} cells, expected 8", inst.num_distributions()));
    }
    for bits in 0..32u32 {
        let x: Vec<f64> = (0..5).map(|i| ((bits >> i) & 1) as f64).collect();
        let expected = 4 * usize::from(x[0] + x[1] >= 1.0)
            + 2 * usize::from(x[2] + x[3] >= 1.0)
            + usize::from(x[4] >= 1.0);
        match identify_distribution(&inst, &x) {
            Ok(d) if d == expected => {
                let ind = ind_assignment(&enc, d);
                for (dd, act) in enc.activations.iter().enumerate() {
                    let v = act.eval(&ind);
                    let ok = if dd == d { v.abs() < 1e-9 } else { v >= 1.0 - 1e-9 };
                    if !ok {
                        failures.push(format!(
                            "x {:?}: activation[{}] = {} (cell {})",
                            x, dd, v, d
                        ));
                    }
                }
            }
            Ok(d) => failures.push(format!("x {:?}: cell {} expected {}", x, d, expected)),
            Err(e) => failures.push(format!("x {:?}: {}", x, e)),
        }
    }
    report(7, "encoding-compression", &failures);
}

fn toy_expected_recourse(inst: &SpInstance, x: f64) -> f64 {
    let d = identify_distribution(inst, &[x]).expect("grid point in a cell");
    inst.distributions[d]
        .iter()
        .map(|sc| sc.probability * toy_recourse(x, sc.h[1]))
        .sum()
}

fn distind_cut(inst: &SpInstance, family: DistIndFamily, x_v: f64) -> Cut {
    let hull = vec![(0.5, 10.0)];
    gen_distind_cut(inst, family, &[x_v], &hull, 0)
        .expect("cut generation")
        .expect("family produces a cut")
}

#[test]
fn criterion_8_dist_independent_cuts() {
    let inst = toy_instance();
    let mut failures = Vec::new();
    let grid: Vec<f64> = (0..50)
        .map(|i| 0.5 + 2.5 * i as f64 / 49.0)
        .chain((0..50).map(|i| 3.5 + 6.5 * i as f64 / 49.0))
        .collect();
    let families = [
        DistIndFamily::McCormick,
        DistIndFamily::Jensen,
        DistIndFamily::Envelope,
    ];
    for family in families {
        for &x_v in &[0.5, 2.0, 3.5, 6.0, 10.0] {
            let cut = distind_cut(&inst, family, x_v);
            for &x in &grid {
                let bound = cut.mu_rhs_at(&[x], &[]);
                let q = toy_expected_recourse(&inst, x);
                if bound > q + 1e-6 {
                    failures.push(format!(
                        "{:?} cut at {}: bound {} > recourse {} at x = {}",
                        family, x_v, bound, q, x
                    ));
                }
            }
        }
        let cfg = RunConfig {
            dist_ind: family,
            u_opt_override: Some(12.5),
            l_override: Some(0.0),
            ..RunConfig::default()
        };
        let res = engine::run(&inst, &cfg, SolveMode::Loop).expect("run");
        if (res.objective - 6.4).abs() > 1e-6 {
            failures.push(format!("{:?}: objective {} != 6.4", family, res.objective));
        }
    }
    // |D| = 32 integer-stage instance: adding McCormick cuts must not grow
    // the optimality-cut count.
    let spec = ClassSpec {
        facilities: 5,
        levels: 2,
        scenarios: 3,
        customers: 2,
        batches: 3,
        seed: 77,
    };
    let big = ppp::generate_instance(Variant::V3, &spec).expect("generate");
    let opt_cuts = |res: &RunResult| {
        res.cuts
            .iter()
            .filter(|c| matches!(c.kind, CutKind::ContOpt | CutKind::IntOpt))
            .count()
    };
    let plain = engine::run(&big, &RunConfig::default(), SolveMode::Loop).expect("plain run");
    let cfg_mc = RunConfig {
        dist_ind: DistIndFamily::McCormick,
        ..RunConfig::default()
    };
    let with_mc = engine::run(&big, &cfg_mc, SolveMode::Loop).expect("mccormick run");
    if !rel_close(with_mc.objective, plain.objective, 1e-6) {
        failures.push(format!(
            "|D|=32: objective changed {} -> {}",
            plain.objective, with_mc.objective
        ));
    }
    if opt_cuts(&with_mc) > opt_cuts(&plain) {
        failures.push(format!(
            "|D|=32: optimality cuts grew {} -> {}",
            opt_cuts(&plain),
            opt_cuts(&with_mc)
        ));
    }
    report(8, "dist-independent-cuts", &failures);
}

#[test]
fn criterion_9_scaling_smoke() {
    let spec = ClassSpec {
        facilities: 5,
        levels: 2,
        scenarios: 10,
        customers: 2,
        batches: 3,
        seed: 909,
    };
    let inst = ppp::generate_instance(Variant::V2, &spec).expect("generate");
    assert_eq!(inst.num_distributions(), 32);
    let start = Instant::now();
    let res = engine::run(&inst, &RunConfig::default(), SolveMode::Loop).expect("run");
    let elapsed = start.elapsed();
    let opt_cuts = res
        .cuts
        .iter()
        .filter(|c| matches!(c.kind, CutKind::ContOpt | CutKind::IntOpt))
        .count();
    println!(
        "criterion 9 detail: {} optimality cuts for |D| = 32 (soft target < 64), {:?}",
        opt_cuts, elapsed
    );
    let mut failures = Vec::new();
    if res.status != engine::RunStatus::Optimal {
        failures.push("did not reach optimality".into());
    }
    if elapsed >= Duration::from_secs(300) {
        failures.push(format!("runtime {:?} >= 5 min", elapsed));
    }
    if opt_cuts >= 128 {
        failures.push(format!("{} optimality cuts >= 4|D| = 128", opt_cuts));
    }
    report(9, "scaling-smoke", &failures);
}

// ---------------------------------------------------------------------------
// Criterion 10: kernel oracles
// ---------------------------------------------------------------------------

/// Solve an n x n dense system by Gaussian elimination with partial pivoting.
fn solve_square(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut v = b[row];
        for k in row + 1..n {
            v -= a[row][k] * x[k];
        }
        x[row] = v / a[row][row];
    }
    Some(x)
}

/// Exact LP oracle for small boxes: enumerate candidate vertices as the
/// solutions of every n-subset of constraints (equalities always included)
/// and minimize over the feasible ones. Returns None when infeasible.
fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    // Constraint list as (coeffs, rhs, is_eq) with bounds expanded.
    let mut cons: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for r in &lp.rows {
        cons.push((r.coeffs.clone(), r.rhs, r.relation == Relation::Eq));
    }
    for (j, &(l, u)) in lp.bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cons.push((e.clone(), l, false));
        cons.push((e, u, false));
    }
    let m = cons.len();
    let feasible = |x: &[f64]| -> bool {
        let tol = 1e-7;
        for (r, row) in lp.rows.iter().enumerate() {
            let v: f64 = row.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let ok = match lp.rows[r].relation {
                Relation::Le => v <= row.rhs + tol,
                Relation::Ge => v >= row.rhs - tol,
                Relation::Eq => (v - row.rhs).abs() <= tol,
            };
            if !ok {
                return false;
            }
        }
        x.iter()
            .zip(&lp.bounds)
            .all(|(&v, &(l, u))| v >= l - tol && v <= u + tol)
    };
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        // Visit the current n-combination of constraint indices.
        let mut a: Vec<Vec<f64>> = idx.iter().map(|&i| cons[i].0.clone()).collect();
        let mut b: Vec<f64> = idx.iter().map(|&i| cons[i].1).collect();
        if let Some(x) = solve_square(&mut a, &mut b) {
            if feasible(&x) {
                let obj: f64 = lp.objective.iter().zip(&x).map(|(a, b)| a * b).sum();
                best = Some(best.map_or(obj, |v: f64| v.min(obj)));
            }
        }
        // Advance the combination.
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - (n - i) {
                idx[i] += 1;
                for k in i + 1..n {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(2..=4);
    let m = rng.gen_range(1..=4);
    let rows = (0..m)
        .map(|_| {
            let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let relation = match rng.gen_range(0..6) {
                0 => Relation::Eq,
                1 | 2 => Relation::Ge,
                _ => Relation::Le,
            };
            Row::new(coeffs, relation, rng.gen_range(-5.0..5.0))
        })
        .collect();
    LinearProgram {
        sense: Sense::Min,
        objective: (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect(),
        rows,
        bounds: (0..n).map(|_| (0.0, rng.gen_range(1.0..10.0))).collect(),
    }
}

#[test]
fn criterion_10_kernel_oracles() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut lp_infeasible = 0usize;
    for case in 0..1000 {
        let lp = random_lp(&mut rng);
        let oracle = vertex_oracle(&lp);
        let sol = lp::solve_lp(&lp).expect("lp solve");
        match (oracle, sol.status) {
            (None, LpStatus::Infeasible) => lp_infeasible += 1,
            (Some(obj), LpStatus::Optimal) => {
                if (obj - sol.objective).abs() > 1e-7 * (1.0 + obj.abs()) {
                    failures.push(format!("lp case {}: {} vs oracle {}", case, sol.objective, obj));
                }
            }
            (o, s) => failures.push(format!("lp case {}: status {:?} vs oracle {:?}", case, s, o)),
        }
    }
    assert!(lp_infeasible > 0 && lp_infeasible < 1000, "lp corpus degenerate");

    let mut milp_infeasible = 0usize;
    for case in 0..200 {
        let n = rng.gen_range(3..=10);
        let m = rng.gen_range(2..=5);
        let rows: Vec<Row> = (0..m)
            .map(|_| {
                let coeffs: Vec<f64> =
                    (0..n).map(|_| rng.gen_range(-5i32..=5) as f64).collect();
                let relation = if rng.gen_bool(0.5) { Relation::Le } else { Relation::Ge };
                Row::new(coeffs, relation, rng.gen_range(-8i32..=8) as f64)
            })
            .collect();
        let lp = LinearProgram {
            sense: Sense::Min,
            objective: (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect(),
            rows,
            bounds: vec![(0.0, 1.0); n],
        };
        let mip = MixedIntegerProgram {
            kinds: vec![VarKind::Binary; n],
            lp,
        };
        // Exhaustive enumeration over {0,1}^n.
        let mut best: Option<f64> = None;
        for bits in 0..(1u32 << n) {
            let x: Vec<f64> = (0..n).map(|i| ((bits >> i) & 1) as f64).collect();
            let ok = mip.lp.rows.iter().all(|r| {
                let v: f64 = r.coeffs.iter().zip(&x).map(|(a, b)| a * b).sum();
                match r.relation {
                    Relation::Le => v <= r.rhs + 1e-9,
                    Relation::Ge => v >= r.rhs - 1e-9,
                    Relation::Eq => (v - r.rhs).abs() <= 1e-9,
                }
            });
            if ok {
                let obj: f64 = mip.lp.objective.iter().zip(&x).map(|(a, b)| a * b).sum();
                best = Some(best.map_or(obj, |v: f64| v.min(obj)));
            }
        }
        let sol = milp::solve_milp(&mip, None).expect("milp solve");
        match (best, sol.status) {
            (None, MilpStatus::Infeasible) => milp_infeasible += 1,
            (Some(obj), MilpStatus::Optimal) => {
                if (obj - sol.objective).abs() > 1e-7 * (1.0 + obj.abs()) {
                    failures.push(format!(
                        "milp case {}: {} vs oracle {}",
                        case, sol.objective, obj
                    ));
                }
            }
            (o, s) => {
                failures.push(format!("milp case {}: status {:?} vs oracle {:?}", case, s, o))
            }
        }
    }
    assert!(milp_infeasible < 200, "milp corpus degenerate");
    report(10, "kernel-oracles", &failures);
}
