//! Command-line driver: generate / solve / compare / example.
//!
//! Exit codes: 0 success, 2 parse or parameter error, 3 time limit,
//! 4 numerical failure, 5 cross-method disagreement in compare,
//! 6 golden-trajectory mismatch in example.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};

use crate::engine::{DistIndFamily, EngineError, IterationRecord, Phase, RunConfig};
use crate::methods::{self, MethodError, MethodOutcome, OutcomeStatus};
use crate::model::{load_instance, save_instance, toy_instance, SpInstance};
use crate::ppp::{self, ClassSpec, Variant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_TIME_LIMIT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_COMPARE_FAIL: i32 = 5;
pub const EXIT_GOLDEN_MISMATCH: i32 = 6;

/// The bundled interval example in the instance JSON schema.
pub const EXAMPLE_INSTANCE_JSON: &str = include_str!("../assets/interval_example.json");

#[derive(Parser)]
#[command(
    name = "ddsp",
    version,
    about = "Exact solver for two-stage stochastic programs with decision-dependent uncertainty"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a production-planning instance and write it as JSON.
    Generate {
        /// Problem variant: 1, 2 or 3.
        #[arg(long)]
        variant: String,
        #[arg(long)]
        facilities: usize,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        scenarios: usize,
        /// Customer locations (variants 2-3).
        #[arg(long, default_value_t = 3)]
        customers: usize,
        /// Batches per facility (variant 3).
        #[arg(long, default_value_t = 3)]
        batches: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance file with a selected method.
    Solve {
        instance: PathBuf,
        /// ls-loop | ls-callback | extensive | oracle
        #[arg(long, default_value = "ls-loop")]
        method: String,
        #[arg(long, default_value_t = 1e-4)]
        gap_tol: f64,
        /// Wall-clock limit in seconds.
        #[arg(long, default_value_t = 1800.0)]
        time_limit: f64,
        /// none | mccormick | jensen | envelope
        #[arg(long, default_value = "none")]
        dist_ind_cuts: String,
        /// Override for the optimality big-M constant U.
        #[arg(long)]
        u_opt: Option<f64>,
        /// Override for the global recourse lower bound L.
        #[arg(long)]
        l_bound: Option<f64>,
        /// Iteration log CSV path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run several methods over a corpus manifest and cross-check objectives.
    Compare {
        /// Manifest CSV: id,variant,facilities,levels,scenarios,customers,batches,seed
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1800.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 1e-4)]
        gap_tol: f64,
    },
    /// Replay the bundled interval example and check the golden trajectory.
    Example {
        /// Also write the bundled instance JSON to this path.
        #[arg(long)]
        write_instance: Option<PathBuf>,
    },
}

pub fn run_cli() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap prints help/version on stdout with success; real parse
            // errors exit 2.
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.cmd {
        Cmd::Generate {
            variant,
            facilities,
            levels,
            scenarios,
            customers,
            batches,
            seed,
            out,
        } => cmd_generate(
            &variant, facilities, levels, scenarios, customers, batches, seed, &out,
        ),
        Cmd::Solve {
            instance,
            method,
            gap_tol,
            time_limit,
            dist_ind_cuts,
            u_opt,
            l_bound,
            csv,
        } => cmd_solve(
            &instance,
            &method,
            gap_tol,
            time_limit,
            &dist_ind_cuts,
            u_opt,
            l_bound,
            csv.as_deref(),
        ),
        Cmd::Compare {
            manifest,
            methods,
            out,
            time_limit,
            gap_tol,
        } => cmd_compare(&manifest, &methods, out.as_deref(), time_limit, gap_tol),
        Cmd::Example { write_instance } => cmd_example(write_instance.as_deref()),
    }
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    variant: &str,
    facilities: usize,
    levels: usize,
    scenarios: usize,
    customers: usize,
    batches: usize,
    seed: u64,
    out: &Path,
) -> i32 {
    let Some(variant) = Variant::parse(variant) else {
        eprintln!("error: unknown variant '{}'", variant);
        return EXIT_PARSE;
    };
    let spec = ClassSpec {
        facilities,
        levels,
        scenarios,
        customers,
        batches,
        seed,
    };
    let inst = match ppp::generate_instance(variant, &spec) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {}", e);
            return EXIT_PARSE;
        }
    };
    if let Err(e) = save_instance(&inst, out) {
        eprintln!("error: {}", e);
        return EXIT_PARSE;
    }
    let total: usize = inst.distributions.iter().map(|s| s.len()).sum();
    println!(
        "wrote {}: variant {}, |D| = {}, scenarios = {}",
        out.display(),
        variant.index(),
        inst.num_distributions(),
        total
    );
    EXIT_OK
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

/// The paper's reporting gap: 100 |best_primal - best_dual| / |best_dual|.
pub fn report_gap(primal: f64, dual: f64) -> f64 {
    if !primal.is_finite() || !dual.is_finite() || dual == 0.0 {
        f64::INFINITY
    } else {
        100.0 * (primal - dual).abs() / dual.abs()
    }
}

fn fmt_f(v: f64) -> String {
    if v.is_finite() {
        format!("{:.6}", v)
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn phase_str(p: Phase) -> &'static str {
    match p {
        Phase::Feas => "feas",
        Phase::Opt => "opt",
        Phase::Done => "done",
    }
}

pub fn iteration_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from("# ddsp-iterlog-v1\niteration,phase,d,LB,UB,gap,cuts_total,wall_ms\n");
    let mut cuts_total = 0usize;
    for r in records {
        cuts_total += r.cuts_added;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.iteration,
            phase_str(r.phase),
            r.d,
            fmt_f(r.lower),
            fmt_f(r.upper),
            fmt_f(report_gap(r.upper, r.lower)),
            cuts_total,
            r.wall_ms
        ));
    }
    out
}

struct SolveSettings {
    cfg: RunConfig,
}

fn build_config(
    gap_tol: f64,
    time_limit: f64,
    dist_ind: &str,
    u_opt: Option<f64>,
    l_bound: Option<f64>,
) -> Result<SolveSettings, String> {
    if !(gap_tol > 0.0) {
        return Err("gap tolerance must be positive".into());
    }
    if !(time_limit > 0.0) {
        return Err("time limit must be positive".into());
    }
    let dist_ind = DistIndFamily::parse(dist_ind)
        .ok_or_else(|| format!("unknown cut family '{}'", dist_ind))?;
    Ok(SolveSettings {
        cfg: RunConfig {
            gap_tol,
            time_limit: Duration::from_secs_f64(time_limit),
            dist_ind,
            u_opt_override: u_opt,
            l_override: l_bound,
            ..RunConfig::default()
        },
    })
}

fn method_error_code(e: &MethodError) -> i32 {
    match e {
        MethodError::UnknownMethod(_) | MethodError::Unsupported(_) => EXIT_PARSE,
        MethodError::Engine(EngineError::Model(_)) => EXIT_PARSE,
        MethodError::Ppp(crate::ppp::PppError::Model(_))
        | MethodError::Ppp(crate::ppp::PppError::BadParams(_))
        | MethodError::Ppp(crate::ppp::PppError::TooManyDistributions(_)) => EXIT_PARSE,
        _ => EXIT_NUMERICAL,
    }
}

fn print_outcome(instance: &SpInstance, method: &str, out: &MethodOutcome, wall: Duration) {
    let name = instance.meta.name.as_deref().unwrap_or("unnamed");
    println!("instance: {}", name);
    println!("method: {}", method);
    println!(
        "status: {}",
        match out.status {
            OutcomeStatus::Optimal => "optimal",
            OutcomeStatus::TimeLimit => "time-limit",
        }
    );
    println!("objective: {}", fmt_f(out.objective));
    let xs: Vec<String> = out.x.iter().map(|v| format!("{:.6}", v)).collect();
    println!("x: [{}]", xs.join(", "));
    println!("d: {}", out.d);
    println!(
        "bounds: LB = {}, UB = {}, gap% = {}",
        fmt_f(out.lower),
        fmt_f(out.upper),
        fmt_f(report_gap(out.upper, out.lower))
    );
    println!(
        "cuts: feasibility = {}, optimality = {}, distribution-independent = {}",
        out.cuts_feas, out.cuts_opt, out.cuts_dist_ind
    );
    println!("iterations: {}", out.iterations.len());
    println!("nodes: {}", out.nodes);
    println!("wall: {} ms", wall.as_millis());
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    instance_path: &Path,
    method: &str,
    gap_tol: f64,
    time_limit: f64,
    dist_ind: &str,
    u_opt: Option<f64>,
    l_bound: Option<f64>,
    csv: Option<&Path>,
) -> i32 {
    let instance = match load_instance(instance_path) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {}", e);
            return EXIT_PARSE;
        }
    };
    let settings = match build_config(gap_tol, time_limit, dist_ind, u_opt, l_bound) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {}", msg);
            return EXIT_PARSE;
        }
    };
    let solver = match methods::lookup(method) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {}", e);
            return EXIT_PARSE;
        }
    };
    let start = Instant::now();
    let out = match solver.solve(&instance, &settings.cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}", e);
            return method_error_code(&e);
        }
    };
    print_outcome(&instance, method, &out, start.elapsed());
    if let Some(path) = csv {
        if let Err(e) = std::fs::write(path, iteration_csv(&out.iterations)) {
            eprintln!("error: {}", e);
            return EXIT_PARSE;
        }
    }
    match out.status {
        OutcomeStatus::Optimal => EXIT_OK,
        OutcomeStatus::TimeLimit => EXIT_TIME_LIMIT,
    }
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct ManifestRow {
    id: String,
    variant: Variant,
    spec: ClassSpec,
}

fn parse_manifest(text: &str) -> Result<Vec<ManifestRow>, String> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields[0] == "id" {
            continue; // header
        }
        if fields.len() != 8 {
            return Err(format!(
                "manifest line {}: expected 8 fields, got {}",
                lineno + 1,
                fields.len()
            ));
        }
        let variant = Variant::parse(fields[1])
            .ok_or_else(|| format!("manifest line {}: bad variant", lineno + 1))?;
        let num = |i: usize| -> Result<usize, String> {
            fields[i]
                .parse()
                .map_err(|_| format!("manifest line {}: bad number '{}'", lineno + 1, fields[i]))
        };
        rows.push(ManifestRow {
            id: fields[0].to_string(),
            variant,
            spec: ClassSpec {
                facilities: num(2)?,
                levels: num(3)?,
                scenarios: num(4)?,
                customers: num(5)?,
                batches: num(6)?,
                seed: fields[7]
                    .parse()
                    .map_err(|_| format!("manifest line {}: bad seed", lineno + 1))?,
            },
        });
    }
    Ok(rows)
}

fn cmd_compare(
    manifest_path: &Path,
    method_names: &[String],
    out_path: Option<&Path>,
    time_limit: f64,
    gap_tol: f64,
) -> i32 {
    let text = match std::fs::read_to_string(manifest_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}", e);
            return EXIT_PARSE;
        }
    };
    let rows = match parse_manifest(&text) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {}", msg);
            return EXIT_PARSE;
        }
    };
    if method_names.is_empty() {
        eprintln!("error: no methods given");
        return EXIT_PARSE;
    }
    let settings = match build_config(gap_tol, time_limit, "none", None, None) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {}", msg);
            return EXIT_PARSE;
        }
    };
    let mut csv = String::from("# ddsp-compare-v1\nid,method,status,objective,gap_pct,wall_ms\n");
    let mut any_fail = false;
    // Per-method aggregates: (solved, attempted, gap sum, wall sum).
    let mut agg: Vec<(usize, usize, f64, f64)> = vec![(0, 0, 0.0, 0.0); method_names.len()];
    for row in &rows {
        let inst = match ppp::generate_instance(row.variant, &row.spec) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("error: instance {}: {}", row.id, e);
                return EXIT_PARSE;
            }
        };
        let mut objectives: Vec<f64> = Vec::new();
        for (mi, mname) in method_names.iter().enumerate() {
            let solver = match methods::lookup(mname) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {}", e);
                    return EXIT_PARSE;
                }
            };
            let start = Instant::now();
            match solver.solve(&inst, &settings.cfg) {
                Ok(out) => {
                    let wall = start.elapsed().as_secs_f64() * 1000.0;
                    let gap = report_gap(out.upper, out.lower);
                    let solved = out.status == OutcomeStatus::Optimal;
                    csv.push_str(&format!(
                        "{},{},{},{},{},{:.0}\n",
                        row.id,
                        mname,
                        if solved { "optimal" } else { "time-limit" },
                        fmt_f(out.objective),
                        fmt_f(gap),
                        wall
                    ));
                    agg[mi].1 += 1;
                    if solved {
                        agg[mi].0 += 1;
                        objectives.push(out.objective);
                    }
                    if gap.is_finite() {
                        agg[mi].2 += gap;
                    }
                    agg[mi].3 += wall;
                }
                Err(MethodError::Unsupported(_)) => {
                    csv.push_str(&format!("{},{},SKIPPED,,,\n", row.id, mname));
                    agg[mi].1 += 1;
                }
                Err(e) => {
                    eprintln!("error: instance {} method {}: {}", row.id, mname, e);
                    return method_error_code(&e);
                }
            }
        }
        // Cross-method agreement among solved objectives.
        let verdict = {
            let max = objectives.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = objectives.iter().cloned().fold(f64::INFINITY, f64::min);
            if objectives.len() >= 2 {
                let scale = 1.0f64.max(max.abs()).max(min.abs());
                if (max - min) / scale > 1e-4 {
                    any_fail = true;
                    "FAIL"
                } else {
                    "OK"
                }
            } else {
                "OK"
            }
        };
        csv.push_str(&format!("{},verdict,{},,,\n", row.id, verdict));
    }
    csv.push_str("# aggregates: method,solved_pct,avg_gap_pct,avg_wall_ms\n");
    for (mi, mname) in method_names.iter().enumerate() {
        let (solved, attempted, gap_sum, wall_sum) = agg[mi];
        let attempted_f = attempted.max(1) as f64;
        csv.push_str(&format!(
            "{},{:.1},{},{:.0}\n",
            mname,
            100.0 * solved as f64 / attempted_f,
            fmt_f(gap_sum / attempted_f),
            wall_sum / attempted_f
        ));
    }
    print!("{}", csv);
    if let Some(path) = out_path {
        if let Err(e) = std::fs::write(path, &csv) {
            eprintln!("error: {}", e);
            return EXIT_PARSE;
        }
    }
    if any_fail {
        EXIT_COMPARE_FAIL
    } else {
        EXIT_OK
    }
}

// ---------------------------------------------------------------------------
// example
// ---------------------------------------------------------------------------

/// Golden record of the interval-example walkthrough: per-iteration visited
/// point and the optimality cut it generated, expressed as
/// mu >= constant + slope * x - 12.5 * (1 - delta_d).
struct GoldenIteration {
    x: f64,
    d: usize,
    cut: Option<(f64, f64, usize)>, // (constant, slope, d)
}

const GOLDEN: [GoldenIteration; 4] = [
    GoldenIteration {
        x: 0.5,
        d: 0,
        cut: Some((6.4, -1.0, 0)),
    },
    GoldenIteration {
        x: 3.5,
        d: 1,
        cut: Some((15.6, -1.0, 1)),
    },
    GoldenIteration {
        x: 3.0,
        d: 0,
        cut: Some((5.0, 0.4, 0)),
    },
    GoldenIteration {
        x: 1.0,
        d: 0,
        cut: None,
    },
];

const GOLDEN_FINAL: (f64, f64, f64) = (1.0, 5.4, 6.4); // (x, mu, objective)
const GOLDEN_U: f64 = 12.5;

pub struct GoldenCheck {
    pub lines: Vec<String>,
    pub failures: Vec<String>,
}

/// Run the bundled example in loop mode and diff against the golden record.
pub fn run_golden_example() -> Result<GoldenCheck, MethodError> {
    let inst = toy_instance();
    let cfg = RunConfig {
        u_opt_override: Some(GOLDEN_U),
        l_override: Some(0.0),
        ..RunConfig::default()
    };
    let res = crate::engine::run(&inst, &cfg, crate::engine::SolveMode::Loop)?;
    let tol = 1e-6;
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    if res.iterations.len() != GOLDEN.len() {
        failures.push(format!(
            "expected {} iterations, got {}",
            GOLDEN.len(),
            res.iterations.len()
        ));
    }
    let mut cut_idx = 0usize;
    for (i, g) in GOLDEN.iter().enumerate() {
        let Some(rec) = res.iterations.get(i) else { break };
        lines.push(format!(
            "iteration {}: x = {:.4}, d = {}, Q = {}",
            i + 1,
            rec.x[0],
            rec.d + 1,
            rec.recourse.map(|q| format!("{:.4}", q)).unwrap_or_default()
        ));
        if (rec.x[0] - g.x).abs() > tol {
            failures.push(format!("iteration {}: x = {}, expected {}", i + 1, rec.x[0], g.x));
        }
        if rec.d != g.d {
            failures.push(format!("iteration {}: d = {}, expected {}", i + 1, rec.d + 1, g.d + 1));
        }
        if let Some((constant, slope, cd)) = g.cut {
            let Some(cut) = res.cuts.get(cut_idx) else {
                failures.push(format!("iteration {}: missing cut", i + 1));
                continue;
            };
            cut_idx += 1;
            // Engine stores Ge rows mu + a x + U act >= rhs; recover the
            // mu >= constant + slope x - U(1 - delta) presentation.
            let got_slope = -cut.x_coeffs[0];
            let act0 = vec![if cd == 0 { 1.0 } else { 0.0 }, if cd == 1 { 1.0 } else { 0.0 }];
            let got_constant = cut.mu_rhs_at(&[0.0], &act0);
            lines.push(format!(
                "  cut: mu >= {:.4} {} {:.4} x - {:.1}(1 - delta{})",
                got_constant,
                if got_slope >= 0.0 { "+" } else { "-" },
                got_slope.abs(),
                GOLDEN_U,
                cd + 1
            ));
            if (got_constant - constant).abs() > tol {
                failures.push(format!(
                    "cut {}: constant {} expected {}",
                    cut_idx, got_constant, constant
                ));
            }
            if (got_slope - slope).abs() > tol {
                failures.push(format!("cut {}: slope {} expected {}", cut_idx, got_slope, slope));
            }
            if cut.d != Some(cd) {
                failures.push(format!("cut {}: d {:?} expected {}", cut_idx, cut.d, cd));
            }
        }
    }
    let (gx, gmu, gobj) = GOLDEN_FINAL;
    lines.push(format!(
        "final: (x, mu) = ({:.4}, {:.4}), objective {:.4}",
        res.x[0], res.mu, res.objective
    ));
    if (res.x[0] - gx).abs() > tol || (res.mu - gmu).abs() > tol || (res.objective - gobj).abs() > tol
    {
        failures.push(format!(
            "final ({}, {}) objective {}, expected ({}, {}) objective {}",
            res.x[0], res.mu, res.objective, gx, gmu, gobj
        ));
    }
    // Lower bounds must be nondecreasing along the log.
    let mut prev = f64::NEG_INFINITY;
    for rec in &res.iterations {
        if rec.lower < prev - 1e-9 {
            failures.push(format!(
                "lower bound decreased: {} after {}",
                rec.lower, prev
            ));
        }
        prev = prev.max(rec.lower);
    }
    Ok(GoldenCheck { lines, failures })
}

fn cmd_example(write_instance: Option<&Path>) -> i32 {
    if let Some(path) = write_instance {
        let inst = match SpInstance::from_json(EXAMPLE_INSTANCE_JSON) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("error: bundled instance invalid: {}", e);
                return EXIT_NUMERICAL;
            }
        };
        if let Err(e) = save_instance(&inst, path) {
            eprintln!("error: {}", e);
            return EXIT_PARSE;
        }
        println!("wrote {}", path.display());
    }
    let check = match run_golden_example() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e);
            return EXIT_NUMERICAL;
        }
    };
    for line in &check.lines {
        println!("{}", line);
    }
    if check.failures.is_empty() {
        println!("golden check: PASS");
        EXIT_OK
    } else {
        for f in &check.failures {
            eprintln!("golden mismatch: {}", f);
        }
        println!("golden check: FAIL");
        EXIT_GOLDEN_MISMATCH
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_example_passes() {
        let check = run_golden_example().unwrap();
        assert!(check.failures.is_empty(), "{:?}", check.failures);
        assert!(check.lines.iter().any(|l| l.contains("mu >= 6.4000 - 1.0000 x")));
    }

    #[test]
    fn bundled_instance_parses_and_matches_builtin() {
        let inst = SpInstance::from_json(EXAMPLE_INSTANCE_JSON).unwrap();
        let builtin = toy_instance();
        assert_eq!(inst.to_json(), builtin.to_json());
    }

    #[test]
    fn gap_formula() {
        assert!((report_gap(6.4, 6.4) - 0.0).abs() <= 1e-12);
        assert!((report_gap(6.5, 6.4) - 100.0 * 0.1 / 6.4).abs() <= 1e-9);
        assert!(report_gap(1.0, f64::NEG_INFINITY).is_infinite());
    }

    #[test]
    fn manifest_parser() {
        let text = "# comment\nid,variant,facilities,levels,scenarios,customers,batches,seed\n\
                    a1,1,2,2,5,1,3,42\na2,3,3,2,5,2,3,7\n";
        let rows = parse_manifest(text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].id, "a1");
        assert_eq!(rows[1].variant, Variant::V3);
        assert_eq!(rows[1].spec.facilities, 3);
        assert!(parse_manifest("x,9,2,2,5,1,3,1\n").is_err());
    }
}
