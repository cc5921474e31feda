//! Command-line entry points: batch solves, curve scans, analytic bounds,
//! constant estimation, property verification, and time evolution.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 strict-mode
//! non-convergence, 4 verification failure.

use crate::config::RunConfig;
use crate::evolution::{standing_wave_check, write_trajectory_csv};
use crate::inequalities::{
    check_norm_monotonicity, check_sup_tv_d1, estimate_gns_constant, estimate_hardy_constant,
};
use crate::model::{check_hypotheses, SampleGrid};
use crate::solver::{minimize_on_sphere, random_sphere_point, SolveResult};
use crate::thresholds::{
    alpha_lower_bound, alpha_upper_bound, estimate_alpha, refine_alpha, scan_energy_curve,
    verify_curve_properties, AlphaEstimate, ThresholdScan,
};
use crate::Result;
use clap::{Args, Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "lattice-nls", version, about = "Lattice NLS ground states, thresholds, and evolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fail (exit 3) when any requested solve does not converge.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one mass-constrained ground-state problem.
    Solve(CommonArgs),
    /// Scan the energy curve over the config's mass grid.
    Scan(CommonArgs),
    /// Evaluate the analytic threshold bounds.
    Bounds(CommonArgs),
    /// Estimate the mass-critical interpolation constant from below.
    Gns(CommonArgs),
    /// Estimate the Hardy constant from above (d >= 3).
    Hardy(CommonArgs),
    /// Verify curve properties, model hypotheses, and inequality sweeps.
    Verify(CommonArgs),
    /// Evolve the ground state and check the standing-wave profile.
    Evolve(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Solve(a)
            | Command::Scan(a)
            | Command::Bounds(a)
            | Command::Gns(a)
            | Command::Hardy(a)
            | Command::Verify(a)
            | Command::Evolve(a) => a,
        }
    }
}

/// Parse argv, run, and return the process exit code.
pub fn run() -> i32 {
    dispatch(Cli::parse())
}

pub fn dispatch(cli: Cli) -> i32 {
    init_thread_pool();
    let args = cli.command.args();
    let cfg = match RunConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let seed = args.seed.unwrap_or_else(|| cfg.seed());
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create output directory {}: {e}", out_dir.display());
        return 2;
    }
    match execute(&cli.command, &cfg, seed, &out_dir, args.strict) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Cap rayon's parallelism from `LATTICE_NLS_THREADS` when set.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("LATTICE_NLS_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                // fails harmlessly if a global pool already exists
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Write a file atomically: temp file in the same directory, then rename.
fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::Error::Parse(format!("serialization failed: {e}")))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn solve_json(res: &SolveResult<f64>, a: f64) -> serde_json::Value {
    json!({
        "a": a,
        "E": res.energy,
        "lambda": res.lambda,
        "residual": res.residual_norm,
        "iters": res.iters,
        "converged": res.converged,
        "start_label": res.start_label,
    })
}

fn execute(
    command: &Command,
    cfg: &RunConfig,
    seed: u64,
    out_dir: &Path,
    strict: bool,
) -> Result<i32> {
    match command {
        Command::Solve(_) => {
            let prob = cfg.problem()?;
            let a = cfg.require_mass()?;
            let ctx = prob.context(a)?;
            let res = minimize_on_sphere(&ctx, &cfg.solve_config(&prob, seed))?;
            write_json(&out_dir.join("solve.json"), &solve_json(&res.best, a))?;
            let mut csv = Vec::new();
            res.best.u.write_csv(&mut csv)?;
            atomic_write(&out_dir.join("field.csv"), &csv)?;
            if strict && !res.best.converged {
                eprintln!("strict: no start converged at a = {a}");
                return Ok(3);
            }
            Ok(0)
        }
        Command::Scan(_) => {
            let prob = cfg.problem()?;
            let grid = cfg.require_mass_grid()?;
            let ctx = prob.context(grid[0])?;
            let scfg = cfg.solve_config(&prob, seed);
            let scan = scan_energy_curve(&ctx, grid, &scfg, cfg.eps_neg)?;
            let mut alpha = estimate_alpha(&scan);
            if let AlphaEstimate::Bracket { lo, hi } = alpha {
                if cfg.refine_probes > 0 {
                    alpha = refine_alpha(&ctx, &scfg, (lo, hi), cfg.eps_neg, cfg.refine_probes)?;
                }
            }
            write_scan(&scan, &out_dir.join("scan.csv"))?;
            let d = prob.domain.dim();
            let xi = cfg.xi();
            let upper = alpha_upper_bound(&prob.nonlinearity, xi, d).ok();
            let lower = lower_bound_value(cfg, &prob, xi, seed)?;
            write_json(
                &out_dir.join("summary.json"),
                &json!({
                    "alpha_bracket": alpha,
                    "eps_neg": cfg.eps_neg,
                    "bounds": {"upper": upper, "lower": lower},
                }),
            )?;
            if strict && !scan.all_converged() {
                eprintln!("strict: at least one grid point did not converge");
                return Ok(3);
            }
            Ok(0)
        }
        Command::Bounds(_) => {
            let prob = cfg.problem()?;
            let d = prob.domain.dim();
            let xi = cfg.xi();
            let upper = alpha_upper_bound(&prob.nonlinearity, xi, d)?;
            let mut value = json!({ "alpha_upper": upper });
            if let Some(lower) = lower_bound_value(cfg, &prob, xi, seed)? {
                value["alpha_lower"] = json!(lower);
                // the interpolation constant in it is a numerical estimate
                value["alpha_lower_heuristic"] = json!(true);
            }
            write_json(&out_dir.join("bounds.json"), &value)?;
            Ok(0)
        }
        Command::Gns(_) => {
            let prob = cfg.problem()?;
            let report = estimate_gns_constant::<f64>(&prob.domain, cfg.trials, seed)?;
            write_json(
                &out_dir.join("gns.json"),
                &serde_json::to_value(&report)
                    .map_err(|e| crate::Error::Parse(e.to_string()))?,
            )?;
            Ok(0)
        }
        Command::Hardy(_) => {
            let prob = cfg.problem()?;
            let report = estimate_hardy_constant::<f64>(&prob.domain, cfg.trials, seed)?;
            write_json(
                &out_dir.join("hardy.json"),
                &serde_json::to_value(&report)
                    .map_err(|e| crate::Error::Parse(e.to_string()))?,
            )?;
            Ok(0)
        }
        Command::Verify(_) => {
            let prob = cfg.problem()?;
            let grid = cfg.require_mass_grid()?;
            let ctx = prob.context(grid[0])?;
            let scfg = cfg.solve_config(&prob, seed);
            let scan = scan_energy_curve(&ctx, grid, &scfg, cfg.eps_neg)?;
            let curve = verify_curve_properties(&scan, &[], 1e-6);
            let hypotheses = check_hypotheses(
                &prob.nonlinearity,
                &prob.potential,
                &prob.domain,
                &SampleGrid::default(),
            );
            let sweeps = inequality_sweeps(&prob, seed)?;
            let passed = curve.all_passed() && hypotheses.all_passed() && sweeps.1;
            write_json(
                &out_dir.join("verify.json"),
                &json!({
                    "curve": curve,
                    "hypotheses": hypotheses,
                    "inequalities": sweeps.0,
                    "passed": passed,
                }),
            )?;
            if strict && !scan.all_converged() {
                eprintln!("strict: at least one grid point did not converge");
                return Ok(3);
            }
            if !passed {
                eprintln!("verification failed; see verify.json");
                return Ok(4);
            }
            Ok(0)
        }
        Command::Evolve(_) => {
            let prob = cfg.problem()?;
            let a = cfg.require_mass()?;
            let evo = cfg.require_evolution()?;
            let ctx = prob.context(a)?;
            let res = minimize_on_sphere(&ctx, &cfg.solve_config(&prob, seed))?;
            if strict && !res.best.converged {
                eprintln!("strict: no start converged at a = {a}");
                return Ok(3);
            }
            let report = standing_wave_check(&res.best.u, res.best.lambda, &prob, evo)?;
            write_trajectory_csv(&report, &out_dir.join("trajectory.csv"))?;
            write_json(
                &out_dir.join("evolve.json"),
                &json!({
                    "a": a,
                    "E": res.best.energy,
                    "lambda": res.best.lambda,
                    "max_mod_dev": report.max_mod_dev,
                    "max_phase_err": report.max_phase_err,
                }),
            )?;
            Ok(0)
        }
    }
}

fn write_scan(scan: &ThresholdScan<f64>, path: &Path) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    crate::thresholds::write_scan_csv(scan, &tmp)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Heuristic threshold lower bound; `None` when the nonlinearity has no
/// mass-critical smallness constant (the subcritical case).
fn lower_bound_value(
    cfg: &RunConfig,
    prob: &crate::energy::Problem<f64>,
    xi: f64,
    seed: u64,
) -> Result<Option<f64>> {
    let d = prob.domain.dim();
    let Some(c_f) = prob.nonlinearity.mass_critical_bound(d, xi) else {
        return Ok(None);
    };
    let gns = estimate_gns_constant::<f64>(&prob.domain, cfg.trials, seed)?;
    Ok(Some(alpha_lower_bound(c_f, xi, 0.5, gns.estimate, d)?))
}

/// Random-field sweeps of the order-independent inequalities.
fn inequality_sweeps(
    prob: &crate::energy::Problem<f64>,
    seed: u64,
) -> Result<(serde_json::Value, bool)> {
    let domain = &prob.domain;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut monotone = true;
    let mut sup_tv = domain.dim() == 1;
    for _ in 0..200 {
        let u = random_sphere_point::<f64, _>(domain, 1.0, &mut rng)?;
        monotone &= check_norm_monotonicity(&u, 1.0, 2.0)?
            && check_norm_monotonicity(&u, 2.0, 4.0)?
            && check_norm_monotonicity(&u, 4.0, f64::INFINITY)?;
        if domain.dim() == 1 {
            sup_tv &= check_sup_tv_d1(&u)?;
        }
    }
    let passed = monotone && (domain.dim() != 1 || sup_tv);
    Ok((
        json!({
            "norm_monotonicity": monotone,
            "sup_tv_d1": if domain.dim() == 1 { json!(sup_tv) } else { json!(null) },
        }),
        passed,
    ))
}
