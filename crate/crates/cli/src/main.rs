//! Command-line front end.
//!
//! Subcommands: `verify-cocycle`, `verify-functional`, `solve-functional`,
//! `check-kernel`, `simulate`. Each reads one TOML config (see the
//! `stableflow::config` schema), writes machine-readable reports plus a
//! human summary under `--out`, and exits with 0 on pass, 1 on a
//! law/validation failure, 2 on a configuration or integrability error.
//! Outputs carry no timestamps, so reruns with identical config and seed
//! produce identical payloads.

use clap::{Args, Parser, Subcommand};
use stableflow::cocycle::verify_cocycle;
use stableflow::config::{self, Config};
use stableflow::defaults;
use stableflow::error::Error;
use stableflow::functional::{law_residual, verify_functional};
use stableflow::kernel::{
    check_self_similarity, check_stationary_increments, log_grid, write_selfsim_table,
};
use stableflow::simulate::{graded_grid, mc_charfun_check, selfsim_mc_check, simulate_paths, SimConfig};
use stableflow::{Point, RunMode, VerificationReport};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "stableflow",
    about = "Flow/cocycle/semi-additive-functional calculus for self-similar stable mixed moving averages",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the cocycle law of the configured cocycle by sampling.
    VerifyCocycle(CommonArgs),
    /// Verify the kind-appropriate semi-additive law of the configured
    /// functional.
    VerifyFunctional(CommonArgs),
    /// Tabulate the configured closed-form functional with a law-residual
    /// column.
    SolveFunctional(CommonArgs),
    /// Generation relation, self-similarity and stationary increments of
    /// the configured kernel.
    CheckKernel(CommonArgs),
    /// Simulate SaS mixed-moving-average paths and validate the empirical
    /// characteristic function.
    Simulate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the sampling / simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the verification sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the pass tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the quadrature base point count.
    #[arg(long = "quad-n")]
    quad_n: Option<usize>,
    /// Force sequential execution and reductions.
    #[arg(long)]
    deterministic: bool,
}

type CmdFn = fn(&Config, &CommonArgs) -> Result<CmdOutput, Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, CmdFn) = match &cli.command {
            Command::VerifyCocycle(a) => (a, cmd_verify_cocycle),
            Command::VerifyFunctional(a) => (a, cmd_verify_functional),
            Command::SolveFunctional(a) => (a, cmd_solve_functional),
            Command::CheckKernel(a) => (a, cmd_check_kernel),
            Command::Simulate(a) => (a, cmd_simulate),
        };

    let cfg = match config::load(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("cannot create output directory {}: {e}", args.out.display());
        return ExitCode::from(2);
    }

    match run(&cfg, args) {
        Ok(output) => {
            print!("{}", output.summary);
            if let Err(e) = std::fs::write(args.out.join("summary.txt"), &output.summary) {
                eprintln!("cannot write summary: {e}");
                return ExitCode::from(2);
            }
            if output.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

struct CmdOutput {
    pass: bool,
    summary: String,
}

fn mode_of(args: &CommonArgs) -> RunMode {
    if args.deterministic {
        RunMode::Sequential
    } else {
        RunMode::Parallel
    }
}

fn verify_cfg(cfg: &Config, args: &CommonArgs, default_tol: f64) -> stableflow::VerifyConfig {
    let mut v = cfg.verify_config(default_tol);
    if let Some(seed) = args.seed {
        v.seed = seed;
    }
    if let Some(samples) = args.samples {
        v.samples = samples;
    }
    if let Some(tol) = args.tol {
        v.tol = tol;
    }
    v.mode = mode_of(args);
    v
}

fn exponent_cfg(cfg: &Config, args: &CommonArgs) -> stableflow::ExponentConfig {
    let mut e = cfg.exponent_config();
    if let Some(n) = args.quad_n {
        e.quad.base_points = n.max(2);
    }
    e.mode = mode_of(args);
    e
}

fn write_report(report: &VerificationReport, out: &Path, stem: &str) -> Result<(), Error> {
    report.write_json(&out.join(format!("{stem}.json")))?;
    report.write_counterexamples_csv(&out.join(format!("{stem}_counterexamples.csv")))?;
    Ok(())
}

fn cmd_verify_cocycle(cfg: &Config, args: &CommonArgs) -> Result<CmdOutput, Error> {
    let space = cfg.build_flow()?;
    let coc = cfg.build_cocycle(&space)?;
    let v = verify_cfg(cfg, args, defaults::TOL_COCYCLE_LAW);
    let report = verify_cocycle(&coc, &v);
    write_report(&report, &args.out, "cocycle_report")?;
    Ok(CmdOutput {
        pass: report.pass,
        summary: report.to_string(),
    })
}

fn cmd_verify_functional(cfg: &Config, args: &CommonArgs) -> Result<CmdOutput, Error> {
    let space = cfg.build_flow()?;
    let f = cfg.build_functional(&space)?;
    let v = verify_cfg(cfg, args, defaults::TOL_FUNCTIONAL_LAW);
    let report = verify_functional(&f, &v);
    write_report(&report, &args.out, "functional_report")?;
    Ok(CmdOutput {
        pass: report.pass,
        summary: report.to_string(),
    })
}

fn cmd_solve_functional(cfg: &Config, args: &CommonArgs) -> Result<CmdOutput, Error> {
    let space = cfg.build_flow()?;
    let f = cfg.build_functional(&space)?;
    let tol = args.tol.unwrap_or(defaults::TOL_FUNCTIONAL_LAW);

    let (cs, points) = solve_layout(cfg, &space)?;
    let path = args.out.join("solve_table.csv");
    let mut w = csv::Writer::from_path(&path)
        .map_err(|e| Error::config(format!("csv write failed: {e}")))?;
    w.write_record(["c", "fiber", "coord", "value", "law_residual"])
        .map_err(|e| Error::config(format!("csv write failed: {e}")))?;
    let mut worst = 0.0f64;
    for &c in &cs {
        let half = c.sqrt();
        for p in &points {
            let value = f.eval(c, p)?;
            // residual of the law at the split c = sqrt(c) * sqrt(c)
            let residual = law_residual(&f, half, half, p)?;
            worst = worst.max(residual);
            w.write_record([
                format!("{c:.17e}"),
                space.fiber_label(p.fiber).to_string(),
                format!("{:.17e}", p.coord),
                format!("{value:.17e}"),
                format!("{residual:.17e}"),
            ])
            .map_err(|e| Error::config(format!("csv write failed: {e}")))?;
        }
    }
    w.flush()?;

    let pass = worst <= tol;
    let mut summary = String::new();
    writeln!(
        summary,
        "[{}] solve table: {} rows ({} scales x {} points), worst law residual {worst:.3e} (tol {tol:.1e})",
        if pass { "PASS" } else { "FAIL" },
        cs.len() * points.len(),
        cs.len(),
        points.len()
    )
    .ok();
    writeln!(summary, "  table written to {}", path.display()).ok();
    Ok(CmdOutput { pass, summary })
}

fn solve_layout(
    cfg: &Config,
    space: &stableflow::FlowSpace,
) -> Result<(Vec<f64>, Vec<Point>), Error> {
    let (cs, points_cfg) = match &cfg.solve {
        Some(s) => (s.cs.clone(), s.points.as_ref()),
        None => (vec![0.5, 2.0, 4.0], None),
    };
    let points = match points_cfg {
        Some(list) => list
            .iter()
            .map(|sp| {
                let p = Point::new(sp.fiber, sp.coord);
                space.validate_point(&p).map(|_| p)
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => {
            // default sweep: a few coordinates per fiber
            let mut points = Vec::new();
            for fiber in 0..space.fiber_count() {
                match space.period(fiber) {
                    Some(q) => {
                        for frac in [0.1, 0.45, 0.8] {
                            points.push(Point::new(fiber, frac * q));
                        }
                    }
                    None => {
                        if matches!(space, stableflow::FlowSpace::Identity { .. }) {
                            points.push(Point::label_only(fiber));
                        } else {
                            for u in [-1.5, 0.25, 2.0] {
                                points.push(Point::new(fiber, u));
                            }
                        }
                    }
                }
            }
            points
        }
    };
    Ok((cs, points))
}

fn cmd_check_kernel(cfg: &Config, args: &CommonArgs) -> Result<CmdOutput, Error> {
    let k = cfg.build_kernel()?;
    let default_check = stableflow::config::CheckConfig::default_values();
    let check = cfg.check.as_ref().unwrap_or(&default_check);
    let tol = args.tol.unwrap_or(defaults::TOL_QUAD_CHECK);
    let ecfg = exponent_cfg(cfg, args);

    let grid = log_grid(&k, check.grid_umin, check.grid_umax, check.grid_points);
    let mut summary = String::new();
    let mut pass = true;

    let coverage = k.support_coverage(&check.ts, &grid);
    if coverage == 0.0 {
        writeln!(
            summary,
            "warning: degenerate support (no increment is nonzero on the grid)"
        )
        .ok();
    } else {
        writeln!(summary, "support coverage on the grid: {coverage:.3}").ok();
    }

    let mut generated = Vec::new();
    for &c in &check.cs {
        let r = k.generated_residual(c, &grid, defaults::TOL_GENERATED)?;
        pass &= r.pass;
        summary.push_str(&r.to_string());
        generated.push(r);
    }
    std::fs::write(
        args.out.join("generated_relation.json"),
        serde_json::to_string_pretty(&generated)
            .map_err(|e| Error::config(format!("report serialization failed: {e}")))?,
    )?;

    let (ss_report, rows) =
        check_self_similarity(&k, &check.cs, &check.thetas, &check.ts, &ecfg, tol)?;
    pass &= ss_report.pass;
    summary.push_str(&ss_report.to_string());
    write_report(&ss_report, &args.out, "self_similarity")?;
    write_selfsim_table(&rows, &args.out.join("self_similarity.csv"))?;

    let st_report =
        check_stationary_increments(&k, check.shift, &check.thetas, &check.ts, &ecfg, tol)?;
    pass &= st_report.pass;
    summary.push_str(&st_report.to_string());
    write_report(&st_report, &args.out, "stationary_increments")?;

    Ok(CmdOutput { pass, summary })
}

fn cmd_simulate(cfg: &Config, args: &CommonArgs) -> Result<CmdOutput, Error> {
    let k = cfg.build_kernel()?;
    let sim = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| Error::config("missing [simulate] section"))?;
    let grid_cfg = cfg.grid_config();
    let grid = graded_grid(&k, &sim.ts, &grid_cfg)?;
    let mut sim_cfg = SimConfig::new(sim.n_paths, args.seed.unwrap_or(sim.seed), sim.ts.clone());
    sim_cfg.mode = mode_of(args);
    let ecfg = exponent_cfg(cfg, args);

    let paths = simulate_paths(&k, &grid, &sim_cfg)?;
    let mut summary = String::new();
    writeln!(
        summary,
        "simulated {} paths at {} time points over {} grid cells (seed {})",
        sim.n_paths,
        sim.ts.len(),
        grid.cells.len(),
        sim_cfg.seed
    )
    .ok();
    if sim.write_paths {
        let path = args.out.join("paths.csv");
        paths.write_csv(&path)?;
        writeln!(summary, "paths written to {}", path.display()).ok();
    }

    let mut pass = true;
    let mut reports = Vec::new();
    for t_index in 0..sim.ts.len() {
        let r = mc_charfun_check(&k, &paths, &sim.thetas, t_index, &ecfg)?;
        pass &= r.pass;
        summary.push_str(&r.to_string());
        reports.push(r);
    }
    if let Some(c) = sim.selfsim_c {
        let r = selfsim_mc_check(&k, &sim_cfg, c, &sim.thetas, &grid_cfg)?;
        pass &= r.pass;
        summary.push_str(&r.to_string());
        reports.push(r);
    }
    std::fs::write(
        args.out.join("mc_reports.json"),
        serde_json::to_string_pretty(&reports)
            .map_err(|e| Error::config(format!("report serialization failed: {e}")))?,
    )?;

    Ok(CmdOutput { pass, summary })
}
