//! `eigdpp`: solve the eigenvalue-DPP fixed point, play its two-player
//! games, verify the coupling inequalities, and measure Hölder moduli.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 a check
//! reported violations, 1 anything else.

mod config;

use clap::{Parser, Subcommand};
use config::*;
use eigdpp_core::coupling::{
    check_dominative_inequality_rows, check_extremal_inequality_rows,
    check_general_inequality_rows, choose_constants, write_samples_csv, BarrierParams, CheckParams,
    DominativeBarrierParams,
};
use eigdpp_core::game::{estimate_value, GameKind};
use eigdpp_core::holder::{holder_ratio, modulus_profile, write_modulus_csv};
use eigdpp_core::linalg::{eigen_decompose, lambda_j_minmax, weighted_eig_sum, SymMatrix};
use eigdpp_core::solver::solve;
use eigdpp_core::weights::AlphaWeights;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "eigdpp",
    version,
    about = "Eigenvalue-DPP solver and verification suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Path to the JSON config for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Caps worker threads; results are identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve u = Tε u with Dirichlet collar data.
    Solve,
    /// Monte Carlo playouts of the associated game.
    Simulate,
    /// Sampled verification of the coupling inequalities (extremal/general).
    CheckCoupling,
    /// Sampled verification of the dominative p-Laplacian inequality.
    CheckDominative,
    /// Hölder-modulus report for a solved field.
    Holder,
    /// Eigenvalues and the min-max form of λⱼ.
    Eig,
}

enum CmdError {
    Validation(String),
    Violations(u64),
    Runtime(String),
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Runtime(format!("io: {e}"))
    }
}

impl From<eigdpp_core::Error> for CmdError {
    fn from(e: eigdpp_core::Error) -> Self {
        match e {
            eigdpp_core::Error::InvalidInput(_) | eigdpp_core::Error::PreconditionViolated(_) => {
                CmdError::Validation(e.to_string())
            }
            other => CmdError::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(k) = cli.threads {
        #[cfg(feature = "parallel")]
        {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
            {
                eprintln!("error: could not configure thread pool: {e}");
                return ExitCode::from(1);
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            if k > 1 {
                eprintln!("warning: built without the `parallel` feature; running single-threaded");
            }
        }
    }

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Violations(count)) => {
            eprintln!("check reported {count} violation(s)");
            ExitCode::from(3)
        }
        Err(CmdError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CmdError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CmdError::Validation("missing required --config <path>".into()))?;
    let raw = fs::read_to_string(config_path)
        .map_err(|e| CmdError::Validation(format!("config: cannot read {config_path:?}: {e}")))?;
    fs::create_dir_all(&cli.out)?;

    match cli.command {
        Cmd::Solve => cmd_solve(&raw, cli),
        Cmd::Simulate => cmd_simulate(&raw, cli),
        Cmd::CheckCoupling => cmd_check_coupling(&raw, cli),
        Cmd::CheckDominative => cmd_check_dominative(&raw, cli),
        Cmd::Holder => cmd_holder(&raw, cli),
        Cmd::Eig => cmd_eig(&raw, cli),
    }
}

fn parse<T: serde::de::DeserializeOwned>(raw: &str) -> Result<T, CmdError> {
    serde_json::from_str(raw).map_err(|e| CmdError::Validation(format!("config: {e}")))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CmdError> {
    let mut payload = serde_json::to_string_pretty(value)
        .map_err(|e| CmdError::Runtime(format!("serialize: {e}")))?;
    payload.push('\n');
    fs::write(path, payload)?;
    Ok(())
}

fn cmd_solve(raw: &str, cli: &Cli) -> Result<(), CmdError> {
    let cfg: SolveConfig = parse(raw)?;
    let built = cfg.build().map_err(CmdError::Validation)?;
    let (field, report) = solve(
        &built.spec,
        &built.variant,
        &built.cfg,
        &built.payoff,
        &built.opts,
    )?;
    let mut csv = Vec::new();
    field.write_csv(&mut csv)?;
    fs::write(cli.out.join("field.csv"), csv)?;
    write_json(&cli.out.join("report.json"), &report)?;
    println!(
        "solve: converged={} iterations={} residual={:.3e}",
        report.converged, report.iterations, report.final_residual
    );
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary {
    mean: f64,
    se: f64,
    trials: u64,
    seed: u64,
}

fn cmd_simulate(raw: &str, cli: &Cli) -> Result<(), CmdError> {
    let cfg: SimulateConfig = parse(raw)?;
    let built = cfg.solve.build().map_err(CmdError::Validation)?;
    let seed = cli.seed.unwrap_or(cfg.seed);

    let solved = if cfg.needs_solved_field() {
        let (field, report) = solve(
            &built.spec,
            &built.variant,
            &built.cfg,
            &built.payoff,
            &built.opts,
        )?;
        if !report.converged {
            return Err(CmdError::Runtime(format!(
                "field solve did not converge (residual {:.3e}); greedy strategies need it",
                report.final_residual
            )));
        }
        Some(field)
    } else {
        None
    };

    let game = cfg.game_config(&built).map_err(CmdError::Validation)?;
    let kind = match cfg.game {
        GameKindSpec::Extremal => GameKind::Extremal {
            s_max: vector_strategy(
                &cfg.max_strategy,
                solved.as_ref(),
                VectorStrategySpec::Random,
                "max_strategy",
            )
            .map_err(CmdError::Validation)?,
            s_min: vector_strategy(
                &cfg.min_strategy,
                solved.as_ref(),
                VectorStrategySpec::Random,
                "min_strategy",
            )
            .map_err(CmdError::Validation)?,
        },
        GameKindSpec::General => GameKind::General {
            s_subspace: subspace_strategy(&cfg.subspace_strategy, solved.as_ref())
                .map_err(CmdError::Validation)?,
            s_vector: vector_strategy(
                &cfg.vector_strategy,
                solved.as_ref(),
                VectorStrategySpec::Random,
                "vector_strategy",
            )
            .map_err(CmdError::Validation)?,
        },
    };

    let (estimate, records) = estimate_value(
        &cfg.x0,
        &built.payoff,
        &game,
        &kind,
        cfg.trials,
        seed,
        cfg.record_limit,
    )?;

    let summary = SimulateSummary {
        mean: estimate.mean,
        se: estimate.standard_error,
        trials: estimate.trials,
        seed,
    };
    write_json(&cli.out.join("summary.json"), &summary)?;

    let mut csv: Vec<u8> = Vec::new();
    {
        use std::io::Write;
        let n = cfg.x0.len();
        let coords: Vec<String> = (1..=n).map(|d| format!("x{d}")).collect();
        writeln!(csv, "trajectory,step,{},j,sign", coords.join(","))?;
    }
    for (i, t) in records.iter().enumerate() {
        t.write_csv(&mut csv, i)?;
    }
    fs::write(cli.out.join("trajectories.csv"), csv)?;
    println!(
        "simulate: mean={:.6} se={:.6} trials={}",
        estimate.mean, estimate.standard_error, estimate.trials
    );
    Ok(())
}

fn cmd_check_coupling(raw: &str, cli: &Cli) -> Result<(), CmdError> {
    let cfg: CheckCouplingConfig = parse(raw)?;
    let bp = match (cfg.c_override, cfg.n_annuli_override) {
        (None, None) => choose_constants(cfg.delta, cfg.c_tilde)
            .map_err(|e| CmdError::Validation(format!("delta/c_tilde: {e}")))?,
        (Some(c), Some(n)) => BarrierParams::new(cfg.delta, c, n, cfg.c_tilde)
            .map_err(|e| CmdError::Validation(format!("c_override/n_annuli_override: {e}")))?,
        _ => {
            return Err(CmdError::Validation(
                "c_override and n_annuli_override must be given together".into(),
            ))
        }
    };
    let params = CheckParams {
        samples: cfg.samples,
        direction_budget: cfg.direction_budget,
        eps: cfg.eps,
        seed: cli.seed.unwrap_or(cfg.seed),
        regime: cfg.regime.build(),
        collect_rows: cfg.per_sample_csv,
    };
    let (report, rows) = match &cfg.alphas {
        None => check_extremal_inequality_rows(&bp, &params)?,
        Some(alphas) => {
            let w = AlphaWeights::new(alphas.clone())
                .map_err(|e| CmdError::Validation(format!("alphas: {e}")))?;
            check_general_inequality_rows(&bp, &w, &params)?
        }
    };
    write_json(&cli.out.join("check.json"), &report)?;
    if cfg.per_sample_csv {
        let mut csv = Vec::new();
        write_samples_csv(&rows, &mut csv)?;
        fs::write(cli.out.join("samples.csv"), csv)?;
    }
    println!(
        "check-coupling: samples={} violations={} (far {}, near {})",
        report.samples, report.violations, report.regime_counts.far, report.regime_counts.near
    );
    if report.violations > 0 {
        return Err(CmdError::Violations(report.violations));
    }
    Ok(())
}

fn cmd_check_dominative(raw: &str, cli: &Cli) -> Result<(), CmdError> {
    let cfg: CheckDominativeConfig = parse(raw)?;
    let dbp = DominativeBarrierParams::new(cfg.n, cfg.delta, cfg.omega)
        .map_err(|e| CmdError::Validation(format!("n/delta/omega: {e}")))?;
    // NaN-rejecting comparison.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(cfg.p >= 2.0) {
        return Err(CmdError::Validation(format!(
            "p: must be >= 2, got {}",
            cfg.p
        )));
    }
    let q = (cfg.n as f64 + 2.0) / (cfg.n as f64 + cfg.p);
    let params = CheckParams {
        samples: cfg.samples,
        direction_budget: 0,
        eps: cfg.eps,
        seed: cli.seed.unwrap_or(cfg.seed),
        regime: cfg.regime.build(),
        collect_rows: cfg.per_sample_csv,
    };
    let (report, rows) =
        check_dominative_inequality_rows(&dbp, q, cfg.quad_points_per_axis, &params)?;
    write_json(&cli.out.join("check.json"), &report)?;
    if cfg.per_sample_csv {
        let mut csv = Vec::new();
        write_samples_csv(&rows, &mut csv)?;
        fs::write(cli.out.join("samples.csv"), csv)?;
    }
    println!(
        "check-dominative: samples={} violations={}",
        report.samples, report.violations
    );
    if report.violations > 0 {
        return Err(CmdError::Violations(report.violations));
    }
    Ok(())
}

fn cmd_holder(raw: &str, cli: &Cli) -> Result<(), CmdError> {
    let cfg: HolderConfig = parse(raw)?;
    let built = cfg.solve.build().map_err(CmdError::Validation)?;
    let (field, solve_report) = solve(
        &built.spec,
        &built.variant,
        &built.cfg,
        &built.payoff,
        &built.opts,
    )?;
    if !solve_report.converged {
        return Err(CmdError::Runtime(format!(
            "solve did not converge (residual {:.3e})",
            solve_report.final_residual
        )));
    }
    let report = holder_ratio(&field, &cfg.center, cfg.r, cfg.delta, built.cfg.eps())?;
    let profile = modulus_profile(&field, &cfg.center, cfg.r, cfg.bins)?;
    write_json(&cli.out.join("report.json"), &report)?;
    let mut csv = Vec::new();
    write_modulus_csv(&profile, &mut csv)?;
    fs::write(cli.out.join("holder.csv"), csv)?;
    println!(
        "holder: ratio_sup={:.6} pairs={} subsampled={}",
        report.ratio_sup, report.pairs_scanned, report.subsampled
    );
    Ok(())
}

#[derive(Serialize)]
struct EigReport {
    eigenvalues: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_j_minmax: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weighted_sum: Option<f64>,
}

fn cmd_eig(raw: &str, cli: &Cli) -> Result<(), CmdError> {
    let cfg: EigConfig = parse(raw)?;
    let m = SymMatrix::from_rows(&cfg.matrix)
        .map_err(|e| CmdError::Validation(format!("matrix: {e}")))?;
    let decomposition = eigen_decompose(&m)?;
    let lambda = match cfg.j {
        Some(j) => {
            let frames = match &cfg.frames {
                Some(f) => f.build(m.dim()).map_err(CmdError::Validation)?,
                None => eigdpp_core::FrameFamily::canonical(m.dim(), 8)
                    .map_err(|e| CmdError::Validation(e.to_string()))?,
            };
            Some(lambda_j_minmax(&m, j, &frames)?)
        }
        None => None,
    };
    let weighted = match &cfg.weights {
        Some(alphas) => {
            let w = AlphaWeights::new(alphas.clone())
                .map_err(|e| CmdError::Validation(format!("weights: {e}")))?;
            Some(weighted_eig_sum(&m, &w)?)
        }
        None => None,
    };
    let report = EigReport {
        eigenvalues: decomposition.spectrum.values().to_vec(),
        lambda_j_minmax: lambda,
        weighted_sum: weighted,
    };
    write_json(&cli.out.join("report.json"), &report)?;
    println!("eig: {:?}", report.eigenvalues);
    Ok(())
}
