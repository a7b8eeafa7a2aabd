//! Batch CLI: one subcommand per experiment, each writing a self-describing
//! CSV table. Exit code 0 on success, 2 on configuration errors, 3 on
//! runtime errors.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use maem::config::{parse_config, ExperimentKind, RunConfig};
use maem::engine::ModelParams;
use maem::error::{ConfigError, Error};
use maem::experiments::{
    detect_collapse, ergodicity_series, finite_size_loglog_fit, finite_size_scan, fit_boundary,
    log_spaced, mobility_mean, phase_grid, run_trajectory, transient_scan, FiniteSizeSpec,
    PhaseGridSpec, TransientSpec,
};
use maem::grw::{classify_boundary, run_grw, GrwParams};
use maem::observables::End;
use maem::output::{write_table, Field, Table};

#[derive(Parser)]
#[command(name = "maem", version, about = "Wealth exchange model experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Key-value configuration document; defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output CSV path (overrides the config's `out`).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Master seed (overrides the config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Omit the timestamp so reruns are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Record rank-distribution observables along one trajectory.
    Trajectory,
    /// Late-time percentile statistic over a (mu, alpha) lattice.
    PhaseGrid,
    /// Richest agent's rescaled wealth across system sizes.
    FiniteSize,
    /// Rank correlation against the initial ranking, ensemble averaged.
    Mobility,
    /// Inverse wealth-metric ratio of one trajectory.
    Ergodicity,
    /// Steady-state time against gamma with the power-law fit.
    Transient,
    /// Geometric random walk ensemble statistics.
    Grw,
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Trajectory => ExperimentKind::Trajectory,
            Command::PhaseGrid => ExperimentKind::PhaseGrid,
            Command::FiniteSize => ExperimentKind::FiniteSize,
            Command::Mobility => ExperimentKind::Mobility,
            Command::Ergodicity => ExperimentKind::Ergodicity,
            Command::Transient => ExperimentKind::Transient,
            Command::Grw => ExperimentKind::Grw,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let text = match &cli.config {
        None => String::new(),
        Some(path) => std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new("--config", format!("cannot read {}: {e}", path.display()))
        })?,
    };
    let mut config = parse_config(&text, cli.command.kind())?;
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    if let Some(out) = cli.out {
        config.set_out(out);
    }

    let execute = || -> Result<(Table, Vec<String>), Error> {
        match &config {
            RunConfig::Trajectory(c) => run_trajectory_cmd(c),
            RunConfig::PhaseGrid(c) => run_phase_grid_cmd(c),
            RunConfig::FiniteSize(c) => run_finite_size_cmd(c),
            RunConfig::Mobility(c) => run_mobility_cmd(c),
            RunConfig::Ergodicity(c) => run_ergodicity_cmd(c),
            RunConfig::Transient(c) => run_transient_cmd(c),
            RunConfig::Grw(c) => run_grw_cmd(c),
        }
    };
    let (table, comments) = match cli.threads {
        None => execute()?,
        Some(threads) => {
            if threads == 0 {
                return Err(ConfigError::new("--threads", "must be at least 1").into());
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| ConfigError::new("--threads", e.to_string()))?;
            pool.install(execute)?
        }
    };

    let out = config.out().clone();
    write_table(
        &out,
        &config.to_document(),
        &comments,
        cli.deterministic,
        &table,
    )?;
    println!("wrote {} ({} rows)", out.display(), table.rows.len());
    Ok(())
}

fn opt_float(value: Option<f64>) -> Field {
    match value {
        Some(v) => Field::Float(v),
        None => Field::Missing,
    }
}

fn run_trajectory_cmd(c: &maem::config::TrajectoryConfig) -> Result<(Table, Vec<String>), Error> {
    let params = ModelParams {
        gamma: c.gamma,
        mu: c.mu,
        alpha: c.alpha,
        n_agents: c.n_agents,
        seed: c.seed,
    };
    let series = run_trajectory(&params, c.t_max, c.record_every, c.percentile_fraction, 0)?;
    let collapse = detect_collapse(&series, c.collapse_tol, c.collapse_exclude_bottom);
    let comments = vec![match collapse {
        Some(t) => format!("collapse_time = {t}"),
        None => "collapse_time = none".to_string(),
    }];
    let rows = series
        .entries
        .iter()
        .map(|e| {
            vec![
                Field::UInt(e.t),
                Field::Float(e.log_total),
                Field::Float(e.ws_max),
                Field::Float(e.poorest),
                Field::Float(e.richest),
                Field::Float(e.mobility),
                opt_float(e.omega_ratio),
            ]
        })
        .collect();
    Ok((
        Table {
            columns: vec![
                "t",
                "log_total",
                "ws_max",
                "poorest1pct",
                "richest1pct",
                "C",
                "omega_ratio",
            ],
            rows,
        },
        comments,
    ))
}

fn run_phase_grid_cmd(c: &maem::config::PhaseGridConfig) -> Result<(Table, Vec<String>), Error> {
    let spec = PhaseGridSpec {
        gamma: c.gamma,
        mu_values: log_spaced(c.mu_min, c.mu_max, c.mu_points),
        alpha_values: log_spaced(c.alpha_min, c.alpha_max, c.alpha_points),
        n_agents: c.n_agents,
        t_final: c.t_final,
        record_every: c.record_every,
        realizations: c.realizations,
        which: c.which,
        percentile_fraction: c.percentile_fraction,
        seed: c.seed,
    };
    let grid = phase_grid(&spec)?;
    let mut comments = Vec::new();
    // The boundary fit applies to the poorest statistic at gamma = 1.
    if c.gamma == 1.0 && c.which == End::Poorest {
        match fit_boundary(&grid) {
            Ok(fit) => {
                comments.push(format!("boundary_k = {}", fit.k));
                comments.push(format!("boundary_fit_quality = {}", fit.fit_quality));
                comments.push(format!("boundary_columns = {}", fit.boundary_points.len()));
            }
            Err(e) => comments.push(format!("boundary_fit = unavailable ({e})")),
        }
    }
    let mut rows = Vec::with_capacity(grid.mu_values.len() * grid.alpha_values.len());
    for (i, &mu) in grid.mu_values.iter().enumerate() {
        for (j, &alpha) in grid.alpha_values.iter().enumerate() {
            let idx = grid.idx(i, j);
            let stat = grid.stat[idx];
            rows.push(vec![
                Field::Float(mu),
                Field::Float(alpha),
                if stat.is_nan() {
                    Field::Missing
                } else {
                    Field::Float(stat)
                },
                Field::UInt(grid.n_missing[idx] as u64),
            ]);
        }
    }
    Ok((
        Table {
            columns: vec!["mu", "alpha", "stat", "n_missing"],
            rows,
        },
        comments,
    ))
}

fn run_finite_size_cmd(c: &maem::config::FiniteSizeConfig) -> Result<(Table, Vec<String>), Error> {
    let spec = FiniteSizeSpec {
        gamma: c.gamma,
        mu: c.mu,
        alpha: c.alpha,
        n_values: c.n_values.clone(),
        t_final: c.t_final,
        realizations: c.realizations,
        seed: c.seed,
    };
    let points = finite_size_scan(&spec)?;
    let comments = match finite_size_loglog_fit(&points) {
        Some(fit) => vec![
            format!("loglog_slope = {}", fit.slope),
            format!("loglog_r_squared = {}", fit.r_squared),
        ],
        None => vec!["loglog_slope = unavailable (needs >= 2 sizes)".to_string()],
    };
    let rows = points
        .iter()
        .map(|p| {
            vec![
                Field::UInt(p.n_agents as u64),
                Field::Float(p.mean_ws_max),
            ]
        })
        .collect();
    Ok((
        Table {
            columns: vec!["n_agents", "mean_ws_max"],
            rows,
        },
        comments,
    ))
}

fn run_mobility_cmd(c: &maem::config::MobilityConfig) -> Result<(Table, Vec<String>), Error> {
    let params = ModelParams {
        gamma: c.gamma,
        mu: c.mu,
        alpha: c.alpha,
        n_agents: c.n_agents,
        seed: c.seed,
    };
    let series = mobility_mean(&params, c.t_max, c.record_every, c.realizations)?;
    let rows = series
        .iter()
        .map(|(t, corr)| vec![Field::UInt(*t), Field::Float(*corr)])
        .collect();
    Ok((
        Table {
            columns: vec!["t", "C"],
            rows,
        },
        Vec::new(),
    ))
}

fn run_ergodicity_cmd(c: &maem::config::ErgodicityConfig) -> Result<(Table, Vec<String>), Error> {
    let params = ModelParams {
        gamma: c.gamma,
        mu: c.mu,
        alpha: c.alpha,
        n_agents: c.n_agents,
        seed: c.seed,
    };
    let series = ergodicity_series(&params, c.t_max, c.record_every)?;
    let rows = series
        .iter()
        .map(|(t, ratio)| vec![Field::UInt(*t), opt_float(*ratio)])
        .collect();
    Ok((
        Table {
            columns: vec!["t", "omega_ratio"],
            rows,
        },
        Vec::new(),
    ))
}

fn run_transient_cmd(c: &maem::config::TransientConfig) -> Result<(Table, Vec<String>), Error> {
    let spec = TransientSpec {
        gamma_values: c.gamma_values.clone(),
        mu: c.mu,
        alpha: c.alpha,
        n_agents: c.n_agents,
        t_max: c.t_max,
        record_every: c.record_every,
        collapse_tol: c.collapse_tol,
        exclude_bottom: c.collapse_exclude_bottom,
        seed: c.seed,
    };
    let scan = transient_scan(&spec)?;
    let comments = match &scan.fit {
        Some(fit) => vec![
            format!("exponent = {}", fit.exponent),
            format!("fit_quality = {}", fit.fit_quality),
        ],
        None => vec!["fit = unavailable (fewer than 3 collapses found)".to_string()],
    };
    let rows = scan
        .points
        .iter()
        .map(|p| {
            vec![
                Field::Float(p.gamma),
                match p.t_ss {
                    Some(t) => Field::UInt(t),
                    None => Field::Missing,
                },
            ]
        })
        .collect();
    Ok((
        Table {
            columns: vec!["gamma", "t_ss"],
            rows,
        },
        comments,
    ))
}

fn run_grw_cmd(c: &maem::config::GrwConfig) -> Result<(Table, Vec<String>), Error> {
    let params = GrwParams {
        mu: c.mu,
        sigma: c.sigma,
        n_walkers: c.n_walkers,
        seed: c.seed,
    };
    params.validate()?;
    let series = run_grw(&params, c.steps, c.record_every);
    let comments = vec![
        format!("delta_g = {}", params.delta_g()),
        format!("classification = {}", classify_boundary(&params).as_str()),
    ];
    let rows = series
        .times
        .iter()
        .zip(series.mean.iter().zip(&series.median))
        .map(|(t, (mean, median))| {
            vec![
                Field::UInt(*t),
                Field::Float(*mean),
                Field::Float(*median),
            ]
        })
        .collect();
    Ok((
        Table {
            columns: vec!["t", "mean_w", "median_w"],
            rows,
        },
        comments,
    ))
}
