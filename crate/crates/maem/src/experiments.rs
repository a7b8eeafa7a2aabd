//! Experiment drivers: each public function reproduces one figure-level
//! claim — steady-state collapse, phase grids and the growth/decay boundary,
//! finite-size scaling of the richest agent, rank mobility, the ergodicity
//! metric, and the transient-time divergence.
//!
//! All stochastic work is split into independent tasks (one trajectory, one
//! grid-cell realization) with RNG streams keyed by the task's own
//! parameters, and results are reduced in fixed index order, so every
//! experiment is bit-reproducible regardless of thread count.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::engine::{ModelParams, WealthState};
use crate::error::{ConfigError, Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::observables::{
    max_rescaled, pearson_rank_correlation, percentile_mean, rank_snapshot, End,
    MetricAccumulator,
};
use crate::rng::{stream_rng, Domain};

/// Default percentile width: the poorest/richest 1% of agents.
pub const DEFAULT_PERCENTILE_FRACTION: f64 = 0.01;
/// Default tolerance on ln(rescaled wealth) for collapse detection.
pub const DEFAULT_COLLAPSE_TOL: f64 = 0.05;
/// Default fraction of bottom ranks excluded from collapse comparison,
/// where Monte Carlo noise dominates.
pub const DEFAULT_EXCLUDE_BOTTOM: f64 = 0.01;

/// Geometrically spaced values from `min` to `max` inclusive.
pub fn log_spaced(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > min && points >= 2);
    let (a, b) = (min.ln(), max.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

/// One recorded epoch of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesEntry {
    pub t: u64,
    pub log_total: f64,
    pub ws_max: f64,
    pub poorest: f64,
    pub richest: f64,
    /// Rank correlation against the reference ranking at the end of unit 1.
    pub mobility: f64,
    /// Omega(t0)/Omega(t); `None` where the ratio is undefined.
    pub omega_ratio: Option<f64>,
    pub sorted_rescaled: Vec<f64>,
}

/// Time-indexed observables of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub params: ModelParams,
    pub t_max: u64,
    pub record_every: u64,
    pub percentile_fraction: f64,
    pub entries: Vec<SeriesEntry>,
}

impl ObservableSeries {
    pub fn entry_at(&self, t: u64) -> Option<&SeriesEntry> {
        self.entries
            .binary_search_by_key(&t, |e| e.t)
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Advance a fresh state for `t_max` units, recording observables every
/// `record_every` units (and at `t_max`). Deterministic given `params.seed`
/// and `realization`.
///
/// The mobility reference ranking is taken at the end of unit 1, because at
/// t = 0 all wealths are equal and the ranking is a tie-breaking artifact.
/// The metric window opens at the first recorded epoch.
pub fn run_trajectory(
    params: &ModelParams,
    t_max: u64,
    record_every: u64,
    percentile_fraction: f64,
    realization: u64,
) -> Result<ObservableSeries> {
    let mut rng = stream_rng(params.seed, Domain::Trajectory, &[realization]);
    trajectory_with_rng(params, t_max, record_every, percentile_fraction, &mut rng)
}

fn trajectory_with_rng<R: rand::Rng + ?Sized>(
    params: &ModelParams,
    t_max: u64,
    record_every: u64,
    percentile_fraction: f64,
    rng: &mut R,
) -> Result<ObservableSeries> {
    params.validate().map_err(Error::Config)?;
    assert!(t_max >= 1 && record_every >= 1);
    let mut state = WealthState::new(params).map_err(Error::Config)?;

    state.advance_unit(params, rng)?;
    let reference_ranks = rank_snapshot(&state).agent_ranks.clone();

    let mut entries = Vec::new();
    let mut metric: Option<MetricAccumulator> = None;
    let mut omega_t0 = 0.0;

    let mut record = |state: &WealthState,
                      metric: &mut Option<MetricAccumulator>,
                      omega_t0: &mut f64| {
        let snap = rank_snapshot(state);
        let mobility = pearson_rank_correlation(&snap.agent_ranks, &reference_ranks)
            .expect("rank vectors are permutations of size >= 2");
        let acc = metric.get_or_insert_with(|| {
            MetricAccumulator::new(state.n_agents(), snap.time)
        });
        acc.update(&snap);
        let omega = acc.omega();
        if acc.epoch_count() == 1 {
            *omega_t0 = omega;
        }
        let omega_ratio = if omega > 0.0 {
            Some(*omega_t0 / omega)
        } else if *omega_t0 == 0.0 {
            // Omega constant at zero (frozen equal wealths).
            Some(1.0)
        } else {
            None
        };
        entries.push(SeriesEntry {
            t: snap.time,
            log_total: state.log_total(),
            ws_max: max_rescaled(&snap),
            poorest: percentile_mean(&snap, End::Poorest, percentile_fraction),
            richest: percentile_mean(&snap, End::Richest, percentile_fraction),
            mobility,
            omega_ratio,
            sorted_rescaled: snap.sorted_rescaled,
        });
    };

    if state.time() % record_every == 0 || state.time() == t_max {
        record(&state, &mut metric, &mut omega_t0);
    }
    while state.time() < t_max {
        state.advance_unit(params, rng)?;
        let t = state.time();
        if t % record_every == 0 || t == t_max {
            record(&state, &mut metric, &mut omega_t0);
        }
    }
    Ok(ObservableSeries {
        params: *params,
        t_max,
        record_every,
        percentile_fraction,
        entries,
    })
}

/// Earliest recorded time t* such that every later recorded pair (t, 2t)
/// agrees rank-by-rank on ln(rescaled wealth) within `tol`, ignoring the
/// bottom `exclude_bottom` fraction of ranks. `None` when no such time
/// exists within the series.
pub fn detect_collapse(series: &ObservableSeries, tol: f64, exclude_bottom: f64) -> Option<u64> {
    assert!(tol > 0.0);
    assert!((0.0..1.0).contains(&exclude_bottom));
    let entries = &series.entries;
    assert!(entries.len() >= 4, "collapse detection needs >= 4 snapshots");
    let n = entries[0].sorted_rescaled.len();
    let keep = n - ((exclude_bottom * n as f64).floor() as usize).min(n - 1);
    let index_of: HashMap<u64, usize> = entries.iter().enumerate().map(|(i, e)| (e.t, i)).collect();

    let mut earliest = None;
    for entry in entries.iter().rev() {
        let Some(&later) = index_of.get(&(2 * entry.t)) else {
            continue;
        };
        let a = &entry.sorted_rescaled[..keep];
        let b = &entries[later].sorted_rescaled[..keep];
        let mut worst = 0.0f64;
        for (x, y) in a.iter().zip(b) {
            let d = if *x == 0.0 && *y == 0.0 {
                0.0
            } else if *x == 0.0 || *y == 0.0 {
                f64::INFINITY
            } else {
                (x / y).ln().abs()
            };
            worst = worst.max(d);
        }
        if worst < tol {
            earliest = Some(entry.t);
        } else {
            break;
        }
    }
    earliest
}

/// Mobility experiment: the rank correlation series of one trajectory.
pub fn mobility_series(
    params: &ModelParams,
    t_max: u64,
    record_every: u64,
) -> Result<Vec<(u64, f64)>> {
    let series = run_trajectory(params, t_max, record_every, DEFAULT_PERCENTILE_FRACTION, 0)?;
    Ok(series.entries.iter().map(|e| (e.t, e.mobility)).collect())
}

/// Rank correlation averaged pointwise over independent realizations.
pub fn mobility_mean(
    params: &ModelParams,
    t_max: u64,
    record_every: u64,
    realizations: u32,
) -> Result<Vec<(u64, f64)>> {
    assert!(realizations >= 1);
    let runs: Vec<Result<Vec<(u64, f64)>>> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let series =
                run_trajectory(params, t_max, record_every, DEFAULT_PERCENTILE_FRACTION, r)?;
            Ok(series.entries.iter().map(|e| (e.t, e.mobility)).collect())
        })
        .collect();
    let mut mean: Vec<(u64, f64)> = Vec::new();
    for run in runs {
        let run = run?;
        if mean.is_empty() {
            mean = run.iter().map(|(t, _)| (*t, 0.0)).collect();
        }
        for (acc, (_, c)) in mean.iter_mut().zip(&run) {
            acc.1 += c / realizations as f64;
        }
    }
    Ok(mean)
}

/// Ergodicity experiment: the inverse-metric ratio series of one trajectory.
pub fn ergodicity_series(
    params: &ModelParams,
    t_max: u64,
    record_every: u64,
) -> Result<Vec<(u64, Option<f64>)>> {
    let series = run_trajectory(params, t_max, record_every, DEFAULT_PERCENTILE_FRACTION, 0)?;
    Ok(series.entries.iter().map(|e| (e.t, e.omega_ratio)).collect())
}

/// A (mu, alpha) lattice of late-time percentile statistics for one gamma.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGridSpec {
    pub gamma: f64,
    pub mu_values: Vec<f64>,
    pub alpha_values: Vec<f64>,
    pub n_agents: usize,
    pub t_final: u64,
    pub record_every: u64,
    pub realizations: u32,
    pub which: End,
    pub percentile_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub gamma: f64,
    pub mu_values: Vec<f64>,
    pub alpha_values: Vec<f64>,
    pub which: End,
    pub t_final: u64,
    pub realizations: u32,
    /// ln of the realization-mean percentile rescaled wealth at t_final,
    /// row-major over mu x alpha; NaN marks a fully missing cell.
    pub stat: Vec<f64>,
    /// Realization-mean slope of ln(true percentile wealth) over the last
    /// half of the run; the growth/decay classifier.
    pub slope: Vec<f64>,
    /// Failed realizations per cell.
    pub n_missing: Vec<u32>,
}

/// Growth/decay label of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthClass {
    Grows,
    Decays,
}

impl GrowthClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            GrowthClass::Grows => "grows",
            GrowthClass::Decays => "decays",
        }
    }
}

impl PhaseGrid {
    pub fn idx(&self, mu_idx: usize, alpha_idx: usize) -> usize {
        mu_idx * self.alpha_values.len() + alpha_idx
    }

    /// Per-cell classification from the slope sign; `None` for missing cells.
    pub fn classification(&self) -> Vec<Option<GrowthClass>> {
        self.slope
            .iter()
            .map(|s| {
                if s.is_nan() {
                    None
                } else if *s > 0.0 {
                    Some(GrowthClass::Grows)
                } else {
                    Some(GrowthClass::Decays)
                }
            })
            .collect()
    }
}

struct CellSample {
    final_percentile: f64,
    slope: f64,
}

/// Compute the lattice. Each (cell, realization) task carries an RNG stream
/// keyed by its own (gamma, mu, alpha, N, realization), so cell values do
/// not depend on which other cells are computed.
pub fn phase_grid(spec: &PhaseGridSpec) -> Result<PhaseGrid> {
    if spec.mu_values.is_empty() || spec.alpha_values.is_empty() {
        return Err(Error::Config(ConfigError::new(
            "mu_points",
            "grid axes must be non-empty",
        )));
    }
    assert!(spec.t_final >= 1);
    assert!(spec.record_every >= 1 && spec.record_every * 2 <= spec.t_final);
    assert!(spec.realizations >= 1);

    let cells: Vec<(usize, usize)> = (0..spec.mu_values.len())
        .flat_map(|i| (0..spec.alpha_values.len()).map(move |j| (i, j)))
        .collect();
    let tasks: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..spec.realizations as u64).map(move |r| (c, r)))
        .collect();

    let samples: Vec<Option<CellSample>> = tasks
        .par_iter()
        .map(|&(cell, realization)| {
            let (i, j) = cells[cell];
            run_phase_cell(spec, spec.mu_values[i], spec.alpha_values[j], realization).ok()
        })
        .collect();

    let n_cells = cells.len();
    let mut stat = vec![f64::NAN; n_cells];
    let mut slope = vec![f64::NAN; n_cells];
    let mut n_missing = vec![0u32; n_cells];
    for (cell_idx, chunk) in samples.chunks(spec.realizations as usize).enumerate() {
        let ok: Vec<&CellSample> = chunk.iter().flatten().collect();
        n_missing[cell_idx] = (chunk.len() - ok.len()) as u32;
        if !ok.is_empty() {
            let mean_p =
                ok.iter().map(|s| s.final_percentile).sum::<f64>() / ok.len() as f64;
            stat[cell_idx] = mean_p.ln();
            slope[cell_idx] = ok.iter().map(|s| s.slope).sum::<f64>() / ok.len() as f64;
        }
    }
    Ok(PhaseGrid {
        gamma: spec.gamma,
        mu_values: spec.mu_values.clone(),
        alpha_values: spec.alpha_values.clone(),
        which: spec.which,
        t_final: spec.t_final,
        realizations: spec.realizations,
        stat,
        slope,
        n_missing,
    })
}

fn run_phase_cell(
    spec: &PhaseGridSpec,
    mu: f64,
    alpha: f64,
    realization: u64,
) -> Result<CellSample> {
    let params = ModelParams {
        gamma: spec.gamma,
        mu,
        alpha,
        n_agents: spec.n_agents,
        seed: spec.seed,
    };
    params.validate().map_err(Error::Config)?;
    let mut rng = stream_rng(
        spec.seed,
        Domain::PhaseGridCell,
        &[
            spec.gamma.to_bits(),
            mu.to_bits(),
            alpha.to_bits(),
            spec.n_agents as u64,
            realization,
        ],
    );
    let mut state = WealthState::new(&params).map_err(Error::Config)?;
    let mut scratch = Vec::new();
    let mut series: Vec<(f64, f64)> = Vec::new();
    let mut final_percentile = f64::NAN;
    while state.time() < spec.t_final {
        state.advance_unit(&params, &mut rng)?;
        let t = state.time();
        if t % spec.record_every == 0 || t == spec.t_final {
            let p = raw_percentile_mean(
                state.wealth(),
                spec.which,
                spec.percentile_fraction,
                &mut scratch,
            );
            series.push((t as f64, p.ln() + state.log_total()));
            if t == spec.t_final {
                final_percentile = p;
            }
        }
    }
    let half_start = spec.t_final as f64 / 2.0;
    let last_half: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t > half_start)
        .copied()
        .collect();
    let slope = if last_half.iter().any(|(_, y)| !y.is_finite()) {
        // The percentile hit exact zero: decisively decaying.
        f64::NEG_INFINITY
    } else {
        linear_fit(&last_half).map(|f| f.slope).unwrap_or(f64::NAN)
    };
    Ok(CellSample {
        final_percentile,
        slope,
    })
}

/// Percentile mean over an unsorted wealth vector via selection, avoiding
/// a full sort in hot sweeps. Agrees with `percentile_mean` on a snapshot.
fn raw_percentile_mean(wealth: &[f64], which: End, fraction: f64, scratch: &mut Vec<f64>) -> f64 {
    let n = wealth.len();
    let m = ((fraction * n as f64).floor() as usize).clamp(1, n);
    let total: f64 = wealth.iter().sum();
    scratch.clear();
    scratch.extend_from_slice(wealth);
    let sum: f64 = match which {
        End::Poorest => {
            if m < n {
                scratch.select_nth_unstable_by(m - 1, f64::total_cmp);
            }
            scratch[..m].iter().sum()
        }
        End::Richest => {
            if m < n {
                scratch.select_nth_unstable_by(n - m, f64::total_cmp);
            }
            scratch[n - m..].iter().sum()
        }
    };
    (sum / m as f64) / total
}

/// The fitted growth/decay boundary mu = k * alpha^2 at gamma = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFit {
    pub k: f64,
    /// R-squared of ln(mu*) against ln(k) + 2 ln(alpha) over the boundary
    /// columns (slope held at 2).
    pub fit_quality: f64,
    /// Per-cell labels, row-major like the grid; `None` for missing cells.
    pub classification: Vec<Option<GrowthClass>>,
    /// (alpha, interpolated boundary mu) per column with a crossing.
    pub boundary_points: Vec<(f64, f64)>,
}

/// Locate the decay-to-growth crossing in each alpha column and fit
/// mu = k * alpha^2 through the crossings by least squares in log space.
pub fn fit_boundary(grid: &PhaseGrid) -> Result<BoundaryFit> {
    let classification = grid.classification();
    let mut boundary_points: Vec<(f64, f64)> = Vec::new();
    for (j, &alpha) in grid.alpha_values.iter().enumerate() {
        for i in 0..grid.mu_values.len().saturating_sub(1) {
            let below = classification[grid.idx(i, j)];
            let above = classification[grid.idx(i + 1, j)];
            if below == Some(GrowthClass::Decays) && above == Some(GrowthClass::Grows) {
                let s0 = grid.slope[grid.idx(i, j)];
                let s1 = grid.slope[grid.idx(i + 1, j)];
                let x0 = grid.mu_values[i].ln();
                let x1 = grid.mu_values[i + 1].ln();
                // Interpolate the zero of the slope in ln(mu); fall back to
                // the midpoint when the slopes do not bracket finitely.
                let frac = if s0.is_finite() && s1.is_finite() && s1 > s0 {
                    (-s0 / (s1 - s0)).clamp(0.0, 1.0)
                } else {
                    0.5
                };
                boundary_points.push((alpha, (x0 + frac * (x1 - x0)).exp()));
                break;
            }
        }
    }
    if boundary_points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "boundary fit needs at least 3 crossing columns, found {}",
            boundary_points.len()
        )));
    }
    let logs: Vec<f64> = boundary_points
        .iter()
        .map(|(alpha, mu)| mu.ln() - 2.0 * alpha.ln())
        .collect();
    let ln_k = logs.iter().sum::<f64>() / logs.len() as f64;
    let mean_lnmu = boundary_points
        .iter()
        .map(|(_, mu)| mu.ln())
        .sum::<f64>()
        / boundary_points.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (alpha, mu) in &boundary_points {
        let predicted = ln_k + 2.0 * alpha.ln();
        ss_res += (mu.ln() - predicted) * (mu.ln() - predicted);
        ss_tot += (mu.ln() - mean_lnmu) * (mu.ln() - mean_lnmu);
    }
    let fit_quality = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(BoundaryFit {
        k: ln_k.exp(),
        fit_quality,
        classification,
        boundary_points,
    })
}

/// Finite-size scan of the richest agent's late-time rescaled wealth.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSizeSpec {
    pub gamma: f64,
    pub mu: f64,
    pub alpha: f64,
    pub n_values: Vec<usize>,
    pub t_final: u64,
    pub realizations: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteSizePoint {
    pub n_agents: usize,
    pub mean_ws_max: f64,
}

pub fn finite_size_scan(spec: &FiniteSizeSpec) -> Result<Vec<FiniteSizePoint>> {
    assert!(!spec.n_values.is_empty());
    assert!(spec.n_values.windows(2).all(|w| w[0] < w[1]));
    assert!(spec.t_final >= 1 && spec.realizations >= 1);
    let tasks: Vec<(usize, u64)> = spec
        .n_values
        .iter()
        .flat_map(|&n| (0..spec.realizations as u64).map(move |r| (n, r)))
        .collect();
    let finals: Vec<Result<f64>> = tasks
        .par_iter()
        .map(|&(n, realization)| {
            let params = ModelParams {
                gamma: spec.gamma,
                mu: spec.mu,
                alpha: spec.alpha,
                n_agents: n,
                seed: spec.seed,
            };
            params.validate().map_err(Error::Config)?;
            let mut rng = stream_rng(
                spec.seed,
                Domain::FiniteSize,
                &[
                    spec.gamma.to_bits(),
                    spec.mu.to_bits(),
                    spec.alpha.to_bits(),
                    n as u64,
                    realization,
                ],
            );
            let mut state = WealthState::new(&params).map_err(Error::Config)?;
            for _ in 0..spec.t_final {
                state.advance_unit(&params, &mut rng)?;
            }
            let total: f64 = state.wealth().iter().sum();
            let max = state.wealth().iter().copied().fold(0.0f64, f64::max);
            Ok(max / total)
        })
        .collect();

    let mut points = Vec::with_capacity(spec.n_values.len());
    for (idx, &n) in spec.n_values.iter().enumerate() {
        let chunk = &finals[idx * spec.realizations as usize..(idx + 1) * spec.realizations as usize];
        let mut sum = 0.0;
        for value in chunk {
            match value {
                Ok(v) => sum += v,
                Err(_) => {
                    return Err(Error::DegenerateState { time: spec.t_final });
                }
            }
        }
        points.push(FiniteSizePoint {
            n_agents: n,
            mean_ws_max: sum / spec.realizations as f64,
        });
    }
    Ok(points)
}

/// Least-squares slope of ln(mean ws_max) against ln(N).
pub fn finite_size_loglog_fit(points: &[FiniteSizePoint]) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .map(|p| ((p.n_agents as f64).ln(), p.mean_ws_max.ln()))
        .collect();
    linear_fit(&pts)
}

/// Transient-time scan over gamma values approaching 1 from below.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientSpec {
    pub gamma_values: Vec<f64>,
    pub mu: f64,
    pub alpha: f64,
    pub n_agents: usize,
    pub t_max: u64,
    pub record_every: u64,
    pub collapse_tol: f64,
    pub exclude_bottom: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientPoint {
    pub gamma: f64,
    /// Steady-state time, absent when no collapse was found within budget.
    pub t_ss: Option<u64>,
}

/// Power-law fit of the steady-state time against 1/(1 - gamma).
#[derive(Debug, Clone, PartialEq)]
pub struct TransientFit {
    pub gamma_values: Vec<f64>,
    pub t_ss_values: Vec<f64>,
    /// Exponent x in t_ss ~ (1 - gamma)^(-x).
    pub exponent: f64,
    /// R-squared of the log-log fit.
    pub fit_quality: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientScan {
    pub points: Vec<TransientPoint>,
    /// `None` when fewer than 3 collapses were found.
    pub fit: Option<TransientFit>,
}

/// Measure the steady-state time for each gamma by collapse detection.
pub fn measure_transients(spec: &TransientSpec) -> Result<Vec<TransientPoint>> {
    if spec.gamma_values.is_empty()
        || spec.gamma_values.windows(2).any(|w| w[0] >= w[1])
        || spec.gamma_values.iter().any(|g| *g >= 1.0 || *g < 0.0)
    {
        return Err(Error::Config(ConfigError::new(
            "gamma_values",
            "must be strictly increasing and in [0, 1)",
        )));
    }
    spec.gamma_values
        .par_iter()
        .map(|&gamma| {
            let params = ModelParams {
                gamma,
                mu: spec.mu,
                alpha: spec.alpha,
                n_agents: spec.n_agents,
                seed: spec.seed,
            };
            params.validate().map_err(Error::Config)?;
            let mut rng = stream_rng(
                spec.seed,
                Domain::Transient,
                &[
                    gamma.to_bits(),
                    spec.mu.to_bits(),
                    spec.alpha.to_bits(),
                    spec.n_agents as u64,
                ],
            );
            let series = trajectory_with_rng(
                &params,
                spec.t_max,
                spec.record_every,
                DEFAULT_PERCENTILE_FRACTION,
                &mut rng,
            )?;
            let t_ss = detect_collapse(&series, spec.collapse_tol, spec.exclude_bottom);
            Ok(TransientPoint { gamma, t_ss })
        })
        .collect()
}

/// Fit ln(t_ss) = x * (-ln(1 - gamma)) + const over measured points.
pub fn fit_transient(points: &[(f64, f64)]) -> Result<TransientFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "transient fit needs at least 3 measured gammas, found {}",
            points.len()
        )));
    }
    let pts: Vec<(f64, f64)> = points
        .iter()
        .map(|(gamma, t_ss)| (-(1.0 - gamma).ln(), t_ss.ln()))
        .collect();
    let fit = linear_fit(&pts).ok_or_else(|| {
        Error::InsufficientData("transient fit needs distinct gamma values".into())
    })?;
    Ok(TransientFit {
        gamma_values: points.iter().map(|(g, _)| *g).collect(),
        t_ss_values: points.iter().map(|(_, t)| *t).collect(),
        exponent: fit.slope,
        fit_quality: fit.r_squared,
    })
}

/// Full transient experiment: measure every gamma, then fit what collapsed.
pub fn transient_scan(spec: &TransientSpec) -> Result<TransientScan> {
    let points = measure_transients(spec)?;
    let measured: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.t_ss.map(|t| (p.gamma, t as f64)))
        .collect();
    let fit = fit_transient(&measured).ok();
    Ok(TransientScan { points, fit })
}
