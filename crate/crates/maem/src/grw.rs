//! Geometric random walk ensemble, the comparison model for the growth/decay
//! boundary of the poorer agents.
//!
//! Each walker's log wealth takes independent Gaussian increments with drift
//! mu - sigma^2/2 and amplitude sigma, so the ensemble mean grows as
//! e^(mu t) while the median grows as e^((mu - sigma^2/2) t). The median is
//! stationary exactly on the boundary Delta_g = mu - sigma^2/2 = 0.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::ConfigError;
use crate::rng::{stream_rng, Domain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrwParams {
    /// Drift per step.
    pub mu: f64,
    /// Noise amplitude per step.
    pub sigma: f64,
    pub n_walkers: usize,
    pub seed: u64,
}

impl GrwParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.mu.is_finite() {
            return Err(ConfigError::new("mu", "must be finite"));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(ConfigError::new("sigma", "must be a finite value >= 0"));
        }
        if self.n_walkers < 1 {
            return Err(ConfigError::new("n_walkers", "must be at least 1"));
        }
        Ok(())
    }

    /// Median growth rate Delta_g = mu - sigma^2 / 2.
    pub fn delta_g(&self) -> f64 {
        self.mu - self.sigma * self.sigma / 2.0
    }
}

/// Sign of the median growth rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryClass {
    Grows,
    Decays,
    Marginal,
}

impl BoundaryClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryClass::Grows => "grows",
            BoundaryClass::Decays => "decays",
            BoundaryClass::Marginal => "marginal",
        }
    }
}

/// Classify the typical (median) trajectory by the sign of Delta_g;
/// |Delta_g| below 1e-12 counts as marginal.
pub fn classify_boundary(params: &GrwParams) -> BoundaryClass {
    let delta = params.delta_g();
    if delta.abs() < 1e-12 {
        BoundaryClass::Marginal
    } else if delta > 0.0 {
        BoundaryClass::Grows
    } else {
        BoundaryClass::Decays
    }
}

/// One synchronous step of a set of walker wealths.
///
/// With sigma = 0 the update is the exact deterministic limit (every wealth
/// multiplied by e^mu); otherwise each walker moves in log space by
/// (mu - sigma^2/2) + sigma * xi with xi standard normal, consuming one
/// normal draw per walker in index order.
pub fn grw_step<R: Rng + ?Sized>(wealth: &[f64], params: &GrwParams, rng: &mut R) -> Vec<f64> {
    debug_assert!(wealth.iter().all(|w| *w > 0.0));
    if params.sigma == 0.0 {
        let factor = params.mu.exp();
        return wealth.iter().map(|w| w * factor).collect();
    }
    let drift = params.delta_g();
    wealth
        .iter()
        .map(|w| {
            let xi: f64 = rng.sample(StandardNormal);
            (w.ln() + drift + params.sigma * xi).exp()
        })
        .collect()
}

/// Recorded ensemble statistics of a walk started from wealth 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GrwSeries {
    pub times: Vec<u64>,
    /// Ensemble mean of w(t).
    pub mean: Vec<f64>,
    /// Ensemble median of w(t) (geometric midpoint of the two central
    /// walkers when the count is even).
    pub median: Vec<f64>,
}

impl GrwSeries {
    pub fn final_median(&self) -> f64 {
        *self.median.last().expect("series is never empty")
    }

    pub fn final_mean(&self) -> f64 {
        *self.mean.last().expect("series is never empty")
    }
}

/// Run an ensemble for `steps` steps, recording every `record_every` steps
/// (the final step is always recorded).
///
/// Every walker owns its stream keyed by (seed, walker index), so the result
/// is identical no matter how the walkers are sharded across threads.
pub fn run_grw(params: &GrwParams, steps: u64, record_every: u64) -> GrwSeries {
    assert!(steps >= 1 && record_every >= 1);
    let drift = params.delta_g();
    let times: Vec<u64> = (1..=steps)
        .filter(|t| t % record_every == 0 || *t == steps)
        .collect();

    // walker-major: log wealth at each recorded time
    let recorded: Vec<Vec<f64>> = (0..params.n_walkers)
        .into_par_iter()
        .map(|walker| {
            let mut rng = stream_rng(params.seed, Domain::GrwWalker, &[walker as u64]);
            let mut log_w = 0.0;
            let mut out = Vec::with_capacity(times.len());
            for t in 1..=steps {
                let xi: f64 = rng.sample(StandardNormal);
                log_w += drift + params.sigma * xi;
                if t % record_every == 0 || t == steps {
                    out.push(log_w);
                }
            }
            out
        })
        .collect();

    let n = params.n_walkers;
    let mut mean = Vec::with_capacity(times.len());
    let mut median = Vec::with_capacity(times.len());
    let mut column = vec![0.0; n];
    for step_idx in 0..times.len() {
        for (walker, log_w) in recorded.iter().enumerate() {
            column[walker] = log_w[step_idx];
        }
        mean.push(column.iter().map(|lw| lw.exp()).sum::<f64>() / n as f64);
        median.push(log_median(&mut column).exp());
    }
    GrwSeries {
        times,
        mean,
        median,
    }
}

fn log_median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let (_, upper, _) = values.select_nth_unstable_by(n / 2, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..n / 2]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mu: f64, sigma: f64, n_walkers: usize) -> GrwParams {
        GrwParams {
            mu,
            sigma,
            n_walkers,
            seed: 11,
        }
    }

    #[test]
    fn boundary_classification_by_sign() {
        assert_eq!(classify_boundary(&params(0.02, 0.2, 1)), BoundaryClass::Marginal);
        assert_eq!(classify_boundary(&params(0.03, 0.2, 1)), BoundaryClass::Grows);
        assert_eq!(classify_boundary(&params(0.01, 0.2, 1)), BoundaryClass::Decays);
    }

    #[test]
    fn zero_noise_step_is_exact_growth() {
        let p = params(0.05, 0.0, 3);
        let mut rng = stream_rng(1, Domain::GrwWalker, &[0]);
        let w = grw_step(&[1.0, 2.0, 0.5], &p, &mut rng);
        let factor = 0.05f64.exp();
        assert_eq!(w, vec![factor, 2.0 * factor, 0.5 * factor]);

        let idle = params(0.0, 0.0, 3);
        let w = grw_step(&[1.0, 2.0, 0.5], &idle, &mut rng);
        assert_eq!(w, vec![1.0, 2.0, 0.5]);
    }

    #[test]
    fn walkers_stay_positive() {
        let p = params(-0.2, 0.5, 64);
        let series = run_grw(&p, 500, 100);
        assert!(series.mean.iter().all(|m| *m > 0.0));
        assert!(series.median.iter().all(|m| *m > 0.0));
    }

    #[test]
    fn negative_drift_median_has_negative_slope() {
        // Delta_g = 0.01 - 0.04/2 = -0.01: the median of ln w drifts down.
        let p = params(0.01, 0.2, 10_000);
        let series = run_grw(&p, 1000, 250);
        let final_log_median = series.final_median().ln();
        assert!(
            final_log_median < -5.0,
            "expected strongly negative median log wealth, got {final_log_median}"
        );
        let first_log_median = series.median[0].ln();
        assert!(final_log_median < first_log_median);
    }

    #[test]
    fn ensemble_mean_tracks_exponential_growth() {
        // Lognormal mean: E[w(t)] = e^(mu t). With 10^5 walkers the standard
        // error at t = 100 is well under one percent; assert three of them.
        let mu = 1e-3;
        let sigma = 0.1;
        let t = 100u64;
        let p = params(mu, sigma, 100_000);
        let series = run_grw(&p, t, t);
        let expected = (mu * t as f64).exp();
        let var = (2.0 * mu * t as f64).exp() * ((sigma * sigma * t as f64).exp() - 1.0);
        let se = (var / p.n_walkers as f64).sqrt();
        let err = (series.final_mean() - expected).abs();
        assert!(err < 3.0 * se, "err {err} vs 3se {}", 3.0 * se);
    }

    #[test]
    fn median_sign_matches_classification_away_from_boundary() {
        for (mu, sigma) in [(0.01, 0.2), (0.03, 0.2), (0.02, 0.1)] {
            let p = params(mu, sigma, 4000);
            let class = classify_boundary(&p);
            let series = run_grw(&p, 1000, 1000);
            let sign = series.final_median().ln();
            match class {
                BoundaryClass::Grows => assert!(sign > 0.0, "({mu}, {sigma})"),
                BoundaryClass::Decays => assert!(sign < 0.0, "({mu}, {sigma})"),
                BoundaryClass::Marginal => unreachable!("cases are off-boundary"),
            }
        }
    }

    #[test]
    fn results_do_not_depend_on_shard_count() {
        let p = params(0.01, 0.3, 512);
        let run_in_pool = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_grw(&p, 200, 50))
        };
        assert_eq!(run_in_pool(1), run_in_pool(4));
    }
}
