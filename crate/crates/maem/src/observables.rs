//! Statistics computed from wealth states: rank distributions, percentile
//! means, rank correlation, and the time-average wealth metric.

use crate::engine::WealthState;
use crate::error::{Error, Result};

/// Which end of the ranking a percentile statistic looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Poorest,
    Richest,
}

impl End {
    pub fn as_str(&self) -> &'static str {
        match self {
            End::Poorest => "poorest",
            End::Richest => "richest",
        }
    }
}

/// Rescaled wealth by rank at one instant. Rank 0 is the richest agent;
/// ties are broken by ascending agent id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankSnapshot {
    pub time: u64,
    /// Rescaled wealth (w_i / sum w_j) sorted non-increasing.
    pub sorted_rescaled: Vec<f64>,
    /// agent id -> rank.
    pub agent_ranks: Vec<u32>,
}

impl RankSnapshot {
    pub fn n_agents(&self) -> usize {
        self.sorted_rescaled.len()
    }

    /// Rescaled wealth of one agent (by id, not rank).
    pub fn rescaled_of_agent(&self, agent: usize) -> f64 {
        self.sorted_rescaled[self.agent_ranks[agent] as usize]
    }
}

/// Sort a state into a rank snapshot.
pub fn rank_snapshot(state: &WealthState) -> RankSnapshot {
    let wealth = state.wealth();
    let total: f64 = wealth.iter().sum();
    let mut order: Vec<u32> = (0..wealth.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        wealth[b as usize]
            .total_cmp(&wealth[a as usize])
            .then(a.cmp(&b))
    });
    let mut agent_ranks = vec![0u32; wealth.len()];
    let mut sorted_rescaled = Vec::with_capacity(wealth.len());
    for (rank, &agent) in order.iter().enumerate() {
        agent_ranks[agent as usize] = rank as u32;
        sorted_rescaled.push(wealth[agent as usize] / total);
    }
    RankSnapshot {
        time: state.time(),
        sorted_rescaled,
        agent_ranks,
    }
}

/// Mean rescaled wealth of the max(1, floor(fraction * N)) agents at the
/// chosen end of the ranking.
pub fn percentile_mean(snapshot: &RankSnapshot, which: End, fraction: f64) -> f64 {
    assert!(
        fraction > 0.0 && fraction <= 1.0,
        "fraction must be in (0, 1]"
    );
    let n = snapshot.n_agents();
    let m = ((fraction * n as f64).floor() as usize).clamp(1, n);
    let slice = match which {
        End::Richest => &snapshot.sorted_rescaled[..m],
        End::Poorest => &snapshot.sorted_rescaled[n - m..],
    };
    slice.iter().sum::<f64>() / m as f64
}

/// Rescaled wealth of the richest agent.
pub fn max_rescaled(snapshot: &RankSnapshot) -> f64 {
    snapshot.sorted_rescaled[0]
}

/// Pearson correlation between two rank assignments, with the mean taken
/// as the exact sample mean (which is (N-1)/2 for 0-based ranks).
pub fn pearson_rank_correlation(ranks_t: &[u32], ranks_0: &[u32]) -> Result<f64> {
    assert_eq!(ranks_t.len(), ranks_0.len(), "rank vectors must match");
    let n = ranks_t.len();
    if n < 2 {
        return Err(Error::UndefinedCorrelation);
    }
    let mean = |r: &[u32]| r.iter().map(|&x| x as f64).sum::<f64>() / n as f64;
    let (mt, m0) = (mean(ranks_t), mean(ranks_0));
    let mut cov = 0.0;
    let mut var_t = 0.0;
    let mut var_0 = 0.0;
    for (&a, &b) in ranks_t.iter().zip(ranks_0) {
        let da = a as f64 - mt;
        let db = b as f64 - m0;
        cov += da * db;
        var_t += da * da;
        var_0 += db * db;
    }
    if var_t == 0.0 || var_0 == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok(cov / (var_t * var_0).sqrt())
}

/// Running per-agent time averages of rescaled wealth over recorded epochs,
/// the discretization of the wealth-metric time integral.
///
/// Sums are stored and divided on demand, so the running mean is exactly
/// the arithmetic mean of the recorded snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricAccumulator {
    start_time: u64,
    sums: Vec<f64>,
    epoch_count: u64,
}

impl MetricAccumulator {
    pub fn new(n_agents: usize, start_time: u64) -> Self {
        Self {
            start_time,
            sums: vec![0.0; n_agents],
            epoch_count: 0,
        }
    }

    pub fn start_time(&self) -> u64 {
        self.start_time
    }

    pub fn epoch_count(&self) -> u64 {
        self.epoch_count
    }

    /// Record one epoch.
    pub fn update(&mut self, snapshot: &RankSnapshot) {
        assert!(
            snapshot.time >= self.start_time,
            "snapshot predates the measurement window"
        );
        assert_eq!(snapshot.n_agents(), self.sums.len());
        for (agent, sum) in self.sums.iter_mut().enumerate() {
            *sum += snapshot.rescaled_of_agent(agent);
        }
        self.epoch_count += 1;
    }

    /// Per-agent time-averaged rescaled wealth.
    pub fn time_averages(&self) -> Vec<f64> {
        let k = self.epoch_count as f64;
        self.sums.iter().map(|s| s / k).collect()
    }

    /// The wealth metric: population variance of the per-agent time
    /// averages. Zero iff every agent has the same time average.
    pub fn omega(&self) -> f64 {
        assert!(self.epoch_count >= 1, "metric needs at least one epoch");
        let means = self.time_averages();
        let n = means.len() as f64;
        let grand = means.iter().sum::<f64>() / n;
        means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / n
    }
}
