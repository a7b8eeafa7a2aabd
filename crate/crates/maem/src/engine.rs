//! Simulation state and its update rules.
//!
//! Wealth is held in a scale-invariant representation: the per-agent vector
//! is kept in normalized units summing to N, while the log of the true total
//! is tracked separately. Both the exchange transfer and the growth share
//! w^gamma / S are homogeneous in the wealth scale, so the normalized vector
//! evolves exactly as the true one would, and the representation never
//! overflows no matter how long the run compounds.
//!
//! One unit of time is N pairwise exchanges followed by one growth event
//! that injects mu * W and rescales the vector by 1/(1+mu), so the true
//! total compounds as W(0) * (1+mu)^t. The discrete compounding differs
//! from continuous e^(mu t) by a relative mu^2 t / 2 at small mu.

use rand::Rng;

use crate::error::{ConfigError, Error, Result};

/// The parameter triple (gamma, mu, alpha) plus population size and master
/// seed; fully determines a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Growth-weighting exponent; shares go as w^gamma.
    pub gamma: f64,
    /// Growth rate per time unit.
    pub mu: f64,
    /// Fraction of the poorer agent's wealth moved per exchange.
    pub alpha: f64,
    /// Number of agents.
    pub n_agents: usize,
    /// Master RNG seed.
    pub seed: u64,
}

impl ModelParams {
    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(ConfigError::new("gamma", "must be a finite value >= 0"));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(ConfigError::new("mu", "must be a finite value >= 0"));
        }
        if !(self.alpha >= 0.0 && self.alpha < 1.0) {
            return Err(ConfigError::new("alpha", "must be in [0, 1)"));
        }
        if self.n_agents < 2 {
            return Err(ConfigError::new("n_agents", "must be at least 2"));
        }
        Ok(())
    }
}

/// Per-agent wealth in normalized units plus the log of the true total.
///
/// The true wealth of agent i is `wealth[i] * exp(log_total) * W(0) / N`;
/// the rescaled wealth is `wealth[i] / sum(wealth)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthState {
    wealth: Vec<f64>,
    log_total: f64,
    // Neumaier compensation for log_total, so t identical growth events
    // accumulate to exactly t * ln(1+mu).
    log_total_comp: f64,
    time: u64,
}

impl WealthState {
    /// Equal initial distribution: every agent holds exactly 1 normalized
    /// unit, so the vector sums to N exactly.
    pub fn new(params: &ModelParams) -> std::result::Result<Self, ConfigError> {
        params.validate()?;
        Ok(Self {
            wealth: vec![1.0; params.n_agents],
            log_total: 0.0,
            log_total_comp: 0.0,
            time: 0,
        })
    }

    /// State with an arbitrary initial wealth vector, for non-equal starts.
    pub fn from_wealth(wealth: Vec<f64>) -> std::result::Result<Self, ConfigError> {
        if wealth.len() < 2 {
            return Err(ConfigError::new("wealth", "need at least 2 agents"));
        }
        if wealth.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ConfigError::new("wealth", "entries must be finite and >= 0"));
        }
        if !wealth.iter().any(|w| *w > 0.0) {
            return Err(ConfigError::new("wealth", "at least one entry must be > 0"));
        }
        Ok(Self {
            wealth,
            log_total: 0.0,
            log_total_comp: 0.0,
            time: 0,
        })
    }

    pub fn wealth(&self) -> &[f64] {
        &self.wealth
    }

    pub fn n_agents(&self) -> usize {
        self.wealth.len()
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Natural log of the true total wealth relative to W(0).
    pub fn log_total(&self) -> f64 {
        self.log_total + self.log_total_comp
    }

    /// Current sum of the normalized wealth vector.
    pub fn total(&self) -> f64 {
        self.wealth.iter().sum()
    }

    fn add_log_total(&mut self, delta: f64) {
        let t = self.log_total + delta;
        if self.log_total.abs() >= delta.abs() {
            self.log_total_comp += (self.log_total - t) + delta;
        } else {
            self.log_total_comp += (delta - t) + self.log_total;
        }
        self.log_total = t;
    }

    /// One exchange micro-step: a uniformly random pair i != j, a transfer
    /// of alpha * min(w_i, w_j), and a fair coin choosing the winner.
    ///
    /// Draw order is part of the reproducibility contract: first i, then j
    /// (redrawn until distinct), then one bool; `true` means i wins.
    pub fn exchange_step<R: Rng + ?Sized>(&mut self, params: &ModelParams, rng: &mut R) {
        let n = self.wealth.len();
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        while j == i {
            j = rng.gen_range(0..n);
        }
        let i_wins = rng.gen_bool(0.5);
        apply_exchange(&mut self.wealth, i, j, i_wins, params.alpha);
    }

    /// One growth event: mu * W is added and split in proportion to
    /// w^gamma, then the vector is rescaled by 1/(1+mu) so the normalized
    /// total is unchanged; log_total increases by ln(1+mu). Time is not
    /// advanced here; the caller owns the clock.
    pub fn growth_step(&mut self, params: &ModelParams) -> Result<()> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::DegenerateState { time: self.time });
        }
        let mu = params.mu;
        if params.gamma == 1.0 {
            // Shares proportional to w leave every normalized wealth
            // unchanged after the rescale; only the log total moves.
            self.add_log_total(mu.ln_1p());
            return Ok(());
        }
        let gains = allocate_growth(&self.wealth, params.gamma, mu * total)
            .ok_or(Error::DegenerateState { time: self.time })?;
        let scale = 1.0 / (1.0 + mu);
        for (w, g) in self.wealth.iter_mut().zip(&gains) {
            *w = (*w + g) * scale;
        }
        self.add_log_total(mu.ln_1p());
        Ok(())
    }

    /// One unit of time: N exchange micro-steps, then one growth event,
    /// then the clock ticks.
    pub fn advance_unit<R: Rng + ?Sized>(
        &mut self,
        params: &ModelParams,
        rng: &mut R,
    ) -> Result<()> {
        for _ in 0..self.wealth.len() {
            self.exchange_step(params, rng);
        }
        self.growth_step(params)?;
        self.time += 1;
        Ok(())
    }
}

/// Transfer alpha * min(w_i, w_j) from the loser to the winner.
///
/// The loser holds at least the minimum and alpha < 1, so no wealth can go
/// negative; an agent at exactly 0 makes the transfer 0.
pub(crate) fn apply_exchange(wealth: &mut [f64], i: usize, j: usize, i_wins: bool, alpha: f64) {
    let delta = alpha * wealth[i].min(wealth[j]);
    let (winner, loser) = if i_wins { (i, j) } else { (j, i) };
    wealth[winner] += delta;
    wealth[loser] -= delta;
}

/// Split a growth amount over agents in proportion to w^gamma.
///
/// Uses the convention 0^gamma = 0 for every gamma >= 0 (including 0^0), so
/// bankrupt agents never receive growth. Returns `None` when no positive
/// weight exists to form the shares.
pub fn allocate_growth(wealth: &[f64], gamma: f64, total_growth: f64) -> Option<Vec<f64>> {
    if gamma == 0.0 {
        let n_pos = wealth.iter().filter(|w| **w > 0.0).count();
        if n_pos == 0 {
            return None;
        }
        let share = total_growth / n_pos as f64;
        return Some(
            wealth
                .iter()
                .map(|w| if *w > 0.0 { share } else { 0.0 })
                .collect(),
        );
    }
    let weights: Vec<f64> = if gamma == 1.0 {
        wealth.to_vec()
    } else {
        wealth.iter().map(|w| w.powf(gamma)).collect()
    };
    let s: f64 = weights.iter().sum();
    if !(s > 0.0) {
        return None;
    }
    Some(weights.iter().map(|w| total_growth * (w / s)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Domain};
    use rand_chacha::ChaCha8Rng;

    fn params(gamma: f64, mu: f64, alpha: f64, n: usize) -> ModelParams {
        ModelParams {
            gamma,
            mu,
            alpha,
            n_agents: n,
            seed: 7,
        }
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn init_is_equal_distribution() {
        let state = WealthState::new(&params(0.9, 1e-3, 0.1, 4)).unwrap();
        assert_eq!(state.wealth(), &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(state.log_total(), 0.0);
        assert_eq!(state.time(), 0);

        let state = WealthState::new(&params(0.9, 1e-3, 0.1, 2500)).unwrap();
        assert_eq!(state.total(), 2500.0);
        for &w in state.wealth() {
            assert_eq!(w / state.total(), 1.0 / 2500.0);
        }
    }

    #[test]
    fn invalid_params_name_the_field() {
        let cases = [
            (params(-0.1, 1e-3, 0.1, 4), "gamma"),
            (params(f64::NAN, 1e-3, 0.1, 4), "gamma"),
            (params(0.9, -1.0, 0.1, 4), "mu"),
            (params(0.9, 1e-3, 1.0, 4), "alpha"),
            (params(0.9, 1e-3, 1.5, 4), "alpha"),
            (params(0.9, 1e-3, -0.2, 4), "alpha"),
            (params(0.9, 1e-3, 0.1, 1), "n_agents"),
        ];
        for (p, field) in cases {
            let err = WealthState::new(&p).unwrap_err();
            assert_eq!(err.key, field, "params {p:?}");
        }
    }

    #[test]
    fn exchange_moves_fraction_of_poorer_agent() {
        // Poorer agent (index 0) wins: gains alpha * its own wealth.
        let mut w = vec![2.0, 5.0];
        apply_exchange(&mut w, 0, 1, true, 0.1);
        assert!(rel_err(w[0], 2.2) < 1e-15 && rel_err(w[1], 4.8) < 1e-15);

        let mut w = vec![1.0, 1.0];
        apply_exchange(&mut w, 0, 1, true, 0.25);
        assert_eq!(w, vec![1.25, 0.75]);
    }

    #[test]
    fn zero_alpha_exchange_is_identity() {
        let p = params(0.9, 1e-3, 0.0, 8);
        let mut state = WealthState::from_wealth(vec![1.0, 2.0, 3.0, 4.0, 0.5, 0.25, 8.0, 1.0])
            .unwrap();
        let before = state.wealth().to_vec();
        let mut rng = stream_rng(1, Domain::Trajectory, &[0]);
        for _ in 0..1000 {
            state.exchange_step(&p, &mut rng);
        }
        assert_eq!(state.wealth(), &before[..]);
    }

    #[test]
    fn bankrupt_agent_is_inert_under_exchange() {
        let mut w = vec![0.0, 5.0];
        apply_exchange(&mut w, 0, 1, false, 0.9);
        assert_eq!(w, vec![0.0, 5.0]);
        apply_exchange(&mut w, 0, 1, true, 0.9);
        assert_eq!(w, vec![0.0, 5.0]);
    }

    #[test]
    fn growth_gamma0_distributes_equally() {
        // Pre-rescale gains are mu * W / n = 0.1 * 10 / 4 = 0.25 each.
        let p = params(0.0, 0.1, 0.1, 4);
        let mut state = WealthState::from_wealth(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        state.growth_step(&p).unwrap();
        let expect = [1.25, 2.25, 3.25, 4.25].map(|w: f64| w / 1.1);
        for (got, want) in state.wealth().iter().zip(expect) {
            assert!(rel_err(*got, want) < 1e-15, "{got} vs {want}");
        }
        assert_eq!(state.log_total(), 0.1f64.ln_1p());
    }

    #[test]
    fn growth_gamma1_is_identity_on_normalized_wealth() {
        let p = params(1.0, 0.3, 0.1, 5);
        let mut state =
            WealthState::from_wealth(vec![0.5, 1.25, 2.0, 0.25, 1.0]).unwrap();
        let before = state.wealth().to_vec();
        state.growth_step(&p).unwrap();
        assert_eq!(state.wealth(), &before[..]);
        assert_eq!(state.log_total(), 0.3f64.ln_1p());

        // The explicit Eq.-style allocation agrees with the shortcut.
        let gains = allocate_growth(&before, 1.0, 0.3 * 5.0).unwrap();
        for (w, g) in before.iter().zip(&gains) {
            let literal = (w + g) / 1.3;
            assert!(rel_err(literal, *w) < 1e-12);
        }
    }

    #[test]
    fn growth_gamma2_hand_case() {
        // w = (1, 2), W = 3, mu = 0.3: S = 5, growth 0.9, gains (0.18, 0.72).
        let gains = allocate_growth(&[1.0, 2.0], 2.0, 0.9).unwrap();
        assert!(rel_err(gains[0], 0.18) < 1e-15);
        assert!(rel_err(gains[1], 0.72) < 1e-15);
    }

    #[test]
    fn growth_skips_bankrupt_agents_at_every_gamma() {
        for gamma in [0.0, 0.5, 1.3] {
            let gains = allocate_growth(&[0.0, 1.0, 3.0], gamma, 1.0).unwrap();
            assert_eq!(gains[0], 0.0, "gamma = {gamma}");
            assert!((gains.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn growth_on_all_zero_wealth_is_degenerate() {
        assert!(allocate_growth(&[0.0, 0.0], 0.7, 1.0).is_none());
        assert!(allocate_growth(&[0.0, 0.0], 0.0, 1.0).is_none());
    }

    #[test]
    fn advance_unit_with_no_drive_only_ticks_the_clock() {
        let p = params(0.9, 0.0, 0.0, 6);
        let mut state = WealthState::new(&p).unwrap();
        let mut rng = stream_rng(3, Domain::Trajectory, &[0]);
        for _ in 0..50 {
            state.advance_unit(&p, &mut rng).unwrap();
        }
        assert_eq!(state.time(), 50);
        assert_eq!(state.log_total(), 0.0);
        assert_eq!(state.wealth(), &vec![1.0; 6][..]);
    }

    #[test]
    fn log_total_compounds_exactly() {
        let p = params(0.9, 1e-3, 0.1, 16);
        let mut state = WealthState::new(&p).unwrap();
        let mut rng = stream_rng(9, Domain::Trajectory, &[0]);
        for _ in 0..1000 {
            state.advance_unit(&p, &mut rng).unwrap();
        }
        assert_eq!(state.log_total(), 1000.0 * 1e-3f64.ln_1p());
    }

    /// Replay oracle: advance_unit must equal a scalar re-implementation
    /// consuming the identical random stream.
    #[test]
    fn advance_unit_matches_scalar_replay() {
        let p = params(0.7, 0.01, 0.5, 3);
        let mut state = WealthState::new(&p).unwrap();
        let mut rng = stream_rng(123, Domain::Trajectory, &[0]);
        for _ in 0..2 {
            state.advance_unit(&p, &mut rng).unwrap();
        }

        let mut w = vec![1.0f64; 3];
        let mut log_total = 0.0;
        let mut rng: ChaCha8Rng = stream_rng(123, Domain::Trajectory, &[0]);
        for _ in 0..2 {
            for _ in 0..3 {
                let i = rng.gen_range(0..3usize);
                let mut j = rng.gen_range(0..3usize);
                while j == i {
                    j = rng.gen_range(0..3usize);
                }
                let delta = 0.5 * w[i].min(w[j]);
                if rng.gen_bool(0.5) {
                    w[i] += delta;
                    w[j] -= delta;
                } else {
                    w[j] += delta;
                    w[i] -= delta;
                }
            }
            let total: f64 = w.iter().sum();
            let s: f64 = w.iter().map(|x| x.powf(0.7)).sum();
            let growth = 0.01 * total;
            for x in w.iter_mut() {
                let gain = growth * (x.powf(0.7) / s);
                *x = (*x + gain) * (1.0 / 1.01);
            }
            log_total += 0.01f64.ln_1p();
        }

        assert_eq!(state.time(), 2);
        assert_eq!(state.wealth(), &w[..]);
        assert!((state.log_total() - log_total).abs() < 1e-15);
    }

    /// Doubling every initial wealth doubles the whole trajectory bit for
    /// bit when the growth weights scale exactly (gamma = 0 and gamma = 1).
    #[test]
    fn power_of_two_rescaling_is_exact() {
        for gamma in [0.0, 1.0] {
            let p = params(gamma, 0.05, 0.3, 8);
            let w0: Vec<f64> = vec![1.0, 2.0, 0.5, 4.0, 1.5, 0.25, 3.0, 1.0];
            let scaled: Vec<f64> = w0.iter().map(|w| w * 4.0).collect();

            let mut a = WealthState::from_wealth(w0).unwrap();
            let mut b = WealthState::from_wealth(scaled).unwrap();
            let mut rng_a = stream_rng(55, Domain::Trajectory, &[1]);
            let mut rng_b = stream_rng(55, Domain::Trajectory, &[1]);
            for _ in 0..20 {
                a.advance_unit(&p, &mut rng_a).unwrap();
                b.advance_unit(&p, &mut rng_b).unwrap();
            }
            for (x, y) in a.wealth().iter().zip(b.wealth()) {
                assert_eq!(*y, *x * 4.0, "gamma = {gamma}");
            }
            assert_eq!(a.log_total(), b.log_total());
        }
    }

    /// For general gamma the share w^gamma / S is homogeneous but powf does
    /// not commute with scaling at the ulp level; the trajectories agree to
    /// tight relative tolerance instead.
    #[test]
    fn arbitrary_rescaling_tracks_to_1e12() {
        let p = params(0.9, 0.02, 0.25, 8);
        let c = 3.7;
        let w0: Vec<f64> = vec![1.0, 2.0, 0.5, 4.0, 1.5, 0.25, 3.0, 1.0];
        let scaled: Vec<f64> = w0.iter().map(|w| w * c).collect();

        let mut a = WealthState::from_wealth(w0).unwrap();
        let mut b = WealthState::from_wealth(scaled).unwrap();
        let mut rng_a = stream_rng(55, Domain::Trajectory, &[2]);
        let mut rng_b = stream_rng(55, Domain::Trajectory, &[2]);
        for _ in 0..20 {
            a.advance_unit(&p, &mut rng_a).unwrap();
            b.advance_unit(&p, &mut rng_b).unwrap();
        }
        for (x, y) in a.wealth().iter().zip(b.wealth()) {
            assert!(rel_err(*y, *x * c) < 1e-12);
        }
    }

    #[test]
    fn exchange_conserves_and_stays_nonnegative() {
        let p = params(0.9, 1e-3, 0.3, 100);
        let mut state = WealthState::new(&p).unwrap();
        let mut rng = stream_rng(77, Domain::Trajectory, &[0]);
        for _ in 0..100_000 {
            state.exchange_step(&p, &mut rng);
        }
        assert!(rel_err(state.total(), 100.0) < 1e-9);
        assert!(state.wealth().iter().all(|w| *w >= 0.0));
    }
}
