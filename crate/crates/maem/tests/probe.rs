// Temporary diagnostics; not part of the suite.
use maem::engine::ModelParams;
use maem::experiments::run_trajectory;

#[test]
#[ignore]
fn probe_collapse_pairs() {
    let params = ModelParams {
        gamma: 0.9,
        mu: 1e-3,
        alpha: 0.1,
        n_agents: 2500,
        seed: 42,
    };
    let series = run_trajectory(&params, 40_000, 1000, 0.01, 0).unwrap();
    let n = 2500usize;
    let keep = n - 25;
    for e in &series.entries {
        let t2 = 2 * e.t;
        let Some(later) = series.entry_at(t2) else { continue };
        let a = &e.sorted_rescaled;
        let b = &later.sorted_rescaled;
        let mut worst = 0.0f64;
        let mut worst_rank = 0;
        let mut sum = 0.0;
        for r in 0..keep {
            let d = (a[r] / b[r]).ln().abs();
            if d > worst {
                worst = d;
                worst_rank = r;
            }
            sum += d;
        }
        let mut diffs: Vec<f64> = (0..keep).map(|r| (a[r] / b[r]).ln().abs()).collect();
        let over: usize = diffs.iter().filter(|d| **d >= 0.05).count();
        let mid_max = diffs[100..2300]
            .iter()
            .copied()
            .fold(0.0f64, f64::max);
        diffs.sort_by(f64::total_cmp);
        let q = |p: f64| diffs[((keep - 1) as f64 * p) as usize];
        println!(
            "pair ({:>6},{:>6}): max = {:.3}@{:>4} | q50 = {:.3} q90 = {:.3} q99 = {:.3} | >=tol: {:>4} | mid_max = {:.3}, mean = {:.4}",
            e.t, t2, worst, worst_rank, q(0.5), q(0.9), q(0.99), over, mid_max, sum / keep as f64,
        );
    }
}
