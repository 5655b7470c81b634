//! Checks against independent computations: fine-step integration, direct
//! enumeration and Monte Carlo confirmation of closed forms.

use egt_core::dynamics::{integrate_bimatrix, integrate_replicator, IntegratorConfig};
use egt_core::equilibria::attrition_ess;
use egt_core::game::{make_hawk_dove, HawkDoveParams, IpdStageParams};
use egt_core::rng::seeded;
use egt_core::stochastic::{
    discretize_attrition, mean_and_se, moran_fixation_analytic, moran_simulate, persistence_grid, simulate_contests,
    MoranConfig, PersistenceStrategy,
};
use egt_core::strategies::{make_zd_extortion, stationary_payoffs, MemoryOneStrategy};
use egt_core::tournament::{round_robin, Entrant, MatchConfig};
use egt_core::{Matrix, MixedStrategy};
use rand::Rng;

/// Hawk share of a two-strategy symmetric game, integrated with explicit
/// Euler at a tiny step on the reduced one-dimensional equation
/// `dp/dt = p(1 - p)·((a·x)_0 - (a·x)_1)`.
fn fine_euler(a: &Matrix, p0: f64, t_end: f64) -> f64 {
    let dt = 1e-4;
    let mut p = p0;
    for _ in 0..(t_end / dt) as usize {
        let f0 = a.get(0, 0) * p + a.get(0, 1) * (1.0 - p);
        let f1 = a.get(1, 0) * p + a.get(1, 1) * (1.0 - p);
        p += dt * p * (1.0 - p) * (f0 - f1);
    }
    p
}

#[test]
fn hawk_dove_matches_fine_step_oracle() {
    for (v, c) in [(2.0, 4.0), (1.0, 3.0), (3.0, 4.0)] {
        let a = make_hawk_dove(HawkDoveParams { v, c }).unwrap().a;
        let oracle = fine_euler(&a, 0.9, 200.0);
        assert!((oracle - v / c).abs() < 1e-6);
        let tr = integrate_replicator(&a, &MixedStrategy::binary(0.9).unwrap(), &IntegratorConfig::default()).unwrap();
        assert!((tr.final_x().probs()[0] - oracle).abs() < 1e-6);

        // Mid-trajectory agreement, before convergence.
        let short = IntegratorConfig::with_horizon(3.0);
        let tr = integrate_replicator(&a, &MixedStrategy::binary(0.9).unwrap(), &short).unwrap();
        assert!((tr.final_x().probs()[0] - fine_euler(&a, 0.9, 3.0)).abs() < 1e-4);
    }
}

#[test]
fn two_population_matches_fine_step_oracle() {
    let a = make_hawk_dove(HawkDoveParams { v: 2.0, c: 4.0 }).unwrap().a;
    let (mut x, mut y) = (0.6, 0.4);
    let dt = 1e-4;
    for _ in 0..(10.0 / dt) as usize {
        let gx = (a.get(0, 0) - a.get(1, 0)) * y + (a.get(0, 1) - a.get(1, 1)) * (1.0 - y);
        let gy = (a.get(0, 0) - a.get(1, 0)) * x + (a.get(0, 1) - a.get(1, 1)) * (1.0 - x);
        let (nx, ny) = (x + dt * x * (1.0 - x) * gx, y + dt * y * (1.0 - y) * gy);
        x = nx;
        y = ny;
    }
    let cfg = IntegratorConfig::with_horizon(10.0);
    let tr = integrate_bimatrix(&a, &a.transpose(), &MixedStrategy::binary(0.6).unwrap(), &MixedStrategy::binary(0.4).unwrap(), &cfg)
        .unwrap();
    assert!((tr.final_x().probs()[0] - x).abs() < 1e-4);
    assert!((tr.final_y().unwrap().probs()[0] - y).abs() < 1e-4);
}

#[test]
fn zd_extortion_against_random_opponents() {
    let stage = IpdStageParams::default();
    let zd = make_zd_extortion(2.0, 0.1, stage).unwrap();
    let mut rng = seeded(2024);
    for _ in 0..25 {
        let mut p = || rng.random_range(0.05..0.95);
        let opp = MemoryOneStrategy::new(p(), p(), p(), p(), p()).unwrap();
        let (sx, sy) = stationary_payoffs(&zd, &opp, stage, 0.0).unwrap();
        assert!(((sx - stage.p) - 2.0 * (sy - stage.p)).abs() <= 1e-8);
    }
}

/// Brute-force oracle: long simulated play converges to the stationary
/// payoffs of the joint-outcome chain.
#[test]
fn stationary_payoffs_match_long_simulation() {
    use egt_core::strategies::Strategy;
    use egt_core::tournament::play_match;
    let stage = IpdStageParams::default();
    let px = MemoryOneStrategy::new(0.9, 0.2, 0.7, 0.4, 1.0).unwrap();
    let py = MemoryOneStrategy::new(0.6, 0.3, 0.8, 0.1, 0.0).unwrap();
    let (sx, sy) = stationary_payoffs(&px, &py, stage, 0.02).unwrap();
    let rounds = 400_000;
    let r = play_match(&Strategy::from(px), &Strategy::from(py), &MatchConfig { rounds, noise: 0.02, seed: 5 }, stage).unwrap();
    assert!((r.score1 / rounds as f64 - sx).abs() < 0.02, "{} vs {sx}", r.score1 / rounds as f64);
    assert!((r.score2 / rounds as f64 - sy).abs() < 0.02);
}

#[test]
fn neutral_moran_sizes() {
    let a = Matrix::from_rows(vec![vec![0.3, -2.0], vec![4.0, 1.0]]).unwrap();
    for n in [2, 5, 10] {
        let cfg = MoranConfig { n, selection_intensity: 0.0, max_steps: 1_000_000, trials: 100_000, seed: n as u64 };
        let est = moran_simulate(&a, &cfg, 1).unwrap();
        let want = moran_fixation_analytic(1.0, n).unwrap();
        assert!((est.estimate - want).abs() < 3.0 * est.std_error, "n={n}: {} vs {want}", est.estimate);
    }
}

#[test]
fn attrition_monte_carlo_indifference() {
    let (v, c) = (2.0, 1.0);
    let ess = PersistenceStrategy::Exponential(attrition_ess(v, c).unwrap().rate);
    for m in [0.5, 1.0, 5.0] {
        let out = simulate_contests(&ess, &PersistenceStrategy::Pure(m), v, c, c, 200_000, 77).unwrap();
        let (mean, se) = mean_and_se(out.iter().map(|o| o.payoff_b));
        assert!(mean.abs() < 4.0 * se, "m={m}: {mean} ± {se}");
    }
}

#[test]
fn attrition_discretization_echoes_exponential_mean() {
    let g = discretize_attrition(2.0, 1.0, 21, 10.0).unwrap();
    let grid = persistence_grid(21, 10.0).unwrap();
    let tr = integrate_replicator(&g.a, &MixedStrategy::uniform(21), &IntegratorConfig::default()).unwrap();
    let mean = tr.final_x().mean_of(&grid);
    assert!((mean - 2.0).abs() <= 0.15 * 2.0, "{mean}");
}

#[test]
fn results_independent_of_thread_count() {
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let a = Matrix::from_rows(vec![vec![2.0, 2.0], vec![1.0, 1.0]]).unwrap();
    let cfg = MoranConfig { n: 10, selection_intensity: 1.0, max_steps: 100_000, trials: 20_000, seed: 9 };
    let one = pool(1).install(|| moran_simulate(&a, &cfg, 1).unwrap());
    let many = pool(4).install(|| moran_simulate(&a, &cfg, 1).unwrap());
    assert_eq!(one.fixed, many.fixed);
    assert_eq!(one.estimate.to_bits(), many.estimate.to_bits());

    let ess = PersistenceStrategy::Exponential(0.5);
    let c1 = pool(1).install(|| simulate_contests(&ess, &ess, 2.0, 1.0, 1.0, 5_000, 3).unwrap());
    let c4 = pool(4).install(|| simulate_contests(&ess, &ess, 2.0, 1.0, 1.0, 5_000, 3).unwrap());
    assert_eq!(c1, c4);

    use egt_core::strategies::NamedStrategy::*;
    let roster = vec![
        Entrant::new("tft", TitForTat),
        Entrant::new("rnd", Random(0.5)),
        Entrant::new("wsls", WinStayLoseShift),
        Entrant::new("grim", Grim),
    ];
    let mc = MatchConfig { rounds: 50, noise: 0.05, seed: 11 };
    let t1 = pool(1).install(|| round_robin(&roster, &mc, IpdStageParams::default()).unwrap());
    let t4 = pool(4).install(|| round_robin(&roster, &mc, IpdStageParams::default()).unwrap());
    assert_eq!(t1, t4);
}
