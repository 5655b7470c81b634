//! Finite-population and Monte Carlo processes: the Moran birth–death
//! process, sealed-bid War-of-Attrition contests, and the discretization that
//! turns the attrition game into a matrix game for the replicator integrators.
//!
//! Monte Carlo work is split into independent trials, each driven by
//! [`crate::rng::stream_rng`]`(seed, trial)`. Trials may run on any number of
//! rayon threads; outcomes are collected and reduced in trial order, so
//! results are bit-identical regardless of the pool size.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::game::{Matrix, PayoffBimatrix};
use crate::rng::stream_rng;

/// Fixation probability of a single mutant of constant relative fitness `r`
/// in a Moran population of size `n`.
pub fn moran_fixation_analytic(r: f64, n: usize) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(param(format!("relative fitness must be > 0 (got {r})")));
    }
    if n < 2 {
        return Err(param(format!("population size must be >= 2 (got {n})")));
    }
    if (r - 1.0).abs() <= 1e-12 {
        return Ok(1.0 / n as f64);
    }
    Ok((1.0 - 1.0 / r) / (1.0 - r.powi(-(n as i32))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoranConfig {
    pub n: usize,
    /// Weight `w` of game payoff in fitness `1 - w + w·payoff`.
    pub selection_intensity: f64,
    /// Birth–death steps allowed per trial before it counts as unresolved.
    pub max_steps: u64,
    pub trials: u64,
    pub seed: u64,
}

impl MoranConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(param(format!("moran n must be >= 2 (got {})", self.n)));
        }
        if !(0.0..=1.0).contains(&self.selection_intensity) {
            return Err(param(format!(
                "selection intensity {} outside [0, 1]",
                self.selection_intensity
            )));
        }
        if self.trials == 0 {
            return Err(param("moran trials must be >= 1"));
        }
        if self.max_steps == 0 {
            return Err(param("moran max_steps must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixationEstimate {
    /// Fraction of resolved trials in which the mutant fixed.
    pub estimate: f64,
    /// Binomial standard error of `estimate`.
    pub std_error: f64,
    pub fixed: u64,
    pub lost: u64,
    /// Trials that hit `max_steps` without absorption.
    pub unresolved: u64,
    pub trials: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Absorption {
    Fixed,
    Lost,
    Unresolved,
}

/// Per-individual fitness of (mutant, resident) with `i` mutants among `n`.
/// Mutants play strategy 0, residents strategy 1; payoffs average over the
/// other `n - 1` individuals.
fn moran_fitness(a: &Matrix, w: f64, n: usize, i: usize) -> (f64, f64) {
    let others = (n - 1) as f64;
    let (mi, ri) = (i as f64, (n - i) as f64);
    let pi_mut = (a.get(0, 0) * (mi - 1.0) + a.get(0, 1) * ri) / others;
    let pi_res = (a.get(1, 0) * mi + a.get(1, 1) * (ri - 1.0)) / others;
    (1.0 - w + w * pi_mut, 1.0 - w + w * pi_res)
}

/// Monte Carlo estimate of the probability that `initial_mutants` players of
/// strategy 0 take over a population otherwise playing strategy 1.
pub fn moran_simulate(a: &Matrix, cfg: &MoranConfig, initial_mutants: usize) -> Result<FixationEstimate> {
    cfg.validate()?;
    if a.rows() != 2 || a.cols() != 2 {
        return Err(Error::Dimension("moran process needs a 2-strategy game".into()));
    }
    let n = cfg.n;
    if initial_mutants == 0 || initial_mutants >= n {
        return Err(Error::Precondition(format!(
            "initial mutants must be in [1, {}] (got {initial_mutants})",
            n - 1
        )));
    }
    let w = cfg.selection_intensity;
    // Up/down probabilities for every transient state, checked once.
    let mut moves = vec![(0.0, 0.0); n];
    for (i, slot) in moves.iter_mut().enumerate().skip(1) {
        let (fm, fr) = moran_fitness(a, w, n, i);
        if !(fm >= 0.0 && fr >= 0.0) || fm + fr == 0.0 {
            return Err(param(format!(
                "negative fitness with {i} mutants (mutant {fm}, resident {fr}); lower selection intensity"
            )));
        }
        let (mi, ri) = (i as f64, (n - i) as f64);
        let total = mi * fm + ri * fr;
        let up = mi * fm / total * ri / n as f64;
        let down = ri * fr / total * mi / n as f64;
        *slot = (up, down);
    }

    let outcomes: Vec<Absorption> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(cfg.seed, trial);
            let mut i = initial_mutants;
            for _ in 0..cfg.max_steps {
                let (up, down) = moves[i];
                let u: f64 = rng.random();
                if u < up {
                    i += 1;
                } else if u < up + down {
                    i -= 1;
                }
                if i == n {
                    return Absorption::Fixed;
                }
                if i == 0 {
                    return Absorption::Lost;
                }
            }
            Absorption::Unresolved
        })
        .collect();

    let count = |k| outcomes.iter().filter(|&&o| o == k).count() as u64;
    let (fixed, lost, unresolved) = (count(Absorption::Fixed), count(Absorption::Lost), count(Absorption::Unresolved));
    let resolved = fixed + lost;
    let (estimate, std_error) = if resolved == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let p = fixed as f64 / resolved as f64;
        (p, (p * (1.0 - p) / resolved as f64).sqrt())
    };
    Ok(FixationEstimate { estimate, std_error, fixed, lost, unresolved, trials: cfg.trials })
}

/// How a contestant chooses its persistence time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PersistenceStrategy {
    /// Always persist exactly this long.
    Pure(f64),
    /// Exponentially distributed persistence with this hazard rate.
    Exponential(f64),
}

impl PersistenceStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PersistenceStrategy::Pure(m) if !(m >= 0.0 && m.is_finite()) => {
                Err(param(format!("pure persistence time must be >= 0 (got {m})")))
            }
            PersistenceStrategy::Exponential(rate) if !(rate > 0.0 && rate.is_finite()) => {
                Err(param(format!("exponential persistence rate must be > 0 (got {rate})")))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            PersistenceStrategy::Pure(m) => m,
            PersistenceStrategy::Exponential(rate) => 1.0 / rate,
        }
    }
}

pub fn sample_persistence<R: Rng + ?Sized>(s: &PersistenceStrategy, rng: &mut R) -> f64 {
    match *s {
        PersistenceStrategy::Pure(m) => m,
        PersistenceStrategy::Exponential(rate) => {
            // random() is in [0, 1); 1 - u lies in (0, 1].
            let u = 1.0 - rng.random::<f64>();
            -u.ln() / rate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Contestant {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContestOutcome {
    pub winner: Contestant,
    pub duration: f64,
    pub payoff_a: f64,
    pub payoff_b: f64,
}

/// One sealed-draw contest for a resource worth `v`.
///
/// Both persistence times are drawn up front (A first). The contest lasts
/// until the first withdrawal; everyone pays their own cost rate for that
/// long and the remaining player collects `v`. Exact ties are settled by a
/// fair coin drawn after the persistence times.
pub fn run_contest<R: Rng + ?Sized>(
    sa: &PersistenceStrategy,
    sb: &PersistenceStrategy,
    v: f64,
    c_a: f64,
    c_b: f64,
    rng: &mut R,
) -> ContestOutcome {
    let ta = sample_persistence(sa, rng);
    let tb = sample_persistence(sb, rng);
    let duration = ta.min(tb);
    let winner = if ta > tb {
        Contestant::A
    } else if tb > ta {
        Contestant::B
    } else if rng.random::<bool>() {
        Contestant::A
    } else {
        Contestant::B
    };
    let prize = |who| if winner == who { v } else { 0.0 };
    ContestOutcome {
        winner,
        duration,
        payoff_a: prize(Contestant::A) - c_a * duration,
        payoff_b: prize(Contestant::B) - c_b * duration,
    }
}

/// Runs `trials` independent contests; outcome `k` uses stream `k` of `seed`.
pub fn simulate_contests(
    sa: &PersistenceStrategy,
    sb: &PersistenceStrategy,
    v: f64,
    c_a: f64,
    c_b: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<ContestOutcome>> {
    sa.validate()?;
    sb.validate()?;
    for (name, x) in [("v", v), ("c_a", c_a), ("c_b", c_b)] {
        if !(x > 0.0 && x.is_finite()) {
            return Err(param(format!("contest needs {name} > 0 (got {x})")));
        }
    }
    Ok((0..trials)
        .into_par_iter()
        .map(|k| run_contest(sa, sb, v, c_a, c_b, &mut stream_rng(seed, k)))
        .collect())
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Persistence times `t_i = i·t_max/(bins - 1)`.
pub fn persistence_grid(bins: usize, t_max: f64) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::Precondition(format!("attrition discretization needs bins >= 2 (got {bins})")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(param(format!("t_max must be > 0 (got {t_max})")));
    }
    Ok((0..bins).map(|i| i as f64 * t_max / (bins - 1) as f64).collect())
}

/// Row payoffs of the discretized contest where the row player pays `c`.
fn attrition_rows(v: f64, c: f64, t: &[f64]) -> Matrix {
    Matrix::from_fn(t.len(), t.len(), |i, j| {
        if t[i] > t[j] {
            v - c * t[j]
        } else if t[i] < t[j] {
            -c * t[i]
        } else {
            v / 2.0 - c * t[i]
        }
    })
}

fn check_attrition(v: f64, c: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(param(format!("war of attrition needs v > 0 (got {v})")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(param(format!("war of attrition needs c > 0 (got {c})")));
    }
    Ok(())
}

fn grid_labels(t: &[f64]) -> Vec<String> {
    t.iter().map(|x| format!("t={x}")).collect()
}

/// Symmetric matrix game over `bins` pure persistence times in `[0, t_max]`.
pub fn discretize_attrition(v: f64, c: f64, bins: usize, t_max: f64) -> Result<PayoffBimatrix> {
    check_attrition(v, c)?;
    let t = persistence_grid(bins, t_max)?;
    PayoffBimatrix::symmetric(attrition_rows(v, c, &t), grid_labels(&t))
}

/// Two-population version with separate cost rates for the row and column
/// populations.
pub fn discretize_attrition_asymmetric(v: f64, c_row: f64, c_col: f64, bins: usize, t_max: f64) -> Result<PayoffBimatrix> {
    check_attrition(v, c_row)?;
    check_attrition(v, c_col)?;
    let t = persistence_grid(bins, t_max)?;
    let a = attrition_rows(v, c_row, &t);
    let b = attrition_rows(v, c_col, &t).transpose();
    PayoffBimatrix::new(a, b, grid_labels(&t))
}
