//! Nash equilibria and evolutionarily stable strategies for the focal games.

use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::game::{HawkDoveParams, Matrix, MixedStrategy, PayoffBimatrix};

/// Mixed ESS of Hawk-Dove over (Hawk, Dove): `v/c` hawks when `v < c`,
/// otherwise pure Hawk.
pub fn hawk_dove_ess(params: HawkDoveParams) -> Result<MixedStrategy> {
    params.validate()?;
    let HawkDoveParams { v, c } = params;
    if v < c {
        MixedStrategy::binary(v / c)
    } else {
        Ok(MixedStrategy::pure(2, 0))
    }
}

/// How much of the ESS definition an [`EssReport`] actually checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EssScope {
    /// Pure mutants plus the second-order condition; sufficient for 2×2 games.
    Complete,
    /// Larger games: only pure mutants were tested.
    PureMutantOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssReport {
    pub candidate: MixedStrategy,
    pub is_nash: bool,
    pub is_ess: bool,
    /// True when every pure mutant other than the candidate itself earns
    /// strictly less against the candidate.
    pub strict: bool,
    /// Largest `f(e_i, x) - f(x, x)` over the tested mutants.
    pub worst_violation: f64,
    pub tested_mutants: usize,
    pub scope: EssScope,
}

/// Checks `candidate` against every pure mutant of the symmetric game `a`.
///
/// Nash: `f(e_i, x) <= f(x, x) + tol` for all `i`. For mutants that tie
/// within `tol`, stability additionally needs `f(x, e_i) > f(e_i, e_i) - tol`.
pub fn is_ess(a: &Matrix, candidate: &MixedStrategy, tol: f64) -> Result<EssReport> {
    if !a.is_square() || a.rows() != candidate.len() {
        return Err(Error::Dimension(format!(
            "{}-strategy candidate against a {}x{} game",
            candidate.len(),
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let x = candidate.probs();
    let ax = a.mul_vec(x)?;
    let incumbent = candidate.mean_of(&ax);

    let mut worst = f64::NEG_INFINITY;
    let mut is_nash = true;
    let mut second_order = true;
    let mut strict = true;
    for i in 0..n {
        let advantage = ax[i] - incumbent;
        worst = worst.max(advantage);
        if advantage > tol {
            is_nash = false;
        } else if advantage >= -tol {
            let is_candidate = x[i] == 1.0;
            if !is_candidate {
                strict = false;
            }
            // f(x, e_i) is column i of a weighted by x.
            let against_mutant: f64 = (0..n).map(|k| x[k] * a.get(k, i)).sum();
            if against_mutant.is_nan() || against_mutant <= a.get(i, i) - tol {
                second_order = false;
            }
        }
    }
    Ok(EssReport {
        candidate: candidate.clone(),
        is_nash,
        is_ess: is_nash && second_order,
        strict: is_nash && strict,
        worst_violation: worst,
        tested_mutants: n,
        scope: if n <= 2 { EssScope::Complete } else { EssScope::PureMutantOnly },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumProfile {
    pub kind: ProfileKind,
    pub row: MixedStrategy,
    pub col: MixedStrategy,
    pub payoffs: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibria2x2 {
    pub profiles: Vec<EquilibriumProfile>,
    /// Some pure strategy has two pure best replies, so equilibria may form
    /// a continuum that is not listed.
    pub degenerate: bool,
}

/// Enumerates the equilibria of a 2×2 bimatrix game.
pub fn solve_2x2(game: &PayoffBimatrix) -> Result<Equilibria2x2> {
    let (a, b) = (&game.a, &game.b);
    if a.rows() != 2 || a.cols() != 2 || b.rows() != 2 || b.cols() != 2 {
        return Err(Error::Dimension("solve_2x2 needs a 2x2 game".into()));
    }
    let mut profiles = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            let row_best = a.get(i, j) >= a.get(1 - i, j);
            let col_best = b.get(i, j) >= b.get(i, 1 - j);
            if row_best && col_best {
                profiles.push(EquilibriumProfile {
                    kind: ProfileKind::Pure,
                    row: MixedStrategy::pure(2, i),
                    col: MixedStrategy::pure(2, j),
                    payoffs: (a.get(i, j), b.get(i, j)),
                });
            }
        }
    }

    let degenerate = (0..2).any(|j| a.get(0, j) == a.get(1, j)) || (0..2).any(|i| b.get(i, 0) == b.get(i, 1));

    // Row mix p makes the column player indifferent, column mix q the row player.
    let den_p = b.get(0, 0) - b.get(1, 0) - b.get(0, 1) + b.get(1, 1);
    let den_q = a.get(0, 0) - a.get(0, 1) - a.get(1, 0) + a.get(1, 1);
    if den_p != 0.0 && den_q != 0.0 {
        let p = (b.get(1, 1) - b.get(1, 0)) / den_p;
        let q = (a.get(1, 1) - a.get(0, 1)) / den_q;
        if p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0 {
            let row = MixedStrategy::binary(p)?;
            let col = MixedStrategy::binary(q)?;
            let payoffs = crate::game::expected_payoff(game, &row, &col)?;
            profiles.push(EquilibriumProfile { kind: ProfileKind::Mixed, row, col, payoffs });
        }
    }
    Ok(Equilibria2x2 { profiles, degenerate })
}

/// Exponential persistence-time law of the symmetric War-of-Attrition ESS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttritionEss {
    /// Withdrawal hazard `c / v` per unit time.
    pub rate: f64,
    /// Mean persistence `v / c`.
    pub mean: f64,
}

impl AttritionEss {
    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            self.rate * (-self.rate * t).exp()
        }
    }

    pub fn survival(&self, t: f64) -> f64 {
        if t < 0.0 {
            1.0
        } else {
            (-self.rate * t).exp()
        }
    }
}

fn check_value_cost(v: f64, c: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(param(format!("war of attrition needs v > 0 (got {v})")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(param(format!("war of attrition needs c > 0 (got {c})")));
    }
    Ok(())
}

pub fn attrition_ess(v: f64, c: f64) -> Result<AttritionEss> {
    check_value_cost(v, c)?;
    let rate = c / v;
    Ok(AttritionEss { rate, mean: 1.0 / rate })
}

/// Expected payoff of persisting exactly `m` against an opponent drawing
/// from the ESS law:
///
/// `v·P(T < m) - c·E[T; T < m] - c·m·P(T >= m)`.
///
/// At the ESS this equals zero for every `m`.
pub fn attrition_pure_payoff(m: f64, ess: &AttritionEss, v: f64, c: f64) -> Result<f64> {
    check_value_cost(v, c)?;
    if !(m >= 0.0 && m.is_finite()) {
        return Err(param(format!("persistence time must be >= 0 (got {m})")));
    }
    let expected = c / v;
    if (ess.rate - expected).abs() > 1e-12 * expected.max(1.0) {
        return Err(param(format!("ESS rate {} inconsistent with c/v = {expected}", ess.rate)));
    }
    let lambda = ess.rate;
    let survive = (-lambda * m).exp();
    let win_value = v * (1.0 - survive);
    // c · E[T; T < m] = c·(1 - e^{-λm})/λ - c·m·e^{-λm}, with c/λ = v.
    let cost_when_winning = v * (1.0 - survive) - c * m * survive;
    let cost_when_losing = c * m * survive;
    Ok(win_value - cost_when_winning - cost_when_losing)
}
