//! Iterated Prisoner's Dilemma strategies.
//!
//! Named automata (Tit-for-Tat, Grim, ...) and stochastic memory-one
//! strategies share one interface, [`Strategy::next_move`]. Memory-one pairs
//! can also be analysed exactly: the joint outcome of consecutive rounds is a
//! four-state Markov chain over `CC, CD, DC, DD` (own move first), and
//! [`stationary_payoffs`] returns long-run per-round payoffs from its
//! stationary distribution.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::game::IpdStageParams;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Move {
    C,
    D,
}

impl Move {
    pub fn is_coop(self) -> bool {
        self == Move::C
    }

    pub fn flipped(self) -> Move {
        match self {
            Move::C => Move::D,
            Move::D => Move::C,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Move::C => 'C',
            Move::D => 'D',
        }
    }
}

/// History of one side of a match.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchState {
    own: Vec<Move>,
    opponent: Vec<Move>,
}

impl MatchState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a state from both histories; they must have equal length.
    pub fn from_histories(own: Vec<Move>, opponent: Vec<Move>) -> Result<Self> {
        if own.len() != opponent.len() {
            return Err(Error::Dimension(format!(
                "histories differ in length ({} vs {})",
                own.len(),
                opponent.len()
            )));
        }
        Ok(MatchState { own, opponent })
    }

    pub fn push(&mut self, own: Move, opponent: Move) {
        self.own.push(own);
        self.opponent.push(opponent);
    }

    pub fn round_index(&self) -> usize {
        self.own.len()
    }

    pub fn own_history(&self) -> &[Move] {
        &self.own
    }

    pub fn opponent_history(&self) -> &[Move] {
        &self.opponent
    }

    /// Previous joint outcome, own move first.
    pub fn last(&self) -> Option<(Move, Move)> {
        Some((*self.own.last()?, *self.opponent.last()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NamedStrategy {
    AllC,
    AllD,
    TitForTat,
    Grim,
    WinStayLoseShift,
    /// Cooperates with probability `p` every round.
    Random(f64),
}

impl NamedStrategy {
    pub fn random(p: f64) -> Result<Self> {
        let s = NamedStrategy::Random(p);
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NamedStrategy::Random(p) if !(0.0..=1.0).contains(&p) => {
                Err(param(format!("random strategy probability {p} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }

    fn next_move<R: Rng + ?Sized>(&self, state: &MatchState, rng: &mut R) -> Move {
        match *self {
            NamedStrategy::AllC => Move::C,
            NamedStrategy::AllD => Move::D,
            NamedStrategy::TitForTat => state.last().map_or(Move::C, |(_, opp)| opp),
            NamedStrategy::Grim => {
                if state.opponent_history().contains(&Move::D) {
                    Move::D
                } else {
                    Move::C
                }
            }
            // A win is a stage payoff of t or r, which happens exactly when
            // the opponent cooperated.
            NamedStrategy::WinStayLoseShift => match state.last() {
                None => Move::C,
                Some((own, Move::C)) => own,
                Some((own, Move::D)) => own.flipped(),
            },
            NamedStrategy::Random(p) => draw(p, rng),
        }
    }
}

impl fmt::Display for NamedStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedStrategy::AllC => write!(f, "allc"),
            NamedStrategy::AllD => write!(f, "alld"),
            NamedStrategy::TitForTat => write!(f, "tft"),
            NamedStrategy::Grim => write!(f, "grim"),
            NamedStrategy::WinStayLoseShift => write!(f, "wsls"),
            NamedStrategy::Random(p) => write!(f, "random:p={p}"),
        }
    }
}

fn draw<R: Rng + ?Sized>(p_coop: f64, rng: &mut R) -> Move {
    if rng.random::<f64>() < p_coop {
        Move::C
    } else {
        Move::D
    }
}

/// Cooperation probabilities conditioned on the previous joint outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryOneStrategy {
    pub p_cc: f64,
    pub p_cd: f64,
    pub p_dc: f64,
    pub p_dd: f64,
    pub initial_coop: f64,
}

impl MemoryOneStrategy {
    pub fn new(p_cc: f64, p_cd: f64, p_dc: f64, p_dd: f64, initial_coop: f64) -> Result<Self> {
        let s = MemoryOneStrategy { p_cc, p_cd, p_dc, p_dd, initial_coop };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in self.fields() {
            if !(0.0..=1.0).contains(&p) {
                return Err(param(format!("memory-one {name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    fn fields(&self) -> [(&'static str, f64); 5] {
        [
            ("p_cc", self.p_cc),
            ("p_cd", self.p_cd),
            ("p_dc", self.p_dc),
            ("p_dd", self.p_dd),
            ("initial_coop", self.initial_coop),
        ]
    }

    /// Conditional cooperation probabilities in `CC, CD, DC, DD` order.
    pub fn as_array(&self) -> [f64; 4] {
        [self.p_cc, self.p_cd, self.p_dc, self.p_dd]
    }

    /// Cooperation probability after `last` (own move first), or the
    /// opening probability when there is no history.
    pub fn coop_probability(&self, last: Option<(Move, Move)>) -> f64 {
        match last {
            None => self.initial_coop,
            Some(outcome) => self.as_array()[outcome_index(outcome)],
        }
    }
}

impl fmt::Display for MemoryOneStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "m1:{},{},{},{};{}",
            self.p_cc, self.p_cd, self.p_dc, self.p_dd, self.initial_coop
        )
    }
}

/// Index of a joint outcome in `CC, CD, DC, DD` order.
pub fn outcome_index((own, opp): (Move, Move)) -> usize {
    2 * usize::from(own == Move::D) + usize::from(opp == Move::D)
}

/// Any playable IPD strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Strategy {
    Named(NamedStrategy),
    MemoryOne(MemoryOneStrategy),
}

impl From<NamedStrategy> for Strategy {
    fn from(s: NamedStrategy) -> Self {
        Strategy::Named(s)
    }
}

impl From<MemoryOneStrategy> for Strategy {
    fn from(s: MemoryOneStrategy) -> Self {
        Strategy::MemoryOne(s)
    }
}

impl Strategy {
    /// Chooses the next move. Deterministic strategies never touch `rng`;
    /// stochastic ones draw exactly one uniform variate per call.
    pub fn next_move<R: Rng + ?Sized>(&self, state: &MatchState, rng: &mut R) -> Move {
        match self {
            Strategy::Named(s) => s.next_move(state, rng),
            Strategy::MemoryOne(s) => draw(s.coop_probability(state.last()), rng),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Strategy::Named(s) => s.validate(),
            Strategy::MemoryOne(s) => s.validate(),
        }
    }

    /// Memory-one form when one exists.
    pub fn memory_one(&self) -> Result<MemoryOneStrategy> {
        match self {
            Strategy::Named(s) => as_memory_one(*s),
            Strategy::MemoryOne(s) => Ok(*s),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Named(s) => s.fmt(f),
            Strategy::MemoryOne(s) => s.fmt(f),
        }
    }
}

/// Memory-one representation of a named automaton. Grim needs the whole
/// history and is rejected.
pub fn as_memory_one(strategy: NamedStrategy) -> Result<MemoryOneStrategy> {
    let m = |cc, cd, dc, dd, init| MemoryOneStrategy { p_cc: cc, p_cd: cd, p_dc: dc, p_dd: dd, initial_coop: init };
    match strategy {
        NamedStrategy::AllC => Ok(m(1.0, 1.0, 1.0, 1.0, 1.0)),
        NamedStrategy::AllD => Ok(m(0.0, 0.0, 0.0, 0.0, 0.0)),
        NamedStrategy::TitForTat => Ok(m(1.0, 0.0, 1.0, 0.0, 1.0)),
        NamedStrategy::WinStayLoseShift => Ok(m(1.0, 0.0, 0.0, 1.0, 1.0)),
        NamedStrategy::Random(p) => {
            strategy.validate()?;
            Ok(m(p, p, p, p, p))
        }
        NamedStrategy::Grim => Err(Error::NotMemoryOne(strategy.to_string())),
    }
}

/// Extortionate zero-determinant strategy enforcing
/// `s_X - p = chi · (s_Y - p)` against any opponent.
///
/// The opening move is cooperation; it has no effect on stationary payoffs.
pub fn make_zd_extortion(chi: f64, phi: f64, stage: IpdStageParams) -> Result<MemoryOneStrategy> {
    stage.validate()?;
    if !(chi > 1.0 && chi.is_finite()) {
        return Err(param(format!("zero-determinant extortion needs chi > 1 (got {chi})")));
    }
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(param(format!("zero-determinant extortion needs phi > 0 (got {phi})")));
    }
    let IpdStageParams { t, r, p, s } = stage;
    let probs = [
        ("p_cc", 1.0 + phi * (1.0 - chi) * (r - p)),
        ("p_cd", 1.0 + phi * ((s - p) - chi * (t - p))),
        ("p_dc", phi * ((t - p) - chi * (s - p))),
        ("p_dd", 0.0),
    ];
    for (name, value) in probs {
        if !(0.0..=1.0).contains(&value) {
            return Err(param(format!(
                "infeasible zero-determinant parameters chi={chi}, phi={phi}: {name} = {value} outside [0, 1]"
            )));
        }
    }
    Ok(MemoryOneStrategy {
        p_cc: probs[0].1,
        p_cd: probs[1].1,
        p_dc: probs[2].1,
        p_dd: probs[3].1,
        initial_coop: 1.0,
    })
}

fn with_noise(p: f64, noise: f64) -> f64 {
    p * (1.0 - noise) + (1.0 - p) * noise
}

/// Transition matrix of the joint-outcome chain, rows summing to one.
/// States are `CC, CD, DC, DD` from `px`'s point of view; each chosen move
/// is flipped with probability `noise`.
pub fn transition_matrix(px: &MemoryOneStrategy, py: &MemoryOneStrategy, noise: f64) -> [[f64; 4]; 4] {
    let qx = px.as_array();
    // The opponent sees CD as DC and vice versa.
    let qy = {
        let a = py.as_array();
        [a[0], a[2], a[1], a[3]]
    };
    let mut m = [[0.0; 4]; 4];
    for (state, row) in m.iter_mut().enumerate() {
        let cx = with_noise(qx[state], noise);
        let cy = with_noise(qy[state], noise);
        row[0] = cx * cy;
        row[1] = cx * (1.0 - cy);
        row[2] = (1.0 - cx) * cy;
        row[3] = (1.0 - cx) * (1.0 - cy);
    }
    m
}

fn is_irreducible(m: &[[f64; 4]; 4]) -> bool {
    (0..4).all(|start| {
        let mut seen = [false; 4];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(s) = stack.pop() {
            for next in 0..4 {
                if m[s][next] > 0.0 && !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        seen.iter().all(|&v| v)
    })
}

/// Stationary distribution over `CC, CD, DC, DD`, by direct linear solve.
pub fn stationary_distribution(px: &MemoryOneStrategy, py: &MemoryOneStrategy, noise: f64) -> Result<[f64; 4]> {
    px.validate()?;
    py.validate()?;
    if !(0.0..0.5).contains(&noise) {
        return Err(param(format!("noise {noise} outside [0, 0.5)")));
    }
    let m = transition_matrix(px, py, noise);
    if !is_irreducible(&m) {
        return Err(Error::NonErgodic(format!("{px} vs {py} at noise {noise}")));
    }
    // (Mᵀ - I) π = 0 with the last equation replaced by Σπ = 1.
    let mut system: Vec<Vec<f64>> = (0..4)
        .map(|i| (0..4).map(|j| m[j][i] - if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    system[3] = vec![1.0; 4];
    let pi = linalg::solve(system, vec![0.0, 0.0, 0.0, 1.0])
        .ok_or_else(|| Error::NonErgodic("singular stationary system".into()))?;
    Ok([pi[0], pi[1], pi[2], pi[3]])
}

/// Long-run per-round payoffs `(s_X, s_Y)` of two memory-one strategies.
pub fn stationary_payoffs(
    px: &MemoryOneStrategy,
    py: &MemoryOneStrategy,
    stage: IpdStageParams,
    noise: f64,
) -> Result<(f64, f64)> {
    stage.validate()?;
    let pi = stationary_distribution(px, py, noise)?;
    let IpdStageParams { t, r, p, s } = stage;
    let sx = [r, s, t, p];
    let sy = [r, t, s, p];
    let dot = |v: &[f64; 4]| pi.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    Ok((dot(&sx), dot(&sy)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    const ALL_NAMED: [NamedStrategy; 5] = [
        NamedStrategy::AllC,
        NamedStrategy::AllD,
        NamedStrategy::TitForTat,
        NamedStrategy::WinStayLoseShift,
        NamedStrategy::Random(0.3),
    ];

    fn state(pairs: &[(Move, Move)]) -> MatchState {
        let mut s = MatchState::new();
        for &(a, b) in pairs {
            s.push(a, b);
        }
        s
    }

    #[test]
    fn named_moves() {
        let mut rng = seeded(1);
        let tft = Strategy::from(NamedStrategy::TitForTat);
        assert_eq!(tft.next_move(&state(&[(Move::C, Move::D)]), &mut rng), Move::D);
        assert_eq!(tft.next_move(&MatchState::new(), &mut rng), Move::C);

        let grim = Strategy::from(NamedStrategy::Grim);
        let h = state(&[(Move::C, Move::C), (Move::C, Move::D), (Move::D, Move::C), (Move::D, Move::C)]);
        assert_eq!(grim.next_move(&h, &mut rng), Move::D);
        assert_eq!(grim.next_move(&state(&[(Move::C, Move::C)]), &mut rng), Move::C);

        let zero_cd = Strategy::from(MemoryOneStrategy::new(1.0, 0.0, 1.0, 1.0, 1.0).unwrap());
        for _ in 0..50 {
            assert_eq!(zero_cd.next_move(&state(&[(Move::C, Move::D)]), &mut rng), Move::D);
        }
    }

    #[test]
    fn deterministic_strategies_ignore_rng() {
        use rand::RngCore;
        for s in [NamedStrategy::AllC, NamedStrategy::AllD, NamedStrategy::TitForTat, NamedStrategy::Grim] {
            let mut a = seeded(5);
            let mut b = seeded(5);
            Strategy::from(s).next_move(&state(&[(Move::C, Move::D)]), &mut a);
            assert_eq!(a.next_u64(), b.next_u64());
        }
        // stochastic: exactly one draw
        let mut a = seeded(5);
        let mut b = seeded(5);
        Strategy::from(NamedStrategy::Random(0.5)).next_move(&MatchState::new(), &mut a);
        let _: f64 = b.random();
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn memory_one_forms() {
        let tft = as_memory_one(NamedStrategy::TitForTat).unwrap();
        assert_eq!(tft.as_array(), [1.0, 0.0, 1.0, 0.0]);
        assert_eq!(tft.initial_coop, 1.0);
        let wsls = as_memory_one(NamedStrategy::WinStayLoseShift).unwrap();
        assert_eq!(wsls.as_array(), [1.0, 0.0, 0.0, 1.0]);
        assert_eq!(as_memory_one(NamedStrategy::AllC).unwrap().as_array(), [1.0; 4]);
        assert_eq!(as_memory_one(NamedStrategy::AllD).unwrap().as_array(), [0.0; 4]);
        assert_eq!(as_memory_one(NamedStrategy::Random(0.25)).unwrap().as_array(), [0.25; 4]);
        assert!(matches!(as_memory_one(NamedStrategy::Grim), Err(Error::NotMemoryOne(_))));
    }

    /// Memory-one versions agree with the automata on the opening move and
    /// after each of the four one-round histories.
    #[test]
    fn memory_one_reproduces_automata() {
        let histories: Vec<MatchState> = std::iter::once(MatchState::new())
            .chain(
                [(Move::C, Move::C), (Move::C, Move::D), (Move::D, Move::C), (Move::D, Move::D)]
                    .iter()
                    .map(|&p| state(&[p])),
            )
            .collect();
        for named in ALL_NAMED {
            let m1 = as_memory_one(named).unwrap();
            for h in &histories {
                let p = m1.coop_probability(h.last());
                match named {
                    NamedStrategy::Random(q) => assert_eq!(p, q),
                    _ => {
                        let auto = Strategy::from(named).next_move(h, &mut seeded(0));
                        let mut rng = seeded(0);
                        let via_m1 = Strategy::from(m1).next_move(h, &mut rng);
                        assert_eq!(auto, via_m1, "{named} after {:?}", h.last());
                        assert!(p == 0.0 || p == 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn zd_construction() {
        let stage = IpdStageParams::default();
        let zd = make_zd_extortion(2.0, 0.1, stage).unwrap();
        let want = [0.8, 0.1, 0.6, 0.0];
        for (got, w) in zd.as_array().iter().zip(want) {
            assert!((got - w).abs() < 1e-12, "{got} vs {w}");
        }
        let err = make_zd_extortion(2.0, 0.2, stage).unwrap_err();
        assert!(err.to_string().contains("p_cd"), "{err}");
        assert!(make_zd_extortion(1.0, 0.1, stage).is_err());
        assert!(make_zd_extortion(2.0, 0.0, stage).is_err());

        let near_fair = make_zd_extortion(1.0 + 1e-9, 0.1, stage).unwrap();
        assert!((near_fair.p_cc - 1.0).abs() < 1e-8);
        assert_eq!(near_fair.p_dd, 0.0);
    }

    /// Oracle for a pair of memoryless strategies: moves are independent every
    /// round, so the joint distribution is a product of marginals.
    #[test]
    fn alld_pair_matches_independent_product() {
        let alld = as_memory_one(NamedStrategy::AllD).unwrap();
        let stage = IpdStageParams::default();
        let e: f64 = 0.01;
        let (sx, sy) = stationary_payoffs(&alld, &alld, stage, e).unwrap();
        let oracle = 3.0 * e * e + 0.0 * e * (1.0 - e) + 5.0 * (1.0 - e) * e + 1.0 * (1.0 - e) * (1.0 - e);
        assert!((sx - oracle).abs() < 1e-12, "{sx} vs {oracle}");
        assert!((sy - oracle).abs() < 1e-12);
        assert!((oracle - 1.0299).abs() < 1e-12);
    }

    #[test]
    fn absorbing_chain_is_rejected() {
        let allc = as_memory_one(NamedStrategy::AllC).unwrap();
        let alld = as_memory_one(NamedStrategy::AllD).unwrap();
        let err = stationary_payoffs(&allc, &alld, IpdStageParams::default(), 0.0).unwrap_err();
        assert!(matches!(err, Error::NonErgodic(_)));
        assert!(stationary_payoffs(&allc, &alld, IpdStageParams::default(), 0.5).is_err());
    }

    #[test]
    fn zd_enforces_extortion_against_random() {
        let stage = IpdStageParams::default();
        let zd = make_zd_extortion(2.0, 0.1, stage).unwrap();
        let rnd = as_memory_one(NamedStrategy::Random(0.5)).unwrap();
        let (sx, sy) = stationary_payoffs(&zd, &rnd, stage, 0.0).unwrap();
        assert!(((sx - 1.0) - 2.0 * (sy - 1.0)).abs() < 1e-8, "{sx} {sy}");
        assert!(sx > sy);
    }
}
