//! Repeated-game matches, round-robin and ecological tournaments, and the
//! human/AI coevolution presets.
//!
//! Every pairing `(i, j)` with `i <= j` of a roster of size `n` plays with
//! seed `derive_seed(master, i·n + j)`, so a pairing's match is identical in
//! a round robin and in an ecological tournament built from the same seed.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{integrate_bimatrix, integrate_replicator, IntegratorConfig, Trajectory};
use crate::equilibria::hawk_dove_ess;
use crate::error::{param, Error, Result};
use crate::game::{make_hawk_dove, HawkDoveParams, IpdStageParams, Matrix, MixedStrategy};
use crate::rng::{derive_seed, seeded};
use crate::stochastic::{discretize_attrition_asymmetric, persistence_grid};
use crate::strategies::{make_zd_extortion, MatchState, Move, NamedStrategy, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchConfig {
    pub rounds: usize,
    /// Probability that each chosen move is flipped.
    pub noise: f64,
    pub seed: u64,
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(param("match rounds must be >= 1"));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return Err(param(format!("match noise {} outside [0, 0.5)", self.noise)));
        }
        Ok(())
    }
}

/// A named roster slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entrant {
    pub name: String,
    pub strategy: Strategy,
}

impl Entrant {
    pub fn new(name: impl Into<String>, strategy: impl Into<Strategy>) -> Self {
        Entrant { name: name.into(), strategy: strategy.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub score1: f64,
    pub score2: f64,
    /// Executed moves per round, player 1 first.
    pub log: Vec<(Move, Move)>,
}

impl MatchResult {
    fn coop_fraction(&self, first: bool) -> f64 {
        let n = self.log.len() as f64;
        self.log.iter().filter(|(a, b)| if first { a.is_coop() } else { b.is_coop() }).count() as f64 / n
    }
}

/// Plays `cfg.rounds` stage games. Each round player 1 chooses, then player
/// 2, then noise is applied to player 1 and player 2 in that order.
pub fn play_match(s1: &Strategy, s2: &Strategy, cfg: &MatchConfig, stage: IpdStageParams) -> Result<MatchResult> {
    cfg.validate()?;
    stage.validate()?;
    s1.validate()?;
    s2.validate()?;
    let mut rng = seeded(cfg.seed);
    let mut view1 = MatchState::new();
    let mut view2 = MatchState::new();
    let mut log = Vec::with_capacity(cfg.rounds);
    let (mut score1, mut score2) = (0.0, 0.0);
    for _ in 0..cfg.rounds {
        let mut m1 = s1.next_move(&view1, &mut rng);
        let mut m2 = s2.next_move(&view2, &mut rng);
        if cfg.noise > 0.0 {
            if rand::Rng::random::<f64>(&mut rng) < cfg.noise {
                m1 = m1.flipped();
            }
            if rand::Rng::random::<f64>(&mut rng) < cfg.noise {
                m2 = m2.flipped();
            }
        }
        score1 += stage.payoff(m1.is_coop(), m2.is_coop());
        score2 += stage.payoff(m2.is_coop(), m1.is_coop());
        view1.push(m1, m2);
        view2.push(m2, m1);
        log.push((m1, m2));
    }
    Ok(MatchResult { score1, score2, log })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreTable {
    pub roster: Vec<String>,
    /// Sum of each entrant's match scores against every other entrant.
    pub totals: Vec<f64>,
    /// `pairwise[i][j]`: entrant `i`'s score in its match against `j`.
    /// The diagonal is zero (no self-play).
    pub pairwise: Vec<Vec<f64>>,
    pub rounds: usize,
}

impl ScoreTable {
    /// Average stage payoff per round played.
    pub fn mean_per_round(&self) -> Vec<f64> {
        let games = (self.rounds * (self.roster.len() - 1)) as f64;
        self.totals.iter().map(|t| t / games).collect()
    }

    /// Recomputes totals from the pairwise table.
    pub fn recomputed_totals(&self) -> Vec<f64> {
        self.pairwise
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| *v).sum())
            .collect()
    }
}

fn check_roster(roster: &[Entrant]) -> Result<()> {
    if roster.len() < 2 {
        return Err(Error::Precondition(format!("roster needs at least 2 entrants (got {})", roster.len())));
    }
    let mut seen = HashSet::new();
    for e in roster {
        if !seen.insert(e.name.as_str()) {
            return Err(param(format!("duplicate roster name {:?}", e.name)));
        }
        e.strategy.validate()?;
    }
    Ok(())
}

fn pair_config(cfg: &MatchConfig, n: usize, i: usize, j: usize) -> MatchConfig {
    MatchConfig { seed: derive_seed(cfg.seed, (i * n + j) as u64), ..*cfg }
}

/// Plays the listed pairings (in parallel) and returns results in order.
fn play_pairs(roster: &[Entrant], pairs: &[(usize, usize)], cfg: &MatchConfig, stage: IpdStageParams) -> Result<Vec<MatchResult>> {
    let n = roster.len();
    pairs
        .par_iter()
        .map(|&(i, j)| play_match(&roster[i].strategy, &roster[j].strategy, &pair_config(cfg, n, i, j), stage))
        .collect()
}

/// Every unordered pair plays once; self-play excluded.
pub fn round_robin(roster: &[Entrant], cfg: &MatchConfig, stage: IpdStageParams) -> Result<ScoreTable> {
    check_roster(roster)?;
    cfg.validate()?;
    let n = roster.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let results = play_pairs(roster, &pairs, cfg, stage)?;
    let mut pairwise = vec![vec![0.0; n]; n];
    for (&(i, j), r) in pairs.iter().zip(&results) {
        pairwise[i][j] = r.score1;
        pairwise[j][i] = r.score2;
    }
    let mut table = ScoreTable {
        roster: roster.iter().map(|e| e.name.clone()).collect(),
        totals: vec![],
        pairwise,
        rounds: cfg.rounds,
    };
    table.totals = table.recomputed_totals();
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcologicalResult {
    pub labels: Vec<String>,
    /// Average per-round payoff of row entrant against column entrant,
    /// self-play on the diagonal.
    pub payoff: Matrix,
    /// Fraction of rounds in which the row entrant cooperated against the
    /// column entrant.
    pub cooperation: Matrix,
    pub trajectory: Trajectory,
}

impl EcologicalResult {
    /// Population-wide cooperation rate when shares are `x` and partners are
    /// met at random.
    pub fn cooperation_rate(&self, x: &MixedStrategy) -> f64 {
        self.cooperation.bilinear(x.probs(), x.probs())
    }
}

/// Roster-level payoff matrix and cooperation table from all pairings,
/// including self-play.
pub fn roster_matrix(roster: &[Entrant], cfg: &MatchConfig, stage: IpdStageParams) -> Result<(Matrix, Matrix)> {
    check_roster(roster)?;
    cfg.validate()?;
    let n = roster.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let results = play_pairs(roster, &pairs, cfg, stage)?;
    let rounds = cfg.rounds as f64;
    let mut payoff = Matrix::zeros(n, n);
    let mut coop = Matrix::zeros(n, n);
    for (&(i, j), r) in pairs.iter().zip(&results) {
        if i == j {
            payoff.set(i, i, (r.score1 + r.score2) / (2.0 * rounds));
            coop.set(i, i, 0.5 * (r.coop_fraction(true) + r.coop_fraction(false)));
        } else {
            payoff.set(i, j, r.score1 / rounds);
            payoff.set(j, i, r.score2 / rounds);
            coop.set(i, j, r.coop_fraction(true));
            coop.set(j, i, r.coop_fraction(false));
        }
    }
    Ok((payoff, coop))
}

/// Replicator dynamics over roster shares with the roster payoff matrix.
/// `initial` defaults to equal shares.
pub fn ecological_tournament(
    roster: &[Entrant],
    cfg: &MatchConfig,
    stage: IpdStageParams,
    dyn_cfg: &IntegratorConfig,
    initial: Option<&MixedStrategy>,
) -> Result<EcologicalResult> {
    let (payoff, cooperation) = roster_matrix(roster, cfg, stage)?;
    let x0 = initial.cloned().unwrap_or_else(|| MixedStrategy::uniform(roster.len()));
    let trajectory = integrate_replicator(&payoff, &x0, dyn_cfg)?;
    Ok(EcologicalResult {
        labels: roster.iter().map(|e| e.name.clone()).collect(),
        payoff,
        cooperation,
        trajectory,
    })
}

// ---------------------------------------------------------------------------
// Presets

/// Shares at or beyond this count as a pure population state.
pub const PURE_SHARE: f64 = 0.999;

/// Share of the zero-persistence bin marking a yielding population.
pub const YIELD_SHARE: f64 = 0.99;

/// Cooperation-rate thresholds separating the IPD regimes.
pub const COOPERATIVE_RATE: f64 = 0.9;
pub const DEFECTING_RATE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioPreset {
    HawkDoveMixed,
    IpdCoevolution,
    AttritionConvention,
}

impl ScenarioPreset {
    pub const ALL: [ScenarioPreset; 3] =
        [ScenarioPreset::HawkDoveMixed, ScenarioPreset::IpdCoevolution, ScenarioPreset::AttritionConvention];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioPreset::HawkDoveMixed => "hawk-dove-mixed",
            ScenarioPreset::IpdCoevolution => "ipd-coevolution",
            ScenarioPreset::AttritionConvention => "attrition-convention",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ScenarioPreset::HawkDoveMixed => {
                "hawk-dove under single- and two-population replicator dynamics"
            }
            ScenarioPreset::IpdCoevolution => {
                "ecological IPD tournament over a human-labelled and AI-labelled roster"
            }
            ScenarioPreset::AttritionConvention => {
                "two-population discretized war of attrition with unequal cost rates"
            }
        }
    }

    pub fn defaults(self) -> PresetParams {
        match self {
            ScenarioPreset::HawkDoveMixed => PresetParams::HawkDove(HawkDovePreset::default()),
            ScenarioPreset::IpdCoevolution => PresetParams::Ipd(IpdPreset::default()),
            ScenarioPreset::AttritionConvention => PresetParams::Attrition(AttritionPreset::default()),
        }
    }
}

impl fmt::Display for ScenarioPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioPreset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::UnknownPreset {
            name: s.to_string(),
            valid: ScenarioPreset::ALL.map(|p| p.name()).join(", "),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HawkDovePreset {
    pub v: f64,
    pub c: f64,
    /// Starting hawk share of the single population.
    pub x0_hawk: f64,
    pub human_hawk0: f64,
    pub ai_hawk0: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl Default for HawkDovePreset {
    fn default() -> Self {
        HawkDovePreset { v: 2.0, c: 4.0, x0_hawk: 0.9, human_hawk0: 0.6, ai_hawk0: 0.4, dt: 0.01, t_end: 500.0, record_every: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IpdPreset {
    pub rounds: usize,
    pub noise: f64,
    pub seed: u64,
    /// Extortion factor of the AI-side zero-determinant entrant.
    pub chi: f64,
    pub phi: f64,
    pub t: f64,
    pub r: f64,
    pub p: f64,
    pub s: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl Default for IpdPreset {
    fn default() -> Self {
        let stage = IpdStageParams::default();
        IpdPreset {
            rounds: 100,
            noise: 0.0,
            seed: 1,
            chi: 2.0,
            phi: 0.1,
            t: stage.t,
            r: stage.r,
            p: stage.p,
            s: stage.s,
            dt: 0.01,
            t_end: 500.0,
            record_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttritionPreset {
    pub v: f64,
    pub c_human: f64,
    pub c_ai: f64,
    pub bins: usize,
    pub t_max: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl Default for AttritionPreset {
    fn default() -> Self {
        AttritionPreset { v: 2.0, c_human: 1.0, c_ai: 0.5, bins: 21, t_max: 10.0, dt: 0.01, t_end: 500.0, record_every: 10 }
    }
}

/// Resolved parameters of one preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PresetParams {
    HawkDove(HawkDovePreset),
    Ipd(IpdPreset),
    Attrition(AttritionPreset),
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| param(format!("override {key}={value:?} is not a valid number")))
}

impl PresetParams {
    pub fn keys(&self) -> &'static [&'static str] {
        match self {
            PresetParams::HawkDove(_) => &["v", "c", "x0_hawk", "human_hawk0", "ai_hawk0", "dt", "t_end", "record_every"],
            PresetParams::Ipd(_) => {
                &["rounds", "noise", "seed", "chi", "phi", "t", "r", "p", "s", "dt", "t_end", "record_every"]
            }
            PresetParams::Attrition(_) => &["v", "c_human", "c_ai", "bins", "t_max", "dt", "t_end", "record_every"],
        }
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match self {
            PresetParams::HawkDove(p) => match key {
                "v" => p.v = parse_num(key, v)?,
                "c" => p.c = parse_num(key, v)?,
                "x0_hawk" => p.x0_hawk = parse_num(key, v)?,
                "human_hawk0" => p.human_hawk0 = parse_num(key, v)?,
                "ai_hawk0" => p.ai_hawk0 = parse_num(key, v)?,
                "dt" => p.dt = parse_num(key, v)?,
                "t_end" => p.t_end = parse_num(key, v)?,
                "record_every" => p.record_every = parse_num(key, v)?,
                _ => return Err(self.unknown(key)),
            },
            PresetParams::Ipd(p) => match key {
                "rounds" => p.rounds = parse_num(key, v)?,
                "noise" => p.noise = parse_num(key, v)?,
                "seed" => p.seed = parse_num(key, v)?,
                "chi" => p.chi = parse_num(key, v)?,
                "phi" => p.phi = parse_num(key, v)?,
                "t" => p.t = parse_num(key, v)?,
                "r" => p.r = parse_num(key, v)?,
                "p" => p.p = parse_num(key, v)?,
                "s" => p.s = parse_num(key, v)?,
                "dt" => p.dt = parse_num(key, v)?,
                "t_end" => p.t_end = parse_num(key, v)?,
                "record_every" => p.record_every = parse_num(key, v)?,
                _ => return Err(self.unknown(key)),
            },
            PresetParams::Attrition(p) => match key {
                "v" => p.v = parse_num(key, v)?,
                "c_human" => p.c_human = parse_num(key, v)?,
                "c_ai" => p.c_ai = parse_num(key, v)?,
                "bins" => p.bins = parse_num(key, v)?,
                "t_max" => p.t_max = parse_num(key, v)?,
                "dt" => p.dt = parse_num(key, v)?,
                "t_end" => p.t_end = parse_num(key, v)?,
                "record_every" => p.record_every = parse_num(key, v)?,
                _ => return Err(self.unknown(key)),
            },
        }
        Ok(())
    }

    fn unknown(&self, key: &str) -> Error {
        param(format!("unknown override {key:?}; valid keys: {}", self.keys().join(", ")))
    }
}

/// Qualitative end state of a preset's dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Interior state: strategies coexist.
    Mixed,
    PureHawk,
    PureDove,
    /// One population pure Hawk, the other pure Dove.
    AsymmetricConvention,
    /// Two populations at the same interior state.
    SymmetricMixed,
    Cooperative,
    Defecting,
    /// Horizon reached without matching any other label.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HawkDoveOutcome {
    pub ess_hawk_share: f64,
    pub single_final_hawk: f64,
    pub single_converged: bool,
    pub single_regime: Regime,
    pub human_final_hawk: f64,
    pub ai_final_hawk: f64,
    pub two_population_converged: bool,
    pub two_population_regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IpdOutcome {
    pub regime: Regime,
    pub initial_defection_rate: f64,
    pub final_defection_rate: f64,
    pub peak_defection_rate: f64,
    pub peak_defection_time: f64,
    pub human_share: f64,
    pub ai_share: f64,
    pub dominant: String,
    pub final_shares: Vec<(String, f64)>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttritionOutcome {
    pub human_mean_persistence: f64,
    pub ai_mean_persistence: f64,
    pub human_zero_share: f64,
    pub ai_zero_share: f64,
    /// Which population yields immediately, if a convention emerged.
    pub yielding_population: Option<String>,
    pub convention: bool,
    pub lower_cost_persists_longer: bool,
    /// Symmetric-game ESS means `v/c` for reference.
    pub human_ess_mean: f64,
    pub ai_ess_mean: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PresetSummary {
    HawkDove(HawkDoveOutcome),
    Ipd(IpdOutcome),
    Attrition(AttritionOutcome),
}

/// A trajectory together with the names needed to write it out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelledTrajectory {
    pub name: String,
    /// One population name, or two for bimatrix runs.
    pub populations: Vec<String>,
    pub labels_x: Vec<String>,
    pub labels_y: Option<Vec<String>>,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetReport {
    pub preset: String,
    pub parameters: PresetParams,
    pub summary: PresetSummary,
    #[serde(skip)]
    pub trajectories: Vec<LabelledTrajectory>,
    #[serde(skip)]
    pub scores: Option<ScoreTable>,
}

fn integrator(dt: f64, t_end: f64, record_every: usize) -> IntegratorConfig {
    IntegratorConfig { dt, t_end, record_every, renormalize: true }
}

fn single_regime(share: f64) -> Regime {
    if share >= PURE_SHARE {
        Regime::PureHawk
    } else if share <= 1.0 - PURE_SHARE {
        Regime::PureDove
    } else {
        Regime::Mixed
    }
}

fn two_population_regime(x: f64, y: f64) -> Regime {
    let lo = 1.0 - PURE_SHARE;
    match (single_regime(x), single_regime(y)) {
        (Regime::PureHawk, Regime::PureDove) | (Regime::PureDove, Regime::PureHawk) => Regime::AsymmetricConvention,
        (Regime::PureHawk, Regime::PureHawk) => Regime::PureHawk,
        (Regime::PureDove, Regime::PureDove) => Regime::PureDove,
        (Regime::Mixed, Regime::Mixed) if (x - y).abs() < lo => Regime::SymmetricMixed,
        _ => Regime::Unresolved,
    }
}

/// Runs a preset with `key=value` overrides applied to its defaults.
pub fn run_preset(preset: ScenarioPreset, overrides: &[(String, String)]) -> Result<PresetReport> {
    let mut params = preset.defaults();
    for (k, v) in overrides {
        params.set(k, v)?;
    }
    let (summary, trajectories, scores) = match params {
        PresetParams::HawkDove(p) => run_hawk_dove(&p)?,
        PresetParams::Ipd(p) => run_ipd(&p)?,
        PresetParams::Attrition(p) => run_attrition(&p)?,
    };
    Ok(PresetReport { preset: preset.name().to_string(), parameters: params, summary, trajectories, scores })
}

type PresetOutput = (PresetSummary, Vec<LabelledTrajectory>, Option<ScoreTable>);

fn run_hawk_dove(p: &HawkDovePreset) -> Result<PresetOutput> {
    let params = HawkDoveParams::new(p.v, p.c)?;
    let game = make_hawk_dove(params)?;
    let cfg = integrator(p.dt, p.t_end, p.record_every);
    let single = integrate_replicator(&game.a, &MixedStrategy::binary(p.x0_hawk)?, &cfg)?;
    let two = integrate_bimatrix(
        &game.a,
        &game.b,
        &MixedStrategy::binary(p.human_hawk0)?,
        &MixedStrategy::binary(p.ai_hawk0)?,
        &cfg,
    )?;
    let s = single.final_x().probs()[0];
    let (hx, ay) = (two.final_x().probs()[0], two.final_y().expect("two-population run").probs()[0]);
    let summary = HawkDoveOutcome {
        ess_hawk_share: hawk_dove_ess(params)?.probs()[0],
        single_final_hawk: s,
        single_converged: single.converged,
        single_regime: single_regime(s),
        human_final_hawk: hx,
        ai_final_hawk: ay,
        two_population_converged: two.converged,
        two_population_regime: two_population_regime(hx, ay),
    };
    let labels = game.labels.clone();
    let trajectories = vec![
        LabelledTrajectory {
            name: "single".into(),
            populations: vec!["single".into()],
            labels_x: labels.clone(),
            labels_y: None,
            trajectory: single,
        },
        LabelledTrajectory {
            name: "two-population".into(),
            populations: vec!["human".into(), "ai".into()],
            labels_x: labels.clone(),
            labels_y: Some(labels),
            trajectory: two,
        },
    ];
    Ok((PresetSummary::HawkDove(summary), trajectories, None))
}

/// The coevolution roster: reciprocating and unconditional cooperators on
/// the human side, defectors and an extortioner on the AI side.
pub fn coevolution_roster(chi: f64, phi: f64, stage: IpdStageParams) -> Result<Vec<Entrant>> {
    Ok(vec![
        Entrant::new("human:tft", NamedStrategy::TitForTat),
        Entrant::new("human:wsls", NamedStrategy::WinStayLoseShift),
        Entrant::new("human:allc", NamedStrategy::AllC),
        Entrant::new("ai:alld", NamedStrategy::AllD),
        Entrant::new("ai:grim", NamedStrategy::Grim),
        Entrant::new(format!("ai:zd:chi={chi},phi={phi}"), make_zd_extortion(chi, phi, stage)?),
    ])
}

fn run_ipd(p: &IpdPreset) -> Result<PresetOutput> {
    let stage = IpdStageParams::new(p.t, p.r, p.p, p.s)?;
    let roster = coevolution_roster(p.chi, p.phi, stage)?;
    let mcfg = MatchConfig { rounds: p.rounds, noise: p.noise, seed: p.seed };
    let cfg = integrator(p.dt, p.t_end, p.record_every);
    let eco = ecological_tournament(&roster, &mcfg, stage, &cfg, None)?;
    let table = round_robin(&roster, &mcfg, stage)?;

    let defection: Vec<f64> = eco.trajectory.x.iter().map(|x| 1.0 - eco.cooperation_rate(x)).collect();
    let (peak_idx, peak) = defection
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let last = eco.trajectory.final_x();
    let coop = eco.cooperation_rate(last);
    let regime = if coop >= COOPERATIVE_RATE {
        Regime::Cooperative
    } else if coop <= DEFECTING_RATE {
        Regime::Defecting
    } else {
        Regime::Mixed
    };
    let share_of = |prefix: &str| -> f64 {
        eco.labels.iter().zip(last.probs()).filter(|(l, _)| l.starts_with(prefix)).map(|(_, s)| s).sum()
    };
    let dominant = eco
        .labels
        .iter()
        .zip(last.probs())
        .fold(("", f64::NEG_INFINITY), |best, (l, &s)| if s > best.1 { (l.as_str(), s) } else { best })
        .0
        .to_string();
    let summary = IpdOutcome {
        regime,
        initial_defection_rate: defection[0],
        final_defection_rate: 1.0 - coop,
        peak_defection_rate: peak,
        peak_defection_time: eco.trajectory.times[peak_idx],
        human_share: share_of("human:"),
        ai_share: share_of("ai:"),
        dominant,
        final_shares: eco.labels.iter().cloned().zip(last.probs().iter().copied()).collect(),
        converged: eco.trajectory.converged,
    };
    let trajectories = vec![LabelledTrajectory {
        name: "ecological".into(),
        populations: vec!["population".into()],
        labels_x: eco.labels.clone(),
        labels_y: None,
        trajectory: eco.trajectory,
    }];
    Ok((PresetSummary::Ipd(summary), trajectories, Some(table)))
}

fn run_attrition(p: &AttritionPreset) -> Result<PresetOutput> {
    let game = discretize_attrition_asymmetric(p.v, p.c_human, p.c_ai, p.bins, p.t_max)?;
    let grid = persistence_grid(p.bins, p.t_max)?;
    let cfg = integrator(p.dt, p.t_end, p.record_every);
    let start = MixedStrategy::uniform(p.bins);
    let tr = integrate_bimatrix(&game.a, &game.b, &start, &start, &cfg)?;
    let x = tr.final_x();
    let y = tr.final_y().expect("two-population run");
    let (hm, am) = (x.mean_of(&grid), y.mean_of(&grid));
    let (hz, az) = (x.probs()[0], y.probs()[0]);
    let yielding = if hz >= YIELD_SHARE && az <= 1.0 - YIELD_SHARE {
        Some("human".to_string())
    } else if az >= YIELD_SHARE && hz <= 1.0 - YIELD_SHARE {
        Some("ai".to_string())
    } else {
        None
    };
    let lower_cost_persists_longer = if p.c_human < p.c_ai {
        hm > am
    } else if p.c_ai < p.c_human {
        am > hm
    } else {
        false
    };
    let summary = AttritionOutcome {
        human_mean_persistence: hm,
        ai_mean_persistence: am,
        human_zero_share: hz,
        ai_zero_share: az,
        convention: yielding.is_some(),
        yielding_population: yielding,
        lower_cost_persists_longer,
        human_ess_mean: p.v / p.c_human,
        ai_ess_mean: p.v / p.c_ai,
        converged: tr.converged,
    };
    let labels = game.labels.clone();
    let trajectories = vec![LabelledTrajectory {
        name: "two-population".into(),
        populations: vec!["human".into(), "ai".into()],
        labels_x: labels.clone(),
        labels_y: Some(labels),
        trajectory: tr,
    }];
    Ok((PresetSummary::Attrition(summary), trajectories, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rounds: usize) -> MatchConfig {
        MatchConfig { rounds, noise: 0.0, seed: 0 }
    }

    fn s(n: NamedStrategy) -> Strategy {
        n.into()
    }

    #[test]
    fn hand_simulated_matches() {
        let st = IpdStageParams::default();
        let r = play_match(&s(NamedStrategy::TitForTat), &s(NamedStrategy::AllD), &cfg(10), st).unwrap();
        assert_eq!((r.score1, r.score2), (9.0, 14.0));
        assert_eq!(r.log[0], (Move::C, Move::D));
        assert!(r.log[1..].iter().all(|&m| m == (Move::D, Move::D)));

        let r = play_match(&s(NamedStrategy::TitForTat), &s(NamedStrategy::AllC), &cfg(10), st).unwrap();
        assert_eq!((r.score1, r.score2), (30.0, 30.0));

        let r = play_match(&s(NamedStrategy::WinStayLoseShift), &s(NamedStrategy::AllD), &cfg(10), st).unwrap();
        assert_eq!((r.score1, r.score2), (5.0, 30.0));
        let own: String = r.log.iter().map(|m| m.0.as_char()).collect();
        assert_eq!(own, "CDCDCDCDCD");
    }

    #[test]
    fn round_robin_totals() {
        let roster = vec![
            Entrant::new("tft", NamedStrategy::TitForTat),
            Entrant::new("alld", NamedStrategy::AllD),
            Entrant::new("allc", NamedStrategy::AllC),
        ];
        let t = round_robin(&roster, &cfg(10), IpdStageParams::default()).unwrap();
        assert_eq!(t.totals, vec![39.0, 64.0, 30.0]);
        assert_eq!(t.totals, t.recomputed_totals());

        let copies = vec![Entrant::new("alld", NamedStrategy::AllD), Entrant::new("alld-copy", NamedStrategy::AllD)];
        let t = round_robin(&copies, &cfg(7), IpdStageParams::default()).unwrap();
        assert_eq!(t.totals, vec![7.0, 7.0]);

        assert!(matches!(round_robin(&roster[..1], &cfg(10), IpdStageParams::default()), Err(Error::Precondition(_))));
        let dup = vec![roster[0].clone(), roster[0].clone()];
        assert!(matches!(round_robin(&dup, &cfg(10), IpdStageParams::default()), Err(Error::Param(_))));
    }

    #[test]
    fn ecological_examples() {
        let st = IpdStageParams::default();
        let dc = IntegratorConfig::default();
        let roster = vec![Entrant::new("allc", NamedStrategy::AllC), Entrant::new("alld", NamedStrategy::AllD)];
        let e = ecological_tournament(&roster, &cfg(10), st, &dc, None).unwrap();
        assert!(e.trajectory.final_x().probs()[1] > 1.0 - 1e-6);

        let roster = vec![Entrant::new("tft", NamedStrategy::TitForTat), Entrant::new("alld", NamedStrategy::AllD)];
        let e = ecological_tournament(&roster, &cfg(100), st, &dc, None).unwrap();
        // Roster-matrix oracle from the hand-computed per-round averages.
        let want = [[3.0, 0.99], [1.04, 1.0]];
        for (i, row) in want.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                assert!((e.payoff.get(i, j) - w).abs() < 1e-12);
            }
        }
        assert!(e.trajectory.final_x().probs()[0] > 1.0 - 1e-6);

        let copies = vec![Entrant::new("alld", NamedStrategy::AllD), Entrant::new("alld-copy", NamedStrategy::AllD)];
        let e = ecological_tournament(&copies, &cfg(10), st, &dc, None).unwrap();
        assert!(e.trajectory.x.iter().all(|x| x.probs() == [0.5, 0.5]));
    }

    #[test]
    fn noisy_matches_are_seed_deterministic() {
        let st = IpdStageParams::default();
        let c = MatchConfig { rounds: 200, noise: 0.05, seed: 42 };
        let a = play_match(&s(NamedStrategy::TitForTat), &s(NamedStrategy::Random(0.5)), &c, st).unwrap();
        let b = play_match(&s(NamedStrategy::TitForTat), &s(NamedStrategy::Random(0.5)), &c, st).unwrap();
        assert_eq!(a, b);
        let other = play_match(&s(NamedStrategy::TitForTat), &s(NamedStrategy::Random(0.5)), &MatchConfig { seed: 43, ..c }, st).unwrap();
        assert_ne!(a.log, other.log);
    }

    #[test]
    fn preset_names() {
        for p in ScenarioPreset::ALL {
            assert_eq!(p.name().parse::<ScenarioPreset>().unwrap(), p);
        }
        let err = "foo".parse::<ScenarioPreset>().unwrap_err();
        let msg = err.to_string();
        for p in ScenarioPreset::ALL {
            assert!(msg.contains(p.name()), "{msg}");
        }
    }

    #[test]
    fn preset_overrides() {
        let mut p = ScenarioPreset::HawkDoveMixed.defaults();
        p.set("v", "1.5").unwrap();
        assert!(matches!(p, PresetParams::HawkDove(HawkDovePreset { v, .. }) if v == 1.5));
        assert!(p.set("bogus", "1").unwrap_err().to_string().contains("x0_hawk"));
        assert!(p.set("v", "abc").is_err());
    }

    #[test]
    fn hawk_dove_preset() {
        let r = run_preset(ScenarioPreset::HawkDoveMixed, &[]).unwrap();
        let PresetSummary::HawkDove(s) = r.summary else { panic!() };
        assert!((s.single_final_hawk - 0.5).abs() < 1e-6);
        assert_eq!(s.single_regime, Regime::Mixed);
        assert_eq!(s.two_population_regime, Regime::AsymmetricConvention);
        assert_eq!(r.trajectories.len(), 2);
    }

    #[test]
    fn attrition_preset_lower_cost_persists() {
        let r = run_preset(ScenarioPreset::AttritionConvention, &[("t_end".into(), "300".into())]).unwrap();
        let PresetSummary::Attrition(s) = r.summary else { panic!() };
        assert!(s.lower_cost_persists_longer);
        assert!(s.ai_mean_persistence > s.human_mean_persistence);
        assert!(s.convention);
        assert_eq!(s.yielding_population.as_deref(), Some("human"));
    }
}
