//! Scenario files (schema version 1).
//!
//! Scenarios are TOML, or JSON when the file name ends in `.json`. Parsing is
//! strict: every unknown key, missing block and out-of-range parameter is
//! reported, not just the first.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use egt_core::dynamics::IntegratorConfig;
use egt_core::game::{make_hawk_dove, make_ipd_stage, HawkDoveParams, IpdStageParams};
use egt_core::stochastic::{discretize_attrition, discretize_attrition_asymmetric, PersistenceStrategy};
use egt_core::strategies::{make_zd_extortion, MemoryOneStrategy, NamedStrategy, Strategy};
use egt_core::tournament::{Entrant, ScenarioPreset};
use egt_core::{Matrix, MixedStrategy, PayoffBimatrix};
use serde_json::{Map, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Replicator,
    Bimatrix,
    Moran,
    Attrition,
    IpdTournament,
    Ess,
    Preset,
}

impl Kind {
    const ALL: [(&'static str, Kind); 7] = [
        ("replicator", Kind::Replicator),
        ("bimatrix", Kind::Bimatrix),
        ("moran", Kind::Moran),
        ("attrition", Kind::Attrition),
        ("ipd-tournament", Kind::IpdTournament),
        ("ess", Kind::Ess),
        ("preset", Kind::Preset),
    ];

    pub fn name(self) -> &'static str {
        Kind::ALL.iter().find(|(_, k)| *k == self).map(|(n, _)| *n).unwrap_or("?")
    }

    fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.iter().find(|(n, _)| *n == s).map(|(_, k)| *k)
    }

    /// Blocks this kind accepts, and which of them are required.
    fn blocks(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Kind::Replicator => (&["game", "dynamics"], &["game"]),
            Kind::Bimatrix => (&["game", "dynamics"], &["game"]),
            Kind::Moran => (&["game", "moran"], &["game", "moran"]),
            Kind::Attrition => (&["game", "contest"], &["game", "contest"]),
            Kind::IpdTournament => (&["game", "tournament", "dynamics"], &["tournament"]),
            Kind::Ess => (&["game", "ess"], &["game"]),
            Kind::Preset => (&["preset"], &["preset"]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameSpec {
    HawkDove(HawkDoveParams),
    IpdStage(IpdStageParams),
    Matrix { a: Matrix, b: Option<Matrix>, labels: Vec<String> },
    Attrition { v: f64, c: f64, c_b: Option<f64>, bins: Option<usize>, t_max: Option<f64> },
}

impl GameSpec {
    /// Costs of the two contestants for attrition games.
    pub fn attrition_costs(&self) -> Option<(f64, f64, f64)> {
        match *self {
            GameSpec::Attrition { v, c, c_b, .. } => Some((v, c, c_b.unwrap_or(c))),
            _ => None,
        }
    }

    /// Matrix form. Attrition games need `bins` and `t_max`.
    pub fn bimatrix(&self) -> egt_core::Result<PayoffBimatrix> {
        match self {
            GameSpec::HawkDove(p) => make_hawk_dove(*p),
            GameSpec::IpdStage(p) => make_ipd_stage(*p),
            GameSpec::Matrix { a, b: None, labels } => PayoffBimatrix::symmetric(a.clone(), labels.clone()),
            GameSpec::Matrix { a, b: Some(b), labels } => PayoffBimatrix::new(a.clone(), b.clone(), labels.clone()),
            GameSpec::Attrition { v, c, c_b, bins, t_max } => {
                let (bins, t_max) = match (bins, t_max) {
                    (Some(b), Some(t)) => (*b, *t),
                    _ => return Err(egt_core::Error::Param("attrition matrix needs bins and t_max".into())),
                };
                match c_b {
                    Some(cb) if cb != c => discretize_attrition_asymmetric(*v, *c, *cb, bins, t_max),
                    _ => discretize_attrition(*v, *c, bins, t_max),
                }
            }
        }
    }

    pub fn stage(&self) -> IpdStageParams {
        match self {
            GameSpec::IpdStage(p) => *p,
            _ => IpdStageParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSpec {
    pub config: IntegratorConfig,
    pub x0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoranSpec {
    pub n: usize,
    pub selection_intensity: f64,
    pub max_steps: u64,
    pub trials: u64,
    pub initial_mutants: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PersistenceSpec {
    /// The symmetric ESS law for the scenario's `v` and own cost.
    Ess,
    Fixed(PersistenceStrategy),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContestSpec {
    pub trials: u64,
    pub strategy_a: PersistenceSpec,
    pub strategy_b: PersistenceSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TournamentSpec {
    pub roster: Vec<Entrant>,
    pub rounds: usize,
    pub noise: f64,
    pub ecological: bool,
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EssSpec {
    pub candidate: Option<Vec<f64>>,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetSpec {
    pub preset: ScenarioPreset,
    pub overrides: Vec<(String, String)>,
}

/// A fully parsed and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: Kind,
    pub seed: u64,
    pub seed_given: bool,
    pub output_dir: Option<PathBuf>,
    pub plot: bool,
    pub game: Option<GameSpec>,
    pub dynamics: DynamicsSpec,
    pub moran: Option<MoranSpec>,
    pub contest: Option<ContestSpec>,
    pub tournament: Option<TournamentSpec>,
    pub ess: Option<EssSpec>,
    pub preset: Option<PresetSpec>,
}

/// Reads a scenario file into a JSON document.
pub fn load(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_text(&text, path.extension().is_some_and(|e| e == "json"))
}

pub fn parse_text(text: &str, json: bool) -> Result<Value, CliError> {
    if json {
        serde_json::from_str(text).map_err(|e| CliError::Invalid(vec![format!("malformed JSON: {e}")]))
    } else {
        let doc: toml::Table = toml::from_str(text).map_err(|e| CliError::Invalid(vec![format!("malformed TOML: {e}")]))?;
        serde_json::to_value(doc).map_err(|e| CliError::Invalid(vec![format!("unrepresentable TOML: {e}")]))
    }
}

/// Key-checked view of one table; records every problem into `diags`.
struct Table<'a> {
    path: String,
    map: &'a Map<String, Value>,
    seen: RefCell<Vec<&'static str>>,
    diags: &'a RefCell<Vec<String>>,
}

impl<'a> Table<'a> {
    fn new(path: &str, value: &'a Value, diags: &'a RefCell<Vec<String>>) -> Option<Self> {
        match value.as_object() {
            Some(map) => Some(Table { path: path.to_string(), map, seen: RefCell::new(vec![]), diags }),
            None => {
                diags.borrow_mut().push(format!("{path}: expected a table"));
                None
            }
        }
    }

    fn key(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn error(&self, msg: String) {
        self.diags.borrow_mut().push(msg);
    }

    fn get(&self, key: &'static str) -> Option<&'a Value> {
        self.seen.borrow_mut().push(key);
        self.map.get(key)
    }

    fn typed<T>(&self, key: &'static str, what: &str, conv: impl Fn(&Value) -> Option<T>) -> Option<T> {
        let v = self.get(key)?;
        let out = conv(v);
        if out.is_none() {
            self.error(format!("{}: expected {what}, got {v}", self.key(key)));
        }
        out
    }

    fn required<T>(&self, key: &'static str, got: Option<T>) -> Option<T> {
        if got.is_none() && !self.map.contains_key(key) {
            self.error(format!("{}: missing required key", self.key(key)));
        }
        got
    }

    fn f64(&self, key: &'static str) -> Option<f64> {
        self.typed(key, "a number", Value::as_f64)
    }

    fn req_f64(&self, key: &'static str) -> Option<f64> {
        let v = self.f64(key);
        self.required(key, v)
    }

    fn u64(&self, key: &'static str) -> Option<u64> {
        self.typed(key, "a non-negative integer", Value::as_u64)
    }

    fn usize(&self, key: &'static str) -> Option<usize> {
        self.u64(key).map(|v| v as usize)
    }

    fn bool(&self, key: &'static str) -> Option<bool> {
        self.typed(key, "a boolean", Value::as_bool)
    }

    fn str(&self, key: &'static str) -> Option<&'a str> {
        let v = self.get(key)?;
        let out = v.as_str();
        if out.is_none() {
            self.error(format!("{}: expected a string, got {v}", self.key(key)));
        }
        out
    }

    fn vec_f64(&self, key: &'static str) -> Option<Vec<f64>> {
        self.typed(key, "an array of numbers", |v| v.as_array()?.iter().map(Value::as_f64).collect())
    }

    fn matrix(&self, key: &'static str) -> Option<Matrix> {
        let rows: Vec<Vec<f64>> = self.typed(key, "an array of number arrays", |v| {
            v.as_array()?.iter().map(|r| r.as_array()?.iter().map(Value::as_f64).collect()).collect()
        })?;
        match Matrix::from_rows(rows) {
            Ok(m) => Some(m),
            Err(e) => {
                self.error(format!("{}: {e}", self.key(key)));
                None
            }
        }
    }

    fn sub(&self, key: &'static str) -> Option<Table<'a>> {
        let v = self.get(key)?;
        Table::new(&self.key(key), v, self.diags)
    }

    /// Reports keys that were never looked up.
    fn finish(self) {
        let seen = self.seen.borrow();
        for k in self.map.keys() {
            if !seen.contains(&k.as_str()) {
                self.error(format!("{}: unknown key", self.key(k)));
            }
        }
    }
}

fn check(diags: &RefCell<Vec<String>>, context: &str, r: egt_core::Result<()>) {
    if let Err(e) = r {
        diags.borrow_mut().push(format!("{context}: {e}"));
    }
}

fn parse_game(t: Table<'_>) -> Option<GameSpec> {
    let out = parse_game_body(&t);
    t.finish();
    out
}

fn parse_game_body(t: &Table<'_>) -> Option<GameSpec> {
    let ty = t.str("type");
    let ty = t.required("type", ty);
    let spec = match ty {
        Some("hawk-dove") => {
            let (v, c) = (t.req_f64("v"), t.req_f64("c"));
            let p = HawkDoveParams { v: v?, c: c? };
            check(t.diags, "game", p.validate());
            Some(GameSpec::HawkDove(p))
        }
        Some("ipd-stage") => {
            let d = IpdStageParams::default();
            let p = IpdStageParams {
                t: t.f64("t").unwrap_or(d.t),
                r: t.f64("r").unwrap_or(d.r),
                p: t.f64("p").unwrap_or(d.p),
                s: t.f64("s").unwrap_or(d.s),
            };
            check(t.diags, "game", p.validate());
            Some(GameSpec::IpdStage(p))
        }
        Some("matrix") => {
            let a = t.matrix("a");
            let a = t.required("a", a);
            let b = t.matrix("b");
            let labels: Vec<String> = t
                .typed("labels", "an array of strings", |v| {
                    v.as_array()?.iter().map(|s| s.as_str().map(String::from)).collect()
                })
                .unwrap_or_default();
            let spec = GameSpec::Matrix { a: a?, b, labels };
            if let Err(e) = spec.bimatrix() {
                t.error(format!("game: {e}"));
            }
            Some(spec)
        }
        Some("attrition") => {
            let (v, c) = (t.req_f64("v"), t.req_f64("c"));
            let spec = GameSpec::Attrition { v: v?, c: c?, c_b: t.f64("c_b"), bins: t.usize("bins"), t_max: t.f64("t_max") };
            if let GameSpec::Attrition { v, c, c_b, bins, t_max } = spec {
                check(t.diags, "game", egt_core::equilibria::attrition_ess(v, c).map(|_| ()));
                if let Some(cb) = c_b {
                    check(t.diags, "game.c_b", egt_core::equilibria::attrition_ess(v, cb).map(|_| ()));
                }
                if bins.is_some() || t_max.is_some() {
                    check(t.diags, "game", spec.bimatrix().map(|_| ()));
                }
            }
            Some(spec)
        }
        Some(other) => {
            t.error(format!("game.type: unknown game type {other:?} (expected hawk-dove, ipd-stage, matrix or attrition)"));
            None
        }
        None => None,
    };
    spec
}

fn parse_dynamics(t: Option<Table<'_>>) -> DynamicsSpec {
    let d = IntegratorConfig::default();
    let Some(t) = t else {
        return DynamicsSpec { config: d, x0: None, y0: None };
    };
    let config = IntegratorConfig {
        dt: t.f64("dt").unwrap_or(d.dt),
        t_end: t.f64("t_end").unwrap_or(d.t_end),
        record_every: t.usize("record_every").unwrap_or(d.record_every),
        renormalize: t.bool("renormalize").unwrap_or(d.renormalize),
    };
    check(t.diags, "dynamics", config.validate());
    let spec = DynamicsSpec { config, x0: t.vec_f64("x0"), y0: t.vec_f64("y0") };
    for (name, v) in [("dynamics.x0", &spec.x0), ("dynamics.y0", &spec.y0), ] {
        if let Some(v) = v {
            check(t.diags, name, MixedStrategy::new(v.clone()).map(|_| ()));
        }
    }
    t.finish();
    spec
}

fn parse_moran(t: Table<'_>) -> Option<MoranSpec> {
    let out = parse_moran_body(&t);
    t.finish();
    out
}

fn parse_moran_body(t: &Table<'_>) -> Option<MoranSpec> {
    let n = t.usize("n");
    let n = t.required("n", n);
    let w = t.f64("selection_intensity");
    let w = t.required("selection_intensity", w);
    let trials = t.u64("trials");
    let trials = t.required("trials", trials);
    let spec = MoranSpec {
        n: n?,
        selection_intensity: w?,
        max_steps: t.u64("max_steps").unwrap_or(10_000_000),
        trials: trials?,
        initial_mutants: t.usize("initial_mutants").unwrap_or(1),
    };
    let cfg = egt_core::stochastic::MoranConfig {
        n: spec.n,
        selection_intensity: spec.selection_intensity,
        max_steps: spec.max_steps,
        trials: spec.trials,
        seed: 0,
    };
    check(t.diags, "moran", cfg.validate());
    if spec.initial_mutants == 0 || spec.initial_mutants >= spec.n.max(1) {
        t.error(format!("moran.initial_mutants: must be in [1, n-1] (got {})", spec.initial_mutants));
    }
    Some(spec)
}

/// `ess`, `pure:<m>` or `exp:<rate>`.
pub fn parse_persistence(s: &str) -> Result<PersistenceSpec, String> {
    let s = s.trim();
    if s == "ess" {
        return Ok(PersistenceSpec::Ess);
    }
    let (kind, num) = s.split_once(':').ok_or_else(|| format!("unknown persistence strategy {s:?}"))?;
    let x: f64 = num.trim().parse().map_err(|_| format!("bad number in persistence strategy {s:?}"))?;
    let strat = match kind {
        "pure" => PersistenceStrategy::Pure(x),
        "exp" => PersistenceStrategy::Exponential(x),
        _ => return Err(format!("unknown persistence strategy {s:?} (expected ess, pure:<m> or exp:<rate>)")),
    };
    strat.validate().map_err(|e| e.to_string())?;
    Ok(PersistenceSpec::Fixed(strat))
}

fn parse_contest(t: Table<'_>) -> Option<ContestSpec> {
    let trials = t.u64("trials");
    let trials = t.required("trials", trials);
    let strat = |key: &'static str| -> Option<PersistenceSpec> {
        let s = t.str(key);
        match parse_persistence(t.required(key, s)?) {
            Ok(p) => Some(p),
            Err(e) => {
                t.error(format!("{}: {e}", t.key(key)));
                None
            }
        }
    };
    let (a, b) = (strat("strategy_a"), strat("strategy_b"));
    if trials == Some(0) {
        t.error("contest.trials: must be >= 1".into());
    }
    t.finish();
    Some(ContestSpec { trials: trials?, strategy_a: a?, strategy_b: b? })
}

/// Roster entry syntax: `allc`, `alld`, `tft`, `grim`, `wsls`,
/// `random:p=<p>`, `zd:chi=<chi>,phi=<phi>`, `m1:<p_cc>,<p_cd>,<p_dc>,<p_dd>[,<initial>]`.
pub fn parse_strategy(s: &str, stage: IpdStageParams) -> Result<Strategy, String> {
    let s = s.trim();
    let named = match s {
        "allc" => Some(NamedStrategy::AllC),
        "alld" => Some(NamedStrategy::AllD),
        "tft" => Some(NamedStrategy::TitForTat),
        "grim" => Some(NamedStrategy::Grim),
        "wsls" => Some(NamedStrategy::WinStayLoseShift),
        _ => None,
    };
    if let Some(n) = named {
        return Ok(n.into());
    }
    let (head, args) = s.split_once(':').ok_or_else(|| format!("unknown strategy {s:?}"))?;
    let kv = |args: &str| -> Result<BTreeMap<String, f64>, String> {
        args.split(',')
            .map(|part| {
                let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value in {s:?}"))?;
                let v: f64 = v.trim().parse().map_err(|_| format!("bad number in {s:?}"))?;
                Ok((k.trim().to_string(), v))
            })
            .collect()
    };
    let take = |m: &BTreeMap<String, f64>, keys: &[&str]| -> Result<Vec<f64>, String> {
        if let Some(extra) = m.keys().find(|k| !keys.contains(&k.as_str())) {
            return Err(format!("unexpected parameter {extra:?} in {s:?}"));
        }
        keys.iter().map(|k| m.get(*k).copied().ok_or_else(|| format!("missing {k} in {s:?}"))).collect()
    };
    match head {
        "random" => {
            let p = take(&kv(args)?, &["p"])?;
            NamedStrategy::random(p[0]).map(Into::into).map_err(|e| e.to_string())
        }
        "zd" => {
            let p = take(&kv(args)?, &["chi", "phi"])?;
            make_zd_extortion(p[0], p[1], stage).map(Into::into).map_err(|e| e.to_string())
        }
        "m1" => {
            let p: Vec<f64> = args
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number in {s:?}")))
                .collect::<Result<_, _>>()?;
            match p.as_slice() {
                [cc, cd, dc, dd] => MemoryOneStrategy::new(*cc, *cd, *dc, *dd, *cc),
                [cc, cd, dc, dd, init] => MemoryOneStrategy::new(*cc, *cd, *dc, *dd, *init),
                _ => return Err(format!("m1 needs 4 or 5 probabilities in {s:?}")),
            }
            .map(Into::into)
            .map_err(|e| e.to_string())
        }
        _ => Err(format!("unknown strategy {s:?}")),
    }
}

fn parse_tournament(t: Table<'_>, stage: IpdStageParams) -> Option<TournamentSpec> {
    let out = parse_tournament_body(&t, stage);
    t.finish();
    out
}

fn parse_tournament_body(t: &Table<'_>, stage: IpdStageParams) -> Option<TournamentSpec> {
    let mut roster = Vec::new();
    match t.get("roster") {
        None => t.error("tournament.roster: missing required key".into()),
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                let (name, spec) = match item {
                    Value::String(s) => (s.clone(), s.clone()),
                    Value::Object(_) => {
                        let Some(sub) = Table::new(&format!("tournament.roster[{i}]"), item, t.diags) else { continue };
                        let name = sub.str("name").map(String::from);
                        let name = sub.required("name", name);
                        let spec = sub.str("strategy").map(String::from);
                        let spec = sub.required("strategy", spec);
                        sub.finish();
                        match (name, spec) {
                            (Some(n), Some(s)) => (n, s),
                            _ => continue,
                        }
                    }
                    other => {
                        t.error(format!("tournament.roster[{i}]: expected a string or table, got {other}"));
                        continue;
                    }
                };
                match parse_strategy(&spec, stage) {
                    Ok(s) => roster.push(Entrant { name, strategy: s }),
                    Err(e) => t.error(format!("tournament.roster[{i}]: {e}")),
                }
            }
        }
        Some(other) => t.error(format!("tournament.roster: expected an array, got {other}")),
    }
    let rounds = t.usize("rounds");
    let rounds = t.required("rounds", rounds);
    let spec = TournamentSpec {
        roster,
        rounds: rounds?,
        noise: t.f64("noise").unwrap_or(0.0),
        ecological: t.bool("ecological").unwrap_or(false),
        initial: t.vec_f64("initial"),
    };
    let mcfg = egt_core::tournament::MatchConfig { rounds: spec.rounds, noise: spec.noise, seed: 0 };
    check(t.diags, "tournament", mcfg.validate());
    if spec.roster.len() < 2 {
        t.error(format!("tournament.roster: needs at least 2 entrants (got {})", spec.roster.len()));
    }
    let mut names: Vec<&str> = spec.roster.iter().map(|e| e.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        t.error(format!("tournament.roster: duplicate name {:?}", w[0]));
    }
    if let Some(x) = &spec.initial {
        check(t.diags, "tournament.initial", MixedStrategy::new(x.clone()).map(|_| ()));
        if x.len() != spec.roster.len() {
            t.error(format!("tournament.initial: {} shares for {} entrants", x.len(), spec.roster.len()));
        }
    }
    Some(spec)
}

fn parse_ess(t: Option<Table<'_>>) -> EssSpec {
    let Some(t) = t else {
        return EssSpec { candidate: None, tol: egt_core::DEFAULT_TOL };
    };
    let spec = EssSpec { candidate: t.vec_f64("candidate"), tol: t.f64("tol").unwrap_or(egt_core::DEFAULT_TOL) };
    if let Some(c) = &spec.candidate {
        check(t.diags, "ess.candidate", MixedStrategy::new(c.clone()).map(|_| ()));
    }
    t.finish();
    spec
}

fn value_as_override(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn parse_preset(t: Table<'_>) -> Option<PresetSpec> {
    let out = parse_preset_body(&t);
    t.finish();
    out
}

fn parse_preset_body(t: &Table<'_>) -> Option<PresetSpec> {
    let name = t.str("name");
    let name = t.required("name", name)?;
    let preset = match name.parse::<ScenarioPreset>() {
        Ok(p) => p,
        Err(e) => {
            t.error(format!("preset.name: {e}"));
            t.get("overrides");
            return None;
        }
    };
    let mut overrides = Vec::new();
    if let Some(o) = t.sub("overrides") {
        let mut params = preset.defaults();
        for (k, v) in o.map {
            match value_as_override(v) {
                Some(s) => {
                    if let Err(e) = params.set(k, &s) {
                        o.error(format!("preset.overrides.{k}: {e}"));
                    }
                    overrides.push((k.clone(), s));
                }
                None => o.error(format!("preset.overrides.{k}: expected a number or string")),
            }
        }
    }
    Some(PresetSpec { preset, overrides })
}

fn validate_kind_specifics(s: &Scenario, diags: &RefCell<Vec<String>>) {
    let game = s.game.as_ref();
    let push = |m: String| diags.borrow_mut().push(m);
    match s.kind {
        Kind::Replicator | Kind::Bimatrix => {
            let Some(g) = game else { return };
            if matches!(g, GameSpec::Attrition { bins: None, .. } | GameSpec::Attrition { t_max: None, .. }) {
                push("game: attrition dynamics need bins and t_max".into());
                return;
            }
            let Ok(m) = g.bimatrix() else { return };
            if s.kind == Kind::Replicator && !m.a.is_square() {
                push("game: replicator dynamics need a square game".into());
            }
            let want = if s.kind == Kind::Replicator { (m.rows(), None) } else { (m.rows(), Some(m.cols())) };
            if let Some(x0) = &s.dynamics.x0 {
                if x0.len() != want.0 {
                    push(format!("dynamics.x0: {} shares for {} strategies", x0.len(), want.0));
                }
            }
            match (s.kind, &s.dynamics.y0) {
                (Kind::Replicator, Some(_)) => push("dynamics.y0: only used by bimatrix scenarios".into()),
                (Kind::Bimatrix, Some(y0)) if Some(y0.len()) != want.1 => {
                    push(format!("dynamics.y0: {} shares for {} strategies", y0.len(), want.1.unwrap_or(0)))
                }
                _ => {}
            }
        }
        Kind::Moran => {
            if let Some(Ok(m)) = game.map(GameSpec::bimatrix) {
                if m.rows() != 2 || m.cols() != 2 || !m.symmetric {
                    push("game: moran scenarios need a symmetric 2-strategy game".into());
                }
            }
        }
        Kind::Attrition => {
            if let Some(g) = game {
                if g.attrition_costs().is_none() {
                    push("game: attrition scenarios need game.type = \"attrition\"".into());
                }
            }
        }
        Kind::IpdTournament => {
            if let Some(g) = game {
                if !matches!(g, GameSpec::IpdStage(_)) {
                    push("game: tournaments need game.type = \"ipd-stage\"".into());
                }
            }
            let ecological = s.tournament.as_ref().is_some_and(|t| t.ecological);
            if !ecological && (s.dynamics.x0.is_some() || s.dynamics.y0.is_some()) {
                push("dynamics: initial states are set with tournament.initial".into());
            }
        }
        Kind::Ess => {
            let (Some(g), Some(e)) = (game, &s.ess) else { return };
            if let (Some(c), Ok(m)) = (&e.candidate, g.bimatrix()) {
                if c.len() != m.rows() {
                    push(format!("ess.candidate: {} entries for {} strategies", c.len(), m.rows()));
                }
                if !m.symmetric {
                    push("game: ESS checks need a symmetric game".into());
                }
            }
        }
        Kind::Preset => {}
    }
}

/// Strictly parses a scenario document.
pub fn parse(doc: &Value) -> Result<Scenario, Vec<String>> {
    let diags = RefCell::new(Vec::new());
    let Some(root) = Table::new("", doc, &diags) else {
        return Err(diags.into_inner());
    };
    match root.u64("schema_version") {
        Some(SCHEMA_VERSION) => {}
        Some(v) => root.error(format!("schema_version: unsupported version {v} (expected {SCHEMA_VERSION})")),
        None if !root.map.contains_key("schema_version") => root.error("schema_version: missing required key".into()),
        None => {}
    }
    let kind = match root.str("kind") {
        Some(k) => match Kind::parse(k) {
            Some(kind) => Some(kind),
            None => {
                let valid: Vec<&str> = Kind::ALL.iter().map(|(n, _)| *n).collect();
                root.error(format!("kind: unknown kind {k:?} (expected one of {})", valid.join(", ")));
                None
            }
        },
        None => {
            if !root.map.contains_key("kind") {
                root.error("kind: missing required key".into());
            }
            None
        }
    };
    let seed = root.u64("seed");
    let output_dir = root.str("output_dir").map(PathBuf::from);
    let plot = root.bool("plot").unwrap_or(false);

    const BLOCKS: [&str; 7] = ["game", "dynamics", "moran", "contest", "tournament", "ess", "preset"];
    if let Some(kind) = kind {
        let (allowed, required) = kind.blocks();
        for b in BLOCKS {
            let present = root.map.contains_key(b);
            if required.contains(&b) && !present {
                root.error(format!("{b}: block required for kind {:?}", kind.name()));
            }
            if present && !allowed.contains(&b) {
                root.error(format!("{b}: block not used by kind {:?}", kind.name()));
            }
        }
    }

    let game = root.sub("game").and_then(parse_game);
    let stage = game.as_ref().map(GameSpec::stage).unwrap_or_default();
    let dynamics = parse_dynamics(root.sub("dynamics"));
    let moran = root.sub("moran").and_then(parse_moran);
    let contest = root.sub("contest").and_then(parse_contest);
    let tournament = root.sub("tournament").and_then(|t| parse_tournament(t, stage));
    let ess = root.map.contains_key("ess").then(|| parse_ess(root.sub("ess")));
    let preset = root.sub("preset").and_then(parse_preset);
    root.finish();

    let Some(kind) = kind else {
        return Err(diags.into_inner());
    };
    let scenario = Scenario {
        kind,
        seed: seed.unwrap_or(0),
        seed_given: seed.is_some(),
        output_dir,
        plot,
        game,
        dynamics,
        moran,
        contest,
        tournament,
        ess: ess.or_else(|| (kind == Kind::Ess).then(|| parse_ess(None))),
        preset,
    };
    validate_kind_specifics(&scenario, &diags);
    let diags = diags.into_inner();
    if diags.is_empty() {
        Ok(scenario)
    } else {
        Err(diags)
    }
}

/// Validates a scenario file; returns the diagnostics (empty when clean).
pub fn validate_file(path: &Path) -> Result<Vec<String>, CliError> {
    let doc = match load(path) {
        Ok(d) => d,
        Err(CliError::Invalid(d)) => return Ok(d),
        Err(e) => return Err(e),
    };
    Ok(parse(&doc).err().unwrap_or_default())
}
