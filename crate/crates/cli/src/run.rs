//! Scenario execution and artifact layout.

use std::path::{Path, PathBuf};
use std::time::Instant;

use egt_core::dynamics::{integrate_bimatrix, integrate_replicator, Trajectory};
use egt_core::equilibria::{attrition_ess, attrition_pure_payoff, hawk_dove_ess, is_ess, solve_2x2, ProfileKind};
use egt_core::stochastic::{mean_and_se, moran_simulate, persistence_grid, simulate_contests, Contestant, MoranConfig, PersistenceStrategy};
use egt_core::tournament::{ecological_tournament, round_robin, run_preset, LabelledTrajectory, MatchConfig};
use egt_core::{Matrix, MixedStrategy, PayoffBimatrix};
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::output::{contests_csv, json_string, scores_csv, trajectory_csv, trajectory_svg};
use crate::scenario::{self, GameSpec, Kind, PersistenceSpec, Scenario};

pub const DEFAULT_OUTPUT_DIR: &str = "egt-out";
pub const MANIFEST: &str = "manifest.json";

/// Every artifact a run may produce besides the manifest.
pub const ARTIFACTS: [&str; 5] = ["trajectory.csv", "trajectory.svg", "scores.csv", "contests.csv", "summary.json"];

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub artifacts: Vec<String>,
    pub summary: Value,
}

/// In-memory results of a run, written out only once everything succeeded.
struct Artifacts {
    files: Vec<(&'static str, Vec<u8>)>,
    summary: Value,
    resolved: Value,
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("library types serialize")
}

fn state_value(x: &MixedStrategy) -> Value {
    to_value(&x.probs())
}

fn labelled(name: &str, populations: &[&str], labels_x: Vec<String>, labels_y: Option<Vec<String>>, trajectory: Trajectory) -> LabelledTrajectory {
    LabelledTrajectory {
        name: name.into(),
        populations: populations.iter().map(|p| p.to_string()).collect(),
        labels_x,
        labels_y,
        trajectory,
    }
}

fn game_of(s: &Scenario) -> Result<PayoffBimatrix, CliError> {
    Ok(s.game.as_ref().expect("validated scenario has a game").bimatrix()?)
}

fn start(x0: &Option<Vec<f64>>, n: usize) -> Result<MixedStrategy, CliError> {
    Ok(match x0 {
        Some(v) => MixedStrategy::new(v.clone())?,
        None => MixedStrategy::uniform(n),
    })
}

fn trajectory_files(s: &Scenario, trajectories: &[LabelledTrajectory], files: &mut Vec<(&'static str, Vec<u8>)>) {
    files.push(("trajectory.csv", trajectory_csv(trajectories)));
    if s.plot {
        files.push(("trajectory.svg", trajectory_svg(trajectories).into_bytes()));
    }
}

fn dynamics_resolved(s: &Scenario, x0: &MixedStrategy, y0: Option<&MixedStrategy>) -> Value {
    let mut d = to_value(&s.dynamics.config);
    d["x0"] = state_value(x0);
    if let Some(y) = y0 {
        d["y0"] = state_value(y);
    }
    d
}

fn run_replicator(s: &Scenario) -> Result<Artifacts, CliError> {
    let game = game_of(s)?;
    let x0 = start(&s.dynamics.x0, game.rows())?;
    let tr = integrate_replicator(&game.a, &x0, &s.dynamics.config)?;
    let last = tr.final_x().clone();
    let mut summary = json!({
        "kind": "replicator",
        "labels": game.labels,
        "final_state": state_value(&last),
        "final_time": tr.final_time(),
        "converged": tr.converged,
        "final_residual": tr.final_residual,
    });
    match s.game.as_ref().unwrap() {
        GameSpec::HawkDove(p) => summary["ess"] = to_value(&is_ess(&game.a, &hawk_dove_ess(*p)?, egt_core::DEFAULT_TOL)?),
        GameSpec::Attrition { v, c, bins: Some(bins), t_max: Some(t_max), .. } => {
            let grid = persistence_grid(*bins, *t_max)?;
            summary["mean_persistence"] = json!(last.mean_of(&grid));
            summary["ess_mean_persistence"] = json!(attrition_ess(*v, *c)?.mean);
        }
        _ => {}
    }
    let mut files = Vec::new();
    let resolved = json!({ "dynamics": dynamics_resolved(s, &x0, None) });
    trajectory_files(s, &[labelled("replicator", &["x"], game.labels.clone(), None, tr)], &mut files);
    Ok(Artifacts { files, summary, resolved })
}

fn run_bimatrix(s: &Scenario) -> Result<Artifacts, CliError> {
    let game = game_of(s)?;
    let x0 = start(&s.dynamics.x0, game.rows())?;
    let y0 = start(&s.dynamics.y0, game.cols())?;
    let tr = integrate_bimatrix(&game.a, &game.b, &x0, &y0, &s.dynamics.config)?;
    let mut summary = json!({
        "kind": "bimatrix",
        "labels": game.labels,
        "final_row": state_value(tr.final_x()),
        "final_col": state_value(tr.final_y().expect("two-population run")),
        "final_time": tr.final_time(),
        "converged": tr.converged,
        "final_residual": tr.final_residual,
    });
    if game.rows() == 2 && game.cols() == 2 {
        summary["equilibria"] = to_value(&solve_2x2(&game)?);
    }
    let mut files = Vec::new();
    let resolved = json!({ "dynamics": dynamics_resolved(s, &x0, Some(&y0)) });
    let labels = game.labels.clone();
    trajectory_files(s, &[labelled("bimatrix", &["row", "col"], labels.clone(), Some(labels), tr)], &mut files);
    Ok(Artifacts { files, summary, resolved })
}

/// Closed-form fixation probability when both rows of the game are constant,
/// so that relative fitness does not depend on composition.
fn constant_fitness_fixation(a: &Matrix, w: f64, n: usize, i: usize) -> Option<(f64, f64)> {
    if a.get(0, 0) != a.get(0, 1) || a.get(1, 0) != a.get(1, 1) {
        return None;
    }
    let fm = 1.0 - w + w * a.get(0, 0);
    let fr = 1.0 - w + w * a.get(1, 0);
    if !(fm > 0.0 && fr > 0.0) {
        return None;
    }
    let r = fm / fr;
    let rho = if r == 1.0 {
        i as f64 / n as f64
    } else {
        (1.0 - r.powi(-(i as i32))) / (1.0 - r.powi(-(n as i32)))
    };
    Some((r, rho))
}

fn run_moran(s: &Scenario) -> Result<Artifacts, CliError> {
    let game = game_of(s)?;
    let m = s.moran.as_ref().expect("validated moran block");
    let cfg = MoranConfig {
        n: m.n,
        selection_intensity: m.selection_intensity,
        max_steps: m.max_steps,
        trials: m.trials,
        seed: s.seed,
    };
    let est = moran_simulate(&game.a, &cfg, m.initial_mutants)?;
    let mut summary = json!({
        "kind": "moran",
        "mutant": game.labels.first(),
        "initial_mutants": m.initial_mutants,
        "fixation": to_value(&est),
    });
    if m.selection_intensity == 0.0 {
        summary["neutral_fixation"] = json!(m.initial_mutants as f64 / m.n as f64);
    } else if let Some((r, rho)) = constant_fitness_fixation(&game.a, m.selection_intensity, m.n, m.initial_mutants) {
        summary["relative_fitness"] = json!(r);
        summary["analytic_fixation"] = json!(rho);
    }
    let resolved = json!({ "moran": to_value(&cfg), "initial_mutants": m.initial_mutants });
    Ok(Artifacts { files: vec![], summary, resolved })
}

fn run_attrition(s: &Scenario) -> Result<Artifacts, CliError> {
    let (v, c_a, c_b) = s.game.as_ref().and_then(GameSpec::attrition_costs).expect("validated attrition game");
    let spec = s.contest.as_ref().expect("validated contest block");
    let resolve = |p: PersistenceSpec, c: f64| -> Result<PersistenceStrategy, CliError> {
        Ok(match p {
            PersistenceSpec::Ess => PersistenceStrategy::Exponential(attrition_ess(v, c)?.rate),
            PersistenceSpec::Fixed(f) => f,
        })
    };
    let (sa, sb) = (resolve(spec.strategy_a, c_a)?, resolve(spec.strategy_b, c_b)?);
    let outcomes = simulate_contests(&sa, &sb, v, c_a, c_b, spec.trials, s.seed)?;
    let (mean_a, se_a) = mean_and_se(outcomes.iter().map(|o| o.payoff_a));
    let (mean_b, se_b) = mean_and_se(outcomes.iter().map(|o| o.payoff_b));
    let (mean_d, se_d) = mean_and_se(outcomes.iter().map(|o| o.duration));
    let wins_a = outcomes.iter().filter(|o| o.winner == Contestant::A).count();
    let summary = json!({
        "kind": "attrition",
        "trials": spec.trials,
        "ess_a": to_value(&attrition_ess(v, c_a)?),
        "ess_b": to_value(&attrition_ess(v, c_b)?),
        "payoff_a": { "mean": mean_a, "std_error": se_a },
        "payoff_b": { "mean": mean_b, "std_error": se_b },
        "duration": { "mean": mean_d, "std_error": se_d },
        "win_rate_a": wins_a as f64 / spec.trials as f64,
    });
    let resolved = json!({
        "contest": { "v": v, "c_a": c_a, "c_b": c_b, "strategy_a": to_value(&sa), "strategy_b": to_value(&sb), "trials": spec.trials, "seed": s.seed },
    });
    Ok(Artifacts { files: vec![("contests.csv", contests_csv(&outcomes))], summary, resolved })
}

fn run_tournament(s: &Scenario) -> Result<Artifacts, CliError> {
    let t = s.tournament.as_ref().expect("validated tournament block");
    let stage = s.game.as_ref().map(GameSpec::stage).unwrap_or_default();
    let mcfg = MatchConfig { rounds: t.rounds, noise: t.noise, seed: s.seed };
    let table = round_robin(&t.roster, &mcfg, stage)?;
    let mut summary = json!({
        "kind": "ipd-tournament",
        "roster": table.roster,
        "totals": table.totals,
        "mean_per_round": table.mean_per_round(),
        "pairwise": table.pairwise,
    });
    let mut files = vec![("scores.csv", scores_csv(&table))];
    let mut resolved = json!({
        "stage": to_value(&stage),
        "match": to_value(&mcfg),
        "roster": t.roster.iter().map(|e| json!({ "name": e.name, "strategy": e.strategy.to_string() })).collect::<Vec<_>>(),
        "ecological": t.ecological,
    });
    if t.ecological {
        let x0 = start(&t.initial, t.roster.len())?;
        let eco = ecological_tournament(&t.roster, &mcfg, stage, &s.dynamics.config, Some(&x0))?;
        let last = eco.trajectory.final_x().clone();
        summary["ecological"] = json!({
            "final_shares": state_value(&last),
            "initial_cooperation": eco.cooperation_rate(&x0),
            "final_cooperation": eco.cooperation_rate(&last),
            "converged": eco.trajectory.converged,
            "final_residual": eco.trajectory.final_residual,
            "payoff": eco.payoff.to_rows(),
        });
        resolved["dynamics"] = dynamics_resolved(s, &x0, None);
        trajectory_files(s, &[labelled("ecological", &["population"], eco.labels, None, eco.trajectory)], &mut files);
    }
    Ok(Artifacts { files, summary, resolved })
}

fn run_ess(s: &Scenario) -> Result<Artifacts, CliError> {
    let spec = s.game.as_ref().expect("validated game");
    let e = s.ess.as_ref().expect("ess block defaults");
    if let GameSpec::Attrition { v, c, c_b, .. } = *spec {
        let ess = attrition_ess(v, c)?;
        let grid = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0];
        let payoffs: Vec<Value> = grid
            .iter()
            .map(|&m| Ok(json!({ "m": m, "payoff": attrition_pure_payoff(m, &ess, v, c)? })))
            .collect::<Result<_, CliError>>()?;
        let mut summary = json!({ "kind": "ess", "attrition_ess": to_value(&ess), "pure_payoffs_against_ess": payoffs });
        if let Some(cb) = c_b {
            summary["attrition_ess_b"] = to_value(&attrition_ess(v, cb)?);
        }
        return Ok(Artifacts { files: vec![], summary, resolved: json!({ "v": v, "c": c }) });
    }
    let game = spec.bimatrix()?;
    let mut candidates: Vec<MixedStrategy> = Vec::new();
    if let Some(c) = &e.candidate {
        candidates.push(MixedStrategy::new(c.clone())?);
    } else {
        if let GameSpec::HawkDove(p) = spec {
            candidates.push(hawk_dove_ess(*p)?);
        }
        for i in 0..game.rows() {
            candidates.push(MixedStrategy::pure(game.rows(), i));
        }
    }
    let reports: Vec<Value> = candidates
        .iter()
        .map(|c| Ok(to_value(&is_ess(&game.a, c, e.tol)?)))
        .collect::<Result<_, CliError>>()?;
    let mut summary = json!({ "kind": "ess", "labels": game.labels, "tol": e.tol, "reports": reports });
    if game.rows() == 2 && game.cols() == 2 {
        let eq = solve_2x2(&game)?;
        summary["mixed_equilibria"] = json!(eq.profiles.iter().filter(|p| p.kind == ProfileKind::Mixed).count());
        summary["equilibria"] = to_value(&eq);
    }
    let resolved = json!({ "candidates": candidates.iter().map(state_value).collect::<Vec<_>>(), "tol": e.tol });
    Ok(Artifacts { files: vec![], summary, resolved })
}

fn run_preset_kind(s: &Scenario) -> Result<Artifacts, CliError> {
    let p = s.preset.as_ref().expect("validated preset block");
    let mut overrides = p.overrides.clone();
    if s.seed_given && p.preset.defaults().keys().contains(&"seed") && !overrides.iter().any(|(k, _)| k == "seed") {
        overrides.push(("seed".into(), s.seed.to_string()));
    }
    let report = run_preset(p.preset, &overrides)?;
    let mut files = Vec::new();
    trajectory_files(s, &report.trajectories, &mut files);
    if let Some(table) = &report.scores {
        files.push(("scores.csv", scores_csv(table)));
    }
    let mut summary = json!({ "kind": "preset" });
    if let Value::Object(m) = to_value(&report) {
        summary.as_object_mut().unwrap().extend(m);
    }
    let resolved = json!({ "preset": report.preset, "parameters": to_value(&report.parameters) });
    Ok(Artifacts { files, summary, resolved })
}

fn execute(s: &Scenario) -> Result<Artifacts, CliError> {
    match s.kind {
        Kind::Replicator => run_replicator(s),
        Kind::Bimatrix => run_bimatrix(s),
        Kind::Moran => run_moran(s),
        Kind::Attrition => run_attrition(s),
        Kind::IpdTournament => run_tournament(s),
        Kind::Ess => run_ess(s),
        Kind::Preset => run_preset_kind(s),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_manifest(dir: &Path, manifest: &Value) -> Result<(), CliError> {
    let path = dir.join(MANIFEST);
    std::fs::write(&path, json_string(manifest)).map_err(|e| io_err(&path, e))
}

/// Validates and runs a scenario document, writing artifacts into the output
/// directory. `opts.seed` replaces the document's seed before validation, so
/// the manifest echo reproduces the run.
pub fn run_document(mut doc: Value, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    if let (Some(seed), Value::Object(map)) = (opts.seed, &mut doc) {
        map.insert("seed".into(), json!(seed));
    }
    let scenario = scenario::parse(&doc).map_err(CliError::Invalid)?;
    let out_dir = opts
        .out
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    std::fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;

    let mut manifest = Map::new();
    manifest.insert("version".into(), json!(egt_core::VERSION));
    manifest.insert("schema_version".into(), json!(scenario::SCHEMA_VERSION));
    manifest.insert("kind".into(), json!(scenario.kind.name()));
    manifest.insert("scenario".into(), doc.clone());

    let result = execute(&scenario).and_then(|art| {
        let mut written = Vec::new();
        let files = art.files.iter().map(|(n, b)| (*n, b.clone())).chain([("summary.json", json_string(&art.summary).into_bytes())]);
        for (name, bytes) in files {
            let path = out_dir.join(name);
            if let Err(e) = std::fs::write(&path, bytes) {
                remove_all(&out_dir, &written);
                return Err(io_err(&path, e));
            }
            written.push(name.to_string());
        }
        Ok((art, written))
    });

    let elapsed = started.elapsed().as_secs_f64();
    let mut resolved_base = json!({
        "seed": scenario.seed,
        "output_dir": out_dir.display().to_string(),
        "threads": rayon::current_num_threads(),
    });
    match result {
        Ok((art, written)) => {
            if let (Value::Object(base), Value::Object(extra)) = (&mut resolved_base, art.resolved) {
                base.extend(extra);
            }
            let mut listed = written.clone();
            listed.push(MANIFEST.into());
            manifest.insert("status".into(), json!("ok"));
            manifest.insert("error".into(), Value::Null);
            manifest.insert("resolved".into(), resolved_base);
            manifest.insert("artifacts".into(), json!(listed));
            manifest.insert("wall_clock_seconds".into(), json!(elapsed));
            if let Err(e) = write_manifest(&out_dir, &Value::Object(manifest)) {
                remove_all(&out_dir, &written);
                return Err(e);
            }
            Ok(RunOutcome { out_dir, artifacts: listed, summary: art.summary })
        }
        Err(err) => {
            remove_all(&out_dir, &ARTIFACTS);
            manifest.insert("status".into(), json!("error"));
            manifest.insert("error".into(), json!(err.to_string()));
            manifest.insert("exit_code".into(), json!(err.exit_code()));
            manifest.insert("resolved".into(), resolved_base);
            manifest.insert("artifacts".into(), json!([MANIFEST]));
            manifest.insert("wall_clock_seconds".into(), json!(elapsed));
            let _ = write_manifest(&out_dir, &Value::Object(manifest));
            Err(err)
        }
    }
}

fn remove_all(dir: &Path, names: &[impl AsRef<Path>]) {
    for n in names {
        let _ = std::fs::remove_file(dir.join(n));
    }
}

/// Loads, validates and runs a scenario file.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    run_document(scenario::load(path)?, opts)
}

/// The scenario document equivalent to `egt preset <name> --set k=v ...`.
pub fn preset_document(name: &str, overrides: &[(String, String)]) -> Value {
    let o: Map<String, Value> = overrides.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({ "schema_version": scenario::SCHEMA_VERSION, "kind": "preset", "preset": { "name": name, "overrides": o } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_fitness_formula() {
        let a = Matrix::from_rows(vec![vec![2.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let (r, rho) = constant_fitness_fixation(&a, 1.0, 10, 1).unwrap();
        assert_eq!(r, 2.0);
        assert!((rho - 0.5 / (1.0 - 2f64.powi(-10))).abs() < 1e-15);
        let b = Matrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(constant_fitness_fixation(&b, 1.0, 10, 1).is_none());
    }
}
