//! Subcommand implementations. Each replicate writes under its own
//! directory; the top-level summary is written last, atomically.

use std::path::{Path, PathBuf};
use std::time::Instant;

use moderator_core::behavior::{
    AgentPopulation, FeedbackRecord, IdealOracle, QuantalOracle, QueryRecord, RecordingOracle,
    ReplayOracle, ReplayResponses, ResponseModel, SampledOracle,
};
use moderator_core::ce::{round_regret, solve_ce, RegretLedger, StackedLayout, StackedParameter};
use moderator_core::cutting::{normalized_game, run_low_regret, LowRegretConfig};
use moderator_core::learn::{self, alignment_error, learn_game, GameRecovery, LearnConfig};
use moderator_core::polyhedral::{
    br_indistinguishable, check_equivalence, BrCertificate, BrMode, BrVerdict, EquivalenceReport,
};
use moderator_core::{seed, Game, Mechanism, DEFAULT_TOL};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{BrModeKind, ExperimentConfig, FixedMechanism, Mode, ModelKind, OracleKind};
use crate::error::{CliError, CliResult};
use crate::gamefile::game_json;
use crate::json;
use crate::transcript::{ledger_csv, ledger_to_csv, read_jsonl, to_jsonl, QueryLine, RoundLine};

const GAME_STREAM: u64 = 0;
const BEHAVIOR_STREAM: u64 = 1;
const CUTTING_STREAM: u64 = 2;
const CHECK_STREAM: u64 = 3;
const SIMULATE_STREAM: u64 = 4;

pub const SUMMARY: &str = "summary.json";
pub const TRANSCRIPT: &str = "transcript.jsonl";
pub const LEDGER: &str = "ledger.csv";
pub const MEAN_LEDGER: &str = "ledger_mean.csv";
pub const RECOVERED: &str = "recovered_game.json";

/// Files written by one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateArtifacts {
    pub transcript: PathBuf,
    pub ledger: Option<PathBuf>,
    pub recovered_game: Option<PathBuf>,
    pub summary: PathBuf,
}

/// Files written by a run, and the top-level summary as written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub summary_path: PathBuf,
    pub summary: Value,
    pub replicates: Vec<ReplicateArtifacts>,
}

pub fn replicate_dir(root: &Path, r: usize) -> PathBuf {
    root.join(format!("replicate-{r:03}"))
}

fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = json::to_string(value).map_err(anyhow::Error::from)?;
    text.push('\n');
    write_atomic(path, &text)
}

fn load_game(cfg: &ExperimentConfig, r: usize) -> CliResult<Game> {
    cfg.game
        .load(&mut seed::stream(cfg.seed, &[r as u64, GAME_STREAM]))
}

fn stream_seed(cfg: &ExperimentConfig, r: usize, module: u64) -> u64 {
    seed::derive_seed(cfg.seed, &[r as u64, module])
}

/// Runs `job` on every replicate in parallel; results keep replicate order.
fn replicates<T: Send>(
    cfg: &ExperimentConfig,
    job: impl Fn(usize) -> CliResult<T> + Sync + Send,
) -> CliResult<Vec<T>> {
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| job(r).map_err(|e| e.context(&format!("replicate {r}"))))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn finish(
    cfg: &ExperimentConfig,
    dir: PathBuf,
    started: Instant,
    mut summary: Value,
    replicates: Vec<ReplicateArtifacts>,
) -> CliResult<RunArtifacts> {
    summary["command"] = json!(cfg.mode.map_or("run", Mode::name));
    summary["config"] = serde_json::to_value(cfg).map_err(anyhow::Error::from)?;
    summary["wall_time_seconds"] = json!(started.elapsed().as_secs_f64());
    let summary_path = dir.join(SUMMARY);
    write_json(&summary_path, &summary)?;
    Ok(RunArtifacts {
        dir,
        summary_path,
        summary,
        replicates,
    })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Rejects games with a weakly dominated or duplicate action.
pub fn check_learnable(game: &Game) -> CliResult<()> {
    if game.has_mixed_sign_differences(DEFAULT_TOL) {
        return Ok(());
    }
    let detail = match game.detect_weak_dominance(DEFAULT_TOL).first() {
        Some(d) => format!(
            "agent {} action {} is weakly dominated by action {}",
            d.agent, d.dominated, d.dominating
        ),
        None => "some agent has two actions with identical utilities".into(),
    };
    Err(CliError::Precondition(format!("weak dominance: {detail}")))
}

fn record_oracle<O: QuantalOracle>(
    oracle: O,
    game: &Game,
    config: &LearnConfig,
) -> (moderator_core::Result<GameRecovery>, Vec<QueryRecord>, O) {
    let mut rec = RecordingOracle::new(oracle);
    let out = learn_game(&mut rec, game.indexing(), config);
    let (inner, records) = rec.into_parts();
    (out, records, inner)
}

/// Largest utility difference between two actions of one agent.
fn difference_spread(game: &Game) -> f64 {
    let ix = game.indexing();
    let mut c = 0.0f64;
    for agent in 0..ix.agent_count() {
        for a in 0..ix.actions(agent) {
            for b in 0..ix.actions(agent) {
                if a != b {
                    let w = game.difference_vector(agent, a, b).expect("in range");
                    c = w.values.iter().fold(c, |m, v| m.max(v.abs()));
                }
            }
        }
    }
    c
}

pub fn learn_qr(cfg: &ExperimentConfig) -> CliResult<RunArtifacts> {
    let started = Instant::now();
    if cfg.model != ModelKind::Quantal {
        return Err(CliError::Precondition(
            "learn-qr needs quantal-response feedback".into(),
        ));
    }
    let dir = cfg.output_path();
    let lc = LearnConfig {
        eps: cfg.eps,
        ratio_cap: cfg.ratio_cap,
        scale_solver: cfg.scale_solver(),
        ..LearnConfig::default()
    };
    let results = replicates(cfg, |r| {
        let game = load_game(cfg, r)?;
        check_learnable(&game)?;
        let ix = game.indexing();
        let (outcome, records, samples_used) = match (&cfg.replay, cfg.oracle) {
            (Some(prev), _) => {
                let lines: Vec<QueryLine> = read_jsonl(&replicate_dir(prev, r).join(TRANSCRIPT))?;
                let recorded = lines
                    .iter()
                    .map(QueryLine::to_record)
                    .collect::<CliResult<Vec<_>>>()?;
                let (o, rec, _) = record_oracle(ReplayOracle::new(recorded), &game, &lc);
                (o, rec, None)
            }
            (None, OracleKind::Ideal) => {
                let (o, rec, _) = record_oracle(IdealOracle::new(game.clone()), &game, &lc);
                (o, rec, None)
            }
            (None, OracleKind::Sampled) => {
                let pop = AgentPopulation::new(
                    game.clone(),
                    cfg.behavior(),
                    stream_seed(cfg, r, BEHAVIOR_STREAM),
                )?
                .with_difference_cap(difference_spread(&game))?;
                let per_query =
                    cfg.delta / learn::planned_set_queries(ix, cfg.eps, cfg.ratio_cap) as f64;
                let (o, rec, inner) =
                    record_oracle(SampledOracle::new(pop, per_query)?, &game, &lc);
                (o, rec, Some(inner.samples_used()))
            }
        };
        let rdir = replicate_dir(&dir, r);
        let transcript = rdir.join(TRANSCRIPT);
        let lines: Vec<QueryLine> = records
            .iter()
            .enumerate()
            .map(|(i, q)| QueryLine::new(i, q))
            .collect();
        write_atomic(&transcript, &to_jsonl(&lines))?;
        let recovery = outcome?;
        let recovered_game = rdir.join(RECOVERED);
        write_atomic(&recovered_game, &(game_json(&recovery.game) + "\n"))?;

        let alignment = (0..ix.agent_count())
            .map(|i| alignment_error(&recovery.game, &game, i))
            .collect::<moderator_core::Result<Vec<f64>>>()?;
        let worst = alignment.iter().copied().fold(0.0, f64::max);
        let shape = learn::budget_shape(ix, cfg.eps, cfg.ratio_cap);
        let mechanisms = recovery.queries.mechanisms;
        let within_budget = mechanisms as f64 <= cfg.c0 * shape;
        let flagged: usize = recovery
            .agents
            .iter()
            .flat_map(|a| a.estimates.pairs.values())
            .map(|p| p.flagged.len())
            .sum();
        let summary = json!({
            "replicate": r,
            "queries": {"mechanisms": mechanisms, "set_queries": recovery.queries.set_queries},
            "query_budget": learn::query_budget(ix, cfg.eps, cfg.ratio_cap),
            "budget_shape": shape,
            "c0_observed": mechanisms as f64 / shape,
            "c0_bound": cfg.c0,
            "within_budget": within_budget,
            "alignment_error": alignment,
            "max_alignment_error": worst,
            "reconciliation_residual": recovery.agents.iter().map(|a| a.reconciliation.residual).collect::<Vec<_>>(),
            "flagged_components": flagged,
            "samples_used": samples_used,
            "pass": worst <= cfg.alignment_tol && within_budget,
        });
        let summary_path = rdir.join(SUMMARY);
        write_json(&summary_path, &summary)?;
        Ok((
            ReplicateArtifacts {
                transcript,
                ledger: None,
                recovered_game: Some(recovered_game),
                summary: summary_path,
            },
            summary,
        ))
    })?;
    let (artifacts, summaries): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let worst: Vec<f64> = summaries
        .iter()
        .map(|s| s["max_alignment_error"].as_f64().unwrap_or(f64::NAN))
        .collect();
    let c0: Vec<f64> = summaries
        .iter()
        .map(|s| s["c0_observed"].as_f64().unwrap_or(f64::NAN))
        .collect();
    let summary = json!({
        "pass": summaries.iter().all(|s| s["pass"] == json!(true)),
        "passed_replicates": summaries.iter().filter(|s| s["pass"] == json!(true)).count(),
        "max_alignment_error": worst.iter().copied().fold(0.0, f64::max),
        "c0_observed_max": c0.iter().copied().fold(0.0, f64::max),
        "replicates": summaries,
    });
    finish(cfg, dir, started, summary, artifacts)
}

fn response_model(
    cfg: &ExperimentConfig,
    r: usize,
    truth: &Game,
) -> CliResult<Box<dyn ResponseModel>> {
    Ok(match &cfg.replay {
        Some(prev) => {
            let lines: Vec<RoundLine> = read_jsonl(&replicate_dir(prev, r).join(TRANSCRIPT))?;
            Box::new(ReplayResponses::new(
                lines.iter().map(|l| (l.round, l.recommended, l.realized)),
            ))
        }
        None => Box::new(AgentPopulation::new(
            truth.clone(),
            cfg.behavior(),
            stream_seed(cfg, r, BEHAVIOR_STREAM),
        )?),
    })
}

fn regret_summary(
    r: usize,
    ledger: &RegretLedger,
    dimension: usize,
    cuts: usize,
    norm: f64,
) -> Value {
    let t = ledger.rounds();
    let decile = (t / 10).max(1);
    let log_t = (t.max(2) as f64).ln();
    json!({
        "replicate": r,
        "rounds": t,
        "total_regret": ledger.total(),
        "first_decile_mean": ledger.window_mean(0..decile),
        "last_decile_mean": ledger.window_mean(t.saturating_sub(decile)..t),
        "regret_per_n_log_t": ledger.total() / (dimension as f64 * log_t),
        "cuts": cuts,
        "dimension": dimension,
        "utility_norm": norm,
    })
}

fn aggregate(dir: &Path, ledgers: &[RegretLedger], summaries: Vec<Value>) -> CliResult<Value> {
    let rounds = ledgers.iter().map(RegretLedger::rounds).min().unwrap_or(0);
    let n = ledgers.len() as f64;
    let mean_at = |f: &dyn Fn(&RegretLedger) -> &[f64]| -> Vec<f64> {
        (0..rounds)
            .map(|t| ledgers.iter().map(|l| f(l)[t]).sum::<f64>() / n)
            .collect()
    };
    let regrets = mean_at(&|l| l.regrets());
    let cumulative = mean_at(&|l| l.cumulative());
    write_atomic(&dir.join(MEAN_LEDGER), &ledger_csv(&regrets, &cumulative))?;
    let field = |k: &str| {
        summaries
            .iter()
            .map(|s| s[k].as_f64().unwrap_or(f64::NAN))
            .collect::<Vec<_>>()
    };
    let stat = |k: &str| {
        let (m, sd) = mean_sd(&field(k));
        json!({"mean": m, "sd": sd})
    };
    Ok(json!({
        "total_regret": stat("total_regret"),
        "first_decile_mean": stat("first_decile_mean"),
        "last_decile_mean": stat("last_decile_mean"),
        "regret_per_n_log_t": stat("regret_per_n_log_t"),
        "replicates": summaries,
    }))
}

pub fn recommend(cfg: &ExperimentConfig) -> CliResult<RunArtifacts> {
    let started = Instant::now();
    let dir = cfg.output_path();
    let results = replicates(cfg, |r| {
        let game = load_game(cfg, r)?;
        let norm = StackedParameter::from_game(&game).norm();
        let truth = normalized_game(&game)?;
        let mut responses = response_model(cfg, r, &truth)?;
        let lrc = LowRegretConfig::new(cfg.rounds, stream_seed(cfg, r, CUTTING_STREAM));
        let (run, failure) = match run_low_regret(responses.as_mut(), &truth, &lrc) {
            Ok(run) => (run, None),
            Err(aborted) => (aborted.partial, Some(aborted.error)),
        };
        let rdir = replicate_dir(&dir, r);
        let lines: Vec<RoundLine> = run.transcript.iter().map(RoundLine::from).collect();
        let transcript = rdir.join(TRANSCRIPT);
        let ledger = rdir.join(LEDGER);
        write_atomic(&transcript, &to_jsonl(&lines))?;
        write_atomic(&ledger, &ledger_to_csv(&run.ledger))?;
        if let Some(err) = failure {
            return Err(CliError::Internal(
                anyhow::Error::new(err).context("run aborted; transcript kept"),
            ));
        }
        let dimension = StackedLayout::new(truth.indexing().clone()).len();
        let summary = regret_summary(r, &run.ledger, dimension, run.knowledge.cuts().len(), norm);
        let summary_path = rdir.join(SUMMARY);
        write_json(&summary_path, &summary)?;
        Ok((
            ReplicateArtifacts {
                transcript,
                ledger: Some(ledger),
                recovered_game: None,
                summary: summary_path,
            },
            (run.ledger, summary),
        ))
    })?;
    let (artifacts, rest): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let (ledgers, summaries): (Vec<_>, Vec<_>) = rest.into_iter().unzip();
    let summary = aggregate(&dir, &ledgers, summaries)?;
    finish(cfg, dir, started, summary, artifacts)
}

/// Plays one fixed mechanism for `rounds` rounds.
pub fn simulate(cfg: &ExperimentConfig) -> CliResult<RunArtifacts> {
    let started = Instant::now();
    let dir = cfg.output_path();
    let results = replicates(cfg, |r| {
        let game = load_game(cfg, r)?;
        let norm = StackedParameter::from_game(&game).norm();
        let truth = normalized_game(&game)?;
        let x = match cfg.mechanism {
            FixedMechanism::Ce => solve_ce(&StackedParameter::from_game(&truth))?,
            FixedMechanism::Uniform => Mechanism::uniform(truth.indexing().profile_count()),
        };
        let pick = WeightedIndex::new(x.probs()).map_err(anyhow::Error::from)?;
        let mut responses = response_model(cfg, r, &truth)?;
        let sim_seed = stream_seed(cfg, r, SIMULATE_STREAM);
        let mut ledger = RegretLedger::new();
        let mut lines = Vec::with_capacity(cfg.rounds as usize);
        let digest = crate::transcript::mechanism_digest(&x);
        for round in 0..cfg.rounds {
            let recommended = pick.sample(&mut seed::stream(sim_seed, &[round]));
            let realized = responses.respond(&x, recommended, round)?;
            let fb = FeedbackRecord {
                mechanism: x.clone(),
                recommended,
                realized,
                round,
            };
            let regret = round_regret(&truth, &fb)?;
            ledger.push(regret)?;
            lines.push(RoundLine {
                round,
                mechanism_digest: digest.clone(),
                recommended,
                realized,
                regret,
                cut: false,
                cut_normal: None,
                query_point: None,
                centroid_se: None,
            });
        }
        let rdir = replicate_dir(&dir, r);
        let transcript = rdir.join(TRANSCRIPT);
        let ledger_path = rdir.join(LEDGER);
        write_atomic(&transcript, &to_jsonl(&lines))?;
        write_atomic(&ledger_path, &ledger_to_csv(&ledger))?;
        let dimension = StackedLayout::new(truth.indexing().clone()).len();
        let summary = regret_summary(r, &ledger, dimension, 0, norm);
        let summary_path = rdir.join(SUMMARY);
        write_json(&summary_path, &summary)?;
        Ok((
            ReplicateArtifacts {
                transcript,
                ledger: Some(ledger_path),
                recovered_game: None,
                summary: summary_path,
            },
            (ledger, summary),
        ))
    })?;
    let (artifacts, rest): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let (ledgers, summaries): (Vec<_>, Vec<_>) = rest.into_iter().unzip();
    let summary = aggregate(&dir, &ledgers, summaries)?;
    finish(cfg, dir, started, summary, artifacts)
}

/// Writes `game.json` under the output directory and returns its text.
pub fn gen_game(cfg: &ExperimentConfig) -> CliResult<(PathBuf, String)> {
    let game = load_game(cfg, 0)?;
    let path = cfg.output_path().join("game.json");
    let text = game_json(&game) + "\n";
    write_atomic(&path, &text)?;
    Ok((path, text))
}

fn load_pair(cfg: &ExperimentConfig) -> CliResult<(Game, Game)> {
    let second = cfg
        .second_game
        .as_ref()
        .ok_or_else(|| CliError::Precondition("a second game is required".into()))?;
    let g1 = load_game(cfg, 0)?;
    let g2 = second.load(&mut seed::stream(cfg.seed, &[1, GAME_STREAM]))?;
    if g1.indexing() != g2.indexing() {
        return Err(CliError::Precondition("games have different shapes".into()));
    }
    Ok((g1, g2))
}

pub fn equivalence_json(report: &EquivalenceReport) -> Value {
    json!({
        "equivalent": report.equivalent,
        "agents": report.agents.iter().map(|a| json!({
            "agent": a.agent,
            "scale": a.scale,
            "shift": a.shift,
            "residual": a.residual,
        })).collect::<Vec<_>>(),
    })
}

pub fn br_json(verdict: &BrVerdict, mode: BrMode) -> Value {
    let mode_name = match mode {
        BrMode::Exact2D => "exact2d",
        BrMode::MonteCarlo { .. } => "montecarlo",
    };
    match verdict {
        BrVerdict::Indistinguishable(BrCertificate::Exact { breakpoints }) => json!({
            "verdict": "indistinguishable", "mode": mode_name, "breakpoints": breakpoints,
        }),
        BrVerdict::Indistinguishable(BrCertificate::Sampled {
            samples,
            undetected_mass,
        }) => json!({
            "verdict": "indistinguishable", "mode": mode_name,
            "samples": samples, "undetected_mass": undetected_mass,
        }),
        BrVerdict::Distinguished(w) => json!({
            "verdict": "distinguished", "mode": mode_name,
            "witness": {"agent": w.agent, "direction": w.direction, "first": w.first, "second": w.second},
        }),
    }
}

fn br_mode(cfg: &ExperimentConfig) -> BrMode {
    match cfg.br_mode {
        BrModeKind::Exact2d => BrMode::Exact2D,
        BrModeKind::Montecarlo => BrMode::MonteCarlo {
            samples: cfg.samples,
        },
    }
}

fn br_check(cfg: &ExperimentConfig, g1: &Game, g2: &Game, mode: BrMode) -> CliResult<Value> {
    let mut rng = seed::stream(cfg.seed, &[0, CHECK_STREAM]);
    let verdict = br_indistinguishable(g1, g2, mode, &mut rng)?;
    Ok(br_json(&verdict, mode))
}

fn write_verdict(
    cfg: &ExperimentConfig,
    started: Instant,
    verdict: Value,
) -> CliResult<RunArtifacts> {
    let dir = cfg.output_path();
    finish(cfg, dir, started, verdict, Vec::new())
}

/// Equivalence verdict plus the best-response verdict. When the exact
/// planar check does not apply it falls back to sampling.
pub fn check_equiv(cfg: &ExperimentConfig) -> CliResult<RunArtifacts> {
    let started = Instant::now();
    let (g1, g2) = load_pair(cfg)?;
    let mut verdict = equivalence_json(&check_equivalence(&g1, &g2)?);
    let br = match br_check(cfg, &g1, &g2, br_mode(cfg)) {
        Err(CliError::Precondition(_)) if cfg.br_mode == BrModeKind::Exact2d => br_check(
            cfg,
            &g1,
            &g2,
            BrMode::MonteCarlo {
                samples: cfg.samples,
            },
        )?,
        other => other?,
    };
    verdict["br_indistinguishable"] = json!(br["verdict"] == "indistinguishable");
    verdict["br"] = br;
    write_verdict(cfg, started, verdict)
}

pub fn check_br_indist(cfg: &ExperimentConfig) -> CliResult<RunArtifacts> {
    let started = Instant::now();
    let (g1, g2) = load_pair(cfg)?;
    let mut verdict = br_check(cfg, &g1, &g2, br_mode(cfg))?;
    verdict["br_indistinguishable"] = json!(verdict["verdict"] == "indistinguishable");
    write_verdict(cfg, started, verdict)
}
