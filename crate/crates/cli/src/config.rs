//! Experiment configuration: one JSON file, unknown keys rejected, top-level
//! fields overridable from the command line.

use std::path::{Path, PathBuf};

use moderator_core::behavior::BehaviorModel;
use moderator_core::catalog::{self, RandomGameSpec};
use moderator_core::learn::ScaleSolver;
use moderator_core::Game;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::gamefile;

/// Environment variable naming the output root.
pub const OUT_ENV: &str = "MODERATOR_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    LearnQr,
    Recommend,
    CheckEquiv,
    CheckBrIndist,
    Simulate,
    GenGame,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::LearnQr => "learn-qr",
            Mode::Recommend => "recommend",
            Mode::CheckEquiv => "check-equiv",
            Mode::CheckBrIndist => "check-br-indist",
            Mode::Simulate => "simulate",
            Mode::GenGame => "gen-game",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogGame {
    PrisonersDilemma,
    RockPaperScissors,
    CounterexampleU,
    CounterexampleV,
    Constant,
}

impl CatalogGame {
    pub fn build(self) -> Game {
        match self {
            CatalogGame::PrisonersDilemma => catalog::prisoners_dilemma(),
            CatalogGame::RockPaperScissors => catalog::rock_paper_scissors(),
            CatalogGame::CounterexampleU => catalog::counterexample_pair().0,
            CatalogGame::CounterexampleV => catalog::counterexample_pair().1,
            CatalogGame::Constant => catalog::constant(&[2, 2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomSpec {
    pub sizes: Vec<usize>,
    pub low: f64,
    pub high: f64,
    /// Minimum gap between utilities of different actions at the same
    /// opponent profile.
    pub min_gap: f64,
    pub require_no_weak_dominance: bool,
    pub max_retries: usize,
}

impl Default for RandomSpec {
    fn default() -> Self {
        let s = RandomGameSpec::new(vec![2, 2]);
        Self {
            sizes: s.sizes,
            low: s.low,
            high: s.high,
            min_gap: s.min_gap,
            require_no_weak_dominance: s.require_no_weak_dominance,
            max_retries: s.max_retries,
        }
    }
}

impl From<&RandomSpec> for RandomGameSpec {
    fn from(s: &RandomSpec) -> Self {
        RandomGameSpec {
            sizes: s.sizes.clone(),
            low: s.low,
            high: s.high,
            min_gap: s.min_gap,
            require_no_weak_dominance: s.require_no_weak_dominance,
            max_retries: s.max_retries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSource {
    File(PathBuf),
    Catalog(CatalogGame),
    Random(RandomSpec),
}

impl GameSource {
    /// Random sources draw from `rng`; the others ignore it.
    pub fn load<R: Rng + ?Sized>(&self, rng: &mut R) -> CliResult<Game> {
        match self {
            GameSource::File(path) => gamefile::read_game(path),
            GameSource::Catalog(c) => Ok(c.build()),
            GameSource::Random(spec) => Ok(catalog::random_game(&spec.into(), rng)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    BestResponse,
    Quantal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Exact quantal-response sets.
    Ideal,
    /// Sets observed by repeated sampling of a quantal population.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrModeKind {
    Exact2d,
    Montecarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    NormalEquations,
    Kaczmarz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedMechanism {
    /// A correlated equilibrium of the true game.
    Ce,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Must match the subcommand when given.
    pub mode: Option<Mode>,
    pub game: GameSource,
    /// Second game for the check subcommands.
    pub second_game: Option<GameSource>,
    pub model: ModelKind,
    pub beta: f64,
    pub oracle: OracleKind,
    pub eps: f64,
    pub ratio_cap: f64,
    pub delta: f64,
    pub rounds: u64,
    pub seed: u64,
    pub replicates: usize,
    /// Relative to the output root.
    pub output_dir: Option<PathBuf>,
    pub br_mode: BrModeKind,
    pub samples: usize,
    pub alignment_tol: f64,
    /// Constant in the query bound `c0 * n * m * M * log2(ratio_cap / eps)`.
    pub c0: f64,
    pub scale_solver: SolverKind,
    pub kaczmarz_sweeps: usize,
    pub mechanism: FixedMechanism,
    /// Output directory of an earlier run whose transcripts are replayed.
    pub replay: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: None,
            game: GameSource::Catalog(CatalogGame::PrisonersDilemma),
            second_game: None,
            model: ModelKind::Quantal,
            beta: 1.0,
            oracle: OracleKind::Ideal,
            eps: 1e-3,
            ratio_cap: 100.0,
            delta: 0.05,
            rounds: 1000,
            seed: 0,
            replicates: 1,
            output_dir: None,
            br_mode: BrModeKind::Exact2d,
            samples: 100_000,
            alignment_tol: 5e-3,
            c0: 4.0,
            scale_solver: SolverKind::NormalEquations,
            kaczmarz_sweeps: 200,
            mechanism: FixedMechanism::Ce,
            replay: None,
        }
    }
}

/// Command-line overrides of top-level fields.
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct Overrides {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Game file; replaces the config's game source.
    #[arg(long)]
    pub game: Option<PathBuf>,
    /// Second game file for the check subcommands.
    #[arg(long)]
    pub second_game: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub oracle: Option<OracleArg>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub ratio_cap: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Output directory, relative to the output root.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub br_mode: Option<BrModeArg>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Replay the transcripts of an earlier run directory.
    #[arg(long)]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelArg {
    Br,
    Qr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OracleArg {
    Ideal,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BrModeArg {
    Exact2d,
    Montecarlo,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Precondition(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Config file (if any) with overrides applied, checked against `mode`.
    pub fn resolve(mode: Mode, o: &Overrides) -> CliResult<Self> {
        let mut c = match &o.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        c.apply(o);
        if let Some(m) = c.mode {
            if m != mode {
                return Err(CliError::Precondition(format!(
                    "config is for `{}`, not `{}`",
                    m.name(),
                    mode.name()
                )));
            }
        }
        c.mode = Some(mode);
        c.validate()?;
        Ok(c)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.game {
            self.game = GameSource::File(p.clone());
        }
        if let Some(p) = &o.second_game {
            self.second_game = Some(GameSource::File(p.clone()));
        }
        if let Some(m) = o.model {
            self.model = match m {
                ModelArg::Br => ModelKind::BestResponse,
                ModelArg::Qr => ModelKind::Quantal,
            };
        }
        if let Some(k) = o.oracle {
            self.oracle = match k {
                OracleArg::Ideal => OracleKind::Ideal,
                OracleArg::Sampled => OracleKind::Sampled,
            };
        }
        if let Some(b) = o.br_mode {
            self.br_mode = match b {
                BrModeArg::Exact2d => BrModeKind::Exact2d,
                BrModeArg::Montecarlo => BrModeKind::Montecarlo,
            };
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &o.$f { self.$f = v.clone(); } )* };
        }
        set!(beta, eps, ratio_cap, delta, rounds, seed, replicates, samples);
        if o.output_dir.is_some() {
            self.output_dir = o.output_dir.clone();
        }
        if o.replay.is_some() {
            self.replay = o.replay.clone();
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Precondition(m));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.ratio_cap > self.eps && self.ratio_cap.is_finite()) {
            return bad(format!("ratio_cap must exceed eps, got {}", self.ratio_cap));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.rounds == 0 || self.replicates == 0 || self.samples == 0 {
            return bad("rounds, replicates and samples must be positive".into());
        }
        if !(self.alignment_tol >= 0.0 && self.c0 > 0.0) {
            return bad("alignment_tol must be >= 0 and c0 > 0".into());
        }
        if let GameSource::Random(s) = &self.game {
            if !(s.low < s.high) || s.sizes.len() < 2 || s.sizes.iter().any(|&m| m < 2) {
                return bad(
                    "random game needs low < high and >= 2 agents with >= 2 actions".into(),
                );
            }
        }
        Ok(())
    }

    pub fn behavior(&self) -> BehaviorModel {
        match self.model {
            ModelKind::BestResponse => BehaviorModel::BestResponse,
            ModelKind::Quantal => BehaviorModel::QuantalResponse { beta: self.beta },
        }
    }

    pub fn scale_solver(&self) -> ScaleSolver {
        match self.scale_solver {
            SolverKind::NormalEquations => ScaleSolver::NormalEquations,
            SolverKind::Kaczmarz => ScaleSolver::Kaczmarz {
                sweeps: self.kaczmarz_sweeps,
            },
        }
    }

    /// `$MODERATOR_OUT/<output_dir or subcommand name>`.
    pub fn output_path(&self) -> PathBuf {
        let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
        let leaf = self
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(self.mode.map_or("run", Mode::name)));
        root.join(leaf)
    }
}
