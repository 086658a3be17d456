//! Game files: `{"agents": [{"name", "actions"}], "utilities": [[...]]}`,
//! utilities in row-major profile order (last agent's action fastest).

use std::path::Path;

use moderator_core::Game;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub name: String,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub agents: Vec<AgentEntry>,
    pub utilities: Vec<Vec<f64>>,
}

impl From<&Game> for GameFile {
    fn from(game: &Game) -> Self {
        Self {
            agents: game
                .names()
                .iter()
                .zip(game.action_labels())
                .map(|(name, actions)| AgentEntry {
                    name: name.clone(),
                    actions: actions.clone(),
                })
                .collect(),
            utilities: game.utilities().to_vec(),
        }
    }
}

impl TryFrom<GameFile> for Game {
    type Error = moderator_core::Error;

    fn try_from(file: GameFile) -> Result<Self, Self::Error> {
        let (names, labels) = file.agents.into_iter().map(|a| (a.name, a.actions)).unzip();
        Game::new(names, labels, file.utilities)
    }
}

pub fn parse_game(text: &str) -> Result<Game, CliError> {
    let file: GameFile = serde_json::from_str(text)
        .map_err(|e| CliError::Precondition(format!("malformed game file: {e}")))?;
    Game::try_from(file).map_err(CliError::from)
}

pub fn read_game(path: &Path) -> Result<Game, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_game(&text).map_err(|e| e.context(&format!("{}", path.display())))
}

pub fn game_json(game: &Game) -> String {
    crate::json::to_string(&GameFile::from(game)).expect("game files serialize")
}
