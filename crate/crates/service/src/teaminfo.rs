//! Team metadata lookup by game id. The stub mode answers from fixtures and
//! never touches the network.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamInfo {
    pub name: String,
    pub color: [u8; 3],
}

/// Footage a fixture game id stands for. Playlist URLs are identifiers
/// only, so each fixture names the data actually processed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetRef {
    Synthetic {
        seed: u64,
        #[serde(default)]
        frames: Option<u32>,
    },
    Dir {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameFixture {
    pub home: TeamInfo,
    pub away: TeamInfo,
    #[serde(default)]
    pub dataset: Option<DatasetRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeamInfoMode {
    Stub,
    /// Remote team API. Not bundled; lookups fail with 422.
    Live { base_url: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamInfoClient {
    pub mode: TeamInfoMode,
    pub fixtures: BTreeMap<String, GameFixture>,
}

/// Game id of the synthetic generator's default match.
pub const SYNTHETIC_GAME_ID: &str = "900001";

impl TeamInfoClient {
    pub fn stub(fixtures: BTreeMap<String, GameFixture>) -> Self {
        TeamInfoClient {
            mode: TeamInfoMode::Stub,
            fixtures,
        }
    }

    /// Fixtures for the synthetic default match and one extra game with
    /// its own teams.
    pub fn with_default_fixtures() -> Self {
        let mut fixtures = BTreeMap::new();
        fixtures.insert(
            SYNTHETIC_GAME_ID.to_string(),
            GameFixture {
                home: TeamInfo {
                    name: "Rosso FC".into(),
                    color: [200, 30, 30],
                },
                away: TeamInfo {
                    name: "Blu United".into(),
                    color: [30, 60, 200],
                },
                dataset: Some(DatasetRef::Synthetic {
                    seed: 1,
                    frames: None,
                }),
            },
        );
        fixtures.insert(
            "4242".to_string(),
            GameFixture {
                home: TeamInfo {
                    name: "Nordvik IL".into(),
                    color: [240, 240, 240],
                },
                away: TeamInfo {
                    name: "Sandby BK".into(),
                    color: [20, 20, 20],
                },
                dataset: Some(DatasetRef::Synthetic {
                    seed: 42,
                    frames: Some(300),
                }),
            },
        );
        TeamInfoClient::stub(fixtures)
    }

    pub fn lookup(&self, game_id: &str) -> Result<&GameFixture, ServiceError> {
        match &self.mode {
            TeamInfoMode::Stub => self.fixtures.get(game_id).ok_or_else(|| {
                ServiceError::Unprocessable(format!(
                    "game id `{game_id}` not found in team fixtures (known: {})",
                    self.fixtures.keys().cloned().collect::<Vec<_>>().join(", ")
                ))
            }),
            TeamInfoMode::Live { base_url } => Err(ServiceError::Unprocessable(format!(
                "live team lookup against {base_url} is not available in this build"
            ))),
        }
    }
}

/// Game id of a playlist URL: the last path segment made only of digits.
pub fn game_id_from_playlist(url: &str) -> Option<String> {
    let no_query = url.split(['?', '#']).next().unwrap_or(url);
    let path = match no_query.split_once("://") {
        Some((_, rest)) => rest.split_once('/').map_or("", |(_, p)| p),
        None => no_query,
    };
    path.split('/')
        .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
        .next_back()
        .map(str::to_string)
}
