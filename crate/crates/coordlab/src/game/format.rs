//! JSON game file format.
//!
//! ```json
//! {"agents": 2, "actions": [2, 2], "outcomes": 4,
//!  "transitions": [[..], ..], "utilities": [..],
//!  "rational_utilities": ["1/1", "0/1", ..]}
//! ```
//!
//! Transition rows are listed in lexicographic joint-action order.

use std::path::Path;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::StateGame;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameFile {
    pub agents: usize,
    pub actions: Vec<usize>,
    pub outcomes: usize,
    pub transitions: Vec<Vec<f64>>,
    pub utilities: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rational_utilities: Option<Vec<String>>,
}

impl GameFile {
    pub fn from_game(game: &StateGame) -> Result<Self> {
        if !game.is_enumerable() {
            return Err(Error::ResourceLimit(format!(
                "cannot export a game with {} joint actions as a dense table",
                game.n_joint_actions()
            )));
        }
        let transitions = game
            .joint_actions()
            .map(|a| game.transition_row(&a).into_owned())
            .collect();
        Ok(GameFile {
            agents: game.n_agents(),
            actions: game.actions_per_agent().to_vec(),
            outcomes: game.n_outcomes(),
            transitions,
            utilities: game.utilities().to_vec(),
            rational_utilities: game
                .rational_utilities()
                .map(|rs| rs.iter().map(|r| format!("{}/{}", r.numer(), r.denom())).collect()),
        })
    }

    pub fn into_game(self) -> Result<StateGame> {
        if self.actions.len() != self.agents {
            return Err(Error::InvalidGame(format!(
                "'actions' lists {} entries for {} agents",
                self.actions.len(),
                self.agents
            )));
        }
        let game = StateGame::new_dense(self.actions, self.outcomes, self.transitions, self.utilities)?;
        match self.rational_utilities {
            Some(strs) => {
                let rats = strs
                    .iter()
                    .map(|s| parse_rational(s))
                    .collect::<Result<Vec<_>>>()?;
                game.with_rational_utilities(rats)
            }
            None => Ok(game),
        }
    }

    /// Canonical JSON: keys sorted, pretty-printed, trailing newline.
    pub fn to_canonical_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn parse_rational(s: &str) -> Result<Rational64> {
    let bad = || Error::InvalidGame(format!("cannot parse rational '{s}', expected 'p/q'"));
    match s.split_once('/') {
        Some((num, den)) => {
            let n: i64 = num.trim().parse().map_err(|_| bad())?;
            let d: i64 = den.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational64::new(n, d))
        }
        None => {
            let n: i64 = s.trim().parse().map_err(|_| bad())?;
            Ok(Rational64::from_integer(n))
        }
    }
}
