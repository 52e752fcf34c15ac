//! Roster lookup table, one player per line:
//!
//! ```text
//! <team_name> <player_name> <position> <kit_number>
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{tokens, KitNumber};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub name: String,
    pub position: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlayerDb {
    entries: BTreeMap<(String, KitNumber), RosterEntry>,
}

impl PlayerDb {
    pub fn insert(&mut self, team: &str, kit: KitNumber, entry: RosterEntry) -> Result<()> {
        let key = (team.to_string(), kit);
        if let Some(existing) = self.entries.get(&key) {
            return Err(Error::DuplicateKit {
                team: team.to_string(),
                kit: kit.get(),
                first: existing.name.clone(),
                second: entry.name,
            });
        }
        self.entries.insert(key, entry);
        Ok(())
    }

    pub fn get(&self, team: &str, kit: KitNumber) -> Option<&RosterEntry> {
        self.entries.get(&(team.to_string(), kit))
    }

    pub fn contains(&self, team: &str, kit: KitNumber) -> bool {
        self.get(team, kit).is_some()
    }

    /// Players of one team ordered by kit number.
    pub fn roster(&self, team: &str) -> Vec<(KitNumber, &RosterEntry)> {
        self.entries
            .iter()
            .filter(|((t, _), _)| t == team)
            .map(|((_, k), e)| (*k, e))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, KitNumber, &RosterEntry)> {
        self.entries
            .iter()
            .map(|((t, k), e)| (t.as_str(), *k, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for ((team, kit), e) in &self.entries {
            s.push_str(&format!(
                "{} {} {} {}\n",
                tokens::quote(team),
                tokens::quote(&e.name),
                tokens::quote(&e.position),
                kit
            ));
        }
        s
    }
}

pub fn parse_player_db(text: &str) -> Result<PlayerDb> {
    let mut db = PlayerDb::default();
    for (line, content) in tokens::content_lines(text) {
        let toks = tokens::split(content).map_err(|m| Error::parse(line, m))?;
        let [team, name, position, kit] = toks.as_slice() else {
            return Err(Error::parse(
                line,
                format!(
                    "expected `<team_name> <player_name> <position> <kit_number>`, found {} fields",
                    toks.len()
                ),
            ));
        };
        if team.is_empty() || name.is_empty() {
            return Err(Error::parse(line, "empty team or player name"));
        }
        let kit = KitNumber::parse(kit)
            .ok_or_else(|| Error::parse(line, format!("kit_number `{kit}` not in 1..=99")))?;
        db.insert(
            team,
            kit,
            RosterEntry {
                name: name.clone(),
                position: position.clone(),
            },
        )?;
    }
    Ok(db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kit(n: u32) -> KitNumber {
        KitNumber::new(n).unwrap()
    }

    #[test]
    fn parses_quoted_name() {
        let db = parse_player_db(r#"TeamA "J. Doe" FW 7"#).unwrap();
        assert_eq!(
            db.get("TeamA", kit(7)),
            Some(&RosterEntry {
                name: "J. Doe".into(),
                position: "FW".into()
            })
        );
    }

    #[test]
    fn duplicate_kit_names_both_players() {
        let err = parse_player_db("TeamA \"J. Doe\" FW 7\nTeamA \"R. Roe\" MF 7").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("J. Doe") && msg.contains("R. Roe"), "{msg}");
        // Same kit in a different team is fine.
        parse_player_db("TeamA \"J. Doe\" FW 7\nTeamB \"R. Roe\" MF 7").unwrap();
    }

    #[test]
    fn leading_zero_kit() {
        let db = parse_player_db("TeamA Someone GK 07").unwrap();
        assert!(db.contains("TeamA", kit(7)));
        assert!(parse_player_db("TeamA Someone GK 0").is_err());
        assert!(parse_player_db("TeamA Someone GK 100").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(entries in proptest::collection::btree_map(
            ("[A-Z][a-z]{0,5}( [A-Z][a-z]{0,5})?", 1u32..=99),
            ("[A-Z]\\. [A-Za-z]{1,8}", "(GK|DF|MF|FW)"),
            0..20,
        )) {
            let mut db = PlayerDb::default();
            for ((team, k), (name, position)) in entries {
                db.insert(&team, kit(k), RosterEntry { name, position }).unwrap();
            }
            prop_assert_eq!(parse_player_db(&db.to_text()).unwrap(), db);
        }
    }
}
