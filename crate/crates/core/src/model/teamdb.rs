//! Kit-color lookup table, one team per line:
//!
//! ```text
//! <team_name> home_kit <R,G,B> away_kit <R,G,B>
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tokens;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamKits {
    pub home: [u8; 3],
    pub away: [u8; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamDb {
    pub entries: BTreeMap<String, TeamKits>,
}

impl TeamDb {
    pub fn get(&self, team: &str) -> Result<&TeamKits> {
        self.entries
            .get(team)
            .ok_or_else(|| Error::UnknownTeam(team.to_string()))
    }

    pub fn insert(&mut self, team: impl Into<String>, kits: TeamKits) -> Result<()> {
        let team = team.into();
        if team.is_empty() {
            return Err(Error::Config("empty team name".into()));
        }
        if self.entries.contains_key(&team) {
            return Err(Error::DuplicateTeam(team));
        }
        self.entries.insert(team, kits);
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, k) in &self.entries {
            s.push_str(&format!(
                "{} home_kit {} away_kit {}\n",
                tokens::quote(name),
                fmt_rgb(k.home),
                fmt_rgb(k.away)
            ));
        }
        s
    }
}

fn fmt_rgb(c: [u8; 3]) -> String {
    format!("{},{},{}", c[0], c[1], c[2])
}

fn parse_rgb(tok: &str) -> std::result::Result<[u8; 3], String> {
    let parts: Vec<&str> = tok.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("color `{tok}` is not R,G,B"));
    }
    let mut c = [0u8; 3];
    for (slot, p) in c.iter_mut().zip(parts) {
        let v: i64 = p
            .trim()
            .parse()
            .map_err(|_| format!("bad channel `{p}` in `{tok}`"))?;
        *slot = u8::try_from(v).map_err(|_| format!("channel {v} outside [0, 255]"))?;
    }
    Ok(c)
}

pub fn parse_team_db(text: &str) -> Result<TeamDb> {
    let mut db = TeamDb::default();
    for (line, content) in tokens::content_lines(text) {
        let toks = tokens::split(content).map_err(|m| Error::parse(line, m))?;
        if toks.len() != 5 || toks[1] != "home_kit" || toks[3] != "away_kit" {
            return Err(Error::parse(
                line,
                "expected `<team_name> home_kit <R,G,B> away_kit <R,G,B>`",
            ));
        }
        if toks[0].is_empty() {
            return Err(Error::parse(line, "empty team name"));
        }
        let home = parse_rgb(&toks[2]).map_err(|m| Error::parse(line, m))?;
        let away = parse_rgb(&toks[4]).map_err(|m| Error::parse(line, m))?;
        db.insert(toks[0].clone(), TeamKits { home, away })?;
    }
    Ok(db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_entries() {
        let db = parse_team_db(
            "TeamA home_kit 255,0,0 away_kit 255,255,255\n\"FC Two Words\" home_kit 0,0,255 away_kit 0,0,0\n",
        )
        .unwrap();
        assert_eq!(
            db.get("TeamA").unwrap(),
            &TeamKits {
                home: [255, 0, 0],
                away: [255, 255, 255]
            }
        );
        assert_eq!(db.get("FC Two Words").unwrap().home, [0, 0, 255]);
    }

    #[test]
    fn duplicate_team() {
        let err = parse_team_db(
            "TeamA home_kit 1,1,1 away_kit 2,2,2\nTeamA home_kit 3,3,3 away_kit 4,4,4",
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateTeam(t) if t == "TeamA"));
    }

    #[test]
    fn channel_out_of_range() {
        let err = parse_team_db("TeamA home_kit 256,0,0 away_kit 0,0,0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(parse_team_db("TeamA home_kit -1,0,0 away_kit 0,0,0").is_err());
        assert!(parse_team_db("TeamA home_kit 1,0 away_kit 0,0,0").is_err());
    }

    #[test]
    fn unknown_team_lookup() {
        let db = TeamDb::default();
        assert!(matches!(db.get("Nope"), Err(Error::UnknownTeam(_))));
    }

    proptest! {
        #[test]
        fn round_trip(entries in proptest::collection::btree_map(
            "[A-Za-z][A-Za-z .\"]{0,12}",
            (prop::array::uniform3(any::<u8>()), prop::array::uniform3(any::<u8>())),
            0..8,
        )) {
            let mut db = TeamDb::default();
            for (name, (home, away)) in entries {
                db.insert(name, TeamKits { home, away }).unwrap();
            }
            prop_assert_eq!(parse_team_db(&db.to_text()).unwrap(), db);
        }
    }
}
