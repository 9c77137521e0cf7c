//! JSON file formats for games and partitions.
//!
//! A game is `{"n": 3, "utilities": [[0, 0.5, -1], ...]}` with row `a` holding
//! `u_a(·)`. A partition is `{"coalitions": [[0, 2], [1]]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Agent, HedonicGame, Partition};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub n: usize,
    pub utilities: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionFile {
    pub coalitions: Vec<Vec<Agent>>,
}

fn json_err(context: &str) -> impl FnOnce(serde_json::Error) -> Error + '_ {
    move |source| Error::Json {
        context: context.to_string(),
        source,
    }
}

pub fn parse_game_json(text: &str) -> Result<HedonicGame> {
    let file: GameFile = serde_json::from_str(text).map_err(json_err("game"))?;
    if file.utilities.len() != file.n {
        return Err(Error::InvalidGame(format!(
            "declared n = {} but {} utility rows",
            file.n,
            file.utilities.len()
        )));
    }
    HedonicGame::from_rows(file.utilities)
}

pub fn game_to_json(game: &HedonicGame) -> String {
    let file = GameFile {
        n: game.n(),
        utilities: game.rows().map(<[f64]>::to_vec).collect(),
    };
    serde_json::to_string(&file).expect("game serialises")
}

/// Parses a partition of the agents `0..n`.
pub fn parse_partition_json(text: &str, n: usize) -> Result<Partition> {
    let file: PartitionFile = serde_json::from_str(text).map_err(json_err("partition"))?;
    Partition::new(n, file.coalitions)
}

pub fn partition_to_json(partition: &Partition) -> String {
    let file = PartitionFile {
        coalitions: partition.coalitions().to_vec(),
    };
    serde_json::to_string(&file).expect("partition serialises")
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_game(path: &Path) -> Result<HedonicGame> {
    parse_game_json(&read_text(path)?)
}

pub fn read_partition(path: &Path, n: usize) -> Result<Partition> {
    parse_partition_json(&read_text(path)?, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn game_round_trip() {
        let game = HedonicGame::from_rows(vec![vec![0.0, 0.5], vec![-0.25, 0.0]]).unwrap();
        let text = game_to_json(&game);
        assert_eq!(parse_game_json(&text).unwrap(), game);
    }

    #[test]
    fn game_rejections() {
        for bad in [
            "",
            "{}",
            r#"{"n": 2, "utilities": [[0, 1]]}"#,
            r#"{"n": 2, "utilities": [[0, 1], [1]]}"#,
            r#"{"n": 2, "utilities": [[0, 1], [1, 0]], "x": 1}"#,
            r#"{"n": 1, "utilities": [[0.5]]}"#,
            r#"{"n": 0, "utilities": []}"#,
        ] {
            assert!(parse_game_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn partition_round_trip() {
        let p = parse_partition_json(r#"{"coalitions": [[2, 0], [1]]}"#, 3).unwrap();
        assert_eq!(p.coalitions(), &[vec![0, 2], vec![1]]);
        assert_eq!(parse_partition_json(&partition_to_json(&p), 3).unwrap(), p);
        assert!(parse_partition_json(r#"{"coalitions": [[0], [0, 1]]}"#, 2).is_err());
        assert!(parse_partition_json(r#"{"coalitions": [[0]]}"#, 2).is_err());
        assert!(parse_partition_json(r#"{"coalitions": [[0, 5]]}"#, 2).is_err());
        assert!(parse_partition_json(r#"{"coalitions": [[], [0, 1]]}"#, 2).is_err());
    }
}
