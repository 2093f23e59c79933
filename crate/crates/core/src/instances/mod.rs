//! Scenario and solution files, and random benchmark instances.

mod random;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::solution::Solution;

pub use random::{generate_random, RandomInstanceSpec};

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Parses and validates a scenario from JSON text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let s: Scenario = parse_json(text)?;
    if s.schema_version != crate::scenario::SCHEMA_VERSION {
        return Err(Error::Parse {
            path: "schema_version".into(),
            message: format!("unsupported schema version {}", s.schema_version),
        });
    }
    s.validate()?;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&fs::read_to_string(path)?)
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    write_json(scenario, path)
}

pub fn save_solution(solution: &Solution, path: &Path) -> Result<()> {
    write_json(solution, path)
}

pub fn load_solution(path: &Path) -> Result<Solution> {
    parse_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{
        "schema_version": 1,
        "region": {"lo": [0, 0, 0], "hi": [4, 4, 4]},
        "services": [{"id": 1, "source": [0, 2, 2], "destination": [4, 2, 2],
                      "radius": 0.3, "safety": 0.1, "elbow_min": 1,
                      "alpha": [1, 0, 0, 0, 0, 0, 0]}],
        "grid": {"spacing": 1},
        "cost_model": "random"
    }"#;

    #[test]
    fn empty_obstacle_list_loads() {
        let s = parse_scenario(TINY).unwrap();
        assert!(s.obstacles.is_empty());
        assert_eq!(s.services[0].id, 1);
    }

    #[test]
    fn parse_error_names_field() {
        let bad = TINY.replace("\"radius\": 0.3", "\"radius\": \"wide\"");
        match parse_scenario(&bad) {
            Err(Error::Parse { path, .. }) => assert_eq!(path, "services[0].radius"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn obstacle_outside_region_rejected() {
        let bad = TINY.replace(
            "\"grid\"",
            "\"obstacles\": [{\"lo\": [3, 3, 3], \"hi\": [5, 5, 5]}], \"grid\"",
        );
        assert!(matches!(parse_scenario(&bad), Err(Error::Scenario(_))));
    }
}
