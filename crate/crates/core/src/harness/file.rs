// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::generate::GenParams;
use crate::error::{Error, Result};
use crate::model::{Instance, Objective, ObjectiveSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemEntry {
    pub probs: Vec<f64>,
    pub costs: Vec<f64>,
}

/// On-disk instance: `items`, `budget`, `objective`, plus optional generator
/// parameters recorded by `gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub items: Vec<ItemEntry>,
    pub budget: f64,
    pub objective: ObjectiveSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GenParams>,
}

impl InstanceFile {
    pub fn build(&self) -> Result<(Instance, Objective)> {
        let probs: Vec<Vec<f64>> = self.items.iter().map(|e| e.probs.clone()).collect();
        let costs: Vec<Vec<f64>> = self.items.iter().map(|e| e.costs.clone()).collect();
        let inst = Instance::new(&probs, &costs, self.budget)?;
        let f = Objective::new(self.objective.clone(), inst.items(), inst.states())?;
        Ok((inst, f))
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instance files always serialize");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance files always serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub path: String,
    pub file: InstanceFile,
    pub instance: Instance,
    pub objective: Objective,
}

pub fn parse_instance(text: &str, path: &str) -> Result<LoadedInstance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|source| Error::Json {
        path: path.to_string(),
        source,
    })?;
    let (instance, objective) = file.build()?;
    Ok(LoadedInstance {
        path: path.to_string(),
        file,
        instance,
        objective,
    })
}

pub fn load_instance(path: &Path) -> Result<LoadedInstance> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: shown.clone(),
        source,
    })?;
    parse_instance(&text, &shown)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
        "items": [{"probs": [0.5, 0.5], "costs": [1, 2]}],
        "budget": 2,
        "objective": {"family": "separable_concave", "weights": [1], "g": {"kind": "sqrt"}}
    }"#;

    #[test]
    fn parses_valid_file() {
        let l = parse_instance(GOOD, "good.json").unwrap();
        assert_eq!(l.instance.items(), 1);
        assert_eq!(l.objective.family(), "separable_concave");
        assert_eq!(l.file.digest().len(), 64);
    }

    #[test]
    fn missing_budget_is_named() {
        let text = GOOD.replace("\"budget\": 2,", "");
        let err = parse_instance(&text, "x.json").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("budget"), "{err}");
    }

    #[test]
    fn validation_path_reaches_objective() {
        let text = GOOD.replace("\"weights\": [1]", "\"weights\": [-1]");
        let err = parse_instance(&text, "x.json").unwrap_err();
        assert!(err.to_string().contains("objective.weights[0]"), "{err}");
    }

    #[test]
    fn decreasing_cost_names_the_triple() {
        let text = GOOD.replace("[1, 2]", "[2, 1]");
        let err = parse_instance(&text, "x.json").unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("items[0].costs")
                && msg.contains("state 2")
                && msg.contains("lower state 1"),
            "{msg}"
        );
    }

    #[test]
    fn unknown_key_rejected() {
        let text = GOOD.replace("\"budget\"", "\"budgett\": 1, \"budget\"");
        assert!(parse_instance(&text, "x.json").is_err());
    }
}
