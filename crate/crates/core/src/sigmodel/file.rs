use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{preset, ArrayGeometry, FrameSpec, Scenario, SignalError};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("cannot read scenario file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] SignalError),
}

/// Scenario, array and frame settings as stored on disk.
///
/// The on-disk layout is TOML with `[scenario]`, `[array]` and `[frame]`
/// tables, so every field is addressable by a dotted key such as
/// `scenario.noise_power_db`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    #[serde(default)]
    pub array: ArrayGeometry,
    #[serde(default)]
    pub frame: FrameSpec,
}

impl ScenarioFile {
    pub fn validate(&self) -> Result<(), SignalError> {
        self.scenario.validate()?;
        self.array.validate()?;
        self.frame.validate()
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioFileError> {
        let f: ScenarioFile = toml::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// A preset name (`epa`, `s1` … `s6`) or a path to a scenario file.
    pub fn resolve(name_or_path: &str) -> Result<Self, ScenarioFileError> {
        match preset(name_or_path) {
            Some(p) => Ok(p),
            None => Self::load(Path::new(name_or_path)),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigmodel::presets;

    #[test]
    fn toml_round_trip() {
        for p in presets() {
            let text = p.to_toml_string();
            assert!(text.contains("[scenario]") && text.contains("noise_power_db"));
            assert_eq!(ScenarioFile::parse(&text).unwrap(), p);
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let mut text = presets()[0].to_toml_string();
        text.push_str("\n[extra]\nfoo = 1\n");
        assert!(matches!(ScenarioFile::parse(&text), Err(ScenarioFileError::Parse(_))));
    }

    #[test]
    fn invalid_scenario_rejected() {
        let text = r#"
[scenario]
label = "bad"
desired_angle_deg = 30.0
int_angles_deg = [10.0]
int_powers_db = []
path_delays_symbols = [0]
noise_power_db = 0.0
"#;
        assert!(matches!(ScenarioFile::parse(text), Err(ScenarioFileError::Invalid(_))));
    }

    #[test]
    fn shipped_files_match_presets() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
        for name in crate::sigmodel::preset_names() {
            let f = ScenarioFile::load(&dir.join(format!("{name}.toml"))).unwrap();
            assert_eq!(Some(f), preset(name), "{name}");
        }
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            ScenarioFile::resolve("/nonexistent/epa.toml"),
            Err(ScenarioFileError::Io { .. })
        ));
    }
}
