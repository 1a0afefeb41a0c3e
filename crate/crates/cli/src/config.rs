//! Key-value config file. Flags override file values, file values override
//! defaults; unknown keys are rejected. The API key is never read from the
//! file, only from the environment variable named by `llm.api_key_env`.

use std::path::{Path, PathBuf};

use soccerkg::nl::LlmConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub snapshot_dir: Option<PathBuf>,
    pub backend: Option<String>,
    pub output_format: Option<String>,
    pub llm: LlmConfig,
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig {
            data_dir: None,
            snapshot_dir: None,
            backend: None,
            output_format: None,
            llm: LlmConfig::default(),
        }
    }
}

pub fn load_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("config {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
}

pub fn parse_config(text: &str) -> Result<FileConfig, String> {
    let mut config = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected KEY=VALUE", lineno + 1));
        };
        let key = key.trim();
        let value = value.trim().to_string();
        match key {
            "data_dir" => config.data_dir = Some(PathBuf::from(value)),
            "snapshot_dir" => config.snapshot_dir = Some(PathBuf::from(value)),
            "backend" => {
                if value != "rule" && value != "llm" {
                    return Err(format!("line {}: backend must be rule or llm", lineno + 1));
                }
                config.backend = Some(value);
            }
            "output_format" => {
                if value != "text" && value != "json" {
                    return Err(format!(
                        "line {}: output_format must be text or json",
                        lineno + 1
                    ));
                }
                config.output_format = Some(value);
            }
            "llm.base_url" => config.llm.base_url = value,
            "llm.model" => config.llm.model = value,
            "llm.temperature" => {
                config.llm.temperature = value
                    .parse()
                    .map_err(|_| format!("line {}: llm.temperature must be a number", lineno + 1))?
            }
            "llm.retry_cap" => {
                config.llm.retry_cap = value
                    .parse()
                    .map_err(|_| format!("line {}: llm.retry_cap must be an integer", lineno + 1))?
            }
            "llm.api_key_env" => config.llm.api_key_env = value,
            other => return Err(format!("line {}: unknown key {other:?}", lineno + 1)),
        }
    }
    Ok(config)
}
