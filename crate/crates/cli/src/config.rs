use std::path::{Path, PathBuf};

use flightnft_core::ledger::Principal;
use flightnft_core::proof::{Backend, GroupChoice, SecurityConfig};
use serde::Deserialize;

use crate::error::{read_text, CliError, Result};

pub const CONFIG_ENV: &str = "FLIGHTNFT_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// Every command carries its own logical time.
    Scripted,
    /// Logical time advances by one per command.
    Stepped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendName {
    Sigma,
    Merkle,
}

impl BackendName {
    pub fn backend(self) -> Backend {
        match self {
            BackendName::Sigma => Backend::SigmaCommit,
            BackendName::Merkle => Backend::MerkleChallenge,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sigma" => Some(BackendName::Sigma),
            "merkle" => Some(BackendName::Merkle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupName {
    Standard,
    Test,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProofDefaults {
    pub backend: BackendName,
    pub group: GroupName,
    pub challenge_count: u64,
    pub label: String,
}

impl Default for ProofDefaults {
    fn default() -> Self {
        ProofDefaults {
            backend: BackendName::Sigma,
            group: GroupName::Standard,
            challenge_count: 16,
            label: "flightnft".into(),
        }
    }
}

impl ProofDefaults {
    pub fn security_config(&self, backend: BackendName) -> SecurityConfig {
        SecurityConfig {
            backend: backend.backend(),
            group: match self.group {
                GroupName::Standard => GroupChoice::Standard2048,
                GroupName::Test => GroupChoice::Test,
            },
            challenge_count: match backend {
                BackendName::Sigma => 1,
                BackendName::Merkle => self.challenge_count,
            },
            seed: self.label.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacyDefaults {
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for PrivacyDefaults {
    fn default() -> Self {
        PrivacyDefaults {
            epsilon: 1.0,
            delta: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ledger_path: PathBuf,
    pub genesis_seed: String,
    pub clock_mode: ClockMode,
    pub proof: ProofDefaults,
    pub privacy: PrivacyDefaults,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ledger_path: PathBuf::from("flightnft.log"),
            genesis_seed: "flightnft".into(),
            clock_mode: ClockMode::Scripted,
            proof: ProofDefaults::default(),
            privacy: PrivacyDefaults::default(),
        }
    }
}

impl RunConfig {
    /// Loads `path`, or the defaults when no path is given. Relative
    /// `ledger_path` values resolve against the config file's directory.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = read_text(path)?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(1);
            CliError::parse(path, line, e.message().to_string())
        })?;
        if config.ledger_path.is_relative() {
            if let Some(dir) = path.parent() {
                config.ledger_path = dir.join(&config.ledger_path);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.genesis_seed.is_empty() {
            return Err(CliError::other("config: genesis_seed must not be empty"));
        }
        if self.proof.label.is_empty() {
            return Err(CliError::other("config: proof.label must not be empty"));
        }
        if self.ledger_path.as_os_str().is_empty() {
            return Err(CliError::other("config: ledger_path must not be empty"));
        }
        Ok(())
    }

    /// A `0x`-prefixed address is taken literally; anything else is a name
    /// derived from the genesis seed.
    pub fn principal(&self, name: &str) -> Result<Principal> {
        if let Some(hex) = name.strip_prefix("0x") {
            return Principal::from_hex(hex)
                .ok_or_else(|| CliError::other(format!("invalid address {name}")));
        }
        if name.is_empty() {
            return Err(CliError::other("principal name must not be empty"));
        }
        Ok(Principal::derive(self.genesis_seed.as_bytes(), name))
    }
}
