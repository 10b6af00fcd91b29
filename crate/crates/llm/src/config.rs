use serde::{Deserialize, Serialize};

use crate::BridgeError;

pub const DEFAULT_API_KEY_ENV: &str = "CRBFORGE_LLM_API_KEY";

/// Connection settings for the chat-completion service.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BridgeConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key. The key itself
    /// never lives in config files or traces.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub temperature: f64,
}

fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.to_string()
}

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> u32 {
    2
}

impl BridgeConfig {
    pub fn validate(&self) -> Result<(), BridgeError> {
        if self.endpoint.is_empty() {
            return Err(BridgeError::Config("endpoint must not be empty".into()));
        }
        if !(1..=600).contains(&self.timeout_secs) {
            return Err(BridgeError::Config(format!(
                "timeout {}s outside 1..=600",
                self.timeout_secs
            )));
        }
        Ok(())
    }

    pub fn api_key(&self) -> Result<String, BridgeError> {
        std::env::var(&self.api_key_env)
            .map_err(|_| BridgeError::AuthMissing(self.api_key_env.clone()))
    }
}
