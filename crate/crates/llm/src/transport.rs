//! Pluggable transports: live HTTP and recorded-fixture replay.

use std::path::PathBuf;
use std::time::Duration;

use serde::Deserialize;

use crate::config::BridgeConfig;
use crate::protocol::ChatRequest;
use crate::BridgeError;

pub trait Transport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, BridgeError>;
}

/// Replace every occurrence of a secret with a placeholder before text can
/// reach a trace or error message.
pub fn scrub_secrets(text: &str, secrets: &[String]) -> String {
    let mut out = text.to_string();
    for s in secrets {
        if !s.is_empty() {
            out = out.replace(s, "[redacted]");
        }
    }
    out
}

/// Blocking HTTP transport with a per-request timeout. One in-flight request
/// per derivation.
pub struct HttpTransport {
    cfg: BridgeConfig,
}

impl HttpTransport {
    pub fn new(cfg: BridgeConfig) -> Result<HttpTransport, BridgeError> {
        cfg.validate()?;
        Ok(HttpTransport { cfg })
    }
}

impl Transport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, BridgeError> {
        let key = self.cfg.api_key()?;
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(self.cfg.timeout_secs))
            .build();
        let response = agent
            .post(&self.cfg.endpoint)
            .set("Authorization", &format!("Bearer {key}"))
            .set("Content-Type", "application/json")
            .send_json(
                serde_json::to_value(request)
                    .map_err(|e| BridgeError::Transport(e.to_string()))?,
            );
        match response {
            Ok(resp) => resp
                .into_string()
                .map_err(|e| BridgeError::Transport(scrub_secrets(&e.to_string(), &[key]))),
            Err(e) => Err(BridgeError::Transport(scrub_secrets(
                &e.to_string(),
                &[key],
            ))),
        }
    }
}

/// Fixture file layout under the replay directory: `<role>_<scenario>.json`.
#[derive(Debug, Deserialize)]
struct Fixture {
    #[allow(dead_code)]
    #[serde(default)]
    kind: String,
    #[allow(dead_code)]
    #[serde(default)]
    scenario_id: String,
    /// Full chat-completion response body.
    response: serde_json::Value,
}

/// Replays recorded responses keyed by the `# role:` / `# scenario:` header
/// lines of the rendered prompt. No network is involved.
pub struct ReplayTransport {
    dir: PathBuf,
}

impl ReplayTransport {
    pub fn new(dir: impl Into<PathBuf>) -> ReplayTransport {
        ReplayTransport { dir: dir.into() }
    }

    fn header_field(content: &str, key: &str) -> Option<String> {
        content.lines().find_map(|line| {
            line.strip_prefix(&format!("# {key}: "))
                .map(|v| v.trim().to_string())
        })
    }
}

impl Transport for ReplayTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, BridgeError> {
        let prompt = request
            .messages
            .iter()
            .find(|m| m.role == "user")
            .map(|m| m.content.as_str())
            .unwrap_or("");
        let role = Self::header_field(prompt, "role")
            .ok_or_else(|| BridgeError::Transport("prompt lacks role header".into()))?;
        let scenario = Self::header_field(prompt, "scenario")
            .ok_or_else(|| BridgeError::Transport("prompt lacks scenario header".into()))?;
        let path = self.dir.join(format!("{role}_{scenario}.json"));
        let text = std::fs::read_to_string(&path).map_err(|e| {
            BridgeError::Transport(format!("no fixture at {}: {e}", path.display()))
        })?;
        let fixture: Fixture = serde_json::from_str(&text)
            .map_err(|e| BridgeError::Transport(format!("bad fixture {}: {e}", path.display())))?;
        serde_json::to_string(&fixture.response)
            .map_err(|e| BridgeError::Transport(e.to_string()))
    }
}
