//! Chat-completion-backed planner and patcher implementations.
//!
//! Both roles render versioned prompt templates, call a pluggable transport
//! (live HTTP or recorded fixtures), and parse the reply's single fenced
//! code block into plan steps. Model-originated steps pass exactly the same
//! validator as deterministic plans; nothing in the test suite touches the
//! network.

mod bridge;
mod config;
mod prompt;
mod protocol;
mod transport;

pub use bridge::{llm_patch, llm_plan, LlmPatcher, LlmPlanner};
pub use config::{BridgeConfig, DEFAULT_API_KEY_ENV};
pub use protocol::{ChatMessage, ChatRequest, ChatResponse};
pub use transport::{scrub_secrets, HttpTransport, ReplayTransport, Transport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("API key environment variable `{0}` is not set")]
    AuthMissing(String),
    #[error("invalid model reply: {message}")]
    PlanInvalid {
        message: String,
        /// Raw reply attached for the trace; secrets scrubbed.
        raw_reply: Option<String>,
    },
    #[error("bridge configuration: {0}")]
    Config(String),
}
