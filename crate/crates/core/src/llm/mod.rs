//! Client for a locally served chat-completion model, prompt construction
//! and validation of its structured replies.

mod decision;
mod gateway;
mod prompt;

pub use decision::{parse_decision, DecisionError, DecisionFailure, LlmDecision};
pub use gateway::{
    request_body, Completion, GatewayConfig, GatewayError, HttpGateway, LanguageModel,
    DEFAULT_ENDPOINT, DEFAULT_MAX_TOKENS, DEFAULT_MODEL, DEFAULT_TIMEOUT_SECS, REPLY_CAP,
};
pub use prompt::{
    interpret_prompt, report_prompt, PromptBundle, PromptProfile, CONTEXT_LIMIT, RECENT_EVENTS,
};
