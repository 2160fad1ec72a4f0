//! Demo translation: translation memory first, then an optional external
//! machine-translation endpoint.

use cep_core::text::normalize_text;
use cep_core::Direction;
use serde::{Deserialize, Serialize};

use crate::config::TranslatorConfig;
use crate::platform::PlatformState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslationSource {
    Memory,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Translation {
    pub translation: String,
    pub source: TranslationSource,
}

#[derive(Debug, thiserror::Error)]
pub enum TranslateError {
    #[error("text is empty")]
    EmptyText,
    #[error("no translation available")]
    Unavailable,
    #[error("external translator failed: {0}")]
    External(String),
}

#[derive(Serialize)]
struct ExternalRequest<'a> {
    text: &'a str,
    direction: Direction,
}

#[derive(Deserialize)]
struct ExternalReply {
    translation: String,
}

/// Client for an external translator speaking `POST {text, direction}` →
/// `{translation}`.
#[derive(Debug, Clone)]
pub struct ExternalTranslator {
    endpoint: String,
    client: reqwest::Client,
}

impl ExternalTranslator {
    pub fn new(config: &TranslatorConfig) -> Option<ExternalTranslator> {
        let endpoint = config.endpoint.clone()?;
        let client = reqwest::Client::builder()
            .timeout(config.timeout())
            .build()
            .expect("http client builds");
        Some(ExternalTranslator { endpoint, client })
    }

    pub async fn translate(&self, text: &str, direction: Direction) -> Result<String, TranslateError> {
        let response = self
            .client
            .post(&self.endpoint)
            .json(&ExternalRequest { text, direction })
            .send()
            .await
            .map_err(|e| TranslateError::External(e.to_string()))?;
        if !response.status().is_success() {
            return Err(TranslateError::External(format!("status {}", response.status())));
        }
        let reply: ExternalReply = response.json().await.map_err(|e| TranslateError::External(e.to_string()))?;
        Ok(reply.translation)
    }
}

/// Looks the text up among verified pairs.
pub fn from_memory(state: &PlatformState, text: &str, direction: Direction) -> Result<Option<Translation>, TranslateError> {
    if normalize_text(text, direction.source()).is_empty() {
        return Err(TranslateError::EmptyText);
    }
    Ok(state.engine.memory_lookup(text, direction).map(|translation| Translation {
        translation,
        source: TranslationSource::Memory,
    }))
}

/// Memory first, then the external binding. The external reply is returned
/// verbatim.
pub async fn translate(
    memory_hit: Option<Translation>,
    external: Option<&ExternalTranslator>,
    text: &str,
    direction: Direction,
) -> Result<Translation, TranslateError> {
    if let Some(hit) = memory_hit {
        return Ok(hit);
    }
    let Some(external) = external else {
        return Err(TranslateError::Unavailable);
    };
    match external.translate(text, direction).await {
        Ok(translation) => Ok(Translation {
            translation,
            source: TranslationSource::External,
        }),
        Err(e) => {
            tracing::warn!(error = %e, "external translator failed");
            Err(e)
        }
    }
}
