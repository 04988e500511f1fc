//! HTTP provider speaking the common vision-chat-completion request shape.
//!
//! The request carries the model id, sampling temperature, an output-token
//! cap, and a single user message with one text part (the prompt) and one
//! image part (the bytes base64-encoded into a `data:` URL). The exact JSON
//! layout is pinned by a serialization test and documented in the README.
//! Credentials come exclusively from the [`API_KEY_ENV`] environment
//! variable, sent as a bearer token.

use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use super::{CompletionRequest, LmmError, LmmProvider, ProviderError};

pub const API_KEY_ENV: &str = "FLOODGAUGE_API_KEY";

/// Builds the JSON body for one completion request.
pub fn build_request_body(request: &CompletionRequest<'_>) -> Value {
    let encoded = base64::engine::general_purpose::STANDARD.encode(&request.image.bytes);
    json!({
        "model": request.model_id,
        "temperature": request.temperature,
        "max_tokens": request.max_output_tokens,
        "messages": [{
            "role": "user",
            "content": [
                { "type": "text", "text": request.prompt_text },
                {
                    "type": "image_url",
                    "image_url": {
                        "url": format!("data:{};base64,{encoded}", request.image.media_type)
                    }
                }
            ]
        }]
    })
}

/// Pulls the assistant text out of a chat-completion response body.
pub fn extract_response_text(body: &Value) -> Option<String> {
    body.get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(str::to_string)
}

pub struct HttpProvider {
    endpoint: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(endpoint: &str, api_key: String, timeout: Duration) -> Result<Self, LmmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LmmError::Storage(format!("http client construction failed: {e}")))?;
        Ok(Self {
            endpoint: endpoint.to_string(),
            api_key,
            client,
        })
    }

    /// Reads the API key from [`API_KEY_ENV`]; never from flags or files.
    pub fn from_env(endpoint: &str, timeout: Duration) -> Result<Self, LmmError> {
        let api_key =
            std::env::var(API_KEY_ENV).map_err(|_| LmmError::MissingApiKey(API_KEY_ENV))?;
        Self::new(endpoint, api_key, timeout)
    }
}

fn retryable_status(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

impl LmmProvider for HttpProvider {
    fn name(&self) -> &'static str {
        "http"
    }

    fn is_offline(&self) -> bool {
        false
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        let body = build_request_body(request);
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| ProviderError::Retryable {
                message: format!("transport error: {e}"),
            })?;

        let status = response.status().as_u16();
        let text = response.text().unwrap_or_default();
        if retryable_status(status) {
            return Err(ProviderError::Retryable {
                message: format!("status {status}: {}", truncate(&text, 200)),
            });
        }
        if !(200..300).contains(&status) {
            return Err(ProviderError::Rejection {
                status: Some(status),
                message: truncate(&text, 500),
            });
        }
        let parsed: Value = serde_json::from_str(&text).map_err(|e| ProviderError::Rejection {
            status: None,
            message: format!("malformed response body: {e}"),
        })?;
        extract_response_text(&parsed).ok_or_else(|| ProviderError::Rejection {
            status: None,
            message: "response carries no message content".into(),
        })
    }
}

fn truncate(s: &str, max: usize) -> String {
    if s.len() <= max {
        s.to_string()
    } else {
        let mut end = max;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &s[..end])
    }
}
