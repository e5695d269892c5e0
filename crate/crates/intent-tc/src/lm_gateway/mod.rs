//! Pluggable language-model access.
//!
//! One call shape: prompt text in, completion text out. The remote backend
//! speaks the common chat-completions JSON dialect; the mock backend
//! ([`mock`]) answers deterministically from the prompt alone, so every
//! pipeline stage can run offline and reproducibly.

pub(crate) mod mock;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Backend { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("no endpoint configured (set endpoint or INTENT_TC_ENDPOINT)")]
    MissingEndpoint,
    #[error("mock backend: {0}")]
    Mock(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Mock,
    Remote,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mock" => Ok(Backend::Mock),
            "remote" => Ok(Backend::Remote),
            other => Err(format!("unknown backend `{other}` (expected mock or remote)")),
        }
    }
}

/// Connection and sampling settings. Temperature 0 keeps remote runs as
/// repeatable as the backend allows; the mock ignores sampling entirely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub backend: Backend,
    pub endpoint: Option<String>,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    /// Additional attempts after a transport error or 5xx.
    pub retries: u32,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            backend: Backend::Mock,
            endpoint: None,
            model_name: "mock".to_string(),
            temperature: 0.0,
            max_tokens: 1024,
            timeout_secs: 30,
            retries: 2,
            seed: 0,
        }
    }
}

pub struct LmGateway {
    config: ModelConfig,
}

impl LmGateway {
    pub fn new(config: ModelConfig) -> Self {
        LmGateway { config }
    }

    /// Gateway over the deterministic mock backend.
    pub fn mock() -> Self {
        LmGateway::new(ModelConfig::default())
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Complete a prompt. The prompt is passed through verbatim; the
    /// gateway adds nothing and strips nothing.
    pub fn complete(&self, prompt: &str) -> Result<String, GatewayError> {
        match self.config.backend {
            Backend::Mock => mock::complete(prompt),
            Backend::Remote => self.complete_remote(prompt),
        }
    }

    fn complete_remote(&self, prompt: &str) -> Result<String, GatewayError> {
        let endpoint = self
            .config
            .endpoint
            .clone()
            .or_else(|| std::env::var("INTENT_TC_ENDPOINT").ok())
            .ok_or(GatewayError::MissingEndpoint)?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(self.config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let body = serde_json::json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
            "seed": self.config.seed,
        });

        let mut last_err = GatewayError::Transport("no attempt made".to_string());
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(250 << (attempt - 1)));
            }
            let mut request = client.post(&endpoint).json(&body);
            if let Ok(key) = std::env::var("INTENT_TC_API_KEY") {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let value: serde_json::Value = response
                            .json()
                            .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
                        return extract_content(&value);
                    }
                    let err = GatewayError::Backend {
                        status: status.as_u16(),
                        body: response.text().unwrap_or_default(),
                    };
                    if status.is_server_error() {
                        last_err = err;
                        continue;
                    }
                    return Err(err);
                }
                Err(e) => last_err = GatewayError::Transport(e.to_string()),
            }
        }
        Err(last_err)
    }
}

fn extract_content(value: &serde_json::Value) -> Result<String, GatewayError> {
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| {
            GatewayError::MalformedResponse("choices[0].message.content missing".to_string())
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    /// One-shot HTTP server answering every request with `body`.
    fn serve(responses: Vec<String>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for response in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = [0u8; 8192];
                let _ = stream.read(&mut buf);
                let _ = stream.write_all(response.as_bytes());
            }
        });
        format!("http://{addr}/v1/chat/completions")
    }

    fn ok_response(content: &str) -> String {
        let body = serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": content}}]
        })
        .to_string();
        format!(
            "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
            body.len(),
            body
        )
    }

    fn remote_config(endpoint: String) -> ModelConfig {
        ModelConfig {
            backend: Backend::Remote,
            endpoint: Some(endpoint),
            retries: 1,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn remote_backend_round_trips() {
        let endpoint = serve(vec![ok_response("hello back")]);
        let gateway = LmGateway::new(remote_config(endpoint));
        assert_eq!(gateway.complete("hello").unwrap(), "hello back");
    }

    #[test]
    fn server_errors_are_retried() {
        let error = "HTTP/1.1 500 Internal Server Error\r\ncontent-length: 4\r\nconnection: close\r\n\r\noops"
            .to_string();
        let endpoint = serve(vec![error, ok_response("second try")]);
        let gateway = LmGateway::new(remote_config(endpoint));
        assert_eq!(gateway.complete("hello").unwrap(), "second try");
    }

    #[test]
    fn client_errors_are_not_retried() {
        let error = "HTTP/1.1 400 Bad Request\r\ncontent-length: 3\r\nconnection: close\r\n\r\nbad"
            .to_string();
        let endpoint = serve(vec![error]);
        let gateway = LmGateway::new(remote_config(endpoint));
        match gateway.complete("hello") {
            Err(GatewayError::Backend { status: 400, body }) => assert_eq!(body, "bad"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_payload_is_reported() {
        let body = r#"{"unexpected": true}"#;
        let response = format!(
            "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
            body.len(),
            body
        );
        let endpoint = serve(vec![response]);
        let gateway = LmGateway::new(remote_config(endpoint));
        assert!(matches!(gateway.complete("x"), Err(GatewayError::MalformedResponse(_))));
    }

    #[test]
    fn missing_endpoint_is_an_error() {
        let config = ModelConfig { backend: Backend::Remote, ..ModelConfig::default() };
        // Guard against an ambient endpoint leaking into the test.
        if std::env::var("INTENT_TC_ENDPOINT").is_ok() {
            return;
        }
        assert!(matches!(
            LmGateway::new(config).complete("x"),
            Err(GatewayError::MissingEndpoint)
        ));
    }

    #[test]
    fn default_config_serializes_round_trip() {
        let config = ModelConfig::default();
        let json = serde_json::to_string(&config).unwrap();
        assert_eq!(serde_json::from_str::<ModelConfig>(&json).unwrap(), config);
        let partial: ModelConfig = serde_json::from_str(r#"{"backend":"remote"}"#).unwrap();
        assert_eq!(partial.backend, Backend::Remote);
        assert_eq!(partial.retries, 2);
    }
}
