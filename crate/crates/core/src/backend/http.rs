use std::time::Duration;

use serde_json::Value;

use super::{Endpoint, Transport};
use crate::error::{Error, Result};

/// `/v1` wire protocol over HTTP, with an optional bearer token.
pub struct HttpTransport {
    base_url: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(base_url: impl Into<String>, token: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(300)))
            .build()
            .into();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            token,
            agent,
        }
    }

    pub fn url(&self, endpoint: Endpoint) -> String {
        format!("{}/v1/{}", self.base_url, endpoint.as_str())
    }
}

impl std::fmt::Debug for HttpTransport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpTransport")
            .field("base_url", &self.base_url)
            .field("token", &self.token.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl Transport for HttpTransport {
    fn call(&self, endpoint: Endpoint, request: &Value) -> Result<Value> {
        let url = self.url(endpoint);
        let mut req = self.agent.post(&url);
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(request)
            .map_err(|e| Error::BackendUnreachable(format!("{url}: {e}")))?;
        resp.body_mut()
            .read_json::<Value>()
            .map_err(|e| Error::MalformedResponse {
                endpoint: endpoint.to_string(),
                reason: e.to_string(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn urls_are_versioned() {
        let t = HttpTransport::new("http://localhost:8080/", None);
        assert_eq!(
            t.url(Endpoint::Complete),
            "http://localhost:8080/v1/complete"
        );
        assert_eq!(
            t.url(Endpoint::Describe),
            "http://localhost:8080/v1/describe"
        );
    }

    #[test]
    fn unreachable_server_is_reported() {
        // Port 9 (discard) is essentially never listening on loopback.
        let t = HttpTransport::new("http://127.0.0.1:9", Some("secret".into()));
        let err = t
            .call(Endpoint::Describe, &serde_json::json!({}))
            .unwrap_err();
        assert!(matches!(err, Error::BackendUnreachable(_)));
        assert!(!format!("{t:?}").contains("secret"));
    }
}
