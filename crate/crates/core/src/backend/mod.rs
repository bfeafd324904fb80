//! Narrow contract to a language-model backend.
//!
//! Every model interaction goes through a [`Transport`], which exchanges JSON
//! documents with one of five endpoints (`complete`, `embed`, `ask`,
//! `paraphrase`, `describe`). [`Backend`] layers the typed operations and
//! their post-conditions on top: ordering and truncation of completions,
//! the yes/no parse rule, paraphrase filtering, and dimensionality checks
//! against the backend's self-description.
//!
//! Two transports ship with the crate: [`HttpTransport`] speaks the `/v1`
//! wire protocol, and [`FixtureStore`] records or replays responses keyed by
//! a canonical request digest so that nothing downstream needs a model.

mod fixture;
mod http;

use std::collections::{BTreeMap, HashSet};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub use fixture::{
    build_store, canonical_json, read_script, request_digest, FixtureEntry, FixtureMode,
    FixtureStore,
};
pub use http::HttpTransport;

/// The literal mask marker every [`MaskedSentence`] carries exactly once.
pub const MASK: &str = "[MASK]";

/// A sentence with exactly one mask slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaskedSentence {
    id: String,
    text: String,
}

impl MaskedSentence {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::InvalidSentence("sentence is empty".into()));
        }
        let markers = text.matches(MASK).count();
        if markers != 1 {
            return Err(Error::InvalidSentence(format!(
                "expected exactly one {MASK} marker, found {markers} in {text:?}"
            )));
        }
        Ok(Self {
            id: id.into(),
            text,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// The sentence with `token` substituted into the mask slot.
    pub fn fill(&self, token: &str) -> String {
        self.text.replacen(MASK, token, 1)
    }
}

/// A candidate filler for a mask slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenCompletion {
    pub token: String,
    pub score: f64,
    pub is_subword: bool,
    /// Index of the sentence (within an augmentation set) that produced it.
    pub source_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Yes,
    No,
    Unparseable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryAnswer {
    pub verdict: Verdict,
    pub raw: String,
}

impl BinaryAnswer {
    /// Prefix rule on the lowercased, trimmed response. Total over all strings.
    pub fn parse(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let normalized = raw.trim().to_lowercase();
        let verdict = if normalized.starts_with("yes") {
            Verdict::Yes
        } else if normalized.starts_with("no") {
            Verdict::No
        } else {
            Verdict::Unparseable
        };
        Self { verdict, raw }
    }
}

/// Handshake document returned by `/v1/describe`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub model_name: String,
    pub embedding_dim: usize,
    pub max_k: usize,
    /// Anything else the backend chooses to report (decoding parameters, notes).
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Complete,
    Embed,
    Ask,
    Paraphrase,
    Describe,
}

impl Endpoint {
    pub fn as_str(self) -> &'static str {
        match self {
            Endpoint::Complete => "complete",
            Endpoint::Embed => "embed",
            Endpoint::Ask => "ask",
            Endpoint::Paraphrase => "paraphrase",
            Endpoint::Describe => "describe",
        }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Endpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Endpoint::Complete),
            "embed" => Ok(Endpoint::Embed),
            "ask" => Ok(Endpoint::Ask),
            "paraphrase" => Ok(Endpoint::Paraphrase),
            "describe" => Ok(Endpoint::Describe),
            other => Err(Error::InvalidInput(format!("unknown endpoint {other:?}"))),
        }
    }
}

/// Moves one JSON request to an endpoint and returns its JSON response.
///
/// Implementations must tolerate concurrent calls.
pub trait Transport: Send + Sync {
    fn call(&self, endpoint: Endpoint, request: &Value) -> Result<Value>;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn call(&self, endpoint: Endpoint, request: &Value) -> Result<Value> {
        (**self).call(endpoint, request)
    }
}

#[derive(Deserialize)]
struct CompleteResponse {
    completions: Vec<WireCompletion>,
}

#[derive(Deserialize)]
struct WireCompletion {
    token: String,
    score: f64,
    #[serde(default)]
    is_subword: bool,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

#[derive(Deserialize)]
struct AskResponse {
    answer: String,
}

#[derive(Deserialize)]
struct ParaphraseResponse {
    paraphrases: Vec<String>,
}

fn decode<T: serde::de::DeserializeOwned>(endpoint: Endpoint, value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::MalformedResponse {
        endpoint: endpoint.to_string(),
        reason: e.to_string(),
    })
}

fn malformed(endpoint: Endpoint, reason: impl Into<String>) -> Error {
    Error::MalformedResponse {
        endpoint: endpoint.to_string(),
        reason: reason.into(),
    }
}

/// Typed client over any [`Transport`].
#[derive(Clone)]
pub struct Backend {
    transport: Arc<dyn Transport>,
    descriptor: Arc<OnceLock<Descriptor>>,
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backend")
            .field("descriptor", &self.descriptor.get())
            .finish_non_exhaustive()
    }
}

impl Backend {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        Self {
            transport,
            descriptor: Arc::new(OnceLock::new()),
        }
    }

    /// Fetches (once) and returns the backend's self-description.
    pub fn describe(&self) -> Result<&Descriptor> {
        if let Some(d) = self.descriptor.get() {
            return Ok(d);
        }
        let raw = self.transport.call(Endpoint::Describe, &json!({}))?;
        let d: Descriptor = decode(Endpoint::Describe, raw)?;
        if d.embedding_dim == 0 || d.max_k == 0 {
            return Err(malformed(
                Endpoint::Describe,
                "embedding_dim and max_k must be positive",
            ));
        }
        Ok(self.descriptor.get_or_init(|| d))
    }

    /// Top-`k` fillers for the mask slot, by descending score, ties broken by token.
    pub fn top_k_completions(&self, s: &MaskedSentence, k: usize) -> Result<Vec<TokenCompletion>> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        let max_k = self.describe()?.max_k;
        if k > max_k {
            return Err(Error::KExceedsCapability {
                requested: k,
                max_k,
            });
        }
        let raw = self
            .transport
            .call(Endpoint::Complete, &json!({ "sentence": s.text(), "k": k }))?;
        let resp: CompleteResponse = decode(Endpoint::Complete, raw)?;
        let mut out = Vec::with_capacity(resp.completions.len());
        for c in resp.completions {
            if c.token.is_empty() {
                return Err(malformed(Endpoint::Complete, "empty token"));
            }
            if !(0.0..=1.0).contains(&c.score) {
                return Err(malformed(
                    Endpoint::Complete,
                    format!("score {} for {:?} outside [0, 1]", c.score, c.token),
                ));
            }
            out.push(TokenCompletion {
                token: c.token,
                score: c.score,
                is_subword: c.is_subword,
                source_index: 0,
            });
        }
        out.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.token.cmp(&b.token))
        });
        out.truncate(k);
        Ok(out)
    }

    /// Final-layer vector of `token` placed into the mask slot of `s`.
    pub fn contextual_embedding(&self, s: &MaskedSentence, token: &str) -> Result<EmbeddingVector> {
        if token.is_empty() {
            return Err(Error::InvalidInput("embedding token is empty".into()));
        }
        let dim = self.describe()?.embedding_dim;
        let raw = self.transport.call(
            Endpoint::Embed,
            &json!({ "sentence": s.text(), "token": token }),
        )?;
        let resp: EmbedResponse = decode(Endpoint::Embed, raw)?;
        if resp.vector.len() != dim {
            return Err(malformed(
                Endpoint::Embed,
                format!(
                    "vector has {} values, descriptor says {dim}",
                    resp.vector.len()
                ),
            ));
        }
        if resp.vector.iter().any(|v| !v.is_finite()) {
            return Err(malformed(Endpoint::Embed, "non-finite vector entry"));
        }
        Ok(EmbeddingVector {
            values: resp.vector,
        })
    }

    pub fn ask_binary(&self, question: &str) -> Result<BinaryAnswer> {
        if question.trim().is_empty() {
            return Err(Error::InvalidInput("question is empty".into()));
        }
        let raw = self
            .transport
            .call(Endpoint::Ask, &json!({ "question": question }))?;
        let resp: AskResponse = decode(Endpoint::Ask, raw)?;
        Ok(BinaryAnswer::parse(resp.answer))
    }

    /// Distinct paraphrases of an unmasked sentence, excluding the input itself.
    pub fn paraphrase(&self, sentence: &str) -> Result<Vec<String>> {
        if sentence.trim().is_empty() {
            return Err(Error::InvalidInput(
                "sentence to paraphrase is empty".into(),
            ));
        }
        if sentence.contains(MASK) {
            return Err(Error::InvalidInput(
                "sentence to paraphrase still contains a mask marker".into(),
            ));
        }
        let raw = self
            .transport
            .call(Endpoint::Paraphrase, &json!({ "sentence": sentence }))?;
        let resp: ParaphraseResponse = decode(Endpoint::Paraphrase, raw)?;
        let input = sentence.trim();
        let mut seen = HashSet::new();
        Ok(resp
            .paraphrases
            .into_iter()
            .filter(|p| {
                let p = p.trim();
                !p.is_empty() && p != input
            })
            .filter(|p| seen.insert(p.clone()))
            .collect())
    }
}
