use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{Endpoint, Transport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixtureMode {
    /// Forward to the upstream transport and persist every response.
    Record,
    /// Serve stored responses only; a miss is an error.
    Replay,
    /// Forward to the upstream transport without persisting.
    Passthrough,
}

impl std::str::FromStr for FixtureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "record" => Ok(FixtureMode::Record),
            "replay" => Ok(FixtureMode::Replay),
            "passthrough" => Ok(FixtureMode::Passthrough),
            other => Err(Error::InvalidInput(format!(
                "unknown fixture mode {other:?}"
            ))),
        }
    }
}

/// One scripted request/response pair, as written by hand or by a recorder.
/// A `null` or missing response means "ask the upstream backend".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub endpoint: Endpoint,
    pub request: Value,
    #[serde(default)]
    pub response: Value,
}

/// Reads a script file: a JSON array of [`FixtureEntry`].
pub fn read_script(path: &Path) -> Result<Vec<FixtureEntry>> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Builds an in-memory replay store from a script. Entries without a
/// response are fetched from `upstream`; the first failure aborts the build.
/// Repeated requests collapse to one entry.
pub fn build_store(
    script: &[FixtureEntry],
    upstream: Option<&dyn Transport>,
) -> Result<FixtureStore> {
    let store = FixtureStore::in_memory(FixtureMode::Replay);
    for (i, e) in script.iter().enumerate() {
        let response = match (&e.response, upstream) {
            (Value::Null, Some(up)) => up.call(e.endpoint, &e.request).inspect_err(|err| {
                log::error!(
                    "script entry {i} ({} {}) failed: {err}",
                    e.endpoint,
                    e.request
                )
            })?,
            (Value::Null, None) => {
                return Err(Error::InvalidInput(format!(
                    "script entry {i} ({}) has no response and no backend was given",
                    e.endpoint
                )))
            }
            (r, _) => r.clone(),
        };
        store.insert(e.endpoint, e.request.clone(), response);
    }
    Ok(store)
}

/// Canonical text form of a JSON value: object keys sorted, string
/// whitespace collapsed to single spaces and trimmed, no insignificant
/// whitespace between tokens.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::String(s) => {
            out.push_str(&serde_json::to_string(&normalize_ws(s)).expect("string serializes"))
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("key serializes"));
                out.push(':');
                write_canonical(&map[key], out);
            }
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

/// Hex SHA-256 of the canonical `{endpoint, params}` document.
pub fn request_digest(endpoint: Endpoint, request: &Value) -> String {
    let doc = serde_json::json!({ "endpoint": endpoint.as_str(), "params": request });
    hex::encode(Sha256::digest(canonical_json(&doc).as_bytes()))
}

/// Map from request digest to recorded response, optionally backed by a file.
pub struct FixtureStore {
    mode: FixtureMode,
    path: Option<PathBuf>,
    upstream: Option<Arc<dyn Transport>>,
    entries: Mutex<BTreeMap<String, Value>>,
}

impl std::fmt::Debug for FixtureStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FixtureStore")
            .field("mode", &self.mode)
            .field("path", &self.path)
            .field("entries", &self.len())
            .finish()
    }
}

impl FixtureStore {
    /// An empty store that lives only in memory.
    pub fn in_memory(mode: FixtureMode) -> Self {
        Self {
            mode,
            path: None,
            upstream: None,
            entries: Mutex::new(BTreeMap::new()),
        }
    }

    /// Opens a store file. Replay requires the file to exist; record starts
    /// empty when it does not.
    pub fn open(
        path: impl Into<PathBuf>,
        mode: FixtureMode,
        upstream: Option<Arc<dyn Transport>>,
    ) -> Result<Self> {
        let path = path.into();
        if mode != FixtureMode::Replay && upstream.is_none() {
            return Err(Error::InvalidInput(format!(
                "{mode:?} mode needs an upstream backend"
            )));
        }
        let entries = if path.exists() {
            Self::read_entries(&path)?
        } else if mode == FixtureMode::Replay {
            return Err(Error::InvalidInput(format!(
                "fixture store {} does not exist",
                path.display()
            )));
        } else {
            BTreeMap::new()
        };
        Ok(Self {
            mode,
            path: Some(path),
            upstream,
            entries: Mutex::new(entries),
        })
    }

    /// A store wrapping `upstream` with nothing persisted and no file.
    pub fn with_upstream(mode: FixtureMode, upstream: Arc<dyn Transport>) -> Self {
        Self {
            mode,
            path: None,
            upstream: Some(upstream),
            entries: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn from_entries(mode: FixtureMode, entries: &[FixtureEntry]) -> Self {
        let store = Self::in_memory(mode);
        for e in entries {
            store.insert(e.endpoint, e.request.clone(), e.response.clone());
        }
        store
    }

    fn read_entries(path: &Path) -> Result<BTreeMap<String, Value>> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn mode(&self) -> FixtureMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("fixture lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&self, endpoint: Endpoint, request: Value, response: Value) {
        let digest = request_digest(endpoint, &request);
        self.entries
            .lock()
            .expect("fixture lock")
            .insert(digest, response);
    }

    pub fn get(&self, endpoint: Endpoint, request: &Value) -> Option<Value> {
        let digest = request_digest(endpoint, request);
        self.entries
            .lock()
            .expect("fixture lock")
            .get(&digest)
            .cloned()
    }

    /// The store file contents: pretty JSON, sorted digests, trailing LF.
    pub fn to_document(&self) -> String {
        let entries = self.entries.lock().expect("fixture lock");
        Self::render(&entries)
    }

    fn render(entries: &BTreeMap<String, Value>) -> String {
        let mut doc = serde_json::to_string_pretty(entries).expect("fixture map serializes");
        doc.push('\n');
        doc
    }

    pub fn save_to(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_document()).map_err(|e| Error::FixtureWrite(e.to_string()))
    }
}

impl Transport for FixtureStore {
    fn call(&self, endpoint: Endpoint, request: &Value) -> Result<Value> {
        match self.mode {
            FixtureMode::Replay => {
                let digest = request_digest(endpoint, request);
                self.entries
                    .lock()
                    .expect("fixture lock")
                    .get(&digest)
                    .cloned()
                    .ok_or_else(|| Error::ReplayMiss {
                        endpoint: endpoint.to_string(),
                        digest,
                    })
            }
            FixtureMode::Passthrough => self.upstream()?.call(endpoint, request),
            FixtureMode::Record => {
                let response = self.upstream()?.call(endpoint, request)?;
                let digest = request_digest(endpoint, request);
                let mut entries = self.entries.lock().expect("fixture lock");
                entries.insert(digest, response.clone());
                if let Some(path) = &self.path {
                    fs::write(path, Self::render(&entries))
                        .map_err(|e| Error::FixtureWrite(format!("{}: {e}", path.display())))?;
                }
                Ok(response)
            }
        }
    }
}

impl FixtureStore {
    fn upstream(&self) -> Result<&Arc<dyn Transport>> {
        self.upstream
            .as_ref()
            .ok_or_else(|| Error::BackendUnreachable("no upstream backend configured".into()))
    }
}
