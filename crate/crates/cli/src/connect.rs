use std::sync::Arc;

use anyhow::{bail, Result};

use concept_core::backend::{Backend, FixtureMode, FixtureStore, HttpTransport, Transport};

use crate::config::{RunConfig, TOKEN_ENV};

pub fn http_upstream(cfg: &RunConfig) -> Option<Arc<dyn Transport>> {
    cfg.backend.as_ref().map(|url| {
        let token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
        Arc::new(HttpTransport::new(url.clone(), token)) as Arc<dyn Transport>
    })
}

/// Live HTTP, or a fixture store replaying, recording or passing through.
pub fn open_backend(cfg: &RunConfig) -> Result<Backend> {
    let upstream = http_upstream(cfg);
    let transport: Arc<dyn Transport> = match (&cfg.fixtures, upstream) {
        (Some(path), upstream) => {
            if cfg.mode == FixtureMode::Replay && upstream.is_some() {
                log::warn!("replay mode ignores --backend");
            }
            let upstream = if cfg.mode == FixtureMode::Replay {
                None
            } else {
                upstream
            };
            Arc::new(FixtureStore::open(path, cfg.mode, upstream)?)
        }
        (None, Some(http)) => {
            if cfg.mode == FixtureMode::Record {
                bail!("record mode needs --fixtures to record into");
            }
            http
        }
        (None, None) => bail!("no backend: pass --backend URL or --fixtures PATH"),
    };
    Ok(Backend::new(transport))
}
