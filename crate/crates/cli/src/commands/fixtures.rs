use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use serde_json::{json, Value};

use concept_core::backend::{build_store, read_script};

use crate::config::RunConfig;
use crate::connect::http_upstream;

#[derive(Debug, Clone, Subcommand)]
pub enum FixturesCommand {
    /// Turn a request script into a replay store. Entries without a response
    /// are fetched from --backend.
    Build {
        #[arg(long)]
        script: PathBuf,
        /// Where to write the store.
        #[arg(long)]
        store: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct FixturesArgs {
    #[command(subcommand)]
    pub command: FixturesCommand,
}

pub fn run(cfg: &RunConfig, args: &FixturesArgs) -> Result<Value> {
    match &args.command {
        FixturesCommand::Build { script, store } => {
            let entries = read_script(script)?;
            let upstream = http_upstream(cfg);
            let built = build_store(&entries, upstream.as_deref())?;
            let tmp = store.with_extension("json.tmp");
            std::fs::write(&tmp, built.to_document())
                .with_context(|| format!("writing {}", tmp.display()))?;
            std::fs::rename(&tmp, store).with_context(|| format!("writing {}", store.display()))?;
            Ok(json!({
                "store": store,
                "script_entries": entries.len(),
                "store_entries": built.len(),
            }))
        }
    }
}
