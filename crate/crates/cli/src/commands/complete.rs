use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde_json::{json, Value};

use concept_core::backend::MaskedSentence;
use concept_core::concepts::complete_concepts;
use concept_core::evaluation::{RankingSet, SentenceRankings};
use concept_core::pipeline::Stopwords;

use crate::config::RunConfig;
use crate::connect::open_backend;
use crate::output::OutputSet;

#[derive(Debug, Clone, Args)]
pub struct CompleteArgs {
    /// Sentence with exactly one [MASK].
    pub sentence: String,
    /// Stopword file, one word per line (defaults to a built-in English list).
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Also write the augmentation set, aggregation tables and embeddings.
    #[arg(long)]
    pub dump_intermediate: bool,
}

pub fn run(cfg: &RunConfig, args: &CompleteArgs, out: &mut OutputSet) -> Result<Value> {
    let s0 = MaskedSentence::new("s0", &args.sentence)?;
    let stopwords = match &args.stopwords {
        Some(p) => Stopwords::from_file(p)?,
        None => Stopwords::english(),
    };
    let backend = open_backend(cfg)?;
    let run = complete_concepts(&s0, &backend, &cfg.concept_config(), &stopwords)?;
    let doc = &run.document;

    out.add("concepts.json", doc.to_json());
    out.add_json(
        "rankings.json",
        &RankingSet {
            sentences: vec![SentenceRankings::from_document("s0", doc)],
        },
    )?;
    if args.dump_intermediate {
        out.add_json("intermediate.json", &run.intermediate())?;
        if let Some(e) = &run.embeddings {
            out.add("embeddings.csv", e.to_csv());
        }
        if let Some(r) = &run.reduced {
            out.add("reduced.csv", r.to_csv());
        }
    }
    Ok(json!({
        "seed_token": doc.seed_token,
        "m": doc.m,
        "effective_perplexity": doc.effective_perplexity,
        "concepts": doc.concepts.iter().take(10).map(|c| json!({
            "rank": c.rank,
            "weight": c.weight,
            "tokens": c.tokens,
        })).collect::<Vec<_>>(),
    }))
}
