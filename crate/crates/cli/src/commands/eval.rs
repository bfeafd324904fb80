use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Subcommand};
use serde_json::{json, Value};

use concept_core::evaluation::{
    accumulated_for_model, coherence, dispute_scores, heatmap, list_similarity, load_annotations,
    load_rankings, load_static_embeddings, partition_all, report, score_curve, threshold_sweep,
    Annotations, Model, RankingSet,
};

use crate::config::RunConfig;
use crate::output::OutputSet;

#[derive(Debug, Clone, Args)]
pub struct RankingsArg {
    /// `{"sentences": [{"sentence_id", "sentence", "base", "concept"}]}`
    #[arg(long)]
    pub rankings: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AnnotatedArgs {
    #[command(flatten)]
    pub rankings: RankingsArg,
    /// CSV with header sentence_id,token,annotator_id,score.
    #[arg(long)]
    pub annotations: PathBuf,
}

#[derive(Debug, Clone, Subcommand)]
pub enum EvalCommand {
    /// Within- and inter-cluster similarity of the top clusters.
    Coherence {
        #[command(flatten)]
        rankings: RankingsArg,
        /// Static word vectors in word2vec text format.
        #[arg(long)]
        vectors: PathBuf,
        /// Clusters (and baseline tokens) per sentence.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Mean annotation score of the top-k items, k = 1..=k_max.
    ScoreAtK {
        #[command(flatten)]
        data: AnnotatedArgs,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Scores of tokens the two rankings disagree on, against the buffer.
    Dispute {
        #[command(flatten)]
        data: AnnotatedArgs,
        #[arg(long)]
        buffer_width: Option<f64>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Mean score of each model's high-zone tokens across buffer widths.
    Sweep {
        #[command(flatten)]
        data: AnnotatedArgs,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',')]
        widths: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(subcommand)]
    pub command: EvalCommand,
}

impl EvalArgs {
    /// Folds subcommand flags into the config so they are recorded with it.
    pub fn apply(&self, cfg: &mut RunConfig) {
        match &self.command {
            EvalCommand::Coherence { top, .. } => {
                if let Some(t) = top {
                    cfg.eval.top = *t;
                }
            }
            EvalCommand::ScoreAtK { k_max, .. } => {
                if let Some(k) = k_max {
                    cfg.eval.k_max = *k;
                }
            }
            EvalCommand::Dispute {
                buffer_width, bins, ..
            } => {
                if let Some(w) = buffer_width {
                    cfg.eval.buffer_width = *w;
                }
                if let Some(b) = bins {
                    cfg.eval.heatmap_bins = *b;
                }
            }
            EvalCommand::Sweep { widths, .. } => {
                if let Some(w) = widths {
                    cfg.eval.sweep_widths = w.clone();
                }
            }
        }
    }
}

fn load(data: &AnnotatedArgs) -> Result<(RankingSet, Annotations)> {
    let rankings = load_rankings(&data.rankings.rankings)?;
    let records = load_annotations(&data.annotations)?;
    Ok((rankings, Annotations::new(&records)?))
}

pub fn run(cfg: &RunConfig, args: &EvalArgs, out: &mut OutputSet) -> Result<Value> {
    let e = &cfg.eval;
    match &args.command {
        EvalCommand::Coherence {
            rankings, vectors, ..
        } => {
            let set = load_rankings(&rankings.rankings)?;
            let emb = load_static_embeddings(vectors)?;
            let clusters: Vec<Vec<Vec<String>>> = set
                .sentences
                .iter()
                .map(|s| s.concept.iter().take(e.top).cloned().collect())
                .collect();
            let tops: Vec<Vec<String>> = set
                .sentences
                .iter()
                .map(|s| s.base.iter().take(e.top).cloned().collect())
                .collect();
            let c = coherence(&clusters, &emb)?;
            let baseline = list_similarity(&tops, &emb).ok();
            let summary = json!({
                "eval": "coherence",
                "top": e.top,
                "n_sentences": set.sentences.len(),
                "coherence": c,
                "baseline_similarity": baseline,
            });
            out.add("coherence.csv", report::coherence_csv(&c, baseline));
            out.add_json("report.json", &summary)?;
            Ok(summary)
        }
        EvalCommand::ScoreAtK { data, .. } => {
            let (set, ann) = load(data)?;
            let concept = score_curve(&set.concept_lists()?, &ann, e.k_max)?;
            let baseline = score_curve(&set.base_lists(), &ann, e.k_max)?;
            let summary = json!({
                "eval": "score_at_k",
                "k_max": e.k_max,
                "n_sentences": set.sentences.len(),
                "concept_at_1": concept.first().map(|p| p.score),
                "baseline_at_1": baseline.first().map(|p| p.score),
                "annotator_mean_variance": ann.mean_variance(),
            });
            out.add(
                "score_at_k.csv",
                report::score_at_k_csv(&concept, &baseline)?,
            );
            out.add_json(
                "report.json",
                &json!({ "summary": summary, "concept": concept, "baseline": baseline }),
            )?;
            Ok(summary)
        }
        EvalCommand::Dispute { data, .. } => {
            let (set, ann) = load(data)?;
            let disputes = partition_all(&set.base_lists(), &set.concept_lists()?, e.buffer_width)?;
            let rows = dispute_scores(&disputes, &ann)?;
            let cells = heatmap(&disputes, &ann, e.heatmap_bins)?;
            let mut curves = Vec::new();
            let mut correlations = serde_json::Map::new();
            for model in [Model::Concept, Model::Baseline] {
                match accumulated_for_model(&disputes, &ann, model) {
                    Ok(acc) => {
                        correlations.insert(model.as_str().into(), json!(acc.correlation));
                        curves.push((model.as_str(), acc));
                    }
                    Err(err) => {
                        log::warn!("no accumulated accuracy for {}: {err}", model.as_str());
                        correlations.insert(model.as_str().into(), Value::Null);
                    }
                }
            }
            let n_disputed = rows
                .iter()
                .filter(|r| r.zone != concept_core::evaluation::Zone::Buffer)
                .map(|r| r.n)
                .sum::<usize>();
            let summary = json!({
                "eval": "dispute",
                "buffer_width": e.buffer_width,
                "n_disputed": n_disputed,
                "zones": rows,
                "correlation": correlations,
                "annotator_mean_variance": ann.mean_variance(),
            });
            let refs: Vec<(&str, &_)> = curves.iter().map(|(m, a)| (*m, a)).collect();
            out.add("dispute_scores.csv", report::dispute_scores_csv(&rows));
            out.add("accumulated.csv", report::accumulated_csv(&refs));
            out.add("heatmap.csv", report::heatmap_csv(&cells));
            out.add_json(
                "report.json",
                &json!({ "summary": summary, "disputes": disputes, "heatmap": cells }),
            )?;
            Ok(summary)
        }
        EvalCommand::Sweep { data, .. } => {
            let (set, ann) = load(data)?;
            let points = threshold_sweep(
                &set.base_lists(),
                &set.concept_lists()?,
                &ann,
                &e.sweep_widths,
            )?;
            let summary = json!({
                "eval": "sweep",
                "widths": e.sweep_widths,
                "points": points,
            });
            out.add("sweep.csv", report::sweep_csv(&points));
            out.add_json("report.json", &summary)?;
            Ok(summary)
        }
    }
}
