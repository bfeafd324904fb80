use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Subcommand, ValueEnum};
use serde_json::{json, Value};

use concept_core::backend::Backend;
use concept_core::isa_probe::{
    asymmetry_at, asymmetry_curve, distractor_questions, inheritance_scores, isa_query_text,
    load_ontology, load_triplets, probe_asymmetry, probe_transitivity, report, retrieval_curve,
    transitivity_at, transitivity_curve, Direction, Ontology, ParaphrasedSentences, Prober,
    QueryMode, RelationOutcome, SentenceBuilder, TemplateSentences,
};

use crate::config::RunConfig;
use crate::connect::open_backend;
use crate::output::OutputSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Hypernym,
    Hyponym,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Hypernym => Direction::Hypernym,
            DirectionArg::Hyponym => Direction::Hyponym,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SentenceSource {
    /// "<object> <predicate> <subject>."
    Template,
    /// First backend paraphrase that mentions both terms.
    Paraphrase,
}

#[derive(Debug, Clone, Args)]
pub struct OntologyArg {
    /// Ontology file, one JSON object per line.
    #[arg(long)]
    pub ontology: PathBuf,
}

#[derive(Debug, Clone, Subcommand)]
pub enum ProbeCommand {
    /// Retrieval of is-a relations on one side of the ontology, for every k.
    Isa {
        #[command(flatten)]
        data: OntologyArg,
        #[arg(long, value_enum, default_value = "hypernym")]
        direction: DirectionArg,
    },
    /// Share of retrieved relations whose reverse is not retrieved.
    Asymmetry {
        #[command(flatten)]
        data: OntologyArg,
        #[arg(long, value_enum, default_value = "hypernym")]
        direction: DirectionArg,
    },
    /// Retrieval of hyponym-hypernym relations whose two links were retrieved.
    Transitivity {
        #[command(flatten)]
        data: OntologyArg,
    },
    /// Whether hypernym properties carry over to ETs and hyponyms.
    Inheritance {
        #[command(flatten)]
        data: OntologyArg,
        /// Tab-separated object, predicate, subject, saliency.
        #[arg(long)]
        triplets: PathBuf,
        #[arg(long, value_enum, default_value = "template")]
        sentences: SentenceSource,
    },
    /// Negative yes/no questions for balancing an annotation sheet (never scored).
    Distractors {
        #[command(flatten)]
        data: OntologyArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QueryModeArg {
    Masked,
    Binary,
}

#[derive(Debug, Clone, Args)]
pub struct ProbeArgs {
    #[command(subcommand)]
    pub command: ProbeCommand,
    /// Largest k for masked queries.
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    #[arg(long, value_enum, global = true)]
    pub query_mode: Option<QueryModeArg>,
    #[arg(long, global = true)]
    pub saliency_threshold: Option<f64>,
    /// Distractor questions of each kind.
    #[arg(long, global = true)]
    pub per_kind: Option<usize>,
}

impl ProbeArgs {
    /// Folds probe flags into the config so they are recorded with it.
    pub fn apply(&self, cfg: &mut RunConfig) {
        let p = &mut cfg.probe;
        if let Some(k) = self.k_max {
            p.k_max = k;
        }
        if let Some(m) = self.query_mode {
            p.query_mode = match m {
                QueryModeArg::Masked => QueryMode::Masked,
                QueryModeArg::Binary => QueryMode::Binary,
            };
        }
        if let Some(t) = self.saliency_threshold {
            p.saliency_threshold = t;
        }
        if let Some(n) = self.per_kind {
            p.distractors_per_kind = n;
        }
    }
}

fn mode_name(m: QueryMode) -> &'static str {
    match m {
        QueryMode::Masked => "masked",
        QueryMode::Binary => "binary",
    }
}

fn ontology_summary(o: &Ontology) -> Value {
    let (hypo, hyper) = o.stats();
    json!({ "n_ets": o.len(), "mean_hyponyms": hypo, "mean_hypernyms": hyper })
}

pub fn run(cfg: &RunConfig, args: &ProbeArgs, out: &mut OutputSet) -> Result<Value> {
    let p = &cfg.probe;
    match &args.command {
        ProbeCommand::Isa { data, direction } => {
            let ontology = load_ontology(&data.ontology)?;
            let backend = open_backend(cfg)?;
            let prober = Prober::new(&backend, p.query_mode, p.k_max)?;
            let outcomes = prober.query_all(&ontology.relations((*direction).into()))?;
            let curve = retrieval_curve(&outcomes, p.k_max);
            let last = curve.last().map(|c| c.ratio);
            let summary = json!({
                "probe": "isa",
                "direction": Direction::from(*direction),
                "query_mode": mode_name(p.query_mode),
                "k_max": p.k_max,
                "ontology": ontology_summary(&ontology),
                "retrieval_at_k_max": last,
            });
            out.add("curve.csv", report::curve_csv(&curve, "retrieval"));
            out.add("outcomes.csv", report::outcomes_csv(&outcomes)?);
            out.add_json(
                "report.json",
                &json!({ "summary": summary, "curve": curve, "outcomes": outcomes }),
            )?;
            Ok(summary)
        }
        ProbeCommand::Asymmetry { data, direction } => {
            let ontology = load_ontology(&data.ontology)?;
            let backend = open_backend(cfg)?;
            let prober = Prober::new(&backend, p.query_mode, p.k_max)?;
            let forward = prober.query_all(&ontology.relations((*direction).into()))?;
            let records = probe_asymmetry(&forward, &prober)?;
            let curve = asymmetry_curve(&records, p.k_max);
            let summary = json!({
                "probe": "asymmetry",
                "direction": Direction::from(*direction),
                "query_mode": mode_name(p.query_mode),
                "k_max": p.k_max,
                "ontology": ontology_summary(&ontology),
                "asymmetry_at_k_max": asymmetry_at(&records, p.k_max),
            });
            let mut log: Vec<RelationOutcome> = forward.clone();
            log.extend(records.iter().map(|r| r.reverse.clone()));
            out.add("curve.csv", report::curve_csv(&curve, "asymmetry"));
            out.add("outcomes.csv", report::outcomes_csv(&log)?);
            out.add_json(
                "report.json",
                &json!({ "summary": summary, "curve": curve, "records": records }),
            )?;
            Ok(summary)
        }
        ProbeCommand::Transitivity { data } => {
            let ontology = load_ontology(&data.ontology)?;
            let backend = open_backend(cfg)?;
            let prober = Prober::new(&backend, p.query_mode, p.k_max)?;
            let upper = prober.query_all(&ontology.relations(Direction::Hypernym))?;
            let lower = prober.query_all(&ontology.relations(Direction::Hyponym))?;
            let records = probe_transitivity(&ontology, &upper, &lower, &prober)?;
            let at_max = transitivity_at(&records, p.k_max);
            let curve = transitivity_curve(&records, p.k_max);
            let summary = json!({
                "probe": "transitivity",
                "query_mode": mode_name(p.query_mode),
                "k_max": p.k_max,
                "ontology": ontology_summary(&ontology),
                "transitivity_at_k_max": at_max,
            });
            out.add("transitivity.csv", report::transitivity_csv(&at_max));
            out.add("curve.csv", report::curve_csv(&curve, "transitivity"));
            out.add_json(
                "report.json",
                &json!({ "summary": summary, "curve": curve, "records": records }),
            )?;
            Ok(summary)
        }
        ProbeCommand::Inheritance {
            data,
            triplets,
            sentences,
        } => {
            let ontology = load_ontology(&data.ontology)?;
            let triplets = load_triplets(triplets)?;
            let backend = open_backend(cfg)?;
            let prober = Prober::new(&backend, p.query_mode, p.k_max)?;
            let builder = sentence_builder(*sentences, &backend);
            let (scores, log) = inheritance_scores(
                &ontology,
                &triplets,
                &prober,
                p.saliency_threshold,
                builder.as_ref(),
            )?;
            let summary = json!({
                "probe": "inheritance",
                "query_mode": mode_name(p.query_mode),
                "k": p.k_max,
                "saliency_threshold": p.saliency_threshold,
                "n_triplets": log.triplets.len(),
                "scores": scores,
            });
            out.add("inheritance.csv", report::inheritance_csv(&scores));
            out.add_json("report.json", &json!({ "summary": summary, "log": log }))?;
            Ok(summary)
        }
        ProbeCommand::Distractors { data } => {
            let ontology = load_ontology(&data.ontology)?;
            let questions = distractor_questions(&ontology, p.distractors_per_kind, cfg.seed);
            let mut csv = String::from("kind,question\n");
            for d in &questions {
                let kind = serde_json::to_value(d.kind)?;
                csv.push_str(&format!(
                    "{},\"{}\"\n",
                    kind.as_str().unwrap_or_default(),
                    isa_query_text(&d.relation, QueryMode::Binary).replace('"', "\"\"")
                ));
            }
            out.add("distractors.csv", csv);
            out.add_json("distractors.json", &questions)?;
            Ok(json!({ "probe": "distractors", "n_questions": questions.len(), "seed": cfg.seed }))
        }
    }
}

fn sentence_builder<'a>(
    source: SentenceSource,
    backend: &'a Backend,
) -> Box<dyn SentenceBuilder + 'a> {
    match source {
        SentenceSource::Template => Box::new(TemplateSentences),
        SentenceSource::Paraphrase => Box::new(ParaphrasedSentences { backend }),
    }
}
