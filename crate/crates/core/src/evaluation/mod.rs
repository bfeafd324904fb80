//! Scoring ranked outputs against human judgements: cluster coherence over
//! static word vectors, score@k, and the analysis of completions the two
//! rankings disagree on.

mod annotations;
mod coherence;
mod disputes;
mod ranking;
pub mod report;

pub use annotations::{
    is_valid_score, load_annotations, parse_annotations, AnnotationRecord, Annotations,
};
pub use coherence::{
    coherence, cosine_similarity, list_similarity, load_static_embeddings, Coherence,
    StaticEmbeddings,
};
pub use disputes::{
    accumulated_for_model, dispute_scores, heatmap, partition_all, partition_disputes, rank_bin,
    threshold_sweep, zone_for, DisputeRecord, HeatCell, Model, SentenceDisputes, SweepPoint, Zone,
    ZoneScore, DEFAULT_BUFFER_WIDTH,
};
pub use ranking::{
    accumulated_accuracy, correlation_p_value, load_rankings, pearson, relative_rank, score_at_k,
    score_curve, AccumulatedAccuracy, AccumulatedPoint, Correlation, RankedList, RankingSet,
    ScorePoint, SentenceRankings,
};
