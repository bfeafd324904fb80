//! End-to-end concept completion: augment, aggregate, filter, embed, reduce,
//! cluster, weigh and rank.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, MaskedSentence};
use crate::clustering::{
    agglomerate, build_concepts, node_weight, ConceptCluster, Dendrogram, DEFAULT_ALPHA,
    DEFAULT_CUT_THRESHOLD,
};
use crate::embedding::{pca_fit_transform, tsne_embed, EmbeddingMatrix, ReductionConfig};
use crate::error::{Error, Result};
use crate::pipeline::{
    aggregate_lists, build_augmentations, fetch_completion_lists, frequency_filter,
    AggregatedCompletion, AugmentationSet, Stopwords,
};

pub const DEFAULT_K: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConceptConfig {
    pub k: usize,
    pub alpha: f64,
    pub cut_threshold: f64,
    pub reduction: ReductionConfig,
}

impl Default for ConceptConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            cut_threshold: DEFAULT_CUT_THRESHOLD,
            reduction: ReductionConfig::default(),
        }
    }
}

impl ConceptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidInput(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        if self.cut_threshold.is_nan() || self.cut_threshold < 0.0 {
            return Err(Error::InvalidInput(format!(
                "cut threshold {} must be non-negative",
                self.cut_threshold
            )));
        }
        self.reduction.validate()
    }
}

/// Perplexity actually used for `n` points: the configured value when it is
/// below `n`, otherwise `max(1, (n - 1) / 3)`.
pub fn effective_perplexity(configured: f64, n: usize) -> f64 {
    if configured < n as f64 {
        configured
    } else {
        ((n as f64 - 1.0) / 3.0).max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCompletion {
    pub token: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMerge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub node: usize,
    pub size: usize,
    pub weight: f64,
}

/// The primary output: ranked concepts plus the full merge tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptDocument {
    pub sentence: String,
    pub seed_token: String,
    pub m: usize,
    pub effective_perplexity: f64,
    /// The original sentence's top-k list, unchanged.
    pub baseline: Vec<BaselineCompletion>,
    pub concepts: Vec<ConceptCluster>,
    /// Token of each dendrogram leaf, in leaf-index order.
    pub leaves: Vec<String>,
    pub merges: Vec<WeightedMerge>,
}

impl ConceptDocument {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }
}

/// Everything produced along the way, for optional dumps.
#[derive(Debug, Clone)]
pub struct ConceptRun {
    pub augmentations: AugmentationSet,
    pub aggregated: Vec<AggregatedCompletion>,
    pub filtered: Vec<AggregatedCompletion>,
    pub embeddings: Option<EmbeddingMatrix>,
    pub reduced: Option<EmbeddingMatrix>,
    pub kl_trace: Vec<f64>,
    pub document: ConceptDocument,
}

/// JSON dump of the augmentation set and aggregation tables.
#[derive(Debug, Serialize)]
pub struct IntermediateDump<'a> {
    pub augmentations: &'a AugmentationSet,
    pub aggregated: &'a [AggregatedCompletion],
    pub filtered: &'a [AggregatedCompletion],
    pub kl_trace: &'a [f64],
}

impl ConceptRun {
    pub fn intermediate(&self) -> IntermediateDump<'_> {
        IntermediateDump {
            augmentations: &self.augmentations,
            aggregated: &self.aggregated,
            filtered: &self.filtered,
            kl_trace: &self.kl_trace,
        }
    }
}

pub fn complete_concepts(
    s0: &MaskedSentence,
    backend: &Backend,
    cfg: &ConceptConfig,
    stopwords: &Stopwords,
) -> Result<ConceptRun> {
    cfg.validate()?;
    let augmentations = build_augmentations(s0, backend, cfg.k, stopwords)?;
    let lists = fetch_completion_lists(&augmentations, backend, cfg.k)?;
    let baseline = lists[0]
        .iter()
        .map(|c| BaselineCompletion {
            token: c.token.clone(),
            score: c.score,
        })
        .collect();
    let aggregated = aggregate_lists(&lists, augmentations.m());
    let filtered = frequency_filter(&aggregated, augmentations.m());
    log::info!(
        "{} sentences, {} pooled tokens, {} after filtering",
        augmentations.m(),
        aggregated.len(),
        filtered.len()
    );

    let mut document = ConceptDocument {
        sentence: s0.text().to_string(),
        seed_token: augmentations.seed_token().to_string(),
        m: augmentations.m(),
        effective_perplexity: 0.0,
        baseline,
        concepts: Vec::new(),
        leaves: filtered.iter().map(|a| a.token.clone()).collect(),
        merges: Vec::new(),
    };

    if filtered.len() < 2 {
        // nothing to cluster: each survivor is its own concept
        document.concepts = filtered
            .iter()
            .map(|a| ConceptCluster {
                rank: 1,
                weight: cfg.alpha * a.max_score + (1.0 - cfg.alpha) * a.rep_norm,
                centroid: a.token.clone(),
                tokens: vec![a.token.clone()],
                max_rep_norm: a.rep_norm,
            })
            .collect();
        return Ok(ConceptRun {
            augmentations,
            aggregated,
            filtered,
            embeddings: None,
            reduced: None,
            kl_trace: Vec::new(),
            document,
        });
    }

    let rows = filtered
        .par_iter()
        .map(|a| backend.contextual_embedding(s0, &a.token).map(|v| v.values))
        .collect::<Result<Vec<_>>>()?;
    let embeddings = EmbeddingMatrix::new(document.leaves.clone(), rows)?;

    let mut reduction = cfg.reduction.clone();
    reduction.perplexity = effective_perplexity(reduction.perplexity, embeddings.n());
    document.effective_perplexity = reduction.perplexity;
    let pca = pca_fit_transform(&embeddings, reduction.pca_components)?;
    let tsne = tsne_embed(&pca.projected, &reduction)?;
    let reduced = tsne.embedding;

    let dendrogram = agglomerate(&reduced)?;
    document.concepts = build_concepts(
        &dendrogram,
        &reduced,
        &filtered,
        cfg.alpha,
        cfg.cut_threshold,
    )?;
    document.merges = weighted_merges(&dendrogram, &filtered, cfg.alpha)?;

    Ok(ConceptRun {
        augmentations,
        aggregated,
        filtered,
        embeddings: Some(embeddings),
        reduced: Some(reduced),
        kl_trace: tsne.kl_trace,
        document,
    })
}

fn weighted_merges(
    d: &Dendrogram,
    aggregated: &[AggregatedCompletion],
    alpha: f64,
) -> Result<Vec<WeightedMerge>> {
    let by_token = aggregated.iter().map(|a| (a.token.as_str(), a)).collect();
    d.merges
        .iter()
        .map(|m| {
            Ok(WeightedMerge {
                left: m.left,
                right: m.right,
                distance: m.distance,
                node: m.node,
                size: m.size,
                weight: node_weight(d, m.node, &by_token, alpha)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perplexity_clamp() {
        assert_eq!(effective_perplexity(10.0, 30), 10.0);
        assert_eq!(effective_perplexity(10.0, 11), 10.0);
        assert_eq!(effective_perplexity(10.0, 10), 3.0);
        assert_eq!(effective_perplexity(10.0, 2), 1.0);
    }

    #[test]
    fn config_checks() {
        assert!(ConceptConfig::default().validate().is_ok());
        let bad = ConceptConfig {
            alpha: 1.2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let neg = ConceptConfig {
            cut_threshold: -0.1,
            ..Default::default()
        };
        assert!(neg.validate().is_err());
        let parsed: ConceptConfig =
            serde_json::from_str(r#"{"k": 5, "reduction": {"perplexity": 4}}"#).unwrap();
        assert_eq!(parsed.k, 5);
        assert_eq!(parsed.alpha, DEFAULT_ALPHA);
        assert_eq!(parsed.reduction.perplexity, 4.0);
        assert_eq!(parsed.reduction.tsne_components, 10);
    }
}
