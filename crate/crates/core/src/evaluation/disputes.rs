use serde::{Deserialize, Serialize};

use super::annotations::Annotations;
use super::ranking::{accumulated_accuracy, relative_rank, AccumulatedAccuracy, RankedList};
use crate::error::{Error, Result};

/// Width of the middle band of relative ranks treated as buffer.
pub const DEFAULT_BUFFER_WIDTH: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Zone {
    ConceptHighBaseLow,
    Buffer,
    BaseHighConceptLow,
    Neither,
}

impl Zone {
    /// Report order: concept high, buffer, baseline high.
    pub const SCORED: [Zone; 3] = [
        Zone::ConceptHighBaseLow,
        Zone::Buffer,
        Zone::BaseHighConceptLow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Zone::ConceptHighBaseLow => "CONCEPT_HIGH_BASE_LOW",
            Zone::Buffer => "BUFFER",
            Zone::BaseHighConceptLow => "BASE_HIGH_CONCEPT_LOW",
            Zone::Neither => "NEITHER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Concept,
    Baseline,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Concept => "concept",
            Model::Baseline => "baseline",
        }
    }

    /// The zone where this model ranks high and the other ranks low.
    pub fn high_zone(self) -> Zone {
        match self {
            Model::Concept => Zone::ConceptHighBaseLow,
            Model::Baseline => Zone::BaseHighConceptLow,
        }
    }
}

/// Zone of a token from its two relative ranks, with half-width
/// `buffer_width / 2` around 0.5.
pub fn zone_for(rank_concept: f64, rank_base: f64, buffer_width: f64) -> Zone {
    let w = buffer_width / 2.0;
    let (lo, hi) = (0.5 - w, 0.5 + w);
    let inside = |r: f64| (lo..=hi).contains(&r);
    if inside(rank_concept) && inside(rank_base) {
        Zone::Buffer
    } else if rank_concept > hi && rank_base < lo {
        Zone::ConceptHighBaseLow
    } else if rank_base > hi && rank_concept < lo {
        Zone::BaseHighConceptLow
    } else {
        Zone::Neither
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisputeRecord {
    pub token: String,
    pub rank_base: f64,
    pub rank_concept: f64,
    pub zone: Zone,
}

impl DisputeRecord {
    pub fn rank(&self, model: Model) -> f64 {
        match model {
            Model::Concept => self.rank_concept,
            Model::Baseline => self.rank_base,
        }
    }
}

/// Zoning of one sentence. `revealed` holds concept tokens that are absent
/// from the baseline list and so have no baseline rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceDisputes {
    pub sentence_id: String,
    pub records: Vec<DisputeRecord>,
    pub revealed: Vec<String>,
}

fn check_width(buffer_width: f64) -> Result<()> {
    if buffer_width > 0.0 && buffer_width < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "buffer width {buffer_width} outside (0, 1)"
        )))
    }
}

/// Tokens present in both lists, in concept rank order, each with its zone.
/// A token's concept rank is the rank of its cluster.
pub fn partition_disputes(
    base: &RankedList,
    concept: &RankedList,
    buffer_width: f64,
) -> Result<SentenceDisputes> {
    check_width(buffer_width)?;
    if base.sentence_id != concept.sentence_id {
        return Err(Error::InvalidInput(format!(
            "baseline list is for {:?} but concept list is for {:?}",
            base.sentence_id, concept.sentence_id
        )));
    }
    let mut records = Vec::new();
    let mut revealed = Vec::new();
    for token in concept.tokens() {
        let c = concept.rank_of(token).expect("token comes from the list");
        match base.rank_of(token) {
            Some(b) => {
                let rank_concept = relative_rank(c, concept.k())?;
                let rank_base = relative_rank(b, base.k())?;
                records.push(DisputeRecord {
                    token: token.to_string(),
                    rank_base,
                    rank_concept,
                    zone: zone_for(rank_concept, rank_base, buffer_width),
                });
            }
            None => revealed.push(token.to_string()),
        }
    }
    Ok(SentenceDisputes {
        sentence_id: concept.sentence_id.clone(),
        records,
        revealed,
    })
}

/// Zones every sentence; lists are paired by position and must share ids.
pub fn partition_all(
    base: &[RankedList],
    concept: &[RankedList],
    buffer_width: f64,
) -> Result<Vec<SentenceDisputes>> {
    if base.len() != concept.len() {
        return Err(Error::InvalidInput(format!(
            "{} baseline lists but {} concept lists",
            base.len(),
            concept.len()
        )));
    }
    base.iter()
        .zip(concept)
        .map(|(b, c)| partition_disputes(b, c, buffer_width))
        .collect()
}

fn require_scored(
    disputes: &[SentenceDisputes],
    annotations: &Annotations,
    zones: &[Zone],
) -> Result<()> {
    annotations.require(disputes.iter().flat_map(|s| {
        s.records
            .iter()
            .filter(|r| zones.contains(&r.zone))
            .map(move |r| (s.sentence_id.as_str(), r.token.as_str()))
    }))
}

fn mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneScore {
    pub zone: Zone,
    pub n: usize,
    pub mean: f64,
    /// Mean over sentences of (zone mean minus buffer mean); undefined for
    /// the buffer itself and when no sentence has both.
    pub normalized: Option<f64>,
    pub n_normalized_sentences: usize,
}

/// One row per non-empty scored zone, in report order.
pub fn dispute_scores(
    disputes: &[SentenceDisputes],
    annotations: &Annotations,
) -> Result<Vec<ZoneScore>> {
    require_scored(disputes, annotations, &Zone::SCORED)?;
    let zone_scores = |s: &SentenceDisputes, zone: Zone| -> Vec<f64> {
        s.records
            .iter()
            .filter(|r| r.zone == zone)
            .map(|r| {
                annotations
                    .token_score(&s.sentence_id, &r.token)
                    .expect("checked above")
            })
            .collect()
    };
    let mut rows = Vec::new();
    for zone in Zone::SCORED {
        let pooled: Vec<f64> = disputes.iter().flat_map(|s| zone_scores(s, zone)).collect();
        let Some(zone_mean) = mean(&pooled) else {
            log::warn!("zone {} is empty; row omitted", zone.as_str());
            continue;
        };
        let mut diffs = Vec::new();
        if zone != Zone::Buffer {
            for s in disputes {
                if let (Some(z), Some(b)) = (
                    mean(&zone_scores(s, zone)),
                    mean(&zone_scores(s, Zone::Buffer)),
                ) {
                    diffs.push(z - b);
                }
            }
        }
        rows.push(ZoneScore {
            zone,
            n: pooled.len(),
            mean: zone_mean,
            normalized: mean(&diffs),
            n_normalized_sentences: diffs.len(),
        });
    }
    Ok(rows)
}

/// Annotated disputed and buffer tokens ordered by `model`'s relative rank,
/// best first, then the running mean of their scores.
pub fn accumulated_for_model(
    disputes: &[SentenceDisputes],
    annotations: &Annotations,
    model: Model,
) -> Result<AccumulatedAccuracy> {
    require_scored(disputes, annotations, &Zone::SCORED)?;
    let mut items: Vec<(f64, f64)> = disputes
        .iter()
        .flat_map(|s| {
            s.records
                .iter()
                .filter(|r| r.zone != Zone::Neither)
                .map(move |r| {
                    let score = annotations
                        .token_score(&s.sentence_id, &r.token)
                        .expect("checked above");
                    (r.rank(model), score)
                })
        })
        .collect();
    // stable: ties keep sentence then concept order
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let scores: Vec<f64> = items.iter().map(|(_, s)| *s).collect();
    accumulated_accuracy(&scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub width: f64,
    pub model: Model,
    pub mean: f64,
    pub n: usize,
}

/// For each buffer width, the mean score of each model's high-zone tokens.
/// Widths with an empty zone produce no point for that model.
pub fn threshold_sweep(
    base: &[RankedList],
    concept: &[RankedList],
    annotations: &Annotations,
    widths: &[f64],
) -> Result<Vec<SweepPoint>> {
    if widths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "sweep widths must be strictly increasing".into(),
        ));
    }
    let mut points = Vec::new();
    for &width in widths {
        let disputes = partition_all(base, concept, width)?;
        for model in [Model::Concept, Model::Baseline] {
            let zone = model.high_zone();
            require_scored(&disputes, annotations, &[zone])?;
            let scores: Vec<f64> = disputes
                .iter()
                .flat_map(|s| {
                    s.records.iter().filter(|r| r.zone == zone).map(|r| {
                        annotations
                            .token_score(&s.sentence_id, &r.token)
                            .expect("checked above")
                    })
                })
                .collect();
            match mean(&scores) {
                Some(m) => points.push(SweepPoint {
                    width,
                    model,
                    mean: m,
                    n: scores.len(),
                }),
                None => log::info!("width {width}: no {} tokens", zone.as_str()),
            }
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatCell {
    pub concept_bin: usize,
    pub base_bin: usize,
    pub mean: f64,
    pub count: usize,
}

/// Bin index of a relative rank in (0, 1]; bin 0 holds the lowest ranks.
pub fn rank_bin(relative: f64, bins: usize) -> usize {
    ((relative * bins as f64).floor() as usize).min(bins - 1)
}

/// Mean score of disputed and buffer tokens on a `bins x bins` grid of
/// (concept, baseline) relative rank. Empty cells are left out.
pub fn heatmap(
    disputes: &[SentenceDisputes],
    annotations: &Annotations,
    bins: usize,
) -> Result<Vec<HeatCell>> {
    if bins == 0 {
        return Err(Error::InvalidInput("heatmap needs at least one bin".into()));
    }
    require_scored(disputes, annotations, &Zone::SCORED)?;
    let mut sums = vec![(0.0, 0usize); bins * bins];
    for s in disputes {
        for r in s.records.iter().filter(|r| r.zone != Zone::Neither) {
            let cell = rank_bin(r.rank_concept, bins) * bins + rank_bin(r.rank_base, bins);
            sums[cell].0 += annotations
                .token_score(&s.sentence_id, &r.token)
                .expect("checked above");
            sums[cell].1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .filter(|(_, (_, n))| *n > 0)
        .map(|(i, (sum, n))| HeatCell {
            concept_bin: i / bins,
            base_bin: i % bins,
            mean: sum / n as f64,
            count: n,
        })
        .collect())
}
