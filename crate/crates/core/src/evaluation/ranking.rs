use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::annotations::Annotations;
use crate::concepts::ConceptDocument;
use crate::error::{Error, Result};

/// `(K - rank + 1) / K`: rank 1 maps to 1.0, rank K to 1/K.
pub fn relative_rank(rank: usize, k: usize) -> Result<f64> {
    if rank == 0 || rank > k {
        return Err(Error::InvalidInput(format!("rank {rank} outside 1..={k}")));
    }
    Ok((k - rank + 1) as f64 / k as f64)
}

/// A ranked output for one sentence. Each item is a single token (baseline)
/// or a cluster of tokens (concepts); `K` is the number of items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub sentence_id: String,
    pub items: Vec<Vec<String>>,
}

impl RankedList {
    pub fn new(sentence_id: impl Into<String>, items: Vec<Vec<String>>) -> Result<Self> {
        let sentence_id = sentence_id.into();
        if items.iter().any(Vec::is_empty) {
            return Err(Error::InvalidInput(format!(
                "ranked list for {sentence_id:?} has an empty item"
            )));
        }
        Ok(Self { sentence_id, items })
    }

    pub fn from_tokens(sentence_id: impl Into<String>, tokens: &[String]) -> Self {
        Self {
            sentence_id: sentence_id.into(),
            items: tokens.iter().map(|t| vec![t.clone()]).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.items.len()
    }

    /// 1-based rank of the first item containing `token`.
    pub fn rank_of(&self, token: &str) -> Option<usize> {
        self.items
            .iter()
            .position(|item| item.iter().any(|t| t == token))
            .map(|i| i + 1)
    }

    /// Every token, in rank order, first occurrence only.
    pub fn tokens(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.items
            .iter()
            .flatten()
            .map(String::as_str)
            .filter(|t| seen.insert(*t))
            .collect()
    }
}

/// Baseline and concept rankings for one sentence, as stored in a rankings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRankings {
    pub sentence_id: String,
    #[serde(default)]
    pub sentence: String,
    pub base: Vec<String>,
    pub concept: Vec<Vec<String>>,
}

impl SentenceRankings {
    pub fn from_document(sentence_id: impl Into<String>, doc: &ConceptDocument) -> Self {
        Self {
            sentence_id: sentence_id.into(),
            sentence: doc.sentence.clone(),
            base: doc.baseline.iter().map(|b| b.token.clone()).collect(),
            concept: doc.concepts.iter().map(|c| c.tokens.clone()).collect(),
        }
    }

    pub fn base_list(&self) -> RankedList {
        RankedList::from_tokens(&self.sentence_id, &self.base)
    }

    pub fn concept_list(&self) -> Result<RankedList> {
        RankedList::new(&self.sentence_id, self.concept.clone())
    }
}

/// `{"sentences": [{"sentence_id", "sentence", "base": [...], "concept": [[...]]}]}`
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankingSet {
    pub sentences: Vec<SentenceRankings>,
}

impl RankingSet {
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for s in &self.sentences {
            if !ids.insert(s.sentence_id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate sentence_id {:?}",
                    s.sentence_id
                )));
            }
            s.concept_list()?;
        }
        Ok(())
    }

    pub fn base_lists(&self) -> Vec<RankedList> {
        self.sentences
            .iter()
            .map(SentenceRankings::base_list)
            .collect()
    }

    pub fn concept_lists(&self) -> Result<Vec<RankedList>> {
        self.sentences
            .iter()
            .map(SentenceRankings::concept_list)
            .collect()
    }
}

pub fn load_rankings(path: &Path) -> Result<RankingSet> {
    let text = std::fs::read_to_string(path)?;
    let set: RankingSet = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    set.validate()?;
    Ok(set)
}

/// Mean item score over ranks `1..=min(k, K)`, averaged over sentences. An
/// item's score is the mean of its tokens' mean annotator scores.
pub fn score_at_k(lists: &[RankedList], annotations: &Annotations, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if lists.is_empty() {
        return Err(Error::InvalidInput("no ranked lists".into()));
    }
    if let Some(empty) = lists.iter().find(|l| l.items.is_empty()) {
        return Err(Error::InvalidInput(format!(
            "ranked list for {:?} is empty",
            empty.sentence_id
        )));
    }
    annotations.require(lists.iter().flat_map(|l| {
        l.items
            .iter()
            .take(k)
            .flatten()
            .map(move |t| (l.sentence_id.as_str(), t.as_str()))
    }))?;
    let mut total = 0.0;
    for l in lists {
        let top = &l.items[..k.min(l.k())];
        let mut sum = 0.0;
        for item in top {
            sum += annotations.item_score(&l.sentence_id, item)?;
        }
        total += sum / top.len() as f64;
    }
    Ok(total / lists.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePoint {
    pub k: usize,
    pub score: f64,
}

pub fn score_curve(
    lists: &[RankedList],
    annotations: &Annotations,
    k_max: usize,
) -> Result<Vec<ScorePoint>> {
    (1..=k_max)
        .map(|k| {
            Ok(ScorePoint {
                k,
                score: score_at_k(lists, annotations, k)?,
            })
        })
        .collect()
}

/// Pearson correlation with its two-sided p-value under the t-distribution
/// with `n - 2` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "series lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "correlation needs at least 3 points, got {n}"
        )));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance(
            "correlation undefined for a constant series".into(),
        ));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        p_value: correlation_p_value(r, n)?,
        n,
    })
}

/// Two-sided p-value of a sample correlation `r` over `n` points.
pub fn correlation_p_value(r: f64, n: usize) -> Result<f64> {
    if n < 3 || !(-1.0..=1.0).contains(&r) {
        return Err(Error::InvalidInput(format!("no p-value for r={r}, n={n}")));
    }
    if r.abs() == 1.0 {
        return Ok(0.0);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::NumericalFailure(e.to_string()))?;
    Ok(2.0 * (1.0 - dist.cdf(t.abs())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulatedPoint {
    pub rank: usize,
    pub accumulated_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulatedAccuracy {
    pub curve: Vec<AccumulatedPoint>,
    pub correlation: Correlation,
}

/// Running mean of `scores` (already in rank order, best first) and the
/// correlation between rank position and that running mean.
pub fn accumulated_accuracy(scores: &[f64]) -> Result<AccumulatedAccuracy> {
    if scores.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "accumulated accuracy needs at least 3 annotated items, got {}",
            scores.len()
        )));
    }
    let mut curve = Vec::with_capacity(scores.len());
    let mut sum = 0.0;
    for (i, s) in scores.iter().enumerate() {
        sum += s;
        curve.push(AccumulatedPoint {
            rank: i + 1,
            accumulated_mean: sum / (i + 1) as f64,
        });
    }
    let x: Vec<f64> = curve.iter().map(|p| p.rank as f64).collect();
    let y: Vec<f64> = curve.iter().map(|p| p.accumulated_mean).collect();
    let correlation = pearson(&x, &y)?;
    Ok(AccumulatedAccuracy { curve, correlation })
}
