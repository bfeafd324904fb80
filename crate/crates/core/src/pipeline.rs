//! Front half of concept completion: seed selection, paraphrase
//! augmentation with re-masking, aggregation of top-k lists across the
//! augmented sentences, and majority-frequency filtering.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, MaskedSentence, TokenCompletion, MASK};
use crate::error::{Error, Result};

const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Lowercased stopword set, one token per line in its file form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// The bundled English list (179 entries).
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(&token.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Self::english()
    }
}

/// First completion longer than three characters that is neither a stopword
/// nor a subword piece.
pub fn select_seed_completion(
    completions: &[TokenCompletion],
    stopwords: &Stopwords,
) -> Result<String> {
    completions
        .iter()
        .find(|c| c.token.chars().count() > 3 && !c.is_subword && !stopwords.contains(&c.token))
        .map(|c| c.token.clone())
        .ok_or(Error::NoEligibleSeed)
}

/// The original sentence plus its re-masked paraphrases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSet {
    original: MaskedSentence,
    paraphrases: Vec<MaskedSentence>,
    m: usize,
    seed_token: String,
}

impl AugmentationSet {
    pub fn new(
        original: MaskedSentence,
        paraphrases: Vec<MaskedSentence>,
        seed_token: String,
    ) -> Self {
        let m = 1 + paraphrases.len();
        Self {
            original,
            paraphrases,
            m,
            seed_token,
        }
    }

    pub fn original(&self) -> &MaskedSentence {
        &self.original
    }

    pub fn paraphrases(&self) -> &[MaskedSentence] {
        &self.paraphrases
    }

    /// Total number of sentences, original included.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed_token(&self) -> &str {
        &self.seed_token
    }

    /// All sentences, the original at index 0.
    pub fn sentences(&self) -> impl Iterator<Item = &MaskedSentence> {
        std::iter::once(&self.original).chain(self.paraphrases.iter())
    }
}

/// Replaces the first case-insensitive, whole-word occurrence of `word` in
/// `sentence` with the mask marker.
pub fn mask_first_occurrence(sentence: &str, word: &str) -> Option<String> {
    let needle: Vec<char> = word.to_lowercase().chars().collect();
    if needle.is_empty() {
        return None;
    }
    let chars: Vec<(usize, char)> = sentence.char_indices().collect();
    for start in 0..chars.len() {
        if start + needle.len() > chars.len() {
            break;
        }
        let matches = chars[start..start + needle.len()]
            .iter()
            .zip(&needle)
            .all(|((_, c), n)| c.to_lowercase().eq(std::iter::once(*n)));
        if !matches {
            continue;
        }
        let before_ok = start == 0 || !chars[start - 1].1.is_alphanumeric();
        let end = start + needle.len();
        let after_ok = end == chars.len() || !chars[end].1.is_alphanumeric();
        if before_ok && after_ok {
            let byte_start = chars[start].0;
            let byte_end = chars.get(end).map_or(sentence.len(), |(b, _)| *b);
            return Some(format!(
                "{}{}{}",
                &sentence[..byte_start],
                MASK,
                &sentence[byte_end..]
            ));
        }
    }
    None
}

/// Picks a seed from `s0`'s completions, paraphrases the filled sentence and
/// re-masks every paraphrase that still contains the seed.
pub fn build_augmentations(
    s0: &MaskedSentence,
    backend: &Backend,
    k: usize,
    stopwords: &Stopwords,
) -> Result<AugmentationSet> {
    let completions = backend.top_k_completions(s0, k)?;
    let seed = select_seed_completion(&completions, stopwords)?;
    let filled = s0.fill(&seed);
    let mut paraphrases = Vec::new();
    for (i, text) in backend.paraphrase(&filled)?.into_iter().enumerate() {
        let masked = mask_first_occurrence(&text, &seed)
            .and_then(|t| MaskedSentence::new(format!("{}/p{}", s0.id(), i + 1), t).ok());
        match masked {
            Some(s) => paraphrases.push(s),
            None => log::info!("dropping paraphrase without seed {seed:?}: {text:?}"),
        }
    }
    Ok(AugmentationSet::new(s0.clone(), paraphrases, seed))
}

/// A completion pooled across every sentence of an augmentation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedCompletion {
    pub token: String,
    pub max_score: f64,
    /// Number of distinct sentences whose top-k list contains the token.
    pub occurrence_count: usize,
    /// `occurrence_count / m`.
    pub rep_norm: f64,
}

/// Top-k lists for every sentence in `aug`, in sentence order, with
/// `source_index` set.
pub fn fetch_completion_lists(
    aug: &AugmentationSet,
    backend: &Backend,
    k: usize,
) -> Result<Vec<Vec<TokenCompletion>>> {
    let sentences: Vec<&MaskedSentence> = aug.sentences().collect();
    sentences
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut list = backend.top_k_completions(s, k)?;
            for c in &mut list {
                c.source_index = i;
            }
            Ok(list)
        })
        .collect()
}

/// Pools lists into per-token maximum score and sentence occurrence count.
/// Token identity is the lowercased string. Output is ordered by descending
/// `max_score`, then token.
pub fn aggregate_lists(lists: &[Vec<TokenCompletion>], m: usize) -> Vec<AggregatedCompletion> {
    let mut table: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for list in lists {
        let mut best_in_list: BTreeMap<String, f64> = BTreeMap::new();
        for c in list {
            let entry = best_in_list
                .entry(c.token.to_lowercase())
                .or_insert(c.score);
            *entry = entry.max(c.score);
        }
        for (token, score) in best_in_list {
            let entry = table.entry(token).or_insert((score, 0));
            entry.0 = entry.0.max(score);
            entry.1 += 1;
        }
    }
    let mut out: Vec<AggregatedCompletion> = table
        .into_iter()
        .map(
            |(token, (max_score, occurrence_count))| AggregatedCompletion {
                token,
                max_score,
                occurrence_count,
                rep_norm: occurrence_count as f64 / m as f64,
            },
        )
        .collect();
    out.sort_by(|a, b| {
        b.max_score
            .total_cmp(&a.max_score)
            .then_with(|| a.token.cmp(&b.token))
    });
    out
}

pub fn aggregate_completions(
    aug: &AugmentationSet,
    backend: &Backend,
    k: usize,
) -> Result<Vec<AggregatedCompletion>> {
    let lists = fetch_completion_lists(aug, backend, k)?;
    Ok(aggregate_lists(&lists, aug.m()))
}

/// Keeps tokens that occur in at least `ceil(m / 2)` sentences.
pub fn frequency_filter(agg: &[AggregatedCompletion], m: usize) -> Vec<AggregatedCompletion> {
    let threshold = m.div_ceil(2);
    agg.iter()
        .filter(|a| a.occurrence_count >= threshold)
        .cloned()
        .collect()
}
