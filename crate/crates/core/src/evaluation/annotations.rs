use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One annotator's judgement of one completion: 1 likely, 0.5 possible but
/// unlikely, 0 does not make sense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub sentence_id: String,
    pub token: String,
    pub annotator_id: String,
    pub score: f64,
}

pub fn is_valid_score(score: f64) -> bool {
    score == 0.0 || score == 0.5 || score == 1.0
}

/// CSV with header `sentence_id,token,annotator_id,score`.
pub fn parse_annotations(text: &str, path: &Path) -> Result<Vec<AnnotationRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.deserialize::<AnnotationRecord>() {
        let rec = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        if !is_valid_score(rec.score) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: out.len() + 2,
                message: format!("score {} is not one of 0, 0.5, 1", rec.score),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    parse_annotations(&std::fs::read_to_string(path)?, path)
}

/// Annotation scores grouped by `(sentence_id, token)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations {
    items: BTreeMap<(String, String), BTreeMap<String, f64>>,
}

impl Annotations {
    /// Fails on an invalid score or on the same annotator judging an item twice.
    pub fn new(records: &[AnnotationRecord]) -> Result<Self> {
        let mut items: BTreeMap<(String, String), BTreeMap<String, f64>> = BTreeMap::new();
        for r in records {
            if !is_valid_score(r.score) {
                return Err(Error::InvalidInput(format!(
                    "score {} for {:?} is not one of 0, 0.5, 1",
                    r.score, r.token
                )));
            }
            let by_annotator = items
                .entry((r.sentence_id.clone(), r.token.clone()))
                .or_default();
            match by_annotator.entry(r.annotator_id.clone()) {
                Entry::Occupied(_) => {
                    return Err(Error::InvalidInput(format!(
                        "annotator {:?} scored {:?} in sentence {:?} twice",
                        r.annotator_id, r.token, r.sentence_id
                    )))
                }
                Entry::Vacant(v) => {
                    v.insert(r.score);
                }
            }
        }
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn scores(&self, sentence_id: &str, token: &str) -> Option<Vec<f64>> {
        self.items
            .get(&(sentence_id.to_string(), token.to_string()))
            .map(|m| m.values().copied().collect())
    }

    /// Mean over annotators.
    pub fn token_score(&self, sentence_id: &str, token: &str) -> Option<f64> {
        let s = self.scores(sentence_id, token)?;
        Some(s.iter().sum::<f64>() / s.len() as f64)
    }

    /// Mean of the member token scores. Missing members are reported as
    /// `sentence_id/token`.
    pub fn item_score(&self, sentence_id: &str, tokens: &[String]) -> Result<f64> {
        if tokens.is_empty() {
            return Err(Error::EmptyCluster);
        }
        let mut missing = Vec::new();
        let mut sum = 0.0;
        for t in tokens {
            match self.token_score(sentence_id, t) {
                Some(s) => sum += s,
                None => missing.push(format!("{sentence_id}/{t}")),
            }
        }
        if missing.is_empty() {
            Ok(sum / tokens.len() as f64)
        } else {
            Err(Error::MissingAnnotations(missing))
        }
    }

    /// Errors listing every `(sentence_id, token)` pair that has no annotation.
    pub fn require<'a>(&self, wanted: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        let missing: BTreeSet<String> = wanted
            .into_iter()
            .filter(|(s, t)| self.token_score(s, t).is_none())
            .map(|(s, t)| format!("{s}/{t}"))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingAnnotations(missing.into_iter().collect()))
        }
    }

    /// Mean over items with at least two annotators of the population
    /// variance of their scores.
    pub fn mean_variance(&self) -> Option<f64> {
        let variances: Vec<f64> = self
            .items
            .values()
            .filter(|m| m.len() >= 2)
            .map(|m| {
                let n = m.len() as f64;
                let mean = m.values().sum::<f64>() / n;
                m.values().map(|s| (s - mean).powi(2)).sum::<f64>() / n
            })
            .collect();
        if variances.is_empty() {
            None
        } else {
            Some(variances.iter().sum::<f64>() / variances.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(s: &str, t: &str, a: &str, score: f64) -> AnnotationRecord {
        AnnotationRecord {
            sentence_id: s.into(),
            token: t.into(),
            annotator_id: a.into(),
            score,
        }
    }

    #[test]
    fn parses_csv() {
        let text = "sentence_id,token,annotator_id,score\ns1,mom,a,1\ns1,mom,b,0.5\ns1, dad ,a,0\n";
        let recs = parse_annotations(text, Path::new("a.csv")).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[2].token, "dad");
        let bad = "sentence_id,token,annotator_id,score\ns1,mom,a,1\ns1,dad,a,0.7\n";
        match parse_annotations(bad, Path::new("a.csv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let junk = "sentence_id,token,annotator_id,score\ns1,mom,a,yes\n";
        match parse_annotations(junk, Path::new("a.csv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn token_and_cluster_scores() {
        let a = Annotations::new(&[
            rec("s1", "mom", "a", 1.0),
            rec("s1", "mom", "b", 0.5),
            rec("s1", "dad", "a", 0.0),
        ])
        .unwrap();
        assert_eq!(a.token_score("s1", "mom"), Some(0.75));
        assert_eq!(a.token_score("s2", "mom"), None);
        let cluster = vec!["mom".to_string(), "dad".to_string()];
        assert_eq!(a.item_score("s1", &cluster).unwrap(), 0.375);
        match a.item_score("s1", &["mom".to_string(), "aunt".to_string()]) {
            Err(Error::MissingAnnotations(m)) => assert_eq!(m, vec!["s1/aunt".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_annotator_rejected() {
        assert!(Annotations::new(&[rec("s", "t", "a", 1.0), rec("s", "t", "a", 0.0)]).is_err());
        assert!(Annotations::new(&[rec("s", "t", "a", 0.25)]).is_err());
    }

    #[test]
    fn variance_over_multiply_annotated_items() {
        let a = Annotations::new(&[
            rec("s", "x", "a", 1.0),
            rec("s", "x", "b", 0.0),
            rec("s", "y", "a", 0.5),
            rec("s", "y", "b", 0.5),
            rec("s", "z", "a", 1.0),
        ])
        .unwrap();
        // x: 0.25, y: 0, z has one annotator
        assert_eq!(a.mean_variance(), Some(0.125));
        assert_eq!(Annotations::default().mean_variance(), None);
    }
}
