use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyEntry {
    pub et: String,
    #[serde(default)]
    pub hypernyms: Vec<String>,
    #[serde(default)]
    pub hyponyms: Vec<String>,
}

/// Everyday things with their direct hypernyms and hyponyms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    pub entries: Vec<OntologyEntry>,
}

/// `child` is a kind of `parent`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IsARelation {
    pub child: String,
    pub parent: String,
}

impl IsARelation {
    pub fn new(child: impl Into<String>, parent: impl Into<String>) -> Result<Self> {
        let (child, parent) = (child.into(), parent.into());
        if child.trim().is_empty() || parent.trim().is_empty() {
            return Err(Error::InvalidInput("is-a terms must be non-empty".into()));
        }
        if child.eq_ignore_ascii_case(&parent) {
            return Err(Error::InvalidInput(format!(
                "{child:?} cannot be a type of itself"
            )));
        }
        Ok(Self { child, parent })
    }

    pub fn reversed(&self) -> Self {
        Self {
            child: self.parent.clone(),
            parent: self.child.clone(),
        }
    }
}

/// Which side of each ET is probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// isa(et, hypernym)
    Hypernym,
    /// isa(hyponym, et)
    Hyponym,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hypernym" | "hypernyms" => Ok(Direction::Hypernym),
            "hyponym" | "hyponyms" => Ok(Direction::Hyponym),
            other => Err(Error::InvalidInput(format!("unknown direction {other:?}"))),
        }
    }
}

impl Ontology {
    pub fn new(entries: Vec<OntologyEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.et.trim().is_empty() {
                return Err(Error::InvalidInput("empty ET name".into()));
            }
            if !seen.insert(e.et.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate ET {:?}", e.et)));
            }
            if let Some(both) = e.hypernyms.iter().find(|h| e.hyponyms.contains(h)) {
                return Err(Error::InvalidInput(format!(
                    "{both:?} is both hypernym and hyponym of {:?}",
                    e.et
                )));
            }
        }
        Ok(Self { entries })
    }

    /// One JSON object per line; blank lines are skipped.
    pub fn from_jsonl(text: &str, path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: OntologyEntry = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        Self::new(entries).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, et: &str) -> Option<&OntologyEntry> {
        self.entries.iter().find(|e| e.et == et)
    }

    /// Mean hyponyms and mean hypernyms per ET (zero for an empty ontology).
    pub fn stats(&self) -> (f64, f64) {
        if self.entries.is_empty() {
            return (0.0, 0.0);
        }
        let n = self.entries.len() as f64;
        let hypo: usize = self.entries.iter().map(|e| e.hyponyms.len()).sum();
        let hyper: usize = self.entries.iter().map(|e| e.hypernyms.len()).sum();
        (hypo as f64 / n, hyper as f64 / n)
    }

    /// All relations on one side, in file order.
    pub fn relations(&self, direction: Direction) -> Vec<IsARelation> {
        let mut out = Vec::new();
        for e in &self.entries {
            match direction {
                Direction::Hypernym => {
                    for h in &e.hypernyms {
                        out.extend(IsARelation::new(&e.et, h).ok());
                    }
                }
                Direction::Hyponym => {
                    for h in &e.hyponyms {
                        out.extend(IsARelation::new(h, &e.et).ok());
                    }
                }
            }
        }
        out
    }
}

pub fn load_ontology(path: &Path) -> Result<Ontology> {
    let ontology = Ontology::from_jsonl(&std::fs::read_to_string(path)?, path)?;
    let (hypo, hyper) = ontology.stats();
    log::info!(
        "{}: {} ETs, {hypo:.2} hyponyms and {hyper:.2} hypernyms per ET",
        path.display(),
        ontology.len()
    );
    Ok(ontology)
}

/// A salient property statement about `object`, with `subject` as the
/// term that gets masked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyTriplet {
    pub object: String,
    pub predicate: String,
    pub subject: String,
    pub saliency: f64,
}

/// Tab-separated `object, predicate, subject, saliency`. Blank lines, `#`
/// comments and a leading `object\t...` header are skipped.
pub fn parse_triplets(text: &str, path: &Path) -> Result<Vec<PropertyTriplet>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if out.is_empty() && fields.first() == Some(&"object") {
            continue;
        }
        let [object, predicate, subject, saliency] = fields[..] else {
            return Err(err(
                i + 1,
                format!("expected 4 tab-separated fields, got {}", fields.len()),
            ));
        };
        if [object, predicate, subject].iter().any(|f| f.is_empty()) {
            return Err(err(i + 1, "empty field".into()));
        }
        let saliency: f64 = saliency
            .parse()
            .map_err(|_| err(i + 1, format!("saliency {saliency:?} is not a number")))?;
        if !(0.0..=1.0).contains(&saliency) {
            return Err(err(i + 1, format!("saliency {saliency} outside [0, 1]")));
        }
        out.push(PropertyTriplet {
            object: object.into(),
            predicate: predicate.into(),
            subject: subject.into(),
            saliency,
        });
    }
    Ok(out)
}

pub fn load_triplets(path: &Path) -> Result<Vec<PropertyTriplet>> {
    parse_triplets(&std::fs::read_to_string(path)?, path)
}
