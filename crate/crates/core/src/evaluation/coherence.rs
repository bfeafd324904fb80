use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Context-free word vectors, keyed by token.
#[derive(Debug, Clone, Default)]
pub struct StaticEmbeddings {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl StaticEmbeddings {
    pub fn new(vectors: HashMap<String, Vec<f64>>) -> Result<Self> {
        let dim = vectors.values().next().map_or(0, Vec::len);
        if let Some((t, v)) = vectors.iter().find(|(_, v)| v.len() != dim || v.is_empty()) {
            return Err(Error::InvalidInput(format!(
                "vector for {t:?} has {} dimensions, expected {dim}",
                v.len()
            )));
        }
        Ok(Self { dim, vectors })
    }

    /// word2vec text format: an optional `count dim` header, then one
    /// `token v1 v2 ...` line per word.
    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if i == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                dim = Some(fields[1].parse::<usize>().expect("checked"));
                continue;
            }
            let values = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| err(i + 1, e.to_string()))?;
            if values.is_empty() {
                return Err(err(i + 1, format!("no vector for {:?}", fields[0])));
            }
            match dim {
                Some(d) if d != values.len() => {
                    return Err(err(
                        i + 1,
                        format!("expected {d} values, got {}", values.len()),
                    ))
                }
                None => dim = Some(values.len()),
                _ => {}
            }
            vectors.insert(fields[0].to_string(), values);
        }
        Ok(Self {
            dim: dim.unwrap_or(0),
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Exact token first, then its lowercase form.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors
            .get(token)
            .or_else(|| self.vectors.get(&token.to_lowercase()))
            .map(Vec::as_slice)
    }
}

pub fn load_static_embeddings(path: &Path) -> Result<StaticEmbeddings> {
    StaticEmbeddings::from_text(&std::fs::read_to_string(path)?, path)
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some((dot / (na * nb)).clamp(-1.0, 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    /// Mean over non-singleton clusters of their mean pairwise similarity.
    pub within: f64,
    /// Mean similarity over token pairs from different clusters of the same
    /// sentence.
    pub inter: f64,
    pub n_clusters: usize,
    pub n_inter_pairs: usize,
}

/// Vectors of the in-vocabulary tokens of a cluster; misses are logged once.
fn lookup<'a>(
    tokens: &[String],
    emb: &'a StaticEmbeddings,
    skipped: &mut BTreeSet<String>,
) -> Vec<&'a [f64]> {
    tokens
        .iter()
        .filter_map(|t| match emb.get(t) {
            Some(v) if v.iter().any(|x| *x != 0.0) => Some(v),
            _ => {
                if skipped.insert(t.clone()) {
                    log::info!("no static vector for {t:?}; skipped");
                }
                None
            }
        })
        .collect()
}

fn mean_pairwise(vs: &[&[f64]]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            sum += cosine_similarity(vs[i], vs[j]).expect("zero vectors filtered");
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Coherence of the top clusters of several sentences. Each element of
/// `sentences` is one sentence's clusters, already cut to the top `j`.
pub fn coherence(sentences: &[Vec<Vec<String>>], emb: &StaticEmbeddings) -> Result<Coherence> {
    let mut skipped = BTreeSet::new();
    let mut cluster_means = Vec::new();
    let (mut inter_sum, mut inter_n) = (0.0, 0usize);
    for clusters in sentences {
        let vecs: Vec<Vec<&[f64]>> = clusters
            .iter()
            .map(|c| lookup(c, emb, &mut skipped))
            .collect();
        cluster_means.extend(vecs.iter().filter_map(|v| mean_pairwise(v)));
        for a in 0..vecs.len() {
            for b in a + 1..vecs.len() {
                for x in &vecs[a] {
                    for y in &vecs[b] {
                        inter_sum += cosine_similarity(x, y).expect("zero vectors filtered");
                        inter_n += 1;
                    }
                }
            }
        }
    }
    if cluster_means.is_empty() {
        return Err(Error::Undefined(
            "within-cluster similarity undefined: every cluster has fewer than two known tokens"
                .into(),
        ));
    }
    if inter_n == 0 {
        return Err(Error::Undefined(
            "inter-cluster similarity undefined: no sentence has two clusters with known tokens"
                .into(),
        ));
    }
    Ok(Coherence {
        within: cluster_means.iter().sum::<f64>() / cluster_means.len() as f64,
        inter: inter_sum / inter_n as f64,
        n_clusters: cluster_means.len(),
        n_inter_pairs: inter_n,
    })
}

/// Mean over sentences of the mean pairwise similarity of a flat token list
/// (the baseline's top tokens).
pub fn list_similarity(lists: &[Vec<String>], emb: &StaticEmbeddings) -> Result<f64> {
    let mut skipped = BTreeSet::new();
    let means: Vec<f64> = lists
        .iter()
        .filter_map(|l| mean_pairwise(&lookup(l, emb, &mut skipped)))
        .collect();
    if means.is_empty() {
        return Err(Error::Undefined("no list has two known tokens".into()));
    }
    Ok(means.iter().sum::<f64>() / means.len() as f64)
}
