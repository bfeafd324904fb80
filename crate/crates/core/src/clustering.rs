//! Agglomerative clustering of reduced embeddings under cosine distance,
//! threshold cuts, cluster weighting, centroid selection and ranking.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::pipeline::AggregatedCompletion;

/// Default weight on the score term of [`cluster_weight`].
pub const DEFAULT_ALPHA: f64 = 0.7;
/// Default cosine-distance threshold for [`cut_threshold`].
pub const DEFAULT_CUT_THRESHOLD: f64 = 0.45;

/// One agglomeration step. Leaves are nodes `0..n`; merge `i` creates node `n + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    /// Child whose smallest leaf index is lower.
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub node: usize,
    /// Number of leaves under the new node.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaf_labels: Vec<String>,
}

impl Dendrogram {
    pub fn n_leaves(&self) -> usize {
        self.leaf_labels.len()
    }

    /// Leaf indices under `node`, ascending.
    pub fn leaves_of(&self, node: usize) -> Vec<usize> {
        let n = self.n_leaves();
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            if v < n {
                out.push(v);
            } else if let Some(m) = self.merges.get(v - n) {
                stack.push(m.left);
                stack.push(m.right);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Pairwise `1 - cos` between rows, clamped to [0, 2]. Rows whose unit
/// vectors coincide get exactly zero.
pub fn cosine_distance_matrix(x: &EmbeddingMatrix) -> Result<DMatrix<f64>> {
    let m = x.matrix();
    let n = m.nrows();
    let mut unit = m.clone();
    for (i, mut row) in unit.row_iter_mut().enumerate() {
        let norm = row.norm();
        if norm == 0.0 {
            return Err(Error::ZeroNormRow {
                row: i,
                label: x.labels()[i].clone(),
            });
        }
        row /= norm;
    }
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = if unit.row(i) == unit.row(j) {
                0.0
            } else {
                (1.0 - unit.row(i).dot(&unit.row(j))).clamp(0.0, 2.0)
            };
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}

struct Active {
    node: usize,
    size: usize,
}

/// Average-linkage agglomeration under cosine distance.
///
/// Among equally distant pairs the one with the smallest
/// `(min leaf of left, min leaf of right)` merges first.
pub fn agglomerate(x: &EmbeddingMatrix) -> Result<Dendrogram> {
    let n = x.n();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "clustering needs at least 2 rows, got {n}"
        )));
    }
    let dist = cosine_distance_matrix(x)?;
    // sums[a][b]: total leaf-pair distance between active clusters a and b,
    // indexed by position in `active`
    let mut sums: Vec<Vec<f64>> = (0..n)
        .map(|i| dist.row(i).iter().copied().collect())
        .collect();
    let mut active: Vec<Active> = (0..n).map(|i| Active { node: i, size: 1 }).collect();
    let mut merges = Vec::with_capacity(n - 1);

    while active.len() > 1 {
        // `active` stays sorted by smallest leaf, so scanning (a, b) with a < b
        // visits candidate pairs in tie-break order.
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..active.len() {
            for b in (a + 1)..active.len() {
                let avg = sums[a][b] / (active[a].size * active[b].size) as f64;
                if best.is_none_or(|(_, _, d)| avg < d) {
                    best = Some((a, b, avg));
                }
            }
        }
        let (a, b, distance) = best.expect("at least one pair");
        let node = n + merges.len();
        let size = active[a].size + active[b].size;
        merges.push(Merge {
            left: active[a].node,
            right: active[b].node,
            distance,
            node,
            size,
        });

        #[allow(clippy::needless_range_loop)]
        for c in 0..active.len() {
            if c != a && c != b {
                let s = sums[a][c] + sums[b][c];
                sums[a][c] = s;
                sums[c][a] = s;
            }
        }
        active[a].node = node;
        active[a].size = size;
        active.remove(b);
        sums.remove(b);
        for row in &mut sums {
            row.remove(b);
        }
    }

    Ok(Dendrogram {
        merges,
        leaf_labels: x.labels().to_vec(),
    })
}

/// Flat clusters from applying every merge whose distance is strictly below
/// `threshold`. Clusters are sorted by their smallest leaf; members ascending.
pub fn cut_threshold(d: &Dendrogram, threshold: f64) -> Vec<Vec<usize>> {
    let n = d.n_leaves();
    let total = n + d.merges.len();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for m in &d.merges {
        if m.distance < threshold {
            let l = find(&mut parent, m.left);
            let r = find(&mut parent, m.right);
            parent[l] = m.node;
            parent[r] = m.node;
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        groups.entry(root).or_default().push(leaf);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

/// `alpha * max(max_score) + (1 - alpha) * max(rep_norm)` over the members.
pub fn cluster_weight(members: &[&AggregatedCompletion], alpha: f64) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::EmptyCluster);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside [0, 1]")));
    }
    let max_score = members.iter().map(|m| m.max_score).fold(f64::MIN, f64::max);
    let max_rep = members.iter().map(|m| m.rep_norm).fold(f64::MIN, f64::max);
    Ok(alpha * max_score + (1.0 - alpha) * max_rep)
}

/// Member with the smallest mean cosine distance to the other members,
/// ties broken lexicographically.
pub fn select_centroid(tokens: &[String], embeddings: &EmbeddingMatrix) -> Result<String> {
    match tokens {
        [] => return Err(Error::EmptyCluster),
        [only] => return Ok(only.clone()),
        _ => {}
    }
    let rows = tokens
        .iter()
        .map(|t| {
            embeddings
                .index_of(t)
                .map(|i| embeddings.row(i))
                .ok_or_else(|| Error::InvalidInput(format!("token {t:?} has no embedding row")))
        })
        .collect::<Result<Vec<_>>>()?;
    let sub = EmbeddingMatrix::new(tokens.to_vec(), rows)?;
    let dist = cosine_distance_matrix(&sub)?;
    let k = tokens.len();
    let mut best: Option<(f64, &String)> = None;
    for (i, token) in tokens.iter().enumerate() {
        let mean = dist.row(i).sum() / (k - 1) as f64;
        let better = match best {
            None => true,
            Some((d, t)) => mean < d || (mean == d && token < t),
        };
        if better {
            best = Some((mean, token));
        }
    }
    Ok(best.expect("non-empty").1.clone())
}

/// A ranked concept: a set of completions with its weight and display label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptCluster {
    pub rank: usize,
    pub weight: f64,
    pub centroid: String,
    /// Centroid first, then the rest by descending score.
    pub tokens: Vec<String>,
    /// Largest `rep_norm` among members; second sort key.
    #[serde(skip)]
    pub max_rep_norm: f64,
}

/// Sorts by descending weight, then descending `max_rep_norm`, then
/// centroid, and assigns ranks from 1.
pub fn rank_concepts(mut clusters: Vec<ConceptCluster>) -> Vec<ConceptCluster> {
    clusters.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then_with(|| b.max_rep_norm.total_cmp(&a.max_rep_norm))
            .then_with(|| a.centroid.cmp(&b.centroid))
    });
    for (i, c) in clusters.iter_mut().enumerate() {
        c.rank = i + 1;
    }
    clusters
}

/// Weight of any dendrogram node (leaf or merge) by the cluster formula.
pub fn node_weight(
    d: &Dendrogram,
    node: usize,
    aggregated: &BTreeMap<&str, &AggregatedCompletion>,
    alpha: f64,
) -> Result<f64> {
    let members = d
        .leaves_of(node)
        .into_iter()
        .map(|leaf| {
            let label = d.leaf_labels[leaf].as_str();
            aggregated
                .get(label)
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("no aggregate for {label:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    cluster_weight(&members, alpha)
}

/// Cuts `dendrogram` at `threshold`, weighs each flat cluster and returns
/// them ranked.
pub fn build_concepts(
    dendrogram: &Dendrogram,
    reduced: &EmbeddingMatrix,
    aggregated: &[AggregatedCompletion],
    alpha: f64,
    threshold: f64,
) -> Result<Vec<ConceptCluster>> {
    let by_token: BTreeMap<&str, &AggregatedCompletion> =
        aggregated.iter().map(|a| (a.token.as_str(), a)).collect();
    let mut clusters = Vec::new();
    for group in cut_threshold(dendrogram, threshold) {
        let mut members = group
            .iter()
            .map(|&leaf| {
                let label = dendrogram.leaf_labels[leaf].as_str();
                by_token
                    .get(label)
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("no aggregate for {label:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let weight = cluster_weight(&members, alpha)?;
        let labels: Vec<String> = members.iter().map(|m| m.token.clone()).collect();
        let centroid = select_centroid(&labels, reduced)?;
        members.sort_by(|a, b| {
            (b.token == centroid)
                .cmp(&(a.token == centroid))
                .then_with(|| b.max_score.total_cmp(&a.max_score))
                .then_with(|| a.token.cmp(&b.token))
        });
        clusters.push(ConceptCluster {
            rank: 0,
            weight,
            centroid,
            tokens: members.iter().map(|m| m.token.clone()).collect(),
            max_rep_norm: members.iter().map(|m| m.rep_norm).fold(f64::MIN, f64::max),
        });
    }
    Ok(rank_concepts(clusters))
}
