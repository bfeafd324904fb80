//! Brute-force average linkage: every cluster-pair average recomputed from
//! leaf distances at each step.

use concept_core::clustering::agglomerate;
use nalgebra::DMatrix;

use super::{labeled, random_matrix};

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    1.0 - dot / (na.sqrt() * nb.sqrt())
}

/// Recomputes every cluster-pair average from leaf distances at each step.
/// Returns (left, right, distance, new node) per merge.
pub fn brute_force(x: &DMatrix<f64>) -> Vec<(usize, usize, f64, usize)> {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().copied().collect()).collect();
    let leaf_dist = |i: usize, j: usize| cosine(&rows[i], &rows[j]);
    // (node id, leaves)
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in 0..clusters.len() {
                if a == b {
                    continue;
                }
                let (la, lb) = (&clusters[a].1, &clusters[b].1);
                let (ma, mb) = (*la.iter().min().unwrap(), *lb.iter().min().unwrap());
                if ma > mb {
                    continue;
                }
                let mut total = 0.0;
                for &i in la {
                    for &j in lb {
                        total += leaf_dist(i, j);
                    }
                }
                let avg = total / (la.len() * lb.len()) as f64;
                let key = (avg, ma, mb, a, b);
                let better = match best {
                    None => true,
                    Some(cur) => (key.0, key.1, key.2) < (cur.0, cur.1, cur.2),
                };
                if better {
                    best = Some(key);
                }
            }
        }
        let (d, _, _, a, b) = best.unwrap();
        let node = n + out.len();
        out.push((clusters[a].0, clusters[b].0, d, node));
        let mut merged = clusters[a].1.clone();
        merged.extend(&clusters[b].1);
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        clusters.remove(hi);
        clusters.remove(lo);
        clusters.push((node, merged));
    }
    out
}

pub fn assert_matches_oracle(x: &DMatrix<f64>, context: &str) {
    let got = agglomerate(&labeled(x)).unwrap();
    let want = brute_force(x);
    assert_eq!(got.merges.len(), want.len(), "{context}");
    for (k, (m, w)) in got.merges.iter().zip(&want).enumerate() {
        assert_eq!(
            (m.left, m.right, m.node),
            (w.0, w.1, w.3),
            "{context}: merge {k}"
        );
        assert!(
            (m.distance - w.2).abs() < 1e-12,
            "{context}: merge {k} distance {} vs {}",
            m.distance,
            w.2
        );
    }
}

/// Compares against the oracle on `seeds` random instances of 2 to 8 points.
pub fn check_random_instances(seeds: u64) {
    for seed in 0..seeds {
        let n = 2 + (seed as usize % 7);
        let d = 2 + (seed as usize % 5);
        assert_matches_oracle(&random_matrix(n, d, seed), &format!("seed {seed}"));
    }
    assert_matches_oracle(&random_matrix(8, 10, 4242), "8 points");
}
