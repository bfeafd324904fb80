//! PCA against a covariance eigendecomposition, and t-SNE numerics against
//! recomputed entropies and finite differences.

use concept_core::embedding::{
    calibrate_perplexity, kl_divergence, kl_gradient, pca_fit_transform, q_matrix,
    squared_distances, tsne_embed, ReductionConfig,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{jacobi_eigen, labeled, random_matrix};

/// Projections from an eigendecomposition of the sample covariance, with
/// the same sign convention.
pub fn covariance_oracle(x: &DMatrix<f64>, c: usize) -> DMatrix<f64> {
    let n = x.nrows();
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let (values, vectors) = jacobi_eigen(&cov);
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let kept = c.min(n - 1).min(x.ncols());
    let mut out = DMatrix::zeros(n, kept);
    for (k, &idx) in order.iter().take(kept).enumerate() {
        let mut v = vectors.column(idx).clone_owned();
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v = -v;
        }
        out.set_column(k, &(&centered * v));
    }
    out
}

pub fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
    assert_eq!(a.shape(), b.shape());
    let worst = (a - b).amax();
    assert!(worst <= tol, "max deviation {worst:e} > {tol:e}");
}

pub fn entropy_bits(row: &[f64]) -> f64 {
    -row.iter()
        .filter(|p| **p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>()
}

pub fn check_pca_oracle() {
    for (seed, (n, d, c)) in [(6, 4, 2), (6, 4, 4), (50, 20, 20), (50, 20, 5)]
        .into_iter()
        .enumerate()
    {
        let x = random_matrix(n, d, seed as u64 + 11);
        let r = pca_fit_transform(&labeled(&x), c).unwrap();
        assert_close(r.projected.matrix(), &covariance_oracle(&x, c), 1e-8);
    }
}

/// Points on a line keep their pairwise distances in one component.
pub fn check_pca_rank_one() {
    let dir = [1.0, -2.0, 0.5];
    let ts = [-1.5, 0.0, 0.3, 2.0, 4.0];
    let x = DMatrix::from_fn(ts.len(), 3, |i, j| 7.0 + ts[i] * dir[j]);
    let r = pca_fit_transform(&labeled(&x), 1).unwrap();
    let y = r.projected.matrix();
    assert_eq!(y.ncols(), 1);
    for i in 0..ts.len() {
        for j in 0..ts.len() {
            let orig = (x.row(i) - x.row(j)).norm();
            let red = (y[(i, 0)] - y[(j, 0)]).abs();
            assert!((orig - red).abs() < 1e-10);
        }
    }
}

/// Every conditional row of `instances` random point sets has entropy
/// log2(perplexity) within 1e-4, recomputed from the row itself.
pub fn check_entropy_random(instances: u64) {
    for seed in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 500);
        let n = rng.random_range(5..40);
        let d = rng.random_range(2..12);
        let scale: f64 = rng.random_range(0.1..10.0);
        let x = random_matrix(n, d, seed + 900).map(|v| v * scale);
        let perplexity = rng.random_range(1.5..(n as f64 - 1.0) * 0.9);
        let a = calibrate_perplexity(&squared_distances(&x), perplexity).unwrap();
        for i in 0..n {
            let row: Vec<f64> = a.conditional.row(i).iter().copied().collect();
            assert!(
                (row.iter().sum::<f64>() - 1.0).abs() < 1e-9,
                "seed {seed} row {i}: not normalised"
            );
            let h = entropy_bits(&row);
            assert!(
                (h - perplexity.log2()).abs() < 1e-4,
                "seed {seed} row {i}: entropy {h} vs {}",
                perplexity.log2()
            );
        }
    }
}

/// Analytic KL gradient against central differences on a 5-point instance.
pub fn check_gradient_fd() {
    let x = random_matrix(5, 4, 77);
    let p = calibrate_perplexity(&squared_distances(&x), 2.0)
        .unwrap()
        .joint;
    let y = random_matrix(5, 2, 78);
    let grad = kl_gradient(&p, &y);
    let h = 1e-6;
    for idx in 0..y.len() {
        let mut plus = y.clone();
        let mut minus = y.clone();
        plus[idx] += h;
        minus[idx] -= h;
        let fd = (kl_divergence(&p, &plus) - kl_divergence(&p, &minus)) / (2.0 * h);
        let rel = (grad[idx] - fd).abs() / grad[idx].abs().max(fd.abs()).max(1e-12);
        assert!(
            rel < 1e-5,
            "coordinate {idx}: analytic {} vs fd {fd}",
            grad[idx]
        );
    }
}

pub fn assert_kl_tail_non_increasing(seed: u64, cfg: &ReductionConfig) {
    let x = random_matrix(20, 8, seed);
    let r = tsne_embed(&labeled(&x), cfg).unwrap();
    assert!(r.kl_trace.iter().all(|v| v.is_finite()));
    let tail = &r.kl_trace[cfg.exaggeration_iters..];
    for (i, w) in tail.windows(2).enumerate() {
        assert!(
            w[1] <= w[0] + 1e-6,
            "seed {seed}: KL rose at iteration {}: {} -> {}",
            cfg.exaggeration_iters + i,
            w[0],
            w[1]
        );
    }
    assert!((q_matrix(r.embedding.matrix()).sum() - 1.0).abs() < 1e-9);
}

/// 20-point instances, including seeds where plain momentum steps go uphill
/// shortly after exaggeration.
pub fn check_kl_monotone() {
    for seed in [2024, 101, 111, 116, 122] {
        assert_kl_tail_non_increasing(seed, &ReductionConfig::default());
    }
    let low_dim = ReductionConfig {
        perplexity: 5.0,
        tsne_components: 2,
        ..Default::default()
    };
    for seed in 1..=4 {
        assert_kl_tail_non_increasing(seed, &low_dim);
    }
}

pub fn check_tsne_deterministic() {
    let x = labeled(&random_matrix(15, 6, 9));
    let cfg = ReductionConfig {
        perplexity: 4.0,
        ..Default::default()
    };
    let a = tsne_embed(&x, &cfg).unwrap();
    let b = tsne_embed(&x, &cfg).unwrap();
    assert_eq!(a.embedding, b.embedding);
    assert_eq!(a.kl_trace, b.kl_trace);
    assert_eq!(a.embedding.labels(), x.labels());
    assert_eq!(a.embedding.dim(), 10);
}
