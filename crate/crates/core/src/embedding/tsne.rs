//! Exact t-SNE.
//!
//! Affinities come from a per-row bandwidth search on squared Euclidean
//! distances; the low-dimensional kernel is Student-t with one degree of
//! freedom, and the optimizer is gradient descent with momentum and
//! per-coordinate gains, preceded by an early-exaggeration phase.
//!
//! `exp` and `log` come from the `libm` crate rather than the platform math
//! library, so the same seed gives the same bits on every target.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pca_fit_transform, EmbeddingMatrix};
use crate::error::{Error, Result};

/// Bisection tolerance on row entropy, in bits.
pub const ENTROPY_TOLERANCE: f64 = 1e-4;
/// Maximum bandwidth search steps per row.
pub const MAX_SEARCH_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TsneInit {
    /// Leading principal components, rescaled so the first has std 1e-4.
    Pca,
    /// Isotropic Gaussian with std 1e-4 drawn from the config seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    pub pca_components: usize,
    pub tsne_components: usize,
    pub perplexity: f64,
    pub tsne_iters: usize,
    pub exaggeration_factor: f64,
    pub exaggeration_iters: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub init: TsneInit,
    pub momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch_iter: usize,
    pub min_gain: f64,
    /// Optimization stops early once the gradient norm falls below this.
    pub min_grad_norm: f64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            pca_components: 100,
            tsne_components: 10,
            perplexity: 10.0,
            tsne_iters: 1000,
            exaggeration_factor: 12.0,
            exaggeration_iters: 250,
            learning_rate: 200.0,
            seed: 0,
            init: TsneInit::Pca,
            momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 250,
            min_gain: 0.01,
            min_grad_norm: 1e-7,
        }
    }
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pca_components", self.pca_components as f64),
            ("tsne_components", self.tsne_components as f64),
            ("perplexity", self.perplexity),
            ("tsne_iters", self.tsne_iters as f64),
            ("exaggeration_factor", self.exaggeration_factor),
            ("learning_rate", self.learning_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Row-wise conditional affinities and their symmetrized joint form.
#[derive(Debug, Clone)]
pub struct Affinities {
    /// p(j|i); each row sums to one, zero diagonal.
    pub conditional: DMatrix<f64>,
    /// (p(j|i) + p(i|j)) / 2n.
    pub joint: DMatrix<f64>,
    /// Achieved Shannon entropy of each conditional row, in bits.
    pub entropies: Vec<f64>,
    /// Precision 1/(2σ²) found for each row.
    pub betas: Vec<f64>,
}

pub fn squared_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (x.row(i) - x.row(j)).norm_squared();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Conditional row for precision `beta` on shifted distances; returns
/// (row, entropy in nats).
fn conditional_row(shifted: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let weights: Vec<f64> = shifted.iter().map(|d| libm::exp(-beta * d)).collect();
    let z: f64 = weights.iter().sum();
    let row: Vec<f64> = weights.iter().map(|w| w / z).collect();
    let mean_d: f64 = row.iter().zip(shifted).map(|(p, d)| p * d).sum();
    (row, libm::log(z) + beta * mean_d)
}

fn calibrate_row(dist_row: &[f64], skip: usize, target_nats: f64) -> (Vec<f64>, f64, f64) {
    let others: Vec<f64> = dist_row
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != skip)
        .map(|(_, d)| *d)
        .collect();
    let dmin = others.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = others.iter().map(|d| d - dmin).collect();
    let spread = shifted.iter().sum::<f64>() / shifted.len() as f64;

    let mut beta = if spread > 0.0 { 1.0 / spread } else { 1.0 };
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let (mut row, mut h) = conditional_row(&shifted, beta);
    for _ in 0..MAX_SEARCH_STEPS {
        let diff = h - target_nats;
        if diff.abs() < ENTROPY_TOLERANCE * std::f64::consts::LN_2 {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_infinite() {
                beta * 2.0
            } else {
                (beta + hi) / 2.0
            };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
        (row, h) = conditional_row(&shifted, beta);
    }

    let mut full = Vec::with_capacity(dist_row.len());
    let mut it = row.into_iter();
    for j in 0..dist_row.len() {
        full.push(if j == skip {
            0.0
        } else {
            it.next().unwrap_or(0.0)
        });
    }
    (full, h / std::f64::consts::LN_2, beta)
}

/// Per-row bandwidth search so each conditional distribution has entropy
/// `log2(perplexity)`, then symmetrization.
pub fn calibrate_perplexity(distances: &DMatrix<f64>, perplexity: f64) -> Result<Affinities> {
    let n = distances.nrows();
    if distances.ncols() != n {
        return Err(Error::InvalidInput("distance matrix is not square".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 points".into()));
    }
    if perplexity.is_nan() || perplexity <= 0.0 || perplexity >= n as f64 {
        return Err(Error::InvalidInput(format!(
            "perplexity {perplexity} must be in (0, n={n})"
        )));
    }
    for i in 0..n {
        if distances[(i, i)] != 0.0 {
            return Err(Error::InvalidInput(format!(
                "distance diagonal {i} is nonzero"
            )));
        }
        for j in 0..i {
            let (a, b) = (distances[(i, j)], distances[(j, i)]);
            if !a.is_finite() || a < 0.0 || (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "distances must be finite, non-negative and symmetric (at {i},{j})"
                )));
            }
        }
    }

    let target = libm::log(perplexity);
    let rows: Vec<(Vec<f64>, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = distances.row(i).iter().copied().collect();
            calibrate_row(&row, i, target)
        })
        .collect();

    let mut conditional = DMatrix::zeros(n, n);
    let mut entropies = Vec::with_capacity(n);
    let mut betas = Vec::with_capacity(n);
    for (i, (row, h, beta)) in rows.into_iter().enumerate() {
        for (j, p) in row.into_iter().enumerate() {
            conditional[(i, j)] = p;
        }
        entropies.push(h);
        betas.push(beta);
    }
    let joint = (&conditional + conditional.transpose()) / (2.0 * n as f64);
    Ok(Affinities {
        conditional,
        joint,
        entropies,
        betas,
    })
}

/// Student-t kernel weights w_ij = 1 / (1 + |y_i - y_j|²) (zero diagonal)
/// and their sum.
fn kernel(y: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let n = y.nrows();
    let mut w = DMatrix::zeros(n, n);
    let mut z = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 1.0 / (1.0 + (y.row(i) - y.row(j)).norm_squared());
            w[(i, j)] = v;
            w[(j, i)] = v;
            z += 2.0 * v;
        }
    }
    (w, z)
}

/// Low-dimensional joint affinities q_ij.
pub fn q_matrix(y: &DMatrix<f64>) -> DMatrix<f64> {
    let (w, z) = kernel(y);
    w / z
}

fn kl_from_kernel(p: &DMatrix<f64>, w: &DMatrix<f64>, z: f64) -> f64 {
    let mut kl = 0.0;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let pij = p[(i, j)];
            if i != j && pij > 0.0 {
                kl += pij * libm::log(pij / (w[(i, j)] / z));
            }
        }
    }
    kl
}

fn gradient_from_kernel(
    p: &DMatrix<f64>,
    y: &DMatrix<f64>,
    w: &DMatrix<f64>,
    z: f64,
) -> DMatrix<f64> {
    let (n, c) = y.shape();
    let mut grad = DMatrix::zeros(n, c);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let coeff = 4.0 * (p[(i, j)] - w[(i, j)] / z) * w[(i, j)];
            for k in 0..c {
                grad[(i, k)] += coeff * (y[(i, k)] - y[(j, k)]);
            }
        }
    }
    grad
}

/// KL(P ‖ Q) for embedding `y`.
pub fn kl_divergence(p: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let (w, z) = kernel(y);
    kl_from_kernel(p, &w, z)
}

/// Analytic gradient of [`kl_divergence`] with respect to `y`.
pub fn kl_gradient(p: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let (w, z) = kernel(y);
    gradient_from_kernel(p, y, &w, z)
}

#[derive(Debug, Clone)]
pub struct TsneResult {
    pub embedding: EmbeddingMatrix,
    /// KL(P ‖ Q) with the un-exaggerated P, before each update and once
    /// after the last.
    pub kl_trace: Vec<f64>,
    /// Updates actually performed.
    pub iterations: usize,
    pub affinities: Affinities,
}

fn initial_embedding(x: &EmbeddingMatrix, cfg: &ReductionConfig) -> Result<DMatrix<f64>> {
    let n = x.n();
    let c = cfg.tsne_components;
    let random = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1e-4).expect("valid normal");
        DMatrix::from_fn(n, c, |_, _| normal.sample(&mut rng))
    };
    match cfg.init {
        TsneInit::Random => Ok(random(cfg.seed)),
        TsneInit::Pca => {
            let pca = pca_fit_transform(x, c)?;
            let proj = pca.projected.matrix();
            let first = proj.column(0);
            let mean = first.mean();
            let std =
                (first.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
            if std == 0.0 {
                return Ok(random(cfg.seed));
            }
            // components beyond the data rank start (and stay) at zero
            let mut y = DMatrix::zeros(n, c);
            for i in 0..n {
                for k in 0..proj.ncols() {
                    y[(i, k)] = proj[(i, k)] / std * 1e-4;
                }
            }
            Ok(y)
        }
    }
}

/// Halves the step along `-grad` until KL no longer exceeds `kl`.
fn backtrack(
    p: &DMatrix<f64>,
    y: &DMatrix<f64>,
    grad: &DMatrix<f64>,
    kl: f64,
    learning_rate: f64,
) -> Option<(DMatrix<f64>, DMatrix<f64>, f64)> {
    let mut step = learning_rate;
    for _ in 0..60 {
        let next = y - grad * step;
        let (w, z) = kernel(&next);
        if kl_from_kernel(p, &w, z) <= kl {
            return Some((next, w, z));
        }
        step *= 0.5;
    }
    None
}

/// Exact t-SNE of `x` into `cfg.tsne_components` dimensions. Row order and
/// labels are preserved.
///
/// After early exaggeration a momentum step that would raise KL is rejected
/// in favour of a backtracking gradient step, so the recorded trace never
/// increases in that phase.
pub fn tsne_embed(x: &EmbeddingMatrix, cfg: &ReductionConfig) -> Result<TsneResult> {
    cfg.validate()?;
    let n = x.n();
    if (n as f64) <= cfg.perplexity {
        return Err(Error::InvalidInput(format!(
            "t-SNE needs more points ({n}) than the perplexity ({})",
            cfg.perplexity
        )));
    }
    let affinities = calibrate_perplexity(&squared_distances(x.matrix()), cfg.perplexity)?;
    let p = &affinities.joint;
    let mut y = initial_embedding(x, cfg)?;
    let c = y.ncols();
    let mut update = DMatrix::zeros(n, c);
    let mut gains = DMatrix::from_element(n, c, 1.0);
    let mut kl_trace = Vec::with_capacity(cfg.tsne_iters + 1);
    let mut iterations = 0;

    let (mut w, mut z) = kernel(&y);
    for it in 0..cfg.tsne_iters {
        if it == cfg.exaggeration_iters && it > 0 {
            // new phase: optimizer state starts fresh
            update.fill(0.0);
            gains.fill(1.0);
        }
        let kl = kl_from_kernel(p, &w, z);
        kl_trace.push(kl);
        let exaggerated = it < cfg.exaggeration_iters;
        let factor = if exaggerated {
            cfg.exaggeration_factor
        } else {
            1.0
        };
        let grad = gradient_from_kernel(&(p * factor), &y, &w, z);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "non-finite t-SNE gradient at iteration {it}"
            )));
        }
        let momentum = if it < cfg.momentum_switch_iter {
            cfg.momentum
        } else {
            cfg.final_momentum
        };
        for idx in 0..n * c {
            let g = grad[idx];
            gains[idx] = if update[idx] * g < 0.0 {
                gains[idx] + 0.2
            } else {
                (gains[idx] * 0.8_f64).max(cfg.min_gain)
            };
            update[idx] = momentum * update[idx] - cfg.learning_rate * gains[idx] * g;
        }
        let candidate = &y + &update;
        let (cw, cz) = kernel(&candidate);
        iterations = it + 1;
        if exaggerated || kl_from_kernel(p, &cw, cz) <= kl {
            y = candidate;
            (w, z) = (cw, cz);
        } else {
            // the momentum step went uphill: drop optimizer state and
            // backtrack along the plain gradient instead
            update.fill(0.0);
            gains.fill(1.0);
            match backtrack(p, &y, &grad, kl, cfg.learning_rate) {
                Some((next, nw, nz)) => {
                    update = &next - &y;
                    y = next;
                    (w, z) = (nw, nz);
                }
                None => break,
            }
        }
        if grad.norm() < cfg.min_grad_norm {
            break;
        }
    }
    let final_kl = kl_divergence(p, &y);
    if !final_kl.is_finite() {
        return Err(Error::NumericalFailure(
            "non-finite final KL divergence".into(),
        ));
    }
    kl_trace.push(final_kl);

    Ok(TsneResult {
        embedding: EmbeddingMatrix::from_matrix(x.labels().to_vec(), y)?,
        kl_trace,
        iterations,
        affinities,
    })
}
