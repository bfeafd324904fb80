use nalgebra::{DMatrix, DVector};

use super::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Output of [`pca_fit_transform`].
#[derive(Debug, Clone)]
pub struct PcaResult {
    /// Rows projected onto the kept components, labels preserved.
    pub projected: EmbeddingMatrix,
    /// One unit-norm loading vector per row, k×d.
    pub components: DMatrix<f64>,
    /// Variance along each kept component (non-increasing).
    pub explained_variance: Vec<f64>,
    pub mean: DVector<f64>,
}

/// Projects column-centered data onto its top `min(c, n-1, d)` principal
/// components, computed by a full SVD of the centered matrix.
///
/// Each component is sign-fixed so that its largest-magnitude loading is
/// positive (first such index on ties).
pub fn pca_fit_transform(x: &EmbeddingMatrix, c: usize) -> Result<PcaResult> {
    let n = x.n();
    let d = x.dim();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "PCA needs at least 2 rows, got {n}"
        )));
    }
    if c == 0 || d == 0 {
        return Err(Error::InvalidInput("PCA needs c >= 1 and d >= 1".into()));
    }
    let data = x.matrix();
    let mean = data.row_mean().transpose();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let total: f64 = centered.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return Err(Error::ZeroVariance("all rows are identical".into()));
    }

    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| {
        Error::NumericalFailure("SVD did not produce right singular vectors".into())
    })?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    let kept = c.min(n - 1).min(d).min(order.len());
    let mut components = DMatrix::zeros(kept, d);
    let mut explained_variance = Vec::with_capacity(kept);
    for (k, &idx) in order.iter().take(kept).enumerate() {
        let mut v: Vec<f64> = v_t.row(idx).iter().copied().collect();
        let pivot = v.iter().enumerate().fold(
            0,
            |best, (i, x)| if x.abs() > v[best].abs() { i } else { best },
        );
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for (j, x) in v.into_iter().enumerate() {
            components[(k, j)] = x;
        }
        let s = svd.singular_values[idx];
        explained_variance.push(s * s / (n as f64 - 1.0));
    }

    let projected = &centered * components.transpose();
    Ok(PcaResult {
        projected: EmbeddingMatrix::from_matrix(x.labels().to_vec(), projected)?,
        components,
        explained_variance,
        mean,
    })
}
