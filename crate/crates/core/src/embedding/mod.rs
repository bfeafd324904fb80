//! Dimensionality reduction of contextual embeddings: PCA followed by exact
//! t-SNE.

mod matrix;
mod pca;
mod tsne;

pub use matrix::EmbeddingMatrix;
pub use pca::{pca_fit_transform, PcaResult};
pub use tsne::{
    calibrate_perplexity, kl_divergence, kl_gradient, q_matrix, squared_distances, tsne_embed,
    Affinities, ReductionConfig, TsneInit, TsneResult, ENTROPY_TOLERANCE, MAX_SEARCH_STEPS,
};

use crate::error::Result;

/// Full reduction: PCA to `pca_components`, then t-SNE to `tsne_components`.
pub fn reduce(x: &EmbeddingMatrix, cfg: &ReductionConfig) -> Result<TsneResult> {
    let pca = pca_fit_transform(x, cfg.pca_components)?;
    tsne_embed(&pca.projected, cfg)
}
