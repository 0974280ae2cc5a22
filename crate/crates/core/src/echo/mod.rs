//! Echo-chamber detection: embed content, reduce dimensionality, cluster
//! into topics, form candidate user groups, and merge them.
//!
//! Every stage is deterministic, so identical corpora and parameters
//! yield identical chamber lists bit for bit.

pub mod chambers;
pub mod embed;
pub mod hdbscan;
mod linalg;
pub mod pca;

pub use chambers::{candidate_chambers, merge_chambers, topic_user_sets, EchoChamber};
pub use embed::{build_embeddings, cosine, embeddings_from_sidecar, hash_embedding, EmbeddingMatrix};
pub use hdbscan::{cluster_topics, TopicClustering};
pub use linalg::sym_eigen;
pub use pca::{reduce, Reduction};

use crate::error::Result;
use crate::ingest::Corpus;

/// Parameters of the detection stage, echoed into every report.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EchoParams {
    pub reduced_dim: usize,
    pub min_cluster_size: usize,
    pub min_samples: usize,
    /// Shared-topic threshold for chamber membership.
    pub tau: usize,
    pub jaccard_threshold: f64,
}

impl Default for EchoParams {
    fn default() -> Self {
        EchoParams {
            reduced_dim: 64,
            min_cluster_size: 15,
            min_samples: 5,
            tau: 2,
            jaccard_threshold: 0.7,
        }
    }
}

/// Runs the whole detection chain on an already-built embedding matrix.
/// Matrices at the reduced dimension (externally reduced vectors) skip
/// the PCA stage.
pub fn detect_from_embeddings(
    corpus: &Corpus,
    matrix: &EmbeddingMatrix,
    params: &EchoParams,
) -> Result<(TopicClustering, Vec<EchoChamber>)> {
    let clustering = if matrix.dim() <= params.reduced_dim {
        cluster_topics(matrix, params.min_cluster_size, params.min_samples)
    } else {
        let reduction = reduce(matrix, params.reduced_dim)?;
        cluster_topics(&reduction.matrix, params.min_cluster_size, params.min_samples)
    };
    let candidates = candidate_chambers(&clustering, corpus, params.tau);
    let merged = merge_chambers(candidates, params.jaccard_threshold);
    Ok((clustering, merged))
}

/// Embeds the corpus (hashing baseline or supplied vectors) and runs
/// [`detect_from_embeddings`].
pub fn detect(corpus: &Corpus, params: &EchoParams) -> Result<(TopicClustering, Vec<EchoChamber>)> {
    let matrix = build_embeddings(corpus)?;
    detect_from_embeddings(corpus, &matrix, params)
}
