//! Post embeddings: the feature-hashing baseline and sidecar loading.
//!
//! The baseline embedder hashes lowercased, punctuation-split tokens into
//! 512 signed dimensions and L2-normalizes the counts. It is a
//! deterministic stand-in with the same shape as a pretrained sentence
//! encoder; corpora that carry real 512-d vectors (inline or via a
//! sidecar file) bypass it entirely. Mixing the two spaces in one corpus
//! is rejected.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ingest::{Corpus, PostId, EMBEDDING_DIM};

/// Tokens carrying no topical signal; a post whose every token is one of
/// these embeds to the zero vector and is ineligible for echo detection.
const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "but", "by", "can", "did", "do", "does",
    "for", "from", "had", "has", "have", "he", "i", "if", "in", "is", "it", "its", "my", "no",
    "not", "of", "on", "or", "our", "she", "so", "that", "the", "their", "then", "these", "they",
    "this", "those", "to", "too", "very", "was", "we", "were", "will", "with", "you", "your",
];

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Hashes a text into a unit-norm 512-d vector. `None` when no usable
/// token remains (empty or stopword-only text).
///
/// Each token maps to dimension `hash & 511` with sign taken from hash
/// bit 9; token counts accumulate before normalization.
pub fn hash_embedding(text: &str) -> Option<Vec<f64>> {
    let mut vec = vec![0.0f64; EMBEDDING_DIM];
    let mut used = false;
    for token in text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
    {
        let token = token.to_lowercase();
        if STOPWORDS.contains(&token.as_str()) {
            continue;
        }
        let h = fnv1a64(token.as_bytes());
        let dim = (h & 0x1ff) as usize;
        let sign = if (h >> 9) & 1 == 0 { 1.0 } else { -1.0 };
        vec[dim] += sign;
        used = true;
    }
    if !used {
        return None;
    }
    let norm = vec.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        // Opposite-signed tokens can cancel exactly; such a post carries
        // no usable signal either.
        return None;
    }
    for v in &mut vec {
        *v /= norm;
    }
    Some(vec)
}

/// Row-major embedding matrix over the eligible posts of a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
    ids: Vec<PostId>,
    row_index: BTreeMap<PostId, usize>,
}

impl EmbeddingMatrix {
    pub fn from_rows(rows: Vec<(PostId, Vec<f64>)>) -> Result<Self> {
        let dim = rows.first().map(|(_, v)| v.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        let mut ids = Vec::with_capacity(rows.len());
        let mut row_index = BTreeMap::new();
        for (id, row) in rows {
            if row.len() != dim {
                return Err(Error::EmbeddingDimension {
                    post: id.0,
                    got: row.len(),
                    expected: dim,
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEmbedding(id.0));
            }
            row_index.insert(id.clone(), ids.len());
            ids.push(id);
            data.extend_from_slice(&row);
        }
        Ok(EmbeddingMatrix {
            dim,
            data,
            ids,
            row_index,
        })
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn ids(&self) -> &[PostId] {
        &self.ids
    }

    pub fn row_of(&self, id: &PostId) -> Option<usize> {
        self.row_index.get(id).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Embeds every eligible post of a corpus.
///
/// If any post carries a supplied embedding, all posts with usable text
/// must carry one too ([`Error::MixedEmbeddings`] otherwise) and the
/// supplied vectors are used as-is. Without supplied embeddings, the
/// hashing baseline embeds every post with usable text.
pub fn build_embeddings(corpus: &Corpus) -> Result<EmbeddingMatrix> {
    let any_supplied = corpus.posts().iter().any(|p| p.embedding.is_some());
    let mut rows = Vec::new();
    if any_supplied {
        for post in corpus.posts() {
            match &post.embedding {
                Some(vec) => rows.push((post.id.clone(), vec.clone())),
                None => {
                    if hash_embedding(&post.text).is_some() {
                        return Err(Error::MixedEmbeddings);
                    }
                }
            }
        }
    } else {
        for post in corpus.posts() {
            if let Some(vec) = hash_embedding(&post.text) {
                rows.push((post.id.clone(), vec));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::NoEligiblePosts(
            "no post has text or a supplied embedding".to_string(),
        ));
    }
    EmbeddingMatrix::from_rows(rows)
}

#[derive(Deserialize)]
struct SidecarRecord {
    id: String,
    vec: Vec<f64>,
}

/// Loads an embedding sidecar (JSONL `{"id", "vec"}`, 64- or 512-d) and
/// assembles the matrix over posts present in the corpus. All vectors
/// must share one dimension; 64-d sidecars are treated as already
/// reduced.
pub fn embeddings_from_sidecar(corpus: &Corpus, path: &Path) -> Result<EmbeddingMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut by_id: BTreeMap<PostId, Vec<f64>> = BTreeMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SidecarRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                path: path.display().to_string(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
        by_id.insert(PostId(record.id), record.vec);
    }
    let mut rows = Vec::new();
    for post in corpus.posts() {
        if let Some(vec) = by_id.get(&post.id) {
            rows.push((post.id.clone(), vec.clone()));
        }
    }
    if rows.is_empty() {
        return Err(Error::NoEligiblePosts(
            "sidecar covers no post in the corpus".to_string(),
        ));
    }
    EmbeddingMatrix::from_rows(rows)
}

/// Cosine similarity of two equal-length vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
