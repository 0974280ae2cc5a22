//! Parsing of platform dumps into the canonical data model.
//!
//! Input is JSON-lines, one post per line:
//!
//! ```text
//! {"id": "p1", "author": "u1", "parent": null, "ts": 100,
//!  "text": "...", "embedding": null, "topic": null}
//! ```
//!
//! `id`, `author`, and `ts` are required; `parent`, `text`, `embedding`
//! (512 numbers), and `topic` may be null or absent. Unknown keys are
//! ignored. Loading validates referential integrity: every parent must
//! resolve, parent links must be acyclic, and a child may never be older
//! than its parent (equal timestamps are fine — platform clocks are
//! coarse).

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EMBEDDING_DIM: usize = 512;

/// Opaque post key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PostId(pub String);

/// Opaque user key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub String);

impl PostId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl UserId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PostId {
    fn from(s: &str) -> Self {
        PostId(s.to_string())
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        UserId(s.to_string())
    }
}

/// Interaction mode of the source platform. Reply-threaded forums and
/// reshare-driven microblogs produce the same parent-link structure, so the
/// value is carried through to reports rather than changing semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Platform {
    #[default]
    RedditLike,
    ReshareLike,
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Platform::RedditLike => f.write_str("reddit-like"),
            Platform::ReshareLike => f.write_str("reshare-like"),
        }
    }
}

/// One content item: a submission, comment, post, or reshare.
#[derive(Debug, Clone, PartialEq)]
pub struct Post {
    pub id: PostId,
    pub author: UserId,
    pub parent: Option<PostId>,
    /// Terminus of the parent chain; equals `id` for roots. Always derived,
    /// never read from input.
    pub root: PostId,
    pub ts: i64,
    pub text: String,
    pub embedding: Option<Vec<f64>>,
    pub topic: Option<String>,
}

impl Post {
    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }

    /// Deleted-content placeholder: no text and no embedding. Retained for
    /// graph and cascade analysis, excluded from echo detection.
    pub fn is_placeholder(&self) -> bool {
        self.text.is_empty() && self.embedding.is_none()
    }
}

#[derive(Deserialize)]
struct RawPost {
    id: String,
    author: String,
    #[serde(default)]
    parent: Option<String>,
    ts: i64,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    embedding: Option<Vec<f64>>,
    #[serde(default)]
    topic: Option<String>,
}

#[derive(Serialize)]
struct RawPostOut<'a> {
    id: &'a str,
    author: &'a str,
    parent: Option<&'a str>,
    ts: i64,
    text: &'a str,
    embedding: &'a Option<Vec<f64>>,
    topic: &'a Option<String>,
}

/// A validated, immutable collection of posts. Post order is input order;
/// all downstream modules may read it concurrently.
#[derive(Debug, Clone)]
pub struct Corpus {
    posts: Vec<Post>,
    by_id: HashMap<PostId, usize>,
    platform: Platform,
}

impl Corpus {
    /// Builds a corpus from already-parsed posts, running the same
    /// validation as [`load_corpus`]. `root` fields on input are ignored
    /// and re-derived.
    pub fn from_posts(posts: Vec<Post>, platform: Platform) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(posts.len());
        for (i, post) in posts.iter().enumerate() {
            if by_id.insert(post.id.clone(), i).is_some() {
                return Err(Error::DuplicatePost(post.id.0.clone()));
            }
        }
        let mut corpus = Corpus {
            posts,
            by_id,
            platform,
        };
        corpus.validate_and_backfill()?;
        Ok(corpus)
    }

    fn validate_and_backfill(&mut self) -> Result<()> {
        // Parent resolution and timestamp ordering.
        for post in &self.posts {
            if let Some(parent_id) = &post.parent {
                let Some(&pidx) = self.by_id.get(parent_id) else {
                    return Err(Error::DanglingParent {
                        post: post.id.0.clone(),
                        parent: parent_id.0.clone(),
                    });
                };
                let parent = &self.posts[pidx];
                if post.ts < parent.ts {
                    return Err(Error::TimestampOrder {
                        post: post.id.0.clone(),
                        parent: parent_id.0.clone(),
                    });
                }
            }
        }

        // Root derivation with cycle detection. States: 0 unvisited,
        // 1 on current chain, 2 resolved.
        let n = self.posts.len();
        let mut state = vec![0u8; n];
        let mut root_of: Vec<Option<usize>> = vec![None; n];
        let mut chain = Vec::new();
        for start in 0..n {
            if state[start] == 2 {
                continue;
            }
            chain.clear();
            let mut cur = start;
            let root_idx = loop {
                match state[cur] {
                    2 => break root_of[cur].unwrap(),
                    1 => return Err(Error::ParentCycle(self.posts[cur].id.0.clone())),
                    _ => {}
                }
                state[cur] = 1;
                chain.push(cur);
                match &self.posts[cur].parent {
                    None => break cur,
                    Some(p) => cur = self.by_id[p],
                }
            };
            for &i in &chain {
                state[i] = 2;
                root_of[i] = Some(root_idx);
            }
        }
        let roots: Vec<PostId> = root_of
            .iter()
            .map(|r| self.posts[r.unwrap()].id.clone())
            .collect();
        for (post, root) in self.posts.iter_mut().zip(roots) {
            post.root = root;
        }
        Ok(())
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn platform(&self) -> Platform {
        self.platform
    }

    pub fn get(&self, id: &PostId) -> Option<&Post> {
        self.by_id.get(id).map(|&i| &self.posts[i])
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// Distinct authors, sorted.
    pub fn users(&self) -> Vec<UserId> {
        let mut users: Vec<UserId> = self.posts.iter().map(|p| p.author.clone()).collect();
        users.sort_unstable();
        users.dedup();
        users
    }

    /// Number of deleted-content placeholders.
    pub fn placeholder_count(&self) -> usize {
        self.posts.iter().filter(|p| p.is_placeholder()).count()
    }

    /// Writes the corpus back out in the ingest JSONL schema. Derived
    /// fields (`root`) are not emitted; `load_corpus` of the output
    /// reproduces this corpus exactly.
    pub fn serialize_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for post in &self.posts {
            let raw = RawPostOut {
                id: post.id.as_str(),
                author: post.author.as_str(),
                parent: post.parent.as_ref().map(|p| p.as_str()),
                ts: post.ts,
                text: &post.text,
                embedding: &post.embedding,
                topic: &post.topic,
            };
            serde_json::to_writer(&mut out, &raw)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Loads and validates a JSONL dump. Empty lines are rejected as malformed;
/// the format has no comments.
pub fn load_corpus(path: &Path, platform: Platform) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_corpus_reader(BufReader::new(file), &path.display().to_string(), platform)
}

/// Same as [`load_corpus`] but from any reader; `origin` names the source in
/// errors.
pub fn load_corpus_reader<R: BufRead>(
    reader: R,
    origin: &str,
    platform: Platform,
) -> Result<Corpus> {
    let mut posts = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::MalformedLine {
            path: origin.to_string(),
            line: lineno,
            message: e.to_string(),
        })?;
        let raw: RawPost = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            path: origin.to_string(),
            line: lineno,
            message: e.to_string(),
        })?;
        if let Some(vec) = &raw.embedding {
            if vec.len() != EMBEDDING_DIM {
                return Err(Error::EmbeddingDimension {
                    post: raw.id,
                    got: vec.len(),
                    expected: EMBEDDING_DIM,
                });
            }
            if vec.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEmbedding(raw.id));
            }
        }
        posts.push(Post {
            root: PostId(raw.id.clone()), // placeholder, re-derived below
            id: PostId(raw.id),
            author: UserId(raw.author),
            parent: raw.parent.map(PostId),
            ts: raw.ts,
            text: raw.text.unwrap_or_default(),
            embedding: raw.embedding,
            topic: raw.topic,
        });
    }
    Corpus::from_posts(posts, platform)
}

/// Maps every post to the terminus of its parent chain; roots map to
/// themselves.
pub fn derive_roots(corpus: &Corpus) -> HashMap<PostId, PostId> {
    corpus
        .posts()
        .iter()
        .map(|p| (p.id.clone(), p.root.clone()))
        .collect()
}
