//! Cascade trees and their structural / hate-composition metrics.
//!
//! A cascade is the rooted tree of posts descending from one root post
//! through parent links. Volume is the edge count (equivalently the sum of
//! out-degrees), width the largest number of nodes at one depth, height
//! the deepest root-to-leaf distance.

use std::collections::BTreeMap;

use crate::ingest::{Corpus, PostId, UserId};
use crate::scoring::{PostHateBucket, UserHateBucket};

/// One rooted reply tree.
#[derive(Debug, Clone)]
pub struct Cascade {
    root: PostId,
    source_user: UserId,
    /// Post keys in corpus order.
    nodes: Vec<PostId>,
    /// child -> parent, one entry per non-root node.
    parent: BTreeMap<PostId, PostId>,
    /// Authors aligned with `nodes` (a multiset: repeat participation
    /// counts).
    authors: Vec<UserId>,
}

/// The four source categories crossing user and post hatefulness, plus
/// `Other` for anything involving a medium bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Category {
    #[serde(rename = "1")]
    C1,
    #[serde(rename = "2")]
    C2,
    #[serde(rename = "3")]
    C3,
    #[serde(rename = "4")]
    C4,
    #[serde(rename = "other")]
    Other,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::C1 => "1",
            Category::C2 => "2",
            Category::C3 => "3",
            Category::C4 => "4",
            Category::Other => "other",
        }
    }
}

/// Splits source posts into the four-category table: 1 = non-hate post
/// from a low-hate user, 2 = high-hate post from a low-hate user, 3 =
/// non-hate post from a high-hate user, 4 = high-hate post from a
/// high-hate user.
pub fn categorize(source_user: UserHateBucket, source_post: PostHateBucket) -> Category {
    use PostHateBucket as P;
    use UserHateBucket as U;
    match (source_user, source_post) {
        (U::Low, P::Non) => Category::C1,
        (U::Low, P::High) => Category::C2,
        (U::High, P::Non) => Category::C3,
        (U::High, P::High) => Category::C4,
        _ => Category::Other,
    }
}

impl Cascade {
    pub fn root(&self) -> &PostId {
        &self.root
    }

    pub fn source_user(&self) -> &UserId {
        &self.source_user
    }

    pub fn nodes(&self) -> &[PostId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// child -> parent pairs.
    pub fn edges(&self) -> &BTreeMap<PostId, PostId> {
        &self.parent
    }

    /// All node authors, root included, with multiplicity.
    pub fn participants(&self) -> &[UserId] {
        &self.authors
    }

    /// Depth of every node by BFS from the root; input order of the dump
    /// does not matter.
    fn depths(&self) -> BTreeMap<&PostId, u32> {
        let mut children: BTreeMap<&PostId, Vec<&PostId>> = BTreeMap::new();
        for (child, parent) in &self.parent {
            children.entry(parent).or_default().push(child);
        }
        let mut depth = BTreeMap::new();
        let mut queue = std::collections::VecDeque::from([(&self.root, 0u32)]);
        while let Some((node, d)) = queue.pop_front() {
            depth.insert(node, d);
            for child in children.get(node).into_iter().flatten() {
                queue.push_back((child, d + 1));
            }
        }
        depth
    }

    /// Sum of out-degrees over all nodes = edge count.
    pub fn volume(&self) -> usize {
        self.parent.len()
    }

    /// Maximum number of nodes at the same distance from the root.
    pub fn width(&self) -> usize {
        let mut per_depth: BTreeMap<u32, usize> = BTreeMap::new();
        for (_, d) in self.depths() {
            *per_depth.entry(d).or_insert(0) += 1;
        }
        per_depth.values().copied().max().unwrap_or(0)
    }

    /// Maximum distance from the root to a leaf.
    pub fn height(&self) -> u32 {
        self.depths().values().copied().max().unwrap_or(0)
    }

    /// Fraction of distinct non-source participants whose bucket is medium
    /// or high. Absent when nobody but the source participated.
    pub fn hateful_participation(
        &self,
        user_buckets: &BTreeMap<UserId, UserHateBucket>,
    ) -> Option<f64> {
        let mut others: Vec<&UserId> =
            self.authors.iter().filter(|a| **a != self.source_user).collect();
        others.sort_unstable();
        others.dedup();
        if others.is_empty() {
            return None;
        }
        let hateful = others
            .iter()
            .filter(|u| user_buckets.get(u).is_some_and(|b| b.is_hateful()))
            .count();
        Some(hateful as f64 / others.len() as f64)
    }

    /// Fraction of non-root posts bucketed medium or high. Absent for a
    /// root-only cascade.
    pub fn hateful_interaction_fraction(
        &self,
        post_buckets: &BTreeMap<PostId, PostHateBucket>,
    ) -> Option<f64> {
        if self.parent.is_empty() {
            return None;
        }
        let hateful = self
            .parent
            .keys()
            .filter(|p| post_buckets.get(p).is_some_and(|b| b.is_hateful()))
            .count();
        Some(hateful as f64 / self.parent.len() as f64)
    }

    /// Fraction of reply interactions authored by members of `members`
    /// (multiset counting, source excluded). Absent with no replies.
    pub fn member_participation(
        &self,
        members: &std::collections::BTreeSet<UserId>,
    ) -> Option<f64> {
        let replies: Vec<&UserId> = self
            .nodes
            .iter()
            .zip(&self.authors)
            .filter(|(n, _)| **n != self.root)
            .map(|(_, a)| a)
            .collect();
        if replies.is_empty() {
            return None;
        }
        let from_members = replies.iter().filter(|a| members.contains(**a)).count();
        Some(from_members as f64 / replies.len() as f64)
    }
}

/// One cascade per root post, each containing exactly the posts whose
/// derived root is that root. Output is sorted by root key.
pub fn extract_cascades(corpus: &Corpus) -> Vec<Cascade> {
    let mut by_root: BTreeMap<PostId, Cascade> = BTreeMap::new();
    for post in corpus.posts() {
        let entry = by_root.entry(post.root.clone()).or_insert_with(|| Cascade {
            root: post.root.clone(),
            source_user: corpus
                .get(&post.root)
                .expect("root resolves in a valid corpus")
                .author
                .clone(),
            nodes: Vec::new(),
            parent: BTreeMap::new(),
            authors: Vec::new(),
        });
        entry.nodes.push(post.id.clone());
        entry.authors.push(post.author.clone());
        if let Some(parent) = &post.parent {
            entry.parent.insert(post.id.clone(), parent.clone());
        }
    }
    by_root.into_values().collect()
}

/// Splits cascades by whether the source user is in `members`.
/// Returns `(member_sourced, non_member_sourced)`.
pub fn partition_by_membership<'a>(
    cascades: &'a [Cascade],
    members: &std::collections::BTreeSet<UserId>,
) -> (Vec<&'a Cascade>, Vec<&'a Cascade>) {
    cascades.iter().partition(|c| members.contains(&c.source_user))
}
