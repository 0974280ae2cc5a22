//! The directed user-interaction network and its k-core structure.
//!
//! A directed edge x -> y (weight = interaction count) exists when y
//! replied to or reshared at least one post of x. Self-replies are
//! dropped. The k-core decomposition runs on the undirected simple
//! projection of this graph: parallel edges collapse and direction is
//! ignored, matching the plain degree-based core definition; direction
//! stays available for cascade analysis.

use std::collections::BTreeMap;

use crate::ingest::{Corpus, UserId};
use crate::scoring::UserHateBucket;

/// Directed weighted user graph with a dense index over users.
#[derive(Debug, Clone)]
pub struct InteractionGraph {
    users: Vec<UserId>,
    index: BTreeMap<UserId, usize>,
    /// Directed adjacency: out[x] maps neighbor index -> interaction count.
    out: Vec<BTreeMap<usize, u64>>,
    /// Undirected simple projection used for degrees and k-cores.
    undirected: Vec<Vec<usize>>,
}

impl InteractionGraph {
    /// Builds the graph from a corpus: every non-root post adds one
    /// interaction from the parent's author to the replier, unless the two
    /// coincide.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut users = corpus.users();
        users.sort_unstable();
        let index: BTreeMap<UserId, usize> =
            users.iter().cloned().enumerate().map(|(i, u)| (u, i)).collect();
        let mut out = vec![BTreeMap::new(); users.len()];
        for post in corpus.posts() {
            let Some(parent_id) = &post.parent else { continue };
            let parent = corpus.get(parent_id).expect("corpus validated");
            if parent.author == post.author {
                continue;
            }
            let x = index[&parent.author];
            let y = index[&post.author];
            *out[x].entry(y).or_insert(0) += 1;
        }
        let mut graph = InteractionGraph {
            users,
            index,
            out,
            undirected: Vec::new(),
        };
        graph.build_undirected();
        graph
    }

    /// Builds a graph directly from weighted directed edges; used by tests
    /// and synthetic benchmarks.
    pub fn from_edges(edges: &[(UserId, UserId, u64)]) -> Self {
        let mut users: Vec<UserId> = edges
            .iter()
            .flat_map(|(x, y, _)| [x.clone(), y.clone()])
            .collect();
        users.sort_unstable();
        users.dedup();
        let index: BTreeMap<UserId, usize> =
            users.iter().cloned().enumerate().map(|(i, u)| (u, i)).collect();
        let mut out = vec![BTreeMap::new(); users.len()];
        for (x, y, w) in edges {
            if x == y {
                continue;
            }
            *out[index[x]].entry(index[y]).or_insert(0) += w;
        }
        let mut graph = InteractionGraph {
            users,
            index,
            out,
            undirected: Vec::new(),
        };
        graph.build_undirected();
        graph
    }

    fn build_undirected(&mut self) {
        let n = self.users.len();
        let mut sets: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); n];
        for (x, nbrs) in self.out.iter().enumerate() {
            for &y in nbrs.keys() {
                sets[x].insert(y);
                sets[y].insert(x);
            }
        }
        self.undirected = sets.into_iter().map(|s| s.into_iter().collect()).collect();
    }

    pub fn node_count(&self) -> usize {
        self.users.len()
    }

    /// Number of unique directed interactions (distinct ordered pairs).
    pub fn directed_edge_count(&self) -> usize {
        self.out.iter().map(|m| m.len()).sum()
    }

    /// Average degree: 2 * unique directed interactions / users.
    pub fn average_degree(&self) -> f64 {
        if self.users.is_empty() {
            return 0.0;
        }
        2.0 * self.directed_edge_count() as f64 / self.users.len() as f64
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn weight(&self, x: &UserId, y: &UserId) -> u64 {
        match (self.index.get(x), self.index.get(y)) {
            (Some(&xi), Some(&yi)) => self.out[xi].get(&yi).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Distinct users this user's posts were replied to by... i.e. the
    /// out-neighborhood size; the closest corpus-level analog of a
    /// follower count.
    pub fn out_degree(&self, user: &UserId) -> usize {
        self.index.get(user).map(|&i| self.out[i].len()).unwrap_or(0)
    }

    /// Neighbors in the undirected simple projection.
    pub fn undirected_neighbors(&self, user: &UserId) -> impl Iterator<Item = &UserId> + '_ {
        self.index
            .get(user)
            .map(|&i| self.undirected[i].as_slice())
            .unwrap_or(&[])
            .iter()
            .map(|&j| &self.users[j])
    }

    /// Directed weighted edges in deterministic (src, dst) order.
    pub fn edges(&self) -> impl Iterator<Item = (&UserId, &UserId, u64)> + '_ {
        self.out.iter().enumerate().flat_map(move |(x, nbrs)| {
            nbrs.iter().map(move |(&y, &w)| (&self.users[x], &self.users[y], w))
        })
    }

    fn undirected_degree(&self, i: usize) -> usize {
        self.undirected[i].len()
    }
}

/// Core numbers and the 3-core-wide bucketing used for profiles: bucket i
/// covers cores 3i-2 ..= 3i (bucket 0 holds isolated, core-0 nodes).
#[derive(Debug, Clone)]
pub struct CoreAssignment {
    core: BTreeMap<UserId, u32>,
}

impl CoreAssignment {
    pub fn core(&self, user: &UserId) -> u32 {
        self.core.get(user).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UserId, u32)> {
        self.core.iter().map(|(u, &c)| (u, c))
    }

    pub fn max_core(&self) -> u32 {
        self.core.values().copied().max().unwrap_or(0)
    }

    pub fn bucket_of(core: u32) -> u32 {
        core.div_ceil(3)
    }
}

/// Core numbers by the standard peeling order: repeatedly remove minimum-
/// degree nodes; core(v) is the largest k for which v survives into the
/// k-core. Runs on the undirected simple projection.
pub fn kcore_decompose(graph: &InteractionGraph) -> CoreAssignment {
    let n = graph.node_count();
    let mut degree: Vec<usize> = (0..n).map(|i| graph.undirected_degree(i)).collect();
    let max_degree = degree.iter().copied().max().unwrap_or(0);

    // Bucket queue over degrees (Matula–Beck peeling).
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); max_degree + 1];
    for (v, &d) in degree.iter().enumerate() {
        bins[d].push(v);
    }
    let mut removed = vec![false; n];
    let mut core = vec![0u32; n];
    let mut current_k = 0usize;
    let mut remaining = n;
    // Removing a minimum-degree node lowers the minimum by at most one, so
    // the bin scan never has to back up further than that.
    let mut scan_from = 0usize;
    while remaining > 0 {
        let d = (scan_from..bins.len())
            .find(|&d| !bins[d].is_empty())
            .expect("non-empty bins while nodes remain");
        let v = bins[d].pop().unwrap();
        if removed[v] || degree[v] != d {
            continue; // stale entry, the live one sits in a lower bin
        }
        current_k = current_k.max(d);
        core[v] = current_k as u32;
        removed[v] = true;
        remaining -= 1;
        for &u in &graph.undirected[v] {
            if !removed[u] {
                degree[u] -= 1;
                bins[degree[u]].push(u);
            }
        }
        scan_from = d.saturating_sub(1);
    }

    CoreAssignment {
        core: graph
            .users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), core[i]))
            .collect(),
    }
}

/// One row of the core-wise hatefulness profile: the user-bucket mix inside
/// one 3-core-wide band. Fractions sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreBucketProfile {
    pub bucket: u32,
    pub users: usize,
    pub frac_low: f64,
    pub frac_medium: f64,
    pub frac_high: f64,
}

/// Normalized hate-bucket fractions per core bucket, ordered by bucket
/// index. Empty core buckets produce no row. Users absent from the hate
/// map are skipped.
pub fn core_hate_profile(
    assignment: &CoreAssignment,
    hate: &BTreeMap<UserId, UserHateBucket>,
) -> Vec<CoreBucketProfile> {
    let mut counts: BTreeMap<u32, [usize; 3]> = BTreeMap::new();
    for (user, core) in assignment.iter() {
        let Some(bucket) = hate.get(user) else { continue };
        let row = counts.entry(CoreAssignment::bucket_of(core)).or_insert([0; 3]);
        match bucket {
            UserHateBucket::Low => row[0] += 1,
            UserHateBucket::Medium => row[1] += 1,
            UserHateBucket::High => row[2] += 1,
        }
    }
    counts
        .into_iter()
        .map(|(bucket, [low, medium, high])| {
            let total = (low + medium + high) as f64;
            CoreBucketProfile {
                bucket,
                users: low + medium + high,
                frac_low: low as f64 / total,
                frac_medium: medium as f64 / total,
                frac_high: high as f64 / total,
            }
        })
        .collect()
}
