//! Density-based topic clustering of post embeddings.
//!
//! The full HDBSCAN construction: per-point core distances at the
//! `min_samples`-th nearest neighbor (Euclidean, self excluded), a minimum
//! spanning tree over mutual-reachability distances, the single-linkage
//! dendrogram, its condensation at `min_cluster_size`, and
//! stability-maximizing flat extraction. Points in no stable cluster are
//! noise.

#![allow(clippy::needless_range_loop)] // index loops mirror the textbook kernels

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::echo::embed::EmbeddingMatrix;
use crate::ingest::PostId;

/// Lambda substitute for zero distances; keeps stability arithmetic finite
/// when the data contains coincident points.
const LAMBDA_CAP: f64 = 1e12;

/// A partition of the eligible posts into topics plus noise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicClustering {
    /// Disjoint post sets, ordered by their smallest post key.
    pub topics: Vec<BTreeSet<PostId>>,
    pub noise: BTreeSet<PostId>,
}

impl TopicClustering {
    /// Total posts across topics and noise.
    pub fn total_posts(&self) -> usize {
        self.topics.iter().map(|t| t.len()).sum::<usize>() + self.noise.len()
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Clusters the embedding rows into topics.
///
/// `min_cluster_size` must be at least 2. Fewer rows than
/// `min_cluster_size` yields an all-noise clustering; all-coincident rows
/// yield a single topic holding every point.
pub fn cluster_topics(
    matrix: &EmbeddingMatrix,
    min_cluster_size: usize,
    min_samples: usize,
) -> TopicClustering {
    assert!(min_cluster_size >= 2, "min_cluster_size must be >= 2");
    let n = matrix.rows();
    if n < min_cluster_size {
        return TopicClustering {
            topics: Vec::new(),
            noise: matrix.ids().iter().cloned().collect(),
        };
    }

    // Core distances: distance to the min_samples-th nearest other point
    // (clamped to the farthest point when the matrix is small).
    let k = min_samples.max(1).min(n - 1);
    let mut core = vec![0.0f64; n];
    let mut row_dists = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..n {
            row_dists[j] = if i == j {
                f64::INFINITY
            } else {
                euclidean(matrix.row(i), matrix.row(j))
            };
        }
        let mut sorted = row_dists.clone();
        sorted.sort_by(f64::total_cmp);
        core[i] = sorted[k - 1];
    }

    // Prim's MST over mutual-reachability distances.
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut best_from = vec![0usize; n];
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(n - 1);
    let mut current = 0usize;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_dist = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = euclidean(matrix.row(current), matrix.row(j))
                .max(core[current])
                .max(core[j]);
            if d < best[j] {
                best[j] = d;
                best_from[j] = current;
            }
            if best[j] < next_dist {
                next_dist = best[j];
                next = j;
            }
        }
        edges.push((best_from[next], next, next_dist));
        in_tree[next] = true;
        current = next;
    }

    if edges.iter().all(|&(_, _, d)| d == 0.0) {
        // Every point coincides: one topic with everything.
        return TopicClustering {
            topics: vec![matrix.ids().iter().cloned().collect()],
            noise: BTreeSet::new(),
        };
    }

    // Single-linkage dendrogram: merge MST edges ascending. Internal node
    // n + i is the i-th merge; the last one is the root.
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut parent_uf: Vec<usize> = (0..(2 * n - 1)).collect();
    let mut rep: Vec<usize> = (0..(2 * n - 1)).collect(); // set -> dendrogram node
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    struct SltNode {
        left: usize,
        right: usize,
        dist: f64,
        size: usize,
    }
    let mut slt: Vec<SltNode> = Vec::with_capacity(n - 1);
    let mut sizes: Vec<usize> = vec![1; 2 * n - 1];
    for &(a, b, dist) in &edges {
        let ra = find(&mut parent_uf, a);
        let rb = find(&mut parent_uf, b);
        let (na, nb) = (rep[ra], rep[rb]);
        let node = n + slt.len();
        let size = sizes[na] + sizes[nb];
        sizes[node] = size;
        slt.push(SltNode {
            left: na,
            right: nb,
            dist,
            size,
        });
        parent_uf[ra] = node;
        parent_uf[rb] = node;
        rep[node] = node;
    }
    let root = 2 * n - 2;

    // Condensed tree.
    struct Entry {
        parent: usize,
        child: usize, // < n: point, >= n: cluster
        lambda: f64,
        size: usize,
    }
    let lambda_of = |dist: f64| if dist > 0.0 { (1.0 / dist).min(LAMBDA_CAP) } else { LAMBDA_CAP };
    let collect_points = |start: usize| -> Vec<usize> {
        let mut points = Vec::new();
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node < n {
                points.push(node);
            } else {
                let s = &slt[node - n];
                queue.push_back(s.left);
                queue.push_back(s.right);
            }
        }
        points
    };

    let mut entries: Vec<Entry> = Vec::new();
    let mut next_label = n + 1;
    // (dendrogram node, condensed cluster label); nodes here are internal.
    let mut queue: VecDeque<(usize, usize)> = VecDeque::from([(root, n)]);
    while let Some((node, label)) = queue.pop_front() {
        let s = &slt[node - n];
        let lambda = lambda_of(s.dist);
        let (left, right) = (s.left, s.right);
        let size_of = |child: usize| if child < n { 1 } else { slt[child - n].size };
        let (ls, rs) = (size_of(left), size_of(right));
        let big_l = ls >= min_cluster_size;
        let big_r = rs >= min_cluster_size;
        match (big_l, big_r) {
            (true, true) => {
                for (child, size) in [(left, ls), (right, rs)] {
                    let new_label = next_label;
                    next_label += 1;
                    entries.push(Entry {
                        parent: label,
                        child: new_label,
                        lambda,
                        size,
                    });
                    queue.push_back((child, new_label));
                }
            }
            (true, false) => {
                for p in collect_points(right) {
                    entries.push(Entry { parent: label, child: p, lambda, size: 1 });
                }
                queue.push_back((left, label));
            }
            (false, true) => {
                for p in collect_points(left) {
                    entries.push(Entry { parent: label, child: p, lambda, size: 1 });
                }
                queue.push_back((right, label));
            }
            (false, false) => {
                for p in collect_points(left).into_iter().chain(collect_points(right)) {
                    entries.push(Entry { parent: label, child: p, lambda, size: 1 });
                }
            }
        }
    }

    // Stabilities.
    let mut birth: BTreeMap<usize, f64> = BTreeMap::new();
    birth.insert(n, 0.0);
    for e in &entries {
        if e.child >= n {
            birth.insert(e.child, e.lambda);
        }
    }
    let mut stability: BTreeMap<usize, f64> = BTreeMap::new();
    for e in &entries {
        let b = birth[&e.parent];
        *stability.entry(e.parent).or_insert(0.0) += (e.lambda - b) * e.size as f64;
    }
    for label in birth.keys() {
        stability.entry(*label).or_insert(0.0);
    }

    // Stability-maximizing selection, children before parents (labels were
    // assigned in BFS order, so descending label order works). The root
    // cluster is never selected.
    let mut cluster_children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut cluster_parent: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &entries {
        if e.child >= n {
            cluster_children.entry(e.parent).or_default().push(e.child);
            cluster_parent.insert(e.child, e.parent);
        }
    }
    let mut selected: BTreeMap<usize, bool> = BTreeMap::new();
    let mut propagated = stability.clone();
    for label in (n + 1..next_label).rev() {
        let subtree: f64 = cluster_children
            .get(&label)
            .map(|kids| kids.iter().map(|k| propagated[k]).sum())
            .unwrap_or(0.0);
        let own = stability[&label];
        if subtree > own {
            selected.insert(label, false);
            propagated.insert(label, subtree);
        } else {
            selected.insert(label, true);
            // Deselect every cluster below this one.
            let mut walk = VecDeque::from(
                cluster_children.get(&label).cloned().unwrap_or_default(),
            );
            while let Some(c) = walk.pop_front() {
                selected.insert(c, false);
                if let Some(kids) = cluster_children.get(&c) {
                    walk.extend(kids.iter().copied());
                }
            }
        }
    }

    // Label points via their condensed parent chain.
    let mut point_parent: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &entries {
        if e.child < n {
            point_parent.insert(e.child, e.parent);
        }
    }
    let mut assignment: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut noise: BTreeSet<PostId> = BTreeSet::new();
    for point in 0..n {
        let mut cursor = point_parent.get(&point).copied();
        let mut home = None;
        while let Some(cluster) = cursor {
            if selected.get(&cluster).copied().unwrap_or(false) {
                home = Some(cluster);
                break;
            }
            cursor = cluster_parent.get(&cluster).copied();
        }
        match home {
            Some(cluster) => assignment.entry(cluster).or_default().push(point),
            None => {
                noise.insert(matrix.ids()[point].clone());
            }
        }
    }

    let mut topics: Vec<BTreeSet<PostId>> = assignment
        .into_values()
        .map(|points| points.into_iter().map(|p| matrix.ids()[p].clone()).collect())
        .collect();
    topics.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));

    TopicClustering { topics, noise }
}
