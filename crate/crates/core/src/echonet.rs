//! The inter-chamber network: homogeneity scoring, shared-user edges, and
//! the disparity-filter backbone.
//!
//! Chambers become nodes of an undirected weighted graph; an edge carries
//! the shared-user count and exists only between chambers whose topic
//! sets are disjoint. The backbone keeps an edge when it is significant
//! from either endpoint under the disparity filter, with weights and
//! degrees frozen from the unfiltered network.

use std::collections::BTreeMap;

use crate::cascade::Cascade;
use crate::echo::EchoChamber;
use crate::error::{Error, Result};
use crate::ingest::UserId;
use crate::scoring::{PostHateBucket, UserHateBucket};

/// Normalized absolute imbalance between hateful (high or medium) and
/// non-hateful members: `| |E_H| - |E_N| | / |E|`. 1 means a single-class
/// chamber, 0 a perfectly mixed one. Members missing from the bucket map
/// count as non-hateful.
pub fn homogeneity(
    chamber: &EchoChamber,
    buckets: &BTreeMap<UserId, UserHateBucket>,
) -> Result<f64> {
    if chamber.users.is_empty() {
        return Err(Error::EmptyChamber);
    }
    let hateful = chamber
        .users
        .iter()
        .filter(|u| buckets.get(u).is_some_and(|b| b.is_hateful()))
        .count() as f64;
    let non = chamber.users.len() as f64 - hateful;
    Ok((hateful - non).abs() / chamber.users.len() as f64)
}

/// Fraction of cascade-root posts authored by chamber members whose post
/// bucket is medium or high. Absent when members authored no roots.
pub fn chamber_hate_fraction(
    chamber: &EchoChamber,
    cascades: &[Cascade],
    post_buckets: &BTreeMap<crate::ingest::PostId, PostHateBucket>,
) -> Option<f64> {
    let mut roots = 0usize;
    let mut hateful = 0usize;
    for cascade in cascades {
        if !chamber.users.contains(cascade.source_user()) {
            continue;
        }
        roots += 1;
        if post_buckets
            .get(cascade.root())
            .is_some_and(|b| b.is_hateful())
        {
            hateful += 1;
        }
    }
    if roots == 0 {
        None
    } else {
        Some(hateful as f64 / roots as f64)
    }
}

/// One undirected edge between chambers `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChamberEdge {
    pub a: usize,
    pub b: usize,
    /// Shared-user count.
    pub weight: u64,
}

/// Undirected weighted chamber graph. Node ids index the chamber list it
/// was built from.
#[derive(Debug, Clone)]
pub struct ChamberNetwork {
    pub node_count: usize,
    pub edges: Vec<ChamberEdge>,
    /// user-sharing pairs dropped because their topic sets overlapped.
    pub excluded_topic_overlap: usize,
}

/// Builds the chamber network: an edge per pair with at least one shared
/// user and disjoint topic sets (evaluated post-merge).
pub fn build_chamber_network(chambers: &[EchoChamber]) -> ChamberNetwork {
    let mut edges = Vec::new();
    let mut excluded = 0usize;
    for i in 0..chambers.len() {
        for j in (i + 1)..chambers.len() {
            let shared = chambers[i].users.intersection(&chambers[j].users).count() as u64;
            if shared == 0 {
                continue;
            }
            if chambers[i].topics.is_disjoint(&chambers[j].topics) {
                edges.push(ChamberEdge {
                    a: i,
                    b: j,
                    weight: shared,
                });
            } else {
                excluded += 1;
            }
        }
    }
    ChamberNetwork {
        node_count: chambers.len(),
        edges,
        excluded_topic_overlap: excluded,
    }
}

/// Disparity-filter significance of one edge from one endpoint:
/// `(1 - w/s)^(k-1)` for endpoint strength `s` and degree `k`. Smaller is
/// more significant.
pub fn disparity_significance(weight: f64, strength: f64, degree: usize) -> f64 {
    if strength <= 0.0 {
        return 1.0;
    }
    let p = (weight / strength).clamp(0.0, 1.0);
    (1.0 - p).powi(degree as i32 - 1)
}

/// Backbone retention flags aligned with `network.edges`: an edge stays
/// when `(1 - p)^(k-1) < alpha` from either endpoint, with weights and
/// degrees frozen from the input network. Degree-1 endpoints keep their
/// single edge.
pub fn backbone_flags(network: &ChamberNetwork, alpha: f64) -> Vec<bool> {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha in (0, 1)");
    let mut degree = vec![0usize; network.node_count];
    let mut strength = vec![0.0f64; network.node_count];
    for edge in &network.edges {
        degree[edge.a] += 1;
        degree[edge.b] += 1;
        strength[edge.a] += edge.weight as f64;
        strength[edge.b] += edge.weight as f64;
    }
    network
        .edges
        .iter()
        .map(|edge| {
            [edge.a, edge.b].iter().any(|&node| {
                degree[node] == 1
                    || disparity_significance(edge.weight as f64, strength[node], degree[node])
                        < alpha
            })
        })
        .collect()
}

/// The filtered network: nodes unchanged, only retained edges.
pub fn backbone(network: &ChamberNetwork, alpha: f64) -> ChamberNetwork {
    let keep = backbone_flags(network, alpha);
    ChamberNetwork {
        node_count: network.node_count,
        edges: network
            .edges
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(e, _)| e.clone())
            .collect(),
        excluded_topic_overlap: network.excluded_topic_overlap,
    }
}

/// Normalized 2-D histogram of `(x, y)` points over the unit square.
/// Values land in `bins x bins` cells (1.0 clamps into the last cell);
/// cell counts are divided by the point total, so occupied grids sum
/// to 1.
pub fn unit_square_histogram(points: &[(f64, f64)], bins: usize) -> Vec<Vec<f64>> {
    assert!(bins > 0);
    let mut grid = vec![vec![0.0f64; bins]; bins];
    if points.is_empty() {
        return grid;
    }
    let cell = |v: f64| ((v * bins as f64) as usize).min(bins - 1);
    for &(x, y) in points {
        grid[cell(y.clamp(0.0, 1.0))][cell(x.clamp(0.0, 1.0))] += 1.0;
    }
    let total = points.len() as f64;
    for row in &mut grid {
        for v in row {
            *v /= total;
        }
    }
    grid
}
