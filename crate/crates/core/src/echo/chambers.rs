//! Echo chambers from topic co-participation.
//!
//! A candidate chamber is seeded by every combination of `tau` topics
//! whose participant sets intersect in at least two users (the default
//! `tau = 2` makes that every topic pair); the candidate's users are that
//! intersection. Candidates with identical user sets collapse into one,
//! pooling their topics. Candidates then merge greedily, highest user-set
//! Jaccard first, while any pair reaches the threshold.

use std::collections::{BTreeMap, BTreeSet};

use crate::echo::hdbscan::TopicClustering;
use crate::ingest::{Corpus, UserId};

/// A user group plus the topic clusters that induced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EchoChamber {
    pub users: BTreeSet<UserId>,
    pub topics: BTreeSet<usize>,
}

impl EchoChamber {
    fn key(&self) -> Option<&UserId> {
        self.users.iter().next()
    }
}

fn jaccard(a: &BTreeSet<UserId>, b: &BTreeSet<UserId>) -> f64 {
    let intersection = a.intersection(b).count();
    let union = a.len() + b.len() - intersection;
    if union == 0 {
        0.0
    } else {
        intersection as f64 / union as f64
    }
}

/// Users who authored at least one post of each topic, per topic.
pub fn topic_user_sets(clustering: &TopicClustering, corpus: &Corpus) -> Vec<BTreeSet<UserId>> {
    clustering
        .topics
        .iter()
        .map(|topic| {
            topic
                .iter()
                .filter_map(|post| corpus.get(post).map(|p| p.author.clone()))
                .collect()
        })
        .collect()
}

/// Candidate chambers from shared participation in `tau` common topics.
/// `tau` must be at least 2. Groups of fewer than two users are dropped;
/// candidates with identical user sets are collapsed, topics pooled.
pub fn candidate_chambers(
    clustering: &TopicClustering,
    corpus: &Corpus,
    tau: usize,
) -> Vec<EchoChamber> {
    assert!(tau >= 2, "tau must be >= 2");
    let users_per_topic = topic_user_sets(clustering, corpus);
    let t = users_per_topic.len();
    if t < tau {
        return Vec::new();
    }

    let mut by_users: BTreeMap<Vec<UserId>, BTreeSet<usize>> = BTreeMap::new();
    let mut combo: Vec<usize> = (0..tau).collect();
    loop {
        let mut intersection: BTreeSet<UserId> = users_per_topic[combo[0]].clone();
        for &topic in &combo[1..] {
            intersection = intersection
                .intersection(&users_per_topic[topic])
                .cloned()
                .collect();
            if intersection.len() < 2 {
                break;
            }
        }
        if intersection.len() >= 2 {
            by_users
                .entry(intersection.into_iter().collect())
                .or_default()
                .extend(combo.iter().copied());
        }

        // Next tau-combination in lexicographic order.
        let mut i = tau;
        loop {
            if i == 0 {
                return by_users
                    .into_iter()
                    .map(|(users, topics)| EchoChamber {
                        users: users.into_iter().collect(),
                        topics,
                    })
                    .collect();
            }
            i -= 1;
            if combo[i] != i + t - tau {
                combo[i] += 1;
                for j in (i + 1)..tau {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Greedy highest-Jaccard-first merging to a fixpoint. Ties break toward
/// the pair whose merged user list sorts first, so the result does not
/// depend on input order. The output is sorted by smallest member.
pub fn merge_chambers(mut chambers: Vec<EchoChamber>, threshold: f64) -> Vec<EchoChamber> {
    assert!(threshold > 0.0 && threshold <= 1.0, "threshold in (0, 1]");
    loop {
        let mut best: Option<(usize, usize, f64, Vec<UserId>)> = None;
        for i in 0..chambers.len() {
            for j in (i + 1)..chambers.len() {
                let sim = jaccard(&chambers[i].users, &chambers[j].users);
                if sim < threshold {
                    continue;
                }
                let candidate_key = || {
                    chambers[i]
                        .users
                        .union(&chambers[j].users)
                        .cloned()
                        .collect::<Vec<UserId>>()
                };
                match &best {
                    None => best = Some((i, j, sim, candidate_key())),
                    Some((_, _, s, key)) => {
                        if sim > *s || (sim == *s && candidate_key() < *key) {
                            best = Some((i, j, sim, candidate_key()));
                        }
                    }
                }
            }
        }
        let Some((i, j, _, _)) = best else { break };
        let second = chambers.swap_remove(j);
        let first = &mut chambers[i];
        first.users.extend(second.users);
        first.topics.extend(second.topics);
    }
    chambers.sort_by(|a, b| a.key().cmp(&b.key()));
    chambers
}
