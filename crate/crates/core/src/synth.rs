//! Synthetic corpora with planted ground truth.
//!
//! The generator plants three kinds of structure so every pipeline stage
//! has an oracle:
//!
//! * **echo groups** — users are split into groups, each owning a few
//!   topics with disjoint vocabularies; members post inside their group's
//!   topics with probability `p_in / (p_in + p_out)` and stray otherwise.
//!   The remaining users are ungrouped lurkers tied to a single home
//!   topic, so at `p_out = 0` the candidate-chamber construction recovers
//!   the groups exactly.
//! * **hate hubs** — a `hate_hub_fraction` share of users is planted high-
//!   hate (an equal share medium). Hateful-post counts are adjusted to
//!   land inside each planted bucket's band, so re-deriving buckets
//!   through the bundled lexicons reproduces the plant. Hateful users are
//!   oversampled as repliers to hateful sources, which also pushes them
//!   into deeper cores.
//! * **volume boost** — cascades from high-hate sources draw their volume
//!   with the mean multiplied by `cascade_boost`; root-post hatefulness is
//!   drawn at a flat rate for everyone, so post hatefulness stays
//!   independent of volume.
//!
//! Randomness comes exclusively from [`crate::rng`] (PCG-64), making a
//! corpus a pure function of its config.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Corpus, Platform, Post, PostId, UserId};
use crate::rng::{self, Rng};
use crate::scoring::UserHateBucket;

const BASE_VOLUME_MEAN: f64 = 2.0;
const MAX_CASCADE_VOLUME: u64 = 400;
/// Share of users assigned to planted groups; the rest are lurkers.
const GROUPED_SHARE: f64 = 0.7;
/// Flat probability that any root post is hateful.
const ROOT_HATE_RATE: f64 = 0.15;
/// Baseline probability that a reply is hateful before quota adjustment.
const REPLY_HATE_RATE: f64 = 0.05;
/// Probability that a reply comes from the source's affinity pool (their
/// group, or the home-topic lurkers for ungrouped sources).
const AFFINITY_RATE: f64 = 0.6;
/// Probability that a reply to a high-hate source comes from the hateful
/// user pool.
const HATE_AFFINITY_RATE: f64 = 0.6;
/// Density of hateful posts among a planted high-hate user's output
/// (bounded below by the five-post bucket rule).
const HIGH_USER_HATE_DENSITY: f64 = 0.6;

/// Generator parameters. `posts_per_user` is the mean number of root
/// posts a user authors; replies accrue on top of that.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: usize,
    pub n_groups: usize,
    pub topics_per_group: usize,
    /// Relative odds of a member posting inside the group's topics.
    pub p_in: f64,
    /// Relative odds of a member posting in a foreign topic.
    pub p_out: f64,
    /// Share of users planted as high-hate (the same share is planted
    /// medium).
    pub hate_hub_fraction: f64,
    /// Volume-mean multiplier for cascades sourced by high-hate users.
    pub cascade_boost: f64,
    pub posts_per_user: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            n_users: 150,
            n_groups: 3,
            topics_per_group: 3,
            p_in: 0.9,
            p_out: 0.0,
            hate_hub_fraction: 0.15,
            cascade_boost: 3.0,
            posts_per_user: 3.0,
        }
    }
}

impl SynthConfig {
    pub fn topic_count(&self) -> usize {
        self.n_groups * self.topics_per_group
    }

    fn validate(&self) -> Result<()> {
        if self.topic_count() == 0 {
            return Err(Error::InfeasibleConfig(
                "n_groups * topics_per_group must be positive".into(),
            ));
        }
        if self.n_users < self.n_groups || self.n_users == 0 {
            return Err(Error::InfeasibleConfig(
                "need at least one user per group".into(),
            ));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InfeasibleConfig(format!("{name} outside [0, 1]")));
            }
        }
        if self.p_in <= 0.0 || self.p_out > self.p_in {
            return Err(Error::InfeasibleConfig(
                "group structure needs p_in > 0 and p_out <= p_in".into(),
            ));
        }
        if !(0.0..=0.5).contains(&self.hate_hub_fraction) {
            return Err(Error::InfeasibleConfig(
                "hate_hub_fraction outside [0, 0.5]".into(),
            ));
        }
        if self.cascade_boost < 1.0 {
            return Err(Error::InfeasibleConfig("cascade_boost below 1".into()));
        }
        if self.posts_per_user <= 0.0 {
            return Err(Error::InfeasibleConfig(
                "posts_per_user must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The three bundled lexicons matching the generator's hate tokens:
    /// the first sees both strong and weak terms, the other two only
    /// strong ones. A strong term therefore gets three votes (high), a
    /// weak term one (medium).
    pub fn lexicons(&self) -> Vec<(String, BTreeSet<String>)> {
        let topics = self.topic_count();
        let mut strong = BTreeSet::new();
        let mut weak = BTreeSet::new();
        for t in 0..topics {
            for i in 0..6 {
                strong.insert(format!("t{t}slur{i}"));
                weak.insert(format!("t{t}jab{i}"));
            }
        }
        let broad: BTreeSet<String> = strong.union(&weak).cloned().collect();
        vec![
            ("broad".to_string(), broad),
            ("strict_a".to_string(), strong.clone()),
            ("strict_b".to_string(), strong),
        ]
    }
}

/// What the generator planted, for oracle-based tests.
#[derive(Debug, Clone, Serialize)]
pub struct GroundTruth {
    /// Planted group memberships (lurkers appear in none).
    pub groups: Vec<BTreeSet<UserId>>,
    pub user_buckets: BTreeMap<UserId, UserHateBucket>,
    /// Planted topic of every post.
    pub post_topics: BTreeMap<PostId, usize>,
    /// Home topic of each ungrouped lurker.
    pub lurker_homes: BTreeMap<UserId, usize>,
}

#[derive(Clone, Copy, PartialEq)]
enum HateTier {
    Strong,
    Weak,
}

struct Draft {
    author: usize,
    parent: Option<usize>,
    ts: i64,
    topic: usize,
    hate: Option<HateTier>,
    is_root: bool,
}

struct World {
    cfg: SynthConfig,
    group_of: Vec<Option<usize>>,
    home_of: Vec<Option<usize>>,
    bucket: Vec<UserHateBucket>,
    group_members: Vec<Vec<usize>>,
    /// Per topic: its home community — the owning group's members plus the
    /// lurkers homed there. Replies are drawn here unless they stray.
    home_pool: Vec<Vec<usize>>,
    home_weights: Vec<Vec<f64>>,
    hateful_home: Vec<Vec<usize>>,
    /// Per group: members of the other groups (strays at p_out > 0).
    foreign_pool: Vec<Vec<usize>>,
    foreign_weights: Vec<Vec<f64>>,
    hateful_foreign: Vec<Vec<usize>>,
    lurkers_by_home: Vec<Vec<usize>>,
}

fn activity_weight(bucket: UserHateBucket) -> f64 {
    match bucket {
        UserHateBucket::High => 4.0,
        UserHateBucket::Medium => 2.0,
        UserHateBucket::Low => 1.0,
    }
}

fn build_world(cfg: &SynthConfig, rng: &mut Rng) -> World {
    let n = cfg.n_users;
    let topics = cfg.topic_count();
    let grouped = ((n as f64) * GROUPED_SHARE).round() as usize;
    let grouped = grouped.clamp(cfg.n_groups, n);

    let mut group_of = vec![None; n];
    let mut home_of = vec![None; n];
    let mut group_members = vec![Vec::new(); cfg.n_groups];
    let mut lurkers_by_home = vec![Vec::new(); topics];
    for u in 0..n {
        if u < grouped {
            let g = u % cfg.n_groups;
            group_of[u] = Some(g);
            group_members[g].push(u);
        } else {
            let home = rng::below(rng, topics);
            home_of[u] = Some(home);
            lurkers_by_home[home].push(u);
        }
    }

    let bucket: Vec<UserHateBucket> = (0..n)
        .map(|_| {
            let draw = rng::uniform(rng);
            if draw < cfg.hate_hub_fraction {
                UserHateBucket::High
            } else if draw < 2.0 * cfg.hate_hub_fraction {
                UserHateBucket::Medium
            } else {
                UserHateBucket::Low
            }
        })
        .collect();

    let mut home_pool = vec![Vec::new(); topics];
    let mut home_weights = vec![Vec::new(); topics];
    let mut hateful_home = vec![Vec::new(); topics];
    for t in 0..topics {
        let owner = t / cfg.topics_per_group;
        for u in 0..n {
            let at_home = match (group_of[u], home_of[u]) {
                (Some(g), _) => g == owner,
                (None, Some(home)) => home == t,
                (None, None) => unreachable!("every user is grouped or homed"),
            };
            if at_home {
                home_pool[t].push(u);
                home_weights[t].push(activity_weight(bucket[u]));
                if bucket[u].is_hateful() {
                    hateful_home[t].push(u);
                }
            }
        }
    }

    let mut foreign_pool = vec![Vec::new(); cfg.n_groups];
    let mut foreign_weights = vec![Vec::new(); cfg.n_groups];
    let mut hateful_foreign = vec![Vec::new(); cfg.n_groups];
    for g in 0..cfg.n_groups {
        for u in 0..n {
            match group_of[u] {
                Some(other) if other != g => {
                    foreign_pool[g].push(u);
                    foreign_weights[g].push(activity_weight(bucket[u]));
                    if bucket[u].is_hateful() {
                        hateful_foreign[g].push(u);
                    }
                }
                _ => {}
            }
        }
    }

    World {
        cfg: cfg.clone(),
        group_of,
        home_of,
        bucket,
        group_members,
        home_pool,
        home_weights,
        hateful_home,
        foreign_pool,
        foreign_weights,
        hateful_foreign,
        lurkers_by_home,
    }
}

impl World {
    fn topics_of_group(&self, g: usize) -> std::ops::Range<usize> {
        g * self.cfg.topics_per_group..(g + 1) * self.cfg.topics_per_group
    }

    /// Topic for an authored root: own-group with odds p_in against
    /// p_out, the single home topic for lurkers.
    fn pick_topic(&self, user: usize, rng: &mut Rng) -> usize {
        match (self.group_of[user], self.home_of[user]) {
            (Some(g), _) => {
                let own = self.topics_of_group(g);
                let total = self.cfg.p_in + self.cfg.p_out;
                let stay =
                    self.cfg.p_out == 0.0 || rng::uniform(rng) < self.cfg.p_in / total;
                if stay || self.cfg.topic_count() == self.cfg.topics_per_group {
                    own.start + rng::below(rng, self.cfg.topics_per_group)
                } else {
                    // A foreign topic, uniform over the other groups'.
                    let foreign = self.cfg.topic_count() - self.cfg.topics_per_group;
                    let mut idx = rng::below(rng, foreign);
                    if idx >= own.start {
                        idx += self.cfg.topics_per_group;
                    }
                    idx
                }
            }
            (None, Some(home)) => home,
            _ => unreachable!(),
        }
    }

    /// Topics the quota pass may attach a user's extra posts to.
    fn allowed_topics(&self, user: usize) -> Vec<usize> {
        match (self.group_of[user], self.home_of[user]) {
            (Some(g), _) => self.topics_of_group(g).collect(),
            (None, Some(home)) => vec![home],
            _ => unreachable!(),
        }
    }

    /// One draw deciding whether a reply strays outside the topic's home
    /// community, with the same p_in : p_out odds as authored posts.
    fn strays(&self, rng: &mut Rng) -> bool {
        self.cfg.p_out > 0.0
            && rng::uniform(rng) >= self.cfg.p_in / (self.cfg.p_in + self.cfg.p_out)
    }

    fn pick_replier(&self, source: usize, topic: usize, rng: &mut Rng) -> usize {
        let owner = topic / self.cfg.topics_per_group;
        if self.bucket[source] == UserHateBucket::High && rng::chance(rng, HATE_AFFINITY_RATE) {
            let stray = self.strays(rng);
            let pool = if stray && !self.hateful_foreign[owner].is_empty() {
                &self.hateful_foreign[owner]
            } else {
                &self.hateful_home[topic]
            };
            if !pool.is_empty() {
                return pool[rng::below(rng, pool.len())];
            }
        }
        if rng::chance(rng, AFFINITY_RATE) {
            let pool: &[usize] = match (self.group_of[source], self.home_of[source]) {
                (Some(g), _) => &self.group_members[g],
                (None, Some(home)) => &self.lurkers_by_home[home],
                _ => unreachable!(),
            };
            if !pool.is_empty() {
                return pool[rng::below(rng, pool.len())];
            }
        }
        if self.strays(rng) && !self.foreign_pool[owner].is_empty() {
            let pool = &self.foreign_pool[owner];
            return pool[rng::weighted(rng, &self.foreign_weights[owner])];
        }
        let pool = &self.home_pool[topic];
        pool[rng::weighted(rng, &self.home_weights[topic])]
    }
}

fn draw_tier(rng: &mut Rng) -> HateTier {
    if rng::chance(rng, 0.5) {
        HateTier::Strong
    } else {
        HateTier::Weak
    }
}

/// Generates a corpus plus its ground truth. Deterministic in the seed.
pub fn generate(config: &SynthConfig) -> Result<(Corpus, GroundTruth)> {
    config.validate()?;
    let mut rng = rng::seeded(config.seed);
    let world = build_world(config, &mut rng);
    let n_users = config.n_users;

    let mut drafts: Vec<Draft> = Vec::new();
    // node post-indices per cascade, first entry the root
    let mut cascades: Vec<Vec<usize>> = Vec::new();
    let mut cascades_by_topic: Vec<Vec<usize>> = vec![Vec::new(); config.topic_count()];
    let mut ts_counter: i64 = 0;

    // Roots and their cascades, user by user. Every user is capped at one
    // hateful root — the cap is uniform across buckets, so root
    // hatefulness stays independent of the planted user bucket (the quota
    // pass below then never has to unflip a root).
    for user in 0..n_users {
        let n_roots = rng::poisson(&mut rng, config.posts_per_user);
        let mut has_hateful_root = false;
        for _ in 0..n_roots {
            let topic = world.pick_topic(user, &mut rng);
            ts_counter += 10;
            let root_index = drafts.len();
            let hateful = rng::chance(&mut rng, ROOT_HATE_RATE) && !has_hateful_root;
            has_hateful_root |= hateful;
            drafts.push(Draft {
                author: user,
                parent: None,
                ts: ts_counter,
                topic,
                hate: hateful.then(|| draw_tier(&mut rng)),
                is_root: true,
            });
            let cascade_index = cascades.len();
            let mut nodes = vec![root_index];

            let mean = if world.bucket[user] == UserHateBucket::High {
                BASE_VOLUME_MEAN * config.cascade_boost
            } else {
                BASE_VOLUME_MEAN
            };
            let volume = rng::geometric(&mut rng, mean).min(MAX_CASCADE_VOLUME);
            for _ in 0..volume {
                let parent_node = nodes[rng::below(&mut rng, nodes.len())];
                let replier = world.pick_replier(user, topic, &mut rng);
                let reply_index = drafts.len();
                drafts.push(Draft {
                    author: replier,
                    parent: Some(parent_node),
                    ts: drafts[parent_node].ts + 1,
                    topic,
                    hate: rng::chance(&mut rng, REPLY_HATE_RATE).then(|| draw_tier(&mut rng)),
                    is_root: false,
                });
                nodes.push(reply_index);
            }
            cascades.push(nodes);
            cascades_by_topic[topic].push(cascade_index);
        }
    }

    // Quota pass: force each user's hateful-post count into the planted
    // bucket's band. Replies are preferred for both flipping and
    // unflipping so root hatefulness keeps its flat rate.
    for user in 0..n_users {
        let mine: Vec<usize> = (0..drafts.len())
            .filter(|&i| drafts[i].author == user)
            .collect();
        let (min_hateful, max_hateful) = match world.bucket[user] {
            UserHateBucket::High => {
                let dense = (mine.len() as f64 * HIGH_USER_HATE_DENSITY).ceil() as usize;
                (dense.max(5), usize::MAX)
            }
            UserHateBucket::Medium => (2, 4),
            UserHateBucket::Low => (0, 1),
        };
        let mut hateful = mine.iter().filter(|&&i| drafts[i].hate.is_some()).count();

        if hateful > max_hateful {
            for &i in mine.iter().rev() {
                if hateful <= max_hateful {
                    break;
                }
                if drafts[i].hate.is_some() && !drafts[i].is_root {
                    drafts[i].hate = None;
                    hateful -= 1;
                }
            }
            for &i in mine.iter().rev() {
                if hateful <= max_hateful {
                    break;
                }
                if drafts[i].hate.is_some() {
                    drafts[i].hate = None;
                    hateful -= 1;
                }
            }
        }

        if hateful < min_hateful {
            for &i in &mine {
                if hateful >= min_hateful {
                    break;
                }
                if drafts[i].hate.is_none() && !drafts[i].is_root {
                    drafts[i].hate = Some(draw_tier(&mut rng));
                    hateful += 1;
                }
            }
            // Not enough replies to flip: write new ones into cascades of
            // the user's own topics (or fresh roots if none exist yet).
            while hateful < min_hateful {
                let allowed = world.allowed_topics(user);
                let candidates: Vec<usize> = allowed
                    .iter()
                    .flat_map(|&t| cascades_by_topic[t].iter().copied())
                    .collect();
                let tier = Some(draw_tier(&mut rng));
                if candidates.is_empty() {
                    let topic = allowed[rng::below(&mut rng, allowed.len())];
                    ts_counter += 10;
                    let root_index = drafts.len();
                    drafts.push(Draft {
                        author: user,
                        parent: None,
                        ts: ts_counter,
                        topic,
                        hate: tier,
                        is_root: true,
                    });
                    cascades.push(vec![root_index]);
                    cascades_by_topic[topic].push(cascades.len() - 1);
                } else {
                    let cascade = candidates[rng::below(&mut rng, candidates.len())];
                    let parent_node =
                        cascades[cascade][rng::below(&mut rng, cascades[cascade].len())];
                    let index = drafts.len();
                    drafts.push(Draft {
                        author: user,
                        parent: Some(parent_node),
                        ts: drafts[parent_node].ts + 1,
                        topic: drafts[parent_node].topic,
                        hate: tier,
                        is_root: false,
                    });
                    cascades[cascade].push(index);
                }
                hateful += 1;
            }
        }
    }

    // Texts: anchors pin the topic, a few vocabulary words vary, hate
    // tokens carry the planted tier.
    let user_name = |u: usize| format!("u{u:05}");
    let post_name = |i: usize| format!("p{i:06}");
    let mut posts = Vec::with_capacity(drafts.len());
    for (i, draft) in drafts.iter().enumerate() {
        let t = draft.topic;
        // Heavy anchor mass keeps each topic one dense cloud even when a
        // hate token shifts the vector a little; a wide word vocabulary
        // with several draws per post avoids discrete sub-clumps.
        let mut words = vec![
            format!("t{t}anchor0"),
            format!("t{t}anchor0"),
            format!("t{t}anchor0"),
            format!("t{t}anchor1"),
            format!("t{t}anchor1"),
            format!("t{t}anchor2"),
        ];
        let extra = 5 + rng::below(&mut rng, 4);
        for _ in 0..extra {
            words.push(format!("t{t}word{}", rng::below(&mut rng, 30)));
        }
        match draft.hate {
            Some(HateTier::Strong) => {
                words.push(format!("t{t}slur{}", rng::below(&mut rng, 6)))
            }
            Some(HateTier::Weak) => words.push(format!("t{t}jab{}", rng::below(&mut rng, 6))),
            None => {}
        }
        posts.push(Post {
            id: PostId(post_name(i)),
            author: UserId(user_name(draft.author)),
            parent: draft.parent.map(|p| PostId(post_name(p))),
            root: PostId(post_name(i)), // re-derived on corpus construction
            ts: draft.ts,
            text: words.join(" "),
            embedding: None,
            topic: Some(format!("topic{:02}", t)),
        });
    }

    let corpus = Corpus::from_posts(posts, Platform::RedditLike)?;
    let truth = GroundTruth {
        groups: world
            .group_members
            .iter()
            .map(|members| members.iter().map(|&u| UserId(user_name(u))).collect())
            .collect(),
        user_buckets: (0..n_users)
            .map(|u| (UserId(user_name(u)), world.bucket[u]))
            .collect(),
        post_topics: drafts
            .iter()
            .enumerate()
            .map(|(i, d)| (PostId(post_name(i)), d.topic))
            .collect(),
        lurker_homes: (0..n_users)
            .filter_map(|u| world.home_of[u].map(|h| (UserId(user_name(u)), h)))
            .collect(),
    };
    Ok((corpus, truth))
}
