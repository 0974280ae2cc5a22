//! Stage orchestration: each stage reads the corpus plus prior-stage
//! artifacts from the output directory and writes its own files there.
//! Stage outputs are pure functions of (input, config), so reruns are
//! byte-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use echograph_core::cascade::{categorize, extract_cascades, Cascade};
use echograph_core::echo::{
    self, build_embeddings, embeddings_from_sidecar, EchoChamber, EmbeddingMatrix,
};
use echograph_core::echonet::{
    backbone_flags, build_chamber_network, chamber_hate_fraction, homogeneity,
    unit_square_histogram,
};
use echograph_core::ingest::{load_corpus, Corpus, PostId, UserId};
use echograph_core::scoring::{
    bucket_corpus, load_annotations, validate_annotations, HateScorer, LabelFileScorer,
    LexiconScorer, PostHateBucket, UserHateBucket,
};
use echograph_core::socialgraph::{core_hate_profile, kcore_decompose, CoreAssignment, InteractionGraph};
use echograph_core::stats::{self, StatReport};
use echograph_core::synth::{self, SynthConfig};

use crate::config::RunConfig;
use crate::outputs::{fmt_f64, fmt_opt_f64, write_json, CsvReport, Meta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[clap(rename_all = "kebab-case")]
pub enum Stage {
    IngestCheck,
    Score,
    Echo,
    Cascades,
    Cores,
    Network,
    Stats,
    Report,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::IngestCheck => "ingest-check",
            Stage::Score => "score",
            Stage::Echo => "echo",
            Stage::Cascades => "cascades",
            Stage::Cores => "cores",
            Stage::Network => "network",
            Stage::Stats => "stats",
            Stage::Report => "report",
        }
    }
}

/// Full-pipeline order: echo runs before cascades so cascade metrics can
/// carry chamber membership.
pub const FULL_ORDER: [Stage; 8] = [
    Stage::IngestCheck,
    Stage::Score,
    Stage::Echo,
    Stage::Cascades,
    Stage::Cores,
    Stage::Network,
    Stage::Stats,
    Stage::Report,
];

pub struct Pipeline {
    pub config: RunConfig,
    pub out: PathBuf,
    /// Optional filter for the stats stage: emit only `ks_<name>`.
    pub ks_filter: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct BucketsData {
    post_buckets: BTreeMap<PostId, PostHateBucket>,
    user_buckets: BTreeMap<UserId, UserHateBucket>,
    post_composition: BTreeMap<String, f64>,
    user_composition: BTreeMap<String, f64>,
    scorers: Vec<String>,
    missing_labels: BTreeMap<String, u64>,
}

#[derive(Serialize, Deserialize)]
struct ChamberRecord {
    chamber_id: usize,
    users: Vec<UserId>,
    topics: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct ChambersData {
    chambers: Vec<ChamberRecord>,
    topic_sizes: Vec<usize>,
    noise_posts: usize,
}

#[derive(Deserialize)]
struct Wrapper<T> {
    data: T,
}

impl Pipeline {
    pub fn new(config: RunConfig, out: PathBuf) -> Self {
        Pipeline {
            config,
            out,
            ks_filter: None,
        }
    }

    pub fn run_all(&self) -> anyhow::Result<()> {
        for stage in FULL_ORDER {
            self.run(stage)?;
        }
        Ok(())
    }

    pub fn run(&self, stage: Stage) -> anyhow::Result<()> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating output dir {}", self.out.display()))?;
        let result = match stage {
            Stage::IngestCheck => self.stage_ingest(),
            Stage::Score => self.stage_score(),
            Stage::Echo => self.stage_echo(),
            Stage::Cascades => self.stage_cascades(),
            Stage::Cores => self.stage_cores(),
            Stage::Network => self.stage_network(),
            Stage::Stats => self.stage_stats(),
            Stage::Report => self.stage_report(),
        };
        match result {
            Ok(()) => {
                eprintln!("[{}] ok", stage.name());
                Ok(())
            }
            Err(e) => Err(e.context(format!("stage {}", stage.name()))),
        }
    }

    fn meta(&self, stage: &str) -> anyhow::Result<Meta> {
        Meta::new(stage, &self.config)
    }

    fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn corpus(&self) -> anyhow::Result<Corpus> {
        let corpus = load_corpus(&self.config.input, self.config.platform)?;
        if corpus.is_empty() {
            bail!("corpus {} contains no posts", self.config.input.display());
        }
        Ok(corpus)
    }

    fn scorers(&self) -> anyhow::Result<Vec<Box<dyn HateScorer>>> {
        let mut scorers: Vec<Box<dyn HateScorer>> = Vec::new();
        for path in &self.config.lexicons {
            scorers.push(Box::new(LexiconScorer::from_path(path)?));
        }
        if let Some(labels) = &self.config.labels {
            for classifier in LabelFileScorer::classifiers_in_file(labels)? {
                scorers.push(Box::new(LabelFileScorer::from_path(labels, &classifier)?));
            }
        }
        if scorers.is_empty() {
            bail!("no scorers configured: provide lexicons and/or a label file");
        }
        Ok(scorers)
    }

    fn artifact<T: serde::de::DeserializeOwned>(&self, file: &str) -> anyhow::Result<T> {
        let path = self.path(file);
        let raw = fs::read_to_string(&path).with_context(|| {
            format!(
                "missing prior-stage artifact {} (run the producing stage first)",
                path.display()
            )
        })?;
        let wrapper: Wrapper<T> =
            serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?;
        Ok(wrapper.data)
    }

    fn load_buckets(&self) -> anyhow::Result<BucketsData> {
        self.artifact("buckets.json")
    }

    fn load_chambers(&self) -> anyhow::Result<Vec<EchoChamber>> {
        let data: ChambersData = self.artifact("chambers.json")?;
        Ok(data
            .chambers
            .into_iter()
            .map(|c| EchoChamber {
                users: c.users.into_iter().collect(),
                topics: c.topics.into_iter().collect(),
            })
            .collect())
    }

    fn chamber_members(&self) -> anyhow::Result<Option<BTreeSet<UserId>>> {
        if !self.path("chambers.json").exists() {
            return Ok(None);
        }
        let chambers = self.load_chambers()?;
        Ok(Some(chambers.into_iter().flat_map(|c| c.users).collect()))
    }

    // ---------------------------------------------------------------- ingest

    fn stage_ingest(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        let graph = InteractionGraph::from_corpus(&corpus);
        let cascades = corpus.posts().iter().filter(|p| p.is_root()).count();
        #[derive(Serialize)]
        struct Summary {
            posts: usize,
            users: usize,
            placeholders: usize,
            cascades: usize,
            unique_interactions: usize,
            average_degree: f64,
        }
        let summary = Summary {
            posts: corpus.len(),
            users: corpus.users().len(),
            placeholders: corpus.placeholder_count(),
            cascades,
            unique_interactions: graph.directed_edge_count(),
            average_degree: graph.average_degree(),
        };
        write_json(&self.path("summary.json"), &self.meta("ingest-check")?, &summary)
    }

    // ----------------------------------------------------------------- score

    fn stage_score(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        let scorers = self.scorers()?;
        let (post_buckets, user_buckets) = bucket_corpus(&corpus, &scorers);

        let composition = |counts: BTreeMap<String, usize>, total: usize| {
            counts
                .into_iter()
                .map(|(k, v)| (k, v as f64 / total as f64))
                .collect::<BTreeMap<String, f64>>()
        };
        let mut post_counts: BTreeMap<String, usize> = BTreeMap::new();
        for bucket in post_buckets.values() {
            *post_counts.entry(bucket.as_str().to_string()).or_insert(0) += 1;
        }
        let mut user_counts: BTreeMap<String, usize> = BTreeMap::new();
        for bucket in user_buckets.values() {
            *user_counts.entry(bucket.as_str().to_string()).or_insert(0) += 1;
        }

        let mut missing = BTreeMap::new();
        for scorer in &scorers {
            if let Some(count) = scorer.missing_count() {
                missing.insert(scorer.name().to_string(), count);
            }
        }

        let data = BucketsData {
            post_composition: composition(post_counts, post_buckets.len().max(1)),
            user_composition: composition(user_counts, user_buckets.len().max(1)),
            scorers: scorers.iter().map(|s| s.name().to_string()).collect(),
            missing_labels: missing,
            post_buckets,
            user_buckets,
        };
        write_json(&self.path("buckets.json"), &self.meta("score")?, &data)?;

        if let Some(annotations) = &self.config.annotations {
            let annotations = load_annotations(annotations)?;
            let reports = validate_annotations(&data.post_buckets, &annotations)?;
            write_json(
                &self.path("annotation_validation.json"),
                &self.meta("score")?,
                &reports,
            )?;
        }
        Ok(())
    }

    // ------------------------------------------------------------------ echo

    fn embedding_matrix(&self, corpus: &Corpus) -> anyhow::Result<EmbeddingMatrix> {
        match &self.config.embeddings {
            Some(path) => Ok(embeddings_from_sidecar(corpus, path)?),
            None => Ok(build_embeddings(corpus)?),
        }
    }

    fn stage_echo(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        let matrix = self.embedding_matrix(&corpus)?;
        let (clustering, chambers) =
            echo::detect_from_embeddings(&corpus, &matrix, &self.config.echo)?;
        let data = ChambersData {
            chambers: chambers
                .iter()
                .enumerate()
                .map(|(i, c)| ChamberRecord {
                    chamber_id: i,
                    users: c.users.iter().cloned().collect(),
                    topics: c.topics.iter().copied().collect(),
                })
                .collect(),
            topic_sizes: clustering.topics.iter().map(|t| t.len()).collect(),
            noise_posts: clustering.noise.len(),
        };
        write_json(&self.path("chambers.json"), &self.meta("echo")?, &data)
    }

    // -------------------------------------------------------------- cascades

    fn stage_cascades(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        let buckets = self.load_buckets()?;
        let members = self.chamber_members()?;
        let cascades = extract_cascades(&corpus);
        let meta = self.meta("cascades")?;

        let mut csv = CsvReport::create(
            &self.path("cascade_metrics.csv"),
            &meta,
            &[
                "root_id",
                "source_user",
                "volume",
                "width",
                "height",
                "src_post_bucket",
                "src_user_bucket",
                "category",
                "hateful_participation",
                "hateful_interaction_fraction",
                "in_echo_chamber",
            ],
        )?;
        for cascade in &cascades {
            let post_bucket = buckets.post_buckets[cascade.root()];
            let user_bucket = buckets.user_buckets[cascade.source_user()];
            let membership = members
                .as_ref()
                .map(|m| m.contains(cascade.source_user()).to_string())
                .unwrap_or_default();
            csv.row([
                cascade.root().as_str().to_string(),
                cascade.source_user().as_str().to_string(),
                cascade.volume().to_string(),
                cascade.width().to_string(),
                cascade.height().to_string(),
                post_bucket.as_str().to_string(),
                user_bucket.as_str().to_string(),
                categorize(user_bucket, post_bucket).as_str().to_string(),
                fmt_opt_f64(cascade.hateful_participation(&buckets.user_buckets)),
                fmt_opt_f64(cascade.hateful_interaction_fraction(&buckets.post_buckets)),
                membership,
            ])?;
        }
        csv.finish()?;

        self.density_exports(&corpus, &buckets, members.as_ref(), &cascades)?;
        self.participation_export(&buckets, members.as_ref(), &cascades)?;
        self.topic_exports(&corpus, &buckets, &cascades)?;
        Ok(())
    }

    /// Gaussian KDE rows over an automatic grid; empty when the sample is
    /// too small or degenerate.
    fn kde_rows(&self, sample: &[f64]) -> Vec<(f64, f64)> {
        let Some(bandwidth) = stats::silverman_bandwidth(sample) else {
            return Vec::new();
        };
        let lo = sample.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * bandwidth;
        let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * bandwidth;
        let n = self.config.density_grid.max(2);
        let grid: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let (density, _) = stats::kde(sample, &grid).expect("guarded by bandwidth check");
        grid.into_iter().zip(density).collect()
    }

    fn write_density_file(
        &self,
        file: &str,
        axis: &str,
        groups: &[(String, Vec<f64>)],
    ) -> anyhow::Result<()> {
        let meta = self.meta("cascades")?;
        let mut csv = CsvReport::create(&self.path(file), &meta, &["group", axis, "density"])?;
        for (group, sample) in groups {
            for (x, density) in self.kde_rows(sample) {
                csv.row([group.clone(), fmt_f64(x), fmt_f64(density)])?;
            }
        }
        csv.finish()
    }

    fn density_exports(
        &self,
        _corpus: &Corpus,
        buckets: &BucketsData,
        members: Option<&BTreeSet<UserId>>,
        cascades: &[Cascade],
    ) -> anyhow::Result<()> {
        // Volumes on log10 for volume >= 1; width and height raw.
        let log_volume = |c: &Cascade| {
            let v = c.volume();
            (v >= 1).then(|| (v as f64).log10())
        };

        let by_post = |bucket: PostHateBucket| -> Vec<f64> {
            cascades
                .iter()
                .filter(|c| buckets.post_buckets[c.root()] == bucket)
                .filter_map(log_volume)
                .collect()
        };
        let by_user = |bucket: UserHateBucket| -> Vec<f64> {
            cascades
                .iter()
                .filter(|c| buckets.user_buckets[c.source_user()] == bucket)
                .filter_map(log_volume)
                .collect()
        };
        self.write_density_file(
            "density_volume_by_post_bucket.csv",
            "log10_volume",
            &[
                ("non".to_string(), by_post(PostHateBucket::Non)),
                ("medium".to_string(), by_post(PostHateBucket::Medium)),
                ("high".to_string(), by_post(PostHateBucket::High)),
            ],
        )?;
        self.write_density_file(
            "density_volume_by_user_bucket.csv",
            "log10_volume",
            &[
                ("low".to_string(), by_user(UserHateBucket::Low)),
                ("medium".to_string(), by_user(UserHateBucket::Medium)),
                ("high".to_string(), by_user(UserHateBucket::High)),
            ],
        )?;

        let by_category: Vec<(String, Vec<f64>)> = ["1", "2", "3", "4"]
            .iter()
            .map(|cat| {
                let sample = cascades
                    .iter()
                    .filter(|c| {
                        let user = buckets.user_buckets[c.source_user()];
                        let post = buckets.post_buckets[c.root()];
                        categorize(user, post).as_str() == *cat
                    })
                    .filter_map(log_volume)
                    .collect();
                (format!("category_{cat}"), sample)
            })
            .collect();
        self.write_density_file("density_volume_by_category.csv", "log10_volume", &by_category)?;

        for (file, extract) in [
            (
                "density_width_by_user_bucket.csv",
                Box::new(|c: &Cascade| c.width() as f64) as Box<dyn Fn(&Cascade) -> f64>,
            ),
            (
                "density_height_by_user_bucket.csv",
                Box::new(|c: &Cascade| c.height() as f64),
            ),
        ] {
            let groups: Vec<(String, Vec<f64>)> =
                [UserHateBucket::Low, UserHateBucket::Medium, UserHateBucket::High]
                    .iter()
                    .map(|bucket| {
                        let sample = cascades
                            .iter()
                            .filter(|c| buckets.user_buckets[c.source_user()] == *bucket)
                            .map(&extract)
                            .collect();
                        (bucket.as_str().to_string(), sample)
                    })
                    .collect();
            self.write_density_file(file, "value", &groups)?;
        }
        for (file, extract) in [
            (
                "density_width_by_post_bucket.csv",
                Box::new(|c: &Cascade| c.width() as f64) as Box<dyn Fn(&Cascade) -> f64>,
            ),
            (
                "density_height_by_post_bucket.csv",
                Box::new(|c: &Cascade| c.height() as f64),
            ),
        ] {
            let groups: Vec<(String, Vec<f64>)> =
                [PostHateBucket::Non, PostHateBucket::Medium, PostHateBucket::High]
                    .iter()
                    .map(|bucket| {
                        let sample = cascades
                            .iter()
                            .filter(|c| buckets.post_buckets[c.root()] == *bucket)
                            .map(&extract)
                            .collect();
                        (bucket.as_str().to_string(), sample)
                    })
                    .collect();
            self.write_density_file(file, "value", &groups)?;
        }

        // Volume split for high-hate sources inside vs outside chambers.
        if let Some(members) = members {
            let split = |inside: bool| -> Vec<f64> {
                cascades
                    .iter()
                    .filter(|c| {
                        buckets.user_buckets[c.source_user()] == UserHateBucket::High
                            && members.contains(c.source_user()) == inside
                    })
                    .filter_map(log_volume)
                    .collect()
            };
            self.write_density_file(
                "density_volume_by_echo.csv",
                "log10_volume",
                &[
                    ("high_hate_member".to_string(), split(true)),
                    ("high_hate_nonmember".to_string(), split(false)),
                ],
            )?;
        }
        Ok(())
    }

    fn participation_export(
        &self,
        buckets: &BucketsData,
        members: Option<&BTreeSet<UserId>>,
        cascades: &[Cascade],
    ) -> anyhow::Result<()> {
        let meta = self.meta("cascades")?;
        let mut csv = CsvReport::create(
            &self.path("participation_fractions.csv"),
            &meta,
            &[
                "root_id",
                "src_user_bucket",
                "hateful_participation",
                "member_participation",
                "in_echo_chamber",
            ],
        )?;
        for cascade in cascades {
            let member_participation = members
                .map(|m| fmt_opt_f64(cascade.member_participation(m)))
                .unwrap_or_default();
            let membership = members
                .map(|m| m.contains(cascade.source_user()).to_string())
                .unwrap_or_default();
            csv.row([
                cascade.root().as_str().to_string(),
                buckets.user_buckets[cascade.source_user()].as_str().to_string(),
                fmt_opt_f64(cascade.hateful_participation(&buckets.user_buckets)),
                member_participation,
                membership,
            ])?;
        }
        csv.finish()
    }

    /// Topic-tag-grouped exports: volume densities plus source hate
    /// composition per tag.
    fn topic_exports(
        &self,
        corpus: &Corpus,
        buckets: &BucketsData,
        cascades: &[Cascade],
    ) -> anyhow::Result<()> {
        let mut by_tag: BTreeMap<String, Vec<&Cascade>> = BTreeMap::new();
        for cascade in cascades {
            if let Some(tag) = corpus
                .get(cascade.root())
                .and_then(|p| p.topic.clone())
            {
                by_tag.entry(tag).or_default().push(cascade);
            }
        }
        if by_tag.is_empty() {
            return Ok(());
        }

        let groups: Vec<(String, Vec<f64>)> = by_tag
            .iter()
            .map(|(tag, group)| {
                let sample = group
                    .iter()
                    .filter(|c| c.volume() >= 1)
                    .map(|c| (c.volume() as f64).log10())
                    .collect();
                (tag.clone(), sample)
            })
            .collect();
        self.write_density_file("topic_volume_density.csv", "log10_volume", &groups)?;

        let meta = self.meta("cascades")?;
        let mut csv = CsvReport::create(
            &self.path("topic_hate_composition.csv"),
            &meta,
            &[
                "topic",
                "cascades",
                "user_low",
                "user_medium",
                "user_high",
                "post_non",
                "post_medium",
                "post_high",
            ],
        )?;
        for (tag, group) in &by_tag {
            let total = group.len() as f64;
            let user_frac = |bucket: UserHateBucket| {
                group
                    .iter()
                    .filter(|c| buckets.user_buckets[c.source_user()] == bucket)
                    .count() as f64
                    / total
            };
            let post_frac = |bucket: PostHateBucket| {
                group
                    .iter()
                    .filter(|c| buckets.post_buckets[c.root()] == bucket)
                    .count() as f64
                    / total
            };
            csv.row([
                tag.clone(),
                group.len().to_string(),
                fmt_f64(user_frac(UserHateBucket::Low)),
                fmt_f64(user_frac(UserHateBucket::Medium)),
                fmt_f64(user_frac(UserHateBucket::High)),
                fmt_f64(post_frac(PostHateBucket::Non)),
                fmt_f64(post_frac(PostHateBucket::Medium)),
                fmt_f64(post_frac(PostHateBucket::High)),
            ])?;
        }
        csv.finish()
    }

    // ----------------------------------------------------------------- cores

    fn stage_cores(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        let buckets = self.load_buckets()?;
        let graph = InteractionGraph::from_corpus(&corpus);
        let cores = kcore_decompose(&graph);
        let meta = self.meta("cores")?;

        let mut csv = CsvReport::create(
            &self.path("graph_edges.csv"),
            &meta,
            &["src", "dst", "weight"],
        )?;
        for (src, dst, weight) in graph.edges() {
            csv.row([src.as_str().to_string(), dst.as_str().to_string(), weight.to_string()])?;
        }
        csv.finish()?;

        let mut csv =
            CsvReport::create(&self.path("cores.csv"), &meta, &["user", "core", "bucket"])?;
        for (user, core) in cores.iter() {
            csv.row([
                user.as_str().to_string(),
                core.to_string(),
                CoreAssignment::bucket_of(core).to_string(),
            ])?;
        }
        csv.finish()?;

        let profile = core_hate_profile(&cores, &buckets.user_buckets);
        let mut csv = CsvReport::create(
            &self.path("core_profile.csv"),
            &meta,
            &["bucket", "users", "frac_low", "frac_medium", "frac_high"],
        )?;
        for row in &profile {
            csv.row([
                row.bucket.to_string(),
                row.users.to_string(),
                fmt_f64(row.frac_low),
                fmt_f64(row.frac_medium),
                fmt_f64(row.frac_high),
            ])?;
        }
        csv.finish()
    }

    // --------------------------------------------------------------- network

    fn stage_network(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        let buckets = self.load_buckets()?;
        let chambers = self.load_chambers()?;
        let cascades = extract_cascades(&corpus);
        let meta = self.meta("network")?;

        let network = build_chamber_network(&chambers);
        let kept = backbone_flags(&network, self.config.alpha);

        let mut nodes = CsvReport::create(
            &self.path("chamber_nodes.csv"),
            &meta,
            &["chamber_id", "size", "hate_fraction", "homogeneity"],
        )?;
        let mut points = Vec::new();
        for (i, chamber) in chambers.iter().enumerate() {
            let hom = homogeneity(chamber, &buckets.user_buckets)?;
            let hate = chamber_hate_fraction(chamber, &cascades, &buckets.post_buckets);
            if let Some(hate) = hate {
                points.push((hate, hom));
            }
            nodes.row([
                i.to_string(),
                chamber.users.len().to_string(),
                fmt_opt_f64(hate),
                fmt_f64(hom),
            ])?;
        }
        nodes.finish()?;

        let mut edges = CsvReport::create(
            &self.path("chamber_edges.csv"),
            &meta,
            &["a", "b", "weight", "kept_in_backbone"],
        )?;
        for (edge, kept) in network.edges.iter().zip(&kept) {
            edges.row([
                edge.a.to_string(),
                edge.b.to_string(),
                edge.weight.to_string(),
                kept.to_string(),
            ])?;
        }
        edges.finish()?;

        // Homogeneity (rows) x hateful source-post fraction (columns).
        let grid = unit_square_histogram(&points, self.config.heatmap_bins);
        let mut heatmap = CsvReport::create(
            &self.path("homogeneity_heatmap.csv"),
            &meta,
            &["homogeneity_bin", "hate_fraction_bin", "frequency"],
        )?;
        for (y, row) in grid.iter().enumerate() {
            for (x, value) in row.iter().enumerate() {
                heatmap.row([y.to_string(), x.to_string(), fmt_f64(*value)])?;
            }
        }
        heatmap.finish()?;

        #[derive(Serialize)]
        struct NetworkSummary {
            chambers: usize,
            edges: usize,
            kept_in_backbone: usize,
            excluded_topic_overlap: usize,
        }
        write_json(
            &self.path("network_summary.json"),
            &meta,
            &NetworkSummary {
                chambers: chambers.len(),
                edges: network.edges.len(),
                kept_in_backbone: kept.iter().filter(|&&k| k).count(),
                excluded_topic_overlap: network.excluded_topic_overlap,
            },
        )
    }

    // ----------------------------------------------------------------- stats

    fn stage_stats(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        let buckets = self.load_buckets()?;
        let chambers = self.load_chambers()?;
        let members: BTreeSet<UserId> =
            chambers.iter().flat_map(|c| c.users.iter().cloned()).collect();
        let cascades = extract_cascades(&corpus);

        let mut reports: Vec<StatReport> = Vec::new();
        let mut push = |report: anyhow::Result<Option<StatReport>>| -> anyhow::Result<()> {
            if let Some(r) = report? {
                reports.push(r);
            }
            Ok(())
        };

        let user_bucket =
            |c: &Cascade| -> UserHateBucket { buckets.user_buckets[c.source_user()] };
        let post_bucket = |c: &Cascade| -> PostHateBucket { buckets.post_buckets[c.root()] };

        let metric_split_user = |metric: &dyn Fn(&Cascade) -> f64| -> (Vec<f64>, Vec<f64>) {
            let high = cascades
                .iter()
                .filter(|c| user_bucket(c) == UserHateBucket::High)
                .map(metric)
                .collect();
            let low = cascades
                .iter()
                .filter(|c| user_bucket(c) == UserHateBucket::Low)
                .map(metric)
                .collect();
            (high, low)
        };
        let metric_split_post = |metric: &dyn Fn(&Cascade) -> f64| -> (Vec<f64>, Vec<f64>) {
            let high = cascades
                .iter()
                .filter(|c| post_bucket(c) == PostHateBucket::High)
                .map(metric)
                .collect();
            let non = cascades
                .iter()
                .filter(|c| post_bucket(c) == PostHateBucket::Non)
                .map(metric)
                .collect();
            (high, non)
        };

        let ks = |name: &str, a: &[f64], b: &[f64], note: (&str, &str)| -> anyhow::Result<Option<StatReport>> {
            if a.is_empty() || b.is_empty() {
                return Ok(None);
            }
            let mut report = stats::ks_two_sample(a, b)?.with_name(name);
            report.params.insert("group_1".into(), note.0.into());
            report.params.insert("group_2".into(), note.1.into());
            Ok(Some(report))
        };

        let volume = |c: &Cascade| c.volume() as f64;
        let width = |c: &Cascade| c.width() as f64;
        let height = |c: &Cascade| c.height() as f64;

        let (a, b) = metric_split_user(&volume);
        push(ks("ks_volumes_by_user_bucket", &a, &b, ("high-hate source users", "low-hate source users")))?;
        let (a, b) = metric_split_post(&volume);
        push(ks("ks_volumes_by_post_bucket", &a, &b, ("high-hate source posts", "non-hate source posts")))?;
        let (a, b) = metric_split_user(&width);
        push(ks("ks_width_by_user_bucket", &a, &b, ("high-hate source users", "low-hate source users")))?;
        let (a, b) = metric_split_post(&width);
        push(ks("ks_width_by_post_bucket", &a, &b, ("high-hate source posts", "non-hate source posts")))?;
        let (a, b) = metric_split_user(&height);
        push(ks("ks_height_by_user_bucket", &a, &b, ("high-hate source users", "low-hate source users")))?;
        let (a, b) = metric_split_post(&height);
        push(ks("ks_height_by_post_bucket", &a, &b, ("high-hate source posts", "non-hate source posts")))?;

        // Hateful-interaction fractions within cascades rooted in a
        // high-hate post, split by the source user.
        let interactions = |user: UserHateBucket| -> Vec<f64> {
            cascades
                .iter()
                .filter(|c| post_bucket(c) == PostHateBucket::High && user_bucket(c) == user)
                .filter_map(|c| c.hateful_interaction_fraction(&buckets.post_buckets))
                .collect()
        };
        push(ks(
            "ks_hateful_interactions",
            &interactions(UserHateBucket::High),
            &interactions(UserHateBucket::Low),
            ("high-hate post from high-hate user", "high-hate post from low-hate user"),
        ))?;

        let participation = |user: UserHateBucket| -> Vec<f64> {
            cascades
                .iter()
                .filter(|c| user_bucket(c) == user)
                .filter_map(|c| c.hateful_participation(&buckets.user_buckets))
                .collect()
        };
        push(ks(
            "ks_participation_by_user_bucket",
            &participation(UserHateBucket::High),
            &participation(UserHateBucket::Low),
            ("high-hate source users", "low-hate source users"),
        ))?;

        // Volumes of high-hate-sourced cascades: all vs members, all vs
        // non-members.
        let all_high: Vec<f64> = cascades
            .iter()
            .filter(|c| user_bucket(c) == UserHateBucket::High)
            .map(volume)
            .collect();
        let member_high: Vec<f64> = cascades
            .iter()
            .filter(|c| {
                user_bucket(c) == UserHateBucket::High && members.contains(c.source_user())
            })
            .map(volume)
            .collect();
        let nonmember_high: Vec<f64> = cascades
            .iter()
            .filter(|c| {
                user_bucket(c) == UserHateBucket::High && !members.contains(c.source_user())
            })
            .map(volume)
            .collect();
        push(ks(
            "ks_echo_volumes_members",
            &all_high,
            &member_high,
            ("all high-hate source users", "high-hate chamber members"),
        ))?;
        push(ks(
            "ks_echo_volumes_nonmembers",
            &all_high,
            &nonmember_high,
            ("all high-hate source users", "high-hate non-members"),
        ))?;

        // Core number vs hatefulness degree, per user.
        let graph = InteractionGraph::from_corpus(&corpus);
        let cores = kcore_decompose(&graph);
        let mut core_values = Vec::new();
        let mut degrees = Vec::new();
        for (user, core) in cores.iter() {
            if let Some(bucket) = buckets.user_buckets.get(user) {
                core_values.push(core as f64);
                degrees.push(bucket.degree());
            }
        }
        if core_values.len() >= 3 {
            reports.push(
                stats::spearman(&core_values, &degrees)?.with_name("spearman_core_vs_user_hate"),
            );
        }

        // NMI of user hatefulness against decile-binned covariates: the
        // out-degree (follower-count analog) and the age of the account
        // inside the corpus window (first authored post to window end).
        let users: Vec<&UserId> = buckets.user_buckets.keys().collect();
        let hate_codes: Vec<u8> = users
            .iter()
            .map(|u| buckets.user_buckets[*u].degree() as u8)
            .collect();
        let out_degrees: Vec<f64> = users.iter().map(|u| graph.out_degree(u) as f64).collect();
        let mut nmi_degree =
            stats::nmi(&hate_codes, &stats::decile_bins(&out_degrees))?
                .with_name("nmi_user_hate_vs_out_degree");
        nmi_degree
            .params
            .insert("covariate".into(), "unique out-degree, decile-binned (zeros separate)".into());
        reports.push(nmi_degree);

        let window_end = corpus.posts().iter().map(|p| p.ts).max().unwrap_or(0);
        let mut first_post: BTreeMap<&UserId, i64> = BTreeMap::new();
        for post in corpus.posts() {
            let entry = first_post.entry(&post.author).or_insert(post.ts);
            *entry = (*entry).min(post.ts);
        }
        let ages: Vec<f64> = users
            .iter()
            .map(|u| (window_end - first_post.get(u).copied().unwrap_or(window_end)) as f64)
            .collect();
        let mut nmi_age = stats::nmi(&hate_codes, &stats::decile_bins(&ages))?
            .with_name("nmi_user_hate_vs_account_age");
        nmi_age.params.insert(
            "covariate".into(),
            "corpus-window age from first authored post, decile-binned".into(),
        );
        reports.push(nmi_age);

        if let Some(filter) = &self.ks_filter {
            let wanted = format!("ks_{}", filter.replace('-', "_"));
            reports.retain(|r| r.name == wanted);
            if reports.is_empty() {
                bail!("no stat report named {wanted}");
            }
        }
        write_json(&self.path("stat_reports.json"), &self.meta("stats")?, &reports)
    }

    // ---------------------------------------------------------------- report

    fn stage_report(&self) -> anyhow::Result<()> {
        let summary: serde_json::Value = self.artifact("summary.json")?;
        let buckets: serde_json::Value = self.artifact("buckets.json")?;
        let chambers: serde_json::Value = self.artifact("chambers.json")?;
        let network: serde_json::Value = self.artifact("network_summary.json")?;
        let stat_reports: serde_json::Value = self.artifact("stat_reports.json")?;

        let mut condensed_stats = Vec::new();
        if let serde_json::Value::Array(reports) = &stat_reports {
            for report in reports {
                condensed_stats.push(serde_json::json!({
                    "name": report["name"],
                    "statistic": report["statistic"],
                    "p_value": report["p_value"],
                }));
            }
        }
        let chamber_count = chambers["chambers"]
            .as_array()
            .map(|a| a.len())
            .unwrap_or(0);
        let report = serde_json::json!({
            "dataset": summary,
            "post_composition": buckets["post_composition"],
            "user_composition": buckets["user_composition"],
            "echo_chambers": chamber_count,
            "network": network,
            "stats": condensed_stats,
        });
        write_json(&self.path("report.json"), &self.meta("report")?, &report)
    }
}

/// Writes a synthetic corpus bundle: the corpus itself, its ground truth,
/// the matching lexicons, and a ready-to-run pipeline config.
pub fn write_synth_bundle(config: &SynthConfig, out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let (corpus, truth) = synth::generate(config)?;

    let corpus_path = out.join("corpus.jsonl");
    let mut bytes = Vec::new();
    corpus.serialize_jsonl(&mut bytes)?;
    fs::write(&corpus_path, bytes)?;

    let mut lexicon_paths = Vec::new();
    for (name, terms) in config.lexicons() {
        let path = out.join(format!("lexicon_{name}.txt"));
        let mut body = String::new();
        for term in &terms {
            body.push_str(term);
            body.push('\n');
        }
        fs::write(&path, body)?;
        lexicon_paths.push(path);
    }

    let meta = Meta::new("synth", config)?;
    write_json(&out.join("ground_truth.json"), &meta, &truth)?;

    let run_config = RunConfig {
        input: corpus_path,
        platform: corpus.platform(),
        lexicons: lexicon_paths,
        labels: None,
        annotations: None,
        embeddings: None,
        echo: echograph_core::echo::EchoParams::default(),
        alpha: 0.05,
        heatmap_bins: 20,
        density_grid: 256,
        seed: config.seed,
    };
    let config_json = serde_json::to_string_pretty(&run_config)?;
    fs::write(out.join("run_config.json"), config_json + "\n")?;
    eprintln!("[synth] ok ({} posts)", corpus.len());
    Ok(())
}
