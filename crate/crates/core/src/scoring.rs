//! Hate bucketing of posts and users.
//!
//! Posts are judged by an ensemble of scorers (the reference configuration
//! is three): two or more hateful votes make a post *high*, exactly one
//! makes it *medium*, none makes it *non*. A user is *high* after five or
//! more hateful (medium or high) posts, *medium* after two, *low*
//! otherwise.
//!
//! Two scorer implementations ship with the crate: a lexicon baseline and
//! a loader for precomputed verdict files, so externally produced
//! classifier output can drive the same bucketing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Corpus, PostId, UserId};
use crate::stats::{cohens_kappa, StatReport};

/// Three-way post label from the ensemble vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostHateBucket {
    Non,
    Medium,
    High,
}

impl PostHateBucket {
    pub fn is_hateful(self) -> bool {
        !matches!(self, PostHateBucket::Non)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PostHateBucket::Non => "non",
            PostHateBucket::Medium => "medium",
            PostHateBucket::High => "high",
        }
    }
}

/// Three-way user label from the hateful-post count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserHateBucket {
    Low,
    Medium,
    High,
}

impl UserHateBucket {
    pub fn is_hateful(self) -> bool {
        !matches!(self, UserHateBucket::Low)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            UserHateBucket::Low => "low",
            UserHateBucket::Medium => "medium",
            UserHateBucket::High => "high",
        }
    }

    /// Numeric degree of hatefulness (low 0, medium 1, high 2) for rank
    /// correlations.
    pub fn degree(self) -> f64 {
        match self {
            UserHateBucket::Low => 0.0,
            UserHateBucket::Medium => 1.0,
            UserHateBucket::High => 2.0,
        }
    }
}

/// One ensemble member. Implementations must be deterministic: the same
/// post always yields the same verdict, so classification of distinct
/// posts can proceed concurrently.
pub trait HateScorer: Send + Sync {
    fn name(&self) -> &str;

    /// Verdict for one post. `id` lets verdict-file scorers look posts up;
    /// text-based scorers ignore it.
    fn classify(&self, id: &PostId, text: &str) -> bool;

    /// How many lookups found no verdict, for scorers backed by partial
    /// verdict files. `None` for scorers that always have an answer.
    fn missing_count(&self) -> Option<u64> {
        None
    }
}

/// Ensemble vote for one post. Empty text is never hateful, by contract,
/// regardless of the scorers.
pub fn bucket_post(id: &PostId, text: &str, scorers: &[Box<dyn HateScorer>]) -> PostHateBucket {
    assert!(!scorers.is_empty(), "at least one scorer is required");
    if text.is_empty() {
        return PostHateBucket::Non;
    }
    let votes = scorers.iter().filter(|s| s.classify(id, text)).count();
    match votes {
        0 => PostHateBucket::Non,
        1 => PostHateBucket::Medium,
        _ => PostHateBucket::High,
    }
}

/// User label from that user's complete in-corpus post buckets. Order of
/// the list does not matter.
pub fn bucket_user(posts: &[PostHateBucket]) -> UserHateBucket {
    let hateful = posts.iter().filter(|b| b.is_hateful()).count();
    match hateful {
        0 | 1 => UserHateBucket::Low,
        2..=4 => UserHateBucket::Medium,
        _ => UserHateBucket::High,
    }
}

/// Buckets an entire corpus: every post through the ensemble, every user
/// from their posts. Returns `(post buckets, user buckets)`.
pub fn bucket_corpus(
    corpus: &Corpus,
    scorers: &[Box<dyn HateScorer>],
) -> (BTreeMap<PostId, PostHateBucket>, BTreeMap<UserId, UserHateBucket>) {
    let mut post_buckets = BTreeMap::new();
    let mut per_user: BTreeMap<UserId, Vec<PostHateBucket>> = BTreeMap::new();
    for post in corpus.posts() {
        let bucket = bucket_post(&post.id, &post.text, scorers);
        post_buckets.insert(post.id.clone(), bucket);
        per_user.entry(post.author.clone()).or_default().push(bucket);
    }
    let user_buckets = per_user
        .into_iter()
        .map(|(user, buckets)| (user, bucket_user(&buckets)))
        .collect();
    (post_buckets, user_buckets)
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

/// Lexicon baseline: votes hateful when any token of the lowercased,
/// punctuation-split text is in the term set. No substring matching.
pub struct LexiconScorer {
    name: String,
    terms: BTreeSet<String>,
}

impl LexiconScorer {
    pub fn new(name: &str, terms: BTreeSet<String>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyLexicon);
        }
        Ok(LexiconScorer {
            name: name.to_string(),
            terms,
        })
    }

    /// Loads one lowercase term per line; blank lines are skipped.
    pub fn from_path(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut terms = BTreeSet::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let term = line.trim();
            if !term.is_empty() {
                terms.insert(term.to_lowercase());
            }
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "lexicon".to_string());
        LexiconScorer::new(&name, terms)
    }
}

impl HateScorer for LexiconScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn classify(&self, _id: &PostId, text: &str) -> bool {
        tokens(text).any(|t| self.terms.contains(&t))
    }
}

#[derive(Deserialize)]
struct LabelRecord {
    id: String,
    classifier: String,
    hateful: bool,
}

/// Precomputed verdicts for one named classifier, loaded from a label
/// file. Posts missing from the file are not hateful; how often that
/// happened is counted and reported.
pub struct LabelFileScorer {
    name: String,
    verdicts: HashMap<PostId, bool>,
    misses: AtomicU64,
}

impl LabelFileScorer {
    /// Reads the JSONL label file, keeping records whose `classifier`
    /// matches `classifier_name`.
    pub fn from_path(path: &Path, classifier_name: &str) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut verdicts = HashMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: LabelRecord =
                serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: e.to_string(),
                })?;
            if record.classifier == classifier_name {
                verdicts.insert(PostId(record.id), record.hateful);
            }
        }
        Ok(LabelFileScorer {
            name: classifier_name.to_string(),
            verdicts,
            misses: AtomicU64::new(0),
        })
    }

    /// Distinct classifier names present in a label file, in first-seen
    /// order.
    pub fn classifiers_in_file(path: &Path) -> Result<Vec<String>> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut names = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: LabelRecord =
                serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: e.to_string(),
                })?;
            if !names.contains(&record.classifier) {
                names.push(record.classifier);
            }
        }
        Ok(names)
    }

}

impl HateScorer for LabelFileScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn classify(&self, id: &PostId, _text: &str) -> bool {
        match self.verdicts.get(id) {
            Some(&v) => v,
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                false
            }
        }
    }

    fn missing_count(&self) -> Option<u64> {
        Some(self.misses.load(Ordering::Relaxed))
    }
}

/// One annotated post: raw 0/1/2 scores, one per annotator.
#[derive(Debug, Clone, Deserialize)]
pub struct Annotation {
    pub id: String,
    pub scores: Vec<u8>,
}

/// Loads the annotation JSONL ({"id", "scores": [0|1|2, ...]}).
pub fn load_annotations(path: &Path) -> Result<Vec<Annotation>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Annotation = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            path: path.display().to_string(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if record.scores.iter().any(|&s| s > 2) {
            return Err(Error::AnnotationScoreRange(record.id));
        }
        out.push(record);
    }
    Ok(out)
}

/// Gold label for one post: mean annotator score rounded half-up, mapped
/// 0 -> non, 1 -> medium, 2 -> high.
pub fn gold_label(scores: &[u8]) -> PostHateBucket {
    let mean = scores.iter().map(|&s| s as f64).sum::<f64>() / scores.len() as f64;
    match (mean + 0.5).floor() as i64 {
        0 => PostHateBucket::Non,
        1 => PostHateBucket::Medium,
        _ => PostHateBucket::High,
    }
}

const CLASSES: [PostHateBucket; 3] =
    [PostHateBucket::Non, PostHateBucket::Medium, PostHateBucket::High];

/// Compares predicted buckets against annotations on their overlap:
/// macro-F1 and balanced accuracy of the predictions against the rounded
/// gold labels, plus pairwise Cohen's kappa between annotators.
///
/// Macro-F1 averages over the classes that occur in the gold labels or the
/// predictions; balanced accuracy averages recall over gold classes.
pub fn validate_annotations(
    predicted: &BTreeMap<PostId, PostHateBucket>,
    annotations: &[Annotation],
) -> Result<Vec<StatReport>> {
    let overlap: Vec<(&Annotation, PostHateBucket)> = annotations
        .iter()
        .filter_map(|a| predicted.get(&PostId(a.id.clone())).map(|&p| (a, p)))
        .collect();
    if overlap.is_empty() {
        return Err(Error::EmptyAnnotationOverlap);
    }
    let n = overlap.len();
    let gold: Vec<PostHateBucket> = overlap.iter().map(|(a, _)| gold_label(&a.scores)).collect();
    let pred: Vec<PostHateBucket> = overlap.iter().map(|(_, p)| *p).collect();

    let mut reports = Vec::new();
    let meta = |mut r: StatReport| {
        r.params.insert("rounding".into(), "half-up".into());
        r.params.insert("gold".into(), "mean annotator score".into());
        r
    };

    // Macro F1 over classes with any gold or predicted presence.
    let mut f1s = Vec::new();
    for class in CLASSES {
        let tp = gold
            .iter()
            .zip(&pred)
            .filter(|(g, p)| **g == class && **p == class)
            .count() as f64;
        let gold_n = gold.iter().filter(|&&g| g == class).count() as f64;
        let pred_n = pred.iter().filter(|&&p| p == class).count() as f64;
        if gold_n == 0.0 && pred_n == 0.0 {
            continue;
        }
        let precision = if pred_n > 0.0 { tp / pred_n } else { 0.0 };
        let recall = if gold_n > 0.0 { tp / gold_n } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        f1s.push(f1);
    }
    let mut f1_report = StatReport {
        name: "macro_f1".into(),
        statistic: Some(f1s.iter().sum::<f64>() / f1s.len() as f64),
        p_value: None,
        n1: n,
        n2: n,
        params: BTreeMap::new(),
    };
    f1_report
        .params
        .insert("averaging".into(), "macro over present classes".into());
    reports.push(meta(f1_report));

    // Balanced accuracy: mean recall over classes present in gold.
    let mut recalls = Vec::new();
    for class in CLASSES {
        let gold_n = gold.iter().filter(|&&g| g == class).count() as f64;
        if gold_n == 0.0 {
            continue;
        }
        let tp = gold
            .iter()
            .zip(&pred)
            .filter(|(g, p)| **g == class && **p == class)
            .count() as f64;
        recalls.push(tp / gold_n);
    }
    let bal = StatReport {
        name: "balanced_accuracy".into(),
        statistic: Some(recalls.iter().sum::<f64>() / recalls.len() as f64),
        p_value: None,
        n1: n,
        n2: n,
        params: BTreeMap::new(),
    };
    reports.push(meta(bal));

    // Pairwise Cohen's kappa among annotators, on posts all annotators
    // scored.
    let annotator_count = overlap.iter().map(|(a, _)| a.scores.len()).min().unwrap_or(0);
    let mut kappas = Vec::new();
    for i in 0..annotator_count {
        for j in (i + 1)..annotator_count {
            let ri: Vec<u8> = overlap.iter().map(|(a, _)| a.scores[i]).collect();
            let rj: Vec<u8> = overlap.iter().map(|(a, _)| a.scores[j]).collect();
            let report = cohens_kappa(&ri, &rj)?.with_name(&format!("kappa_annotators_{i}_{j}"));
            if let Some(k) = report.statistic {
                kappas.push(k);
            }
            reports.push(report);
        }
    }
    if !kappas.is_empty() {
        let mean = StatReport {
            name: "kappa_mean".into(),
            statistic: Some(kappas.iter().sum::<f64>() / kappas.len() as f64),
            p_value: None,
            n1: n,
            n2: n,
            params: BTreeMap::new(),
        };
        reports.push(mean);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct FixedScorer(bool);

    impl HateScorer for FixedScorer {
        fn name(&self) -> &str {
            "fixed"
        }
        fn classify(&self, _id: &PostId, _text: &str) -> bool {
            self.0
        }
    }

    fn ensemble(votes: [bool; 3]) -> Vec<Box<dyn HateScorer>> {
        votes
            .into_iter()
            .map(|v| Box::new(FixedScorer(v)) as Box<dyn HateScorer>)
            .collect()
    }

    #[test]
    fn all_eight_vote_patterns() {
        for a in [false, true] {
            for b in [false, true] {
                for c in [false, true] {
                    let votes = [a, b, c].iter().filter(|&&v| v).count();
                    let expected = match votes {
                        0 => PostHateBucket::Non,
                        1 => PostHateBucket::Medium,
                        _ => PostHateBucket::High,
                    };
                    let got = bucket_post(&PostId::from("p"), "text", &ensemble([a, b, c]));
                    assert_eq!(got, expected, "votes {a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn empty_text_is_never_hateful() {
        let got = bucket_post(&PostId::from("p"), "", &ensemble([true, true, true]));
        assert_eq!(got, PostHateBucket::Non);
    }

    #[test]
    fn user_rule_over_counts() {
        use PostHateBucket::*;
        use UserHateBucket as U;
        let cases: [(usize, U); 7] = [
            (0, U::Low),
            (1, U::Low),
            (2, U::Medium),
            (3, U::Medium),
            (4, U::Medium),
            (5, U::High),
            (6, U::High),
        ];
        for (hateful, expected) in cases {
            let mut posts = vec![Non; 10];
            for slot in posts.iter_mut().take(hateful) {
                *slot = if hateful % 2 == 0 { Medium } else { High };
            }
            assert_eq!(bucket_user(&posts), expected, "h = {hateful}");
        }
    }

    proptest! {
        #[test]
        fn bucket_user_is_permutation_invariant_and_monotone(
            mut posts in proptest::collection::vec(
                prop_oneof![
                    Just(PostHateBucket::Non),
                    Just(PostHateBucket::Medium),
                    Just(PostHateBucket::High)
                ],
                0..12,
            ),
            rotate in 0usize..12,
        ) {
            let base = bucket_user(&posts);
            let r = rotate % posts.len().max(1);
            posts.rotate_left(r);
            prop_assert_eq!(bucket_user(&posts), base);
            posts.push(PostHateBucket::High);
            prop_assert!(bucket_user(&posts) >= base);
        }

        #[test]
        fn adding_a_hateful_vote_never_lowers_the_post_bucket(
            votes in proptest::collection::vec(any::<bool>(), 1..6),
        ) {
            let id = PostId::from("p");
            let before = bucket_post(&id, "text", &votes
                .iter()
                .map(|&v| Box::new(FixedScorer(v)) as Box<dyn HateScorer>)
                .collect::<Vec<_>>());
            let mut more = votes.clone();
            more.push(true);
            let after = bucket_post(&id, "text", &more
                .into_iter()
                .map(|v| Box::new(FixedScorer(v)) as Box<dyn HateScorer>)
                .collect::<Vec<_>>());
            prop_assert!(after >= before);
        }
    }

    #[test]
    fn lexicon_matches_case_folded_tokens_only() {
        let scorer =
            LexiconScorer::new("lex", BTreeSet::from(["x".to_string()])).unwrap();
        let id = PostId::from("p");
        assert!(scorer.classify(&id, "a X b"));
        assert!(!scorer.classify(&id, "axb"));
        assert!(!scorer.classify(&id, ""));
    }

    #[test]
    fn empty_lexicon_is_rejected() {
        assert!(matches!(
            LexiconScorer::new("lex", BTreeSet::new()),
            Err(Error::EmptyLexicon)
        ));
    }

    #[test]
    fn label_file_hits_misses_and_malformed() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let mut f = File::create(&path).unwrap();
        writeln!(f, r#"{{"id":"p1","classifier":"alpha","hateful":true}}"#).unwrap();
        writeln!(f, r#"{{"id":"p2","classifier":"beta","hateful":false}}"#).unwrap();
        drop(f);

        let scorer = LabelFileScorer::from_path(&path, "alpha").unwrap();
        assert!(scorer.classify(&PostId::from("p1"), "whatever"));
        assert!(!scorer.classify(&PostId::from("p2"), "whatever"));
        assert_eq!(scorer.missing_count(), Some(1));
        assert_eq!(
            LabelFileScorer::classifiers_in_file(&path).unwrap(),
            vec!["alpha".to_string(), "beta".to_string()]
        );

        let bad = dir.path().join("bad.jsonl");
        std::fs::write(&bad, r#"{"id":"p1","classifier":"alpha","hateful":"yes"}"#).unwrap();
        assert!(matches!(
            LabelFileScorer::from_path(&bad, "alpha"),
            Err(Error::MalformedLine { .. })
        ));
    }

    #[test]
    fn gold_label_rounds_half_up() {
        // (2,2,1): mean 1.67 -> 2 -> high
        assert_eq!(gold_label(&[2, 2, 1]), PostHateBucket::High);
        // (1,0,0): mean 0.33 -> 0 -> non
        assert_eq!(gold_label(&[1, 0, 0]), PostHateBucket::Non);
        // (1,2): mean 1.5 -> half-up -> 2 -> high
        assert_eq!(gold_label(&[1, 2]), PostHateBucket::High);
        // (0,1): mean 0.5 -> half-up -> 1 -> medium
        assert_eq!(gold_label(&[0, 1]), PostHateBucket::Medium);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let annotations = vec![
            Annotation { id: "a".into(), scores: vec![0, 0, 0] },
            Annotation { id: "b".into(), scores: vec![1, 1, 1] },
            Annotation { id: "c".into(), scores: vec![2, 2, 2] },
        ];
        let predicted: BTreeMap<PostId, PostHateBucket> = BTreeMap::from([
            (PostId::from("a"), PostHateBucket::Non),
            (PostId::from("b"), PostHateBucket::Medium),
            (PostId::from("c"), PostHateBucket::High),
        ]);
        let reports = validate_annotations(&predicted, &annotations).unwrap();
        let by_name: BTreeMap<&str, &StatReport> =
            reports.iter().map(|r| (r.name.as_str(), r)).collect();
        assert_eq!(by_name["macro_f1"].statistic, Some(1.0));
        assert_eq!(by_name["balanced_accuracy"].statistic, Some(1.0));
        // annotators agree perfectly and are non-constant
        assert_eq!(by_name["kappa_annotators_0_1"].statistic, Some(1.0));
    }

    #[test]
    fn disjoint_overlap_is_an_error() {
        let annotations = vec![Annotation { id: "z".into(), scores: vec![0] }];
        let predicted = BTreeMap::from([(PostId::from("a"), PostHateBucket::Non)]);
        assert!(matches!(
            validate_annotations(&predicted, &annotations),
            Err(Error::EmptyAnnotationOverlap)
        ));
    }
}
