//! Comment-dump ingestion: record parsing, thread reconstruction, filtering
//! and turn-level pair extraction.
//!
//! The thread index never holds comment bodies. Each record is reduced to a
//! [`PostMeta`] carrying vote signals plus the handful of body-derived
//! features that filtering and scoring need; bodies for the records that
//! end up in the dataset are resolved by a later pass over the input
//! (see [`collect_bodies`]).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dims::EmotionScorer;
use crate::error::{Error, Result};
use crate::sidecar::SidecarScores;
use crate::text::{self, StopwordList, WordList};

const BATCH_LINES: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: String,
    pub parent_id: Option<String>,
    pub body: String,
    pub ups: u64,
    pub downs: u64,
    pub controversiality: bool,
    pub edited: bool,
    pub subreddit: String,
    pub created_utc: i64,
    /// False when the record carried neither `ups` nor `score`.
    pub votes_present: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    Malformed { offset: usize, message: String },
    MissingField(&'static str),
    DeletedBody,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Malformed { offset, message } => {
                write!(f, "malformed record at byte {offset}: {message}")
            }
            ParseError::MissingField(name) => write!(f, "missing field `{name}`"),
            ParseError::DeletedBody => f.write_str("deleted-body"),
        }
    }
}

impl std::error::Error for ParseError {}

fn as_i64(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn as_flag(v: &Value) -> bool {
    match v {
        Value::Bool(b) => *b,
        Value::Number(n) => n.as_f64().is_some_and(|f| f != 0.0),
        Value::String(s) => !s.is_empty() && s != "0" && s != "false",
        _ => false,
    }
}

/// Strip the `t1_` comment prefix; a `t3_` parent is a link post, which makes
/// the comment a thread root.
fn normalize_parent(raw: &str) -> Option<String> {
    if raw.is_empty() || raw.starts_with("t3_") {
        None
    } else if let Some(rest) = raw.strip_prefix("t1_") {
        Some(rest.to_string())
    } else {
        Some(raw.to_string())
    }
}

/// Parse one newline-delimited JSON comment record.
pub fn parse_record(line: &str) -> Result<RawPost, ParseError> {
    let obj: Value = serde_json::from_str(line).map_err(|e| ParseError::Malformed {
        offset: e.column().saturating_sub(1),
        message: e.to_string(),
    })?;
    let Value::Object(map) = obj else {
        return Err(ParseError::Malformed {
            offset: 0,
            message: "record is not a JSON object".into(),
        });
    };
    let id = match map.get("id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return Err(ParseError::MissingField("id")),
    };
    let body = match map.get("body") {
        Some(Value::String(s)) => s.clone(),
        _ => return Err(ParseError::MissingField("body")),
    };
    if matches!(body.trim(), "[deleted]" | "[removed]") {
        return Err(ParseError::DeletedBody);
    }
    let parent_id = map
        .get("parent_id")
        .and_then(Value::as_str)
        .and_then(normalize_parent);

    let ups = map.get("ups").and_then(as_i64);
    let score = map.get("score").and_then(as_i64);
    let votes_present = ups.is_some() || score.is_some();
    let raw_ups = ups.or(score).unwrap_or(0);
    let mut downs = map.get("downs").and_then(as_i64).unwrap_or(0).max(0) as u64;
    // Older dumps report net score in `ups`; keep the net value by moving
    // the negative part into downs.
    if raw_ups < 0 {
        downs += raw_ups.unsigned_abs();
    }

    Ok(RawPost {
        id,
        parent_id,
        body,
        ups: raw_ups.max(0) as u64,
        downs,
        controversiality: map.get("controversiality").is_some_and(as_flag),
        edited: map.get("edited").is_some_and(as_flag),
        subreddit: map
            .get("subreddit")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string(),
        created_utc: map.get("created_utc").and_then(as_i64).unwrap_or(0),
        votes_present,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub toxicity_threshold: f64,
    pub nonconversational_markers: Vec<String>,
    pub min_body_tokens: u32,
    pub require_parent: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            toxicity_threshold: 0.5,
            nonconversational_markers: vec!["&gt;".to_string()],
            min_body_tokens: 1,
            require_parent: true,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.toxicity_threshold) {
            return Err(Error::Config(format!(
                "toxicity_threshold {} not in [0,1]",
                self.toxicity_threshold
            )));
        }
        if self.nonconversational_markers.iter().any(String::is_empty) {
            return Err(Error::Config("empty nonconversational marker".into()));
        }
        Ok(())
    }
}

pub trait ToxicityScorer: Send + Sync {
    /// Probability in [0,1] that the post is toxic.
    fn toxicity(&self, id: &str, text: &str) -> f64;
}

/// 1.0 if any token is on the keyword list, otherwise 0.0.
#[derive(Debug, Clone)]
pub struct KeywordToxicity {
    keywords: WordList,
}

impl KeywordToxicity {
    pub fn new(keywords: WordList) -> Self {
        Self { keywords }
    }
}

impl Default for KeywordToxicity {
    fn default() -> Self {
        Self::new(text::toxic_keywords())
    }
}

impl ToxicityScorer for KeywordToxicity {
    fn toxicity(&self, _id: &str, text: &str) -> f64 {
        if text::tokenize(text).any(|t| self.keywords.contains(&t)) {
            1.0
        } else {
            0.0
        }
    }
}

/// Sidecar scores where present, keyword scorer otherwise.
#[derive(Debug, Clone)]
pub struct SidecarToxicity {
    scores: SidecarScores,
    fallback: KeywordToxicity,
}

impl SidecarToxicity {
    pub fn new(scores: SidecarScores) -> Self {
        Self {
            scores,
            fallback: KeywordToxicity::default(),
        }
    }
}

impl ToxicityScorer for SidecarToxicity {
    fn toxicity(&self, id: &str, text: &str) -> f64 {
        self.scores
            .get(id)
            .unwrap_or_else(|| self.fallback.toxicity(id, text))
    }
}

/// Body-derived signals kept in place of the body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyFeatures {
    pub tokens: u32,
    pub specificity: u32,
    pub nonconversational: bool,
    pub toxicity: f64,
    /// `None` when the emotion scorer had no value for this post.
    pub emotion: Option<f64>,
}

/// A post without its body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostMeta {
    pub id: String,
    pub parent_id: Option<String>,
    pub ups: u64,
    pub downs: u64,
    pub controversiality: bool,
    pub edited: bool,
    pub votes_present: bool,
    pub subreddit: String,
    pub created_utc: i64,
    pub features: BodyFeatures,
}

/// Reduces parsed records to [`PostMeta`].
pub struct Featurizer<'a> {
    pub stopwords: &'a StopwordList,
    pub emotion: &'a dyn EmotionScorer,
    pub toxicity: &'a dyn ToxicityScorer,
    pub markers: &'a [String],
}

impl Featurizer<'_> {
    pub fn features(&self, id: &str, body: &str) -> BodyFeatures {
        BodyFeatures {
            tokens: text::tokenize(body).count() as u32,
            specificity: text::specificity(body, self.stopwords),
            nonconversational: self.markers.iter().any(|m| body.contains(m.as_str())),
            toxicity: self.toxicity.toxicity(id, body),
            emotion: self.emotion.score(id, body).ok(),
        }
    }

    pub fn meta(&self, post: RawPost) -> PostMeta {
        let features = self.features(&post.id, &post.body);
        PostMeta {
            id: post.id,
            parent_id: post.parent_id,
            ups: post.ups,
            downs: post.downs,
            controversiality: post.controversiality,
            edited: post.edited,
            votes_present: post.votes_present,
            subreddit: post.subreddit,
            created_utc: post.created_utc,
            features,
        }
    }
}

/// Parent/child graph over a corpus. Posts keep their first-seen order.
#[derive(Debug, Clone, Default)]
pub struct ThreadIndex {
    posts: IndexMap<String, PostMeta>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    duplicates: u64,
}

impl ThreadIndex {
    pub fn builder() -> ThreadIndexBuilder {
        ThreadIndexBuilder::default()
    }

    pub fn build(posts: impl IntoIterator<Item = PostMeta>) -> Self {
        let mut b = Self::builder();
        for p in posts {
            b.push(p);
        }
        b.finish()
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.posts.get_index_of(id)
    }

    pub fn get(&self, id: &str) -> Option<&PostMeta> {
        self.posts.get(id)
    }

    pub fn at(&self, idx: usize) -> &PostMeta {
        &self.posts[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = &PostMeta> {
        self.posts.values()
    }

    pub fn parent_of(&self, idx: usize) -> Option<usize> {
        self.parent[idx]
    }

    /// Children ordered by `(created_utc, id)`.
    pub fn children_of(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    pub fn children(&self, id: &str) -> Option<Vec<&PostMeta>> {
        let idx = self.position(id)?;
        Some(self.children[idx].iter().map(|&c| self.at(c)).collect())
    }

    /// A post naming a parent that is not in the corpus.
    pub fn is_orphan_at(&self, idx: usize) -> bool {
        self.posts[idx].parent_id.is_some() && self.parent[idx].is_none()
    }

    pub fn is_orphan(&self, id: &str) -> Option<bool> {
        self.position(id).map(|i| self.is_orphan_at(i))
    }
}

#[derive(Debug, Default)]
pub struct ThreadIndexBuilder {
    posts: IndexMap<String, PostMeta>,
    duplicates: u64,
}

impl ThreadIndexBuilder {
    /// Insert a post; later records with an already-seen id are counted and ignored.
    pub fn push(&mut self, post: PostMeta) -> bool {
        if self.posts.contains_key(&post.id) {
            self.duplicates += 1;
            return false;
        }
        self.posts.insert(post.id.clone(), post);
        true
    }

    pub fn finish(self) -> ThreadIndex {
        let n = self.posts.len();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for (idx, post) in self.posts.values().enumerate() {
            if let Some(pid) = &post.parent_id {
                if let Some(p) = self.posts.get_index_of(pid.as_str()) {
                    if p != idx {
                        parent[idx] = Some(p);
                        children[p].push(idx);
                    }
                }
            }
        }
        for list in &mut children {
            list.sort_by(|&a, &b| {
                let (pa, pb) = (&self.posts[a], &self.posts[b]);
                pa.created_utc
                    .cmp(&pb.created_utc)
                    .then_with(|| pa.id.cmp(&pb.id))
            });
        }
        ThreadIndex {
            posts: self.posts,
            parent,
            children,
            duplicates: self.duplicates,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    Orphan,
    Nonconversational,
    Toxic,
    TooShort,
    NoPopularity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Keep,
    Drop(DropReason),
}

pub fn filter_post(idx: usize, index: &ThreadIndex, cfg: &FilterConfig) -> Decision {
    let post = index.at(idx);
    let f = &post.features;
    if cfg.require_parent && index.is_orphan_at(idx) {
        Decision::Drop(DropReason::Orphan)
    } else if f.nonconversational {
        Decision::Drop(DropReason::Nonconversational)
    } else if f.toxicity >= cfg.toxicity_threshold {
        Decision::Drop(DropReason::Toxic)
    } else if f.tokens < cfg.min_body_tokens {
        Decision::Drop(DropReason::TooShort)
    } else if index.parent_of(idx).is_some_and(|p| !index.at(p).votes_present) {
        Decision::Drop(DropReason::NoPopularity)
    } else {
        Decision::Keep
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    pub orphan: u64,
    pub nonconversational: u64,
    pub toxic: u64,
    pub too_short: u64,
    pub no_popularity: u64,
}

impl DropCounts {
    fn bump(&mut self, r: DropReason) {
        match r {
            DropReason::Orphan => self.orphan += 1,
            DropReason::Nonconversational => self.nonconversational += 1,
            DropReason::Toxic => self.toxic += 1,
            DropReason::TooShort => self.too_short += 1,
            DropReason::NoPopularity => self.no_popularity += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.orphan + self.nonconversational + self.toxic + self.too_short + self.no_popularity
    }
}

/// Keep/drop decisions for every post of an index.
#[derive(Debug, Clone)]
pub struct Filtered {
    decisions: Vec<Decision>,
    kept_children: Vec<u32>,
    pub drops: DropCounts,
    pub kept: u64,
}

impl Filtered {
    pub fn apply(index: &ThreadIndex, cfg: &FilterConfig) -> Self {
        let decisions: Vec<Decision> = (0..index.len())
            .into_par_iter()
            .map(|i| filter_post(i, index, cfg))
            .collect();
        let mut drops = DropCounts::default();
        let mut kept = 0;
        for d in &decisions {
            match d {
                Decision::Keep => kept += 1,
                Decision::Drop(r) => drops.bump(*r),
            }
        }
        let kept_children = (0..index.len())
            .map(|i| {
                index
                    .children_of(i)
                    .iter()
                    .filter(|&&c| decisions[c] == Decision::Keep)
                    .count() as u32
            })
            .collect();
        Self {
            decisions,
            kept_children,
            drops,
            kept,
        }
    }

    pub fn decision(&self, idx: usize) -> Decision {
        self.decisions[idx]
    }

    pub fn is_kept(&self, idx: usize) -> bool {
        self.decisions[idx] == Decision::Keep
    }

    pub fn kept_children_count(&self, idx: usize) -> u32 {
        self.kept_children[idx]
    }
}

/// A turn-level (context, response) pair by index position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub parent: usize,
    pub response: usize,
    /// Kept immediate children of the response.
    pub replies: Vec<usize>,
}

/// One pair per kept post whose parent is also kept, in index order.
pub fn extract_pairs<'a>(index: &'a ThreadIndex, filtered: &'a Filtered) -> impl Iterator<Item = Pair> + 'a {
    (0..index.len()).filter_map(move |i| {
        if !filtered.is_kept(i) {
            return None;
        }
        let parent = index.parent_of(i).filter(|&p| filtered.is_kept(p))?;
        let replies = index
            .children_of(i)
            .iter()
            .copied()
            .filter(|&c| filtered.is_kept(c))
            .collect();
        Some(Pair {
            parent,
            response: i,
            replies,
        })
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseErrorCounts {
    pub malformed: u64,
    pub missing_field: u64,
    pub deleted: u64,
}

impl ParseErrorCounts {
    fn bump(&mut self, e: &ParseError) {
        match e {
            ParseError::Malformed { .. } => self.malformed += 1,
            ParseError::MissingField(_) => self.missing_field += 1,
            ParseError::DeletedBody => self.deleted += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.malformed + self.missing_field + self.deleted
    }
}

/// Counters for one ingest run. `records == parse_errors + duplicates + kept + drops`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub records: u64,
    pub parse_errors: ParseErrorCounts,
    pub duplicates: u64,
    pub kept: u64,
    pub drops: DropCounts,
    pub orphans: u64,
    pub pairs: u64,
}

impl IngestStats {
    pub fn is_conserved(&self) -> bool {
        self.records == self.parse_errors.total() + self.duplicates + self.kept + self.drops.total()
    }
}

/// Open a possibly gzip-compressed input file.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic).map_err(|e| Error::io(path, e))?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::with_capacity(1 << 16, file)))
    }
}

/// Stream every non-blank line of `inputs` in order, in batches.
pub(crate) fn for_each_batch(inputs: &[PathBuf], mut f: impl FnMut(&[String]) -> Result<()>) -> Result<()> {
    let mut batch = Vec::with_capacity(BATCH_LINES);
    for path in inputs {
        let reader = open_input(path)?;
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            batch.push(line);
            if batch.len() == BATCH_LINES {
                f(&batch)?;
                batch.clear();
            }
        }
    }
    if !batch.is_empty() {
        f(&batch)?;
    }
    Ok(())
}

/// Parse, featurize and index every record of `inputs`.
pub fn ingest(
    inputs: &[PathBuf],
    featurizer: &Featurizer<'_>,
    mut progress: impl FnMut(&IngestStats),
) -> Result<(ThreadIndex, IngestStats)> {
    let mut builder = ThreadIndex::builder();
    let mut stats = IngestStats::default();
    for_each_batch(inputs, |batch| {
        let parsed: Vec<Result<PostMeta, ParseError>> = batch
            .par_iter()
            .map(|line| parse_record(line).map(|p| featurizer.meta(p)))
            .collect();
        for item in parsed {
            stats.records += 1;
            match item {
                Ok(meta) => {
                    if !builder.push(meta) {
                        stats.duplicates += 1;
                    }
                }
                Err(e) => stats.parse_errors.bump(&e),
            }
        }
        progress(&stats);
        Ok(())
    })?;
    Ok((builder.finish(), stats))
}

/// Bodies of the first successfully parsed record for each wanted id.
pub fn collect_bodies(inputs: &[PathBuf], wanted: &HashSet<&str>) -> Result<HashMap<String, String>> {
    let mut out: HashMap<String, String> = HashMap::with_capacity(wanted.len());
    for_each_batch(inputs, |batch| {
        let found: Vec<RawPost> = batch
            .par_iter()
            .filter_map(|line| parse_record(line).ok())
            .filter(|p| wanted.contains(p.id.as_str()))
            .collect();
        for p in found {
            out.entry(p.id).or_insert(p.body);
        }
        Ok(())
    })?;
    Ok(out)
}
