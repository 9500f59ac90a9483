//! Raw scores for the four engagement dimensions: emotional (EE),
//! attentional (AE), behavioral (BE) and reply (RE).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Filtered, PostMeta, RawPost, ThreadIndex};
use crate::sidecar::SidecarScores;
use crate::text::{self, StopwordList, WordList};

/// Weight of one edited reply in the attentional score.
pub const EDIT_WEIGHT: f64 = 10.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DimensionScores {
    pub ee: f64,
    pub ae_raw: f64,
    pub be_raw: u64,
    pub re_raw: u64,
}

/// Probability of positive emotion for a post.
pub trait EmotionScorer: Send + Sync {
    fn score(&self, id: &str, text: &str) -> Result<f64>;
}

#[derive(Debug, Clone)]
pub struct LexiconEmotion {
    lexicon: WordList,
}

impl LexiconEmotion {
    pub fn new(lexicon: WordList) -> Self {
        Self { lexicon }
    }
}

impl Default for LexiconEmotion {
    fn default() -> Self {
        Self::new(text::positive_emotion_lexicon())
    }
}

impl EmotionScorer for LexiconEmotion {
    fn score(&self, _id: &str, text: &str) -> Result<f64> {
        Ok(text::lexicon_emotion(text, &self.lexicon))
    }
}

/// Looks scores up by post id; an unknown id is an error.
#[derive(Debug, Clone)]
pub struct SidecarEmotion {
    scores: SidecarScores,
}

impl SidecarEmotion {
    pub fn new(scores: SidecarScores) -> Self {
        Self { scores }
    }
}

impl EmotionScorer for SidecarEmotion {
    fn score(&self, id: &str, _text: &str) -> Result<f64> {
        self.scores.require(id)
    }
}

/// `t + 10 * e`, where `t` is the best reply specificity and `e` the number of edited replies.
pub fn attentional(max_specificity: u32, edited_replies: u32) -> f64 {
    max_specificity as f64 + EDIT_WEIGHT * edited_replies as f64
}

pub fn attentional_score(replies: &[RawPost], stopwords: &StopwordList) -> f64 {
    let t = replies
        .iter()
        .map(|r| text::specificity(&r.body, stopwords))
        .max()
        .unwrap_or(0);
    let e = replies.iter().filter(|r| r.edited).count() as u32;
    attentional(t, e)
}

pub fn attentional_from_meta<'a>(replies: impl IntoIterator<Item = &'a PostMeta>) -> f64 {
    let (mut t, mut e) = (0, 0);
    for r in replies {
        t = t.max(r.features.specificity);
        e += r.edited as u32;
    }
    attentional(t, e)
}

/// Net votes clamped at zero; zero for controversial posts.
pub fn behavioral_raw(ups: u64, downs: u64, controversial: bool) -> u64 {
    if controversial {
        0
    } else {
        ups.saturating_sub(downs)
    }
}

pub fn behavioral_of(post: &RawPost) -> u64 {
    behavioral_raw(post.ups, post.downs, post.controversiality)
}

/// Number of kept immediate children.
pub fn reply_raw(post_id: &str, index: &ThreadIndex, filtered: &Filtered) -> Result<u64> {
    let idx = index
        .position(post_id)
        .ok_or_else(|| Error::UnknownId(post_id.to_string()))?;
    Ok(filtered.kept_children_count(idx) as u64)
}

/// Mean positive-emotion probability over the replies; 0 with no replies.
pub fn emotion_score(replies: &[RawPost], scorer: &dyn EmotionScorer) -> Result<f64> {
    if replies.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for r in replies {
        sum += scorer.score(&r.id, &r.body)?;
    }
    Ok(sum / replies.len() as f64)
}

/// Same as [`emotion_score`] over precomputed per-post values.
pub fn emotion_from_meta<'a>(
    replies: impl IntoIterator<Item = &'a PostMeta>,
    source_name: &str,
) -> Result<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for r in replies {
        sum += r.features.emotion.ok_or_else(|| Error::MissingScore {
            id: r.id.clone(),
            source_name: source_name.to_string(),
        })?;
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}
