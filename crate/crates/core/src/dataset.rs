//! Balancing, synthetic negatives, serialization and class statistics for
//! the labeled dataset.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregate::Polarity;
use crate::error::{Error, Result};
use crate::text;

pub const TRAIN_FRACTION: f64 = 0.8;

// RNG stream ids, so each stage draws from an independent sequence of the same seed.
const STREAM_BALANCE: u64 = 1;
const STREAM_SYNTH: u64 = 2;
const STREAM_SPLIT: u64 = 3;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimRow {
    pub ee: f64,
    pub ae: f64,
    pub be: u64,
    pub re: u64,
    pub pvre: f64,
    pub pvbe: f64,
    pub n_re: f64,
    pub n_ae: f64,
    pub n_be: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairIds {
    pub response: String,
    pub parent: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Augmentation {
    Insertion,
    Deletion,
    Copying,
    Generic,
}

/// One emitted dataset row. Synthetic rows carry no scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementRecord {
    pub context: String,
    pub response: String,
    pub label: u8,
    pub endex: Option<f64>,
    pub zscore: Option<f64>,
    pub dims: Option<DimRow>,
    pub synthetic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<Augmentation>,
    pub subreddit: String,
    pub ids: PairIds,
}

impl EngagementRecord {
    pub fn polarity(&self) -> Polarity {
        if self.label == 1 {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }
}

pub trait Labeled {
    fn polarity(&self) -> Polarity;
}

impl Labeled for EngagementRecord {
    fn polarity(&self) -> Polarity {
        EngagementRecord::polarity(self)
    }
}

/// Downsample both classes to the smaller class size; each class comes back
/// in a seeded shuffled order. Discarded items are ignored.
pub fn balance_sample<T: Labeled>(
    records: impl IntoIterator<Item = T>,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for r in records {
        match r.polarity() {
            Polarity::Positive => pos.push(r),
            Polarity::Negative => neg.push(r),
            Polarity::Discarded => {}
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::DegenerateCorpus(format!(
            "cannot balance {} positives against {} negatives",
            pos.len(),
            neg.len()
        )));
    }
    let n = pos.len().min(neg.len());
    let mut rng = rng_for(seed, STREAM_BALANCE);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    pos.truncate(n);
    neg.truncate(n);
    Ok((pos, neg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Fraction of response tokens removed by the deletion transform.
    pub deletion_rate: f64,
    /// Inserted tokens per response token for the insertion transform.
    pub insertion_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            deletion_rate: 0.3,
            insertion_rate: 0.3,
        }
    }
}

/// At least one token, never all of them when two or more exist.
pub fn deletion_count(n_tokens: usize, rate: f64) -> usize {
    if n_tokens < 2 {
        return n_tokens;
    }
    ((n_tokens as f64 * rate).round() as usize).clamp(1, n_tokens - 1)
}

/// Apply one transform to `(context, response)`, returning the new response.
pub fn augment(
    kind: Augmentation,
    context: &str,
    response: &str,
    pool: &[&str],
    generic: &[String],
    cfg: &SynthConfig,
    rng: &mut impl Rng,
) -> String {
    let mut tokens: Vec<&str> = response.split_whitespace().collect();
    match kind {
        Augmentation::Copying => context.to_string(),
        Augmentation::Generic => generic.choose(rng).cloned().unwrap_or_default(),
        Augmentation::Deletion if tokens.len() < 2 => {
            augment(Augmentation::Generic, context, response, pool, generic, cfg, rng)
        }
        Augmentation::Deletion => {
            let k = deletion_count(tokens.len(), cfg.deletion_rate);
            let drop = rand::seq::index::sample(rng, tokens.len(), k);
            let mut keep = vec![true; tokens.len()];
            drop.iter().for_each(|i| keep[i] = false);
            tokens
                .iter()
                .zip(keep)
                .filter_map(|(t, k)| k.then_some(*t))
                .collect::<Vec<_>>()
                .join(" ")
        }
        Augmentation::Insertion => {
            let k = ((tokens.len() as f64 * cfg.insertion_rate).round() as usize).max(1);
            for _ in 0..k {
                let Some(tok) = pool.choose(rng) else { break };
                let at = rng.random_range(0..=tokens.len());
                tokens.insert(at, tok);
            }
            tokens.join(" ")
        }
    }
}

const TRANSFORMS: [Augmentation; 4] = [
    Augmentation::Insertion,
    Augmentation::Deletion,
    Augmentation::Copying,
    Augmentation::Generic,
];

/// `n` rule-generated negatives derived from randomly chosen positives.
pub fn synth_negatives(
    positives: &[EngagementRecord],
    n: usize,
    cfg: &SynthConfig,
    seed: u64,
) -> Result<Vec<EngagementRecord>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if positives.is_empty() {
        return Err(Error::EmptyInput(
            "no positives to derive synthetic negatives from".into(),
        ));
    }
    let pool: Vec<&str> = positives
        .iter()
        .flat_map(|r| r.response.split_whitespace().chain(r.context.split_whitespace()))
        .collect();
    let generic = text::generic_replies();
    let mut rng = rng_for(seed, STREAM_SYNTH);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let src = positives.choose(&mut rng).expect("non-empty");
        let kind = *TRANSFORMS.choose(&mut rng).expect("non-empty");
        let response = augment(kind, &src.context, &src.response, &pool, &generic, cfg, &mut rng);
        out.push(EngagementRecord {
            context: src.context.clone(),
            response,
            label: 0,
            endex: None,
            zscore: None,
            dims: None,
            synthetic: true,
            augmentation: Some(kind),
            subreddit: src.subreddit.clone(),
            ids: src.ids.clone(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population statistics; zeros for an empty slice.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub n: usize,
    pub emotional: MeanStd,
    pub attentional: MeanStd,
    pub behavioral: MeanStd,
    pub reply: MeanStd,
    pub endex: MeanStd,
}

impl ClassStats {
    fn of<'a>(records: impl Iterator<Item = &'a EngagementRecord>) -> Self {
        let (mut ee, mut ae, mut be, mut re, mut endex) = (vec![], vec![], vec![], vec![], vec![]);
        for r in records {
            let (Some(d), Some(e)) = (&r.dims, r.endex) else {
                continue;
            };
            ee.push(d.ee);
            ae.push(d.n_ae);
            be.push(d.n_be);
            re.push(d.n_re);
            endex.push(e);
        }
        Self {
            n: endex.len(),
            emotional: MeanStd::of(&ee),
            attentional: MeanStd::of(&ae),
            behavioral: MeanStd::of(&be),
            reply: MeanStd::of(&re),
            endex: MeanStd::of(&endex),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassDimensionStats {
    pub positive: ClassStats,
    pub negative: ClassStats,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub n_positive: usize,
    pub n_negative: usize,
    pub n_synthetic: usize,
    pub n_discarded: u64,
    pub n_train: usize,
    pub n_validation: usize,
    pub per_class_dimension_stats: ClassDimensionStats,
    pub config_hash: String,
    pub seed: u64,
}

/// Counts and per-class statistics over exactly `records`. Synthetic rows are
/// counted but carry no scores, so they do not enter the statistics.
pub fn stats_report(records: &[EngagementRecord]) -> DatasetManifest {
    let pos = || records.iter().filter(|r| r.label == 1);
    let neg = || records.iter().filter(|r| r.label == 0 && !r.synthetic);
    DatasetManifest {
        n_positive: pos().count(),
        n_negative: neg().count(),
        n_synthetic: records.iter().filter(|r| r.synthetic).count(),
        per_class_dimension_stats: ClassDimensionStats {
            positive: ClassStats::of(pos()),
            negative: ClassStats::of(neg()),
        },
        ..Default::default()
    }
}

fn fmt_ms(m: &MeanStd) -> String {
    format!("{:.3} ± {:.3}", m.mean, m.std)
}

/// Human-readable class statistics table.
pub fn render_table(m: &DatasetManifest) -> String {
    let (p, n) = (
        &m.per_class_dimension_stats.positive,
        &m.per_class_dimension_stats.negative,
    );
    let rows: [(&str, String, String); 6] = [
        ("# of samples", m.n_positive.to_string(), m.n_negative.to_string()),
        ("Emotional", fmt_ms(&p.emotional), fmt_ms(&n.emotional)),
        ("Attentional", fmt_ms(&p.attentional), fmt_ms(&n.attentional)),
        ("Behavioral", fmt_ms(&p.behavioral), fmt_ms(&n.behavioral)),
        ("Reply", fmt_ms(&p.reply), fmt_ms(&n.reply)),
        ("EnDex", fmt_ms(&p.endex), fmt_ms(&n.endex)),
    ];
    let mut s = String::new();
    let _ = writeln!(s, "{:<14} {:>16} {:>16}", "", "Engaging", "Non-engaging");
    for (name, a, b) in rows {
        let _ = writeln!(s, "{name:<14} {a:>16} {b:>16}");
    }
    if m.n_synthetic > 0 {
        let _ = writeln!(s, "(+{} synthetic negatives)", m.n_synthetic);
    }
    s
}

fn write_lines(path: &Path, records: &[&EngagementRecord]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| io(e.into()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, e.into()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Shuffle, split 0.8 / 0.2 and write `train.jsonl`, `validation.jsonl` and
/// `manifest.json` under `dir`. Returns `(n_train, n_validation)`.
pub fn emit_jsonl(
    records: &[EngagementRecord],
    dir: &Path,
    seed: u64,
    manifest: &mut DatasetManifest,
) -> Result<(usize, usize)> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no records to emit".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut order: Vec<&EngagementRecord> = records.iter().collect();
    order.shuffle(&mut rng_for(seed, STREAM_SPLIT));
    let n_train = (records.len() as f64 * TRAIN_FRACTION).round() as usize;
    let (train, val) = order.split_at(n_train);
    write_lines(&dir.join("train.jsonl"), train)?;
    write_lines(&dir.join("validation.jsonl"), val)?;
    manifest.n_train = train.len();
    manifest.n_validation = val.len();
    write_json(&dir.join("manifest.json"), manifest)?;
    Ok((train.len(), val.len()))
}
