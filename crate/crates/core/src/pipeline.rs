//! Multi-pass curation pipeline and the `score` / `eval` entry points.
//!
//! Curation runs in three persisted passes under the output directory:
//!
//! 1. parse, index, filter and compute raw per-pair signals
//!    (`pass1_pairs.jsonl`, `ingest_stats.json`);
//! 2. corpus medians, exposure adjustment, normalization and the engagement
//!    score, plus its mean and standard deviation (`stats.json`,
//!    `pass2_scored.jsonl`);
//! 3. z-score polarity, balancing, body resolution, synthetic negatives and
//!    dataset emission (`train.jsonl`, `validation.jsonl`, `manifest.json`,
//!    `stats_report.txt`).
//!
//! Passes 2 and 3 read only the files written by the previous pass, so a run
//! can resume from either boundary.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregate::{self, AggregationConfig, Alphas, Polarity, ZAccumulator, ZStats};
use crate::dataset::{self, DatasetManifest, DimRow, EngagementRecord, Labeled, PairIds, SynthConfig};
use crate::dims::{self, EmotionScorer, LexiconEmotion, SidecarEmotion};
use crate::error::{Error, Result};
use crate::eval::{self, Baseline, CorrelationReport, GoldenFormat};
use crate::ingest::{
    self, Featurizer, FilterConfig, Filtered, KeywordToxicity, RawPost, SidecarToxicity, ToxicityScorer,
};
use crate::popularity::{self, CorpusStats, MedianInput, MedianSet, Medians};
use crate::sidecar::{ScoreRange, SidecarScores};
use crate::text::StopwordList;

pub const PASS1_PAIRS: &str = "pass1_pairs.jsonl";
pub const INGEST_STATS: &str = "ingest_stats.json";
pub const STATS: &str = "stats.json";
pub const PASS2_SCORED: &str = "pass2_scored.jsonl";
pub const STATS_REPORT: &str = "stats_report.txt";

/// Either the built-in scorer or an id-keyed sidecar file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum ScorerSelection {
    #[default]
    Builtin,
    Sidecar(PathBuf),
}

impl FromStr for ScorerSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lexicon" | "keywords" | "builtin" => Ok(Self::Builtin),
            _ => match s.strip_prefix("sidecar:") {
                Some(p) if !p.is_empty() => Ok(Self::Sidecar(PathBuf::from(p))),
                _ => Err(Error::Config(format!(
                    "unknown scorer {s:?} (expected lexicon, keywords or sidecar:PATH)"
                ))),
            },
        }
    }
}

impl fmt::Display for ScorerSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Builtin => f.write_str("builtin"),
            Self::Sidecar(p) => write!(f, "sidecar:{}", p.display()),
        }
    }
}

impl Serialize for ScorerSelection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScorerSelection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Memory budget in bytes; a quarter of it bounds the median sort buffers.
    pub memory_budget_bytes: usize,
    pub filter: FilterConfig,
    pub aggregation: AggregationConfig,
    pub emotion: ScorerSelection,
    pub toxicity: ScorerSelection,
    pub stopwords: Option<PathBuf>,
    pub synthetic_negatives: usize,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            out_dir: PathBuf::from("out"),
            seed: 0,
            memory_budget_bytes: 1 << 30,
            filter: FilterConfig::default(),
            aggregation: AggregationConfig::default(),
            emotion: ScorerSelection::Builtin,
            toxicity: ScorerSelection::Builtin,
            stopwords: None,
            synthetic_negatives: 0,
            synth: SynthConfig::default(),
        }
    }
}

/// The parts of the configuration that determine output contents.
#[derive(Serialize)]
struct HashedConfig<'a> {
    seed: u64,
    filter: &'a FilterConfig,
    aggregation: &'a AggregationConfig,
    emotion: &'a ScorerSelection,
    toxicity: &'a ScorerSelection,
    stopwords: &'a Option<PathBuf>,
    synthetic_negatives: usize,
    synth: &'a SynthConfig,
}

impl PipelineConfig {
    /// Load from a `.toml` or `.json` file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn config_hash(&self) -> String {
        let hashed = HashedConfig {
            seed: self.seed,
            filter: &self.filter,
            aggregation: &self.aggregation,
            emotion: &self.emotion,
            toxicity: &self.toxicity,
            stopwords: &self.stopwords,
            synthetic_negatives: self.synthetic_negatives,
            synth: &self.synth,
        };
        let bytes = serde_json::to_vec(&hashed).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    fn require_file(path: &Path, what: &str) -> Result<()> {
        if path.is_file() {
            Ok(())
        } else {
            Err(Error::Config(format!("{what} {} does not exist", path.display())))
        }
    }

    /// Check values and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.aggregation.validate()?;
        if self.inputs.is_empty() {
            return Err(Error::Config("no input files given".into()));
        }
        for p in &self.inputs {
            Self::require_file(p, "input")?;
        }
        if let ScorerSelection::Sidecar(p) = &self.emotion {
            Self::require_file(p, "emotion sidecar")?;
        }
        if let ScorerSelection::Sidecar(p) = &self.toxicity {
            Self::require_file(p, "toxicity sidecar")?;
        }
        if let Some(p) = &self.stopwords {
            Self::require_file(p, "stopword list")?;
        }
        if !(0.0..1.0).contains(&self.synth.deletion_rate)
            || !(self.synth.insertion_rate.is_finite() && self.synth.insertion_rate >= 0.0)
        {
            return Err(Error::Config("synthetic transform rates out of range".into()));
        }
        Ok(())
    }

    fn load_stopwords(&self) -> Result<StopwordList> {
        match &self.stopwords {
            Some(p) => StopwordList::load(p),
            None => Ok(StopwordList::english()),
        }
    }

    fn emotion_scorer(&self) -> Result<Box<dyn EmotionScorer>> {
        Ok(match &self.emotion {
            ScorerSelection::Builtin => Box::new(LexiconEmotion::default()),
            ScorerSelection::Sidecar(p) => {
                Box::new(SidecarEmotion::new(SidecarScores::load(p, ScoreRange::Unit)?))
            }
        })
    }

    fn toxicity_scorer(&self) -> Result<Box<dyn ToxicityScorer>> {
        Ok(match &self.toxicity {
            ScorerSelection::Builtin => Box::new(KeywordToxicity::default()),
            ScorerSelection::Sidecar(p) => {
                Box::new(SidecarToxicity::new(SidecarScores::load(p, ScoreRange::Unit)?))
            }
        })
    }
}

/// Raw per-pair signals written by pass 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFeatures {
    pub response_id: String,
    pub parent_id: String,
    pub subreddit: String,
    pub pv: f64,
    pub re_raw: u64,
    pub be_raw: u64,
    pub ae_raw: f64,
    pub ee: f64,
}

/// A pair with adjusted, normalized and aggregate scores, written by pass 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    #[serde(flatten)]
    pub raw: PairFeatures,
    pub pvre: f64,
    pub pvbe: f64,
    pub n_re: f64,
    pub n_ae: f64,
    pub n_be: f64,
    pub endex: f64,
}

/// Adjust, normalize and aggregate one pair's raw signals.
pub fn score_features(
    raw: PairFeatures,
    medians: &Medians,
    alphas: &Alphas,
    cfg: &AggregationConfig,
) -> Result<ScoredPair> {
    let pvre =
        popularity::popularity_adjust(raw.re_raw as f64, raw.pv, medians.median_pv, medians.median_re)?;
    let pvbe =
        popularity::popularity_adjust(raw.be_raw as f64, raw.pv, medians.median_pv, medians.median_be)?;
    let n = aggregate::normalize(pvre, pvbe, raw.ae_raw, raw.ee, alphas);
    let endex = aggregate::endex_from_normalized(&n, &cfg.weights, cfg.normalize_by_weight_sum);
    Ok(ScoredPair {
        raw,
        pvre,
        pvbe,
        n_re: n.n_re,
        n_ae: n.n_ae,
        n_be: n.n_be,
        endex,
    })
}

struct LabeledPair {
    scored: ScoredPair,
    zscore: f64,
    polarity: Polarity,
}

impl Labeled for LabeledPair {
    fn polarity(&self) -> Polarity {
        self.polarity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurateSummary {
    pub ingest: ingest::IngestStats,
    pub stats: CorpusStats,
    pub median_spill_runs: usize,
    pub manifest: DatasetManifest,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResumeFrom {
    #[default]
    Start,
    Pass2,
    Pass3,
}

impl FromStr for ResumeFrom {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "start" | "pass1" => Ok(Self::Start),
            "pass2" => Ok(Self::Pass2),
            "pass3" => Ok(Self::Pass3),
            _ => Err(Error::Config(format!("unknown pass {s:?}"))),
        }
    }
}

struct JsonlWriter {
    path: PathBuf,
    w: BufWriter<File>,
    n: u64,
}

impl JsonlWriter {
    fn create(path: PathBuf) -> Result<Self> {
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            w: BufWriter::with_capacity(1 << 16, f),
            path,
            n: 0,
        })
    }

    fn write<T: Serialize>(&mut self, v: &T) -> Result<()> {
        serde_json::to_writer(&mut self.w, v).map_err(|e| Error::io(&self.path, e.into()))?;
        self.w.write_all(b"\n").map_err(|e| Error::io(&self.path, e))?;
        self.n += 1;
        Ok(())
    }

    fn finish(mut self) -> Result<u64> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.n)
    }
}

fn for_each_jsonl<T: DeserializeOwned>(path: &Path, mut f: impl FnMut(T) -> Result<()>) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in BufReader::with_capacity(1 << 16, file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let v = serde_json::from_str(&line).map_err(|e| Error::data(path, i + 1, e.to_string()))?;
        f(v)?;
    }
    Ok(())
}

/// Pass 1: ingest, filter, and write raw per-pair signals.
pub fn run_pass1(cfg: &PipelineConfig) -> Result<ingest::IngestStats> {
    let stopwords = cfg.load_stopwords()?;
    let emotion = cfg.emotion_scorer()?;
    let toxicity = cfg.toxicity_scorer()?;
    let featurizer = Featurizer {
        stopwords: &stopwords,
        emotion: emotion.as_ref(),
        toxicity: toxicity.as_ref(),
        markers: &cfg.filter.nonconversational_markers,
    };
    let (index, mut stats) = ingest::ingest(&cfg.inputs, &featurizer, |s| {
        log::info!(
            "stage=pass1 records={} parse_errors={} duplicates={}",
            s.records,
            s.parse_errors.total(),
            s.duplicates
        );
    })?;
    if stats.records == 0 {
        return Err(Error::EmptyInput("input files contain no records".into()));
    }
    let filtered = Filtered::apply(&index, &cfg.filter);
    stats.kept = filtered.kept;
    stats.drops = filtered.drops.clone();
    stats.orphans = (0..index.len()).filter(|&i| index.is_orphan_at(i)).count() as u64;

    let emotion_source = cfg.emotion.to_string();
    let mut out = JsonlWriter::create(cfg.out_dir.join(PASS1_PAIRS))?;
    for pair in ingest::extract_pairs(&index, &filtered) {
        let response = index.at(pair.response);
        let parent = index.at(pair.parent);
        let replies: Vec<_> = pair.replies.iter().map(|&r| index.at(r)).collect();
        let features = PairFeatures {
            response_id: response.id.clone(),
            parent_id: parent.id.clone(),
            subreddit: response.subreddit.clone(),
            pv: popularity::popularity_value(filtered.kept_children_count(pair.parent) as u64, parent.ups),
            re_raw: replies.len() as u64,
            be_raw: dims::behavioral_raw(response.ups, response.downs, response.controversiality),
            ae_raw: dims::attentional_from_meta(replies.iter().copied()),
            ee: dims::emotion_from_meta(replies.iter().copied(), &emotion_source)?,
        };
        out.write(&features)?;
    }
    stats.pairs = out.finish()?;
    log::info!(
        "stage=pass1 done records={} kept={} pairs={} orphan={} nonconversational={} toxic={} too_short={} no_popularity={}",
        stats.records,
        stats.kept,
        stats.pairs,
        stats.drops.orphan,
        stats.drops.nonconversational,
        stats.drops.toxic,
        stats.drops.too_short,
        stats.drops.no_popularity
    );
    debug_assert!(stats.is_conserved());
    dataset::write_json(&cfg.out_dir.join(INGEST_STATS), &stats)?;
    if stats.pairs == 0 {
        return Err(Error::EmptyInput(
            "no (context, response) pairs survived filtering".into(),
        ));
    }
    Ok(stats)
}

/// Pass 2: medians (reused from `stats.json` when `reuse_medians`), scores and z-statistics.
pub fn run_pass2(cfg: &PipelineConfig, reuse_medians: bool) -> Result<(CorpusStats, usize)> {
    let pairs_path = cfg.out_dir.join(PASS1_PAIRS);
    let stats_path = cfg.out_dir.join(STATS);
    let (medians, spilled) = if reuse_medians && stats_path.is_file() {
        (CorpusStats::load(&stats_path)?.medians, 0)
    } else {
        let mut set = MedianSet::new(cfg.memory_budget_bytes / 4, &cfg.out_dir);
        for_each_jsonl(&pairs_path, |p: PairFeatures| {
            set.push(MedianInput {
                pv: p.pv,
                re_raw: p.re_raw as f64,
                be_raw: p.be_raw as f64,
                ae_raw: p.ae_raw,
            })
        })?;
        let (medians, run) = set.finish()?;
        log::info!(
            "stage=pass2 medians pv={} re={} be={} ae={} n={} spilled_runs={}",
            medians.median_pv,
            medians.median_re,
            medians.median_be,
            medians.median_ae,
            run.n_records,
            run.spilled_runs
        );
        (medians, run.spilled_runs)
    };
    let alphas = cfg.aggregation.effective_alphas(&medians)?;

    let mut out = JsonlWriter::create(cfg.out_dir.join(PASS2_SCORED))?;
    let mut acc = ZAccumulator::default();
    for_each_jsonl(&pairs_path, |p: PairFeatures| {
        let scored = score_features(p, &medians, &alphas, &cfg.aggregation)?;
        acc.push(scored.endex);
        out.write(&scored)
    })?;
    let n = out.finish()?;
    let z = acc.finish()?;
    let stats = CorpusStats {
        medians,
        endex_mean: z.mean,
        endex_std: z.std,
        n_records: n,
    };
    dataset::write_json(&stats_path, &stats)?;
    log::info!(
        "stage=pass2 done scored={} endex_mean={} endex_std={}",
        n,
        stats.endex_mean,
        stats.endex_std
    );
    Ok((stats, spilled))
}

fn to_record(
    p: LabeledPair,
    label: u8,
    bodies: &std::collections::HashMap<String, String>,
) -> Result<EngagementRecord> {
    let s = p.scored;
    let body = |id: &str| {
        bodies
            .get(id)
            .cloned()
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    };
    Ok(EngagementRecord {
        context: body(&s.raw.parent_id)?,
        response: body(&s.raw.response_id)?,
        label,
        endex: Some(s.endex),
        zscore: Some(p.zscore),
        dims: Some(DimRow {
            ee: s.raw.ee,
            ae: s.raw.ae_raw,
            be: s.raw.be_raw,
            re: s.raw.re_raw,
            pvre: s.pvre,
            pvbe: s.pvbe,
            n_re: s.n_re,
            n_ae: s.n_ae,
            n_be: s.n_be,
        }),
        synthetic: false,
        augmentation: None,
        subreddit: s.raw.subreddit,
        ids: PairIds {
            response: s.raw.response_id,
            parent: s.raw.parent_id,
        },
    })
}

/// Pass 3: polarity, balancing, text resolution, augmentation and emission.
pub fn run_pass3(cfg: &PipelineConfig) -> Result<DatasetManifest> {
    let stats = CorpusStats::load(&cfg.out_dir.join(STATS))?;
    let z = ZStats {
        mean: stats.endex_mean,
        std: stats.endex_std,
        n: stats.n_records,
    };
    if z.std.is_nan() || z.std <= 0.0 {
        return Err(Error::DegenerateCorpus(
            "stats.json has zero standard deviation".into(),
        ));
    }
    let mut labeled = Vec::new();
    let mut discarded = 0u64;
    for_each_jsonl(&cfg.out_dir.join(PASS2_SCORED), |scored: ScoredPair| {
        let zscore = aggregate::zscore(scored.endex, &z);
        let polarity = aggregate::polarity_of_z(zscore, cfg.aggregation.kappa);
        if polarity == Polarity::Discarded {
            discarded += 1;
        } else {
            labeled.push(LabeledPair {
                scored,
                zscore,
                polarity,
            });
        }
        Ok(())
    })?;
    let (pos, neg) = dataset::balance_sample(labeled, cfg.seed)?;
    log::info!(
        "stage=pass3 balanced per_class={} discarded={}",
        pos.len(),
        discarded
    );

    let wanted: HashSet<&str> = pos
        .iter()
        .chain(&neg)
        .flat_map(|p| [p.scored.raw.response_id.as_str(), p.scored.raw.parent_id.as_str()])
        .collect();
    let bodies = ingest::collect_bodies(&cfg.inputs, &wanted)?;
    drop(wanted);

    let mut records = Vec::with_capacity(pos.len() * 2 + cfg.synthetic_negatives);
    for p in pos {
        records.push(to_record(p, 1, &bodies)?);
    }
    let n_pos = records.len();
    for p in neg {
        records.push(to_record(p, 0, &bodies)?);
    }
    let synthetic =
        dataset::synth_negatives(&records[..n_pos], cfg.synthetic_negatives, &cfg.synth, cfg.seed)?;
    records.extend(synthetic);

    let mut manifest = dataset::stats_report(&records);
    manifest.n_discarded = discarded;
    manifest.config_hash = cfg.config_hash();
    manifest.seed = cfg.seed;
    dataset::emit_jsonl(&records, &cfg.out_dir, cfg.seed, &mut manifest)?;
    let table = dataset::render_table(&manifest);
    let report_path = cfg.out_dir.join(STATS_REPORT);
    std::fs::write(&report_path, &table).map_err(|e| Error::io(&report_path, e))?;
    log::info!(
        "stage=pass3 done positive={} negative={} synthetic={} train={} validation={}",
        manifest.n_positive,
        manifest.n_negative,
        manifest.n_synthetic,
        manifest.n_train,
        manifest.n_validation
    );
    Ok(manifest)
}

/// Run the full pipeline (or resume at a pass boundary).
pub fn curate(cfg: &PipelineConfig, resume: ResumeFrom) -> Result<CurateSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;

    let ingest_stats = if resume == ResumeFrom::Start {
        run_pass1(cfg).map_err(|e| e.in_stage("pass1", 0))?
    } else {
        let p = cfg.out_dir.join(INGEST_STATS);
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        serde_json::from_str(&text).map_err(|e| Error::file(&p, e.to_string()))?
    };
    let (stats, spilled) = if resume == ResumeFrom::Pass3 {
        (CorpusStats::load(&cfg.out_dir.join(STATS))?, 0)
    } else {
        run_pass2(cfg, resume == ResumeFrom::Pass2).map_err(|e| e.in_stage("pass2", ingest_stats.pairs))?
    };
    let manifest = run_pass3(cfg).map_err(|e| e.in_stage("pass3", stats.n_records))?;
    Ok(CurateSummary {
        ingest: ingest_stats,
        stats,
        median_spill_runs: spilled,
        manifest,
    })
}

/// A reply supplied to `score`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreReply {
    pub id: String,
    pub body: String,
    pub edited: bool,
}

/// One record of a `score` input file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreInput {
    pub context: String,
    pub response: String,
    pub ups: u64,
    pub downs: u64,
    pub controversiality: bool,
    pub parent_ups: u64,
    pub parent_replies: u64,
    pub replies: Vec<ScoreReply>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreOutput {
    pub index: usize,
    pub ee: f64,
    pub ae: f64,
    pub be: u64,
    pub re: u64,
    pub pv: f64,
    pub pvre: f64,
    pub pvbe: f64,
    pub n_re: f64,
    pub n_ae: f64,
    pub n_be: f64,
    pub endex: f64,
    pub zscore: f64,
    pub polarity: Polarity,
}

/// Score arbitrary pairs against frozen corpus statistics.
pub fn score_pairs(
    cfg: &PipelineConfig,
    stats_path: &Path,
    pairs_path: &Path,
    out_path: &Path,
) -> Result<usize> {
    if !stats_path.is_file() {
        return Err(Error::Config(format!(
            "{} not found; run `curate` first to produce corpus statistics",
            stats_path.display()
        )));
    }
    let stats = CorpusStats::load(stats_path)?;
    cfg.aggregation.validate()?;
    let alphas = cfg.aggregation.effective_alphas(&stats.medians)?;
    let z = ZStats {
        mean: stats.endex_mean,
        std: stats.endex_std,
        n: stats.n_records,
    };
    let stopwords = cfg.load_stopwords()?;
    let emotion = cfg.emotion_scorer()?;
    let mut out = JsonlWriter::create(out_path.to_path_buf())?;
    let mut index = 0usize;
    for_each_jsonl(pairs_path, |input: ScoreInput| {
        let replies: Vec<RawPost> = input
            .replies
            .iter()
            .map(|r| RawPost {
                id: r.id.clone(),
                parent_id: None,
                body: r.body.clone(),
                ups: 0,
                downs: 0,
                controversiality: false,
                edited: r.edited,
                subreddit: String::new(),
                created_utc: 0,
                votes_present: true,
            })
            .collect();
        let raw = PairFeatures {
            response_id: String::new(),
            parent_id: String::new(),
            subreddit: String::new(),
            pv: popularity::popularity_value(input.parent_replies, input.parent_ups),
            re_raw: replies.len() as u64,
            be_raw: dims::behavioral_raw(input.ups, input.downs, input.controversiality),
            ae_raw: dims::attentional_score(&replies, &stopwords),
            ee: dims::emotion_score(&replies, emotion.as_ref())?,
        };
        let s = score_features(raw, &stats.medians, &alphas, &cfg.aggregation)?;
        let zscore = aggregate::zscore(s.endex, &z);
        out.write(&ScoreOutput {
            index,
            ee: s.raw.ee,
            ae: s.raw.ae_raw,
            be: s.raw.be_raw,
            re: s.raw.re_raw,
            pv: s.raw.pv,
            pvre: s.pvre,
            pvbe: s.pvbe,
            n_re: s.n_re,
            n_ae: s.n_ae,
            n_be: s.n_be,
            endex: s.endex,
            zscore,
            polarity: aggregate::polarity_of_z(zscore, cfg.aggregation.kappa),
        })?;
        index += 1;
        Ok(())
    })?;
    Ok(out.finish()? as usize)
}

/// A metric to correlate against human scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricSelection {
    Baseline(Baseline),
    /// Index-keyed score file; `{dataset}` in the path is replaced by the dataset tag.
    Sidecar(String),
}

impl MetricSelection {
    pub fn parse(s: &str, default_seed: u64) -> Result<Self> {
        Ok(match s {
            "random" => Self::Baseline(Baseline::Random { seed: default_seed }),
            "question" => Self::Baseline(Baseline::Question),
            "specificity" => Self::Baseline(Baseline::Specificity),
            _ => {
                if let Some(seed) = s.strip_prefix("random:") {
                    let seed = seed
                        .parse()
                        .map_err(|_| Error::Config(format!("bad random seed in {s:?}")))?;
                    Self::Baseline(Baseline::Random { seed })
                } else if let Some(p) = s.strip_prefix("sidecar:").filter(|p| !p.is_empty()) {
                    Self::Sidecar(p.to_string())
                } else {
                    return Err(Error::Config(format!("unknown metric {s:?}")));
                }
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Baseline(b) => b.name().to_string(),
            Self::Sidecar(p) => Path::new(p)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or(p)
                .to_string(),
        }
    }
}

/// Correlate every metric with every golden set. Load failures become error rows.
pub fn run_eval(
    golden: &[PathBuf],
    metrics: &[MetricSelection],
    stopwords: &StopwordList,
) -> CorrelationReport {
    let mut report = CorrelationReport::default();
    for path in golden {
        let tag = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("golden")
            .to_string();
        let examples = GoldenFormat::from_path(path).and_then(|f| eval::load_golden(path, f));
        let examples = match examples {
            Ok(ex) => ex,
            Err(e) => {
                let msg = e.to_string();
                for m in metrics {
                    report.push(&tag, &m.name(), Err(Error::file(path, msg.clone())));
                }
                continue;
            }
        };
        for m in metrics {
            let result = match m {
                MetricSelection::Baseline(b) => {
                    eval::evaluate(&examples, &eval::baseline_scores(&examples, *b, stopwords))
                }
                MetricSelection::Sidecar(template) => {
                    let p = PathBuf::from(template.replace("{dataset}", &tag));
                    SidecarScores::load(&p, ScoreRange::Finite)
                        .and_then(|s| s.aligned(examples.len()))
                        .and_then(|scores| eval::evaluate(&examples, &scores))
                }
            };
            report.push(&tag, &m.name(), result);
        }
    }
    report
}

/// Render a saved manifest or correlation report as a table.
pub fn render_report_file(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if let Ok(rep) = serde_json::from_str::<CorrelationReport>(&text) {
        return Ok(rep.render_table());
    }
    let manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| Error::file(path, format!("neither a manifest nor a correlation report: {e}")))?;
    Ok(dataset::render_table(&manifest))
}
