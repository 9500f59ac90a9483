//! Submodular normalization, the weighted engagement score, and z-score
//! polarity labeling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::popularity::Medians;

const REDUCE_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub re: f64,
    pub ae: f64,
    pub ee: f64,
    pub be: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            re: 3.0,
            ae: 3.0,
            ee: 2.0,
            be: 1.0,
        }
    }
}

impl Weights {
    pub fn sum(&self) -> f64 {
        self.re + self.ae + self.ee + self.be
    }
}

/// Half-saturation points of `x / (x + alpha)` per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alphas {
    pub re: f64,
    pub be: f64,
    pub ae: f64,
}

impl Default for Alphas {
    fn default() -> Self {
        Self {
            re: 1.0,
            be: 2.0,
            ae: 18.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaSource {
    /// Use the configured constants.
    #[default]
    Constants,
    /// Use the corpus medians of the raw RE, BE and AE scores.
    Medians,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregationConfig {
    pub weights: Weights,
    pub alphas: Alphas,
    pub alpha_source: AlphaSource,
    pub kappa: f64,
    pub normalize_by_weight_sum: bool,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            alphas: Alphas::default(),
            alpha_source: AlphaSource::Constants,
            kappa: 1.0,
            normalize_by_weight_sum: true,
        }
    }
}

impl AggregationConfig {
    pub fn validate(&self) -> Result<()> {
        let w = &self.weights;
        if [w.re, w.ae, w.ee, w.be]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::Config("weights must be finite and non-negative".into()));
        }
        if w.sum() <= 0.0 {
            return Err(Error::Config("weights must not all be zero".into()));
        }
        let a = &self.alphas;
        if [a.re, a.be, a.ae].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("alphas must be finite and positive".into()));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::Config("kappa must be finite and positive".into()));
        }
        Ok(())
    }

    /// Alphas in effect for a corpus with the given medians.
    pub fn effective_alphas(&self, medians: &Medians) -> Result<Alphas> {
        match self.alpha_source {
            AlphaSource::Constants => Ok(self.alphas),
            AlphaSource::Medians => {
                let a = Alphas {
                    re: medians.median_re,
                    be: medians.median_be,
                    ae: medians.median_ae,
                };
                if a.re > 0.0 && a.be > 0.0 && a.ae > 0.0 {
                    Ok(a)
                } else {
                    Err(Error::Config(format!(
                        "median-derived alphas must be positive, got {a:?}"
                    )))
                }
            }
        }
    }
}

/// `x / (x + alpha)`.
pub fn submodular(x: f64, alpha: f64) -> f64 {
    x / (x + alpha)
}

/// Per-dimension scores on [0, 1).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Normalized {
    pub n_re: f64,
    pub n_ae: f64,
    pub n_be: f64,
    pub ee: f64,
}

pub fn normalize(adjusted_re: f64, adjusted_be: f64, ae: f64, ee: f64, alphas: &Alphas) -> Normalized {
    Normalized {
        n_re: submodular(adjusted_re, alphas.re),
        n_ae: submodular(ae, alphas.ae),
        n_be: submodular(adjusted_be, alphas.be),
        ee,
    }
}

/// Weighted sum of normalized dimensions, optionally divided by the weight sum.
pub fn endex_from_normalized(n: &Normalized, weights: &Weights, normalize_by_weight_sum: bool) -> f64 {
    let s = weights.re * n.n_re + weights.ae * n.n_ae + weights.be * n.n_be + weights.ee * n.ee;
    if normalize_by_weight_sum {
        s / weights.sum()
    } else {
        s
    }
}

/// Engagement score from adjusted RE/BE, raw AE and EE, with explicit alphas.
pub fn endex_score(
    adjusted_re: f64,
    adjusted_be: f64,
    ae: f64,
    ee: f64,
    cfg: &AggregationConfig,
    alphas: &Alphas,
) -> f64 {
    let n = normalize(adjusted_re, adjusted_be, ae, ee, alphas);
    endex_from_normalized(&n, &cfg.weights, cfg.normalize_by_weight_sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: u64,
}

/// Running mean / sum of squared deviations (Welford), mergeable across chunks.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl ZAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        Self { n, mean, m2 }
    }

    pub fn finish(self) -> Result<ZStats> {
        if self.n < 2 {
            return Err(Error::DegenerateCorpus(format!(
                "z-score needs at least 2 scores, got {}",
                self.n
            )));
        }
        let std = (self.m2 / self.n as f64).sqrt();
        if std.is_nan() || std <= 0.0 {
            return Err(Error::DegenerateCorpus("all scores identical (std = 0)".into()));
        }
        Ok(ZStats {
            mean: self.mean,
            std,
            n: self.n,
        })
    }
}

/// Mean and population standard deviation. Chunks are reduced in parallel and
/// merged in a fixed order so the result does not depend on scheduling.
pub fn zscore_stats(scores: &[f64]) -> Result<ZStats> {
    let parts: Vec<ZAccumulator> = scores
        .par_chunks(REDUCE_CHUNK)
        .map(|chunk| {
            let mut acc = ZAccumulator::default();
            chunk.iter().for_each(|&x| acc.push(x));
            acc
        })
        .collect();
    parts
        .into_iter()
        .fold(ZAccumulator::default(), ZAccumulator::merge)
        .finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Discarded,
}

pub fn zscore(endex: f64, stats: &ZStats) -> f64 {
    (endex - stats.mean) / stats.std
}

/// Positive above `kappa` standard deviations, negative below `-kappa`, discarded in between.
pub fn polarity_of_z(z: f64, kappa: f64) -> Polarity {
    if z > kappa {
        Polarity::Positive
    } else if z < -kappa {
        Polarity::Negative
    } else {
        Polarity::Discarded
    }
}

pub fn polarity(endex: f64, stats: &ZStats, kappa: f64) -> Polarity {
    polarity_of_z(zscore(endex, stats), kappa)
}
