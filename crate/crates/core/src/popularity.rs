//! Thread-exposure ("popularity value") and the exposure adjustment applied
//! to the reply and behavioral raw scores.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::median::ExternalMedian;

/// Exposure of a post, read off its parent: `2 * replies + upvotes`.
pub fn popularity_value(parent_replies: u64, parent_ups: u64) -> f64 {
    2.0 * parent_replies as f64 + parent_ups as f64
}

/// `raw + (m_pv / m_raw) * (raw / max(pv, 1)) * raw`.
///
/// Shared by the reply and behavioral dimensions, each with its own median.
pub fn popularity_adjust(raw: f64, pv: f64, m_pv: f64, m_raw: f64) -> Result<f64> {
    if m_raw.is_nan() || m_raw <= 0.0 {
        return Err(Error::Config(format!(
            "median of raw score is {m_raw}; exposure adjustment needs a positive median"
        )));
    }
    if raw == 0.0 {
        return Ok(0.0);
    }
    Ok(raw + (m_pv / m_raw) * (raw / pv.max(1.0)) * raw)
}

/// Corpus-wide medians of the per-pair raw signals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Medians {
    pub median_pv: f64,
    pub median_re: f64,
    pub median_be: f64,
    pub median_ae: f64,
}

/// Inputs to [`compute_medians`] for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianInput {
    pub pv: f64,
    pub re_raw: f64,
    pub be_raw: f64,
    pub ae_raw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MedianRun {
    pub n_records: u64,
    pub spilled_runs: usize,
}

/// Incremental form of [`compute_medians`].
pub struct MedianSet {
    cols: [ExternalMedian; 4],
}

impl MedianSet {
    /// `budget_bytes` is shared by the four columns.
    pub fn new(budget_bytes: usize, spill_dir: &Path) -> Self {
        Self {
            cols: std::array::from_fn(|_| ExternalMedian::new(budget_bytes / 4, spill_dir)),
        }
    }

    pub fn push(&mut self, r: MedianInput) -> Result<()> {
        for (col, v) in self.cols.iter_mut().zip([r.pv, r.re_raw, r.be_raw, r.ae_raw]) {
            col.push(v)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<(Medians, MedianRun)> {
        let n_records = self.cols[0].len();
        if n_records == 0 {
            return Err(Error::EmptyInput("no records to take medians over".into()));
        }
        let spilled_runs = self.cols.iter().map(ExternalMedian::spilled_runs).sum();
        let [pv, re, be, ae] = self.cols.map(ExternalMedian::finish);
        let m = |r: Result<Option<f64>>| r.map(|v| v.expect("non-empty column"));
        Ok((
            Medians {
                median_pv: m(pv)?,
                median_re: m(re)?,
                median_be: m(be)?,
                median_ae: m(ae)?,
            },
            MedianRun {
                n_records,
                spilled_runs,
            },
        ))
    }
}

/// Exact lower medians of each column, spilling to `spill_dir` above `budget_bytes`.
pub fn compute_medians(
    records: impl IntoIterator<Item = MedianInput>,
    budget_bytes: usize,
    spill_dir: &Path,
) -> Result<(Medians, MedianRun)> {
    let mut set = MedianSet::new(budget_bytes, spill_dir);
    for r in records {
        set.push(r)?;
    }
    set.finish()
}

/// Frozen corpus statistics, persisted as `stats.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    #[serde(flatten)]
    pub medians: Medians,
    pub endex_mean: f64,
    pub endex_std: f64,
    pub n_records: u64,
}

impl CorpusStats {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::file(path, format!("invalid stats: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pv_cases() {
        assert_eq!(popularity_value(3, 5), 11.0);
        assert_eq!(popularity_value(0, 0), 0.0);
        assert_eq!(popularity_value(1, 0), 2.0);
    }

    #[test]
    fn adjust_cases() {
        // 4 + (10/2) * (4/20) * 4
        assert_eq!(popularity_adjust(4.0, 20.0, 10.0, 2.0).unwrap(), 8.0);
        assert_eq!(popularity_adjust(0.0, 20.0, 10.0, 2.0).unwrap(), 0.0);
        assert_eq!(popularity_adjust(0.0, 0.0, 10.0, 2.0).unwrap(), 0.0);
        // pv clamped to 1
        assert_eq!(popularity_adjust(4.0, 0.0, 10.0, 2.0).unwrap(), 84.0);
        assert!(popularity_adjust(4.0, 1.0, 10.0, 0.0).unwrap_err().is_config());
    }

    #[test]
    fn medians_small() {
        let dir = tempfile::tempdir().unwrap();
        let rows = [1.0, 2.0, 3.0, 4.0].map(|v| MedianInput {
            pv: v,
            re_raw: v * 2.0,
            be_raw: 5.0 - v,
            ae_raw: 0.0,
        });
        let (m, run) = compute_medians(rows, 1 << 20, dir.path()).unwrap();
        assert_eq!(m.median_pv, 2.0);
        assert_eq!(m.median_re, 4.0);
        assert_eq!(m.median_be, 2.0);
        assert_eq!(run.n_records, 4);
        assert!(compute_medians([], 1024, dir.path()).is_err());
    }

    #[test]
    fn stats_json_is_flat() {
        let s = CorpusStats {
            medians: Medians {
                median_pv: 1.0,
                median_re: 2.0,
                median_be: 3.0,
                median_ae: 4.0,
            },
            endex_mean: 0.5,
            endex_std: 0.1,
            n_records: 7,
        };
        let v: serde_json::Value = serde_json::to_value(s).unwrap();
        assert_eq!(v["median_re"], 2.0);
        let back: CorpusStats = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }
}
