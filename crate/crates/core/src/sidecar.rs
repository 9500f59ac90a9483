//! Id-keyed score files exchanged with external scorers.
//!
//! One JSON object per line. The key field is `post_id`, `id` or `index`
//! (integers are accepted and stringified); the value field is
//! `positive_probability`, `toxicity` or `score`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{Error, Result};

const ID_KEYS: [&str; 3] = ["post_id", "id", "index"];
const SCORE_KEYS: [&str; 3] = ["positive_probability", "toxicity", "score"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreRange {
    /// Probabilities: every score must lie in [0, 1].
    Unit,
    /// Any finite real.
    Finite,
}

#[derive(Debug, Clone)]
pub struct SidecarScores {
    path: PathBuf,
    scores: HashMap<String, f64>,
}

fn key_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        Value::Number(n) if n.is_u64() => Some(n.to_string()),
        _ => None,
    }
}

impl SidecarScores {
    pub fn load(path: &Path, range: ScoreRange) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), path, range)
    }

    pub fn read(reader: impl BufRead, path: &Path, range: ScoreRange) -> Result<Self> {
        let mut scores = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let obj: Value = serde_json::from_str(&line)
                .map_err(|e| Error::data(path, lineno, format!("malformed JSON: {e}")))?;
            let id = ID_KEYS
                .iter()
                .find_map(|k| obj.get(*k).and_then(key_string))
                .ok_or_else(|| Error::data(path, lineno, "missing id field (post_id/id/index)"))?;
            let score = SCORE_KEYS
                .iter()
                .find_map(|k| obj.get(*k).and_then(Value::as_f64))
                .ok_or_else(|| Error::data(path, lineno, "missing numeric score field"))?;
            if !score.is_finite() || (range == ScoreRange::Unit && !(0.0..=1.0).contains(&score)) {
                return Err(Error::data(path, lineno, format!("score {score} out of range")));
            }
            if scores.insert(id.clone(), score).is_some() {
                return Err(Error::data(path, lineno, format!("duplicate id {id:?}")));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            scores,
        })
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.scores.get(id).copied()
    }

    /// Score for `id`, failing with the id and file name when absent.
    pub fn require(&self, id: &str) -> Result<f64> {
        self.get(id).ok_or_else(|| Error::MissingScore {
            id: id.to_string(),
            source_name: self.path.display().to_string(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Scores for indices `0..n`, in order. Every index must be present and
    /// no other keys are allowed.
    pub fn aligned(&self, n: usize) -> Result<Vec<f64>> {
        if self.scores.len() != n {
            return Err(Error::file(
                &self.path,
                format!("expected {n} indexed scores, found {}", self.scores.len()),
            ));
        }
        (0..n)
            .map(|i| {
                self.get(&i.to_string())
                    .ok_or_else(|| Error::file(&self.path, format!("missing index {i}")))
            })
            .collect()
    }
}

/// Write `{key_field: id, score_field: score}` lines.
pub fn write_scores<'a, W: Write>(
    mut out: W,
    key_field: &str,
    score_field: &str,
    rows: impl IntoIterator<Item = (&'a str, f64)>,
) -> std::io::Result<()> {
    for (id, score) in rows {
        let mut obj = serde_json::Map::new();
        obj.insert(key_field.to_string(), Value::String(id.to_string()));
        obj.insert(score_field.to_string(), serde_json::json!(score));
        serde_json::to_writer(&mut out, &obj)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
