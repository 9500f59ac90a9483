#![allow(dead_code)]

pub mod brute;
pub mod fixture;
pub mod synth;

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use engage_core::eval::GoldenExample;
use engage_core::pipeline::{PipelineConfig, ScorerSelection};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Config for the 12-post thread with the hand-set emotion sidecar.
pub fn fixture_config(out: &Path) -> PipelineConfig {
    PipelineConfig {
        inputs: vec![fixture("thread12.jsonl")],
        out_dir: out.to_path_buf(),
        seed: 7,
        emotion: ScorerSelection::Sidecar(fixture("thread12_emotion.jsonl")),
        ..PipelineConfig::default()
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Vec<T> {
    let f = std::fs::File::open(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    BufReader::new(f)
        .lines()
        .map(|l| serde_json::from_str(&l.unwrap()).unwrap())
        .collect()
}

/// (id, body) for every post in the fixture.
pub fn fixture_bodies() -> Vec<(String, String)> {
    read_jsonl::<serde_json::Value>(&fixture("thread12.jsonl"))
        .into_iter()
        .map(|v| {
            (
                v["id"].as_str().unwrap().to_string(),
                v["body"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

/// Golden examples with Likert-style human scores.
pub fn synthetic_golden(n: usize, seed: u64) -> Vec<GoldenExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| GoldenExample {
            context: format!("context {i}"),
            response: format!("response {i}"),
            human_score: rng.random_range(1..=5) as f64,
            dataset_tag: "synthetic".into(),
        })
        .collect()
}
