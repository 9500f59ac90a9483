//! Seeded generator of comment dumps with realistic thread shapes.

use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const WORDS: &[&str] = &[
    "guitar",
    "practice",
    "chords",
    "song",
    "album",
    "drums",
    "bass",
    "tempo",
    "melody",
    "studio",
    "the",
    "a",
    "is",
    "it",
    "and",
    "you",
    "i",
    "to",
    "of",
    "that",
    "this",
    "was",
    "what",
    "how",
    "really",
    "pretty",
    "honestly",
    "maybe",
    "great",
    "love",
    "thanks",
    "awesome",
    "boring",
    "weird",
    "tonight",
    "weekend",
    "recording",
    "vinyl",
    "concert",
    "ticket",
    "lyrics",
    "verse",
    "bridge",
    "pedal",
    "amp",
    "string",
    "pick",
    "fret",
    "scale",
    "riff",
    "solo",
    "band",
    "tour",
    "crowd",
];

/// Writes `n` records in threads of 4 to 16 posts.
pub fn write_corpus(path: &Path, n: usize, seed: u64) -> std::io::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let mut written = 0usize;
    let mut thread = 0usize;
    while written < n {
        let size = rng.random_range(4..=16).min(n - written);
        let ids: Vec<String> = (0..size).map(|k| format!("s{thread}x{k}")).collect();
        for k in 0..size {
            let parent = if k == 0 {
                format!("t3_link{thread}")
            } else if rng.random_bool(0.7) {
                format!("t1_{}", ids[k - 1])
            } else {
                format!("t1_{}", ids[rng.random_range(0..k)])
            };
            let len = rng.random_range(1..=25);
            let mut body: Vec<&str> = (0..len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
            let roll = rng.random_range(0..100);
            if roll < 2 {
                body.push("idiot");
            } else if roll < 4 {
                body.insert(0, "&gt;");
            }
            let rec = json!({
                "id": ids[k],
                "parent_id": parent,
                "body": body.join(" "),
                "ups": rng.random_range(0..40),
                "downs": rng.random_range(0..6),
                "controversiality": u8::from(rng.random_bool(0.05)),
                "edited": rng.random_bool(0.1),
                "subreddit": "music",
                "created_utc": 1_500_000_000 + written as i64,
            });
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
            written += 1;
        }
        thread += 1;
    }
    w.flush()
}
