//! Correlation of engagement metrics with human judgments.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dataset::rng_for;
use crate::error::{Error, Result};
use crate::text::{self, StopwordList};

const STREAM_RANDOM_BASELINE: u64 = 10;

const QUESTION_WORDS: [&str; 15] = [
    "who", "what", "when", "where", "why", "how", "do", "does", "did", "is", "are", "can", "could", "would",
    "will",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenExample {
    pub context: String,
    pub response: String,
    pub human_score: f64,
    pub dataset_tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoldenFormat {
    Csv,
    Jsonl,
}

impl GoldenFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("csv") => Ok(Self::Csv),
            Some("jsonl" | "ndjson" | "json") => Ok(Self::Jsonl),
            _ => Err(Error::file(
                path,
                "unknown golden-set format (expected .csv or .jsonl)",
            )),
        }
    }
}

fn parse_score(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn dataset_tag(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("golden")
        .to_string()
}

/// Load a golden set with `context`, `response` and `score` fields.
pub fn load_golden(path: &Path, format: GoldenFormat) -> Result<Vec<GoldenExample>> {
    let tag = dataset_tag(path);
    match format {
        GoldenFormat::Csv => load_csv(path, &tag),
        GoldenFormat::Jsonl => {
            let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            read_jsonl(std::io::BufReader::new(file), path, &tag)
        }
    }
}

fn load_csv(path: &Path, tag: &str) -> Result<Vec<GoldenExample>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::file(path, e.to_string()))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::file(path, e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::file(path, format!("missing column `{name}`")))
    };
    let (c, r, s) = (col("context")?, col("response")?, col("score")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::data(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, name: &str| {
            rec.get(i)
                .ok_or_else(|| Error::data(path, line, format!("missing `{name}`")))
        };
        let raw = field(s, "score")?;
        let human_score =
            parse_score(raw).ok_or_else(|| Error::data(path, line, format!("non-numeric score {raw:?}")))?;
        out.push(GoldenExample {
            context: field(c, "context")?.to_string(),
            response: field(r, "response")?.to_string(),
            human_score,
            dataset_tag: tag.to_string(),
        });
    }
    Ok(out)
}

pub fn read_jsonl(reader: impl BufRead, path: &Path, tag: &str) -> Result<Vec<GoldenExample>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Value = serde_json::from_str(&line)
            .map_err(|e| Error::data(path, lineno, format!("malformed JSON: {e}")))?;
        let text_field = |name: &str| {
            obj.get(name)
                .and_then(Value::as_str)
                .map(String::from)
                .ok_or_else(|| Error::data(path, lineno, format!("missing `{name}`")))
        };
        let human_score = match obj.get("score") {
            Some(Value::Number(n)) => n.as_f64().filter(|v| v.is_finite()),
            Some(Value::String(s)) => parse_score(s),
            _ => return Err(Error::data(path, lineno, "missing `score`")),
        }
        .ok_or_else(|| Error::data(path, lineno, format!("non-numeric score {}", obj["score"])))?;
        out.push(GoldenExample {
            context: text_field("context")?,
            response: text_field("response")?,
            human_score,
            dataset_tag: tag.to_string(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Random { seed: u64 },
    Question,
    Specificity,
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Random { .. } => "random",
            Baseline::Question => "question",
            Baseline::Specificity => "specificity",
        }
    }
}

/// 1 if the response asks a question, 0 otherwise.
pub fn question_score(response: &str) -> f64 {
    let asks = response.contains('?')
        || text::tokenize(response)
            .next()
            .is_some_and(|first| QUESTION_WORDS.contains(&first.as_str()));
    if asks {
        1.0
    } else {
        0.0
    }
}

pub fn baseline_scores(examples: &[GoldenExample], baseline: Baseline, stopwords: &StopwordList) -> Vec<f64> {
    match baseline {
        Baseline::Random { seed } => {
            let mut rng = rng_for(seed, STREAM_RANDOM_BASELINE);
            examples.iter().map(|_| rng.random::<f64>()).collect()
        }
        Baseline::Question => examples.iter().map(|e| question_score(&e.response)).collect(),
        Baseline::Specificity => examples
            .iter()
            .map(|e| text::specificity(&e.response, stopwords) as f64)
            .collect(),
    }
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

/// Sample Pearson correlation. Exactly one constant input yields 0 (with a
/// warning); two constant inputs are an error.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateCorpus(format!(
            "correlation needs at least 2 points, got {}",
            xs.len()
        )));
    }
    match (is_constant(xs), is_constant(ys)) {
        (true, true) => {
            return Err(Error::DegenerateCorpus("both inputs are constant".into()));
        }
        (true, false) | (false, true) => {
            log::warn!("one correlation input is constant; reporting 0");
            return Ok(0.0);
        }
        _ => {}
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their rank span.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && v[order[j]] == v[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
    pub n: usize,
}

/// Both correlations between human scores and aligned metric scores.
pub fn evaluate(golden: &[GoldenExample], metric_scores: &[f64]) -> Result<Correlation> {
    if golden.len() != metric_scores.len() {
        return Err(Error::LengthMismatch {
            left: golden.len(),
            right: metric_scores.len(),
        });
    }
    let human: Vec<f64> = golden.iter().map(|g| g.human_score).collect();
    if human.is_empty() || is_constant(&human) {
        return Err(Error::DegenerateCorpus(
            "golden set needs at least two distinct human scores".into(),
        ));
    }
    Ok(Correlation {
        pearson: pearson(&human, metric_scores)?,
        spearman: spearman(&human, metric_scores)?,
        n: human.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub metric: String,
    #[serde(flatten)]
    pub result: Option<Correlation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rows: Vec<ReportRow>,
}

impl CorrelationReport {
    pub fn push(&mut self, dataset: &str, metric: &str, result: Result<Correlation>) {
        let (result, error) = match result {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        };
        self.rows.push(ReportRow {
            dataset: dataset.to_string(),
            metric: metric.to_string(),
            result,
            error,
        });
    }

    pub fn get(&self, dataset: &str, metric: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.metric == metric)
    }

    /// Metrics as rows, datasets as column pairs of (P, S).
    pub fn render_table(&self) -> String {
        let mut datasets: Vec<&str> = Vec::new();
        let mut metrics: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !datasets.contains(&r.dataset.as_str()) {
                datasets.push(&r.dataset);
            }
            if !metrics.contains(&r.metric.as_str()) {
                metrics.push(&r.metric);
            }
        }
        let width = datasets.iter().map(|d| d.len()).max().unwrap_or(0).max(15);
        let mut s = String::new();
        let _ = write!(s, "{:<16}", "Metric");
        for d in &datasets {
            let _ = write!(s, " | {d:^width$}");
        }
        s.push('\n');
        let _ = write!(s, "{:<16}", "");
        for _ in &datasets {
            let _ = write!(s, " | {:^w$}", format!("{:>7} {:>7}", "P", "S"), w = width);
        }
        s.push('\n');
        for m in &metrics {
            let _ = write!(s, "{m:<16}");
            for d in &datasets {
                let cell = match self.get(d, m) {
                    Some(ReportRow { result: Some(c), .. }) => {
                        format!("{:>7.3} {:>7.3}", c.pearson, c.spearman)
                    }
                    Some(_) => format!("{:>15}", "error"),
                    None => format!("{:>15}", "-"),
                };
                let _ = write!(s, " | {cell:^width$}");
            }
            s.push('\n');
        }
        for r in self.rows.iter().filter(|r| r.error.is_some()) {
            let _ = writeln!(
                s,
                "! {}/{}: {}",
                r.dataset,
                r.metric,
                r.error.as_deref().unwrap_or("")
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn ex(resp: &str, score: f64) -> GoldenExample {
        GoldenExample {
            context: "ctx".into(),
            response: resp.into(),
            human_score: score,
            dataset_tag: "t".into(),
        }
    }

    #[test]
    fn csv_and_jsonl_agree() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("set.csv");
        let mut f = std::fs::File::create(&csv_path).unwrap();
        writeln!(f, "context,response,score").unwrap();
        writeln!(f, "hi,\"hello, you\",1").unwrap();
        writeln!(f, "how are you,fine?,2.5").unwrap();
        writeln!(f, "bye,see ya,0").unwrap();
        drop(f);
        let jsonl_path = dir.path().join("set.jsonl");
        std::fs::write(
            &jsonl_path,
            "{\"context\":\"hi\",\"response\":\"hello, you\",\"score\":1}\n\
             {\"context\":\"how are you\",\"response\":\"fine?\",\"score\":\"2.5\"}\n\
             {\"context\":\"bye\",\"response\":\"see ya\",\"score\":0}\n",
        )
        .unwrap();
        let a = load_golden(&csv_path, GoldenFormat::Csv).unwrap();
        let b = load_golden(&jsonl_path, GoldenFormat::from_path(&jsonl_path).unwrap()).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a, b);
    }

    #[test]
    fn bad_score_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "context,response,score\na,b,1\nc,d,N/A\n").unwrap();
        match load_golden(&p, GoldenFormat::Csv) {
            Err(Error::Data { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("N/A"));
            }
            other => panic!("{other:?}"),
        }
        let p = dir.path().join("nocol.csv");
        std::fs::write(&p, "context,reply,score\na,b,1\n").unwrap();
        assert!(load_golden(&p, GoldenFormat::Csv)
            .unwrap_err()
            .to_string()
            .contains("response"));
    }

    #[test]
    fn baselines() {
        let sw = StopwordList::english();
        let set = [
            ex("Why though?", 1.0),
            ex("ok", 2.0),
            ex("How about pizza tonight", 3.0),
        ];
        assert_eq!(
            baseline_scores(&set, Baseline::Question, &sw),
            vec![1.0, 0.0, 1.0]
        );
        let spec = baseline_scores(&set, Baseline::Specificity, &sw);
        assert!(spec[1] <= 1.0);
        // "how" and "about" are stopwords
        assert_eq!(spec[2], 2.0);
        let r1 = baseline_scores(&set, Baseline::Random { seed: 4 }, &sw);
        assert_eq!(r1, baseline_scores(&set, Baseline::Random { seed: 4 }, &sw));
        assert!(r1.iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn pearson_cases() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let lin: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &lin).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&xs, &[3.0; 4]).unwrap(), 0.0);
        assert!(pearson(&[1.0; 3], &[3.0; 3]).is_err());
        assert!(pearson(&xs, &[1.0]).is_err());
    }

    #[test]
    fn ranks_and_spearman_ties() {
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
        let s = spearman(&[1.0, 2.0, 2.0, 3.0], &[10.0, 20.0, 20.0, 30.0]).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        let xs = [0.1, 0.5, 0.2, 3.0, 9.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.exp() * 5.0).collect();
        assert!((spearman(&xs, &ys).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn evaluate_identity_and_degenerate() {
        let set = [ex("a", 1.0), ex("b", 3.0), ex("c", 2.0)];
        let c = evaluate(&set, &[1.0, 3.0, 2.0]).unwrap();
        assert!((c.pearson - 1.0).abs() < 1e-15 && (c.spearman - 1.0).abs() < 1e-15);
        assert_eq!(c.n, 3);
        assert!(evaluate(&set, &[1.0]).is_err());
        let flat = [ex("a", 1.0), ex("b", 1.0)];
        assert!(evaluate(&flat, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn report_table_lists_every_metric() {
        let mut rep = CorrelationReport::default();
        for m in ["random", "question", "specificity"] {
            rep.push(
                "better",
                m,
                Ok(Correlation {
                    pearson: 0.1,
                    spearman: 0.2,
                    n: 10,
                }),
            );
        }
        rep.push("flat", "random", Err(Error::DegenerateCorpus("x".into())));
        let t = rep.render_table();
        assert_eq!(rep.rows.len(), 4);
        assert!(t.contains("question") && t.contains("error"));
        let json = serde_json::to_string(&rep).unwrap();
        let back: CorrelationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rep);
    }
}
