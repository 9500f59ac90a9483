//! Exact lower median over a stream of reals with bounded memory.
//!
//! Values are buffered up to a budget; full buffers are sorted and spilled to
//! anonymous temp files as runs. The median is found by a k-way merge that
//! stops at rank `(n - 1) / 2`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const MIN_BUFFER: usize = 16;

pub struct ExternalMedian {
    capacity: usize,
    buf: Vec<f64>,
    runs: Vec<File>,
    count: u64,
    spill_dir: PathBuf,
}

impl ExternalMedian {
    /// `budget_bytes` bounds the in-memory buffer; spill files go to `spill_dir`.
    pub fn new(budget_bytes: usize, spill_dir: &Path) -> Self {
        let capacity = (budget_bytes / std::mem::size_of::<f64>()).max(MIN_BUFFER);
        Self {
            capacity,
            buf: Vec::new(),
            runs: Vec::new(),
            count: 0,
            spill_dir: spill_dir.to_path_buf(),
        }
    }

    pub fn push(&mut self, v: f64) -> Result<()> {
        if v.is_nan() {
            return Err(Error::DegenerateCorpus("NaN value in median input".into()));
        }
        self.buf.push(v);
        self.count += 1;
        if self.buf.len() >= self.capacity {
            self.spill()?;
        }
        Ok(())
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn spilled_runs(&self) -> usize {
        self.runs.len()
    }

    fn spill(&mut self) -> Result<()> {
        self.buf.sort_unstable_by(f64::total_cmp);
        let io = |e| Error::io(&self.spill_dir, e);
        let file = tempfile::tempfile_in(&self.spill_dir).map_err(io)?;
        let mut w = BufWriter::new(file);
        for v in &self.buf {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        let mut file = w.into_inner().map_err(|e| io(e.into_error()))?;
        file.seek(SeekFrom::Start(0)).map_err(io)?;
        self.runs.push(file);
        self.buf.clear();
        Ok(())
    }

    /// Lower median, or `None` for an empty stream.
    pub fn finish(mut self) -> Result<Option<f64>> {
        if self.count == 0 {
            return Ok(None);
        }
        let rank = ((self.count - 1) / 2) as usize;
        if self.runs.is_empty() {
            let (_, m, _) = self.buf.select_nth_unstable_by(rank, f64::total_cmp);
            return Ok(Some(*m));
        }
        self.buf.sort_unstable_by(f64::total_cmp);
        let dir = self.spill_dir.clone();
        let mut sources: Vec<Run> = self
            .runs
            .into_iter()
            .map(|f| Run::File(BufReader::with_capacity(1 << 16, f)))
            .collect();
        sources.push(Run::Memory(std::mem::take(&mut self.buf).into_iter()));

        let mut heap = BinaryHeap::with_capacity(sources.len());
        for (i, s) in sources.iter_mut().enumerate() {
            if let Some(v) = s.next(&dir)? {
                heap.push(Head(v, i));
            }
        }
        let mut seen = 0usize;
        while let Some(Head(v, i)) = heap.pop() {
            if seen == rank {
                return Ok(Some(v));
            }
            seen += 1;
            if let Some(next) = sources[i].next(&dir)? {
                heap.push(Head(next, i));
            }
        }
        unreachable!("merge exhausted before reaching rank {rank}")
    }
}

enum Run {
    File(BufReader<File>),
    Memory(std::vec::IntoIter<f64>),
}

impl Run {
    fn next(&mut self, dir: &Path) -> Result<Option<f64>> {
        match self {
            Run::Memory(it) => Ok(it.next()),
            Run::File(r) => {
                let mut bytes = [0u8; 8];
                match r.read_exact(&mut bytes) {
                    Ok(()) => Ok(Some(f64::from_le_bytes(bytes))),
                    Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Ok(None),
                    Err(e) => Err(Error::io(dir, e)),
                }
            }
        }
    }
}

// min-heap entry
struct Head(f64, usize);

impl PartialEq for Head {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Head {}
impl PartialOrd for Head {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Head {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn median_of(values: &[f64], budget: usize) -> (Option<f64>, usize) {
        let dir = tempfile::tempdir().unwrap();
        let mut m = ExternalMedian::new(budget, dir.path());
        for &v in values {
            m.push(v).unwrap();
        }
        let runs = m.spilled_runs();
        (m.finish().unwrap(), runs)
    }

    #[test]
    fn odd_even_and_empty() {
        assert_eq!(median_of(&[3.0, 1.0, 2.0], 1 << 20).0, Some(2.0));
        assert_eq!(median_of(&[4.0, 1.0, 3.0, 2.0], 1 << 20).0, Some(2.0));
        assert_eq!(median_of(&[], 1 << 20).0, None);
    }

    #[test]
    fn spilled_path_matches_sort() {
        let values: Vec<f64> = (0..1001).map(|i| ((i * 7919) % 1009) as f64).collect();
        let (m, runs) = median_of(&values, 0);
        assert!(runs > 10);
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(m, Some(sorted[500]));
    }

    #[test]
    fn nan_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = ExternalMedian::new(64, dir.path());
        assert!(m.push(f64::NAN).is_err());
    }
}
