//! Sparse rows, libsvm text ingestion and the synthetic low-rank generator.
//!
//! A [`SparseDataset`] never has to hold the whole matrix: file-backed
//! datasets are re-read on every pass, and only a sparse table of byte
//! offsets (one per [`CHECKPOINT_STRIDE`] rows) is kept so that workers can
//! jump to their own row range.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{gaussian_matrix, gram_schmidt, LinalgError};
use crate::splitmix::{mix64, SplitMix64};

/// Rows between two recorded byte offsets of a file-backed dataset.
pub const CHECKPOINT_STRIDE: usize = 1024;

#[derive(Debug, Error)]
pub enum SparseIoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("feature index {index} does not fit declared dimension p = {declared}")]
    Dimension { index: usize, declared: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("read failed at byte offset {offset}: {message}")]
    Stream { offset: u64, message: String },
    #[error("invalid row: {0}")]
    InvalidRow(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One example `x_i`: strictly increasing 0-based feature ids with finite
/// values, plus an optional label that PCA ignores.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    indices: Vec<usize>,
    values: Vec<f64>,
    label: Option<f64>,
}

impl SparseRow {
    /// Validating constructor.
    pub fn new(
        indices: Vec<usize>,
        values: Vec<f64>,
        label: Option<f64>,
    ) -> Result<Self, SparseIoError> {
        if indices.len() != values.len() {
            return Err(SparseIoError::InvalidRow(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SparseIoError::InvalidRow(
                "indices must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SparseIoError::InvalidRow("non-finite value".into()));
        }
        Ok(Self {
            indices,
            values,
            label,
        })
    }

    /// Builds a row from unordered `(index, value)` pairs; repeated indices
    /// are summed.
    pub fn from_pairs(
        mut pairs: Vec<(usize, f64)>,
        label: Option<f64>,
    ) -> Result<Self, SparseIoError> {
        pairs.sort_by_key(|&(i, _)| i);
        let mut indices: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if indices.last() == Some(&i) {
                *values.last_mut().expect("parallel vectors") += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        Self::new(indices, values, label)
    }

    /// Sparse view of a dense vector, dropping exact zeros.
    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        Self {
            indices,
            values,
            label: None,
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Option<f64> {
        self.label
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Iterator over `(feature id, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().copied()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Exact sparse inner product.
    pub fn dot(&self, other: &SparseRow) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut sum = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    sum += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        sum
    }

    /// Dense copy of length `p`. Panics if an index is out of range.
    pub fn to_dense(&self, p: usize) -> Vec<f64> {
        let mut out = vec![0.0; p];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    /// Every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            label: self.label,
        }
    }

    fn clear(&mut self) {
        self.indices.clear();
        self.values.clear();
        self.label = None;
    }
}

#[derive(Debug, Clone)]
enum Source {
    File {
        path: PathBuf,
        /// Byte offset of row `j * CHECKPOINT_STRIDE`.
        checkpoints: Arc<Vec<u64>>,
    },
    Memory(Arc<Vec<SparseRow>>),
}

/// Row-major sparse matrix `X` with `n` examples and `p` features.
///
/// Cloning is cheap; clones share the underlying rows or file index, so a
/// handle can be given to each worker thread.
#[derive(Debug, Clone)]
pub struct SparseDataset {
    source: Source,
    n: usize,
    p: usize,
}

impl SparseDataset {
    /// In-memory dataset. `p` defaults to max index + 1.
    pub fn from_rows(
        rows: Vec<SparseRow>,
        declared_p: Option<usize>,
    ) -> Result<Self, SparseIoError> {
        let observed = rows
            .iter()
            .filter_map(SparseRow::max_index)
            .max()
            .map_or(0, |m| m + 1);
        let p = resolve_p(observed, declared_p)?;
        Ok(Self {
            n: rows.len(),
            p,
            source: Source::Memory(Arc::new(rows)),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn path(&self) -> Option<&Path> {
        match &self.source {
            Source::File { path, .. } => Some(path),
            Source::Memory(_) => None,
        }
    }

    /// Streams all rows in file order.
    pub fn stream_rows(&self) -> RowIter<'_> {
        self.stream_range(0..self.n)
    }

    /// Streams rows `range.start..range.end`.
    pub fn stream_range(&self, range: Range<usize>) -> RowIter<'_> {
        let range = range.start.min(self.n)..range.end.min(self.n);
        match &self.source {
            Source::Memory(rows) => RowIter::Memory(rows[range].iter()),
            Source::File { path, checkpoints } => {
                RowIter::File(FileRows::open(path, checkpoints, range))
            }
        }
    }

    /// Calls `f` on every row of `range` without cloning in-memory rows.
    pub fn for_each_in_range<F>(&self, range: Range<usize>, mut f: F) -> Result<(), SparseIoError>
    where
        F: FnMut(&SparseRow),
    {
        let range = range.start.min(self.n)..range.end.min(self.n);
        match &self.source {
            Source::Memory(rows) => {
                rows[range].iter().for_each(f);
                Ok(())
            }
            Source::File { path, checkpoints } => {
                let mut rows = FileRows::open(path, checkpoints, range);
                let mut row = SparseRow::empty();
                while rows.next_into(&mut row)? {
                    f(&row);
                }
                Ok(())
            }
        }
    }

    /// Collects every row into memory.
    pub fn to_rows(&self) -> Result<Vec<SparseRow>, SparseIoError> {
        self.stream_rows().collect()
    }

    /// Same rows held in memory.
    pub fn to_memory(&self) -> Result<Self, SparseIoError> {
        Ok(Self {
            source: Source::Memory(Arc::new(self.to_rows()?)),
            n: self.n,
            p: self.p,
        })
    }
}

fn resolve_p(observed: usize, declared: Option<usize>) -> Result<usize, SparseIoError> {
    match declared {
        Some(d) if d < observed => Err(SparseIoError::Dimension {
            index: observed - 1,
            declared: d,
        }),
        Some(d) => Ok(d),
        None => Ok(observed),
    }
}

/// Iterator returned by [`SparseDataset::stream_rows`].
pub enum RowIter<'a> {
    Memory(std::slice::Iter<'a, SparseRow>),
    File(FileRows),
}

impl Iterator for RowIter<'_> {
    type Item = Result<SparseRow, SparseIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            RowIter::Memory(it) => it.next().cloned().map(Ok),
            RowIter::File(rows) => {
                let mut row = SparseRow::empty();
                match rows.next_into(&mut row) {
                    Ok(true) => Some(Ok(row)),
                    Ok(false) => None,
                    Err(e) => {
                        rows.remaining = 0;
                        Some(Err(e))
                    }
                }
            }
        }
    }
}

/// Lazily parsed rows of a libsvm file.
pub struct FileRows {
    reader: Option<BufReader<File>>,
    pending_error: Option<SparseIoError>,
    offset: u64,
    to_skip: usize,
    remaining: usize,
    line: String,
}

impl FileRows {
    fn open(path: &Path, checkpoints: &[u64], range: Range<usize>) -> Self {
        let remaining = range.end.saturating_sub(range.start);
        let block = range.start / CHECKPOINT_STRIDE;
        let offset = checkpoints.get(block).copied().unwrap_or(0);
        let mut this = Self {
            reader: None,
            pending_error: None,
            offset,
            to_skip: range.start - block * CHECKPOINT_STRIDE,
            remaining,
            line: String::new(),
        };
        if remaining == 0 {
            return this;
        }
        let opened = File::open(path).and_then(|mut f| {
            f.seek(SeekFrom::Start(offset))?;
            Ok(f)
        });
        match opened {
            Ok(f) => this.reader = Some(BufReader::new(f)),
            Err(e) => {
                this.pending_error = Some(SparseIoError::Stream {
                    offset,
                    message: e.to_string(),
                })
            }
        }
        this
    }

    /// Parses the next row into `row`; `Ok(false)` at the end of the range.
    fn next_into(&mut self, row: &mut SparseRow) -> Result<bool, SparseIoError> {
        if let Some(e) = self.pending_error.take() {
            return Err(e);
        }
        while self.remaining > 0 {
            let reader = match self.reader.as_mut() {
                Some(r) => r,
                None => return Ok(false),
            };
            self.line.clear();
            let start = self.offset;
            let read = reader
                .read_line(&mut self.line)
                .map_err(|e| SparseIoError::Stream {
                    offset: start,
                    message: e.to_string(),
                })?;
            if read == 0 {
                return Err(SparseIoError::Stream {
                    offset: start,
                    message: format!("file ended with {} rows still expected", self.remaining),
                });
            }
            self.offset += read as u64;
            if self.line.trim().is_empty() {
                continue;
            }
            if self.to_skip > 0 {
                self.to_skip -= 1;
                continue;
            }
            parse_line_into(&self.line, row).map_err(|message| SparseIoError::Stream {
                offset: start,
                message,
            })?;
            self.remaining -= 1;
            return Ok(true);
        }
        Ok(false)
    }
}

/// Parses one `label idx:val ...` line (1-based indices) into `row`.
fn parse_line_into(line: &str, row: &mut SparseRow) -> Result<(), String> {
    row.clear();
    let mut tokens = line.split_whitespace();
    let label_token = tokens.next().ok_or("missing label")?;
    let label: f64 = label_token
        .parse()
        .map_err(|_| format!("malformed label {label_token:?}"))?;
    if !label.is_finite() {
        return Err(format!("non-finite label {label_token:?}"));
    }
    row.label = Some(label);
    let mut sorted = true;
    for token in tokens {
        let (idx, val) = token
            .split_once(':')
            .ok_or_else(|| format!("malformed token {token:?}, expected idx:val"))?;
        let idx: i64 = idx
            .parse()
            .map_err(|_| format!("malformed index in {token:?}"))?;
        if idx < 1 {
            return Err(format!("index {idx} in {token:?}; indices are 1-based"));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| format!("malformed value in {token:?}"))?;
        if !val.is_finite() {
            return Err(format!("non-finite value in {token:?}"));
        }
        let idx = (idx - 1) as usize;
        if let Some(&last) = row.indices.last() {
            sorted &= idx > last;
        }
        row.indices.push(idx);
        row.values.push(val);
    }
    if !sorted {
        let pairs: Vec<(usize, f64)> = row.iter().collect();
        let label = row.label;
        *row = SparseRow::from_pairs(pairs, label).map_err(|e| e.to_string())?;
    }
    Ok(())
}

/// Reads and validates a libsvm file, recording its shape and seek
/// checkpoints. Rows are parsed again lazily on every pass.
///
/// Whitespace-only lines are skipped and do not count as rows.
pub fn parse_libsvm(
    path: impl AsRef<Path>,
    declared_p: Option<usize>,
) -> Result<SparseDataset, SparseIoError> {
    let path = path.as_ref().to_path_buf();
    let io_err = |source| SparseIoError::Io {
        path: path.clone(),
        source,
    };
    let mut reader = BufReader::new(File::open(&path).map_err(io_err)?);
    let mut line = String::new();
    let mut row = SparseRow::empty();
    let mut checkpoints = Vec::new();
    let mut offset = 0u64;
    let mut n = 0usize;
    let mut line_no = 0usize;
    let mut observed = 0usize;
    loop {
        line.clear();
        let read = reader.read_line(&mut line).map_err(io_err)?;
        if read == 0 {
            break;
        }
        line_no += 1;
        let start = offset;
        offset += read as u64;
        if line.trim().is_empty() {
            continue;
        }
        parse_line_into(&line, &mut row).map_err(|message| SparseIoError::Parse {
            line: line_no,
            message,
        })?;
        if let Some(m) = row.max_index() {
            observed = observed.max(m + 1);
            if let Some(d) = declared_p {
                if m >= d {
                    return Err(SparseIoError::Dimension {
                        index: m,
                        declared: d,
                    });
                }
            }
        }
        if n.is_multiple_of(CHECKPOINT_STRIDE) {
            checkpoints.push(start);
        }
        n += 1;
    }
    let p = resolve_p(observed, declared_p)?;
    Ok(SparseDataset {
        source: Source::File {
            path,
            checkpoints: Arc::new(checkpoints),
        },
        n,
        p,
    })
}

/// Shortest decimal that parses back to exactly `v`.
pub fn format_f64(v: f64) -> String {
    let mut buf = ryu::Buffer::new();
    buf.format_finite(v).to_owned()
}

/// Writes one row as `label idx:val ...` with 1-based indices. A missing
/// label is written as `0`; integral labels have no fractional part.
pub fn write_row<W: Write>(out: &mut W, row: &SparseRow) -> io::Result<()> {
    let mut buf = ryu::Buffer::new();
    let label = row.label.unwrap_or(0.0);
    if label.fract() == 0.0 && label.abs() < 9.0e15 {
        write!(out, "{}", label as i64)?;
    } else {
        out.write_all(buf.format_finite(label).as_bytes())?;
    }
    for (i, v) in row.iter() {
        write!(out, " {}:{}", i + 1, buf.format_finite(v))?;
    }
    out.write_all(b"\n")
}

/// Writes every row of `ds` in libsvm format.
pub fn write_libsvm<W: Write>(ds: &SparseDataset, out: &mut W) -> Result<(), SparseIoError> {
    let mut failure = None;
    ds.for_each_in_range(0..ds.n(), |row| {
        if failure.is_none() {
            failure = write_row(out, row).err();
        }
    })?;
    match failure {
        Some(e) => Err(SparseIoError::Stream {
            offset: 0,
            message: e.to_string(),
        }),
        None => Ok(()),
    }
}

/// Parameters of [`synth_lowrank`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub p: usize,
    /// Planted singular values, nonincreasing and positive; its length is the rank.
    pub spectrum: Vec<f64>,
    pub noise_sigma: f64,
    pub density: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn rank(&self) -> usize {
        self.spectrum.len()
    }

    fn validate(&self) -> Result<(), SparseIoError> {
        let bad = |m: &str| Err(SparseIoError::InvalidArgument(m.into()));
        if self.n == 0 || self.p == 0 {
            return bad("n and p must be positive");
        }
        if self.spectrum.is_empty() || self.rank() > self.n.min(self.p) {
            return bad("rank must be in 1..=min(n, p)");
        }
        if self.spectrum.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("spectrum entries must be positive and finite");
        }
        if self.spectrum.windows(2).any(|w| w[0] < w[1]) {
            return bad("spectrum must be nonincreasing");
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise sigma must be nonnegative");
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad("density must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Draws `X = sum_j spectrum[j] u_j v_j^T + noise`, with random orthonormal
/// `u_j`, `v_j`, then keeps each entry with probability `density`.
///
/// Fully determined by `spec.seed`. Rows carry label 0.
pub fn synth_lowrank(spec: &SynthSpec) -> Result<SparseDataset, SparseIoError> {
    spec.validate()?;
    let r = spec.rank();
    let u = gram_schmidt(&gaussian_matrix(spec.n, r, mix64(spec.seed ^ 1)))?;
    let mut v = gram_schmidt(&gaussian_matrix(spec.p, r, mix64(spec.seed ^ 2)))?;
    // Fold the spectrum into V so each entry is a length-r dot product.
    for row in 0..spec.p {
        for (j, s) in spec.spectrum.iter().enumerate() {
            v[(row, j)] *= s;
        }
    }
    let mut noise = GaussianStream::new(mix64(spec.seed ^ 3));
    let mut mask = SplitMix64::new(mix64(spec.seed ^ 4));

    let mut rows = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let ui = u.row(i);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for col in 0..spec.p {
            let keep = spec.density >= 1.0 || mask.next_f64() < spec.density;
            let eps = if spec.noise_sigma > 0.0 {
                spec.noise_sigma * noise.next()
            } else {
                0.0
            };
            if !keep {
                continue;
            }
            let value: f64 = ui.iter().zip(v.row(col)).map(|(a, b)| a * b).sum::<f64>() + eps;
            if value != 0.0 {
                indices.push(col);
                values.push(value);
            }
        }
        rows.push(SparseRow {
            indices,
            values,
            label: Some(0.0),
        });
    }
    SparseDataset::from_rows(rows, Some(spec.p))
}

/// Standard normals one at a time, caching the second Box–Muller draw.
struct GaussianStream {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl GaussianStream {
    fn new(seed: u64) -> Self {
        Self {
            rng: SplitMix64::new(seed),
            spare: None,
        }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.rng.next_gaussian_pair();
        self.spare = Some(b);
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_file(contents: &str) -> tempfile_lite::TempPath {
        tempfile_lite::TempPath::with_contents(contents)
    }

    /// Minimal self-cleaning temp file for unit tests.
    mod tempfile_lite {
        use std::path::{Path, PathBuf};
        use std::sync::atomic::{AtomicUsize, Ordering};

        static COUNTER: AtomicUsize = AtomicUsize::new(0);

        pub struct TempPath(PathBuf);

        impl TempPath {
            pub fn with_contents(contents: &str) -> Self {
                let id = COUNTER.fetch_add(1, Ordering::Relaxed);
                let path = std::env::temp_dir()
                    .join(format!("hpca-sparse-io-{}-{id}.svm", std::process::id()));
                std::fs::write(&path, contents).unwrap();
                Self(path)
            }
        }

        impl AsRef<Path> for TempPath {
            fn as_ref(&self) -> &Path {
                &self.0
            }
        }

        impl Drop for TempPath {
            fn drop(&mut self) {
                let _ = std::fs::remove_file(&self.0);
            }
        }
    }

    #[test]
    fn duplicate_indices_are_summed_and_shifted() {
        let f = temp_file("1 3:2.0 3:1.0 7:4.0\n");
        let ds = parse_libsvm(&f, None).unwrap();
        let rows = ds.to_rows().unwrap();
        assert_eq!(rows[0].indices(), &[2, 6]);
        assert_eq!(rows[0].values(), &[3.0, 4.0]);
        assert_eq!(rows[0].label(), Some(1.0));
    }

    #[test]
    fn label_only_line_is_an_empty_row() {
        let f = temp_file("0 \n");
        let ds = parse_libsvm(&f, None).unwrap();
        let rows = ds.to_rows().unwrap();
        assert_eq!(ds.n(), 1);
        assert!(rows[0].is_empty());
        assert_eq!(rows[0].label(), Some(0.0));
    }

    #[test]
    fn p_is_max_index_plus_one() {
        let f = temp_file("1 1:1\n0 5:2\n1 2:3 3:1\n");
        let ds = parse_libsvm(&f, None).unwrap();
        assert_eq!((ds.n(), ds.p()), (3, 5));
        let padded = parse_libsvm(&f, Some(10)).unwrap();
        assert_eq!(padded.p(), 10);
    }

    #[test]
    fn unsorted_tokens_are_normalized() {
        let f = temp_file("1 7:1 2:2 7:0.5\n");
        let rows = parse_libsvm(&f, None).unwrap().to_rows().unwrap();
        assert_eq!(rows[0].indices(), &[1, 6]);
        assert_eq!(rows[0].values(), &[2.0, 1.5]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        for (text, line) in [
            ("1 1:1\n1 2:x\n", 2),
            ("1 1:1\n1 0:3\n", 2),
            ("1 -2:3\n", 1),
            ("1 3:inf\n", 1),
            ("1 3:NaN\n", 1),
            ("1 3\n", 1),
            ("abc 3:1\n", 1),
        ] {
            let f = temp_file(text);
            match parse_libsvm(&f, None) {
                Err(SparseIoError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn declared_p_too_small() {
        let f = temp_file("1 4:1\n");
        assert!(matches!(
            parse_libsvm(&f, Some(3)),
            Err(SparseIoError::Dimension {
                index: 3,
                declared: 3
            })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            parse_libsvm("/nonexistent/hpca/file.svm", None),
            Err(SparseIoError::Io { .. })
        ));
    }

    #[test]
    fn in_memory_streams_in_insertion_order() {
        let a = SparseRow::new(vec![0], vec![1.0], None).unwrap();
        let b = SparseRow::new(vec![1, 3], vec![2.0, 3.0], None).unwrap();
        let ds = SparseDataset::from_rows(vec![a.clone(), b.clone()], None).unwrap();
        let rows: Vec<_> = ds.stream_rows().map(Result::unwrap).collect();
        assert_eq!(rows, vec![a, b]);
        assert_eq!(ds.p(), 4);
    }

    #[test]
    fn empty_dataset_streams_nothing() {
        let ds = SparseDataset::from_rows(vec![], None).unwrap();
        assert_eq!(ds.stream_rows().count(), 0);
        let f = temp_file("");
        let ds = parse_libsvm(&f, None).unwrap();
        assert_eq!((ds.n(), ds.p()), (0, 0));
        assert_eq!(ds.stream_rows().count(), 0);
    }

    #[test]
    fn file_streaming_is_repeatable_and_ranged() {
        let mut text = String::new();
        for i in 0..(2 * CHECKPOINT_STRIDE + 17) {
            text.push_str(&format!("{} {}:{}\n\n", i % 2, i % 50 + 1, i));
        }
        let f = temp_file(&text);
        let ds = parse_libsvm(&f, None).unwrap();
        assert_eq!(ds.n(), 2 * CHECKPOINT_STRIDE + 17);
        let first = ds.to_rows().unwrap();
        let second = ds.to_rows().unwrap();
        assert_eq!(first, second);
        let start = CHECKPOINT_STRIDE + 3;
        let part: Vec<_> = ds
            .stream_range(start..start + 1000)
            .map(Result::unwrap)
            .collect();
        assert_eq!(part.as_slice(), &first[start..start + 1000]);
    }

    #[test]
    fn truncated_file_reports_offset() {
        let f = temp_file("1 1:1\n1 2:2\n");
        let ds = parse_libsvm(&f, None).unwrap();
        std::fs::write(&f, "1 1:1\n").unwrap();
        let results: Vec<_> = ds.stream_rows().collect();
        assert_eq!(results.len(), 2);
        assert!(matches!(
            results[1],
            Err(SparseIoError::Stream { offset: 6, .. })
        ));
    }

    #[test]
    fn writer_output_reparses() {
        let f = temp_file("1 3:2.5 3:1.0 7:-4e-3\n-1 \n0.5 1:0.1\n");
        let ds = parse_libsvm(&f, None).unwrap();
        let mut out = Vec::new();
        write_libsvm(&ds, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "1 3:3.5 7:-0.004\n-1\n0.5 1:0.1\n");
        let g = temp_file(&text);
        let again = parse_libsvm(&g, None).unwrap();
        assert_eq!(again.to_rows().unwrap(), ds.to_rows().unwrap());
    }

    #[test]
    fn row_constructor_validates() {
        assert!(SparseRow::new(vec![1, 1], vec![1.0, 2.0], None).is_err());
        assert!(SparseRow::new(vec![2, 1], vec![1.0, 2.0], None).is_err());
        assert!(SparseRow::new(vec![1], vec![f64::NAN], None).is_err());
        assert!(SparseRow::new(vec![1], vec![], None).is_err());
    }

    #[test]
    fn sparse_dot_matches_dense() {
        let a = SparseRow::new(vec![0, 2, 5], vec![1.0, 2.0, 3.0], None).unwrap();
        let b = SparseRow::new(vec![2, 3, 5], vec![4.0, 1.0, -1.0], None).unwrap();
        assert_eq!(a.dot(&b), 5.0);
    }

    #[test]
    fn synth_rejects_bad_arguments() {
        let base = SynthSpec {
            n: 4,
            p: 4,
            spectrum: vec![1.0],
            noise_sigma: 0.0,
            density: 1.0,
            seed: 1,
        };
        assert!(synth_lowrank(&base).is_ok());
        let cases = [
            SynthSpec {
                spectrum: vec![1.0, 2.0],
                ..base.clone()
            },
            SynthSpec {
                spectrum: vec![1.0; 5],
                ..base.clone()
            },
            SynthSpec {
                spectrum: vec![0.0],
                ..base.clone()
            },
            SynthSpec {
                density: 0.0,
                ..base.clone()
            },
            SynthSpec {
                noise_sigma: -1.0,
                ..base.clone()
            },
            SynthSpec {
                n: 0,
                ..base.clone()
            },
        ];
        for spec in cases {
            assert!(matches!(
                synth_lowrank(&spec),
                Err(SparseIoError::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn synth_is_deterministic_and_sparsifies() {
        let spec = SynthSpec {
            n: 30,
            p: 40,
            spectrum: vec![3.0, 1.0],
            noise_sigma: 0.1,
            density: 0.25,
            seed: 9,
        };
        let a = synth_lowrank(&spec).unwrap().to_rows().unwrap();
        let b = synth_lowrank(&spec).unwrap().to_rows().unwrap();
        assert_eq!(a, b);
        let nnz: usize = a.iter().map(SparseRow::nnz).sum();
        let frac = nnz as f64 / 1200.0;
        assert!((frac - 0.25).abs() < 0.05, "{frac}");
    }

    #[test]
    fn write_row_to_buffer() {
        let mut out = Vec::new();
        let row = SparseRow::new(vec![0, 9], vec![1.5, -2.0], None).unwrap();
        write_row(&mut out, &row).unwrap();
        out.flush().unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "0 1:1.5 10:-2.0\n");
    }
}
