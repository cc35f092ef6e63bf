//! Truncated PCA of hashed data with a two-pass randomized range finder.
//!
//! The fit works on the hashed empirical covariance `C = (XH)^T (XH) / n`
//! but never forms it. Each pass streams the rows once and accumulates
//! `sum_i (H^T x_i) ((H^T x_i)^T M)` for a `d x l` probe `M`:
//!
//! 1. `Omega` (`d x l`) is drawn i.i.d. standard normal,
//! 2. `Y = C Omega` (first pass),
//! 3. `Q` is an orthonormal basis of `span(Y)`,
//! 4. `Z = C Q` (second pass),
//! 5. `Z^T Z = U S^4 U^T` is diagonalized (`l x l`),
//! 6. the loadings are `Z U (S^2)^+` and the singular values `S`.
//!
//! Working storage is a handful of `d x l` matrices. With centering on, a
//! third pass (run first) computes the hashed mean `m`, and `m (m^T M)` is
//! subtracted from every pass result.

use std::io::{self, BufRead, Write};
use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::hashing::{HashError, HashSpec, Projector};
use crate::linalg::{
    self, axpy, dot, fix_sign, gaussian_matrix, gram_schmidt, pinv_diag, sym_eig, DenseMatrix,
    LinalgError,
};
use crate::sparse_io::{format_f64, SparseDataset, SparseIoError, SparseRow};

/// Rows per work unit in non-deterministic parallel passes.
pub const DYNAMIC_CHUNK_ROWS: usize = 4096;

/// Relative size of the first-pass image below which the (centered)
/// covariance is treated as exactly zero. Centering cancels against the
/// uncentered second moment, leaving roundoff of order `1e-16` of it.
pub const ZERO_VARIANCE_TOLERANCE: f64 = 1e-10;

/// Version tag on the first line of a model file.
pub const MODEL_VERSION: &str = "HPCA1";

#[derive(Debug, Error)]
pub enum PcaError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("need more rows than components (n = {n}, k = {k})")]
    TooFewRows { n: usize, k: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Data(#[from] SparseIoError),
    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },
    #[error("unsupported model version {0:?}")]
    UnsupportedVersion(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// How a pass distributes rows over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Execution {
    pub workers: usize,
    /// Contiguous row ranges merged in worker order; bit-reproducible for a
    /// fixed worker count. Otherwise workers pull chunks dynamically.
    pub deterministic: bool,
}

impl Default for Execution {
    fn default() -> Self {
        Self {
            workers: 1,
            deterministic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpcaConfig {
    /// Number of components returned.
    pub k: usize,
    /// Probe columns; `k <= l <= d`.
    pub l: usize,
    pub seed_omega: u64,
    pub projector: Projector,
    pub center: bool,
    pub deterministic_reduce: bool,
    pub workers: usize,
}

impl HpcaConfig {
    /// `k` components through `projector`, with `l = k`, no centering and a
    /// single deterministic worker.
    pub fn new(k: usize, projector: impl Into<Projector>) -> Self {
        Self {
            k,
            l: k,
            seed_omega: 0,
            projector: projector.into(),
            center: false,
            deterministic_reduce: true,
            workers: 1,
        }
    }

    pub fn with_oversampling(mut self, l: usize) -> Self {
        self.l = l;
        self
    }

    pub fn with_seed(mut self, seed_omega: u64) -> Self {
        self.seed_omega = seed_omega;
        self
    }

    pub fn with_center(mut self, center: bool) -> Self {
        self.center = center;
        self
    }

    pub fn with_workers(mut self, workers: usize, deterministic: bool) -> Self {
        self.workers = workers;
        self.deterministic_reduce = deterministic;
        self
    }

    pub fn d(&self) -> usize {
        self.projector.dim()
    }

    pub fn execution(&self) -> Execution {
        Execution {
            workers: self.workers.max(1),
            deterministic: self.deterministic_reduce,
        }
    }

    pub fn validate(&self) -> Result<(), PcaError> {
        let d = self.d();
        if self.k == 0 {
            return Err(PcaError::InvalidConfig("k must be at least 1".into()));
        }
        if self.l < self.k || self.l > d {
            return Err(PcaError::InvalidConfig(format!(
                "need k <= l <= d, got k = {}, l = {}, d = {d}",
                self.k, self.l
            )));
        }
        let identity = matches!(self.projector, Projector::Identity { .. });
        if !identity && self.k >= d {
            return Err(PcaError::InvalidConfig(format!(
                "need k < d, got k = {}, d = {d}",
                self.k
            )));
        }
        Ok(())
    }

    /// Bytes of dense state the fit keeps live at its peak: three `d x l`
    /// matrices during orthonormalization plus one spare, and the mean.
    pub fn peak_accumulator_bytes(&self) -> usize {
        let f = std::mem::size_of::<f64>();
        4 * self.d() * self.l * f + if self.center { self.d() * f } else { 0 }
    }
}

/// Running sums of one pass over a block of rows.
#[derive(Debug, Clone)]
pub struct PassAccumulator {
    acc: DenseMatrix,
    mean_acc: Option<Vec<f64>>,
    count: usize,
    scratch: Vec<f64>,
    /// `(bucket, signed value)` pairs of the current row.
    projected: Vec<(usize, f64)>,
}

impl PassAccumulator {
    pub fn new(d: usize, l: usize, track_mean: bool) -> Self {
        Self {
            acc: DenseMatrix::zeros(d, l),
            mean_acc: track_mean.then(|| vec![0.0; d]),
            count: 0,
            scratch: vec![0.0; l],
            projected: Vec::new(),
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Unnormalized `sum_i (H^T x_i)((H^T x_i)^T M)` so far.
    pub fn sum(&self) -> &DenseMatrix {
        &self.acc
    }

    pub fn mean_sum(&self) -> Option<&[f64]> {
        self.mean_acc.as_deref()
    }

    /// Adds one row in `O(nnz * l)`.
    pub fn accumulate(
        &mut self,
        projector: &Projector,
        probe: &DenseMatrix,
        row: &SparseRow,
    ) -> Result<(), HashError> {
        let projected = &mut self.projected;
        projected.clear();
        projector.for_each_projected(row, |bucket, value| projected.push((bucket, value)))?;
        let t = &mut self.scratch;
        t.iter_mut().for_each(|v| *v = 0.0);
        for &(bucket, value) in projected.iter() {
            axpy(value, probe.row(bucket), t);
        }
        for &(bucket, value) in projected.iter() {
            axpy(value, t, self.acc.row_mut(bucket));
            if let Some(m) = self.mean_acc.as_mut() {
                m[bucket] += value;
            }
        }
        self.count += 1;
        Ok(())
    }

    /// Folds `other` into `self`.
    pub fn merge(&mut self, other: &PassAccumulator) {
        self.acc.add_assign(&other.acc);
        if let (Some(a), Some(b)) = (self.mean_acc.as_mut(), other.mean_acc.as_ref()) {
            axpy(1.0, b, a);
        }
        self.count += other.count;
    }

    /// `sum / n`, minus `m (m^T M)` when a mean is given.
    pub fn finish(self, probe: &DenseMatrix, center_mean: Option<&[f64]>) -> DenseMatrix {
        let mut out = self.acc;
        out.scale(1.0 / self.count as f64);
        if let Some(m) = center_mean {
            let mt_probe = probe.t_mul_vec(m);
            for (r, &mr) in m.iter().enumerate() {
                axpy(-mr, &mt_probe, out.row_mut(r));
            }
        }
        out
    }
}

fn accumulate_range(
    ds: &SparseDataset,
    range: Range<usize>,
    projector: &Projector,
    probe: &DenseMatrix,
    into: &mut PassAccumulator,
) -> Result<(), PcaError> {
    let mut failure = None;
    ds.for_each_in_range(range, |row| {
        if failure.is_none() {
            failure = into.accumulate(projector, probe, row).err();
        }
    })?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// Streams `ds` once and returns the merged, unnormalized accumulator.
pub fn run_pass(
    ds: &SparseDataset,
    projector: &Projector,
    probe: &DenseMatrix,
    track_mean: bool,
    exec: Execution,
) -> Result<PassAccumulator, PcaError> {
    let d = projector.dim();
    if probe.rows() != d {
        return Err(PcaError::DimensionMismatch(format!(
            "probe has {} rows, projection has d = {d}",
            probe.rows()
        )));
    }
    let n = ds.n();
    let l = probe.cols();
    let workers = exec.workers.clamp(1, n.max(1));
    if workers == 1 {
        let mut acc = PassAccumulator::new(d, l, track_mean);
        accumulate_range(ds, 0..n, projector, probe, &mut acc)?;
        return Ok(acc);
    }

    let partials: Vec<Result<PassAccumulator, PcaError>> = if exec.deterministic {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let range = (n * w / workers)..(n * (w + 1) / workers);
                    scope.spawn(move || {
                        let mut acc = PassAccumulator::new(d, l, track_mean);
                        accumulate_range(ds, range, projector, probe, &mut acc).map(|_| acc)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("pass worker panicked"))
                .collect()
        })
    } else {
        let next = AtomicUsize::new(0);
        let done = Mutex::new(Vec::with_capacity(workers));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| {
                    let mut acc = PassAccumulator::new(d, l, track_mean);
                    let result = loop {
                        let start = next.fetch_add(DYNAMIC_CHUNK_ROWS, Ordering::Relaxed);
                        if start >= n {
                            break Ok(acc);
                        }
                        let end = (start + DYNAMIC_CHUNK_ROWS).min(n);
                        if let Err(e) = accumulate_range(ds, start..end, projector, probe, &mut acc)
                        {
                            break Err(e);
                        }
                    };
                    done.lock().expect("poisoned").push(result);
                });
            }
        });
        done.into_inner().expect("poisoned")
    };

    let mut merged: Option<PassAccumulator> = None;
    for part in partials {
        let part = part?;
        match merged.as_mut() {
            None => merged = Some(part),
            Some(m) => m.merge(&part),
        }
    }
    Ok(merged.expect("at least one worker"))
}

/// `(XH)^T (XH) M / n`, minus `m (m^T M)` when `center_mean` is given.
pub fn pass(
    ds: &SparseDataset,
    projector: &Projector,
    probe: &DenseMatrix,
    center_mean: Option<&[f64]>,
    exec: Execution,
) -> Result<DenseMatrix, PcaError> {
    if ds.is_empty() {
        return Err(PcaError::EmptyDataset);
    }
    if let Some(m) = center_mean {
        if m.len() != projector.dim() {
            return Err(PcaError::DimensionMismatch(format!(
                "mean has length {}, expected {}",
                m.len(),
                projector.dim()
            )));
        }
    }
    let acc = run_pass(ds, projector, probe, false, exec)?;
    Ok(acc.finish(probe, center_mean))
}

/// `(1/n) sum_i H^T x_i`.
pub fn hashed_mean(
    ds: &SparseDataset,
    projector: &Projector,
    exec: Execution,
) -> Result<Vec<f64>, PcaError> {
    if ds.is_empty() {
        return Err(PcaError::EmptyDataset);
    }
    let empty = DenseMatrix::zeros(projector.dim(), 0);
    let acc = run_pass(ds, projector, &empty, true, exec)?;
    let n = acc.count() as f64;
    let mut mean = acc.mean_acc.expect("mean tracked");
    mean.iter_mut().for_each(|v| *v /= n);
    Ok(mean)
}

/// Fitted loadings and singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    loadings: DenseMatrix,
    singular_values: Vec<f64>,
    hashed_mean: Option<Vec<f64>>,
    projector: Projector,
    n_fit: usize,
    whitening: Vec<f64>,
    /// `V^T m`, cached for centered projection.
    mean_scores: Option<Vec<f64>>,
}

impl PcaModel {
    /// Assembles a model, checking shapes.
    pub fn new(
        loadings: DenseMatrix,
        singular_values: Vec<f64>,
        hashed_mean: Option<Vec<f64>>,
        projector: Projector,
        n_fit: usize,
    ) -> Result<Self, PcaError> {
        let d = projector.dim();
        let k = singular_values.len();
        if loadings.shape() != (d, k) {
            return Err(PcaError::DimensionMismatch(format!(
                "loadings are {}x{}, expected {d}x{k}",
                loadings.rows(),
                loadings.cols()
            )));
        }
        if let Some(m) = &hashed_mean {
            if m.len() != d {
                return Err(PcaError::DimensionMismatch(format!(
                    "mean has length {}, expected {d}",
                    m.len()
                )));
            }
        }
        if singular_values
            .iter()
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return Err(PcaError::InvalidConfig(
                "singular values must be finite and nonnegative".into(),
            ));
        }
        let whitening = pinv_diag(&singular_values);
        let mean_scores = hashed_mean.as_ref().map(|m| loadings.t_mul_vec(m));
        Ok(Self {
            loadings,
            singular_values,
            hashed_mean,
            projector,
            n_fit,
            whitening,
            mean_scores,
        })
    }

    pub fn loadings(&self) -> &DenseMatrix {
        &self.loadings
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn hashed_mean(&self) -> Option<&[f64]> {
        self.hashed_mean.as_deref()
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    pub fn k(&self) -> usize {
        self.singular_values.len()
    }

    pub fn d(&self) -> usize {
        self.projector.dim()
    }

    pub fn n_fit(&self) -> usize {
        self.n_fit
    }

    pub fn is_centered(&self) -> bool {
        self.hashed_mean.is_some()
    }

    /// `V^T (H^T x - m)` in `O(nnz * k)` (the mean term is cached).
    pub fn project_unwhitened(&self, x: &SparseRow) -> Result<Vec<f64>, PcaError> {
        let mut out = vec![0.0; self.k()];
        self.projector.for_each_projected(x, |bucket, value| {
            axpy(value, self.loadings.row(bucket), &mut out)
        })?;
        if let Some(ms) = &self.mean_scores {
            axpy(-1.0, ms, &mut out);
        }
        Ok(out)
    }

    /// `S^+ V^T (H^T x - m)`: component scores with unit variance on the
    /// training data.
    pub fn project_whitened(&self, x: &SparseRow) -> Result<Vec<f64>, PcaError> {
        let mut out = self.project_unwhitened(x)?;
        for (o, w) in out.iter_mut().zip(&self.whitening) {
            *o *= w;
        }
        Ok(out)
    }

    /// Writes the versioned text model.
    pub fn write_to<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let join = |vals: &[f64]| -> String {
            vals.iter()
                .map(|v| format_f64(*v))
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(
            out,
            "{MODEL_VERSION} {} {} {} {}",
            self.k(),
            self.d(),
            self.n_fit,
            u8::from(self.is_centered())
        )?;
        match self.projector {
            Projector::Hashed(spec) => writeln!(out, "hash {} {}", spec.seed_h(), spec.seed_xi())?,
            Projector::Identity { .. } => writeln!(out, "identity")?,
        }
        writeln!(out, "{}", join(&self.singular_values))?;
        if let Some(m) = &self.hashed_mean {
            writeln!(out, "{}", join(m))?;
        }
        for r in 0..self.d() {
            writeln!(out, "{}", join(self.loadings.row(r)))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("model text is ASCII")
    }

    /// Parses a model written by [`PcaModel::write_to`].
    pub fn read_from<R: BufRead>(input: R) -> Result<Self, PcaError> {
        let mut lines = input.lines().enumerate();
        let mut next_line = |what: &str| -> Result<(usize, String), PcaError> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(PcaError::ModelFormat {
                    line: 0,
                    message: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let bad = |line: usize, message: String| PcaError::ModelFormat { line, message };

        let (ln, header) = next_line("header")?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        match fields.first() {
            Some(&MODEL_VERSION) => {}
            Some(other) => return Err(PcaError::UnsupportedVersion(other.to_string())),
            None => return Err(bad(ln, "empty header".into())),
        }
        if fields.len() != 5 {
            return Err(bad(
                ln,
                format!("header needs 5 fields, found {}", fields.len()),
            ));
        }
        let int = |s: &str, line: usize| -> Result<usize, PcaError> {
            s.parse()
                .map_err(|_| bad(line, format!("expected a nonnegative integer, found {s:?}")))
        };
        let k = int(fields[1], ln)?;
        let d = int(fields[2], ln)?;
        let n_fit = int(fields[3], ln)?;
        let centered = match fields[4] {
            "0" => false,
            "1" => true,
            other => {
                return Err(bad(
                    ln,
                    format!("center flag must be 0 or 1, found {other:?}"),
                ))
            }
        };

        let (ln, proj_line) = next_line("projection")?;
        let proj: Vec<&str> = proj_line.split_whitespace().collect();
        let projector = match proj.as_slice() {
            ["hash", seed_h, seed_xi] => {
                let parse = |s: &str| -> Result<u64, PcaError> {
                    s.parse().map_err(|_| bad(ln, format!("bad seed {s:?}")))
                };
                Projector::Hashed(HashSpec::new(d, parse(seed_h)?, parse(seed_xi)?)?)
            }
            ["identity"] => Projector::identity(d)?,
            _ => {
                return Err(bad(
                    ln,
                    format!("unrecognized projection line {proj_line:?}"),
                ))
            }
        };

        let floats = |text: &str, line: usize, expected: usize| -> Result<Vec<f64>, PcaError> {
            let vals = text
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| bad(line, format!("bad number {t:?}")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if vals.len() != expected {
                return Err(bad(
                    line,
                    format!("expected {expected} values, found {}", vals.len()),
                ));
            }
            Ok(vals)
        };

        let (ln, sv_line) = next_line("singular values")?;
        let singular_values = floats(&sv_line, ln, k)?;
        let hashed_mean = if centered {
            let (ln, m) = next_line("hashed mean")?;
            Some(floats(&m, ln, d)?)
        } else {
            None
        };
        let mut data = Vec::with_capacity(d * k);
        for _ in 0..d {
            let (ln, row) = next_line("loading row")?;
            data.extend(floats(&row, ln, k)?);
        }
        if let Some((i, Ok(extra))) = lines.next() {
            if !extra.trim().is_empty() {
                return Err(bad(i + 1, "trailing data after loadings".into()));
            }
        }
        let loadings = DenseMatrix::from_vec(d, k, data)?;
        Self::new(loadings, singular_values, hashed_mean, projector, n_fit)
    }
}

/// Runs the full fit: optional mean pass, two probe passes, and the
/// `l x l` spectral step.
pub fn fit(ds: &SparseDataset, cfg: &HpcaConfig) -> Result<PcaModel, PcaError> {
    cfg.validate()?;
    let n = ds.n();
    if n == 0 {
        return Err(PcaError::EmptyDataset);
    }
    if cfg.k >= n {
        return Err(PcaError::TooFewRows { n, k: cfg.k });
    }
    if let Projector::Identity { p } = cfg.projector {
        if ds.p() > p {
            return Err(PcaError::DimensionMismatch(format!(
                "identity projection of dimension {p} cannot take p = {}",
                ds.p()
            )));
        }
    }
    let exec = cfg.execution();
    let projector = &cfg.projector;
    let d = cfg.d();
    let mean = if cfg.center {
        Some(hashed_mean(ds, projector, exec)?)
    } else {
        None
    };

    let omega = gaussian_matrix(d, cfg.l, cfg.seed_omega);
    let first = run_pass(ds, projector, &omega, false, exec)?;
    let raw_norm = first.sum().frobenius_norm() / n as f64;
    let y = first.finish(&omega, mean.as_deref());
    drop(omega);
    if y.frobenius_norm() <= ZERO_VARIANCE_TOLERANCE * raw_norm {
        // No variance left to probe (all-zero or, after centering, constant
        // data): the loadings Z U (S^2)^+ vanish identically.
        return PcaModel::new(
            DenseMatrix::zeros(d, cfg.k),
            vec![0.0; cfg.k],
            mean,
            *projector,
            n,
        );
    }
    let q = gram_schmidt(&y)?;
    drop(y);
    let z = pass(ds, projector, &q, mean.as_deref(), exec)?;
    drop(q);

    let eig = sym_eig(&z.t_matmul(&z))?;
    let k = cfg.k;
    // Eigenvalues of Z^T Z are fourth powers of the singular values.
    let fourth: Vec<f64> = eig.eigenvalues[..k].iter().map(|&v| v.max(0.0)).collect();
    let singular_values: Vec<f64> = fourth.iter().map(|v| v.sqrt().sqrt()).collect();
    let squared: Vec<f64> = fourth.iter().map(|v| v.sqrt()).collect();
    let inv_squared = pinv_diag(&squared);

    let mut loadings = z.matmul(&eig.eigenvectors.leading_columns(k));
    drop(z);
    for (c, inv) in inv_squared.iter().enumerate() {
        let mut col = loadings.column(c);
        col.iter_mut().for_each(|v| *v *= inv);
        fix_sign(&mut col);
        loadings.set_column(c, &col);
    }
    PcaModel::new(loadings, singular_values, mean, *projector, n)
}

/// Projects every row of `ds` through `model`, handing each whitened score
/// vector to `sink` in input order.
pub fn transform_rows<F>(model: &PcaModel, ds: &SparseDataset, mut sink: F) -> Result<(), PcaError>
where
    F: FnMut(&[f64]) -> Result<(), PcaError>,
{
    let mut failure: Option<PcaError> = None;
    ds.for_each_in_range(0..ds.n(), |row| {
        if failure.is_some() {
            return;
        }
        let scores = model.project_whitened(row);
        failure = scores.and_then(|s| sink(&s)).err();
    })?;
    failure.map_or(Ok(()), Err)
}

/// [`fit`] followed by a third pass computing the `n x k` whitened scores.
pub fn fit_transform(
    ds: &SparseDataset,
    cfg: &HpcaConfig,
) -> Result<(PcaModel, DenseMatrix), PcaError> {
    let model = fit(ds, cfg)?;
    let mut data = Vec::with_capacity(ds.n() * model.k());
    transform_rows(&model, ds, |s| {
        data.extend_from_slice(s);
        Ok(())
    })?;
    let scores = DenseMatrix::from_vec(ds.n(), model.k(), data)?;
    Ok((model, scores))
}

/// Dense `n x d` matrix `XH`, for tests and diagnostics on small data.
pub fn materialize_projected(
    ds: &SparseDataset,
    projector: &Projector,
) -> Result<DenseMatrix, PcaError> {
    let d = projector.dim();
    let mut data = Vec::with_capacity(ds.n() * d);
    let mut failure = None;
    ds.for_each_in_range(0..ds.n(), |row| match projector.apply(row) {
        Ok(v) => data.extend_from_slice(&v),
        Err(e) => {
            failure.get_or_insert(e);
            data.extend(std::iter::repeat_n(0.0, d));
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(DenseMatrix::from_vec(ds.n(), d, data)?)
}

/// Max-abs deviation of `V^T V` from the identity.
pub fn orthonormality_error(v: &DenseMatrix) -> f64 {
    v.t_matmul(v)
        .sub(&DenseMatrix::identity(v.cols()))
        .max_abs()
}

/// Cosine between two vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (linalg::norm2(a) * linalg::norm2(b))
}
