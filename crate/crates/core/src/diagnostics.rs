//! Desk-scale measurements of how far the hashed principal subspace is
//! from the exact one, and of the quantities that control that distance:
//! coherence of the rows, Gram-matrix perturbation, and the spectral gap.
//!
//! Everything here materializes something of size `n x n` or `n x p`, so
//! each entry point carries an explicit size guard.

use std::fmt;
use std::num::NonZeroUsize;

use thiserror::Error;

use crate::hashing::Projector;
use crate::linalg::{
    dot, gram_schmidt, oracle_svd, DenseMatrix, LinalgError, ORACLE_MAX_ENTRIES, ORACLE_MAX_SIDE,
};
use crate::pca::{fit_transform, HpcaConfig, PcaError};
use crate::sparse_io::{format_f64, SparseDataset, SparseIoError, SparseRow};

/// Largest `n` for the all-pairs coherence.
pub const ETA_PAIRWISE_MAX_ROWS: usize = 10_000;
/// Largest `n` for which two `n x n` Gram matrices are compared.
pub const GRAM_MAX_ROWS: usize = 2000;
/// Orthonormality slack accepted by [`canonical_angles`].
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("{which} does not have orthonormal columns (max |X^T X - I| = {deviation:e})")]
    NonOrthonormal { which: &'static str, deviation: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("{guard} guard: {what} = {value} exceeds {limit}")]
    TooLarge {
        guard: &'static str,
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Data(#[from] SparseIoError),
}

/// Principal angles between two `k`-dimensional subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalAngles {
    /// Cosines of the angles, nonincreasing, in `[0, 1]`.
    pub cosines: Vec<f64>,
    /// `||sin Phi||_F`.
    pub sin_phi_frobenius: f64,
}

/// Canonical angles between the column spaces of `a` and `b`, both `n x k`
/// with orthonormal columns.
///
/// The cosines are the singular values of `A^T B`. The sine norm is taken
/// as `||B - A (A^T B)||_F`, which equals `sqrt(sum(1 - cos^2))` but keeps
/// full relative accuracy for nearly identical subspaces.
pub fn canonical_angles(
    a: &DenseMatrix,
    b: &DenseMatrix,
) -> Result<CanonicalAngles, DiagnosticsError> {
    if a.shape() != b.shape() {
        return Err(DiagnosticsError::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    for (which, m) in [("A", a), ("B", b)] {
        let deviation = crate::pca::orthonormality_error(m);
        if deviation.is_nan() || deviation > ORTHONORMAL_TOLERANCE {
            return Err(DiagnosticsError::NonOrthonormal { which, deviation });
        }
    }
    let atb = a.t_matmul(b);
    let cosines = oracle_svd(&atb)?
        .sigma
        .into_iter()
        .map(|c| c.clamp(0.0, 1.0))
        .collect();
    let residual = b.sub(&a.matmul(&atb));
    Ok(CanonicalAngles {
        cosines,
        sin_phi_frobenius: residual.frobenius_norm(),
    })
}

/// Which terms of the coherence maximum are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaMode {
    /// Rows and all row differences.
    Pairwise,
    /// Rows only; a lower bound on the full statistic.
    RowsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coherence {
    pub eta: f64,
    /// Set when pair terms were skipped.
    pub lower_bound: bool,
}

/// `||v||_inf / ||v||_2` for nonzero `v`, computed on `v / ||v||_inf` so
/// that the ratio is insensitive to the overall scale.
fn inf_to_two(v: &[f64]) -> Option<f64> {
    let inf = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if inf == 0.0 {
        return None;
    }
    let inv = 1.0 / inf;
    let mut acc = [0.0; 4];
    let chunks = v.chunks_exact(4);
    let tail: f64 = chunks.remainder().iter().map(|x| (x * inv).powi(2)).sum();
    for c in chunks {
        for lane in 0..4 {
            acc[lane] += (c[lane] * inv).powi(2);
        }
    }
    let sq = (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail;
    Some(1.0 / sq.sqrt())
}

fn row_ratio(row: &SparseRow) -> Option<f64> {
    inf_to_two(row.values())
}

/// Ratio for `a - b`, using `buf` as scratch for the stored entries of the
/// difference.
fn difference_ratio(a: &SparseRow, b: &SparseRow, buf: &mut Vec<f64>) -> Option<f64> {
    let (ai, av) = (a.indices(), a.values());
    let (bi, bv) = (b.indices(), b.values());
    buf.clear();
    if ai == bi {
        buf.extend(av.iter().zip(bv).map(|(x, y)| x - y));
        return inf_to_two(buf);
    }
    let (mut i, mut j) = (0, 0);
    while i < ai.len() || j < bi.len() {
        let take_a = j == bi.len() || (i < ai.len() && ai[i] < bi[j]);
        let take_b = i == ai.len() || (j < bi.len() && bi[j] < ai[i]);
        if take_a {
            buf.push(av[i]);
            i += 1;
        } else if take_b {
            buf.push(-bv[j]);
            j += 1;
        } else {
            buf.push(av[i] - bv[j]);
            i += 1;
            j += 1;
        }
    }
    inf_to_two(buf)
}

fn worker_count() -> usize {
    std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

/// Runs `f(i)` for `i in 0..n` on all cores (strided assignment) and folds
/// the per-thread results with `combine`.
fn parallel_fold<T, F, C>(n: usize, init: T, f: F, combine: C) -> T
where
    T: Send + Clone,
    F: Fn(usize, &mut T) + Sync,
    C: Fn(T, T) -> T,
{
    let workers = worker_count().min(n.max(1));
    let partials: Vec<T> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let mut local = init.clone();
                let f = &f;
                scope.spawn(move || {
                    let mut i = w;
                    while i < n {
                        f(i, &mut local);
                        i += workers;
                    }
                    local
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    partials.into_iter().fold(init, combine)
}

/// Coherence `eta`: the largest `inf`-to-2 norm ratio over the rows and,
/// in pairwise mode, over all differences of two distinct rows. Zero rows
/// and identical pairs are skipped; `eta = 0` if nothing remains.
pub fn coherence_eta(ds: &SparseDataset, mode: EtaMode) -> Result<Coherence, DiagnosticsError> {
    if mode == EtaMode::Pairwise && ds.n() > ETA_PAIRWISE_MAX_ROWS {
        return Err(DiagnosticsError::TooLarge {
            guard: "pairwise coherence",
            what: "n",
            value: ds.n(),
            limit: ETA_PAIRWISE_MAX_ROWS,
        });
    }
    match mode {
        EtaMode::RowsOnly => {
            let mut eta = 0.0_f64;
            ds.for_each_in_range(0..ds.n(), |row| {
                if let Some(r) = row_ratio(row) {
                    eta = eta.max(r);
                }
            })?;
            Ok(Coherence {
                eta,
                lower_bound: true,
            })
        }
        EtaMode::Pairwise => Ok(Coherence {
            eta: pairwise_eta(&ds.to_rows()?),
            lower_bound: false,
        }),
    }
}

fn pairwise_eta(rows: &[SparseRow]) -> f64 {
    parallel_fold(
        rows.len(),
        (0.0_f64, Vec::new()),
        |i, (best, buf)| {
            if let Some(r) = row_ratio(&rows[i]) {
                *best = best.max(r);
            }
            for other in &rows[i + 1..] {
                if let Some(r) = difference_ratio(&rows[i], other, buf) {
                    *best = best.max(r);
                }
            }
        },
        |a, b| (a.0.max(b.0), Vec::new()),
    )
    .0
}

/// Exact Gram matrix `X X^T`. Row `i` is scattered into a dense buffer and
/// dotted against the stored entries of every later row.
pub fn exact_gram(rows: &[SparseRow]) -> DenseMatrix {
    let n = rows.len();
    let width = rows
        .iter()
        .filter_map(SparseRow::max_index)
        .max()
        .map_or(0, |m| m + 1);
    let (upper, _) = parallel_fold(
        n,
        (Vec::<(usize, Vec<f64>)>::new(), Vec::new()),
        |i, (out, scratch)| {
            let xi = &rows[i];
            scratch.resize(width, 0.0);
            for (k, v) in xi.iter() {
                scratch[k] = v;
            }
            let vals = rows[i..]
                .iter()
                .map(|r| {
                    if r.indices() == xi.indices() {
                        dot(r.values(), xi.values())
                    } else {
                        r.iter().map(|(k, v)| scratch[k] * v).sum()
                    }
                })
                .collect();
            for &k in xi.indices() {
                scratch[k] = 0.0;
            }
            out.push((i, vals));
        },
        |(mut a, _), (b, _)| {
            a.extend(b);
            (a, Vec::new())
        },
    );
    symmetric_from_upper(n, upper)
}

fn symmetric_from_upper(n: usize, upper: Vec<(usize, Vec<f64>)>) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(n, n);
    for (i, vals) in upper {
        for (off, v) in vals.into_iter().enumerate() {
            g[(i, i + off)] = v;
            g[(i + off, i)] = v;
        }
    }
    g
}

/// `||(XH)(XH)^T - X X^T||_F` given the exact Gram matrix.
pub fn gram_perturbation_with(
    rows: &[SparseRow],
    exact: &DenseMatrix,
    projector: &Projector,
) -> Result<f64, DiagnosticsError> {
    let n = rows.len();
    if exact.shape() != (n, n) {
        return Err(DiagnosticsError::ShapeMismatch(format!(
            "Gram matrix is {}x{}, expected {n}x{n}",
            exact.rows(),
            exact.cols()
        )));
    }
    let hashed = rows
        .iter()
        .map(|r| projector.apply(r).map(|v| v.into_vec()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(PcaError::from)?;
    let sum_sq = parallel_fold(
        n,
        0.0_f64,
        |i, acc| {
            for j in i..n {
                let diff = dot(&hashed[i], &hashed[j]) - exact[(i, j)];
                *acc += if i == j {
                    diff * diff
                } else {
                    2.0 * diff * diff
                };
            }
        },
        |a, b| a + b,
    );
    Ok(sum_sq.sqrt())
}

/// `||(XH)(XH)^T - X X^T||_F` for `n <= GRAM_MAX_ROWS`.
pub fn gram_perturbation(
    ds: &SparseDataset,
    projector: &Projector,
) -> Result<f64, DiagnosticsError> {
    guard_gram(ds.n())?;
    let rows = ds.to_rows()?;
    let exact = exact_gram(&rows);
    gram_perturbation_with(&rows, &exact, projector)
}

fn guard_gram(n: usize) -> Result<(), DiagnosticsError> {
    if n > GRAM_MAX_ROWS {
        return Err(DiagnosticsError::TooLarge {
            guard: "Gram perturbation",
            what: "n",
            value: n,
            limit: GRAM_MAX_ROWS,
        });
    }
    Ok(())
}

/// `ceil(144 ln(n / delta) / epsilon^2)`, at least 1.
pub fn recommended_d(n: usize, epsilon: f64, delta: f64) -> usize {
    let raw = (144.0 * (n as f64 / delta).ln() / (epsilon * epsilon)).ceil();
    if raw < 1.0 {
        1
    } else {
        raw as usize
    }
}

/// Largest coherence admitted for `(n, d, epsilon, delta)`:
/// `epsilon / (18 sqrt(2 ln(n/delta) ln(d/delta)))`.
pub fn eta_threshold(n: usize, d: usize, epsilon: f64, delta: f64) -> f64 {
    let ln_n = (n as f64 / delta).ln();
    let ln_d = (d as f64 / delta).ln();
    epsilon / (18.0 * (2.0 * ln_n * ln_d).sqrt())
}

fn check_epsilon_delta(epsilon: f64, delta: f64) -> Result<(), DiagnosticsError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

/// Exact quantities of one dataset, independent of the hash draw.
#[derive(Debug, Clone)]
pub struct ExactReference {
    pub k: usize,
    /// Top-`k` left singular vectors of `X` (`n x k`).
    pub u1: DenseMatrix,
    /// All singular values of `X`, nonincreasing.
    pub sigma: Vec<f64>,
    /// `X X^T`.
    pub gram: DenseMatrix,
    pub coherence: Coherence,
    rows: Vec<SparseRow>,
}

impl ExactReference {
    /// Runs the oracle SVD, the exact Gram matrix and the coherence.
    pub fn compute(ds: &SparseDataset, k: usize) -> Result<Self, DiagnosticsError> {
        let (n, p) = (ds.n(), ds.p());
        if n.min(p) > ORACLE_MAX_SIDE || n.saturating_mul(p) > ORACLE_MAX_ENTRIES {
            return Err(DiagnosticsError::TooLarge {
                guard: "exact SVD",
                what: "n*p",
                value: n.saturating_mul(p),
                limit: ORACLE_MAX_ENTRIES,
            });
        }
        guard_gram(n)?;
        if k == 0 || k > n.min(p) {
            return Err(DiagnosticsError::InvalidArgument(format!(
                "k = {k} must lie in 1..=min(n, p) = {}",
                n.min(p)
            )));
        }
        let rows = ds.to_rows()?;
        let mut dense = DenseMatrix::zeros(n, p);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter() {
                dense[(i, j)] = v;
            }
        }
        let svd = oracle_svd(&dense)?;
        drop(dense);
        let gram = exact_gram(&rows);
        let coherence = Coherence {
            eta: pairwise_eta(&rows),
            lower_bound: false,
        };
        Ok(Self {
            k,
            u1: svd.u.leading_columns(k),
            sigma: svd.sigma,
            gram,
            coherence,
            rows,
        })
    }

    /// `alpha`: the largest squared singular value outside the top `k`.
    pub fn alpha(&self) -> f64 {
        self.sigma.get(self.k).map_or(0.0, |s| s * s)
    }
}

/// Every measured quantity for one fit against the exact decomposition.
/// Squared singular values use the Gram convention (`X X^T`, no `1/n`).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub cosines: Vec<f64>,
    pub sin_phi_frobenius: f64,
    pub eta: f64,
    pub eta_lower_bound: bool,
    pub gram_perturbation_fro: f64,
    /// Largest exact tail eigenvalue `sigma_{k+1}^2`.
    pub alpha: f64,
    /// `min(hashed sigma^2) - alpha`; negative when the gap is violated.
    pub gamma: f64,
    pub gap_violated: bool,
    pub epsilon: f64,
    pub delta: f64,
    pub recommended_d: usize,
    pub eta_threshold: f64,
    pub eta_condition_met: bool,
}

impl fmt::Display for DiagnosticsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fl = |v: f64| format_f64(v);
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "d={}", self.d)?;
        writeln!(f, "k={}", self.k)?;
        writeln!(f, "sin_phi_frobenius={}", fl(self.sin_phi_frobenius))?;
        let cos: Vec<String> = self.cosines.iter().map(|c| fl(*c)).collect();
        writeln!(f, "cosines={}", cos.join(","))?;
        writeln!(f, "eta={}", fl(self.eta))?;
        writeln!(f, "eta_lower_bound={}", self.eta_lower_bound)?;
        writeln!(
            f,
            "gram_perturbation_fro={}",
            fl(self.gram_perturbation_fro)
        )?;
        writeln!(f, "alpha={}", fl(self.alpha))?;
        writeln!(f, "gamma={}", fl(self.gamma))?;
        writeln!(f, "gap_violated={}", self.gap_violated)?;
        writeln!(f, "epsilon={}", fl(self.epsilon))?;
        writeln!(f, "delta={}", fl(self.delta))?;
        writeln!(f, "recommended_d={}", self.recommended_d)?;
        writeln!(f, "recommended_d_formula=ceil(144*ln(n/delta)/epsilon^2)")?;
        writeln!(f, "eta_threshold={}", fl(self.eta_threshold))?;
        writeln!(
            f,
            "eta_threshold_formula=epsilon/(18*sqrt(2*ln(n/delta)*ln(d/delta)))"
        )?;
        writeln!(f, "eta_condition_met={}", self.eta_condition_met)
    }
}

/// Fits `cfg` on `ds` and measures it against a precomputed exact reference.
pub fn compare_with_reference(
    ds: &SparseDataset,
    cfg: &HpcaConfig,
    reference: &ExactReference,
    epsilon: f64,
    delta: f64,
) -> Result<DiagnosticsReport, DiagnosticsError> {
    check_epsilon_delta(epsilon, delta)?;
    if cfg.k != reference.k || reference.u1.rows() != ds.n() {
        return Err(DiagnosticsError::ShapeMismatch(
            "reference was computed for a different k or dataset".into(),
        ));
    }
    let n = ds.n();
    let (model, scores) = fit_transform(ds, cfg)?;
    let hashed_u1 = gram_schmidt(&scores)?;
    let angles = canonical_angles(&reference.u1, &hashed_u1)?;

    let min_hashed_sq = model
        .singular_values()
        .iter()
        .map(|s| n as f64 * s * s)
        .fold(f64::INFINITY, f64::min);
    let alpha = reference.alpha();
    let gamma = min_hashed_sq - alpha;
    let gram_perturbation_fro =
        gram_perturbation_with(&reference.rows, &reference.gram, &cfg.projector)?;
    let eta_threshold = eta_threshold(n, cfg.d(), epsilon, delta);
    Ok(DiagnosticsReport {
        n,
        d: cfg.d(),
        k: cfg.k,
        cosines: angles.cosines,
        sin_phi_frobenius: angles.sin_phi_frobenius,
        eta: reference.coherence.eta,
        eta_lower_bound: reference.coherence.lower_bound,
        gram_perturbation_fro,
        alpha,
        gamma,
        gap_violated: gamma.is_nan() || gamma <= 0.0,
        epsilon,
        delta,
        recommended_d: recommended_d(n, epsilon, delta),
        eta_threshold,
        eta_condition_met: reference.coherence.eta <= eta_threshold,
    })
}

/// Exact decomposition plus one hashed fit, compared.
pub fn compare_to_exact(
    ds: &SparseDataset,
    cfg: &HpcaConfig,
    epsilon: f64,
    delta: f64,
) -> Result<DiagnosticsReport, DiagnosticsError> {
    check_epsilon_delta(epsilon, delta)?;
    cfg.validate()?;
    let reference = ExactReference::compute(ds, cfg.k)?;
    compare_with_reference(ds, cfg, &reference, epsilon, delta)
}

/// Median of a nonempty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
