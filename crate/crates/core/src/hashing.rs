//! Feature hashing: the implicit `p x d` projection `H` with
//! `H[i][j] = xi(i) * [h(i) == j]`.
//!
//! `H` is never materialized. A row is projected in `O(nnz)` time into a
//! single length-`d` buffer, independently of `p`.

use std::ops::Deref;

use thiserror::Error;

use crate::sparse_io::SparseRow;
use crate::splitmix::{golden_step, mix64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HashError {
    #[error("projected dimension d must be at least 1")]
    ZeroDimension,
    #[error("feature {index} is outside the identity projection of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
}

/// Seeds and output dimension that fully determine `h` and `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashSpec {
    d: usize,
    seed_h: u64,
    seed_xi: u64,
}

impl HashSpec {
    pub fn new(d: usize, seed_h: u64, seed_xi: u64) -> Result<Self, HashError> {
        if d == 0 {
            return Err(HashError::ZeroDimension);
        }
        Ok(Self { d, seed_h, seed_xi })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed_h(&self) -> u64 {
        self.seed_h
    }

    pub fn seed_xi(&self) -> u64 {
        self.seed_xi
    }

    /// Bucket `h(i)` and sign `xi(i)` of feature `i`.
    #[inline]
    pub fn hash_index(&self, i: usize) -> (usize, f64) {
        let step = golden_step(i as u64);
        let bucket = (mix64(self.seed_h ^ step) % self.d as u64) as usize;
        let sign = if mix64(self.seed_xi ^ step) >> 63 == 0 {
            1.0
        } else {
            -1.0
        };
        (bucket, sign)
    }

    /// `H^T x`.
    pub fn apply(&self, x: &SparseRow) -> HashedVector {
        let mut out = vec![0.0; self.d];
        for (i, v) in x.iter() {
            let (bucket, sign) = self.hash_index(i);
            out[bucket] += sign * v;
        }
        HashedVector(out)
    }
}

/// Dense `H^T x` of length `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct HashedVector(Vec<f64>);

impl HashedVector {
    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for HashedVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Structured projection applied to every example before the randomized
/// SVD: either a feature hash or the identity on `p` features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Projector {
    Hashed(HashSpec),
    /// `H = I_p`; only valid with `d = p`.
    Identity {
        p: usize,
    },
}

impl Projector {
    /// Identity projection on `p` features.
    pub fn identity(p: usize) -> Result<Self, HashError> {
        if p == 0 {
            return Err(HashError::ZeroDimension);
        }
        Ok(Projector::Identity { p })
    }

    /// Output dimension `d`.
    pub fn dim(&self) -> usize {
        match self {
            Projector::Hashed(spec) => spec.d,
            Projector::Identity { p } => *p,
        }
    }

    #[inline]
    pub fn bucket_sign(&self, i: usize) -> Result<(usize, f64), HashError> {
        match self {
            Projector::Hashed(spec) => Ok(spec.hash_index(i)),
            Projector::Identity { p } if i < *p => Ok((i, 1.0)),
            Projector::Identity { p } => Err(HashError::IndexOutOfRange { index: i, dim: *p }),
        }
    }

    /// Calls `f(bucket, sign * value)` for every stored entry of `x`.
    #[inline]
    pub fn for_each_projected<F>(&self, x: &SparseRow, mut f: F) -> Result<(), HashError>
    where
        F: FnMut(usize, f64),
    {
        match self {
            Projector::Hashed(spec) => {
                for (i, v) in x.iter() {
                    let (bucket, sign) = spec.hash_index(i);
                    f(bucket, sign * v);
                }
            }
            Projector::Identity { p } => {
                if let Some(m) = x.max_index().filter(|m| m >= p) {
                    return Err(HashError::IndexOutOfRange { index: m, dim: *p });
                }
                for (i, v) in x.iter() {
                    f(i, v);
                }
            }
        }
        Ok(())
    }

    /// `H^T x` as a dense length-`d` vector.
    pub fn apply(&self, x: &SparseRow) -> Result<HashedVector, HashError> {
        let mut out = vec![0.0; self.dim()];
        self.for_each_projected(x, |b, v| out[b] += v)?;
        Ok(HashedVector(out))
    }
}

impl From<HashSpec> for Projector {
    fn from(spec: HashSpec) -> Self {
        Projector::Hashed(spec)
    }
}
