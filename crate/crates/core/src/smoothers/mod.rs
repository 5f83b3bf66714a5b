//! Relaxation and incomplete-factorization smoothers.
//!
//! "Hybrid" smoothers emulate processor-local relaxation: rows are split into
//! contiguous partitions, Gauss-Seidel runs inside each partition and values
//! owned by other partitions are frozen at their pre-sweep state.

mod gauss_seidel;
mod ilu;

pub use gauss_seidel::{gauss_seidel_sweep, hbgs_sweeps, l1_gs_sweep, HybridBlockGs, L1GaussSeidel, SweepDirection};
pub use ilu::{ilu_factor, ilu_factor_with, ilu_solve, ilu_symbolic, IluConfig, IluFactors};

use crate::error::{Result, SolverError};
use crate::sparse::CsrMatrix;

/// Contiguous row partitions standing in for processor-local subdomains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSet {
    starts: Vec<usize>,
}

impl PartitionSet {
    pub fn single(n: usize) -> Self {
        Self { starts: vec![0, n] }
    }

    /// `nparts` nearly equal contiguous ranges whose boundaries are multiples of `align`.
    pub fn uniform_aligned(n: usize, nparts: usize, align: usize) -> Result<Self> {
        if nparts == 0 || align == 0 {
            return Err(SolverError::InvalidPartition(
                "need at least one partition and a positive alignment".into(),
            ));
        }
        if n % align != 0 {
            return Err(SolverError::InvalidPartition(format!(
                "{n} rows cannot be split on multiples of {align}"
            )));
        }
        let units = n / align;
        let nparts = nparts.min(units.max(1));
        let mut starts = Vec::with_capacity(nparts + 1);
        for p in 0..=nparts {
            starts.push(align * (p * units / nparts));
        }
        Ok(Self { starts })
    }

    pub fn uniform(n: usize, nparts: usize) -> Result<Self> {
        Self::uniform_aligned(n, nparts, 1)
    }

    /// Partitions from explicit range starts (`starts[0] = 0`, last = n).
    pub fn from_starts(starts: Vec<usize>) -> Result<Self> {
        if starts.len() < 2 || starts[0] != 0 || starts.windows(2).any(|w| w[0] > w[1]) {
            return Err(SolverError::InvalidPartition(
                "starts must begin at 0 and be non-decreasing".into(),
            ));
        }
        Ok(Self { starts })
    }

    pub fn len(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nrows(&self) -> usize {
        *self.starts.last().unwrap()
    }

    pub fn range(&self, p: usize) -> std::ops::Range<usize> {
        self.starts[p]..self.starts[p + 1]
    }

    pub fn partition_of(&self, row: usize) -> usize {
        self.starts.partition_point(|&s| s <= row) - 1
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        if self.nrows() != n {
            return Err(SolverError::DimensionMismatch {
                context: "partition set",
                expected: n,
                actual: self.nrows(),
            });
        }
        Ok(())
    }
}

/// One weighted Jacobi sweep: `x += weight * D^{-1} (b - A x)`.
pub fn jacobi_sweep(a: &CsrMatrix, dinv: &[f64], b: &[f64], x: &mut [f64], weight: f64) -> Result<()> {
    let n = a.nrows();
    for (ctx, len) in [
        ("jacobi dinv", dinv.len()),
        ("jacobi rhs", b.len()),
        ("jacobi x", x.len()),
    ] {
        if len != n {
            return Err(SolverError::DimensionMismatch {
                context: ctx,
                expected: n,
                actual: len,
            });
        }
    }
    let mut r = vec![0.0; n];
    a.residual_into(b, x, &mut r);
    for i in 0..n {
        x[i] += weight * dinv[i] * r[i];
    }
    Ok(())
}
