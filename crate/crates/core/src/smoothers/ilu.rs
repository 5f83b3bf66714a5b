//! Level-of-fill incomplete LU, ILU(k), without pivoting.
//!
//! Symbolic phase: an original entry has level 0, a fill entry created by
//! eliminating column `m` from row `i` has level `lev(i,m) + lev(m,j) + 1`,
//! and only entries with level <= k are kept. Numeric phase: IKJ elimination
//! restricted to that pattern.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Result, SolverError};
use crate::smoothers::PartitionSet;
use crate::sparse::{CsrMatrix, SparsityPattern};

#[derive(Debug, Clone)]
pub struct IluConfig {
    pub fill_level: usize,
    /// On a zero pivot, refactor `A + shift I` with `shift = 1e-8 * max|diag(A)|`.
    pub shift_on_zero_pivot: bool,
    /// Drop couplings between partitions before factoring (processor-local ILU).
    pub partitions: Option<PartitionSet>,
}

impl IluConfig {
    pub fn new(fill_level: usize) -> Self {
        Self {
            fill_level,
            shift_on_zero_pivot: false,
            partitions: None,
        }
    }
}

/// Combined `L\U` factors: strictly lower part holds `L` (unit diagonal
/// implied), the rest holds `U`.
#[derive(Debug, Clone)]
pub struct IluFactors {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
    fill_level: usize,
}

impl IluFactors {
    pub fn factors(&self) -> &CsrMatrix {
        &self.lu
    }

    pub fn fill_level(&self) -> usize {
        self.fill_level
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Explicit unit-lower factor.
    pub fn l(&self) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..self.lu.nrows() {
            let (c, v) = self.lu.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j < i {
                    t.push((i, j, x));
                }
            }
            t.push((i, i, 1.0));
        }
        CsrMatrix::from_triplets(self.lu.nrows(), self.lu.ncols(), &t).unwrap()
    }

    /// Explicit upper factor.
    pub fn u(&self) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..self.lu.nrows() {
            let (c, v) = self.lu.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j >= i {
                    t.push((i, j, x));
                }
            }
        }
        CsrMatrix::from_triplets(self.lu.nrows(), self.lu.ncols(), &t).unwrap()
    }

    pub(crate) fn solve_unchecked(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.nrows();
        let offsets = self.lu.row_offsets();
        let cols = self.lu.col_indices();
        let vals = self.lu.values();
        for i in 0..n {
            let mut s = r[i];
            for k in offsets[i]..self.diag_pos[i] {
                s -= vals[k] * z[cols[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let d = self.diag_pos[i];
            let mut s = z[i];
            for k in d + 1..offsets[i + 1] {
                s -= vals[k] * z[cols[k]];
            }
            z[i] = s / vals[d];
        }
    }
}

/// Level-k fill pattern of `a` (the diagonal is always included).
pub fn ilu_symbolic(a: &CsrMatrix, k: usize) -> Result<SparsityPattern> {
    Ok(symbolic(a, k, None)?.0)
}

fn symbolic(a: &CsrMatrix, k: usize, parts: Option<&PartitionSet>) -> Result<(SparsityPattern, Vec<usize>)> {
    if !a.is_square() {
        return Err(SolverError::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    let n = a.nrows();
    if let Some(p) = parts {
        p.check(n)?;
    }
    let mut lev = vec![usize::MAX; n];
    // upper part (j > i) of each finished row with its levels
    let mut upper: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::new();
    let mut diag_pos = Vec::with_capacity(n);
    row_offsets.push(0);
    let mut row_cols: Vec<usize> = Vec::new();
    let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
    for i in 0..n {
        let range = parts.map(|p| p.range(p.partition_of(i)));
        let inside = |j: usize| range.as_ref().is_none_or(|r| r.contains(&j));
        row_cols.clear();
        for &j in a.row(i).0 {
            if inside(j) {
                lev[j] = 0;
                row_cols.push(j);
                if j < i {
                    heap.push(Reverse(j));
                }
            }
        }
        if lev[i] == usize::MAX {
            lev[i] = 0;
            row_cols.push(i);
        }
        while let Some(Reverse(m)) = heap.pop() {
            let lim = lev[m];
            for &(j, lmj) in &upper[m] {
                let nl = lim + lmj + 1;
                if nl > k {
                    continue;
                }
                if lev[j] == usize::MAX {
                    lev[j] = nl;
                    row_cols.push(j);
                    if j < i {
                        heap.push(Reverse(j));
                    }
                } else if nl < lev[j] {
                    lev[j] = nl;
                }
            }
        }
        row_cols.sort_unstable();
        let mut up = Vec::new();
        for &j in &row_cols {
            if j == i {
                diag_pos.push(col_indices.len());
            }
            if j > i {
                up.push((j, lev[j]));
            }
            col_indices.push(j);
            lev[j] = usize::MAX;
        }
        upper.push(up);
        row_offsets.push(col_indices.len());
    }
    Ok((
        SparsityPattern {
            nrows: n,
            ncols: n,
            row_offsets,
            col_indices,
        },
        diag_pos,
    ))
}

pub fn ilu_factor(a: &CsrMatrix, k: usize) -> Result<IluFactors> {
    ilu_factor_with(a, &IluConfig::new(k))
}

pub fn ilu_factor_with(a: &CsrMatrix, cfg: &IluConfig) -> Result<IluFactors> {
    let (pattern, diag_pos) = symbolic(a, cfg.fill_level, cfg.partitions.as_ref())?;
    match numeric(a, &pattern, &diag_pos, 0.0) {
        Err(SolverError::ZeroPivot { row }) if cfg.shift_on_zero_pivot => {
            let shift = 1e-8 * a.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
            log::warn!("ILU zero pivot in row {row}; refactoring with diagonal shift {shift:e}");
            let lu = numeric(a, &pattern, &diag_pos, shift)?;
            Ok(IluFactors {
                lu,
                diag_pos,
                fill_level: cfg.fill_level,
            })
        }
        r => Ok(IluFactors {
            lu: r?,
            diag_pos,
            fill_level: cfg.fill_level,
        }),
    }
}

fn numeric(a: &CsrMatrix, pattern: &SparsityPattern, diag_pos: &[usize], shift: f64) -> Result<CsrMatrix> {
    let n = a.nrows();
    let mut vals = vec![0.0; pattern.nnz()];
    // position of column j in the current row, usize::MAX if absent
    let mut pos = vec![usize::MAX; n];
    let offs = &pattern.row_offsets;
    let cols = &pattern.col_indices;
    for i in 0..n {
        for q in offs[i]..offs[i + 1] {
            pos[cols[q]] = q;
        }
        let (ac, av) = a.row(i);
        for (&j, &x) in ac.iter().zip(av) {
            let q = pos[j];
            if q != usize::MAX {
                vals[q] = x;
            }
        }
        vals[diag_pos[i]] += shift;
        for q in offs[i]..diag_pos[i] {
            let m = cols[q];
            let lim = vals[q] / vals[diag_pos[m]];
            vals[q] = lim;
            for t in diag_pos[m] + 1..offs[m + 1] {
                let p = pos[cols[t]];
                if p != usize::MAX {
                    vals[p] -= lim * vals[t];
                }
            }
        }
        let piv = vals[diag_pos[i]];
        if piv == 0.0 || !piv.is_finite() {
            return Err(SolverError::ZeroPivot { row: i });
        }
        for q in offs[i]..offs[i + 1] {
            pos[cols[q]] = usize::MAX;
        }
    }
    Ok(CsrMatrix::from_parts_unchecked(
        n,
        n,
        pattern.row_offsets.clone(),
        pattern.col_indices.clone(),
        vals,
    ))
}

/// `z = U^{-1} L^{-1} r`.
pub fn ilu_solve(f: &IluFactors, r: &[f64]) -> Result<Vec<f64>> {
    if r.len() != f.dim() {
        return Err(SolverError::DimensionMismatch {
            context: "ilu_solve",
            expected: f.dim(),
            actual: r.len(),
        });
    }
    let mut z = vec![0.0; r.len()];
    f.solve_unchecked(r, &mut z);
    Ok(z)
}
