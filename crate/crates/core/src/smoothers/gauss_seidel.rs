use crate::error::{Result, SolverError};
use crate::smoothers::PartitionSet;
use crate::sparse::{invert_2x2, CellBlock, CsrMatrix, FieldLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    Forward,
    Backward,
}

fn check_vectors(a: &CsrMatrix, b: &[f64], x: &[f64]) -> Result<()> {
    if !a.is_square() {
        return Err(SolverError::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    for (ctx, len) in [("smoother rhs", b.len()), ("smoother x", x.len())] {
        if len != a.nrows() {
            return Err(SolverError::DimensionMismatch {
                context: ctx,
                expected: a.nrows(),
                actual: len,
            });
        }
    }
    Ok(())
}

/// Hybrid l1 Gauss-Seidel with a precomputed modified diagonal
/// `d_i = a_ii + sum_{j outside part(i)} |a_ij|`.
#[derive(Debug, Clone)]
pub struct L1GaussSeidel {
    diag: Vec<f64>,
    parts: PartitionSet,
}

impl L1GaussSeidel {
    pub fn new(a: &CsrMatrix, parts: PartitionSet) -> Result<Self> {
        if !a.is_square() {
            return Err(SolverError::NotSquare {
                nrows: a.nrows(),
                ncols: a.ncols(),
            });
        }
        parts.check(a.nrows())?;
        let mut diag = vec![0.0; a.nrows()];
        for p in 0..parts.len() {
            let range = parts.range(p);
            for i in range.clone() {
                let (c, v) = a.row(i);
                let mut d = 0.0;
                let mut off = 0.0;
                for (&j, &x) in c.iter().zip(v) {
                    if j == i {
                        d = x;
                    } else if !range.contains(&j) {
                        off += x.abs();
                    }
                }
                let d = if off > 0.0 { d + off } else { d };
                if d == 0.0 || !d.is_finite() {
                    return Err(SolverError::SingularDiagonal { row: i });
                }
                diag[i] = d;
            }
        }
        Ok(Self { diag, parts })
    }

    pub fn modified_diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn sweep(&self, a: &CsrMatrix, b: &[f64], x: &mut [f64], dir: SweepDirection) -> Result<()> {
        check_vectors(a, b, x)?;
        self.parts.check(a.nrows())?;
        self.sweep_unchecked(a, b, x, dir);
        Ok(())
    }

    pub(crate) fn sweep_unchecked(&self, a: &CsrMatrix, b: &[f64], x: &mut [f64], dir: SweepDirection) {
        let offsets = a.row_offsets();
        let cols = a.col_indices();
        let vals = a.values();
        if self.parts.len() == 1 {
            let relax = |i: usize, x: &mut [f64]| {
                let mut s = 0.0;
                for k in offsets[i]..offsets[i + 1] {
                    s += vals[k] * x[cols[k]];
                }
                x[i] += (b[i] - s) / self.diag[i];
            };
            match dir {
                SweepDirection::Forward => (0..a.nrows()).for_each(|i| relax(i, x)),
                SweepDirection::Backward => (0..a.nrows()).rev().for_each(|i| relax(i, x)),
            }
            return;
        }
        let old = x.to_vec();
        for p in 0..self.parts.len() {
            let range = self.parts.range(p);
            let relax = |i: usize, x: &mut [f64]| {
                let mut s = 0.0;
                for k in offsets[i]..offsets[i + 1] {
                    let j = cols[k];
                    let xj = if range.contains(&j) { x[j] } else { old[j] };
                    s += vals[k] * xj;
                }
                x[i] += (b[i] - s) / self.diag[i];
            };
            match dir {
                SweepDirection::Forward => range.clone().for_each(|i| relax(i, x)),
                SweepDirection::Backward => range.clone().rev().for_each(|i| relax(i, x)),
            }
        }
    }
}

/// One hybrid l1 Gauss-Seidel sweep (modified diagonal computed on the fly).
pub fn l1_gs_sweep(a: &CsrMatrix, b: &[f64], x: &mut [f64], dir: SweepDirection, parts: &PartitionSet) -> Result<()> {
    check_vectors(a, b, x)?;
    L1GaussSeidel::new(a, parts.clone())?.sweep(a, b, x, dir)
}

/// Classical sequential Gauss-Seidel sweep.
pub fn gauss_seidel_sweep(a: &CsrMatrix, b: &[f64], x: &mut [f64], dir: SweepDirection) -> Result<()> {
    check_vectors(a, b, x)?;
    let n = a.nrows();
    let step = |i: usize, x: &mut [f64]| -> Result<()> {
        let (c, v) = a.row(i);
        let mut s = 0.0;
        let mut d = 0.0;
        for (&j, &aij) in c.iter().zip(v) {
            s += aij * x[j];
            if j == i {
                d = aij;
            }
        }
        if d == 0.0 {
            return Err(SolverError::SingularDiagonal { row: i });
        }
        x[i] += (b[i] - s) / d;
        Ok(())
    };
    match dir {
        SweepDirection::Forward => (0..n).try_for_each(|i| step(i, x)),
        SweepDirection::Backward => (0..n).rev().try_for_each(|i| step(i, x)),
    }
}

/// Hybrid block Gauss-Seidel over the 2x2 (saturation, pressure) cell blocks
/// of an interleaved flow operator. Each visit solves its block exactly with
/// an l1-modified block diagonal.
#[derive(Debug, Clone)]
pub struct HybridBlockGs {
    blocks: Vec<CellBlock>,
    inverses: Vec<[[f64; 2]; 2]>,
    /// Block ranges per partition.
    block_ranges: Vec<std::ops::Range<usize>>,
    row_ranges: Vec<std::ops::Range<usize>>,
}

impl HybridBlockGs {
    pub fn new(a: &CsrMatrix, layout: &FieldLayout, parts: &PartitionSet) -> Result<Self> {
        if !a.is_square() {
            return Err(SolverError::NotSquare {
                nrows: a.nrows(),
                ncols: a.ncols(),
            });
        }
        if layout.ndofs() != a.nrows() {
            return Err(SolverError::DimensionMismatch {
                context: "HBGS layout",
                expected: a.nrows(),
                actual: layout.ndofs(),
            });
        }
        parts.check(a.nrows())?;
        let blocks = layout.cell_blocks()?;
        if 2 * blocks.len() != a.nrows() {
            return Err(SolverError::InvalidLayout(
                "block Gauss-Seidel needs a flow-only interleaved layout".into(),
            ));
        }
        let mut block_ranges = Vec::with_capacity(parts.len());
        let mut row_ranges = Vec::with_capacity(parts.len());
        let mut inverses = Vec::with_capacity(blocks.len());
        let mut next = 0;
        for p in 0..parts.len() {
            let range = parts.range(p);
            let first = next;
            while next < blocks.len() && range.contains(&blocks[next].rows()[0]) {
                let rows = blocks[next].rows();
                if !range.contains(&rows[1]) {
                    return Err(SolverError::InvalidPartition(format!(
                        "cell {} is split across partitions",
                        blocks[next].cell
                    )));
                }
                let mut m = [[0.0; 2]; 2];
                for (r, &row) in rows.iter().enumerate() {
                    let (c, v) = a.row(row);
                    let mut off = 0.0;
                    for (&j, &x) in c.iter().zip(v) {
                        if j == rows[0] {
                            m[r][0] = x;
                        } else if j == rows[1] {
                            m[r][1] = x;
                        } else if !range.contains(&j) {
                            off += x.abs();
                        }
                    }
                    if off > 0.0 {
                        m[r][r] += off;
                    }
                }
                inverses.push(invert_2x2(m).ok_or(SolverError::SingularBlock {
                    cell: blocks[next].cell,
                })?);
                next += 1;
            }
            block_ranges.push(first..next);
            row_ranges.push(range);
        }
        Ok(Self {
            blocks,
            inverses,
            block_ranges,
            row_ranges,
        })
    }

    /// Forward sweeps; `x` is updated in place.
    pub fn sweeps(&self, a: &CsrMatrix, b: &[f64], x: &mut [f64], nsweeps: usize) -> Result<()> {
        check_vectors(a, b, x)?;
        if 2 * self.blocks.len() != a.nrows() {
            return Err(SolverError::DimensionMismatch {
                context: "HBGS operator",
                expected: 2 * self.blocks.len(),
                actual: a.nrows(),
            });
        }
        for _ in 0..nsweeps {
            self.sweep_unchecked(a, b, x);
        }
        Ok(())
    }

    pub(crate) fn sweep_unchecked(&self, a: &CsrMatrix, b: &[f64], x: &mut [f64]) {
        let single = self.row_ranges.len() == 1;
        let old = if single { Vec::new() } else { x.to_vec() };
        let offsets = a.row_offsets();
        let cols = a.col_indices();
        let vals = a.values();
        for (br, range) in self.block_ranges.iter().zip(&self.row_ranges) {
            for k in br.clone() {
                let rows = self.blocks[k].rows();
                let mut r = [0.0; 2];
                for (t, &row) in rows.iter().enumerate() {
                    let mut s = 0.0;
                    for q in offsets[row]..offsets[row + 1] {
                        let j = cols[q];
                        let xj = if single || range.contains(&j) { x[j] } else { old[j] };
                        s += vals[q] * xj;
                    }
                    r[t] = b[row] - s;
                }
                let inv = &self.inverses[k];
                x[rows[0]] += inv[0][0] * r[0] + inv[0][1] * r[1];
                x[rows[1]] += inv[1][0] * r[0] + inv[1][1] * r[1];
            }
        }
    }
}

/// `nsweeps` forward hybrid block Gauss-Seidel sweeps.
pub fn hbgs_sweeps(
    a: &CsrMatrix,
    layout: &FieldLayout,
    b: &[f64],
    x: &mut [f64],
    nsweeps: usize,
    parts: &PartitionSet,
) -> Result<()> {
    if nsweeps == 0 {
        return check_vectors(a, b, x);
    }
    HybridBlockGs::new(a, layout, parts)?.sweeps(a, b, x, nsweeps)
}
