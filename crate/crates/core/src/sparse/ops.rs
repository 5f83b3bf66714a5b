//! Sparse kernels used by the reduction framework: block extraction,
//! products, diagonal inverses and the row-wise dropping operator.

use crate::error::{Result, SolverError};
use crate::sparse::{CfSplitting, CsrMatrix, FieldLayout};

/// The four blocks of a matrix under a C/F splitting, renumbered by the
/// splitting's local indices.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub ff: CsrMatrix,
    pub fc: CsrMatrix,
    pub cf: CsrMatrix,
    pub cc: CsrMatrix,
}

pub fn extract_blocks(a: &CsrMatrix, split: &CfSplitting) -> Result<Blocks> {
    if !a.is_square() {
        return Err(SolverError::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    if split.len() != a.nrows() {
        return Err(SolverError::DimensionMismatch {
            context: "CF splitting",
            expected: a.nrows(),
            actual: split.len(),
        });
    }
    let (nf, nc) = (split.num_f(), split.num_c());
    let mut parts: [(Vec<usize>, Vec<usize>, Vec<f64>); 4] = Default::default();
    for p in parts.iter_mut() {
        p.0.push(0);
    }
    // index: 0 = FF, 1 = FC, 2 = CF, 3 = CC
    let emit_row = |rows: &[usize], base: usize, parts: &mut [(Vec<usize>, Vec<usize>, Vec<f64>); 4]| {
        for &i in rows {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let which = base + usize::from(split.is_c(j));
                parts[which].1.push(split.local_index(j));
                parts[which].2.push(v);
            }
            for p in &mut parts[base..base + 2] {
                let len = p.1.len();
                p.0.push(len);
            }
        }
    };
    emit_row(split.f_points(), 0, &mut parts);
    emit_row(split.c_points(), 2, &mut parts);
    let [ff, fc, cf, cc] = parts;
    // local indices are monotone in global index, so column order is preserved
    Ok(Blocks {
        ff: CsrMatrix::from_parts_unchecked(nf, nf, ff.0, ff.1, ff.2),
        fc: CsrMatrix::from_parts_unchecked(nf, nc, fc.0, fc.1, fc.2),
        cf: CsrMatrix::from_parts_unchecked(nc, nf, cf.0, cf.1, cf.2),
        cc: CsrMatrix::from_parts_unchecked(nc, nc, cc.0, cc.1, cc.2),
    })
}

/// Reassembles the four blocks into the original ordering.
pub fn assemble_blocks(blocks: &Blocks, split: &CfSplitting) -> CsrMatrix {
    let n = split.len();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_offsets.push(0);
    let mut row_buf: Vec<(usize, f64)> = Vec::new();
    for i in 0..n {
        row_buf.clear();
        let li = split.local_index(i);
        let (left, right) = if split.is_c(i) {
            (&blocks.cf, &blocks.cc)
        } else {
            (&blocks.ff, &blocks.fc)
        };
        let (c, v) = left.row(li);
        row_buf.extend(c.iter().map(|&j| split.f_points()[j]).zip(v.iter().copied()));
        let (c, v) = right.row(li);
        row_buf.extend(c.iter().map(|&j| split.c_points()[j]).zip(v.iter().copied()));
        row_buf.sort_by_key(|e| e.0);
        for &(j, v) in &row_buf {
            cols.push(j);
            vals.push(v);
        }
        row_offsets.push(cols.len());
    }
    CsrMatrix::from_parts_unchecked(n, n, row_offsets, cols, vals)
}

/// Exact sparse product `A B` (Gustavson). Entries that cancel to zero are kept.
pub fn spgemm(a: &CsrMatrix, b: &CsrMatrix) -> Result<CsrMatrix> {
    if a.ncols() != b.nrows() {
        return Err(SolverError::DimensionMismatch {
            context: "spgemm inner dimension",
            expected: a.ncols(),
            actual: b.nrows(),
        });
    }
    let (m, n) = (a.nrows(), b.ncols());
    let mut marker = vec![usize::MAX; n];
    let mut acc = vec![0.0; n];
    let mut row_cols: Vec<usize> = Vec::new();
    let mut row_offsets = Vec::with_capacity(m + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_offsets.push(0);
    for i in 0..m {
        row_cols.clear();
        let (ac, av) = a.row(i);
        for (&k, &aik) in ac.iter().zip(av) {
            let (bc, bv) = b.row(k);
            for (&j, &bkj) in bc.iter().zip(bv) {
                if marker[j] != i {
                    marker[j] = i;
                    acc[j] = aik * bkj;
                    row_cols.push(j);
                } else {
                    acc[j] += aik * bkj;
                }
            }
        }
        row_cols.sort_unstable();
        for &j in &row_cols {
            cols.push(j);
            vals.push(acc[j]);
        }
        row_offsets.push(cols.len());
    }
    Ok(CsrMatrix::from_parts_unchecked(m, n, row_offsets, cols, vals))
}

/// `R A P`, evaluated as `(R A) P`.
pub fn triple_product(r: &CsrMatrix, a: &CsrMatrix, p: &CsrMatrix) -> Result<CsrMatrix> {
    let ra = spgemm(r, a)?;
    spgemm(&ra, p)
}

/// Reciprocal of the diagonal of a square matrix.
pub fn diag_inverse(a: &CsrMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(SolverError::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    (0..a.nrows())
        .map(|i| {
            let d = a.get(i, i);
            if d == 0.0 || !d.is_finite() {
                Err(SolverError::SingularDiagonal { row: i })
            } else {
                Ok(1.0 / d)
            }
        })
        .collect()
}

/// Inverse of a dense 2x2 matrix, or `None` when it is singular.
#[inline]
pub fn invert_2x2(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    if det == 0.0 || !det.is_finite() || det.abs() <= f64::EPSILON * scale * scale * 1e-6 {
        return None;
    }
    let inv = 1.0 / det;
    Some([[m[1][1] * inv, -m[0][1] * inv], [-m[1][0] * inv, m[0][0] * inv]])
}

/// Block-diagonal matrix holding the inverses of every cell's 2x2
/// (saturation, pressure) diagonal block. Requires an interleaved flow layout.
pub fn block_diag_inverse(a: &CsrMatrix, layout: &FieldLayout) -> Result<CsrMatrix> {
    if !a.is_square() {
        return Err(SolverError::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    if layout.ndofs() != a.nrows() {
        return Err(SolverError::DimensionMismatch {
            context: "block_diag_inverse layout",
            expected: a.nrows(),
            actual: layout.ndofs(),
        });
    }
    let blocks = layout.cell_blocks()?;
    if 2 * blocks.len() != a.nrows() {
        return Err(SolverError::InvalidLayout(
            "block inverse needs a flow-only layout".into(),
        ));
    }
    let mut trip = Vec::with_capacity(4 * blocks.len());
    for b in &blocks {
        let [r0, r1] = b.rows();
        let m = [[a.get(r0, r0), a.get(r0, r1)], [a.get(r1, r0), a.get(r1, r1)]];
        let inv = invert_2x2(m).ok_or(SolverError::SingularBlock { cell: b.cell })?;
        trip.extend([
            (r0, r0, inv[0][0]),
            (r0, r1, inv[0][1]),
            (r1, r0, inv[1][0]),
            (r1, r1, inv[1][1]),
        ]);
    }
    CsrMatrix::from_triplets(a.nrows(), a.ncols(), &trip)
}

/// What happens to entries removed by [`sparsify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DroppedEntries {
    /// Removed from the pattern.
    #[default]
    Discard,
    /// Added to the kept same-entity entry of the dropped entry's field.
    LumpToSubblockDiagonal,
}

/// Row-wise dropping operator: keeps every same-entity ("sub-block diagonal")
/// entry plus the `n_max` largest remaining entries in absolute value.
/// Ties go to the smaller column index.
pub fn sparsify(m: &CsrMatrix, layout: &FieldLayout, n_max: usize) -> Result<CsrMatrix> {
    sparsify_with(m, layout, n_max, DroppedEntries::Discard)
}

pub fn sparsify_with(m: &CsrMatrix, layout: &FieldLayout, n_max: usize, dropped: DroppedEntries) -> Result<CsrMatrix> {
    if !m.is_square() {
        return Err(SolverError::NotSquare {
            nrows: m.nrows(),
            ncols: m.ncols(),
        });
    }
    if layout.ndofs() != m.nrows() {
        return Err(SolverError::DimensionMismatch {
            context: "sparsify layout",
            expected: m.nrows(),
            actual: layout.ndofs(),
        });
    }
    let mut row_offsets = Vec::with_capacity(m.nrows() + 1);
    let mut cols = Vec::with_capacity(m.nnz());
    let mut vals = Vec::with_capacity(m.nnz());
    row_offsets.push(0);
    let mut candidates: Vec<usize> = Vec::new();
    let mut keep: Vec<bool> = Vec::new();
    for i in 0..m.nrows() {
        let (c, v) = m.row(i);
        keep.clear();
        keep.resize(c.len(), false);
        candidates.clear();
        for (k, &j) in c.iter().enumerate() {
            if layout.same_entity(i, j) {
                keep[k] = true;
            } else {
                candidates.push(k);
            }
        }
        if candidates.len() <= n_max {
            for &k in &candidates {
                keep[k] = true;
            }
        } else if n_max > 0 {
            // stored order is by column, so a stable sort keeps the
            // smaller column first among equal magnitudes
            candidates.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
            for &k in &candidates[..n_max] {
                keep[k] = true;
            }
        }
        let row_start = cols.len();
        for k in 0..c.len() {
            if keep[k] {
                cols.push(c[k]);
                vals.push(v[k]);
            }
        }
        if dropped == DroppedEntries::LumpToSubblockDiagonal {
            for k in 0..c.len() {
                if keep[k] {
                    continue;
                }
                let fj = layout.field(c[k]);
                let target =
                    (row_start..cols.len()).find(|&t| layout.same_entity(i, cols[t]) && layout.field(cols[t]) == fj);
                if let Some(t) = target {
                    vals[t] += v[k];
                }
            }
        }
        row_offsets.push(cols.len());
    }
    Ok(CsrMatrix::from_parts_unchecked(
        m.nrows(),
        m.ncols(),
        row_offsets,
        cols,
        vals,
    ))
}
