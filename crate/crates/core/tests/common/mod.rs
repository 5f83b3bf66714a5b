#![allow(dead_code)]

use mgr_core::sparse::CsrMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_dense(a: &CsrMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        let (c, v) = a.row(i);
        for (&j, &x) in c.iter().zip(v) {
            m[(i, j)] = x;
        }
    }
    m
}

pub fn from_dense(m: &DMatrix<f64>) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != 0.0 {
                t.push((i, j, m[(i, j)]));
            }
        }
    }
    CsrMatrix::from_triplets(m.nrows(), m.ncols(), &t).unwrap()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

pub fn vec_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Random sparse matrix with roughly `density` fill and values in [-1, 1].
pub fn random_sparse(rng: &mut ChaCha8Rng, nrows: usize, ncols: usize, density: f64) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..nrows {
        for j in 0..ncols {
            if rng.gen::<f64>() < density {
                t.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    CsrMatrix::from_triplets(nrows, ncols, &t).unwrap()
}

/// Random strictly diagonally dominant sparse matrix.
pub fn random_dominant(rng: &mut ChaCha8Rng, n: usize, density: f64) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            if j != i && rng.gen::<f64>() < density {
                let v: f64 = rng.gen_range(-1.0..1.0);
                sum += v.abs();
                t.push((i, j, v));
            }
        }
        t.push((i, i, sum + 1.0 + rng.gen::<f64>()));
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn laplace_1d(n: usize) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0));
        if i > 0 {
            t.push((i, i - 1, -1.0));
        }
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

/// 5-point operator on an `nx x ny` grid with y-coupling scaled by `eps`.
pub fn laplace_2d(nx: usize, ny: usize, eps: f64) -> CsrMatrix {
    let id = |i: usize, j: usize| j * nx + i;
    let mut t = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let r = id(i, j);
            t.push((r, r, 2.0 + 2.0 * eps));
            if i > 0 {
                t.push((r, id(i - 1, j), -1.0));
            }
            if i + 1 < nx {
                t.push((r, id(i + 1, j), -1.0));
            }
            if j > 0 {
                t.push((r, id(i, j - 1), -eps));
            }
            if j + 1 < ny {
                t.push((r, id(i, j + 1), -eps));
            }
        }
    }
    let n = nx * ny;
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

/// Random interleaved (s, p) flow-like matrix on a 1D chain of cells with
/// dominant diagonal blocks.
pub fn random_flow(rng: &mut ChaCha8Rng, ncells: usize) -> CsrMatrix {
    let n = 2 * ncells;
    let mut t = Vec::new();
    for c in 0..ncells {
        let (s, p) = (2 * c, 2 * c + 1);
        t.push((s, s, 4.0 + rng.gen::<f64>()));
        t.push((s, p, rng.gen_range(-1.0..1.0)));
        t.push((p, s, rng.gen_range(-1.0..1.0)));
        t.push((p, p, 5.0 + rng.gen::<f64>()));
        for d in [1usize, 2] {
            if c + d < ncells {
                let (s2, p2) = (2 * (c + d), 2 * (c + d) + 1);
                for (r, q) in [(s, s2), (s, p2), (p, s2), (p, p2), (s2, s), (s2, p), (p2, s), (p2, p)] {
                    if rng.gen::<f64>() < 0.7 {
                        t.push((r, q, rng.gen_range(-0.5..0.5)));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}
