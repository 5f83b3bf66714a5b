//! Classical (Ruge-Stueben style) algebraic multigrid: strength of connection,
//! greedy independent-set coarsening, direct interpolation, Galerkin coarse
//! operators and an l1 Gauss-Seidel V(1,1) cycle.

use serde::{Deserialize, Serialize};

use crate::dense::DenseLu;
use crate::error::{Result, SolverError};
use crate::krylov::Preconditioner;
use crate::smoothers::{L1GaussSeidel, PartitionSet, SweepDirection};
use crate::sparse::{triple_product, CfSplitting, CsrMatrix, SparsityPattern};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AmgConfig {
    pub strength_threshold: f64,
    pub max_levels: usize,
    pub coarse_size_cutoff: usize,
    /// Unknowns per node for the unknown approach (`dof % num_functions`).
    pub num_functions: usize,
    /// V-cycles per preconditioner application.
    pub cycles: usize,
    /// Hybrid smoother partitions on every level.
    pub partitions: usize,
}

impl Default for AmgConfig {
    fn default() -> Self {
        Self {
            strength_threshold: 0.25,
            max_levels: 25,
            coarse_size_cutoff: 64,
            num_functions: 1,
            cycles: 1,
            partitions: 1,
        }
    }
}

impl AmgConfig {
    pub fn elasticity() -> Self {
        Self {
            strength_threshold: 0.5,
            num_functions: 3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.strength_threshold) {
            return Err(SolverError::InvalidConfig(format!(
                "strength threshold {} outside [0, 1)",
                self.strength_threshold
            )));
        }
        if self.coarse_size_cutoff == 0 || self.max_levels == 0 || self.num_functions == 0 {
            return Err(SolverError::InvalidConfig(
                "AMG cutoff, max_levels and num_functions must be positive".into(),
            ));
        }
        if self.cycles == 0 || self.partitions == 0 {
            return Err(SolverError::InvalidConfig(
                "AMG cycles and partitions must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Strength graph with unknown-based functions `dof % num_functions`.
pub fn strength_graph(a: &CsrMatrix, theta: f64, num_functions: usize) -> SparsityPattern {
    let nf = num_functions.max(1);
    let func: Vec<usize> = (0..a.nrows()).map(|i| i % nf).collect();
    strength_with_functions(a, theta, &func)
}

fn strength_with_functions(a: &CsrMatrix, theta: f64, func: &[usize]) -> SparsityPattern {
    let n = a.nrows();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::new();
    row_offsets.push(0);
    for i in 0..n {
        let (c, v) = a.row(i);
        let mut mx = 0.0f64;
        for (&j, &x) in c.iter().zip(v) {
            if j != i && func[j] == func[i] {
                mx = mx.max(-x);
            }
        }
        if mx > 0.0 {
            for (&j, &x) in c.iter().zip(v) {
                if j != i && func[j] == func[i] && -x > 0.0 && -x >= theta * mx {
                    col_indices.push(j);
                }
            }
        }
        row_offsets.push(col_indices.len());
    }
    SparsityPattern {
        nrows: n,
        ncols: a.ncols(),
        row_offsets,
        col_indices,
    }
}

/// Greedy maximal independent set on the symmetrized strength graph, visiting
/// points by descending measure (number of points they strongly influence),
/// ties by smaller index. Points without any strong connection become F when
/// the graph has edges (they are left to the smoother) and C otherwise.
pub fn cf_coarsen(s: &SparsityPattern) -> CfSplitting {
    let n = s.nrows;
    if s.nnz() == 0 {
        return CfSplitting::from_mask(vec![true; n]);
    }
    let st = s.transpose();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(st.row(i).len()), i));
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Undecided,
        C,
        F,
    }
    let mut mark = vec![Mark::Undecided; n];
    for i in order {
        if mark[i] != Mark::Undecided {
            continue;
        }
        if s.row(i).is_empty() && st.row(i).is_empty() {
            mark[i] = Mark::F;
            continue;
        }
        mark[i] = Mark::C;
        for &j in s.row(i).iter().chain(st.row(i)) {
            if mark[j] == Mark::Undecided {
                mark[j] = Mark::F;
            }
        }
    }
    CfSplitting::from_mask(mark.iter().map(|&m| m == Mark::C).collect())
}

/// Direct interpolation over all off-diagonal neighbors.
pub fn direct_interpolation(a: &CsrMatrix, s: &SparsityPattern, split: &CfSplitting) -> Result<CsrMatrix> {
    Ok(direct_interpolation_with(a, s, split, None)?.0)
}

/// Returns `P` and the F rows that received no interpolation.
fn direct_interpolation_with(
    a: &CsrMatrix,
    s: &SparsityPattern,
    split: &CfSplitting,
    func: Option<&[usize]>,
) -> Result<(CsrMatrix, Vec<usize>)> {
    let n = a.nrows();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    let mut orphans = Vec::new();
    row_offsets.push(0);
    for i in 0..n {
        if let Some(ci) = split.c_index(i) {
            col_indices.push(ci);
            values.push(1.0);
            row_offsets.push(col_indices.len());
            continue;
        }
        let (c, v) = a.row(i);
        let mut diag = 0.0;
        let mut sum_n = 0.0;
        for (&j, &x) in c.iter().zip(v) {
            if j == i {
                diag = x;
            } else if func.is_none_or(|f| f[j] == f[i]) {
                sum_n += x;
            }
        }
        if diag == 0.0 {
            return Err(SolverError::SingularDiagonal { row: i });
        }
        let strong_c: Vec<usize> = s.row(i).iter().copied().filter(|&j| split.is_c(j)).collect();
        let sum_c: f64 = strong_c.iter().map(|&j| a.get(i, j)).sum();
        if strong_c.is_empty() || sum_c == 0.0 {
            orphans.push(i);
        } else {
            let alpha = -sum_n / (sum_c * diag);
            for &j in &strong_c {
                col_indices.push(split.c_index(j).unwrap());
                values.push(alpha * a.get(i, j));
            }
        }
        row_offsets.push(col_indices.len());
    }
    let p = CsrMatrix::try_new(n, split.num_c(), row_offsets, col_indices, values)?;
    Ok((p, orphans))
}

#[derive(Debug, Clone)]
struct AmgLevel {
    a: CsrMatrix,
    p: CsrMatrix,
    r: CsrMatrix,
    smoother: L1GaussSeidel,
}

#[derive(Debug, Clone)]
enum CoarsestSolve {
    Dense(DenseLu),
    /// Fallback when the coarsest operator is too large or singular for LU.
    Smooth(L1GaussSeidel, usize),
}

#[derive(Debug, Clone)]
pub struct AmgHierarchy {
    levels: Vec<AmgLevel>,
    coarsest_a: CsrMatrix,
    coarsest: CoarsestSolve,
    cycles: usize,
}

const DENSE_COARSEST_CAP: usize = 4000;

pub fn amg_setup(a: &CsrMatrix, cfg: &AmgConfig) -> Result<AmgHierarchy> {
    cfg.validate()?;
    if !a.is_square() {
        return Err(SolverError::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    let mut levels = Vec::new();
    let mut cur = a.clone();
    let mut func: Vec<usize> = (0..a.nrows()).map(|i| i % cfg.num_functions).collect();
    while cur.nrows() > cfg.coarse_size_cutoff && levels.len() + 1 < cfg.max_levels {
        let s = strength_with_functions(&cur, cfg.strength_threshold, &func);
        let split = cf_coarsen(&s);
        if split.num_c() == cur.nrows() || split.num_c() == 0 {
            log::debug!("AMG coarsening stagnated at {} rows", cur.nrows());
            break;
        }
        let (p, orphans) = direct_interpolation_with(&cur, &s, &split, Some(&func))?;
        if !orphans.is_empty() {
            log::trace!(
                "AMG level {}: {} F rows without interpolation",
                levels.len(),
                orphans.len()
            );
        }
        let r = p.transpose();
        let coarse = triple_product(&r, &cur, &p)?;
        let parts = PartitionSet::uniform(cur.nrows(), cfg.partitions)?;
        let smoother = L1GaussSeidel::new(&cur, parts)?;
        func = split.c_points().iter().map(|&i| func[i]).collect();
        levels.push(AmgLevel {
            a: std::mem::replace(&mut cur, coarse),
            p,
            r,
            smoother,
        });
    }
    let coarsest = coarsest_solver(&cur, cfg)?;
    Ok(AmgHierarchy {
        levels,
        coarsest_a: cur,
        coarsest,
        cycles: cfg.cycles,
    })
}

fn coarsest_solver(a: &CsrMatrix, cfg: &AmgConfig) -> Result<CoarsestSolve> {
    if a.nrows() <= DENSE_COARSEST_CAP {
        match DenseLu::factor_csr(a) {
            Ok(lu) => return Ok(CoarsestSolve::Dense(lu)),
            Err(e) => log::warn!("AMG coarsest LU failed ({e}); using relaxation"),
        }
    } else {
        log::warn!("AMG coarsest grid has {} rows; using relaxation", a.nrows());
    }
    let parts = PartitionSet::uniform(a.nrows(), cfg.partitions)?;
    Ok(CoarsestSolve::Smooth(L1GaussSeidel::new(a, parts)?, 20))
}

impl AmgHierarchy {
    pub fn num_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels
            .iter()
            .map(|l| l.a.nrows())
            .chain(std::iter::once(self.coarsest_a.nrows()))
            .collect()
    }

    pub fn operator(&self, level: usize) -> &CsrMatrix {
        self.levels.get(level).map_or(&self.coarsest_a, |l| &l.a)
    }

    /// Interpolation from `level + 1` to `level`.
    pub fn interpolation(&self, level: usize) -> Option<&CsrMatrix> {
        self.levels.get(level).map(|l| &l.p)
    }

    pub fn dim(&self) -> usize {
        self.operator(0).nrows()
    }

    /// One V(1,1) cycle improving `x` for `A x = b`.
    pub fn vcycle(&self, b: &[f64], x: &mut [f64]) -> Result<()> {
        let n = self.dim();
        for (ctx, len) in [("vcycle rhs", b.len()), ("vcycle x", x.len())] {
            if len != n {
                return Err(SolverError::DimensionMismatch {
                    context: ctx,
                    expected: n,
                    actual: len,
                });
            }
        }
        self.cycle_at(0, b, x);
        Ok(())
    }

    fn cycle_at(&self, l: usize, b: &[f64], x: &mut [f64]) {
        let Some(level) = self.levels.get(l) else {
            match &self.coarsest {
                CoarsestSolve::Dense(lu) => {
                    x.copy_from_slice(b);
                    lu.solve_in_place(x);
                }
                CoarsestSolve::Smooth(gs, sweeps) => {
                    for _ in 0..*sweeps {
                        gs.sweep_unchecked(&self.coarsest_a, b, x, SweepDirection::Forward);
                        gs.sweep_unchecked(&self.coarsest_a, b, x, SweepDirection::Backward);
                    }
                }
            }
            return;
        };
        level.smoother.sweep_unchecked(&level.a, b, x, SweepDirection::Forward);
        let mut r = vec![0.0; b.len()];
        level.a.residual_into(b, x, &mut r);
        let mut rc = vec![0.0; level.r.nrows()];
        level.r.matvec_unchecked(&r, &mut rc);
        let mut ec = vec![0.0; rc.len()];
        self.cycle_at(l + 1, &rc, &mut ec);
        let mut e = vec![0.0; b.len()];
        level.p.matvec_unchecked(&ec, &mut e);
        for (xi, ei) in x.iter_mut().zip(&e) {
            *xi += ei;
        }
        level.smoother.sweep_unchecked(&level.a, b, x, SweepDirection::Backward);
    }

    /// `cycles` V-cycles from a zero initial guess.
    pub fn solve_from_zero(&self, b: &[f64], z: &mut [f64]) {
        z.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..self.cycles {
            self.cycle_at(0, b, z);
        }
    }
}

impl Preconditioner for AmgHierarchy {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.solve_from_zero(r, z);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap1d(n: usize) -> CsrMatrix {
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

    #[test]
    fn diagonal_has_empty_graph_and_all_c() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let s = strength_graph(&a, 0.25, 1);
        assert_eq!(s.nnz(), 0);
        assert_eq!(cf_coarsen(&s).num_c(), 3);
    }

    #[test]
    fn laplacian_all_neighbors_strong() {
        let a = lap1d(6);
        let s = strength_graph(&a, 0.25, 1);
        assert_eq!(s.nnz(), 10);
    }

    #[test]
    fn lap1d_alternating_split_and_weights() {
        let a = lap1d(9);
        let s = strength_graph(&a, 0.25, 1);
        let split = cf_coarsen(&s);
        assert_eq!(split.c_points(), &[1, 3, 5, 7]);
        let p = direct_interpolation(&a, &s, &split).unwrap();
        assert_eq!(p.row(2), (&[0usize, 1][..], &[0.5, 0.5][..]));
        assert_eq!(p.row(3), (&[1usize][..], &[1.0][..]));
    }

    #[test]
    fn small_matrix_is_single_level() {
        let a = lap1d(10);
        let h = amg_setup(&a, &AmgConfig::default()).unwrap();
        assert_eq!(h.num_levels(), 1);
        let b = vec![1.0; 10];
        let mut x = vec![0.0; 10];
        h.vcycle(&b, &mut x).unwrap();
        let r = a.residual(&b, &x).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn galerkin_identity_per_level() {
        let a = lap1d(33);
        let cfg = AmgConfig {
            coarse_size_cutoff: 4,
            ..Default::default()
        };
        let h = amg_setup(&a, &cfg).unwrap();
        assert!(h.num_levels() > 2);
        for l in 0..h.num_levels() - 1 {
            let p = h.interpolation(l).unwrap();
            let g = triple_product(&p.transpose(), h.operator(l), p).unwrap();
            let d = g.add_scaled(1.0, h.operator(l + 1), -1.0).unwrap();
            assert!(d.max_abs() <= 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        let cfg = AmgConfig {
            strength_threshold: 1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
