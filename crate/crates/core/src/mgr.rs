//! Multigrid reduction (MGR) preconditioner.
//!
//! Each level splits its unknowns into F and C points by field label, relaxes
//! on F, restricts the residual to C with `R = [W_r, I]`, recurses on a
//! (possibly sparsified) coarse operator and interpolates back with
//! `P = [W_p; I]`. The last coarse grid is handled by AMG.

use serde::{Deserialize, Serialize};

use crate::amg::{amg_setup, AmgConfig, AmgHierarchy};
use crate::dense::DenseLu;
use crate::error::{Result, SolverError};
use crate::krylov::Preconditioner;
use crate::smoothers::{ilu_factor_with, HybridBlockGs, IluConfig, IluFactors, PartitionSet};
use crate::sparse::{
    diag_inverse, extract_blocks, sparsify_with, spgemm, Blocks, CfSplitting, CsrMatrix, DofOrdering, DroppedEntries,
    Field, FieldLayout,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// `W_p = -D_FF^{-1} A_FC`.
    #[default]
    InjectionJacobi,
    /// `W_p = 0`.
    InjectionOnly,
    /// `W_p = -A_FF^{-1} A_FC` (dense, test scale).
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    /// `W_r = 0`.
    #[default]
    Injection,
    /// `W_r = -A_CF D_FF^{-1}`.
    Jacobi,
    /// `W_r = -A_CF A_FF^{-1}` (dense, test scale).
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FRelax {
    AmgVcycle {
        #[serde(default = "one")]
        cycles: usize,
    },
    Jacobi {
        #[serde(default = "one")]
        sweeps: usize,
        #[serde(default = "unit_weight")]
        weight: f64,
    },
    None,
    /// Dense LU of `A_FF` (test scale).
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GlobalSmoother {
    #[default]
    None,
    Hbgs {
        sweeps: usize,
    },
    Ilu {
        fill: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DropPolicy {
    #[default]
    None,
    /// Keep same-entity entries plus the `n_max` largest of each row.
    Nmax {
        n_max: usize,
        #[serde(default)]
        dropped: DroppedEntries,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxOrder {
    /// Global smoothing and F-relaxation before the coarse correction.
    #[default]
    Pre,
    /// Coarse correction first, F-relaxation afterwards.
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseSolve {
    #[default]
    Amg,
    Exact,
}

fn one() -> usize {
    1
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MgrLevelSpec {
    pub f_fields: Vec<Field>,
    pub c_fields: Vec<Field>,
    #[serde(default)]
    pub interp: Interpolation,
    #[serde(default)]
    pub restrict: Restriction,
    pub f_relax: FRelax,
    #[serde(default)]
    pub global_smoother: GlobalSmoother,
    #[serde(default)]
    pub drop: DropPolicy,
    /// Replace `A_CF` by its same-entity diagonal when forming the coarse grid.
    #[serde(default)]
    pub quasi_impes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MgrConfig {
    pub levels: Vec<MgrLevelSpec>,
    /// AMG used for F-relaxation of displacement blocks.
    pub f_amg: AmgConfig,
    /// AMG used on the terminal grid and for scalar F-blocks.
    pub coarse_amg: AmgConfig,
    pub coarse_solve: CoarseSolve,
    pub relax_order: RelaxOrder,
    pub partitions: usize,
    pub ilu_zero_pivot_shift: bool,
    pub ideal_size_cap: usize,
}

impl Default for MgrConfig {
    fn default() -> Self {
        Self::three_level(GlobalSmoother::Ilu { fill: 1 }, false)
    }
}

impl MgrConfig {
    /// Displacement -> saturation -> pressure reduction.
    pub fn three_level(level2_smoother: GlobalSmoother, quasi_impes: bool) -> Self {
        Self {
            levels: vec![
                MgrLevelSpec {
                    f_fields: vec![Field::U],
                    c_fields: vec![Field::S, Field::P],
                    interp: Interpolation::InjectionJacobi,
                    restrict: Restriction::Injection,
                    f_relax: FRelax::AmgVcycle { cycles: 1 },
                    global_smoother: GlobalSmoother::None,
                    drop: DropPolicy::Nmax {
                        n_max: 4,
                        dropped: DroppedEntries::Discard,
                    },
                    quasi_impes: false,
                },
                MgrLevelSpec {
                    f_fields: vec![Field::S],
                    c_fields: vec![Field::P],
                    interp: Interpolation::InjectionJacobi,
                    restrict: Restriction::Injection,
                    f_relax: FRelax::Jacobi { sweeps: 1, weight: 1.0 },
                    global_smoother: level2_smoother,
                    drop: DropPolicy::None,
                    quasi_impes,
                },
            ],
            f_amg: AmgConfig::elasticity(),
            coarse_amg: AmgConfig::default(),
            coarse_solve: CoarseSolve::Amg,
            relax_order: RelaxOrder::Pre,
            partitions: 1,
            ilu_zero_pivot_shift: true,
            ideal_size_cap: 2000,
        }
    }

    /// Two-level reduction for a flow-only (saturation, pressure) system.
    pub fn flow_two_level(smoother: GlobalSmoother, quasi_impes: bool) -> Self {
        let mut cfg = Self::three_level(smoother, quasi_impes);
        cfg.levels.remove(0);
        cfg
    }
}

/// Transfer blocks `W_p` (F x C) and `W_r` (C x F) of one level.
#[derive(Debug, Clone)]
pub struct Transfers {
    pub wp: CsrMatrix,
    pub wr: CsrMatrix,
}

impl Transfers {
    /// `P = [W_p; I]` in the original row numbering.
    pub fn prolongation(&self, split: &CfSplitting) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..split.len() {
            let k = split.local_index(i);
            if split.is_c(i) {
                t.push((i, k, 1.0));
            } else {
                let (c, v) = self.wp.row(k);
                t.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, x)));
            }
        }
        CsrMatrix::from_triplets(split.len(), split.num_c(), &t).unwrap()
    }

    /// `R = [W_r, I]` in the original column numbering.
    pub fn restriction(&self, split: &CfSplitting) -> CsrMatrix {
        let mut t = Vec::new();
        for (ci, &row) in split.c_points().iter().enumerate() {
            t.push((ci, row, 1.0));
            let (c, v) = self.wr.row(ci);
            t.extend(c.iter().zip(v).map(|(&j, &x)| (ci, split.f_points()[j], x)));
        }
        CsrMatrix::from_triplets(split.num_c(), split.len(), &t).unwrap()
    }
}

fn scale_cols(m: &CsrMatrix, d: &[f64]) -> CsrMatrix {
    let mut out = m.clone();
    let cols = m.col_indices().to_vec();
    for (v, j) in out.values_mut().iter_mut().zip(cols) {
        *v *= d[j];
    }
    out
}

fn dense_to_csr(nrows: usize, ncols: usize, data: &[f64]) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..nrows {
        for j in 0..ncols {
            let x = data[i * ncols + j];
            if x != 0.0 {
                t.push((i, j, x));
            }
        }
    }
    CsrMatrix::from_triplets(nrows, ncols, &t).unwrap()
}

/// Columns of `-A_FF^{-1} B` for a sparse `B` with `nf` rows.
fn dense_neg_solve(lu: &DenseLu, b: &CsrMatrix) -> CsrMatrix {
    let nf = b.nrows();
    let nc = b.ncols();
    let bt = b.transpose();
    let mut out = vec![0.0; nf * nc];
    let mut col = vec![0.0; nf];
    for j in 0..nc {
        col.iter_mut().for_each(|x| *x = 0.0);
        let (r, v) = bt.row(j);
        for (&i, &x) in r.iter().zip(v) {
            col[i] = x;
        }
        lu.solve_in_place(&mut col);
        for i in 0..nf {
            out[i * nc + j] = -col[i];
        }
    }
    dense_to_csr(nf, nc, &out)
}

pub fn build_transfers(blocks: &Blocks, spec: &MgrLevelSpec, ideal_cap: usize) -> Result<Transfers> {
    let nf = blocks.ff.nrows();
    let nc = blocks.cc.nrows();
    let needs_dinv = spec.interp == Interpolation::InjectionJacobi || spec.restrict == Restriction::Jacobi;
    let dinv = if needs_dinv {
        Some(diag_inverse(&blocks.ff)?)
    } else {
        None
    };
    let needs_ideal = spec.interp == Interpolation::Ideal || spec.restrict == Restriction::Ideal;
    if needs_ideal && nf > ideal_cap {
        return Err(SolverError::IdealTooLarge {
            rows: nf,
            cap: ideal_cap,
        });
    }
    let wp = match spec.interp {
        Interpolation::InjectionOnly => CsrMatrix::zeros(nf, nc),
        Interpolation::InjectionJacobi => {
            let neg: Vec<f64> = dinv.as_ref().unwrap().iter().map(|d| -d).collect();
            let mut w = blocks.fc.clone();
            w.scale_rows(&neg);
            w
        }
        Interpolation::Ideal => dense_neg_solve(&DenseLu::factor_csr(&blocks.ff)?, &blocks.fc),
    };
    let wr = match spec.restrict {
        Restriction::Injection => CsrMatrix::zeros(nc, nf),
        Restriction::Jacobi => {
            let neg: Vec<f64> = dinv.as_ref().unwrap().iter().map(|d| -d).collect();
            scale_cols(&blocks.cf, &neg)
        }
        Restriction::Ideal => {
            let lut = DenseLu::factor_csr(&blocks.ff.transpose())?;
            dense_neg_solve(&lut, &blocks.cf.transpose()).transpose()
        }
    };
    Ok(Transfers { wp, wr })
}

/// `A_CF` restricted to entries coupling unknowns of the same mesh entity.
fn entity_diagonal(cf: &CsrMatrix, c_layout: &FieldLayout, f_layout: &FieldLayout) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..cf.nrows() {
        let (c, v) = cf.row(i);
        let ent = c_layout.entity(i);
        let node_row = c_layout.field(i) == Field::U;
        for (&j, &x) in c.iter().zip(v) {
            if f_layout.entity(j) == ent && (f_layout.field(j) == Field::U) == node_row {
                t.push((i, j, x));
            }
        }
    }
    CsrMatrix::from_triplets(cf.nrows(), cf.ncols(), &t).unwrap()
}

/// Coarse operator `A_CC + A_CF W_p + W_r A_FC + W_r A_FF W_p`, i.e. `R A P`,
/// with the correction sparsified according to `spec.drop`. `blocks.cf` is
/// expected to already carry the quasi-IMPES modification when requested.
pub fn build_coarse(blocks: &Blocks, t: &Transfers, spec: &MgrLevelSpec, c_layout: &FieldLayout) -> Result<CsrMatrix> {
    let nc = blocks.cc.nrows();
    let mut corr = CsrMatrix::zeros(nc, nc);
    if t.wp.nnz() > 0 {
        corr = spgemm(&blocks.cf, &t.wp)?;
    }
    if t.wr.nnz() > 0 {
        let wa = spgemm(&t.wr, &blocks.fc)?;
        corr = corr.add_scaled(1.0, &wa, 1.0)?;
        if t.wp.nnz() > 0 {
            let waw = spgemm(&spgemm(&t.wr, &blocks.ff)?, &t.wp)?;
            corr = corr.add_scaled(1.0, &waw, 1.0)?;
        }
    }
    if let DropPolicy::Nmax { n_max, dropped } = spec.drop {
        corr = sparsify_with(&corr, c_layout, n_max, dropped)?;
    }
    blocks.cc.add_scaled(1.0, &corr, 1.0)
}

#[derive(Debug, Clone)]
enum FSolver {
    Amg(AmgHierarchy),
    Jacobi { dinv: Vec<f64>, sweeps: usize, weight: f64 },
    None,
    Exact(DenseLu),
}

#[derive(Debug, Clone)]
enum LevelSmoother {
    Hbgs(HybridBlockGs, usize),
    Ilu(IluFactors),
}

#[derive(Debug, Clone)]
enum Terminal {
    Amg(AmgHierarchy),
    Exact(DenseLu),
}

#[derive(Debug, Clone)]
struct MgrLevel {
    a: CsrMatrix,
    layout: FieldLayout,
    split: CfSplitting,
    blocks: Blocks,
    transfers: Transfers,
    f_solver: FSolver,
    smoother: Option<LevelSmoother>,
}

#[derive(Debug, Clone)]
pub struct MgrHierarchy {
    levels: Vec<MgrLevel>,
    coarse_a: CsrMatrix,
    coarse_layout: FieldLayout,
    terminal: Terminal,
    relax_order: RelaxOrder,
}

fn check_spec(spec: &MgrLevelSpec, layout: &FieldLayout, level: usize) -> Result<()> {
    let present = layout.present_fields();
    let bad = |msg: String| Err(SolverError::InvalidConfig(format!("MGR level {level}: {msg}")));
    if spec.f_fields.iter().any(|f| spec.c_fields.contains(f)) {
        return bad("F and C fields overlap".into());
    }
    let mut union: Vec<Field> = spec.f_fields.iter().chain(&spec.c_fields).copied().collect();
    union.sort();
    union.dedup();
    if union != present {
        return bad(format!("fields {union:?} do not match the level's fields {present:?}"));
    }
    if spec.c_fields.is_empty() {
        return bad("empty C set".into());
    }
    Ok(())
}

pub fn mgr_setup(a: &CsrMatrix, layout: &FieldLayout, cfg: &MgrConfig) -> Result<MgrHierarchy> {
    if !a.is_square() {
        return Err(SolverError::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    if layout.ndofs() != a.nrows() {
        return Err(SolverError::DimensionMismatch {
            context: "MGR layout",
            expected: a.nrows(),
            actual: layout.ndofs(),
        });
    }
    if cfg.partitions == 0 {
        return Err(SolverError::InvalidConfig("partitions must be positive".into()));
    }
    let mut levels = Vec::new();
    let mut cur = a.clone();
    let mut cur_layout = layout.clone();
    for (l, spec) in cfg.levels.iter().enumerate() {
        if spec.f_fields.is_empty() {
            // reduction-free level: the whole operator goes to the terminal solve
            if cfg.levels.len() != 1 || cur_layout.present_fields().len() != 1 {
                return Err(SolverError::InvalidConfig(
                    "an all-C level is only allowed as the single level of a scalar system".into(),
                ));
            }
            check_spec(spec, &cur_layout, l)?;
            break;
        }
        check_spec(spec, &cur_layout, l)?;
        let split = CfSplitting::from_fields(&cur_layout, &spec.c_fields);
        if split.num_f() == 0 || split.num_c() == 0 {
            return Err(SolverError::InvalidConfig(format!("MGR level {l}: empty F or C set")));
        }
        let blocks = extract_blocks(&cur, &split)?;
        let f_layout = cur_layout.restrict(split.f_points());
        let c_layout = cur_layout.restrict(split.c_points());
        let mut coarse_blocks = blocks.clone();
        if spec.quasi_impes {
            coarse_blocks.cf = entity_diagonal(&blocks.cf, &c_layout, &f_layout);
        }
        let transfers = build_transfers(&coarse_blocks, spec, cfg.ideal_size_cap)?;
        let coarse = build_coarse(&coarse_blocks, &transfers, spec, &c_layout)?;
        let f_solver = match spec.f_relax {
            FRelax::AmgVcycle { cycles } => {
                let mut acfg = if spec.f_fields == [Field::U] {
                    cfg.f_amg.clone()
                } else {
                    cfg.coarse_amg.clone()
                };
                acfg.cycles = cycles;
                acfg.partitions = cfg.partitions;
                FSolver::Amg(amg_setup(&blocks.ff, &acfg)?)
            }
            FRelax::Jacobi { sweeps, weight } => FSolver::Jacobi {
                dinv: diag_inverse(&blocks.ff)?,
                sweeps,
                weight,
            },
            FRelax::None => FSolver::None,
            FRelax::Exact => {
                if blocks.ff.nrows() > cfg.ideal_size_cap {
                    return Err(SolverError::IdealTooLarge {
                        rows: blocks.ff.nrows(),
                        cap: cfg.ideal_size_cap,
                    });
                }
                FSolver::Exact(DenseLu::factor_csr(&blocks.ff)?)
            }
        };
        let smoother = level_smoother(&cur, &cur_layout, spec.global_smoother, cfg)?;
        levels.push(MgrLevel {
            a: std::mem::replace(&mut cur, coarse),
            layout: std::mem::replace(&mut cur_layout, c_layout),
            split,
            blocks,
            transfers,
            f_solver,
            smoother,
        });
    }
    let terminal = match cfg.coarse_solve {
        CoarseSolve::Amg => {
            let mut acfg = cfg.coarse_amg.clone();
            acfg.partitions = cfg.partitions;
            Terminal::Amg(amg_setup(&cur, &acfg)?)
        }
        CoarseSolve::Exact => Terminal::Exact(DenseLu::factor_csr(&cur)?),
    };
    Ok(MgrHierarchy {
        levels,
        coarse_a: cur,
        coarse_layout: cur_layout,
        terminal,
        relax_order: cfg.relax_order,
    })
}

fn level_smoother(
    a: &CsrMatrix,
    layout: &FieldLayout,
    kind: GlobalSmoother,
    cfg: &MgrConfig,
) -> Result<Option<LevelSmoother>> {
    let flow_pairs = layout.ordering() == DofOrdering::FlowInterleaved && !layout.fields().contains(&Field::U);
    let align = if flow_pairs { 2 } else { 1 };
    let parts = || {
        PartitionSet::uniform_aligned(a.nrows(), cfg.partitions, align)
            .or_else(|_| PartitionSet::uniform(a.nrows(), cfg.partitions))
    };
    Ok(match kind {
        GlobalSmoother::None => None,
        GlobalSmoother::Hbgs { sweeps } => Some(LevelSmoother::Hbgs(HybridBlockGs::new(a, layout, &parts()?)?, sweeps)),
        GlobalSmoother::Ilu { fill } => {
            let icfg = IluConfig {
                fill_level: fill,
                shift_on_zero_pivot: cfg.ilu_zero_pivot_shift,
                partitions: (cfg.partitions > 1).then(parts).transpose()?,
            };
            Some(LevelSmoother::Ilu(ilu_factor_with(a, &icfg)?))
        }
    })
}

impl MgrHierarchy {
    /// Number of reduction levels (excluding the terminal grid).
    pub fn num_reduction_levels(&self) -> usize {
        self.levels.len()
    }

    /// Operator sizes from the fine grid down to the terminal grid.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels
            .iter()
            .map(|l| l.a.nrows())
            .chain(std::iter::once(self.coarse_a.nrows()))
            .collect()
    }

    /// Operator of `level`; `level == num_reduction_levels()` is the terminal grid.
    pub fn operator(&self, level: usize) -> &CsrMatrix {
        self.levels.get(level).map_or(&self.coarse_a, |l| &l.a)
    }

    pub fn layout(&self, level: usize) -> &FieldLayout {
        self.levels.get(level).map_or(&self.coarse_layout, |l| &l.layout)
    }

    pub fn splitting(&self, level: usize) -> Option<&CfSplitting> {
        self.levels.get(level).map(|l| &l.split)
    }

    pub fn blocks(&self, level: usize) -> Option<&Blocks> {
        self.levels.get(level).map(|l| &l.blocks)
    }

    pub fn transfers(&self, level: usize) -> Option<&Transfers> {
        self.levels.get(level).map(|l| &l.transfers)
    }

    /// Levels of the terminal AMG hierarchy (1 for an exact coarse solve).
    pub fn terminal_amg_levels(&self) -> usize {
        match &self.terminal {
            Terminal::Amg(h) => h.num_levels(),
            Terminal::Exact(_) => 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.operator(0).nrows()
    }

    /// `z = M^{-1} v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(SolverError::DimensionMismatch {
                context: "mgr_apply",
                expected: self.dim(),
                actual: v.len(),
            });
        }
        let mut z = vec![0.0; v.len()];
        self.apply_at(0, v, &mut z);
        Ok(z)
    }

    fn apply_at(&self, l: usize, v: &[f64], z: &mut [f64]) {
        let Some(lev) = self.levels.get(l) else {
            match &self.terminal {
                Terminal::Amg(h) => h.solve_from_zero(v, z),
                Terminal::Exact(lu) => {
                    z.copy_from_slice(v);
                    lu.solve_in_place(z);
                }
            }
            return;
        };
        let n = v.len();
        z.iter_mut().for_each(|x| *x = 0.0);
        match &lev.smoother {
            None => {}
            Some(LevelSmoother::Hbgs(g, sweeps)) => {
                for _ in 0..*sweeps {
                    g.sweep_unchecked(&lev.a, v, z);
                }
            }
            Some(LevelSmoother::Ilu(f)) => f.solve_unchecked(v, z),
        }
        let mut r = vec![0.0; n];
        if self.relax_order == RelaxOrder::Pre {
            self.f_relax(lev, v, z, &mut r);
        }
        lev.a.residual_into(v, z, &mut r);
        let split = &lev.split;
        let rf: Vec<f64> = split.f_points().iter().map(|&i| r[i]).collect();
        let mut rc: Vec<f64> = split.c_points().iter().map(|&i| r[i]).collect();
        if lev.transfers.wr.nnz() > 0 {
            let mut t = vec![0.0; rc.len()];
            lev.transfers.wr.matvec_unchecked(&rf, &mut t);
            rc.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
        }
        let mut ec = vec![0.0; rc.len()];
        self.apply_at(l + 1, &rc, &mut ec);
        for (k, &i) in split.c_points().iter().enumerate() {
            z[i] += ec[k];
        }
        if lev.transfers.wp.nnz() > 0 {
            let mut ef = vec![0.0; split.num_f()];
            lev.transfers.wp.matvec_unchecked(&ec, &mut ef);
            for (k, &i) in split.f_points().iter().enumerate() {
                z[i] += ef[k];
            }
        }
        if self.relax_order == RelaxOrder::Post {
            self.f_relax(lev, v, z, &mut r);
        }
    }

    fn f_relax(&self, lev: &MgrLevel, v: &[f64], z: &mut [f64], r: &mut [f64]) {
        if matches!(lev.f_solver, FSolver::None) {
            return;
        }
        lev.a.residual_into(v, z, r);
        let split = &lev.split;
        let rf: Vec<f64> = split.f_points().iter().map(|&i| r[i]).collect();
        let mut ef = vec![0.0; rf.len()];
        match &lev.f_solver {
            FSolver::Amg(h) => h.solve_from_zero(&rf, &mut ef),
            FSolver::Jacobi { dinv, sweeps, weight } => {
                let mut t = vec![0.0; rf.len()];
                for s in 0..*sweeps {
                    if s == 0 {
                        for i in 0..rf.len() {
                            ef[i] = weight * dinv[i] * rf[i];
                        }
                    } else {
                        lev.blocks.ff.residual_into(&rf, &ef, &mut t);
                        for i in 0..rf.len() {
                            ef[i] += weight * dinv[i] * t[i];
                        }
                    }
                }
            }
            FSolver::Exact(lu) => {
                ef.copy_from_slice(&rf);
                lu.solve_in_place(&mut ef);
            }
            FSolver::None => unreachable!(),
        }
        for (k, &i) in split.f_points().iter().enumerate() {
            z[i] += ef[k];
        }
    }
}

impl Preconditioner for MgrHierarchy {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.apply_at(0, r, z);
    }
}
