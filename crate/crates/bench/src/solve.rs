//! Matrix-file solves, Newton-system export and the Jacobian check.

use std::fs;
use std::path::Path;
use std::time::Instant;

use mgr_core::krylov::gmres;
use mgr_core::mgr::mgr_setup;
use mgr_core::sparse::io::{read_matrix_file, read_vector_file, write_matrix_file, write_vector_file};
use mgr_core::sparse::{CsrMatrix, FieldLayout};
use mgr_poromech::fdcheck::{fd_check, FdReport};
use mgr_poromech::{Assembler, DiscreteState, LinearSolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{ProblemSpec, RunConfig};
use crate::error::{BenchError, Result};
use crate::problems::{prepare_from_config, prepare_staircase};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveFileReport {
    pub dofs: usize,
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        BenchError::Config(format!("{}: field `{field}`: {}", path.display(), e.into_inner()))
    })
}

/// MGR-preconditioned GMRES on a system given in memory.
pub fn solve_system(
    a: &CsrMatrix,
    b: &[f64],
    layout: &FieldLayout,
    solver: &LinearSolverConfig,
) -> Result<SolveFileReport> {
    layout.validate()?;
    if a.nrows() != layout.ndofs() || a.ncols() != layout.ndofs() {
        return Err(BenchError::Config(format!(
            "matrix is {}x{} but the layout has {} dofs",
            a.nrows(),
            a.ncols(),
            layout.ndofs()
        )));
    }
    if b.len() != a.nrows() {
        return Err(BenchError::Config(format!(
            "right-hand side has {} entries, matrix has {} rows",
            b.len(),
            a.nrows()
        )));
    }
    solver.gmres.validate()?;
    let t0 = Instant::now();
    let precond = mgr_setup(a, layout, &solver.mgr)?;
    let t1 = Instant::now();
    let (_, stats) = gmres(a, &precond, b, &vec![0.0; b.len()], &solver.gmres)?;
    let t2 = Instant::now();
    Ok(SolveFileReport {
        dofs: b.len(),
        iterations: stats.iterations,
        converged: stats.converged,
        residual_history: stats.residual_history,
        setup_seconds: (t1 - t0).as_secs_f64(),
        solve_seconds: (t2 - t1).as_secs_f64(),
    })
}

pub fn solve_file(matrix: &Path, rhs: &Path, layout: &Path, solver: &Path) -> Result<SolveFileReport> {
    let a = read_matrix_file(matrix)?;
    let b = read_vector_file(rhs)?;
    let layout: FieldLayout = read_json(layout)?;
    let solver: LinearSolverConfig = read_json(solver)?;
    solve_system(&a, &b, &layout, &solver)
}

/// Row-scaled Jacobian and right-hand side `-F` of the first Newton
/// iteration of the first step.
pub fn first_newton_system(asm: &Assembler, initial: &DiscreteState, dt: f64) -> Result<(CsrMatrix, Vec<f64>)> {
    let x = initial.to_vector();
    let (r, mut jac) = asm.residual_and_jacobian(&x, &x, dt)?;
    let d = asm.row_scaling(dt);
    jac.scale_rows(&d);
    let rhs = r.iter().zip(&d).map(|(ri, di)| -ri * di).collect();
    Ok((jac, rhs))
}

/// Writes `A.mtx`, `b.mtx`, `layout.json` and `solver.json` for the first
/// Newton system of `cfg` and returns the in-process solve of that system.
pub fn export(cfg: &RunConfig, dir: &Path) -> Result<SolveFileReport> {
    let prep = prepare_from_config(cfg)?;
    let (a, b) = first_newton_system(&prep.assembler, &prep.initial, cfg.schedule[0])?;
    let layout = prep.assembler.problem().layout();
    fs::create_dir_all(dir)?;
    write_matrix_file(dir.join("A.mtx"), &a)?;
    write_vector_file(dir.join("b.mtx"), &b)?;
    fs::write(
        dir.join("layout.json"),
        serde_json::to_string(&layout).expect("layouts serialize"),
    )?;
    fs::write(
        dir.join("solver.json"),
        serde_json::to_string_pretty(&cfg.solver).expect("solver configs serialize"),
    )?;
    solve_system(&a, &b, &layout, &cfg.solver)
}

/// Perturbs a state away from saturation end points and upwind ties.
fn perturbed(asm: &Assembler, base: &DiscreteState, rng: &mut ChaCha8Rng) -> DiscreteState {
    let mut st = base.clone();
    let fixed = asm.fixed_mask();
    for (i, v) in st.u.iter_mut().enumerate() {
        if !fixed[i] {
            *v += rng.gen_range(-1e-3..1e-3);
        }
    }
    for (s, p) in st.s.iter_mut().zip(st.p.iter_mut()) {
        *s = rng.gen_range(0.2..0.8);
        *p += rng.gen_range(-2e5..2e5);
    }
    st
}

/// Finite-difference check of the analytic Jacobian at a perturbed initial
/// state. Staircase problems may be as small as 3 cells per edge here.
pub fn check_jacobian(cfg: &RunConfig) -> Result<FdReport> {
    cfg.validate_settings()?;
    let prep = match &cfg.problem {
        ProblemSpec::Staircase(s) => prepare_staircase(s, &cfg.rock, &cfg.fluid)?,
        _ => {
            cfg.validate()?;
            prepare_from_config(cfg)?
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x = perturbed(&prep.assembler, &prep.initial, &mut rng).to_vector();
    let prev = perturbed(&prep.assembler, &prep.initial, &mut rng).to_vector();
    Ok(fd_check(&prep.assembler, &x, &prev, cfg.schedule[0])?)
}
