use std::time::Instant;

use log::{debug, info, warn};
use mgr_core::krylov::{gmres, GmresConfig};
use mgr_core::mgr::{mgr_setup, MgrConfig};
use mgr_core::sparse::FieldLayout;
use serde::{Deserialize, Serialize};

use crate::assembly::Assembler;
use crate::error::{PoroError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    pub rtol: f64,
    /// Absolute tolerance on the row-scaled residual norm.
    pub atol: f64,
    pub max_newton: usize,
    pub max_backtracks: usize,
    pub backtrack_factor: f64,
    pub sufficient_decrease: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-10,
            max_newton: 20,
            max_backtracks: 8,
            backtrack_factor: 0.5,
            sufficient_decrease: 1e-4,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !(in_unit(self.backtrack_factor) && in_unit(self.sufficient_decrease)) {
            return Err(PoroError::InvalidInput(
                "backtrack and sufficient-decrease factors must lie in (0, 1)".into(),
            ));
        }
        if !(self.rtol >= 0.0 && self.atol >= 0.0) || self.max_newton == 0 {
            return Err(PoroError::InvalidInput("invalid Newton tolerances".into()));
        }
        Ok(())
    }
}

/// Preconditioner and Krylov settings for the Newton linear systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSolverConfig {
    pub mgr: MgrConfig,
    pub gmres: GmresConfig,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonStats {
    pub iterations: usize,
    pub gmres_iters: Vec<usize>,
    pub linear_converged: Vec<bool>,
    /// Row-scaled residual norm before each iteration and at exit.
    pub residual_norms: Vec<f64>,
    pub backtracks: usize,
    pub clipped: usize,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scaled_residual(asm: &Assembler, x: &[f64], prev: &[f64], dt: f64, d: &[f64]) -> Result<Vec<f64>> {
    let mut r = asm.residual(x, prev, dt)?;
    for (ri, di) in r.iter_mut().zip(d) {
        *ri *= di;
    }
    Ok(r)
}

fn clip_saturations(asm: &Assembler, x: &mut [f64]) -> usize {
    let p = asm.problem();
    let mut clipped = 0;
    for c in 0..p.mesh.num_cells() {
        let s = &mut x[p.s_dof(c)];
        if *s < 0.0 || *s > 1.0 {
            *s = s.clamp(0.0, 1.0);
            clipped += 1;
        }
    }
    clipped
}

/// Solves `F(x) = 0` for one time step starting from `x0`.
///
/// Input errors are returned as `Err`; failing to converge is reported
/// through [`NewtonStats::converged`] so the caller can cut the step.
pub fn newton_solve(
    asm: &Assembler,
    layout: &FieldLayout,
    prev: &[f64],
    x0: &[f64],
    dt: f64,
    ncfg: &NewtonConfig,
    lcfg: &LinearSolverConfig,
) -> Result<(Vec<f64>, NewtonStats)> {
    ncfg.validate()?;
    let d = asm.row_scaling(dt);
    let mut x = x0.to_vec();
    let mut stats = NewtonStats::default();
    let mut f = scaled_residual(asm, &x, prev, dt, &d)?;
    let mut fnorm = norm(&f);
    let f0 = fnorm;
    let target = (ncfg.rtol * f0).max(ncfg.atol);
    stats.residual_norms.push(fnorm);
    loop {
        if fnorm <= target {
            stats.converged = true;
            break;
        }
        if !fnorm.is_finite() || stats.iterations == ncfg.max_newton {
            break;
        }
        stats.iterations += 1;
        let (_, mut jac) = asm.residual_and_jacobian(&x, prev, dt)?;
        jac.scale_rows(&d);
        let t0 = Instant::now();
        let precond = match mgr_setup(&jac, layout, &lcfg.mgr) {
            Ok(h) => h,
            Err(e) => {
                warn!("preconditioner setup failed: {e}");
                break;
            }
        };
        let t1 = Instant::now();
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let (dx, ls) = gmres(&jac, &precond, &rhs, &vec![0.0; rhs.len()], &lcfg.gmres)?;
        let t2 = Instant::now();
        stats.setup_seconds += (t1 - t0).as_secs_f64();
        stats.solve_seconds += (t2 - t1).as_secs_f64();
        stats.gmres_iters.push(ls.iterations);
        stats.linear_converged.push(ls.converged);
        if !ls.converged {
            warn!(
                "GMRES stopped after {} iterations at residual {:.3e}",
                ls.iterations, ls.final_residual
            );
        }
        debug!(
            "Newton {}: |F| = {fnorm:.3e}, {} GMRES iterations",
            stats.iterations, ls.iterations
        );

        let mut lam = 1.0;
        let mut bt = 0;
        let accepted = loop {
            let mut trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + lam * b).collect();
            let clipped = clip_saturations(asm, &mut trial);
            let ft = scaled_residual(asm, &trial, prev, dt, &d)?;
            let tn = norm(&ft);
            if tn.is_finite() && tn <= (1.0 - ncfg.sufficient_decrease * lam) * fnorm {
                if clipped > 0 {
                    info!("clipped {clipped} saturations to [0, 1]");
                }
                stats.clipped += clipped;
                x = trial;
                f = ft;
                fnorm = tn;
                break true;
            }
            if bt == ncfg.max_backtracks {
                break false;
            }
            lam *= ncfg.backtrack_factor;
            bt += 1;
        };
        stats.backtracks += bt;
        if !accepted {
            warn!("line search failed after {bt} backtracks");
            break;
        }
        stats.residual_norms.push(fnorm);
    }
    Ok((x, stats))
}

/// Linear settings used by [`crate::init`] for the displacement-only solve.
pub(crate) fn tight_gmres() -> GmresConfig {
    GmresConfig {
        restart: 100,
        max_iters: 2000,
        rtol: 1e-12,
        atol: 1e-300,
    }
}
