//! Initial states: hydrostatic pressure and mechanical equilibrium.

use log::warn;
use mgr_core::amg::{amg_setup, AmgConfig};
use mgr_core::krylov::{gmres, SolveStats};

use crate::assembly::Assembler;
use crate::constitutive::{FluidProps, Phase};
use crate::error::{PoroError, Result};
use crate::mesh::StructuredMesh;
use crate::newton::tight_gmres;
use crate::problem::DiscreteState;

/// Pressure with zero potential difference of `phase` across every vertical
/// face, starting from `p_top` in the top layer. Assumes gravity along z.
pub fn hydrostatic_pressure(mesh: &StructuredMesh, fluid: &FluidProps, phase: Phase, p_top: f64) -> Vec<f64> {
    let mut p = vec![0.0; mesh.num_cells()];
    // x_K - x_L for a lower cell K below an upper cell L
    let gdx = -fluid.gravity[2] * mesh.hz;
    for j in 0..mesh.ny {
        for i in 0..mesh.nx {
            p[mesh.cell_index(i, j, mesh.nz - 1)] = p_top;
            for k in (0..mesh.nz - 1).rev() {
                let pl = p[mesh.cell_index(i, j, k + 1)];
                let rho_l = fluid.density(pl, phase).0;
                let mut pk = pl;
                for _ in 0..50 {
                    let (rho, drho) = fluid.density(pk, phase);
                    let f = pk - pl - 0.5 * (rho + rho_l) * gdx;
                    let step = f / (1.0 - 0.5 * drho * gdx);
                    pk -= step;
                    if step.abs() <= 1e-15 * pk.abs() {
                        break;
                    }
                }
                p[mesh.cell_index(i, j, k)] = pk;
            }
        }
    }
    p
}

/// Solves the displacement equations for fixed saturation and pressure and
/// stores the result in `state.u`.
pub fn equilibrate_mechanics(asm: &Assembler, state: &mut DiscreteState) -> Result<SolveStats> {
    let x = state.to_vector();
    let load = asm.mechanics_load(&x);
    let k = asm.constrained_stiffness();
    let amg = amg_setup(&k, &AmgConfig::elasticity())?;
    let (u, stats) = gmres(&k, &amg, &load, &vec![0.0; load.len()], &tight_gmres())?;
    if !stats.converged {
        warn!(
            "mechanical equilibration stopped at residual {:.3e}",
            stats.final_residual
        );
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(PoroError::NewtonFailed("mechanical equilibration diverged".into()));
    }
    state.u = u;
    Ok(stats)
}

/// Hydrostatic (in `phase`) pressure, the given saturations and the matching
/// mechanical equilibrium.
pub fn initial_state(asm: &Assembler, phase: Phase, p_top: f64, saturation: Vec<f64>) -> Result<DiscreteState> {
    let problem = asm.problem();
    if saturation.len() != problem.mesh.num_cells() {
        return Err(PoroError::InvalidInput(
            "saturation length differs from cell count".into(),
        ));
    }
    let mut state = DiscreteState::zeros(&problem.mesh);
    state.p = hydrostatic_pressure(&problem.mesh, &problem.fluid, phase, p_top);
    state.s = saturation;
    equilibrate_mechanics(asm, &mut state)?;
    Ok(state)
}
