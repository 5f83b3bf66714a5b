//! Two-point flux approximation with phase-potential upwinding.

use crate::constitutive::{FluidProps, Phase};
use crate::error::{PoroError, Result};
use crate::mesh::{Axis, StructuredMesh};

/// Half transmissibility `kappa A / d` of a cell towards one of its faces.
pub fn half_transmissibility(kappa: f64, area: f64, dist: f64) -> Result<f64> {
    if dist <= 0.0 {
        return Err(PoroError::InvalidInput("zero cell-to-face distance".into()));
    }
    Ok(kappa * area / dist)
}

pub fn harmonic(tk: f64, tl: f64) -> f64 {
    if tk + tl == 0.0 {
        0.0
    } else {
        tk * tl / (tk + tl)
    }
}

/// Transmissibility of every interior face, in [`StructuredMesh::interior_faces`] order.
pub fn transmissibilities(mesh: &StructuredMesh, perm: &[[f64; 3]]) -> Result<Vec<f64>> {
    let h = mesh.spacing();
    mesh.interior_faces()
        .iter()
        .map(|f| {
            let d = f.axis.index();
            let area = mesh.face_area(f.axis);
            let tk = half_transmissibility(perm[f.k][d], area, 0.5 * h[d])?;
            let tl = half_transmissibility(perm[f.l][d], area, 0.5 * h[d])?;
            Ok(harmonic(tk, tl))
        })
        .collect()
}

/// One-sided transmissibility of a boundary face of `cell` normal to `axis`.
pub fn boundary_transmissibility(mesh: &StructuredMesh, perm: &[f64; 3], axis: Axis) -> Result<f64> {
    let d = axis.index();
    half_transmissibility(perm[d], mesh.face_area(axis), 0.5 * mesh.spacing()[d])
}

/// Cell-side state entering a face flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSide {
    pub p: f64,
    pub s: f64,
    pub x: [f64; 3],
}

/// Mass flux from `K` to `L` and its partials with respect to both cells.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseFlux {
    pub w: f64,
    pub dp_k: f64,
    pub dp_l: f64,
    pub ds_k: f64,
    pub ds_l: f64,
    /// Potential difference `Phi_K - Phi_L`.
    pub dphi: f64,
    pub upwind_k: bool,
}

/// `w = rho_up lambda_up T (Phi_K - Phi_L)` with face-averaged gravity density.
///
/// Upwinding picks `K` when the potential difference is non-negative; the
/// derivative of the switch is ignored.
pub fn phase_flux(fluid: &FluidProps, phase: Phase, t: f64, k: &FluxSide, l: &FluxSide) -> PhaseFlux {
    let (rho_k, drho_k) = fluid.density(k.p, phase);
    let (rho_l, drho_l) = fluid.density(l.p, phase);
    let gdx: f64 = (0..3).map(|d| fluid.gravity[d] * (k.x[d] - l.x[d])).sum();
    let rho_bar = 0.5 * (rho_k + rho_l);
    let dphi = k.p - l.p - rho_bar * gdx;
    let ddphi_k = 1.0 - 0.5 * drho_k * gdx;
    let ddphi_l = -1.0 - 0.5 * drho_l * gdx;
    let upwind_k = dphi >= 0.0;
    let (rho_up, drho_up, s_up) = if upwind_k {
        (rho_k, drho_k, k.s)
    } else {
        (rho_l, drho_l, l.s)
    };
    let (lam, dlam) = fluid.mobility(s_up, phase);
    let w = rho_up * lam * t * dphi;
    let mut out = PhaseFlux {
        w,
        dp_k: t * lam * rho_up * ddphi_k,
        dp_l: t * lam * rho_up * ddphi_l,
        dphi,
        upwind_k,
        ..Default::default()
    };
    let ds = t * rho_up * dlam * dphi;
    let dp_up = t * lam * drho_up * dphi;
    if upwind_k {
        out.dp_k += dp_up;
        out.ds_k = ds;
    } else {
        out.dp_l += dp_up;
        out.ds_l = ds;
    }
    out
}
