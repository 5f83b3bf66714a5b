//! Fluid and rock closures: densities, relative permeabilities, porosity.

use serde::{Deserialize, Serialize};

use crate::error::{PoroError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Wetting,
    NonWetting,
}

/// Fluid properties shared by all cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidProps {
    pub rho_w0: f64,
    pub rho_nw0: f64,
    pub c_w: f64,
    pub c_nw: f64,
    pub mu_w: f64,
    pub mu_nw: f64,
    pub s_wr: f64,
    pub s_nr: f64,
    /// Reference pressure for densities and porosity (Pa).
    pub p_ref: f64,
    /// Gravitational acceleration (m/s^2).
    pub gravity: [f64; 3],
}

impl Default for FluidProps {
    fn default() -> Self {
        Self {
            rho_w0: 1000.0,
            rho_nw0: 800.0,
            c_w: 4.5e-10,
            c_nw: 1.0e-9,
            mu_w: 1.0e-3,
            mu_nw: 5.0e-3,
            s_wr: 0.1,
            s_nr: 0.1,
            p_ref: 1.0e7,
            gravity: [0.0, 0.0, -9.81],
        }
    }
}

impl FluidProps {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mu_w > 0.0
            && self.mu_nw > 0.0
            && self.rho_w0 > 0.0
            && self.rho_nw0 > 0.0
            && self.s_wr >= 0.0
            && self.s_nr >= 0.0
            && self.s_wr + self.s_nr < 1.0
            && self.gravity.iter().all(|g| g.is_finite());
        if ok {
            Ok(())
        } else {
            Err(PoroError::InvalidInput(format!("invalid fluid properties {self:?}")))
        }
    }

    pub fn viscosity(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Wetting => self.mu_w,
            Phase::NonWetting => self.mu_nw,
        }
    }

    /// Exponential density law and its pressure derivative.
    pub fn density(&self, p: f64, phase: Phase) -> (f64, f64) {
        let (rho0, c) = match phase {
            Phase::Wetting => (self.rho_w0, self.c_w),
            Phase::NonWetting => (self.rho_nw0, self.c_nw),
        };
        let rho = rho0 * (c * (p - self.p_ref)).exp();
        (rho, c * rho)
    }

    pub fn rel_perm(&self, s: f64) -> RelPerm {
        let span = 1.0 - self.s_wr - self.s_nr;
        let raw = (s - self.s_wr) / span;
        let se = raw.clamp(0.0, 1.0);
        let inside = (0.0..=1.0).contains(&raw);
        let dse = if inside { 1.0 / span } else { 0.0 };
        RelPerm {
            krw: se * se,
            krn: (1.0 - se) * (1.0 - se),
            dkrw: 2.0 * se * dse,
            dkrn: -2.0 * (1.0 - se) * dse,
        }
    }

    /// Phase mobility `k_r / mu` and its saturation derivative.
    pub fn mobility(&self, s: f64, phase: Phase) -> (f64, f64) {
        let kr = self.rel_perm(s);
        match phase {
            Phase::Wetting => (kr.krw / self.mu_w, kr.dkrw / self.mu_w),
            Phase::NonWetting => (kr.krn / self.mu_nw, kr.dkrn / self.mu_nw),
        }
    }
}

/// Quadratic Corey relative permeabilities with saturation derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelPerm {
    pub krw: f64,
    pub krn: f64,
    pub dkrw: f64,
    pub dkrn: f64,
}

/// Linearized poroelastic porosity with its partials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Porosity {
    pub phi: f64,
    pub dphi_deps: f64,
    pub dphi_dp: f64,
    /// The raw value left `(0, 1)` and was clamped (partials set to zero).
    pub clamped: bool,
}

pub const POROSITY_FLOOR: f64 = 1e-6;

/// `phi = phi0 + b eps_v + (p - p_ref) / N`, clamped into `(0, 1)`.
pub fn porosity(phi0: f64, biot: f64, n_inv: f64, eps_v: f64, p: f64, p_ref: f64) -> Porosity {
    let phi = phi0 + biot * eps_v + n_inv * (p - p_ref);
    if phi < POROSITY_FLOOR || phi > 1.0 - POROSITY_FLOOR {
        return Porosity {
            phi: phi.clamp(POROSITY_FLOOR, 1.0 - POROSITY_FLOOR),
            dphi_deps: 0.0,
            dphi_dp: 0.0,
            clamped: true,
        };
    }
    Porosity {
        phi,
        dphi_deps: biot,
        dphi_dp: n_inv,
        clamped: false,
    }
}

/// Per-cell rock properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Materials {
    pub young: Vec<f64>,
    pub poisson: Vec<f64>,
    pub biot: Vec<f64>,
    pub porosity_ref: Vec<f64>,
    pub biot_modulus_inv: Vec<f64>,
    /// Diagonal permeability tensor (m^2).
    pub perm: Vec<[f64; 3]>,
    pub solid_density: Vec<f64>,
}

/// Scalar rock properties used to fill [`Materials`] uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RockProps {
    pub young: f64,
    pub poisson: f64,
    pub biot: f64,
    pub porosity_ref: f64,
    pub biot_modulus_inv: f64,
    pub perm: f64,
    pub solid_density: f64,
}

impl Default for RockProps {
    fn default() -> Self {
        Self {
            young: 1.0e9,
            poisson: 0.25,
            biot: 1.0,
            porosity_ref: 0.2,
            biot_modulus_inv: 1.0e-10,
            perm: 1.0e-15,
            solid_density: 2650.0,
        }
    }
}

impl Materials {
    pub fn uniform(ncells: usize, rock: &RockProps) -> Self {
        Self {
            young: vec![rock.young; ncells],
            poisson: vec![rock.poisson; ncells],
            biot: vec![rock.biot; ncells],
            porosity_ref: vec![rock.porosity_ref; ncells],
            biot_modulus_inv: vec![rock.biot_modulus_inv; ncells],
            perm: vec![[rock.perm; 3]; ncells],
            solid_density: vec![rock.solid_density; ncells],
        }
    }

    pub fn len(&self) -> usize {
        self.young.len()
    }

    pub fn is_empty(&self) -> bool {
        self.young.is_empty()
    }

    pub fn validate(&self, ncells: usize) -> Result<()> {
        let lens = [
            self.young.len(),
            self.poisson.len(),
            self.biot.len(),
            self.porosity_ref.len(),
            self.biot_modulus_inv.len(),
            self.perm.len(),
            self.solid_density.len(),
        ];
        if lens.iter().any(|&l| l != ncells) {
            return Err(PoroError::InvalidInput(format!(
                "material arrays must have {ncells} entries, got {lens:?}"
            )));
        }
        for c in 0..ncells {
            let ok = self.young[c] > 0.0
                && self.poisson[c] > 0.0
                && self.poisson[c] < 0.5
                && (0.0..=1.0).contains(&self.biot[c])
                && self.porosity_ref[c] > 0.0
                && self.porosity_ref[c] < 1.0
                && self.biot_modulus_inv[c] >= 0.0
                && self.perm[c].iter().all(|&k| k > 0.0)
                && self.solid_density[c] >= 0.0;
            if !ok {
                return Err(PoroError::InvalidInput(format!("invalid material in cell {c}")));
            }
        }
        Ok(())
    }
}
