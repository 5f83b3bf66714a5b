use mgr_core::sparse::{DofOrdering, Field, FieldLayout};
use serde::{Deserialize, Serialize};

use crate::constitutive::{FluidProps, Materials};
use crate::error::{PoroError, Result};
use crate::mesh::{Side, StructuredMesh};

/// Nodal displacements, cell saturations and cell pressures.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteState {
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
}

impl DiscreteState {
    pub fn zeros(mesh: &StructuredMesh) -> Self {
        Self {
            u: vec![0.0; 3 * mesh.num_nodes()],
            s: vec![0.0; mesh.num_cells()],
            p: vec![0.0; mesh.num_cells()],
        }
    }

    /// Global unknown vector: displacements node-blocked, then `(s, p)` per cell.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.u.len() + 2 * self.s.len());
        x.extend_from_slice(&self.u);
        for (s, p) in self.s.iter().zip(&self.p) {
            x.push(*s);
            x.push(*p);
        }
        x
    }

    pub fn from_vector(x: &[f64], num_nodes: usize) -> Self {
        let nu = 3 * num_nodes;
        let flow = &x[nu..];
        Self {
            u: x[..nu].to_vec(),
            s: flow.iter().step_by(2).copied().collect(),
            p: flow.iter().skip(1).step_by(2).copied().collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.s).chain(&self.p).all(|v| v.is_finite())
    }
}

/// Cell-local mass source (kg/m^3/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SourceKind {
    /// Prescribed phase mass rates; positive injects.
    Rate { q_w: f64, q_nw: f64 },
    /// Total mass withdrawal split between phases by mass mobility.
    Producer { q_total: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub cell: usize,
    pub kind: SourceKind,
}

/// Uniform traction (Pa) applied on one side of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TractionLoad {
    pub side: Side,
    pub traction: [f64; 3],
}

/// Prescribed pressure and saturation on the boundary face of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowDirichlet {
    pub cell: usize,
    pub side: Side,
    pub p: f64,
    pub s: f64,
}

/// Boundary conditions and sources. Flow faces not listed are no-flow, and
/// displacement components not fixed are traction boundaries (zero unless loaded).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAndSources {
    /// Nodes with homogeneous Dirichlet displacement, per component.
    pub fixed_nodes: Vec<(usize, [bool; 3])>,
    pub tractions: Vec<TractionLoad>,
    pub flow_dirichlet: Vec<FlowDirichlet>,
    pub sources: Vec<Source>,
}

impl BoundaryAndSources {
    /// Fixes the given components of every node on `side`.
    pub fn fix_side(&mut self, mesh: &StructuredMesh, side: Side, comps: [bool; 3]) {
        for n in mesh.boundary_nodes(side) {
            self.fixed_nodes.push((n, comps));
        }
    }

    /// Mask over displacement dofs (`3 node + comp`).
    pub fn fixed_mask(&self, num_nodes: usize) -> Vec<bool> {
        let mut mask = vec![false; 3 * num_nodes];
        for &(n, comps) in &self.fixed_nodes {
            for (i, &c) in comps.iter().enumerate() {
                if c {
                    mask[3 * n + i] = true;
                }
            }
        }
        mask
    }
}

/// Mesh, materials, fluids and boundary data of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub mesh: StructuredMesh,
    pub materials: Materials,
    pub fluid: FluidProps,
    pub bcs: BoundaryAndSources,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        let nc = self.mesh.num_cells();
        let nn = self.mesh.num_nodes();
        self.materials.validate(nc)?;
        self.fluid.validate()?;
        for &(n, _) in &self.bcs.fixed_nodes {
            if n >= nn {
                return Err(PoroError::InvalidInput(format!("fixed node {n} out of range")));
            }
        }
        let fixed = self.bcs.fixed_mask(nn);
        for t in &self.bcs.tractions {
            for c in self.mesh.boundary_cells(t.side) {
                for n in self.mesh.boundary_face_nodes(c, t.side) {
                    for i in 0..3 {
                        if t.traction[i] != 0.0 && fixed[3 * n + i] {
                            return Err(PoroError::InvalidInput(format!(
                                "node {n} component {i} carries both a traction and a fixed displacement"
                            )));
                        }
                    }
                }
            }
        }
        for d in &self.bcs.flow_dirichlet {
            if d.cell >= nc || !self.mesh.boundary_cells(d.side).contains(&d.cell) {
                return Err(PoroError::InvalidInput(format!(
                    "flow Dirichlet face ({}, {:?}) is not a boundary face",
                    d.cell, d.side
                )));
            }
            if !(0.0..=1.0).contains(&d.s) {
                return Err(PoroError::InvalidInput("boundary saturation outside [0, 1]".into()));
            }
        }
        for src in &self.bcs.sources {
            if src.cell >= nc {
                return Err(PoroError::InvalidInput(format!(
                    "source cell {} out of range",
                    src.cell
                )));
            }
        }
        Ok(())
    }

    pub fn num_u_dofs(&self) -> usize {
        3 * self.mesh.num_nodes()
    }

    pub fn num_dofs(&self) -> usize {
        self.num_u_dofs() + 2 * self.mesh.num_cells()
    }

    #[inline]
    pub fn s_dof(&self, cell: usize) -> usize {
        self.num_u_dofs() + 2 * cell
    }

    #[inline]
    pub fn p_dof(&self, cell: usize) -> usize {
        self.num_u_dofs() + 2 * cell + 1
    }

    /// Field layout of the global unknown vector.
    pub fn layout(&self) -> FieldLayout {
        let nn = self.mesh.num_nodes();
        let nc = self.mesh.num_cells();
        let mut fields = Vec::with_capacity(self.num_dofs());
        let mut entities = Vec::with_capacity(self.num_dofs());
        for n in 0..nn {
            fields.extend([Field::U; 3]);
            entities.extend([n; 3]);
        }
        for c in 0..nc {
            fields.extend([Field::S, Field::P]);
            entities.extend([c, c]);
        }
        FieldLayout::new(fields, entities, DofOrdering::FlowInterleaved)
            .expect("poromechanics layout is interleaved by construction")
    }
}
