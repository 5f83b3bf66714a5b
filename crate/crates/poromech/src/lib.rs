//! Fully-implicit two-phase poromechanics on structured hexahedral grids.
//!
//! Displacements use trilinear finite elements on mesh nodes; saturation and
//! pressure are cell-centered with two-point upwind fluxes. [`assembly`]
//! produces the residual and the analytic block Jacobian, [`newton`] solves
//! each time step with the multigrid-reduction preconditioned GMRES from
//! `mgr-core`, and [`sim`] marches in time.

pub mod assembly;
pub mod constitutive;
pub mod error;
pub mod fdcheck;
pub mod fe;
pub mod flux;
pub mod init;
pub mod mesh;
pub mod newton;
pub mod output;
pub mod problem;
pub mod sim;

pub use assembly::Assembler;
pub use constitutive::{FluidProps, Materials, Phase, RockProps};
pub use error::{PoroError, Result};
pub use mesh::{Side, StructuredMesh};
pub use newton::{newton_solve, LinearSolverConfig, NewtonConfig, NewtonStats};
pub use problem::{BoundaryAndSources, DiscreteState, Problem, Source, SourceKind};
pub use sim::{Simulator, SolveReport};
