//! Multigrid-reduction preconditioning for coupled sparse systems.
//!
//! The crate provides CSR kernels ([`sparse`]), relaxation and incomplete
//! factorization smoothers ([`smoothers`]), classical algebraic multigrid
//! ([`amg`]), the multilevel reduction preconditioner ([`mgr`]) and a right
//! preconditioned restarted GMRES ([`krylov`]).

pub mod amg;
pub mod dense;
pub mod error;
pub mod krylov;
pub mod mgr;
pub mod smoothers;
pub mod sparse;

pub use error::{Result, SolverError};
