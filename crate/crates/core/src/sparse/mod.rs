//! Sparse matrix storage, field layouts, C/F splittings and kernels.

mod csr;
pub mod io;
mod layout;
mod ops;

pub use csr::{CsrMatrix, SparsityPattern};
pub use layout::{CellBlock, CfSplitting, DofOrdering, Field, FieldLayout};
pub use ops::{
    assemble_blocks, block_diag_inverse, diag_inverse, extract_blocks, invert_2x2, sparsify, sparsify_with, spgemm,
    triple_product, Blocks, DroppedEntries,
};
