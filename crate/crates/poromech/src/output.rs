//! CSV snapshots of cell and nodal fields.

use std::io::Write;

use crate::error::Result;
use crate::problem::{DiscreteState, Problem};

/// Writes `cell,x,y,z,s,p` rows.
pub fn write_cell_csv<W: Write>(w: W, problem: &Problem, state: &DiscreteState) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["cell", "x", "y", "z", "s", "p"])?;
    for c in 0..problem.mesh.num_cells() {
        let [x, y, z] = problem.mesh.cell_center(c);
        out.serialize((c, x, y, z, state.s[c], state.p[c]))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `node,x,y,z,ux,uy,uz` rows.
pub fn write_node_csv<W: Write>(w: W, problem: &Problem, state: &DiscreteState) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["node", "x", "y", "z", "ux", "uy", "uz"])?;
    for n in 0..problem.mesh.num_nodes() {
        let [x, y, z] = problem.mesh.node_coords(n);
        out.serialize((n, x, y, z, state.u[3 * n], state.u[3 * n + 1], state.u[3 * n + 2]))?;
    }
    out.flush()?;
    Ok(())
}
