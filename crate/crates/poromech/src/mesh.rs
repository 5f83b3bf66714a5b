use serde::{Deserialize, Serialize};

use crate::error::{PoroError, Result};

/// Coordinate axis of a face normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// One of the six planar sides of the box domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Side {
    pub const ALL: [Side; 6] = [Side::XMin, Side::XMax, Side::YMin, Side::YMax, Side::ZMin, Side::ZMax];

    pub fn axis(self) -> Axis {
        match self {
            Side::XMin | Side::XMax => Axis::X,
            Side::YMin | Side::YMax => Axis::Y,
            Side::ZMin | Side::ZMax => Axis::Z,
        }
    }

    pub fn is_max(self) -> bool {
        matches!(self, Side::XMax | Side::YMax | Side::ZMax)
    }
}

/// Interior face between cells `k < l`, oriented from `k` to `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub k: usize,
    pub l: usize,
    pub axis: Axis,
}

/// Uniform box grid of `nx * ny * nz` hexahedral cells with origin at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredMesh {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
}

impl StructuredMesh {
    pub fn new(nx: usize, ny: usize, nz: usize, hx: f64, hy: f64, hz: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(PoroError::InvalidInput(format!("empty grid {nx}x{ny}x{nz}")));
        }
        if !(hx > 0.0 && hy > 0.0 && hz > 0.0) {
            return Err(PoroError::InvalidInput("grid spacings must be positive".into()));
        }
        Ok(Self { nx, ny, nz, hx, hy, hz })
    }

    /// Cube of `n^3` cells with edge length `len`.
    pub fn cube(n: usize, len: f64) -> Result<Self> {
        let h = len / n as f64;
        Self::new(n, n, n, h, h, h)
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1) * (self.nz + 1)
    }

    pub fn spacing(&self) -> [f64; 3] {
        [self.hx, self.hy, self.hz]
    }

    pub fn cell_volume(&self) -> f64 {
        self.hx * self.hy * self.hz
    }

    pub fn face_area(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.hy * self.hz,
            Axis::Y => self.hx * self.hz,
            Axis::Z => self.hx * self.hy,
        }
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    #[inline]
    pub fn cell_ijk(&self, c: usize) -> [usize; 3] {
        [c % self.nx, (c / self.nx) % self.ny, c / (self.nx * self.ny)]
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + (self.nx + 1) * (j + (self.ny + 1) * k)
    }

    #[inline]
    pub fn node_ijk(&self, n: usize) -> [usize; 3] {
        let (mx, my) = (self.nx + 1, self.ny + 1);
        [n % mx, (n / mx) % my, n / (mx * my)]
    }

    pub fn node_coords(&self, n: usize) -> [f64; 3] {
        let [i, j, k] = self.node_ijk(n);
        [i as f64 * self.hx, j as f64 * self.hy, k as f64 * self.hz]
    }

    pub fn cell_center(&self, c: usize) -> [f64; 3] {
        let [i, j, k] = self.cell_ijk(c);
        [
            (i as f64 + 0.5) * self.hx,
            (j as f64 + 0.5) * self.hy,
            (k as f64 + 0.5) * self.hz,
        ]
    }

    /// The eight nodes of cell `c`; local node `a` sits at offset `(a & 1, a >> 1 & 1, a >> 2)`.
    pub fn cell_nodes(&self, c: usize) -> [usize; 8] {
        let [i, j, k] = self.cell_ijk(c);
        std::array::from_fn(|a| self.node_index(i + (a & 1), j + ((a >> 1) & 1), k + (a >> 2)))
    }

    /// Interior faces, grouped by axis and ordered by the lower cell.
    pub fn interior_faces(&self) -> Vec<Face> {
        let mut faces = Vec::new();
        for k in 0..self.nz {
            for j in 0..self.ny {
                for i in 0..self.nx {
                    let c = self.cell_index(i, j, k);
                    if i + 1 < self.nx {
                        faces.push(Face {
                            k: c,
                            l: c + 1,
                            axis: Axis::X,
                        });
                    }
                    if j + 1 < self.ny {
                        faces.push(Face {
                            k: c,
                            l: c + self.nx,
                            axis: Axis::Y,
                        });
                    }
                    if k + 1 < self.nz {
                        faces.push(Face {
                            k: c,
                            l: c + self.nx * self.ny,
                            axis: Axis::Z,
                        });
                    }
                }
            }
        }
        faces
    }

    /// Cells adjacent to a side of the domain.
    pub fn boundary_cells(&self, side: Side) -> Vec<usize> {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let mut cells = Vec::new();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let on = match side {
                        Side::XMin => i == 0,
                        Side::XMax => i == nx - 1,
                        Side::YMin => j == 0,
                        Side::YMax => j == ny - 1,
                        Side::ZMin => k == 0,
                        Side::ZMax => k == nz - 1,
                    };
                    if on {
                        cells.push(self.cell_index(i, j, k));
                    }
                }
            }
        }
        cells
    }

    /// The four nodes of the boundary face of `cell` on `side`.
    pub fn boundary_face_nodes(&self, cell: usize, side: Side) -> [usize; 4] {
        let nodes = self.cell_nodes(cell);
        let bit = side.axis().index();
        let want = usize::from(side.is_max());
        let mut out = [0; 4];
        let mut t = 0;
        for (a, &n) in nodes.iter().enumerate() {
            if (a >> bit) & 1 == want {
                out[t] = n;
                t += 1;
            }
        }
        out
    }

    /// Nodes lying on a side of the domain.
    pub fn boundary_nodes(&self, side: Side) -> Vec<usize> {
        let (mx, my, mz) = (self.nx + 1, self.ny + 1, self.nz + 1);
        (0..self.num_nodes())
            .filter(|&n| {
                let [i, j, k] = self.node_ijk(n);
                match side {
                    Side::XMin => i == 0,
                    Side::XMax => i == mx - 1,
                    Side::YMin => j == 0,
                    Side::YMax => j == my - 1,
                    Side::ZMin => k == 0,
                    Side::ZMax => k == mz - 1,
                }
            })
            .collect()
    }

    /// Face neighbors of a cell (up to six).
    pub fn cell_neighbors(&self, c: usize) -> Vec<usize> {
        let [i, j, k] = self.cell_ijk(c);
        let mut out = Vec::with_capacity(6);
        if k > 0 {
            out.push(self.cell_index(i, j, k - 1));
        }
        if j > 0 {
            out.push(self.cell_index(i, j - 1, k));
        }
        if i > 0 {
            out.push(self.cell_index(i - 1, j, k));
        }
        if i + 1 < self.nx {
            out.push(self.cell_index(i + 1, j, k));
        }
        if j + 1 < self.ny {
            out.push(self.cell_index(i, j + 1, k));
        }
        if k + 1 < self.nz {
            out.push(self.cell_index(i, j, k + 1));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_indexing() {
        let m = StructuredMesh::new(3, 4, 5, 1.0, 2.0, 3.0).unwrap();
        assert_eq!(m.num_cells(), 60);
        assert_eq!(m.num_nodes(), 4 * 5 * 6);
        for c in 0..m.num_cells() {
            let [i, j, k] = m.cell_ijk(c);
            assert_eq!(m.cell_index(i, j, k), c);
        }
        let faces = m.interior_faces();
        assert_eq!(faces.len(), 2 * 4 * 5 + 3 * 3 * 5 + 3 * 4 * 4);
        assert!(faces.iter().all(|f| f.k < f.l));
    }

    #[test]
    fn cell_nodes_span_the_cell() {
        let m = StructuredMesh::new(2, 2, 2, 1.0, 1.0, 1.0).unwrap();
        let nodes = m.cell_nodes(7);
        assert_eq!(m.node_coords(nodes[0]), [1.0, 1.0, 1.0]);
        assert_eq!(m.node_coords(nodes[7]), [2.0, 2.0, 2.0]);
        assert_eq!(m.node_coords(nodes[5]), [2.0, 1.0, 2.0]);
        let top = m.boundary_face_nodes(7, Side::ZMax);
        assert!(top.iter().all(|&n| m.node_coords(n)[2] == 2.0));
    }

    #[test]
    fn rejects_empty_grid() {
        assert!(StructuredMesh::new(0, 1, 1, 1.0, 1.0, 1.0).is_err());
    }
}
