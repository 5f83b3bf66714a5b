use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};

/// Physical field carried by a degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Field {
    /// Displacement component (attached to a mesh node).
    U,
    /// Wetting saturation (attached to a cell).
    S,
    /// Pressure (attached to a cell).
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DofOrdering {
    FieldBlocked,
    /// Saturation and pressure unknowns of each cell are adjacent.
    FlowInterleaved,
}

/// Maps every degree of freedom to a field and to the mesh entity it lives on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldLayout {
    field_of: Vec<Field>,
    entity_of: Vec<usize>,
    ordering: DofOrdering,
}

impl FieldLayout {
    pub fn new(field_of: Vec<Field>, entity_of: Vec<usize>, ordering: DofOrdering) -> Result<Self> {
        let layout = Self {
            field_of,
            entity_of,
            ordering,
        };
        layout.validate()?;
        Ok(layout)
    }

    /// Layout where every dof is its own entity and carries the same field.
    pub fn scalar(n: usize, field: Field) -> Self {
        Self {
            field_of: vec![field; n],
            entity_of: (0..n).collect(),
            ordering: DofOrdering::FieldBlocked,
        }
    }

    /// Interleaved flow layout `(s_0, p_0, s_1, p_1, ...)` over `ncells` cells.
    pub fn interleaved_flow(ncells: usize) -> Self {
        let mut field_of = Vec::with_capacity(2 * ncells);
        let mut entity_of = Vec::with_capacity(2 * ncells);
        for c in 0..ncells {
            field_of.extend([Field::S, Field::P]);
            entity_of.extend([c, c]);
        }
        Self {
            field_of,
            entity_of,
            ordering: DofOrdering::FlowInterleaved,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.field_of.len() != self.entity_of.len() {
            return Err(SolverError::InvalidLayout(format!(
                "field_of has {} entries but entity_of has {}",
                self.field_of.len(),
                self.entity_of.len()
            )));
        }
        if self.ordering == DofOrdering::FlowInterleaved {
            self.cell_blocks()?;
        }
        Ok(())
    }

    #[inline]
    pub fn ndofs(&self) -> usize {
        self.field_of.len()
    }

    #[inline]
    pub fn field(&self, dof: usize) -> Field {
        self.field_of[dof]
    }

    #[inline]
    pub fn entity(&self, dof: usize) -> usize {
        self.entity_of[dof]
    }

    pub fn fields(&self) -> &[Field] {
        &self.field_of
    }

    pub fn entities(&self) -> &[usize] {
        &self.entity_of
    }

    /// Both dofs live on the same mesh entity (node for U, cell for S/P).
    pub fn same_entity(&self, i: usize, j: usize) -> bool {
        self.entity_of[i] == self.entity_of[j] && (self.field_of[i] == Field::U) == (self.field_of[j] == Field::U)
    }

    pub fn ordering(&self) -> DofOrdering {
        self.ordering
    }

    /// Distinct fields present, in `U, S, P` order.
    pub fn present_fields(&self) -> Vec<Field> {
        let mut present = Vec::new();
        for f in [Field::U, Field::S, Field::P] {
            if self.field_of.contains(&f) {
                present.push(f);
            }
        }
        present
    }

    /// Restriction of the layout to a subset of dofs, in the given order.
    pub fn restrict(&self, dofs: &[usize]) -> Self {
        let field_of: Vec<Field> = dofs.iter().map(|&d| self.field_of[d]).collect();
        let entity_of = dofs.iter().map(|&d| self.entity_of[d]).collect();
        let ordering = if self.ordering == DofOrdering::FlowInterleaved
            && field_of.contains(&Field::S)
            && field_of.contains(&Field::P)
        {
            DofOrdering::FlowInterleaved
        } else {
            DofOrdering::FieldBlocked
        };
        Self {
            field_of,
            entity_of,
            ordering,
        }
    }

    /// The `(s_row, p_row)` pairs of every cell, in increasing row order.
    ///
    /// Fails unless the flow dofs of every cell are adjacent.
    pub fn cell_blocks(&self) -> Result<Vec<CellBlock>> {
        let mut blocks = Vec::new();
        let mut i = 0;
        let n = self.ndofs();
        while i < n {
            match self.field_of[i] {
                Field::U => i += 1,
                f => {
                    if i + 1 >= n {
                        return Err(SolverError::InvalidLayout(format!(
                            "flow dof {i} has no interleaved partner"
                        )));
                    }
                    let g = self.field_of[i + 1];
                    let ok = matches!((f, g), (Field::S, Field::P) | (Field::P, Field::S))
                        && self.entity_of[i] == self.entity_of[i + 1];
                    if !ok {
                        return Err(SolverError::InvalidLayout(format!(
                            "dofs {i} and {} are not an interleaved (s, p) pair",
                            i + 1
                        )));
                    }
                    let (s_row, p_row) = if f == Field::S { (i, i + 1) } else { (i + 1, i) };
                    blocks.push(CellBlock {
                        cell: self.entity_of[i],
                        s_row,
                        p_row,
                    });
                    i += 2;
                }
            }
        }
        Ok(blocks)
    }
}

/// Row indices of one cell's saturation and pressure unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBlock {
    pub cell: usize,
    pub s_row: usize,
    pub p_row: usize,
}

impl CellBlock {
    /// Rows in increasing order.
    pub fn rows(&self) -> [usize; 2] {
        if self.s_row < self.p_row {
            [self.s_row, self.p_row]
        } else {
            [self.p_row, self.s_row]
        }
    }
}

/// Disjoint partition of rows into coarse (C) and fine (F) points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfSplitting {
    is_c: Vec<bool>,
    local: Vec<usize>,
    c_points: Vec<usize>,
    f_points: Vec<usize>,
}

impl CfSplitting {
    pub fn from_mask(is_c: Vec<bool>) -> Self {
        let mut local = vec![0; is_c.len()];
        let mut c_points = Vec::new();
        let mut f_points = Vec::new();
        for (i, &c) in is_c.iter().enumerate() {
            if c {
                local[i] = c_points.len();
                c_points.push(i);
            } else {
                local[i] = f_points.len();
                f_points.push(i);
            }
        }
        Self {
            is_c,
            local,
            c_points,
            f_points,
        }
    }

    /// Splits by field label: dofs whose field is in `c_fields` become C points.
    pub fn from_fields(layout: &FieldLayout, c_fields: &[Field]) -> Self {
        Self::from_mask(layout.fields().iter().map(|f| c_fields.contains(f)).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.is_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_c.is_empty()
    }

    #[inline]
    pub fn is_c(&self, i: usize) -> bool {
        self.is_c[i]
    }

    pub fn c_index(&self, i: usize) -> Option<usize> {
        self.is_c[i].then(|| self.local[i])
    }

    pub fn f_index(&self, i: usize) -> Option<usize> {
        (!self.is_c[i]).then(|| self.local[i])
    }

    /// Index of row `i` inside its own set (C or F).
    #[inline]
    pub fn local_index(&self, i: usize) -> usize {
        self.local[i]
    }

    pub fn c_points(&self) -> &[usize] {
        &self.c_points
    }

    pub fn f_points(&self) -> &[usize] {
        &self.f_points
    }

    pub fn num_c(&self) -> usize {
        self.c_points.len()
    }

    pub fn num_f(&self) -> usize {
        self.f_points.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.is_c
    }
}
