//! Residual and analytic Jacobian of the coupled system.
//!
//! Unknowns are ordered as in [`Problem::layout`]. Fixed displacement dofs are
//! eliminated symmetrically: their rows are identity rows and their values are
//! treated as zero wherever else they would enter the residual.

use std::collections::HashMap;

use log::warn;
use mgr_core::sparse::CsrMatrix;

use crate::constitutive::{porosity, Phase, Porosity};
use crate::error::{PoroError, Result};
use crate::fe::{divergence_integrals, element_stiffness, ElementMatrix};
use crate::flux::{boundary_transmissibility, phase_flux, transmissibilities, FluxSide};
use crate::mesh::Face;
use crate::problem::{DiscreteState, FlowDirichlet, Problem, SourceKind};

struct BoundaryFace {
    bc: FlowDirichlet,
    t: f64,
    x: [f64; 3],
}

/// Cached discretization data of a [`Problem`].
pub struct Assembler {
    problem: Problem,
    faces: Vec<Face>,
    trans: Vec<f64>,
    boundary_faces: Vec<BoundaryFace>,
    div: [[f64; 3]; 8],
    fixed: Vec<bool>,
    kuu: CsrMatrix,
    template: CsrMatrix,
    /// Residual contribution of the (state independent) boundary tractions.
    traction_rhs: Vec<f64>,
}

/// Cellwise constitutive evaluation shared by residual and Jacobian.
struct CellEval {
    por: Porosity,
    rho: [(f64, f64); 2],
    /// Porosity entering the mixture density (no strain contribution).
    phi_b: Porosity,
}

const PHASES: [Phase; 2] = [Phase::Wetting, Phase::NonWetting];

impl Assembler {
    pub fn new(problem: Problem) -> Result<Self> {
        problem.validate()?;
        let mesh = &problem.mesh;
        let nn = mesh.num_nodes();
        let nu = 3 * nn;
        let faces = mesh.interior_faces();
        let trans = transmissibilities(mesh, &problem.materials.perm)?;
        let mut boundary_faces = Vec::new();
        for bc in &problem.bcs.flow_dirichlet {
            let t = boundary_transmissibility(mesh, &problem.materials.perm[bc.cell], bc.side.axis())?;
            let mut x = mesh.cell_center(bc.cell);
            let d = bc.side.axis().index();
            let half = 0.5 * mesh.spacing()[d];
            x[d] += if bc.side.is_max() { half } else { -half };
            boundary_faces.push(BoundaryFace { bc: *bc, t, x });
        }
        let h = mesh.spacing();
        let div = divergence_integrals(h);
        let fixed = problem.bcs.fixed_mask(nn);
        let kuu = assemble_stiffness(&problem)?;
        let template = build_template(&problem, &kuu, &fixed)?;

        let mut traction_rhs = vec![0.0; nu];
        for load in &problem.bcs.tractions {
            let area = mesh.face_area(load.side.axis());
            for c in mesh.boundary_cells(load.side) {
                for n in mesh.boundary_face_nodes(c, load.side) {
                    for i in 0..3 {
                        if !fixed[3 * n + i] {
                            traction_rhs[3 * n + i] -= 0.25 * area * load.traction[i];
                        }
                    }
                }
            }
        }
        Ok(Self {
            problem,
            faces,
            trans,
            boundary_faces,
            div,
            fixed,
            kuu,
            template,
            traction_rhs,
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    /// Elastic stiffness before any Dirichlet elimination.
    pub fn unconstrained_stiffness(&self) -> &CsrMatrix {
        &self.kuu
    }

    pub fn fixed_mask(&self) -> &[bool] {
        &self.fixed
    }

    pub fn num_dofs(&self) -> usize {
        self.problem.num_dofs()
    }

    /// Face transmissibilities in interior-face order.
    pub fn transmissibilities(&self) -> &[f64] {
        &self.trans
    }

    fn masked_u(&self, x: &[f64]) -> Vec<f64> {
        let nu = self.problem.num_u_dofs();
        x[..nu]
            .iter()
            .zip(&self.fixed)
            .map(|(&v, &f)| if f { 0.0 } else { v })
            .collect()
    }

    /// Cell-mean volumetric strain for every cell.
    pub fn volumetric_strain(&self, x: &[f64]) -> Vec<f64> {
        let um = self.masked_u(x);
        let mesh = &self.problem.mesh;
        let vol = mesh.cell_volume();
        (0..mesh.num_cells()).map(|c| self.cell_strain(c, &um) / vol).collect()
    }

    fn cell_strain(&self, c: usize, um: &[f64]) -> f64 {
        let nodes = self.problem.mesh.cell_nodes(c);
        let mut e = 0.0;
        for (a, &n) in nodes.iter().enumerate() {
            for i in 0..3 {
                e += self.div[a][i] * um[3 * n + i];
            }
        }
        e
    }

    fn eval_cell(&self, c: usize, eps: f64, p: f64) -> CellEval {
        let m = &self.problem.materials;
        let f = &self.problem.fluid;
        let n_inv = m.biot_modulus_inv[c];
        let por = porosity(m.porosity_ref[c], m.biot[c], n_inv, eps, p, f.p_ref);
        let phi_b = porosity(m.porosity_ref[c], 0.0, n_inv, 0.0, p, f.p_ref);
        CellEval {
            por,
            rho: [f.density(p, Phase::Wetting), f.density(p, Phase::NonWetting)],
            phi_b,
        }
    }

    /// Total mass of each phase `[wetting, non-wetting]` in the domain (kg).
    pub fn phase_masses(&self, x: &[f64]) -> [f64; 2] {
        let mesh = &self.problem.mesh;
        let vol = mesh.cell_volume();
        let eps = self.volumetric_strain(x);
        let mut out = [0.0; 2];
        for c in 0..mesh.num_cells() {
            let (s, p) = self.flow_values(x, c);
            let ev = self.eval_cell(c, eps[c], p);
            out[0] += vol * ev.por.phi * ev.rho[0].0 * s;
            out[1] += vol * ev.por.phi * ev.rho[1].0 * (1.0 - s);
        }
        out
    }

    /// Net mass rate entering the domain through sources and boundary faces (kg/s).
    pub fn external_mass_rates(&self, x: &[f64]) -> [f64; 2] {
        let mut r = vec![0.0; self.num_dofs()];
        self.add_sources(x, &mut r, None);
        self.add_boundary_fluxes(x, &mut r, None);
        let mut out = [0.0; 2];
        for c in 0..self.problem.mesh.num_cells() {
            out[0] -= r[self.problem.s_dof(c)];
            out[1] -= r[self.problem.p_dof(c)];
        }
        out
    }

    #[inline]
    fn flow_values(&self, x: &[f64], c: usize) -> (f64, f64) {
        (x[self.problem.s_dof(c)], x[self.problem.p_dof(c)])
    }

    fn check_inputs(&self, x: &[f64], prev: &[f64], dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(PoroError::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        let n = self.num_dofs();
        if x.len() != n || prev.len() != n {
            return Err(PoroError::InvalidInput(format!(
                "state vectors must have {n} entries, got {} and {}",
                x.len(),
                prev.len()
            )));
        }
        Ok(())
    }

    /// Unscaled residual `F(x)` for the step from `prev` over `dt`.
    pub fn residual(&self, x: &[f64], prev: &[f64], dt: f64) -> Result<Vec<f64>> {
        self.check_inputs(x, prev, dt)?;
        Ok(self.assemble(x, prev, dt, None))
    }

    /// Unscaled residual and analytic Jacobian.
    pub fn residual_and_jacobian(&self, x: &[f64], prev: &[f64], dt: f64) -> Result<(Vec<f64>, CsrMatrix)> {
        self.check_inputs(x, prev, dt)?;
        let mut jac = self.template.clone();
        let r = self.assemble(x, prev, dt, Some(&mut jac));
        Ok((r, jac))
    }

    pub fn residual_state(&self, state: &DiscreteState, prev: &DiscreteState, dt: f64) -> Result<Vec<f64>> {
        self.residual(&state.to_vector(), &prev.to_vector(), dt)
    }

    /// Left row scaling making displacement and flow rows comparable.
    ///
    /// Displacement rows are divided by `E h`, flow rows by the mass a cell's
    /// reference pore volume of wetting fluid gains per unit saturation over `dt`.
    pub fn row_scaling(&self, dt: f64) -> Vec<f64> {
        let p = &self.problem;
        let m = &p.materials;
        let nc = p.mesh.num_cells() as f64;
        let e_ref = m.young.iter().sum::<f64>() / nc;
        let phi_ref = m.porosity_ref.iter().sum::<f64>() / nc;
        let h = p.mesh.spacing();
        let h_ref = (h[0] + h[1] + h[2]) / 3.0;
        let nu = p.num_u_dofs();
        let mut d = vec![1.0 / (e_ref * h_ref); p.num_dofs()];
        for (i, di) in d.iter_mut().enumerate().take(nu) {
            if self.fixed[i] {
                *di = 1.0;
            }
        }
        let flow = dt / (p.fluid.rho_w0 * phi_ref * p.mesh.cell_volume());
        for v in &mut d[nu..] {
            *v = flow;
        }
        d
    }

    fn assemble(&self, x: &[f64], prev: &[f64], dt: f64, mut jac: Option<&mut CsrMatrix>) -> Vec<f64> {
        let p = &self.problem;
        let mesh = &p.mesh;
        let m = &p.materials;
        let g = p.fluid.gravity;
        let nu = p.num_u_dofs();
        let vol = mesh.cell_volume();
        let um = self.masked_u(x);
        let um_prev = self.masked_u(prev);

        let mut r = vec![0.0; p.num_dofs()];
        let ku = self.kuu.matvec(&um).expect("stiffness and displacement sizes agree");
        for i in 0..nu {
            r[i] = if self.fixed[i] {
                x[i]
            } else {
                ku[i] + self.traction_rhs[i]
            };
        }

        let mut clamped = 0usize;
        for c in 0..mesh.num_cells() {
            let nodes = mesh.cell_nodes(c);
            let (s, pc) = self.flow_values(x, c);
            let (s0, p0) = self.flow_values(prev, c);
            let ev = self.eval_cell(c, self.cell_strain(c, &um) / vol, pc);
            let ev0 = self.eval_cell(c, self.cell_strain(c, &um_prev) / vol, p0);
            if ev.por.clamped {
                clamped += 1;
            }
            let (sd, pd) = (p.s_dof(c), p.p_dof(c));

            // accumulation
            let sat = [s, 1.0 - s];
            let sat0 = [s0, 1.0 - s0];
            let dsat = [1.0, -1.0];
            for l in 0..2 {
                let row = [sd, pd][l];
                let (rho, drho) = ev.rho[l];
                r[row] += vol * (ev.por.phi * rho * sat[l] - ev0.por.phi * ev0.rho[l].0 * sat0[l]) / dt;
                if let Some(j) = jac.as_deref_mut() {
                    add(j, &self.fixed, row, sd, vol * ev.por.phi * rho * dsat[l] / dt);
                    add(
                        j,
                        &self.fixed,
                        row,
                        pd,
                        vol * (ev.por.dphi_dp * rho + ev.por.phi * drho) * sat[l] / dt,
                    );
                    let coef = ev.por.dphi_deps * rho * sat[l] / dt;
                    if coef != 0.0 {
                        for (a, &n) in nodes.iter().enumerate() {
                            for i in 0..3 {
                                add(j, &self.fixed, row, 3 * n + i, coef * self.div[a][i]);
                            }
                        }
                    }
                }
            }

            // Biot coupling and body force on the cell's nodes
            let b = m.biot[c];
            let phib = ev.phi_b.phi;
            let fluid_rho = ev.rho[0].0 * s + ev.rho[1].0 * (1.0 - s);
            let rho_mix = (1.0 - phib) * m.solid_density[c] + phib * fluid_rho;
            let drho_mix_dp = ev.phi_b.dphi_dp * (fluid_rho - m.solid_density[c])
                + phib * (ev.rho[0].1 * s + ev.rho[1].1 * (1.0 - s));
            let drho_mix_ds = phib * (ev.rho[0].0 - ev.rho[1].0);
            for (a, &n) in nodes.iter().enumerate() {
                for i in 0..3 {
                    let row = 3 * n + i;
                    if self.fixed[row] {
                        continue;
                    }
                    r[row] -= b * pc * self.div[a][i] + rho_mix * g[i] * vol / 8.0;
                    if let Some(j) = jac.as_deref_mut() {
                        add(
                            j,
                            &self.fixed,
                            row,
                            pd,
                            -b * self.div[a][i] - drho_mix_dp * g[i] * vol / 8.0,
                        );
                        add(j, &self.fixed, row, sd, -drho_mix_ds * g[i] * vol / 8.0);
                    }
                }
            }
        }
        if clamped > 0 {
            warn!("porosity clamped into (0, 1) in {clamped} cells");
        }

        // interior fluxes
        for (f, &t) in self.faces.iter().zip(&self.trans) {
            let (sk, pk) = self.flow_values(x, f.k);
            let (sl, pl) = self.flow_values(x, f.l);
            let kside = FluxSide {
                p: pk,
                s: sk,
                x: mesh.cell_center(f.k),
            };
            let lside = FluxSide {
                p: pl,
                s: sl,
                x: mesh.cell_center(f.l),
            };
            for (l, &ph) in PHASES.iter().enumerate() {
                let q = phase_flux(&p.fluid, ph, t, &kside, &lside);
                let (rk, rl) = if l == 0 {
                    (p.s_dof(f.k), p.s_dof(f.l))
                } else {
                    (p.p_dof(f.k), p.p_dof(f.l))
                };
                r[rk] += q.w;
                r[rl] -= q.w;
                if let Some(j) = jac.as_deref_mut() {
                    let cols = [
                        (p.p_dof(f.k), q.dp_k),
                        (p.p_dof(f.l), q.dp_l),
                        (p.s_dof(f.k), q.ds_k),
                        (p.s_dof(f.l), q.ds_l),
                    ];
                    for (col, v) in cols {
                        if v != 0.0 {
                            add(j, &self.fixed, rk, col, v);
                            add(j, &self.fixed, rl, col, -v);
                        }
                    }
                }
            }
        }
        self.add_boundary_fluxes(x, &mut r, jac.as_deref_mut());
        self.add_sources(x, &mut r, jac);
        r
    }

    fn add_boundary_fluxes(&self, x: &[f64], r: &mut [f64], mut jac: Option<&mut CsrMatrix>) {
        let p = &self.problem;
        for bf in &self.boundary_faces {
            let c = bf.bc.cell;
            let (s, pc) = self.flow_values(x, c);
            let kside = FluxSide {
                p: pc,
                s,
                x: p.mesh.cell_center(c),
            };
            let bside = FluxSide {
                p: bf.bc.p,
                s: bf.bc.s,
                x: bf.x,
            };
            for (l, &ph) in PHASES.iter().enumerate() {
                let q = phase_flux(&p.fluid, ph, bf.t, &kside, &bside);
                let row = if l == 0 { p.s_dof(c) } else { p.p_dof(c) };
                r[row] += q.w;
                if let Some(j) = jac.as_deref_mut() {
                    add(j, &self.fixed, row, p.p_dof(c), q.dp_k);
                    add(j, &self.fixed, row, p.s_dof(c), q.ds_k);
                }
            }
        }
    }

    fn add_sources(&self, x: &[f64], r: &mut [f64], mut jac: Option<&mut CsrMatrix>) {
        let p = &self.problem;
        let vol = p.mesh.cell_volume();
        for src in &p.bcs.sources {
            let c = src.cell;
            let (sd, pd) = (p.s_dof(c), p.p_dof(c));
            match src.kind {
                SourceKind::Rate { q_w, q_nw } => {
                    r[sd] -= vol * q_w;
                    r[pd] -= vol * q_nw;
                }
                SourceKind::Producer { q_total } => {
                    let (s, pc) = self.flow_values(x, c);
                    let mut a = [0.0; 2];
                    let mut da_dp = [0.0; 2];
                    let mut da_ds = [0.0; 2];
                    for (l, &ph) in PHASES.iter().enumerate() {
                        let (rho, drho) = p.fluid.density(pc, ph);
                        let (lam, dlam) = p.fluid.mobility(s, ph);
                        a[l] = rho * lam;
                        da_dp[l] = drho * lam;
                        da_ds[l] = rho * dlam;
                    }
                    let tot = a[0] + a[1];
                    let fw = a[0] / tot;
                    let dfw_dp = (da_dp[0] * a[1] - a[0] * da_dp[1]) / (tot * tot);
                    let dfw_ds = (da_ds[0] * a[1] - a[0] * da_ds[1]) / (tot * tot);
                    let rate = vol * q_total;
                    r[sd] += rate * fw;
                    r[pd] += rate * (1.0 - fw);
                    if let Some(j) = jac.as_deref_mut() {
                        add(j, &self.fixed, sd, pd, rate * dfw_dp);
                        add(j, &self.fixed, sd, sd, rate * dfw_ds);
                        add(j, &self.fixed, pd, pd, -rate * dfw_dp);
                        add(j, &self.fixed, pd, sd, -rate * dfw_ds);
                    }
                }
            }
        }
    }

    /// Right-hand side of the displacement equations for frozen flow unknowns,
    /// i.e. `-F_u(u = 0)`; fixed rows are zero.
    pub fn mechanics_load(&self, x: &[f64]) -> Vec<f64> {
        let nu = self.problem.num_u_dofs();
        let mut x0 = x.to_vec();
        x0[..nu].iter_mut().for_each(|v| *v = 0.0);
        let r = self.assemble(&x0, &x0, 1.0, None);
        r[..nu].iter().map(|v| -v).collect()
    }

    /// Displacement block of the Jacobian with identity rows and zero columns
    /// at fixed dofs.
    pub fn constrained_stiffness(&self) -> CsrMatrix {
        let nu = self.problem.num_u_dofs();
        let mut t = Vec::with_capacity(self.kuu.nnz());
        for i in 0..nu {
            if self.fixed[i] {
                t.push((i, i, 1.0));
                continue;
            }
            let (cols, vals) = self.kuu.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if !self.fixed[j] {
                    t.push((i, j, v));
                }
            }
        }
        CsrMatrix::from_triplets(nu, nu, &t).expect("indices are in range")
    }
}

#[inline]
fn add(j: &mut CsrMatrix, fixed: &[bool], row: usize, col: usize, v: f64) {
    if (row < fixed.len() && fixed[row]) || (col < fixed.len() && fixed[col]) {
        return;
    }
    let pos = j.position(row, col).expect("entry outside the cached Jacobian pattern");
    j.values_mut()[pos] += v;
}

fn nodes_of_node_cells(p: &Problem, n: usize) -> Vec<usize> {
    let mesh = &p.mesh;
    let [i, j, k] = mesh.node_ijk(n);
    let mut cells = Vec::with_capacity(8);
    for dk in 0..2 {
        for dj in 0..2 {
            for di in 0..2 {
                if i >= di && j >= dj && k >= dk {
                    let (ci, cj, ck) = (i - di, j - dj, k - dk);
                    if ci < mesh.nx && cj < mesh.ny && ck < mesh.nz {
                        cells.push(mesh.cell_index(ci, cj, ck));
                    }
                }
            }
        }
    }
    cells.sort_unstable();
    cells
}

fn assemble_stiffness(p: &Problem) -> Result<CsrMatrix> {
    let mesh = &p.mesh;
    let nn = mesh.num_nodes();
    let nu = 3 * nn;
    let mut offsets = Vec::with_capacity(nu + 1);
    offsets.push(0);
    let mut cols = Vec::new();
    for n in 0..nn {
        let mut nbr: Vec<usize> = nodes_of_node_cells(p, n)
            .iter()
            .flat_map(|&c| mesh.cell_nodes(c))
            .collect();
        nbr.sort_unstable();
        nbr.dedup();
        for _ in 0..3 {
            for &m in &nbr {
                cols.extend([3 * m, 3 * m + 1, 3 * m + 2]);
            }
            offsets.push(cols.len());
        }
    }
    let nnz = cols.len();
    let mut k = CsrMatrix::try_new(nu, nu, offsets, cols, vec![0.0; nnz])?;
    let h = mesh.spacing();
    let mut cache: HashMap<u64, ElementMatrix> = HashMap::new();
    for c in 0..mesh.num_cells() {
        let nu_c = p.materials.poisson[c];
        let ke = cache
            .entry(nu_c.to_bits())
            .or_insert_with(|| element_stiffness(1.0, nu_c, h));
        let e = p.materials.young[c];
        let nodes = mesh.cell_nodes(c);
        for a in 0..8 {
            for i in 0..3 {
                let row = 3 * nodes[a] + i;
                for b in 0..8 {
                    for jj in 0..3 {
                        let col = 3 * nodes[b] + jj;
                        let pos = k.position(row, col).expect("stiffness pattern covers element");
                        k.values_mut()[pos] += e * ke[3 * a + i][3 * b + jj];
                    }
                }
            }
        }
    }
    Ok(k)
}

/// Jacobian pattern with the constrained stiffness already in place.
fn build_template(p: &Problem, kuu: &CsrMatrix, fixed: &[bool]) -> Result<CsrMatrix> {
    let mesh = &p.mesh;
    let nn = mesh.num_nodes();
    let n = p.num_dofs();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut cols: Vec<usize> = Vec::new();
    let mut vals: Vec<f64> = Vec::new();
    for node in 0..nn {
        let cells = nodes_of_node_cells(p, node);
        for i in 0..3 {
            let row = 3 * node + i;
            let (kc, kv) = kuu.row(row);
            for (&j, &v) in kc.iter().zip(kv) {
                cols.push(j);
                vals.push(if fixed[row] || fixed[j] { 0.0 } else { v });
            }
            for &c in &cells {
                cols.extend([p.s_dof(c), p.p_dof(c)]);
                vals.extend([0.0, 0.0]);
            }
            if fixed[row] {
                let lo = offsets[row];
                let pos = lo + cols[lo..].binary_search(&row).expect("diagonal is in the pattern");
                vals[pos] = 1.0;
            }
            offsets.push(cols.len());
        }
    }
    for c in 0..mesh.num_cells() {
        let mut row_cols: Vec<usize> = mesh
            .cell_nodes(c)
            .iter()
            .flat_map(|&m| [3 * m, 3 * m + 1, 3 * m + 2])
            .collect();
        row_cols.sort_unstable();
        let mut flow = vec![c];
        flow.extend(mesh.cell_neighbors(c));
        flow.sort_unstable();
        for &d in &flow {
            row_cols.extend([p.s_dof(d), p.p_dof(d)]);
        }
        for _ in 0..2 {
            cols.extend_from_slice(&row_cols);
            vals.extend(std::iter::repeat_n(0.0, row_cols.len()));
            offsets.push(cols.len());
        }
    }
    debug_assert_eq!(offsets.len(), n + 1);
    Ok(CsrMatrix::try_new(n, n, offsets, cols, vals)?)
}
