//! Finite-difference verification of the analytic Jacobian.

use crate::assembly::Assembler;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub max_rel_error: f64,
    /// `(row, col, analytic, finite difference)` of the worst entry.
    pub worst: (usize, usize, f64, f64),
    pub entries_checked: usize,
}

/// Compares the analytic Jacobian with central differences of the residual,
/// column by column.
///
/// The relative error of an entry is `|a - f| / max(|a|, |f|, floor)` where
/// `floor = 1e-8` times the largest magnitude in the analytic column; this
/// keeps round-off in structurally tiny entries from dominating.
pub fn fd_check(asm: &Assembler, x: &[f64], prev: &[f64], dt: f64) -> Result<FdReport> {
    let (_, jac) = asm.residual_and_jacobian(x, prev, dt)?;
    let jt = jac.transpose();
    let p = asm.problem();
    let nu = p.num_u_dofs();
    let mut report = FdReport {
        max_rel_error: 0.0,
        worst: (0, 0, 0.0, 0.0),
        entries_checked: 0,
    };
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        // u and s use a unit scale: the residual is linear in u, so a
        // metre-sized scale only limits round-off
        let is_p = j >= nu && (j - nu) % 2 == 1;
        let typical = if is_p { x[j].abs().max(1.0) } else { 1.0 };
        let h = 1e-6 * typical;
        xp[j] = x[j] + h;
        let rp = asm.residual(&xp, prev, dt)?;
        xp[j] = x[j] - h;
        let rm = asm.residual(&xp, prev, dt)?;
        xp[j] = x[j];
        let (rows, vals) = jt.row(j);
        let colmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = 1e-8 * colmax;
        for i in 0..x.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * h);
            let a = rows.binary_search(&i).map(|k| vals[k]).unwrap_or(0.0);
            if a == 0.0 && fd == 0.0 {
                continue;
            }
            report.entries_checked += 1;
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(floor).max(f64::MIN_POSITIVE);
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = (i, j, a, fd);
            }
        }
    }
    Ok(report)
}
