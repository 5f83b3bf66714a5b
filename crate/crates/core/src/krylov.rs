//! Right-preconditioned restarted GMRES.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::sparse::CsrMatrix;

pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y = A x`; both slices have length `dim()`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

pub trait Preconditioner {
    /// `z = M^{-1} r`; both slices have length of the operator.
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_unchecked(x, y);
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GmresConfig {
    pub restart: usize,
    pub max_iters: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            restart: 50,
            max_iters: 500,
            rtol: 1e-6,
            atol: 1e-12,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restart == 0 {
            return Err(SolverError::InvalidConfig("GMRES restart must be at least 1".into()));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(SolverError::InvalidConfig("GMRES tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Initial residual norm followed by the least-squares residual estimate
    /// after every iteration.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// True residual norm at exit.
    pub final_residual: f64,
    /// Arnoldi stopped on a (near) zero subdiagonal entry.
    pub breakdown: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` with GMRES on `A M^{-1}`. Convergence is declared on the
/// true residual: `||b - A x|| <= max(rtol ||b - A x0||, atol)`.
pub fn gmres(
    a: &dyn LinearOperator,
    m: &dyn Preconditioner,
    b: &[f64],
    x0: &[f64],
    cfg: &GmresConfig,
) -> Result<(Vec<f64>, SolveStats)> {
    cfg.validate()?;
    let n = a.dim();
    for (ctx, len) in [("gmres rhs", b.len()), ("gmres x0", x0.len())] {
        if len != n {
            return Err(SolverError::DimensionMismatch {
                context: ctx,
                expected: n,
                actual: len,
            });
        }
    }
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let residual = |x: &[f64], r: &mut [f64], tmp: &mut [f64]| {
        a.apply(x, tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
        norm(r)
    };
    let mut beta = residual(&x, &mut r, &mut tmp);
    let target = (cfg.rtol * beta).max(cfg.atol);
    let mut stats = SolveStats {
        residual_history: vec![beta],
        final_residual: beta,
        ..Default::default()
    };
    if beta <= target {
        stats.converged = true;
        return Ok((x, stats));
    }
    let k = cfg.restart;
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    let mut h = vec![vec![0.0; k]; k + 1];
    let mut cs = vec![0.0; k];
    let mut sn = vec![0.0; k];
    let mut g = vec![0.0; k + 1];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    while stats.iterations < cfg.max_iters {
        v.clear();
        v.push(r.iter().map(|x| x / beta).collect());
        g.iter_mut().for_each(|x| *x = 0.0);
        g[0] = beta;
        let mut used = 0;
        let mut estimate_done = false;
        for j in 0..k {
            m.apply(&v[j], &mut z);
            a.apply(&z, &mut w);
            let wnorm0 = norm(&w);
            for i in 0..=j {
                let hij = dot(&w, &v[i]);
                h[i][j] = hij;
                for (wq, vq) in w.iter_mut().zip(&v[i]) {
                    *wq -= hij * vq;
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let d = h[j][j].hypot(h[j + 1][j]);
            if d == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / d;
                sn[j] = h[j + 1][j] / d;
            }
            h[j][j] = d;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            stats.iterations += 1;
            let est = g[j + 1].abs();
            stats.residual_history.push(est);
            if hn <= 1e-14 * wnorm0.max(f64::MIN_POSITIVE) {
                stats.breakdown = true;
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
            if est <= target || stats.iterations >= cfg.max_iters {
                estimate_done = est <= target;
                break;
            }
        }
        // back substitution on the rotated Hessenberg system
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for q in i + 1..used {
                s -= h[i][q] * y[q];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        let mut u = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&v) {
            for (uq, vq) in u.iter_mut().zip(vi) {
                *uq += yi * vq;
            }
        }
        m.apply(&u, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        beta = residual(&x, &mut r, &mut tmp);
        stats.final_residual = beta;
        if beta <= target || stats.breakdown {
            stats.converged = true;
            if stats.breakdown && beta > target {
                log::debug!("GMRES breakdown with true residual {beta:e} above target {target:e}");
            }
            break;
        }
        if estimate_done {
            log::debug!("GMRES estimate converged but true residual {beta:e} > {target:e}; restarting");
        }
    }
    Ok((x, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 4.0];
        let (x, s) = gmres(&a, &IdentityPreconditioner, &b, &[0.0; 5], &GmresConfig::default()).unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, 1);
        for (u, v) in x.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_returns_immediately() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![0.0, 3.0]]);
        let (x, s) = gmres(
            &a,
            &IdentityPreconditioner,
            &[0.0, 0.0],
            &[0.0, 0.0],
            &GmresConfig::default(),
        )
        .unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(s.iterations, 0);
        assert!(s.converged);
    }

    #[test]
    fn rejects_bad_config_and_dimensions() {
        let a = CsrMatrix::identity(2);
        let cfg = GmresConfig {
            restart: 0,
            ..Default::default()
        };
        assert!(gmres(&a, &IdentityPreconditioner, &[1.0, 1.0], &[0.0, 0.0], &cfg).is_err());
        assert!(gmres(
            &a,
            &IdentityPreconditioner,
            &[1.0],
            &[0.0, 0.0],
            &GmresConfig::default()
        )
        .is_err());
    }

    #[test]
    fn max_iters_reports_not_converged() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let cfg = GmresConfig {
            max_iters: 3,
            rtol: 1e-12,
            ..Default::default()
        };
        let (_, s) = gmres(&a, &IdentityPreconditioner, &vec![1.0; n], &vec![0.0; n], &cfg).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 3);
        assert_eq!(s.residual_history.len(), 4);
    }
}
