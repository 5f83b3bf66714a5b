//! Trilinear hexahedral element on an axis-aligned box.
//!
//! Local node `a` sits at reference corner `(a & 1, a >> 1 & 1, a >> 2)` and
//! local dof `3 a + i` is displacement component `i` of that node.

pub type ElementMatrix = [[f64; 24]; 24];

/// Two-point Gauss abscissae on `[0, 1]`.
fn gauss_1d() -> [f64; 2] {
    let d = 0.5 / 3f64.sqrt();
    [0.5 - d, 0.5 + d]
}

/// Gauss points of the 2x2x2 rule on the reference cube `[0, 1]^3`.
pub fn gauss_points() -> [[f64; 3]; 8] {
    let g = gauss_1d();
    std::array::from_fn(|q| [g[q & 1], g[(q >> 1) & 1], g[q >> 2]])
}

/// Physical gradients of the eight shape functions at reference point `xi`.
pub fn shape_grads(h: [f64; 3], xi: [f64; 3]) -> [[f64; 3]; 8] {
    std::array::from_fn(|a| {
        let bits = [a & 1, (a >> 1) & 1, a >> 2];
        let f: [f64; 3] = std::array::from_fn(|d| if bits[d] == 1 { xi[d] } else { 1.0 - xi[d] });
        let df: [f64; 3] = std::array::from_fn(|d| if bits[d] == 1 { 1.0 } else { -1.0 });
        [
            df[0] * f[1] * f[2] / h[0],
            f[0] * df[1] * f[2] / h[1],
            f[0] * f[1] * df[2] / h[2],
        ]
    })
}

/// Lame parameters `(lambda, mu)` from Young's modulus and Poisson's ratio.
pub fn lame(young: f64, poisson: f64) -> (f64, f64) {
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    let mu = young / (2.0 * (1.0 + poisson));
    (lambda, mu)
}

/// Isotropic elastic stiffness `int B^T C B dV` with full 2x2x2 quadrature.
pub fn element_stiffness(young: f64, poisson: f64, h: [f64; 3]) -> ElementMatrix {
    let (lambda, mu) = lame(young, poisson);
    let w = h[0] * h[1] * h[2] / 8.0;
    let mut k = [[0.0; 24]; 24];
    for xi in gauss_points() {
        let g = shape_grads(h, xi);
        for a in 0..8 {
            for b in 0..8 {
                for i in 0..3 {
                    for j in 0..3 {
                        // lambda (dNa_i dNb_j) + mu (dNa_j dNb_i + delta_ij dNa . dNb)
                        let mut v = lambda * g[a][i] * g[b][j] + mu * g[a][j] * g[b][i];
                        if i == j {
                            v += mu * (g[a][0] * g[b][0] + g[a][1] * g[b][1] + g[a][2] * g[b][2]);
                        }
                        k[3 * a + i][3 * b + j] += w * v;
                    }
                }
            }
        }
    }
    k
}

/// `int dN_a/dx_i dV` over the element; the cell-mean divergence of `u` is
/// `sum_a,i G[a][i] u[a][i] / V`.
pub fn divergence_integrals(h: [f64; 3]) -> [[f64; 3]; 8] {
    let w = h[0] * h[1] * h[2] / 8.0;
    let mut out = [[0.0; 3]; 8];
    for xi in gauss_points() {
        let g = shape_grads(h, xi);
        for a in 0..8 {
            for i in 0..3 {
                out[a][i] += w * g[a][i];
            }
        }
    }
    out
}
