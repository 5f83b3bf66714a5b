mod common;

use common::*;
use mgr_core::amg::{amg_setup, cf_coarsen, direct_interpolation, strength_graph, AmgConfig};
use mgr_core::krylov::{gmres, GmresConfig};
use mgr_core::sparse::{CfSplitting, CsrMatrix};
use nalgebra::DMatrix;
use rand::Rng;

/// Per-row threshold oracle on a dense matrix (scalar problems).
fn strength_oracle(a: &DMatrix<f64>, theta: f64) -> Vec<Vec<usize>> {
    let n = a.nrows();
    (0..n)
        .map(|i| {
            let mx = (0..n).filter(|&k| k != i).map(|k| -a[(i, k)]).fold(0.0, f64::max);
            if mx <= 0.0 {
                return Vec::new();
            }
            (0..n)
                .filter(|&j| j != i && -a[(i, j)] > 0.0 && -a[(i, j)] >= theta * mx)
                .collect()
        })
        .collect()
}

/// Replays the greedy rule with a linear scan for the best undecided point.
fn greedy_oracle(strong: &[Vec<usize>]) -> Vec<bool> {
    let n = strong.len();
    let mut measure = vec![0usize; n];
    let mut nbrs = vec![Vec::new(); n];
    for (i, row) in strong.iter().enumerate() {
        for &j in row {
            measure[j] += 1;
            nbrs[i].push(j);
            nbrs[j].push(i);
        }
    }
    if strong.iter().all(|r| r.is_empty()) {
        return vec![true; n];
    }
    // 0 undecided, 1 C, 2 F
    let mut state = vec![0u8; n];
    loop {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if state[i] == 0 && best.is_none_or(|b| measure[i] > measure[b]) {
                best = Some(i);
            }
        }
        let Some(i) = best else { break };
        if nbrs[i].is_empty() {
            state[i] = 2;
            continue;
        }
        state[i] = 1;
        for &j in &nbrs[i] {
            if state[j] == 0 {
                state[j] = 2;
            }
        }
    }
    state.iter().map(|&s| s == 1).collect()
}

fn pattern_rows(p: &mgr_core::sparse::SparsityPattern) -> Vec<Vec<usize>> {
    (0..p.nrows).map(|i| p.row(i).to_vec()).collect()
}

#[test]
fn anisotropic_strength_keeps_only_x_neighbors() {
    let a = laplace_2d(6, 6, 0.01);
    let s = strength_graph(&a, 0.25, 1);
    let oracle = strength_oracle(&to_dense(&a), 0.25);
    assert_eq!(pattern_rows(&s), oracle);
    for i in 0..36 {
        for &j in s.row(i) {
            assert_eq!(i / 6, j / 6, "strong y-coupling {i}->{j}");
        }
    }
}

#[test]
fn coarsening_replays_greedy_rule() {
    let a = laplace_1d(9);
    let s = strength_graph(&a, 0.25, 1);
    let split = cf_coarsen(&s);
    assert_eq!(split.mask(), greedy_oracle(&pattern_rows(&s)).as_slice());
    assert_eq!(split.c_points(), &[1, 3, 5, 7]);

    let mut r = rng(21);
    for _ in 0..10 {
        let m = random_dominant(&mut r, 30, 0.1);
        let s = strength_graph(&m, 0.25, 1);
        let split = cf_coarsen(&s);
        assert_eq!(split.mask(), greedy_oracle(&pattern_rows(&s)).as_slice());
    }
}

#[test]
fn disconnected_components_coarsen_independently() {
    let a = laplace_1d(7);
    let mut t = Vec::new();
    for i in 0..7 {
        let (c, v) = a.row(i);
        for (&j, &x) in c.iter().zip(v) {
            t.push((i, j, x));
            t.push((i + 7, j + 7, x));
        }
    }
    let b = CsrMatrix::from_triplets(14, 14, &t).unwrap();
    let single = cf_coarsen(&strength_graph(&a, 0.25, 1));
    let both = cf_coarsen(&strength_graph(&b, 0.25, 1));
    assert_eq!(&both.mask()[..7], single.mask());
    assert_eq!(&both.mask()[7..], single.mask());
}

#[test]
fn direct_interpolation_matches_row_formula() {
    let mut r = rng(22);
    let n = 12;
    let mut t = Vec::new();
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            if j != i && r.gen::<f64>() < 0.4 {
                let v = -r.gen_range(0.1..1.0);
                sum -= v;
                t.push((i, j, v));
            }
        }
        t.push((i, i, sum + r.gen_range(0.0..0.5)));
    }
    let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
    let s = strength_graph(&a, 0.25, 1);
    let split = cf_coarsen(&s);
    let p = direct_interpolation(&a, &s, &split).unwrap();
    for i in split.f_points().iter().copied() {
        let (c, v) = a.row(i);
        let diag = a.get(i, i);
        let sum_n: f64 = c.iter().zip(v).filter(|(&j, _)| j != i).map(|(_, &x)| x).sum();
        let cs: Vec<usize> = s.row(i).iter().copied().filter(|&j| split.is_c(j)).collect();
        let sum_c: f64 = cs.iter().map(|&j| a.get(i, j)).sum();
        for &j in &cs {
            let w = -(sum_n / sum_c) * a.get(i, j) / diag;
            assert!((p.get(i, split.c_index(j).unwrap()) - w).abs() <= 1e-14);
        }
        assert_eq!(p.row_nnz(i), cs.len());
    }
    for &i in split.c_points() {
        assert_eq!(p.row(i).1, &[1.0]);
    }
    let all_c = direct_interpolation(&a, &s, &CfSplitting::from_mask(vec![true; n])).unwrap();
    assert_eq!(all_c, CsrMatrix::identity(n));
}

#[test]
fn setup_level_sizes_match_dense_replay() {
    let a = laplace_1d(33);
    let cfg = AmgConfig {
        coarse_size_cutoff: 4,
        ..Default::default()
    };
    let h = amg_setup(&a, &cfg).unwrap();
    let mut sizes = vec![33];
    let mut cur = to_dense(&a);
    while cur.nrows() > 4 {
        let strong = strength_oracle(&cur, 0.25);
        let mask = greedy_oracle(&strong);
        let cidx: Vec<usize> = (0..cur.nrows()).filter(|&i| mask[i]).collect();
        let nc = cidx.len();
        if nc == cur.nrows() {
            break;
        }
        let mut p = DMatrix::zeros(cur.nrows(), nc);
        for i in 0..cur.nrows() {
            if let Some(k) = cidx.iter().position(|&c| c == i) {
                p[(i, k)] = 1.0;
                continue;
            }
            let sum_n: f64 = (0..cur.nrows()).filter(|&k| k != i).map(|k| cur[(i, k)]).sum();
            let cs: Vec<usize> = strong[i].iter().copied().filter(|&j| mask[j]).collect();
            let sum_c: f64 = cs.iter().map(|&j| cur[(i, j)]).sum();
            for &j in &cs {
                let k = cidx.iter().position(|&c| c == j).unwrap();
                p[(i, k)] = -(sum_n / sum_c) * cur[(i, j)] / cur[(i, i)];
            }
        }
        cur = p.transpose() * &cur * &p;
        sizes.push(nc);
    }
    assert_eq!(h.level_sizes(), sizes);
    assert!(sizes.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn vcycle_fixed_point_and_superposition() {
    let a = laplace_2d(12, 12, 1.0);
    let cfg = AmgConfig {
        coarse_size_cutoff: 10,
        ..Default::default()
    };
    let h = amg_setup(&a, &cfg).unwrap();
    assert!(h.num_levels() >= 3);
    let mut r = rng(23);
    let xs = random_vec(&mut r, 144);
    let b = a.matvec(&xs).unwrap();
    let mut x = xs.clone();
    h.vcycle(&b, &mut x).unwrap();
    assert!(vec_diff(&x, &xs) <= 1e-13);

    // V(0, x) = x - V(A x, 0)
    let x0 = random_vec(&mut r, 144);
    let mut lhs = x0.clone();
    h.vcycle(&vec![0.0; 144], &mut lhs).unwrap();
    let ax = a.matvec(&x0).unwrap();
    let mut c = vec![0.0; 144];
    h.vcycle(&ax, &mut c).unwrap();
    let rhs: Vec<f64> = x0.iter().zip(&c).map(|(u, v)| u - v).collect();
    assert!(vec_diff(&lhs, &rhs) <= 1e-12);
}

fn poisson_iterations(m: usize) -> (usize, Vec<f64>) {
    let a = laplace_2d(m, m, 1.0);
    let h = amg_setup(&a, &AmgConfig::default()).unwrap();
    let n = m * m;
    let b: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 37) % 11) as f64 / 11.0).collect();
    let cfg = GmresConfig {
        rtol: 1e-8,
        ..Default::default()
    };
    let (x, st) = gmres(&a, &h, &b, &vec![0.0; n], &cfg).unwrap();
    assert!(st.converged);
    let oracle = to_dense(&a).cholesky().unwrap().solve(&dvec(&b));
    let rel = vec_diff(&x, oracle.as_slice()) / oracle.amax();
    assert!(rel <= 1e-6, "relative error {rel}");
    (st.iterations, st.residual_history)
}

#[test]
fn amg_preconditioned_gmres_is_scalable_on_poisson() {
    let (i32, hist) = poisson_iterations(32);
    let (i64, _) = poisson_iterations(64);
    assert!(i32 <= 30, "32x32 took {i32} iterations");
    assert!((i64 as f64) <= 1.5 * i32 as f64, "{i32} -> {i64}");
    assert!(hist.windows(2).all(|w| w[1] <= w[0]));
}
