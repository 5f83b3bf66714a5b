mod common;

use common::*;
use mgr_core::amg::amg_setup;
use mgr_core::krylov::{gmres, GmresConfig};
use mgr_core::mgr::{
    build_coarse, build_transfers, mgr_setup, CoarseSolve, DropPolicy, FRelax, GlobalSmoother, Interpolation,
    MgrConfig, MgrLevelSpec, Restriction,
};
use mgr_core::sparse::{
    extract_blocks, triple_product, CfSplitting, CsrMatrix, DofOrdering, DroppedEntries, Field, FieldLayout,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn spec(f: Vec<Field>, c: Vec<Field>) -> MgrLevelSpec {
    MgrLevelSpec {
        f_fields: f,
        c_fields: c,
        interp: Interpolation::InjectionJacobi,
        restrict: Restriction::Injection,
        f_relax: FRelax::Jacobi { sweeps: 1, weight: 1.0 },
        global_smoother: GlobalSmoother::None,
        drop: DropPolicy::None,
        quasi_impes: false,
    }
}

fn scalar_split_layout(n: usize, c_every: usize) -> FieldLayout {
    let fields = (0..n)
        .map(|i| if i % c_every == 0 { Field::P } else { Field::S })
        .collect();
    FieldLayout::new(fields, (0..n).collect(), DofOrdering::FieldBlocked).unwrap()
}

/// Synthetic three-field operator: `nnodes` nodes with 3 displacement dofs
/// each followed by `ncells` interleaved (s, p) pairs, randomly coupled.
fn three_field(r: &mut ChaCha8Rng, nnodes: usize, ncells: usize) -> (CsrMatrix, FieldLayout) {
    let nu = 3 * nnodes;
    let n = nu + 2 * ncells;
    let mut fields = vec![Field::U; nu];
    let mut ents: Vec<usize> = (0..nu).map(|d| d / 3).collect();
    for c in 0..ncells {
        fields.push(Field::S);
        fields.push(Field::P);
        ents.push(c);
        ents.push(c);
    }
    let layout = FieldLayout::new(fields, ents, DofOrdering::FlowInterleaved).unwrap();
    let m = random_dominant(r, n, 0.12);
    (m, layout)
}

#[test]
fn jacobi_interpolation_matches_dense_formula() {
    let mut r = rng(61);
    let a = random_dominant(&mut r, 20, 0.25);
    let layout = scalar_split_layout(20, 3);
    let sp = spec(vec![Field::S], vec![Field::P]);
    let split = CfSplitting::from_fields(&layout, &sp.c_fields);
    let b = extract_blocks(&a, &split).unwrap();
    let t = build_transfers(&b, &sp, 2000).unwrap();
    let dff = DMatrix::from_diagonal(&to_dense(&b.ff).diagonal());
    let oracle = -dff.try_inverse().unwrap() * to_dense(&b.fc);
    assert!(max_abs_diff(&to_dense(&t.wp), &oracle) <= 1e-13);
    assert_eq!(t.wr.nnz(), 0);

    let p = to_dense(&t.prolongation(&split));
    for (k, &i) in split.c_points().iter().enumerate() {
        assert_eq!(p.row(i).iter().copied().collect::<Vec<_>>(), {
            let mut e = vec![0.0; split.num_c()];
            e[k] = 1.0;
            e
        });
    }
}

#[test]
fn decoupled_blocks_give_pure_injection() {
    let a = CsrMatrix::from_diagonal(&[2.0, 3.0, 4.0, 5.0]);
    let layout = scalar_split_layout(4, 2);
    let sp = spec(vec![Field::S], vec![Field::P]);
    let split = CfSplitting::from_fields(&layout, &sp.c_fields);
    let b = extract_blocks(&a, &split).unwrap();
    let t = build_transfers(&b, &sp, 2000).unwrap();
    assert_eq!(t.wp.nnz(), 0);
    let c = build_coarse(&b, &t, &sp, &layout.restrict(split.c_points())).unwrap();
    assert_eq!(c, b.cc);
}

#[test]
fn ideal_transfers_give_exact_schur_complement() {
    let mut r = rng(62);
    let a = random_dominant(&mut r, 30, 0.3);
    let layout = scalar_split_layout(30, 3);
    let mut sp = spec(vec![Field::S], vec![Field::P]);
    sp.interp = Interpolation::Ideal;
    sp.restrict = Restriction::Ideal;
    let split = CfSplitting::from_fields(&layout, &sp.c_fields);
    let b = extract_blocks(&a, &split).unwrap();
    let t = build_transfers(&b, &sp, 2000).unwrap();
    let rap = triple_product(&t.restriction(&split), &a, &t.prolongation(&split)).unwrap();
    let aff_inv = to_dense(&b.ff).try_inverse().unwrap();
    let schur = to_dense(&b.cc) - to_dense(&b.cf) * aff_inv * to_dense(&b.fc);
    assert!(max_abs_diff(&to_dense(&rap), &schur) <= 1e-10);
    let coarse = build_coarse(&b, &t, &sp, &layout.restrict(split.c_points())).unwrap();
    assert!(max_abs_diff(&to_dense(&coarse), &schur) <= 1e-10);

    // R A Q = Q^T A P = 0 for ideal transfers
    let q = DMatrix::from_fn(
        30,
        split.num_f(),
        |i, k| if split.f_points()[k] == i { 1.0 } else { 0.0 },
    );
    let ad = to_dense(&a);
    assert!((to_dense(&t.restriction(&split)) * &ad * &q).abs().max() <= 1e-12);
    assert!((q.transpose() * &ad * to_dense(&t.prolongation(&split))).abs().max() <= 1e-12);
}

#[test]
fn injection_transfers_are_orthogonal_to_f_injection() {
    let mut r = rng(63);
    let a = random_dominant(&mut r, 15, 0.3);
    let layout = scalar_split_layout(15, 2);
    let mut sp = spec(vec![Field::S], vec![Field::P]);
    sp.interp = Interpolation::InjectionOnly;
    let split = CfSplitting::from_fields(&layout, &sp.c_fields);
    let b = extract_blocks(&a, &split).unwrap();
    let t = build_transfers(&b, &sp, 2000).unwrap();
    let q = DMatrix::from_fn(
        15,
        split.num_f(),
        |i, k| if split.f_points()[k] == i { 1.0 } else { 0.0 },
    );
    assert_eq!((to_dense(&t.restriction(&split)) * &q).abs().max(), 0.0);
    assert_eq!((q.transpose() * to_dense(&t.prolongation(&split))).abs().max(), 0.0);
    let c = build_coarse(&b, &t, &sp, &layout.restrict(split.c_points())).unwrap();
    assert_eq!(c, b.cc);
}

#[test]
fn second_level_coarse_grid_matches_dense_schur_approximation() {
    let mut r = rng(64);
    let a = random_flow(&mut r, 12);
    let layout = FieldLayout::interleaved_flow(12);
    for qi in [false, true] {
        let mut sp = spec(vec![Field::S], vec![Field::P]);
        sp.quasi_impes = qi;
        let cfg = MgrConfig {
            levels: vec![sp],
            coarse_solve: CoarseSolve::Exact,
            ..MgrConfig::flow_two_level(GlobalSmoother::None, qi)
        };
        let h = mgr_setup(&a, &layout, &cfg).unwrap();
        let b = h.blocks(0).unwrap();
        let mut aps = to_dense(&b.cf);
        if qi {
            aps = DMatrix::from_diagonal(&aps.diagonal());
        }
        let dss_inv = DMatrix::from_diagonal(&to_dense(&b.ff).diagonal().map(|d| 1.0 / d));
        let oracle = to_dense(&b.cc) - aps * dss_inv * to_dense(&b.fc);
        assert!(max_abs_diff(&to_dense(h.operator(1)), &oracle) <= 1e-12);
    }
}

#[test]
fn first_level_without_kept_entries_has_diagonal_subblocks() {
    let mut r = rng(65);
    let (a, layout) = three_field(&mut r, 10, 8);
    let mut cfg = MgrConfig::default();
    cfg.levels[0].drop = DropPolicy::Nmax {
        n_max: 0,
        dropped: DroppedEntries::Discard,
    };
    cfg.levels[0].f_relax = FRelax::Jacobi { sweeps: 1, weight: 1.0 };
    let h = mgr_setup(&a, &layout, &cfg).unwrap();
    assert_eq!(h.level_sizes(), vec![46, 16, 8]);
    let s1 = h.operator(1);
    // the correction R A P - A_CC is sub-block diagonal
    let acc = extract_blocks(&a, &CfSplitting::from_fields(&layout, &[Field::S, Field::P]))
        .unwrap()
        .cc;
    let corr = s1.add_scaled(1.0, &acc, -1.0).unwrap();
    let l1 = h.layout(1);
    for i in 0..corr.nrows() {
        let (c, v) = corr.row(i);
        for (&j, &x) in c.iter().zip(v) {
            assert!(x == 0.0 || l1.entity(i) == l1.entity(j), "({i},{j}) = {x}");
        }
    }
}

#[test]
fn two_level_ideal_exact_is_a_direct_solver() {
    let mut r = rng(66);
    let a = random_dominant(&mut r, 40, 0.2);
    let layout = scalar_split_layout(40, 4);
    let mut sp = spec(vec![Field::S], vec![Field::P]);
    sp.interp = Interpolation::Ideal;
    sp.restrict = Restriction::Ideal;
    sp.f_relax = FRelax::Exact;
    let cfg = MgrConfig {
        levels: vec![sp],
        coarse_solve: CoarseSolve::Exact,
        ..MgrConfig::default()
    };
    let h = mgr_setup(&a, &layout, &cfg).unwrap();
    let v = random_vec(&mut r, 40);
    let z = h.apply(&v).unwrap();
    let oracle = to_dense(&a).lu().solve(&dvec(&v)).unwrap();
    assert!(vec_diff(&z, oracle.as_slice()) <= 1e-10);

    let (x, st) = gmres(
        &a,
        &h,
        &v,
        &vec![0.0; 40],
        &GmresConfig {
            rtol: 1e-10,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(st.converged);
    assert_eq!(st.iterations, 1);
    assert!(a.residual(&v, &x).unwrap().iter().all(|x| x.abs() <= 1e-10));
}

#[test]
fn three_level_default_structure() {
    let mut r = rng(67);
    let (a, layout) = three_field(&mut r, 27, 8);
    let h = mgr_setup(&a, &layout, &MgrConfig::default()).unwrap();
    assert_eq!(h.num_reduction_levels(), 2);
    assert_eq!(h.level_sizes(), vec![81 + 16, 16, 8]);
    let s0 = h.splitting(0).unwrap();
    assert!(s0.f_points().iter().all(|&i| layout.field(i) == Field::U));
    assert_eq!(s0.num_c(), 16);
    assert!(h.layout(2).fields().iter().all(|&f| f == Field::P));
    let z = h.apply(&vec![0.0; 97]).unwrap();
    assert_eq!(z, vec![0.0; 97]);
}

#[test]
fn all_c_scalar_level_reduces_to_plain_amg() {
    let a = laplace_2d(12, 12, 1.0);
    let layout = FieldLayout::scalar(144, Field::P);
    let mut sp = spec(vec![], vec![Field::P]);
    sp.f_relax = FRelax::None;
    let cfg = MgrConfig {
        levels: vec![sp.clone()],
        ..MgrConfig::default()
    };
    let h = mgr_setup(&a, &layout, &cfg).unwrap();
    let amg = amg_setup(&a, &cfg.coarse_amg).unwrap();
    let v = random_vec(&mut rng(68), 144);
    let mut z = vec![0.0; 144];
    amg.solve_from_zero(&v, &mut z);
    assert_eq!(h.apply(&v).unwrap(), z);

    let mut r = rng(69);
    let (b, l3) = three_field(&mut r, 4, 4);
    let bad = MgrConfig {
        levels: vec![MgrLevelSpec {
            c_fields: vec![Field::U, Field::S, Field::P],
            ..sp
        }],
        ..MgrConfig::default()
    };
    assert!(mgr_setup(&b, &l3, &bad).is_err());
}

fn random_three_field_case(seed: u64) -> (CsrMatrix, FieldLayout, ChaCha8Rng) {
    let mut r = rng(seed);
    let nn = r.gen_range(4..10);
    let nc = r.gen_range(3..8);
    let (a, l) = three_field(&mut r, nn, nc);
    (a, l, r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mgr_apply_is_linear_and_repeatable(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let (a, layout, mut r) = random_three_field_case(seed);
        for smoother in [GlobalSmoother::Ilu { fill: 1 }, GlobalSmoother::Hbgs { sweeps: 2 }] {
            let h = mgr_setup(&a, &layout, &MgrConfig::three_level(smoother, false)).unwrap();
            let n = a.nrows();
            let u = random_vec(&mut r, n);
            let v = random_vec(&mut r, n);
            let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| alpha * x + beta * y).collect();
            let zu = h.apply(&u).unwrap();
            let zv = h.apply(&v).unwrap();
            let zw = h.apply(&w).unwrap();
            let scale = zu.iter().chain(&zv).fold(1.0f64, |m, x| m.max(x.abs())) * (alpha.abs() + beta.abs()).max(1.0);
            for k in 0..n {
                prop_assert!((zw[k] - alpha * zu[k] - beta * zv[k]).abs() <= 1e-12 * scale);
            }
            prop_assert_eq!(h.apply(&u).unwrap(), zu);
        }
    }

    #[test]
    fn drop_free_coarse_equals_jacobi_schur(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(8..30);
        let a = random_dominant(&mut r, n, 0.3);
        let layout = scalar_split_layout(n, 3);
        let sp = spec(vec![Field::S], vec![Field::P]);
        let split = CfSplitting::from_fields(&layout, &sp.c_fields);
        let b = extract_blocks(&a, &split).unwrap();
        let t = build_transfers(&b, &sp, 2000).unwrap();
        let c = build_coarse(&b, &t, &sp, &layout.restrict(split.c_points())).unwrap();
        let dinv = DMatrix::from_diagonal(&to_dense(&b.ff).diagonal().map(|d| 1.0 / d));
        let oracle = to_dense(&b.cc) - to_dense(&b.cf) * dinv * to_dense(&b.fc);
        prop_assert!(max_abs_diff(&to_dense(&c), &oracle) <= 1e-12);
    }
}
