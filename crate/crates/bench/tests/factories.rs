use mgr_bench::problems::{build_layered, build_staircase, layered_xi, staircase_channel, LayeredSpec, StaircaseSpec};
use mgr_bench::studies::staircase_dofs;
use mgr_poromech::{FluidProps, RockProps, SourceKind};
use proptest::prelude::*;

/// Walks the channel cell by cell: along +x on the top back edge, down the
/// far x edge, then along +y on the bottom.
fn walked_path(n: usize) -> Vec<usize> {
    let idx = |i: usize, j: usize, k: usize| i + n * (j + n * k);
    let mut cells = Vec::new();
    let (mut i, mut j, mut k) = (0, 0, n - 1);
    cells.push(idx(i, j, k));
    while i < n - 1 {
        i += 1;
        cells.push(idx(i, j, k));
    }
    while k > 0 {
        k -= 1;
        cells.push(idx(i, j, k));
    }
    while j < n - 1 {
        j += 1;
        cells.push(idx(i, j, k));
    }
    cells.sort();
    cells
}

#[test]
fn unit_width_channel_matches_walked_path() {
    for n in [4, 5, 9] {
        assert_eq!(staircase_channel(n, 1), walked_path(n), "n = {n}");
    }
}

#[test]
fn staircase_4_has_one_cell_channel_and_exact_ratio() {
    let spec = StaircaseSpec::new(4);
    assert_eq!(spec.width_cells(), 1);
    let rock = RockProps::default();
    let p = build_staircase(&spec, &rock, &FluidProps::default()).unwrap();
    let channel = walked_path(4);
    for c in 0..64 {
        let expect = if channel.contains(&c) {
            rock.perm * 1e3
        } else {
            rock.perm
        };
        assert_eq!(p.materials.perm[c], [expect; 3]);
    }
    let ratio = p.materials.perm[channel[0]][0] / p.materials.perm[1 + 4 * 2][0];
    assert!((ratio - 1e3).abs() <= 1e-12 * 1e3);
}

#[test]
fn doublet_is_balanced_and_sits_in_the_channel() {
    let spec = StaircaseSpec::new(8);
    let p = build_staircase(&spec, &RockProps::default(), &FluidProps::default()).unwrap();
    let ch = staircase_channel(8, spec.width_cells());
    let mut net = 0.0;
    for s in &p.bcs.sources {
        assert!(ch.contains(&s.cell));
        net += match s.kind {
            SourceKind::Rate { q_w, q_nw } => q_w + q_nw,
            SourceKind::Producer { q_total } => -q_total,
        };
    }
    assert_eq!(net, 0.0);
}

#[test]
fn staircase_rejects_small_cubes() {
    let err = build_staircase(&StaircaseSpec::new(3), &RockProps::default(), &FluidProps::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn dof_count_matches_assembled_problem() {
    for n in [4, 6] {
        let p = build_staircase(&StaircaseSpec::new(n), &RockProps::default(), &FluidProps::default()).unwrap();
        assert_eq!(p.num_dofs(), staircase_dofs(n));
    }
}

fn layered(sigma: f64, seed: Option<u64>) -> LayeredSpec {
    serde_json::from_value(serde_json::json!({"nx": 32, "ny": 32, "nz": 32, "sigma": sigma, "seed": seed})).unwrap()
}

#[test]
fn zero_sigma_gives_homogeneous_field() {
    let rock = RockProps::default();
    let p = build_layered(&layered(0.0, Some(3)), 0, &rock, &FluidProps::default()).unwrap();
    assert!(p
        .materials
        .perm
        .iter()
        .all(|k| *k == [rock.perm, rock.perm, 0.1 * rock.perm]));
}

#[test]
fn log_perm_sample_std_is_close_to_sigma() {
    let sigma = 1.5;
    let rock = RockProps::default();
    let p = build_layered(&layered(sigma, Some(11)), 0, &rock, &FluidProps::default()).unwrap();
    let logs: Vec<f64> = p.materials.perm.iter().map(|k| (k[0] / rock.perm).ln()).collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let std = (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((std - sigma).abs() <= 0.1 * sigma, "sample std {std}");
}

#[test]
fn layered_wells_are_balanced() {
    let p = build_layered(&layered(1.0, None), 5, &RockProps::default(), &FluidProps::default()).unwrap();
    assert_eq!(p.bcs.sources.len(), 5);
    let net: f64 = p
        .bcs
        .sources
        .iter()
        .map(|s| match s.kind {
            SourceKind::Rate { q_w, q_nw } => q_w + q_nw,
            SourceKind::Producer { q_total } => -q_total,
        })
        .sum();
    assert!(net.abs() <= 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn layered_field_depends_only_on_seed(seed in any::<u64>(), nz in 1usize..10) {
        let a = layered_xi(3, 4, nz, 4, seed);
        let b = layered_xi(3, 4, nz, 4, seed);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn channel_is_face_connected(n in 4usize..14, frac in 0.05f64..0.5) {
        let mut spec = StaircaseSpec::new(n);
        spec.channel_width = frac;
        let ch = staircase_channel(n, spec.width_cells());
        let ijk = |c: usize| (c % n, (c / n) % n, c / (n * n));
        // flood fill from the injector corner reaches every channel cell
        let start = n * n * (n - 1);
        let mut seen = vec![start];
        let mut stack = vec![start];
        while let Some(c) = stack.pop() {
            let (i, j, k) = ijk(c);
            for &d in &ch {
                let (a, b, e) = ijk(d);
                let dist = a.abs_diff(i) + b.abs_diff(j) + e.abs_diff(k);
                if dist == 1 && !seen.contains(&d) {
                    seen.push(d);
                    stack.push(d);
                }
            }
        }
        prop_assert_eq!(seen.len(), ch.len());
        prop_assert!(ch.contains(&(n - 1 + n * (n - 1))));
    }
}
