#![allow(dead_code)]

use mgr_poromech::constitutive::{FluidProps, Materials, RockProps};
use mgr_poromech::mesh::{Side, StructuredMesh};
use mgr_poromech::problem::{BoundaryAndSources, DiscreteState, Problem, Source, SourceKind};
use mgr_poromech::Assembler;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small box with a bottom clamp, heterogeneous permeability and a doublet.
pub fn small_problem(n: usize, seed: u64) -> Problem {
    let mesh = StructuredMesh::cube(n, 30.0).unwrap();
    let mut r = rng(seed);
    let mut mats = Materials::uniform(mesh.num_cells(), &RockProps::default());
    for c in 0..mesh.num_cells() {
        let k = 1e-14 * 10f64.powf(r.gen_range(-1.0..2.0));
        mats.perm[c] = [k, k * r.gen_range(0.5..2.0), k * 0.1];
        mats.young[c] = 1e9 * r.gen_range(0.5..2.0);
    }
    let mut bcs = BoundaryAndSources::default();
    bcs.fix_side(&mesh, Side::ZMin, [true; 3]);
    let nc = mesh.num_cells();
    bcs.sources.push(Source {
        cell: nc - 1,
        kind: SourceKind::Rate { q_w: 1e-3, q_nw: 0.0 },
    });
    bcs.sources.push(Source {
        cell: 0,
        kind: SourceKind::Producer { q_total: 1e-3 },
    });
    Problem {
        mesh,
        materials: mats,
        fluid: FluidProps::default(),
        bcs,
    }
}

/// Random state away from upwind ties and saturation end points.
pub fn random_state(asm: &Assembler, seed: u64) -> DiscreteState {
    let p = asm.problem();
    let mut r = rng(seed);
    let mut st = DiscreteState::zeros(&p.mesh);
    for v in st.u.iter_mut() {
        *v = r.gen_range(-1e-3..1e-3);
    }
    for c in 0..p.mesh.num_cells() {
        st.s[c] = r.gen_range(0.2..0.8);
        st.p[c] = 1e7 + r.gen_range(-2e5..2e5);
    }
    for (i, f) in asm.fixed_mask().iter().enumerate() {
        if *f {
            st.u[i] = 0.0;
        }
    }
    st
}
