//! Problem factories: the staircase channel, the layered heterogeneous
//! reservoir and problems read from JSON files.

use std::path::Path;

use mgr_poromech::init::initial_state;
use mgr_poromech::mesh::{Side, StructuredMesh};
use mgr_poromech::problem::{FlowDirichlet, TractionLoad};
use mgr_poromech::{
    Assembler, BoundaryAndSources, DiscreteState, FluidProps, Materials, Phase, Problem, RockProps, Source, SourceKind,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{ProblemSpec, RunConfig};
use crate::error::{BenchError, Result};

fn default_p_top() -> f64 {
    1.0e7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaircaseSpec {
    /// Cells per edge.
    pub n: usize,
    /// Edge length of the cube (m).
    #[serde(default = "StaircaseSpec::default_length")]
    pub length: f64,
    /// Channel over host permeability.
    #[serde(default = "StaircaseSpec::default_ratio")]
    pub channel_ratio: f64,
    /// Channel thickness as a fraction of the edge (at least one cell).
    #[serde(default = "StaircaseSpec::default_width")]
    pub channel_width: f64,
    /// Injected wetting mass rate, balanced by the producer (kg/s).
    #[serde(default = "StaircaseSpec::default_rate")]
    pub rate: f64,
    /// Pressure of the top layer at the start (Pa).
    #[serde(default = "default_p_top")]
    pub p_top: f64,
}

impl StaircaseSpec {
    fn default_length() -> f64 {
        100.0
    }
    fn default_ratio() -> f64 {
        1.0e3
    }
    fn default_width() -> f64 {
        0.25
    }
    fn default_rate() -> f64 {
        5.0
    }

    pub fn new(n: usize) -> Self {
        Self {
            n,
            length: Self::default_length(),
            channel_ratio: Self::default_ratio(),
            channel_width: Self::default_width(),
            rate: Self::default_rate(),
            p_top: default_p_top(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(BenchError::Config(format!(
                "field `problem.n`: staircase needs at least 4 cells per edge, got {}",
                self.n
            )));
        }
        self.validate_values()
    }

    fn validate_values(&self) -> Result<()> {
        let ok = self.length > 0.0
            && self.channel_ratio > 0.0
            && self.channel_width > 0.0
            && self.channel_width <= 1.0
            && self.rate >= 0.0
            && self.p_top.is_finite();
        if ok {
            Ok(())
        } else {
            Err(BenchError::Config(format!("invalid staircase parameters {self:?}")))
        }
    }

    /// Channel thickness in cells.
    pub fn width_cells(&self) -> usize {
        ((self.channel_width * self.n as f64).round() as usize).clamp(1, self.n)
    }
}

/// Cells of the three-segment channel: along +x on the top edge, down the
/// far x edge, then along +y on the bottom. Sorted by index.
pub fn staircase_channel(n: usize, w: usize) -> Vec<usize> {
    let mut cells = Vec::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let seg1 = j < w && k >= n - w;
                let seg2 = i >= n - w && j < w;
                let seg3 = i >= n - w && k < w;
                if seg1 || seg2 || seg3 {
                    cells.push(i + n * (j + n * k));
                }
            }
        }
    }
    cells
}

/// Staircase problem without the `n >= 4` guard, so the 3x3x3 Jacobian check
/// can use the same geometry.
pub fn staircase_problem(spec: &StaircaseSpec, rock: &RockProps, fluid: &FluidProps) -> Result<Problem> {
    spec.validate_values()?;
    let n = spec.n;
    if n < 2 {
        return Err(BenchError::Config("staircase needs at least 2 cells per edge".into()));
    }
    let mesh = StructuredMesh::cube(n, spec.length)?;
    let mut materials = Materials::uniform(mesh.num_cells(), rock);
    for c in staircase_channel(n, spec.width_cells()) {
        materials.perm[c] = [rock.perm * spec.channel_ratio; 3];
    }
    let mut bcs = BoundaryAndSources::default();
    bcs.fix_side(&mesh, Side::ZMin, [true; 3]);
    let vol = mesh.cell_volume();
    let q = spec.rate / vol;
    bcs.sources.push(Source {
        cell: mesh.cell_index(0, 0, n - 1),
        kind: SourceKind::Rate { q_w: q, q_nw: 0.0 },
    });
    bcs.sources.push(Source {
        cell: mesh.cell_index(n - 1, n - 1, 0),
        kind: SourceKind::Producer { q_total: q },
    });
    Ok(Problem {
        mesh,
        materials,
        fluid: fluid.clone(),
        bcs,
    })
}

pub fn build_staircase(spec: &StaircaseSpec, rock: &RockProps, fluid: &FluidProps) -> Result<Problem> {
    spec.validate()?;
    staircase_problem(spec, rock, fluid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayeredSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Standard deviation of `ln(kappa)`.
    pub sigma: f64,
    /// Field seed; the run seed is used when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "LayeredSpec::default_spacing")]
    pub spacing: f64,
    /// Cells per vertical segment sharing one random draw.
    #[serde(default = "LayeredSpec::default_segment")]
    pub segment: usize,
    /// Vertical over horizontal permeability.
    #[serde(default = "LayeredSpec::default_kv")]
    pub kv_ratio: f64,
    /// Injected wetting mass rate; each corner producer withdraws a quarter (kg/s).
    #[serde(default = "LayeredSpec::default_rate")]
    pub rate: f64,
    #[serde(default = "default_p_top")]
    pub p_top: f64,
}

impl LayeredSpec {
    fn default_spacing() -> f64 {
        10.0
    }
    fn default_segment() -> usize {
        4
    }
    fn default_kv() -> f64 {
        0.1
    }
    fn default_rate() -> f64 {
        2.0
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.nx >= 2
            && self.ny >= 2
            && self.nz >= 1
            && self.sigma >= 0.0
            && self.spacing > 0.0
            && self.segment >= 1
            && self.kv_ratio > 0.0
            && self.rate >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(BenchError::Config(format!("invalid layered parameters {self:?}")))
        }
    }
}

/// `ln(kappa / kappa0) / sigma` per cell: one standard normal draw per
/// vertical segment of `segment` cells, drawn segment-major then y then x.
pub fn layered_xi(nx: usize, ny: usize, nz: usize, segment: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nseg = nz.div_ceil(segment);
    let mut xi = vec![0.0; nx * ny * nz];
    for s in 0..nseg {
        for j in 0..ny {
            for i in 0..nx {
                let v: f64 = StandardNormal.sample(&mut rng);
                for k in s * segment..((s + 1) * segment).min(nz) {
                    xi[i + nx * (j + ny * k)] = v;
                }
            }
        }
    }
    xi
}

pub fn build_layered(spec: &LayeredSpec, seed: u64, rock: &RockProps, fluid: &FluidProps) -> Result<Problem> {
    spec.validate()?;
    let (nx, ny, nz) = (spec.nx, spec.ny, spec.nz);
    let h = spec.spacing;
    let mesh = StructuredMesh::new(nx, ny, nz, h, h, h)?;
    let mut materials = Materials::uniform(mesh.num_cells(), rock);
    let xi = layered_xi(nx, ny, nz, spec.segment, spec.seed.unwrap_or(seed));
    for (c, &x) in xi.iter().enumerate() {
        let k = rock.perm * (spec.sigma * x).exp();
        materials.perm[c] = [k, k, k * spec.kv_ratio];
    }
    let mut bcs = BoundaryAndSources::default();
    bcs.fix_side(&mesh, Side::ZMin, [true; 3]);
    bcs.fix_side(&mesh, Side::XMin, [true, false, false]);
    bcs.fix_side(&mesh, Side::XMax, [true, false, false]);
    bcs.fix_side(&mesh, Side::YMin, [false, true, false]);
    bcs.fix_side(&mesh, Side::YMax, [false, true, false]);
    let vol = mesh.cell_volume();
    let kmid = nz / 2;
    bcs.sources.push(Source {
        cell: mesh.cell_index(nx / 2, ny / 2, kmid),
        kind: SourceKind::Rate {
            q_w: spec.rate / vol,
            q_nw: 0.0,
        },
    });
    for (i, j) in [(0, 0), (nx - 1, 0), (0, ny - 1), (nx - 1, ny - 1)] {
        bcs.sources.push(Source {
            cell: mesh.cell_index(i, j, kmid),
            kind: SourceKind::Producer {
                q_total: 0.25 * spec.rate / vol,
            },
        });
    }
    Ok(Problem {
        mesh,
        materials,
        fluid: fluid.clone(),
        bcs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedSide {
    pub side: Side,
    pub components: [bool; 3],
}

/// Free-form problem description for the `from_file` problem type. Rock and
/// fluid properties come from the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub mesh: StructuredMesh,
    /// Per-cell diagonal permeability; uniform `rock.perm` when absent.
    #[serde(default)]
    pub perm: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub fixed_sides: Vec<FixedSide>,
    #[serde(default)]
    pub tractions: Vec<TractionLoad>,
    #[serde(default)]
    pub flow_dirichlet: Vec<FlowDirichlet>,
    #[serde(default)]
    pub sources: Vec<Source>,
    #[serde(default = "default_p_top")]
    pub p_top: f64,
    /// Uniform initial saturation; residual wetting saturation when absent.
    #[serde(default)]
    pub initial_saturation: Option<f64>,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            BenchError::Config(format!("{}: field `{field}`: {}", path.display(), e.into_inner()))
        })
    }

    pub fn build(&self, rock: &RockProps, fluid: &FluidProps) -> Result<Problem> {
        let mesh = StructuredMesh::new(
            self.mesh.nx,
            self.mesh.ny,
            self.mesh.nz,
            self.mesh.hx,
            self.mesh.hy,
            self.mesh.hz,
        )?;
        let mut materials = Materials::uniform(mesh.num_cells(), rock);
        if let Some(perm) = &self.perm {
            if perm.len() != mesh.num_cells() {
                return Err(BenchError::Config(format!(
                    "field `perm`: expected {} entries, got {}",
                    mesh.num_cells(),
                    perm.len()
                )));
            }
            materials.perm = perm.clone();
        }
        let mut bcs = BoundaryAndSources::default();
        for f in &self.fixed_sides {
            bcs.fix_side(&mesh, f.side, f.components);
        }
        bcs.tractions = self.tractions.clone();
        bcs.flow_dirichlet = self.flow_dirichlet.clone();
        bcs.sources = self.sources.clone();
        Ok(Problem {
            mesh,
            materials,
            fluid: fluid.clone(),
            bcs,
        })
    }
}

/// Assembled problem and its initial state.
pub struct Prepared {
    pub assembler: Assembler,
    pub initial: DiscreteState,
}

fn prepare(problem: Problem, p_top: f64, s0: f64) -> Result<Prepared> {
    let nc = problem.mesh.num_cells();
    let assembler = Assembler::new(problem)?;
    // the resident non-wetting phase sets the initial hydrostatic gradient
    let initial = initial_state(&assembler, Phase::NonWetting, p_top, vec![s0; nc])?;
    Ok(Prepared { assembler, initial })
}

/// Problem of a run configuration, without initialization.
pub fn problem_from_config(cfg: &RunConfig) -> Result<(Problem, f64, f64)> {
    let s_wr = cfg.fluid.s_wr;
    match &cfg.problem {
        ProblemSpec::Staircase(s) => Ok((build_staircase(s, &cfg.rock, &cfg.fluid)?, s.p_top, s_wr)),
        ProblemSpec::Layered(l) => Ok((build_layered(l, cfg.seed, &cfg.rock, &cfg.fluid)?, l.p_top, s_wr)),
        ProblemSpec::FromFile { .. } => {
            let file = cfg.problem_file()?.expect("from_file problem");
            let s0 = file.initial_saturation.unwrap_or(s_wr);
            Ok((file.build(&cfg.rock, &cfg.fluid)?, file.p_top, s0))
        }
    }
}

/// Builds, assembles and initializes the problem of a run configuration.
pub fn prepare_from_config(cfg: &RunConfig) -> Result<Prepared> {
    let (problem, p_top, s0) = problem_from_config(cfg)?;
    prepare(problem, p_top, s0)
}

/// Staircase of any size `n >= 2` with hydrostatic, equilibrated initial state.
pub fn prepare_staircase(spec: &StaircaseSpec, rock: &RockProps, fluid: &FluidProps) -> Result<Prepared> {
    prepare(staircase_problem(spec, rock, fluid)?, spec.p_top, fluid.s_wr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_connects_the_well_corners() {
        for n in [4, 8, 16] {
            let w = StaircaseSpec::new(n).width_cells();
            let ch = staircase_channel(n, w);
            assert!(ch.contains(&(n * n * (n - 1))));
            assert!(ch.contains(&(n - 1 + n * (n - 1))));
        }
    }

    #[test]
    fn layered_field_is_constant_per_segment() {
        let xi = layered_xi(3, 2, 8, 4, 5);
        for j in 0..2 {
            for i in 0..3 {
                let col: Vec<f64> = (0..8).map(|k| xi[i + 3 * (j + 2 * k)]).collect();
                assert!(col[..4].iter().all(|&v| v == col[0]));
                assert!(col[4..].iter().all(|&v| v == col[4]));
                assert_ne!(col[0], col[4]);
            }
        }
    }
}
