//! Fully-implicit time marching with step cutting.

use log::{info, warn};
use mgr_core::sparse::FieldLayout;
use serde::{Deserialize, Serialize};

use crate::assembly::Assembler;
use crate::error::{PoroError, Result};
use crate::newton::{newton_solve, LinearSolverConfig, NewtonConfig};
use crate::problem::DiscreteState;

pub const SECONDS_PER_DAY: f64 = 86400.0;

/// Per-step solver statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub step: usize,
    /// Simulated time at the end of the step (days).
    pub time_days: f64,
    pub dt: f64,
    pub newton_iters: usize,
    pub gmres_iters: Vec<usize>,
    pub avg_gmres: f64,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub halvings: usize,
    pub converged: bool,
}

impl SolveReport {
    pub fn mean(counts: &[usize]) -> f64 {
        if counts.is_empty() {
            0.0
        } else {
            counts.iter().sum::<usize>() as f64 / counts.len() as f64
        }
    }
}

pub struct Simulator {
    asm: Assembler,
    layout: FieldLayout,
    x: Vec<f64>,
    time: f64,
    steps: usize,
    pub newton: NewtonConfig,
    pub linear: LinearSolverConfig,
    pub max_halvings: usize,
}

impl Simulator {
    pub fn new(
        asm: Assembler,
        initial: &DiscreteState,
        newton: NewtonConfig,
        linear: LinearSolverConfig,
    ) -> Result<Self> {
        let x = initial.to_vector();
        if x.len() != asm.num_dofs() {
            return Err(PoroError::InvalidInput("initial state does not match the mesh".into()));
        }
        newton.validate()?;
        linear.gmres.validate()?;
        let layout = asm.problem().layout();
        Ok(Self {
            asm,
            layout,
            x,
            time: 0.0,
            steps: 0,
            newton,
            linear,
            max_halvings: 4,
        })
    }

    pub fn assembler(&self) -> &Assembler {
        &self.asm
    }

    pub fn layout(&self) -> &FieldLayout {
        &self.layout
    }

    pub fn unknowns(&self) -> &[f64] {
        &self.x
    }

    pub fn state(&self) -> DiscreteState {
        DiscreteState::from_vector(&self.x, self.asm.problem().mesh.num_nodes())
    }

    /// Simulated time (s).
    pub fn time(&self) -> f64 {
        self.time
    }

    /// Advances by `dt` seconds, halving the substep on Newton failure.
    ///
    /// A step that still fails after `max_halvings` cuts leaves the state at
    /// the last accepted substep and returns a report with `converged = false`.
    pub fn step(&mut self, dt: f64) -> Result<SolveReport> {
        if !(dt > 0.0) {
            return Err(PoroError::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        self.steps += 1;
        let target = self.time + dt;
        let mut sub = dt;
        let mut report = SolveReport {
            step: self.steps,
            time_days: 0.0,
            dt,
            newton_iters: 0,
            gmres_iters: Vec::new(),
            avg_gmres: 0.0,
            setup_seconds: 0.0,
            solve_seconds: 0.0,
            halvings: 0,
            converged: true,
        };
        while target - self.time > 1e-9 * dt {
            let h = sub.min(target - self.time);
            let (xn, st) = newton_solve(&self.asm, &self.layout, &self.x, &self.x, h, &self.newton, &self.linear)?;
            report.newton_iters += st.iterations;
            report.gmres_iters.extend(&st.gmres_iters);
            report.setup_seconds += st.setup_seconds;
            report.solve_seconds += st.solve_seconds;
            if st.converged {
                self.x = xn;
                self.time += h;
            } else if report.halvings == self.max_halvings {
                warn!("step {} failed after {} halvings", self.steps, report.halvings);
                report.converged = false;
                break;
            } else {
                sub *= 0.5;
                report.halvings += 1;
                info!("step {}: cutting substep to {sub:.3e} s", self.steps);
            }
        }
        report.time_days = self.time / SECONDS_PER_DAY;
        report.avg_gmres = SolveReport::mean(&report.gmres_iters);
        Ok(report)
    }

    /// Runs a schedule of step sizes, calling `on_step` after every step.
    /// Stops at the first step that fails to converge.
    pub fn run<F>(&mut self, schedule: &[f64], mut on_step: F) -> Result<Vec<SolveReport>>
    where
        F: FnMut(&SolveReport, &Simulator) -> Result<()>,
    {
        let mut reports = Vec::with_capacity(schedule.len());
        for &dt in schedule {
            let r = self.step(dt)?;
            let ok = r.converged;
            on_step(&r, self)?;
            reports.push(r);
            if !ok {
                break;
            }
        }
        Ok(reports)
    }
}
