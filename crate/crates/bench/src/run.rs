//! Time-loop driver and report files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use log::info;
use mgr_poromech::output::{write_cell_csv, write_node_csv};
use mgr_poromech::{Simulator, SolveReport};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::problems::prepare_from_config;

/// Reports of a run and whether every step converged.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reports: Vec<SolveReport>,
    pub dofs: usize,
    /// `max |p_new - p_old| / dt` per step (Pa/s).
    pub dp_rate: Vec<f64>,
    pub all_converged: bool,
}

#[derive(Serialize)]
struct ReportRow<'a> {
    step: usize,
    time_days: f64,
    dt: f64,
    newton_iters: usize,
    gmres_iters: &'a str,
    avg_gmres: f64,
    halvings: usize,
    converged: bool,
}

#[derive(Serialize)]
struct TimingRow {
    step: usize,
    setup_seconds: f64,
    solve_seconds: f64,
}

fn join_counts(v: &[usize]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

/// Deterministic per-step columns; timings go to a separate file.
pub fn write_reports<W: Write>(w: W, reports: &[SolveReport]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in reports {
        let counts = join_counts(&r.gmres_iters);
        wr.serialize(ReportRow {
            step: r.step,
            time_days: r.time_days,
            dt: r.dt,
            newton_iters: r.newton_iters,
            gmres_iters: &counts,
            avg_gmres: r.avg_gmres,
            halvings: r.halvings,
            converged: r.converged,
        })?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_timings<W: Write>(w: W, reports: &[SolveReport]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in reports {
        wr.serialize(TimingRow {
            step: r.step,
            setup_seconds: r.setup_seconds,
            solve_seconds: r.solve_seconds,
        })?;
    }
    wr.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Runs the schedule of `cfg`. Artifacts are written when `cfg.output.dir`
/// is set: `reports.csv`, `timings.csv`, `config.json` and snapshots.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let dir = cfg.output.dir.as_deref();
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
        fs::write(d.join("config.json"), cfg.to_json())?;
    }
    let prep = prepare_from_config(cfg)?;
    let dofs = prep.assembler.num_dofs();
    info!("{dofs} unknowns, {} steps", cfg.schedule.len());
    let mut sim = Simulator::new(prep.assembler, &prep.initial, cfg.newton.clone(), cfg.solver.clone())?;
    let every = cfg.output.snapshot_every;
    if let (Some(d), true) = (dir, every > 0) {
        snapshot(d, 0, &sim)?;
    }
    let mut p_old = prep.initial.p.clone();
    let mut dp_rate = Vec::with_capacity(cfg.schedule.len());
    let reports = sim.run(&cfg.schedule, |r, sim| {
        info!(
            "step {} t = {:.3} d: {} Newton, avg GMRES {:.2}{}",
            r.step,
            r.time_days,
            r.newton_iters,
            r.avg_gmres,
            if r.converged { "" } else { " (failed)" }
        );
        let p = sim.state().p;
        dp_rate.push(max_abs_diff(&p, &p_old) / r.dt);
        p_old = p;
        if let (Some(d), true) = (dir, every > 0 && r.step % every == 0) {
            snapshot(d, r.step, sim)?;
        }
        Ok(())
    })?;
    let all_converged = reports.len() == cfg.schedule.len() && reports.iter().all(|r| r.converged);
    if let Some(d) = dir {
        write_reports(create(&d.join("reports.csv"))?, &reports)?;
        write_timings(create(&d.join("timings.csv"))?, &reports)?;
    }
    Ok(RunOutcome {
        reports,
        dofs,
        dp_rate,
        all_converged,
    })
}

fn snapshot(dir: &Path, step: usize, sim: &Simulator) -> std::result::Result<(), mgr_poromech::PoroError> {
    let problem = sim.assembler().problem();
    let state = sim.state();
    let io = |e: std::io::Error| mgr_poromech::PoroError::Io(e.to_string());
    let cells = File::create(dir.join(format!("cells_{step:05}.csv"))).map_err(io)?;
    write_cell_csv(BufWriter::new(cells), problem, &state)?;
    let nodes = File::create(dir.join(format!("nodes_{step:05}.csv"))).map_err(io)?;
    write_node_csv(BufWriter::new(nodes), problem, &state)?;
    Ok(())
}
