//! Refinement and smoother-comparison studies.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use log::info;
use mgr_core::mgr::GlobalSmoother;
use serde::{Deserialize, Serialize};

use crate::config::{ProblemSpec, RunConfig};
use crate::error::{BenchError, Result};
use crate::run::{run, RunOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub level: usize,
    pub n: usize,
    pub dofs: usize,
    pub steps: usize,
    pub newton_total: usize,
    pub gmres_total: usize,
    /// GMRES iterations per Newton iteration over the whole run.
    pub avg_gmres: f64,
    /// `avg_gmres` over that of level 0.
    pub growth: f64,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub all_converged: bool,
}

/// Closed-form unknown count of an `n^3` staircase.
pub fn staircase_dofs(n: usize) -> usize {
    3 * (n + 1).pow(3) + 2 * n.pow(3)
}

fn with_subdir(cfg: &RunConfig, name: &str) -> RunConfig {
    let mut c = cfg.clone();
    c.output.dir = cfg.output.dir.as_ref().map(|d| d.join(name));
    c
}

fn totals(out: &RunOutcome) -> (usize, usize, f64, f64) {
    let newton = out.reports.iter().map(|r| r.newton_iters).sum();
    let gmres = out.reports.iter().flat_map(|r| &r.gmres_iters).sum();
    let setup = out.reports.iter().map(|r| r.setup_seconds).sum();
    let solve = out.reports.iter().map(|r| r.solve_seconds).sum();
    (newton, gmres, setup, solve)
}

/// Runs the staircase of `cfg` at every size in `cfg.study.refinement_sizes`
/// with the same schedule. Writes `refinement.csv` when an output directory
/// is configured.
pub fn study_refinement(cfg: &RunConfig) -> Result<Vec<RefinementRow>> {
    let ProblemSpec::Staircase(base) = &cfg.problem else {
        return Err(BenchError::Config(
            "field `problem`: the refinement study needs a staircase problem".into(),
        ));
    };
    let sizes = &cfg.study.refinement_sizes;
    if sizes.len() < 2 {
        return Err(BenchError::Config(
            "field `study.refinement_sizes`: need at least two levels".into(),
        ));
    }
    let mut rows: Vec<RefinementRow> = Vec::new();
    for (level, &n) in sizes.iter().enumerate() {
        let mut c = with_subdir(cfg, &format!("n{n}"));
        let mut spec = base.clone();
        spec.n = n;
        c.problem = ProblemSpec::Staircase(spec);
        c.validate()?;
        info!("refinement level {level}: n = {n}");
        let out = run(&c)?;
        let (newton_total, gmres_total, setup_seconds, solve_seconds) = totals(&out);
        let avg = if newton_total > 0 {
            gmres_total as f64 / newton_total as f64
        } else {
            0.0
        };
        let base_avg = rows.first().map_or(avg, |r| r.avg_gmres);
        rows.push(RefinementRow {
            level,
            n,
            dofs: out.dofs,
            steps: out.reports.len(),
            newton_total,
            gmres_total,
            avg_gmres: avg,
            growth: if base_avg > 0.0 { avg / base_avg } else { f64::NAN },
            setup_seconds,
            solve_seconds,
            all_converged: out.all_converged,
        });
    }
    if let Some(d) = &cfg.output.dir {
        fs::create_dir_all(d)?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(d.join("refinement.csv"))?));
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmootherRow {
    pub step: usize,
    pub time_days: f64,
    pub hbgs_gmres: f64,
    pub ilu_gmres: f64,
    /// Max pressure change rate of the HBGS run (Pa/s).
    pub dp_rate: f64,
    pub hbgs_seconds_cum: f64,
    pub ilu_seconds_cum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmootherSummary {
    /// First step whose pressure rate is at most `transition_fraction` of
    /// the first step's; `None` if never reached.
    pub transition_step: Option<usize>,
    /// Largest `|ilu - hbgs|` before the transition.
    pub early_max_diff: f64,
    /// Share of post-transition steps with `ilu <= hbgs`.
    pub late_ilu_le_fraction: f64,
    pub late_steps: usize,
    pub hbgs_converged: bool,
    pub ilu_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmootherStudy {
    pub rows: Vec<SmootherRow>,
    pub summary: SmootherSummary,
}

fn set_last_smoother(cfg: &RunConfig, smoother: GlobalSmoother) -> Result<RunConfig> {
    let mut c = cfg.clone();
    let last = c
        .solver
        .mgr
        .levels
        .last_mut()
        .ok_or_else(|| BenchError::Config("field `solver.mgr.levels`: must not be empty".into()))?;
    last.global_smoother = smoother;
    Ok(c)
}

/// Summary of two per-step GMRES series given the pressure-rate series.
pub fn summarize(hbgs: &[f64], ilu: &[f64], dp_rate: &[f64], fraction: f64) -> (Option<usize>, f64, f64, usize) {
    let m = hbgs.len().min(ilu.len()).min(dp_rate.len());
    let first = dp_rate.first().copied().unwrap_or(0.0);
    let t = (0..m).find(|&i| dp_rate[i] <= fraction * first);
    let early_end = t.unwrap_or(m);
    let early_max_diff = (0..early_end).fold(0.0f64, |a, i| a.max((ilu[i] - hbgs[i]).abs()));
    let late: Vec<usize> = match t {
        Some(t) => (t..m).collect(),
        None => Vec::new(),
    };
    let le = late.iter().filter(|&&i| ilu[i] <= hbgs[i]).count();
    let frac = if late.is_empty() {
        0.0
    } else {
        le as f64 / late.len() as f64
    };
    (t.map(|i| i + 1), early_max_diff, frac, late.len())
}

/// Runs the same problem with HBGS and ILU global smoothing on the last
/// reduction level. Writes `smoothers.csv` and `smoothers_summary.json`
/// when an output directory is configured.
pub fn study_smoothers(cfg: &RunConfig) -> Result<SmootherStudy> {
    let hb_cfg = with_subdir(
        &set_last_smoother(
            cfg,
            GlobalSmoother::Hbgs {
                sweeps: cfg.study.hbgs_sweeps,
            },
        )?,
        "hbgs",
    );
    let ilu_cfg = with_subdir(
        &set_last_smoother(
            cfg,
            GlobalSmoother::Ilu {
                fill: cfg.study.ilu_fill,
            },
        )?,
        "ilu",
    );
    info!("smoother study: HBGS run");
    let hb = run(&hb_cfg)?;
    info!("smoother study: ILU run");
    let il = run(&ilu_cfg)?;
    let m = hb.reports.len().min(il.reports.len());
    let mut rows = Vec::with_capacity(m);
    let (mut th, mut ti) = (0.0, 0.0);
    for i in 0..m {
        let (a, b) = (&hb.reports[i], &il.reports[i]);
        th += a.setup_seconds + a.solve_seconds;
        ti += b.setup_seconds + b.solve_seconds;
        rows.push(SmootherRow {
            step: a.step,
            time_days: a.time_days,
            hbgs_gmres: a.avg_gmres,
            ilu_gmres: b.avg_gmres,
            dp_rate: hb.dp_rate[i],
            hbgs_seconds_cum: th,
            ilu_seconds_cum: ti,
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.hbgs_gmres).collect();
    let is: Vec<f64> = rows.iter().map(|r| r.ilu_gmres).collect();
    let dp: Vec<f64> = rows.iter().map(|r| r.dp_rate).collect();
    let (transition_step, early_max_diff, late_ilu_le_fraction, late_steps) =
        summarize(&hs, &is, &dp, cfg.study.transition_fraction);
    let summary = SmootherSummary {
        transition_step,
        early_max_diff,
        late_ilu_le_fraction,
        late_steps,
        hbgs_converged: hb.all_converged,
        ilu_converged: il.all_converged,
    };
    if let Some(d) = &cfg.output.dir {
        write_smoother_files(d, &rows, &summary)?;
    }
    Ok(SmootherStudy { rows, summary })
}

fn write_smoother_files(dir: &Path, rows: &[SmootherRow], summary: &SmootherSummary) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("smoothers.csv"))?));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    fs::write(
        dir.join("smoothers_summary.json"),
        serde_json::to_string_pretty(summary).expect("summaries serialize"),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_count_closed_form() {
        assert_eq!(staircase_dofs(8), 3 * 729 + 2 * 512);
    }

    #[test]
    fn summary_splits_at_transition() {
        let dp = [100.0, 50.0, 4.0, 3.0, 1.0];
        let hb = [5.0, 6.0, 9.0, 10.0, 8.0];
        let il = [6.0, 5.0, 8.0, 11.0, 7.0];
        let (t, early, frac, late) = summarize(&hb, &il, &dp, 0.05);
        assert_eq!(t, Some(3));
        assert_eq!(early, 1.0);
        assert_eq!(late, 3);
        assert!((frac - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_transition_means_no_late_steps() {
        let (t, _, frac, late) = summarize(&[1.0, 1.0], &[1.0, 1.0], &[1.0, 0.9], 0.05);
        assert_eq!((t, frac, late), (None, 0.0, 0));
    }
}
