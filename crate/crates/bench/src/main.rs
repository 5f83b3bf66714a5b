use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mgr_bench::run::run;
use mgr_bench::solve::{check_jacobian, export, solve_file};
use mgr_bench::studies::{study_refinement, study_smoothers};
use mgr_bench::{BenchError, RunConfig};

#[derive(Parser)]
#[command(
    name = "mgr",
    version,
    about = "Multigrid-reduction solver and poromechanics benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the time loop of a configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve a Matrix Market system with MGR-preconditioned GMRES.
    Solve {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        solver: PathBuf,
    },
    /// Run a study.
    Study {
        kind: StudyKind,
        #[arg(long)]
        config: PathBuf,
    },
    /// Consistency checks.
    Check {
        what: CheckKind,
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the first Newton system of a configuration as Matrix Market
    /// files plus layout and solver JSON.
    Export {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKind {
    Refinement,
    Smoothers,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Jacobian,
}

/// Returns whether the command succeeded numerically.
fn execute(cmd: Command) -> Result<bool, BenchError> {
    match cmd {
        Command::Run { config } => {
            let cfg = RunConfig::from_file(config)?;
            let out = run(&cfg)?;
            println!("step,time_days,newton_iters,avg_gmres,converged");
            for r in &out.reports {
                println!(
                    "{},{:.4},{},{:.2},{}",
                    r.step, r.time_days, r.newton_iters, r.avg_gmres, r.converged
                );
            }
            Ok(out.all_converged)
        }
        Command::Solve {
            matrix,
            rhs,
            layout,
            solver,
        } => {
            let rep = solve_file(&matrix, &rhs, &layout, &solver)?;
            println!("dofs: {}", rep.dofs);
            println!("iterations: {}", rep.iterations);
            println!("converged: {}", rep.converged);
            println!("setup_seconds: {:.4}", rep.setup_seconds);
            println!("solve_seconds: {:.4}", rep.solve_seconds);
            println!("residual_history:");
            for (i, r) in rep.residual_history.iter().enumerate() {
                println!("  {i} {r:.6e}");
            }
            Ok(rep.converged)
        }
        Command::Study { kind, config } => {
            let cfg = RunConfig::from_file(config)?;
            match kind {
                StudyKind::Refinement => {
                    let rows = study_refinement(&cfg)?;
                    println!("level,n,dofs,newton_total,gmres_total,avg_gmres,growth,all_converged");
                    for r in &rows {
                        println!(
                            "{},{},{},{},{},{:.3},{:.3},{}",
                            r.level, r.n, r.dofs, r.newton_total, r.gmres_total, r.avg_gmres, r.growth, r.all_converged
                        );
                    }
                    Ok(rows.iter().all(|r| r.all_converged))
                }
                StudyKind::Smoothers => {
                    let st = study_smoothers(&cfg)?;
                    println!("step,time_days,hbgs_gmres,ilu_gmres,dp_rate");
                    for r in &st.rows {
                        println!(
                            "{},{:.4},{:.2},{:.2},{:.3e}",
                            r.step, r.time_days, r.hbgs_gmres, r.ilu_gmres, r.dp_rate
                        );
                    }
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&st.summary).expect("summaries serialize")
                    );
                    Ok(st.summary.hbgs_converged && st.summary.ilu_converged)
                }
            }
        }
        Command::Check {
            what: CheckKind::Jacobian,
            config,
        } => {
            let cfg = RunConfig::parse_file(config)?;
            let rep = check_jacobian(&cfg)?;
            println!("max relative error: {:.3e}", rep.max_rel_error);
            let (i, j, a, f) = rep.worst;
            println!("worst entry ({i}, {j}): analytic {a:.6e}, finite difference {f:.6e}");
            println!("entries checked: {}", rep.entries_checked);
            Ok(true)
        }
        Command::Export { config, out } => {
            let cfg = RunConfig::from_file(config)?;
            let rep = export(&cfg, &out)?;
            println!("wrote {} dofs to {}", rep.dofs, out.display());
            println!("in-process GMRES iterations: {}", rep.iterations);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("solver failure: not every solve converged");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
