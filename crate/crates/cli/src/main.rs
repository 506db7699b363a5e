//! `spsim`: command-line driver for signed-particle experiments.
//!
//! Exit status is 0 when every check passes, 2 when a check fails and 1 on a
//! runtime or configuration error.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use signed_particles::harness::{self, Check, ExperimentConfig};
use signed_particles::potentials::{audit_assumptions, Order, PotentialSpec, Profile};

#[derive(Parser)]
#[command(name = "spsim", version, about = "Annihilating signed particles and their Hamilton-Jacobi limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the particle system to `t_end`.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Particle number (defaults to the first entry of `n_list`).
        #[arg(long)]
        n: Option<usize>,
        /// Trajectory CSV `t,x_0..,b_0..`.
        #[arg(long)]
        traj: Option<PathBuf>,
        /// Event log, one JSON object per line.
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Solve the limit equation and write `x,u` snapshots.
    Pde {
        #[arg(long)]
        config: PathBuf,
        /// Scaling regime (overrides the configuration).
        #[arg(long)]
        m: Option<u8>,
        /// Potential, e.g. `wall`, `log`, `riesz:0.5` (overrides the configuration).
        #[arg(long)]
        pot: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Particle staircases against the limit solution over `n_list`.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// CSV `n,t,distance`.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Audit a potential against the assumptions of a regime.
    CheckPotential {
        #[arg(long)]
        pot: String,
        /// `wp`, `hj1`, `hj2` or `hj3`.
        #[arg(long)]
        profile: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numerical checks of the quantized operator.
    HamiltonianTest {
        #[arg(long = "lemma", value_enum)]
        check: OperatorCheck,
        #[arg(long)]
        config: PathBuf,
        /// Directory for the CSV tables.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fit the gap exponent of the first collision.
    FitExponent {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorCheck {
    /// Convergence of `M_ε` to the limit operator.
    Rhs,
    /// Lower and uniform bounds on quartic wells.
    Parabola,
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn emit<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            serde_json::to_writer_pretty(&mut w, value)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        None => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, value)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn summarize(checks: &[Check]) -> bool {
    for c in checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    harness::all_pass(checks)
}

fn out_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> Option<PathBuf> {
    flag.or_else(|| cfg.output.dir.clone())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { config, n, traj, events, report } => {
            let mut cfg = load(&config)?;
            cfg.integrate.record_trajectory |= traj.is_some();
            let (rep, out) = harness::simulate(&cfg, n)?;
            if let (Some(p), Some(t)) = (traj, &out.trajectory) {
                t.write_csv(create(&p)?)?;
            }
            if let Some(p) = events {
                let mut w = create(&p)?;
                out.log.write_jsonl(&mut w)?;
                w.flush()?;
            }
            emit(&rep, report.as_deref())?;
            Ok(summarize(&rep.checks))
        }
        Command::Pde {
            config,
            m,
            pot,
            out_dir: dir,
            report,
        } => {
            let mut cfg = load(&config)?;
            if let Some(m) = m {
                cfg.regime.m = Order::try_from(m).map_err(anyhow::Error::msg)?;
            }
            if let Some(p) = pot {
                cfg.potential = PotentialSpec::parse(&p)?;
            }
            let (rep, grids) = harness::solve_pde(&cfg)?;
            if let Some(dir) = out_dir(dir, &cfg) {
                for (k, g) in grids.iter().enumerate() {
                    g.write_csv(create(&dir.join(format!("u_{k}.csv")))?)?;
                }
            }
            emit(&rep, report.as_deref())?;
            Ok(summarize(&rep.checks))
        }
        Command::Converge { config, table, report } => {
            let cfg = load(&config)?;
            let rep = harness::run_convergence(&cfg)?;
            let table = table.or_else(|| cfg.output.dir.as_ref().map(|d| d.join("convergence.csv")));
            if let Some(p) = table {
                rep.write_csv(create(&p)?)?;
            }
            emit(&rep, report.as_deref())?;
            Ok(summarize(&rep.checks))
        }
        Command::CheckPotential { pot, profile, out } => {
            let pot = PotentialSpec::parse(&pot)?.build()?;
            let profile: Profile = profile.parse()?;
            let rep = audit_assumptions(&pot, profile);
            emit(&rep, out.as_deref())?;
            for f in rep.failures() {
                eprintln!("FAIL {}", f.item);
            }
            Ok(rep.passes())
        }
        Command::HamiltonianTest {
            check,
            config,
            out_dir: dir,
            report,
        } => {
            let cfg = load(&config)?;
            let dir = out_dir(dir, &cfg);
            match check {
                OperatorCheck::Rhs => {
                    let rep = harness::rhs_check(&cfg)?;
                    if let Some(dir) = dir {
                        for (k, c) in rep.cases.iter().enumerate() {
                            c.table.write_csv(create(&dir.join(format!("rhs_{}_{k}.csv", c.function)))?)?;
                        }
                    }
                    emit(&rep, report.as_deref())?;
                    Ok(summarize(&rep.checks))
                }
                OperatorCheck::Parabola => {
                    let rep = harness::parabola_check(&cfg)?;
                    if let Some(dir) = dir {
                        rep.table.write_csv(create(&dir.join("parabola.csv"))?)?;
                    }
                    emit(&rep, report.as_deref())?;
                    Ok(summarize(&rep.checks))
                }
            }
        }
        Command::FitExponent { config, report } => {
            let cfg = load(&config)?;
            let rep = harness::fit_collision_exponent(&cfg)?;
            emit(&rep, report.as_deref())?;
            let (lo, hi) = rep.fit.ci;
            let line = format!("slope {:.4} [{lo:.4}, {hi:.4}], expected {:.4}", rep.fit.slope, rep.expected);
            Ok(summarize(&[Check::new("collision exponent", rep.passed, line)]))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
