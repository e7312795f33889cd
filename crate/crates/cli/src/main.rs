use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lapsc::report::to_toml;
use lapsc::run::{self, Axis, RunError};
use lapsc::scenario::load_scenario;

/// Diode-clamped MMC leg simulator and design tool.
///
/// `<file>` is a scenario file or the name of a shipped scenario
/// (table2-sim, table3-leaky, mismatch-step).
#[derive(Parser)]
#[command(name = "lapsc", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write trace, cycle averages and report.
    Simulate {
        file: String,
        /// Constant displacement replacing the scenario's schedule.
        #[arg(long = "delta-a")]
        delta_a: Option<f64>,
        /// Simulated time in seconds.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the analytic design report.
    Design {
        file: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print analytic losses; with --simulate also the paired simulation.
    Loss {
        file: String,
        #[arg(long)]
        simulate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the scenario once per value of one parameter.
    Sweep {
        file: String,
        /// delta_a, i_p, tolerance, f_sw or clamp_l.
        #[arg(long)]
        axis: Axis,
        /// Comma-separated values; may be empty.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&PathBuf>, file: &str) -> Result<(), RunError> {
    print!("{text}");
    if let Some(dir) = out {
        run::ensure_dir(dir)?;
        run::write_text(&dir.join(file), text)?;
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.cmd {
        Cmd::Simulate {
            file,
            delta_a,
            duration,
            out,
        } => {
            let mut s = load_scenario(&file)?;
            if let Some(d) = delta_a {
                s.set_constant_displacement(d);
            }
            if let Some(t) = duration {
                s.set_duration(t);
            }
            let res = run::run(&s)?;
            for p in run::write_outputs(&res, &out)? {
                eprintln!("wrote {}", p.display());
            }
            let m = &res.metrics;
            eprintln!(
                "spread_final {:.5}  max_deviation_final {:.5}  converged {}",
                m.spread_final,
                m.max_deviation_final,
                m.convergence_time.is_some()
            );
        }
        Cmd::Design { file, out } => {
            let s = load_scenario(&file)?;
            let doc = run::design_document(&s)?;
            emit(&to_toml(&doc), out.as_ref(), &format!("{}.design.toml", s.name))?;
        }
        Cmd::Loss { file, simulate, out } => {
            let s = load_scenario(&file)?;
            let doc = run::loss_document(&s, simulate)?;
            emit(&to_toml(&doc), out.as_ref(), &format!("{}.loss.toml", s.name))?;
        }
        Cmd::Sweep {
            file,
            axis,
            values,
            out,
        } => {
            let s = load_scenario(&file)?;
            let values = run::parse_values(&values)?;
            let doc = run::sweep(&s, axis, &values);
            let stem = format!("{}.sweep-{}", s.name, axis.name());
            emit(&to_toml(&doc), out.as_ref(), &format!("{stem}.toml"))?;
            if let Some(dir) = out {
                let path = dir.join(format!("{stem}.csv"));
                let f = std::fs::File::create(&path)?;
                run::write_sweep_csv(&doc, f)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
