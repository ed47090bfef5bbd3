//! Command-line front end.
//!
//! Exit status is 0 on success, 1 for usage, configuration and I/O errors, and 2
//! when a run ends in a solver failure (its outputs are still written).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dynamics::Termination;
use crate::error::Error;
use crate::exec::Exec;
use crate::experiments::{
    l1_paper_series, load_config_file, preset_with_n, rate_scenario, run_many, run_scenario,
    simulate, sweep_nu_scenario, write_outputs, Manifest, Scenario, FIGURE_IDS,
};
use crate::metrics::rate_fit;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fluxlag", version, about = "Lagrangian solver for the relativistic heat equation and its porous-medium variants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output root directory
    #[arg(long, env = "FLUXLAG_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExecArg {
    /// Run independent scenarios one after another
    #[arg(long, default_value_t = false)]
    pub sequential: bool,
}

impl ExecArg {
    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario document; outputs go to <out>/<name>
    Run {
        /// Scenario document (JSON)
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the scenarios behind one figure; outputs go to <out>/<figure>
    Figure {
        /// fig1 to fig9
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(FIGURE_IDS))]
        id: String,
        /// Node count override for every run of the figure
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        exec: ExecArg,
    },
    /// Convergence rate of the indicator datum towards its self-similar profile
    Rates {
        /// Nonlinearity exponent, >= 1
        #[arg(long)]
        m: f64,
        /// Node count of the uniform mass mesh
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Final time
        #[arg(long = "t-end", default_value_t = 50.0)]
        t_end: f64,
        /// Fit window a,b
        #[arg(long, value_name = "A,B", value_parser = parse_window, default_value = "5,50")]
        window: (f64, f64),
        /// Reference profile (default: selfsim_heat for m = 1, barenblatt otherwise)
        #[arg(long)]
        reference: Option<String>,
        #[command(flatten)]
        out: OutArg,
    },
    /// L1 distance to the homogeneous solution across viscosities
    SweepNu {
        /// Viscosities, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 100.0])]
        values: Vec<f64>,
        /// Comparison time
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Node count of the uniform mass mesh
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        exec: ExecArg,
    },
    /// Check a scenario document without running it
    Validate {
        /// Scenario document (JSON)
        #[arg(long)]
        config: PathBuf,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            if e.is_solver() {
                EXIT_SOLVER
            } else {
                EXIT_CONFIG
            }
        }
    }
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [a, b] = parts[..] else {
        return Err(format!("expected two comma-separated times, got '{s}'"));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
    let (a, b) = (num(a)?, num(b)?);
    if !(a > 0.0 && b > a) {
        return Err(format!("window needs 0 < a < b, got {a},{b}"));
    }
    Ok((a, b))
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn execute(command: Command) -> Result<i32, Error> {
    match command {
        Command::Validate { config } => {
            let s = load_config_file(&config)?;
            println!("ok: {}", s.name);
            Ok(EXIT_OK)
        }
        Command::Run { config, out } => {
            let s = load_config_file(&config)?;
            let dir = match &s.output_dir {
                Some(d) => out.out.join(d),
                None => out.out.join(&s.name),
            };
            let output = run_scenario(&s, &dir, Exec::default())?;
            Ok(report(&s, &dir, &output.manifest))
        }
        Command::Figure { id, n, out, exec } => {
            let scenarios = preset_with_n(&id, n)?;
            let root = out.out.join(&id);
            let jobs: Vec<(Scenario, PathBuf)> = if scenarios.len() == 1 {
                vec![(scenarios[0].clone(), root)]
            } else {
                scenarios
                    .into_iter()
                    .map(|s| {
                        let dir = root.join(&s.name);
                        (s, dir)
                    })
                    .collect()
            };
            let results = run_many(&jobs, exec.exec());
            let mut code = EXIT_OK;
            for ((s, dir), r) in jobs.iter().zip(results) {
                code = code.max(report(s, dir, &r?.manifest));
            }
            Ok(code)
        }
        Command::Rates {
            m,
            n,
            t_end,
            window,
            reference,
            out,
        } => {
            let mut s = rate_scenario(m, n, t_end);
            if reference.is_some() {
                s.reference = reference;
            }
            s.validate()?;
            let dir = out.out.join(&s.name);
            let started = chrono::Utc::now();
            let sim = simulate(&s, Exec::default())?;
            let manifest = write_outputs(&s, &sim, &dir, started)?;
            let code = report(&s, &dir, &manifest);
            let series = l1_paper_series(&sim.metrics);
            for (t, e) in &series {
                println!("t={t:.6e} l1_paper={e:.6e}");
            }
            let fit = rate_fit(&series, window)?;
            println!("points={}", fit.points);
            println!("slope={}", fit.slope);
            Ok(code)
        }
        Command::SweepNu {
            values,
            t,
            n,
            out,
            exec,
        } => {
            let root = out.out.join("sweep_nu");
            let mut jobs = Vec::with_capacity(values.len());
            for &nu in &values {
                let s = sweep_nu_scenario(nu, t, n);
                s.validate()?;
                let dir = root.join(&s.name);
                jobs.push((s, dir));
            }
            let results = run_many(&jobs, exec.exec());
            let mut code = EXIT_OK;
            for ((s, dir), r) in jobs.iter().zip(results) {
                let output = r?;
                code = code.max(report(s, dir, &output.manifest));
                if let Some(rec) = output.metrics.last() {
                    let e = rec.l1_quadrature.map_or("nan".into(), |e| e.to_string());
                    println!("nu={} t={} l1_quadrature={e}", s.nu, rec.t);
                }
            }
            Ok(code)
        }
    }
}

fn report(s: &Scenario, dir: &Path, manifest: &Manifest) -> i32 {
    match &manifest.termination {
        Termination::Failed { t, reason } => {
            eprintln!(
                "error: {}: solver failure at t = {t}: {} (partial outputs in {})",
                s.name,
                one_line(reason),
                dir.display()
            );
            EXIT_SOLVER
        }
        _ => {
            eprintln!(
                "{}: {} steps, {:.2} s -> {}",
                s.name,
                manifest.steps,
                manifest.wall_time_s,
                dir.display()
            );
            EXIT_OK
        }
    }
}
