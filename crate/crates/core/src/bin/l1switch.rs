use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use l1switch::scenario::output::{
    certificate_report, demo_report, metrics_report, write_intervals_csv, write_json, write_overlay_csv,
    write_sweep_csv, write_trace_csv,
};
use l1switch::scenario::{aircraft_demo, certify, obtain_certificate, simulate, sweep_gamma, DemoVariant, ScenarioConfig};
use l1switch::stability::LmiOptions;
use l1switch::Error;

/// Certify and simulate L1 adaptive controllers for switched linear plants.
#[derive(Parser)]
#[command(name = "l1switch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Output directory (overrides the config's `output.dir`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Integration step (overrides the config).
    #[arg(long)]
    dt: Option<f64>,
    /// Reserved; every pipeline is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for a stability certificate and write it with a report.
    Certify {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run one closed-loop simulation: trace CSV, metrics JSON and report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Adaptation gain (overrides the config).
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// One simulation per adaptation gain; writes sweep.csv.
    SweepGamma {
        #[arg(long)]
        config: PathBuf,
        /// Adaptation gain; repeat for each sweep entry (at least two).
        #[arg(long = "gamma", required = true)]
        gammas: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Built-in transport-aircraft study.
    AircraftDemo {
        /// `switched`, `fixed`, or `both`.
        #[arg(long, default_value = "both")]
        variant: String,
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

/// Bound violations detected after an otherwise successful run.
struct BoundViolation(String);

enum Failure {
    Lib(Error),
    Bounds(BoundViolation),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotFound(_) => 2,
        Error::Divergence { .. } | Error::NonFinite { .. } | Error::ProjectionEscape { .. } => 3,
        _ => 1,
    }
}

fn out_dir(common: &Common, config_dir: Option<&str>, default: &str) -> Result<PathBuf, Error> {
    let dir = common
        .out_dir
        .clone()
        .or_else(|| config_dir.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(default));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn load(path: &Path, common: &Common) -> Result<(l1switch::scenario::Scenario, PathBuf), Error> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(dt) = common.dt {
        cfg.simulation.dt = dt;
    }
    let scenario = cfg.build()?;
    let dir = out_dir(common, scenario.output_dir.as_deref(), "out")?;
    Ok((scenario, dir))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Certify { config, common } => {
            let (scenario, dir) = load(&config, &common)?;
            let c = certify(&scenario, &LmiOptions::default())?;
            write_json(&dir.join("certificate.json"), &c.certificate)?;
            let report = certificate_report(&c);
            std::fs::write(dir.join("certificate_report.txt"), &report).map_err(Error::from)?;
            print!("{report}");
        }
        Command::Simulate { config, gamma, common } => {
            let (scenario, dir) = load(&config, &common)?;
            let c = obtain_certificate(&scenario, &LmiOptions::default())?;
            let rep = simulate(&scenario, &c, gamma.unwrap_or(scenario.gamma))?;
            write_trace_csv(&dir.join("trace.csv"), &rep.result)?;
            write_json(&dir.join("metrics.json"), &rep.metrics)?;
            let report = metrics_report(&rep.metrics);
            std::fs::write(dir.join("report.txt"), &report).map_err(Error::from)?;
            print!("{report}");
            if !rep.metrics.bounds_hold() {
                return Err(Failure::Bounds(BoundViolation("simulated errors exceed the theoretical bounds".into())));
            }
        }
        Command::SweepGamma { config, gammas, common } => {
            let (scenario, dir) = load(&config, &common)?;
            let c = obtain_certificate(&scenario, &LmiOptions::default())?;
            let rows = sweep_gamma(&scenario, &c, &gammas)?;
            write_sweep_csv(&dir.join("sweep.csv"), &rows)?;
            println!("{:>12} {:>12} {:>14} {:>14} {:>14} {:>14}", "gamma", "dt", "max x_tilde", "bound", "max x_ref-x", "bound");
            let mut violated = false;
            for r in &rows {
                println!(
                    "{:>12.4e} {:>12.4e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}",
                    r.gamma, r.dt, r.max_x_tilde, r.prediction_bound, r.max_tracking_state, r.tracking_bound_state
                );
                violated |= r.max_x_tilde > r.prediction_bound || r.max_tracking_state > r.tracking_bound_state;
            }
            if violated {
                return Err(Failure::Bounds(BoundViolation("a sweep entry exceeds its theoretical bound".into())));
            }
        }
        Command::AircraftDemo { variant, gamma, common } => {
            let variants = match variant.as_str() {
                "both" => vec![DemoVariant::Switched, DemoVariant::Fixed],
                v => vec![v.parse::<DemoVariant>()?],
            };
            let dir = out_dir(&common, None, "out")?;
            let reports: Vec<_> = {
                use rayon::prelude::*;
                variants.par_iter().map(|&v| aircraft_demo(v, gamma, common.dt)).collect::<Result<_, _>>()?
            };
            let mut violated = false;
            for d in &reports {
                let sub = dir.join(d.variant.to_string());
                std::fs::create_dir_all(&sub).map_err(Error::from)?;
                write_trace_csv(&sub.join("trace.csv"), &d.simulation.result)?;
                write_overlay_csv(&sub.join("overlays.csv"), &d.overlays)?;
                write_intervals_csv(&sub.join("intervals.csv"), d)?;
                write_json(&sub.join("metrics.json"), &d.simulation.metrics)?;
                write_json(&sub.join("certificate.json"), &d.certification.certificate)?;
                let report = demo_report(d);
                std::fs::write(sub.join("report.txt"), &report).map_err(Error::from)?;
                print!("{report}");
                violated |= !d.simulation.metrics.bounds_hold();
            }
            if violated {
                return Err(Failure::Bounds(BoundViolation("simulated errors exceed the theoretical bounds".into())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Bounds(BoundViolation(msg))) => {
            eprintln!("bound violation: {msg}");
            ExitCode::from(3)
        }
    }
}
