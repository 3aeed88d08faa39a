use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ergolab::config::{parse_config, ExperimentKind};
use ergolab::runner::run;

#[derive(Parser)]
#[command(name = "ergolab", version, about = "Lyapunov-exponent and zero-exponent-measure experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov exponents on a line of energies.
    LyapunovScan(Overrides),
    /// Weyl m-function values at one complex energy.
    MFunction(Overrides),
    /// Measure of the zero-exponent set on an energy grid.
    Measure(Overrides),
    /// Integral over the coupling constant of the zero-exponent measure.
    CouplingSweep(Overrides),
    /// Step-function approximation and mollification sequence.
    Approximation(Overrides),
    /// Conformal-map weights on the spectral interval.
    ScWeight(Overrides),
    /// Mean-value check of the complex Lyapunov exponent on a circle.
    HarmonicCheck(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// TOML configuration file.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Orbit length per Lyapunov estimate.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    orbits: Option<usize>,
    /// Zero-exponent threshold, a positive number or "auto".
    #[arg(long)]
    delta_gamma: Option<String>,
    /// Energy-grid cells.
    #[arg(long)]
    cells: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    prefix: Option<String>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Overrides) {
        match self {
            Command::LyapunovScan(o) => (ExperimentKind::LyapunovScan, o),
            Command::MFunction(o) => (ExperimentKind::MFunction, o),
            Command::Measure(o) => (ExperimentKind::Measure, o),
            Command::CouplingSweep(o) => (ExperimentKind::CouplingSweep, o),
            Command::Approximation(o) => (ExperimentKind::Approximation, o),
            Command::ScWeight(o) => (ExperimentKind::ScWeight, o),
            Command::HarmonicCheck(o) => (ExperimentKind::HarmonicCheck, o),
        }
    }
}

fn section<'a>(doc: &'a mut toml::Table, name: &str) -> Result<&'a mut toml::Table, String> {
    doc.entry(name)
        .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        .as_table_mut()
        .ok_or_else(|| format!("config key `{name}` must be a table"))
}

fn int(v: usize) -> toml::Value {
    toml::Value::Integer(v as i64)
}

/// Applies command-line overrides to the raw document so that the merged
/// result goes through the same validation as a config file.
fn merge(text: &str, kind: ExperimentKind, o: &Overrides) -> Result<String, String> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    doc.insert("experiment".into(), toml::Value::String(kind.name().into()));
    if let Some(seed) = o.seed {
        doc.insert("seed".into(), toml::Value::Integer(seed as i64));
    }
    if let Some(p) = o.parallelism {
        doc.insert("parallelism".into(), int(p));
    }
    if let Some(d) = &o.delta_gamma {
        let v = match d.parse::<f64>() {
            Ok(x) => toml::Value::Float(x),
            Err(_) => toml::Value::String(d.clone()),
        };
        doc.insert("delta_gamma".into(), v);
    }
    if let Some(s) = o.steps {
        section(&mut doc, "lyapunov")?.insert("steps".into(), int(s));
    }
    if let Some(n) = o.orbits {
        section(&mut doc, "lyapunov")?.insert("orbits".into(), int(n));
    }
    if let Some(c) = o.cells {
        section(&mut doc, "grid")?.insert("cells".into(), int(c));
    }
    if let Some(dir) = &o.out_dir {
        section(&mut doc, "output")?.insert("dir".into(), toml::Value::String(dir.clone()));
    }
    if let Some(p) = &o.prefix {
        section(&mut doc, "output")?.insert("prefix".into(), toml::Value::String(p.clone()));
    }
    Ok(doc.to_string())
}

fn main() -> ExitCode {
    let (kind, overrides) = Cli::parse().command.split();
    let text = match std::fs::read_to_string(&overrides.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", overrides.config.display());
            return ExitCode::from(2);
        }
    };
    let merged = merge(&text, kind, &overrides).and_then(|t| parse_config(&t).map_err(|e| e.to_string()));
    let config = match merged {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            return ExitCode::from(2);
        }
    };
    let started = Instant::now();
    match run(&config) {
        Ok(out) => {
            print!("{}", out.summary);
            println!("wall-clock: {:.2} s", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
