use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use infarct_qrs::config::{ExperimentConfig, MeshSource};
use infarct_qrs::experiment::Experiment;
use infarct_qrs::mesh::io::save_mesh;
use infarct_qrs::mesh::{generate_synthetic_biventricle, Mesh, SyntheticParams};
use infarct_qrs::scenario::{catalogue, catalogue_report};
use infarct_qrs::Error;

#[derive(Parser)]
#[command(name = "infarct-qrs", version, about = "Simulate infarct scenarios and compare their QRS complexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the baseline and the selected scenarios, writing CSV and SVG outputs
    Simulate(SimulateArgs),
    /// Show the scenario catalogue
    Catalogue {
        #[arg(long)]
        print: bool,
    },
    /// Generate the synthetic biventricular mesh
    Mesh {
        #[arg(long)]
        generate: bool,
        #[arg(long)]
        out: PathBuf,
        /// Grid spacing in cm
        #[arg(long)]
        resolution: Option<f64>,
    },
    /// Print the default configuration as TOML
    Config {
        #[arg(long)]
        print: bool,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML config; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated scenario names (the baseline always runs)
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for automatic
    #[arg(long)]
    jobs: Option<usize>,
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.scenarios {
        cfg.scenarios = s.into_iter().filter(|n| !n.is_empty()).collect();
    }
    if let Some(o) = args.out {
        cfg.output_dir = o;
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    let dir = cfg.output_dir.clone();
    let report = Experiment::new(cfg)?.run()?;
    let (files, warnings) = report.write(&dir)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let d = &report.dissimilarity;
    println!("{:<32} {:>9} {:>9} {:>9}", "scenario", "dtw_max", "dtw_avg", "qrs_ms");
    println!("{:<32} {:>9} {:>9} {:>9.1}", report.entries[0].name, "-", "-", report.baseline().features.duration);
    for e in &report.entries[1..] {
        match (e.result(), d.names.iter().position(|n| *n == e.name)) {
            (Some(r), Some(i)) => {
                println!("{:<32} {:>9.4} {:>9.4} {:>9.1}", e.name, d.dtw_max[i], d.dtw_avg[i], r.features.duration)
            }
            _ => println!("{:<32} {:>9}", e.name, "failed"),
        }
    }
    println!("wrote {} files to {}", files.len(), dir.display());
    let failures: Vec<_> = report.failures().collect();
    if failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    let items: Vec<String> =
        failures.iter().map(|(n, m)| format!("{{\"scenario\":{},\"message\":{}}}", json_str(n), json_str(m))).collect();
    eprintln!("{{\"error\":\"scenario_failures\",\"failures\":[{}]}}", items.join(","));
    Ok(ExitCode::from(2))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Catalogue { print: _ } => {
            print!("{}", catalogue_report(&catalogue::<f64>()));
            Ok(ExitCode::SUCCESS)
        }
        Command::Mesh { generate, out, resolution } => {
            if !generate {
                return Err(Error::Config("mesh: only --generate is supported".into()));
            }
            let mut p = match ExperimentConfig::default().mesh {
                MeshSource::Synthetic(p) => p,
                MeshSource::File { .. } => SyntheticParams::default(),
            };
            if let Some(r) = resolution {
                p.resolution = r;
            }
            let mesh: Mesh<f64> = generate_synthetic_biventricle(&p)?;
            save_mesh(&mesh, &out)?;
            println!("{} nodes, {} tets -> {}", mesh.node_count(), mesh.tet_count(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Config { print: _ } => {
            print!("{}", ExperimentConfig::default().to_toml_string());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{{\"error\":{},\"message\":{}}}", json_str(e.kind()), json_str(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
