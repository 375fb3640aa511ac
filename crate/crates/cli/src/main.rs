use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use esdp_cli::{harness, report, CliError, ExperimentConfig, Method};
use esdp_core::analysis::{localization_report, LocalizationReport};
use esdp_core::formulation::FormulationOptions;
use esdp_core::network::{
    apply_noise, generate_network, load_network, save_network, AnchorPlacement, MeasuredNetwork,
    NetworkInstance, NetworkParams,
};
use esdp_core::sdpa::write_sdpa;
use esdp_core::solver::{solve, SolveSettings};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "esdp",
    version,
    about = "Edge-based SDP sensor network localization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random network and write it as JSON.
    Generate {
        #[arg(long)]
        sensors: usize,
        #[arg(long)]
        anchors: usize,
        #[arg(long)]
        radio: f64,
        #[arg(long, default_value_t = 5)]
        max_neighbors: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Four inset corners plus the centre instead of uniform anchors.
        #[arg(long)]
        symmetric_anchors: bool,
        /// Also store a noise realization with this standard deviation.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one network with one relaxation and write a JSON report.
    Solve {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Uniform block perturbation (pesdp only).
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        /// Re-noise the network; without it, stored measurements are used
        /// (or exact distances for plain network files).
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        single_sensor_blocks: bool,
        /// Relative threshold for the reported numerical ranks.
        #[arg(long, default_value_t = 1e-6)]
        rank_tol: f64,
        /// Also export the conic program in SDPA sparse format.
        #[arg(long)]
        sdpa: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every (method, cell, network) combination of a configuration.
    Sweep {
        /// JSON configuration; the desk preset when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the full-scale problem size (300 sensors, 50 networks per cell).
        #[arg(long)]
        full_scale: bool,
    },
    /// Aggregate a results table into per-cell means.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Print a preset configuration as JSON.
    Config {
        #[arg(long)]
        full_scale: bool,
    },
}

#[derive(Serialize)]
struct SolveOutput {
    method: Method,
    perturbation: f64,
    noise_std: f64,
    noise_seed: u64,
    formulation_time_s: f64,
    settings: SolveSettings,
    #[serde(flatten)]
    report: LocalizationReport,
}

fn load(path: &PathBuf) -> Result<NetworkInstance, CliError> {
    load_network(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(CliError::io(path))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate {
            sensors,
            anchors,
            radio,
            max_neighbors,
            seed,
            symmetric_anchors,
            sigma,
            noise_seed,
            out,
        } => {
            let net = generate_network(&NetworkParams {
                sensors,
                anchors,
                radio_range: radio,
                max_neighbors,
                seed,
                region: Default::default(),
                anchor_placement: if symmetric_anchors {
                    AnchorPlacement::Symmetric
                } else {
                    AnchorPlacement::Uniform
                },
            })?;
            log::info!(
                "{} sensor edges, {} anchor edges",
                net.sensor_edges().len(),
                net.anchor_edges().len()
            );
            let instance: NetworkInstance = match sigma {
                Some(s) => apply_noise(&net, s, noise_seed)?.into(),
                None => net.into(),
            };
            save_network(&instance, &out)
                .map_err(|e| CliError::Usage(format!("{}: {e}", out.display())))?;
        }
        Command::Solve {
            net,
            method,
            p,
            sigma,
            noise_seed,
            tol,
            max_iterations,
            single_sensor_blocks,
            rank_tol,
            sdpa,
            out,
        } => {
            let instance = load(&net)?;
            let measured = match (sigma, instance) {
                (Some(s), inst) => apply_noise(inst.network(), s, noise_seed)?,
                (None, NetworkInstance::Measured(m)) => m,
                (None, NetworkInstance::Plain(n)) => MeasuredNetwork::exact(&n),
            };
            let mut cfg = ExperimentConfig::desk();
            cfg.formulation = FormulationOptions {
                single_sensor_blocks,
            };
            cfg.solver = SolveSettings::default().with_tolerance(tol);
            if let Some(k) = max_iterations {
                cfg.solver.max_iterations = k;
            }
            cfg.solver.validate()?;
            let p = if method == Method::Esdp { 0.0 } else { p };
            let start = Instant::now();
            let (program, map) = harness::build(method, &measured, p, &cfg)?;
            let formulation_time_s = start.elapsed().as_secs_f64();
            if let Some(path) = sdpa {
                write_sdpa(&program, &path).map_err(CliError::io(&path))?;
            }
            let result = solve(&program, &cfg.solver)?;
            log::info!(
                "{}: objective {:.6e} after {} iterations",
                result.status,
                result.primal_objective,
                result.iterations
            );
            let output = SolveOutput {
                method,
                perturbation: p,
                noise_std: measured.noise_std(),
                noise_seed: measured.noise_seed(),
                formulation_time_s,
                settings: cfg.solver.clone(),
                report: localization_report(&measured, &map, &result, rank_tol)?,
            };
            write(
                &out,
                &serde_json::to_string_pretty(&output).expect("report serializes"),
            )?;
        }
        Command::Sweep {
            config,
            out,
            full_scale,
        } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::load(path)?,
                None => ExperimentConfig::desk(),
            };
            if full_scale {
                cfg = cfg.with_full_scale();
            }
            let out = out.or_else(|| cfg.output.results.clone()).ok_or_else(|| {
                CliError::Usage("sweep needs --out or output.results in the config".into())
            })?;
            let total = harness::run_specs(&cfg).len();
            let mut done = 0;
            let rows = harness::run_sweep(&cfg, |row| {
                done += 1;
                log::info!(
                    "[{done}/{total}] {} {} delta {:.4}",
                    row.run_id,
                    row.status,
                    row.delta
                );
            })?;
            harness::write_results(&rows, &out)?;
            let summary = report::summarize(&rows);
            if let Some(path) = &cfg.output.summary {
                report::write_summary(&summary, path)?;
            }
            if let Some(path) = &cfg.output.plot_data {
                report::write_plot_data(&summary, path)?;
            }
        }
        Command::Report {
            input,
            out,
            plot_data,
        } => {
            let rows = harness::read_results(&input)?;
            if rows.is_empty() {
                return Err(CliError::Usage(format!(
                    "{}: no result rows",
                    input.display()
                )));
            }
            let summary = report::summarize(&rows);
            report::write_summary(&summary, &out)?;
            if let Some(path) = plot_data {
                report::write_plot_data(&summary, &path)?;
            }
        }
        Command::Config { full_scale } => {
            let cfg = if full_scale {
                ExperimentConfig::full_scale()
            } else {
                ExperimentConfig::desk()
            };
            println!("{}", cfg.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                _ => 1,
            })
        }
    }
}
