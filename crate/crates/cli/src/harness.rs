//! Sweep execution and the per-solve results table.

use std::path::Path;
use std::time::Instant;

use esdp_core::analysis::{position_error, positions_from_vector};
use esdp_core::formulation::{build_esdp, build_pesdp, ConicProgram, FormulationMap, Perturbation};
use esdp_core::network::{apply_noise, generate_network, MeasuredNetwork, NetworkParams};
use esdp_core::solver::{solve, SolveResult};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Method};
use crate::error::CliError;

/// One row of the results CSV. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub r: f64,
    pub sigma: f64,
    pub p: f64,
    pub net_seed: u64,
    pub noise_seed: u64,
    pub status: String,
    pub objective: f64,
    pub dual_objective: f64,
    /// `objective − dual_objective`
    pub gap: f64,
    pub iterations: usize,
    pub formulation_time_s: f64,
    pub solve_time_s: f64,
    pub delta: f64,
}

impl ResultRow {
    /// Copy with the wall-time columns cleared, for reproducibility checks.
    pub fn without_timings(&self) -> ResultRow {
        ResultRow {
            formulation_time_s: 0.0,
            solve_time_s: 0.0,
            ..self.clone()
        }
    }
}

/// Coordinates of one solve inside a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub method: Method,
    pub size_idx: usize,
    pub n: usize,
    pub sigma_idx: usize,
    pub sigma: f64,
    pub rep: usize,
}

/// Everything produced by one solve, for callers that need more than the row.
pub struct RunOutput {
    pub row: ResultRow,
    pub measured: MeasuredNetwork,
    pub program: ConicProgram,
    pub map: FormulationMap,
    pub result: Option<SolveResult>,
}

/// Runs in deterministic order: method, then cell (size, then noise), then
/// repetition.
pub fn run_specs(cfg: &ExperimentConfig) -> Vec<RunSpec> {
    let mut out = Vec::new();
    for &method in &cfg.methods {
        for (size_idx, n) in cfg.sizes().into_iter().enumerate() {
            for (sigma_idx, &sigma) in cfg.sigma_grid.iter().enumerate() {
                for rep in 0..cfg.networks_per_cell {
                    out.push(RunSpec {
                        method,
                        size_idx,
                        n,
                        sigma_idx,
                        sigma,
                        rep,
                    });
                }
            }
        }
    }
    out
}

pub fn build(
    method: Method,
    mn: &MeasuredNetwork,
    p: f64,
    cfg: &ExperimentConfig,
) -> Result<(ConicProgram, FormulationMap), CliError> {
    Ok(match method {
        Method::Esdp => build_esdp(mn, &cfg.formulation)?,
        Method::Pesdp => build_pesdp(mn, &Perturbation::Uniform(p), &cfg.formulation)?,
    })
}

pub fn run_one(cfg: &ExperimentConfig, spec: &RunSpec) -> Result<RunOutput, CliError> {
    let net_seed = cfg.network_seed(spec.size_idx, spec.rep);
    let noise_seed = cfg.noise_seed(spec.size_idx, spec.rep);
    let net = generate_network(&NetworkParams {
        sensors: spec.n,
        anchors: cfg.m,
        radio_range: cfg.r,
        max_neighbors: cfg.max_neighbors,
        seed: net_seed,
        region: Default::default(),
        anchor_placement: cfg.anchor_placement,
    })?;
    let measured = apply_noise(&net, spec.sigma, noise_seed)?;
    let p = match spec.method {
        Method::Esdp => 0.0,
        Method::Pesdp => cfg.p,
    };

    let start = Instant::now();
    let (program, map) = build(spec.method, &measured, p, cfg)?;
    let formulation_time_s = start.elapsed().as_secs_f64();

    let mut row = ResultRow {
        run_id: format!(
            "{}-{}-n{}-s{}-l{}",
            cfg.hash(),
            spec.method,
            spec.n,
            spec.sigma_idx,
            spec.rep
        ),
        method: spec.method,
        n: spec.n,
        m: cfg.m,
        r: cfg.r,
        sigma: spec.sigma,
        p,
        net_seed,
        noise_seed,
        status: String::new(),
        objective: f64::NAN,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        iterations: 0,
        formulation_time_s,
        solve_time_s: f64::NAN,
        delta: f64::NAN,
    };
    let result = match solve(&program, &cfg.solver) {
        Ok(res) => {
            row.status = res.status.to_string();
            row.objective = res.primal_objective;
            row.dual_objective = res.dual_objective;
            row.gap = res.primal_objective - res.dual_objective;
            row.iterations = res.iterations;
            row.solve_time_s = res.wall_time_seconds;
            // final iterate, whatever the status
            let est = positions_from_vector(&res.y, &map)?;
            row.delta = position_error(&est, net.sensors())?;
            Some(res)
        }
        Err(e) => {
            log::warn!("{}: solver error: {e}", row.run_id);
            row.status = format!("error: {e}");
            None
        }
    };
    Ok(RunOutput {
        row,
        measured,
        program,
        map,
        result,
    })
}

/// Runs the whole grid sequentially. `progress` is called after each solve.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    mut progress: impl FnMut(&ResultRow),
) -> Result<Vec<ResultRow>, CliError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for spec in run_specs(cfg) {
        let out = run_one(cfg, &spec)?;
        progress(&out.row);
        rows.push(out.row);
    }
    Ok(rows)
}

pub fn write_results(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<(), CliError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    for row in rows {
        w.serialize(row).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRow>, CliError> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(CliError::csv(path))
}

pub const RESULT_COLUMNS: [&str; 17] = [
    "run_id",
    "method",
    "n",
    "m",
    "r",
    "sigma",
    "p",
    "net_seed",
    "noise_seed",
    "status",
    "objective",
    "dual_objective",
    "gap",
    "iterations",
    "formulation_time_s",
    "solve_time_s",
    "delta",
];
