//! Experiment configuration, presets and instance seeding.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use esdp_core::formulation::FormulationOptions;
use esdp_core::network::AnchorPlacement;
use esdp_core::rng::derive_seed;
use esdp_core::solver::SolveSettings;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Esdp,
    Pesdp,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Esdp => "esdp",
            Method::Pesdp => "pesdp",
        })
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "esdp" => Ok(Method::Esdp),
            "pesdp" => Ok(Method::Pesdp),
            other => Err(CliError::Usage(format!(
                "unknown method `{other}` (expected esdp or pesdp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub results: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    /// Sensor count, used when `size_grid` is absent.
    pub n: usize,
    pub m: usize,
    pub r: f64,
    pub max_neighbors: usize,
    pub sigma_grid: Vec<f64>,
    #[serde(default)]
    pub size_grid: Option<Vec<usize>>,
    /// Networks per cell.
    #[serde(rename = "L")]
    pub networks_per_cell: usize,
    /// Uniform perturbation for PESDP.
    pub p: f64,
    pub base_seed: u64,
    #[serde(default)]
    pub anchor_placement: AnchorPlacement,
    #[serde(default)]
    pub formulation: FormulationOptions,
    #[serde(default)]
    pub solver: SolveSettings,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    /// Reduced scale that runs in minutes on one core.
    pub fn desk() -> Self {
        ExperimentConfig {
            methods: vec![Method::Esdp, Method::Pesdp],
            n: 40,
            m: 5,
            r: 0.3,
            max_neighbors: 5,
            sigma_grid: vec![0.0, 0.05, 0.1, 0.2],
            size_grid: None,
            networks_per_cell: 10,
            p: 0.1,
            base_seed: 2024,
            anchor_placement: AnchorPlacement::Uniform,
            formulation: FormulationOptions::default(),
            solver: SolveSettings::default(),
            output: OutputPaths::default(),
        }
    }

    /// Published problem size: 300 sensors, 5 anchors, range 0.2, 50 networks.
    pub fn full_scale() -> Self {
        ExperimentConfig {
            n: 300,
            r: 0.2,
            networks_per_cell: 50,
            ..Self::desk()
        }
    }

    /// Replaces the problem size with the full-scale values, keeping methods,
    /// grids of noise, seeds and solver settings.
    pub fn with_full_scale(mut self) -> Self {
        let full = Self::full_scale();
        self.n = full.n;
        self.m = full.m;
        self.r = full.r;
        self.max_neighbors = full.max_neighbors;
        self.networks_per_cell = full.networks_per_cell;
        self.p = full.p;
        self.size_grid = None;
        self
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: {
                let full = e.to_string();
                let suffix = format!(" at line {} column {}", e.line(), e.column());
                full.strip_suffix(&suffix).unwrap_or(&full).to_string()
            },
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::InvalidConfig(msg));
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if self.networks_per_cell == 0 {
            return bad("L must be at least 1".into());
        }
        if self.sigma_grid.is_empty() {
            return bad("sigma_grid must not be empty".into());
        }
        if let Some(s) = self
            .sigma_grid
            .iter()
            .find(|s| !(**s >= 0.0 && s.is_finite()))
        {
            return bad(format!("sigma_grid entries must be nonnegative, got {s}"));
        }
        match &self.size_grid {
            Some(g) if g.is_empty() => return bad("size_grid must not be empty when given".into()),
            Some(g) if g.contains(&0) => return bad("size_grid entries must be positive".into()),
            _ => {}
        }
        if self.n == 0 || self.m == 0 {
            return bad("n and m must be positive".into());
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad(format!("r must be positive, got {}", self.r));
        }
        if self.max_neighbors == 0 {
            return bad("max_neighbors must be at least 1".into());
        }
        if !(self.p >= 0.0 && self.p.is_finite()) {
            return bad(format!("p must be nonnegative, got {}", self.p));
        }
        self.solver
            .validate()
            .map_err(|e| CliError::InvalidConfig(e.to_string()))
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.size_grid.clone().unwrap_or_else(|| vec![self.n])
    }

    /// Short SHA-256 digest of the canonical JSON form, without output paths.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputPaths::default();
        let digest = Sha256::digest(serde_json::to_vec(&canonical).expect("config serializes"));
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Network seed of repetition `rep` at size index `size_idx`. Shared by
    /// all methods and noise levels so that comparisons are paired.
    pub fn network_seed(&self, size_idx: usize, rep: usize) -> u64 {
        derive_seed(
            self.base_seed,
            &[NETWORK_STREAM, size_idx as u64, rep as u64],
        )
    }

    /// Noise seed; combined with `σ·z` noise this makes every noise level a
    /// rescaling of the same standard draws.
    pub fn noise_seed(&self, size_idx: usize, rep: usize) -> u64 {
        derive_seed(self.base_seed, &[NOISE_STREAM, size_idx as u64, rep as u64])
    }
}

const NETWORK_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        ExperimentConfig::desk().validate().unwrap();
        let full = ExperimentConfig::full_scale();
        full.validate().unwrap();
        assert_eq!(
            (full.n, full.m, full.r, full.networks_per_cell, full.p),
            (300, 5, 0.2, 50, 0.1)
        );
        assert_eq!(ExperimentConfig::desk().with_full_scale(), full);
    }

    #[test]
    fn json_round_trip_and_hash_stability() {
        let cfg = ExperimentConfig::desk();
        let back = ExperimentConfig::from_json(&cfg.to_json(), Path::new("x.json")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        let mut other = cfg.clone();
        other.base_seed += 1;
        assert_ne!(other.hash(), cfg.hash());
        other = cfg.clone();
        other.output.results = Some("elsewhere.csv".into());
        assert_eq!(other.hash(), cfg.hash());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "{\n  \"methods\": [\"esdp\"],\n  \"n\": \"forty\"\n}";
        match ExperimentConfig::from_json(text, Path::new("c.json")) {
            Err(CliError::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "{\"methods\": [\"eml\"]}";
        assert!(matches!(
            ExperimentConfig::from_json(text, Path::new("c.json")),
            Err(CliError::Config { line: 1, .. })
        ));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut cfg = ExperimentConfig::desk();
        cfg.networks_per_cell = 0;
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig::desk();
        cfg.sigma_grid = vec![];
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig::desk();
        cfg.sigma_grid = vec![-0.1];
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig::desk();
        cfg.size_grid = Some(vec![]);
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig::desk();
        cfg.p = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("pesdp".parse::<Method>().unwrap(), Method::Pesdp);
        assert!(matches!("eml".parse::<Method>(), Err(CliError::Usage(_))));
    }

    #[test]
    fn seeds_are_shared_across_noise_levels_and_distinct_across_reps() {
        let cfg = ExperimentConfig::desk();
        assert_eq!(cfg.network_seed(0, 3), cfg.network_seed(0, 3));
        assert_ne!(cfg.network_seed(0, 3), cfg.network_seed(0, 4));
        assert_ne!(cfg.network_seed(0, 3), cfg.network_seed(1, 3));
        assert_ne!(cfg.network_seed(0, 3), cfg.noise_seed(0, 3));
    }
}
