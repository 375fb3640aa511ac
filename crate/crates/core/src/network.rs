//! Sensor network instances: generation, measurement noise and JSON persistence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::NetworkError;
use crate::rng::{derive_seed, rng_from_seed};

pub type Point = [f64; 2];

pub const FILE_VERSION: u32 = 1;

/// Tolerance used when checking stored distances against the geometry.
const DISTANCE_TOL: f64 = 1e-12;

fn dist(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Axis-aligned square `[lower, upper]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: f64,
    pub upper: f64,
}

impl Default for Region {
    fn default() -> Self {
        Region {
            lower: -0.5,
            upper: 0.5,
        }
    }
}

impl Region {
    pub fn side(&self) -> f64 {
        self.upper - self.lower
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        let x = self.lower + self.side() * rng.random::<f64>();
        let y = self.lower + self.side() * rng.random::<f64>();
        [x, y]
    }

    fn validate(&self) -> Result<(), NetworkError> {
        if !(self.lower.is_finite() && self.upper.is_finite()) || self.side() <= 0.0 {
            return Err(NetworkError::InvalidParameter {
                name: "region",
                reason: format!("degenerate region [{}, {}]", self.lower, self.upper),
            });
        }
        Ok(())
    }
}

/// A measured pair. Sensor edges always satisfy `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Edge {
    Sensor { i: usize, j: usize },
    Anchor { sensor: usize, anchor: usize },
}

impl Edge {
    /// Canonical string key, `s:i-j` or `a:j-k`.
    pub fn key(&self) -> String {
        self.to_string()
    }

    pub fn parse_key(key: &str) -> Option<Edge> {
        let (kind, rest) = key.split_once(':')?;
        let (a, b) = rest.split_once('-')?;
        let a: usize = a.parse().ok()?;
        let b: usize = b.parse().ok()?;
        match kind {
            "s" => Some(Edge::Sensor { i: a, j: b }),
            "a" => Some(Edge::Anchor {
                sensor: a,
                anchor: b,
            }),
            _ => None,
        }
    }

    fn seed_parts(&self) -> [u64; 3] {
        match *self {
            Edge::Sensor { i, j } => [0, i as u64, j as u64],
            Edge::Anchor { sensor, anchor } => [1, sensor as u64, anchor as u64],
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Edge::Sensor { i, j } => write!(f, "s:{i}-{j}"),
            Edge::Anchor { sensor, anchor } => write!(f, "a:{sensor}-{anchor}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorPlacement {
    /// Anchors drawn uniformly in the region after the sensors.
    #[default]
    Uniform,
    /// Four inset corners followed by the centre; extra anchors are uniform.
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub sensors: usize,
    pub anchors: usize,
    pub radio_range: f64,
    pub max_neighbors: usize,
    pub seed: u64,
    #[serde(default)]
    pub region: Region,
    #[serde(default)]
    pub anchor_placement: AnchorPlacement,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            sensors: 40,
            anchors: 5,
            radio_range: 0.3,
            max_neighbors: 5,
            seed: 0,
            region: Region::default(),
            anchor_placement: AnchorPlacement::Uniform,
        }
    }
}

impl NetworkParams {
    fn validate(&self) -> Result<(), NetworkError> {
        let bad = |name, reason: &str| {
            Err(NetworkError::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.sensors == 0 {
            return bad("sensors", "at least one sensor is required");
        }
        if self.anchors == 0 {
            return bad("anchors", "at least one anchor is required");
        }
        if !(self.radio_range > 0.0 && self.radio_range.is_finite()) {
            return bad("radio_range", "must be positive and finite");
        }
        if self.max_neighbors == 0 {
            return bad("max_neighbors", "must be at least 1");
        }
        self.region.validate()
    }
}

/// Sensor and anchor geometry with the measured edge sets.
///
/// Sensor edges are sorted lexicographically with `i < j`; anchor edges are
/// sorted by `(sensor, anchor)`. The combined edge enumeration used
/// everywhere else is all sensor edges followed by all anchor edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    sensors: Vec<Point>,
    anchors: Vec<Point>,
    radio_range: f64,
    max_neighbors: usize,
    sensor_edges: Vec<(usize, usize)>,
    anchor_edges: Vec<(usize, usize)>,
    sensor_distances: Vec<f64>,
    anchor_distances: Vec<f64>,
    seed: u64,
    region: Region,
}

/// Draws a random network. Deterministic in `params`.
pub fn generate_network(params: &NetworkParams) -> Result<Network, NetworkError> {
    params.validate()?;
    let mut rng = rng_from_seed(params.seed);
    let region = params.region;
    let sensors: Vec<Point> = (0..params.sensors)
        .map(|_| region.sample(&mut rng))
        .collect();
    let anchors = match params.anchor_placement {
        AnchorPlacement::Uniform => (0..params.anchors)
            .map(|_| region.sample(&mut rng))
            .collect(),
        AnchorPlacement::Symmetric => {
            let inset = 0.1 * region.side();
            let (lo, hi) = (region.lower + inset, region.upper - inset);
            let mid = 0.5 * (region.lower + region.upper);
            let pattern = [[lo, lo], [hi, lo], [hi, hi], [lo, hi], [mid, mid]];
            (0..params.anchors)
                .map(|k| {
                    pattern
                        .get(k)
                        .copied()
                        .unwrap_or_else(|| region.sample(&mut rng))
                })
                .collect()
        }
    };
    let mut net = Network::from_positions(
        sensors,
        anchors,
        params.radio_range,
        params.max_neighbors,
        region,
    )?;
    net.seed = params.seed;
    Ok(net)
}

impl Network {
    /// Builds the edge sets for fixed positions.
    ///
    /// Every in-range pair is a candidate. A sensor keeps its `max_neighbors`
    /// nearest candidate sensors (ties to the lower index) and a sensor edge
    /// survives only if it is kept by both endpoints. Anchor edges are never
    /// pruned.
    pub fn from_positions(
        sensors: Vec<Point>,
        anchors: Vec<Point>,
        radio_range: f64,
        max_neighbors: usize,
        region: Region,
    ) -> Result<Network, NetworkError> {
        NetworkParams {
            sensors: sensors.len(),
            anchors: anchors.len(),
            radio_range,
            max_neighbors,
            seed: 0,
            region,
            anchor_placement: AnchorPlacement::Uniform,
        }
        .validate()?;
        if sensors
            .iter()
            .chain(&anchors)
            .flatten()
            .any(|v| !v.is_finite())
        {
            return Err(NetworkError::InvalidParameter {
                name: "positions",
                reason: "non-finite coordinate".into(),
            });
        }

        let n = sensors.len();
        let mut kept: Vec<BTreeSet<usize>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut cands: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (dist(&sensors[i], &sensors[j]), j))
                .filter(|&(d, _)| d < radio_range)
                .collect();
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            kept.push(
                cands
                    .into_iter()
                    .take(max_neighbors)
                    .map(|(_, j)| j)
                    .collect(),
            );
        }
        let mut sensor_edges = Vec::new();
        let mut sensor_distances = Vec::new();
        for i in 0..n {
            for &j in kept[i].range(i + 1..) {
                if kept[j].contains(&i) {
                    sensor_edges.push((i, j));
                    sensor_distances.push(dist(&sensors[i], &sensors[j]));
                }
            }
        }

        let mut anchor_edges = Vec::new();
        let mut anchor_distances = Vec::new();
        for (j, x) in sensors.iter().enumerate() {
            for (k, a) in anchors.iter().enumerate() {
                let d = dist(x, a);
                if d < radio_range {
                    anchor_edges.push((j, k));
                    anchor_distances.push(d);
                }
            }
        }

        Ok(Network {
            sensors,
            anchors,
            radio_range,
            max_neighbors,
            sensor_edges,
            anchor_edges,
            sensor_distances,
            anchor_distances,
            seed: 0,
            region,
        })
    }

    pub fn sensors(&self) -> &[Point] {
        &self.sensors
    }

    pub fn anchors(&self) -> &[Point] {
        &self.anchors
    }

    pub fn num_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn num_anchors(&self) -> usize {
        self.anchors.len()
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn max_neighbors(&self) -> usize {
        self.max_neighbors
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn sensor_edges(&self) -> &[(usize, usize)] {
        &self.sensor_edges
    }

    pub fn anchor_edges(&self) -> &[(usize, usize)] {
        &self.anchor_edges
    }

    pub fn num_edges(&self) -> usize {
        self.sensor_edges.len() + self.anchor_edges.len()
    }

    /// Edge at position `idx` of the combined enumeration.
    pub fn edge(&self, idx: usize) -> Edge {
        let ns = self.sensor_edges.len();
        if idx < ns {
            let (i, j) = self.sensor_edges[idx];
            Edge::Sensor { i, j }
        } else {
            let (sensor, anchor) = self.anchor_edges[idx - ns];
            Edge::Anchor { sensor, anchor }
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.num_edges()).map(move |e| self.edge(e))
    }

    pub fn true_distance(&self, idx: usize) -> f64 {
        let ns = self.sensor_edges.len();
        if idx < ns {
            self.sensor_distances[idx]
        } else {
            self.anchor_distances[idx - ns]
        }
    }

    pub fn true_distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.sensor_distances
            .iter()
            .chain(&self.anchor_distances)
            .copied()
    }

    /// Number of sensor edges incident to each sensor.
    pub fn sensor_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.sensors.len()];
        for &(i, j) in &self.sensor_edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Checks every structural and geometric invariant.
    pub fn validate(&self) -> Result<(), NetworkError> {
        let field = |field: &str, reason: String| NetworkError::InvalidField {
            field: field.to_string(),
            reason,
        };
        self.region.validate()?;
        if self.sensors.is_empty() {
            return Err(field("sensors", "at least one sensor is required".into()));
        }
        if self.anchors.is_empty() {
            return Err(field("anchors", "at least one anchor is required".into()));
        }
        if !(self.radio_range > 0.0 && self.radio_range.is_finite()) {
            return Err(field(
                "radio_range",
                format!("must be positive, got {}", self.radio_range),
            ));
        }
        if self.max_neighbors == 0 {
            return Err(field("max_neighbors", "must be at least 1".into()));
        }
        for (name, pts) in [("sensors", &self.sensors), ("anchors", &self.anchors)] {
            if let Some(p) = pts
                .iter()
                .position(|p| !(p[0].is_finite() && p[1].is_finite()))
            {
                return Err(field(
                    &format!("{name}[{p}]"),
                    "non-finite coordinate".into(),
                ));
            }
        }
        let n = self.sensors.len();
        let m = self.anchors.len();
        let check_sorted_unique = |name: &str, edges: &[(usize, usize)]| {
            if edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(field(
                    name,
                    "edges must be sorted and free of duplicates".into(),
                ));
            }
            Ok(())
        };
        check_sorted_unique("sensor_edges", &self.sensor_edges)?;
        check_sorted_unique("anchor_edges", &self.anchor_edges)?;

        for (e, &(i, j)) in self.sensor_edges.iter().enumerate() {
            let key = Edge::Sensor { i, j }.key();
            if i >= j || j >= n {
                return Err(field(
                    &format!("sensor_edges[{e}]"),
                    format!("invalid pair {key}"),
                ));
            }
            let d = dist(&self.sensors[i], &self.sensors[j]);
            if !(d < self.radio_range) {
                return Err(field(
                    &format!("sensor_edges[{e}]"),
                    format!(
                        "{key} has length {d} which is not below radio range {}",
                        self.radio_range
                    ),
                ));
            }
            if (self.sensor_distances[e] - d).abs() > DISTANCE_TOL {
                return Err(field(
                    &format!("true_distances[{key}]"),
                    format!("stored {} but geometry gives {d}", self.sensor_distances[e]),
                ));
            }
        }
        for (e, &(j, k)) in self.anchor_edges.iter().enumerate() {
            let key = Edge::Anchor {
                sensor: j,
                anchor: k,
            }
            .key();
            if j >= n || k >= m {
                return Err(field(
                    &format!("anchor_edges[{e}]"),
                    format!("invalid pair {key}"),
                ));
            }
            let d = dist(&self.sensors[j], &self.anchors[k]);
            if !(d < self.radio_range) {
                return Err(field(
                    &format!("anchor_edges[{e}]"),
                    format!(
                        "{key} has length {d} which is not below radio range {}",
                        self.radio_range
                    ),
                ));
            }
            if (self.anchor_distances[e] - d).abs() > DISTANCE_TOL {
                return Err(field(
                    &format!("true_distances[{key}]"),
                    format!("stored {} but geometry gives {d}", self.anchor_distances[e]),
                ));
            }
        }
        if let Some(s) = self
            .sensor_degrees()
            .iter()
            .position(|&d| d > self.max_neighbors)
        {
            return Err(field(
                "sensor_edges",
                format!(
                    "sensor {s} exceeds the neighbor cap of {}",
                    self.max_neighbors
                ),
            ));
        }
        Ok(())
    }
}

/// A network together with one realization of additive Gaussian noise.
///
/// `noise_samples` and `measured_distances` follow the combined edge
/// enumeration of the base network.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredNetwork {
    base: Network,
    noise_std: f64,
    noise_seed: u64,
    noise_samples: Vec<f64>,
    measured_distances: Vec<f64>,
}

/// Corrupts every edge length with an independent `N(0, σ²)` draw.
///
/// Each edge draws a standard normal from its own stream seeded by
/// `(noise_seed, edge)`, which is then scaled by `σ`; the same seed therefore
/// yields proportional noise for different `σ`.
pub fn apply_noise(
    net: &Network,
    sigma: f64,
    noise_seed: u64,
) -> Result<MeasuredNetwork, NetworkError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(NetworkError::InvalidParameter {
            name: "sigma",
            reason: format!("noise standard deviation must be nonnegative, got {sigma}"),
        });
    }
    let mut noise_samples = Vec::with_capacity(net.num_edges());
    let mut measured_distances = Vec::with_capacity(net.num_edges());
    for (e, edge) in net.edges().enumerate() {
        let noise = if sigma == 0.0 {
            0.0
        } else {
            let mut rng = rng_from_seed(derive_seed(noise_seed, &edge.seed_parts()));
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        };
        noise_samples.push(noise);
        measured_distances.push((net.true_distance(e) + noise).abs());
    }
    Ok(MeasuredNetwork {
        base: net.clone(),
        noise_std: sigma,
        noise_seed,
        noise_samples,
        measured_distances,
    })
}

impl MeasuredNetwork {
    /// Noise-free view of a network.
    pub fn exact(net: &Network) -> MeasuredNetwork {
        apply_noise(net, 0.0, 0).expect("zero noise is always valid")
    }

    pub fn base(&self) -> &Network {
        &self.base
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn noise_seed(&self) -> u64 {
        self.noise_seed
    }

    pub fn noise_samples(&self) -> &[f64] {
        &self.noise_samples
    }

    pub fn measured_distances(&self) -> &[f64] {
        &self.measured_distances
    }

    /// Right-hand side `(d + noise)²` of the edge constraint.
    pub fn squared_measurement(&self, idx: usize) -> f64 {
        let v = self.base.true_distance(idx) + self.noise_samples[idx];
        v * v
    }

    /// The amount `2·d·noise + noise²` by which the squared measurement
    /// exceeds the true squared distance.
    pub fn squared_noise_term(&self, idx: usize) -> f64 {
        let d = self.base.true_distance(idx);
        let n = self.noise_samples[idx];
        2.0 * n * d + n * n
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        self.base.validate()?;
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(NetworkError::InvalidField {
                field: "noise_std".into(),
                reason: format!("must be nonnegative, got {}", self.noise_std),
            });
        }
        for e in 0..self.base.num_edges() {
            let expect = (self.base.true_distance(e) + self.noise_samples[e]).abs();
            if !self.noise_samples[e].is_finite()
                || (expect - self.measured_distances[e]).abs() > DISTANCE_TOL
            {
                return Err(NetworkError::InvalidField {
                    field: format!("measured_distances[{}]", self.base.edge(e)),
                    reason: format!(
                        "expected |d + noise| = {expect}, found {}",
                        self.measured_distances[e]
                    ),
                });
            }
        }
        if self.noise_std == 0.0 && self.noise_samples.iter().any(|&n| n != 0.0) {
            return Err(NetworkError::InvalidField {
                field: "noise_samples".into(),
                reason: "nonzero noise with zero standard deviation".into(),
            });
        }
        Ok(())
    }
}

/// Either kind of instance stored in a network file.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkInstance {
    Plain(Network),
    Measured(MeasuredNetwork),
}

impl NetworkInstance {
    pub fn network(&self) -> &Network {
        match self {
            NetworkInstance::Plain(n) => n,
            NetworkInstance::Measured(m) => m.base(),
        }
    }
}

impl From<Network> for NetworkInstance {
    fn from(n: Network) -> Self {
        NetworkInstance::Plain(n)
    }
}

impl From<MeasuredNetwork> for NetworkInstance {
    fn from(m: MeasuredNetwork) -> Self {
        NetworkInstance::Measured(m)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    version: u32,
    region: Region,
    radio_range: f64,
    max_neighbors: usize,
    seed: u64,
    sensors: Vec<Point>,
    anchors: Vec<Point>,
    sensor_edges: Vec<[usize; 2]>,
    anchor_edges: Vec<[usize; 2]>,
    true_distances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_samples: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    measured_distances: Option<BTreeMap<String, f64>>,
}

fn keyed(net: &Network, values: impl Iterator<Item = f64>) -> BTreeMap<String, f64> {
    net.edges().map(|e| e.key()).zip(values).collect()
}

fn unkeyed(
    net: &Network,
    map: &BTreeMap<String, f64>,
    name: &str,
) -> Result<Vec<f64>, NetworkError> {
    let invalid = |reason: String| NetworkError::InvalidField {
        field: name.to_string(),
        reason,
    };
    if let Some(k) = map.keys().find(|k| Edge::parse_key(k).is_none()) {
        return Err(invalid(format!("malformed edge key `{k}`")));
    }
    if map.len() != net.num_edges() {
        return Err(invalid(format!(
            "has {} entries for {} edges",
            map.len(),
            net.num_edges()
        )));
    }
    net.edges()
        .map(|e| {
            map.get(&e.key())
                .copied()
                .ok_or_else(|| invalid(format!("missing entry for edge {e}")))
        })
        .collect()
}

impl NetworkInstance {
    fn to_file(&self) -> NetworkFile {
        let net = self.network();
        let mut file = NetworkFile {
            version: FILE_VERSION,
            region: net.region,
            radio_range: net.radio_range,
            max_neighbors: net.max_neighbors,
            seed: net.seed,
            sensors: net.sensors.clone(),
            anchors: net.anchors.clone(),
            sensor_edges: net.sensor_edges.iter().map(|&(i, j)| [i, j]).collect(),
            anchor_edges: net.anchor_edges.iter().map(|&(j, k)| [j, k]).collect(),
            true_distances: keyed(net, net.true_distances()),
            noise_std: None,
            noise_seed: None,
            noise_samples: None,
            measured_distances: None,
        };
        if let NetworkInstance::Measured(m) = self {
            file.noise_std = Some(m.noise_std);
            file.noise_seed = Some(m.noise_seed);
            file.noise_samples = Some(keyed(net, m.noise_samples.iter().copied()));
            file.measured_distances = Some(keyed(net, m.measured_distances.iter().copied()));
        }
        file
    }

    fn from_file(file: NetworkFile) -> Result<NetworkInstance, NetworkError> {
        if file.version != FILE_VERSION {
            return Err(NetworkError::VersionMismatch {
                found: file.version,
                expected: FILE_VERSION,
            });
        }
        let mut net = Network {
            sensors: file.sensors,
            anchors: file.anchors,
            radio_range: file.radio_range,
            max_neighbors: file.max_neighbors,
            sensor_edges: file.sensor_edges.iter().map(|e| (e[0], e[1])).collect(),
            anchor_edges: file.anchor_edges.iter().map(|e| (e[0], e[1])).collect(),
            sensor_distances: Vec::new(),
            anchor_distances: Vec::new(),
            seed: file.seed,
            region: file.region,
        };
        net.sensor_edges.sort_unstable();
        net.anchor_edges.sort_unstable();
        if net.sensor_edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(NetworkError::InvalidField {
                field: "sensor_edges".into(),
                reason: "duplicate edge".into(),
            });
        }
        if net.anchor_edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(NetworkError::InvalidField {
                field: "anchor_edges".into(),
                reason: "duplicate edge".into(),
            });
        }
        let distances = unkeyed(&net, &file.true_distances, "true_distances")?;
        let ns = net.sensor_edges.len();
        net.anchor_distances = distances[ns..].to_vec();
        net.sensor_distances = distances[..ns].to_vec();
        net.validate()?;

        let noise_fields = (
            file.noise_std,
            file.noise_seed,
            file.noise_samples,
            file.measured_distances,
        );
        match noise_fields {
            (None, None, None, None) => Ok(NetworkInstance::Plain(net)),
            (Some(noise_std), Some(noise_seed), Some(samples), Some(measured)) => {
                if !(noise_std >= 0.0 && noise_std.is_finite()) {
                    return Err(NetworkError::InvalidField {
                        field: "noise_std".into(),
                        reason: format!("must be nonnegative, got {noise_std}"),
                    });
                }
                let noise_samples = unkeyed(&net, &samples, "noise_samples")?;
                let measured_distances = unkeyed(&net, &measured, "measured_distances")?;
                let m = MeasuredNetwork {
                    base: net,
                    noise_std,
                    noise_seed,
                    noise_samples,
                    measured_distances,
                };
                m.validate()?;
                Ok(NetworkInstance::Measured(m))
            }
            (std, seed, samples, measured) => {
                let missing = [
                    ("noise_std", std.is_none()),
                    ("noise_seed", seed.is_none()),
                    ("noise_samples", samples.is_none()),
                    ("measured_distances", measured.is_none()),
                ]
                .iter()
                .find(|(_, m)| *m)
                .map(|(n, _)| *n)
                .unwrap_or("noise fields");
                Err(NetworkError::InvalidField {
                    field: missing.to_string(),
                    reason: "measured files must carry all four noise fields".into(),
                })
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("network file serializes")
    }

    pub fn from_json(text: &str) -> Result<NetworkInstance, NetworkError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: NetworkFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            NetworkError::InvalidField {
                field: path,
                reason: e.into_inner().to_string(),
            }
        })?;
        NetworkInstance::from_file(file)
    }
}

pub fn save_network(
    instance: &NetworkInstance,
    path: impl AsRef<Path>,
) -> Result<(), NetworkError> {
    std::fs::write(path, instance.to_json())?;
    Ok(())
}

pub fn load_network(path: impl AsRef<Path>) -> Result<NetworkInstance, NetworkError> {
    let text = std::fs::read_to_string(path)?;
    NetworkInstance::from_json(&text)
}
