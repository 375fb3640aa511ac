#![allow(dead_code)]

use esdp_core::network::{generate_network, Network, NetworkParams, Point, Region};

/// Small connected-ish network with 2..=10 sensors.
pub fn small_network(seed: u64) -> Network {
    let sensors = 2 + (seed % 9) as usize;
    let params = NetworkParams {
        sensors,
        anchors: 3 + (seed % 3) as usize,
        radio_range: 0.6 + 0.05 * (seed % 5) as f64,
        max_neighbors: 4,
        seed,
        ..Default::default()
    };
    generate_network(&params).unwrap()
}

pub const TRILATERATION_SENSOR: Point = [0.1, -0.2];
pub const TRILATERATION_ANCHORS: [Point; 3] = [[-0.4, -0.4], [0.4, -0.3], [0.0, 0.45]];

/// One sensor seeing three non-collinear anchors.
pub fn trilateration_network() -> Network {
    Network::from_positions(
        vec![TRILATERATION_SENSOR],
        TRILATERATION_ANCHORS.to_vec(),
        10.0,
        5,
        Region::default(),
    )
    .unwrap()
}

/// Intersection of three circles: subtracting the first circle equation
/// from the others leaves a 2×2 linear system.
pub fn trilaterate(anchors: &[Point; 3], d: &[f64; 3]) -> Point {
    let row = |k: usize| {
        let (a, a0) = (anchors[k], anchors[0]);
        (
            [2.0 * (a[0] - a0[0]), 2.0 * (a[1] - a0[1])],
            d[0] * d[0] - d[k] * d[k] + a[0] * a[0] + a[1] * a[1] - a0[0] * a0[0] - a0[1] * a0[1],
        )
    };
    let ([a11, a12], b1) = row(1);
    let ([a21, a22], b2) = row(2);
    let det = a11 * a22 - a12 * a21;
    [(b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det]
}

pub fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
