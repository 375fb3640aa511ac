use esdp_core::cone::{smat, Cone};
use esdp_core::formulation::*;
use esdp_core::network::*;
use esdp_core::rng::rng_from_seed;
use esdp_core::sdpa::{to_sdpa, SdpaProblem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

mod common;

/// Random decision vector and the dense symmetric `Z` it encodes, built
/// independently of the map's own helpers.
fn random_point(map: &FormulationMap, seed: u64) -> (Vec<f64>, DMatrix<f64>) {
    let mut rng = rng_from_seed(seed);
    let y: Vec<f64> = (0..map.num_vars)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let d = 2 + map.layout.num_sensors();
    let mut z = DMatrix::zeros(d, d);
    for (slot, &(r, c)) in map.layout.entries().iter().enumerate() {
        z[(r, c)] = y[slot];
        z[(c, r)] = y[slot];
    }
    (y, z)
}

fn quad(z: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v.transpose() * z * v)[(0, 0)]
}

#[test]
fn equality_rows_match_dense_quadratic_forms() {
    for seed in 0..50 {
        let net = common::small_network(seed);
        let mn = apply_noise(&net, 0.05, seed + 7).unwrap();
        for p in [0.0, 0.1] {
            let (prog, map) = build_pesdp(
                &mn,
                &Perturbation::Uniform(p),
                &FormulationOptions::default(),
            )
            .unwrap();
            let (y, z) = random_point(&map, seed * 31 + 1);
            let ay = prog.a.mul(&y);
            let d = z.nrows();

            assert!((ay[map.base_rows[0]] - z[(0, 0)]).abs() <= 1e-12);
            assert!((ay[map.base_rows[1]] - z[(0, 1)]).abs() <= 1e-12);
            assert!((ay[map.base_rows[2]] - z[(1, 1)]).abs() <= 1e-12);

            for (e, edge) in net.edges().enumerate() {
                let mut v = DVector::zeros(d);
                match edge {
                    Edge::Sensor { i, j } => {
                        v[2 + i] = 1.0;
                        v[2 + j] = -1.0;
                    }
                    Edge::Anchor { sensor, anchor } => {
                        let a = net.anchors()[anchor];
                        v[0] = -a[0];
                        v[1] = -a[1];
                        v[2 + sensor] = 1.0;
                    }
                }
                let (ap, am) = map.alpha_slots[e];
                let expect = quad(&z, &v) - y[ap] + y[am];
                let row = map.edge_rows[e];
                assert!(
                    (ay[row] - expect).abs() <= 1e-12,
                    "seed {seed} edge {edge}: {} vs {expect}",
                    ay[row]
                );
                assert_eq!(prog.b[row], mn.squared_measurement(e));
            }
        }
    }
}

#[test]
fn block_slacks_match_dense_principal_submatrices() {
    for seed in 0..50 {
        let net = common::small_network(seed);
        let mn = apply_noise(&net, 0.1, seed).unwrap();
        let p = 0.1 * (seed % 3) as f64;
        let (prog, map) = build_pesdp(
            &mn,
            &Perturbation::Uniform(p),
            &FormulationOptions::default(),
        )
        .unwrap();
        let (y, z) = random_point(&map, seed + 1000);
        let s = prog.implied_slack(&y);
        assert_eq!(map.psd_blocks.len(), net.sensor_edges().len());
        for (block, &(i, j)) in map.psd_blocks.iter().zip(net.sensor_edges()) {
            assert_eq!(block.z_indices, vec![0, 1, 2 + i, 2 + j]);
            let idx = [0, 1, 2 + i, 2 + j];
            let expect =
                DMatrix::from_fn(4, 4, |r, c| z[(idx[r], idx[c])]) + DMatrix::identity(4, 4) * p;
            let got = smat(&s[block.rows.clone()]).unwrap();
            assert!(
                (got - expect).amax() <= 1e-12,
                "seed {seed} block ({i},{j})"
            );
        }
        // nonnegative rows hold α
        for (k, &(ap, am)) in map.alpha_slots.iter().enumerate() {
            let r = map.nonnegative_rows.start + 2 * k;
            assert_eq!(s[r], y[ap]);
            assert_eq!(s[r + 1], y[am]);
        }
    }
}

#[test]
fn esdp_and_pesdp_differ_only_in_block_offsets() {
    for seed in 0..20 {
        let mn = apply_noise(&common::small_network(seed), 0.1, 3).unwrap();
        let opts = FormulationOptions::default();
        let (e, emap) = build_esdp(&mn, &opts).unwrap();
        let (p, pmap) = build_pesdp(&mn, &Perturbation::Uniform(0.1), &opts).unwrap();
        assert_eq!(e.objective, p.objective);
        assert_eq!(e.a, p.a);
        assert_eq!(e.cones, p.cones);
        assert_eq!(emap.layout, pmap.layout);
        let block_rows: std::collections::BTreeSet<usize> = pmap
            .psd_blocks
            .iter()
            .flat_map(|b| b.rows.clone())
            .collect();
        for (r, (be, bp)) in e.b.iter().zip(&p.b).enumerate() {
            if block_rows.contains(&r) {
                assert_eq!(bp - be, if smat_diag_slot(r, &pmap) { 0.1 } else { 0.0 });
            } else {
                assert_eq!(be, bp, "row {r} outside PSD blocks changed");
            }
        }
        let (z, _) = build_pesdp(&mn, &Perturbation::Uniform(0.0), &opts).unwrap();
        assert_eq!(z, e);
    }
}

fn smat_diag_slot(row: usize, map: &FormulationMap) -> bool {
    map.psd_blocks.iter().any(|b| {
        b.rows.contains(&row) && {
            let k = row - b.rows.start;
            [0, 2, 5, 9].contains(&k)
        }
    })
}

#[test]
fn two_sensor_example_has_one_block() {
    let net = Network::from_positions(
        vec![[0.0, 0.0], [0.1, 0.0]],
        vec![[0.0, 0.15], [0.4, 0.4]],
        0.2,
        5,
        Region::default(),
    )
    .unwrap();
    assert_eq!(net.sensor_edges(), &[(0, 1)]);
    assert_eq!(net.anchor_edges().len(), 2);
    let (prog, map) = build_esdp(
        &MeasuredNetwork::exact(&net),
        &FormulationOptions::default(),
    )
    .unwrap();
    assert_eq!(map.psd_blocks.len(), 1);
    assert_eq!(map.psd_blocks[0].z_indices, vec![0, 1, 2, 3]);
    assert_eq!(map.psd_blocks[0].rows.len(), 10);
    assert_eq!(
        prog.cones,
        vec![Cone::Zero(6), Cone::Nonnegative(6), Cone::Psd(4)]
    );
}

#[test]
fn true_vector_is_feasible_without_noise() {
    for seed in 0..30 {
        let net = common::small_network(seed);
        let (prog, map) = build_esdp(
            &MeasuredNetwork::exact(&net),
            &FormulationOptions::default(),
        )
        .unwrap();
        let y = true_solution_vector(&net, &map).unwrap();
        let s = prog.implied_slack(&y);
        for (cone, range) in prog.cone_ranges() {
            match cone {
                Cone::Zero(_) => assert!(s[range].iter().all(|v| v.abs() <= 1e-10)),
                Cone::Nonnegative(_) => assert!(s[range].iter().all(|&v| v >= 0.0)),
                Cone::Psd(_) => {
                    let m = smat(&s[range]).unwrap();
                    assert!(esdp_core::cone::eigenvalues(&m)[0] >= -1e-10);
                }
            }
        }
    }
}

#[test]
fn noisy_residual_equals_noise_term() {
    for seed in 0..10 {
        let net = common::small_network(seed);
        let mn = apply_noise(&net, 0.1, seed + 50).unwrap();
        let (prog, map) = build_esdp(&mn, &FormulationOptions::default()).unwrap();
        let y = true_solution_vector(&net, &map).unwrap();
        let ay = prog.a.mul(&y);
        for (e, &row) in map.edge_rows.iter().enumerate() {
            let d = net.true_distance(e);
            let n = mn.noise_samples()[e];
            let t = 2.0 * n * d + n * n;
            assert!((prog.b[row] - ay[row] - t).abs() <= 1e-12);
        }
    }
}

#[test]
fn sdpa_export_reproduces_slacks() {
    for seed in 0..10 {
        let mn = apply_noise(&common::small_network(seed), 0.1, 1).unwrap();
        let (prog, map) = build_pesdp(
            &mn,
            &Perturbation::Uniform(0.1),
            &FormulationOptions::default(),
        )
        .unwrap();
        let sdpa = to_sdpa(&prog);
        let text = sdpa.to_text();
        let parsed = SdpaProblem::parse(&text).unwrap();
        assert_eq!(parsed, sdpa);
        assert_eq!(parsed.to_text(), text);

        let (y, _) = random_point(&map, seed);
        let s = prog.implied_slack(&y);
        let blocks = parsed.evaluate(&y);
        for (block, psd) in blocks[1..].iter().zip(&map.psd_blocks) {
            let expect = smat(&s[psd.rows.clone()]).unwrap();
            assert!((block - expect).amax() <= 1e-12);
        }
        let lp = &blocks[0];
        let zero_rows = prog.cone_ranges()[0].1.len();
        for r in 0..zero_rows {
            assert!((lp[(2 * r, 2 * r)] - s[r]).abs() <= 1e-12);
            assert!((lp[(2 * r + 1, 2 * r + 1)] + s[r]).abs() <= 1e-12);
        }
    }
}
