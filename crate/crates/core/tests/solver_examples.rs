use esdp_core::cone::{dual_cone_violation, Cone};
use esdp_core::formulation::*;
use esdp_core::network::*;
use esdp_core::sdpa::write_sdpa;
use esdp_core::solver::*;
use esdp_core::sparse::CscMatrix;
use std::time::Instant;

mod common;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn one_dimensional_lp() {
    // min y  s.t.  y ≥ 1, written as s = -1 + y ∈ ℝ₊
    let prog = ConicProgram {
        objective: vec![1.0],
        a: CscMatrix::from_triplets(1, 1, &[(0, 0, -1.0)]),
        b: vec![-1.0],
        cones: vec![Cone::Nonnegative(1)],
    };
    let res = solve(&prog, &SolveSettings::default()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!(rel(res.y[0], 1.0) <= 1e-6);
    assert!(rel(res.lambda[0], 1.0) <= 1e-6);
    assert!(rel(res.primal_objective, 1.0) <= 1e-6);
}

/// `min tr(CX)` over unit-trace PSD `X` equals `λ_min(C)`.
fn min_eigenvalue_program(c: &[f64; 3]) -> ConicProgram {
    // y = svec(X) = (X00, √2 X01, X11)
    ConicProgram {
        objective: c.to_vec(),
        a: CscMatrix::from_triplets(
            4,
            3,
            &[
                (0, 0, 1.0),
                (0, 2, 1.0),
                (1, 0, -1.0),
                (2, 1, -1.0),
                (3, 2, -1.0),
            ],
        ),
        b: vec![1.0, 0.0, 0.0, 0.0],
        cones: vec![Cone::Zero(1), Cone::Psd(2)],
    }
}

#[test]
fn min_eigenvalue_sdp() {
    let settings = SolveSettings::default().with_tolerance(1e-8);
    let res = solve(&min_eigenvalue_program(&[3.0, 0.0, 1.0]), &settings).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!(
        rel(res.primal_objective, 1.0) <= 1e-6,
        "{}",
        res.primal_objective
    );

    // C = [[2, 1], [1, 2]] has λ_min = 1; svec(C) carries √2 off the diagonal
    let c = [2.0, std::f64::consts::SQRT_2, 2.0];
    let res = solve(&min_eigenvalue_program(&c), &settings).unwrap();
    assert!(
        rel(res.primal_objective, 1.0) <= 1e-6,
        "{}",
        res.primal_objective
    );
}

#[test]
fn zero_noise_trilateration_reaches_zero() {
    let net = common::trilateration_network();
    assert_eq!(net.anchor_edges().len(), 3);
    let (prog, map) = build_esdp(
        &MeasuredNetwork::exact(&net),
        &FormulationOptions::default(),
    )
    .unwrap();
    let start = Instant::now();
    let res = solve(&prog, &SolveSettings::default()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!(res.primal_objective <= 1e-6);
    let x = map.layout.position_slots(0).map(|s| res.y[s]);
    assert!(common::dist(&x, &common::TRILATERATION_SENSOR) <= 1e-3);
}

fn noisy_instance(seed: u64, p: f64) -> ConicProgram {
    let mn = apply_noise(&common::small_network(seed), 0.1, seed).unwrap();
    build_pesdp(
        &mn,
        &Perturbation::Uniform(p),
        &FormulationOptions::default(),
    )
    .unwrap()
    .0
}

#[test]
fn weak_duality_along_trace_and_kkt_at_optimum() {
    let tol = 1e-6;
    for seed in 0..8 {
        let prog = noisy_instance(seed, 0.1 * (seed % 2) as f64);
        let settings = SolveSettings {
            record_trace: true,
            ..SolveSettings::default()
        };
        let res = solve(&prog, &settings).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal, "seed {seed}");
        for rec in res
            .trace
            .iter()
            .filter(|r| r.residuals.dual <= tol && r.residuals.primal <= tol)
        {
            let scale = 1.0 + rec.primal_objective.abs() + rec.dual_objective.abs();
            assert!(
                rec.primal_objective >= rec.dual_objective - 10.0 * tol * scale,
                "seed {seed} iteration {}: {} < {}",
                rec.iteration,
                rec.primal_objective,
                rec.dual_objective
            );
        }
        let r = &res.residuals;
        assert!(r.primal <= tol && r.dual <= tol && r.gap <= tol);
        let sl: f64 = res.s.iter().zip(&res.lambda).map(|(a, b)| a * b).sum();
        let ns = res.s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nl = res.lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(
            sl.abs() <= 10.0 * tol * (1.0 + ns * nl),
            "seed {seed}: <s, λ> = {sl}"
        );
        assert!(dual_cone_violation(&res.lambda, &prog.cones) <= tol);
        let projected = esdp_core::cone::project_cones(&res.s, &prog.cones).unwrap();
        let dev = projected
            .iter()
            .zip(&res.s)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-9);
    }
}

#[test]
fn solves_are_bit_identical() {
    let prog = noisy_instance(5, 0.1);
    let a = solve(&prog, &SolveSettings::default()).unwrap();
    let b = solve(&prog, &SolveSettings::default()).unwrap();
    assert_eq!(a.iterations, b.iterations);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.y), bits(&b.y));
    assert_eq!(bits(&a.s), bits(&b.s));
    assert_eq!(bits(&a.lambda), bits(&b.lambda));
}

#[test]
fn time_limit_is_honoured() {
    let prog = noisy_instance(8, 0.0);
    let settings = SolveSettings {
        tolerance: 1e-14,
        time_limit: Some(1e-3),
        ..SolveSettings::default()
    };
    let res = solve(&prog, &settings).unwrap();
    assert_eq!(res.status, SolveStatus::TimeLimit);
}

#[test]
fn pesdp_optimum_is_at_most_esdp_optimum() {
    for seed in [4u64, 13, 22] {
        let net = generate_network(&NetworkParams {
            sensors: 5,
            anchors: 3,
            radio_range: 0.7,
            seed,
            ..Default::default()
        })
        .unwrap();
        let mn = apply_noise(&net, 0.1, seed).unwrap();
        let settings = SolveSettings::default().with_tolerance(1e-8);
        let opts = FormulationOptions::default();
        let e = solve(&build_esdp(&mn, &opts).unwrap().0, &settings).unwrap();
        let p = solve(
            &build_pesdp(&mn, &Perturbation::Uniform(0.1), &opts)
                .unwrap()
                .0,
            &settings,
        )
        .unwrap();
        assert_eq!(e.status, SolveStatus::Optimal);
        assert_eq!(p.status, SolveStatus::Optimal);
        assert!(p.primal_objective <= e.primal_objective + 1e-6);
    }
}

/// Compares against cvxpy on the exported SDPA file. Skipped when python or
/// cvxpy is not installed.
#[test]
fn external_solver_agrees_on_exported_programs() {
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/support/solve_sdpa.py");
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..10 {
        let net = generate_network(&NetworkParams {
            sensors: 3 + (seed % 4) as usize,
            anchors: 3,
            radio_range: 0.7,
            seed,
            ..Default::default()
        })
        .unwrap();
        let mn = apply_noise(&net, 0.1, seed).unwrap();
        let (prog, _) = build_esdp(&mn, &FormulationOptions::default()).unwrap();
        let path = dir.path().join(format!("esdp{seed}.dat-s"));
        write_sdpa(&prog, &path).unwrap();
        let out = match std::process::Command::new("python3")
            .arg(script)
            .arg(&path)
            .output()
        {
            Ok(o) => o,
            Err(_) => {
                eprintln!("python3 not available; skipping external cross-check");
                return;
            }
        };
        if out.status.code() == Some(3) {
            eprintln!("cvxpy not available; skipping external cross-check");
            return;
        }
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let stdout = String::from_utf8_lossy(&out.stdout);
        let external: f64 = stdout
            .trim()
            .parse()
            .unwrap_or_else(|_| panic!("unexpected output {stdout:?}"));
        let ours = solve(&prog, &SolveSettings::default().with_tolerance(1e-8)).unwrap();
        assert_eq!(ours.status, SolveStatus::Optimal);
        let err = (ours.primal_objective - external).abs() / external.abs().max(1e-3);
        assert!(
            err <= 1e-4,
            "seed {seed}: ours {} vs external {external}",
            ours.primal_objective
        );
    }
}
