//! First-order operator-splitting solver for `min cᵀy s.t. Ay + s = b, s ∈ K`.
//!
//! Each iteration
//!
//! 1. projects onto the affine set `{(y, s) : Ay + s = b}` by solving
//!    `(σI + AᵀRA) ỹ = σy − c + Aᵀ(R(b − s) + μ)` with a cached sparse
//!    Cholesky factor and setting `s̃ = b − Aỹ`,
//! 2. over-relaxes, `ŝ = α s̃ + (1 − α) s`, and projects
//!    `s⁺ = Π_K(ŝ + R⁻¹μ)`,
//! 3. updates the multiplier, `μ⁺ = μ + R(ŝ − s⁺)`.
//!
//! `μ` lives in the polar cone; the reported dual vector is `λ = −μ ∈ K*`
//! (undoing equilibration), so that optimality reads `Aᵀλ + c = 0` and the
//! dual objective is `−bᵀλ`. `R` is `ρ` on cone rows and
//! `ρ · equality_rho_scale` on zero-cone rows.

mod equilibrate;
mod kkt;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cone::{self, Cone};
use crate::error::SolverError;
use crate::formulation::ConicProgram;
use equilibrate::Scaling;
use kkt::ReducedKkt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveSettings {
    /// Target for all three relative residuals.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Relaxation parameter `α`, strictly between 1 and 2.
    pub over_relaxation: f64,
    /// Penalty `ρ`.
    pub rho: f64,
    /// Proximal weight `σ` on the primal variable.
    pub sigma: f64,
    /// Multiplier applied to `ρ` on equality rows.
    pub equality_rho_scale: f64,
    pub equilibrate: bool,
    pub equilibration_passes: usize,
    /// Rescale `ρ` from the residual balance and refactor when it moves by
    /// more than a factor of 5.
    pub adaptive_rho: bool,
    /// Iterations between convergence checks.
    pub check_interval: usize,
    pub time_limit: Option<f64>,
    /// Record objectives and residuals at every convergence check.
    pub record_trace: bool,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            tolerance: 1e-6,
            max_iterations: 100_000,
            over_relaxation: 1.6,
            rho: 1.0,
            sigma: 1e-6,
            equality_rho_scale: 1e3,
            equilibrate: true,
            equilibration_passes: 25,
            adaptive_rho: false,
            check_interval: 10,
            time_limit: None,
            record_trace: false,
        }
    }
}

impl SolveSettings {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |name, reason: String| Err(SolverError::InvalidSettings { name, reason });
        if !(self.tolerance > 0.0) {
            return bad(
                "tolerance",
                format!("must be positive, got {}", self.tolerance),
            );
        }
        if !(self.over_relaxation > 1.0 && self.over_relaxation < 2.0) {
            return bad(
                "over_relaxation",
                format!("must lie in (1, 2), got {}", self.over_relaxation),
            );
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho", format!("must be positive, got {}", self.rho));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma", format!("must be positive, got {}", self.sigma));
        }
        if !(self.equality_rho_scale > 0.0 && self.equality_rho_scale.is_finite()) {
            return bad(
                "equality_rho_scale",
                format!("must be positive, got {}", self.equality_rho_scale),
            );
        }
        if self.check_interval == 0 {
            return bad("check_interval", "must be at least 1".into());
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return bad("time_limit", format!("must be positive, got {t}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    TimeLimit,
    InfeasibleSuspected,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::InfeasibleSuspected => "infeasible_suspected",
        };
        f.write_str(s)
    }
}

/// Relative residuals of an unscaled primal-dual point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖Ay + s − b‖∞ / (1 + ‖b‖∞)`
    pub primal: f64,
    /// `‖Aᵀλ + c‖∞ / (1 + ‖c‖∞)`
    pub dual: f64,
    /// `|cᵀy + bᵀλ| / (1 + |cᵀy| + |bᵀλ|)`
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    /// One multiplier per row, in the dual cone; PSD blocks are svec'd.
    pub lambda: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub wall_time_seconds: f64,
    pub trace: Vec<IterationRecord>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Residuals of an unscaled point against `prog`.
pub fn residuals(prog: &ConicProgram, y: &[f64], s: &[f64], lambda: &[f64]) -> Residuals {
    let ay = prog.a.mul(y);
    let r_prim: Vec<f64> = ay
        .iter()
        .zip(s)
        .zip(&prog.b)
        .map(|((a, s), b)| a + s - b)
        .collect();
    let atl = prog.a.tr_mul(lambda);
    let r_dual: Vec<f64> = atl
        .iter()
        .zip(&prog.objective)
        .map(|(a, c)| a + c)
        .collect();
    let pobj = dot(&prog.objective, y);
    let btl = dot(&prog.b, lambda);
    Residuals {
        primal: inf_norm(&r_prim) / (1.0 + inf_norm(&prog.b)),
        dual: inf_norm(&r_dual) / (1.0 + inf_norm(&prog.objective)),
        gap: (pobj + btl).abs() / (1.0 + pobj.abs() + btl.abs()),
    }
}

fn check_program(prog: &ConicProgram) -> Result<(), SolverError> {
    prog.check_dimensions()
        .map_err(SolverError::MalformedProgram)?;
    let finite = prog.objective.iter().chain(&prog.b).all(|v| v.is_finite())
        && prog.a.iter().all(|(_, _, v)| v.is_finite());
    if !finite {
        return Err(SolverError::MalformedProgram(
            "non-finite problem data".into(),
        ));
    }
    Ok(())
}

fn unscale(sc: &Scaling, x: &[f64], s: &[f64], mu: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let y = x.iter().zip(&sc.e).map(|(x, e)| x * e).collect();
    let s = s.iter().zip(&sc.d).map(|(s, d)| s / d).collect();
    let lambda = mu
        .iter()
        .zip(&sc.d)
        .map(|(m, d)| -m * d / sc.cost)
        .collect();
    (y, s, lambda)
}

/// Solves `prog` to the residual tolerance in `settings`.
pub fn solve(prog: &ConicProgram, settings: &SolveSettings) -> Result<SolveResult, SolverError> {
    settings.validate()?;
    check_program(prog)?;
    let start = Instant::now();
    let (m, n) = (prog.num_rows(), prog.num_vars());

    let scaling = if settings.equilibrate {
        equilibrate::ruiz(prog, settings.equilibration_passes)
    } else {
        Scaling::identity(m, n)
    };
    let (a, b, c) = equilibrate::scaled_data(prog, &scaling);

    let mut is_zero_row = vec![false; m];
    {
        let mut off = 0;
        for cone in &prog.cones {
            if let Cone::Zero(k) = cone {
                is_zero_row[off..off + k].iter_mut().for_each(|v| *v = true);
            }
            off += cone.rows();
        }
    }
    let rho_vec = |rho: f64| -> Vec<f64> {
        is_zero_row
            .iter()
            .map(|&z| {
                if z {
                    rho * settings.equality_rho_scale
                } else {
                    rho
                }
            })
            .collect()
    };
    let mut rho = settings.rho;
    let mut r = rho_vec(rho);
    let mut kkt = ReducedKkt::factor(&a, &r, settings.sigma)?;

    let alpha = settings.over_relaxation;
    let sigma = settings.sigma;
    let mut x = vec![0.0; n];
    let mut s = vec![0.0; m];
    let mut mu = vec![0.0; m];
    let mut x_tilde = vec![0.0; n];
    let mut s_tilde = vec![0.0; m];
    let mut tmp_m = vec![0.0; m];
    let mut mu_prev = vec![0.0; m];
    let mut trace = Vec::new();
    let mut infeasible_streak = 0usize;

    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut last_res = Residuals {
        primal: f64::INFINITY,
        dual: f64::INFINITY,
        gap: f64::INFINITY,
    };

    for k in 1..=settings.max_iterations.max(1) {
        let is_check = k % settings.check_interval == 0 || k == settings.max_iterations;
        if is_check {
            mu_prev.copy_from_slice(&mu);
        }
        // affine projection
        for i in 0..m {
            tmp_m[i] = r[i] * (b[i] - s[i]) + mu[i];
        }
        a.tr_mul_vec(&tmp_m, &mut x_tilde);
        for j in 0..n {
            x_tilde[j] += sigma * x[j] - c[j];
        }
        kkt.solve_in_place(&mut x_tilde);
        a.mul_vec(&x_tilde, &mut s_tilde);
        for i in 0..m {
            s_tilde[i] = b[i] - s_tilde[i];
        }
        // relaxation and cone projection
        for j in 0..n {
            x[j] = alpha * x_tilde[j] + (1.0 - alpha) * x[j];
        }
        for i in 0..m {
            let relaxed = alpha * s_tilde[i] + (1.0 - alpha) * s[i];
            tmp_m[i] = relaxed;
            s[i] = relaxed + mu[i] / r[i];
        }
        cone::project_cones_in_place(&mut s, &prog.cones);
        for i in 0..m {
            mu[i] += r[i] * (tmp_m[i] - s[i]);
        }
        iterations = k;

        if !is_check {
            continue;
        }
        if x.iter().chain(&mu).any(|v| !v.is_finite()) {
            return Err(SolverError::Diverged { iteration: k });
        }
        let (y_u, s_u, l_u) = unscale(&scaling, &x, &s, &mu);
        let res = residuals(prog, &y_u, &s_u, &l_u);
        last_res = res;
        if settings.record_trace {
            trace.push(IterationRecord {
                iteration: k,
                primal_objective: dot(&prog.objective, &y_u),
                dual_objective: -dot(&prog.b, &l_u),
                residuals: res,
            });
        }
        if res.max() <= settings.tolerance {
            status = SolveStatus::Optimal;
            break;
        }
        let objectives = (dot(&prog.objective, &y_u), -dot(&prog.b, &l_u));
        if primal_infeasibility_hint(prog, &scaling, &mu, &mu_prev, &res, objectives) {
            infeasible_streak += 1;
            if infeasible_streak >= 5 {
                status = SolveStatus::InfeasibleSuspected;
                break;
            }
        } else {
            infeasible_streak = 0;
        }
        if let Some(limit) = settings.time_limit {
            if start.elapsed().as_secs_f64() > limit {
                status = SolveStatus::TimeLimit;
                break;
            }
        }
        if settings.adaptive_rho && k % (settings.check_interval * 10) == 0 {
            let new_rho = balanced_rho(&a, &b, &c, &x, &s, &mu, rho);
            if new_rho > 5.0 * rho || new_rho < 0.2 * rho {
                rho = new_rho;
                r = rho_vec(rho);
                kkt = ReducedKkt::factor(&a, &r, sigma)?;
            }
        }
    }

    let (y, s_u, lambda) = unscale(&scaling, &x, &s, &mu);
    let primal_objective = dot(&prog.objective, &y);
    let dual_objective = -dot(&prog.b, &lambda);
    Ok(SolveResult {
        status,
        y,
        s: s_u,
        lambda,
        primal_objective,
        dual_objective,
        residuals: last_res,
        iterations,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        trace,
    })
}

/// Farkas-type test on the multiplier increment: a direction `δλ ∈ K*` with
/// `Aᵀδλ ≈ 0` and `bᵀδλ < 0` certifies that no `y` satisfies `b − Ay ∈ K`.
/// Degenerate feasible problems can drift along such directions while the
/// dual objective converges, so the hint also requires weak duality to be
/// violated by a wide margin.
fn primal_infeasibility_hint(
    prog: &ConicProgram,
    sc: &Scaling,
    mu: &[f64],
    mu_prev: &[f64],
    res: &Residuals,
    objectives: (f64, f64),
) -> bool {
    const EPS: f64 = 1e-4;
    let (primal, dual) = objectives;
    if dual - primal <= 1.0 + primal.abs() || res.dual > EPS {
        return false;
    }
    let dl: Vec<f64> = mu
        .iter()
        .zip(mu_prev)
        .zip(&sc.d)
        .map(|((a, b), d)| -(a - b) * d)
        .collect();
    let norm = inf_norm(&dl);
    if norm == 0.0 {
        return false;
    }
    let v: Vec<f64> = dl.iter().map(|x| x / norm).collect();
    let atv = prog.a.tr_mul(&v);
    inf_norm(&atv) <= EPS
        && dot(&prog.b, &v) < -EPS
        && cone::dual_cone_violation(&v, &prog.cones) <= EPS
}

fn balanced_rho(
    a: &crate::sparse::CscMatrix,
    b: &[f64],
    c: &[f64],
    x: &[f64],
    s: &[f64],
    mu: &[f64],
    rho: f64,
) -> f64 {
    let ax = a.mul(x);
    let rp: Vec<f64> = ax
        .iter()
        .zip(s)
        .zip(b)
        .map(|((a, s), b)| a + s - b)
        .collect();
    let atm = a.tr_mul(mu);
    let rd: Vec<f64> = c.iter().zip(&atm).map(|(c, a)| c - a).collect();
    let p_scale = inf_norm(&ax).max(inf_norm(s)).max(inf_norm(b)).max(1e-10);
    let d_scale = inf_norm(&atm).max(inf_norm(c)).max(1e-10);
    let ratio = (inf_norm(&rp) / p_scale) / (inf_norm(&rd) / d_scale).max(1e-12);
    (rho * ratio.sqrt()).clamp(1e-6, 1e6)
}
