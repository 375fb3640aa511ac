//! Position recovery, error metrics and numerical checks of duality,
//! sensitivity and rank properties of a solved relaxation.
//!
//! Sign conventions: the solver returns `λ ∈ K*` with `Aᵀλ + c = 0`. The
//! distance-row weights are reported as `ω_e = −λ_e` and the base-row
//! multipliers as `u = −λ_base`, so the dual objective reads
//! `Σ ω_e d̂_e² + u₁₁ + u₂₂ − Σ p·tr(S)`, where `S = smat(λ_block)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cone;
use crate::error::AnalysisError;
use crate::formulation::{
    build_pesdp, BlockOwner, FormulationMap, FormulationOptions, Perturbation,
};
use crate::network::{MeasuredNetwork, Point};
use crate::solver::{solve, SolveResult, SolveSettings, SolveStatus};

fn check_lengths(result: &SolveResult, map: &FormulationMap) -> Result<(), AnalysisError> {
    if result.y.len() != map.num_vars {
        return Err(AnalysisError::MapMismatch(format!(
            "decision vector has {} entries, map expects {}",
            result.y.len(),
            map.num_vars
        )));
    }
    let rows = map
        .all_blocks()
        .map(|b| b.rows.end)
        .max()
        .unwrap_or(map.nonnegative_rows.end);
    if result.lambda.len() < rows {
        return Err(AnalysisError::MapMismatch(format!(
            "dual vector has {} entries, map needs at least {rows}",
            result.lambda.len()
        )));
    }
    Ok(())
}

fn require_optimal(result: &SolveResult) -> Result<(), AnalysisError> {
    if result.status != SolveStatus::Optimal {
        return Err(AnalysisError::NotOptimal(result.status));
    }
    Ok(())
}

/// Sensor positions `x̂_j = (Z[0, 2+j], Z[1, 2+j])` from a decision vector.
pub fn positions_from_vector(y: &[f64], map: &FormulationMap) -> Result<Vec<Point>, AnalysisError> {
    if y.len() != map.num_vars {
        return Err(AnalysisError::MapMismatch(format!(
            "decision vector has {} entries, map expects {}",
            y.len(),
            map.num_vars
        )));
    }
    Ok((0..map.layout.num_sensors())
        .map(|j| {
            let [a, b] = map.layout.position_slots(j);
            [y[a], y[b]]
        })
        .collect())
}

pub fn extract_positions(
    result: &SolveResult,
    map: &FormulationMap,
) -> Result<Vec<Point>, AnalysisError> {
    if !matches!(
        result.status,
        SolveStatus::Optimal | SolveStatus::MaxIterations
    ) {
        return Err(AnalysisError::NotOptimal(result.status));
    }
    check_lengths(result, map)?;
    positions_from_vector(&result.y, map)
}

/// Mean Euclidean distance between estimated and true positions.
pub fn position_error(estimated: &[Point], truth: &[Point]) -> Result<f64, AnalysisError> {
    if estimated.len() != truth.len() {
        return Err(AnalysisError::LengthMismatch(format!(
            "{} estimates for {} sensors",
            estimated.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(AnalysisError::Empty("positions"));
    }
    let total: f64 = estimated
        .iter()
        .zip(truth)
        .map(|(e, t)| ((e[0] - t[0]).powi(2) + (e[1] - t[1]).powi(2)).sqrt())
        .sum();
    Ok(total / truth.len() as f64)
}

/// Mean of per-network errors.
pub fn average_position_error(deltas: &[f64]) -> Result<f64, AnalysisError> {
    if deltas.is_empty() {
        return Err(AnalysisError::Empty("position errors"));
    }
    Ok(deltas.iter().sum::<f64>() / deltas.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualBlock {
    pub owner: BlockOwner,
    pub perturbation: f64,
    /// `smat` of the block's multipliers.
    pub s: DMatrix<f64>,
}

fn dual_blocks_unchecked(result: &SolveResult, map: &FormulationMap) -> Vec<DualBlock> {
    map.all_blocks()
        .map(|b| DualBlock {
            owner: b.owner,
            perturbation: b.perturbation,
            s: cone::smat(&result.lambda[b.rows.clone()]).expect("block rows have svec length"),
        })
        .collect()
}

/// Dual PSD blocks `S` of every cone block, sensor edges first.
pub fn extract_dual_blocks(
    result: &SolveResult,
    map: &FormulationMap,
) -> Result<Vec<DualBlock>, AnalysisError> {
    require_optimal(result)?;
    check_lengths(result, map)?;
    Ok(dual_blocks_unchecked(result, map))
}

/// Multipliers of the equality rows in the sign convention of the module docs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityMultipliers {
    /// `ω_e` per edge, combined edge order.
    pub edge_weights: Vec<f64>,
    pub u11: f64,
    pub u12: f64,
    pub u22: f64,
}

pub fn equality_multipliers(
    result: &SolveResult,
    map: &FormulationMap,
) -> Result<EqualityMultipliers, AnalysisError> {
    check_lengths(result, map)?;
    let l = &result.lambda;
    Ok(EqualityMultipliers {
        edge_weights: map.edge_rows.iter().map(|&r| -l[r]).collect(),
        u11: -l[map.base_rows[0]],
        u12: -l[map.base_rows[1]],
        u22: -l[map.base_rows[2]],
    })
}

/// Dual objective assembled from the network data and the extracted
/// multipliers: `Σ ω_e d̂_e² + u₁₁ + u₂₂ − Σ p·tr(S)`.
///
/// The base row pinning `Z₀₁` has right-hand side 0, so `u₁₂` does not
/// contribute. The value coincides with the solver's `−bᵀλ`.
pub fn evaluate_dual_objective(
    result: &SolveResult,
    mn: &MeasuredNetwork,
    map: &FormulationMap,
) -> Result<f64, AnalysisError> {
    require_optimal(result)?;
    check_lengths(result, map)?;
    if map.edge_rows.len() != mn.base().num_edges() {
        return Err(AnalysisError::MapMismatch(format!(
            "map has {} edges, network has {}",
            map.edge_rows.len(),
            mn.base().num_edges()
        )));
    }
    let mult = equality_multipliers(result, map)?;
    let measured: f64 = mult
        .edge_weights
        .iter()
        .enumerate()
        .map(|(e, w)| w * mn.squared_measurement(e))
        .sum();
    let shift: f64 = dual_blocks_unchecked(result, map)
        .iter()
        .map(|b| b.perturbation * b.s.trace())
        .sum();
    Ok(measured + mult.u11 + mult.u22 - shift)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankInfo {
    pub rank: usize,
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
}

/// Counts singular values above `rel_tol` times the largest one.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> Result<RankInfo, AnalysisError> {
    numerical_rank_with_reference(m, rel_tol, 0.0)
}

/// Like [`numerical_rank`], but the threshold is `rel_tol · max(σ_max, reference)`
/// so that a numerically zero matrix can be compared against the scale of a
/// companion matrix.
pub fn numerical_rank_with_reference(
    m: &DMatrix<f64>,
    rel_tol: f64,
    reference: f64,
) -> Result<RankInfo, AnalysisError> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(AnalysisError::InvalidArgument {
            name: "rel_tol",
            reason: format!("must lie in (0, 1), got {rel_tol}"),
        });
    }
    if !m.is_square() {
        return Err(AnalysisError::LengthMismatch(format!(
            "{}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite("matrix"));
    }
    let sym = (m + m.transpose()) * 0.5;
    let mut sv: Vec<f64> = cone::eigenvalues(&sym).iter().map(|v| v.abs()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let largest = sv.first().copied().unwrap_or(0.0);
    let threshold = rel_tol * largest.max(reference);
    let rank = if largest == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > threshold).count()
    };
    Ok(RankInfo {
        rank,
        singular_values: sv,
    })
}

/// Primal and dual block of one cone, with `z` already shifted by `p·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPair {
    pub owner: BlockOwner,
    pub z: DMatrix<f64>,
    pub s: DMatrix<f64>,
}

/// `(Z_block + p·I, S_block)` for every cone block of a solve.
pub fn block_pairs(
    result: &SolveResult,
    map: &FormulationMap,
) -> Result<Vec<BlockPair>, AnalysisError> {
    check_lengths(result, map)?;
    Ok(map
        .all_blocks()
        .zip(dual_blocks_unchecked(result, map))
        .map(|(b, d)| {
            let k = b.z_indices.len();
            let z = map.z_block(&result.y, b) + DMatrix::identity(k, k) * b.perturbation;
            BlockPair {
                owner: b.owner,
                z,
                s: d.s,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRelationRow {
    pub owner: BlockOwner,
    pub rank_z: usize,
    pub rank_s: usize,
    /// `tr((Z_block + pI) S_block)`
    pub complementarity: f64,
    /// `rank(S) + 4 ≤ 2q`
    pub stated_relation: bool,
    /// `rank(Z + pI) + rank(S) ≤ block order`
    pub complementarity_bound: bool,
    pub z_spectrum: Vec<f64>,
    pub s_spectrum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRelationReport {
    pub target_rank: usize,
    pub rel_tol: f64,
    pub rows: Vec<RankRelationRow>,
    pub stated_relation_holds: usize,
    pub complementarity_bound_holds: usize,
}

/// Tabulates, per block, the ranks of `Z_block + pI` and `S_block` against
/// two conditions: the stated relation `rank(S) + 4 ≤ 2q` and the
/// complementarity bound `rank(Z) + rank(S) ≤ order`. Neither is asserted.
///
/// Both ranks use the threshold `rel_tol · max(‖Z‖₂, ‖S‖₂)` of their pair.
pub fn rank_relation_report(
    z_blocks: &[(BlockOwner, DMatrix<f64>)],
    s_blocks: &[(BlockOwner, DMatrix<f64>)],
    target_rank: usize,
    rel_tol: f64,
) -> Result<RankRelationReport, AnalysisError> {
    if z_blocks.len() != s_blocks.len() || z_blocks.iter().zip(s_blocks).any(|(z, s)| z.0 != s.0) {
        return Err(AnalysisError::LengthMismatch(
            "primal and dual blocks cover different edges".into(),
        ));
    }
    let mut rows = Vec::with_capacity(z_blocks.len());
    for ((owner, z), (_, s)) in z_blocks.iter().zip(s_blocks) {
        if z.shape() != s.shape() {
            return Err(AnalysisError::LengthMismatch(format!(
                "block {owner:?} has mismatched orders"
            )));
        }
        let z_norm = numerical_rank(z, rel_tol)?
            .singular_values
            .first()
            .copied()
            .unwrap_or(0.0);
        let s_norm = numerical_rank(s, rel_tol)?
            .singular_values
            .first()
            .copied()
            .unwrap_or(0.0);
        let reference = z_norm.max(s_norm);
        let rz = numerical_rank_with_reference(z, rel_tol, reference)?;
        let rs = numerical_rank_with_reference(s, rel_tol, reference)?;
        rows.push(RankRelationRow {
            owner: *owner,
            rank_z: rz.rank,
            rank_s: rs.rank,
            complementarity: (z * s).trace(),
            stated_relation: rs.rank + 4 <= 2 * target_rank,
            complementarity_bound: rz.rank + rs.rank <= z.nrows(),
            z_spectrum: rz.singular_values,
            s_spectrum: rs.singular_values,
        });
    }
    Ok(RankRelationReport {
        target_rank,
        rel_tol,
        stated_relation_holds: rows.iter().filter(|r| r.stated_relation).count(),
        complementarity_bound_holds: rows.iter().filter(|r| r.complementarity_bound).count(),
        rows,
    })
}

impl RankRelationReport {
    pub fn from_pairs(
        pairs: &[BlockPair],
        target_rank: usize,
        rel_tol: f64,
    ) -> Result<Self, AnalysisError> {
        let z: Vec<_> = pairs.iter().map(|p| (p.owner, p.z.clone())).collect();
        let s: Vec<_> = pairs.iter().map(|p| (p.owner, p.s.clone())).collect();
        rank_relation_report(&z, &s, target_rank, rel_tol)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<14} {:>7} {:>7} {:>13} {:>16} {:>14}\n",
            "block",
            "rank_Z",
            "rank_S",
            "tr(ZS)",
            format!("rS+4<=2q(q={})", self.target_rank),
            "rZ+rS<=order"
        );
        for r in &self.rows {
            let name = match r.owner {
                BlockOwner::Edge { i, j } => format!("s:{i}-{j}"),
                BlockOwner::Sensor(j) => format!("sensor {j}"),
            };
            out.push_str(&format!(
                "{:<14} {:>7} {:>7} {:>13.3e} {:>16} {:>14}\n",
                name,
                r.rank_z,
                r.rank_s,
                r.complementarity,
                r.stated_relation,
                r.complementarity_bound
            ));
        }
        out.push_str(&format!(
            "summary: {}/{} blocks satisfy rS+4<=2q, {}/{} satisfy rZ+rS<=order\n",
            self.stated_relation_holds,
            self.rows.len(),
            self.complementarity_bound_holds,
            self.rows.len()
        ));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub perturbation: f64,
    pub step: f64,
    pub objective: f64,
    pub objective_stepped: f64,
    /// `(p*(p + ε) − p*(p)) / ε`
    pub finite_difference: f64,
    /// `−Σ tr(S_block)` at `p`
    pub predicted: f64,
    pub absolute_error: f64,
    /// `|fd − predicted| / max(|predicted|, 1)`, so a vanishing gradient is
    /// judged on its absolute error.
    pub relative_error: f64,
}

/// Compares a forward difference of the optimal value in the uniform
/// perturbation `p` against the gradient predicted by the dual blocks.
pub fn sensitivity_check(
    mn: &MeasuredNetwork,
    p: f64,
    step: f64,
    settings: &SolveSettings,
    options: &FormulationOptions,
) -> Result<SensitivityReport, AnalysisError> {
    if !(1e-5..=1e-2).contains(&step) {
        return Err(AnalysisError::InvalidArgument {
            name: "step",
            reason: format!("must lie in [1e-5, 1e-2], got {step}"),
        });
    }
    let (prog, map) = build_pesdp(mn, &Perturbation::Uniform(p), options)?;
    let base = solve(&prog, settings)?;
    require_optimal(&base)?;
    let (prog2, _) = build_pesdp(mn, &Perturbation::Uniform(p + step), options)?;
    let stepped = solve(&prog2, settings)?;
    require_optimal(&stepped)?;

    let predicted = -extract_dual_blocks(&base, &map)?
        .iter()
        .map(|b| b.s.trace())
        .sum::<f64>();
    let finite_difference = (stepped.primal_objective - base.primal_objective) / step;
    let absolute_error = (finite_difference - predicted).abs();
    Ok(SensitivityReport {
        perturbation: p,
        step,
        objective: base.primal_objective,
        objective_stepped: stepped.primal_objective,
        finite_difference,
        predicted,
        absolute_error,
        relative_error: absolute_error / predicted.abs().max(1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub owner: BlockOwner,
    pub perturbation: f64,
    /// `Z_block` without the perturbation.
    pub z_block: Vec<Vec<f64>>,
    pub s_block: Vec<Vec<f64>>,
    /// `tr((Z_block + pI) S_block)`
    pub complementarity: f64,
    pub rank_z: usize,
    pub rank_s: usize,
    pub z_spectrum: Vec<f64>,
    pub s_spectrum: Vec<f64>,
}

/// Everything recovered from one solve, serialized by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub status: SolveStatus,
    pub estimated_positions: Vec<Point>,
    pub delta: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `primal − dual`
    pub gap: f64,
    pub iterations: usize,
    pub solve_time_s: f64,
    pub blocks: Vec<BlockReport>,
    /// `Σ tr(S_block)`
    pub trace_sum: f64,
    pub rank_tolerance: f64,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn localization_report(
    mn: &MeasuredNetwork,
    map: &FormulationMap,
    result: &SolveResult,
    rank_tolerance: f64,
) -> Result<LocalizationReport, AnalysisError> {
    check_lengths(result, map)?;
    let estimated_positions = positions_from_vector(&result.y, map)?;
    let delta = position_error(&estimated_positions, mn.base().sensors())?;
    let pairs = block_pairs(result, map)?;
    let ranks = RankRelationReport::from_pairs(&pairs, 2, rank_tolerance)?;
    let blocks = map
        .all_blocks()
        .zip(&pairs)
        .zip(&ranks.rows)
        .map(|((b, pair), row)| BlockReport {
            owner: b.owner,
            perturbation: b.perturbation,
            z_block: rows_of(&map.z_block(&result.y, b)),
            s_block: rows_of(&pair.s),
            complementarity: row.complementarity,
            rank_z: row.rank_z,
            rank_s: row.rank_s,
            z_spectrum: row.z_spectrum.clone(),
            s_spectrum: row.s_spectrum.clone(),
        })
        .collect();
    Ok(LocalizationReport {
        status: result.status,
        estimated_positions,
        delta,
        primal_objective: result.primal_objective,
        dual_objective: result.dual_objective,
        gap: result.primal_objective - result.dual_objective,
        iterations: result.iterations,
        solve_time_s: result.wall_time_seconds,
        trace_sum: pairs.iter().map(|p| p.s.trace()).sum(),
        blocks,
        rank_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_error_basics() {
        let truth = vec![[0.0, 0.0], [1.0, 1.0], [-0.3, 0.2]];
        assert_eq!(position_error(&truth, &truth).unwrap(), 0.0);
        let shifted: Vec<Point> = truth.iter().map(|p| [p[0] + 0.1, p[1]]).collect();
        assert!((position_error(&shifted, &truth).unwrap() - 0.1).abs() < 1e-15);
        assert!(position_error(&truth[..2], &truth).is_err());
        assert!(position_error(&[], &[]).is_err());
    }

    #[test]
    fn average_error_basics() {
        assert_eq!(average_position_error(&[0.1]).unwrap(), 0.1);
        assert!((average_position_error(&[0.0, 0.2]).unwrap() - 0.1).abs() < 1e-15);
        assert!(matches!(
            average_position_error(&[]),
            Err(AnalysisError::Empty(_))
        ));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(
            numerical_rank(&DMatrix::identity(4, 4), 1e-6).unwrap().rank,
            4
        );
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-12, 0.0, 0.0]));
        assert_eq!(numerical_rank(&d, 1e-6).unwrap().rank, 1);
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 3), 1e-6).unwrap().rank, 0);
        let mut nan = DMatrix::identity(2, 2);
        nan[(0, 0)] = f64::NAN;
        assert!(numerical_rank(&nan, 1e-6).is_err());
        assert!(numerical_rank(&d, 0.0).is_err());
    }

    #[test]
    fn reference_scale_suppresses_noise_ranks() {
        let noise =
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1e-11, 1e-12, 0.0, 0.0]));
        assert_eq!(numerical_rank(&noise, 1e-6).unwrap().rank, 2);
        assert_eq!(
            numerical_rank_with_reference(&noise, 1e-6, 1.0)
                .unwrap()
                .rank,
            0
        );
    }

    #[test]
    fn rank_report_on_constructed_blocks() {
        let owner = BlockOwner::Edge { i: 0, j: 1 };
        // zero dual: stated relation holds for q = 2
        let z = DMatrix::identity(4, 4);
        let report = rank_relation_report(
            &[(owner, z.clone())],
            &[(owner, DMatrix::zeros(4, 4))],
            2,
            1e-6,
        )
        .unwrap();
        assert!(report.rows[0].stated_relation);
        assert!(report.rows[0].complementarity_bound);

        // complementary rank-2 pair: bound holds, stated relation does not
        let z = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 0.0, 0.0]));
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 0.0, 3.0, 0.5]));
        let report = rank_relation_report(&[(owner, z)], &[(owner, s)], 2, 1e-6).unwrap();
        let row = &report.rows[0];
        assert_eq!((row.rank_z, row.rank_s), (2, 2));
        assert!(!row.stated_relation);
        assert!(row.complementarity_bound);
        assert_eq!(row.complementarity, 0.0);
        assert!(report.to_table().contains("0/1 blocks satisfy rS+4<=2q"));

        let other = BlockOwner::Edge { i: 0, j: 2 };
        assert!(rank_relation_report(
            &[(owner, DMatrix::zeros(4, 4))],
            &[(other, DMatrix::zeros(4, 4))],
            2,
            1e-6
        )
        .is_err());
    }
}
