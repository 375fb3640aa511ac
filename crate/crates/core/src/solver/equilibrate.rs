//! Modified Ruiz equilibration.
//!
//! Rows of a PSD block share one scale factor so that the scaled slack stays
//! in the same cone.

use crate::cone::Cone;
use crate::formulation::ConicProgram;
use crate::sparse::CscMatrix;

const MIN_SCALE: f64 = 1e-4;
const MAX_SCALE: f64 = 1e4;

/// `Â = D A E`, `b̂ = D b`, `ĉ = γ E c`.
pub(crate) struct Scaling {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub cost: f64,
}

impl Scaling {
    pub(crate) fn identity(m: usize, n: usize) -> Scaling {
        Scaling {
            d: vec![1.0; m],
            e: vec![1.0; n],
            cost: 1.0,
        }
    }
}

fn inv_sqrt_norm(norm: f64) -> f64 {
    if norm < 1e-8 {
        1.0
    } else {
        1.0 / norm.sqrt()
    }
}

pub(crate) fn ruiz(prog: &ConicProgram, iterations: usize) -> Scaling {
    let (m, n) = (prog.num_rows(), prog.num_vars());
    let mut sc = Scaling::identity(m, n);
    for _ in 0..iterations {
        let a = prog.a.scaled(&sc.d, &sc.e);
        let mut col_norm = vec![0.0f64; n];
        let mut row_norm = vec![0.0f64; m];
        for (r, c, v) in a.iter() {
            col_norm[c] = col_norm[c].max(v.abs());
            row_norm[r] = row_norm[r].max(v.abs());
        }
        let mut off = 0;
        for cone in &prog.cones {
            let rows = cone.rows();
            if let Cone::Psd(_) = cone {
                let block_max = row_norm[off..off + rows]
                    .iter()
                    .copied()
                    .fold(0.0, f64::max);
                row_norm[off..off + rows]
                    .iter_mut()
                    .for_each(|v| *v = block_max);
            }
            off += rows;
        }
        for (d, &nr) in sc.d.iter_mut().zip(&row_norm) {
            *d = (*d * inv_sqrt_norm(nr)).clamp(MIN_SCALE, MAX_SCALE);
        }
        for (e, &nc) in sc.e.iter_mut().zip(&col_norm) {
            *e = (*e * inv_sqrt_norm(nc)).clamp(MIN_SCALE, MAX_SCALE);
        }
    }
    let c_norm = prog
        .objective
        .iter()
        .zip(&sc.e)
        .map(|(c, e)| (c * e).abs())
        .fold(0.0, f64::max);
    sc.cost = if c_norm < 1e-8 {
        1.0
    } else {
        (1.0 / c_norm).clamp(MIN_SCALE, MAX_SCALE)
    };
    sc
}

pub(crate) fn scaled_data(prog: &ConicProgram, sc: &Scaling) -> (CscMatrix, Vec<f64>, Vec<f64>) {
    let a = prog.a.scaled(&sc.d, &sc.e);
    let b = prog.b.iter().zip(&sc.d).map(|(b, d)| b * d).collect();
    let c = prog
        .objective
        .iter()
        .zip(&sc.e)
        .map(|(c, e)| sc.cost * c * e)
        .collect();
    (a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_rows_share_a_scale() {
        let a = CscMatrix::from_triplets(
            4,
            2,
            &[
                (0, 0, 100.0),
                (1, 0, -1.0),
                (2, 1, -1.0),
                (3, 0, -0.01),
                (3, 1, 5.0),
            ],
        );
        let prog = ConicProgram {
            objective: vec![1.0, 0.0],
            a,
            b: vec![1.0, 0.0, 0.0, 0.0],
            cones: vec![Cone::Zero(1), Cone::Psd(2)],
        };
        let sc = ruiz(&prog, 10);
        assert_eq!(sc.d[1], sc.d[2]);
        assert_eq!(sc.d[2], sc.d[3]);
        assert!(sc.d.iter().chain(&sc.e).all(|v| v.is_finite() && *v > 0.0));
    }
}
