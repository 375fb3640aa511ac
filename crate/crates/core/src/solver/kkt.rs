//! Cached factorization of the reduced linear system `(σI + AᵀRA) x = r`.

use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{MatMut, Side};

use crate::error::SolverError;
use crate::sparse::CscMatrix;

pub(crate) struct ReducedKkt {
    llt: Llt<usize, f64>,
    n: usize,
}

impl ReducedKkt {
    /// Factors `σI + Aᵀ diag(rho) A`. The matrix is symmetric positive
    /// definite for `σ > 0`, so a sparse Cholesky factorization is used.
    pub(crate) fn factor(
        a: &CscMatrix,
        rho: &[f64],
        sigma: f64,
    ) -> Result<ReducedKkt, SolverError> {
        let n = a.ncols();
        let mut lower: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for c in 0..n {
            lower.insert((c, c), sigma);
        }
        for row in a.rows().iter().zip(rho) {
            let (entries, &r) = row;
            for (p, &(cp, vp)) in entries.iter().enumerate() {
                for &(cq, vq) in &entries[..=p] {
                    // entries are column-sorted, so cp >= cq
                    *lower.entry((cp, cq)).or_insert(0.0) += r * vp * vq;
                }
            }
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = lower
            .into_iter()
            .map(|((r, c), v)| Triplet::new(r, c, v))
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        let llt = mat
            .sp_cholesky(Side::Lower)
            .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        Ok(ReducedKkt { llt, n })
    }

    pub(crate) fn solve_in_place(&self, rhs: &mut [f64]) {
        debug_assert_eq!(rhs.len(), self.n);
        if self.n == 0 {
            return;
        }
        let mat = MatMut::from_column_major_slice_mut(rhs, self.n, 1);
        self.llt.solve_in_place(mat);
    }
}
