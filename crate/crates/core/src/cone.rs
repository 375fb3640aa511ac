//! Cone products, symmetric-matrix vectorization and Euclidean projections.
//!
//! PSD cone rows hold `svec(M)`: the upper triangle of `M` stacked column by
//! column, with off-diagonal entries multiplied by `√2` so that
//! `⟨svec(A), svec(B)⟩ = tr(AB)`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::ConeError;

/// One factor of a cone product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cone {
    /// `{0}ⁿ`, used for equality rows.
    Zero(usize),
    /// `ℝ₊ⁿ`.
    Nonnegative(usize),
    /// PSD matrices of the given order, stored as svec.
    Psd(usize),
}

impl Cone {
    pub fn rows(&self) -> usize {
        match *self {
            Cone::Zero(n) | Cone::Nonnegative(n) => n,
            Cone::Psd(k) => svec_len(k),
        }
    }
}

pub fn total_rows(cones: &[Cone]) -> usize {
    cones.iter().map(Cone::rows).sum()
}

pub const fn svec_len(order: usize) -> usize {
    order * (order + 1) / 2
}

/// Position of entry `(r, c)` (any order) inside svec.
pub fn svec_index(r: usize, c: usize) -> usize {
    let (r, c) = if r <= c { (r, c) } else { (c, r) };
    c * (c + 1) / 2 + r
}

fn order_from_len(len: usize) -> Option<usize> {
    let k = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    (svec_len(k) == len).then_some(k)
}

pub fn svec(m: &DMatrix<f64>) -> Result<Vec<f64>, ConeError> {
    if !m.is_square() {
        return Err(ConeError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let k = m.nrows();
    let mut out = Vec::with_capacity(svec_len(k));
    for c in 0..k {
        for r in 0..=c {
            if r == c {
                out.push(m[(r, c)]);
            } else {
                out.push(std::f64::consts::SQRT_2 * 0.5 * (m[(r, c)] + m[(c, r)]));
            }
        }
    }
    Ok(out)
}

pub fn smat(v: &[f64]) -> Result<DMatrix<f64>, ConeError> {
    let k = order_from_len(v.len()).ok_or(ConeError::NotTriangular(v.len()))?;
    let mut m = DMatrix::zeros(k, k);
    let mut idx = 0;
    for c in 0..k {
        for r in 0..=c {
            if r == c {
                m[(r, c)] = v[idx];
            } else {
                let x = v[idx] * std::f64::consts::FRAC_1_SQRT_2;
                m[(r, c)] = x;
                m[(c, r)] = x;
            }
            idx += 1;
        }
    }
    Ok(m)
}

/// Eigenvalues in ascending order.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped).
pub fn project_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, ConeError> {
    if !m.is_square() {
        return Err(ConeError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ConeError::NonFinite);
    }
    let sym = (m + m.transpose()) * 0.5;
    Ok(project_psd_unchecked(sym))
}

fn project_psd_unchecked(sym: DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return sym;
    }
    let k = sym.nrows();
    if eig.eigenvalues.iter().all(|&l| l <= 0.0) {
        return DMatrix::zeros(k, k);
    }
    let mut out = DMatrix::zeros(k, k);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.0 {
            let v = eig.eigenvectors.column(i);
            out += l * v * v.transpose();
        }
    }
    out
}

macro_rules! project_fixed {
    ($name:ident, $k:expr) => {
        fn $name(seg: &mut [f64]) {
            let mut m = nalgebra::SMatrix::<f64, $k, $k>::zeros();
            let mut idx = 0;
            for c in 0..$k {
                for r in 0..=c {
                    let v = if r == c {
                        seg[idx]
                    } else {
                        seg[idx] * std::f64::consts::FRAC_1_SQRT_2
                    };
                    m[(r, c)] = v;
                    m[(c, r)] = v;
                    idx += 1;
                }
            }
            if m.cholesky().is_some() {
                return;
            }
            let eig = m.symmetric_eigen();
            let mut p = nalgebra::SMatrix::<f64, $k, $k>::zeros();
            for (i, &l) in eig.eigenvalues.iter().enumerate() {
                if l > 0.0 {
                    let v = eig.eigenvectors.column(i);
                    p += l * v * v.transpose();
                }
            }
            let mut idx = 0;
            for c in 0..$k {
                for r in 0..=c {
                    seg[idx] = if r == c {
                        p[(r, c)]
                    } else {
                        std::f64::consts::SQRT_2 * p[(r, c)]
                    };
                    idx += 1;
                }
            }
        }
    };
}

project_fixed!(project_psd_svec3, 3);
project_fixed!(project_psd_svec4, 4);

/// Projects an svec segment onto the PSD cone in place.
pub(crate) fn project_psd_svec(seg: &mut [f64]) {
    match seg.len() {
        6 => return project_psd_svec3(seg),
        10 => return project_psd_svec4(seg),
        _ => {}
    }
    let m = smat(seg).expect("cone segment has svec length");
    let p = project_psd_unchecked(m);
    let mut idx = 0;
    let k = p.nrows();
    for c in 0..k {
        for r in 0..=c {
            seg[idx] = if r == c {
                p[(r, c)]
            } else {
                std::f64::consts::SQRT_2 * p[(r, c)]
            };
            idx += 1;
        }
    }
}

pub(crate) fn project_cones_in_place(s: &mut [f64], cones: &[Cone]) {
    let mut off = 0;
    for cone in cones {
        let n = cone.rows();
        let seg = &mut s[off..off + n];
        match cone {
            Cone::Zero(_) => seg.iter_mut().for_each(|v| *v = 0.0),
            Cone::Nonnegative(_) => seg.iter_mut().for_each(|v| *v = v.max(0.0)),
            Cone::Psd(_) => project_psd_svec(seg),
        }
        off += n;
    }
}

/// Euclidean projection of a stacked slack vector onto the cone product.
pub fn project_cones(s: &[f64], cones: &[Cone]) -> Result<Vec<f64>, ConeError> {
    let expected = total_rows(cones);
    if s.len() != expected {
        return Err(ConeError::LengthMismatch {
            expected,
            found: s.len(),
        });
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(ConeError::NonFinite);
    }
    let mut out = s.to_vec();
    project_cones_in_place(&mut out, cones);
    Ok(out)
}

/// Largest violation of dual-cone membership of `lambda`, measured relative
/// to each segment's size: `max(0, -λᵢ)` on nonnegative rows and
/// `max(0, -λ_min(smat(λ_block))) / (1 + ‖λ_block‖)` on PSD blocks. Zero-cone
/// multipliers are free.
pub fn dual_cone_violation(lambda: &[f64], cones: &[Cone]) -> f64 {
    let mut off = 0;
    let mut worst: f64 = 0.0;
    for cone in cones {
        let n = cone.rows();
        let seg = &lambda[off..off + n];
        match cone {
            Cone::Zero(_) => {}
            Cone::Nonnegative(_) => {
                worst = seg.iter().fold(worst, |w, &v| w.max(-v));
            }
            Cone::Psd(_) => {
                let m = smat(seg).expect("svec length");
                let norm = seg.iter().map(|v| v * v).sum::<f64>().sqrt();
                let lmin = eigenvalues(&m)[0];
                worst = worst.max(-lmin / (1.0 + norm));
            }
        }
        off += n;
    }
    worst
}
