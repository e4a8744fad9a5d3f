//! Dense linear algebra for small Gram matrices: factorization with a
//! scale-invariant rank test, the S-inner product and its update formulas,
//! Cauchy–Binet expansion, and permanents.

mod gram;
mod permanent;

use nalgebra::{DMatrix, DVector};

pub(crate) use gram::common_dim;
pub use gram::{GramState, SWAP_EPS};
pub use permanent::{permanent, permanent_bound_check, PermanentBoundCheck, PERMANENT_CAP};

use crate::util::for_each_combination;

pub type Vector = DVector<f64>;

/// Relative pivot threshold: a pivot below `EPS_RANK_REL * trace / order` is zero.
pub const EPS_RANK_REL: f64 = 1e-9;

pub fn vector(coords: &[f64]) -> Vector {
    DVector::from_column_slice(coords)
}

pub(crate) fn rank_threshold(m: &DMatrix<f64>) -> Option<f64> {
    let n = m.nrows();
    let trace = m.trace();
    if n == 0 || !trace.is_finite() || trace <= 0.0 {
        return None;
    }
    Some(EPS_RANK_REL * trace / n as f64)
}

/// Unpivoted LDLᵀ of a symmetric matrix. Returns `None` as soon as a pivot
/// falls to `threshold` or below.
pub(crate) fn ldlt(a: &DMatrix<f64>, threshold: f64) -> Option<(DMatrix<f64>, DVector<f64>)> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut d = DVector::<f64>::zeros(n);
    for j in 0..n {
        let mut dj = a[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if !(dj > threshold) {
            return None;
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = s / dj;
        }
    }
    Some((l, d))
}

/// Linear independence of a family through the pivots of its k×k Gram `VᵀV`.
pub fn is_linearly_independent(vectors: &[&Vector]) -> bool {
    let k = vectors.len();
    if k == 0 {
        return true;
    }
    if k > vectors[0].len() {
        return false;
    }
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let x = vectors[i].dot(vectors[j]);
            g[(i, j)] = x;
            g[(j, i)] = x;
        }
    }
    match rank_threshold(&g) {
        Some(t) => ldlt(&g, t).is_some(),
        None => false,
    }
}

/// `Σ_{Y ⊆ members, |Y| = d} det(V_Y)²`, which equals `det(Σ v vᵀ)`.
pub fn cauchy_binet(vectors: &[Vector], members: &[usize]) -> crate::Result<f64> {
    let d = common_dim(vectors)?;
    for &i in members {
        if i >= vectors.len() {
            return Err(crate::Error::IndexOutOfRange {
                index: i,
                size: vectors.len(),
            });
        }
    }
    let mut total = 0.0;
    for_each_combination(members.len(), d, |combo| {
        let cols: Vec<Vector> = combo.iter().map(|&c| vectors[members[c]].clone()).collect();
        let det = DMatrix::from_columns(&cols).determinant();
        total += det * det;
    });
    Ok(total)
}
