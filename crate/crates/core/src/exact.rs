//! Exact rational arithmetic for ground-truth determinants and permanents.
//!
//! Every finite `f64` is a dyadic rational, so converting inputs loses nothing.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::Vector;

pub fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or(Error::NonFinite)
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Natural log of a positive rational without overflowing `f64` on huge values.
pub fn ln(x: &BigRational) -> f64 {
    if !x.is_positive() {
        return f64::NEG_INFINITY;
    }
    ln_bigint(x.numer()) - ln_bigint(x.denom())
}

fn ln_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 900;
    let head: BigInt = x >> shift;
    head.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Determinant by fraction-free Bareiss elimination with row pivoting.
pub fn det(mut a: Vec<Vec<BigRational>>) -> BigRational {
    let n = a.len();
    if n == 0 {
        return BigRational::one();
    }
    let mut sign = BigRational::one();
    let mut prev = BigRational::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            let Some(p) = ((k + 1)..n).find(|&r| !a[r][k].is_zero()) else {
                return BigRational::zero();
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Exact `det(Σ_{i∈members} v_i v_iᵀ)`.
pub fn gram_det(vectors: &[Vector], members: &[usize]) -> Result<BigRational> {
    let d = crate::linalg::common_dim(vectors)?;
    let mut g = vec![vec![BigRational::zero(); d]; d];
    for &m in members {
        let v = vectors.get(m).ok_or(Error::IndexOutOfRange {
            index: m,
            size: vectors.len(),
        })?;
        let q: Vec<BigRational> = v.iter().map(|&x| rational(x)).collect::<Result<_>>()?;
        for i in 0..d {
            for j in 0..d {
                g[i][j] += &q[i] * &q[j];
            }
        }
    }
    Ok(det(g))
}

/// Exact permanent by Ryser's formula.
pub fn permanent(m: &DMatrix<f64>) -> Result<BigRational> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidArgument(
            "permanent needs a square matrix".into(),
        ));
    }
    if n > crate::linalg::PERMANENT_CAP {
        return Err(Error::OrderTooLarge {
            order: n,
            cap: crate::linalg::PERMANENT_CAP,
        });
    }
    if n == 0 {
        return Ok(BigRational::one());
    }
    let q: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| rational(m[(i, j)])).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut row_sums = vec![BigRational::zero(); n];
    let mut total = BigRational::zero();
    let mut gray = 0usize;
    for k in 1usize..(1 << n) {
        let j = k.trailing_zeros() as usize;
        gray ^= 1 << j;
        let adding = gray & (1 << j) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += &q[i][j];
            } else {
                *s -= &q[i][j];
            }
        }
        let prod = row_sums.iter().fold(BigRational::one(), |acc, s| acc * s);
        if (gray.count_ones() as usize) % 2 == n % 2 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(total)
}
