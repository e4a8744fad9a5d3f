use nalgebra::DMatrix;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::exact;
use crate::exchange_graph::log_f;

/// Largest order accepted by [`permanent`] (Ryser needs 2^ℓ terms).
pub const PERMANENT_CAP: usize = 20;

/// Permanent by Ryser's inclusion–exclusion formula, walking subsets in Gray-code order.
pub fn permanent(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "permanent needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if n > PERMANENT_CAP {
        return Err(Error::OrderTooLarge {
            order: n,
            cap: PERMANENT_CAP,
        });
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut row_sums = vec![0.0f64; n];
    let mut total = 0.0;
    let mut gray = 0usize;
    for k in 1usize..(1 << n) {
        let j = k.trailing_zeros() as usize;
        gray ^= 1 << j;
        let sign = if gray & (1 << j) != 0 { 1.0 } else { -1.0 };
        for (i, s) in row_sums.iter_mut().enumerate() {
            *s += sign * m[(i, j)];
        }
        let prod: f64 = row_sums.iter().product();
        if (gray.count_ones() as usize) % 2 == n % 2 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(total)
}

/// Outcome of testing a matrix against the near-diagonal permanent bound
/// `perm(A) ≤ (1 + 0.05/ℓ) ∏ a_ii`.
#[derive(Clone, Debug, PartialEq)]
pub struct PermanentBoundCheck {
    /// Positive diagonal and the lower/upper off-diagonal caps all hold.
    pub preconditions_met: bool,
    pub permanent: f64,
    pub bound: f64,
    pub within_bound: bool,
}

impl PermanentBoundCheck {
    /// Vacuously true when the preconditions fail.
    pub fn holds(&self) -> bool {
        !self.preconditions_met || self.within_bound
    }
}

/// Checks the three structural conditions, then compares the permanent with the bound.
///
/// The comparison runs in exact rational arithmetic: the admissible matrices
/// mix entries near `f(ℓ-1)` with entries near `1/f(ℓ)`, and Ryser's signed
/// sums cancel catastrophically in floating point at that spread.
///
/// With 1-based indices the conditions are: `a_ii > 0`;
/// `0 ≤ a_ij ≤ 2 f(i-j) / ∏_{t=j+1}^{i-1} a_tt` below the diagonal; and
/// `0 ≤ a_ij ≤ 2 f(ℓ-j+i) ∏_{t=i}^{j} a_tt / f(ℓ)` above it.
pub fn permanent_bound_check(m: &DMatrix<f64>) -> Result<PermanentBoundCheck> {
    let l = m.nrows();
    let perm = exact::permanent(m)?;
    let mut bound = BigRational::new((20 * l.max(1) + 1).into(), (20 * l.max(1)).into());
    for i in 0..l {
        bound *= exact::rational(m[(i, i)])?;
    }
    Ok(PermanentBoundCheck {
        preconditions_met: bound_preconditions(m),
        permanent: exact::to_f64(&perm),
        bound: exact::to_f64(&bound),
        within_bound: perm <= bound,
    })
}

fn bound_preconditions(m: &DMatrix<f64>) -> bool {
    let l = m.nrows();
    if (0..l).any(|i| !(m[(i, i)] > 0.0)) {
        return false;
    }
    let ln_diag: Vec<f64> = (0..l).map(|i| m[(i, i)].ln()).collect();
    let lf = |k: usize| log_f(k).expect("k >= 1");
    for i in 0..l {
        for j in 0..l {
            if i == j {
                continue;
            }
            let a = m[(i, j)];
            if !(a >= 0.0) {
                return false;
            }
            if a == 0.0 {
                continue;
            }
            // zero-based i, j; the one-based formulas shift uniformly
            let cap_ln = if j < i {
                std::f64::consts::LN_2 + lf(i - j) - ln_diag[j + 1..i].iter().sum::<f64>()
            } else {
                std::f64::consts::LN_2 + lf(l - j + i) + ln_diag[i..=j].iter().sum::<f64>() - lf(l)
            };
            if a.ln() > cap_ln + 1e-12 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_permanent(m: &DMatrix<f64>) -> f64 {
        fn rec(m: &DMatrix<f64>, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == m.nrows() {
                return 1.0;
            }
            let mut s = 0.0;
            for c in 0..m.ncols() {
                if !used[c] {
                    used[c] = true;
                    s += m[(row, c)] * rec(m, row + 1, used);
                    used[c] = false;
                }
            }
            s
        }
        rec(m, 0, &mut vec![false; m.ncols()])
    }

    #[test]
    fn small_permanents() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(permanent(&m).unwrap(), 10.0);
        assert_eq!(permanent(&DMatrix::identity(3, 3)).unwrap(), 1.0);
        assert_eq!(permanent(&DMatrix::from_element(3, 3, 1.0)).unwrap(), 6.0);
        assert_eq!(permanent(&DMatrix::<f64>::zeros(0, 0)).unwrap(), 1.0);
    }

    #[test]
    fn matches_expansion_on_integer_matrices() {
        for l in 1..=6usize {
            let m = DMatrix::from_fn(l, l, |i, j| ((i * 7 + j * 3 + l) % 5) as f64 - 1.0);
            assert_eq!(permanent(&m).unwrap(), naive_permanent(&m));
        }
    }

    #[test]
    fn rejects_oversized_and_rectangular() {
        assert!(matches!(
            permanent(&DMatrix::identity(21, 21)),
            Err(Error::OrderTooLarge { .. })
        ));
        assert!(permanent(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn identity_satisfies_bound() {
        for l in 1..=10 {
            let c = permanent_bound_check(&DMatrix::identity(l, l)).unwrap();
            assert!(c.preconditions_met && c.within_bound && c.holds());
        }
    }

    #[test]
    fn zero_diagonal_is_vacuous() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]);
        let c = permanent_bound_check(&m).unwrap();
        assert!(!c.preconditions_met);
        assert!(c.holds());
    }

    #[test]
    fn extreme_corner_satisfies_bound() {
        // every off-diagonal entry at its cap, unit diagonal
        for l in 2..=6usize {
            let lf = |k: usize| log_f(k).unwrap();
            let m = DMatrix::from_fn(l, l, |i, j| {
                if i == j {
                    1.0
                } else if j < i {
                    2.0 * lf(i - j).exp()
                } else {
                    2.0 * (lf(l - j + i) - lf(l)).exp()
                }
            });
            let c = permanent_bound_check(&m).unwrap();
            assert!(c.preconditions_met, "l = {l}");
            assert!(c.within_bound, "l = {l}: {} > {}", c.permanent, c.bound);
        }
    }
}
