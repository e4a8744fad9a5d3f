use nalgebra::{DMatrix, DVector, Matrix2};

use super::{ldlt, rank_threshold, Vector};
use crate::error::{Error, Result};

/// Woodbury updates between full refactorizations.
const REFACTOR_EVERY: usize = 50;
/// Frobenius drift of `inv * gram - I` that forces a refactorization.
const DRIFT_TOL: f64 = 1e-6;
/// Swap ratios at or below this value are treated as producing a singular Gram.
pub const SWAP_EPS: f64 = 1e-9;
/// Negative swap ratios above `-NEG_SLACK` are rounding noise.
const NEG_SLACK: f64 = 1e-9;

/// The Gram matrix `M = Σ_{i∈S} v_i v_iᵀ` of a member multiset with its
/// cached inverse and natural-log determinant.
///
/// A singular state carries `log_det = -∞` and no inverse; every inner
/// product query on it fails with [`Error::Singular`].
#[derive(Clone, Debug)]
pub struct GramState {
    dim: usize,
    members: Vec<usize>,
    gram: DMatrix<f64>,
    inv: Option<DMatrix<f64>>,
    log_det: f64,
    swaps_since_refactor: usize,
}

impl GramState {
    /// Builds the Gram matrix of `members` (indices into `vectors`, repeats allowed).
    pub fn build(vectors: &[Vector], members: &[usize]) -> Result<Self> {
        let dim = common_dim(vectors)?;
        let mut gram = DMatrix::zeros(dim, dim);
        for &i in members {
            let v = vectors.get(i).ok_or(Error::IndexOutOfRange {
                index: i,
                size: vectors.len(),
            })?;
            gram.ger(1.0, v, v, 1.0);
        }
        Ok(Self::from_gram(dim, members.to_vec(), gram))
    }

    /// Builds a state from an explicit symmetric matrix. `members` is only bookkeeping.
    pub fn from_gram(dim: usize, members: Vec<usize>, gram: DMatrix<f64>) -> Self {
        let (inv, log_det) = factor(&gram);
        Self {
            dim,
            members,
            gram,
            inv,
            log_det,
            swaps_since_refactor: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn is_singular(&self) -> bool {
        self.inv.is_none()
    }

    pub fn inv(&self) -> Result<&DMatrix<f64>> {
        self.inv.as_ref().ok_or(Error::Singular)
    }

    fn check_dim(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `⟨u, v⟩_S = uᵀ M⁻¹ v`.
    pub fn inner_s(&self, u: &Vector, v: &Vector) -> Result<f64> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        let inv = self.inv()?;
        Ok(u.dot(&(inv * v)))
    }

    /// `‖u‖_S² = uᵀ M⁻¹ u`, clamped at zero.
    pub fn norm_s_sq(&self, u: &Vector) -> Result<f64> {
        Ok(self.inner_s(u, u)?.max(0.0))
    }

    /// `det(M - vvᵀ + uuᵀ) / det(M)` via `⟨u,v⟩² + (1+‖u‖²)(1-‖v‖²)`.
    pub fn swap_ratio(&self, u: &Vector, v: &Vector) -> Result<f64> {
        let ip = self.inner_s(u, v)?;
        let nu = self.inner_s(u, u)?;
        let nv = self.inner_s(v, v)?;
        let r = ip * ip + (1.0 + nu) * (1.0 - nv);
        Ok(if r < 0.0 && r > -NEG_SLACK { 0.0 } else { r })
    }

    /// `det(M + Σ_add uuᵀ - Σ_remove vvᵀ) / det(M)` through the 2ℓ×2ℓ block
    /// determinant of the matrix determinant lemma.
    pub fn det_update_ratio(&self, add: &[Vector], remove: &[Vector]) -> Result<f64> {
        if add.len() != remove.len() {
            return Err(Error::InvalidArgument(format!(
                "add has {} vectors but remove has {}",
                add.len(),
                remove.len()
            )));
        }
        let l = add.len();
        let inv = self.inv()?;
        for v in add.iter().chain(remove) {
            self.check_dim(v)?;
        }
        let cols: Vec<&Vector> = add.iter().chain(remove).collect();
        let mut block = DMatrix::<f64>::identity(2 * l, 2 * l);
        for (i, a) in cols.iter().enumerate() {
            let inv_a = inv * *a;
            for (j, b) in cols.iter().enumerate() {
                let sign = if j < l { 1.0 } else { -1.0 };
                block[(i, j)] += sign * b.dot(&inv_a);
            }
        }
        Ok(block.determinant())
    }

    /// Replaces member `remove` by `add` with a rank-2 Woodbury update of the inverse.
    ///
    /// The inverse is refactored from scratch every 50 swaps, or earlier when
    /// `inv * gram` drifts from the identity by more than 1e-6 (Frobenius).
    pub fn swap(&self, vectors: &[Vector], add: usize, remove: usize) -> Result<GramState> {
        let pos = self
            .members
            .iter()
            .position(|&m| m == remove)
            .ok_or_else(|| Error::InvalidArgument(format!("{remove} is not a member")))?;
        if add == remove {
            return Ok(self.clone());
        }
        let u = vectors.get(add).ok_or(Error::IndexOutOfRange {
            index: add,
            size: vectors.len(),
        })?;
        let v = &vectors[remove];
        let mut next = self.woodbury_swap(u, v)?;
        next.members[pos] = add;
        Ok(next)
    }

    /// Gram state for `M - vvᵀ + uuᵀ`; member bookkeeping is left untouched.
    pub fn woodbury_swap(&self, u: &Vector, v: &Vector) -> Result<GramState> {
        let inv = self.inv()?;
        self.check_dim(u)?;
        self.check_dim(v)?;
        let inv_u = inv * u;
        let inv_v = inv * v;
        let nu = u.dot(&inv_u);
        let nv = v.dot(&inv_v);
        let ip = u.dot(&inv_v);
        let k = Matrix2::new(1.0 + nu, -ip, ip, 1.0 - nv);
        let ratio = k.determinant();
        if ratio <= SWAP_EPS {
            return Err(Error::Singular);
        }
        let k_inv = k.try_inverse().ok_or(Error::Singular)?;

        // inv' = inv - inv [u, -v] K⁻¹ [u, v]ᵀ inv
        let left = [&inv_u, &(-&inv_v)];
        let right = [&inv_u, &inv_v];
        let mut new_inv = inv.clone();
        for a in 0..2 {
            for b in 0..2 {
                new_inv.ger(-k_inv[(a, b)], left[a], right[b], 1.0);
            }
        }
        symmetrize(&mut new_inv);

        let mut gram = self.gram.clone();
        gram.ger(1.0, u, u, 1.0);
        gram.ger(-1.0, v, v, 1.0);

        let mut next = GramState {
            dim: self.dim,
            members: self.members.clone(),
            gram,
            inv: Some(new_inv),
            log_det: self.log_det + ratio.ln(),
            swaps_since_refactor: self.swaps_since_refactor + 1,
        };
        if next.swaps_since_refactor >= REFACTOR_EVERY || next.drift() > DRIFT_TOL {
            next.refactor();
        }
        Ok(next)
    }

    /// Frobenius norm of `inv * gram - I`; infinite for singular states.
    pub fn drift(&self) -> f64 {
        match &self.inv {
            Some(inv) => (inv * &self.gram - DMatrix::identity(self.dim, self.dim)).norm(),
            None => f64::INFINITY,
        }
    }

    /// Recomputes the inverse and log-determinant from the stored Gram.
    pub fn refactor(&mut self) {
        let (inv, log_det) = factor(&self.gram);
        self.inv = inv;
        self.log_det = log_det;
        self.swaps_since_refactor = 0;
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn factor(gram: &DMatrix<f64>) -> (Option<DMatrix<f64>>, f64) {
    let Some(threshold) = rank_threshold(gram) else {
        return (None, f64::NEG_INFINITY);
    };
    let Some((l, d)) = ldlt(gram, threshold) else {
        return (None, f64::NEG_INFINITY);
    };
    let n = gram.nrows();
    let log_det = d.iter().map(|p| p.ln()).sum();
    let mut inv = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut e = DVector::zeros(n);
        e[col] = 1.0;
        let x = ldlt_solve(&l, &d, e);
        inv.set_column(col, &x);
    }
    symmetrize(&mut inv);
    (Some(inv), log_det)
}

fn ldlt_solve(l: &DMatrix<f64>, d: &DVector<f64>, mut b: DVector<f64>) -> DVector<f64> {
    let n = b.len();
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[(i, k)] * b[k]).sum();
        b[i] -= s;
    }
    for i in 0..n {
        b[i] /= d[i];
    }
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l[(k, i)] * b[k]).sum();
        b[i] -= s;
    }
    b
}

pub(crate) fn common_dim(vectors: &[Vector]) -> Result<usize> {
    let Some(first) = vectors.first() else {
        return Err(Error::InvalidInstance("no vectors".into()));
    };
    let dim = first.len();
    if dim == 0 {
        return Err(Error::InvalidInstance("dimension must be positive".into()));
    }
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    Ok(dim)
}
