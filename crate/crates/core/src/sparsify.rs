//! Support restriction before local search: maximize the concave relaxation
//! `ln det(Σ x_i v_i v_iᵀ)` over the matroid base polytope with Frank–Wolfe,
//! then keep a spanning basis plus the heaviest coordinates.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::instance::Instance;
use crate::linalg::{GramState, Vector};
use crate::matroid::{intersection_basis_ordered, linear_matroid_intersection_basis, Matroid};

pub const DEFAULT_FW_ITERS: usize = 500;
/// Ridge added to the relaxation matrix, relative to `trace / d`.
pub const RIDGE_REL: f64 = 1e-8;
const BISECTION_STEPS: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relaxation {
    /// A point of the base polytope.
    pub x: Vec<f64>,
    /// `ln det(Σ x_i v_i v_iᵀ)` without the ridge.
    pub value_ln: f64,
    /// Ridged objective after each iteration, starting with the initial point.
    pub history: Vec<f64>,
    /// Frank–Wolfe duality gap at the last point.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sparsified {
    pub support: IndexSet,
    pub relaxation: Relaxation,
}

/// `r + d² + 3d`.
pub fn default_budget(instance: &Instance) -> usize {
    let d = instance.dim();
    instance.rank() + d * d + 3 * d
}

/// Frank–Wolfe on `g(x) = ln det(Σ x_i v_i v_iᵀ + δI)` over the base polytope,
/// starting from a spanning basis.
///
/// The linear maximization oracle is the matroid greedy algorithm on the
/// gradient `∇g_i = v_iᵀ M_x⁻¹ v_i`; the step size is an exact line search,
/// so `g` never decreases.
pub fn frank_wolfe_relax(instance: &Instance, iters: usize) -> Result<Relaxation> {
    let vectors = instance.vectors();
    let m = instance.matroid();
    let start = linear_matroid_intersection_basis(m, vectors)?.ok_or(Error::NoSpanningBasis)?;
    let d = instance.dim();
    let trace: f64 = vectors.iter().map(|v| v.norm_squared()).sum();
    let ridge = DMatrix::<f64>::identity(d, d) * (RIDGE_REL * trace / d as f64);

    let mut x = vec![0.0; instance.n()];
    for e in &start {
        x[e] = 1.0;
    }
    let mut mx = weighted_gram(vectors, &x) + &ridge;
    let mut state = GramState::from_gram(d, Vec::new(), mx.clone());
    let mut history = vec![state.log_det()];
    let mut gap = f64::INFINITY;

    for _ in 0..iters {
        let inv = state.inv()?.clone();
        let grad: Vec<f64> = vectors.iter().map(|v| v.dot(&(&inv * v))).collect();
        let vertex = greedy_max_basis(m, &grad)?;
        let mut s = vec![0.0; x.len()];
        for e in &vertex {
            s[e] = 1.0;
        }
        // D = Σ (s_i - x_i) v_i v_iᵀ and g'(0) = tr(M⁻¹ D)
        let dir = weighted_gram(vectors, &s) - weighted_gram(vectors, &x);
        gap = (&inv * &dir).trace();
        if gap <= 1e-12 * d as f64 {
            break;
        }
        let gamma = line_search(&mx, &dir);
        if gamma <= 0.0 {
            break;
        }
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi = (1.0 - gamma) * *xi + gamma * si;
        }
        mx = weighted_gram(vectors, &x) + &ridge;
        state = GramState::from_gram(d, Vec::new(), mx.clone());
        if state.is_singular() {
            return Err(Error::Postcondition(
                "relaxation matrix became singular".into(),
            ));
        }
        history.push(state.log_det());
    }

    let value_ln = GramState::from_gram(d, Vec::new(), weighted_gram(vectors, &x)).log_det();
    Ok(Relaxation {
        x,
        value_ln,
        history,
        gap,
    })
}

fn weighted_gram(vectors: &[Vector], x: &[f64]) -> DMatrix<f64> {
    let d = vectors[0].len();
    let mut m = DMatrix::zeros(d, d);
    for (v, &w) in vectors.iter().zip(x) {
        if w != 0.0 {
            m.ger(w, v, v, 1.0);
        }
    }
    m
}

/// Maximizer over `[0, 1]` of the concave `γ ↦ ln det(M + γD)`, by bisection
/// on its derivative `tr((M + γD)⁻¹ D)`.
fn line_search(m: &DMatrix<f64>, dir: &DMatrix<f64>) -> f64 {
    let slope = |gamma: f64| -> Option<f64> {
        let inv = (m + dir * gamma).try_inverse()?;
        Some((inv * dir).trace())
    };
    match slope(1.0) {
        Some(s) if s >= 0.0 => return 1.0,
        _ => {}
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        match slope(mid) {
            Some(s) if s > 0.0 => lo = mid,
            _ => hi = mid,
        }
    }
    lo
}

/// Maximum-weight basis: greedy in decreasing weight, ties by index.
pub fn greedy_max_basis(m: &Matroid, weights: &[f64]) -> Result<IndexSet> {
    let mut order: Vec<usize> = m.elements().iter().collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    m.extend_in_order(&IndexSet::new(), &order)
}

/// A spanning basis chosen greedily by decreasing `x`, topped up with the
/// largest remaining coordinates until `budget` elements are kept.
pub fn select_support(instance: &Instance, x: &[f64], budget: usize) -> Result<IndexSet> {
    let r = instance.rank();
    if budget < r {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} below rank {r}"
        )));
    }
    if x.len() != instance.n() {
        return Err(Error::DimensionMismatch {
            expected: instance.n(),
            found: x.len(),
        });
    }
    let m = instance.matroid();
    let elements = m.elements();
    if elements.len() <= budget {
        return Ok(elements);
    }
    let mut order: Vec<usize> = elements.iter().collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));

    let mut support = match intersection_basis_ordered(m, instance.vectors(), &order)? {
        Some(b) => b,
        None => m.extend_in_order(&IndexSet::new(), &order)?,
    };
    for &e in &order {
        if support.len() >= budget {
            break;
        }
        support.insert(e);
    }
    Ok(support)
}

/// Relaxation followed by support selection at the default budget; `None`
/// when no basis spans `R^d`.
pub fn sparsify(instance: &Instance, iters: usize) -> Result<Option<Sparsified>> {
    let relaxation = match frank_wolfe_relax(instance, iters) {
        Ok(r) => r,
        Err(Error::NoSpanningBasis) => return Ok(None),
        Err(e) => return Err(e),
    };
    let support = select_support(instance, &relaxation.x, default_budget(instance))?;
    Ok(Some(Sparsified {
        support,
        relaxation,
    }))
}
