use std::collections::VecDeque;

use super::Matroid;
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::linalg::{common_dim, is_linearly_independent, Vector};

/// A basis of `m` whose vectors span `R^d`, or `None` when no such basis exists.
///
/// Grows a maximum common independent set of `m` and the linear matroid of
/// `vectors` by shortest augmenting paths, then extends it to a basis of `m`.
/// Elements are considered in ascending index order.
pub fn linear_matroid_intersection_basis(
    m: &Matroid,
    vectors: &[Vector],
) -> Result<Option<IndexSet>> {
    let order: Vec<usize> = m.elements().iter().collect();
    intersection_basis_ordered(m, vectors, &order)
}

/// Same as [`linear_matroid_intersection_basis`] with elements prioritized by
/// their position in `order`; elements missing from `order` are never used.
pub fn intersection_basis_ordered(
    m: &Matroid,
    vectors: &[Vector],
    order: &[usize],
) -> Result<Option<IndexSet>> {
    let d = common_dim(vectors)?;
    if vectors.len() != m.ground_size() {
        return Err(Error::InvalidInstance(format!(
            "{} vectors for a ground set of size {}",
            vectors.len(),
            m.ground_size()
        )));
    }
    let order: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&e| m.elements().contains(e))
        .collect();
    let linear_indep = |s: &IndexSet| {
        let vs: Vec<&Vector> = s.iter().map(|e| &vectors[e]).collect();
        is_linearly_independent(&vs)
    };

    let mut current = IndexSet::new();
    while current.len() < d {
        match augmenting_path(m, &linear_indep, &current, &order)? {
            Some(path) => {
                for e in path {
                    if !current.remove(e) {
                        current.insert(e);
                    }
                }
            }
            None => break,
        }
    }
    if current.len() < d {
        return Ok(None);
    }
    Ok(Some(m.extend_in_order(&current, &order)?))
}

/// Shortest path from `{x : I+x ∈ M}` to `{x : I+x ∈ L}` in the intersection
/// exchange graph, breadth-first in `order`.
fn augmenting_path(
    m: &Matroid,
    linear_indep: &impl Fn(&IndexSet) -> bool,
    current: &IndexSet,
    order: &[usize],
) -> Result<Option<Vec<usize>>> {
    let outside: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&e| !current.contains(e))
        .collect();
    let inside: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&e| current.contains(e))
        .collect();
    let mut sinks = vec![false; m.ground_size()];
    for &x in &outside {
        sinks[x] = linear_indep(&current.with(x));
    }

    let mut prev: Vec<Option<usize>> = vec![None; m.ground_size()];
    let mut seen = vec![false; m.ground_size()];
    let mut queue = VecDeque::new();
    for &x in &outside {
        if m.is_independent(&current.with(x))? {
            seen[x] = true;
            queue.push_back(x);
        }
    }
    while let Some(a) = queue.pop_front() {
        if !current.contains(a) && sinks[a] {
            let mut path = vec![a];
            let mut cur = a;
            while let Some(p) = prev[cur] {
                path.push(p);
                cur = p;
            }
            return Ok(Some(path));
        }
        if current.contains(a) {
            // y -> x when I - y + x ∈ M
            for &x in &outside {
                if !seen[x] && m.is_independent(&current.exchange(a, x))? {
                    seen[x] = true;
                    prev[x] = Some(a);
                    queue.push_back(x);
                }
            }
        } else {
            // x -> y when I - y + x ∈ L
            for &y in &inside {
                if !seen[y] && linear_indep(&current.exchange(y, a)) {
                    seen[y] = true;
                    prev[y] = Some(a);
                    queue.push_back(y);
                }
            }
        }
    }
    Ok(None)
}
