//! Reductions of Nash social welfare, D-optimal design and network design to
//! determinant maximization, with their native objective functions.

use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::instance::Instance;
use crate::linalg::Vector;
use crate::matroid::{Matroid, UnionFind};

/// Largest graph [`spanning_tree_count`] accepts.
pub const TREE_COUNT_MAX_VERTICES: usize = 12;

fn check_valuations(valuations: &[Vec<f64>]) -> Result<(usize, usize)> {
    let d = valuations.len();
    if d == 0 {
        return Err(Error::InvalidInstance("no players".into()));
    }
    let m = valuations[0].len();
    for row in valuations {
        if row.len() != m {
            return Err(Error::InvalidInstance("ragged valuation matrix".into()));
        }
        if let Some(u) = row.iter().find(|u| !(u.is_finite() && **u >= 0.0)) {
            return Err(Error::InvalidInstance(format!("invalid valuation {u}")));
        }
    }
    Ok((d, m))
}

/// Element of player `i` receiving item `j` among `d` players.
pub fn nsw_element(d: usize, player: usize, item: usize) -> usize {
    item * d + player
}

/// `valuations[i][j]` is player `i`'s value for item `j`. Element `j·d + i`
/// carries `√u_i(j) · e_i`; each item is a part of capacity one.
pub fn nsw_instance(valuations: &[Vec<f64>]) -> Result<Instance> {
    let (d, m) = check_valuations(valuations)?;
    if m == 0 {
        return Err(Error::InvalidInstance("no items".into()));
    }
    let mut vectors = Vec::with_capacity(d * m);
    let mut parts = Vec::with_capacity(d * m);
    for j in 0..m {
        for (i, row) in valuations.iter().enumerate() {
            let mut v = Vector::zeros(d);
            v[i] = row[j].sqrt();
            vectors.push(v);
            parts.push(j);
        }
    }
    Instance::new(vectors, Matroid::partition(parts, vec![1; m])?)
}

/// Basis of the reduction corresponding to `allocation[j]` = owner of item `j`.
pub fn nsw_allocation_set(d: usize, allocation: &[usize]) -> Result<IndexSet> {
    allocation
        .iter()
        .enumerate()
        .map(|(j, &i)| {
            if i >= d {
                Err(Error::InvalidArgument(format!(
                    "item {j} assigned to unknown player {i}"
                )))
            } else {
                Ok(nsw_element(d, i, j))
            }
        })
        .collect()
}

/// Geometric mean of the players' bundle values.
pub fn nsw_value(valuations: &[Vec<f64>], allocation: &[usize]) -> Result<f64> {
    let (d, m) = check_valuations(valuations)?;
    if allocation.len() != m {
        return Err(Error::InvalidArgument(format!(
            "{} of {m} items assigned",
            allocation.len()
        )));
    }
    let mut bundles = vec![0.0; d];
    for (j, &i) in allocation.iter().enumerate() {
        if i >= d {
            return Err(Error::InvalidArgument(format!(
                "item {j} assigned to unknown player {i}"
            )));
        }
        bundles[i] += valuations[i][j];
    }
    if bundles.contains(&0.0) {
        return Ok(0.0);
    }
    let mean_log = bundles.iter().map(|b| b.ln()).sum::<f64>() / d as f64;
    Ok(mean_log.exp())
}

/// D-optimal design is already in determinant form.
pub fn dopt_instance(candidates: Vec<Vector>, matroid: Matroid) -> Result<Instance> {
    Instance::new(candidates, matroid)
}

/// An undirected multigraph on vertices `0..vertex_count`.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(a, b)) = edges
            .iter()
            .find(|(a, b)| *a >= vertex_count || *b >= vertex_count)
        {
            return Err(Error::InvalidInstance(format!(
                "edge ({a}, {b}) outside {vertex_count} vertices"
            )));
        }
        Ok(Self {
            vertex_count,
            edges,
        })
    }

    pub fn is_connected_by(&self, subset: &IndexSet) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        let mut uf = UnionFind::new(self.vertex_count);
        let mut components = self.vertex_count;
        for e in subset {
            let (a, b) = self.edges[e];
            if uf.union(a, b) {
                components -= 1;
            }
        }
        components == 1
    }

    pub fn all_edges(&self) -> IndexSet {
        (0..self.edges.len()).collect()
    }

    /// Columns of the incidence matrix with edges oriented from the lower to
    /// the higher vertex and the row of the highest vertex dropped.
    pub fn reduced_incidence(&self) -> Vec<Vector> {
        let d = self.vertex_count - 1;
        self.edges
            .iter()
            .map(|&(a, b)| {
                let (lo, hi) = (a.min(b), a.max(b));
                let mut v = Vector::zeros(d);
                if lo != hi {
                    if lo < d {
                        v[lo] += 1.0;
                    }
                    if hi < d {
                        v[hi] -= 1.0;
                    }
                }
                v
            })
            .collect()
    }
}

/// Network design: `det(Σ_{e∈F} b_e b_eᵀ)` counts the spanning trees of `(V, F)`.
pub fn network_instance(graph: &Graph, matroid: Matroid) -> Result<Instance> {
    if graph.vertex_count < 2 {
        return Err(Error::InvalidInstance("need at least two vertices".into()));
    }
    if !graph.is_connected_by(&graph.all_edges()) {
        return Err(Error::Disconnected);
    }
    Instance::new(graph.reduced_incidence(), matroid)
}

/// Number of spanning trees of `(V, edges[subset])`, by backtracking.
pub fn spanning_tree_count(graph: &Graph, subset: &IndexSet) -> Result<u64> {
    if graph.vertex_count > TREE_COUNT_MAX_VERTICES {
        return Err(Error::GuardExceeded(format!(
            "spanning tree enumeration on {} vertices (cap {TREE_COUNT_MAX_VERTICES})",
            graph.vertex_count
        )));
    }
    if let Some(max) = subset.max() {
        if max >= graph.edges.len() {
            return Err(Error::IndexOutOfRange {
                index: max,
                size: graph.edges.len(),
            });
        }
    }
    if graph.vertex_count <= 1 {
        return Ok(1);
    }
    let edges: Vec<(usize, usize)> = subset.iter().map(|e| graph.edges[e]).collect();
    let mut comp: Vec<usize> = (0..graph.vertex_count).collect();
    Ok(count_trees(&edges, 0, graph.vertex_count - 1, &mut comp))
}

/// Counts forests extending the current one by `needed` edges from `edges[from..]`.
fn count_trees(edges: &[(usize, usize)], from: usize, needed: usize, comp: &mut [usize]) -> u64 {
    if needed == 0 {
        return 1;
    }
    if edges.len() - from < needed {
        return 0;
    }
    let mut total = 0;
    for k in from..edges.len() {
        if edges.len() - k < needed {
            break;
        }
        let (a, b) = edges[k];
        let (ca, cb) = (comp[a], comp[b]);
        if ca == cb {
            continue;
        }
        let saved = comp.to_vec();
        for c in comp.iter_mut() {
            if *c == cb {
                *c = ca;
            }
        }
        total += count_trees(edges, k + 1, needed - 1, comp);
        comp.copy_from_slice(&saved);
    }
    total
}
