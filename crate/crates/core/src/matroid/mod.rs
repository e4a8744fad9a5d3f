//! Matroid independence oracles and basis exchange machinery.
//!
//! All tie-breaking is by ascending element index.

mod intersection;

use std::collections::BTreeMap;

pub use intersection::{intersection_basis_ordered, linear_matroid_intersection_basis};

use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::linalg::{is_linearly_independent, Vector};

/// A matroid over the ground set `0..ground_size()`.
#[derive(Clone, Debug, PartialEq)]
pub enum Matroid {
    /// Sets of size at most `rank`.
    Uniform { ground: usize, rank: usize },
    /// `parts[e]` is the part of element `e`; at most `capacities[p]` elements per part.
    Partition {
        parts: Vec<usize>,
        capacities: Vec<usize>,
    },
    /// Forests of a multigraph; element `e` is the edge `edges[e]`.
    Graphic {
        vertices: Vec<String>,
        edges: Vec<(usize, usize)>,
    },
    /// Linearly independent subfamilies of `vectors`.
    Linear { vectors: Vec<Vector> },
    /// `inner` restricted to the elements of `support`.
    Restriction {
        inner: Box<Matroid>,
        support: IndexSet,
    },
}

impl Matroid {
    pub fn uniform(ground: usize, rank: usize) -> Self {
        Matroid::Uniform { ground, rank }
    }

    pub fn partition(parts: Vec<usize>, capacities: Vec<usize>) -> Result<Self> {
        let m = Matroid::Partition { parts, capacities };
        m.validate()?;
        Ok(m)
    }

    pub fn graphic(vertices: Vec<String>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let m = Matroid::Graphic { vertices, edges };
        m.validate()?;
        Ok(m)
    }

    /// Graphic matroid on vertices named `"0".."n-1"`.
    pub fn graphic_indexed(vertex_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::graphic((0..vertex_count).map(|v| v.to_string()).collect(), edges)
    }

    pub fn restrict(self, support: IndexSet) -> Result<Self> {
        let m = Matroid::Restriction {
            inner: Box::new(self),
            support,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Matroid::Uniform { .. } => Ok(()),
            Matroid::Partition { parts, capacities } => {
                if let Some(&p) = parts.iter().find(|&&p| p >= capacities.len()) {
                    return Err(Error::InvalidMatroid(format!(
                        "part {p} has no capacity (only {} parts declared)",
                        capacities.len()
                    )));
                }
                Ok(())
            }
            Matroid::Graphic { vertices, edges } => {
                for &(a, b) in edges {
                    if a >= vertices.len() || b >= vertices.len() {
                        return Err(Error::InvalidMatroid(format!(
                            "edge ({a}, {b}) references an undeclared vertex"
                        )));
                    }
                }
                Ok(())
            }
            Matroid::Linear { vectors } => {
                if !vectors.is_empty() {
                    crate::linalg::common_dim(vectors)?;
                }
                Ok(())
            }
            Matroid::Restriction { inner, support } => {
                inner.validate()?;
                if let Some(max) = support.max() {
                    if max >= inner.ground_size() {
                        return Err(Error::InvalidMatroid(format!(
                            "support element {max} outside ground set of size {}",
                            inner.ground_size()
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn ground_size(&self) -> usize {
        match self {
            Matroid::Uniform { ground, .. } => *ground,
            Matroid::Partition { parts, .. } => parts.len(),
            Matroid::Graphic { edges, .. } => edges.len(),
            Matroid::Linear { vectors } => vectors.len(),
            Matroid::Restriction { inner, .. } => inner.ground_size(),
        }
    }

    /// Elements that may appear in an independent set.
    pub fn elements(&self) -> IndexSet {
        match self {
            Matroid::Restriction { inner, support } => inner.elements().intersection(support),
            _ => (0..self.ground_size()).collect(),
        }
    }

    fn check_range(&self, s: &IndexSet) -> Result<()> {
        match s.max() {
            Some(max) if max >= self.ground_size() => Err(Error::IndexOutOfRange {
                index: max,
                size: self.ground_size(),
            }),
            _ => Ok(()),
        }
    }

    pub fn is_independent(&self, s: &IndexSet) -> Result<bool> {
        self.check_range(s)?;
        Ok(self.independent_unchecked(s))
    }

    fn independent_unchecked(&self, s: &IndexSet) -> bool {
        match self {
            Matroid::Uniform { rank, .. } => s.len() <= *rank,
            Matroid::Partition { parts, capacities } => {
                let mut counts = vec![0usize; capacities.len()];
                for e in s {
                    let p = parts[e];
                    counts[p] += 1;
                    if counts[p] > capacities[p] {
                        return false;
                    }
                }
                true
            }
            Matroid::Graphic { vertices, edges } => {
                let mut uf = UnionFind::new(vertices.len());
                s.iter().all(|e| {
                    let (a, b) = edges[e];
                    uf.union(a, b)
                })
            }
            Matroid::Linear { vectors } => {
                let vs: Vec<&Vector> = s.iter().map(|e| &vectors[e]).collect();
                is_linearly_independent(&vs)
            }
            Matroid::Restriction { inner, support } => {
                s.is_subset(support) && inner.independent_unchecked(s)
            }
        }
    }

    /// Size of a maximum independent subset of `s`, found greedily.
    pub fn rank(&self, s: &IndexSet) -> Result<usize> {
        self.check_range(s)?;
        let mut acc = IndexSet::new();
        for e in s {
            let next = acc.with(e);
            if self.independent_unchecked(&next) {
                acc = next;
            }
        }
        Ok(acc.len())
    }

    /// Rank of the whole matroid.
    pub fn full_rank(&self) -> usize {
        self.rank(&self.elements()).expect("elements are in range")
    }

    pub fn is_basis(&self, s: &IndexSet) -> Result<bool> {
        Ok(self.is_independent(s)? && s.len() == self.full_rank())
    }

    /// Greedily augments `s` with elements of `pool` in ascending order to a
    /// basis of the matroid restricted to `pool`.
    pub fn extend_to_basis(&self, s: &IndexSet, pool: &IndexSet) -> Result<IndexSet> {
        self.extend_in_order(s, pool.as_slice())
    }

    pub(crate) fn extend_in_order(&self, s: &IndexSet, order: &[usize]) -> Result<IndexSet> {
        if !self.is_independent(s)? {
            return Err(Error::NotIndependent);
        }
        let pool: IndexSet = order.iter().copied().collect();
        self.check_range(&pool)?;
        if !s.is_subset(&pool) {
            return Err(Error::InvalidArgument("pool must contain the set".into()));
        }
        let mut acc = s.clone();
        for &e in order {
            if acc.contains(e) {
                continue;
            }
            let next = acc.with(e);
            if self.independent_unchecked(&next) {
                acc = next;
            }
        }
        Ok(acc)
    }

    /// A bijection `h: s → t` with `h(x) = x` on `s ∩ t` and `s - x + h(x)` a
    /// basis for every `x ∈ s \ t`.
    ///
    /// Realized as the lexicographically first perfect matching of the
    /// exchangeability graph between `s \ t` and `t \ s`.
    pub fn basis_exchange_bijection(
        &self,
        s: &IndexSet,
        t: &IndexSet,
    ) -> Result<BTreeMap<usize, usize>> {
        if !self.is_basis(s)? || !self.is_basis(t)? {
            return Err(Error::NotBasis);
        }
        let left: Vec<usize> = s.difference(t).iter().collect();
        let right: Vec<usize> = t.difference(s).iter().collect();
        let adj: Vec<Vec<usize>> = left
            .iter()
            .map(|&x| {
                (0..right.len())
                    .filter(|&j| self.independent_unchecked(&s.exchange(x, right[j])))
                    .collect()
            })
            .collect();

        let mut fixed: Vec<Option<usize>> = vec![None; left.len()];
        for i in 0..left.len() {
            let choice = adj[i].iter().copied().find(|&j| {
                let taken = fixed[..i].contains(&Some(j));
                if taken {
                    return false;
                }
                fixed[i] = Some(j);
                let ok = has_perfect_matching(&adj, &fixed);
                fixed[i] = None;
                ok
            });
            match choice {
                Some(j) => fixed[i] = Some(j),
                None => {
                    return Err(Error::Postcondition(
                        "no exchange bijection between bases".into(),
                    ))
                }
            }
        }

        let mut h: BTreeMap<usize, usize> = s.intersection(t).iter().map(|x| (x, x)).collect();
        for (i, j) in fixed.into_iter().enumerate() {
            h.insert(left[i], right[j.expect("assigned")]);
        }
        Ok(h)
    }
}

/// Perfect matching test (Kuhn) with some left vertices pinned.
fn has_perfect_matching(adj: &[Vec<usize>], fixed: &[Option<usize>]) -> bool {
    let n = adj.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (i, f) in fixed.iter().enumerate() {
        if let Some(j) = *f {
            owner[j] = Some(i);
        }
    }
    fn try_assign(
        i: usize,
        adj: &[Vec<usize>],
        fixed: &[Option<usize>],
        owner: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            let current = owner[j];
            match current {
                None => {
                    owner[j] = Some(i);
                    return true;
                }
                Some(k) if fixed[k].is_none() && try_assign(k, adj, fixed, owner, seen) => {
                    owner[j] = Some(i);
                    return true;
                }
                _ => {}
            }
        }
        false
    }
    for i in 0..n {
        if fixed[i].is_some() {
            continue;
        }
        let mut seen = vec![false; n];
        if !try_assign(i, adj, fixed, &mut owner, &mut seen) {
            return false;
        }
    }
    true
}

/// Disjoint-set forest with path compression and union by size.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Merges the classes of `a` and `b`; false if they were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Matroid {
        Matroid::graphic_indexed(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn independence_examples() {
        assert!(!Matroid::uniform(3, 2)
            .is_independent(&[0, 1, 2].into())
            .unwrap());
        let p = Matroid::partition(vec![0, 1, 1], vec![1, 1]).unwrap();
        assert!(!p.is_independent(&[1, 2].into()).unwrap());
        assert!(p.is_independent(&[0, 2].into()).unwrap());
        assert!(!triangle().is_independent(&[0, 1, 2].into()).unwrap());
        assert!(triangle().is_independent(&[0, 2].into()).unwrap());
    }

    #[test]
    fn out_of_range_is_an_error() {
        let m = Matroid::uniform(3, 2);
        assert_eq!(
            m.is_independent(&[5].into()),
            Err(Error::IndexOutOfRange { index: 5, size: 3 })
        );
        assert!(m.rank(&[3].into()).is_err());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Matroid::uniform(5, 3).rank(&[0, 1].into()).unwrap(), 2);
        assert_eq!(triangle().rank(&[0, 1, 2].into()).unwrap(), 2);
        assert_eq!(triangle().rank(&IndexSet::new()).unwrap(), 0);
    }

    #[test]
    fn self_loop_is_dependent() {
        let m = Matroid::graphic_indexed(2, vec![(0, 0), (0, 1)]).unwrap();
        assert!(!m.is_independent(&[0].into()).unwrap());
        assert_eq!(m.full_rank(), 1);
    }

    #[test]
    fn invalid_descriptions_rejected() {
        assert!(Matroid::partition(vec![0, 2], vec![1, 1]).is_err());
        assert!(Matroid::graphic_indexed(2, vec![(0, 2)]).is_err());
        assert!(Matroid::uniform(3, 1).restrict([0, 3].into()).is_err());
    }

    #[test]
    fn restriction_limits_elements() {
        let m = Matroid::uniform(4, 2).restrict([1, 3].into()).unwrap();
        assert_eq!(m.elements(), IndexSet::from([1, 3]));
        assert!(!m.is_independent(&[0].into()).unwrap());
        assert!(m.is_independent(&[1, 3].into()).unwrap());
        assert_eq!(m.full_rank(), 2);
    }

    #[test]
    fn extend_examples() {
        let u = Matroid::uniform(3, 2);
        let all = IndexSet::from([0, 1, 2]);
        assert_eq!(
            u.extend_to_basis(&[0].into(), &all).unwrap(),
            IndexSet::from([0, 1])
        );
        assert_eq!(
            u.extend_to_basis(&[1, 2].into(), &all).unwrap(),
            IndexSet::from([1, 2])
        );
        let p = Matroid::partition(vec![0, 0, 1], vec![1, 1]).unwrap();
        assert_eq!(
            p.extend_to_basis(&[1].into(), &all).unwrap(),
            IndexSet::from([1, 2])
        );
        assert_eq!(
            u.extend_to_basis(&[0, 1, 2].into(), &all),
            Err(Error::NotIndependent)
        );
    }

    #[test]
    fn exchange_bijection_examples() {
        let u = Matroid::uniform(4, 2);
        let s = IndexSet::from([0, 1]);
        let h = u.basis_exchange_bijection(&s, &s).unwrap();
        assert_eq!(h, BTreeMap::from([(0, 0), (1, 1)]));
        let h = u.basis_exchange_bijection(&s, &[2, 3].into()).unwrap();
        assert_eq!(h, BTreeMap::from([(0, 2), (1, 3)]));

        let p = Matroid::partition(vec![0, 1, 0, 1], vec![1, 1]).unwrap();
        let h = p.basis_exchange_bijection(&s, &[2, 3].into()).unwrap();
        assert_eq!(h, BTreeMap::from([(0, 2), (1, 3)]));

        assert_eq!(
            u.basis_exchange_bijection(&[0].into(), &s),
            Err(Error::NotBasis)
        );
    }

    #[test]
    fn exchange_bijection_needs_rematching() {
        // x=0 may only go to 3, so greedy assignment 0->2 must be rejected
        let p = Matroid::partition(vec![0, 1, 1, 0], vec![1, 1]).unwrap();
        let h = p
            .basis_exchange_bijection(&[0, 1].into(), &[2, 3].into())
            .unwrap();
        assert_eq!(h, BTreeMap::from([(0, 3), (1, 2)]));
    }
}
