//! The bipartite exchange graph between a basis `S` and its complement,
//! with log-domain arc weights, and the search for minimal f-violating cycles.

mod enumerate;
mod search;

use serde::Serialize;

pub use enumerate::{enumerate_cycles, ENUMERATION_CAP};
pub use search::find_min_f_violating_cycle;

use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::instance::Instance;
use crate::linalg::{GramState, SWAP_EPS};

/// A forward weight term below this fraction of the swap ratio is rounding
/// noise, and its arc is treated as absent.
const TERM_REL_EPS: f64 = 1e-12;

/// `ln f(i)` with `f(1) = 2` and `f(i) = (i!)^11` otherwise.
pub fn log_f(i: usize) -> Result<f64> {
    match i {
        0 => Err(Error::InvalidArgument("f is defined for i >= 1".into())),
        1 => Ok(std::f64::consts::LN_2),
        _ => Ok(11.0 * (2..=i).map(|k| (k as f64).ln()).sum::<f64>()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcKind {
    /// `v ∈ S` to `u ∉ S` when `S - v + u` is independent; weight 0.
    Backward,
    /// `u ∉ S` to `v ∈ S`, weight `-ln |⟨u,v⟩_S|`.
    Fwd1,
    /// `u ∉ S` to `v ∈ S`, weight `-½ ln((1+‖u‖_S²)(1-‖v‖_S²))`.
    Fwd2,
}

impl ArcKind {
    pub fn is_forward(self) -> bool {
        self != ArcKind::Backward
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub kind: ArcKind,
    pub weight: f64,
}

/// A simple closed walk alternating forward and backward arcs.
///
/// Stored in canonical rotation: the first arc is the forward arc with the
/// smallest source.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cycle {
    arcs: Vec<Arc>,
    weight: f64,
    vertex_set: IndexSet,
}

impl Cycle {
    /// Validates closure, simplicity and alternation, then canonicalizes.
    pub fn new(arcs: Vec<Arc>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("not a cycle: {msg}")));
        if arcs.is_empty() || !arcs.len().is_multiple_of(2) {
            return bad("length must be positive and even");
        }
        for (i, a) in arcs.iter().enumerate() {
            let next = &arcs[(i + 1) % arcs.len()];
            if a.to != next.from {
                return bad("arcs do not chain");
            }
            if a.kind.is_forward() == next.kind.is_forward() {
                return bad("arcs do not alternate");
            }
        }
        let vertex_set: IndexSet = arcs.iter().map(|a| a.from).collect();
        if vertex_set.len() != arcs.len() {
            return bad("repeated vertex");
        }
        let start = (0..arcs.len())
            .filter(|&i| arcs[i].kind.is_forward())
            .min_by_key(|&i| arcs[i].from)
            .expect("half the arcs are forward");
        let mut arcs = arcs;
        arcs.rotate_left(start);
        let weight = arcs.iter().map(|a| a.weight).sum();
        Ok(Self {
            arcs,
            weight,
            vertex_set,
        })
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn half_len(&self) -> usize {
        self.arcs.len() / 2
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn vertex_set(&self) -> &IndexSet {
        &self.vertex_set
    }

    /// Elements entering the basis (sources of forward arcs).
    pub fn entering(&self) -> IndexSet {
        self.forward_arcs().map(|a| a.from).collect()
    }

    /// Elements leaving the basis (targets of forward arcs).
    pub fn leaving(&self) -> IndexSet {
        self.forward_arcs().map(|a| a.to).collect()
    }

    pub fn forward_arcs(&self) -> impl Iterator<Item = &Arc> {
        self.arcs.iter().filter(|a| a.kind.is_forward())
    }

    pub fn fwd2_count(&self) -> usize {
        self.arcs.iter().filter(|a| a.kind == ArcKind::Fwd2).count()
    }

    /// `w(C) + ln f(|C|/2)`; negative exactly when the cycle is f-violating.
    pub fn margin(&self) -> f64 {
        self.weight + log_f(self.half_len()).expect("half length is positive")
    }

    pub fn is_f_violating(&self) -> bool {
        self.margin() < 0.0
    }

    /// `S △ V(C)`.
    pub fn apply(&self, s: &IndexSet) -> IndexSet {
        s.symmetric_difference(&self.vertex_set)
    }
}

/// `w < -ln f(half_len)`.
pub fn is_f_violating(weight: f64, half_len: usize) -> Result<bool> {
    Ok(weight < -log_f(half_len)?)
}

/// The exchange graph `G(S)` of a basis with nonsingular Gram matrix.
///
/// Vertices are the matroid's usable elements; arcs with infinite weight are
/// omitted.
#[derive(Clone, Debug, Serialize)]
pub struct ExchangeGraph {
    basis: IndexSet,
    vertices: Vec<usize>,
    arcs: Vec<Arc>,
    #[serde(skip)]
    out: Vec<Vec<usize>>,
    #[serde(skip)]
    local: Vec<Option<usize>>,
}

impl ExchangeGraph {
    pub fn build(instance: &Instance, s: &IndexSet, gram: &GramState) -> Result<Self> {
        let m = instance.matroid();
        if !m.is_basis(s)? {
            return Err(Error::NotBasis);
        }
        if gram.is_singular() {
            return Err(Error::Singular);
        }
        if gram.dim() != instance.dim() {
            return Err(Error::DimensionMismatch {
                expected: instance.dim(),
                found: gram.dim(),
            });
        }
        let elements = m.elements();
        let outside = elements.difference(s);

        let mut arcs = Vec::new();
        let norms: Vec<f64> = elements
            .iter()
            .map(|e| gram.norm_s_sq(instance.vector(e)))
            .collect::<Result<_>>()?;
        let norm_of = |e: usize| norms[elements.as_slice().binary_search(&e).unwrap()];

        for u in &outside {
            let vu = instance.vector(u);
            let nu = norm_of(u);
            for v in s {
                let ip = gram.inner_s(vu, instance.vector(v))?;
                let t1 = ip * ip;
                let t2 = (1.0 + nu) * (1.0 - norm_of(v)).max(0.0);
                let ratio = t1 + t2;
                if !(ratio > SWAP_EPS) {
                    continue;
                }
                if t1 > TERM_REL_EPS * ratio {
                    arcs.push(Arc {
                        from: u,
                        to: v,
                        kind: ArcKind::Fwd1,
                        weight: -ip.abs().ln(),
                    });
                }
                if t2 > TERM_REL_EPS * ratio {
                    arcs.push(Arc {
                        from: u,
                        to: v,
                        kind: ArcKind::Fwd2,
                        weight: -0.5 * t2.ln(),
                    });
                }
            }
        }
        for v in s {
            for u in &outside {
                if m.is_independent(&s.exchange(v, u))? {
                    arcs.push(Arc {
                        from: v,
                        to: u,
                        kind: ArcKind::Backward,
                        weight: 0.0,
                    });
                }
            }
        }
        Ok(Self::from_parts(s.clone(), elements.iter().collect(), arcs))
    }

    fn from_parts(basis: IndexSet, vertices: Vec<usize>, arcs: Vec<Arc>) -> Self {
        let size = vertices.last().map_or(0, |&v| v + 1);
        let mut local = vec![None; size];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = Some(i);
        }
        let mut out = vec![Vec::new(); vertices.len()];
        for (k, a) in arcs.iter().enumerate() {
            out[local[a.from].expect("arc endpoint is a vertex")].push(k);
        }
        Self {
            basis,
            vertices,
            arcs,
            out,
            local,
        }
    }

    pub fn basis(&self) -> &IndexSet {
        &self.basis
    }

    /// Vertex ids (element indices), ascending.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arcs_from(&self, v: usize) -> impl Iterator<Item = &Arc> {
        let ids: &[usize] = match self.local_id(v) {
            Some(i) => &self.out[i],
            None => &[],
        };
        ids.iter().map(move |&k| &self.arcs[k])
    }

    pub fn arc(&self, from: usize, to: usize, kind: ArcKind) -> Option<&Arc> {
        self.arcs_from(from).find(|a| a.to == to && a.kind == kind)
    }

    pub(crate) fn local_id(&self, v: usize) -> Option<usize> {
        self.local.get(v).copied().flatten()
    }

    pub fn in_basis(&self, v: usize) -> bool {
        self.basis.contains(v)
    }

    /// Overwrites one arc weight. Only useful for fault-injection tests.
    pub fn set_weight(&mut self, arc_index: usize, weight: f64) -> Result<()> {
        let size = self.arcs.len();
        let arc = self.arcs.get_mut(arc_index).ok_or(Error::IndexOutOfRange {
            index: arc_index,
            size,
        })?;
        arc.weight = weight;
        Ok(())
    }

    /// `exp(-2 w₁) + exp(-2 w₂)` over the forward arcs `u → v`, absent arcs counting 0.
    pub fn forward_ratio(&self, u: usize, v: usize) -> f64 {
        self.arcs_from(u)
            .filter(|a| a.to == v && a.kind.is_forward())
            .map(|a| (-2.0 * a.weight).exp())
            .sum()
    }

    /// JSON adjacency document for debugging.
    pub fn to_json(&self) -> serde_json::Value {
        let vertices: Vec<serde_json::Value> = self
            .vertices
            .iter()
            .map(|&v| serde_json::json!({ "id": v, "in_basis": self.in_basis(v) }))
            .collect();
        serde_json::json!({
            "basis": self.basis,
            "vertices": vertices,
            "arcs": self.arcs,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::vector;
    use crate::matroid::Matroid;

    /// Parts {0},{1,2} with capacity 1; v0 = e1, v1 = e2, v2 = 10 e2.
    pub(crate) fn partition_example() -> (Instance, IndexSet, GramState) {
        let vs = vec![
            vector(&[1.0, 0.0]),
            vector(&[0.0, 1.0]),
            vector(&[0.0, 10.0]),
        ];
        let m = Matroid::partition(vec![0, 1, 1], vec![1, 1]).unwrap();
        let inst = Instance::new(vs, m).unwrap();
        let s = IndexSet::from([0, 1]);
        let g = inst.gram(&s).unwrap();
        (inst, s, g)
    }

    #[test]
    fn log_f_values() {
        assert!((log_f(1).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((log_f(2).unwrap() - 2048f64.ln()).abs() < 1e-12);
        assert!((log_f(2).unwrap() - 7.6246).abs() < 1e-4);
        assert!((log_f(4).unwrap() - 11.0 * 24f64.ln()).abs() < 1e-12);
        assert!((log_f(4).unwrap() - 34.9586).abs() < 1e-4);
        assert!(log_f(0).is_err());
    }

    #[test]
    fn f_is_super_multiplicative() {
        for a in 1..=20 {
            for b in 1..=20 {
                assert!(log_f(a).unwrap() + log_f(b).unwrap() <= log_f(a + b).unwrap());
            }
        }
    }

    #[test]
    fn violation_threshold() {
        assert!(is_f_violating(-(10f64.ln()), 1).unwrap());
        assert!(!is_f_violating(-(1.5f64.ln()), 1).unwrap());
        assert!(!is_f_violating(-(2000f64.ln()), 2).unwrap());
        assert!(is_f_violating(-(2049f64.ln()), 2).unwrap());
    }

    #[test]
    fn orthonormal_basis_has_no_fwd2_arcs() {
        let vs = vec![
            vector(&[1.0, 0.0]),
            vector(&[0.0, 1.0]),
            vector(&[1.0, 1.0]),
            vector(&[0.5, -2.0]),
        ];
        let inst = Instance::new(vs, Matroid::uniform(4, 2)).unwrap();
        let s = IndexSet::from([0, 1]);
        let g = ExchangeGraph::build(&inst, &s, &inst.gram(&s).unwrap()).unwrap();
        assert!(g.arcs().iter().all(|a| a.kind != ArcKind::Fwd2));
        assert!(g.arcs().iter().any(|a| a.kind == ArcKind::Fwd1));
    }

    #[test]
    fn partition_example_arcs() {
        let (inst, s, gram) = partition_example();
        let g = ExchangeGraph::build(&inst, &s, &gram).unwrap();
        assert!(g.arc(1, 2, ArcKind::Backward).is_some());
        assert!(g.arc(0, 2, ArcKind::Backward).is_none());
        let a = g.arc(2, 1, ArcKind::Fwd1).unwrap();
        assert!((a.weight + 10f64.ln()).abs() < 1e-12);
        // e2 is fully used by S, so the type-II term vanishes
        assert!(g.arc(2, 1, ArcKind::Fwd2).is_none());
        // swapping 10 e2 for e1 loses the first axis
        assert!(g.arc(2, 0, ArcKind::Fwd1).is_none());
        assert!(g.arc(2, 0, ArcKind::Fwd2).is_none());
    }

    #[test]
    fn zero_vector_has_no_forward_arcs_at_full_dimension() {
        let vs = vec![
            vector(&[1.0, 0.0]),
            vector(&[0.0, 1.0]),
            vector(&[0.0, 0.0]),
        ];
        let inst = Instance::new(vs, Matroid::uniform(3, 2)).unwrap();
        let s = IndexSet::from([0, 1]);
        let g = ExchangeGraph::build(&inst, &s, &inst.gram(&s).unwrap()).unwrap();
        assert_eq!(g.arcs_from(2).count(), 0);
        assert!(g
            .arcs()
            .iter()
            .any(|a| a.kind == ArcKind::Backward && a.to == 2));
    }

    #[test]
    fn build_rejects_non_basis_and_singular() {
        let (inst, _, gram) = partition_example();
        assert_eq!(
            ExchangeGraph::build(&inst, &[0].into(), &gram).unwrap_err(),
            Error::NotBasis
        );
        let vs = vec![
            vector(&[1.0, 0.0]),
            vector(&[2.0, 0.0]),
            vector(&[0.0, 1.0]),
        ];
        let inst = Instance::new(vs, Matroid::uniform(3, 2)).unwrap();
        let s = IndexSet::from([0, 1]);
        assert_eq!(
            ExchangeGraph::build(&inst, &s, &inst.gram(&s).unwrap()).unwrap_err(),
            Error::Singular
        );
    }

    #[test]
    fn forward_weights_recover_swap_ratio() {
        let vs = vec![
            vector(&[1.0, 0.2, 0.0]),
            vector(&[0.1, 1.0, 0.3]),
            vector(&[0.0, 0.4, 1.0]),
            vector(&[0.5, 0.5, 0.5]),
            vector(&[0.3, -1.0, 0.2]),
            vector(&[2.0, 0.0, -1.0]),
        ];
        let inst = Instance::new(vs, Matroid::uniform(6, 4)).unwrap();
        let s = IndexSet::from([0, 1, 2, 3]);
        let gram = inst.gram(&s).unwrap();
        let g = ExchangeGraph::build(&inst, &s, &gram).unwrap();
        for u in [4, 5] {
            for v in &s {
                let direct = inst.log_det(&s.exchange(v, u)).unwrap().exp() / gram.log_det().exp();
                let got = g.forward_ratio(u, v);
                assert!(
                    (got - direct).abs() <= 1e-8 * direct,
                    "{u} {v}: {got} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn cycle_validation_and_canonical_rotation() {
        let f = |from, to, w| Arc {
            from,
            to,
            kind: ArcKind::Fwd1,
            weight: w,
        };
        let b = |from, to| Arc {
            from,
            to,
            kind: ArcKind::Backward,
            weight: 0.0,
        };
        let c = Cycle::new(vec![f(5, 1, -1.0), b(1, 3), f(3, 0, -2.0), b(0, 5)]).unwrap();
        assert_eq!(c.arcs()[0].from, 3);
        assert_eq!(c.weight(), -3.0);
        assert_eq!(c.vertex_set(), &IndexSet::from([0, 1, 3, 5]));
        assert_eq!(c.entering(), IndexSet::from([3, 5]));
        assert_eq!(c.leaving(), IndexSet::from([0, 1]));
        assert_eq!(c.apply(&[0, 1, 2].into()), IndexSet::from([2, 3, 5]));

        assert!(Cycle::new(vec![f(5, 1, 0.0), b(1, 4)]).is_err());
        assert!(Cycle::new(vec![f(5, 1, 0.0), f(1, 5, 0.0)]).is_err());
        assert!(Cycle::new(vec![f(5, 1, 0.0), b(1, 5), f(5, 1, 0.0), b(1, 5)]).is_err());
    }
}
