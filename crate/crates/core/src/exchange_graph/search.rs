use super::{log_f, Arc, ArcKind, Cycle, ExchangeGraph};

/// A minimal f-violating cycle with at most `2 * max_half_len` arcs, if any.
///
/// For each half-length in increasing order, an exact-length DP finds the
/// lightest closed walk through every start outside the basis. The first
/// violating walk is split into simple cycles and a violating piece is kept.
/// The cycle is then shrunk by re-searching the subgraph induced by its
/// vertex set minus one vertex, until no proper vertex subset carries a
/// violating cycle.
pub fn find_min_f_violating_cycle(g: &ExchangeGraph, max_half_len: usize) -> Option<Cycle> {
    let adj = lightest_adjacency(g);
    let everything = vec![true; g.vertex_count()];
    let mut cycle = search(g, &adj, &everything, max_half_len)?;
    'shrink: loop {
        if cycle.half_len() == 1 {
            return Some(cycle);
        }
        let members: Vec<usize> = cycle.vertex_set().iter().collect();
        for &x in &members {
            let mut allowed = vec![false; g.vertex_count()];
            for &y in members.iter().filter(|&&y| y != x) {
                allowed[g.local_id(y).expect("cycle vertex")] = true;
            }
            if let Some(smaller) = search(g, &adj, &allowed, cycle.half_len() - 1) {
                cycle = smaller;
                continue 'shrink;
            }
        }
        return Some(cycle);
    }
}

/// Per local vertex, outgoing arcs with only the lighter forward arc kept
/// between each pair (type I on ties), sorted by target.
fn lightest_adjacency(g: &ExchangeGraph) -> Vec<Vec<(usize, Arc)>> {
    g.vertices()
        .iter()
        .map(|&v| {
            let mut out: Vec<(usize, Arc)> = Vec::new();
            for a in g.arcs_from(v) {
                let to = g.local_id(a.to).expect("arc endpoint");
                match out.iter_mut().find(|(t, _)| *t == to) {
                    Some((_, kept)) => {
                        let lighter = a.weight < kept.weight
                            || (a.weight == kept.weight && a.kind == ArcKind::Fwd1);
                        if lighter {
                            *kept = *a;
                        }
                    }
                    None => out.push((to, *a)),
                }
            }
            out.sort_by_key(|(t, _)| *t);
            out
        })
        .collect()
}

/// Shortest-length f-violating simple cycle inside the `allowed` vertices.
fn search(
    g: &ExchangeGraph,
    adj: &[Vec<(usize, Arc)>],
    allowed: &[bool],
    max_half_len: usize,
) -> Option<Cycle> {
    if max_half_len == 0 {
        return None;
    }
    let n = g.vertex_count();
    let steps = 2 * max_half_len;
    let starts: Vec<usize> = (0..n)
        .filter(|&i| allowed[i] && !g.in_basis(g.vertices()[i]))
        .collect();

    let walks: Vec<Walks> = starts
        .iter()
        .map(|&s| Walks::compute(adj, allowed, s, steps))
        .collect();

    for half in 1..=max_half_len {
        let threshold = -log_f(half).expect("positive");
        let mut candidates: Vec<(f64, usize)> = walks
            .iter()
            .enumerate()
            .map(|(k, w)| (w.closed_weight(2 * half), k))
            .filter(|(w, _)| *w < threshold)
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, k) in candidates {
            let walk = walks[k].closed_walk(2 * half);
            if let Some(c) = best_piece(walk) {
                return Some(c);
            }
        }
    }
    None
}

/// The most violating simple cycle in the decomposition of a closed walk.
fn best_piece(walk: Vec<Arc>) -> Option<Cycle> {
    let mut best: Option<Cycle> = None;
    for piece in split_closed_walk(walk) {
        let Ok(c) = Cycle::new(piece) else { continue };
        if !c.is_f_violating() {
            continue;
        }
        if best.as_ref().is_none_or(|b| c.margin() < b.margin()) {
            best = Some(c);
        }
    }
    best
}

/// Splits a closed walk into simple cycles by cutting at repeated vertices.
fn split_closed_walk(walk: Vec<Arc>) -> Vec<Vec<Arc>> {
    let mut pieces = Vec::new();
    let Some(first) = walk.first() else {
        return pieces;
    };
    let mut vertices = vec![first.from];
    let mut arcs: Vec<Arc> = Vec::new();
    for a in walk {
        arcs.push(a);
        match vertices.iter().position(|&v| v == a.to) {
            Some(p) => {
                pieces.push(arcs.split_off(p));
                vertices.truncate(p + 1);
            }
            None => vertices.push(a.to),
        }
    }
    pieces
}

/// Lightest walks of each exact length from a fixed start.
struct Walks {
    start: usize,
    weight: Vec<Vec<f64>>,
    pred: Vec<Vec<Option<(usize, Arc)>>>,
}

impl Walks {
    fn compute(adj: &[Vec<(usize, Arc)>], allowed: &[bool], start: usize, steps: usize) -> Self {
        let n = adj.len();
        let mut weight = vec![vec![f64::INFINITY; n]; steps + 1];
        let mut pred = vec![vec![None; n]; steps + 1];
        weight[0][start] = 0.0;
        for k in 0..steps {
            for a in 0..n {
                let wa = weight[k][a];
                if !wa.is_finite() {
                    continue;
                }
                for &(b, arc) in &adj[a] {
                    if !allowed[b] {
                        continue;
                    }
                    let cand = wa + arc.weight;
                    if cand < weight[k + 1][b] {
                        weight[k + 1][b] = cand;
                        pred[k + 1][b] = Some((a, arc));
                    }
                }
            }
        }
        Self {
            start,
            weight,
            pred,
        }
    }

    fn closed_weight(&self, len: usize) -> f64 {
        self.weight[len][self.start]
    }

    fn closed_walk(&self, len: usize) -> Vec<Arc> {
        let mut arcs = Vec::with_capacity(len);
        let mut at = self.start;
        for k in (1..=len).rev() {
            let (prev, arc) = self.pred[k][at].expect("finite walk has predecessors");
            arcs.push(arc);
            at = prev;
        }
        arcs.reverse();
        arcs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange_graph::enumerate_cycles;
    use crate::exchange_graph::tests::partition_example;
    use crate::index_set::IndexSet;
    use crate::instance::Instance;
    use crate::linalg::vector;
    use crate::matroid::Matroid;

    #[test]
    fn partition_example_two_cycle() {
        let (inst, s, gram) = partition_example();
        let g = ExchangeGraph::build(&inst, &s, &gram).unwrap();
        let c = find_min_f_violating_cycle(&g, 2).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!((c.arcs()[0].from, c.arcs()[0].to), (2, 1));
        assert_eq!(c.arcs()[0].kind, ArcKind::Fwd1);
        assert!((c.weight() + 10f64.ln()).abs() < 1e-12);
        assert_eq!(c.apply(&s), IndexSet::from([0, 2]));
    }

    #[test]
    fn optimal_basis_has_no_cycle() {
        let vs = vec![
            vector(&[1.0, 0.0]),
            vector(&[0.0, 1.0]),
            vector(&[1.0, 1.0]),
        ];
        let inst = Instance::new(vs, Matroid::uniform(3, 2)).unwrap();
        let s = IndexSet::from([0, 1]);
        let g = ExchangeGraph::build(&inst, &s, &inst.gram(&s).unwrap()).unwrap();
        assert!(find_min_f_violating_cycle(&g, 2).is_none());
    }

    #[test]
    fn split_separates_repeated_vertices() {
        let f = |from, to| Arc {
            from,
            to,
            kind: ArcKind::Fwd1,
            weight: -1.0,
        };
        let b = |from, to| Arc {
            from,
            to,
            kind: ArcKind::Backward,
            weight: 0.0,
        };
        // 5 -> 1 -> 5 -> 2 -> 5
        let pieces = split_closed_walk(vec![f(5, 1), b(1, 5), f(5, 2), b(2, 5)]);
        assert_eq!(pieces.len(), 2);
        assert!(pieces.iter().all(|p| p.len() == 2));
        // 5 -> 1 -> 6 -> 1 -> 5
        let pieces = split_closed_walk(vec![f(5, 1), b(1, 6), f(6, 1), b(1, 5)]);
        assert_eq!(pieces.len(), 2);
    }

    fn wide_instance() -> (Instance, IndexSet) {
        // a poor basis for a two-for-two exchange in R^3
        let vs = vec![
            vector(&[1.0, 0.0, 0.0]),
            vector(&[0.0, 0.1, 0.0]),
            vector(&[0.0, 0.0, 0.1]),
            vector(&[0.0, 30.0, 1.0]),
            vector(&[0.0, 1.0, 30.0]),
            vector(&[0.0, 0.1, 0.1]),
        ];
        let m = Matroid::partition(vec![0, 1, 2, 2, 1, 0], vec![1, 1, 1]).unwrap();
        (Instance::new(vs, m).unwrap(), IndexSet::from([0, 1, 2]))
    }

    #[test]
    fn returned_cycle_is_minimal_against_enumeration() {
        let (inst, s) = wide_instance();
        let g = ExchangeGraph::build(&inst, &s, &inst.gram(&s).unwrap()).unwrap();
        let c = find_min_f_violating_cycle(&g, 3).unwrap();
        assert!(c.is_f_violating());
        assert!(c.fwd2_count() <= 1);
        for other in enumerate_cycles(&g, 3).unwrap() {
            let proper = other.vertex_set().is_subset(c.vertex_set())
                && other.vertex_set() != c.vertex_set();
            assert!(!(proper && other.is_f_violating()));
        }
        assert!(inst.log_det(&c.apply(&s)).unwrap() > gram_log_det(&inst, &s) + 2f64.ln());
    }

    fn gram_log_det(inst: &Instance, s: &IndexSet) -> f64 {
        inst.log_det(s).unwrap()
    }

    #[test]
    fn search_is_deterministic() {
        let (inst, s) = wide_instance();
        let g = ExchangeGraph::build(&inst, &s, &inst.gram(&s).unwrap()).unwrap();
        let a = find_min_f_violating_cycle(&g, 3);
        let b = find_min_f_violating_cycle(&g.clone(), 3);
        assert_eq!(a, b);
    }
}
