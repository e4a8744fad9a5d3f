use super::{Arc, Cycle, ExchangeGraph};
use crate::error::{Error, Result};

/// Largest graph [`enumerate_cycles`] accepts.
pub const ENUMERATION_CAP: usize = 20;

/// Every simple cycle with at most `2 * max_half_len` arcs. Parallel forward
/// arcs give distinct cycles on the same vertices.
pub fn enumerate_cycles(g: &ExchangeGraph, max_half_len: usize) -> Result<Vec<Cycle>> {
    if g.vertex_count() > ENUMERATION_CAP {
        return Err(Error::GuardExceeded(format!(
            "cycle enumeration on {} vertices (cap {ENUMERATION_CAP})",
            g.vertex_count()
        )));
    }
    let limit = 2 * max_half_len;
    let mut out = Vec::new();
    for &start in g.vertices() {
        let mut path = Vec::new();
        let mut on_path = vec![false; g.vertex_count()];
        on_path[g.local_id(start).expect("vertex")] = true;
        extend(g, start, start, limit, &mut path, &mut on_path, &mut out);
    }
    Ok(out)
}

/// DFS from `at` through vertices larger than `start`, closing back at `start`.
fn extend(
    g: &ExchangeGraph,
    start: usize,
    at: usize,
    limit: usize,
    path: &mut Vec<Arc>,
    on_path: &mut [bool],
    out: &mut Vec<Cycle>,
) {
    if path.len() == limit {
        return;
    }
    for a in g.arcs_from(at) {
        if a.to == start {
            path.push(*a);
            out.push(Cycle::new(path.clone()).expect("simple alternating closed walk"));
            path.pop();
            continue;
        }
        let id = g.local_id(a.to).expect("vertex");
        if a.to < start || on_path[id] {
            continue;
        }
        on_path[id] = true;
        path.push(*a);
        extend(g, start, a.to, limit, path, on_path, out);
        path.pop();
        on_path[id] = false;
    }
}
