//! Seeded instance generators. All randomness comes from ChaCha8 seeded with a `u64`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::format::{AppJson, InstanceFile, MatroidJson, SCHEMA_VERSION};
use crate::index_set::IndexSet;
use crate::instance::Instance;
use crate::linalg::{vector, Vector};
use crate::matroid::Matroid;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn round(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

/// Standard Gaussian vectors rounded to four decimals.
pub fn gaussian_vectors(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vector> {
    (0..n)
        .map(|_| {
            let coords: Vec<f64> = (0..d)
                .map(|_| round(rng.sample::<f64, _>(StandardNormal), 4))
                .collect();
            vector(&coords)
        })
        .collect()
}

/// Gaussian directions with log-normal lengths (spread `sigma`), so that
/// bases differ in determinant by large factors.
pub fn spread_vectors(rng: &mut impl Rng, n: usize, d: usize, sigma: f64) -> Vec<Vector> {
    gaussian_vectors(rng, n, d)
        .into_iter()
        .map(|v| {
            let z: f64 = rng.sample(StandardNormal);
            v * (sigma * z).exp()
        })
        .collect()
}

/// `parts` nonempty parts of capacity one over `n` elements.
pub fn random_partition(rng: &mut impl Rng, n: usize, parts: usize) -> Result<Matroid> {
    if parts == 0 || parts > n {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} elements into {parts} parts"
        )));
    }
    let mut assignment: Vec<usize> = (0..n)
        .map(|i| {
            if i < parts {
                i
            } else {
                rng.random_range(0..parts)
            }
        })
        .collect();
    assignment.shuffle(rng);
    Matroid::partition(assignment, vec![1; parts])
}

/// A connected multigraph: a random spanning tree plus `extra` random edges.
pub fn random_connected_graph(
    rng: &mut impl Rng,
    vertices: usize,
    extra: usize,
) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..vertices).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = (1..vertices)
        .map(|k| {
            let parent = order[rng.random_range(0..k)];
            (parent.min(order[k]), parent.max(order[k]))
        })
        .collect();
    for _ in 0..extra {
        let a = rng.random_range(0..vertices);
        let mut b = rng.random_range(0..vertices - 1);
        if b >= a {
            b += 1;
        }
        edges.push((a.min(b), a.max(b)));
    }
    edges.shuffle(rng);
    edges
}

/// Random basis: greedy over a shuffled ground set.
pub fn random_basis(rng: &mut impl Rng, m: &Matroid) -> IndexSet {
    let mut order: Vec<usize> = m.elements().iter().collect();
    order.shuffle(rng);
    m.extend_in_order(&IndexSet::new(), &order)
        .expect("empty set is independent")
}

/// Random basis with nonsingular Gram, if one turns up within `attempts` draws.
pub fn random_spanning_basis(
    rng: &mut impl Rng,
    instance: &Instance,
    attempts: usize,
) -> Option<IndexSet> {
    (0..attempts)
        .map(|_| random_basis(rng, instance.matroid()))
        .find(|b| instance.log_det(b).is_ok_and(|ld| ld.is_finite()))
}

/// A partition instance whose improving exchanges are long cycles.
///
/// Part `k` holds a basis element along axis `k` and `alternatives` elements
/// pointing mostly along some other axis, with magnitude log-uniform in
/// `[1, max_scale]`. Swapping within a part gains little, so the exchange
/// graph at the returned basis tends to carry only cycles that chain several
/// parts together.
pub fn chained_partition(
    rng: &mut impl Rng,
    d: usize,
    alternatives: usize,
    max_scale: f64,
) -> Result<(Instance, IndexSet)> {
    if d < 2 || alternatives == 0 || !(max_scale >= 1.0) {
        return Err(Error::InvalidArgument(
            "need d >= 2, alternatives >= 1, max_scale >= 1".into(),
        ));
    }
    let mut vectors = Vec::new();
    let mut parts = Vec::new();
    let mut basis = IndexSet::new();
    for k in 0..d {
        let mut e = vec![0.0; d];
        e[k] = round((0.5 * rng.sample::<f64, _>(StandardNormal)).exp(), 4);
        basis.insert(vectors.len());
        vectors.push(vector(&e));
        parts.push(k);
        for _ in 0..alternatives {
            let mut target = rng.random_range(0..d - 1);
            if target >= k {
                target += 1;
            }
            let scale = rng.random_range(0.0..max_scale.ln()).exp();
            let coords: Vec<f64> = (0..d)
                .map(|i| {
                    let noise = 0.3 * rng.sample::<f64, _>(StandardNormal);
                    round(if i == target { scale + noise } else { noise }, 4)
                })
                .collect();
            vectors.push(vector(&coords));
            parts.push(k);
        }
    }
    let instance = Instance::new(vectors, Matroid::partition(parts, vec![1; d])?)?;
    Ok((instance, basis))
}

/// The kinds of random constraint matroid used by the test suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatroidKind {
    Uniform,
    Partition,
    Graphic,
    Linear,
}

pub const ALL_KINDS: [MatroidKind; 4] = [
    MatroidKind::Uniform,
    MatroidKind::Partition,
    MatroidKind::Graphic,
    MatroidKind::Linear,
];

/// A random matroid over `n` elements with rank at most `r`.
pub fn random_matroid(
    rng: &mut impl Rng,
    kind: MatroidKind,
    n: usize,
    r: usize,
) -> Result<Matroid> {
    match kind {
        MatroidKind::Uniform => Ok(Matroid::uniform(n, r)),
        MatroidKind::Partition => random_partition(rng, n, r),
        MatroidKind::Graphic => {
            // r + 1 vertices; n edges with a spanning tree among them
            if n < r {
                return Err(Error::InvalidArgument(
                    "graphic matroid needs n >= r".into(),
                ));
            }
            let edges = random_connected_graph(rng, r + 1, n - r);
            Matroid::graphic_indexed(r + 1, edges)
        }
        MatroidKind::Linear => {
            // vectors in R^r, some of them parallel to earlier ones
            let mut vectors = gaussian_vectors(rng, r, r);
            for _ in r..n {
                let v = if rng.random_bool(0.3) {
                    vectors[rng.random_range(0..vectors.len())].clone() * 2.0
                } else {
                    gaussian_vectors(rng, 1, r).remove(0)
                };
                vectors.push(v);
            }
            Ok(Matroid::Linear { vectors })
        }
    }
}

/// Gaussian vectors under a random matroid of the given kind.
pub fn random_instance(
    rng: &mut impl Rng,
    kind: MatroidKind,
    n: usize,
    d: usize,
    r: usize,
) -> Result<Instance> {
    let matroid = random_matroid(rng, kind, n, r)?;
    Instance::new(gaussian_vectors(rng, n, d), matroid)
}

/// Instance file generators behind `detmax gen`.
pub mod files {
    use super::*;

    pub fn random_uniform(seed: u64, n: usize, d: usize, r: usize) -> Result<InstanceFile> {
        if r > n {
            return Err(Error::InvalidArgument(format!("rank {r} exceeds n = {n}")));
        }
        let mut rng = rng(seed);
        let inst = Instance::new(gaussian_vectors(&mut rng, n, d), Matroid::uniform(n, r))?;
        Ok(InstanceFile::from_instance(&inst))
    }

    pub fn random_partition_file(
        seed: u64,
        n: usize,
        d: usize,
        parts: usize,
    ) -> Result<InstanceFile> {
        let mut rng = rng(seed);
        let m = random_partition(&mut rng, n, parts)?;
        let inst = Instance::new(gaussian_vectors(&mut rng, n, d), m)?;
        Ok(InstanceFile::from_instance(&inst))
    }

    /// Integer valuations in `0..=9`.
    pub fn nsw(seed: u64, players: usize, items: usize) -> Result<InstanceFile> {
        if players == 0 || items == 0 {
            return Err(Error::InvalidArgument(
                "need at least one player and one item".into(),
            ));
        }
        let mut rng = rng(seed);
        let valuations = (0..players)
            .map(|_| (0..items).map(|_| rng.random_range(0..=9) as f64).collect())
            .collect();
        Ok(InstanceFile {
            v: SCHEMA_VERSION,
            dim: players,
            vectors: None,
            matroid: None,
            app: Some(AppJson::Nsw { valuations }),
        })
    }

    /// Connected graph with `extra` edges beyond a spanning tree; choose `rank` edges.
    pub fn network(
        seed: u64,
        vertices: usize,
        extra: usize,
        rank: Option<usize>,
    ) -> Result<InstanceFile> {
        if vertices < 2 {
            return Err(Error::InvalidArgument("need at least two vertices".into()));
        }
        let mut rng = rng(seed);
        let edges = random_connected_graph(&mut rng, vertices, extra);
        let rank = rank.unwrap_or(vertices - 1);
        if rank > edges.len() {
            return Err(Error::InvalidArgument(format!(
                "rank {rank} exceeds {} edges",
                edges.len()
            )));
        }
        Ok(InstanceFile {
            v: SCHEMA_VERSION,
            dim: vertices - 1,
            vectors: None,
            matroid: Some(MatroidJson::Uniform {
                ground: Some(edges.len()),
                rank,
            }),
            app: Some(AppJson::Network {
                vertices,
                edges: edges.into_iter().map(|(a, b)| [a, b]).collect(),
            }),
        })
    }

    /// Multiples of the first axis: every basis is singular when `d >= 2`.
    pub fn adversarial_collinear(n: usize, d: usize) -> Result<InstanceFile> {
        if d == 0 || n < d {
            return Err(Error::InvalidArgument(format!(
                "need n >= d >= 1 (n = {n}, d = {d})"
            )));
        }
        let vectors = (1..=n)
            .map(|k| {
                let mut v = vec![0.0; d];
                v[0] = k as f64;
                vector(&v)
            })
            .collect();
        Ok(InstanceFile::from_instance(&Instance::new(
            vectors,
            Matroid::uniform(n, d),
        )?))
    }
}
