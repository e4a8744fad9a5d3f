//! Randomized invariant suites behind `detmax verify` and the acceptance tests.
//!
//! Every suite is deterministic for a given seed and reports how many trials
//! ran, how many failed and the worst error seen. Ground truth comes from
//! exact rational determinants, brute-force enumeration or spanning-tree
//! counting, never from the code under test.

use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::Serialize;

use crate::apps::{self, Graph};
use crate::error::{Error, Result};
use crate::exact;
use crate::exchange_graph::{
    enumerate_cycles, find_min_f_violating_cycle, log_f, ArcKind, Cycle, ExchangeGraph,
};
use crate::gen::{self, MatroidKind, ALL_KINDS};
use crate::index_set::IndexSet;
use crate::instance::Instance;
use crate::linalg::{permanent_bound_check, GramState, Vector, SWAP_EPS};
use crate::local_search::{
    self, auto_iteration_cap, default_max_half_len, SolveConfig, Termination,
};
use crate::oracle::{brute_force_opt, OracleMode};
use crate::sparsify::{frank_wolfe_relax, DEFAULT_FW_ITERS};
use crate::util::for_each_combination;

/// Relative tolerance of the determinant identities.
pub const IDENTITY_REL_TOL: f64 = 1e-8;
/// Slack of the Gram inequalities.
pub const INEQUALITY_SLACK: f64 = 1e-9;
/// Allowed shortfall of the relaxation below the optimum, in log units.
pub const RELAXATION_SLACK: f64 = 1e-3;
/// Random bases are only used when their Gram matrix is better conditioned than this.
pub const MAX_CONDITION: f64 = 1e6;
/// Largest exchange graph checked against cycle enumeration.
pub const MINIMALITY_MAX_VERTICES: usize = 16;
/// Largest alternative magnitude in the chained partition family when local
/// search runs on it; larger values push Gram matrices along the search
/// past the rank threshold.
const CHAINED_MAX_SCALE: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub trials: usize,
    pub failures: usize,
    pub max_error: f64,
    pub detail: String,
}

/// Parameters shared by the suites; each suite reads what it needs.
#[derive(Clone, Debug)]
pub struct SuiteParams {
    /// `None` uses the suite's default size.
    pub trials: Option<usize>,
    pub seed: u64,
    /// Largest matrix order for the permanent bound.
    pub lmax: usize,
    /// Corrupts one arc weight per graph in the weight-identity suite.
    pub inject_fault: bool,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            trials: None,
            seed: 7,
            lmax: 6,
            inject_fault: false,
        }
    }
}

pub const SUITES: [&str; 11] = [
    "weight-identity",
    "det-update",
    "gram-inequalities",
    "permanent-bound",
    "minimality",
    "improvement",
    "optimality-gap",
    "nsw-reduction",
    "kirchhoff",
    "relaxation",
    "termination",
];

pub fn run_suite(name: &str, p: &SuiteParams) -> Result<CheckReport> {
    let t = |default: usize| p.trials.unwrap_or(default);
    match name {
        "weight-identity" => weight_identity(t(1000), p.seed, p.inject_fault),
        "det-update" => det_update(t(500), p.seed),
        "gram-inequalities" => gram_inequalities(t(1000), p.seed),
        "permanent-bound" => permanent_bound(t(1000), p.lmax, p.seed),
        "minimality" => minimality(t(100), p.seed),
        "improvement" => improvement(t(200), p.seed),
        "optimality-gap" => optimality_gap(t(300), p.seed, false).map(|g| g.report),
        "nsw-reduction" => nsw_reduction(t(3), p.seed),
        "kirchhoff" => kirchhoff(t(200), p.seed),
        "relaxation" => relaxation(t(300), p.seed, DEFAULT_FW_ITERS),
        "termination" => termination(t(300), p.seed),
        other => Err(Error::InvalidArgument(format!(
            "unknown suite {other:?}; known suites: {}",
            SUITES.join(", ")
        ))),
    }
}

/// Failure counter that keeps the first failure message.
struct Tally {
    name: &'static str,
    trials: usize,
    failures: usize,
    max_error: f64,
    first_failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            trials: 0,
            failures: 0,
            max_error: 0.0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, error: f64, describe: impl FnOnce() -> String) {
        self.trials += 1;
        if error.is_finite() || error.is_nan() {
            self.max_error = self
                .max_error
                .max(if error.is_nan() { f64::INFINITY } else { error });
        } else {
            self.max_error = f64::INFINITY;
        }
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(describe());
            }
        }
    }

    fn fail(&mut self, msg: String) {
        self.record(false, f64::INFINITY, || msg);
    }

    /// Fails the suite when fewer than `wanted` trials could be generated.
    fn report(self, wanted: usize, summary: String) -> CheckReport {
        let short = self.trials < wanted;
        let detail = match (&self.first_failure, short) {
            (Some(f), _) => format!("{summary}; first failure: {f}"),
            (None, true) => format!(
                "{summary}; only {} of {wanted} trials generated",
                self.trials
            ),
            (None, false) => summary,
        };
        CheckReport {
            name: self.name.to_string(),
            passed: self.failures == 0 && !short,
            trials: self.trials,
            failures: self.failures,
            max_error: self.max_error,
            detail,
        }
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

/// Spectral condition number of a symmetric matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let e = m.clone().symmetric_eigenvalues();
    let (lo, hi) = (e.min(), e.max());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `det(Σ_T) / det(Σ_S)` in exact arithmetic, rounded once.
fn exact_ratio(vectors: &[Vector], t: &IndexSet, s: &IndexSet) -> Result<f64> {
    let num = exact::gram_det(vectors, t.as_slice())?;
    let den = exact::gram_det(vectors, s.as_slice())?;
    if den == num_rational::BigRational::default() {
        return Err(Error::Singular);
    }
    Ok(exact::to_f64(&(num / den)))
}

fn exact_ln_ratio(vectors: &[Vector], t: &IndexSet, s: &IndexSet) -> Result<f64> {
    let num = exact::gram_det(vectors, t.as_slice())?;
    let den = exact::gram_det(vectors, s.as_slice())?;
    Ok(exact::ln(&num) - exact::ln(&den))
}

/// A random instance with a well-conditioned spanning basis, or `None`.
fn conditioned_basis(
    rng: &mut impl Rng,
    instance: &Instance,
) -> Result<Option<(IndexSet, GramState)>> {
    let Some(s) = gen::random_spanning_basis(rng, instance, 20) else {
        return Ok(None);
    };
    let gram = instance.gram(&s)?;
    if gram.is_singular() || condition_number(gram.gram()) > MAX_CONDITION {
        return Ok(None);
    }
    Ok(Some((s, gram)))
}

/// Adds 0.5 to one forward arc `u → v`; returns whether an arc was found.
pub fn corrupt_forward_arc(graph: &mut ExchangeGraph, u: usize, v: usize) -> Result<bool> {
    let Some(k) = graph
        .arcs()
        .iter()
        .position(|a| a.from == u && a.to == v && a.kind.is_forward())
    else {
        return Ok(false);
    };
    let w = graph.arcs()[k].weight;
    graph.set_weight(k, w + 0.5)?;
    Ok(true)
}

/// Checks `exp(-2w₁) + exp(-2w₂)` against the exact determinant ratio for
/// each pair `(u ∉ S, v ∈ S)`; returns `(max relative error, first failure)`.
pub fn weight_identity_on_graph(
    instance: &Instance,
    graph: &ExchangeGraph,
    pairs: &[(usize, usize)],
) -> Result<Vec<(f64, Option<String>)>> {
    let s = graph.basis();
    pairs
        .iter()
        .map(|&(u, v)| {
            let got = graph.forward_ratio(u, v);
            let want = exact_ratio(instance.vectors(), &s.exchange(v, u), s)?;
            if got == 0.0 {
                // both arcs dropped: only legitimate for a (near-)singular swap
                let ok = want <= SWAP_EPS * (1.0 + 1e-6);
                let msg =
                    (!ok).then(|| format!("no forward arc {u}->{v} but the ratio is {want:e}"));
                return Ok((if ok { 0.0 } else { f64::INFINITY }, msg));
            }
            let err = rel_err(got, want);
            let msg = (err > IDENTITY_REL_TOL).then(|| {
                format!("pair {u}->{v} on {s}: arcs give {got:e}, determinants give {want:e}")
            });
            Ok((err, msg))
        })
        .collect()
}

/// Forward arc weights against exactly recomputed swap ratios.
pub fn weight_identity(trials: usize, seed: u64, inject_fault: bool) -> Result<CheckReport> {
    let mut rng = gen::rng(seed);
    let mut tally = Tally::new("weight-identity");
    let mut attempts = 0;
    while tally.trials < trials && attempts < 50 * trials {
        attempts += 1;
        let d = [2, 3, 5][tally.trials % 3];
        let n = rng.random_range(d + 1..=20);
        let r = rng.random_range(d..n);
        let kind = *ALL_KINDS.choose(&mut rng).expect("nonempty");
        let instance = gen::random_instance(&mut rng, kind, n, d, r)?;
        let Some((s, gram)) = conditioned_basis(&mut rng, &instance)? else {
            continue;
        };
        let outside: Vec<usize> = instance
            .matroid()
            .elements()
            .difference(&s)
            .iter()
            .collect();
        if outside.is_empty() {
            continue;
        }
        let mut graph = ExchangeGraph::build(&instance, &s, &gram)?;
        let u = *outside.choose(&mut rng).expect("nonempty");
        let v = *s.as_slice().choose(&mut rng).expect("nonempty");
        if inject_fault {
            corrupt_forward_arc(&mut graph, u, v)?;
        }
        let (err, msg) = weight_identity_on_graph(&instance, &graph, &[(u, v)])?.remove(0);
        tally.record(msg.is_none(), err, || msg.unwrap_or_default());
    }
    let summary = format!(
        "{} pairs at d in {{2,3,5}}, n <= 20, tolerance {IDENTITY_REL_TOL:e}",
        tally.trials
    );
    Ok(tally.report(trials, summary))
}

/// Block determinant updates with ℓ ∈ {1, 2, 3} against exact recomputation.
pub fn det_update(trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = gen::rng(seed);
    let mut tally = Tally::new("det-update");
    let mut attempts = 0;
    while tally.trials < trials && attempts < 50 * trials {
        attempts += 1;
        let l = 1 + tally.trials % 3;
        let d = rng.random_range(2..=5);
        let r = rng.random_range(d.max(l)..=d + 4);
        let vectors = gen::gaussian_vectors(&mut rng, r + l, d);
        let s: IndexSet = (0..r).collect();
        let gram = GramState::build(&vectors, s.as_slice())?;
        if gram.is_singular() || condition_number(gram.gram()) > MAX_CONDITION {
            continue;
        }
        let members: Vec<usize> = s.iter().collect();
        let removed: IndexSet = members.choose_multiple(&mut rng, l).copied().collect();
        let added: IndexSet = (r..r + l).collect();
        let t = s.difference(&removed).union(&added);
        let after = GramState::build(&vectors, t.as_slice())?;
        if after.is_singular() || condition_number(after.gram()) > MAX_CONDITION {
            continue;
        }
        let add: Vec<Vector> = added.iter().map(|i| vectors[i].clone()).collect();
        let remove: Vec<Vector> = removed.iter().map(|i| vectors[i].clone()).collect();
        let got = gram.det_update_ratio(&add, &remove)?;
        let want = exact_ratio(&vectors, &t, &s)?;
        let err = rel_err(got, want);
        tally.record(err <= IDENTITY_REL_TOL, err, || {
            format!("l = {l}, d = {d}: update gives {got:e}, determinants give {want:e}")
        });
    }
    let summary = format!(
        "{} updates, condition number below {MAX_CONDITION:e}",
        tally.trials
    );
    Ok(tally.report(trials, summary))
}

/// Worst violation of the two Gram inequalities at one spanning set, as
/// `(pairwise excess, most negative determinant)`.
pub fn gram_inequalities_at(vectors: &[Vector], gram: &GramState) -> Result<(f64, f64)> {
    let members = gram.members().to_vec();
    let inv = gram.inv()?;
    let norms: Vec<f64> = members
        .iter()
        .map(|&i| gram.inner_s(&vectors[i], &vectors[i]))
        .collect::<Result<_>>()?;
    let mut pair_excess = f64::NEG_INFINITY;
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            let ip = gram.inner_s(&vectors[members[a]], &vectors[members[b]])?;
            let rhs = ((1.0 - norms[a]).max(0.0) * (1.0 - norms[b]).max(0.0)).sqrt();
            pair_excess = pair_excess.max(ip.abs() - rhs);
        }
    }
    let mut min_det = f64::INFINITY;
    for size in 1..=3.min(members.len()) {
        for_each_combination(members.len(), size, |ys| {
            let m = DMatrix::from_fn(size, size, |i, j| {
                let (a, b) = (&vectors[members[ys[i]]], &vectors[members[ys[j]]]);
                let delta = if i == j { 1.0 } else { 0.0 };
                delta - a.dot(&(inv * b))
            });
            min_det = min_det.min(m.determinant());
        });
    }
    Ok((pair_excess, min_det))
}

/// Both Gram inequalities on random spanning sets.
pub fn gram_inequalities(trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = gen::rng(seed);
    let mut tally = Tally::new("gram-inequalities");
    let mut attempts = 0;
    while tally.trials < trials && attempts < 50 * trials {
        attempts += 1;
        let d = rng.random_range(2..=5);
        let r = rng.random_range(d..=d + 5);
        let vectors = gen::gaussian_vectors(&mut rng, r, d);
        let gram = GramState::build(&vectors, &(0..r).collect::<Vec<_>>())?;
        if gram.is_singular() || condition_number(gram.gram()) > MAX_CONDITION {
            continue;
        }
        let (pair_excess, min_det) = gram_inequalities_at(&vectors, &gram)?;
        let err = pair_excess.max(-min_det).max(0.0);
        tally.record(pair_excess <= INEQUALITY_SLACK && min_det >= -INEQUALITY_SLACK, err, || {
            format!("d = {d}, |S| = {r}: pairwise excess {pair_excess:e}, smallest determinant {min_det:e}")
        });
    }
    let summary = format!("{} spanning sets, slack {INEQUALITY_SLACK:e}", tally.trials);
    Ok(tally.report(trials, summary))
}

/// A random matrix satisfying the three structural conditions of the
/// near-diagonal permanent bound, built in the log domain.
///
/// Each off-diagonal entry is zero, at its cap, or a uniform fraction of it.
pub fn sample_bounded_matrix(rng: &mut impl Rng, l: usize) -> DMatrix<f64> {
    let lf = |k: usize| log_f(k).expect("k >= 1");
    let ln_diag: Vec<f64> = (0..l).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut m = DMatrix::zeros(l, l);
    for i in 0..l {
        for j in 0..l {
            if i == j {
                m[(i, i)] = ln_diag[i].exp();
                continue;
            }
            let cap_ln = if j < i {
                std::f64::consts::LN_2 + lf(i - j) - ln_diag[j + 1..i].iter().sum::<f64>()
            } else {
                std::f64::consts::LN_2 + lf(l - j + i) + ln_diag[i..=j].iter().sum::<f64>() - lf(l)
            };
            let u: f64 = rng.random();
            let scale = if u < 0.2 {
                0.0
            } else if u < 0.4 {
                1.0 - 1e-12
            } else {
                rng.random::<f64>()
            };
            m[(i, j)] = if scale == 0.0 {
                0.0
            } else {
                (cap_ln + scale.ln()).exp()
            };
        }
    }
    m
}

/// Permanent bound on sampled admissible matrices of order `2..=lmax`.
pub fn permanent_bound(trials: usize, lmax: usize, seed: u64) -> Result<CheckReport> {
    if !(2..=crate::linalg::PERMANENT_CAP).contains(&lmax) {
        return Err(Error::InvalidArgument(format!(
            "lmax must lie in 2..={}",
            crate::linalg::PERMANENT_CAP
        )));
    }
    let mut rng = gen::rng(seed);
    let mut tally = Tally::new("permanent-bound");
    for t in 0..trials {
        let l = 2 + t % (lmax - 1);
        let m = sample_bounded_matrix(&mut rng, l);
        let c = permanent_bound_check(&m)?;
        if !c.preconditions_met {
            tally.fail(format!("sampler produced an inadmissible {l}x{l} matrix"));
            continue;
        }
        // relative excess over the bound; negative when it holds
        let err = (c.permanent / c.bound - 1.0).max(0.0);
        tally.record(c.within_bound, err, || {
            format!(
                "order {l}: permanent {:e} exceeds bound {:e}",
                c.permanent, c.bound
            )
        });
    }
    let summary = format!(
        "{} matrices of order 2..={lmax}, exact permanents",
        tally.trials
    );
    Ok(tally.report(trials, summary))
}

/// Checks a cycle returned by the search: it uses real arcs of `graph`, is
/// f-violating, has at most one type-II arc, and no proper subset of its
/// vertices carries an f-violating cycle.
pub fn check_returned_cycle(
    graph: &ExchangeGraph,
    cycle: &Cycle,
    max_half_len: usize,
) -> Result<std::result::Result<(), String>> {
    for a in cycle.arcs() {
        match graph.arc(a.from, a.to, a.kind) {
            Some(b) if b.weight == a.weight => {}
            _ => {
                return Ok(Err(format!(
                    "arc {}->{} ({:?}) is not in the graph",
                    a.from, a.to, a.kind
                )))
            }
        }
    }
    if cycle.half_len() > max_half_len {
        return Ok(Err(format!(
            "cycle has {} forward arcs, bound {max_half_len}",
            cycle.half_len()
        )));
    }
    if !cycle.is_f_violating() {
        return Ok(Err(format!(
            "cycle on {} has margin {} and is not f-violating",
            cycle.vertex_set(),
            cycle.margin()
        )));
    }
    if cycle.fwd2_count() > 1 {
        return Ok(Err(format!(
            "cycle on {} has {} type-II arcs",
            cycle.vertex_set(),
            cycle.fwd2_count()
        )));
    }
    if cycle.half_len() > 1 {
        let own = cycle.vertex_set();
        for c in enumerate_cycles(graph, cycle.half_len() - 1)? {
            if c.is_f_violating() && c.vertex_set().is_subset(own) {
                return Ok(Err(format!(
                    "cycle on {own} is not minimal: {} carries an f-violating cycle",
                    c.vertex_set()
                )));
            }
        }
    }
    Ok(Ok(()))
}

fn spread_instance(
    rng: &mut impl Rng,
    kind: MatroidKind,
    n: usize,
    d: usize,
    r: usize,
    sigma: f64,
) -> Result<Instance> {
    let matroid = gen::random_matroid(rng, kind, n, r)?;
    Instance::new(gen::spread_vectors(rng, n, d, sigma), matroid)
}

/// Search results against cycle enumeration on graphs with at most 16 vertices.
///
/// `graphs` counts graphs on which the search returned a cycle; graphs where
/// it returned none are checked for completeness on the side.
pub fn minimality(graphs: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = gen::rng(seed);
    let mut tally = Tally::new("minimality");
    let mut empty_checked = 0;
    let mut attempts = 0;
    let mut lengths = [0usize; 2 * 4 + 1];
    while tally.trials < graphs && attempts < 100 * graphs.max(1) {
        attempts += 1;
        let (instance, s) = if attempts % 2 == 0 {
            let d = rng.random_range(2..=4);
            let alternatives = rng.random_range(1..=MINIMALITY_MAX_VERTICES / d - 1);
            gen::chained_partition(&mut rng, d, alternatives, 1e4)?
        } else {
            let d = rng.random_range(2..=3);
            let n = rng.random_range(d + 2..=MINIMALITY_MAX_VERTICES);
            let r = rng.random_range(d..n - 1);
            let kind = *ALL_KINDS.choose(&mut rng).expect("nonempty");
            let instance = spread_instance(&mut rng, kind, n, d, r, 1.5)?;
            let Some(s) = gen::random_spanning_basis(&mut rng, &instance, 20) else {
                continue;
            };
            (instance, s)
        };
        let gram = instance.gram(&s)?;
        let graph = ExchangeGraph::build(&instance, &s, &gram)?;
        let max_half = default_max_half_len(&instance, &s);
        match find_min_f_violating_cycle(&graph, max_half) {
            Some(cycle) => {
                lengths[cycle.len().min(lengths.len() - 1)] += 1;
                let verdict = check_returned_cycle(&graph, &cycle, max_half)?;
                tally.record(verdict.is_ok(), 0.0, || verdict.unwrap_err());
            }
            None if empty_checked < graphs => {
                empty_checked += 1;
                if let Some(c) = enumerate_cycles(&graph, max_half)?
                    .into_iter()
                    .find(|c| c.is_f_violating())
                {
                    tally.fail(format!(
                        "search found nothing but {} carries an f-violating cycle",
                        c.vertex_set()
                    ));
                }
            }
            None => {}
        }
    }
    let by_length: Vec<String> = lengths
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(len, c)| format!("{c} of length {len}"))
        .collect();
    let summary = format!(
        "{} returned cycles checked ({}), {empty_checked} cycle-free graphs confirmed",
        tally.trials,
        by_length.join(", ")
    );
    Ok(tally.report(graphs, summary))
}

/// Independent re-check of one exchange: `S △ C` is a basis whose exact
/// determinant exceeds twice that of `S`. Returns the log improvement.
pub fn check_exchange(
    instance: &Instance,
    s: &IndexSet,
    cycle: &Cycle,
) -> Result<std::result::Result<f64, String>> {
    let t = cycle.apply(s);
    if t.len() != s.len() {
        return Ok(Err(format!(
            "exchange changed |S| from {} to {}",
            s.len(),
            t.len()
        )));
    }
    if !instance.matroid().is_basis(&t)? {
        return Ok(Err(format!("{t} is not a basis")));
    }
    let gain = exact_ln_ratio(instance.vectors(), &t, s)?;
    if !(gain > std::f64::consts::LN_2 - local_search::IMPROVEMENT_SLACK) {
        return Ok(Err(format!(
            "exchange {s} -> {t} multiplies det by only {}",
            gain.exp()
        )));
    }
    Ok(Ok(gain))
}

/// Harvests at least `steps` exchanges from local search started at random
/// bases and re-checks each one exactly.
pub fn improvement(steps: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = gen::rng(seed);
    let mut tally = Tally::new("improvement");
    let mut smallest = f64::INFINITY;
    let mut longest = 0;
    let mut instances = 0;
    while tally.trials < steps && instances < 100 * steps.max(1) {
        instances += 1;
        let (instance, mut s) = if instances % 2 == 0 {
            let d = rng.random_range(2..=5);
            let alternatives = rng.random_range(1..=3);
            gen::chained_partition(&mut rng, d, alternatives, CHAINED_MAX_SCALE)?
        } else {
            let d = rng.random_range(2..=4);
            let n = rng.random_range(d + 2..=24);
            let r = rng.random_range(d..n - 1);
            let kind = *ALL_KINDS.choose(&mut rng).expect("nonempty");
            let instance = spread_instance(&mut rng, kind, n, d, r, 1.5)?;
            let Some(s) = gen::random_spanning_basis(&mut rng, &instance, 20) else {
                continue;
            };
            (instance, s)
        };
        let mut longest_here = 0;
        let max_half = default_max_half_len(&instance, &s);
        let cap = auto_iteration_cap(&instance, instance.log_det(&s)?);
        for _ in 0..cap {
            let gram = instance.gram(&s)?;
            let graph = ExchangeGraph::build(&instance, &s, &gram)?;
            let Some(cycle) = find_min_f_violating_cycle(&graph, max_half) else {
                break;
            };
            match check_exchange(&instance, &s, &cycle)? {
                Ok(gain) => {
                    smallest = smallest.min(gain);
                    longest_here = longest_here.max(cycle.len());
                    tally.record(true, 0.0, String::new);
                    s = cycle.apply(&s);
                }
                Err(msg) => {
                    tally.fail(msg);
                    break;
                }
            }
        }
        longest = longest.max(longest_here);
    }
    let summary = format!(
        "{} exchanges over {instances} instances, longest cycle {longest} arcs, smallest factor {:.4}",
        tally.trials,
        smallest.exp()
    );
    Ok(tally.report(steps, summary))
}

/// `4d ln d + d ln k + ln f(2d)`.
pub fn gap_bound_ln(d: usize, k: usize) -> f64 {
    let (df, kf) = (d as f64, k.max(1) as f64);
    4.0 * df * df.ln() + df * kf.ln() + log_f(2 * d).expect("d >= 1")
}

/// Small random instance for the oracle comparisons: `n ≤ 10`, `d ≤ 3`, `r ≤ 4`.
pub fn oracle_instance(rng: &mut impl Rng) -> Result<Instance> {
    let d = rng.random_range(1..=3);
    let r = rng.random_range(d..=4);
    let n = rng.random_range(r + 1..=10);
    let kind = *ALL_KINDS.choose(rng).expect("nonempty");
    spread_instance(rng, kind, n, d, r, 1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub report: CheckReport,
    /// Largest observed `ln OPT - ln ALG`.
    pub max_gap_ln: f64,
    /// Smallest slack `bound - gap` over instances with a finite optimum.
    pub min_slack_ln: f64,
    pub zero_optimum: usize,
}

/// Local search against brute force on `instances` small instances.
pub fn optimality_gap(instances: usize, seed: u64, use_sparsify: bool) -> Result<GapReport> {
    let mut rng = gen::rng(seed);
    let mut tally = Tally::new("optimality-gap");
    let config = SolveConfig {
        use_sparsify,
        ..SolveConfig::default()
    };
    let (mut max_gap, mut min_slack, mut zero) = (0.0f64, f64::INFINITY, 0);
    while tally.trials < instances {
        let instance = oracle_instance(&mut rng)?;
        let opt = brute_force_opt(&instance, OracleMode::Float)?;
        let report = local_search::solve(&instance, &config)?;
        let alg = report.log_det_ln.unwrap_or(f64::NEG_INFINITY);
        let Some(opt_ln) = opt.log_det_ln else {
            zero += 1;
            tally.record(report.log_det_ln.is_none(), 0.0, || {
                "optimum is 0 but the solver reports a spanning set".into()
            });
            continue;
        };
        let k = instance.n() - instance.rank();
        let bound = gap_bound_ln(instance.dim(), k);
        let gap = opt_ln - alg;
        max_gap = max_gap.max(gap);
        min_slack = min_slack.min(bound - gap);
        // the solver can never beat the oracle
        let ok = gap <= bound && gap >= -1e-9 * opt_ln.abs().max(1.0);
        tally.record(ok, gap.max(0.0), || {
            format!(
                "n = {}, d = {}, r = {}: ln OPT = {opt_ln}, ln ALG = {alg}, bound {bound}",
                instance.n(),
                instance.dim(),
                instance.rank()
            )
        });
    }
    let summary = format!(
        "{} instances ({zero} with zero optimum), sparsify {}, largest gap ln {max_gap:.6} (ratio {:.6}), smallest slack to bound {min_slack:.3}",
        tally.trials,
        if use_sparsify { "on" } else { "off" },
        max_gap.exp()
    );
    Ok(GapReport {
        report: tally.report(instances, summary),
        max_gap_ln: max_gap,
        min_slack_ln: min_slack,
        zero_optimum: zero,
    })
}

/// Every allocation product of bundle values against the reduced determinant,
/// for all `d, m ≤ 4`; `per_shape` valuation matrices per shape.
pub fn nsw_reduction(per_shape: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = gen::rng(seed);
    let mut tally = Tally::new("nsw-reduction");
    let mut shapes = 0;
    for d in 1..=4usize {
        for m in 1..=4usize {
            shapes += 1;
            for k in 0..per_shape {
                let valuations: Vec<Vec<f64>> = (0..d)
                    .map(|_| {
                        (0..m)
                            .map(|_| {
                                if k % 2 == 0 {
                                    rng.random_range(0..=9) as f64
                                } else {
                                    rng.random_range(0.0..10.0)
                                }
                            })
                            .collect()
                    })
                    .collect();
                nsw_shape(&mut tally, &valuations)?;
            }
        }
    }
    let summary = format!(
        "{} allocations over {shapes} shapes, tolerance {IDENTITY_REL_TOL:e}",
        tally.trials
    );
    let wanted = tally.trials.max(1);
    Ok(tally.report(wanted, summary))
}

fn nsw_shape(tally: &mut Tally, valuations: &[Vec<f64>]) -> Result<()> {
    let (d, m) = (valuations.len(), valuations[0].len());
    let instance = apps::nsw_instance(valuations)?;
    let mut best = 0.0f64;
    let mut allocation = vec![0usize; m];
    loop {
        let nsw = apps::nsw_value(valuations, &allocation)?;
        let want = nsw.powi(d as i32);
        best = best.max(want);
        let s = apps::nsw_allocation_set(d, &allocation)?;
        let got = instance.log_det(&s)?.exp();
        let err = rel_err(got, want);
        tally.record(err <= IDENTITY_REL_TOL, err, || {
            format!("allocation {allocation:?}: det {got:e}, NSW^d {want:e}")
        });
        // odometer over d^m allocations
        let Some(pos) = allocation.iter().position(|&p| p + 1 < d) else {
            break;
        };
        allocation[pos] += 1;
        allocation[..pos].fill(0);
    }
    // the determinant optimum is the best allocation
    let opt = brute_force_opt(&instance, OracleMode::Float)?;
    let got = opt.log_det().exp();
    let err = rel_err(got, best);
    tally.record(err <= IDENTITY_REL_TOL, err, || {
        format!("{valuations:?}: oracle optimum {got:e}, best NSW^d {best:e}")
    });
    Ok(())
}

/// Exact determinants of reduced incidence Gram matrices against spanning
/// tree counts on random multigraphs with at most 8 vertices.
pub fn kirchhoff(graphs: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = gen::rng(seed);
    let mut tally = Tally::new("kirchhoff");
    for _ in 0..graphs {
        let p = rng.random_range(2..=8);
        let extra = rng.random_range(0..=p + 2);
        let graph = Graph::new(p, gen::random_connected_graph(&mut rng, p, extra))?;
        let vectors = graph.reduced_incidence();
        // a random edge subset, sometimes disconnected
        let subset: IndexSet = (0..graph.edges.len())
            .filter(|_| rng.random_bool(0.7))
            .collect();
        let det = exact::gram_det(&vectors, subset.as_slice())?;
        let trees = apps::spanning_tree_count(&graph, &subset)?;
        let want = exact::rational(trees as f64)?;
        let ok = det == want;
        let err = (exact::to_f64(&det) - trees as f64).abs();
        tally.record(ok, err, || {
            format!(
                "{p} vertices, edges {:?}: det {det}, {trees} trees",
                graph.edges
            )
        });
    }
    let summary = format!(
        "{} edge subsets on graphs with 2..=8 vertices, exact",
        tally.trials
    );
    Ok(tally.report(graphs, summary))
}

/// Frank–Wolfe value against the brute-force optimum; also checks that the
/// iterate lies in the base polytope and the objective never decreases.
pub fn relaxation(instances: usize, seed: u64, fw_iters: usize) -> Result<CheckReport> {
    let mut rng = gen::rng(seed);
    let mut tally = Tally::new("relaxation");
    let mut least_margin = f64::INFINITY;
    while tally.trials < instances {
        let instance = oracle_instance(&mut rng)?;
        let opt = brute_force_opt(&instance, OracleMode::Float)?;
        let Some(opt_ln) = opt.log_det_ln else {
            continue;
        };
        let relax = frank_wolfe_relax(&instance, fw_iters)?;
        let margin = relax.value_ln - opt_ln;
        least_margin = least_margin.min(margin);
        let r = instance.rank() as f64;
        let in_polytope = (relax.x.iter().sum::<f64>() - r).abs() <= 1e-9 * r.max(1.0)
            && relax.x.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v));
        let monotone = relax.history.windows(2).all(|w| w[1] >= w[0] - 1e-9);
        tally.record(margin >= -RELAXATION_SLACK && in_polytope && monotone, (-margin).max(0.0), || {
            format!(
                "n = {}, d = {}, r = {}: relaxation {} vs ln OPT {opt_ln} (polytope {in_polytope}, monotone {monotone})",
                instance.n(),
                instance.dim(),
                instance.rank(),
                relax.value_ln
            )
        });
    }
    let summary = format!(
        "{} instances, {fw_iters} iterations, least margin over ln OPT {least_margin:.3e}",
        tally.trials
    );
    Ok(tally.report(instances, summary))
}

/// Iteration counts against the automatic cap; every run must end without
/// hitting it, each step gaining more than a factor 2.
pub fn termination(instances: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = gen::rng(seed);
    let mut tally = Tally::new("termination");
    let (mut most, mut total) = (0, 0);
    for t in 0..instances {
        let instance = if t % 2 == 0 {
            oracle_instance(&mut rng)?
        } else {
            let d = rng.random_range(2..=4);
            let n = rng.random_range(d + 1..=30);
            let r = rng.random_range(d..n);
            let kind = *ALL_KINDS.choose(&mut rng).expect("nonempty");
            spread_instance(&mut rng, kind, n, d, r, 1.5)?
        };
        let config = SolveConfig {
            use_sparsify: t % 4 < 2,
            ..SolveConfig::default()
        };
        let report = local_search::solve(&instance, &config)?;
        most = most.max(report.iterations);
        total += report.iterations;
        let steps_ok = report.per_iteration.iter().all(|it| {
            it.log_det_after_ln
                > it.log_det_before_ln + std::f64::consts::LN_2 - local_search::IMPROVEMENT_SLACK
        });
        let ok = report.termination != Termination::MaxIters
            && (report.termination == Termination::ZeroOptimum
                || report.iterations <= report.iteration_cap)
            && steps_ok;
        let ratio = if report.iteration_cap > 0 {
            report.iterations as f64 / report.iteration_cap as f64
        } else {
            0.0
        };
        tally.record(ok, ratio, || {
            format!(
                "{} iterations against cap {} ({:?})",
                report.iterations, report.iteration_cap, report.termination
            )
        });
    }
    let summary = format!(
        "{} runs, {total} iterations in total, at most {most} in one run",
        tally.trials
    );
    Ok(tally.report(instances, summary))
}

/// The checks that make sense on one instance: weight identity on every
/// forward pair and the Gram inequalities at the initial basis, block updates
/// around it, then cycle minimality and improvement along a full local search.
pub fn verify_instance(
    instance: &Instance,
    seed: u64,
    inject_fault: bool,
) -> Result<Vec<CheckReport>> {
    let Some(s) = local_search::initialize(instance)? else {
        let names = [
            "weight-identity",
            "det-update",
            "gram-inequalities",
            "minimality",
            "improvement",
        ];
        return Ok(names
            .iter()
            .map(|n| CheckReport {
                name: n.to_string(),
                passed: true,
                trials: 0,
                failures: 0,
                max_error: 0.0,
                detail: "no basis spans; the optimum is 0".into(),
            })
            .collect());
    };
    let gram = instance.gram(&s)?;
    let mut out = Vec::new();

    let mut graph = ExchangeGraph::build(instance, &s, &gram)?;
    let outside = instance.matroid().elements().difference(&s);
    let pairs: Vec<(usize, usize)> = outside
        .iter()
        .flat_map(|u| s.iter().map(move |v| (u, v)))
        .collect();
    if inject_fault {
        if let Some(a) = graph
            .arcs()
            .iter()
            .find(|a| a.kind != ArcKind::Backward)
            .cloned()
        {
            corrupt_forward_arc(&mut graph, a.from, a.to)?;
        }
    }
    let mut tally = Tally::new("weight-identity");
    for (err, msg) in weight_identity_on_graph(instance, &graph, &pairs)? {
        tally.record(msg.is_none(), err, || msg.unwrap_or_default());
    }
    out.push(tally.report(
        0,
        format!("{} forward pairs at the initial basis", pairs.len()),
    ));

    out.push(det_update_around(instance, &s, &gram, seed)?);

    let mut tally = Tally::new("gram-inequalities");
    let (pair_excess, min_det) = gram_inequalities_at(instance.vectors(), &gram)?;
    tally.record(
        pair_excess <= INEQUALITY_SLACK && min_det >= -INEQUALITY_SLACK,
        pair_excess.max(-min_det).max(0.0),
        || format!("pairwise excess {pair_excess:e}, smallest determinant {min_det:e}"),
    );
    out.push(tally.report(1, "initial basis".into()));

    let (minimal, improving) = search_checks(instance, &s)?;
    out.push(minimal);
    out.push(improving);
    Ok(out)
}

fn det_update_around(
    instance: &Instance,
    s: &IndexSet,
    gram: &GramState,
    seed: u64,
) -> Result<CheckReport> {
    let mut rng = gen::rng(seed);
    let mut tally = Tally::new("det-update");
    let members: Vec<usize> = s.iter().collect();
    let outside: Vec<usize> = instance.matroid().elements().difference(s).iter().collect();
    let lmax = 3.min(members.len()).min(outside.len());
    let vectors = instance.vectors();
    for t in 0..if lmax == 0 { 0 } else { 30 } {
        let l = 1 + t % lmax;
        let removed: IndexSet = members.choose_multiple(&mut rng, l).copied().collect();
        let added: IndexSet = outside.choose_multiple(&mut rng, l).copied().collect();
        let add: Vec<Vector> = added.iter().map(|i| vectors[i].clone()).collect();
        let remove: Vec<Vector> = removed.iter().map(|i| vectors[i].clone()).collect();
        let got = gram.det_update_ratio(&add, &remove)?;
        let want = exact_ratio(vectors, &s.difference(&removed).union(&added), s)?;
        // near-singular targets lose relative accuracy; compare on the scale of 1
        let err = (got - want).abs() / want.abs().max(1.0);
        tally.record(err <= IDENTITY_REL_TOL, err, || {
            format!("remove {removed}, add {added}: {got:e} vs {want:e}")
        });
    }
    let n = tally.trials;
    Ok(tally.report(n, format!("{n} block updates around the initial basis")))
}

fn search_checks(instance: &Instance, initial: &IndexSet) -> Result<(CheckReport, CheckReport)> {
    let mut minimal = Tally::new("minimality");
    let mut improving = Tally::new("improvement");
    let mut s = initial.clone();
    let max_half = default_max_half_len(instance, &s);
    let cap = auto_iteration_cap(instance, instance.log_det(&s)?);
    let mut skipped = 0;
    for _ in 0..cap {
        let gram = instance.gram(&s)?;
        let graph = ExchangeGraph::build(instance, &s, &gram)?;
        let found = find_min_f_violating_cycle(&graph, max_half);
        if graph.vertex_count() <= MINIMALITY_MAX_VERTICES {
            match &found {
                Some(cycle) => {
                    let verdict = check_returned_cycle(&graph, cycle, max_half)?;
                    minimal.record(verdict.is_ok(), 0.0, || verdict.unwrap_err());
                }
                None => {
                    let missed = enumerate_cycles(&graph, max_half)?
                        .into_iter()
                        .find(|c| c.is_f_violating());
                    minimal.record(missed.is_none(), 0.0, || {
                        format!(
                            "search found nothing but {} carries an f-violating cycle",
                            missed.unwrap().vertex_set()
                        )
                    });
                }
            }
        } else {
            skipped += 1;
        }
        let Some(cycle) = found else {
            break;
        };
        match check_exchange(instance, &s, &cycle)? {
            Ok(_) => {
                improving.record(true, 0.0, String::new);
                s = cycle.apply(&s);
            }
            Err(msg) => {
                improving.fail(msg);
                break;
            }
        }
    }
    let m = minimal.trials;
    let i = improving.trials;
    let mut note = format!("{m} searches checked against enumeration");
    if skipped > 0 {
        note.push_str(&format!(
            ", {skipped} skipped (more than {MINIMALITY_MAX_VERTICES} vertices)"
        ));
    }
    Ok((
        minimal.report(m, note),
        improving.report(i, format!("{i} exchanges re-checked exactly")),
    ))
}
