//! Local search over bases: start from a spanning basis and exchange along
//! minimal f-violating cycles until none remains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange_graph::{find_min_f_violating_cycle, Cycle, ExchangeGraph};
use crate::index_set::IndexSet;
use crate::instance::Instance;
use crate::linalg::GramState;
use crate::matroid::linear_matroid_intersection_basis;
use crate::sparsify::{self, DEFAULT_FW_ITERS};

/// Slack on the per-step improvement check, in log units.
pub const IMPROVEMENT_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Iteration cap; `None` derives it from the instance.
    pub max_iters: Option<usize>,
    pub use_sparsify: bool,
    /// Longest cycle searched, in forward arcs; defaults to the dimension.
    pub max_half_len: Option<usize>,
    pub fw_iters: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iters: None,
            use_sparsify: true,
            max_half_len: None,
            fw_iters: DEFAULT_FW_ITERS,
        }
    }
}

impl SolveConfig {
    pub fn without_sparsify() -> Self {
        Self {
            use_sparsify: false,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub cycle_len: usize,
    pub cycle_weight_ln: f64,
    pub fwd2_arcs: usize,
    pub entering: IndexSet,
    pub leaving: IndexSet,
    pub log_det_before_ln: f64,
    pub log_det_after_ln: f64,
    pub improvement_factor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// No f-violating cycle within the length bound.
    NoCycle,
    /// The iteration cap was reached.
    MaxIters,
    /// No basis spans `R^d`; every basis has determinant 0.
    ZeroOptimum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub final_set: Option<IndexSet>,
    /// `None` when the optimum is 0.
    pub log_det_ln: Option<f64>,
    /// The determinant itself.
    pub value: f64,
    pub iterations: usize,
    pub iteration_cap: usize,
    pub termination: Termination,
    pub initial_set: Option<IndexSet>,
    pub initial_log_det_ln: Option<f64>,
    pub per_iteration: Vec<IterationRecord>,
    /// Absent when sparsification is off.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsified_support: Option<IndexSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation_value_ln: Option<f64>,
    pub config: SolveConfig,
}

impl SolveReport {
    fn zero(config: &SolveConfig, sparsified_support: Option<IndexSet>) -> Self {
        Self {
            final_set: None,
            log_det_ln: None,
            value: 0.0,
            iterations: 0,
            iteration_cap: 0,
            termination: Termination::ZeroOptimum,
            initial_set: None,
            initial_log_det_ln: None,
            per_iteration: Vec::new(),
            sparsified_support,
            relaxation_value_ln: None,
            config: config.clone(),
        }
    }
}

/// A basis whose vectors span `R^d`, or `None` if the optimum is 0.
pub fn initialize(instance: &Instance) -> Result<Option<IndexSet>> {
    linear_matroid_intersection_basis(instance.matroid(), instance.vectors())
}

/// Result of one accepted exchange.
#[derive(Clone, Debug)]
pub struct Step {
    pub set: IndexSet,
    pub gram: GramState,
    pub cycle: Cycle,
}

/// Exchanges along a minimal f-violating cycle of `G(s)` if one exists with
/// at most `2 * max_half_len` arcs.
///
/// The new set is checked to be a basis whose determinant is more than twice
/// the old one; a failed check is reported as [`Error::Postcondition`].
pub fn step(
    instance: &Instance,
    s: &IndexSet,
    gram: &GramState,
    max_half_len: usize,
) -> Result<Option<Step>> {
    let graph = ExchangeGraph::build(instance, s, gram)?;
    step_on_graph(instance, s, gram, &graph, max_half_len)
}

pub fn step_on_graph(
    instance: &Instance,
    s: &IndexSet,
    gram: &GramState,
    graph: &ExchangeGraph,
    max_half_len: usize,
) -> Result<Option<Step>> {
    let Some(cycle) = find_min_f_violating_cycle(graph, max_half_len) else {
        return Ok(None);
    };
    let t = cycle.apply(s);
    if t.len() != s.len() {
        return Err(Error::Postcondition(format!(
            "exchange changed the size from {} to {}",
            s.len(),
            t.len()
        )));
    }
    if !instance.matroid().is_independent(&t)? {
        return Err(Error::Postcondition(format!("{t} is not independent")));
    }
    let new_gram = instance.gram(&t)?;
    if !(new_gram.log_det() > gram.log_det() + std::f64::consts::LN_2 - IMPROVEMENT_SLACK) {
        return Err(Error::Postcondition(format!(
            "exchange on {} improved ln det only from {} to {}",
            cycle.vertex_set(),
            gram.log_det(),
            new_gram.log_det()
        )));
    }
    Ok(Some(Step {
        set: t,
        gram: new_gram,
        cycle,
    }))
}

/// `ceil((d·ln tr(Σ v vᵀ) - ln det_init) / ln 2) + 1`.
pub fn auto_iteration_cap(instance: &Instance, initial_log_det: f64) -> usize {
    let gap = (instance.log_det_upper_bound() - initial_log_det).max(0.0);
    (gap / std::f64::consts::LN_2).ceil() as usize + 1
}

/// Default cycle length bound: the dimension, capped by the sizes of both sides.
pub fn default_max_half_len(instance: &Instance, s: &IndexSet) -> usize {
    let outside = instance.matroid().elements().len() - s.len();
    instance.dim().min(s.len()).min(outside.max(1))
}

pub fn solve(instance: &Instance, config: &SolveConfig) -> Result<SolveReport> {
    solve_with(instance, config, |_, _, _| {})
}

/// [`solve`] with a hook observing the exchange graph before every search.
pub fn solve_with(
    instance: &Instance,
    config: &SolveConfig,
    mut observe: impl FnMut(&Instance, &IndexSet, &ExchangeGraph),
) -> Result<SolveReport> {
    if config.max_iters == Some(0) {
        return Err(Error::InvalidArgument(
            "max_iters must be at least 1".into(),
        ));
    }
    let (working, support, relaxation) = if config.use_sparsify {
        match sparsify::sparsify(instance, config.fw_iters)? {
            Some(sp) => {
                let restricted = instance.matroid().clone().restrict(sp.support.clone())?;
                (
                    instance.with_matroid(restricted)?,
                    Some(sp.support),
                    Some(sp.relaxation.value_ln),
                )
            }
            None => return Ok(SolveReport::zero(config, None)),
        }
    } else {
        (instance.clone(), None, None)
    };

    let Some(initial) = initialize(&working)? else {
        return Ok(SolveReport::zero(config, support));
    };
    let mut gram = working.gram(&initial)?;
    if gram.is_singular() {
        return Err(Error::Postcondition(format!(
            "initial basis {initial} has a singular Gram matrix"
        )));
    }
    let initial_log_det = gram.log_det();
    let cap = config
        .max_iters
        .unwrap_or_else(|| auto_iteration_cap(&working, initial_log_det));
    let max_half_len = config
        .max_half_len
        .unwrap_or_else(|| default_max_half_len(&working, &initial));

    let mut s = initial.clone();
    let mut records = Vec::new();
    let mut termination = Termination::NoCycle;
    loop {
        let graph = ExchangeGraph::build(&working, &s, &gram)?;
        observe(&working, &s, &graph);
        let Some(next) = step_on_graph(&working, &s, &gram, &graph, max_half_len)? else {
            break;
        };
        if records.len() >= cap {
            termination = Termination::MaxIters;
            break;
        }
        let before = gram.log_det();
        let after = next.gram.log_det();
        records.push(IterationRecord {
            cycle_len: next.cycle.len(),
            cycle_weight_ln: next.cycle.weight(),
            fwd2_arcs: next.cycle.fwd2_count(),
            entering: next.cycle.entering(),
            leaving: next.cycle.leaving(),
            log_det_before_ln: before,
            log_det_after_ln: after,
            improvement_factor: (after - before).exp(),
        });
        s = next.set;
        gram = next.gram;
    }

    Ok(SolveReport {
        final_set: Some(s),
        log_det_ln: Some(gram.log_det()),
        value: gram.log_det().exp(),
        iterations: records.len(),
        iteration_cap: cap,
        termination,
        initial_set: Some(initial),
        initial_log_det_ln: Some(initial_log_det),
        per_iteration: records,
        sparsified_support: support,
        relaxation_value_ln: relaxation,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;
    use crate::matroid::Matroid;

    fn partition_example() -> Instance {
        let vs = vec![
            vector(&[1.0, 0.0]),
            vector(&[0.0, 1.0]),
            vector(&[0.0, 10.0]),
        ];
        Instance::new(vs, Matroid::partition(vec![0, 1, 1], vec![1, 1]).unwrap()).unwrap()
    }

    #[test]
    fn initialize_examples() {
        let vs = vec![
            vector(&[1.0, 0.0]),
            vector(&[0.0, 1.0]),
            vector(&[1.0, 1.0]),
        ];
        let inst = Instance::new(vs, Matroid::uniform(3, 2)).unwrap();
        assert_eq!(initialize(&inst).unwrap(), Some(IndexSet::from([0, 1])));

        let vs = vec![
            vector(&[1.0, 1.0]),
            vector(&[2.0, 2.0]),
            vector(&[-1.0, -1.0]),
        ];
        let inst = Instance::new(vs, Matroid::uniform(3, 2)).unwrap();
        assert_eq!(initialize(&inst).unwrap(), None);
    }

    #[test]
    fn step_on_partition_example() {
        let inst = partition_example();
        let s = IndexSet::from([0, 1]);
        let gram = inst.gram(&s).unwrap();
        let next = step(&inst, &s, &gram, 2).unwrap().unwrap();
        assert_eq!(next.set, IndexSet::from([0, 2]));
        assert!((next.gram.log_det() - 100f64.ln()).abs() < 1e-12);
        assert_ne!(next.set, s);
        assert!(step(&inst, &next.set, &next.gram, 2).unwrap().is_none());
    }

    #[test]
    fn solve_partition_example() {
        let r = solve(&partition_example(), &SolveConfig::without_sparsify()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.final_set, Some(IndexSet::from([0, 2])));
        assert!((r.log_det_ln.unwrap() - 100f64.ln()).abs() < 1e-12);
        assert!((r.per_iteration[0].improvement_factor - 100.0).abs() < 1e-9);
        assert_eq!(r.termination, Termination::NoCycle);
        assert!(r.sparsified_support.is_none());
    }

    #[test]
    fn already_optimal_takes_no_iterations() {
        let vs = vec![
            vector(&[3.0, 0.0]),
            vector(&[0.0, 3.0]),
            vector(&[1.0, 1.0]),
        ];
        let inst = Instance::new(vs, Matroid::uniform(3, 2)).unwrap();
        let r = solve(&inst, &SolveConfig::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.final_set, r.initial_set);
        assert!(r.sparsified_support.is_some());
    }

    #[test]
    fn zero_optimum_report() {
        let vs = vec![vector(&[1.0, 0.0]), vector(&[2.0, 0.0])];
        let inst = Instance::new(vs, Matroid::uniform(2, 2)).unwrap();
        for config in [SolveConfig::default(), SolveConfig::without_sparsify()] {
            let r = solve(&inst, &config).unwrap();
            assert_eq!(r.termination, Termination::ZeroOptimum);
            assert_eq!(r.log_det_ln, None);
            assert_eq!(r.value, 0.0);
        }
    }

    #[test]
    fn explicit_cap_is_respected() {
        // one improving swap per part
        let vs = vec![
            vector(&[1.0, 0.0]),
            vector(&[0.0, 1.0]),
            vector(&[10.0, 0.0]),
            vector(&[0.0, 10.0]),
        ];
        let m = Matroid::partition(vec![0, 1, 0, 1], vec![1, 1]).unwrap();
        let inst = Instance::new(vs, m).unwrap();
        assert_eq!(
            solve(&inst, &SolveConfig::without_sparsify())
                .unwrap()
                .iterations,
            2
        );
        let config = SolveConfig {
            max_iters: Some(1),
            ..SolveConfig::without_sparsify()
        };
        let r = solve(&inst, &config).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.termination, Termination::MaxIters);
        assert!(solve(
            &inst,
            &SolveConfig {
                max_iters: Some(0),
                ..config
            }
        )
        .is_err());
    }
}
