use detmax::exchange_graph::{find_min_f_violating_cycle, log_f, ExchangeGraph};
use detmax::gen::{self, ALL_KINDS};
use detmax::linalg::{cauchy_binet, GramState};
use detmax::local_search::{solve, SolveConfig};
use detmax::oracle::{brute_force_opt, enumerate_bases, OracleMode};
use detmax::{IndexSet, Matroid};
use proptest::prelude::*;

fn small_matroid(seed: u64, kind_ix: usize, n: usize, r: usize) -> Matroid {
    let mut rng = gen::rng(seed);
    gen::random_matroid(&mut rng, ALL_KINDS[kind_ix], n, r).unwrap()
}

fn subsets(n: usize) -> impl Iterator<Item = IndexSet> {
    (0u32..1 << n).map(move |mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn independence_axioms(seed in any::<u64>(), kind in 0usize..4, n in 2usize..=7, r in 1usize..=4) {
        prop_assume!(r <= n);
        let m = small_matroid(seed, kind, n, r);
        let independent: Vec<IndexSet> = subsets(n).filter(|s| m.is_independent(s).unwrap()).collect();
        prop_assert!(m.is_independent(&IndexSet::new()).unwrap());
        for s in &independent {
            for x in s.iter() {
                prop_assert!(m.is_independent(&s.without(x)).unwrap(), "{s} independent but not {}", s.without(x));
            }
        }
        for a in &independent {
            for b in independent.iter().filter(|b| b.len() > a.len()) {
                let extends = b.difference(a).iter().any(|x| m.is_independent(&a.with(x)).unwrap());
                prop_assert!(extends, "{a} cannot grow from {b}");
            }
        }
    }

    #[test]
    fn rank_is_submodular(seed in any::<u64>(), kind in 0usize..4, n in 2usize..=8, r in 1usize..=4, a in 0u32..256, b in 0u32..256) {
        prop_assume!(r <= n);
        let m = small_matroid(seed, kind, n, r);
        let set = |mask: u32| -> IndexSet { (0..n).filter(|i| mask & (1 << i) != 0).collect() };
        let (a, b) = (set(a), set(b));
        let rank = |s: &IndexSet| m.rank(s).unwrap();
        prop_assert!(rank(&a) + rank(&b) >= rank(&a.union(&b)) + rank(&a.intersection(&b)));
        prop_assert!(rank(&a) <= a.len());
    }

    #[test]
    fn exchange_bijection_on_all_pairs(seed in any::<u64>(), kind in 0usize..4, n in 2usize..=7, r in 1usize..=3) {
        prop_assume!(r < n);
        let m = small_matroid(seed, kind, n, r);
        let bases = enumerate_bases(&m).unwrap();
        for s in &bases {
            for t in &bases {
                let h = m.basis_exchange_bijection(s, t).unwrap();
                prop_assert_eq!(h.len(), s.len());
                let image: IndexSet = h.values().copied().collect();
                prop_assert_eq!(&image, t);
                for (&x, &y) in &h {
                    if t.contains(x) {
                        prop_assert_eq!(x, y);
                    } else {
                        prop_assert!(m.is_basis(&s.exchange(x, y)).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn cauchy_binet_matches_determinant(seed in any::<u64>(), d in 1usize..=3, extra in 0usize..=7) {
        let mut rng = gen::rng(seed);
        let n = d + extra;
        let vs = gen::gaussian_vectors(&mut rng, n, d);
        let members: Vec<usize> = (0..n).collect();
        let cb = cauchy_binet(&vs, &members).unwrap();
        let det = detmax::exact::to_f64(&detmax::exact::gram_det(&vs, &members).unwrap());
        prop_assert!((cb - det).abs() <= 1e-8 * det.abs().max(1e-12), "{cb} vs {det}");
    }

    #[test]
    fn woodbury_swap_reverses(seed in any::<u64>(), d in 2usize..=5) {
        let mut rng = gen::rng(seed);
        let vs = gen::gaussian_vectors(&mut rng, d + 2, d);
        let s: Vec<usize> = (0..d + 1).collect();
        let g = GramState::build(&vs, &s).unwrap();
        let (u, v) = (&vs[d + 1], &vs[0]);
        let Ok(forward) = g.woodbury_swap(u, v) else { return Ok(()); };
        prop_assume!(!forward.is_singular());
        prop_assume!(detmax::checks::condition_number(forward.gram()) < 1e6);
        let back = forward.woodbury_swap(v, u).unwrap();
        let diff = (back.inv().unwrap() - g.inv().unwrap()).amax();
        prop_assert!(diff < 1e-7, "inverse drifted by {diff}");
        prop_assert!((back.log_det() - g.log_det()).abs() < 1e-8);
    }

    #[test]
    fn log_f_is_supermultiplicative(a in 1usize..=20, b in 1usize..=20) {
        prop_assert!(log_f(a).unwrap() + log_f(b).unwrap() <= log_f(a + b).unwrap() + 1e-9);
    }

    #[test]
    fn search_is_deterministic(seed in any::<u64>(), kind in 0usize..4) {
        let mut rng = gen::rng(seed);
        let inst = gen::random_instance(&mut rng, ALL_KINDS[kind], 10, 2, 3).unwrap();
        let Some(s) = gen::random_spanning_basis(&mut rng, &inst, 20) else { return Ok(()); };
        let g1 = ExchangeGraph::build(&inst, &s, &inst.gram(&s).unwrap()).unwrap();
        let g2 = ExchangeGraph::build(&inst, &s, &inst.gram(&s).unwrap()).unwrap();
        let a = find_min_f_violating_cycle(&g1, 2);
        let b = find_min_f_violating_cycle(&g2, 2);
        prop_assert_eq!(a.map(|c| c.arcs().to_vec()), b.map(|c| c.arcs().to_vec()));
    }

    #[test]
    fn solve_returns_a_basis_no_worse_than_start(seed in any::<u64>(), kind in 0usize..4, sparsify in any::<bool>()) {
        let mut rng = gen::rng(seed);
        let inst = gen::random_instance(&mut rng, ALL_KINDS[kind], 9, 2, 3).unwrap();
        let config = SolveConfig { use_sparsify: sparsify, ..SolveConfig::default() };
        let report = solve(&inst, &config).unwrap();
        if let Some(set) = &report.final_set {
            prop_assert!(inst.matroid().is_basis(set).unwrap());
            prop_assert!((inst.log_det(set).unwrap() - report.log_det_ln.unwrap()).abs() < 1e-9);
            prop_assert!(report.log_det_ln.unwrap() >= report.initial_log_det_ln.unwrap());
        }
        let mut prev = report.initial_log_det_ln;
        for it in &report.per_iteration {
            prop_assert_eq!(Some(it.log_det_before_ln), prev);
            prop_assert!(it.improvement_factor > 2.0 - 1e-9);
            prev = Some(it.log_det_after_ln);
        }
    }

    #[test]
    fn oracle_modes_agree_on_clear_winners(seed in any::<u64>(), kind in 0usize..4) {
        let mut rng = gen::rng(seed);
        let inst = gen::random_instance(&mut rng, ALL_KINDS[kind], 8, 2, 3).unwrap();
        let float = brute_force_opt(&inst, OracleMode::Float).unwrap();
        let exact = brute_force_opt(&inst, OracleMode::Exact).unwrap();
        let Some(best) = float.log_det_ln else {
            prop_assert!(exact.log_det_ln.is_none());
            return Ok(());
        };
        // runner-up gap decides whether the argmax is numerically meaningful
        let mut values: Vec<f64> = enumerate_bases(inst.matroid()).unwrap().iter()
            .map(|b| inst.log_det(b).unwrap()).filter(|v| v.is_finite()).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        let clear = values.len() < 2 || (values[0] - values[1]).exp() - 1.0 > 1e-6;
        if clear {
            prop_assert_eq!(&float.best_set, &exact.best_set);
        }
        prop_assert!((best - exact.log_det()).abs() < 1e-9);
    }
}
