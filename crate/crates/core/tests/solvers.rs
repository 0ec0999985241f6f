mod common;

use common::{brute_force, random_dag, random_matrix, Lcg};
use mlpr::instance::generate_random_euclidean;
use mlpr::solvers::{
    bnb_root_bound, improve_2opt, solve_bnb, solve_exact, solve_held_karp, solve_one_tree,
    solve_sop_exact, validate_tour, SolveOptions,
};
use mlpr::{EdgeMask, Error, Instance, ProblemKind, Tour};
use proptest::prelude::*;

fn opts() -> SolveOptions {
    SolveOptions {
        time_limit: None,
        ..SolveOptions::default()
    }
}

#[test]
fn held_karp_matches_enumeration() {
    let mut rng = Lcg(11);
    for trial in 0..40 {
        let n = 3 + trial % 6;
        let directed = trial % 2 == 1;
        let kind = if directed { ProblemKind::AsymmetricTsp } else { ProblemKind::SymmetricTsp };
        let inst = Instance::new("t", n, random_matrix(&mut rng, n, 50, directed), kind, vec![]).unwrap();
        let hk = solve_held_karp(&inst, None, &opts()).unwrap();
        assert!(hk.optimal);
        assert_eq!(Some(hk.tour.cost), brute_force(&inst, None));
        assert!(validate_tour(&inst, &hk.tour.order, None));
    }
}

#[test]
fn held_karp_respects_masks() {
    let mut rng = Lcg(5);
    for _ in 0..30 {
        let n = 7;
        let inst = Instance::new("t", n, random_matrix(&mut rng, n, 30, false), ProblemKind::SymmetricTsp, vec![]).unwrap();
        let flags: Vec<bool> = (0..inst.edge_count()).map(|_| rng.below(3) != 0).collect();
        let mask = EdgeMask::from_flags(flags);
        let oracle = brute_force(&inst, Some(&mask));
        match solve_held_karp(&inst, Some(&mask), &opts()) {
            Ok(r) => {
                assert_eq!(Some(r.tour.cost), oracle);
                assert!(validate_tour(&inst, &r.tour.order, Some(&mask)));
            }
            Err(Error::Infeasible(_)) => assert_eq!(oracle, None),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn path_bnb_matches_held_karp() {
    let mut rng = Lcg(3);
    for trial in 0..20 {
        let n = 6 + trial % 7;
        let directed = trial % 3 == 0;
        let kind = if directed { ProblemKind::AsymmetricTsp } else { ProblemKind::SymmetricTsp };
        let inst = Instance::new("t", n, random_matrix(&mut rng, n, 100, directed), kind, vec![]).unwrap();
        let hk = solve_held_karp(&inst, None, &opts()).unwrap();
        let bb = solve_bnb(&inst, None, &opts()).unwrap();
        assert!(bb.optimal);
        assert_eq!(bb.tour.cost, hk.tour.cost);
        assert!(bnb_root_bound(&inst, None) <= hk.tour.cost + 1e-9);
    }
}

#[test]
fn one_tree_matches_held_karp() {
    for seed in 0..15 {
        let n = 8 + (seed as usize % 9);
        let inst = generate_random_euclidean(n, 1000, seed).unwrap();
        let hk = solve_held_karp(&inst, None, &opts()).unwrap();
        let ot = solve_one_tree(&inst, None, &opts()).unwrap();
        assert!(ot.optimal);
        assert_eq!(ot.tour.cost, hk.tour.cost, "seed {seed}");
    }
    let mut rng = Lcg(99);
    for _ in 0..15 {
        let n = 12;
        let inst = Instance::new("r", n, random_matrix(&mut rng, n, 100, false), ProblemKind::SymmetricTsp, vec![]).unwrap();
        let hk = solve_held_karp(&inst, None, &opts()).unwrap();
        let ot = solve_one_tree(&inst, None, &opts()).unwrap();
        assert_eq!(ot.tour.cost, hk.tour.cost);
    }
}

#[test]
fn one_tree_matches_held_karp_under_masks() {
    let mut rng = Lcg(21);
    for seed in 0..20 {
        let inst = generate_random_euclidean(11, 500, seed).unwrap();
        let hk_full = solve_held_karp(&inst, None, &opts()).unwrap();
        let mut mask = EdgeMask::from_flags((0..inst.edge_count()).map(|_| rng.below(2) == 0).collect());
        mask.keep_tour(&inst, &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        let hk = solve_held_karp(&inst, Some(&mask), &opts()).unwrap();
        let ot = solve_one_tree(&inst, Some(&mask), &opts()).unwrap();
        assert_eq!(ot.tour.cost, hk.tour.cost);
        assert!(validate_tour(&inst, &ot.tour.order, Some(&mask)));
        assert!(hk.tour.cost >= hk_full.tour.cost);
    }
}

#[test]
fn one_tree_proves_optimality_beyond_dp_range() {
    let inst = generate_random_euclidean(45, 1000, 8).unwrap();
    let r = solve_exact(&inst, None, &opts()).unwrap();
    assert!(r.optimal);
    let improved = improve_2opt(&inst, &r.tour, None);
    assert_eq!(improved.cost, r.tour.cost);
}

#[test]
fn sop_dp_matches_feasible_enumeration() {
    let mut rng = Lcg(17);
    for trial in 0..20 {
        let n = 5 + trial % 4;
        let prec = random_dag(&mut rng, n, 5);
        let inst = Instance::new("s", n, random_matrix(&mut rng, n, 40, true), ProblemKind::Sop, prec).unwrap();
        let dp = solve_sop_exact(&inst, None, &opts()).unwrap();
        assert!(validate_tour(&inst, &dp.tour.order, None));
        assert_eq!(Some(dp.tour.cost), brute_force(&inst, None));
        let bb = solve_bnb(&inst, None, &opts()).unwrap();
        assert_eq!(bb.tour.cost, dp.tour.cost);
    }
}

#[test]
fn sop_without_precedence_equals_tsp() {
    let mut rng = Lcg(4);
    let n = 9;
    let c = random_matrix(&mut rng, n, 60, true);
    let sop = Instance::new("s", n, c.clone(), ProblemKind::Sop, vec![]).unwrap();
    let atsp = Instance::new("a", n, c, ProblemKind::AsymmetricTsp, vec![]).unwrap();
    let a = solve_sop_exact(&sop, None, &opts()).unwrap();
    let b = solve_held_karp(&atsp, None, &opts()).unwrap();
    assert_eq!(a.tour.cost, b.tour.cost);
}

#[test]
fn equal_costs_any_tour_is_optimal() {
    let n = 9;
    let mut c = vec![7.0; n * n];
    for i in 0..n {
        c[i * n + i] = 0.0;
    }
    let inst = Instance::new("eq", n, c, ProblemKind::SymmetricTsp, vec![]).unwrap();
    assert_eq!(solve_bnb(&inst, None, &opts()).unwrap().tour.cost, 63.0);
    assert_eq!(solve_one_tree(&inst, None, &opts()).unwrap().tour.cost, 63.0);
}

#[test]
fn mask_keeping_an_optimal_tour_is_harmless() {
    for seed in 0..10 {
        let inst = generate_random_euclidean(10, 1000, seed).unwrap();
        let opt = solve_held_karp(&inst, None, &opts()).unwrap();
        let mut mask = EdgeMask::none(&inst);
        mask.keep_tour(&inst, &opt.tour.order);
        let masked = solve_bnb(&inst, Some(&mask), &opts()).unwrap();
        assert_eq!(masked.tour.cost, opt.tour.cost);
    }
}

#[test]
fn node_budget_returns_best_effort() {
    let inst = generate_random_euclidean(30, 1000, 2).unwrap();
    let o = SolveOptions {
        node_limit: Some(10),
        ..opts()
    };
    let r = solve_bnb(&inst, None, &o);
    if let Ok(r) = r {
        assert!(!r.optimal);
        assert!(validate_tour(&inst, &r.tour.order, None));
    }
}

#[test]
fn two_opt_improves_random_tours() {
    let mut improved = 0;
    let trials = 100;
    let mut rng = Lcg(8);
    for t in 0..trials {
        let inst = generate_random_euclidean(50, 1000, 1000 + t).unwrap();
        let mut order: Vec<usize> = (0..50).collect();
        for i in (2..50).rev() {
            let j = 1 + rng.below(i as u64) as usize;
            order.swap(i, j);
        }
        let tour = Tour::new(&inst, order).unwrap();
        let out = improve_2opt(&inst, &tour, None);
        assert!(validate_tour(&inst, &out.order, None));
        assert!(out.cost <= tour.cost);
        if out.cost < tour.cost {
            improved += 1;
        }
    }
    assert!(improved * 100 >= 95 * trials);
}

#[test]
fn two_opt_is_precedence_safe_and_mask_aware() {
    let mut rng = Lcg(31);
    for _ in 0..30 {
        let n = 10;
        let prec = random_dag(&mut rng, n, 6);
        let inst = Instance::new("s", n, random_matrix(&mut rng, n, 50, true), ProblemKind::Sop, prec).unwrap();
        let start = mlpr::sampling::sample_sop_tours(&inst, 1, rng.next()).unwrap();
        let tour = Tour::new(&inst, start.tour(0).to_vec()).unwrap();
        let mut mask = EdgeMask::from_flags((0..inst.edge_count()).map(|_| rng.below(2) == 0).collect());
        mask.keep_tour(&inst, &tour.order);
        let out = improve_2opt(&inst, &tour, Some(&mask));
        assert!(validate_tour(&inst, &out.order, Some(&mask)));
        assert!(out.cost <= tour.cost);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimum_is_monotone_in_the_mask(seed in 0u64..1000, bits in proptest::collection::vec(any::<bool>(), 36)) {
        let inst = generate_random_euclidean(9, 200, seed).unwrap();
        let mut sub = EdgeMask::from_flags(bits);
        let mut sup = sub.clone();
        for e in 0..inst.edge_count() {
            if e % 3 == 0 {
                sup.set(e, true);
            }
        }
        let ident: Vec<usize> = (0..9).collect();
        sub.keep_tour(&inst, &ident);
        sup.keep_tour(&inst, &ident);
        let a = solve_held_karp(&inst, Some(&sub), &opts()).unwrap().tour.cost;
        let b = solve_held_karp(&inst, Some(&sup), &opts()).unwrap().tour.cost;
        prop_assert!(a >= b);
    }

    #[test]
    fn root_bound_is_admissible(seed in 0u64..10_000, directed in any::<bool>()) {
        let mut rng = Lcg(seed);
        let n = 8;
        let kind = if directed { ProblemKind::AsymmetricTsp } else { ProblemKind::SymmetricTsp };
        let mut c = random_matrix(&mut rng, n, 100, directed);
        // negative costs must not break admissibility
        for v in c.iter_mut() {
            *v -= 40.0;
        }
        for i in 0..n {
            c[i * n + i] = 0.0;
        }
        let inst = Instance::new("b", n, c, kind, vec![]).unwrap();
        let opt = solve_held_karp(&inst, None, &opts()).unwrap().tour.cost;
        prop_assert!(bnb_root_bound(&inst, None) <= opt + 1e-9);
    }
}
