mod common;

use common::{random_dag, random_matrix, Lcg};
use mlpr::features::{build_feature_table, graph_features, statistical_measures};
use mlpr::instance::{
    generate_asymmetric, generate_random_euclidean, generate_sop, parse_reduced, write_mtz_lp,
    write_reduced, ReducedMode,
};
use mlpr::reduction::{reduce_cbm, reduce_cmsa, reduce_mlpr, reduce_mlpr_with};
use mlpr::sampling::{sample_sop_tours, sample_tours};
use mlpr::solvers::{solve_exact, validate_tour, SolveOptions};
use mlpr::svm::{load_model, save_model, train};
use mlpr::{EdgeMask, Instance, Kernel, ProblemKind, SvmModel, TrainConfig};
use proptest::prelude::*;

fn lp_section<'a>(lp: &'a str, from: &str, to: &str) -> Vec<&'a str> {
    let start = lp.find(from).unwrap() + from.len();
    let end = lp.find(to).unwrap();
    lp[start..end].lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

#[test]
fn lp_counts_for_three_cities() {
    let inst = generate_random_euclidean(3, 100, 1).unwrap();
    let lp = write_mtz_lp(&inst, &EdgeMask::all(&inst)).unwrap();
    let binaries: usize = lp_section(&lp, "Binaries\n", "End")
        .iter()
        .map(|l| l.split_whitespace().count())
        .sum();
    assert_eq!(binaries, 6);
    let rows = lp_section(&lp, "Subject To\n", "Bounds");
    assert_eq!(rows.iter().filter(|r| r.starts_with("out_") || r.starts_with("in_")).count(), 6);
    assert_eq!(rows.iter().filter(|r| r.starts_with("mtz_")).count(), 2);

    let c: Vec<f64> = (0..16).map(|k| if k % 5 == 0 { 0.0 } else { (k % 7 + 1) as f64 }).collect();
    let sop = Instance::new("s", 4, c, ProblemKind::Sop, vec![(1, 2)]).unwrap();
    let lp = write_mtz_lp(&sop, &EdgeMask::all(&sop)).unwrap();
    let rows = lp_section(&lp, "Subject To\n", "Bounds");
    assert_eq!(rows.iter().filter(|r| r.starts_with("prec_")).count(), 1);
    assert!(rows.contains(&"prec_2_3: u_2 - u_3 <= -1"));
}

#[test]
fn sampled_tours_are_permutations_from_city_zero() {
    let inst = generate_asymmetric(12, 500, 0.3, 4).unwrap();
    let batch = sample_tours(&inst, 300, 9).unwrap();
    assert_eq!(batch.m(), 300);
    for t in batch.tours() {
        assert_eq!(t[0], 0);
        let mut s = t.to_vec();
        s.sort_unstable();
        assert_eq!(s, (0..12).collect::<Vec<_>>());
    }
    assert_eq!(batch, sample_tours(&inst, 300, 9).unwrap());
    assert_ne!(batch, sample_tours(&inst, 300, 10).unwrap());
}

#[test]
fn uniform_edge_frequency() {
    // each undirected edge lies on 2 / (n - 1) of all tours
    let n = 7;
    let inst = generate_random_euclidean(n, 1000, 2).unwrap();
    let m = 60_000;
    let acc = statistical_measures(&inst, &sample_tours(&inst, m, 5).unwrap()).unwrap();
    let expect = 2.0 / (n - 1) as f64;
    for e in 0..inst.edge_count() {
        let p = acc.hits(e) as f64 / m as f64;
        assert!((p - expect).abs() < 0.015, "edge {e}: {p} vs {expect}");
    }
}

#[test]
fn sop_sampler_chain_and_empty_precedence() {
    let mut rng = Lcg(12);
    let n = 8;
    let c = random_matrix(&mut rng, n, 50, true);
    let chain: Vec<(usize, usize)> = (1..n - 1).map(|i| (i, i + 1)).collect();
    let inst = Instance::new("chain", n, c.clone(), ProblemKind::Sop, chain).unwrap();
    let batch = sample_sop_tours(&inst, 50, 3).unwrap();
    for t in batch.tours() {
        assert_eq!(t, (0..n).collect::<Vec<_>>().as_slice());
    }
    let free = Instance::new("free", n, c, ProblemKind::Sop, vec![]).unwrap();
    let batch = sample_sop_tours(&free, 2000, 3).unwrap();
    let distinct: std::collections::HashSet<Vec<usize>> = batch.tours().map(<[usize]>::to_vec).collect();
    assert!(distinct.len() > 1500);
    for _ in 0..10 {
        let prec = random_dag(&mut rng, n, 10);
        let inst = Instance::new("d", n, random_matrix(&mut rng, n, 50, true), ProblemKind::Sop, prec).unwrap();
        for t in sample_sop_tours(&inst, 200, rng.next()).unwrap().tours() {
            assert!(inst.respects_precedence(t));
        }
    }
}

#[test]
fn graph_features_are_affine_invariant() {
    let inst = generate_asymmetric(10, 300, 0.4, 6).unwrap();
    let n = inst.n();
    let scaled: Vec<f64> = (0..n * n)
        .map(|k| if k / n == k % n { 0.0 } else { 3.5 * inst.costs()[k] - 17.0 })
        .collect();
    let other = Instance::new("s", n, scaled, inst.kind(), vec![]).unwrap();
    for (a, b) in graph_features(&inst).iter().zip(graph_features(&other)) {
        for k in 0..4 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }
    for f in graph_features(&inst) {
        assert!((0.0..=1.0).contains(&f[0]) && (0.0..=1.0).contains(&f[1]));
        assert!((-1.0..=1.0).contains(&f[2]) && (-1.0..=1.0).contains(&f[3]));
    }
}

#[test]
fn optimal_edges_have_elevated_measures() {
    let mut ratio_r = 0.0;
    let mut ratio_c = 0.0;
    let trials = 10;
    for seed in 0..trials {
        let inst = generate_random_euclidean(14, 1000, 100 + seed).unwrap();
        let opt = solve_exact(&inst, None, &SolveOptions::default()).unwrap().tour;
        let batch = sample_tours(&inst, 1400, seed).unwrap();
        let table = build_feature_table(&inst, &batch, Some(&opt)).unwrap();
        let labels = table.labels.as_ref().unwrap();
        let mean = |k: usize, want: i8| {
            let v: Vec<f64> = (0..table.len()).filter(|&e| labels[e] == want).map(|e| table.features[e][k]).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        ratio_r += mean(4, 1) / mean(4, -1);
        ratio_c += mean(5, 1) / mean(5, -1).max(1e-9);
    }
    assert!(ratio_r / trials as f64 > 1.5);
    assert!(ratio_c / trials as f64 > 1.5);
}

fn small_model(kernel: Kernel, eps_m: f64) -> SvmModel {
    let mut tables = Vec::new();
    for seed in 0..4 {
        let inst = generate_random_euclidean(12, 1000, 500 + seed).unwrap();
        let opt = solve_exact(&inst, None, &SolveOptions::default()).unwrap().tour;
        let batch = sample_tours(&inst, 1200, seed).unwrap();
        tables.push(build_feature_table(&inst, &batch, Some(&opt)).unwrap());
    }
    let mut table = tables[0].clone();
    for t in &tables[1..] {
        table.features.extend_from_slice(&t.features);
        table.edges.extend_from_slice(&t.edges);
        table.labels.as_mut().unwrap().extend_from_slice(t.labels.as_ref().unwrap());
    }
    let cfg = TrainConfig { kernel, eps_m, ..TrainConfig::default() };
    train(&table, &cfg).unwrap().0
}

#[test]
fn model_files_round_trip_exactly() {
    for kernel in [Kernel::Linear, Kernel::default_rbf()] {
        let model = small_model(kernel, 10.0);
        let back = load_model(&save_model(&model)).unwrap();
        let inst = generate_random_euclidean(15, 1000, 77).unwrap();
        let table = build_feature_table(&inst, &sample_tours(&inst, 1500, 1).unwrap(), None).unwrap();
        for f in &table.features {
            assert_eq!(model.decision_value(f).unwrap(), back.decision_value(f).unwrap());
        }
    }
}

#[test]
fn heavier_positive_weight_keeps_more_edges() {
    let inst = generate_random_euclidean(16, 1000, 31).unwrap();
    let light = reduce_mlpr(&inst, &small_model(Kernel::Linear, 0.5), 1600, 3).unwrap();
    let heavy = reduce_mlpr(&inst, &small_model(Kernel::Linear, 50.0), 1600, 3).unwrap();
    assert!(heavy.mask.kept_count() >= light.mask.kept_count());
}

fn check_result(inst: &Instance, r: &mlpr::ReductionResult) {
    assert!(validate_tour(inst, &r.guard_tour.order, Some(&r.mask)));
    for &e in &r.guard_edges {
        assert!(r.mask.is_kept(e));
    }
    let pct = 100.0 * r.mask.kept_count() as f64 / inst.edge_count() as f64;
    assert!((pct - r.remaining_fraction).abs() < 1e-9);
    let opt = solve_exact(inst, None, &SolveOptions::default()).unwrap().tour.cost;
    let red = solve_exact(inst, Some(&r.mask), &SolveOptions::default()).unwrap().tour.cost;
    assert!(red >= opt);
    assert!(red <= r.guard_tour.cost);
}

#[test]
fn reductions_keep_their_guard_and_are_deterministic() {
    let model = small_model(Kernel::Linear, 10.0);
    for seed in 0..4 {
        let inst = generate_random_euclidean(14, 1000, 900 + seed).unwrap();
        let a = reduce_mlpr_with(&inst, &model, 1400, seed, 3).unwrap();
        assert_eq!(a, reduce_mlpr_with(&inst, &model, 1400, seed, 3).unwrap());
        check_result(&inst, &a);
        let b = reduce_cbm(&inst, 1400, seed).unwrap();
        check_result(&inst, &b);
        let c = reduce_cmsa(&inst, seed, 14).unwrap();
        assert_eq!(c, reduce_cmsa(&inst, seed, 14).unwrap());
        check_result(&inst, &c);
        assert!(c.mask.kept_count() <= 14 * 14);
    }
    let sop = generate_sop(12, 500, 8, 4).unwrap();
    for r in [reduce_cbm(&sop, 1200, 1).unwrap(), reduce_cmsa(&sop, 1, 12).unwrap()] {
        assert!(sop.respects_precedence(&r.guard_tour.order));
        check_result(&sop, &r);
    }
}

#[test]
fn cmsa_rejects_nonpositive_weights() {
    let mut c = vec![1.0; 16];
    for i in 0..4 {
        c[i * 4 + i] = 0.0;
    }
    c[1] = -1.0;
    c[4] = -1.0;
    let inst = Instance::new("neg", 4, c, ProblemKind::SymmetricTsp, vec![]).unwrap();
    assert!(reduce_cmsa(&inst, 0, 4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sparse_format_round_trips(seed in 0u64..5000, n in 3usize..12, directed in any::<bool>(), keep in 0.0f64..1.0) {
        let mut rng = Lcg(seed);
        let kind = if directed { ProblemKind::AsymmetricTsp } else { ProblemKind::SymmetricTsp };
        let inst = Instance::new("p", n, random_matrix(&mut rng, n, 90, directed), kind, vec![]).unwrap();
        let mask = EdgeMask::from_flags((0..inst.edge_count()).map(|_| rng.unit() < keep).collect());
        let text = write_reduced(&inst, &mask, ReducedMode::SparseEdgeList).unwrap();
        let (back, back_mask) = parse_reduced(&text, "p").unwrap();
        prop_assert_eq!(back.n(), n);
        prop_assert_eq!(back.is_directed(), directed);
        prop_assert_eq!(&back_mask, &mask);
        for (e, &(i, j)) in inst.edges().iter().enumerate() {
            if mask.is_kept(e) {
                prop_assert_eq!(back.cost(i, j), inst.cost(i, j));
            }
        }
        prop_assert_eq!(write_reduced(&back, &back_mask, ReducedMode::SparseEdgeList).unwrap(), text);
    }
}
