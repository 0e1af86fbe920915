use treepca::bases::{FeatureSpace, Measure1D};
use treepca::bench::{
    interpolate_dense, mc_errors, run_experiment, test_function, Degree, ExperimentConfig, PolicyConfig, TestFunction,
    Univariate,
};
use treepca::dimtree::{build_tree, RankTuple, TreeKind};
use treepca::hopca::{hopca_approximate, BlackBox, BudgetPolicy, LocalRule};
use treepca::tnet::{dense_alpha_svd, ideal_tree_pca, DenseTensor, TreeTensor, Truncation};
use treepca::RngStream;

fn sine_sum(d: usize, p: usize, policy: BudgetPolicy) -> (f64, usize, usize) {
    let f = TestFunction::SineSum;
    let (tree, active) = build_tree(TreeKind::Ttt, d).unwrap();
    let u = test_function(&f, d).unwrap();
    let (tt, report) = hopca_approximate(&u, &tree, &active, &f.spaces(d, p), &policy, 0).unwrap();
    let e = mc_errors(&u, &tt, 100_000, 1).unwrap();
    (e.l2, report.evaluations, report.storage)
}

#[test]
fn sine_sum_degree_seven() {
    let (tree, active) = build_tree(TreeKind::Ttt, 10).unwrap();
    let policy = BudgetPolicy::rank(RankTuple::uniform(&tree, &active, 2), 1.0);
    let (err, m, s) = sine_sum(10, 7, policy);
    assert_eq!((m, s), (228, 228));
    assert!((5e-5..=1e-3).contains(&err), "error {err:e}");
}

#[test]
fn sine_sum_tight_tolerance() {
    let (err, m, s) = sine_sum(10, 17, BudgetPolicy::tolerance(1e-12));
    assert!(err <= 1e-11, "error {err:e}");
    assert_eq!(s, 428);
    assert_eq!(m, 3372);
}

#[test]
fn henon_heiles_table_row() {
    let mut cfg = ExperimentConfig::new(
        TestFunction::HenonHeiles { sigma: 0.2 },
        TreeKind::Tt,
        20,
        Some(Degree::Fixed(4)),
        PolicyConfig::Rank { rank: 3, gamma: 1.0 },
    );
    cfg.mc_samples = 20_000;
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.rows.len(), 10);
    for row in &report.rows {
        assert_eq!((row.evaluations, row.storage), (Some(840), Some(840)));
    }
    assert!(report.summary.error_l2.unwrap().hi <= 1e-10);

    cfg.runs = 1;
    let single = run_experiment(&cfg).unwrap();
    let iv = single.summary.error_l2.unwrap();
    assert_eq!(iv.lo, iv.hi);
    assert_eq!(run_experiment(&cfg).unwrap().to_csv(), single.to_csv());
}

#[test]
fn henon_heiles_approximation_vanishes_at_origin() {
    let f = TestFunction::HenonHeiles { sigma: 0.2 };
    let (tree, active) = build_tree(TreeKind::Tt, 3).unwrap();
    let u = test_function(&f, 3).unwrap();
    let policy = BudgetPolicy::rank(RankTuple::uniform(&tree, &active, 3), 1.0);
    let (tt, _) = hopca_approximate(&u, &tree, &active, &f.spaces(3, 4), &policy, 0).unwrap();
    assert!(tt.eval_point(&[0.0; 3]).unwrap().abs() < 1e-12);
}

#[test]
fn tensorized_square_storage() {
    let f = TestFunction::Tensorized { f: Univariate::Square };
    let (tree, active) = build_tree(TreeKind::Tt, 40).unwrap();
    let u = test_function(&f, 40).unwrap();
    for rule in [LocalRule::Eps, LocalRule::EpsOverSqrtA] {
        let policy = BudgetPolicy::PrescribedTolerance {
            eps: 1e-4,
            local_rule: rule,
            gamma: 1.0,
        };
        let (_, report) = hopca_approximate(&u, &tree, &active, &f.spaces(40, 1), &policy, 0).unwrap();
        assert_eq!(report.ranks.max(), 3);
        assert!((150..=250).contains(&report.storage), "{rule:?}: S = {}", report.storage);
    }
}

#[test]
fn dense_ranks_of_test_functions() {
    for (f, tree, rank) in [
        (TestFunction::HenonHeiles { sigma: 0.2 }, TreeKind::Tt, 3),
        (TestFunction::SineSum, TreeKind::Ttt, 2),
    ] {
        let (t, active) = build_tree(tree, 4).unwrap();
        let u = test_function(&f, 4).unwrap();
        let dense = interpolate_dense(&u, &f.spaces(4, 4)).unwrap();
        for id in active.ids() {
            let svd = dense_alpha_svd(&dense, t.node(id), Truncation::RelTol(1e-10)).unwrap();
            assert_eq!(svd.rank, rank, "{f:?} at {}", t.node(id));
        }
    }
}

#[test]
fn exact_recovery_of_random_tree_tensors() {
    let mut recovered = 0;
    for case in 0..10u64 {
        let kind = [TreeKind::Tucker, TreeKind::Tt, TreeKind::Ttt, TreeKind::Balanced][case as usize % 4];
        let (tree, active) = build_tree(kind, 3 + case as usize % 2).unwrap();
        let spaces = vec![FeatureSpace::legendre(3); tree.d()];
        let ranks = RankTuple::uniform(&tree, &active, 2);
        let mut rng = RngStream::new(case, &[11]);
        let tt = TreeTensor::random(&tree, &active, &spaces, &ranks, false, &mut rng).unwrap();
        let dense = tt.to_dense().unwrap();
        let u = BlackBox::from_tensor(tt);
        let policy = BudgetPolicy::rank(ranks, 1.0);
        let (approx, _) = hopca_approximate(&u, &tree, &active, &spaces, &policy, case).unwrap();
        let err = approx.to_dense().unwrap().sub(&dense).norm() / dense.norm();
        recovered += usize::from(err <= 1e-8);
    }
    assert!(recovered >= 9, "{recovered}/10");
}

#[test]
fn quasi_optimal_on_dense_tensors() {
    let spaces = vec![FeatureSpace::legendre(3); 3];
    let mut within = 0;
    for case in 0..10u64 {
        let kind = [TreeKind::Tucker, TreeKind::Tt, TreeKind::Ttt, TreeKind::Balanced][case as usize % 4];
        let (tree, active) = build_tree(kind, 3).unwrap();
        let mut rng = RngStream::new(case, &[12]);
        // spectrally decaying coefficients keep the problem away from ties
        let dense = DenseTensor::from_fn(vec![4, 4, 4], |i| {
            let g = Measure1D::StdGaussian.sample_one(&mut rng);
            g * 0.3f64.powi(i.iter().sum::<usize>() as i32)
        });
        let ranks = RankTuple::uniform(&tree, &active, 2);
        let ideal = ideal_tree_pca(&dense, &tree, &active, &ranks).unwrap().sub(&dense).norm();
        let oracle = dense.clone();
        let sp = spaces.clone();
        let u = BlackBox::new(vec![Measure1D::Uniform { a: -1.0, b: 1.0 }; 3], move |x| {
            oracle.eval_point(&sp, x).unwrap()
        });
        let policy = BudgetPolicy::rank(ranks, 1.0);
        let (approx, _) = hopca_approximate(&u, &tree, &active, &spaces, &policy, case).unwrap();
        let err = approx.to_dense().unwrap().sub(&dense).norm();
        within += usize::from(err <= 10.0 * ideal);
    }
    assert!(within >= 9, "{within}/10");
}
