use cmca_core::alpha::{auto_alpha, ratio_step, AutoAlphaConfig};
use cmca_core::cmca::fit_cmca;
use cmca_core::dataio::{apply_recode, read_csv, CategoryVocabulary, RecodeRule, RecodeSpec};
use cmca_core::encode::{burt, correspondence, one_hot, Normalization};
use cmca_core::mca::fit_mca;
use cmca_core::pipeline::ContrastSetup;
use cmca_core::synth;
use cmca_testkit as oracle;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn modes() -> impl Strategy<Value = Normalization> {
    prop_oneof![
        Just(Normalization::Raw),
        Just(Normalization::Centered),
        Just(Normalization::CaStandardized),
    ]
}

fn residual(m: &DMatrix<f64>, u: &DMatrix<f64>, lambda: &[f64], j: usize) -> f64 {
    let col = u.column(j);
    (m * col - col * lambda[j]).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn encoding_invariants(seed in any::<u64>(), mode in modes()) {
        let t = synth::random_pair(seed);
        let vocab = CategoryVocabulary::from_table(&t);
        let g = one_hot(&t, &vocab).unwrap();
        let d = t.n_vars() as f64;
        for row in g.values().row_iter() {
            prop_assert_eq!(row.sum(), d);
        }
        prop_assert_eq!(g.grand_total(), t.n_rows() * t.n_vars());

        // Column sums are the per-category frequencies.
        for (k, (var, level)) in vocab.entries().iter().enumerate() {
            let v = t.variable_index(var).unwrap();
            let freq = (0..t.n_rows()).filter(|&r| t.level(r, v) == level).count();
            prop_assert_eq!(g.column_counts()[k], freq);
        }

        let z = correspondence(&g, mode).unwrap();
        if mode == Normalization::Raw {
            prop_assert!((z.values().sum() - 1.0).abs() < 1e-12);
        }
        if mode == Normalization::Centered {
            for col in z.values().column_iter() {
                prop_assert!(col.sum().abs() < 1e-12);
            }
        }
        let b = burt(&z);
        prop_assert_eq!(b.values(), &b.values().transpose());
        let brute = oracle::cross_product(z.values());
        prop_assert!(oracle::max_abs(&(b.values() - &brute)) < 1e-12);
        let sum_sq: f64 = z.values().iter().map(|x| x * x).sum();
        prop_assert!((b.values().trace() - sum_sq).abs() < 1e-12);

        let full = fit_mca(&b, b.dim()).unwrap();
        prop_assert!(full.eigenvalues().iter().all(|&l| l >= -1e-10));
        for v in oracle::UnitVectors::new(b.dim(), seed).take(1000) {
            prop_assert!(b.quadratic_form(&v) >= -1e-15);
        }
        let s: f64 = full.eigenvalues().iter().sum();
        prop_assert!((s - b.values().trace()).abs() < 1e-8);
    }

    #[test]
    fn cmca_eigen_contract(seed in any::<u64>(), alpha in 0.0f64..20.0, mode in modes()) {
        let t = synth::random_pair(seed);
        let setup = ContrastSetup::new(&t, "T", "B", mode).unwrap();
        let (bt, bb) = (&setup.target.burt, &setup.background.burt);
        let k = 2.min(bt.dim());
        let model = fit_cmca(bt, bb, alpha, k).unwrap();
        let m = bt.values() - bb.values() * alpha;
        let u = model.eigenvectors();
        prop_assert!(oracle::max_abs(&(u.transpose() * u - DMatrix::identity(k, k))) < 1e-10);
        for j in 0..k {
            prop_assert!(residual(&m, u, model.eigenvalues(), j) <= 1e-8);
            let rq = oracle::quadratic_form(&m, &model.component(j));
            prop_assert!((rq - model.eigenvalues()[j]).abs() < 1e-8);
        }
        prop_assert!(model.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        let top = oracle::quadratic_form(&m, &model.component(0));
        for v in oracle::UnitVectors::new(m.nrows(), seed ^ 1).take(1000) {
            prop_assert!(top >= oracle::quadratic_form(&m, &v) - 1e-15);
        }

        let c0 = fit_cmca(bt, bb, 0.0, k).unwrap();
        let m0 = fit_mca(bt, k).unwrap();
        prop_assert_eq!(c0.eigenvalues(), m0.eigenvalues());
        prop_assert_eq!(c0.eigenvectors(), m0.eigenvectors());
    }

    #[test]
    fn auto_alpha_invariants(seed in any::<u64>(), k in 1usize..=3, eps_exp in 1i32..=4) {
        let t = synth::random_pair(seed);
        let setup = ContrastSetup::new(&t, "T", "B", Normalization::Centered).unwrap();
        let (bt, bb) = (&setup.target.burt, &setup.background.burt);
        let k = k.min(bt.dim());
        let cfg = AutoAlphaConfig { epsilon: 10f64.powi(-eps_exp), ..Default::default() };
        match auto_alpha(bt, bb, k, &cfg) {
            Ok((model, trace)) => {
                let alphas: Vec<f64> = trace.alphas().collect();
                prop_assert!(alphas.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{:?}", alphas);
                prop_assert!(trace.final_alpha <= 1.0 / cfg.epsilon + 1e-9);
                prop_assert_eq!(model.alpha(), trace.final_alpha);
                // Step 1 on the returned cPCs reproduces the final α.
                let again = ratio_step(model.trace_of(bt), model.trace_of(bb), cfg.epsilon, 0).unwrap();
                prop_assert!((again - trace.final_alpha).abs() <= cfg.tol * 10.0,
                    "{} vs {}", again, trace.final_alpha);
                // Each Step-2 solve satisfies the eigen residual bound.
                for step in &trace.steps[..trace.steps.len() - 1] {
                    let m = fit_cmca(bt, bb, step.alpha, k).unwrap();
                    let diff = bt.values() - bb.values() * step.alpha;
                    for j in 0..k {
                        prop_assert!(residual(&diff, m.eigenvectors(), m.eigenvalues(), j) <= 1e-8);
                    }
                }
            }
            Err(e) => prop_assert_eq!(e.kind(), "NonconvergenceWithinBudget"),
        }
    }

    #[test]
    fn split_row_counts_and_vocabulary_determinism(seed in any::<u64>()) {
        let t = synth::random_pair(seed);
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        let spec = RecodeSpec::infer("group");
        let a = read_csv(csv.as_slice(), &spec).unwrap();
        let b = read_csv(csv.as_slice(), &spec).unwrap();
        let va = serde_json::to_string(&CategoryVocabulary::from_table(&a)).unwrap();
        let vb = serde_json::to_string(&CategoryVocabulary::from_table(&b)).unwrap();
        prop_assert_eq!(va, vb);
        prop_assert_eq!(&a, &t);

        let setup = ContrastSetup::new(&a, "T", "B", Normalization::Centered).unwrap();
        prop_assert_eq!(setup.target.table.n_rows() + setup.background.table.n_rows(), a.n_rows());

        // Identity recoding twice is the same as once.
        let rules: Vec<RecodeRule> = a.schemas().iter().map(|s| RecodeRule {
            variable: s.name.clone(),
            mapping: s.levels.iter().map(|l| (l.clone(), l.clone())).collect(),
        }).collect();
        let once = apply_recode(&a, &rules).unwrap();
        prop_assert_eq!(&apply_recode(&once, &rules).unwrap(), &once);
        prop_assert_eq!(&once, &a);
    }
}
