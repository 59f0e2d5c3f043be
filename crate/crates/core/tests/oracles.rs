//! Worked examples checked against hand computation and brute-force oracles.

use cmca_core::alpha::{auto_alpha, AutoAlphaConfig};
use cmca_core::cmca::{category_coordinates, category_loadings, fit_cmca, row_coordinates};
use cmca_core::dataio::{split_groups, CategoricalTable, CategoryVocabulary};
use cmca_core::encode::{burt, correspondence, encode_group, one_hot, BurtMatrix, Normalization};
use cmca_core::mca::{fit_mca, mca_category_coordinates, mca_row_coordinates};
use cmca_core::pipeline::{AlphaChoice, ContrastSetup};
use cmca_core::synth;
use cmca_testkit as oracle;
use nalgebra::{DMatrix, DVector};

fn three_rows() -> CategoricalTable {
    CategoricalTable::from_rows(
        &["color", "shape"],
        &[
            vec!["red", "circle"],
            vec!["blue", "rectangle"],
            vec!["red", "rectangle"],
        ],
        "g",
        &["t", "t", "t"],
        "99",
    )
    .unwrap()
}

/// Columns of the library's vocabulary in the order [red, blue, circle, rectangle].
fn hand_order(vocab: &CategoryVocabulary) -> Vec<usize> {
    [
        ("color", "red"),
        ("color", "blue"),
        ("shape", "circle"),
        ("shape", "rectangle"),
    ]
    .iter()
    .map(|(v, l)| vocab.position(v, l).unwrap())
    .collect()
}

#[test]
fn three_row_burt_matches_hand_product() {
    let t = three_rows();
    let vocab = CategoryVocabulary::from_table(&t);
    let g = one_hot(&t, &vocab).unwrap();
    assert_eq!(g.grand_total(), 6);
    let b = burt(&correspondence(&g, Normalization::Raw).unwrap());
    // GᵀG counted by hand over [red, blue, circle, rectangle].
    let counts = [
        [2., 0., 1., 1.],
        [0., 1., 0., 1.],
        [1., 0., 1., 0.],
        [1., 1., 0., 2.],
    ];
    let unit = (1.0 / 6.0) * (1.0 / 6.0);
    let order = hand_order(&vocab);
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(
                b.values()[(order[i], order[j])],
                counts[i][j] * unit,
                "({i},{j})"
            );
            assert!((b.values()[(order[i], order[j])] - counts[i][j] / 36.0).abs() < 1e-17);
        }
    }
}

#[test]
fn three_row_mca_coordinates_match_hand_products() {
    let t = three_rows();
    let vocab = CategoryVocabulary::from_table(&t);
    let (z, b) = encode_group(&t, &vocab, Normalization::Raw).unwrap();
    let model = fit_mca(&b, 2)
        .unwrap()
        .with_column_masses(z.column_masses());
    let y = mca_row_coordinates(&z, &model).unwrap();
    let w = model.eigenvectors();
    for r in 0..3 {
        for j in 0..2 {
            let hand: f64 = (0..4).map(|k| z.values()[(r, k)] * w[(k, j)]).sum();
            assert!((y[(r, j)] - hand).abs() < 1e-15);
        }
    }
    let ycol = mca_category_coordinates(&model).unwrap();
    // Masses over [red, blue, circle, rectangle] are [2, 1, 1, 2] / 6.
    let masses = [2.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 6.0];
    for (i, &k) in hand_order(&vocab).iter().enumerate() {
        for j in 0..2 {
            assert!((ycol[(k, j)] - masses[i] * w[(k, j)]).abs() < 1e-15);
        }
    }
}

#[test]
fn mca_matches_power_iteration_on_random_psd() {
    for seed in 0..5 {
        let spectrum = [4.0, 2.5, 1.5, 0.8, 0.3, 0.05];
        let m = oracle::with_spectrum(&spectrum, seed);
        let b = BurtMatrix::from_matrix(m.clone(), 0).unwrap();
        let model = fit_mca(&b, 6).unwrap();
        let pairs = oracle::power_eigenpairs(&m, 6, 1_000_000);
        for (j, (lambda, v)) in pairs.iter().enumerate() {
            assert!((model.eigenvalues()[j] - lambda).abs() < 1e-8);
            let u: DVector<f64> = model.eigenvectors().column(j).into_owned();
            assert!(
                oracle::sign_free_distance(&u, v) < 1e-8,
                "seed {seed} pair {j}"
            );
        }
    }
}

#[test]
fn cmca_top_eigenvalue_against_random_directions_and_power_iteration() {
    for seed in 0..3 {
        let bt_m = oracle::with_spectrum(&[0.05, 0.03, 0.02, 0.01, 0.004, 0.001], 100 + seed);
        let bb_m = oracle::with_spectrum(&[0.04, 0.02, 0.01, 0.005, 0.002, 0.0], 200 + seed);
        let bt = BurtMatrix::from_matrix(bt_m.clone(), 0).unwrap();
        let bb = BurtMatrix::from_matrix(bb_m.clone(), 0).unwrap();
        let model = fit_cmca(&bt, &bb, 0.7, 2).unwrap();
        let diff = &bt_m - &bb_m * 0.7;

        let best = oracle::max_random_rayleigh(&diff, 100_000, seed);
        let lambda1 = model.eigenvalues()[0];
        assert!(best <= lambda1 + 1e-15, "random direction beat λ₁");
        assert!(lambda1 - best < 1e-3, "λ₁ {lambda1} vs sampled {best}");

        let pairs = oracle::power_eigenpairs(&diff, 2, 1_000_000);
        for (j, (lambda, v)) in pairs.iter().enumerate() {
            assert!((model.eigenvalues()[j] - lambda).abs() < 1e-8);
            let u: DVector<f64> = model.eigenvectors().column(j).into_owned();
            assert!(oracle::sign_free_distance(&u, v) < 1e-8);
        }
    }
}

#[test]
fn background_only_level_keeps_shared_dimensions() {
    let t = CategoricalTable::from_rows(
        &["v"],
        &[vec!["1"], vec!["2"], vec!["1"], vec!["5"], vec!["2"]],
        "party",
        &["Con", "Con", "Con", "UKIP", "UKIP"],
        "99",
    )
    .unwrap();
    let (tg, bg, vocab) = split_groups(&t, "Con", "UKIP").unwrap();
    let gt = one_hot(&tg, &vocab).unwrap();
    let gb = one_hot(&bg, &vocab).unwrap();
    assert_eq!(gt.values().ncols(), 3);
    assert_eq!(gb.values().ncols(), 3);
    let bt = burt(&correspondence(&gt, Normalization::Centered).unwrap());
    let bb = burt(&correspondence(&gb, Normalization::Centered).unwrap());
    assert_eq!(bt.dim(), bb.dim());
    let k5 = vocab.position("v", "5").unwrap();
    assert_eq!(gt.column_counts()[k5], 0);
    assert_eq!(gb.column_counts()[k5], 1);
}

#[test]
fn translation_formula_at_alpha_zero_agrees_with_mca() {
    // At α = 0 the translation formula reduces to D⁻¹ W diag(λ)^(1/2), so
    // D² · Y_col(translation) = Y_col(MCA) · diag(λ)^(1/2) entrywise.
    let t = synth::survey(3);
    let setup = ContrastSetup::new(&t, "Con", "Lab", Normalization::Centered).unwrap();
    let fit = setup.fit(AlphaChoice::Fixed(0.0), 2).unwrap();
    let translated = fit.category_coordinates(&setup).unwrap();

    let mca = fit_mca(&setup.target.burt, 2)
        .unwrap()
        .with_column_masses(setup.target.z.column_masses());
    let direct = mca_category_coordinates(&mca).unwrap();
    let masses = setup.target.z.column_masses();
    let lambda = mca.eigenvalues();
    let scale = oracle::max_abs(&direct);
    for k in 0..setup.vocab.len() {
        for j in 0..2 {
            let lhs = masses[k] * masses[k] * translated.values[(k, j)];
            let rhs = direct[(k, j)] * lambda[j].sqrt();
            assert!(
                (lhs - rhs).abs() <= 1e-10 * scale,
                "({k},{j}) {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn category_coordinates_recomputed_from_row_coordinates() {
    let t = synth::survey(5);
    let setup = ContrastSetup::new(&t, "Con", "Lab", Normalization::Centered).unwrap();
    let model = fit_cmca(&setup.target.burt, &setup.background.burt, 0.5, 2).unwrap();
    let y = row_coordinates(&setup.target.z, &model).unwrap();
    let cc = category_coordinates(&setup.target.z, &y, &model).unwrap();
    // Direct loops over the definition, from fresh Z and U.
    let z = setup.target.z.values();
    let u = model.eigenvectors();
    let masses = setup.target.z.column_masses();
    let (n, k) = z.shape();
    let mut expected = DMatrix::zeros(k, 2);
    for c in 0..k {
        for j in 0..2 {
            let mut acc = 0.0;
            for r in 0..n {
                let yr: f64 = (0..k).map(|q| z[(r, q)] * u[(q, j)]).sum();
                acc += z[(r, c)] * yr;
            }
            expected[(c, j)] = acc / masses[c] / model.eigenvalues()[j].sqrt();
        }
    }
    let scale = oracle::max_abs(&expected);
    assert!(oracle::max_abs(&(&cc.values - &expected)) <= 1e-10 * scale);

    let l = category_loadings(&model, &setup.vocab).unwrap();
    for j in 0..2 {
        let s = model.eigenvalues()[j].sqrt();
        for c in 0..k {
            assert!((l.per_category()[(c, j)] - u[(c, j)] * s).abs() < 1e-15);
        }
        let total: f64 = l.per_variable_total().column(j).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn background_variance_decreases_with_alpha() {
    let f = synth::planted_subgroups(2);
    let setup = ContrastSetup::new(&f.table, "T", "B", Normalization::Centered).unwrap();
    let mut previous = f64::INFINITY;
    for step in 0..=40 {
        let alpha = step as f64 * 0.25;
        let m = fit_cmca(&setup.target.burt, &setup.background.burt, alpha, 1).unwrap();
        let sigma_b = setup.background.burt.quadratic_form(&m.component(0));
        assert!(sigma_b <= previous * (1.0 + 1e-9) + 1e-18, "α={alpha}");
        previous = sigma_b;
    }
}

#[test]
fn auto_alpha_on_planted_fixture_is_monotone_and_fast() {
    let f = synth::planted_subgroups(1);
    let setup = ContrastSetup::new(&f.table, "T", "B", Normalization::Centered).unwrap();
    let (model, trace) = auto_alpha(
        &setup.target.burt,
        &setup.background.burt,
        2,
        &AutoAlphaConfig::default(),
    )
    .unwrap();
    assert!(trace.iterations() <= 10);
    let alphas: Vec<f64> = trace.alphas().collect();
    assert!(
        alphas.windows(2).all(|w| w[1] >= w[0] - 1e-12),
        "{alphas:?}"
    );
    assert!(model.eigenvalues()[0] > 0.0);
}
