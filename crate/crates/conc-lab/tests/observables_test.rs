#![allow(clippy::needless_range_loop)]

mod common;

use approx::assert_abs_diff_eq;
use conc_lab::generators::*;
use conc_lab::observables::*;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;

fn synthetic_ensemble(
    data: Array2<f64>,
    master_seed: u64,
    stream: u64,
    matrix_shape: Option<(usize, usize)>,
) -> SampleEnsemble {
    SampleEnsemble {
        data,
        model: serde_json::json!({"synthetic": true}),
        provenance: Provenance {
            master_seed,
            stream,
            coupled: false,
        },
        matrix_shape,
    }
}

#[test]
fn hadamard_with_ones_is_identity() {
    let model = VectorModel::new(Kind::Gaussian, 12).unwrap();
    let x = sample_stream(&model, 64, 1, 0).unwrap();
    let ones = synthetic_ensemble(Array2::ones((64, 12)), 1, 7, None);
    let prod = hadamard_chain(&[&x, &ones]).unwrap();
    assert_eq!(prod.data, x.data);
    // chaining identity factors twice is a bit-exact no-op
    let twice = hadamard_chain(&[&prod, &ones]).unwrap();
    for (a, b) in twice.data.iter().zip(x.data.iter()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn matrix_chain_passthrough_and_identity() {
    let mm = MatrixModel::new(VectorModel::new(Kind::Gaussian, 3).unwrap(), 3).unwrap();
    let x = sample_matrix(&mm, 10, 5, 0).unwrap();
    let single = matrix_chain(&[&x]).unwrap();
    assert_eq!(single.data, x.data);

    let mut eye_rows = Array2::zeros((10, 9));
    for t in 0..10 {
        for i in 0..3 {
            eye_rows[(t, i * 3 + i)] = 1.0;
        }
    }
    let eye = synthetic_ensemble(eye_rows, 5, 9, Some((3, 3)));
    let prod = matrix_chain(&[&x, &eye]).unwrap();
    for (a, b) in prod.data.iter().zip(x.data.iter()) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn bilinear_form_zero_matrix_and_symmetry() {
    let model = VectorModel::new(Kind::Gaussian, 6).unwrap();
    let x = sample_stream(&model, 200, 3, 0).unwrap();
    let y = sample_stream(&model, 200, 3, 1).unwrap();
    let zero = Array2::zeros((6, 6));
    let vals = bilinear_form(&x, &zero.view(), &y).unwrap();
    assert!(vals.iter().all(|v| *v == 0.0));

    let mut rng = common::test_rng(8);
    let a = Array2::from_shape_fn((6, 6), |_| rng.random_range(-1.0..1.0));
    let xay = bilinear_form(&x, &a.view(), &y).unwrap();
    let yatx = bilinear_form(&y, &a.t().to_owned().view(), &x).unwrap();
    for (u, v) in xay.iter().zip(&yatx) {
        assert!(
            (u - v).abs() <= 1e-12 * u.abs().max(1.0),
            "symmetry violated: {u} vs {v}"
        );
    }
}

#[test]
fn bilinear_variance_matches_frobenius_and_quadrature_oracle() {
    let p = 3usize;
    let n = 200_000usize;
    let mut rng = common::test_rng(21);
    let a = Array2::from_shape_fn((p, p), |_| rng.random_range(-1.0..1.0));
    let fro_sq: f64 = a.iter().map(|v| v * v).sum();
    // independent 6-d Gauss-Hermite route for E[(x^T A y)^2]
    let quad = common::bilinear_second_moment_quadrature(&a);
    assert_abs_diff_eq!(quad, fro_sq, epsilon = 1e-8 * fro_sq.max(1.0));

    let model = VectorModel::new(Kind::Gaussian, p).unwrap();
    let x = sample_stream(&model, n, 1234, 0).unwrap();
    let y = sample_stream(&model, n, 1234, 1).unwrap();
    let vals = bilinear_form(&x, &a.view(), &y).unwrap();
    let second: f64 = vals.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let rel = (second - quad).abs() / quad;
    assert!(rel <= 5.0 / (n as f64).sqrt() * 3.0, "relative error {rel}");
}

#[test]
fn trace_pairing_consistency_with_bilinear() {
    let p = 5usize;
    let ncols = 7usize;
    let mm = MatrixModel::new(VectorModel::new(Kind::Gaussian, p).unwrap(), ncols).unwrap();
    let x = sample_matrix(&mm, 30, 42, 0).unwrap();
    let y = sample_matrix(&mm, 30, 42, 1).unwrap();
    let ones = synthetic_ensemble(Array2::ones((30, ncols)), 42, 9, None);
    let mut rng = common::test_rng(5);
    let a = Array2::from_shape_fn((p, p), |_| rng.random_range(-0.3..0.3));
    let (vals, _) = trace_pairing(&a.view(), &x, &ones, &y, PairingMode::Frobenius).unwrap();
    // with D = I the pairing is the sum over matched columns of y_i^T A x_i
    for t in 0..30 {
        let xt = x.trial_matrix(t).unwrap();
        let yt = y.trial_matrix(t).unwrap();
        let mut acc = 0.0;
        for i in 0..ncols {
            acc += yt.column(i).dot(&a.dot(&xt.column(i)));
        }
        assert!(
            (acc - vals[t]).abs() <= 1e-10 * acc.abs().max(1.0),
            "trial {t}: {acc} vs {}",
            vals[t]
        );
    }
}

#[test]
fn trace_pairing_sqrt_n_e11_reduces_to_scalar_case() {
    let p = 4usize;
    let ncols = 6usize;
    let mm = MatrixModel::new(VectorModel::new(Kind::Gaussian, p).unwrap(), ncols).unwrap();
    let x = sample_matrix(&mm, 20, 7, 0).unwrap();
    let y = sample_matrix(&mm, 20, 7, 1).unwrap();
    let mut d_rows = Array2::zeros((20, ncols));
    let sqrt_n = (ncols as f64).sqrt();
    for t in 0..20 {
        d_rows[(t, 0)] = sqrt_n;
    }
    let d = synthetic_ensemble(d_rows, 7, 11, None);
    let mut rng = common::test_rng(17);
    let a = Array2::from_shape_fn((p, p), |_| rng.random_range(-1.0..1.0));
    let (vals, _) = trace_pairing(&a.view(), &x, &d, &y, PairingMode::Frobenius).unwrap();
    for t in 0..20 {
        let xt = x.trial_matrix(t).unwrap();
        let yt = y.trial_matrix(t).unwrap();
        let expect = sqrt_n * yt.column(0).dot(&a.dot(&xt.column(0)));
        assert!((vals[t] - expect).abs() <= 1e-10 * expect.abs().max(1.0));
    }
}

#[test]
fn xdy_action_degenerate_cases() {
    let p = 4usize;
    let ncols = 3usize;
    let mm = MatrixModel::new(VectorModel::new(Kind::Gaussian, p).unwrap(), ncols).unwrap();
    let x = sample_matrix(&mm, 15, 2, 0).unwrap();
    let y = sample_matrix(&mm, 15, 2, 1).unwrap();
    let zero_d = synthetic_ensemble(Array2::zeros((15, ncols)), 2, 5, None);
    let u = Array1::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
    let out = xdy_action(&x, &zero_d, &y, &u.view()).unwrap();
    assert!(out.data.iter().all(|v| *v == 0.0));

    // single-column expansion: n = 1, D = I gives x_1 * (y_1 . u)
    let mm1 = MatrixModel::new(VectorModel::new(Kind::Gaussian, p).unwrap(), 1).unwrap();
    let x1 = sample_matrix(&mm1, 15, 3, 0).unwrap();
    let y1 = sample_matrix(&mm1, 15, 3, 1).unwrap();
    let ones_d = synthetic_ensemble(Array2::ones((15, 1)), 3, 6, None);
    let out = xdy_action(&x1, &ones_d, &y1, &u.view()).unwrap();
    for t in 0..15 {
        let xt = x1.trial_matrix(t).unwrap();
        let yt = y1.trial_matrix(t).unwrap();
        let scal = yt.column(0).dot(&u);
        for i in 0..p {
            assert!((out.data[(t, i)] - scal * xt[(i, 0)]).abs() < 1e-13);
        }
    }
}

#[test]
fn ydax_diag_stat_degenerate_cases() {
    let p = 4usize;
    let mm1 = MatrixModel::new(VectorModel::new(Kind::Gaussian, p).unwrap(), 1).unwrap();
    let x = sample_matrix(&mm1, 25, 9, 0).unwrap();
    let y = sample_matrix(&mm1, 25, 9, 1).unwrap();
    let mut rng = common::test_rng(3);
    let a_raw = Array2::from_shape_fn((p, p), |_| rng.random_range(-1.0..1.0));
    let fro: f64 = a_raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (vals, _) = ydax_diag_stat(&x, &y, &a_raw.view()).unwrap();
    // n = 1: the statistic is |y_1^T (A/||A||_F) x_1|
    for t in 0..25 {
        let xt = x.trial_matrix(t).unwrap();
        let yt = y.trial_matrix(t).unwrap();
        let expect = (yt.column(0).dot(&a_raw.dot(&xt.column(0))) / fro).abs();
        assert!((vals[t] - expect).abs() < 1e-12);
    }
    // X = 0 gives identically zero
    let zero_x = synthetic_ensemble(Array2::zeros((25, p)), 9, 13, Some((p, 1)));
    let (vals, _) = ydax_diag_stat(&zero_x, &y, &a_raw.view()).unwrap();
    assert!(vals.iter().all(|v| *v == 0.0));
}

#[test]
fn ydax_diag_mean_grows_like_sqrt_n() {
    let p = 32usize;
    let trials = 400usize;
    let mut cs = Vec::new();
    for (k, n) in [64usize, 256].into_iter().enumerate() {
        let mm = MatrixModel::new(VectorModel::new(Kind::Gaussian, p).unwrap(), n).unwrap();
        let x = sample_matrix(&mm, trials, 100 + k as u64, 0).unwrap();
        let y = sample_matrix(&mm, trials, 100 + k as u64, 1).unwrap();
        let a = Array2::eye(p);
        let (_, mean) = ydax_diag_stat(&x, &y, &a.view()).unwrap();
        cs.push(mean / (n as f64).sqrt());
    }
    let ratio = cs[0].max(cs[1]) / cs[0].min(cs[1]);
    assert!(ratio < 1.5, "sqrt(n) constants {cs:?} unstable (ratio {ratio})");
}

proptest! {
    #[test]
    fn diag_seminorm_dominated_by_frobenius(seed in 0u64..500) {
        let mut rng = common::test_rng(seed);
        let n = rng.random_range(1usize..12);
        let m = Array2::from_shape_fn((n, n), |_| rng.random_range(-5.0..5.0));
        let d = diag_seminorm(&m.view()).unwrap();
        let fro: f64 = m.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(d <= fro + 1e-12);
    }

    /// variation inequality of the entry-wise product: changing one slot moves
    /// the output by at most (prod of sup-norms of the others) * (slot change)
    #[test]
    fn hadamard_variation_inequality(seed in 0u64..500) {
        let mut rng = common::test_rng(seed);
        let p = rng.random_range(1usize..10);
        let m = rng.random_range(2usize..5);
        let slots: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let i = rng.random_range(0..m);
        let alt: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let prod = |xs: &[Vec<f64>]| -> Vec<f64> {
            let mut acc = vec![1.0; p];
            for x in xs {
                for (a, b) in acc.iter_mut().zip(x) {
                    *a *= b;
                }
            }
            acc
        };
        let base = prod(&slots);
        let mut changed = slots.clone();
        changed[i] = alt.clone();
        let moved = prod(&changed);
        let diff_norm: f64 = base
            .iter()
            .zip(&moved)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let slot_change: f64 = slots[i]
            .iter()
            .zip(&alt)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let budget: f64 = slots
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, x)| x.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
            .product();
        prop_assert!(diff_norm <= budget * slot_change + 1e-9);
    }

    /// same inequality for the matrix product, with operator norms on the
    /// untouched slots and Frobenius on the changed one
    #[test]
    fn matrix_product_variation_inequality(seed in 0u64..200) {
        let mut rng = common::test_rng(seed);
        let p = rng.random_range(1usize..6);
        let m = rng.random_range(2usize..4);
        let mats: Vec<Array2<f64>> = (0..m)
            .map(|_| Array2::from_shape_fn((p, p), |_| rng.random_range(-1.0..1.0)))
            .collect();
        let i = rng.random_range(0..m);
        let alt = Array2::from_shape_fn((p, p), |_| rng.random_range(-1.0..1.0));
        let chain = |ms: &[Array2<f64>]| -> Array2<f64> {
            let mut acc = ms[0].clone();
            for mat in &ms[1..] {
                acc = acc.dot(mat);
            }
            acc
        };
        let base = chain(&mats);
        let mut changed = mats.clone();
        changed[i] = alt.clone();
        let moved = chain(&changed);
        let diff = &base - &moved;
        let diff_fro: f64 = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
        let slot = &mats[i] - &alt;
        let slot_fro: f64 = slot.iter().map(|v| v * v).sum::<f64>().sqrt();
        let budget: f64 = mats
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, mat)| conc_lab::linalg::spectral_norm(&mat.view()))
            .product();
        prop_assert!(diff_fro <= budget * slot_fro + 1e-8);
    }
}

#[test]
fn hadamard_product_norm_fits_its_declared_profile() {
    // x . y for independent gaussians: the norm observation must sit below
    // the two-regime product envelope with mu_i tied to E||Z||_inf
    use conc_lab::estimation::{check_profile, CenterKind, FitOptions};
    use conc_lab::profile::{ProductSpec, ProfileConstants};
    let p = 256usize;
    let n_trials = 20_000usize;
    let model = VectorModel::new(Kind::Gaussian, p).unwrap();
    let x = sample_stream(&model, n_trials, 2024, 0).unwrap();
    let y = sample_stream(&model, n_trials, 2024, 1).unwrap();
    let prod = hadamard_chain(&[&x, &y]).unwrap();
    let norms: Vec<f64> = prod
        .data
        .rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt())
        .collect();
    let mu = (2.0 * (p as f64).ln()).sqrt() + 1.0;
    let profile = ProductSpec::new(2.0, 1.0, vec![mu, mu])
        .unwrap()
        .product_profile(ProfileConstants::new(4.0, 4.0).unwrap());
    let report = check_profile(
        &norms,
        &profile,
        1.0,
        CenterKind::Median,
        0.05,
        FitOptions::default(),
    )
    .unwrap();
    assert!(report.envelope_pass, "{report:?}");
    assert!(report.moments_pass);
    // the spread itself stays at the leading-regime scale, far below sqrt(p)
    let std = common::std_dev(&norms);
    assert!(
        std <= 3.0 * (p as f64).ln().sqrt(),
        "norm observation spread {std} too wide"
    );
    // markdown rendering carries the verdicts
    let md = report.to_markdown();
    assert!(md.contains("envelope: PASS"));
    assert!(md.contains("overall: PASS"));
}

#[test]
fn observation_descriptors_serialize_and_scalar_csv_exports() {
    let obs = Observation::Linear {
        u: Array1::from_vec(vec![0.6, 0.8]),
    };
    assert!((obs.lipschitz_constant() - 1.0).abs() < 1e-12);
    let json = serde_json::to_string(&obs).unwrap();
    let back: Observation = serde_json::from_str(&json).unwrap();
    assert!((back.lipschitz_constant() - 1.0).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stat.csv");
    export_scalar_csv(&[1.5, -2.0, 0.25], "bilinear_form", &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, "bilinear_form\n1.5\n-2\n0.25\n");
}

#[test]
fn dimension_mismatch_errors() {
    let m6 = VectorModel::new(Kind::Gaussian, 6).unwrap();
    let m4 = VectorModel::new(Kind::Gaussian, 4).unwrap();
    let x = sample_stream(&m6, 10, 1, 0).unwrap();
    let y = sample_stream(&m4, 10, 1, 1).unwrap();
    assert!(hadamard_chain(&[&x, &y]).is_err());
    let a = Array2::<f64>::zeros((3, 3));
    assert!(bilinear_form(&x, &a.view(), &y).is_err());
}
