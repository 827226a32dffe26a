mod common;

use common::*;
use hlasso_core::simbench::{self, Method, SimCase, SimDesign, TuneMethod};
use hlasso_core::{standardize, FitOptions, GridSpec, GroupStructure, ResponseMode};
use ndarray::{s, Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

/// Independent re-derivation of the generator: signal draws for a case.
fn oracle_signal(case: SimCase, n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let cut = 0.674_489_750_196_081_7;
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..16).map(|_| r.sample(StandardNormal)).collect();
            let w: f64 = r.sample(StandardNormal);
            let x = |j: usize| (z[j - 1] + w) / 2f64.sqrt();
            let (x3, x6, x9) = (x(3), x(6), x(9));
            let level = if x9 <= -cut { 0 } else if x9 <= 0.0 { 1 } else if x9 <= cut { 2 } else { 3 };
            let ind = |l: usize| if level == l { 1.0 } else { 0.0 };
            match case {
                SimCase::AllInAllOut => {
                    x3 + 0.5 * x3.powi(2) + 0.1 * x3.powi(3) + 0.1 * x3.powi(4) + x6 - 0.5 * x6.powi(2)
                        + 0.15 * x6.powi(3)
                        + 0.1 * x6.powi(4)
                        + ind(0)
                        + ind(1)
                        + ind(2)
                }
                SimCase::NotAllInAllOut => (x3 + x3.powi(2)) + (2.0 * x6 - 1.5 * x6.powi(2)) + (ind(0) + 2.0 * ind(1)),
            }
        })
        .collect()
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

#[test]
fn continuous_covariates_have_unit_variance_and_half_correlation() {
    let cov = simbench::gen_covariates_seeded(100_000, 1);
    let n = cov.raw.nrows() as f64;
    for j in 0..8 {
        let c = cov.raw.column(j);
        let m = c.sum() / n;
        assert!(m.abs() < 0.02);
        assert!((c.mapv(|v| (v - m).powi(2)).sum() / n - 1.0).abs() < 0.02);
    }
    for (a, b) in [(0, 1), (2, 7), (4, 5)] {
        let ca = cov.raw.column(a);
        let cb = cov.raw.column(b);
        let r = ca.dot(&cb) / (ca.dot(&ca) * cb.dot(&cb)).sqrt();
        assert!((r - 0.5).abs() < 0.03, "corr {r}");
    }
}

#[test]
fn categorical_levels_are_quartiles() {
    let cov = simbench::gen_covariates_seeded(100_000, 2);
    for j in 8..16 {
        for level in 0..4 {
            let frac = cov.raw.column(j).iter().filter(|v| **v == level as f64).count() as f64 / 100_000.0;
            assert!((frac - 0.25).abs() < 0.01, "X{} level {level}: {frac}", j + 1);
        }
    }
}

#[test]
fn expanded_design_layout() {
    let cov = simbench::gen_covariates_seeded(50, 3);
    assert_eq!(cov.design.ncols(), 56);
    for i in 0..50 {
        for j in 0..8 {
            let x = cov.raw[[i, j]];
            for t in 0..4 {
                assert!((cov.design[[i, 4 * j + t]] - x.powi(t as i32 + 1)).abs() <= 1e-12 * x.abs().powi(t as i32 + 1).max(1.0));
            }
        }
        for j in 8..16 {
            let level = cov.raw[[i, j]] as usize;
            let block = cov.design.slice(s![i, 32 + 3 * (j - 8)..32 + 3 * (j - 7)]);
            let expected: Vec<f64> = (0..3).map(|l| if l == level { 1.0 } else { 0.0 }).collect();
            assert_eq!(block.to_vec(), expected);
        }
    }
}

#[test]
fn calibrated_noise_gives_snr_three() {
    for case in [SimCase::AllInAllOut, SimCase::NotAllInAllOut] {
        let sigma = simbench::calibrate_sigma(case, 1_000_000, 17).unwrap();
        let oracle_var = variance(&oracle_signal(case, 1_000_000, 99));
        let ratio = oracle_var / (sigma * sigma);
        assert!((ratio - 3.0).abs() <= 0.03, "{case:?}: {ratio}");
    }
}

#[test]
fn calibration_is_deterministic_and_scales() {
    let b = simbench::true_beta(SimCase::AllInAllOut);
    let s1 = simbench::calibrate_sigma_for(b.view(), 20_000, 5).unwrap();
    let s2 = simbench::calibrate_sigma_for(b.view(), 20_000, 5).unwrap();
    assert_eq!(s1, s2);
    let doubled = simbench::calibrate_sigma_for((&b * 2.0).view(), 20_000, 5).unwrap();
    assert!((doubled - 2.0 * s1).abs() <= 1e-12 * s1);
}

#[test]
fn null_model_error_is_the_signal_variance() {
    let case = SimCase::NotAllInAllOut;
    let sigma = simbench::calibrate_sigma(case, 200_000, 8).unwrap();
    let beta = simbench::true_beta(case);
    let train = simbench::gen_covariates_seeded(100_000, 9);
    let test = simbench::gen_covariates_seeded(100_000, 10);
    let mean_signal = train.design.dot(&beta).mean().unwrap();
    let me = simbench::model_error(test.design.view(), Array1::zeros(56).view(), mean_signal, beta.view());
    assert!((me / (3.0 * sigma * sigma) - 1.0).abs() < 0.05, "{me} vs {}", 3.0 * sigma * sigma);
}

fn small_design(case: SimCase) -> SimDesign {
    SimDesign { n_test: 500, sigma: Some(1.7), grid: GridSpec::parse("0.001:1:15").unwrap(), ..SimDesign::new(case, 21) }
}

#[test]
fn benchmark_is_bit_reproducible() {
    let d = small_design(SimCase::AllInAllOut);
    let a = simbench::run_benchmark(&d, Method::Hlasso, 3, &FitOptions::default()).unwrap();
    let b = simbench::run_benchmark(&d, Method::Hlasso, 3, &FitOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.per_rep.len(), 3);
    assert!(a.per_rep.iter().all(|r| (0.0..=100.0).contains(&r.zero_var_pct)));
    let se = a.mse.se;
    let m = a.mse.mean;
    let sd = (a.per_rep.iter().map(|r| (r.mse - m).powi(2)).sum::<f64>() / 2.0).sqrt();
    assert!((se - sd / 3f64.sqrt()).abs() < 1e-15);
}

#[test]
fn ols_never_zeroes() {
    let r = simbench::run_benchmark(&small_design(SimCase::NotAllInAllOut), Method::Ols, 2, &FitOptions::default()).unwrap();
    assert_eq!(r.zero_var_pct.mean, 0.0);
    assert_eq!(r.nonzero_var_pct.mean, 100.0);
}

fn tune_data(binary: bool, seed: u64) -> (hlasso_core::StandardizedDataset, GroupStructure) {
    let mut r = rng(seed);
    let x: Array2<f64> = normal_matrix(&mut r, 60, 4);
    let eta = x.column(0).to_owned() * 2.0 - x.column(3).to_owned();
    let y = if binary {
        eta.mapv(|e| if r.random_range(0.0..1.0) < sigmoid(e) { 1.0 } else { 0.0 })
    } else {
        &eta + &normal_vector(&mut r, 60)
    };
    let mode = if binary { ResponseMode::Binary } else { ResponseMode::Gaussian };
    (standardize(x.view(), y.view(), mode).unwrap(), GroupStructure::contiguous(&[2, 2]).unwrap())
}

#[test]
fn tune_single_lambda_grid() {
    let (ds, g) = tune_data(false, 1);
    let t = simbench::tune_kfold(&ds, &g, TuneMethod::Hlasso, 5, &[0.7], 3, &FitOptions::default()).unwrap();
    assert_eq!(t.lambda, 0.7);
    assert_eq!(t.folds.iter().map(Vec::len).sum::<usize>(), 60);
}

#[test]
fn tune_breaks_ties_toward_larger_lambda() {
    let (ds, g) = tune_data(false, 2);
    // both values kill every group, so the losses tie exactly
    let t = simbench::tune_kfold(&ds, &g, TuneMethod::Hlasso, 4, &[1e6, 1e7, 1e6], 3, &FitOptions::default()).unwrap();
    assert_eq!(t.cv_curve[0].1, t.cv_curve[1].1);
    assert_eq!(t.lambda, 1e7);
}

#[test]
fn tune_curve_is_reproducible() {
    let (ds, g) = tune_data(true, 3);
    let grid = GridSpec::parse("0.01:3:5").unwrap().values();
    let a = simbench::tune_kfold(&ds, &g, TuneMethod::LogisticHlasso, 5, &grid, 11, &FitOptions::default()).unwrap();
    let b = simbench::tune_kfold(&ds, &g, TuneMethod::LogisticHlasso, 5, &grid, 11, &FitOptions::default()).unwrap();
    assert_eq!(a, b);
    for f in &a.folds {
        let ones = f.iter().filter(|&&i| ds.y[i] == 1.0).count();
        assert!(ones > 0 && ones < f.len());
    }
}

#[test]
fn tune_gives_up_when_a_class_is_too_rare() {
    let mut r = rng(4);
    let x = normal_matrix(&mut r, 30, 2);
    let mut y = Array1::zeros(30);
    y[0] = 1.0;
    let ds = standardize(x.view(), y.view(), ResponseMode::Binary).unwrap();
    let g = GroupStructure::contiguous(&[2]).unwrap();
    let e = simbench::tune_kfold(&ds, &g, TuneMethod::LogisticHlasso, 5, &[0.1], 1, &FitOptions::default()).unwrap_err();
    assert!(e.to_string().contains("after 10 attempts"), "{e}");
}

#[test]
fn tune_rejects_bad_fold_counts() {
    let (ds, g) = tune_data(false, 5);
    assert!(simbench::tune_kfold(&ds, &g, TuneMethod::Lasso, 1, &[0.1], 1, &FitOptions::default()).is_err());
    assert!(simbench::tune_kfold(&ds, &g, TuneMethod::Lasso, 61, &[0.1], 1, &FitOptions::default()).is_err());
}
