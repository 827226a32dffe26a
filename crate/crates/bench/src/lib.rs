//! Shared fixtures for the benchmarks.

use hlasso_core::simbench::{self, SimCase};
use hlasso_core::{standardize, GroupStructure, ResponseMode, StandardizedDataset};
use ndarray::{Array1, Array2};

/// One training draw from the simulation design.
pub fn simulated(case: SimCase, n: usize, seed: u64) -> (StandardizedDataset, GroupStructure) {
    let cov = simbench::gen_covariates_seeded(n, seed);
    let mut rng = simbench::rep_rng(seed, 0);
    let y = simbench::gen_response(cov.design.view(), case, 1.7, &mut rng).expect("response");
    let ds = standardize(cov.design.view(), y.view(), ResponseMode::Gaussian).expect("standardize");
    (ds, simbench::group_structure())
}

/// The same covariates with a thresholded response.
pub fn simulated_binary(n: usize, seed: u64) -> (StandardizedDataset, GroupStructure) {
    let cov = simbench::gen_covariates_seeded(n, seed);
    let beta = simbench::true_beta(SimCase::NotAllInAllOut);
    let signal = cov.design.dot(&beta);
    let centre = signal.mean().unwrap_or(0.0);
    let y: Array1<f64> = signal.mapv(|s| f64::from(s > centre));
    let ds = standardize(cov.design.view(), y.view(), ResponseMode::Binary).expect("standardize");
    (ds, simbench::group_structure())
}

/// Design and response for a bare subproblem.
pub fn subproblem(ds: &StandardizedDataset) -> (Array2<f64>, Array1<f64>) {
    (ds.x.clone(), ds.y.clone())
}
