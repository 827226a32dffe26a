//! Simulation study harness.
//!
//! Sixteen latent covariates `X_j = (Z_j + W)/√2` share a common factor `W`.
//! The first eight are expanded into raw polynomial terms `x, x², x³, x⁴`; the
//! last eight are cut at the standard normal quartiles into levels 0..3 and
//! coded by indicators for levels 0, 1, 2. That gives 16 groups and 56
//! columns. Noise is scaled so `Var(signal)/σ² = 3`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{self, FitOptions, GridSpec, InitMode};
use crate::error::{input, Error, Result};
use crate::glm;
use crate::linalg;
use crate::model::{standardize, GroupStructure, PenaltySpec, ResponseMode, StandardizedDataset, WeightRecipe};
use crate::prox::{self, Quadratic};

pub const N_LATENT: usize = 16;
pub const N_CONTINUOUS: usize = 8;
pub const N_CATEGORICAL: usize = 8;
pub const POLY_DEGREE: usize = 4;
pub const N_INDICATORS: usize = 3;
pub const N_COLUMNS: usize = N_CONTINUOUS * POLY_DEGREE + N_CATEGORICAL * N_INDICATORS;
pub const N_GROUPS: usize = N_CONTINUOUS + N_CATEGORICAL;
pub const TARGET_SNR: f64 = 3.0;

/// Standard normal quartiles `Φ⁻¹(1/4), Φ⁻¹(1/2), Φ⁻¹(3/4)`.
pub const QUARTILE_CUTS: [f64; 3] = [-0.674_489_750_196_081_7, 0.0, 0.674_489_750_196_081_7];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimCase {
    /// Active groups are fully active.
    #[serde(rename = "1")]
    AllInAllOut,
    /// Active groups keep only some of their terms.
    #[serde(rename = "2")]
    NotAllInAllOut,
}

impl SimCase {
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            1 => Ok(SimCase::AllInAllOut),
            2 => Ok(SimCase::NotAllInAllOut),
            _ => input(format!("case must be 1 or 2, got {n}")),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            SimCase::AllInAllOut => 1,
            SimCase::NotAllInAllOut => 2,
        }
    }
}

/// First column of latent covariate `j` (0-based) in the expanded design.
pub fn block_start(j: usize) -> usize {
    if j < N_CONTINUOUS {
        j * POLY_DEGREE
    } else {
        N_CONTINUOUS * POLY_DEGREE + (j - N_CONTINUOUS) * N_INDICATORS
    }
}

/// Group layout of the expanded design, labelled `X1`..`X16`.
pub fn group_structure() -> GroupStructure {
    let mut groups = Vec::with_capacity(N_GROUPS);
    for j in 0..N_LATENT {
        let width = if j < N_CONTINUOUS { POLY_DEGREE } else { N_INDICATORS };
        let s = block_start(j);
        groups.push((s..s + width).collect());
    }
    let labels = (1..=N_LATENT).map(|j| format!("X{j}")).collect();
    GroupStructure::with_labels(groups, labels, N_COLUMNS).expect("static layout is valid")
}

/// Column names of the expanded design.
pub fn column_names() -> Vec<String> {
    let mut names = Vec::with_capacity(N_COLUMNS);
    for j in 1..=N_CONTINUOUS {
        for pow in 1..=POLY_DEGREE {
            names.push(if pow == 1 { format!("X{j}") } else { format!("X{j}^{pow}") });
        }
    }
    for j in (N_CONTINUOUS + 1)..=N_LATENT {
        for level in 0..N_INDICATORS {
            names.push(format!("I(X{j}={level})"));
        }
    }
    names
}

/// Coefficients of the data-generating model on the expanded design.
pub fn true_beta(case: SimCase) -> Array1<f64> {
    let mut b = Array1::zeros(N_COLUMNS);
    let (x3, x6, x9) = (block_start(2), block_start(5), block_start(8));
    let (g3, g6, g9): (&[f64], &[f64], &[f64]) = match case {
        SimCase::AllInAllOut => (&[1.0, 0.5, 0.1, 0.1], &[1.0, -0.5, 0.15, 0.1], &[1.0, 1.0, 1.0]),
        SimCase::NotAllInAllOut => (&[1.0, 1.0], &[2.0, -1.5], &[1.0, 2.0]),
    };
    for (s, vals) in [(x3, g3), (x6, g6), (x9, g9)] {
        for (i, v) in vals.iter().enumerate() {
            b[s + i] = *v;
        }
    }
    b
}

#[derive(Debug, Clone)]
pub struct Covariates {
    /// Latent `X_1..X_16`, categorical ones already discretized to 0..3.
    pub raw: Array2<f64>,
    /// Expanded 56-column design.
    pub design: Array2<f64>,
}

fn quartile_level(v: f64) -> usize {
    QUARTILE_CUTS.iter().filter(|&&c| v > c).count()
}

/// Draws `n` rows of covariates from `rng`.
pub fn gen_covariates<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Covariates {
    let mut raw = Array2::<f64>::zeros((n, N_LATENT));
    let mut design = Array2::<f64>::zeros((n, N_COLUMNS));
    let mut z = [0.0f64; N_LATENT];
    for i in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        let w: f64 = rng.sample(StandardNormal);
        for j in 0..N_LATENT {
            let x = (z[j] + w) / std::f64::consts::SQRT_2;
            let s = block_start(j);
            if j < N_CONTINUOUS {
                raw[[i, j]] = x;
                let mut pow = x;
                for t in 0..POLY_DEGREE {
                    design[[i, s + t]] = pow;
                    pow *= x;
                }
            } else {
                let level = quartile_level(x);
                raw[[i, j]] = level as f64;
                if level < N_INDICATORS {
                    design[[i, s + level]] = 1.0;
                }
            }
        }
    }
    Covariates { raw, design }
}

pub fn gen_covariates_seeded(n: usize, seed: u64) -> Covariates {
    gen_covariates(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `y = design·β_true + ε`, `ε ~ N(0, σ²)`.
pub fn gen_response<R: Rng + ?Sized>(design: ArrayView2<f64>, case: SimCase, sigma: f64, rng: &mut R) -> Result<Array1<f64>> {
    if !(sigma >= 0.0) {
        return input("sigma must be non-negative");
    }
    if design.ncols() != N_COLUMNS {
        return Err(Error::Dimension(format!("expected {N_COLUMNS} columns, got {}", design.ncols())));
    }
    let mut y = design.dot(&true_beta(case));
    if sigma > 0.0 {
        for v in y.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *v += sigma * e;
        }
    }
    Ok(y)
}

/// Sample variance of `design·β` over `mc_n` fresh draws.
pub fn signal_variance(beta: ArrayView1<f64>, mc_n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chunk = 50_000;
    let (mut count, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    let mut remaining = mc_n;
    while remaining > 0 {
        let n = remaining.min(chunk);
        let cov = gen_covariates(n, &mut rng);
        for s in cov.design.dot(&beta).iter() {
            count += 1;
            let delta = s - mean;
            mean += delta / count as f64;
            m2 += delta * (s - mean);
        }
        remaining -= n;
    }
    m2 / (count.max(2) - 1) as f64
}

pub const DEFAULT_CALIBRATION_DRAWS: usize = 1_000_000;
pub const CALIBRATION_SEED: u64 = 0x5EED_5A12;

/// Noise SD giving signal-to-noise ratio 3, from a Monte Carlo signal variance.
pub fn calibrate_sigma(case: SimCase, mc_n: usize, seed: u64) -> Result<f64> {
    calibrate_sigma_for(true_beta(case).view(), mc_n, seed)
}

pub fn calibrate_sigma_for(beta: ArrayView1<f64>, mc_n: usize, seed: u64) -> Result<f64> {
    if mc_n < 10_000 {
        return input(format!("calibration needs at least 10^4 draws, got {mc_n}"));
    }
    Ok((signal_variance(beta, mc_n, seed) / TARGET_SNR).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Method {
    Hlasso,
    AdaptiveHlasso { gamma: f64 },
    Lasso,
    Ols,
}

impl Method {
    pub fn parse(name: &str, gamma: f64) -> Result<Self> {
        match name {
            "hlasso" => Ok(Method::Hlasso),
            "adaptive_hlasso" | "adaptive-hlasso" => Ok(Method::AdaptiveHlasso { gamma }),
            "lasso" => Ok(Method::Lasso),
            "ols" => Ok(Method::Ols),
            other => input(format!("unknown method '{other}' (hlasso, adaptive_hlasso, lasso, ols)")),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Hlasso => "hlasso",
            Method::AdaptiveHlasso { .. } => "adaptive_hlasso",
            Method::Lasso => "lasso",
            Method::Ols => "ols",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub case: SimCase,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    /// `None` calibrates from `DEFAULT_CALIBRATION_DRAWS` draws.
    pub sigma: Option<f64>,
    pub seed: u64,
    /// λ grid relative to each replication's λ_max.
    pub grid: GridSpec,
}

impl SimDesign {
    pub fn new(case: SimCase, seed: u64) -> Self {
        Self {
            case,
            n_train: 400,
            n_valid: 200,
            n_test: 10_000,
            sigma: None,
            seed,
            grid: GridSpec::relative_default(),
        }
    }

    pub fn resolve_sigma(&self) -> Result<f64> {
        match self.sigma {
            Some(s) if s > 0.0 => Ok(s),
            Some(s) => input(format!("sigma must be positive, got {s}")),
            None => calibrate_sigma(self.case, DEFAULT_CALIBRATION_DRAWS, CALIBRATION_SEED),
        }
    }
}

/// RNG stream owned by one replication.
pub fn rep_rng(master_seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(rep as u64 + 1);
    rng
}

/// Solver health across every fit of a replication.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitHealth {
    pub fits: usize,
    pub converged_fits: usize,
    /// Largest drop between consecutive objective values.
    pub max_ascent_violation: f64,
    /// Largest `|d_k - √(λ Σ w|β_k|)|` over converged fits.
    pub max_fixed_point_gap: f64,
}

impl FitHealth {
    pub fn record(&mut self, fit: &crate::model::HLassoFit, groups: &GroupStructure) {
        self.fits += 1;
        self.max_ascent_violation = self.max_ascent_violation.max(ascent_violation(&fit.objective_trace));
        if fit.converged {
            self.converged_fits += 1;
            if fit.lambda > 0.0 {
                if let Ok(gap) = engine::fixed_point_gap(fit, groups) {
                    self.max_fixed_point_gap = self.max_fixed_point_gap.max(gap);
                }
            }
        }
    }

    pub fn merge(&mut self, other: &FitHealth) {
        self.fits += other.fits;
        self.converged_fits += other.converged_fits;
        self.max_ascent_violation = self.max_ascent_violation.max(other.max_ascent_violation);
        self.max_fixed_point_gap = self.max_fixed_point_gap.max(other.max_fixed_point_gap);
    }
}

/// Largest decrease between consecutive entries (0 for a non-decreasing trace).
pub fn ascent_violation(trace: &[f64]) -> f64 {
    trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub lambda: Option<f64>,
    pub validation_error: f64,
    pub mse: f64,
    pub zero_var_pct: f64,
    pub nonzero_var_pct: f64,
    pub selected: Vec<bool>,
    pub health: FitHealth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self { mean, se: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self { mean, se: (var / n as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub case: SimCase,
    pub method: Method,
    pub reps: usize,
    pub sigma: f64,
    pub per_rep: Vec<RepOutcome>,
    pub failures: Vec<(usize, String)>,
    pub mse: MeanSe,
    pub zero_var_pct: MeanSe,
    pub nonzero_var_pct: MeanSe,
    pub health: FitHealth,
}

/// Selection and accuracy metrics of one coefficient estimate.
pub fn selection_metrics(beta_hat: ArrayView1<f64>, beta_true: ArrayView1<f64>) -> (f64, f64) {
    let (mut zero_ok, mut zero_n, mut nz_ok, mut nz_n) = (0usize, 0usize, 0usize, 0usize);
    for (h, t) in beta_hat.iter().zip(beta_true.iter()) {
        if *t == 0.0 {
            zero_n += 1;
            zero_ok += (*h == 0.0) as usize;
        } else {
            nz_n += 1;
            nz_ok += (*h != 0.0) as usize;
        }
    }
    let pct = |ok: usize, n: usize| if n == 0 { 100.0 } else { 100.0 * ok as f64 / n as f64 };
    (pct(zero_ok, zero_n), pct(nz_ok, nz_n))
}

/// Model error `mean_i (x_iᵀβ̂ + b̂₀ - x_iᵀβ)²` on a design.
pub fn model_error(design: ArrayView2<f64>, beta_hat: ArrayView1<f64>, intercept: f64, beta_true: ArrayView1<f64>) -> f64 {
    let diff = &beta_hat - &beta_true;
    let e = design.dot(&diff) + intercept;
    e.dot(&e) / e.len() as f64
}

/// Candidate (β on raw scale, intercept) per λ for one method, plus health.
struct Candidates {
    lambdas: Vec<Option<f64>>,
    coefs: Vec<(Array1<f64>, f64)>,
    health: FitHealth,
}

fn to_raw(ds: &StandardizedDataset, beta_std: &Array1<f64>) -> (Array1<f64>, f64) {
    let b = beta_std / &ds.column_norms;
    let c = ds.y_mean - b.dot(&ds.column_means);
    (b, c)
}

/// Lasso path over a descending grid, warm-started (the problem is convex).
pub fn lasso_path(ds: &StandardizedDataset, grid: &[f64], opts: &FitOptions) -> Vec<Array1<f64>> {
    let q = Quadratic::from_data(ds.x.view(), ds.y.view()).expect("dataset is consistent");
    let mut b = Array1::zeros(ds.n_vars());
    let mut out = Vec::with_capacity(grid.len());
    for &l in grid {
        let pen = Array1::from_elem(ds.n_vars(), l);
        b = match prox::lasso_cd(&q, pen.view(), b, opts.inner()) {
            Ok(v) => v,
            Err(Error::MaxIterations { last_iterate, .. }) => Array1::from(last_iterate),
            Err(e) => panic!("lasso path on validated input: {e}"),
        };
        out.push(b.clone());
    }
    out
}

fn candidates(ds: &StandardizedDataset, groups: &GroupStructure, method: Method, grid: &GridSpec, opts: &FitOptions) -> Result<Candidates> {
    let mut health = FitHealth::default();
    match method {
        Method::Ols => {
            let b = linalg::ols(ds.x.view(), ds.y.view())?;
            Ok(Candidates { lambdas: vec![None], coefs: vec![to_raw(ds, &b)], health })
        }
        Method::Lasso => {
            let top = linalg::max_abs(linalg::xt_y(ds.x.view(), ds.y.view()).view());
            let grid = grid.scaled(top);
            let path = lasso_path(ds, &grid, opts);
            Ok(Candidates {
                lambdas: grid.iter().map(|l| Some(*l)).collect(),
                coefs: path.iter().map(|b| to_raw(ds, b)).collect(),
                health,
            })
        }
        Method::Hlasso | Method::AdaptiveHlasso { .. } => {
            let recipe = match method {
                Method::AdaptiveHlasso { gamma } => WeightRecipe::OlsPower { gamma },
                _ => WeightRecipe::Unit,
            };
            let weights = engine::weights_for_recipe(ds, recipe)?;
            let grid = grid.scaled(engine::lambda_max(ds, weights.view()));
            let init = engine::initial_point(ds, groups, &InitMode::Auto)?;
            let mut o = opts.clone();
            o.init_mode = InitMode::Supplied { d: init.0.to_vec(), alpha: init.1.to_vec() };
            let fits: Vec<_> = grid
                .iter()
                .map(|&l| {
                    let pen = PenaltySpec::new(vec![l], weights.clone(), recipe)?;
                    engine::fit_hlasso(ds, groups, &pen, &o)
                })
                .collect::<Result<_>>()?;
            for f in &fits {
                health.record(f, groups);
            }
            Ok(Candidates {
                lambdas: grid.iter().map(|l| Some(*l)).collect(),
                coefs: fits.iter().map(|f| to_raw(ds, &f.beta)).collect(),
                health,
            })
        }
    }
}

/// One replication: draw data, fit over the grid, tune on validation, score on test.
pub fn run_replication(design: &SimDesign, method: Method, sigma: f64, rep: usize, opts: &FitOptions) -> Result<RepOutcome> {
    let mut rng = rep_rng(design.seed, rep);
    let beta_true = true_beta(design.case);
    let train = gen_covariates(design.n_train, &mut rng);
    let y_train = gen_response(train.design.view(), design.case, sigma, &mut rng)?;
    let valid = gen_covariates(design.n_valid, &mut rng);
    let y_valid = gen_response(valid.design.view(), design.case, sigma, &mut rng)?;
    let test = gen_covariates(design.n_test, &mut rng);

    let ds = standardize(train.design.view(), y_train.view(), ResponseMode::Gaussian)?;
    let groups = group_structure();
    let cand = candidates(&ds, &groups, method, &design.grid, opts)?;

    let mut best: Option<(usize, f64)> = None;
    for (i, (b, c)) in cand.coefs.iter().enumerate() {
        let r = &y_valid - &(valid.design.dot(b) + *c);
        let err = r.dot(&r) / r.len() as f64;
        // strict: ties keep the earlier (larger) λ
        if best.is_none_or(|(_, e)| err < e) {
            best = Some((i, err));
        }
    }
    let (i, validation_error) = best.ok_or_else(|| Error::Input("empty candidate set".into()))?;
    let (b, c) = &cand.coefs[i];
    let (zero_var_pct, nonzero_var_pct) = selection_metrics(b.view(), beta_true.view());
    Ok(RepOutcome {
        rep,
        lambda: cand.lambdas[i],
        validation_error,
        mse: model_error(test.design.view(), b.view(), *c, beta_true.view()),
        zero_var_pct,
        nonzero_var_pct,
        selected: b.iter().map(|v| *v != 0.0).collect(),
        health: cand.health,
    })
}

/// Runs `reps` independent replications (in parallel) and aggregates them in rep order.
pub fn run_benchmark(design: &SimDesign, method: Method, reps: usize, opts: &FitOptions) -> Result<SimReport> {
    if reps < 1 {
        return input("reps must be at least 1");
    }
    GridSpec::new(design.grid.min, design.grid.max, design.grid.count)?;
    let sigma = design.resolve_sigma()?;
    let outcomes: Vec<Result<RepOutcome>> = (0..reps)
        .into_par_iter()
        .map(|rep| run_replication(design, method, sigma, rep, opts))
        .collect();

    let mut per_rep = Vec::new();
    let mut failures = Vec::new();
    for (rep, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => per_rep.push(r),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    let col = |f: fn(&RepOutcome) -> f64| per_rep.iter().map(f).collect::<Vec<_>>();
    let mut health = FitHealth::default();
    for r in &per_rep {
        health.merge(&r.health);
    }
    Ok(SimReport {
        case: design.case,
        method,
        reps,
        sigma,
        mse: MeanSe::of(&col(|r| r.mse)),
        zero_var_pct: MeanSe::of(&col(|r| r.zero_var_pct)),
        nonzero_var_pct: MeanSe::of(&col(|r| r.nonzero_var_pct)),
        per_rep,
        failures,
        health,
    })
}

/// Method choices for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum TuneMethod {
    Hlasso,
    AdaptiveHlasso { gamma: f64 },
    Lasso,
    /// Logistic hierarchical lasso (binary response; groups may overlap).
    LogisticHlasso,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub lambda: f64,
    /// `(λ, mean held-out loss)` in grid order.
    pub cv_curve: Vec<(f64, f64)>,
    pub folds: Vec<Vec<usize>>,
}

const MAX_REFOLDS: usize = 10;

fn make_folds(y: ArrayView1<f64>, k: usize, binary: bool, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    use rand::seq::SliceRandom;
    let mut folds = vec![Vec::new(); k];
    if binary {
        let mut next = 0;
        for class in [0.0, 1.0] {
            let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
            idx.shuffle(rng);
            for i in idx {
                folds[next % k].push(i);
                next += 1;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..y.len()).collect();
        idx.shuffle(rng);
        for (pos, i) in idx.into_iter().enumerate() {
            folds[pos % k].push(i);
        }
    }
    for f in folds.iter_mut() {
        f.sort_unstable();
    }
    folds
}

fn both_classes(y: ArrayView1<f64>, rows: &[usize]) -> bool {
    let ones = rows.iter().filter(|&&i| y[i] == 1.0).count();
    ones > 0 && ones < rows.len()
}

/// Held-out loss of every grid point on one fold.
fn fold_losses(
    train: &StandardizedDataset,
    x_hold: ArrayView2<f64>,
    y_hold: ArrayView1<f64>,
    groups: &GroupStructure,
    method: TuneMethod,
    grid: &[f64],
    opts: &FitOptions,
) -> Result<Vec<f64>> {
    let raw_coefs: Vec<(Array1<f64>, f64)> = match method {
        TuneMethod::Lasso => {
            let mut order: Vec<usize> = (0..grid.len()).collect();
            order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));
            let sorted: Vec<f64> = order.iter().map(|&i| grid[i]).collect();
            let path = lasso_path(train, &sorted, opts);
            let mut out = vec![(Array1::zeros(0), 0.0); grid.len()];
            for (pos, &i) in order.iter().enumerate() {
                out[i] = to_raw(train, &path[pos]);
            }
            out
        }
        TuneMethod::Hlasso | TuneMethod::AdaptiveHlasso { .. } => {
            let recipe = match method {
                TuneMethod::AdaptiveHlasso { gamma } => WeightRecipe::OlsPower { gamma },
                _ => WeightRecipe::Unit,
            };
            let weights = engine::weights_for_recipe(train, recipe)?;
            grid.iter()
                .map(|&l| {
                    let pen = PenaltySpec::new(vec![l], weights.clone(), recipe)?;
                    let f = engine::fit_hlasso(train, groups, &pen, opts)?;
                    Ok(to_raw(train, &f.beta))
                })
                .collect::<Result<_>>()?
        }
        TuneMethod::LogisticHlasso => grid
            .iter()
            .map(|&l| {
                let pen = PenaltySpec::plain(l, train.n_vars())?;
                let f = glm::fit_logistic_hlasso(train, groups, &pen, opts)?;
                let b = &f.beta / &train.column_norms;
                let c = f.intercept - b.dot(&train.column_means);
                Ok((b, c))
            })
            .collect::<Result<_>>()?,
    };
    Ok(raw_coefs
        .iter()
        .map(|(b, c)| {
            let eta = x_hold.dot(b) + *c;
            match method {
                TuneMethod::LogisticHlasso => -glm::logistic_loglik(eta.view(), y_hold) / y_hold.len() as f64,
                _ => {
                    let r = &y_hold - &eta;
                    r.dot(&r) / r.len() as f64
                }
            }
        })
        .collect())
}

/// k-fold cross-validation over `grid`; ties go to the larger λ.
pub fn tune_kfold(ds: &StandardizedDataset, groups: &GroupStructure, method: TuneMethod, k: usize, grid: &[f64], seed: u64, opts: &FitOptions) -> Result<TuneResult> {
    if k < 2 {
        return input(format!("need at least 2 folds, got {k}"));
    }
    if ds.n < k {
        return input(format!("{} samples cannot fill {k} folds", ds.n));
    }
    if grid.is_empty() || grid.iter().any(|l| !(*l >= 0.0)) {
        return input("grid must be non-empty with non-negative values");
    }
    let binary = ds.mode == ResponseMode::Binary;
    if binary != (method == TuneMethod::LogisticHlasso) {
        return input("logistic tuning needs a binary dataset and vice versa");
    }
    let (x_raw, y_raw) = ds.raw();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = make_folds(y_raw.view(), k, binary, &mut rng);
    if binary {
        let mut attempts = 1;
        let ok = |folds: &Vec<Vec<usize>>| {
            folds.iter().all(|f| {
                let rest: Vec<usize> = (0..ds.n).filter(|i| !f.contains(i)).collect();
                both_classes(y_raw.view(), f) && both_classes(y_raw.view(), &rest)
            })
        };
        while !ok(&folds) {
            if attempts >= MAX_REFOLDS {
                return input(format!("could not form {k} folds with both classes after {MAX_REFOLDS} attempts"));
            }
            rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempts as u64));
            folds = make_folds(y_raw.view(), k, binary, &mut rng);
            attempts += 1;
        }
    }

    let per_fold: Vec<Vec<f64>> = folds
        .par_iter()
        .map(|hold| {
            let train_rows: Vec<usize> = (0..ds.n).filter(|i| hold.binary_search(i).is_err()).collect();
            let train = standardize(
                x_raw.select(Axis(0), &train_rows).view(),
                y_raw.select(Axis(0), &train_rows).view(),
                ds.mode,
            )?;
            let xh = x_raw.select(Axis(0), hold);
            let yh = y_raw.select(Axis(0), hold);
            fold_losses(&train, xh.view(), yh.view(), groups, method, grid, opts)
        })
        .collect::<Result<_>>()?;

    let cv_curve: Vec<(f64, f64)> = grid
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, per_fold.iter().map(|f| f[i]).sum::<f64>() / k as f64))
        .collect();
    let mut best = cv_curve[0];
    for &(l, loss) in &cv_curve[1..] {
        if loss < best.1 || (loss == best.1 && l > best.0) {
            best = (l, loss);
        }
    }
    Ok(TuneResult { lambda: best.0, cv_curve, folds })
}
