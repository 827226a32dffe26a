//! The hierarchical lasso fit.
//!
//! Coefficients are factored as `β_kj = d_k · α_kj` with `d_k ≥ 0`, and the
//! criterion (maximized)
//!
//! ```text
//! -½‖y - Xβ‖² - c_d Σ_k d_k - Σ_kj λ w_kj |α_kj|
//! ```
//!
//! is ascended by alternating a weighted-lasso update of `α` (with `d` fixed)
//! and a non-negative garrote update of `d` (with `α` fixed). With `c_d = 1`
//! every local maximizer corresponds to a local maximizer of the β-space
//! criterion `-½‖y - Xβ‖² - 2√λ Σ_k √(Σ_j w_kj |β_kj|)`, and at such points
//! `d_k = √(λ Σ_j w_kj |β_kj|)`.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::linalg;
use crate::model::{GroupStructure, HLassoFit, PenaltySpec, StandardizedDataset, WeightRecipe};
use crate::prox::{self, Quadratic, SolverOptions};

/// Default floor applied to pilot estimates before inverting them into weights.
pub const WEIGHT_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Least squares when `n > P`, marginal regressions otherwise.
    Auto,
    Ols,
    Marginal,
    Supplied { d: Vec<f64>, alpha: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Outer stopping rule on `‖β^(m) - β^(m-1)‖∞`.
    pub tol: f64,
    pub max_outer_iter: usize,
    pub init_mode: InitMode,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// After each d-step, reset every group to its optimal scale for the current β.
    #[serde(default = "default_rebalance")]
    pub rebalance: bool,
}

fn default_rebalance() -> bool {
    true
}

impl Default for FitOptions {
    fn default() -> Self {
        let inner = SolverOptions::default();
        Self {
            tol: 1e-7,
            max_outer_iter: 500,
            init_mode: InitMode::Auto,
            inner_tol: inner.tol,
            inner_max_iter: inner.max_iter,
            rebalance: true,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.inner_tol > 0.0) {
            return input("tolerances must be positive");
        }
        if self.max_outer_iter < 1 || self.inner_max_iter < 1 {
            return input("iteration limits must be at least 1");
        }
        Ok(())
    }

    pub fn inner(&self) -> SolverOptions {
        SolverOptions { tol: self.inner_tol, max_iter: self.inner_max_iter }
    }
}

/// One alternating update: `alpha` is the α-step taken at `d_in`, `d` the
/// d-step taken at `alpha`. Recorded before dead groups are cleared and
/// before any rebalancing.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub d_in: Array1<f64>,
    pub alpha: Array1<f64>,
    pub d: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub d: Array1<f64>,
    pub alpha: Array1<f64>,
    pub beta: Array1<f64>,
    /// Criterion value at the initial point and after every outer iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Iterates, recorded only on request.
    pub steps: Vec<Step>,
}

/// A disjoint-group factored least-squares problem on Gram form.
#[derive(Debug, Clone)]
pub struct HLassoProblem<'a> {
    quad: &'a Quadratic,
    group_of: Vec<usize>,
    n_groups: usize,
    alpha_penalty: Array1<f64>,
    d_penalty: f64,
}

impl<'a> HLassoProblem<'a> {
    /// `alpha_penalty` is the per-variable L1 weight (`λ·w`), `d_penalty` the
    /// linear cost per unit of each group multiplier.
    pub fn new(quad: &'a Quadratic, groups: &GroupStructure, alpha_penalty: Array1<f64>, d_penalty: f64) -> Result<Self> {
        let group_of = groups
            .group_of()
            .ok_or_else(|| Error::Input("hierarchical lasso least-squares fit needs disjoint groups".into()))?;
        if groups.n_vars() != quad.dim() || alpha_penalty.len() != quad.dim() {
            return Err(Error::Dimension(format!(
                "{} variables in groups, {} in design, {} penalties",
                groups.n_vars(),
                quad.dim(),
                alpha_penalty.len()
            )));
        }
        if alpha_penalty.iter().any(|p| !(*p >= 0.0)) || !(d_penalty >= 0.0) {
            return input("penalties must be non-negative");
        }
        Ok(Self { quad, group_of, n_groups: groups.n_groups(), alpha_penalty, d_penalty })
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn beta(&self, d: ArrayView1<f64>, alpha: ArrayView1<f64>) -> Array1<f64> {
        Array1::from_shape_fn(alpha.len(), |j| d[self.group_of[j]] * alpha[j])
    }

    pub fn objective(&self, d: ArrayView1<f64>, alpha: ArrayView1<f64>) -> f64 {
        let beta = self.beta(d, alpha);
        -self.quad.half_rss(beta.view())
            - self.d_penalty * d.sum()
            - self.alpha_penalty.iter().zip(alpha.iter()).map(|(p, a)| p * a.abs()).sum::<f64>()
    }

    /// Best `(d, α)` with `β = dα` held fixed: `d_k = √(Σ_j p_j|β_kj| / c)` where
    /// `p` is the α penalty and `c` the d penalty. Never lowers the objective.
    pub fn rebalance(&self, d: &mut Array1<f64>, alpha: &mut Array1<f64>) {
        if !(self.d_penalty > 0.0) {
            return;
        }
        let beta = self.beta(d.view(), alpha.view());
        let mut mass = Array1::<f64>::zeros(self.n_groups);
        for (j, b) in beta.iter().enumerate() {
            mass[self.group_of[j]] += self.alpha_penalty[j] * b.abs();
        }
        for k in 0..self.n_groups {
            if d[k] > 0.0 && mass[k] > 0.0 {
                d[k] = (mass[k] / self.d_penalty).sqrt();
            }
        }
        for (j, a) in alpha.iter_mut().enumerate() {
            let dk = d[self.group_of[j]];
            if dk > 0.0 {
                *a = beta[j] / dk;
            }
        }
    }

    /// Gram form of the α-subproblem at fixed `d` (covariates scaled by their group's `d`).
    pub fn alpha_quadratic(&self, d: ArrayView1<f64>) -> Quadratic {
        let s = Array1::from_shape_fn(self.group_of.len(), |j| d[self.group_of[j]]);
        let mut gram = self.quad.gram.clone();
        for ((i, j), v) in gram.indexed_iter_mut() {
            *v *= s[i] * s[j];
        }
        Quadratic { gram, xty: &self.quad.xty * &s, yty: self.quad.yty }
    }

    /// Gram form of the d-subproblem at fixed `α` (group pseudo-covariates `Σ_j α_kj x_kj`).
    pub fn d_quadratic(&self, alpha: ArrayView1<f64>) -> Quadratic {
        let k = self.n_groups;
        let p = alpha.len();
        let mut gram = ndarray::Array2::<f64>::zeros((k, k));
        let mut xty = Array1::<f64>::zeros(k);
        for i in 0..p {
            if alpha[i] == 0.0 {
                continue;
            }
            let gi = self.group_of[i];
            xty[gi] += alpha[i] * self.quad.xty[i];
            for j in 0..p {
                if alpha[j] != 0.0 {
                    gram[[gi, self.group_of[j]]] += alpha[i] * self.quad.gram[[i, j]] * alpha[j];
                }
            }
        }
        Quadratic { gram, xty, yty: self.quad.yty }
    }

    pub fn alpha_step(&self, d: ArrayView1<f64>, warm: Array1<f64>, inner: SolverOptions) -> Array1<f64> {
        let q = self.alpha_quadratic(d);
        // zero-scaled coordinates have no data term; keep them at zero
        let warm = Array1::from_shape_fn(warm.len(), |j| if d[self.group_of[j]] > 0.0 { warm[j] } else { 0.0 });
        accept_last(prox::lasso_cd(&q, self.alpha_penalty.view(), warm, inner))
    }

    pub fn d_step(&self, alpha: ArrayView1<f64>, warm: Array1<f64>, inner: SolverOptions) -> Array1<f64> {
        let q = self.d_quadratic(alpha);
        let pen = Array1::from_elem(self.n_groups, self.d_penalty);
        accept_last(prox::garrote_cd(&q, pen.view(), warm, inner))
    }

    /// Alternates the two updates from `(d0, α0)` until the β change falls below `opts.tol`.
    pub fn run(&self, d0: Array1<f64>, alpha0: Array1<f64>, opts: &FitOptions, record_steps: bool) -> Result<Trajectory> {
        opts.validate()?;
        if d0.len() != self.n_groups || alpha0.len() != self.group_of.len() {
            return Err(Error::Dimension("initial (d, alpha) has the wrong shape".into()));
        }
        if d0.iter().any(|v| !(*v >= 0.0)) {
            return input("initial d must be non-negative");
        }
        let inner = opts.inner();
        let mut d = d0;
        let mut alpha = alpha0;
        let mut beta = self.beta(d.view(), alpha.view());
        let mut trace = vec![self.objective(d.view(), alpha.view())];
        let mut steps = Vec::new();
        let mut converged = false;
        let mut iterations = 0;

        for _ in 0..opts.max_outer_iter {
            iterations += 1;
            let d_in = if record_steps { d.clone() } else { Array1::zeros(0) };
            alpha = self.alpha_step(d.view(), alpha, inner);
            d = self.d_step(alpha.view(), d, inner);
            if record_steps {
                steps.push(Step { d_in, alpha: alpha.clone(), d: d.clone() });
            }
            // a dead group contributes nothing; drop its α so β = dα stays exact
            for (j, a) in alpha.iter_mut().enumerate() {
                if d[self.group_of[j]] == 0.0 {
                    *a = 0.0;
                }
            }
            if opts.rebalance {
                self.rebalance(&mut d, &mut alpha);
            }
            let next = self.beta(d.view(), alpha.view());
            trace.push(self.objective(d.view(), alpha.view()));
            let change = linalg::max_abs((&next - &beta).view());
            beta = next;
            if change <= opts.tol {
                converged = true;
                break;
            }
        }

        Ok(Trajectory { d, alpha, beta, trace, iterations, converged, steps })
    }
}

fn accept_last(r: Result<Array1<f64>>) -> Array1<f64> {
    match r {
        Ok(v) => v,
        // every sweep is an ascent step, so the last iterate is still usable
        Err(Error::MaxIterations { last_iterate, .. }) => Array1::from(last_iterate),
        Err(e) => panic!("inner solver failed on validated input: {e}"),
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return input(format!("lambda must be finite and >= 0, got {lambda}"));
    }
    Ok(())
}

fn check_dataset(ds: &StandardizedDataset, g: &GroupStructure, pen: &PenaltySpec) -> Result<()> {
    if ds.n_vars() != g.n_vars() || pen.weights.len() != g.n_vars() {
        return Err(Error::Dimension(format!(
            "dataset has {} columns, groups cover {}, weights {}",
            ds.n_vars(),
            g.n_vars(),
            pen.weights.len()
        )));
    }
    if g.is_overlapping() {
        return input("least-squares hierarchical lasso requires disjoint groups");
    }
    Ok(())
}

/// Starting point per the configured init mode.
pub fn initial_point(ds: &StandardizedDataset, g: &GroupStructure, mode: &InitMode) -> Result<(Array1<f64>, Array1<f64>)> {
    let k = g.n_groups();
    let p = ds.n_vars();
    let marginal = || {
        // columns have unit norm, so the simple-regression slope is x_jᵀy
        linalg::xt_y(ds.x.view(), ds.y.view())
    };
    let alpha = match mode {
        InitMode::Ols => linalg::ols(ds.x.view(), ds.y.view())?,
        InitMode::Marginal => marginal(),
        InitMode::Auto if ds.n > p => linalg::ols(ds.x.view(), ds.y.view()).or_else(|_| Ok::<_, Error>(marginal()))?,
        InitMode::Auto => marginal(),
        InitMode::Supplied { d, alpha } => {
            if d.len() != k || alpha.len() != p {
                return Err(Error::Dimension("supplied initial point has the wrong shape".into()));
            }
            if d.iter().any(|v| !(*v >= 0.0)) {
                return input("supplied initial d must be non-negative");
            }
            return Ok((Array1::from(d.clone()), Array1::from(alpha.clone())));
        }
    };
    Ok((Array1::ones(k), alpha))
}

fn finish(traj: Trajectory, ds: &StandardizedDataset, lambda: f64, weights: &Array1<f64>) -> HLassoFit {
    let beta_orig = &traj.beta / &ds.column_norms;
    let intercept = ds.y_mean - beta_orig.dot(&ds.column_means);
    HLassoFit {
        d: traj.d,
        alpha: traj.alpha,
        beta: traj.beta,
        intercept,
        lambda,
        weights: weights.clone(),
        objective_trace: traj.trace,
        iterations: traj.iterations,
        converged: traj.converged,
    }
}

/// Least-squares fit at `λ = 0`, where the group penalty vanishes entirely.
fn fit_unpenalized(ds: &StandardizedDataset, g: &GroupStructure, pen: &PenaltySpec, opts: &FitOptions) -> Result<HLassoFit> {
    let q = Quadratic::from_data(ds.x.view(), ds.y.view())?;
    let beta = match linalg::ols(ds.x.view(), ds.y.view()) {
        Ok(b) => b,
        Err(_) => accept_last(prox::lasso_cd(&q, Array1::zeros(ds.n_vars()).view(), Array1::zeros(ds.n_vars()), opts.inner())),
    };
    let group_of = g.group_of().expect("checked disjoint");
    let mut d = Array1::zeros(g.n_groups());
    for (j, b) in beta.iter().enumerate() {
        if *b != 0.0 {
            d[group_of[j]] = 1.0;
        }
    }
    let objective = -q.half_rss(beta.view());
    let traj = Trajectory {
        d,
        alpha: beta.clone(),
        beta,
        trace: vec![objective],
        iterations: 1,
        converged: true,
        steps: vec![],
    };
    Ok(finish(traj, ds, 0.0, &pen.weights))
}

/// Alternating lasso / garrote fit at a single λ on disjoint groups.
pub fn fit_hlasso(ds: &StandardizedDataset, g: &GroupStructure, pen: &PenaltySpec, opts: &FitOptions) -> Result<HLassoFit> {
    let lambda = pen.lambda()?;
    check_lambda(lambda)?;
    check_dataset(ds, g, pen)?;
    opts.validate()?;
    if lambda == 0.0 {
        return fit_unpenalized(ds, g, pen, opts);
    }
    let q = Quadratic::from_data(ds.x.view(), ds.y.view())?;
    let problem = HLassoProblem::new(&q, g, &pen.weights * lambda, 1.0)?;
    let (d0, a0) = initial_point(ds, g, &opts.init_mode)?;
    let traj = problem.run(d0, a0, opts, false)?;
    Ok(finish(traj, ds, lambda, &pen.weights))
}

/// One closed-form α update on an orthonormal design (per-variable L1 weight `t_j`).
pub fn orthogonal_alpha_update(beta_ols: ArrayView1<f64>, d_prev: f64, thresholds: ArrayView1<f64>) -> Array1<f64> {
    Array1::from_shape_fn(beta_ols.len(), |j| {
        if d_prev > 0.0 {
            let b = beta_ols[j];
            let mag = b.abs() / d_prev - thresholds[j] / (d_prev * d_prev);
            if mag > 0.0 {
                b.signum() * mag
            } else {
                0.0
            }
        } else {
            0.0
        }
    })
}

/// One closed-form d update on an orthonormal design: a shrunken,
/// α²-weighted average of the ratios `β̂_ols / α`.
pub fn orthogonal_d_update(beta_ols: ArrayView1<f64>, alpha: ArrayView1<f64>, d_penalty: f64) -> f64 {
    let ss: f64 = alpha.iter().map(|a| a * a).sum();
    if ss == 0.0 {
        return 0.0;
    }
    let mut avg = 0.0;
    for (b, a) in beta_ols.iter().zip(alpha.iter()) {
        if *a != 0.0 {
            avg += (a * a / ss) * (b / a);
        }
    }
    let v = avg - d_penalty / ss;
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct OrthogonalFit {
    pub fit: HLassoFit,
    pub steps: Vec<Step>,
    pub beta_ols: Array1<f64>,
}

/// Fast path for orthonormal designs using the closed-form updates.
pub fn fit_hlasso_orthogonal(ds: &StandardizedDataset, g: &GroupStructure, pen: &PenaltySpec, opts: &FitOptions) -> Result<HLassoFit> {
    fit_hlasso_orthogonal_traced(ds, g, pen, opts).map(|o| o.fit)
}

pub fn fit_hlasso_orthogonal_traced(ds: &StandardizedDataset, g: &GroupStructure, pen: &PenaltySpec, opts: &FitOptions) -> Result<OrthogonalFit> {
    let lambda = pen.lambda()?;
    check_lambda(lambda)?;
    check_dataset(ds, g, pen)?;
    opts.validate()?;
    let defect = linalg::orthonormality_defect(ds.x.view());
    if defect > 1e-8 {
        return Err(Error::NotOrthonormal { max_deviation: defect });
    }
    let beta_ols = linalg::xt_y(ds.x.view(), ds.y.view());
    if lambda == 0.0 {
        let fit = fit_unpenalized(ds, g, pen, opts)?;
        return Ok(OrthogonalFit { fit, steps: vec![], beta_ols });
    }
    let q = Quadratic::from_data(ds.x.view(), ds.y.view())?;
    let thresholds = &pen.weights * lambda;
    let problem = HLassoProblem::new(&q, g, thresholds.clone(), 1.0)?;
    let (mut d, mut alpha) = initial_point(ds, g, &opts.init_mode)?;
    let mut beta = problem.beta(d.view(), alpha.view());
    let mut trace = vec![problem.objective(d.view(), alpha.view())];
    let mut steps = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_outer_iter {
        iterations += 1;
        let d_in = d.clone();
        for (k, members) in g.groups().iter().enumerate() {
            let b: Array1<f64> = members.iter().map(|&j| beta_ols[j]).collect();
            let t: Array1<f64> = members.iter().map(|&j| thresholds[j]).collect();
            let a = orthogonal_alpha_update(b.view(), d[k], t.view());
            for (pos, &j) in members.iter().enumerate() {
                alpha[j] = a[pos];
            }
        }
        for (k, members) in g.groups().iter().enumerate() {
            let b: Array1<f64> = members.iter().map(|&j| beta_ols[j]).collect();
            let a: Array1<f64> = members.iter().map(|&j| alpha[j]).collect();
            d[k] = orthogonal_d_update(b.view(), a.view(), 1.0);
        }
        steps.push(Step { d_in, alpha: alpha.clone(), d: d.clone() });
        for (k, members) in g.groups().iter().enumerate() {
            if d[k] == 0.0 {
                for &j in members {
                    alpha[j] = 0.0;
                }
            }
        }
        if opts.rebalance {
            problem.rebalance(&mut d, &mut alpha);
        }
        trace.push(problem.objective(d.view(), alpha.view()));
        let next = problem.beta(d.view(), alpha.view());
        let change = linalg::max_abs((&next - &beta).view());
        beta = next;
        if change <= opts.tol {
            converged = true;
            break;
        }
    }

    let traj = Trajectory { d, alpha, beta, trace, iterations, converged, steps: vec![] };
    Ok(OrthogonalFit { fit: finish(traj, ds, lambda, &pen.weights), steps, beta_ols })
}

/// β-space criterion `-½‖y - Xβ‖² - 2√λ Σ_k √(Σ_j w_kj |β_kj|)`.
pub fn objective_beta(beta: ArrayView1<f64>, ds: &StandardizedDataset, g: &GroupStructure, pen: &PenaltySpec) -> Result<f64> {
    let lambda = pen.lambda()?;
    if beta.len() != ds.n_vars() || g.n_vars() != ds.n_vars() || pen.weights.len() != ds.n_vars() {
        return Err(Error::Dimension("objective_beta inputs disagree on the variable count".into()));
    }
    let resid = &ds.y - &ds.x.dot(&beta);
    let penalty: f64 = g
        .groups()
        .iter()
        .map(|members| members.iter().map(|&j| pen.weights[j] * beta[j].abs()).sum::<f64>().sqrt())
        .sum();
    Ok(-0.5 * resid.dot(&resid) - 2.0 * lambda.sqrt() * penalty)
}

/// Optimal factorization of β at `λ`: `d_k = √(λ Σ_j w_kj|β_kj|)`, `α = β/d`.
pub fn recover_d_alpha_weighted(beta: ArrayView1<f64>, g: &GroupStructure, lambda: f64, weights: ArrayView1<f64>) -> Result<(Array1<f64>, Array1<f64>)> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return input(format!("recovery needs lambda > 0, got {lambda}"));
    }
    if beta.len() != g.n_vars() || weights.len() != g.n_vars() {
        return Err(Error::Dimension("beta / weights length differs from group structure".into()));
    }
    let group_of = g.group_of().ok_or_else(|| Error::Input("recovery needs disjoint groups".into()))?;
    let mut d = Array1::zeros(g.n_groups());
    for (k, members) in g.groups().iter().enumerate() {
        let l1: f64 = members.iter().map(|&j| weights[j] * beta[j].abs()).sum();
        d[k] = (lambda * l1).sqrt();
    }
    let alpha = Array1::from_shape_fn(beta.len(), |j| {
        let dk = d[group_of[j]];
        if dk > 0.0 {
            beta[j] / dk
        } else {
            0.0
        }
    });
    Ok((d, alpha))
}

pub fn recover_d_alpha(beta: ArrayView1<f64>, g: &GroupStructure, lambda: f64) -> Result<(Array1<f64>, Array1<f64>)> {
    recover_d_alpha_weighted(beta, g, lambda, Array1::ones(beta.len()).view())
}

/// Largest per-group gap `|d_k - √(λ Σ_j w_kj|β_kj|)|` of a fit.
pub fn fixed_point_gap(fit: &HLassoFit, g: &GroupStructure) -> Result<f64> {
    let (d, _) = recover_d_alpha_weighted(fit.beta.view(), g, fit.lambda, fit.weights.view())?;
    Ok(linalg::max_abs((&d - &fit.d).view()))
}

/// `w_j = 1 / max(|β_pilot_j|, floor)^γ`.
pub fn adaptive_weights(beta_pilot: ArrayView1<f64>, gamma: f64, floor: f64) -> Result<Array1<f64>> {
    if !(gamma > 0.0) || !(floor > 0.0) {
        return input("adaptive weights need gamma > 0 and floor > 0");
    }
    Ok(beta_pilot.mapv(|b| b.abs().max(floor).powf(-gamma)))
}

/// Weight vector for a recipe, with pilots fitted on the standardized data.
pub fn weights_for_recipe(ds: &StandardizedDataset, recipe: WeightRecipe) -> Result<Array1<f64>> {
    recipe.validate()?;
    match recipe {
        WeightRecipe::Unit => Ok(Array1::ones(ds.n_vars())),
        WeightRecipe::OlsPower { gamma } => {
            let pilot = linalg::ols(ds.x.view(), ds.y.view())?;
            adaptive_weights(pilot.view(), gamma, WEIGHT_FLOOR)
        }
        WeightRecipe::RidgePower { gamma, ridge_penalty } => {
            let pilot = linalg::ridge(ds.x.view(), ds.y.view(), ridge_penalty)?;
            adaptive_weights(pilot.view(), gamma, WEIGHT_FLOOR)
        }
    }
}

/// Top of the λ grid: `max_j |x_jᵀy| · max_j(|x_jᵀy| / w_j)`. With unit weights
/// this is `(max_j |x_jᵀy|)²`; any λ at or above it zeroes the first α update
/// from the standard start, after which every group stays dead.
pub fn lambda_max(ds: &StandardizedDataset, weights: ArrayView1<f64>) -> f64 {
    let c = linalg::xt_y(ds.x.view(), ds.y.view());
    let top = linalg::max_abs(c.view());
    let weighted = c.iter().zip(weights.iter()).fold(0.0f64, |m, (v, w)| m.max(v.abs() / w));
    top * weighted
}

/// `count` log-spaced values from `lambda_max` down to `lambda_max · min_ratio`.
pub fn lambda_grid(lambda_max: f64, count: usize, min_ratio: f64) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lambda_max],
        _ => {
            let step = min_ratio.ln() / (count - 1) as f64;
            (0..count).map(|i| lambda_max * (step * i as f64).exp()).collect()
        }
    }
}

pub const DEFAULT_GRID_LEN: usize = 50;
pub const DEFAULT_GRID_RATIO: f64 = 1e-4;

/// Log-spaced grid written `min:max:count`, listed from `max` down to `min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min > 0.0 && max >= min && max.is_finite()) {
            return input(format!("grid needs 0 < min <= max, got {min}:{max}"));
        }
        if count < 1 || (count == 1 && min != max) {
            return input(format!("grid count must be >= 1 (and 1 only when min = max), got {count}"));
        }
        if count > 1 && min == max {
            return input("a grid with repeated values needs count = 1");
        }
        Ok(Self { min, max, count })
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return input(format!("grid spec '{spec}' is not min:max:count"));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Input(format!("grid spec '{spec}': '{s}' is not a number")));
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Input(format!("grid spec '{spec}': '{}' is not a count", parts[2])))?;
        Self::new(num(parts[0])?, num(parts[1])?, count)
    }

    /// Default relative grid: 50 points from 1 down to 1e-4.
    pub fn relative_default() -> Self {
        Self { min: DEFAULT_GRID_RATIO, max: 1.0, count: DEFAULT_GRID_LEN }
    }

    pub fn values(&self) -> Vec<f64> {
        self.scaled(1.0)
    }

    /// Values multiplied by `scale` (for grids given relative to a λ_max).
    pub fn scaled(&self, scale: f64) -> Vec<f64> {
        lambda_grid(self.max * scale, self.count, self.min / self.max)
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.count)
    }
}

/// Fits a strictly descending λ grid, warm-starting each fit from the previous
/// β rescaled to the new λ. Groups killed at a larger λ are re-seeded from the
/// standard starting point.
pub fn fit_path(ds: &StandardizedDataset, g: &GroupStructure, lambda_grid: &[f64], weights: ArrayView1<f64>, opts: &FitOptions) -> Result<Vec<HLassoFit>> {
    if lambda_grid.is_empty() {
        return input("empty lambda grid");
    }
    if lambda_grid.iter().any(|l| !(*l > 0.0)) {
        return input("path lambdas must be positive");
    }
    if lambda_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return input("lambda grid must be strictly descending");
    }
    let (d_seed, a_seed) = initial_point(ds, g, &opts.init_mode)?;
    let group_of = g.group_of().ok_or_else(|| Error::Input("path fitting needs disjoint groups".into()))?;
    let mut fits: Vec<HLassoFit> = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let pen = PenaltySpec::new(vec![lambda], weights.to_owned(), WeightRecipe::Unit)?;
        let mut o = opts.clone();
        if let Some(prev) = fits.last() {
            let (mut d, mut alpha) = recover_d_alpha_weighted(prev.beta.view(), g, lambda, weights)?;
            for k in 0..g.n_groups() {
                if d[k] == 0.0 {
                    d[k] = d_seed[k];
                }
            }
            for j in 0..alpha.len() {
                if prev.d[group_of[j]] == 0.0 {
                    alpha[j] = a_seed[j];
                }
            }
            o.init_mode = InitMode::Supplied { d: d.to_vec(), alpha: alpha.to_vec() };
        }
        fits.push(fit_hlasso(ds, g, &pen, &o)?);
    }
    Ok(fits)
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma1Report {
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta_difference: f64,
    /// Two-parameter criterion at its fitted point.
    pub objective_two_parameter: f64,
    /// Single-parameter criterion at `λ = λ₁λ₂` at its fitted point.
    pub objective_single: f64,
    /// Largest gap between `(λ₁d, α/λ₁)` from the two-parameter iterates and the single-parameter iterates.
    pub iterate_map_difference: f64,
    pub both_converged: bool,
}

/// Runs the alternating algorithm on the two-parameter criterion (group cost
/// λ₁, variable cost λ₂) and on the single-parameter criterion at λ₁λ₂ from
/// the same β start, and compares the two.
pub fn check_lemma1_equivalence(ds: &StandardizedDataset, g: &GroupStructure, lambda1: f64, lambda2: f64, opts: &FitOptions) -> Result<Lemma1Report> {
    if !(lambda1 > 0.0) || !(lambda2 > 0.0) {
        return input("both lambdas must be positive");
    }
    let q = Quadratic::from_data(ds.x.view(), ds.y.view())?;
    let p = ds.n_vars();
    let two = HLassoProblem::new(&q, g, Array1::from_elem(p, lambda2), lambda1)?;
    let one = HLassoProblem::new(&q, g, Array1::from_elem(p, lambda1 * lambda2), 1.0)?;
    let (d0, a0) = initial_point(ds, g, &opts.init_mode)?;
    let t2 = two.run(d0.clone(), a0.clone(), opts, true)?;
    let t1 = one.run(&d0 * lambda1, &a0 / lambda1, opts, true)?;

    let mut map_diff = 0.0f64;
    for (s2, s1) in t2.steps.iter().zip(t1.steps.iter()) {
        map_diff = map_diff.max(linalg::max_abs((&(&s2.d * lambda1) - &s1.d).view()));
        map_diff = map_diff.max(linalg::max_abs((&(&s2.alpha / lambda1) - &s1.alpha).view()));
    }
    if t1.steps.len() != t2.steps.len() {
        map_diff = f64::INFINITY;
    }

    Ok(Lemma1Report {
        lambda1,
        lambda2,
        beta_difference: linalg::max_abs((&t2.beta - &t1.beta).view()),
        objective_two_parameter: *t2.trace.last().expect("trace has the initial value"),
        objective_single: *t1.trace.last().expect("trace has the initial value"),
        iterate_map_difference: map_diff,
        both_converged: t1.converged && t2.converged,
    })
}
