//! Logistic hierarchical lasso with possibly overlapping groups.
//!
//! Each variable carries one intrinsic effect `α_j`, shared by every group it
//! belongs to, and each group a multiplier `d_k ≥ 0`:
//!
//! ```text
//! η_i = b₀ + Σ_k d_k Σ_{j∈G_k} α_j x_ij = b₀ + Σ_j D_j α_j x_ij,   D_j = Σ_{k∋j} d_k
//! ```
//!
//! The penalized log-likelihood `ℓ(η, y) - Σ_k d_k - λ Σ_j w_j |α_j|` is
//! ascended by alternating half-steps. Each half-step is a proximal Newton
//! (IRLS) loop whose weighted least-squares subproblem goes to the lasso or
//! garrote coordinate-descent solver, followed by a backtracking search along
//! the segment to the proposal so the objective never drops. The intercept is
//! unpenalized and re-estimated in both half-steps.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::engine::{self, FitOptions, InitMode};
use crate::error::{input, Error, Result};
use crate::linalg;
use crate::model::{GroupStructure, PenaltySpec, ResponseMode, StandardizedDataset};
use crate::prox::{self, Quadratic, SolverOptions};

/// Floor on IRLS working weights `p(1 - p)`.
pub const IRLS_WEIGHT_FLOOR: f64 = 1e-6;
/// Convergence tolerance of each IRLS half-step.
pub const IRLS_TOL: f64 = 1e-7;
const IRLS_MAX_ITER: usize = 100;
const SEPARATION_ETA: f64 = 30.0;

/// `log(1 + eᵗ)` without overflow.
#[inline]
pub fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `Σ_i [y_i η_i - log(1 + exp(η_i))]`.
pub fn logistic_loglik(eta: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    eta.iter().zip(y.iter()).map(|(e, yi)| yi * e - log1p_exp(*e)).sum()
}

/// Parameters of the factored logistic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub intercept: f64,
    pub alpha: Array1<f64>,
    pub d: Array1<f64>,
}

/// Gradient of the unpenalized log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticGradient {
    pub intercept: f64,
    pub alpha: Array1<f64>,
    pub d: Array1<f64>,
}

/// Design, labels and group memberships of one logistic problem.
#[derive(Debug, Clone)]
pub struct LogisticModel<'a> {
    x: ArrayView2<'a, f64>,
    y: ArrayView1<'a, f64>,
    groups: &'a GroupStructure,
    memberships: Vec<Vec<usize>>,
}

impl<'a> LogisticModel<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: ArrayView1<'a, f64>, groups: &'a GroupStructure) -> Result<Self> {
        if x.nrows() != y.len() || x.ncols() != groups.n_vars() {
            return Err(Error::Dimension(format!(
                "design {}x{}, response {}, groups over {} variables",
                x.nrows(),
                x.ncols(),
                y.len(),
                groups.n_vars()
            )));
        }
        if y.iter().any(|v| *v != 0.0 && *v != 1.0) {
            return input("logistic response must be 0/1");
        }
        Ok(Self { x, y, groups, memberships: groups.memberships() })
    }

    /// `D_j = Σ_{k∋j} d_k`.
    pub fn group_scale(&self, d: ArrayView1<f64>) -> Array1<f64> {
        self.memberships.iter().map(|ks| ks.iter().map(|&k| d[k]).sum()).collect()
    }

    /// Effective per-variable coefficients `D_j α_j`.
    pub fn effective_beta(&self, p: &LogisticParams) -> Array1<f64> {
        &self.group_scale(p.d.view()) * &p.alpha
    }

    pub fn eta(&self, p: &LogisticParams) -> Array1<f64> {
        self.x.dot(&self.effective_beta(p)) + p.intercept
    }

    pub fn loglik(&self, p: &LogisticParams) -> f64 {
        logistic_loglik(self.eta(p).view(), self.y)
    }

    pub fn penalized(&self, p: &LogisticParams, lambda: f64, weights: ArrayView1<f64>) -> f64 {
        self.loglik(p) - p.d.sum() - lambda * weights.iter().zip(p.alpha.iter()).map(|(w, a)| w * a.abs()).sum::<f64>()
    }

    pub fn gradient(&self, p: &LogisticParams) -> LogisticGradient {
        let eta = self.eta(p);
        let r: Array1<f64> = self.y.iter().zip(eta.iter()).map(|(y, e)| y - sigmoid(*e)).collect();
        let score = self.x.t().dot(&r);
        let scale = self.group_scale(p.d.view());
        let d = self
            .groups
            .groups()
            .iter()
            .map(|members| members.iter().map(|&j| p.alpha[j] * score[j]).sum())
            .collect();
        LogisticGradient { intercept: r.sum(), alpha: &scale * &score, d }
    }

    /// Group pseudo-covariates `z_ik = Σ_{j∈G_k} α_j x_ij`.
    fn group_covariates(&self, alpha: ArrayView1<f64>) -> Array2<f64> {
        let mut z = Array2::zeros((self.x.nrows(), self.groups.n_groups()));
        for (k, members) in self.groups.groups().iter().enumerate() {
            let mut col = z.column_mut(k);
            for &j in members {
                if alpha[j] != 0.0 {
                    col.scaled_add(alpha[j], &self.x.column(j));
                }
            }
        }
        z
    }
}

/// Rescales the group multipliers with every `D_j α_j` held fixed, lowering
/// `Σ_k d_k + Σ_j p_j |β_j| / D_j`. That function is convex in `d`, so exact
/// coordinate minimization never raises it. Dead groups stay dead.
fn rebalance_groups(model: &LogisticModel, params: &mut LogisticParams, alpha_pen: ArrayView1<f64>) {
    let beta = model.effective_beta(params);
    let cost: Array1<f64> = Array1::from_shape_fn(beta.len(), |j| alpha_pen[j] * beta[j].abs());
    let mut scale = model.group_scale(params.d.view());
    for _ in 0..3 {
        for (k, members) in model.groups.groups().iter().enumerate() {
            let dk = params.d[k];
            if dk <= 0.0 {
                continue;
            }
            // f(t) = t + Σ c_j / (t + s_j) with s_j the other groups' share of D_j
            let terms: Vec<(f64, f64)> = members.iter().filter(|&&j| cost[j] > 0.0).map(|&j| (cost[j], (scale[j] - dk).max(0.0))).collect();
            let slope = |t: f64| 1.0 - terms.iter().map(|(c, s)| c / ((t + s) * (t + s))).sum::<f64>();
            let t = if terms.iter().all(|(_, s)| *s > 0.0) && slope(0.0) >= 0.0 {
                0.0
            } else {
                let (mut lo, mut hi) = (0.0, terms.iter().map(|(c, _)| c).sum::<f64>().sqrt());
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if slope(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            };
            for &j in members {
                scale[j] += t - dk;
            }
            params.d[k] = t;
        }
    }
    for j in 0..beta.len() {
        params.alpha[j] = if scale[j] > 0.0 { beta[j] / scale[j] } else { 0.0 };
    }
}

/// Which coefficient block an IRLS loop updates.
#[derive(Clone, Copy)]
enum Block {
    Alpha,
    D,
}

/// Weighted least-squares reduction of the penalized logistic problem in one
/// block, with the intercept profiled out by weighted centering.
fn irls_block(
    design: ArrayView2<f64>,
    y: ArrayView1<f64>,
    mut intercept: f64,
    mut coef: Array1<f64>,
    penalty: ArrayView1<f64>,
    block: Block,
    inner: SolverOptions,
) -> (f64, Array1<f64>) {
    let objective = |b0: f64, c: &Array1<f64>| -> f64 {
        let eta = design.dot(c) + b0;
        let pen: f64 = penalty.iter().zip(c.iter()).map(|(p, v)| p * v.abs()).sum();
        logistic_loglik(eta.view(), y) - pen
    };
    let mut current = objective(intercept, &coef);

    for _ in 0..IRLS_MAX_ITER {
        let eta = design.dot(&coef) + intercept;
        let prob = eta.mapv(sigmoid);
        let w = prob.mapv(|p| (p * (1.0 - p)).max(IRLS_WEIGHT_FLOOR));
        let z: Array1<f64> = (0..y.len()).map(|i| eta[i] + (y[i] - prob[i]) / w[i]).collect();
        let wsum = w.sum();
        let zbar = w.dot(&z) / wsum;
        let xbar = design.t().dot(&w) / wsum;
        let sw = w.mapv(f64::sqrt);
        let mut xc = &design - &xbar.view().insert_axis(Axis(0));
        for (mut row, s) in xc.rows_mut().into_iter().zip(sw.iter()) {
            row.mapv_inplace(|v| v * s);
        }
        let zc = (&z - zbar) * &sw;
        let q = Quadratic::from_data(xc.view(), zc.view()).expect("shapes agree");
        let proposal = match block {
            Block::Alpha => prox::lasso_cd(&q, penalty, coef.clone(), inner),
            Block::D => prox::garrote_cd(&q, penalty, coef.clone(), inner),
        };
        let proposal = match proposal {
            Ok(v) => v,
            Err(Error::MaxIterations { last_iterate, .. }) => Array1::from(last_iterate),
            Err(e) => panic!("inner solver failed on validated input: {e}"),
        };
        let b0_prop = zbar - xbar.dot(&proposal);

        // backtrack along the segment; the feasible set is convex so every point stays valid
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-10 {
            let c = &coef + &((&proposal - &coef) * t);
            let b0 = intercept + t * (b0_prop - intercept);
            let val = objective(b0, &c);
            if val >= current {
                accepted = Some((b0, c, val));
                break;
            }
            t *= 0.5;
        }
        let Some((b0, c, val)) = accepted else { break };
        let change = linalg::max_abs((&c - &coef).view()).max((b0 - intercept).abs());
        intercept = b0;
        coef = match block {
            Block::D => c.mapv(|v| if v > 0.0 { v } else { 0.0 }),
            Block::Alpha => c,
        };
        current = val;
        if change <= IRLS_TOL {
            break;
        }
    }
    (intercept, coef)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticHLassoFit {
    pub d: Array1<f64>,
    pub alpha_intrinsic: Array1<f64>,
    /// Effective coefficients `D_j α_j` on the standardized scale.
    pub beta: Array1<f64>,
    /// Intercept on the standardized design.
    pub intercept: f64,
    pub linear_predictor: Array1<f64>,
    pub lambda: f64,
    pub weights: Array1<f64>,
    pub loglik: f64,
    /// Penalized log-likelihood at the start and after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostic: Option<String>,
}

impl LogisticHLassoFit {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn params(&self) -> LogisticParams {
        LogisticParams { intercept: self.intercept, alpha: self.alpha_intrinsic.clone(), d: self.d.clone() }
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Unpenalized logistic regression by damped Newton. Fails on separation or
/// a singular information matrix.
pub fn logistic_mle(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<(f64, Array1<f64>)> {
    let (n, p) = x.dim();
    let mut design = Array2::ones((n, p + 1));
    design.slice_mut(ndarray::s![.., 1..]).assign(&x);
    let mut theta = Array1::<f64>::zeros(p + 1);
    let ybar = y.mean().unwrap_or(0.5);
    if ybar <= 0.0 || ybar >= 1.0 {
        return Err(Error::NonConvergence("response has a single class".into()));
    }
    theta[0] = logit(ybar);
    let ll = |th: &Array1<f64>| logistic_loglik(design.dot(th).view(), y);
    let mut current = ll(&theta);
    for _ in 0..100 {
        let eta = design.dot(&theta);
        let prob = eta.mapv(sigmoid);
        let w = prob.mapv(|p| p * (1.0 - p));
        let score = design.t().dot(&(&y - &prob));
        let mut info = Array2::<f64>::zeros((p + 1, p + 1));
        for i in 0..n {
            let row = design.row(i);
            for a in 0..=p {
                let ra = row[a] * w[i];
                for b in 0..=p {
                    info[[a, b]] += ra * row[b];
                }
            }
        }
        let step = linalg::solve_spd(&info, score.view(), 0.0)?;
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-10 {
            let cand = &theta + &(&step * t);
            let val = ll(&cand);
            if val >= current {
                let change = linalg::max_abs((&cand - &theta).view());
                theta = cand;
                current = val;
                moved = true;
                if change < 1e-10 {
                    return finish_mle(theta);
                }
                break;
            }
            t *= 0.5;
        }
        if !moved {
            return finish_mle(theta);
        }
        if linalg::max_abs(theta.view()) > 1e6 {
            return Err(Error::NonConvergence("coefficients diverging: separated data".into()));
        }
    }
    Err(Error::NonConvergence("logistic MLE did not converge in 100 Newton steps".into()))
}

fn finish_mle(theta: Array1<f64>) -> Result<(f64, Array1<f64>)> {
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence("non-finite logistic MLE".into()));
    }
    Ok((theta[0], theta.slice(ndarray::s![1..]).to_owned()))
}

fn initial_params(model: &LogisticModel, ds_y: ArrayView1<f64>, mode: &InitMode) -> Result<LogisticParams> {
    let k = model.groups.n_groups();
    let j = model.groups.n_vars();
    let d = Array1::<f64>::ones(k);
    let ybar = ds_y.mean().unwrap_or(0.5);
    let marginal = || -> (f64, Array1<f64>) {
        // one Newton step from the null model, per variable
        let v = ybar * (1.0 - ybar);
        let score = model.x.t().dot(&ds_y.mapv(|y| y - ybar));
        let ss: Array1<f64> = model.x.columns().into_iter().map(|c| c.dot(&c)).collect();
        (logit(ybar), &score / &(ss * v))
    };
    let (intercept, beta) = match mode {
        InitMode::Supplied { d, alpha } => {
            if d.len() != k || alpha.len() != j {
                return Err(Error::Dimension("supplied initial point has the wrong shape".into()));
            }
            let d = Array1::from(d.clone());
            let p = LogisticParams { intercept: logit(ybar), alpha: Array1::from(alpha.clone()), d };
            return Ok(p);
        }
        InitMode::Marginal => marginal(),
        InitMode::Ols => logistic_mle(model.x, ds_y)?,
        InitMode::Auto if model.x.nrows() > j + 1 => logistic_mle(model.x, ds_y).unwrap_or_else(|_| marginal()),
        InitMode::Auto => marginal(),
    };
    let scale = model.group_scale(d.view());
    Ok(LogisticParams { intercept, alpha: &beta / &scale, d })
}

/// Alternating fit of the logistic hierarchical lasso on a binary-mode dataset.
pub fn fit_logistic_hlasso(ds: &StandardizedDataset, g: &GroupStructure, pen: &PenaltySpec, opts: &FitOptions) -> Result<LogisticHLassoFit> {
    if ds.mode != ResponseMode::Binary {
        return input("logistic fit needs a binary-mode dataset");
    }
    let lambda = pen.lambda()?;
    fit_logistic_xy(ds.x.view(), ds.y.view(), g, lambda, pen.weights.view(), opts)
}

/// Same as [`fit_logistic_hlasso`] on an arbitrary design.
pub fn fit_logistic_xy(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    g: &GroupStructure,
    lambda: f64,
    weights: ArrayView1<f64>,
    opts: &FitOptions,
) -> Result<LogisticHLassoFit> {
    opts.validate()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return input(format!("lambda must be finite and >= 0, got {lambda}"));
    }
    if weights.len() != g.n_vars() || weights.iter().any(|w| !(*w > 0.0)) {
        return input("weights must be positive, one per variable");
    }
    let model = LogisticModel::new(x, y, g)?;
    let mut unpenalized_failure = None;
    if lambda == 0.0 {
        // the group penalty vanishes; the supremum is the MLE, approached as d → 0
        match logistic_mle(x, y) {
            Ok((b0, beta)) => {
                let d = Array1::<f64>::ones(g.n_groups());
                let scale = model.group_scale(d.view());
                let params = LogisticParams { intercept: b0, alpha: &beta / &scale, d };
                let eta = model.eta(&params);
                let loglik = logistic_loglik(eta.view(), y);
                return Ok(LogisticHLassoFit {
                    d: params.d,
                    alpha_intrinsic: params.alpha,
                    beta,
                    intercept: b0,
                    linear_predictor: eta,
                    lambda,
                    weights: weights.to_owned(),
                    loglik,
                    objective_trace: vec![loglik],
                    iterations: 1,
                    converged: true,
                    diagnostic: None,
                });
            }
            Err(e) => unpenalized_failure = Some(e.to_string()),
        }
    }
    let mut params = initial_params(&model, y, &opts.init_mode)?;
    let inner = opts.inner();
    let alpha_pen = &weights.to_owned() * lambda;
    let d_pen = Array1::<f64>::ones(g.n_groups());

    let mut beta = model.effective_beta(&params);
    let mut trace = vec![model.penalized(&params, lambda, weights)];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_outer_iter {
        iterations += 1;

        let scale = model.group_scale(params.d.view());
        let mut xt = x.to_owned();
        for (mut col, s) in xt.columns_mut().into_iter().zip(scale.iter()) {
            col.mapv_inplace(|v| v * s);
        }
        let warm = Array1::from_shape_fn(params.alpha.len(), |j| if scale[j] > 0.0 { params.alpha[j] } else { 0.0 });
        let (b0, alpha) = irls_block(xt.view(), y, params.intercept, warm, alpha_pen.view(), Block::Alpha, inner);
        params.intercept = b0;
        params.alpha = alpha;

        let z = model.group_covariates(params.alpha.view());
        let (b0, d) = irls_block(z.view(), y, params.intercept, params.d.clone(), d_pen.view(), Block::D, inner);
        params.intercept = b0;
        params.d = d;
        let scale = model.group_scale(params.d.view());
        for (a, s) in params.alpha.iter_mut().zip(scale.iter()) {
            if *s == 0.0 {
                *a = 0.0;
            }
        }
        if opts.rebalance && lambda > 0.0 {
            rebalance_groups(&model, &mut params, alpha_pen.view());
        }

        trace.push(model.penalized(&params, lambda, weights));
        let next = model.effective_beta(&params);
        let change = linalg::max_abs((&next - &beta).view());
        beta = next;
        if change <= opts.tol {
            converged = true;
            break;
        }
    }

    let eta = model.eta(&params);
    let loglik = logistic_loglik(eta.view(), y);
    let mut diagnostic = None;
    let max_eta = linalg::max_abs(eta.view());
    if let Some(e) = unpenalized_failure {
        converged = false;
        diagnostic = Some(format!("unpenalized fit failed ({e}); max |eta| = {max_eta:.1}"));
    } else if max_eta > SEPARATION_ETA && loglik > -1e-3 {
        converged = false;
        diagnostic = Some(format!("possible separation: max |eta| = {max_eta:.1}, loglik = {loglik:.2e}"));
    } else if !converged {
        diagnostic = Some(format!("no convergence in {} outer iterations", opts.max_outer_iter));
    }

    Ok(LogisticHLassoFit {
        d: params.d,
        alpha_intrinsic: params.alpha,
        beta,
        intercept: params.intercept,
        linear_predictor: eta,
        lambda,
        weights: weights.to_owned(),
        loglik,
        objective_trace: trace,
        iterations,
        converged,
        diagnostic,
    })
}

/// Probabilities for rows already on the standardized scale.
pub fn predict_proba(fit: &LogisticHLassoFit, x_std: ArrayView2<f64>) -> Result<Array1<f64>> {
    if x_std.ncols() != fit.beta.len() {
        return Err(Error::Dimension(format!("expected {} columns, got {}", fit.beta.len(), x_std.ncols())));
    }
    Ok((x_std.dot(&fit.beta) + fit.intercept).mapv(sigmoid))
}

#[derive(Debug, Clone, Serialize)]
pub struct Misclassification {
    pub rate: f64,
    pub rows: Vec<ClassifiedRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifiedRow {
    pub row: usize,
    pub y: f64,
    pub probability: f64,
    pub predicted: f64,
}

/// Per-row predictions at threshold ½ and the overall error rate.
pub fn misclassification(fit: &LogisticHLassoFit, x_std: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Misclassification> {
    let prob = predict_proba(fit, x_std)?;
    if prob.len() != y.len() {
        return Err(Error::Dimension("labels and rows differ in count".into()));
    }
    let rows: Vec<ClassifiedRow> = prob
        .iter()
        .zip(y.iter())
        .enumerate()
        .map(|(row, (&probability, &y))| ClassifiedRow {
            row,
            y,
            probability,
            predicted: if probability > 0.5 { 1.0 } else { 0.0 },
        })
        .collect();
    let wrong = rows.iter().filter(|r| r.predicted != r.y).count();
    Ok(Misclassification { rate: wrong as f64 / rows.len().max(1) as f64, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Binomial,
}

#[derive(Debug, Clone, Serialize)]
pub struct LrtReport {
    /// Clipped at zero.
    pub statistic: f64,
    pub raw_statistic: f64,
    pub q: usize,
    pub p_value: f64,
    pub sup_full: f64,
    pub sup_null: f64,
    /// Residual variance used to put the Gaussian criterion on log-likelihood scale.
    pub sigma2: Option<f64>,
}

/// Likelihood-ratio statistic for `H₀: β_j = 0` for every `j` in `null_zero_set`.
///
/// Both suprema are taken by the penalized fitter at the same `λ` and
/// weights, over `full_support` and over `full_support \ null_zero_set`. The
/// restricted fit starts from the unrestricted one.
pub fn lrt_statistic(
    ds: &StandardizedDataset,
    g: &GroupStructure,
    full_support: &[usize],
    null_zero_set: &[usize],
    pen: &PenaltySpec,
    opts: &FitOptions,
) -> Result<LrtReport> {
    let lambda = pen.lambda()?;
    if null_zero_set.is_empty() {
        return input("null set must contain at least one variable");
    }
    let mut full: Vec<usize> = full_support.to_vec();
    full.sort_unstable();
    full.dedup();
    if let Some(j) = null_zero_set.iter().find(|j| !full.contains(j)) {
        return input(format!("null variable {j} is outside the full support"));
    }
    let restricted: Vec<usize> = full.iter().copied().filter(|j| !null_zero_set.contains(j)).collect();
    let q = full.len() - restricted.len();
    let family = match ds.mode {
        ResponseMode::Gaussian => Family::Gaussian,
        ResponseMode::Binary => Family::Binomial,
    };

    struct Sub {
        sup: f64,
        d: Array1<f64>,
        alpha: Array1<f64>,
        rss: f64,
        converged: bool,
        diag: String,
    }
    let fit_on = |cols: &[usize], init: InitMode| -> Result<Sub> {
        let x = ds.x.select(Axis(1), cols);
        let gs = g.restrict(cols)?;
        let w = pen.weights.select(Axis(0), cols);
        let mut o = opts.clone();
        o.init_mode = init;
        match family {
            Family::Gaussian => {
                let sub = StandardizedDataset {
                    x,
                    y: ds.y.clone(),
                    column_means: ds.column_means.select(Axis(0), cols),
                    column_norms: ds.column_norms.select(Axis(0), cols),
                    y_mean: ds.y_mean,
                    n: ds.n,
                    mode: ds.mode,
                };
                let p = PenaltySpec::new(vec![lambda], w, pen.recipe)?;
                let f = engine::fit_hlasso(&sub, &gs, &p, &o)?;
                let r = &sub.y - &sub.x.dot(&f.beta);
                let diag = format!("{} iterations, objective {:.6e}", f.iterations, f.objective());
                Ok(Sub { sup: f.objective(), d: f.d, alpha: f.alpha, rss: r.dot(&r), converged: f.converged, diag })
            }
            Family::Binomial => {
                let f = fit_logistic_xy(x.view(), ds.y.view(), &gs, lambda, w.view(), &o)?;
                let diag = f.diagnostic.clone().unwrap_or_else(|| format!("{} iterations", f.iterations));
                Ok(Sub { sup: f.objective(), d: f.d, alpha: f.alpha_intrinsic, rss: 0.0, converged: f.converged, diag })
            }
        }
    };

    let full_fit = fit_on(&full, opts.init_mode.clone())?;
    if !full_fit.converged {
        return Err(Error::NonConvergence(format!("unrestricted fit: {}", full_fit.diag)));
    }

    // warm start: drop the null coordinates and any group left empty
    let gs_full = g.restrict(&full)?;
    let keep_pos: Vec<usize> = restricted.iter().map(|j| full.iter().position(|f| f == j).expect("subset")).collect();
    let alpha0: Vec<f64> = keep_pos.iter().map(|&p| full_fit.alpha[p]).collect();
    let d0: Vec<f64> = gs_full
        .groups()
        .iter()
        .enumerate()
        .filter(|(_, members)| members.iter().any(|m| keep_pos.contains(m)))
        .map(|(k, _)| full_fit.d[k])
        .collect();
    let init = if restricted.is_empty() {
        opts.init_mode.clone()
    } else {
        InitMode::Supplied { d: d0, alpha: alpha0 }
    };

    let sup_null = if restricted.is_empty() {
        match family {
            Family::Gaussian => -0.5 * ds.y.dot(&ds.y),
            Family::Binomial => {
                let ybar = ds.y.mean().unwrap_or(0.5);
                let eta = Array1::from_elem(ds.n, logit(ybar));
                logistic_loglik(eta.view(), ds.y.view())
            }
        }
    } else {
        let f = fit_on(&restricted, init)?;
        if !f.converged {
            return Err(Error::NonConvergence(format!("restricted fit: {}", f.diag)));
        }
        f.sup
    };

    let (raw, sigma2) = match family {
        Family::Gaussian => {
            let dof = ds.n as f64 - full.len() as f64 - 1.0;
            if dof <= 0.0 {
                return input("not enough samples to estimate the residual variance");
            }
            let s2 = full_fit.rss / dof;
            (2.0 * (full_fit.sup - sup_null) / s2, Some(s2))
        }
        Family::Binomial => (2.0 * (full_fit.sup - sup_null), None),
    };
    let statistic = raw.max(0.0);
    let chi = ChiSquared::new(q as f64).map_err(|e| Error::Input(e.to_string()))?;
    Ok(LrtReport { statistic, raw_statistic: raw, q, p_value: chi.sf(statistic), sup_full: full_fit.sup, sup_null, sigma2 })
}
