//! Inner convex subproblems of the alternating fit: the weighted-L1 least
//! squares update for the within-group coefficients and the non-negative
//! garrote update for the group multipliers.
//!
//! Both are solved by cyclic coordinate descent on the Gram (covariance) form
//! of the least-squares loss,
//!
//! ```text
//! -½‖y - Xb‖² = -½ yᵀy + bᵀ(Xᵀy) - ½ bᵀ(XᵀX)b
//! ```
//!
//! with an active-set inner loop: after a full sweep, only nonzero coordinates
//! are cycled until they settle, then a full sweep re-checks the zero set.
//! Every coordinate update is an exact maximization, so the penalized
//! objective never decreases from the warm start.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{input, Error, Result};
use crate::linalg;

/// `sgn(z) · max(|z| - t, 0)`. Values exactly on the threshold map to zero.
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0, "threshold must be non-negative");
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on both the largest coordinate change of a full sweep and the KKT residual.
    pub tol: f64,
    /// Sweep budget, counting full and active-set sweeps.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 10_000 }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return input(format!("solver tolerance must be positive, got {}", self.tol));
        }
        Ok(())
    }
}

/// Sufficient statistics of a least-squares loss.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub gram: Array2<f64>,
    pub xty: Array1<f64>,
    pub yty: f64,
}

impl Quadratic {
    pub fn from_data(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!("design has {} rows, response {}", x.nrows(), y.len())));
        }
        Ok(Self {
            gram: linalg::gram(x),
            xty: linalg::xt_y(x, y),
            yty: y.dot(&y),
        })
    }

    pub fn dim(&self) -> usize {
        self.xty.len()
    }

    /// `½‖y - Xb‖²`.
    pub fn half_rss(&self, b: ArrayView1<f64>) -> f64 {
        0.5 * self.yty - b.dot(&self.xty) + 0.5 * b.dot(&self.gram.dot(&b))
    }

    /// `Xᵀ(y - Xb)`.
    pub fn correlation(&self, b: ArrayView1<f64>) -> Array1<f64> {
        &self.xty - &self.gram.dot(&b)
    }
}

/// Weighted-L1 least squares: maximize `-½‖y - Xa‖² - Σ penalty_j |a_j|`.
#[derive(Debug, Clone)]
pub struct LassoSubproblem {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub penalty: Array1<f64>,
    pub init: Array1<f64>,
}

impl LassoSubproblem {
    pub fn new(x: Array2<f64>, y: Array1<f64>, penalty: Array1<f64>, init: Option<Array1<f64>>) -> Result<Self> {
        let m = x.ncols();
        if x.nrows() != y.len() || penalty.len() != m {
            return Err(Error::Dimension(format!(
                "lasso subproblem: X is {}x{m}, y has {}, penalty has {}",
                x.nrows(),
                y.len(),
                penalty.len()
            )));
        }
        if penalty.iter().any(|p| !(*p >= 0.0)) {
            return input("lasso penalties must be non-negative");
        }
        let init = init.unwrap_or_else(|| Array1::zeros(m));
        if init.len() != m {
            return Err(Error::Dimension("lasso warm start length".into()));
        }
        Ok(Self { x, y, penalty, init })
    }

    pub fn quadratic(&self) -> Quadratic {
        Quadratic::from_data(self.x.view(), self.y.view()).expect("dimensions checked at construction")
    }

    pub fn objective(&self, a: ArrayView1<f64>) -> f64 {
        lasso_objective(&self.quadratic(), self.penalty.view(), a)
    }
}

/// Non-negative garrote: maximize `-½‖y - X̃d‖² - Σ penalty_k d_k` over `d ≥ 0`.
#[derive(Debug, Clone)]
pub struct GarroteSubproblem {
    pub xtilde: Array2<f64>,
    pub y: Array1<f64>,
    pub penalty: Array1<f64>,
    pub init: Array1<f64>,
}

impl GarroteSubproblem {
    pub fn new(xtilde: Array2<f64>, y: Array1<f64>, penalty: Array1<f64>, init: Option<Array1<f64>>) -> Result<Self> {
        let k = xtilde.ncols();
        if xtilde.nrows() != y.len() || penalty.len() != k {
            return Err(Error::Dimension(format!(
                "garrote subproblem: X̃ is {}x{k}, y has {}, penalty has {}",
                xtilde.nrows(),
                y.len(),
                penalty.len()
            )));
        }
        if penalty.iter().any(|p| !(*p >= 0.0)) {
            return input("garrote penalties must be non-negative");
        }
        let init = init.unwrap_or_else(|| Array1::zeros(k));
        if init.len() != k || init.iter().any(|d| *d < 0.0) {
            return input("garrote warm start must be non-negative with one entry per group");
        }
        Ok(Self { xtilde, y, penalty, init })
    }

    pub fn quadratic(&self) -> Quadratic {
        Quadratic::from_data(self.xtilde.view(), self.y.view()).expect("dimensions checked at construction")
    }

    pub fn objective(&self, d: ArrayView1<f64>) -> f64 {
        garrote_objective(&self.quadratic(), self.penalty.view(), d)
    }
}

pub fn lasso_objective(q: &Quadratic, penalty: ArrayView1<f64>, a: ArrayView1<f64>) -> f64 {
    -q.half_rss(a) - penalty.iter().zip(a.iter()).map(|(p, v)| p * v.abs()).sum::<f64>()
}

pub fn garrote_objective(q: &Quadratic, penalty: ArrayView1<f64>, d: ArrayView1<f64>) -> f64 {
    -q.half_rss(d) - penalty.dot(&d)
}

/// Largest violation of the lasso subgradient conditions.
pub fn lasso_kkt(q: &Quadratic, penalty: ArrayView1<f64>, a: ArrayView1<f64>) -> f64 {
    let g = q.correlation(a);
    let mut worst = 0.0f64;
    for j in 0..a.len() {
        let v = if a[j] == 0.0 {
            (g[j].abs() - penalty[j]).max(0.0)
        } else {
            (g[j] - penalty[j] * a[j].signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Largest violation of the garrote KKT conditions, including negativity.
pub fn garrote_kkt(q: &Quadratic, penalty: ArrayView1<f64>, d: ArrayView1<f64>) -> f64 {
    let g = q.correlation(d);
    let mut worst = 0.0f64;
    for k in 0..d.len() {
        let slack = g[k] - penalty[k];
        let v = if d[k] < 0.0 {
            -d[k]
        } else if d[k] == 0.0 {
            slack.max(0.0)
        } else {
            slack.abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// KKT residual of a candidate solution.
pub trait KktResidual {
    fn kkt_residual(&self, solution: ArrayView1<f64>) -> Result<f64>;
}

impl KktResidual for LassoSubproblem {
    fn kkt_residual(&self, solution: ArrayView1<f64>) -> Result<f64> {
        if solution.len() != self.penalty.len() {
            return Err(Error::Dimension("lasso solution length".into()));
        }
        Ok(lasso_kkt(&self.quadratic(), self.penalty.view(), solution))
    }
}

impl KktResidual for GarroteSubproblem {
    fn kkt_residual(&self, solution: ArrayView1<f64>) -> Result<f64> {
        if solution.len() != self.penalty.len() {
            return Err(Error::Dimension("garrote solution length".into()));
        }
        Ok(garrote_kkt(&self.quadratic(), self.penalty.view(), solution))
    }
}

pub fn kkt_residual<P: KktResidual>(problem: &P, solution: ArrayView1<f64>) -> Result<f64> {
    problem.kkt_residual(solution)
}

pub fn solve_weighted_lasso(p: &LassoSubproblem, opts: SolverOptions) -> Result<Array1<f64>> {
    lasso_cd(&p.quadratic(), p.penalty.view(), p.init.clone(), opts)
}

pub fn solve_nonneg_garrote(p: &GarroteSubproblem, opts: SolverOptions) -> Result<Array1<f64>> {
    garrote_cd(&p.quadratic(), p.penalty.view(), p.init.clone(), opts)
}

#[derive(Clone, Copy)]
enum Kind {
    Lasso,
    Garrote,
}

/// Coordinate descent for the weighted lasso on a Gram form, warm-started at `init`.
pub fn lasso_cd(q: &Quadratic, penalty: ArrayView1<f64>, init: Array1<f64>, opts: SolverOptions) -> Result<Array1<f64>> {
    coordinate_descent(q, penalty, init, opts, Kind::Lasso)
}

/// Coordinate descent for the non-negative garrote on a Gram form.
pub fn garrote_cd(q: &Quadratic, penalty: ArrayView1<f64>, init: Array1<f64>, opts: SolverOptions) -> Result<Array1<f64>> {
    let init = init.mapv(|v| if v > 0.0 { v } else { 0.0 });
    coordinate_descent(q, penalty, init, opts, Kind::Garrote)
}

fn coordinate_descent(
    q: &Quadratic,
    penalty: ArrayView1<f64>,
    mut b: Array1<f64>,
    opts: SolverOptions,
    kind: Kind,
) -> Result<Array1<f64>> {
    opts.validate()?;
    let m = q.dim();
    if penalty.len() != m || b.len() != m || q.gram.dim() != (m, m) {
        return Err(Error::Dimension(format!(
            "coordinate descent: {m} coefficients, {} penalties, warm start {}",
            penalty.len(),
            b.len()
        )));
    }
    if m == 0 {
        return Ok(b);
    }

    // g = Xᵀ(y - Xb), kept current across updates
    let mut g = q.correlation(b.view());
    let all: Vec<usize> = (0..m).collect();
    let mut sweeps = 0usize;

    let kkt = |b: &Array1<f64>| match kind {
        Kind::Lasso => lasso_kkt(q, penalty, b.view()),
        Kind::Garrote => garrote_kkt(q, penalty, b.view()),
    };

    loop {
        let change = sweep(q, penalty, &mut b, &mut g, &all, kind);
        sweeps += 1;
        if change <= opts.tol {
            // refresh the running correlation to shed accumulated rounding
            g = q.correlation(b.view());
            let residual = kkt(&b);
            if residual <= opts.tol {
                return Ok(b);
            }
        }
        if sweeps >= opts.max_iter {
            let residual = kkt(&b);
            return Err(Error::MaxIterations { iterations: sweeps, residual, last_iterate: b.to_vec() });
        }

        let active: Vec<usize> = (0..m).filter(|&j| b[j] != 0.0).collect();
        if active.is_empty() || active.len() == m {
            continue;
        }
        loop {
            let change = sweep(q, penalty, &mut b, &mut g, &active, kind);
            sweeps += 1;
            if change <= opts.tol {
                break;
            }
            if sweeps >= opts.max_iter {
                let residual = kkt(&b);
                return Err(Error::MaxIterations { iterations: sweeps, residual, last_iterate: b.to_vec() });
            }
        }
    }
}

fn sweep(q: &Quadratic, penalty: ArrayView1<f64>, b: &mut Array1<f64>, g: &mut Array1<f64>, coords: &[usize], kind: Kind) -> f64 {
    let mut biggest = 0.0f64;
    for &j in coords {
        let gjj = q.gram[[j, j]];
        let old = b[j];
        let new = if gjj <= 0.0 {
            0.0
        } else {
            let z = g[j] + gjj * old;
            match kind {
                Kind::Lasso => soft_threshold(z, penalty[j]) / gjj,
                Kind::Garrote => {
                    let z = z - penalty[j];
                    if z > 0.0 {
                        z / gjj
                    } else {
                        0.0
                    }
                }
            }
        };
        let delta = new - old;
        if delta != 0.0 {
            b[j] = new;
            g.scaled_add(-delta, &q.gram.column(j));
            biggest = biggest.max(delta.abs());
        }
    }
    biggest
}
