//! Reference implementations used as oracles. Deliberately naive and
//! independent of the library's solvers.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
}

pub fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.sample(StandardNormal))
}

pub fn half_rss(x: ArrayView2<f64>, y: ArrayView1<f64>, b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.nrows() {
        let mut fit = 0.0;
        for j in 0..b.len() {
            fit += x[[i, j]] * b[j];
        }
        s += (y[i] - fit).powi(2);
    }
    0.5 * s
}

/// Minimizes `f` over the box by exhaustive lattice search, refined from step
/// 0.1 down to 1e-4 around the incumbent. Only sensible for convex `f` and
/// `dim <= 3`.
pub fn lattice_minimize(f: impl Fn(&[f64]) -> f64, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let dim = lower.len();
    assert!((1..=3).contains(&dim));
    let mut best: Vec<f64> = lower.to_vec();
    let mut best_val = f64::INFINITY;

    let visit = |centre: &[f64], step: f64, radius: i64, best: &mut Vec<f64>, best_val: &mut f64| {
        let mut idx = vec![-radius; dim];
        let mut pt = vec![0.0; dim];
        loop {
            let mut inside = true;
            for c in 0..dim {
                pt[c] = centre[c] + idx[c] as f64 * step;
                if pt[c] < lower[c] - 1e-12 || pt[c] > upper[c] + 1e-12 {
                    inside = false;
                }
            }
            if inside {
                let v = f(&pt);
                if v < *best_val {
                    *best_val = v;
                    best.copy_from_slice(&pt);
                }
            }
            let mut c = 0;
            loop {
                if c == dim {
                    return;
                }
                idx[c] += 1;
                if idx[c] <= radius {
                    break;
                }
                idx[c] = -radius;
                c += 1;
            }
        }
    };

    let centre: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
    let half_width = lower.iter().zip(upper).map(|(l, u)| 0.5 * (u - l)).fold(0.0, f64::max);
    visit(&centre, 0.1, (half_width / 0.1).round() as i64, &mut best, &mut best_val);
    for step in [0.01, 0.001, 1e-4] {
        loop {
            let before = best.clone();
            let c = best.clone();
            visit(&c, step, 12, &mut best, &mut best_val);
            if best == before {
                break;
            }
        }
    }
    best
}

pub fn near_boundary(v: &[f64], lower: &[f64], upper: &[f64], margin: f64) -> bool {
    v.iter().zip(lower).zip(upper).any(|((x, l), u)| (*l != 0.0 && x - l < margin) || u - x < margin)
}

/// OLS via the normal equations, Gaussian elimination with partial pivoting.
pub fn normal_equations_ols(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Array1<f64> {
    let p = x.ncols();
    let mut a = x.t().dot(&x);
    let mut b = x.t().dot(&y);
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs())).unwrap();
        if piv != col {
            for k in 0..p {
                a.swap([col, k], [piv, k]);
            }
            b.swap(col, piv);
        }
        for r in (col + 1)..p {
            let m = a[[r, col]] / a[[col, col]];
            for k in col..p {
                a[[r, k]] -= m * a[[col, k]];
            }
            b[r] -= m * b[col];
        }
    }
    let mut sol = Array1::zeros(p);
    for r in (0..p).rev() {
        let mut s = b[r];
        for k in (r + 1)..p {
            s -= a[[r, k]] * sol[k];
        }
        sol[r] = s / a[[r, r]];
    }
    sol
}

/// Centred, orthonormal columns spanning the centred columns of `a`
/// (classical Gram-Schmidt, applied twice).
pub fn centred_orthonormal(a: &Array2<f64>) -> Array2<f64> {
    let mut q = a.clone();
    let means = a.mean_axis(Axis(0)).unwrap();
    for (mut c, m) in q.columns_mut().into_iter().zip(means.iter()) {
        c -= *m;
    }
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                let qk = q.column(k).to_owned();
                q.column_mut(j).scaled_add(-proj, &qk);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    q
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli log-likelihood summed over rows.
pub fn bernoulli_loglik(eta: &Array1<f64>, y: ArrayView1<f64>) -> f64 {
    eta.iter()
        .zip(y.iter())
        .map(|(e, yi)| yi * e - if *e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() })
        .sum()
}

/// L1-penalized logistic regression with free intercept by proximal gradient
/// with backtracking: minimizes `-loglik + Σ pen_j |b_j|`.
pub fn l1_logistic_ista(x: ArrayView2<f64>, y: ArrayView1<f64>, pen: &[f64], iters: usize) -> (f64, Array1<f64>) {
    let p = x.ncols();
    let mut b0 = 0.0;
    let mut b = Array1::<f64>::zeros(p);
    let loss = |b0: f64, b: &Array1<f64>| -bernoulli_loglik(&(x.dot(b) + b0), y);
    let mut step = 1.0;
    for _ in 0..iters {
        let eta = x.dot(&b) + b0;
        let resid: Array1<f64> = eta.iter().zip(y.iter()).map(|(e, yi)| sigmoid(*e) - yi).collect();
        let g0 = resid.sum();
        let g = x.t().dot(&resid);
        let f0 = loss(b0, &b);
        loop {
            let nb0 = b0 - step * g0;
            let nb: Array1<f64> = (0..p)
                .map(|j| {
                    let z = b[j] - step * g[j];
                    z.signum() * (z.abs() - step * pen[j]).max(0.0)
                })
                .collect();
            let db0 = nb0 - b0;
            let db = &nb - &b;
            let quad = f0 + g0 * db0 + g.dot(&db) + (db0 * db0 + db.dot(&db)) / (2.0 * step);
            if loss(nb0, &nb) <= quad + 1e-15 {
                b0 = nb0;
                b = nb;
                step *= 1.2;
                break;
            }
            step *= 0.5;
        }
    }
    (b0, b)
}

/// `½‖y - Xb‖²` expanded once so lattice searches stay cheap.
pub struct Expanded {
    pub gram: Array2<f64>,
    pub xty: Array1<f64>,
    pub yty: f64,
}

impl Expanded {
    pub fn new(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Self {
        Self { gram: x.t().dot(&x), xty: x.t().dot(&y), yty: y.dot(&y) }
    }

    pub fn half_rss(&self, b: &[f64]) -> f64 {
        let mut q = self.yty;
        for i in 0..b.len() {
            q -= 2.0 * b[i] * self.xty[i];
            for j in 0..b.len() {
                q += b[i] * self.gram[[i, j]] * b[j];
            }
        }
        0.5 * q
    }
}

/// Random tiny least-squares instance: `n` in 5..=10, `p` in 1..=3.
pub fn tiny_instance(rng: &mut ChaCha8Rng) -> (Array2<f64>, Array1<f64>, Vec<f64>) {
    let n = rng.random_range(5..=10);
    let p = rng.random_range(1..=3);
    let x = normal_matrix(rng, n, p);
    let b: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
    let noise = normal_vector(rng, n);
    let y = x.dot(&Array1::from(b)) + noise * 0.5;
    let pen: Vec<f64> = (0..p).map(|_| rng.random_range(0.05..3.0)).collect();
    (x, y, pen)
}
