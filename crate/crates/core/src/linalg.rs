//! Small dense routines the solvers need: Gram products, Cholesky solves,
//! least squares and ridge pilots, and Gram-Schmidt orthonormalization.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

pub fn gram(x: ArrayView2<f64>) -> Array2<f64> {
    x.t().dot(&x)
}

pub fn xt_y(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Array1<f64> {
    x.t().dot(&y)
}

/// In-place lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!("cholesky of {}x{}", n, a.ncols())));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(Error::Singular(format!("non-positive pivot at column {j}")));
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

pub fn cholesky_solve(l: &Array2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut z = b.to_owned();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[[i, k]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    z
}

/// Solves `(G + ridge I) b = c`.
pub fn solve_spd(g: &Array2<f64>, c: ArrayView1<f64>, ridge: f64) -> Result<Array1<f64>> {
    let mut a = g.clone();
    if ridge != 0.0 {
        for i in 0..a.nrows() {
            a[[i, i]] += ridge;
        }
    }
    let l = cholesky(&a)?;
    Ok(cholesky_solve(&l, c))
}

/// Least squares without intercept via the normal equations.
pub fn ols(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Array1<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "design has {} rows, response {}",
            x.nrows(),
            y.len()
        )));
    }
    solve_spd(&gram(x), xt_y(x, y).view(), 0.0)
}

pub fn ridge(x: ArrayView2<f64>, y: ArrayView1<f64>, penalty: f64) -> Result<Array1<f64>> {
    if penalty < 0.0 {
        return Err(Error::Input("ridge penalty must be non-negative".into()));
    }
    solve_spd(&gram(x), xt_y(x, y).view(), penalty)
}

/// Modified Gram-Schmidt on the columns of `a` (requires full column rank).
pub fn orthonormalize_columns(a: &Array2<f64>) -> Result<Array2<f64>> {
    let mut q = a.clone();
    let m = q.ncols();
    for j in 0..m {
        for k in 0..j {
            let proj = q.column(k).dot(&q.column(j));
            let qk = q.column(k).to_owned();
            let mut cj = q.column_mut(j);
            cj.scaled_add(-proj, &qk);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if norm < 1e-12 {
            return Err(Error::Singular(format!("column {j} is linearly dependent")));
        }
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    Ok(q)
}

/// Largest absolute entry of `X'X - I`.
pub fn orthonormality_defect(x: ArrayView2<f64>) -> f64 {
    let g = gram(x);
    let mut worst = 0.0f64;
    for ((i, j), v) in g.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((v - target).abs());
    }
    worst
}

pub fn column_means(x: ArrayView2<f64>) -> Array1<f64> {
    x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()))
}

pub fn max_abs(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
