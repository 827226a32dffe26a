//! Grouped-data model shared by every solver: group structures, dataset
//! standardization, penalty specifications and fitted-coefficient bookkeeping.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Mapping from groups to variable indices. Groups may overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStructure {
    groups: Vec<Vec<usize>>,
    labels: Vec<String>,
    n_vars: usize,
    overlapping: bool,
}

impl GroupStructure {
    /// Validates `groups` against `n_vars`; labels default to the group position.
    pub fn new(groups: Vec<Vec<usize>>, n_vars: usize) -> Result<Self> {
        let labels = (0..groups.len()).map(|k| k.to_string()).collect();
        Self::with_labels(groups, labels, n_vars)
    }

    pub fn with_labels(groups: Vec<Vec<usize>>, labels: Vec<String>, n_vars: usize) -> Result<Self> {
        if labels.len() != groups.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} groups",
                labels.len(),
                groups.len()
            )));
        }
        let mut seen = vec![0usize; n_vars];
        for (k, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return input(format!("group '{}' is empty", labels[k]));
            }
            let mut within = BTreeSet::new();
            for &j in group {
                if j >= n_vars {
                    return input(format!(
                        "variable index {j} in group '{}' is out of range for {n_vars} variables",
                        labels[k]
                    ));
                }
                if !within.insert(j) {
                    return input(format!("variable index {j} repeated within group '{}'", labels[k]));
                }
                seen[j] += 1;
            }
        }
        if let Some(j) = seen.iter().position(|&c| c == 0) {
            return Err(Error::UnassignedVariable(j));
        }
        let overlapping = seen.iter().any(|&c| c > 1);
        Ok(Self { groups, labels, n_vars, overlapping })
    }

    /// Contiguous disjoint groups with the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut groups = Vec::with_capacity(sizes.len());
        let mut start = 0;
        for &s in sizes {
            groups.push((start..start + s).collect());
            start += s;
        }
        Self::new(groups, start)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_overlapping(&self) -> bool {
        self.overlapping
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// Group index of every variable; `None` when groups overlap.
    pub fn group_of(&self) -> Option<Vec<usize>> {
        if self.overlapping {
            return None;
        }
        let mut owner = vec![0; self.n_vars];
        for (k, g) in self.groups.iter().enumerate() {
            for &j in g {
                owner[j] = k;
            }
        }
        Some(owner)
    }

    /// Groups containing each variable.
    pub fn memberships(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.n_vars];
        for (k, g) in self.groups.iter().enumerate() {
            for &j in g {
                m[j].push(k);
            }
        }
        m
    }

    /// Restricts the structure to `keep` (sorted variable indices), re-indexing
    /// variables and dropping groups that become empty.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let mut new_index = vec![usize::MAX; self.n_vars];
        for (pos, &j) in keep.iter().enumerate() {
            if j >= self.n_vars {
                return input(format!("variable index {j} out of range"));
            }
            new_index[j] = pos;
        }
        let mut groups = Vec::new();
        let mut labels = Vec::new();
        for (k, g) in self.groups.iter().enumerate() {
            let kept: Vec<usize> = g
                .iter()
                .filter(|&&j| new_index[j] != usize::MAX)
                .map(|&j| new_index[j])
                .collect();
            if !kept.is_empty() {
                groups.push(kept);
                labels.push(self.labels[k].clone());
            }
        }
        Self::with_labels(groups, labels, keep.len())
    }
}

/// Builds a validated group structure from `(group_id, variable indices)` pairs.
pub fn build_group_structure(spec: Vec<(String, Vec<usize>)>, n_vars: usize) -> Result<GroupStructure> {
    let (labels, groups) = spec.into_iter().unzip();
    GroupStructure::with_labels(groups, labels, n_vars)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseMode {
    Gaussian,
    Binary,
}

/// Centered, unit-norm design plus the affine transform back to raw scale.
#[derive(Debug, Clone)]
pub struct StandardizedDataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub column_means: Array1<f64>,
    pub column_norms: Array1<f64>,
    pub y_mean: f64,
    pub n: usize,
    pub mode: ResponseMode,
}

impl StandardizedDataset {
    pub fn n_vars(&self) -> usize {
        self.x.ncols()
    }

    /// Maps raw rows onto the standardized column scale.
    pub fn transform(&self, x_raw: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x_raw.ncols() != self.n_vars() {
            return Err(Error::Dimension(format!(
                "expected {} columns, got {}",
                self.n_vars(),
                x_raw.ncols()
            )));
        }
        let mut out = x_raw.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (mu, s) = (self.column_means[j], self.column_norms[j]);
            col.mapv_inplace(|v| (v - mu) / s);
        }
        Ok(out)
    }

    /// Row subset, re-standardized from the raw values it was built from.
    pub fn subset_rows(&self, rows: &[usize]) -> Result<Self> {
        let (x_raw, y_raw) = self.raw();
        let xs = x_raw.select(ndarray::Axis(0), rows);
        let ys = y_raw.select(ndarray::Axis(0), rows);
        standardize(xs.view(), ys.view(), self.mode)
    }

    /// Reconstructs the raw design and response.
    pub fn raw(&self) -> (Array2<f64>, Array1<f64>) {
        let mut x = self.x.clone();
        for (j, mut col) in x.columns_mut().into_iter().enumerate() {
            let (mu, s) = (self.column_means[j], self.column_norms[j]);
            col.mapv_inplace(|v| v * s + mu);
        }
        let y = match self.mode {
            ResponseMode::Gaussian => self.y.mapv(|v| v + self.y_mean),
            ResponseMode::Binary => self.y.clone(),
        };
        (x, y)
    }
}

/// Centers and scales columns to unit L2 norm; centers `y` in Gaussian mode.
pub fn standardize(x_raw: ArrayView2<f64>, y_raw: ArrayView1<f64>, mode: ResponseMode) -> Result<StandardizedDataset> {
    let (n, p) = x_raw.dim();
    if n < 2 {
        return input(format!("need at least 2 samples, got {n}"));
    }
    if y_raw.len() != n {
        return Err(Error::Dimension(format!("design has {n} rows, response {}", y_raw.len())));
    }
    if let Some(((i, j), _)) = x_raw.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return input(format!("non-finite value in design at row {i}, column {j}"));
    }
    if let Some(i) = y_raw.iter().position(|v| !v.is_finite()) {
        return input(format!("non-finite response at row {i}"));
    }
    if mode == ResponseMode::Binary {
        if let Some(i) = y_raw.iter().position(|&v| v != 0.0 && v != 1.0) {
            return input(format!("binary response must be 0/1, row {i} has {}", y_raw[i]));
        }
    }

    let mut x = x_raw.to_owned();
    let mut means = Array1::zeros(p);
    let mut norms = Array1::zeros(p);
    for (j, mut col) in x.columns_mut().into_iter().enumerate() {
        let mu = col.sum() / n as f64;
        col.mapv_inplace(|v| v - mu);
        let norm = col.dot(&col).sqrt();
        let scale = x_raw.column(j).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm <= 1e-12 * scale.max(1.0) * (n as f64).sqrt() {
            return Err(Error::DegenerateColumn(j));
        }
        col.mapv_inplace(|v| v / norm);
        means[j] = mu;
        norms[j] = norm;
    }

    let (y, y_mean) = match mode {
        ResponseMode::Gaussian => {
            let m = y_raw.sum() / n as f64;
            (y_raw.mapv(|v| v - m), m)
        }
        ResponseMode::Binary => (y_raw.to_owned(), y_raw.sum() / n as f64),
    };

    Ok(StandardizedDataset {
        x,
        y,
        column_means: means,
        column_norms: norms,
        y_mean,
        n,
        mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightRecipe {
    Unit,
    OlsPower { gamma: f64 },
    RidgePower { gamma: f64, ridge_penalty: f64 },
}

impl WeightRecipe {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightRecipe::Unit => Ok(()),
            WeightRecipe::OlsPower { gamma } if gamma > 0.0 && gamma.is_finite() => Ok(()),
            WeightRecipe::RidgePower { gamma, ridge_penalty }
                if gamma > 0.0 && gamma.is_finite() && ridge_penalty >= 0.0 =>
            {
                Ok(())
            }
            _ => input("weight recipe needs gamma > 0 and a non-negative ridge penalty"),
        }
    }
}

/// Penalty level(s) and per-variable weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub lambdas: Vec<f64>,
    pub weights: Array1<f64>,
    pub recipe: WeightRecipe,
}

impl PenaltySpec {
    /// Unit weights, single lambda.
    pub fn plain(lambda: f64, n_vars: usize) -> Result<Self> {
        Self::new(vec![lambda], Array1::ones(n_vars), WeightRecipe::Unit)
    }

    pub fn new(lambdas: Vec<f64>, weights: Array1<f64>, recipe: WeightRecipe) -> Result<Self> {
        if lambdas.is_empty() {
            return input("at least one lambda is required");
        }
        if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return input(format!("lambda must be finite and >= 0, got {l}"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return input(format!("weights must be finite and > 0, got {w}"));
        }
        recipe.validate()?;
        Ok(Self { lambdas, weights, recipe })
    }

    /// The single lambda of a one-point spec.
    pub fn lambda(&self) -> Result<f64> {
        match self.lambdas.as_slice() {
            [l] => Ok(*l),
            _ => input(format!("expected a single lambda, got {}", self.lambdas.len())),
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(vec![lambda], self.weights.clone(), self.recipe)
    }
}

/// Converged (or abandoned) hierarchical lasso fit on the standardized scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HLassoFit {
    pub d: Array1<f64>,
    pub alpha: Array1<f64>,
    pub beta: Array1<f64>,
    /// Intercept on the original data scale.
    pub intercept: f64,
    pub lambda: f64,
    pub weights: Array1<f64>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl HLassoFit {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn active_groups(&self) -> Vec<usize> {
        self.d.iter().enumerate().filter(|(_, &d)| d > 0.0).map(|(k, _)| k).collect()
    }

    pub fn support(&self) -> Vec<usize> {
        self.beta.iter().enumerate().filter(|(_, &b)| b != 0.0).map(|(j, _)| j).collect()
    }
}

/// Coefficients and intercept expressed on the raw data scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginalScale {
    pub beta: Array1<f64>,
    pub intercept: f64,
}

impl OriginalScale {
    pub fn predict(&self, x_raw: ArrayView2<f64>) -> Array1<f64> {
        x_raw.dot(&self.beta) + self.intercept
    }
}

/// Maps standardized coefficients back to the raw scale. `intercept_std` is the
/// intercept on the standardized design: the response mean for Gaussian data,
/// the fitted logistic intercept for binary data.
pub fn destandardize_coefficients(beta: ArrayView1<f64>, intercept_std: f64, ds: &StandardizedDataset) -> Result<OriginalScale> {
    if beta.len() != ds.n_vars() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} columns",
            beta.len(),
            ds.n_vars()
        )));
    }
    let beta_orig = &beta / &ds.column_norms;
    let intercept = intercept_std - beta_orig.dot(&ds.column_means);
    Ok(OriginalScale { beta: beta_orig, intercept })
}

pub fn destandardize(fit: &HLassoFit, ds: &StandardizedDataset) -> Result<OriginalScale> {
    destandardize_coefficients(fit.beta.view(), ds.y_mean, ds)
}
