//! Interpretation of SNoRe-based scores.
//!
//! Local: the score of a pair is the dot product of two embedding rows, so
//! the element-wise product of the rows splits it exactly over features.
//!
//! Global: logistic regression over element-wise products for sampled
//! edges (label 1) and non-edges (label 0), with feature importance given
//! by the t-statistic `β_j / SE(β_j)`, where
//! `SE(β_j) = sqrt((XᵀWX)⁻¹_jj)` and `W_ii = σ(x_i·β)(1 − σ(x_i·β))`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::embed::snore::SparseEmbedding;
use crate::error::{Error, Result};
use crate::eval::make_folds;
use crate::graph::SimpleGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contribution {
    pub feature: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalExplanation {
    pub u: u32,
    pub v: u32,
    /// Nonzero products, largest first.
    pub contributions: Vec<Contribution>,
    pub total: f64,
    /// Size of the union of both rows' supports.
    pub support_union: usize,
}

pub fn explain_local(r: &SparseEmbedding, u: u32, v: u32) -> LocalExplanation {
    let (ia, va) = r.row(u);
    let (ib, vb) = r.row(v);
    let (mut i, mut j) = (0, 0);
    let mut contributions = Vec::new();
    let mut union = 0;
    while i < ia.len() || j < ib.len() {
        union += 1;
        if j == ib.len() || (i < ia.len() && ia[i] < ib[j]) {
            i += 1;
        } else if i == ia.len() || ib[j] < ia[i] {
            j += 1;
        } else {
            let value = va[i] * vb[j];
            if value != 0.0 {
                contributions.push(Contribution {
                    feature: ia[i],
                    value,
                });
            }
            i += 1;
            j += 1;
        }
    }
    contributions.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.feature.cmp(&b.feature)));
    LocalExplanation {
        u,
        v,
        contributions,
        total: r.dot(u, v),
        support_union: union,
    }
}

/// Local explanation with each contribution multiplied by the feature's
/// logistic-regression weight. Features absent from the model get weight
/// zero. The contributions no longer sum to the pair's score.
pub fn explain_local_weighted(
    r: &SparseEmbedding,
    u: u32,
    v: u32,
    global: &GlobalExplanation,
) -> LocalExplanation {
    let mut e = explain_local(r, u, v);
    let weight = |f: u32| {
        global
            .features
            .iter()
            .find(|x| x.feature == f)
            .map_or(0.0, |x| x.beta)
    };
    for c in &mut e.contributions {
        c.value *= weight(c.feature);
    }
    e.contributions.retain(|c| c.value != 0.0);
    e.contributions
        .sort_by(|a, b| b.value.total_cmp(&a.value).then(a.feature.cmp(&b.feature)));
    e.total = e.contributions.iter().map(|c| c.value).sum();
    e
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` bin edges spanning [0, max contribution].
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Features in either row's support whose product is zero.
    pub zero_count: usize,
}

pub fn contribution_histogram(e: &LocalExplanation, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidArgument(
            "histogram needs at least one bin".into(),
        ));
    }
    let max = e.contributions.iter().map(|c| c.value).fold(0.0, f64::max);
    let edges = (0..=bins).map(|i| max * i as f64 / bins as f64).collect();
    let mut counts = vec![0; bins];
    for c in &e.contributions {
        let bin = if max > 0.0 {
            ((c.value / max * bins as f64) as usize).min(bins - 1)
        } else {
            0
        };
        counts[bin] += 1;
    }
    Ok(Histogram {
        edges,
        counts,
        zero_count: e.support_union - e.contributions.len(),
    })
}

/// Sparse design matrix: one sorted `(column, value)` list per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub columns: usize,
}

impl Design {
    pub fn from_dense(x: &DMatrix<f64>) -> Self {
        let rows = (0..x.nrows())
            .map(|i| {
                (0..x.ncols())
                    .filter(|&j| x[(i, j)] != 0.0)
                    .map(|j| (j, x[(i, j)]))
                    .collect()
            })
            .collect();
        Design {
            rows,
            columns: x.ncols(),
        }
    }

    fn margin(&self, i: usize, beta: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(j, x)| beta[j] * x).sum()
    }

    /// XᵀWX for per-row weights.
    pub fn weighted_gram(&self, weights: &[f64]) -> DMatrix<f64> {
        let p = self.columns;
        let mut m = DMatrix::zeros(p, p);
        for (row, &w) in self.rows.iter().zip(weights) {
            for &(a, xa) in row {
                for &(b, xb) in row {
                    m[(a, b)] += w * xa * xb;
                }
            }
        }
        m
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `W_ii = e^{x_i·β} / (1 + e^{x_i·β})²` for every training row.
pub fn irls_weights(x: &Design, beta: &[f64]) -> Vec<f64> {
    (0..x.rows.len())
        .map(|i| {
            let p = sigmoid(x.margin(i, beta));
            p * (1.0 - p)
        })
        .collect()
}

/// Penalised negative log-likelihood `−Σ log p(y|x) + ridge/2·‖β‖²`.
pub fn objective(x: &Design, y: &[f64], beta: &[f64], ridge: f64) -> f64 {
    let nll: f64 = (0..x.rows.len())
        .map(|i| {
            let z = x.margin(i, beta);
            // log(1 + e^z) − y z, computed stably
            let softplus = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            softplus - y[i] * z
        })
        .sum();
    nll + 0.5 * ridge * beta.iter().map(|b| b * b).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    /// Diagonal of XᵀWX (without the ridge) at the fitted β.
    pub curvature: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
}

/// Newton/IRLS for ridge-penalised logistic regression.
pub fn fit_logistic(x: &Design, y: &[f64], ridge: f64, max_iter: usize) -> Result<LogisticFit> {
    if y.len() != x.rows.len() {
        return Err(Error::InvalidArgument(
            "label count differs from row count".into(),
        ));
    }
    if ridge < 0.0 {
        return Err(Error::InvalidArgument("ridge must be nonnegative".into()));
    }
    let p = x.columns;
    let mut beta = vec![0.0; p];
    let mut current = objective(x, y, &beta, ridge);
    let mut gradient_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let weights = irls_weights(x, &beta);
        let mut grad = DVector::from_iterator(p, beta.iter().map(|b| ridge * b));
        for (i, row) in x.rows.iter().enumerate() {
            let resid = sigmoid(x.margin(i, &beta)) - y[i];
            for &(j, v) in row {
                grad[j] += resid * v;
            }
        }
        gradient_norm = grad.norm();
        let mut hessian = x.weighted_gram(&weights);
        for j in 0..p {
            hessian[(j, j)] += ridge;
        }
        let chol = hessian.cholesky().ok_or(Error::SingularHessian { ridge })?;
        let step = chol.solve(&grad);
        // damped Newton step; halve until the objective does not grow
        let mut scale = 1.0;
        let mut candidate: Vec<f64>;
        let mut value;
        loop {
            candidate = beta
                .iter()
                .zip(step.iter())
                .map(|(b, s)| b - scale * s)
                .collect();
            value = objective(x, y, &candidate, ridge);
            if value <= current + 1e-12 * current.abs().max(1.0) || scale < 1e-10 {
                break;
            }
            scale *= 0.5;
        }
        let moved = step.iter().map(|s| (scale * s).abs()).fold(0.0, f64::max);
        beta = candidate;
        current = value;
        if moved <= 1e-10 * (1.0 + beta.iter().map(|b| b.abs()).fold(0.0, f64::max)) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::LogisticNonConvergence {
            iterations,
            gradient_norm,
        });
    }
    let weights = irls_weights(x, &beta);
    let gram = x.weighted_gram(&weights);
    let curvature: Vec<f64> = (0..p).map(|j| gram[(j, j)]).collect();
    let mut stabilised = gram;
    for j in 0..p {
        stabilised[(j, j)] += ridge;
    }
    let inverse = stabilised
        .cholesky()
        .ok_or(Error::SingularHessian { ridge })?
        .inverse();
    let se = (0..p).map(|j| inverse[(j, j)].sqrt()).collect();
    Ok(LogisticFit {
        beta,
        se,
        curvature,
        iterations,
        gradient_norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalParams {
    pub max_features: usize,
    pub ridge: f64,
    pub max_iter: usize,
    pub intercept: bool,
}

impl Default for GlobalParams {
    fn default() -> Self {
        GlobalParams {
            max_features: 1000,
            ridge: 1e-6,
            max_iter: 100,
            intercept: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureImportance {
    pub feature: u32,
    pub name: String,
    pub beta: f64,
    pub se: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalExplanation {
    /// Sorted by |t| descending.
    pub features: Vec<FeatureImportance>,
    pub intercept: Option<f64>,
    pub ridge: f64,
    pub training_rows: usize,
    pub iterations: usize,
}

/// Ranks features by |β/SE| and drops nothing; ties go to the lower
/// feature id.
pub fn rank_features(
    fit: &LogisticFit,
    features: &[u32],
    names: &[String],
) -> Vec<FeatureImportance> {
    let mut out: Vec<FeatureImportance> = features
        .iter()
        .enumerate()
        .map(|(j, &f)| FeatureImportance {
            feature: f,
            name: names[f as usize].clone(),
            beta: fit.beta[j],
            se: fit.se[j],
            t: fit.beta[j] / fit.se[j],
        })
        .collect();
    out.sort_by(|a, b| {
        b.t.abs()
            .total_cmp(&a.t.abs())
            .then(a.feature.cmp(&b.feature))
    });
    out
}

/// Training pairs come from the benchmark's fold sampler (fold 0 positives
/// and negatives for `seed`).
pub fn explain_global(
    r: &SparseEmbedding,
    g: &SimpleGraph,
    seed: u64,
    params: &GlobalParams,
) -> Result<GlobalExplanation> {
    if r.node_count() != g.node_count() {
        return Err(Error::InvalidArgument(
            "embedding and graph disagree on node count".into(),
        ));
    }
    let plan = make_folds(g, seed)?;
    let fold = &plan.folds[0];
    let mut products: Vec<Vec<(u32, f64)>> = Vec::new();
    let mut y = Vec::new();
    for (u, v, label) in fold.labeled() {
        let e = explain_local(r, u, v);
        let mut row: Vec<(u32, f64)> = e
            .contributions
            .iter()
            .map(|c| (c.feature, c.value))
            .collect();
        row.sort_by_key(|&(f, _)| f);
        products.push(row);
        y.push(if label { 1.0 } else { 0.0 });
    }

    let mut frequency = vec![0usize; r.feature_count()];
    for row in &products {
        for &(f, _) in row {
            frequency[f as usize] += 1;
        }
    }
    let mut selected: Vec<u32> = (0..r.feature_count() as u32)
        .filter(|&f| frequency[f as usize] > 0)
        .collect();
    selected.sort_by(|&a, &b| {
        frequency[b as usize]
            .cmp(&frequency[a as usize])
            .then(a.cmp(&b))
    });
    selected.truncate(params.max_features);
    let mut column = vec![usize::MAX; r.feature_count()];
    for (j, &f) in selected.iter().enumerate() {
        column[f as usize] = j;
    }
    let p = selected.len() + usize::from(params.intercept);
    let rows = products
        .iter()
        .map(|row| {
            let mut out: Vec<(usize, f64)> = row
                .iter()
                .filter(|&&(f, _)| column[f as usize] != usize::MAX)
                .map(|&(f, v)| (column[f as usize], v))
                .collect();
            out.sort_by_key(|&(j, _)| j);
            if params.intercept {
                out.push((selected.len(), 1.0));
            }
            out
        })
        .collect();
    let design = Design { rows, columns: p };
    let fit = fit_logistic(&design, &y, params.ridge, params.max_iter)?;
    let intercept = params.intercept.then(|| fit.beta[selected.len()]);
    Ok(GlobalExplanation {
        features: rank_features(&fit, &selected, r.feature_names()),
        intercept,
        ridge: params.ridge,
        training_rows: y.len(),
        iterations: fit.iterations,
    })
}
