//! Spectral embedding from the symmetric normalised Laplacian
//! `L = I − D^{-1/2} A D^{-1/2}` (isolated nodes get a zero row, so every
//! connected component contributes one zero eigenvalue).
//!
//! Graphs up to `dense_limit` nodes use a dense symmetric eigensolver;
//! larger ones run subspace iteration on `2I − L` with Rayleigh–Ritz
//! extraction.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SimpleGraph;
use crate::graphcore::{FitContext, Scorer};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub dim: usize,
    pub dense_limit: usize,
    pub max_iter: usize,
    /// Residual bound ‖Lx − λx‖ for the iterative solver.
    pub tol: f64,
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            dim: 128,
            dense_limit: 2500,
            max_iter: 5000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    /// `d` smallest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors matching `eigenvalues`, each of length |N|.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Row-major |N|×d coordinates with L2-normalised rows.
    coordinates: Vec<f64>,
    dim: usize,
}

impl SpectralEmbedding {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coordinates(&self, u: u32) -> &[f64] {
        &self.coordinates[u as usize * self.dim..(u as usize + 1) * self.dim]
    }

    pub fn score(&self, u: u32, v: u32) -> f64 {
        self.coordinates(u)
            .iter()
            .zip(self.coordinates(v))
            .map(|(a, b)| a * b)
            .sum()
    }
}

fn inv_sqrt_degrees(g: &SimpleGraph) -> Vec<f64> {
    (0..g.node_count() as u32)
        .map(|u| match g.degree(u) {
            0 => 0.0,
            d => 1.0 / (d as f64).sqrt(),
        })
        .collect()
}

/// y = L x for the symmetric normalised Laplacian.
pub fn laplacian_apply(g: &SimpleGraph, x: &[f64]) -> Vec<f64> {
    let s = inv_sqrt_degrees(g);
    laplacian_apply_with(g, &s, x)
}

fn laplacian_apply_with(g: &SimpleGraph, s: &[f64], x: &[f64]) -> Vec<f64> {
    (0..g.node_count())
        .map(|i| {
            if s[i] == 0.0 {
                return 0.0;
            }
            let off: f64 = g
                .neighbors(i as u32)
                .iter()
                .map(|&j| s[j as usize] * x[j as usize])
                .sum();
            x[i] - s[i] * off
        })
        .collect()
}

pub fn dense_laplacian(g: &SimpleGraph) -> DMatrix<f64> {
    let n = g.node_count();
    let s = inv_sqrt_degrees(g);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        if s[i] > 0.0 {
            m[(i, i)] = 1.0;
        }
        for &j in g.neighbors(i as u32) {
            m[(i, j as usize)] = -s[i] * s[j as usize];
        }
    }
    m
}

pub fn residual_norm(g: &SimpleGraph, value: f64, vector: &[f64]) -> f64 {
    let lx = laplacian_apply(g, vector);
    lx.iter()
        .zip(vector)
        .map(|(a, b)| (a - value * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn spectral_fit(
    g: &SimpleGraph,
    params: &SpectralParams,
    seed: u64,
) -> Result<SpectralEmbedding> {
    let n = g.node_count();
    let d = params.dim;
    if d == 0 || d >= n {
        return Err(Error::InvalidArgument(format!(
            "spectral dimension {d} must lie in 1..{n}"
        )));
    }
    let (eigenvalues, eigenvectors) = if n <= params.dense_limit {
        dense_pairs(g, d)
    } else {
        subspace_pairs(g, d, params, seed)?
    };
    let mut coordinates = vec![0.0; n * d];
    for (k, vec) in eigenvectors.iter().enumerate() {
        for i in 0..n {
            coordinates[i * d + k] = vec[i];
        }
    }
    for row in coordinates.chunks_mut(d) {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
    Ok(SpectralEmbedding {
        eigenvalues,
        eigenvectors,
        coordinates,
        dim: d,
    })
}

fn dense_pairs(g: &SimpleGraph, d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(dense_laplacian(g));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .into_iter()
        .take(d)
        .map(|k| {
            (
                eig.eigenvalues[k],
                eig.eigenvectors.column(k).iter().copied().collect(),
            )
        })
        .unzip()
}

fn subspace_pairs(
    g: &SimpleGraph,
    d: usize,
    params: &SpectralParams,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = g.node_count();
    let block = (d + d.min(16)).min(n);
    let s = inv_sqrt_degrees(g);
    let mut rng = rng::seeded(seed);
    let mut x = DMatrix::from_fn(n, block, |_, _| rng.gen::<f64>() - 0.5);
    x = x.qr().q();
    // M = 2I − L has the wanted eigenvectors as its dominant ones
    let apply_m = |x: &DMatrix<f64>| -> DMatrix<f64> {
        let mut y = DMatrix::zeros(n, x.ncols());
        for c in 0..x.ncols() {
            let col: Vec<f64> = x.column(c).iter().copied().collect();
            let lx = laplacian_apply_with(g, &s, &col);
            for i in 0..n {
                y[(i, c)] = 2.0 * col[i] - lx[i];
            }
        }
        y
    };
    let mut worst = f64::INFINITY;
    for iter in 1..=params.max_iter {
        x = apply_m(&x).qr().q();
        if iter % 10 != 0 && iter != params.max_iter {
            continue;
        }
        let mx = apply_m(&x);
        let h = x.transpose() * &mx;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let ritz = &x * &eig.eigenvectors;
        let mut values = Vec::with_capacity(d);
        let mut vectors = Vec::with_capacity(d);
        worst = 0.0f64;
        for &k in order.iter().take(d) {
            let lambda = 2.0 - eig.eigenvalues[k];
            let v: Vec<f64> = ritz.column(k).iter().copied().collect();
            worst = worst.max(residual_norm(g, lambda, &v));
            values.push(lambda);
            vectors.push(v);
        }
        if worst <= params.tol {
            return Ok((values, vectors));
        }
        x = ritz;
    }
    Err(Error::EigenNonConvergence {
        iterations: params.max_iter,
        residual: worst,
    })
}

#[derive(Debug, Clone, Default)]
pub struct SpectralScorer {
    pub params: SpectralParams,
    embedding: Option<SpectralEmbedding>,
}

impl SpectralScorer {
    pub fn new(params: SpectralParams) -> Self {
        SpectralScorer {
            params,
            embedding: None,
        }
    }
}

impl Scorer for SpectralScorer {
    fn name(&self) -> &str {
        "spectral"
    }

    fn fit(&mut self, ctx: FitContext<'_>) -> Result<()> {
        let n = ctx.graph.node_count();
        let params = SpectralParams {
            dim: self.params.dim.min(n.saturating_sub(1)),
            ..self.params.clone()
        };
        self.embedding = Some(spectral_fit(ctx.graph, &params, ctx.seed)?);
        Ok(())
    }

    fn score(&self, u: u32, v: u32) -> f64 {
        self.embedding
            .as_ref()
            .expect("SpectralScorer::score before fit")
            .score(u, v)
    }
}
