//! Gauss-Hermite rules for expectations over standard normal innovations.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{param, Result};

/// Nodes and weights with `E f(Z) ~ sum_i w_i f(x_i)` for `Z ~ N(0, 1)`; weights sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return param("Gauss-Hermite rule needs at least one node");
        }
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let off = (k as f64).sqrt();
            jacobi[(k - 1, k)] = off;
            jacobi[(k, k - 1)] = off;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Ok(GaussHermite {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Tensor-product rule over `dims` independent standard normals.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TensorRule {
    pub fn new(rule: &GaussHermite, dims: usize) -> Self {
        let mut points = vec![Vec::new()];
        let mut weights = vec![1.0];
        for _ in 0..dims {
            let mut np = Vec::with_capacity(points.len() * rule.len());
            let mut nw = Vec::with_capacity(points.len() * rule.len());
            for (pt, w) in points.iter().zip(&weights) {
                for (x, wx) in rule.nodes.iter().zip(&rule.weights) {
                    let mut q = pt.clone();
                    q.push(*x);
                    np.push(q);
                    nw.push(w * wx);
                }
            }
            points = np;
            weights = nw;
        }
        TensorRule { points, weights }
    }
}
