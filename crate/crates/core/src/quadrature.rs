//! Gauss–Hermite rules for expectations against a standard normal.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// `E{h(Z)} ≈ Σ_l weights[l]·h(nodes[l])` for `Z ~ N(0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GhRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GhRule {
    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    /// One-dimensional expectation of `h`.
    pub fn expect<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * h(*x)).sum()
    }
}

/// Golub–Welsch: the nodes are `√2` times the eigenvalues of the hollow
/// tridiagonal matrix `J(i, i+1) = √(i/2)` and the weights are the squared
/// first components of its normalized eigenvectors.
///
/// ```
/// let rule = relaysim::quadrature::gh_build(2).unwrap();
/// assert!((rule.nodes[0] + 1.0).abs() < 1e-12 && (rule.nodes[1] - 1.0).abs() < 1e-12);
/// assert!((rule.weights[0] - 0.5).abs() < 1e-12);
/// ```
pub fn gh_build(m: usize) -> Result<GhRule> {
    if m == 0 {
        return Err(Error::Usage("quadrature resolution must be at least 1".into()));
    }
    let mut j = DMatrix::zeros(m, m);
    for i in 1..m {
        let v = (i as f64 / 2.0).sqrt();
        j[(i - 1, i)] = v;
        j[(i, i - 1)] = v;
    }
    let eig = SymmetricEigen::try_new(j, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Jacobi matrix eigen-solve did not converge".into()))?;
    let mut pairs: Vec<(f64, f64)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, l)| (std::f64::consts::SQRT_2 * l, eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Impose the exact symmetry of the rule about zero.
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let k = m - 1 - i;
        nodes[i] = 0.5 * (pairs[i].0 - pairs[k].0);
        weights[i] = 0.5 * (pairs[i].1 + pairs[k].1);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(GhRule { nodes, weights })
}
