//! Gauss–Hermite rules for averaging over a standard-normal variable.

use nalgebra::DMatrix;

use crate::error::{input, Result};

/// Nodes and weights of an `n`-point rule.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Physicists' rule for `∫ e^{-x²} g(x) dx`, via Golub–Welsch.
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return input("quadrature order must be positive");
    }
    let jacobi = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // the rule is symmetric; enforce it exactly so odd rules hit 0 and
    // mirrored nodes carry identical weights
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    Ok(QuadratureRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Rule for `E[g(f)]` with `f ~ N(0, 1)`: nodes `√2 x`, weights `w/√π`.
pub fn standard_normal_rule(n: usize) -> Result<QuadratureRule> {
    let rule = gauss_hermite(n)?;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    Ok(QuadratureRule {
        nodes: rule.nodes.iter().map(|x| std::f64::consts::SQRT_2 * x).collect(),
        weights: rule.weights.iter().map(|w| w / sqrt_pi).collect(),
    })
}
