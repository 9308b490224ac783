//! Coefficient vectors α₁..αₙ and their split into the extremal part α and
//! the remainder weights βᵢ.

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// The weights of the operator Σ αᵢ λᵢ. Stores the split
/// `α = 2·min(α₁, αₙ)`, `β = 1 − α`, and `βᵢ` with
/// `βᵢ = αᵢ/β` for interior indices and `(αᵢ − α/2)/β` at the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaWeights {
    alphas: Vec<f64>,
    alpha: f64,
    beta: f64,
    betas: Vec<f64>,
}

impl AlphaWeights {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        let n = alphas.len();
        if n == 0 {
            return Err(Error::InvalidInput("weights must be nonempty".into()));
        }
        if alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidInput(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = alphas.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidInput(format!(
                "weights must sum to 1 (got {sum})"
            )));
        }
        let end_min = alphas[0].min(alphas[n - 1]);
        if end_min <= 0.0 {
            return Err(Error::InvalidInput(
                "min(alpha_1, alpha_n) must be positive".into(),
            ));
        }

        // The n = 1 operator has a single term; the extremal split is the
        // whole thing and beta vanishes.
        let (alpha, beta) = if n == 1 {
            (1.0, 0.0)
        } else {
            let a = 2.0 * end_min;
            (a, 1.0 - a)
        };
        let betas = if beta > 0.0 {
            (0..n)
                .map(|i| {
                    if i == 0 || i == n - 1 {
                        (alphas[i] - alpha / 2.0) / beta
                    } else {
                        alphas[i] / beta
                    }
                })
                .collect()
        } else {
            vec![0.0; n]
        };

        Ok(AlphaWeights {
            alphas,
            alpha,
            beta,
            betas,
        })
    }

    /// α₁ = αₙ = ½ (all interior weights zero); the §3 special case.
    pub fn extremal(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        if n == 1 {
            return AlphaWeights::new(vec![1.0]);
        }
        let mut a = vec![0.0; n];
        a[0] = 0.5;
        a[n - 1] = 0.5;
        AlphaWeights::new(a)
    }

    /// Weights of the Dominative p-Laplacian λ₁+…+λ_{n−1}+(p−1)λₙ,
    /// normalized: αᵢ = 1/(n+p−2) for i < n and αₙ = (p−1)/(n+p−2).
    pub fn dominative(n: usize, p: f64) -> Result<Self> {
        if n < 1 || !(p >= 2.0) {
            return Err(Error::InvalidInput(
                "dominative weights need n >= 1, p >= 2".into(),
            ));
        }
        let denom = n as f64 + p - 2.0;
        let mut a = vec![1.0 / denom; n];
        a[n - 1] = (p - 1.0) / denom;
        // Compensate rounding so the sum is exactly 1.
        let sum: f64 = a.iter().sum();
        a[n - 1] += 1.0 - sum;
        AlphaWeights::new(a)
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn is_extremal(&self) -> bool {
        self.beta == 0.0
    }
}
