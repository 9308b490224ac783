//! Boundary payoff functions G, evaluated on the collar (and anywhere else a
//! comparison needs them).

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::linalg::SymMatrix;
use serde::{Deserialize, Serialize};

/// A closed-form or tabulated final payoff.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryPayoff {
    Constant {
        value: f64,
    },
    /// a·x + b
    Linear {
        coeffs: Vec<f64>,
        offset: f64,
    },
    /// ⟨Ax, x⟩ + b·x + c
    Quadratic {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        linear: Option<Vec<f64>>,
        #[serde(default)]
        offset: f64,
    },
    /// x₁³ − 3x₁x₂² = Re((x₁+ix₂)³); harmonic in the first two coordinates.
    HarmonicCubic,
    /// `below` where x_axis < threshold, `at_or_above` otherwise.
    Step {
        axis: usize,
        threshold: f64,
        below: f64,
        at_or_above: f64,
    },
    /// Values interpolated from a stored grid.
    #[serde(skip)]
    Tabulated(GridFunction),
}

impl BoundaryPayoff {
    pub fn quadratic_form(matrix: &SymMatrix) -> Self {
        let n = matrix.dim();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| matrix.entry(i, j)).collect())
            .collect();
        BoundaryPayoff::Quadratic {
            matrix: rows,
            linear: None,
            offset: 0.0,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            BoundaryPayoff::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidInput("payoff constant must be finite".into()));
                }
            }
            BoundaryPayoff::Linear { coeffs, offset } => {
                if coeffs.len() != n {
                    return Err(Error::InvalidInput(format!(
                        "linear payoff has {} coefficients, expected {n}",
                        coeffs.len()
                    )));
                }
                if !crate::geom::all_finite(coeffs) || !offset.is_finite() {
                    return Err(Error::InvalidInput("linear payoff must be finite".into()));
                }
            }
            BoundaryPayoff::Quadratic {
                matrix,
                linear,
                offset,
            } => {
                SymMatrix::from_rows(matrix).and_then(|m| {
                    if m.dim() != n {
                        Err(Error::InvalidInput(format!(
                            "quadratic payoff is {}x{}, expected {n}x{n}",
                            m.dim(),
                            m.dim()
                        )))
                    } else {
                        Ok(())
                    }
                })?;
                if let Some(l) = linear {
                    if l.len() != n || !crate::geom::all_finite(l) {
                        return Err(Error::InvalidInput(
                            "quadratic payoff linear part malformed".into(),
                        ));
                    }
                }
                if !offset.is_finite() {
                    return Err(Error::InvalidInput(
                        "quadratic payoff offset must be finite".into(),
                    ));
                }
            }
            BoundaryPayoff::HarmonicCubic => {
                if n < 2 {
                    return Err(Error::InvalidInput(
                        "harmonic cubic payoff needs dimension >= 2".into(),
                    ));
                }
            }
            BoundaryPayoff::Step {
                axis,
                threshold,
                below,
                at_or_above,
            } => {
                if *axis >= n {
                    return Err(Error::InvalidInput(format!(
                        "step payoff axis {axis} out of range for dimension {n}"
                    )));
                }
                if !threshold.is_finite() || !below.is_finite() || !at_or_above.is_finite() {
                    return Err(Error::InvalidInput("step payoff must be finite".into()));
                }
            }
            BoundaryPayoff::Tabulated(g) => {
                if g.dim() != n {
                    return Err(Error::InvalidInput(format!(
                        "tabulated payoff dimension {} does not match {n}",
                        g.dim()
                    )));
                }
                if !crate::geom::all_finite(g.values()) {
                    return Err(Error::InvalidInput(
                        "tabulated payoff must be finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            BoundaryPayoff::Constant { value } => *value,
            BoundaryPayoff::Linear { coeffs, offset } => crate::geom::dot(coeffs, x) + offset,
            BoundaryPayoff::Quadratic {
                matrix,
                linear,
                offset,
            } => {
                let n = x.len();
                let mut acc = *offset;
                for i in 0..n {
                    for j in 0..n {
                        acc += matrix[i][j] * x[i] * x[j];
                    }
                }
                if let Some(l) = linear {
                    acc += crate::geom::dot(l, x);
                }
                acc
            }
            BoundaryPayoff::HarmonicCubic => x[0] * x[0] * x[0] - 3.0 * x[0] * x[1] * x[1],
            BoundaryPayoff::Step {
                axis,
                threshold,
                below,
                at_or_above,
            } => {
                if x[*axis] < *threshold {
                    *below
                } else {
                    *at_or_above
                }
            }
            BoundaryPayoff::Tabulated(g) => g.interpolate(x).unwrap_or(f64::NAN),
        }
    }
}
