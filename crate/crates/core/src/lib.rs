//! Core library for solving and verifying the dynamic programming principle
//!
//! ```text
//! u(x) = Σⱼ αⱼ inf_{dim(S)=j} sup_{v∈S, |v|=1} (u(x+εv) + u(x−εv)) / 2
//! ```
//!
//! associated with the degenerate elliptic equation Σᵢ αᵢ λᵢ(D²u) = 0, where
//! λ₁ ≤ … ≤ λₙ are the eigenvalues of the Hessian. The crate provides:
//!
//! * [`linalg`]: a self-contained Jacobi eigen-solver and the min-max form of
//!   λⱼ over sampled subspace families,
//! * [`operator`]: the discrete one-step operator in its general, extremal,
//!   split, and Dominative p-Laplacian variants,
//! * [`solver`]: fixed-point solution with Dirichlet collar data,
//! * [`game`]: Monte Carlo playouts of the associated two-player zero-sum
//!   games with pluggable strategies,
//! * [`coupling`]: the two-token coupling machinery (move rules, the barrier
//!   f = f₁ − f₂, annulus ladder, closed-form constants) and sampled
//!   verification of its strict inequalities,
//! * [`holder`]: an empirical Hölder-modulus estimator for solved fields.
//!
//! Data-parallel inner loops run on rayon when the default `parallel` feature
//! is enabled and on plain loops otherwise; outputs are bit-identical either
//! way.

// Validation deliberately uses `!(x > 0.0)`-style comparisons: they reject
// NaN, which `x <= 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod error;
pub mod exec;
pub mod frames;
pub mod game;
pub mod geom;
pub mod grid;
pub mod holder;
pub mod linalg;
pub mod operator;
pub mod payoff;
pub mod rng;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
pub use frames::{Frame, FrameFamily};
pub use grid::{BoxDomain, GridFunction};
pub use linalg::{
    eigen_decompose, eigenvalues_symmetric, lambda_j_minmax, lambda_j_minmax_sampled,
    weighted_eig_sum, EigenDecomposition, Spectrum, SymMatrix,
};
pub use operator::{
    apply_dpp, apply_dpp_dominative, apply_dpp_extremal, apply_dpp_split, second_difference,
    DominativeConfig, DppConfig, OperatorVariant,
};
pub use payoff::BoundaryPayoff;
pub use solver::{
    residual, solve, Acceleration, GridSpec, Init, SolveReport, SolverOptions, Sweep,
};
pub use weights::AlphaWeights;
