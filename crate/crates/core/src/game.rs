//! Monte Carlo playout of the two-player zero-sum game behind the DPP.
//!
//! General variant: a round starts by drawing j with P(j = i) = αᵢ; Player I
//! (the minimizer) picks a j-dimensional subspace, Player II (the maximizer)
//! picks a unit vector from it, and the token moves to x ± εv with equal
//! probability. Extremal variant (§ α₁ = αₙ = ½): a fair coin decides which
//! player picks the vector outright. Play stops when the token leaves the
//! open box; Player I then pays G(x_τ).
//!
//! All randomness is counter-derived from (seed, trajectory, step), so a
//! batch of trajectories is reproducible bit for bit regardless of thread
//! scheduling.

use crate::error::{Error, Result};
use crate::geom;
use crate::grid::{BoxDomain, GridFunction};
use crate::operator::{second_difference, DppConfig};
use crate::payoff::BoundaryPayoff;
use crate::rng::CounterRng;
use crate::{exec, weights::AlphaWeights};
use serde::Serialize;

/// Default per-trajectory step cap.
pub const DEFAULT_STEP_CAP: u64 = 10_000_000;

/// One recorded round: the drawn subspace dimension, which candidate
/// subspace was picked, the chosen unit vector and the coin sign.
#[derive(Debug, Clone, Serialize)]
pub struct ChoiceRecord {
    pub j: usize,
    pub subspace: usize,
    pub v: Vec<f64>,
    pub sign: i8,
}

/// A full game playout.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub positions: Vec<Vec<f64>>,
    pub choices: Vec<ChoiceRecord>,
    pub exit_point: Vec<f64>,
    pub payoff: f64,
    pub steps: u64,
}

impl TrajectoryRecord {
    /// CSV rows `step,x1..xn,j,sign` (the exit row repeats the last choice).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W, index: usize) -> std::io::Result<()> {
        for (step, pos) in self.positions.iter().enumerate() {
            let (j, sign) = if step == 0 {
                (0, 0)
            } else {
                let c = &self.choices[step - 1];
                (c.j, c.sign)
            };
            write!(w, "{index},{step}")?;
            for x in pos {
                write!(w, ",{x}")?;
            }
            writeln!(w, ",{j},{sign}")?;
        }
        Ok(())
    }
}

/// How the subspace picker (Player I, minimizing) chooses among the
/// candidate subspaces of the direction plan.
#[derive(Debug, Clone)]
pub enum SubspaceStrategy<'a> {
    /// argmin over candidates of the sampled sup of the second difference on
    /// the given value field; ties to the lowest index.
    GreedyOn(&'a GridFunction),
    Random,
    Fixed(usize),
}

/// How a vector picker chooses a unit vector within the sampled directions
/// of a subspace.
#[derive(Debug, Clone)]
pub enum VectorStrategy<'a> {
    /// argmax of the second difference on the given field.
    GreedyMaxOn(&'a GridFunction),
    /// argmin of the second difference on the given field.
    GreedyMinOn(&'a GridFunction),
    /// Uniform over the continuum sphere of the subspace.
    Random,
    /// Always the first sampled direction of the subspace.
    Fixed,
}

fn pick_vector(
    strategy: &VectorStrategy<'_>,
    dirs: &[Vec<f64>],
    x: &[f64],
    eps: f64,
    rng: &mut CounterRng,
) -> Result<(usize, Vec<f64>)> {
    match strategy {
        VectorStrategy::GreedyMaxOn(field) => {
            let mut best = (0usize, f64::NEG_INFINITY);
            for (i, v) in dirs.iter().enumerate() {
                let sd = second_difference(field, x, v, eps)?;
                if sd > best.1 {
                    best = (i, sd);
                }
            }
            Ok((best.0, dirs[best.0].clone()))
        }
        VectorStrategy::GreedyMinOn(field) => {
            let mut best = (0usize, f64::INFINITY);
            for (i, v) in dirs.iter().enumerate() {
                let sd = second_difference(field, x, v, eps)?;
                if sd < best.1 {
                    best = (i, sd);
                }
            }
            Ok((best.0, dirs[best.0].clone()))
        }
        VectorStrategy::Random => {
            // A uniform direction in the span of the sampled subspace: for
            // the plan's subspaces the first `j` directions are orthonormal
            // axes, so combining them with Gaussian weights is uniform.
            let span: Vec<&Vec<f64>> = dirs.iter().take(subspace_rank(dirs)).collect();
            let coeffs = rng.next_unit_vector(span.len());
            let mut v = vec![0.0; dirs[0].len()];
            for (c, b) in coeffs.iter().zip(span) {
                v = geom::axpy(&v, *c, b);
            }
            let nrm = geom::norm(&v);
            Ok((usize::MAX, geom::scale(&v, 1.0 / nrm)))
        }
        VectorStrategy::Fixed => Ok((0, dirs[0].clone())),
    }
}

/// The leading orthonormal block of a subspace's direction list (its axes).
fn subspace_rank(dirs: &[Vec<f64>]) -> usize {
    let n = dirs[0].len();
    let mut rank = 1;
    while rank < dirs.len() && rank < n {
        // Axes are mutually orthogonal; sampled fill-ins are not.
        let orthogonal = (0..rank).all(|i| geom::dot(&dirs[i], &dirs[rank]).abs() < 1e-9);
        if !orthogonal {
            break;
        }
        rank += 1;
    }
    rank
}

fn sample_j(weights: &AlphaWeights, rng: &mut CounterRng) -> usize {
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (i, a) in weights.alphas().iter().enumerate() {
        acc += a;
        if u < acc {
            return i + 1;
        }
    }
    weights.dim()
}

struct StepOutcome {
    choice: ChoiceRecord,
    next: Vec<f64>,
}

fn play_from<FStep>(
    x0: &[f64],
    payoff: &BoundaryPayoff,
    game: &GameConfig,
    mut step_fn: FStep,
) -> Result<TrajectoryRecord>
where
    FStep: FnMut(&[f64], u64) -> Result<StepOutcome>,
{
    debug_assert_eq!(x0.len(), game.domain.dim());
    if !game.domain.contains_interior(x0) {
        return Err(Error::InvalidInput("start point must be interior".into()));
    }
    let mut positions = vec![x0.to_vec()];
    let mut choices = Vec::new();
    let mut x = x0.to_vec();
    let mut steps = 0u64;
    loop {
        if steps >= game.step_cap {
            return Err(Error::NonTerminating(game.step_cap));
        }
        let outcome = step_fn(&x, steps)?;
        x = outcome.next.clone();
        positions.push(outcome.next);
        choices.push(outcome.choice);
        steps += 1;
        if !game.domain.contains_interior(&x) {
            break;
        }
    }
    let payoff_value = payoff.eval(&x);
    Ok(TrajectoryRecord {
        positions,
        choices,
        exit_point: x,
        payoff: payoff_value,
        steps,
    })
}

/// Game configuration: operator data plus the open box the token lives in.
#[derive(Debug, Clone)]
pub struct GameConfig {
    pub cfg: DppConfig,
    pub domain: BoxDomain,
    pub step_cap: u64,
}

impl GameConfig {
    pub fn new(cfg: DppConfig, domain: BoxDomain) -> Result<Self> {
        if cfg.frames().dim() != domain.dim() {
            return Err(Error::InvalidInput(
                "game domain dimension does not match operator config".into(),
            ));
        }
        Ok(GameConfig {
            cfg,
            domain,
            step_cap: DEFAULT_STEP_CAP,
        })
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }
}

/// Plays one round-based general game from `x0` with the given strategies
/// and seed. Deterministic in all arguments.
pub fn play_general(
    x0: &[f64],
    payoff: &BoundaryPayoff,
    game: &GameConfig,
    s_subspace: &SubspaceStrategy<'_>,
    s_vector: &VectorStrategy<'_>,
    seed: u64,
    trajectory_index: u64,
) -> Result<TrajectoryRecord> {
    let cfg = &game.cfg;
    let eps = cfg.eps();
    play_from(x0, payoff, game, |x, step| {
        let mut rng = CounterRng::for_substream(seed, trajectory_index, step);
        let j = sample_j(cfg.weights(), &mut rng);
        let plan = cfg.plan();
        let subspace = match s_subspace {
            SubspaceStrategy::GreedyOn(field) => plan.greedy_min_subspace(field, x, eps, j)?.0,
            SubspaceStrategy::Random => rng.next_below(plan.subspace_count(j)),
            SubspaceStrategy::Fixed(i) => (*i).min(plan.subspace_count(j) - 1),
        };
        let dirs = plan.directions_of(j, subspace);
        let (_, v) = pick_vector(s_vector, &dirs, x, eps, &mut rng)?;
        let sign: i8 = if rng.next_f64() < 0.5 { 1 } else { -1 };
        let next = geom::axpy(x, sign as f64 * eps, &v);
        Ok(StepOutcome {
            choice: ChoiceRecord {
                j,
                subspace,
                v,
                sign,
            },
            next,
        })
    })
}

/// Plays one extremal (coin-toss) game: the winner of a fair coin picks the
/// vector from the pooled direction set; j is recorded as n for the
/// maximizer's turn and 1 for the minimizer's.
pub fn play_extremal(
    x0: &[f64],
    payoff: &BoundaryPayoff,
    game: &GameConfig,
    s_max: &VectorStrategy<'_>,
    s_min: &VectorStrategy<'_>,
    seed: u64,
    trajectory_index: u64,
) -> Result<TrajectoryRecord> {
    let cfg = &game.cfg;
    let eps = cfg.eps();
    let n = cfg.frames().dim();
    play_from(x0, payoff, game, |x, step| {
        let mut rng = CounterRng::for_substream(seed, trajectory_index, step);
        let max_wins = rng.next_f64() < 0.5;
        let plan = cfg.plan();
        let (j, subspace, v) = if max_wins {
            let dirs = plan.directions_of(n, 0);
            let (_, v) = pick_vector(s_max, &dirs, x, eps, &mut rng)?;
            (n, 0, v)
        } else {
            // The minimizer's candidates are the 1-dimensional subspaces.
            let count = plan.subspace_count(1);
            match s_min {
                VectorStrategy::GreedyMinOn(field) => {
                    let mut best = (0usize, f64::INFINITY);
                    for si in 0..count {
                        let dirs = plan.directions_of(1, si);
                        let sd = second_difference(field, x, &dirs[0], eps)?;
                        if sd < best.1 {
                            best = (si, sd);
                        }
                    }
                    (1, best.0, plan.directions_of(1, best.0)[0].clone())
                }
                VectorStrategy::GreedyMaxOn(field) => {
                    let mut best = (0usize, f64::NEG_INFINITY);
                    for si in 0..count {
                        let dirs = plan.directions_of(1, si);
                        let sd = second_difference(field, x, &dirs[0], eps)?;
                        if sd > best.1 {
                            best = (si, sd);
                        }
                    }
                    (1, best.0, plan.directions_of(1, best.0)[0].clone())
                }
                VectorStrategy::Random => (1, usize::MAX, rng.next_unit_vector(n)),
                VectorStrategy::Fixed => (1, 0, plan.directions_of(1, 0)[0].clone()),
            }
        };
        let sign: i8 = if rng.next_f64() < 0.5 { 1 } else { -1 };
        let next = geom::axpy(x, sign as f64 * eps, &v);
        Ok(StepOutcome {
            choice: ChoiceRecord {
                j,
                subspace,
                v,
                sign,
            },
            next,
        })
    })
}

/// Which game `estimate_value` plays.
#[derive(Debug, Clone)]
pub enum GameKind<'a> {
    General {
        s_subspace: SubspaceStrategy<'a>,
        s_vector: VectorStrategy<'a>,
    },
    Extremal {
        s_max: VectorStrategy<'a>,
        s_min: VectorStrategy<'a>,
    },
}

/// Monte Carlo estimate of the game value at `x0`.
#[derive(Debug, Clone, Serialize)]
pub struct ValueEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub trials: u64,
}

/// Runs `trials` independent trajectories (seeds derived from (seed, index))
/// and aggregates the payoff mean and standard error. Aggregation is done in
/// index order, so results do not depend on the thread count. At most
/// `record_limit` full trajectories are returned (the payoffs of all of them
/// always enter the estimate).
pub fn estimate_value(
    x0: &[f64],
    payoff: &BoundaryPayoff,
    game: &GameConfig,
    kind: &GameKind<'_>,
    trials: u64,
    seed: u64,
    record_limit: usize,
) -> Result<(ValueEstimate, Vec<TrajectoryRecord>)> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    let results = exec::map_indexed(trials as usize, |i| {
        let traj = match kind {
            GameKind::General {
                s_subspace,
                s_vector,
            } => play_general(x0, payoff, game, s_subspace, s_vector, seed, i as u64),
            GameKind::Extremal { s_max, s_min } => {
                play_extremal(x0, payoff, game, s_max, s_min, seed, i as u64)
            }
        };
        traj.map(|t| {
            let payoff = t.payoff;
            let keep = if i < record_limit { Some(t) } else { None };
            (payoff, keep)
        })
    });

    let mut payoffs = Vec::with_capacity(trials as usize);
    let mut records = Vec::new();
    for r in results {
        let (p, keep) = r?;
        payoffs.push(p);
        if let Some(t) = keep {
            records.push(t);
        }
    }
    let nf = payoffs.len() as f64;
    let mean = payoffs.iter().sum::<f64>() / nf;
    let var = if payoffs.len() > 1 {
        payoffs.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    let se = (var / nf).sqrt();
    Ok((
        ValueEstimate {
            mean,
            standard_error: se,
            trials,
        },
        records,
    ))
}
