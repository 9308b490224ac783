//! The discrete one-step operator Tε in all its variants:
//!
//! * general:   Tu(x) = Σⱼ αⱼ inf_{dim(S)=j} sup_{v∈S,|v|=1} (u(x+εv)+u(x−εv))/2
//! * extremal:  ½ sup_{|v|=1} {…} + ½ inf_{|w|=1} {…}
//! * split:     α/2 sup + α/2 inf + β Σᵢ βᵢ (j = i min-max term)
//! * dominative: q ⨍_{B_ε(x)} u + (1−q) sup_{|v|=1} {…}
//!
//! The continuum inf over subspaces is discretized as the j-subsets of each
//! family frame's axes; the sup inside a subspace runs over the subset axes
//! plus a low-discrepancy sample of the subspace sphere. Probes off the
//! lattice are multilinearly interpolated, which keeps every variant monotone
//! and constant-shift invariant.

use crate::error::{Error, Result};
use crate::frames::FrameFamily;
use crate::geom;
use crate::grid::{GridFunction, MAX_DIM};
use crate::linalg::subsets;
use crate::weights::AlphaWeights;

/// Average of u at the antipodal probes x ± εv, interpolating off-node
/// points.
pub fn second_difference(u: &GridFunction, x: &[f64], v: &[f64], eps: f64) -> Result<f64> {
    debug_assert!(geom::is_unit(v, 1e-9), "direction must be a unit vector");
    let n = x.len();
    let mut probe = [0.0_f64; MAX_DIM];
    for d in 0..n {
        probe[d] = x[d] + eps * v[d];
    }
    let up = u.interpolate(&probe[..n])?;
    for d in 0..n {
        probe[d] = x[d] - eps * v[d];
    }
    let down = u.interpolate(&probe[..n])?;
    Ok(0.5 * (up + down))
}

/// Directions spanning one candidate subspace, stored flat with stride n.
#[derive(Debug, Clone)]
struct SubspaceDirs {
    dirs: Vec<f64>,
}

impl SubspaceDirs {
    fn iter(&self, n: usize) -> impl Iterator<Item = &[f64]> {
        self.dirs.chunks_exact(n)
    }
}

/// One j-term of the operator: min over candidate subspaces of the max of
/// the second difference over the subspace's direction sample.
#[derive(Debug, Clone)]
struct JTerm {
    subspaces: Vec<SubspaceDirs>,
}

/// Precompiled direction sets for every subspace dimension the operator
/// needs. Built once per configuration so solvers and game strategies do not
/// re-derive directions at every lattice node.
#[derive(Debug, Clone)]
pub struct DirectionPlan {
    n: usize,
    j_terms: Vec<Option<JTerm>>, // indexed by j, entry 0 unused
}

impl DirectionPlan {
    fn build(frames: &FrameFamily, needed: &[usize]) -> Self {
        let n = frames.dim();
        let mut j_terms: Vec<Option<JTerm>> = vec![None; n + 1];
        for &j in needed {
            if j_terms[j].is_some() {
                continue;
            }
            j_terms[j] = Some(Self::build_j_term(frames, j));
        }
        DirectionPlan { n, j_terms }
    }

    fn build_j_term(frames: &FrameFamily, j: usize) -> JTerm {
        let n = frames.dim();
        if j == 1 {
            // Every axis of every frame spans its own candidate line; the
            // antipode gives the same average, so one direction suffices.
            let subspaces = frames
                .frames()
                .iter()
                .flat_map(|f| f.axes().map(|a| SubspaceDirs { dirs: a.to_vec() }))
                .collect();
            return JTerm { subspaces };
        }
        if j == n {
            // A single candidate subspace (all of Rⁿ); pool the direction
            // samples of every frame.
            let sample = geom::sphere_sample(n, frames.dirs_per_subspace());
            let mut dirs = Vec::new();
            for f in frames.frames() {
                for a in f.axes() {
                    dirs.extend_from_slice(a);
                }
                for s in &sample {
                    let mut v = vec![0.0; n];
                    for (c, a) in s.iter().zip(f.axes()) {
                        v = geom::axpy(&v, *c, a);
                    }
                    dirs.extend_from_slice(&v);
                }
            }
            return JTerm {
                subspaces: vec![SubspaceDirs { dirs }],
            };
        }
        // 1 < j < n: all j-subsets of each frame's axes.
        let sample = geom::sphere_sample(j, frames.dirs_per_subspace());
        let mut subspaces = Vec::new();
        for f in frames.frames() {
            for subset in subsets(n, j) {
                let mut dirs = Vec::new();
                for &i in &subset {
                    dirs.extend_from_slice(f.axis(i));
                }
                for s in &sample {
                    let mut v = vec![0.0; n];
                    for (c, &i) in s.iter().zip(&subset) {
                        v = geom::axpy(&v, *c, f.axis(i));
                    }
                    dirs.extend_from_slice(&v);
                }
                subspaces.push(SubspaceDirs { dirs });
            }
        }
        JTerm { subspaces }
    }

    pub(crate) fn dim(&self) -> usize {
        self.n
    }

    fn term(&self, j: usize) -> &JTerm {
        self.j_terms[j]
            .as_ref()
            .expect("direction plan missing requested j")
    }

    /// inf over candidate subspaces of the sampled sup of the second
    /// difference.
    pub(crate) fn inf_sup(&self, u: &GridFunction, x: &[f64], eps: f64, j: usize) -> Result<f64> {
        let term = self.term(j);
        let mut best = f64::INFINITY;
        for sub in &term.subspaces {
            let mut sup = f64::NEG_INFINITY;
            for v in sub.iter(self.n) {
                let sd = second_difference(u, x, v, eps)?;
                if sd > sup {
                    sup = sd;
                }
            }
            if sup < best {
                best = sup;
            }
        }
        Ok(best)
    }

    /// Like `inf_sup`, but also returns the direction realizing the value
    /// (the argmax within the argmin subspace, ties to the lowest index).
    pub(crate) fn inf_sup_with_choice<'p>(
        &'p self,
        u: &GridFunction,
        x: &[f64],
        eps: f64,
        j: usize,
    ) -> Result<(f64, &'p [f64])> {
        let term = self.term(j);
        let mut best = f64::INFINITY;
        let mut best_dir: Option<&[f64]> = None;
        for sub in &term.subspaces {
            let mut sup = f64::NEG_INFINITY;
            let mut sup_dir: Option<&[f64]> = None;
            for v in sub.iter(self.n) {
                let sd = second_difference(u, x, v, eps)?;
                if sd > sup {
                    sup = sd;
                    sup_dir = Some(v);
                }
            }
            if sup < best {
                best = sup;
                best_dir = sup_dir;
            }
        }
        Ok((best, best_dir.expect("plan has at least one direction")))
    }

    /// argmin/argmax bookkeeping for game strategies: returns
    /// (subspace index, best sup, direction index attaining it) minimizing
    /// the sup, ties resolved by lowest index.
    pub(crate) fn greedy_min_subspace(
        &self,
        u: &GridFunction,
        x: &[f64],
        eps: f64,
        j: usize,
    ) -> Result<(usize, f64)> {
        let term = self.term(j);
        let mut best = (0usize, f64::INFINITY);
        for (si, sub) in term.subspaces.iter().enumerate() {
            let mut sup = f64::NEG_INFINITY;
            for v in sub.iter(self.n) {
                let sd = second_difference(u, x, v, eps)?;
                if sd > sup {
                    sup = sd;
                }
            }
            if sup < best.1 {
                best = (si, sup);
            }
        }
        Ok(best)
    }

    pub(crate) fn subspace_count(&self, j: usize) -> usize {
        self.term(j).subspaces.len()
    }

    pub(crate) fn directions_of(&self, j: usize, subspace: usize) -> Vec<Vec<f64>> {
        self.term(j).subspaces[subspace]
            .iter(self.n)
            .map(|v| v.to_vec())
            .collect()
    }
}

/// Configuration of the general/extremal/split operators.
#[derive(Debug, Clone)]
pub struct DppConfig {
    eps: f64,
    weights: AlphaWeights,
    frames: FrameFamily,
    plan: DirectionPlan,
}

impl DppConfig {
    pub fn new(eps: f64, weights: AlphaWeights, frames: FrameFamily) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidInput(
                "eps must be positive and finite".into(),
            ));
        }
        let n = frames.dim();
        if n != weights.dim() {
            return Err(Error::InvalidInput(format!(
                "weights dimension {} does not match frame dimension {n}",
                weights.dim()
            )));
        }
        if n > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "dimension {n} exceeds supported {MAX_DIM}"
            )));
        }
        // The extremal pair {1, n} is always compiled (the split and the
        // extremal operator need it; alpha_1, alpha_n > 0 anyway).
        let mut needed: Vec<usize> = vec![1, n];
        for (i, a) in weights.alphas().iter().enumerate() {
            if *a > 0.0 {
                needed.push(i + 1);
            }
        }
        let plan = DirectionPlan::build(&frames, &needed);
        Ok(DppConfig {
            eps,
            weights,
            frames,
            plan,
        })
    }

    /// Extremal configuration (α₁ = αₙ = ½) over the given frames.
    pub fn extremal(eps: f64, frames: FrameFamily) -> Result<Self> {
        let w = AlphaWeights::extremal(frames.dim())?;
        DppConfig::new(eps, w, frames)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn weights(&self) -> &AlphaWeights {
        &self.weights
    }

    pub fn frames(&self) -> &FrameFamily {
        &self.frames
    }

    pub fn plan(&self) -> &DirectionPlan {
        &self.plan
    }
}

/// General operator: Σⱼ αⱼ · (j-th min-max term); terms with αⱼ = 0 are
/// skipped entirely.
pub fn apply_dpp(u: &GridFunction, x: &[f64], cfg: &DppConfig) -> Result<f64> {
    let mut acc = 0.0;
    for (i, a) in cfg.weights.alphas().iter().enumerate() {
        if *a > 0.0 {
            acc += a * cfg.plan.inf_sup(u, x, cfg.eps, i + 1)?;
        }
    }
    Ok(acc)
}

/// Extremal operator ½ sup + ½ inf, evaluated through the same j = 1 and
/// j = n terms as the general operator with weights (½, 0, …, 0, ½).
pub fn apply_dpp_extremal(
    u: &GridFunction,
    x: &[f64],
    eps: f64,
    frames: &FrameFamily,
) -> Result<f64> {
    let cfg = DppConfig::extremal(eps, frames.clone())?;
    apply_extremal_planned(u, x, &cfg)
}

pub(crate) fn apply_extremal_planned(u: &GridFunction, x: &[f64], cfg: &DppConfig) -> Result<f64> {
    let n = cfg.plan.dim();
    let sup = cfg.plan.inf_sup(u, x, cfg.eps, n)?;
    let inf = cfg.plan.inf_sup(u, x, cfg.eps, 1)?;
    Ok(0.5 * sup + 0.5 * inf)
}

/// Split operator α/2 sup + α/2 inf + β Σᵢ βᵢ (j = i term); algebraically
/// equal to the general operator.
pub fn apply_dpp_split(u: &GridFunction, x: &[f64], cfg: &DppConfig) -> Result<f64> {
    let n = cfg.plan.dim();
    let w = cfg.weights();
    let sup = cfg.plan.inf_sup(u, x, cfg.eps, n)?;
    let inf = cfg.plan.inf_sup(u, x, cfg.eps, 1)?;
    let mut acc = 0.5 * w.alpha() * (sup + inf);
    if w.beta() > 0.0 {
        let mut coupled = 0.0;
        for (i, b) in w.betas().iter().enumerate() {
            if *b != 0.0 {
                coupled += b * cfg.plan.inf_sup(u, x, cfg.eps, i + 1)?;
            }
        }
        acc += w.beta() * coupled;
    }
    Ok(acc)
}

/// Configuration of the Dominative p-Laplacian operator.
#[derive(Debug, Clone)]
pub struct DominativeConfig {
    n: usize,
    p: f64,
    q: f64,
    ball_points_per_axis: usize,
}

impl DominativeConfig {
    pub fn new(n: usize, p: f64, ball_points_per_axis: usize) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidInput(format!("dimension {n} unsupported")));
        }
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::InvalidInput("p must satisfy 2 <= p < inf".into()));
        }
        if ball_points_per_axis < 2 {
            return Err(Error::InvalidInput(
                "ball quadrature needs >= 2 points per axis".into(),
            ));
        }
        let q = (n as f64 + 2.0) / (n as f64 + p);
        debug_assert!(q > 0.0 && q <= 1.0);
        Ok(DominativeConfig {
            n,
            p,
            q,
            ball_points_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// q = (n+2)/(n+p); the weight of the ball average.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn ball_points_per_axis(&self) -> usize {
        self.ball_points_per_axis
    }
}

/// Midpoint tensor quadrature offsets over the bounding box of B_ε(0),
/// masked to the ball. An even point count per axis makes the rule
/// antipodally symmetric, so odd terms cancel exactly.
#[derive(Debug, Clone)]
pub struct BallQuadrature {
    n: usize,
    points_per_axis: usize,
    offsets: Vec<f64>, // flat, stride n
}

impl BallQuadrature {
    pub fn build(n: usize, eps: f64, points_per_axis: usize) -> Self {
        let m = points_per_axis + points_per_axis % 2; // force even
        let step = 2.0 * eps / m as f64;
        let mut offsets = Vec::new();
        let mut idx = vec![0usize; n];
        let mut h = vec![0.0; n];
        loop {
            for d in 0..n {
                h[d] = -eps + (idx[d] as f64 + 0.5) * step;
            }
            if geom::dot(&h, &h) <= eps * eps {
                offsets.extend_from_slice(&h);
            }
            // Odometer increment.
            let mut d = 0;
            loop {
                idx[d] += 1;
                if idx[d] < m {
                    break;
                }
                idx[d] = 0;
                d += 1;
                if d == n {
                    return BallQuadrature {
                        n,
                        points_per_axis: m,
                        offsets,
                    };
                }
            }
        }
    }

    pub fn count(&self) -> usize {
        self.offsets.len() / self.n
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.offsets.chunks_exact(self.n)
    }

    /// Average of `f` over the masked cell centers.
    pub fn average<F: FnMut(&[f64]) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut acc = 0.0;
        for h in self.iter() {
            acc += f(h)?;
        }
        Ok(acc / self.count() as f64)
    }
}

/// Dominative operator q · (ball average) + (1−q) · sup of the second
/// difference.
pub fn apply_dpp_dominative(
    u: &GridFunction,
    x: &[f64],
    eps: f64,
    dcfg: &DominativeConfig,
    frames: &FrameFamily,
) -> Result<f64> {
    if frames.dim() != dcfg.dim() {
        return Err(Error::InvalidInput(
            "frame dimension does not match dominative config".into(),
        ));
    }
    let plan = DirectionPlan::build(frames, &[frames.dim()]);
    let ball = BallQuadrature::build(dcfg.dim(), eps, dcfg.ball_points_per_axis());
    apply_dominative_planned(u, x, eps, dcfg.q(), &plan, &ball)
}

pub(crate) fn apply_dominative_planned(
    u: &GridFunction,
    x: &[f64],
    eps: f64,
    q: f64,
    plan: &DirectionPlan,
    ball: &BallQuadrature,
) -> Result<f64> {
    let n = plan.dim();
    let mut probe = [0.0_f64; MAX_DIM];
    let avg = ball.average(|h| {
        for d in 0..n {
            probe[d] = x[d] + h[d];
        }
        u.interpolate(&probe[..n])
    })?;
    let sup = plan.inf_sup(u, x, eps, n)?;
    Ok(q * avg + (1.0 - q) * sup)
}

/// Which fixed-point equation a solve targets.
#[derive(Debug, Clone)]
pub enum OperatorVariant {
    General,
    Extremal,
    Split,
    Dominative(DominativeConfig),
}
