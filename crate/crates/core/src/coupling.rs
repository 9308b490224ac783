//! The two-token coupling machinery: move rules (i)/(ii), the coupled step
//! function F, the barrier f = f₁ − f₂ with its annulus ladder, Taylor and
//! error estimates, closed-form constants, and sampled verification of the
//! strict inequalities that drive the Hölder estimate.
//!
//! Two numerical regimes matter:
//!
//! * Margins scale like ε², while f itself is O(C). All f₁ differences are
//!   therefore evaluated as stable deltas (never as differences of large
//!   absolute values).
//! * At theorem-scale constants C^{2N} overflows any float, so every
//!   f₂-ladder comparison runs on logarithms, relative to the current
//!   annulus.
//!
//! The sampled sup/inf only bounds the true one from one side, so every
//! check injects the structured adversarial pairs the proof identifies as
//! worst cases in addition to a dense random budget; reports carry the note
//! "empirical, not certified".

use crate::error::{Error, Result};
use crate::exec;
use crate::geom;
use crate::rng::CounterRng;
use crate::weights::AlphaWeights;
use serde::Serialize;

/// Positions of the two coupled tokens. The difference y = x − z is always
/// recomputed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    x: Vec<f64>,
    z: Vec<f64>,
}

impl CoupledState {
    pub fn new(x: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if x.len() != z.len() || x.is_empty() {
            return Err(Error::InvalidInput(
                "coupled state needs matching dimensions".into(),
            ));
        }
        if !geom::all_finite(&x) || !geom::all_finite(&z) {
            return Err(Error::InvalidInput("coupled state must be finite".into()));
        }
        Ok(CoupledState { x, z })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn y(&self) -> Vec<f64> {
        geom::sub(&self.x, &self.z)
    }

    pub fn dist(&self) -> f64 {
        geom::norm(&self.y())
    }

    pub fn sum(&self) -> Vec<f64> {
        geom::add(&self.x, &self.z)
    }
}

/// Which coupling rule moves the tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Tokens move by ε(v, w).
    RuleI,
    /// Tokens move by ε(v, −w).
    RuleII,
}

/// v_{y⊥} = v − (⟨v, y⟩ / ⟨y, y⟩) y.
pub fn perp_component(v: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let yy = geom::dot(y, y);
    if yy == 0.0 {
        return Err(Error::DegenerateState(
            "perp component undefined for y = 0".into(),
        ));
    }
    let c = geom::dot(v, y) / yy;
    Ok(geom::axpy(v, -c, y))
}

/// Rule (ii) applies iff |v_{y⊥}|² + |w_{y⊥}|² > 1 and ⟨v_{y⊥}, w_{y⊥}⟩ < 0,
/// both strictly; rule (i) in every other case.
pub fn select_rule(v: &[f64], w: &[f64], y: &[f64]) -> Result<Rule> {
    let vp = perp_component(v, y)?;
    let wp = perp_component(w, y)?;
    let squares = geom::dot(&vp, &vp) + geom::dot(&wp, &wp);
    let cross = geom::dot(&vp, &wp);
    if squares > 1.0 && cross < 0.0 {
        Ok(Rule::RuleII)
    } else {
        Ok(Rule::RuleI)
    }
}

/// The coupled step function F(x, z, v, w, g): the average of g over the two
/// branches of the selected rule.
pub fn f_eval<G: Fn(&[f64], &[f64]) -> f64>(
    s: &CoupledState,
    v: &[f64],
    w: &[f64],
    g: G,
    eps: f64,
) -> Result<f64> {
    let rule = select_rule(v, w, &s.y())?;
    let w_eff: Vec<f64> = match rule {
        Rule::RuleI => w.to_vec(),
        Rule::RuleII => geom::scale(w, -1.0),
    };
    let xp = geom::axpy(&s.x, eps, v);
    let zp = geom::axpy(&s.z, eps, &w_eff);
    let xm = geom::axpy(&s.x, -eps, v);
    let zm = geom::axpy(&s.z, -eps, &w_eff);
    Ok(0.5 * (g(&xp, &zp) + g(&xm, &zm)))
}

/// Barrier constants for the extremal/general coupling argument.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierParams {
    pub delta: f64,
    pub c: f64,
    /// Number of annuli N in the f₂ ladder.
    pub n_annuli: u64,
    pub c_tilde: f64,
}

impl BarrierParams {
    /// Manual construction (for desk-scale tests); `choose_constants` builds
    /// theorem-scale parameters.
    pub fn new(delta: f64, c: f64, n_annuli: u64, c_tilde: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::InvalidInput(format!(
                "delta must lie in (0, 1/2), got {delta}"
            )));
        }
        if !(c > 1.0) {
            return Err(Error::InvalidInput(
                "barrier constant C must exceed 1".into(),
            ));
        }
        Ok(BarrierParams {
            delta,
            c,
            n_annuli,
            c_tilde,
        })
    }
}

/// C = ((C̃ + 4)/4^{δ−2} + 20) / (δ − 2δ²) and N = ⌈100C/δ⌉, so that
/// 2Cδ² − Cδ + 20 = −(C̃ + 4)/4^{δ−2}. The identity is re-verified to 1e-9.
pub fn choose_constants(delta: f64, c_tilde: f64) -> Result<BarrierParams> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidInput(format!(
            "delta must lie in (0, 1/2), got {delta}"
        )));
    }
    if !(c_tilde > 0.0) || !c_tilde.is_finite() {
        return Err(Error::InvalidInput("C tilde must be positive".into()));
    }
    let pow = 4.0_f64.powf(delta - 2.0);
    let denom = delta - 2.0 * delta * delta;
    let c = ((c_tilde + 4.0) / pow + 20.0) / denom;
    let lhs = 2.0 * c * delta * delta - c * delta + 20.0;
    let rhs = -(c_tilde + 4.0) / pow;
    let scale = lhs.abs().max(rhs.abs()).max(1.0);
    if (lhs - rhs).abs() > 1e-9 * scale {
        return Err(Error::InvalidInput(format!(
            "constant identity failed: {lhs} vs {rhs}"
        )));
    }
    let n = (100.0 * c / delta).ceil();
    if !(n < u64::MAX as f64) {
        return Err(Error::InvalidInput("annulus count overflows".into()));
    }
    BarrierParams::new(delta, c, n as u64, c_tilde)
}

/// f₁(x, z) = C|x−z|^δ + |x+z|².
pub fn barrier_f1(s: &CoupledState, bp: &BarrierParams) -> f64 {
    let sum = s.sum();
    bp.c * s.dist().powf(bp.delta) + geom::dot(&sum, &sum)
}

/// Index i of the annulus (i−1)ε/10 < |x−z| ≤ iε/10, or None beyond the
/// ladder (|x−z| > Nε/10). Bins are upper-closed; i = 0 only at x = z.
pub fn annulus_index(s: &CoupledState, eps: f64, n_annuli: u64) -> Option<u64> {
    annulus_index_of_dist(s.dist(), eps, n_annuli as f64).map(|i| i as u64)
}

fn annulus_index_of_dist(dist: f64, eps: f64, n_annuli: f64) -> Option<f64> {
    let i = (dist / (eps / 10.0)).ceil();
    if i > n_annuli {
        None
    } else {
        Some(i)
    }
}

/// f₂ in the linear domain: C^{2(N−i)} ε^δ on annulus i, zero beyond the
/// ladder. Overflows to +inf at theorem-scale constants; use
/// [`barrier_f2_log`] there.
pub fn barrier_f2(s: &CoupledState, bp: &BarrierParams, eps: f64) -> f64 {
    match barrier_f2_log(s, bp, eps) {
        f64::NEG_INFINITY => 0.0,
        log => log.exp(),
    }
}

/// ln f₂ = 2(N−i) ln C + δ ln ε, or −inf beyond the ladder.
pub fn barrier_f2_log(s: &CoupledState, bp: &BarrierParams, eps: f64) -> f64 {
    match annulus_index(s, eps, bp.n_annuli) {
        None => f64::NEG_INFINITY,
        Some(i) => {
            let levels = (bp.n_annuli - i) as f64;
            2.0 * levels * bp.c.ln() + bp.delta * eps.ln()
        }
    }
}

/// Second-order Taylor model of f₁ at (x, z) with displacements (h_x, h_z):
///
/// f₁ + Cδ|y|^{δ−1}(h_x−h_z)_V + 2⟨x+z, h_x+h_z⟩
///    + (C/2)δ|y|^{δ−2}[(δ−1)(h_x−h_z)²_V + (h_x−h_z)²_{V⊥}] + |h_x+h_z|²,
///
/// where (·)_V is the scalar projection onto span(y).
pub fn taylor_f1(s: &CoupledState, h_x: &[f64], h_z: &[f64], bp: &BarrierParams) -> Result<f64> {
    let y = s.y();
    let dist = geom::norm(&y);
    if dist == 0.0 {
        return Err(Error::DegenerateState(
            "taylor expansion undefined at x = z".into(),
        ));
    }
    let d = geom::sub(h_x, h_z);
    let sm = geom::add(h_x, h_z);
    let d_v = geom::dot(&d, &y) / dist;
    let d_perp_sq = geom::dot(&d, &d) - d_v * d_v;
    let sum = s.sum();
    Ok(barrier_f1(s, bp)
        + bp.c * bp.delta * dist.powf(bp.delta - 1.0) * d_v
        + 2.0 * geom::dot(&sum, &sm)
        + 0.5
            * bp.c
            * bp.delta
            * dist.powf(bp.delta - 2.0)
            * ((bp.delta - 1.0) * d_v * d_v + d_perp_sq)
        + geom::dot(&sm, &sm))
}

/// Raw Taylor error bound C|(h_x, h_z)|³ (|x−z| − 2ε)^{δ−3}; needs
/// |x−z| > 2ε.
pub fn error_bound_raw(
    s: &CoupledState,
    joint_h_norm: f64,
    eps: f64,
    bp: &BarrierParams,
) -> Result<f64> {
    let dist = s.dist();
    if dist <= 2.0 * eps {
        return Err(Error::PreconditionViolated(format!(
            "raw error bound needs |x-z| > 2eps (got {dist} <= {})",
            2.0 * eps
        )));
    }
    Ok(bp.c * joint_h_norm.powi(3) * (dist - 2.0 * eps).powf(bp.delta - 3.0))
}

/// Refined error bound 10 ε² |x−z|^{δ−2}; needs the far regime
/// |x−z| > Nε/10 together with N ≥ 100C/δ.
pub fn error_bound(s: &CoupledState, eps: f64, bp: &BarrierParams) -> Result<f64> {
    let dist = s.dist();
    if dist <= bp.n_annuli as f64 * eps / 10.0 {
        return Err(Error::PreconditionViolated(format!(
            "refined error bound needs |x-z| > N eps / 10 (got {dist})"
        )));
    }
    if (bp.n_annuli as f64) < 100.0 * bp.c / bp.delta {
        return Err(Error::PreconditionViolated(
            "refined error bound needs N >= 100 C / delta".into(),
        ));
    }
    Ok(10.0 * eps * eps * dist.powf(bp.delta - 2.0))
}

/// Mirror map P_{x,z}(h) = h − 2(⟨h, y⟩/⟨y, y⟩) y: reflection across
/// span(x−z)^⊥.
pub fn mirror_map(h: &[f64], s: &CoupledState) -> Result<Vec<f64>> {
    let y = s.y();
    let yy = geom::dot(&y, &y);
    if yy == 0.0 {
        return Err(Error::DegenerateState(
            "mirror map undefined at x = z".into(),
        ));
    }
    let c = 2.0 * geom::dot(h, &y) / yy;
    Ok(geom::axpy(h, -c, &y))
}

// ---------------------------------------------------------------------------
// Stable f evaluation for the inequality checks
// ---------------------------------------------------------------------------

/// f₁(x + h_x, z + h_z) − f₁(x, z) computed without cancellation: the
/// distance term goes through expm1/ln1p on the squared-norm ratio, the sum
/// term is expanded algebraically.
pub fn f1_delta(s: &CoupledState, h_x: &[f64], h_z: &[f64], bp: &BarrierParams) -> f64 {
    let y = s.y();
    let y2 = geom::dot(&y, &y);
    let d = geom::sub(h_x, h_z);
    let sm = geom::add(h_x, h_z);
    let dist_delta = if y2 == 0.0 {
        bp.c * geom::norm(&d).powf(bp.delta)
    } else {
        let t = (2.0 * geom::dot(&y, &d) + geom::dot(&d, &d)) / y2;
        let t = t.max(-1.0);
        // |y + d|^δ − |y|^δ = |y|^δ (exp(δ/2 · ln(1+t)) − 1)
        bp.c * y2.powf(0.5 * bp.delta) * (0.5 * bp.delta * t.ln_1p()).exp_m1()
    };
    let sum = s.sum();
    dist_delta + 2.0 * geom::dot(&sum, &sm) + geom::dot(&sm, &sm)
}

/// Distance of the moved pair under the selected rule, and the rule.
fn coupled_move(v: &[f64], w: &[f64], y: &[f64]) -> Result<(Rule, Vec<f64>)> {
    let rule = select_rule(v, w, y)?;
    let w_eff = match rule {
        Rule::RuleI => w.to_vec(),
        Rule::RuleII => geom::scale(w, -1.0),
    };
    Ok((rule, w_eff))
}

/// ΔF = F(x, z, v, w, f) − f(x, z) for the barrier f = f₁ − f₂, with the f₂
/// contribution of the moved states evaluated in the linear domain (callers
/// restrict this to regimes where those values are representable).
fn f_delta_coupled(
    s: &CoupledState,
    v: &[f64],
    w: &[f64],
    eps: f64,
    bp: &BarrierParams,
    with_f2: bool,
) -> Result<f64> {
    let y = s.y();
    let (_, w_eff) = coupled_move(v, w, &y)?;
    let mut acc = 0.0;
    for sign in [1.0, -1.0] {
        let hx = geom::scale(v, sign * eps);
        let hz = geom::scale(&w_eff, sign * eps);
        let mut branch = f1_delta(s, &hx, &hz, bp);
        if with_f2 {
            // f₂(x,z) = 0 in the far regime; only the moved value enters.
            let moved = CoupledState::new(geom::add(&s.x, &hx), geom::add(&s.z, &hz))?;
            branch -= barrier_f2(&moved, bp, eps);
        }
        acc += 0.5 * branch;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Check reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeCounts {
    pub far: u64,
    pub near: u64,
}

/// Per-sample log row (optional CSV output).
#[derive(Debug, Clone, Serialize)]
pub struct SampleRow {
    pub index: u64,
    pub dist: f64,
    pub regime: &'static str,
    /// Far regime: the raw margin. Near regime: the log-domain ladder slack.
    pub value: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub samples: u64,
    pub violations: u64,
    /// Largest (least negative) far-regime margin observed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_margin: Option<f64>,
    /// Margin every far-regime sample must stay strictly below.
    pub margin_target: f64,
    /// Smallest log-domain ladder slack observed in the near regime.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_ladder_slack: Option<f64>,
    /// Smallest inward-moving measure fraction (dominative check only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_inward_mass: Option<f64>,
    pub regime_counts: RegimeCounts,
    pub note: String,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn write_samples_csv<W: std::io::Write>(rows: &[SampleRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "index,dist,regime,value,violated")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.index, r.dist, r.regime, r.value, r.violated
        )?;
    }
    Ok(())
}

/// Sampling controls for the inequality checks.
#[derive(Debug, Clone)]
pub struct CheckParams {
    pub samples: u64,
    /// Random (v, w) pairs per sample, on top of the structured candidates.
    pub direction_budget: usize,
    pub eps: f64,
    pub seed: u64,
    pub regime: RegimeFilter,
    pub collect_rows: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeFilter {
    Any,
    FarOnly,
    NearOnly,
}

fn far_threshold(bp_n: f64, eps: f64) -> f64 {
    bp_n * eps / 10.0
}

/// Draws a coupled state in B₁ × B₁ with x ≠ z obeying the regime filter.
fn sample_state(
    n: usize,
    eps: f64,
    threshold: f64,
    regime: RegimeFilter,
    seed: u64,
    index: u64,
) -> Result<CoupledState> {
    const MAX_ATTEMPTS: u64 = 200_000;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = CounterRng::for_substream(seed, index, attempt);
        let x = rng.next_in_unit_ball(n);
        let (x, z) = match regime {
            RegimeFilter::NearOnly => {
                // Construct the mate at a distance inside the ladder.
                let dist = rng.next_f64_open() * threshold.min(0.5);
                let dir = rng.next_unit_vector(n);
                let z = geom::axpy(&x, -dist, &dir);
                (x, z)
            }
            _ => (x, rng.next_in_unit_ball(n)),
        };
        if geom::norm(&z) >= 1.0 {
            continue;
        }
        let d = geom::norm(&geom::sub(&x, &z));
        if d == 0.0 {
            continue;
        }
        let far = d > threshold;
        let keep = match regime {
            RegimeFilter::Any => true,
            RegimeFilter::FarOnly => far,
            RegimeFilter::NearOnly => !far && d > eps * 1e-6,
        };
        if keep {
            return CoupledState::new(x, z);
        }
    }
    Err(Error::InvalidInput(format!(
        "could not sample a {regime:?} state in B1 x B1 (regime threshold {threshold:.3e})"
    )))
}

/// FarOnly sampling is impossible once Nε/10 reaches the diameter of
/// B₁ × B₁; fail fast with a useful message instead of spinning.
fn check_far_reachable(regime: RegimeFilter, threshold: f64) -> Result<()> {
    if regime == RegimeFilter::FarOnly && threshold >= 2.0 {
        return Err(Error::InvalidInput(format!(
            "far regime |x-z| > N eps / 10 = {threshold:.3} is unreachable in B1 x B1; decrease eps"
        )));
    }
    Ok(())
}

/// Structured adversarial (v, w) candidates: the configurations the proof
/// singles out, which dense sampling alone would be unlikely to hit.
fn structured_candidates(y: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let yhat = geom::scale(y, 1.0 / geom::norm(y));
    let e1 = geom::unit_orthogonal(y);
    let mut cands = vec![
        (e1.clone(), e1.clone()),                 // v = w ⊥ y
        (e1.clone(), geom::scale(&e1, -1.0)),     // w = −v ⊥ y
        (yhat.clone(), geom::scale(&yhat, -1.0)), // radial pair (inf driver)
        (yhat.clone(), yhat.clone()),             // aligned radial pair
    ];
    if n >= 3 {
        // v, w ⊥ y and ⊥ each other.
        let e2 = {
            let mut seedes = vec![yhat.clone(), e1.clone()];
            let mut k = 0;
            loop {
                let mut e = vec![0.0; n];
                e[k] = 1.0;
                seedes.push(e);
                if let Some(q) = geom::orthonormalize(&seedes) {
                    break q[2].clone();
                }
                seedes.pop();
                k += 1;
            }
        };
        cands.push((e1, e2));
    }
    cands
}

/// Constructive inward move for a near-regime state in annulus i: unit
/// vectors with v − w ∝ −ŷ shrinking |x−z| into annulus i−1 under rule (i).
fn inward_candidate(s: &CoupledState, eps: f64, i: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let y = s.y();
    let dist = geom::norm(&y);
    let n = y.len();
    if n < 2 {
        return None;
    }
    let target = if i <= 1.0 {
        0.0
    } else {
        (i - 1.5) * eps / 10.0
    };
    let t = (dist - target) / eps;
    if !(t > 0.0) || t >= std::f64::consts::SQRT_2 {
        return None;
    }
    let yhat = geom::scale(&y, 1.0 / dist);
    let e = geom::unit_orthogonal(&y);
    let c = (1.0 - t * t / 4.0).sqrt();
    let v = geom::axpy(&geom::scale(&e, c), -t / 2.0, &yhat);
    let w = geom::axpy(&geom::scale(&e, c), t / 2.0, &yhat);
    Some((v, w))
}

struct SampleOutcome {
    row: SampleRow,
    far: bool,
}

/// The extremal-case inequality battery:
///
/// * far regime (|x−z| > Nε/10): margin ½ sup F(f) + ½ inf F(f) − f(x, z)
///   must stay strictly below −C̃ε² (sup/inf over dense random pairs plus
///   the structured candidates);
/// * near regime: the f₂ ladder — the constructive inward candidate attains
///   F(f₂) ≥ ½C^{2(N−i+1)}ε^δ, the ladder inequality
///   ½C² − 2 ≥ K·C^{1−2(N−i)} holds, and the f₁ step stays within 3Cε^δ —
///   all compared in the log domain.
pub fn check_extremal_inequality(bp: &BarrierParams, params: &CheckParams) -> Result<CheckReport> {
    Ok(check_coupling_impl(bp, None, params)?.0)
}

/// Variant that also returns the per-sample rows for CSV output.
pub fn check_extremal_inequality_rows(
    bp: &BarrierParams,
    params: &CheckParams,
) -> Result<(CheckReport, Vec<SampleRow>)> {
    check_coupling_impl(bp, None, params)
}

/// The general-case inequality: the extremal margin scaled by α plus the
/// β-weighted coupled λⱼ terms, which the diagonal choice S̃ = S, ṽ = v
/// bounds by f(x, z) + 4ε² exactly. Requires C̃α − 4β > 0.
pub fn check_general_inequality(
    bp: &BarrierParams,
    weights: &AlphaWeights,
    params: &CheckParams,
) -> Result<CheckReport> {
    Ok(check_coupling_impl(bp, Some(weights), params)?.0)
}

/// Variant that also returns per-sample rows.
pub fn check_general_inequality_rows(
    bp: &BarrierParams,
    weights: &AlphaWeights,
    params: &CheckParams,
) -> Result<(CheckReport, Vec<SampleRow>)> {
    check_coupling_impl(bp, Some(weights), params)
}

fn check_coupling_impl(
    bp: &BarrierParams,
    weights: Option<&AlphaWeights>,
    params: &CheckParams,
) -> Result<(CheckReport, Vec<SampleRow>)> {
    let eps = params.eps;
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let n = match weights {
        Some(w) => w.dim(),
        None => 2,
    };
    if n < 2 {
        return Err(Error::InvalidInput(
            "coupling checks need dimension >= 2".into(),
        ));
    }
    let (alpha, beta) = match weights {
        Some(w) => (w.alpha(), w.beta()),
        None => (1.0, 0.0),
    };
    if alpha <= 0.0 {
        return Err(Error::InvalidInput("alpha must be positive".into()));
    }
    // Feasibility of the combination step: −C̃α + 4β < 0.
    let general_target = (-bp.c_tilde * alpha + 4.0 * beta) * eps * eps;
    if general_target >= 0.0 {
        return Err(Error::PreconditionViolated(format!(
            "need C tilde > 4 beta / alpha = {}, got {}",
            4.0 * beta / alpha,
            bp.c_tilde
        )));
    }
    let ladder_factor = 8.0 * beta / alpha + 6.0;
    let threshold = far_threshold(bp.n_annuli as f64, eps);
    check_far_reachable(params.regime, threshold)?;

    let outcomes = exec::map_indexed(params.samples as usize, |idx| {
        let s = sample_state(n, eps, threshold, params.regime, params.seed, idx as u64)?;
        let dist = s.dist();
        let far = dist > threshold;
        if far {
            far_sample_outcome(&s, bp, alpha, beta, general_target, eps, params, idx as u64)
        } else {
            near_sample_outcome(&s, bp, ladder_factor, eps, params, idx as u64)
        }
    });

    summarize(outcomes, general_target, params)
}

#[allow(clippy::too_many_arguments)]
fn far_sample_outcome(
    s: &CoupledState,
    bp: &BarrierParams,
    alpha: f64,
    beta: f64,
    general_target: f64,
    eps: f64,
    params: &CheckParams,
    index: u64,
) -> Result<SampleOutcome> {
    let y = s.y();
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    let mut consider = |v: &[f64], w: &[f64]| -> Result<()> {
        let df = f_delta_coupled(s, v, w, eps, bp, true)?;
        if df > sup {
            sup = df;
        }
        if df < inf {
            inf = df;
        }
        Ok(())
    };
    for (v, w) in structured_candidates(&y) {
        consider(&v, &w)?;
    }
    let mut rng = CounterRng::for_substream(params.seed ^ 0xD1CE, index, 0);
    for _ in 0..params.direction_budget {
        let v = rng.next_unit_vector(y.len());
        let w = rng.next_unit_vector(y.len());
        consider(&v, &w)?;
    }
    // Margin of the combined DPP bound: α · (extremal margin) + 4βε² from
    // the diagonal coupling value f + 4ε² of the λⱼ terms.
    let extremal_margin = 0.5 * sup + 0.5 * inf;
    let margin = alpha * extremal_margin + 4.0 * beta * eps * eps;
    let violated = !(margin < general_target);
    Ok(SampleOutcome {
        row: SampleRow {
            index,
            dist: s.dist(),
            regime: "far",
            value: margin,
            violated,
        },
        far: true,
    })
}

fn near_sample_outcome(
    s: &CoupledState,
    bp: &BarrierParams,
    ladder_factor: f64,
    eps: f64,
    params: &CheckParams,
    index: u64,
) -> Result<SampleOutcome> {
    let dist = s.dist();
    let i = annulus_index_of_dist(dist, eps, bp.n_annuli as f64)
        .expect("near sample lies inside the ladder");
    let ln_c = bp.c.ln();
    let mut violated = false;

    // (a) f₁ step control: the sampled |Δf₁| stays within 3Cε^δ and the
    // analytic bound 2Cε^δ + 8ε + 4ε² ≤ 3Cε^δ holds at these constants.
    let step_cap = 3.0 * bp.c * eps.powf(bp.delta);
    if 2.0 * bp.c * eps.powf(bp.delta) + 8.0 * eps + 4.0 * eps * eps > step_cap {
        violated = true;
    }
    let y = s.y();
    let mut max_step = 0.0_f64;
    let mut consider = |v: &[f64], w: &[f64]| -> Result<()> {
        let (_, w_eff) = coupled_move(v, w, &y)?;
        for sign in [1.0, -1.0] {
            let hx = geom::scale(v, sign * eps);
            let hz = geom::scale(&w_eff, sign * eps);
            max_step = max_step.max(f1_delta(s, &hx, &hz, bp).abs());
        }
        Ok(())
    };
    for (v, w) in structured_candidates(&y) {
        consider(&v, &w)?;
    }
    let mut rng = CounterRng::for_substream(params.seed ^ 0xBEEF, index, 0);
    for _ in 0..params.direction_budget.min(128) {
        let v = rng.next_unit_vector(y.len());
        let w = rng.next_unit_vector(y.len());
        consider(&v, &w)?;
    }
    if max_step > step_cap {
        violated = true;
    }

    // (b) The constructive inward candidate realizes the f₂ ladder jump:
    // F(x,z,v,w,f₂) ≥ ½ C^{2(N−i+1)} ε^δ, compared in logs relative to
    // f₂(x, z).
    let mut ladder_slack = f64::INFINITY;
    match inward_candidate(s, eps, i) {
        None => violated = true,
        Some((v, w)) => {
            let (rule, w_eff) = coupled_move(&v, &w, &y)?;
            if rule != Rule::RuleI {
                violated = true;
            }
            // Relative log of the F(f₂) lower bound over the two branches:
            // each branch's annulus index i' gives weight C^{−2(i'−i)}.
            let mut rel_sum = 0.0;
            for sign in [1.0, -1.0] {
                let hx = geom::scale(&v, sign * eps);
                let hz = geom::scale(&w_eff, sign * eps);
                let moved = CoupledState::new(geom::add(s.x(), &hx), geom::add(s.z(), &hz))?;
                if let Some(ip) = annulus_index_of_dist(moved.dist(), eps, bp.n_annuli as f64) {
                    rel_sum += (-2.0 * (ip - i) * ln_c).exp();
                }
            }
            // Need ½ rel_sum ≥ ½ C²  ⇔  ln(rel_sum) ≥ 2 ln C.
            let got = (0.5 * rel_sum).ln();
            let need = 2.0 * ln_c - 2.0_f64.ln();
            ladder_slack = ladder_slack.min(got - need);
            if got + 1e-12 < need {
                violated = true;
            }
        }
    }

    // (c) Ladder inequality ½C² − 2 ≥ K · C^{1−2(N−i)} in logs.
    let levels = bp.n_annuli as f64 - i;
    let lhs = (0.5 * bp.c * bp.c - 2.0).ln();
    let rhs = ladder_factor.ln() + (1.0 - 2.0 * levels) * ln_c;
    ladder_slack = ladder_slack.min(lhs - rhs);
    if lhs < rhs {
        violated = true;
    }

    Ok(SampleOutcome {
        row: SampleRow {
            index,
            dist,
            regime: "near",
            value: ladder_slack,
            violated,
        },
        far: false,
    })
}

fn summarize(
    outcomes: Vec<Result<SampleOutcome>>,
    margin_target: f64,
    params: &CheckParams,
) -> Result<(CheckReport, Vec<SampleRow>)> {
    let mut rows = Vec::new();
    let mut far = 0u64;
    let mut near = 0u64;
    let mut violations = 0u64;
    let mut worst_margin: Option<f64> = None;
    let mut worst_slack: Option<f64> = None;
    for o in outcomes {
        let o = o?;
        if o.far {
            far += 1;
            worst_margin = Some(worst_margin.map_or(o.row.value, |m: f64| m.max(o.row.value)));
        } else {
            near += 1;
            worst_slack = Some(worst_slack.map_or(o.row.value, |m: f64| m.min(o.row.value)));
        }
        if o.row.violated {
            violations += 1;
        }
        if params.collect_rows {
            rows.push(o.row);
        }
    }
    let report = CheckReport {
        samples: far + near,
        violations,
        worst_margin,
        margin_target,
        worst_ladder_slack: worst_slack,
        min_inward_mass: None,
        regime_counts: RegimeCounts { far, near },
        note: "empirical, not certified".into(),
    };
    Ok((report, rows))
}

/// Log-domain verification of the ladder inequality
/// ½C² − 2 ≥ K_ladder · C^{1−2(N−i)} over every annulus i ∈ {1..N}
/// (K_ladder = 6 for the extremal case, 8β/α + 6 in general). Returns the
/// number of violating annuli. The right side peaks at i = N, but the sweep
/// is cheap enough to run verbatim.
pub fn check_ladder_all_annuli(bp: &BarrierParams, ladder_factor: f64) -> u64 {
    let ln_c = bp.c.ln();
    let lhs = (0.5 * bp.c * bp.c - 2.0).ln();
    let ln_factor = ladder_factor.ln();
    let mut violations = 0u64;
    for i in 1..=bp.n_annuli {
        let levels = (bp.n_annuli - i) as f64;
        let rhs = ln_factor + (1.0 - 2.0 * levels) * ln_c;
        if lhs < rhs {
            violations += 1;
        }
    }
    violations
}

// ---------------------------------------------------------------------------
// Dominative p-Laplacian coupling
// ---------------------------------------------------------------------------

/// Barrier constants for the dominative coupling: C = 10¹⁰/(δ²ω) with
/// δ < 1/10 and ω ≤ 4⁻ⁿ, the two-branch constant
/// C̃ = min{¼(Cδ/(4(n+2)) − 10), C²/4ⁿ − 3C − 1}, and N = ⌈100C/δ⌉ (kept as
/// a float: it exceeds u64 range for small δω).
#[derive(Debug, Clone, Serialize)]
pub struct DominativeBarrierParams {
    pub n: usize,
    pub delta: f64,
    pub omega: f64,
    pub c: f64,
    pub c_tilde: f64,
    pub n_annuli: f64,
}

impl DominativeBarrierParams {
    pub fn new(n: usize, delta: f64, omega: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(
                "dominative coupling needs n >= 2".into(),
            ));
        }
        if !(delta > 0.0 && delta < 0.1) {
            return Err(Error::InvalidInput(format!(
                "delta must lie in (0, 1/10), got {delta}"
            )));
        }
        let omega_cap = 4.0_f64.powi(-(n as i32));
        if !(omega > 0.0 && omega <= omega_cap) {
            return Err(Error::InvalidInput(format!(
                "omega must lie in (0, 4^-n = {omega_cap}], got {omega}"
            )));
        }
        let c = 1e10 / (delta * delta * omega);
        let c_tilde = Self::c_tilde_branches(n, delta, c)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let n_annuli = (100.0 * c / delta).ceil();
        Ok(DominativeBarrierParams {
            n,
            delta,
            omega,
            c,
            c_tilde,
            n_annuli,
        })
    }

    /// The two candidate values whose minimum is C̃.
    pub fn c_tilde_branches(n: usize, delta: f64, c: f64) -> [f64; 2] {
        [
            0.25 * (c * delta / (4.0 * (n as f64 + 2.0)) - 10.0),
            c * c / 4.0_f64.powi(n as i32) - 3.0 * c - 1.0,
        ]
    }

    /// The K bound of the mean-value estimate at distance `dist`:
    /// |x−z|^{δ−2}(10 − Cδ/(4(n+2))) in the far regime,
    /// −C²/4ⁿ + 3C + 1 inside the ladder.
    pub fn k_bound(&self, dist: f64, eps: f64) -> f64 {
        if dist > self.n_annuli * eps / 10.0 {
            dist.powf(self.delta - 2.0)
                * (10.0 - self.c * self.delta / (4.0 * (self.n as f64 + 2.0)))
        } else {
            -self.c * self.c / 4.0_f64.powi(self.n as i32) + 3.0 * self.c + 1.0
        }
    }

    /// −qC̃ + 4(1−q): must be negative for the combined bound to close.
    pub fn combined_coefficient(&self, q: f64) -> f64 {
        -q * self.c_tilde + 4.0 * (1.0 - q)
    }
}

/// Masked-ball quadrature check of the dominative inequality. Per sample
/// (x, z) in B₁ × B₁:
///
/// * A-term (representable f₁ arithmetic): q times the mirror-coupled mean
///   of f₁ deltas over B_ε plus (1−q) times the exact sup value 4ε² from the
///   v = w candidate;
/// * B-term (log domain): the f₂ ladder flow q·⨍ f₂(moved) − f₂(x, z),
///   whose magnitude must dominate A − target where
///   target = (−qC̃ + 4(1−q))ε^δ;
/// * inward mass: the measure fraction moving the pair at least one annulus
///   inward must be at least ω.
pub fn check_dominative_inequality(
    dbp: &DominativeBarrierParams,
    q: f64,
    quad_points_per_axis: usize,
    params: &CheckParams,
) -> Result<CheckReport> {
    Ok(check_dominative_impl(dbp, q, quad_points_per_axis, params)?.0)
}

pub fn check_dominative_inequality_rows(
    dbp: &DominativeBarrierParams,
    q: f64,
    quad_points_per_axis: usize,
    params: &CheckParams,
) -> Result<(CheckReport, Vec<SampleRow>)> {
    check_dominative_impl(dbp, q, quad_points_per_axis, params)
}

fn check_dominative_impl(
    dbp: &DominativeBarrierParams,
    q: f64,
    quad_points_per_axis: usize,
    params: &CheckParams,
) -> Result<(CheckReport, Vec<SampleRow>)> {
    let eps = params.eps;
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "q must lie in (0, 1], got {q}"
        )));
    }
    let target = dbp.combined_coefficient(q) * eps.powf(dbp.delta);
    if target >= 0.0 {
        return Err(Error::PreconditionViolated(
            "need -q C~ + 4(1-q) < 0; increase C (decrease omega)".into(),
        ));
    }
    let n = dbp.n;
    let ln_c = dbp.c.ln();
    let threshold = far_threshold(dbp.n_annuli, eps);
    check_far_reachable(params.regime, threshold)?;
    let ball = crate::operator::BallQuadrature::build(n, eps, quad_points_per_axis);
    let barrier = BarrierParams {
        delta: dbp.delta,
        c: dbp.c,
        n_annuli: u64::MAX, // index arithmetic only; real N kept as f64
        c_tilde: dbp.c_tilde,
    };

    let outcomes = exec::map_indexed(params.samples as usize, |idx| -> Result<SampleOutcome> {
        let s = sample_state(n, eps, threshold, params.regime, params.seed, idx as u64)?;
        let dist = s.dist();
        let far = dist > threshold;
        let i = annulus_index_of_dist(dist, eps, dbp.n_annuli);
        let y = s.y();
        let yhat = geom::scale(&y, 1.0 / dist);
        let sum = s.sum();

        // A-term: f₁ pieces of the margin, all representable.
        let mut a_quad = 0.0;
        // B-term: relative ladder weights exp(−2Δi ln C) per cell.
        let mut rel_weights: Vec<f64> = Vec::with_capacity(ball.count());
        let mut inward = 0usize;
        for h in ball.iter() {
            let radial = geom::dot(h, &yhat);
            let inside_intersection = {
                // h ∈ B_ε(z−x): |h − (z−x)| < ε with z−x = −y.
                let mut acc = 0.0;
                for d in 0..n {
                    let t = h[d] + y[d];
                    acc += t * t;
                }
                acc < eps * eps
            };
            if inside_intersection {
                // Diagonal term f(x+h, x+h): f₁ = |2(x+h)|², f₂ at annulus 0.
                let w = geom::add(s.x(), h);
                let f1_diag = 4.0 * geom::dot(&w, &w);
                a_quad += f1_diag - (dbp.c * dist.powf(dbp.delta) + geom::dot(&sum, &sum));
                if let Some(ii) = i {
                    rel_weights.push((2.0 * ii * ln_c).exp());
                    inward += 1;
                }
            } else {
                let ph = mirror_map(h, &s)?;
                a_quad += f1_delta(&s, h, &ph, &barrier);
                let moved_dist = (dist + 2.0 * radial).abs();
                if let (Some(ii), Some(ip)) =
                    (i, annulus_index_of_dist(moved_dist, eps, dbp.n_annuli))
                {
                    rel_weights.push((-2.0 * (ip - ii) * ln_c).exp());
                    if ip <= ii - 1.0 {
                        inward += 1;
                    }
                } else if i.is_some() {
                    // Moved outside the ladder: f₂ contribution zero.
                    rel_weights.push(0.0);
                }
            }
        }
        let count = ball.count() as f64;
        let a_term = q * a_quad / count + (1.0 - q) * 4.0 * eps * eps;
        let inward_mass = inward as f64 / count;

        let (violated, value) = if let Some(ii) = i {
            // Near regime (at theorem constants the whole ball is near).
            // −B = f₂(x,z) (q R − 1) with R the relative ladder mean; demand
            // ln(−B) > ln(A − target) and inward mass ≥ ω.
            let r = rel_weights.iter().sum::<f64>() / count;
            let lhs_ok = q * r > 1.0;
            let ln_neg_b = (2.0 * (dbp.n_annuli - ii) * ln_c + dbp.delta * eps.ln())
                + (q * r - 1.0).max(f64::MIN_POSITIVE).ln();
            let need = (a_term - target).max(0.0);
            let dominated = if need == 0.0 {
                true
            } else {
                lhs_ok && ln_neg_b > need.ln()
            };
            let mass_ok = inward_mass >= dbp.omega;
            (!(dominated && mass_ok && lhs_ok), ln_neg_b)
        } else {
            // Far regime: f₂ vanishes at (x, z); the margin is the A-term
            // (moved-state f₂ only helps). Demand A < target.
            (!(a_term < target), a_term)
        };

        Ok(SampleOutcome {
            row: SampleRow {
                index: idx as u64,
                dist,
                regime: if far { "far" } else { "near" },
                value,
                violated,
            },
            far,
        })
    });

    let (mut report, rows) = summarize(outcomes, target, params)?;
    // Minimum inward-moving mass, recomputed on a deterministic sub-batch
    // for the report.
    let mut min_mass: Option<f64> = None;
    let probe = params.samples.min(64);
    for idx in 0..probe {
        let s = sample_state(n, eps, threshold, params.regime, params.seed, idx)?;
        let dist = s.dist();
        if annulus_index_of_dist(dist, eps, dbp.n_annuli).is_none() {
            continue;
        }
        let y = s.y();
        let yhat = geom::scale(&y, 1.0 / dist);
        let mut inward = 0usize;
        for h in ball.iter() {
            let radial = geom::dot(h, &yhat);
            let moved = (dist + 2.0 * radial).abs();
            let inside = {
                let mut acc = 0.0;
                for d in 0..n {
                    let t = h[d] + y[d];
                    acc += t * t;
                }
                acc < eps * eps
            };
            if inside || moved <= dist - eps / 10.0 {
                inward += 1;
            }
        }
        let mass = inward as f64 / ball.count() as f64;
        min_mass = Some(min_mass.map_or(mass, |m: f64| m.min(mass)));
    }
    report.min_inward_mass = min_mass;
    Ok((report, rows))
}
