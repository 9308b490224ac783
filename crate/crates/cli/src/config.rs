//! JSON config schemas, one flat struct per subcommand. Unknown keys are
//! rejected so typos fail loudly (exit 2) instead of silently running a
//! default.

use eigdpp_core::{
    game::{GameConfig, SubspaceStrategy, VectorStrategy},
    grid::BoxDomain,
    operator::{DominativeConfig, DppConfig, OperatorVariant},
    payoff::BoundaryPayoff,
    solver::{Acceleration, GridSpec, Init, SolverOptions, Sweep},
    weights::AlphaWeights,
    FrameFamily,
};
use serde::Deserialize;

pub type ConfigResult<T> = Result<T, String>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainSpec {
    pub fn build(&self) -> ConfigResult<BoxDomain> {
        BoxDomain::new(self.lo.clone(), self.hi.clone()).map_err(|e| format!("domain: {e}"))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramesSpec {
    #[serde(default)]
    pub extra_random: usize,
    pub dirs_per_subspace: usize,
    #[serde(default)]
    pub seed: u64,
}

impl FramesSpec {
    pub fn build(&self, n: usize) -> ConfigResult<FrameFamily> {
        if self.extra_random == 0 {
            FrameFamily::canonical(n, self.dirs_per_subspace)
        } else {
            FrameFamily::with_random_frames(n, self.extra_random, self.dirs_per_subspace, self.seed)
        }
        .map_err(|e| format!("frames: {e}"))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantSpec {
    General,
    Extremal,
    Split,
    Dominative { p: f64, ball_points_per_axis: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub domain: DomainSpec,
    pub h: f64,
    pub eps: f64,
    #[serde(default)]
    pub collar_width: Option<f64>,
    pub variant: VariantSpec,
    pub alphas: Vec<f64>,
    pub frames: FramesSpec,
    pub payoff: BoundaryPayoff,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<u64>,
    #[serde(default = "default_sweep")]
    pub sweep: Sweep,
    #[serde(default = "default_acceleration")]
    pub acceleration: Acceleration,
    #[serde(default = "default_init")]
    pub init: Init,
}

fn default_sweep() -> Sweep {
    Sweep::Jacobi
}

fn default_acceleration() -> Acceleration {
    Acceleration::PolicyIteration
}

fn default_init() -> Init {
    Init::MinCollar
}

pub struct BuiltSolve {
    pub spec: GridSpec,
    pub variant: OperatorVariant,
    pub cfg: DppConfig,
    pub payoff: BoundaryPayoff,
    pub opts: SolverOptions,
}

impl SolveConfig {
    pub fn build(&self) -> ConfigResult<BuiltSolve> {
        let domain = self.domain.build()?;
        let n = domain.dim();
        let weights = AlphaWeights::new(self.alphas.clone()).map_err(|e| format!("alphas: {e}"))?;
        if weights.dim() != n {
            return Err(format!(
                "alphas: expected {n} entries, got {}",
                weights.dim()
            ));
        }
        let frames = self.frames.build(n)?;
        let cfg = DppConfig::new(self.eps, weights, frames).map_err(|e| format!("eps: {e}"))?;
        self.payoff
            .validate(n)
            .map_err(|e| format!("payoff: {e}"))?;
        let variant = match &self.variant {
            VariantSpec::General => OperatorVariant::General,
            VariantSpec::Extremal => OperatorVariant::Extremal,
            VariantSpec::Split => OperatorVariant::Split,
            VariantSpec::Dominative {
                p,
                ball_points_per_axis,
            } => OperatorVariant::Dominative(
                DominativeConfig::new(n, *p, *ball_points_per_axis)
                    .map_err(|e| format!("variant.dominative: {e}"))?,
            ),
        };
        Ok(BuiltSolve {
            spec: GridSpec {
                domain,
                h: self.h,
                collar_width: self.collar_width,
            },
            variant,
            cfg,
            payoff: self.payoff.clone(),
            opts: SolverOptions {
                tol: self.tol,
                max_iter: self.max_iter,
                sweep: self.sweep,
                acceleration: self.acceleration,
                init: self.init,
            },
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKindSpec {
    Extremal,
    General,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorStrategySpec {
    GreedyMax,
    GreedyMin,
    Random,
    Fixed,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceStrategySpec {
    Greedy,
    Random,
    Fixed(usize),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub game: GameKindSpec,
    pub solve: SolveConfig,
    pub x0: Vec<f64>,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_record_limit")]
    pub record_limit: usize,
    #[serde(default)]
    pub step_cap: Option<u64>,
    /// Extremal game strategies.
    #[serde(default)]
    pub max_strategy: Option<VectorStrategySpec>,
    #[serde(default)]
    pub min_strategy: Option<VectorStrategySpec>,
    /// General game strategies.
    #[serde(default)]
    pub subspace_strategy: Option<SubspaceStrategySpec>,
    #[serde(default)]
    pub vector_strategy: Option<VectorStrategySpec>,
}

fn default_record_limit() -> usize {
    100
}

impl SimulateConfig {
    pub fn needs_solved_field(&self) -> bool {
        let vector_greedy = |s: &Option<VectorStrategySpec>| {
            matches!(
                s,
                Some(VectorStrategySpec::GreedyMax) | Some(VectorStrategySpec::GreedyMin)
            )
        };
        vector_greedy(&self.max_strategy)
            || vector_greedy(&self.min_strategy)
            || vector_greedy(&self.vector_strategy)
            || matches!(self.subspace_strategy, Some(SubspaceStrategySpec::Greedy))
    }

    pub fn game_config(&self, built: &BuiltSolve) -> ConfigResult<GameConfig> {
        let game = GameConfig::new(built.cfg.clone(), built.spec.domain.clone())
            .map_err(|e| format!("domain: {e}"))?;
        Ok(match self.step_cap {
            Some(cap) => game.with_step_cap(cap),
            None => game,
        })
    }
}

pub fn vector_strategy<'a>(
    spec: &Option<VectorStrategySpec>,
    field: Option<&'a eigdpp_core::GridFunction>,
    default: VectorStrategySpec,
    key: &str,
) -> ConfigResult<VectorStrategy<'a>> {
    let spec = spec.clone().unwrap_or(default);
    Ok(match spec {
        VectorStrategySpec::GreedyMax => VectorStrategy::GreedyMaxOn(
            field.ok_or_else(|| format!("{key}: greedy strategy needs a solved field"))?,
        ),
        VectorStrategySpec::GreedyMin => VectorStrategy::GreedyMinOn(
            field.ok_or_else(|| format!("{key}: greedy strategy needs a solved field"))?,
        ),
        VectorStrategySpec::Random => VectorStrategy::Random,
        VectorStrategySpec::Fixed => VectorStrategy::Fixed,
    })
}

pub fn subspace_strategy<'a>(
    spec: &Option<SubspaceStrategySpec>,
    field: Option<&'a eigdpp_core::GridFunction>,
) -> ConfigResult<SubspaceStrategy<'a>> {
    Ok(match spec.clone().unwrap_or(SubspaceStrategySpec::Random) {
        SubspaceStrategySpec::Greedy => SubspaceStrategy::GreedyOn(
            field.ok_or_else(|| "subspace_strategy: greedy needs a solved field".to_string())?,
        ),
        SubspaceStrategySpec::Random => SubspaceStrategy::Random,
        SubspaceStrategySpec::Fixed(i) => SubspaceStrategy::Fixed(i),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeSpec {
    Any,
    Far,
    Near,
}

impl RegimeSpec {
    pub fn build(&self) -> eigdpp_core::coupling::RegimeFilter {
        match self {
            RegimeSpec::Any => eigdpp_core::coupling::RegimeFilter::Any,
            RegimeSpec::Far => eigdpp_core::coupling::RegimeFilter::FarOnly,
            RegimeSpec::Near => eigdpp_core::coupling::RegimeFilter::NearOnly,
        }
    }
}

fn default_regime() -> RegimeSpec {
    RegimeSpec::Any
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckCouplingConfig {
    pub delta: f64,
    pub c_tilde: f64,
    /// Absent: the extremal-case check. Present: the general-case check.
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    pub eps: f64,
    pub samples: u64,
    pub direction_budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_regime")]
    pub regime: RegimeSpec,
    #[serde(default)]
    pub per_sample_csv: bool,
    /// Diagnostic: bypass the closed-form constants and check at C, N of
    /// your choosing (e.g. to watch the ladder inequality fail for small C).
    #[serde(default)]
    pub c_override: Option<f64>,
    #[serde(default)]
    pub n_annuli_override: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckDominativeConfig {
    pub n: usize,
    pub delta: f64,
    pub omega: f64,
    pub p: f64,
    pub eps: f64,
    pub samples: u64,
    #[serde(default = "default_quad_points")]
    pub quad_points_per_axis: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_regime")]
    pub regime: RegimeSpec,
    #[serde(default)]
    pub per_sample_csv: bool,
}

fn default_quad_points() -> usize {
    12
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderConfig {
    pub solve: SolveConfig,
    pub center: Vec<f64>,
    pub r: f64,
    pub delta: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_bins() -> usize {
    32
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigConfig {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub j: Option<usize>,
    #[serde(default)]
    pub frames: Option<FramesSpec>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}
