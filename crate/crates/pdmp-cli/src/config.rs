//! TOML experiment configuration. Unknown keys are rejected everywhere so
//! typos fail loudly, and every run writes its resolved configuration next
//! to the outputs.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub scheme: SchemeBlock,
    pub run: RunBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub init: InitBlock,
    #[serde(default)]
    pub couple: Option<CoupleBlock>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub moments: Option<MomentsBlock>,
    #[serde(default)]
    pub bias: Option<BiasBlock>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: ModelName,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub potential: Option<PotentialName>,
    /// Diagonal precision for the anisotropic Gaussian potential.
    #[serde(default)]
    pub precision: Option<Vec<f64>>,
    #[serde(default)]
    pub rate_style: Option<RateStyleName>,
    /// Constant excess switching rate per coordinate (scalar, replicated).
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Telegraph flip rate.
    #[serde(default)]
    pub rate: Option<f64>,
    /// Refreshment rate for the bounce and Hamiltonian samplers.
    #[serde(default)]
    pub refresh_rate: Option<f64>,
    #[serde(default)]
    pub refresh_law: Option<RefreshLawName>,
    /// Cell growth rate and division coefficient.
    #[serde(default)]
    pub growth_rate: Option<f64>,
    #[serde(default)]
    pub division_coeff: Option<f64>,
    /// Synthetic logistic data: size, seed and ground truth.
    #[serde(default)]
    pub data_size: Option<usize>,
    #[serde(default)]
    pub data_seed: Option<u64>,
    #[serde(default)]
    pub data_truth: Option<Vec<f64>>,
    #[serde(default)]
    pub morris_lecar: Option<MorrisLecarBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Zzs,
    Telegraph,
    Bps,
    Rhmc,
    MorrisLecar,
    CellSize,
    ZzsSubsampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialName {
    Gaussian,
    AnisotropicGaussian,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateStyleName {
    PositivePart,
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefreshLawName {
    Gaussian,
    Sphere,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MorrisLecarBlock {
    pub capacitance: f64,
    pub g_leak: f64,
    pub g_ca: f64,
    pub g_k: f64,
    pub v_leak: f64,
    pub v_ca: f64,
    pub v_k: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    pub lambda_k_bar: f64,
    pub n_k: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeBlock {
    pub kind: SchemeKind,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub rate: Option<RateName>,
    #[serde(default)]
    pub integrator: Option<IntegratorName>,
    #[serde(default)]
    pub delta: Option<f64>,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Exact continuous-time simulation.
    Exact,
    Fd,
    Pd,
    OrderP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateName {
    Frozen,
    Endpoint,
    AlongIntegrator,
    FiniteDifference,
    LinearSecondOrder,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorName {
    Exact,
    Euler,
    Leapfrog,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub replicas: u64,
    pub seed: u64,
    #[serde(default)]
    pub workers: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: String,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: "out".into() }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitBlock {
    #[serde(default)]
    pub position: Option<Vec<f64>>,
    #[serde(default)]
    pub velocity: Option<Vec<f64>>,
    #[serde(default)]
    pub law: Option<InitLawName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitLawName {
    /// Positions standard Gaussian, velocities uniform on the sign box.
    GaussianBox,
    /// Positions and velocities standard Gaussian.
    GaussianGaussian,
    /// Positions Gaussian, velocities uniform on the unit sphere.
    GaussianSphere,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CoupleBlock {
    pub kind: CoupleKind,
    #[serde(default)]
    pub norm: Option<NormName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoupleKind {
    Wasserstein,
    Tv,
    SubsampledTv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormName {
    L1,
    L2,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub deltas: Vec<f64>,
    pub statistic: StatisticName,
    pub expected_order: f64,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub method: Option<SweepMethodName>,
    /// Reference for the direct method; telegraph mean and Gaussian targets
    /// are filled in analytically when omitted.
    #[serde(default)]
    pub reference: Option<f64>,
    /// How the direct reference is obtained when no value is given.
    #[serde(default)]
    pub reference_mode: Option<ReferenceModeName>,
    #[serde(default)]
    pub replicas_per_delta: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMethodName {
    Coupled,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceModeName {
    /// Closed-form value (telegraph moments, Gaussian stationarity).
    Analytic,
    /// Self-reference from the same scheme at delta_min / 32.
    FineMesh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticName {
    Mean1,
    Radius,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsBlock {
    pub lyapunov: LyapunovName,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Exponent for the custom `exp(c psi)` function.
    #[serde(default)]
    pub psi_exponent: Option<f64>,
    #[serde(default)]
    pub coupled: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LyapunovName {
    ZzsAlphaEps,
    Bps,
    PsiExponent,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BiasBlock {
    pub statistic: StatisticName,
    #[serde(default)]
    pub truth: Option<f64>,
    #[serde(default)]
    pub burn_in: Option<f64>,
}
