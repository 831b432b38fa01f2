//! Experiment configuration: one JSON document per run.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qustat::ccr::MomentMethod;
use qustat::operator::json::MatrixJson;
use qustat::ustat::Scaling;
use qustat::{DensityMatrix, Error, Kernel, Result};

use qustat::ccr::fock::HERMITE_CHECK_MAX_ORDER;

/// Largest accepted config document.
pub const MAX_CONFIG_BYTES: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Decompose,
    Moments,
    Limit,
    Convergence,
    TestSim,
    Metrology,
    HermiteCheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Decompose => "decompose",
            Command::Moments => "moments",
            Command::Limit => "limit",
            Command::Convergence => "convergence",
            Command::TestSim => "test-sim",
            Command::Metrology => "metrology",
            Command::HermiteCheck => "hermite-check",
        }
    }
}

/// `U diag(eigenvalues) U†`, with `U` the identity when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub eigenvalues: Vec<f64>,
    #[serde(default)]
    pub rotation: Option<MatrixJson>,
}

impl StateSpec {
    pub fn build(&self) -> Result<DensityMatrix> {
        if self.eigenvalues.is_empty() {
            return Err(Error::InvalidInput("state needs at least one eigenvalue".into()));
        }
        if self.eigenvalues.len() > qustat::operator::json::MAX_JSON_DIM {
            return Err(Error::InvalidInput("state dimension too large".into()));
        }
        match &self.rotation {
            None => DensityMatrix::diagonal(&self.eigenvalues),
            Some(u) => DensityMatrix::from_spectrum(&self.eigenvalues, &u.to_matrix()?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `(σx⊗σy + σy⊗σx)/2`.
    PauliXy,
    /// `σx⊗σx + σy⊗σy`.
    PauliXxYy,
    /// `σz⊗σz`.
    PauliZz,
    /// Distance kernel to the configured state.
    Goodness,
    /// Two-sample distance kernel on pairs; the state lives on `C^d ⊗ C^d`.
    Homogeneity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum KernelSpec {
    Preset(Preset),
    Explicit { d: usize, r: usize, matrix: MatrixJson },
}

impl KernelSpec {
    pub fn build(&self, state: &DensityMatrix) -> Result<Kernel> {
        use qustat::operator::{symmetrize_kernel, HermitianOperator};
        let (x, y, z) = (HermitianOperator::pauli_x(), HermitianOperator::pauli_y(), HermitianOperator::pauli_z());
        match self {
            KernelSpec::Preset(Preset::PauliXy) => symmetrize_kernel(&[x, y]),
            KernelSpec::Preset(Preset::PauliXxYy) => Kernel::new(2, 2, x.kron(&x).add(&y.kron(&y))?),
            KernelSpec::Preset(Preset::PauliZz) => Kernel::new(2, 2, z.kron(&z)),
            KernelSpec::Preset(Preset::Goodness) => qustat::apps::goodness_kernel(state),
            KernelSpec::Preset(Preset::Homogeneity) => {
                let d = (state.d() as f64).sqrt().round() as usize;
                if d * d != state.d() {
                    return Err(Error::InvalidInput("homogeneity needs a state on C^d ⊗ C^d".into()));
                }
                qustat::apps::homogeneity_kernel(d)
            }
            KernelSpec::Explicit { d, r, matrix } => {
                let expected = qustat::linalg::checked_pow(*d, *r);
                if *d == 0 || *r == 0 || expected != Some(matrix.dim) {
                    return Err(Error::DimensionMismatch(format!("kernel matrix must have dimension d^r, got {}", matrix.dim)));
                }
                Kernel::new(*d, *r, HermitianOperator::new(matrix.to_matrix()?)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestParams {
    pub alpha: f64,
    /// Acceptance interval; derived from the limit law when absent.
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    #[serde(default = "default_mc_replicates")]
    pub mc_replicates: usize,
    #[serde(default = "default_limit_draws")]
    pub limit_draws: usize,
    #[serde(default)]
    pub alternative: Option<StateSpec>,
}

fn default_mc_replicates() -> usize {
    10_000
}

fn default_limit_draws() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetrologyParams {
    pub t: f64,
    pub g1: f64,
    pub g2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermiteParams {
    #[serde(default = "default_max_order")]
    pub max_order: u32,
    #[serde(default = "default_sigma_sq")]
    pub sigma_sq: Vec<f64>,
}

impl Default for HermiteParams {
    fn default() -> Self {
        HermiteParams { max_order: default_max_order(), sigma_sq: default_sigma_sq() }
    }
}

fn default_max_order() -> u32 {
    HERMITE_CHECK_MAX_ORDER
}

fn default_sigma_sq() -> Vec<f64> {
    vec![0.75, 1.0, 2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative agreement required between the two limit-moment routes.
    #[serde(default = "default_route_rel")]
    pub route_rel: f64,
    /// Absolute agreement used instead when the moment is small.
    #[serde(default = "default_route_abs")]
    pub route_abs: f64,
    #[serde(default = "default_hermite_tol")]
    pub hermite: f64,
    /// Hoeffding degeneracy threshold; `1e-9·‖K‖_F` when absent.
    #[serde(default)]
    pub degeneracy: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { route_rel: default_route_rel(), route_abs: default_route_abs(), hermite: default_hermite_tol(), degeneracy: None }
    }
}

fn default_route_rel() -> f64 {
    1e-6
}

fn default_route_abs() -> f64 {
    1e-9
}

fn default_hermite_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_trunc")]
    pub trunc: usize,
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { max_dim: default_max_dim(), trunc: default_trunc(), max_degree: default_max_degree() }
    }
}

fn default_max_dim() -> usize {
    1 << 14
}

fn default_trunc() -> usize {
    qustat::ccr::fock::DEFAULT_TRUNC
}

fn default_max_degree() -> usize {
    24
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub state: StateSpec,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub p_list: Vec<u32>,
    #[serde(default)]
    pub seed: u64,
    /// Normalisation of `U_n − θ`; `n^{c/2}` when absent.
    #[serde(default)]
    pub scaling: Option<Scaling>,
    /// Limit-moment route for `convergence`.
    #[serde(default = "default_method")]
    pub method: MomentMethod,
    #[serde(default)]
    pub test: Option<TestParams>,
    #[serde(default)]
    pub metrology: Option<MetrologyParams>,
    #[serde(default)]
    pub hermite: HermiteParams,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub budget: Budgets,
}

fn default_method() -> MomentMethod {
    MomentMethod::Fock
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite, got {x}")))
    }
}

impl ExperimentConfig {
    /// Parses and validates a config document.
    pub fn from_json(text: &str) -> Result<Self> {
        if text.len() > MAX_CONFIG_BYTES {
            return Err(Error::InvalidInput(format!("config exceeds {MAX_CONFIG_BYTES} bytes")));
        }
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that does not need heavy computation, including
    /// that the state and kernel can be built.
    pub fn validate(&self) -> Result<()> {
        let state = self.state.build()?;
        let needs_kernel = !matches!(self.command, Command::HermiteCheck);
        let kernel = match (&self.kernel, needs_kernel) {
            (Some(k), true) => Some(k.build(&state)?),
            (None, true) => return Err(Error::InvalidInput(format!("command {} needs a kernel", self.command.name()))),
            _ => None,
        };
        if let Some(k) = &kernel {
            if k.d() != state.d() {
                return Err(Error::DimensionMismatch(format!("kernel on C^{} but state on C^{}", k.d(), state.d())));
            }
        }
        let needs_n = matches!(self.command, Command::Moments | Command::Convergence | Command::TestSim | Command::Metrology);
        if needs_n && self.n_list.is_empty() {
            return Err(Error::InvalidInput("n_list must not be empty".into()));
        }
        if let Some(k) = &kernel {
            if let Some(&n) = self.n_list.iter().find(|&&n| n < k.r()) {
                return Err(Error::InvalidInput(format!("n = {n} is below the kernel order {}", k.r())));
            }
        }
        let needs_p = matches!(self.command, Command::Moments | Command::Limit | Command::Convergence);
        if needs_p && self.p_list.is_empty() {
            return Err(Error::InvalidInput("p_list must not be empty".into()));
        }
        if self.p_list.iter().any(|&p| p == 0) {
            return Err(Error::InvalidInput("moment orders must be at least 1".into()));
        }
        if let Some(Scaling::Root { c: 0 }) = self.scaling {
            return Err(Error::InvalidInput("root scaling needs c ≥ 1".into()));
        }
        positive("tolerances.route_rel", self.tolerances.route_rel)?;
        positive("tolerances.route_abs", self.tolerances.route_abs)?;
        positive("tolerances.hermite", self.tolerances.hermite)?;
        if let Some(t) = self.tolerances.degeneracy {
            positive("tolerances.degeneracy", t)?;
        }
        if self.budget.max_dim == 0 || self.budget.trunc < 2 {
            return Err(Error::InvalidInput("budget.max_dim must be positive and budget.trunc at least 2".into()));
        }
        match self.command {
            Command::TestSim => {
                let t = self.test.as_ref().ok_or_else(|| Error::InvalidInput("test-sim needs a `test` section".into()))?;
                if !(t.alpha > 0.0 && t.alpha < 1.0) {
                    return Err(Error::InvalidInput(format!("alpha must lie in (0,1), got {}", t.alpha)));
                }
                if let Some([a, b]) = t.interval {
                    if !(a < b) {
                        return Err(Error::InvalidInput(format!("interval [{a}, {b}] is empty")));
                    }
                }
                if t.mc_replicates < 2 || t.limit_draws < 2 {
                    return Err(Error::InvalidInput("mc_replicates and limit_draws must be at least 2".into()));
                }
                if let Some(alt) = &t.alternative {
                    if alt.build()?.d() != state.d() {
                        return Err(Error::DimensionMismatch("alternative state dimension differs".into()));
                    }
                }
                if !matches!(self.kernel, Some(KernelSpec::Preset(Preset::Goodness))) {
                    return Err(Error::InvalidInput("test-sim uses the goodness kernel".into()));
                }
                if self.n_list.iter().any(|&n| n < 2) {
                    return Err(Error::InvalidInput("test-sim needs n ≥ 2".into()));
                }
            }
            Command::Metrology => {
                let m = self.metrology.as_ref().ok_or_else(|| Error::InvalidInput("metrology needs a `metrology` section".into()))?;
                if ![m.t, m.g1, m.g2].iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidInput("t, g1 and g2 must be finite".into()));
                }
            }
            Command::HermiteCheck => {
                if self.hermite.max_order == 0 || self.hermite.max_order > HERMITE_CHECK_MAX_ORDER {
                    return Err(Error::InvalidInput(format!("hermite.max_order must lie in 1..={HERMITE_CHECK_MAX_ORDER}")));
                }
                if self.hermite.sigma_sq.is_empty() || self.hermite.sigma_sq.iter().any(|s| !(s.is_finite() && *s > 0.5)) {
                    return Err(Error::InvalidInput("hermite.sigma_sq entries must exceed 1/2".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Serialization with every default filled in; key order is fixed by
    /// the struct layout.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
