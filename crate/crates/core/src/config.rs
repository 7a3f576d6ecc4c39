//! Run configuration: one JSON document with `model`, `regime`, `solver`,
//! `sampling` and `output` sections.  Parsing is strict (unknown fields are
//! rejected) and every schema complaint is prefixed with the section path,
//! e.g. `model.omegas`, so a bad config fails fast with a pointer to the
//! offending field.  Value-level preconditions (rational independence,
//! decay-exponent gaps, μ range) surface as domain errors when the config is
//! resolved into live objects.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DecayProfile, FrequencyMatrix};
use crate::solver::{Scheme, SolverConfig};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Spatial dimension d; derived from `omegas` when omitted.
    #[serde(default)]
    pub d: Option<usize>,
    /// Per-direction frequency counts ν_j; derived from `omegas` when omitted.
    #[serde(default)]
    pub nu_blocks: Option<Vec<usize>>,
    /// Frequency vectors ω_j, one per spatial direction.
    pub omegas: Vec<Vec<f64>>,
    /// Decay exponents ρ, length ν.
    pub rho: Vec<f64>,
    /// Exceptional-set exponents κ, length ν.
    pub kappa: Vec<f64>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d: None,
            nu_blocks: None,
            omegas: vec![vec![1.0]],
            rho: vec![3.0],
            kappa: vec![1.0],
            amplitude: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    /// Single ε for one-shot suites.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Decreasing ε grid for curve suites.
    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Truncation exponent μ ∈ (0, 1/ν); defaults to 1/(2ν).
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default = "default_z0")]
    pub z0: f64,
    /// Event time as a fraction of the horizon T_ε.
    #[serde(default)]
    pub t_fraction: Option<f64>,
    /// Explicit box radius overriding N(ε) = max(1, ⌊ε^{μ-1/ν}⌋).
    #[serde(default)]
    pub n_trunc: Option<i64>,
}

fn default_eta() -> f64 {
    0.5
}

fn default_z0() -> f64 {
    1.0
}

impl Default for RegimeConfig {
    fn default() -> Self {
        RegimeConfig {
            epsilon: Some(0.1),
            eps_list: None,
            eta: 0.5,
            mu: None,
            z0: 1.0,
            t_fraction: None,
            n_trunc: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,
    #[serde(default)]
    pub dealias_grid: Option<usize>,
    /// Snapshot count for trajectory suites.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
}

fn default_scheme() -> Scheme {
    Scheme::InteractionRk4
}

fn default_k_max() -> usize {
    6
}

fn default_quad_nodes() -> usize {
    24
}

fn default_snapshots() -> usize {
    16
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            dt: None,
            scheme: Scheme::InteractionRk4,
            k_max: 6,
            quad_nodes: 24,
            dealias_grid: None,
            snapshots: 16,
        }
    }
}

impl SolverSection {
    pub fn to_solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            scheme: self.scheme,
            k_max: self.k_max,
            quad_nodes: self.quad_nodes,
            dealias_grid: self.dealias_grid,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Auto,
    Direct,
    Tilted,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default = "default_n_samples")]
    pub n_samples: u64,
    #[serde(default = "default_root_seed")]
    pub root_seed: u64,
    #[serde(default = "default_method")]
    pub method: MethodChoice,
    /// Tilt magnitude; defaults to z₀ ε^{-1/2}.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "default_n_pilot")]
    pub n_pilot: u64,
    /// Remainder constant for the upper bound; None triggers the pilot.
    #[serde(default)]
    pub c_rem: Option<f64>,
    /// Sup-observable grid override.
    #[serde(default)]
    pub grid_per_dim: Option<usize>,
}

fn default_n_samples() -> u64 {
    100_000
}

fn default_root_seed() -> u64 {
    7_154_150_580_153_312_710
}

fn default_method() -> MethodChoice {
    MethodChoice::Auto
}

fn default_n_pilot() -> u64 {
    2048
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            n_samples: default_n_samples(),
            root_seed: default_root_seed(),
            method: MethodChoice::Auto,
            theta: None,
            n_pilot: default_n_pilot(),
            c_rem: None,
            grid_per_dim: None,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Artifact directory; the CLI `--out` flag overrides it.
    #[serde(default)]
    pub dir: Option<String>,
    /// Also dump initial/terminal states in the documented binary layout.
    #[serde(default)]
    pub write_states: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub regime: RegimeConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn section_error(section: &str, e: serde_json::Error) -> Error {
    let msg = e.to_string();
    // serde_json spells field complaints as ... field `name` ...; lift the
    // name into a section-qualified path.
    match msg.split('`').nth(1) {
        Some(field) => Error::Config(format!("{section}.{field}: {msg}")),
        None => Error::Config(format!("{section}: {msg}")),
    }
}

const SECTIONS: [&str; 5] = ["model", "regime", "solver", "sampling", "output"];

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<RunConfig> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Config("config root must be a JSON object".into()))?;
        for key in obj.keys() {
            if !SECTIONS.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "{key}: unknown section (expected one of {SECTIONS:?})"
                )));
            }
        }
        fn section<T: for<'de> Deserialize<'de> + Default>(
            obj: &serde_json::Map<String, serde_json::Value>,
            name: &str,
        ) -> Result<T> {
            match obj.get(name) {
                None => Ok(T::default()),
                Some(v) => serde_json::from_value(v.clone()).map_err(|e| section_error(name, e)),
            }
        }
        Ok(RunConfig {
            model: section(obj, "model")?,
            regime: section(obj, "regime")?,
            solver: section(obj, "solver")?,
            sampling: section(obj, "sampling")?,
            output: section(obj, "output")?,
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_json_str(&text)
    }

    /// Builds the live model objects and checks cross-field consistency.
    pub fn resolve(&self) -> Result<Resolved> {
        let m = &self.model;
        let nu: usize = m.omegas.iter().map(|b| b.len()).sum();
        if let Some(d) = m.d {
            if d != m.omegas.len() {
                return Err(Error::Config(format!(
                    "model.d: declared {d} spatial directions but omegas has {}",
                    m.omegas.len()
                )));
            }
        }
        if let Some(blocks) = &m.nu_blocks {
            let actual: Vec<usize> = m.omegas.iter().map(|b| b.len()).collect();
            if *blocks != actual {
                return Err(Error::Config(format!(
                    "model.nu_blocks: declared {blocks:?} but omegas has shape {actual:?}"
                )));
            }
        }
        if m.rho.len() != nu {
            return Err(Error::Config(format!(
                "model.rho: length {} does not match nu = {nu}",
                m.rho.len()
            )));
        }
        if m.kappa.len() != nu {
            return Err(Error::Config(format!(
                "model.kappa: length {} does not match nu = {nu}",
                m.kappa.len()
            )));
        }
        let omega = FrequencyMatrix::new(m.omegas.clone())?;
        let profile = DecayProfile::new(m.rho.clone(), m.kappa.clone(), m.amplitude)?;

        let r = &self.regime;
        match (&r.epsilon, &r.eps_list) {
            (None, None) => {
                return Err(Error::Config(
                    "regime.epsilon: provide either epsilon or eps_list".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "regime.epsilon: epsilon and eps_list are mutually exclusive".into(),
                ))
            }
            _ => {}
        }
        if let Some(list) = &r.eps_list {
            if list.is_empty() {
                return Err(Error::Config("regime.eps_list: must be non-empty".into()));
            }
            if list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
                return Err(Error::Config(
                    "regime.eps_list: every epsilon must lie in (0,1)".into(),
                ));
            }
            if list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::Config(
                    "regime.eps_list: must be strictly decreasing".into(),
                ));
            }
        }
        if let Some(e) = r.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Config(format!(
                    "regime.epsilon: must lie in (0,1), got {e}"
                )));
            }
        }
        if !(0.0..1.0).contains(&r.eta) {
            return Err(Error::Config(format!(
                "regime.eta: must lie in [0,1), got {}",
                r.eta
            )));
        }
        let mu = r.mu.unwrap_or(0.5 / nu as f64);
        if !(mu > 0.0 && mu < 1.0 / nu as f64) {
            return Err(Error::Config(format!(
                "regime.mu: must lie in (0, 1/nu) = (0, {}), got {mu}",
                1.0 / nu as f64
            )));
        }
        if !(r.z0 >= 0.0) || !r.z0.is_finite() {
            return Err(Error::Config(format!(
                "regime.z0: must be a finite nonnegative number, got {}",
                r.z0
            )));
        }
        if let Some(f) = r.t_fraction {
            if !(f >= 0.0) || !f.is_finite() {
                return Err(Error::Config(format!(
                    "regime.t_fraction: must be finite and nonnegative, got {f}"
                )));
            }
        }
        if let Some(n) = r.n_trunc {
            if n < 0 {
                return Err(Error::Config(format!(
                    "regime.n_trunc: must be nonnegative, got {n}"
                )));
            }
        }
        if self.sampling.n_samples == 0 {
            return Err(Error::Config("sampling.n_samples: must be positive".into()));
        }
        if self.solver.quad_nodes < 2 {
            return Err(Error::Config("solver.quad_nodes: need at least 2".into()));
        }
        if self.solver.k_max == 0 {
            return Err(Error::Config("solver.k_max: need at least 1".into()));
        }
        Ok(Resolved { profile, omega, nu, mu, config: self.clone() })
    }
}

/// A validated configuration with the live model objects attached.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub profile: DecayProfile,
    pub omega: FrequencyMatrix,
    pub nu: usize,
    /// μ with the 1/(2ν) default applied.
    pub mu: f64,
    pub config: RunConfig,
}

impl Resolved {
    /// The single ε of this run; errors if the config carries a grid instead.
    pub fn single_epsilon(&self) -> Result<f64> {
        self.config.regime.epsilon.ok_or_else(|| {
            Error::Config("regime.epsilon: this suite needs a single epsilon, not eps_list".into())
        })
    }

    /// ε grid: the explicit list, or the single ε as a one-element grid.
    pub fn epsilon_grid(&self) -> Vec<f64> {
        match (&self.config.regime.eps_list, self.config.regime.epsilon) {
            (Some(list), _) => list.clone(),
            (None, Some(e)) => vec![e],
            (None, None) => unreachable!("resolve() enforces one of the two"),
        }
    }

    /// Box radius at ε: the explicit override, or N(ε).
    pub fn box_radius(&self, epsilon: f64) -> Result<i64> {
        match self.config.regime.n_trunc {
            Some(n) => Ok(n),
            None => crate::lattice::truncation_parameter(epsilon, self.mu, self.nu),
        }
    }
}
