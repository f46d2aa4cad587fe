use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::StepControl;
use crate::spectral::{BackgroundState, BumpProfile, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SingleChain,
    Sweep,
    Blowup,
    Stability,
    OracleCheck,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::SingleChain,
        Scenario::Sweep,
        Scenario::Blowup,
        Scenario::Stability,
        Scenario::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SingleChain => "single_chain",
            Scenario::Sweep => "sweep",
            Scenario::Blowup => "blowup",
            Scenario::Stability => "stability",
            Scenario::OracleCheck => "oracle_check",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s.replace('-', "_"))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub delta: f64,
    pub sigma: f64,
    pub epsilon: f64,
    #[serde(default = "coulomb")]
    pub s_exponent: f64,
}

fn coulomb() -> f64 {
    3.0
}

impl Physics {
    pub fn background(&self) -> Result<BackgroundState<f64>> {
        BackgroundState::new(self.epsilon, BumpProfile::new(self.delta, self.sigma)?)
    }

    pub fn kernel(&self) -> Result<KernelSpec<f64>> {
        KernelSpec::new(self.s_exponent)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta", self.delta),
            ("sigma", self.sigma),
            ("epsilon", self.epsilon),
            ("s_exponent", self.s_exponent),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("physics.{name} = {v} must be positive")));
            }
        }
        if self.delta >= 0.1 {
            return Err(Error::InvalidConfig(format!("physics.delta = {} must be < 0.1", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Auto {
    Auto,
}

/// `"auto"`, a chain length, or a list of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum K0Spec {
    Auto(Auto),
    Fixed(usize),
    List(Vec<usize>),
}

impl Default for K0Spec {
    fn default() -> Self {
        K0Spec::Auto(Auto::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Eta0Spec {
    Single(f64),
    Ladder(Vec<f64>),
}

impl Eta0Spec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Eta0Spec::Single(x) => vec![*x],
            Eta0Spec::Ladder(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    #[serde(default)]
    pub k0: K0Spec,
    pub eta0: Eta0Spec,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            k0: K0Spec::default(),
            eta0: Eta0Spec::Single(1000.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Grid spacing is `delta / spacing_factor`.
    pub spacing_factor: f64,
    pub step: StepControl,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            spacing_factor: 8.0,
            step: StepControl::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupSpec {
    pub chains: usize,
    pub eta_base: f64,
    pub ratio: f64,
    /// Defaults to `1/j`.
    pub alpha: Option<Vec<f64>>,
    pub sobolev_s: f64,
    pub sobolev_eps: f64,
    /// Required factor between consecutive plateaus and force sups.
    pub min_growth: f64,
}

impl Default for BlowupSpec {
    fn default() -> Self {
        Self {
            chains: 3,
            eta_base: 1000.0,
            ratio: 10.0,
            alpha: None,
            sobolev_s: 0.0,
            sobolev_eps: 0.5,
            min_growth: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySpec {
    /// Packets at scale `S` sit on integer frequencies in `[S, 2S)`.
    pub scales: Vec<f64>,
    pub packets: usize,
    pub c_in: f64,
    pub c_out: f64,
    pub max_k0: usize,
    pub amplitude: f64,
    /// Ratios above this count as unbounded.
    pub bound: f64,
}

impl Default for StabilitySpec {
    fn default() -> Self {
        Self {
            scales: vec![1e3, 1e4, 1e5],
            packets: 5,
            c_in: 2.0,
            c_out: 1.0,
            max_k0: 8,
            amplitude: 1.0,
            bound: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: Option<Scenario>,
    pub physics: Physics,
    #[serde(default)]
    pub chain: ChainSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub blowup: BlowupSpec,
    #[serde(default)]
    pub stability: StabilitySpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        if !(self.numerics.spacing_factor >= 8.0 && self.numerics.spacing_factor.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "numerics.spacing_factor = {} must be >= 8",
                self.numerics.spacing_factor
            )));
        }
        self.numerics.step.validate()?;
        if self.chain.eta0.values().iter().any(|x| !x.is_finite() || *x == 0.0) {
            return Err(Error::InvalidConfig("chain.eta0 entries must be finite and nonzero".into()));
        }
        let b = &self.blowup;
        if b.chains == 0 || !(b.ratio >= 2.0) || !(b.eta_base > 0.0) || !(b.sobolev_eps > 0.0) || b.sobolev_s < 0.0 {
            return Err(Error::InvalidConfig(
                "blowup needs chains >= 1, ratio >= 2, eta_base > 0, sobolev_s >= 0, sobolev_eps > 0".into(),
            ));
        }
        if let Some(alpha) = &b.alpha {
            if alpha.len() != b.chains || alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
                return Err(Error::InvalidConfig("blowup.alpha needs one nonnegative weight per chain".into()));
            }
        }
        let s = &self.stability;
        if !(s.c_in > s.c_out && s.c_out >= 0.0) || s.max_k0 == 0 || s.scales.iter().any(|x| !(*x >= 100.0)) {
            return Err(Error::InvalidConfig(
                "stability needs c_in > c_out >= 0, max_k0 >= 1 and scales >= 100".into(),
            ));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.physics.delta / self.numerics.spacing_factor
    }
}
