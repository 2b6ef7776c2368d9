use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FluxError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Verify,
    CombStudy,
    ImmersionCounterexample,
    ConvexProbe,
    OffsetStudy,
    MeasureLimit,
    OdeAudit,
    DivergenceCheck,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Self::Verify,
        Self::CombStudy,
        Self::ImmersionCounterexample,
        Self::ConvexProbe,
        Self::OffsetStudy,
        Self::MeasureLimit,
        Self::OdeAudit,
        Self::DivergenceCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Verify => "verify",
            Self::CombStudy => "comb-study",
            Self::ImmersionCounterexample => "immersion-counterexample",
            Self::ConvexProbe => "convex-probe",
            Self::OffsetStudy => "offset-study",
            Self::MeasureLimit => "measure-limit",
            Self::OdeAudit => "ode-audit",
            Self::DivergenceCheck => "divergence-check",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = FluxError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| FluxError::ConfigInvalid(format!("unknown scenario `{s}`")))
    }
}

/// A zoo shape with its flat parameter list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub shape: String,
    #[serde(default)]
    pub params: Vec<f64>,
    /// Half-width of the cube that bounds unbounded shapes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSpec {
    #[serde(default = "default_ode_tolerance")]
    pub tolerance: f64,
    /// Random disks tested against the closed orbit.
    #[serde(default = "default_random_disks")]
    pub random_disks: usize,
    #[serde(default = "default_x0")]
    pub x0: [f64; 2],
    #[serde(default = "default_probe_center")]
    pub probe_center: [f64; 2],
    #[serde(default = "default_probe_radius")]
    pub probe_radius: f64,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<f64>,
}

fn default_ode_tolerance() -> f64 {
    1e-10
}
fn default_random_disks() -> usize {
    100
}
fn default_x0() -> [f64; 2] {
    [0.5, 0.0]
}
fn default_probe_center() -> [f64; 2] {
    [1.0, 0.0]
}
fn default_probe_radius() -> f64 {
    0.1
}
fn default_horizons() -> Vec<f64> {
    vec![10.0, 50.0, 100.0]
}

impl Default for OdeSpec {
    fn default() -> Self {
        Self {
            tolerance: default_ode_tolerance(),
            random_disks: default_random_disks(),
            x0: default_x0(),
            probe_center: default_probe_center(),
            probe_radius: default_probe_radius(),
            horizons: default_horizons(),
        }
    }
}

fn default_dimension() -> usize {
    2
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

/// One experiment. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<ShapeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<ShapeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    /// Mesh and grid pitch; each scenario has its own default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    /// Randomized configurations added to `verify`.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub random_configs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb_teeth: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winding: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ode: Option<OdeSpec>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub allow_non_simple: bool,
}

impl ExperimentConfig {
    /// A config with every optional key absent.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            dimension: 2,
            d1: None,
            d2: None,
            field: None,
            resolution: None,
            seed: 0,
            output_dir: None,
            random_configs: 0,
            oracle_samples: None,
            comb_teeth: None,
            winding: None,
            perturbation: None,
            etas: None,
            ball_grid: None,
            ball_radius: None,
            ode: None,
            allow_non_simple: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| FluxError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FluxError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FluxError::ConfigInvalid(m));
        if !(2..=3).contains(&self.dimension) {
            return bad(format!("dimension must be 2 or 3, got {}", self.dimension));
        }
        if let Some(h) = self.resolution {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("resolution must be positive, got {h}"));
            }
        }
        if let Some(e) = &self.etas {
            if e.is_empty() || e.windows(2).any(|w| w[1] >= w[0]) || e.iter().any(|x| *x < 0.0) {
                return bad("etas must be non-negative and strictly decreasing".into());
            }
        }
        if let Some(teeth) = &self.comb_teeth {
            if teeth.is_empty() || teeth.iter().any(|n| *n < 3) {
                return bad("comb_teeth entries must be at least 3".into());
            }
        }
        if let Some(r) = self.ball_radius {
            if !(r > 0.0) {
                return bad(format!("ball_radius must be positive, got {r}"));
            }
        }
        if self.scenario == Scenario::Verify && self.random_configs == 0 && (self.d1.is_none() || self.d2.is_none()) {
            return bad("verify needs d1 and d2, or random_configs > 0".into());
        }
        if matches!(self.scenario, Scenario::OdeAudit | Scenario::ImmersionCounterexample) && self.dimension != 2 {
            return bad(format!("{} is planar", self.scenario));
        }
        Ok(())
    }

    /// FNV-1a of the compact JSON encoding.
    pub fn hash_hex(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::new(Scenario::OdeAudit);
        cfg.ode = Some(OdeSpec::default());
        cfg.seed = 9;
        cfg.etas = Some(vec![0.1, 0.05]);
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash_hex(), cfg.hash_hex());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_json(r#"{"scenario": "comb-study", "colour": 1}"#).unwrap_err();
        assert!(matches!(err, FluxError::ConfigInvalid(_)));
    }

    #[test]
    fn verify_needs_geometry() {
        assert!(ExperimentConfig::from_json(r#"{"scenario": "verify"}"#).is_err());
    }

    #[test]
    fn scenario_names_parse() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
    }
}
