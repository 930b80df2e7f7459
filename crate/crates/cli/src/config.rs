//! Run configurations: JSON files, built-in presets, strict parsing.
//!
//! A run's JSON is the preset (if any) with the config file merged over it
//! key by key. Unknown keys are rejected and every schema error names the
//! offending value by its JSON pointer.

use std::path::{Path, PathBuf};

use mtd_core::experiments::{crime_poisson, precip_lomax, FitPreset, Scenario};
use mtd_core::mcmc::{Design, FitConfig};
use mtd_core::mtd::{AcfInit, MtdModel};
use mtd_core::priors::{GaussianPrior, LomaxPrior, ParamPrior, PoissonPrior, WeightPrior};
use mtd_core::transitions::{Family, FamilyTag, Transition};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

/// Weights and per-lag components. A single component is shared by all lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub weights: Vec<f64>,
    pub components: Vec<Family>,
}

impl ModelConfig {
    pub fn from_model(m: &MtdModel) -> Self {
        ModelConfig { weights: m.weights().to_vec(), components: m.components().iter().map(Transition::family).collect() }
    }

    pub fn build(&self) -> CliResult<MtdModel> {
        let comps = self.components.iter().map(|f| Transition::new(*f)).collect::<Result<Vec<_>, _>>()?;
        let m = match comps.as_slice() {
            [one] if self.weights.len() > 1 => MtdModel::shared(self.weights.clone(), one.clone()),
            _ => MtdModel::new(self.weights.clone(), comps),
        };
        Ok(m?)
    }
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: ModelConfig,
    pub n: usize,
    #[serde(default = "one")]
    pub seed: u64,
    /// First `L` values in time order; absent means a stationary start.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
}

fn default_probs() -> Vec<f64> {
    vec![0.025, 0.5, 0.975]
}

fn default_weight_prior() -> WeightPrior {
    WeightPrior::dirichlet_default()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRunConfig {
    #[serde(default)]
    pub data: Option<PathBuf>,
    pub family: FamilyTag,
    #[serde(rename = "L")]
    pub order: usize,
    #[serde(default = "default_weight_prior")]
    pub weight_prior: WeightPrior,
    #[serde(default)]
    pub param_prior: Option<Value>,
    #[serde(default)]
    pub covariates: Option<Design>,
    #[serde(default)]
    pub mcmc: FitConfig,
    /// Quantile levels reported in the summary.
    #[serde(default = "default_probs")]
    pub probs: Vec<f64>,
}

impl FitRunConfig {
    /// The family's parameter prior, defaults filled in.
    pub fn param_prior(&self) -> CliResult<ParamPrior> {
        let raw = self.param_prior.clone().unwrap_or_else(|| json!({}));
        let p = match self.family {
            FamilyTag::Gaussian => ParamPrior::Gaussian(strict::<GaussianPrior>(raw, "/param_prior")?),
            FamilyTag::Poisson => ParamPrior::Poisson(strict::<PoissonPrior>(raw, "/param_prior")?),
            FamilyTag::Lomax => ParamPrior::Lomax(strict::<LomaxPrior>(raw, "/param_prior")?),
            other => {
                return Err(CliError::config(format!(
                    "{other} is a simulation-only family; fitting supports gaussian, poisson and lomax"
                )))
            }
        };
        p.validate()?;
        Ok(p)
    }
}

fn default_levels() -> Vec<f64> {
    vec![0.5, 0.8, 0.95]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    /// Output directory of a previous `fit`.
    pub fit_dir: PathBuf,
    /// Overrides the series recorded by the fit.
    #[serde(default)]
    pub data: Option<PathBuf>,
    pub k: usize,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "one")]
    pub seed: u64,
    /// Points at which to tabulate the one-step predictive density.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualsConfig {
    /// Residuals for every draw of a previous `fit`.
    #[serde(default)]
    pub fit_dir: Option<PathBuf>,
    /// Residuals under one known model.
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default = "one")]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AcfInitConfig {
    Exact,
    MonteCarlo { len: usize, burn: usize, seed: u64 },
}

impl AcfInitConfig {
    pub fn to_core(self) -> AcfInit {
        match self {
            AcfInitConfig::Exact => AcfInit::Exact,
            AcfInitConfig::MonteCarlo { len, burn, seed } => AcfInit::MonteCarlo { len, burn, seed },
        }
    }
}

fn default_horizon() -> usize {
    50
}

fn exact() -> AcfInitConfig {
    AcfInitConfig::Exact
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcfConfig {
    pub model: ModelConfig,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "exact")]
    pub init: AcfInitConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub scenario: u8,
    #[serde(rename = "L")]
    pub order: usize,
    /// `dir`, `sb` or `cdp`.
    pub prior: String,
}

fn default_n() -> usize {
    2000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "one")]
    pub seed: u64,
    /// Run shape of every cell; the cell seeds are derived from `seed`.
    pub mcmc: FitConfig,
    /// Subset of the grid; absent means all 18 cells.
    #[serde(default)]
    pub cells: Option<Vec<CellConfig>>,
}

/// Deserialize `v`, reporting failures with the JSON pointer of the
/// offending value below `prefix`.
pub fn strict<T: DeserializeOwned>(v: Value, prefix: &str) -> CliResult<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let mut ptr = String::from(prefix);
        for seg in e.path().iter() {
            use serde_path_to_error::Segment;
            match seg {
                Segment::Seq { index } => ptr.push_str(&format!("/{index}")),
                Segment::Map { key } => ptr.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
                Segment::Enum { variant } => ptr.push_str(&format!("/{variant}")),
                Segment::Unknown => ptr.push_str("/?"),
            }
        }
        let at = if ptr.is_empty() { "/".to_string() } else { ptr };
        CliError::config(format!("at {at}: {}", e.inner()))
    })
}

/// Recursively overlay `top` on `base`; objects merge, anything else replaces.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let v: Value =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{} is not valid JSON: {e}", path.display())))?;
    if !v.is_object() {
        return Err(CliError::config(format!("{} must hold a JSON object", path.display())));
    }
    Ok(v)
}

/// The run JSON for `command`: preset, then config file on top.
pub fn assemble(command: &str, preset: Option<&str>, config: Option<&Path>) -> CliResult<Value> {
    let mut v = match preset {
        Some(name) => preset_json(command, name)?,
        None => json!({}),
    };
    if let Some(p) = config {
        merge(&mut v, read_json(p)?);
    }
    Ok(v)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn fit_preset(p: FitPreset, family: &str) -> Value {
    let pp = match &p.param_prior {
        ParamPrior::Gaussian(g) => to_value(g),
        ParamPrior::Poisson(g) => to_value(g),
        ParamPrior::Lomax(g) => to_value(g),
    };
    let mut v = json!({
        "family": family,
        "L": p.order,
        "weight_prior": to_value(&p.weight_prior),
        "param_prior": pp,
        "mcmc": to_value(&p.config),
    });
    if let Some(d) = &p.design {
        v["covariates"] = to_value(d);
    }
    v
}

pub const PRESETS: [(&str, &str); 6] = [
    ("sim-scenario1", "simulate, acf, residuals"),
    ("sim-scenario2", "simulate, acf, residuals"),
    ("crime-poisson", "fit"),
    ("crime-poisson-cdp", "fit"),
    ("precip-lomax", "fit"),
    ("precip-lomax-cdp", "fit"),
];

pub fn preset_json(command: &str, name: &str) -> CliResult<Value> {
    let scenario = match name {
        "sim-scenario1" => Some(Scenario::One),
        "sim-scenario2" => Some(Scenario::Two),
        _ => None,
    };
    let v = match (command, name, scenario) {
        ("simulate", _, Some(s)) => json!({ "model": to_value(&ModelConfig::from_model(&s.model())), "n": 2000 }),
        ("acf", _, Some(s)) => json!({ "model": to_value(&ModelConfig::from_model(&s.model())) }),
        ("residuals", _, Some(s)) => json!({ "model": to_value(&ModelConfig::from_model(&s.model())) }),
        ("fit", "crime-poisson", _) => fit_preset(crime_poisson(false), "poisson"),
        ("fit", "crime-poisson-cdp", _) => fit_preset(crime_poisson(true), "poisson"),
        ("fit", "precip-lomax", _) => fit_preset(precip_lomax(false), "lomax"),
        ("fit", "precip-lomax-cdp", _) => fit_preset(precip_lomax(true), "lomax"),
        _ => {
            let known: Vec<String> = PRESETS.iter().map(|(n, c)| format!("{n} ({c})")).collect();
            return Err(CliError::config(format!(
                "no preset '{name}' for {command}; available: {}",
                known.join(", ")
            )));
        }
    };
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_is_recursive() {
        let mut a = json!({"mcmc": {"iters": 10, "thin": 2}, "L": 5});
        merge(&mut a, json!({"mcmc": {"iters": 20}, "data": "x.csv"}));
        assert_eq!(a, json!({"mcmc": {"iters": 20, "thin": 2}, "L": 5, "data": "x.csv"}));
    }

    #[test]
    fn errors_carry_json_pointers() {
        let v = json!({"model": {"weights": [1.0], "components": [{"family": "gaussian", "mu": 0, "sigma2": 1, "rho": "x"}]}, "n": 3});
        let e = strict::<SimulateConfig>(v, "").unwrap_err();
        assert!(e.msg.contains("at /model/components/0:") && e.msg.contains("expected f64"), "{}", e.msg);
        let v = json!({"family": "gaussian", "L": 2, "mcmc": {"itres": 5}});
        let e = strict::<FitRunConfig>(v, "").unwrap_err();
        assert!(e.msg.contains("/mcmc/itres") && e.msg.contains("unknown field"), "{}", e.msg);
    }

    #[test]
    fn presets_parse_strictly() {
        let s: SimulateConfig = strict(preset_json("simulate", "sim-scenario1").unwrap(), "").unwrap();
        let m = s.model.build().unwrap();
        assert_eq!(m.order(), 5);
        assert_eq!(s.n, 2000);
        for name in ["crime-poisson", "crime-poisson-cdp", "precip-lomax", "precip-lomax-cdp"] {
            let f: FitRunConfig = strict(preset_json("fit", name).unwrap(), "").unwrap();
            f.param_prior().unwrap();
            assert_eq!(f.mcmc.iters, 85_000);
        }
        assert!(preset_json("fit", "sim-scenario1").is_err());
    }

    #[test]
    fn shared_component() {
        let run = ModelConfig { weights: vec![0.5, 0.5], components: vec![Family::Poisson { lambda: 1.0, gamma: 2.0 }] };
        let m = run.build().unwrap();
        assert_eq!(m.components().len(), 2);
    }
}
