//! Run configuration: TOML sections for the model, innovation law, payoff
//! and run parameters, resolved into core objects.

use crate::expr::Expr;
use dynkin::model::{
    law_preset, martingale_drift, model_preset, payoff_preset, BasePayoff, DiffusionModel,
    InnovationLaw, MatrixFn, PayoffPair, Penalty, VectorFn,
};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

#[derive(Debug)]
pub enum ConfigError {
    Toml(toml::de::Error),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Toml(e) => write!(f, "config parse error: {e}"),
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(m: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(m.into())
}

/// `[model]`: a preset id, or inline coefficients with an explicit bound
/// constant and initial state.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Scalar expression (d = 1) for the diffusion coefficient.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    /// Row-major matrix of expressions (d >= 2).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_matrix: Option<Vec<Vec<String>>>,
    /// Drift expression, expression vector, or the literal "martingale".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_vector: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lip_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

/// `[law]`: a preset id, a `kind`/`dim` pair, or explicit atoms.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LawSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// "rademacher" or "gaussian".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomSpec>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AtomSpec {
    pub vector: Vec<f64>,
    pub prob: f64,
}

/// `[payoff]`: catalog id plus parameters.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PayoffSection {
    pub preset: String,
    #[serde(default = "default_strike")]
    pub strike: f64,
    #[serde(default)]
    pub penalty: f64,
    /// "linear" (default), "constant" or "none".
    #[serde(default = "default_penalty_shape")]
    pub penalty_shape: String,
    #[serde(default)]
    pub component: usize,
}

fn default_strike() -> f64 {
    1.0
}

fn default_penalty_shape() -> String {
    "linear".to_string()
}

impl Default for PayoffSection {
    fn default() -> Self {
        PayoffSection {
            preset: "put".to_string(),
            strike: default_strike(),
            penalty: 0.0,
            penalty_shape: default_penalty_shape(),
            component: 0,
        }
    }
}

/// `[run]`: grids, replication counts, caps and study selection.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_node_cap")]
    pub node_cap: u64,
    #[serde(default = "default_refine")]
    pub refine: usize,
    #[serde(default = "default_true")]
    pub recombine: bool,
    #[serde(default)]
    pub oracle: bool,
    #[serde(default = "default_oracle_budget")]
    pub oracle_budget: u64,
    #[serde(default = "default_probe_count")]
    pub probe_count: usize,
    #[serde(default = "default_probe_radius")]
    pub probe_radius: f64,
    #[serde(default = "default_m_param")]
    pub m_param: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_w_samples")]
    pub w_samples: usize,
    #[serde(default = "default_studies")]
    pub studies: Vec<String>,
    #[serde(default)]
    pub dump_nodes: bool,
    /// Sample paths drawn for payoff validation.
    #[serde(default = "default_payoff_paths")]
    pub payoff_paths: usize,
}

fn default_reps() -> usize {
    200
}
fn default_seed() -> u64 {
    1
}
fn default_node_cap() -> u64 {
    1_000_000
}
fn default_refine() -> usize {
    64
}
fn default_true() -> bool {
    true
}
fn default_oracle_budget() -> u64 {
    2_000
}
fn default_probe_count() -> usize {
    1_000
}
fn default_probe_radius() -> f64 {
    5.0
}
fn default_m_param() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.1
}
fn default_w_samples() -> usize {
    500
}
fn default_payoff_paths() -> usize {
    4
}
fn default_studies() -> Vec<String> {
    vec![
        "strong-error".into(),
        "coarse-error".into(),
        "cf".into(),
        "exp-moment".into(),
        "value-convergence".into(),
    ]
}

impl Default for RunSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults are complete")
    }
}

/// Whole run configuration.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub law: LawSection,
    #[serde(default)]
    pub payoff: PayoffSection,
    #[serde(default)]
    pub run: RunSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        toml::from_str(text).map_err(ConfigError::Toml)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve_model(&self) -> Result<DiffusionModel, ConfigError> {
        let m = &self.model;
        if let Some(preset) = &m.preset {
            return model_preset(preset).map_err(|e| invalid(format!("model.preset: {e}")));
        }
        let x0 = m
            .x0
            .clone()
            .ok_or_else(|| invalid("model.x0 is required for inline models"))?;
        let dim = m.dim.unwrap_or(x0.len());
        if dim == 0 || x0.len() != dim {
            return Err(invalid(format!(
                "model.x0 has {} components but dim = {dim}",
                x0.len()
            )));
        }
        let lip_bound = m
            .lip_bound
            .ok_or_else(|| invalid("model.lip_bound is required for inline models"))?;

        let sigma: MatrixFn = match (&m.sigma, &m.sigma_matrix) {
            (Some(s), None) => {
                if dim != 1 {
                    return Err(invalid("model.sigma (scalar) needs dim = 1; use sigma_matrix"));
                }
                let e = Expr::parse(s, 1).map_err(|e| invalid(format!("model.sigma: {e}")))?;
                Arc::new(move |x, out| out[0] = e.eval(x))
            }
            (None, Some(rows)) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(invalid(format!("model.sigma_matrix must be {dim}x{dim}")));
                }
                let mut parsed = Vec::with_capacity(dim * dim);
                for row in rows {
                    for src in row {
                        parsed.push(
                            Expr::parse(src, dim)
                                .map_err(|e| invalid(format!("model.sigma_matrix: {e}")))?,
                        );
                    }
                }
                Arc::new(move |x, out| {
                    for (o, e) in out.iter_mut().zip(&parsed) {
                        *o = e.eval(x);
                    }
                })
            }
            _ => {
                return Err(invalid(
                    "inline models need exactly one of model.sigma or model.sigma_matrix",
                ))
            }
        };

        let drift: VectorFn = match (&m.drift, &m.drift_vector) {
            (Some(d), None) if d == "martingale" => martingale_drift(sigma.clone(), dim),
            (Some(d), None) => {
                if dim != 1 {
                    return Err(invalid("model.drift (scalar) needs dim = 1; use drift_vector"));
                }
                let e = Expr::parse(d, 1).map_err(|e| invalid(format!("model.drift: {e}")))?;
                Arc::new(move |x, out| out[0] = e.eval(x))
            }
            (None, Some(rows)) => {
                if rows.len() != dim {
                    return Err(invalid(format!("model.drift_vector must have {dim} entries")));
                }
                let mut parsed = Vec::with_capacity(dim);
                for src in rows {
                    parsed.push(
                        Expr::parse(src, dim)
                            .map_err(|e| invalid(format!("model.drift_vector: {e}")))?,
                    );
                }
                Arc::new(move |x, out| {
                    for (o, e) in out.iter_mut().zip(&parsed) {
                        *o = e.eval(x);
                    }
                })
            }
            (None, None) => Arc::new(|_, out| out.fill(0.0)),
            _ => {
                return Err(invalid(
                    "inline models take at most one of model.drift or model.drift_vector",
                ))
            }
        };

        DiffusionModel::new(dim, sigma, drift, lip_bound, x0)
            .map(|m| m.with_id("inline"))
            .map_err(|e| invalid(format!("model: {e}")))
    }

    pub fn resolve_law(&self) -> Result<InnovationLaw, ConfigError> {
        let l = &self.law;
        if let Some(preset) = &l.preset {
            return law_preset(preset).map_err(|e| invalid(format!("law.preset: {e}")));
        }
        if let Some(atoms) = &l.atoms {
            let dim = l
                .dim
                .or_else(|| atoms.first().map(|a| a.vector.len()))
                .ok_or_else(|| invalid("law.dim is required with law.atoms"))?;
            let pairs = atoms.iter().map(|a| (a.vector.clone(), a.prob)).collect();
            return InnovationLaw::finite_support(dim, pairs)
                .map(|law| law.with_id("inline"))
                .map_err(|e| invalid(format!("law.atoms: {e}")));
        }
        let dim = l.dim.unwrap_or(1);
        match l.kind.as_deref() {
            Some("rademacher") => {
                InnovationLaw::rademacher(dim).map_err(|e| invalid(format!("law: {e}")))
            }
            Some("gaussian") => {
                InnovationLaw::gaussian(dim).map_err(|e| invalid(format!("law: {e}")))
            }
            Some(other) => Err(invalid(format!("law.kind {other:?} is not recognized"))),
            None => Err(invalid("law needs a preset, kind, or atoms")),
        }
    }

    pub fn resolve_payoff(&self) -> Result<PayoffPair, ConfigError> {
        let p = &self.payoff;
        let linear = match p.penalty_shape.as_str() {
            "linear" => true,
            "constant" => false,
            "none" => {
                if p.penalty != 0.0 {
                    return Err(invalid("payoff.penalty_shape = \"none\" needs penalty = 0"));
                }
                true
            }
            other => {
                return Err(invalid(format!(
                    "payoff.penalty_shape {other:?} (use linear|constant|none)"
                )))
            }
        };
        if p.component != 0 {
            // Presets expose component 0; rebuild with an explicit component.
            let base = match p.preset.as_str() {
                "put" => BasePayoff::Put { strike: p.strike, component: p.component },
                "call" => BasePayoff::Call { strike: p.strike, component: p.component },
                "lookback-call" => {
                    BasePayoff::LookbackCall { strike: p.strike, component: p.component }
                }
                "average-put" => {
                    BasePayoff::AveragePut { strike: p.strike, component: p.component }
                }
                other => return Err(invalid(format!("payoff.preset {other:?} with component"))),
            };
            let pen = if p.penalty == 0.0 {
                Penalty::None
            } else if linear {
                Penalty::LinearDecay(p.penalty)
            } else {
                Penalty::Constant(p.penalty)
            };
            return Ok(PayoffPair::game(base, pen).with_id(p.preset.clone()));
        }
        payoff_preset(&p.preset, p.strike, p.penalty, linear)
            .map_err(|e| invalid(format!("payoff: {e}")))
    }

    pub fn n_list(&self) -> Result<Vec<usize>, ConfigError> {
        match (&self.run.n_list, self.run.n) {
            (Some(list), _) if !list.is_empty() => Ok(list.clone()),
            (_, Some(n)) => Ok(vec![n]),
            _ => Err(invalid("run.n or a nonempty run.n_list is required")),
        }
    }

    pub fn n(&self) -> Result<usize, ConfigError> {
        self.run
            .n
            .or_else(|| self.run.n_list.as_ref().and_then(|l| l.first().copied()))
            .ok_or_else(|| invalid("run.n is required"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[model]
preset = "gbm-1d"

[law]
preset = "rademacher-1d"

[payoff]
preset = "put"
strike = 1.0
penalty = 0.1

[run]
n = 10
seed = 42
"#;

    #[test]
    fn parse_and_resolve_presets() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.run.seed, 42);
        let model = cfg.resolve_model().unwrap();
        assert_eq!(model.id(), "gbm-1d");
        let law = cfg.resolve_law().unwrap();
        assert_eq!(law.id(), "rademacher-1d");
        cfg.resolve_payoff().unwrap();
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        let text = cfg.to_toml();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn inline_model_with_expressions() {
        let cfg = RunConfig::parse(
            r#"
[model]
sigma = "0.4 + 0.2*tanh(x)"
drift = "martingale"
lip_bound = 1.0
x0 = [0.0]

[law]
kind = "gaussian"

[payoff]
preset = "call"

[run]
n = 4
"#,
        )
        .unwrap();
        let model = cfg.resolve_model().unwrap();
        let s = model.sigma_at(&[0.0])[0];
        assert!((s - 0.4).abs() < 1e-15);
        let b = model.drift_at(&[0.0])[0];
        assert!((b + 0.5 * 0.4 * 0.4).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let err = RunConfig::parse("[model]\nbogus_key = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus_key"), "{msg}");
    }

    #[test]
    fn inline_law_atoms() {
        let cfg = RunConfig::parse(
            r#"
[law]
atoms = [{ vector = [1.0], prob = 0.5 }, { vector = [-1.0], prob = 0.5 }]
"#,
        )
        .unwrap();
        let law = cfg.resolve_law().unwrap();
        assert_eq!(law.n_atoms(), 2);
    }

    #[test]
    fn missing_pieces_are_invalid() {
        let cfg = RunConfig::parse("[model]\nx0 = [0.0]\n").unwrap();
        assert!(cfg.resolve_model().is_err());
        let cfg = RunConfig::parse("").unwrap();
        assert!(cfg.resolve_law().is_err());
        assert!(cfg.n_list().is_err());
    }
}
