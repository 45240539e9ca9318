//! Run configuration and model sources.

use std::path::Path;

use serde::{Deserialize, Serialize};

use sdde_core::complexext::{DiskGrid, ExtendConfig};
use sdde_core::delaycore::{HistoryFunction, ModelSpec};
use sdde_core::example41::{
    build_neural_model, default_history, NeuralModelParams, PipelineConfig,
};
use sdde_core::models::{toy_history, toy_scalar, ToyParams};

use crate::CliError;

/// Numeric settings shared by every subcommand. Unset model-dependent
/// fields fall back to the model's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub tol: f64,
    pub t0: f64,
    pub t_end: Option<f64>,
    /// Length of the constant example41 history before `t0`.
    pub history_span: f64,
    pub lift_time: Option<f64>,
    /// Truncation depth `J`.
    pub depth: usize,
    pub decay_m: u32,
    /// Rows of sampled CSV output.
    pub samples: usize,
    pub a2_density: usize,
    pub include_strip: bool,
    pub lambda0: Option<f64>,
    pub n_lambda: usize,
    pub rays: usize,
    pub subintervals: usize,
    pub order: usize,
    pub circle_fraction: f64,
    pub fp_tol: f64,
    pub max_iter: usize,
    pub n_taylor: usize,
    pub h_max: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = DiskGrid::default();
        Self {
            tol: 1e-10,
            t0: 0.0,
            t_end: None,
            history_span: 20.0,
            lift_time: None,
            depth: 32,
            decay_m: 1,
            samples: 401,
            a2_density: sdde_core::assumptions::DEFAULT_DENSITY,
            include_strip: true,
            lambda0: None,
            n_lambda: 6,
            rays: grid.rays,
            subintervals: grid.subintervals,
            order: grid.order,
            circle_fraction: grid.circle_fraction,
            fp_tol: 1e-10,
            max_iter: 200_000,
            n_taylor: 12,
            h_max: 1.0,
            seed: 0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "config field `{name}` must be positive, got {v}"
        )))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<(), CliError> {
    if v >= min {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "config field `{name}` must be at least {min}, got {v}"
        )))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        positive("tol", self.tol)?;
        positive("fp_tol", self.fp_tol)?;
        positive("history_span", self.history_span)?;
        positive("h_max", self.h_max)?;
        positive("circle_fraction", self.circle_fraction)?;
        if let Some(t) = self.t_end {
            if !(t > self.t0) {
                return Err(CliError::usage(format!(
                    "config field `t_end` must exceed t0 = {}, got {t}",
                    self.t0
                )));
            }
        }
        if let Some(l) = self.lambda0 {
            positive("lambda0", l)?;
        }
        at_least("depth", self.depth, 1)?;
        at_least("samples", self.samples, 2)?;
        at_least("a2_density", self.a2_density, 2)?;
        at_least("n_lambda", self.n_lambda, 1)?;
        at_least("rays", self.rays, 2)?;
        at_least("max_iter", self.max_iter, 1)?;
        at_least("n_taylor", self.n_taylor, 2)?;
        Ok(())
    }

    pub fn grid(&self) -> DiskGrid {
        DiskGrid {
            rays: self.rays,
            subintervals: self.subintervals,
            order: self.order,
            circle_fraction: self.circle_fraction,
        }
    }

    pub fn a2_options(&self) -> sdde_core::assumptions::A2Options {
        sdde_core::assumptions::A2Options {
            density: self.a2_density,
            include_strip: self.include_strip,
            seed: self.seed,
            ..Default::default()
        }
    }

    pub fn extend_config(&self, model: &Model) -> ExtendConfig {
        ExtendConfig {
            depth: self.depth,
            window: model.window(),
            lambda0: self.lambda0,
            n_lambda: self.n_lambda,
            grid: self.grid(),
            fp_tol: self.fp_tol,
            max_iter: self.max_iter,
            n_taylor: self.n_taylor,
            h_max: self.h_max,
            seed: self.seed,
            ..ExtendConfig::default()
        }
    }

    pub fn pipeline_config(&self, model: &Model) -> PipelineConfig {
        let base = PipelineConfig::default();
        PipelineConfig {
            t0: self.t0,
            history_span: self.history_span,
            t_end: self.t_end.unwrap_or(self.t0 + model.default_span()),
            tol: self.tol,
            lift_time: self
                .lift_time
                .unwrap_or(self.t0 + model.default_lift_offset()),
            depth: self.depth,
            decay_m: self.decay_m,
            a2: self.a2_options(),
            h_max: self.h_max,
            lambda0: self.lambda0,
            n_lambda: self.n_lambda,
            grid: self.grid(),
            fp_tol: self.fp_tol,
            max_iter: self.max_iter,
            n_taylor: self.n_taylor,
            seed: self.seed,
            ..base
        }
    }
}

/// Parameter file for a built-in model family: `model = "<name>"` plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", deny_unknown_fields)]
pub enum ModelFile {
    #[serde(rename = "example41")]
    Example41 {
        #[serde(default = "defaults::mu")]
        mu: f64,
        #[serde(default = "defaults::sigma")]
        sigma: f64,
        #[serde(default = "defaults::h0")]
        h0: f64,
        #[serde(default = "defaults::h1")]
        h1: f64,
        /// Defaults to `1 + 2|σ|/μ`.
        #[serde(default)]
        m_sigma: Option<f64>,
        #[serde(default = "defaults::epsilon_strip")]
        epsilon_strip: f64,
    },
    #[serde(rename = "toy-scalar")]
    ToyScalar {
        #[serde(default = "defaults::g0")]
        g0: f64,
        #[serde(default = "defaults::c")]
        c: f64,
        #[serde(default = "defaults::l")]
        l: f64,
        #[serde(default = "defaults::tau0")]
        tau0: f64,
    },
}

mod defaults {
    use super::*;

    pub fn mu() -> f64 {
        NeuralModelParams::default().mu
    }
    pub fn sigma() -> f64 {
        NeuralModelParams::default().sigma
    }
    pub fn h0() -> f64 {
        NeuralModelParams::default().h0
    }
    pub fn h1() -> f64 {
        NeuralModelParams::default().h1
    }
    pub fn epsilon_strip() -> f64 {
        NeuralModelParams::default().epsilon_strip
    }
    pub fn g0() -> f64 {
        ToyParams::default().g0
    }
    pub fn c() -> f64 {
        ToyParams::default().c
    }
    pub fn l() -> f64 {
        ToyParams::default().l
    }
    pub fn tau0() -> f64 {
        1.0
    }
}

/// A resolved model with the parameters echoed into every artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "model")]
pub enum Model {
    #[serde(rename = "example41")]
    Example41(NeuralModelParams),
    #[serde(rename = "toy-scalar")]
    ToyScalar { g0: f64, c: f64, l: f64, tau0: f64 },
}

impl From<ModelFile> for Model {
    fn from(f: ModelFile) -> Self {
        match f {
            ModelFile::Example41 {
                mu,
                sigma,
                h0,
                h1,
                m_sigma,
                epsilon_strip,
            } => {
                let mut p = NeuralModelParams::new(mu, sigma, h0, h1);
                if let Some(m) = m_sigma {
                    p.m_sigma = m;
                }
                p.epsilon_strip = epsilon_strip;
                Model::Example41(p)
            }
            ModelFile::ToyScalar { g0, c, l, tau0 } => Model::ToyScalar { g0, c, l, tau0 },
        }
    }
}

impl Model {
    /// A built-in name or a path to a TOML parameter file.
    pub fn load(source: &str) -> Result<Self, CliError> {
        match source {
            "example41" => return Ok(Model::Example41(NeuralModelParams::default())),
            "toy-scalar" => {
                let p = ToyParams::default();
                return Ok(Model::ToyScalar {
                    g0: p.g0,
                    c: p.c,
                    l: p.l,
                    tau0: defaults::tau0(),
                });
            }
            _ => {}
        }
        let path = Path::new(source);
        if !path.exists() {
            return Err(CliError::usage(format!(
                "model `{source}` is neither a built-in ({}) nor an existing file",
                sdde_core::models::BUILTIN_NAMES.join(", ")
            )));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("reading {source}: {e}")))?;
        let file: ModelFile = toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("model file {source}: {e}")))?;
        Ok(file.into())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Example41(_) => "example41",
            Model::ToyScalar { .. } => "toy-scalar",
        }
    }

    pub fn spec(&self) -> sdde_core::Result<ModelSpec> {
        match self {
            Model::Example41(p) => build_neural_model(p),
            Model::ToyScalar { g0, c, l, .. } => toy_scalar(ToyParams {
                g0: *g0,
                c: *c,
                l: *l,
            }),
        }
    }

    pub fn history(&self, cfg: &RunConfig) -> sdde_core::Result<HistoryFunction> {
        match self {
            Model::Example41(_) => default_history(cfg.t0, cfg.history_span),
            // an exact solution as history, so t0 is not a breakpoint
            Model::ToyScalar { g0, tau0, .. } => toy_history(*g0, cfg.t0, *tau0, 0.0),
        }
    }

    pub fn default_span(&self) -> f64 {
        match self {
            Model::Example41(_) => 200.0,
            Model::ToyScalar { .. } => 3.0,
        }
    }

    /// Offset from `t0` of the default lift time.
    pub fn default_lift_offset(&self) -> f64 {
        match self {
            // still inside the transient; the orbit settles to rest later
            Model::Example41(_) => 15.0,
            Model::ToyScalar { .. } => 1.0,
        }
    }

    pub fn window(&self) -> Vec<f64> {
        match self {
            Model::Example41(_) => vec![-1.0, -0.5, 0.5, 1.0],
            Model::ToyScalar { .. } => vec![-0.1, 0.1],
        }
    }
}

/// Merges `key = value` overrides into a parsed TOML table. Values are parsed
/// as TOML and fall back to plain strings.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[(String, String)]) {
    for (key, raw) in overrides {
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.clone()));
        table.insert(key.clone(), value);
    }
}

pub fn load_config(
    path: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::usage(format!("reading {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::usage(format!("config {}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    apply_overrides(&mut table, overrides);
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::usage(format!("config: {}", e.message())))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_config_key_is_an_error() {
        let err = load_config(None, &[("tolerance".into(), "1e-6".into())]).unwrap_err();
        assert_eq!(err.code, 3);
        assert!(err.message.contains("tolerance"), "{}", err.message);
    }

    #[test]
    fn overrides_are_typed() {
        let cfg = load_config(
            None,
            &[
                ("tol".into(), "1e-6".into()),
                ("include_strip".into(), "false".into()),
            ],
        )
        .unwrap();
        assert_eq!(cfg.tol, 1e-6);
        assert!(!cfg.include_strip);
        let err = load_config(None, &[("depth".into(), "deep".into())]).unwrap_err();
        assert!(
            err.message.contains("depth") || err.message.contains("string"),
            "{}",
            err.message
        );
    }

    #[test]
    fn validation_names_the_field() {
        let cfg = RunConfig {
            tol: 0.0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().unwrap_err().message.contains("`tol`"));
        let cfg = RunConfig {
            rays: 1,
            ..RunConfig::default()
        };
        assert!(cfg.validate().unwrap_err().message.contains("`rays`"));
    }

    #[test]
    fn model_file_defaults_and_rejections() {
        let f: ModelFile = toml::from_str("model = \"example41\"\nh0 = 0.7").unwrap();
        match Model::from(f) {
            Model::Example41(p) => assert_eq!((p.h0, p.mu), (0.7, 1.0)),
            other => panic!("{other:?}"),
        }
        assert!(toml::from_str::<ModelFile>("model = \"toy-scalar\"\ngee = 0.1").is_err());
        assert!(toml::from_str::<ModelFile>("model = \"lorenz\"").is_err());
    }
}
