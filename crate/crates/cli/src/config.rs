//! Flat `key = value` experiment files.
//!
//! A file names a `preset` whose defaults every other key may override.
//! Blank lines and lines starting with `#` are ignored.

// Negated comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use fracell::fem::{first_eigenfunction, layer_rhs, surrogate_rhs, Coefficient, Order};
use fracell::mesh::Diagonal;
use fracell::pseudotime::SchemeParams;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Adaptive solve of `-eps div(k grad u) + u = f`.
    Surrogate,
    /// Starting adaptation then pseudo-time integration of `A^eps w = f`.
    Fractional,
    /// No defaults for the problem itself.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Surrogate,
    Fractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rhs {
    /// `(1 - x1) x2^2`
    Surrogate,
    /// `(1 - x1 - exp(-x1/mu)) (x2^2 - exp(-(1 - x2)/mu))`
    Layer,
    /// `2 sin(pi x1) sin(pi x2)`
    Eigenfunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub pipeline: Pipeline,
    pub rhs: Rhs,
    pub eps: f64,
    pub mu: f64,
    pub delta: f64,
    pub sigma: f64,
    pub tau: f64,
    pub steps: usize,
    /// Constant diffusion coefficient.
    pub k: f64,
    pub order: Order,
    pub n: usize,
    pub diagonal: Diagonal,
    pub eta: f64,
    pub max_steps: usize,
    pub marking_fraction: f64,
    pub bisections: usize,
    /// Compare the final solution with the dense eigen-decomposition.
    pub oracle: bool,
    pub out: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "preset",
    "pipeline",
    "rhs",
    "eps",
    "mu",
    "delta",
    "sigma",
    "tau",
    "steps",
    "k",
    "order",
    "n",
    "diagonal",
    "eta",
    "max_steps",
    "marking_fraction",
    "bisections",
    "oracle",
    "out",
];

impl ExperimentConfig {
    /// Defaults of a preset. The problem fields of `Custom` are unset
    /// (NaN) and must be given.
    pub fn preset(preset: Preset) -> Self {
        let base = Self {
            preset,
            pipeline: Pipeline::Surrogate,
            rhs: Rhs::Surrogate,
            eps: f64::NAN,
            mu: 1e-2,
            delta: 2.0 * PI * PI,
            sigma: 0.5,
            tau: 1e-2,
            steps: 100,
            k: 1.0,
            order: Order::Linear,
            n: 8,
            diagonal: Diagonal::Right,
            eta: 1e-5,
            max_steps: 40,
            marking_fraction: 0.3,
            bisections: 2,
            oracle: false,
            out: None,
        };
        match preset {
            Preset::Surrogate => Self { eps: 1e-1, ..base },
            Preset::Fractional => Self {
                pipeline: Pipeline::Fractional,
                rhs: Rhs::Layer,
                eps: 1e-2,
                order: Order::Quadratic,
                diagonal: Diagonal::Left,
                eta: 1e-3,
                max_steps: 10,
                ..base
            },
            Preset::Custom => base,
        }
    }

    /// Parses a file, returning the configuration and any warnings.
    pub fn parse(text: &str) -> Result<(Self, Vec<String>), ConfigError> {
        let mut entries: Vec<(usize, &str, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::at(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("`{key}` has no value")));
            }
            if let Some((first, ..)) = entries.iter().find(|e| e.1 == key) {
                return Err(ConfigError::at(line, format!("`{key}` already set on line {first}")));
            }
            entries.push((line, key, value));
        }

        let preset = match entries.iter().find(|e| e.1 == "preset") {
            Some(&(line, _, v)) => match v {
                "surrogate" => Preset::Surrogate,
                "fractional" => Preset::Fractional,
                "custom" => Preset::Custom,
                _ => {
                    return Err(ConfigError::at(line, format!("unknown preset `{v}` (surrogate, fractional, custom)")))
                }
            },
            None => return Err(ConfigError::global("missing `preset`")),
        };
        let mut cfg = Self::preset(preset);
        let mut given = Vec::new();
        for &(line, key, value) in &entries {
            cfg.set(key, value).map_err(|m| ConfigError::at(line, m))?;
            given.push(key);
        }
        if preset == Preset::Custom {
            for key in ["pipeline", "rhs", "eps"] {
                if !given.contains(&key) {
                    return Err(ConfigError::global(format!("preset custom requires `{key}`")));
                }
            }
        }
        if cfg.pipeline == Pipeline::Fractional {
            cfg.resolve_steps(given.contains(&"steps"), given.contains(&"tau"))?;
        }
        cfg.check()?;

        let mut warnings = Vec::new();
        if cfg.pipeline == Pipeline::Fractional {
            if let Some(w) = cfg.scheme_params().ok().and_then(|p| p.stability_warning()) {
                warnings.push(w);
            }
        } else {
            for key in ["delta", "sigma", "tau", "steps", "oracle"] {
                if given.contains(&key) {
                    warnings.push(format!("`{key}` is not used by the surrogate pipeline"));
                }
            }
        }
        if cfg.rhs != Rhs::Layer && given.contains(&"mu") {
            warnings.push("`mu` is only used by rhs = layer".into());
        }
        Ok((cfg, warnings))
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn real(key: &str, v: &str) -> Result<f64, String> {
            v.parse::<f64>().map_err(|_| format!("`{key}` expects a number, got `{v}`"))
        }
        fn count(key: &str, v: &str) -> Result<usize, String> {
            v.parse::<usize>().map_err(|_| format!("`{key}` expects a non-negative integer, got `{v}`"))
        }
        match key {
            "preset" => {}
            "pipeline" => {
                self.pipeline = match value {
                    "surrogate" => Pipeline::Surrogate,
                    "fractional" => Pipeline::Fractional,
                    _ => return Err(format!("unknown pipeline `{value}` (surrogate, fractional)")),
                }
            }
            "rhs" => {
                self.rhs = match value {
                    "surrogate" => Rhs::Surrogate,
                    "layer" => Rhs::Layer,
                    "eigenfunction" => Rhs::Eigenfunction,
                    _ => return Err(format!("unknown rhs `{value}` (surrogate, layer, eigenfunction)")),
                }
            }
            "eps" => self.eps = real(key, value)?,
            "mu" => self.mu = real(key, value)?,
            "delta" => self.delta = real(key, value)?,
            "sigma" => self.sigma = real(key, value)?,
            "tau" => self.tau = real(key, value)?,
            "steps" => self.steps = count(key, value)?,
            "k" => self.k = real(key, value)?,
            "order" => {
                self.order = match value {
                    "1" => Order::Linear,
                    "2" => Order::Quadratic,
                    _ => return Err(format!("`order` must be 1 or 2, got `{value}`")),
                }
            }
            "n" => self.n = count(key, value)?,
            "diagonal" => {
                self.diagonal = match value {
                    "right" => Diagonal::Right,
                    "left" => Diagonal::Left,
                    _ => return Err(format!("`diagonal` must be right or left, got `{value}`")),
                }
            }
            "eta" => self.eta = real(key, value)?,
            "max_steps" => self.max_steps = count(key, value)?,
            "marking_fraction" => self.marking_fraction = real(key, value)?,
            "bisections" => self.bisections = count(key, value)?,
            "oracle" => {
                self.oracle = match value {
                    "true" | "yes" | "1" => true,
                    "false" | "no" | "0" => false,
                    _ => return Err(format!("`oracle` must be true or false, got `{value}`")),
                }
            }
            "out" => self.out = Some(PathBuf::from(value)),
            _ => unreachable!("keys are checked before"),
        }
        Ok(())
    }

    /// Derives `steps` from `tau` or checks that both agree.
    fn resolve_steps(&mut self, steps_given: bool, tau_given: bool) -> Result<(), ConfigError> {
        if !(self.tau > 0.0) {
            return Err(ConfigError::global(format!("tau = {} must be positive", self.tau)));
        }
        if steps_given && !tau_given {
            if self.steps == 0 {
                return Err(ConfigError::global("steps must be positive"));
            }
            self.tau = 1.0 / self.steps as f64;
            return Ok(());
        }
        if !steps_given {
            self.steps = (1.0 / self.tau).round() as usize;
        }
        if self.steps == 0 || (self.steps as f64 * self.tau - 1.0).abs() > 1e-12 {
            return Err(ConfigError::global(format!("tau * steps = {} * {} must equal 1", self.tau, self.steps)));
        }
        Ok(())
    }

    fn check(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::global(m));
        match self.pipeline {
            Pipeline::Surrogate if !(self.eps > 0.0) => return fail(format!("eps = {} must be positive", self.eps)),
            Pipeline::Fractional if !(self.eps > 0.0 && self.eps < 1.0) => {
                return fail(format!("eps = {} must lie in (0, 1)", self.eps))
            }
            _ => {}
        }
        if self.pipeline == Pipeline::Fractional {
            if !(self.delta > 0.0) {
                return fail(format!("delta = {} must be positive", self.delta));
            }
            if !(self.sigma >= 0.0) {
                return fail(format!("sigma = {} must be non-negative", self.sigma));
            }
        }
        if self.rhs == Rhs::Layer && !(self.mu > 0.0) {
            return fail(format!("mu = {} must be positive", self.mu));
        }
        if !(self.k > 0.0) {
            return fail(format!("k = {} must be positive", self.k));
        }
        if self.n == 0 {
            return fail("n must be at least 1".into());
        }
        if !(self.eta > 0.0) {
            return fail(format!("eta = {} must be positive", self.eta));
        }
        if self.max_steps == 0 {
            return fail("max_steps must be at least 1".into());
        }
        if !(self.marking_fraction > 0.0 && self.marking_fraction < 1.0) {
            return fail(format!("marking_fraction = {} must lie in (0, 1)", self.marking_fraction));
        }
        if self.bisections == 0 {
            return fail("bisections must be at least 1".into());
        }
        Ok(())
    }

    pub fn scheme_params(&self) -> fracell::Result<SchemeParams<f64>> {
        let p = SchemeParams { eps: self.eps, delta: self.delta, sigma: self.sigma, tau: self.tau, steps: self.steps };
        p.validate()?;
        Ok(p)
    }

    pub fn rhs_coefficient(&self) -> Coefficient<f64> {
        match self.rhs {
            Rhs::Surrogate => surrogate_rhs(),
            Rhs::Layer => layer_rhs(self.mu),
            Rhs::Eigenfunction => first_eigenfunction(),
        }
    }

    /// Every resolved value, in file syntax.
    pub fn resolved(&self) -> Vec<(&'static str, String)> {
        let name = |p: Preset| match p {
            Preset::Surrogate => "surrogate",
            Preset::Fractional => "fractional",
            Preset::Custom => "custom",
        };
        let mut v = vec![
            ("preset", name(self.preset).to_string()),
            (
                "pipeline",
                match self.pipeline {
                    Pipeline::Surrogate => "surrogate",
                    Pipeline::Fractional => "fractional",
                }
                .to_string(),
            ),
            (
                "rhs",
                match self.rhs {
                    Rhs::Surrogate => "surrogate",
                    Rhs::Layer => "layer",
                    Rhs::Eigenfunction => "eigenfunction",
                }
                .to_string(),
            ),
            ("eps", self.eps.to_string()),
        ];
        if self.rhs == Rhs::Layer {
            v.push(("mu", self.mu.to_string()));
        }
        if self.pipeline == Pipeline::Fractional {
            v.push(("delta", self.delta.to_string()));
            v.push(("sigma", self.sigma.to_string()));
            v.push(("tau", self.tau.to_string()));
            v.push(("steps", self.steps.to_string()));
            v.push(("oracle", self.oracle.to_string()));
        }
        v.extend([
            ("k", self.k.to_string()),
            ("order", self.order.degree().to_string()),
            ("n", self.n.to_string()),
            (
                "diagonal",
                match self.diagonal {
                    Diagonal::Right => "right",
                    Diagonal::Left => "left",
                }
                .to_string(),
            ),
            ("eta", self.eta.to_string()),
            ("max_steps", self.max_steps.to_string()),
            ("marking_fraction", self.marking_fraction.to_string()),
            ("bisections", self.bisections.to_string()),
        ]);
        if let Some(out) = &self.out {
            v.push(("out", out.display().to_string()));
        }
        v
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.resolved() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
