//! Flat `key = value` run configuration with `#` comments.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Rank, SpectralField};
use crate::global::scale_to_norm;
use crate::grid::{make_grid, LayerGrid};
use crate::random::{random_solenoidal_field, single_mode_solenoidal};

/// Named initial-data presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialData {
    Zero,
    SingleMode,
    RandomSolenoidal,
}

impl FromStr for InitialData {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "single_mode" => Ok(Self::SingleMode),
            "random_solenoidal" => Ok(Self::RandomSolenoidal),
            other => Err(Error::Config(format!(
                "unknown initial_data '{other}' (expected zero, single_mode or random_solenoidal)"
            ))),
        }
    }
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zero => "zero",
            Self::SingleMode => "single_mode",
            Self::RandomSolenoidal => "random_solenoidal",
        })
    }
}

/// Scenario configuration. `None` fields are measured or derived at run time.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub dim: usize,
    pub depth: f64,
    pub period: f64,
    pub n_horizontal: usize,
    pub n_vertical: usize,
    pub mu: f64,
    pub tau: f64,
    pub horizon: f64,
    /// Weight of the `X` norm; default half the measured decay rate.
    pub gamma0: Option<f64>,
    /// Shift of the decomposition; default half the measured decay rate.
    pub sigma0: Option<f64>,
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub initial_data: InitialData,
    /// Target `W^2_q` norm of the initial data; for `global-solve` the
    /// default is the measured smallness bound.
    pub amplitude: Option<f64>,
    pub workers: Option<usize>,
    /// Space exponent of the reported `L_q` norms.
    pub q: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            dim: 2,
            depth: 1.0,
            period: 2.0 * PI,
            n_horizontal: 16,
            n_vertical: 17,
            mu: 1.0,
            tau: 0.05,
            horizon: 5.0,
            gamma0: None,
            sigma0: None,
            tolerance: 1e-8,
            max_iter: 30,
            seed: 0,
            initial_data: InitialData::SingleMode,
            amplitude: None,
            workers: None,
            q: 2.0,
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = '{raw}'")))
}

/// `auto` (or empty) means "measure".
fn optional<T: FromStr>(key: &str, raw: &str) -> Result<Option<T>> {
    match raw {
        "" | "auto" => Ok(None),
        _ => value(key, raw).map(Some),
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, raw) = (key.trim(), raw.trim());
            match key {
                "dim" => cfg.dim = value(key, raw)?,
                "depth" => cfg.depth = value(key, raw)?,
                "period" => cfg.period = value(key, raw)?,
                "n_horizontal" => cfg.n_horizontal = value(key, raw)?,
                "n_vertical" => cfg.n_vertical = value(key, raw)?,
                "mu" => cfg.mu = value(key, raw)?,
                "tau" => cfg.tau = value(key, raw)?,
                "horizon" => cfg.horizon = value(key, raw)?,
                "gamma0" => cfg.gamma0 = optional(key, raw)?,
                "sigma0" => cfg.sigma0 = optional(key, raw)?,
                "tolerance" => cfg.tolerance = value(key, raw)?,
                "max_iter" => cfg.max_iter = value(key, raw)?,
                "seed" => cfg.seed = value(key, raw)?,
                "initial_data" => cfg.initial_data = raw.parse()?,
                "amplitude" => cfg.amplitude = if raw == "gate" { None } else { optional(key, raw)? },
                "workers" => cfg.workers = optional(key, raw)?,
                "q" => cfg.q = value(key, raw)?,
                other => return Err(Error::Config(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("depth", self.depth),
            ("period", self.period),
            ("mu", self.mu),
            ("tau", self.tau),
            ("horizon", self.horizon),
            ("tolerance", self.tolerance),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        if !(2..=3).contains(&self.dim) {
            return Err(Error::Config(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        if self.max_iter == 0 || self.workers == Some(0) {
            return Err(Error::Config("max_iter and workers must be at least 1".into()));
        }
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return Err(Error::Config(format!("q must be >= 1, got {}", self.q)));
        }
        if self.horizon < self.tau {
            return Err(Error::Config("horizon must cover at least one step".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<LayerGrid>> {
        make_grid(self.dim, self.depth, self.period, self.n_horizontal, self.n_vertical)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.tau).round() as usize
    }

    /// Unscaled preset field.
    pub fn preset_field(&self, grid: &Arc<LayerGrid>) -> SpectralField {
        match self.initial_data {
            InitialData::Zero => SpectralField::zeros(grid, Rank::Vector),
            InitialData::SingleMode => single_mode_solenoidal(grid, 1),
            InitialData::RandomSolenoidal => random_solenoidal_field(grid, self.seed, 2),
        }
    }

    /// Preset scaled to `||a||_{W^2_q} = size`.
    pub fn initial_field(&self, grid: &Arc<LayerGrid>, size: f64) -> Result<SpectralField> {
        scale_to_norm(&self.preset_field(grid), size, self.q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let cfg = Config::parse(
            "# layer\ndim = 3\nn_horizontal = 8 # modes\nmu=0.5\ninitial_data = random_solenoidal\namplitude = gate\nsigma0 = auto\ngamma0 = 0.25\n",
        )
        .unwrap();
        assert_eq!(cfg.dim, 3);
        assert_eq!(cfg.n_horizontal, 8);
        assert_eq!(cfg.mu, 0.5);
        assert_eq!(cfg.initial_data, InitialData::RandomSolenoidal);
        assert_eq!(cfg.amplitude, None);
        assert_eq!(cfg.sigma0, None);
        assert_eq!(cfg.gamma0, Some(0.25));
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["dim = 4", "mu = -1", "tau = x", "colour = red", "novalue", "initial_data = vortex", "workers = 0"] {
            assert!(matches!(Config::parse(text), Err(Error::Config(_))), "{text}");
        }
    }
}
