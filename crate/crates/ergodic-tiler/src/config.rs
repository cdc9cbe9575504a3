//! `key=value` run configuration.

use std::path::Path;

use serde::Serialize;
use tiler_core::prepartitions::SearchBudget;
use tiler_core::tiling::TilingConfig;

use crate::error::{LabError, LabResult};
use crate::models::ModelSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub model: ModelSpec,
    pub eps: f64,
    pub max_stages: usize,
    pub exhaustive_limit: usize,
    pub max_units: usize,
    /// Record wall times in the CSV. Off by default so that CSV output is
    /// byte-identical across runs; the JSON summary always has them.
    pub timing: bool,
}

impl Default for Config {
    fn default() -> Self {
        let budget = SearchBudget::default();
        Config {
            model: ModelSpec::default(),
            eps: 0.05,
            max_stages: 12,
            exhaustive_limit: budget.exhaustive_limit,
            max_units: budget.max_units,
            timing: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> LabResult<T> {
    value
        .parse()
        .map_err(|_| LabError::Config(format!("bad value {value:?} for {key}")))
}

impl Config {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> LabResult<()> {
        let value = value.trim();
        match key.trim() {
            "model.kind" => self.model.kind = value.parse().map_err(LabError::Config)?,
            "model.n" => self.model.n = parse(key, value)?,
            "model.p" => self.model.p = parse(key, value)?,
            "model.q" => self.model.q = parse(key, value)?,
            "model.seed" => self.model.seed = parse(key, value)?,
            "model.path" => self.model.path = parse(key, value)?,
            "model.degree" => self.model.degree = parse(key, value)?,
            "run.eps" => {
                let eps: f64 = parse(key, value)?;
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(LabError::Config(format!("run.eps = {eps} must lie in (0, 1)")));
                }
                self.eps = eps;
            }
            "run.max_stages" => {
                let stages: usize = parse(key, value)?;
                if stages == 0 {
                    return Err(LabError::Config("run.max_stages must be at least 1".into()));
                }
                self.max_stages = stages;
            }
            "run.exhaustive_limit" => self.exhaustive_limit = parse(key, value)?,
            "run.max_units" => self.max_units = parse(key, value)?,
            "run.timing" => self.timing = parse(key, value)?,
            other => return Err(LabError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn assign(&mut self, pair: &str) -> LabResult<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| LabError::Config(format!("expected key=value, got {pair:?}")))?;
        self.set(key, value)
    }

    /// Parses config text: one `key=value` per line, `#` comments.
    pub fn parse_text(text: &str) -> LabResult<Config> {
        let mut config = Config::default();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                config.assign(line)?;
            }
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> LabResult<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Config::parse_text(&text)
    }

    pub fn tiling(&self) -> TilingConfig {
        TilingConfig {
            eps: self.eps,
            max_stages: self.max_stages,
            budget: SearchBudget {
                exhaustive_limit: self.exhaustive_limit,
                max_units: self.max_units,
            },
            ..TilingConfig::default()
        }
    }

    /// The configuration as `key=value` lines, in a fixed order.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        format!(
            "model.kind={}\nmodel.n={}\nmodel.p={}\nmodel.q={}\nmodel.seed={}\nmodel.path={}\nmodel.degree={}\n\
             run.eps={}\nrun.max_stages={}\nrun.exhaustive_limit={}\nrun.max_units={}\nrun.timing={}\n",
            m.kind,
            m.n,
            m.p,
            m.q,
            m.seed,
            m.path,
            m.degree,
            self.eps,
            self.max_stages,
            self.exhaustive_limit,
            self.max_units,
            self.timing
        )
    }
}
