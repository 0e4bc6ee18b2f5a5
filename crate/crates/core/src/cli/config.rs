use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::parse_flat_kv;
use crate::primes::Limits;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Settings shared by every subcommand. Values come from the defaults, then
/// the `--config` file, then explicit flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub ceiling: u64,
    pub segment_size: u64,
    /// Truncation for zero finding and multiplicity detection (default `min(1e7, ceiling)`).
    pub x_zeros: Option<u64>,
    /// Truncation for the transition construction (default: the ceiling).
    pub x_transition: Option<u64>,
    pub c0: f64,
    pub theta: f64,
    pub grid_ratio: f64,
    pub subintervals: usize,
    pub format: OutputFormat,
    pub constants: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let limits = Limits::default();
        Self {
            ceiling: limits.sum_ceiling,
            segment_size: limits.segment_size,
            x_zeros: None,
            x_transition: None,
            c0: 0.8,
            theta: 0.01,
            grid_ratio: 1.2,
            subintervals: 6,
            format: OutputFormat::Csv,
            constants: PathBuf::from(crate::oracle::FROZEN_FILE),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        for (k, v) in parse_flat_kv(&text) {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            // Integers may be written as 1e8.
            v.parse::<T>()
                .or_else(|_| v.parse::<f64>().ok().filter(|x| x.fract() == 0.0).and_then(|x| format!("{x:.0}").parse().ok()).ok_or(()))
                .map_err(|_| Error::domain(format!("config `{key}`: cannot parse `{v}`")))
        }
        match key {
            "ceiling" => self.ceiling = num(key, value)?,
            "segment_size" => self.segment_size = num(key, value)?,
            "x_zeros" => self.x_zeros = Some(num(key, value)?),
            "x_transition" => self.x_transition = Some(num(key, value)?),
            "c0" => self.c0 = num(key, value)?,
            "theta" => self.theta = num(key, value)?,
            "grid_ratio" => self.grid_ratio = num(key, value)?,
            "subintervals" => self.subintervals = num(key, value)?,
            "format" => {
                self.format = match value {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    _ => return Err(Error::domain(format!("config `format`: expected csv or json, got `{value}`"))),
                }
            }
            "constants" => self.constants = PathBuf::from(value),
            _ => return Err(Error::domain(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn x_zeros(&self) -> u64 {
        self.x_zeros.unwrap_or(self.ceiling.min(10_000_000))
    }

    pub fn x_transition(&self) -> u64 {
        self.x_transition.unwrap_or(self.ceiling)
    }

    pub fn limits(&self) -> Limits {
        Limits { prime_ceiling: self.ceiling, sum_ceiling: self.ceiling, segment_size: self.segment_size }
    }

    pub fn validate(&self) -> Result<()> {
        let cap = Limits::default().prime_ceiling;
        if self.ceiling > cap {
            return Err(Error::Capacity { what: "ceiling", requested: self.ceiling, ceiling: cap });
        }
        let limits = self.limits();
        limits.check_sum("x_zeros", self.x_zeros())?;
        limits.check_sum("x_transition", self.x_transition())?;
        if self.segment_size == 0 {
            return Err(Error::domain("segment_size must be positive"));
        }
        if !(self.c0 > 0.0 && self.c0 <= 1.0) {
            return Err(Error::domain("c0 must lie in (0, 1]"));
        }
        if !(self.theta > 0.0) {
            return Err(Error::domain("theta must be positive"));
        }
        if !(self.grid_ratio > 1.0 && self.grid_ratio <= crate::structure::MAX_GRID_RATIO) {
            return Err(Error::domain(format!("grid_ratio must lie in (1, {}]", crate::structure::MAX_GRID_RATIO)));
        }
        if self.subintervals == 0 {
            return Err(Error::domain("subintervals must be positive"));
        }
        Ok(())
    }
}
