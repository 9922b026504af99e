//! Run configuration: a flat `key = value` file, then command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};

use crate::bloch::DEFAULT_BLOCH_N;
use crate::model::Params;
use crate::orbit::{DEFAULT_FOURIER_M, DEFAULT_TOL};
use crate::spectrum::DEFAULT_N_THETA;
use crate::verify::{Tolerances, VerifySettings, DEFAULT_EPS_GRID};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub r: f64,
    pub alpha: f64,
    pub eps_grid: Vec<f64>,
    pub n_theta: usize,
    pub fourier_m: usize,
    pub bloch_n: usize,
    pub tol: f64,
    pub out_dir: PathBuf,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            r: 1.0,
            alpha: 1.0,
            eps_grid: DEFAULT_EPS_GRID.to_vec(),
            n_theta: DEFAULT_N_THETA,
            fourier_m: DEFAULT_FOURIER_M,
            bloch_n: DEFAULT_BLOCH_N,
            tol: DEFAULT_TOL,
            out_dir: PathBuf::from("out"),
            tolerances: Tolerances::default(),
        }
    }
}

/// Marks configuration problems so they map to exit code 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub fn parse_eps_list(text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| config_err(format!("bad eps value {t:?}"))))
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| config_err(format!("bad value for {key}: {value:?}")))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.tolerances;
        match key {
            "r" => self.r = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "eps" | "eps_grid" => self.eps_grid = parse_eps_list(value)?,
            "n_theta" => self.n_theta = parse_num(key, value)?,
            "fourier_m" => self.fourier_m = parse_num(key, value)?,
            "bloch_n" => self.bloch_n = parse_num(key, value)?,
            "tol" => self.tol = parse_num(key, value)?,
            "out" | "out_dir" => self.out_dir = PathBuf::from(value),
            "tol.hopf_location" => t.hopf_location = parse_num(key, value)?,
            "tol.crossing_slope" => t.crossing_slope = parse_num(key, value)?,
            "tol.amplitude_slope" => t.amplitude_slope = parse_num(key, value)?,
            "tol.period_constant" => t.period_constant = parse_num(key, value)?,
            "tol.shooting" => t.shooting = parse_num(key, value)?,
            "tol.symbol" => t.symbol = parse_num(key, value)?,
            "tol.unperturbed" => t.unperturbed = parse_num(key, value)?,
            "tol.distance_factor" => t.distance_factor = parse_num(key, value)?,
            "tol.truncation" => t.truncation = parse_num(key, value)?,
            _ => bail!(config_err(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Reads a config file; `#` starts a comment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("{}:{}: expected key = value", path.display(), lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        Ok(cfg)
    }

    pub fn params(&self) -> Result<Params> {
        Params::new(self.r, self.alpha).map_err(|e| config_err(e.to_string()))
    }

    /// Checks everything that can be checked without running the pipeline.
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        let tols = [
            self.tol,
            self.tolerances.hopf_location,
            self.tolerances.crossing_slope,
            self.tolerances.amplitude_slope,
            self.tolerances.period_constant,
            self.tolerances.shooting,
            self.tolerances.symbol,
            self.tolerances.unperturbed,
            self.tolerances.distance_factor,
            self.tolerances.truncation,
        ];
        if tols.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(config_err("all tolerances must be positive"));
        }
        if self.eps_grid.is_empty() {
            return Err(config_err("eps grid is empty"));
        }
        if self.eps_grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(config_err("eps values must be positive"));
        }
        if self.eps_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("eps grid must be strictly ascending"));
        }
        ensure!(self.n_theta >= 3, config_err("n_theta must be at least 3"));
        ensure!(self.fourier_m >= 8, config_err("fourier_m must be at least 8"));
        ensure!(self.bloch_n >= 4, config_err("bloch_n must be at least 4"));
        Ok(())
    }

    /// Creates the output directory and makes sure it accepts files.
    pub fn prepare_out_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| config_err(format!("cannot create {}: {e}", self.out_dir.display())))?;
        let probe = self.out_dir.join(".write-probe");
        fs::write(&probe, b"")
            .and_then(|_| fs::remove_file(&probe))
            .map_err(|e| config_err(format!("output directory {} is not writable: {e}", self.out_dir.display())))?;
        Ok(())
    }

    pub fn verify_settings(&self) -> Result<VerifySettings> {
        let mut s = VerifySettings::new(self.params()?);
        s.eps_grid = self.eps_grid.clone();
        s.n_theta = self.n_theta;
        s.fourier_m = self.fourier_m;
        s.bloch_n = self.bloch_n;
        s.tol = self.tol;
        s.tolerances = self.tolerances;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_then_defaults() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\nr = 2\neps = 0.001, 0.004 # trailing\n\ntol.amplitude_slope=0.1").unwrap();
        let cfg = RunConfig::load(f.path()).unwrap();
        assert_eq!(cfg.r, 2.0);
        assert_eq!(cfg.alpha, 1.0);
        assert_eq!(cfg.eps_grid, vec![0.001, 0.004]);
        assert_eq!(cfg.tolerances.amplitude_slope, 0.1);
        assert_eq!(cfg.n_theta, DEFAULT_N_THETA);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("bogus", "1").is_err());
        assert!(cfg.set("r", "abc").is_err());
        cfg.r = -1.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("r must be positive"));
        let mut cfg = RunConfig::default();
        cfg.eps_grid = vec![0.004, 0.002];
        assert!(cfg.validate().is_err());
        cfg.eps_grid.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.tol = 0.0;
        assert!(cfg.validate().is_err());
        assert!(parse_eps_list("").unwrap().is_empty());
    }
}
