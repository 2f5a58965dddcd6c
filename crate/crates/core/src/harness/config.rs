//! Experiment configuration in plain `key = value` text.

use crate::error::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Domain shape used by an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainSpec {
    Box,
    Disc,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub domain: DomainSpec,
    pub sizes: Vec<usize>,
    pub lambda: f64,
    pub beta: f64,
    pub depth: usize,
    pub branching: usize,
    pub reps: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: String::new(),
            domain: DomainSpec::Box,
            sizes: vec![64],
            lambda: 0.2,
            beta: 0.0,
            depth: 6,
            branching: 2,
            reps: 100,
            seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("bad value {v:?} for {key}")))
}

impl ExperimentConfig {
    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "experiment" => self.experiment = v.to_string(),
            "domain" => {
                self.domain = match v {
                    "box" => DomainSpec::Box,
                    "disc" => DomainSpec::Disc,
                    _ => return Err(Error::Parse(format!("unknown domain {v:?}"))),
                }
            }
            "sizes" | "N" => {
                self.sizes = v.split(',').map(|s| parse_value("sizes", s.trim())).collect::<Result<_>>()?
            }
            "lambda" => self.lambda = parse_value(key, v)?,
            "beta" => self.beta = parse_value(key, v)?,
            "depth" => self.depth = parse_value(key, v)?,
            "branching" => self.branching = parse_value(key, v)?,
            "reps" => self.reps = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            other => return Err(Error::Parse(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected key = value", no + 1)))?;
            c.set(k, v)?;
        }
        Ok(c)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical text form, accepted by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        let domain = match self.domain {
            DomainSpec::Box => "box",
            DomainSpec::Disc => "disc",
        };
        format!(
            "experiment = {}\ndomain = {}\nsizes = {}\nlambda = {}\nbeta = {}\ndepth = {}\nbranching = {}\nreps = {}\nseed = {}\nout_dir = {}\n",
            self.experiment,
            domain,
            sizes.join(","),
            self.lambda,
            self.beta,
            self.depth,
            self.branching,
            self.reps,
            self.seed,
            self.out_dir.display()
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Validation("reps must be at least 1".into()));
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|&n| n < 2) {
            return Err(Error::Validation("sizes must be nonempty and at least 2".into()));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::Validation("beta must be nonnegative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let c = ExperimentConfig::parse("experiment = brw-max # comment\nsizes = 8, 10\nreps=5\nseed=9\n").unwrap();
        assert_eq!(c.sizes, vec![8, 10]);
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(matches!(ExperimentConfig::parse("colour = red"), Err(Error::Parse(_))));
        assert!(ExperimentConfig::parse("reps = many").is_err());
        let mut c = ExperimentConfig::default();
        c.reps = 0;
        assert!(c.validate().is_err());
    }
}
