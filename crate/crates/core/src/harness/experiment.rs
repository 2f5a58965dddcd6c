//! Named experiments writing CSV and JSON results plus a manifest.

use super::config::{DomainSpec, ExperimentConfig};
use super::estimate::{estimate, estimate_with_quantiles, least_squares, EstimatorSummary, LinearFit};
use super::seeds::{mix, replica_rng};
use crate::brw::brw_max_stats;
use crate::chaos::{alpha, gmc_measure, ChaosLattice};
use crate::error::{Error, Result};
use crate::extremes::{a_n, dekking_host_check, max_stats, sample_maxima};
use crate::lattice::{LatticeDomain, Region};
use crate::rwre::exit_time_exponent;
use crate::sampler::FieldSampler;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

/// Version of the output layout recorded in every manifest.
pub const SCHEMA_VERSION: u32 = 1;

/// Experiments understood by [`run_experiment`].
pub const EXPERIMENTS: [&str; 6] = ["levelset-exponent", "max-stats", "dekking-host", "brw-max", "chaos-mass", "exit-exponent"];

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutput {
    pub files: Vec<PathBuf>,
    pub summary: Value,
    /// SHA-256 of the result files, each framed as `blob <len>\0<bytes>`.
    pub content_hash: String,
}

fn domain(config: &ExperimentConfig, n: usize) -> Result<Arc<LatticeDomain>> {
    Ok(Arc::new(match config.domain {
        DomainSpec::Box => LatticeDomain::make_box(n)?,
        DomainSpec::Disc => LatticeDomain::discretize(&Region::unit_disc(), n)?,
    }))
}

fn slope_with_ci(fit: &LinearFit) -> Value {
    json!({
        "slope": fit.slope,
        "slope_se": fit.slope_se,
        "ci95": [fit.slope - 1.96 * fit.slope_se, fit.slope + 1.96 * fit.slope_se],
        "intercept": fit.intercept,
    })
}

fn levelset_exponent(c: &ExperimentConfig) -> Result<(String, Value)> {
    let mut csv = String::from("N,threshold,mean,se\n");
    let mut means = Vec::new();
    for &n in &c.sizes {
        let sampler = FieldSampler::new(domain(c, n)?)?;
        let t = a_n(n as f64, c.lambda);
        let counts: Vec<f64> = (0..c.reps as u64)
            .into_par_iter()
            .map(|r| {
                let h = sampler.sample_values(&mut replica_rng(mix(c.seed, &format!("N{n}")), r));
                h.iter().filter(|&&v| v >= t).count() as f64
            })
            .collect();
        let s = estimate(&counts);
        writeln!(csv, "{n},{t:.17e},{:.17e},{}", s.mean, s.std_error.map_or("".into(), |e| format!("{e:.17e}"))).ok();
        means.push(s);
    }
    let xs: Vec<f64> = c.sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|s| s.mean.ln()).collect();
    let summary = if c.sizes.len() >= 2 {
        json!({ "fit": slope_with_ci(&least_squares(&xs, &ys)), "target": 2.0 * (1.0 - c.lambda * c.lambda) })
    } else {
        json!({ "mean": means[0] })
    };
    Ok((csv, summary))
}

fn max_stats_experiment(c: &ExperimentConfig) -> Result<(String, Value)> {
    let mut csv = String::from("N,m_N,mean,se,median\n");
    let mut all = Vec::new();
    for &n in &c.sizes {
        let d = domain(c, n)?;
        let maxima = sample_maxima(&d, c.reps, mix(c.seed, &format!("N{n}")))?;
        let s = max_stats(&d, &maxima)?;
        writeln!(csv, "{n},{:.17e},{:.17e},{},{:.17e}", s.m_n, s.max.mean, opt(s.max.std_error), s.median).ok();
        all.push(s);
    }
    Ok((csv, serde_json::to_value(&all)?))
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |e| format!("{e:.17e}"))
}

fn dekking_host_experiment(c: &ExperimentConfig) -> Result<(String, Value)> {
    let mut csv = String::from("N,lhs,lhs_se,rhs,rhs_se,holds\n");
    let mut rows = Vec::new();
    for &n in &c.sizes {
        let draw = |m: usize| -> Result<Vec<f64>> {
            Ok(sample_maxima(&domain(c, m)?, c.reps, mix(c.seed, &format!("N{m}")))?.into_iter().map(|p| p.0).collect())
        };
        let dh = dekking_host_check(&draw(n)?, &draw(2 * n)?)?;
        writeln!(csv, "{n},{:.17e},{:.17e},{:.17e},{:.17e},{}", dh.lhs, dh.lhs_se, dh.rhs, dh.rhs_se, dh.holds(3.0)).ok();
        rows.push(json!({ "N": n, "check": dh, "holds": dh.holds(3.0) }));
    }
    Ok((csv, Value::Array(rows)))
}

fn brw_experiment(c: &ExperimentConfig) -> Result<(String, Value)> {
    let mut csv = String::from("b,n,m_tilde,mean,se,centered_mean\n");
    let mut rows = Vec::new();
    for &n in &c.sizes {
        let s = brw_max_stats(c.branching, n, c.reps, mix(c.seed, &format!("n{n}")))?;
        writeln!(csv, "{},{n},{:.17e},{:.17e},{},{:.17e}", c.branching, s.m_tilde, s.max.mean, opt(s.max.std_error), s.centered_mean)
            .ok();
        rows.push(s);
    }
    Ok((csv, serde_json::to_value(&rows)?))
}

fn chaos_experiment(c: &ExperimentConfig) -> Result<(String, Value)> {
    let lat = ChaosLattice::new(c.depth)?;
    let beta = c.lambda * alpha();
    let masses: Vec<f64> = (0..c.reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(c.seed, r);
            Ok(gmc_measure(&lat, &lat.sample_levels(lat.depth(), &mut rng), beta, 0)?.total_mass())
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from("replica,total_mass\n");
    for (r, m) in masses.iter().enumerate() {
        writeln!(csv, "{r},{m:.17e}").ok();
    }
    let s: EstimatorSummary = estimate_with_quantiles(&masses);
    Ok((csv, json!({ "beta": beta, "lambda": c.lambda, "depth": c.depth, "total_mass": s })))
}

fn exit_experiment(c: &ExperimentConfig) -> Result<(String, Value)> {
    let e = exit_time_exponent(c.beta, &c.sizes, c.reps, c.seed)?;
    let mut csv = String::from("N,mean_exit_time,se\n");
    for (n, s) in e.sizes.iter().zip(&e.exit_times) {
        writeln!(csv, "{n},{:.17e},{}", s.mean, opt(s.std_error)).ok();
    }
    Ok((csv, json!({ "beta": e.beta, "theta": e.theta, "fit": slope_with_ci(&e.fit) })))
}

/// Git-style content hash: SHA-256 over the files, each framed as `blob <len>\0<bytes>`.
pub fn content_hash(files: &[(&str, &[u8])]) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in files {
        h.update(name.as_bytes());
        h.update([0u8]);
        h.update(format!("blob {}\0", bytes.len()).as_bytes());
        h.update(bytes);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the configured experiment and writes `<name>.csv`, `<name>.json` and `manifest.json`
/// into the output directory. Outputs depend only on the configuration.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let name = config.experiment.as_str();
    let (csv, summary) = match name {
        "levelset-exponent" => levelset_exponent(config)?,
        "max-stats" => max_stats_experiment(config)?,
        "dekking-host" => dekking_host_experiment(config)?,
        "brw-max" => brw_experiment(config)?,
        "chaos-mass" => chaos_experiment(config)?,
        "exit-exponent" => exit_experiment(config)?,
        other => return Err(Error::Validation(format!("unknown experiment {other:?}; known: {}", EXPERIMENTS.join(", ")))),
    };
    let json_text = serde_json::to_string_pretty(&summary)? + "\n";
    let csv_name = format!("{name}.csv");
    let json_name = format!("{name}.json");
    let hash = content_hash(&[(&csv_name, csv.as_bytes()), (&json_name, json_text.as_bytes())]);
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": name,
        "config": config,
        "config_text": config.to_text(),
        "files": [csv_name, json_name],
        "content_hash": hash,
    });
    std::fs::create_dir_all(&config.out_dir)?;
    let files = vec![config.out_dir.join(&csv_name), config.out_dir.join(&json_name), config.out_dir.join("manifest.json")];
    std::fs::write(&files[0], &csv)?;
    std::fs::write(&files[1], &json_text)?;
    std::fs::write(&files[2], serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(ExperimentOutput { files, summary, content_hash: hash })
}
