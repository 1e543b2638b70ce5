//! Run configuration: desk-scale defaults, a flat key=value config file,
//! and CLI flag overrides (flags win).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use extload_core::{Error, Result};
use sha2::{Digest, Sha256};

/// Full run configuration. Defaults are the desk-scale profile; the
/// paper-scale profile raises the iteration counts to the reference values.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub burn_in: usize,
    /// Posterior draws of the load model (one extreme-load draw each).
    pub m_l: usize,
    /// Outer wind-sampling repetitions.
    pub m_w: usize,
    /// Speeds drawn per repetition.
    pub n_w: usize,
    /// Loads drawn per short-term distribution.
    pub n_l: usize,
    pub k_max: usize,
    pub t_years: Vec<f64>,
    /// Target probabilities for the simulation replication.
    pub sim_probs: Vec<f64>,
    pub grid_v: usize,
    pub grid_s: usize,
    /// Basis type codes for the location and scale models.
    pub allowed_mu: Vec<u8>,
    pub allowed_sigma: Vec<u8>,
    pub taus: Vec<f64>,
    pub bs: Vec<f64>,
    pub score_repeats: usize,
    pub split_frac: f64,
    /// Posterior draws pooled per test-point quantile when scoring.
    pub score_draws: usize,
    pub sim_blocks: usize,
    pub sim_block_size: usize,
    pub sim_weibull: Vec<f64>,
    pub ref_datasets: usize,
    pub ref_size: usize,
    pub block_len_secs: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            burn_in: 200,
            m_l: 500,
            m_w: 100,
            n_w: 100,
            n_l: 100,
            k_max: 40,
            t_years: vec![20.0, 50.0],
            sim_probs: vec![1e-4, 1e-5],
            grid_v: 10,
            grid_s: 6,
            allowed_mu: vec![1, 2, 3],
            allowed_sigma: vec![1, 2],
            taus: vec![0.9, 0.99],
            bs: vec![0.0, 1.0, 2.0],
            score_repeats: 10,
            split_frac: 0.8,
            score_draws: 50,
            sim_blocks: 1000,
            sim_block_size: 1000,
            sim_weibull: vec![2.0, 8.0, 3.0],
            ref_datasets: 100,
            ref_size: 100_000,
            block_len_secs: 600.0,
        }
    }
}

impl RunConfig {
    /// Reference-scale iteration counts.
    pub fn apply_paper_scale(&mut self) {
        self.burn_in = 1000;
        self.m_l = 10_000;
        self.m_w = 1000;
        self.n_w = 100;
        self.n_l = 100;
    }

    /// Merge a flat `key = value` file into the config. Unknown keys are
    /// rejected so typos surface instead of silently using defaults.
    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        for (pos, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Ingest {
                line: pos + 1,
                msg: format!("expected key=value, got '{line}'"),
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Ingest {
                    line: pos + 1,
                    msg: e.to_string(),
                })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| {
                Error::invalid_argument(format!("cannot parse '{value}' for key '{key}'"))
            })
        }
        fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
            value
                .split(',')
                .map(|part| parse(key, part.trim()))
                .collect()
        }
        match key {
            "seed" => self.seed = parse(key, value)?,
            "burn_in" => self.burn_in = parse(key, value)?,
            "m_l" => self.m_l = parse(key, value)?,
            "m_w" => self.m_w = parse(key, value)?,
            "n_w" => self.n_w = parse(key, value)?,
            "n_l" => self.n_l = parse(key, value)?,
            "k_max" => self.k_max = parse(key, value)?,
            "t_years" => self.t_years = parse_list(key, value)?,
            "sim_probs" => self.sim_probs = parse_list(key, value)?,
            "grid_v" => self.grid_v = parse(key, value)?,
            "grid_s" => self.grid_s = parse(key, value)?,
            "allowed_mu" => self.allowed_mu = parse_list(key, value)?,
            "allowed_sigma" => self.allowed_sigma = parse_list(key, value)?,
            "taus" => self.taus = parse_list(key, value)?,
            "bs" => self.bs = parse_list(key, value)?,
            "score_repeats" => self.score_repeats = parse(key, value)?,
            "split_frac" => self.split_frac = parse(key, value)?,
            "score_draws" => self.score_draws = parse(key, value)?,
            "sim_blocks" => self.sim_blocks = parse(key, value)?,
            "sim_block_size" => self.sim_block_size = parse(key, value)?,
            "sim_weibull" => self.sim_weibull = parse_list(key, value)?,
            "ref_datasets" => self.ref_datasets = parse(key, value)?,
            "ref_size" => self.ref_size = parse(key, value)?,
            "block_len_secs" => self.block_len_secs = parse(key, value)?,
            other => {
                return Err(Error::invalid_argument(format!(
                    "unknown config key '{other}'"
                )))
            }
        }
        Ok(())
    }

    /// Canonical text form: sorted keys, one per line. The fingerprint
    /// hashes this.
    pub fn canonical(&self) -> String {
        let join = |xs: &[f64]| {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let join_u8 = |xs: &[u8]| {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut map: BTreeMap<&str, String> = BTreeMap::new();
        map.insert("seed", self.seed.to_string());
        map.insert("burn_in", self.burn_in.to_string());
        map.insert("m_l", self.m_l.to_string());
        map.insert("m_w", self.m_w.to_string());
        map.insert("n_w", self.n_w.to_string());
        map.insert("n_l", self.n_l.to_string());
        map.insert("k_max", self.k_max.to_string());
        map.insert("t_years", join(&self.t_years));
        map.insert("sim_probs", join(&self.sim_probs));
        map.insert("grid_v", self.grid_v.to_string());
        map.insert("grid_s", self.grid_s.to_string());
        map.insert("allowed_mu", join_u8(&self.allowed_mu));
        map.insert("allowed_sigma", join_u8(&self.allowed_sigma));
        map.insert("taus", join(&self.taus));
        map.insert("bs", join(&self.bs));
        map.insert("score_repeats", self.score_repeats.to_string());
        map.insert("split_frac", self.split_frac.to_string());
        map.insert("score_draws", self.score_draws.to_string());
        map.insert("sim_blocks", self.sim_blocks.to_string());
        map.insert("sim_block_size", self.sim_block_size.to_string());
        map.insert("sim_weibull", join(&self.sim_weibull));
        map.insert("ref_datasets", self.ref_datasets.to_string());
        map.insert("ref_size", self.ref_size.to_string());
        map.insert("block_len_secs", self.block_len_secs.to_string());
        let mut out = String::new();
        for (k, v) in map {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Short hash identifying the configuration in result files.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Metadata block embedded in every output file.
    pub fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ("config_hash".into(), self.fingerprint()),
            ("seed".into(), self.seed.to_string()),
            ("burn_in".into(), self.burn_in.to_string()),
            ("m_l".into(), self.m_l.to_string()),
            ("m_w".into(), self.m_w.to_string()),
            ("n_w".into(), self.n_w.to_string()),
            ("n_l".into(), self.n_l.to_string()),
        ]
    }
}
