//! `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored; `chain` may repeat (one line per
//! simulated finite place). Relative paths resolve against the directory of
//! the file they appear in.

use crate::error::CliError;
use qlat_core::chains::ChainModel;
use qlat_core::{IntegralLattice, PeriodPoint};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub lattice: PathBuf,
    pub point: PathBuf,
    /// Second density fixture (the rank-6 unimodular lattice).
    pub rank6: PathBuf,
    pub chains: Vec<PathBuf>,
    pub d: u64,
    pub jmin: u64,
    pub jmax: u64,
    pub xs: Vec<u64>,
    pub kappa: f64,
    pub cusp_bound_constant: f64,
    pub h_omega: f64,
    pub aut: u64,
    pub p_trunc: u64,
    pub shellmax: usize,
    pub seed: u64,
    pub threads: usize,
    pub mc_samples: u64,
    pub equidist_m: Vec<i64>,
    /// Regression pins for the shipped fixtures (criteria 3, 6 and 10).
    pub pin_c3: Option<String>,
    pub pin_c6: Option<f64>,
    pub pin_c10: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let dir = PathBuf::from("fixtures");
        Self {
            lattice: dir.join("l5.lat"),
            point: dir.join("l5.point"),
            rank6: dir.join("u3.lat"),
            chains: vec![dir.join("chain_unit.model"), dir.join("chain_generic.model")],
            d: 1,
            jmin: 1,
            jmax: 60,
            xs: vec![64, 128, 256],
            kappa: 0.0,
            cusp_bound_constant: 1.0,
            h_omega: 1.0,
            aut: 1,
            p_trunc: qlat_core::green::DEFAULT_P_TRUNC,
            shellmax: qlat_core::green::DEFAULT_SHELLMAX,
            seed: 1,
            threads: 0,
            mc_samples: 10_000_000,
            equidist_m: (0..20).map(|i| 5000 + 25 * i).collect(),
            pin_c3: None,
            pin_c6: None,
            pin_c10: None,
        }
    }
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Config(format!("{key}: bad list entry {s:?}"))))
        .collect()
}

fn one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse {v:?}")))
}

impl ExperimentConfig {
    /// Reads a config file on top of the defaults.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir)
    }

    pub fn parse(text: &str, dir: &Path) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut chains = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "chain" {
                chains.push(dir.join(v));
                continue;
            }
            cfg.set(k, v, dir)?;
        }
        if !chains.is_empty() {
            cfg.chains = chains;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key; paths are joined to `dir` unless absolute.
    pub fn set(&mut self, key: &str, v: &str, dir: &Path) -> Result<(), CliError> {
        match key {
            "lattice" => self.lattice = dir.join(v),
            "point" => self.point = dir.join(v),
            "rank6" => self.rank6 = dir.join(v),
            "chains" => self.chains = v.split(',').map(|s| dir.join(s.trim())).collect(),
            "D" | "d" => self.d = one(key, v)?,
            "jmin" => self.jmin = one(key, v)?,
            "jmax" => self.jmax = one(key, v)?,
            "X" | "xs" => self.xs = list(key, v)?,
            "kappa" => self.kappa = one(key, v)?,
            "cusp_bound_constant" => self.cusp_bound_constant = one(key, v)?,
            "h_omega" => self.h_omega = one(key, v)?,
            "aut" => self.aut = one(key, v)?,
            "p_trunc" => self.p_trunc = one(key, v)?,
            "shellmax" => self.shellmax = one(key, v)?,
            "seed" => self.seed = one(key, v)?,
            "threads" => self.threads = one(key, v)?,
            "mc_samples" => self.mc_samples = one(key, v)?,
            "equidist_m" => self.equidist_m = list(key, v)?,
            "pin_c3" => self.pin_c3 = Some(v.to_string()),
            "pin_c6" => self.pin_c6 = Some(one(key, v)?),
            "pin_c10" => self.pin_c10 = Some(one(key, v)?),
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.d == 0 {
            return Err(CliError::Config("D must be at least 1".into()));
        }
        if self.aut == 0 {
            return Err(CliError::Config("aut must be positive".into()));
        }
        if self.shellmax == 0 {
            return Err(CliError::Config("shellmax must be positive".into()));
        }
        Ok(())
    }

    /// Canonical `key=value` listing; file-valued keys contribute their
    /// contents rather than their location.
    pub fn canonical(&self) -> String {
        let file = |p: &Path| std::fs::read_to_string(p).unwrap_or_else(|_| format!("<unreadable {}>", p.display()));
        let join = |v: Vec<String>| v.join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        kv("lattice", file(&self.lattice));
        kv("point", file(&self.point));
        kv("rank6", file(&self.rank6));
        kv("chains", join(self.chains.iter().map(|p| file(p)).collect()));
        kv("D", self.d.to_string());
        kv("jmin", self.jmin.to_string());
        kv("jmax", self.jmax.to_string());
        kv("X", join(self.xs.iter().map(u64::to_string).collect()));
        kv("kappa", format!("{:e}", self.kappa));
        kv("cusp_bound_constant", format!("{:e}", self.cusp_bound_constant));
        kv("h_omega", format!("{:e}", self.h_omega));
        kv("aut", self.aut.to_string());
        kv("p_trunc", self.p_trunc.to_string());
        kv("shellmax", self.shellmax.to_string());
        kv("seed", self.seed.to_string());
        kv("mc_samples", self.mc_samples.to_string());
        kv("equidist_m", join(self.equidist_m.iter().map(i64::to_string).collect()));
        kv("pin_c3", self.pin_c3.clone().unwrap_or_default());
        kv("pin_c6", self.pin_c6.map(|x| format!("{x:e}")).unwrap_or_default());
        kv("pin_c10", self.pin_c10.map(|x| format!("{x:e}")).unwrap_or_default());
        out
    }

    /// SHA-256 of [`canonical`](Self::canonical). The thread count is left
    /// out: output does not depend on it.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn tag<T>(path: &Path, r: qlat_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Input {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_lattice(path: &Path) -> Result<IntegralLattice, CliError> {
    tag(path, IntegralLattice::parse(&read(path)?))
}

pub fn load_point(lat: &IntegralLattice, path: &Path) -> Result<PeriodPoint, CliError> {
    tag(path, PeriodPoint::parse(lat, &read(path)?))
}

pub fn load_chain(path: &Path) -> Result<ChainModel, CliError> {
    tag(path, ChainModel::parse(&read(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_repeated_chains() {
        let cfg = ExperimentConfig::parse(
            "# demo\nD = 2\nX = 8, 16\nchain = a.model\nchain = b.model\nkappa=0.5\n",
            Path::new("/tmp/x"),
        )
        .unwrap();
        assert_eq!(cfg.d, 2);
        assert_eq!(cfg.xs, vec![8, 16]);
        assert_eq!(cfg.chains, vec![PathBuf::from("/tmp/x/a.model"), PathBuf::from("/tmp/x/b.model")]);
        assert_eq!(cfg.kappa, 0.5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("D = 0\n", Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("colour = red\n", Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("just words\n", Path::new(".")).is_err());
    }

    #[test]
    fn hash_ignores_threads() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { threads: 7, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig { seed: 2, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }
}
