//! Simulation configuration: JSON-loadable, CLI-overridable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::precode::Precoder;

/// One simulation campaign. Unknown JSON keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Transmit antennas.
    pub nt: usize,
    /// Single-antenna users.
    pub k: usize,
    /// Constellation name: `qpsk`, `8psk`, `16psk`, `16qam`, `64qam`, ...
    pub modulation: String,
    /// Transmit SNR grid in dB; `rho = 1/sigma^2` under unit transmit power.
    pub snr_db: Vec<f64>,
    /// Symbol frames per SNR point (one fresh channel per frame).
    pub trials: u64,
    /// Precoders to run, by registry name.
    pub precoders: Vec<String>,
    /// Master seed; a fixed seed makes every output column except wall
    /// time bitwise reproducible.
    pub seed: u64,
    /// Convergence threshold for the QAM alternating optimization.
    pub epsilon0: f64,
    /// Output CSV path; stdout when absent.
    pub out: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            nt: 8,
            k: 2,
            modulation: "qpsk".to_string(),
            snr_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            trials: 10_000,
            precoders: vec![
                "zf-1bit".to_string(),
                "ci-1bit".to_string(),
                "opsu".to_string(),
                "pbb".to_string(),
            ],
            seed: 1,
            epsilon0: 1e-3,
            out: None,
        }
    }
}

impl SimConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: SimConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    /// Checks the cross-field invariants and that names resolve.
    pub fn validate(&self) -> Result<()> {
        if self.nt == 0 || self.k == 0 {
            return Err(Error::Config("nt and k must be positive".into()));
        }
        if self.k > self.nt {
            return Err(Error::Config(format!(
                "k = {} exceeds nt = {}",
                self.k, self.nt
            )));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("snr_db must be a non-empty finite grid".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if !(self.epsilon0 > 0.0) {
            return Err(Error::Config("epsilon0 must be positive".into()));
        }
        self.constellation()?;
        self.precoder_list()?;
        Ok(())
    }

    pub fn constellation(&self) -> Result<Constellation> {
        Constellation::parse(&self.modulation)
    }

    pub fn precoder_list(&self) -> Result<Vec<Precoder>> {
        if self.precoders.is_empty() {
            return Err(Error::Config("precoder list is empty".into()));
        }
        self.precoders.iter().map(|n| Precoder::parse(n)).collect()
    }

    /// `sigma^2 = 10^(-snr/10)` under unit transmit power.
    pub fn sigma2(snr_db: f64) -> f64 {
        10f64.powf(-snr_db / 10.0)
    }
}

/// Parses an SNR grid given as `start:step:stop` or a comma list.
pub fn parse_snr_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |s: &str| Error::Config(format!("cannot parse SNR grid `{s}`"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(spec));
        }
        let start: f64 = parts[0].parse().map_err(|_| bad(spec))?;
        let step: f64 = parts[1].parse().map_err(|_| bad(spec))?;
        let stop: f64 = parts[2].parse().map_err(|_| bad(spec))?;
        if !(step > 0.0) || stop < start {
            return Err(bad(spec));
        }
        let mut grid = Vec::new();
        let mut v = start;
        while v <= stop + 1e-9 {
            grid.push(v);
            v += step;
        }
        Ok(grid)
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad(spec)))
            .collect()
    }
}
