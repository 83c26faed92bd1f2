//! Scenario presets, configuration files and swept parameters.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context};
use rsma_core::model::db_to_linear;
use rsma_core::NetworkConfig;
use serde::{Deserialize, Serialize};

/// Named parameter sets of the evaluation section.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Two cells, three users each, one RIS per cell.
    Scenario1,
    /// One cell with one RIS.
    Scenario2,
}

impl Scenario {
    pub fn config(self) -> NetworkConfig {
        match self {
            Self::Scenario1 => NetworkConfig::scenario1(),
            Self::Scenario2 => NetworkConfig::scenario2(),
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "s1" | "scenario1" => Ok(Self::Scenario1),
            "2" | "s2" | "scenario2" => Ok(Self::Scenario2),
            _ => Err(format!("unknown scenario `{s}` (expected scenario1 or scenario2)")),
        }
    }
}

/// Reads and validates a JSON network configuration.
pub fn load_config(path: &Path) -> anyhow::Result<NetworkConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: NetworkConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    /// Power budget in dB relative to the noise floor.
    #[serde(rename = "P_dB")]
    PowerDb,
    /// Block length.
    #[serde(rename = "n")]
    Blocklength,
    /// Total error probability, split evenly between common and private.
    #[serde(rename = "eps")]
    Eps,
    /// Users per cell.
    #[serde(rename = "K")]
    Users,
    /// Receive antennas.
    #[serde(rename = "N_u")]
    UserAntennas,
    /// Static power per user.
    #[serde(rename = "p_c")]
    CircuitPower,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::PowerDb => "P_dB",
            Self::Blocklength => "n",
            Self::Eps => "eps",
            Self::Users => "K",
            Self::UserAntennas => "N_u",
            Self::CircuitPower => "p_c",
        }
    }

    /// Returns `cfg` with the parameter set to `v`.
    pub fn apply(self, cfg: &NetworkConfig, v: f64) -> anyhow::Result<NetworkConfig> {
        let count = |what: &str| -> anyhow::Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                bail!("{what} must be a positive integer, got {v}")
            }
        };
        let mut c = cfg.clone();
        match self {
            Self::PowerDb => c.power = db_to_linear(v),
            Self::Blocklength => c.blocklength = count("n")? as u64,
            Self::Eps => c = c.with_total_eps(v),
            Self::Users => {
                c.users_per_cell = count("K")?;
                // Per-user weights no longer match the new shape.
                c.alpha = None;
                c.lambda = None;
            }
            Self::UserAntennas => c.user_antennas = count("N_u")?,
            Self::CircuitPower => c.p_c = v,
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            Self::PowerDb,
            Self::Blocklength,
            Self::Eps,
            Self::Users,
            Self::UserAntennas,
            Self::CircuitPower,
        ]
        .into_iter()
        .find(|p| p.name().eq_ignore_ascii_case(s))
        .ok_or_else(|| format!("unknown sweep parameter `{s}` (expected P_dB, n, eps, K, N_u or p_c)"))
    }
}
